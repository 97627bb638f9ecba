use std::process::ExitCode;

fn main() -> ExitCode {
    rgg_core::cli::run(std::env::args_os())
}
