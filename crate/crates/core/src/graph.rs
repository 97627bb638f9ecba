//! Edge count of the random geometric graph restricted to edges whose
//! midpoint lies in the unit ball, plus its difference operators.
//!
//! Both conditions of the kernel are closed and evaluated on squared norms:
//! `|x - y|² <= δ²` and `|x + y - 2c|² <= 4` for a test ball centered at `c`.

use std::collections::HashMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::sampling::{ModelParams, PointConfiguration, Window};

pub const DEFAULT_MAX_NEIGHBOR_CELLS: usize = 59_049; // 3^10
pub const DEFAULT_MIN_GRID_POINTS: usize = 64;
/// Cost of one cell lookup relative to one kernel evaluation.
const LOOKUP_COST: f64 = 8.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Backend {
    BruteForce,
    CellGrid,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BackendChoice {
    #[default]
    Auto,
    BruteForce,
    CellGrid,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct EdgeCountResult {
    pub count: u64,
    pub pairs_examined: u64,
    pub backend: Backend,
}

#[inline]
fn kernel_raw(x: &[f64], y: &[f64], delta_sq: f64, center: &[f64]) -> bool {
    let mut dist_sq = 0.0;
    let mut mid_sq = 0.0;
    for ((a, b), c) in x.iter().zip(y).zip(center) {
        let diff = a - b;
        dist_sq += diff * diff;
        let sum = a + b - 2.0 * c;
        mid_sq += sum * sum;
    }
    dist_sq <= delta_sq && mid_sq <= 4.0
}

/// `h(x, y) = 1{|x - y| <= δ, |(x + y)/2| <= 1}`.
pub fn kernel(x: &[f64], y: &[f64], params: &ModelParams) -> Result<bool> {
    let d = params.d();
    for v in [x, y] {
        if v.len() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                actual: v.len(),
            });
        }
        if v.iter().any(|c| !c.is_finite()) {
            return Err(invalid("point", "coordinates must be finite"));
        }
    }
    let origin = vec![0.0; d];
    Ok(kernel_raw(x, y, params.delta() * params.delta(), &origin))
}

/// Configurable edge counter. The default counts against the unit ball at
/// the origin and picks the backend automatically.
#[derive(Debug, Clone)]
pub struct EdgeCounter {
    delta: f64,
    center: Vec<f64>,
    backend: BackendChoice,
    max_neighbor_cells: usize,
    min_grid_points: usize,
}

impl EdgeCounter {
    pub fn new(params: &ModelParams) -> Self {
        EdgeCounter {
            delta: params.delta(),
            center: vec![0.0; params.d()],
            backend: BackendChoice::Auto,
            max_neighbor_cells: DEFAULT_MAX_NEIGHBOR_CELLS,
            min_grid_points: DEFAULT_MIN_GRID_POINTS,
        }
    }

    pub fn backend(mut self, backend: BackendChoice) -> Self {
        self.backend = backend;
        self
    }

    /// Moves the midpoint test ball to `B(center, 1)`.
    pub fn center(mut self, center: Vec<f64>) -> Self {
        self.center = center;
        self
    }

    pub fn max_neighbor_cells(mut self, cap: usize) -> Self {
        self.max_neighbor_cells = cap;
        self
    }

    /// Rough cost model: brute force examines `n²/2` pairs; the grid pays a
    /// hash lookup per occupied cell and forward offset, plus the pairs in
    /// adjacent cells.
    fn resolve(&self, config: &PointConfiguration) -> Backend {
        let (d, n) = (config.d(), config.len());
        match self.backend {
            BackendChoice::BruteForce => Backend::BruteForce,
            BackendChoice::CellGrid => Backend::CellGrid,
            BackendChoice::Auto => {
                let neighbors = 3usize.checked_pow(d as u32).unwrap_or(usize::MAX);
                if neighbors > self.max_neighbor_cells || n < self.min_grid_points {
                    return Backend::BruteForce;
                }
                let per_axis = (2.0 * config.window().radius / self.delta).ceil() + 1.0;
                let grid_cells = per_axis.powi(d as i32);
                let occupied = grid_cells.min(n as f64);
                let brute = 0.5 * (n as f64) * (n as f64);
                let grid = occupied * 0.5 * neighbors as f64 * LOOKUP_COST
                    + brute * (neighbors as f64 / grid_cells).min(1.0);
                if grid < brute {
                    Backend::CellGrid
                } else {
                    Backend::BruteForce
                }
            }
        }
    }

    pub fn count(&self, config: &PointConfiguration) -> Result<EdgeCountResult> {
        if config.d() != self.center.len() {
            return Err(Error::DimensionMismatch {
                expected: self.center.len(),
                actual: config.d(),
            });
        }
        Ok(match self.resolve(config) {
            Backend::BruteForce => self.brute_force(config),
            Backend::CellGrid => self.cell_grid(config),
        })
    }

    fn brute_force(&self, config: &PointConfiguration) -> EdgeCountResult {
        let delta_sq = self.delta * self.delta;
        let n = config.len();
        let mut count = 0;
        for i in 0..n {
            let x = config.point(i);
            for j in (i + 1)..n {
                if kernel_raw(x, config.point(j), delta_sq, &self.center) {
                    count += 1;
                }
            }
        }
        EdgeCountResult {
            count,
            pairs_examined: (n as u64) * (n as u64).saturating_sub(1) / 2,
            backend: Backend::BruteForce,
        }
    }

    fn cell_grid(&self, config: &PointConfiguration) -> EdgeCountResult {
        let d = config.d();
        let n = config.len();
        let delta_sq = self.delta * self.delta;
        if n < 2 {
            return EdgeCountResult {
                count: 0,
                pairs_examined: 0,
                backend: Backend::CellGrid,
            };
        }
        let mut lo = vec![f64::INFINITY; d];
        for p in config.iter() {
            for (l, x) in lo.iter_mut().zip(p) {
                *l = l.min(*x);
            }
        }
        // Slightly oversized cells: a pair at distance exactly δ must never
        // land two cells apart through rounding.
        let side = self.delta * (1.0 + 1e-9);
        let mut cells: HashMap<Vec<i64>, Vec<u32>> = HashMap::new();
        for (i, p) in config.iter().enumerate() {
            let key: Vec<i64> = p
                .iter()
                .zip(&lo)
                .map(|(x, l)| ((x - l) / side).floor() as i64)
                .collect();
            cells.entry(key).or_default().push(i as u32);
        }
        let offsets = forward_offsets(d);
        let mut count = 0u64;
        let mut examined = 0u64;
        let mut neighbor = vec![0i64; d];
        for (key, members) in &cells {
            for (a, &i) in members.iter().enumerate() {
                let x = config.point(i as usize);
                for &j in &members[a + 1..] {
                    examined += 1;
                    if kernel_raw(x, config.point(j as usize), delta_sq, &self.center) {
                        count += 1;
                    }
                }
            }
            for off in &offsets {
                for ((nb, k), o) in neighbor.iter_mut().zip(key).zip(off) {
                    *nb = k + o;
                }
                let Some(others) = cells.get(&neighbor) else {
                    continue;
                };
                for &i in members {
                    let x = config.point(i as usize);
                    for &j in others {
                        examined += 1;
                        if kernel_raw(x, config.point(j as usize), delta_sq, &self.center) {
                            count += 1;
                        }
                    }
                }
            }
        }
        EdgeCountResult {
            count,
            pairs_examined: examined,
            backend: Backend::CellGrid,
        }
    }
}

/// Neighbor offsets in `{-1, 0, 1}^d` whose first nonzero entry is positive,
/// so each unordered pair of adjacent cells is visited once.
fn forward_offsets(d: usize) -> Vec<Vec<i64>> {
    let total = 3usize.pow(d as u32);
    let mut out = Vec::with_capacity(total / 2);
    for code in 0..total {
        let mut c = code;
        let off: Vec<i64> = (0..d)
            .map(|_| {
                let v = (c % 3) as i64 - 1;
                c /= 3;
                v
            })
            .collect();
        if off.iter().find(|&&v| v != 0).is_some_and(|&v| v > 0) {
            out.push(off);
        }
    }
    out
}

pub fn edge_count(config: &PointConfiguration, params: &ModelParams) -> Result<EdgeCountResult> {
    EdgeCounter::new(params).count(config)
}

fn count_with(config: &PointConfiguration, params: &ModelParams, extra: &[&[f64]]) -> Result<u64> {
    for p in extra {
        if p.len() != params.d() {
            return Err(Error::DimensionMismatch {
                expected: params.d(),
                actual: p.len(),
            });
        }
        if p.iter().any(|c| !c.is_finite()) {
            return Err(invalid("point", "coordinates must be finite"));
        }
    }
    Ok(edge_count(&config.with_points(extra), params)?.count)
}

/// `D_x E = E(η + δ_x) - E(η)`, evaluated from its definition.
pub fn first_difference(config: &PointConfiguration, x: &[f64], params: &ModelParams) -> Result<u64> {
    let with = count_with(config, params, &[x])?;
    let without = count_with(config, params, &[])?;
    Ok(with - without)
}

/// `Σ_{y ∈ η} h(x, y)`, the closed form of the first difference.
pub fn neighbor_count(config: &PointConfiguration, x: &[f64], params: &ModelParams) -> Result<u64> {
    let mut n = 0;
    for y in config.iter() {
        if kernel(x, y, params)? {
            n += 1;
        }
    }
    Ok(n)
}

/// `D²_{x1,x2} E` from four edge counts.
pub fn second_difference(
    config: &PointConfiguration,
    x1: &[f64],
    x2: &[f64],
    params: &ModelParams,
) -> Result<i64> {
    let both = count_with(config, params, &[x1, x2])? as i64;
    let one = count_with(config, params, &[x1])? as i64;
    let two = count_with(config, params, &[x2])? as i64;
    let none = count_with(config, params, &[])? as i64;
    Ok(both - one - two + none)
}

/// `D³_{x1,x2,x3} E` from eight edge counts.
pub fn third_difference(
    config: &PointConfiguration,
    x1: &[f64],
    x2: &[f64],
    x3: &[f64],
    params: &ModelParams,
) -> Result<i64> {
    let pts = [x1, x2, x3];
    let mut total = 0i64;
    for mask in 0u32..8 {
        let extra: Vec<&[f64]> = (0..3).filter(|b| mask & (1 << b) != 0).map(|b| pts[b]).collect();
        let sign = if (3 - mask.count_ones()) % 2 == 0 { 1 } else { -1 };
        total += sign * count_with(config, params, &extra)? as i64;
    }
    Ok(total)
}

/// Parses the plain-text point format: a header line `d n` followed by `n`
/// lines of `d` whitespace-separated coordinates. The window is the
/// origin-centered ball of radius `max(1, max norm)`.
pub fn read_configuration(text: &str) -> Result<PointConfiguration> {
    let mut lines = text
        .lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty());
    let (hline, header) = lines.next().ok_or(Error::Parse {
        line: 1,
        reason: "missing header".into(),
    })?;
    let fields: Vec<&str> = header.split_whitespace().collect();
    let parse_err = |line: usize, reason: String| Error::Parse { line: line + 1, reason };
    if fields.len() != 2 {
        return Err(parse_err(hline, format!("header must be `d n`, got `{header}`")));
    }
    let d: usize = fields[0].parse().map_err(|e| parse_err(hline, format!("bad d: {e}")))?;
    let n: usize = fields[1].parse().map_err(|e| parse_err(hline, format!("bad n: {e}")))?;
    if d == 0 {
        return Err(parse_err(hline, "d must be at least 1".into()));
    }
    let mut coords = Vec::with_capacity(n * d);
    for _ in 0..n {
        let (ln, line) = lines
            .next()
            .ok_or_else(|| parse_err(hline, format!("expected {n} points")))?;
        let row: Vec<f64> = line
            .split_whitespace()
            .map(|t| t.parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| parse_err(ln, format!("bad coordinate: {e}")))?;
        if row.len() != d {
            return Err(parse_err(ln, format!("expected {d} coordinates, got {}", row.len())));
        }
        if row.iter().any(|x| !x.is_finite()) {
            return Err(parse_err(ln, "coordinates must be finite".into()));
        }
        coords.push(row);
    }
    if let Some((ln, _)) = lines.next() {
        return Err(parse_err(ln, "trailing data after the last point".into()));
    }
    let max_norm = coords
        .iter()
        .map(|p| p.iter().map(|x| x * x).sum::<f64>().sqrt())
        .fold(0.0, f64::max);
    let window = Window::centered(d, (max_norm * (1.0 + 1e-12)).max(1.0));
    PointConfiguration::from_points(window, &coords)
}

/// Writes the plain-text point format with round-trip precision.
pub fn write_configuration(config: &PointConfiguration) -> String {
    let mut out = format!("{} {}\n", config.d(), config.len());
    for p in config.iter() {
        let row: Vec<String> = p.iter().map(|x| format!("{x:?}")).collect();
        let _ = writeln!(out, "{}", row.join(" "));
    }
    out
}
