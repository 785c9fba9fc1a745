//! Certification of the global maxima of the dimension objective.
//!
//! Maxima are located by a uniform scan, refined by golden-section search and
//! then sharpened by bisecting the analytic derivative: near a tangency the
//! objective is too flat for value comparisons alone to pin the location
//! below about `1e-8`.

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::entropy::{
    binary_entropy, gap_g, gap_g_derivative, objective_f, objective_f_derivative, objective_unchecked,
    pressure_unchecked, CarpetSpec, DerivedConstants,
};
use crate::error::{CarpetError, Result};
use crate::numeric::{golden_section_max, polish_maximizer};

pub const DEFAULT_VALUE_TOL: f64 = 1e-9;
pub const DEFAULT_SEPARATION_TOL: f64 = 1e-4;
pub const DEFAULT_GRID_POINTS: usize = 4096;

/// Width below which golden-section refinement stops.
pub const REFINE_WIDTH: f64 = 1e-12;
const REFINE_MAX_ITER: usize = 80;

/// `|g|` below which a point counts as a root of the gap function.
pub const GAP_ROOT_TOL: f64 = 1e-10;

/// Largest alphabet the simplex search accepts.
pub const SIMPLEX_MAX_SYMBOLS: usize = 8;
const SIMPLEX_LATTICE_CAP: u128 = 2_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Maximum {
    pub x: f64,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MaximizerReport {
    pub maxima: Vec<Maximum>,
    pub global_value: f64,
    pub value_tolerance: f64,
    pub separation_tolerance: f64,
    pub certified_count: usize,
    pub grid_points: usize,
}

impl MaximizerReport {
    /// True when the maximum is attained at two or more separated points.
    pub fn is_non_unique(&self) -> bool {
        self.certified_count >= 2
    }
}

/// Scans `f` on `n + 1` equispaced nodes of `[0, 1]` and refines every grid-local
/// maximum, endpoints included. Returns the refined candidates and the largest
/// grid value.
fn refined_local_maxima<F, D>(n: usize, f: F, df: D) -> (Vec<Maximum>, f64)
where
    F: Fn(f64) -> f64,
    D: Fn(f64) -> f64,
{
    let node = |i: usize| i as f64 / n as f64;
    let values: Vec<f64> = (0..=n).map(|i| f(node(i))).collect();
    let grid_max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut out = Vec::new();

    let refine = |lo: f64, hi: f64| {
        let g = golden_section_max(lo, hi, REFINE_WIDTH, REFINE_MAX_ITER, &f);
        let open_lo = if lo > 0.0 { lo } else { f64::MIN_POSITIVE };
        let open_hi = if hi < 1.0 { hi } else { 1.0 - f64::EPSILON };
        let x = polish_maximizer(g.x, open_lo, open_hi, &df);
        let value = f(x);
        // The polished point is a derivative root; value differences at this
        // scale are rounding noise.
        if value >= g.value - 1e-14 * g.value.abs().max(1.0) {
            Maximum { x, value }
        } else {
            Maximum {
                x: g.x,
                value: g.value,
            }
        }
    };

    if values[0] >= values[1] {
        out.push(Maximum {
            x: 0.0,
            value: values[0],
        });
        out.push(refine(0.0, node(1)));
    }
    for i in 1..n {
        if values[i] >= values[i - 1] && values[i] >= values[i + 1] {
            out.push(refine(node(i - 1), node(i + 1)));
        }
    }
    if values[n] >= values[n - 1] {
        out.push(refine(node(n - 1), 1.0));
        out.push(Maximum {
            x: 1.0,
            value: values[n],
        });
    }
    (out, grid_max)
}

/// Merges candidates closer than `sep_tol`, keeping the best of each group.
fn cluster(mut candidates: Vec<Maximum>, sep_tol: f64) -> Vec<Maximum> {
    candidates.sort_by(|a, b| a.x.total_cmp(&b.x));
    let mut clusters: Vec<Maximum> = Vec::new();
    let mut last_x = f64::NEG_INFINITY;
    for c in candidates {
        match clusters.last_mut() {
            Some(best) if c.x - last_x <= sep_tol => {
                if c.value > best.value {
                    *best = c;
                }
            }
            _ => clusters.push(c),
        }
        last_x = c.x;
    }
    clusters
}

/// Certifies the global maxima of the objective on `[0, 1]`.
pub fn global_maxima(
    spec: &CarpetSpec,
    value_tol: f64,
    sep_tol: f64,
    grid_points: usize,
) -> Result<MaximizerReport> {
    spec.validate()?;
    if !(value_tol > 0.0 && sep_tol > 0.0) {
        return Err(CarpetError::InvalidOptions(format!(
            "tolerances must be positive, got value_tol = {value_tol}, sep_tol = {sep_tol}"
        )));
    }
    if grid_points < 256 {
        return Err(CarpetError::InvalidOptions(format!(
            "grid_points must be at least 256, got {grid_points}"
        )));
    }
    let f = |x: f64| objective_unchecked(x, binary_entropy(x).unwrap_or(0.0), spec);
    let df = |x: f64| objective_f_derivative(x, spec).unwrap_or(f64::NAN);
    let (candidates, _) = refined_local_maxima(grid_points, f, df);
    let clusters = cluster(candidates, sep_tol);
    let global_value = clusters
        .iter()
        .map(|m| m.value)
        .fold(f64::NEG_INFINITY, f64::max);
    let maxima: Vec<Maximum> = clusters
        .into_iter()
        .filter(|m| m.value >= global_value - value_tol)
        .collect();
    Ok(MaximizerReport {
        certified_count: maxima.len(),
        maxima,
        global_value,
        value_tolerance: value_tol,
        separation_tolerance: sep_tol,
        grid_points,
    })
}

pub fn global_maxima_default(spec: &CarpetSpec) -> Result<MaximizerReport> {
    global_maxima(spec, DEFAULT_VALUE_TOL, DEFAULT_SEPARATION_TOL, DEFAULT_GRID_POINTS)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GapCertificate {
    /// Largest value of `g` over the grid and the refined local maxima.
    pub max_gap: f64,
    /// Refined points where `|g| <= GAP_ROOT_TOL`.
    pub roots: Vec<f64>,
    pub grid_points: usize,
    pub tolerance: f64,
    /// `max_gap <= tolerance` and at least two separated roots.
    pub passed: bool,
}

/// Checks `g <= 0` on `[0, 1]` and locates the points where `g` touches zero.
pub fn verify_gap_nonpositive(consts: &DerivedConstants, grid_points: usize) -> Result<GapCertificate> {
    if grid_points < 2 {
        return Err(CarpetError::InvalidOptions(format!(
            "grid_points must be at least 2, got {grid_points}"
        )));
    }
    gap_g(0.0, consts)?;
    gap_g(1.0, consts)?;
    let g = |x: f64| gap_g(x, consts).unwrap_or(f64::NAN);
    let dg = |x: f64| gap_g_derivative(x, consts).unwrap_or(f64::NAN);
    let (candidates, grid_max) = refined_local_maxima(grid_points - 1, g, dg);
    let refined = cluster(candidates, DEFAULT_SEPARATION_TOL);
    let max_gap = refined.iter().map(|m| m.value).fold(grid_max, f64::max);
    let roots: Vec<f64> = refined
        .iter()
        .filter(|m| m.value.abs() <= GAP_ROOT_TOL)
        .map(|m| m.x)
        .collect();
    Ok(GapCertificate {
        passed: max_gap <= GAP_ROOT_TOL && roots.len() >= 2,
        max_gap,
        roots,
        grid_points,
        tolerance: GAP_ROOT_TOL,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimplexResult {
    pub best_p: Vec<f64>,
    pub best_value: f64,
    pub lattice_points: u64,
    pub starts: usize,
}

fn binomial(n: u128, k: u128) -> u128 {
    let k = k.min(n - k);
    (0..k).fold(1u128, |acc, i| acc * (n - i) / (i + 1))
}

/// Visits every composition of `total` into `parts` nonnegative integers.
fn for_each_composition(total: usize, parts: usize, visit: &mut impl FnMut(&[usize])) {
    fn rec(buf: &mut Vec<usize>, remaining: usize, parts: usize, visit: &mut impl FnMut(&[usize])) {
        if buf.len() + 1 == parts {
            buf.push(remaining);
            visit(buf);
            buf.pop();
            return;
        }
        for k in 0..=remaining {
            buf.push(k);
            rec(buf, remaining - k, parts, visit);
            buf.pop();
        }
    }
    let mut buf = Vec::with_capacity(parts);
    rec(&mut buf, total, parts, visit);
}

/// Uniform random composition by stars and bars.
fn random_composition(total: usize, parts: usize, rng: &mut ChaCha8Rng) -> Vec<usize> {
    let slots = total + parts - 1;
    let mut bars = sample(rng, slots, parts - 1).into_vec();
    bars.sort_unstable();
    // Stars between consecutive bars.
    let mut sizes = Vec::with_capacity(parts);
    let mut start = 0usize;
    for &b in &bars {
        sizes.push(b - start);
        start = b + 1;
    }
    sizes.push(slots - start);
    sizes
}

/// Pairwise mass-transfer ascent with halving step, started from `p`.
fn coordinate_ascent(p: &mut [f64], spec: &CarpetSpec, initial_step: f64) -> f64 {
    let n = p.len();
    let mut value = pressure_unchecked(p, spec);
    let mut step = initial_step;
    while step > 1e-13 {
        let mut improved = false;
        for i in 0..n {
            for j in 0..n {
                if i == j || p[j] <= 0.0 {
                    continue;
                }
                let amount = step.min(p[j]);
                let (old_i, old_j) = (p[i], p[j]);
                p[i] += amount;
                p[j] -= amount;
                let trial = pressure_unchecked(p, spec);
                if trial > value {
                    value = trial;
                    improved = true;
                } else {
                    p[i] = old_i;
                    p[j] = old_j;
                }
            }
        }
        if !improved {
            step *= 0.5;
        }
    }
    value
}

/// Maximizes the pressure functional over all Bernoulli weight vectors.
///
/// The simplex lattice with denominator `resolution` is scanned exhaustively
/// (or by a seeded uniform sample once it exceeds two million points), then
/// the `restarts` best lattice points and `restarts` seeded random points are
/// refined by pairwise coordinate ascent.
pub fn simplex_bruteforce(
    spec: &CarpetSpec,
    resolution: usize,
    restarts: usize,
    seed: u64,
) -> Result<SimplexResult> {
    spec.validate()?;
    let n = spec.alphabet_size();
    if n > SIMPLEX_MAX_SYMBOLS {
        return Err(CarpetError::InvalidOptions(format!(
            "simplex search supports at most {SIMPLEX_MAX_SYMBOLS} symbols, spec has {n}"
        )));
    }
    if resolution < 10 {
        return Err(CarpetError::InvalidOptions(format!(
            "resolution must be at least 10, got {resolution}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let keep = restarts.max(1);
    let scale = resolution as f64;
    let to_p = |k: &[usize]| k.iter().map(|&c| c as f64 / scale).collect::<Vec<f64>>();

    // Top `keep` lattice points, ordered by value then by visit order.
    let mut top: Vec<(f64, u64, Vec<usize>)> = Vec::with_capacity(keep + 1);
    let mut visited = 0u64;
    let mut consider = |k: &[usize]| {
        let value = pressure_unchecked(&to_p(k), spec);
        let idx = visited;
        visited += 1;
        if top.len() < keep || value > top[top.len() - 1].0 {
            let pos = top.partition_point(|(v, _, _)| *v >= value);
            top.insert(pos, (value, idx, k.to_vec()));
            top.truncate(keep);
        }
    };
    let total = binomial((resolution + n - 1) as u128, (n - 1) as u128);
    if total <= SIMPLEX_LATTICE_CAP {
        for_each_composition(resolution, n, &mut consider);
    } else {
        for _ in 0..SIMPLEX_LATTICE_CAP {
            let k = random_composition(resolution, n, &mut rng);
            consider(&k);
        }
    }

    let mut starts: Vec<Vec<f64>> = top.iter().map(|(_, _, k)| to_p(k)).collect();
    for _ in 0..keep {
        let raw: Vec<f64> = (0..n).map(|_| -(1.0 - rng.gen::<f64>()).ln()).collect();
        let s: f64 = raw.iter().sum();
        starts.push(raw.into_iter().map(|r| r / s).collect());
    }

    let mut best: Option<(f64, Vec<f64>)> = None;
    for mut p in starts.iter().cloned() {
        let value = coordinate_ascent(&mut p, spec, 1.0 / scale);
        if best.as_ref().is_none_or(|(v, _)| value > *v) {
            best = Some((value, p));
        }
    }
    let (_, mut best_p) = best.expect("at least one start");
    let s: f64 = best_p.iter().sum();
    best_p.iter_mut().for_each(|c| *c /= s);
    let best_value = pressure_unchecked(&best_p, spec);
    Ok(SimplexResult {
        best_p,
        best_value,
        lattice_points: visited,
        starts: starts.len(),
    })
}

/// Samples `(x, f(x))` on `points` equispaced nodes of `[0, 1]`.
pub fn sample_objective(spec: &CarpetSpec, points: usize) -> Result<Vec<(f64, f64)>> {
    if points < 2 {
        return Err(CarpetError::InvalidOptions(format!(
            "need at least 2 sample points, got {points}"
        )));
    }
    (0..points)
        .map(|i| {
            let x = i as f64 / (points - 1) as f64;
            objective_f(x, spec).map(|v| (x, v))
        })
        .collect()
}
