//! The planar iterated function system of a carpet, its raster image,
//! chaos-game sampling and a box-counting dimension estimate.

use std::fmt::Write as _;

use rand::distributions::{Distribution, WeightedIndex};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::entropy::{check_probability_vector, CarpetSpec};
use crate::error::{CarpetError, Result};
use crate::maximizer::global_maxima_default;

/// Slack used by the containment and disjointness checks.
pub const GEOMETRY_SLACK: f64 = 1e-15;

/// Default limit on the number of rectangles [`rasterize`] may enumerate.
pub const DEFAULT_RECTANGLE_CAP: u64 = 10_000_000;

pub type Point = [f64; 2];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Family {
    A,
    B,
}

/// `(x, y) -> (contract_x x + translate_x, contract_y y + translate_y)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AffineMap {
    pub contract_x: f64,
    pub contract_y: f64,
    pub translate_x: f64,
    pub translate_y: f64,
    pub family: Family,
    /// 1-based index within the family.
    pub index: u64,
}

impl AffineMap {
    #[inline]
    pub fn apply(&self, p: Point) -> Point {
        [
            self.contract_x * p[0] + self.translate_x,
            self.contract_y * p[1] + self.translate_y,
        ]
    }

    pub fn fixed_point(&self) -> Point {
        [
            self.translate_x / (1.0 - self.contract_x),
            self.translate_y / (1.0 - self.contract_y),
        ]
    }

    /// Image of the unit square as `(x0, y0, x1, y1)`.
    pub fn image_rect(&self) -> [f64; 4] {
        [
            self.translate_x,
            self.translate_y,
            self.translate_x + self.contract_x,
            self.translate_y + self.contract_y,
        ]
    }

    pub fn is_strict_contraction(&self) -> bool {
        self.contract_x > 0.0 && self.contract_x < 1.0 && self.contract_y > 0.0 && self.contract_y < 1.0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IfsSpec {
    pub maps: Vec<AffineMap>,
    /// The carpet parameters the maps were built from, if any.
    pub source: Option<CarpetSpec>,
}

impl IfsSpec {
    /// Wraps a list of maps after checking that every image of the unit
    /// square stays inside it and that the images have disjoint interiors.
    pub fn from_maps(maps: Vec<AffineMap>) -> Result<Self> {
        if maps.is_empty() {
            return Err(CarpetError::Geometry("an IFS needs at least one map".into()));
        }
        for m in &maps {
            if !m.is_strict_contraction() {
                return Err(CarpetError::Geometry(format!(
                    "map {:?}{} is not a strict contraction",
                    m.family, m.index
                )));
            }
            let [x0, y0, x1, y1] = m.image_rect();
            if x0 < -GEOMETRY_SLACK || y0 < -GEOMETRY_SLACK || x1 > 1.0 + GEOMETRY_SLACK || y1 > 1.0 + GEOMETRY_SLACK {
                return Err(CarpetError::Geometry(format!(
                    "image of map {:?}{} is [{x0}, {x1}] x [{y0}, {y1}], outside the unit square",
                    m.family, m.index
                )));
            }
        }
        check_disjoint(&maps)?;
        Ok(Self { maps, source: None })
    }

    pub fn len(&self) -> usize {
        self.maps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.maps.is_empty()
    }
}

// Sweep over rectangles sorted by left edge.
fn check_disjoint(maps: &[AffineMap]) -> Result<()> {
    let mut rects: Vec<(usize, [f64; 4])> = maps.iter().map(|m| m.image_rect()).enumerate().collect();
    rects.sort_by(|a, b| a.1[0].total_cmp(&b.1[0]));
    for (i, (ia, a)) in rects.iter().enumerate() {
        for (ib, b) in &rects[i + 1..] {
            if b[0] >= a[2] - GEOMETRY_SLACK {
                break;
            }
            let y_overlap = b[1] < a[3] - GEOMETRY_SLACK && a[1] < b[3] - GEOMETRY_SLACK;
            if y_overlap {
                let (ma, mb) = (&maps[*ia], &maps[*ib]);
                return Err(CarpetError::Geometry(format!(
                    "images of maps {:?}{} and {:?}{} overlap",
                    ma.family, ma.index, mb.family, mb.index
                )));
            }
        }
    }
    Ok(())
}

/// Builds the carpet IFS: one column of width `e^{-lambda}` per map, column
/// `k` starting at `2(k-1) e^{-lambda}`, the `a`-maps first. Family `a` sits
/// on the bottom edge with height `e^{-psi_a}`, family `b` on the top edge
/// with height `e^{-psi_b}`.
pub fn build_ifs(spec: &CarpetSpec) -> Result<IfsSpec> {
    spec.validate()?;
    let width = (-spec.lambda).exp();
    let height_a = (-spec.psi_a).exp();
    let height_b = (-spec.psi_b).exp();
    let columns = spec.ell_a + spec.ell_b;
    let extent = (2 * columns - 1) as f64 * width;
    if extent > 1.0 + GEOMETRY_SLACK {
        return Err(CarpetError::Geometry(format!(
            "{columns} columns need horizontal extent {extent} > 1"
        )));
    }
    let mut maps = Vec::with_capacity(columns as usize);
    for k in 1..=columns {
        let (family, index, contract_y, translate_y) = if k <= spec.ell_a {
            (Family::A, k, height_a, 0.0)
        } else {
            (Family::B, k - spec.ell_a, height_b, 1.0 - height_b)
        };
        maps.push(AffineMap {
            contract_x: width,
            contract_y,
            translate_x: 2.0 * (k - 1) as f64 * width,
            translate_y,
            family,
            index,
        });
    }
    let mut ifs = IfsSpec::from_maps(maps)?;
    ifs.source = Some(*spec);
    Ok(ifs)
}

/// Hausdorff dimension of the carpet: the global maximum of the dimension
/// objective over Bernoulli measures.
pub fn hausdorff_dimension(spec: &CarpetSpec) -> Result<f64> {
    Ok(global_maxima_default(spec)?.global_value)
}

/// Binary occupancy image; row 0 is the top edge (`y = 1`).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Raster {
    pub width: usize,
    pub height: usize,
    pub pixels: Vec<bool>,
    pub rectangles: u64,
}

impl Raster {
    pub fn get(&self, col: usize, row: usize) -> bool {
        self.pixels[row * self.width + col]
    }

    pub fn occupied(&self) -> usize {
        self.pixels.iter().filter(|&&p| p).count()
    }

    /// Plain PGM (`P2`): occupied pixels black, empty pixels white.
    pub fn to_pgm(&self) -> String {
        let mut out = String::with_capacity(self.pixels.len() * 4 + 32);
        let _ = writeln!(out, "P2\n{} {}\n255", self.width, self.height);
        for row in self.pixels.chunks(self.width) {
            let line: Vec<&str> = row.iter().map(|&p| if p { "0" } else { "255" }).collect();
            out.push_str(&line.join(" "));
            out.push('\n');
        }
        out
    }

    pub fn to_gray_image(&self) -> image::GrayImage {
        image::GrayImage::from_fn(self.width as u32, self.height as u32, |c, r| {
            image::Luma([if self.get(c as usize, r as usize) { 0 } else { 255 }])
        })
    }

    fn mark(&mut self, x0: f64, y0: f64, x1: f64, y1: f64) {
        let (c0, c1) = pixel_span(x0, x1, self.width);
        let (p0, p1) = pixel_span(y0, y1, self.height);
        for py in p0..=p1 {
            let row = self.height - 1 - py;
            let base = row * self.width;
            self.pixels[base + c0..=base + c1].fill(true);
        }
    }
}

// Pixels overlapped by [lo, hi]; at least one pixel wide.
fn pixel_span(lo: f64, hi: f64, n: usize) -> (usize, usize) {
    let last = n - 1;
    let start = ((lo * n as f64).floor().max(0.0) as usize).min(last);
    let end = ((hi * n as f64).ceil() as isize - 1).clamp(0, last as isize) as usize;
    (start, end.max(start))
}

/// Marks every pixel touched by the depth-`depth` images of the unit square.
pub fn rasterize(ifs: &IfsSpec, depth: u32, width_px: usize, height_px: usize) -> Result<Raster> {
    rasterize_with_cap(ifs, depth, width_px, height_px, DEFAULT_RECTANGLE_CAP)
}

pub fn rasterize_with_cap(
    ifs: &IfsSpec,
    depth: u32,
    width_px: usize,
    height_px: usize,
    cap: u64,
) -> Result<Raster> {
    if depth == 0 {
        return Err(CarpetError::InvalidOptions("depth must be at least 1".into()));
    }
    if width_px < 16 || height_px < 16 {
        return Err(CarpetError::InvalidOptions(format!(
            "raster must be at least 16x16, got {width_px}x{height_px}"
        )));
    }
    let needed = (ifs.len() as u128).checked_pow(depth).unwrap_or(u128::MAX);
    if needed > cap as u128 {
        return Err(CarpetError::ResourceLimit { needed, cap });
    }
    let mut raster = Raster {
        width: width_px,
        height: height_px,
        pixels: vec![false; width_px * height_px],
        rectangles: 0,
    };
    // Each entry is a composed map (cx, cy, tx, ty) and its word length.
    let mut stack: Vec<([f64; 4], u32)> = vec![([1.0, 1.0, 0.0, 0.0], 0)];
    while let Some(([cx, cy, tx, ty], level)) = stack.pop() {
        if level == depth {
            raster.mark(tx, ty, tx + cx, ty + cy);
            raster.rectangles += 1;
            continue;
        }
        for m in ifs.maps.iter().rev() {
            stack.push((
                [
                    cx * m.contract_x,
                    cy * m.contract_y,
                    cx * m.translate_x + tx,
                    cy * m.translate_y + ty,
                ],
                level + 1,
            ));
        }
    }
    Ok(raster)
}

/// Random iteration `p <- S_i(p)` with `i` drawn from `weights`.
///
/// Starts at the centre of the square, discards `burn_in` iterates and returns
/// the next `n_points`.
pub fn chaos_game(
    ifs: &IfsSpec,
    weights: &[f64],
    n_points: usize,
    burn_in: usize,
    seed: u64,
) -> Result<Vec<Point>> {
    if weights.len() != ifs.len() {
        return Err(CarpetError::DimensionMismatch {
            expected: ifs.len(),
            got: weights.len(),
        });
    }
    check_probability_vector(weights)?;
    if n_points == 0 {
        return Err(CarpetError::InvalidOptions("n_points must be at least 1".into()));
    }
    let dist = WeightedIndex::new(weights)
        .map_err(|e| CarpetError::Domain(format!("invalid weights: {e}")))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut p = [0.5, 0.5];
    for _ in 0..burn_in {
        p = ifs.maps[dist.sample(&mut rng)].apply(p);
    }
    let mut out = Vec::with_capacity(n_points);
    for _ in 0..n_points {
        let q = ifs.maps[dist.sample(&mut rng)].apply(p);
        p = [q[0].clamp(0.0, 1.0), q[1].clamp(0.0, 1.0)];
        out.push(p);
    }
    Ok(out)
}

/// Bernoulli weights giving row mass `x` to family `a`, spread uniformly
/// within each family.
pub fn uniform_conditional_weights(spec: &CarpetSpec, x: f64) -> Result<Vec<f64>> {
    if !(0.0..=1.0).contains(&x) {
        return Err(CarpetError::Domain(format!("row mass {x} lies outside [0, 1]")));
    }
    let (la, lb) = (spec.ell_a as usize, spec.ell_b as usize);
    let mut w = vec![x / la as f64; la];
    w.extend(std::iter::repeat_n((1.0 - x) / lb as f64, lb));
    Ok(w)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoxCountReport {
    /// Box sides `2^-k`, strictly decreasing.
    pub scales: Vec<f64>,
    pub counts: Vec<u64>,
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    pub n_points: usize,
}

/// Least-squares line `y = slope x + intercept` and its `R^2`.
pub fn linear_fit(xs: &[f64], ys: &[f64]) -> (f64, f64, f64) {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let r_squared = if syy == 0.0 { 1.0 } else { sxy * sxy / (sxx * syy) };
    (slope, intercept, r_squared)
}

fn interleave(x: u32, y: u32) -> u64 {
    fn spread(v: u32) -> u64 {
        let mut v = v as u64;
        v = (v | (v << 16)) & 0x0000_FFFF_0000_FFFF;
        v = (v | (v << 8)) & 0x00FF_00FF_00FF_00FF;
        v = (v | (v << 4)) & 0x0F0F_0F0F_0F0F_0F0F;
        v = (v | (v << 2)) & 0x3333_3333_3333_3333;
        v = (v | (v << 1)) & 0x5555_5555_5555_5555;
        v
    }
    spread(x) | (spread(y) << 1)
}

/// Counts occupied dyadic boxes of side `2^-k` for `k_min..=k_max` and fits
/// `log N` against `k log 2`.
pub fn box_count(points: &[Point], k_min: u32, k_max: u32) -> Result<BoxCountReport> {
    if points.len() < 1000 {
        return Err(CarpetError::InvalidOptions(format!(
            "box counting needs at least 1000 points, got {}",
            points.len()
        )));
    }
    if !(1 <= k_min && k_min < k_max && k_max <= 16) {
        return Err(CarpetError::InvalidOptions(format!(
            "need 1 <= k_min < k_max <= 16, got k_min = {k_min}, k_max = {k_max}"
        )));
    }
    if points.iter().all(|p| p == &points[0]) {
        return Err(CarpetError::DegenerateInput("all points are identical".into()));
    }
    let side = 1u64 << k_max;
    let cell = |v: f64| ((v.clamp(0.0, 1.0) * side as f64) as u64).min(side - 1) as u32;
    let mut codes: Vec<u64> = points.iter().map(|p| interleave(cell(p[0]), cell(p[1]))).collect();
    codes.sort_unstable();

    let mut scales = Vec::new();
    let mut counts = Vec::new();
    for k in k_min..=k_max {
        let shift = 2 * (k_max - k);
        let mut count = 0u64;
        let mut prev = None;
        for &c in &codes {
            let prefix = c >> shift;
            if prev != Some(prefix) {
                count += 1;
                prev = Some(prefix);
            }
        }
        scales.push((-(k as f64)).exp2());
        counts.push(count);
    }
    let xs: Vec<f64> = (k_min..=k_max).map(|k| k as f64 * std::f64::consts::LN_2).collect();
    let ys: Vec<f64> = counts.iter().map(|&c| (c as f64).ln()).collect();
    let (slope, intercept, r_squared) = linear_fit(&xs, &ys);
    Ok(BoxCountReport {
        scales,
        counts,
        slope,
        intercept,
        r_squared,
        n_points: points.len(),
    })
}
