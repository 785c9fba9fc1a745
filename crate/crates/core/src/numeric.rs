//! One-dimensional root finding and maximization.

/// Inverse golden ratio, `(sqrt 5 - 1) / 2`.
pub const INV_PHI: f64 = 0.618_033_988_749_894_9;

/// Bisection on `[lo, hi]` for a function whose values at the ends have
/// opposite signs. Stops once the bracket is narrower than `tol` or stops
/// shrinking in floating point.
pub fn bisect<F>(mut lo: f64, mut hi: f64, tol: f64, mut f: F) -> Option<f64>
where
    F: FnMut(f64) -> f64,
{
    let mut f_lo = f(lo);
    let f_hi = f(hi);
    if f_lo == 0.0 {
        return Some(lo);
    }
    if f_hi == 0.0 {
        return Some(hi);
    }
    if f_lo.signum() == f_hi.signum() || f_lo.is_nan() || f_hi.is_nan() {
        return None;
    }
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let f_mid = f(mid);
        if f_mid == 0.0 {
            return Some(mid);
        }
        if f_mid.signum() == f_lo.signum() {
            lo = mid;
            f_lo = f_mid;
        } else {
            hi = mid;
        }
    }
    Some(0.5 * (lo + hi))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GoldenResult {
    pub x: f64,
    pub value: f64,
    pub iterations: usize,
    pub width: f64,
}

/// Golden-section search for a maximum of `f` on `[lo, hi]`.
///
/// Runs until the bracket is narrower than `tol` or `max_iter` steps have
/// been taken. Each step shrinks the bracket by [`INV_PHI`].
pub fn golden_section_max<F>(
    mut lo: f64,
    mut hi: f64,
    tol: f64,
    max_iter: usize,
    mut f: F,
) -> GoldenResult
where
    F: FnMut(f64) -> f64,
{
    let mut x1 = hi - INV_PHI * (hi - lo);
    let mut x2 = lo + INV_PHI * (hi - lo);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    let mut iterations = 0;
    while hi - lo > tol && iterations < max_iter {
        if f1 >= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - INV_PHI * (hi - lo);
            f1 = f(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + INV_PHI * (hi - lo);
            f2 = f(x2);
        }
        iterations += 1;
    }
    let (x, value) = if f1 >= f2 { (x1, f1) } else { (x2, f2) };
    GoldenResult {
        x,
        value,
        iterations,
        width: hi - lo,
    }
}

/// Number of golden-section steps needed to shrink a bracket of `width`
/// below `tol`.
pub fn golden_iterations_for(width: f64, tol: f64) -> usize {
    ((tol / width).ln() / INV_PHI.ln()).ceil().max(0.0) as usize
}

/// Sharpens a maximizer `x` of a smooth function by bisecting its derivative
/// `df` in a small window around `x`. Returns `x` unchanged if the window
/// does not straddle a sign change from `+` to `-`.
pub fn polish_maximizer<D>(x: f64, lo_bound: f64, hi_bound: f64, mut df: D) -> f64
where
    D: FnMut(f64) -> f64,
{
    let mut half = 1e-7;
    while half <= 1e-4 {
        let lo = (x - half).max(lo_bound);
        let hi = (x + half).min(hi_bound);
        if lo < hi {
            let (d_lo, d_hi) = (df(lo), df(hi));
            if d_lo > 0.0 && d_hi < 0.0 {
                if let Some(root) = bisect(lo, hi, 0.0, &mut df) {
                    return root;
                }
            }
        }
        half *= 10.0;
    }
    x
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bisect_finds_sqrt_two() {
        let r = bisect(0.0, 2.0, 1e-14, |x| x * x - 2.0).unwrap();
        assert!((r - 2f64.sqrt()).abs() < 1e-14);
    }

    #[test]
    fn bisect_requires_sign_change() {
        assert!(bisect(0.0, 1.0, 1e-12, |x| x + 1.0).is_none());
    }

    #[test]
    fn golden_reaches_width_within_eighty_steps() {
        let r = golden_section_max(0.0, 1.0, 1e-12, 80, |x| -(x - 0.3).powi(2));
        assert!(r.width < 1e-12);
        assert!(r.iterations <= 80);
        assert_eq!(r.iterations, golden_iterations_for(1.0, 1e-12));
        assert!((r.x - 0.3).abs() < 1e-7);
    }

    #[test]
    fn golden_shrinks_by_constant_ratio() {
        let mut widths = Vec::new();
        for n in 1..10 {
            widths.push(golden_section_max(0.0, 1.0, 0.0, n, |x| x.sin()).width);
        }
        for w in widths.windows(2) {
            assert!((w[1] / w[0] - INV_PHI).abs() < 1e-9);
        }
    }

    #[test]
    fn polish_improves_flat_maximum() {
        let f = |x: f64| -(x - 0.4).powi(4);
        let rough = golden_section_max(0.0, 1.0, 1e-12, 100, f).x;
        let fine = polish_maximizer(rough, 0.0, 1.0, |x| -4.0 * (x - 0.4).powi(3));
        assert!((fine - 0.4).abs() <= (rough - 0.4).abs());
        assert!((fine - 0.4).abs() < 1e-12);
    }
}
