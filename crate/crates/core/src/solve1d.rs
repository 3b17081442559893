//! One-dimensional bracketing primitives shared by the norm evaluators and
//! the constructions. Everything here is bisection or golden-section: the
//! functions involved may have kinks, so no derivative information is used.

/// Iteration cap for every bisection in the crate.
pub const MAX_BISECTION_ITERATIONS: usize = 200;

/// Smallest `x` in `[lo, hi]` with `pred(x)` true, for a predicate that is
/// false on a left segment and true on the complementary right segment.
///
/// `pred(hi)` must hold. Returns the right end of the final bracket, so the
/// result always satisfies the predicate.
pub fn bisect_threshold<P>(mut lo: f64, mut hi: f64, abs_tol: f64, mut pred: P) -> f64
where
    P: FnMut(f64) -> bool,
{
    if pred(lo) {
        return lo;
    }
    for _ in 0..MAX_BISECTION_ITERATIONS {
        if hi - lo <= abs_tol {
            break;
        }
        let mid = lo + 0.5 * (hi - lo);
        if mid <= lo || mid >= hi {
            break;
        }
        if pred(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    hi
}

/// Root of a continuous `f` with `f(lo) < 0 <= f(hi)` (or the reverse signs),
/// located by bisection. Returns the midpoint of the final bracket.
pub fn bisect_root<F>(mut lo: f64, mut hi: f64, abs_tol: f64, mut f: F) -> f64
where
    F: FnMut(f64) -> f64,
{
    let lo_negative = f(lo) < 0.0;
    for _ in 0..MAX_BISECTION_ITERATIONS {
        if hi - lo <= abs_tol {
            break;
        }
        let mid = lo + 0.5 * (hi - lo);
        if mid <= lo || mid >= hi {
            break;
        }
        let fm = f(mid);
        if fm == 0.0 {
            return mid;
        }
        if (fm < 0.0) == lo_negative {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    lo + 0.5 * (hi - lo)
}

/// Result of a golden-section search.
#[derive(Debug, Clone, Copy)]
pub struct GoldenResult {
    pub argmin: f64,
    pub value: f64,
}

/// Golden-section minimization of a unimodal `f` on `[a, b]`, stopping once
/// the bracket is shorter than `rel_tol * max(|a|, |b|, 1e-300)`.
pub fn golden_section_min<F>(mut a: f64, mut b: f64, rel_tol: f64, mut f: F) -> GoldenResult
where
    F: FnMut(f64) -> f64,
{
    const INV_PHI: f64 = 0.618_033_988_749_894_9;
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    for _ in 0..400 {
        let scale = a.abs().max(b.abs()).max(1e-300);
        if (b - a) <= rel_tol * scale {
            break;
        }
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = f(d);
        }
    }
    if fc <= fd {
        GoldenResult { argmin: c, value: fc }
    } else {
        GoldenResult { argmin: d, value: fd }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn threshold_finds_smallest_true_point() {
        let x = bisect_threshold(0.0, 4.0, 1e-14, |x| x * x >= 2.0);
        assert!((x - 2f64.sqrt()).abs() < 1e-13);
        assert!(x * x >= 2.0);
    }

    #[test]
    fn root_handles_decreasing_functions() {
        let r = bisect_root(0.0, 2.0, 1e-15, |x| 1.0 - x);
        assert!((r - 1.0).abs() < 1e-14);
    }

    #[test]
    fn golden_section_on_parabola() {
        let g = golden_section_min(-3.0, 5.0, 1e-12, |x| (x - 1.25) * (x - 1.25) + 2.0);
        assert!((g.argmin - 1.25).abs() < 1e-6);
        assert!((g.value - 2.0).abs() < 1e-12);
    }
}
