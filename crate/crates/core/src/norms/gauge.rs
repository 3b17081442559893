//! Luxemburg and Amemiya evaluation for Musielak-Orlicz families.

use crate::solve1d::{bisect_threshold, golden_section_min};
use crate::young::YoungFunction;

/// Relative tolerance of the Luxemburg radius bisection.
const LUXEMBURG_REL_TOL: f64 = 1e-13;
/// Relative argument tolerance of the Amemiya golden-section search.
const AMEMIYA_REL_TOL: f64 = 1e-12;
/// `λ ≤ AMEMIYA_LAMBDA_CAP / max|x_i|`.
pub const AMEMIYA_LAMBDA_CAP: f64 = 1e6;

/// Amemiya evaluation result. `converged` is false when the minimum sits on
/// the `λ` cap, i.e. the true infimum is only approached in the limit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AmemiyaValue {
    pub value: f64,
    pub converged: bool,
}

/// Absolute values, in ascending order when all functions coincide so the
/// summation order (and hence rounding) is permutation invariant.
fn prepared(functions: &[YoungFunction], x: &[f64]) -> (Vec<f64>, bool) {
    let mut abs: Vec<f64> = x.iter().map(|v| v.abs()).collect();
    let orlicz = functions.windows(2).all(|w| w[0] == w[1]);
    if orlicz {
        abs.sort_by(f64::total_cmp);
    }
    (abs, orlicz)
}

fn modular(functions: &[YoungFunction], abs: &[f64], orlicz: bool, scale: f64) -> f64 {
    let mut s = 0.0;
    for (i, &v) in abs.iter().enumerate() {
        let f = if orlicz { &functions[0] } else { &functions[i] };
        s += f.value(v / scale);
        if s == f64::INFINITY {
            break;
        }
    }
    s
}

/// Smallest radius at which every coordinate stays inside its finite domain.
fn domain_radius(functions: &[YoungFunction], abs: &[f64], orlicz: bool) -> f64 {
    abs.iter()
        .enumerate()
        .map(|(i, &v)| {
            let f = if orlicz { &functions[0] } else { &functions[i] };
            let b = f.finite_threshold();
            if b.is_finite() {
                // Round up until v / r really lies inside [0, b].
                let mut r = v / b;
                while v / r > b {
                    r = r.next_up();
                }
                r
            } else {
                0.0
            }
        })
        .fold(0.0, f64::max)
}

/// `inf{r > 0 : Σ f_i(|x_i| / r) ≤ 1}`.
pub fn luxemburg(functions: &[YoungFunction], x: &[f64]) -> f64 {
    let (abs, orlicz) = prepared(functions, x);
    let max = abs.iter().copied().fold(0.0, f64::max);
    if max == 0.0 {
        return 0.0;
    }
    let s = |r: f64| modular(functions, &abs, orlicz, r);
    let r_dom = domain_radius(functions, &abs, orlicz);
    if r_dom > 0.0 && s(r_dom) <= 1.0 {
        return r_dom;
    }
    // Bracket [lo, hi] with S(lo) > 1 (or lo at the domain edge) and S(hi) <= 1.
    let mut hi = r_dom.max(max);
    let mut lo;
    if s(hi) <= 1.0 {
        lo = 0.5 * hi;
        while lo > r_dom && s(lo) <= 1.0 {
            hi = lo;
            lo *= 0.5;
        }
        lo = lo.max(r_dom);
    } else {
        loop {
            lo = hi;
            hi *= 2.0;
            if s(hi) <= 1.0 {
                break;
            }
        }
    }
    bisect_threshold(lo, hi, LUXEMBURG_REL_TOL * hi, |r| s(r) <= 1.0)
}

/// `inf_{λ>0} (1/λ)(Σ f_i(λ|x_i|) + 1)` over the capped range
/// `λ ≤ AMEMIYA_LAMBDA_CAP / max|x_i|`.
///
/// Minimizes over `u = 1/λ`, in which the objective
/// `u · (Σ f_i(|x_i|/u) + 1)` is convex.
pub fn amemiya(functions: &[YoungFunction], x: &[f64]) -> AmemiyaValue {
    let (abs, orlicz) = prepared(functions, x);
    let max = abs.iter().copied().fold(0.0, f64::max);
    if max == 0.0 {
        return AmemiyaValue { value: 0.0, converged: true };
    }
    let objective = |u: f64| {
        let m = modular(functions, &abs, orlicz, u);
        if m.is_infinite() {
            f64::INFINITY
        } else {
            u * (m + 1.0)
        }
    };
    let r_dom = domain_radius(functions, &abs, orlicz);
    let u_lo = r_dom.max(max / AMEMIYA_LAMBDA_CAP);
    // Any minimizer u* satisfies u* <= F(u*) <= F(u0).
    let u0 = r_dom.max(max);
    let u_hi = objective(u0).max(u_lo);
    let g = golden_section_min(u_lo, u_hi, AMEMIYA_REL_TOL, objective);
    let at_lo = objective(u_lo);
    let (value, argmin) = if at_lo <= g.value { (at_lo, u_lo) } else { (g.value, g.argmin) };
    let converged = argmin > u_lo * (1.0 + 1e-6) || r_dom >= max / AMEMIYA_LAMBDA_CAP;
    AmemiyaValue { value, converged }
}
