//! Modulus of smoothness estimation and the supporting functional of a
//! smooth symmetric norm at `(c, c, 0, …, 0)`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::NormSpec;
use crate::error::{Error, Result};
use crate::sampling::{nonzero_gaussian, rng_for};

/// Hill-climbing steps applied to every sampled pair.
const CLIMB_STEPS: usize = 50;
/// Basis pairs always included ahead of the random ones.
const MAX_BASIS_SEEDS: usize = 16;
/// The ε₀ grid is `{2⁰, 2⁻¹, …, 2^-EPS0_GRID_DEPTH}`.
pub const EPS0_GRID_DEPTH: i32 = 40;

fn unit(spec: &NormSpec, v: &[f64]) -> Vec<f64> {
    let n = spec.eval(v);
    v.iter().map(|x| x / n).collect()
}

fn smoothness_expr(spec: &NormSpec, x: &[f64], y: &[f64], t: f64, buf: &mut Vec<f64>) -> f64 {
    buf.clear();
    buf.extend(x.iter().zip(y).map(|(a, b)| a + t * b));
    let plus = spec.eval(buf);
    buf.clear();
    buf.extend(x.iter().zip(y).map(|(a, b)| a - t * b));
    let minus = spec.eval(buf);
    0.5 * (plus + minus) - 1.0
}

/// Coordinate-wise hill climbing of the smoothness expression over pairs of
/// unit vectors.
fn climb(spec: &NormSpec, x0: Vec<f64>, y0: Vec<f64>, t: f64) -> f64 {
    let n = spec.dim;
    let mut buf = Vec::with_capacity(n);
    let mut pair = [unit(spec, &x0), unit(spec, &y0)];
    let mut best = smoothness_expr(spec, &pair[0], &pair[1], t, &mut buf);
    let mut step = 0.25;
    for _ in 0..CLIMB_STEPS {
        let mut improved = false;
        for which in 0..2 {
            for c in 0..n {
                for sign in [1.0, -1.0] {
                    let mut cand = pair[which].clone();
                    cand[c] += sign * step;
                    if cand.iter().all(|v| *v == 0.0) {
                        continue;
                    }
                    let cand = unit(spec, &cand);
                    let val = if which == 0 {
                        smoothness_expr(spec, &cand, &pair[1], t, &mut buf)
                    } else {
                        smoothness_expr(spec, &pair[0], &cand, t, &mut buf)
                    };
                    if val > best {
                        best = val;
                        pair[which] = cand;
                        improved = true;
                    }
                }
            }
        }
        if !improved {
            step *= 0.5;
        }
    }
    best
}

/// Lower estimate of `ρ_X(t) = sup{(‖x+ty‖ + ‖x−ty‖)/2 − 1 : ‖x‖, ‖y‖ ≤ 1}`.
///
/// The maximum is taken over a fixed set of basis-vector pairs plus `budget`
/// random unit pairs, each refined by hill climbing. Pair `i` is drawn from
/// its own random stream, so the estimate is nondecreasing in `budget`. This
/// is an estimate from below, never a certified supremum; the result is
/// clamped to `[0, t]` (the triangle inequality gives `ρ_X(t) ≤ t`).
pub fn modulus_of_smoothness(spec: &NormSpec, t: f64, budget: usize, seed: u64) -> Result<f64> {
    if !(t.is_finite() && t > 0.0) {
        return Err(Error::Parameter(format!("t must be positive and finite, got {t}")));
    }
    if budget < 100 {
        return Err(Error::Parameter(format!("sample budget must be >= 100, got {budget}")));
    }
    let n = spec.dim;
    let basis = |i: usize| {
        let mut e = vec![0.0; n];
        e[i] = 1.0;
        e
    };
    let mut seeds: Vec<(Vec<f64>, Vec<f64>)> = Vec::new();
    'outer: for i in 0..n {
        for j in 0..n {
            if i != j {
                seeds.push((basis(i), basis(j)));
                if seeds.len() >= MAX_BASIS_SEEDS {
                    break 'outer;
                }
            }
        }
    }
    if n >= 2 {
        let mut s = basis(0);
        s[1] = 1.0;
        let mut d = basis(0);
        d[1] = -1.0;
        seeds.push((s, d));
    }
    let from_seeds = seeds.into_par_iter().map(|(x, y)| climb(spec, x, y, t)).reduce(|| f64::NEG_INFINITY, f64::max);
    let from_random = (0..budget as u64)
        .into_par_iter()
        .map(|i| {
            let mut rng = rng_for(seed, i);
            let x = nonzero_gaussian(&mut rng, n);
            let y = nonzero_gaussian(&mut rng, n);
            climb(spec, x, y, t)
        })
        .reduce(|| f64::NEG_INFINITY, f64::max);
    Ok(from_seeds.max(from_random).clamp(0.0, t))
}

/// Largest `ε₀ = 2^-j` (`0 ≤ j ≤ 40`) whose estimated `ρ_X(ε₀)/ε₀` is at most
/// `1/(6n)`.
///
/// Because `ρ_X` is estimated from below the answer is heuristic. Non-smooth
/// norms (`ρ_X(t)/t` bounded away from zero) exhaust the grid.
pub fn find_eps0(spec: &NormSpec, n: usize, budget: usize, seed: u64) -> Result<f64> {
    if n == 0 {
        return Err(Error::Parameter("n must be >= 1".into()));
    }
    let target = 1.0 / (6.0 * n as f64);
    for j in 0..=EPS0_GRID_DEPTH {
        let eps = 2f64.powi(-j);
        let rho = modulus_of_smoothness(spec, eps, budget, seed)?;
        if rho / eps <= target {
            return Ok(eps);
        }
    }
    Err(Error::SmoothnessBudget(format!(
        "no grid point 2^-j, j <= {EPS0_GRID_DEPTH}, has rho(eps)/eps <= 1/(6n) = {target:.3e}"
    )))
}

/// Supporting functional `(1/(2c), 1/(2c), 0, …, 0)` of the unit sphere at
/// `(c, c, 0, …, 0)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SupportingFunctional {
    pub c: f64,
    pub functional: Vec<f64>,
}

impl SupportingFunctional {
    pub fn apply(&self, x: &[f64]) -> f64 {
        self.functional.iter().zip(x).map(|(a, b)| a * b).sum()
    }
}

/// For a smooth symmetric norm, the point `(c, c, 0, …, 0)` of the unit
/// sphere and its (unique) supporting functional.
///
/// `c` comes from homogeneity, `c = 1 / ‖(1, 1, 0, …, 0)‖`.
pub fn supporting_functional_symmetric(spec: &NormSpec) -> Result<SupportingFunctional> {
    let flags = spec.flags();
    if !(flags.smooth && flags.symmetric()) {
        return Err(Error::Capability(format!(
            "supporting functional needs a smooth symmetric norm (flags: {flags:?})"
        )));
    }
    let n = spec.dim;
    if n < 2 {
        return Err(Error::Parameter("dimension must be >= 2".into()));
    }
    let mut v = vec![0.0; n];
    v[0] = 1.0;
    v[1] = 1.0;
    let c = 1.0 / spec.eval(&v);
    let mut functional = vec![0.0; n];
    functional[0] = 0.5 / c;
    functional[1] = 0.5 / c;
    Ok(SupportingFunctional { c, functional })
}
