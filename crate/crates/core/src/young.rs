//! Young (coordinate) functions.
//!
//! A Young function is a convex, nondecreasing, left-continuous map
//! `f: [0, ∞) → [0, ∞]` with `f(0) = 0`, finite somewhere on `(0, ∞)` and
//! tending to infinity. Values are plain `f64` with `f64::INFINITY` standing
//! for `+∞`; the one product that needs care, `0 · ∞ = 0`, goes through
//! [`ext_mul`].
//!
//! Only closed-form families are supported so that thresholds and one-sided
//! derivatives are exact.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::solve1d::{bisect_threshold, MAX_BISECTION_ITERATIONS};

/// Absolute argument tolerance of every inverse bisection.
pub const INVERSE_TOL: f64 = 1e-13;

/// Extended-real product with the measure-theoretic convention `0 · ∞ = 0`.
pub fn ext_mul(a: f64, b: f64) -> f64 {
    if a == 0.0 || b == 0.0 {
        0.0
    } else {
        a * b
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Left,
    Right,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum YoungFunction {
    /// `t^p`, `p >= 1`.
    Power { p: f64 },
    /// `0` on `[0, b]`, `+∞` beyond.
    Indicator { b: f64 },
    /// Integral of a nondecreasing step slope: slope `slopes[i]` on
    /// `[breakpoints[i], breakpoints[i+1])`, zero before the first breakpoint,
    /// and `+∞` past `cutoff` when one is given.
    PiecewiseLinear {
        breakpoints: Vec<f64>,
        slopes: Vec<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        cutoff: Option<f64>,
    },
    /// `w · base(t) + s · t`.
    AffineMix { base: Box<YoungFunction>, w: f64, s: f64 },
    /// `base(t)` on `[0, at]`, continued by the line `slope · t + intercept`.
    /// Produced by [`YoungFunction::regularize`] for functions with a finite
    /// threshold.
    AffineTail { base: Box<YoungFunction>, at: f64, slope: f64, intercept: f64 },
}

fn check_arg(t: f64) -> Result<()> {
    if t.is_nan() || t < 0.0 || t.is_infinite() {
        return Err(Error::Domain(format!("argument must be a finite t >= 0, got {t}")));
    }
    Ok(())
}

impl YoungFunction {
    pub fn power(p: f64) -> Result<Self> {
        let f = YoungFunction::Power { p };
        f.validate()?;
        Ok(f)
    }

    pub fn indicator(b: f64) -> Result<Self> {
        let f = YoungFunction::Indicator { b };
        f.validate()?;
        Ok(f)
    }

    pub fn piecewise_linear(breakpoints: Vec<f64>, slopes: Vec<f64>, cutoff: Option<f64>) -> Result<Self> {
        let f = YoungFunction::PiecewiseLinear { breakpoints, slopes, cutoff };
        f.validate()?;
        Ok(f)
    }

    pub fn affine_mix(base: YoungFunction, w: f64, s: f64) -> Result<Self> {
        let f = YoungFunction::AffineMix { base: Box::new(base), w, s };
        f.validate()?;
        Ok(f)
    }

    /// Checks the family parameters. Deserialized values should be validated
    /// before use.
    pub fn validate(&self) -> Result<()> {
        match self {
            YoungFunction::Power { p } => {
                if !(p.is_finite() && *p >= 1.0) {
                    return Err(Error::Parameter(format!("power exponent must be finite and >= 1, got {p}")));
                }
            }
            YoungFunction::Indicator { b } => {
                if !(b.is_finite() && *b > 0.0) {
                    return Err(Error::Parameter(format!("indicator threshold must be finite and > 0, got {b}")));
                }
            }
            YoungFunction::PiecewiseLinear { breakpoints, slopes, cutoff } => {
                if breakpoints.is_empty() || breakpoints.len() != slopes.len() {
                    return Err(Error::Parameter(
                        "piecewise_linear needs equally many (>= 1) breakpoints and slopes".into(),
                    ));
                }
                if breakpoints.iter().any(|b| !b.is_finite() || *b < 0.0) {
                    return Err(Error::Parameter("breakpoints must be finite and >= 0".into()));
                }
                if breakpoints.windows(2).any(|w| w[0] >= w[1]) {
                    return Err(Error::Parameter("breakpoints must be strictly ascending".into()));
                }
                if slopes.iter().any(|s| !s.is_finite() || *s < 0.0) {
                    return Err(Error::Parameter("slopes must be finite and >= 0".into()));
                }
                if slopes.windows(2).any(|w| w[0] > w[1]) {
                    return Err(Error::Parameter("slopes must be nondecreasing (convexity)".into()));
                }
                match cutoff {
                    Some(b) if !(b.is_finite() && *b > 0.0) => {
                        return Err(Error::Parameter(format!("cutoff must be finite and > 0, got {b}")));
                    }
                    None if *slopes.last().unwrap() <= 0.0 => {
                        return Err(Error::Parameter(
                            "piecewise_linear without cutoff must end with a positive slope".into(),
                        ));
                    }
                    _ => {}
                }
            }
            YoungFunction::AffineMix { base, w, s } => {
                base.validate()?;
                if !(w.is_finite() && *w > 0.0 && *w <= 1.0) {
                    return Err(Error::Parameter(format!("affine_mix weight must lie in (0, 1], got {w}")));
                }
                if !(s.is_finite() && *s >= 0.0) {
                    return Err(Error::Parameter(format!("affine_mix slope must be finite and >= 0, got {s}")));
                }
            }
            YoungFunction::AffineTail { base, at, slope, intercept } => {
                base.validate()?;
                if !(at.is_finite() && *at > 0.0 && *at <= base.finite_threshold()) {
                    return Err(Error::Parameter("affine_tail junction must lie in the base finite domain".into()));
                }
                if !(slope.is_finite() && intercept.is_finite()) {
                    return Err(Error::Parameter("affine_tail line must be finite".into()));
                }
                let left = base.one_sided(*at, Side::Left);
                if *slope < left || *slope <= 0.0 {
                    return Err(Error::Parameter("affine_tail slope must dominate the left derivative".into()));
                }
                let gap = (slope * at + intercept - base.value(*at)).abs();
                if gap > 1e-12 * (1.0 + base.value(*at).abs() + (slope * at).abs()) {
                    return Err(Error::Parameter("affine_tail line must meet the base at the junction".into()));
                }
            }
        }
        Ok(())
    }

    /// `f(t)` for `t >= 0`, possibly `+∞`.
    pub fn eval(&self, t: f64) -> Result<f64> {
        check_arg(t)?;
        Ok(self.value(t))
    }

    /// Unchecked evaluation; `t` must be finite and nonnegative.
    pub(crate) fn value(&self, t: f64) -> f64 {
        match self {
            YoungFunction::Power { p } => {
                if *p == 1.0 {
                    t
                } else if *p == 2.0 {
                    t * t
                } else {
                    t.powf(*p)
                }
            }
            YoungFunction::Indicator { b } => {
                if t <= *b {
                    0.0
                } else {
                    f64::INFINITY
                }
            }
            YoungFunction::PiecewiseLinear { breakpoints, slopes, cutoff } => {
                if let Some(b) = cutoff {
                    if t > *b {
                        return f64::INFINITY;
                    }
                }
                let mut acc = 0.0;
                for i in 0..breakpoints.len() {
                    let start = breakpoints[i];
                    if t <= start {
                        break;
                    }
                    let end = breakpoints.get(i + 1).copied().unwrap_or(f64::INFINITY).min(t);
                    acc += slopes[i] * (end - start);
                }
                acc
            }
            YoungFunction::AffineMix { base, w, s } => ext_mul(*w, base.value(t)) + s * t,
            YoungFunction::AffineTail { base, at, slope, intercept } => {
                if t <= *at {
                    base.value(t)
                } else {
                    slope * t + intercept
                }
            }
        }
    }

    /// One-sided derivative `f⁻(t)` or `f⁺(t)`. Beyond the finite domain the
    /// answer is `+∞`; the left derivative needs `t > 0`.
    pub fn one_sided_derivative(&self, t: f64, side: Side) -> Result<f64> {
        check_arg(t)?;
        if side == Side::Left && t == 0.0 {
            return Err(Error::Domain("left derivative requires t > 0".into()));
        }
        Ok(self.one_sided(t, side))
    }

    pub(crate) fn one_sided(&self, t: f64, side: Side) -> f64 {
        let b = self.finite_threshold();
        match side {
            Side::Right if t >= b => return f64::INFINITY,
            Side::Left if t > b => return f64::INFINITY,
            _ => {}
        }
        match self {
            YoungFunction::Power { p } => {
                if *p == 1.0 {
                    1.0
                } else {
                    p * t.powf(p - 1.0)
                }
            }
            YoungFunction::Indicator { .. } => 0.0,
            YoungFunction::PiecewiseLinear { breakpoints, slopes, .. } => {
                let mut slope = 0.0;
                for (i, &start) in breakpoints.iter().enumerate() {
                    let inside = match side {
                        Side::Right => t >= start,
                        Side::Left => t > start,
                    };
                    if inside {
                        slope = slopes[i];
                    } else {
                        break;
                    }
                }
                slope
            }
            YoungFunction::AffineMix { base, w, s } => ext_mul(*w, base.one_sided(t, side)) + s,
            YoungFunction::AffineTail { base, at, slope, .. } => match side {
                Side::Right if t >= *at => *slope,
                Side::Left if t > *at => *slope,
                _ => base.one_sided(t, side),
            },
        }
    }

    /// `b = sup{t : f(t) < ∞}`.
    pub fn finite_threshold(&self) -> f64 {
        match self {
            YoungFunction::Power { .. } | YoungFunction::AffineTail { .. } => f64::INFINITY,
            YoungFunction::Indicator { b } => *b,
            YoungFunction::PiecewiseLinear { cutoff, .. } => cutoff.unwrap_or(f64::INFINITY),
            YoungFunction::AffineMix { base, .. } => base.finite_threshold(),
        }
    }

    /// `a = sup{t : f(t) = 0}`.
    pub fn zero_threshold(&self) -> f64 {
        match self {
            YoungFunction::Power { .. } => 0.0,
            YoungFunction::Indicator { b } => *b,
            YoungFunction::PiecewiseLinear { breakpoints, slopes, cutoff } => {
                match slopes.iter().position(|s| *s > 0.0) {
                    Some(i) => match cutoff {
                        Some(b) => breakpoints[i].min(*b),
                        None => breakpoints[i],
                    },
                    None => cutoff.unwrap_or(f64::INFINITY),
                }
            }
            YoungFunction::AffineMix { base, s, .. } => {
                if *s > 0.0 {
                    0.0
                } else {
                    base.zero_threshold()
                }
            }
            YoungFunction::AffineTail { base, at, .. } => base.zero_threshold().min(*at),
        }
    }

    /// `sup{f(t) : f(t) < ∞}`; equals `f(b)` by left-continuity when `b` is finite.
    pub fn sup_finite_value(&self) -> f64 {
        let b = self.finite_threshold();
        if b.is_finite() {
            self.value(b)
        } else {
            f64::INFINITY
        }
    }

    /// Strictly increasing on `[0, ∞)` and finite everywhere: the class the
    /// Musielak-Orlicz construction works with directly.
    pub fn is_strictly_increasing_finite(&self) -> bool {
        self.zero_threshold() == 0.0 && self.finite_threshold().is_infinite()
    }

    /// Smallest `t` with `f(t) >= y`.
    ///
    /// Fails with [`Error::NoSolution`] when `y` exceeds every finite value of
    /// `f` (only possible when the finite domain is bounded).
    pub fn inverse_solve(&self, y: f64) -> Result<f64> {
        if y.is_nan() || y < 0.0 || y.is_infinite() {
            return Err(Error::Domain(format!("inverse target must be finite and >= 0, got {y}")));
        }
        if y == 0.0 {
            return Ok(0.0);
        }
        let sup = self.sup_finite_value();
        if y > sup {
            return Err(Error::NoSolution(format!(
                "value {y} exceeds the largest finite value {sup} of the Young function"
            )));
        }
        match self {
            YoungFunction::Power { p } => Ok(if *p == 1.0 { y } else { y.powf(1.0 / p) }),
            YoungFunction::PiecewiseLinear { breakpoints, slopes, .. } => {
                let mut acc = 0.0;
                for i in 0..breakpoints.len() {
                    let start = breakpoints[i];
                    let end = breakpoints.get(i + 1).copied().unwrap_or(f64::INFINITY);
                    let rise = slopes[i] * (end - start);
                    if slopes[i] > 0.0 && acc + rise >= y {
                        return Ok(start + (y - acc) / slopes[i]);
                    }
                    acc += rise;
                }
                Err(Error::Internal("piecewise inverse exhausted its segments".into()))
            }
            _ => {
                let b = self.finite_threshold();
                let hi = if b.is_finite() {
                    b
                } else {
                    let mut hi = 1.0;
                    let mut guard = 0;
                    while self.value(hi) < y {
                        hi *= 2.0;
                        guard += 1;
                        if guard > MAX_BISECTION_ITERATIONS {
                            return Err(Error::Internal("could not bracket inverse".into()));
                        }
                    }
                    hi
                };
                Ok(bisect_threshold(0.0, hi, INVERSE_TOL, |t| self.value(t) >= y))
            }
        }
    }

    /// Strictly increasing, finite-valued approximation
    /// `f_k(x) = ((k-1)/k) f(x) + x/k` on the finite domain `[0, b]`,
    /// continued past a finite `b` by a line of slope `f_k⁻(b) + k`.
    ///
    /// The steep continuation makes the Luxemburg norms of `f_k` converge to
    /// the norm of `f` at rate `O(1/k)`.
    pub fn regularize(&self, k: u64) -> Result<YoungFunction> {
        if k < 2 {
            return Err(Error::Parameter(format!("regularization index must be >= 2, got {k}")));
        }
        let kf = k as f64;
        let mixed = YoungFunction::AffineMix { base: Box::new(self.clone()), w: (kf - 1.0) / kf, s: 1.0 / kf };
        let b = self.finite_threshold();
        if b.is_infinite() {
            return Ok(mixed);
        }
        let at_b = mixed.value(b);
        let slope = mixed.one_sided(b, Side::Left) + kf;
        Ok(YoungFunction::AffineTail { base: Box::new(mixed), at: b, slope, intercept: at_b - slope * b })
    }

    /// A representative upper end of the finite domain, for sampling.
    pub fn sample_extent(&self) -> f64 {
        let b = self.finite_threshold();
        if b.is_finite() {
            b
        } else {
            // Somewhere past the point where f reaches 1.
            2.0 * self.inverse_solve(1.0).unwrap_or(1.0).max(1.0)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn families() -> Vec<YoungFunction> {
        vec![
            YoungFunction::power(1.0).unwrap(),
            YoungFunction::power(2.0).unwrap(),
            YoungFunction::power(3.5).unwrap(),
            YoungFunction::indicator(1.0).unwrap(),
            YoungFunction::piecewise_linear(vec![0.0, 1.0], vec![1.0, 3.0], None).unwrap(),
            YoungFunction::piecewise_linear(vec![0.5, 1.0, 2.0], vec![0.5, 1.0, 4.0], Some(3.0)).unwrap(),
            YoungFunction::affine_mix(YoungFunction::power(2.0).unwrap(), 0.5, 0.25).unwrap(),
            YoungFunction::affine_mix(YoungFunction::indicator(0.7).unwrap(), 0.9, 0.1).unwrap(),
            YoungFunction::indicator(1.0).unwrap().regularize(8).unwrap(),
        ]
    }

    #[test]
    fn eval_examples() {
        assert_eq!(YoungFunction::power(2.0).unwrap().eval(3.0).unwrap(), 9.0);
        let ind = YoungFunction::indicator(1.0).unwrap();
        assert_eq!(ind.eval(0.5).unwrap(), 0.0);
        assert_eq!(ind.eval(1.0).unwrap(), 0.0);
        assert_eq!(ind.eval(2.0).unwrap(), f64::INFINITY);
        let mix = YoungFunction::affine_mix(YoungFunction::power(2.0).unwrap(), 0.5, 0.25).unwrap();
        assert_eq!(mix.eval(2.0).unwrap(), 2.5);
        assert!(matches!(ind.eval(-1.0), Err(Error::Domain(_))));
    }

    #[test]
    fn derivative_examples() {
        let sq = YoungFunction::power(2.0).unwrap();
        assert_eq!(sq.one_sided_derivative(1.0, Side::Right).unwrap(), 2.0);
        let ind = YoungFunction::indicator(1.0).unwrap();
        assert_eq!(ind.one_sided_derivative(1.0, Side::Left).unwrap(), 0.0);
        assert_eq!(ind.one_sided_derivative(1.0, Side::Right).unwrap(), f64::INFINITY);
        assert_eq!(ind.one_sided_derivative(1.5, Side::Left).unwrap(), f64::INFINITY);
        let pw = YoungFunction::piecewise_linear(vec![0.0, 1.0], vec![1.0, 3.0], None).unwrap();
        assert_eq!(pw.one_sided_derivative(1.0, Side::Left).unwrap(), 1.0);
        assert_eq!(pw.one_sided_derivative(1.0, Side::Right).unwrap(), 3.0);
        assert!(sq.one_sided_derivative(0.0, Side::Left).is_err());
        assert_eq!(YoungFunction::power(1.0).unwrap().one_sided_derivative(0.0, Side::Right).unwrap(), 1.0);
    }

    #[test]
    fn inverse_examples() {
        let sq = YoungFunction::power(2.0).unwrap();
        assert!((sq.inverse_solve(0.5).unwrap() - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-15);
        assert_eq!(YoungFunction::power(1.0).unwrap().inverse_solve(0.5).unwrap(), 0.5);
        let ind = YoungFunction::indicator(1.0).unwrap();
        assert!(matches!(ind.inverse_solve(0.5), Err(Error::NoSolution(_))));
        let pw = YoungFunction::piecewise_linear(vec![0.0, 1.0], vec![1.0, 3.0], None).unwrap();
        assert!((pw.inverse_solve(2.5).unwrap() - 1.5).abs() < 1e-15);
    }

    #[test]
    fn regularize_examples() {
        let r = YoungFunction::indicator(1.0).unwrap().regularize(2).unwrap();
        assert_eq!(r.eval(0.5).unwrap(), 0.25);
        let r = YoungFunction::power(2.0).unwrap().regularize(10).unwrap();
        assert!((r.eval(1.0).unwrap() - 1.0).abs() < 1e-15);
        assert!(matches!(YoungFunction::power(2.0).unwrap().regularize(1), Err(Error::Parameter(_))));
    }

    #[test]
    fn regularize_approaches_f_on_finite_domain() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for f in families() {
            for &k in &[4u64, 64, 1024, 1 << 20] {
                let fk = f.regularize(k).unwrap();
                assert!(fk.is_strictly_increasing_finite());
                fk.validate().unwrap();
                for _ in 0..200 {
                    let x = rng.random::<f64>() * f.sample_extent();
                    let fx = f.value(x);
                    if fx.is_finite() {
                        let bound = (x + fx) / k as f64;
                        assert!((fk.value(x) - fx).abs() <= bound + 1e-14, "{f:?} k={k} x={x}");
                    }
                }
            }
        }
    }

    #[test]
    fn sampled_monotone_and_midpoint_convex() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for f in families() {
            let ext = f.sample_extent();
            for _ in 0..1000 {
                let mut t1 = rng.random::<f64>() * ext;
                let mut t2 = rng.random::<f64>() * ext;
                if t1 > t2 {
                    std::mem::swap(&mut t1, &mut t2);
                }
                let (f1, f2) = (f.value(t1), f.value(t2));
                assert!(f1 <= f2, "{f:?} not monotone at {t1},{t2}");
                if f2.is_finite() {
                    let fm = f.value(0.5 * (t1 + t2));
                    assert!(fm <= 0.5 * (f1 + f2) + 1e-12, "{f:?} not convex at {t1},{t2}");
                }
                if t1 > 0.0 && f.value(t1).is_finite() {
                    let l = f.one_sided(t1, Side::Left);
                    let r = f.one_sided(t1, Side::Right);
                    assert!(l <= r, "{f:?} derivatives out of order at {t1}");
                }
            }
        }
    }

    #[test]
    fn regularized_is_strictly_increasing_with_margin() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for f in families() {
            let k = 16;
            let fk = f.regularize(k).unwrap();
            for _ in 0..1000 {
                let t1 = rng.random::<f64>() * 4.0;
                let t2 = t1 + rng.random::<f64>() * 4.0;
                assert!(fk.value(t2) - fk.value(t1) >= (t2 - t1) / k as f64 - 1e-12);
            }
        }
    }

    #[test]
    fn inverse_round_trips_where_strictly_increasing() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for f in families() {
            let f = if f.is_strictly_increasing_finite() { f } else { f.regularize(32).unwrap() };
            for _ in 0..200 {
                let y = rng.random::<f64>() * 3.0;
                let t = f.inverse_solve(y).unwrap();
                assert!((f.value(t) - y).abs() <= 1e-10, "{f:?} y={y} t={t}");
            }
        }
    }

    #[test]
    fn thresholds() {
        let pw = YoungFunction::piecewise_linear(vec![0.5, 1.0], vec![0.0, 2.0], Some(3.0)).unwrap();
        assert_eq!(pw.zero_threshold(), 1.0);
        assert_eq!(pw.finite_threshold(), 3.0);
        assert_eq!(pw.sup_finite_value(), 4.0);
        assert!(!pw.is_strictly_increasing_finite());
        assert!(YoungFunction::power(1.5).unwrap().is_strictly_increasing_finite());
    }

    #[test]
    fn json_shapes() {
        let f: YoungFunction = serde_json::from_str(r#"{"power":{"p":2.0}}"#).unwrap();
        assert_eq!(f, YoungFunction::Power { p: 2.0 });
        let f: YoungFunction =
            serde_json::from_str(r#"{"affine_mix":{"base":{"indicator":{"b":1.0}},"w":0.9,"s":0.1}}"#).unwrap();
        f.validate().unwrap();
        let f: YoungFunction =
            serde_json::from_str(r#"{"piecewise_linear":{"breakpoints":[0.0,1.0],"slopes":[1.0,3.0]}}"#).unwrap();
        assert_eq!(
            serde_json::to_string(&f).unwrap(),
            r#"{"piecewise_linear":{"breakpoints":[0.0,1.0],"slopes":[1.0,3.0]}}"#
        );
        let bad: YoungFunction = serde_json::from_str(r#"{"power":{"p":0.5}}"#).unwrap();
        assert!(bad.validate().is_err());
    }
}
