//! Certificates for equilateral sets and sampled structural checks.

use std::collections::HashSet;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::construct::PointSet;
use crate::error::{Error, Result};
use crate::norms::{Norm, NormSpec};
use crate::sampling::{gaussian_vector, random_permutation, random_signs, rng_for};

/// Default relative tolerance for numerically constructed sets.
pub const NUMERIC_TOL: f64 = 1e-9;
/// Default relative tolerance for closed-form constructions.
pub const EXACT_TOL: f64 = 1e-12;
/// Symmetry deviations above this count as violations.
pub const SYMMETRY_TOL: f64 = 1e-11;
/// Slack in the sampled monotonicity test.
pub const MONOTONE_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Pass,
    Fail,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistanceSummary {
    pub min: f64,
    pub max: f64,
    pub mean: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EquilateralCertificate {
    pub m: usize,
    pub distances: DistanceSummary,
    pub claimed: f64,
    pub tolerance: f64,
    /// `max |d_ij − claimed| / claimed`.
    pub max_relative_deviation: f64,
    pub verdict: Verdict,
    /// How the distances were established: `pairwise` evaluates every pair,
    /// `sign-cube` checks the structure that forces every `ℓ∞` distance to be 2.
    pub method: String,
    #[serde(default)]
    pub heuristic_flags: Vec<String>,
}

impl EquilateralCertificate {
    pub fn passed(&self) -> bool {
        self.verdict == Verdict::Pass
    }

    pub fn with_flag(mut self, flag: impl Into<String>) -> Self {
        self.heuristic_flags.push(flag.into());
        self
    }
}

fn check_set(set: &PointSet, norm: &dyn Norm, tol: f64) -> Result<()> {
    if set.points.len() < 2 {
        return Err(Error::Parameter(format!("need at least 2 points, got {}", set.points.len())));
    }
    if !(set.claimed_distance.is_finite() && set.claimed_distance > 0.0) {
        return Err(Error::Parameter(format!("claimed distance must be positive, got {}", set.claimed_distance)));
    }
    if !(tol.is_finite() && tol > 0.0) {
        return Err(Error::Parameter(format!("tolerance must be positive, got {tol}")));
    }
    for p in &set.points {
        norm.check_point(p)?;
    }
    Ok(())
}

/// Evaluates all `m(m−1)/2` pairwise distances and compares them with the
/// claimed common distance. Deterministic for fixed input.
pub fn certify_equilateral(set: &PointSet, norm: &dyn Norm, tol: f64) -> Result<EquilateralCertificate> {
    check_set(set, norm, tol)?;
    let pts = &set.points;
    let m = pts.len();
    let claimed = set.claimed_distance;
    let rows: Vec<Result<(f64, f64, f64, f64)>> = (0..m - 1)
        .into_par_iter()
        .map(|i| {
            let mut diff = vec![0.0; pts[i].len()];
            let (mut lo, mut hi, mut sum, mut dev) = (f64::INFINITY, 0.0f64, 0.0, 0.0f64);
            for q in &pts[i + 1..] {
                for (d, (a, b)) in diff.iter_mut().zip(pts[i].iter().zip(q)) {
                    *d = a - b;
                }
                let d = norm.norm(&diff)?;
                lo = lo.min(d);
                hi = hi.max(d);
                sum += d;
                dev = dev.max((d - claimed).abs());
            }
            Ok((lo, hi, sum, dev))
        })
        .collect();
    let (mut lo, mut hi, mut sum, mut dev) = (f64::INFINITY, 0.0f64, 0.0, 0.0f64);
    for r in rows {
        let (a, b, s, d) = r?;
        lo = lo.min(a);
        hi = hi.max(b);
        sum += s;
        dev = dev.max(d);
    }
    let pairs = (m * (m - 1) / 2) as f64;
    Ok(EquilateralCertificate {
        m,
        distances: DistanceSummary { min: lo, max: hi, mean: sum / pairs },
        claimed,
        tolerance: tol,
        max_relative_deviation: dev / claimed,
        verdict: if dev <= tol * claimed { Verdict::Pass } else { Verdict::Fail },
        method: "pairwise".into(),
        heuristic_flags: Vec::new(),
    })
}

/// Certificate for sign-cube sets in `ℓ∞` (or a subspace of it), linear in
/// the number of points.
///
/// If every point has entries exactly `±1` on the coordinates `free`, the
/// sign patterns are pairwise distinct, and every other entry has absolute
/// value at most 1, then two distinct points differ by exactly 2 in some free
/// coordinate and by at most 2 elsewhere: all `ℓ∞` distances equal 2.
pub fn certify_sign_cube(set: &PointSet, free: &[usize], norm: &dyn Norm, tol: f64) -> Result<EquilateralCertificate> {
    check_set(set, norm, tol)?;
    if free.is_empty() || free.len() > 63 {
        return Err(Error::Parameter("sign-cube certificate needs 1..=63 free coordinates".into()));
    }
    let n = norm.dim();
    if free.iter().any(|&j| j >= n) {
        return Err(Error::Parameter("free coordinate out of range".into()));
    }
    let mut is_free = vec![false; n];
    for &j in free {
        is_free[j] = true;
    }
    let mut patterns = HashSet::with_capacity(set.points.len());
    let mut structured = true;
    for p in &set.points {
        let mut mask = 0u64;
        for (bit, &j) in free.iter().enumerate() {
            if p[j] == -1.0 {
                mask |= 1 << bit;
            } else if p[j] != 1.0 {
                structured = false;
            }
        }
        if p.iter().enumerate().any(|(j, v)| !is_free[j] && v.abs() > 1.0) || !patterns.insert(mask) {
            structured = false;
        }
        if !structured {
            break;
        }
    }
    let claimed = set.claimed_distance;
    let dev = (2.0 - claimed).abs();
    let mut cert = EquilateralCertificate {
        m: set.points.len(),
        distances: DistanceSummary { min: 2.0, max: 2.0, mean: 2.0 },
        claimed,
        tolerance: tol,
        max_relative_deviation: dev / claimed,
        verdict: if structured && dev <= tol * claimed { Verdict::Pass } else { Verdict::Fail },
        method: "sign-cube".into(),
        heuristic_flags: Vec::new(),
    };
    if !structured {
        cert.distances = DistanceSummary { min: f64::NAN, max: f64::NAN, mean: f64::NAN };
        cert.max_relative_deviation = f64::NAN;
        cert.heuristic_flags.push("sign-cube-structure-violated".into());
    }
    Ok(cert)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SymmetryReport {
    pub seed: u64,
    pub trials: usize,
    pub permutation_max_deviation: f64,
    pub sign_max_deviation: f64,
    pub permutation_pass: bool,
    pub sign_pass: bool,
}

/// Largest relative change of the norm under random coordinate permutations
/// and random sign flips.
pub fn check_symmetries(spec: &NormSpec, trials: usize, seed: u64) -> Result<SymmetryReport> {
    if trials == 0 {
        return Err(Error::Parameter("trials must be >= 1".into()));
    }
    let n = spec.dim;
    let (mut perm_dev, mut sign_dev) = (0.0f64, 0.0f64);
    for i in 0..trials {
        let mut rng = rng_for(seed, i as u64);
        let x = gaussian_vector(&mut rng, n);
        let base = spec.norm_eval(&x)?;
        if base == 0.0 {
            continue;
        }
        let p = random_permutation(&mut rng, n);
        let px: Vec<f64> = p.iter().map(|&j| x[j]).collect();
        perm_dev = perm_dev.max((spec.norm_eval(&px)? - base).abs() / base);
        let s = random_signs(&mut rng, n);
        let sx: Vec<f64> = s.iter().zip(&x).map(|(a, b)| a * b).collect();
        sign_dev = sign_dev.max((spec.norm_eval(&sx)? - base).abs() / base);
    }
    Ok(SymmetryReport {
        seed,
        trials,
        permutation_max_deviation: perm_dev,
        sign_max_deviation: sign_dev,
        permutation_pass: perm_dev <= SYMMETRY_TOL,
        sign_pass: sign_dev <= SYMMETRY_TOL,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonotoneReport {
    pub seed: u64,
    pub trials: usize,
    pub sign_symmetric: bool,
    pub monotone: bool,
    /// Whether the sampled evidence matches "monotone ⇔ 1-unconditional".
    pub agree: bool,
    /// Largest `‖x‖ − ‖y‖` seen over pairs with `|x_i| ≤ |y_i|`.
    pub worst_monotonicity_excess: f64,
}

/// Samples sign symmetry and coordinate-wise monotonicity independently and
/// reports whether they agree. Evidence only.
///
/// Monotonicity is probed with shrunken copies `x = y ∘ u`, `u ∈ [−1, 1]ⁿ`,
/// and with sign flips of `y` (which satisfy `|x_i| = |y_i|` in both
/// directions).
pub fn check_monotone_iff_unconditional(spec: &NormSpec, trials: usize, seed: u64) -> Result<MonotoneReport> {
    use rand::Rng;
    let sym = check_symmetries(spec, trials, seed)?;
    let n = spec.dim;
    let mut worst = f64::NEG_INFINITY;
    for i in 0..trials {
        let mut rng = rng_for(seed ^ 0x9e37_79b9_7f4a_7c15, i as u64);
        let y = gaussian_vector(&mut rng, n);
        let ny = spec.norm_eval(&y)?;
        let shrunk: Vec<f64> = y.iter().map(|v| v * rng.random_range(-1.0..=1.0)).collect();
        worst = worst.max(spec.norm_eval(&shrunk)? - ny);
        let s = random_signs(&mut rng, n);
        let flipped: Vec<f64> = s.iter().zip(&y).map(|(a, b)| a * b).collect();
        let nf = spec.norm_eval(&flipped)?;
        worst = worst.max(nf - ny).max(ny - nf);
    }
    let monotone = worst <= MONOTONE_TOL;
    Ok(MonotoneReport {
        seed,
        trials,
        sign_symmetric: sym.sign_pass,
        monotone,
        agree: monotone == sym.sign_pass,
        worst_monotonicity_excess: worst,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::norms::{Hyperplane, NormSpec};
    use crate::young::YoungFunction;

    fn set(points: Vec<Vec<f64>>, d: f64) -> PointSet {
        PointSet { points, claimed_distance: d }
    }

    fn cube(n: usize) -> Vec<Vec<f64>> {
        (0..1u32 << n).map(|mask| (0..n).map(|i| if mask >> i & 1 == 1 { -1.0 } else { 1.0 }).collect()).collect()
    }

    #[test]
    fn cube_vertices_in_linf() {
        let spec = NormSpec::lp(4, f64::INFINITY).unwrap();
        let s = set(cube(4), 2.0);
        let c = certify_equilateral(&s, &spec, EXACT_TOL).unwrap();
        assert!(c.passed());
        assert_eq!(c.m, 16);
        assert_eq!(c.distances.min, 2.0);
        let sc = certify_sign_cube(&s, &[0, 1, 2, 3], &spec, EXACT_TOL).unwrap();
        assert!(sc.passed());
    }

    #[test]
    fn simplex_plus_center_in_l2() {
        let spec = NormSpec::lp(3, 2.0).unwrap();
        let s =
            set(vec![vec![1.0, 0.0, 0.0], vec![0.0, 1.0, 0.0], vec![0.0, 0.0, 1.0], vec![1.0, 1.0, 1.0]], 2f64.sqrt());
        let c = certify_equilateral(&s, &spec, EXACT_TOL).unwrap();
        assert!(c.passed(), "{c:?}");
    }

    #[test]
    fn degenerate_pair_fails() {
        let spec = NormSpec::lp(2, 2.0).unwrap();
        let c = certify_equilateral(&set(vec![vec![1.0, 0.0], vec![2.0, 0.0]], 2.0), &spec, NUMERIC_TOL).unwrap();
        assert_eq!(c.verdict, Verdict::Fail);
        assert!((c.max_relative_deviation - 0.5).abs() < 1e-15);
    }

    #[test]
    fn input_errors() {
        let spec = NormSpec::lp(2, 2.0).unwrap();
        assert!(matches!(certify_equilateral(&set(vec![vec![1.0, 0.0]], 1.0), &spec, 1e-9), Err(Error::Parameter(_))));
        assert!(matches!(
            certify_equilateral(&set(vec![vec![1.0, 0.0], vec![1.0]], 1.0), &spec, 1e-9),
            Err(Error::DimensionMismatch { .. })
        ));
        let h = Hyperplane::new(vec![1.0, 1.0]).unwrap();
        assert!(matches!(
            certify_equilateral(&set(vec![vec![1.0, -1.0], vec![1.0, 1.0]], 2.0), &h, 1e-9),
            Err(Error::Membership(_))
        ));
    }

    #[test]
    fn verdict_is_invariant_under_reordering_and_isometries() {
        let spec = NormSpec::lp(3, f64::INFINITY).unwrap();
        let mut pts = cube(3);
        let a = certify_equilateral(&set(pts.clone(), 2.0), &spec, EXACT_TOL).unwrap();
        pts.reverse();
        let b = certify_equilateral(&set(pts.clone(), 2.0), &spec, EXACT_TOL).unwrap();
        assert_eq!(a.verdict, b.verdict);
        assert_eq!(a.distances, b.distances);
        let mapped: Vec<Vec<f64>> = pts.iter().map(|p| vec![-p[2], p[0], -p[1]]).collect();
        let c = certify_equilateral(&set(mapped, 2.0), &spec, EXACT_TOL).unwrap();
        assert_eq!(c.verdict, a.verdict);
        assert_eq!(certify_equilateral(&set(pts.clone(), 2.0), &spec, EXACT_TOL).unwrap(), b);
    }

    #[test]
    fn sign_cube_rejects_broken_structure() {
        let spec = NormSpec::lp(2, f64::INFINITY).unwrap();
        let s = set(vec![vec![1.0, 0.5], vec![1.0, -0.5]], 2.0);
        let c = certify_sign_cube(&s, &[0], &spec, EXACT_TOL).unwrap();
        assert_eq!(c.verdict, Verdict::Fail);
    }

    #[test]
    fn symmetry_examples() {
        let owl = check_symmetries(&NormSpec::owl(vec![3.0, 2.0, 1.0]).unwrap(), 200, 0).unwrap();
        assert!(owl.permutation_pass && owl.sign_pass);
        let pm = check_symmetries(&NormSpec::perm_mix(2, 2.0, 1.0, 0.5).unwrap(), 200, 0).unwrap();
        assert!(pm.permutation_pass);
        assert!(!pm.sign_pass && pm.sign_max_deviation > 0.0);
        for p in [1.0, 2.0, 3.0, f64::INFINITY] {
            let r = check_symmetries(&NormSpec::lp(4, p).unwrap(), 200, 1).unwrap();
            assert!(r.permutation_pass && r.sign_pass);
        }
    }

    #[test]
    fn monotonicity_agrees_with_unconditionality() {
        let r = check_monotone_iff_unconditional(&NormSpec::lp(3, 3.0).unwrap(), 300, 0).unwrap();
        assert!(r.sign_symmetric && r.monotone && r.agree);
        let r = check_monotone_iff_unconditional(&NormSpec::perm_mix(3, 2.0, 1.0, 1.0).unwrap(), 300, 0).unwrap();
        assert!(!r.sign_symmetric && !r.monotone && r.agree, "{r:?}");
        let mo = NormSpec::luxemburg(vec![
            YoungFunction::power(2.0).unwrap(),
            YoungFunction::indicator(0.8).unwrap(),
            YoungFunction::piecewise_linear(vec![0.2, 1.0], vec![1.0, 2.0], None).unwrap(),
        ])
        .unwrap();
        let r = check_monotone_iff_unconditional(&mo, 300, 0).unwrap();
        assert!(r.sign_symmetric && r.monotone && r.agree, "{r:?}");
    }
}
