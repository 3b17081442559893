//! Constructive equilateral sets: `n+1` points in permutation-invariant and
//! Musielak-Orlicz spaces, `2^{n−k}` points in hyperplane subspaces of `ℓ∞ⁿ`,
//! and the closed-form radius `R(p, n)` for `ℓp`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::norms::{CanonicalHyperplane, Hyperplane, Norm, NormFamily, NormSpec};
use crate::solve1d::{bisect_root, golden_section_min};
use crate::verify::{self, EquilateralCertificate, NUMERIC_TOL};
use crate::young::YoungFunction;

/// Point sets beyond this size are certified structurally (see
/// [`verify::certify_sign_cube`]) instead of pair by pair.
pub const PAIRWISE_CERT_LIMIT: usize = 4096;
/// Cap on `2^{n−k}·n` for the subspace construction.
pub const MAX_SUBSPACE_ENTRIES: usize = 1 << 25;
/// Regularization indices tried are `2^K_MIN_LOG2, …, 2^K_MAX_LOG2`.
pub const K_MIN_LOG2: u32 = 10;
pub const K_MAX_LOG2: u32 = 30;
/// Grid cells scanned for the first crossing of `h(t₁) = 1`.
const ROOT_SCAN_CELLS: usize = 64;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointSet {
    pub points: Vec<Vec<f64>>,
    pub claimed_distance: f64,
}

impl PointSet {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.points.first().map_or(0, Vec::len)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ConstructionKind {
    PermutationInvariant,
    MusielakOrlicz,
    LinftySubspace,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ConstructionParameters {
    PermutationInvariant {
        /// `‖e₁ − e₂‖`.
        c: f64,
        t0: f64,
        /// `f(1/n)` where `f(t) = ‖(t−1, t, …, t)‖`; never above `(n−1)c/n`.
        f_at_inv_n: f64,
        residual: f64,
    },
    MusielakOrlicz {
        /// `f_i(c_i) = 1/2` for the (possibly regularized) functions.
        c: Vec<f64>,
        t: Vec<f64>,
        /// Regularization index, absent when no function needed it.
        regularization_k: Option<u64>,
        regularized: Vec<bool>,
        /// Whether the set is the extrapolation `2·P_k − P_{k/2}`.
        #[serde(default)]
        extrapolated: bool,
    },
    LinftySubspace {
        k: usize,
        canonical: CanonicalHyperplane,
        /// Original coordinates carrying the `±1` pattern.
        free_coordinates: Vec<usize>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Construction {
    pub kind: ConstructionKind,
    pub set: PointSet,
    pub parameters: ConstructionParameters,
}

impl Construction {
    /// Certificate under `norm` with the tolerance appropriate for the
    /// construction (1e-12 for the exact `ℓ∞` one, 1e-9 otherwise), switching
    /// to the structural sign-cube check for very large sets.
    pub fn certify(&self, norm: &dyn Norm, tol: Option<f64>) -> Result<EquilateralCertificate> {
        let tol = tol.unwrap_or(match self.kind {
            ConstructionKind::LinftySubspace => verify::EXACT_TOL,
            _ => NUMERIC_TOL,
        });
        match &self.parameters {
            ConstructionParameters::LinftySubspace { free_coordinates, .. } if self.set.len() > PAIRWISE_CERT_LIMIT => {
                verify::certify_sign_cube(&self.set, free_coordinates, norm, tol)
            }
            _ => verify::certify_equilateral(&self.set, norm, tol),
        }
    }
}

fn basis(n: usize, i: usize, scale: f64) -> Vec<f64> {
    let mut e = vec![0.0; n];
    e[i] = scale;
    e
}

/// `{e₁, …, e_n, t₀(1, …, 1)}` with common distance `c = ‖e₁ − e₂‖`, for a
/// permutation-invariant norm.
///
/// By permutation invariance `‖t₀·1 − e_i‖ = f(t₀)` with
/// `f(t) = ‖(t−1, t, …, t)‖`; the triangle inequality gives
/// `f(1/n) ≤ (n−1)c/n < c`, and `f(t) → ∞`, so bisection brackets a root.
pub fn perm_invariant_equilateral(spec: &NormSpec) -> Result<Construction> {
    spec.validate()?;
    let n = spec.dim;
    if !spec.flags().permutation_invariant {
        return Err(Error::Capability("construction needs a permutation-invariant norm".into()));
    }
    if n < 2 {
        return Err(Error::Parameter("dimension must be >= 2".into()));
    }
    let mut d = basis(n, 0, 1.0);
    d[1] = -1.0;
    let c = spec.eval(&d);
    let mut buf = vec![0.0; n];
    let mut f = |t: f64| {
        buf.iter_mut().for_each(|v| *v = t);
        buf[0] = t - 1.0;
        spec.eval(&buf)
    };
    let lo = 1.0 / n as f64;
    let f_lo = f(lo);
    if f_lo >= c {
        return Err(Error::Internal(format!("bracket failure: f(1/n) = {f_lo} >= c = {c}")));
    }
    let mut hi = 2.0;
    while f(hi) < c {
        hi *= 2.0;
        if !hi.is_finite() || hi > 1e300 {
            return Err(Error::Internal("bracket failure: f(t) stays below c".into()));
        }
    }
    let t0 = bisect_root(lo, hi, 0.0, |t| f(t) - c);
    let residual = (f(t0) - c).abs();
    if residual > 1e-11 * c {
        return Err(Error::Internal(format!("root residual {residual:e} exceeds 1e-11·c")));
    }
    let mut points: Vec<Vec<f64>> = (0..n).map(|i| basis(n, i, 1.0)).collect();
    points.push(vec![t0; n]);
    Ok(Construction {
        kind: ConstructionKind::PermutationInvariant,
        set: PointSet { points, claimed_distance: c },
        parameters: ConstructionParameters::PermutationInvariant { c, t0, f_at_inv_n: f_lo, residual },
    })
}

/// Core of the Musielak-Orlicz construction for strictly increasing,
/// finite-valued functions: returns `(c, t)`.
fn mo_core(fs: &[YoungFunction]) -> Result<(Vec<f64>, Vec<f64>)> {
    let c: Vec<f64> = fs.iter().map(|f| f.inverse_solve(0.5)).collect::<Result<_>>()?;
    // g_i(x) = f_i(c_i − x) − f_i(x) decreases from 1/2 to −1/2 on [0, c_i].
    let g = |i: usize, x: f64| fs[i].value((c[i] - x).max(0.0)) - fs[i].value(x);
    let g_inv = |i: usize, y: f64| {
        if y >= 0.5 {
            0.0
        } else if y <= -0.5 {
            c[i]
        } else {
            bisect_root(0.0, c[i], 0.0, |x| y - g(i, x))
        }
    };
    let solve_t = |t1: f64| {
        let y = g(0, t1);
        let mut t = Vec::with_capacity(fs.len());
        t.push(t1);
        t.extend((1..fs.len()).map(|j| g_inv(j, y)));
        t
    };
    // h(t₁) = g₁(t₁) + Σ_j f_j(t_j): h(0) = 1/2, h(c₁) = (n−1)/2 ≥ 1.
    let h = |t1: f64| {
        let t = solve_t(t1);
        g(0, t1) + fs.iter().zip(&t).map(|(f, x)| f.value(*x)).sum::<f64>() - 1.0
    };
    let mut lo = 0.0;
    let mut hi = c[0];
    for cell in 1..=ROOT_SCAN_CELLS {
        let x = c[0] * cell as f64 / ROOT_SCAN_CELLS as f64;
        if h(x) >= 0.0 {
            hi = x;
            break;
        }
        lo = x;
    }
    let t1 = bisect_root(lo, hi, 0.0, h);
    let t = solve_t(t1);
    Ok((c, t))
}

/// `{c₁e₁, …, c_ne_n, t}` at common distance 1 in the Luxemburg norm built
/// from `functions` (`n ≥ 3`).
///
/// Functions that are not strictly increasing and finite-valued are replaced
/// by their regularizations `f_k` with `k = 2¹⁰, 2¹¹, …` until the point set
/// certifies at 1e-9 against the original norm (up to `k = 2³⁰`); from the
/// second index on, the extrapolated set `2·P_k − P_{k/2}` is tried as well.
/// The claimed distance is the midrange of the original-norm distances.
pub fn musielak_orlicz_equilateral(functions: &[YoungFunction]) -> Result<Construction> {
    let n = functions.len();
    if n < 3 {
        return Err(Error::Parameter(format!("need n >= 3 coordinate functions, got {n}")));
    }
    let original = NormSpec::luxemburg(functions.to_vec())?;
    let regularized: Vec<bool> = functions.iter().map(|f| !f.is_strictly_increasing_finite()).collect();
    let build = |fs: &[YoungFunction]| -> Result<(Vec<f64>, Vec<f64>, PointSet)> {
        let (c, t) = mo_core(fs)?;
        let mut points: Vec<Vec<f64>> = (0..n).map(|i| basis(n, i, c[i])).collect();
        points.push(t.clone());
        Ok((c, t, PointSet { points, claimed_distance: 1.0 }))
    };
    if !regularized.iter().any(|r| *r) {
        let (c, t, set) = build(functions)?;
        return Ok(Construction {
            kind: ConstructionKind::MusielakOrlicz,
            set,
            parameters: ConstructionParameters::MusielakOrlicz {
                c,
                t,
                regularization_k: None,
                regularized,
                extrapolated: false,
            },
        });
    }
    // The regularized sets approach the limit with an O(1/k) error; one
    // Richardson step cancels the leading term long before round-off in the
    // steep tails (slope ≈ k) takes over.
    let certify_midrange = |set: &mut PointSet| -> Result<EquilateralCertificate> {
        let probe = verify::certify_equilateral(set, &original, NUMERIC_TOL)?;
        set.claimed_distance = 0.5 * (probe.distances.min + probe.distances.max);
        verify::certify_equilateral(set, &original, NUMERIC_TOL)
    };
    let extrapolate = |a: &[f64], b: &[f64]| -> Vec<f64> { a.iter().zip(b).map(|(x, y)| 2.0 * x - y).collect() };
    let mut last_dev = f64::NAN;
    let mut previous: Option<(Vec<f64>, Vec<f64>)> = None;
    for log_k in K_MIN_LOG2..=K_MAX_LOG2 {
        let k = 1u64 << log_k;
        let fs: Vec<YoungFunction> = functions
            .iter()
            .zip(&regularized)
            .map(|(f, r)| if *r { f.regularize(k) } else { Ok(f.clone()) })
            .collect::<Result<_>>()?;
        let (c, t, mut set) = build(&fs)?;
        let cert = certify_midrange(&mut set)?;
        last_dev = cert.max_relative_deviation;
        if cert.passed() {
            return Ok(Construction {
                kind: ConstructionKind::MusielakOrlicz,
                set,
                parameters: ConstructionParameters::MusielakOrlicz {
                    c,
                    t,
                    regularization_k: Some(k),
                    regularized,
                    extrapolated: false,
                },
            });
        }
        if let Some((pc, pt)) = previous.replace((c.clone(), t.clone())) {
            let (ec, et) = (extrapolate(&c, &pc), extrapolate(&t, &pt));
            if ec.iter().chain(&et).all(|v| v.is_finite() && *v >= 0.0) {
                let mut points: Vec<Vec<f64>> = (0..n).map(|i| basis(n, i, ec[i])).collect();
                points.push(et.clone());
                let mut set = PointSet { points, claimed_distance: 1.0 };
                let cert = certify_midrange(&mut set)?;
                last_dev = last_dev.min(cert.max_relative_deviation);
                if cert.passed() {
                    return Ok(Construction {
                        kind: ConstructionKind::MusielakOrlicz,
                        set,
                        parameters: ConstructionParameters::MusielakOrlicz {
                            c: ec,
                            t: et,
                            regularization_k: Some(k),
                            regularized,
                            extrapolated: true,
                        },
                    });
                }
            }
        }
    }
    Err(Error::Solver {
        message: format!("regularized sets did not certify at 1e-9 up to k = 2^{K_MAX_LOG2}"),
        iterations: (K_MAX_LOG2 - K_MIN_LOG2 + 1) as usize,
        residual: last_dev,
    })
}

/// Whether the `k` largest canonical coefficients dominate the rest.
fn partition_ok(sorted: &[f64], k: usize) -> bool {
    let m = sorted.len() - k;
    let rest: f64 = sorted[..m].iter().sum();
    let top: f64 = sorted[m..].iter().sum();
    top >= rest
}

/// Smallest valid `k` for ascending nonnegative coefficients.
pub fn minimal_valid_k(sorted: &[f64]) -> usize {
    (1..=sorted.len()).find(|&k| partition_ok(sorted, k)).unwrap_or(sorted.len())
}

/// `2^{n−k}` points at mutual `ℓ∞` distance exactly 2 on the hyperplane
/// `⟨a, x⟩ = 0`.
///
/// In canonical coordinates (`0 ≤ a₁ ≤ … ≤ a_n`) the points are
/// `(c, −h(c), …, −h(c))` for `c ∈ {±1}^{n−k}`, with
/// `h(c) = Σ_{i≤n−k} a_i c_i / Σ_{i>n−k} a_i`; the partition inequality gives
/// `|h(c)| ≤ 1`.
pub fn linfty_subspace_equilateral(h: &Hyperplane, k: Option<usize>) -> Result<Construction> {
    let canon = h.canonicalize();
    let a = &canon.coefficients;
    let n = a.len();
    let k = match k {
        Some(k) => {
            if k == 0 || k > n || !partition_ok(a, k) {
                return Err(Error::Parameter(format!("k = {k} does not give a valid partition")));
            }
            k
        }
        None => minimal_valid_k(a),
    };
    if k >= n {
        return Err(Error::Parameter(format!("k = {k} leaves no free coordinates (n = {n})")));
    }
    let m = n - k;
    if m > 62 || (1usize << m).saturating_mul(n) > MAX_SUBSPACE_ENTRIES {
        return Err(Error::Scale(format!("2^{m} points in dimension {n} exceed the output cap")));
    }
    let denom: f64 = a[m..].iter().sum();
    assert!(denom > 0.0, "partition inequality with a != 0 forces a positive denominator");
    let points: Vec<Vec<f64>> = (0..1u64 << m)
        .map(|mask| {
            let mut y = vec![0.0; n];
            for (i, yi) in y.iter_mut().enumerate().take(m) {
                *yi = if mask >> i & 1 == 1 { -1.0 } else { 1.0 };
            }
            let num: f64 = a[..m].iter().zip(&y).map(|(a, c)| a * c).sum();
            let hv = (num / denom).clamp(-1.0, 1.0);
            y[m..].iter_mut().for_each(|v| *v = -hv);
            canon.to_original(&y)
        })
        .collect();
    let free_coordinates = canon.order[..m].to_vec();
    Ok(Construction {
        kind: ConstructionKind::LinftySubspace,
        set: PointSet { points, claimed_distance: 2.0 },
        parameters: ConstructionParameters::LinftySubspace { k, canonical: canon, free_coordinates },
    })
}

/// Picks the construction that applies to `spec`.
///
/// Hyperplane subspaces use the sign-cube construction; Luxemburg
/// Musielak-Orlicz norms with `n ≥ 3` the regularized one; any other
/// permutation-invariant norm the root-finding one.
pub fn construct_for(spec: &NormSpec, k: Option<usize>) -> Result<Construction> {
    spec.validate()?;
    if let Some(h) = spec.hyperplane() {
        return linfty_subspace_equilateral(&h, k);
    }
    if k.is_some() {
        return Err(Error::Parameter("k only applies to linfty_hyperplane norms".into()));
    }
    if let Some(fs) = spec.luxemburg_functions() {
        if fs.len() >= 3 {
            return musielak_orlicz_equilateral(fs);
        }
    }
    if spec.flags().permutation_invariant {
        return perm_invariant_equilateral(spec);
    }
    let what = match &spec.family {
        NormFamily::MusielakOrlicz { .. } => "non-identical Amemiya or two-dimensional Musielak-Orlicz norms",
        _ => "norms without permutation invariance",
    };
    Err(Error::Capability(format!("no construction available for {what}")))
}

fn log_add_exp(a: f64, b: f64) -> f64 {
    let m = a.max(b);
    if m == f64::NEG_INFINITY {
        return m;
    }
    m + ((a - m).exp() + (b - m).exp()).ln()
}

/// `ln((1 + (1+θ)^p) / (2 + (n−2)θ^p))` as a function of `s = ln θ`.
fn radius_log_ratio(p: f64, n: u64, s: f64) -> f64 {
    let theta = s.exp();
    let num = log_add_exp(0.0, p * theta.ln_1p());
    let den = log_add_exp(std::f64::consts::LN_2, ((n - 2) as f64).ln() + p * s);
    num - den
}

/// `R(p, n) = max_{θ>0} ((1 + (1+θ)^p) / (2 + (n−2)θ^p))^{1/p}`.
///
/// Coarse scan of `ln θ ∈ [−40, 10]`, then golden-section refinement in the
/// best cell (work in log space keeps large `p` finite).
pub fn radius_lp(p: f64, n: u64) -> Result<f64> {
    if !(p.is_finite() && p > 1.0) {
        return Err(Error::Parameter(format!("p must be in (1, inf), got {p}")));
    }
    if n <= 2 {
        return Err(Error::Parameter(format!("n must be > 2, got {n}")));
    }
    const LO: f64 = -40.0;
    const HI: f64 = 10.0;
    const CELLS: usize = 2000;
    let step = (HI - LO) / CELLS as f64;
    let g = |s: f64| radius_log_ratio(p, n, s);
    let best = (0..=CELLS)
        .map(|i| (i, g(LO + step * i as f64)))
        .fold((0, f64::NEG_INFINITY), |acc, x| if x.1 > acc.1 { x } else { acc })
        .0;
    let a = LO + step * best.saturating_sub(1) as f64;
    let b = (LO + step * (best + 1) as f64).min(HI);
    let r = golden_section_min(a, b, 1e-12, |s| -g(s));
    let value = (-r.value).max(g(LO + step * best as f64));
    Ok((value / p).exp())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::norms::NormSpec;

    #[test]
    fn l2_n3_gives_unit_corner() {
        let c = perm_invariant_equilateral(&NormSpec::lp(3, 2.0).unwrap()).unwrap();
        assert_eq!(c.set.len(), 4);
        assert!((c.set.claimed_distance - 2f64.sqrt()).abs() < 1e-15);
        for v in &c.set.points[3] {
            assert!((v - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn l1_n3_root() {
        let c = perm_invariant_equilateral(&NormSpec::lp(3, 1.0).unwrap()).unwrap();
        assert_eq!(c.set.claimed_distance, 2.0);
        // f(t) = |t−1| + 2t is 1 + t on [1/3, 1]: root t = 1.
        assert!((c.set.points[3][0] - 1.0).abs() < 1e-12);
        assert!(c.certify(&NormSpec::lp(3, 1.0).unwrap(), Some(1e-12)).unwrap().passed());
    }

    #[test]
    fn linf_via_perm_mix_n2() {
        let spec = NormSpec::perm_mix(2, f64::INFINITY, 1.0, 0.0).unwrap();
        let c = perm_invariant_equilateral(&spec).unwrap();
        assert_eq!(c.set.len(), 3);
        assert!(c.certify(&spec, Some(1e-11)).unwrap().passed());
    }

    #[test]
    fn rejects_non_invariant() {
        let spec =
            NormSpec::luxemburg(vec![YoungFunction::power(2.0).unwrap(), YoungFunction::power(3.0).unwrap()]).unwrap();
        assert!(matches!(perm_invariant_equilateral(&spec), Err(Error::Capability(_))));
    }

    #[test]
    fn mo_l1_example() {
        let fs = vec![YoungFunction::power(1.0).unwrap(); 3];
        let c = musielak_orlicz_equilateral(&fs).unwrap();
        for v in &c.set.points[3] {
            assert!((v - 0.5).abs() < 1e-12, "{v}");
        }
        assert_eq!(c.set.points[0], vec![0.5, 0.0, 0.0]);
    }

    #[test]
    fn mo_power_and_mixed() {
        let fs = vec![YoungFunction::power(2.0).unwrap(); 4];
        let c = musielak_orlicz_equilateral(&fs).unwrap();
        let spec = NormSpec::luxemburg(fs).unwrap();
        let cert = c.certify(&spec, None).unwrap();
        assert!(cert.passed() && cert.m == 5, "{cert:?}");
        let fs: Vec<_> = [1.0, 2.0, 3.0].iter().map(|p| YoungFunction::power(*p).unwrap()).collect();
        let c = musielak_orlicz_equilateral(&fs).unwrap();
        assert!(c.certify(&NormSpec::luxemburg(fs).unwrap(), None).unwrap().passed());
        if let ConstructionParameters::MusielakOrlicz { c, t, .. } = &c.parameters {
            for (ti, ci) in t.iter().zip(c) {
                assert!((0.0..=*ci).contains(ti));
            }
        }
    }

    #[test]
    fn mo_rejects_small_n() {
        let fs = vec![YoungFunction::power(2.0).unwrap(); 2];
        assert!(matches!(musielak_orlicz_equilateral(&fs), Err(Error::Parameter(_))));
    }

    #[test]
    fn mo_with_indicator_regularizes() {
        let fs = vec![
            YoungFunction::indicator(1.0).unwrap(),
            YoungFunction::power(2.0).unwrap(),
            YoungFunction::piecewise_linear(vec![0.0, 0.5], vec![0.0, 2.0], Some(1.5)).unwrap(),
        ];
        let c = musielak_orlicz_equilateral(&fs).unwrap();
        let cert = c.certify(&NormSpec::luxemburg(fs).unwrap(), None).unwrap();
        assert!(cert.passed(), "{cert:?}");
        assert!(matches!(c.parameters, ConstructionParameters::MusielakOrlicz { regularization_k: Some(_), .. }));
    }

    #[test]
    fn subspace_example_four_ones() {
        let h = Hyperplane::new(vec![1.0; 4]).unwrap();
        let c = linfty_subspace_equilateral(&h, Some(2)).unwrap();
        let expected = vec![
            vec![1.0, 1.0, -1.0, -1.0],
            vec![-1.0, 1.0, 0.0, 0.0],
            vec![1.0, -1.0, 0.0, 0.0],
            vec![-1.0, -1.0, 1.0, 1.0],
        ];
        assert_eq!(c.set.points, expected);
        assert!(c.certify(&h, None).unwrap().passed());
    }

    #[test]
    fn subspace_coordinate_hyperplane_and_default_k() {
        let h = Hyperplane::new(vec![0.0, 0.0, 0.0, 1.0]).unwrap();
        let c = linfty_subspace_equilateral(&h, Some(1)).unwrap();
        assert_eq!(c.set.len(), 8);
        assert!(c.set.points.iter().all(|p| p[3] == 0.0));
        let h = Hyperplane::new(vec![1.0, 1.0, 1.0]).unwrap();
        let c = linfty_subspace_equilateral(&h, None).unwrap();
        assert_eq!(c.set.len(), 2);
        assert!(matches!(
            linfty_subspace_equilateral(&Hyperplane::new(vec![1.0; 4]).unwrap(), Some(1)),
            Err(Error::Parameter(_))
        ));
    }

    #[test]
    fn radius_examples() {
        let r = radius_lp(2.0, 100).unwrap();
        assert!(r > 1.0 && r < 1.01);
        assert!(radius_lp(2.0, 101).unwrap() <= r);
        assert!(radius_lp(1.0, 10).is_err());
        assert!(radius_lp(2.0, 2).is_err());
        assert!(radius_lp(200.0, 5).unwrap().is_finite());
    }
}
