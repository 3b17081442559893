//! Equilateral sets in norms close to a structured one, via the fixed-point
//! map `φ_{ij}(ε) = 1 + ε_{ij} − ‖p_i(ε) − p_j(ε)‖_Y` on a box `[0, β]^N`.
//!
//! Three variants share the machinery: smooth symmetric base norms,
//! Musielak-Orlicz base norms with `f_i'(0) = 0`, and hyperplane subspaces of
//! `ℓ∞ⁿ` at distance at most 2. The base norm is normalized per variant and the
//! target norm `Y` is rescaled by a positive scalar so that `‖·‖_Y ≤ ‖·‖_X`
//! on the sampled directions (see [`check_sandwich`]).

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::construct::PointSet;
use crate::error::{Error, Result};
use crate::norms::{find_eps0, supporting_functional_symmetric, CanonicalHyperplane, Hyperplane, NormSpec};
use crate::sampling::{nonzero_gaussian, rng_for};
use crate::verify::{self, EquilateralCertificate, NUMERIC_TOL};
use crate::young::{Side, YoungFunction};

/// Out-of-box excursions of `φ` beyond this raise a parameterization alarm.
pub const SELF_MAP_TOL: f64 = 1e-12;
pub const RESIDUAL_TOL: f64 = 1e-10;
pub const MAX_DAMPED_ITERATIONS: usize = 100_000;
pub const DAMPING: f64 = 0.5;
/// Relative slack of the sandwich check.
pub const SANDWICH_TOL: f64 = 1e-9;
pub const DEFAULT_SANDWICH_SAMPLES: usize = 1000;
pub const DEFAULT_SMOOTHNESS_BUDGET: usize = 200;
/// Damped iteration is declared stagnant when the best residual fails to
/// shrink by 10% over this many steps.
const STAGNATION_WINDOW: usize = 2000;
const MAX_BROYDEN_ITERATIONS: usize = 500;
/// Pair loops shorter than this run sequentially.
const PARALLEL_PAIRS: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Variant {
    Symmetric,
    Orlicz,
    Subspace,
}

impl std::str::FromStr for Variant {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "symmetric" => Ok(Variant::Symmetric),
            "orlicz" => Ok(Variant::Orlicz),
            "subspace" => Ok(Variant::Subspace),
            _ => Err(Error::Parameter(format!("unknown variant '{s}' (symmetric|orlicz|subspace)"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SymmetricParameters {
    /// `‖e₁‖` of the original base norm; the base is divided by it.
    pub normalization: f64,
    pub eps0: f64,
    /// `‖(c, c, 0, …, 0)‖ = 1`.
    pub c: f64,
    pub epsilon: f64,
    pub gamma: f64,
    pub beta: f64,
    pub r_lower: f64,
    pub heuristic_flags: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrliczParameters {
    /// Internal coordinate `q` is original coordinate `order[q]`; the `m`
    /// functions that never reach 1/2 come first.
    pub order: Vec<usize>,
    pub m: usize,
    /// Base norm multiplier making every `‖e_i‖ ≤ 1` (1 when already so).
    pub dilation: f64,
    /// `c_i` in internal order, for the dilated functions.
    pub c: Vec<f64>,
    pub k: f64,
    pub epsilon: f64,
    pub beta: f64,
    pub gammas: Vec<f64>,
    pub r_lower: f64,
    pub heuristic_flags: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubspaceParameters {
    pub k: usize,
    /// Number of points, `n − k`.
    pub m: usize,
    pub canonical: CanonicalHyperplane,
    /// `b_j = a_j / a_m` (or 0), canonical order.
    pub b: Vec<f64>,
    pub beta: f64,
    pub r_lower: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "variant", rename_all = "snake_case")]
pub enum Parameters {
    Symmetric(SymmetricParameters),
    Orlicz(OrliczParameters),
    Subspace(SubspaceParameters),
}

impl Parameters {
    pub fn r_lower(&self) -> f64 {
        match self {
            Parameters::Symmetric(p) => p.r_lower,
            Parameters::Orlicz(p) => p.r_lower,
            Parameters::Subspace(p) => p.r_lower,
        }
    }

    pub fn beta(&self) -> f64 {
        match self {
            Parameters::Symmetric(p) => p.beta,
            Parameters::Orlicz(p) => p.beta,
            Parameters::Subspace(p) => p.beta,
        }
    }

    pub fn heuristic_flags(&self) -> Vec<String> {
        match self {
            Parameters::Symmetric(p) => p.heuristic_flags.clone(),
            Parameters::Orlicz(p) => p.heuristic_flags.clone(),
            Parameters::Subspace(_) => Vec::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SandwichReport {
    pub samples: usize,
    pub r: f64,
    /// Range of `‖x‖_target / ‖x‖_base` over the sampled directions.
    pub min_ratio: f64,
    pub max_ratio: f64,
    pub pass: bool,
}

/// Reports the empirical range of `‖x‖_target / ‖x‖_base`; passes iff it lies
/// in `[1, R]` up to a relative 1e-9. Sampling only, not a certificate.
///
/// With `base = Y` and `target = X` this checks `‖x‖_Y ≤ ‖x‖_X ≤ R‖x‖_Y`.
pub fn check_sandwich(base: &NormSpec, target: &NormSpec, r: f64, samples: usize, seed: u64) -> Result<SandwichReport> {
    sandwich_on(base, target, r, &sample_directions(base.dim, samples, seed, None))
}

fn sandwich_on(base: &NormSpec, target: &NormSpec, r: f64, dirs: &[Vec<f64>]) -> Result<SandwichReport> {
    if base.dim != target.dim {
        return Err(Error::DimensionMismatch { expected: base.dim, got: target.dim });
    }
    if !(r.is_finite() && r > 0.0) {
        return Err(Error::Parameter(format!("R must be positive, got {r}")));
    }
    let (lo, hi) = ratio_range(target, base, dirs);
    Ok(SandwichReport {
        samples: dirs.len(),
        r,
        min_ratio: lo,
        max_ratio: hi,
        pass: lo >= 1.0 - SANDWICH_TOL && hi <= r * (1.0 + SANDWICH_TOL),
    })
}

fn ratio_range(num: &NormSpec, den: &NormSpec, dirs: &[Vec<f64>]) -> (f64, f64) {
    dirs.iter().fold((f64::INFINITY, 0.0f64), |(lo, hi), x| {
        let r = num.eval(x) / den.eval(x);
        (lo.min(r), hi.max(r))
    })
}

/// Basis vectors, pairwise basis sums/differences and Gaussian directions,
/// optionally projected to a hyperplane.
fn sample_directions(n: usize, samples: usize, seed: u64, plane: Option<&Hyperplane>) -> Vec<Vec<f64>> {
    let mut dirs = Vec::new();
    for i in 0..n {
        let mut e = vec![0.0; n];
        e[i] = 1.0;
        dirs.push(e);
        for j in i + 1..n.min(i + 4) {
            for s in [1.0, -1.0] {
                let mut v = vec![0.0; n];
                v[i] = 1.0;
                v[j] = s;
                dirs.push(v);
            }
        }
    }
    for i in 0..samples {
        dirs.push(nonzero_gaussian(&mut rng_for(seed ^ 0x5a4d_5749_4348, i as u64), n));
    }
    if let Some(h) = plane {
        dirs = dirs.iter().map(|d| h.project(d)).filter(|d| d.iter().any(|v| v.abs() > 1e-12)).collect();
    }
    dirs
}

/// `f(s·t)` for a Young function `f`, as needed after dilating the base norm.
#[derive(Clone, Copy)]
struct Dilated<'a> {
    f: &'a YoungFunction,
    s: f64,
}

impl Dilated<'_> {
    fn value(&self, t: f64) -> f64 {
        self.f.value(self.s * t)
    }
    fn left(&self, t: f64) -> f64 {
        self.s * self.f.one_sided(self.s * t, Side::Left)
    }
    fn right(&self, t: f64) -> f64 {
        self.s * self.f.one_sided(self.s * t, Side::Right)
    }
}

fn unit(n: usize, i: usize) -> Vec<f64> {
    let mut e = vec![0.0; n];
    e[i] = 1.0;
    e
}

/// Parameters for a smooth symmetric base norm given `ε₀`.
///
/// The base is first divided by `‖e₁‖`; then `ε = ε₀/(3n)`, `γ = c − ε`,
/// `β = 3ε`, and both `‖(γ, γ, β, …, β)‖ ≤ 1` and
/// `R = ‖(γ+β, γ, 0, …, 0)‖ ≥ 1 + ε₀/(6n)` are verified by evaluation.
pub fn select_parameters_symmetric_with_eps0(base: &NormSpec, eps0: f64) -> Result<SymmetricParameters> {
    let flags = base.flags();
    if !(flags.smooth && flags.symmetric()) {
        return Err(Error::Capability(format!("symmetric variant needs a smooth symmetric base (flags: {flags:?})")));
    }
    let n = base.dim;
    if n < 2 {
        return Err(Error::Parameter("dimension must be >= 2".into()));
    }
    if !(eps0.is_finite() && eps0 > 0.0) {
        return Err(Error::Parameter(format!("eps0 must be positive, got {eps0}")));
    }
    let normalization = base.eval(&unit(n, 0));
    let x = base.clone().times(1.0 / normalization)?;
    let c = supporting_functional_symmetric(&x)?.c;
    let epsilon = eps0 / (3.0 * n as f64);
    let gamma = c - epsilon;
    let beta = 3.0 * epsilon;
    let mut upper = vec![beta; n];
    upper[0] = gamma;
    upper[1] = gamma;
    let upper_norm = x.eval(&upper);
    let mut lower = vec![0.0; n];
    lower[0] = gamma + beta;
    lower[1] = gamma;
    let r_lower = x.eval(&lower);
    let bound = 1.0 + eps0 / (6.0 * n as f64);
    if gamma <= 0.0 || upper_norm > 1.0 || r_lower < bound {
        return Err(Error::ParameterSelection(format!(
            "eps0 = {eps0:e}: ||(g,g,b,..)|| = {upper_norm:.17e} (need <= 1), R = {r_lower:.17e} (need >= {bound:.17e})"
        )));
    }
    Ok(SymmetricParameters {
        normalization,
        eps0,
        c,
        epsilon,
        gamma,
        beta,
        r_lower,
        heuristic_flags: vec!["rho-estimate-only".into()],
    })
}

/// [`select_parameters_symmetric_with_eps0`] with `ε₀` from [`find_eps0`].
pub fn select_parameters_symmetric(base: &NormSpec, budget: usize, seed: u64) -> Result<SymmetricParameters> {
    let flags = base.flags();
    if !(flags.smooth && flags.symmetric()) {
        return Err(Error::Capability(format!("symmetric variant needs a smooth symmetric base (flags: {flags:?})")));
    }
    let n = base.dim;
    let x = base.clone().times(1.0 / base.eval(&unit(n, 0)))?;
    let eps0 = find_eps0(&x, n, budget, seed)?;
    select_parameters_symmetric_with_eps0(base, eps0)
}

/// Parameters for a Luxemburg base norm whose functions have `f_i⁺(0) = 0`.
///
/// `K` is twice the largest ratio `f_j⁻(c_j)/f_i⁺(c_i)` over non-degenerate
/// `i < j` (1 if there is none), and `ε` is halved from 1 until both
/// sufficient conditions on `Σ_k f_k((K+1)ε)` and the defining inequalities
/// themselves hold.
pub fn select_parameters_orlicz(functions: &[YoungFunction]) -> Result<OrliczParameters> {
    let n = functions.len();
    if n < 2 {
        return Err(Error::Parameter("need at least 2 coordinate functions".into()));
    }
    for (i, f) in functions.iter().enumerate() {
        f.validate()?;
        let d = f.one_sided(0.0, Side::Right);
        if d != 0.0 {
            return Err(Error::Hypothesis(format!("f_{i}'(0) = {d}, must be 0")));
        }
    }
    let mut heuristic_flags = Vec::new();
    let degenerate: Vec<bool> =
        functions.iter().map(|f| matches!(f.inverse_solve(0.5), Err(Error::NoSolution(_)))).collect();
    let mut order: Vec<usize> = (0..n).filter(|&i| degenerate[i]).collect();
    let m = order.len();
    order.extend((0..n).filter(|&i| !degenerate[i]));
    if m == n {
        heuristic_flags.push("all-coordinates-degenerate".into());
    }
    let luxemburg = NormSpec::luxemburg(functions.to_vec())?;
    let max_unit = (0..n).map(|i| luxemburg.eval(&unit(n, i))).fold(0.0, f64::max);
    // ‖e_i‖ ≤ 1 suffices: the monotonicity argument only needs R⁻¹‖e_i‖ < 1.
    let dilation = if max_unit > 1.0 { 1.0 / max_unit } else { 1.0 };
    let x = if dilation == 1.0 { luxemburg } else { luxemburg.times(dilation)? };
    let fs: Vec<Dilated> = order.iter().map(|&i| Dilated { f: &functions[i], s: dilation }).collect();
    let c: Vec<f64> = order
        .iter()
        .enumerate()
        .map(|(q, &i)| {
            let f = &functions[i];
            if q < m {
                // Largest c with s·c still inside the finite domain.
                let b = f.finite_threshold();
                let mut ci = b / dilation;
                while dilation * ci > b {
                    ci = ci.next_down();
                }
                Ok(ci)
            } else {
                Ok(f.inverse_solve(0.5)? / dilation)
            }
        })
        .collect::<Result<_>>()?;
    let mut ratio = 0.0f64;
    let mut first_bound = f64::INFINITY;
    for i in m..n {
        for j in i + 1..n {
            let r = fs[j].left(c[j]) / fs[i].right(c[i]);
            ratio = ratio.max(if r.is_finite() { r } else { 0.0 });
            first_bound = first_bound.min(fs[i].left(c[i]) + fs[j].left(c[j]));
        }
    }
    let k = if ratio > 0.0 { 2.0 * ratio } else { 1.0 };
    let mut second_bound = f64::INFINITY;
    for i in 0..m {
        for j in i + 1..n {
            second_bound = second_bound.min(1.0 - fs[i].value(c[i]) - fs[j].value(c[j]));
        }
    }
    let c_min = c.iter().cloned().fold(f64::INFINITY, f64::min);
    let mut epsilon = 1.0f64;
    for _ in 0..1074 {
        let beta = (k + 1.0) * epsilon;
        let total: f64 = fs.iter().map(|f| f.value(beta)).sum();
        let ok = epsilon < c_min
            && total / epsilon <= first_bound
            && total <= second_bound
            && defining_inequalities_hold(&fs, &c, epsilon, beta);
        if ok {
            let gammas: Vec<f64> = c.iter().map(|ci| ci - epsilon).collect();
            let mut r_lower = f64::INFINITY;
            let mut v = vec![0.0; n];
            for i in 0..n {
                for j in i + 1..n {
                    v.iter_mut().for_each(|x| *x = 0.0);
                    v[order[i]] = c[i] + k * epsilon;
                    v[order[j]] = c[j] - epsilon;
                    r_lower = r_lower.min(x.eval(&v));
                }
            }
            if r_lower.is_nan() || r_lower <= 1.0 {
                return Err(Error::ParameterSelection(format!("R = {r_lower} is not above 1 at eps = {epsilon:e}")));
            }
            return Ok(OrliczParameters { order, m, dilation, c, k, epsilon, beta, gammas, r_lower, heuristic_flags });
        }
        epsilon *= 0.5;
        if epsilon == 0.0 {
            break;
        }
    }
    Err(Error::ParameterSelection("no eps > 0 satisfies the box conditions (underflow)".into()))
}

/// `f_i(γ_i+β) + f_j(γ_j) > 1` and `f_i(γ_i) + f_j(γ_j) + Σ_{k≠i,j} f_k(β) ≤ 1`
/// for all `i < j`.
fn defining_inequalities_hold(fs: &[Dilated], c: &[f64], epsilon: f64, beta: f64) -> bool {
    let n = fs.len();
    let at_beta: Vec<f64> = fs.iter().map(|f| f.value(beta)).collect();
    for i in 0..n {
        for j in i + 1..n {
            let (gi, gj) = (c[i] - epsilon, c[j] - epsilon);
            if fs[i].value(gi + beta) + fs[j].value(gj) <= 1.0 {
                return false;
            }
            // Summed directly: subtracting from the total breaks on infinite terms.
            let rest: f64 = at_beta.iter().enumerate().filter(|(q, _)| *q != i && *q != j).map(|(_, v)| v).sum();
            if fs[i].value(gi) + fs[j].value(gj) + rest > 1.0 {
                return false;
            }
        }
    }
    true
}

/// Smallest `k` with `Σ_{i<n−k} a_i ≤ Σ_{i>n−k} a_i` (canonical, 1-based) and
/// at least two points, if any.
pub fn minimal_subspace_k(sorted: &[f64]) -> Option<usize> {
    let n = sorted.len();
    (1..n.saturating_sub(1)).find(|&k| subspace_k_ok(sorted, k))
}

fn subspace_k_ok(sorted: &[f64], k: usize) -> bool {
    let n = sorted.len();
    if k == 0 || k + 2 > n {
        return false;
    }
    let m = n - k;
    sorted[..m - 1].iter().sum::<f64>() <= sorted[m..].iter().sum::<f64>()
}

/// Parameters for a hyperplane subspace of `ℓ∞ⁿ`: box `[0, 1]^N` and `R = 2`,
/// with `k` the smallest valid value when not given.
pub fn select_parameters_subspace(h: &Hyperplane, k: Option<usize>) -> Result<SubspaceParameters> {
    let canonical = h.canonicalize();
    let a = &canonical.coefficients;
    let n = a.len();
    let k = match k {
        Some(k) if subspace_k_ok(a, k) => k,
        Some(k) => return Err(Error::Parameter(format!("k = {k} does not give a valid partition with n - k >= 2"))),
        None => minimal_subspace_k(a)
            .ok_or_else(|| Error::Parameter(format!("no valid k with at least two points for n = {n}")))?,
    };
    let m = n - k;
    let am = a[m - 1];
    let b = (0..m).map(|j| if am != 0.0 { a[j] / am } else { 0.0 }).collect();
    Ok(SubspaceParameters { k, m, canonical, b, beta: 1.0, r_lower: 2.0 })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PerturbationProblem {
    pub variant: Variant,
    pub dim: usize,
    /// The base norm after the variant's normalization.
    pub base: NormSpec,
    pub target: NormSpec,
    /// `‖·‖_{Y'} = target_scale · ‖·‖_Y` satisfies `‖·‖_{Y'} ≤ ‖·‖_X` on samples.
    pub target_scale: f64,
    pub parameters: Parameters,
    /// Index set `i < j` over the point slots.
    pub pairs: Vec<(usize, usize)>,
    /// Check of `‖·‖_{Y'} ≤ ‖·‖_X ≤ R‖·‖_{Y'}` with `R = R_lower`.
    pub sandwich: SandwichReport,
    pub heuristic_flags: Vec<String>,
}

#[derive(Debug, Clone, Default)]
pub struct ProblemOptions {
    /// Number of removed coordinates for the subspace variant.
    pub k: Option<usize>,
    pub smoothness_budget: Option<usize>,
    pub sandwich_samples: Option<usize>,
    pub seed: u64,
}

impl PerturbationProblem {
    /// Selects parameters for `variant`, normalizes the base, and positions
    /// the target by the scalar `min ‖x‖_X / ‖x‖_Y` over sampled directions.
    ///
    /// Fails with a hypothesis error when the positioned target is not within
    /// `R_lower` of the base on the samples.
    pub fn new(variant: Variant, base: &NormSpec, target: &NormSpec, opts: &ProblemOptions) -> Result<Self> {
        base.validate()?;
        target.validate()?;
        if base.dim != target.dim {
            return Err(Error::DimensionMismatch { expected: base.dim, got: target.dim });
        }
        let n = base.dim;
        let mut heuristic_flags = vec!["sandwich-sampled".to_string()];
        let (parameters, x, plane) = match variant {
            Variant::Symmetric => {
                let budget = opts.smoothness_budget.unwrap_or(DEFAULT_SMOOTHNESS_BUDGET);
                let mut p = select_parameters_symmetric(base, budget, opts.seed);
                // ρ is only estimated from below; shrink ε₀ if the direct checks reject it.
                if let Err(Error::ParameterSelection(_)) = p {
                    let x = base.clone().times(1.0 / base.eval(&unit(n, 0)))?;
                    let mut eps0 = find_eps0(&x, n, budget, opts.seed)?;
                    for _ in 0..20 {
                        eps0 *= 0.5;
                        p = select_parameters_symmetric_with_eps0(base, eps0);
                        if p.is_ok() {
                            heuristic_flags.push("eps0-shrunk".into());
                            break;
                        }
                    }
                }
                let p = p?;
                let x = base.clone().times(1.0 / p.normalization)?;
                (Parameters::Symmetric(p), x, None)
            }
            Variant::Orlicz => {
                let fs = base.luxemburg_functions().ok_or_else(|| {
                    Error::Capability("orlicz variant needs a Luxemburg Musielak-Orlicz base norm".into())
                })?;
                let p = select_parameters_orlicz(fs)?;
                let x = if p.dilation == 1.0 { base.clone() } else { base.clone().times(p.dilation)? };
                (Parameters::Orlicz(p), x, None)
            }
            Variant::Subspace => {
                let h = base
                    .hyperplane()
                    .ok_or_else(|| Error::Capability("subspace variant needs a linfty_hyperplane base norm".into()))?;
                let p = select_parameters_subspace(&h, opts.k)?;
                (Parameters::Subspace(p), base.clone(), Some(h))
            }
        };
        let slots = match &parameters {
            Parameters::Subspace(p) => p.m,
            _ => n,
        };
        let pairs: Vec<(usize, usize)> = (0..slots).flat_map(|i| (i + 1..slots).map(move |j| (i, j))).collect();
        let mut problem = PerturbationProblem {
            variant,
            dim: n,
            base: x,
            target: target.clone(),
            target_scale: 1.0,
            parameters,
            pairs,
            sandwich: SandwichReport { samples: 0, r: 0.0, min_ratio: 0.0, max_ratio: 0.0, pass: false },
            heuristic_flags,
        };
        let samples = opts.sandwich_samples.unwrap_or(DEFAULT_SANDWICH_SAMPLES);
        let mut dirs = sample_directions(n, samples, opts.seed, plane.as_ref());
        // Difference vectors at the centre and corners of the box matter most.
        let beta = problem.parameters.beta();
        for level in [0.0, 0.5 * beta, beta] {
            let pts = problem.point_map_unchecked(&vec![level; problem.pairs.len()]);
            for &(i, j) in &problem.pairs {
                dirs.push(pts[i].iter().zip(&pts[j]).map(|(a, b)| a - b).collect());
            }
        }
        let (lo, _) = ratio_range(&problem.base, target, &dirs);
        if !(lo.is_finite() && lo > 0.0) {
            return Err(Error::Internal(format!("target positioning failed: min ratio {lo}")));
        }
        problem.target_scale = lo;
        let scaled = target.clone().times(lo)?;
        problem.sandwich = sandwich_on(&scaled, &problem.base, problem.parameters.r_lower(), &dirs)?;
        problem.heuristic_flags.extend(problem.parameters.heuristic_flags());
        if !problem.sandwich.pass {
            return Err(Error::Hypothesis(format!(
                "target is not within R = {:.17e} of the base: sampled ratio range [{:.17e}, {:.17e}]",
                problem.sandwich.r, problem.sandwich.min_ratio, problem.sandwich.max_ratio
            )));
        }
        Ok(problem)
    }

    pub fn n_pairs(&self) -> usize {
        self.pairs.len()
    }

    pub fn beta(&self) -> f64 {
        self.parameters.beta()
    }

    fn check_box(&self, eps: &[f64]) -> Result<()> {
        if eps.len() != self.pairs.len() {
            return Err(Error::DimensionMismatch { expected: self.pairs.len(), got: eps.len() });
        }
        let beta = self.beta();
        if let Some(i) = eps.iter().position(|e| !(0.0..=beta).contains(e)) {
            return Err(Error::Domain(format!("eps[{i}] = {} outside [0, {beta}]", eps[i])));
        }
        Ok(())
    }

    /// Index of pair `(i, j)`, `i < j`, in the lexicographic pair list.
    fn pair_index(&self, i: usize, j: usize) -> usize {
        let s = match &self.parameters {
            Parameters::Subspace(p) => p.m,
            _ => self.dim,
        };
        i * (2 * s - i - 1) / 2 + (j - i - 1)
    }

    /// The points `p_j(ε)` in original coordinates of the normalized base
    /// frame (before the target scaling).
    pub fn point_map(&self, eps: &[f64]) -> Result<Vec<Vec<f64>>> {
        self.check_box(eps)?;
        Ok(self.point_map_unchecked(eps))
    }

    fn point_map_unchecked(&self, eps: &[f64]) -> Vec<Vec<f64>> {
        let n = self.dim;
        match &self.parameters {
            Parameters::Symmetric(p) => (0..n)
                .map(|j| {
                    let mut v = vec![0.0; n];
                    for (i, vi) in v.iter_mut().enumerate().take(j) {
                        *vi = eps[self.pair_index(i, j)];
                    }
                    v[j] = -p.gamma;
                    v
                })
                .collect(),
            Parameters::Orlicz(p) => (0..n)
                .map(|j| {
                    let mut v = vec![0.0; n];
                    for i in 0..j {
                        v[p.order[i]] = eps[self.pair_index(i, j)];
                    }
                    v[p.order[j]] = -p.gammas[j];
                    v
                })
                .collect(),
            Parameters::Subspace(p) => {
                let m = p.m;
                let a = &p.canonical.coefficients;
                let denom: f64 = a[m..].iter().sum();
                (0..m)
                    .map(|j| {
                        let mut y = vec![0.0; n];
                        let mut num = 0.0;
                        for i in 0..j {
                            let e = eps[self.pair_index(i, j)];
                            y[i] = e;
                            num += a[i] * e;
                        }
                        if j + 1 < m {
                            y[j] = -1.0;
                            y[m - 1] = p.b[j];
                        }
                        let hv = num / denom;
                        y[m..].iter_mut().for_each(|v| *v = -hv);
                        p.canonical.to_original(&y)
                    })
                    .collect()
            }
        }
    }

    fn phi_raw(&self, eps: &[f64]) -> Vec<f64> {
        let pts = self.point_map_unchecked(eps);
        let s = self.target_scale;
        let one = |(idx, &(i, j)): (usize, &(usize, usize))| {
            let d: Vec<f64> = pts[i].iter().zip(&pts[j]).map(|(a, b)| a - b).collect();
            1.0 + eps[idx] - s * self.target.eval(&d)
        };
        if self.pairs.len() >= PARALLEL_PAIRS {
            self.pairs.par_iter().enumerate().map(one).collect()
        } else {
            self.pairs.iter().enumerate().map(one).collect()
        }
    }

    /// `φ(ε)`; raises a parameterization alarm if the value leaves the box.
    pub fn phi(&self, eps: &[f64]) -> Result<Vec<f64>> {
        self.check_box(eps)?;
        let out = self.phi_raw(eps);
        let beta = self.beta();
        if let Some((i, v)) =
            out.iter().enumerate().find(|(_, v)| **v < -SELF_MAP_TOL || **v > beta + SELF_MAP_TOL || !v.is_finite())
        {
            return Err(Error::Parameterization(format!(
                "phi[{i}] = {v:.17e} leaves [0, {beta}] (pair {:?})",
                self.pairs[i]
            )));
        }
        Ok(out)
    }

    /// Samples the box uniformly and reports how often `φ` leaves it.
    pub fn sample_self_map(&self, samples: usize, seed: u64) -> SelfMapReport {
        use rand::Rng;
        let beta = self.beta();
        let results: Vec<(f64, f64)> = (0..samples)
            .into_par_iter()
            .map(|t| {
                let mut rng = rng_for(seed ^ 0x00c0_ffee, t as u64);
                let eps: Vec<f64> = (0..self.pairs.len()).map(|_| rng.random_range(0.0..=beta)).collect();
                let v = self.phi_raw(&eps);
                v.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), x| (lo.min(*x), hi.max(*x)))
            })
            .collect();
        let violations = results.iter().filter(|(lo, hi)| *lo < -SELF_MAP_TOL || *hi > beta + SELF_MAP_TOL).count();
        let min_value = results.iter().map(|r| r.0).fold(f64::INFINITY, f64::min);
        let max_value = results.iter().map(|r| r.1).fold(f64::NEG_INFINITY, f64::max);
        SelfMapReport { samples, beta, violations, min_value, max_value }
    }

    /// Points scaled so that their target-norm distances are the fixed-point
    /// distances of the positioned norm (1 at a fixed point).
    pub fn output_points(&self, eps: &[f64]) -> Result<Vec<Vec<f64>>> {
        let s = self.target_scale;
        Ok(self.point_map(eps)?.into_iter().map(|p| p.into_iter().map(|v| v * s).collect()).collect())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelfMapReport {
    pub samples: usize,
    pub beta: f64,
    pub violations: usize,
    pub min_value: f64,
    pub max_value: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SolveMethod {
    DampedIteration,
    QuasiNewton,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FixedPointSolution {
    pub epsilon: Vec<f64>,
    pub residual_inf: f64,
    pub iterations: usize,
    pub method: SolveMethod,
    /// `(iteration, residual)` at iterations 1, 2, 4, 8, … and at the end.
    pub trace: Vec<(usize, f64)>,
}

fn residual_inf(eps: &[f64], phi: &[f64]) -> f64 {
    eps.iter().zip(phi).map(|(e, p)| (p - e).abs()).fold(0.0, f64::max)
}

fn clamp_box(v: &mut [f64], beta: f64) {
    v.iter_mut().for_each(|x| *x = x.clamp(0.0, beta));
}

/// Solves `ε = φ(ε)` on the box: damped iteration from `ε = 0`, then a
/// projected Broyden method if the iteration stagnates.
pub fn solve_fixed_point(problem: &PerturbationProblem) -> Result<FixedPointSolution> {
    let n = problem.n_pairs();
    let beta = problem.beta();
    let mut eps = vec![0.0; n];
    let mut trace = Vec::new();
    let mut best = (f64::INFINITY, eps.clone());
    let mut window_start = f64::INFINITY;
    for it in 1..=MAX_DAMPED_ITERATIONS {
        let phi = problem.phi(&eps)?;
        let r = residual_inf(&eps, &phi);
        if it.is_power_of_two() {
            trace.push((it, r));
        }
        if r < best.0 {
            best = (r, eps.clone());
        }
        if r <= RESIDUAL_TOL {
            trace.push((it, r));
            return Ok(FixedPointSolution {
                epsilon: eps,
                residual_inf: r,
                iterations: it,
                method: SolveMethod::DampedIteration,
                trace,
            });
        }
        if it % STAGNATION_WINDOW == 0 {
            if best.0 > 0.9 * window_start {
                break;
            }
            window_start = best.0;
        }
        for (e, p) in eps.iter_mut().zip(&phi) {
            *e = (1.0 - DAMPING) * *e + DAMPING * p;
        }
        clamp_box(&mut eps, beta);
    }
    let damped_iterations = trace.last().map_or(0, |t| t.0);
    broyden(problem, best.1, damped_iterations, trace)
}

fn fd_jacobian(problem: &PerturbationProblem, x: &[f64], fx: &[f64]) -> Result<Vec<Vec<f64>>> {
    let n = x.len();
    let beta = problem.beta();
    let h = 1e-7 * beta.max(1e-300);
    let mut jac = vec![vec![0.0; n]; n];
    for c in 0..n {
        let mut y = x.to_vec();
        let step = if y[c] + h <= beta { h } else { -h };
        y[c] += step;
        let fy: Vec<f64> = problem.phi(&y)?.iter().zip(&y).map(|(p, e)| p - e).collect();
        for r in 0..n {
            jac[r][c] = (fy[r] - fx[r]) / step;
        }
    }
    Ok(jac)
}

/// Gaussian elimination with partial pivoting; `None` for singular systems.
fn solve_dense(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let n = b.len();
    for col in 0..n {
        let piv = (col..n).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if a[piv][col].abs() < 1e-300 {
            return None;
        }
        a.swap(col, piv);
        b.swap(col, piv);
        let (top, bottom) = a.split_at_mut(col + 1);
        let pivot = &top[col];
        let (b_top, b_bottom) = b.split_at_mut(col + 1);
        for (row, br) in bottom.iter_mut().zip(b_bottom) {
            let f = row[col] / pivot[col];
            row[col..].iter_mut().zip(&pivot[col..]).for_each(|(x, p)| *x -= f * p);
            *br -= f * b_top[col];
        }
    }
    let mut x = vec![0.0; n];
    for r in (0..n).rev() {
        let s: f64 = (r + 1..n).map(|c| a[r][c] * x[c]).sum();
        x[r] = (b[r] - s) / a[r][r];
    }
    Some(x)
}

fn broyden(
    problem: &PerturbationProblem,
    mut x: Vec<f64>,
    start: usize,
    mut trace: Vec<(usize, f64)>,
) -> Result<FixedPointSolution> {
    let beta = problem.beta();
    let f = |x: &[f64]| -> Result<Vec<f64>> { Ok(problem.phi(x)?.iter().zip(x).map(|(p, e)| p - e).collect()) };
    let norm = |v: &[f64]| v.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    let mut fx = f(&x)?;
    let mut jac = fd_jacobian(problem, &x, &fx)?;
    let mut fresh = true;
    for it in 1..=MAX_BROYDEN_ITERATIONS {
        let r = norm(&fx);
        if r <= RESIDUAL_TOL {
            trace.push((start + it, r));
            return Ok(FixedPointSolution {
                epsilon: x,
                residual_inf: r,
                iterations: start + it,
                method: SolveMethod::QuasiNewton,
                trace,
            });
        }
        let step = solve_dense(jac.clone(), fx.iter().map(|v| -v).collect());
        let mut accepted = None;
        if let Some(d) = step {
            let mut t = 1.0;
            for _ in 0..30 {
                let mut y: Vec<f64> = x.iter().zip(&d).map(|(a, b)| a + t * b).collect();
                clamp_box(&mut y, beta);
                let fy = f(&y)?;
                if norm(&fy) < r {
                    accepted = Some((y, fy));
                    break;
                }
                t *= 0.5;
            }
        }
        match accepted {
            Some((y, fy)) => {
                let dx: Vec<f64> = y.iter().zip(&x).map(|(a, b)| a - b).collect();
                let df: Vec<f64> = fy.iter().zip(&fx).map(|(a, b)| a - b).collect();
                let dd: f64 = dx.iter().map(|v| v * v).sum();
                if dd > 0.0 {
                    for (row, dfr) in jac.iter_mut().zip(&df) {
                        let jdx: f64 = row.iter().zip(&dx).map(|(a, b)| a * b).sum();
                        let u = (dfr - jdx) / dd;
                        row.iter_mut().zip(&dx).for_each(|(j, d)| *j += u * d);
                    }
                }
                x = y;
                fx = fy;
                fresh = false;
            }
            None if !fresh => {
                jac = fd_jacobian(problem, &x, &fx)?;
                fresh = true;
            }
            None => {
                trace.push((start + it, r));
                return Err(Error::Solver {
                    message: format!("fixed-point solve stalled; residual trace {trace:?}"),
                    iterations: start + it,
                    residual: r,
                });
            }
        }
        if (start + it).is_power_of_two() {
            trace.push((start + it, norm(&fx)));
        }
    }
    let r = norm(&fx);
    Err(Error::Solver {
        message: format!("no convergence after {MAX_BROYDEN_ITERATIONS} quasi-Newton steps; residual trace {trace:?}"),
        iterations: start + MAX_BROYDEN_ITERATIONS,
        residual: r,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PerturbationOutcome {
    pub solution: FixedPointSolution,
    /// Points at target-norm distance 1 (claimed).
    pub set: PointSet,
    pub certificate: EquilateralCertificate,
}

/// Solves the problem and certifies the resulting points in the original
/// target norm at 1e-9.
pub fn solve_and_certify(problem: &PerturbationProblem) -> Result<PerturbationOutcome> {
    let solution = solve_fixed_point(problem)?;
    let set = PointSet { points: problem.output_points(&solution.epsilon)?, claimed_distance: 1.0 };
    let mut certificate = verify::certify_equilateral(&set, &problem.target, NUMERIC_TOL)?;
    certificate.heuristic_flags.extend(problem.heuristic_flags.iter().cloned());
    Ok(PerturbationOutcome { solution, set, certificate })
}
