//! Norms on ℝⁿ: the [`NormSpec`] description language, evaluation, structural
//! flags, and the smoothness machinery used by the perturbation solver.

mod gauge;
mod hyperplane;
mod smoothness;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::young::YoungFunction;

pub use gauge::{amemiya, luxemburg, AmemiyaValue, AMEMIYA_LAMBDA_CAP};
pub use hyperplane::{canonicalize_hyperplane, CanonicalHyperplane, Hyperplane, MEMBERSHIP_REL_TOL};
pub use smoothness::{
    find_eps0, modulus_of_smoothness, supporting_functional_symmetric, SupportingFunctional, EPS0_GRID_DEPTH,
};

/// Anything that measures lengths of vectors in ℝⁿ.
pub trait Norm: Sync {
    fn dim(&self) -> usize;

    fn norm(&self, x: &[f64]) -> Result<f64>;

    /// Checks that `x` lies in the space the norm lives on (a subspace for
    /// hyperplane norms). The default accepts every vector of the right length.
    fn check_point(&self, x: &[f64]) -> Result<()> {
        check_vector(x, self.dim())
    }
}

pub(crate) fn check_vector(x: &[f64], dim: usize) -> Result<()> {
    if x.len() != dim {
        return Err(Error::DimensionMismatch { expected: dim, got: x.len() });
    }
    if let Some(i) = x.iter().position(|v| !v.is_finite()) {
        return Err(Error::NonFinite(i));
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Gauge {
    Luxemburg,
    Amemiya,
}

/// Linear map `T` of a `scaled` norm, `‖x‖ = ‖T x‖_base`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LinearMap {
    /// `(T x)_i = d_i x_i`.
    Diagonal(Vec<f64>),
    /// `(T x)_i = x_{σ(i)}`.
    Permutation(Vec<usize>),
    /// Row-major square matrix.
    General(Vec<Vec<f64>>),
}

impl LinearMap {
    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        match self {
            LinearMap::Diagonal(d) => d.iter().zip(x).map(|(d, x)| d * x).collect(),
            LinearMap::Permutation(p) => p.iter().map(|&j| x[j]).collect(),
            LinearMap::General(m) => m.iter().map(|row| row.iter().zip(x).map(|(a, b)| a * b).sum()).collect(),
        }
    }

    fn validate(&self, n: usize) -> Result<()> {
        match self {
            LinearMap::Diagonal(d) => {
                if d.len() != n {
                    return Err(Error::DimensionMismatch { expected: n, got: d.len() });
                }
                if d.iter().any(|v| !v.is_finite() || *v == 0.0) {
                    return Err(Error::Parameter("diagonal map must have finite nonzero entries".into()));
                }
            }
            LinearMap::Permutation(p) => {
                if p.len() != n {
                    return Err(Error::DimensionMismatch { expected: n, got: p.len() });
                }
                let mut seen = vec![false; n];
                for &j in p {
                    if j >= n || seen[j] {
                        return Err(Error::Parameter("permutation map is not a bijection".into()));
                    }
                    seen[j] = true;
                }
            }
            LinearMap::General(m) => {
                if m.len() != n || m.iter().any(|r| r.len() != n) {
                    return Err(Error::Parameter(format!("general map must be {n}x{n}")));
                }
                if m.iter().flatten().any(|v| !v.is_finite()) {
                    return Err(Error::Parameter("general map has non-finite entries".into()));
                }
                if !is_invertible(m) {
                    return Err(Error::Parameter("general map is singular".into()));
                }
            }
        }
        Ok(())
    }
}

/// Gaussian elimination with partial pivoting; pivots below `1e-12` times
/// the largest entry count as singular.
fn is_invertible(m: &[Vec<f64>]) -> bool {
    let n = m.len();
    let mut a: Vec<Vec<f64>> = m.to_vec();
    let scale = a.iter().flatten().fold(0.0f64, |s, v| s.max(v.abs()));
    if scale == 0.0 {
        return false;
    }
    for col in 0..n {
        let (piv, pv) = (col..n).map(|r| (r, a[r][col].abs())).max_by(|x, y| x.1.total_cmp(&y.1)).unwrap();
        if pv <= 1e-12 * scale {
            return false;
        }
        a.swap(col, piv);
        let (top, bottom) = a.split_at_mut(col + 1);
        let pivot = &top[col];
        for row in bottom {
            let f = row[col] / pivot[col];
            row[col..].iter_mut().zip(&pivot[col..]).for_each(|(x, p)| *x -= f * p);
        }
    }
    true
}

/// `f64` fields that may be `+∞`, written as the string `"inf"` in JSON.
mod ext_real {
    use serde::{de, Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_infinite() && *v > 0.0 {
            s.serialize_str("inf")
        } else {
            s.serialize_f64(*v)
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Repr {
            Num(f64),
            Str(String),
        }
        match Repr::deserialize(d)? {
            Repr::Num(v) => Ok(v),
            Repr::Str(s) => match s.to_ascii_lowercase().as_str() {
                "inf" | "infinity" | "+inf" => Ok(f64::INFINITY),
                other => Err(de::Error::custom(format!("expected a number or \"inf\", got {other:?}"))),
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum NormFamily {
    Lp {
        #[serde(with = "ext_real")]
        p: f64,
    },
    MusielakOrlicz {
        functions: Vec<YoungFunction>,
        gauge: Gauge,
    },
    /// Ordered weighted ℓ₁: `Σ w_i |x|_(i)` with `|x|` sorted descending.
    Owl {
        w: Vec<f64>,
    },
    /// `α‖x‖_p + β|Σ x_i|`.
    PermMix {
        #[serde(with = "ext_real")]
        p: f64,
        alpha: f64,
        beta: f64,
    },
    /// `ℓ∞ⁿ` restricted to `{⟨a, x⟩ = 0}`.
    LinftyHyperplane {
        a: Vec<f64>,
    },
    Scaled {
        base: Box<NormSpec>,
        t: LinearMap,
    },
}

/// Structural properties a norm family is known to have.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct StructuralFlags {
    pub permutation_invariant: bool,
    pub unconditional: bool,
    pub smooth: bool,
}

impl StructuralFlags {
    pub fn symmetric(&self) -> bool {
        self.permutation_invariant && self.unconditional
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NormSpec {
    pub dim: usize,
    pub family: NormFamily,
}

impl NormSpec {
    pub fn new(dim: usize, family: NormFamily) -> Result<Self> {
        let spec = NormSpec { dim, family };
        spec.validate()?;
        Ok(spec)
    }

    pub fn lp(dim: usize, p: f64) -> Result<Self> {
        NormSpec::new(dim, NormFamily::Lp { p })
    }

    pub fn luxemburg(functions: Vec<YoungFunction>) -> Result<Self> {
        NormSpec::new(functions.len(), NormFamily::MusielakOrlicz { functions, gauge: Gauge::Luxemburg })
    }

    pub fn amemiya(functions: Vec<YoungFunction>) -> Result<Self> {
        NormSpec::new(functions.len(), NormFamily::MusielakOrlicz { functions, gauge: Gauge::Amemiya })
    }

    pub fn owl(w: Vec<f64>) -> Result<Self> {
        NormSpec::new(w.len(), NormFamily::Owl { w })
    }

    pub fn perm_mix(dim: usize, p: f64, alpha: f64, beta: f64) -> Result<Self> {
        NormSpec::new(dim, NormFamily::PermMix { p, alpha, beta })
    }

    pub fn linfty_hyperplane(a: Vec<f64>) -> Result<Self> {
        NormSpec::new(a.len(), NormFamily::LinftyHyperplane { a })
    }

    pub fn scaled(base: NormSpec, t: LinearMap) -> Result<Self> {
        NormSpec::new(base.dim, NormFamily::Scaled { base: Box::new(base), t })
    }

    /// `s · ‖x‖` as a spec.
    pub fn times(self, s: f64) -> Result<Self> {
        let n = self.dim;
        NormSpec::scaled(self, LinearMap::Diagonal(vec![s; n]))
    }

    pub fn from_json(text: &str) -> std::result::Result<Self, NormSpecParseError> {
        let spec: NormSpec = serde_json::from_str(text).map_err(NormSpecParseError::Json)?;
        spec.validate().map_err(NormSpecParseError::Invalid)?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.dim;
        if n == 0 {
            return Err(Error::Parameter("dimension must be >= 1".into()));
        }
        let check_p = |p: f64| {
            if p.is_nan() || p < 1.0 {
                Err(Error::Parameter(format!("p must lie in [1, ∞], got {p}")))
            } else {
                Ok(())
            }
        };
        match &self.family {
            NormFamily::Lp { p } => check_p(*p)?,
            NormFamily::MusielakOrlicz { functions, .. } => {
                if functions.len() != n {
                    return Err(Error::DimensionMismatch { expected: n, got: functions.len() });
                }
                for f in functions {
                    f.validate()?;
                }
            }
            NormFamily::Owl { w } => {
                if w.len() != n {
                    return Err(Error::DimensionMismatch { expected: n, got: w.len() });
                }
                if w.iter().any(|v| !v.is_finite() || *v < 0.0) || w[0] <= 0.0 {
                    return Err(Error::Parameter("owl weights must be finite, >= 0, with w_1 > 0".into()));
                }
                if w.windows(2).any(|p| p[0] < p[1]) {
                    return Err(Error::Parameter("owl weights must be nonincreasing".into()));
                }
            }
            NormFamily::PermMix { p, alpha, beta } => {
                check_p(*p)?;
                if !(alpha.is_finite() && *alpha > 0.0 && beta.is_finite() && *beta >= 0.0) {
                    return Err(Error::Parameter("perm_mix needs alpha > 0 and beta >= 0".into()));
                }
            }
            NormFamily::LinftyHyperplane { a } => {
                if a.len() != n {
                    return Err(Error::DimensionMismatch { expected: n, got: a.len() });
                }
                Hyperplane::new(a.clone())?;
            }
            NormFamily::Scaled { base, t } => {
                if base.dim != n {
                    return Err(Error::DimensionMismatch { expected: n, got: base.dim });
                }
                base.validate()?;
                t.validate(n)?;
            }
        }
        Ok(())
    }

    pub fn flags(&self) -> StructuralFlags {
        let not = StructuralFlags { permutation_invariant: false, unconditional: false, smooth: false };
        match &self.family {
            NormFamily::Lp { p } => {
                StructuralFlags { permutation_invariant: true, unconditional: true, smooth: *p > 1.0 && p.is_finite() }
            }
            NormFamily::MusielakOrlicz { functions, gauge } => StructuralFlags {
                permutation_invariant: functions.windows(2).all(|w| w[0] == w[1]),
                unconditional: true,
                smooth: *gauge == Gauge::Luxemburg
                    && functions.iter().all(|f| matches!(f, YoungFunction::Power { p } if *p > 1.0)),
            },
            NormFamily::Owl { .. } => {
                StructuralFlags { permutation_invariant: true, unconditional: true, smooth: false }
            }
            NormFamily::PermMix { p, beta, .. } => StructuralFlags {
                permutation_invariant: true,
                unconditional: *beta == 0.0,
                smooth: *beta == 0.0 && *p > 1.0 && p.is_finite(),
            },
            NormFamily::LinftyHyperplane { .. } => not,
            NormFamily::Scaled { base, t } => {
                let b = base.flags();
                match t {
                    LinearMap::Diagonal(d) => {
                        let all_equal = d.windows(2).all(|w| w[0] == w[1]);
                        let abs_equal = d.windows(2).all(|w| w[0].abs() == w[1].abs());
                        StructuralFlags {
                            permutation_invariant: b.permutation_invariant
                                && (all_equal || (b.unconditional && abs_equal)),
                            unconditional: b.unconditional,
                            smooth: b.smooth,
                        }
                    }
                    LinearMap::Permutation(_) => b,
                    LinearMap::General(_) => StructuralFlags { smooth: b.smooth, ..not },
                }
            }
        }
    }

    /// The hyperplane of a `linfty_hyperplane` spec.
    pub fn hyperplane(&self) -> Option<Hyperplane> {
        match &self.family {
            NormFamily::LinftyHyperplane { a } => Hyperplane::new(a.clone()).ok(),
            _ => None,
        }
    }

    /// The coordinate functions of a Luxemburg spec.
    pub fn luxemburg_functions(&self) -> Option<&[YoungFunction]> {
        match &self.family {
            NormFamily::MusielakOrlicz { functions, gauge: Gauge::Luxemburg } => Some(functions),
            _ => None,
        }
    }

    /// `‖x‖`, with input validation.
    pub fn norm_eval(&self, x: &[f64]) -> Result<f64> {
        check_vector(x, self.dim)?;
        Ok(self.eval(x))
    }

    /// Amemiya value together with its convergence flag; `None` for other families.
    pub fn amemiya_eval(&self, x: &[f64]) -> Result<Option<AmemiyaValue>> {
        check_vector(x, self.dim)?;
        Ok(match &self.family {
            NormFamily::MusielakOrlicz { functions, gauge: Gauge::Amemiya } => Some(amemiya(functions, x)),
            _ => None,
        })
    }

    /// Unchecked evaluation; `x` must have length `dim` and finite entries.
    pub(crate) fn eval(&self, x: &[f64]) -> f64 {
        match &self.family {
            NormFamily::Lp { p } => lp_norm(x, *p),
            NormFamily::MusielakOrlicz { functions, gauge } => match gauge {
                Gauge::Luxemburg => luxemburg(functions, x),
                Gauge::Amemiya => amemiya(functions, x).value,
            },
            NormFamily::Owl { w } => {
                let mut abs: Vec<f64> = x.iter().map(|v| v.abs()).collect();
                abs.sort_by(|a, b| b.total_cmp(a));
                w.iter().zip(&abs).map(|(w, v)| w * v).sum()
            }
            NormFamily::PermMix { p, alpha, beta } => {
                let mut vals = x.to_vec();
                vals.sort_by(f64::total_cmp);
                alpha * lp_norm(x, *p) + beta * vals.iter().sum::<f64>().abs()
            }
            NormFamily::LinftyHyperplane { .. } => lp_norm(x, f64::INFINITY),
            NormFamily::Scaled { base, t } => base.eval(&t.apply(x)),
        }
    }
}

impl Norm for NormSpec {
    fn dim(&self) -> usize {
        self.dim
    }

    fn norm(&self, x: &[f64]) -> Result<f64> {
        self.norm_eval(x)
    }

    fn check_point(&self, x: &[f64]) -> Result<()> {
        check_vector(x, self.dim)?;
        match &self.family {
            NormFamily::LinftyHyperplane { a } => Hyperplane::new(a.clone())?.contains(x, MEMBERSHIP_REL_TOL),
            _ => Ok(()),
        }
    }
}

impl Norm for Hyperplane {
    fn dim(&self) -> usize {
        Hyperplane::dim(self)
    }

    fn norm(&self, x: &[f64]) -> Result<f64> {
        check_vector(x, Hyperplane::dim(self))?;
        Ok(lp_norm(x, f64::INFINITY))
    }

    fn check_point(&self, x: &[f64]) -> Result<()> {
        self.contains(x, MEMBERSHIP_REL_TOL)
    }
}

/// Closed-form `ℓp` norm, summed over ascending magnitudes.
pub fn lp_norm(x: &[f64], p: f64) -> f64 {
    let max = x.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if p.is_infinite() || max == 0.0 {
        return max;
    }
    let mut abs: Vec<f64> = x.iter().map(|v| v.abs()).collect();
    abs.sort_by(f64::total_cmp);
    if p == 1.0 {
        return abs.iter().sum();
    }
    let s: f64 = if p == 2.0 {
        abs.iter().map(|v| (v / max) * (v / max)).sum()
    } else {
        abs.iter().map(|v| (v / max).powf(p)).sum()
    };
    max * if p == 2.0 { s.sqrt() } else { s.powf(1.0 / p) }
}

/// Failure to read a [`NormSpec`] from JSON.
#[derive(Debug, thiserror::Error)]
pub enum NormSpecParseError {
    #[error("malformed norm spec JSON: {0}")]
    Json(serde_json::Error),
    #[error("invalid norm spec: {0}")]
    Invalid(Error),
}

#[cfg(test)]
mod tests;
