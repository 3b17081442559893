//! Hyperplane subspaces `{x : ⟨a, x⟩ = 0}` of `ℓ∞ⁿ` and the sign/permutation
//! isometry that brings the coefficients to ascending nonnegative order.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Relative membership tolerance, scaled by `‖a‖₂‖x‖₂`.
pub const MEMBERSHIP_REL_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Hyperplane {
    a: Vec<f64>,
}

impl Hyperplane {
    pub fn new(a: Vec<f64>) -> Result<Self> {
        if a.is_empty() {
            return Err(Error::Degenerate("hyperplane needs at least one coefficient".into()));
        }
        if let Some(i) = a.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(i));
        }
        if a.iter().all(|v| *v == 0.0) {
            return Err(Error::Degenerate("hyperplane coefficients are all zero".into()));
        }
        Ok(Hyperplane { a })
    }

    pub fn coefficients(&self) -> &[f64] {
        &self.a
    }

    pub fn dim(&self) -> usize {
        self.a.len()
    }

    /// `|⟨a, x⟩| / (‖a‖₂‖x‖₂)`, or 0 for `x = 0`.
    pub fn relative_residual(&self, x: &[f64]) -> f64 {
        let dot: f64 = self.a.iter().zip(x).map(|(a, x)| a * x).sum();
        let na = self.a.iter().map(|v| v * v).sum::<f64>().sqrt();
        let nx = x.iter().map(|v| v * v).sum::<f64>().sqrt();
        if nx == 0.0 {
            0.0
        } else {
            dot.abs() / (na * nx)
        }
    }

    pub fn contains(&self, x: &[f64], rel_tol: f64) -> Result<()> {
        if x.len() != self.a.len() {
            return Err(Error::DimensionMismatch { expected: self.a.len(), got: x.len() });
        }
        if let Some(i) = x.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(i));
        }
        let r = self.relative_residual(x);
        if r > rel_tol {
            return Err(Error::Membership(r));
        }
        Ok(())
    }

    /// `‖x‖∞` for a point of the subspace.
    pub fn subspace_norm_eval(&self, x: &[f64]) -> Result<f64> {
        self.contains(x, MEMBERSHIP_REL_TOL)?;
        Ok(x.iter().fold(0.0, |m, v| m.max(v.abs())))
    }

    /// Orthogonal projection onto the subspace.
    pub fn project(&self, x: &[f64]) -> Vec<f64> {
        let dot: f64 = self.a.iter().zip(x).map(|(a, x)| a * x).sum();
        let na2: f64 = self.a.iter().map(|v| v * v).sum();
        x.iter().zip(&self.a).map(|(x, a)| x - dot / na2 * a).collect()
    }

    pub fn canonicalize(&self) -> CanonicalHyperplane {
        canonicalize_hyperplane(&self.a).expect("validated hyperplane is nondegenerate")
    }
}

/// Coefficients `0 ≤ a_1 ≤ … ≤ a_n` together with the isometry of `ℓ∞ⁿ`
/// relating canonical and original coordinates:
/// `x[order[i]] = signs[order[i]] · y[i]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CanonicalHyperplane {
    pub coefficients: Vec<f64>,
    /// Sign of each original coefficient (`+1` for zeros), indexed by original coordinate.
    pub signs: Vec<f64>,
    /// `order[i]` is the original coordinate sitting at canonical position `i`.
    pub order: Vec<usize>,
}

impl CanonicalHyperplane {
    pub fn dim(&self) -> usize {
        self.coefficients.len()
    }

    pub fn to_original(&self, y: &[f64]) -> Vec<f64> {
        let mut x = vec![0.0; y.len()];
        for (i, &j) in self.order.iter().enumerate() {
            x[j] = self.signs[j] * y[i];
        }
        x
    }

    pub fn to_canonical(&self, x: &[f64]) -> Vec<f64> {
        self.order.iter().map(|&j| self.signs[j] * x[j]).collect()
    }

    /// Reconstructs the original coefficient vector.
    pub fn original_coefficients(&self) -> Vec<f64> {
        self.to_original(&self.coefficients)
    }
}

/// Strips signs and sorts `|a|` ascending (stable), recording the isometry.
pub fn canonicalize_hyperplane(a: &[f64]) -> Result<CanonicalHyperplane> {
    if a.iter().all(|v| *v == 0.0) {
        return Err(Error::Degenerate("hyperplane coefficients are all zero".into()));
    }
    if let Some(i) = a.iter().position(|v| !v.is_finite()) {
        return Err(Error::NonFinite(i));
    }
    let signs: Vec<f64> = a.iter().map(|v| if *v < 0.0 { -1.0 } else { 1.0 }).collect();
    let mut order: Vec<usize> = (0..a.len()).collect();
    order.sort_by(|&i, &j| a[i].abs().total_cmp(&a[j].abs()));
    let coefficients = order.iter().map(|&i| a[i].abs()).collect();
    Ok(CanonicalHyperplane { coefficients, signs, order })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn canonical_form_example() {
        let c = canonicalize_hyperplane(&[-3.0, 1.0, 2.0]).unwrap();
        assert_eq!(c.coefficients, vec![1.0, 2.0, 3.0]);
        assert_eq!(c.signs, vec![-1.0, 1.0, 1.0]);
        // 1-based original indices (2, 3, 1).
        assert_eq!(c.order, vec![1, 2, 0]);

        let id = canonicalize_hyperplane(&[1.0, 1.0]).unwrap();
        assert_eq!(id.order, vec![0, 1]);
        assert_eq!(id.signs, vec![1.0, 1.0]);
        assert!(matches!(canonicalize_hyperplane(&[0.0, 0.0]), Err(Error::Degenerate(_))));
    }

    #[test]
    fn subspace_norm_examples() {
        let h = Hyperplane::new(vec![1.0; 4]).unwrap();
        assert_eq!(h.subspace_norm_eval(&[1.0, 1.0, -1.0, -1.0]).unwrap(), 1.0);
        assert_eq!(h.subspace_norm_eval(&[0.0; 4]).unwrap(), 0.0);
        let h = Hyperplane::new(vec![1.0, 2.0]).unwrap();
        assert_eq!(h.subspace_norm_eval(&[2.0, -1.0]).unwrap(), 2.0);
        assert!(matches!(h.subspace_norm_eval(&[1.0, 1.0]), Err(Error::Membership(_))));
    }

    proptest! {
        #[test]
        fn canonicalization_round_trips(a in proptest::collection::vec(-10.0f64..10.0, 1..12)) {
            prop_assume!(a.iter().any(|v| *v != 0.0));
            let c = canonicalize_hyperplane(&a).unwrap();
            prop_assert_eq!(c.original_coefficients(), a.clone());
            prop_assert!(c.coefficients.windows(2).all(|w| w[0] <= w[1]));
            let x: Vec<f64> = (0..a.len()).map(|i| i as f64 - 0.5).collect();
            prop_assert_eq!(c.to_original(&c.to_canonical(&x)), x);
        }
    }
}
