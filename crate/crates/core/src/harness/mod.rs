//! Inequality ratios, constant estimation over parametric field families, and
//! the auxiliary checks (Hardy, Morrey, localized and flux estimates).

mod checks;
mod families;
mod optimize;

pub use checks::*;
pub use families::*;
pub use optimize::*;

use crate::error::{Error, Result};
use crate::fields::{Basis, VectorField};
use crate::functionals::{divergence_l1_norm, l1_norm, ln_gradient_norm, lp_norm, pairing};
use crate::quadrature::Accuracy;

/// Which inequality a ratio is measured against.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Setting {
    /// `|∫⟨f, φ⟩| ≤ C ‖f‖₁ ‖∇φ‖ₙ` on `ℝⁿ`, `div f = 0`.
    EuclideanMain,
    /// `|∫⟨f, φ⟩_g dV_g| ≤ C ‖f‖_{L¹(ℍⁿ)} ‖∇_g φ‖_{Lⁿ(ℍⁿ)}`, `div_g f = 0`.
    HyperbolicMain,
    /// `|∫⟨f, φ⟩| ≤ C (‖f‖₁ ‖∇φ‖ₙ + ‖div f‖₁ ‖φ‖ₙ)` on `ℝⁿ`, any `f`.
    EuclideanLowOrder,
}

impl Setting {
    pub const ALL: [Setting; 3] = [
        Setting::EuclideanMain,
        Setting::HyperbolicMain,
        Setting::EuclideanLowOrder,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Setting::EuclideanMain => "euclidean-main",
            Setting::HyperbolicMain => "hyperbolic-main",
            Setting::EuclideanLowOrder => "euclidean-low-order",
        }
    }

    pub fn basis(self) -> Basis {
        match self {
            Setting::HyperbolicMain => Basis::HyperbolicFrame,
            _ => Basis::Cartesian,
        }
    }

    fn requires_divergence_free(self) -> bool {
        self != Setting::EuclideanLowOrder
    }
}

/// One evaluation of an inequality ratio.
#[derive(Clone, Debug, PartialEq)]
pub struct RatioRecord {
    pub family: String,
    pub params: Vec<f64>,
    pub setting: Setting,
    /// `|∫⟨f, φ⟩|`.
    pub numerator: f64,
    /// `‖f‖₁`.
    pub f_l1: f64,
    /// `‖∇φ‖ₙ`.
    pub gradient_norm: f64,
    /// `‖div f‖₁ ‖φ‖ₙ` for the low-order setting.
    pub divergence_term: Option<f64>,
    pub denominator: f64,
    pub ratio: f64,
}

fn check_admissible(f: &VectorField, phi: &VectorField, setting: Setting) -> Result<()> {
    let basis = setting.basis();
    for v in [f, phi] {
        if v.basis() != basis {
            return Err(Error::WrongBasis { expected: basis.name() });
        }
    }
    if f.dim() != phi.dim() {
        return Err(Error::DimensionMismatch {
            expected: f.dim(),
            actual: phi.dim(),
        });
    }
    if setting.requires_divergence_free() && !f.is_divergence_free() {
        return Err(Error::NotDivergenceFree);
    }
    if phi.support().is_none() || f.support().is_none() {
        return Err(Error::UnboundedSupport);
    }
    Ok(())
}

/// Ratio of `|∫⟨f, φ⟩|` to the right-hand side of the inequality selected by
/// `setting`.
pub fn ratio(f: &VectorField, phi: &VectorField, setting: Setting, accuracy: &Accuracy) -> Result<RatioRecord> {
    check_admissible(f, phi, setting)?;
    let n = f.dim() as f64;
    let numerator = pairing(f, phi, accuracy)?.abs();
    let f_l1 = l1_norm(f, accuracy)?.value;
    let gradient_norm = ln_gradient_norm(phi, accuracy)?.value;
    let divergence_term = match setting {
        Setting::EuclideanLowOrder => Some(divergence_l1_norm(f, accuracy)?.value * lp_norm(phi, n, accuracy)?.value),
        _ => None,
    };
    let denominator = f_l1 * gradient_norm + divergence_term.unwrap_or(0.0);
    if !(denominator > 0.0) || !denominator.is_finite() {
        return Err(Error::Degenerate(format!(
            "denominator {denominator} (‖f‖₁ = {f_l1}, ‖∇φ‖ₙ = {gradient_norm})"
        )));
    }
    Ok(RatioRecord {
        family: String::new(),
        params: Vec::new(),
        setting,
        numerator,
        f_l1,
        gradient_norm,
        divergence_term,
        denominator,
        ratio: numerator / denominator,
    })
}
