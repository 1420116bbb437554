//! Degree truncation of Ising HUBOs and its error certificate.
//!
//! In the Ising basis a coupling is a Walsh coefficient, so dropping every
//! monomial above `k_max` is the orthogonal projection onto the low-degree
//! band and leaves the kept couplings untouched. The ℓ1 mass of what was
//! dropped bounds the pointwise error.

use crate::error::{Error, Result};
use crate::poly::IsingPolynomial;
use crate::spectrum::omitted_mode_count;

/// Keeps the terms with `|S| <= k_max`, coefficients bit-identical.
pub fn truncate(poly: &IsingPolynomial, k_max: usize) -> IsingPolynomial {
    poly.filter(|s, _| s.count_ones() as usize <= k_max)
}

/// The dropped terms, `|S| > k_max`.
pub fn residual(poly: &IsingPolynomial, k_max: usize) -> IsingPolynomial {
    poly.filter(|s, _| s.count_ones() as usize > k_max)
}

/// Pass thresholds for the noise-floor ratios.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseFloorThresholds {
    /// `P_> / P_<=` at or below this passes.
    pub weak: f64,
    /// `(P_> / P_<=) / (k_max / n)` at or below this passes.
    pub strong: f64,
}

impl Default for NoiseFloorThresholds {
    fn default() -> Self {
        NoiseFloorThresholds {
            weak: 0.1,
            strong: 0.1,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TruncationCertificate {
    pub k_max: usize,
    pub num_qubits: usize,
    /// `sum_{|S| > k_max} |c_S|`, a bound on `max_z |f - f_trunc|`.
    pub epsilon: f64,
    /// `sqrt(P_>)`.
    pub l2_residual: f64,
    /// `sum_{1 <= |S| <= k_max} c_S^2`; the constant is on neither side.
    pub p_below: f64,
    pub p_above: f64,
    /// Number of stored couplings above `k_max`.
    pub omitted_nonzero: usize,
    /// `2^n - sum_{k <= k_max} C(n, k)`.
    pub omitted_combinatorial: u128,
    /// `P_> / P_<=`; `None` when `P_<= = 0 < P_>`.
    pub weak_ratio: Option<f64>,
    /// `weak_ratio / (k_max / n)`; `None` when the ratio is.
    pub strong_margin: Option<f64>,
    /// At least one coupling was dropped and all dropped couplings share a
    /// sign, so the bound is attained (at all-`+1` for positive couplings).
    pub common_sign_saturation: bool,
}

impl TruncationCertificate {
    /// `sqrt(P_>) <= epsilon <= sqrt(omitted_nonzero * P_>)`, both with
    /// absolute slack `tol`.
    pub fn chain_holds(&self, tol: f64) -> bool {
        let upper = libm::sqrt(self.omitted_nonzero as f64 * self.p_above);
        self.l2_residual <= self.epsilon + tol && self.epsilon <= upper + tol
    }

    pub fn weak_passes(&self, thresholds: &NoiseFloorThresholds) -> bool {
        self.weak_ratio.is_some_and(|r| r <= thresholds.weak)
    }

    pub fn strong_passes(&self, thresholds: &NoiseFloorThresholds) -> bool {
        self.strong_margin.is_some_and(|r| r <= thresholds.strong)
    }
}

/// Certificate for truncating `poly` at `k_max`, in one pass over the terms.
pub fn certify(poly: &IsingPolynomial, k_max: usize) -> Result<TruncationCertificate> {
    if k_max < 1 {
        return Err(Error::InvalidParameter(alloc::string::String::from("k_max must be at least 1")));
    }
    let mut epsilon = 0.0;
    let mut p_below = 0.0;
    let mut p_above = 0.0;
    let mut omitted_nonzero = 0;
    let (mut any_pos, mut any_neg) = (false, false);
    for (s, c) in poly.terms() {
        let k = s.count_ones() as usize;
        if k > k_max {
            epsilon += c.abs();
            p_above += c * c;
            omitted_nonzero += 1;
            any_pos |= c > 0.0;
            any_neg |= c < 0.0;
        } else if k >= 1 {
            p_below += c * c;
        }
    }
    let n = poly.num_qubits();
    let weak_ratio = if p_above == 0.0 {
        Some(0.0)
    } else if p_below == 0.0 {
        None
    } else {
        Some(p_above / p_below)
    };
    // p_above > 0 forces n > k_max >= 1
    let strong_margin = weak_ratio.map(|r| if r == 0.0 { 0.0 } else { r * n as f64 / k_max as f64 });
    Ok(TruncationCertificate {
        k_max,
        num_qubits: n,
        epsilon,
        l2_residual: libm::sqrt(p_above),
        p_below,
        p_above,
        omitted_nonzero,
        omitted_combinatorial: omitted_mode_count(n, k_max),
        weak_ratio,
        strong_margin,
        common_sign_saturation: omitted_nonzero > 0 && (any_pos != any_neg),
    })
}
