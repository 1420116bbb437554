//! Walsh–Hadamard machinery on the Ising hypercube.
//!
//! Index convention shared by every table in the crate: bit `q` of an index
//! is set when coordinate `q` has spin `-1` (bit value 1 under `z = 1 - 2b`).
//! With this convention `f̂(T) = 2^{-D} sum_x f(x) (-1)^{|x & T|}`.

use alloc::collections::BTreeMap;
use alloc::vec;
use alloc::vec::Vec;


use crate::error::{Error, Result};
use crate::poly::{full_mask, parity_sign, IsingPolynomial, MAX_QUBITS};

/// Largest table dimension accepted by [`fwht`].
pub const MAX_TABLE_DIM: usize = 26;
/// Largest table dimension accepted by [`smoothness_report`].
pub const MAX_SMOOTHNESS_DIM: usize = 16;

/// In-place butterfly without normalization. Applying it twice multiplies
/// the input by `len`.
pub fn wht_unnormalized(values: &mut [f64]) {
    let n = values.len();
    debug_assert!(n.is_power_of_two());
    let mut h = 1;
    while h < n {
        for block in (0..n).step_by(2 * h) {
            for k in block..block + h {
                let (a, b) = (values[k], values[k + h]);
                values[k] = a + b;
                values[k + h] = a - b;
            }
        }
        h *= 2;
    }
}

fn dimension_of(len: usize) -> Result<usize> {
    if len == 0 || !len.is_power_of_two() {
        return Err(Error::NotPowerOfTwo(len));
    }
    Ok(len.trailing_zeros() as usize)
}

/// Walsh coefficients `f̂(T)` of a table of length `2^D` (expectation
/// normalization), indexed by subset mask `T`.
pub fn fwht(values: &[f64]) -> Result<Vec<f64>> {
    let dim = dimension_of(values.len())?;
    if dim > MAX_TABLE_DIM {
        return Err(Error::capacity("fwht dimension", dim, MAX_TABLE_DIM));
    }
    let mut out = values.to_vec();
    wht_unnormalized(&mut out);
    let scale = 1.0 / values.len() as f64;
    out.iter_mut().for_each(|v| *v *= scale);
    Ok(out)
}

/// A polynomial in `{0,1}` variables: `f(b) = sum_S c'_S prod_{i in S} b_i`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ZeroOnePolynomial {
    num_vars: usize,
    terms: BTreeMap<u64, f64>,
}

impl ZeroOnePolynomial {
    pub fn new(num_vars: usize) -> Result<Self> {
        if num_vars > MAX_QUBITS {
            return Err(Error::capacity("binary register", num_vars, MAX_QUBITS));
        }
        Ok(ZeroOnePolynomial {
            num_vars,
            terms: BTreeMap::new(),
        })
    }

    pub fn from_terms(num_vars: usize, terms: impl IntoIterator<Item = (u64, f64)>) -> Result<Self> {
        let mut p = Self::new(num_vars)?;
        for (m, c) in terms {
            p.add_term(m, c)?;
        }
        Ok(p)
    }

    pub fn add_term(&mut self, mask: u64, coeff: f64) -> Result<()> {
        if mask & !full_mask(self.num_vars) != 0 {
            return Err(Error::QubitOutOfRange {
                mask,
                num_qubits: self.num_vars,
            });
        }
        if !coeff.is_finite() {
            return Err(Error::NonFinite(alloc::format!("coefficient at {mask:#x}")));
        }
        if coeff != 0.0 {
            let slot = self.terms.entry(mask).or_insert(0.0);
            *slot += coeff;
            if *slot == 0.0 {
                self.terms.remove(&mask);
            }
        }
        Ok(())
    }

    pub fn num_vars(&self) -> usize {
        self.num_vars
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = (u64, f64)> + '_ {
        self.terms.iter().map(|(&m, &c)| (m, c))
    }

    pub fn coeff(&self, mask: u64) -> f64 {
        self.terms.get(&mask).copied().unwrap_or(0.0)
    }

    pub fn degree(&self) -> usize {
        self.terms.keys().map(|m| m.count_ones() as usize).max().unwrap_or(0)
    }

    /// Value at the bit vector whose set bits are `ones`.
    pub fn evaluate_bits(&self, ones: u64) -> f64 {
        self.terms
            .iter()
            .filter(|(&s, _)| s & ones == s)
            .map(|(_, &c)| c)
            .sum()
    }

    /// Drops every monomial of degree above `k_max`.
    pub fn truncate(&self, k_max: usize) -> ZeroOnePolynomial {
        ZeroOnePolynomial {
            num_vars: self.num_vars,
            terms: self
                .terms
                .iter()
                .filter(|(m, _)| m.count_ones() as usize <= k_max)
                .map(|(&m, &c)| (m, c))
                .collect(),
        }
    }
}

/// Submasks of `set`, including `0` and `set` itself.
fn submasks(set: u64) -> impl Iterator<Item = u64> {
    let mut next = Some(set);
    core::iter::from_fn(move || {
        let cur = next?;
        next = if cur == 0 { None } else { Some((cur - 1) & set) };
        Some(cur)
    })
}

/// Walsh coefficients of a `{0,1}` polynomial:
/// `f̂(T) = (-1)^{|T|} sum_{S ⊇ T} c'_S / 2^{|S|}`, by expanding each
/// monomial `prod b_i = 2^{-|S|} sum_{T ⊆ S} (-1)^{|T|} chi_T`.
pub fn leakage_transform(poly01: &ZeroOnePolynomial) -> IsingPolynomial {
    let mut out = BTreeMap::new();
    for (s, c) in poly01.terms() {
        let weight = c / (1u64 << s.count_ones()) as f64;
        for t in submasks(s) {
            let signed = if t.count_ones() & 1 == 0 { weight } else { -weight };
            *out.entry(t).or_insert(0.0) += signed;
        }
    }
    let mut p = IsingPolynomial::from_map_unchecked(poly01.num_vars(), out);
    p.prune();
    p
}

/// Change in `f̂(T)`, `|T| <= k_max`, caused by dropping the `{0,1}`
/// monomials of degree above `k_max`:
/// `(-1)^{|T|} sum_{S ⊇ T, |S| > k_max} c'_S / 2^{|S|}`.
pub fn leakage_error(poly01: &ZeroOnePolynomial, k_max: usize) -> IsingPolynomial {
    let mut out = BTreeMap::new();
    for (s, c) in poly01.terms().filter(|(s, _)| s.count_ones() as usize > k_max) {
        let weight = c / (1u64 << s.count_ones()) as f64;
        for t in submasks(s).filter(|t| t.count_ones() as usize <= k_max) {
            let signed = if t.count_ones() & 1 == 0 { weight } else { -weight };
            *out.entry(t).or_insert(0.0) += signed;
        }
    }
    IsingPolynomial::from_map_unchecked(poly01.num_vars(), out)
}

/// Inverse of [`leakage_transform`] via `z_i = 1 - 2 b_i`.
pub fn to_01_basis(poly: &IsingPolynomial) -> ZeroOnePolynomial {
    let mut terms: BTreeMap<u64, f64> = BTreeMap::new();
    for (s, c) in poly.terms() {
        for u in submasks(s) {
            let k = u.count_ones();
            let scale = (1u64 << k) as f64;
            *terms.entry(u).or_insert(0.0) += if k & 1 == 0 { c * scale } else { -c * scale };
        }
    }
    let max = terms.values().fold(0.0f64, |m, c| m.max(c.abs()));
    terms.retain(|_, c| c.abs() > crate::poly::COEFF_EPS * max);
    ZeroOnePolynomial {
        num_vars: poly.num_qubits(),
        terms,
    }
}

/// Mixed discrete derivative `D_S f = sum_{T ⊇ S} c_T chi_{T \ S}`.
pub fn discrete_derivative(poly: &IsingPolynomial, subset: u64) -> IsingPolynomial {
    let mut out = BTreeMap::new();
    for (t, c) in poly.terms() {
        if t & subset == subset {
            *out.entry(t & !subset).or_insert(0.0) += c;
        }
    }
    IsingPolynomial::from_map_unchecked(poly.num_qubits(), out)
}

/// Binomial coefficient as `u128`.
pub fn binomial(n: usize, k: usize) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * (n - i) as u128 / (i + 1) as u128;
    }
    acc
}

/// Smoothness data for one order `k`.
#[derive(Debug, Clone, PartialEq)]
pub struct SmoothnessDegree {
    pub k: usize,
    /// `L_k = max_{|S|=k} ||D_S f||_inf`.
    pub lipschitz: f64,
    /// `sum_{j >= k} C(j, k) P_j`, from the spectrum.
    pub tail_lhs: f64,
    /// `sum_{|S|=k} ||D_S f||_2^2`, from pointwise derivatives.
    pub tail_rhs: f64,
    /// `C(D, k) L_k^2`.
    pub tail_bound: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SmoothnessReport {
    pub dimension: usize,
    /// `P_j` for `j = 0..=D`.
    pub power: Vec<f64>,
    pub degrees: Vec<SmoothnessDegree>,
    /// Least-squares ratio `r` of `L_k ~ a r^k` over the nonzero `L_k`;
    /// `None` with fewer than two nonzero constants.
    pub geometric_ratio: Option<f64>,
}

impl SmoothnessReport {
    /// Largest relative gap between the two sides of the tail identity.
    pub fn identity_error(&self) -> f64 {
        self.degrees
            .iter()
            .map(|d| (d.tail_lhs - d.tail_rhs).abs() / d.tail_lhs.abs().max(d.tail_rhs.abs()).max(1.0))
            .fold(0.0, f64::max)
    }

    /// Largest excess of the tail over its smoothness bound (non-positive when
    /// the bound holds).
    pub fn bound_excess(&self) -> f64 {
        self.degrees
            .iter()
            .map(|d| d.tail_lhs - d.tail_bound)
            .fold(f64::NEG_INFINITY, f64::max)
    }
}

/// Derivative along local coordinate `pos` of a table over `2^m` points.
fn half_difference(values: &[f64], pos: usize) -> Vec<f64> {
    let half = values.len() / 2;
    let low_mask = (1usize << pos) - 1;
    (0..half)
        .map(|x| {
            let x0 = ((x >> pos) << (pos + 1)) | (x & low_mask);
            (values[x0] - values[x0 | 1 << pos]) / 2.0
        })
        .collect()
}

struct DerivativeStats {
    sup: Vec<f64>,
    l2_sum: Vec<f64>,
}

/// Visits every subset `S` once (coordinates added in increasing order) and
/// records `||D_S f||_inf` and `||D_S f||_2^2` per order. Each `D_S f` is
/// stored on the cube of the coordinates outside `S`, so the total work is
/// `3^D`.
fn visit_derivatives(values: &[f64], start: usize, order: usize, stats: &mut DerivativeStats) {
    let remaining = values.len().trailing_zeros() as usize;
    for pos in start..remaining {
        let d = half_difference(values, pos);
        let k = order + 1;
        let sup = d.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let l2 = d.iter().map(|v| v * v).sum::<f64>() / d.len() as f64;
        stats.sup[k] = stats.sup[k].max(sup);
        stats.l2_sum[k] += l2;
        visit_derivatives(&d, pos, k, stats);
    }
}

/// Lipschitz constants and both sides of the smoothness tail bound for a
/// table on `{-1,+1}^D`.
pub fn smoothness_report(values: &[f64]) -> Result<SmoothnessReport> {
    let dim = dimension_of(values.len())?;
    if dim > MAX_SMOOTHNESS_DIM {
        return Err(Error::capacity("smoothness dimension", dim, MAX_SMOOTHNESS_DIM));
    }
    let coeffs = fwht(values)?;
    let mut power = vec![0.0; dim + 1];
    for (t, c) in coeffs.iter().enumerate() {
        power[t.count_ones() as usize] += c * c;
    }

    let mut stats = DerivativeStats {
        sup: vec![0.0; dim + 1],
        l2_sum: vec![0.0; dim + 1],
    };
    visit_derivatives(values, 0, 0, &mut stats);

    let degrees: Vec<SmoothnessDegree> = (1..=dim)
        .map(|k| {
            let tail_lhs = (k..=dim).map(|j| binomial(j, k) as f64 * power[j]).sum();
            let lipschitz = stats.sup[k];
            SmoothnessDegree {
                k,
                lipschitz,
                tail_lhs,
                tail_rhs: stats.l2_sum[k],
                tail_bound: binomial(dim, k) as f64 * lipschitz * lipschitz,
            }
        })
        .collect();

    let scale = degrees.iter().fold(0.0f64, |m, d| m.max(d.lipschitz));
    let pts: Vec<(f64, f64)> = degrees
        .iter()
        .filter(|d| d.lipschitz > 1e-12 * scale.max(f64::MIN_POSITIVE))
        .map(|d| (d.k as f64, libm::log(d.lipschitz)))
        .collect();
    let geometric_ratio = (pts.len() >= 2).then(|| {
        let n = pts.len() as f64;
        let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
        let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
        let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
        let sxx: f64 = pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
        libm::exp(sxy / sxx)
    });

    Ok(SmoothnessReport {
        dimension: dim,
        power,
        degrees,
        geometric_ratio,
    })
}

/// Walsh coefficients of a small function given pointwise, by the defining
/// sum. `O(4^D)`; used as a reference in tests and diagnostics.
pub fn naive_walsh(values: &[f64]) -> Result<Vec<f64>> {
    dimension_of(values.len())?;
    let n = values.len();
    Ok((0..n)
        .map(|t| {
            values
                .iter()
                .enumerate()
                .map(|(x, v)| v * parity_sign(t as u64, x as u64))
                .sum::<f64>()
                / n as f64
        })
        .collect())
}
