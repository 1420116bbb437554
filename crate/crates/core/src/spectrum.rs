//! Per-degree Walsh power of an encoded network and its per-table split.

use alloc::vec;
use alloc::vec::Vec;

use crate::cfn::CenteredCfn;
use crate::encoder::{encode_extended, pair_subset, EncodingLayout, ExtendedTables};
use crate::error::Result;
use crate::walsh::{binomial, fwht};

#[derive(Debug, Clone, PartialEq)]
pub struct SpectralProfile {
    pub num_qubits: usize,
    /// `P_k` for `k = 0..=k_full`, from the couplings of the encoded HUBO.
    pub per_degree: Vec<f64>,
    /// `P_k^(i)` per variable.
    pub unary: Vec<Vec<f64>>,
    /// `P_k^(i,j)` per pairwise table, in table order.
    pub pairwise: Vec<((usize, usize), Vec<f64>)>,
    /// Power of the unused-pattern penalty alone, under the `Penalty` policy.
    pub penalty: Option<Vec<f64>>,
}

impl SpectralProfile {
    pub fn k_full(&self) -> usize {
        self.per_degree.len() - 1
    }

    /// `P_<= = sum_{1 <= k <= k_max} P_k` (the constant is excluded).
    pub fn cumulative_below(&self, k_max: usize) -> f64 {
        self.per_degree.iter().enumerate().skip(1).filter(|&(k, _)| k <= k_max).map(|(_, p)| p).sum()
    }

    /// `P_> = sum_{k > k_max} P_k`.
    pub fn cumulative_above(&self, k_max: usize) -> f64 {
        self.per_degree.iter().skip(k_max + 1).sum()
    }

    /// `2^n - sum_{k <= k_max} C(n, k)`.
    pub fn omitted_mode_count(&self, k_max: usize) -> u128 {
        omitted_mode_count(self.num_qubits, k_max)
    }

    /// `sum_{k >= 1} P_k`.
    pub fn variance(&self) -> f64 {
        self.per_degree.iter().skip(1).sum()
    }

    /// `sum_i P_k^(i)`.
    pub fn unary_total(&self, k: usize) -> f64 {
        self.unary.iter().map(|p| p.get(k).copied().unwrap_or(0.0)).sum()
    }

    /// `sum_{i<j} P_k^(i,j)`.
    pub fn pairwise_total(&self, k: usize) -> f64 {
        self.pairwise.iter().map(|(_, p)| p.get(k).copied().unwrap_or(0.0)).sum()
    }

    /// Largest relative mismatch between `P_k` and the sum of per-table
    /// powers over `k >= 1`. Degrees whose power sits at the rounding floor
    /// of the total variance are measured against that floor.
    pub fn additivity_error(&self) -> f64 {
        let floor = 1e-15 * self.variance();
        (1..self.per_degree.len())
            .map(|k| {
                let global = self.per_degree[k];
                let parts = self.unary_total(k) + self.pairwise_total(k);
                let diff = (global - parts).abs();
                if diff == 0.0 {
                    0.0
                } else {
                    diff / global.abs().max(parts.abs()).max(floor)
                }
            })
            .fold(0.0, f64::max)
    }
}

/// `2^n - sum_{k <= k_max} C(n, k)`.
pub fn omitted_mode_count(n: usize, k_max: usize) -> u128 {
    let kept: u128 = (0..=k_max.min(n)).map(|k| binomial(n, k)).sum();
    (1u128 << n) - kept
}

fn bin_into(out: &mut [f64], degree: usize, c: f64) {
    out[degree] += c * c;
}

/// Spectral profile from per-table transforms of the extended tables.
///
/// Global powers are squared couplings of the assembled HUBO, so additivity
/// compares two independent accumulations.
pub fn table_spectrum(cfn: &CenteredCfn, layout: &EncodingLayout) -> Result<SpectralProfile> {
    let ext = ExtendedTables::build(cfn, layout)?;
    let k_full = layout.k_full();
    let len = k_full + 1;

    let poly = encode_extended(&ext, layout)?;
    let mut per_degree = vec![0.0; len];
    for (s, c) in poly.terms() {
        bin_into(&mut per_degree, s.count_ones() as usize, c);
    }

    let mut unary = Vec::with_capacity(ext.unary.len());
    for table in &ext.unary {
        let mut p = vec![0.0; len];
        for (t, c) in fwht(table)?.iter().enumerate().skip(1) {
            bin_into(&mut p, t.count_ones() as usize, *c);
        }
        unary.push(p);
    }

    let mut pairwise = Vec::with_capacity(ext.pairwise.len());
    for pair in &ext.pairwise {
        let mut p = vec![0.0; len];
        for (t, c) in fwht(&pair.values)?.iter().enumerate() {
            let (gi, gj) = pair_subset(layout, pair, t as u64);
            if gi != 0 && gj != 0 {
                bin_into(&mut p, (gi | gj).count_ones() as usize, *c);
            }
        }
        pairwise.push(((pair.i, pair.j), p));
    }

    let penalty = match layout.penalty_weight() {
        Some(_) => {
            let mut p = vec![0.0; len];
            for table in &ext.penalty {
                for (t, c) in fwht(table)?.iter().enumerate() {
                    bin_into(&mut p, t.count_ones() as usize, *c);
                }
            }
            Some(p)
        }
        None => None,
    };

    Ok(SpectralProfile {
        num_qubits: layout.total_qubits(),
        per_degree,
        unary,
        pairwise,
        penalty,
    })
}
