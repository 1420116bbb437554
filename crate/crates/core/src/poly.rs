//! Sparse Ising-basis polynomials over at most 64 spins.
//!
//! A monomial is a subset `S` of qubits stored as a `u64` bitmask; in the
//! Ising basis it is the Walsh function `chi_S(z) = prod_{i in S} z_i`, so the
//! stored couplings are exactly the Walsh coefficients of the function.
//!
//! Spin configurations are carried as a "down mask": bit `i` is set when
//! `z_i = -1` (equivalently `b_i = 1` under `z = 1 - 2b`).

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;


use crate::error::{Error, Result};

pub const MAX_QUBITS: usize = 64;

/// Relative threshold below which couplings are treated as zero.
pub const COEFF_EPS: f64 = 1e-14;

#[inline]
pub fn full_mask(n: usize) -> u64 {
    if n >= 64 {
        u64::MAX
    } else {
        (1u64 << n) - 1
    }
}

/// `chi_S(z)` for the configuration with the given down mask.
#[inline]
pub fn parity_sign(subset: u64, down: u64) -> f64 {
    if (subset & down).count_ones() & 1 == 0 {
        1.0
    } else {
        -1.0
    }
}

pub fn mask_from_qubits(qubits: &[usize], num_qubits: usize) -> Result<u64> {
    let mut mask = 0u64;
    for &q in qubits {
        if q >= num_qubits || q >= MAX_QUBITS {
            return Err(Error::QubitOutOfRange {
                mask: if q < 64 { 1 << q } else { u64::MAX },
                num_qubits,
            });
        }
        mask |= 1 << q;
    }
    Ok(mask)
}

/// Qubit indices of a mask in increasing order.
pub fn qubits_of(mask: u64) -> impl Iterator<Item = usize> {
    let mut m = mask;
    core::iter::from_fn(move || {
        if m == 0 {
            None
        } else {
            let q = m.trailing_zeros() as usize;
            m &= m - 1;
            Some(q)
        }
    })
}

/// A point of `{-1,+1}^n`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Spins {
    len: usize,
    down: u64,
}

impl Spins {
    pub fn all_up(len: usize) -> Result<Self> {
        Self::from_down_mask(len, 0)
    }

    pub fn from_down_mask(len: usize, down: u64) -> Result<Self> {
        if len > MAX_QUBITS {
            return Err(Error::capacity("spin vector", len, MAX_QUBITS));
        }
        if down & !full_mask(len) != 0 {
            return Err(Error::QubitOutOfRange {
                mask: down,
                num_qubits: len,
            });
        }
        Ok(Spins { len, down })
    }

    pub fn from_slice(z: &[i8]) -> Result<Self> {
        if z.len() > MAX_QUBITS {
            return Err(Error::capacity("spin vector", z.len(), MAX_QUBITS));
        }
        let mut down = 0;
        for (i, &s) in z.iter().enumerate() {
            match s {
                1 => {}
                -1 => down |= 1 << i,
                other => return Err(Error::InvalidSpin(other)),
            }
        }
        Ok(Spins { len: z.len(), down })
    }

    /// Parses a string of `+` / `-` characters.
    pub fn parse(s: &str) -> Result<Self> {
        let mut z = Vec::with_capacity(s.len());
        for ch in s.chars() {
            z.push(match ch {
                '+' => 1,
                '-' => -1,
                _ => return Err(Error::InvalidParameter(alloc::format!("bad spin character {ch:?}"))),
            });
        }
        Self::from_slice(&z)
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn down_mask(&self) -> u64 {
        self.down
    }

    pub fn get(&self, i: usize) -> i8 {
        if self.down >> i & 1 == 1 {
            -1
        } else {
            1
        }
    }

    pub fn flipped(&self, i: usize) -> Spins {
        Spins {
            len: self.len,
            down: self.down ^ (1 << i),
        }
    }

    pub fn to_vec(&self) -> Vec<i8> {
        (0..self.len).map(|i| self.get(i)).collect()
    }

    /// Restriction to the first `len` coordinates.
    pub fn truncated(&self, len: usize) -> Spins {
        let len = len.min(self.len);
        Spins {
            len,
            down: self.down & full_mask(len),
        }
    }

    /// Key whose numeric order is the lexicographic order of the `+`/`-`
    /// string (coordinate 0 first, `+` before `-`).
    pub fn lex_key(&self) -> u64 {
        lex_key(self.down, self.len)
    }
}

#[inline]
pub(crate) fn lex_key(down: u64, len: usize) -> u64 {
    if len == 0 {
        0
    } else {
        down.reverse_bits() >> (64 - len)
    }
}

impl fmt::Display for Spins {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s: String = (0..self.len)
            .map(|i| if self.get(i) == 1 { '+' } else { '-' })
            .collect();
        f.write_str(&s)
    }
}

/// `f(z) = sum_S c_S prod_{i in S} z_i`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct IsingPolynomial {
    num_qubits: usize,
    terms: BTreeMap<u64, f64>,
}

impl IsingPolynomial {
    pub fn new(num_qubits: usize) -> Result<Self> {
        if num_qubits > MAX_QUBITS {
            return Err(Error::capacity("qubit register", num_qubits, MAX_QUBITS));
        }
        Ok(IsingPolynomial {
            num_qubits,
            terms: BTreeMap::new(),
        })
    }

    /// Builds a polynomial, summing repeated subsets and pruning negligible
    /// couplings.
    pub fn from_terms(num_qubits: usize, terms: impl IntoIterator<Item = (u64, f64)>) -> Result<Self> {
        let mut p = Self::new(num_qubits)?;
        for (mask, c) in terms {
            p.add_term(mask, c)?;
        }
        p.prune();
        Ok(p)
    }

    /// Adds `coeff` to the coupling at `mask`; an exact zero sum removes the term.
    pub fn add_term(&mut self, mask: u64, coeff: f64) -> Result<()> {
        if mask & !full_mask(self.num_qubits) != 0 {
            return Err(Error::QubitOutOfRange {
                mask,
                num_qubits: self.num_qubits,
            });
        }
        if !coeff.is_finite() {
            return Err(Error::NonFinite(alloc::format!("coupling at {mask:#x}")));
        }
        self.accumulate(mask, coeff);
        Ok(())
    }

    pub(crate) fn accumulate(&mut self, mask: u64, coeff: f64) {
        if coeff == 0.0 {
            return;
        }
        let slot = self.terms.entry(mask).or_insert(0.0);
        *slot += coeff;
        if *slot == 0.0 {
            self.terms.remove(&mask);
        }
    }

    /// Drops couplings with `|c| <= COEFF_EPS * max |c|`.
    pub fn prune(&mut self) {
        let max = self.max_abs_coeff();
        let cut = COEFF_EPS * max;
        self.terms.retain(|_, c| c.abs() > cut);
    }

    pub(crate) fn from_map_unchecked(num_qubits: usize, terms: BTreeMap<u64, f64>) -> Self {
        IsingPolynomial { num_qubits, terms }
    }

    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    /// Terms in increasing mask order.
    pub fn terms(&self) -> impl Iterator<Item = (u64, f64)> + '_ {
        self.terms.iter().map(|(&m, &c)| (m, c))
    }

    /// Terms ordered by degree, then by the lexicographic qubit list.
    pub fn sorted_terms(&self) -> Vec<(u64, f64)> {
        let mut out: Vec<(u64, f64)> = self.terms().collect();
        // within a degree, a larger bit-reversed mask has the smaller leading qubit
        out.sort_by_key(|&(m, _)| (m.count_ones(), core::cmp::Reverse(m.reverse_bits())));
        out
    }

    pub fn coeff(&self, mask: u64) -> f64 {
        self.terms.get(&mask).copied().unwrap_or(0.0)
    }

    pub fn constant(&self) -> f64 {
        self.coeff(0)
    }

    pub fn degree(&self) -> usize {
        self.terms.keys().map(|m| m.count_ones() as usize).max().unwrap_or(0)
    }

    pub fn max_abs_coeff(&self) -> f64 {
        self.terms.values().fold(0.0, |m, c| m.max(c.abs()))
    }

    pub fn evaluate(&self, z: &[i8]) -> Result<f64> {
        if z.len() != self.num_qubits {
            return Err(Error::SpinLength {
                expected: self.num_qubits,
                found: z.len(),
            });
        }
        Ok(self.evaluate_down(Spins::from_slice(z)?.down_mask()))
    }

    pub fn evaluate_spins(&self, z: &Spins) -> Result<f64> {
        if z.len() != self.num_qubits {
            return Err(Error::SpinLength {
                expected: self.num_qubits,
                found: z.len(),
            });
        }
        Ok(self.evaluate_down(z.down_mask()))
    }

    #[inline]
    pub fn evaluate_down(&self, down: u64) -> f64 {
        self.terms.iter().map(|(&s, &c)| c * parity_sign(s, down)).sum()
    }

    /// `f(z with spin i negated) - f(z)`.
    pub fn flip_delta(&self, down: u64, i: usize) -> f64 {
        let bit = 1u64 << i;
        -2.0 * self
            .terms
            .iter()
            .filter(|(&s, _)| s & bit != 0)
            .map(|(&s, &c)| c * parity_sign(s, down))
            .sum::<f64>()
    }

    /// All `n` flip deltas at once, in one pass over the terms.
    pub fn flip_deltas(&self, down: u64) -> Vec<f64> {
        let mut deltas = vec![0.0; self.num_qubits];
        for (&s, &c) in &self.terms {
            if s == 0 {
                continue;
            }
            let v = -2.0 * c * parity_sign(s, down);
            for q in qubits_of(s) {
                deltas[q] += v;
            }
        }
        deltas
    }

    /// `P_k = sum_{|S| = k} c_S^2` for `k = 0..=degree`.
    pub fn power_by_degree(&self) -> Vec<f64> {
        let mut p = vec![0.0; self.degree() + 1];
        for (&s, &c) in &self.terms {
            p[s.count_ones() as usize] += c * c;
        }
        p
    }

    /// Variance over the uniform hypercube: `sum_{S != {}} c_S^2`.
    pub fn variance(&self) -> f64 {
        self.terms.iter().filter(|(&s, _)| s != 0).map(|(_, c)| c * c).sum()
    }

    /// Termwise sum.
    pub fn add(&self, other: &IsingPolynomial) -> IsingPolynomial {
        let mut out = self.clone();
        out.num_qubits = out.num_qubits.max(other.num_qubits);
        for (&s, &c) in &other.terms {
            out.accumulate(s, c);
        }
        out
    }

    /// Keeps the terms accepted by `keep`; coefficients are copied unchanged.
    pub fn filter(&self, mut keep: impl FnMut(u64, f64) -> bool) -> IsingPolynomial {
        IsingPolynomial {
            num_qubits: self.num_qubits,
            terms: self
                .terms
                .iter()
                .filter(|(&s, &c)| keep(s, c))
                .map(|(&s, &c)| (s, c))
                .collect(),
        }
    }

    /// Values at all `2^n` configurations, indexed by down mask, via one
    /// unnormalized Walsh–Hadamard transform.
    pub fn truth_table(&self, max_qubits: usize) -> Result<Vec<f64>> {
        if self.num_qubits > max_qubits {
            return Err(Error::capacity("truth table", self.num_qubits, max_qubits));
        }
        let mut table = vec![0.0; 1usize << self.num_qubits];
        for (&s, &c) in &self.terms {
            table[s as usize] = c;
        }
        crate::walsh::wht_unnormalized(&mut table);
        Ok(table)
    }
}
