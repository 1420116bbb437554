//! Rosenberg quadratization of a HUBO.
//!
//! Works in the `{0,1}` basis. While a monomial of degree three or more
//! remains, the variable pair occurring in the most such monomials (lowest
//! pair on ties) is replaced by a fresh ancilla `y`, and the gadget
//! `M (b_i b_j - 2 b_i y - 2 b_j y + 3 y)` is added. The gadget is zero iff
//! `y = b_i b_j` and at least `M` otherwise.

use alloc::collections::BTreeMap;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::poly::{IsingPolynomial, MAX_QUBITS};
use crate::walsh::{leakage_transform, to_01_basis, ZeroOnePolynomial};

pub const DEFAULT_ANCILLA_CAP: usize = 4096;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Ancilla {
    pub index: usize,
    pub parents: (usize, usize),
}

/// A degree-2 pseudo-Boolean function over original and ancilla bits.
///
/// Variables `0..num_original` are the HUBO's qubits (`b = (1 - z) / 2`),
/// followed by the ancillas in creation order.
#[derive(Debug, Clone, PartialEq)]
pub struct QuboModel {
    num_original: usize,
    constant: f64,
    linear: Vec<f64>,
    /// Keyed by `(i, j)` with `i < j`.
    quadratic: BTreeMap<(usize, usize), f64>,
    ancillas: Vec<Ancilla>,
    penalty: f64,
}

impl QuboModel {
    pub fn num_original(&self) -> usize {
        self.num_original
    }

    pub fn num_ancillas(&self) -> usize {
        self.ancillas.len()
    }

    pub fn num_variables(&self) -> usize {
        self.linear.len()
    }

    pub fn constant(&self) -> f64 {
        self.constant
    }

    pub fn linear(&self) -> &[f64] {
        &self.linear
    }

    pub fn quadratic(&self) -> impl Iterator<Item = ((usize, usize), f64)> + '_ {
        self.quadratic.iter().map(|(&k, &v)| (k, v))
    }

    pub fn ancillas(&self) -> &[Ancilla] {
        &self.ancillas
    }

    /// Gadget weight `M` (0 when no ancilla was needed).
    pub fn penalty_weight(&self) -> f64 {
        self.penalty
    }

    /// Value at a full bit vector (originals then ancillas).
    pub fn evaluate(&self, bits: &[bool]) -> Result<f64> {
        if bits.len() != self.linear.len() {
            return Err(Error::AssignmentLength {
                expected: self.linear.len(),
                found: bits.len(),
            });
        }
        let mut v = self.constant;
        for (c, _) in self.linear.iter().zip(bits).filter(|(_, &b)| b) {
            v += c;
        }
        for (&(i, j), c) in &self.quadratic {
            if bits[i] && bits[j] {
                v += c;
            }
        }
        Ok(v)
    }

    /// Value with original bits `orig` and ancilla bits `anc` given as masks.
    pub fn evaluate_masks(&self, orig: u64, anc: u64) -> f64 {
        let bits: Vec<bool> = (0..self.num_original)
            .map(|i| orig >> i & 1 == 1)
            .chain((0..self.num_ancillas()).map(|a| anc >> a & 1 == 1))
            .collect();
        self.evaluate(&bits).expect("length matches by construction")
    }

    /// Ancilla values forced by the originals (`y = b_i b_j`).
    pub fn consistent_ancillas(&self, orig: &[bool]) -> Vec<bool> {
        let mut bits = orig.to_vec();
        for a in &self.ancillas {
            let v = bits[a.parents.0] && bits[a.parents.1];
            bits.push(v);
        }
        bits.split_off(orig.len())
    }

    /// Exhaustive minimum over the ancillas for fixed originals.
    pub fn min_over_ancillas(&self, orig: u64) -> Result<f64> {
        let a = self.num_ancillas();
        if a > 24 {
            return Err(Error::capacity("ancilla enumeration", a, 24));
        }
        Ok((0..1u64 << a)
            .map(|anc| self.evaluate_masks(orig, anc))
            .fold(f64::INFINITY, f64::min))
    }

    /// The same function in spins, `z = 1 - 2b`, over all variables.
    pub fn to_ising(&self) -> Result<IsingPolynomial> {
        let n = self.linear.len();
        if n > MAX_QUBITS {
            return Err(Error::capacity("Ising view of QUBO", n, MAX_QUBITS));
        }
        let mut p = ZeroOnePolynomial::new(n)?;
        p.add_term(0, self.constant)?;
        for (i, &c) in self.linear.iter().enumerate() {
            p.add_term(1 << i, c)?;
        }
        for (&(i, j), &c) in &self.quadratic {
            p.add_term(1 << i | 1 << j, c)?;
        }
        Ok(leakage_transform(&p))
    }
}

/// Quadratizes with the default ancilla cap.
pub fn quadratize(poly: &IsingPolynomial) -> Result<QuboModel> {
    quadratize_with_cap(poly, DEFAULT_ANCILLA_CAP)
}

pub fn quadratize_with_cap(poly: &IsingPolynomial, ancilla_cap: usize) -> Result<QuboModel> {
    let binary = to_01_basis(poly);
    let n = poly.num_qubits();
    let mut terms: BTreeMap<Vec<usize>, f64> = binary
        .terms()
        .map(|(s, c)| (crate::poly::qubits_of(s).collect(), c))
        .collect();
    // Substitution only merges objective monomials, so their ℓ1 norm never
    // grows past this and one weight serves every gadget.
    let l1: f64 = terms.values().map(|c| c.abs()).sum();
    let m = 1.0 + 2.0 * l1;

    let mut ancillas = Vec::new();
    let mut gadgets: Vec<(usize, usize, usize)> = Vec::new();
    loop {
        let mut counts: BTreeMap<(usize, usize), usize> = BTreeMap::new();
        for vars in terms.keys().filter(|v| v.len() >= 3) {
            for (x, &i) in vars.iter().enumerate() {
                for &j in &vars[x + 1..] {
                    *counts.entry((i, j)).or_insert(0) += 1;
                }
            }
        }
        // max_by_key keeps the last maximum, which in reverse order is the lowest pair
        let Some((&(i, j), _)) = counts.iter().rev().max_by_key(|(_, &c)| c) else {
            break;
        };
        if ancillas.len() == ancilla_cap {
            return Err(Error::capacity("ancilla budget", ancilla_cap + 1, ancilla_cap));
        }
        let y = n + ancillas.len();
        ancillas.push(Ancilla {
            index: y,
            parents: (i, j),
        });
        gadgets.push((i, j, y));

        let hits: Vec<Vec<usize>> = terms
            .keys()
            .filter(|v| v.len() >= 3 && v.contains(&i) && v.contains(&j))
            .cloned()
            .collect();
        for vars in hits {
            let c = terms.remove(&vars).unwrap_or(0.0);
            let mut reduced: Vec<usize> = vars.into_iter().filter(|&v| v != i && v != j).collect();
            reduced.push(y);
            *terms.entry(reduced).or_insert(0.0) += c;
        }
    }

    let total = n + ancillas.len();
    let mut constant = 0.0;
    let mut linear = vec![0.0; total];
    let mut quadratic: BTreeMap<(usize, usize), f64> = BTreeMap::new();
    for (vars, c) in &terms {
        match vars.as_slice() {
            [] => constant += c,
            [a] => linear[*a] += c,
            [a, b] => *quadratic.entry((*a, *b)).or_insert(0.0) += c,
            _ => unreachable!("loop exits only at degree <= 2"),
        }
    }
    for &(i, j, y) in &gadgets {
        *quadratic.entry((i, j)).or_insert(0.0) += m;
        *quadratic.entry((i, y)).or_insert(0.0) -= 2.0 * m;
        *quadratic.entry((j, y)).or_insert(0.0) -= 2.0 * m;
        linear[y] += 3.0 * m;
    }
    quadratic.retain(|_, c| *c != 0.0);

    Ok(QuboModel {
        num_original: n,
        constant,
        linear,
        quadratic,
        penalty: if ancillas.is_empty() { 0.0 } else { m },
        ancillas,
    })
}
