//! Seeded generators for random instances, shared by tests, the ensemble
//! checks and the command-line demos.

use alloc::vec::Vec;

use rand::Rng;

use crate::cfn::{Cfn, VariableSpec};
use crate::poly::IsingPolynomial;
use crate::walsh::ZeroOnePolynomial;

/// Uniform draw from `[lo, hi)`.
pub fn uniform<R: Rng + ?Sized>(rng: &mut R, lo: f64, hi: f64) -> f64 {
    lo + (hi - lo) * rng.random::<f64>()
}

/// Uniformly random `k`-subset of `{0, .., n-1}` as a mask.
pub fn subset<R: Rng + ?Sized>(rng: &mut R, n: usize, k: usize) -> u64 {
    let mut pool: Vec<usize> = (0..n).collect();
    let mut mask = 0u64;
    for i in 0..k.min(n) {
        let j = rng.random_range(i..n);
        pool.swap(i, j);
        mask |= 1 << pool[i];
    }
    mask
}

/// CFN with the given cardinalities, every unary table present and a
/// pairwise table on every pair. Costs are uniform in `[-scale, scale)`.
pub fn cfn<R: Rng + ?Sized>(rng: &mut R, cards: &[usize], scale: f64) -> Cfn {
    let variables = cards
        .iter()
        .enumerate()
        .map(|(i, &c)| VariableSpec {
            name: alloc::format!("v{i}"),
            cardinality: c,
        })
        .collect();
    let unary = cards
        .iter()
        .enumerate()
        .map(|(i, &c)| (i, (0..c).map(|_| uniform(rng, -scale, scale)).collect()))
        .collect();
    let mut pairwise = Vec::new();
    for i in 0..cards.len() {
        for j in i + 1..cards.len() {
            let costs = (0..cards[i] * cards[j]).map(|_| uniform(rng, -scale, scale)).collect();
            pairwise.push((i, j, costs));
        }
    }
    Cfn::new(variables, unary, pairwise).expect("generated CFN is valid")
}

/// Up to `terms` random monomials on `n` qubits with degrees uniform in
/// `0..=max_degree` and coefficients uniform in `[-scale, scale)`.
pub fn polynomial<R: Rng + ?Sized>(rng: &mut R, n: usize, max_degree: usize, terms: usize, scale: f64) -> IsingPolynomial {
    let draws = draw_terms(rng, n, max_degree, terms, scale);
    IsingPolynomial::from_terms(n, draws).expect("generated polynomial is valid")
}

/// Like [`polynomial`] but in the `{0,1}` basis.
pub fn zero_one_polynomial<R: Rng + ?Sized>(
    rng: &mut R,
    n: usize,
    max_degree: usize,
    terms: usize,
    scale: f64,
) -> ZeroOnePolynomial {
    let draws = draw_terms(rng, n, max_degree, terms, scale);
    ZeroOnePolynomial::from_terms(n, draws).expect("generated polynomial is valid")
}

fn draw_terms<R: Rng + ?Sized>(rng: &mut R, n: usize, max_degree: usize, terms: usize, scale: f64) -> Vec<(u64, f64)> {
    let top = max_degree.min(n);
    (0..terms)
        .map(|_| {
            let k = rng.random_range(0..=top);
            (subset(rng, n, k), uniform(rng, -scale, scale))
        })
        .collect()
}
