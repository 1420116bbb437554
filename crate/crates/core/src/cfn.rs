//! Pairwise cost function networks.
//!
//! A [`Cfn`] holds `N` discrete variables, one unary cost table per variable
//! and at most one pairwise table per unordered variable pair. Choice indices
//! are 1-based at the public boundary ([`Cfn::evaluate`]) and 0-based
//! everywhere else.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::ops::Deref;


use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct VariableSpec {
    pub name: String,
    pub cardinality: usize,
}

/// Row-major `|d_i| x |d_j|` table with `i < j`.
#[derive(Debug, Clone, PartialEq)]
pub struct PairwiseTable {
    pub i: usize,
    pub j: usize,
    pub costs: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Cfn {
    variables: Vec<VariableSpec>,
    unary: Vec<Vec<f64>>,
    pairwise: Vec<PairwiseTable>,
}

impl Cfn {
    /// Validates and assembles a network.
    ///
    /// Missing unary tables are all-zero. A pairwise table given as `(j, i)`
    /// with `j > i` is transposed into `(i, j)` orientation. The pairwise list
    /// is stored sorted by `(i, j)`.
    pub fn new(
        variables: Vec<VariableSpec>,
        unary: Vec<(usize, Vec<f64>)>,
        pairwise: Vec<(usize, usize, Vec<f64>)>,
    ) -> Result<Self> {
        let count = variables.len();
        for (idx, v) in variables.iter().enumerate() {
            if v.cardinality == 0 {
                return Err(Error::ZeroCardinality(idx));
            }
        }
        let in_range = |index: usize| {
            if index < count {
                Ok(())
            } else {
                Err(Error::VariableOutOfRange { index, count })
            }
        };

        let mut tables: Vec<Option<Vec<f64>>> = vec![None; count];
        for (var, costs) in unary {
            in_range(var)?;
            let expected = variables[var].cardinality;
            if costs.len() != expected {
                return Err(Error::ShapeMismatch {
                    table: format!("unary table of variable {var}"),
                    expected,
                    found: costs.len(),
                });
            }
            check_finite(&costs, || format!("unary table of variable {var}"))?;
            if tables[var].replace(costs).is_some() {
                return Err(Error::DuplicateUnary(var));
            }
        }
        let unary = tables
            .into_iter()
            .zip(&variables)
            .map(|(t, v)| t.unwrap_or_else(|| vec![0.0; v.cardinality]))
            .collect();

        let mut pairs = Vec::with_capacity(pairwise.len());
        for (a, b, costs) in pairwise {
            in_range(a)?;
            in_range(b)?;
            if a == b {
                return Err(Error::SelfPair(a));
            }
            let (da, db) = (variables[a].cardinality, variables[b].cardinality);
            if costs.len() != da * db {
                return Err(Error::ShapeMismatch {
                    table: format!("pairwise table ({a}, {b})"),
                    expected: da * db,
                    found: costs.len(),
                });
            }
            check_finite(&costs, || format!("pairwise table ({a}, {b})"))?;
            let table = if a < b {
                PairwiseTable { i: a, j: b, costs }
            } else {
                let mut t = vec![0.0; costs.len()];
                for r in 0..da {
                    for c in 0..db {
                        t[c * da + r] = costs[r * db + c];
                    }
                }
                PairwiseTable { i: b, j: a, costs: t }
            };
            pairs.push(table);
        }
        pairs.sort_by_key(|t| (t.i, t.j));
        if let Some(w) = pairs.windows(2).find(|w| (w[0].i, w[0].j) == (w[1].i, w[1].j)) {
            return Err(Error::DuplicatePair(w[0].i, w[0].j));
        }

        Ok(Cfn {
            variables,
            unary,
            pairwise: pairs,
        })
    }

    pub fn num_variables(&self) -> usize {
        self.variables.len()
    }

    pub fn variables(&self) -> &[VariableSpec] {
        &self.variables
    }

    pub fn cardinality(&self, var: usize) -> usize {
        self.variables[var].cardinality
    }

    pub fn unary(&self, var: usize) -> &[f64] {
        &self.unary[var]
    }

    pub fn pairwise(&self) -> &[PairwiseTable] {
        &self.pairwise
    }

    /// Total cost for 1-based choice indices.
    pub fn evaluate(&self, assignment: &[usize]) -> Result<f64> {
        if assignment.len() != self.variables.len() {
            return Err(Error::AssignmentLength {
                expected: self.variables.len(),
                found: assignment.len(),
            });
        }
        let mut zero_based = Vec::with_capacity(assignment.len());
        for (var, (&choice, spec)) in assignment.iter().zip(&self.variables).enumerate() {
            if choice == 0 || choice > spec.cardinality {
                return Err(Error::ChoiceOutOfRange {
                    var,
                    choice,
                    cardinality: spec.cardinality,
                });
            }
            zero_based.push(choice - 1);
        }
        Ok(self.evaluate_zero_based(&zero_based))
    }

    /// Total cost for 0-based choices. Panics on out-of-range input.
    pub fn evaluate_zero_based(&self, choices: &[usize]) -> f64 {
        let mut total = 0.0;
        for (table, &c) in self.unary.iter().zip(choices) {
            total += table[c];
        }
        for t in &self.pairwise {
            total += t.costs[choices[t.i] * self.variables[t.j].cardinality + choices[t.j]];
        }
        total
    }

    /// Calls `visit` with every valid 0-based assignment, first variable fastest.
    pub fn for_each_assignment(&self, mut visit: impl FnMut(&[usize])) {
        let mut choices = vec![0usize; self.variables.len()];
        loop {
            visit(&choices);
            let mut var = 0;
            loop {
                if var == choices.len() {
                    return;
                }
                choices[var] += 1;
                if choices[var] < self.variables[var].cardinality {
                    break;
                }
                choices[var] = 0;
                var += 1;
            }
        }
    }

    /// Largest absolute cost entry across all tables.
    pub fn max_abs_entry(&self) -> f64 {
        self.unary
            .iter()
            .flatten()
            .chain(self.pairwise.iter().flat_map(|t| t.costs.iter()))
            .fold(0.0, |m, &v| m.max(v.abs()))
    }

    /// Upper bound on `max f - min f`: the sum of per-table value ranges.
    pub fn range_bound(&self) -> f64 {
        let spread = |vals: &[f64]| {
            let (lo, hi) = vals
                .iter()
                .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)));
            if vals.is_empty() {
                0.0
            } else {
                hi - lo
            }
        };
        self.unary.iter().map(|t| spread(t)).sum::<f64>()
            + self.pairwise.iter().map(|t| spread(&t.costs)).sum::<f64>()
    }
}

fn check_finite(costs: &[f64], what: impl FnOnce() -> String) -> Result<()> {
    if costs.iter().all(|c| c.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFinite(what()))
    }
}

/// A [`Cfn`] whose pairwise tables have (optionally) been doubly centered.
///
/// `CenteredCfn::uncentered` wraps a network untouched, for pipelines that
/// opt out of centering.
#[derive(Debug, Clone, PartialEq)]
pub struct CenteredCfn {
    cfn: Cfn,
    centered: bool,
}

impl CenteredCfn {
    pub fn uncentered(cfn: Cfn) -> Self {
        CenteredCfn {
            cfn,
            centered: false,
        }
    }

    pub fn is_centered(&self) -> bool {
        self.centered
    }

    pub fn as_cfn(&self) -> &Cfn {
        &self.cfn
    }

    pub fn into_inner(self) -> Cfn {
        self.cfn
    }

    /// Tolerance on pairwise row/column sums: `1e-9 * max(1, max |beta|)`.
    pub fn center_tolerance(&self) -> f64 {
        let max_beta = self
            .cfn
            .pairwise
            .iter()
            .flat_map(|t| t.costs.iter())
            .fold(0.0f64, |m, &v| m.max(v.abs()));
        1e-9 * max_beta.max(1.0)
    }
}

impl Deref for CenteredCfn {
    type Target = Cfn;

    fn deref(&self) -> &Cfn {
        &self.cfn
    }
}

/// Marginals removed from a row-major table by [`center_table`].
pub(crate) struct Marginals {
    pub rows: Vec<f64>,
    /// Column means minus the grand mean.
    pub cols: Vec<f64>,
}

/// Doubly centers a row-major `rows x cols` table in place.
///
/// Row means go to the row side; column means net of the grand mean go to the
/// column side, so `old(r, c) = new(r, c) + rows[r] + cols[c]`.
pub(crate) fn center_table(values: &mut [f64], rows: usize, cols: usize) -> Marginals {
    let mut row_means = vec![0.0; rows];
    let mut col_means = vec![0.0; cols];
    for r in 0..rows {
        for c in 0..cols {
            let v = values[r * cols + c];
            row_means[r] += v;
            col_means[c] += v;
        }
    }
    row_means.iter_mut().for_each(|m| *m /= cols as f64);
    col_means.iter_mut().for_each(|m| *m /= rows as f64);
    let grand = row_means.iter().sum::<f64>() / rows as f64;
    for r in 0..rows {
        for c in 0..cols {
            values[r * cols + c] -= row_means[r] + col_means[c] - grand;
        }
    }
    col_means.iter_mut().for_each(|m| *m -= grand);
    Marginals {
        rows: row_means,
        cols: col_means,
    }
}

/// Centers every pairwise table, absorbing the marginals into the unary
/// tables. The grand mean stays with the lower-index variable of each pair.
pub fn center(cfn: &Cfn) -> CenteredCfn {
    let mut out = cfn.clone();
    for t in &mut out.pairwise {
        let (rows, cols) = (out.variables[t.i].cardinality, out.variables[t.j].cardinality);
        let m = center_table(&mut t.costs, rows, cols);
        for (a, r) in out.unary[t.i].iter_mut().zip(&m.rows) {
            *a += r;
        }
        for (a, c) in out.unary[t.j].iter_mut().zip(&m.cols) {
            *a += c;
        }
    }
    CenteredCfn {
        cfn: out,
        centered: true,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::random;
    use alloc::string::ToString;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn vars(cards: &[usize]) -> Vec<VariableSpec> {
        cards
            .iter()
            .enumerate()
            .map(|(i, &c)| VariableSpec {
                name: format!("v{i}"),
                cardinality: c,
            })
            .collect()
    }

    #[test]
    fn single_lookup() {
        let cfn = Cfn::new(vars(&[2]), vec![(0, vec![3.5, -2.0])], vec![]).unwrap();
        assert_eq!(cfn.evaluate(&[2]).unwrap(), -2.0);
    }

    #[test]
    fn matrix_lookup() {
        let cfn = Cfn::new(vars(&[2, 2]), vec![], vec![(0, 1, vec![1.0, 2.0, 3.0, 4.0])]).unwrap();
        assert_eq!(cfn.evaluate(&[2, 1]).unwrap(), 3.0);
    }

    #[test]
    fn reversed_pair_is_transposed() {
        let a = Cfn::new(vars(&[2, 3]), vec![], vec![(0, 1, vec![1., 2., 3., 4., 5., 6.])]).unwrap();
        let b = Cfn::new(vars(&[2, 3]), vec![], vec![(1, 0, vec![1., 4., 2., 5., 3., 6.])]).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn validation_errors() {
        let err = Cfn::new(vars(&[2, 2]), vec![], vec![(0, 1, vec![1.0; 3])]).unwrap_err();
        assert!(err.to_string().contains("table shape mismatch"));
        let dup = Cfn::new(
            vars(&[2, 2]),
            vec![],
            vec![(0, 1, vec![0.0; 4]), (1, 0, vec![0.0; 4])],
        );
        assert_eq!(dup.unwrap_err(), Error::DuplicatePair(0, 1));
        let nan = Cfn::new(vars(&[2]), vec![(0, vec![0.0, f64::NAN])], vec![]);
        assert!(matches!(nan, Err(Error::NonFinite(_))));
        let oob = Cfn::new(vars(&[2]), vec![], vec![(0, 1, vec![0.0; 4])]);
        assert!(matches!(oob, Err(Error::VariableOutOfRange { .. })));
        let cfn = Cfn::new(vars(&[2]), vec![], vec![]).unwrap();
        assert!(matches!(cfn.evaluate(&[3]), Err(Error::ChoiceOutOfRange { .. })));
        assert!(matches!(cfn.evaluate(&[0]), Err(Error::ChoiceOutOfRange { .. })));
        assert!(matches!(cfn.evaluate(&[1, 1]), Err(Error::AssignmentLength { .. })));
    }

    #[test]
    fn constant_table_centers_to_zero() {
        let cfn = Cfn::new(vars(&[2, 2]), vec![], vec![(0, 1, vec![1.0; 4])]).unwrap();
        let c = center(&cfn);
        assert!(c.pairwise()[0].costs.iter().all(|&v| v == 0.0));
        assert_eq!(c.unary(0), &[1.0, 1.0]);
        assert_eq!(c.unary(1), &[0.0, 0.0]);
    }

    #[test]
    fn centered_table_is_unchanged() {
        let beta = vec![1.0, -1.0, -1.0, 1.0];
        let cfn = Cfn::new(vars(&[2, 2]), vec![], vec![(0, 1, beta.clone())]).unwrap();
        let c = center(&cfn);
        assert_eq!(c.pairwise()[0].costs, beta);
        assert_eq!(c.unary(0), &[0.0, 0.0]);
    }

    #[test]
    fn random_table_centering_seed_7() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let beta: Vec<f64> = (0..16).map(|_| random::uniform(&mut rng, -1.0, 1.0)).collect();
        let cfn = Cfn::new(vars(&[4, 4]), vec![], vec![(0, 1, beta)]).unwrap();
        let c = center(&cfn);
        let t = &c.pairwise()[0].costs;
        for r in 0..4 {
            assert!((0..4).map(|k| t[r * 4 + k]).sum::<f64>().abs() <= 1e-12);
            assert!((0..4).map(|k| t[k * 4 + r]).sum::<f64>().abs() <= 1e-12);
        }
        cfn.for_each_assignment(|a| {
            let (x, y) = (cfn.evaluate_zero_based(a), c.evaluate_zero_based(a));
            assert!((x - y).abs() <= 1e-12 * (1.0 + x.abs()));
        });
    }

    #[test]
    fn evaluation_matches_direct_summation_seed_11() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let cfn = random::cfn(&mut rng, &[3, 2, 4], 1.0);
        cfn.for_each_assignment(|a| {
            // independent re-implementation: walk every table and test membership
            let mut total = 0.0;
            for v in 0..3 {
                total += cfn.unary(v)[a[v]];
            }
            for t in cfn.pairwise() {
                let cols = cfn.cardinality(t.j);
                for (k, &b) in t.costs.iter().enumerate() {
                    if k / cols == a[t.i] && k % cols == a[t.j] {
                        total += b;
                    }
                }
            }
            let one_based: Vec<usize> = a.iter().map(|c| c + 1).collect();
            assert_eq!(cfn.evaluate(&one_based).unwrap(), total);
        });
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn small_cfn() -> impl Strategy<Value = Cfn> {
            (proptest::collection::vec(1usize..=4, 1..=3), any::<u64>()).prop_map(|(cards, seed)| {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                random::cfn(&mut rng, &cards, 1.0)
            })
        }

        proptest! {
            #[test]
            fn centering_preserves_every_value(cfn in small_cfn()) {
                let c = center(&cfn);
                let tol = c.center_tolerance();
                for t in c.pairwise() {
                    let (rows, cols) = (c.cardinality(t.i), c.cardinality(t.j));
                    for r in 0..rows {
                        prop_assert!((0..cols).map(|k| t.costs[r * cols + k]).sum::<f64>().abs() <= tol);
                    }
                    for k in 0..cols {
                        prop_assert!((0..rows).map(|r| t.costs[r * cols + k]).sum::<f64>().abs() <= tol);
                    }
                }
                let mut ok = true;
                cfn.for_each_assignment(|a| {
                    let (x, y) = (cfn.evaluate_zero_based(a), c.evaluate_zero_based(a));
                    ok &= (x - y).abs() <= 1e-9 * (1.0 + x.abs());
                });
                prop_assert!(ok);
            }

            #[test]
            fn centering_is_idempotent(cfn in small_cfn()) {
                let once = center(&cfn);
                let twice = center(once.as_cfn());
                for v in 0..cfn.num_variables() {
                    for (a, b) in once.unary(v).iter().zip(twice.unary(v)) {
                        prop_assert!((a - b).abs() <= 1e-12);
                    }
                }
                for (s, t) in once.pairwise().iter().zip(twice.pairwise()) {
                    for (a, b) in s.costs.iter().zip(&t.costs) {
                        prop_assert!((a - b).abs() <= 1e-12);
                    }
                }
            }
        }
    }
}
