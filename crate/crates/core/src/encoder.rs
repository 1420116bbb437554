//! Exact binary encoding of a CFN into an Ising HUBO.
//!
//! Variable `i` gets a register of `D_i = ceil(log2 |d_i|)` qubits. Each
//! choice `c` owns a bit pattern `r^(c)` (bit `q` of a `u64`) and the sign
//! vector `s_q = 1 - 2 r_q`. Couplings are read off the Walsh transforms of
//! the cost tables after they are extended to the full register hypercubes.

use alloc::collections::BTreeMap;
use alloc::string::ToString;
use alloc::vec;
use alloc::vec::Vec;

use crate::cfn::{center_table, CenteredCfn, Cfn};
use crate::error::{Error, Result};
use crate::poly::{full_mask, parity_sign, IsingPolynomial, Spins, MAX_QUBITS};
use crate::walsh::fwht;

/// How choices are mapped to register bit patterns.
#[derive(Debug, Clone, PartialEq)]
pub enum AssignmentStrategy {
    /// Choice `c` (1-based) maps to the binary expansion of `c - 1`.
    StandardBinary,
    /// Choice `c` maps to `(c - 1) ^ ((c - 1) >> 1)`.
    GrayCode,
    /// Explicit patterns: `patterns[var][choice0]`, bit `q` of the `u64`
    /// being `r_q`.
    Custom(Vec<Vec<u64>>),
}

/// Treatment of register patterns that encode no choice.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum UnusedPolicy {
    /// Unused patterns behave like the given 1-based choice (`None`: the last
    /// choice of each variable).
    Fallback(Option<usize>),
    /// Unused patterns cost `lambda` in the unary table and nothing in the
    /// pairwise tables (`None`: `2 * range + 1`, see
    /// [`default_penalty`]).
    Penalty(Option<f64>),
}

impl Default for UnusedPolicy {
    fn default() -> Self {
        UnusedPolicy::Fallback(None)
    }
}

/// `2 * R + 1` where `R` bounds `max f - min f` by the sum of table ranges.
pub fn default_penalty(cfn: &Cfn) -> f64 {
    2.0 * cfn.range_bound() + 1.0
}

#[derive(Debug, Clone, PartialEq)]
enum Resolved {
    /// 0-based fallback choice per variable.
    Fallback(Vec<usize>),
    Penalty(f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct EncodingLayout {
    widths: Vec<usize>,
    offsets: Vec<usize>,
    total_qubits: usize,
    patterns: Vec<Vec<u64>>,
    /// `lookup[var][r]`: the 0-based choice encoded by pattern `r`.
    lookup: Vec<Vec<Option<usize>>>,
    edges: Vec<(usize, usize)>,
    policy: UnusedPolicy,
    resolved: Resolved,
}

/// `ceil(log2 cardinality)`.
pub fn register_width(cardinality: usize) -> usize {
    if cardinality <= 1 {
        0
    } else {
        (usize::BITS - (cardinality - 1).leading_zeros()) as usize
    }
}

impl EncodingLayout {
    pub fn build(cfn: &Cfn, strategy: &AssignmentStrategy, policy: UnusedPolicy) -> Result<Self> {
        let widths: Vec<usize> = cfn.variables().iter().map(|v| register_width(v.cardinality)).collect();
        let total_qubits: usize = widths.iter().sum();
        if total_qubits > MAX_QUBITS {
            return Err(Error::capacity("qubit register", total_qubits, MAX_QUBITS));
        }
        let mut offsets = Vec::with_capacity(widths.len());
        let mut acc = 0;
        for &w in &widths {
            offsets.push(acc);
            acc += w;
        }

        let patterns: Vec<Vec<u64>> = match strategy {
            AssignmentStrategy::StandardBinary => cfn
                .variables()
                .iter()
                .map(|v| (0..v.cardinality as u64).collect())
                .collect(),
            AssignmentStrategy::GrayCode => cfn
                .variables()
                .iter()
                .map(|v| (0..v.cardinality as u64).map(|c| c ^ (c >> 1)).collect())
                .collect(),
            AssignmentStrategy::Custom(p) => {
                if p.len() != cfn.num_variables() {
                    return Err(Error::InvalidParameter(alloc::format!(
                        "custom assignment covers {} variables, expected {}",
                        p.len(),
                        cfn.num_variables()
                    )));
                }
                p.clone()
            }
        };

        let mut lookup = Vec::with_capacity(widths.len());
        for (var, (pats, &w)) in patterns.iter().zip(&widths).enumerate() {
            let card = cfn.cardinality(var);
            if pats.len() != card {
                return Err(Error::InvalidAssignment {
                    var,
                    reason: alloc::format!("{} patterns for {} choices", pats.len(), card),
                });
            }
            let mut table = vec![None; 1usize << w];
            for (choice, &r) in pats.iter().enumerate() {
                if r > full_mask(w) {
                    return Err(Error::InvalidAssignment {
                        var,
                        reason: alloc::format!("pattern {r:#b} does not fit in {w} bits"),
                    });
                }
                if let Some(prev) = table[r as usize].replace(choice) {
                    return Err(Error::InvalidAssignment {
                        var,
                        reason: alloc::format!("choices {} and {} share a pattern", prev + 1, choice + 1),
                    });
                }
            }
            lookup.push(table);
        }

        let resolved = match policy {
            UnusedPolicy::Fallback(choice) => {
                let mut fb = Vec::with_capacity(widths.len());
                for var in 0..widths.len() {
                    let card = cfn.cardinality(var);
                    let c = choice.unwrap_or(card);
                    if c == 0 || c > card {
                        // only matters where unused patterns exist
                        if card < 1 << widths[var] {
                            return Err(Error::ChoiceOutOfRange {
                                var,
                                choice: c,
                                cardinality: card,
                            });
                        }
                        fb.push(card - 1);
                    } else {
                        fb.push(c - 1);
                    }
                }
                Resolved::Fallback(fb)
            }
            UnusedPolicy::Penalty(lambda) => {
                let l = lambda.unwrap_or_else(|| default_penalty(cfn));
                if !(l.is_finite() && l >= 0.0) {
                    return Err(Error::InvalidParameter("penalty weight must be finite and >= 0".to_string()));
                }
                Resolved::Penalty(l)
            }
        };

        Ok(EncodingLayout {
            widths,
            offsets,
            total_qubits,
            patterns,
            lookup,
            edges: cfn.pairwise().iter().map(|t| (t.i, t.j)).collect(),
            policy,
            resolved,
        })
    }

    pub fn num_variables(&self) -> usize {
        self.widths.len()
    }

    pub fn register_widths(&self) -> &[usize] {
        &self.widths
    }

    pub fn register_offsets(&self) -> &[usize] {
        &self.offsets
    }

    pub fn total_qubits(&self) -> usize {
        self.total_qubits
    }

    /// Mask of the qubits of register `var`.
    pub fn register_mask(&self, var: usize) -> u64 {
        full_mask(self.widths[var]) << self.offsets[var]
    }

    /// Pattern of the 0-based `choice`.
    pub fn pattern(&self, var: usize, choice: usize) -> u64 {
        self.patterns[var][choice]
    }

    /// `s^(c)` with `s_q = 1 - 2 r_q`.
    pub fn sign_vector(&self, var: usize, choice: usize) -> Vec<i8> {
        let r = self.patterns[var][choice];
        (0..self.widths[var]).map(|q| 1 - 2 * ((r >> q) & 1) as i8).collect()
    }

    /// `sigma_T^(c) = prod_{q in T} s_q^(c)` for a register-local subset `T`.
    pub fn sigma(&self, var: usize, choice: usize, local_subset: u64) -> f64 {
        parity_sign(local_subset, self.patterns[var][choice])
    }

    /// Number of register patterns encoding no choice.
    pub fn unused_count(&self, var: usize) -> usize {
        (1usize << self.widths[var]) - self.patterns[var].len()
    }

    /// 0-based choice encoded by a register-local pattern.
    pub fn choice_of(&self, var: usize, pattern: u64) -> Option<usize> {
        self.lookup[var].get(pattern as usize).copied().flatten()
    }

    pub fn unused_policy(&self) -> UnusedPolicy {
        self.policy
    }

    /// The penalty weight in force, if the policy is `Penalty`.
    pub fn penalty_weight(&self) -> Option<f64> {
        match self.resolved {
            Resolved::Penalty(l) => Some(l),
            Resolved::Fallback(_) => None,
        }
    }

    /// 0-based fallback choice of `var`, if the policy is `Fallback`.
    pub fn fallback_choice(&self, var: usize) -> Option<usize> {
        match &self.resolved {
            Resolved::Fallback(fb) => Some(fb[var]),
            Resolved::Penalty(_) => None,
        }
    }

    /// `max_{(i,j)} (D_i + D_j)`, or the widest register when there are no
    /// pairwise tables.
    pub fn k_full(&self) -> usize {
        let widest = self.widths.iter().copied().max().unwrap_or(0);
        self.edges
            .iter()
            .map(|&(i, j)| self.widths[i] + self.widths[j])
            .max()
            .unwrap_or(widest)
            .max(widest)
    }

    /// Down mask of the spin image of 0-based choices.
    pub fn spin_image(&self, choices: &[usize]) -> u64 {
        choices
            .iter()
            .enumerate()
            .map(|(var, &c)| self.patterns[var][c] << self.offsets[var])
            .fold(0, |a, b| a | b)
    }

    /// Places a register-local subset of `var` at its global qubit positions.
    pub fn globalize(&self, var: usize, local: u64) -> u64 {
        local << self.offsets[var]
    }

    fn register_bits(&self, var: usize, down: u64) -> u64 {
        (down >> self.offsets[var]) & full_mask(self.widths[var])
    }
}

/// Convenience wrapper around [`EncodingLayout::build`].
pub fn build_layout(cfn: &CenteredCfn, strategy: &AssignmentStrategy, policy: UnusedPolicy) -> Result<EncodingLayout> {
    EncodingLayout::build(cfn, strategy, policy)
}

/// `x_{i,c}(z) = prod_q (1 + s_q z_q) / 2` expanded over the register's
/// Walsh basis: coefficient `sigma_T^(c) / 2^{D_i}` on every `T`.
pub fn indicator_expansion(layout: &EncodingLayout, var: usize, choice: usize) -> Result<IsingPolynomial> {
    let card = layout.patterns[var].len();
    if choice >= card {
        return Err(Error::ChoiceOutOfRange {
            var,
            choice: choice + 1,
            cardinality: card,
        });
    }
    Ok(pattern_indicator(layout, var, layout.patterns[var][choice]))
}

/// Indicator of an arbitrary register pattern, used or not.
pub fn pattern_indicator(layout: &EncodingLayout, var: usize, pattern: u64) -> IsingPolynomial {
    let w = layout.widths[var];
    let scale = 1.0 / (1u64 << w) as f64;
    let out = (0..1u64 << w)
        .map(|t| (layout.globalize(var, t), scale * parity_sign(t, pattern)))
        .collect::<BTreeMap<_, _>>();
    IsingPolynomial::from_map_unchecked(layout.total_qubits, out)
}

/// A pairwise table extended to `2^{D_i + D_j}` entries, indexed by
/// `r_i | r_j << D_i`.
#[derive(Debug, Clone, PartialEq)]
pub struct ExtendedPair {
    pub i: usize,
    pub j: usize,
    pub values: Vec<f64>,
}

/// Cost tables made total on the register hypercubes.
///
/// Unused patterns are filled per the layout's policy. Every pairwise table
/// is then doubly centered over its full grid, with the marginals moved into
/// the unary tables, so pairwise tables carry Walsh mass only on subsets
/// touching both registers.
#[derive(Debug, Clone, PartialEq)]
pub struct ExtendedTables {
    /// `unary[var][r]`, length `2^{D_var}`.
    pub unary: Vec<Vec<f64>>,
    pub pairwise: Vec<ExtendedPair>,
    /// Penalty part of `unary` (zero under `Fallback`).
    pub penalty: Vec<Vec<f64>>,
}

impl ExtendedTables {
    pub fn build(cfn: &Cfn, layout: &EncodingLayout) -> Result<Self> {
        check_layout(cfn, layout)?;
        let n = cfn.num_variables();
        // resolve each pattern to the choice whose costs it carries, if any
        let carried: Vec<Vec<Option<usize>>> = (0..n)
            .map(|var| {
                layout.lookup[var]
                    .iter()
                    .map(|c| c.or(layout.fallback_choice(var)))
                    .collect()
            })
            .collect();
        let lambda = layout.penalty_weight().unwrap_or(0.0);

        let mut unary: Vec<Vec<f64>> = Vec::with_capacity(n);
        let mut penalty: Vec<Vec<f64>> = Vec::with_capacity(n);
        for var in 0..n {
            let alpha = cfn.unary(var);
            unary.push(carried[var].iter().map(|c| c.map_or(lambda, |c| alpha[c])).collect());
            penalty.push(carried[var].iter().map(|c| if c.is_some() { 0.0 } else { lambda }).collect());
        }

        let mut pairwise = Vec::with_capacity(cfn.pairwise().len());
        for t in cfn.pairwise() {
            let (wi, wj) = (layout.widths[t.i], layout.widths[t.j]);
            let cols_src = cfn.cardinality(t.j);
            let (ri, rj) = (1usize << wi, 1usize << wj);
            // column-major over (r_j, r_i) so that index = r_i | r_j << D_i
            let mut values = vec![0.0; ri * rj];
            for b in 0..rj {
                for a in 0..ri {
                    if let (Some(ci), Some(cj)) = (carried[t.i][a], carried[t.j][b]) {
                        values[a | b << wi] = t.costs[ci * cols_src + cj];
                    }
                }
            }
            // rows of this layout are r_j, columns r_i
            let m = center_table(&mut values, rj, ri);
            for (a, v) in unary[t.i].iter_mut().zip(&m.cols) {
                *a += v;
            }
            for (b, v) in unary[t.j].iter_mut().zip(&m.rows) {
                *b += v;
            }
            pairwise.push(ExtendedPair { i: t.i, j: t.j, values });
        }
        Ok(ExtendedTables {
            unary,
            pairwise,
            penalty,
        })
    }

    /// Value of the extended function at a full register configuration.
    pub fn evaluate_down(&self, layout: &EncodingLayout, down: u64) -> f64 {
        let mut total = 0.0;
        for (var, t) in self.unary.iter().enumerate() {
            total += t[layout.register_bits(var, down) as usize];
        }
        for p in &self.pairwise {
            let a = layout.register_bits(p.i, down);
            let b = layout.register_bits(p.j, down);
            total += p.values[(a | b << layout.widths[p.i]) as usize];
        }
        total
    }
}

fn check_layout(cfn: &Cfn, layout: &EncodingLayout) -> Result<()> {
    let matches = layout.num_variables() == cfn.num_variables()
        && (0..cfn.num_variables()).all(|v| layout.patterns[v].len() == cfn.cardinality(v))
        && layout.edges.len() == cfn.pairwise().len()
        && layout.edges.iter().zip(cfn.pairwise()).all(|(&(i, j), t)| (i, j) == (t.i, t.j));
    if matches {
        Ok(())
    } else {
        Err(Error::InvalidParameter("layout was built for a different network".to_string()))
    }
}

/// Maps a pairwise-local subset `T_i | T_j << D_i` to global qubits.
pub(crate) fn pair_subset(layout: &EncodingLayout, p: &ExtendedPair, local: u64) -> (u64, u64) {
    let wi = layout.widths[p.i];
    let ti = local & full_mask(wi);
    let tj = local >> wi;
    (layout.globalize(p.i, ti), layout.globalize(p.j, tj))
}

/// Compiles the network into its exact Ising HUBO.
///
/// Single-register couplings come from the unary tables and two-register
/// couplings from the pairwise tables; subsets meeting three or more
/// registers never appear. Tables are accumulated in a fixed order (unary by
/// variable, then pairwise by `(i, j)`).
pub fn encode(cfn: &CenteredCfn, layout: &EncodingLayout) -> Result<IsingPolynomial> {
    let ext = ExtendedTables::build(cfn, layout)?;
    encode_extended(&ext, layout)
}

pub fn encode_extended(ext: &ExtendedTables, layout: &EncodingLayout) -> Result<IsingPolynomial> {
    let mut poly = IsingPolynomial::new(layout.total_qubits)?;
    for (var, table) in ext.unary.iter().enumerate() {
        for (t, &c) in fwht(table)?.iter().enumerate() {
            poly.accumulate(layout.globalize(var, t as u64), c);
        }
    }
    for p in &ext.pairwise {
        for (t, &c) in fwht(&p.values)?.iter().enumerate() {
            let (gi, gj) = pair_subset(layout, p, t as u64);
            if gi != 0 && gj != 0 {
                poly.accumulate(gi | gj, c);
            }
        }
    }
    poly.prune();
    Ok(poly)
}

/// Result of reading a spin configuration back as a CFN assignment.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Decoded {
    /// 1-based choices, always valid.
    pub assignment: Vec<usize>,
    /// `false` where the register held an unused pattern and was resolved
    /// by the policy.
    pub valid: Vec<bool>,
}

impl Decoded {
    pub fn all_valid(&self) -> bool {
        self.valid.iter().all(|&v| v)
    }

    pub fn zero_based(&self) -> Vec<usize> {
        self.assignment.iter().map(|c| c - 1).collect()
    }
}

/// Inverts the encoding register by register.
///
/// An unused pattern decodes to the fallback choice under `Fallback`, and
/// to the choice whose pattern is nearest in Hamming distance (lowest choice
/// on ties) under `Penalty`.
pub fn decode(layout: &EncodingLayout, z: &Spins) -> Result<Decoded> {
    if z.len() != layout.total_qubits {
        return Err(Error::SpinLength {
            expected: layout.total_qubits,
            found: z.len(),
        });
    }
    let down = z.down_mask();
    let mut assignment = Vec::with_capacity(layout.num_variables());
    let mut valid = Vec::with_capacity(layout.num_variables());
    for var in 0..layout.num_variables() {
        let r = layout.register_bits(var, down);
        let (choice, ok) = match layout.choice_of(var, r) {
            Some(c) => (c, true),
            None => {
                let c = match &layout.resolved {
                    Resolved::Fallback(fb) => fb[var],
                    Resolved::Penalty(_) => nearest_choice(&layout.patterns[var], r),
                };
                (c, false)
            }
        };
        assignment.push(choice + 1);
        valid.push(ok);
    }
    Ok(Decoded { assignment, valid })
}

fn nearest_choice(patterns: &[u64], r: u64) -> usize {
    patterns
        .iter()
        .enumerate()
        .min_by_key(|&(c, &p)| ((p ^ r).count_ones(), c))
        .map(|(c, _)| c)
        .unwrap_or(0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cfn::{center, VariableSpec};
    use crate::poly::qubits_of;
    use crate::random;
    use alloc::format;
    use rand::{Rng, SeedableRng};
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

    fn binary(cfn: &Cfn) -> EncodingLayout {
        EncodingLayout::build(cfn, &AssignmentStrategy::StandardBinary, UnusedPolicy::default()).unwrap()
    }

    #[test]
    fn register_widths() {
        assert_eq!(register_width(1), 0);
        assert_eq!(register_width(2), 1);
        assert_eq!(register_width(3), 2);
        assert_eq!(register_width(32), 5);
        assert_eq!(register_width(33), 6);
        assert_eq!(register_width(128), 7);
    }

    #[test]
    fn k_full_of_pair_instances() {
        for (card, k) in [(32, 10), (128, 14)] {
            let cfn = Cfn::new(vars(&[card, card]), vec![], vec![(0, 1, vec![0.0; card * card])]).unwrap();
            assert_eq!(binary(&cfn).k_full(), k);
        }
    }

    #[test]
    fn three_choices_standard_binary() {
        let cfn = Cfn::new(vars(&[3]), vec![], vec![]).unwrap();
        let l = binary(&cfn);
        assert_eq!(l.register_widths(), &[2]);
        assert_eq!((l.pattern(0, 0), l.pattern(0, 1), l.pattern(0, 2)), (0b00, 0b01, 0b10));
        assert_eq!(l.sign_vector(0, 1), vec![-1, 1]);
        assert_eq!(l.unused_count(0), 1);
        assert_eq!(l.choice_of(0, 0b11), None);
    }

    #[test]
    fn gray_code_patterns() {
        let cfn = Cfn::new(vars(&[4]), vec![], vec![]).unwrap();
        let l = EncodingLayout::build(&cfn, &AssignmentStrategy::GrayCode, UnusedPolicy::default()).unwrap();
        let pats: Vec<u64> = (0..4).map(|c| l.pattern(0, c)).collect();
        assert_eq!(pats, vec![0b00, 0b01, 0b11, 0b10]);
    }

    #[test]
    fn custom_validation() {
        let cfn = Cfn::new(vars(&[3]), vec![], vec![]).unwrap();
        let dup = AssignmentStrategy::Custom(vec![vec![0, 1, 1]]);
        assert!(matches!(
            EncodingLayout::build(&cfn, &dup, UnusedPolicy::default()),
            Err(Error::InvalidAssignment { var: 0, .. })
        ));
        let wide = AssignmentStrategy::Custom(vec![vec![0, 1, 4]]);
        assert!(matches!(
            EncodingLayout::build(&cfn, &wide, UnusedPolicy::default()),
            Err(Error::InvalidAssignment { var: 0, .. })
        ));
        let short = AssignmentStrategy::Custom(vec![vec![0, 1]]);
        assert!(EncodingLayout::build(&cfn, &short, UnusedPolicy::default()).is_err());
    }

    #[test]
    fn capacity_is_enforced() {
        let cfn = Cfn::new(vars(&[1 << 20; 4]), vec![], vec![]).unwrap();
        assert!(matches!(
            EncodingLayout::build(&cfn, &AssignmentStrategy::StandardBinary, UnusedPolicy::default()),
            Err(Error::Capacity { required: 80, .. })
        ));
    }

    #[test]
    fn indicator_examples() {
        let cfn = Cfn::new(vars(&[2]), vec![], vec![]).unwrap();
        let l = binary(&cfn);
        let x = indicator_expansion(&l, 0, 0).unwrap();
        assert_eq!((x.coeff(0), x.coeff(1)), (0.5, 0.5));

        // s = (+1, -1) is pattern 0b10
        let cfn = Cfn::new(vars(&[4]), vec![], vec![]).unwrap();
        let l = EncodingLayout::build(&cfn, &AssignmentStrategy::Custom(vec![vec![0b10, 0b00, 0b01, 0b11]]), UnusedPolicy::default()).unwrap();
        let x = indicator_expansion(&l, 0, 0).unwrap();
        assert_eq!((x.coeff(0), x.coeff(1), x.coeff(2), x.coeff(3)), (0.25, 0.25, -0.25, -0.25));
    }

    #[test]
    fn indicators_are_one_hot_and_partition_unity() {
        let cfn = Cfn::new(vars(&[5, 8, 3]), vec![], vec![]).unwrap();
        let l = binary(&cfn);
        for var in 0..3 {
            let card = cfn.cardinality(var);
            let inds: Vec<IsingPolynomial> = (0..card).map(|c| indicator_expansion(&l, var, c).unwrap()).collect();
            let size = 1u64 << l.register_widths()[var];
            let all: Vec<IsingPolynomial> = (0..size).map(|r| pattern_indicator(&l, var, r)).collect();
            for r in 0..size {
                let down = l.globalize(var, r);
                for (c, x) in inds.iter().enumerate() {
                    let expect = if l.pattern(var, c) == r { 1.0 } else { 0.0 };
                    assert!((x.evaluate_down(down) - expect).abs() <= 1e-15);
                }
                let total: f64 = all.iter().map(|x| x.evaluate_down(down)).sum();
                assert!((total - 1.0).abs() <= 1e-15);
            }
        }
    }

    #[test]
    fn unary_binary_variable() {
        let (a1, a2) = (1.25, -0.5);
        let cfn = center(&Cfn::new(vars(&[2]), vec![(0, vec![a1, a2])], vec![]).unwrap());
        let l = binary(&cfn);
        let p = encode(&cfn, &l).unwrap();
        assert_eq!(p.coeff(0), (a1 + a2) / 2.0);
        assert_eq!(p.coeff(1), (a1 - a2) / 2.0);
    }

    /// Couplings by the literal sums over choices, on power-of-two registers
    /// where no extension is needed.
    #[test]
    fn closed_form_couplings() {
        let mut rng = ChaCha8Rng::seed_from_u64(43);
        let cfn = center(&random::cfn(&mut rng, &[4, 2, 8], 1.0));
        let l = binary(&cfn);
        let p = encode(&cfn, &l).unwrap();
        let mut expect: BTreeMap<u64, f64> = BTreeMap::new();
        for var in 0..3 {
            let w = l.register_widths()[var];
            for t in 0..1u64 << w {
                let c: f64 = (0..cfn.cardinality(var))
                    .map(|c| cfn.unary(var)[c] * l.sigma(var, c, t))
                    .sum::<f64>()
                    / (1u64 << w) as f64;
                *expect.entry(l.globalize(var, t)).or_insert(0.0) += c;
            }
        }
        for tab in cfn.pairwise() {
            let (wi, wj) = (l.register_widths()[tab.i], l.register_widths()[tab.j]);
            let cj = cfn.cardinality(tab.j);
            for ti in 1..1u64 << wi {
                for tj in 1..1u64 << wj {
                    let mut c = 0.0;
                    for a in 0..cfn.cardinality(tab.i) {
                        for b in 0..cj {
                            c += tab.costs[a * cj + b] * l.sigma(tab.i, a, ti) * l.sigma(tab.j, b, tj);
                        }
                    }
                    c /= (1u64 << (wi + wj)) as f64;
                    *expect.entry(l.globalize(tab.i, ti) | l.globalize(tab.j, tj)).or_insert(0.0) += c;
                }
            }
        }
        for s in 0..1u64 << l.total_qubits() {
            assert!((p.coeff(s) - expect.get(&s).copied().unwrap_or(0.0)).abs() <= 1e-12, "subset {s:#b}");
        }
    }

    #[test]
    fn exactness_seed_13() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        for policy in [UnusedPolicy::Fallback(None), UnusedPolicy::Penalty(None)] {
            for centered in [true, false] {
                let cards: Vec<usize> = (0..3).map(|_| rng.random_range(2..=4)).collect();
                let raw = random::cfn(&mut rng, &cards, 1.0);
                let cfn = if centered { center(&raw) } else { CenteredCfn::uncentered(raw.clone()) };
                let l = EncodingLayout::build(&cfn, &AssignmentStrategy::StandardBinary, policy).unwrap();
                let p = encode(&cfn, &l).unwrap();
                raw.for_each_assignment(|a| {
                    let v = raw.evaluate_zero_based(a);
                    let e = p.evaluate_down(l.spin_image(a));
                    assert!((v - e).abs() <= 1e-9 * (1.0 + v.abs()));
                });
            }
        }
    }

    #[test]
    fn degree_cap_and_pair_degree() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let cfn = center(&random::cfn(&mut rng, &[32, 32], 1.0));
        let l = binary(&cfn);
        let p = encode(&cfn, &l).unwrap();
        assert!(p.degree() <= 10);
        if p.coeff(full_mask(10)) != 0.0 {
            assert_eq!(p.degree(), 10);
        }
        for (s, _) in p.terms() {
            // no subset meets more than two registers
            let regs = (0..2).filter(|&v| s & l.register_mask(v) != 0).count();
            assert!(regs <= 2);
        }
    }

    #[test]
    fn no_three_register_modes() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let cfn = center(&random::cfn(&mut rng, &[4, 3, 4, 2], 1.0));
        let l = binary(&cfn);
        let p = encode(&cfn, &l).unwrap();
        for (s, _) in p.terms() {
            let regs = (0..4).filter(|&v| s & l.register_mask(v) != 0).count();
            assert!(regs <= 2);
        }
    }

    #[test]
    fn centered_pairwise_gives_no_single_register_mass() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for (cards, policy) in [
            (vec![4, 2, 8], UnusedPolicy::Fallback(None)),
            (vec![3, 5, 4], UnusedPolicy::Penalty(Some(0.0))),
        ] {
            let full = center(&random::cfn(&mut rng, &cards, 1.0));
            let zeroed = Cfn::new(
                full.variables().to_vec(),
                vec![],
                full.pairwise().iter().map(|t| (t.i, t.j, t.costs.clone())).collect(),
            )
            .unwrap();
            let l = EncodingLayout::build(&zeroed, &AssignmentStrategy::StandardBinary, policy).unwrap();
            let p = encode(&CenteredCfn::uncentered(zeroed), &l).unwrap();
            for var in 0..cards.len() {
                let reg = l.register_mask(var);
                for (s, c) in p.terms() {
                    if s & !reg == 0 {
                        assert!(c.abs() <= 1e-12, "register {var} subset {s:#b} carries {c}");
                    }
                }
            }
        }
    }

    #[test]
    fn decode_examples() {
        let cfn = Cfn::new(vars(&[2, 3]), vec![], vec![]).unwrap();
        let l = EncodingLayout::build(&cfn, &AssignmentStrategy::StandardBinary, UnusedPolicy::Fallback(Some(3))).unwrap();
        let d = decode(&l, &Spins::parse("+--").unwrap()).unwrap();
        assert_eq!(d.assignment, vec![1, 3]);
        assert_eq!(d.valid, vec![true, false]);
        assert!(!d.all_valid());
        assert!(decode(&l, &Spins::parse("++").unwrap()).is_err());
    }

    #[test]
    fn penalty_decode_takes_nearest_pattern() {
        let cfn = Cfn::new(vars(&[5]), vec![], vec![]).unwrap();
        let l = EncodingLayout::build(&cfn, &AssignmentStrategy::StandardBinary, UnusedPolicy::Penalty(Some(1.0))).unwrap();
        // patterns 0..5; 0b111 is at distance 1 from 0b011 (choice 4)
        let d = decode(&l, &Spins::from_down_mask(3, 0b111).unwrap()).unwrap();
        assert_eq!((d.assignment[0], d.valid[0]), (4, false));
        // 0b101 is distance 1 from 0b100 (choice 5) and 0b001 (choice 2)
        let d = decode(&l, &Spins::from_down_mask(3, 0b101).unwrap()).unwrap();
        assert_eq!(d.assignment[0], 2);
    }

    #[test]
    fn decode_round_trip() {
        let cfn = Cfn::new(vars(&[3, 7, 1, 16]), vec![], vec![]).unwrap();
        for strat in [AssignmentStrategy::StandardBinary, AssignmentStrategy::GrayCode] {
            let l = EncodingLayout::build(&cfn, &strat, UnusedPolicy::default()).unwrap();
            cfn.for_each_assignment(|a| {
                let z = Spins::from_down_mask(l.total_qubits(), l.spin_image(a)).unwrap();
                let d = decode(&l, &z).unwrap();
                assert!(d.all_valid());
                assert_eq!(d.zero_based(), a);
            });
        }
    }

    #[test]
    fn penalty_weight_shows_up_on_unused_patterns() {
        let cfn = center(&Cfn::new(vars(&[3]), vec![(0, vec![1.0, 2.0, 3.0])], vec![]).unwrap());
        let l = EncodingLayout::build(&cfn, &AssignmentStrategy::StandardBinary, UnusedPolicy::Penalty(None)).unwrap();
        let lambda = l.penalty_weight().unwrap();
        assert_eq!(lambda, 2.0 * 2.0 + 1.0);
        let p = encode(&cfn, &l).unwrap();
        assert!((p.evaluate_down(0b11) - lambda).abs() <= 1e-12);
        assert!(qubits_of(l.register_mask(0)).eq([0, 1]));
    }

    #[test]
    fn bad_fallback_is_rejected() {
        let cfn = Cfn::new(vars(&[3, 4]), vec![], vec![]).unwrap();
        assert!(EncodingLayout::build(&cfn, &AssignmentStrategy::StandardBinary, UnusedPolicy::Fallback(Some(4))).is_err());
        assert!(EncodingLayout::build(&cfn, &AssignmentStrategy::StandardBinary, UnusedPolicy::Fallback(Some(3))).is_ok());
        assert!(EncodingLayout::build(&cfn, &AssignmentStrategy::StandardBinary, UnusedPolicy::Penalty(Some(-1.0))).is_err());
    }
}
