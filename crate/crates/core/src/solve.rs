//! Desk-scale minimizers for truncated HUBOs and their QUBO forms, plus
//! decoding back to a CFN assignment with optional descent on the full HUBO.
//!
//! Restart `r` of the annealer draws from ChaCha stream `r`, and restarts are
//! merged by value then lexicographic spin order, so any split of the
//! restarts across threads gives the serial answer.

use alloc::vec;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::cfn::Cfn;
use crate::encoder::{decode, Decoded, EncodingLayout};
use crate::error::{Error, Result};
use crate::landscape::{bitflip_descent, enumerate_landscape, MAX_ENUMERATION_QUBITS};
use crate::poly::{full_mask, parity_sign, IsingPolynomial, Spins};
use crate::quadratize::QuboModel;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AnnealParams {
    pub restarts: usize,
    /// Proposals per restart; `None` means `10 * n * 1000`.
    pub proposals: Option<usize>,
    /// Temperature factor applied after every `n` proposals.
    pub cooling: f64,
    /// Starting temperature; `None` means twice the mean non-constant
    /// coupling magnitude.
    pub initial_temperature: Option<f64>,
}

impl Default for AnnealParams {
    fn default() -> Self {
        AnnealParams {
            restarts: 64,
            proposals: None,
            cooling: 0.999,
            initial_temperature: None,
        }
    }
}

impl AnnealParams {
    pub fn proposals_for(&self, n: usize) -> usize {
        self.proposals.unwrap_or(10 * n * 1000)
    }

    pub fn temperature_for(&self, poly: &IsingPolynomial) -> f64 {
        if let Some(t) = self.initial_temperature {
            return t;
        }
        let (sum, count) = poly
            .terms()
            .filter(|&(s, _)| s != 0)
            .fold((0.0, 0usize), |(a, k), (_, c)| (a + c.abs(), k + 1));
        if count == 0 {
            1.0
        } else {
            2.0 * sum / count as f64
        }
    }

    fn validate(&self) -> Result<()> {
        if self.restarts == 0 {
            return Err(Error::InvalidParameter("anneal needs at least one restart".into()));
        }
        if !(self.cooling > 0.0 && self.cooling <= 1.0) {
            return Err(Error::InvalidParameter(alloc::format!("cooling factor {} not in (0, 1]", self.cooling)));
        }
        if let Some(t) = self.initial_temperature {
            if !(t.is_finite() && t > 0.0) {
                return Err(Error::InvalidParameter(alloc::format!("initial temperature {t} is not positive")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Method {
    Exhaustive,
    Anneal(AnnealParams),
}

/// A configuration and its energy.
#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub spins: Spins,
    pub value: f64,
}

/// The lower-energy sample, lexicographically smaller spins on ties.
pub fn merge(a: Sample, b: Sample) -> Sample {
    let key = |s: &Sample| (s.value, s.spins.lex_key());
    if key(&b) < key(&a) {
        b
    } else {
        a
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Refinement {
    /// 1-based choices after descent on the full HUBO, or the unrefined
    /// assignment when descent did not lower the CFN cost.
    pub assignment: Vec<usize>,
    pub cfn_value: f64,
    pub descent_steps: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveResult {
    pub best_spin: Spins,
    pub best_truncated_value: f64,
    pub decoded: Option<Decoded>,
    pub cfn_value: Option<f64>,
    pub refined: Option<Refinement>,
    pub method: Method,
    pub seed: u64,
}

impl SolveResult {
    pub fn new(best: Sample, method: Method, seed: u64) -> Self {
        SolveResult {
            best_spin: best.spins,
            best_truncated_value: best.value,
            decoded: None,
            cfn_value: None,
            refined: None,
            method,
            seed,
        }
    }
}

/// Exact minimizer; the lexicographically smallest among ties.
pub fn exhaustive(poly: &IsingPolynomial) -> Result<Sample> {
    let n = poly.num_qubits();
    if n > MAX_ENUMERATION_QUBITS {
        return Err(Error::capacity("exhaustive solve", n, MAX_ENUMERATION_QUBITS));
    }
    let land = enumerate_landscape(poly)?;
    let down = land.argmin()[0];
    Ok(Sample {
        spins: Spins::from_down_mask(n, down)?,
        value: poly.evaluate_down(down),
    })
}

/// Couplings containing each qubit, for constant-time-per-term flip deltas.
struct Incidence(Vec<Vec<(u64, f64)>>);

impl Incidence {
    fn new(poly: &IsingPolynomial) -> Self {
        let mut by_qubit = vec![Vec::new(); poly.num_qubits()];
        for (s, c) in poly.terms() {
            for q in crate::poly::qubits_of(s) {
                by_qubit[q].push((s, c));
            }
        }
        Incidence(by_qubit)
    }

    fn delta(&self, down: u64, i: usize) -> f64 {
        -2.0 * self.0[i].iter().map(|&(s, c)| c * parity_sign(s, down)).sum::<f64>()
    }
}

/// One single-flip Metropolis run from a uniformly random start under a
/// geometric schedule, returning the best configuration it visited.
pub fn anneal_restart(poly: &IsingPolynomial, params: &AnnealParams, seed: u64, restart: usize) -> Result<Sample> {
    params.validate()?;
    let n = poly.num_qubits();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(restart as u64);
    if n == 0 {
        return Ok(Sample {
            spins: Spins::all_up(0)?,
            value: poly.constant(),
        });
    }
    let inc = Incidence::new(poly);
    let mut down = rng.random::<u64>() & full_mask(n);
    let mut value = poly.evaluate_down(down);
    let (mut best_down, mut best_value) = (down, value);
    let mut t = params.temperature_for(poly);
    for step in 0..params.proposals_for(n) {
        let i = rng.random_range(0..n);
        let d = inc.delta(down, i);
        if d <= 0.0 || rng.random::<f64>() < libm::exp(-d / t) {
            down ^= 1 << i;
            value += d;
            if value < best_value {
                best_down = down;
                best_value = value;
            }
        }
        if (step + 1) % n == 0 {
            t *= params.cooling;
        }
    }
    Ok(Sample {
        spins: Spins::from_down_mask(n, best_down)?,
        value: poly.evaluate_down(best_down),
    })
}

/// Runs every restart serially and merges them.
pub fn anneal(poly: &IsingPolynomial, params: &AnnealParams, seed: u64) -> Result<Sample> {
    params.validate()?;
    let mut best: Option<Sample> = None;
    for r in 0..params.restarts {
        let s = anneal_restart(poly, params, seed, r)?;
        best = Some(match best {
            Some(b) => merge(b, s),
            None => s,
        });
    }
    Ok(best.expect("at least one restart"))
}

pub fn solve(poly: &IsingPolynomial, method: Method, seed: u64) -> Result<SolveResult> {
    let best = match &method {
        Method::Exhaustive => exhaustive(poly)?,
        Method::Anneal(p) => anneal(poly, p, seed)?,
    };
    Ok(SolveResult::new(best, method, seed))
}

/// Restricts a sample over originals and ancillas to the originals, valued
/// with consistent ancillas, which is the HUBO value there.
pub fn project_qubo_sample(qubo: &QuboModel, sample: &Sample) -> Result<Sample> {
    let n = qubo.num_original();
    let spins = sample.spins.truncated(n);
    let orig: Vec<bool> = (0..n).map(|i| spins.get(i) == -1).collect();
    let mut bits = orig.clone();
    bits.extend(qubo.consistent_ancillas(&orig));
    Ok(Sample {
        value: qubo.evaluate(&bits)?,
        spins,
    })
}

/// Minimizes over originals and ancillas, then projects onto the originals.
pub fn solve_qubo(qubo: &QuboModel, method: Method, seed: u64) -> Result<SolveResult> {
    let ising = qubo.to_ising()?;
    let best = match &method {
        Method::Exhaustive => project_qubo_sample(qubo, &exhaustive(&ising)?)?,
        Method::Anneal(p) => {
            p.validate()?;
            let mut best: Option<Sample> = None;
            for r in 0..p.restarts {
                let s = project_qubo_sample(qubo, &anneal_restart(&ising, p, seed, r)?)?;
                best = Some(match best {
                    Some(b) => merge(b, s),
                    None => s,
                });
            }
            best.expect("at least one restart")
        }
    };
    Ok(SolveResult::new(best, method, seed))
}

/// Decodes the best spins, scores the assignment on `cfn`, and with
/// `refine` descends on the full encoded HUBO from there and keeps
/// whichever assignment costs less.
pub fn decode_and_refine(
    mut result: SolveResult,
    layout: &EncodingLayout,
    cfn: &Cfn,
    full: &IsingPolynomial,
    refine: bool,
) -> Result<SolveResult> {
    let decoded = decode(layout, &result.best_spin)?;
    let value = cfn.evaluate(&decoded.assignment)?;
    if refine {
        let descent = bitflip_descent(full, &result.best_spin)?;
        let again = decode(layout, &descent.end)?;
        let refined_value = cfn.evaluate(&again.assignment)?;
        result.refined = Some(if refined_value < value {
            Refinement {
                assignment: again.assignment,
                cfn_value: refined_value,
                descent_steps: descent.steps,
            }
        } else {
            Refinement {
                assignment: decoded.assignment.clone(),
                cfn_value: value,
                descent_steps: descent.steps,
            }
        });
    }
    result.decoded = Some(decoded);
    result.cfn_value = Some(value);
    Ok(result)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cfn::center;
    use crate::encoder::{encode, AssignmentStrategy, UnusedPolicy};
    use crate::quadratize::quadratize;
    use crate::random;
    use crate::truncate::truncate;
    use alloc::string::ToString;

    fn quick(restarts: usize, proposals: usize) -> AnnealParams {
        AnnealParams {
            restarts,
            proposals: Some(proposals),
            ..AnnealParams::default()
        }
    }

    #[test]
    fn single_field() {
        let p = IsingPolynomial::from_terms(1, [(1, 1.0)]).unwrap();
        let r = solve(&p, Method::Exhaustive, 0).unwrap();
        assert_eq!(r.best_spin.to_string(), "-");
        assert_eq!(r.best_truncated_value, -1.0);
        let a = solve(&p, Method::Anneal(quick(2, 50)), 0).unwrap();
        assert_eq!(a.best_truncated_value, -1.0);
    }

    #[test]
    fn exhaustive_prefers_lexicographically_smallest() {
        let p = IsingPolynomial::from_terms(3, [(0b011, -1.0)]).unwrap();
        assert_eq!(exhaustive(&p).unwrap().spins.to_string(), "+++");
    }

    #[test]
    fn merge_breaks_ties_lexicographically() {
        let a = Sample {
            spins: Spins::parse("-+").unwrap(),
            value: 1.0,
        };
        let b = Sample {
            spins: Spins::parse("+-").unwrap(),
            value: 1.0,
        };
        assert_eq!(merge(a.clone(), b.clone()).spins, b.spins);
        assert_eq!(merge(b.clone(), a).spins, b.spins);
    }

    #[test]
    fn anneal_finds_optimum_n10() {
        let mut rng = ChaCha8Rng::seed_from_u64(34);
        let p = random::polynomial(&mut rng, 10, 3, 30, 1.0);
        let exact = exhaustive(&p).unwrap().value;
        let hits = (0..100u64)
            .filter(|&seed| {
                let s = anneal(&p, &quick(4, 5000), seed).unwrap();
                s.value <= exact + 1e-9
            })
            .count();
        assert!(hits >= 95, "{hits} of 100");
    }

    #[test]
    fn anneal_is_deterministic() {
        let mut rng = ChaCha8Rng::seed_from_u64(35);
        let p = random::polynomial(&mut rng, 16, 4, 40, 1.0);
        let m = Method::Anneal(quick(3, 2000));
        assert_eq!(solve(&p, m, 9).unwrap(), solve(&p, m, 9).unwrap());
    }

    #[test]
    fn qubo_value_is_hubo_value_at_projection() {
        let mut rng = ChaCha8Rng::seed_from_u64(36);
        for _ in 0..5 {
            let p = random::polynomial(&mut rng, 8, 4, 25, 1.0);
            let q = quadratize(&p).unwrap();
            let e = solve_qubo(&q, Method::Exhaustive, 0).unwrap();
            assert_eq!(e.best_spin.len(), 8);
            let h = p.evaluate_spins(&e.best_spin).unwrap();
            assert!((e.best_truncated_value - h).abs() <= 1e-9 * (1.0 + h.abs()));
            assert!((h - exhaustive(&p).unwrap().value).abs() <= 1e-9 * (1.0 + h.abs()));
            let a = solve_qubo(&q, Method::Anneal(quick(2, 3000)), 1).unwrap();
            let ha = p.evaluate_spins(&a.best_spin).unwrap();
            assert!((a.best_truncated_value - ha).abs() <= 1e-9 * (1.0 + ha.abs()));
        }
    }

    #[test]
    fn refinement_never_hurts() {
        for seed in 0..50u64 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let raw = random::cfn(&mut rng, &[3, 5, 4], 1.0);
            let cfn = center(&raw);
            let layout = EncodingLayout::build(&cfn, &AssignmentStrategy::StandardBinary, UnusedPolicy::default()).unwrap();
            let full = encode(&cfn, &layout).unwrap();
            let t = truncate(&full, 2);
            let r = solve(&t, Method::Exhaustive, seed).unwrap();
            let r = decode_and_refine(r, &layout, &raw, &full, true).unwrap();
            let refined = r.refined.as_ref().unwrap();
            assert!(refined.cfn_value <= r.cfn_value.unwrap());
            assert_eq!(raw.evaluate(&refined.assignment).unwrap(), refined.cfn_value);
        }
    }

    #[test]
    fn passthrough_and_fixed_point() {
        let mut rng = ChaCha8Rng::seed_from_u64(38);
        let raw = random::cfn(&mut rng, &[4, 4], 1.0);
        let cfn = center(&raw);
        let layout = EncodingLayout::build(&cfn, &AssignmentStrategy::GrayCode, UnusedPolicy::default()).unwrap();
        let full = encode(&cfn, &layout).unwrap();
        let r = solve(&full, Method::Exhaustive, 0).unwrap();
        let plain = decode_and_refine(r.clone(), &layout, &raw, &full, false).unwrap();
        let d = plain.decoded.as_ref().unwrap();
        assert_eq!(plain.cfn_value, Some(raw.evaluate(&d.assignment).unwrap()));
        assert!(plain.refined.is_none());
        // the exact optimum is a local minimum of the full HUBO
        let refined = decode_and_refine(r, &layout, &raw, &full, true).unwrap();
        let rf = refined.refined.unwrap();
        assert_eq!(rf.descent_steps, 0);
        assert_eq!(rf.assignment, d.assignment);
    }

    #[test]
    fn rejects_bad_parameters() {
        let p = IsingPolynomial::from_terms(2, [(1, 1.0)]).unwrap();
        let zero = AnnealParams {
            restarts: 0,
            ..AnnealParams::default()
        };
        assert!(solve(&p, Method::Anneal(zero), 0).is_err());
        let hot = AnnealParams {
            cooling: 1.5,
            ..AnnealParams::default()
        };
        assert!(solve(&p, Method::Anneal(hot), 0).is_err());
        let big = IsingPolynomial::new(25).unwrap();
        assert!(matches!(exhaustive(&big), Err(Error::Capacity { .. })));
    }
}
