//! Exhaustive landscapes and the preservation checks built on them.
//!
//! Every check here enumerates all `2^n` configurations, so `n <= 24`.
//! Values within [`TIE_RADIUS`] of the minimum count as minimizers.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::poly::{lex_key, IsingPolynomial, Spins};
use crate::truncate::{certify, truncate, TruncationCertificate};

pub const MAX_ENUMERATION_QUBITS: usize = 24;
/// Absolute radius inside which two energies are the same.
pub const TIE_RADIUS: f64 = 1e-12;

/// All energies of a polynomial plus its minimizers and gap.
#[derive(Debug, Clone, PartialEq)]
pub struct Landscape {
    num_qubits: usize,
    values: Vec<f64>,
    min_value: f64,
    /// Down masks of the minimizers, in lexicographic spin order.
    argmin: Vec<u64>,
    gap: Option<f64>,
}

impl Landscape {
    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    /// Energy at a down mask.
    pub fn value(&self, down: u64) -> f64 {
        self.values[down as usize]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn min_value(&self) -> f64 {
        self.min_value
    }

    pub fn argmin(&self) -> &[u64] {
        &self.argmin
    }

    pub fn argmin_spins(&self) -> Vec<Spins> {
        self.argmin
            .iter()
            .map(|&d| Spins::from_down_mask(self.num_qubits, d).expect("mask within n"))
            .collect()
    }

    pub fn is_minimizer(&self, down: u64) -> bool {
        self.values[down as usize] <= self.min_value + TIE_RADIUS
    }

    /// `min_{z not in argmin} f(z) - f(z*)`; `None` when every
    /// configuration is a minimizer.
    pub fn energy_gap(&self) -> Option<f64> {
        self.gap
    }

    /// `min_i [f(z^i) - f(z)]`; `+inf` for `n = 0`.
    pub fn barrier(&self, down: u64) -> f64 {
        let here = self.value(down);
        (0..self.num_qubits)
            .map(|i| self.value(down ^ 1 << i) - here)
            .fold(f64::INFINITY, f64::min)
    }

    pub fn is_local_min(&self, down: u64) -> bool {
        self.barrier(down) >= 0.0
    }
}

/// Evaluates `poly` everywhere and collects minimizers and the gap.
pub fn enumerate_landscape(poly: &IsingPolynomial) -> Result<Landscape> {
    let n = poly.num_qubits();
    let values = poly.truth_table(MAX_ENUMERATION_QUBITS)?;
    let min_value = values.iter().copied().fold(f64::INFINITY, f64::min);
    let mut argmin: Vec<u64> = Vec::new();
    let mut second = f64::INFINITY;
    for (d, &v) in values.iter().enumerate() {
        if v <= min_value + TIE_RADIUS {
            argmin.push(d as u64);
        } else {
            second = second.min(v);
        }
    }
    argmin.sort_by_key(|&d| lex_key(d, n));
    Ok(Landscape {
        num_qubits: n,
        gap: second.is_finite().then(|| second - min_value),
        values,
        min_value,
        argmin,
    })
}

/// Outcome of one theorem check on one instance.
#[derive(Debug, Clone, PartialEq)]
pub struct ClaimCheck {
    pub claim: &'static str,
    pub precondition_held: bool,
    /// The conclusion was tested (it is only tested when the precondition
    /// holds).
    pub asserted: bool,
    pub passed: bool,
    /// Slack of the tested inequality; negative on failure. For checks that
    /// were not asserted, the slack of the precondition.
    pub margin: f64,
    pub details: String,
}

impl ClaimCheck {
    /// True unless the conclusion was tested and failed.
    pub fn ok(&self) -> bool {
        !self.asserted || self.passed
    }
}

pub const CLAIM_SUP_NORM: &str = "sup-norm bound";
pub const CLAIM_OPTIMUM: &str = "global minimum preservation";
pub const CLAIM_APPROX: &str = "approximate minimum recovery";
pub const CLAIM_BASIN: &str = "local minimum preservation";
pub const CLAIM_GAP_BARRIER: &str = "gap below barrier";

#[derive(Debug, Clone, PartialEq)]
pub struct PreservationReport {
    pub certificate: TruncationCertificate,
    pub full: Landscape,
    pub truncated: Landscape,
    /// `(z*, delta_f(z*))` for every global minimizer of the full function.
    pub barriers: Vec<(u64, f64)>,
    pub gap_condition_holds: bool,
    /// `delta_f(z*) > 2 epsilon` at every minimizer.
    pub barrier_condition_holds: bool,
    pub checks: Vec<ClaimCheck>,
}

impl PreservationReport {
    pub fn all_ok(&self) -> bool {
        self.checks.iter().all(ClaimCheck::ok)
    }

    pub fn check(&self, claim: &str) -> Option<&ClaimCheck> {
        self.checks.iter().find(|c| c.claim == claim)
    }
}

/// Truncates at `k_max`, enumerates both landscapes and runs every check.
pub fn check_preservation(full: &IsingPolynomial, k_max: usize) -> Result<PreservationReport> {
    let certificate = certify(full, k_max)?;
    let eps = certificate.epsilon;
    let two_eps = 2.0 * eps;
    let f = enumerate_landscape(full)?;
    let t = enumerate_landscape(&truncate(full, k_max))?;
    let n = f.num_qubits();
    let mut checks = Vec::with_capacity(5);

    let worst = f
        .values()
        .iter()
        .zip(t.values())
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    checks.push(ClaimCheck {
        claim: CLAIM_SUP_NORM,
        precondition_held: true,
        asserted: true,
        passed: worst <= eps + TIE_RADIUS,
        margin: eps - worst,
        details: format!("max |f - f_trunc| = {worst:e}, epsilon = {eps:e}"),
    });

    let gap = f.energy_gap();
    // Truncated minimizers are resolved to within the tie radius, so a gap
    // that beats 2 epsilon by rounding noise alone is not a strict gap.
    let gap_condition_holds = gap.is_none_or(|g| g > two_eps + 2.0 * TIE_RADIUS);
    let strays: Vec<u64> = t.argmin().iter().copied().filter(|&d| !f.is_minimizer(d)).collect();
    checks.push(ClaimCheck {
        claim: CLAIM_OPTIMUM,
        precondition_held: gap_condition_holds,
        asserted: gap_condition_holds,
        passed: strays.is_empty(),
        margin: gap.map_or(f64::INFINITY, |g| g - two_eps),
        details: match gap {
            Some(g) => format!(
                "gap = {g:e}, 2 epsilon = {two_eps:e}, {} of {} truncated minimizers outside argmin f",
                strays.len(),
                t.argmin().len()
            ),
            None => String::from("every configuration minimizes f"),
        },
    });

    let excess = t
        .argmin()
        .iter()
        .map(|&d| f.value(d) - f.min_value())
        .fold(f64::NEG_INFINITY, f64::max);
    checks.push(ClaimCheck {
        claim: CLAIM_APPROX,
        precondition_held: true,
        asserted: true,
        passed: excess <= two_eps + TIE_RADIUS,
        margin: two_eps - excess,
        details: format!("max f(z**) - f(z*) = {excess:e}, 2 epsilon = {two_eps:e}"),
    });

    let barriers: Vec<(u64, f64)> = f.argmin().iter().map(|&d| (d, f.barrier(d))).collect();
    let mut basin_margin = f64::INFINITY;
    let mut basin_pass = true;
    let mut basin_tested = 0;
    for &(d, delta) in &barriers {
        if delta > two_eps {
            basin_tested += 1;
            let kept = t.barrier(d);
            let slack = kept - (delta - two_eps);
            basin_margin = basin_margin.min(slack);
            basin_pass &= slack >= -TIE_RADIUS && kept >= 0.0;
        }
    }
    let barrier_condition_holds = basin_tested == barriers.len();
    checks.push(ClaimCheck {
        claim: CLAIM_BASIN,
        precondition_held: basin_tested > 0,
        asserted: basin_tested > 0,
        passed: basin_pass,
        margin: if basin_tested > 0 {
            basin_margin
        } else {
            barriers.iter().map(|&(_, b)| b - two_eps).fold(f64::NEG_INFINITY, f64::max)
        },
        details: format!("{basin_tested} of {} minimizers have barrier > 2 epsilon", barriers.len()),
    });

    // Neighbours of z* are non-minimizers only when no minimizer is adjacent.
    let isolated: Vec<(u64, f64)> = barriers
        .iter()
        .copied()
        .filter(|&(d, _)| (0..n).all(|i| !f.is_minimizer(d ^ 1 << i)))
        .collect();
    let gb_pre = gap.is_some() && n > 0 && !isolated.is_empty();
    let gb_margin = match gap {
        Some(g) => isolated.iter().map(|&(_, b)| b - g).fold(f64::INFINITY, f64::min),
        None => f64::INFINITY,
    };
    checks.push(ClaimCheck {
        claim: CLAIM_GAP_BARRIER,
        precondition_held: gb_pre,
        asserted: gb_pre,
        passed: gb_margin >= -TIE_RADIUS,
        margin: gb_margin,
        details: format!(
            "{} of {} minimizers have no minimizing neighbour",
            isolated.len(),
            barriers.len()
        ),
    });

    Ok(PreservationReport {
        certificate,
        full: f,
        truncated: t,
        barriers,
        gap_condition_holds,
        barrier_condition_holds,
        checks,
    })
}

/// Endpoint of a descent run.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Descent {
    pub end: Spins,
    pub steps: usize,
}

/// Best-improvement single bit-flip descent; ties go to the lowest
/// coordinate and only strictly improving flips are taken.
pub fn bitflip_descent(poly: &IsingPolynomial, start: &Spins) -> Result<Descent> {
    if start.len() != poly.num_qubits() {
        return Err(Error::SpinLength {
            expected: poly.num_qubits(),
            found: start.len(),
        });
    }
    let n = start.len();
    let mut down = start.down_mask();
    let mut steps = 0;
    loop {
        let deltas = poly.flip_deltas(down);
        let mut best: Option<(usize, f64)> = None;
        for (i, &d) in deltas.iter().enumerate() {
            if d < 0.0 && best.is_none_or(|(_, b)| d < b) {
                best = Some((i, d));
            }
        }
        match best {
            Some((i, _)) => {
                down ^= 1 << i;
                steps += 1;
            }
            None => {
                return Ok(Descent {
                    end: Spins::from_down_mask(n, down)?,
                    steps,
                })
            }
        }
    }
}

/// Fraction of `samples` uniformly random starts from which descent on
/// `full` and on `truncated` ends at the same configuration.
pub fn basin_agreement(full: &IsingPolynomial, truncated: &IsingPolynomial, samples: usize, seed: u64) -> Result<f64> {
    let n = full.num_qubits();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut same = 0usize;
    for _ in 0..samples {
        let start = Spins::from_down_mask(n, rng.random::<u64>() & crate::poly::full_mask(n))?;
        if bitflip_descent(full, &start)?.end == bitflip_descent(truncated, &start)?.end {
            same += 1;
        }
    }
    Ok(if samples == 0 { 1.0 } else { same as f64 / samples as f64 })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::random;
    use alloc::string::ToString;

    #[test]
    fn single_spin() {
        let p = IsingPolynomial::from_terms(1, [(1, 1.0)]).unwrap();
        let l = enumerate_landscape(&p).unwrap();
        assert_eq!(l.argmin(), &[1]);
        assert_eq!(l.energy_gap(), Some(2.0));
    }

    #[test]
    fn ferromagnetic_pair() {
        let p = IsingPolynomial::from_terms(2, [(0b11, -1.0)]).unwrap();
        let l = enumerate_landscape(&p).unwrap();
        assert_eq!(l.argmin_spins().iter().map(|s| s.to_string()).collect::<Vec<_>>(), ["++", "--"]);
        assert_eq!(l.energy_gap(), Some(2.0));
    }

    #[test]
    fn argmin_matches_linear_scan() {
        let mut rng = ChaCha8Rng::seed_from_u64(33);
        let p = random::polynomial(&mut rng, 10, 4, 40, 1.0);
        let l = enumerate_landscape(&p).unwrap();
        let mut best = (f64::INFINITY, 0u64);
        for d in 0..1u64 << 10 {
            let v = p.evaluate_down(d);
            if v < best.0 {
                best = (v, d);
            }
        }
        assert!((l.min_value() - best.0).abs() <= 1e-12);
        assert!(l.argmin().contains(&best.1));
    }

    #[test]
    fn no_truncation_passes_everything() {
        let mut rng = ChaCha8Rng::seed_from_u64(34);
        let p = random::polynomial(&mut rng, 8, 4, 30, 1.0);
        let r = check_preservation(&p, p.degree().max(1)).unwrap();
        assert_eq!(r.certificate.epsilon, 0.0);
        assert!(r.all_ok());
        assert_eq!(r.full.argmin(), r.truncated.argmin());
        assert!(r.check(CLAIM_OPTIMUM).unwrap().asserted);
    }

    #[test]
    fn planted_minimum_survives() {
        // f = 5 * sum_i z_i has its minimum at all-down with gap 10
        let n = 6;
        let mut terms: Vec<(u64, f64)> = (0..n).map(|i| (1u64 << i, 5.0)).collect();
        terms.push((0b11111, 0.1));
        let p = IsingPolynomial::from_terms(n, terms).unwrap();
        let r = check_preservation(&p, 4).unwrap();
        assert!((r.certificate.epsilon - 0.1).abs() <= 1e-15);
        let opt = r.check(CLAIM_OPTIMUM).unwrap();
        assert!(opt.precondition_held && opt.passed);
        assert_eq!(r.full.argmin(), r.truncated.argmin());
        assert!(r.all_ok());
    }

    #[test]
    fn moving_argmin_still_within_two_epsilon() {
        let mut rng = ChaCha8Rng::seed_from_u64(35);
        let mut moved = 0;
        for _ in 0..200 {
            let p = random::polynomial(&mut rng, 8, 6, 30, 1.0);
            let r = check_preservation(&p, 2).unwrap();
            assert!(r.all_ok(), "{:?}", r.checks);
            if r.full.argmin() != r.truncated.argmin() {
                moved += 1;
                assert!(r.check(CLAIM_APPROX).unwrap().passed);
            }
        }
        assert!(moved > 0, "no instance moved the minimizer");
    }

    #[test]
    fn descent_examples() {
        let p = IsingPolynomial::from_terms(2, [(0b01, 1.0), (0b10, 1.0)]).unwrap();
        let d = bitflip_descent(&p, &Spins::parse("++").unwrap()).unwrap();
        assert_eq!(d.end.to_string(), "--");
        assert_eq!(d.steps, 2);
        let again = bitflip_descent(&p, &d.end).unwrap();
        assert_eq!(again.steps, 0);
        assert_eq!(again.end, d.end);
    }

    #[test]
    fn descent_ends_at_local_minimum() {
        let mut rng = ChaCha8Rng::seed_from_u64(36);
        let p = random::polynomial(&mut rng, 12, 4, 60, 1.0);
        for _ in 0..20 {
            let start = Spins::from_down_mask(12, rng.random::<u64>() & 0xfff).unwrap();
            let d = bitflip_descent(&p, &start).unwrap();
            let here = p.evaluate_spins(&d.end).unwrap();
            for i in 0..12 {
                assert!(p.evaluate_spins(&d.end.flipped(i)).unwrap() >= here - 1e-12);
            }
        }
    }

    #[test]
    fn basin_agreement_is_one_without_truncation() {
        let mut rng = ChaCha8Rng::seed_from_u64(38);
        let p = random::polynomial(&mut rng, 10, 3, 30, 1.0);
        assert_eq!(basin_agreement(&p, &p, 50, 1).unwrap(), 1.0);
    }

    #[test]
    fn enumeration_cap() {
        let p = IsingPolynomial::new(25).unwrap();
        assert!(matches!(enumerate_landscape(&p), Err(Error::Capacity { .. })));
    }
}
