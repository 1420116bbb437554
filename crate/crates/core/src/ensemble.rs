//! Monte-Carlo checks of the random-coupling ensemble.
//!
//! Couplings are drawn independently as `c_S = sqrt(pi_S) * xi` with `xi` a
//! unit-variance atom from the chosen family. Trial `t` draws from its own
//! ChaCha stream (`t + 1`; stream 0 picks the fixed configuration), so any
//! partition of the trials reproduces the serial result.

use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::poly::{full_mask, parity_sign};
use crate::walsh::binomial;

/// Largest number of modes a degree-indexed profile may expand to.
pub const MAX_PROFILE_MODES: usize = 1 << 20;
/// Monte-Carlo assertion radius in standard errors.
pub const SE_RADIUS: f64 = 5.0;
/// Gaussianity is asserted only below this max-variance ratio.
pub const MAX_VARIANCE_GATE: f64 = 0.01;
/// Moment assertions need at least this many trials.
pub const MIN_TRIALS: usize = 1000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CouplingFamily {
    Gaussian,
    /// `±sqrt(pi_S)` with equal probability.
    Rademacher,
    /// Uniform on `[-sqrt(3 pi_S), sqrt(3 pi_S)]`.
    Uniform,
}

impl CouplingFamily {
    /// `E[xi^4]`, the constant `C` in `E[c^4] <= C pi^2`.
    pub fn fourth_moment(self) -> f64 {
        match self {
            CouplingFamily::Gaussian => 3.0,
            CouplingFamily::Rademacher => 1.0,
            CouplingFamily::Uniform => 1.8,
        }
    }

    fn draw<R: Rng + ?Sized>(self, rng: &mut R) -> f64 {
        match self {
            CouplingFamily::Gaussian => StandardNormal.sample(rng),
            CouplingFamily::Rademacher => {
                if rng.random::<bool>() {
                    1.0
                } else {
                    -1.0
                }
            }
            CouplingFamily::Uniform => libm::sqrt(3.0) * (2.0 * rng.random::<f64>() - 1.0),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum VarianceProfile {
    /// `(S, pi_S)` pairs.
    Explicit(Vec<(u64, f64)>),
    /// `pi_S = per_degree[|S|]` for every subset of the `n` qubits.
    ByDegree(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleSpec {
    pub profile: VarianceProfile,
    pub family: CouplingFamily,
    pub trials: usize,
    pub seed: u64,
}

impl EnsembleSpec {
    /// `(S, pi_S)` over `n` qubits, zero variances dropped.
    pub fn modes(&self, n: usize) -> Result<Vec<(u64, f64)>> {
        let modes: Vec<(u64, f64)> = match &self.profile {
            VarianceProfile::Explicit(list) => {
                for &(s, _) in list {
                    if s & !full_mask(n) != 0 {
                        return Err(Error::QubitOutOfRange { mask: s, num_qubits: n });
                    }
                }
                list.clone()
            }
            VarianceProfile::ByDegree(per_degree) => {
                let count: u128 = per_degree
                    .iter()
                    .enumerate()
                    .filter(|(k, &p)| *k <= n && p != 0.0)
                    .map(|(k, _)| binomial(n, k))
                    .sum();
                if count > MAX_PROFILE_MODES as u128 {
                    return Err(Error::capacity("ensemble modes", count.min(usize::MAX as u128) as usize, MAX_PROFILE_MODES));
                }
                let mut out = Vec::with_capacity(count as usize);
                for (k, &p) in per_degree.iter().enumerate().filter(|(k, &p)| *k <= n && p != 0.0) {
                    for_each_subset_of_size(n, k, |s| out.push((s, p)));
                }
                out
            }
        };
        for &(_, p) in &modes {
            if !(p.is_finite() && p >= 0.0) {
                return Err(Error::InvalidParameter(alloc::format!("variance {p} is not a finite nonnegative number")));
            }
        }
        if self.trials == 0 {
            return Err(Error::InvalidParameter("trials must be at least 1".into()));
        }
        Ok(modes.into_iter().filter(|&(_, p)| p > 0.0).collect())
    }
}

/// Calls `visit` with every `k`-subset of `n` qubits in increasing mask order.
fn for_each_subset_of_size(n: usize, k: usize, mut visit: impl FnMut(u64)) {
    if k == 0 {
        visit(0);
        return;
    }
    if k > n {
        return;
    }
    // Gosper's hack
    let mut s: u64 = (1u64 << k) - 1;
    let limit = full_mask(n);
    loop {
        visit(s);
        let c = s & s.wrapping_neg();
        let r = s.wrapping_add(c);
        if r == 0 || r > limit {
            return;
        }
        s = (((r ^ s) >> 2) / c) | r;
        if s > limit {
            return;
        }
    }
}

fn trial_rng(seed: u64, trial: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial as u64 + 1);
    rng
}

/// The fixed configuration (down mask) shared by all trials.
pub fn fixed_configuration(seed: u64, n: usize) -> u64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(0);
    rng.random::<u64>() & full_mask(n)
}

/// Sample moments with their Monte-Carlo standard errors.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Moments {
    pub count: usize,
    pub mean: f64,
    /// Unbiased sample variance.
    pub variance: f64,
    pub skewness: f64,
    pub excess_kurtosis: f64,
    /// Standard error of `variance`, `sqrt((m4 - m2^2) / T)`.
    pub variance_se: f64,
}

impl Moments {
    pub fn of(samples: &[f64]) -> Moments {
        let t = samples.len() as f64;
        let mean = samples.iter().sum::<f64>() / t;
        let (mut m2, mut m3, mut m4) = (0.0, 0.0, 0.0);
        for &x in samples {
            let d = x - mean;
            let d2 = d * d;
            m2 += d2;
            m3 += d2 * d;
            m4 += d2 * d2;
        }
        m2 /= t;
        m3 /= t;
        m4 /= t;
        let (skewness, excess_kurtosis) = if m2 > 0.0 {
            (m3 / (m2 * libm::sqrt(m2)), m4 / (m2 * m2) - 3.0)
        } else {
            (0.0, 0.0)
        };
        Moments {
            count: samples.len(),
            mean,
            variance: if samples.len() > 1 { m2 * t / (t - 1.0) } else { 0.0 },
            skewness,
            excess_kurtosis,
            variance_se: libm::sqrt(((m4 - m2 * m2) / t).max(0.0)),
        }
    }

    /// `|variance - target| <= SE_RADIUS * variance_se`.
    pub fn variance_matches(&self, target: f64) -> bool {
        (self.variance - target).abs() <= SE_RADIUS * self.variance_se
    }
}

/// `0.1 + 5 sqrt(6 / T)` and `0.1 + 5 sqrt(24 / T)`.
pub fn gaussianity_gates(trials: usize) -> (f64, f64) {
    let t = trials as f64;
    (0.1 + SE_RADIUS * libm::sqrt(6.0 / t), 0.1 + SE_RADIUS * libm::sqrt(24.0 / t))
}

fn omitted(modes: &[(u64, f64)], k_max: usize) -> Vec<(u64, f64)> {
    modes.iter().copied().filter(|(s, _)| s.count_ones() as usize > k_max).collect()
}

fn kept(modes: &[(u64, f64)], k_max: usize) -> Vec<(u64, f64)> {
    modes.iter().copied().filter(|(s, _)| s.count_ones() as usize <= k_max).collect()
}

/// `eta(z) = sum_{|S| > k_max} c_S chi_S(z)` for trials in `range`.
pub fn sample_residuals(spec: &EnsembleSpec, n: usize, k_max: usize, range: core::ops::Range<usize>) -> Result<Vec<f64>> {
    let modes = omitted(&spec.modes(n)?, k_max);
    let z = fixed_configuration(spec.seed, n);
    Ok(range
        .map(|t| {
            let mut rng = trial_rng(spec.seed, t);
            modes
                .iter()
                .map(|&(s, p)| libm::sqrt(p) * spec.family.draw(&mut rng) * parity_sign(s, z))
                .sum()
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResidualReport {
    pub moments: Moments,
    /// `sum_{|S| > k_max} pi_S`.
    pub target_variance: f64,
    /// `max pi_S / sum pi_S` over the omitted modes.
    pub max_variance_ratio: f64,
    pub omitted_modes: usize,
    /// Moment assertions ran (enough trials).
    pub asserted: bool,
    pub variance_ok: bool,
    /// The Gaussianity gates applied (`max_variance_ratio < 0.01`).
    pub gaussian_gate: bool,
    pub skewness_ok: bool,
    pub kurtosis_ok: bool,
}

impl ResidualReport {
    pub fn passed(&self) -> bool {
        !self.asserted || (self.variance_ok && (!self.gaussian_gate || (self.skewness_ok && self.kurtosis_ok)))
    }
}

/// Residual moments at a fixed configuration against `Var = sum pi_S` and,
/// for many small modes, against a centered Gaussian.
pub fn ensemble_residual_check(spec: &EnsembleSpec, n: usize, k_max: usize) -> Result<ResidualReport> {
    let samples = sample_residuals(spec, n, k_max, 0..spec.trials)?;
    residual_report(spec, n, k_max, &samples)
}

/// Builds the report from samples drawn by [`sample_residuals`].
pub fn residual_report(spec: &EnsembleSpec, n: usize, k_max: usize, samples: &[f64]) -> Result<ResidualReport> {
    let modes = omitted(&spec.modes(n)?, k_max);
    let target: f64 = modes.iter().map(|m| m.1).sum();
    if target == 0.0 {
        return Err(Error::DegenerateEnsemble);
    }
    let max_pi = modes.iter().map(|m| m.1).fold(0.0, f64::max);
    let moments = Moments::of(samples);
    let ratio = max_pi / target;
    let (skew_gate, kurt_gate) = gaussianity_gates(samples.len());
    Ok(ResidualReport {
        moments,
        target_variance: target,
        max_variance_ratio: ratio,
        omitted_modes: modes.len(),
        asserted: samples.len() >= MIN_TRIALS,
        variance_ok: moments.variance_matches(target),
        gaussian_gate: ratio < MAX_VARIANCE_GATE,
        skewness_ok: moments.skewness.abs() < skew_gate,
        kurtosis_ok: moments.excess_kurtosis.abs() < kurt_gate,
    })
}

/// `f_trunc(z^i) - f_trunc(z) = -2 sum_{S ∋ i, |S| <= k_max} c_S chi_S(z)`
/// for trials in `range`.
pub fn sample_bitflips(
    spec: &EnsembleSpec,
    n: usize,
    k_max: usize,
    coordinate: usize,
    range: core::ops::Range<usize>,
) -> Result<Vec<f64>> {
    if coordinate >= n {
        return Err(Error::VariableOutOfRange { index: coordinate, count: n });
    }
    let modes = kept(&spec.modes(n)?, k_max);
    let z = fixed_configuration(spec.seed, n);
    Ok(range
        .map(|t| {
            let mut rng = trial_rng(spec.seed, t);
            let mut delta = 0.0;
            for &(s, p) in &modes {
                // every kept coupling is drawn so trials share one stream layout
                let c = libm::sqrt(p) * spec.family.draw(&mut rng);
                if s >> coordinate & 1 == 1 {
                    delta -= 2.0 * c * parity_sign(s, z);
                }
            }
            delta
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq)]
pub struct BitflipReport {
    pub coordinate: usize,
    pub moments: Moments,
    /// `v_i = 4 sum_{S ∋ i, |S| <= k_max} pi_S`.
    pub analytic_variance: f64,
    /// `(1/n) sum_i v_i = (4/n) sum_{|S| <= k_max} |S| pi_S`.
    pub mean_variance: f64,
    /// `4 k_max E[P_<=] / n`.
    pub mean_variance_bound: f64,
    pub asserted: bool,
    pub variance_ok: bool,
    pub average_bound_ok: bool,
}

impl BitflipReport {
    pub fn passed(&self) -> bool {
        self.average_bound_ok && (!self.asserted || self.variance_ok)
    }
}

/// Empirical variance of a single bit flip of the kept part against `v_i`.
pub fn bitflip_variance_check(spec: &EnsembleSpec, n: usize, k_max: usize, coordinate: usize) -> Result<BitflipReport> {
    let samples = sample_bitflips(spec, n, k_max, coordinate, 0..spec.trials)?;
    bitflip_report(spec, n, k_max, coordinate, &samples)
}

pub fn bitflip_report(spec: &EnsembleSpec, n: usize, k_max: usize, coordinate: usize, samples: &[f64]) -> Result<BitflipReport> {
    let modes = kept(&spec.modes(n)?, k_max);
    let analytic: f64 = 4.0 * modes.iter().filter(|m| m.0 >> coordinate & 1 == 1).map(|m| m.1).sum::<f64>();
    let weighted: f64 = modes.iter().map(|&(s, p)| s.count_ones() as f64 * p).sum();
    let p_below: f64 = modes.iter().filter(|m| m.0 != 0).map(|m| m.1).sum();
    let mean_variance = 4.0 * weighted / n as f64;
    let bound = 4.0 * k_max as f64 * p_below / n as f64;
    if modes.iter().all(|m| m.0 == 0) {
        return Err(Error::DegenerateEnsemble);
    }
    let moments = Moments::of(samples);
    Ok(BitflipReport {
        coordinate,
        moments,
        analytic_variance: analytic,
        mean_variance,
        mean_variance_bound: bound,
        asserted: samples.len() >= MIN_TRIALS,
        variance_ok: moments.variance_matches(analytic),
        average_bound_ok: mean_variance <= bound * (1.0 + 1e-12),
    })
}

/// Sign agreement of full and truncated single-flip differences.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SignRate {
    /// Fraction of `(trial, coordinate)` pairs that agree.
    pub rate: f64,
    /// `(E[P_>] / E[P_<=]) / (k_max / n)`; `None` when `E[P_<=] = 0`.
    pub strong_margin: Option<f64>,
    pub pairs: usize,
}

/// `f(z^i) - f(z) >= 0` and `f_trunc(z^i) - f_trunc(z) >= 0` agree, counted
/// over trials and coordinates, with every omitted variance scaled by
/// `omitted_scale`.
///
/// Comparing the predicate `>= 0` (rather than a three-valued sign) makes a
/// signal-free truncation agree half the time.
pub fn sign_agreement(
    spec: &EnsembleSpec,
    n: usize,
    k_max: usize,
    omitted_scale: f64,
    range: core::ops::Range<usize>,
) -> Result<(usize, usize)> {
    let modes = spec.modes(n)?;
    let z = fixed_configuration(spec.seed, n);
    let amp = libm::sqrt(omitted_scale);
    let mut agree = 0;
    let mut total = 0;
    let mut kept_delta = alloc::vec![0.0; n];
    let mut noise_delta = alloc::vec![0.0; n];
    for t in range {
        let mut rng = trial_rng(spec.seed, t);
        kept_delta.iter_mut().for_each(|d| *d = 0.0);
        noise_delta.iter_mut().for_each(|d| *d = 0.0);
        for &(s, p) in &modes {
            let c = libm::sqrt(p) * spec.family.draw(&mut rng);
            let contrib = -2.0 * c * parity_sign(s, z);
            let target = if s.count_ones() as usize > k_max {
                &mut noise_delta
            } else {
                &mut kept_delta
            };
            for q in crate::poly::qubits_of(s) {
                target[q] += contrib;
            }
        }
        for i in 0..n {
            let full = kept_delta[i] + amp * noise_delta[i];
            agree += usize::from((full >= 0.0) == (kept_delta[i] >= 0.0));
            total += 1;
        }
    }
    Ok((agree, total))
}

fn powers(modes: &[(u64, f64)], k_max: usize) -> (f64, f64) {
    let below = modes.iter().filter(|m| m.0 != 0 && m.0.count_ones() as usize <= k_max).map(|m| m.1).sum();
    let above = modes.iter().filter(|m| m.0.count_ones() as usize > k_max).map(|m| m.1).sum();
    (below, above)
}

fn margin_of(below: f64, above: f64, n: usize, k_max: usize) -> Option<f64> {
    if above == 0.0 {
        Some(0.0)
    } else if below == 0.0 {
        None
    } else {
        Some(above / below * n as f64 / k_max as f64)
    }
}

/// Strong margin of the expected powers; `None` when `E[P_<=] = 0 < E[P_>]`.
pub fn expected_strong_margin(spec: &EnsembleSpec, n: usize, k_max: usize) -> Result<Option<f64>> {
    let modes = spec.modes(n)?;
    if modes.is_empty() {
        return Err(Error::DegenerateEnsemble);
    }
    let (below, above) = powers(&modes, k_max);
    Ok(margin_of(below, above, n, k_max))
}

pub fn sign_preservation_rate(spec: &EnsembleSpec, n: usize, k_max: usize) -> Result<SignRate> {
    let strong_margin = expected_strong_margin(spec, n, k_max)?;
    let (agree, total) = sign_agreement(spec, n, k_max, 1.0, 0..spec.trials)?;
    Ok(SignRate {
        rate: agree as f64 / total.max(1) as f64,
        strong_margin,
        pairs: total,
    })
}

/// Omitted-variance scale that moves the strong margin of `spec` to `target`.
pub fn scale_for_margin(spec: &EnsembleSpec, n: usize, k_max: usize, target: f64) -> Result<f64> {
    let (below, above) = powers(&spec.modes(n)?, k_max);
    if below == 0.0 || above == 0.0 {
        return Err(Error::InvalidParameter("a margin sweep needs both kept and omitted power".into()));
    }
    Ok(target * below * k_max as f64 / (n as f64 * above))
}

/// Sign-agreement rates at each requested strong margin, reusing the same
/// draws for every margin.
pub fn sign_preservation_sweep(spec: &EnsembleSpec, n: usize, k_max: usize, margins: &[f64]) -> Result<Vec<SignRate>> {
    margins
        .iter()
        .map(|&m| {
            let scale = scale_for_margin(spec, n, k_max, m)?;
            let (agree, total) = sign_agreement(spec, n, k_max, scale, 0..spec.trials)?;
            Ok(SignRate {
                rate: agree as f64 / total.max(1) as f64,
                strong_margin: Some(m),
                pairs: total,
            })
        })
        .collect()
}

/// Rates are nonincreasing along increasing margins, and the best-margin
/// rate exceeds the worst one.
pub fn trend_holds(rates: &[SignRate]) -> bool {
    let mut sorted: Vec<&SignRate> = rates.iter().collect();
    sorted.sort_by(|a, b| a.strong_margin.partial_cmp(&b.strong_margin).unwrap_or(core::cmp::Ordering::Equal));
    let monotone = sorted.windows(2).all(|w| w[1].rate <= w[0].rate);
    let strict = match (sorted.first(), sorted.last()) {
        (Some(a), Some(b)) if sorted.len() > 1 => a.rate > b.rate,
        _ => true,
    };
    monotone && strict
}

/// `n_modes` distinct subsets of degree `degree` on `n` qubits, each with
/// variance `pi`, in increasing mask order.
pub fn uniform_modes(n: usize, degree: usize, n_modes: usize, pi: f64) -> Vec<(u64, f64)> {
    let mut out = Vec::with_capacity(n_modes);
    for_each_subset_of_size(n, degree, |s| {
        if out.len() < n_modes {
            out.push((s, pi));
        }
    });
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(profile: VarianceProfile, family: CouplingFamily, trials: usize, seed: u64) -> EnsembleSpec {
        EnsembleSpec {
            profile,
            family,
            trials,
            seed,
        }
    }

    #[test]
    fn subset_enumeration_counts() {
        for n in 0..10 {
            for k in 0..=n {
                let mut count = 0u128;
                let mut last = None;
                for_each_subset_of_size(n, k, |s| {
                    assert_eq!(s.count_ones() as usize, k);
                    assert!(last < Some(s));
                    last = Some(s);
                    count += 1;
                });
                assert_eq!(count, binomial(n, k));
            }
        }
    }

    #[test]
    fn zero_variances_give_zero_residual() {
        let s = spec(VarianceProfile::ByDegree(alloc::vec![0.0; 5]), CouplingFamily::Gaussian, 50, 1);
        let samples = sample_residuals(&s, 4, 1, 0..50).unwrap();
        assert!(samples.iter().all(|&x| x == 0.0));
        assert_eq!(Moments::of(&samples).variance, 0.0);
        assert_eq!(ensemble_residual_check(&s, 4, 1), Err(Error::DegenerateEnsemble));
    }

    #[test]
    fn fourth_moments_match_families() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for fam in [CouplingFamily::Gaussian, CouplingFamily::Rademacher, CouplingFamily::Uniform] {
            let xs: Vec<f64> = (0..200_000).map(|_| fam.draw(&mut rng)).collect();
            let m2 = xs.iter().map(|x| x * x).sum::<f64>() / xs.len() as f64;
            let m4 = xs.iter().map(|x| x * x * x * x).sum::<f64>() / xs.len() as f64;
            assert!((m2 - 1.0).abs() < 0.02, "{fam:?} m2 = {m2}");
            assert!((m4 - fam.fourth_moment()).abs() < 0.1, "{fam:?} m4 = {m4}");
        }
    }

    #[test]
    fn gaussian_residual_moments() {
        let modes = uniform_modes(16, 4, 1000, 1.0);
        assert_eq!(modes.len(), 1000);
        let s = spec(VarianceProfile::Explicit(modes), CouplingFamily::Gaussian, 4000, 3);
        let r = ensemble_residual_check(&s, 16, 2).unwrap();
        assert_eq!(r.target_variance, 1000.0);
        assert!(r.gaussian_gate);
        assert!(r.passed(), "{r:?}");
    }

    #[test]
    fn rademacher_residual_moments() {
        let s = spec(
            VarianceProfile::Explicit(uniform_modes(16, 5, 1000, 1.0)),
            CouplingFamily::Rademacher,
            4000,
            4,
        );
        let r = ensemble_residual_check(&s, 16, 3).unwrap();
        assert!(r.passed(), "{r:?}");
    }

    #[test]
    fn bitflip_arithmetic_and_monte_carlo_seed_37() {
        // 3 kept modes contain qubit 0, each with variance 0.5
        let modes = alloc::vec![(0b001, 0.5), (0b011, 0.5), (0b101, 0.5), (0b110, 0.5), (0b111, 2.0)];
        let s = spec(VarianceProfile::Explicit(modes), CouplingFamily::Uniform, 5000, 37);
        let r = bitflip_variance_check(&s, 3, 2, 0).unwrap();
        assert_eq!(r.analytic_variance, 4.0 * 3.0 * 0.5);
        assert!(r.passed(), "{r:?}");
    }

    #[test]
    fn average_bitflip_bound() {
        let s = spec(VarianceProfile::ByDegree(alloc::vec![0.0, 1.0, 1.0, 1.0]), CouplingFamily::Gaussian, 10, 1);
        let r = bitflip_variance_check(&s, 6, 3, 2).unwrap();
        let direct: f64 = (0..6).map(|i| bitflip_report(&s, 6, 3, i, &[0.0]).unwrap().analytic_variance).sum::<f64>() / 6.0;
        assert!((r.mean_variance - direct).abs() <= 1e-12);
        assert!(r.average_bound_ok);
    }

    #[test]
    fn no_residual_means_full_agreement() {
        let s = spec(VarianceProfile::ByDegree(alloc::vec![0.0, 1.0, 0.5]), CouplingFamily::Gaussian, 200, 5);
        let r = sign_preservation_rate(&s, 8, 2).unwrap();
        assert_eq!(r.rate, 1.0);
        assert_eq!(r.strong_margin, Some(0.0));
    }

    #[test]
    fn zero_signal_is_a_coin_flip() {
        let s = spec(VarianceProfile::ByDegree(alloc::vec![0.0, 0.0, 0.0, 1.0]), CouplingFamily::Gaussian, 2000, 6);
        let r = sign_preservation_rate(&s, 8, 2).unwrap();
        assert_eq!(r.strong_margin, None);
        assert!((r.rate - 0.5).abs() < 0.03, "rate {}", r.rate);
    }

    #[test]
    fn sweep_is_nonincreasing() {
        let s = spec(VarianceProfile::ByDegree(alloc::vec![0.0, 1.0, 1.0, 0.1, 0.1]), CouplingFamily::Gaussian, 1000, 7);
        let rates = sign_preservation_sweep(&s, 10, 2, &[0.001, 0.1, 10.0]).unwrap();
        assert!(trend_holds(&rates), "{rates:?}");
        assert!(rates[0].rate > 0.95);
    }

    #[test]
    fn partitioned_trials_match_serial() {
        let s = spec(VarianceProfile::ByDegree(alloc::vec![0.0, 0.0, 1.0, 1.0]), CouplingFamily::Uniform, 100, 8);
        let all = sample_residuals(&s, 7, 2, 0..100).unwrap();
        let mut parts = sample_residuals(&s, 7, 2, 0..37).unwrap();
        parts.extend(sample_residuals(&s, 7, 2, 37..100).unwrap());
        assert_eq!(all, parts);
    }
}
