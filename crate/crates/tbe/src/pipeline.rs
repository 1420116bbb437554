//! The compile pipeline and the stand-alone verify, spectrum, solve and
//! ensemble stages.

use std::path::{Path, PathBuf};

use serde::Serialize;
use tbe_core::encoder::ExtendedTables;
use tbe_core::ensemble::{self, BitflipReport, ResidualReport, SignRate};
use tbe_core::landscape::{basin_agreement, check_preservation};
use tbe_core::quadratize::quadratize;
use tbe_core::solve::{decode_and_refine, Method};
use tbe_core::truncate::NoiseFloorThresholds;
use tbe_core::walsh::{smoothness_report, MAX_SMOOTHNESS_DIM};
use tbe_core::{
    center, certify, encode, table_spectrum, truncate, AssignmentStrategy, CenteredCfn, Cfn, EncodingLayout,
    IsingPolynomial, UnusedPolicy,
};

use crate::error::{exit, read_file, write_file, CliError, CliResult};
use crate::formats::{self, CertificateJson, SolveJson};
use crate::parallel::Workers;

/// Where register patterns come from.
#[derive(Debug, Clone, PartialEq)]
pub enum AssignmentChoice {
    Binary,
    Gray,
    Custom(PathBuf),
}

impl AssignmentChoice {
    fn resolve(&self) -> CliResult<AssignmentStrategy> {
        Ok(match self {
            AssignmentChoice::Binary => AssignmentStrategy::StandardBinary,
            AssignmentChoice::Gray => AssignmentStrategy::GrayCode,
            AssignmentChoice::Custom(p) => AssignmentStrategy::Custom(formats::parse_custom_assignment(&read_file(p)?)?),
        })
    }

    fn label(&self) -> String {
        match self {
            AssignmentChoice::Binary => "binary".into(),
            AssignmentChoice::Gray => "gray".into(),
            AssignmentChoice::Custom(p) => format!("custom:{}", p.display()),
        }
    }
}

/// How a CFN becomes a HUBO.
#[derive(Debug, Clone, PartialEq)]
pub struct EncodeOptions {
    pub assignment: AssignmentChoice,
    pub unused: UnusedPolicy,
    pub center: bool,
}

impl Default for EncodeOptions {
    fn default() -> Self {
        EncodeOptions {
            assignment: AssignmentChoice::Binary,
            unused: UnusedPolicy::default(),
            center: true,
        }
    }
}

/// A parsed network with its layout and exact HUBO.
pub struct Compiled {
    pub cfn: Cfn,
    pub centered: CenteredCfn,
    pub layout: EncodingLayout,
    pub full: IsingPolynomial,
}

pub fn compile_cfn(cfn: Cfn, opts: &EncodeOptions) -> CliResult<Compiled> {
    let centered = if opts.center {
        center(&cfn)
    } else {
        CenteredCfn::uncentered(cfn.clone())
    };
    let layout = EncodingLayout::build(&centered, &opts.assignment.resolve()?, opts.unused)?;
    let full = encode(&centered, &layout)?;
    Ok(Compiled {
        cfn,
        centered,
        layout,
        full,
    })
}

pub fn load_cfn(path: &Path, opts: &EncodeOptions) -> CliResult<Compiled> {
    compile_cfn(formats::parse_cfn(&read_file(path)?)?, opts)
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Outputs {
    /// Exact HUBO as JSON.
    pub hubo: Option<PathBuf>,
    /// Truncated HUBO as JSON.
    pub truncated: Option<PathBuf>,
    pub spectrum: Option<PathBuf>,
    pub certificate: Option<PathBuf>,
    pub qubo: Option<PathBuf>,
    pub report: Option<PathBuf>,
}

impl Outputs {
    fn paths(&self) -> impl Iterator<Item = &PathBuf> {
        [
            &self.hubo,
            &self.truncated,
            &self.spectrum,
            &self.certificate,
            &self.qubo,
            &self.report,
        ]
        .into_iter()
        .flatten()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig {
    pub input: PathBuf,
    pub k_max: usize,
    pub encode: EncodeOptions,
    pub quadratize: bool,
    pub solve: Option<Method>,
    pub seed: u64,
    pub refine: bool,
    pub thresholds: NoiseFloorThresholds,
    pub strict: bool,
    pub outputs: Outputs,
    pub threads: Option<usize>,
}

impl PipelineConfig {
    pub fn new(input: PathBuf, k_max: usize) -> Self {
        PipelineConfig {
            input,
            k_max,
            encode: EncodeOptions::default(),
            quadratize: false,
            solve: None,
            seed: 0,
            refine: false,
            thresholds: NoiseFloorThresholds::default(),
            strict: false,
            outputs: Outputs::default(),
            threads: None,
        }
    }

    fn validate(&self) -> CliResult<()> {
        if self.k_max < 1 {
            return Err(CliError::Usage("--kmax must be at least 1".into()));
        }
        if let UnusedPolicy::Penalty(Some(l)) = self.encode.unused {
            if !(l.is_finite() && l >= 0.0) {
                return Err(CliError::Usage(format!("penalty weight {l} must be finite and nonnegative")));
            }
        }
        let mut seen: Vec<&PathBuf> = vec![&self.input];
        for p in self.outputs.paths() {
            if seen.contains(&p) {
                return Err(CliError::Usage(format!("path {} is used twice", p.display())));
            }
            seen.push(p);
        }
        Ok(())
    }
}

#[derive(Debug, Serialize)]
pub struct NoiseFloorJson {
    pub weak_ratio: Option<f64>,
    pub weak_threshold: f64,
    pub weak_passes: bool,
    pub strong_margin: Option<f64>,
    pub strong_threshold: f64,
    pub strong_passes: bool,
}

#[derive(Debug, Serialize)]
pub struct QuadratizationJson {
    pub num_ancillas: usize,
    pub num_variables: usize,
    pub penalty: f64,
    pub quadratic_terms: usize,
}

/// `cfn_value <= cfn_optimum + 2 epsilon` for an exhaustively solved
/// instance whose network is small enough to enumerate.
#[derive(Debug, Serialize)]
pub struct OptimumBoundJson {
    pub cfn_optimum: f64,
    pub cfn_value: f64,
    pub bound: f64,
    pub registers_valid: bool,
    pub holds: bool,
}

#[derive(Debug, Serialize)]
pub struct PipelineReport {
    pub input: String,
    pub num_variables: usize,
    pub cardinalities: Vec<usize>,
    pub register_widths: Vec<usize>,
    pub num_qubits: usize,
    pub k_full: usize,
    pub k_max: usize,
    pub assignment: String,
    pub unused_policy: String,
    pub centered: bool,
    pub full_terms: usize,
    pub truncated_terms: usize,
    pub spectrum: Vec<f64>,
    pub penalty_spectrum: Option<Vec<f64>>,
    pub additivity_error: f64,
    pub noise_floor: NoiseFloorJson,
    pub certificate: CertificateJson,
    pub quadratization: Option<QuadratizationJson>,
    pub solution: Option<SolveJson>,
    pub optimum_bound: Option<OptimumBoundJson>,
    pub warnings: Vec<String>,
}

pub struct PipelineOutcome {
    pub report: PipelineReport,
    pub exit_code: u8,
}

/// Largest CFN configuration count enumerated for the optimum bound.
const MAX_CFN_ENUMERATION: u128 = 1 << 24;

fn policy_label(layout: &EncodingLayout) -> String {
    match layout.penalty_weight() {
        Some(l) => format!("penalty:{l}"),
        None => match layout.unused_policy() {
            UnusedPolicy::Fallback(Some(c)) => format!("fallback:{c}"),
            _ => "fallback:last".into(),
        },
    }
}

fn cfn_optimum(cfn: &Cfn) -> Option<f64> {
    let count = cfn
        .variables()
        .iter()
        .try_fold(1u128, |acc, v| acc.checked_mul(v.cardinality as u128))?;
    if count > MAX_CFN_ENUMERATION {
        return None;
    }
    let mut best = f64::INFINITY;
    cfn.for_each_assignment(|a| best = best.min(cfn.evaluate_zero_based(a)));
    Some(best)
}

/// Encode, profile, certify, truncate, then optionally quadratize, solve,
/// decode and refine, writing every requested artifact.
pub fn run_pipeline(cfg: &PipelineConfig) -> CliResult<PipelineOutcome> {
    cfg.validate()?;
    let workers = Workers::new(cfg.threads)?;
    let c = load_cfn(&cfg.input, &cfg.encode)?;
    let mut warnings = Vec::new();

    let profile = table_spectrum(&c.centered, &c.layout)?;
    let cert = certify(&c.full, cfg.k_max)?;
    let weak = cert.weak_passes(&cfg.thresholds);
    let strong = cert.strong_passes(&cfg.thresholds);
    if !weak || !strong {
        let shown = |r: Option<f64>| r.map_or_else(|| "undefined".to_string(), |r| format!("{r:.4e}"));
        warnings.push(format!(
            "noise floor not met at k_max = {}: weak ratio {} (threshold {}), strong margin {} (threshold {})",
            cfg.k_max,
            shown(cert.weak_ratio),
            cfg.thresholds.weak,
            shown(cert.strong_margin),
            cfg.thresholds.strong
        ));
    }
    let truncated = truncate(&c.full, cfg.k_max);

    let qubo = if cfg.quadratize {
        Some(quadratize(&truncated)?)
    } else {
        None
    };

    let solution = match cfg.solve {
        None => None,
        Some(method) => {
            let method = match method {
                Method::Anneal(mut p) if p.initial_temperature.is_none() && cert.epsilon > 0.0 => {
                    p.initial_temperature = Some(cert.epsilon);
                    Method::Anneal(p)
                }
                m => m,
            };
            let r = match &qubo {
                Some(q) => workers.solve_qubo(q, method, cfg.seed)?,
                None => workers.solve(&truncated, method, cfg.seed)?,
            };
            Some(decode_and_refine(r, &c.layout, &c.cfn, &c.full, cfg.refine)?)
        }
    };

    let optimum_bound = match (&solution, cfg.solve) {
        (Some(r), Some(Method::Exhaustive)) => cfn_optimum(&c.cfn).map(|opt| {
            let value = r.cfn_value.expect("decoded");
            let bound = opt + 2.0 * cert.epsilon;
            OptimumBoundJson {
                cfn_optimum: opt,
                cfn_value: value,
                bound,
                registers_valid: r.decoded.as_ref().is_some_and(|d| d.all_valid()),
                holds: value <= bound + 1e-9,
            }
        }),
        _ => None,
    };
    if let Some(b) = &optimum_bound {
        if b.registers_valid && !b.holds {
            warnings.push(format!(
                "decoded cost {} exceeds optimum {} + 2 epsilon",
                b.cfn_value, b.cfn_optimum
            ));
        }
    }

    let o = &cfg.outputs;
    if let Some(p) = &o.hubo {
        write_file(p, &formats::hubo_to_json(&c.full))?;
    }
    if let Some(p) = &o.truncated {
        write_file(p, &formats::hubo_to_json(&truncated))?;
    }
    if let Some(p) = &o.spectrum {
        write_file(p, &formats::spectrum_to_csv(&profile))?;
    }
    if let Some(p) = &o.certificate {
        write_file(p, &formats::certificate_to_json(&cert))?;
    }
    if let Some(p) = &o.qubo {
        match &qubo {
            Some(q) => write_file(p, &formats::qubo_to_json(q))?,
            None => return Err(CliError::Usage("--out-qubo needs --quadratize".into())),
        }
    }

    let report = PipelineReport {
        input: cfg.input.display().to_string(),
        num_variables: c.cfn.num_variables(),
        cardinalities: c.cfn.variables().iter().map(|v| v.cardinality).collect(),
        register_widths: c.layout.register_widths().to_vec(),
        num_qubits: c.layout.total_qubits(),
        k_full: c.layout.k_full(),
        k_max: cfg.k_max,
        assignment: cfg.encode.assignment.label(),
        unused_policy: policy_label(&c.layout),
        centered: cfg.encode.center,
        full_terms: c.full.len(),
        truncated_terms: truncated.len(),
        spectrum: profile.per_degree.clone(),
        penalty_spectrum: profile.penalty.clone(),
        additivity_error: profile.additivity_error(),
        noise_floor: NoiseFloorJson {
            weak_ratio: cert.weak_ratio,
            weak_threshold: cfg.thresholds.weak,
            weak_passes: weak,
            strong_margin: cert.strong_margin,
            strong_threshold: cfg.thresholds.strong,
            strong_passes: strong,
        },
        certificate: CertificateJson::from(&cert),
        quadratization: qubo.as_ref().map(|q| QuadratizationJson {
            num_ancillas: q.num_ancillas(),
            num_variables: q.num_variables(),
            penalty: q.penalty_weight(),
            quadratic_terms: q.quadratic().count(),
        }),
        solution: solution.as_ref().map(SolveJson::from),
        optimum_bound,
        warnings,
    };
    if let Some(p) = &o.report {
        write_file(p, &formats::to_json(&report))?;
    }
    let exit_code = if cfg.strict && !(weak && strong) {
        exit::NOISE_FLOOR
    } else {
        exit::OK
    };
    Ok(PipelineOutcome { report, exit_code })
}

/// Source of the function under verification.
#[derive(Debug, Clone, PartialEq)]
pub enum VerifyInput {
    Cfn(PathBuf, EncodeOptions),
    Hubo(PathBuf),
}

#[derive(Debug, Clone, PartialEq)]
pub struct VerifyConfig {
    pub input: VerifyInput,
    pub k_max: usize,
    pub basin_samples: usize,
    pub seed: u64,
    pub out: Option<PathBuf>,
}

/// The verification report and the exit code it implies: nonzero iff an
/// asserted claim failed.
pub fn run_verify(cfg: &VerifyConfig) -> CliResult<(formats::VerificationJson, u8)> {
    let full = match &cfg.input {
        VerifyInput::Cfn(p, opts) => load_cfn(p, opts)?.full,
        VerifyInput::Hubo(p) => formats::parse_hubo(&read_file(p)?)?,
    };
    let report = check_preservation(&full, cfg.k_max)?;
    let basin = if cfg.basin_samples > 0 {
        Some(basin_agreement(
            &full,
            &truncate(&full, cfg.k_max),
            cfg.basin_samples,
            cfg.seed,
        )?)
    } else {
        None
    };
    let json = formats::verification_json(&report, basin);
    if let Some(p) = &cfg.out {
        write_file(p, &formats::to_json(&json))?;
    }
    let code = if json.all_passed { exit::OK } else { exit::FAILURE };
    Ok((json, code))
}

#[derive(Debug, Serialize)]
pub struct TableSmoothnessJson {
    /// `[i]` for a unary table, `[i, j]` for a pairwise one.
    pub variables: Vec<usize>,
    pub dimension: usize,
    pub power: Vec<f64>,
    pub lipschitz: Vec<f64>,
    pub tail_lhs: Vec<f64>,
    pub tail_rhs: Vec<f64>,
    pub tail_bound: Vec<f64>,
    pub identity_error: f64,
    pub geometric_ratio: Option<f64>,
}

/// Spectrum CSV for a network, plus per-table derivative reports for
/// tables of at most `MAX_SMOOTHNESS_DIM` qubits.
pub fn run_spectrum(path: &Path, opts: &EncodeOptions) -> CliResult<(String, Vec<TableSmoothnessJson>)> {
    let c = load_cfn(path, opts)?;
    let profile = table_spectrum(&c.centered, &c.layout)?;
    let ext = ExtendedTables::build(&c.centered, &c.layout)?;
    let mut tables = Vec::new();
    let mut push = |variables: Vec<usize>, values: &[f64]| -> CliResult<()> {
        if values.len() > 1 << MAX_SMOOTHNESS_DIM {
            return Ok(());
        }
        let r = smoothness_report(values)?;
        tables.push(TableSmoothnessJson {
            variables,
            dimension: r.dimension,
            power: r.power.clone(),
            lipschitz: r.degrees.iter().map(|d| d.lipschitz).collect(),
            tail_lhs: r.degrees.iter().map(|d| d.tail_lhs).collect(),
            tail_rhs: r.degrees.iter().map(|d| d.tail_rhs).collect(),
            tail_bound: r.degrees.iter().map(|d| d.tail_bound).collect(),
            identity_error: r.identity_error(),
            geometric_ratio: r.geometric_ratio,
        });
        Ok(())
    };
    for (i, t) in ext.unary.iter().enumerate() {
        push(vec![i], t)?;
    }
    for pair in &ext.pairwise {
        push(vec![pair.i, pair.j], &pair.values)?;
    }
    Ok((formats::spectrum_to_csv(&profile), tables))
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveConfig {
    pub hubo: PathBuf,
    pub k_max: Option<usize>,
    pub quadratize: bool,
    pub method: Method,
    pub seed: u64,
    pub threads: Option<usize>,
}

pub fn run_solve(cfg: &SolveConfig) -> CliResult<tbe_core::solve::SolveResult> {
    let full = formats::parse_hubo(&read_file(&cfg.hubo)?)?;
    let poly = match cfg.k_max {
        Some(k) => truncate(&full, k),
        None => full,
    };
    let workers = Workers::new(cfg.threads)?;
    if cfg.quadratize {
        workers.solve_qubo(&quadratize(&poly)?, cfg.method, cfg.seed)
    } else {
        workers.solve(&poly, cfg.method, cfg.seed)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleConfig {
    pub profile: PathBuf,
    pub trials: usize,
    pub seed: u64,
    pub threads: Option<usize>,
}

#[derive(Debug, Serialize)]
pub struct MomentsJson {
    pub trials: usize,
    pub mean: f64,
    pub variance: f64,
    pub variance_se: f64,
    pub skewness: f64,
    pub excess_kurtosis: f64,
}

impl From<&ensemble::Moments> for MomentsJson {
    fn from(m: &ensemble::Moments) -> Self {
        MomentsJson {
            trials: m.count,
            mean: m.mean,
            variance: m.variance,
            variance_se: m.variance_se,
            skewness: m.skewness,
            excess_kurtosis: m.excess_kurtosis,
        }
    }
}

#[derive(Debug, Serialize)]
pub struct ResidualJson {
    pub moments: MomentsJson,
    pub target_variance: f64,
    pub omitted_modes: usize,
    pub max_variance_ratio: f64,
    pub asserted: bool,
    pub variance_ok: bool,
    pub gaussian_gate: bool,
    pub skewness_ok: bool,
    pub kurtosis_ok: bool,
    pub passed: bool,
}

impl From<&ResidualReport> for ResidualJson {
    fn from(r: &ResidualReport) -> Self {
        ResidualJson {
            moments: MomentsJson::from(&r.moments),
            target_variance: r.target_variance,
            omitted_modes: r.omitted_modes,
            max_variance_ratio: r.max_variance_ratio,
            asserted: r.asserted,
            variance_ok: r.variance_ok,
            gaussian_gate: r.gaussian_gate,
            skewness_ok: r.skewness_ok,
            kurtosis_ok: r.kurtosis_ok,
            passed: r.passed(),
        }
    }
}

#[derive(Debug, Serialize)]
pub struct BitflipJson {
    pub coordinate: usize,
    pub moments: MomentsJson,
    pub analytic_variance: f64,
    pub mean_variance: f64,
    pub mean_variance_bound: f64,
    pub asserted: bool,
    pub variance_ok: bool,
    pub average_bound_ok: bool,
    pub passed: bool,
}

impl From<&BitflipReport> for BitflipJson {
    fn from(r: &BitflipReport) -> Self {
        BitflipJson {
            coordinate: r.coordinate,
            moments: MomentsJson::from(&r.moments),
            analytic_variance: r.analytic_variance,
            mean_variance: r.mean_variance,
            mean_variance_bound: r.mean_variance_bound,
            asserted: r.asserted,
            variance_ok: r.variance_ok,
            average_bound_ok: r.average_bound_ok,
            passed: r.passed(),
        }
    }
}

#[derive(Debug, Serialize)]
pub struct SignRateJson {
    pub strong_margin: Option<f64>,
    pub rate: f64,
    pub pairs: usize,
}

impl From<&SignRate> for SignRateJson {
    fn from(r: &SignRate) -> Self {
        SignRateJson {
            strong_margin: r.strong_margin,
            rate: r.rate,
            pairs: r.pairs,
        }
    }
}

#[derive(Debug, Serialize)]
pub struct EnsembleJson {
    pub num_qubits: usize,
    pub k_max: usize,
    pub family: String,
    pub fourth_moment: f64,
    pub trials: usize,
    pub seed: u64,
    /// `None` when no omitted mode has variance.
    pub residual: Option<ResidualJson>,
    /// `None` when no kept mode has variance.
    pub bitflip: Option<BitflipJson>,
    pub sign_rate: Option<SignRateJson>,
    /// Empty unless both kept and omitted power are present.
    pub sweep: Vec<SignRateJson>,
    pub sweep_trend_holds: Option<bool>,
    pub passed: bool,
}

/// A degenerate part of the ensemble is reported as absent.
fn unless_degenerate<T>(r: tbe_core::Result<T>) -> tbe_core::Result<Option<T>> {
    match r {
        Err(tbe_core::Error::DegenerateEnsemble) => Ok(None),
        other => other.map(Some),
    }
}

pub fn run_ensemble(cfg: &EnsembleConfig) -> CliResult<EnsembleJson> {
    let prof = formats::parse_profile(&read_file(&cfg.profile)?)?;
    let (n, k) = (prof.num_qubits, prof.k_max);
    let spec = prof.spec(cfg.trials, cfg.seed);
    let modes = spec.modes(n)?;
    if modes.is_empty() {
        return Err(tbe_core::Error::DegenerateEnsemble.into());
    }
    let workers = Workers::new(cfg.threads)?;

    let samples = workers.residuals(&spec, n, k)?;
    let residual = unless_degenerate(ensemble::residual_report(&spec, n, k, &samples))?;
    let flips = workers.bitflips(&spec, n, k, prof.coordinate)?;
    let bitflip = unless_degenerate(ensemble::bitflip_report(&spec, n, k, prof.coordinate, &flips))?;

    let (agree, total) = workers.sign_agreement(&spec, n, k, 1.0)?;
    let sign_rate = SignRate {
        rate: agree as f64 / total.max(1) as f64,
        strong_margin: ensemble::expected_strong_margin(&spec, n, k)?,
        pairs: total,
    };

    let mut sweep = Vec::new();
    if ensemble::scale_for_margin(&spec, n, k, 1.0).is_ok() {
        for &m in &prof.margins {
            let scale = ensemble::scale_for_margin(&spec, n, k, m)?;
            let (a, t) = workers.sign_agreement(&spec, n, k, scale)?;
            sweep.push(SignRate {
                rate: a as f64 / t.max(1) as f64,
                strong_margin: Some(m),
                pairs: t,
            });
        }
    }
    let trend = (!sweep.is_empty()).then(|| ensemble::trend_holds(&sweep));

    let passed = residual.as_ref().is_none_or(|r| r.passed())
        && bitflip.as_ref().is_none_or(|b| b.passed())
        && trend != Some(false);
    Ok(EnsembleJson {
        num_qubits: n,
        k_max: k,
        family: format!("{:?}", prof.family).to_lowercase(),
        fourth_moment: prof.family.fourth_moment(),
        trials: cfg.trials,
        seed: cfg.seed,
        residual: residual.as_ref().map(ResidualJson::from),
        bitflip: bitflip.as_ref().map(BitflipJson::from),
        sign_rate: Some(SignRateJson::from(&sign_rate)),
        sweep: sweep.iter().map(SignRateJson::from).collect(),
        sweep_trend_holds: trend,
        passed,
    })
}

/// Two variables of cardinality `cardinality` with random unary tables and
/// one pairwise table.
pub fn demo_cfn(cardinality: usize, seed: u64) -> CliResult<Cfn> {
    use rand::SeedableRng;
    if cardinality == 0 {
        return Err(CliError::Usage("cardinality must be at least 1".into()));
    }
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    Ok(tbe_core::random::cfn(&mut rng, &[cardinality, cardinality], 1.0))
}
