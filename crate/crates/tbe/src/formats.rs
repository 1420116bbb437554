//! On-disk formats: CFN-JSON input, HUBO/QUBO/certificate/solve JSON, the
//! spectrum CSV, and the ensemble profile.
//!
//! Reals go through serde_json, which prints the shortest string that reads
//! back to the same `f64`. Non-finite reals become `null`.

use serde::{Deserialize, Serialize};
use tbe_core::ensemble::{CouplingFamily, EnsembleSpec, VarianceProfile};
use tbe_core::landscape::{ClaimCheck, PreservationReport};
use tbe_core::poly::{mask_from_qubits, qubits_of};
use tbe_core::quadratize::QuboModel;
use tbe_core::solve::{Method, SolveResult};
use tbe_core::{Cfn, IsingPolynomial, SpectralProfile, TruncationCertificate, VariableSpec};

use crate::error::{CliError, CliResult};

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct CfnVariable {
    name: String,
    cardinality: usize,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct CfnUnary {
    var: usize,
    costs: Vec<f64>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct CfnPairwise {
    vars: [usize; 2],
    costs: Vec<f64>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct CfnFile {
    variables: Vec<CfnVariable>,
    #[serde(default)]
    unary: Vec<CfnUnary>,
    #[serde(default)]
    pairwise: Vec<CfnPairwise>,
}

pub fn parse_cfn(text: &str) -> CliResult<Cfn> {
    let file: CfnFile = serde_json::from_str(text).map_err(|e| CliError::Parse(format!("CFN-JSON: {e}")))?;
    let vars = file
        .variables
        .into_iter()
        .map(|v| VariableSpec {
            name: v.name,
            cardinality: v.cardinality,
        })
        .collect();
    let unary = file.unary.into_iter().map(|u| (u.var, u.costs)).collect();
    let pairwise = file.pairwise.into_iter().map(|p| (p.vars[0], p.vars[1], p.costs)).collect();
    Ok(Cfn::new(vars, unary, pairwise)?)
}

/// Every unary table is written, zero or not.
pub fn cfn_to_json(cfn: &Cfn) -> String {
    let file = CfnFile {
        variables: cfn
            .variables()
            .iter()
            .map(|v| CfnVariable {
                name: v.name.clone(),
                cardinality: v.cardinality,
            })
            .collect(),
        unary: (0..cfn.num_variables())
            .map(|var| CfnUnary {
                var,
                costs: cfn.unary(var).to_vec(),
            })
            .collect(),
        pairwise: cfn
            .pairwise()
            .iter()
            .map(|p| CfnPairwise {
                vars: [p.i, p.j],
                costs: p.costs.clone(),
            })
            .collect(),
    };
    to_json(&file)
}

/// Custom register patterns: one array per variable, one integer per
/// choice, bit `q` of the integer being register bit `q`.
pub fn parse_custom_assignment(text: &str) -> CliResult<Vec<Vec<u64>>> {
    serde_json::from_str(text).map_err(|e| CliError::Parse(format!("custom assignment: {e}")))
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct HuboTerm {
    qubits: Vec<usize>,
    coeff: f64,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct HuboFile {
    num_qubits: usize,
    terms: Vec<HuboTerm>,
}

/// Terms by degree, then lexicographic qubit list.
fn ordered_terms(poly: &IsingPolynomial) -> Vec<(Vec<usize>, f64)> {
    let mut terms: Vec<(Vec<usize>, f64)> = poly.terms().map(|(s, c)| (qubits_of(s).collect(), c)).collect();
    terms.sort_by(|a, b| a.0.len().cmp(&b.0.len()).then_with(|| a.0.cmp(&b.0)));
    terms
}

pub fn hubo_to_json(poly: &IsingPolynomial) -> String {
    let file = HuboFile {
        num_qubits: poly.num_qubits(),
        terms: ordered_terms(poly)
            .into_iter()
            .map(|(qubits, coeff)| HuboTerm { qubits, coeff })
            .collect(),
    };
    to_json(&file)
}

/// Repeated monomials are summed.
pub fn parse_hubo(text: &str) -> CliResult<IsingPolynomial> {
    let file: HuboFile = serde_json::from_str(text).map_err(|e| CliError::Parse(format!("HUBO-JSON: {e}")))?;
    let mut poly = IsingPolynomial::new(file.num_qubits)?;
    for t in file.terms {
        let mut q = t.qubits.clone();
        q.sort_unstable();
        if q.windows(2).any(|w| w[0] == w[1]) {
            return Err(CliError::Parse(format!("HUBO-JSON: repeated qubit in term {:?}", t.qubits)));
        }
        poly.add_term(mask_from_qubits(&q, file.num_qubits)?, t.coeff)?;
    }
    Ok(poly)
}

/// `coeff q1 q2 ...` per line; the constant has no qubits.
pub fn hubo_to_text(poly: &IsingPolynomial) -> String {
    let mut out = String::new();
    for (qubits, c) in ordered_terms(poly) {
        out.push_str(&format!("{c:e}"));
        for q in qubits {
            out.push_str(&format!(" {q}"));
        }
        out.push('\n');
    }
    out
}

/// Header `k,P_k,P_k_unary,P_k_pairwise`, one row per degree `0..=k_full`.
pub fn spectrum_to_csv(profile: &SpectralProfile) -> String {
    let mut out = String::from("k,P_k,P_k_unary,P_k_pairwise\n");
    for (k, p) in profile.per_degree.iter().enumerate() {
        out.push_str(&format!(
            "{k},{:e},{:e},{:e}\n",
            p,
            profile.unary_total(k),
            profile.pairwise_total(k)
        ));
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CertificateJson {
    pub k_max: usize,
    pub epsilon: f64,
    pub l2_residual: f64,
    #[serde(rename = "P_below")]
    pub p_below: f64,
    #[serde(rename = "P_above")]
    pub p_above: f64,
    pub omitted_nonzero: usize,
    pub omitted_combinatorial: u128,
    pub weak_ratio: Option<f64>,
    pub strong_margin: Option<f64>,
    pub common_sign_saturation: bool,
}

impl From<&TruncationCertificate> for CertificateJson {
    fn from(c: &TruncationCertificate) -> Self {
        CertificateJson {
            k_max: c.k_max,
            epsilon: c.epsilon,
            l2_residual: c.l2_residual,
            p_below: c.p_below,
            p_above: c.p_above,
            omitted_nonzero: c.omitted_nonzero,
            omitted_combinatorial: c.omitted_combinatorial,
            weak_ratio: c.weak_ratio,
            strong_margin: c.strong_margin,
            common_sign_saturation: c.common_sign_saturation,
        }
    }
}

pub fn certificate_to_json(c: &TruncationCertificate) -> String {
    to_json(&CertificateJson::from(c))
}

pub fn parse_certificate(text: &str) -> CliResult<CertificateJson> {
    serde_json::from_str(text).map_err(|e| CliError::Parse(format!("certificate: {e}")))
}

#[derive(Debug, Serialize)]
struct QuadTerm {
    i: usize,
    j: usize,
    coeff: f64,
}

#[derive(Debug, Serialize)]
struct AncillaJson {
    index: usize,
    parents: [usize; 2],
}

#[derive(Debug, Serialize)]
struct QuboJson {
    num_qubits: usize,
    num_ancillas: usize,
    linear: Vec<f64>,
    quadratic: Vec<QuadTerm>,
    ancillas: Vec<AncillaJson>,
    penalty: f64,
    constant: f64,
}

/// `num_qubits` counts the original qubits; `linear` covers originals then
/// ancillas.
pub fn qubo_to_json(q: &QuboModel) -> String {
    to_json(&QuboJson {
        num_qubits: q.num_original(),
        num_ancillas: q.num_ancillas(),
        linear: q.linear().to_vec(),
        quadratic: q.quadratic().map(|((i, j), coeff)| QuadTerm { i, j, coeff }).collect(),
        ancillas: q
            .ancillas()
            .iter()
            .map(|a| AncillaJson {
                index: a.index,
                parents: [a.parents.0, a.parents.1],
            })
            .collect(),
        penalty: q.penalty_weight(),
        constant: q.constant(),
    })
}

#[derive(Debug, Serialize)]
#[serde(tag = "name", rename_all = "snake_case")]
enum MethodJson {
    Exhaustive,
    Anneal {
        restarts: usize,
        proposals: Option<usize>,
        cooling: f64,
        initial_temperature: Option<f64>,
    },
}

impl From<&Method> for MethodJson {
    fn from(m: &Method) -> Self {
        match m {
            Method::Exhaustive => MethodJson::Exhaustive,
            Method::Anneal(p) => MethodJson::Anneal {
                restarts: p.restarts,
                proposals: p.proposals,
                cooling: p.cooling,
                initial_temperature: p.initial_temperature,
            },
        }
    }
}

#[derive(Debug, Serialize)]
pub struct SolveJson {
    best_spin: String,
    best_truncated_value: f64,
    decoded_assignment: Option<Vec<usize>>,
    valid_registers: Option<Vec<bool>>,
    cfn_value: Option<f64>,
    refined_assignment: Option<Vec<usize>>,
    refined_cfn_value: Option<f64>,
    descent_steps: Option<usize>,
    method: MethodJson,
    rng_seed: u64,
}

impl From<&SolveResult> for SolveJson {
    fn from(r: &SolveResult) -> Self {
        SolveJson {
            best_spin: r.best_spin.to_string(),
            best_truncated_value: r.best_truncated_value,
            decoded_assignment: r.decoded.as_ref().map(|d| d.assignment.clone()),
            valid_registers: r.decoded.as_ref().map(|d| d.valid.clone()),
            cfn_value: r.cfn_value,
            refined_assignment: r.refined.as_ref().map(|x| x.assignment.clone()),
            refined_cfn_value: r.refined.as_ref().map(|x| x.cfn_value),
            descent_steps: r.refined.as_ref().map(|x| x.descent_steps),
            method: MethodJson::from(&r.method),
            rng_seed: r.seed,
        }
    }
}

pub fn solve_to_json(r: &SolveResult) -> String {
    to_json(&SolveJson::from(r))
}

#[derive(Debug, Serialize)]
pub struct ClaimJson {
    claim: &'static str,
    precondition_held: bool,
    asserted: bool,
    passed: bool,
    margin: f64,
    details: String,
}

impl ClaimJson {
    /// False only when the claim was asserted and failed.
    pub fn ok(&self) -> bool {
        !self.asserted || self.passed
    }

    pub fn summary(&self) -> String {
        format!("{} (margin {:e}): {}", self.claim, self.margin, self.details)
    }
}

impl From<&ClaimCheck> for ClaimJson {
    fn from(c: &ClaimCheck) -> Self {
        ClaimJson {
            claim: c.claim,
            precondition_held: c.precondition_held,
            asserted: c.asserted,
            passed: c.passed,
            margin: c.margin,
            details: c.details.clone(),
        }
    }
}

#[derive(Debug, Serialize)]
pub struct LandscapeJson {
    global_min_value: f64,
    global_argmin_set: Vec<String>,
    energy_gap: Option<f64>,
    /// `(z*, delta_f(z*))` per minimizer.
    basin_barrier_at: Vec<(String, f64)>,
    gap_condition_holds: bool,
    barrier_condition_holds: bool,
    truncated_min_value: f64,
    truncated_argmin_set: Vec<String>,
}

#[derive(Debug, Serialize)]
pub struct VerificationJson {
    pub num_qubits: usize,
    pub certificate: CertificateJson,
    pub landscape: LandscapeJson,
    pub checks: Vec<ClaimJson>,
    /// Fraction of sampled starts whose descents on both functions agree.
    pub basin_agreement: Option<f64>,
    pub all_passed: bool,
}

pub fn verification_json(report: &PreservationReport, basin_agreement: Option<f64>) -> VerificationJson {
    let n = report.full.num_qubits();
    let spin = |d: u64| tbe_core::Spins::from_down_mask(n, d).expect("mask within n").to_string();
    VerificationJson {
        num_qubits: n,
        certificate: CertificateJson::from(&report.certificate),
        landscape: LandscapeJson {
            global_min_value: report.full.min_value(),
            global_argmin_set: report.full.argmin().iter().map(|&d| spin(d)).collect(),
            energy_gap: report.full.energy_gap(),
            basin_barrier_at: report.barriers.iter().map(|&(d, b)| (spin(d), b)).collect(),
            gap_condition_holds: report.gap_condition_holds,
            barrier_condition_holds: report.barrier_condition_holds,
            truncated_min_value: report.truncated.min_value(),
            truncated_argmin_set: report.truncated.argmin().iter().map(|&d| spin(d)).collect(),
        },
        checks: report.checks.iter().map(ClaimJson::from).collect(),
        basin_agreement,
        all_passed: report.all_ok(),
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ModeJson {
    qubits: Vec<usize>,
    variance: f64,
}

#[derive(Debug, Deserialize)]
#[serde(rename_all = "snake_case")]
enum FamilyJson {
    Gaussian,
    Rademacher,
    Uniform,
}

/// Ensemble profile file.
///
/// ```json
/// {"num_qubits": 16, "k_max": 2, "family": "gaussian",
///  "by_degree": [0, 1, 1, 0.01]}
/// ```
///
/// or `"modes": [{"qubits": [0, 3, 5], "variance": 1.0}, ...]` in place of
/// `by_degree`.
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ProfileFile {
    num_qubits: usize,
    k_max: usize,
    #[serde(default = "default_family")]
    family: FamilyJson,
    by_degree: Option<Vec<f64>>,
    modes: Option<Vec<ModeJson>>,
    coordinate: Option<usize>,
    margins: Option<Vec<f64>>,
}

fn default_family() -> FamilyJson {
    FamilyJson::Gaussian
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleProfile {
    pub num_qubits: usize,
    pub k_max: usize,
    pub family: CouplingFamily,
    pub profile: VarianceProfile,
    pub coordinate: usize,
    pub margins: Vec<f64>,
}

impl EnsembleProfile {
    pub fn spec(&self, trials: usize, seed: u64) -> EnsembleSpec {
        EnsembleSpec {
            profile: self.profile.clone(),
            family: self.family,
            trials,
            seed,
        }
    }
}

pub fn parse_profile(text: &str) -> CliResult<EnsembleProfile> {
    let f: ProfileFile = serde_json::from_str(text).map_err(|e| CliError::Parse(format!("ensemble profile: {e}")))?;
    let profile = match (f.by_degree, f.modes) {
        (Some(d), None) => VarianceProfile::ByDegree(d),
        (None, Some(m)) => VarianceProfile::Explicit(
            m.into_iter()
                .map(|mode| Ok((mask_from_qubits(&mode.qubits, f.num_qubits)?, mode.variance)))
                .collect::<CliResult<_>>()?,
        ),
        _ => {
            return Err(CliError::Parse(
                "ensemble profile: give exactly one of `by_degree` and `modes`".into(),
            ))
        }
    };
    Ok(EnsembleProfile {
        num_qubits: f.num_qubits,
        k_max: f.k_max,
        family: match f.family {
            FamilyJson::Gaussian => CouplingFamily::Gaussian,
            FamilyJson::Rademacher => CouplingFamily::Rademacher,
            FamilyJson::Uniform => CouplingFamily::Uniform,
        },
        profile,
        coordinate: f.coordinate.unwrap_or(0),
        margins: f.margins.unwrap_or_else(|| vec![0.001, 0.1, 10.0]),
    })
}

/// Pretty JSON with a trailing newline.
pub fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("plain data serializes");
    s.push('\n');
    s
}


#[cfg(test)]
mod roundtrip {
    use super::*;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    proptest! {
        #[test]
        fn hubo_json_roundtrips(n in 1usize..20, terms in 0usize..30, seed in any::<u64>()) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let poly = tbe_core::random::polynomial(&mut rng, n, n.min(6), terms, 3.0);
            prop_assert_eq!(parse_hubo(&hubo_to_json(&poly)).unwrap(), poly);
        }

        #[test]
        fn cfn_json_roundtrips(cards in proptest::collection::vec(1usize..7, 1..4), seed in any::<u64>()) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let cfn = tbe_core::random::cfn(&mut rng, &cards, 2.0);
            prop_assert_eq!(parse_cfn(&cfn_to_json(&cfn)).unwrap(), cfn);
        }
    }
}
