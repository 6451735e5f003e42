//! Autoregressive sampling of measurement outcomes from approximate
//! conditional marginals, with static and adaptive schedules.
//!
//! The induced distribution is exactly the product of the per-step clamped
//! marginals, so the reduction bound `‖p′ − p‖₁ ≤ 2εN` applies with `ε` the
//! largest per-step tail.
//!
//! Randomness contract: sample `index` under `base_seed` draws from
//! `ChaCha12Rng::seed_from_u64(base_seed)` with `set_stream(index)` — a
//! counter-based stream cipher, so streams are independent and samples are
//! reproducible bit-for-bit regardless of execution order or thread count.
//! Each measurement step consumes exactly one uniform `f64` from its stream.

use std::collections::BTreeMap;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::expansion::{BetaPolicy, ClusterExpansion, ExpansionError, LocalOperator};
use crate::pauli::{ProjectorError, ProjectorProduct, AXIS_NORM_TOL};

/// Measurement basis for one qubit: a named axis or an explicit unit vector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "BasisWire", into = "BasisWire")]
pub enum Basis {
    Z,
    X,
    Y,
    Axis([f64; 3]),
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum BasisWire {
    Name(String),
    Axis([f64; 3]),
}

impl TryFrom<BasisWire> for Basis {
    type Error = String;
    fn try_from(wire: BasisWire) -> Result<Self, String> {
        match wire {
            BasisWire::Name(s) => match s.as_str() {
                "Z" | "z" => Ok(Basis::Z),
                "X" | "x" => Ok(Basis::X),
                "Y" | "y" => Ok(Basis::Y),
                other => Err(format!("unknown basis name \"{other}\"")),
            },
            BasisWire::Axis(v) => {
                let norm = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
                if (norm - 1.0).abs() > AXIS_NORM_TOL {
                    return Err(format!("basis axis {v:?} has norm {norm}, expected 1"));
                }
                Ok(Basis::Axis(v))
            }
        }
    }
}

impl From<Basis> for BasisWire {
    fn from(b: Basis) -> BasisWire {
        match b {
            Basis::Z => BasisWire::Name("Z".into()),
            Basis::X => BasisWire::Name("X".into()),
            Basis::Y => BasisWire::Name("Y".into()),
            Basis::Axis(v) => BasisWire::Axis(v),
        }
    }
}

impl Basis {
    /// The outcome-0 axis.
    pub fn axis(&self) -> [f64; 3] {
        match self {
            Basis::X => [1.0, 0.0, 0.0],
            Basis::Y => [0.0, 1.0, 0.0],
            Basis::Z => [0.0, 0.0, 1.0],
            Basis::Axis(v) => *v,
        }
    }
}

/// One measurement step: which qubit, in which basis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Rule {
    pub qubit: u32,
    pub basis: Basis,
}

/// Fallback for adaptive schedules: measure the lowest-index unmeasured
/// qubit in the given basis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DefaultRule {
    pub basis: Basis,
}

/// A measurement schedule.
///
/// `Static` lists all qubits in order. `Adaptive` is a decision table from
/// outcome prefixes (bit strings) to the next step, with an optional default
/// rule for prefixes not in the table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Schedule {
    Static(Vec<Rule>),
    Adaptive {
        rules: BTreeMap<String, Rule>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        default: Option<DefaultRule>,
    },
}

#[derive(Debug, Error)]
pub enum SamplerError {
    #[error(transparent)]
    Expansion(#[from] ExpansionError),
    #[error(transparent)]
    Projector(#[from] ProjectorError),
    #[error("failed to read schedule file: {0}")]
    Io(#[from] std::io::Error),
    #[error("malformed schedule file: {0}")]
    Json(#[from] serde_json::Error),
    #[error("invalid schedule: {0}")]
    BadSchedule(String),
    #[error("schedule exhausted at prefix \"{prefix}\": no rule and no default")]
    ScheduleExhausted { prefix: String },
    #[error("schedule measures qubit {qubit} twice on branch \"{prefix}\"")]
    QubitRemeasured { qubit: u32, prefix: String },
    #[error("explicit distribution needs at most {max} qubits, model has {n}")]
    TooManyQubits { n: u32, max: u32 },
    #[error(
        "observable acts on qubit {qubit} in a basis it is not diagonal in; \
         use the expansion's observable estimator instead"
    )]
    BasisIncompatible { qubit: u32 },
    #[error("no samples supplied")]
    NoSamples,
}

impl Schedule {
    /// All qubits in index order, Z basis.
    pub fn static_z(num_qubits: u32) -> Schedule {
        Schedule::Static(
            (0..num_qubits)
                .map(|qubit| Rule {
                    qubit,
                    basis: Basis::Z,
                })
                .collect(),
        )
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Schedule, SamplerError> {
        let text = std::fs::read_to_string(path)?;
        Schedule::load_str(&text)
    }

    pub fn load_str(text: &str) -> Result<Schedule, SamplerError> {
        Ok(serde_json::from_str(text)?)
    }

    /// Structural validation against a qubit count. Static schedules must
    /// cover every qubit exactly once; adaptive completeness is checked at
    /// run time branch by branch.
    pub fn validate(&self, num_qubits: u32) -> Result<(), SamplerError> {
        match self {
            Schedule::Static(rules) => {
                if rules.len() != num_qubits as usize {
                    return Err(SamplerError::BadSchedule(format!(
                        "static schedule lists {} steps for {} qubits",
                        rules.len(),
                        num_qubits
                    )));
                }
                let mut seen = vec![false; num_qubits as usize];
                for rule in rules {
                    if rule.qubit >= num_qubits {
                        return Err(SamplerError::BadSchedule(format!(
                            "qubit {} out of range",
                            rule.qubit
                        )));
                    }
                    if std::mem::replace(&mut seen[rule.qubit as usize], true) {
                        return Err(SamplerError::BadSchedule(format!(
                            "qubit {} listed twice",
                            rule.qubit
                        )));
                    }
                }
                Ok(())
            }
            Schedule::Adaptive { rules, .. } => {
                for (prefix, rule) in rules {
                    if !prefix.chars().all(|c| c == '0' || c == '1') {
                        return Err(SamplerError::BadSchedule(format!(
                            "prefix \"{prefix}\" is not a bit string"
                        )));
                    }
                    if prefix.len() >= num_qubits as usize {
                        return Err(SamplerError::BadSchedule(format!(
                            "prefix \"{prefix}\" is not shorter than the qubit count"
                        )));
                    }
                    if rule.qubit >= num_qubits {
                        return Err(SamplerError::BadSchedule(format!(
                            "qubit {} out of range",
                            rule.qubit
                        )));
                    }
                }
                Ok(())
            }
        }
    }

    /// The next step on the branch with outcome prefix `prefix`.
    pub fn next(&self, prefix: &str, measured: &[bool]) -> Result<Rule, SamplerError> {
        let rule = match self {
            Schedule::Static(rules) => rules.get(prefix.len()).cloned().ok_or_else(|| {
                SamplerError::ScheduleExhausted {
                    prefix: prefix.to_string(),
                }
            })?,
            Schedule::Adaptive { rules, default } => match rules.get(prefix) {
                Some(rule) => rule.clone(),
                None => {
                    let default = default.as_ref().ok_or_else(|| {
                        SamplerError::ScheduleExhausted {
                            prefix: prefix.to_string(),
                        }
                    })?;
                    let qubit = measured.iter().position(|&m| !m).ok_or_else(|| {
                        SamplerError::ScheduleExhausted {
                            prefix: prefix.to_string(),
                        }
                    })? as u32;
                    Rule {
                        qubit,
                        basis: default.basis.clone(),
                    }
                }
            },
        };
        if measured
            .get(rule.qubit as usize)
            .copied()
            .unwrap_or(true)
        {
            return Err(SamplerError::QubitRemeasured {
                qubit: rule.qubit,
                prefix: prefix.to_string(),
            });
        }
        Ok(rule)
    }
}

/// One recorded measurement step.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StepRecord {
    pub qubit: u32,
    pub basis: Basis,
    /// Clamped marginal of outcome 0 at this step.
    pub p0: f64,
    /// Per-step tail bound (infinite when the guarantee is void).
    pub tail: f64,
}

/// One sampled outcome string with its full per-step audit trail.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SampleRecord {
    /// Outcomes in measurement order.
    pub bits: String,
    /// Base seed of the run.
    pub seed: u64,
    /// Sample index (stream number) within the run.
    pub index: u64,
    /// Truncation order used for every marginal.
    pub order: usize,
    pub steps: Vec<StepRecord>,
}

/// The per-sample random stream: ChaCha12 keyed by the base seed, stream
/// number = sample index.
pub fn stream_rng(base_seed: u64, index: u64) -> ChaCha12Rng {
    let mut rng = ChaCha12Rng::seed_from_u64(base_seed);
    rng.set_stream(index);
    rng
}

/// Draw one outcome string: walk the schedule, compute each conditional
/// marginal by truncated expansion, draw the bit, and extend the projector
/// product with the outcome-signed axis.
pub fn sample_one(
    exp: &ClusterExpansion,
    beta: f64,
    schedule: &Schedule,
    order: usize,
    policy: BetaPolicy,
    base_seed: u64,
    index: u64,
) -> Result<SampleRecord, SamplerError> {
    let n = exp.spec().num_qubits();
    schedule.validate(n)?;
    let mut rng = stream_rng(base_seed, index);
    let mut e = ProjectorProduct::empty();
    let mut measured = vec![false; n as usize];
    let mut bits = String::with_capacity(n as usize);
    let mut steps = Vec::with_capacity(n as usize);
    for _ in 0..n {
        let rule = schedule.next(&bits, &measured)?;
        let axis = rule.basis.axis();
        let est = exp.marginal(&e, rule.qubit, axis, beta, order, policy)?;
        let u: f64 = rng.random();
        let bit = if u < est.p_prime { 0u8 } else { 1u8 };
        bits.push(if bit == 0 { '0' } else { '1' });
        measured[rule.qubit as usize] = true;
        let signed = if bit == 0 {
            axis
        } else {
            [-axis[0], -axis[1], -axis[2]]
        };
        e.insert(rule.qubit, signed)?;
        steps.push(StepRecord {
            qubit: rule.qubit,
            basis: rule.basis,
            p0: est.p_prime,
            tail: est.tail,
        });
    }
    Ok(SampleRecord {
        bits,
        seed: base_seed,
        index,
        order,
        steps,
    })
}

/// Draw `count` samples with per-sample derived streams. `jobs > 1` samples
/// concurrently; output order and content are independent of `jobs`.
pub fn sample_many(
    exp: &ClusterExpansion,
    beta: f64,
    schedule: &Schedule,
    order: usize,
    policy: BetaPolicy,
    base_seed: u64,
    count: u64,
    jobs: usize,
) -> Result<Vec<SampleRecord>, SamplerError> {
    if jobs <= 1 {
        return (0..count)
            .map(|i| sample_one(exp, beta, schedule, order, policy, base_seed, i))
            .collect();
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .expect("thread pool");
    pool.install(|| {
        use rayon::prelude::*;
        (0..count)
            .into_par_iter()
            .map(|i| sample_one(exp, beta, schedule, order, policy, base_seed, i))
            .collect()
    })
}

/// One branch of the explicit distribution.
#[derive(Debug, Clone, PartialEq)]
pub struct BranchProb {
    /// Outcomes in measurement order.
    pub bits: String,
    /// Product of the per-step marginals along this branch.
    pub prob: f64,
    /// The per-step marginals themselves.
    pub step_p0: Vec<f64>,
    /// Largest per-step tail seen along this branch.
    pub max_tail: f64,
}

/// Maximum qubit count for explicit 2^N distribution walks.
pub const MAX_EXPLICIT_QUBITS: u32 = 16;

/// The full sampler-induced distribution `p′(x) = Π p′(x_{k+1}|x_k)` over all
/// `2^N` outcome strings, in lexicographic order.
pub fn explicit_distribution(
    exp: &ClusterExpansion,
    beta: f64,
    schedule: &Schedule,
    order: usize,
    policy: BetaPolicy,
) -> Result<Vec<BranchProb>, SamplerError> {
    let n = exp.spec().num_qubits();
    if n > MAX_EXPLICIT_QUBITS {
        return Err(SamplerError::TooManyQubits {
            n,
            max: MAX_EXPLICIT_QUBITS,
        });
    }
    schedule.validate(n)?;
    let mut out = Vec::with_capacity(1 << n);
    let mut measured = vec![false; n as usize];
    let mut bits = String::new();
    let mut step_p0 = Vec::new();
    walk_branches(
        exp,
        beta,
        schedule,
        order,
        policy,
        &mut ProjectorProduct::empty(),
        &mut measured,
        &mut bits,
        &mut step_p0,
        1.0,
        0.0,
        &mut out,
    )?;
    Ok(out)
}

#[allow(clippy::too_many_arguments)]
fn walk_branches(
    exp: &ClusterExpansion,
    beta: f64,
    schedule: &Schedule,
    order: usize,
    policy: BetaPolicy,
    e: &mut ProjectorProduct,
    measured: &mut [bool],
    bits: &mut String,
    step_p0: &mut Vec<f64>,
    prob: f64,
    max_tail: f64,
    out: &mut Vec<BranchProb>,
) -> Result<(), SamplerError> {
    if bits.len() == measured.len() {
        out.push(BranchProb {
            bits: bits.clone(),
            prob,
            step_p0: step_p0.clone(),
            max_tail,
        });
        return Ok(());
    }
    let rule = schedule.next(bits, measured)?;
    let axis = rule.basis.axis();
    let est = exp.marginal(e, rule.qubit, axis, beta, order, policy)?;
    let tail = max_tail.max(est.tail);
    measured[rule.qubit as usize] = true;
    for bit in 0..2u8 {
        let (p_step, signed) = if bit == 0 {
            (est.p_prime, axis)
        } else {
            (1.0 - est.p_prime, [-axis[0], -axis[1], -axis[2]])
        };
        bits.push(if bit == 0 { '0' } else { '1' });
        step_p0.push(p_step);
        let mut next_e = e.clone();
        next_e.insert(rule.qubit, signed)?;
        walk_branches(
            exp,
            beta,
            schedule,
            order,
            policy,
            &mut next_e,
            measured,
            bits,
            step_p0,
            prob * p_step,
            tail,
            out,
        )?;
        step_p0.pop();
        bits.pop();
    }
    measured[rule.qubit as usize] = false;
    Ok(())
}

/// Collapse branches into a probability map keyed by outcome string.
pub fn distribution_map(branches: &[BranchProb]) -> BTreeMap<String, f64> {
    branches
        .iter()
        .map(|b| (b.bits.clone(), b.prob))
        .collect()
}

/// A Monte-Carlo expectation estimate.
#[derive(Debug, Clone, PartialEq)]
pub struct ExpectationEstimate {
    pub mean: f64,
    pub std_err: f64,
    pub count: usize,
}

/// Empirical mean of `⟨x|A|x⟩` over sample records.
///
/// Requires `A` to be diagonal in the product basis actually measured on its
/// support for every sample: each Pauli component's letter axis must align
/// (up to sign) with the measured axis on that qubit. Non-diagonal
/// observables are served by the expansion's estimator instead.
pub fn estimate_expectation(
    samples: &[SampleRecord],
    observable: &LocalOperator,
) -> Result<ExpectationEstimate, SamplerError> {
    if samples.is_empty() {
        return Err(SamplerError::NoSamples);
    }
    let mut values = Vec::with_capacity(samples.len());
    for sample in samples {
        let mut value = observable.identity_weight();
        for (weight, pauli) in observable.components() {
            let mut factor = *weight;
            for &(qubit, letter) in pauli.letters() {
                let (step_idx, step) = sample
                    .steps
                    .iter()
                    .enumerate()
                    .find(|(_, s)| s.qubit == qubit)
                    .ok_or(SamplerError::BasisIncompatible { qubit })?;
                let axis = step.basis.axis();
                let component = axis[letter.axis_index()];
                if (component.abs() - 1.0).abs() > 1e-9 {
                    return Err(SamplerError::BasisIncompatible { qubit });
                }
                let sign = if sample.bits.as_bytes()[step_idx] == b'0' {
                    1.0
                } else {
                    -1.0
                };
                factor *= sign * component;
            }
            value += factor;
        }
        values.push(value);
    }
    let count = values.len();
    let mean = values.iter().sum::<f64>() / count as f64;
    let var = values
        .iter()
        .map(|v| (v - mean) * (v - mean))
        .sum::<f64>()
        / count as f64;
    let std_err = if count > 1 {
        (var / (count as f64 - 1.0)).sqrt()
    } else {
        f64::INFINITY
    };
    Ok(ExpectationEstimate {
        mean,
        std_err,
        count,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expansion::Z_AXIS;
    use crate::model::{DegreeMode, HamiltonianSpec};
    use crate::pauli::parse_pauli;

    fn engine(n: u32, terms: &[(&str, f64)]) -> ClusterExpansion {
        let spec = HamiltonianSpec::from_terms(
            n,
            terms.iter().map(|&(p, c)| (c, parse_pauli(p).unwrap())),
            None,
            true,
        )
        .unwrap()
        .spec;
        ClusterExpansion::new(spec, DegreeMode::Strict)
    }

    #[test]
    fn schedule_parsing_roundtrip() {
        let text = r#"{"static": [{"qubit": 0, "basis": "Z"}, {"qubit": 1, "basis": [1.0, 0.0, 0.0]}]}"#;
        let schedule = Schedule::load_str(text).unwrap();
        match &schedule {
            Schedule::Static(rules) => {
                assert_eq!(rules[0].basis, Basis::Z);
                assert_eq!(rules[1].basis, Basis::Axis([1.0, 0.0, 0.0]));
            }
            _ => panic!("expected static"),
        }
        let json = serde_json::to_string(&schedule).unwrap();
        assert_eq!(Schedule::load_str(&json).unwrap(), schedule);

        let adaptive = r#"{"adaptive": {"rules": {"": {"qubit": 1, "basis": "Z"}},
                           "default": {"basis": "X"}}}"#;
        let schedule = Schedule::load_str(adaptive).unwrap();
        schedule.validate(2).unwrap();
        // after measuring qubit 1 via the "" rule, the default picks qubit 0 in X
        let rule = schedule.next("0", &[false, true]).unwrap();
        assert_eq!(rule.qubit, 0);
        assert_eq!(rule.basis, Basis::X);

        let bad_axis = r#"{"static": [{"qubit": 0, "basis": [1.0, 1.0, 0.0]}]}"#;
        assert!(Schedule::load_str(bad_axis).is_err());
    }

    #[test]
    fn schedule_validation() {
        assert!(Schedule::static_z(3).validate(3).is_ok());
        let short = Schedule::Static(vec![Rule {
            qubit: 0,
            basis: Basis::Z,
        }]);
        assert!(short.validate(2).is_err());
        let dup = Schedule::Static(vec![
            Rule {
                qubit: 0,
                basis: Basis::Z,
            },
            Rule {
                qubit: 0,
                basis: Basis::X,
            },
        ]);
        assert!(dup.validate(2).is_err());
    }

    #[test]
    fn free_model_is_fair_coin() {
        // H = 0: every bit a fair coin; 10^4 samples stay within 3 sigma
        let exp = engine(3, &[]);
        let schedule = Schedule::static_z(3);
        let samples = sample_many(
            &exp,
            0.01,
            &schedule,
            2,
            BetaPolicy::Warn,
            7,
            10_000,
            1,
        )
        .unwrap();
        let mut ones = [0f64; 3];
        for s in &samples {
            for (i, b) in s.bits.bytes().enumerate() {
                if b == b'1' {
                    ones[i] += 1.0;
                }
            }
        }
        let sigma = 0.5 * (10_000f64).sqrt();
        for count in ones {
            assert!((count - 5_000.0).abs() < 3.0 * sigma, "count = {count}");
        }
        for s in samples.iter().take(10) {
            for step in &s.steps {
                assert_eq!(step.p0, 0.5);
            }
        }
    }

    #[test]
    fn single_site_bias_matches_analytic() {
        // one qubit, H = λZ: P(0) = (1 - tanh βλ)/2
        let lambda = 0.8;
        let beta = 0.02;
        let exp = engine(1, &[("Z0", lambda)]);
        let schedule = Schedule::static_z(1);
        let n = 10_000u64;
        let samples =
            sample_many(&exp, beta, &schedule, 5, BetaPolicy::Warn, 11, n, 1).unwrap();
        let p0 = 0.5 * (1.0 - (beta * lambda).tanh());
        let zeros = samples.iter().filter(|s| s.bits == "0").count() as f64;
        let sigma = (n as f64 * p0 * (1.0 - p0)).sqrt();
        assert!((zeros - n as f64 * p0).abs() < 3.0 * sigma);
    }

    #[test]
    fn fixed_seed_reproduces_records() {
        let exp = engine(4, &[("Z0 Z1", 0.8), ("Z1 Z2", -0.5), ("X2", 0.4), ("Z2 Z3", 0.6)]);
        let schedule = Schedule::static_z(4);
        let a = sample_one(&exp, 1e-3, &schedule, 3, BetaPolicy::Warn, 99, 5).unwrap();
        let b = sample_one(&exp, 1e-3, &schedule, 3, BetaPolicy::Warn, 99, 5).unwrap();
        assert_eq!(a, b);
        let c = sample_one(&exp, 1e-3, &schedule, 3, BetaPolicy::Warn, 99, 6).unwrap();
        assert_ne!(a.index, c.index);
    }

    #[test]
    fn sample_many_contracts() {
        let exp = engine(2, &[("Z0 Z1", 0.5)]);
        let schedule = Schedule::static_z(2);
        let empty =
            sample_many(&exp, 1e-3, &schedule, 2, BetaPolicy::Warn, 3, 0, 1).unwrap();
        assert!(empty.is_empty());
        let a = sample_many(&exp, 1e-3, &schedule, 2, BetaPolicy::Warn, 3, 20, 1).unwrap();
        let b = sample_many(&exp, 1e-3, &schedule, 2, BetaPolicy::Warn, 3, 20, 1).unwrap();
        assert_eq!(a, b);
        // concurrency does not change results
        let par = sample_many(&exp, 1e-3, &schedule, 2, BetaPolicy::Warn, 3, 20, 4).unwrap();
        assert_eq!(a, par);
        // disjoint index ranges concatenate to a single call
        let front: Vec<_> = (0..10)
            .map(|i| sample_one(&exp, 1e-3, &schedule, 2, BetaPolicy::Warn, 3, i).unwrap())
            .collect();
        assert_eq!(&a[..10], front.as_slice());
    }

    #[test]
    fn explicit_distribution_normalizes() {
        let exp = engine(3, &[("Z0 Z1", 0.7), ("Z1 Z2", -0.4), ("X1", 0.2)]);
        let schedule = Schedule::static_z(3);
        let branches =
            explicit_distribution(&exp, 1e-3, &schedule, 3, BetaPolicy::Warn).unwrap();
        assert_eq!(branches.len(), 8);
        let total: f64 = branches.iter().map(|b| b.prob).sum();
        assert!((total - 1.0).abs() < 1e-9);
        // free model: uniform
        let free = engine(3, &[]);
        let branches =
            explicit_distribution(&free, 1e-3, &schedule, 2, BetaPolicy::Warn).unwrap();
        for b in &branches {
            assert_eq!(b.prob, 0.125);
        }
        // product of recorded per-step marginals reproduces the branch
        // probability bitwise
        let branches =
            explicit_distribution(&exp, 1e-3, &schedule, 3, BetaPolicy::Warn).unwrap();
        for b in &branches {
            let mut prod = 1.0;
            for p in &b.step_p0 {
                prod *= p;
            }
            assert_eq!(prod.to_bits(), b.prob.to_bits());
        }
    }

    #[test]
    fn adaptive_constant_table_matches_static() {
        let exp = engine(3, &[("Z0 Z1", 0.8), ("Z1 Z2", -0.6)]);
        let static_schedule = Schedule::Static(vec![
            Rule { qubit: 2, basis: Basis::Z },
            Rule { qubit: 0, basis: Basis::X },
            Rule { qubit: 1, basis: Basis::Z },
        ]);
        // the equivalent full decision table
        let mut rules = BTreeMap::new();
        rules.insert("".into(), Rule { qubit: 2, basis: Basis::Z });
        for p in ["0", "1"] {
            rules.insert(p.into(), Rule { qubit: 0, basis: Basis::X });
        }
        for p in ["00", "01", "10", "11"] {
            rules.insert(p.into(), Rule { qubit: 1, basis: Basis::Z });
        }
        let adaptive = Schedule::Adaptive {
            rules,
            default: None,
        };
        for index in 0..20 {
            let a =
                sample_one(&exp, 2e-3, &static_schedule, 3, BetaPolicy::Warn, 5, index).unwrap();
            let b = sample_one(&exp, 2e-3, &adaptive, 3, BetaPolicy::Warn, 5, index).unwrap();
            assert_eq!(a, b);
        }
    }

    #[test]
    fn expectation_from_samples() {
        // A = Z0 on the free model: mean ~ 0
        let exp = engine(2, &[]);
        let schedule = Schedule::static_z(2);
        let samples =
            sample_many(&exp, 0.01, &schedule, 2, BetaPolicy::Warn, 1, 4000, 1).unwrap();
        let z0 = LocalOperator::from_terms([(1.0, parse_pauli("Z0").unwrap())]).unwrap();
        let est = estimate_expectation(&samples, &z0).unwrap();
        assert!(est.mean.abs() < 4.0 * est.std_err + 1e-9);

        // X0 under Z-basis samples: incompatible
        let x0 = LocalOperator::from_terms([(1.0, parse_pauli("X0").unwrap())]).unwrap();
        assert!(matches!(
            estimate_expectation(&samples, &x0),
            Err(SamplerError::BasisIncompatible { qubit: 0 })
        ));
    }

    #[test]
    fn expectation_zz_matches_thermal() {
        let lambda = 0.9;
        let exp = engine(2, &[("Z0 Z1", lambda)]);
        let schedule = Schedule::static_z(2);
        let beta = 2e-3;
        let samples =
            sample_many(&exp, beta, &schedule, 4, BetaPolicy::Warn, 17, 20_000, 1).unwrap();
        let zz = LocalOperator::from_terms([(1.0, parse_pauli("Z0 Z1").unwrap())]).unwrap();
        let est = estimate_expectation(&samples, &zz).unwrap();
        let exact = -(beta * lambda).tanh();
        assert!(
            (est.mean - exact).abs() < 4.0 * est.std_err + 1e-6,
            "mean {} exact {exact} stderr {}",
            est.mean,
            est.std_err
        );
    }

    #[test]
    fn exhaustion_and_remeasure_errors() {
        let exp = engine(2, &[("Z0 Z1", 0.5)]);
        let incomplete = Schedule::Adaptive {
            rules: BTreeMap::from([(String::new(), Rule { qubit: 0, basis: Basis::Z })]),
            default: None,
        };
        assert!(matches!(
            sample_one(&exp, 1e-3, &incomplete, 2, BetaPolicy::Warn, 0, 0),
            Err(SamplerError::ScheduleExhausted { .. })
        ));
        let remeasure = Schedule::Adaptive {
            rules: BTreeMap::from([
                (String::new(), Rule { qubit: 0, basis: Basis::Z }),
                ("0".into(), Rule { qubit: 0, basis: Basis::Z }),
                ("1".into(), Rule { qubit: 0, basis: Basis::Z }),
            ]),
            default: None,
        };
        assert!(matches!(
            sample_one(&exp, 1e-3, &remeasure, 2, BetaPolicy::Warn, 0, 0),
            Err(SamplerError::QubitRemeasured { qubit: 0, .. })
        ));
    }
}
