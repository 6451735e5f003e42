//! Hamiltonian specification, validation, and the derived constants that
//! gate the expansion's convergence guarantee.
//!
//! A model is a weighted sum of Pauli strings with `|coeff| ≤ 1` per term.
//! From it we derive the locality `k` (largest term support), the overlap
//! degree (the largest number of other terms any term's support intersects),
//! and the inverse-temperature threshold `beta_star` below which the
//! truncated-series guarantees hold.

use std::collections::{BTreeMap, HashSet, VecDeque};
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::pauli::{format_pauli, parse_pauli, Letter, PauliParseError, PauliString, Phase};

/// A single weighted term `coeff · pauli`.
#[derive(Debug, Clone, PartialEq)]
pub struct HamiltonianTerm {
    pub coeff: f64,
    pub pauli: PauliString,
}

/// A validated k-local qubit Hamiltonian.
///
/// Terms are merged (no two share a Pauli string), stored in a deterministic
/// canonical order, and every term's support lies in `0..num_qubits`.
#[derive(Debug, Clone, PartialEq)]
pub struct HamiltonianSpec {
    num_qubits: u32,
    terms: Vec<HamiltonianTerm>,
    adjacency: Option<Vec<(u32, u32)>>,
}

/// How the overlap degree is counted.
///
/// `Strict` honors the assumption that every single-site Pauli is available
/// as a term by virtually adjoining all `3N` of them (zero coefficient)
/// before counting; `Empirical` counts only the terms actually present.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DegreeMode {
    Strict,
    Empirical,
}

/// Constants derived deterministically from a spec.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DerivedConstants {
    /// Max term support size `k`.
    pub locality: usize,
    /// Overlap degree under the requested [`DegreeMode`].
    pub overlap_degree: usize,
    /// Convergence threshold `1 / (2 e² d (d+1))` with `d = max(overlap_degree, 1)`.
    pub beta_star: f64,
    /// Enumeration cost exponent `log(d · 2^{2k+1})`, `d = max(overlap_degree, 1)`.
    pub c_enum: f64,
}

/// Result of loading a model: the validated spec plus non-fatal warnings.
#[derive(Debug, Clone)]
pub struct LoadReport {
    pub spec: HamiltonianSpec,
    pub warnings: Vec<String>,
}

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("failed to read model file: {0}")]
    Io(#[from] std::io::Error),
    #[error("malformed model file: {0}")]
    Json(#[from] serde_json::Error),
    #[error("unknown key \"{0}\" in model file")]
    UnknownKey(String),
    #[error("term {index} (\"{pauli}\"): {source}")]
    BadPauli {
        index: usize,
        pauli: String,
        source: PauliParseError,
    },
    #[error("term {index} (\"{pauli}\") acts on qubit {qubit}, but num_qubits = {num_qubits}")]
    QubitOutOfRange {
        index: usize,
        pauli: String,
        qubit: u32,
        num_qubits: u32,
    },
    #[error("term {index} is the identity string; identity terms only shift the energy")]
    IdentityTerm { index: usize },
    #[error("term \"{pauli}\" has |coeff| = {coeff} > 1")]
    CoeffTooLarge { pauli: String, coeff: f64 },
    #[error("term \"{pauli}\" has non-finite coefficient")]
    NonFiniteCoeff { pauli: String },
    #[error("adjacency edge ({0}, {1}) is out of range")]
    BadEdge(u32, u32),
    #[error("num_qubits must be positive")]
    NoQubits,
}

#[derive(Deserialize)]
struct ModelFile {
    num_qubits: u32,
    terms: Vec<TermEntry>,
    #[serde(default)]
    adjacency: Option<Vec<(u32, u32)>>,
}

#[derive(Deserialize)]
struct TermEntry {
    pauli: String,
    coeff: f64,
}

impl HamiltonianSpec {
    /// Build and validate a spec from raw terms.
    ///
    /// Duplicate Pauli strings are merged by summing coefficients. In strict
    /// mode a merged `|coeff| > 1` is an error; otherwise it is reported as a
    /// warning in the [`LoadReport`].
    pub fn from_terms(
        num_qubits: u32,
        terms: impl IntoIterator<Item = (f64, PauliString)>,
        adjacency: Option<Vec<(u32, u32)>>,
        strict: bool,
    ) -> Result<LoadReport, ModelError> {
        if num_qubits == 0 {
            return Err(ModelError::NoQubits);
        }
        let mut merged: BTreeMap<Vec<(u32, Letter)>, f64> = BTreeMap::new();
        for (index, (coeff, pauli)) in terms.into_iter().enumerate() {
            if !coeff.is_finite() {
                return Err(ModelError::NonFiniteCoeff {
                    pauli: format_pauli(&pauli),
                });
            }
            if pauli.is_identity() {
                return Err(ModelError::IdentityTerm { index });
            }
            debug_assert_eq!(pauli.phase(), Phase::ONE);
            if let Some(q) = pauli.max_qubit() {
                if q >= num_qubits {
                    return Err(ModelError::QubitOutOfRange {
                        index,
                        pauli: format_pauli(&pauli),
                        qubit: q,
                        num_qubits,
                    });
                }
            }
            *merged.entry(pauli.letters().to_vec()).or_insert(0.0) += coeff;
        }
        let mut warnings = Vec::new();
        let mut out = Vec::with_capacity(merged.len());
        for (letters, coeff) in merged {
            let pauli = PauliString::from_letters(letters).expect("canonical letters");
            if coeff.abs() > 1.0 {
                if strict {
                    return Err(ModelError::CoeffTooLarge {
                        pauli: format_pauli(&pauli),
                        coeff,
                    });
                }
                warnings.push(format!(
                    "term \"{}\" has |coeff| = {} > 1; the convergence guarantee assumes bounded terms",
                    format_pauli(&pauli),
                    coeff
                ));
            }
            out.push(HamiltonianTerm { coeff, pauli });
        }
        if let Some(edges) = &adjacency {
            for &(a, b) in edges {
                if a >= num_qubits || b >= num_qubits {
                    return Err(ModelError::BadEdge(a, b));
                }
            }
        }
        let spec = HamiltonianSpec {
            num_qubits,
            terms: out,
            adjacency,
        };
        if spec.adjacency.is_some() {
            warnings.extend(spec.diameter_warnings());
        }
        Ok(LoadReport { spec, warnings })
    }

    /// Load a model from a JSON file.
    ///
    /// Schema: `{"num_qubits": int, "terms": [{"pauli": string, "coeff":
    /// number}, ...], "adjacency": [[int,int], ...]?}`. Strict mode rejects
    /// unknown keys and `|coeff| > 1`; otherwise both only warn.
    pub fn load(path: impl AsRef<Path>, strict: bool) -> Result<LoadReport, ModelError> {
        let text = std::fs::read_to_string(path)?;
        Self::load_str(&text, strict)
    }

    /// Load a model from JSON text. See [`HamiltonianSpec::load`].
    pub fn load_str(text: &str, strict: bool) -> Result<LoadReport, ModelError> {
        let value: serde_json::Value = serde_json::from_str(text)?;
        let mut key_warnings = Vec::new();
        if let Some(obj) = value.as_object() {
            for key in obj.keys() {
                if !matches!(key.as_str(), "num_qubits" | "terms" | "adjacency") {
                    if strict {
                        return Err(ModelError::UnknownKey(key.clone()));
                    }
                    key_warnings.push(format!("ignoring unknown key \"{key}\""));
                }
            }
        }
        let file: ModelFile = serde_json::from_value(value)?;
        let mut terms = Vec::with_capacity(file.terms.len());
        for (index, entry) in file.terms.into_iter().enumerate() {
            let pauli = parse_pauli(&entry.pauli).map_err(|source| ModelError::BadPauli {
                index,
                pauli: entry.pauli.clone(),
                source,
            })?;
            terms.push((entry.coeff, pauli));
        }
        let mut report = Self::from_terms(file.num_qubits, terms, file.adjacency, strict)?;
        report.warnings.splice(0..0, key_warnings);
        Ok(report)
    }

    /// Serialize back to the model-file JSON schema.
    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "num_qubits": self.num_qubits,
            "terms": self.terms.iter().map(|t| serde_json::json!({
                "pauli": format_pauli(&t.pauli),
                "coeff": t.coeff,
            })).collect::<Vec<_>>(),
            "adjacency": self.adjacency,
        })
    }

    pub fn num_qubits(&self) -> u32 {
        self.num_qubits
    }

    pub fn terms(&self) -> &[HamiltonianTerm] {
        &self.terms
    }

    pub fn term(&self, index: usize) -> &HamiltonianTerm {
        &self.terms[index]
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    /// Max term support size `k`.
    pub fn locality(&self) -> usize {
        self.terms.iter().map(|t| t.pauli.weight()).max().unwrap_or(0)
    }

    pub fn adjacency(&self) -> Option<&[(u32, u32)]> {
        self.adjacency.as_deref()
    }

    /// Warnings for terms whose support is geometrically spread out in the
    /// supplied qubit adjacency (support diameter exceeding `k − 1`).
    fn diameter_warnings(&self) -> Vec<String> {
        let Some(edges) = &self.adjacency else {
            return Vec::new();
        };
        let n = self.num_qubits as usize;
        let mut adj = vec![Vec::new(); n];
        for &(a, b) in edges {
            adj[a as usize].push(b as usize);
            adj[b as usize].push(a as usize);
        }
        let k = self.locality();
        let mut warnings = Vec::new();
        for term in &self.terms {
            let support: Vec<usize> = term.pauli.support().map(|q| q as usize).collect();
            if support.len() < 2 {
                continue;
            }
            let mut diameter = 0usize;
            let mut disconnected = false;
            for &start in &support {
                let mut dist = vec![usize::MAX; n];
                dist[start] = 0;
                let mut queue = VecDeque::from([start]);
                while let Some(u) = queue.pop_front() {
                    for &v in &adj[u] {
                        if dist[v] == usize::MAX {
                            dist[v] = dist[u] + 1;
                            queue.push_back(v);
                        }
                    }
                }
                for &other in &support {
                    if dist[other] == usize::MAX {
                        disconnected = true;
                    } else {
                        diameter = diameter.max(dist[other]);
                    }
                }
            }
            if disconnected || diameter > k.saturating_sub(1) {
                warnings.push(format!(
                    "term \"{}\" has support diameter {} in the supplied adjacency (locality k = {})",
                    format_pauli(&term.pauli),
                    if disconnected { "inf".to_string() } else { diameter.to_string() },
                    k
                ));
            }
        }
        warnings
    }
}

/// Term-overlap graph: vertices are term indices, edge iff supports intersect.
#[derive(Debug, Clone)]
pub struct OverlapGraph {
    adj: Vec<Vec<usize>>,
}

impl OverlapGraph {
    pub fn neighbors(&self, term: usize) -> &[usize] {
        &self.adj[term]
    }

    pub fn num_terms(&self) -> usize {
        self.adj.len()
    }
}

/// Build the term-overlap graph with deterministic (ascending) neighbor order.
pub fn term_overlap_graph(spec: &HamiltonianSpec) -> OverlapGraph {
    // terms touching each qubit, then pairwise union per term
    let mut by_qubit: Vec<Vec<usize>> = vec![Vec::new(); spec.num_qubits() as usize];
    for (i, term) in spec.terms().iter().enumerate() {
        for q in term.pauli.support() {
            by_qubit[q as usize].push(i);
        }
    }
    let mut adj: Vec<HashSet<usize>> = vec![HashSet::new(); spec.num_terms()];
    for bucket in &by_qubit {
        for &a in bucket {
            for &b in bucket {
                if a != b {
                    adj[a].insert(b);
                }
            }
        }
    }
    let adj = adj
        .into_iter()
        .map(|s| {
            let mut v: Vec<usize> = s.into_iter().collect();
            v.sort_unstable();
            v
        })
        .collect();
    OverlapGraph { adj }
}

/// The overlap degree: the max over terms `a` of the number of other terms
/// whose support intersects `support(a)`.
///
/// In [`DegreeMode::Strict`] the count runs over the model augmented with all
/// `3N` single-site Paulis (skipping any that coincide with a real term).
pub fn overlap_degree(spec: &HamiltonianSpec, mode: DegreeMode) -> usize {
    let mut supports: Vec<Vec<u32>> = spec
        .terms()
        .iter()
        .map(|t| t.pauli.support().collect())
        .collect();
    if mode == DegreeMode::Strict {
        let existing: HashSet<Vec<(u32, Letter)>> = spec
            .terms()
            .iter()
            .map(|t| t.pauli.letters().to_vec())
            .collect();
        for q in 0..spec.num_qubits() {
            for letter in Letter::ALL {
                if !existing.contains(&vec![(q, letter)]) {
                    supports.push(vec![q]);
                }
            }
        }
    }
    let num_qubits = spec.num_qubits() as usize;
    let mut by_qubit: Vec<Vec<usize>> = vec![Vec::new(); num_qubits];
    for (i, s) in supports.iter().enumerate() {
        for &q in s {
            by_qubit[q as usize].push(i);
        }
    }
    let mut best = 0usize;
    let mut seen = vec![usize::MAX; supports.len()];
    for (a, s) in supports.iter().enumerate() {
        let mut count = 0usize;
        for &q in s {
            for &b in &by_qubit[q as usize] {
                if b != a && seen[b] != a {
                    seen[b] = a;
                    count += 1;
                }
            }
        }
        best = best.max(count);
    }
    best
}

/// The convergence threshold `beta_star = [2 e² d (d+1)]^{-1}`.
///
/// An overlap degree of zero (a single isolated term) is guarded with
/// `d = 1`, keeping the gate finite for trivially convergent models.
pub fn beta_star(overlap_degree: usize) -> f64 {
    let d = overlap_degree.max(1) as f64;
    1.0 / (2.0 * std::f64::consts::E.powi(2) * d * (d + 1.0))
}

/// Compute all derived constants for a spec under the given degree mode.
pub fn derived_constants(spec: &HamiltonianSpec, mode: DegreeMode) -> DerivedConstants {
    let locality = spec.locality();
    let dd = overlap_degree(spec, mode);
    let d_eff = dd.max(1) as f64;
    DerivedConstants {
        locality,
        overlap_degree: dd,
        beta_star: beta_star(dd),
        c_enum: (d_eff * 2f64.powi(2 * locality as i32 + 1)).ln(),
    }
}
