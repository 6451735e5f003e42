//! The analytical core: truncated cluster-series computation of conditional
//! marginals, local-observable insertions, and two-point correlations, each
//! with a rigorous tail bound.
//!
//! For a cluster `W` the engine builds the restricted partition-function
//! series `F(t) = Σ_p ((-1)^p / p!) Σ_seq λ_{a_1}···λ_{a_p} t_{a_1}···t_{a_p}
//! · trace(E · ins · H_{a_1}···H_{a_p})` over ordered term sequences capped by
//! the cluster multiplicities, takes the formal logarithm, and reads off the
//! top monomial's coefficient. Summing the first-order insertion part over
//! the connected clusters of weight `m` containing the target qubit yields
//! the series coefficient of order `m`; inverse temperature enters only
//! through the external factor `β^m`.
//!
//! Tail bounds: the order-`m` marginal coefficient is bounded by
//! `m·beta_star^{-m}`, so truncating at order `M` leaves at most
//! `Σ_{m>M} m r^m = r^{M+1}[(M+1)(1−r)+r]/(1−r)²` with `r = β/beta_star`.
//! For two-insertion correlations the per-cluster bound carries `m²`, and the
//! count of contributing clusters is no larger, so the tail used is
//! `Σ_{m>M} m² r^m = r^{M+1}[(M+1)²(1−r)² + r(2M+3) − r²(2M+1)]/(1−r)³`.
//! Observable insertions on a support of `s` sites draw on clusters touching
//! any of the `s` sites, scaling the marginal tail by `s`.

use std::collections::HashSet;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::clusters::{Cluster, ClusterCache, ClusterError};
use crate::model::{derived_constants, term_overlap_graph, DegreeMode, DerivedConstants,
    HamiltonianSpec, OverlapGraph};
use crate::pauli::{normalized_trace_re, Letter, PauliString, Phase, ProjectorProduct,
    ProjectorError};
use crate::series::{ClusterSeries, Jet, KappaJet, PairJet};

/// Default cap on observable support size (dense norm validation is 2^s).
pub const DEFAULT_SUPPORT_LIMIT: usize = 8;

/// What to do when `β ≥ beta_star` voids the convergence guarantee.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BetaPolicy {
    /// Refuse to compute.
    Error,
    /// Compute anyway; tail bounds become infinite.
    Warn,
}

#[derive(Debug, Error)]
pub enum ExpansionError {
    #[error("beta = {beta} is not below beta_star = {beta_star}; the truncation guarantee is void")]
    GuaranteeVoid { beta: f64, beta_star: f64 },
    #[error("beta must be positive, got {0}")]
    BadBeta(f64),
    #[error("qubit {0} is already measured")]
    QubitMeasured(u32),
    #[error("correlation requires two distinct qubits, got {0} twice")]
    SameQubit(u32),
    #[error("truncation order must be at least 1")]
    OrderZero,
    #[error("alpha must exceed 1 for the total-variation target, got {0}")]
    AlphaTooSmall(f64),
    #[error("operator is not Hermitian: {0}")]
    NonHermitian(String),
    #[error("operator support size {size} exceeds the configured limit {limit}")]
    SupportTooLarge { size: usize, limit: usize },
    #[error("operator norm {norm} exceeds 1; insertions must be subnormalized")]
    NormTooLarge { norm: f64 },
    #[error("operator must act on qubit {expected} only")]
    NotSingleSite { expected: u32 },
    #[error(transparent)]
    Cluster(#[from] ClusterError),
    #[error(transparent)]
    Projector(#[from] ProjectorError),
}

/// A Hermitian operator given as a real-weighted Pauli sum plus an identity
/// component. Used both as measurement insertions and as observables.
#[derive(Debug, Clone, PartialEq)]
pub struct LocalOperator {
    identity: f64,
    components: Vec<(f64, PauliString)>,
}

impl LocalOperator {
    /// The traceless single-site operator `v̂·σ` on `site`.
    pub fn from_axis(site: u32, axis: [f64; 3]) -> Self {
        let components = Letter::ALL
            .iter()
            .filter(|l| axis[l.axis_index()] != 0.0)
            .map(|&l| (axis[l.axis_index()], PauliString::single(site, l)))
            .collect();
        LocalOperator {
            identity: 0.0,
            components,
        }
    }

    /// Build from weighted Pauli strings; phases `±1` fold into the weight,
    /// imaginary phases are rejected (the operator would not be Hermitian).
    /// Identity strings accumulate into the identity component.
    pub fn from_terms(
        terms: impl IntoIterator<Item = (f64, PauliString)>,
    ) -> Result<Self, ExpansionError> {
        let mut identity = 0.0;
        let mut components: Vec<(f64, PauliString)> = Vec::new();
        for (weight, pauli) in terms {
            let signed = match pauli.phase() {
                Phase::ONE => weight,
                Phase::MINUS_ONE => -weight,
                _ => {
                    return Err(ExpansionError::NonHermitian(format!(
                        "component \"{pauli}\" carries an imaginary phase"
                    )))
                }
            };
            let bare = pauli.with_phase(Phase::ONE);
            if bare.is_identity() {
                identity += signed;
                continue;
            }
            match components.iter_mut().find(|(_, p)| *p == bare) {
                Some((w, _)) => *w += signed,
                None => components.push((signed, bare)),
            }
        }
        Ok(LocalOperator {
            identity,
            components,
        })
    }

    pub fn identity_weight(&self) -> f64 {
        self.identity
    }

    pub fn components(&self) -> &[(f64, PauliString)] {
        &self.components
    }

    /// Sorted union of component supports.
    pub fn support(&self) -> Vec<u32> {
        let mut s: Vec<u32> = self
            .components
            .iter()
            .flat_map(|(_, p)| p.support())
            .collect();
        s.sort_unstable();
        s.dedup();
        s
    }

    /// `Some(site)` when every component acts on the one given site.
    pub fn single_site(&self) -> Option<u32> {
        let support = self.support();
        match support.as_slice() {
            [site] => Some(*site),
            _ => None,
        }
    }

    /// Exact operator norm for single-site operators: `|id| + |v|`.
    fn single_site_norm(&self) -> f64 {
        let mut v = [0.0f64; 3];
        for (w, p) in &self.components {
            if let Some(&(_, l)) = p.letters().first() {
                v[l.axis_index()] += w;
            }
        }
        self.identity.abs() + (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt()
    }

    /// Operator norm via dense diagonalization on the support.
    pub fn operator_norm(&self) -> f64 {
        if self.components.is_empty() {
            return self.identity.abs();
        }
        if self.single_site().is_some() {
            return self.single_site_norm();
        }
        let support = self.support();
        let dim = 1usize << support.len();
        let site_slot = |q: u32| support.iter().position(|&s| s == q).unwrap();
        let mut mat = faer::Mat::<num_complex::Complex64>::zeros(dim, dim);
        for col in 0..dim {
            mat[(col, col)] += num_complex::Complex64::new(self.identity, 0.0);
            for (w, p) in &self.components {
                let mut row = col;
                let mut amp = num_complex::Complex64::new(*w, 0.0);
                for &(q, l) in p.letters() {
                    let bit = (col >> site_slot(q)) & 1;
                    match l {
                        Letter::X => row ^= 1 << site_slot(q),
                        Letter::Y => {
                            row ^= 1 << site_slot(q);
                            amp *= num_complex::Complex64::new(
                                0.0,
                                if bit == 0 { 1.0 } else { -1.0 },
                            );
                        }
                        Letter::Z => {
                            if bit == 1 {
                                amp = -amp;
                            }
                        }
                    }
                }
                mat[(row, col)] += amp;
            }
        }
        let eigen = mat
            .self_adjoint_eigen(faer::Side::Lower)
            .expect("hermitian eigendecomposition");
        (0..dim)
            .map(|i| eigen.S()[i].abs())
            .fold(0.0, f64::max)
    }
}

/// A conditional-marginal estimate: the clamped truncated series value plus
/// everything needed to audit it.
#[derive(Debug, Clone, PartialEq)]
pub struct MarginalEstimate {
    /// Clamped to `[0, 1]`.
    pub p_prime: f64,
    /// Truncation order `M`.
    pub order: usize,
    /// Series coefficients of orders `1..=M` (β-independent).
    pub gammas: Vec<f64>,
    /// Half the coefficient-bound tail: `|p′ − p| ≤ tail` when `β < beta_star`.
    /// Infinite when the guarantee is void.
    pub tail: f64,
    /// Whether the raw series value left `[0, 1]` before clamping.
    pub clamped: bool,
    /// `β < beta_star`.
    pub beta_ok: bool,
}

/// A truncated local-observable expectation estimate.
#[derive(Debug, Clone, PartialEq)]
pub struct ObservableEstimate {
    pub value: f64,
    pub tail: f64,
    pub order: usize,
}

/// A truncated conditional two-point correlation estimate.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationEstimate {
    pub value: f64,
    pub tail: f64,
    pub order: usize,
}

/// `Σ_{m>M} m r^m` for `0 ≤ r < 1` (infinite otherwise): the marginal
/// coefficient-bound tail at relative temperature `r = β/beta_star`.
pub fn marginal_tail_sum(r: f64, order: usize) -> f64 {
    if r <= 0.0 {
        return 0.0;
    }
    if r >= 1.0 {
        return f64::INFINITY;
    }
    let m = order as f64;
    r.powi(order as i32 + 1) * ((m + 1.0) * (1.0 - r) + r) / ((1.0 - r) * (1.0 - r))
}

/// `Σ_{m>M} m² r^m` for `0 ≤ r < 1` (infinite otherwise): the correlation
/// tail, from the `m²`-weighted per-cluster bound.
pub fn correlation_tail_sum(r: f64, order: usize) -> f64 {
    if r <= 0.0 {
        return 0.0;
    }
    if r >= 1.0 {
        return f64::INFINITY;
    }
    let m = order as f64;
    let omr = 1.0 - r;
    r.powi(order as i32 + 1)
        * ((m + 1.0) * (m + 1.0) * omr * omr + r * (2.0 * m + 3.0) - r * r * (2.0 * m + 1.0))
        / (omr * omr * omr)
}

/// Policy-aware tail bound `Σ_{m>M} m (β/beta_star)^m`.
pub fn tail_bound(beta: f64, beta_star: f64, order: usize) -> Result<f64, ExpansionError> {
    if beta < 0.0 {
        return Err(ExpansionError::BadBeta(beta));
    }
    if beta >= beta_star {
        return Err(ExpansionError::GuaranteeVoid { beta, beta_star });
    }
    Ok(marginal_tail_sum(beta / beta_star, order))
}

/// The cluster-expansion engine for one Hamiltonian.
///
/// Owns the spec, its overlap graph, the derived constants, and the
/// enumeration cache. All evaluation methods are pure given the immutable
/// spec; contributions are summed in canonical cluster order so results are
/// bitwise reproducible.
#[derive(Debug)]
pub struct ClusterExpansion {
    spec: Arc<HamiltonianSpec>,
    graph: OverlapGraph,
    constants: DerivedConstants,
    mode: DegreeMode,
    cache: ClusterCache,
    support_limit: usize,
}

impl ClusterExpansion {
    pub fn new(spec: HamiltonianSpec, mode: DegreeMode) -> Self {
        let graph = term_overlap_graph(&spec);
        let constants = derived_constants(&spec, mode);
        ClusterExpansion {
            spec: Arc::new(spec),
            graph,
            constants,
            mode,
            cache: ClusterCache::new(),
            support_limit: DEFAULT_SUPPORT_LIMIT,
        }
    }

    pub fn with_support_limit(mut self, limit: usize) -> Self {
        self.support_limit = limit;
        self
    }

    pub fn spec(&self) -> &HamiltonianSpec {
        &self.spec
    }

    pub fn shared_spec(&self) -> Arc<HamiltonianSpec> {
        Arc::clone(&self.spec)
    }

    pub fn constants(&self) -> &DerivedConstants {
        &self.constants
    }

    pub fn degree_mode(&self) -> DegreeMode {
        self.mode
    }

    pub fn overlap_graph(&self) -> &OverlapGraph {
        &self.graph
    }

    /// Memoized connected clusters of weight `m` whose support contains `j`.
    pub fn connected_clusters(&self, j: u32, m: usize) -> Result<Arc<Vec<Cluster>>, ClusterError> {
        self.cache.connected(j, m, &self.spec, &self.graph)
    }

    /// Memoized connected clusters of weight `m` containing both `i` and `j`.
    pub fn connected_cluster_pairs(
        &self,
        i: u32,
        j: u32,
        m: usize,
    ) -> Result<Arc<Vec<Cluster>>, ClusterError> {
        self.cache.connected_pair(i, j, m, &self.spec, &self.graph)
    }

    /// The ordered-product trace jet for one explicit term sequence:
    /// `c0 = tr(E · Π H)`, `c1 = tr(E · ins · Π H)`, no coefficients.
    pub fn sequence_trace(
        &self,
        e: &ProjectorProduct,
        insertion: Option<&LocalOperator>,
        seq: &[usize],
    ) -> KappaJet {
        let mut product = PauliString::identity();
        for &t in seq {
            product = product.multiply(&self.spec.term(t).pauli);
        }
        match insertion {
            Some(op) => jet_single(e, op, &product),
            None => KappaJet::new(normalized_trace_re(e, &product), 0.0),
        }
    }

    /// The top-monomial coefficient of the formal logarithm of the cluster's
    /// restricted series: its `c1` equals the cluster's additive share of the
    /// order-`|W|` marginal coefficient (`λ^W` included).
    ///
    /// Vanishes (to rounding) whenever `w` is disconnected.
    pub fn cluster_contribution(
        &self,
        w: &Cluster,
        e: &ProjectorProduct,
        insertion: &LocalOperator,
    ) -> KappaJet {
        self.contribution_impl(w, |product| jet_single(e, insertion, product))
    }

    /// Two-insertion variant: `cij` of the result is the cluster's share of
    /// the order-`|W|` correlation coefficient.
    pub fn cluster_contribution_pair(
        &self,
        w: &Cluster,
        e: &ProjectorProduct,
        op_i: &LocalOperator,
        op_j: &LocalOperator,
    ) -> PairJet {
        self.contribution_impl(w, |product| jet_pair(e, op_i, op_j, product))
    }

    fn contribution_impl<J: Jet>(
        &self,
        w: &Cluster,
        jet_of: impl Fn(&PauliString) -> J,
    ) -> J {
        let caps: Vec<u32> = w.entries().iter().map(|&(_, m)| m).collect();
        let mut series = ClusterSeries::<J>::zeros(&caps);
        let strides = series.strides().to_vec();
        let total = w.weight();
        // (-1)^p / p!
        let mut node_coeff = Vec::with_capacity(total + 1);
        let mut fact = 1.0f64;
        for p in 0..=total {
            if p > 0 {
                fact *= p as f64;
            }
            node_coeff.push(if p % 2 == 0 { 1.0 / fact } else { -1.0 / fact });
        }
        let terms: Vec<(f64, &PauliString)> = w
            .entries()
            .iter()
            .map(|&(t, _)| (self.spec.term(t).coeff, &self.spec.term(t).pauli))
            .collect();
        let mut remaining: Vec<u32> = caps.clone();
        walk_sequences(
            &terms,
            &strides,
            &node_coeff,
            &jet_of,
            &mut series,
            &mut remaining,
            0,
            0,
            total,
            PauliString::identity(),
            1.0,
        );
        series.log().top()
    }

    /// The order-`m` series coefficient of the conditional marginal of
    /// outcome `+axis` on qubit `j` given `e`. Takes no `β`.
    pub fn gamma(
        &self,
        j: u32,
        e: &ProjectorProduct,
        axis: [f64; 3],
        m: usize,
    ) -> Result<f64, ExpansionError> {
        if e.is_measured(j) {
            return Err(ExpansionError::QubitMeasured(j));
        }
        let insertion = LocalOperator::from_axis(j, axis);
        let clusters = self.connected_clusters(j, m)?;
        Ok(clusters
            .iter()
            .map(|w| self.cluster_contribution(w, e, &insertion).c1)
            .sum())
    }

    /// Per-order coefficient bound `m · beta_star^{-m}`.
    pub fn gamma_bound(&self, m: usize) -> f64 {
        m as f64 * self.constants.beta_star.powi(-(m as i32))
    }

    /// Smallest truncation order whose tail is at most `N^{-alpha}`.
    pub fn choose_order(&self, beta: f64, n: u32, alpha: f64) -> Result<usize, ExpansionError> {
        if beta <= 0.0 {
            return Err(ExpansionError::BadBeta(beta));
        }
        if alpha <= 1.0 {
            return Err(ExpansionError::AlphaTooSmall(alpha));
        }
        let beta_star = self.constants.beta_star;
        if beta >= beta_star {
            return Err(ExpansionError::GuaranteeVoid { beta, beta_star });
        }
        let r = beta / beta_star;
        let target = (n.max(1) as f64).powf(-alpha);
        let mut order = 1;
        while marginal_tail_sum(r, order) > target {
            order += 1;
        }
        Ok(order)
    }

    /// The truncated conditional marginal of outcome `+axis` on qubit `j`.
    pub fn marginal(
        &self,
        e: &ProjectorProduct,
        j: u32,
        axis: [f64; 3],
        beta: f64,
        order: usize,
        policy: BetaPolicy,
    ) -> Result<MarginalEstimate, ExpansionError> {
        if beta <= 0.0 {
            return Err(ExpansionError::BadBeta(beta));
        }
        if order == 0 {
            return Err(ExpansionError::OrderZero);
        }
        if e.is_measured(j) {
            return Err(ExpansionError::QubitMeasured(j));
        }
        let beta_star = self.constants.beta_star;
        let beta_ok = beta < beta_star;
        if !beta_ok && policy == BetaPolicy::Error {
            return Err(ExpansionError::GuaranteeVoid { beta, beta_star });
        }
        let mut gammas = Vec::with_capacity(order);
        for m in 1..=order {
            gammas.push(self.gamma(j, e, axis, m)?);
        }
        let mut raw = 0.0;
        for m in (1..=order).rev() {
            raw += gammas[m - 1] * beta.powi(m as i32);
        }
        let raw = 0.5 + 0.5 * raw;
        let p_prime = raw.clamp(0.0, 1.0);
        let tail = if beta_ok {
            0.5 * marginal_tail_sum(beta / beta_star, order)
        } else {
            f64::INFINITY
        };
        Ok(MarginalEstimate {
            p_prime,
            order,
            gammas,
            tail,
            clamped: p_prime != raw,
            beta_ok,
        })
    }

    /// Truncated conditional thermal expectation of a local observable:
    /// the first-order response of `log tr(E e^{κA} e^{-βH})` at `κ = 0`.
    ///
    /// The observable must be Hermitian with every component supported on
    /// unmeasured qubits; an identity component shifts the value exactly.
    pub fn observable_expectation(
        &self,
        a: &LocalOperator,
        e: &ProjectorProduct,
        beta: f64,
        order: usize,
        policy: BetaPolicy,
    ) -> Result<ObservableEstimate, ExpansionError> {
        if beta <= 0.0 {
            return Err(ExpansionError::BadBeta(beta));
        }
        if order == 0 {
            return Err(ExpansionError::OrderZero);
        }
        let support = a.support();
        if support.len() > self.support_limit {
            return Err(ExpansionError::SupportTooLarge {
                size: support.len(),
                limit: self.support_limit,
            });
        }
        for &q in &support {
            if e.is_measured(q) {
                return Err(ExpansionError::QubitMeasured(q));
            }
        }
        let norm = a.operator_norm();
        if norm > 1.0 + 1e-9 {
            return Err(ExpansionError::NormTooLarge { norm });
        }
        let beta_star = self.constants.beta_star;
        let beta_ok = beta < beta_star;
        if !beta_ok && policy == BetaPolicy::Error {
            return Err(ExpansionError::GuaranteeVoid { beta, beta_star });
        }
        // order zero: tr(E·A); component traces vanish on unmeasured support
        let mut value = a.identity_weight();
        for (w, p) in a.components() {
            value += w * normalized_trace_re(e, p);
        }
        for m in 1..=order {
            let mut seen: HashSet<Vec<(usize, u32)>> = HashSet::new();
            let mut clusters: Vec<Cluster> = Vec::new();
            for &q in &support {
                for w in self.connected_clusters(q, m)?.iter() {
                    if seen.insert(w.entries().to_vec()) {
                        clusters.push(w.clone());
                    }
                }
            }
            clusters.sort_by(|x, y| x.entries().cmp(y.entries()));
            let coeff: f64 = clusters
                .iter()
                .map(|w| self.cluster_contribution(w, e, a).c1)
                .sum();
            value += coeff * beta.powi(m as i32);
        }
        let tail = if beta_ok {
            support.len().max(1) as f64 * marginal_tail_sum(beta / beta_star, order)
        } else {
            f64::INFINITY
        };
        Ok(ObservableEstimate { value, tail, order })
    }

    /// Truncated conditional connected correlation between single-site
    /// insertions on two unmeasured qubits.
    pub fn correlation(
        &self,
        e: &ProjectorProduct,
        i: u32,
        j: u32,
        op_i: &LocalOperator,
        op_j: &LocalOperator,
        beta: f64,
        order: usize,
        policy: BetaPolicy,
    ) -> Result<CorrelationEstimate, ExpansionError> {
        if beta <= 0.0 {
            return Err(ExpansionError::BadBeta(beta));
        }
        if order == 0 {
            return Err(ExpansionError::OrderZero);
        }
        if i == j {
            return Err(ExpansionError::SameQubit(i));
        }
        for (q, op) in [(i, op_i), (j, op_j)] {
            if e.is_measured(q) {
                return Err(ExpansionError::QubitMeasured(q));
            }
            if op.single_site() != Some(q) {
                return Err(ExpansionError::NotSingleSite { expected: q });
            }
            let norm = op.operator_norm();
            if norm > 1.0 + 1e-9 {
                return Err(ExpansionError::NormTooLarge { norm });
            }
        }
        let beta_star = self.constants.beta_star;
        let beta_ok = beta < beta_star;
        if !beta_ok && policy == BetaPolicy::Error {
            return Err(ExpansionError::GuaranteeVoid { beta, beta_star });
        }
        let mut value = 0.0;
        for m in 1..=order {
            let clusters = self.connected_cluster_pairs(i, j, m)?;
            let coeff: f64 = clusters
                .iter()
                .map(|w| self.cluster_contribution_pair(w, e, op_i, op_j).cij)
                .sum();
            value += coeff * beta.powi(m as i32);
        }
        let tail = if beta_ok {
            correlation_tail_sum(beta / beta_star, order)
        } else {
            f64::INFINITY
        };
        Ok(CorrelationEstimate { value, tail, order })
    }
}

/// `c0 = tr(E·P)`, `c1 = tr(E·ins·P)` with the insertion distributed over its
/// Pauli components; the identity component rides along as `id·c0`.
#[inline]
fn jet_single(e: &ProjectorProduct, ins: &LocalOperator, product: &PauliString) -> KappaJet {
    let c0 = normalized_trace_re(e, product);
    let mut c1 = ins.identity_weight() * c0;
    for (w, p) in ins.components() {
        c1 += w * normalized_trace_re(e, &p.multiply(product));
    }
    KappaJet::new(c0, c1)
}

/// Multilinear two-insertion jet; `cij` uses `ins_i·ins_j` (they commute,
/// acting on distinct sites).
#[inline]
fn jet_pair(
    e: &ProjectorProduct,
    op_i: &LocalOperator,
    op_j: &LocalOperator,
    product: &PauliString,
) -> PairJet {
    let c0 = normalized_trace_re(e, product);
    let mut ci = op_i.identity_weight() * c0;
    for (w, p) in op_i.components() {
        ci += w * normalized_trace_re(e, &p.multiply(product));
    }
    let mut cj = op_j.identity_weight() * c0;
    for (w, p) in op_j.components() {
        cj += w * normalized_trace_re(e, &p.multiply(product));
    }
    let mut cij = op_i.identity_weight() * cj + op_j.identity_weight() * ci
        - op_i.identity_weight() * op_j.identity_weight() * c0;
    for (wi, pi) in op_i.components() {
        for (wj, pj) in op_j.components() {
            cij += wi * wj * normalized_trace_re(e, &pi.multiply(&pj.multiply(product)));
        }
    }
    PairJet::new(c0, ci, cj, cij)
}

/// Depth-first enumeration of ordered sequences over the cluster's terms with
/// per-term usage caps, accumulating `(-1)^p/p! · λ-product · jet` into the
/// monomial bucket given by the usage counts.
#[allow(clippy::too_many_arguments)]
fn walk_sequences<J: Jet>(
    terms: &[(f64, &PauliString)],
    strides: &[usize],
    node_coeff: &[f64],
    jet_of: &impl Fn(&PauliString) -> J,
    series: &mut ClusterSeries<J>,
    remaining: &mut [u32],
    depth: usize,
    index: usize,
    total: usize,
    product: PauliString,
    lambda: f64,
) {
    series.add_at_index(index, jet_of(&product).scale(node_coeff[depth] * lambda));
    if depth == total {
        return;
    }
    for slot in 0..terms.len() {
        if remaining[slot] == 0 {
            continue;
        }
        remaining[slot] -= 1;
        let (coeff, pauli) = terms[slot];
        walk_sequences(
            terms,
            strides,
            node_coeff,
            jet_of,
            series,
            remaining,
            depth + 1,
            index + strides[slot],
            total,
            product.multiply(pauli),
            lambda * coeff,
        );
        remaining[slot] += 1;
    }
}

pub const Z_AXIS: [f64; 3] = [0.0, 0.0, 1.0];
pub const X_AXIS: [f64; 3] = [1.0, 0.0, 0.0];
pub const Y_AXIS: [f64; 3] = [0.0, 1.0, 0.0];

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::HamiltonianSpec;
    use crate::pauli::parse_pauli;

    fn engine(n: u32, terms: &[(&str, f64)]) -> ClusterExpansion {
        let spec = HamiltonianSpec::from_terms(
            n,
            terms
                .iter()
                .map(|&(p, c)| (c, parse_pauli(p).unwrap())),
            None,
            true,
        )
        .unwrap()
        .spec;
        ClusterExpansion::new(spec, DegreeMode::Strict)
    }

    #[test]
    fn sequence_trace_examples() {
        let eng = engine(2, &[("Z0 Z1", 0.7), ("Z1", 0.3)]);
        let empty = ProjectorProduct::empty();
        let ins = LocalOperator::from_axis(1, Z_AXIS);
        // empty sequence, traceless insertion
        let jet = eng.sequence_trace(&empty, Some(&ins), &[]);
        assert_eq!(jet, KappaJet::new(1.0, 0.0));
        // E = {}, insertion Z1, seq = [Z1] (term 1)
        let jet = eng.sequence_trace(&empty, Some(&ins), &[1]);
        assert_eq!(jet, KappaJet::new(0.0, 1.0));
        // E = {qubit 0 -> z, outcome 0}, insertion Z1, seq = [Z0 Z1]
        let e = ProjectorProduct::empty().with(0, Z_AXIS).unwrap();
        let jet = eng.sequence_trace(&e, Some(&ins), &[0]);
        assert_eq!(jet, KappaJet::new(0.0, 1.0));
    }

    #[test]
    fn single_site_contributions_match_tanh_series() {
        // H = λ Z1 on two qubits: p(0) = (1 - tanh βλ)/2, so the order-m
        // coefficients are the Taylor coefficients of -tanh(λ β).
        let lambda = 0.8;
        let eng = engine(2, &[("Z1", lambda)]);
        let e = ProjectorProduct::empty();
        let ins = LocalOperator::from_axis(1, Z_AXIS);
        let w1 = Cluster::new([(0, 1)], eng.spec());
        let c1 = eng.cluster_contribution(&w1, &e, &ins);
        assert!((c1.c1 + lambda).abs() < 1e-12);
        let w2 = Cluster::new([(0, 2)], eng.spec());
        let c2 = eng.cluster_contribution(&w2, &e, &ins);
        assert!(c2.c1.abs() < 1e-12);
        let w3 = Cluster::new([(0, 3)], eng.spec());
        let c3 = eng.cluster_contribution(&w3, &e, &ins);
        assert!((c3.c1 - lambda.powi(3) / 3.0).abs() < 1e-12);
    }

    #[test]
    fn gamma_series_examples() {
        let lambda = 0.8;
        let eng = engine(2, &[("Z1", lambda)]);
        let e = ProjectorProduct::empty();
        let expect = [
            -lambda,
            0.0,
            lambda.powi(3) / 3.0,
            0.0,
            -2.0 * lambda.powi(5) / 15.0,
        ];
        for (m, want) in expect.iter().enumerate() {
            let got = eng.gamma(1, &e, Z_AXIS, m + 1).unwrap();
            assert!(
                (got - want).abs() < 1e-9,
                "gamma_{} = {got}, want {want}",
                m + 1
            );
        }

        // transverse field: every Z-basis coefficient vanishes identically
        let tf = engine(2, &[("X1", 0.9)]);
        for m in 1..=6 {
            assert_eq!(tf.gamma(1, &e, Z_AXIS, m).unwrap(), 0.0);
        }

        // conditional: H = λ Z1 Z2, qubit 1 measured as 0, j = 2, m = 1
        let zz = engine(3, &[("Z1 Z2", 0.6)]);
        let cond = ProjectorProduct::empty().with(1, Z_AXIS).unwrap();
        let got = zz.gamma(2, &cond, Z_AXIS, 1).unwrap();
        assert!((got + 0.6).abs() < 1e-12);
    }

    #[test]
    fn disconnected_cluster_vanishes() {
        let eng = engine(6, &[("Z0 Z1", 0.8), ("Z3 Z4", -0.7), ("X4", 0.5)]);
        let e = ProjectorProduct::empty().with(3, Z_AXIS).unwrap();
        let ins = LocalOperator::from_axis(0, Z_AXIS);
        // {Z0Z1} twice union {Z3Z4, X4}: disconnected
        let w = Cluster::new([(0, 2), (1, 1), (2, 1)], eng.spec());
        let jet = eng.cluster_contribution(&w, &e, &ins);
        assert!(jet.c1.abs() < 1e-9, "c1 = {}", jet.c1);
        assert!(jet.c0.abs() < 1e-9, "c0 = {}", jet.c0);
    }

    #[test]
    fn tail_bound_examples() {
        assert!((marginal_tail_sum(0.5, 0) - 2.0).abs() < 1e-12);
        assert!((marginal_tail_sum(0.5, 3) - 0.625).abs() < 1e-12);
        assert!(marginal_tail_sum(1e-12, 5) < 1e-11);
        assert_eq!(marginal_tail_sum(1.0, 3), f64::INFINITY);
        // brute sums
        for (r, order) in [(0.3, 2), (0.7, 5), (0.5, 1)] {
            let brute: f64 = (order + 1..2000).map(|m| m as f64 * r.powi(m as i32)).sum();
            assert!((marginal_tail_sum(r, order as usize) - brute).abs() < 1e-12);
            let brute2: f64 = (order + 1..2000)
                .map(|m| (m * m) as f64 * r.powi(m as i32))
                .sum();
            assert!((correlation_tail_sum(r, order as usize) - brute2).abs() < 1e-11);
        }
    }

    #[test]
    fn choose_order_examples() {
        let eng = engine(2, &[("Z0 Z1", 0.5)]);
        let beta_star = eng.constants().beta_star;
        // N = 1: target 1, smallest positive order
        assert_eq!(eng.choose_order(beta_star / 2.0, 1, 2.0).unwrap(), 1);
        // beta = beta_star/e, alpha = 2, N = 100
        let beta = beta_star / std::f64::consts::E;
        assert_eq!(eng.choose_order(beta, 100, 2.0).unwrap(), 12);
        // doubling N grows the order at most logarithmically
        let eta = 2.0 / (beta_star / beta).ln();
        for n in [10u32, 50, 200] {
            let m1 = eng.choose_order(beta, n, 2.0).unwrap();
            let m2 = eng.choose_order(beta, 2 * n, 2.0).unwrap();
            assert!(m2 >= m1);
            assert!(m2 - m1 <= (eta * 2f64.ln()).ceil() as usize + 1);
        }
        assert!(matches!(
            eng.choose_order(beta, 100, 0.5),
            Err(ExpansionError::AlphaTooSmall(_))
        ));
        assert!(matches!(
            eng.choose_order(beta_star, 100, 2.0),
            Err(ExpansionError::GuaranteeVoid { .. })
        ));
    }

    #[test]
    fn marginal_examples() {
        // transverse field: exactly 1/2 at any order
        let tf = engine(2, &[("X1", 0.9)]);
        let e = ProjectorProduct::empty();
        let est = tf
            .marginal(&e, 1, Z_AXIS, 0.02, 4, BetaPolicy::Error)
            .unwrap();
        assert_eq!(est.p_prime, 0.5);
        assert!(!est.clamped);

        // H = 0.8 Z1, β = 0.02: p' = (1 - tanh 0.016)/2 up to O(β⁵)
        let z = engine(2, &[("Z1", 0.8)]);
        let beta = 0.02;
        let est = z
            .marginal(&e, 1, Z_AXIS, beta, 3, BetaPolicy::Warn)
            .unwrap();
        let exact = 0.5 * (1.0 - (beta * 0.8f64).tanh());
        assert!((est.p_prime - exact).abs() < (beta * 0.8f64).powi(5));

        // field consistency
        let beta_star = z.constants().beta_star;
        let est = z
            .marginal(&e, 1, Z_AXIS, beta_star / 2.0, 5, BetaPolicy::Error)
            .unwrap();
        assert!(est.beta_ok);
        assert!((est.tail - 0.5 * marginal_tail_sum(0.5, 5)).abs() < 1e-15);
        assert_eq!(est.gammas.len(), 5);

        // measured qubit is an error
        let cond = ProjectorProduct::empty().with(1, Z_AXIS).unwrap();
        assert!(matches!(
            z.marginal(&cond, 1, Z_AXIS, beta, 3, BetaPolicy::Error),
            Err(ExpansionError::QubitMeasured(1))
        ));
    }

    #[test]
    fn beta_independence_of_gammas() {
        let eng = engine(4, &[("Z0 Z1", 0.8), ("Z1 Z2", -0.6), ("X2", 0.4), ("Z2 Z3", 0.3)]);
        let e = ProjectorProduct::empty();
        let a = eng
            .marginal(&e, 1, Z_AXIS, 1e-4, 4, BetaPolicy::Warn)
            .unwrap();
        let b = eng
            .marginal(&e, 1, Z_AXIS, 3e-4, 4, BetaPolicy::Warn)
            .unwrap();
        assert_eq!(a.gammas, b.gammas);
    }

    #[test]
    fn guarantee_void_policy() {
        let eng = engine(2, &[("Z0 Z1", 0.5)]);
        let e = ProjectorProduct::empty();
        let beta_star = eng.constants().beta_star;
        assert!(matches!(
            eng.marginal(&e, 0, Z_AXIS, beta_star * 2.0, 3, BetaPolicy::Error),
            Err(ExpansionError::GuaranteeVoid { .. })
        ));
        let est = eng
            .marginal(&e, 0, Z_AXIS, beta_star * 2.0, 3, BetaPolicy::Warn)
            .unwrap();
        assert!(!est.beta_ok);
        assert!(est.tail.is_infinite());
    }

    #[test]
    fn locality_bitwise_invariance() {
        // perturbing a far coefficient leaves near-site gammas bit-identical
        let mut terms = vec![
            ("Z0 Z1", 0.8),
            ("Z1 Z2", -0.6),
            ("Z2 Z3", 0.5),
            ("Z3 Z4", 0.4),
            ("Z4 Z5", 0.3),
            ("Z5 Z6", -0.2),
        ];
        let base = engine(7, &terms);
        terms[5] = ("Z5 Z6", 0.9);
        let perturbed = engine(7, &terms);
        let e = ProjectorProduct::empty();
        // distance(term Z5Z6 support, qubit 0) in the chain far exceeds
        // m(k-1) for m <= 3
        for m in 1..=3 {
            let a = base.gamma(0, &e, Z_AXIS, m).unwrap();
            let b = perturbed.gamma(0, &e, Z_AXIS, m).unwrap();
            assert!(a.to_bits() == b.to_bits(), "m={m}: {a} vs {b}");
        }
    }

    #[test]
    fn zero_field_symmetry() {
        // every term anticommutes with Z1: marginal is exactly 1/2
        let eng = engine(3, &[("X1", 0.9), ("Y1 Z2", 0.7), ("X1 Z0", -0.5)]);
        let e = ProjectorProduct::empty();
        let est = eng
            .marginal(&e, 1, Z_AXIS, 0.01, 6, BetaPolicy::Warn)
            .unwrap();
        assert_eq!(est.p_prime, 0.5);
        for g in &est.gammas {
            assert_eq!(*g, 0.0);
        }
    }

    #[test]
    fn observable_examples() {
        // A = Z_j equals 2·marginal − 1
        let eng = engine(3, &[("Z0 Z1", 0.8), ("Z1 Z2", -0.5), ("X1", 0.3)]);
        let e = ProjectorProduct::empty().with(0, Z_AXIS).unwrap();
        let beta = 1e-3;
        let a = LocalOperator::from_terms([(1.0, parse_pauli("Z1").unwrap())]).unwrap();
        let obs = eng
            .observable_expectation(&a, &e, beta, 4, BetaPolicy::Warn)
            .unwrap();
        let marg = eng
            .marginal(&e, 1, Z_AXIS, beta, 4, BetaPolicy::Warn)
            .unwrap();
        assert!((obs.value - (2.0 * marg.p_prime - 1.0)).abs() < 1e-12);

        // A = X1 with H = λZ1: zero at every order
        let z = engine(2, &[("Z1", 0.8)]);
        let x = LocalOperator::from_terms([(1.0, parse_pauli("X1").unwrap())]).unwrap();
        let obs = z
            .observable_expectation(&x, &ProjectorProduct::empty(), 0.02, 5, BetaPolicy::Warn)
            .unwrap();
        assert_eq!(obs.value, 0.0);

        // A = Z0 Z1 with H = λ Z0 Z1: -tanh(βλ) to truncation order
        let lambda = 0.75;
        let zz = engine(2, &[("Z0 Z1", lambda)]);
        let a = LocalOperator::from_terms([(1.0, parse_pauli("Z0 Z1").unwrap())]).unwrap();
        let beta = 0.02;
        let obs = zz
            .observable_expectation(&a, &ProjectorProduct::empty(), beta, 4, BetaPolicy::Warn)
            .unwrap();
        let exact = -(beta * lambda).tanh();
        assert!((obs.value - exact).abs() < (beta * lambda).powi(5));

        // identity component shifts exactly
        let shifted = LocalOperator::from_terms([
            (0.25, parse_pauli("").unwrap()),
            (0.5, parse_pauli("Z0 Z1").unwrap()),
        ])
        .unwrap();
        let obs2 = zz
            .observable_expectation(&shifted, &ProjectorProduct::empty(), beta, 4, BetaPolicy::Warn)
            .unwrap();
        assert!((obs2.value - (0.25 + 0.5 * obs.value)).abs() < 1e-12);

        // measured support rejected
        let on_measured = LocalOperator::from_terms([(1.0, parse_pauli("Z0").unwrap())]).unwrap();
        assert!(matches!(
            eng.observable_expectation(&on_measured, &e, beta, 3, BetaPolicy::Warn),
            Err(ExpansionError::QubitMeasured(0))
        ));

        // non-Hermitian rejected at construction
        let phased = parse_pauli("X0").unwrap().with_phase(Phase::I);
        assert!(LocalOperator::from_terms([(1.0, phased)]).is_err());

        // norm > 1 rejected
        let toobig = LocalOperator::from_terms([
            (0.9, parse_pauli("Z0 Z1").unwrap()),
            (0.9, parse_pauli("X0").unwrap()),
        ])
        .unwrap();
        assert!(matches!(
            zz.observable_expectation(&toobig, &ProjectorProduct::empty(), beta, 3, BetaPolicy::Warn),
            Err(ExpansionError::NormTooLarge { .. })
        ));
    }

    #[test]
    fn correlation_examples() {
        let lambda = 0.7;
        let eng = engine(4, &[("Z1 Z2", lambda)]);
        let e = ProjectorProduct::empty();
        let zi = LocalOperator::from_axis(1, Z_AXIS);
        let zj = LocalOperator::from_axis(2, Z_AXIS);
        let beta = 5e-4;
        let est = eng
            .correlation(&e, 1, 2, &zi, &zj, beta, 5, BetaPolicy::Warn)
            .unwrap();
        let exact = -(beta * lambda).tanh();
        assert!(
            (est.value - exact).abs() < (beta * lambda).powi(5),
            "got {} want {exact}",
            est.value
        );

        // far pair at low order: exactly zero, tail still reported
        let chain = engine(
            6,
            &[("Z0 Z1", 0.5), ("Z1 Z2", 0.5), ("Z2 Z3", 0.5), ("Z3 Z4", 0.5), ("Z4 Z5", 0.5)],
        );
        let zi = LocalOperator::from_axis(0, Z_AXIS);
        let zj = LocalOperator::from_axis(5, Z_AXIS);
        let est = chain
            .correlation(&e, 0, 5, &zi, &zj, 1e-4, 3, BetaPolicy::Warn)
            .unwrap();
        assert_eq!(est.value, 0.0);
        assert!(est.tail > 0.0);

        // measured qubit is an error
        let cond = ProjectorProduct::empty().with(1, Z_AXIS).unwrap();
        let zi1 = LocalOperator::from_axis(1, Z_AXIS);
        let zj2 = LocalOperator::from_axis(2, Z_AXIS);
        assert!(matches!(
            eng.correlation(&cond, 1, 2, &zi1, &zj2, beta, 3, BetaPolicy::Warn),
            Err(ExpansionError::QubitMeasured(1))
        ));
        assert!(matches!(
            eng.correlation(&e, 2, 2, &zi1, &zj2, beta, 3, BetaPolicy::Warn),
            Err(ExpansionError::SameQubit(2))
        ));
    }
}
