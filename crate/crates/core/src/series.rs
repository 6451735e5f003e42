//! Truncated formal power series used to extract cluster coefficients.
//!
//! Coefficients are *jets*: scalars truncated at first order in one or two
//! insertion strengths. [`KappaJet`] tracks `c0 + c1·κ` (all `κ²` terms are
//! dropped); [`PairJet`] tracks the multilinear part in two strengths,
//! `c0 + ci·κ_i + cj·κ_j + cij·κ_i κ_j`. A [`ClusterSeries`] is a
//! multivariate polynomial over per-term counting variables, truncated
//! componentwise at the cluster's multiplicities; its formal logarithm's top
//! coefficient is the cluster contribution.

/// A coefficient ring element for truncated-series arithmetic.
pub trait Jet: Copy + std::fmt::Debug + PartialEq {
    fn zero() -> Self;
    fn one() -> Self;
    fn add(self, other: Self) -> Self;
    fn sub(self, other: Self) -> Self;
    /// Truncating product: orders beyond the tracked ones are dropped.
    fn mul(self, other: Self) -> Self;
    fn scale(self, s: f64) -> Self;
    /// The order-zero part.
    fn c0(self) -> f64;
    /// Largest absolute component (for tolerance checks).
    fn max_abs(self) -> f64;

    /// Multiplicative inverse, requiring `c0 != 0`. Exact for these jets:
    /// the nilpotent part has vanishing cube.
    fn inv(self) -> Self {
        let c0 = self.c0();
        debug_assert!(c0 != 0.0, "jet inverse requires nonzero constant part");
        let n = self.scale(1.0 / c0).sub(Self::one());
        Self::one().sub(n).add(n.mul(n)).scale(1.0 / c0)
    }

    /// Jet logarithm, requiring `c0 > 0`.
    fn log(self) -> Self {
        let c0 = self.c0();
        debug_assert!(c0 > 0.0, "jet logarithm requires positive constant part");
        let n = self.scale(1.0 / c0).sub(Self::one());
        // ln(1+n) = n - n²/2, n³ = 0
        let mut out = n.sub(n.mul(n).scale(0.5));
        out = out.add(Self::one().scale(c0.ln()));
        out
    }

    /// Jet exponential.
    fn exp(self) -> Self {
        let c0 = self.c0();
        let n = self.sub(Self::one().scale(c0));
        // e^n = 1 + n + n²/2, n³ = 0
        Self::one()
            .add(n)
            .add(n.mul(n).scale(0.5))
            .scale(c0.exp())
    }
}

/// Scalar truncated at first order in a single insertion strength.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct KappaJet {
    pub c0: f64,
    pub c1: f64,
}

impl KappaJet {
    pub fn new(c0: f64, c1: f64) -> Self {
        KappaJet { c0, c1 }
    }
}

impl Jet for KappaJet {
    fn zero() -> Self {
        KappaJet { c0: 0.0, c1: 0.0 }
    }
    fn one() -> Self {
        KappaJet { c0: 1.0, c1: 0.0 }
    }
    fn add(self, o: Self) -> Self {
        KappaJet {
            c0: self.c0 + o.c0,
            c1: self.c1 + o.c1,
        }
    }
    fn sub(self, o: Self) -> Self {
        KappaJet {
            c0: self.c0 - o.c0,
            c1: self.c1 - o.c1,
        }
    }
    fn mul(self, o: Self) -> Self {
        KappaJet {
            c0: self.c0 * o.c0,
            c1: self.c0 * o.c1 + self.c1 * o.c0,
        }
    }
    fn scale(self, s: f64) -> Self {
        KappaJet {
            c0: self.c0 * s,
            c1: self.c1 * s,
        }
    }
    fn c0(self) -> f64 {
        self.c0
    }
    fn max_abs(self) -> f64 {
        self.c0.abs().max(self.c1.abs())
    }
}

/// Scalar truncated at the multilinear part in two insertion strengths.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct PairJet {
    pub c0: f64,
    pub ci: f64,
    pub cj: f64,
    pub cij: f64,
}

impl PairJet {
    pub fn new(c0: f64, ci: f64, cj: f64, cij: f64) -> Self {
        PairJet { c0, ci, cj, cij }
    }
}

impl Jet for PairJet {
    fn zero() -> Self {
        PairJet::new(0.0, 0.0, 0.0, 0.0)
    }
    fn one() -> Self {
        PairJet::new(1.0, 0.0, 0.0, 0.0)
    }
    fn add(self, o: Self) -> Self {
        PairJet::new(
            self.c0 + o.c0,
            self.ci + o.ci,
            self.cj + o.cj,
            self.cij + o.cij,
        )
    }
    fn sub(self, o: Self) -> Self {
        PairJet::new(
            self.c0 - o.c0,
            self.ci - o.ci,
            self.cj - o.cj,
            self.cij - o.cij,
        )
    }
    fn mul(self, o: Self) -> Self {
        PairJet::new(
            self.c0 * o.c0,
            self.c0 * o.ci + self.ci * o.c0,
            self.c0 * o.cj + self.cj * o.c0,
            self.c0 * o.cij + self.ci * o.cj + self.cj * o.ci + self.cij * o.c0,
        )
    }
    fn scale(self, s: f64) -> Self {
        PairJet::new(self.c0 * s, self.ci * s, self.cj * s, self.cij * s)
    }
    fn c0(self) -> f64 {
        self.c0
    }
    fn max_abs(self) -> f64 {
        self.c0
            .abs()
            .max(self.ci.abs())
            .max(self.cj.abs())
            .max(self.cij.abs())
    }
}

/// A multivariate polynomial over counting variables `t_1..t_s`, truncated
/// componentwise at per-variable caps (the cluster's multiplicities).
///
/// Storage is dense mixed-radix: exponent vector `e` lives at index
/// `Σ e_i · stride_i` with radix `cap_i + 1`, so componentwise-admissible
/// exponent additions are plain index additions.
#[derive(Debug, Clone, PartialEq)]
pub struct ClusterSeries<J: Jet> {
    caps: Vec<u32>,
    strides: Vec<usize>,
    coeffs: Vec<J>,
}

impl<J: Jet> ClusterSeries<J> {
    pub fn zeros(caps: &[u32]) -> Self {
        let mut strides = Vec::with_capacity(caps.len());
        let mut size = 1usize;
        for &c in caps {
            strides.push(size);
            size *= c as usize + 1;
        }
        ClusterSeries {
            caps: caps.to_vec(),
            strides,
            coeffs: vec![J::zero(); size],
        }
    }

    pub fn caps(&self) -> &[u32] {
        &self.caps
    }

    pub fn strides(&self) -> &[usize] {
        &self.strides
    }

    pub fn len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// Accumulate into the coefficient at a precomputed mixed-radix index.
    #[inline]
    pub fn add_at_index(&mut self, index: usize, jet: J) {
        self.coeffs[index] = self.coeffs[index].add(jet);
    }

    pub fn set(&mut self, exponents: &[u32], jet: J) {
        let idx = self.index_of(exponents);
        self.coeffs[idx] = jet;
    }

    pub fn coeff(&self, exponents: &[u32]) -> J {
        self.coeffs[self.index_of(exponents)]
    }

    /// Coefficient of the full monomial `t^caps`.
    pub fn top(&self) -> J {
        self.coeffs[self.coeffs.len() - 1]
    }

    pub fn constant(&self) -> J {
        self.coeffs[0]
    }

    fn index_of(&self, exponents: &[u32]) -> usize {
        debug_assert_eq!(exponents.len(), self.caps.len());
        exponents
            .iter()
            .zip(&self.strides)
            .map(|(&e, &s)| e as usize * s)
            .sum()
    }

    fn decode(&self, mut index: usize) -> Vec<u32> {
        let mut exps = vec![0u32; self.caps.len()];
        for (i, &c) in self.caps.iter().enumerate() {
            let radix = c as usize + 1;
            exps[i] = (index % radix) as u32;
            index /= radix;
        }
        exps
    }

    /// Truncated product: exponent pairs exceeding any cap are dropped.
    pub fn mul(&self, other: &Self) -> Self {
        debug_assert_eq!(self.caps, other.caps);
        let mut out = Self::zeros(&self.caps);
        for (ia, &a) in self.coeffs.iter().enumerate() {
            if a == J::zero() {
                continue;
            }
            let ea = self.decode(ia);
            for (ib, &b) in other.coeffs.iter().enumerate() {
                if b == J::zero() {
                    continue;
                }
                let eb = other.decode(ib);
                if ea.iter().zip(&eb).zip(&self.caps).all(|((&x, &y), &c)| x + y <= c) {
                    out.coeffs[ia + ib] = out.coeffs[ia + ib].add(a.mul(b));
                }
            }
        }
        out
    }

    /// Formal logarithm, truncated at the caps. The constant term must have
    /// a positive order-zero part (in the expansion it is exactly 1).
    pub fn log(&self) -> Self {
        let const_jet = self.constant();
        let inv_const = const_jet.inv();
        // y = F/F(0) − 1 has zero constant term, so y^L needs L ≤ total weight
        let mut y = self.clone();
        for c in &mut y.coeffs {
            *c = c.mul(inv_const);
        }
        y.coeffs[0] = J::zero();
        let total: u32 = self.caps.iter().sum();
        let mut out = Self::zeros(&self.caps);
        out.coeffs[0] = const_jet.log();
        let mut power = y.clone();
        for l in 1..=total.max(1) {
            let sign = if l % 2 == 1 { 1.0 } else { -1.0 };
            for (i, &c) in power.coeffs.iter().enumerate() {
                out.coeffs[i] = out.coeffs[i].add(c.scale(sign / l as f64));
            }
            if l < total {
                power = power.mul(&y);
            }
        }
        out
    }

    /// Formal exponential, truncated at the caps.
    pub fn exp(&self) -> Self {
        let const_jet = self.constant();
        let mut y = self.clone();
        y.coeffs[0] = J::zero();
        let total: u32 = self.caps.iter().sum();
        let mut out = Self::zeros(&self.caps);
        out.coeffs[0] = J::one();
        let mut power = y.clone();
        let mut factorial = 1.0f64;
        for l in 1..=total.max(1) {
            factorial *= l as f64;
            for (i, &c) in power.coeffs.iter().enumerate() {
                out.coeffs[i] = out.coeffs[i].add(c.scale(1.0 / factorial));
            }
            if l < total {
                power = power.mul(&y);
            }
        }
        let scale = const_jet.exp();
        for c in &mut out.coeffs {
            *c = c.mul(scale);
        }
        out
    }

    /// Largest absolute difference across all kept coefficients.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        debug_assert_eq!(self.caps, other.caps);
        self.coeffs
            .iter()
            .zip(&other.coeffs)
            .map(|(&a, &b)| a.sub(b).max_abs())
            .fold(0.0, f64::max)
    }
}
