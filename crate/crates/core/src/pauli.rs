//! Sparse Pauli strings with exact phase tracking, and their normalized
//! traces against products of single-qubit projectors.
//!
//! A [`PauliString`] is a tensor product of single-qubit Pauli operators
//! stored sparsely (absent site = identity) together with a fourth root of
//! unity `i^q`. Phases are tracked exactly as integers mod 4, so products of
//! strings never lose precision; the only floating point in this module
//! enters through measurement-basis axis vectors in [`ProjectorProduct`].

use std::collections::BTreeMap;
use std::fmt;

use num_complex::Complex64;
use thiserror::Error;

/// Tolerance for axis-vector unit-norm validation.
pub const AXIS_NORM_TOL: f64 = 1e-12;

/// A non-identity single-qubit Pauli operator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Letter {
    X,
    Y,
    Z,
}

impl Letter {
    /// Component index into an axis vector `[x, y, z]`.
    #[inline]
    pub fn axis_index(self) -> usize {
        match self {
            Letter::X => 0,
            Letter::Y => 1,
            Letter::Z => 2,
        }
    }

    /// The unit vector along this letter's axis.
    pub fn axis(self) -> [f64; 3] {
        let mut v = [0.0; 3];
        v[self.axis_index()] = 1.0;
        v
    }

    pub fn symbol(self) -> char {
        match self {
            Letter::X => 'X',
            Letter::Y => 'Y',
            Letter::Z => 'Z',
        }
    }

    pub const ALL: [Letter; 3] = [Letter::X, Letter::Y, Letter::Z];

    /// Single-qubit product `self · other`: phase exponent increment and the
    /// resulting letter (`None` = identity).
    ///
    /// Follows `XY = iZ`, `YZ = iX`, `ZX = iY` and the anticommuting reverses.
    #[inline]
    fn mul(self, other: Letter) -> (u8, Option<Letter>) {
        use Letter::*;
        match (self, other) {
            (X, X) | (Y, Y) | (Z, Z) => (0, None),
            (X, Y) => (1, Some(Z)),
            (Y, X) => (3, Some(Z)),
            (Y, Z) => (1, Some(X)),
            (Z, Y) => (3, Some(X)),
            (Z, X) => (1, Some(Y)),
            (X, Z) => (3, Some(Y)),
        }
    }
}

/// A fourth root of unity `i^q`, `q ∈ {0,1,2,3}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct Phase(u8);

impl Phase {
    pub const ONE: Phase = Phase(0);
    pub const I: Phase = Phase(1);
    pub const MINUS_ONE: Phase = Phase(2);
    pub const MINUS_I: Phase = Phase(3);

    #[inline]
    pub fn from_exponent(q: u8) -> Phase {
        Phase(q & 3)
    }

    #[inline]
    pub fn exponent(self) -> u8 {
        self.0
    }

    #[inline]
    pub fn mul(self, other: Phase) -> Phase {
        Phase((self.0 + other.0) & 3)
    }

    /// True when `i^q` is real (`±1`).
    #[inline]
    pub fn is_real(self) -> bool {
        self.0 & 1 == 0
    }

    /// The real part of `i^q`: `1, 0, -1, 0`.
    #[inline]
    pub fn re(self) -> f64 {
        match self.0 {
            0 => 1.0,
            2 => -1.0,
            _ => 0.0,
        }
    }

    pub fn to_complex(self) -> Complex64 {
        match self.0 {
            0 => Complex64::new(1.0, 0.0),
            1 => Complex64::new(0.0, 1.0),
            2 => Complex64::new(-1.0, 0.0),
            _ => Complex64::new(0.0, -1.0),
        }
    }
}

/// A sparse Pauli string `i^q · Π_s σ_{letter(s)}`.
///
/// Sites are stored sorted by qubit index with no duplicates and no identity
/// entries, so structural equality is operator equality.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct PauliString {
    phase: Phase,
    letters: Vec<(u32, Letter)>,
}

impl PauliString {
    pub fn identity() -> Self {
        PauliString {
            phase: Phase::ONE,
            letters: Vec::new(),
        }
    }

    pub fn single(qubit: u32, letter: Letter) -> Self {
        PauliString {
            phase: Phase::ONE,
            letters: vec![(qubit, letter)],
        }
    }

    /// Build from site/letter pairs. Pairs are sorted; a repeated qubit is an
    /// error (use [`PauliString::multiply`] to compose operators on a site).
    pub fn from_letters(
        pairs: impl IntoIterator<Item = (u32, Letter)>,
    ) -> Result<Self, PauliParseError> {
        let mut letters: Vec<(u32, Letter)> = pairs.into_iter().collect();
        letters.sort_by_key(|&(q, _)| q);
        for w in letters.windows(2) {
            if w[0].0 == w[1].0 {
                return Err(PauliParseError::DuplicateSite {
                    pos: 0,
                    qubit: w[0].0,
                });
            }
        }
        Ok(PauliString {
            phase: Phase::ONE,
            letters,
        })
    }

    pub fn with_phase(mut self, phase: Phase) -> Self {
        self.phase = phase;
        self
    }

    #[inline]
    pub fn phase(&self) -> Phase {
        self.phase
    }

    #[inline]
    pub fn letters(&self) -> &[(u32, Letter)] {
        &self.letters
    }

    pub fn letter_at(&self, qubit: u32) -> Option<Letter> {
        self.letters
            .binary_search_by_key(&qubit, |&(q, _)| q)
            .ok()
            .map(|i| self.letters[i].1)
    }

    /// Number of non-identity sites.
    #[inline]
    pub fn weight(&self) -> usize {
        self.letters.len()
    }

    /// True when the letter part is empty (the operator is `i^q · I`).
    #[inline]
    pub fn is_identity(&self) -> bool {
        self.letters.is_empty()
    }

    pub fn support(&self) -> impl Iterator<Item = u32> + '_ {
        self.letters.iter().map(|&(q, _)| q)
    }

    pub fn max_qubit(&self) -> Option<u32> {
        self.letters.last().map(|&(q, _)| q)
    }

    /// Exact operator product `self · other`.
    ///
    /// Sorted-merge over sites; the phase exponent accumulates mod 4, so the
    /// result is again a Pauli string (group closure).
    pub fn multiply(&self, other: &PauliString) -> PauliString {
        let mut letters = Vec::with_capacity(self.letters.len() + other.letters.len());
        let mut q = self.phase.exponent();
        let (mut i, mut j) = (0, 0);
        while i < self.letters.len() && j < other.letters.len() {
            let (qa, la) = self.letters[i];
            let (qb, lb) = other.letters[j];
            match qa.cmp(&qb) {
                std::cmp::Ordering::Less => {
                    letters.push((qa, la));
                    i += 1;
                }
                std::cmp::Ordering::Greater => {
                    letters.push((qb, lb));
                    j += 1;
                }
                std::cmp::Ordering::Equal => {
                    let (dq, l) = la.mul(lb);
                    q += dq;
                    if let Some(l) = l {
                        letters.push((qa, l));
                    }
                    i += 1;
                    j += 1;
                }
            }
        }
        letters.extend_from_slice(&self.letters[i..]);
        letters.extend_from_slice(&other.letters[j..]);
        q += other.phase.exponent();
        PauliString {
            phase: Phase::from_exponent(q),
            letters,
        }
    }

    /// True when `self` and `other` commute (they otherwise anticommute).
    pub fn commutes_with(&self, other: &PauliString) -> bool {
        let mut anti = 0usize;
        let (mut i, mut j) = (0, 0);
        while i < self.letters.len() && j < other.letters.len() {
            let (qa, la) = self.letters[i];
            let (qb, lb) = other.letters[j];
            match qa.cmp(&qb) {
                std::cmp::Ordering::Less => i += 1,
                std::cmp::Ordering::Greater => j += 1,
                std::cmp::Ordering::Equal => {
                    if la != lb {
                        anti += 1;
                    }
                    i += 1;
                    j += 1;
                }
            }
        }
        anti % 2 == 0
    }
}

impl fmt::Display for PauliString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.phase {
            Phase(0) => {}
            Phase(1) => write!(f, "i ")?,
            Phase(2) => write!(f, "- ")?,
            _ => write!(f, "-i ")?,
        }
        if self.letters.is_empty() {
            return write!(f, "I");
        }
        for (k, (q, l)) in self.letters.iter().enumerate() {
            if k > 0 {
                write!(f, " ")?;
            }
            write!(f, "{}{}", l.symbol(), q)?;
        }
        Ok(())
    }
}

/// Parse error for the Pauli-string text grammar, tagged with the byte
/// position where parsing failed.
#[derive(Debug, Error, PartialEq, Eq)]
pub enum PauliParseError {
    #[error("duplicate qubit {qubit} at position {pos}")]
    DuplicateSite { pos: usize, qubit: u32 },
    #[error("unknown letter '{found}' at position {pos}")]
    UnknownLetter { pos: usize, found: char },
    #[error("missing or invalid qubit index at position {pos}")]
    BadIndex { pos: usize },
}

/// Parse the grammar `LETTER INDEX (space LETTER INDEX)*`, e.g. `"Z0 Z1"`.
///
/// The empty (or all-whitespace) string parses to the identity. The grammar
/// carries no phase; parsed strings always have phase `+1`.
pub fn parse_pauli(text: &str) -> Result<PauliString, PauliParseError> {
    let bytes = text.as_bytes();
    let mut letters: Vec<(u32, Letter)> = Vec::new();
    let mut pos = 0usize;
    while pos < bytes.len() {
        if bytes[pos].is_ascii_whitespace() {
            pos += 1;
            continue;
        }
        let letter = match bytes[pos] {
            b'X' | b'x' => Letter::X,
            b'Y' | b'y' => Letter::Y,
            b'Z' | b'z' => Letter::Z,
            c => {
                return Err(PauliParseError::UnknownLetter {
                    pos,
                    found: c as char,
                })
            }
        };
        pos += 1;
        let start = pos;
        while pos < bytes.len() && bytes[pos].is_ascii_digit() {
            pos += 1;
        }
        if pos == start {
            return Err(PauliParseError::BadIndex { pos: start });
        }
        let qubit: u32 = text[start..pos]
            .parse()
            .map_err(|_| PauliParseError::BadIndex { pos: start })?;
        if letters.iter().any(|&(q, _)| q == qubit) {
            return Err(PauliParseError::DuplicateSite {
                pos: start - 1,
                qubit,
            });
        }
        letters.push((qubit, letter));
    }
    letters.sort_by_key(|&(q, _)| q);
    Ok(PauliString {
        phase: Phase::ONE,
        letters,
    })
}

/// Format the letter part in canonical form (sorted by qubit, single spaces).
///
/// The grammar represents phase-free strings; `parse_pauli ∘ format_pauli` is
/// the identity on canonical phase-`+1` strings. Identity formats as `""`.
pub fn format_pauli(p: &PauliString) -> String {
    let mut out = String::new();
    for (k, (q, l)) in p.letters.iter().enumerate() {
        if k > 0 {
            out.push(' ');
        }
        out.push(l.symbol());
        out.push_str(&q.to_string());
    }
    out
}

/// Validation error for projector products.
#[derive(Debug, Error, PartialEq)]
pub enum ProjectorError {
    #[error("qubit {0} is already measured")]
    DuplicateQubit(u32),
    #[error("axis for qubit {qubit} has norm {norm}, expected 1 within {AXIS_NORM_TOL}")]
    NotUnit { qubit: u32, norm: f64 },
}

/// An ordered product of single-qubit projectors `(I + v̂·σ)/2` on distinct
/// qubits; the conditioning operator built up by a measurement record.
///
/// Outcome signs are folded into the stored axis (outcome 0 keeps the basis
/// axis, outcome 1 flips it).
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ProjectorProduct {
    entries: BTreeMap<u32, [f64; 3]>,
}

impl ProjectorProduct {
    pub fn empty() -> Self {
        ProjectorProduct::default()
    }

    /// Number of measured qubits.
    pub fn num_measured(&self) -> usize {
        self.entries.len()
    }

    pub fn is_measured(&self, qubit: u32) -> bool {
        self.entries.contains_key(&qubit)
    }

    pub fn axis(&self, qubit: u32) -> Option<[f64; 3]> {
        self.entries.get(&qubit).copied()
    }

    pub fn entries(&self) -> impl Iterator<Item = (u32, [f64; 3])> + '_ {
        self.entries.iter().map(|(&q, &v)| (q, v))
    }

    /// Append the projector `(I + v̂·σ)/2` on `qubit`.
    pub fn insert(&mut self, qubit: u32, axis: [f64; 3]) -> Result<(), ProjectorError> {
        if self.entries.contains_key(&qubit) {
            return Err(ProjectorError::DuplicateQubit(qubit));
        }
        let norm = (axis[0] * axis[0] + axis[1] * axis[1] + axis[2] * axis[2]).sqrt();
        if (norm - 1.0).abs() > AXIS_NORM_TOL {
            return Err(ProjectorError::NotUnit { qubit, norm });
        }
        self.entries.insert(qubit, axis);
        Ok(())
    }

    pub fn with(mut self, qubit: u32, axis: [f64; 3]) -> Result<Self, ProjectorError> {
        self.insert(qubit, axis)?;
        Ok(self)
    }

    pub fn max_qubit(&self) -> Option<u32> {
        self.entries.keys().next_back().copied()
    }
}

/// The normalized trace `2^{n−N} Tr[E · P]` on any `N` covering both operands
/// (`n` = number of measured qubits; the value does not depend on `N`).
///
/// Factorizes per qubit: a measured qubit contributes the axis component
/// along the string's letter (1 for identity), an unmeasured qubit kills the
/// trace unless the string is identity there. The string's `i^q` phase makes
/// the value complex when `q` is odd.
pub fn normalized_trace(e: &ProjectorProduct, p: &PauliString) -> Complex64 {
    p.phase().to_complex() * trace_letter_factor(e, p)
}

/// Real part of [`normalized_trace`]; the expansion hot path.
///
/// Symmetrized cluster sums are real term-by-term pair (each ordering pairs
/// with its reverse), so accumulating real parts loses nothing.
#[inline]
pub(crate) fn normalized_trace_re(e: &ProjectorProduct, p: &PauliString) -> f64 {
    let phase_re = p.phase().re();
    if phase_re == 0.0 {
        return 0.0;
    }
    phase_re * trace_letter_factor(e, p)
}

#[inline]
fn trace_letter_factor(e: &ProjectorProduct, p: &PauliString) -> f64 {
    let mut factor = 1.0;
    for &(q, l) in p.letters() {
        match e.axis(q) {
            Some(v) => {
                factor *= v[l.axis_index()];
                if factor == 0.0 {
                    return 0.0;
                }
            }
            None => return 0.0,
        }
    }
    factor
}
