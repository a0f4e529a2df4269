//! Qubit-space operators: Pauli strings, weighted sums of them and their
//! realization as dense or sparse matrices.
//!
//! Conventions used throughout the crate:
//!
//! * qubit `q` corresponds to bit `q` of a computational-basis index, so the
//!   basis state `|b⟩` has qubit `q` set iff `b >> q & 1 == 1`;
//! * letter strings and bitstrings are written with qubit 0 leftmost, so
//!   `"XZ"` is `X` on qubit 0 and `Z` on qubit 1.

use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};

/// Coefficients with modulus at or below this value are dropped after every
/// algebraic operation.
pub const PRUNE_TOLERANCE: f64 = 1e-14;

/// Largest register accepted by [`PauliSum::to_matrix`].
pub const DENSE_QUBIT_LIMIT: usize = 14;

/// Largest register representable by the bitmask encoding.
pub const MAX_QUBITS: usize = 64;

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

fn i_pow(k: u32) -> Complex64 {
    match k % 4 {
        0 => Complex64::new(1.0, 0.0),
        1 => Complex64::new(0.0, 1.0),
        2 => Complex64::new(-1.0, 0.0),
        _ => Complex64::new(0.0, -1.0),
    }
}

#[inline]
fn parity(v: u64) -> bool {
    v.count_ones() & 1 == 1
}

/// Single-qubit Pauli letter.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Pauli {
    I,
    X,
    Y,
    Z,
}

impl Pauli {
    pub fn from_char(c: char) -> Result<Self> {
        match c {
            'I' | 'i' => Ok(Pauli::I),
            'X' | 'x' => Ok(Pauli::X),
            'Y' | 'y' => Ok(Pauli::Y),
            'Z' | 'z' => Ok(Pauli::Z),
            other => Err(Error::InvalidPauliLetter(other)),
        }
    }

    pub fn as_char(self) -> char {
        match self {
            Pauli::I => 'I',
            Pauli::X => 'X',
            Pauli::Y => 'Y',
            Pauli::Z => 'Z',
        }
    }
}

/// Tensor product of Pauli letters stored as X/Z bitmasks.
///
/// The operator represented is `⊗_q σ_q` with `σ = I, X, Z, Y` for
/// `(x_q, z_q) = (0,0), (1,0), (0,1), (1,1)`. Internally `Y = i·X·Z`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct PauliString {
    pub x: u64,
    pub z: u64,
}

impl PauliString {
    pub const IDENTITY: PauliString = PauliString { x: 0, z: 0 };

    pub fn new(x: u64, z: u64) -> Self {
        Self { x, z }
    }

    pub fn single(qubit: usize, p: Pauli) -> Self {
        let bit = 1u64 << qubit;
        match p {
            Pauli::I => Self::IDENTITY,
            Pauli::X => Self { x: bit, z: 0 },
            Pauli::Y => Self { x: bit, z: bit },
            Pauli::Z => Self { x: 0, z: bit },
        }
    }

    pub fn letter(&self, qubit: usize) -> Pauli {
        let x = self.x >> qubit & 1 == 1;
        let z = self.z >> qubit & 1 == 1;
        match (x, z) {
            (false, false) => Pauli::I,
            (true, false) => Pauli::X,
            (true, true) => Pauli::Y,
            (false, true) => Pauli::Z,
        }
    }

    pub fn is_identity(&self) -> bool {
        self.x == 0 && self.z == 0
    }

    /// Number of non-identity letters.
    pub fn weight(&self) -> u32 {
        (self.x | self.z).count_ones()
    }

    /// Highest qubit touched, if any.
    pub fn max_qubit(&self) -> Option<usize> {
        let s = self.x | self.z;
        (s != 0).then(|| 63 - s.leading_zeros() as usize)
    }

    /// Number of `Y` letters.
    pub fn y_count(&self) -> u32 {
        (self.x & self.z).count_ones()
    }

    /// Parse a letter string, qubit 0 leftmost.
    pub fn parse(letters: &str) -> Result<(Self, usize)> {
        let mut s = PauliString::IDENTITY;
        let mut n = 0;
        for (q, c) in letters.chars().enumerate() {
            if q >= MAX_QUBITS {
                return Err(Error::RegisterTooLarge(q + 1, MAX_QUBITS));
            }
            let p = PauliString::single(q, Pauli::from_char(c)?);
            s.x |= p.x;
            s.z |= p.z;
            n = q + 1;
        }
        Ok((s, n))
    }

    pub fn to_letters(&self, n_qubits: usize) -> String {
        (0..n_qubits).map(|q| self.letter(q).as_char()).collect()
    }

    /// Product `self · other` as `(phase, string)`.
    pub fn mul(&self, other: &PauliString) -> (Complex64, PauliString) {
        let x = self.x ^ other.x;
        let z = self.z ^ other.z;
        // i^{a1} X^{x1} Z^{z1} · i^{a2} X^{x2} Z^{z2}
        //   = i^{a1+a2} (-1)^{|z1 & x2|} X^{x} Z^{z}
        let a1 = self.y_count();
        let a2 = other.y_count();
        let a3 = (x & z).count_ones();
        let mut k = a1 + a2 + 4 - (a3 % 4);
        if parity(self.z & other.x) {
            k += 2;
        }
        (i_pow(k), PauliString { x, z })
    }

    /// Whether the two strings commute.
    pub fn commutes_with(&self, other: &PauliString) -> bool {
        parity(self.x & other.z) == parity(self.z & other.x)
    }

    /// Action on a basis state: `P|b⟩ = phase · |b'⟩`.
    #[inline]
    pub fn act(&self, b: usize) -> (Complex64, usize) {
        let mut k = self.y_count();
        if parity(self.z & b as u64) {
            k += 2;
        }
        (i_pow(k), b ^ self.x as usize)
    }

    /// Phase `i^{|x&z|}` carried by the Y letters.
    #[inline]
    pub fn y_phase(&self) -> Complex64 {
        i_pow(self.y_count())
    }
}

/// A single weighted Pauli string on a register of fixed size.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PauliTerm {
    pub n_qubits: usize,
    pub string: PauliString,
    pub coeff: Complex64,
}

impl PauliTerm {
    pub fn new(n_qubits: usize, string: PauliString, coeff: Complex64) -> Self {
        Self {
            n_qubits,
            string,
            coeff,
        }
    }

    pub fn from_letters(letters: &str, coeff: Complex64) -> Result<Self> {
        let (string, n) = PauliString::parse(letters)?;
        Ok(Self::new(n, string, coeff))
    }

    pub fn letters(&self) -> String {
        self.string.to_letters(self.n_qubits)
    }
}

/// Product of two Pauli terms. The phase of the letter product is folded into
/// the coefficient.
pub fn multiply_terms(a: &PauliTerm, b: &PauliTerm) -> Result<PauliTerm> {
    if a.n_qubits != b.n_qubits {
        return Err(Error::SizeMismatch {
            expected: a.n_qubits,
            got: b.n_qubits,
        });
    }
    let (phase, string) = a.string.mul(&b.string);
    Ok(PauliTerm::new(a.n_qubits, string, phase * a.coeff * b.coeff))
}

/// Sum of Pauli strings with complex coefficients, kept in canonical form:
/// one entry per string, no coefficient with modulus at or below
/// [`PRUNE_TOLERANCE`].
#[derive(Debug, Clone, PartialEq)]
pub struct PauliSum {
    n_qubits: usize,
    terms: BTreeMap<PauliString, Complex64>,
}

impl PauliSum {
    pub fn zero(n_qubits: usize) -> Self {
        assert!(n_qubits <= MAX_QUBITS, "register exceeds {MAX_QUBITS} qubits");
        Self {
            n_qubits,
            terms: BTreeMap::new(),
        }
    }

    pub fn identity(n_qubits: usize) -> Self {
        Self::from_term(n_qubits, PauliString::IDENTITY, Complex64::new(1.0, 0.0))
    }

    pub fn from_term(n_qubits: usize, string: PauliString, coeff: Complex64) -> Self {
        let mut s = Self::zero(n_qubits);
        s.add_term(string, coeff);
        s.prune();
        s
    }

    /// Build from `(letters, coefficient)` pairs.
    pub fn from_letters<'a>(
        items: impl IntoIterator<Item = (&'a str, Complex64)>,
    ) -> Result<Self> {
        let mut out: Option<PauliSum> = None;
        for (letters, c) in items {
            let (s, n) = PauliString::parse(letters)?;
            let sum = out.get_or_insert_with(|| PauliSum::zero(n));
            if sum.n_qubits != n {
                return Err(Error::SizeMismatch {
                    expected: sum.n_qubits,
                    got: n,
                });
            }
            sum.add_term(s, c);
        }
        let mut out = out.ok_or_else(|| Error::Parse("empty Pauli sum".into()))?;
        out.prune();
        Ok(out)
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&PauliString, &Complex64)> {
        self.terms.iter()
    }

    pub fn terms(&self) -> impl Iterator<Item = PauliTerm> + '_ {
        self.terms
            .iter()
            .map(|(s, c)| PauliTerm::new(self.n_qubits, *s, *c))
    }

    pub fn coeff(&self, s: &PauliString) -> Complex64 {
        self.terms.get(s).copied().unwrap_or_default()
    }

    /// Accumulate without pruning; call [`PauliSum::prune`] afterwards.
    pub(crate) fn add_term(&mut self, s: PauliString, c: Complex64) {
        *self.terms.entry(s).or_default() += c;
    }

    pub fn push(&mut self, term: &PauliTerm) -> Result<()> {
        self.check(term.n_qubits)?;
        self.add_term(term.string, term.coeff);
        self.prune();
        Ok(())
    }

    pub(crate) fn prune(&mut self) {
        self.terms.retain(|_, c| c.norm() > PRUNE_TOLERANCE);
    }

    fn check(&self, n: usize) -> Result<()> {
        if n != self.n_qubits {
            return Err(Error::SizeMismatch {
                expected: self.n_qubits,
                got: n,
            });
        }
        Ok(())
    }

    pub fn scale(&self, c: Complex64) -> Self {
        let mut out = self.clone();
        for v in out.terms.values_mut() {
            *v *= c;
        }
        out.prune();
        out
    }

    pub fn add(&self, other: &PauliSum) -> Result<Self> {
        self.check(other.n_qubits)?;
        let mut out = self.clone();
        for (s, c) in &other.terms {
            out.add_term(*s, *c);
        }
        out.prune();
        Ok(out)
    }

    pub fn sub(&self, other: &PauliSum) -> Result<Self> {
        self.add(&other.scale(Complex64::new(-1.0, 0.0)))
    }

    pub fn mul(&self, other: &PauliSum) -> Result<Self> {
        self.check(other.n_qubits)?;
        let mut out = PauliSum::zero(self.n_qubits);
        for (sa, ca) in &self.terms {
            for (sb, cb) in &other.terms {
                let (phase, s) = sa.mul(sb);
                out.add_term(s, phase * ca * cb);
            }
        }
        out.prune();
        Ok(out)
    }

    /// Hermitian adjoint: Pauli strings are self-adjoint, so only the
    /// coefficients are conjugated.
    pub fn adjoint(&self) -> Self {
        Self {
            n_qubits: self.n_qubits,
            terms: self.terms.iter().map(|(s, c)| (*s, c.conj())).collect(),
        }
    }

    /// Largest coefficient modulus of `self − other`.
    pub fn max_abs_diff(&self, other: &PauliSum) -> Result<f64> {
        self.check(other.n_qubits)?;
        let mut keys: Vec<&PauliString> = self.terms.keys().chain(other.terms.keys()).collect();
        keys.sort();
        keys.dedup();
        Ok(keys
            .into_iter()
            .map(|k| (self.coeff(k) - other.coeff(k)).norm())
            .fold(0.0, f64::max))
    }

    /// Coefficient-level Hermiticity test.
    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.terms.values().all(|c| c.im.abs() <= tol)
    }

    pub fn is_anti_hermitian(&self, tol: f64) -> bool {
        self.terms.values().all(|c| c.re.abs() <= tol)
    }

    /// Whether every coefficient of the sum commutes pairwise.
    pub fn is_commuting(&self) -> bool {
        let keys: Vec<_> = self.terms.keys().collect();
        keys.iter()
            .enumerate()
            .all(|(i, a)| keys[i + 1..].iter().all(|b| a.commutes_with(b)))
    }

    /// Dense `2^n × 2^n` matrix.
    pub fn to_matrix(&self) -> Result<DMatrix<Complex64>> {
        if self.n_qubits > DENSE_QUBIT_LIMIT {
            return Err(Error::RegisterTooLarge(self.n_qubits, DENSE_QUBIT_LIMIT));
        }
        let dim = 1usize << self.n_qubits;
        let mut m = DMatrix::<Complex64>::zeros(dim, dim);
        for (s, c) in &self.terms {
            for b in 0..dim {
                let (phase, row) = s.act(b);
                m[(row, b)] += c * phase;
            }
        }
        Ok(m)
    }

    /// `op · psi` evaluated term by term.
    pub fn apply(&self, psi: &[Complex64]) -> Result<Vec<Complex64>> {
        let dim = 1usize << self.n_qubits;
        if psi.len() != dim {
            return Err(Error::SizeMismatch {
                expected: self.n_qubits,
                got: psi.len().trailing_zeros() as usize,
            });
        }
        let mut out = vec![Complex64::default(); dim];
        for (s, c) in &self.terms {
            let base = c * s.y_phase();
            let x = s.x as usize;
            for (b, amp) in psi.iter().enumerate() {
                let v = base * amp;
                if parity(s.z & b as u64) {
                    out[b ^ x] -= v;
                } else {
                    out[b ^ x] += v;
                }
            }
        }
        Ok(out)
    }

    /// Row-compressed sparse form for repeated application.
    pub fn to_sparse(&self) -> SparseOperator {
        SparseOperator::from_pauli_sum(self)
    }

    /// One term per line, `±re±imi LETTERS`.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for (s, c) in &self.terms {
            out.push_str(&format!("{:+e}{:+e}i {}\n", c.re, c.im, s.to_letters(self.n_qubits)));
        }
        out
    }

    /// Parse the line format produced by [`PauliSum::to_text`]. Whitespace
    /// inside the coefficient and blank lines are ignored; `n_qubits` is
    /// needed to type an empty sum.
    pub fn from_text(text: &str, n_qubits: usize) -> Result<Self> {
        let mut out = PauliSum::zero(n_qubits);
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (coeff_part, letters) = line
                .rsplit_once(char::is_whitespace)
                .ok_or_else(|| Error::Parse(format!("line {}: missing Pauli letters", lineno + 1)))?;
            let (s, n) = PauliString::parse(letters.trim())?;
            if n != n_qubits {
                return Err(Error::SizeMismatch {
                    expected: n_qubits,
                    got: n,
                });
            }
            let compact: String = coeff_part.chars().filter(|c| !c.is_whitespace()).collect();
            let c = parse_complex(&compact)
                .map_err(|e| Error::Parse(format!("line {}: {e}", lineno + 1)))?;
            out.add_term(s, c);
        }
        out.prune();
        Ok(out)
    }
}

fn parse_complex(s: &str) -> std::result::Result<Complex64, String> {
    if s.is_empty() {
        return Err("empty coefficient".into());
    }
    let bytes = s.as_bytes();
    // split at the last sign that is not a leading sign or part of an exponent
    let split = (1..bytes.len())
        .rev()
        .find(|&k| (bytes[k] == b'+' || bytes[k] == b'-') && !matches!(bytes[k - 1], b'e' | b'E'));
    let num = |t: &str| t.parse::<f64>().map_err(|e| format!("'{t}': {e}"));
    match (split, s.ends_with('i')) {
        (Some(k), true) => {
            let re = num(&s[..k])?;
            let im_s = &s[k..s.len() - 1];
            let im = match im_s {
                "+" => 1.0,
                "-" => -1.0,
                t => num(t)?,
            };
            Ok(Complex64::new(re, im))
        }
        (None, true) => {
            let im_s = &s[..s.len() - 1];
            let im = match im_s {
                "" | "+" => 1.0,
                "-" => -1.0,
                t => num(t)?,
            };
            Ok(Complex64::new(0.0, im))
        }
        (_, false) => Ok(Complex64::new(num(s)?, 0.0)),
    }
}

impl fmt::Display for PauliSum {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_text())
    }
}

impl Add for &PauliSum {
    type Output = PauliSum;
    fn add(self, rhs: &PauliSum) -> PauliSum {
        PauliSum::add(self, rhs).expect("register size mismatch")
    }
}

impl Sub for &PauliSum {
    type Output = PauliSum;
    fn sub(self, rhs: &PauliSum) -> PauliSum {
        PauliSum::sub(self, rhs).expect("register size mismatch")
    }
}

impl Mul for &PauliSum {
    type Output = PauliSum;
    fn mul(self, rhs: &PauliSum) -> PauliSum {
        PauliSum::mul(self, rhs).expect("register size mismatch")
    }
}

impl Neg for &PauliSum {
    type Output = PauliSum;
    fn neg(self) -> PauliSum {
        self.scale(Complex64::new(-1.0, 0.0))
    }
}

/// CSR matrix compiled from a [`PauliSum`].
#[derive(Debug, Clone)]
pub struct SparseOperator {
    n_qubits: usize,
    row_ptr: Vec<usize>,
    cols: Vec<u32>,
    vals: Vec<Complex64>,
}

impl SparseOperator {
    pub fn from_pauli_sum(op: &PauliSum) -> Self {
        let dim = 1usize << op.n_qubits;
        // group strings by X mask: each group contributes one entry per row
        let mut groups: BTreeMap<u64, Vec<(u64, Complex64)>> = BTreeMap::new();
        for (s, c) in &op.terms {
            groups.entry(s.x).or_default().push((s.z, c * s.y_phase()));
        }
        let groups: Vec<(u64, Vec<(u64, Complex64)>)> = groups.into_iter().collect();
        let rows: Vec<Vec<(u32, Complex64)>> = (0..dim)
            .into_par_iter()
            .map(|r| {
                let mut row: Vec<(u32, Complex64)> = groups
                    .iter()
                    .filter_map(|(x, zs)| {
                        let col = r ^ *x as usize;
                        let v: Complex64 = zs
                            .iter()
                            .map(|(z, c)| if parity(z & col as u64) { -c } else { *c })
                            .sum();
                        (v.norm() > PRUNE_TOLERANCE).then_some((col as u32, v))
                    })
                    .collect();
                row.sort_by_key(|e| e.0);
                row
            })
            .collect();
        let mut row_ptr = Vec::with_capacity(dim + 1);
        let mut cols = Vec::new();
        let mut vals = Vec::new();
        row_ptr.push(0);
        for row in rows {
            for (c, v) in row {
                cols.push(c);
                vals.push(v);
            }
            row_ptr.push(cols.len());
        }
        Self {
            n_qubits: op.n_qubits,
            row_ptr,
            cols,
            vals,
        }
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    pub fn apply(&self, psi: &[Complex64]) -> Vec<Complex64> {
        assert_eq!(psi.len(), 1usize << self.n_qubits, "state size mismatch");
        (0..psi.len())
            .into_par_iter()
            .map(|r| {
                let mut acc = Complex64::default();
                for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                    acc += self.vals[k] * psi[self.cols[k] as usize];
                }
                acc
            })
            .collect()
    }

    /// Nonzero `(col, value)` entries of row `r`.
    pub fn row_entries(&self, r: usize) -> impl Iterator<Item = (usize, Complex64)> + '_ {
        (self.row_ptr[r]..self.row_ptr[r + 1]).map(|k| (self.cols[k] as usize, self.vals[k]))
    }
}

/// `exp(-i·angle·P)` applied in place.
pub fn apply_pauli_rotation(psi: &mut [Complex64], p: &PauliString, angle: f64) {
    let (s, c) = angle.sin_cos();
    let x = p.x as usize;
    let yph = p.y_phase();
    if x == 0 {
        // diagonal: P|b⟩ = ±yph |b⟩
        for (b, amp) in psi.iter_mut().enumerate() {
            let ph = if parity(p.z & b as u64) { -yph } else { yph };
            *amp *= Complex64::new(c, 0.0) - I * s * ph;
        }
        return;
    }
    let pivot = 1usize << (63 - (p.x).leading_zeros());
    for b in 0..psi.len() {
        if b & pivot != 0 {
            continue;
        }
        let b2 = b ^ x;
        // P|b⟩ = ph1 |b2⟩, P|b2⟩ = ph2 |b⟩
        let ph1 = if parity(p.z & b as u64) { -yph } else { yph };
        let ph2 = if parity(p.z & b2 as u64) { -yph } else { yph };
        let a = psi[b];
        let a2 = psi[b2];
        psi[b] = a * c - I * s * ph2 * a2;
        psi[b2] = a2 * c - I * s * ph1 * a;
    }
}

/// `P·psi` into a fresh vector.
pub fn apply_pauli(psi: &[Complex64], p: &PauliString) -> Vec<Complex64> {
    let mut out = vec![Complex64::default(); psi.len()];
    for (b, amp) in psi.iter().enumerate() {
        let (ph, t) = p.act(b);
        out[t] = ph * amp;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn term(letters: &str, coeff: Complex64) -> PauliTerm {
        PauliTerm::from_letters(letters, coeff).unwrap()
    }

    #[test]
    fn xy_gives_iz() {
        let p = multiply_terms(&term("XI", c(1., 0.)), &term("YI", c(1., 0.))).unwrap();
        assert_eq!(p.letters(), "ZI");
        assert!((p.coeff - c(0., 1.)).norm() < 1e-15);
    }

    #[test]
    fn involution() {
        let p = multiply_terms(&term("XZ", c(1., 0.)), &term("XZ", c(1., 0.))).unwrap();
        assert_eq!(p.letters(), "II");
        assert!((p.coeff - c(1., 0.)).norm() < 1e-15);
    }

    #[test]
    fn componentwise_product() {
        let p = multiply_terms(&term("XZ", c(1., 0.)), &term("YI", c(1., 0.))).unwrap();
        assert_eq!(p.letters(), "ZZ");
        assert!((p.coeff - c(0., 1.)).norm() < 1e-15);
    }

    #[test]
    fn size_mismatch_is_an_error() {
        assert!(multiply_terms(&term("X", c(1., 0.)), &term("XX", c(1., 0.))).is_err());
    }

    #[test]
    fn letter_products_match_matrices() {
        let letters = ["I", "X", "Y", "Z"];
        for a in letters {
            for b in letters {
                let pa = PauliSum::from_letters([(a, c(1., 0.))]).unwrap();
                let pb = PauliSum::from_letters([(b, c(1., 0.))]).unwrap();
                let prod = (&pa * &pb).to_matrix().unwrap();
                let dense = pa.to_matrix().unwrap() * pb.to_matrix().unwrap();
                assert!((prod - dense).norm() < 1e-14, "{a}{b}");
            }
        }
    }

    #[test]
    fn z_matrix() {
        let z = PauliSum::from_letters([("Z", c(1., 0.))]).unwrap().to_matrix().unwrap();
        assert_eq!(z[(0, 0)], c(1., 0.));
        assert_eq!(z[(1, 1)], c(-1., 0.));
        let n = PauliSum::from_letters([("I", c(0.5, 0.)), ("Z", c(-0.5, 0.))])
            .unwrap()
            .to_matrix()
            .unwrap();
        assert_eq!(n[(0, 0)], c(0., 0.));
        assert_eq!(n[(1, 1)], c(1., 0.));
    }

    #[test]
    fn register_limit() {
        let big = PauliSum::identity(DENSE_QUBIT_LIMIT + 1);
        assert!(matches!(big.to_matrix(), Err(Error::RegisterTooLarge(..))));
    }

    #[test]
    fn apply_identity_and_x() {
        let psi = vec![c(0.6, 0.), c(0., 0.8)];
        assert_eq!(PauliSum::identity(1).apply(&psi).unwrap(), psi);
        let x = PauliSum::from_letters([("X", c(1., 0.))]).unwrap();
        let out = x.apply(&[c(1., 0.), c(0., 0.)]).unwrap();
        assert_eq!(out, vec![c(0., 0.), c(1., 0.)]);
    }

    #[test]
    fn pruning_removes_cancelled_terms() {
        let a = PauliSum::from_letters([("XY", c(1., 0.)), ("ZZ", c(2., 0.))]).unwrap();
        let b = PauliSum::from_letters([("XY", c(-1., 0.))]).unwrap();
        let s = &a + &b;
        assert_eq!(s.len(), 1);
    }

    #[test]
    fn text_parser_tolerates_whitespace() {
        let text = "  + 0.5 - 0.25i   XZIY \n\n-1e-3+2E+1i IIII\n";
        let s = PauliSum::from_text(text, 4).unwrap();
        assert_eq!(s.len(), 2);
        let (xz, _) = PauliString::parse("XZIY").unwrap();
        assert_eq!(s.coeff(&xz), c(0.5, -0.25));
        assert_eq!(s.coeff(&PauliString::IDENTITY), c(-1e-3, 20.0));
    }

    #[test]
    fn rotation_matches_definition() {
        let (p, _) = PauliString::parse("YXZ").unwrap();
        let psi: Vec<Complex64> = (0..8).map(|k| c(k as f64 * 0.1, 0.3 - k as f64 * 0.05)).collect();
        let mut rotated = psi.clone();
        apply_pauli_rotation(&mut rotated, &p, 0.37);
        let ppsi = apply_pauli(&psi, &p);
        for k in 0..8 {
            let expect = psi[k] * 0.37f64.cos() - I * 0.37f64.sin() * ppsi[k];
            assert!((rotated[k] - expect).norm() < 1e-15);
        }
    }
}
