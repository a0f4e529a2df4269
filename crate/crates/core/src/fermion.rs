//! Second-quantized operators on a finite set of spin-orbitals and their
//! Jordan–Wigner image.
//!
//! Products are kept normal ordered: creators left of annihilators, creators
//! in ascending mode order, annihilators in ascending mode order. Reordering
//! tracks the anticommutation sign and keeps every contraction as an explicit
//! lower-rank term.

use std::collections::BTreeMap;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::pauli::{PauliString, PauliSum, PRUNE_TOLERANCE};

/// A single ladder operator: `a†_mode` when `dagger`, otherwise `a_mode`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Ladder {
    pub mode: usize,
    pub dagger: bool,
}

impl Ladder {
    pub fn create(mode: usize) -> Self {
        Self { mode, dagger: true }
    }

    pub fn annihilate(mode: usize) -> Self {
        Self { mode, dagger: false }
    }

    fn adjoint(self) -> Self {
        Self {
            mode: self.mode,
            dagger: !self.dagger,
        }
    }
}

type Product = Vec<Ladder>;

/// Linear combination of normal-ordered ladder-operator products.
#[derive(Debug, Clone, PartialEq)]
pub struct FermionOperator {
    n_modes: usize,
    terms: BTreeMap<Product, Complex64>,
}

/// Whether `a` must sit to the right of `b` in canonical order.
fn out_of_order(a: &Ladder, b: &Ladder) -> bool {
    match (a.dagger, b.dagger) {
        (false, true) => true,
        (true, false) => false,
        _ => a.mode > b.mode,
    }
}

/// Normal order a raw product, returning `(canonical product, sign)` pairs.
fn normal_order(ops: &[Ladder], coeff: Complex64, out: &mut Vec<(Product, Complex64)>) {
    let mut stack: Vec<(Product, Complex64)> = vec![(ops.to_vec(), coeff)];
    while let Some((mut p, c)) = stack.pop() {
        let mut sign = 1.0;
        let mut zero = false;
        // bubble sort; contractions spawn new products
        'outer: loop {
            let mut swapped = false;
            for k in 0..p.len().saturating_sub(1) {
                let (a, b) = (p[k], p[k + 1]);
                if a == b {
                    zero = true;
                    break 'outer;
                }
                if out_of_order(&a, &b) {
                    if !a.dagger && b.dagger && a.mode == b.mode {
                        // a_m a†_m = 1 - a†_m a_m
                        let mut contracted = p.clone();
                        contracted.drain(k..k + 2);
                        stack.push((contracted, c * sign));
                    }
                    p.swap(k, k + 1);
                    sign = -sign;
                    swapped = true;
                }
            }
            if !swapped {
                break;
            }
        }
        if !zero {
            out.push((p, c * sign));
        }
    }
}

impl FermionOperator {
    pub fn zero(n_modes: usize) -> Self {
        Self {
            n_modes,
            terms: BTreeMap::new(),
        }
    }

    pub fn identity(n_modes: usize) -> Self {
        let mut op = Self::zero(n_modes);
        op.terms.insert(Vec::new(), Complex64::new(1.0, 0.0));
        op
    }

    pub fn n_modes(&self) -> usize {
        self.n_modes
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&[Ladder], &Complex64)> {
        self.terms.iter().map(|(p, c)| (p.as_slice(), c))
    }

    /// Add `coeff · ops[0] ops[1] …` after normal ordering it.
    pub fn add_product(&mut self, ops: &[Ladder], coeff: Complex64) -> Result<()> {
        if let Some(bad) = ops.iter().find(|o| o.mode >= self.n_modes) {
            return Err(Error::ModeOutOfRange {
                index: bad.mode,
                n_modes: self.n_modes,
            });
        }
        if coeff.norm() <= PRUNE_TOLERANCE {
            return Ok(());
        }
        let mut ordered = Vec::new();
        normal_order(ops, coeff, &mut ordered);
        for (p, c) in ordered {
            *self.terms.entry(p).or_default() += c;
        }
        Ok(())
    }

    /// Convenience: single product operator.
    pub fn from_product(n_modes: usize, ops: &[Ladder], coeff: Complex64) -> Result<Self> {
        let mut op = Self::zero(n_modes);
        op.add_product(ops, coeff)?;
        op.prune();
        Ok(op)
    }

    /// `n_p = a†_p a_p`.
    pub fn number(n_modes: usize, p: usize) -> Result<Self> {
        Self::from_product(
            n_modes,
            &[Ladder::create(p), Ladder::annihilate(p)],
            Complex64::new(1.0, 0.0),
        )
    }

    pub fn prune(&mut self) {
        self.terms.retain(|_, c| c.norm() > PRUNE_TOLERANCE);
    }

    pub fn scale(&self, s: Complex64) -> Self {
        let mut out = self.clone();
        for c in out.terms.values_mut() {
            *c *= s;
        }
        out.prune();
        out
    }

    pub fn add(&self, other: &FermionOperator) -> Result<Self> {
        if self.n_modes != other.n_modes {
            return Err(Error::SizeMismatch {
                expected: self.n_modes,
                got: other.n_modes,
            });
        }
        let mut out = self.clone();
        for (p, c) in &other.terms {
            *out.terms.entry(p.clone()).or_default() += c;
        }
        out.prune();
        Ok(out)
    }

    pub fn sub(&self, other: &FermionOperator) -> Result<Self> {
        self.add(&other.scale(Complex64::new(-1.0, 0.0)))
    }

    pub fn mul(&self, other: &FermionOperator) -> Result<Self> {
        if self.n_modes != other.n_modes {
            return Err(Error::SizeMismatch {
                expected: self.n_modes,
                got: other.n_modes,
            });
        }
        let mut out = Self::zero(self.n_modes);
        for (pa, ca) in &self.terms {
            for (pb, cb) in &other.terms {
                let joined: Product = pa.iter().chain(pb.iter()).copied().collect();
                out.add_product(&joined, ca * cb)?;
            }
        }
        out.prune();
        Ok(out)
    }

    pub fn adjoint(&self) -> Self {
        let mut out = Self::zero(self.n_modes);
        for (p, c) in &self.terms {
            let rev: Product = p.iter().rev().map(|o| o.adjoint()).collect();
            out.add_product(&rev, c.conj()).expect("modes already validated");
        }
        out.prune();
        out
    }

    /// Whether all coefficients are real to `tol`.
    pub fn has_real_coefficients(&self, tol: f64) -> bool {
        self.terms.values().all(|c| c.im.abs() <= tol)
    }

    /// Largest coefficient difference against another operator.
    pub fn max_abs_diff(&self, other: &FermionOperator) -> f64 {
        let mut keys: Vec<&Product> = self.terms.keys().chain(other.terms.keys()).collect();
        keys.sort();
        keys.dedup();
        keys.into_iter()
            .map(|k| {
                let a = self.terms.get(k).copied().unwrap_or_default();
                let b = other.terms.get(k).copied().unwrap_or_default();
                (a - b).norm()
            })
            .fold(0.0, f64::max)
    }

    /// Number of products with exactly `rank` creators and `rank`
    /// annihilators.
    pub fn count_rank(&self, rank: usize) -> usize {
        self.terms.keys().filter(|p| p.len() == 2 * rank).count()
    }
}

/// Jordan–Wigner image of a single ladder operator:
/// `a†_p = ½(X_p − iY_p) Z_{<p}`, `a_p = ½(X_p + iY_p) Z_{<p}`.
fn jw_ladder(op: &Ladder) -> [(PauliString, Complex64); 2] {
    let zmask = (1u64 << op.mode) - 1;
    let bit = 1u64 << op.mode;
    let x = PauliString::new(bit, zmask);
    let y = PauliString::new(bit, zmask | bit);
    let iy = if op.dagger { -0.5 } else { 0.5 };
    [
        (x, Complex64::new(0.5, 0.0)),
        (y, Complex64::new(0.0, iy)),
    ]
}

fn jw_product(ops: &[Ladder]) -> Vec<(PauliString, Complex64)> {
    let mut acc: Vec<(PauliString, Complex64)> = vec![(PauliString::IDENTITY, Complex64::new(1.0, 0.0))];
    for op in ops {
        let factors = jw_ladder(op);
        let mut next = BTreeMap::<PauliString, Complex64>::new();
        for (s, c) in &acc {
            for (fs, fc) in &factors {
                let (ph, p) = s.mul(fs);
                *next.entry(p).or_default() += ph * c * fc;
            }
        }
        acc = next
            .into_iter()
            .filter(|(_, c)| c.norm() > PRUNE_TOLERANCE)
            .collect();
    }
    acc
}

/// Map a fermionic operator to qubits with mode `p` on qubit `p`.
pub fn jordan_wigner(op: &FermionOperator) -> PauliSum {
    let mut out = PauliSum::zero(op.n_modes);
    for (p, c) in &op.terms {
        for (s, pc) in jw_product(p) {
            out.add_term(s, pc * c);
        }
    }
    out.prune();
    out
}

/// Apply a ladder-operator product directly to a Fock-space vector, using
/// the same Jordan–Wigner sign convention (the sign counts occupied modes
/// below the acted-on mode). Used to build determinants and as an
/// independent check of the qubit mapping.
pub fn apply_product_fock(ops: &[Ladder], psi: &[Complex64]) -> Vec<Complex64> {
    let mut cur = psi.to_vec();
    for op in ops.iter().rev() {
        let mut next = vec![Complex64::default(); cur.len()];
        let bit = 1usize << op.mode;
        for (b, amp) in cur.iter().enumerate() {
            if amp.norm() == 0.0 {
                continue;
            }
            let occupied = b & bit != 0;
            if occupied == op.dagger {
                continue;
            }
            let below = (b & (bit - 1)).count_ones();
            let sign = if below % 2 == 1 { -1.0 } else { 1.0 };
            next[b ^ bit] += amp * sign;
        }
        cur = next;
    }
    cur
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::DMatrix;

    fn one() -> Complex64 {
        Complex64::new(1.0, 0.0)
    }

    /// Dense matrix of a fermionic operator built column by column from
    /// direct action on occupation-number states.
    fn fock_matrix(op: &FermionOperator) -> DMatrix<Complex64> {
        let dim = 1usize << op.n_modes();
        let mut m = DMatrix::zeros(dim, dim);
        for b in 0..dim {
            let mut e = vec![Complex64::default(); dim];
            e[b] = one();
            for (p, c) in op.iter() {
                let col = apply_product_fock(p, &e);
                for r in 0..dim {
                    m[(r, b)] += c * col[r];
                }
            }
        }
        m
    }

    #[test]
    fn creation_on_mode_zero() {
        let op = FermionOperator::from_product(2, &[Ladder::create(0)], one()).unwrap();
        let q = jordan_wigner(&op);
        let expect = PauliSum::from_letters([
            ("XI", Complex64::new(0.5, 0.0)),
            ("YI", Complex64::new(0.0, -0.5)),
        ])
        .unwrap();
        assert!(q.max_abs_diff(&expect).unwrap() < 1e-15);
    }

    #[test]
    fn number_operator() {
        let q = jordan_wigner(&FermionOperator::number(1, 0).unwrap());
        let expect = PauliSum::from_letters([
            ("I", Complex64::new(0.5, 0.0)),
            ("Z", Complex64::new(-0.5, 0.0)),
        ])
        .unwrap();
        assert!(q.max_abs_diff(&expect).unwrap() < 1e-15);
    }

    #[test]
    fn normal_ordering_generates_contraction() {
        // a_0 a†_0 = 1 - a†_0 a_0
        let op = FermionOperator::from_product(1, &[Ladder::annihilate(0), Ladder::create(0)], one()).unwrap();
        let expect = FermionOperator::identity(1)
            .sub(&FermionOperator::number(1, 0).unwrap())
            .unwrap();
        assert!(op.max_abs_diff(&expect) < 1e-15);
    }

    #[test]
    fn pauli_exclusion() {
        let op = FermionOperator::from_product(2, &[Ladder::create(1), Ladder::create(1)], one()).unwrap();
        assert!(op.is_empty());
    }

    #[test]
    fn canonical_sign() {
        // a†_1 a†_0 = - a†_0 a†_1
        let a = FermionOperator::from_product(2, &[Ladder::create(1), Ladder::create(0)], one()).unwrap();
        let b = FermionOperator::from_product(2, &[Ladder::create(0), Ladder::create(1)], -one()).unwrap();
        assert!(a.max_abs_diff(&b) < 1e-15);
    }

    #[test]
    fn out_of_range_mode_is_rejected() {
        let mut op = FermionOperator::zero(2);
        assert!(op.add_product(&[Ladder::create(2)], one()).is_err());
    }

    #[test]
    fn anticommutation_on_six_modes() {
        let n = 6;
        for i in 0..n {
            for j in 0..n {
                let ai = jordan_wigner(&FermionOperator::from_product(n, &[Ladder::annihilate(i)], one()).unwrap());
                let aj = jordan_wigner(&FermionOperator::from_product(n, &[Ladder::create(j)], one()).unwrap());
                let anti = &(&ai * &aj) + &(&aj * &ai);
                let expect = if i == j { PauliSum::identity(n) } else { PauliSum::zero(n) };
                assert!(anti.max_abs_diff(&expect).unwrap() < 1e-14, "i={i} j={j}");
            }
        }
    }

    #[test]
    fn jw_matrix_matches_fock_action() {
        let n = 4;
        let mut op = FermionOperator::zero(n);
        op.add_product(&[Ladder::create(3), Ladder::annihilate(0)], Complex64::new(0.7, 0.0)).unwrap();
        op.add_product(
            &[Ladder::create(1), Ladder::create(2), Ladder::annihilate(0), Ladder::annihilate(3)],
            Complex64::new(-0.3, 0.2),
        )
        .unwrap();
        op.add_product(&[Ladder::annihilate(2), Ladder::create(2), Ladder::create(1)], one()).unwrap();
        let dense = jordan_wigner(&op).to_matrix().unwrap();
        let fock = fock_matrix(&op);
        assert!((dense - fock).norm() < 1e-13);
    }

    #[test]
    fn adjoint_round_trip() {
        let mut op = FermionOperator::zero(3);
        op.add_product(&[Ladder::create(2), Ladder::annihilate(0)], Complex64::new(0.0, 1.5)).unwrap();
        let back = op.adjoint().adjoint();
        assert!(op.max_abs_diff(&back) < 1e-15);
        let q = jordan_wigner(&op.adjoint());
        let qa = jordan_wigner(&op).adjoint();
        assert!(q.max_abs_diff(&qa).unwrap() < 1e-15);
    }
}
