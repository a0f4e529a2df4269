//! Hubbard Hamiltonians on periodic lattices, in real and momentum space,
//! together with the Gutzwiller correlator and the exact transcorrelated
//! (similarity-transformed) Hamiltonians.
//!
//! Spin-orbital layout for a lattice of `N` sites: spin-up orbital `p` is
//! mode `p`, spin-down orbital `p` is mode `N + p`. In real space `p` is the
//! site index `x + Nx·y`; in momentum space it is the grid index of
//! `k = (2π n/Nx, 2π m/Ny)`, flattened as `n + Nx·m`.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fermion::{FermionOperator, Ladder};

/// Spin projection of a spin-orbital.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Spin {
    Up,
    Down,
}

impl Spin {
    pub const BOTH: [Spin; 2] = [Spin::Up, Spin::Down];

    pub fn flip(self) -> Spin {
        match self {
            Spin::Up => Spin::Down,
            Spin::Down => Spin::Up,
        }
    }
}

/// Which single-particle basis a Hamiltonian is written in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Representation {
    Real,
    Momentum,
}

/// Periodic `Nx × Ny` lattice (`Ny = 1` for rings).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Lattice {
    pub nx: usize,
    pub ny: usize,
}

impl Lattice {
    pub fn new(nx: usize, ny: usize) -> Result<Self> {
        if nx == 0 || ny == 0 {
            return Err(Error::InvalidArgument("lattice dimensions must be positive".into()));
        }
        if 2 * nx * ny > crate::pauli::MAX_QUBITS {
            return Err(Error::InvalidArgument(format!(
                "{} sites need more than {} qubits",
                nx * ny,
                crate::pauli::MAX_QUBITS
            )));
        }
        Ok(Self { nx, ny })
    }

    pub fn ring(n: usize) -> Result<Self> {
        Self::new(n, 1)
    }

    pub fn n_sites(&self) -> usize {
        self.nx * self.ny
    }

    pub fn n_modes(&self) -> usize {
        2 * self.n_sites()
    }

    pub fn mode(&self, p: usize, spin: Spin) -> usize {
        match spin {
            Spin::Up => p,
            Spin::Down => self.n_sites() + p,
        }
    }

    fn coords(&self, p: usize) -> (usize, usize) {
        (p % self.nx, p / self.nx)
    }

    fn index(&self, x: usize, y: usize) -> usize {
        x % self.nx + self.nx * (y % self.ny)
    }

    /// Lattice displacements to nearest neighbours. Each dimension longer
    /// than one site contributes `±1`; on a two-site dimension both point to
    /// the same neighbour, so that bond is counted twice.
    pub fn neighbour_offsets(&self) -> Vec<(isize, isize)> {
        let mut out = Vec::new();
        if self.nx > 1 {
            out.push((1, 0));
            out.push((-1, 0));
        }
        if self.ny > 1 {
            out.push((0, 1));
            out.push((0, -1));
        }
        out
    }

    fn shift(&self, p: usize, d: (isize, isize)) -> usize {
        let (x, y) = self.coords(p);
        let nx = self.nx as isize;
        let ny = self.ny as isize;
        let xx = (x as isize + d.0).rem_euclid(nx) as usize;
        let yy = (y as isize + d.1).rem_euclid(ny) as usize;
        self.index(xx, yy)
    }

    /// Directed nearest-neighbour pairs `(i, j)`.
    pub fn bonds(&self) -> Vec<(usize, usize)> {
        let offsets = self.neighbour_offsets();
        (0..self.n_sites())
            .flat_map(|i| offsets.iter().map(move |&d| (i, d)))
            .map(|(i, d)| (i, self.shift(i, d)))
            .collect()
    }

    /// Momentum `(kx, ky)` of grid index `k`.
    pub fn momentum(&self, k: usize) -> (f64, f64) {
        let (n, m) = self.coords(k);
        (
            2.0 * PI * n as f64 / self.nx as f64,
            2.0 * PI * m as f64 / self.ny as f64,
        )
    }

    pub fn k_add(&self, a: usize, b: usize) -> usize {
        let (ax, ay) = self.coords(a);
        let (bx, by) = self.coords(b);
        self.index(ax + bx, ay + by)
    }

    pub fn k_sub(&self, a: usize, b: usize) -> usize {
        let (ax, ay) = self.coords(a);
        let (bx, by) = self.coords(b);
        self.index(ax + self.nx - bx, ay + self.ny - by)
    }

    /// Tight-binding dispersion `ε_k = −t Σ_δ cos(k·δ)`, i.e.
    /// `−2t cos kx` on a ring and `−2t(cos kx + cos ky)` on a torus.
    pub fn dispersion(&self, t: f64, k: usize) -> f64 {
        let (kx, ky) = self.momentum(k);
        -t * self
            .neighbour_offsets()
            .iter()
            .map(|&(dx, dy)| (kx * dx as f64 + ky * dy as f64).cos())
            .sum::<f64>()
    }
}

/// Hubbard model parameters; `j` is the Gutzwiller exponent.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HubbardParams {
    pub t: f64,
    pub u: f64,
    pub j: f64,
}

impl HubbardParams {
    pub fn new(t: f64, u: f64, j: f64) -> Result<Self> {
        if !(t >= 0.0 && u >= 0.0) || !j.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "Hubbard parameters need t >= 0, U >= 0 and finite J (got t={t}, U={u}, J={j})"
            )));
        }
        Ok(Self { t, u, j })
    }
}

fn re(x: f64) -> Complex64 {
    Complex64::new(x, 0.0)
}

fn cr(m: usize) -> Ladder {
    Ladder::create(m)
}

fn an(m: usize) -> Ladder {
    Ladder::annihilate(m)
}

fn push(op: &mut FermionOperator, ops: &[Ladder], c: f64) {
    op.add_product(ops, re(c)).expect("lattice modes are in range");
}

/// `Σ_{p,q,k,σ} c†_{p−k,σ} c†_{q+k,σ̄} c_{q,σ̄} c_{p,σ}` weighted by
/// `coeff(p, q, k)`.
fn add_momentum_pair_term(
    lat: &Lattice,
    op: &mut FermionOperator,
    coeff: impl Fn(usize, usize, usize) -> f64,
) {
    let n = lat.n_sites();
    for spin in Spin::BOTH {
        let bar = spin.flip();
        for p in 0..n {
            for q in 0..n {
                for k in 0..n {
                    let c = coeff(p, q, k);
                    if c == 0.0 {
                        continue;
                    }
                    let ops = [
                        cr(lat.mode(lat.k_sub(p, k), spin)),
                        cr(lat.mode(lat.k_add(q, k), bar)),
                        an(lat.mode(q, bar)),
                        an(lat.mode(p, spin)),
                    ];
                    push(op, &ops, c);
                }
            }
        }
    }
}

/// Real-space Hubbard Hamiltonian
/// `−t Σ_{⟨ij⟩σ} a†_{iσ} a_{jσ} + U Σ_i n_{i↑} n_{i↓}`.
pub fn build_real_space(lat: &Lattice, p: &HubbardParams) -> FermionOperator {
    let mut op = FermionOperator::zero(lat.n_modes());
    for (i, j) in lat.bonds() {
        for s in Spin::BOTH {
            push(&mut op, &[cr(lat.mode(i, s)), an(lat.mode(j, s))], -p.t);
        }
    }
    for i in 0..lat.n_sites() {
        let (u, d) = (lat.mode(i, Spin::Up), lat.mode(i, Spin::Down));
        push(&mut op, &[cr(u), an(u), cr(d), an(d)], p.u);
    }
    op.prune();
    op
}

/// Momentum-space Hubbard Hamiltonian
/// `Σ_{kσ} ε_k n_{kσ} + U/(2N) Σ_{pqkσ} c†_{p−k,σ} c†_{q+k,σ̄} c_{q,σ̄} c_{p,σ}`.
pub fn build_momentum_space(lat: &Lattice, p: &HubbardParams) -> FermionOperator {
    let n = lat.n_sites();
    let mut op = FermionOperator::zero(lat.n_modes());
    for k in 0..n {
        let eps = lat.dispersion(p.t, k);
        for s in Spin::BOTH {
            let m = lat.mode(k, s);
            push(&mut op, &[cr(m), an(m)], eps);
        }
    }
    let w = p.u / (2.0 * n as f64);
    add_momentum_pair_term(lat, &mut op, |_, _, _| w);
    op.prune();
    op
}

/// Gutzwiller correlator `ĝ = J Σ_i n_{i↑} n_{i↓}` in the requested basis.
/// The momentum form is `J/(2N) Σ_{pqkσ} c†_{p−k,σ} c†_{q+k,σ̄} c_{q,σ̄} c_{p,σ}`;
/// the `1/2` compensates the double counting of the spin sum, exactly as in
/// the interaction term of [`build_momentum_space`].
pub fn build_gutzwiller(lat: &Lattice, j: f64, rep: Representation) -> FermionOperator {
    let n = lat.n_sites();
    let mut op = FermionOperator::zero(lat.n_modes());
    match rep {
        Representation::Real => {
            for i in 0..n {
                let (u, d) = (lat.mode(i, Spin::Up), lat.mode(i, Spin::Down));
                push(&mut op, &[cr(u), an(u), cr(d), an(d)], j);
            }
        }
        Representation::Momentum => {
            let w = j / (2.0 * n as f64);
            add_momentum_pair_term(lat, &mut op, |_, _, _| w);
        }
    }
    op.prune();
    op
}

/// Exact `e^{−ĝ} Ĥ^r e^{ĝ}` for the real-space Hamiltonian: every hop is
/// dressed by `1 + (e^J−1) n_{jσ̄} + (e^{−J}−1) n_{iσ̄} − 2(cosh J−1) n_{iσ̄} n_{jσ̄}`.
pub fn build_tc_real(lat: &Lattice, p: &HubbardParams) -> FermionOperator {
    let mut op = build_real_space(lat, p);
    let a = p.j.exp() - 1.0;
    let b = (-p.j).exp() - 1.0;
    let c = -2.0 * (p.j.cosh() - 1.0);
    for (i, j) in lat.bonds() {
        for s in Spin::BOTH {
            let bar = s.flip();
            let (ci, aj) = (cr(lat.mode(i, s)), an(lat.mode(j, s)));
            let (ni_c, ni_a) = (cr(lat.mode(i, bar)), an(lat.mode(i, bar)));
            let (nj_c, nj_a) = (cr(lat.mode(j, bar)), an(lat.mode(j, bar)));
            push(&mut op, &[ci, aj, nj_c, nj_a], -p.t * a);
            push(&mut op, &[ci, aj, ni_c, ni_a], -p.t * b);
            push(&mut op, &[ci, aj, ni_c, ni_a, nj_c, nj_a], -p.t * c);
        }
    }
    op.prune();
    op
}

/// Two-body correction weight of the momentum-space TC Hamiltonian for
/// `c†_{p−k,σ} c†_{q+k,σ̄} c_{q,σ̄} c_{p,σ}`: `[(e^J−1) ε_{p−k} + (e^{−J}−1) ε_p] / N`.
pub fn tc_two_body_weight(lat: &Lattice, params: &HubbardParams, p: usize, k: usize) -> f64 {
    let n = lat.n_sites() as f64;
    ((params.j.exp() - 1.0) * lat.dispersion(params.t, lat.k_sub(p, k))
        + ((-params.j).exp() - 1.0) * lat.dispersion(params.t, p))
        / n
}

/// Prefactor of the three-body term, `−2(cosh J − 1)/N²`; each product is
/// additionally weighted by `ε_{p′}` with `p′ = p − k + k′`.
pub fn tc_three_body_prefactor(lat: &Lattice, params: &HubbardParams) -> f64 {
    let n = lat.n_sites() as f64;
    -2.0 * (params.j.cosh() - 1.0) / (n * n)
}

/// `Σ_{pqskk′σ} w(p′) c†_{p−k,σ} c†_{q+k′,σ̄} c†_{s+k−k′,σ̄} c_{s,σ̄} c_{q,σ̄} c_{p,σ}`
/// with `p′ = p − k + k′`.
fn add_momentum_triple_term(lat: &Lattice, op: &mut FermionOperator, w: impl Fn(usize) -> f64) {
    let n = lat.n_sites();
    for spin in Spin::BOTH {
        let bar = spin.flip();
        for p in 0..n {
            for k in 0..n {
                let pk = lat.k_sub(p, k);
                for kp in 0..n {
                    let c = w(lat.k_add(pk, kp));
                    if c == 0.0 {
                        continue;
                    }
                    for q in 0..n {
                        let qkp = lat.k_add(q, kp);
                        for s in 0..n {
                            let skk = lat.k_sub(lat.k_add(s, k), kp);
                            let ops = [
                                cr(lat.mode(pk, spin)),
                                cr(lat.mode(qkp, bar)),
                                cr(lat.mode(skk, bar)),
                                an(lat.mode(s, bar)),
                                an(lat.mode(q, bar)),
                                an(lat.mode(p, spin)),
                            ];
                            push(op, &ops, c);
                        }
                    }
                }
            }
        }
    }
}

/// The J-independent pieces of the momentum-space TC Hamiltonian:
/// `Ĥ_tc(J) = base + (e^J−1)·pair_shifted + (e^{−J}−1)·pair_direct − 2(cosh J−1)·triple`.
#[derive(Debug, Clone)]
pub struct TcMomentumParts {
    pub base: FermionOperator,
    /// pair term weighted by `ε_{p−k}/N`
    pub pair_shifted: FermionOperator,
    /// pair term weighted by `ε_p/N`
    pub pair_direct: FermionOperator,
    /// three-body term weighted by `ε_{p′}/N²`
    pub triple: FermionOperator,
}

impl TcMomentumParts {
    pub fn new(lat: &Lattice, params: &HubbardParams) -> Self {
        let n = lat.n_sites() as f64;
        let t = params.t;
        let mut pair_shifted = FermionOperator::zero(lat.n_modes());
        add_momentum_pair_term(lat, &mut pair_shifted, |p, _, k| {
            lat.dispersion(t, lat.k_sub(p, k)) / n
        });
        let mut pair_direct = FermionOperator::zero(lat.n_modes());
        add_momentum_pair_term(lat, &mut pair_direct, |p, _, _| lat.dispersion(t, p) / n);
        let mut triple = FermionOperator::zero(lat.n_modes());
        add_momentum_triple_term(lat, &mut triple, |pp| lat.dispersion(t, pp) / (n * n));
        for op in [&mut pair_shifted, &mut pair_direct, &mut triple] {
            op.prune();
        }
        Self {
            base: build_momentum_space(lat, params),
            pair_shifted,
            pair_direct,
            triple,
        }
    }

    /// Scalar weights `(e^J−1, e^{−J}−1, −2(cosh J−1))` of the three pieces.
    pub fn weights(j: f64) -> [f64; 3] {
        [j.exp() - 1.0, (-j).exp() - 1.0, -2.0 * (j.cosh() - 1.0)]
    }
}

/// Exact momentum-space TC Hamiltonian: the momentum Hubbard Hamiltonian plus
/// the dispersion-weighted two-body correction and the three-body term
/// `Σ_{pqskk′σ} ε_{p−k+k′} c†_{p−k,σ} c†_{q+k′,σ̄} c†_{s+k−k′,σ̄} c_{s,σ̄} c_{q,σ̄} c_{p,σ}`.
pub fn build_tc_momentum(lat: &Lattice, params: &HubbardParams) -> FermionOperator {
    let mut op = build_momentum_space(lat, params);
    if params.j == 0.0 {
        return op;
    }
    add_momentum_pair_term(lat, &mut op, |p, _, k| tc_two_body_weight(lat, params, p, k));
    let pref = tc_three_body_prefactor(lat, params);
    add_momentum_triple_term(lat, &mut op, |pp| pref * lat.dispersion(params.t, pp));
    op.prune();
    op
}

/// Hermitian Hubbard Hamiltonian in the given basis.
pub fn build_hubbard(lat: &Lattice, p: &HubbardParams, rep: Representation) -> FermionOperator {
    match rep {
        Representation::Real => build_real_space(lat, p),
        Representation::Momentum => build_momentum_space(lat, p),
    }
}

/// TC Hubbard Hamiltonian in the given basis.
pub fn build_tc(lat: &Lattice, p: &HubbardParams, rep: Representation) -> FermionOperator {
    match rep {
        Representation::Real => build_tc_real(lat, p),
        Representation::Momentum => build_tc_momentum(lat, p),
    }
}
