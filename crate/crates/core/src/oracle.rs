//! Exact diagonalisation in fixed-particle-number sectors, right eigenvectors
//! of the transcorrelated Hamiltonians, fidelities and the Fermi-sea weight.

use nalgebra::{linalg::Schur, DMatrix, SymmetricEigen};
use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::fermion::{apply_product_fock, jordan_wigner, Ladder};
use crate::jastrow::{fermi_sea, ReferenceDeterminant};
use crate::lattice::{build_gutzwiller, build_hubbard, HubbardParams, Lattice, Representation, Spin};
use crate::pauli::PauliSum;
use crate::state::StateVector;

/// Fock basis states with `n_up` electrons in modes `0..N` and `n_dn` in
/// modes `N..2N`, in increasing index order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SectorBasis {
    n_sites: usize,
    n_up: usize,
    n_dn: usize,
    indices: Vec<usize>,
}

impl SectorBasis {
    pub fn new(n_sites: usize, n_up: usize, n_dn: usize) -> Result<Self> {
        if n_up > n_sites || n_dn > n_sites || 2 * n_sites > 30 {
            return Err(Error::InvalidArgument(format!(
                "sector ({n_up}, {n_dn}) on {n_sites} sites is not representable"
            )));
        }
        let mask = (1usize << n_sites) - 1;
        let indices = (0..1usize << (2 * n_sites))
            .filter(|b| {
                (b & mask).count_ones() as usize == n_up && (b >> n_sites).count_ones() as usize == n_dn
            })
            .collect();
        Ok(Self {
            n_sites,
            n_up,
            n_dn,
            indices,
        })
    }

    /// Half filling with zero net spin.
    pub fn half_filling(lat: &Lattice) -> Result<Self> {
        let n = lat.n_sites();
        if !n.is_multiple_of(2) {
            return Err(Error::InvalidArgument(format!(
                "half filling with S_z = 0 needs an even site count, got {n}"
            )));
        }
        Self::new(n, n / 2, n / 2)
    }

    pub fn n_qubits(&self) -> usize {
        2 * self.n_sites
    }

    pub fn electrons(&self) -> (usize, usize) {
        (self.n_up, self.n_dn)
    }

    pub fn dim(&self) -> usize {
        self.indices.len()
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn position(&self, index: usize) -> Option<usize> {
        self.indices.binary_search(&index).ok()
    }

    /// Sector components of a full-register state.
    pub fn restrict(&self, psi: &StateVector) -> Result<Vec<Complex64>> {
        self.check(psi)?;
        Ok(self.indices.iter().map(|&b| psi.amplitudes()[b]).collect())
    }

    /// Full-register state with the given sector components.
    pub fn embed(&self, v: &[Complex64]) -> Result<StateVector> {
        if v.len() != self.dim() {
            return Err(Error::SizeMismatch {
                expected: self.dim(),
                got: v.len(),
            });
        }
        let mut amps = vec![Complex64::default(); 1 << self.n_qubits()];
        for (&b, a) in self.indices.iter().zip(v) {
            amps[b] = *a;
        }
        StateVector::from_amplitudes(amps)
    }

    fn check(&self, psi: &StateVector) -> Result<()> {
        if psi.n_qubits() != self.n_qubits() {
            return Err(Error::SizeMismatch {
                expected: self.n_qubits(),
                got: psi.n_qubits(),
            });
        }
        Ok(())
    }

    /// Matrix of `op` between sector states. Entries leaving the sector are
    /// dropped, which is exact for number-conserving operators.
    pub fn matrix(&self, op: &PauliSum) -> Result<DMatrix<Complex64>> {
        if op.n_qubits() != self.n_qubits() {
            return Err(Error::SizeMismatch {
                expected: self.n_qubits(),
                got: op.n_qubits(),
            });
        }
        let d = self.dim();
        let mut m = DMatrix::<Complex64>::zeros(d, d);
        for (col, &b) in self.indices.iter().enumerate() {
            for (s, c) in op.iter() {
                let (ph, b2) = s.act(b);
                if let Some(row) = self.position(b2) {
                    m[(row, col)] += c * ph;
                }
            }
        }
        Ok(m)
    }
}

/// Eigenvalues of a general sector matrix, sorted by real part then
/// imaginary part. The Schur iteration deflates at a relative subdiagonal
/// size of 1e-14 (machine epsilon stalls on larger non-normal matrices) and
/// gives up after a bounded number of sweeps.
pub fn spectrum(m: &DMatrix<Complex64>) -> Result<Vec<Complex64>> {
    const MAX_SWEEPS: usize = 20_000;
    let mut ev: Option<Vec<Complex64>> = None;
    for eps in [1e-14, 1e-13, 1e-12] {
        ev = if m.iter().all(|z| z.im == 0.0) {
            Schur::try_new(m.map(|z| z.re), eps, MAX_SWEEPS)
                .map(|s| s.complex_eigenvalues().iter().copied().collect())
        } else {
            Schur::try_new(m.clone(), eps, MAX_SWEEPS)
                .and_then(|s| s.eigenvalues())
                .map(|e| e.iter().copied().collect())
        };
        if ev.is_some() {
            break;
        }
    }
    let mut ev = ev.ok_or_else(|| Error::InvalidArgument("Schur iteration did not converge".into()))?;
    ev.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
    Ok(ev)
}

/// Eigenvalues of a Hermitian sector matrix in ascending order.
pub fn hermitian_spectrum(m: &DMatrix<Complex64>) -> Vec<f64> {
    let mut ev: Vec<f64> = SymmetricEigen::new(m.clone()).eigenvalues.iter().copied().collect();
    ev.sort_by(f64::total_cmp);
    ev
}

/// Largest elementwise distance between two sorted spectra.
pub fn spectrum_distance(a: &[Complex64], b: &[Complex64]) -> f64 {
    if a.len() != b.len() {
        return f64::INFINITY;
    }
    a.iter().zip(b).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}

/// Lowest eigenpair of a Hermitian operator.
#[derive(Debug, Clone)]
pub struct GroundState {
    pub energy: f64,
    pub state: StateVector,
    /// size of the degenerate lowest level (within 1e-9)
    pub degeneracy: usize,
}

fn require_hermitian(h: &PauliSum, what: &str) -> Result<()> {
    if !h.is_hermitian(1e-12) {
        return Err(Error::NotHermitian(format!(
            "{what} needs a Hermitian operator; use tc_right_eigenvector for transcorrelated Hamiltonians"
        )));
    }
    Ok(())
}

/// Lowest eigenpair of `h` within `sector`. The vector is unit-norm with its
/// largest amplitude real and positive. In a degenerate ground level the
/// eigenvector whose dominant basis index is smallest is returned.
pub fn exact_ground_state(h: &PauliSum, sector: &SectorBasis) -> Result<GroundState> {
    require_hermitian(h, "exact_ground_state")?;
    let eig = SymmetricEigen::new(sector.matrix(h)?);
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let e0 = eig.eigenvalues[order[0]];
    let level: Vec<usize> = order
        .iter()
        .copied()
        .take_while(|&i| eig.eigenvalues[i] - e0 < 1e-9)
        .collect();
    let dominant = |i: usize| -> usize {
        let col = eig.eigenvectors.column(i);
        let max = col.iter().map(|z| z.norm()).fold(0.0, f64::max);
        col.iter().position(|z| z.norm() > max - 1e-12).unwrap_or(0)
    };
    let pick = *level.iter().min_by_key(|&&i| dominant(i)).expect("non-empty level");
    let v: Vec<Complex64> = eig.eigenvectors.column(pick).iter().copied().collect();
    let mut state = sector.embed(&v)?;
    state.normalize()?;
    state.fix_phase();
    Ok(GroundState {
        energy: e0,
        state,
        degeneracy: level.len(),
    })
}

/// `exp(s·g)` on the sector, for Hermitian number-conserving `g`.
pub fn sector_exponential(g: &PauliSum, s: f64, sector: &SectorBasis) -> Result<DMatrix<Complex64>> {
    require_hermitian(g, "sector_exponential")?;
    let m = sector.matrix(g)?;
    let diagonal = m.iter().enumerate().all(|(k, z)| k % (m.nrows() + 1) == 0 || *z == Complex64::default());
    if diagonal {
        return Ok(DMatrix::from_diagonal(&m.diagonal().map(|z| Complex64::new((s * z.re).exp(), 0.0))));
    }
    let eig = SymmetricEigen::new(m);
    let d = eig.eigenvalues.map(|x| Complex64::new((s * x).exp(), 0.0));
    let v = &eig.eigenvectors;
    Ok(v * DMatrix::from_diagonal(&d) * v.adjoint())
}

/// Right eigenvector of a transcorrelated Hamiltonian obtained from the
/// Hermitian ground state through the similarity relation.
#[derive(Debug, Clone)]
pub struct RightEigenvector {
    pub energy: f64,
    pub state: StateVector,
    pub residual: f64,
}

/// Tolerance on `‖Ĥ_tc v − E v‖` accepted by [`tc_right_eigenvector`].
pub const EIGEN_RESIDUAL_TOLERANCE: f64 = 1e-8;

/// `normalize(e^{−ĝ} |Φ₀⟩)` for the ground state `|Φ₀⟩` of `h`; verified
/// against `h_tc` through the eigen-relation residual.
pub fn tc_right_eigenvector(
    h: &PauliSum,
    g: &PauliSum,
    h_tc: &PauliSum,
    sector: &SectorBasis,
) -> Result<RightEigenvector> {
    let gs = exact_ground_state(h, sector)?;
    right_eigenvector_from(&gs, g, h_tc, sector)
}

pub(crate) fn right_eigenvector_from(
    gs: &GroundState,
    g: &PauliSum,
    h_tc: &PauliSum,
    sector: &SectorBasis,
) -> Result<RightEigenvector> {
    let v = nalgebra::DVector::from_vec(sector.restrict(&gs.state)?);
    let w = sector_exponential(g, -1.0, sector)? * v;
    let mut state = sector.embed(w.as_slice())?;
    state.normalize()?;
    state.fix_phase();
    let hv = h_tc.apply(state.amplitudes())?;
    let residual = hv
        .iter()
        .zip(state.amplitudes())
        .map(|(a, b)| (a - gs.energy * b).norm_sqr())
        .sum::<f64>()
        .sqrt();
    if residual > EIGEN_RESIDUAL_TOLERANCE {
        return Err(Error::ResidualTooLarge {
            residual,
            tolerance: EIGEN_RESIDUAL_TOLERANCE,
            context: "transcorrelated eigen-relation".into(),
        });
    }
    Ok(RightEigenvector {
        energy: gs.energy,
        state,
        residual,
    })
}

/// `|⟨reference|ψ⟩|²` for unit-norm states.
pub fn fidelity(psi: &StateVector, reference: &StateVector) -> Result<f64> {
    for s in [psi, reference] {
        if (s.norm() - 1.0).abs() > 1e-6 {
            return Err(Error::NotNormalized(s.norm()));
        }
    }
    Ok(reference.inner(psi)?.norm_sqr().min(1.0))
}

/// Non-interacting ground state of the real-space ring/torus at half filling
/// as a real Slater determinant. Each momentum of the Fermi sea contributes a
/// standing wave: `cos(k·r)` when `k ≡ −k`, `cos` and `sin` for a fully
/// occupied `±k` pair. When the degenerate shell is only half filled, spin up
/// takes the `cos` and spin down the `sin` partner, which keeps the two spins
/// on complementary sites instead of piling both onto the nodes of one wave.
pub fn noninteracting_real_space_state(lat: &Lattice) -> Result<StateVector> {
    let fs = fermi_sea(lat, lat.n_sites())?;
    let n = lat.n_sites();
    let positions: Vec<(f64, f64)> = (0..n)
        .map(|r| ((r % lat.nx) as f64, (r / lat.nx) as f64))
        .collect();
    let spin_orbitals = |spin: Spin| -> Vec<Vec<f64>> {
        let occupied: Vec<usize> = (0..n).filter(|&k| fs.is_occupied(lat.mode(k, spin))).collect();
        let mut orbitals = Vec::new();
        for &k in &occupied {
            let minus = lat.k_sub(0, k);
            if minus < k && occupied.contains(&minus) {
                continue;
            }
            let (kx, ky) = lat.momentum(k);
            let phase = |r: &(f64, f64)| kx * r.0 + ky * r.1;
            let cos: Vec<f64> = positions.iter().map(|r| phase(r).cos()).collect();
            let sin: Vec<f64> = positions.iter().map(|r| phase(r).sin()).collect();
            if minus == k {
                orbitals.push(cos);
            } else if occupied.contains(&minus) {
                orbitals.push(cos);
                orbitals.push(sin);
            } else if spin == Spin::Up {
                orbitals.push(cos);
            } else {
                orbitals.push(sin);
            }
        }
        orbitals
    };
    let mut amps = vec![Complex64::default(); 1 << lat.n_modes()];
    amps[0] = Complex64::new(1.0, 0.0);
    for spin in Spin::BOTH {
        for orb in &spin_orbitals(spin) {
            let norm = orb.iter().map(|x| x * x).sum::<f64>().sqrt();
            let mut next = vec![Complex64::default(); amps.len()];
            for (r, &w) in orb.iter().enumerate() {
                if w.abs() < 1e-15 {
                    continue;
                }
                let part = apply_product_fock(&[Ladder::create(lat.mode(r, spin))], &amps);
                for (a, b) in next.iter_mut().zip(part) {
                    *a += b * (w / norm);
                }
            }
            amps = next;
        }
    }
    let mut state = StateVector::from_amplitudes(amps)?;
    state.normalize()?;
    state.fix_phase();
    Ok(state)
}

/// One point of the compactness sweep.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct CompactnessPoint {
    pub j: f64,
    pub hf_weight: f64,
}

/// Weight of the Fermi sea in the normalised right eigenvector of the
/// momentum-space TC Hamiltonian, `|⟨HF|Φ^R(J)⟩|²`, for each `J`.
pub fn hf_weight_sweep(lat: &Lattice, t: f64, u: f64, j_grid: &[f64]) -> Result<Vec<CompactnessPoint>> {
    let sector = SectorBasis::half_filling(lat)?;
    let params = HubbardParams::new(t, u, 0.0)?;
    let h = jordan_wigner(&build_hubbard(lat, &params, Representation::Momentum));
    let gs = exact_ground_state(&h, &sector)?;
    let hf = fermi_sea(lat, lat.n_sites())?;
    let g1 = sector.matrix(&jordan_wigner(&build_gutzwiller(lat, 1.0, Representation::Momentum)))?;
    let eig = SymmetricEigen::new(g1);
    let v = nalgebra::DVector::from_vec(sector.restrict(&gs.state)?);
    let coeffs = eig.eigenvectors.adjoint() * v;
    let hf_pos = sector
        .position(hf.as_basis_index())
        .expect("Fermi sea lies in the half-filling sector");
    let hf_row: Vec<Complex64> = eig.eigenvectors.row(hf_pos).iter().copied().collect();
    Ok(j_grid
        .iter()
        .map(|&j| {
            // e^{−J g1} v in the eigenbasis of g1
            let scaled: Vec<Complex64> = coeffs
                .iter()
                .zip(eig.eigenvalues.iter())
                .map(|(c, &l)| c * (-j * l).exp())
                .collect();
            let norm2: f64 = scaled.iter().map(|z| z.norm_sqr()).sum();
            let overlap: Complex64 = hf_row.iter().zip(&scaled).map(|(a, b)| a * b).sum();
            CompactnessPoint {
                j,
                hf_weight: overlap.norm_sqr() / norm2,
            }
        })
        .collect())
}

/// Weight of a determinant in a state.
pub fn determinant_weight(psi: &StateVector, det: &ReferenceDeterminant) -> f64 {
    psi.amplitudes()[det.as_basis_index()].norm_sqr()
}
