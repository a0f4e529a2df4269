//! Fermi-sea reference determinants and the projective optimisation of the
//! Gutzwiller parameter.

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::fermion::{jordan_wigner, FermionOperator};
use crate::lattice::{build_gutzwiller, HubbardParams, Lattice, Representation, Spin, TcMomentumParts};
use crate::pauli::SparseOperator;
use crate::state::{index_to_bitstring, inner, StateVector};

/// Occupation-number basis state.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
pub struct ReferenceDeterminant {
    n_qubits: usize,
    occupied_modes: Vec<usize>,
}

impl ReferenceDeterminant {
    pub fn from_modes(n_qubits: usize, modes: &[usize]) -> Result<Self> {
        let mut occupied_modes = modes.to_vec();
        occupied_modes.sort_unstable();
        occupied_modes.dedup();
        if occupied_modes.len() != modes.len() {
            return Err(Error::InvalidArgument("repeated occupied mode".into()));
        }
        if let Some(&m) = occupied_modes.iter().find(|&&m| m >= n_qubits) {
            return Err(Error::ModeOutOfRange {
                index: m,
                n_modes: n_qubits,
            });
        }
        Ok(Self {
            n_qubits,
            occupied_modes,
        })
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn occupied_modes(&self) -> &[usize] {
        &self.occupied_modes
    }

    pub fn n_electrons(&self) -> usize {
        self.occupied_modes.len()
    }

    pub fn is_occupied(&self, mode: usize) -> bool {
        self.occupied_modes.binary_search(&mode).is_ok()
    }

    pub fn as_basis_index(&self) -> usize {
        self.occupied_modes.iter().fold(0, |acc, m| acc | 1 << m)
    }

    pub fn bitstring(&self) -> String {
        index_to_bitstring(self.as_basis_index(), self.n_qubits)
    }

    pub fn state(&self) -> StateVector {
        StateVector::basis(self.n_qubits, self.as_basis_index()).expect("determinant fits register")
    }

    /// Occupied and virtual modes of one spin block, as global mode indices.
    pub fn split_spin(&self, lat: &Lattice, spin: Spin) -> (Vec<usize>, Vec<usize>) {
        (0..lat.n_sites())
            .map(|p| lat.mode(p, spin))
            .partition(|&m| self.is_occupied(m))
    }
}

fn check_electrons(lat: &Lattice, n_electrons: usize) -> Result<()> {
    if !n_electrons.is_multiple_of(2) {
        return Err(Error::InvalidArgument(format!(
            "odd electron count {n_electrons}: only S_z = 0 references are supported"
        )));
    }
    if n_electrons > lat.n_modes() {
        return Err(Error::InvalidArgument(format!(
            "{n_electrons} electrons do not fit in {} spin-orbitals",
            lat.n_modes()
        )));
    }
    Ok(())
}

/// Momenta ordered by dispersion; degenerate levels (within 1e-12) are
/// ordered by grid index.
pub fn momenta_by_energy(lat: &Lattice) -> Vec<usize> {
    let eps: Vec<f64> = (0..lat.n_sites()).map(|k| lat.dispersion(1.0, k)).collect();
    let mut ks: Vec<usize> = (0..lat.n_sites()).collect();
    ks.sort_by(|&a, &b| {
        if (eps[a] - eps[b]).abs() < 1e-12 {
            a.cmp(&b)
        } else {
            eps[a].total_cmp(&eps[b])
        }
    });
    ks
}

/// Fermi sea in the momentum basis: the `n/2` lowest-dispersion momenta for
/// each spin, ties broken towards the smaller grid index.
pub fn fermi_sea(lat: &Lattice, n_electrons: usize) -> Result<ReferenceDeterminant> {
    check_electrons(lat, n_electrons)?;
    let ks = momenta_by_energy(lat);
    let mut modes = Vec::with_capacity(n_electrons);
    for spin in Spin::BOTH {
        modes.extend(ks[..n_electrons / 2].iter().map(|&k| lat.mode(k, spin)));
    }
    ReferenceDeterminant::from_modes(lat.n_modes(), &modes)
}

/// Real-space reference for the coupled-cluster excitation structure: sites
/// `0..n/2` occupied in each spin block.
pub fn site_reference(lat: &Lattice, n_electrons: usize) -> Result<ReferenceDeterminant> {
    check_electrons(lat, n_electrons)?;
    let mut modes = Vec::with_capacity(n_electrons);
    for spin in Spin::BOTH {
        modes.extend((0..n_electrons / 2).map(|p| lat.mode(p, spin)));
    }
    ReferenceDeterminant::from_modes(lat.n_modes(), &modes)
}

/// `⟨Φ₀|(ĝ − ⟨ĝ⟩₀) Ĥ_tc(J) |Φ₀⟩` with momentum-space operators, where `ĝ` is
/// the correlator at unit strength. Dividing out `J` removes the trivial root
/// at `J = 0` without moving any other root.
///
/// The momentum TC Hamiltonian is affine in three scalar functions of `J`, so
/// the operator pieces are applied to the reference once and every
/// evaluation afterwards is a handful of inner products.
#[derive(Debug, Clone)]
pub struct ProjectionResidual {
    reference: ReferenceDeterminant,
    /// `⟨(ĝ−⟨ĝ⟩)Φ₀| X |Φ₀⟩` for X in (base, pair_shifted, pair_direct, triple)
    parts: [f64; 4],
}

impl ProjectionResidual {
    pub fn new(lat: &Lattice, t: f64, u: f64, reference: &ReferenceDeterminant) -> Result<Self> {
        let params = HubbardParams::new(t, u, 0.0)?;
        if reference.n_qubits() != lat.n_modes() {
            return Err(Error::SizeMismatch {
                expected: lat.n_modes(),
                got: reference.n_qubits(),
            });
        }
        let tc = TcMomentumParts::new(lat, &params);
        let g = jordan_wigner(&build_gutzwiller(lat, 1.0, Representation::Momentum));
        let phi = reference.state().into_amplitudes();
        let g_phi = g.to_sparse().apply(&phi);
        let g0 = inner(&phi, &g_phi);
        let dg: Vec<Complex64> = g_phi.iter().zip(&phi).map(|(a, b)| a - g0 * b).collect();
        let project = |op: &FermionOperator| -> f64 {
            let x = SparseOperator::from_pauli_sum(&jordan_wigner(op)).apply(&phi);
            inner(&dg, &x).re
        };
        Ok(Self {
            reference: reference.clone(),
            parts: [
                project(&tc.base),
                project(&tc.pair_shifted),
                project(&tc.pair_direct),
                project(&tc.triple),
            ],
        })
    }

    pub fn reference(&self) -> &ReferenceDeterminant {
        &self.reference
    }

    pub fn eval(&self, j: f64) -> f64 {
        let [a, b, c] = TcMomentumParts::weights(j);
        self.parts[0] + a * self.parts[1] + b * self.parts[2] + c * self.parts[3]
    }
}

/// Residual of the projection equation at a single `J`, using the Fermi sea
/// at half filling.
pub fn projection_residual(lat: &Lattice, t: f64, u: f64, j: f64) -> Result<f64> {
    let reference = fermi_sea(lat, lat.n_sites())?;
    Ok(ProjectionResidual::new(lat, t, u, &reference)?.eval(j))
}

/// Result of the `J` optimisation.
#[derive(Debug, Clone, Serialize)]
pub struct JOptimization {
    pub j: f64,
    pub residual: f64,
    pub iterations: usize,
}

/// Bisection for a root of `f` in `[lo, hi]` down to width `tol`.
pub fn bisect(f: impl Fn(f64) -> f64, lo: f64, hi: f64, tol: f64) -> Result<(f64, usize)> {
    if !(lo < hi) || !(tol > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "invalid bracket [{lo}, {hi}] or tolerance {tol}"
        )));
    }
    let (mut a, mut b) = (lo, hi);
    let (mut fa, fb) = (f(a), f(b));
    if fa == 0.0 {
        return Ok((a, 0));
    }
    if fb == 0.0 {
        return Ok((b, 0));
    }
    if fa.signum() == fb.signum() {
        return Err(Error::NoSignChange { lo, hi });
    }
    let mut it = 0;
    while b - a > tol {
        let m = 0.5 * (a + b);
        let fm = f(m);
        it += 1;
        if fm == 0.0 {
            return Ok((m, it));
        }
        if fm.signum() == fa.signum() {
            a = m;
            fa = fm;
        } else {
            b = m;
        }
    }
    Ok((0.5 * (a + b), it))
}

/// Root of the projection residual for the given reference.
pub fn optimize_j_with_reference(
    lat: &Lattice,
    t: f64,
    u: f64,
    reference: &ReferenceDeterminant,
    bracket: (f64, f64),
    tol: f64,
) -> Result<JOptimization> {
    let r = ProjectionResidual::new(lat, t, u, reference)?;
    let (j, iterations) = bisect(|j| r.eval(j), bracket.0, bracket.1, tol)?;
    Ok(JOptimization {
        j,
        residual: r.eval(j),
        iterations,
    })
}

/// Root of the projection residual with the half-filled Fermi sea; the
/// default bracket is `[−3, 0]` with tolerance `1e-6`.
pub fn optimize_j(lat: &Lattice, t: f64, u: f64, bracket: (f64, f64), tol: f64) -> Result<JOptimization> {
    let reference = fermi_sea(lat, lat.n_sites())?;
    optimize_j_with_reference(lat, t, u, &reference, bracket, tol)
}

/// Residual sampled on `n` evenly spaced points of `[lo, hi]`.
pub fn residual_curve(
    lat: &Lattice,
    t: f64,
    u: f64,
    lo: f64,
    hi: f64,
    n: usize,
) -> Result<Vec<(f64, f64)>> {
    let reference = fermi_sea(lat, lat.n_sites())?;
    let r = ProjectionResidual::new(lat, t, u, &reference)?;
    let step = if n > 1 { (hi - lo) / (n - 1) as f64 } else { 0.0 };
    Ok((0..n)
        .map(|i| {
            let j = lo + step * i as f64;
            (j, r.eval(j))
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fermi_sea_two_sites() {
        let lat = Lattice::ring(2).unwrap();
        let fs = fermi_sea(&lat, 2).unwrap();
        assert_eq!(fs.occupied_modes(), &[0, 2]);
        assert_eq!(fs.bitstring(), "1010");
    }

    #[test]
    fn fermi_sea_six_sites_closed_shell() {
        let lat = Lattice::ring(6).unwrap();
        let fs = fermi_sea(&lat, 6).unwrap();
        assert_eq!(fs.occupied_modes(), &[0, 1, 5, 6, 7, 11]);
    }

    #[test]
    fn fermi_sea_four_sites_tie_break() {
        let lat = Lattice::ring(4).unwrap();
        let fs = fermi_sea(&lat, 4).unwrap();
        assert_eq!(fs.occupied_modes(), &[0, 1, 4, 5]);
    }

    #[test]
    fn odd_electron_count_rejected() {
        let lat = Lattice::ring(4).unwrap();
        assert!(fermi_sea(&lat, 3).is_err());
        assert!(fermi_sea(&lat, 10).is_err());
    }

    #[test]
    fn bisection_on_known_function() {
        let (x, _) = bisect(|x| x * x - 2.0, 0.0, 2.0, 1e-10).unwrap();
        assert!((x - 2f64.sqrt()).abs() < 1e-9);
        assert!(matches!(
            bisect(|x| x * x + 1.0, -1.0, 1.0, 1e-6),
            Err(Error::NoSignChange { .. })
        ));
    }
}
