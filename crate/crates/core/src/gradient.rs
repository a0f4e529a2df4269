//! McLachlan metric `A_ij = Re⟨∂_iΦ|∂_jΦ⟩` and gradient
//! `C_i = Re⟨∂_iΦ|H|Φ⟩` for possibly non-Hermitian `H`.
//!
//! `H` is split into `H⁺ = H + H†` and `H⁻ = H − H†`, so that
//! `C_i = (C⁺_i + C⁻_i)/4` with `C^± = 2 Re⟨∂Φ|H^±|Φ⟩`. Each term is read off
//! an ancilla circuit: the ancilla (highest qubit) is prepared in
//! `(|0⟩ + e^{iα}|1⟩)/√2`, the derivative generator of one gate is inserted
//! controlled on it, and the ancilla is rotated by `V` (H for `H⁺`, RX(π/2)
//! for `H⁻`) before measuring `Z_a ⊗ H^±`.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rayon::prelude::*;

use crate::circuits::{apply_gate, Angle, Gate, InitialState, ParametrizedCircuit};
use crate::error::{Error, Result};
use crate::pauli::{Pauli, PauliString, PauliSum, SparseOperator};
use crate::simulator::{
    derivative_state, derive_seed, estimate_expectation, estimate_pauli, evolve, expectation,
    state_and_derivatives, DerivativeMethod,
    Estimate, ReadoutSetup, StateVector,
};
use crate::state::inner;

const HERMITIAN_TOL: f64 = 1e-12;

/// `H⁺ = H + H†` (Hermitian) and `H⁻ = H − H†` (anti-Hermitian).
#[derive(Debug, Clone, PartialEq)]
pub struct HermitianSplit {
    pub h_plus: PauliSum,
    pub h_minus: PauliSum,
}

impl HermitianSplit {
    /// `(H⁺ + H⁻)/2`
    pub fn reconstruct(&self) -> Result<PauliSum> {
        Ok(self.h_plus.add(&self.h_minus)?.scale(Complex64::new(0.5, 0.0)))
    }
}

pub fn split(h: &PauliSum) -> Result<HermitianSplit> {
    let adj = h.adjoint();
    Ok(HermitianSplit {
        h_plus: h.add(&adj)?,
        h_minus: h.sub(&adj)?,
    })
}

/// One step of a derivative insertion: an uncontrolled gate, or a Pauli
/// string applied only in the ancilla branch that carries the derivative.
#[derive(Debug, Clone, PartialEq)]
pub enum LcuOp {
    Gate(Gate),
    Controlled(PauliString),
}

/// `∂G/∂θ = G · scale · U`, with `U` the ordered product of `ops`
/// (first element applied first) and the uncontrolled gates in `ops`
/// cancelling on the branch where the controlled parts are skipped.
#[derive(Debug, Clone, PartialEq)]
pub struct GateDerivativeLCU {
    pub scale: Complex64,
    pub ops: Vec<LcuOp>,
}

impl GateDerivativeLCU {
    /// Dense `U` on an `n_qubits` register with the controlled parts enabled.
    pub fn unitary_matrix(&self, n_qubits: usize) -> Result<DMatrix<Complex64>> {
        let gates: Vec<Gate> = self
            .ops
            .iter()
            .map(|op| match op {
                LcuOp::Gate(g) => g.clone(),
                LcuOp::Controlled(p) => Gate::PauliExp {
                    pauli: *p,
                    angle: Angle::Fixed(-std::f64::consts::FRAC_PI_2),
                },
            })
            .collect();
        // exp(iπ/2·P) = i·P
        let m = register_matrix(&gates, &[], n_qubits)?;
        let ncontrolled = self.ops.iter().filter(|op| matches!(op, LcuOp::Controlled(_))).count();
        Ok(m * Complex64::new(0.0, -1.0).powu(ncontrolled as u32))
    }

    /// Reconstructed `∂G/∂θ` on an `n_qubits` register.
    pub fn derivative_matrix(&self, g: &Gate, theta: &[f64], n_qubits: usize) -> Result<DMatrix<Complex64>> {
        let gm = register_matrix(std::slice::from_ref(g), theta, n_qubits)?;
        Ok(gm * self.unitary_matrix(n_qubits)? * self.scale)
    }
}

/// Dense matrix of a gate sequence on `n_qubits` qubits.
pub fn register_matrix(gates: &[Gate], theta: &[f64], n_qubits: usize) -> Result<DMatrix<Complex64>> {
    if n_qubits > 10 {
        return Err(Error::RegisterTooLarge(n_qubits, 10));
    }
    let d = 1usize << n_qubits;
    let mut m = DMatrix::zeros(d, d);
    for col in 0..d {
        let mut psi = StateVector::basis(n_qubits, col)?.into_amplitudes();
        for g in gates {
            apply_gate(g, theta, &mut psi)?;
        }
        m.column_mut(col).copy_from_slice(&psi);
    }
    Ok(m)
}

/// Derivative of a parametrised gate as a scaled controlled-unitary sequence.
pub fn lcu_gate_derivative(g: &Gate) -> Result<GateDerivativeLCU> {
    let angle = g.angle().filter(|a| a.param_index().is_some());
    let Some(Angle::Param { scale, .. }) = angle.copied() else {
        return Err(Error::NotDifferentiable(format!("{g:?}")));
    };
    let half = Complex64::new(0.0, -0.5 * scale);
    let single = |q: usize, p: Pauli| vec![LcuOp::Controlled(PauliString::single(q, p))];
    let (scale, ops) = match g {
        Gate::Rx { qubit, .. } => (half, single(*qubit, Pauli::X)),
        Gate::Ry { qubit, .. } => (half, single(*qubit, Pauli::Y)),
        Gate::Rz { qubit, .. } => (half, single(*qubit, Pauli::Z)),
        // sin λ X + cos λ Y = RZ(λ)† Y RZ(λ)
        Gate::U3 { qubit, lambda, .. } => (
            half,
            vec![
                LcuOp::Gate(Gate::Rz {
                    qubit: *qubit,
                    angle: Angle::Fixed(*lambda),
                }),
                LcuOp::Controlled(PauliString::single(*qubit, Pauli::Y)),
                LcuOp::Gate(Gate::Rz {
                    qubit: *qubit,
                    angle: Angle::Fixed(-lambda),
                }),
            ],
        ),
        Gate::PauliExp { pauli, .. } => (Complex64::new(0.0, -scale), vec![LcuOp::Controlled(*pauli)]),
        _ => return Err(Error::NotDifferentiable(format!("{g:?}"))),
    };
    Ok(GateDerivativeLCU { scale, ops })
}

/// One contribution to `∂_iΦ`: the LCU of a gate (inserted just before it)
/// or, for the global phase, `scale = i` with nothing inserted.
#[derive(Debug, Clone)]
struct DerivativeTerm {
    gate_index: Option<usize>,
    lcu: GateDerivativeLCU,
}

fn derivative_terms(c: &ParametrizedCircuit, i: usize) -> Result<Vec<DerivativeTerm>> {
    if i >= c.n_params() {
        return Err(Error::InvalidArgument(format!(
            "parameter index {i} out of range for {} parameters",
            c.n_params()
        )));
    }
    if c.global_phase_index() == Some(i) {
        return Ok(vec![DerivativeTerm {
            gate_index: None,
            lcu: GateDerivativeLCU {
                scale: Complex64::new(0.0, 1.0),
                ops: Vec::new(),
            },
        }]);
    }
    c.gates()
        .iter()
        .enumerate()
        .filter(|(_, g)| g.param_index() == Some(i))
        .map(|(k, g)| {
            Ok(DerivativeTerm {
                gate_index: Some(k),
                lcu: lcu_gate_derivative(g)?,
            })
        })
        .collect()
}

/// Final rotation of the ancilla.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AncillaBasis {
    /// `V = H`, for Hermitian observables
    Hadamard,
    /// `V = RX(π/2)`, for anti-Hermitian observables
    RxHalfPi,
}

impl AncillaBasis {
    fn gate(self, ancilla: usize) -> Gate {
        match self {
            AncillaBasis::Hadamard => Gate::H { qubit: ancilla },
            AncillaBasis::RxHalfPi => Gate::Rx {
                qubit: ancilla,
                angle: Angle::Fixed(std::f64::consts::FRAC_PI_2),
            },
        }
    }
}

fn insertion(lcu: &GateDerivativeLCU, ancilla: usize, anti: bool) -> Vec<Gate> {
    let mut out = Vec::new();
    if anti {
        out.push(Gate::X { qubit: ancilla });
    }
    out.extend(lcu.ops.iter().map(|op| match op {
        LcuOp::Gate(g) => g.clone(),
        LcuOp::Controlled(p) => Gate::ControlledPauli {
            control: ancilla,
            pauli: *p,
        },
    }));
    if anti {
        out.push(Gate::X { qubit: ancilla });
    }
    out
}

/// `c` on `n + 1` qubits with the ancilla prepared as `(|0⟩ + e^{iφ}|1⟩)/√2`,
/// the given insertions `(gate_index, gates)` placed before their gates
/// (`None`: after the last gate) and `V` applied to the ancilla at the end.
fn ancilla_circuit(
    c: &ParametrizedCircuit,
    phase: f64,
    insertions: &[(Option<usize>, Vec<Gate>)],
    v: AncillaBasis,
) -> Result<ParametrizedCircuit> {
    let n = c.n_qubits();
    let initial = match c.initial() {
        InitialState::Basis(b) => InitialState::Basis(*b),
        InitialState::Vector(s) => {
            let mut amps = s.amplitudes().to_vec();
            amps.resize(2 << n, Complex64::default());
            InitialState::Vector(StateVector::from_amplitudes(amps)?)
        }
    };
    let mut out = ParametrizedCircuit::new(n + 1, c.param_names().to_vec(), initial)?;
    out.push(Gate::H { qubit: n })?;
    out.push(Gate::Phase { qubit: n, lambda: phase })?;
    let place = |at: Option<usize>, out: &mut ParametrizedCircuit| -> Result<()> {
        for (k, gates) in insertions {
            if *k == at {
                for g in gates {
                    out.push(g.clone())?;
                }
            }
        }
        Ok(())
    };
    for (k, g) in c.gates().iter().enumerate() {
        place(Some(k), &mut out)?;
        out.push(g.clone())?;
    }
    place(None, &mut out)?;
    out.push(v.gate(n))?;
    Ok(out)
}

/// Ancilla circuit whose `⟨Z_a ⊗ O⟩` gives one derivative term of `C^±`.
pub fn c_term_circuit(c: &ParametrizedCircuit, i: usize, term: usize, v: AncillaBasis) -> Result<ParametrizedCircuit> {
    let terms = derivative_terms(c, i)?;
    let t = terms
        .get(term)
        .ok_or_else(|| Error::InvalidArgument(format!("parameter {i} has {} derivative terms", terms.len())))?;
    let ins = insertion(&t.lcu, c.n_qubits(), false);
    ancilla_circuit(c, t.lcu.scale.arg(), &[(t.gate_index, ins)], v)
}

/// Expectation estimation setting.
#[derive(Debug, Clone)]
pub enum EvalMode {
    /// exact state-vector expectation values
    Sv,
    /// `shots` per measured Pauli string, seeds derived from `seed`
    Shots {
        shots: u64,
        seed: u64,
        readout: Option<ReadoutSetup>,
    },
}

fn z_ancilla_times(op: &PauliSum) -> PauliSum {
    let n = op.n_qubits();
    let mut out = PauliSum::zero(n + 1);
    for (s, c) in op.iter() {
        out.add_term(PauliString::new(s.x, s.z | 1 << n), *c);
    }
    out
}

fn measure(psi: &StateVector, obs: &PauliSum, mode: &EvalMode, path: &[u64]) -> Result<Estimate> {
    match mode {
        EvalMode::Sv => Ok(Estimate {
            value: expectation(psi, obs)?.re,
            std_error: 0.0,
        }),
        EvalMode::Shots { shots, seed, readout } => {
            let seed = derive_seed(*seed, path);
            match readout.as_ref() {
                // register narrower than the readout model: idle ancillas read out in |0⟩
                Some(r) if r.model.n_qubits() > psi.n_qubits() => {
                    let m = r.model.n_qubits();
                    let mut amps = psi.amplitudes().to_vec();
                    amps.resize(1 << m, Complex64::default());
                    let mut wide = PauliSum::zero(m);
                    for (s, c) in obs.iter() {
                        wide.add_term(*s, *c);
                    }
                    estimate_expectation(&StateVector::from_amplitudes(amps)?, &wide, *shots, seed, Some(r))
                }
                r => estimate_expectation(psi, obs, *shots, seed, r),
            }
        }
    }
}

fn combine(parts: impl IntoIterator<Item = (f64, Estimate)>) -> Estimate {
    let (mut value, mut var) = (0.0, 0.0);
    for (w, e) in parts {
        value += w * e.value;
        var += (w * e.std_error).powi(2);
    }
    Estimate {
        value,
        std_error: var.sqrt(),
    }
}

/// `C^+_i = 2 Re⟨∂_iΦ|H⁺|Φ⟩` from the `V = H` ancilla circuits.
pub fn c_plus(c: &ParametrizedCircuit, theta: &[f64], i: usize, h_plus: &PauliSum, mode: &EvalMode) -> Result<Estimate> {
    if !h_plus.is_hermitian(HERMITIAN_TOL) {
        return Err(Error::MisroutedSplit("Hermitian branch given a non-Hermitian operator".into()));
    }
    branch(c, theta, i, &z_ancilla_times(h_plus), AncillaBasis::Hadamard, 2.0, mode, 0)
}

/// `C^-_i = 2 Re⟨∂_iΦ|H⁻|Φ⟩`, measuring the Hermitian `i·H⁻` after the
/// `V = RX(π/2)` ancilla rotation.
pub fn c_minus(c: &ParametrizedCircuit, theta: &[f64], i: usize, h_minus: &PauliSum, mode: &EvalMode) -> Result<Estimate> {
    if !h_minus.is_anti_hermitian(HERMITIAN_TOL) {
        return Err(Error::MisroutedSplit("anti-Hermitian branch given a non-anti-Hermitian operator".into()));
    }
    let obs = z_ancilla_times(&h_minus.scale(Complex64::new(0.0, 1.0)));
    branch(c, theta, i, &obs, AncillaBasis::RxHalfPi, -2.0, mode, 1)
}

#[allow(clippy::too_many_arguments)]
fn branch(
    c: &ParametrizedCircuit,
    theta: &[f64],
    i: usize,
    obs: &PauliSum,
    v: AncillaBasis,
    factor: f64,
    mode: &EvalMode,
    tag: u64,
) -> Result<Estimate> {
    if obs.is_empty() {
        return Ok(Estimate {
            value: 0.0,
            std_error: 0.0,
        });
    }
    let terms = derivative_terms(c, i)?;
    let parts = terms
        .iter()
        .enumerate()
        .map(|(k, t)| {
            let circ = c_term_circuit(c, i, k, v)?;
            let psi = evolve(&circ, theta, &circ.initial_state())?;
            let e = measure(&psi, obs, mode, &[i as u64, k as u64, tag])?;
            Ok((factor * t.lcu.scale.norm(), e))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(combine(parts))
}

/// `C_i = Re⟨∂_iΦ|H|Φ⟩ = (C⁺_i + C⁻_i)/4` from the ancilla circuits.
pub fn c_element(c: &ParametrizedCircuit, theta: &[f64], i: usize, h: &PauliSum, mode: &EvalMode) -> Result<Estimate> {
    c.check_params(theta)?;
    let s = split(h)?;
    let p = c_plus(c, theta, i, &s.h_plus, mode)?;
    let m = c_minus(c, theta, i, &s.h_minus, mode)?;
    Ok(combine([(0.25, p), (0.25, m)]))
}

/// Hadamard-test circuit for `Re(e^{iβ}⟨χ_k|χ_l⟩)`, with the `k` insertion
/// anti-controlled and the `l` insertion controlled on the ancilla.
fn a_term_circuit(c: &ParametrizedCircuit, tk: &DerivativeTerm, tl: &DerivativeTerm) -> Result<ParametrizedCircuit> {
    let a = c.n_qubits();
    let beta = (tk.lcu.scale.conj() * tl.lcu.scale).arg();
    ancilla_circuit(
        c,
        beta,
        &[
            (tk.gate_index, insertion(&tk.lcu, a, true)),
            (tl.gate_index, insertion(&tl.lcu, a, false)),
        ],
        AncillaBasis::Hadamard,
    )
}

/// `A_ij = Re⟨∂_iΦ|∂_jΦ⟩` from Hadamard tests over all pairs of derivative terms.
pub fn a_element_hadamard(c: &ParametrizedCircuit, theta: &[f64], i: usize, j: usize, mode: &EvalMode) -> Result<Estimate> {
    c.check_params(theta)?;
    let (ti, tj) = (derivative_terms(c, i)?, derivative_terms(c, j)?);
    let z = PauliString::single(c.n_qubits(), Pauli::Z);
    let mut parts = Vec::new();
    for (k, tk) in ti.iter().enumerate() {
        for (l, tl) in tj.iter().enumerate() {
            let circ = a_term_circuit(c, tk, tl)?;
            let psi = evolve(&circ, theta, &circ.initial_state())?;
            let e = match mode {
                EvalMode::Sv => Estimate {
                    value: expectation(&psi, &PauliSum::from_term(psi.n_qubits(), z, Complex64::new(1.0, 0.0)))?.re,
                    std_error: 0.0,
                },
                EvalMode::Shots { shots, seed, readout } => estimate_pauli(
                    &psi,
                    &z,
                    *shots,
                    derive_seed(*seed, &[i as u64, j as u64, k as u64, l as u64]),
                    readout.as_ref(),
                )?,
            };
            parts.push((tk.lcu.scale.norm() * tl.lcu.scale.norm(), e));
        }
    }
    Ok(combine(parts))
}

/// `A_ij`: SV mode from derivative states, shot mode from Hadamard tests.
pub fn a_element(c: &ParametrizedCircuit, theta: &[f64], i: usize, j: usize, mode: &EvalMode) -> Result<Estimate> {
    match mode {
        EvalMode::Sv => {
            if i >= c.n_params() || j >= c.n_params() {
                return Err(Error::InvalidArgument(format!(
                    "indices ({i}, {j}) out of range for {} parameters",
                    c.n_params()
                )));
            }
            let (_, d) = state_and_derivatives(c, theta, &c.initial_state())?;
            Ok(Estimate {
                value: inner(&d[i], &d[j]).re,
                std_error: 0.0,
            })
        }
        EvalMode::Shots { .. } => a_element_hadamard(c, theta, i, j, mode),
    }
}

/// Single-term reference circuit: `Re(coeff·⟨∂_iΦ|P|Φ⟩)` with the Hamiltonian
/// term itself applied controlled on the ancilla. Cost grows with every
/// Hamiltonian term, so it only serves as a cross-check.
pub fn w1_reference(c: &ParametrizedCircuit, theta: &[f64], i: usize, p: &PauliString, coeff: Complex64) -> Result<f64> {
    c.check_params(theta)?;
    let a = c.n_qubits();
    let z = PauliSum::from_term(a + 1, PauliString::single(a, Pauli::Z), Complex64::new(1.0, 0.0));
    let mut total = 0.0;
    // Re(coeff s* ⟨χ|P|Φ⟩) = Re(coeff* s ⟨Φ|P|χ⟩): branch 0 carries PΦ, branch 1 carries χ
    for t in derivative_terms(c, i)? {
        let w = coeff.conj() * t.lcu.scale;
        let mut ins = vec![(t.gate_index, insertion(&t.lcu, a, false))];
        let mut anti = vec![Gate::X { qubit: a }, Gate::ControlledPauli { control: a, pauli: *p }];
        anti.push(Gate::X { qubit: a });
        ins.push((None, anti));
        let circ = ancilla_circuit(c, w.arg(), &ins, AncillaBasis::Hadamard)?;
        let psi = evolve(&circ, theta, &circ.initial_state())?;
        total += w.norm() * expectation(&psi, &z)?.re;
    }
    Ok(total)
}

/// State, energy, metric and gradient at one parameter point.
#[derive(Debug, Clone)]
pub struct GradientData {
    pub state: StateVector,
    pub energy: Complex64,
    pub a: DMatrix<f64>,
    pub c: DVector<f64>,
}

/// `A` and `C` by direct contraction of the analytic derivative states.
pub fn direct_gradient(c: &ParametrizedCircuit, theta: &[f64], h: &SparseOperator) -> Result<GradientData> {
    let (state, d) = state_and_derivatives(c, theta, &c.initial_state())?;
    Ok(contract(state, &d, h))
}

fn contract(state: StateVector, d: &[Vec<Complex64>], h: &SparseOperator) -> GradientData {
    let hpsi = h.apply(state.amplitudes());
    let energy = inner(state.amplitudes(), &hpsi);
    let p = d.len();
    let cvec = DVector::from_iterator(p, d.iter().map(|di| inner(di, &hpsi).re));
    let rows: Vec<Vec<f64>> = (0..p)
        .into_par_iter()
        .map(|i| (0..=i).map(|j| inner(&d[i], &d[j]).re).collect())
        .collect();
    let a = DMatrix::from_fn(p, p, |i, j| if j <= i { rows[i][j] } else { rows[j][i] });
    GradientData {
        state,
        energy,
        a,
        c: cvec,
    }
}

/// `Re⟨Φ|H|Φ⟩` and its gradient `2·C` without assembling `A`.
pub fn energy_gradient(c: &ParametrizedCircuit, theta: &[f64], h: &SparseOperator) -> Result<(f64, Vec<f64>)> {
    let (state, d) = state_and_derivatives(c, theta, &c.initial_state())?;
    let hpsi = h.apply(state.amplitudes());
    let energy = inner(state.amplitudes(), &hpsi).re;
    Ok((energy, d.iter().map(|di| 2.0 * inner(di, &hpsi).re).collect()))
}

/// [`direct_gradient`] with finite-difference derivative states.
pub fn direct_gradient_fd(c: &ParametrizedCircuit, theta: &[f64], h: &SparseOperator, step: f64) -> Result<GradientData> {
    let psi0 = c.initial_state();
    let state = evolve(c, theta, &psi0)?;
    let d = (0..c.n_params())
        .map(|i| derivative_state(c, theta, &psi0, i, DerivativeMethod::ForwardDifference(step)))
        .collect::<Result<Vec<_>>>()?;
    Ok(contract(state, &d, h))
}

/// `A` and `C` from ancilla circuits (`C`) and Hadamard tests (`A`), plus the
/// energy estimate `Re⟨Φ|H|Φ⟩` measured with the same mode.
pub fn circuit_gradient(c: &ParametrizedCircuit, theta: &[f64], h: &PauliSum, mode: &EvalMode) -> Result<GradientData> {
    let state = evolve(c, theta, &c.initial_state())?;
    let p = c.n_params();
    let s = split(h)?;
    let cvec = (0..p)
        .map(|i| {
            let plus = c_plus(c, theta, i, &s.h_plus, mode)?;
            let minus = c_minus(c, theta, i, &s.h_minus, mode)?;
            Ok(0.25 * (plus.value + minus.value))
        })
        .collect::<Result<Vec<f64>>>()?;
    let mut a = DMatrix::zeros(p, p);
    for i in 0..p {
        for j in 0..=i {
            let v = a_element(c, theta, i, j, mode)?.value;
            a[(i, j)] = v;
            a[(j, i)] = v;
        }
    }
    let energy = match mode {
        EvalMode::Sv => expectation(&state, h)?,
        EvalMode::Shots { .. } => {
            let herm = s.h_plus.scale(Complex64::new(0.5, 0.0));
            Complex64::new(measure(&state, &herm, mode, &[u64::MAX])?.value, 0.0)
        }
    };
    Ok(GradientData {
        state,
        energy,
        a,
        c: DVector::from_vec(cvec),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuits::build_ry_ansatz;
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn hermitian_input_has_no_minus_part() {
        let h = PauliSum::from_letters([("XZ", c(0.3, 0.0)), ("YY", c(-1.0, 0.0))]).unwrap();
        let s = split(&h).unwrap();
        assert!(s.h_minus.is_empty());
        assert_eq!(s.h_plus, h.scale(c(2.0, 0.0)));
    }

    #[test]
    fn anti_hermitian_input() {
        let h = PauliSum::from_letters([("X", c(0.0, 1.0))]).unwrap();
        let s = split(&h).unwrap();
        assert!(s.h_plus.is_empty());
        assert_eq!(s.h_minus, PauliSum::from_letters([("X", c(0.0, 2.0))]).unwrap());
    }

    #[test]
    fn misrouted_split_is_rejected() {
        let circ = build_ry_ansatz(2, 1).unwrap();
        let theta = vec![0.1; circ.n_params()];
        let herm = PauliSum::from_letters([("ZZ", c(1.0, 0.0))]).unwrap();
        let anti = herm.scale(c(0.0, 1.0));
        assert!(matches!(c_plus(&circ, &theta, 0, &anti, &EvalMode::Sv), Err(Error::MisroutedSplit(_))));
        assert!(matches!(c_minus(&circ, &theta, 0, &herm, &EvalMode::Sv), Err(Error::MisroutedSplit(_))));
    }

    #[test]
    fn ry_and_rz_lcu() {
        let ry = lcu_gate_derivative(&Gate::Ry { qubit: 0, angle: Angle::param(0) }).unwrap();
        assert_eq!(ry.scale, c(0.0, -0.5));
        assert_eq!(ry.ops, vec![LcuOp::Controlled(PauliString::single(0, Pauli::Y))]);
        let rz = lcu_gate_derivative(&Gate::Rz { qubit: 1, angle: Angle::param(0) }).unwrap();
        assert_eq!(rz.ops, vec![LcuOp::Controlled(PauliString::single(1, Pauli::Z))]);
        assert!(lcu_gate_derivative(&Gate::H { qubit: 0 }).is_err());
        assert!(lcu_gate_derivative(&Gate::Ry { qubit: 0, angle: Angle::Fixed(0.2) }).is_err());
    }

    fn fd_gate_derivative(g: &Gate, theta: f64, n: usize) -> DMatrix<Complex64> {
        let h = 1e-6;
        let p = register_matrix(std::slice::from_ref(g), &[theta + h], n).unwrap();
        let m = register_matrix(std::slice::from_ref(g), &[theta - h], n).unwrap();
        (p - m) / c(2.0 * h, 0.0)
    }

    #[test]
    fn lcu_reconstructs_gate_derivatives() {
        let (x, _) = PauliString::parse("XYZ").unwrap();
        let gates = [
            Gate::Ry { qubit: 0, angle: Angle::param(0) },
            Gate::Rx { qubit: 1, angle: Angle::Param { index: 0, scale: -0.5 } },
            Gate::Rz { qubit: 0, angle: Angle::param(0) },
            Gate::U3 { qubit: 1, theta: Angle::param(0), phi: 0.4, lambda: -1.1 },
            Gate::PauliExp { pauli: x, angle: Angle::Param { index: 0, scale: 0.5 } },
        ];
        for g in &gates {
            let lcu = lcu_gate_derivative(g).unwrap();
            let exact = lcu.derivative_matrix(g, &[0.7], 3).unwrap();
            let fd = fd_gate_derivative(g, 0.7, 3);
            assert!((exact - fd).iter().all(|z| z.norm() < 1e-9), "{g:?}");
        }
    }

    #[test]
    fn single_ry_metric_is_quarter() {
        let mut circ = ParametrizedCircuit::new(1, vec!["a".into()], InitialState::Basis(0)).unwrap();
        circ.push(Gate::Ry { qubit: 0, angle: Angle::param(0) }).unwrap();
        for t in [0.0, 0.8, 2.5] {
            let sv = a_element(&circ, &[t], 0, 0, &EvalMode::Sv).unwrap().value;
            let had = a_element_hadamard(&circ, &[t], 0, 0, &EvalMode::Sv).unwrap().value;
            assert!((sv - 0.25).abs() < 1e-14);
            assert!((had - 0.25).abs() < 1e-14);
        }
    }

    #[test]
    fn hermitian_c_matches_direct_contraction() {
        let circ = build_ry_ansatz(3, 1).unwrap();
        let h = PauliSum::from_letters([("ZZI", c(0.7, 0.0)), ("XIX", c(-0.3, 0.0)), ("IYY", c(0.2, 0.0))]).unwrap();
        let theta: Vec<f64> = (0..circ.n_params()).map(|k| 0.3 + 0.17 * k as f64).collect();
        let g = direct_gradient(&circ, &theta, &h.to_sparse()).unwrap();
        for i in 0..circ.n_params() {
            let v = c_element(&circ, &theta, i, &h, &EvalMode::Sv).unwrap().value;
            assert!((v - g.c[i]).abs() < 1e-10, "C_{i}: {v} vs {}", g.c[i]);
        }
    }

    #[test]
    fn w1_matches_single_term() {
        let circ = build_ry_ansatz(2, 1).unwrap();
        let theta = [0.3, -0.4, 1.1, 0.5, 0.2];
        let (p, _) = PauliString::parse("XZ").unwrap();
        let coeff = c(0.4, -0.9);
        let h = PauliSum::from_term(2, p, coeff);
        let g = direct_gradient(&circ, &theta, &h.to_sparse()).unwrap();
        for i in 0..circ.n_params() {
            let v = w1_reference(&circ, &theta, i, &p, coeff).unwrap();
            assert!((v - g.c[i]).abs() < 1e-12);
        }
    }

    proptest! {
        #[test]
        fn split_reconstructs(coeffs in prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 16)) {
            let letters = ["I", "X", "Y", "Z"];
            let items: Vec<(String, Complex64)> = coeffs
                .iter()
                .enumerate()
                .map(|(k, (re, im))| (format!("{}{}", letters[k % 4], letters[k / 4]), c(*re, *im)))
                .collect();
            let h = PauliSum::from_letters(items.iter().map(|(s, v)| (s.as_str(), *v))).unwrap();
            let s = split(&h).unwrap();
            prop_assert!(s.h_plus.is_hermitian(1e-14));
            prop_assert!(s.h_minus.is_anti_hermitian(1e-14));
            prop_assert!(s.reconstruct().unwrap().max_abs_diff(&h).unwrap() < 1e-15);
            prop_assert!(split(&s.h_plus).unwrap().h_minus.is_empty());
            prop_assert!(split(&s.h_minus).unwrap().h_plus.is_empty());
        }
    }
}
