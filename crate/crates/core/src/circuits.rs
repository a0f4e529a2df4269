//! Gates, parametrised circuits and the two ansatz families: Trotterised
//! unitary coupled cluster (qUCCSD) and the hardware-efficient RY circuit.

use std::f64::consts::FRAC_1_SQRT_2;
use std::fmt::Write as _;
use std::sync::OnceLock;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::fermion::{jordan_wigner, FermionOperator, Ladder};
use crate::jastrow::ReferenceDeterminant;
use crate::lattice::{Lattice, Spin};
use crate::pauli::{apply_pauli_rotation, Pauli, PauliString, PauliSum};
use crate::state::StateVector;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// Gate angle: a constant, or `scale · θ[index]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Angle {
    Fixed(f64),
    Param { index: usize, scale: f64 },
}

impl Angle {
    pub fn param(index: usize) -> Self {
        Angle::Param { index, scale: 1.0 }
    }

    pub fn value(&self, theta: &[f64]) -> Result<f64> {
        match *self {
            Angle::Fixed(v) => Ok(v),
            Angle::Param { index, scale } => theta
                .get(index)
                .map(|t| scale * t)
                .ok_or(Error::UnboundParameter {
                    index,
                    available: theta.len(),
                }),
        }
    }

    pub fn param_index(&self) -> Option<usize> {
        match *self {
            Angle::Fixed(_) => None,
            Angle::Param { index, .. } => Some(index),
        }
    }

    fn scale(&self) -> f64 {
        match *self {
            Angle::Fixed(_) => 0.0,
            Angle::Param { scale, .. } => scale,
        }
    }

    fn describe(&self) -> String {
        match *self {
            Angle::Fixed(v) => format!("{v}"),
            Angle::Param { index, scale } if scale == 1.0 => format!("θ{index}"),
            Angle::Param { index, scale } => format!("{scale}·θ{index}"),
        }
    }
}

/// Circuit gates. Rotations follow `R_a(φ) = exp(−iφσ_a/2)`; `U3` is
/// `U(θ,φ,λ) = [[cos θ/2, −e^{iλ} sin θ/2], [e^{iφ} sin θ/2, e^{i(φ+λ)} cos θ/2]]`;
/// `PauliExp` is `exp(−i·angle·P)`.
#[derive(Debug, Clone, PartialEq)]
pub enum Gate {
    U3 { qubit: usize, theta: Angle, phi: f64, lambda: f64 },
    Rx { qubit: usize, angle: Angle },
    Ry { qubit: usize, angle: Angle },
    Rz { qubit: usize, angle: Angle },
    /// `diag(1, e^{iλ})`, i.e. `U(0, 0, λ)`
    Phase { qubit: usize, lambda: f64 },
    X { qubit: usize },
    H { qubit: usize },
    Cnot { control: usize, target: usize },
    /// Pauli string applied when the control qubit is 1
    ControlledPauli { control: usize, pauli: PauliString },
    PauliExp { pauli: PauliString, angle: Angle },
}

fn pauli_qubits(p: &PauliString) -> Vec<usize> {
    let mask = p.x | p.z;
    (0..64).filter(|q| mask >> q & 1 == 1).collect()
}

impl Gate {
    /// Qubits acted on; for controlled gates the control comes first.
    pub fn qubits(&self) -> Vec<usize> {
        match self {
            Gate::U3 { qubit, .. }
            | Gate::Rx { qubit, .. }
            | Gate::Ry { qubit, .. }
            | Gate::Rz { qubit, .. }
            | Gate::Phase { qubit, .. }
            | Gate::X { qubit }
            | Gate::H { qubit } => vec![*qubit],
            Gate::Cnot { control, target } => vec![*control, *target],
            Gate::ControlledPauli { control, pauli } => {
                let mut q = vec![*control];
                q.extend(pauli_qubits(pauli));
                q
            }
            Gate::PauliExp { pauli, .. } => pauli_qubits(pauli),
        }
    }

    pub fn angle(&self) -> Option<&Angle> {
        match self {
            Gate::U3 { theta, .. } => Some(theta),
            Gate::Rx { angle, .. } | Gate::Ry { angle, .. } | Gate::Rz { angle, .. } => Some(angle),
            Gate::PauliExp { angle, .. } => Some(angle),
            _ => None,
        }
    }

    pub fn param_index(&self) -> Option<usize> {
        self.angle().and_then(Angle::param_index)
    }

    /// `M` with `∂G/∂θ = G·M` for the parameter this gate depends on, as a
    /// weighted sum of Pauli strings.
    pub fn generator(&self) -> Option<(usize, Vec<(PauliString, Complex64)>)> {
        let index = self.param_index()?;
        let s = self.angle()?.scale();
        let half = c(0.0, -0.5 * s);
        let terms = match self {
            Gate::Rx { qubit, .. } => vec![(PauliString::single(*qubit, Pauli::X), half)],
            Gate::Ry { qubit, .. } => vec![(PauliString::single(*qubit, Pauli::Y), half)],
            Gate::Rz { qubit, .. } => vec![(PauliString::single(*qubit, Pauli::Z), half)],
            Gate::U3 { qubit, lambda, .. } => vec![
                (PauliString::single(*qubit, Pauli::X), half * lambda.sin()),
                (PauliString::single(*qubit, Pauli::Y), half * lambda.cos()),
            ],
            Gate::PauliExp { pauli, .. } => vec![(*pauli, c(0.0, -s))],
            _ => return None,
        };
        Some((index, terms.into_iter().filter(|(_, w)| w.norm() > 0.0).collect()))
    }

    fn describe(&self) -> String {
        match self {
            Gate::U3 { qubit, theta, phi, lambda } => {
                format!("U3({}, {phi}, {lambda}) q{qubit}", theta.describe())
            }
            Gate::Rx { qubit, angle } => format!("RX({}) q{qubit}", angle.describe()),
            Gate::Ry { qubit, angle } => format!("RY({}) q{qubit}", angle.describe()),
            Gate::Rz { qubit, angle } => format!("RZ({}) q{qubit}", angle.describe()),
            Gate::Phase { qubit, lambda } => format!("P({lambda}) q{qubit}"),
            Gate::X { qubit } => format!("X q{qubit}"),
            Gate::H { qubit } => format!("H q{qubit}"),
            Gate::Cnot { control, target } => format!("CNOT q{control} -> q{target}"),
            Gate::ControlledPauli { control, pauli } => {
                let n = pauli.max_qubit().map_or(1, |m| m + 1);
                format!("C-{} q{control}", pauli.to_letters(n))
            }
            Gate::PauliExp { pauli, angle } => {
                let n = pauli.max_qubit().map_or(1, |m| m + 1);
                format!("EXP(-i·{}·{})", angle.describe(), pauli.to_letters(n))
            }
        }
    }
}

fn single_qubit_matrix(g: &Gate, theta: &[f64]) -> Result<Option<[[Complex64; 2]; 2]>> {
    let m = match g {
        Gate::U3 { theta: t, phi, lambda, .. } => {
            let (s, co) = (0.5 * t.value(theta)?).sin_cos();
            [
                [c(co, 0.0), -Complex64::from_polar(s, *lambda)],
                [Complex64::from_polar(s, *phi), Complex64::from_polar(co, phi + lambda)],
            ]
        }
        Gate::Rx { angle, .. } => {
            let (s, co) = (0.5 * angle.value(theta)?).sin_cos();
            [[c(co, 0.0), c(0.0, -s)], [c(0.0, -s), c(co, 0.0)]]
        }
        Gate::Ry { angle, .. } => {
            let (s, co) = (0.5 * angle.value(theta)?).sin_cos();
            [[c(co, 0.0), c(-s, 0.0)], [c(s, 0.0), c(co, 0.0)]]
        }
        Gate::Rz { angle, .. } => {
            let a = 0.5 * angle.value(theta)?;
            [
                [Complex64::from_polar(1.0, -a), c(0.0, 0.0)],
                [c(0.0, 0.0), Complex64::from_polar(1.0, a)],
            ]
        }
        Gate::Phase { lambda, .. } => [
            [c(1.0, 0.0), c(0.0, 0.0)],
            [c(0.0, 0.0), Complex64::from_polar(1.0, *lambda)],
        ],
        Gate::X { .. } => [[c(0.0, 0.0), c(1.0, 0.0)], [c(1.0, 0.0), c(0.0, 0.0)]],
        Gate::H { .. } => {
            let h = c(FRAC_1_SQRT_2, 0.0);
            [[h, h], [h, -h]]
        }
        _ => return Ok(None),
    };
    Ok(Some(m))
}

/// Dense matrix of `g` on its own qubits ([`Gate::qubits`] order, first
/// qubit least significant).
pub fn gate_matrix(g: &Gate, theta: &[f64]) -> Result<DMatrix<Complex64>> {
    if let Some(m) = single_qubit_matrix(g, theta)? {
        return Ok(DMatrix::from_fn(2, 2, |r, k| m[r][k]));
    }
    let qubits = g.qubits();
    if qubits.len() > 10 {
        return Err(Error::RegisterTooLarge(qubits.len(), 10));
    }
    // act on a compact register and read off columns
    let n = qubits.len();
    let compact = remap(g, &qubits);
    let mut m = DMatrix::zeros(1 << n, 1 << n);
    for col in 0..1usize << n {
        let mut psi = StateVector::basis(n, col)?;
        apply_gate(&compact, theta, psi.amplitudes_mut())?;
        for (row, a) in psi.amplitudes().iter().enumerate() {
            m[(row, col)] = *a;
        }
    }
    Ok(m)
}

fn remap_string(p: &PauliString, qubits: &[usize]) -> PauliString {
    let mut x = 0;
    let mut z = 0;
    for (k, &q) in qubits.iter().enumerate() {
        x |= (p.x >> q & 1) << k;
        z |= (p.z >> q & 1) << k;
    }
    PauliString::new(x, z)
}

fn remap(g: &Gate, qubits: &[usize]) -> Gate {
    let pos = |q: usize| qubits.iter().position(|&x| x == q).expect("qubit in support");
    match g {
        Gate::Cnot { control, target } => Gate::Cnot {
            control: pos(*control),
            target: pos(*target),
        },
        Gate::ControlledPauli { control, pauli } => Gate::ControlledPauli {
            control: pos(*control),
            pauli: remap_string(pauli, qubits),
        },
        Gate::PauliExp { pauli, angle } => Gate::PauliExp {
            pauli: remap_string(pauli, qubits),
            angle: *angle,
        },
        other => other.clone(),
    }
}

fn apply_single(psi: &mut [Complex64], q: usize, m: &[[Complex64; 2]; 2]) {
    let bit = 1usize << q;
    for b in 0..psi.len() {
        if b & bit == 0 {
            let (a0, a1) = (psi[b], psi[b | bit]);
            psi[b] = m[0][0] * a0 + m[0][1] * a1;
            psi[b | bit] = m[1][0] * a0 + m[1][1] * a1;
        }
    }
}

/// Apply `g` in place.
pub fn apply_gate(g: &Gate, theta: &[f64], psi: &mut [Complex64]) -> Result<()> {
    let n = psi.len().trailing_zeros() as usize;
    if let Some(&q) = g.qubits().iter().find(|&&q| q >= n) {
        return Err(Error::InvalidArgument(format!(
            "gate on qubit {q} applied to a {n}-qubit state"
        )));
    }
    if let Some(m) = single_qubit_matrix(g, theta)? {
        apply_single(psi, g.qubits()[0], &m);
        return Ok(());
    }
    match g {
        Gate::Cnot { control, target } => {
            let (cb, tb) = (1usize << control, 1usize << target);
            for b in 0..psi.len() {
                if b & cb != 0 && b & tb == 0 {
                    psi.swap(b, b | tb);
                }
            }
        }
        Gate::ControlledPauli { control, pauli } => {
            let cb = 1usize << control;
            let x = pauli.x as usize;
            for b in 0..psi.len() {
                if b & cb == 0 {
                    continue;
                }
                let b2 = b ^ x;
                if b2 < b {
                    continue;
                }
                let (ph1, _) = pauli.act(b);
                if b2 == b {
                    psi[b] *= ph1;
                } else {
                    let (ph2, _) = pauli.act(b2);
                    let (a, a2) = (psi[b], psi[b2]);
                    psi[b2] = ph1 * a;
                    psi[b] = ph2 * a2;
                }
            }
        }
        Gate::PauliExp { pauli, angle } => apply_pauli_rotation(psi, pauli, angle.value(theta)?),
        _ => unreachable!("single-qubit gates handled above"),
    }
    Ok(())
}

/// Gate sequence equal to `exp(−i·angle·P)`: basis changes onto Z (H for X,
/// RX(π/2) for Y), a CNOT staircase, RZ(2·angle) on the last qubit, and the
/// mirror image.
pub fn decompose_pauli_exp(pauli: &PauliString, angle: Angle) -> Vec<Gate> {
    let qubits = pauli_qubits(pauli);
    if qubits.is_empty() {
        return Vec::new();
    }
    let twice = match angle {
        Angle::Fixed(v) => Angle::Fixed(2.0 * v),
        Angle::Param { index, scale } => Angle::Param {
            index,
            scale: 2.0 * scale,
        },
    };
    let mut pre = Vec::new();
    let mut post = Vec::new();
    for &q in &qubits {
        match pauli.letter(q) {
            Pauli::X => {
                pre.push(Gate::H { qubit: q });
                post.push(Gate::H { qubit: q });
            }
            Pauli::Y => {
                pre.push(Gate::Rx { qubit: q, angle: Angle::Fixed(std::f64::consts::FRAC_PI_2) });
                post.push(Gate::Rx { qubit: q, angle: Angle::Fixed(-std::f64::consts::FRAC_PI_2) });
            }
            _ => {}
        }
    }
    let ladder: Vec<Gate> = qubits
        .windows(2)
        .map(|w| Gate::Cnot { control: w[0], target: w[1] })
        .collect();
    let mut out = pre;
    out.extend(ladder.iter().cloned());
    out.push(Gate::Rz {
        qubit: *qubits.last().expect("non-empty support"),
        angle: twice,
    });
    out.extend(ladder.into_iter().rev());
    out.extend(post);
    out
}

/// Initial state of an ansatz.
#[derive(Debug, Clone, PartialEq)]
pub enum InitialState {
    Basis(usize),
    Vector(StateVector),
}

/// Excitation `occupied → virtual` from a reference determinant.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub struct Excitation {
    pub occupied: Vec<usize>,
    pub virtuals: Vec<usize>,
}

impl Excitation {
    /// `T − T†` with `T = a†_{v0} (a†_{v1}) (a_{o1}) a_{o0}`.
    pub fn generator(&self, n_modes: usize) -> Result<FermionOperator> {
        let mut ops: Vec<Ladder> = self.virtuals.iter().map(|&v| Ladder::create(v)).collect();
        ops.extend(self.occupied.iter().rev().map(|&o| Ladder::annihilate(o)));
        let t = FermionOperator::from_product(n_modes, &ops, c(1.0, 0.0))?;
        t.sub(&t.adjoint())
    }

    pub fn label(&self) -> String {
        let j = |v: &[usize]| v.iter().map(|m| m.to_string()).collect::<Vec<_>>().join(",");
        format!("{}->{}", j(&self.occupied), j(&self.virtuals))
    }
}

/// Spin-conserving single and double excitations of a reference: singles
/// first, then doubles, each in lexicographic `(occupied, virtual)` order.
pub fn excitations(lat: &Lattice, reference: &ReferenceDeterminant) -> Vec<Excitation> {
    let (occ_u, vir_u) = reference.split_spin(lat, Spin::Up);
    let (occ_d, vir_d) = reference.split_spin(lat, Spin::Down);
    let mut singles = Vec::new();
    for (occ, vir) in [(&occ_u, &vir_u), (&occ_d, &vir_d)] {
        for &o in occ {
            for &v in vir {
                singles.push(Excitation {
                    occupied: vec![o],
                    virtuals: vec![v],
                });
            }
        }
    }
    let pairs = |a: &[usize], b: &[usize], same: bool| -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for &x in a {
            for &y in b {
                if !same || x < y {
                    out.push((x, y));
                }
            }
        }
        out
    };
    let mut doubles = Vec::new();
    for (occ_pairs, vir_pairs) in [
        (pairs(&occ_u, &occ_u, true), pairs(&vir_u, &vir_u, true)),
        (pairs(&occ_d, &occ_d, true), pairs(&vir_d, &vir_d, true)),
        (pairs(&occ_u, &occ_d, false), pairs(&vir_u, &vir_d, false)),
    ] {
        for &(o1, o2) in &occ_pairs {
            for &(v1, v2) in &vir_pairs {
                doubles.push(Excitation {
                    occupied: vec![o1, o2],
                    virtuals: vec![v1, v2],
                });
            }
        }
    }
    singles.sort();
    doubles.sort();
    singles.extend(doubles);
    singles
}

/// Ordered gate list over named parameters. When the circuit tracks a global
/// phase, the last parameter `θ_g` multiplies the output by `e^{iθ_g}`.
#[derive(Debug, Clone)]
pub struct ParametrizedCircuit {
    n_qubits: usize,
    gates: Vec<Gate>,
    names: Vec<String>,
    global_phase: bool,
    initial: InitialState,
    description: String,
    schedule: OnceLock<Vec<Step>>,
}

impl ParametrizedCircuit {
    pub fn new(n_qubits: usize, names: Vec<String>, initial: InitialState) -> Result<Self> {
        if n_qubits == 0 || n_qubits > 30 {
            return Err(Error::RegisterTooLarge(n_qubits, 30));
        }
        if let InitialState::Vector(v) = &initial {
            if v.n_qubits() != n_qubits {
                return Err(Error::SizeMismatch {
                    expected: n_qubits,
                    got: v.n_qubits(),
                });
            }
        }
        Ok(Self {
            n_qubits,
            gates: Vec::new(),
            names,
            global_phase: false,
            initial,
            description: String::new(),
            schedule: OnceLock::new(),
        })
    }

    pub fn push(&mut self, g: Gate) -> Result<()> {
        if let Some(&q) = g.qubits().iter().find(|&&q| q >= self.n_qubits) {
            return Err(Error::InvalidArgument(format!(
                "gate on qubit {q} in a {}-qubit circuit",
                self.n_qubits
            )));
        }
        if let Some(i) = g.param_index() {
            if i >= self.names.len() {
                return Err(Error::UnboundParameter {
                    index: i,
                    available: self.names.len(),
                });
            }
        }
        self.gates.push(g);
        self.schedule = OnceLock::new();
        Ok(())
    }

    /// Append the global-phase parameter `θ_g` as the last parameter.
    pub fn with_global_phase(mut self) -> Self {
        if !self.global_phase {
            self.names.push("theta_g".into());
            self.global_phase = true;
        }
        self
    }

    pub fn with_initial_state(mut self, initial: InitialState) -> Result<Self> {
        if let InitialState::Vector(v) = &initial {
            if v.n_qubits() != self.n_qubits {
                return Err(Error::SizeMismatch {
                    expected: self.n_qubits,
                    got: v.n_qubits(),
                });
            }
        }
        self.initial = initial;
        Ok(self)
    }

    /// Prepend X gates turning `|0…0⟩` into the basis state `index`.
    pub fn with_basis_preparation(mut self, index: usize) -> Self {
        let xs = (0..self.n_qubits)
            .filter(|q| index >> q & 1 == 1)
            .map(|qubit| Gate::X { qubit });
        self.gates.splice(0..0, xs);
        self.initial = InitialState::Basis(0);
        self.schedule = OnceLock::new();
        self
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn gates(&self) -> &[Gate] {
        &self.gates
    }

    /// Execution plan, built on first use: runs of consecutive Pauli
    /// rotations on one parameter whose joint generator pairs basis states
    /// (every qUCCSD excitation) become a single [`PairRotation`].
    pub fn schedule(&self) -> &[Step] {
        self.schedule.get_or_init(|| build_schedule(&self.gates, self.n_qubits))
    }

    pub fn param_names(&self) -> &[String] {
        &self.names
    }

    /// All parameters, including the global phase when present.
    pub fn n_params(&self) -> usize {
        self.names.len()
    }

    /// Ansatz parameters only.
    pub fn n_ansatz_params(&self) -> usize {
        self.names.len() - usize::from(self.global_phase)
    }

    pub fn global_phase_index(&self) -> Option<usize> {
        self.global_phase.then(|| self.names.len() - 1)
    }

    pub fn initial(&self) -> &InitialState {
        &self.initial
    }

    pub fn initial_state(&self) -> StateVector {
        match &self.initial {
            InitialState::Basis(i) => StateVector::basis(self.n_qubits, *i).expect("validated basis index"),
            InitialState::Vector(v) => v.clone(),
        }
    }

    /// Free-form note recorded in run metadata (e.g. generator ordering).
    pub fn description(&self) -> &str {
        &self.description
    }

    pub fn check_params(&self, theta: &[f64]) -> Result<()> {
        if theta.len() != self.n_params() {
            return Err(Error::SizeMismatch {
                expected: self.n_params(),
                got: theta.len(),
            });
        }
        Ok(())
    }

    /// Gate list with parameter names, one gate per line.
    pub fn summary(&self) -> String {
        let mut out = format!(
            "{} qubits, {} gates, {} parameters{}\n",
            self.n_qubits,
            self.gates.len(),
            self.n_params(),
            if self.global_phase { " (last is the global phase)" } else { "" }
        );
        for (k, g) in self.gates.iter().enumerate() {
            let name = g.param_index().map(|i| format!("  [{}]", self.names[i])).unwrap_or_default();
            let _ = writeln!(out, "{k:5}  {}{name}", g.describe());
        }
        out
    }

    /// Number of gate layers when gates on disjoint qubits run in parallel.
    pub fn depth(&self) -> usize {
        let mut level = vec![0usize; self.n_qubits];
        for g in &self.gates {
            let qs = g.qubits();
            let d = qs.iter().map(|&q| level[q]).max().unwrap_or(0) + 1;
            for q in qs {
                level[q] = d;
            }
        }
        level.into_iter().max().unwrap_or(0)
    }

    /// Compile every `PauliExp` gate into basis changes, CNOTs and one RZ.
    pub fn decomposed(&self) -> Self {
        let mut out = self.clone();
        out.gates = self
            .gates
            .iter()
            .flat_map(|g| match g {
                Gate::PauliExp { pauli, angle } => decompose_pauli_exp(pauli, *angle),
                other => vec![other.clone()],
            })
            .collect();
        out.schedule = OnceLock::new();
        out
    }
}

/// One unit of circuit execution.
#[derive(Debug, Clone)]
pub enum Step {
    /// position in the gate list
    Gate(usize),
    Pairs(PairRotation),
}

/// `exp(θ·G)` for a run of commuting rotations `exp(−i·s_k·θ·P_k)` sharing
/// parameter `θ`, where `G = −i Σ s_k P_k` is real and sends each basis
/// state to at most one partner: `G|b⟩ = v|b'⟩`, `G|b'⟩ = −v|b⟩`. Basis
/// states outside the pairs are left alone.
#[derive(Debug, Clone)]
pub struct PairRotation {
    pub index: usize,
    pub gates: std::ops::Range<usize>,
    pairs: Vec<(usize, usize, f64)>,
}

impl PairRotation {
    fn build(gates: &[Gate], range: std::ops::Range<usize>, n_qubits: usize) -> Option<Self> {
        let mut terms = Vec::new();
        let mut index = None;
        for g in &gates[range.clone()] {
            match g {
                Gate::PauliExp {
                    pauli,
                    angle: Angle::Param { index: i, scale },
                } => {
                    index = Some(*i);
                    terms.push((*pauli, c(0.0, -scale)));
                }
                _ => return None,
            }
        }
        let dim = 1usize << n_qubits;
        let mut image: Vec<Option<(usize, f64)>> = vec![None; dim];
        let mut acc: Vec<(usize, Complex64)> = Vec::new();
        for (b, slot) in image.iter_mut().enumerate() {
            acc.clear();
            for (p, w) in &terms {
                let (ph, t) = p.act(b);
                match acc.iter_mut().find(|(u, _)| *u == t) {
                    Some((_, a)) => *a += w * ph,
                    None => acc.push((t, w * ph)),
                }
            }
            acc.retain(|(_, a)| a.norm() > 1e-12);
            match acc.as_slice() {
                [] => {}
                [(t, a)] if *t != b && a.im.abs() < 1e-12 => *slot = Some((*t, a.re)),
                _ => return None,
            }
        }
        let mut pairs = Vec::new();
        for (b, slot) in image.iter().enumerate() {
            if let Some((t, v)) = *slot {
                match image[t] {
                    Some((back, w)) if back == b && (w + v).abs() < 1e-12 => {}
                    _ => return None,
                }
                if b < t {
                    pairs.push((b, t, v));
                }
            }
        }
        Some(Self {
            index: index?,
            gates: range,
            pairs,
        })
    }

    pub fn n_pairs(&self) -> usize {
        self.pairs.len()
    }

    pub fn apply(&self, theta: f64, psi: &mut [Complex64]) {
        for &(b, t, v) in &self.pairs {
            let (s, co) = (v * theta).sin_cos();
            let (a, a2) = (psi[b], psi[t]);
            psi[b] = a * co - a2 * s;
            psi[t] = a2 * co + a * s;
        }
    }

    /// `G·ψ`
    pub fn generator(&self, psi: &[Complex64]) -> Vec<Complex64> {
        let mut out = vec![Complex64::default(); psi.len()];
        for &(b, t, v) in &self.pairs {
            out[t] += psi[b] * v;
            out[b] -= psi[t] * v;
        }
        out
    }
}

fn build_schedule(gates: &[Gate], n_qubits: usize) -> Vec<Step> {
    let run_index = |g: &Gate| match g {
        Gate::PauliExp {
            angle: Angle::Param { index, .. },
            ..
        } => Some(*index),
        _ => None,
    };
    let mut out = Vec::new();
    let mut k = 0;
    while k < gates.len() {
        let Some(i) = run_index(&gates[k]) else {
            out.push(Step::Gate(k));
            k += 1;
            continue;
        };
        let mut end = k + 1;
        while end < gates.len() && run_index(&gates[end]) == Some(i) {
            end += 1;
        }
        let commuting = (k..end).all(|a| (a + 1..end).all(|b| pauli_of(&gates[a]).commutes_with(&pauli_of(&gates[b]))));
        match commuting.then(|| PairRotation::build(gates, k..end, n_qubits)).flatten() {
            Some(r) => out.push(Step::Pairs(r)),
            None => out.extend((k..end).map(Step::Gate)),
        }
        k = end;
    }
    out
}

fn pauli_of(g: &Gate) -> PauliString {
    match g {
        Gate::PauliExp { pauli, .. } => *pauli,
        _ => unreachable!("runs hold only Pauli rotations"),
    }
}

/// Trotterised UCCSD: per layer, one parameter per spin-conserving
/// excitation of `reference`, each generator `θ(T − T†)` compiled into
/// commuting Pauli-string exponentials that share the parameter. The
/// returned circuit starts from the reference basis state and carries the
/// global-phase parameter.
pub fn build_quccsd(lat: &Lattice, reference: &ReferenceDeterminant, n_layers: usize) -> Result<ParametrizedCircuit> {
    if reference.n_qubits() != lat.n_modes() {
        return Err(Error::SizeMismatch {
            expected: lat.n_modes(),
            got: reference.n_qubits(),
        });
    }
    if n_layers == 0 {
        return Err(Error::InvalidArgument("qUCCSD needs at least one layer".into()));
    }
    let exc = excitations(lat, reference);
    let compiled: Vec<PauliSum> = exc
        .iter()
        .map(|e| Ok(jordan_wigner(&e.generator(lat.n_modes())?)))
        .collect::<Result<_>>()?;
    let mut names = Vec::new();
    for layer in 0..n_layers {
        names.extend(exc.iter().map(|e| format!("l{layer}:{}", e.label())));
    }
    let mut circ = ParametrizedCircuit::new(
        lat.n_modes(),
        names,
        InitialState::Basis(reference.as_basis_index()),
    )?;
    for layer in 0..n_layers {
        for (k, gen) in compiled.iter().enumerate() {
            let index = layer * exc.len() + k;
            // θ·Σ i c_s P_s = −i Σ (−c_s θ) P_s, with real c_s
            for (s, coeff) in gen.iter() {
                debug_assert!(coeff.re.abs() < 1e-12, "anti-Hermitian generator");
                circ.push(Gate::PauliExp {
                    pauli: *s,
                    angle: Angle::Param {
                        index,
                        scale: -coeff.im,
                    },
                })?;
            }
        }
    }
    circ.description = format!(
        "qUCCSD, {n_layers} layer(s), {} excitations per layer; singles then doubles, lexicographic (occupied, virtual); reference {}",
        exc.len(),
        reference.bitstring()
    );
    Ok(circ.with_global_phase())
}

/// Hardware-efficient RY ansatz: `n_layers` blocks of an RY layer followed by
/// the CNOT chain `CNOT(i, i+1)`, closed by a final RY layer, giving
/// `n_qubits·(n_layers+1)` rotation parameters plus the global phase.
pub fn build_ry_ansatz(n_qubits: usize, n_layers: usize) -> Result<ParametrizedCircuit> {
    if n_qubits < 2 {
        return Err(Error::InvalidArgument("the RY ansatz needs at least two qubits".into()));
    }
    let names = (0..=n_layers)
        .flat_map(|l| (0..n_qubits).map(move |q| format!("ry{l}_{q}")))
        .collect();
    let mut circ = ParametrizedCircuit::new(n_qubits, names, InitialState::Basis(0))?;
    for l in 0..=n_layers {
        for q in 0..n_qubits {
            circ.push(Gate::Ry {
                qubit: q,
                angle: Angle::param(l * n_qubits + q),
            })?;
        }
        if l < n_layers {
            for q in 0..n_qubits - 1 {
                circ.push(Gate::Cnot {
                    control: q,
                    target: q + 1,
                })?;
            }
        }
    }
    circ.description = format!("RY ansatz, {n_layers} entangling layer(s), CNOT chain (i, i+1)");
    Ok(circ.with_global_phase())
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn schedule_matches_gate_by_gate() {
        let lat = Lattice::ring(4).unwrap();
        let fs = crate::jastrow::fermi_sea(&lat, 4).unwrap();
        let circ = build_quccsd(&lat, &fs, 1).unwrap();
        assert!(circ.schedule().iter().all(|s| matches!(s, Step::Pairs(_))));
        assert_eq!(circ.schedule().len(), 26);
        let theta: Vec<f64> = (0..circ.n_params()).map(|k| 0.1 + 0.37 * k as f64).collect();
        let mut a = circ.initial_state().into_amplitudes();
        let mut b = a.clone();
        for g in circ.gates() {
            apply_gate(g, &theta, &mut a).unwrap();
        }
        for s in circ.schedule() {
            match s {
                Step::Pairs(r) => r.apply(theta[r.index], &mut b),
                Step::Gate(k) => apply_gate(&circ.gates()[*k], &theta, &mut b).unwrap(),
            }
        }
        assert!(a.iter().zip(&b).all(|(x, y)| (x - y).norm() < 1e-12));
    }

    fn close(a: &DMatrix<Complex64>, b: &DMatrix<Complex64>, tol: f64) -> bool {
        (a - b).iter().all(|z| z.norm() < tol)
    }

    fn u3(theta: f64, phi: f64, lambda: f64) -> DMatrix<Complex64> {
        gate_matrix(
            &Gate::U3 {
                qubit: 0,
                theta: Angle::Fixed(theta),
                phi,
                lambda,
            },
            &[],
        )
        .unwrap()
    }

    #[test]
    fn u3_special_cases() {
        let x = gate_matrix(&Gate::X { qubit: 0 }, &[]).unwrap();
        assert!(close(&u3(PI, 0.0, PI), &x, 1e-15));
        let ry = gate_matrix(&Gate::Ry { qubit: 0, angle: Angle::Fixed(0.7) }, &[]).unwrap();
        assert!(close(&u3(0.7, 0.0, 0.0), &ry, 1e-15));
        let rz = gate_matrix(&Gate::Rz { qubit: 0, angle: Angle::Fixed(0.9) }, &[]).unwrap();
        assert!(close(&(u3(0.0, 0.0, 0.9) * Complex64::from_polar(1.0, -0.45)), &rz, 1e-15));
        let id = gate_matrix(&Gate::Ry { qubit: 0, angle: Angle::Fixed(0.0) }, &[]).unwrap();
        assert!(close(&id, &DMatrix::identity(2, 2), 1e-300));
    }

    #[test]
    fn rx_quarter_turn() {
        let m = gate_matrix(&Gate::Rx { qubit: 0, angle: Angle::Fixed(PI / 2.0) }, &[]).unwrap();
        let h = FRAC_1_SQRT_2;
        let want = DMatrix::from_row_slice(2, 2, &[c(h, 0.0), c(0.0, -h), c(0.0, -h), c(h, 0.0)]);
        assert!(close(&m, &want, 1e-15));
    }

    #[test]
    fn unbound_parameter_is_an_error() {
        let g = Gate::Ry { qubit: 0, angle: Angle::param(3) };
        assert!(matches!(gate_matrix(&g, &[0.1]), Err(Error::UnboundParameter { .. })));
    }

    #[test]
    fn gates_are_unitary() {
        let gates = [
            Gate::U3 { qubit: 0, theta: Angle::Fixed(0.3), phi: 1.1, lambda: -0.4 },
            Gate::Rx { qubit: 0, angle: Angle::Fixed(0.8) },
            Gate::Phase { qubit: 0, lambda: 0.5 },
            Gate::H { qubit: 0 },
            Gate::Cnot { control: 0, target: 1 },
            Gate::ControlledPauli { control: 2, pauli: PauliString::parse("XY").unwrap().0 },
            Gate::PauliExp { pauli: PauliString::parse("XZY").unwrap().0, angle: Angle::Fixed(0.37) },
        ];
        for g in gates {
            let m = gate_matrix(&g, &[]).unwrap();
            let d = m.nrows();
            assert!(close(&(m.adjoint() * &m), &DMatrix::identity(d, d), 1e-12), "{g:?}");
        }
    }

    #[test]
    fn cnot_matrix_in_local_order() {
        let m = gate_matrix(&Gate::Cnot { control: 0, target: 1 }, &[]).unwrap();
        // local index bit 0 = control: |01⟩ (control set) -> |11⟩
        assert_eq!(m[(3, 1)], c(1.0, 0.0));
        assert_eq!(m[(0, 0)], c(1.0, 0.0));
    }

    #[test]
    fn parameter_counts() {
        for (n, want) in [(2, 3), (4, 26), (6, 117)] {
            let lat = Lattice::ring(n).unwrap();
            let fs = crate::jastrow::fermi_sea(&lat, n).unwrap();
            for layers in [1, 2] {
                let circ = build_quccsd(&lat, &fs, layers).unwrap();
                assert_eq!(circ.n_ansatz_params(), want * layers);
                assert_eq!(circ.n_params(), want * layers + 1);
            }
        }
        assert_eq!(build_ry_ansatz(4, 1).unwrap().n_ansatz_params(), 8);
    }

    #[test]
    fn ry_depth_is_parameter_independent() {
        let c = build_ry_ansatz(4, 2).unwrap();
        assert_eq!(c.depth(), 8);
        assert!(c.summary().contains("CNOT q2 -> q3"));
    }

    #[test]
    fn basis_preparation_prepends_x_gates() {
        let c = build_ry_ansatz(4, 1).unwrap().with_basis_preparation(0b1010);
        assert_eq!(c.gates()[0], Gate::X { qubit: 1 });
        assert_eq!(c.gates()[1], Gate::X { qubit: 3 });
    }
}
