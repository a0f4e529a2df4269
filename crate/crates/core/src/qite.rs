//! Variational imaginary time evolution (McLachlan): per step solve
//! `A θ̇ = −C` with Tikhonov regularisation at the L-curve corner and take an
//! Euler step `θ ← θ + Δt θ̇`. Also a quasi-Newton VQE baseline for
//! Hermitian Hamiltonians.

use std::sync::Mutex;

use argmin::core::{CostFunction, Executor, Gradient, State};
use argmin::solver::linesearch::MoreThuenteLineSearch;
use argmin::solver::quasinewton::LBFGS;
use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::circuits::{build_quccsd, build_ry_ansatz, InitialState, ParametrizedCircuit};
use crate::error::{Error, Result};
use crate::fermion::jordan_wigner;
use crate::gradient::{circuit_gradient, direct_gradient, direct_gradient_fd, energy_gradient, EvalMode, GradientData};
use crate::jastrow::{fermi_sea, optimize_j, site_reference};
use crate::lattice::{build_gutzwiller, build_hubbard, build_tc, HubbardParams, Lattice, Representation};
use crate::oracle::{exact_ground_state, fidelity, noninteracting_real_space_state, tc_right_eigenvector, SectorBasis};
use crate::pauli::{PauliSum, SparseOperator};
use crate::simulator::{derive_seed, evolve, ReadoutModel, ReadoutSetup, StateVector};

/// Minimiser of `‖C + A x‖² + λ‖x‖²`, via the SVD of `A`.
pub fn tikhonov_solve(a: &DMatrix<f64>, c: &DVector<f64>, lambda: f64) -> Result<DVector<f64>> {
    TikhonovSystem::new(a, c)?.solve(lambda)
}

/// SVD of `A` and the projection of `C`, reused across many `λ`.
#[derive(Debug, Clone)]
pub struct TikhonovSystem {
    sigma: DVector<f64>,
    beta: DVector<f64>,
    v: DMatrix<f64>,
    /// squared norm of the part of `C` outside the range of `A`
    perp: f64,
}

impl TikhonovSystem {
    pub fn new(a: &DMatrix<f64>, c: &DVector<f64>) -> Result<Self> {
        if !a.is_square() || a.nrows() != c.len() {
            return Err(Error::InvalidArgument(format!(
                "A is {}x{} but C has {} entries",
                a.nrows(),
                a.ncols(),
                c.len()
            )));
        }
        if a.iter().chain(c.iter()).any(|x| !x.is_finite()) {
            return Err(Error::InvalidArgument("non-finite entries in A or C".into()));
        }
        let svd = a.clone().svd(true, true);
        let u = svd.u.expect("requested U");
        let v = svd.v_t.expect("requested Vᵀ").transpose();
        let beta = u.transpose() * c;
        let perp = (c.norm_squared() - beta.norm_squared()).max(0.0);
        Ok(Self {
            sigma: svd.singular_values,
            beta,
            v,
            perp,
        })
    }

    pub fn solve(&self, lambda: f64) -> Result<DVector<f64>> {
        if !(lambda >= 0.0) {
            return Err(Error::InvalidArgument(format!("regularisation λ must be non-negative, got {lambda}")));
        }
        let coef = DVector::from_iterator(
            self.sigma.len(),
            self.sigma.iter().zip(self.beta.iter()).map(|(&s, &b)| {
                let d = s * s + lambda;
                if d > 0.0 { -s * b / d } else { 0.0 }
            }),
        );
        Ok(&self.v * coef)
    }

    /// `(‖C + A x_λ‖², ‖x_λ‖²)`
    pub fn norms(&self, lambda: f64) -> (f64, f64) {
        let mut res = self.perp;
        let mut sol = 0.0;
        for (&s, &b) in self.sigma.iter().zip(self.beta.iter()) {
            let d = s * s + lambda;
            if d > 0.0 {
                res += (lambda * b / d).powi(2);
                sol += (s * b / d).powi(2);
            } else {
                res += b * b;
            }
        }
        (res, sol)
    }

    /// Curvature of `(log ‖residual‖, log ‖x‖)` against `log λ`; zero where
    /// the curve is degenerate.
    pub fn curvature(&self, log_lambda: f64) -> f64 {
        let h = 1e-4;
        let point = |t: f64| {
            let (r, s) = self.norms(t.exp());
            (0.5 * r.ln(), 0.5 * s.ln())
        };
        let (r0, s0) = point(log_lambda);
        let (rp, sp) = point(log_lambda + h);
        let (rm, sm) = point(log_lambda - h);
        let (r1, s1) = ((rp - rm) / (2.0 * h), (sp - sm) / (2.0 * h));
        let (r2, s2) = ((rp - 2.0 * r0 + rm) / (h * h), (sp - 2.0 * s0 + sm) / (h * h));
        let k = (r1 * s2 - r2 * s1) / (r1 * r1 + s1 * s1).powf(1.5);
        if k.is_finite() { k } else { 0.0 }
    }
}

/// Number of log-spaced samples scanned before refinement.
pub const L_CURVE_SAMPLES: usize = 31;

/// `λ` in `[λ_min, λ_max]` maximising the L-curve curvature: the best of
/// [`L_CURVE_SAMPLES`] log-spaced samples, refined by golden-section search
/// until the bracket in `log λ` is narrower than `termination`. Without any
/// positive curvature the curve has no corner and `λ_min` is returned.
pub fn l_curve_corner(a: &DMatrix<f64>, c: &DVector<f64>, range: (f64, f64), termination: f64) -> Result<f64> {
    let sys = TikhonovSystem::new(a, c)?;
    corner(&sys, range, termination)
}

fn corner(sys: &TikhonovSystem, (lo, hi): (f64, f64), termination: f64) -> Result<f64> {
    if !(lo > 0.0 && lo < hi && hi.is_finite()) {
        return Err(Error::InvalidArgument(format!("λ range [{lo}, {hi}] must satisfy 0 < λ_min < λ_max")));
    }
    if !(termination > 0.0) {
        return Err(Error::InvalidArgument("corner termination must be positive".into()));
    }
    let (tlo, thi) = (lo.ln(), hi.ln());
    let n = L_CURVE_SAMPLES;
    let ts: Vec<f64> = (0..n).map(|k| tlo + (thi - tlo) * k as f64 / (n - 1) as f64).collect();
    let ks: Vec<f64> = ts.iter().map(|&t| sys.curvature(t)).collect();
    let (best, kbest) = ks
        .iter()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |acc, (i, &k)| if k > acc.1 { (i, k) } else { acc });
    if kbest <= 0.0 {
        return Ok(lo);
    }
    let (mut a, mut b) = (ts[best.saturating_sub(1)], ts[(best + 1).min(n - 1)]);
    let g = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = b - g * (b - a);
    let mut x2 = a + g * (b - a);
    let (mut f1, mut f2) = (sys.curvature(x1), sys.curvature(x2));
    while b - a > termination {
        if f1 > f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - g * (b - a);
            f1 = sys.curvature(x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + g * (b - a);
            f2 = sys.curvature(x2);
        }
    }
    let t = if f1.max(f2) >= kbest { 0.5 * (a + b) } else { ts[best] };
    Ok(t.exp().clamp(lo, hi))
}

/// Circuit family.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AnsatzKind {
    Quccsd,
    Ry,
}

/// Expectation-value mode.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Sv,
    Shots,
}

/// How derivative states are obtained in SV mode.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DerivativeKind {
    Analytic,
    ForwardDifference,
}

/// Gutzwiller parameters used for the QITE runs of the half-filled rings at
/// `U/t = 4`, keyed by the number of sites. `None` means the projection root
/// itself (tabulated as −0.48 for two sites); its rounding alone would leave
/// a 2.4e-3 energy error in the two-site Fermi sea.
pub const J_QITE: [(usize, Option<f64>); 3] = [(2, None), (4, Some(-0.73)), (6, Some(-0.59))];

/// Full specification of one run. Every field has a default, so `{}` is a
/// valid configuration (2-site momentum-space TC, one qUCCSD layer).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct QiteConfig {
    pub nx: usize,
    pub ny: usize,
    pub representation: Representation,
    pub tc: bool,
    pub t: f64,
    pub u: f64,
    /// Gutzwiller parameter; `None` takes [`J_QITE`] or else the projection root
    pub j: Option<f64>,
    pub ansatz: AnsatzKind,
    pub layers: usize,
    /// initial basis state written qubit 0 first; `None` is the `U = 0`
    /// ground state (Fermi sea, or its real-space Slater determinant)
    pub initial_bitstring: Option<String>,
    pub dt: f64,
    pub max_steps: usize,
    pub grad_norm_threshold: f64,
    pub lambda_min: f64,
    pub lambda_max: f64,
    pub corner_termination: f64,
    pub mode: Mode,
    pub derivatives: DerivativeKind,
    pub fd_step: f64,
    pub shots: u64,
    pub seed: u64,
    /// symmetric per-qubit readout flip probability (shot mode)
    pub readout_error: f64,
    pub mitigate_readout: bool,
}

impl Default for QiteConfig {
    fn default() -> Self {
        Self {
            nx: 2,
            ny: 1,
            representation: Representation::Momentum,
            tc: true,
            t: 1.0,
            u: 4.0,
            j: None,
            ansatz: AnsatzKind::Quccsd,
            layers: 1,
            initial_bitstring: None,
            dt: 0.1,
            max_steps: 400,
            grad_norm_threshold: 1e-6,
            lambda_min: 1e-3,
            lambda_max: 1.0,
            corner_termination: 1e-8,
            mode: Mode::Sv,
            derivatives: DerivativeKind::Analytic,
            fd_step: 1e-9,
            shots: 100_000,
            seed: 0,
            readout_error: 0.0,
            mitigate_readout: false,
        }
    }
}

impl QiteConfig {
    /// Every violated constraint, as `field: reason`.
    pub fn problems(&self) -> Vec<String> {
        let mut out = Vec::new();
        let mut bad = |field: &str, why: &str| out.push(format!("{field}: {why}"));
        if self.nx == 0 || self.ny == 0 {
            bad("nx/ny", "lattice dimensions must be positive");
        }
        let sites = self.nx * self.ny;
        if 2 * sites > 16 {
            bad("nx/ny", "at most 8 sites (16 qubits) are supported");
        }
        if sites % 2 == 1 {
            bad("nx/ny", "half filling with S_z = 0 needs an even number of sites");
        }
        if !(self.t >= 0.0 && self.t.is_finite()) {
            bad("t", "hopping must be finite and non-negative");
        }
        if !(self.u >= 0.0 && self.u.is_finite()) {
            bad("u", "interaction must be finite and non-negative");
        }
        if let Some(j) = self.j {
            if !j.is_finite() {
                bad("j", "Gutzwiller parameter must be finite");
            }
        }
        if self.layers == 0 {
            bad("layers", "need at least one layer");
        }
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            bad("dt", "Δt must be positive");
        }
        if !(self.grad_norm_threshold > 0.0) {
            bad("grad_norm_threshold", "must be positive");
        }
        if !(self.lambda_min > 0.0 && self.lambda_min < self.lambda_max && self.lambda_max.is_finite()) {
            bad("lambda_min/lambda_max", "need 0 < λ_min < λ_max < ∞");
        }
        if !(self.corner_termination > 0.0) {
            bad("corner_termination", "must be positive");
        }
        if !(self.fd_step > 0.0) {
            bad("fd_step", "must be positive");
        }
        if self.mode == Mode::Shots && self.shots == 0 {
            bad("shots", "shot mode needs at least one shot");
        }
        if !(0.0..=0.5).contains(&self.readout_error) {
            bad("readout_error", "flip probability must lie in [0, 0.5]");
        }
        if let Some(b) = &self.initial_bitstring {
            if b.len() != 2 * sites || b.chars().any(|ch| ch != '0' && ch != '1') {
                bad("initial_bitstring", "must be a 0/1 string with one character per qubit");
            }
        }
        out
    }

    pub fn validate(&self) -> Result<()> {
        let p = self.problems();
        if p.is_empty() { Ok(()) } else { Err(Error::Validation(p.join("; "))) }
    }

    pub fn lattice(&self) -> Result<Lattice> {
        Lattice::new(self.nx, self.ny)
    }

    /// Configured `J`, else the tabulated QITE value, else the projection root.
    pub fn resolve_j(&self) -> Result<f64> {
        if let Some(j) = self.j {
            return Ok(j);
        }
        let lat = self.lattice()?;
        if lat.ny == 1 && self.t == 1.0 && self.u == 4.0 {
            if let Some((_, Some(j))) = J_QITE.iter().find(|(n, _)| *n == lat.nx) {
                return Ok(*j);
            }
        }
        Ok(optimize_j(&lat, self.t, self.u, (-3.0, -1e-6), 1e-10)?.j)
    }

    /// Short variant label: `r`, `r-tc`, `m` or `m-tc`.
    pub fn variant(&self) -> String {
        let r = match self.representation {
            Representation::Real => "r",
            Representation::Momentum => "m",
        };
        if self.tc { format!("{r}-tc") } else { r.to_string() }
    }
}

/// Hamiltonian, circuit and exact reference assembled from a config.
#[derive(Debug, Clone)]
pub struct Problem {
    pub config: QiteConfig,
    pub lattice: Lattice,
    pub j: f64,
    pub hamiltonian: PauliSum,
    pub sparse: SparseOperator,
    pub circuit: ParametrizedCircuit,
    pub exact_energy: f64,
    /// ground state, or the normalised right eigenvector for TC
    pub exact_state: StateVector,
}

impl Problem {
    pub fn new(config: &QiteConfig) -> Result<Self> {
        config.validate()?;
        let lat = config.lattice()?;
        let rep = config.representation;
        let j = if config.tc { config.resolve_j()? } else { 0.0 };
        let params = HubbardParams::new(config.t, config.u, j)?;
        let base = jordan_wigner(&build_hubbard(&lat, &params, rep));
        let sector = SectorBasis::half_filling(&lat)?;
        let (hamiltonian, exact_energy, exact_state) = if config.tc {
            let htc = jordan_wigner(&build_tc(&lat, &params, rep));
            let g = jordan_wigner(&build_gutzwiller(&lat, j, rep));
            let r = tc_right_eigenvector(&base, &g, &htc, &sector)?;
            (htc, r.energy, r.state)
        } else {
            let gs = exact_ground_state(&base, &sector)?;
            (base, gs.energy, gs.state)
        };
        let n_e = lat.n_sites();
        let circuit = match config.ansatz {
            AnsatzKind::Quccsd => {
                let reference = match rep {
                    Representation::Momentum => fermi_sea(&lat, n_e)?,
                    Representation::Real => site_reference(&lat, n_e)?,
                };
                build_quccsd(&lat, &reference, config.layers)?
            }
            AnsatzKind::Ry => build_ry_ansatz(lat.n_modes(), config.layers)?,
        };
        let initial = match (&config.initial_bitstring, rep) {
            (Some(bits), _) => InitialState::Basis(crate::state::bitstring_to_index(bits)?),
            (None, Representation::Momentum) => InitialState::Basis(fermi_sea(&lat, n_e)?.as_basis_index()),
            (None, Representation::Real) => InitialState::Vector(noninteracting_real_space_state(&lat)?),
        };
        let circuit = circuit.with_initial_state(initial)?;
        Ok(Self {
            config: config.clone(),
            lattice: lat,
            j,
            sparse: hamiltonian.to_sparse(),
            hamiltonian,
            circuit,
            exact_energy,
            exact_state,
        })
    }

    pub fn initial_theta(&self) -> Vec<f64> {
        vec![0.0; self.circuit.n_params()]
    }

    pub fn state(&self, theta: &[f64]) -> Result<StateVector> {
        evolve(&self.circuit, theta, &self.circuit.initial_state())
    }

    fn eval_mode(&self, step: usize) -> Result<EvalMode> {
        let c = &self.config;
        Ok(match c.mode {
            Mode::Sv => EvalMode::Sv,
            Mode::Shots => {
                let n = self.circuit.n_qubits() + 1;
                let readout = (c.readout_error > 0.0)
                    .then(|| -> Result<ReadoutSetup> {
                        Ok(ReadoutSetup {
                            model: ReadoutModel::uniform(n, c.readout_error)?,
                            mitigate: c.mitigate_readout,
                        })
                    })
                    .transpose()?;
                EvalMode::Shots {
                    shots: c.shots,
                    seed: derive_seed(c.seed, &[step as u64]),
                    readout,
                }
            }
        })
    }

    /// `A`, `C`, state and energy at `theta` in the configured mode.
    pub fn gradient(&self, theta: &[f64], step: usize) -> Result<GradientData> {
        match (self.config.mode, self.config.derivatives) {
            (Mode::Sv, DerivativeKind::Analytic) => direct_gradient(&self.circuit, theta, &self.sparse),
            (Mode::Sv, DerivativeKind::ForwardDifference) => {
                direct_gradient_fd(&self.circuit, theta, &self.sparse, self.config.fd_step)
            }
            (Mode::Shots, _) => circuit_gradient(&self.circuit, theta, &self.hamiltonian, &self.eval_mode(step)?),
        }
    }
}

/// One row of a trajectory.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StepRecord {
    pub step: usize,
    pub tau: f64,
    pub energy: f64,
    pub abs_err: f64,
    /// `1 − |⟨Φ|Φ_exact⟩|²`; SV mode only
    pub infidelity: Option<f64>,
    /// `1 − |⟨Φ|Φ_exact⟩|`; SV mode only
    pub infidelity_abs: Option<f64>,
    pub grad_norm: f64,
    /// regularisation used for the step taken from this point
    pub lambda_opt: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RunStatus {
    Converged,
    MaxSteps,
    Diverged,
}

#[derive(Debug, Clone, Serialize)]
pub struct QiteTrajectory {
    pub records: Vec<StepRecord>,
    pub theta: Vec<f64>,
    pub status: RunStatus,
    pub exact_energy: f64,
    pub diagnostic: Option<String>,
}

impl QiteTrajectory {
    pub fn last(&self) -> &StepRecord {
        self.records.last().expect("a trajectory has at least one record")
    }
}

/// Result of one Euler step.
#[derive(Debug, Clone)]
pub struct StepOutcome {
    pub theta: Vec<f64>,
    pub theta_dot: DVector<f64>,
    pub lambda_opt: f64,
}

/// `θ ← θ + Δt θ̇` with `θ̇` the Tikhonov solution of `A θ̇ = −C` at the
/// L-curve corner.
pub fn qite_step(theta: &[f64], data: &GradientData, config: &QiteConfig) -> Result<StepOutcome> {
    let sys = TikhonovSystem::new(&data.a, &data.c)?;
    let lambda = corner(&sys, (config.lambda_min, config.lambda_max), config.corner_termination)?;
    let theta_dot = sys.solve(lambda)?;
    let theta = theta.iter().zip(theta_dot.iter()).map(|(t, d)| t + config.dt * d).collect();
    Ok(StepOutcome {
        theta,
        theta_dot,
        lambda_opt: lambda,
    })
}

fn record(problem: &Problem, step: usize, data: &GradientData) -> Result<StepRecord> {
    let energy = data.energy.re;
    let (infidelity, infidelity_abs) = match problem.config.mode {
        Mode::Sv => {
            let f = fidelity(&data.state, &problem.exact_state)?;
            (Some(1.0 - f), Some(1.0 - f.sqrt()))
        }
        Mode::Shots => (None, None),
    };
    Ok(StepRecord {
        step,
        tau: step as f64 * problem.config.dt,
        energy,
        abs_err: (energy - problem.exact_energy).abs(),
        infidelity,
        infidelity_abs,
        grad_norm: data.c.norm(),
        lambda_opt: None,
    })
}

/// Iterate [`qite_step`] from `θ = 0` until `‖C‖` drops below the threshold
/// or `max_steps` steps were taken. A non-finite or runaway energy, or a
/// `θ̇` component above `10³`, stops the run with status `Diverged`.
pub fn run_qite(problem: &Problem) -> Result<QiteTrajectory> {
    run_qite_from(problem, problem.initial_theta())
}

pub fn run_qite_from(problem: &Problem, theta0: Vec<f64>) -> Result<QiteTrajectory> {
    let config = &problem.config;
    let mut theta = theta0;
    problem.circuit.check_params(&theta)?;
    let mut records = Vec::new();
    let bound = 1e3 * problem.exact_energy.abs().max(1.0);
    let mut status = RunStatus::MaxSteps;
    let mut diagnostic = None;
    for step in 0..=config.max_steps {
        let data = problem.gradient(&theta, step)?;
        let mut rec = record(problem, step, &data)?;
        if !rec.energy.is_finite() || rec.energy.abs() > bound {
            diagnostic = Some(format!("energy {} at step {step} outside the divergence bound {bound}", rec.energy));
            records.push(rec);
            status = RunStatus::Diverged;
            break;
        }
        if rec.grad_norm < config.grad_norm_threshold {
            records.push(rec);
            status = RunStatus::Converged;
            break;
        }
        if step == config.max_steps {
            records.push(rec);
            break;
        }
        let out = qite_step(&theta, &data, config)?;
        rec.lambda_opt = Some(out.lambda_opt);
        records.push(rec);
        let worst = out.theta_dot.amax();
        if !worst.is_finite() || worst > 1e3 {
            diagnostic = Some(format!("|θ̇| = {worst} at step {step} exceeds 10³"));
            status = RunStatus::Diverged;
            break;
        }
        theta = out.theta;
    }
    Ok(QiteTrajectory {
        records,
        theta,
        status,
        exact_energy: problem.exact_energy,
        diagnostic,
    })
}

/// Converged VQE point.
#[derive(Debug, Clone, Serialize)]
pub struct VqeResult {
    pub theta: Vec<f64>,
    pub energy: f64,
    pub abs_err: f64,
    pub infidelity: f64,
    pub iterations: u64,
    pub grad_norm: f64,
}

struct VqeCost<'a> {
    problem: &'a Problem,
    best: &'a Mutex<(f64, Vec<f64>)>,
}

impl VqeCost<'_> {
    fn eval(&self, theta: &[f64]) -> std::result::Result<(f64, Vec<f64>), argmin::core::Error> {
        let (e, g) = energy_gradient(&self.problem.circuit, theta, &self.problem.sparse)?;
        let mut best = self.best.lock().expect("unpoisoned");
        if e < best.0 {
            *best = (e, theta.to_vec());
        }
        Ok((e, g))
    }
}

impl CostFunction for VqeCost<'_> {
    type Param = Vec<f64>;
    type Output = f64;

    fn cost(&self, p: &Self::Param) -> std::result::Result<f64, argmin::core::Error> {
        Ok(self.eval(p)?.0)
    }
}

impl Gradient for VqeCost<'_> {
    type Param = Vec<f64>;
    type Gradient = Vec<f64>;

    fn gradient(&self, p: &Self::Param) -> std::result::Result<Vec<f64>, argmin::core::Error> {
        Ok(self.eval(p)?.1)
    }
}

/// Gradient-norm tolerance of the VQE optimiser.
pub const VQE_GRAD_TOL: f64 = 1e-7;

/// Minimise `⟨Φ(θ)|H|Φ(θ)⟩` with L-BFGS and analytic gradients, from `θ = 0`.
pub fn run_vqe(problem: &Problem) -> Result<VqeResult> {
    if !problem.hamiltonian.is_hermitian(1e-12) {
        return Err(Error::NotHermitian(
            "VQE minimises the energy through the variational principle, which holds only for Hermitian \
             Hamiltonians; use QITE for transcorrelated ones"
                .into(),
        ));
    }
    let theta0 = problem.initial_theta();
    let (e0, g0) = energy_gradient(&problem.circuit, &theta0, &problem.sparse)?;
    let norm = |g: &[f64]| g.iter().map(|x| x * x).sum::<f64>().sqrt();
    let mut iterations = 0;
    let mut theta = theta0.clone();
    if problem.circuit.n_ansatz_params() > 0 && norm(&g0) > VQE_GRAD_TOL {
        let best = Mutex::new((e0, theta0.clone()));
        let cost = VqeCost { problem, best: &best };
        let solver = LBFGS::new(MoreThuenteLineSearch::new(), 10)
            .with_tolerance_grad(VQE_GRAD_TOL)
            .and_then(|s| s.with_tolerance_cost(1e-15))
            .map_err(|e| Error::InvalidArgument(e.to_string()))?;
        let run = Executor::new(cost, solver)
            .configure(|s| s.param(theta0).max_iters(2000))
            .run();
        if let Ok(res) = &run {
            iterations = res.state().get_iter();
        }
        // a failed line search at the optimum still leaves the best point seen
        theta = best.into_inner().expect("unpoisoned").1;
    }
    let (energy, g) = energy_gradient(&problem.circuit, &theta, &problem.sparse)?;
    let state = problem.state(&theta)?;
    Ok(VqeResult {
        abs_err: (energy - problem.exact_energy).abs(),
        infidelity: 1.0 - fidelity(&state, &problem.exact_state)?,
        theta,
        energy,
        iterations,
        grad_norm: norm(&g),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_without_regularisation() {
        let a = DMatrix::identity(3, 3);
        let c = DVector::from_vec(vec![1.0, -2.0, 0.5]);
        assert!((tikhonov_solve(&a, &c, 0.0).unwrap() + &c).norm() < 1e-14);
        assert!(tikhonov_solve(&a, &c, -1.0).is_err());
    }

    #[test]
    fn heavy_damping() {
        let a = DMatrix::from_fn(4, 4, |i, j| 1.0 / (1 + i + j) as f64);
        let c = DVector::from_vec(vec![1.0, 0.3, -0.2, 0.7]);
        assert!(tikhonov_solve(&a, &c, 1e6).unwrap().norm() < 1e-4 * c.norm());
    }

    #[test]
    fn identity_corner() {
        let a = DMatrix::identity(3, 3);
        let c = DVector::from_vec(vec![1.0, -2.0, 0.5]);
        let lam = l_curve_corner(&a, &c, (1e-3, 1.0), 1e-8).unwrap();
        assert!((1e-3..=1.0).contains(&lam));
        let x = tikhonov_solve(&a, &c, lam).unwrap();
        assert!((x + &c).norm() / c.norm() <= lam / (1.0 + lam) + 1e-12);
    }

    #[test]
    fn degenerate_curve_returns_lambda_min() {
        let a = DMatrix::identity(2, 2);
        let c = DVector::zeros(2);
        assert_eq!(l_curve_corner(&a, &c, (1e-3, 1.0), 1e-8).unwrap(), 1e-3);
        assert!(l_curve_corner(&a, &c, (1.0, 1e-3), 1e-8).is_err());
    }

    #[test]
    fn corner_of_ill_conditioned_system_is_in_range() {
        let a = DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, 1e-2, 1e-5, 1e-8]));
        let c = DVector::from_vec(vec![1.0, 1.0, 1.0, 1.0]);
        let lam = l_curve_corner(&a, &c, (1e-3, 1.0), 1e-8).unwrap();
        assert!(lam.is_finite() && (1e-3..=1.0).contains(&lam));
    }

    #[test]
    fn empty_config_defaults() {
        let c: QiteConfig = serde_json::from_str("{}").unwrap();
        assert_eq!(c, QiteConfig::default());
        assert_eq!(c.variant(), "m-tc");
        assert!((c.resolve_j().unwrap() + 0.481212).abs() < 1e-6);
    }

    #[test]
    fn negative_dt_is_rejected() {
        let c = QiteConfig { dt: -1.0, ..Default::default() };
        assert!(c.problems().iter().any(|p| p.contains("Δt must be positive")));
    }

    #[test]
    fn vqe_rejects_tc() {
        let p = Problem::new(&QiteConfig::default()).unwrap();
        assert!(matches!(run_vqe(&p), Err(Error::NotHermitian(_))));
    }
}
