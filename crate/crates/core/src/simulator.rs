//! State-vector evolution, expectation values, parameter derivatives, shot
//! sampling and a readout-error model with simplex-constrained mitigation.

use std::collections::BTreeMap;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution};
use rayon::prelude::*;

use crate::circuits::{apply_gate, Gate, ParametrizedCircuit, Step};
use crate::error::{Error, Result};
use crate::pauli::{apply_pauli, Pauli, PauliString, PauliSum, SparseOperator};
pub use crate::state::{bitstring_to_index, index_to_bitstring, inner, StateVector};

const I: Complex64 = Complex64::new(0.0, 1.0);

fn check_state(c: &ParametrizedCircuit, psi: &StateVector) -> Result<()> {
    if psi.n_qubits() != c.n_qubits() {
        return Err(Error::SizeMismatch {
            expected: c.n_qubits(),
            got: psi.n_qubits(),
        });
    }
    Ok(())
}

/// `U(θ)|ψ0⟩`, including the global phase `e^{iθ_g}` when the circuit has one.
pub fn evolve(c: &ParametrizedCircuit, theta: &[f64], psi0: &StateVector) -> Result<StateVector> {
    c.check_params(theta)?;
    check_state(c, psi0)?;
    let mut psi = psi0.clone();
    for step in c.schedule() {
        match step {
            Step::Gate(k) => apply_gate(&c.gates()[*k], theta, psi.amplitudes_mut())?,
            Step::Pairs(r) => r.apply(theta[r.index], psi.amplitudes_mut()),
        }
    }
    if let Some(k) = c.global_phase_index() {
        let ph = Complex64::from_polar(1.0, theta[k]);
        psi.amplitudes_mut().iter_mut().for_each(|a| *a *= ph);
    }
    Ok(psi)
}

/// `U(θ)` applied to the circuit's own initial state.
pub fn prepare(c: &ParametrizedCircuit, theta: &[f64]) -> Result<StateVector> {
    evolve(c, theta, &c.initial_state())
}

/// `⟨ψ|O|ψ⟩` by term-wise application.
pub fn expectation(psi: &StateVector, op: &PauliSum) -> Result<Complex64> {
    if op.n_qubits() != psi.n_qubits() {
        return Err(Error::SizeMismatch {
            expected: psi.n_qubits(),
            got: op.n_qubits(),
        });
    }
    Ok(inner(psi.amplitudes(), &op.apply(psi.amplitudes())?))
}

/// `⟨ψ|O|ψ⟩` with a precompiled sparse operator.
pub fn expectation_sparse(psi: &StateVector, op: &SparseOperator) -> Result<Complex64> {
    if op.n_qubits() != psi.n_qubits() {
        return Err(Error::SizeMismatch {
            expected: psi.n_qubits(),
            got: op.n_qubits(),
        });
    }
    Ok(inner(psi.amplitudes(), &op.apply(psi.amplitudes())))
}

/// How parameter derivatives of the circuit state are obtained.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DerivativeMethod {
    Analytic,
    /// `(Φ(θ + h e_i) − Φ(θ)) / h`
    ForwardDifference(f64),
    /// `(Φ(θ + h e_i) − Φ(θ − h e_i)) / 2h`
    CentralDifference(f64),
}

/// Default forward-difference step.
pub const FD_STEP: f64 = 1e-9;

fn apply_weighted_paulis(terms: &[(PauliString, Complex64)], psi: &[Complex64]) -> Vec<Complex64> {
    let mut out = vec![Complex64::default(); psi.len()];
    for (p, w) in terms {
        for (o, v) in out.iter_mut().zip(apply_pauli(psi, p)) {
            *o += w * v;
        }
    }
    out
}

/// `|Φ(θ)⟩` together with every `∂_i|Φ⟩`, from one forward pass: each gate
/// is applied to the state and to every derivative vector created so far,
/// and a parametrised gate `G` with `∂G = G·M` seeds `G·M·ψ` into its
/// parameter's vector.
pub fn state_and_derivatives(
    c: &ParametrizedCircuit,
    theta: &[f64],
    psi0: &StateVector,
) -> Result<(StateVector, Vec<Vec<Complex64>>)> {
    c.check_params(theta)?;
    check_state(c, psi0)?;
    let dim = psi0.dim();
    let mut psi = psi0.amplitudes().to_vec();
    let mut slot: Vec<Option<usize>> = vec![None; c.n_params()];
    let mut derivs: Vec<Vec<Complex64>> = Vec::new();
    let mut add = |i: usize, v: Vec<Complex64>, derivs: &mut Vec<Vec<Complex64>>| match slot[i] {
        Some(k) => derivs[k].iter_mut().zip(&v).for_each(|(a, b)| *a += b),
        None => {
            slot[i] = Some(derivs.len());
            derivs.push(v);
        }
    };
    for step in c.schedule() {
        match step {
            Step::Gate(k) => {
                let g = &c.gates()[*k];
                let seed = g.generator().map(|(i, m)| (i, apply_weighted_paulis(&m, &psi)));
                apply_gate(g, theta, &mut psi)?;
                derivs
                    .par_iter_mut()
                    .try_for_each(|d| apply_gate(g, theta, d))?;
                if let Some((i, mut v)) = seed {
                    apply_gate(g, theta, &mut v)?;
                    add(i, v, &mut derivs);
                }
            }
            Step::Pairs(r) => {
                let th = theta[r.index];
                r.apply(th, &mut psi);
                derivs.par_iter_mut().for_each(|d| r.apply(th, d));
                // the generator commutes with its own rotation
                add(r.index, r.generator(&psi), &mut derivs);
            }
        }
    }
    let mut out: Vec<Vec<Complex64>> = slot
        .iter()
        .map(|s| match s {
            Some(k) => std::mem::take(&mut derivs[*k]),
            None => vec![Complex64::default(); dim],
        })
        .collect();
    if let Some(k) = c.global_phase_index() {
        let ph = Complex64::from_polar(1.0, theta[k]);
        psi.iter_mut().for_each(|a| *a *= ph);
        out.par_iter_mut()
            .for_each(|d| d.iter_mut().for_each(|a| *a *= ph));
        out[k] = psi.iter().map(|a| I * a).collect();
    }
    Ok((StateVector::from_amplitudes(psi)?, out))
}

/// `∂|Φ(θ)⟩/∂θ_i` from the chosen method.
pub fn derivative_state(
    c: &ParametrizedCircuit,
    theta: &[f64],
    psi0: &StateVector,
    i: usize,
    method: DerivativeMethod,
) -> Result<Vec<Complex64>> {
    if i >= c.n_params() {
        return Err(Error::InvalidArgument(format!(
            "parameter index {i} out of range for {} parameters",
            c.n_params()
        )));
    }
    let shifted = |h: f64| -> Result<Vec<Complex64>> {
        let mut t = theta.to_vec();
        t[i] += h;
        Ok(evolve(c, &t, psi0)?.into_amplitudes())
    };
    match method {
        DerivativeMethod::Analytic => {
            let (_, mut d) = state_and_derivatives(c, theta, psi0)?;
            Ok(std::mem::take(&mut d[i]))
        }
        DerivativeMethod::ForwardDifference(h) => {
            let (p, z) = (shifted(h)?, shifted(0.0)?);
            Ok(p.iter().zip(&z).map(|(a, b)| (a - b) / h).collect())
        }
        DerivativeMethod::CentralDifference(h) => {
            let (p, m) = (shifted(h)?, shifted(-h)?);
            Ok(p.iter().zip(&m).map(|(a, b)| (a - b) / (2.0 * h)).collect())
        }
    }
}

/// Deterministic seed derived from a base seed and a path of indices
/// (SplitMix64 mixing).
pub fn derive_seed(base: u64, path: &[u64]) -> u64 {
    let mix = |mut z: u64| {
        z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    };
    path.iter().fold(mix(base), |acc, &p| mix(acc ^ mix(p)))
}

/// Measurement record: basis index to number of shots.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Counts {
    n_qubits: usize,
    counts: BTreeMap<usize, u64>,
}

impl Counts {
    pub fn new(n_qubits: usize) -> Self {
        Self {
            n_qubits,
            counts: BTreeMap::new(),
        }
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn add(&mut self, index: usize, n: u64) {
        if n > 0 {
            *self.counts.entry(index).or_insert(0) += n;
        }
    }

    pub fn get(&self, index: usize) -> u64 {
        self.counts.get(&index).copied().unwrap_or(0)
    }

    pub fn shots(&self) -> u64 {
        self.counts.values().sum()
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, u64)> + '_ {
        self.counts.iter().map(|(k, v)| (*k, *v))
    }

    /// Observed frequencies over all `2^n` outcomes.
    pub fn frequencies(&self) -> Vec<f64> {
        let total = self.shots().max(1) as f64;
        let mut f = vec![0.0; 1 << self.n_qubits];
        for (k, v) in &self.counts {
            f[*k] = *v as f64 / total;
        }
        f
    }

    /// `{bitstring: count}` with bitstrings written qubit 0 first.
    pub fn to_json(&self) -> serde_json::Value {
        let map: serde_json::Map<String, serde_json::Value> = self
            .counts
            .iter()
            .map(|(k, v)| (index_to_bitstring(*k, self.n_qubits), serde_json::Value::from(*v)))
            .collect();
        serde_json::Value::Object(map)
    }

    pub fn from_json(value: &serde_json::Value) -> Result<Self> {
        let obj = value
            .as_object()
            .ok_or_else(|| Error::Parse("counts must be a JSON object".into()))?;
        let mut out: Option<Counts> = None;
        for (bits, v) in obj {
            let n = v
                .as_u64()
                .ok_or_else(|| Error::Parse(format!("count for {bits} is not a non-negative integer")))?;
            let c = out.get_or_insert_with(|| Counts::new(bits.len()));
            if bits.len() != c.n_qubits {
                return Err(Error::Parse("bitstrings of different lengths".into()));
            }
            c.add(bitstring_to_index(bits)?, n);
        }
        out.ok_or_else(|| Error::Parse("empty counts".into()))
    }
}

/// Multinomial draw of `shots` outcomes from `probs`, via successive
/// conditional binomials in index order.
fn multinomial(probs: &[f64], shots: u64, rng: &mut ChaCha8Rng) -> Vec<u64> {
    let mut out = vec![0u64; probs.len()];
    let mut remaining = shots;
    let mut mass = probs.iter().sum::<f64>();
    for (k, &p) in probs.iter().enumerate() {
        if remaining == 0 {
            break;
        }
        if k + 1 == probs.len() || mass <= p {
            out[k] = remaining;
            break;
        }
        let q = (p / mass).clamp(0.0, 1.0);
        let n = if q > 0.0 {
            Binomial::new(remaining, q).expect("probability in [0, 1]").sample(rng)
        } else {
            0
        };
        out[k] = n;
        remaining -= n;
        mass -= p;
    }
    out
}

/// Draw `shots` computational-basis measurements of `psi`.
pub fn sample(psi: &StateVector, shots: u64, seed: u64) -> Result<Counts> {
    if shots == 0 {
        return Err(Error::InvalidArgument("shots must be positive".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let draws = multinomial(&psi.probabilities(), shots, &mut rng);
    let mut c = Counts::new(psi.n_qubits());
    for (k, n) in draws.into_iter().enumerate() {
        c.add(k, n);
    }
    Ok(c)
}

/// Readout confusion matrix, `M[(i, j)] = P(read i | prepared j)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ReadoutModel {
    n_qubits: usize,
    m: DMatrix<f64>,
}

impl ReadoutModel {
    pub fn new(m: DMatrix<f64>) -> Result<Self> {
        let d = m.nrows();
        if d != m.ncols() || d == 0 || !d.is_power_of_two() {
            return Err(Error::InvalidArgument("readout matrix must be square of size 2^n".into()));
        }
        if m.iter().any(|&x| !(0.0..=1.0).contains(&x)) {
            return Err(Error::InvalidArgument("readout probabilities must lie in [0, 1]".into()));
        }
        for j in 0..d {
            let s: f64 = m.column(j).sum();
            if (s - 1.0).abs() > 1e-12 {
                return Err(Error::InvalidArgument(format!(
                    "readout column {j} sums to {s}, not 1"
                )));
            }
        }
        Ok(Self {
            n_qubits: d.trailing_zeros() as usize,
            m,
        })
    }

    pub fn identity(n_qubits: usize) -> Self {
        Self {
            n_qubits,
            m: DMatrix::identity(1 << n_qubits, 1 << n_qubits),
        }
    }

    /// Independent per-qubit errors: `p01[q]` = P(read 1 | prepared 0),
    /// `p10[q]` = P(read 0 | prepared 1).
    pub fn from_qubit_errors(p01: &[f64], p10: &[f64]) -> Result<Self> {
        if p01.len() != p10.len() || p01.is_empty() {
            return Err(Error::InvalidArgument("need one error pair per qubit".into()));
        }
        let n = p01.len();
        let d = 1usize << n;
        let m = DMatrix::from_fn(d, d, |i, j| {
            (0..n)
                .map(|q| {
                    let (read, prep) = (i >> q & 1, j >> q & 1);
                    match (prep, read) {
                        (0, 0) => 1.0 - p01[q],
                        (0, _) => p01[q],
                        (_, 0) => p10[q],
                        _ => 1.0 - p10[q],
                    }
                })
                .product()
        });
        Self::new(m)
    }

    /// Same symmetric flip probability on every qubit.
    pub fn uniform(n_qubits: usize, p: f64) -> Result<Self> {
        Self::from_qubit_errors(&vec![p; n_qubits], &vec![p; n_qubits])
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.m
    }
}

fn check_model(counts: &Counts, model: &ReadoutModel) -> Result<()> {
    if counts.n_qubits() != model.n_qubits() {
        return Err(Error::SizeMismatch {
            expected: model.n_qubits(),
            got: counts.n_qubits(),
        });
    }
    Ok(())
}

/// Re-draw every shot prepared in `j` from column `M(:, j)`.
pub fn apply_readout_error(counts: &Counts, model: &ReadoutModel, seed: u64) -> Result<Counts> {
    check_model(counts, model)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Counts::new(counts.n_qubits());
    for (j, n) in counts.iter() {
        let col: Vec<f64> = model.m.column(j).iter().copied().collect();
        for (i, k) in multinomial(&col, n, &mut rng).into_iter().enumerate() {
            out.add(i, k);
        }
    }
    Ok(out)
}

/// Euclidean projection onto the probability simplex.
fn project_simplex(v: &[f64]) -> Vec<f64> {
    let mut u = v.to_vec();
    u.sort_by(|a, b| b.total_cmp(a));
    let mut cum = 0.0;
    let mut tau = 0.0;
    for (k, &x) in u.iter().enumerate() {
        cum += x;
        let t = (cum - 1.0) / (k + 1) as f64;
        if x - t > 0.0 {
            tau = t;
        }
    }
    v.iter().map(|x| (x - tau).max(0.0)).collect()
}

/// Probability vector `x` on the simplex minimising `‖M x − f‖²` for the
/// observed frequencies `f` (accelerated projected gradient). Never inverts `M`.
pub fn mitigate_readout(counts: &Counts, model: &ReadoutModel) -> Result<Vec<f64>> {
    check_model(counts, model)?;
    let m = &model.m;
    let f = nalgebra::DVector::from_vec(counts.frequencies());
    let mtm = m.transpose() * m;
    let mtf = m.transpose() * &f;
    // Lipschitz constant of the gradient: largest eigenvalue of MᵀM
    let lip = nalgebra::SymmetricEigen::new(mtm.clone())
        .eigenvalues
        .iter()
        .fold(0.0f64, |a, &b| a.max(b))
        .max(1e-12);
    let mut x = nalgebra::DVector::from_vec(project_simplex(f.as_slice()));
    let mut y = x.clone();
    let mut t = 1.0f64;
    for _ in 0..20_000 {
        let grad = &mtm * &y - &mtf;
        let step = &y - grad / lip;
        let x_new = nalgebra::DVector::from_vec(project_simplex(step.as_slice()));
        let t_new = 0.5 * (1.0 + (1.0 + 4.0 * t * t).sqrt());
        let change = (&x_new - &x).amax();
        y = &x_new + (&x_new - &x) * ((t - 1.0) / t_new);
        x = x_new;
        t = t_new;
        if change < 1e-13 {
            break;
        }
    }
    Ok(x.iter().copied().collect())
}

/// Sample estimate with its standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub value: f64,
    pub std_error: f64,
}

/// Readout treatment in shot-based estimation.
#[derive(Debug, Clone)]
pub struct ReadoutSetup {
    pub model: ReadoutModel,
    pub mitigate: bool,
}

/// Gates rotating the eigenbasis of `p` onto the computational basis.
pub fn measurement_basis_gates(p: &PauliString) -> Vec<Gate> {
    let mask = p.x | p.z;
    (0..64)
        .filter(|q| mask >> q & 1 == 1)
        .filter_map(|q| match p.letter(q) {
            Pauli::X => Some(Gate::H { qubit: q }),
            Pauli::Y => Some(Gate::Rx {
                qubit: q,
                angle: crate::circuits::Angle::Fixed(std::f64::consts::FRAC_PI_2),
            }),
            _ => None,
        })
        .collect()
}

/// `±1` eigenvalue of the measured string `p` for the (rotated) outcome `b`.
fn outcome_sign(p: &PauliString, b: usize) -> f64 {
    if ((p.x | p.z) & b as u64).count_ones().is_multiple_of(2) {
        1.0
    } else {
        -1.0
    }
}

/// Shot estimate of `⟨ψ|P|ψ⟩` for one Pauli string: rotate into its
/// eigenbasis, sample, optionally corrupt and mitigate the readout.
pub fn estimate_pauli(
    psi: &StateVector,
    p: &PauliString,
    shots: u64,
    seed: u64,
    readout: Option<&ReadoutSetup>,
) -> Result<Estimate> {
    if p.is_identity() {
        return Ok(Estimate {
            value: 1.0,
            std_error: 0.0,
        });
    }
    let mut rotated = psi.clone();
    for g in measurement_basis_gates(p) {
        apply_gate(&g, &[], rotated.amplitudes_mut())?;
    }
    let counts = sample(&rotated, shots, derive_seed(seed, &[0]))?;
    let signs: Vec<f64> = (0..rotated.dim()).map(|b| outcome_sign(p, b)).collect();
    let binomial_error = |mean: f64| ((1.0 - mean * mean).max(0.0) / shots as f64).sqrt();
    let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>();
    match readout {
        None => {
            let mean = dot(&counts.frequencies(), &signs);
            Ok(Estimate {
                value: mean,
                std_error: binomial_error(mean),
            })
        }
        Some(r) => {
            let noisy = apply_readout_error(&counts, &r.model, derive_seed(seed, &[1]))?;
            let q = noisy.frequencies();
            if !r.mitigate {
                let mean = dot(&q, &signs);
                return Ok(Estimate {
                    value: mean,
                    std_error: binomial_error(mean),
                });
            }
            let value = dot(&mitigate_readout(&noisy, &r.model)?, &signs);
            // error of the linear-inversion estimator sᵀM⁻¹q̂ under multinomial q̂
            let w = r
                .model
                .matrix()
                .transpose()
                .lu()
                .solve(&nalgebra::DVector::from_vec(signs))
                .ok_or_else(|| Error::InvalidArgument("singular readout matrix".into()))?;
            let w: Vec<f64> = w.iter().copied().collect();
            let m1 = dot(&q, &w);
            let m2: f64 = q.iter().zip(&w).map(|(x, y)| x * y * y).sum();
            Ok(Estimate {
                value,
                std_error: ((m2 - m1 * m1).max(0.0) / shots as f64).sqrt(),
            })
        }
    }
}

/// Shot estimate of `⟨ψ|O|ψ⟩` for a Hermitian Pauli sum, measuring every
/// string separately with `shots` shots and a seed derived from its position.
pub fn estimate_expectation(
    psi: &StateVector,
    op: &PauliSum,
    shots: u64,
    seed: u64,
    readout: Option<&ReadoutSetup>,
) -> Result<Estimate> {
    if !op.is_hermitian(1e-12) {
        return Err(Error::NotHermitian(
            "shot estimates need Hermitian observables; measure i·O for anti-Hermitian O".into(),
        ));
    }
    let mut value = 0.0;
    let mut var = 0.0;
    for (k, (s, c)) in op.iter().enumerate() {
        let e = estimate_pauli(psi, s, shots, derive_seed(seed, &[k as u64]), readout)?;
        value += c.re * e.value;
        var += (c.re * e.std_error).powi(2);
    }
    Ok(Estimate {
        value,
        std_error: var.sqrt(),
    })
}
