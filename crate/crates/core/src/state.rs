use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::pauli::MAX_QUBITS;

/// Dense state vector over `n_qubits` qubits; basis index bit `q` is qubit `q`.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    n_qubits: usize,
    amps: Vec<Complex64>,
}

impl StateVector {
    pub fn zero_state(n_qubits: usize) -> Result<Self> {
        Self::basis(n_qubits, 0)
    }

    pub fn basis(n_qubits: usize, index: usize) -> Result<Self> {
        if n_qubits > 30 || n_qubits > MAX_QUBITS {
            return Err(Error::RegisterTooLarge(n_qubits, 30));
        }
        let dim = 1usize << n_qubits;
        if index >= dim {
            return Err(Error::InvalidArgument(format!(
                "basis index {index} outside a {n_qubits}-qubit register"
            )));
        }
        let mut amps = vec![Complex64::default(); dim];
        amps[index] = Complex64::new(1.0, 0.0);
        Ok(Self { n_qubits, amps })
    }

    /// Basis state from a bitstring written qubit 0 first, e.g. `"0101"`.
    pub fn from_bitstring(bits: &str) -> Result<Self> {
        let index = bitstring_to_index(bits)?;
        Self::basis(bits.len(), index)
    }

    pub fn from_amplitudes(amps: Vec<Complex64>) -> Result<Self> {
        let n = amps.len();
        if n == 0 || !n.is_power_of_two() {
            return Err(Error::InvalidArgument(format!(
                "amplitude count {n} is not a power of two"
            )));
        }
        Ok(Self {
            n_qubits: n.trailing_zeros() as usize,
            amps,
        })
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amps
    }

    pub fn amplitudes_mut(&mut self) -> &mut [Complex64] {
        &mut self.amps
    }

    pub fn into_amplitudes(self) -> Vec<Complex64> {
        self.amps
    }

    pub fn norm(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn normalize(&mut self) -> Result<()> {
        let n = self.norm();
        if n == 0.0 || !n.is_finite() {
            return Err(Error::NotNormalized(n));
        }
        self.amps.iter_mut().for_each(|a| *a /= n);
        Ok(())
    }

    /// `⟨self|other⟩`.
    pub fn inner(&self, other: &StateVector) -> Result<Complex64> {
        if self.dim() != other.dim() {
            return Err(Error::SizeMismatch {
                expected: self.n_qubits,
                got: other.n_qubits,
            });
        }
        Ok(inner(&self.amps, &other.amps))
    }

    pub fn probabilities(&self) -> Vec<f64> {
        self.amps.iter().map(|a| a.norm_sqr()).collect()
    }

    /// Multiply by a phase so the largest-magnitude amplitude (lowest index
    /// on ties) is real and positive.
    pub fn fix_phase(&mut self) {
        let mut best = 0;
        let mut best_mag = -1.0;
        for (i, a) in self.amps.iter().enumerate() {
            let m = a.norm();
            if m > best_mag + 1e-12 {
                best = i;
                best_mag = m;
            }
        }
        if best_mag > 0.0 {
            let ph = self.amps[best].conj() / best_mag;
            self.amps.iter_mut().for_each(|a| *a *= ph);
        }
    }
}

/// `Σ conj(a_i) b_i`, summed in index order.
pub fn inner(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

/// Bitstring (qubit 0 first) to basis index.
pub fn bitstring_to_index(bits: &str) -> Result<usize> {
    if bits.len() > 63 {
        return Err(Error::RegisterTooLarge(bits.len(), 63));
    }
    bits.chars().enumerate().try_fold(0usize, |acc, (q, c)| match c {
        '0' => Ok(acc),
        '1' => Ok(acc | (1 << q)),
        other => Err(Error::Parse(format!("invalid bit '{other}' in \"{bits}\""))),
    })
}

/// Basis index to bitstring (qubit 0 first).
pub fn index_to_bitstring(index: usize, n_qubits: usize) -> String {
    (0..n_qubits)
        .map(|q| if index >> q & 1 == 1 { '1' } else { '0' })
        .collect()
}
