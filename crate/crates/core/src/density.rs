//! Reduced density matrices and von Neumann entropy in bits.

use faer::{Mat, Side};

use crate::basis::SpinBasisIndex;
use crate::error::{domain, Result};
use crate::evolution::PureState;
use crate::C64;

/// Eigenvalues at or below this contribute nothing to the entropy.
pub const EIGENVALUE_CLIP: f64 = 1e-12;
/// Eigenvalues below this mean the input is not a density matrix.
pub const NEGATIVE_EIGENVALUE_LIMIT: f64 = -1e-8;

/// Dense Hermitian matrix with unit trace.
#[derive(Debug, Clone)]
pub struct DensityMatrix {
    matrix: Mat<C64>,
}

impl DensityMatrix {
    pub fn new(matrix: Mat<C64>) -> Result<Self> {
        if matrix.nrows() != matrix.ncols() || matrix.nrows() == 0 {
            return Err(domain(format!(
                "density matrix must be square and non-empty, got {}x{}",
                matrix.nrows(),
                matrix.ncols()
            )));
        }
        Ok(Self { matrix })
    }

    pub fn from_diagonal(probabilities: &[f64]) -> Result<Self> {
        let d = probabilities.len();
        Self::new(Mat::from_fn(d, d, |i, j| {
            if i == j {
                C64::new(probabilities[i], 0.0)
            } else {
                C64::new(0.0, 0.0)
            }
        }))
    }

    /// `|ψ⟩⟨ψ|`.
    pub fn pure(amplitudes: &[C64]) -> Result<Self> {
        let d = amplitudes.len();
        Self::new(Mat::from_fn(d, d, |i, j| amplitudes[i] * amplitudes[j].conj()))
    }

    pub fn maximally_mixed(dim: usize) -> Result<Self> {
        Self::from_diagonal(&vec![1.0 / dim as f64; dim])
    }

    /// `Σ_k p_k ρ_k`, accumulated in the given order.
    pub fn mixture(states: &[DensityMatrix], probabilities: &[f64]) -> Result<Self> {
        let first = states.first().ok_or_else(|| domain("cannot mix an empty ensemble"))?;
        if states.len() != probabilities.len() {
            return Err(domain(format!(
                "{} states but {} probabilities",
                states.len(),
                probabilities.len()
            )));
        }
        let d = first.dim();
        let mut acc = Mat::<C64>::zeros(d, d);
        for (rho, &p) in states.iter().zip(probabilities) {
            if rho.dim() != d {
                return Err(domain(format!("ensemble mixes dimensions {d} and {}", rho.dim())));
            }
            for j in 0..d {
                for i in 0..d {
                    acc[(i, j)] += rho.matrix[(i, j)] * p;
                }
            }
        }
        Self::new(acc)
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &Mat<C64> {
        &self.matrix
    }

    pub fn trace(&self) -> C64 {
        (0..self.dim()).map(|i| self.matrix[(i, i)]).sum()
    }

    /// `Tr ρ²`.
    pub fn purity(&self) -> f64 {
        let d = self.dim();
        let mut acc = 0.0;
        for i in 0..d {
            for j in 0..d {
                acc += (self.matrix[(i, j)] * self.matrix[(j, i)]).re;
            }
        }
        acc
    }

    /// `max |ρ − ρ†|`.
    pub fn hermiticity_error(&self) -> f64 {
        let d = self.dim();
        let mut worst = 0.0f64;
        for i in 0..d {
            for j in 0..d {
                worst = worst.max((self.matrix[(i, j)] - self.matrix[(j, i)].conj()).norm());
            }
        }
        worst
    }

    /// Eigenvalues in ascending order.
    pub fn eigenvalues(&self) -> Result<Vec<f64>> {
        self.matrix
            .self_adjoint_eigenvalues(Side::Lower)
            .map_err(|_| domain("eigenvalue solver failed on density matrix"))
    }

    pub fn entropy(&self) -> Result<f64> {
        von_neumann_entropy(self)
    }
}

/// `S(ρ) = −Tr ρ log₂ ρ`.
///
/// Eigenvalues at or below [`EIGENVALUE_CLIP`] are dropped; one below
/// [`NEGATIVE_EIGENVALUE_LIMIT`] is rejected. The result is clamped to
/// `[0, log₂ dim]`.
pub fn von_neumann_entropy(rho: &DensityMatrix) -> Result<f64> {
    let trace = rho.trace();
    if (trace.re - 1.0).abs() > 1e-8 || trace.im.abs() > 1e-8 {
        return Err(domain(format!("density matrix has trace {trace}, expected 1")));
    }
    let eigenvalues = rho.eigenvalues()?;
    if let Some(&lowest) = eigenvalues.first() {
        if lowest < NEGATIVE_EIGENVALUE_LIMIT {
            return Err(domain(format!(
                "density matrix has eigenvalue {lowest}, not positive semidefinite"
            )));
        }
    }
    let s: f64 = eigenvalues
        .iter()
        .filter(|&&l| l > EIGENVALUE_CLIP)
        .map(|&l| -l * l.log2())
        .sum();
    Ok(s.clamp(0.0, (rho.dim() as f64).log2()))
}

/// Precomputed grouping of basis states by environment configuration, so
/// that `Tr_e |ψ⟩⟨ψ|` is a sum of outer products within each group.
#[derive(Debug, Clone)]
pub struct ReductionPlan {
    message_dim: usize,
    /// For each environment configuration: `(message index, amplitude position)`.
    groups: Vec<Vec<(usize, usize)>>,
}

impl ReductionPlan {
    /// `states[pos]` is the bitmask of amplitude position `pos`; the lowest
    /// `message_sites` bits are the message.
    pub fn new(states: &[SpinBasisIndex], message_sites: usize) -> Self {
        let mask = (1u64 << message_sites) - 1;
        let mut keyed: Vec<(u64, usize, usize)> = states
            .iter()
            .enumerate()
            .map(|(pos, &bits)| (bits >> message_sites, (bits & mask) as usize, pos))
            .collect();
        keyed.sort_unstable();
        let mut groups: Vec<Vec<(usize, usize)>> = Vec::new();
        let mut current = None;
        for (env, a, pos) in keyed {
            if current != Some(env) {
                groups.push(Vec::new());
                current = Some(env);
            }
            groups.last_mut().expect("group pushed above").push((a, pos));
        }
        Self {
            message_dim: 1 << message_sites,
            groups,
        }
    }

    /// Reduced state of the amplitudes returned by `amplitude(pos)`.
    pub fn reduce(&self, amplitude: impl Fn(usize) -> C64) -> DensityMatrix {
        let d = self.message_dim;
        let mut rho = Mat::<C64>::zeros(d, d);
        let mut local: Vec<(usize, C64)> = Vec::new();
        for group in &self.groups {
            local.clear();
            local.extend(group.iter().map(|&(a, pos)| (a, amplitude(pos))));
            for &(a, amp_a) in &local {
                for &(b, amp_b) in &local {
                    rho[(a, b)] += amp_a * amp_b.conj();
                }
            }
        }
        DensityMatrix { matrix: rho }
    }
}

/// `ρ_s = Tr_e |ψ⟩⟨ψ|` for message sites `1..=l`.
pub fn partial_trace_environment(state: &PureState, message_sites: usize) -> Result<DensityMatrix> {
    if message_sites == 0 || message_sites > state.sites() {
        return Err(domain(format!(
            "cannot keep {message_sites} message sites of a {}-site state",
            state.sites()
        )));
    }
    let norm = state.norm();
    if (norm - 1.0).abs() > 1e-8 {
        return Err(domain(format!("state norm is {norm}, expected 1")));
    }
    let entries = state.entries();
    let states: Vec<SpinBasisIndex> = entries.iter().map(|&(b, _)| b).collect();
    let plan = ReductionPlan::new(&states, message_sites);
    Ok(plan.reduce(|pos| entries[pos].1))
}
