//! Full `2^L`-dimensional reference pipeline.
//!
//! Builds Hamiltonians from Kronecker products of single-site spin matrices
//! and never looks at magnetization sectors. It is exponentially more
//! expensive than the blocked path and exists to cross-check it.

use faer::{Mat, Side};

use crate::density::DensityMatrix;
use crate::environment::{neel_bits, EnvironmentKind};
use crate::error::{domain, Error, Result};
use crate::hamiltonian::{Chain, DisorderedChainSpec};
use crate::holevo::{holevo_quantity, HolevoSample, MessageEnsemble};
use crate::C64;

/// Largest chain accepted by the dense path.
pub const MAX_FULL_SPACE_SITES: usize = 12;

fn kron(a: &Mat<f64>, b: &Mat<f64>) -> Mat<f64> {
    let (ra, ca, rb, cb) = (a.nrows(), a.ncols(), b.nrows(), b.ncols());
    Mat::from_fn(ra * rb, ca * cb, |i, j| a[(i / rb, j / cb)] * b[(i % rb, j % cb)])
}

/// Operator acting with `ops[k].1` on site `ops[k].0` and identity elsewhere.
/// Site 0 is the rightmost Kronecker factor (least significant bit).
fn embed(ops: &[(usize, &Mat<f64>)], sites: usize) -> Mat<f64> {
    let identity = Mat::<f64>::identity(2, 2);
    let mut acc = Mat::<f64>::identity(1, 1);
    for site in (0..sites).rev() {
        let factor = ops
            .iter()
            .find(|(s, _)| *s == site)
            .map(|(_, op)| *op)
            .unwrap_or(&identity);
        acc = kron(&acc, factor);
    }
    acc
}

/// Local basis: index 0 = up, 1 = down.
fn spin_matrices() -> (Mat<f64>, Mat<f64>, Mat<f64>) {
    let sx = Mat::from_fn(2, 2, |i, j| if i != j { 0.5 } else { 0.0 });
    // i·S^y is real: ½[[0, 1], [−1, 0]]
    let isy = Mat::from_fn(2, 2, |i, j| match (i, j) {
        (0, 1) => 0.5,
        (1, 0) => -0.5,
        _ => 0.0,
    });
    let sz = Mat::from_fn(2, 2, |i, j| match (i, j) {
        (0, 0) => 0.5,
        (1, 1) => -0.5,
        _ => 0.0,
    });
    (sx, isy, sz)
}

/// Dense `2^n × 2^n` Hamiltonian of `chain`.
pub fn dense_hamiltonian(chain: &Chain) -> Result<Mat<f64>> {
    let n = chain.sites();
    if n > MAX_FULL_SPACE_SITES {
        return Err(domain(format!(
            "full-space path limited to {MAX_FULL_SPACE_SITES} sites, got {n}"
        )));
    }
    let (sx, isy, sz) = spin_matrices();
    let dim = 1usize << n;
    let mut h = Mat::<f64>::zeros(dim, dim);
    let j = chain.coupling();
    for (a, b) in chain.bonds() {
        let xx = embed(&[(a, &sx), (b, &sx)], n);
        // S^y S^y = −(iS^y)(iS^y)
        let yy = embed(&[(a, &isy), (b, &isy)], n);
        let zz = embed(&[(a, &sz), (b, &sz)], n);
        h += (xx - yy + zz) * faer::Scale(j);
    }
    for (site, &field) in chain.fields().iter().enumerate() {
        h += embed(&[(site, &sz)], n) * faer::Scale(j * field);
    }
    Ok(h)
}

struct DenseSpectrum {
    energies: Vec<f64>,
    vectors: Mat<f64>,
}

impl DenseSpectrum {
    fn new(h: &Mat<f64>) -> Result<Self> {
        let evd = h
            .self_adjoint_eigen(Side::Lower)
            .map_err(|_| Error::Domain("full-space eigendecomposition failed".into()))?;
        Ok(Self {
            energies: evd.S().column_vector().iter().copied().collect(),
            vectors: evd.U().to_owned(),
        })
    }

    fn evolve(&self, psi: &[C64], t: f64) -> Vec<C64> {
        let d = psi.len();
        let coeffs: Vec<C64> = (0..d)
            .map(|n| {
                let c: C64 = (0..d).map(|i| psi[i] * self.vectors[(i, n)]).sum();
                c * C64::from_polar(1.0, -self.energies[n] * t)
            })
            .collect();
        (0..d)
            .map(|i| (0..d).map(|n| coeffs[n] * self.vectors[(i, n)]).sum())
            .collect()
    }
}

/// Environment state over the full `2^{L−l}` space.
pub fn dense_environment(kind: EnvironmentKind, spec: &DisorderedChainSpec, t_neel: f64) -> Result<Vec<C64>> {
    let n = spec.environment_sites();
    let mut neel = vec![C64::new(0.0, 0.0); 1 << n];
    neel[neel_bits(n) as usize] = C64::new(1.0, 0.0);
    match kind {
        EnvironmentKind::Neel => Ok(neel),
        EnvironmentKind::EvolvedNeel => {
            let spectrum = DenseSpectrum::new(&dense_hamiltonian(&spec.environment_chain()?)?)?;
            Ok(spectrum.evolve(&neel, t_neel))
        }
        EnvironmentKind::MidSpectrumEigenstate => {
            let spectrum = DenseSpectrum::new(&dense_hamiltonian(&spec.environment_chain()?)?)?;
            let index = (1usize << n) / 2;
            Ok((0..1usize << n)
                .map(|i| C64::new(spectrum.vectors[(i, index)], 0.0))
                .collect())
        }
    }
}

/// `Tr_e |ψ⟩⟨ψ|` by direct index loops over a full-space vector.
pub fn dense_partial_trace(psi: &[C64], message_sites: usize) -> Result<DensityMatrix> {
    let d = 1usize << message_sites;
    let env_dim = psi.len() / d;
    if env_dim * d != psi.len() {
        return Err(domain("state length is not a multiple of the message dimension"));
    }
    let rho = Mat::<C64>::from_fn(d, d, |a, b| {
        (0..env_dim).map(|e| psi[a + e * d] * psi[b + e * d].conj()).sum()
    });
    DensityMatrix::new(rho)
}

/// Holevo rate on `times` computed entirely in the full space.
pub fn full_space_holevo_trace(
    spec: &DisorderedChainSpec,
    kind: EnvironmentKind,
    t_neel: f64,
    ensemble: &MessageEnsemble,
    times: &[f64],
) -> Result<Vec<HolevoSample>> {
    let l = spec.message_sites();
    if ensemble.message_sites() != l {
        return Err(domain("ensemble length differs from the spec's message length"));
    }
    let ring = DenseSpectrum::new(&dense_hamiltonian(&spec.ring()?)?)?;
    let env = dense_environment(kind, spec, t_neel)?;
    let full_dim = 1usize << spec.total_sites();
    // reduced[k][t]
    let reduced: Vec<Vec<DensityMatrix>> = ensemble
        .messages()
        .map(|m| {
            let mut psi0 = vec![C64::new(0.0, 0.0); full_dim];
            for (e, &a) in env.iter().enumerate() {
                psi0[m as usize | (e << l)] = a;
            }
            times
                .iter()
                .map(|&t| dense_partial_trace(&ring.evolve(&psi0, t), l))
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<_>>()?;
    times
        .iter()
        .enumerate()
        .map(|(ti, &time)| {
            let states: Vec<DensityMatrix> = reduced.iter().map(|r| r[ti].clone()).collect();
            let holevo = holevo_quantity(&states, ensemble.probabilities())?;
            Ok(HolevoSample {
                time,
                holevo,
                rate: holevo / l as f64,
            })
        })
        .collect()
}
