//! Exact unitary time evolution from per-sector eigendecompositions.
//!
//! Each sector block `H_k = V diag(E) Vᵀ` is diagonalized once; afterwards
//! `ψ(t) = V e^{-iEt} Vᵀ ψ(0)` costs two dense products per batch of times.
//! Eigenvectors are real because the blocks are real symmetric.

use std::collections::BTreeMap;

use faer::{Mat, Side};

use crate::basis::{popcount, SectorBasis, SpinBasisIndex};
use crate::error::{domain, Error, Result};
use crate::hamiltonian::{BlockedHamiltonian, HamiltonianBlock};
use crate::C64;

/// Where a state's amplitudes live.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Support {
    /// Amplitudes indexed by position in the [`SectorBasis`] with this
    /// popcount.
    Sector(usize),
    /// Amplitudes indexed directly by bitmask over all `2^n` states.
    Full,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PureState {
    sites: usize,
    support: Support,
    amplitudes: Vec<C64>,
}

impl PureState {
    /// Computational basis state `|bits⟩`, stored in its sector.
    pub fn basis_state(sites: usize, bits: SpinBasisIndex) -> Result<Self> {
        if sites < 64 && bits >> sites != 0 {
            return Err(domain(format!("bitmask {bits:#b} has bits beyond {sites} sites")));
        }
        let basis = SectorBasis::new(sites, popcount(bits))?;
        let mut amplitudes = vec![C64::new(0.0, 0.0); basis.len()];
        amplitudes[basis.index_of(bits).expect("bits lie in their own sector")] = C64::new(1.0, 0.0);
        Ok(Self {
            sites,
            support: Support::Sector(basis.popcount()),
            amplitudes,
        })
    }

    pub fn from_sector(sites: usize, popcount: usize, amplitudes: Vec<C64>) -> Result<Self> {
        let expected = crate::basis::binomial(sites, popcount);
        if popcount > sites || amplitudes.len() != expected {
            return Err(domain(format!(
                "sector ({sites} sites, {popcount} down) has dimension {expected}, got {} amplitudes",
                amplitudes.len()
            )));
        }
        Ok(Self {
            sites,
            support: Support::Sector(popcount),
            amplitudes,
        })
    }

    pub fn from_full(sites: usize, amplitudes: Vec<C64>) -> Result<Self> {
        if sites >= 64 || amplitudes.len() != 1usize << sites {
            return Err(domain(format!(
                "full space of {sites} sites needs 2^{sites} amplitudes, got {}",
                amplitudes.len()
            )));
        }
        Ok(Self {
            sites,
            support: Support::Full,
            amplitudes,
        })
    }

    pub fn sites(&self) -> usize {
        self.sites
    }

    pub fn support(&self) -> Support {
        self.support
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amplitudes
    }

    pub fn norm(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn normalized(mut self) -> Self {
        let n = self.norm();
        if n > 0.0 {
            self.amplitudes.iter_mut().for_each(|a| *a /= n);
        }
        self
    }

    /// `(bitmask, amplitude)` pairs in storage order.
    pub fn entries(&self) -> Vec<(SpinBasisIndex, C64)> {
        match self.support {
            Support::Full => self
                .amplitudes
                .iter()
                .enumerate()
                .map(|(i, &a)| (i as SpinBasisIndex, a))
                .collect(),
            Support::Sector(k) => SectorBasis::new(self.sites, k)
                .expect("sector validated at construction")
                .states()
                .iter()
                .copied()
                .zip(self.amplitudes.iter().copied())
                .collect(),
        }
    }

    /// Amplitudes over all `2^n` states.
    pub fn to_full(&self) -> Vec<C64> {
        let mut full = vec![C64::new(0.0, 0.0); 1usize << self.sites];
        for (bits, a) in self.entries() {
            full[bits as usize] = a;
        }
        full
    }

    /// `⟨self|other⟩`, over the full space.
    pub fn inner(&self, other: &PureState) -> Result<C64> {
        if self.sites != other.sites {
            return Err(domain("inner product of states on different chains"));
        }
        if self.support == other.support {
            return Ok(self
                .amplitudes
                .iter()
                .zip(&other.amplitudes)
                .map(|(a, b)| a.conj() * b)
                .sum());
        }
        let (a, b) = (self.to_full(), other.to_full());
        Ok(a.iter().zip(&b).map(|(x, y)| x.conj() * y).sum())
    }
}

/// Eigenpairs of one sector block, energies ascending.
#[derive(Debug, Clone)]
pub struct SectorSpectrum {
    pub basis: SectorBasis,
    pub energies: Vec<f64>,
    /// Column `i` is the eigenvector of `energies[i]` in basis order.
    pub vectors: Mat<f64>,
}

impl SectorSpectrum {
    pub fn from_block(block: &HamiltonianBlock) -> Result<Self> {
        let popcount = block.basis.popcount();
        let evd = block
            .matrix
            .self_adjoint_eigen(Side::Lower)
            .map_err(|_| Error::Eigensolver { popcount })?;
        let energies: Vec<f64> = evd.S().column_vector().iter().copied().collect();
        if energies.iter().any(|e| !e.is_finite()) {
            return Err(Error::Eigensolver { popcount });
        }
        Ok(Self {
            basis: block.basis.clone(),
            energies,
            vectors: evd.U().to_owned(),
        })
    }

    pub fn dim(&self) -> usize {
        self.energies.len()
    }

    /// `‖V diag(E) Vᵀ − H‖_F / ‖H‖_F`.
    pub fn reconstruction_error(&self, block: &HamiltonianBlock) -> f64 {
        let d = self.dim();
        let scaled = Mat::<f64>::from_fn(d, d, |i, j| self.vectors[(i, j)] * self.energies[j]);
        let rebuilt = &scaled * self.vectors.transpose();
        let diff = &rebuilt - &block.matrix;
        let norm = block.matrix.norm_l2();
        diff.norm_l2() / if norm > 0.0 { norm } else { 1.0 }
    }

    /// `max |VᵀV − I|`.
    pub fn orthonormality_error(&self) -> f64 {
        let gram = self.vectors.transpose() * &self.vectors;
        let d = self.dim();
        let mut worst = 0.0f64;
        for i in 0..d {
            for j in 0..d {
                let target = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((gram[(i, j)] - target).abs());
            }
        }
        worst
    }

    /// Evolves sector amplitudes to every time in `times`.
    ///
    /// Returns the real and imaginary parts as `dim × times.len()` matrices,
    /// one column per time.
    pub fn propagate(&self, amplitudes: &[C64], times: &[f64]) -> Result<(Mat<f64>, Mat<f64>)> {
        let d = self.dim();
        if amplitudes.len() != d {
            return Err(domain(format!(
                "state has {} amplitudes but the sector has dimension {d}",
                amplitudes.len()
            )));
        }
        let psi = Mat::<f64>::from_fn(d, 2, |i, j| if j == 0 { amplitudes[i].re } else { amplitudes[i].im });
        let coeffs = self.vectors.transpose() * &psi;
        let nt = times.len();
        // [Re | Im] of e^{-iEt} c for every t, so one product covers both.
        let phased = Mat::<f64>::from_fn(d, 2 * nt, |i, col| {
            let t = times[col % nt];
            let (s, c) = (self.energies[i] * t).sin_cos();
            let (re, im) = (coeffs[(i, 0)], coeffs[(i, 1)]);
            if col < nt {
                re * c + im * s
            } else {
                im * c - re * s
            }
        });
        let out = &self.vectors * &phased;
        let re = out.subcols(0, nt).to_owned();
        let im = out.subcols(nt, nt).to_owned();
        Ok((re, im))
    }
}

/// Eigendecomposition of every block present in a [`BlockedHamiltonian`].
#[derive(Debug, Clone)]
pub struct SpectralDecomposition {
    sites: usize,
    sectors: BTreeMap<usize, SectorSpectrum>,
}

impl SpectralDecomposition {
    pub fn from_sectors(sites: usize, sectors: impl IntoIterator<Item = (usize, SectorSpectrum)>) -> Self {
        Self {
            sites,
            sectors: sectors.into_iter().collect(),
        }
    }

    pub fn sites(&self) -> usize {
        self.sites
    }

    pub fn sector(&self, popcount: usize) -> Option<&SectorSpectrum> {
        self.sectors.get(&popcount)
    }

    pub fn sectors(&self) -> impl Iterator<Item = (usize, &SectorSpectrum)> {
        self.sectors.iter().map(|(&k, s)| (k, s))
    }

    pub fn is_complete(&self) -> bool {
        self.sectors.len() == self.sites + 1
    }
}

pub fn decompose(h: &BlockedHamiltonian) -> Result<SpectralDecomposition> {
    let sectors = h
        .blocks()
        .map(|(k, block)| SectorSpectrum::from_block(block).map(|s| (k, s)))
        .collect::<Result<_>>()?;
    Ok(SpectralDecomposition {
        sites: h.sites(),
        sectors,
    })
}

/// `e^{-iHt} |ψ₀⟩`.
///
/// Sector states stay in their sector. Full-space states are split over the
/// decomposed sectors; any weight in a sector that was not decomposed is an
/// error.
pub fn evolve(psi0: &PureState, decomp: &SpectralDecomposition, t: f64) -> Result<PureState> {
    if psi0.sites() != decomp.sites() {
        return Err(domain(format!(
            "state on {} sites cannot be evolved by a {}-site Hamiltonian",
            psi0.sites(),
            decomp.sites()
        )));
    }
    if !(t >= 0.0) {
        return Err(domain(format!("evolution time must be non-negative, got {t}")));
    }
    match psi0.support() {
        Support::Sector(k) => {
            let spectrum = decomp
                .sector(k)
                .ok_or_else(|| domain(format!("sector {k} was not decomposed")))?;
            let (re, im) = spectrum.propagate(psi0.amplitudes(), &[t])?;
            let amps = (0..spectrum.dim()).map(|i| C64::new(re[(i, 0)], im[(i, 0)])).collect();
            PureState::from_sector(psi0.sites(), k, amps)
        }
        Support::Full => {
            let full = psi0.amplitudes();
            let mut out = vec![C64::new(0.0, 0.0); full.len()];
            let mut covered = 0.0;
            for (_, spectrum) in decomp.sectors() {
                let local: Vec<C64> = spectrum.basis.states().iter().map(|&b| full[b as usize]).collect();
                covered += local.iter().map(|a| a.norm_sqr()).sum::<f64>();
                let (re, im) = spectrum.propagate(&local, &[t])?;
                for (i, &b) in spectrum.basis.states().iter().enumerate() {
                    out[b as usize] = C64::new(re[(i, 0)], im[(i, 0)]);
                }
            }
            let total: f64 = full.iter().map(|a| a.norm_sqr()).sum();
            if (total - covered).abs() > 1e-12 * total.max(1.0) {
                return Err(domain("state has weight in sectors that were not decomposed"));
            }
            PureState::from_full(psi0.sites(), out)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hamiltonian::{Chain, Topology};

    fn ring(fields: Vec<f64>) -> BlockedHamiltonian {
        BlockedHamiltonian::new(&Chain::new(fields, 1.0, Topology::Ring).unwrap()).unwrap()
    }

    #[test]
    fn all_up_three_site_ring() {
        let d = decompose(&ring(vec![0.0; 3])).unwrap();
        assert_eq!(d.sector(0).unwrap().energies, vec![0.75]);
    }

    #[test]
    fn open_bond_single_flip_sector() {
        let chain = Chain::new(vec![0.0, 0.0], 1.0, Topology::Open).unwrap();
        let d = decompose(&BlockedHamiltonian::new(&chain).unwrap()).unwrap();
        let e = &d.sector(1).unwrap().energies;
        assert!((e[0] + 0.75).abs() < 1e-14 && (e[1] - 0.25).abs() < 1e-14);
    }

    #[test]
    fn reconstruction_and_orthonormality() {
        let h = ring(vec![0.7, -1.3, 2.1, 0.4, -0.9, 1.6]);
        let d = decompose(&h).unwrap();
        for (k, spectrum) in d.sectors() {
            assert!(spectrum.reconstruction_error(h.block(k).unwrap()) < 1e-10);
            assert!(spectrum.orthonormality_error() < 1e-10);
            assert!(spectrum.energies.windows(2).all(|w| w[0] <= w[1]));
        }
    }

    #[test]
    fn zero_time_is_identity() {
        let d = decompose(&ring(vec![0.5, -0.2, 0.1, 0.9, -0.4])).unwrap();
        let psi = PureState::basis_state(5, 0b01101).unwrap();
        let out = evolve(&psi, &d, 0.0).unwrap();
        for (a, b) in out.amplitudes().iter().zip(psi.amplitudes()) {
            assert!((a - b).norm() < 1e-12);
        }
    }

    #[test]
    fn eigenstate_only_acquires_phase() {
        let d = decompose(&ring(vec![0.5, -0.2, 0.1, 0.9, -0.4])).unwrap();
        let s = d.sector(2).unwrap();
        let v: Vec<C64> = (0..s.dim()).map(|i| C64::new(s.vectors[(i, 3)], 0.0)).collect();
        let psi = PureState::from_sector(5, 2, v.clone()).unwrap();
        let t = 2.7;
        let out = evolve(&psi, &d, t).unwrap();
        let phase = C64::from_polar(1.0, -s.energies[3] * t);
        for (a, b) in out.amplitudes().iter().zip(&v) {
            assert!((a - phase * b).norm() < 1e-12);
        }
    }

    #[test]
    fn full_support_matches_sector_support() {
        let d = decompose(&ring(vec![0.5, -0.2, 0.1, 0.9])).unwrap();
        let sector = PureState::basis_state(4, 0b0101).unwrap();
        let full = PureState::from_full(4, sector.to_full()).unwrap();
        let a = evolve(&sector, &d, 1.3).unwrap().to_full();
        let b = evolve(&full, &d, 1.3).unwrap().to_full();
        for (x, y) in a.iter().zip(&b) {
            assert!((x - y).norm() < 1e-13);
        }
    }

    #[test]
    fn missing_sector_and_bad_time_are_errors() {
        let chain = Chain::new(vec![0.0; 4], 1.0, Topology::Ring).unwrap();
        let h = BlockedHamiltonian::with_sectors(&chain, [2]).unwrap();
        let d = decompose(&h).unwrap();
        let psi = PureState::basis_state(4, 0b0001).unwrap();
        assert!(evolve(&psi, &d, 1.0).is_err());
        let psi = PureState::basis_state(4, 0b0011).unwrap();
        assert!(evolve(&psi, &d, -1.0).is_err());
        let psi = PureState::basis_state(5, 0b0011).unwrap();
        assert!(evolve(&psi, &d, 1.0).is_err());
    }
}
