//! Disordered Heisenberg Hamiltonians, stored block-diagonally by sector.
//!
//! `H = J Σ_bonds S_i·S_j + J Σ_j h_j Sᶻ_j` with `S = σ/2`. The bond term
//! splits as `½(S⁺_i S⁻_j + S⁻_i S⁺_j) + Sᶻ_i Sᶻ_j`, so every matrix element
//! is real and the total magnetization is conserved. Blocks are real
//! symmetric (hence Hermitian) dense matrices in [`SectorBasis`] order.

use std::collections::BTreeMap;

use faer::Mat;

use crate::basis::{sz, SectorBasis, SpinBasisIndex};
use crate::error::{domain, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Topology {
    /// Periodic chain: bonds `(j, j+1)` and the wrap bond `(1, L)`.
    Ring,
    /// Open chain with bonds `(j, j+1)` only.
    Open,
}

/// Couplings and fields of one chain.
#[derive(Debug, Clone, PartialEq)]
pub struct Chain {
    coupling: f64,
    fields: Vec<f64>,
    topology: Topology,
}

impl Chain {
    pub fn new(fields: Vec<f64>, coupling: f64, topology: Topology) -> Result<Self> {
        let n = fields.len();
        match topology {
            Topology::Ring if n < 3 => return Err(domain(format!("a ring needs at least 3 sites, got {n}"))),
            Topology::Open if n == 0 => return Err(domain("an open chain needs at least 1 site")),
            _ => {}
        }
        if n > crate::basis::MAX_SITES {
            return Err(domain(format!("{n} sites is beyond the supported size")));
        }
        if !coupling.is_finite() || fields.iter().any(|h| !h.is_finite()) {
            return Err(domain("coupling and fields must be finite"));
        }
        Ok(Self {
            coupling,
            fields,
            topology,
        })
    }

    pub fn sites(&self) -> usize {
        self.fields.len()
    }

    pub fn coupling(&self) -> f64 {
        self.coupling
    }

    pub fn fields(&self) -> &[f64] {
        &self.fields
    }

    pub fn topology(&self) -> Topology {
        self.topology
    }

    /// Zero-based nearest-neighbour bonds, each listed once.
    pub fn bonds(&self) -> Vec<(usize, usize)> {
        let n = self.sites();
        let mut bonds: Vec<_> = (0..n.saturating_sub(1)).map(|j| (j, j + 1)).collect();
        if self.topology == Topology::Ring {
            bonds.push((0, n - 1));
        }
        bonds
    }

    /// Diagonal element `⟨s|H|s⟩`.
    pub fn diagonal(&self, bits: SpinBasisIndex) -> f64 {
        let exchange: f64 = self.bonds().iter().map(|&(i, j)| sz(bits, i) * sz(bits, j)).sum();
        let zeeman: f64 = self.fields.iter().enumerate().map(|(j, h)| h * sz(bits, j)).sum();
        self.coupling * (exchange + zeeman)
    }
}

/// One physical instance: a ring of `L` sites whose first `l` sites carry
/// the message and whose remaining `L − l` sites form the environment.
#[derive(Debug, Clone, PartialEq)]
pub struct DisorderedChainSpec {
    message_sites: usize,
    coupling: f64,
    fields: Vec<f64>,
}

impl DisorderedChainSpec {
    pub fn new(message_sites: usize, fields: Vec<f64>, coupling: f64) -> Result<Self> {
        let total = fields.len();
        if total < 3 {
            return Err(domain(format!("ring length must be at least 3, got {total}")));
        }
        if message_sites == 0 || message_sites >= total {
            return Err(domain(format!(
                "message length {message_sites} must satisfy 1 <= l < L = {total}"
            )));
        }
        Ok(Self {
            message_sites,
            coupling,
            fields,
        })
    }

    pub fn total_sites(&self) -> usize {
        self.fields.len()
    }

    pub fn message_sites(&self) -> usize {
        self.message_sites
    }

    pub fn environment_sites(&self) -> usize {
        self.total_sites() - self.message_sites
    }

    pub fn coupling(&self) -> f64 {
        self.coupling
    }

    pub fn fields(&self) -> &[f64] {
        &self.fields
    }

    /// The full ring `H = H_s + H_e + H_se`.
    pub fn ring(&self) -> Result<Chain> {
        Chain::new(self.fields.clone(), self.coupling, Topology::Ring)
    }

    /// The open environment chain `H_e` on sites `l+1..L`, sharing the
    /// ring's fields.
    pub fn environment_chain(&self) -> Result<Chain> {
        Chain::new(
            self.fields[self.message_sites..].to_vec(),
            self.coupling,
            Topology::Open,
        )
    }
}

#[derive(Debug, Clone)]
pub struct HamiltonianBlock {
    pub basis: SectorBasis,
    pub matrix: Mat<f64>,
}

/// A Hamiltonian as a direct sum of sector blocks keyed by popcount.
///
/// A blocked Hamiltonian may hold only a subset of the sectors; consumers
/// that need a sector which was not built get a domain error.
#[derive(Debug, Clone)]
pub struct BlockedHamiltonian {
    chain: Chain,
    blocks: BTreeMap<usize, HamiltonianBlock>,
}

impl BlockedHamiltonian {
    /// Builds every sector.
    pub fn new(chain: &Chain) -> Result<Self> {
        Self::with_sectors(chain, 0..=chain.sites())
    }

    /// Builds only the listed sectors.
    pub fn with_sectors(chain: &Chain, sectors: impl IntoIterator<Item = usize>) -> Result<Self> {
        let mut blocks = BTreeMap::new();
        for k in sectors {
            if blocks.contains_key(&k) {
                continue;
            }
            let basis = SectorBasis::new(chain.sites(), k)?;
            let matrix = build_block(chain, &basis);
            blocks.insert(k, HamiltonianBlock { basis, matrix });
        }
        Ok(Self {
            chain: chain.clone(),
            blocks,
        })
    }

    pub fn chain(&self) -> &Chain {
        &self.chain
    }

    pub fn sites(&self) -> usize {
        self.chain.sites()
    }

    pub fn block(&self, popcount: usize) -> Option<&HamiltonianBlock> {
        self.blocks.get(&popcount)
    }

    pub fn blocks(&self) -> impl Iterator<Item = (usize, &HamiltonianBlock)> {
        self.blocks.iter().map(|(&k, b)| (k, b))
    }

    pub fn into_blocks(self) -> BTreeMap<usize, HamiltonianBlock> {
        self.blocks
    }

    /// Whether every sector of the chain is present.
    pub fn is_complete(&self) -> bool {
        self.blocks.len() == self.sites() + 1
    }

    /// Scatters the blocks into the full `2^n × 2^n` matrix. Sectors that
    /// were not built are left zero.
    pub fn to_dense(&self) -> Mat<f64> {
        let dim = 1usize << self.sites();
        let mut full = Mat::<f64>::zeros(dim, dim);
        for block in self.blocks.values() {
            let states = block.basis.states();
            for (c, &sc) in states.iter().enumerate() {
                for (r, &sr) in states.iter().enumerate() {
                    full[(sr as usize, sc as usize)] = block.matrix[(r, c)];
                }
            }
        }
        full
    }
}

/// Matrix of `chain`'s Hamiltonian restricted to one sector.
pub fn build_block(chain: &Chain, basis: &SectorBasis) -> Mat<f64> {
    let d = basis.len();
    let bonds = chain.bonds();
    let flip = 0.5 * chain.coupling();
    let mut m = Mat::<f64>::zeros(d, d);
    for (col, &s) in basis.states().iter().enumerate() {
        m[(col, col)] = chain.diagonal(s);
        for &(i, j) in &bonds {
            if ((s >> i) ^ (s >> j)) & 1 == 1 {
                let flipped = s ^ ((1 << i) | (1 << j));
                let row = basis.index_of(flipped).expect("spin exchange preserves the sector");
                m[(row, col)] += flip;
            }
        }
    }
    m
}

#[cfg(test)]
mod tests {
    use super::*;

    fn eigenvalues(m: &Mat<f64>) -> Vec<f64> {
        m.self_adjoint_eigenvalues(faer::Side::Lower).unwrap()
    }

    #[test]
    fn single_bond_singlet_triplet() {
        let chain = Chain::new(vec![0.0, 0.0], 1.0, Topology::Open).unwrap();
        let h = BlockedHamiltonian::new(&chain).unwrap();
        let mut ev = eigenvalues(&h.to_dense());
        ev.sort_by(f64::total_cmp);
        let expected = [-0.75, 0.25, 0.25, 0.25];
        for (a, b) in ev.iter().zip(expected) {
            assert!((a - b).abs() < 1e-12, "{ev:?}");
        }
    }

    #[test]
    fn three_site_ring_is_traceless() {
        let chain = Chain::new(vec![0.0; 3], 1.0, Topology::Ring).unwrap();
        let h = BlockedHamiltonian::new(&chain).unwrap();
        let trace: f64 = h
            .blocks()
            .map(|(_, b)| (0..b.basis.len()).map(|i| b.matrix[(i, i)]).sum::<f64>())
            .sum();
        assert!(trace.abs() < 1e-14);
        // all-up sector: three Sᶻ·Sᶻ bonds at +1/4
        assert!((h.block(0).unwrap().matrix[(0, 0)] - 0.75).abs() < 1e-15);
    }

    #[test]
    fn ring_has_no_duplicate_bonds() {
        let chain = Chain::new(vec![0.0; 3], 1.0, Topology::Ring).unwrap();
        assert_eq!(chain.bonds(), vec![(0, 1), (1, 2), (0, 2)]);
        let chain = Chain::new(vec![0.0; 5], 1.0, Topology::Ring).unwrap();
        assert_eq!(chain.bonds().len(), 5);
    }

    #[test]
    fn short_rings_are_rejected() {
        assert!(Chain::new(vec![0.0; 2], 1.0, Topology::Ring).is_err());
        assert!(Chain::new(vec![0.0; 1], 1.0, Topology::Open).is_ok());
        assert!(DisorderedChainSpec::new(2, vec![0.0; 2], 1.0).is_err());
        assert!(DisorderedChainSpec::new(4, vec![0.0; 4], 1.0).is_err());
        assert!(DisorderedChainSpec::new(0, vec![0.0; 4], 1.0).is_err());
    }

    #[test]
    fn blocks_are_symmetric() {
        let fields = vec![0.3, -1.2, 0.8, 2.0, -0.1, 0.4, 1.1];
        let chain = Chain::new(fields, 1.0, Topology::Ring).unwrap();
        let h = BlockedHamiltonian::new(&chain).unwrap();
        for (_, b) in h.blocks() {
            let d = b.basis.len();
            let scale = (0..d)
                .flat_map(|i| (0..d).map(move |j| (i, j)))
                .map(|(i, j)| b.matrix[(i, j)].abs())
                .fold(0.0, f64::max);
            for i in 0..d {
                for j in 0..d {
                    assert!((b.matrix[(i, j)] - b.matrix[(j, i)]).abs() <= 1e-12 * scale);
                }
            }
        }
    }

    #[test]
    fn environment_chain_uses_trailing_fields() {
        let spec = DisorderedChainSpec::new(2, vec![1.0, 2.0, 3.0, 4.0, 5.0], 1.0).unwrap();
        let env = spec.environment_chain().unwrap();
        assert_eq!(env.fields(), &[3.0, 4.0, 5.0]);
        assert_eq!(env.topology(), Topology::Open);
        assert_eq!(spec.ring().unwrap().bonds().len(), 5);
    }
}
