//! Computational basis of a spin-1/2 chain and its total-Sᶻ sectors.
//!
//! Bit `j` of a basis index holds the message digit `m_{j+1}` of site `j+1`:
//! `0` is spin up (Sᶻ = +½), `1` is spin down (Sᶻ = −½). Site 1 is the least
//! significant bit. A sector is labelled by its popcount, the number of down
//! spins, which fixes the total magnetization `n/2 − popcount`.

use crate::error::{domain, Result};

/// Bitmask over `n` sites, site 1 in the least significant bit.
pub type SpinBasisIndex = u64;

/// Largest chain handled by the bit-level routines.
pub const MAX_SITES: usize = 32;

/// Sᶻ of `site` (zero-based) in basis state `bits`.
#[inline]
pub fn sz(bits: SpinBasisIndex, site: usize) -> f64 {
    if (bits >> site) & 1 == 0 {
        0.5
    } else {
        -0.5
    }
}

/// Number of down spins.
#[inline]
pub fn popcount(bits: SpinBasisIndex) -> usize {
    bits.count_ones() as usize
}

/// Binomial coefficient, exact for the sizes used here.
pub fn binomial(n: usize, k: usize) -> usize {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    (0..k).fold(1usize, |acc, i| acc * (n - i) / (i + 1))
}

/// All basis states of `sites` spins with a fixed number of down spins,
/// in strictly increasing bitmask order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SectorBasis {
    sites: usize,
    popcount: usize,
    states: Vec<SpinBasisIndex>,
}

impl SectorBasis {
    /// Enumerates the sector with `popcount` down spins on `sites` sites.
    pub fn new(sites: usize, popcount: usize) -> Result<Self> {
        if sites > MAX_SITES {
            return Err(domain(format!(
                "{sites} sites exceeds the supported maximum of {MAX_SITES}"
            )));
        }
        if popcount > sites {
            return Err(domain(format!(
                "sector with {popcount} down spins does not exist on {sites} sites"
            )));
        }
        let mut states = Vec::with_capacity(binomial(sites, popcount));
        if popcount == 0 {
            states.push(0);
        } else {
            // Gosper's hack: next larger integer with the same popcount.
            let limit: u64 = 1 << sites;
            let mut v: u64 = (1 << popcount) - 1;
            while v < limit {
                states.push(v);
                let c = v & v.wrapping_neg();
                let r = v + c;
                v = (((r ^ v) >> 2) / c) | r;
            }
        }
        Ok(Self {
            sites,
            popcount,
            states,
        })
    }

    pub fn sites(&self) -> usize {
        self.sites
    }

    pub fn popcount(&self) -> usize {
        self.popcount
    }

    pub fn states(&self) -> &[SpinBasisIndex] {
        &self.states
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    /// Position of `bits` in this sector, if it belongs to it.
    pub fn index_of(&self, bits: SpinBasisIndex) -> Option<usize> {
        self.states.binary_search(&bits).ok()
    }
}

/// Every sector of an `n`-site chain, ordered by popcount.
pub fn all_sectors(sites: usize) -> Result<Vec<SectorBasis>> {
    (0..=sites).map(|k| SectorBasis::new(sites, k)).collect()
}
