//! Initial states of the environment sites `l+1..L`.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::basis::{binomial, SpinBasisIndex};
use crate::error::{domain, Result};
use crate::evolution::{evolve, PureState, SectorSpectrum, SpectralDecomposition};
use crate::hamiltonian::{BlockedHamiltonian, DisorderedChainSpec};
use crate::C64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EnvironmentKind {
    /// Product state `|0,1,0,1,…⟩`.
    #[serde(rename = "neel")]
    Neel,
    /// Néel state evolved under the environment Hamiltonian.
    #[serde(rename = "evolved")]
    EvolvedNeel,
    /// Eigenstate of the environment Hamiltonian at the median energy.
    #[serde(rename = "eigenstate")]
    MidSpectrumEigenstate,
}

impl EnvironmentKind {
    pub const ALL: [EnvironmentKind; 3] = [
        EnvironmentKind::Neel,
        EnvironmentKind::EvolvedNeel,
        EnvironmentKind::MidSpectrumEigenstate,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            EnvironmentKind::Neel => "neel",
            EnvironmentKind::EvolvedNeel => "evolved",
            EnvironmentKind::MidSpectrumEigenstate => "eigenstate",
        }
    }
}

impl fmt::Display for EnvironmentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for EnvironmentKind {
    type Err = crate::Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "neel" => Ok(Self::Neel),
            "evolved" => Ok(Self::EvolvedNeel),
            "eigenstate" => Ok(Self::MidSpectrumEigenstate),
            other => Err(domain(format!(
                "unknown environment `{other}` (expected neel, evolved or eigenstate)"
            ))),
        }
    }
}

/// Bitmask of the Néel pattern: up on the first site, then alternating.
pub fn neel_bits(sites: usize) -> SpinBasisIndex {
    (0..sites).filter(|j| j % 2 == 1).fold(0, |acc, j| acc | (1 << j))
}

/// `|0,1,0,1,…⟩` on `sites` sites, stored in its sector (`⌊n/2⌋` down spins).
pub fn neel_state(sites: usize) -> Result<PureState> {
    if sites == 0 {
        return Err(domain("the environment needs at least one site"));
    }
    PureState::basis_state(sites, neel_bits(sites))
}

/// `e^{-iH_e t} |Néel⟩`. Only the Néel sector of `h_env` is needed.
pub fn evolved_neel_state(h_env: &BlockedHamiltonian, t_neel: f64) -> Result<PureState> {
    let neel = neel_state(h_env.sites())?;
    let sector = h_env.sites() / 2;
    let block = h_env
        .block(sector)
        .ok_or_else(|| domain(format!("environment Hamiltonian lacks the Néel sector {sector}")))?;
    let spectrum = SectorSpectrum::from_block(block)?;
    let decomp = SpectralDecomposition::from_sectors(h_env.sites(), [(sector, spectrum)]);
    Ok(evolve(&neel, &decomp, t_neel)?.normalized())
}

/// The eigenstate at index `⌊2^n / 2⌋` of the pooled, ascending spectrum of
/// `h_env`, with its energy. Ties go to the lower sector, then the lower
/// in-sector index.
pub fn mid_spectrum_eigenstate(h_env: &BlockedHamiltonian) -> Result<(f64, PureState)> {
    if !h_env.is_complete() {
        return Err(domain(
            "the median eigenstate needs every sector of the environment Hamiltonian",
        ));
    }
    let n = h_env.sites();
    let spectra = h_env
        .blocks()
        .map(|(k, block)| SectorSpectrum::from_block(block).map(|s| (k, s)))
        .collect::<Result<Vec<_>>>()?;
    let mut pooled: Vec<(f64, usize, usize)> = spectra
        .iter()
        .flat_map(|(k, s)| s.energies.iter().enumerate().map(move |(i, &e)| (e, *k, i)))
        .collect();
    debug_assert_eq!(pooled.len(), 1 << n);
    pooled.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));
    let (energy, sector, index) = pooled[pooled.len() / 2];
    let spectrum = &spectra
        .iter()
        .find(|(k, _)| *k == sector)
        .expect("sector comes from the pooled list")
        .1;
    let amplitudes: Vec<C64> = (0..binomial(n, sector))
        .map(|i| C64::new(spectrum.vectors[(i, index)], 0.0))
        .collect();
    Ok((energy, PureState::from_sector(n, sector, amplitudes)?.normalized()))
}

/// Environment state of `kind` for one disorder realization.
pub fn prepare_environment(kind: EnvironmentKind, spec: &DisorderedChainSpec, t_neel: f64) -> Result<PureState> {
    let n = spec.environment_sites();
    match kind {
        EnvironmentKind::Neel => neel_state(n),
        EnvironmentKind::EvolvedNeel => {
            let h_env = BlockedHamiltonian::with_sectors(&spec.environment_chain()?, [n / 2])?;
            evolved_neel_state(&h_env, t_neel)
        }
        EnvironmentKind::MidSpectrumEigenstate => {
            let h_env = BlockedHamiltonian::new(&spec.environment_chain()?)?;
            mid_spectrum_eigenstate(&h_env).map(|(_, state)| state)
        }
    }
}
