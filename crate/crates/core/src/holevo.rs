//! Holevo quantity of the message ensemble after transmission through the
//! ring, and its rate per message qubit.
//!
//! Every message `|m⟩` is a computational basis state of the first `l`
//! sites. With the environment in a single magnetization sector, the joint
//! initial state `|m⟩ ⊗ |e⟩` also lives in one sector, so each message is
//! evolved inside its own block and then reduced to a `2^l × 2^l` matrix.
//! The average state is accumulated only in that reduced space.

use std::collections::BTreeMap;

use crate::basis::{popcount, SpinBasisIndex};
use crate::density::{DensityMatrix, ReductionPlan};
use crate::error::{domain, Result};
use crate::evolution::{PureState, SectorSpectrum, SpectralDecomposition, Support};
use crate::hamiltonian::{BlockedHamiltonian, DisorderedChainSpec};
use crate::C64;

/// The `2^l` computational-basis messages and their prior.
#[derive(Debug, Clone, PartialEq)]
pub struct MessageEnsemble {
    message_sites: usize,
    probabilities: Vec<f64>,
}

impl MessageEnsemble {
    /// All `2^l` messages, equiprobable.
    pub fn uniform(message_sites: usize) -> Result<Self> {
        if message_sites == 0 || message_sites > 20 {
            return Err(domain(format!(
                "message length {message_sites} outside the supported range 1..=20"
            )));
        }
        let m = 1usize << message_sites;
        Ok(Self {
            message_sites,
            probabilities: vec![1.0 / m as f64; m],
        })
    }

    /// `probabilities[k]` is the prior of message bitmask `k`.
    pub fn with_probabilities(message_sites: usize, probabilities: Vec<f64>) -> Result<Self> {
        let uniform = Self::uniform(message_sites)?;
        if probabilities.len() != uniform.len() {
            return Err(domain(format!(
                "{} probabilities for {} messages",
                probabilities.len(),
                uniform.len()
            )));
        }
        check_probabilities(&probabilities)?;
        Ok(Self {
            message_sites,
            probabilities,
        })
    }

    pub fn message_sites(&self) -> usize {
        self.message_sites
    }

    pub fn len(&self) -> usize {
        self.probabilities.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probabilities.is_empty()
    }

    pub fn probabilities(&self) -> &[f64] {
        &self.probabilities
    }

    pub fn messages(&self) -> impl Iterator<Item = SpinBasisIndex> {
        0..self.len() as SpinBasisIndex
    }
}

fn check_probabilities(p: &[f64]) -> Result<()> {
    if p.iter().any(|&x| !(x >= 0.0)) {
        return Err(domain("probabilities must be non-negative"));
    }
    let total: f64 = p.iter().sum();
    if (total - 1.0).abs() > 1e-12 {
        return Err(domain(format!("probabilities sum to {total}, expected 1")));
    }
    Ok(())
}

/// Holevo quantity (bits) and rate at one time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HolevoSample {
    pub time: f64,
    pub holevo: f64,
    pub rate: f64,
}

/// `χ = S(Σ_k p_k ρ_k) − Σ_k p_k S(ρ_k)`, clipped at zero.
pub fn holevo_quantity(states: &[DensityMatrix], probabilities: &[f64]) -> Result<f64> {
    check_probabilities(probabilities)?;
    let average = DensityMatrix::mixture(states, probabilities)?;
    let mut conditional = 0.0;
    for (rho, &p) in states.iter().zip(probabilities) {
        if p > 0.0 {
            conditional += p * rho.entropy()?;
        }
    }
    Ok((average.entropy()? - conditional).max(0.0))
}

fn check_times(times: &[f64]) -> Result<()> {
    if times.is_empty() {
        return Err(domain("time grid is empty"));
    }
    if times.iter().any(|t| !(*t >= 0.0) || !t.is_finite()) {
        return Err(domain("times must be finite and non-negative"));
    }
    if times.windows(2).any(|w| w[0] > w[1]) {
        return Err(domain("time grid must be ascending"));
    }
    Ok(())
}

fn environment_sector(env: &PureState) -> Result<usize> {
    match env.support() {
        Support::Sector(k) => Ok(k),
        Support::Full => Err(domain(
            "the blocked pipeline needs an environment state confined to one sector",
        )),
    }
}

/// Reduced states `ρ_k(t)` of the messages that land in `spectrum`'s sector.
fn reduce_sector_messages(
    spectrum: &SectorSpectrum,
    message_sites: usize,
    env_entries: &[(SpinBasisIndex, C64)],
    messages: &[SpinBasisIndex],
    times: &[f64],
) -> Result<Vec<(SpinBasisIndex, Vec<DensityMatrix>)>> {
    let basis = &spectrum.basis;
    let plan = ReductionPlan::new(basis.states(), message_sites);
    let mut out = Vec::with_capacity(messages.len());
    for &m in messages {
        let mut amplitudes = vec![C64::new(0.0, 0.0); basis.len()];
        for &(e, a) in env_entries {
            let pos = basis
                .index_of(m | (e << message_sites))
                .ok_or_else(|| domain("message and environment do not share the sector"))?;
            amplitudes[pos] = a;
        }
        let (re, im) = spectrum.propagate(&amplitudes, times)?;
        let reduced = (0..times.len())
            .map(|t| plan.reduce(|pos| C64::new(re[(pos, t)], im[(pos, t)])))
            .collect();
        out.push((m, reduced));
    }
    Ok(out)
}

/// Messages grouped by the joint sector they occupy.
fn messages_by_sector(ensemble: &MessageEnsemble, env_popcount: usize) -> BTreeMap<usize, Vec<SpinBasisIndex>> {
    let mut groups: BTreeMap<usize, Vec<SpinBasisIndex>> = BTreeMap::new();
    for m in ensemble.messages() {
        groups.entry(popcount(m) + env_popcount).or_default().push(m);
    }
    groups
}

fn assemble(reduced: Vec<Vec<DensityMatrix>>, ensemble: &MessageEnsemble, times: &[f64]) -> Result<Vec<HolevoSample>> {
    let l = ensemble.message_sites() as f64;
    let mut columns: Vec<std::vec::IntoIter<DensityMatrix>> = reduced.into_iter().map(Vec::into_iter).collect();
    times
        .iter()
        .map(|&time| {
            let states: Vec<DensityMatrix> = columns
                .iter_mut()
                .map(|c| c.next().expect("one reduced state per time"))
                .collect();
            let holevo = holevo_quantity(&states, ensemble.probabilities())?;
            Ok(HolevoSample {
                time,
                holevo,
                rate: holevo / l,
            })
        })
        .collect()
}

fn check_sizes(total: usize, env: &PureState, ensemble: &MessageEnsemble) -> Result<()> {
    let l = ensemble.message_sites();
    if env.sites() == 0 || l + env.sites() != total {
        return Err(domain(format!(
            "message ({l} sites) plus environment ({} sites) must fill the {total}-site ring \
             with at least one environment site",
            env.sites()
        )));
    }
    Ok(())
}

/// Holevo rate on `times` using a precomputed decomposition of the ring.
///
/// `decomp` must contain every sector reached by `message ⊗ env`.
pub fn holevo_rate_trace(
    decomp: &SpectralDecomposition,
    env: &PureState,
    ensemble: &MessageEnsemble,
    times: &[f64],
) -> Result<Vec<HolevoSample>> {
    check_sizes(decomp.sites(), env, ensemble)?;
    check_times(times)?;
    let env_sector = environment_sector(env)?;
    let env_entries = env.entries();
    let l = ensemble.message_sites();
    let mut reduced: Vec<Option<Vec<DensityMatrix>>> = vec![None; ensemble.len()];
    for (sector, messages) in messages_by_sector(ensemble, env_sector) {
        let spectrum = decomp
            .sector(sector)
            .ok_or_else(|| domain(format!("sector {sector} missing from the decomposition")))?;
        for (m, states) in reduce_sector_messages(spectrum, l, &env_entries, &messages, times)? {
            reduced[m as usize] = Some(states);
        }
    }
    assemble(
        reduced.into_iter().map(|r| r.expect("every message reduced")).collect(),
        ensemble,
        times,
    )
}

/// Same as [`holevo_rate_trace`], but builds and diagonalizes one ring
/// sector at a time and drops it before the next, so peak memory is a
/// single block.
pub fn holevo_rate_trace_streaming(
    spec: &DisorderedChainSpec,
    env: &PureState,
    ensemble: &MessageEnsemble,
    times: &[f64],
) -> Result<Vec<HolevoSample>> {
    check_sizes(spec.total_sites(), env, ensemble)?;
    if spec.message_sites() != ensemble.message_sites() {
        return Err(domain("ensemble length differs from the spec's message length"));
    }
    check_times(times)?;
    let env_sector = environment_sector(env)?;
    let env_entries = env.entries();
    let ring = spec.ring()?;
    let l = ensemble.message_sites();
    let mut reduced: Vec<Option<Vec<DensityMatrix>>> = vec![None; ensemble.len()];
    for (sector, messages) in messages_by_sector(ensemble, env_sector) {
        let h = BlockedHamiltonian::with_sectors(&ring, [sector])?;
        let spectrum = SectorSpectrum::from_block(h.block(sector).expect("sector just built"))?;
        drop(h);
        for (m, states) in reduce_sector_messages(&spectrum, l, &env_entries, &messages, times)? {
            reduced[m as usize] = Some(states);
        }
    }
    assemble(
        reduced.into_iter().map(|r| r.expect("every message reduced")).collect(),
        ensemble,
        times,
    )
}
