//! Cross-checks against independent dense implementations.

use mbl_memory::environment::{evolved_neel_state, mid_spectrum_eigenstate, neel_bits, prepare_environment};
use mbl_memory::full_space::full_space_holevo_trace;
use mbl_memory::holevo::holevo_rate_trace_streaming;
use mbl_memory::{
    decompose, evolve, holevo_quantity, holevo_rate_trace, partial_trace_environment, BlockedHamiltonian, Chain,
    DensityMatrix, DisorderedChainSpec, EnvironmentKind, MessageEnsemble, PureState, Topology, C64,
};
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type CMat = DMatrix<C64>;

fn c(re: f64) -> C64 {
    C64::new(re, 0.0)
}

/// Pauli-matrix construction with site 0 as the rightmost tensor factor.
fn dense(chain: &Chain) -> DMatrix<f64> {
    let n = chain.sites();
    let sx = DMatrix::from_row_slice(2, 2, &[0.0, 0.5, 0.5, 0.0]);
    let sz = DMatrix::from_row_slice(2, 2, &[0.5, 0.0, 0.0, -0.5]);
    let sy = DMatrix::from_row_slice(2, 2, &[c(0.0), C64::new(0.0, -0.5), C64::new(0.0, 0.5), c(0.0)]);
    let op = |site: usize, m: &CMat| {
        let mut acc = CMat::identity(1, 1);
        for s in (0..n).rev() {
            acc = if s == site {
                acc.kronecker(m)
            } else {
                acc.kronecker(&CMat::identity(2, 2))
            };
        }
        acc
    };
    let cx = sx.map(c);
    let cz = sz.map(c);
    let dim = 1 << n;
    let mut h = CMat::zeros(dim, dim);
    let j = chain.coupling();
    for (a, b) in chain.bonds() {
        h += (op(a, &cx) * op(b, &cx) + op(a, &sy) * op(b, &sy) + op(a, &cz) * op(b, &cz)) * c(j);
    }
    for (s, &f) in chain.fields().iter().enumerate() {
        h += op(s, &cz) * c(j * f);
    }
    assert!(h.iter().all(|z| z.im.abs() < 1e-14));
    h.map(|z| z.re)
}

fn random_fields(rng: &mut ChaCha8Rng, n: usize, h: f64) -> Vec<f64> {
    (0..n).map(|_| h * (2.0 * rng.random::<f64>() - 1.0)).collect()
}

/// Classical RK4 for `dψ/dt = −iHψ`.
fn rk4(h: &DMatrix<f64>, psi0: &DVector<C64>, t: f64, dt: f64) -> DVector<C64> {
    let hc = h.map(c);
    let minus_i = C64::new(0.0, -1.0);
    let f = |v: &DVector<C64>| (&hc * v) * minus_i;
    let steps = (t / dt).round() as usize;
    let mut psi = psi0.clone();
    for _ in 0..steps {
        let k1 = f(&psi);
        let k2 = f(&(&psi + &k1 * c(dt / 2.0)));
        let k3 = f(&(&psi + &k2 * c(dt / 2.0)));
        let k4 = f(&(&psi + &k3 * c(dt)));
        psi += (k1 + k2 * c(2.0) + k3 * c(2.0) + k4) * c(dt / 6.0);
    }
    psi
}

#[test]
fn blocked_hamiltonian_matches_pauli_construction() {
    let chain = Chain::new(vec![0.5, -0.3, 0.1, 0.2], 1.0, Topology::Ring).unwrap();
    let blocked = BlockedHamiltonian::new(&chain).unwrap().to_dense();
    let reference = dense(&chain);
    for i in 0..16 {
        for j in 0..16 {
            assert!((blocked[(i, j)] - reference[(i, j)]).abs() < 1e-14, "({i}, {j})");
        }
    }
}

#[test]
fn sector_spectra_match_dense_eigenvalues() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for (n, topology) in [
        (3, Topology::Ring),
        (5, Topology::Open),
        (6, Topology::Ring),
        (8, Topology::Ring),
    ] {
        let chain = Chain::new(random_fields(&mut rng, n, 2.0), 1.0, topology).unwrap();
        let decomp = decompose(&BlockedHamiltonian::new(&chain).unwrap()).unwrap();
        let mut ours: Vec<f64> = decomp.sectors().flat_map(|(_, s)| s.energies.clone()).collect();
        let mut reference: Vec<f64> = dense(&chain).symmetric_eigen().eigenvalues.iter().copied().collect();
        ours.sort_by(f64::total_cmp);
        reference.sort_by(f64::total_cmp);
        assert_eq!(ours.len(), 1 << n);
        for (a, b) in ours.iter().zip(&reference) {
            assert!((a - b).abs() < 1e-10, "L = {n}: {a} vs {b}");
        }
    }
}

#[test]
fn partial_trace_matches_index_loop() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let amps: Vec<C64> = (0..16)
        .map(|_| C64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5))
        .collect();
    let psi = PureState::from_full(4, amps).unwrap().normalized();
    let full = psi.to_full();
    for l in 1..=4 {
        let d = 1 << l;
        let rho = partial_trace_environment(&psi, l).unwrap();
        for a in 0..d {
            for b in 0..d {
                let mut expected = c(0.0);
                for e in 0..(16 >> l) {
                    expected += full[a | (e << l)] * full[b | (e << l)].conj();
                }
                assert!((rho.matrix()[(a, b)] - expected).norm() < 1e-12, "l = {l} ({a}, {b})");
            }
        }
    }
}

#[test]
fn evolution_matches_rk4() {
    let chain = Chain::new(vec![0.0; 4], 1.0, Topology::Ring).unwrap();
    // sites 2 and 4 down
    let psi0 = PureState::basis_state(4, 0b1010).unwrap();
    let ours = evolve(
        &psi0,
        &decompose(&BlockedHamiltonian::new(&chain).unwrap()).unwrap(),
        1.0,
    )
    .unwrap()
    .to_full();
    let start = DVector::from_vec(psi0.to_full());
    let reference = rk4(&dense(&chain), &start, 1.0, 1e-4);
    for (a, b) in ours.iter().zip(reference.iter()) {
        assert!((a - b).norm() < 1e-6, "{a} vs {b}");
    }
}

#[test]
fn evolved_neel_matches_rk4() {
    let chain = Chain::new(vec![0.0; 4], 1.0, Topology::Open).unwrap();
    let ours = evolved_neel_state(&BlockedHamiltonian::new(&chain).unwrap(), 8.0)
        .unwrap()
        .to_full();
    let mut start = DVector::from_element(16, c(0.0));
    start[neel_bits(4) as usize] = c(1.0);
    let reference = rk4(&dense(&chain), &start, 8.0, 1e-4);
    let overlap: C64 = ours.iter().zip(reference.iter()).map(|(a, b)| a.conj() * b).sum();
    assert!((overlap.norm() - 1.0).abs() < 1e-6, "{overlap}");
    for (a, b) in ours.iter().zip(reference.iter()) {
        assert!((a - b).norm() < 1e-6);
    }
}

#[test]
fn mid_spectrum_state_matches_pooled_sort() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let chain = Chain::new(random_fields(&mut rng, 6, 3.0), 1.0, Topology::Open).unwrap();
    let (energy, state) = mid_spectrum_eigenstate(&BlockedHamiltonian::new(&chain).unwrap()).unwrap();
    let eig = dense(&chain).symmetric_eigen();
    let mut order: Vec<usize> = (0..64).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let pick = order[32];
    assert!(
        eig.eigenvalues[order[33]] - eig.eigenvalues[order[31]] > 1e-6,
        "degenerate middle"
    );
    assert!((energy - eig.eigenvalues[pick]).abs() < 1e-10);
    let overlap: f64 = state
        .to_full()
        .iter()
        .zip(eig.eigenvectors.column(pick).iter())
        .map(|(a, b)| a.re * b)
        .sum();
    assert!((overlap.abs() - 1.0).abs() < 1e-9, "{overlap}");
}

fn trace_rates(spec: &DisorderedChainSpec, kind: EnvironmentKind, times: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let ensemble = MessageEnsemble::uniform(spec.message_sites()).unwrap();
    let t_neel = spec.total_sites() as f64;
    let env = prepare_environment(kind, spec, t_neel).unwrap();
    let blocked = holevo_rate_trace_streaming(spec, &env, &ensemble, times).unwrap();
    let full = full_space_holevo_trace(spec, kind, t_neel, &ensemble, times).unwrap();
    (
        blocked.iter().map(|s| s.rate).collect(),
        full.iter().map(|s| s.rate).collect(),
    )
}

#[test]
fn blocked_and_full_space_rates_agree() {
    let spec = DisorderedChainSpec::new(2, vec![0.0; 6], 1.0).unwrap();
    let (a, b) = trace_rates(&spec, EnvironmentKind::Neel, &[5.0]);
    assert!((a[0] - b[0]).abs() < 1e-8, "{a:?} vs {b:?}");

    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let times = [0.0, 0.7, 3.0, 11.0, 36.0];
    for kind in EnvironmentKind::ALL {
        let spec = DisorderedChainSpec::new(2, random_fields(&mut rng, 6, 2.5), 1.0).unwrap();
        let (a, b) = trace_rates(&spec, kind, &times);
        for (x, y) in a.iter().zip(&b) {
            assert!((x - y).abs() < 1e-8, "{kind}: {a:?} vs {b:?}");
        }
    }
}

#[test]
fn precomputed_and_streaming_traces_agree() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let spec = DisorderedChainSpec::new(3, random_fields(&mut rng, 9, 3.0), 1.0).unwrap();
    let env = prepare_environment(EnvironmentKind::EvolvedNeel, &spec, 9.0).unwrap();
    let ensemble = MessageEnsemble::uniform(3).unwrap();
    let times = [0.0, 1.0, 10.0, 81.0];
    let decomp = decompose(&BlockedHamiltonian::new(&spec.ring().unwrap()).unwrap()).unwrap();
    let a = holevo_rate_trace(&decomp, &env, &ensemble, &times).unwrap();
    let b = holevo_rate_trace_streaming(&spec, &env, &ensemble, &times).unwrap();
    for (x, y) in a.iter().zip(&b) {
        assert!((x.rate - y.rate).abs() < 1e-12);
    }
}

#[test]
fn rate_starts_at_one_for_every_environment() {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    for (size, l) in [(4, 1), (6, 2), (8, 2), (9, 3)] {
        for kind in EnvironmentKind::ALL {
            let spec = DisorderedChainSpec::new(l, random_fields(&mut rng, size, 4.0), 1.0).unwrap();
            let env = prepare_environment(kind, &spec, size as f64).unwrap();
            let ensemble = MessageEnsemble::uniform(l).unwrap();
            let r = holevo_rate_trace_streaming(&spec, &env, &ensemble, &[0.0]).unwrap();
            assert!((r[0].rate - 1.0).abs() < 1e-9, "L = {size} {kind}: {}", r[0].rate);
        }
    }
}

fn random_unitary(rng: &mut ChaCha8Rng, d: usize) -> CMat {
    let a = CMat::from_fn(d, d, |_, _| {
        C64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5)
    });
    let hermitian = &a + a.adjoint();
    let eig = hermitian.symmetric_eigen();
    let phases = CMat::from_diagonal(&eig.eigenvalues.map(|x| C64::from_polar(1.0, x)));
    &eig.eigenvectors * phases * eig.eigenvectors.adjoint()
}

fn to_faer(m: &CMat) -> faer::Mat<C64> {
    faer::Mat::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)])
}

fn to_nalgebra(m: &DensityMatrix) -> CMat {
    CMat::from_fn(m.dim(), m.dim(), |i, j| m.matrix()[(i, j)])
}

#[test]
fn holevo_quantity_is_unitarily_invariant() {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    let spec = DisorderedChainSpec::new(2, random_fields(&mut rng, 6, 1.0), 1.0).unwrap();
    let env = prepare_environment(EnvironmentKind::Neel, &spec, 6.0).unwrap();
    let decomp = decompose(&BlockedHamiltonian::new(&spec.ring().unwrap()).unwrap()).unwrap();
    let states: Vec<DensityMatrix> = (0..4u64)
        .map(|m| {
            let amps: Vec<(u64, C64)> = env.entries();
            let mut full = vec![c(0.0); 64];
            for (e, a) in amps {
                full[(m | (e << 2)) as usize] = a;
            }
            let psi = evolve(&PureState::from_full(6, full).unwrap(), &decomp, 2.5).unwrap();
            partial_trace_environment(&psi, 2).unwrap()
        })
        .collect();
    let probs = [0.25; 4];
    let before = holevo_quantity(&states, &probs).unwrap();
    assert!(before > 0.05 && before < 2.0, "{before}");
    for _ in 0..5 {
        let u = random_unitary(&mut rng, 4);
        let rotated: Vec<DensityMatrix> = states
            .iter()
            .map(|r| DensityMatrix::new(to_faer(&(&u * to_nalgebra(r) * u.adjoint()))).unwrap())
            .collect();
        let after = holevo_quantity(&rotated, &probs).unwrap();
        assert!((before - after).abs() < 1e-10, "{before} vs {after}");
    }
}
