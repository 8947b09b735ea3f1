use efd_core::efdloop::{exact_wilson_loop, p_to_mu, rectangle_loop, spin_boltzmann_weights, Sector, TorusLattice};
use efd_core::isingmc::{run_chain, run_correlator, wilson_observable, Algorithm, McConfig, SpinLattice};
use statrs::distribution::{ChiSquared, ContinuousCDF};

/// χ² statistic and degrees of freedom, pooling states whose expected count
/// is below 5 into one bin.
fn chi_square(counts: &[u64], probs: &[f64]) -> (f64, f64) {
    let n: u64 = counts.iter().sum();
    let (mut chi, mut bins) = (0.0, 0usize);
    let (mut pooled_obs, mut pooled_exp) = (0.0, 0.0);
    for (&c, &p) in counts.iter().zip(probs) {
        let e = p * n as f64;
        if e < 5.0 {
            pooled_obs += c as f64;
            pooled_exp += e;
        } else {
            chi += (c as f64 - e).powi(2) / e;
            bins += 1;
        }
    }
    if pooled_exp > 0.0 {
        chi += (pooled_obs - pooled_exp).powi(2) / pooled_exp;
        bins += 1;
    }
    (chi, (bins - 1) as f64)
}

fn sampled_frequencies(algorithm: Algorithm, coupling: f64, seed: u64) -> Vec<u64> {
    let cfg =
        McConfig { seed, algorithm, thermalization: 500, measurements: 100_000, stride: 4, ..McConfig::default() };
    let mut lat = SpinLattice::new(3, coupling);
    let mut counts = vec![0u64; 1 << 9];
    run_chain(&mut lat, &cfg, 0, |s| counts[s.state_index() as usize] += 1);
    counts
}

#[test]
fn sampled_states_follow_boltzmann_weights() {
    let coupling = 0.15;
    let probs = spin_boltzmann_weights(&TorusLattice::new(3).unwrap(), coupling).unwrap();
    for algorithm in [Algorithm::SingleFlip, Algorithm::Cluster] {
        let counts = sampled_frequencies(algorithm, coupling, 17);
        let (chi, dof) = chi_square(&counts, &probs);
        let p_value = ChiSquared::new(dof).unwrap().sf(chi);
        assert!(p_value > 0.01, "{algorithm:?}: chi2 = {chi:.1} on {dof} dof, p = {p_value:.4}");
    }
}

#[test]
fn chi_square_detects_a_wrong_temperature() {
    let probs = spin_boltzmann_weights(&TorusLattice::new(3).unwrap(), 0.15).unwrap();
    let counts = sampled_frequencies(Algorithm::Cluster, 0.25, 17);
    let (chi, dof) = chi_square(&counts, &probs);
    assert!(ChiSquared::new(dof).unwrap().sf(chi) < 1e-6);
}

#[test]
fn equal_seeds_give_identical_streams() {
    let stream = |seed: u64, algorithm: Algorithm| {
        let cfg =
            McConfig { seed, algorithm, thermalization: 50, measurements: 500, threads: 1, ..McConfig::default() };
        let mut lat = SpinLattice::new(10, 0.44);
        let mut out = Vec::new();
        run_chain(&mut lat, &cfg, 3, |s| out.extend_from_slice(&(s.magnetization() as i32).to_le_bytes()));
        out
    };
    for algorithm in [Algorithm::Cluster, Algorithm::SingleFlip] {
        assert_eq!(stream(5, algorithm), stream(5, algorithm));
        assert_ne!(stream(5, algorithm), stream(6, algorithm));
    }
    let cfg = McConfig { seed: 9, thermalization: 100, measurements: 1000, ..McConfig::default() };
    let a = run_correlator(6, 0.2, &[(0, 1), (0, 3)], &cfg).unwrap();
    let b = run_correlator(6, 0.2, &[(0, 1), (0, 3)], &cfg).unwrap();
    assert_eq!(a, b);
}

#[test]
fn cluster_and_single_flip_agree() {
    let base = McConfig { seed: 2, thermalization: 1000, measurements: 20_000, ..McConfig::default() };
    let pairs = [(0, 1), (0, 4)];
    for mu in [0.15, 0.22, 0.3] {
        let cluster =
            run_correlator(8, mu, &pairs, &McConfig { algorithm: Algorithm::Cluster, ..base.clone() }).unwrap();
        let local =
            run_correlator(8, mu, &pairs, &McConfig { algorithm: Algorithm::SingleFlip, ..base.clone() }).unwrap();
        for (c, s) in cluster.iter().zip(&local) {
            assert!(c.z_distance(s) < 4.0, "mu = {mu}: {c:?} vs {s:?}");
        }
    }
}

#[test]
fn staged_wilson_matches_exact_in_the_ordered_phase() {
    // Deep in the ordered phase the 3×3 loop value is dominated by the
    // reversed-interior sector, which a direct average misses.
    let lat = TorusLattice::new(4).unwrap();
    let loops = [(1, 1), (2, 2), (3, 3)];
    for p in [0.1, 0.35] {
        let mu = p_to_mu(p).unwrap();
        let cfg = McConfig { seed: 4, thermalization: 200, measurements: 4000, ..McConfig::default() };
        let mc = wilson_observable(4, mu, &loops, &cfg).unwrap();
        for (k, &(w, h)) in loops.iter().enumerate() {
            let exact = exact_wilson_loop(&lat, mu, &rectangle_loop(&lat, 0, 0, w, h), Sector::Trivial, 4).unwrap();
            let y = mc.minus_log[k];
            assert!((y.mean + exact.ln()).abs() < 4.0 * y.stderr, "p={p} {w}x{h}: {y:?} vs {}", -exact.ln());
        }
    }
}
