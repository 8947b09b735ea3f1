//! Acceptance run: one PASS/FAIL line per criterion, nonzero exit if any fail.

use efd_core::anyontheory::KTheory;
use efd_core::condensate::{
    enumerate_subgroups, memory_type, reference_subgroups, toric_coherent_subgroups, toric_em_swap, CriteriaConfig,
    MemoryType,
};
use efd_core::efdloop::{
    exact_string_expectation, exact_wilson_loop, p_to_mu, rectangle_loop, spin_boltzmann_weights,
    spin_enumeration_correlator, DualPath, EdgeRegion, ErrorBasis, Sector, TorusLattice,
};
use efd_core::exactlattice::big_vec;
use efd_core::isingmc::{
    binder_scan, run_chain, run_correlator, tee_kitaev_preskill, wilson_observable, Algorithm, McConfig, SpinLattice,
    Tripartite,
};
use efd_core::models::{self, Model};
use efd_core::stabilizer::{efd_stabilizer_group, Limit};
use num_bigint::BigInt;
use num_rational::Rational64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use statrs::distribution::{ChiSquared, ContinuousCDF};
use std::f64::consts::LN_2;
use std::time::Instant;

const CLASSIFY_BUDGET_S: f64 = 60.0;
const REPLICA_BUDGET_S: f64 = 600.0;
const THRESHOLD_BUDGET_S: f64 = 900.0;
const TEE_BUDGET_S: f64 = 2700.0;

const P_C_TARGET: f64 = 0.178;
const P_C_TOLERANCE: f64 = 0.005;
const BINDER_SIZES: [usize; 3] = [16, 32, 64];
const BINDER_MEASUREMENTS: usize = 20_000;

const ORACLE_SIGMAS: f64 = 3.0;
const ENUMERATION_TOLERANCE: f64 = 1e-12;

const TEE_TOLERANCE: f64 = 0.15;
const TEE_MEASUREMENTS: usize = 10_000;

const AREA_SIGMAS: f64 = 2.0;
const PERIMETER_SIGMAS: f64 = 5.0;
const WILSON_MEASUREMENTS: usize = 4000;
/// Smallest square side in the perimeter-law fit.
const WILSON_MIN_SIDE: usize = 2;

const STATISTICS_TRIPLES: usize = 1000;
const CHI_SQUARE_LEVEL: f64 = 0.01;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome { pass, detail: detail.into() }
}

fn timed(f: impl FnOnce() -> Outcome) -> (Outcome, f64) {
    let start = Instant::now();
    let o = f();
    (o, start.elapsed().as_secs_f64())
}

fn counts_at(model: &Model, n: usize, criteria: &CriteriaConfig) -> usize {
    enumerate_subgroups(&model.theory(n).unwrap(), criteria).unwrap().len()
}

fn table_reproduction() -> Outcome {
    let expected: [(Model, usize, Vec<MemoryType>); 3] = {
        use MemoryType::*;
        [
            (models::toric_code(), 5, vec![Quantum, Classical, Classical, Classical, Trivial]),
            (models::double_semion(), 5, vec![Quantum, Quantum, Quantum, Quantum, Trivial]),
            (models::laughlin3(), 2, vec![Quantum, Trivial]),
        ]
    };
    let mut pass = true;
    let mut parts = Vec::new();
    for (model, count, memory) in &expected {
        let t = model.theory(2).unwrap();
        let single = KTheory::new(t.single_k(), 1).unwrap();
        let found = enumerate_subgroups(&t, &CriteriaConfig::default()).unwrap();
        let refs = reference_subgroups(model, &t).unwrap();
        let all_present = refs.iter().all(|(_, r)| found.iter().any(|s| s.elements == r.elements));
        let got: Vec<MemoryType> = refs.iter().map(|(_, r)| memory_type(&single, &t, r).unwrap()).collect();
        pass &= found.len() == *count && all_present && got == *memory;
        parts.push(format!(
            "{} {} (want {count}), reference sets {}, memory {}",
            model.key,
            found.len(),
            if all_present { "found" } else { "MISSING" },
            if got == *memory { "ok" } else { "MISMATCH" }
        ));
    }
    outcome(pass, parts.join("; "))
}

fn coherent_superset() -> Outcome {
    let model = models::toric_code();
    let t = model.theory(2).unwrap();
    let found = enumerate_subgroups(&t, &CriteriaConfig::coherent()).unwrap();
    let contains = |r: &efd_core::LagrangianSubgroup| found.iter().any(|s| s.elements == r.elements);
    let coherent = toric_coherent_subgroups(&t).unwrap();
    let refs = reference_subgroups(&model, &t).unwrap();
    let pass = coherent.iter().all(contains) && refs.iter().all(|(_, r)| contains(r));
    outcome(pass, format!("3 coherent + 5 incoherent contained: {pass}; full count {} (finding)", found.len()))
}

fn replica_independence() -> Outcome {
    let criteria = CriteriaConfig::default();
    let mut pass = true;
    let mut parts = Vec::new();
    for model in [models::toric_code(), models::laughlin3()] {
        let (two, three) = (counts_at(&model, 2, &criteria), counts_at(&model, 3, &criteria));
        let want = if model.key == "toric" { 5 } else { 2 };
        pass &= two == three && three == want;
        parts.push(format!("{} n=2 {two}, n=3 {three} (want {want})", model.key));
    }
    outcome(pass, parts.join("; "))
}

fn critical_point() -> Outcome {
    let grid: Vec<f64> = (0..11).map(|k| 0.15 + 0.005 * k as f64).collect();
    let cfg = McConfig { seed: 1, thermalization: 2000, measurements: BINDER_MEASUREMENTS, ..McConfig::default() };
    match binder_scan(&BINDER_SIZES, &grid, 6, &cfg) {
        Ok(scan) => {
            let crossings: Vec<String> =
                scan.crossings.iter().map(|c| format!("{}/{}: {:.5}", c.l_small, c.l_large, c.p.mean)).collect();
            outcome(
                (scan.p_c.mean - P_C_TARGET).abs() <= P_C_TOLERANCE,
                format!("p_c = {:.5} +- {:.5} [{}]", scan.p_c.mean, scan.p_c.stderr, crossings.join(", ")),
            )
        }
        Err(e) => outcome(false, e.to_string()),
    }
}

fn oracle_agreement() -> Outcome {
    let lat = TorusLattice::new(4).unwrap();
    let cfg = McConfig { seed: 3, thermalization: 1000, measurements: 20_000, ..McConfig::default() };
    let mut pass = true;
    let mut worst_z = 0.0f64;
    let mut worst_enum = 0.0f64;
    for p in [0.1, 0.25, 0.35] {
        let mu = p_to_mu(p).unwrap();
        let steps = [1, 2];
        let pairs: Vec<(usize, usize)> = steps.iter().map(|&s| (lat.vertex(0, 0), lat.vertex(s, 0))).collect();
        let mc = run_correlator(4, mu, &pairs, &cfg).unwrap();
        for (k, &s) in steps.iter().enumerate() {
            let path = DualPath::horizontal(&lat, 0, 0, s);
            let exact = exact_string_expectation(&lat, mu, &path, Sector::Trivial, 4).unwrap();
            let spin = spin_enumeration_correlator(&lat, 2.0 * mu, &path, Sector::Trivial).unwrap();
            worst_enum = worst_enum.max((exact - spin).abs());
            let z = (mc[k].mean - exact).abs() / mc[k].stderr;
            worst_z = worst_z.max(z);
            pass &= z <= ORACLE_SIGMAS;
        }
        let w = wilson_observable(4, mu, &[(1, 1)], &cfg).unwrap();
        let exact = exact_wilson_loop(&lat, mu, &rectangle_loop(&lat, 0, 0, 1, 1), Sector::Trivial, 4).unwrap();
        let z = (w.values[0].mean - exact).abs() / w.values[0].stderr;
        worst_z = worst_z.max(z);
        pass &= z <= ORACLE_SIGMAS;
    }
    pass &= worst_enum <= ENUMERATION_TOLERANCE;
    outcome(pass, format!("largest MC deviation {worst_z:.2} sigma; exact vs enumeration {worst_enum:.1e}"))
}

fn tee_step() -> Outcome {
    let geometry = Tripartite::centered(32);
    let cfg = McConfig { seed: 1, thermalization: 1000, measurements: TEE_MEASUREMENTS, ..McConfig::default() };
    let zero = tee_kitaev_preskill(32, 0.0, geometry, &cfg).unwrap().gamma;
    let mut pass = zero.mean == 2.0 * LN_2 && zero.stderr == 0.0;
    let mut parts = vec![format!("p=0 gamma = {:?} (exact 2 ln 2: {pass})", zero.mean)];
    for (p, target) in [(0.1, 2.0 * LN_2), (0.3, LN_2)] {
        match tee_kitaev_preskill(32, p, geometry, &cfg) {
            Ok(r) => {
                pass &= (r.gamma.mean - target).abs() <= TEE_TOLERANCE;
                parts.push(format!("p={p} gamma = {:.4} +- {:.4} (target {target:.4})", r.gamma.mean, r.gamma.stderr));
            }
            Err(e) => {
                pass = false;
                parts.push(format!("p={p}: {e}"));
            }
        }
    }
    outcome(pass, parts.join("; "))
}

fn stabilizer_anchors() -> Outcome {
    let lat = TorusLattice::new(6).unwrap();
    let shapes = [(1, 1, 2, 2), (1, 1, 3, 2), (0, 1, 3, 3), (1, 0, 4, 3), (0, 0, 5, 5)];
    let mut pass = true;
    let mut checked = 0;
    for basis in [ErrorBasis::X, ErrorBasis::Z] {
        for (limit, per_vertex) in [(Limit::P0, 2), (Limit::PHalf, 1)] {
            let group = efd_stabilizer_group(&lat, limit, basis);
            for &(x, y, w, h) in &shapes {
                let region = EdgeRegion::vertex_rectangle(&lat, x, y, w, h);
                pass &= group.region_entropy(&region).unwrap() == per_vertex * (region.perimeter() - 1);
                checked += 1;
            }
        }
    }
    outcome(pass, format!("{} rectangles, {checked} exact checks across limits and bases", shapes.len()))
}

fn perimeter_law() -> Outcome {
    let loops: Vec<(usize, usize)> = (WILSON_MIN_SIDE..=8).map(|k| (k, k)).collect();
    let cfg = McConfig { seed: 1, thermalization: 200, measurements: WILSON_MEASUREMENTS, ..McConfig::default() };
    let mut pass = true;
    let mut parts = Vec::new();
    for p in [0.1, 0.3] {
        let r = wilson_observable(32, p_to_mu(p).unwrap(), &loops, &cfg).unwrap();
        let Some(fit) = r.fit else {
            return outcome(false, format!("p={p}: fit failed"));
        };
        let area_z = fit.area.mean / fit.area.stderr;
        let perim_z = fit.perimeter.mean / fit.perimeter.stderr;
        pass &= area_z.abs() <= AREA_SIGMAS;
        if p == 0.3 {
            pass &= perim_z > PERIMETER_SIGMAS;
        }
        parts.push(format!(
            "p={p} area {:.5} +- {:.5} ({area_z:.2} sigma), perimeter {:.4} +- {:.4} ({perim_z:.1} sigma), chi2 {:.1}/{}",
            fit.area.mean, fit.area.stderr, fit.perimeter.mean, fit.perimeter.stderr, fit.chi2, fit.dof
        ));
    }
    outcome(pass, parts.join("; "))
}

fn modulo(x: Rational64, m: i64) -> Rational64 {
    let m = Rational64::from_integer(m);
    x - (x / m).floor() * m
}

fn statistics_hold(t: &KTheory, rng: &mut ChaCha8Rng) -> bool {
    let mut draw = || big_vec(&(0..t.dim()).map(|_| rng.gen_range(-7i64..=7)).collect::<Vec<_>>());
    for _ in 0..STATISTICS_TRIPLES {
        let (la, lb, lc, shift) = (draw(), draw(), draw(), draw());
        let (x, y, z) = (t.from_vector(&la), t.from_vector(&lb), t.from_vector(&lc));
        let sum: Vec<BigInt> = la.iter().zip(&lb).map(|(p, q)| p + q).collect();
        let xy = t.from_vector(&sum);
        let kx = t.full_k().mul_vec(&shift).unwrap();
        let moved: Vec<BigInt> = la.iter().zip(&kx).map(|(p, q)| p + q).collect();
        let x2 = t.from_vector(&moved);
        let ok = modulo(t.mutual_statistics(&xy, &z), 2)
            == modulo(t.mutual_statistics(&x, &z) + t.mutual_statistics(&y, &z), 2)
            && t.mutual_statistics(&x, &y) == t.mutual_statistics(&y, &x)
            && x2.residues() == x.residues()
            && t.self_statistics(&x2) == t.self_statistics(&x)
            && t.mutual_statistics(&x2, &z) == t.mutual_statistics(&x, &z);
        if !ok {
            return false;
        }
    }
    true
}

fn property_suites() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let statistics = models::all_models().iter().all(|m| statistics_hold(&m.theory(2).unwrap(), &mut rng));

    let orders = models::all_models().iter().all(|m| {
        let t = m.theory(2).unwrap();
        [CriteriaConfig::default(), CriteriaConfig::coherent()]
            .iter()
            .all(|c| enumerate_subgroups(&t, c).unwrap().iter().all(|s| (s.order() as u64).pow(2) == t.order()))
    });

    let toric = models::toric_code();
    let t = toric.theory(2).unwrap();
    let refs = reference_subgroups(&toric, &t).unwrap();
    let find = |label: &str| refs.iter().find(|(l, _)| l == label).unwrap().1.clone();
    let (two, three) = (find("II"), find("III"));
    let exchange = two.elements.iter().all(|a| three.contains(&toric_em_swap(&t, a)))
        && three.elements.iter().all(|a| two.contains(&toric_em_swap(&t, a)));

    let coupling = 0.15;
    let probs = spin_boltzmann_weights(&TorusLattice::new(3).unwrap(), coupling).unwrap();
    let mut chi_ok = true;
    let mut p_values = Vec::new();
    for algorithm in [Algorithm::Cluster, Algorithm::SingleFlip] {
        let cfg = McConfig {
            seed: 17,
            algorithm,
            thermalization: 500,
            measurements: 100_000,
            stride: 4,
            ..McConfig::default()
        };
        let mut lat = SpinLattice::new(3, coupling);
        let mut counts = vec![0u64; probs.len()];
        run_chain(&mut lat, &cfg, 0, |s| counts[s.state_index() as usize] += 1);
        let (chi, dof) = chi_square(&counts, &probs);
        let p = ChiSquared::new(dof).unwrap().sf(chi);
        chi_ok &= p > CHI_SQUARE_LEVEL;
        p_values.push(format!("{p:.3}"));
    }

    let scan = || {
        let cfg = McConfig { seed: 11, thermalization: 50, measurements: 400, threads: 1, ..McConfig::default() };
        format!("{:?}", binder_scan(&[6, 10], &[0.15, 0.1625, 0.175, 0.1875, 0.2], 1, &cfg))
    };
    let reproducible = scan() == scan();

    outcome(
        statistics && orders && exchange && chi_ok && reproducible,
        format!(
            "statistics {statistics}, orders {orders}, e-m exchange {exchange}, chi2 p-values [{}], byte-identical rerun {reproducible}",
            p_values.join(", ")
        ),
    )
}

/// χ² statistic and degrees of freedom, pooling states whose expected count
/// is below 5.
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

fn main() {
    type Criterion = (u32, &'static str, fn() -> Outcome, Option<f64>);
    let criteria: [Criterion; 9] = [
        (1, "reference table at n=2", table_reproduction, Some(CLASSIFY_BUDGET_S)),
        (2, "coherent-error superset", coherent_superset, None),
        (3, "replica-index independence", replica_independence, Some(REPLICA_BUDGET_S)),
        (4, "critical error rate", critical_point, Some(THRESHOLD_BUDGET_S)),
        (5, "oracle / Monte Carlo agreement", oracle_agreement, None),
        (6, "topological entropy step", tee_step, Some(TEE_BUDGET_S)),
        (7, "stabilizer anchors", stabilizer_anchors, None),
        (8, "perimeter law", perimeter_law, None),
        (9, "property suites", property_suites, None),
    ];
    let only: Option<u32> = std::env::var("EFD_ACCEPTANCE_ONLY").ok().and_then(|v| v.parse().ok());
    let mut failed = 0;
    for (id, name, run, budget) in criteria {
        if only.is_some_and(|k| k != id) {
            continue;
        }
        let (o, seconds) = timed(run);
        let in_time = budget.is_none_or(|b| seconds < b);
        let pass = o.pass && in_time;
        failed += usize::from(!pass);
        let budget_note = budget.map_or_else(String::new, |b| format!(", budget {b:.0} s"));
        println!(
            "criterion {id} {}: {name}: {} ({seconds:.1} s{budget_note})",
            if pass { "PASS" } else { "FAIL" },
            o.detail
        );
    }
    if failed > 0 {
        println!("acceptance: {failed} criteria failed");
        std::process::exit(1);
    }
    println!("acceptance: all criteria passed");
}
