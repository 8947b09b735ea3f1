use criterion::{black_box, criterion_group, criterion_main, Criterion};
use efd_core::condensate::{enumerate_subgroups, CriteriaConfig};
use efd_core::efdloop::{
    critical_mu, exact_string_expectation, DualPath, EdgeRegion, ErrorBasis, Sector, TorusLattice,
};
use efd_core::exactlattice::smith_normal_form;
use efd_core::isingmc::{chain_rng, Algorithm, Scratch, SpinLattice};
use efd_core::models;
use efd_core::stabilizer::{efd_stabilizer_group, Limit};

fn smith(c: &mut Criterion) {
    for (key, n) in [("toric", 2), ("toric", 3), ("double-semion", 3)] {
        let t = models::by_key(key).unwrap().theory(n).unwrap();
        let k = t.full_k().clone();
        c.bench_function(&format!("snf/{key}/n{n}"), |b| b.iter(|| smith_normal_form(black_box(&k)).unwrap()));
    }
}

fn enumeration(c: &mut Criterion) {
    let mut group = c.benchmark_group("enumerate");
    group.sample_size(10);
    for (key, n, criteria) in [
        ("toric", 2, CriteriaConfig::default()),
        ("toric", 2, CriteriaConfig::coherent()),
        ("laughlin3", 3, CriteriaConfig::default()),
    ] {
        let t = models::by_key(key).unwrap().theory(n).unwrap();
        let tag = if criteria == CriteriaConfig::default() { "default" } else { "coherent" };
        group.bench_function(format!("{key}/n{n}/{tag}"), |b| b.iter(|| enumerate_subgroups(&t, &criteria).unwrap()));
    }
    group.finish();
}

fn sweeps(c: &mut Criterion) {
    let coupling = 2.0 * critical_mu();
    for (name, algorithm) in [("wolff", Algorithm::Cluster), ("metropolis", Algorithm::SingleFlip)] {
        for l in [32, 64] {
            let mut lat = SpinLattice::new(l, coupling);
            let mut rng = chain_rng(1, 0);
            let mut scratch = Scratch::new(lat.len());
            c.bench_function(&format!("sweep/{name}/L{l}"), |b| {
                b.iter(|| lat.sweep(algorithm, 1, &mut rng, &mut scratch))
            });
        }
    }
}

fn gf2_rank(c: &mut Criterion) {
    for l in [6, 12] {
        let lat = TorusLattice::new(l).unwrap();
        let group = efd_stabilizer_group(&lat, Limit::PHalf, ErrorBasis::X);
        let region = EdgeRegion::vertex_rectangle(&lat, 1, 1, l / 2, l / 2);
        c.bench_function(&format!("gf2_entropy/L{l}"), |b| {
            b.iter(|| group.region_entropy(black_box(&region)).unwrap())
        });
    }
}

fn loop_oracle(c: &mut Criterion) {
    let lat = TorusLattice::new(4).unwrap();
    let path = DualPath::horizontal(&lat, 0, 0, 2);
    let mut group = c.benchmark_group("oracle");
    group.sample_size(10);
    group.bench_function("string/L4/full", |b| {
        b.iter(|| exact_string_expectation(&lat, 0.2, &path, Sector::Full, 4).unwrap())
    });
    group.finish();
}

criterion_group!(benches, smith, enumeration, sweeps, gf2_rank, loop_oracle);
criterion_main!(benches);
