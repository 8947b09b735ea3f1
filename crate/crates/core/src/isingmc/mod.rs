//! Monte Carlo for the square-lattice Ising model on the plaquettes of an
//! `L × L` torus, at coupling `J = 2μ`.
//!
//! Chains are seeded deterministically: chain `c` of a run with seed `s`
//! uses ChaCha8 keyed by `s` on stream `c`.

mod observables;
mod pinning;

pub use observables::*;
pub use pinning::*;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum McError {
    #[error("no Binder crossing inside the scanned grid")]
    NoCrossingInGrid,
    #[error("forward and reverse conditioning disagree: {forward} vs {reverse} (z = {z:.2})")]
    ChainNotConverged { forward: f64, reverse: f64, z: f64 },
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Loop(#[from] crate::efdloop::EfdError),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum Algorithm {
    #[default]
    Cluster,
    SingleFlip,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct McConfig {
    pub seed: u64,
    pub algorithm: Algorithm,
    pub thermalization: usize,
    pub measurements: usize,
    /// Sweeps between measurements.
    pub stride: usize,
    /// Replica count for pinning runs; only 2 is supported.
    pub replicas: usize,
    /// Worker threads for independent chains.
    pub threads: usize,
}

impl Default for McConfig {
    fn default() -> Self {
        McConfig {
            seed: 1,
            algorithm: Algorithm::Cluster,
            thermalization: 1000,
            measurements: 10_000,
            stride: 1,
            replicas: 2,
            threads: 1,
        }
    }
}

impl McConfig {
    pub fn validate(&self) -> Result<(), McError> {
        if self.measurements == 0 || self.stride == 0 {
            return Err(McError::InvalidConfig("sweep counts must be positive".into()));
        }
        if self.replicas != 2 {
            return Err(McError::InvalidConfig("pinning runs use exactly 2 replicas".into()));
        }
        if self.threads == 0 {
            return Err(McError::InvalidConfig("thread count must be positive".into()));
        }
        Ok(())
    }
}

pub fn chain_rng(seed: u64, chain: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(chain);
    rng
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub mean: f64,
    pub stderr: f64,
    pub samples: usize,
}

/// Smallest block count accepted by the blocking analysis.
pub const MIN_BLOCKS: usize = 8;

impl Estimate {
    pub fn exact(value: f64) -> Self {
        Estimate { mean: value, stderr: 0.0, samples: 0 }
    }

    /// Mean with a blocking error: block lengths double while at least
    /// [`MIN_BLOCKS`] blocks remain, and the largest error seen is kept.
    pub fn from_series(series: &[f64]) -> Self {
        let n = series.len();
        let mean = series.iter().sum::<f64>() / n.max(1) as f64;
        let mut stderr = 0.0f64;
        let mut block = 1;
        while n / block >= MIN_BLOCKS {
            let nb = n / block;
            let means: Vec<f64> =
                (0..nb).map(|b| series[b * block..(b + 1) * block].iter().sum::<f64>() / block as f64).collect();
            let m = means.iter().sum::<f64>() / nb as f64;
            let var = means.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (nb - 1) as f64;
            stderr = stderr.max((var / nb as f64).sqrt());
            block *= 2;
        }
        Estimate { mean, stderr, samples: n }
    }

    pub fn z_distance(&self, other: &Estimate) -> f64 {
        let s = (self.stderr.powi(2) + other.stderr.powi(2)).sqrt();
        if s == 0.0 {
            if self.mean == other.mean {
                0.0
            } else {
                f64::INFINITY
            }
        } else {
            (self.mean - other.mean).abs() / s
        }
    }
}

/// Block means of several series, for jackknife analysis of derived
/// quantities.
pub fn block_means(series: &[Vec<f64>], blocks: usize) -> Vec<Vec<f64>> {
    let n = series.first().map_or(0, |s| s.len());
    let size = n / blocks;
    (0..blocks)
        .map(|b| series.iter().map(|s| s[b * size..(b + 1) * size].iter().sum::<f64>() / size as f64).collect())
        .collect()
}

/// Jackknife mean and error of `f` over per-block observable vectors.
pub fn jackknife(blocks: &[Vec<f64>], f: impl Fn(&[f64]) -> f64) -> Estimate {
    let nb = blocks.len();
    let width = blocks[0].len();
    let total: Vec<f64> = (0..width).map(|k| blocks.iter().map(|b| b[k]).sum()).collect();
    let full: Vec<f64> = total.iter().map(|t| t / nb as f64).collect();
    let leave: Vec<f64> = blocks
        .iter()
        .map(|b| {
            let v: Vec<f64> = (0..width).map(|k| (total[k] - b[k]) / (nb - 1) as f64).collect();
            f(&v)
        })
        .collect();
    let m = leave.iter().sum::<f64>() / nb as f64;
    let var = leave.iter().map(|x| (x - m).powi(2)).sum::<f64>() * (nb - 1) as f64 / nb as f64;
    Estimate { mean: f(&full), stderr: var.sqrt(), samples: nb }
}

/// Ising spins on the `L × L` periodic plaquette lattice.
#[derive(Clone, Debug)]
pub struct SpinLattice {
    l: usize,
    spins: Vec<i8>,
    coupling: f64,
    neighbors: Vec<[u32; 4]>,
    bond_sum: i64,
}

impl SpinLattice {
    pub fn new(l: usize, coupling: f64) -> Self {
        let n = l * l;
        let neighbors = (0..n)
            .map(|i| {
                let (x, y) = (i % l, i / l);
                [
                    (y * l + (x + 1) % l) as u32,
                    (((y + 1) % l) * l + x) as u32,
                    (y * l + (x + l - 1) % l) as u32,
                    (((y + l - 1) % l) * l + x) as u32,
                ]
            })
            .collect();
        let mut s = SpinLattice { l, spins: vec![1; n], coupling, neighbors, bond_sum: 0 };
        s.bond_sum = s.recompute_bond_sum();
        s
    }

    pub fn size(&self) -> usize {
        self.l
    }

    pub fn len(&self) -> usize {
        self.spins.len()
    }

    pub fn is_empty(&self) -> bool {
        self.spins.is_empty()
    }

    pub fn coupling(&self) -> f64 {
        self.coupling
    }

    pub fn spins(&self) -> &[i8] {
        &self.spins
    }

    pub fn spin(&self, i: usize) -> i8 {
        self.spins[i]
    }

    pub fn neighbors(&self, i: usize) -> [u32; 4] {
        self.neighbors[i]
    }

    /// `Σ_{⟨ij⟩} σ_i σ_j`, kept up to date by every update.
    pub fn bond_sum(&self) -> i64 {
        self.bond_sum
    }

    pub fn energy(&self) -> f64 {
        -self.coupling * self.bond_sum as f64
    }

    pub fn recompute_bond_sum(&self) -> i64 {
        (0..self.len())
            .map(|i| {
                let [r, u, _, _] = self.neighbors[i];
                self.spins[i] as i64 * (self.spins[r as usize] as i64 + self.spins[u as usize] as i64)
            })
            .sum()
    }

    pub fn magnetization(&self) -> i64 {
        self.spins.iter().map(|&s| s as i64).sum()
    }

    pub fn local_field(&self, i: usize) -> i64 {
        self.neighbors[i].iter().map(|&j| self.spins[j as usize] as i64).sum()
    }

    /// Sets the state from a bit pattern: bit `i` set means spin `−1`.
    pub fn set_state(&mut self, state: u64) {
        for (i, s) in self.spins.iter_mut().enumerate() {
            *s = if state >> i & 1 == 1 { -1 } else { 1 };
        }
        self.bond_sum = self.recompute_bond_sum();
    }

    pub fn state_index(&self) -> u64 {
        self.spins.iter().enumerate().fold(0, |acc, (i, &s)| acc | (u64::from(s < 0) << i))
    }

    pub fn flip(&mut self, i: usize) {
        self.bond_sum -= 2 * self.spins[i] as i64 * self.local_field(i);
        self.spins[i] = -self.spins[i];
    }

    pub fn flip_all(&mut self) {
        self.spins.iter_mut().for_each(|s| *s = -*s);
    }

    /// Change of the bond sum if every site marked in `members` flips.
    pub fn set_flip_delta(&self, sites: &[usize], members: &[bool]) -> i64 {
        let mut d = 0;
        for &i in sites {
            for &j in &self.neighbors[i] {
                if !members[j as usize] {
                    d -= 2 * self.spins[i] as i64 * self.spins[j as usize] as i64;
                }
            }
        }
        d
    }

    pub fn flip_set(&mut self, sites: &[usize], delta: i64) {
        for &i in sites {
            self.spins[i] = -self.spins[i];
        }
        self.bond_sum += delta;
    }

    /// `L²` Metropolis attempts at uniformly drawn sites. An index-order
    /// pass is not irreducible: moves that do not raise the energy always
    /// happen, so the states split into classes the chain never leaves.
    pub fn metropolis_sweep(&mut self, rng: &mut ChaCha8Rng) {
        let accept = [(-4.0 * self.coupling).exp(), (-8.0 * self.coupling).exp()];
        for _ in 0..self.len() {
            let i = rng.gen_range(0..self.len());
            let x = self.spins[i] as i64 * self.local_field(i);
            if x <= 0 || rng.gen::<f64>() < accept[(x / 2 - 1) as usize] {
                self.flip(i);
            }
        }
    }

    /// Grows and flips one Wolff cluster; returns its size.
    pub fn wolff_step(&mut self, rng: &mut ChaCha8Rng, stack: &mut Vec<usize>, marks: &mut [bool]) -> usize {
        let p_add = 1.0 - (-2.0 * self.coupling).exp();
        let seed = rng.gen_range(0..self.len());
        let s = self.spins[seed];
        let mut cluster = Vec::new();
        stack.clear();
        stack.push(seed);
        marks[seed] = true;
        while let Some(i) = stack.pop() {
            cluster.push(i);
            for &j in &self.neighbors[i] {
                let j = j as usize;
                if !marks[j] && self.spins[j] == s && rng.gen::<f64>() < p_add {
                    marks[j] = true;
                    stack.push(j);
                }
            }
        }
        let delta = self.set_flip_delta(&cluster, marks);
        self.flip_set(&cluster, delta);
        for &i in &cluster {
            marks[i] = false;
        }
        cluster.len()
    }

    /// One sweep. A cluster sweep flips `clusters` Wolff clusters; returns
    /// the number of spins flipped.
    pub fn sweep(
        &mut self,
        algorithm: Algorithm,
        clusters: usize,
        rng: &mut ChaCha8Rng,
        scratch: &mut Scratch,
    ) -> usize {
        match algorithm {
            Algorithm::SingleFlip => {
                self.metropolis_sweep(rng);
                0
            }
            Algorithm::Cluster => {
                (0..clusters).map(|_| self.wolff_step(rng, &mut scratch.stack, &mut scratch.marks)).sum()
            }
        }
    }
}

/// Reusable buffers for cluster updates.
#[derive(Clone, Debug, Default)]
pub struct Scratch {
    stack: Vec<usize>,
    marks: Vec<bool>,
}

impl Scratch {
    pub fn new(n: usize) -> Self {
        Scratch { stack: Vec::with_capacity(n), marks: vec![false; n] }
    }
}

/// Runs `cfg.thermalization` sweeps, then calls `measure` every
/// `cfg.stride` sweeps, `cfg.measurements` times.
///
/// The number of clusters per sweep is fixed before measuring, as
/// `⌈L² / mean cluster size⌉` over the thermalization phase; a
/// state-dependent stopping rule would bias the measured ensemble.
pub fn run_chain(lat: &mut SpinLattice, cfg: &McConfig, chain: u64, mut measure: impl FnMut(&SpinLattice)) {
    let mut rng = chain_rng(cfg.seed, chain);
    let mut scratch = Scratch::new(lat.len());
    let calibration = 64.max(cfg.thermalization);
    let flipped: usize = (0..calibration).map(|_| lat.sweep(cfg.algorithm, 1, &mut rng, &mut scratch)).sum();
    let clusters = (lat.len() * calibration).div_ceil(flipped.max(1)).max(1);
    for _ in 0..cfg.thermalization {
        lat.sweep(cfg.algorithm, clusters, &mut rng, &mut scratch);
    }
    for _ in 0..cfg.measurements {
        for _ in 0..cfg.stride {
            lat.sweep(cfg.algorithm, clusters, &mut rng, &mut scratch);
        }
        measure(lat);
    }
}

/// Runs `jobs` on up to `threads` scoped workers; output order follows input.
pub fn parallel_map<T: Sync, R: Send>(items: &[T], threads: usize, f: impl Fn(&T) -> R + Sync) -> Vec<R> {
    if threads <= 1 || items.len() <= 1 {
        return items.iter().map(&f).collect();
    }
    let next = std::sync::atomic::AtomicUsize::new(0);
    let mut slots: Vec<Option<R>> = (0..items.len()).map(|_| None).collect();
    let results = std::sync::Mutex::new(&mut slots);
    std::thread::scope(|scope| {
        for _ in 0..threads.min(items.len()) {
            scope.spawn(|| loop {
                let k = next.fetch_add(1, std::sync::atomic::Ordering::Relaxed);
                if k >= items.len() {
                    break;
                }
                let r = f(&items[k]);
                results.lock().expect("worker panicked")[k] = Some(r);
            });
        }
    });
    slots.into_iter().map(|r| r.expect("every job ran")).collect()
}

/// One CSV record: `L,p,mu,observable,value,stderr,samples,seed`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CsvRow {
    pub l: usize,
    pub p: f64,
    pub mu: f64,
    pub observable: String,
    pub value: f64,
    pub stderr: f64,
    pub samples: usize,
    pub seed: u64,
}

pub const CSV_HEADER: &str = "L,p,mu,observable,value,stderr,samples,seed";

impl CsvRow {
    pub fn new(l: usize, p: f64, mu: f64, observable: impl Into<String>, est: &Estimate, seed: u64) -> Self {
        CsvRow {
            l,
            p,
            mu,
            observable: observable.into(),
            value: est.mean,
            stderr: est.stderr,
            samples: est.samples,
            seed,
        }
    }

    pub fn to_line(&self) -> String {
        format!(
            "{},{},{},{},{:.12e},{:.6e},{},{}",
            self.l, self.p, self.mu, self.observable, self.value, self.stderr, self.samples, self.seed
        )
    }
}
