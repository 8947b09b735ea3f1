//! Rényi-2 entropies from boundary-pinning free energies of two Ising
//! replicas `σ¹, σ²` with relative spins `τ = σ¹σ²`.
//!
//! Two replicas have equal boundary data at a boundary vertex `v` iff the
//! product of `τ` across the complement edges at `v` is `+1`. Each such
//! constraint is a set of plaquettes; `ΔF = −ln P(all constraints)` is
//! accumulated one constraint at a time.

use super::{chain_rng, parallel_map, Estimate, McConfig, McError, SpinLattice};
use crate::efdloop::{p_to_mu, EdgeRegion, TorusLattice};
use crate::stabilizer::gf2_rank;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::collections::BTreeSet;
use std::f64::consts::LN_2;

/// Largest `z` between forward and reverse conditioning accepted as
/// converged.
pub const ORDER_AGREEMENT_Z: f64 = 4.0;

/// Plaquette sets whose `τ` product must be `+1`, one per boundary vertex.
pub fn boundary_constraints(lat: &TorusLattice, region: &EdgeRegion) -> Vec<Vec<usize>> {
    let mut inside = vec![false; lat.num_edges()];
    for &e in &region.edges {
        inside[e] = true;
    }
    region
        .boundary_vertices
        .iter()
        .filter_map(|&v| {
            let mut odd = BTreeSet::new();
            for e in lat.vertex_edges(v) {
                if !inside[e] {
                    for p in lat.edge_plaquettes(e) {
                        if !odd.remove(&p) {
                            odd.insert(p);
                        }
                    }
                }
            }
            (!odd.is_empty()).then(|| odd.into_iter().collect())
        })
        .collect()
}

fn packed(constraints: &[Vec<usize>], n: usize) -> Vec<Vec<u64>> {
    constraints
        .iter()
        .map(|c| {
            let mut row = vec![0u64; n.div_ceil(64)];
            for &p in c {
                row[p / 64] ^= 1 << (p % 64);
            }
            row
        })
        .collect()
}

/// Number of independent constraints; `ΔF(0) = rank · ln 2`.
pub fn constraint_rank(constraints: &[Vec<usize>], n: usize) -> usize {
    gf2_rank(packed(constraints, n))
}

/// Orders constraints so that each one, where possible, touches the
/// plaquettes already constrained and adds a new one.
pub fn chain_order(constraints: &[Vec<usize>]) -> Vec<usize> {
    let mut used = vec![false; constraints.len()];
    let mut covered = BTreeSet::new();
    let mut order = Vec::with_capacity(constraints.len());
    while order.len() < constraints.len() {
        let unused = || (0..constraints.len()).filter(|&k| !used[k]);
        let touches = |k: &usize| constraints[*k].iter().any(|p| covered.contains(p));
        let adds = |k: &usize| constraints[*k].iter().any(|p| !covered.contains(p));
        let next = unused()
            .find(|k| touches(k) && adds(k))
            .or_else(|| unused().find(touches))
            .or_else(|| unused().next())
            .expect("an unused constraint remains");
        used[next] = true;
        covered.extend(constraints[next].iter().copied());
        order.push(next);
    }
    order
}

/// Basis of `τ` flips over `columns` that preserve every constraint.
fn kernel_basis(constraints: &[&Vec<usize>], columns: &[usize]) -> Vec<Vec<usize>> {
    let index: std::collections::HashMap<usize, usize> = columns.iter().enumerate().map(|(i, &p)| (p, i)).collect();
    let width = columns.len();
    let mut rows: Vec<Vec<bool>> = constraints
        .iter()
        .map(|c| {
            let mut r = vec![false; width];
            for p in c.iter() {
                r[index[p]] ^= true;
            }
            r
        })
        .collect();
    let mut pivots = Vec::new();
    let mut rank = 0;
    for col in 0..width {
        let Some(pr) = (rank..rows.len()).find(|&r| rows[r][col]) else { continue };
        rows.swap(rank, pr);
        let pivot_row = rows[rank].clone();
        for (r, row) in rows.iter_mut().enumerate() {
            if r != rank && row[col] {
                row.iter_mut().zip(&pivot_row).for_each(|(a, b)| *a ^= b);
            }
        }
        pivots.push(col);
        rank += 1;
    }
    let free: Vec<usize> = (0..width).filter(|c| !pivots.contains(c)).collect();
    free.iter()
        .map(|&f| {
            let mut v = vec![columns[f]];
            for (r, &pc) in pivots.iter().enumerate() {
                if rows[r][f] {
                    v.push(columns[pc]);
                }
            }
            v.sort_unstable();
            v
        })
        .collect()
}

/// Two replicas sampled under a set of `τ` constraints.
struct Replicas {
    one: SpinLattice,
    two: SpinLattice,
}

struct StageMoves {
    constrained: Vec<bool>,
    kernel: Vec<(Vec<usize>, Vec<bool>)>,
}

impl Replicas {
    fn new(l: usize, coupling: f64) -> Self {
        Replicas { one: SpinLattice::new(l, coupling), two: SpinLattice::new(l, coupling) }
    }

    fn tau(&self, p: usize) -> i8 {
        self.one.spin(p) * self.two.spin(p)
    }

    fn satisfied(&self, constraint: &[usize]) -> bool {
        constraint.iter().map(|&p| self.tau(p)).product::<i8>() == 1
    }

    fn accept(rng: &mut ChaCha8Rng, coupling: f64, delta_bonds: i64) -> bool {
        delta_bonds >= 0 || rng.gen::<f64>() < (coupling * delta_bonds as f64).exp()
    }

    fn sweep(&mut self, moves: &StageMoves, rng: &mut ChaCha8Rng) {
        let j = self.one.coupling();
        for i in 0..self.one.len() {
            let d1 = -2 * self.one.spin(i) as i64 * self.one.local_field(i);
            if moves.constrained[i] {
                let d2 = -2 * self.two.spin(i) as i64 * self.two.local_field(i);
                if Self::accept(rng, j, d1 + d2) {
                    self.one.flip(i);
                    self.two.flip(i);
                }
            } else {
                if Self::accept(rng, j, d1) {
                    self.one.flip(i);
                }
                let d2 = -2 * self.two.spin(i) as i64 * self.two.local_field(i);
                if Self::accept(rng, j, d2) {
                    self.two.flip(i);
                }
            }
        }
        for (sites, members) in &moves.kernel {
            for replica in [&mut self.one, &mut self.two] {
                let d = replica.set_flip_delta(sites, members);
                if Self::accept(rng, j, d) {
                    replica.flip_set(sites, d);
                }
            }
        }
        if rng.gen::<bool>() {
            self.two.flip_all();
        }
    }

    /// `P(constraint | everything but σ^r_b)` averaged over both replicas.
    fn conditional(&self, constraint: &[usize], b: usize) -> f64 {
        let j = self.one.coupling();
        let rest: i8 = constraint.iter().filter(|&&p| p != b).map(|&p| self.tau(p)).product();
        let heat_bath = |want: i8, field: i64| {
            let x = j * field as f64;
            1.0 / (1.0 + (-2.0 * want as f64 * x).exp())
        };
        let via_two = heat_bath(rest * self.one.spin(b), self.two.local_field(b));
        let via_one = heat_bath(rest * self.two.spin(b), self.one.local_field(b));
        0.5 * (via_one + via_two)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PinningResult {
    /// `ΔF(μ)`.
    pub delta_f: Estimate,
    /// `ΔF(0) = rank · ln 2`, exact.
    pub delta_f_zero: f64,
    pub forward: Estimate,
    pub reverse: Estimate,
    pub stages: usize,
}

impl PinningResult {
    /// `S^{(2)} = ΔF(0) + ΔF(μ)`.
    pub fn renyi2(&self) -> Estimate {
        Estimate { mean: self.delta_f_zero + self.delta_f.mean, ..self.delta_f }
    }
}

/// `ΔF` for one conditioning order.
fn conditioned_free_energy(
    l: usize,
    coupling: f64,
    constraints: &[Vec<usize>],
    order: &[usize],
    cfg: &McConfig,
    chain_base: u64,
) -> (Estimate, usize) {
    let n = l * l;
    let mut state = Replicas::new(l, coupling);
    let mut total = 0.0;
    let mut var = 0.0;
    let mut samples = 0;
    let mut stages = 0;
    for k in 0..order.len() {
        let imposed: Vec<&Vec<usize>> = order[..k].iter().map(|&i| &constraints[i]).collect();
        let target = &constraints[order[k]];
        let before = gf2_rank(packed(&imposed.iter().map(|c| (*c).clone()).collect::<Vec<_>>(), n));
        let mut with_target: Vec<Vec<usize>> = imposed.iter().map(|c| (*c).clone()).collect();
        with_target.push(target.clone());
        if gf2_rank(packed(&with_target, n)) == before {
            continue;
        }
        let mut constrained = vec![false; n];
        for c in &imposed {
            for &p in c.iter() {
                constrained[p] = true;
            }
        }
        // Restore the previously measured constraint if the carried state
        // violates it.
        if let Some(prev) = imposed.last() {
            if !state.satisfied(prev) {
                let earlier: BTreeSet<usize> = imposed[..k - 1].iter().flat_map(|c| c.iter().copied()).collect();
                match prev.iter().find(|p| !earlier.contains(p)) {
                    Some(&b) => state.two.flip(b),
                    None => state = Replicas::new(l, coupling),
                }
            }
        }
        let columns: Vec<usize> = (0..n).filter(|&p| constrained[p]).collect();
        let kernel = kernel_basis(&imposed, &columns)
            .into_iter()
            .map(|sites| {
                let mut members = vec![false; n];
                sites.iter().for_each(|&p| members[p] = true);
                (sites, members)
            })
            .collect();
        let moves = StageMoves { constrained: constrained.clone(), kernel };
        let free = target.iter().copied().find(|&p| !constrained[p]);
        let mut rng = chain_rng(cfg.seed, chain_base + k as u64);
        for _ in 0..cfg.thermalization {
            state.sweep(&moves, &mut rng);
        }
        let mut series = Vec::with_capacity(cfg.measurements);
        for _ in 0..cfg.measurements {
            for _ in 0..cfg.stride {
                state.sweep(&moves, &mut rng);
            }
            series.push(match free {
                Some(b) => state.conditional(target, b),
                None => f64::from(u8::from(state.satisfied(target))),
            });
        }
        let est = Estimate::from_series(&series);
        let p = est.mean.max(1.0 / (series.len() as f64 + 1.0));
        total -= p.ln();
        var += (est.stderr / p).powi(2);
        samples += est.samples;
        stages += 1;
    }
    (Estimate { mean: total, stderr: var.sqrt(), samples }, stages)
}

/// Excess free energy of forcing the two replicas to share boundary data on
/// `region`, estimated in both conditioning orders.
pub fn pinning_free_energy(
    l: usize,
    mu: f64,
    region: &EdgeRegion,
    cfg: &McConfig,
    chain_base: u64,
) -> Result<PinningResult, McError> {
    cfg.validate()?;
    let lat = TorusLattice::new(l)?;
    let constraints = boundary_constraints(&lat, region);
    let zero = constraint_rank(&constraints, lat.num_plaquettes()) as f64 * LN_2;
    if mu == 0.0 || mu.is_infinite() {
        let v = Estimate::exact(if mu == 0.0 { zero } else { 0.0 });
        return Ok(PinningResult { delta_f: v, delta_f_zero: zero, forward: v, reverse: v, stages: 0 });
    }
    let order = chain_order(&constraints);
    let reversed: Vec<usize> = order.iter().rev().copied().collect();
    let coupling = 2.0 * mu;
    let runs = parallel_map(&[(order, 0u64), (reversed, 1u64 << 20)], cfg.threads.min(2), |(o, off)| {
        conditioned_free_energy(l, coupling, &constraints, o, cfg, chain_base + off)
    });
    let (forward, stages) = runs[0];
    let (reverse, _) = runs[1];
    let z = forward.z_distance(&reverse);
    if z > ORDER_AGREEMENT_Z {
        return Err(McError::ChainNotConverged { forward: forward.mean, reverse: reverse.mean, z });
    }
    let delta_f = Estimate {
        mean: 0.5 * (forward.mean + reverse.mean),
        stderr: 0.5 * forward.stderr.hypot(reverse.stderr),
        samples: forward.samples + reverse.samples,
    };
    Ok(PinningResult { delta_f, delta_f_zero: zero, forward, reverse, stages })
}

/// Placement of the Kitaev–Preskill disk, in vertices.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Tripartite {
    pub x: usize,
    pub y: usize,
    pub width: usize,
    pub height: usize,
}

impl Tripartite {
    /// Square disk of side `max(5, L/4 + 1)` vertices centered in the torus.
    pub fn centered(l: usize) -> Self {
        let side = (l / 4 + 1).max(5);
        let corner = l.saturating_sub(side) / 2;
        Tripartite { x: corner, y: corner, width: side, height: side }
    }

    /// Regions `A, B, C, AB, BC, AC, ABC` with their Kitaev–Preskill signs.
    pub fn regions(&self, lat: &TorusLattice) -> Vec<(&'static str, i32, EdgeRegion)> {
        let [a, b, c] = EdgeRegion::tripartite(lat, self.x, self.y, self.width, self.height);
        let ab = a.union(&b, lat);
        let bc = b.union(&c, lat);
        let ac = a.union(&c, lat);
        let abc = ab.union(&c, lat);
        vec![("A", 1, a), ("B", 1, b), ("C", 1, c), ("AB", -1, ab), ("BC", -1, bc), ("AC", -1, ac), ("ABC", 1, abc)]
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RegionEntropy {
    pub name: String,
    pub sign: i32,
    pub pinning: PinningResult,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TeeResult {
    pub gamma: Estimate,
    /// Contribution of the `ΔF(0)` terms to `γ`, exact.
    pub gamma_zero: f64,
    pub regions: Vec<RegionEntropy>,
}

/// `γ = −(S_A + S_B + S_C − S_AB − S_BC − S_AC + S_ABC)` with each
/// `S = ΔF(0) + ΔF(μ)`.
pub fn tee_kitaev_preskill(l: usize, p: f64, geometry: Tripartite, cfg: &McConfig) -> Result<TeeResult, McError> {
    cfg.validate()?;
    let mu = p_to_mu(p)?;
    let lat = TorusLattice::new(l)?;
    if geometry.width < 3 || geometry.height < 3 || geometry.width >= l || geometry.height >= l {
        return Err(McError::InvalidConfig("tripartite disk must have sides in [3, L)".into()));
    }
    let regions = geometry.regions(&lat);
    let jobs: Vec<(usize, &(&str, i32, EdgeRegion))> = regions.iter().enumerate().collect();
    let inner = McConfig { threads: 1, ..cfg.clone() };
    let results =
        parallel_map(&jobs, cfg.threads, |&(k, (_, _, r))| pinning_free_energy(l, mu, r, &inner, (k as u64) << 32));
    let mut entries = Vec::new();
    for (&(name, sign, _), res) in regions.iter().zip(results) {
        entries.push(RegionEntropy { name: name.to_string(), sign, pinning: res? });
    }
    // The ΔF(0) terms are integer multiples of ln 2; combining the integers
    // first keeps the analytic limits exact.
    let rank_sum: i64 = entries.iter().map(|e| e.sign as i64 * (e.pinning.delta_f_zero / LN_2).round() as i64).sum();
    let gamma_zero = -(rank_sum as f64) * LN_2;
    let mean_mu = if mu == 0.0 {
        gamma_zero
    } else if mu.is_infinite() {
        0.0
    } else {
        -entries.iter().map(|e| e.sign as f64 * e.pinning.delta_f.mean).sum::<f64>()
    };
    let var: f64 = entries.iter().map(|e| e.pinning.delta_f.stderr.powi(2)).sum();
    let samples = entries.iter().map(|e| e.pinning.delta_f.samples).sum();
    Ok(TeeResult {
        gamma: Estimate { mean: gamma_zero + mean_mu, stderr: var.sqrt(), samples },
        gamma_zero,
        regions: entries,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn plaquette_region_constraints_form_a_ring() {
        let lat = TorusLattice::new(6).unwrap();
        let region = EdgeRegion::vertex_rectangle(&lat, 2, 2, 2, 2);
        let cs = boundary_constraints(&lat, &region);
        assert_eq!(cs.len(), 4);
        assert!(cs.iter().all(|c| c.len() == 2));
        assert_eq!(constraint_rank(&cs, 36), 3);
    }

    #[test]
    fn rectangle_rank_is_perimeter_minus_one() {
        let lat = TorusLattice::new(10).unwrap();
        for (w, h) in [(2, 2), (3, 4), (5, 3), (6, 6)] {
            let region = EdgeRegion::vertex_rectangle(&lat, 1, 2, w, h);
            let cs = boundary_constraints(&lat, &region);
            assert_eq!(constraint_rank(&cs, 100), region.perimeter() - 1);
        }
    }

    #[test]
    fn kernel_of_equality_chain_is_the_component() {
        let a = vec![1, 2];
        let b = vec![2, 3];
        let k = kernel_basis(&[&a, &b], &[1, 2, 3]);
        assert_eq!(k, vec![vec![1, 2, 3]]);
    }

    #[test]
    fn chain_order_is_a_permutation() {
        let cs = vec![vec![0, 1], vec![5, 6], vec![1, 2], vec![2, 5]];
        let mut o = chain_order(&cs);
        assert_eq!(o[..3], [0, 2, 3]);
        o.sort_unstable();
        assert_eq!(o, vec![0, 1, 2, 3]);
    }

    #[test]
    fn zero_tension_is_analytic() {
        let lat = TorusLattice::new(8).unwrap();
        let region = EdgeRegion::vertex_rectangle(&lat, 2, 2, 3, 3);
        let r = pinning_free_energy(8, 0.0, &region, &McConfig::default(), 0).unwrap();
        assert!((r.delta_f.mean - 7.0 * LN_2).abs() < 1e-12);
        let t = tee_kitaev_preskill(16, 0.0, Tripartite::centered(16), &McConfig::default()).unwrap();
        assert!((t.gamma.mean - 2.0 * LN_2).abs() < 1e-12);
        assert_eq!(t.gamma.stderr, 0.0);
    }
}
