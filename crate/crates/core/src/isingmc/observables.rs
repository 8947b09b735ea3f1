use super::{block_means, chain_rng, jackknife, parallel_map, run_chain, Estimate, McConfig, McError, SpinLattice};
use crate::efdloop::{p_to_mu, TorusLattice};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

/// Block count for jackknife analyses.
pub const JACKKNIFE_BLOCKS: usize = 32;

fn plaquette_offset(l: usize, a: usize, b: usize) -> (usize, usize) {
    let (ax, ay) = (a % l, a / l);
    let (bx, by) = (b % l, b / l);
    ((bx + l - ax) % l, (by + l - ay) % l)
}

/// `⟨σ_a σ_b⟩` for each pair, averaged over all translations of the pair.
pub fn run_correlator(l: usize, mu: f64, pairs: &[(usize, usize)], cfg: &McConfig) -> Result<Vec<Estimate>, McError> {
    cfg.validate()?;
    let mut lat = SpinLattice::new(l, 2.0 * mu);
    let offsets: Vec<(usize, usize)> = pairs.iter().map(|&(a, b)| plaquette_offset(l, a, b)).collect();
    let mut series = vec![Vec::with_capacity(cfg.measurements); pairs.len()];
    let n = (l * l) as f64;
    run_chain(&mut lat, cfg, 0, |s| {
        let spins = s.spins();
        for (k, &(dx, dy)) in offsets.iter().enumerate() {
            let mut acc = 0i64;
            for y in 0..l {
                let row = y * l;
                let row2 = ((y + dy) % l) * l;
                for x in 0..l {
                    acc += (spins[row + x] * spins[row2 + (x + dx) % l]) as i64;
                }
            }
            series[k].push(acc as f64 / n);
        }
    });
    Ok(series.iter().map(|s| Estimate::from_series(s)).collect())
}

/// Bond crossed by a loop edge: plaquette `(x, y)` and direction
/// (0 = right neighbor, 1 = up neighbor).
type LoopBond = (usize, usize, usize);

fn loop_bonds(lat: &TorusLattice, edges: &[usize]) -> Vec<LoopBond> {
    let l = lat.size();
    edges
        .iter()
        .map(|&e| {
            let (x, y) = lat.coords(e / 2);
            if e % 2 == 0 {
                // Horizontal edge: plaquettes (x, y − 1) and (x, y).
                (x, (y + l - 1) % l, 1)
            } else {
                // Vertical edge: plaquettes (x − 1, y) and (x, y).
                ((x + l - 1) % l, y, 0)
            }
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WilsonFit {
    pub perimeter: Estimate,
    pub area: Estimate,
    pub constant: Estimate,
    pub chi2: f64,
    pub dof: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WilsonResult {
    pub values: Vec<Estimate>,
    /// `−ln W` per loop with its propagated error.
    pub minus_log: Vec<Estimate>,
    pub perimeters: Vec<usize>,
    pub areas: Vec<usize>,
    pub fit: Option<WilsonFit>,
}

/// Weighted normal equations for `y = a·P + b·A + c`.
fn normal_system(perimeters: &[f64], areas: &[f64], y: &[f64], w: &[f64]) -> ([[f64; 3]; 3], [f64; 3]) {
    let mut m = [[0.0; 3]; 3];
    let mut r = [0.0; 3];
    for k in 0..y.len() {
        let row = [perimeters[k], areas[k], 1.0];
        for i in 0..3 {
            r[i] += w[k] * row[i] * y[k];
            for j in 0..3 {
                m[i][j] += w[k] * row[i] * row[j];
            }
        }
    }
    (m, r)
}

/// Gaussian elimination with partial pivoting on a 3×3 system.
fn solve3(mut m: [[f64; 3]; 3], mut r: [f64; 3]) -> Option<[f64; 3]> {
    for c in 0..3 {
        let p = (c..3).max_by(|&a, &b| m[a][c].abs().total_cmp(&m[b][c].abs()))?;
        if m[p][c].abs() < 1e-300 {
            return None;
        }
        m.swap(c, p);
        r.swap(c, p);
        for i in c + 1..3 {
            let f = m[i][c] / m[c][c];
            for j in c..3 {
                m[i][j] -= f * m[c][j];
            }
            r[i] -= f * r[c];
        }
    }
    let mut x = [0.0; 3];
    for i in (0..3).rev() {
        x[i] = (r[i] - (i + 1..3).map(|j| m[i][j] * x[j]).sum::<f64>()) / m[i][i];
    }
    Some(x)
}

/// Fit of independent `−ln W` values; coefficient errors come from the
/// inverse normal matrix.
fn fit_minus_log(perimeters: &[usize], areas: &[usize], y: &[Estimate]) -> Option<WilsonFit> {
    if y.len() < 4 || y.iter().any(|v| v.stderr.is_nan() || v.stderr <= 0.0) {
        return None;
    }
    let p: Vec<f64> = perimeters.iter().map(|&v| v as f64).collect();
    let a: Vec<f64> = areas.iter().map(|&v| v as f64).collect();
    let w: Vec<f64> = y.iter().map(|v| v.stderr.powi(-2)).collect();
    let means: Vec<f64> = y.iter().map(|v| v.mean).collect();
    let (m, r) = normal_system(&p, &a, &means, &w);
    let x = solve3(m, r)?;
    let mut var = [0.0; 3];
    for (i, v) in var.iter_mut().enumerate() {
        let mut e = [0.0; 3];
        e[i] = 1.0;
        *v = solve3(m, e)?[i];
    }
    let chi2 = (0..y.len()).map(|k| w[k] * (means[k] - x[0] * p[k] - x[1] * a[k] - x[2]).powi(2)).sum();
    let coef = |i: usize| Estimate { mean: x[i], stderr: var[i].sqrt(), samples: y.len() };
    Some(WilsonFit { perimeter: coef(0), area: coef(1), constant: coef(2), chi2, dof: y.len() - 3 })
}

/// Rectangle `(width, height)` in plaquettes.
pub type Rectangle = (usize, usize);

/// Spins with a set of bonds whose coupling has been switched off.
struct CutLattice {
    spins: Vec<i8>,
    neighbors: Vec<[u32; 4]>,
    cut: Vec<[bool; 4]>,
    p_add: f64,
}

impl CutLattice {
    fn new(l: usize, coupling: f64) -> Self {
        let base = SpinLattice::new(l, coupling);
        let n = l * l;
        CutLattice {
            spins: vec![1; n],
            neighbors: (0..n).map(|i| base.neighbors(i)).collect(),
            cut: vec![[false; 4]; n],
            p_add: 1.0 - (-2.0 * coupling).exp(),
        }
    }

    fn cut_bond(&mut self, i: usize, dir: usize) {
        let j = self.neighbors[i][dir] as usize;
        self.cut[i][dir] = true;
        self.cut[j][(dir + 2) % 4] = true;
    }

    /// `E[e^{−J σ_a σ_b} | rest]` for `b` the `dir` neighbor of `a`, with
    /// `σ_b` summed out against its local field.
    fn conditional_ratio(&self, a: usize, dir: usize, coupling: f64) -> f64 {
        let b = self.neighbors[a][dir] as usize;
        let field: i32 =
            (0..4).filter(|&d| !self.cut[b][d]).map(|d| self.spins[self.neighbors[b][d] as usize] as i32).sum();
        let h = coupling * field as f64;
        (h - coupling * self.spins[a] as f64).cosh() / h.cosh()
    }

    /// Grows and flips one Wolff cluster over the uncut bonds.
    fn wolff_step(&mut self, rng: &mut ChaCha8Rng, stack: &mut Vec<usize>, marks: &mut [bool]) -> usize {
        let seed = rng.gen_range(0..self.spins.len());
        let s = self.spins[seed];
        let mut cluster = Vec::new();
        stack.clear();
        stack.push(seed);
        marks[seed] = true;
        while let Some(i) = stack.pop() {
            cluster.push(i);
            for (d, &j) in self.neighbors[i].iter().enumerate() {
                let j = j as usize;
                if !self.cut[i][d] && !marks[j] && self.spins[j] == s && rng.gen::<f64>() < self.p_add {
                    marks[j] = true;
                    stack.push(j);
                }
            }
        }
        for &i in &cluster {
            self.spins[i] = -s;
            marks[i] = false;
        }
        cluster.len()
    }
}

/// `−ln W` for one loop as a sum over stages that switch off the loop's
/// bonds one at a time.
///
/// At `J = 2μ` the Wilson weight `Π_C e^{−2μσσ}` turns each loop bond's
/// coupling off, so `W = Z_cut / Z`. Stage `k` estimates
/// `Z_{k+1} / Z_k = ⟨e^{−J σ_a σ_b}⟩_k` on the lattice with the first `k`
/// bonds already cut, with `σ_b` summed out analytically. A direct average of the full product is dominated by
/// configurations with the loop interior reversed, which an ordered chain
/// essentially never visits.
fn staged_minus_log(l: usize, mu: f64, bonds: &[LoopBond], cfg: &McConfig, chain: u64) -> Estimate {
    let coupling = 2.0 * mu;
    let mut lat = CutLattice::new(l, coupling);
    let mut rng = chain_rng(cfg.seed, chain);
    let n = l * l;
    let mut stack = Vec::with_capacity(n);
    let mut marks = vec![false; n];
    let calibration = 64.max(cfg.thermalization);
    let flipped: usize = (0..calibration).map(|_| lat.wolff_step(&mut rng, &mut stack, &mut marks)).sum();
    let clusters = (n * calibration).div_ceil(flipped.max(1)).max(1);
    let mut sweep = |lat: &mut CutLattice, rng: &mut ChaCha8Rng| {
        for _ in 0..clusters {
            lat.wolff_step(rng, &mut stack, &mut marks);
        }
    };
    let (mut total, mut var) = (0.0, 0.0);
    let mut series = Vec::with_capacity(cfg.measurements);
    for &(x, y, d) in bonds {
        let a = y * l + x;
        for _ in 0..cfg.thermalization {
            sweep(&mut lat, &mut rng);
        }
        series.clear();
        for _ in 0..cfg.measurements {
            for _ in 0..cfg.stride {
                sweep(&mut lat, &mut rng);
            }
            series.push(lat.conditional_ratio(a, d, coupling));
        }
        let ratio = Estimate::from_series(&series);
        total -= ratio.mean.ln();
        var += (ratio.stderr / ratio.mean).powi(2);
        lat.cut_bond(a, d);
    }
    Estimate { mean: total, stderr: var.sqrt(), samples: cfg.measurements * bonds.len() }
}

/// `⟨Π_{l∈C} e^{−2μ σ_i σ_j}⟩` for rectangular loops, each from its own
/// staged chain (chain index = loop index), with a weighted fit of
/// `−ln W = a·P + b·A + c`.
pub fn wilson_observable(l: usize, mu: f64, loops: &[Rectangle], cfg: &McConfig) -> Result<WilsonResult, McError> {
    cfg.validate()?;
    let torus = TorusLattice::new(l)?;
    if loops.iter().any(|&(w, h)| w == 0 || h == 0 || w >= l || h >= l) {
        return Err(McError::InvalidConfig("loop rectangles must fit strictly inside the torus".into()));
    }
    let perimeters: Vec<usize> = loops.iter().map(|&(w, h)| 2 * (w + h)).collect();
    let areas: Vec<usize> = loops.iter().map(|&(w, h)| w * h).collect();
    if mu == 0.0 {
        let values = vec![Estimate::exact(1.0); loops.len()];
        let minus_log = vec![Estimate::exact(0.0); loops.len()];
        return Ok(WilsonResult { values, minus_log, perimeters, areas, fit: None });
    }
    let jobs: Vec<(u64, Vec<LoopBond>)> = loops
        .iter()
        .enumerate()
        .map(|(k, &(w, h))| (k as u64, loop_bonds(&torus, &crate::efdloop::rectangle_loop(&torus, 0, 0, w, h))))
        .collect();
    let minus_log = parallel_map(&jobs, cfg.threads, |(chain, bonds)| staged_minus_log(l, mu, bonds, cfg, *chain));
    let values = minus_log
        .iter()
        .map(|y| {
            let w = (-y.mean).exp();
            Estimate { mean: w, stderr: w * y.stderr, samples: y.samples }
        })
        .collect();
    let fit = fit_minus_log(&perimeters, &areas, &minus_log);
    Ok(WilsonResult { values, minus_log, perimeters, areas, fit })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BinderPoint {
    pub l: usize,
    pub p: f64,
    pub mu: f64,
    pub binder: Estimate,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Crossing {
    pub l_small: usize,
    pub l_large: usize,
    pub p: Estimate,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BinderScan {
    pub points: Vec<BinderPoint>,
    pub crossings: Vec<Crossing>,
    pub p_c: Estimate,
}

/// `U = 1 − ⟨m⁴⟩ / 3⟨m²⟩²` at one `(L, μ)`.
pub fn binder_cumulant(l: usize, mu: f64, cfg: &McConfig, chain: u64) -> Estimate {
    let mut lat = SpinLattice::new(l, 2.0 * mu);
    let n = (l * l) as f64;
    let (mut m2, mut m4) = (Vec::with_capacity(cfg.measurements), Vec::with_capacity(cfg.measurements));
    run_chain(&mut lat, cfg, chain, |s| {
        let m = s.magnetization() as f64 / n;
        m2.push(m * m);
        m4.push(m * m * m * m);
    });
    let blocks = block_means(&[m2, m4], JACKKNIFE_BLOCKS.min(cfg.measurements));
    jackknife(&blocks, |v| 1.0 - v[1] / (3.0 * v[0] * v[0]))
}

/// Indices of the last significantly negative and the following first
/// significantly positive entry of `d`.
fn bracket(d: &[f64], s: &[f64]) -> Option<(usize, usize)> {
    let last_neg = (0..d.len()).rfind(|&k| d[k] < -2.0 * s[k])?;
    let first_pos = (last_neg + 1..d.len()).find(|&k| d[k] > 2.0 * s[k])?;
    Some((last_neg, first_pos))
}

/// Root of `U_large − U_small` on a shared grid, by a weighted straight-line
/// fit over the bracketing points and everything between them.
fn crossing_point(p: &[f64], d: &[f64], s: &[f64]) -> Option<f64> {
    let (lo, hi) = bracket(d, s)?;
    let (mut sw, mut sx, mut sy, mut sxx, mut sxy) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for k in lo..=hi {
        let w = 1.0 / s[k].max(1e-12).powi(2);
        sw += w;
        sx += w * p[k];
        sy += w * d[k];
        sxx += w * p[k] * p[k];
        sxy += w * p[k] * d[k];
    }
    let slope = (sw * sxy - sx * sy) / (sw * sxx - sx * sx);
    let intercept = (sy - slope * sx) / sw;
    (slope > 0.0).then(|| -intercept / slope)
}

fn run_points(jobs: &[(usize, f64)], first_chain: usize, cfg: &McConfig) -> Result<Vec<BinderPoint>, McError> {
    let chains: Vec<(usize, usize, f64, f64)> = jobs
        .iter()
        .enumerate()
        .map(|(k, &(l, p))| Ok((first_chain + k, l, p, p_to_mu(p)?)))
        .collect::<Result<_, McError>>()?;
    Ok(parallel_map(&chains, cfg.threads, |&(k, l, p, mu)| BinderPoint {
        l,
        p,
        mu,
        binder: binder_cumulant(l, mu, cfg, k as u64),
    }))
}

/// `(p, U_large − U_small, σ)` on the grid points shared by two sizes.
fn differences(points: &[BinderPoint], small: usize, large: usize) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
    let mut rows: Vec<(f64, f64, f64)> = points
        .iter()
        .filter(|a| a.l == small)
        .filter_map(|a| {
            points
                .iter()
                .find(|b| b.l == large && b.p == a.p)
                .map(|b| (a.p, b.binder.mean - a.binder.mean, a.binder.stderr.hypot(b.binder.stderr)))
        })
        .collect();
    rows.sort_by(|x, y| x.0.total_cmp(&y.0));
    (rows.iter().map(|r| r.0).collect(), rows.iter().map(|r| r.1).collect(), rows.iter().map(|r| r.2).collect())
}

/// Binder cumulants on every `(L, p)` and the crossings of adjacent sizes.
///
/// After the coarse grid, `refine` extra points are placed evenly inside
/// each bracketing interval, since the larger sizes vary faster than a
/// typical grid spacing near the crossing.
pub fn binder_scan(ls: &[usize], p_grid: &[f64], refine: usize, cfg: &McConfig) -> Result<BinderScan, McError> {
    cfg.validate()?;
    if ls.len() < 2 || p_grid.len() < 2 {
        return Err(McError::InvalidConfig("need at least two sizes and two grid points".into()));
    }
    let mut sizes = ls.to_vec();
    sizes.sort_unstable();
    sizes.dedup();
    let coarse: Vec<(usize, f64)> = sizes.iter().flat_map(|&l| p_grid.iter().map(move |&p| (l, p))).collect();
    let mut points = run_points(&coarse, 0, cfg)?;
    if refine > 0 {
        let mut extra: Vec<(usize, f64)> = Vec::new();
        for pair in sizes.windows(2) {
            let (p, d, s) = differences(&points, pair[0], pair[1]);
            if let Some((lo, hi)) = bracket(&d, &s) {
                for k in 1..=refine {
                    let q = p[lo] + (p[hi] - p[lo]) * k as f64 / (refine + 1) as f64;
                    for &l in pair {
                        if !extra.contains(&(l, q)) {
                            extra.push((l, q));
                        }
                    }
                }
            }
        }
        points.extend(run_points(&extra, coarse.len(), cfg)?);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ 0x5eed_b1de);
    let mut crossings = Vec::new();
    for pair in sizes.windows(2) {
        let (p, d, s) = differences(&points, pair[0], pair[1]);
        let Some(root) = crossing_point(&p, &d, &s) else { continue };
        let roots: Vec<f64> = (0..400)
            .filter_map(|_| {
                let noisy: Vec<f64> = d
                    .iter()
                    .zip(&s)
                    .map(|(&m, &e)| m + Normal::new(0.0, e.max(1e-15)).expect("finite sigma").sample(&mut rng))
                    .collect();
                crossing_point(&p, &noisy, &s)
            })
            .collect();
        let err = if roots.len() >= 2 {
            let m = roots.iter().sum::<f64>() / roots.len() as f64;
            (roots.iter().map(|r| (r - m).powi(2)).sum::<f64>() / (roots.len() - 1) as f64).sqrt()
        } else {
            f64::INFINITY
        };
        crossings.push(Crossing {
            l_small: pair[0],
            l_large: pair[1],
            p: Estimate { mean: root, stderr: err, samples: roots.len() },
        });
    }
    if crossings.is_empty() {
        return Err(McError::NoCrossingInGrid);
    }
    let wsum: f64 = crossings.iter().map(|c| 1.0 / c.p.stderr.max(1e-9).powi(2)).sum();
    let mean = crossings.iter().map(|c| c.p.mean / c.p.stderr.max(1e-9).powi(2)).sum::<f64>() / wsum;
    let spread = crossings.iter().map(|c| (c.p.mean - mean).abs()).fold(0.0, f64::max);
    let p_c = Estimate { mean, stderr: (1.0 / wsum).sqrt().hypot(spread), samples: crossings.len() };
    points.sort_by(|a, b| (a.l, a.p).partial_cmp(&(b.l, b.p)).expect("finite grid"));
    Ok(BinderScan { points, crossings, p_c })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fit_recovers_exact_coefficients() {
        let p = [4.0, 8.0, 12.0, 16.0];
        let a = [1.0, 4.0, 9.0, 16.0];
        let y: Vec<f64> = (0..4).map(|k| 0.3 * p[k] + 0.01 * a[k] - 0.2).collect();
        let (m, r) = normal_system(&p, &a, &y, &[1.0; 4]);
        let x = solve3(m, r).unwrap();
        assert!((x[0] - 0.3).abs() < 1e-10 && (x[1] - 0.01).abs() < 1e-10 && (x[2] + 0.2).abs() < 1e-10);
        let noisy: Vec<Estimate> =
            (0..4).map(|k| Estimate { mean: y[k] + [0.01, -0.01, 0.01, -0.01][k], stderr: 0.01, samples: 1 }).collect();
        let fit = fit_minus_log(&[4, 8, 12, 16], &[1, 4, 9, 16], &noisy).unwrap();
        assert_eq!(fit.dof, 1);
        assert!(fit.area.stderr > 0.0 && fit.area.z_distance(&Estimate::exact(0.01)) < 3.0);
    }

    #[test]
    fn crossing_of_straight_lines() {
        let p = [0.1, 0.2, 0.3, 0.4];
        let d = [-0.3, -0.1, 0.1, 0.3];
        let root = crossing_point(&p, &d, &[0.01; 4]).unwrap();
        assert!((root - 0.25).abs() < 1e-12);
        assert!(crossing_point(&p, &[-0.3, -0.2, -0.1, -0.05], &[0.01; 4]).is_none());
    }

    #[test]
    fn binder_limits() {
        let cfg = McConfig { thermalization: 200, measurements: 2000, ..McConfig::default() };
        let para = binder_cumulant(16, 0.02, &cfg, 0);
        assert!(para.mean.abs() < 0.1, "{para:?}");
        let ferro = binder_cumulant(16, 1.0, &cfg, 1);
        assert!((ferro.mean - 2.0 / 3.0).abs() < 0.01, "{ferro:?}");
    }

    #[test]
    fn zero_tension_limits() {
        let cfg = McConfig { thermalization: 100, measurements: 2000, ..McConfig::default() };
        let c = run_correlator(6, 0.0, &[(0, 1)], &cfg).unwrap();
        assert!(c[0].mean.abs() < 4.0 * c[0].stderr.max(0.01));
        let w = wilson_observable(6, 0.0, &[(1, 1), (2, 2)], &cfg).unwrap();
        assert!(w.values.iter().all(|v| v.mean == 1.0));
    }
}
