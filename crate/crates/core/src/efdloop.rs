//! Exact evaluation of the toric-code errorfield-double loop model on small
//! tori, and the spin-enumeration oracles it is checked against.
//!
//! Edges are indexed `2·v + dir` with `v = y·L + x`; `dir = 0` is the edge
//! from `(x, y)` to `(x+1, y)`, `dir = 1` the edge to `(x, y+1)`. Plaquette
//! `y·L + x` has lower-left corner `(x, y)`.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EfdError {
    #[error("error rate {0} outside [0, 1/2]")]
    OutOfRange(f64),
    #[error("{what} is {size}, above the enumeration cap of {cap}")]
    TooLarge { what: &'static str, size: usize, cap: usize },
    #[error("edge set is not a closed loop")]
    NotClosed,
    #[error("invalid dual path: {0}")]
    InvalidPath(String),
    #[error("boundary refinement gives ln Ω = {refined}, direct sum gives {direct}")]
    RefinementMismatch { direct: f64, refined: f64 },
    #[error("lattice size must be at least 2")]
    LatticeTooSmall,
}

/// Default lattice-size cap for cycle-space enumeration.
pub const DEFAULT_L_CAP: usize = 4;
/// Default per-side edge cap for the Rényi-2 region enumeration.
pub const DEFAULT_EDGE_CAP: usize = 14;

/// `μ = artanh(p / (1 − p))`; `p = 1/2` maps to `+∞`.
pub fn p_to_mu(p: f64) -> Result<f64, EfdError> {
    if !(0.0..=0.5).contains(&p) || p.is_nan() {
        return Err(EfdError::OutOfRange(p));
    }
    if p == 0.5 {
        return Ok(f64::INFINITY);
    }
    Ok((p / (1.0 - p)).atanh())
}

/// Inverse of [`p_to_mu`].
pub fn mu_to_p(mu: f64) -> f64 {
    if mu.is_infinite() {
        return 0.5;
    }
    let t = mu.tanh();
    t / (1.0 + t)
}

/// The self-dual tension `¼ ln(1 + √2)`.
pub fn critical_mu() -> f64 {
    0.25 * (1.0 + 2f64.sqrt()).ln()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum ErrorBasis {
    /// Pauli X errors, creating `m m̄` pairs; loops on the direct lattice.
    X,
    /// Pauli Z errors, creating `e ē` pairs; loops on the dual lattice.
    Z,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ErrorModel {
    pub basis: ErrorBasis,
    pub p: f64,
    pub mu: f64,
}

impl ErrorModel {
    pub fn new(basis: ErrorBasis, p: f64) -> Result<Self, EfdError> {
        Ok(ErrorModel { basis, p, mu: p_to_mu(p)? })
    }
}

/// Ising data equivalent to the loop model at tension `μ`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct IsingCoupling {
    /// Ferromagnetic coupling `J = 2μ` on the plaquette lattice.
    pub coupling: f64,
    pub string_observable: &'static str,
    pub wilson_observable: &'static str,
}

pub fn ising_equivalent(mu: f64) -> IsingCoupling {
    IsingCoupling {
        coupling: 2.0 * mu,
        string_observable: "<s_a s_b>",
        wilson_observable: "<prod_{l in C} exp(-2 mu s_i s_j)>",
    }
}

/// Which homology classes of relative loops enter the sums.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
pub enum Sector {
    /// Contractible loops only: Ising spins with periodic boundaries.
    #[default]
    Trivial,
    /// The whole cycle space: the four periodic/antiperiodic Ising sectors.
    Full,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TorusLattice {
    l: usize,
}

impl TorusLattice {
    pub fn new(l: usize) -> Result<Self, EfdError> {
        if l < 2 {
            return Err(EfdError::LatticeTooSmall);
        }
        Ok(TorusLattice { l })
    }

    pub fn size(&self) -> usize {
        self.l
    }

    pub fn num_vertices(&self) -> usize {
        self.l * self.l
    }

    pub fn num_edges(&self) -> usize {
        2 * self.l * self.l
    }

    pub fn num_plaquettes(&self) -> usize {
        self.l * self.l
    }

    pub fn vertex(&self, x: usize, y: usize) -> usize {
        (y % self.l) * self.l + (x % self.l)
    }

    pub fn coords(&self, v: usize) -> (usize, usize) {
        (v % self.l, v / self.l)
    }

    pub fn edge(&self, x: usize, y: usize, dir: usize) -> usize {
        2 * self.vertex(x, y) + dir
    }

    pub fn edge_vertices(&self, e: usize) -> [usize; 2] {
        let v = e / 2;
        let (x, y) = self.coords(v);
        if e.is_multiple_of(2) {
            [v, self.vertex(x + 1, y)]
        } else {
            [v, self.vertex(x, y + 1)]
        }
    }

    /// The two plaquettes sharing edge `e`.
    pub fn edge_plaquettes(&self, e: usize) -> [usize; 2] {
        let l = self.l;
        let (x, y) = self.coords(e / 2);
        if e.is_multiple_of(2) {
            [self.vertex(x, y), self.vertex(x, y + l - 1)]
        } else {
            [self.vertex(x, y), self.vertex(x + l - 1, y)]
        }
    }

    pub fn vertex_edges(&self, v: usize) -> [usize; 4] {
        let l = self.l;
        let (x, y) = self.coords(v);
        [self.edge(x, y, 0), self.edge(x, y, 1), self.edge(x + l - 1, y, 0), self.edge(x, y + l - 1, 1)]
    }

    pub fn plaquette_edges(&self, p: usize) -> [usize; 4] {
        let (x, y) = self.coords(p);
        [self.edge(x, y, 0), self.edge(x, y + 1, 0), self.edge(x, y, 1), self.edge(x + 1, y, 1)]
    }

    /// Edge shared by two adjacent plaquettes.
    pub fn shared_edge(&self, a: usize, b: usize) -> Option<usize> {
        let eb = self.plaquette_edges(b);
        self.plaquette_edges(a).into_iter().find(|e| eb.contains(e))
    }

    /// Horizontal edges in column 0: crossed by a dual cycle winding in y.
    pub fn winding_x_cut(&self) -> Vec<usize> {
        (0..self.l).map(|y| self.edge(0, y, 0)).collect()
    }

    /// Vertical edges in row 0: crossed by a dual cycle winding in x.
    pub fn winding_y_cut(&self) -> Vec<usize> {
        (0..self.l).map(|x| self.edge(x, 0, 1)).collect()
    }

    /// Image of edge `e` under the duality that shifts plaquette centers to
    /// vertices: the dual edge crossing `e`, relabeled onto this lattice.
    /// Vertex stars map to plaquette boundaries.
    pub fn dual_edge(&self, e: usize) -> usize {
        let l = self.l;
        let (x, y) = self.coords(e / 2);
        if e.is_multiple_of(2) {
            self.edge(x, y + l - 1, 1)
        } else {
            self.edge(x + l - 1, y, 0)
        }
    }
}

/// Bitset over edges; supports lattices with up to 64 edges.
pub type EdgeSet = u64;

fn mask(edges: &[usize]) -> EdgeSet {
    edges.iter().fold(0, |m, &e| m ^ (1u64 << e))
}

pub fn edge_set(edges: &[usize]) -> EdgeSet {
    edges.iter().fold(0, |m, &e| m | (1u64 << e))
}

pub fn is_closed(lat: &TorusLattice, h: EdgeSet) -> bool {
    (0..lat.num_vertices()).all(|v| lat.vertex_edges(v).iter().filter(|&&e| h >> e & 1 == 1).count() % 2 == 0)
}

fn check_edges(lat: &TorusLattice) -> Result<(), EfdError> {
    if lat.num_edges() > 64 {
        return Err(EfdError::TooLarge { what: "edge count", size: lat.num_edges(), cap: 64 });
    }
    Ok(())
}

/// Basis of closed loop configurations: `L² − 1` plaquette boundaries and
/// two winding cycles.
pub fn cycle_space(lat: &TorusLattice) -> Result<Vec<EdgeSet>, EfdError> {
    check_edges(lat)?;
    let l = lat.size();
    let mut basis: Vec<EdgeSet> = (0..lat.num_plaquettes() - 1).map(|p| mask(&lat.plaquette_edges(p))).collect();
    basis.push(mask(&(0..l).map(|x| lat.edge(x, 0, 0)).collect::<Vec<_>>()));
    basis.push(mask(&(0..l).map(|y| lat.edge(0, y, 1)).collect::<Vec<_>>()));
    Ok(basis)
}

fn sector_basis(lat: &TorusLattice, sector: Sector) -> Result<Vec<EdgeSet>, EfdError> {
    let mut b = cycle_space(lat)?;
    if sector == Sector::Trivial {
        b.truncate(b.len() - 2);
    }
    Ok(b)
}

/// Visits every element of the span of `basis` in Gray-code order.
fn for_each_span(basis: &[EdgeSet], mut f: impl FnMut(EdgeSet)) {
    let mut cur = 0u64;
    f(cur);
    for i in 1u64..(1u64 << basis.len()) {
        cur ^= basis[i.trailing_zeros() as usize];
        f(cur);
    }
}

/// `ln Σ_k n_k e^{−a·k}` over a histogram, stable for large `a` and `a = ∞`.
fn log_weighted(hist: &[f64], a: f64) -> f64 {
    let terms: Vec<f64> = hist
        .iter()
        .enumerate()
        .filter(|(_, &n)| n != 0.0)
        .map(|(k, &n)| n.abs().ln() - if k == 0 { 0.0 } else { a * k as f64 })
        .collect();
    log_sum_exp(&terms)
}

pub fn log_sum_exp(terms: &[f64]) -> f64 {
    let m = terms.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return m;
    }
    // Neumaier-compensated sum: spin enumerations add up to 2^20 terms.
    let (mut sum, mut carry) = (0.0f64, 0.0f64);
    for t in terms {
        let x = (t - m).exp();
        let next = sum + x;
        carry += if sum.abs() >= x.abs() { (sum - next) + x } else { (x - next) + sum };
        sum = next;
    }
    m + (sum + carry).ln()
}

/// `Σ_k n_k e^{−a k}` for a signed histogram, returned as a ratio-friendly
/// pair `(log|positive part|, log|negative part|)`.
fn signed_log_parts(pos: &[f64], neg: &[f64], a: f64) -> (f64, f64) {
    (log_weighted(pos, a), log_weighted(neg, a))
}

fn check_l(lat: &TorusLattice, cap: usize) -> Result<(), EfdError> {
    if lat.size() > cap {
        return Err(EfdError::TooLarge { what: "lattice size", size: lat.size(), cap });
    }
    check_edges(lat)
}

/// Dual path through adjacent plaquettes.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DualPath {
    pub plaquettes: Vec<usize>,
}

impl DualPath {
    /// Straight path along x from plaquette `(x, y)` over `steps` plaquettes.
    pub fn horizontal(lat: &TorusLattice, x: usize, y: usize, steps: usize) -> Self {
        DualPath { plaquettes: (0..=steps).map(|k| lat.vertex(x + k, y)).collect() }
    }

    /// Edges crossed by the path.
    pub fn crossings(&self, lat: &TorusLattice) -> Result<Vec<usize>, EfdError> {
        if self.plaquettes.is_empty() {
            return Err(EfdError::InvalidPath("empty".into()));
        }
        self.plaquettes
            .windows(2)
            .map(|w| {
                lat.shared_edge(w[0], w[1])
                    .ok_or_else(|| EfdError::InvalidPath(format!("plaquettes {} and {} are not adjacent", w[0], w[1])))
            })
            .collect()
    }

    pub fn endpoints(&self) -> (usize, usize) {
        (self.plaquettes[0], *self.plaquettes.last().expect("nonempty"))
    }
}

/// `Σ_h (−1)^{#crossing(P,h)} e^{−4μ|h|} / Σ_h e^{−4μ|h|}`.
pub fn exact_string_expectation(
    lat: &TorusLattice,
    mu: f64,
    path: &DualPath,
    sector: Sector,
    l_cap: usize,
) -> Result<f64, EfdError> {
    check_l(lat, l_cap)?;
    let crossed = mask(&path.crossings(lat)?);
    let basis = sector_basis(lat, sector)?;
    let n = lat.num_edges() + 1;
    let (mut pos, mut neg) = (vec![0.0; n], vec![0.0; n]);
    for_each_span(&basis, |h| {
        let k = h.count_ones() as usize;
        if (h & crossed).count_ones().is_multiple_of(2) {
            pos[k] += 1.0;
        } else {
            neg[k] += 1.0;
        }
    });
    let total: Vec<f64> = pos.iter().zip(&neg).map(|(a, b)| a + b).collect();
    let log_z = log_weighted(&total, 4.0 * mu);
    let (lp, ln) = signed_log_parts(&pos, &neg, 4.0 * mu);
    Ok((lp - log_z).exp() - (ln - log_z).exp())
}

/// Edges of the boundary of a `w × h` block of plaquettes with lower-left
/// corner `(x, y)`.
pub fn rectangle_loop(lat: &TorusLattice, x: usize, y: usize, w: usize, h: usize) -> Vec<usize> {
    let mut edges = Vec::new();
    for i in 0..w {
        edges.push(lat.edge(x + i, y, 0));
        edges.push(lat.edge(x + i, y + h, 0));
    }
    for j in 0..h {
        edges.push(lat.edge(x, y + j, 1));
        edges.push(lat.edge(x + w, y + j, 1));
    }
    edges
}

/// `Σ_h e^{−2μ(|h| + |h+C|)} / Σ_h e^{−4μ|h|}`.
pub fn exact_wilson_loop(
    lat: &TorusLattice,
    mu: f64,
    loop_edges: &[usize],
    sector: Sector,
    l_cap: usize,
) -> Result<f64, EfdError> {
    check_l(lat, l_cap)?;
    let c = mask(loop_edges);
    if !is_closed(lat, c) {
        return Err(EfdError::NotClosed);
    }
    if mu == 0.0 {
        return Ok(1.0);
    }
    let basis = sector_basis(lat, sector)?;
    let n = lat.num_edges() + 1;
    let mut z = vec![0.0; n];
    let mut w = vec![0.0; 2 * n];
    for_each_span(&basis, |h| {
        z[h.count_ones() as usize] += 1.0;
        w[(h.count_ones() + (h ^ c).count_ones()) as usize] += 1.0;
    });
    Ok((log_weighted(&w, 2.0 * mu) - log_weighted(&z, 4.0 * mu)).exp())
}

/// Subset of edges together with its vertex classification.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EdgeRegion {
    pub edges: Vec<usize>,
    pub complement: Vec<usize>,
    /// Vertices touching edges of both sides.
    pub boundary_vertices: Vec<usize>,
}

impl EdgeRegion {
    pub fn new(lat: &TorusLattice, edges: &[usize]) -> Self {
        let mut inside = vec![false; lat.num_edges()];
        for &e in edges {
            inside[e] = true;
        }
        let mut sorted: Vec<usize> = (0..lat.num_edges()).filter(|&e| inside[e]).collect();
        sorted.dedup();
        let complement = (0..lat.num_edges()).filter(|&e| !inside[e]).collect();
        let boundary_vertices = (0..lat.num_vertices())
            .filter(|&v| {
                let es = lat.vertex_edges(v);
                es.iter().any(|&e| inside[e]) && es.iter().any(|&e| !inside[e])
            })
            .collect();
        EdgeRegion { edges: sorted, complement, boundary_vertices }
    }

    /// All edges with both endpoints inside the `wv × hv` vertex rectangle
    /// with lower-left vertex `(x, y)`.
    pub fn vertex_rectangle(lat: &TorusLattice, x: usize, y: usize, wv: usize, hv: usize) -> Self {
        let l = lat.size();
        let inside_v = |v: usize| {
            let (vx, vy) = lat.coords(v);
            (vx + l - x % l) % l < wv && (vy + l - y % l) % l < hv
        };
        let edges: Vec<usize> = (0..lat.num_edges())
            .filter(|&e| {
                let [a, b] = lat.edge_vertices(e);
                inside_v(a) && inside_v(b)
            })
            .collect();
        Self::new(lat, &edges)
    }

    /// `|∂A|`: the number of vertices touching both the region and its
    /// complement, i.e. the number of star operators the cut crosses.
    pub fn perimeter(&self) -> usize {
        self.boundary_vertices.len()
    }

    pub fn union(&self, other: &EdgeRegion, lat: &TorusLattice) -> EdgeRegion {
        let mut edges = self.edges.clone();
        edges.extend_from_slice(&other.edges);
        EdgeRegion::new(lat, &edges)
    }

    /// Edges whose midpoint lies in the closed vertex rectangle spanned by
    /// `(x, y)` and `(x + wv − 1, y + hv − 1)`, split into three pieces for
    /// a Kitaev–Preskill combination: `A` upper left, `B` upper right, `C`
    /// lower half. Needs `wv, hv ≥ 3` and `wv, hv < L`.
    pub fn tripartite(lat: &TorusLattice, x: usize, y: usize, wv: usize, hv: usize) -> [EdgeRegion; 3] {
        let disk = EdgeRegion::vertex_rectangle(lat, x, y, wv, hv);
        let l = lat.size();
        // Midpoints in doubled coordinates relative to the corner.
        let mid = |e: usize| {
            let (ex, ey) = lat.coords(e / 2);
            let rx = 2 * ((ex + l - x % l) % l) + usize::from(e.is_multiple_of(2));
            let ry = 2 * ((ey + l - y % l) % l) + usize::from(e % 2 == 1);
            (rx, ry)
        };
        let split_x = 2 * (wv / 2);
        let split_y = 2 * (hv / 2);
        let mut parts: [Vec<usize>; 3] = Default::default();
        for &e in &disk.edges {
            let (mx, my) = mid(e);
            let k = if my < split_y {
                2
            } else if mx < split_x {
                0
            } else {
                1
            };
            parts[k].push(e);
        }
        parts.map(|p| EdgeRegion::new(lat, &p))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RenyiEntropy {
    /// Entropy in nats.
    pub nats: f64,
    /// The same value in units of `ln 2`.
    pub log2_units: f64,
}

impl RenyiEntropy {
    fn from_nats(nats: f64) -> Self {
        RenyiEntropy { nats, log2_units: nats / std::f64::consts::LN_2 }
    }
}

/// Histograms of one side's partial loops, keyed by boundary parity and the
/// winding parities, indexed by edge count.
struct SideTable {
    keys: std::collections::BTreeMap<(u64, u32, u32), Vec<f64>>,
}

fn side_table(lat: &TorusLattice, side: &[usize], boundary: &[usize]) -> SideTable {
    let nv = lat.num_vertices();
    let mut in_side = vec![false; lat.num_edges()];
    for &e in side {
        in_side[e] = true;
    }
    let mut bpos = vec![usize::MAX; nv];
    for (i, &v) in boundary.iter().enumerate() {
        bpos[v] = i;
    }
    // Per-edge vertex-parity masks: interior vertices and boundary bits.
    let interior: Vec<bool> = (0..nv).map(|v| lat.vertex_edges(v).iter().all(|&e| in_side[e])).collect();
    let mut vmask = Vec::with_capacity(side.len());
    let mut bmask = Vec::with_capacity(side.len());
    let mut vidx = vec![usize::MAX; nv];
    let mut nint = 0;
    for v in 0..nv {
        if interior[v] {
            vidx[v] = nint;
            nint += 1;
        }
    }
    for &e in side {
        let (mut vm, mut bm) = (0u64, 0u64);
        for v in lat.edge_vertices(e) {
            if interior[v] {
                vm ^= 1 << vidx[v];
            } else if bpos[v] != usize::MAX {
                bm ^= 1 << bpos[v];
            }
        }
        vmask.push(vm);
        bmask.push(bm);
    }
    let cx = edge_set(&lat.winding_x_cut());
    let cy = edge_set(&lat.winding_y_cut());
    let xs: Vec<u32> = side.iter().map(|&e| (cx >> e & 1) as u32).collect();
    let ys: Vec<u32> = side.iter().map(|&e| (cy >> e & 1) as u32).collect();
    let mut keys = std::collections::BTreeMap::new();
    let n = side.len();
    let (mut vm, mut bm, mut wx, mut wy, mut k) = (0u64, 0u64, 0u32, 0u32, 0usize);
    let mut gray = 0u64;
    let mut record = |vm: u64, bm: u64, wx: u32, wy: u32, k: usize| {
        if vm == 0 {
            let h = keys.entry((bm, wx, wy)).or_insert_with(|| vec![0.0; n + 1]);
            h[k] += 1.0;
        }
    };
    record(vm, bm, wx, wy, k);
    for i in 1u64..(1u64 << n) {
        let j = i.trailing_zeros() as usize;
        gray ^= 1 << j;
        vm ^= vmask[j];
        bm ^= bmask[j];
        wx ^= xs[j];
        wy ^= ys[j];
        if gray >> j & 1 == 1 {
            k += 1;
        } else {
            k -= 1;
        }
        record(vm, bm, wx, wy, k);
    }
    SideTable { keys }
}

/// Rényi-2 entropy `−ln Γ_A(0) − ln Γ_A(μ)` of an edge region.
pub fn exact_renyi2(
    lat: &TorusLattice,
    mu: f64,
    region: &EdgeRegion,
    sector: Sector,
    edge_cap: usize,
) -> Result<RenyiEntropy, EfdError> {
    check_edges(lat)?;
    for (what, size) in [("region edge count", region.edges.len()), ("complement edge count", region.complement.len())]
    {
        if size > edge_cap {
            return Err(EfdError::TooLarge { what, size, cap: edge_cap });
        }
    }
    let a = side_table(lat, &region.edges, &region.boundary_vertices);
    let b = side_table(lat, &region.complement, &region.boundary_vertices);
    // ρ_A is block diagonal in (c, w_A). In the trivial sector w_Ā must equal
    // w_A; in the full sector every w_Ā is summed.
    let blocks = |m: f64| -> Vec<f64> {
        a.keys
            .iter()
            .filter_map(|(&(bm, wx, wy), ha)| {
                let parts: Vec<f64> = match sector {
                    Sector::Trivial => b.keys.get(&(bm, wx, wy)).into_iter().collect::<Vec<&Vec<f64>>>(),
                    Sector::Full => {
                        [(0, 0), (0, 1), (1, 0), (1, 1)].iter().filter_map(|&(x, y)| b.keys.get(&(bm, x, y))).collect()
                    }
                }
                .into_iter()
                .map(|hb| log_weighted(hb, 4.0 * m))
                .collect();
                (!parts.is_empty()).then(|| log_weighted(ha, 4.0 * m) + log_sum_exp(&parts))
            })
            .collect()
    };
    let log_gamma = |m: f64| -> Result<f64, EfdError> {
        let terms = blocks(m);
        let log_omega = log_sum_exp(&terms);
        if lat.size() <= DEFAULT_L_CAP {
            let direct = log_partition(lat, m, sector, DEFAULT_L_CAP)?;
            if (direct - log_omega).abs() > 1e-9 * direct.abs().max(1.0) {
                return Err(EfdError::RefinementMismatch { direct, refined: log_omega });
            }
        }
        let squares: Vec<f64> = terms.iter().map(|t| 2.0 * t).collect();
        Ok(log_sum_exp(&squares) - 2.0 * log_omega)
    };
    let s = -log_gamma(0.0)? - log_gamma(mu)?;
    Ok(RenyiEntropy::from_nats(s))
}

/// `ln Ω(μ)` assembled as `Σ_c Ω_A Ω_Ā`, for the refinement identity check.
pub fn refined_log_partition(
    lat: &TorusLattice,
    mu: f64,
    region: &EdgeRegion,
    sector: Sector,
) -> Result<f64, EfdError> {
    check_edges(lat)?;
    let a = side_table(lat, &region.edges, &region.boundary_vertices);
    let b = side_table(lat, &region.complement, &region.boundary_vertices);
    let mut terms = Vec::new();
    for ((bm, wx, wy), ha) in &a.keys {
        for ((bm2, vx, vy), hb) in &b.keys {
            let same_winding = (wx ^ vx, wy ^ vy) == (0, 0);
            if bm == bm2 && (sector == Sector::Full || same_winding) {
                terms.push(log_weighted(ha, 4.0 * mu) + log_weighted(hb, 4.0 * mu));
            }
        }
    }
    Ok(log_sum_exp(&terms))
}

/// `ln Ω(μ)` from direct cycle-space enumeration.
pub fn log_partition(lat: &TorusLattice, mu: f64, sector: Sector, l_cap: usize) -> Result<f64, EfdError> {
    check_l(lat, l_cap)?;
    let basis = sector_basis(lat, sector)?;
    let mut z = vec![0.0; lat.num_edges() + 1];
    for_each_span(&basis, |h| z[h.count_ones() as usize] += 1.0);
    Ok(log_weighted(&z, 4.0 * mu))
}

/// Bond signs for an Ising sector: `-1` on the bonds crossing the seams
/// selected by `(twist_x, twist_y)`. A seam is a non-contractible loop of
/// the direct lattice.
fn bond_signs(lat: &TorusLattice, twist_x: bool, twist_y: bool) -> Vec<f64> {
    let l = lat.size();
    let mut s = vec![1.0; lat.num_edges()];
    if twist_x {
        for x in 0..l {
            s[lat.edge(x, 0, 0)] = -1.0;
        }
    }
    if twist_y {
        for y in 0..l {
            s[lat.edge(0, y, 1)] *= -1.0;
        }
    }
    s
}

/// Brute-force Ising averages over all `2^{L²}` plaquette spin states at
/// coupling `J`. `observable` receives the spins (±1) and the bond signs.
fn spin_average(
    lat: &TorusLattice,
    coupling: f64,
    sector: Sector,
    observable: impl Fn(&[f64], &[f64]) -> f64,
) -> Result<f64, EfdError> {
    let np = lat.num_plaquettes();
    if np > 20 {
        return Err(EfdError::TooLarge { what: "spin count", size: np, cap: 20 });
    }
    let sectors: &[(bool, bool)] = match sector {
        Sector::Trivial => &[(false, false)],
        Sector::Full => &[(false, false), (true, false), (false, true), (true, true)],
    };
    let mut log_num_pos = Vec::new();
    let mut log_num_neg = Vec::new();
    let mut log_den = Vec::new();
    let mut spins = vec![0.0; np];
    for &(tx, ty) in sectors {
        let signs = bond_signs(lat, tx, ty);
        for state in 0u64..(1u64 << np) {
            for (p, s) in spins.iter_mut().enumerate() {
                *s = if state >> p & 1 == 1 { -1.0 } else { 1.0 };
            }
            let mut e = 0.0;
            for edge in 0..lat.num_edges() {
                let [a, b] = lat.edge_plaquettes(edge);
                e += signs[edge] * spins[a] * spins[b];
            }
            let lw = coupling * e;
            log_den.push(lw);
            let o = observable(&spins, &signs);
            if o > 0.0 {
                log_num_pos.push(lw + o.ln());
            } else if o < 0.0 {
                log_num_neg.push(lw + (-o).ln());
            }
        }
    }
    let d = log_sum_exp(&log_den);
    Ok((log_sum_exp(&log_num_pos) - d).exp() - (log_sum_exp(&log_num_neg) - d).exp())
}

/// Ising `⟨σ_a σ_b⟩` along `path` by spin enumeration.
pub fn spin_enumeration_correlator(
    lat: &TorusLattice,
    coupling: f64,
    path: &DualPath,
    sector: Sector,
) -> Result<f64, EfdError> {
    let crossed = path.crossings(lat)?;
    let (a, b) = path.endpoints();
    spin_average(lat, coupling, sector, |s, signs| crossed.iter().map(|&e| signs[e]).product::<f64>() * s[a] * s[b])
}

/// Ising `⟨Π_{l∈C} e^{−2μ σ_i σ_j}⟩` by spin enumeration.
pub fn spin_enumeration_wilson(
    lat: &TorusLattice,
    mu: f64,
    loop_edges: &[usize],
    sector: Sector,
) -> Result<f64, EfdError> {
    spin_average(lat, 2.0 * mu, sector, |s, signs| {
        loop_edges
            .iter()
            .map(|&e| {
                let [a, b] = lat.edge_plaquettes(e);
                (-2.0 * mu * signs[e] * s[a] * s[b]).exp()
            })
            .product()
    })
}

/// Exact Boltzmann probabilities of all `2^{L²}` periodic Ising states.
pub fn spin_boltzmann_weights(lat: &TorusLattice, coupling: f64) -> Result<Vec<f64>, EfdError> {
    let np = lat.num_plaquettes();
    if np > 20 {
        return Err(EfdError::TooLarge { what: "spin count", size: np, cap: 20 });
    }
    let mut logw = Vec::with_capacity(1 << np);
    for state in 0u64..(1u64 << np) {
        let spin = |p: usize| if state >> p & 1 == 1 { -1.0 } else { 1.0 };
        let e: f64 = (0..lat.num_edges())
            .map(|edge| {
                let [a, b] = lat.edge_plaquettes(edge);
                spin(a) * spin(b)
            })
            .sum();
        logw.push(coupling * e);
    }
    let z = log_sum_exp(&logw);
    Ok(logw.iter().map(|w| (w - z).exp()).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::LN_2;

    #[test]
    fn tension_examples() {
        assert_eq!(p_to_mu(0.0).unwrap(), 0.0);
        assert!((p_to_mu(0.3).unwrap() - 0.458145).abs() < 1e-6);
        assert!((p_to_mu(0.17821).unwrap() - critical_mu()).abs() < 2e-5);
        assert!((p_to_mu(mu_to_p(critical_mu())).unwrap() - critical_mu()).abs() < 1e-12);
        assert!((critical_mu() - 0.220343).abs() < 1e-6);
        assert!(p_to_mu(0.5).unwrap().is_infinite());
        assert!(p_to_mu(-0.1).is_err() && p_to_mu(0.6).is_err());
        assert!((mu_to_p(p_to_mu(0.2).unwrap()) - 0.2).abs() < 1e-12);
        assert!((ising_equivalent(critical_mu()).coupling - 0.440687).abs() < 1e-6);
        assert_eq!(ising_equivalent(0.0).coupling, 0.0);
    }

    #[test]
    fn lattice_incidence() {
        let lat = TorusLattice::new(3).unwrap();
        for e in 0..lat.num_edges() {
            let [a, b] = lat.edge_vertices(e);
            assert!(lat.vertex_edges(a).contains(&e) && lat.vertex_edges(b).contains(&e));
            let [p, q] = lat.edge_plaquettes(e);
            assert_ne!(p, q);
            assert!(lat.plaquette_edges(p).contains(&e) && lat.plaquette_edges(q).contains(&e));
        }
        for p in 0..lat.num_plaquettes() {
            assert!(is_closed(&lat, mask(&lat.plaquette_edges(p))));
        }
    }

    #[test]
    fn cycle_space_dimension_and_dependency() {
        let lat = TorusLattice::new(3).unwrap();
        let basis = cycle_space(&lat).unwrap();
        assert_eq!(basis.len(), 10);
        assert!(basis.iter().all(|&b| is_closed(&lat, b)));
        let all = (0..9).fold(0u64, |m, p| m ^ mask(&lat.plaquette_edges(p)));
        assert_eq!(all, 0);
        let mut span = std::collections::HashSet::new();
        for_each_span(&basis, |h| {
            span.insert(h);
        });
        assert_eq!(span.len(), 1 << 10);
    }

    #[test]
    fn string_limits() {
        let lat = TorusLattice::new(3).unwrap();
        let path = DualPath::horizontal(&lat, 0, 0, 1);
        let v = exact_string_expectation(&lat, 0.0, &path, Sector::Trivial, 4).unwrap();
        assert!(v.abs() < 1e-12);
        let v = exact_string_expectation(&lat, f64::INFINITY, &path, Sector::Trivial, 4).unwrap();
        assert!((v - 1.0).abs() < 1e-12);
    }

    #[test]
    fn string_matches_spin_enumeration() {
        let lat = TorusLattice::new(3).unwrap();
        for sector in [Sector::Trivial, Sector::Full] {
            for path in [DualPath::horizontal(&lat, 0, 0, 1), DualPath { plaquettes: vec![0, 1, 4] }] {
                let loop_value = exact_string_expectation(&lat, 0.3, &path, sector, 4).unwrap();
                let spin_value = spin_enumeration_correlator(&lat, 0.6, &path, sector).unwrap();
                assert!((loop_value - spin_value).abs() < 1e-12, "{sector:?}: {loop_value} vs {spin_value}");
            }
        }
    }

    #[test]
    fn wilson_matches_spin_enumeration() {
        let lat = TorusLattice::new(4).unwrap();
        let c = rectangle_loop(&lat, 1, 1, 1, 1);
        let w = exact_wilson_loop(&lat, 0.5, &c, Sector::Trivial, 4).unwrap();
        let s = spin_enumeration_wilson(&lat, 0.5, &c, Sector::Trivial).unwrap();
        assert!((w - s).abs() < 1e-12 * s.abs());
        assert!(w >= (-2.0 * 0.5 * 4.0f64).exp() && w <= (2.0 * 0.5 * 4.0f64).exp());
        assert_eq!(exact_wilson_loop(&lat, 0.0, &c, Sector::Trivial, 4).unwrap(), 1.0);
        assert_eq!(exact_wilson_loop(&lat, 0.3, &c[..3], Sector::Trivial, 4), Err(EfdError::NotClosed));
    }

    #[test]
    fn enumeration_caps() {
        let lat = TorusLattice::new(5).unwrap();
        let path = DualPath::horizontal(&lat, 0, 0, 1);
        assert!(matches!(
            exact_string_expectation(&lat, 0.1, &path, Sector::Trivial, DEFAULT_L_CAP),
            Err(EfdError::TooLarge { .. })
        ));
    }

    #[test]
    fn renyi_single_plaquette() {
        let lat = TorusLattice::new(3).unwrap();
        let region = EdgeRegion::vertex_rectangle(&lat, 0, 0, 2, 2);
        assert_eq!(region.edges.len(), 4);
        assert_eq!(region.perimeter(), 4);
        let s0 = exact_renyi2(&lat, 0.0, &region, Sector::Trivial, 14).unwrap();
        assert!((s0.nats - 6.0 * LN_2).abs() < 1e-10, "{s0:?}");
        let sinf = exact_renyi2(&lat, f64::INFINITY, &region, Sector::Trivial, 14).unwrap();
        assert!((sinf.nats - 3.0 * LN_2).abs() < 1e-10, "{sinf:?}");
    }

    #[test]
    fn partition_refinement() {
        let lat = TorusLattice::new(3).unwrap();
        let region = EdgeRegion::vertex_rectangle(&lat, 0, 0, 2, 3);
        for sector in [Sector::Trivial, Sector::Full] {
            for mu in [0.0, 0.17, 0.6] {
                let direct = log_partition(&lat, mu, sector, 4).unwrap();
                let refined = refined_log_partition(&lat, mu, &region, sector).unwrap();
                assert!((direct - refined).abs() < 1e-10, "{sector:?} {mu}");
            }
        }
    }

    #[test]
    fn x_and_z_models_are_dual() {
        let lat = TorusLattice::new(3).unwrap();
        let images: std::collections::BTreeSet<usize> = (0..lat.num_edges()).map(|e| lat.dual_edge(e)).collect();
        assert_eq!(images.len(), lat.num_edges());
        let v = lat.vertex(1, 1);
        let star: Vec<usize> = lat.vertex_edges(v).to_vec();
        let image: Vec<usize> = star.iter().map(|&e| lat.dual_edge(e)).collect();
        assert_eq!(edge_set(&image), edge_set(&lat.plaquette_edges(lat.vertex(0, 0))));
        let z = ErrorModel::new(ErrorBasis::Z, 0.2).unwrap();
        let x = ErrorModel::new(ErrorBasis::X, 0.2).unwrap();
        let from_z = exact_wilson_loop(&lat, z.mu, &image, Sector::Trivial, 4).unwrap();
        let from_x = exact_wilson_loop(&lat, x.mu, &rectangle_loop(&lat, 0, 0, 1, 1), Sector::Trivial, 4).unwrap();
        assert!((from_z - from_x).abs() < 1e-12);
    }

    #[test]
    fn full_sector_renyi_matches_at_limits() {
        let lat = TorusLattice::new(3).unwrap();
        let region = EdgeRegion::vertex_rectangle(&lat, 0, 0, 2, 2);
        let s0 = exact_renyi2(&lat, 0.0, &region, Sector::Full, 14).unwrap();
        assert!((s0.log2_units - 6.0).abs() < 1e-10);
        let s1 = exact_renyi2(&lat, f64::INFINITY, &region, Sector::Full, 14).unwrap();
        assert!((s1.log2_units - 3.0).abs() < 1e-10);
    }
}
