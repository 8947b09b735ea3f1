//! GF(2) stabilizer groups for the errorfield double of the toric code at
//! `p = 0` and `p = 1/2`, and their region entanglement entropies.
//!
//! Qubit `c·2L² + e` is edge `e` of copy `c` (0 = ket, 1 = bra). A Pauli is
//! stored as packed X bits followed by packed Z bits.

use crate::efdloop::{EdgeRegion, ErrorBasis, TorusLattice};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum StabilizerError {
    #[error("{count} independent generators, {qubits} needed for a pure state")]
    NotMaximal { count: usize, qubits: usize },
    #[error("generators {0} and {1} anticommute")]
    Anticommuting(usize, usize),
    #[error("qubit {0} out of range")]
    QubitOutOfRange(usize),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Limit {
    /// Error-free: two decoupled toric codes.
    P0,
    /// Maximal error rate `p = 1/2`.
    PHalf,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Pauli {
    words: Vec<u64>,
}

impl Pauli {
    fn identity(qubits: usize) -> Self {
        Pauli { words: vec![0; 2 * qubits.div_ceil(64)] }
    }

    fn half(&self) -> usize {
        self.words.len() / 2
    }

    fn flip(&mut self, qubit: usize, z: bool) {
        let w = qubit / 64 + if z { self.half() } else { 0 };
        self.words[w] ^= 1 << (qubit % 64);
    }

    pub fn x_on(qubits: usize, support: &[usize]) -> Self {
        let mut p = Self::identity(qubits);
        support.iter().for_each(|&q| p.flip(q, false));
        p
    }

    pub fn z_on(qubits: usize, support: &[usize]) -> Self {
        let mut p = Self::identity(qubits);
        support.iter().for_each(|&q| p.flip(q, true));
        p
    }

    pub fn has_x(&self, q: usize) -> bool {
        self.words[q / 64] >> (q % 64) & 1 == 1
    }

    pub fn has_z(&self, q: usize) -> bool {
        self.words[self.half() + q / 64] >> (q % 64) & 1 == 1
    }

    pub fn commutes(&self, other: &Pauli) -> bool {
        let h = self.half();
        let mut parity = 0u32;
        for i in 0..h {
            parity ^= (self.words[i] & other.words[h + i]).count_ones();
            parity ^= (self.words[h + i] & other.words[i]).count_ones();
        }
        parity.is_multiple_of(2)
    }

    fn xor_assign(&mut self, other: &Pauli) {
        for (a, b) in self.words.iter_mut().zip(&other.words) {
            *a ^= b;
        }
    }

    fn is_identity(&self) -> bool {
        self.words.iter().all(|&w| w == 0)
    }
}

/// Rank over GF(2) of packed bit rows, by Gaussian elimination.
pub fn gf2_rank(mut rows: Vec<Vec<u64>>) -> usize {
    let width = rows.first().map_or(0, |r| r.len() * 64);
    let mut rank = 0;
    for col in 0..width {
        let (w, b) = (col / 64, col % 64);
        let Some(pivot) = (rank..rows.len()).find(|&r| rows[r][w] >> b & 1 == 1) else { continue };
        rows.swap(rank, pivot);
        let pivot_row = rows[rank].clone();
        for r in rows.iter_mut().skip(rank + 1) {
            if r[w] >> b & 1 == 1 {
                for (a, p) in r.iter_mut().zip(&pivot_row) {
                    *a ^= p;
                }
            }
        }
        rank += 1;
        if rank == rows.len() {
            break;
        }
    }
    rank
}

#[derive(Clone, Debug)]
pub struct StabilizerGroup {
    pub lattice_size: usize,
    pub qubits: usize,
    pub generators: Vec<Pauli>,
    /// Generators supplied by the physical stabilizer list before pruning.
    pub listed: usize,
    /// Logical operators added to complete the group to a pure state.
    pub logical_completion: usize,
}

impl StabilizerGroup {
    /// Keeps an independent subset of `candidates` in order.
    fn independent(qubits: usize, candidates: Vec<Pauli>) -> Vec<Pauli> {
        // Incremental elimination: reduced rows with their pivot bits.
        let mut reduced: Vec<(usize, Pauli)> = Vec::new();
        let mut kept = Vec::new();
        for p in candidates {
            let mut r = p.clone();
            for (pivot, row) in &reduced {
                if r.words[pivot / 64] >> (pivot % 64) & 1 == 1 {
                    r.xor_assign(row);
                }
            }
            if r.is_identity() {
                continue;
            }
            let pivot =
                (0..2 * qubits.div_ceil(64) * 64).find(|&b| r.words[b / 64] >> (b % 64) & 1 == 1).expect("nonzero row");
            for (_, row) in reduced.iter_mut() {
                if row.words[pivot / 64] >> (pivot % 64) & 1 == 1 {
                    row.xor_assign(&r);
                }
            }
            reduced.push((pivot, r));
            kept.push(p);
        }
        kept
    }

    pub fn count(&self) -> usize {
        self.generators.len()
    }

    pub fn check_commutation(&self) -> Result<(), StabilizerError> {
        for i in 0..self.generators.len() {
            for j in i + 1..self.generators.len() {
                if !self.generators[i].commutes(&self.generators[j]) {
                    return Err(StabilizerError::Anticommuting(i, j));
                }
            }
        }
        Ok(())
    }

    pub fn contains(&self, p: &Pauli) -> bool {
        let mut rows: Vec<Vec<u64>> = self.generators.iter().map(|g| g.words.clone()).collect();
        let before = gf2_rank(rows.clone());
        rows.push(p.words.clone());
        gf2_rank(rows) == before
    }

    /// `S_A / ln 2 = rank(G restricted to A) − |A|`.
    pub fn entanglement_entropy(&self, region_qubits: &[usize]) -> Result<usize, StabilizerError> {
        if self.count() < self.qubits {
            return Err(StabilizerError::NotMaximal { count: self.count(), qubits: self.qubits });
        }
        if let Some(&q) = region_qubits.iter().find(|&&q| q >= self.qubits) {
            return Err(StabilizerError::QubitOutOfRange(q));
        }
        let mut qs = region_qubits.to_vec();
        qs.sort_unstable();
        qs.dedup();
        if qs.is_empty() {
            return Ok(0);
        }
        let words = (2 * qs.len()).div_ceil(64);
        let rows: Vec<Vec<u64>> = self
            .generators
            .iter()
            .map(|g| {
                let mut row = vec![0u64; words];
                for (i, &q) in qs.iter().enumerate() {
                    if g.has_x(q) {
                        row[(2 * i) / 64] |= 1 << ((2 * i) % 64);
                    }
                    if g.has_z(q) {
                        row[(2 * i + 1) / 64] |= 1 << ((2 * i + 1) % 64);
                    }
                }
                row
            })
            .filter(|r| r.iter().any(|&w| w != 0))
            .collect();
        Ok(gf2_rank(rows) - qs.len())
    }

    /// Entropy of an edge region taken in both copies.
    pub fn region_entropy(&self, region: &EdgeRegion) -> Result<usize, StabilizerError> {
        self.entanglement_entropy(&doubled_qubits(self.lattice_size, &region.edges))
    }
}

/// Both copies of each edge.
pub fn doubled_qubits(l: usize, edges: &[usize]) -> Vec<usize> {
    let m = 2 * l * l;
    edges.iter().flat_map(|&e| [e, m + e]).collect()
}

/// Stabilizers of the errorfield double at `limit`, pruned to an independent
/// set and completed with logical operators to `4L²` generators.
pub fn efd_stabilizer_group(lat: &TorusLattice, limit: Limit, basis: ErrorBasis) -> StabilizerGroup {
    let l = lat.size();
    let m = lat.num_edges();
    let n = 2 * m;
    let shift = |edges: &[usize], copy: usize| -> Vec<usize> { edges.iter().map(|&e| copy * m + e).collect() };
    let stars: Vec<Vec<usize>> = (0..lat.num_vertices()).map(|v| lat.vertex_edges(v).to_vec()).collect();
    let plaqs: Vec<Vec<usize>> = (0..lat.num_plaquettes()).map(|p| lat.plaquette_edges(p).to_vec()).collect();
    // Z-type logicals along direct winding loops; in the Z basis, X-type
    // logicals along dual winding loops.
    let z_loops: Vec<Vec<usize>> =
        vec![(0..l).map(|x| lat.edge(x, 0, 0)).collect(), (0..l).map(|y| lat.edge(0, y, 1)).collect()];
    let x_loops: Vec<Vec<usize>> = vec![lat.winding_x_cut(), lat.winding_y_cut()];

    // In the Z basis the roles of X and Z, and of stars and plaquettes, swap.
    let (x_ops, z_ops, z_logicals) = match basis {
        ErrorBasis::X => (&stars, &plaqs, &z_loops),
        ErrorBasis::Z => (&plaqs, &stars, &x_loops),
    };
    let xs = |s: &[usize]| match basis {
        ErrorBasis::X => Pauli::x_on(n, s),
        ErrorBasis::Z => Pauli::z_on(n, s),
    };
    let zs = |s: &[usize]| match basis {
        ErrorBasis::X => Pauli::z_on(n, s),
        ErrorBasis::Z => Pauli::x_on(n, s),
    };

    let mut listed = Vec::new();
    match limit {
        Limit::P0 => {
            for copy in 0..2 {
                listed.extend(x_ops.iter().map(|s| xs(&shift(s, copy))));
                listed.extend(z_ops.iter().map(|s| zs(&shift(s, copy))));
            }
        }
        Limit::PHalf => {
            for copy in 0..2 {
                listed.extend(x_ops.iter().map(|s| xs(&shift(s, copy))));
            }
            listed.extend((0..m).map(|e| xs(&[e, m + e])));
            listed.extend(z_ops.iter().map(|s| {
                let mut both = shift(s, 0);
                both.extend(shift(s, 1));
                zs(&both)
            }));
        }
    }
    let listed_count = listed.len();
    let mut generators = StabilizerGroup::independent(n, listed);
    let before = generators.len();
    let mut completion = Vec::new();
    for lp in z_logicals {
        match limit {
            Limit::P0 => {
                completion.push(zs(&shift(lp, 0)));
                completion.push(zs(&shift(lp, 1)));
            }
            Limit::PHalf => {
                let mut both = shift(lp, 0);
                both.extend(shift(lp, 1));
                completion.push(zs(&both));
            }
        }
    }
    generators.extend(completion);
    let generators = StabilizerGroup::independent(n, generators);
    let added = generators.len() - before;
    StabilizerGroup { lattice_size: l, qubits: n, generators, listed: listed_count, logical_completion: added }
}

/// `S_A + S_B + S_C − S_AB − S_BC − S_AC + S_ABC`, in units of `ln 2`.
pub fn kitaev_preskill(
    group: &StabilizerGroup,
    lat: &TorusLattice,
    parts: &[EdgeRegion; 3],
) -> Result<i64, StabilizerError> {
    let [a, b, c] = parts;
    let s = |r: &EdgeRegion| group.region_entropy(r).map(|v| v as i64);
    let ab = a.union(b, lat);
    let bc = b.union(c, lat);
    let ac = a.union(c, lat);
    let abc = ab.union(c, lat);
    Ok(s(a)? + s(b)? + s(c)? - s(&ab)? - s(&bc)? - s(&ac)? + s(&abc)?)
}
