//! Anyon data of replicated abelian K-matrix theories.
//!
//! The replicated matrix is `[K ⊕ (−K)]^{⊕n}` over the block order
//! `[φ₁, φ̄₁, …, φ_n, φ̄_n]`; `n = 1` is the bare theory. For `n = 2` the
//! display names follow `φ̄_R = φ₁, φ_R = φ̄₁, φ_L = φ₂, φ̄_L = φ̄₂`.

use crate::exactlattice::{
    rational_inverse, smith_normal_form, solve_with_snf, IntMatrix, LatticeError, RationalMatrix, SmithDecomposition,
};
use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::{BigRational, Rational64};
use num_traits::{One, ToPrimitive, Zero};
use std::hash::{Hash, Hasher};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum TheoryError {
    #[error("K-matrix is not symmetric")]
    NonSymmetric,
    #[error("K-matrix is singular")]
    Singular,
    #[error("replica count must be at least 1")]
    InvalidReplicas,
    #[error("K-matrix parse error: {0}")]
    Parse(String),
    #[error("unknown anyon name `{0}`")]
    UnknownName(String),
    #[error("discriminant group too large for residue indexing ({0} elements)")]
    GroupTooLarge(String),
    #[error(transparent)]
    Lattice(#[from] LatticeError),
}

/// Element of the discriminant group, stored as canonical residues
/// `0 ≤ rᵢ < dᵢ`. Equality and hashing ignore the optional representative.
#[derive(Clone, Debug)]
pub struct Anyon {
    residues: Vec<i64>,
    representative: Option<Vec<BigInt>>,
}

impl Anyon {
    pub fn residues(&self) -> &[i64] {
        &self.residues
    }

    pub fn representative(&self) -> Option<&[BigInt]> {
        self.representative.as_deref()
    }

    pub fn is_trivial(&self) -> bool {
        self.residues.iter().all(|&r| r == 0)
    }
}

impl PartialEq for Anyon {
    fn eq(&self, other: &Self) -> bool {
        self.residues == other.residues
    }
}

impl Eq for Anyon {}

impl Hash for Anyon {
    fn hash<H: Hasher>(&self, state: &mut H) {
        self.residues.hash(state);
    }
}

impl PartialOrd for Anyon {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Anyon {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.residues.cmp(&other.residues)
    }
}

/// Permutation of the `2n` blocks: block `i` is sent to block `perm[i]`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SymmetryElement {
    pub name: String,
    pub perm: Vec<usize>,
    pub antiunitary: bool,
}

impl SymmetryElement {
    pub fn identity(blocks: usize) -> Self {
        SymmetryElement { name: "id".into(), perm: (0..blocks).collect(), antiunitary: false }
    }

    /// Exchange `φ_s ↔ φ̄_s` in every replica.
    pub fn conjugation(n: usize) -> Self {
        let perm = (0..2 * n).map(|b| b ^ 1).collect();
        SymmetryElement { name: "Z2^H".into(), perm, antiunitary: true }
    }

    /// Cyclic shift `φ_s → φ_{s+1}`, `φ̄_s → φ̄_{s+1}`.
    pub fn cyclic_shift(n: usize) -> Self {
        let perm = (0..2 * n).map(|b| (b + 2) % (2 * n)).collect();
        SymmetryElement { name: "Z_n".into(), perm, antiunitary: false }
    }

    /// The `n = 2` left/right exchange: `φ₁ ↔ φ̄₂`, `φ̄₁ ↔ φ₂`.
    pub fn left_right() -> Self {
        SymmetryElement { name: "Z2".into(), perm: vec![3, 2, 1, 0], antiunitary: true }
    }

    pub fn compose(&self, after: &SymmetryElement) -> SymmetryElement {
        SymmetryElement {
            name: format!("{}*{}", after.name, self.name),
            perm: self.perm.iter().map(|&b| after.perm[b]).collect(),
            antiunitary: self.antiunitary ^ after.antiunitary,
        }
    }
}

/// Display name of a single-copy anyon: `base`, then an optional bar,
/// `_`, `sub`, the replica tag and `sup`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AnyonName {
    pub key: String,
    pub base: String,
    pub sub: String,
    pub sup: String,
    pub vector: Vec<i64>,
}

impl AnyonName {
    pub fn new(key: &str, base: &str, sub: &str, sup: &str, vector: &[i64]) -> Self {
        AnyonName { key: key.into(), base: base.into(), sub: sub.into(), sup: sup.into(), vector: vector.to_vec() }
    }
}

/// Position of a block in the display layer.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Slot {
    L,
    LBar,
    R,
    RBar,
    Phi(usize),
    PhiBar(usize),
}

impl Slot {
    pub fn block(self) -> usize {
        match self {
            Slot::RBar => 0,
            Slot::R => 1,
            Slot::L => 2,
            Slot::LBar => 3,
            Slot::Phi(s) => 2 * s,
            Slot::PhiBar(s) => 2 * s + 1,
        }
    }
}

/// Small dense integer matrix acting on residue vectors.
#[derive(Clone, Debug)]
struct ResidueMap {
    /// `images[i]` is the image of the i-th residue generator.
    images: Vec<Vec<i64>>,
}

#[derive(Clone, Debug)]
pub struct KTheory {
    single: IntMatrix,
    rank: usize,
    replicas: usize,
    full: IntMatrix,
    inverse: RationalMatrix,
    bosonic: bool,
    snf: SmithDecomposition,
    /// Indices into the SNF diagonal with `dᵢ > 1`.
    active: Vec<usize>,
    moduli: Vec<i64>,
    /// Columns of `U⁻¹` for the active coordinates.
    lifts: Vec<Vec<BigInt>>,
    /// `den · gᵢᵀ 𝕂⁻¹ gⱼ` for lift columns `gᵢ`.
    form: Vec<Vec<i64>>,
    den: i64,
    single_names: Vec<(AnyonName, Vec<i64>)>,
    single_moduli: Vec<i64>,
    single_proj: Vec<Vec<BigInt>>,
}

pub fn build_theory(k: &IntMatrix, n: usize) -> Result<KTheory, TheoryError> {
    KTheory::new(k, n)
}

/// Reads a K-matrix: first line the rank `M`, then `M` rows of `M` integers.
pub fn parse_k_matrix(text: &str) -> Result<IntMatrix, TheoryError> {
    let mut lines = text.lines().map(str::trim).filter(|l| !l.is_empty() && !l.starts_with('#'));
    let m: usize = lines
        .next()
        .ok_or_else(|| TheoryError::Parse("empty input".into()))?
        .parse()
        .map_err(|e| TheoryError::Parse(format!("rank: {e}")))?;
    if m == 0 {
        return Err(TheoryError::Parse("rank must be positive".into()));
    }
    let mut rows = Vec::with_capacity(m);
    for i in 0..m {
        let line = lines.next().ok_or_else(|| TheoryError::Parse(format!("missing row {}", i + 1)))?;
        let row: Vec<i64> = line
            .split_whitespace()
            .map(|t| t.parse::<i64>().map_err(|e| TheoryError::Parse(format!("row {}: {e}", i + 1))))
            .collect::<Result<_, _>>()?;
        if row.len() != m {
            return Err(TheoryError::Parse(format!("row {} has {} entries, expected {m}", i + 1, row.len())));
        }
        rows.push(row);
    }
    if lines.next().is_some() {
        return Err(TheoryError::Parse("trailing data after matrix".into()));
    }
    Ok(IntMatrix::from_rows(&rows))
}

fn to_i64(x: &BigInt) -> Result<i64, TheoryError> {
    x.to_i64().ok_or_else(|| TheoryError::GroupTooLarge(x.to_string()))
}

fn modulo(x: &BigInt, m: i64) -> i64 {
    x.mod_floor(&BigInt::from(m)).to_i64().expect("residue fits")
}

impl KTheory {
    pub fn new(k: &IntMatrix, n: usize) -> Result<Self, TheoryError> {
        if n == 0 {
            return Err(TheoryError::InvalidReplicas);
        }
        if !k.is_symmetric() {
            return Err(TheoryError::NonSymmetric);
        }
        if k.determinant()?.is_zero() {
            return Err(TheoryError::Singular);
        }
        let rank = k.rows();
        let full = if n == 1 {
            k.clone()
        } else {
            let blocks: Vec<IntMatrix> = (0..n).flat_map(|_| [k.clone(), k.neg()]).collect();
            IntMatrix::direct_sum(&blocks)
        };
        let inverse = rational_inverse(&full)?;
        let bosonic = (0..rank).all(|i| k.get(i, i).is_even());
        let snf = smith_normal_form(&full)?;
        let diag = snf.diagonal();
        let active: Vec<usize> = (0..diag.len()).filter(|&i| !diag[i].is_one()).collect();
        let moduli = active.iter().map(|&i| to_i64(&diag[i])).collect::<Result<Vec<_>, _>>()?;
        let order = moduli.iter().try_fold(1i64, |acc, &d| acc.checked_mul(d));
        if order.is_none_or(|o| o > (1 << 40)) {
            return Err(TheoryError::GroupTooLarge(format!("{diag:?}")));
        }
        let u_inv = rational_inverse(&snf.u)?.to_integer().expect("U is unimodular");
        let lifts: Vec<Vec<BigInt>> = active.iter().map(|&i| u_inv.column(i)).collect();
        let mut den = BigInt::one();
        let mut raw = vec![vec![BigRational::zero(); lifts.len()]; lifts.len()];
        for i in 0..lifts.len() {
            for j in 0..lifts.len() {
                raw[i][j] = inverse.bilinear(&lifts[i], &lifts[j]);
                den = den.lcm(raw[i][j].denom());
            }
        }
        let den_q = BigRational::from_integer(den.clone());
        let form = raw
            .iter()
            .map(|row| row.iter().map(|x| to_i64(&(x * &den_q).to_integer())).collect())
            .collect::<Result<Vec<Vec<i64>>, _>>()?;
        let single_snf = smith_normal_form(k)?;
        let sd = single_snf.diagonal();
        let s_active: Vec<usize> = (0..sd.len()).filter(|&i| !sd[i].is_one()).collect();
        let single_moduli = s_active.iter().map(|&i| to_i64(&sd[i])).collect::<Result<_, _>>()?;
        let single_proj =
            s_active.iter().map(|&i| (0..rank).map(|j| single_snf.u.get(i, j).clone()).collect()).collect();
        Ok(KTheory {
            single: k.clone(),
            rank,
            replicas: n,
            full,
            inverse,
            bosonic,
            snf,
            active,
            moduli,
            lifts,
            form,
            den: to_i64(&den)?,
            single_names: Vec::new(),
            single_moduli,
            single_proj,
        })
    }

    /// Attaches a display-name table for single-copy anyons.
    pub fn with_names(mut self, names: &[AnyonName]) -> Self {
        self.single_names = names
            .iter()
            .map(|n| {
                let r = self.single_residues(&crate::exactlattice::big_vec(&n.vector));
                (n.clone(), r)
            })
            .collect();
        self
    }

    pub fn single_k(&self) -> &IntMatrix {
        &self.single
    }

    pub fn full_k(&self) -> &IntMatrix {
        &self.full
    }

    pub fn inverse(&self) -> &RationalMatrix {
        &self.inverse
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn replicas(&self) -> usize {
        self.replicas
    }

    pub fn dim(&self) -> usize {
        self.full.rows()
    }

    pub fn blocks(&self) -> usize {
        if self.replicas == 1 {
            1
        } else {
            2 * self.replicas
        }
    }

    pub fn is_bosonic(&self) -> bool {
        self.bosonic
    }

    pub fn moduli(&self) -> &[i64] {
        &self.moduli
    }

    pub fn snf(&self) -> &SmithDecomposition {
        &self.snf
    }

    /// `|D|`.
    pub fn order(&self) -> u64 {
        self.moduli.iter().map(|&d| d as u64).product()
    }

    /// Common denominator of the statistics form.
    pub fn denominator(&self) -> i64 {
        self.den
    }

    pub fn zero(&self) -> Anyon {
        Anyon { residues: vec![0; self.moduli.len()], representative: None }
    }

    pub fn from_residues(&self, residues: &[i64]) -> Anyon {
        assert_eq!(residues.len(), self.moduli.len(), "residue length");
        Anyon {
            residues: residues.iter().zip(&self.moduli).map(|(&r, &d)| r.rem_euclid(d)).collect(),
            representative: None,
        }
    }

    pub fn project(&self, l: &[BigInt]) -> Vec<i64> {
        assert_eq!(l.len(), self.dim(), "vector length");
        self.active
            .iter()
            .zip(&self.moduli)
            .map(|(&i, &d)| {
                let s: BigInt = (0..l.len()).map(|j| self.snf.u.get(i, j) * &l[j]).sum();
                modulo(&s, d)
            })
            .collect()
    }

    /// Label of an integer vector, keeping the vector as representative.
    pub fn from_vector(&self, l: &[BigInt]) -> Anyon {
        Anyon { residues: self.project(l), representative: Some(l.to_vec()) }
    }

    pub fn from_vector_i64(&self, l: &[i64]) -> Anyon {
        self.from_vector(&crate::exactlattice::big_vec(l))
    }

    /// Canonical integer representative `Σ rᵢ gᵢ`.
    pub fn lift(&self, a: &Anyon) -> Vec<BigInt> {
        let mut out = vec![BigInt::zero(); self.dim()];
        for (r, g) in a.residues.iter().zip(&self.lifts) {
            if *r != 0 {
                for (o, x) in out.iter_mut().zip(g) {
                    *o += x * *r;
                }
            }
        }
        out
    }

    pub fn index_of(&self, a: &Anyon) -> u64 {
        residues_to_index(&a.residues, &self.moduli)
    }

    pub fn from_index(&self, idx: u64) -> Anyon {
        Anyon { residues: index_to_residues(idx, &self.moduli), representative: None }
    }

    pub fn fuse(&self, a: &Anyon, b: &Anyon) -> Anyon {
        let residues = a.residues.iter().zip(&b.residues).zip(&self.moduli).map(|((x, y), d)| (x + y) % d).collect();
        Anyon { residues, representative: None }
    }

    pub fn dual(&self, a: &Anyon) -> Anyon {
        let residues = a.residues.iter().zip(&self.moduli).map(|(x, d)| (d - x) % d).collect();
        Anyon { residues, representative: None }
    }

    /// `den · 2 aᵀ𝕂⁻¹b mod 2·den` on residue vectors.
    pub fn mutual_numerator(&self, a: &[i64], b: &[i64]) -> i64 {
        let m = 2 * self.den;
        let mut acc = 0i64;
        for (i, &x) in a.iter().enumerate() {
            if x == 0 {
                continue;
            }
            let row = &self.form[i];
            let mut s = 0i64;
            for (j, &y) in b.iter().enumerate() {
                s = (s + (row[j] % m) * y) % m;
            }
            acc = (acc + s * x) % m;
        }
        (2 * acc).rem_euclid(m)
    }

    /// `den · lᵀ𝕂⁻¹l` of the canonical representative, reduced mod `2·den`.
    pub fn self_numerator(&self, a: &[i64]) -> i64 {
        let m = 2 * self.den;
        let mut acc = 0i64;
        for (i, &x) in a.iter().enumerate() {
            if x == 0 {
                continue;
            }
            for (j, &y) in a.iter().enumerate() {
                acc = (acc + (self.form[i][j] % m) * x % m * y) % m;
            }
        }
        acc.rem_euclid(m)
    }

    /// `θ/π = 2 lₐᵀ𝕂⁻¹l_b mod 2`, using stored representatives when present.
    pub fn mutual_statistics(&self, a: &Anyon, b: &Anyon) -> Rational64 {
        match (&a.representative, &b.representative) {
            (None, None) => Rational64::new(self.mutual_numerator(&a.residues, &b.residues), self.den),
            _ => {
                let la = a.representative.clone().unwrap_or_else(|| self.lift(a));
                let lb = b.representative.clone().unwrap_or_else(|| self.lift(b));
                let two = BigRational::from_integer(2.into());
                reduce(&(self.inverse.bilinear(&la, &lb) * two), 2)
            }
        }
    }

    /// `θ/π = lᵀ𝕂⁻¹l`, mod 2 for bosonic 𝕂 and mod 1 for fermionic 𝕂.
    pub fn self_statistics(&self, a: &Anyon) -> Rational64 {
        let modulus = self.self_modulus();
        match &a.representative {
            None => {
                let v = Rational64::new(self.self_numerator(&a.residues), self.den);
                reduce_small(v, modulus)
            }
            Some(l) => reduce(&self.inverse.bilinear(l, l), modulus),
        }
    }

    pub fn self_modulus(&self) -> i64 {
        if self.bosonic {
            2
        } else {
            1
        }
    }

    /// Generators of the symmetry group acting on this theory.
    pub fn symmetry_generators(&self) -> Vec<SymmetryElement> {
        match self.replicas {
            1 => Vec::new(),
            2 => vec![SymmetryElement::left_right(), SymmetryElement::conjugation(2)],
            n => vec![SymmetryElement::cyclic_shift(n), SymmetryElement::conjugation(n)],
        }
    }

    /// All elements of the group generated by [`Self::symmetry_generators`].
    pub fn symmetry_group(&self) -> Vec<SymmetryElement> {
        let gens = self.symmetry_generators();
        let mut elems = vec![SymmetryElement::identity(self.blocks())];
        let mut i = 0;
        while i < elems.len() {
            for g in &gens {
                let h = elems[i].compose(g);
                if !elems.iter().any(|e| e.perm == h.perm) {
                    elems.push(h);
                }
            }
            i += 1;
        }
        elems
    }

    pub fn permute_vector(&self, g: &SymmetryElement, l: &[BigInt]) -> Vec<BigInt> {
        let m = self.rank;
        let mut out = vec![BigInt::zero(); l.len()];
        for (b, &target) in g.perm.iter().enumerate() {
            out[target * m..(target + 1) * m].clone_from_slice(&l[b * m..(b + 1) * m]);
        }
        out
    }

    pub fn apply_symmetry(&self, g: &SymmetryElement, a: &Anyon) -> Anyon {
        let l = a.representative.clone().unwrap_or_else(|| self.lift(a));
        self.from_vector(&self.permute_vector(g, &l))
    }

    /// Residue-level action table of `g` (images of the residue generators).
    pub fn symmetry_images(&self, g: &SymmetryElement) -> Vec<Vec<i64>> {
        self.residue_map(g).images
    }

    fn residue_map(&self, g: &SymmetryElement) -> ResidueMap {
        ResidueMap { images: self.lifts.iter().map(|l| self.project(&self.permute_vector(g, l))).collect() }
    }

    /// Columns of the allowed lattice: channel and coupling vectors for every
    /// replica and basis direction, followed by the columns of 𝕂.
    pub fn allowed_lattice(&self) -> AllowedLattice {
        let n = self.replicas;
        let m = self.rank;
        let dim = self.dim();
        let mut cols = Vec::new();
        if n >= 2 {
            for s in 0..n {
                for i in 0..m {
                    let mut c = vec![BigInt::zero(); dim];
                    c[2 * s * m + i] = BigInt::one();
                    c[(2 * s + 1) * m + i] = -BigInt::one();
                    cols.push(c);
                }
                for i in 0..m {
                    let mut c = vec![BigInt::zero(); dim];
                    c[2 * s * m + i] += BigInt::one();
                    c[(2 * ((s + 1) % n) + 1) * m + i] += BigInt::one();
                    cols.push(c);
                }
            }
        }
        let local = cols.len();
        for j in 0..dim {
            cols.push(self.full.column(j));
        }
        let generators = IntMatrix::from_columns(dim, &cols);
        let snf = smith_normal_form(&generators).expect("nonempty generator matrix");
        AllowedLattice { generators, local_generators: local, snf }
    }

    /// Single-copy residues of a length-`M` vector.
    pub fn single_residues(&self, v: &[BigInt]) -> Vec<i64> {
        self.single_proj
            .iter()
            .zip(&self.single_moduli)
            .map(|(row, &d)| {
                let s: BigInt = row.iter().zip(v).map(|(a, b)| a * b).sum();
                modulo(&s, d)
            })
            .collect()
    }

    pub fn single_moduli(&self) -> &[i64] {
        &self.single_moduli
    }

    /// Embeds single-copy vectors into the given blocks.
    pub fn compose_blocks(&self, parts: &[(usize, Vec<i64>)]) -> Anyon {
        let m = self.rank;
        let mut l = vec![BigInt::zero(); self.dim()];
        for (block, v) in parts {
            assert!(*block < self.blocks(), "block out of range");
            for i in 0..m {
                l[block * m + i] += BigInt::from(v[i]);
            }
        }
        let mut a = self.from_vector(&l);
        a.representative = None;
        a
    }

    /// Builds an anyon from named parts, e.g. `[("e", Slot::L), ("e", Slot::RBar)]`.
    /// Vectors placed in `−K` blocks enter with a minus sign.
    pub fn named(&self, parts: &[(&str, Slot)]) -> Result<Anyon, TheoryError> {
        let mut v = Vec::new();
        for (key, slot) in parts {
            let entry = self
                .single_names
                .iter()
                .find(|(n, _)| n.key == *key)
                .ok_or_else(|| TheoryError::UnknownName(key.to_string()))?;
            let block = slot.block();
            let sign = self.display_sign(block);
            v.push((block, entry.0.vector.iter().map(|x| sign * x).collect()));
        }
        Ok(self.compose_blocks(&v))
    }

    /// Display names in a `−K` block refer to the negated vector; every
    /// other block uses the vector as is.
    pub fn display_sign(&self, block: usize) -> i64 {
        if self.replicas >= 2 && block % 2 == 1 {
            -1
        } else {
            1
        }
    }

    fn block_tag(&self, block: usize) -> (bool, String) {
        match self.replicas {
            1 => (false, String::new()),
            2 => match block {
                0 => (true, "R".into()),
                1 => (false, "R".into()),
                2 => (false, "L".into()),
                _ => (true, "L".into()),
            },
            _ => (block % 2 == 1, (block / 2 + 1).to_string()),
        }
    }

    fn display_order(&self) -> Vec<usize> {
        match self.replicas {
            1 => vec![0],
            2 => vec![2, 3, 1, 0],
            n => (0..2 * n).collect(),
        }
    }

    /// Human-readable label; falls back to raw residues without a name table.
    pub fn render(&self, a: &Anyon) -> String {
        if a.is_trivial() {
            return "1".into();
        }
        if self.single_names.is_empty() {
            return format!("{:?}", a.residues);
        }
        let l = self.lift(a);
        let m = self.rank;
        let mut parts = Vec::new();
        for b in self.display_order() {
            let (bar, tag) = self.block_tag(b);
            let sign = self.display_sign(b);
            let part: Vec<BigInt> = l[b * m..(b + 1) * m].iter().map(|x| x * sign).collect();
            let r = self.single_residues(&part);
            if r.iter().all(|&x| x == 0) {
                continue;
            }
            let Some((name, _)) = self.single_names.iter().find(|(_, res)| *res == r) else {
                return format!("{:?}", a.residues);
            };
            let mut s = name.base.clone();
            if bar {
                s.push('\u{0304}');
            }
            if !name.sub.is_empty() || !tag.is_empty() {
                s.push('_');
                s.push_str(&name.sub);
                s.push_str(&tag);
            }
            s.push_str(&name.sup);
            parts.push(s);
        }
        parts.join(" ")
    }
}

/// Reduces an exact rational into `[0, modulus)`.
fn reduce(x: &BigRational, modulus: i64) -> Rational64 {
    let m = BigRational::from_integer(modulus.into());
    let q = (x / &m).floor();
    let r = x - q * m;
    Rational64::new(r.numer().to_i64().expect("small"), r.denom().to_i64().expect("small"))
}

fn reduce_small(x: Rational64, modulus: i64) -> Rational64 {
    let m = Rational64::from_integer(modulus);
    let q = (x / m).floor();
    x - q * m
}

pub fn residues_to_index(r: &[i64], moduli: &[i64]) -> u64 {
    let mut idx = 0u64;
    for (x, d) in r.iter().zip(moduli).rev() {
        idx = idx * (*d as u64) + (*x as u64);
    }
    idx
}

pub fn index_to_residues(mut idx: u64, moduli: &[i64]) -> Vec<i64> {
    moduli
        .iter()
        .map(|&d| {
            let r = (idx % d as u64) as i64;
            idx /= d as u64;
            r
        })
        .collect()
}

/// Integer span of the error- and interaction-generated excitations.
#[derive(Clone, Debug)]
pub struct AllowedLattice {
    pub generators: IntMatrix,
    /// Number of leading channel/coupling columns (the rest are 𝕂 columns).
    pub local_generators: usize,
    snf: SmithDecomposition,
}

impl AllowedLattice {
    pub fn contains_vector(&self, l: &[BigInt]) -> bool {
        solve_with_snf(&self.snf, l).is_some()
    }

    pub fn contains(&self, t: &KTheory, a: &Anyon) -> bool {
        let l = a.representative.clone().unwrap_or_else(|| t.lift(a));
        self.contains_vector(&l)
    }

    /// Residue images of all generators; they generate the image in D.
    pub fn image_generators(&self, t: &KTheory) -> Vec<Vec<i64>> {
        (0..self.generators.cols()).map(|j| t.project(&self.generators.column(j))).collect()
    }
}

/// `m_{φ₁}+m_{φ̄₁}−m_{φ₂}−m_{φ̄₂}`, summed per replica pair with alternating
/// sign, tested for membership in `K·Z^M`.
pub fn signed_block_sum_vanishes(t: &KTheory, a: &Anyon) -> bool {
    let l = a.representative.clone().unwrap_or_else(|| t.lift(a));
    let m = t.rank();
    let mut s = vec![BigInt::zero(); m];
    for b in 0..t.blocks() {
        let sign = if (b / 2) % 2 == 0 { 1 } else { -1 };
        for i in 0..m {
            s[i] += &l[b * m + i] * sign;
        }
    }
    t.single_residues(&s).iter().all(|&r| r == 0)
}
