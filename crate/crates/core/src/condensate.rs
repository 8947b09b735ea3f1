//! Lagrangian-subgroup enumeration for replicated theories and the memory
//! classification of each condensate.

use crate::anyontheory::{signed_block_sum_vanishes, AllowedLattice, Anyon, KTheory, Slot, TheoryError};
use crate::exactlattice::big_vec;
use crate::models::Model;
use num_bigint::BigInt;
use serde::{Deserialize, Serialize};
use std::collections::{BTreeSet, HashSet};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum CondensateError {
    #[error("element set is not closed under fusion")]
    NotASubgroup,
    #[error("search space has {size} elements, above the cap of {cap}")]
    SearchSpaceTooLarge { size: u64, cap: u64 },
    #[error("memory classification needs a bare theory and its doubled theory")]
    ReplicaMismatch,
    #[error(transparent)]
    Theory(#[from] TheoryError),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum IncoherentConstraint {
    LatticeMembership,
    SignedBlockSum,
    Off,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SelfCondition {
    /// `θ ≡ 0 mod 2` for bosonic 𝕂, `lᵀ𝕂⁻¹l ∈ Z` for fermionic 𝕂.
    IntegerSpinAuto,
    /// `θ ≡ 0 mod 2` on the canonical representative, regardless of parity.
    Boson,
    /// Only `e^{iθ_{mm}} = 1`, i.e. `2lᵀ𝕂⁻¹l ≡ 0 mod 2`.
    Literal,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CriteriaConfig {
    pub require_mutual_trivial: bool,
    pub require_maximal: bool,
    pub require_symmetric: bool,
    pub incoherent_constraint: IncoherentConstraint,
    pub self_condition: SelfCondition,
    pub search_cap: u64,
}

impl Default for CriteriaConfig {
    fn default() -> Self {
        CriteriaConfig {
            require_mutual_trivial: true,
            require_maximal: true,
            require_symmetric: true,
            incoherent_constraint: IncoherentConstraint::LatticeMembership,
            self_condition: SelfCondition::IntegerSpinAuto,
            search_cap: 1 << 20,
        }
    }
}

impl CriteriaConfig {
    /// Criteria 1-3 only, as for coherent errors.
    pub fn coherent() -> Self {
        CriteriaConfig { incoherent_constraint: IncoherentConstraint::Off, ..Self::default() }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CriteriaReport {
    pub mutual_trivial: bool,
    pub maximal: bool,
    pub symmetric: bool,
    pub incoherent: bool,
}

impl CriteriaReport {
    pub fn passes(&self, c: &CriteriaConfig) -> bool {
        (!c.require_mutual_trivial || self.mutual_trivial)
            && (!c.require_maximal || self.maximal)
            && (!c.require_symmetric || self.symmetric)
            && (c.incoherent_constraint == IncoherentConstraint::Off || self.incoherent)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LagrangianSubgroup {
    pub generators: Vec<Anyon>,
    pub elements: Vec<Anyon>,
}

impl LagrangianSubgroup {
    pub fn order(&self) -> usize {
        self.elements.len()
    }

    /// Sorted element indices; equal subgroups have equal keys.
    pub fn key(&self, t: &KTheory) -> Vec<u64> {
        let mut k: Vec<u64> = self.elements.iter().map(|a| t.index_of(a)).collect();
        k.sort_unstable();
        k
    }

    pub fn contains(&self, a: &Anyon) -> bool {
        self.elements.binary_search(a).is_ok()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum MemoryType {
    Quantum,
    Classical,
    Trivial,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GeneratorInfo {
    pub name: String,
    pub residues: Vec<i64>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PhaseReport {
    pub model: String,
    pub n: usize,
    pub criteria: CriteriaConfig,
    pub generators: Vec<GeneratorInfo>,
    pub order: usize,
    /// Only defined for `n = 2`.
    pub memory: Option<MemoryType>,
    pub phase_label: String,
}

/// Precomputed group tables shared by the checks and the search.
struct GroupTables<'a> {
    t: &'a KTheory,
    size: usize,
    residues: Vec<Vec<i64>>,
    strides: Vec<u64>,
}

impl<'a> GroupTables<'a> {
    fn new(t: &'a KTheory) -> Self {
        let size = t.order() as usize;
        let residues = (0..size as u64).map(|i| t.from_index(i).residues().to_vec()).collect();
        let mut strides = Vec::with_capacity(t.moduli().len());
        let mut s = 1u64;
        for &d in t.moduli() {
            strides.push(s);
            s *= d as u64;
        }
        GroupTables { t, size, residues, strides }
    }

    fn add(&self, a: usize, b: usize) -> usize {
        let (ra, rb) = (&self.residues[a], &self.residues[b]);
        let mut idx = 0u64;
        for (k, &d) in self.t.moduli().iter().enumerate() {
            idx += ((ra[k] + rb[k]) % d) as u64 * self.strides[k];
        }
        idx as usize
    }

    fn mutual_trivial(&self, a: usize, b: usize) -> bool {
        self.t.mutual_numerator(&self.residues[a], &self.residues[b]) == 0
    }

    fn self_ok(&self, a: usize, cond: SelfCondition) -> bool {
        let den = self.t.denominator();
        let q = self.t.self_numerator(&self.residues[a]);
        match cond {
            SelfCondition::IntegerSpinAuto if !self.t.is_bosonic() => q % den == 0,
            SelfCondition::IntegerSpinAuto | SelfCondition::Boson => q == 0,
            SelfCondition::Literal => self.mutual_trivial(a, a),
        }
    }

    /// Subgroup generated by `gens`, as sorted indices.
    fn span(&self, gens: &[usize]) -> Vec<usize> {
        let mut bits = vec![false; self.size];
        let mut elems = vec![0usize];
        bits[0] = true;
        for &g in gens {
            self.extend(&mut elems, &mut bits, g);
        }
        elems.sort_unstable();
        elems
    }

    /// Adds the cosets of `x` to the subgroup `(elems, bits)`.
    fn extend(&self, elems: &mut Vec<usize>, bits: &mut [bool], x: usize) {
        let base = elems.clone();
        let mut cur = x;
        while !bits[cur] {
            for &h in &base {
                let y = self.add(h, cur);
                bits[y] = true;
                elems.push(y);
            }
            cur = self.add(cur, x);
        }
    }

    /// Greedy basis: scan elements in index order, keep those outside the span
    /// of the ones already kept.
    fn canonical_basis(&self, elems: &[usize]) -> Vec<usize> {
        let mut sorted = elems.to_vec();
        sorted.sort_unstable();
        let mut bits = vec![false; self.size];
        bits[0] = true;
        let mut span = vec![0usize];
        let mut basis = Vec::new();
        for &x in &sorted {
            if !bits[x] {
                basis.push(x);
                self.extend(&mut span, &mut bits, x);
            }
        }
        basis
    }

    fn apply(&self, images: &[Vec<i64>], a: usize) -> usize {
        let r = &self.residues[a];
        let moduli = self.t.moduli();
        let mut out = vec![0i64; moduli.len()];
        for (i, &c) in r.iter().enumerate() {
            if c != 0 {
                for (k, o) in out.iter_mut().enumerate() {
                    *o = (*o + c * images[i][k]) % moduli[k];
                }
            }
        }
        out.iter().zip(&self.strides).map(|(&x, &s)| x as u64 * s).sum::<u64>() as usize
    }

    fn anyon(&self, i: usize) -> Anyon {
        self.t.from_index(i as u64)
    }
}

struct Checker<'a> {
    g: GroupTables<'a>,
    lattice: Option<AllowedLattice>,
    symmetry_images: Vec<Vec<Vec<i64>>>,
}

impl<'a> Checker<'a> {
    fn new(t: &'a KTheory) -> Self {
        let lattice = (t.replicas() >= 2).then(|| t.allowed_lattice());
        let symmetry_images = t.symmetry_generators().iter().map(|g| t.symmetry_images(g)).collect();
        Checker { g: GroupTables::new(t), lattice, symmetry_images }
    }

    fn incoherent_ok(&self, a: usize, c: IncoherentConstraint) -> bool {
        let t = self.g.t;
        match c {
            IncoherentConstraint::Off => true,
            IncoherentConstraint::LatticeMembership => match &self.lattice {
                Some(l) => l.contains(t, &self.g.anyon(a)),
                None => a == 0,
            },
            IncoherentConstraint::SignedBlockSum => signed_block_sum_vanishes(t, &self.g.anyon(a)),
        }
    }

    fn report(&self, elems: &[usize], c: &CriteriaConfig) -> CriteriaReport {
        let g = &self.g;
        let gens = g.canonical_basis(elems);
        let mutual_trivial = elems.iter().all(|&a| g.self_ok(a, c.self_condition))
            && elems.iter().all(|&a| elems.iter().all(|&b| g.mutual_trivial(a, b)));
        let mut inside = vec![false; g.size];
        for &a in elems {
            inside[a] = true;
        }
        let maximal = (0..g.size).all(|x| inside[x] || gens.iter().any(|&s| !g.mutual_trivial(s, x)));
        let symmetric = self.symmetry_images.iter().all(|img| gens.iter().all(|&s| inside[g.apply(img, s)]));
        let constraint = match c.incoherent_constraint {
            IncoherentConstraint::Off => IncoherentConstraint::LatticeMembership,
            other => other,
        };
        let incoherent = elems.iter().all(|&a| self.incoherent_ok(a, constraint));
        CriteriaReport { mutual_trivial, maximal, symmetric, incoherent }
    }
}

/// Evaluates all four criteria on an element set. The criterion-4 flag uses
/// lattice membership when the configured constraint is off.
pub fn check_subgroup(t: &KTheory, s: &[Anyon], c: &CriteriaConfig) -> Result<CriteriaReport, CondensateError> {
    let checker = Checker::new(t);
    let g = &checker.g;
    let idx: BTreeSet<usize> = s.iter().map(|a| t.index_of(a) as usize).collect();
    if !idx.contains(&0) || idx.iter().any(|&a| idx.iter().any(|&b| !idx.contains(&g.add(a, b)))) {
        return Err(CondensateError::NotASubgroup);
    }
    let elems: Vec<usize> = idx.into_iter().collect();
    Ok(checker.report(&elems, c))
}

/// Subgroup generated by the given anyons.
pub fn subgroup_closure(t: &KTheory, gens: &[Anyon]) -> LagrangianSubgroup {
    let g = GroupTables::new(t);
    let gi: Vec<usize> = gens.iter().map(|a| t.index_of(a) as usize).collect();
    to_subgroup(&g, &g.span(&gi))
}

fn to_subgroup(g: &GroupTables, elems: &[usize]) -> LagrangianSubgroup {
    let mut elements: Vec<Anyon> = elems.iter().map(|&i| g.anyon(i)).collect();
    elements.sort();
    let generators = g.canonical_basis(elems).into_iter().map(|i| g.anyon(i)).collect();
    LagrangianSubgroup { generators, elements }
}

/// Image in D of the allowed lattice (the whole group when `n = 1`).
pub fn allowed_image(t: &KTheory) -> LagrangianSubgroup {
    let g = GroupTables::new(t);
    if t.replicas() < 2 {
        return to_subgroup(&g, &(0..g.size).collect::<Vec<_>>());
    }
    let gens: Vec<usize> =
        t.allowed_lattice().image_generators(t).iter().map(|r| t.index_of(&t.from_residues(r)) as usize).collect();
    to_subgroup(&g, &g.span(&gens))
}

/// All subgroups passing `c`, deduplicated and sorted by element key.
pub fn enumerate_subgroups(t: &KTheory, c: &CriteriaConfig) -> Result<Vec<LagrangianSubgroup>, CondensateError> {
    let checker = Checker::new(t);
    let g = &checker.g;
    let space: Vec<usize> = match c.incoherent_constraint {
        IncoherentConstraint::LatticeMembership => {
            allowed_image(t).elements.iter().map(|a| t.index_of(a) as usize).collect()
        }
        _ => (0..g.size).collect(),
    };
    let size = space.len() as u64;
    if size > c.search_cap {
        return Err(CondensateError::SearchSpaceTooLarge { size, cap: c.search_cap });
    }
    let candidates: Vec<usize> = space
        .iter()
        .copied()
        .filter(|&a| a != 0)
        .filter(|&a| !c.require_mutual_trivial || g.self_ok(a, c.self_condition))
        .filter(|&a| match c.incoherent_constraint {
            IncoherentConstraint::SignedBlockSum => checker.incoherent_ok(a, c.incoherent_constraint),
            _ => true,
        })
        .collect();
    let mut visited: HashSet<Vec<usize>> = HashSet::new();
    let mut found: Vec<Vec<usize>> = Vec::new();
    let mut stack: Vec<(Vec<usize>, Vec<usize>)> = vec![(vec![0], candidates)];
    visited.insert(vec![0]);
    while let Some((elems, cands)) = stack.pop() {
        let lagrangian_size = elems.len() * elems.len() == g.size;
        let skip = c.require_maximal && c.require_mutual_trivial && !lagrangian_size;
        if !skip && checker.report(&elems, c).passes(c) {
            found.push(elems.clone());
        }
        let mut bits = vec![false; g.size];
        for &e in &elems {
            bits[e] = true;
        }
        for (k, &x) in cands.iter().enumerate() {
            let mut next = elems.clone();
            let mut nb = bits.clone();
            g.extend(&mut next, &mut nb, x);
            next.sort_unstable();
            if visited.contains(&next) {
                continue;
            }
            if c.require_mutual_trivial && !next.iter().all(|&a| g.self_ok(a, c.self_condition)) {
                continue;
            }
            if visited.len() as u64 >= c.search_cap {
                return Err(CondensateError::SearchSpaceTooLarge { size: visited.len() as u64, cap: c.search_cap });
            }
            visited.insert(next.clone());
            let rest: Vec<usize> = cands[k + 1..]
                .iter()
                .chain(cands[..k].iter())
                .copied()
                .filter(|&y| !nb[y] && (!c.require_mutual_trivial || g.mutual_trivial(x, y)))
                .collect();
            stack.push((next, rest));
        }
    }
    found.sort();
    Ok(found.iter().map(|e| to_subgroup(g, e)).collect())
}

/// Memory left by condensate `s` of the doubled theory `doubled` built on `single`.
///
/// Anyons `α` whose channel pair `(α in φ₁, −α in φ̄₁)` lies in `s` are lost;
/// the remaining classes are Quantum when some choice of representatives has
/// a nontrivial loop commutation phase, Classical otherwise.
pub fn memory_type(single: &KTheory, doubled: &KTheory, s: &LagrangianSubgroup) -> Result<MemoryType, CondensateError> {
    if single.replicas() != 1 || doubled.replicas() != 2 || single.single_k() != doubled.single_k() {
        return Err(CondensateError::ReplicaMismatch);
    }
    let m = single.rank();
    let count = single.order();
    let anyons: Vec<Anyon> = (0..count).map(|i| single.from_index(i)).collect();
    let lost: Vec<bool> = anyons
        .iter()
        .map(|a| {
            let l = single.lift(a);
            let mut v = vec![BigInt::from(0); doubled.dim()];
            for i in 0..m {
                v[i] = l[i].clone();
                v[m + i] = -l[i].clone();
            }
            s.contains(&doubled.from_residues(&doubled.project(&v)))
        })
        .collect();
    // Coset classes of the lost subgroup.
    let mut class_of = vec![usize::MAX; count as usize];
    let mut classes: Vec<Vec<usize>> = Vec::new();
    for i in 0..count as usize {
        if class_of[i] != usize::MAX {
            continue;
        }
        let members: BTreeSet<usize> = (0..count as usize)
            .filter(|&j| lost[j])
            .map(|j| single.index_of(&single.fuse(&anyons[i], &anyons[j])) as usize)
            .collect();
        let members: Vec<usize> = members.into_iter().collect();
        for &x in &members {
            class_of[x] = classes.len();
        }
        classes.push(members);
    }
    let survivors: Vec<&Vec<usize>> = classes.iter().filter(|c| !c.contains(&0)).collect();
    if survivors.is_empty() {
        return Ok(MemoryType::Trivial);
    }
    let nontrivial = |a: usize, b: usize| single.mutual_numerator(anyons[a].residues(), anyons[b].residues()) != 0;
    let mut choice = vec![0usize; survivors.len()];
    loop {
        let reps: Vec<usize> = choice.iter().zip(&survivors).map(|(&k, c)| c[k]).collect();
        let phases_nontrivial = reps.iter().enumerate().any(|(i, &a)| reps[i..].iter().any(|&b| nontrivial(a, b)));
        if phases_nontrivial {
            return Ok(MemoryType::Quantum);
        }
        let mut k = 0;
        loop {
            if k == choice.len() {
                return Ok(MemoryType::Classical);
            }
            choice[k] += 1;
            if choice[k] < survivors[k].len() {
                break;
            }
            choice[k] = 0;
            k += 1;
        }
    }
}

/// Reference subgroups of `model` at `n = 2`, with their labels.
pub fn reference_subgroups(model: &Model, t: &KTheory) -> Result<Vec<(String, LagrangianSubgroup)>, CondensateError> {
    model
        .reference
        .iter()
        .map(|p| {
            let gens = p.generators.iter().map(|parts| t.named(parts)).collect::<Result<Vec<_>, _>>()?;
            Ok((p.label.to_string(), subgroup_closure(t, &gens)))
        })
        .collect()
}

/// Builds the reports for an enumeration result, labeling subgroups that
/// equal a reference phase and ordering labeled phases first.
pub fn render_report(
    model: Option<&Model>,
    model_name: &str,
    t: &KTheory,
    criteria: &CriteriaConfig,
    results: &[LagrangianSubgroup],
) -> Result<Vec<PhaseReport>, CondensateError> {
    let references = match model {
        Some(m) if t.replicas() == 2 => reference_subgroups(m, t)?,
        _ => Vec::new(),
    };
    let single = if t.replicas() == 2 { Some(KTheory::new(t.single_k(), 1)?) } else { None };
    let mut reports = Vec::new();
    for s in results {
        let label = references.iter().position(|(_, r)| r.elements == s.elements).map(|i| (i, references[i].0.clone()));
        let memory = match &single {
            Some(one) => Some(memory_type(one, t, s)?),
            None => None,
        };
        let generators =
            s.generators.iter().map(|a| GeneratorInfo { name: t.render(a), residues: a.residues().to_vec() }).collect();
        let rank = label.as_ref().map_or(usize::MAX, |(i, _)| *i);
        reports.push((
            rank,
            s.key(t),
            PhaseReport {
                model: model_name.to_string(),
                n: t.replicas(),
                criteria: *criteria,
                generators,
                order: s.order(),
                memory,
                phase_label: label.map_or_else(|| "new".to_string(), |(_, l)| l),
            },
        ));
    }
    reports.sort_by(|a, b| (a.0, &a.1).cmp(&(b.0, &b.1)));
    Ok(reports.into_iter().map(|r| r.2).collect())
}

/// The subgroups a coherent channel can add, for each model with such data:
/// `⟨α_s, ᾱ_s⟩` style generators at `s = L, R`.
pub fn toric_coherent_subgroups(t: &KTheory) -> Result<Vec<LagrangianSubgroup>, CondensateError> {
    use Slot::{LBar, RBar, L, R};
    let sets: [[&[(&str, Slot)]; 4]; 3] = [
        [&[("e", L)], &[("e", LBar)], &[("e", R)], &[("e", RBar)]],
        [&[("m", L)], &[("m", LBar)], &[("m", R)], &[("m", RBar)]],
        [&[("e", L), ("m", LBar)], &[("m", L), ("e", LBar)], &[("e", R), ("m", RBar)], &[("m", R), ("e", RBar)]],
    ];
    sets.iter()
        .map(|gens| {
            let anyons = gens.iter().map(|p| t.named(p)).collect::<Result<Vec<_>, _>>()?;
            Ok(subgroup_closure(t, &anyons))
        })
        .collect()
}

/// Residues of the `e ↔ m` exchange applied blockwise in the toric code.
pub fn toric_em_swap(t: &KTheory, a: &Anyon) -> Anyon {
    let l = t.lift(a);
    let mut swapped = l.clone();
    for b in 0..t.blocks() {
        swapped[2 * b] = l[2 * b + 1].clone();
        swapped[2 * b + 1] = l[2 * b].clone();
    }
    let r = t.project(&swapped);
    t.from_residues(&r)
}

/// Convenience for tests and callers holding raw vectors.
pub fn anyon_from_i64(t: &KTheory, v: &[i64]) -> Anyon {
    t.from_vector(&big_vec(v))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models;
    use Slot::{LBar, RBar, L, R};

    #[test]
    fn phase_one_passes_all() {
        let m = models::toric_code();
        let t = m.theory(2).unwrap();
        let refs = reference_subgroups(&m, &t).unwrap();
        let r = check_subgroup(&t, &refs[0].1.elements, &CriteriaConfig::default()).unwrap();
        assert!(r.mutual_trivial && r.maximal && r.symmetric && r.incoherent);
    }

    #[test]
    fn fermion_subgroup_fails_only_criterion_four() {
        let t = models::toric_code().theory(2).unwrap();
        let gens: Vec<Anyon> = [L, R, LBar, RBar].iter().map(|&s| t.named(&[("f", s)]).unwrap()).collect();
        let s = subgroup_closure(&t, &gens);
        let literal = CriteriaConfig { self_condition: SelfCondition::Literal, ..Default::default() };
        let r = check_subgroup(&t, &s.elements, &literal).unwrap();
        assert!(r.mutual_trivial && r.maximal && r.symmetric);
        assert!(!r.incoherent);
        let r = check_subgroup(&t, &s.elements, &CriteriaConfig::default()).unwrap();
        assert!(!r.mutual_trivial, "fermions fail the default self condition");
    }

    #[test]
    fn trivial_subgroup_not_maximal() {
        let t = models::toric_code().theory(2).unwrap();
        let r = check_subgroup(&t, &[t.zero()], &CriteriaConfig::default()).unwrap();
        assert!(r.mutual_trivial);
        assert!(!r.maximal);
    }

    #[test]
    fn non_subgroup_rejected() {
        let t = models::toric_code().theory(2).unwrap();
        let e = t.named(&[("e", L)]).unwrap();
        assert_eq!(
            check_subgroup(&t, &[t.zero(), e.clone(), t.named(&[("m", L)]).unwrap()], &CriteriaConfig::default()),
            Err(CondensateError::NotASubgroup)
        );
    }

    #[test]
    fn search_cap_is_enforced() {
        let t = models::toric_code().theory(2).unwrap();
        let c = CriteriaConfig { search_cap: 16, ..CriteriaConfig::coherent() };
        assert!(matches!(enumerate_subgroups(&t, &c), Err(CondensateError::SearchSpaceTooLarge { size: 256, .. })));
    }

    #[test]
    fn bare_toric_code_has_two_boundaries() {
        let t = models::toric_code().theory(1).unwrap();
        let c = CriteriaConfig { incoherent_constraint: IncoherentConstraint::Off, ..Default::default() };
        assert_eq!(enumerate_subgroups(&t, &c).unwrap().len(), 2);
        let lit = CriteriaConfig { self_condition: SelfCondition::Literal, ..c };
        assert_eq!(enumerate_subgroups(&t, &lit).unwrap().len(), 3);
    }
}
