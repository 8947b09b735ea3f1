//! Built-in model registry: K-matrices, anyon name tables and the reference
//! condensates used to label enumerated phases.

use crate::anyontheory::{AnyonName, KTheory, Slot, TheoryError};
use crate::exactlattice::IntMatrix;

/// A reference phase: label and generators at `n = 2`, each generator a
/// product of named single-copy anyons placed in slots.
#[derive(Clone, Debug)]
pub struct ReferencePhase {
    pub label: &'static str,
    pub generators: Vec<Vec<(&'static str, Slot)>>,
}

#[derive(Clone, Debug)]
pub struct Model {
    pub key: &'static str,
    pub display: &'static str,
    pub k: IntMatrix,
    pub names: Vec<AnyonName>,
    pub reference: Vec<ReferencePhase>,
}

impl Model {
    pub fn theory(&self, n: usize) -> Result<KTheory, TheoryError> {
        Ok(KTheory::new(&self.k, n)?.with_names(&self.names))
    }
}

use Slot::{LBar, RBar, L, R};

fn phase(label: &'static str, gens: &[&[(&'static str, Slot)]]) -> ReferencePhase {
    ReferencePhase { label, generators: gens.iter().map(|g| g.to_vec()).collect() }
}

pub fn toric_code() -> Model {
    Model {
        key: "toric",
        display: "toric code",
        k: IntMatrix::from_rows(&[vec![0, 2], vec![2, 0]]),
        names: vec![
            AnyonName::new("e", "e", "", "", &[1, 0]),
            AnyonName::new("m", "m", "", "", &[0, 1]),
            AnyonName::new("f", "f", "", "", &[1, 1]),
        ],
        reference: vec![
            phase(
                "I",
                &[
                    &[("e", L), ("e", R)],
                    &[("e", LBar), ("e", RBar)],
                    &[("m", L), ("m", R)],
                    &[("m", LBar), ("m", RBar)],
                ],
            ),
            phase(
                "II",
                &[
                    &[("e", L), ("e", LBar)],
                    &[("e", R), ("e", RBar)],
                    &[("e", L), ("e", RBar)],
                    &[("m", L), ("m", LBar), ("m", R), ("m", RBar)],
                ],
            ),
            phase(
                "III",
                &[
                    &[("m", L), ("m", LBar)],
                    &[("m", R), ("m", RBar)],
                    &[("m", L), ("m", RBar)],
                    &[("e", L), ("e", LBar), ("e", R), ("e", RBar)],
                ],
            ),
            phase(
                "IV",
                &[
                    &[("f", L), ("f", LBar)],
                    &[("f", R), ("f", RBar)],
                    &[("f", L), ("f", RBar)],
                    &[("e", L), ("e", LBar), ("e", R), ("e", RBar)],
                ],
            ),
            phase(
                "V",
                &[
                    &[("e", L), ("e", LBar)],
                    &[("e", R), ("e", RBar)],
                    &[("m", L), ("m", LBar)],
                    &[("m", R), ("m", RBar)],
                ],
            ),
        ],
    }
}

pub fn double_semion() -> Model {
    Model {
        key: "double-semion",
        display: "double semion",
        k: IntMatrix::from_rows(&[vec![2, 0], vec![0, -2]]),
        names: vec![
            AnyonName::new("m_a", "m", "a", "", &[1, 0]),
            AnyonName::new("m_b", "m", "b", "", &[0, 1]),
            AnyonName::new("b", "b", "", "", &[1, 1]),
        ],
        reference: vec![
            phase(
                "I",
                &[
                    &[("m_a", L), ("m_a", R)],
                    &[("m_a", LBar), ("m_a", RBar)],
                    &[("m_b", L), ("m_b", R)],
                    &[("m_b", LBar), ("m_b", RBar)],
                ],
            ),
            phase(
                "II",
                &[
                    &[("m_a", L), ("m_a", LBar)],
                    &[("m_a", R), ("m_a", RBar)],
                    &[("m_b", L), ("m_b", R)],
                    &[("m_b", LBar), ("m_b", RBar)],
                ],
            ),
            phase(
                "III",
                &[
                    &[("m_b", L), ("m_b", LBar)],
                    &[("m_b", R), ("m_b", RBar)],
                    &[("m_a", L), ("m_a", R)],
                    &[("m_a", LBar), ("m_a", RBar)],
                ],
            ),
            phase(
                "IV",
                &[
                    &[("b", L), ("b", LBar)],
                    &[("b", R), ("b", RBar)],
                    &[("b", L), ("b", R)],
                    &[("m_a", L), ("m_a", LBar), ("m_a", R), ("m_a", RBar)],
                ],
            ),
            phase(
                "V",
                &[
                    &[("m_a", L), ("m_a", LBar)],
                    &[("m_a", R), ("m_a", RBar)],
                    &[("m_b", L), ("m_b", LBar)],
                    &[("m_b", R), ("m_b", RBar)],
                ],
            ),
        ],
    }
}

pub fn laughlin3() -> Model {
    Model {
        key: "laughlin3",
        display: "Laughlin 1/3",
        k: IntMatrix::from_rows(&[vec![3]]),
        names: vec![AnyonName::new("eta", "η", "", "", &[1]), AnyonName::new("eta2", "η", "", "²", &[2])],
        reference: vec![
            phase("I", &[&[("eta", L), ("eta2", R)], &[("eta", LBar), ("eta2", RBar)]]),
            phase("II", &[&[("eta", L), ("eta", LBar)], &[("eta", R), ("eta", RBar)]]),
        ],
    }
}

pub fn all_models() -> Vec<Model> {
    vec![toric_code(), double_semion(), laughlin3()]
}

pub fn by_key(key: &str) -> Option<Model> {
    all_models().into_iter().find(|m| m.key == key)
}
