pub mod classify;
pub mod oracle;
pub mod stab;
pub mod tee;
pub mod threshold;

use clap::ValueEnum;
use efd_core::efdloop::{ErrorBasis, Sector};
use efd_core::isingmc::Algorithm;
use serde::Serialize;

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum AlgorithmArg {
    Cluster,
    SingleFlip,
}

impl From<AlgorithmArg> for Algorithm {
    fn from(a: AlgorithmArg) -> Self {
        match a {
            AlgorithmArg::Cluster => Algorithm::Cluster,
            AlgorithmArg::SingleFlip => Algorithm::SingleFlip,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum SectorArg {
    Trivial,
    Full,
}

impl From<SectorArg> for Sector {
    fn from(s: SectorArg) -> Self {
        match s {
            SectorArg::Trivial => Sector::Trivial,
            SectorArg::Full => Sector::Full,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum BasisArg {
    X,
    Z,
}

impl From<BasisArg> for ErrorBasis {
    fn from(b: BasisArg) -> Self {
        match b {
            BasisArg::X => ErrorBasis::X,
            BasisArg::Z => ErrorBasis::Z,
        }
    }
}

/// Serialized name of a unit enum value.
pub fn tag<T: Serialize>(v: &T) -> String {
    serde_json::to_value(v).ok().and_then(|v| v.as_str().map(str::to_string)).unwrap_or_default()
}

/// Axis-aligned rectangle `x,y,w,h` in lattice units.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct Rect {
    pub x: usize,
    pub y: usize,
    pub w: usize,
    pub h: usize,
}

impl std::fmt::Display for Rect {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{},{},{},{}", self.x, self.y, self.w, self.h)
    }
}

pub fn parse_rect(s: &str) -> Result<Rect, String> {
    let parts: Vec<usize> =
        s.split(',').map(|t| t.trim().parse::<usize>().map_err(|e| format!("`{t}`: {e}"))).collect::<Result<_, _>>()?;
    match parts[..] {
        [x, y, w, h] if w > 0 && h > 0 => Ok(Rect { x, y, w, h }),
        [_, _, _, _] => Err("width and height must be positive".into()),
        _ => Err(format!("expected x,y,w,h, got `{s}`")),
    }
}

pub fn parse_point(s: &str) -> Result<(usize, usize), String> {
    let parts: Vec<usize> =
        s.split(',').map(|t| t.trim().parse::<usize>().map_err(|e| format!("`{t}`: {e}"))).collect::<Result<_, _>>()?;
    match parts[..] {
        [x, y] => Ok((x, y)),
        _ => Err(format!("expected x,y, got `{s}`")),
    }
}

/// Error rate in `[0, 1/2]`.
pub fn parse_p(s: &str) -> Result<f64, String> {
    let p: f64 = s.parse().map_err(|e| format!("`{s}`: {e}"))?;
    if (0.0..=0.5).contains(&p) {
        Ok(p)
    } else {
        Err(format!("error rate {p} outside [0, 0.5]"))
    }
}

/// Error rate in `(0, 1/2)`, where the Ising coupling is finite and nonzero.
pub fn parse_open_p(s: &str) -> Result<f64, String> {
    let p = parse_p(s)?;
    if p > 0.0 && p < 0.5 {
        Ok(p)
    } else {
        Err(format!("error rate {p} outside (0, 0.5)"))
    }
}
