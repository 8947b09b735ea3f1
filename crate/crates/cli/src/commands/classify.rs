use crate::error::CliError;
use crate::report::Report;
use clap::{Args, ValueEnum};
use efd_core::anyontheory::{parse_k_matrix, KTheory};
use efd_core::condensate::{
    enumerate_subgroups, render_report, toric_coherent_subgroups, CriteriaConfig, IncoherentConstraint, PhaseReport,
    SelfCondition,
};
use efd_core::models;
use serde::Serialize;
use serde_json::json;
use std::path::PathBuf;

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum IncoherentArg {
    Lattice,
    SignedSum,
    Off,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum SelfConditionArg {
    Auto,
    Boson,
    Literal,
}

#[derive(Args, Clone, Debug, Serialize)]
pub struct ClassifyArgs {
    /// Built-in model: toric, double-semion or laughlin3.
    #[arg(long, required_unless_present = "k_matrix", conflicts_with = "k_matrix")]
    pub model: Option<String>,
    /// K-matrix file: the rank on the first line, then one row per line.
    #[arg(long)]
    pub k_matrix: Option<PathBuf>,
    /// Replica count n.
    #[arg(long, short = 'n', default_value_t = 2)]
    pub replicas: usize,
    /// Drop the incoherent-error constraint, as for coherent errors.
    #[arg(long)]
    pub coherent: bool,
    /// Incoherent-error constraint; overrides --coherent when given.
    #[arg(long, value_enum)]
    pub incoherent: Option<IncoherentArg>,
    /// Condition on single condensed anyons.
    #[arg(long, value_enum, default_value_t = SelfConditionArg::Auto)]
    pub self_condition: SelfConditionArg,
    #[arg(long)]
    pub no_mutual: bool,
    #[arg(long)]
    pub no_maximal: bool,
    #[arg(long)]
    pub no_symmetric: bool,
    /// Largest search space the enumeration may visit.
    #[arg(long, default_value_t = 1 << 20)]
    pub search_cap: u64,
}

impl ClassifyArgs {
    pub fn criteria(&self) -> CriteriaConfig {
        let base = if self.coherent { CriteriaConfig::coherent() } else { CriteriaConfig::default() };
        let incoherent_constraint = match self.incoherent {
            Some(IncoherentArg::Lattice) => IncoherentConstraint::LatticeMembership,
            Some(IncoherentArg::SignedSum) => IncoherentConstraint::SignedBlockSum,
            Some(IncoherentArg::Off) => IncoherentConstraint::Off,
            None => base.incoherent_constraint,
        };
        CriteriaConfig {
            require_mutual_trivial: !self.no_mutual,
            require_maximal: !self.no_maximal,
            require_symmetric: !self.no_symmetric,
            incoherent_constraint,
            self_condition: match self.self_condition {
                SelfConditionArg::Auto => SelfCondition::IntegerSpinAuto,
                SelfConditionArg::Boson => SelfCondition::Boson,
                SelfConditionArg::Literal => SelfCondition::Literal,
            },
            search_cap: self.search_cap,
        }
    }
}

const COHERENT_LABELS: [&str; 3] = ["coherent-e", "coherent-m", "coherent-em"];

pub fn run(args: &ClassifyArgs, config: serde_json::Value) -> Result<Report, CliError> {
    let criteria = args.criteria();
    let (model, name, theory) = match (&args.model, &args.k_matrix) {
        (Some(key), _) => {
            let model = models::by_key(key).ok_or_else(|| {
                let keys: Vec<_> = models::all_models().iter().map(|m| m.key).collect();
                CliError::Input(format!("unknown model `{key}`; expected one of {}", keys.join(", ")))
            })?;
            let theory = model.theory(args.replicas)?;
            let name = model.key.to_string();
            (Some(model), name, theory)
        }
        (None, Some(path)) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| CliError::Input(format!("cannot read {}: {e}", path.display())))?;
            let k = parse_k_matrix(&text)?;
            (None, path.display().to_string(), KTheory::new(&k, args.replicas)?)
        }
        (None, None) => return Err(CliError::Input("either --model or --k-matrix is required".into())),
    };
    let found = enumerate_subgroups(&theory, &criteria)?;
    let mut reports = render_report(model.as_ref(), &name, &theory, &criteria, &found)?;

    if model.as_ref().is_some_and(|m| m.key == "toric") && theory.replicas() == 2 {
        let coherent = toric_coherent_subgroups(&theory)?;
        for r in reports.iter_mut().filter(|r| r.phase_label == "new") {
            let residues: Vec<&[i64]> = r.generators.iter().map(|g| g.residues.as_slice()).collect();
            let subgroup =
                found.iter().find(|s| s.generators.iter().map(|a| a.residues()).eq(residues.iter().copied()));
            if let Some(i) = subgroup.and_then(|s| coherent.iter().position(|c| c.elements == s.elements)) {
                r.phase_label = COHERENT_LABELS[i].to_string();
            }
        }
    }

    Ok(build_report(&name, theory.replicas(), &criteria, &reports, config))
}

fn memory_text(r: &PhaseReport) -> String {
    r.memory.map_or_else(|| "-".to_string(), |m| format!("{m:?}"))
}

fn build_report(
    name: &str,
    n: usize,
    criteria: &CriteriaConfig,
    reports: &[PhaseReport],
    config: serde_json::Value,
) -> Report {
    let subgroups: Vec<_> = reports
        .iter()
        .map(|r| {
            json!({
                "phase_label": r.phase_label,
                "order": r.order,
                "memory": r.memory,
                "generators": r.generators,
            })
        })
        .collect();
    let data = json!({
        "model": name,
        "n": n,
        "criteria": criteria,
        "count": reports.len(),
        "subgroups": subgroups,
    });
    let csv_rows = reports
        .iter()
        .map(|r| {
            let gens: Vec<&str> = r.generators.iter().map(|g| g.name.as_str()).collect();
            format!("{},{},{},{}", r.phase_label, r.order, memory_text(r), gens.join(";"))
        })
        .collect();
    let mut table = format!("model {name}, n = {n}: {} subgroups\n", reports.len());
    table.push_str(&format!("{:<12} {:>6}  {:<10} generators\n", "phase", "order", "memory"));
    for r in reports {
        let gens: Vec<&str> = r.generators.iter().map(|g| g.name.as_str()).collect();
        table.push_str(&format!("{:<12} {:>6}  {:<10} {}\n", r.phase_label, r.order, memory_text(r), gens.join(", ")));
    }
    Report {
        command: "classify",
        config,
        seed: None,
        data,
        csv_header: "phase_label,order,memory,generators".into(),
        csv_rows,
        table,
    }
}
