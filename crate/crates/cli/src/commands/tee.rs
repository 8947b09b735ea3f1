use super::{parse_p, parse_rect, AlgorithmArg, Rect};
use crate::error::CliError;
use crate::report::Report;
use clap::Args;
use efd_core::efdloop::p_to_mu;
use efd_core::isingmc::{tee_kitaev_preskill, Tripartite};
use efd_core::isingmc::{CsvRow, Estimate, McConfig, CSV_HEADER};
use serde::Serialize;
use serde_json::json;

#[derive(Args, Clone, Debug, Serialize)]
pub struct TeeArgs {
    #[arg(long, short = 'l', default_value_t = 32)]
    pub l: usize,
    #[arg(long, value_parser = parse_p)]
    pub p: f64,
    /// Disk corner and size in vertices, `x,y,w,h`; centered by default.
    #[arg(long, value_parser = parse_rect)]
    pub disk: Option<Rect>,
    /// Measurement sweeps per pinning stage.
    #[arg(long, default_value_t = 10_000)]
    pub sweeps: usize,
    #[arg(long, default_value_t = 1_000)]
    pub thermalization: usize,
    #[arg(long, default_value_t = 1)]
    pub stride: usize,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    #[arg(long, value_enum, default_value_t = AlgorithmArg::Cluster)]
    pub algorithm: AlgorithmArg,
}

impl TeeArgs {
    pub fn geometry(&self) -> Tripartite {
        match self.disk {
            Some(Rect { x, y, w, h }) => Tripartite { x, y, width: w, height: h },
            None => Tripartite::centered(self.l),
        }
    }
}

pub fn run(args: &TeeArgs, threads: usize, config: serde_json::Value) -> Result<Report, CliError> {
    let cfg = McConfig {
        seed: args.seed,
        algorithm: args.algorithm.into(),
        thermalization: args.thermalization,
        measurements: args.sweeps,
        stride: args.stride,
        threads,
        ..McConfig::default()
    };
    let geometry = args.geometry();
    let tee = tee_kitaev_preskill(args.l, args.p, geometry, &cfg)?;
    let mu = p_to_mu(args.p)?;

    let mut rows: Vec<CsvRow> = tee
        .regions
        .iter()
        .map(|r| CsvRow::new(args.l, args.p, mu, format!("S2_{}", r.name), &r.pinning.renyi2(), args.seed))
        .collect();
    rows.push(CsvRow::new(args.l, args.p, mu, "gamma_zero", &Estimate::exact(tee.gamma_zero), args.seed));
    rows.push(CsvRow::new(args.l, args.p, mu, "gamma", &tee.gamma, args.seed));

    let ln2 = std::f64::consts::LN_2;
    let table = format!(
        "L = {}, p = {}, disk {}x{} at ({}, {})\ngamma = {:.4} +- {:.4}  ({:.3} ln 2)\n",
        args.l,
        args.p,
        geometry.width,
        geometry.height,
        geometry.x,
        geometry.y,
        tee.gamma.mean,
        tee.gamma.stderr,
        tee.gamma.mean / ln2
    );
    Ok(Report {
        command: "tee",
        config,
        seed: Some(args.seed),
        data: json!({ "l": args.l, "p": args.p, "mu": mu, "geometry": geometry, "result": tee }),
        csv_header: CSV_HEADER.to_string(),
        csv_rows: rows.iter().map(CsvRow::to_line).collect(),
        table,
    })
}
