use super::{parse_open_p, AlgorithmArg};
use crate::error::CliError;
use crate::report::Report;
use clap::Args;
use efd_core::efdloop::p_to_mu;
use efd_core::isingmc::binder_scan;
use efd_core::isingmc::{CsvRow, McConfig, CSV_HEADER};
use serde::Serialize;
use serde_json::json;

#[derive(Args, Clone, Debug, Serialize)]
pub struct ThresholdArgs {
    /// Linear sizes, comma separated.
    #[arg(long, value_delimiter = ',', default_value = "16,32,64")]
    pub ls: Vec<usize>,
    #[arg(long, default_value_t = 0.15, value_parser = parse_open_p)]
    pub p_min: f64,
    #[arg(long, default_value_t = 0.20, value_parser = parse_open_p)]
    pub p_max: f64,
    /// Evenly spaced grid points from p-min to p-max.
    #[arg(long, default_value_t = 11)]
    pub p_points: usize,
    /// Extra points placed inside each bracketing interval.
    #[arg(long, default_value_t = 6)]
    pub refine: usize,
    /// Measurement sweeps per point.
    #[arg(long, default_value_t = 20_000)]
    pub sweeps: usize,
    #[arg(long, default_value_t = 2_000)]
    pub thermalization: usize,
    /// Sweeps between measurements.
    #[arg(long, default_value_t = 1)]
    pub stride: usize,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    #[arg(long, value_enum, default_value_t = AlgorithmArg::Cluster)]
    pub algorithm: AlgorithmArg,
}

impl ThresholdArgs {
    pub fn grid(&self) -> Result<Vec<f64>, CliError> {
        if self.p_points < 2 || self.p_max <= self.p_min {
            return Err(CliError::Input("need p-points >= 2 and p-max > p-min".into()));
        }
        let step = (self.p_max - self.p_min) / (self.p_points - 1) as f64;
        Ok((0..self.p_points).map(|i| self.p_min + step * i as f64).collect())
    }
}

pub fn run(args: &ThresholdArgs, threads: usize, config: serde_json::Value) -> Result<Report, CliError> {
    let cfg = McConfig {
        seed: args.seed,
        algorithm: args.algorithm.into(),
        thermalization: args.thermalization,
        measurements: args.sweeps,
        stride: args.stride,
        threads,
        ..McConfig::default()
    };
    let scan = binder_scan(&args.ls, &args.grid()?, args.refine, &cfg)?;

    let mut rows: Vec<CsvRow> =
        scan.points.iter().map(|pt| CsvRow::new(pt.l, pt.p, pt.mu, "binder", &pt.binder, args.seed)).collect();
    for c in &scan.crossings {
        let mu = p_to_mu(c.p.mean)?;
        rows.push(CsvRow::new(
            c.l_large,
            c.p.mean,
            mu,
            format!("crossing_{}_{}", c.l_small, c.l_large),
            &c.p,
            args.seed,
        ));
    }
    rows.push(CsvRow::new(0, scan.p_c.mean, p_to_mu(scan.p_c.mean)?, "p_c", &scan.p_c, args.seed));

    let mut table = String::new();
    for c in &scan.crossings {
        table.push_str(&format!(
            "crossing L={} / L={}: p = {:.5} +- {:.5}\n",
            c.l_small, c.l_large, c.p.mean, c.p.stderr
        ));
    }
    table.push_str(&format!("p_c = {:.5} +- {:.5}\n", scan.p_c.mean, scan.p_c.stderr));

    Ok(Report {
        command: "threshold",
        config,
        seed: Some(args.seed),
        data: json!(scan),
        csv_header: CSV_HEADER.to_string(),
        csv_rows: rows.iter().map(CsvRow::to_line).collect(),
        table,
    })
}
