use super::{parse_rect, tag, BasisArg, Rect};
use crate::error::CliError;
use crate::report::Report;
use clap::{Args, ValueEnum};
use efd_core::efdloop::{EdgeRegion, TorusLattice};
use efd_core::stabilizer::{efd_stabilizer_group, kitaev_preskill, Limit};
use serde::Serialize;
use serde_json::json;

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum LimitArg {
    P0,
    Phalf,
}

#[derive(Args, Clone, Debug, Serialize)]
pub struct StabArgs {
    #[arg(long, short = 'l', default_value_t = 6)]
    pub l: usize,
    #[arg(long, value_enum)]
    pub limit: LimitArg,
    #[arg(long, value_enum, default_value_t = BasisArg::X)]
    pub basis: BasisArg,
    /// Vertex rectangles `x,y,w,h`; repeat the flag for several regions.
    #[arg(long, value_parser = parse_rect, default_values = ["1,1,2,2", "1,1,3,2", "0,1,3,3", "1,0,4,3"])]
    pub region: Vec<Rect>,
    /// Kitaev–Preskill disk `x,y,w,h` in vertices.
    #[arg(long, value_parser = parse_rect)]
    pub disk: Option<Rect>,
}

pub fn run(args: &StabArgs, config: serde_json::Value) -> Result<Report, CliError> {
    let lat = TorusLattice::new(args.l)?;
    let limit = match args.limit {
        LimitArg::P0 => Limit::P0,
        LimitArg::Phalf => Limit::PHalf,
    };
    let group = efd_stabilizer_group(&lat, limit, args.basis.into());
    group.check_commutation()?;

    let mut regions = Vec::new();
    let mut csv_rows = Vec::new();
    let mut table = format!(
        "L = {}, limit {}, basis {}: {} qubits, {} generators ({} logical)\n{:<12} {:>6} {:>9} {:>8}\n",
        args.l,
        tag(&args.limit),
        tag(&args.basis),
        group.qubits,
        group.count(),
        group.logical_completion,
        "region",
        "edges",
        "boundary",
        "S/ln2"
    );
    for r in &args.region {
        let region = EdgeRegion::vertex_rectangle(&lat, r.x, r.y, r.w, r.h);
        let bits = group.region_entropy(&region)?;
        csv_rows.push(format!("\"{r}\",{},{},{bits}", region.edges.len(), region.perimeter()));
        table.push_str(&format!(
            "{:<12} {:>6} {:>9} {:>8}\n",
            r.to_string(),
            region.edges.len(),
            region.perimeter(),
            bits
        ));
        regions.push(json!({
            "region": r,
            "edges": region.edges.len(),
            "boundary_vertices": region.perimeter(),
            "entropy_log2": bits,
        }));
    }
    let mut data = json!({
        "l": args.l,
        "limit": args.limit,
        "basis": args.basis,
        "qubits": group.qubits,
        "generators": group.count(),
        "logical_completion": group.logical_completion,
        "regions": regions,
    });
    if let Some(d) = args.disk {
        let parts = EdgeRegion::tripartite(&lat, d.x, d.y, d.w, d.h);
        let combination = kitaev_preskill(&group, &lat, &parts)?;
        data["kitaev_preskill"] = json!({ "disk": d, "combination_log2": combination, "gamma_log2": -combination });
        table.push_str(&format!("Kitaev-Preskill disk {d}: gamma = {} ln 2\n", -combination));
    }
    Ok(Report {
        command: "stab",
        config,
        seed: None,
        data,
        csv_header: "region,edges,boundary_vertices,entropy_log2".into(),
        csv_rows,
        table,
    })
}
