use super::{parse_p, parse_point, parse_rect, tag, BasisArg, Rect, SectorArg};
use crate::error::CliError;
use crate::report::{sig12, Report};
use clap::{Args, ValueEnum};
use efd_core::efdloop::{
    exact_renyi2, exact_string_expectation, exact_wilson_loop, p_to_mu, rectangle_loop, spin_enumeration_correlator,
    spin_enumeration_wilson, DualPath, EdgeRegion, Sector, TorusLattice,
};
use efd_core::stabilizer::{efd_stabilizer_group, Limit};
use serde::Serialize;
use serde_json::json;

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Observable {
    /// `⟨σ_a σ_b⟩` along a horizontal dual path.
    String,
    /// Wilson loop around a rectangle of edges.
    Wilson,
    /// Rényi-2 entropy of a vertex rectangle.
    Renyi2,
    /// Stabilizer-limit entropy of a vertex rectangle (p = 0 or 1/2).
    Stab,
}

/// Largest lattice on which the spin-sum cross-check runs.
const SPIN_CHECK_L: usize = 4;

#[derive(Args, Clone, Debug, Serialize)]
pub struct OracleArgs {
    #[arg(value_enum)]
    pub observable: Observable,
    #[arg(long, short = 'l', default_value_t = 3)]
    pub l: usize,
    #[arg(long, value_parser = parse_p)]
    pub p: f64,
    #[arg(long, value_enum, default_value_t = SectorArg::Trivial)]
    pub sector: SectorArg,
    /// First plaquette `x,y` of the string.
    #[arg(long, value_parser = parse_point, default_value = "0,0")]
    pub from: (usize, usize),
    /// Horizontal length of the string in plaquettes.
    #[arg(long, default_value_t = 1)]
    pub steps: usize,
    /// Wilson rectangle `x,y,w,h` in edges.
    #[arg(long, value_parser = parse_rect, default_value = "0,0,1,1")]
    pub rect: Rect,
    /// Region `x,y,w,h` in vertices; a single plaquette is `x,y,2,2`.
    #[arg(long, value_parser = parse_rect, default_value = "0,0,2,2")]
    pub region: Rect,
    #[arg(long, value_enum, default_value_t = BasisArg::X)]
    pub basis: BasisArg,
    /// Largest L for cycle-space enumeration.
    #[arg(long, default_value_t = efd_core::efdloop::DEFAULT_L_CAP)]
    pub l_cap: usize,
    /// Largest edge count per side of a Rényi-2 bipartition.
    #[arg(long, default_value_t = efd_core::efdloop::DEFAULT_EDGE_CAP)]
    pub edge_cap: usize,
}

pub fn run(args: &OracleArgs, config: serde_json::Value) -> Result<Report, CliError> {
    let lat = TorusLattice::new(args.l)?;
    let mu = p_to_mu(args.p)?;
    let sector: Sector = args.sector.into();
    let spin_check = args.l <= SPIN_CHECK_L && mu.is_finite();
    let mut fields = serde_json::Map::new();
    let (value, unit) = match args.observable {
        Observable::String => {
            let (x, y) = args.from;
            let path = DualPath::horizontal(&lat, x, y, args.steps);
            let v = exact_string_expectation(&lat, mu, &path, sector, args.l_cap)?;
            if spin_check {
                let s = spin_enumeration_correlator(&lat, 2.0 * mu, &path, sector)?;
                fields.insert("spin_enumeration".into(), json!(sig12(s)));
            }
            (v, "")
        }
        Observable::Wilson => {
            let Rect { x, y, w, h } = args.rect;
            let edges = rectangle_loop(&lat, x, y, w, h);
            let v = exact_wilson_loop(&lat, mu, &edges, sector, args.l_cap)?;
            if spin_check {
                let s = spin_enumeration_wilson(&lat, mu, &edges, sector)?;
                fields.insert("spin_enumeration".into(), json!(sig12(s)));
            }
            (v, "")
        }
        Observable::Renyi2 => {
            let Rect { x, y, w, h } = args.region;
            let region = EdgeRegion::vertex_rectangle(&lat, x, y, w, h);
            fields.insert("boundary_vertices".into(), json!(region.perimeter()));
            let s = exact_renyi2(&lat, mu, &region, sector, args.edge_cap)?;
            fields.insert("log2_units".into(), json!(sig12(s.log2_units)));
            (s.nats, "nats")
        }
        Observable::Stab => {
            let limit = if args.p == 0.0 {
                Limit::P0
            } else if args.p == 0.5 {
                Limit::PHalf
            } else {
                return Err(CliError::Input("the stabilizer oracle needs p = 0 or p = 0.5".into()));
            };
            let Rect { x, y, w, h } = args.region;
            let region = EdgeRegion::vertex_rectangle(&lat, x, y, w, h);
            let group = efd_stabilizer_group(&lat, limit, args.basis.into());
            let bits = group.region_entropy(&region)?;
            fields.insert("boundary_vertices".into(), json!(region.perimeter()));
            fields.insert("log2_units".into(), json!(bits));
            (bits as f64 * std::f64::consts::LN_2, "nats")
        }
    };
    let value = sig12(value);
    let mut data = serde_json::Map::new();
    data.insert("observable".into(), json!(args.observable));
    data.insert("l".into(), json!(args.l));
    data.insert("p".into(), json!(args.p));
    data.insert("mu".into(), json!(mu));
    data.insert("sector".into(), json!(args.sector));
    data.insert("value".into(), json!(value));
    data.extend(fields);

    let mut table = format!(
        "{} L={} p={} sector={}\nvalue = {value:.11e} {unit}\n",
        tag(&args.observable),
        args.l,
        args.p,
        tag(&args.sector)
    );
    for (k, v) in
        data.iter().filter(|(k, _)| ["spin_enumeration", "log2_units", "boundary_vertices"].contains(&k.as_str()))
    {
        table.push_str(&format!("{k} = {v}\n"));
    }
    let csv_rows =
        vec![format!("{},{},{},{},{},{:.11e}", tag(&args.observable), args.l, args.p, mu, tag(&args.sector), value)];
    Ok(Report {
        command: "oracle",
        config,
        seed: None,
        data: serde_json::Value::Object(data),
        csv_header: "observable,L,p,mu,sector,value".into(),
        csv_rows,
        table,
    })
}
