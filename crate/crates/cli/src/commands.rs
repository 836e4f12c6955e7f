use hdsteer::channels::{choi_of, dual_apply, pib_witness_check, peb_certificate};
use hdsteer::fmt::format_sig;
use hdsteer::io::{
    entanglement_weight_report, incompatibility_weight_report, round_json,
    steering_weight_report, MatrixLiteral, SetLiteral, StateLiteral,
};
use hdsteer::quantifiers::{
    check_weight_inequality, entanglement_weight_ppt, incompatibility_weight, steering_weight,
};
use hdsteer::steering::{
    assemblage_to_measurements, isotropic, measurements_to_assemblage, steer, Assemblage,
};
use hdsteer::witnesses::{
    certify, certify_value, iso_sn_threshold, pvm_nsim_threshold, region_table,
    sn_lower_bound_from_fraction, threshold_report, witness_bound, witness_value, GhdsWitness,
};
use hdsteer::DensityMatrix;
use rayon::prelude::*;
use serde_json::{json, Value};

use crate::error::CliError;
use crate::scenario::{Builder, Kind, Quantifier, Scenario};

pub const SWEEP_HEADER: &str = "eta,witness_value,largest_certified_n,sn_region,sdi_sn_region";

/// Rendered command output, ready to be written.
pub enum Output {
    Json(Value),
    Csv(String),
}

impl Output {
    pub fn render(self) -> String {
        match self {
            Output::Json(v) => {
                let mut s = serde_json::to_string_pretty(&round_json(v)).expect("JSON values serialise");
                s.push('\n');
                s
            }
            Output::Csv(s) => s,
        }
    }
}

fn core<T>(r: hdsteer::Result<T>) -> Result<T, CliError> {
    r.map_err(CliError::from_core)
}

fn missing(what: &str) -> CliError {
    CliError::Parse(format!("scenario needs {what}"))
}

pub fn run(scenario: &Scenario, builder: &mut Builder, threads: Option<usize>) -> Result<Output, CliError> {
    let mut out = match scenario.kind {
        Kind::Witness => cmd_witness(scenario, builder)?,
        Kind::Thresholds => cmd_thresholds(scenario)?,
        Kind::Map => cmd_map(scenario, builder)?,
        Kind::Weight => cmd_weight(scenario, builder)?,
        Kind::Channel => cmd_channel(scenario, builder)?,
        Kind::Sweep => return cmd_sweep(scenario, threads).map(Output::Csv),
    };
    if builder.used_randomness {
        if let (Output::Json(Value::Object(map)), Some(seed)) = (&mut out, scenario.seed) {
            map.insert("seed".into(), json!(seed));
        }
    }
    Ok(out)
}

/// Assemblage from an explicit payload, a state with (default MUB)
/// measurements, or the isotropic family at `d`, `eta`.
fn witness_assemblage(s: &Scenario, b: &mut Builder) -> Result<(Assemblage, Option<usize>), CliError> {
    if let Some(spec) = &s.assemblage {
        return Ok((b.assemblage(spec)?, None));
    }
    let state = match &s.state {
        Some(spec) => b.state(spec)?,
        None => {
            let d = s.require_d()?;
            let eta = s.eta.ok_or_else(|| missing("\"eta\", a state or an assemblage"))?;
            core(isotropic(d, eta))?
        }
    };
    let measurements = match &s.measurements {
        Some(spec) => b.measurements(spec)?,
        None => core(GhdsWitness::new(state.dim_a()))?.measurements(),
    };
    let fraction = if state.dim_a() == state.dim_b() {
        Some(core(sn_lower_bound_from_fraction(&state))?)
    } else {
        None
    };
    Ok((core(steer(&state, &measurements))?, fraction))
}

pub fn cmd_witness(s: &Scenario, b: &mut Builder) -> Result<Output, CliError> {
    let (sigma, fraction) = witness_assemblage(s, b)?;
    let d = sigma.dim();
    let result = core(certify(&sigma))?;
    let bounds = (1..=d)
        .map(|n| {
            let bound = core(witness_bound(d, n))?;
            Ok(json!({
                "n": n,
                "bound": bound,
                "violated": result.violated_levels.contains(&n),
            }))
        })
        .collect::<Result<Vec<_>, CliError>>()?;
    Ok(Output::Json(json!({
        "command": "witness",
        "d": d,
        "witness_value": result.witness_value,
        "bounds": bounds,
        "violated_levels": result.violated_levels,
        "certified_schmidt_number": result.certified_sn,
        "not_simulable_level": result.not_simulable,
        "fraction_schmidt_number_bound": fraction,
    })))
}

pub fn cmd_thresholds(s: &Scenario) -> Result<Output, CliError> {
    let d = s.require_d()?;
    if d < 2 {
        return Err(CliError::Validation(format!("thresholds need d ≥ 2, got {d}")));
    }
    let levels: Vec<usize> = match s.n {
        Some(n) => vec![n],
        None => (1..d).collect(),
    };
    let rows = levels
        .into_iter()
        .map(|n| core(threshold_report(d, n)))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(Output::Json(json!({
        "command": "thresholds",
        "d": d,
        "rows": rows,
    })))
}

pub fn cmd_map(s: &Scenario, b: &mut Builder) -> Result<Output, CliError> {
    if let Some(spec) = &s.assemblage {
        let sigma = b.assemblage(spec)?;
        let back = assemblage_to_measurements(&sigma);
        return Ok(Output::Json(json!({
            "command": "map",
            "direction": "assemblage_to_measurements",
            "full_rank": back.is_full_rank(),
            "measurements": SetLiteral::from_measurements(&back.measurements),
            "marginal": MatrixLiteral::from_matrix(back.marginal.matrix()),
            "support": MatrixLiteral::from_matrix(&back.support),
        })));
    }
    let spec = s
        .measurements
        .as_ref()
        .ok_or_else(|| missing("an assemblage or measurements"))?;
    let measurements = b.measurements(spec)?;
    if let Some(state) = &s.state {
        let rho = b.state(state)?;
        let sigma = core(steer(&rho, &measurements))?;
        return Ok(Output::Json(json!({
            "command": "map",
            "direction": "steer",
            "assemblage": SetLiteral::from_assemblage(&sigma),
        })));
    }
    let marginal = match &s.marginal {
        Some(lit) => b.density(lit)?,
        None => DensityMatrix::maximally_mixed(measurements.dim()),
    };
    let sigma = core(measurements_to_assemblage(&measurements, &marginal))?;
    Ok(Output::Json(json!({
        "command": "map",
        "direction": "measurements_to_assemblage",
        "assemblage": SetLiteral::from_assemblage(&sigma),
    })))
}

pub fn cmd_weight(s: &Scenario, b: &mut Builder) -> Result<Output, CliError> {
    let quantifier = match s.quantifier {
        Some(q) => q,
        None if s.assemblage.is_some() => Quantifier::Steering,
        None => match (&s.state, &s.measurements) {
            (Some(_), Some(_)) => Quantifier::Steering,
            (None, Some(_)) => Quantifier::Incompatibility,
            (Some(_), None) => Quantifier::Entanglement,
            (None, None) => return Err(missing("a payload for the weight")),
        },
    };
    let report = match quantifier {
        Quantifier::Steering => {
            let sigma = match &s.assemblage {
                Some(spec) => b.assemblage(spec)?,
                None => {
                    let rho = b.state(s.state.as_ref().ok_or_else(|| missing("a state"))?)?;
                    let m = b.measurements(s.measurements.as_ref().ok_or_else(|| missing("measurements"))?)?;
                    core(steer(&rho, &m))?
                }
            };
            steering_weight_report(&core(steering_weight(&sigma))?)
        }
        Quantifier::Incompatibility => {
            let m = b.measurements(s.measurements.as_ref().ok_or_else(|| missing("measurements"))?)?;
            incompatibility_weight_report(&core(incompatibility_weight(&m))?)
        }
        Quantifier::Entanglement => {
            let rho = b.state(s.state.as_ref().ok_or_else(|| missing("a state"))?)?;
            entanglement_weight_report(&core(entanglement_weight_ppt(&rho))?)
        }
        Quantifier::Inequality => {
            let m = b.measurements(s.measurements.as_ref().ok_or_else(|| missing("measurements"))?)?;
            let rho = b.state(s.state.as_ref().ok_or_else(|| missing("a state"))?)?;
            let r = core(check_weight_inequality(&m, &rho))?;
            json!({
                "quantifier": "weight_inequality",
                "lhs": r.lhs,
                "rhs": r.rhs,
                "incompatibility_weight": r.incompatibility_weight,
                "entanglement_weight": r.entanglement_weight,
                "slack": r.slack,
                "holds": r.holds,
            })
        }
    };
    let mut report = report;
    if let Value::Object(map) = &mut report {
        map.insert("command".into(), json!("weight"));
    }
    Ok(Output::Json(report))
}

pub fn cmd_channel(s: &Scenario, b: &mut Builder) -> Result<Output, CliError> {
    let channel = b.channel(s.channel.as_ref().ok_or_else(|| missing("a channel"))?)?;
    let marginal = match &s.marginal {
        Some(lit) => b.density(lit)?,
        None => DensityMatrix::maximally_mixed(channel.dim_in()),
    };
    let choi = core(choi_of(&channel, &marginal))?;
    let peb = peb_certificate(&channel);
    let pib = if channel.dim_in() == channel.dim_out() {
        let levels: Vec<usize> = match s.n {
            Some(n) => vec![n],
            None => (1..channel.dim_in()).collect(),
        };
        levels
            .into_iter()
            .map(|n| core(pib_witness_check(&channel, &marginal, n)))
            .collect::<Result<Vec<_>, _>>()?
    } else {
        Vec::new()
    };
    let dual = match &s.measurements {
        Some(spec) => {
            let m = b.measurements(spec)?;
            Some(SetLiteral::from_measurements(&core(dual_apply(&channel, &m))?))
        }
        None => None,
    };
    Ok(Output::Json(json!({
        "command": "channel",
        "dim_in": channel.dim_in(),
        "dim_out": channel.dim_out(),
        "choi_state": StateLiteral::from_state(&choi.state),
        "peb_certificate": peb,
        "pib_checks": pib,
        "dual_measurements": dual,
    })))
}

struct SweepRow {
    eta: f64,
    value: f64,
    certified: usize,
    sn_region: usize,
    sdi_region: usize,
}

fn sweep_row(d: usize, eta: f64, witness: &GhdsWitness) -> hdsteer::Result<SweepRow> {
    let sigma = steer(&isotropic(d, eta)?, &witness.measurements())?;
    let value = witness_value(&sigma, witness)?;
    let verdict = certify_value(d, value)?;
    let mut sn_region = 1;
    let mut sdi_region = 1;
    for n in 1..d {
        if eta > iso_sn_threshold(d, n)? {
            sn_region = n + 1;
        }
        if eta > pvm_nsim_threshold(d, n)? {
            sdi_region = n + 1;
        }
    }
    Ok(SweepRow {
        eta,
        value,
        certified: verdict.certified_sn,
        sn_region,
        sdi_region,
    })
}

/// CSV of the isotropic witness value over the grid with the certified
/// Schmidt number and the region indices read off `region_table(d)`.
pub fn cmd_sweep(s: &Scenario, threads: Option<usize>) -> Result<String, CliError> {
    let d = s.require_d()?;
    let points = s.grid_points()?;
    core(region_table(d))?;
    let witness = core(GhdsWitness::new(d))?;
    let compute = || {
        points
            .par_iter()
            .map(|&eta| sweep_row(d, eta, &witness))
            .collect::<hdsteer::Result<Vec<_>>>()
    };
    let rows = match threads {
        Some(t) => rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build()
            .map_err(|e| CliError::Validation(format!("cannot build thread pool: {e}")))?
            .install(compute),
        None => compute(),
    };
    let rows = core(rows)?;
    let mut csv = String::from(SWEEP_HEADER);
    csv.push('\n');
    for r in rows {
        csv.push_str(&format!(
            "{},{},{},{},{}\n",
            format_sig(r.eta),
            format_sig(r.value),
            r.certified,
            r.sn_region,
            r.sdi_region
        ));
    }
    Ok(csv)
}
