use hdsteer::quantifiers::steering_weight;
use hdsteer::steering::{isotropic, steer};
use hdsteer::witnesses::{
    certify_value, iso_sn_threshold, mub_nsim_threshold, pvm_nsim_threshold, witness_bound,
    witness_value, GhdsWitness,
};
use hdsteer::MeasurementSet;
use serde::Serialize;
use wasm_bindgen::prelude::*;

/// Largest local dimension offered by the demo.
pub const MAX_DEMO_DIM: usize = 8;
/// Largest number of grid points per curve.
pub const MAX_STEPS: usize = 400;

#[derive(Debug, Serialize)]
pub struct Boundary {
    pub n: usize,
    pub sn: f64,
    pub sdi_sn: f64,
    pub mub: f64,
}

#[derive(Debug, Serialize)]
pub struct WitnessCurve {
    pub d: usize,
    pub eta: Vec<f64>,
    pub value: Vec<f64>,
    pub certified_sn: Vec<usize>,
    /// Level-`n` bounds for `n = 1..=d`.
    pub bounds: Vec<f64>,
}

#[derive(Debug, Serialize)]
pub struct WeightCurve {
    pub eta: Vec<f64>,
    pub weight: Vec<f64>,
    pub certified_lower_bound: Vec<f64>,
}

fn check_dim(d: usize) -> Result<(), String> {
    if (2..=MAX_DEMO_DIM).contains(&d) {
        Ok(())
    } else {
        Err(format!("d must lie in 2..={MAX_DEMO_DIM}, got {d}"))
    }
}

fn grid(steps: usize) -> Result<Vec<f64>, String> {
    if !(1..=MAX_STEPS).contains(&steps) {
        return Err(format!("steps must lie in 1..={MAX_STEPS}, got {steps}"));
    }
    Ok((0..=steps).map(|i| i as f64 / steps as f64).collect())
}

fn to_json<T: Serialize>(value: &T) -> Result<String, String> {
    serde_json::to_string(value).map_err(|e| e.to_string())
}

pub fn boundaries(d: usize) -> Result<Vec<Boundary>, String> {
    check_dim(d)?;
    (1..d)
        .map(|n| {
            Ok(Boundary {
                n,
                sn: iso_sn_threshold(d, n)?,
                sdi_sn: pvm_nsim_threshold(d, n)?,
                mub: mub_nsim_threshold(d, n)?,
            })
        })
        .collect::<hdsteer::Result<Vec<_>>>()
        .map_err(|e| e.to_string())
}

pub fn witness_curve(d: usize, steps: usize) -> Result<WitnessCurve, String> {
    check_dim(d)?;
    let eta = grid(steps)?;
    let run = || -> hdsteer::Result<WitnessCurve> {
        let witness = GhdsWitness::new(d)?;
        let measurements = witness.measurements();
        let mut value = Vec::with_capacity(eta.len());
        let mut certified_sn = Vec::with_capacity(eta.len());
        for &e in &eta {
            let v = witness_value(&steer(&isotropic(d, e)?, &measurements)?, &witness)?;
            certified_sn.push(certify_value(d, v)?.certified_sn);
            value.push(v);
        }
        let bounds = (1..=d).map(|n| witness_bound(d, n)).collect::<hdsteer::Result<_>>()?;
        Ok(WitnessCurve {
            d,
            eta: eta.clone(),
            value,
            certified_sn,
            bounds,
        })
    };
    run().map_err(|e| e.to_string())
}

/// Steering weight of the isotropic qubit state probed with the MUB pair.
pub fn weight_curve(steps: usize) -> Result<WeightCurve, String> {
    let eta = grid(steps)?;
    let run = || -> hdsteer::Result<WeightCurve> {
        let mubs = MeasurementSet::fourier_mubs(2)?;
        let mut weight = Vec::with_capacity(eta.len());
        let mut certified_lower_bound = Vec::with_capacity(eta.len());
        for &e in &eta {
            let r = steering_weight(&steer(&isotropic(2, e)?, &mubs)?)?;
            weight.push(r.value);
            certified_lower_bound.push(r.certified_lower_bound);
        }
        Ok(WeightCurve {
            eta: eta.clone(),
            weight,
            certified_lower_bound,
        })
    };
    run().map_err(|e| e.to_string())
}

/// JSON array of region boundaries `{n, sn, sdi_sn, mub}` for `n = 1..d−1`.
#[wasm_bindgen(js_name = regionTable)]
pub fn region_table(d: usize) -> Result<String, String> {
    to_json(&boundaries(d)?)
}

/// JSON witness curve of the isotropic family on `steps + 1` grid points.
#[wasm_bindgen(js_name = witnessSweep)]
pub fn witness_sweep(d: usize, steps: usize) -> Result<String, String> {
    to_json(&witness_curve(d, steps)?)
}

/// JSON steering weight curve with certified lower bounds.
#[wasm_bindgen(js_name = steeringWeightCurve)]
pub fn steering_weight_curve(steps: usize) -> Result<String, String> {
    to_json(&weight_curve(steps)?)
}
