//! JSON schemas shared with the command line tool.
//!
//! Matrices use `{"rows": r, "cols": c, "data": [[re, im], ...]}` in row-major
//! order; measurement sets and assemblages use `{"dim": d, "inputs": [[matrix,
//! ...], ...]}`; channels use `{"dim_in", "dim_out", "kraus": [matrix, ...]}`.

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::channels::KrausChannel;
use crate::error::{Error, Result};
use crate::fmt::round_sig;
use crate::qcore::linalg::{ComplexMatrix, C64};
use crate::qcore::objects::{BipartiteState, DensityMatrix, MeasurementSet};
use crate::quantifiers::{
    EntanglementWitness, IncompatibilityWitness, SteeringInequality, WeightResult,
};
use crate::steering::Assemblage;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MatrixLiteral {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<[f64; 2]>,
}

impl MatrixLiteral {
    pub fn from_matrix(m: &ComplexMatrix) -> Self {
        let mut data = Vec::with_capacity(m.len());
        for r in 0..m.nrows() {
            for c in 0..m.ncols() {
                let v = m[(r, c)];
                data.push([v.re, v.im]);
            }
        }
        Self {
            rows: m.nrows(),
            cols: m.ncols(),
            data,
        }
    }

    pub fn to_matrix(&self) -> Result<ComplexMatrix> {
        if self.data.len() != self.rows * self.cols {
            return Err(Error::Shape(format!(
                "matrix literal declares {}x{} but has {} entries",
                self.rows,
                self.cols,
                self.data.len()
            )));
        }
        if self.data.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite);
        }
        Ok(ComplexMatrix::from_row_iterator(
            self.rows,
            self.cols,
            self.data.iter().map(|[re, im]| C64::new(*re, *im)),
        ))
    }
}

fn check_square(m: &ComplexMatrix, dim: usize, what: &str) -> Result<()> {
    if m.shape() != (dim, dim) {
        return Err(Error::DimensionMismatch(format!(
            "{what} is {}x{}, expected {dim}x{dim}",
            m.nrows(),
            m.ncols()
        )));
    }
    Ok(())
}

/// Schema shared by measurement sets and assemblages.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SetLiteral {
    pub dim: usize,
    pub inputs: Vec<Vec<MatrixLiteral>>,
}

impl SetLiteral {
    fn from_nested(dim: usize, inputs: &[Vec<ComplexMatrix>]) -> Self {
        Self {
            dim,
            inputs: inputs
                .iter()
                .map(|v| v.iter().map(MatrixLiteral::from_matrix).collect())
                .collect(),
        }
    }

    fn to_nested(&self) -> Result<Vec<Vec<ComplexMatrix>>> {
        self.inputs
            .iter()
            .map(|v| {
                v.iter()
                    .map(|m| {
                        let m = m.to_matrix()?;
                        check_square(&m, self.dim, "set element")?;
                        Ok(m)
                    })
                    .collect()
            })
            .collect()
    }

    pub fn from_measurements(m: &MeasurementSet) -> Self {
        Self::from_nested(m.dim(), m.inputs())
    }

    pub fn from_assemblage(a: &Assemblage) -> Self {
        Self::from_nested(a.dim(), a.inputs())
    }

    pub fn to_measurements(&self) -> Result<MeasurementSet> {
        MeasurementSet::new(self.dim, self.to_nested()?)
    }

    pub fn to_assemblage(&self) -> Result<Assemblage> {
        Assemblage::new(self.dim, self.to_nested()?)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StateLiteral {
    pub dim_a: usize,
    pub dim_b: usize,
    pub matrix: MatrixLiteral,
}

impl StateLiteral {
    pub fn from_state(rho: &BipartiteState) -> Self {
        Self {
            dim_a: rho.dim_a(),
            dim_b: rho.dim_b(),
            matrix: MatrixLiteral::from_matrix(rho.matrix()),
        }
    }

    pub fn to_state(&self) -> Result<BipartiteState> {
        BipartiteState::from_matrix(self.dim_a, self.dim_b, self.matrix.to_matrix()?)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChannelLiteral {
    pub dim_in: usize,
    pub dim_out: usize,
    pub kraus: Vec<MatrixLiteral>,
}

impl ChannelLiteral {
    pub fn from_channel(ch: &KrausChannel) -> Self {
        Self {
            dim_in: ch.dim_in(),
            dim_out: ch.dim_out(),
            kraus: ch.kraus().iter().map(MatrixLiteral::from_matrix).collect(),
        }
    }

    pub fn to_channel(&self) -> Result<KrausChannel> {
        let kraus = self
            .kraus
            .iter()
            .map(|k| {
                let k = k.to_matrix()?;
                if k.shape() != (self.dim_out, self.dim_in) {
                    return Err(Error::DimensionMismatch(format!(
                        "Kraus operator is {}x{}, expected {}x{}",
                        k.nrows(),
                        k.ncols(),
                        self.dim_out,
                        self.dim_in
                    )));
                }
                Ok(k)
            })
            .collect::<Result<Vec<_>>>()?;
        KrausChannel::new(self.dim_in, self.dim_out, kraus)
    }
}

pub fn density_literal(rho: &DensityMatrix) -> MatrixLiteral {
    MatrixLiteral::from_matrix(rho.matrix())
}

/// Rounds every number in a JSON tree to 9 significant digits.
pub fn round_json(value: Value) -> Value {
    match value {
        Value::Number(n) if !(n.is_i64() || n.is_u64()) => n
            .as_f64()
            .and_then(|x| serde_json::Number::from_f64(round_sig(x)))
            .map(Value::Number)
            .unwrap_or(Value::Null),
        Value::Array(items) => Value::Array(items.into_iter().map(round_json).collect()),
        Value::Object(map) => {
            Value::Object(map.into_iter().map(|(k, v)| (k, round_json(v))).collect())
        }
        other => other,
    }
}

fn literal_list(ms: &[ComplexMatrix]) -> Vec<MatrixLiteral> {
    ms.iter().map(MatrixLiteral::from_matrix).collect()
}

fn nested_literals(ms: &[Vec<ComplexMatrix>]) -> Vec<Vec<MatrixLiteral>> {
    ms.iter().map(|v| literal_list(v)).collect()
}

fn summary<T, C>(r: &WeightResult<T, C>, kind: &str) -> Value {
    json!({
        "quantifier": kind,
        "value": r.value,
        "certified_lower_bound": r.certified_lower_bound,
        "gap": r.gap,
        "primal_residual": r.primal_residual,
        "reconstruction_error": r.reconstruction_error,
        "exact": r.exact,
        "iterations": r.iterations,
        "components": literal_list(&r.components),
    })
}

fn merge(mut base: Value, extra: Value) -> Value {
    if let (Value::Object(b), Value::Object(e)) = (&mut base, extra) {
        b.extend(e);
    }
    base
}

pub fn steering_weight_report(r: &WeightResult<Assemblage, SteeringInequality>) -> Value {
    merge(
        summary(r, "steering_weight"),
        json!({
            "free": r.free.as_ref().map(SetLiteral::from_assemblage),
            "residual": r.residual.as_ref().map(SetLiteral::from_assemblage),
            "certificate": {
                "kind": "steering_inequality",
                "bound": r.certificate.lhs_bound(),
                "operators": nested_literals(&r.certificate.operators),
                "strategies": r.certificate.strategies.strategies(),
            },
        }),
    )
}

pub fn incompatibility_weight_report(
    r: &WeightResult<MeasurementSet, IncompatibilityWitness>,
) -> Value {
    merge(
        summary(r, "incompatibility_weight"),
        json!({
            "free": r.free.as_ref().map(SetLiteral::from_measurements),
            "residual": r.residual.as_ref().map(SetLiteral::from_measurements),
            "certificate": {
                "kind": "incompatibility_witness",
                "bound": r.certificate.jm_bound(),
                "operators": nested_literals(&r.certificate.operators),
                "offset": MatrixLiteral::from_matrix(&r.certificate.offset),
                "strategies": r.certificate.strategies.strategies(),
            },
        }),
    )
}

pub fn entanglement_weight_report(
    r: &WeightResult<BipartiteState, EntanglementWitness>,
) -> Value {
    merge(
        summary(r, "entanglement_weight_ppt"),
        json!({
            "free": r.free.as_ref().map(StateLiteral::from_state),
            "residual": r.residual.as_ref().map(StateLiteral::from_state),
            "certificate": {
                "kind": "entanglement_witness",
                "bound": r.certificate.separable_bound(),
                "operator": MatrixLiteral::from_matrix(&r.certificate.operator),
                "ppt_operator": MatrixLiteral::from_matrix(&r.certificate.ppt_operator),
            },
        }),
    )
}
