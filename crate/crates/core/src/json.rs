//! JSON encodings shared by every file format.
//!
//! Complex numbers are `[re, im]` pairs, matrices are row-major lists of rows,
//! and states are `{"shape": [..], "kind": "pure"|"density", "data": ..}`.
//! Writers emit shortest round-trip floats; readers validate invariants.

use std::path::Path;

use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::qcore::{CMatrix, CVector, DensityMatrix, PureState, State, SystemShape, C64};

pub type ComplexJson = [f64; 2];
pub type MatrixJson = Vec<Vec<ComplexJson>>;

pub fn complex_to_json(z: C64) -> ComplexJson {
    [z.re, z.im]
}

pub fn vector_to_json(v: &CVector) -> Vec<ComplexJson> {
    v.iter().map(|z| complex_to_json(*z)).collect()
}

pub fn vector_from_json(data: &[ComplexJson]) -> CVector {
    CVector::from_iterator(data.len(), data.iter().map(|[re, im]| C64::new(*re, *im)))
}

pub fn matrix_to_json(m: &CMatrix) -> MatrixJson {
    (0..m.nrows())
        .map(|r| (0..m.ncols()).map(|c| complex_to_json(m[(r, c)])).collect())
        .collect()
}

pub fn matrix_from_json(rows: &[Vec<ComplexJson>]) -> Result<CMatrix> {
    let nrows = rows.len();
    let ncols = rows.first().map_or(0, Vec::len);
    if rows.iter().any(|r| r.len() != ncols) {
        return Err(Error::validation("matrix rows have unequal lengths"));
    }
    Ok(CMatrix::from_fn(nrows, ncols, |r, c| {
        let [re, im] = rows[r][c];
        C64::new(re, im)
    }))
}

/// serde adapter for a single matrix field.
pub mod matrix {
    use super::*;

    pub fn serialize<S: Serializer>(m: &CMatrix, s: S) -> std::result::Result<S::Ok, S::Error> {
        matrix_to_json(m).serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<CMatrix, D::Error> {
        let rows = MatrixJson::deserialize(d)?;
        matrix_from_json(&rows).map_err(D::Error::custom)
    }
}

/// serde adapter for a sequence of matrices.
pub mod matrix_seq {
    use super::*;

    pub fn serialize<S: Serializer>(ms: &[CMatrix], s: S) -> std::result::Result<S::Ok, S::Error> {
        ms.iter().map(matrix_to_json).collect::<Vec<_>>().serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(
        d: D,
    ) -> std::result::Result<Vec<CMatrix>, D::Error> {
        let all = Vec::<MatrixJson>::deserialize(d)?;
        all.iter()
            .map(|rows| matrix_from_json(rows).map_err(D::Error::custom))
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StateKind {
    Pure,
    Density,
}

/// Raw state document before validation.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StateDoc {
    pub shape: Vec<usize>,
    pub kind: StateKind,
    pub data: serde_json::Value,
}

impl From<&State> for StateDoc {
    fn from(state: &State) -> Self {
        match state {
            State::Pure(p) => p.into(),
            State::Density(d) => d.into(),
        }
    }
}

impl From<&PureState> for StateDoc {
    fn from(p: &PureState) -> Self {
        StateDoc {
            shape: p.shape().local_dims().to_vec(),
            kind: StateKind::Pure,
            data: serde_json::to_value(vector_to_json(p.amplitudes())).expect("finite floats"),
        }
    }
}

impl From<&DensityMatrix> for StateDoc {
    fn from(d: &DensityMatrix) -> Self {
        StateDoc {
            shape: d.shape().local_dims().to_vec(),
            kind: StateKind::Density,
            data: serde_json::to_value(matrix_to_json(d.matrix())).expect("finite floats"),
        }
    }
}

impl TryFrom<StateDoc> for State {
    type Error = Error;

    fn try_from(doc: StateDoc) -> Result<State> {
        let shape = SystemShape::new(doc.shape)?;
        match doc.kind {
            StateKind::Pure => {
                let data: Vec<ComplexJson> = serde_json::from_value(doc.data)?;
                Ok(State::Pure(PureState::new(shape, vector_from_json(&data))?))
            }
            StateKind::Density => {
                let rows: MatrixJson = serde_json::from_value(doc.data)?;
                let m = matrix_from_json(&rows)?;
                Ok(State::Density(DensityMatrix::from_external(shape, m)?))
            }
        }
    }
}

impl Serialize for State {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        StateDoc::from(self).serialize(s)
    }
}

impl<'de> Deserialize<'de> for State {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        State::try_from(StateDoc::deserialize(d)?).map_err(D::Error::custom)
    }
}

impl Serialize for PureState {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        StateDoc::from(self).serialize(s)
    }
}

impl<'de> Deserialize<'de> for PureState {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        match State::deserialize(d)? {
            State::Pure(p) => Ok(p),
            State::Density(_) => Err(D::Error::custom("expected a pure state")),
        }
    }
}

impl Serialize for DensityMatrix {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        StateDoc::from(self).serialize(s)
    }
}

impl<'de> Deserialize<'de> for DensityMatrix {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        match State::deserialize(d)? {
            State::Density(rho) => Ok(rho),
            State::Pure(_) => Err(D::Error::custom("expected a density matrix")),
        }
    }
}

pub fn state_to_string(state: &State) -> String {
    serde_json::to_string(state).expect("state serializes")
}

pub fn state_from_str(s: &str) -> Result<State> {
    let doc: StateDoc = serde_json::from_str(s)?;
    State::try_from(doc)
}

pub fn read_state(path: impl AsRef<Path>) -> Result<State> {
    state_from_str(&std::fs::read_to_string(path)?)
}

pub fn write_state(path: impl AsRef<Path>, state: &State) -> Result<()> {
    std::fs::write(path, state_to_string(state))?;
    Ok(())
}

/// Reads any JSON document by type, mapping decode failures to validation
/// errors.
pub fn read_json<T: for<'de> Deserialize<'de>>(path: impl AsRef<Path>) -> Result<T> {
    let text = std::fs::read_to_string(path)?;
    serde_json::from_str(&text).map_err(|e| Error::validation(e.to_string()))
}
