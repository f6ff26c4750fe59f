//! JSON file formats for matrices, states and complex coefficient lists.
//!
//! Matrices are `{"dim": N, "entries": [[[re, im], …], …]}` row-major and
//! states `{"dim": N, "amplitudes": [[re, im], …]}`. serde_json writes the
//! shortest representation that parses back to the same bits.

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::numkit::{cx, ComplexMatrix, StateVector, C64};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatrixFile {
    pub dim: usize,
    pub entries: Vec<Vec<[f64; 2]>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StateFile {
    pub dim: usize,
    pub amplitudes: Vec<[f64; 2]>,
}

fn pair(z: &C64) -> [f64; 2] {
    [z.re, z.im]
}

fn finite(p: &[f64; 2]) -> bool {
    p[0].is_finite() && p[1].is_finite()
}

impl MatrixFile {
    pub fn from_matrix(m: &ComplexMatrix) -> Self {
        MatrixFile {
            dim: m.nrows(),
            entries: (0..m.nrows()).map(|i| (0..m.ncols()).map(|j| pair(&m[(i, j)])).collect()).collect(),
        }
    }

    pub fn to_matrix(&self) -> Result<ComplexMatrix> {
        let n = self.dim;
        if n == 0 {
            return Err(Error::Parse("matrix dim must be positive".into()));
        }
        if self.entries.len() != n || self.entries.iter().any(|r| r.len() != n) {
            return Err(Error::Parse(format!("matrix entries must be {n}×{n}")));
        }
        if self.entries.iter().flatten().any(|p| !finite(p)) {
            return Err(Error::Parse("matrix entries must be finite".into()));
        }
        Ok(ComplexMatrix::from_fn(n, n, |i, j| cx(self.entries[i][j][0], self.entries[i][j][1])))
    }
}

impl StateFile {
    pub fn from_state(v: &StateVector) -> Self {
        StateFile { dim: v.len(), amplitudes: v.iter().map(pair).collect() }
    }

    pub fn to_state(&self) -> Result<StateVector> {
        if self.dim == 0 || self.amplitudes.len() != self.dim {
            return Err(Error::Parse(format!("state must have {} amplitudes", self.dim)));
        }
        if self.amplitudes.iter().any(|p| !finite(p)) {
            return Err(Error::Parse("state amplitudes must be finite".into()));
        }
        Ok(StateVector::from_iterator(self.dim, self.amplitudes.iter().map(|p| cx(p[0], p[1]))))
    }
}

/// A complex number written either as `[re, im]` or as a bare real.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ComplexEntry {
    Pair([f64; 2]),
    Real(f64),
}

impl ComplexEntry {
    pub fn value(&self) -> C64 {
        match *self {
            ComplexEntry::Pair([re, im]) => cx(re, im),
            ComplexEntry::Real(re) => cx(re, 0.0),
        }
    }
}

pub fn matrix_to_json(m: &ComplexMatrix) -> String {
    serde_json::to_string(&MatrixFile::from_matrix(m)).expect("matrix serializes")
}

pub fn matrix_from_json(s: &str) -> Result<ComplexMatrix> {
    let f: MatrixFile = serde_json::from_str(s).map_err(|e| Error::Parse(e.to_string()))?;
    f.to_matrix()
}

pub fn state_to_json(v: &StateVector) -> String {
    serde_json::to_string(&StateFile::from_state(v)).expect("state serializes")
}

pub fn state_from_json(s: &str) -> Result<StateVector> {
    let f: StateFile = serde_json::from_str(s).map_err(|e| Error::Parse(e.to_string()))?;
    f.to_state()
}

fn de_error<E: serde::de::Error>(e: Error) -> E {
    match e {
        Error::Parse(m) => E::custom(m),
        other => E::custom(other),
    }
}

/// `#[serde(with = "matrix")]` adapter.
pub mod matrix {
    use super::*;

    pub fn serialize<S: Serializer>(m: &ComplexMatrix, s: S) -> std::result::Result<S::Ok, S::Error> {
        MatrixFile::from_matrix(m).serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<ComplexMatrix, D::Error> {
        MatrixFile::deserialize(d)?.to_matrix().map_err(de_error)
    }
}

/// `#[serde(with = "matrix_opt")]` adapter.
pub mod matrix_opt {
    use super::*;

    pub fn serialize<S: Serializer>(m: &Option<ComplexMatrix>, s: S) -> std::result::Result<S::Ok, S::Error> {
        m.as_ref().map(MatrixFile::from_matrix).serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Option<ComplexMatrix>, D::Error> {
        Option::<MatrixFile>::deserialize(d)?.map(|f| f.to_matrix()).transpose().map_err(de_error)
    }
}

/// `#[serde(with = "state")]` adapter.
pub mod state {
    use super::*;

    pub fn serialize<S: Serializer>(v: &StateVector, s: S) -> std::result::Result<S::Ok, S::Error> {
        StateFile::from_state(v).serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<StateVector, D::Error> {
        StateFile::deserialize(d)?.to_state().map_err(de_error)
    }
}

/// `#[serde(with = "state_opt")]` adapter.
pub mod state_opt {
    use super::*;

    pub fn serialize<S: Serializer>(v: &Option<StateVector>, s: S) -> std::result::Result<S::Ok, S::Error> {
        v.as_ref().map(StateFile::from_state).serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Option<StateVector>, D::Error> {
        Option::<StateFile>::deserialize(d)?.map(|f| f.to_state()).transpose().map_err(de_error)
    }
}
