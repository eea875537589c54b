//! JSON encodings shared by reports: complex matrices as row-major arrays of
//! `[re, im]` pairs.

use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::linalg::{CMatrix, C64};

pub fn matrix_to_json(m: &CMatrix) -> serde_json::Value {
    serde_json::Value::Array(
        (0..m.nrows())
            .map(|i| {
                serde_json::Value::Array(
                    (0..m.ncols()).map(|j| serde_json::json!([m[(i, j)].re, m[(i, j)].im])).collect(),
                )
            })
            .collect(),
    )
}

pub fn matrix_from_json(v: &serde_json::Value) -> Result<CMatrix> {
    let rows: Vec<Vec<[f64; 2]>> = serde_json::from_value(v.clone())?;
    let n = rows.len();
    let m = rows.first().map_or(0, Vec::len);
    if rows.iter().any(|r| r.len() != m) {
        return Err(Error::Parse("ragged matrix rows".into()));
    }
    Ok(CMatrix::from_fn(n, m, |i, j| C64::new(rows[i][j][0], rows[i][j][1])))
}

/// Real matrix as nested arrays.
pub fn real_matrix_to_json(m: &CMatrix) -> serde_json::Value {
    serde_json::Value::Array(
        (0..m.nrows())
            .map(|i| serde_json::Value::Array((0..m.ncols()).map(|j| m[(i, j)].re.into()).collect()))
            .collect(),
    )
}

/// `#[serde(with = "rydgate::io::cmatrix")]` adapter.
pub mod cmatrix {
    use super::*;

    pub fn serialize<S: Serializer>(m: &CMatrix, s: S) -> std::result::Result<S::Ok, S::Error> {
        matrix_to_json(m).serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<CMatrix, D::Error> {
        let v = serde_json::Value::deserialize(d)?;
        matrix_from_json(&v).map_err(D::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip() {
        let m = CMatrix::from_fn(2, 3, |i, j| C64::new(i as f64, -(j as f64) * 0.5));
        let v = matrix_to_json(&m);
        assert_eq!(v[1][2], serde_json::json!([1.0, -1.0]));
        assert_eq!(matrix_from_json(&v).unwrap(), m);
        assert!(matrix_from_json(&serde_json::json!([[[1.0, 0.0]], []])).is_err());
    }
}
