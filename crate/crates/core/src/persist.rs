//! JSON encodings for matrices and vectors.
//!
//! Matrices are written as `{"dim": [rows, cols], "data": [...]}` with
//! `data` in row-major order; vectors are plain arrays.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::matrix::SpdMatrix;

#[derive(Serialize, Deserialize)]
struct MatrixDoc {
    dim: [usize; 2],
    data: Vec<f64>,
}

impl MatrixDoc {
    fn from_matrix(m: &DMatrix<f64>) -> Self {
        let (r, c) = m.shape();
        let mut data = Vec::with_capacity(r * c);
        for i in 0..r {
            for j in 0..c {
                data.push(m[(i, j)]);
            }
        }
        Self { dim: [r, c], data }
    }

    fn into_matrix<E: serde::de::Error>(self) -> Result<DMatrix<f64>, E> {
        let [r, c] = self.dim;
        if self.data.len() != r * c {
            return Err(E::custom(format!(
                "matrix declares dim [{r}, {c}] but holds {} values",
                self.data.len()
            )));
        }
        Ok(DMatrix::from_row_slice(r, c, &self.data))
    }
}

pub mod matrix_serde {
    use super::*;

    pub fn serialize<S: Serializer>(m: &DMatrix<f64>, s: S) -> Result<S::Ok, S::Error> {
        MatrixDoc::from_matrix(m).serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<DMatrix<f64>, D::Error> {
        MatrixDoc::deserialize(d)?.into_matrix()
    }
}

pub mod spd_serde {
    use super::*;

    pub fn serialize<S: Serializer>(m: &SpdMatrix, s: S) -> Result<S::Ok, S::Error> {
        MatrixDoc::from_matrix(m.matrix()).serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<SpdMatrix, D::Error> {
        let m = MatrixDoc::deserialize(d)?.into_matrix()?;
        SpdMatrix::new(m).map_err(serde::de::Error::custom)
    }
}

pub mod vector_serde {
    use super::*;

    pub fn serialize<S: Serializer>(v: &DVector<f64>, s: S) -> Result<S::Ok, S::Error> {
        v.as_slice().serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<DVector<f64>, D::Error> {
        Ok(DVector::from_vec(Vec::<f64>::deserialize(d)?))
    }
}

pub mod opt_vector_serde {
    use super::*;

    pub fn serialize<S: Serializer>(v: &Option<DVector<f64>>, s: S) -> Result<S::Ok, S::Error> {
        v.as_ref().map(|v| v.as_slice().to_vec()).serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<DVector<f64>>, D::Error> {
        Ok(Option::<Vec<f64>>::deserialize(d)?.map(DVector::from_vec))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[derive(Serialize, Deserialize, PartialEq, Debug)]
    struct Holder {
        #[serde(with = "matrix_serde")]
        m: DMatrix<f64>,
        #[serde(with = "vector_serde")]
        v: DVector<f64>,
    }

    #[test]
    fn row_major_layout() {
        let h = Holder {
            m: DMatrix::from_row_slice(2, 3, &[1.0, 2.0, 3.0, 4.0, 5.0, 6.0]),
            v: DVector::from_vec(vec![7.0, 8.0]),
        };
        let s = serde_json::to_string(&h).unwrap();
        assert_eq!(
            s,
            r#"{"m":{"dim":[2,3],"data":[1.0,2.0,3.0,4.0,5.0,6.0]},"v":[7.0,8.0]}"#
        );
    }

    #[test]
    fn bad_dim_rejected() {
        let r: Result<Holder, _> = serde_json::from_str(r#"{"m":{"dim":[2,2],"data":[1.0]},"v":[]}"#);
        assert!(r.is_err());
    }

    proptest! {
        #[test]
        fn json_round_trip(r in 1usize..5, c in 1usize..5, vals in prop::collection::vec(-1e300f64..1e300, 25)) {
            let h = Holder {
                m: DMatrix::from_fn(r, c, |i, j| vals[i * 5 + j]),
                v: DVector::from_column_slice(&vals[..r]),
            };
            let back: Holder = serde_json::from_str(&serde_json::to_string(&h).unwrap()).unwrap();
            prop_assert_eq!(back, h);
        }
    }
}
