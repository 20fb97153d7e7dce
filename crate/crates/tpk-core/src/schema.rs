//! Shared JSON schema: matrices as {"rows", "cols", "data": [[re, im], ...]}
//! row-major, all floats emitted with 17 significant digits so round trips
//! are bit-exact.

use serde::{Deserialize, Serialize};
use serde_json::ser::Formatter;

use crate::error::{Error, Result};
use crate::halmos::HalmosForm;
use crate::linalg::CMatrix;
use crate::subspaces::{Projector, SixSpaceDecomposition};

/// Row-major complex matrix in the shared wire format.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct MatrixJson {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<[f64; 2]>,
}

impl MatrixJson {
    pub fn from_matrix(m: &CMatrix) -> Self {
        let mut data = Vec::with_capacity(m.nrows() * m.ncols());
        for i in 0..m.nrows() {
            for j in 0..m.ncols() {
                let z = m[(i, j)];
                data.push([z.re, z.im]);
            }
        }
        MatrixJson {
            rows: m.nrows(),
            cols: m.ncols(),
            data,
        }
    }

    pub fn to_matrix(&self) -> Result<CMatrix> {
        if self.rows * self.cols != self.data.len() {
            return Err(Error::BadMatrix(format!(
                "{}x{} declared but {} entries",
                self.rows,
                self.cols,
                self.data.len()
            )));
        }
        let mut m = CMatrix::zeros(self.rows, self.cols);
        for i in 0..self.rows {
            for j in 0..self.cols {
                let [re, im] = self.data[i * self.cols + j];
                m[(i, j)] = num_complex::Complex::new(re, im);
            }
        }
        crate::linalg::validate_finite(&m)?;
        Ok(m)
    }
}

/// A projector pair on the wire.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PairJson {
    pub p: MatrixJson,
    pub q: MatrixJson,
}

impl PairJson {
    pub fn from_pair(p: &Projector, q: &Projector) -> Self {
        PairJson {
            p: MatrixJson::from_matrix(p.matrix()),
            q: MatrixJson::from_matrix(q.matrix()),
        }
    }

    pub fn to_pair(&self) -> Result<(Projector, Projector)> {
        Ok((
            Projector::certify(self.p.to_matrix()?)?,
            Projector::certify(self.q.to_matrix()?)?,
        ))
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct HalmosFormJson {
    pub ranks: [usize; 6],
    pub u_pq: MatrixJson,
    pub q0: MatrixJson,
    pub u0: MatrixJson,
}

impl HalmosFormJson {
    pub fn from_form(form: &HalmosForm) -> Self {
        HalmosFormJson {
            ranks: form.decomposition.ranks,
            u_pq: MatrixJson::from_matrix(&form.u_pq),
            q0: MatrixJson::from_matrix(&form.q0),
            u0: MatrixJson::from_matrix(&form.u0),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SixSpaceJson {
    pub ranks: [usize; 6],
    pub bases: Vec<MatrixJson>,
}

impl SixSpaceJson {
    pub fn from_decomposition(d: &SixSpaceDecomposition) -> Self {
        SixSpaceJson {
            ranks: d.ranks,
            bases: d
                .bases
                .iter()
                .map(|b| MatrixJson::from_matrix(&b.basis))
                .collect(),
        }
    }
}

/// serde_json formatter emitting every float with 17 significant digits.
struct SeventeenDigits;

impl Formatter for SeventeenDigits {
    fn write_f64<W>(&mut self, writer: &mut W, value: f64) -> std::io::Result<()>
    where
        W: ?Sized + std::io::Write,
    {
        write!(writer, "{value:.16e}")
    }

    fn write_f32<W>(&mut self, writer: &mut W, value: f32) -> std::io::Result<()>
    where
        W: ?Sized + std::io::Write,
    {
        write!(writer, "{value:.16e}")
    }
}

/// Serialize with the repo-wide 17-significant-digit float format.
pub fn to_json_string<T: Serialize>(value: &T) -> Result<String> {
    let mut out = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut out, SeventeenDigits);
    value
        .serialize(&mut ser)
        .map_err(|e| Error::BadMatrix(format!("serialization failed: {e}")))?;
    String::from_utf8(out).map_err(|e| Error::BadMatrix(format!("non-utf8 output: {e}")))
}

pub fn from_json_str<'a, T: Deserialize<'a>>(s: &'a str) -> Result<T> {
    serde_json::from_str(s).map_err(|e| Error::BadMatrix(format!("parse failed: {e}")))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::random::{random_matrix, rng_from_seed};

    #[test]
    fn matrix_round_trip_is_exact() {
        let mut rng = rng_from_seed(1);
        let m = random_matrix(3, 5, &mut rng);
        let j = MatrixJson::from_matrix(&m);
        let s = to_json_string(&j).unwrap();
        let back: MatrixJson = from_json_str(&s).unwrap();
        assert_eq!(back.to_matrix().unwrap(), m);
    }

    #[test]
    fn seventeen_digit_floats() {
        let j = MatrixJson {
            rows: 1,
            cols: 1,
            data: vec![[std::f64::consts::PI, 0.0]],
        };
        let s = to_json_string(&j).unwrap();
        assert!(s.contains("3.1415926535897931e0"), "{s}");
    }

    #[test]
    fn shape_mismatch_rejected() {
        let j = MatrixJson {
            rows: 2,
            cols: 2,
            data: vec![[1.0, 0.0]],
        };
        assert!(j.to_matrix().is_err());
    }

    #[test]
    fn pair_round_trip_certifies() {
        let (p, q) = crate::random::generate_pair(&crate::random::PairSpec {
            dim: 6,
            rank_p: 2,
            rank_q: 3,
            shared_rank: 1,
            seed: 3,
        })
        .unwrap();
        let s = to_json_string(&PairJson::from_pair(&p, &q)).unwrap();
        let back: PairJson = from_json_str(&s).unwrap();
        let (p2, q2) = back.to_pair().unwrap();
        assert_eq!(p2.matrix(), p.matrix());
        assert_eq!(q2.matrix(), q.matrix());
    }

    #[test]
    fn serialization_is_deterministic() {
        let mut rng = rng_from_seed(9);
        let m = random_matrix(4, 4, &mut rng);
        let a = to_json_string(&MatrixJson::from_matrix(&m)).unwrap();
        let b = to_json_string(&MatrixJson::from_matrix(&m)).unwrap();
        assert_eq!(a, b);
    }
}
