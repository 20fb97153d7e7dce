//! Projector construction and the lattice of ranges/kernels of two
//! projections: sums, intersections, the six canonical subspaces H1..H6
//! and the projection formulas they satisfy.

use num_complex::Complex;

use crate::error::{Error, Result};
use crate::linalg::{
    self, hermitian_eigen, orthonormalize, range_basis, spectral_norm, CMatrix, RankPolicy,
    UNITY_COS_TOL,
};

/// Residual level at which a projector certificate is accepted outright.
pub const CERT_TOL: f64 = 1e-10;
/// Residual level up to which a failed certificate is repaired by
/// re-symmetrization and spectral rounding.
pub const REPAIR_TOL: f64 = 1e-8;

/// Matrix with orthonormal columns representing a closed subspace.
/// Rank 0 (no columns) is a first-class value, not an error.
#[derive(Debug, Clone)]
pub struct SubspaceBasis {
    pub basis: CMatrix,
    pub ambient_dim: usize,
}

impl SubspaceBasis {
    pub fn empty(ambient_dim: usize) -> Self {
        SubspaceBasis {
            basis: CMatrix::zeros(ambient_dim, 0),
            ambient_dim,
        }
    }

    /// Wrap columns already known to be orthonormal.
    pub fn from_columns_unchecked(basis: CMatrix, ambient_dim: usize) -> Self {
        debug_assert_eq!(basis.nrows(), ambient_dim);
        SubspaceBasis { basis, ambient_dim }
    }

    /// Validate orthonormality before wrapping external data.
    pub fn try_new(basis: CMatrix) -> Result<Self> {
        let ambient_dim = basis.nrows();
        let b = SubspaceBasis { basis, ambient_dim };
        let res = b.orthonormality_residual();
        if res > CERT_TOL {
            return Err(Error::NonOrthonormalBasis { residual: res });
        }
        Ok(b)
    }

    pub fn rank(&self) -> usize {
        self.basis.ncols()
    }

    pub fn orthonormality_residual(&self) -> f64 {
        let r = self.rank();
        spectral_norm(&(self.basis.adjoint() * &self.basis - CMatrix::identity(r, r)))
    }

    /// The matrix B B* projecting onto the span.
    pub fn projector_matrix(&self) -> CMatrix {
        &self.basis * self.basis.adjoint()
    }
}

/// Certified Hermitian-idempotent matrix with tolerance witness.
#[derive(Debug, Clone)]
pub struct Projector {
    matrix: CMatrix,
    dim: usize,
    pub hermitian_residual: f64,
    pub idempotent_residual: f64,
    /// Set when the certificate failed at 1e-10 but passed at 1e-8 and the
    /// matrix was re-symmetrized and spectrally rounded.
    pub repaired: bool,
}

impl Projector {
    /// Certify a candidate matrix as a projector. Residuals up to
    /// `CERT_TOL` pass outright; residuals up to `REPAIR_TOL` trigger a
    /// repair (symmetrize, then spectral projection onto eigenvalues > 1/2)
    /// that is recorded in the `repaired` flag.
    pub fn certify(matrix: CMatrix) -> Result<Self> {
        if matrix.nrows() != matrix.ncols() {
            return Err(Error::DimensionMismatch(format!(
                "projector must be square, got {}x{}",
                matrix.nrows(),
                matrix.ncols()
            )));
        }
        linalg::validate_finite(&matrix)?;
        let dim = matrix.nrows();
        let (h, i) = Self::residuals(&matrix);
        if h <= CERT_TOL && i <= CERT_TOL && Self::spectrum_ok(&matrix) {
            return Ok(Projector {
                matrix,
                dim,
                hermitian_residual: h,
                idempotent_residual: i,
                repaired: false,
            });
        }
        if h <= REPAIR_TOL && i <= REPAIR_TOL {
            let repaired = Self::spectral_round(&matrix);
            let (h2, i2) = Self::residuals(&repaired);
            if h2 <= CERT_TOL && i2 <= CERT_TOL {
                return Ok(Projector {
                    matrix: repaired,
                    dim,
                    hermitian_residual: h2,
                    idempotent_residual: i2,
                    repaired: true,
                });
            }
        }
        Err(Error::CertificateFailure(format!(
            "hermitian residual {h:.3e}, idempotent residual {i:.3e}"
        )))
    }

    fn residuals(m: &CMatrix) -> (f64, f64) {
        let h = spectral_norm(&(m - m.adjoint()));
        let i = spectral_norm(&(m * m - m));
        (h, i)
    }

    fn spectrum_ok(m: &CMatrix) -> bool {
        let (vals, _) = hermitian_eigen(m);
        vals.iter()
            .all(|&l| l.abs() <= 1e-9 || (l - 1.0).abs() <= 1e-9)
    }

    /// Symmetrize and snap eigenvalues to {0, 1} at threshold 1/2.
    pub fn spectral_round(m: &CMatrix) -> CMatrix {
        let (vals, vecs) = hermitian_eigen(m);
        let n = m.nrows();
        let mut out = CMatrix::zeros(n, n);
        for (k, &l) in vals.iter().enumerate() {
            if l > 0.5 {
                let vk = vecs.column(k);
                for i in 0..n {
                    for j in 0..n {
                        out[(i, j)] += vk[i] * vk[j].conj();
                    }
                }
            }
        }
        out
    }

    pub fn identity(dim: usize) -> Self {
        Projector {
            matrix: CMatrix::identity(dim, dim),
            dim,
            hermitian_residual: 0.0,
            idempotent_residual: 0.0,
            repaired: false,
        }
    }

    pub fn zero(dim: usize) -> Self {
        Projector {
            matrix: CMatrix::zeros(dim, dim),
            dim,
            hermitian_residual: 0.0,
            idempotent_residual: 0.0,
            repaired: false,
        }
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Numerical rank, read off the trace.
    pub fn rank(&self) -> usize {
        let tr: Complex<f64> = self.matrix.trace();
        tr.re.round().max(0.0) as usize
    }

    /// I - P.
    pub fn complement(&self) -> Self {
        Projector {
            matrix: CMatrix::identity(self.dim, self.dim) - &self.matrix,
            dim: self.dim,
            hermitian_residual: self.hermitian_residual,
            idempotent_residual: self.idempotent_residual,
            repaired: self.repaired,
        }
    }
}

/// Gap metric between two projectors: ||P_A - P_B||.
pub fn gap(a: &Projector, b: &Projector) -> f64 {
    spectral_norm(&(a.matrix() - b.matrix()))
}

/// Gap between the spans of two bases.
pub fn basis_gap(a: &SubspaceBasis, b: &SubspaceBasis) -> f64 {
    spectral_norm(&(a.projector_matrix() - b.projector_matrix()))
}

fn ensure_same_dim(p: &Projector, q: &Projector) -> Result<()> {
    if p.dim() != q.dim() {
        return Err(Error::DimensionMismatch(format!(
            "projector dims {} vs {}",
            p.dim(),
            q.dim()
        )));
    }
    Ok(())
}

/// P = B B* for an orthonormal basis B.
pub fn project_onto(b: &SubspaceBasis) -> Result<Projector> {
    let res = b.orthonormality_residual();
    if res > REPAIR_TOL {
        return Err(Error::NonOrthonormalBasis { residual: res });
    }
    Projector::certify(b.projector_matrix())
}

/// Orthonormal basis of R(P) + R(Q), computed as the range of P + Q.
pub fn range_sum(p: &Projector, q: &Projector, policy: RankPolicy) -> Result<SubspaceBasis> {
    ensure_same_dim(p, q)?;
    Ok(range_basis(&(p.matrix() + q.matrix()), policy))
}

/// Orthonormal basis of R(P) ∩ R(Q): the eigenspace of P + Q at
/// eigenvalue 2, equivalently the kernel of 2I - P - Q.
pub fn intersect_ranges(p: &Projector, q: &Projector, policy: RankPolicy) -> Result<SubspaceBasis> {
    ensure_same_dim(p, q)?;
    let dim = p.dim();
    let sum = p.matrix() + q.matrix();
    let (vals, vecs) = hermitian_eigen(&sum);
    // eigenvalue lambda = 1 + cos(theta); intersection directions have
    // cos within UNITY_COS_TOL of 1
    let cols: Vec<usize> = (0..dim)
        .filter(|&k| vals[k] >= 2.0 - UNITY_COS_TOL)
        .collect();
    if cols.is_empty() {
        return Ok(SubspaceBasis::empty(dim));
    }
    let mut cand = CMatrix::zeros(dim, cols.len());
    // descending eigenvalue order
    for (j, &k) in cols.iter().rev().enumerate() {
        cand.set_column(j, &vecs.column(k));
    }
    // one refinement pass: intersection vectors are fixed by Q then P,
    // components outside are damped to second order
    let refined = orthonormalize(&(p.matrix() * (q.matrix() * &cand)), policy);
    if refined.ncols() == cand.ncols() {
        Ok(SubspaceBasis::from_columns_unchecked(refined, dim))
    } else {
        Ok(SubspaceBasis::from_columns_unchecked(cand, dim))
    }
}

/// The six-space data of the two-projection lattice.
#[derive(Debug, Clone)]
pub struct SixSpaceDecomposition {
    pub bases: [SubspaceBasis; 6],
    pub projectors: [Projector; 6],
    pub ranks: [usize; 6],
}

impl SixSpaceDecomposition {
    pub fn dim(&self) -> usize {
        self.projectors[0].dim()
    }
}

/// H1 = R(P)∩R(Q), H2 = R(P)∩N(Q), H3 = N(P)∩R(Q), H4 = N(P)∩N(Q),
/// P5 = P - P1 - P2, P6 = (I-P) - P3 - P4.
pub fn six_space_decomposition(
    p: &Projector,
    q: &Projector,
    policy: RankPolicy,
) -> Result<SixSpaceDecomposition> {
    ensure_same_dim(p, q)?;
    let pc = p.complement();
    let qc = q.complement();
    let h1 = intersect_ranges(p, q, policy)?;
    let h2 = intersect_ranges(p, &qc, policy)?;
    let h3 = intersect_ranges(&pc, q, policy)?;
    let h4 = intersect_ranges(&pc, &qc, policy)?;
    let p1 = project_onto(&h1)?;
    let p2 = project_onto(&h2)?;
    let p3 = project_onto(&h3)?;
    let p4 = project_onto(&h4)?;
    let p5 = Projector::certify(p.matrix() - p1.matrix() - p2.matrix())?;
    let p6 = Projector::certify(pc.matrix() - p3.matrix() - p4.matrix())?;
    let h5 = range_basis(p5.matrix(), policy);
    let h6 = range_basis(p6.matrix(), policy);
    let ranks = [
        h1.rank(),
        h2.rank(),
        h3.rank(),
        h4.rank(),
        h5.rank(),
        h6.rank(),
    ];
    Ok(SixSpaceDecomposition {
        bases: [h1, h2, h3, h4, h5, h6],
        projectors: [p1, p2, p3, p4, p5, p6],
        ranks,
    })
}

/// Projection onto the closure of R(QP): Q - P_{R(Q) ∩ N(P)}.
pub fn projection_onto_range_qp(
    p: &Projector,
    q: &Projector,
    policy: RankPolicy,
) -> Result<Projector> {
    ensure_same_dim(p, q)?;
    let null_p = p.complement();
    let shared = intersect_ranges(q, &null_p, policy)?;
    let pr = project_onto(&shared)?;
    Projector::certify(q.matrix() - pr.matrix())
}

/// Orthogonal split of R(QP): (range of QP(I-Q), R(P) ∩ R(Q)).
pub fn range_qp_orthogonal_split(
    p: &Projector,
    q: &Projector,
    policy: RankPolicy,
) -> Result<(SubspaceBasis, SubspaceBasis)> {
    ensure_same_dim(p, q)?;
    let i = CMatrix::identity(p.dim(), p.dim());
    let prod = q.matrix() * p.matrix() * (i - q.matrix());
    let first = range_basis(&prod, policy);
    let second = intersect_ranges(p, q, policy)?;
    Ok((first, second))
}
