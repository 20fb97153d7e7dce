//! Dense complex matrix primitives: adjoint, spectral norm, Moore-Penrose
//! pseudoinverse, range/null bases, and the numerical-rank policy shared by
//! every other module.

use nalgebra::DMatrix;
use num_complex::Complex;

use crate::error::{Error, Result};
use crate::subspaces::SubspaceBasis;

/// Universal carrier of operators and bases.
pub type CMatrix = DMatrix<Complex<f64>>;

/// Cosines within this tolerance of 1 are treated as intersection directions.
/// Shared by `intersect_ranges` (eigenvalue-2 eigenspace cut of P+Q) and the
/// principal-angle oracle so the two routes agree on near-degenerate inputs.
pub const UNITY_COS_TOL: f64 = 1e-8;

/// Numerical-rank policy: a singular value sigma counts toward rank iff
/// `sigma > max(absolute_floor, relative_threshold * sigma_max)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RankPolicy {
    pub relative_threshold: f64,
    pub absolute_floor: f64,
}

impl Default for RankPolicy {
    fn default() -> Self {
        RankPolicy {
            relative_threshold: 1e-10,
            absolute_floor: 1e-14,
        }
    }
}

impl RankPolicy {
    pub fn cutoff(&self, sigma_max: f64) -> f64 {
        self.absolute_floor.max(self.relative_threshold * sigma_max)
    }

    pub fn counts(&self, sigma: f64, sigma_max: f64) -> bool {
        sigma > self.cutoff(sigma_max)
    }
}

pub fn validate_finite(a: &CMatrix) -> Result<()> {
    if a.iter().all(|z| z.re.is_finite() && z.im.is_finite()) {
        Ok(())
    } else {
        Err(Error::BadMatrix("non-finite entry".into()))
    }
}

/// Conjugate transpose.
pub fn adjoint(a: &CMatrix) -> CMatrix {
    a.adjoint()
}

/// Thin singular value decomposition a = u diag(sigma) v^*. Columns of `u`
/// and `v` paired with exactly-zero singular values are zero vectors, not
/// basis completions.
#[derive(Debug, Clone)]
pub struct Svd {
    pub u: CMatrix,
    pub singular_values: Vec<f64>,
    pub v: CMatrix,
}

/// One-sided Jacobi SVD. Chosen over QR-iteration implementations for its
/// high relative accuracy on rank-deficient inputs; at the dimensions used
/// here the extra sweeps are cheap.
pub fn jacobi_svd(a: &CMatrix) -> Svd {
    let (m, n) = (a.nrows(), a.ncols());
    if m < n {
        let t = jacobi_svd(&a.adjoint());
        return Svd {
            u: t.v,
            singular_values: t.singular_values,
            v: t.u,
        };
    }
    let mut w = a.clone();
    let mut v = CMatrix::identity(n, n);
    let eps = 1e-15_f64;
    let max_sweeps = 60;
    for _ in 0..max_sweeps {
        let mut rotated = false;
        for j in 0..n {
            for k in (j + 1)..n {
                let mut ajj = 0.0;
                let mut akk = 0.0;
                let mut ajk = Complex::new(0.0, 0.0);
                for i in 0..m {
                    ajj += w[(i, j)].norm_sqr();
                    akk += w[(i, k)].norm_sqr();
                    ajk += w[(i, j)].conj() * w[(i, k)];
                }
                let off = ajk.norm();
                if off <= eps * (ajj * akk).sqrt() || off == 0.0 {
                    continue;
                }
                rotated = true;
                // absorb the phase so the 2x2 Gram block is real symmetric
                let phase = ajk / off;
                let tau = (akk - ajj) / (2.0 * off);
                let t = tau.signum() / (tau.abs() + (1.0 + tau * tau).sqrt());
                let cs = 1.0 / (1.0 + t * t).sqrt();
                let sn = t * cs;
                for i in 0..m {
                    let wj = w[(i, j)];
                    let wk = w[(i, k)] * phase.conj();
                    w[(i, j)] = wj.scale(cs) - wk.scale(sn);
                    w[(i, k)] = (wj.scale(sn) + wk.scale(cs)) * phase;
                }
                for i in 0..n {
                    let vj = v[(i, j)];
                    let vk = v[(i, k)] * phase.conj();
                    v[(i, j)] = vj.scale(cs) - vk.scale(sn);
                    v[(i, k)] = (vj.scale(sn) + vk.scale(cs)) * phase;
                }
            }
        }
        if !rotated {
            break;
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    let norms: Vec<f64> = (0..n).map(|j| w.column(j).norm()).collect();
    order.sort_by(|&i, &j| norms[j].partial_cmp(&norms[i]).unwrap());
    let mut u = CMatrix::zeros(m, n);
    let mut vs = CMatrix::zeros(n, n);
    let mut sigma = Vec::with_capacity(n);
    for (col, &j) in order.iter().enumerate() {
        let s = norms[j];
        sigma.push(s);
        if s > 0.0 {
            u.set_column(col, &w.column(j).unscale(s));
        }
        vs.set_column(col, &v.column(j));
    }
    Svd {
        u,
        singular_values: sigma,
        v: vs,
    }
}

/// Largest singular value. Zero for empty matrices.
pub fn spectral_norm(a: &CMatrix) -> f64 {
    if a.nrows() == 0 || a.ncols() == 0 {
        return 0.0;
    }
    jacobi_svd(a)
        .singular_values
        .first()
        .copied()
        .unwrap_or(0.0)
}

/// Moore-Penrose pseudoinverse with rank decisions per `policy`.
pub fn pinv(t: &CMatrix, policy: RankPolicy) -> CMatrix {
    let (m, n) = (t.nrows(), t.ncols());
    if m == 0 || n == 0 {
        return CMatrix::zeros(n, m);
    }
    let svd = jacobi_svd(t);
    let sigma_max = svd.singular_values.first().copied().unwrap_or(0.0);
    let mut x = CMatrix::zeros(n, m);
    for (k, &s) in svd.singular_values.iter().enumerate() {
        if policy.counts(s, sigma_max) {
            let vk = svd.v.column(k);
            let uk = svd.u.column(k);
            let scale = Complex::new(1.0 / s, 0.0);
            // x += (1/s) v_k u_k^*
            for i in 0..n {
                for j in 0..m {
                    x[(i, j)] += scale * vk[i] * uk[j].conj();
                }
            }
        }
    }
    x
}

/// Orthonormal basis of the column space of `t` at the policy's numerical
/// rank. Columns are ordered by descending singular value.
pub fn range_basis(t: &CMatrix, policy: RankPolicy) -> SubspaceBasis {
    let m = t.nrows();
    if m == 0 || t.ncols() == 0 {
        return SubspaceBasis::empty(m);
    }
    let svd = jacobi_svd(t);
    let sigma_max = svd.singular_values.first().copied().unwrap_or(0.0);
    let rank = svd
        .singular_values
        .iter()
        .filter(|&&s| policy.counts(s, sigma_max))
        .count();
    SubspaceBasis::from_columns_unchecked(svd.u.columns(0, rank).into_owned(), m)
}

/// Orthonormal basis of the kernel of `t`, computed from the Hermitian
/// eigendecomposition of t*t (an independent factorization from the SVD
/// route used by `range_basis`).
pub fn null_basis(t: &CMatrix, policy: RankPolicy) -> SubspaceBasis {
    let n = t.ncols();
    if n == 0 {
        return SubspaceBasis::empty(0);
    }
    if t.nrows() == 0 {
        return SubspaceBasis::from_columns_unchecked(CMatrix::identity(n, n), n);
    }
    let gram = t.adjoint() * t;
    let (eigvals, eigvecs) = hermitian_eigen(&gram);
    // squaring doubles the exponent of rounding noise, so the policy is
    // applied to the Gram eigenvalues themselves, not their square roots
    let lambda_max = eigvals.last().map(|&l| l.max(0.0)).unwrap_or(0.0);
    let mut cols: Vec<usize> = Vec::new();
    for (k, &l) in eigvals.iter().enumerate() {
        if !policy.counts(l.max(0.0), lambda_max) {
            cols.push(k);
        }
    }
    let mut b = CMatrix::zeros(n, cols.len());
    for (j, &k) in cols.iter().enumerate() {
        b.set_column(j, &eigvecs.column(k));
    }
    SubspaceBasis::from_columns_unchecked(b, n)
}

/// Eigendecomposition of a Hermitian matrix. Input is symmetrized first;
/// eigenvalues are returned in ascending order with matching eigenvectors.
pub fn hermitian_eigen(a: &CMatrix) -> (Vec<f64>, CMatrix) {
    let n = a.nrows();
    if n == 0 {
        return (Vec::new(), CMatrix::zeros(0, 0));
    }
    let sym = (a + a.adjoint()).scale(0.5);
    let eig = sym.symmetric_eigen();
    let mut idx: Vec<usize> = (0..n).collect();
    idx.sort_by(|&i, &j| eig.eigenvalues[i].partial_cmp(&eig.eigenvalues[j]).unwrap());
    let vals: Vec<f64> = idx.iter().map(|&i| eig.eigenvalues[i]).collect();
    let mut vecs = CMatrix::zeros(n, n);
    for (j, &i) in idx.iter().enumerate() {
        vecs.set_column(j, &eig.eigenvectors.column(i));
    }
    (vals, vecs)
}

/// Square root of a Hermitian PSD matrix whose spectrum lies in [0, 1].
/// Eigenvalues are clamped into [0, 1] before rooting to strip rounding noise.
pub fn sqrt_psd_contraction(a: &CMatrix) -> CMatrix {
    let (vals, vecs) = hermitian_eigen(a);
    let n = a.nrows();
    let mut out = CMatrix::zeros(n, n);
    for (k, &l) in vals.iter().enumerate() {
        let r = l.clamp(0.0, 1.0).sqrt();
        if r > 0.0 {
            let vk = vecs.column(k);
            for i in 0..n {
                for j in 0..n {
                    out[(i, j)] += Complex::new(r, 0.0) * vk[i] * vk[j].conj();
                }
            }
        }
    }
    out
}

/// Inverse of a Hermitian positive definite matrix via Cholesky.
pub fn hpd_inverse(a: &CMatrix) -> Result<CMatrix> {
    let sym = (a + a.adjoint()).scale(0.5);
    sym.cholesky()
        .map(|c| c.inverse())
        .ok_or(Error::NotPositive { min_eig: f64::NAN })
}

/// Orthonormalize the columns of `a` by modified Gram-Schmidt with
/// reorthogonalization, dropping columns that become numerically dependent.
pub fn orthonormalize(a: &CMatrix, policy: RankPolicy) -> CMatrix {
    let m = a.nrows();
    let scale = a
        .column_iter()
        .map(|c| c.norm())
        .fold(0.0_f64, f64::max);
    let mut kept: Vec<nalgebra::DVector<Complex<f64>>> = Vec::new();
    for j in 0..a.ncols() {
        let mut v = a.column(j).into_owned();
        for _pass in 0..2 {
            for q in &kept {
                let coeff = q.dotc(&v);
                v -= q * coeff;
            }
        }
        let norm = v.norm();
        if norm > policy.cutoff(scale) {
            kept.push(v.unscale(norm));
        }
    }
    let mut out = CMatrix::zeros(m, kept.len());
    for (j, q) in kept.iter().enumerate() {
        out.set_column(j, q);
    }
    out
}
