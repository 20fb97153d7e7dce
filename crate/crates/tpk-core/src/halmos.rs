//! The Halmos canonical form of two projections: the coordinate unitary
//! U_{P,Q} built from the six-space decomposition, the generic-part operator
//! Q0 on H5, the unitary U0: H6 -> H5, block reconstruction of P and Q, and
//! the intertwining unitary between the two resolvent angle sequences.

use crate::error::{Error, Result};
use crate::linalg::{
    hermitian_eigen, spectral_norm, sqrt_psd_contraction, CMatrix, RankPolicy,
};
use crate::subspaces::{six_space_decomposition, Projector, SixSpaceDecomposition};

/// Unitarity/orthonormality tolerance for the form's certificates.
pub const FORM_TOL: f64 = 1e-9;

/// The six-space data plus the generic-part operators of the canonical form.
#[derive(Debug, Clone)]
pub struct HalmosForm {
    pub decomposition: SixSpaceDecomposition,
    /// d x d unitary whose row blocks are the adjoints of the H1..H6 bases;
    /// conjugation by it block-diagonalizes P and Q.
    pub u_pq: CMatrix,
    /// r5 x r5 Hermitian contraction with spectrum in the open interval (0,1).
    pub q0: CMatrix,
    /// r5 x r6 unitary (r5 = r6 always holds).
    pub u0: CMatrix,
    pub tol: f64,
}

impl HalmosForm {
    pub fn dim(&self) -> usize {
        self.decomposition.dim()
    }

    pub fn generic_rank(&self) -> usize {
        self.decomposition.ranks[4]
    }

    /// True when the generic part is empty (P and Q commute).
    pub fn is_degenerate(&self) -> bool {
        self.generic_rank() == 0
    }

    /// Offsets of the six blocks in U_{P,Q} coordinates.
    pub fn offsets(&self) -> [usize; 6] {
        let r = &self.decomposition.ranks;
        let mut off = [0usize; 6];
        for i in 1..6 {
            off[i] = off[i - 1] + r[i - 1];
        }
        off
    }

    pub fn validate(&self) -> Result<()> {
        let d = self.dim();
        let res = spectral_norm(&(self.u_pq.adjoint() * &self.u_pq - CMatrix::identity(d, d)));
        if res > FORM_TOL {
            return Err(Error::InvalidForm(format!("u_pq unitarity residual {res:.3e}")));
        }
        let r5 = self.decomposition.ranks[4];
        let r6 = self.decomposition.ranks[5];
        if r5 != r6 {
            return Err(Error::InvalidForm(format!("r5 = {r5} != r6 = {r6}")));
        }
        if self.q0.nrows() != r5 || self.u0.nrows() != r5 || self.u0.ncols() != r6 {
            return Err(Error::InvalidForm("block shape mismatch".into()));
        }
        if r5 > 0 {
            let herm = spectral_norm(&(&self.q0 - self.q0.adjoint()));
            if herm > FORM_TOL {
                return Err(Error::InvalidForm(format!("q0 hermitian residual {herm:.3e}")));
            }
            let ortho = spectral_norm(
                &(self.u0.adjoint() * &self.u0 - CMatrix::identity(r6, r6)),
            );
            if ortho > FORM_TOL {
                return Err(Error::InvalidForm(format!("u0 unitarity residual {ortho:.3e}")));
            }
            let (vals, _) = hermitian_eigen(&self.q0);
            for &l in &vals {
                if l < FORM_TOL || l > 1.0 - FORM_TOL {
                    return Err(Error::InvalidForm(format!(
                        "q0 eigenvalue {l} outside the open interval (0,1)"
                    )));
                }
            }
        }
        Ok(())
    }
}

/// Compute the canonical form. Q0 is B5* Q B5; U0 is the unitary polar
/// factor of the off-diagonal block B5* Q B6 = Q0^{1/2}(I-Q0)^{1/2} U0.
pub fn halmos_decompose(p: &Projector, q: &Projector, policy: RankPolicy) -> Result<HalmosForm> {
    let decomposition = six_space_decomposition(p, q, policy)?;
    let d = decomposition.dim();
    let mut u_pq = CMatrix::zeros(d, d);
    let mut row = 0;
    for b in &decomposition.bases {
        let block = b.basis.adjoint();
        for i in 0..block.nrows() {
            for j in 0..d {
                u_pq[(row + i, j)] = block[(i, j)];
            }
        }
        row += block.nrows();
    }
    let b5 = &decomposition.bases[4].basis;
    let b6 = &decomposition.bases[5].basis;
    let q0 = b5.adjoint() * q.matrix() * b5;
    let q0 = (&q0 + q0.adjoint()).scale(0.5);
    let r5 = decomposition.ranks[4];
    let u0 = if r5 == 0 {
        CMatrix::zeros(0, 0)
    } else {
        // eigenvalues at the endpoints mean the rank policy misclassified an
        // intersection direction; surface that instead of patching
        let (vals, _) = hermitian_eigen(&q0);
        for &l in &vals {
            if l < FORM_TOL || l > 1.0 - FORM_TOL {
                return Err(Error::CertificateFailure(format!(
                    "q0 eigenvalue {l} within tolerance of {{0,1}}: H1..H4 misclassified"
                )));
            }
        }
        let off = b5.adjoint() * q.matrix() * b6;
        let svd = crate::linalg::jacobi_svd(&off);
        &svd.u * svd.v.adjoint()
    };
    let form = HalmosForm {
        decomposition,
        u_pq,
        q0,
        u0,
        tol: FORM_TOL,
    };
    form.validate()?;
    Ok(form)
}

/// Rebuild P and Q from the block form and conjugate back by U_{P,Q}.
pub fn reconstruct(form: &HalmosForm) -> Result<(Projector, Projector)> {
    form.validate()?;
    let d = form.dim();
    let r = &form.decomposition.ranks;
    let off = form.offsets();
    let one = num_complex::Complex::new(1.0, 0.0);

    let mut dp = CMatrix::zeros(d, d);
    for &block in &[0usize, 1, 4] {
        for i in 0..r[block] {
            dp[(off[block] + i, off[block] + i)] = one;
        }
    }

    let mut dq = CMatrix::zeros(d, d);
    for &block in &[0usize, 2] {
        for i in 0..r[block] {
            dq[(off[block] + i, off[block] + i)] = one;
        }
    }
    let r5 = r[4];
    if r5 > 0 {
        let i5 = CMatrix::identity(r5, r5);
        let root = sqrt_psd_contraction(&form.q0) * sqrt_psd_contraction(&(&i5 - &form.q0));
        let upper_right = &root * &form.u0;
        let lower_right = form.u0.adjoint() * (&i5 - &form.q0) * &form.u0;
        for i in 0..r5 {
            for j in 0..r5 {
                dq[(off[4] + i, off[4] + j)] = form.q0[(i, j)];
                dq[(off[4] + i, off[5] + j)] = upper_right[(i, j)];
                dq[(off[5] + i, off[4] + j)] = upper_right[(j, i)].conj();
                dq[(off[5] + i, off[5] + j)] = lower_right[(i, j)];
            }
        }
    }

    let p = form.u_pq.adjoint() * dp * &form.u_pq;
    let q = form.u_pq.adjoint() * dq * &form.u_pq;
    Ok((Projector::certify(p)?, Projector::certify(q)?))
}

/// Partial isometry U of the polar decomposition T = U (T*T)^{1/2}; U
/// vanishes on N(T).
pub fn polar_partial_isometry(t: &CMatrix, policy: RankPolicy) -> CMatrix {
    let (m, n) = (t.nrows(), t.ncols());
    if m == 0 || n == 0 {
        return CMatrix::zeros(m, n);
    }
    let svd = crate::linalg::jacobi_svd(t);
    let sigma_max = svd.singular_values.first().copied().unwrap_or(0.0);
    let mut out = CMatrix::zeros(m, n);
    for (k, &s) in svd.singular_values.iter().enumerate() {
        if policy.counts(s, sigma_max) {
            let uk = svd.u.column(k);
            let vk = svd.v.column(k);
            for i in 0..m {
                for j in 0..n {
                    out[(i, j)] += uk[i] * vk[j].conj();
                }
            }
        }
    }
    out
}

/// The d x d unitary (in original coordinates) intertwining the two angle
/// sequences: identity on H1..H4 and [[0, U0], [-U0*, 0]] on H5 + H6.
pub fn build_intertwiner(form: &HalmosForm) -> Result<CMatrix> {
    form.validate()?;
    let d = form.dim();
    let r = &form.decomposition.ranks;
    let off = form.offsets();
    let mut w = CMatrix::zeros(d, d);
    let one = num_complex::Complex::new(1.0, 0.0);
    for i in 0..off[4] {
        w[(i, i)] = one;
    }
    let r5 = r[4];
    for i in 0..r5 {
        for j in 0..r5 {
            w[(off[4] + i, off[5] + j)] = form.u0[(i, j)];
            w[(off[5] + i, off[4] + j)] = -form.u0[(j, i)].conj();
        }
    }
    Ok(form.u_pq.adjoint() * w * &form.u_pq)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::random::{generate_pair, haar_unitary, random_matrix, rng_from_seed, PairSpec};
    use crate::resolvent::{angle_operator_a, angle_operator_b};
    use crate::subspaces::gap;
    use num_complex::Complex;

    fn c64(re: f64) -> Complex<f64> {
        Complex::new(re, 0.0)
    }

    fn diag_p() -> Projector {
        let mut m = CMatrix::zeros(2, 2);
        m[(0, 0)] = c64(1.0);
        Projector::certify(m).unwrap()
    }

    fn line_q(theta: f64) -> Projector {
        let (s, co) = theta.sin_cos();
        let m = CMatrix::from_row_slice(
            2,
            2,
            &[c64(co * co), c64(s * co), c64(s * co), c64(s * s)],
        );
        Projector::certify(m).unwrap()
    }

    #[test]
    fn theta_family_q0_is_cos_squared() {
        let policy = RankPolicy::default();
        for theta in [
            std::f64::consts::FRAC_PI_6,
            std::f64::consts::FRAC_PI_4,
            std::f64::consts::FRAC_PI_3,
        ] {
            let form = halmos_decompose(&diag_p(), &line_q(theta), policy).unwrap();
            assert_eq!(form.generic_rank(), 1);
            let got = form.q0[(0, 0)].re;
            assert!(
                (got - theta.cos().powi(2)).abs() < 1e-12,
                "theta {theta}: q0 = {got}"
            );
        }
    }

    #[test]
    fn commuting_pair_has_empty_generic_part() {
        let policy = RankPolicy::default();
        let p = diag_p();
        let form = halmos_decompose(&p, &p, policy).unwrap();
        assert!(form.is_degenerate());
        assert_eq!(form.q0.nrows(), 0);
        let (rp, rq) = reconstruct(&form).unwrap();
        assert!(gap(&rp, &p) < 1e-10);
        assert!(gap(&rq, &p) < 1e-10);
    }

    #[test]
    fn round_trip_theta_fixture() {
        let policy = RankPolicy::default();
        let p = diag_p();
        let q = line_q(std::f64::consts::FRAC_PI_4);
        let form = halmos_decompose(&p, &q, policy).unwrap();
        let (rp, rq) = reconstruct(&form).unwrap();
        assert!(gap(&rp, &p) < 1e-10);
        assert!(gap(&rq, &q) < 1e-10);
    }

    #[test]
    fn round_trip_random_pairs() {
        let policy = RankPolicy::default();
        for seed in 0..20u64 {
            let (p, q) = generate_pair(&PairSpec {
                dim: 16,
                rank_p: 6,
                rank_q: 7,
                shared_rank: (seed % 3) as usize,
                seed,
            })
            .unwrap();
            let form = halmos_decompose(&p, &q, policy).unwrap();
            let (rp, rq) = reconstruct(&form).unwrap();
            assert!(gap(&rp, &p) < 1e-8);
            assert!(gap(&rq, &q) < 1e-8);
        }
    }

    #[test]
    fn block_structure_invariants() {
        let policy = RankPolicy::default();
        let (p, q) = generate_pair(&PairSpec {
            dim: 14,
            rank_p: 6,
            rank_q: 6,
            shared_rank: 1,
            seed: 77,
        })
        .unwrap();
        let form = halmos_decompose(&p, &q, policy).unwrap();
        let b5 = &form.decomposition.bases[4].basis;
        let b6 = &form.decomposition.bases[5].basis;
        let p5 = form.decomposition.projectors[4].matrix();
        let p6 = form.decomposition.projectors[5].matrix();

        // ranges of P5 Q and P6 Q span H5 and H6
        let r56 = crate::linalg::range_basis(&(p5 * q.matrix()), policy);
        assert!(
            crate::subspaces::basis_gap(&r56, &form.decomposition.bases[4]) < 1e-9
        );
        let r66 = crate::linalg::range_basis(&(p6 * q.matrix()), policy);
        assert!(
            crate::subspaces::basis_gap(&r66, &form.decomposition.bases[5]) < 1e-9
        );
        // ranges of Q P5 and Q P6 both span the range of QP(I-Q)
        let i = CMatrix::identity(14, 14);
        let target =
            crate::linalg::range_basis(&(q.matrix() * p.matrix() * (&i - q.matrix())), policy);
        let a = crate::linalg::range_basis(&(q.matrix() * p5), policy);
        let b = crate::linalg::range_basis(&(q.matrix() * p6), policy);
        assert!(crate::subspaces::basis_gap(&a, &target) < 1e-9);
        assert!(crate::subspaces::basis_gap(&b, &target) < 1e-9);

        // Q1 = U0* (I - Q0) U0
        let q1 = b6.adjoint() * q.matrix() * b6;
        let r5 = form.generic_rank();
        let i5 = CMatrix::identity(r5, r5);
        let want = form.u0.adjoint() * (&i5 - &form.q0) * &form.u0;
        assert!(spectral_norm(&(&q1 - want)) < 1e-9);

        // off-diagonal block B5* Q B6 = Q0^{1/2} U0 Q1^{1/2}
        let off = b5.adjoint() * q.matrix() * b6;
        let alt = sqrt_psd_contraction(&form.q0) * &form.u0 * sqrt_psd_contraction(&q1);
        assert!(spectral_norm(&(&off - alt)) < 1e-9);

        // spectra of q0 and I - q1 coincide as multisets
        let (ev0, _) = hermitian_eigen(&form.q0);
        let (mut ev1, _) = hermitian_eigen(&(&i5 - &q1));
        ev1.sort_by(|a, b| a.partial_cmp(b).unwrap());
        for (a, b) in ev0.iter().zip(ev1.iter()) {
            assert!((a - b).abs() < 1e-9);
        }
    }

    #[test]
    fn polar_of_unitary_is_itself() {
        let policy = RankPolicy::default();
        let mut rng = rng_from_seed(2);
        let u = haar_unitary(5, &mut rng);
        let got = polar_partial_isometry(&u, policy);
        assert!(spectral_norm(&(got - &u)) < 1e-10);
    }

    #[test]
    fn polar_of_diagonal() {
        let policy = RankPolicy::default();
        let mut t = CMatrix::zeros(2, 2);
        t[(0, 0)] = c64(3.0);
        let got = polar_partial_isometry(&t, policy);
        let mut want = CMatrix::zeros(2, 2);
        want[(0, 0)] = c64(1.0);
        assert!(spectral_norm(&(got - want)) < 1e-13);
    }

    #[test]
    fn polar_identities_rank_deficient() {
        let policy = RankPolicy::default();
        let mut rng = rng_from_seed(4);
        let t = random_matrix(6, 3, &mut rng) * random_matrix(3, 6, &mut rng);
        let u = polar_partial_isometry(&t, policy);
        let root = {
            // (T*T)^{1/2} via scaled contraction rooting
            let g = t.adjoint() * &t;
            let scale = spectral_norm(&g).max(1.0);
            sqrt_psd_contraction(&g.unscale(scale)).scale(scale.sqrt())
        };
        assert!(spectral_norm(&(&u * root - &t)) < 1e-9);
        let pr_range_tstar = crate::linalg::range_basis(&t.adjoint(), policy).projector_matrix();
        let pr_range_t = crate::linalg::range_basis(&t, policy).projector_matrix();
        assert!(spectral_norm(&(u.adjoint() * &u - pr_range_tstar)) < 1e-9);
        assert!(spectral_norm(&(&u * u.adjoint() - pr_range_t)) < 1e-9);
    }

    #[test]
    fn intertwiner_commuting_pair_is_identity() {
        let policy = RankPolicy::default();
        let p = diag_p();
        let form = halmos_decompose(&p, &p, policy).unwrap();
        let w = build_intertwiner(&form).unwrap();
        assert!(spectral_norm(&(&w - CMatrix::identity(2, 2))) < 1e-10);
        let a = angle_operator_a(&p, &p, 10).unwrap();
        let b = angle_operator_b(&p, &p, 10).unwrap();
        assert!(spectral_norm(&a) < 1e-12);
        assert!(spectral_norm(&b) < 1e-12);
    }

    #[test]
    fn intertwiner_theta_fixture() {
        let policy = RankPolicy::default();
        let p = diag_p();
        let q = line_q(std::f64::consts::FRAC_PI_4);
        let form = halmos_decompose(&p, &q, policy).unwrap();
        let w = build_intertwiner(&form).unwrap();
        let a = angle_operator_a(&p, &q, 10).unwrap();
        let b = angle_operator_b(&p, &q, 10).unwrap();
        let resid = spectral_norm(&(&w * a * w.adjoint() - b));
        assert!(resid < 1e-12, "residual {resid}");
    }

    #[test]
    fn intertwiner_random_pair() {
        let policy = RankPolicy::default();
        let (p, q) = generate_pair(&PairSpec {
            dim: 16,
            rank_p: 6,
            rank_q: 7,
            shared_rank: 1,
            seed: 13,
        })
        .unwrap();
        let form = halmos_decompose(&p, &q, policy).unwrap();
        let w = build_intertwiner(&form).unwrap();
        for n in [1u64, 100] {
            let a = angle_operator_a(&p, &q, n).unwrap();
            let b = angle_operator_b(&p, &q, n).unwrap();
            let resid = spectral_norm(&(&w * a * w.adjoint() - b));
            assert!(resid < 1e-9, "n = {n}, residual {resid}");
        }
    }
}
