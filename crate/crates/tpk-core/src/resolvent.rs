//! Resolvent machinery: Tn = (P + Q + I/n)^-1, the sequences An, Bn, Cn,
//! an iterative intersection-projector algorithm with convergence traces,
//! and the norm-limit check lim ||S Tn|| = ||S P_range(T)||.

use crate::error::{Error, Result};
use crate::linalg::{
    hermitian_eigen, hpd_inverse, range_basis, spectral_norm, CMatrix, RankPolicy,
};
use crate::subspaces::{intersect_ranges, project_onto, Projector};

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

/// Tn = (P + Q + I/n)^-1, Hermitian positive definite with ||Tn|| <= n.
pub fn resolvent_tn(p: &Projector, q: &Projector, n: u64) -> Result<CMatrix> {
    ensure_same_dim(p, q)?;
    assert!(n >= 1);
    let d = p.dim();
    let shifted = p.matrix() + q.matrix() + CMatrix::identity(d, d).scale(1.0 / n as f64);
    hpd_inverse(&shifted)
}

/// An = P - P Tn P, Bn = P Tn Q, Cn = Q - Q Tn Q.
pub fn abc_sequences(p: &Projector, q: &Projector, n: u64) -> Result<(CMatrix, CMatrix, CMatrix)> {
    let tn = resolvent_tn(p, q, n)?;
    let a = p.matrix() - p.matrix() * &tn * p.matrix();
    let b = p.matrix() * &tn * q.matrix();
    let c = q.matrix() - q.matrix() * &tn * q.matrix();
    Ok((a, b, c))
}

/// An = PQ(2I-P-Q)(2I-P-Q + I/n)^-1 in the original coordinates.
pub fn angle_operator_a(p: &Projector, q: &Projector, n: u64) -> Result<CMatrix> {
    ensure_same_dim(p, q)?;
    let d = p.dim();
    let i = CMatrix::identity(d, d);
    let two_c = i.scale(2.0) - p.matrix() - q.matrix();
    let inv = hpd_inverse(&(&two_c + i.scale(1.0 / n as f64)))?;
    Ok(p.matrix() * q.matrix() * two_c * inv)
}

/// Bn = (I-P)(I-Q)(P+Q)(P+Q + I/n)^-1 in the original coordinates.
pub fn angle_operator_b(p: &Projector, q: &Projector, n: u64) -> Result<CMatrix> {
    ensure_same_dim(p, q)?;
    let d = p.dim();
    let i = CMatrix::identity(d, d);
    let sum = p.matrix() + q.matrix();
    let inv = hpd_inverse(&(&sum + i.scale(1.0 / n as f64)))?;
    Ok((&i - p.matrix()) * (&i - q.matrix()) * sum * inv)
}

/// One row of a resolvent convergence trace.
#[derive(Debug, Clone, Copy)]
pub struct TraceRecord {
    pub n: u64,
    pub err_to_oracle: f64,
    pub diff_ab: f64,
    pub diff_bc: f64,
    pub norm_b: f64,
}

/// Convergence trace of the iterative intersection projector.
#[derive(Debug, Clone)]
pub struct ResolventTrace {
    pub records: Vec<TraceRecord>,
    pub converged: bool,
    pub final_projector: Projector,
}

/// Iterate 2Bn over a geometric schedule n = 2^k until successive iterates
/// differ by less than tol/2, then spectrally round the limit candidate to a
/// certified projector.
pub fn intersection_projector_iterative(
    p: &Projector,
    q: &Projector,
    tol: f64,
    n_max: u64,
) -> Result<(Projector, ResolventTrace)> {
    ensure_same_dim(p, q)?;
    assert!(tol > 0.0 && n_max >= 1);
    let policy = RankPolicy::default();
    let oracle = project_onto(&intersect_ranges(p, q, policy)?)?;
    let k_max = (n_max as f64).log2().ceil() as u32;

    let mut records = Vec::new();
    let mut prev: Option<CMatrix> = None;
    let mut converged = false;
    let mut last = CMatrix::zeros(p.dim(), p.dim());
    for k in 0..=k_max {
        let n = 1u64 << k;
        let (a, b, c) = abc_sequences(p, q, n)?;
        let two_b = b.scale(2.0);
        records.push(TraceRecord {
            n,
            err_to_oracle: spectral_norm(&(&two_b - oracle.matrix())),
            diff_ab: spectral_norm(&(&a - &b)),
            diff_bc: spectral_norm(&(&b - &c)),
            norm_b: spectral_norm(&b),
        });
        let step = prev
            .as_ref()
            .map(|pm| spectral_norm(&(&two_b - pm)));
        prev = Some(two_b.clone());
        last = two_b;
        if let Some(s) = step {
            if s < tol / 2.0 {
                converged = true;
                break;
            }
        }
    }
    let rounded = Projector::certify(Projector::spectral_round(&last))?;
    let trace = ResolventTrace {
        records,
        converged,
        final_projector: rounded.clone(),
    };
    if converged {
        Ok((rounded, trace))
    } else {
        Err(Error::NoConvergence(Box::new(trace)))
    }
}

/// Result of the norm-limit check for lim ||S Tn|| = ||S P_range(T)||,
/// with Tn = (T + I/n)^-1 T for positive T.
#[derive(Debug, Clone, Copy)]
pub struct StrictLimitReport {
    pub limit_estimate: f64,
    pub target: f64,
    /// ||S Tn|| was non-decreasing along the schedule (within 1e-12 slack).
    pub monotone: bool,
}

pub fn strict_limit_norm_check(
    s: &CMatrix,
    t: &CMatrix,
    policy: RankPolicy,
) -> Result<StrictLimitReport> {
    if s.ncols() != t.nrows() || t.nrows() != t.ncols() {
        return Err(Error::DimensionMismatch(format!(
            "S is {}x{}, T is {}x{}",
            s.nrows(),
            s.ncols(),
            t.nrows(),
            t.ncols()
        )));
    }
    let herm = spectral_norm(&(t - t.adjoint()));
    let (vals, _) = hermitian_eigen(t);
    let min_eig = vals.first().copied().unwrap_or(0.0);
    if herm > 1e-10 || min_eig < -1e-10 {
        return Err(Error::NotPositive {
            min_eig: if herm > 1e-10 { f64::NAN } else { min_eig },
        });
    }
    let d = t.nrows();
    let mut monotone = true;
    let mut prev = f64::NEG_INFINITY;
    let mut limit_estimate = 0.0;
    for k in 0..=20u32 {
        let n = 1u64 << k;
        let inv = hpd_inverse(&(t + CMatrix::identity(d, d).scale(1.0 / n as f64)))?;
        let norm = spectral_norm(&(s * inv * t));
        if norm < prev - 1e-12 {
            monotone = false;
        }
        prev = norm;
        limit_estimate = norm;
    }
    let range = range_basis(t, policy);
    let target = spectral_norm(&(s * range.projector_matrix()));
    Ok(StrictLimitReport {
        limit_estimate,
        target,
        monotone,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::random::{generate_pair, random_matrix, rng_from_seed, PairSpec};
    use num_complex::Complex;

    fn line_projector(theta: f64) -> Projector {
        let (s, co) = theta.sin_cos();
        let m = CMatrix::from_row_slice(
            2,
            2,
            &[
                Complex::new(co * co, 0.0),
                Complex::new(s * co, 0.0),
                Complex::new(s * co, 0.0),
                Complex::new(s * s, 0.0),
            ],
        );
        Projector::certify(m).unwrap()
    }

    #[test]
    fn tn_for_equal_identity_projections() {
        // (P + Q + I/n) x = (2 + 1/n) x on the intersection
        let p = Projector::identity(3);
        for n in [1u64, 10, 1000] {
            let tn = resolvent_tn(&p, &p, n).unwrap();
            let want = CMatrix::identity(3, 3).scale(1.0 / (2.0 + 1.0 / n as f64));
            assert!(spectral_norm(&(tn - want)) < 1e-12);
        }
    }

    #[test]
    fn tn_for_zero_projections() {
        let z = Projector::zero(2);
        let tn = resolvent_tn(&z, &z, 5).unwrap();
        assert!(spectral_norm(&(tn - CMatrix::identity(2, 2).scale(5.0))) < 1e-11);
    }

    #[test]
    fn tn_inverse_residual() {
        let (p, q) = generate_pair(&PairSpec {
            dim: 8,
            rank_p: 3,
            rank_q: 4,
            shared_rank: 1,
            seed: 2,
        })
        .unwrap();
        let n = 1000;
        let tn = resolvent_tn(&p, &q, n).unwrap();
        let shifted =
            p.matrix() + q.matrix() + CMatrix::identity(8, 8).scale(1.0 / n as f64);
        let res = spectral_norm(&(shifted * &tn - CMatrix::identity(8, 8)));
        assert!(res < 1e-11, "residual {res}");
        assert!(spectral_norm(&tn) <= n as f64 * (1.0 + 1e-12));
    }

    #[test]
    fn abc_scalar_arithmetic() {
        let p = Projector::identity(2);
        let n = 7u64;
        let (a, b, c) = abc_sequences(&p, &p, n).unwrap();
        let coef = 1.0 / (2.0 + 1.0 / n as f64);
        let want = CMatrix::identity(2, 2).scale(coef);
        assert!(spectral_norm(&(&b - &want)) < 1e-12);
        let two_b = b.scale(2.0);
        let scalar = 2.0 * n as f64 / (2.0 * n as f64 + 1.0);
        assert!(spectral_norm(&(two_b - CMatrix::identity(2, 2).scale(scalar))) < 1e-12);
        // An = Cn = P - P Tn P = (1 - coef) P here; Hermitian within 1e-11
        assert!(spectral_norm(&(&a - a.adjoint())) < 1e-11);
        assert!(spectral_norm(&(&c - c.adjoint())) < 1e-11);
    }

    #[test]
    fn abc_orthogonal_ranges_bn_vanishes() {
        let mut pm = CMatrix::zeros(2, 2);
        pm[(0, 0)] = Complex::new(1.0, 0.0);
        let mut qm = CMatrix::zeros(2, 2);
        qm[(1, 1)] = Complex::new(1.0, 0.0);
        let p = Projector::certify(pm).unwrap();
        let q = Projector::certify(qm).unwrap();
        for n in [1u64, 16, 256] {
            let (_, b, _) = abc_sequences(&p, &q, n).unwrap();
            assert!(spectral_norm(&b) < 1e-13);
        }
    }

    #[test]
    fn abc_difference_decays() {
        let p = line_projector(0.0);
        let q = line_projector(std::f64::consts::FRAC_PI_4);
        let n = 100u64;
        let (a, b, _) = abc_sequences(&p, &q, n).unwrap();
        assert!(spectral_norm(&(a - b)) < 3.0 / n as f64);
    }

    #[test]
    fn iterative_projector_equal_case() {
        let (p, _) = generate_pair(&PairSpec {
            dim: 6,
            rank_p: 3,
            rank_q: 3,
            shared_rank: 3,
            seed: 5,
        })
        .unwrap();
        let (proj, trace) = intersection_projector_iterative(&p, &p, 1e-6, 1 << 20).unwrap();
        assert!(trace.converged);
        assert!(crate::subspaces::gap(&proj, &p) < 1e-8);
    }

    #[test]
    fn iterative_projector_trivial_intersection() {
        let (p, q) = generate_pair(&PairSpec {
            dim: 8,
            rank_p: 3,
            rank_q: 4,
            shared_rank: 0,
            seed: 11,
        })
        .unwrap();
        let (proj, _) = intersection_projector_iterative(&p, &q, 1e-4, 1 << 20).unwrap();
        assert_eq!(proj.rank(), 0);
    }

    #[test]
    fn iterative_projector_planted_line() {
        let policy = RankPolicy::default();
        let (p, q) = generate_pair(&PairSpec {
            dim: 8,
            rank_p: 4,
            rank_q: 3,
            shared_rank: 1,
            seed: 23,
        })
        .unwrap();
        let (proj, trace) = intersection_projector_iterative(&p, &q, 1e-4, 1 << 20).unwrap();
        let oracle = project_onto(&intersect_ranges(&p, &q, policy).unwrap()).unwrap();
        assert!(crate::subspaces::gap(&proj, &oracle) < 1e-8);
        // ||Bn|| < 1 at every step; the oracle error can rise while 2Bn is
        // still building mass on the intersection, but never past n = 2
        let mut prev_err = f64::INFINITY;
        for r in &trace.records {
            assert!(r.norm_b < 1.0);
            if r.n >= 4 {
                assert!(r.err_to_oracle <= prev_err + 1e-12);
            }
            prev_err = r.err_to_oracle;
        }
    }

    #[test]
    fn scalar_law_on_intersection_vectors() {
        let policy = RankPolicy::default();
        let (p, q) = generate_pair(&PairSpec {
            dim: 8,
            rank_p: 4,
            rank_q: 3,
            shared_rank: 2,
            seed: 31,
        })
        .unwrap();
        let basis = intersect_ranges(&p, &q, policy).unwrap();
        // forward error of the resolvent solve scales like n^2 * eps once
        // multiplied by (2n+1), so the law is only meaningful at moderate n
        for n in [1u64, 64, 512] {
            let (_, b, _) = abc_sequences(&p, &q, n).unwrap();
            for j in 0..basis.rank() {
                let x = basis.basis.column(j).into_owned();
                let resid = (b.scale(2.0) * &x - &x).norm() * (2.0 * n as f64 + 1.0);
                assert!((resid - 1.0).abs() < 1e-9, "law residual {resid}");
            }
        }
    }

    #[test]
    fn strict_limit_projector_case() {
        let policy = RankPolicy::default();
        let p = Projector::identity(4);
        let s = CMatrix::identity(4, 4);
        let rep = strict_limit_norm_check(&s, p.matrix(), policy).unwrap();
        assert!(rep.monotone);
        assert!((rep.target - 1.0).abs() < 1e-12);
        assert!((rep.limit_estimate - rep.target).abs() < 1e-6);
    }

    #[test]
    fn strict_limit_zero_operator() {
        let policy = RankPolicy::default();
        let mut rng = rng_from_seed(3);
        let s = random_matrix(4, 4, &mut rng);
        let rep = strict_limit_norm_check(&s, &CMatrix::zeros(4, 4), policy).unwrap();
        assert_eq!(rep.limit_estimate, 0.0);
        assert_eq!(rep.target, 0.0);
    }

    #[test]
    fn strict_limit_random_psd() {
        let policy = RankPolicy::default();
        let mut rng = rng_from_seed(8);
        let s = random_matrix(8, 8, &mut rng);
        let g = random_matrix(8, 3, &mut rng);
        let t = &g * g.adjoint();
        let rep = strict_limit_norm_check(&s, &t, policy).unwrap();
        assert!(rep.monotone);
        assert!((rep.limit_estimate - rep.target).abs() < 1e-6);
    }

    #[test]
    fn strict_limit_rejects_non_psd() {
        let policy = RankPolicy::default();
        let t = CMatrix::identity(3, 3).scale(-1.0);
        assert!(matches!(
            strict_limit_norm_check(&CMatrix::identity(3, 3), &t, policy),
            Err(Error::NotPositive { .. })
        ));
    }
}
