//! Friedrichs angle: c(M,N) = ||P_M P_N (I - P_{M∩N})||, its principal-angle
//! oracle, the norm identity between the two sides of the angle equation,
//! the complement duality c(M,N) = c(M⊥,N⊥), and the ||PQ|| < 1 predicates.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{range_basis, spectral_norm, CMatrix, RankPolicy, UNITY_COS_TOL};
use crate::subspaces::{intersect_ranges, project_onto, Projector, SubspaceBasis};

/// Rank cutoff for extracting the range of a certified projector: genuine
/// directions carry singular value 1, so anything below 1/2 is rounding
/// noise. The default floor of 1e-14 is too tight here — the complement of a
/// full projector is pure noise of norm ~1e-14 and must come out rank 0.
const PROJECTOR_RANGE_POLICY: RankPolicy = RankPolicy {
    relative_threshold: 1e-10,
    absolute_floor: 0.5,
};

/// Clamp a norm value into [0, 1]; excursions past the boundary by more
/// than 1e-12 indicate a genuine bug and are surfaced, not rounded away.
pub fn clamp_unit(x: f64) -> Result<f64> {
    if x > 1.0 + 1e-12 || x < -1e-12 {
        return Err(Error::CertificateFailure(format!(
            "norm value {x} escapes [0,1] beyond tolerance"
        )));
    }
    Ok(x.clamp(0.0, 1.0))
}

fn ensure_same_ambient(m: &SubspaceBasis, n: &SubspaceBasis) -> Result<()> {
    if m.ambient_dim != n.ambient_dim {
        return Err(Error::DimensionMismatch(format!(
            "ambient dims {} vs {}",
            m.ambient_dim, n.ambient_dim
        )));
    }
    Ok(())
}

/// c(M,N) = ||P_M P_N (I - P_{M∩N})||.
pub fn friedrichs_c(m: &SubspaceBasis, n: &SubspaceBasis, policy: RankPolicy) -> Result<f64> {
    ensure_same_ambient(m, n)?;
    let d = m.ambient_dim;
    let pm = project_onto(m)?;
    let pn = project_onto(n)?;
    let inter = intersect_ranges(&pm, &pn, policy)?;
    let co = CMatrix::identity(d, d) - inter.projector_matrix();
    clamp_unit(spectral_norm(&(pm.matrix() * pn.matrix() * co)))
}

/// Independent oracle: the singular values of B_M* B_N are the principal
/// angle cosines; cosines within tolerance of 1 are intersection directions
/// and are discarded, the largest remaining one is c(M,N).
pub fn friedrichs_c_oracle(
    m: &SubspaceBasis,
    n: &SubspaceBasis,
    _policy: RankPolicy,
) -> Result<f64> {
    ensure_same_ambient(m, n)?;
    if m.rank() == 0 || n.rank() == 0 {
        return Ok(0.0);
    }
    let cross = m.basis.adjoint() * &n.basis;
    let sv = crate::linalg::jacobi_svd(&cross).singular_values;
    let best = sv
        .iter()
        .cloned()
        .filter(|&s| s < 1.0 - UNITY_COS_TOL)
        .fold(0.0_f64, f64::max);
    clamp_unit(best)
}

/// Both sides of the norm identity plus the duality and oracle gaps.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct AngleReport {
    pub c_value: f64,
    pub c_oracle: f64,
    pub lhs_norm: f64,
    pub rhs_norm: f64,
    pub duality_gap: f64,
    pub intersection_rank: usize,
    pub kernel_intersection_rank: usize,
}

/// Compute ||PQ(I - P_{R(P)∩R(Q)})|| and ||(I-P)(I-Q)(I - P_{N(P)∩N(Q)})||
/// independently, together with the Friedrichs angle of the ranges and its
/// complement dual.
pub fn verify_norm_equation(
    p: &Projector,
    q: &Projector,
    policy: RankPolicy,
) -> Result<AngleReport> {
    if p.dim() != q.dim() {
        return Err(Error::DimensionMismatch(format!(
            "projector dims {} vs {}",
            p.dim(),
            q.dim()
        )));
    }
    let d = p.dim();
    let i = CMatrix::identity(d, d);
    let pc = p.complement();
    let qc = q.complement();

    let omega = intersect_ranges(p, q, policy)?;
    let omega_perp = intersect_ranges(&pc, &qc, policy)?;
    let lhs = spectral_norm(&(p.matrix() * q.matrix() * (&i - omega.projector_matrix())));
    let rhs =
        spectral_norm(&(pc.matrix() * qc.matrix() * (&i - omega_perp.projector_matrix())));

    let m = range_basis(p.matrix(), PROJECTOR_RANGE_POLICY);
    let n = range_basis(q.matrix(), PROJECTOR_RANGE_POLICY);
    let m_perp = range_basis(pc.matrix(), PROJECTOR_RANGE_POLICY);
    let n_perp = range_basis(qc.matrix(), PROJECTOR_RANGE_POLICY);
    let c_value = friedrichs_c(&m, &n, policy)?;
    let c_oracle = friedrichs_c_oracle(&m, &n, policy)?;
    let c_dual = friedrichs_c(&m_perp, &n_perp, policy)?;

    Ok(AngleReport {
        c_value,
        c_oracle,
        lhs_norm: clamp_unit(lhs)?,
        rhs_norm: clamp_unit(rhs)?,
        duality_gap: (c_value - c_dual).abs(),
        intersection_rank: omega.rank(),
        kernel_intersection_rank: omega_perp.rank(),
    })
}

/// ||PQ||, intersection triviality, and ||PQ - P_{R(P)∩R(Q)}||.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct PqNormPredicates {
    pub norm_pq: f64,
    pub trivial_intersection: bool,
    pub gap_norm: f64,
}

pub fn pq_norm_predicates(
    p: &Projector,
    q: &Projector,
    policy: RankPolicy,
) -> Result<PqNormPredicates> {
    let omega = intersect_ranges(p, q, policy)?;
    let norm_pq = clamp_unit(spectral_norm(&(p.matrix() * q.matrix())))?;
    let gap_norm = clamp_unit(spectral_norm(
        &(p.matrix() * q.matrix() - omega.projector_matrix()),
    ))?;
    Ok(PqNormPredicates {
        norm_pq,
        trivial_intersection: omega.rank() == 0,
        gap_norm,
    })
}
