//! Seeded generation of random matrices, Haar-distributed subspaces and
//! projector pairs with a planted intersection.

use nalgebra::DMatrix;
use num_complex::Complex;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::linalg::{orthonormalize, CMatrix, RankPolicy};
use crate::subspaces::{Projector, SubspaceBasis};

pub type TpkRng = ChaCha8Rng;

pub fn rng_from_seed(seed: u64) -> TpkRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Derive an independent per-trial seed from a master seed (splitmix64 mix).
pub fn split_seed(master: u64, trial: u64) -> u64 {
    let mut z = master
        .wrapping_add(trial.wrapping_mul(0x9e37_79b9_7f4a_7c15))
        .wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

pub fn complex_gaussian(rng: &mut TpkRng) -> Complex<f64> {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex::new(re, im) / 2.0_f64.sqrt()
}

/// Matrix with i.i.d. standard complex Gaussian entries.
pub fn random_matrix(rows: usize, cols: usize, rng: &mut TpkRng) -> CMatrix {
    DMatrix::from_fn(rows, cols, |_, _| complex_gaussian(rng))
}

/// Haar-distributed unitary: QR of a Gaussian matrix with the phases of the
/// R diagonal absorbed into Q.
pub fn haar_unitary(dim: usize, rng: &mut TpkRng) -> CMatrix {
    let g = random_matrix(dim, dim, rng);
    let qr = g.qr();
    let mut q = qr.q();
    let r = qr.r();
    for j in 0..dim {
        let d = r[(j, j)];
        let phase = if d.norm() > 0.0 {
            d / d.norm()
        } else {
            Complex::new(1.0, 0.0)
        };
        let col = q.column(j) * phase;
        q.set_column(j, &col);
    }
    q
}

/// Rotation-invariant random subspace of the given rank.
pub fn random_subspace(dim: usize, rank: usize, rng: &mut TpkRng) -> SubspaceBasis {
    assert!(rank <= dim);
    if rank == 0 {
        return SubspaceBasis::empty(dim);
    }
    let u = haar_unitary(dim, rng);
    SubspaceBasis::from_columns_unchecked(u.columns(0, rank).into_owned(), dim)
}

/// Specification of a random projector pair with an engineered intersection.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PairSpec {
    pub dim: usize,
    pub rank_p: usize,
    pub rank_q: usize,
    pub shared_rank: usize,
    pub seed: u64,
}

impl PairSpec {
    pub fn validate(&self) -> Result<()> {
        let ok = self.shared_rank <= self.rank_p.min(self.rank_q)
            && self.rank_p.max(self.rank_q) <= self.dim
            && self.rank_p + self.rank_q - self.shared_rank <= self.dim;
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidSpec(format!(
                "need shared <= min(rank_p, rank_q) <= dim and rank_p + rank_q - shared <= dim, got {self:?}"
            )))
        }
    }
}

/// Deterministic-in-seed projector pair whose ranges intersect in exactly
/// `shared_rank` dimensions (a common orthonormal block is planted, the
/// complements are independent Haar-random directions orthogonal to it).
pub fn generate_pair(spec: &PairSpec) -> Result<(Projector, Projector)> {
    spec.validate()?;
    let policy = RankPolicy::default();
    let mut rng = rng_from_seed(spec.seed);
    let d = spec.dim;
    let s = spec.shared_rank;
    let shared = random_subspace(d, s, &mut rng);
    let shared_proj = shared.projector_matrix();
    let co_proj = CMatrix::identity(d, d) - &shared_proj;

    let extend = |extra: usize, rng: &mut TpkRng| -> CMatrix {
        if extra == 0 {
            return CMatrix::zeros(d, 0);
        }
        let g = random_matrix(d, extra, rng);
        orthonormalize(&(&co_proj * g), policy)
    };

    let ap = extend(spec.rank_p - s, &mut rng);
    let aq = extend(spec.rank_q - s, &mut rng);
    let pm = &shared_proj + &ap * ap.adjoint();
    let qm = &shared_proj + &aq * aq.adjoint();
    Ok((Projector::certify(pm)?, Projector::certify(qm)?))
}
