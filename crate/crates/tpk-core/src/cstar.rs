//! Grid-sampled model of C([0,1]; M2(C)) acting on itself by left
//! multiplication, with the projection pair P = L_{p_tilde}, Q = L_{q_tilde}
//! whose range sum never reaches the unit: ||(P+Q)x - e|| >= 1 for every x.

use num_complex::Complex;

use crate::error::{Error, Result};
use crate::linalg::{jacobi_svd, pinv, spectral_norm, CMatrix, RankPolicy};
use crate::random::{complex_gaussian, TpkRng};

/// Continuous piecewise-linear (entrywise) 2x2 matrix function on [0,1],
/// stored by its node values.
#[derive(Debug, Clone)]
pub struct GridFunction {
    pub nodes: Vec<f64>,
    pub values: Vec<CMatrix>,
}

impl GridFunction {
    /// Uniform grid with node values from a formula.
    pub fn uniform<F: FnMut(f64) -> CMatrix>(n_nodes: usize, mut f: F) -> Result<Self> {
        if n_nodes < 2 {
            return Err(Error::BadGrid(n_nodes));
        }
        let h = 1.0 / (n_nodes - 1) as f64;
        let nodes: Vec<f64> = (0..n_nodes)
            .map(|k| if k == n_nodes - 1 { 1.0 } else { k as f64 * h })
            .collect();
        let values: Vec<CMatrix> = nodes.iter().map(|&t| f(t)).collect();
        let g = GridFunction { nodes, values };
        g.validate()?;
        Ok(g)
    }

    /// The unit e(t) = I at every node.
    pub fn unit(n_nodes: usize) -> Result<Self> {
        Self::uniform(n_nodes, |_| CMatrix::identity(2, 2))
    }

    pub fn zero(n_nodes: usize) -> Result<Self> {
        Self::uniform(n_nodes, |_| CMatrix::zeros(2, 2))
    }

    pub fn n_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn validate(&self) -> Result<()> {
        if self.nodes.len() < 2 || self.nodes.len() != self.values.len() {
            return Err(Error::BadGrid(self.nodes.len()));
        }
        if self.nodes[0] != 0.0 || *self.nodes.last().unwrap() != 1.0 {
            return Err(Error::GridMismatch("grid must span [0,1]".into()));
        }
        if !self.nodes.windows(2).all(|w| w[0] < w[1]) {
            return Err(Error::GridMismatch("nodes must strictly increase".into()));
        }
        for v in &self.values {
            if v.nrows() != 2 || v.ncols() != 2 {
                return Err(Error::BadMatrix("grid values must be 2x2".into()));
            }
            crate::linalg::validate_finite(v)?;
        }
        Ok(())
    }

    fn same_grid(&self, other: &GridFunction) -> Result<()> {
        if self.nodes.len() != other.nodes.len()
            || self
                .nodes
                .iter()
                .zip(&other.nodes)
                .any(|(a, b)| (a - b).abs() > 1e-15)
        {
            return Err(Error::GridMismatch(format!(
                "{} vs {} nodes",
                self.nodes.len(),
                other.nodes.len()
            )));
        }
        Ok(())
    }

    pub fn add(&self, other: &GridFunction) -> Result<GridFunction> {
        self.same_grid(other)?;
        Ok(GridFunction {
            nodes: self.nodes.clone(),
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(a, b)| a + b)
                .collect(),
        })
    }

    pub fn sub(&self, other: &GridFunction) -> Result<GridFunction> {
        self.same_grid(other)?;
        Ok(GridFunction {
            nodes: self.nodes.clone(),
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(a, b)| a - b)
                .collect(),
        })
    }

    /// Piecewise-linear evaluation between nodes.
    pub fn eval(&self, t: f64) -> CMatrix {
        let t = t.clamp(0.0, 1.0);
        let k = match self
            .nodes
            .binary_search_by(|x| x.partial_cmp(&t).unwrap())
        {
            Ok(k) => return self.values[k].clone(),
            Err(k) => k - 1,
        };
        let (t0, t1) = (self.nodes[k], self.nodes[k + 1]);
        let lam = (t - t0) / (t1 - t0);
        self.values[k].scale(1.0 - lam) + self.values[k + 1].scale(lam)
    }
}

/// max over nodes of the 2x2 spectral norm. For piecewise-linear functions
/// this IS the sup over [0,1]: the norm is convex along each segment.
pub fn sup_norm(x: &GridFunction) -> f64 {
    x.values.iter().map(|v| spectral_norm(v)).fold(0.0, f64::max)
}

/// Certified upper bound on the sup of an underlying function with
/// entrywise Lipschitz constant `lipschitz` that the grid merely samples:
/// node maximum plus the half-segment excursion bound.
pub fn sup_norm_certified(x: &GridFunction, lipschitz: f64) -> f64 {
    let h = x
        .nodes
        .windows(2)
        .map(|w| w[1] - w[0])
        .fold(0.0, f64::max);
    // entrywise Lipschitz L gives a spectral-norm Lipschitz constant <= 2L
    // for 2x2 matrices (Frobenius dominates spectral)
    sup_norm(x) + lipschitz * h
}

/// The pair p_tilde = diag(1,0), q_tilde(t) = rotation of diag(1,0) by the
/// angle pi t / 2, sampled on a uniform grid.
#[derive(Debug, Clone)]
pub struct ExampleOperators {
    pub p_tilde: GridFunction,
    pub q_tilde: GridFunction,
    pub n_nodes: usize,
}

fn c64(re: f64) -> Complex<f64> {
    Complex::new(re, 0.0)
}

pub fn build_example(n_nodes: usize) -> Result<ExampleOperators> {
    if n_nodes < 2 {
        return Err(Error::BadGrid(n_nodes));
    }
    let p_tilde = GridFunction::uniform(n_nodes, |_| {
        CMatrix::from_row_slice(2, 2, &[c64(1.0), c64(0.0), c64(0.0), c64(0.0)])
    })?;
    let q_tilde = GridFunction::uniform(n_nodes, |t| {
        let (s, c) = (std::f64::consts::FRAC_PI_2 * t).sin_cos();
        CMatrix::from_row_slice(2, 2, &[c64(c * c), c64(s * c), c64(s * c), c64(s * s)])
    })?;
    Ok(ExampleOperators {
        p_tilde,
        q_tilde,
        n_nodes,
    })
}

/// L_a(x) = a x, node-wise.
pub fn apply_left(a: &GridFunction, x: &GridFunction) -> Result<GridFunction> {
    a.same_grid(x)?;
    Ok(GridFunction {
        nodes: a.nodes.clone(),
        values: a
            .values
            .iter()
            .zip(&x.values)
            .map(|(m, v)| m * v)
            .collect(),
    })
}

/// Which of the four projection pairs (P or I-P, Q or I-Q) to probe.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Combo {
    pub flip_p: bool,
    pub flip_q: bool,
}

impl Combo {
    pub const ALL: [Combo; 4] = [
        Combo { flip_p: false, flip_q: false },
        Combo { flip_p: false, flip_q: true },
        Combo { flip_p: true, flip_q: false },
        Combo { flip_p: true, flip_q: true },
    ];

    pub fn label(&self) -> &'static str {
        match (self.flip_p, self.flip_q) {
            (false, false) => "p_q",
            (false, true) => "p_cq",
            (true, false) => "cp_q",
            (true, true) => "cp_cq",
        }
    }
}

/// The node-wise sum of the (possibly complemented) pair.
fn combo_sum(ex: &ExampleOperators, combo: Combo) -> GridFunction {
    let i2 = CMatrix::identity(2, 2);
    GridFunction {
        nodes: ex.p_tilde.nodes.clone(),
        values: ex
            .p_tilde
            .values
            .iter()
            .zip(&ex.q_tilde.values)
            .map(|(p, q)| {
                let a = if combo.flip_p { &i2 - p } else { p.clone() };
                let b = if combo.flip_q { &i2 - q } else { q.clone() };
                a + b
            })
            .collect(),
    }
}

/// ||(P+Q)x - e|| for the chosen combination; >= 1 - 1e-12 for every x
/// because one endpoint node annihilates a fixed row of the sum.
pub fn distance_to_unit_combo(ex: &ExampleOperators, x: &GridFunction, combo: Combo) -> Result<f64> {
    let sum = combo_sum(ex, combo);
    let prod = apply_left(&sum, x)?;
    let e = GridFunction::unit(ex.n_nodes)?;
    Ok(sup_norm(&prod.sub(&e)?))
}

pub fn distance_to_unit(ex: &ExampleOperators, x: &GridFunction) -> Result<f64> {
    distance_to_unit_combo(ex, x, Combo { flip_p: false, flip_q: false })
}

/// Node-wise least-squares minimizer of ||M(t) v - I||: v(t) = M(t)^+.
pub fn least_squares_adversary(ex: &ExampleOperators, combo: Combo, policy: RankPolicy) -> GridFunction {
    let sum = combo_sum(ex, combo);
    GridFunction {
        nodes: sum.nodes.clone(),
        values: sum.values.iter().map(|m| pinv(m, policy)).collect(),
    }
}

/// Per-node kernel dimensions of P~(t)+Q~(t) and the hat-element bump
/// ratio exhibiting the non-closed range of P+Q.
#[derive(Debug, Clone)]
pub struct KernelProbe {
    pub pointwise_kernel_dims: Vec<usize>,
    pub bump_ratio: f64,
}

pub fn kernel_probe(ex: &ExampleOperators, policy: RankPolicy) -> KernelProbe {
    let sum = combo_sum(ex, Combo { flip_p: false, flip_q: false });
    let dims: Vec<usize> = sum
        .values
        .iter()
        .map(|m| {
            let sv = jacobi_svd(m).singular_values;
            let smax = sv.first().copied().unwrap_or(0.0);
            2 - sv.iter().filter(|&&s| policy.counts(s, smax)).count()
        })
        .collect();

    // hat element: x_h(0) = [[0,0],[1,0]], zero from the first interior node
    // on. The product (P+Q)x_h vanishes at every node (the t=0 sum kills
    // row 2), so its size lives strictly inside the first segment and must
    // be subsampled there.
    let n = ex.n_nodes;
    let mut xh = GridFunction::zero(n).expect("n >= 2");
    xh.values[0] = CMatrix::from_row_slice(2, 2, &[c64(0.0), c64(0.0), c64(1.0), c64(0.0)]);
    let t1 = ex.p_tilde.nodes[1];
    let mut peak = 0.0_f64;
    let samples = 64;
    for j in 0..=samples {
        let t = t1 * j as f64 / samples as f64;
        let m = sum.eval(t);
        let v = xh.eval(t);
        peak = peak.max(spectral_norm(&(m * v)));
    }
    let denom = sup_norm(&xh);
    KernelProbe {
        pointwise_kernel_dims: dims,
        bump_ratio: peak / denom,
    }
}

/// Seeded random element: i.i.d. complex Gaussian entries at every node,
/// scaled so typical sup norms are O(scale).
pub fn random_grid_function(n_nodes: usize, scale: f64, rng: &mut TpkRng) -> Result<GridFunction> {
    GridFunction::uniform(n_nodes, |_| {
        CMatrix::from_fn(2, 2, |_, _| complex_gaussian(rng) * scale)
    })
}
