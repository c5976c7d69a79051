//! Assembly and regularized solution of the rectangular least-squares system.
//!
//! Every translate carries the normalization `ε^{d/2}` and every row of the
//! system (matrix and right-hand side alike) is multiplied by `√(|Ω̂|/M)`, where
//! `|Ω̂|` is the extension half-width `T` in 1D and the bounding-box area in 2D.
//! With this scaling the discrete norm over the samples behaves like a Riemann
//! sum of the continuous one.
//!
//! Two regularized solvers are provided: a truncated SVD, which discards singular
//! values below the threshold, and a column-pivoted QR that stops once the
//! remaining column norms fall below the analogous threshold.

use faer::{Mat, MatRef};

use crate::error::{invalid, Error, Result};
use crate::geometry::NodeSet;
use crate::kernels::{norm_factor, squared_distance, RbfKernel};

/// How the threshold `τ` is compared with the singular values.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum ThresholdMode {
    /// Discard `σ_i ≤ τ σ₁`.
    #[default]
    RelativeToSigma1,
    /// Discard `σ_i ≤ τ`.
    Absolute,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum Factorization {
    #[default]
    TruncatedSvd,
    PivotedQr,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SolverConfig {
    pub tau: f64,
    pub threshold_mode: ThresholdMode,
    pub factorization: Factorization,
}

impl SolverConfig {
    /// Truncated SVD with a threshold relative to the largest singular value.
    pub fn new(tau: f64) -> Self {
        SolverConfig { tau, threshold_mode: ThresholdMode::default(), factorization: Factorization::default() }
    }

    pub fn with_mode(mut self, mode: ThresholdMode) -> Self {
        self.threshold_mode = mode;
        self
    }

    pub fn with_factorization(mut self, factorization: Factorization) -> Self {
        self.factorization = factorization;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.tau > 0.0 && self.tau.is_finite() {
            Ok(())
        } else {
            Err(invalid(format!("threshold must be positive, got {}", self.tau)))
        }
    }

    fn cutoff(&self, largest: f64) -> f64 {
        match self.threshold_mode {
            ThresholdMode::RelativeToSigma1 => self.tau * largest,
            ThresholdMode::Absolute => self.tau,
        }
    }
}

/// Everything needed to evaluate an expansion built on a system.
#[derive(Clone, Debug, PartialEq)]
pub struct SystemMeta {
    pub kernel: RbfKernel,
    pub epsilon: f64,
    pub centers: NodeSet,
    /// Row blocks in the order they appear in the matrix.
    pub samples: Vec<NodeSet>,
}

impl SystemMeta {
    pub fn dim(&self) -> usize {
        self.centers.dim()
    }

    /// Normalized translate `n` at `x`; dimension checks are the caller's job.
    #[inline]
    pub(crate) fn basis(&self, n: usize, x: &[f64]) -> f64 {
        let r2 = squared_distance(x, self.centers.point(n));
        norm_factor(self.epsilon, self.dim()) * self.kernel.profile(self.epsilon * r2.sqrt())
    }
}

#[derive(Clone, Debug)]
pub struct LsSystem {
    matrix: Mat<f64>,
    rhs: Vec<f64>,
    row_scale: f64,
    meta: SystemMeta,
}

impl LsSystem {
    /// Wraps an already assembled matrix. The row count must match the sample blocks.
    pub fn from_parts(matrix: Mat<f64>, rhs: Vec<f64>, row_scale: f64, meta: SystemMeta) -> Result<Self> {
        let rows: usize = meta.samples.iter().map(NodeSet::len).sum();
        if matrix.nrows() != rows || rhs.len() != rows {
            return Err(invalid(format!(
                "matrix is {}x{} with {} rhs entries, but there are {rows} samples",
                matrix.nrows(),
                matrix.ncols(),
                rhs.len()
            )));
        }
        if matrix.ncols() != meta.centers.len() {
            return Err(invalid("matrix column count does not match the number of centers"));
        }
        Ok(LsSystem { matrix, rhs, row_scale, meta })
    }

    pub fn matrix(&self) -> MatRef<'_, f64> {
        self.matrix.as_ref()
    }

    pub fn rhs(&self) -> &[f64] {
        &self.rhs
    }

    pub fn row_scale(&self) -> f64 {
        self.row_scale
    }

    pub fn meta(&self) -> &SystemMeta {
        &self.meta
    }

    pub fn nrows(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn ncols(&self) -> usize {
        self.matrix.ncols()
    }

    /// `Aλ - b`.
    pub fn residual(&self, coefficients: &[f64]) -> Vec<f64> {
        residual(self.matrix.as_ref(), &self.rhs, coefficients)
    }
}

fn residual(a: MatRef<'_, f64>, b: &[f64], x: &[f64]) -> Vec<f64> {
    let mut r: Vec<f64> = b.iter().map(|v| -v).collect();
    for (j, &xj) in x.iter().enumerate() {
        if xj == 0.0 {
            continue;
        }
        for (i, ri) in r.iter_mut().enumerate() {
            *ri += a[(i, j)] * xj;
        }
    }
    r
}

fn norm2(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Builds `A[m][n] = √(measure/M) ε^{d/2} φ(ε‖x_m − ξ_n‖)` and `b[m] = √(measure/M) f(x_m)`.
///
/// A non-finite value of `f` at a sample is reported with the sample index.
pub fn assemble<F>(
    centers: &NodeSet,
    samples: &NodeSet,
    kernel: RbfKernel,
    epsilon: f64,
    f: F,
    measure: f64,
) -> Result<LsSystem>
where
    F: Fn(&[f64]) -> f64,
{
    if centers.is_empty() || samples.is_empty() {
        return Err(invalid("centers and samples must be non-empty"));
    }
    if centers.dim() != samples.dim() {
        return Err(invalid("centers and samples have different dimensions"));
    }
    if !(epsilon > 0.0 && epsilon.is_finite()) {
        return Err(invalid(format!("shape parameter must be positive, got {epsilon}")));
    }
    if !(measure > 0.0 && measure.is_finite()) {
        return Err(invalid(format!("domain measure must be positive, got {measure}")));
    }
    let m = samples.len();
    let row_scale = (measure / m as f64).sqrt();
    let mut rhs = Vec::with_capacity(m);
    for (i, x) in samples.iter().enumerate() {
        let v = f(x);
        if !v.is_finite() {
            return Err(Error::SampleEvaluation { index: i, value: v });
        }
        rhs.push(row_scale * v);
    }
    let meta = SystemMeta { kernel, epsilon, centers: centers.clone(), samples: vec![samples.clone()] };
    let matrix = Mat::from_fn(m, centers.len(), |i, j| row_scale * meta.basis(j, samples.point(i)));
    Ok(LsSystem { matrix, rhs, row_scale, meta })
}

/// Non-fatal conditions detected while solving.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SolveWarning {
    /// Every singular value fell below the threshold; the solution is zero.
    ZeroRank,
}

#[derive(Clone, Debug, PartialEq)]
pub struct LsSolution {
    pub coefficients: Vec<f64>,
    pub coeff_norm: f64,
    pub residual_norm: f64,
    pub effective_rank: usize,
    /// Largest singular value. For the pivoted QR this is `|r₁₁|`, which agrees
    /// with `σ₁` up to a factor of `√N`.
    pub sigma1: f64,
    pub warning: Option<SolveWarning>,
}

/// Regularized least-squares solve of an assembled system.
pub fn solve(system: &LsSystem, config: &SolverConfig) -> Result<LsSolution> {
    solve_dense(system.matrix(), system.rhs(), config)
}

/// Regularized least-squares solve of `min ‖Ax − b‖` for a bare matrix.
pub fn solve_dense(a: MatRef<'_, f64>, b: &[f64], config: &SolverConfig) -> Result<LsSolution> {
    config.validate()?;
    if a.nrows() != b.len() {
        return Err(invalid(format!("matrix has {} rows but rhs has {} entries", a.nrows(), b.len())));
    }
    if a.nrows() == 0 || a.ncols() == 0 {
        return Err(invalid("empty system"));
    }
    if b.iter().any(|v| !v.is_finite()) {
        return Err(invalid("right-hand side contains non-finite values"));
    }
    let (coefficients, effective_rank, sigma1) = match config.factorization {
        Factorization::TruncatedSvd => truncated_svd(a, b, config)?,
        Factorization::PivotedQr => pivoted_qr(a, b, config),
    };
    let residual_norm = norm2(&residual(a, b, &coefficients));
    Ok(LsSolution {
        coeff_norm: norm2(&coefficients),
        residual_norm,
        effective_rank,
        sigma1,
        warning: (effective_rank == 0).then_some(SolveWarning::ZeroRank),
        coefficients,
    })
}

fn truncated_svd(a: MatRef<'_, f64>, b: &[f64], config: &SolverConfig) -> Result<(Vec<f64>, usize, f64)> {
    let svd = a.thin_svd().map_err(|e| Error::Factorization(format!("{e:?}")))?;
    let (u, v) = (svd.U(), svd.V());
    let s = svd.S().column_vector();
    let sigma1 = (0..s.nrows()).map(|i| s[i]).fold(0.0, f64::max);
    let cutoff = config.cutoff(sigma1);
    let mut x = vec![0.0; a.ncols()];
    let mut rank = 0;
    for k in 0..s.nrows() {
        let sk = s[k];
        if !(sk > cutoff) {
            continue;
        }
        rank += 1;
        let coef = (0..u.nrows()).map(|i| u[(i, k)] * b[i]).sum::<f64>() / sk;
        for (j, xj) in x.iter_mut().enumerate() {
            *xj += v[(j, k)] * coef;
        }
    }
    Ok((x, rank, sigma1))
}

/// Householder QR with column pivoting, truncated where the largest remaining
/// column norm drops to the threshold. Returns the basic solution.
fn pivoted_qr(a: MatRef<'_, f64>, b: &[f64], config: &SolverConfig) -> (Vec<f64>, usize, f64) {
    let (m, n) = (a.nrows(), a.ncols());
    // Column-major working copy.
    let mut w: Vec<f64> = (0..n).flat_map(|j| (0..m).map(move |i| a[(i, j)])).collect();
    let mut qtb = b.to_vec();
    let mut perm: Vec<usize> = (0..n).collect();
    let col_norm = |w: &[f64], j: usize, k: usize| norm2(&w[j * m + k..(j + 1) * m]);

    let mut rank = 0;
    let mut r11 = 0.0;
    for k in 0..m.min(n) {
        let (p, pnorm) = (k..n)
            .map(|j| (j, col_norm(&w, j, k)))
            .fold((k, -1.0), |best, cur| if cur.1 > best.1 { cur } else { best });
        if k == 0 {
            r11 = pnorm;
        }
        if !(pnorm > config.cutoff(r11)) {
            break;
        }
        if p != k {
            for i in 0..m {
                w.swap(k * m + i, p * m + i);
            }
            perm.swap(k, p);
        }
        // Reflector v = x + sign(x₀)‖x‖e₀ annihilating column k below the diagonal.
        let alpha = if w[k * m + k] >= 0.0 { -pnorm } else { pnorm };
        let mut v: Vec<f64> = w[k * m + k..(k + 1) * m].to_vec();
        v[0] -= alpha;
        let vnorm2: f64 = v.iter().map(|x| x * x).sum();
        if vnorm2 > 0.0 {
            let apply = |col: &mut [f64]| {
                let dot: f64 = v.iter().zip(col.iter()).map(|(a, b)| a * b).sum();
                let f = 2.0 * dot / vnorm2;
                for (c, vi) in col.iter_mut().zip(&v) {
                    *c -= f * vi;
                }
            };
            for j in k + 1..n {
                apply(&mut w[j * m + k..(j + 1) * m]);
            }
            apply(&mut qtb[k..]);
        }
        w[k * m + k] = alpha;
        for i in k + 1..m {
            w[k * m + i] = 0.0;
        }
        rank += 1;
    }

    // Back substitution on the leading rank×rank block of R.
    let mut z = vec![0.0; rank];
    for i in (0..rank).rev() {
        let mut acc = qtb[i];
        for j in i + 1..rank {
            acc -= w[j * m + i] * z[j];
        }
        z[i] = acc / w[i * m + i];
    }
    let mut x = vec![0.0; n];
    for (k, zk) in z.into_iter().enumerate() {
        x[perm[k]] = zk;
    }
    (x, rank, r11)
}

/// `Σ_n λ_n ε^{d/2} φ(ε‖x − ξ_n‖)` at each point.
pub fn evaluate_approximant(coefficients: &[f64], meta: &SystemMeta, points: &NodeSet) -> Result<Vec<f64>> {
    if coefficients.len() != meta.centers.len() {
        return Err(invalid(format!(
            "{} coefficients for {} centers",
            coefficients.len(),
            meta.centers.len()
        )));
    }
    if points.dim() != meta.dim() {
        return Err(invalid("evaluation points have the wrong dimension"));
    }
    let active: Vec<(usize, f64)> =
        coefficients.iter().copied().enumerate().filter(|&(_, c)| c != 0.0).collect();
    Ok(points
        .iter()
        .map(|x| active.iter().map(|&(n, c)| c * meta.basis(n, x)).sum())
        .collect())
}

/// `error / ‖λ‖`; close to `τ` when the oversampling is sufficient.
pub fn rule_of_thumb_ratio(error: f64, solution: &LsSolution) -> Result<f64> {
    if solution.coeff_norm == 0.0 {
        return Err(Error::UndefinedRatio);
    }
    Ok(error / solution.coeff_norm)
}
