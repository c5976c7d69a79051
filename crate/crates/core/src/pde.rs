//! Least-squares collocation for the Poisson problem `−Δu = f` in Ω, `u = g` on ∂Ω.
//!
//! The unknown is expanded in normalized Gaussian translates. The top block of the
//! system collocates the PDE at interior points and the bottom block enforces the
//! Dirichlet data at boundary points. Both blocks share one row scale, so the
//! stacked system is solved exactly like an approximation problem.

use std::fmt;
use std::sync::Arc;

use faer::Mat;

use crate::error::{invalid, Result};
use crate::experiments::discrete_l2_error;
use crate::geometry::{
    boundary_points, centers_1d, hex_grid, oversample_count, oversample_count_total, Domain2D, Interval, NodeRole,
    NodeSet, Shape2D,
};
use crate::kernels::{gaussian_neg_laplacian, norm_factor, squared_distance, RbfKernel};
use crate::lssolver::{evaluate_approximant, solve, LsSolution, LsSystem, SolverConfig, SystemMeta};

/// A scalar function of a point.
pub type Field = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;

/// Boundary points per square root of the interior count in 2D.
pub const DEFAULT_BOUNDARY_FACTOR: f64 = 4.0;

#[derive(Clone, Debug, PartialEq)]
pub enum PoissonDomain {
    Interval(Interval),
    Planar(Domain2D),
}

impl PoissonDomain {
    pub fn dim(&self) -> usize {
        match self {
            PoissonDomain::Interval(_) => 1,
            PoissonDomain::Planar(_) => 2,
        }
    }

    /// Measure used in the row scale: `T` in 1D, the bounding-box area in 2D.
    pub fn scale_measure(&self) -> f64 {
        match self {
            PoissonDomain::Interval(iv) => iv.extension(),
            PoissonDomain::Planar(d) => d.bounding_area(),
        }
    }

    /// Length or area of Ω itself.
    pub fn measure(&self) -> f64 {
        match self {
            PoissonDomain::Interval(iv) => iv.length(),
            PoissonDomain::Planar(d) => d.area(),
        }
    }

    fn contains(&self, x: &[f64]) -> bool {
        match self {
            PoissonDomain::Interval(iv) => iv.contains(x[0]),
            PoissonDomain::Planar(d) => d.contains([x[0], x[1]]),
        }
    }

    fn boundary_distance(&self, x: &[f64]) -> f64 {
        match self {
            PoissonDomain::Interval(iv) => (x[0] - iv.a()).abs().min((x[0] - iv.b()).abs()),
            PoissonDomain::Planar(d) => d.shape().boundary_distance([x[0], x[1]]),
        }
    }

    /// Equispaced points (1D) or a triangular lattice (2D) filling Ω.
    pub fn validation_grid(&self, count: usize) -> Result<NodeSet> {
        match self {
            PoissonDomain::Interval(iv) => crate::geometry::samples_1d(count.max(2), iv),
            PoissonDomain::Planar(d) => Ok(hex_grid(d.shape(), count, None)?.with_role(NodeRole::InteriorSample)),
        }
    }
}

#[derive(Clone)]
pub struct PoissonProblem {
    domain: PoissonDomain,
    rhs: Field,
    boundary_data: Field,
    exact_solution: Option<Field>,
    validation_count: Option<usize>,
}

impl fmt::Debug for PoissonProblem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("PoissonProblem")
            .field("domain", &self.domain)
            .field("has_exact_solution", &self.exact_solution.is_some())
            .field("validation_count", &self.validation_count)
            .finish()
    }
}

impl PoissonProblem {
    pub fn new(domain: PoissonDomain, rhs: Field, boundary_data: Field) -> Self {
        PoissonProblem { domain, rhs, boundary_data, exact_solution: None, validation_count: None }
    }

    pub fn with_exact_solution(mut self, u: Field) -> Self {
        self.exact_solution = Some(u);
        self
    }

    /// Number of validation points; by default ten times the number of collocation rows.
    pub fn with_validation_count(mut self, count: usize) -> Self {
        self.validation_count = Some(count);
        self
    }

    pub fn domain(&self) -> &PoissonDomain {
        &self.domain
    }

    pub fn dim(&self) -> usize {
        self.domain.dim()
    }

    pub fn rhs(&self) -> &Field {
        &self.rhs
    }

    pub fn boundary_data(&self) -> &Field {
        &self.boundary_data
    }

    pub fn exact_solution(&self) -> Option<&Field> {
        self.exact_solution.as_ref()
    }

    pub fn validation_count(&self) -> Option<usize> {
        self.validation_count
    }
}

fn runge_solution(x: &[f64]) -> f64 {
    let r2: f64 = x.iter().map(|v| v * v).sum();
    1.0 / (1.0 + 10.0 * r2)
}

/// `−u″ = 20(1 − 30x²)/(1 + 10x²)³` with solution `1/(1 + 10x²)`.
pub fn runge_poisson_1d(interval: Interval) -> PoissonProblem {
    let rhs = |x: &[f64]| {
        let q = 1.0 + 10.0 * x[0] * x[0];
        20.0 * (1.0 - 30.0 * x[0] * x[0]) / (q * q * q)
    };
    PoissonProblem::new(PoissonDomain::Interval(interval), Arc::new(rhs), Arc::new(runge_solution))
        .with_exact_solution(Arc::new(runge_solution))
}

/// `−Δu = 40(1 − 10r²)/(1 + 10r²)³` with solution `1/(1 + 10r²)`.
pub fn runge_poisson_2d(domain: Domain2D) -> PoissonProblem {
    let rhs = |x: &[f64]| {
        let r2 = x[0] * x[0] + x[1] * x[1];
        let q = 1.0 + 10.0 * r2;
        40.0 * (1.0 - 10.0 * r2) / (q * q * q)
    };
    PoissonProblem::new(PoissonDomain::Planar(domain), Arc::new(rhs), Arc::new(runge_solution))
        .with_exact_solution(Arc::new(runge_solution))
}

/// Centers, interior collocation points and boundary points for one solve.
#[derive(Clone, Debug, PartialEq)]
pub struct CollocationNodes {
    pub centers: NodeSet,
    pub interior: NodeSet,
    pub boundary: NodeSet,
}

impl CollocationNodes {
    /// `2N + 1` centers on `[-T, T]`, `⌈γ(2N + 1)⌉` interior points strictly inside
    /// `[a, b]` and the two endpoints.
    pub fn interval(interval: &Interval, n: usize, gamma: f64) -> Result<Self> {
        let centers = centers_1d(n, interval.extension())?;
        let m = oversample_count(n, gamma)?;
        let (a, b) = (interval.a(), interval.b());
        let pts = (1..=m).map(|i| a + (b - a) * i as f64 / (m + 1) as f64).collect();
        Ok(CollocationNodes {
            centers,
            interior: NodeSet::from_points_1d(pts, NodeRole::InteriorSample)?,
            boundary: NodeSet::from_points_1d(vec![a, b], NodeRole::BoundarySample)?,
        })
    }

    /// About `n_centers` lattice centers in `center_region`, about `γ·N` lattice points
    /// in Ω and `⌈boundary_factor·√M_Ω⌉` points on ∂Ω.
    pub fn planar(
        domain: &Domain2D,
        center_region: &Shape2D,
        n_centers: usize,
        gamma: f64,
        boundary_factor: f64,
    ) -> Result<Self> {
        if !(boundary_factor > 0.0) {
            return Err(invalid("boundary factor must be positive"));
        }
        let centers = hex_grid(center_region, n_centers, None)?;
        let m = oversample_count_total(centers.len(), gamma)?;
        let interior = hex_grid(domain.shape(), m, None)?.with_role(NodeRole::InteriorSample);
        let mb = (boundary_factor * (interior.len() as f64).sqrt()).ceil() as usize;
        let boundary = boundary_points(domain.shape(), mb.max(3))?;
        Ok(CollocationNodes { centers, interior, boundary })
    }
}

/// The stacked `[−Δφ_n(x_m); φ_n(y_m)]` system.
#[derive(Clone, Debug)]
pub struct CollocationSystem {
    system: LsSystem,
    block_sizes: (usize, usize),
}

impl CollocationSystem {
    pub fn system(&self) -> &LsSystem {
        &self.system
    }

    /// `(M_Ω, M_∂Ω)`.
    pub fn block_sizes(&self) -> (usize, usize) {
        self.block_sizes
    }

    pub fn matrix(&self) -> faer::MatRef<'_, f64> {
        self.system.matrix()
    }

    pub fn rhs(&self) -> &[f64] {
        self.system.rhs()
    }
}

fn check_nodes(problem: &PoissonProblem, centers: &NodeSet, interior: &NodeSet, boundary: &NodeSet) -> Result<()> {
    let d = problem.dim();
    if centers.dim() != d || interior.dim() != d || boundary.dim() != d {
        return Err(invalid("node dimensions do not match the problem"));
    }
    if centers.is_empty() || interior.is_empty() || boundary.is_empty() {
        return Err(invalid("centers, interior and boundary points must be non-empty"));
    }
    let rows = interior.len() + boundary.len();
    if rows <= centers.len() {
        return Err(invalid(format!(
            "undersampled collocation system: {rows} rows for {} centers",
            centers.len()
        )));
    }
    if let Some(i) = interior.iter().position(|x| !problem.domain.contains(x)) {
        return Err(invalid(format!("interior point {i} lies outside the domain")));
    }
    let tol = 1e-9 * (1.0 + problem.domain.scale_measure());
    if let Some(i) = boundary.iter().position(|x| problem.domain.boundary_distance(x) > tol) {
        return Err(invalid(format!("boundary point {i} is not on the boundary")));
    }
    Ok(())
}

fn sample(field: &Field, points: &NodeSet, offset: usize, scale: f64, out: &mut Vec<f64>) -> Result<()> {
    for (i, x) in points.iter().enumerate() {
        let v = field(x);
        if !v.is_finite() {
            return Err(crate::Error::SampleEvaluation { index: offset + i, value: v });
        }
        out.push(scale * v);
    }
    Ok(())
}

/// Assembles the collocation system with the Gaussian kernel.
pub fn assemble_collocation(
    problem: &PoissonProblem,
    centers: &NodeSet,
    interior: &NodeSet,
    boundary: &NodeSet,
    epsilon: f64,
) -> Result<CollocationSystem> {
    if !(epsilon > 0.0 && epsilon.is_finite()) {
        return Err(invalid(format!("shape parameter must be positive, got {epsilon}")));
    }
    check_nodes(problem, centers, interior, boundary)?;
    let (mi, mb) = (interior.len(), boundary.len());
    let d = problem.dim();
    let row_scale = (problem.domain.scale_measure() / (mi + mb) as f64).sqrt();
    let weight = row_scale * norm_factor(epsilon, d);

    let mut rhs = Vec::with_capacity(mi + mb);
    sample(&problem.rhs, interior, 0, row_scale, &mut rhs)?;
    sample(&problem.boundary_data, boundary, mi, row_scale, &mut rhs)?;

    let kernel = RbfKernel::Gaussian;
    let matrix = Mat::from_fn(mi + mb, centers.len(), |i, j| {
        let c = centers.point(j);
        if i < mi {
            weight * gaussian_neg_laplacian(epsilon, squared_distance(interior.point(i), c), d)
        } else {
            let r2 = squared_distance(boundary.point(i - mi), c);
            weight * kernel.profile(epsilon * r2.sqrt())
        }
    });
    let meta = SystemMeta {
        kernel,
        epsilon,
        centers: centers.clone(),
        samples: vec![interior.clone(), boundary.clone()],
    };
    Ok(CollocationSystem { system: LsSystem::from_parts(matrix, rhs, row_scale, meta)?, block_sizes: (mi, mb) })
}

/// Errors of the collocation solution against the exact solution on a validation grid.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PoissonErrorReport {
    pub max_error: f64,
    pub l2_error: f64,
    pub validation_points: usize,
}

/// Assembles and solves; the report is present when the exact solution is known.
pub fn solve_poisson(
    problem: &PoissonProblem,
    centers: &NodeSet,
    interior: &NodeSet,
    boundary: &NodeSet,
    epsilon: f64,
    config: &SolverConfig,
) -> Result<(LsSolution, Option<PoissonErrorReport>)> {
    let system = assemble_collocation(problem, centers, interior, boundary, epsilon)?;
    let solution = solve(system.system(), config)?;
    let Some(exact) = problem.exact_solution.as_ref() else {
        return Ok((solution, None));
    };
    let count = problem.validation_count.unwrap_or(10 * system.system().nrows());
    let grid = problem.domain.validation_grid(count)?;
    let approx = evaluate_approximant(&solution.coefficients, system.system().meta(), &grid)?;
    let truth: Vec<f64> = grid.iter().map(|x| exact(x)).collect();
    let max_error = approx.iter().zip(&truth).map(|(a, t)| (a - t).abs()).fold(0.0, f64::max);
    let l2_error = discrete_l2_error(&approx, &truth, problem.domain.measure())?;
    Ok((solution, Some(PoissonErrorReport { max_error, l2_error, validation_points: grid.len() })))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::{neg_laplacian_gaussian, ShapedRbf};
    use crate::lssolver::assemble;
    use crate::scaling::optimal_c;

    fn unit_interval(t: f64) -> Interval {
        Interval::new(-1.0, 1.0, t).unwrap()
    }

    fn unit_disk() -> Domain2D {
        Domain2D::new(Shape2D::disk([0.0, 0.0], 1.0), [1.2, 1.2]).unwrap()
    }

    #[test]
    fn single_center_entries() {
        let problem = runge_poisson_1d(unit_interval(1.5));
        let centers = NodeSet::from_points_1d(vec![0.0], NodeRole::Center).unwrap();
        let interior = NodeSet::from_points_1d(vec![0.0], NodeRole::InteriorSample).unwrap();
        let boundary = NodeSet::from_points_1d(vec![1.0], NodeRole::BoundarySample).unwrap();
        let eps = 2.0;
        let sys = assemble_collocation(&problem, &centers, &interior, &boundary, eps).unwrap();
        let s = sys.system().row_scale();
        assert_eq!(s, (1.5f64 / 2.0).sqrt());
        let nf = eps.sqrt();
        assert!((sys.matrix()[(0, 0)] - s * 2.0 * eps * eps * nf).abs() < 1e-14);
        assert!((sys.matrix()[(1, 0)] - s * nf * (-eps * eps).exp()).abs() < 1e-15);
        assert_eq!(sys.rhs()[1], s * runge_solution(&[1.0]));
    }

    #[test]
    fn block_shapes() {
        let problem = runge_poisson_1d(unit_interval(1.5));
        let centers = NodeSet::from_points_1d((0..100).map(|i| -1.4 + 0.028 * i as f64).collect(), NodeRole::Center)
            .unwrap();
        let interior =
            NodeSet::from_points_1d((1..=200).map(|i| -1.0 + 2.0 * i as f64 / 201.0).collect(), NodeRole::InteriorSample)
                .unwrap();
        let boundary =
            NodeSet::from_points_1d([-1.0, 1.0].repeat(20), NodeRole::BoundarySample).unwrap();
        let sys = assemble_collocation(&problem, &centers, &interior, &boundary, 30.0).unwrap();
        assert_eq!((sys.matrix().nrows(), sys.matrix().ncols()), (240, 100));
        assert_eq!(sys.block_sizes(), (200, 40));
    }

    #[test]
    fn rejects_undersampled_and_misplaced_nodes() {
        let problem = runge_poisson_1d(unit_interval(1.5));
        let nodes = CollocationNodes::interval(&unit_interval(1.5), 5, 2.0).unwrap();
        let few = NodeSet::from_points_1d(vec![0.0, 0.5], NodeRole::InteriorSample).unwrap();
        assert!(assemble_collocation(&problem, &nodes.centers, &few, &nodes.boundary, 5.0).is_err());
        let outside = NodeSet::from_points_1d(vec![1.3; 30], NodeRole::InteriorSample).unwrap();
        assert!(assemble_collocation(&problem, &nodes.centers, &outside, &nodes.boundary, 5.0).is_err());
        let off = NodeSet::from_points_1d(vec![0.9, -1.0], NodeRole::BoundarySample).unwrap();
        assert!(assemble_collocation(&problem, &nodes.centers, &nodes.interior, &off, 5.0).is_err());
        assert!(assemble_collocation(&problem, &nodes.centers, &nodes.interior, &nodes.boundary, 0.0).is_err());
    }

    #[test]
    fn entries_match_kernel_operations() {
        let problem = runge_poisson_2d(unit_disk());
        let centers =
            NodeSet::from_points_2d(&[[0.1, -0.3], [0.7, 0.2], [-0.5, 0.5], [0.0, 0.9]], NodeRole::Center).unwrap();
        let interior = NodeSet::from_points_2d(&[[0.0, 0.0], [0.3, 0.1], [-0.2, 0.4]], NodeRole::InteriorSample).unwrap();
        let boundary = boundary_points(unit_disk().shape(), 5).unwrap();
        let eps = 1.7;
        let sys = assemble_collocation(&problem, &centers, &interior, &boundary, eps).unwrap();
        let s = sys.system().row_scale();
        for j in 0..4 {
            let c = centers.point(j);
            for i in 0..3 {
                let expect = s * eps * neg_laplacian_gaussian(eps, c, interior.point(i)).unwrap();
                assert!((sys.matrix()[(i, j)] - expect).abs() < 1e-14);
            }
            let rbf = ShapedRbf::new(RbfKernel::Gaussian, eps, c.to_vec(), true).unwrap();
            for i in 0..5 {
                let expect = s * rbf.eval(boundary.point(i)).unwrap();
                assert!((sys.matrix()[(3 + i, j)] - expect).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn boundary_block_matches_plain_assembly() {
        let domain = unit_disk();
        let problem = runge_poisson_2d(domain.clone());
        let nodes = CollocationNodes::planar(&domain, &domain.bounding_box(), 80, 2.0, 4.0).unwrap();
        let eps = 0.2 * (nodes.centers.len() as f64).sqrt();
        let sys = assemble_collocation(&problem, &nodes.centers, &nodes.interior, &nodes.boundary, eps).unwrap();
        let (mi, mb) = sys.block_sizes();
        let measure = domain.bounding_area() * mb as f64 / (mi + mb) as f64;
        let g = problem.boundary_data().clone();
        let plain = assemble(&nodes.centers, &nodes.boundary, RbfKernel::Gaussian, eps, |x| g(x), measure).unwrap();
        for i in 0..mb {
            assert!((sys.rhs()[mi + i] - plain.rhs()[i]).abs() <= 1e-15);
            for j in 0..nodes.centers.len() {
                assert!((sys.matrix()[(mi + i, j)] - plain.matrix()[(i, j)]).abs() <= 1e-15);
            }
        }
    }

    #[test]
    fn zero_data_gives_zero_solution() {
        let zero: Field = Arc::new(|_| 0.0);
        let iv = unit_interval(1.5);
        let problem = PoissonProblem::new(PoissonDomain::Interval(iv), zero.clone(), zero.clone())
            .with_exact_solution(zero);
        let nodes = CollocationNodes::interval(&iv, 10, 2.0).unwrap();
        let (sol, report) =
            solve_poisson(&problem, &nodes.centers, &nodes.interior, &nodes.boundary, 3.0, &SolverConfig::new(1e-12))
                .unwrap();
        assert!(sol.coeff_norm <= 1e-12);
        let report = report.unwrap();
        assert_eq!(report.max_error, 0.0);
        assert_eq!(report.l2_error, 0.0);
    }

    #[test]
    fn runge_pairs_satisfy_the_equation() {
        let h = 1e-4;
        let p1 = runge_poisson_1d(unit_interval(1.5));
        for x in [-0.9, -0.3, 0.0, 0.45, 0.8] {
            let u = |t: f64| runge_solution(&[t]);
            let lap = (u(x + h) - 2.0 * u(x) + u(x - h)) / (h * h);
            assert!((-lap - (p1.rhs())(&[x])).abs() < 1e-5 * (1.0 + lap.abs()));
        }
        let p2 = runge_poisson_2d(unit_disk());
        for p in [[0.0, 0.0], [0.3, -0.2], [-0.5, 0.6], [0.7, 0.1]] {
            let u = |x: f64, y: f64| runge_solution(&[x, y]);
            let [x, y] = p;
            let lap = (u(x + h, y) + u(x - h, y) + u(x, y + h) + u(x, y - h) - 4.0 * u(x, y)) / (h * h);
            assert!((-lap - (p2.rhs())(&p)).abs() < 1e-5 * (1.0 + lap.abs()));
        }
    }

    fn runge_1d_error(n: usize, perm_seed: Option<u64>) -> (f64, LsSolution, CollocationNodes, f64) {
        let iv = unit_interval(1.5);
        let problem = runge_poisson_1d(iv);
        let mut nodes = CollocationNodes::interval(&iv, n, 2.0).unwrap();
        if let Some(seed) = perm_seed {
            let m = nodes.interior.len();
            let mut perm: Vec<usize> = (0..m).collect();
            let mut state = seed;
            for i in (1..m).rev() {
                state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                perm.swap(i, (state >> 33) as usize % (i + 1));
            }
            nodes.interior = nodes.interior.permuted(&perm).unwrap();
        }
        let eps = optimal_c(1.5, 1e-12).unwrap() * n as f64;
        let (sol, report) = solve_poisson(
            &problem.with_validation_count(2001),
            &nodes.centers,
            &nodes.interior,
            &nodes.boundary,
            eps,
            &SolverConfig::new(1e-12),
        )
        .unwrap();
        (report.unwrap().max_error, sol, nodes, eps)
    }

    #[test]
    fn one_dimensional_solve_converges() {
        let (coarse, ..) = runge_1d_error(10, None);
        let (fine, ..) = runge_1d_error(40, None);
        assert!(fine < coarse / 100.0, "{coarse} -> {fine}");
        assert!(fine < 1e-6);
    }

    #[test]
    fn error_is_invariant_under_interior_permutation() {
        let (base, ..) = runge_1d_error(30, None);
        let (shuffled, ..) = runge_1d_error(30, Some(42));
        assert!((base - shuffled).abs() <= 1e-10);
    }

    #[test]
    fn residual_not_worse_than_plain_fit() {
        let (_, sol, nodes, eps) = runge_1d_error(25, None);
        let iv = unit_interval(1.5);
        let problem = runge_poisson_1d(iv);
        let sys = assemble_collocation(&problem, &nodes.centers, &nodes.interior, &nodes.boundary, eps).unwrap();
        let samples = crate::geometry::samples_1d(oversample_count(25, 2.0).unwrap(), &iv).unwrap();
        let fit = assemble(&nodes.centers, &samples, RbfKernel::Gaussian, eps, runge_solution, 1.5).unwrap();
        let plain = solve(&fit, &SolverConfig::new(1e-12)).unwrap();
        let r_plain: f64 = sys.system().residual(&plain.coefficients).iter().map(|v| v * v).sum::<f64>().sqrt();
        assert!(sol.residual_norm <= r_plain, "{} vs {r_plain}", sol.residual_norm);
    }

    #[test]
    fn planar_nodes_have_requested_sizes() {
        let domain = unit_disk();
        let nodes = CollocationNodes::planar(&domain, &domain.bounding_box(), 200, 2.0, DEFAULT_BOUNDARY_FACTOR).unwrap();
        let n = nodes.centers.len();
        assert!(n.abs_diff(200) <= 10, "{n}");
        assert!(nodes.interior.len().abs_diff(2 * n) <= 2 * n / 20);
        let mb = nodes.boundary.len();
        assert_eq!(mb, (4.0 * (nodes.interior.len() as f64).sqrt()).ceil() as usize);
        assert!(nodes.interior.iter().all(|p| domain.contains([p[0], p[1]])));
    }
}
