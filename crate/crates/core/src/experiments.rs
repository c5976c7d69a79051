//! Convergence sweeps: test functions, error measurement, reports, CSV and config I/O.
//!
//! Scaling policies are applied to the number of centers, so a 1D run with
//! parameter `N` uses `ε = c(2N + 1)` under linear scaling and a 2D run with
//! `N` centers uses `ε = c√N` under `Power { alpha: 0.5 }`.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rayon::prelude::*;

use crate::error::{invalid, Error, Result};
use crate::geometry::{
    centers_1d, hex_grid, oversample_count, oversample_count_total, samples_1d, Domain2D, FourierCurve, Interval,
    NodeRole, NodeSet, Shape2D,
};
use crate::kernels::RbfKernel;
use crate::lssolver::{
    assemble, evaluate_approximant, rule_of_thumb_ratio, solve, Factorization, SolveWarning, SolverConfig,
    ThresholdMode,
};
use crate::pde::{runge_poisson_1d, runge_poisson_2d, solve_poisson, CollocationNodes, PoissonProblem};
use crate::scaling::{limiting_accuracy, ScalingPolicy};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Smoothness {
    Analytic,
    /// Derivatives up to order `k - 1` are continuous.
    FiniteRegularity(u32),
}

#[derive(Clone, Copy, Debug)]
pub struct TestFunction {
    pub name: &'static str,
    pub dim: usize,
    pub func: fn(&[f64]) -> f64,
    pub smoothness: Smoothness,
}

impl TestFunction {
    pub fn eval(&self, x: &[f64]) -> f64 {
        (self.func)(x)
    }

    pub fn lookup(name: &str) -> Result<TestFunction> {
        TEST_FUNCTIONS
            .iter()
            .find(|f| f.name.eq_ignore_ascii_case(name))
            .copied()
            .ok_or_else(|| {
                let known: Vec<&str> = TEST_FUNCTIONS.iter().map(|f| f.name).collect();
                invalid(format!("unknown function `{name}`; expected one of {}", known.join(", ")))
            })
    }
}

fn runge(x: &[f64]) -> f64 {
    1.0 / (1.0 + 10.0 * x[0] * x[0])
}

fn pole(x: &[f64]) -> f64 {
    1.0 / (x[0] - 1.2)
}

fn abs5(x: &[f64]) -> f64 {
    x[0].abs().powi(5)
}

fn runge2d(x: &[f64]) -> f64 {
    1.0 / (1.0 + 10.0 * (x[0] * x[0] + x[1] * x[1]))
}

pub const TEST_FUNCTIONS: [TestFunction; 4] = [
    TestFunction { name: "runge", dim: 1, func: runge, smoothness: Smoothness::Analytic },
    TestFunction { name: "pole", dim: 1, func: pole, smoothness: Smoothness::Analytic },
    TestFunction { name: "abs5", dim: 1, func: abs5, smoothness: Smoothness::FiniteRegularity(5) },
    TestFunction { name: "runge2d", dim: 2, func: runge2d, smoothness: Smoothness::Analytic },
];

/// `√(|Ω|/K · Σ (approx − exact)²)` over `K` validation points.
pub fn discrete_l2_error(approx: &[f64], exact: &[f64], measure: f64) -> Result<f64> {
    if approx.len() != exact.len() {
        return Err(invalid(format!("{} approximate values but {} exact values", approx.len(), exact.len())));
    }
    if approx.is_empty() {
        return Err(invalid("no validation points"));
    }
    let sum: f64 = approx.iter().zip(exact).map(|(a, e)| (a - e) * (a - e)).sum();
    Ok((measure / approx.len() as f64 * sum).sqrt())
}

/// Least-squares slope of `log(err)` against `log(N)` over the last decade of `N`.
pub fn final_decade_slope(ns: &[f64], errors: &[f64]) -> Result<f64> {
    if ns.len() != errors.len() {
        return Err(invalid("slope fit needs equally many N and error values"));
    }
    let n_max = ns.iter().copied().fold(f64::NAN, f64::max);
    let pts: Vec<(f64, f64)> = ns
        .iter()
        .zip(errors)
        .filter(|(n, e)| **n >= n_max / 10.0 && **e > 0.0)
        .map(|(n, e)| (n.ln(), e.ln()))
        .collect();
    if pts.len() < 2 {
        return Err(invalid("slope fit needs at least two points in the final decade"));
    }
    let k = pts.len() as f64;
    let (mx, my) = (pts.iter().map(|p| p.0).sum::<f64>() / k, pts.iter().map(|p| p.1).sum::<f64>() / k);
    let sxy: f64 = pts.iter().map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = pts.iter().map(|(x, _)| (x - mx) * (x - mx)).sum();
    if sxx == 0.0 {
        return Err(invalid("slope fit needs distinct N values"));
    }
    Ok(sxy / sxx)
}

/// Median of the last `count` values.
pub fn tail_median(values: &[f64], count: usize) -> Option<f64> {
    if values.is_empty() || count == 0 {
        return None;
    }
    let mut tail = values[values.len().saturating_sub(count)..].to_vec();
    tail.sort_by(f64::total_cmp);
    let k = tail.len();
    Some(if k % 2 == 1 { tail[k / 2] } else { 0.5 * (tail[k / 2 - 1] + tail[k / 2]) })
}

/// Inclusive range `min, min + step, ..., ≤ max`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct NRange {
    pub min: usize,
    pub max: usize,
    pub step: usize,
}

impl NRange {
    pub fn new(min: usize, max: usize, step: usize) -> Result<Self> {
        let r = NRange { min, max, step };
        r.validate()?;
        Ok(r)
    }

    pub fn single(n: usize) -> Self {
        NRange { min: n, max: n, step: 1 }
    }

    pub fn validate(&self) -> Result<()> {
        if self.min == 0 || self.step == 0 || self.min > self.max {
            return Err(invalid(format!(
                "invalid N range {}..={} step {}",
                self.min, self.max, self.step
            )));
        }
        Ok(())
    }

    pub fn values(&self) -> Vec<usize> {
        (self.min..=self.max).step_by(self.step).collect()
    }

    fn last(&self) -> usize {
        self.min + (self.max - self.min) / self.step * self.step
    }
}

/// Where the centers and samples live.
#[derive(Clone, Debug, PartialEq)]
#[allow(clippy::large_enum_variant)]
pub enum SweepDomain {
    Interval(Interval),
    /// Samples fill the domain; centers fill `center_region`.
    Planar { domain: Domain2D, center_region: Shape2D },
}

impl SweepDomain {
    pub fn dim(&self) -> usize {
        match self {
            SweepDomain::Interval(_) => 1,
            SweepDomain::Planar { .. } => 2,
        }
    }

    /// Length or area of Ω.
    pub fn measure(&self) -> f64 {
        match self {
            SweepDomain::Interval(iv) => iv.length(),
            SweepDomain::Planar { domain, .. } => domain.area(),
        }
    }

    /// Row-scale measure: `T` in 1D, the bounding-box area in 2D.
    pub fn scale_measure(&self) -> f64 {
        match self {
            SweepDomain::Interval(iv) => iv.extension(),
            SweepDomain::Planar { domain, .. } => domain.bounding_area(),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepConfig {
    pub function: String,
    pub kernel: RbfKernel,
    pub domain: SweepDomain,
    pub tau: f64,
    pub threshold_mode: ThresholdMode,
    pub factorization: Factorization,
    pub scaling: ScalingPolicy,
    pub gamma: f64,
    pub n_range: NRange,
    /// Validation points; defaults to ten times the largest sample count, plus one.
    pub validation_count: Option<usize>,
    pub output: Option<PathBuf>,
}

impl SweepConfig {
    /// Gaussian kernel, relative truncated SVD, `γ = 2`.
    pub fn new(function: &str, domain: SweepDomain, tau: f64, scaling: ScalingPolicy, n_range: NRange) -> Self {
        SweepConfig {
            function: function.to_string(),
            kernel: RbfKernel::Gaussian,
            domain,
            tau,
            threshold_mode: ThresholdMode::RelativeToSigma1,
            factorization: Factorization::TruncatedSvd,
            scaling,
            gamma: 2.0,
            n_range,
            validation_count: None,
            output: None,
        }
    }

    pub fn solver_config(&self) -> SolverConfig {
        SolverConfig { tau: self.tau, threshold_mode: self.threshold_mode, factorization: self.factorization }
    }

    fn max_sample_count(&self) -> Result<usize> {
        let n = self.n_range.last();
        match self.domain {
            SweepDomain::Interval(_) => oversample_count(n, self.gamma),
            SweepDomain::Planar { .. } => oversample_count_total(n, self.gamma),
        }
    }

    pub fn effective_validation_count(&self) -> Result<usize> {
        let min = 10 * self.max_sample_count()?;
        Ok(self.validation_count.unwrap_or(min + 1))
    }

    pub fn validate(&self) -> Result<()> {
        let f = TestFunction::lookup(&self.function)?;
        if f.dim != self.domain.dim() {
            return Err(invalid(format!(
                "function `{}` is {}-dimensional but the domain is {}-dimensional",
                f.name,
                f.dim,
                self.domain.dim()
            )));
        }
        self.solver_config().validate()?;
        self.scaling.validate()?;
        self.n_range.validate()?;
        let min = 10 * self.max_sample_count()?;
        if let Some(v) = self.validation_count {
            if v < min {
                return Err(invalid(format!("validation grid of {v} points is below ten times the sample count ({min})")));
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ApproximationReport {
    /// Sweep parameter: `2N + 1` centers in 1D, the number of centers placed in 2D.
    pub n: usize,
    pub m: usize,
    pub epsilon: f64,
    pub err_l2: f64,
    pub err_max: f64,
    pub coeff_norm: f64,
    /// `err_l2 / coeff_norm`; absent when the coefficients vanish.
    pub ratio: Option<f64>,
    pub rank: usize,
    pub sigma1: f64,
    /// Limiting accuracy of the linear policies in 1D.
    pub predicted_limit: Option<f64>,
    pub warning: Option<SolveWarning>,
}

struct SweepContext {
    function: TestFunction,
    grid: NodeSet,
    exact: Vec<f64>,
}

impl SweepContext {
    fn new(config: &SweepConfig) -> Result<Self> {
        config.validate()?;
        let function = TestFunction::lookup(&config.function)?;
        let count = config.effective_validation_count()?;
        let grid = match &config.domain {
            SweepDomain::Interval(iv) => samples_1d(count, iv)?,
            SweepDomain::Planar { domain, .. } => hex_grid(domain.shape(), count, None)?,
        };
        let exact = grid.iter().map(|x| function.eval(x)).collect();
        Ok(SweepContext { function, grid, exact })
    }

    fn run(&self, config: &SweepConfig, n: usize) -> Result<ApproximationReport> {
        let (centers, samples) = match &config.domain {
            SweepDomain::Interval(iv) => {
                let m = oversample_count(n, config.gamma)?;
                (centers_1d(n, iv.extension())?, samples_1d(m, iv)?)
            }
            SweepDomain::Planar { domain, center_region } => {
                let centers = hex_grid(center_region, n, None)?;
                let m = oversample_count_total(centers.len(), config.gamma)?;
                let samples = hex_grid(domain.shape(), m, None)?.with_role(NodeRole::InteriorSample);
                (centers, samples)
            }
        };
        let n_report = match config.domain {
            SweepDomain::Interval(_) => n,
            SweepDomain::Planar { .. } => centers.len(),
        };
        let epsilon = config.scaling.epsilon_of(centers.len());
        let f = self.function;
        let system =
            assemble(&centers, &samples, config.kernel, epsilon, |x| f.eval(x), config.domain.scale_measure())?;
        let solution = solve(&system, &config.solver_config())?;
        let approx = evaluate_approximant(&solution.coefficients, system.meta(), &self.grid)?;
        let err_l2 = discrete_l2_error(&approx, &self.exact, config.domain.measure())?;
        let err_max = approx.iter().zip(&self.exact).map(|(a, e)| (a - e).abs()).fold(0.0, f64::max);
        let predicted_limit = match (&config.domain, config.scaling.linear_constant()) {
            (SweepDomain::Interval(iv), Some(c)) => Some(limiting_accuracy(c, iv.extension(), config.tau)?),
            _ => None,
        };
        Ok(ApproximationReport {
            n: n_report,
            m: samples.len(),
            epsilon,
            err_l2,
            err_max,
            coeff_norm: solution.coeff_norm,
            ratio: rule_of_thumb_ratio(err_l2, &solution).ok(),
            rank: solution.effective_rank,
            sigma1: solution.sigma1,
            predicted_limit,
            warning: solution.warning,
        })
    }
}

/// One pipeline run at a single `N`, measured on the sweep's validation grid.
pub fn run_single(config: &SweepConfig, n: usize) -> Result<ApproximationReport> {
    SweepContext::new(config)?.run(config, n)
}

/// Runs every `N` of the range in parallel; reports come back ordered by `N`.
pub fn run_sweep(config: &SweepConfig) -> Result<Vec<ApproximationReport>> {
    let ctx = SweepContext::new(config)?;
    config.n_range.values().into_par_iter().map(|n| ctx.run(config, n)).collect()
}

pub const CSV_HEADER: &str = "N,M,epsilon,err_l2,err_max,coeff_norm,ratio,rank,sigma1,predicted_limit";

fn sci(v: f64) -> String {
    format!("{v:.16e}")
}

fn opt_sci(v: Option<f64>) -> String {
    v.map(sci).unwrap_or_default()
}

/// CSV text: header plus one row per report, 17 significant digits, empty cells for absent values.
pub fn reports_to_csv(reports: &[ApproximationReport]) -> String {
    let mut out = String::with_capacity(64 * (reports.len() + 1));
    out.push_str(CSV_HEADER);
    out.push('\n');
    for r in reports {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{}",
            r.n,
            r.m,
            sci(r.epsilon),
            sci(r.err_l2),
            sci(r.err_max),
            sci(r.coeff_norm),
            opt_sci(r.ratio),
            r.rank,
            sci(r.sigma1),
            opt_sci(r.predicted_limit)
        );
    }
    out
}

fn write_file(path: &Path, contents: &str) -> Result<()> {
    fs::write(path, contents).map_err(|source| Error::Io { path: path.to_path_buf(), source })
}

pub fn emit_csv(reports: &[ApproximationReport], path: &Path) -> Result<()> {
    write_file(path, &reports_to_csv(reports))
}

fn parse_field<T: FromStr>(line: usize, name: &str, text: &str) -> Result<T> {
    text.parse().map_err(|_| Error::Parse { line, message: format!("invalid {name} `{text}`") })
}

fn parse_opt(line: usize, name: &str, text: &str) -> Result<Option<f64>> {
    if text.is_empty() {
        Ok(None)
    } else {
        parse_field(line, name, text).map(Some)
    }
}

/// Inverse of [`reports_to_csv`]. A zero rank restores the zero-rank warning.
pub fn parse_csv(text: &str) -> Result<Vec<ApproximationReport>> {
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, h)) if h.trim() == CSV_HEADER => {}
        _ => return Err(Error::Parse { line: 1, message: "missing or unexpected header".into() }),
    }
    let mut out = Vec::new();
    for (i, line) in lines {
        let ln = i + 1;
        if line.trim().is_empty() {
            continue;
        }
        let f: Vec<&str> = line.split(',').map(str::trim).collect();
        if f.len() != 10 {
            return Err(Error::Parse { line: ln, message: format!("expected 10 fields, found {}", f.len()) });
        }
        let rank: usize = parse_field(ln, "rank", f[7])?;
        out.push(ApproximationReport {
            n: parse_field(ln, "N", f[0])?,
            m: parse_field(ln, "M", f[1])?,
            epsilon: parse_field(ln, "epsilon", f[2])?,
            err_l2: parse_field(ln, "err_l2", f[3])?,
            err_max: parse_field(ln, "err_max", f[4])?,
            coeff_norm: parse_field(ln, "coeff_norm", f[5])?,
            ratio: parse_opt(ln, "ratio", f[6])?,
            rank,
            sigma1: parse_field(ln, "sigma1", f[8])?,
            predicted_limit: parse_opt(ln, "predicted_limit", f[9])?,
            warning: (rank == 0).then_some(SolveWarning::ZeroRank),
        });
    }
    Ok(out)
}

pub fn read_csv(path: &Path) -> Result<Vec<ApproximationReport>> {
    let text = fs::read_to_string(path).map_err(|source| Error::Io { path: path.to_path_buf(), source })?;
    parse_csv(&text)
}

/// Flat `key = value` settings.
pub type ConfigMap = BTreeMap<String, String>;

/// Parses `key = value` lines; `#` starts a comment, blank lines are skipped and
/// dashes in keys are read as underscores.
pub fn parse_config(text: &str) -> Result<ConfigMap> {
    let mut map = ConfigMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(Error::Parse { line: i + 1, message: format!("expected `key = value`, found `{line}`") });
        };
        let key = key.trim().replace('-', "_");
        if key.is_empty() {
            return Err(Error::Parse { line: i + 1, message: "empty key".into() });
        }
        map.insert(key, value.trim().to_string());
    }
    Ok(map)
}

pub fn read_config(path: &Path) -> Result<ConfigMap> {
    let text = fs::read_to_string(path).map_err(|source| Error::Io { path: path.to_path_buf(), source })?;
    parse_config(&text)
}

struct Settings<'a> {
    map: &'a ConfigMap,
}

impl Settings<'_> {
    fn check_keys(&self, allowed: &[&str]) -> Result<()> {
        match self.map.keys().find(|k| !allowed.contains(&k.as_str())) {
            Some(k) => Err(invalid(format!("unknown setting `{k}`"))),
            None => Ok(()),
        }
    }

    fn str(&self, key: &str) -> Option<&str> {
        self.map.get(key).map(String::as_str)
    }

    fn get<T: FromStr>(&self, key: &str) -> Result<Option<T>> {
        self.str(key)
            .map(|v| v.parse::<T>().map_err(|_| invalid(format!("invalid value `{v}` for `{key}`"))))
            .transpose()
    }

    fn or<T: FromStr>(&self, key: &str, default: T) -> Result<T> {
        Ok(self.get(key)?.unwrap_or(default))
    }

    fn require<T: FromStr>(&self, key: &str) -> Result<T> {
        self.get(key)?.ok_or_else(|| invalid(format!("missing setting `{key}`")))
    }

    fn list(&self, key: &str) -> Result<Option<Vec<f64>>> {
        self.str(key)
            .map(|v| {
                v.split(',')
                    .map(|x| x.trim().parse::<f64>().map_err(|_| invalid(format!("invalid number `{x}` in `{key}`"))))
                    .collect()
            })
            .transpose()
    }

    fn pair(&self, key: &str) -> Result<Option<[f64; 2]>> {
        match self.list(key)? {
            None => Ok(None),
            Some(v) if v.len() == 1 => Ok(Some([v[0], v[0]])),
            Some(v) if v.len() == 2 => Ok(Some([v[0], v[1]])),
            Some(_) => Err(invalid(format!("`{key}` takes one or two numbers"))),
        }
    }

    fn flag(&self, key: &str) -> Result<bool> {
        match self.str(key) {
            None => Ok(false),
            Some("true" | "yes" | "1") => Ok(true),
            Some("false" | "no" | "0") => Ok(false),
            Some(v) => Err(invalid(format!("invalid boolean `{v}` for `{key}`"))),
        }
    }

    fn threshold_mode(&self) -> Result<ThresholdMode> {
        match self.str("threshold_mode").map(str::to_ascii_lowercase).as_deref() {
            None | Some("relative") => Ok(ThresholdMode::RelativeToSigma1),
            Some("absolute") => Ok(ThresholdMode::Absolute),
            Some(v) => Err(invalid(format!("unknown threshold mode `{v}`; expected relative or absolute"))),
        }
    }

    fn factorization(&self) -> Result<Factorization> {
        match self.str("factorization").map(str::to_ascii_lowercase).as_deref() {
            None | Some("svd") => Ok(Factorization::TruncatedSvd),
            Some("qr") => Ok(Factorization::PivotedQr),
            Some(v) => Err(invalid(format!("unknown factorization `{v}`; expected svd or qr"))),
        }
    }

    fn n_range(&self, default: NRange) -> Result<NRange> {
        NRange::new(
            self.or("n_min", default.min)?,
            self.or("n_max", default.max)?,
            self.or("n_step", default.step)?,
        )
    }

    fn interval(&self, extension: f64) -> Result<Interval> {
        let a = self.or("a", -1.0)?;
        let b = self.or("b", 1.0)?;
        if self.flag("confine_centers")? {
            Interval::with_confined_centers(a, b, extension)
        } else {
            Interval::new(a, b, extension)
        }
    }

    fn shape(&self) -> Result<Shape2D> {
        match self.str("domain").unwrap_or("disk") {
            "disk" => Ok(Shape2D::disk([0.0, 0.0], self.or("radius", 1.0)?)),
            "box" => {
                let [hx, hy] = self.pair("half_widths")?.unwrap_or([1.0, 1.0]);
                Ok(Shape2D::rectangle(hx, hy))
            }
            "parametric" => {
                let x_cos = self.list("x_cos")?.ok_or_else(|| invalid("parametric domain needs `x_cos`"))?;
                let y_sin = self.list("y_sin")?.ok_or_else(|| invalid("parametric domain needs `y_sin`"))?;
                let x_sin = self.list("x_sin")?.unwrap_or_default();
                let y_cos = self.list("y_cos")?.unwrap_or_default();
                Ok(Shape2D::Parametric(FourierCurve::new(x_cos, x_sin, y_cos, y_sin)?))
            }
            v => Err(invalid(format!("unknown domain `{v}`; expected disk, box or parametric"))),
        }
    }

    fn planar(&self) -> Result<(Domain2D, Shape2D)> {
        let shape = self.shape()?;
        let [x0, x1, y0, y1] = shape.extent();
        let reach = x0.abs().max(x1.abs()).max(y0.abs()).max(y1.abs());
        let bounding = self.pair("bounding")?.unwrap_or([1.2 * reach, 1.2 * reach]);
        let domain = Domain2D::new(shape, bounding)?;
        let center_region = match self.str("center_region").unwrap_or("box") {
            "box" => domain.bounding_box(),
            "disk" => Shape2D::disk([0.0, 0.0], self.or("center_radius", bounding[0].min(bounding[1]))?),
            v => return Err(invalid(format!("unknown center region `{v}`; expected box or disk"))),
        };
        Ok((domain, center_region))
    }

    fn scaling(&self, extension: f64, tau: f64) -> Result<ScalingPolicy> {
        let policy = match self.str("scaling").unwrap_or("linear-optimal").replace('_', "-").as_str() {
            "constant" => ScalingPolicy::Constant { epsilon: self.require("epsilon")? },
            "power" => ScalingPolicy::Power { c: self.require("c")?, alpha: self.require("alpha")? },
            "linear" => ScalingPolicy::Linear { c: self.require("c")? },
            "linear-optimal" => ScalingPolicy::LinearOptimal { extension, tau },
            v => {
                return Err(invalid(format!(
                    "unknown scaling `{v}`; expected constant, power, linear or linear-optimal"
                )))
            }
        };
        policy.validate()?;
        Ok(policy)
    }
}

const SWEEP_KEYS: &[&str] = &[
    "function", "kernel", "T", "a", "b", "confine_centers", "tau", "threshold_mode", "factorization", "scaling",
    "c", "alpha", "epsilon", "gamma", "n_min", "n_max", "n_step", "validation", "out", "domain", "radius",
    "half_widths", "bounding", "center_region", "center_radius", "x_cos", "x_sin", "y_cos", "y_sin",
];

impl SweepConfig {
    /// Builds a configuration from settings; unknown keys are rejected.
    ///
    /// 2D runs default to `ε = c√N` when `c` is given and no scaling is named.
    pub fn from_settings(map: &ConfigMap) -> Result<Self> {
        let s = Settings { map };
        s.check_keys(SWEEP_KEYS)?;
        let function = s.str("function").unwrap_or("runge").to_string();
        let f = TestFunction::lookup(&function)?;
        let tau = s.or("tau", 1e-10)?;
        let (domain, scaling) = if f.dim == 1 {
            let t = s.or("T", 1.5)?;
            (SweepDomain::Interval(s.interval(t)?), s.scaling(t, tau)?)
        } else {
            let (domain, center_region) = s.planar()?;
            let scaling = if s.str("scaling").is_none() {
                ScalingPolicy::Power { c: s.require("c")?, alpha: 0.5 }
            } else {
                s.scaling(domain.bounding_half_widths()[0], tau)?
            };
            (SweepDomain::Planar { domain, center_region }, scaling)
        };
        let config = SweepConfig {
            function,
            kernel: s.or("kernel", RbfKernel::Gaussian)?,
            domain,
            tau,
            threshold_mode: s.threshold_mode()?,
            factorization: s.factorization()?,
            scaling,
            gamma: s.or("gamma", 2.0)?,
            n_range: s.n_range(NRange { min: 10, max: 100, step: 10 })?,
            validation_count: s.get("validation")?,
            output: s.get("out")?,
        };
        config.validate()?;
        Ok(config)
    }
}

/// Named Poisson problems with a known solution.
pub const POISSON_PROBLEMS: [&str; 2] = ["runge1d", "runge2d"];

#[derive(Clone, Debug)]
pub struct PdeConfig {
    pub problem: PoissonProblem,
    /// Region holding the 2D centers.
    pub center_region: Option<Shape2D>,
    pub tau: f64,
    pub threshold_mode: ThresholdMode,
    pub factorization: Factorization,
    pub scaling: ScalingPolicy,
    pub gamma: f64,
    pub boundary_factor: f64,
    pub n_range: NRange,
    pub output: Option<PathBuf>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct PdeReport {
    /// Sweep parameter: `2N + 1` centers in 1D, the number of centers placed in 2D.
    pub n: usize,
    pub m_interior: usize,
    pub m_boundary: usize,
    pub epsilon: f64,
    pub err_max: f64,
    pub err_l2: f64,
    pub coeff_norm: f64,
    pub residual_norm: f64,
    pub rank: usize,
}

const PDE_KEYS: &[&str] = &[
    "problem", "T", "a", "b", "tau", "threshold_mode", "factorization", "scaling", "c", "alpha", "epsilon",
    "gamma", "boundary_factor", "n_min", "n_max", "n_step", "validation", "out", "domain", "radius",
    "half_widths", "bounding", "center_region", "center_radius", "x_cos", "x_sin", "y_cos", "y_sin",
];

impl PdeConfig {
    pub fn from_settings(map: &ConfigMap) -> Result<Self> {
        let s = Settings { map };
        s.check_keys(PDE_KEYS)?;
        let tau = s.or("tau", 1e-12)?;
        let (problem, center_region, scaling) = match s.str("problem").unwrap_or("runge1d") {
            "runge1d" => {
                let t = s.or("T", 1.5)?;
                (runge_poisson_1d(s.interval(t)?), None, s.scaling(t, tau)?)
            }
            "runge2d" => {
                let (domain, region) = s.planar()?;
                let scaling = if s.str("scaling").is_none() {
                    ScalingPolicy::Power { c: s.require("c")?, alpha: 0.5 }
                } else {
                    s.scaling(domain.bounding_half_widths()[0], tau)?
                };
                (runge_poisson_2d(domain), Some(region), scaling)
            }
            v => {
                return Err(invalid(format!("unknown problem `{v}`; expected {}", POISSON_PROBLEMS.join(" or "))))
            }
        };
        let problem = match s.get::<usize>("validation")? {
            Some(v) => problem.with_validation_count(v),
            None => problem,
        };
        Ok(PdeConfig {
            problem,
            center_region,
            tau,
            threshold_mode: s.threshold_mode()?,
            factorization: s.factorization()?,
            scaling,
            gamma: s.or("gamma", 2.0)?,
            boundary_factor: s.or("boundary_factor", crate::pde::DEFAULT_BOUNDARY_FACTOR)?,
            n_range: s.n_range(NRange { min: 10, max: 100, step: 10 })?,
            output: s.get("out")?,
        })
    }

    pub fn solver_config(&self) -> SolverConfig {
        SolverConfig { tau: self.tau, threshold_mode: self.threshold_mode, factorization: self.factorization }
    }

    pub fn nodes(&self, n: usize) -> Result<CollocationNodes> {
        match (self.problem.domain(), &self.center_region) {
            (crate::pde::PoissonDomain::Interval(iv), _) => CollocationNodes::interval(iv, n, self.gamma),
            (crate::pde::PoissonDomain::Planar(d), region) => {
                let region = region.clone().unwrap_or_else(|| d.bounding_box());
                CollocationNodes::planar(d, &region, n, self.gamma, self.boundary_factor)
            }
        }
    }

    pub fn run_single(&self, n: usize) -> Result<PdeReport> {
        let nodes = self.nodes(n)?;
        let n_report = if self.problem.dim() == 1 { n } else { nodes.centers.len() };
        let epsilon = self.scaling.epsilon_of(nodes.centers.len());
        let (sol, report) = solve_poisson(
            &self.problem,
            &nodes.centers,
            &nodes.interior,
            &nodes.boundary,
            epsilon,
            &self.solver_config(),
        )?;
        let report = report.ok_or_else(|| invalid("problem has no exact solution"))?;
        Ok(PdeReport {
            n: n_report,
            m_interior: nodes.interior.len(),
            m_boundary: nodes.boundary.len(),
            epsilon,
            err_max: report.max_error,
            err_l2: report.l2_error,
            coeff_norm: sol.coeff_norm,
            residual_norm: sol.residual_norm,
            rank: sol.effective_rank,
        })
    }

    pub fn run_sweep(&self) -> Result<Vec<PdeReport>> {
        self.scaling.validate()?;
        self.n_range.validate()?;
        self.n_range.values().into_par_iter().map(|n| self.run_single(n)).collect()
    }
}

pub const PDE_CSV_HEADER: &str = "N,M_interior,M_boundary,epsilon,err_max,err_l2,coeff_norm,residual_norm,rank";

pub fn pde_reports_to_csv(reports: &[PdeReport]) -> String {
    let mut out = String::from(PDE_CSV_HEADER);
    out.push('\n');
    for r in reports {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{}",
            r.n,
            r.m_interior,
            r.m_boundary,
            sci(r.epsilon),
            sci(r.err_max),
            sci(r.err_l2),
            sci(r.coeff_norm),
            sci(r.residual_norm),
            r.rank
        );
    }
    out
}

pub fn emit_pde_csv(reports: &[PdeReport], path: &Path) -> Result<()> {
    write_file(path, &pde_reports_to_csv(reports))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scaling::optimal_c;

    fn runge_config(tau: f64, n_range: NRange) -> SweepConfig {
        let iv = Interval::new(-1.0, 1.0, 1.5).unwrap();
        SweepConfig::new("runge", SweepDomain::Interval(iv), tau, ScalingPolicy::LinearOptimal { extension: 1.5, tau }, n_range)
    }

    #[test]
    fn l2_error_examples() {
        assert_eq!(discrete_l2_error(&[1.0, 2.0], &[1.0, 2.0], 2.0).unwrap(), 0.0);
        for k in [1, 7, 100] {
            let e = discrete_l2_error(&vec![1.0; k], &vec![0.0; k], 2.0).unwrap();
            assert!((e - 2f64.sqrt()).abs() < 1e-15);
        }
        assert!(discrete_l2_error(&[1.0], &[1.0, 2.0], 1.0).is_err());
        assert!(discrete_l2_error(&[], &[], 1.0).is_err());
    }

    #[test]
    fn l2_error_approaches_continuous_norm() {
        // ∫₀¹ x⁴ dx = 1/5; midpoint samples converge at second order.
        let target = 1.0 / 5f64.sqrt();
        let mut last = f64::INFINITY;
        for k in [10usize, 100, 1000, 10000] {
            let xs: Vec<f64> = (0..k).map(|i| ((i as f64 + 0.5) / k as f64).powi(2)).collect();
            let err = (discrete_l2_error(&xs, &vec![0.0; k], 1.0).unwrap() - target).abs();
            assert!(err < last);
            last = err;
        }
        assert!(last < 1e-8);
    }

    #[test]
    fn registry_lookup() {
        assert_eq!(TestFunction::lookup("RUNGE").unwrap().dim, 1);
        assert_eq!(TestFunction::lookup("runge2d").unwrap().eval(&[0.0, 0.0]), 1.0);
        assert_eq!(TestFunction::lookup("abs5").unwrap().smoothness, Smoothness::FiniteRegularity(5));
        assert_eq!(TestFunction::lookup("pole").unwrap().eval(&[0.2]), -1.0);
        assert!(TestFunction::lookup("nope").is_err());
    }

    #[test]
    fn slope_and_median() {
        let ns: Vec<f64> = (1..=20).map(|i| 10.0 * i as f64).collect();
        let errs: Vec<f64> = ns.iter().map(|n| 3.0 * n.powf(-4.0)).collect();
        assert!((final_decade_slope(&ns, &errs).unwrap() + 4.0).abs() < 1e-12);
        assert_eq!(tail_median(&[9.0, 1.0, 3.0, 2.0, 5.0, 4.0], 5), Some(3.0));
        assert_eq!(tail_median(&[1.0, 4.0], 5), Some(2.5));
        assert_eq!(tail_median(&[], 5), None);
    }

    #[test]
    fn n_range_values() {
        assert_eq!(NRange::new(10, 35, 10).unwrap().values(), vec![10, 20, 30]);
        assert_eq!(NRange::new(10, 35, 10).unwrap().last(), 30);
        assert!(NRange::new(0, 10, 1).is_err());
        assert!(NRange::new(5, 4, 1).is_err());
        assert!(NRange::new(5, 6, 0).is_err());
    }

    #[test]
    fn single_point_sweep_matches_hand_composition() {
        let config = runge_config(1e-10, NRange::single(20));
        let report = run_sweep(&config).unwrap().remove(0);

        let iv = Interval::new(-1.0, 1.0, 1.5).unwrap();
        let centers = centers_1d(20, 1.5).unwrap();
        let samples = samples_1d(82, &iv).unwrap();
        let eps = optimal_c(1.5, 1e-10).unwrap() * 41.0;
        let system = assemble(&centers, &samples, RbfKernel::Gaussian, eps, runge, 1.5).unwrap();
        let sol = solve(&system, &SolverConfig::new(1e-10)).unwrap();
        let grid = samples_1d(821, &iv).unwrap();
        let approx = evaluate_approximant(&sol.coefficients, system.meta(), &grid).unwrap();
        let exact: Vec<f64> = grid.iter().map(runge).collect();
        let err = discrete_l2_error(&approx, &exact, 2.0).unwrap();

        assert_eq!(report.m, 82);
        assert_eq!(report.epsilon, eps);
        assert_eq!(report.err_l2, err);
        assert_eq!(report.coeff_norm, sol.coeff_norm);
        assert_eq!(report.rank, sol.effective_rank);
        assert_eq!(report.ratio, Some(err / sol.coeff_norm));
        assert_eq!(report.predicted_limit, Some(limiting_accuracy(optimal_c(1.5, 1e-10).unwrap(), 1.5, 1e-10).unwrap()));
    }

    #[test]
    fn sweep_is_ordered_and_limit_is_constant() {
        let reports = run_sweep(&runge_config(1e-8, NRange::new(5, 45, 10).unwrap())).unwrap();
        let ns: Vec<usize> = reports.iter().map(|r| r.n).collect();
        assert_eq!(ns, vec![5, 15, 25, 35, 45]);
        for r in &reports {
            assert_eq!(r.m, oversample_count(r.n, 2.0).unwrap());
            assert!(r.err_l2 >= 0.0 && r.err_max >= 0.0);
            assert_eq!(r.predicted_limit, reports[0].predicted_limit);
        }
        assert!(reports[4].err_l2 < reports[0].err_l2);
    }

    #[test]
    fn config_validation() {
        let mut c = runge_config(1e-10, NRange::single(10));
        c.validation_count = Some(100);
        assert!(c.validate().is_err());
        c.validation_count = Some(1000);
        assert!(c.validate().is_ok());
        c.function = "runge2d".into();
        assert!(c.validate().is_err());
        c.function = "runge".into();
        c.gamma = 0.5;
        assert!(c.validate().is_err());
    }

    #[test]
    fn csv_round_trip() {
        assert_eq!(reports_to_csv(&[]), format!("{CSV_HEADER}\n"));
        let reports = run_sweep(&runge_config(1e-10, NRange::new(4, 12, 4).unwrap())).unwrap();
        let text = reports_to_csv(&reports);
        assert_eq!(text.lines().count(), 4);
        assert!(text.ends_with('\n'));
        assert_eq!(parse_csv(&text).unwrap(), reports);

        let zero = ApproximationReport {
            n: 1,
            m: 3,
            epsilon: 0.1,
            err_l2: 1.0 / 3.0,
            err_max: 0.5,
            coeff_norm: 0.0,
            ratio: None,
            rank: 0,
            sigma1: 1e-300,
            predicted_limit: None,
            warning: Some(SolveWarning::ZeroRank),
        };
        let text = reports_to_csv(std::slice::from_ref(&zero));
        assert_eq!(text.lines().nth(1).unwrap().split(',').nth(3).unwrap(), "3.3333333333333331e-1");
        assert_eq!(parse_csv(&text).unwrap(), vec![zero]);
        assert!(parse_csv("N,M\n").is_err());
        assert!(parse_csv(&format!("{CSV_HEADER}\n1,2,3\n")).is_err());
    }

    #[test]
    fn config_parsing() {
        let text = "# sweep\nfunction = abs5\nT = 1.5 # extension\nn-min = 10\nn_max=30\nn_step = 10\n\nscaling = linear\nc = 0.2\n";
        let map = parse_config(text).unwrap();
        assert_eq!(map.get("n_min").map(String::as_str), Some("10"));
        let cfg = SweepConfig::from_settings(&map).unwrap();
        assert_eq!(cfg.function, "abs5");
        assert_eq!(cfg.scaling, ScalingPolicy::Linear { c: 0.2 });
        assert_eq!(cfg.n_range.values(), vec![10, 20, 30]);

        assert!(matches!(parse_config("a = 1\nno equals\n"), Err(Error::Parse { line: 2, .. })));
        let mut bad = map.clone();
        bad.insert("colour".into(), "red".into());
        assert!(SweepConfig::from_settings(&bad).is_err());
        let mut bad = map;
        bad.insert("scaling".into(), "cubic".into());
        assert!(SweepConfig::from_settings(&bad).is_err());
    }

    #[test]
    fn planar_config_and_run() {
        let map = parse_config("function = runge2d\nc = 0.3\nn_min = 60\nn_max = 60\nbounding = 1.1\n").unwrap();
        let cfg = SweepConfig::from_settings(&map).unwrap();
        assert_eq!(cfg.scaling, ScalingPolicy::Power { c: 0.3, alpha: 0.5 });
        let r = run_sweep(&cfg).unwrap().remove(0);
        assert!(r.n.abs_diff(60) <= 6);
        assert!(r.m > r.n);
        assert_eq!(r.predicted_limit, None);
        assert!(r.err_max < 0.1);
    }

    #[test]
    fn pde_config_runs() {
        let map = parse_config("problem = runge1d\nn_min = 20\nn_max = 40\nn_step = 20\nvalidation = 801\n").unwrap();
        let cfg = PdeConfig::from_settings(&map).unwrap();
        let reports = cfg.run_sweep().unwrap();
        assert_eq!(reports.len(), 2);
        assert_eq!(reports[0].m_boundary, 2);
        assert!(reports[1].err_max < reports[0].err_max);
        let csv = pde_reports_to_csv(&reports);
        assert!(csv.starts_with(PDE_CSV_HEADER));
        assert!(PdeConfig::from_settings(&parse_config("problem = heat").unwrap()).is_err());
    }
}
