use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use lsrbf::experiments::{
    emit_csv, emit_pde_csv, pde_reports_to_csv, read_config, reports_to_csv, run_single, run_sweep, ApproximationReport,
    ConfigMap, PdeConfig, SweepConfig,
};
use lsrbf::scaling::{
    epsilon_lower_bound, limiting_accuracy, min_n_linear, optimal_c, optimal_c_constrained, predicted_rate,
    ScalingPolicy,
};
use lsrbf::{Error, Result};

/// Least-squares RBF approximation with exterior centers and truncated-SVD regularization.
#[derive(Parser)]
#[command(name = "lsrbf", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one approximation and print its report.
    Approx {
        #[command(flatten)]
        args: SweepArgs,
        /// Center parameter N (defaults to --n-min).
        #[arg(long)]
        n: Option<usize>,
    },
    /// Sweep N and write a CSV report.
    Sweep(SweepArgs),
    /// Solve a Poisson problem by least-squares collocation over a range of N.
    Pde(PdeArgs),
    /// Print the closed-form scaling predictors.
    Predict(PredictArgs),
}

/// Settings shared by every run; flags override values from `--config`.
#[derive(Args)]
struct CommonArgs {
    /// `key = value` settings file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Extension half-width of the center interval.
    #[arg(long = "T")]
    t: Option<f64>,
    #[arg(long)]
    tau: Option<f64>,
    /// relative or absolute.
    #[arg(long)]
    threshold_mode: Option<String>,
    /// svd or qr.
    #[arg(long)]
    factorization: Option<String>,
    /// constant, power, linear or linear-optimal.
    #[arg(long)]
    scaling: Option<String>,
    #[arg(long)]
    c: Option<f64>,
    #[arg(long)]
    alpha: Option<f64>,
    /// Shape parameter of the constant policy.
    #[arg(long)]
    epsilon: Option<f64>,
    /// Oversampling factor.
    #[arg(long)]
    gamma: Option<f64>,
    #[arg(long)]
    n_min: Option<usize>,
    #[arg(long)]
    n_max: Option<usize>,
    #[arg(long)]
    n_step: Option<usize>,
    /// Number of validation points.
    #[arg(long)]
    validation: Option<usize>,
    /// Output CSV path; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Any other setting, e.g. `--set domain=disk`.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// runge, pole, abs5 or runge2d.
    #[arg(long)]
    function: Option<String>,
    /// GA, MQ, IQ or IMQ.
    #[arg(long)]
    kernel: Option<String>,
}

#[derive(Args)]
struct PdeArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// runge1d or runge2d.
    #[arg(long)]
    problem: Option<String>,
    /// Boundary points per square root of the interior count (2D).
    #[arg(long)]
    boundary_factor: Option<f64>,
}

#[derive(Args)]
struct PredictArgs {
    #[arg(long = "T", default_value_t = 1.5)]
    t: f64,
    /// Radius of the domain.
    #[arg(long = "B", default_value_t = 1.0)]
    b: f64,
    #[arg(long, default_value_t = 1e-10)]
    tau: f64,
    /// Linear scaling constant; defaults to the optimal one.
    #[arg(long)]
    c: Option<f64>,
    /// Sublinear exponent for the predicted rate.
    #[arg(long)]
    alpha: Option<f64>,
    /// Number of centers for the ε bound and the predicted rate.
    #[arg(long)]
    n: Option<usize>,
    /// Smoothness order for the predicted rate.
    #[arg(long)]
    k: Option<f64>,
}

impl CommonArgs {
    fn settings(&self) -> Result<ConfigMap> {
        let mut map = match &self.config {
            Some(path) => read_config(path)?,
            None => ConfigMap::new(),
        };
        let mut put = |key: &str, value: Option<String>| {
            if let Some(v) = value {
                map.insert(key.to_string(), v);
            }
        };
        put("T", self.t.map(|v| v.to_string()));
        put("tau", self.tau.map(|v| v.to_string()));
        put("threshold_mode", self.threshold_mode.clone());
        put("factorization", self.factorization.clone());
        put("scaling", self.scaling.clone());
        put("c", self.c.map(|v| v.to_string()));
        put("alpha", self.alpha.map(|v| v.to_string()));
        put("epsilon", self.epsilon.map(|v| v.to_string()));
        put("gamma", self.gamma.map(|v| v.to_string()));
        put("n_min", self.n_min.map(|v| v.to_string()));
        put("n_max", self.n_max.map(|v| v.to_string()));
        put("n_step", self.n_step.map(|v| v.to_string()));
        put("validation", self.validation.map(|v| v.to_string()));
        put("out", self.out.as_ref().map(|p| p.display().to_string()));
        for entry in &self.set {
            let (k, v) = entry
                .split_once('=')
                .ok_or_else(|| Error::InvalidArgument(format!("expected KEY=VALUE, found `{entry}`")))?;
            map.insert(k.trim().replace('-', "_"), v.trim().to_string());
        }
        Ok(map)
    }
}

impl SweepArgs {
    fn config(&self, single: Option<usize>) -> Result<SweepConfig> {
        let mut map = self.common.settings()?;
        if let Some(f) = &self.function {
            map.insert("function".into(), f.clone());
        }
        if let Some(k) = &self.kernel {
            map.insert("kernel".into(), k.clone());
        }
        if let Some(n) = single {
            map.insert("n_min".into(), n.to_string());
            map.insert("n_max".into(), n.to_string());
        }
        SweepConfig::from_settings(&map)
    }
}

fn print_report(r: &ApproximationReport) {
    let opt = |v: Option<f64>| v.map_or("-".to_string(), |x| format!("{x:.6e}"));
    println!("N               {}", r.n);
    println!("M               {}", r.m);
    println!("epsilon         {:.6e}", r.epsilon);
    println!("err_l2          {:.6e}", r.err_l2);
    println!("err_max         {:.6e}", r.err_max);
    println!("coeff_norm      {:.6e}", r.coeff_norm);
    println!("ratio           {}", opt(r.ratio));
    println!("rank            {}", r.rank);
    println!("sigma1          {:.6e}", r.sigma1);
    println!("predicted_limit {}", opt(r.predicted_limit));
    if r.warning.is_some() {
        println!("warning         every singular value fell below the threshold");
    }
}

fn predict(args: &PredictArgs) -> Result<()> {
    let c_opt = optimal_c(args.t, args.tau)?;
    let c = args.c.unwrap_or(c_opt);
    println!("optimal c              {c_opt:.16e}");
    println!("optimal c (min{{1,c*}})  {:.16e}", optimal_c_constrained(args.t, args.tau)?);
    println!("c                      {c:.16e}");
    println!("limiting accuracy      {:.16e}", limiting_accuracy(c, args.t, args.tau)?);
    println!("min N (linear)         {}", min_n_linear(c, args.t, args.b, args.tau)?);
    if let Some(n) = args.n {
        println!("epsilon bound at N     {:.16e}", epsilon_lower_bound(args.t, args.b, n, args.tau)?);
        if let Some(k) = args.k {
            let policy = match args.alpha {
                Some(alpha) => ScalingPolicy::Power { c, alpha },
                None => ScalingPolicy::Linear { c },
            };
            let p = predicted_rate(k, n, &policy, args.t, args.tau)?;
            println!("predicted algebraic    {:.16e}", p.algebraic);
            println!("predicted limiting     {:.16e}", p.limiting);
        }
    }
    Ok(())
}

fn write_or_print(out: Option<&PathBuf>, text: &str, emit: impl FnOnce(&std::path::Path) -> Result<()>) -> Result<()> {
    match out {
        Some(path) => {
            emit(path)?;
            eprintln!("wrote {} rows to {}", text.lines().count().saturating_sub(1), path.display());
        }
        None => print!("{text}"),
    }
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Approx { args, n } => {
            let config = args.config(n)?;
            print_report(&run_single(&config, config.n_range.min)?);
        }
        Command::Sweep(args) => {
            let config = args.config(None)?;
            let reports = run_sweep(&config)?;
            let text = reports_to_csv(&reports);
            write_or_print(config.output.as_ref(), &text, |p| emit_csv(&reports, p))?;
        }
        Command::Pde(args) => {
            let mut map = args.common.settings()?;
            if let Some(p) = &args.problem {
                map.insert("problem".into(), p.clone());
            }
            if let Some(f) = args.boundary_factor {
                map.insert("boundary_factor".into(), f.to_string());
            }
            let config = PdeConfig::from_settings(&map)?;
            let reports = config.run_sweep()?;
            let text = pde_reports_to_csv(&reports);
            write_or_print(config.output.as_ref(), &text, |p| emit_pde_csv(&reports, p))?;
        }
        Command::Predict(args) => predict(&args)?,
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
