// SPDX-License-Identifier: MIT OR Apache-2.0

//! `breakcast` command-line interface.
//!
//! Exit status: 0 on success, 2 when a flag fails validation, 1 on a
//! numerical or I/O failure.

use std::fmt::Write as _;
use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use breakcast::experiment::{self, KernelParams, ScenarioConfig, GRID_D, GRID_R};
use breakcast::kernel::{self, DEFAULT_ABS_TOL, DEFAULT_DFT_SIZE};
use breakcast::predictors::{DegeneratePolicy, OlsOptions};
use breakcast::simulate::{simulate_trial, InnovationSpec, Interval, ModelPrior};
use breakcast::transfer::{eval_h, ComplexValue};
use breakcast::{Error, TapMethod};
use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(name = "breakcast", version)]
#[command(
    about = "One-step-ahead forecasting of ultra-short AR(1) sequences with a structural break"
)]
struct Cli {
    /// Write results here instead of stdout
    #[arg(long, short, global = true)]
    output: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Evaluate H(z) at a point or on a unit-circle grid (CSV: z_re,z_im,h_re,h_im)
    Transfer(TransferArgs),
    /// Impulse-response taps (CSV: t,h,method,residual)
    Kernel(KernelArgs),
    /// Simulated paths (CSV: trial,t,x,beta1,beta2,theta)
    Simulate(SimulateArgs),
    /// Monte Carlo RMSE panel over (r, d)
    RunPanel(PanelArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum VariantArg {
    /// H = K
    K,
    /// H = K·F
    Kh,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum InnovationArg {
    Gaussian,
    Gamma,
    PseudoUniform,
    Ma1,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum MethodArg {
    Dft,
    Quadrature,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum DegenerateArg {
    ZeroSlope,
    Error,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum FormatArg {
    Csv,
    Json,
    Markdown,
}

#[derive(Debug, Clone, Args)]
struct KernelFlags {
    /// Predicting-kernel parameter gamma
    #[arg(long, allow_hyphen_values = true, default_value_t = 1.1)]
    gamma: f64,
    /// Smoother parameter a, in (0, 1)
    #[arg(long, allow_hyphen_values = true, default_value_t = 0.6)]
    a: f64,
    /// Smoother parameter p, in (1/2, 1)
    #[arg(long, allow_hyphen_values = true, default_value_t = 0.7)]
    p: f64,
    /// Smoother power m
    #[arg(long, default_value_t = 2)]
    m: u32,
    /// Smoother order N
    #[arg(long = "cap-n", default_value_t = 100)]
    cap_n: u32,
    /// Tap computation method
    #[arg(long, value_enum, default_value_t = MethodArg::Dft)]
    method: MethodArg,
    /// DFT size for the sampling method (power of two >= 1024)
    #[arg(long, default_value_t = DEFAULT_DFT_SIZE)]
    dft_size: usize,
    /// Absolute tolerance for the quadrature method
    #[arg(long, default_value_t = DEFAULT_ABS_TOL)]
    tol: f64,
}

impl KernelFlags {
    fn params(&self) -> KernelParams {
        KernelParams {
            gamma_k: self.gamma,
            a: self.a,
            p: self.p,
            m: self.m,
            cap_n: self.cap_n,
        }
    }

    fn tap_method(&self) -> TapMethod {
        match self.method {
            MethodArg::Dft => TapMethod::DftSampling {
                dft_size: self.dft_size,
            },
            MethodArg::Quadrature => TapMethod::Quadrature { abs_tol: self.tol },
        }
    }

    fn spec(&self, variant: VariantArg, r: f64) -> Result<breakcast::KernelSpec, Error> {
        let (k, kh) = self.params().specs(r)?;
        Ok(match variant {
            VariantArg::K => k,
            VariantArg::Kh => kh,
        })
    }
}

#[derive(Debug, Clone, Args)]
struct ModelFlags {
    /// Noise scale sigma
    #[arg(long, allow_hyphen_values = true, default_value_t = experiment::DEFAULT_SIGMA)]
    sigma: f64,
    /// Smallest break time (1 or 2); the largest is d - 2
    #[arg(long, default_value_t = 2)]
    theta_min: usize,
    /// Time offset k in the pseudo-uniform innovation exp(t + k + 3 atan s)
    /// [default: 0, or 1 under --table 4]
    #[arg(long)]
    pu_offset: Option<u32>,
    /// Master seed
    #[arg(long, env = "BREAKCAST_SEED", default_value_t = experiment::DEFAULT_SEED)]
    seed: u64,
}

#[derive(Debug, Clone, Args)]
struct OlsFlags {
    /// Centre the learning sequence before the AR(1) fit
    #[arg(long)]
    ols_demean: bool,
    /// Fit an intercept in the AR(1) regression
    #[arg(long)]
    ols_intercept: bool,
    /// What to do when the AR(1) regressor has no variance
    #[arg(long, value_enum, default_value_t = DegenerateArg::ZeroSlope)]
    ols_degenerate: DegenerateArg,
}

impl OlsFlags {
    fn options(&self) -> OlsOptions {
        OlsOptions {
            demean: self.ols_demean,
            intercept: self.ols_intercept,
            degenerate_policy: match self.ols_degenerate {
                DegenerateArg::ZeroSlope => DegeneratePolicy::ZeroSlope,
                DegenerateArg::Error => DegeneratePolicy::Error,
            },
        }
    }
}

#[derive(Debug, Args)]
struct TransferArgs {
    #[arg(long, value_enum, default_value_t = VariantArg::Kh)]
    variant: VariantArg,
    #[arg(long, allow_hyphen_values = true, default_value_t = 0.8)]
    r: f64,
    /// Real part of a single evaluation point
    #[arg(long, requires = "im", allow_hyphen_values = true)]
    re: Option<f64>,
    /// Imaginary part of a single evaluation point
    #[arg(long, requires = "re", allow_hyphen_values = true)]
    im: Option<f64>,
    /// Number of equispaced unit-circle points when no point is given
    #[arg(long, default_value_t = 16)]
    grid: usize,
    #[command(flatten)]
    kernel: KernelFlags,
}

#[derive(Debug, Args)]
struct KernelArgs {
    #[arg(long, value_enum, default_value_t = VariantArg::Kh)]
    variant: VariantArg,
    #[arg(long, allow_hyphen_values = true, default_value_t = 0.8)]
    r: f64,
    /// Number of taps
    #[arg(long, default_value_t = 6)]
    count: usize,
    /// Index of the first tap
    #[arg(long, default_value_t = 0, allow_hyphen_values = true)]
    first_index: i64,
    #[command(flatten)]
    kernel: KernelFlags,
}

#[derive(Debug, Args)]
struct SimulateArgs {
    /// Learning-sequence length
    #[arg(long, default_value_t = 4)]
    d: usize,
    /// Number of trials
    #[arg(long, short, default_value_t = 1)]
    n: u64,
    #[arg(long, value_enum, default_value_t = InnovationArg::Gaussian)]
    innovation: InnovationArg,
    /// Range of beta1 as `lo,hi`
    #[arg(long, default_value = "0,1", allow_hyphen_values = true)]
    beta1: Interval,
    /// Range of beta2 as `lo,hi`
    #[arg(long, default_value = "0,1", allow_hyphen_values = true)]
    beta2: Interval,
    #[command(flatten)]
    model: ModelFlags,
}

#[derive(Debug, Args)]
struct PanelArgs {
    /// Reference table preset (1-5)
    #[arg(long, requires = "panel")]
    table: Option<u8>,
    /// Panel letter within the table
    #[arg(long, requires = "table")]
    panel: Option<char>,
    /// Kernel parameters r, comma separated
    #[arg(long, allow_hyphen_values = true, value_delimiter = ',')]
    r_list: Option<Vec<f64>>,
    /// Sequence lengths d, comma separated
    #[arg(long, value_delimiter = ',')]
    d_list: Option<Vec<usize>>,
    /// Monte Carlo trials per cell
    #[arg(long)]
    n_sim: Option<u64>,
    #[arg(long, value_enum)]
    innovation: Option<InnovationArg>,
    /// Range of beta1 as `lo,hi`
    #[arg(long, allow_hyphen_values = true)]
    beta1: Option<Interval>,
    /// Range of beta2 as `lo,hi`
    #[arg(long, allow_hyphen_values = true)]
    beta2: Option<Interval>,
    #[arg(long, value_enum, default_value_t = FormatArg::Csv)]
    format: FormatArg,
    /// Worker threads
    #[arg(long, default_value_t = default_workers())]
    workers: usize,
    #[command(flatten)]
    model: ModelFlags,
    #[command(flatten)]
    ols: OlsFlags,
    #[command(flatten)]
    kernel: KernelFlags,
}

fn default_workers() -> usize {
    std::thread::available_parallelism().map_or(1, |n| n.get())
}

fn innovation(arg: InnovationArg, pu_offset: u32) -> InnovationSpec {
    match arg {
        InnovationArg::Gaussian => InnovationSpec::IidGaussian,
        InnovationArg::Gamma => InnovationSpec::ShiftedGamma,
        InnovationArg::PseudoUniform => InnovationSpec::ScaledPseudoUniform {
            phase_offset: pu_offset,
        },
        InnovationArg::Ma1 => InnovationSpec::Ma1Gaussian,
    }
}

fn transfer(args: &TransferArgs) -> Result<String, Error> {
    let spec = args.kernel.spec(args.variant, args.r)?;
    let points: Vec<ComplexValue> = match (args.re, args.im) {
        (Some(re), Some(im)) => vec![ComplexValue::new(re, im)],
        _ => {
            if args.grid < 1 {
                return Err(Error::Domain {
                    name: "grid",
                    reason: "must be >= 1".into(),
                });
            }
            let step = std::f64::consts::TAU / args.grid as f64;
            (0..args.grid)
                .map(|k| ComplexValue::from_polar(1.0, step * k as f64))
                .collect()
        }
    };
    let mut out = String::from("z_re,z_im,h_re,h_im\n");
    for z in points {
        let h = eval_h(z, &spec)?;
        let _ = writeln!(out, "{},{},{},{}", z.re, z.im, h.re, h.im);
    }
    Ok(out)
}

fn kernel_taps(args: &KernelArgs) -> Result<String, Error> {
    let spec = args.kernel.spec(args.variant, args.r)?;
    let ir = kernel::compute(
        &spec,
        args.kernel.tap_method(),
        args.first_index,
        args.count,
    )?;
    let mut out = String::from("t,h,method,residual\n");
    for (t, h) in ir.indexed() {
        let _ = writeln!(
            out,
            "{t},{h},{},{}",
            ir.method().name(),
            ir.max_imag_residual()
        );
    }
    Ok(out)
}

fn simulate(args: &SimulateArgs) -> Result<String, Error> {
    if args.n < 1 {
        return Err(Error::Domain {
            name: "n",
            reason: "must be >= 1".into(),
        });
    }
    let prior = ModelPrior::new(
        args.beta1,
        args.beta2,
        args.model.sigma,
        args.model.theta_min,
    )?;
    let spec = innovation(args.innovation, args.model.pu_offset.unwrap_or(0));
    let mut out = String::from("trial,t,x,beta1,beta2,theta\n");
    for s in 1..=args.n {
        let (path, _) = simulate_trial(&prior, spec, args.d, args.model.seed, s)?;
        for (t, x) in path.x.iter().enumerate() {
            let m = &path.model;
            let _ = writeln!(out, "{s},{t},{x},{},{},{}", m.beta1, m.beta2, m.theta);
        }
    }
    Ok(out)
}

fn run_panel(args: &PanelArgs) -> Result<String, Error> {
    let mut template = ScenarioConfig {
        seed: args.model.seed,
        sigma: args.model.sigma,
        theta_min: args.model.theta_min,
        kernel: args.kernel.params(),
        ols: args.ols.options(),
        tap_method: args.kernel.tap_method(),
        ..ScenarioConfig::default()
    };
    let mut r_list = GRID_R.to_vec();
    let mut title = None;
    if let (Some(table), Some(panel)) = (args.table, args.panel) {
        let preset = experiment::table_preset(table, panel)?;
        template = preset.apply(&template);
        r_list = preset.r_list.clone();
        title = Some(preset.title);
    }
    if let Some(spec) = args.innovation {
        template.innovation = innovation(spec, args.model.pu_offset.unwrap_or(0));
    }
    if let (Some(offset), InnovationSpec::ScaledPseudoUniform { phase_offset }) =
        (args.model.pu_offset, &mut template.innovation)
    {
        *phase_offset = offset;
    }
    if let Some(b) = args.beta1 {
        template.beta1_range = b;
    }
    if let Some(b) = args.beta2 {
        template.beta2_range = b;
    }
    if let Some(n) = args.n_sim {
        template.n_sim = n;
    }
    if let Some(r) = &args.r_list {
        r_list = r.clone();
    }
    let d_list = args.d_list.clone().unwrap_or_else(|| GRID_D.to_vec());

    // fail on bad flags before spending time on any cell
    for &r in &r_list {
        for &d in &d_list {
            ScenarioConfig { r, d, ..template }.validate()?;
        }
    }

    let mut panel = experiment::run_panel(&template, &r_list, &d_list, args.workers)?;
    if let Some(t) = title {
        panel = panel.with_title(t);
    }
    match args.format {
        FormatArg::Csv => panel.to_csv(),
        FormatArg::Json => panel.to_json(),
        FormatArg::Markdown => Ok(panel.to_markdown()),
    }
}

fn run(cli: &Cli) -> Result<String, Error> {
    match &cli.command {
        Command::Transfer(args) => transfer(args),
        Command::Kernel(args) => kernel_taps(args),
        Command::Simulate(args) => simulate(args),
        Command::RunPanel(args) => run_panel(args),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(text) => {
            if let Some(path) = &cli.output {
                if let Err(e) = fs::write(path, text) {
                    eprintln!("error: io: cannot write {}: {e}", path.display());
                    return ExitCode::from(1);
                }
            } else {
                print!("{text}");
            }
            ExitCode::SUCCESS
        }
        Err(Error::Domain { name, reason }) => {
            eprintln!("error: invalid value for --{name}: {reason}");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {}: {e}", e.module());
            ExitCode::from(1)
        }
    }
}
