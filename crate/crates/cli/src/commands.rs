use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use mdm_core::bench::{bench_equals_circuit, phi_grid, BenchConfig};
use mdm_core::circuit::MeasurementStrength;
use mdm_core::datared::{aggregate_runs, efficiency_correct, points_to_csv, points_to_json, reduce_table, ReducedPoint};
use mdm_core::fidelity::{
    avg_estimation_fidelity, avg_operation_fidelity, estimation_fidelity, mdm_bound, operation_fidelity,
    six_state_average, FidelityPoint,
};
use mdm_core::montecarlo::{expected_counts, simulate_counts, CountsTable};
use mdm_core::rng::DEFAULT_SEED;

/// Tolerance for every residual reported by `verify`.
const VERIFY_TOL: f64 = 1e-9;

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Core(mdm_core::Error),
    VerificationFailed,
}

impl From<mdm_core::Error> for CliError {
    fn from(e: mdm_core::Error) -> Self {
        CliError::Core(e)
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Core(e.into())
    }
}

type CliResult = Result<(), CliError>;

#[derive(Debug, Parser)]
#[command(name = "mdm", version, about = "Minimum-disturbance measurement simulator and count-data reduction")]
pub struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Emit the optimal trade-off curve F(G) as `g_avg,f_avg`.
    Bound {
        #[arg(long, default_value_t = 100)]
        n_points: usize,
        /// Output CSV (stdout if omitted).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Analytic fidelities over a range of VBS angles.
    Sweep {
        #[arg(long, default_value_t = 0.0)]
        phi_start_deg: f64,
        #[arg(long, default_value_t = 22.5)]
        phi_end_deg: f64,
        #[arg(long, default_value_t = 10)]
        n_points: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Simulate photon counts, one CSV per VBS angle (and run).
    Shots(ShotsArgs),
    /// Reduce count CSVs to (G_avg, F_avg), aggregating runs that share an angle.
    Reduce {
        /// Count tables to reduce.
        #[arg(required = true)]
        inputs: Vec<PathBuf>,
        /// Relative channel efficiencies to divide out: e0,e1,e2,e3.
        #[arg(long, value_parser = parse_eta)]
        eta: Option<[f64; 4]>,
        /// JSON report (stdout if omitted).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Flat CSV for plotting (defaults to the JSON path with a .csv extension).
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Check the bench model against the abstract circuit and the closed forms.
    Verify {
        /// Bench document supplying imperfections.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        visibility: Option<f64>,
        #[arg(long, value_parser = parse_eta)]
        eta: Option<[f64; 4]>,
    },
}

#[derive(Debug, Args)]
struct ShotsArgs {
    /// Bench document (`key = value`, angles in degrees).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Comma-separated VBS angles in degrees; defaults to 10 points over [0, 22.5].
    #[arg(long, value_delimiter = ',')]
    phi: Vec<f64>,
    #[arg(long, default_value_t = 100_000)]
    shots: u64,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    seed: u64,
    /// Independent repetitions per angle; run k uses seed + k.
    #[arg(long, default_value_t = 1)]
    runs: u64,
    #[arg(long, value_parser = parse_eta)]
    eta: Option<[f64; 4]>,
    /// Write noise-free expected counts instead of sampling.
    #[arg(long)]
    expected: bool,
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
}

fn parse_eta(s: &str) -> Result<[f64; 4], String> {
    let vals: Vec<f64> = s
        .split(',')
        .map(|x| x.trim().parse::<f64>().map_err(|_| format!("bad efficiency {x:?}")))
        .collect::<Result<_, _>>()?;
    vals.try_into().map_err(|v: Vec<f64>| format!("expected 4 efficiencies, got {}", v.len()))
}

fn emit(out: Option<&Path>, text: &str) -> CliResult {
    match out {
        Some(path) => std::fs::write(path, text)?,
        None => std::io::stdout().write_all(text.as_bytes())?,
    }
    Ok(())
}

fn load_config(path: Option<&Path>) -> Result<BenchConfig, CliError> {
    Ok(match path {
        Some(p) => BenchConfig::load(p)?,
        None => BenchConfig::default(),
    })
}

pub fn run(cli: Cli) -> CliResult {
    match cli.command {
        Command::Bound { n_points, out } => cmd_bound(n_points, out.as_deref()),
        Command::Sweep { phi_start_deg, phi_end_deg, n_points, out } => {
            cmd_sweep(phi_start_deg, phi_end_deg, n_points, out.as_deref())
        }
        Command::Shots(args) => cmd_shots(&args),
        Command::Reduce { inputs, eta, out, csv } => cmd_reduce(&inputs, eta, out.as_deref(), csv.as_deref()),
        Command::Verify { config, visibility, eta } => cmd_verify(config.as_deref(), visibility, eta),
    }
}

fn cmd_bound(n_points: usize, out: Option<&Path>) -> CliResult {
    if n_points < 2 {
        return Err(CliError::Usage("--n-points must be at least 2".into()));
    }
    let (lo, hi) = (0.5, 2.0 / 3.0);
    let mut text = String::from("g_avg,f_avg\n");
    for i in 0..n_points {
        let g = if i + 1 == n_points { hi } else { lo + (hi - lo) * i as f64 / (n_points - 1) as f64 };
        writeln!(text, "{g},{}", mdm_bound(g)?).unwrap();
    }
    emit(out, &text)
}

fn cmd_sweep(start: f64, end: f64, n_points: usize, out: Option<&Path>) -> CliResult {
    if n_points < 2 {
        return Err(CliError::Usage("--n-points must be at least 2".into()));
    }
    for v in [start, end] {
        if !(0.0..=22.5).contains(&v) {
            return Err(CliError::Usage(format!("sweep endpoints must lie in [0, 22.5] degrees, got {v}")));
        }
    }
    let mut text = String::from("phi_deg,t,r,g_avg,f_avg\n");
    for i in 0..n_points {
        let phi_deg = start + (end - start) * i as f64 / (n_points - 1) as f64;
        let s = MeasurementStrength::from_vbs_angle(phi_deg.to_radians())?;
        let p = FidelityPoint::analytic(s);
        writeln!(text, "{phi_deg},{},{},{},{}", s.t(), s.r(), p.g_avg, p.f_avg).unwrap();
    }
    emit(out, &text)
}

/// File name for one count table, e.g. `counts_phi_22.500_run1.csv`.
pub fn counts_file_name(phi_deg: f64, run: u64, runs: u64) -> String {
    if runs > 1 {
        format!("counts_phi_{phi_deg:06.3}_run{}.csv", run + 1)
    } else {
        format!("counts_phi_{phi_deg:06.3}.csv")
    }
}

fn cmd_shots(args: &ShotsArgs) -> CliResult {
    let mut config = load_config(args.config.as_deref())?;
    if let Some(eta) = args.eta {
        config.eta = eta;
    }
    config.validate()?;
    if args.runs == 0 {
        return Err(CliError::Usage("--runs must be at least 1".into()));
    }
    let phis: Vec<f64> =
        if args.phi.is_empty() { phi_grid(10).iter().map(|p| p.to_degrees()).collect() } else { args.phi.clone() };
    std::fs::create_dir_all(&args.out)?;
    for &phi_deg in &phis {
        let cfg = config.with_phi(phi_deg.to_radians());
        for run in 0..args.runs {
            let mut table = if args.expected {
                expected_counts(&cfg, args.shots)?
            } else {
                simulate_counts(&cfg, args.shots, args.seed.wrapping_add(run))?
            };
            table.meta.phi_deg = Some(phi_deg);
            let path = args.out.join(counts_file_name(phi_deg, run, args.runs));
            table.write(&path)?;
            eprintln!("wrote {}", path.display());
        }
    }
    Ok(())
}

fn cmd_reduce(inputs: &[PathBuf], eta: Option<[f64; 4]>, out: Option<&Path>, csv: Option<&Path>) -> CliResult {
    // Runs are grouped by angle, keyed on the angle rounded to 1e-6 degrees.
    let mut groups: BTreeMap<i64, Vec<ReducedPoint>> = BTreeMap::new();
    for path in inputs {
        let mut table = CountsTable::read(path).map_err(|e| match e {
            mdm_core::Error::Parse { line, msg } => {
                mdm_core::Error::Parse { line, msg: format!("{}: {msg}", path.display()) }
            }
            other => other,
        })?;
        if let Some(eta) = eta {
            table = efficiency_correct(&table, eta)?;
        }
        let phi = table.meta.phi_deg.ok_or_else(|| {
            mdm_core::Error::Parse { line: 0, msg: format!("{}: missing `# phi_deg=` metadata", path.display()) }
        })?;
        groups.entry((phi * 1e6).round() as i64).or_default().push(reduce_table(&table)?);
    }
    let points: Vec<ReducedPoint> = groups.values().map(|runs| aggregate_runs(runs)).collect::<Result<_, _>>()?;

    for p in &points {
        let residual = p.bound_residual().map(|r| format!("{r:+.4}")).unwrap_or_else(|_| "n/a".into());
        eprintln!(
            "phi={:>7.3}°  G_avg={:.4}±{:.4}  F_avg={:.4}±{:.4}  runs={}  F-bound(G)={residual}",
            p.phi_deg.unwrap_or(f64::NAN),
            p.g_avg,
            p.g_std,
            p.f_avg,
            p.f_std,
            p.n_runs
        );
    }

    let json = points_to_json(&points)?;
    emit(out, &(json + "\n"))?;
    let csv_path = csv.map(Path::to_path_buf).or_else(|| out.map(|o| o.with_extension("csv")));
    if let Some(path) = csv_path {
        std::fs::write(path, points_to_csv(&points))?;
    }
    Ok(())
}

fn cmd_verify(config: Option<&Path>, visibility: Option<f64>, eta: Option<[f64; 4]>) -> CliResult {
    let mut cfg = load_config(config)?;
    if let Some(v) = visibility {
        cfg.visibility = v;
    }
    if let Some(e) = eta {
        cfg.eta = e;
    }
    cfg.validate()?;
    let imperfect = cfg.visibility < 1.0 || cfg.mz_phase.rem_euclid(std::f64::consts::TAU) != 0.0;

    let bench_gap = bench_equals_circuit(&cfg, &phi_grid(10))?;

    let strengths: Vec<MeasurementStrength> = (0..50)
        .map(|i| MeasurementStrength::from_t(std::f64::consts::FRAC_1_SQRT_2 + (1.0 - std::f64::consts::FRAC_1_SQRT_2) * i as f64 / 49.0))
        .collect::<Result<_, _>>()?;
    let design_gap = strengths
        .iter()
        .map(|&s| {
            let g = (six_state_average(estimation_fidelity, s) - avg_estimation_fidelity(s)).abs();
            let f = (six_state_average(operation_fidelity, s) - avg_operation_fidelity(s)).abs();
            g.max(f)
        })
        .fold(0.0, f64::max);

    let mut saturation_gap: f64 = 0.0;
    for i in 0..200 {
        let t = std::f64::consts::FRAC_1_SQRT_2 + (1.0 - std::f64::consts::FRAC_1_SQRT_2) * i as f64 / 199.0;
        let r = FidelityPoint::analytic(MeasurementStrength::from_t(t)?).bound_residual()?;
        saturation_gap = saturation_gap.max(r.abs());
    }

    let guess = reduce_table(&expected_counts(&cfg.with_phi(std::f64::consts::FRAC_PI_8), 1)?)?;

    let status = |x: f64| if x < VERIFY_TOL { "ok" } else { "FAIL" };
    println!("bench config: visibility={} mz_phase_deg={} eta={:?} dark_rate={}", cfg.visibility, cfg.mz_phase.to_degrees(), cfg.eta, cfg.dark_rate);
    let bench_status = if bench_gap < VERIFY_TOL {
        "ok"
    } else if imperfect {
        "WARNING (imperfect interferometer)"
    } else {
        "FAIL"
    };
    println!("bench vs circuit max |Δp|     : {bench_gap:.3e}  {bench_status}");
    println!("six-state vs closed form      : {design_gap:.3e}  {}", status(design_gap));
    println!("bound saturation max residual : {saturation_gap:.3e}  {}", status(saturation_gap));
    println!("bench F_avg at phi=22.5°      : {:.6}  (G_avg {:.6})", guess.f_avg, guess.g_avg);

    let failed = (bench_gap >= VERIFY_TOL && !imperfect) || design_gap >= VERIFY_TOL || saturation_gap >= VERIFY_TOL;
    if failed {
        println!("verification FAILED (tolerance {VERIFY_TOL:e})");
        Err(CliError::VerificationFailed)
    } else {
        println!("verification passed (tolerance {VERIFY_TOL:e})");
        Ok(())
    }
}
