//! `pattern-locate`: simulate rotating-pattern RSSI measurements, estimate
//! positions, run Monte-Carlo sweeps and print Cramér-Rao bounds.
//!
//! Exit codes: 0 success, 2 config or usage error, 3 runtime error.

mod plot;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use pattern_locate::bounds::{crlb_table_csv, CrlbReport};
use pattern_locate::config::{Config, CONFIG_KEYS};
use pattern_locate::estimators::{estimate, estimates_to_csv, locate_unknown_receiver, Knowns};
use pattern_locate::montecarlo::run_sweep;
use pattern_locate::{sample_measurements, AngleDeg, Error, Estimate, MeasurementSet, Method, Scenario};

/// Failure with the exit code it maps to.
#[derive(Debug)]
enum CliError {
    Config(String),
    Runtime(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Runtime(_) => 3,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Config(m) | CliError::Runtime(m) => write!(f, "error: {m}"),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::Config(m) => CliError::Config(m),
            other => CliError::Runtime(other.to_string()),
        }
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

fn config_keys_help() -> String {
    let width = CONFIG_KEYS.iter().map(|(k, _, _)| k.len()).max().unwrap_or(0);
    let mut text = String::from("Config keys (TOML file or --set key=value):\n");
    for (key, unit, description) in CONFIG_KEYS {
        text.push_str(&format!("  {key:<width$}  [{unit}]  {description}\n"));
    }
    text
}

#[derive(Debug, Parser)]
#[command(name = "pattern-locate", version, about = "Single-antenna RSSI positioning from rotating radiation patterns")]
#[command(after_help = config_keys_help())]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct Common {
    /// Scenario config file (TOML); defaults apply when omitted.
    #[arg(long, short)]
    config: Option<PathBuf>,
    /// Override a config key, e.g. `--set sigma_db=1.5` (repeatable).
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
    /// Output directory for CSV/SVG files.
    #[arg(long, short, default_value = ".")]
    out: PathBuf,
    /// Seed for noise and sweeps; beats the environment and the config.
    #[arg(long, env = "PATTERN_LOCATE_SEED")]
    seed: Option<u64>,
    /// Worker threads (default: logical cores). Results do not depend on it.
    #[arg(long)]
    jobs: Option<usize>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Simulate one measurement set and write measurements.csv.
    #[command(after_help = config_keys_help())]
    Simulate {
        #[command(flatten)]
        common: Common,
        /// Also write measurements_second.csv after moving the transmitter by baseline_m.
        #[arg(long)]
        second: bool,
    },
    /// Estimate the receiver position from a measurement CSV.
    #[command(after_help = config_keys_help())]
    Estimate {
        #[command(flatten)]
        common: Common,
        /// Measurement CSV (`delta_phi_deg,rssi_dbm`); simulated from the config when omitted.
        #[arg(long)]
        measurements: Option<PathBuf>,
        /// Second-position CSV for the similarity method.
        #[arg(long)]
        second_measurements: Option<PathBuf>,
        /// Method(s) to run: eqsolve, cid, mle, similarity (default: config `methods`).
        #[arg(long = "method")]
        methods: Vec<String>,
    },
    /// Run a Monte-Carlo sweep and write its CSVs (and an SVG with --plot).
    #[command(after_help = config_keys_help())]
    Sweep {
        #[command(flatten)]
        common: Common,
        /// Override the number of trials per axis point.
        #[arg(long)]
        trials: Option<usize>,
        /// Also render sweep_<axis>.svg.
        #[arg(long)]
        plot: bool,
    },
    /// Print and write the Cramér-Rao bound at the configured position.
    #[command(after_help = config_keys_help())]
    Crlb {
        #[command(flatten)]
        common: Common,
        /// Tabulate over the bearing search range with this step instead (deg).
        #[arg(long)]
        theta_step: Option<f64>,
    },
    /// Tabulate the transmit and receive patterns.
    #[command(after_help = config_keys_help())]
    Patterns {
        #[command(flatten)]
        common: Common,
        /// Angular step of the table (deg).
        #[arg(long, default_value_t = 1.0)]
        step: f64,
    },
}

impl Command {
    fn common(&self) -> &Common {
        match self {
            Command::Simulate { common, .. }
            | Command::Estimate { common, .. }
            | Command::Sweep { common, .. }
            | Command::Crlb { common, .. }
            | Command::Patterns { common, .. } => common,
        }
    }
}

fn load_config(common: &Common) -> CliResult<Config> {
    let mut config = match &common.config {
        Some(path) => Config::load(path, &common.overrides)?,
        None => Config::from_toml_str("", &common.overrides)?,
    };
    if let Some(seed) = common.seed {
        config.set_seed(seed);
    }
    Ok(config)
}

fn write_output(dir: &Path, name: &str, contents: &str) -> CliResult<PathBuf> {
    fs::create_dir_all(dir).map_err(|e| CliError::Runtime(format!("cannot create {}: {e}", dir.display())))?;
    let path = dir.join(name);
    fs::write(&path, contents).map_err(|e| CliError::Runtime(format!("cannot write {}: {e}", path.display())))?;
    Ok(path)
}

fn read_measurements(path: &Path) -> CliResult<MeasurementSet> {
    MeasurementSet::read_csv(path).map_err(|e| CliError::Config(format!("cannot load {}: {e}", path.display())))
}

fn cmd_simulate(common: &Common, second: bool) -> CliResult<()> {
    let config = load_config(common)?;
    let scenario = config.scenario()?;
    let m = sample_measurements(&scenario, config.seed)?;
    let path = write_output(&common.out, "measurements.csv", &m.to_csv_string())?;
    println!("wrote {} ({} samples)", path.display(), m.len());
    if second {
        let moved = scenario.translated(config.baseline_m);
        // a distinct but reproducible stream for the second position
        let m2 = sample_measurements(&moved, config.seed.wrapping_add(1))?;
        let path = write_output(&common.out, "measurements_second.csv", &m2.to_csv_string())?;
        println!(
            "wrote {} ({} samples, transmitter moved {} m)",
            path.display(),
            m2.len(),
            config.baseline_m
        );
    }
    Ok(())
}

fn print_estimate(e: &Estimate) {
    println!(
        "method={} d_hat_m={:.6} theta_hat_deg={:.6} residual={:.6}",
        e.method, e.d_hat, e.theta_hat, e.residual
    );
}

fn cmd_estimate(
    common: &Common,
    measurements: Option<&Path>,
    second: Option<&Path>,
    method_names: &[String],
) -> CliResult<()> {
    let config = load_config(common)?;
    let methods: Vec<Method> = if method_names.is_empty() {
        config.method_list()?
    } else {
        method_names.iter().map(|m| m.parse()).collect::<Result<_, Error>>()?
    };
    let sigma = config.noise_sigma();
    if methods.contains(&Method::Mle) && sigma.is_none() {
        return Err(CliError::Config("method mle needs sigma_db or snr_db in the config".into()));
    }
    let scenario = config.scenario()?;
    let estimator = config.estimator()?;
    let knowns = Knowns::from_scenario(&scenario)?;

    let first = match measurements {
        Some(p) => read_measurements(p)?,
        None => sample_measurements(&scenario, config.seed)?,
    };
    let second_set = |first_given: bool| -> CliResult<MeasurementSet> {
        match (second, first_given) {
            (Some(p), _) => read_measurements(p),
            (None, false) => Ok(sample_measurements(&scenario.translated(config.baseline_m), config.seed.wrapping_add(1))?),
            (None, true) => Err(CliError::Config(
                "method similarity needs --second-measurements with --measurements".into(),
            )),
        }
    };

    let mut rows = Vec::new();
    let mut failures = Vec::new();
    for method in methods {
        let result = if method == Method::Similarity {
            eprintln!("warning: similarity does not use the configured receiver pattern (rx_pattern, rx_gain_db)");
            let second = second_set(measurements.is_some())?;
            locate_unknown_receiver(
                &first,
                &second,
                &scenario.tx_pattern,
                &estimator.theta_line(),
                estimator.similarity,
                config.baseline_m,
            )
            .map(|fix| Estimate {
                d_hat: fix.d0,
                theta_hat: fix.theta0.theta,
                method: Method::Similarity,
                residual: fix.theta0.residual,
                count: fix.theta0.evaluations + fix.theta1.evaluations,
            })
        } else {
            estimate(method, &first, &knowns, sigma, &estimator)
        };
        match result {
            Ok(e) => {
                print_estimate(&e);
                rows.push((0, e));
            }
            Err(Error::Config(m)) => return Err(CliError::Config(format!("{method}: {m}"))),
            Err(e) => {
                eprintln!("{method}: {e}");
                failures.push(format!("{method}: {e}"));
            }
        }
    }
    if !rows.is_empty() {
        write_output(&common.out, "estimates.csv", &estimates_to_csv(&rows))?;
    }
    if failures.is_empty() {
        Ok(())
    } else {
        Err(CliError::Runtime(format!("estimation failed ({})", failures.join("; "))))
    }
}

fn cmd_sweep(common: &Common, trials: Option<usize>, plot: bool) -> CliResult<()> {
    let mut config = load_config(common)?;
    if let Some(t) = trials {
        config.trials = t;
    }
    let sweep = config.sweep()?;
    let result = run_sweep(&sweep)?;
    let stem = format!("sweep_{}", sweep.axis.as_str());
    let csv = write_output(&common.out, &format!("{stem}.csv"), &result.to_csv())?;
    let axis = write_output(&common.out, &format!("{stem}_axis.csv"), &result.axis_csv())?;
    println!("wrote {} and {}", csv.display(), axis.display());
    if plot {
        let svg = write_output(&common.out, &format!("{stem}.svg"), &plot::sweep_svg(&result))?;
        println!("wrote {}", svg.display());
    }
    print!("{}", result.to_csv());
    Ok(())
}

fn cmd_crlb(common: &Common, theta_step: Option<f64>) -> CliResult<()> {
    let config = load_config(common)?;
    if config.noise_sigma().is_none() {
        return Err(CliError::Config("crlb needs sigma_db or snr_db".into()));
    }
    let scenario: Scenario = config.scenario()?;
    let model = config.bias_model()?;
    let thetas: Vec<f64> = match theta_step {
        Some(step) if step > 0.0 => {
            let n = ((config.theta_max_deg - config.theta_min_deg) / step).floor() as usize;
            (0..=n).map(|i| config.theta_min_deg + step * i as f64).collect()
        }
        Some(step) => return Err(CliError::Config(format!("--theta-step must be positive, got {step}"))),
        None => vec![config.theta0_deg],
    };
    let single = thetas.len() == 1;
    let mut rows = Vec::new();
    for theta in thetas {
        let report = match CrlbReport::compute(&scenario, config.d0_m, AngleDeg::new(theta), &model) {
            Ok(r) => r,
            // in a table, bearings where a rotation hits a null have no bound
            Err(e) if !single => {
                eprintln!("skipping theta={theta} deg: {e}");
                continue;
            }
            Err(e) => return Err(e.into()),
        };
        println!(
            "d={:.3} m theta={:.2} deg sigma={:.3} dB: crlb_d={:.6e} m^2 crlb_theta={:.6e} deg^2 bias_factor={:.6}",
            config.d0_m,
            theta,
            report.sigma_db,
            report.crlb_d(),
            report.crlb_theta_deg2(),
            report.bias_factor
        );
        rows.push((theta, report));
    }
    if rows.is_empty() {
        return Err(CliError::Runtime("no bearing in the range has a finite bound".into()));
    }
    let path = write_output(&common.out, "crlb.csv", &crlb_table_csv(&rows))?;
    println!("wrote {}", path.display());
    Ok(())
}

fn cmd_patterns(common: &Common, step: f64) -> CliResult<()> {
    if !(step > 0.0 && step <= 90.0) {
        return Err(CliError::Config(format!("--step must be in (0, 90], got {step}")));
    }
    let config = load_config(common)?;
    let tx = config.tx_pattern()?;
    let rx = config.rx_pattern()?;
    // nulls have no finite dB value; leave those cells empty
    let cell = |r: pattern_locate::Result<f64>| r.map(|v| v.to_string()).unwrap_or_default();
    let mut csv = String::from("angle_deg,tx_gain_db,tx_log_slope_per_rad,rx_gain_db\n");
    let n = (360.0 / step).floor() as usize;
    for i in 0..n {
        let phi = -180.0 + step * i as f64;
        let a = AngleDeg::new(phi);
        csv.push_str(&format!(
            "{phi},{},{},{}\n",
            cell(tx.gain_db(a)),
            cell(tx.log_gain_slope(a)),
            cell(rx.gain_db(a))
        ));
    }
    let path = write_output(&common.out, "patterns.csv", &csv)?;
    println!("wrote {} ({n} angles)", path.display());
    Ok(())
}

fn run(cli: Cli) -> CliResult<()> {
    if let Some(jobs) = cli.command.common().jobs {
        if jobs == 0 {
            return Err(CliError::Config("--jobs must be positive".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build_global()
            .map_err(|e| CliError::Runtime(e.to_string()))?;
    }
    match &cli.command {
        Command::Simulate { common, second } => cmd_simulate(common, *second),
        Command::Estimate {
            common,
            measurements,
            second_measurements,
            methods,
        } => cmd_estimate(common, measurements.as_deref(), second_measurements.as_deref(), methods),
        Command::Sweep { common, trials, plot } => cmd_sweep(common, *trials, *plot),
        Command::Crlb { common, theta_step } => cmd_crlb(common, *theta_step),
        Command::Patterns { common, step } => cmd_patterns(common, *step),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{e}");
            ExitCode::from(e.code())
        }
    }
}
