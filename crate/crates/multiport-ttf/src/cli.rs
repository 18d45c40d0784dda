//! Command-line front end.

use std::collections::BTreeSet;
use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, CommandFactory, FromArgMatches, Parser, Subcommand, ValueEnum};
use multiport_ttf_core::povm::amplitudes_finite;
use multiport_ttf_core::resolvability::{
    critical_eps_finite, critical_eps_infinite, first_increase, phase_diagram, DEFAULT_MU,
};
use multiport_ttf_core::sim::{ExperimentSpec, DEFAULT_TRIALS};
use multiport_ttf_core::tomography::{crb, gram, FRAME_SINGULAR_TOL};
use multiport_ttf_core::ttf::{ttf_closed_form, TtfMonteCarlo};
use multiport_ttf_core::{
    AmplitudeMatrix, DeviceConfig, Error as CoreError, PhotonDistribution, Ports, TomographyKit,
};

use crate::config::{self, ConfigError};
use crate::parallel::{self, build_pool, map_ordered, threads_from_env};
use crate::range::{parse_f64_list, parse_ports_list, parse_u64_list};
use crate::table::{Cell, Table};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Clap(#[from] clap::Error),
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("{0}")]
    Domain(String),
    #[error("{0}")]
    Numerical(String),
    #[error("cannot write output: {0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Clap(e) if !e.use_stderr() => 0,
            CliError::Clap(_) | CliError::Usage(_) | CliError::Config(_) | CliError::Io(_) => 1,
            CliError::Domain(_) => 2,
            CliError::Numerical(_) => 3,
        }
    }
}

impl From<CoreError> for CliError {
    fn from(e: CoreError) -> Self {
        use CoreError::*;
        match e {
            SingularFrame(_) | SingularAmplitudes | SingularFisher | NonMonotone(_)
            | RejectionRate { .. } | Overflow(_) | TableLimit { .. } => {
                CliError::Numerical(e.to_string())
            }
            _ => CliError::Domain(e.to_string()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Show {
    Matrix,
    Traces,
    Duals,
    GramSpectrum,
}

#[derive(Debug, Parser)]
#[command(name = "multiport-ttf", version, about = "Tomographic transfer functions of multiport click detectors")]
pub struct Cli {
    /// File of `key = value` lines supplying defaults for any long flag.
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct OutputArgs {
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    pub format: Format,

    /// Write to this file instead of stdout.
    #[arg(long, short, value_name = "PATH")]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// TTF over a sweep of devices, closed form and optional Monte Carlo.
    Ttf {
        #[arg(long, value_parser = dims)]
        d: ::std::vec::Vec<usize>,
        /// Output ports: integers, ranges, or `inf`.
        #[arg(long, value_parser = ports, default_value = "inf")]
        s: ::std::vec::Vec<Ports>,
        #[arg(long, value_parser = losses, default_value = "0")]
        eps: ::std::vec::Vec<f64>,
        /// Simplex samples per device; 0 skips Monte Carlo.
        #[arg(long, default_value_t = 0)]
        mc_samples: u64,
        /// Required whenever --mc-samples is positive.
        #[arg(long)]
        seed: Option<u64>,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// Resolvable dimension against loss for an infinite-port device.
    PhaseDiagram {
        #[arg(long, value_parser = dim)]
        d: usize,
        #[arg(long, value_parser = threshold, default_value_t = DEFAULT_MU)]
        mu: f64,
        #[arg(long, value_parser = losses, default_value = "0..0.99:0.01")]
        eps: ::std::vec::Vec<f64>,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// Largest loss keeping the top outcome resolvable.
    CriticalEps {
        #[arg(long, value_parser = dims)]
        d: ::std::vec::Vec<usize>,
        #[arg(long, value_parser = ports, default_value = "inf")]
        s: ::std::vec::Vec<Ports>,
        #[arg(long, value_parser = threshold, default_value_t = DEFAULT_MU)]
        mu: f64,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// Finite-shot MSE of the linear estimator against the Cramér-Rao bound.
    Simulate {
        #[arg(long, value_parser = one_port, default_value = "inf")]
        s: Ports,
        #[arg(long, value_parser = dim)]
        d: usize,
        #[arg(long, value_parser = loss, default_value_t = 0.0)]
        eps: f64,
        /// True photon-number distribution; uniform when omitted.
        #[arg(long, value_parser = probs)]
        rho: Option<::std::vec::Vec<f64>>,
        #[arg(long, value_parser = shot_counts, default_value = "100,10000,1000000")]
        shots: ::std::vec::Vec<u64>,
        #[arg(long, value_parser = clap::value_parser!(u64).range(1..), default_value_t = DEFAULT_TRIALS)]
        trials: u64,
        #[arg(long, required = true)]
        seed: u64,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// Dump the amplitude matrix or derived quantities of one device.
    Povm {
        #[arg(long, value_parser = one_port)]
        s: Ports,
        #[arg(long, value_parser = dim)]
        d: usize,
        #[arg(long, value_parser = loss, default_value_t = 0.0)]
        eps: f64,
        #[arg(long, value_enum, default_value_t = Show::Matrix)]
        show: Show,
        #[command(flatten)]
        out: OutputArgs,
    },
}

// List flags hold a whole sweep in one value; the fully qualified
// `::std::vec::Vec` field type stops clap treating them as repeatable.
fn dim(s: &str) -> Result<usize, String> {
    let d: usize = s
        .trim()
        .parse()
        .map_err(|_| format!("expected an integer dimension, got {s:?}"))?;
    if d < 2 {
        return Err(format!("d must be at least 2, got {d}"));
    }
    Ok(d)
}

fn dims(s: &str) -> Result<Vec<usize>, String> {
    let v = parse_u64_list(s)?;
    if let Some(bad) = v.iter().find(|&&d| d < 2) {
        return Err(format!("d must be at least 2, got {bad}"));
    }
    Ok(v.into_iter().map(|d| d as usize).collect())
}

fn ports(s: &str) -> Result<Vec<Ports>, String> {
    parse_ports_list(s)
}

fn one_port(s: &str) -> Result<Ports, String> {
    match parse_ports_list(s)?.as_slice() {
        [p] => Ok(*p),
        _ => Err(format!("expected a single port count or inf, got {s:?}")),
    }
}

fn loss(s: &str) -> Result<f64, String> {
    match losses(s)?.as_slice() {
        [e] => Ok(*e),
        _ => Err(format!("expected a single loss probability, got {s:?}")),
    }
}

fn losses(s: &str) -> Result<Vec<f64>, String> {
    let v = parse_f64_list(s)?;
    if let Some(bad) = v.iter().find(|e| !(0.0..1.0).contains(*e)) {
        return Err(format!("loss probability eps must lie in [0, 1), got {bad}"));
    }
    Ok(v)
}

fn threshold(s: &str) -> Result<f64, String> {
    let mu: f64 = s.trim().parse().map_err(|_| format!("expected a number, got {s:?}"))?;
    if !(mu > 0.0 && mu < 1.0) {
        return Err(format!("threshold mu must lie in (0, 1), got {mu}"));
    }
    Ok(mu)
}

fn probs(s: &str) -> Result<Vec<f64>, String> {
    let v = parse_f64_list(s)?;
    if v.iter().any(|&p| p < 0.0) {
        return Err("probabilities must be non-negative".into());
    }
    Ok(v)
}

fn shot_counts(s: &str) -> Result<Vec<u64>, String> {
    let v = parse_u64_list(s)?;
    if v.contains(&0) {
        return Err("shot counts must be positive".into());
    }
    Ok(v)
}

fn command() -> clap::Command {
    Cli::command().mut_subcommands(|s| s.args_override_self(true))
}

/// Index of the subcommand token and the `--config` path, if any.
fn scan(args: &[OsString]) -> (Option<usize>, Option<PathBuf>) {
    let mut config = None;
    let mut i = 1;
    let mut sub = None;
    while i < args.len() {
        let a = args[i].to_string_lossy();
        if a == "--config" {
            config = args.get(i + 1).map(PathBuf::from);
            i += 2;
            continue;
        }
        if let Some(p) = a.strip_prefix("--config=") {
            config = Some(PathBuf::from(p));
        } else if sub.is_none() && !a.starts_with('-') {
            sub = Some(i);
        }
        i += 1;
    }
    (sub, config)
}

/// Splices config-file defaults in front of the user's own flags so that
/// explicit flags override them.
fn with_config(args: Vec<OsString>) -> Result<Vec<OsString>, CliError> {
    let (Some(sub), Some(path)) = scan(&args) else {
        return Ok(args);
    };
    let values = config::load(&path)?;
    let cmd = command();
    let name = args[sub].to_string_lossy().into_owned();
    let Some(subcmd) = cmd.find_subcommand(&name) else {
        return Ok(args);
    };
    let known: BTreeSet<String> = cmd
        .get_subcommands()
        .flat_map(|c| c.get_arguments().filter_map(|a| a.get_long().map(str::to_owned)))
        .collect();
    let here: BTreeSet<&str> = subcmd.get_arguments().filter_map(|a| a.get_long()).collect();
    let mut injected = Vec::new();
    for (key, value) in &values {
        if key == "config" || !known.contains(key) {
            return Err(CliError::Usage(format!(
                "config file {}: unknown key {key:?}",
                path.display()
            )));
        }
        // keys meant for other subcommands are skipped
        if here.contains(key.as_str()) {
            injected.push(OsString::from(format!("--{key}={value}")));
        }
    }
    let mut out = args[..=sub].to_vec();
    out.extend(injected);
    out.extend_from_slice(&args[sub + 1..]);
    Ok(out)
}

pub fn parse<I, T>(args: I) -> Result<Cli, CliError>
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let args = with_config(args.into_iter().map(Into::into).collect())?;
    let matches = command().try_get_matches_from(args)?;
    Ok(Cli::from_arg_matches(&matches)?)
}

fn device(ports: Ports, d: usize, eps: f64) -> Result<(DeviceConfig, AmplitudeMatrix), CliError> {
    let cfg = DeviceConfig::new(ports, d, eps)?;
    let b = AmplitudeMatrix::for_device(&cfg)?;
    Ok((cfg, b))
}

fn require_ic(cfg: &DeviceConfig) -> Result<(), CliError> {
    match cfg.ports() {
        Ports::Finite(s) if !cfg.has_enough_ports() => {
            Err(CoreError::NotInformationallyComplete { s, d: cfg.d() }.into())
        }
        _ => Ok(()),
    }
}

fn ports_cell(p: Ports) -> Cell {
    match p {
        Ports::Finite(s) => Cell::from(s),
        Ports::Infinite => Cell::from("inf"),
    }
}

fn cmd_ttf(d: &[usize], s: &[Ports], eps: &[f64], mc: u64, seed: Option<u64>) -> Result<Table, CliError> {
    let seed = match (mc, seed) {
        (0, _) => None,
        (_, Some(seed)) => Some(seed),
        (_, None) => {
            return Err(CliError::Usage(
                "--seed is required when --mc-samples is positive".into(),
            ))
        }
    };
    let mut points = Vec::new();
    for &d in d {
        for &p in s {
            for &e in eps {
                let cfg = DeviceConfig::new(p, d, e)?;
                require_ic(&cfg)?;
                points.push(cfg);
            }
        }
    }
    let rows = map_ordered(&points, |cfg| -> Result<Vec<Cell>, CliError> {
        let closed = ttf_closed_form(cfg)?.value;
        let (value, se) = match seed {
            Some(seed) => {
                let b = AmplitudeMatrix::for_device(cfg)?;
                let r = parallel::ttf_monte_carlo(&TtfMonteCarlo::new(&b, mc, seed)?)?;
                (Some(r.value), r.standard_error())
            }
            None => (None, None),
        };
        Ok(vec![
            cfg.d().into(),
            ports_cell(cfg.ports()),
            cfg.eps().into(),
            closed.into(),
            value.into(),
            se.into(),
        ])
    });
    let mut t = Table::new(["d", "s", "eps", "ttf_closed", "ttf_mc", "mc_se"]);
    for row in rows {
        t.push(row?);
    }
    Ok(t)
}

fn cmd_phase_diagram(d: usize, mu: f64, eps: &[f64]) -> Result<Table, CliError> {
    let rows = phase_diagram(d, mu, eps)?;
    let mut sorted = rows.clone();
    sorted.sort_by(|a, b| a.eps.total_cmp(&b.eps));
    if let Some(i) = first_increase(&sorted) {
        return Err(CliError::Numerical(format!(
            "resolvable dimension increases with loss between eps = {} and eps = {}",
            sorted[i - 1].eps, sorted[i].eps
        )));
    }
    let mut t = Table::new(["eps", "d_res_numeric", "d_res_bound"]);
    for r in rows {
        t.push(vec![r.eps.into(), r.d_res_numeric.into(), r.clamped_bound(d).into()]);
    }
    Ok(t)
}

fn cmd_critical_eps(d: &[usize], s: &[Ports], mu: f64) -> Result<Table, CliError> {
    let mut points = Vec::new();
    for &d in d {
        for &p in s {
            require_ic(&DeviceConfig::new(p, d, 0.0)?)?;
            points.push((d, p));
        }
    }
    let rows = map_ordered(&points, |&(d, p)| -> Result<Vec<Cell>, CliError> {
        let inf = critical_eps_infinite(d, mu)?;
        let exact = match p {
            Ports::Infinite => Some(inf.exact),
            Ports::Finite(s) => critical_eps_finite(s, d, mu)?,
        };
        Ok(vec![d.into(), ports_cell(p), exact.into(), inf.approx.into()])
    });
    let mut t = Table::new(["d", "s", "eps_crit_exact", "eps_crit_approx"]);
    for row in rows {
        t.push(row?);
    }
    Ok(t)
}

#[allow(clippy::too_many_arguments)]
fn cmd_simulate(
    s: Ports,
    d: usize,
    eps: f64,
    rho: Option<&[f64]>,
    shots: &[u64],
    trials: u64,
    seed: u64,
) -> Result<Table, CliError> {
    let (cfg, b) = device(s, d, eps)?;
    require_ic(&cfg)?;
    let rho = match rho {
        Some(p) => PhotonDistribution::from_slice(p)?,
        None => PhotonDistribution::uniform(d),
    };
    let base = ExperimentSpec::new(&b, rho, shots[0], trials, seed)?;
    let bound = crb(&b, base.rho())?;
    let mut t = Table::new(["N", "n_mse", "std_error", "crb", "ratio"]);
    for &n in shots {
        let mse = parallel::empirical_mse(&base.with_shots(n));
        t.push(vec![
            n.into(),
            mse.n_mse.into(),
            mse.std_error.into(),
            bound.into(),
            (mse.n_mse / bound).into(),
        ]);
    }
    Ok(t)
}

fn matrix_table(m: &multiport_ttf_core::Matrix) -> Table {
    let mut t = Table::new(std::iter::once("j\\n".to_owned()).chain((0..m.ncols()).map(|n| n.to_string())));
    for j in 0..m.nrows() {
        let mut row = vec![Cell::from(j)];
        row.extend(m.row(j).iter().map(|&x| Cell::from(x)));
        t.push(row);
    }
    t
}

fn cmd_povm(s: Ports, d: usize, eps: f64, show: Show) -> Result<Table, CliError> {
    let (cfg, b) = match s {
        Ports::Finite(_) => {
            let cfg = DeviceConfig::new(s, d, eps)?;
            let b = amplitudes_finite(&cfg)?;
            (cfg, b)
        }
        Ports::Infinite => device(s, d, eps)?,
    };
    Ok(match show {
        Show::Matrix => {
            let mut t = matrix_table(b.entries());
            let mut sums = vec![Cell::from("sum")];
            sums.extend(b.column_sums().iter().map(|&x| Cell::from(x)));
            t.push(sums);
            t
        }
        Show::Traces => {
            let mut t = Table::new(["j", "trace"]);
            for (j, &tr) in b.traces().iter().enumerate() {
                t.push(vec![j.into(), tr.into()]);
            }
            t
        }
        Show::Duals => {
            require_ic(&cfg)?;
            matrix_table(TomographyKit::new(&b)?.duals())
        }
        Show::GramSpectrum => {
            let mut ev: Vec<f64> = gram(&b.povm()).symmetric_eigenvalues().iter().copied().collect();
            ev.sort_by(f64::total_cmp);
            let mut t = Table::new(["k", "eigenvalue", "near_zero"]);
            for (k, &x) in ev.iter().enumerate() {
                t.push(vec![k.into(), x.into(), (x < FRAME_SINGULAR_TOL).into()]);
            }
            t
        }
    })
}

impl Command {
    pub fn output(&self) -> &OutputArgs {
        match self {
            Command::Ttf { out, .. }
            | Command::PhaseDiagram { out, .. }
            | Command::CriticalEps { out, .. }
            | Command::Simulate { out, .. }
            | Command::Povm { out, .. } => out,
        }
    }

    pub fn table(&self) -> Result<Table, CliError> {
        match self {
            Command::Ttf { d, s, eps, mc_samples, seed, .. } => cmd_ttf(d, s, eps, *mc_samples, *seed),
            Command::PhaseDiagram { d, mu, eps, .. } => cmd_phase_diagram(*d, *mu, eps),
            Command::CriticalEps { d, s, mu, .. } => cmd_critical_eps(d, s, *mu),
            Command::Simulate { s, d, eps, rho, shots, trials, seed, .. } => {
                cmd_simulate(*s, *d, *eps, rho.as_deref(), shots, *trials, *seed)
            }
            Command::Povm { s, d, eps, show, .. } => cmd_povm(*s, *d, *eps, *show),
        }
    }
}

pub fn render(table: &Table, format: Format) -> String {
    match format {
        Format::Csv => table.to_csv(),
        Format::Json => table.to_json(),
    }
}

pub fn execute<I, T>(args: I) -> Result<(), CliError>
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = parse(args)?;
    let threads = threads_from_env().map_err(CliError::Usage)?;
    let table = build_pool(threads).install(|| cli.command.table())?;
    let out = cli.command.output();
    let text = render(&table, out.format);
    match &out.output {
        Some(path) => std::fs::write(path, text)?,
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(text.as_bytes())?;
            stdout.flush()?;
        }
    }
    Ok(())
}

/// Runs the CLI and returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    match execute(args) {
        Ok(()) => 0,
        Err(CliError::Clap(e)) => {
            let _ = e.print();
            if e.use_stderr() {
                1
            } else {
                0
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
