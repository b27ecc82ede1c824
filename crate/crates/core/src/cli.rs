//! Command-line front end: configuration, subcommands and output files.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::basis::{enumerate, level_states};
use crate::checks::{commutator_check, mixing_defect, oracle_deviation, quartic_multiplet_check, Fault};
use crate::hamiltonian::{BlockOperators, ModelKind, ModelSpec, PartnerMode};
use crate::pointgroup::{branch_oh_to_td, format_content, parse_orbit_pattern, GroupName, Irrep, PointGroup};
use crate::spectra::{
    first_order_check_harmonic, first_order_check_quartic, is_complex, phase_transition_estimate, scan_irrep,
    sweep_refined, track, trusted_energy, write_ep_row, write_rows, write_sweep_csv, ExceptionalPoint, ScanOptions,
    SweepGrid, BISECT_WIDTH, CUTOFF_STEP, EP_HEADER, SPECTRAL_TOL, TOL_IM,
};
use crate::Error;

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_NUMERICAL: i32 = 2;
pub const EXIT_CHECK: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "ptsym", version, about = "Spectra and exceptional points of PT-symmetric 3D oscillators")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Sweep block spectra over g and write per-irrep CSVs.
    Spectrum(RunArgs),
    /// Locate exceptional points and estimate the symmetry-breaking coupling.
    Exceptional(RunArgs),
    /// Run the selection-rule, symmetry and oracle checks.
    Check(CheckArgs),
    /// Irrep content of an orbit or level, or O_h to T_d branching.
    Classify(ClassifyArgs),
    /// Write one Hamiltonian block as a sparse text listing.
    DumpMatrix(DumpArgs),
}

/// Options shared by the computing subcommands. Every value may also come
/// from `--config`; flags win over the file, the file over defaults.
#[derive(Debug, Default, Clone, Args)]
pub struct RunArgs {
    #[arg(long, value_parser = ["harmonic", "quartic"])]
    pub model: Option<String>,
    /// Total quanta (harmonic) or quanta per mode (quartic).
    #[arg(long)]
    pub limit: Option<String>,
    /// A1, A2, E, T1, T2 or all; a comma-separated list is accepted.
    #[arg(long)]
    pub irrep: Option<String>,
    #[arg(long)]
    pub gmin: Option<String>,
    #[arg(long)]
    pub gmax: Option<String>,
    #[arg(long)]
    pub steps: Option<String>,
    /// Relative threshold on |Im E| for calling an eigenvalue complex.
    #[arg(long = "tol-im")]
    pub tol_im: Option<String>,
    /// Final bisection bracket width in g.
    #[arg(long = "bisect-width")]
    pub bisect_width: Option<String>,
    #[arg(long)]
    pub out: Option<String>,
    #[arg(long)]
    pub threads: Option<String>,
    /// single: one partner per irrep copy; all: whole isotypic subspace.
    #[arg(long, value_parser = ["single", "all"])]
    pub partners: Option<String>,
    /// Bisect exceptional points only up to this Re E: a number, `auto`
    /// (the trusted window) or `none`.
    #[arg(long)]
    pub emax: Option<String>,
    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct CheckArgs {
    #[command(flatten)]
    pub run: RunArgs,
    #[arg(long, hide = true, default_value = "none")]
    pub inject_fault: String,
}

#[derive(Debug, Clone, Args)]
pub struct ClassifyArgs {
    #[arg(long, default_value = "Td")]
    pub group: String,
    /// Orbit pattern such as `2n,2m,2k+1`, or explicit quanta `1,1,2`.
    #[arg(long, conflicts_with_all = ["level", "branch"])]
    pub orbit: Option<String>,
    /// Harmonic level ν.
    #[arg(long, conflicts_with = "branch")]
    pub level: Option<u32>,
    /// O_h irrep to restrict to T_d.
    #[arg(long)]
    pub branch: Option<String>,
}

#[derive(Debug, Clone, Args)]
pub struct DumpArgs {
    #[command(flatten)]
    pub run: RunArgs,
    /// Coupling of the dumped block (defaults to gmax).
    #[arg(long)]
    pub g: Option<String>,
}

/// Upper energy for bisecting exceptional points.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Ceiling {
    Auto,
    Fixed(f64),
    Unbounded,
}

/// Validated settings of one run.
#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub model: ModelKind,
    pub limit: u32,
    pub irreps: Vec<Irrep>,
    pub grid: SweepGrid,
    pub tol_im: f64,
    pub bisect_width: f64,
    pub out: PathBuf,
    pub threads: usize,
    pub partners: PartnerMode,
    pub ceiling: Ceiling,
    /// Coupling for single-matrix commands.
    pub g: Option<f64>,
}

pub const CONFIG_KEYS: [&str; 13] = [
    "model",
    "limit",
    "irrep",
    "gmin",
    "gmax",
    "steps",
    "tol-im",
    "bisect-width",
    "out",
    "threads",
    "partners",
    "emax",
    "g",
];

/// A problem with the command line or configuration (exit code 1).
#[derive(Debug)]
pub struct UsageError(pub String);

impl std::fmt::Display for UsageError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

fn usage(msg: impl Into<String>) -> UsageError {
    UsageError(msg.into())
}

/// Parses a flat `key = value` file. Blank lines and `#` comments are
/// skipped; `_` in keys is read as `-`.
pub fn parse_config_file(text: &str) -> Result<BTreeMap<String, String>, UsageError> {
    let mut out = BTreeMap::new();
    for (n, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| usage(format!("config line {}: expected key=value", n + 1)))?;
        let key = k.trim().replace('_', "-");
        if !CONFIG_KEYS.contains(&key.as_str()) {
            return Err(usage(format!("config line {}: unknown key `{}`", n + 1, k.trim())));
        }
        out.insert(key, v.trim().to_string());
    }
    Ok(out)
}

impl RunArgs {
    fn flags(&self) -> BTreeMap<String, String> {
        let pairs = [
            ("model", &self.model),
            ("limit", &self.limit),
            ("irrep", &self.irrep),
            ("gmin", &self.gmin),
            ("gmax", &self.gmax),
            ("steps", &self.steps),
            ("tol-im", &self.tol_im),
            ("bisect-width", &self.bisect_width),
            ("out", &self.out),
            ("threads", &self.threads),
            ("partners", &self.partners),
            ("emax", &self.emax),
        ];
        pairs
            .into_iter()
            .filter_map(|(k, v)| v.clone().map(|v| (k.to_string(), v)))
            .collect()
    }

    /// Merges defaults, the config file and flags, then validates.
    pub fn resolve(&self, extra: &[(&str, Option<String>)]) -> Result<RunConfig, UsageError> {
        let mut settings = match &self.config {
            Some(path) => {
                let text = fs::read_to_string(path)
                    .map_err(|e| usage(format!("cannot read config {}: {e}", path.display())))?;
                parse_config_file(&text)?
            }
            None => BTreeMap::new(),
        };
        settings.extend(self.flags());
        for (k, v) in extra {
            if let Some(v) = v {
                settings.insert(k.to_string(), v.clone());
            }
        }
        RunConfig::from_settings(&settings)
    }
}

fn parse_value<T: std::str::FromStr>(settings: &BTreeMap<String, String>, key: &str) -> Result<Option<T>, UsageError> {
    settings
        .get(key)
        .map(|v| v.parse::<T>().map_err(|_| usage(format!("invalid value `{v}` for {key}"))))
        .transpose()
}

fn parse_irreps(s: &str) -> Result<Vec<Irrep>, UsageError> {
    if s.eq_ignore_ascii_case("all") {
        return Ok(Irrep::TD.to_vec());
    }
    let mut out = Vec::new();
    for part in s.split(',') {
        let irrep: Irrep = part.trim().parse().map_err(|_| usage(format!("unknown irrep `{part}`")))?;
        if !Irrep::TD.contains(&irrep) {
            return Err(usage(format!("{irrep} is not a T_d irrep")));
        }
        if !out.contains(&irrep) {
            out.push(irrep);
        }
    }
    Ok(out)
}

impl RunConfig {
    pub fn from_settings(settings: &BTreeMap<String, String>) -> Result<Self, UsageError> {
        let model: ModelKind = parse_value(settings, "model")?.unwrap_or(ModelKind::Harmonic);
        let limit: u32 = parse_value(settings, "limit")?.unwrap_or(model.default_limit());
        let irreps = match settings.get("irrep") {
            Some(s) => parse_irreps(s)?,
            None => Irrep::TD.to_vec(),
        };
        let defaults = SweepGrid::default();
        let grid = SweepGrid::new(
            parse_value(settings, "gmin")?.unwrap_or(defaults.g_min),
            parse_value(settings, "gmax")?.unwrap_or(defaults.g_max),
            parse_value(settings, "steps")?.unwrap_or(defaults.steps),
        )
        .map_err(|e| usage(e.to_string()))?;
        let tol_im: f64 = parse_value(settings, "tol-im")?.unwrap_or(TOL_IM);
        let bisect_width: f64 = parse_value(settings, "bisect-width")?.unwrap_or(BISECT_WIDTH);
        if !(tol_im > 0.0 && tol_im.is_finite()) || !(bisect_width > 0.0 && bisect_width.is_finite()) {
            return Err(usage("tolerances must be positive and finite"));
        }
        let threads: usize = match parse_value(settings, "threads")? {
            Some(0) => return Err(usage("threads must be at least 1")),
            Some(n) => n,
            None => std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1),
        };
        let partners: PartnerMode = parse_value(settings, "partners")?.unwrap_or(PartnerMode::Single);
        let ceiling = match settings.get("emax").map(String::as_str) {
            None | Some("auto") => Ceiling::Auto,
            Some("none") | Some("inf") => Ceiling::Unbounded,
            Some(v) => Ceiling::Fixed(v.parse().map_err(|_| usage(format!("invalid value `{v}` for emax")))?),
        };
        let g: Option<f64> = parse_value(settings, "g")?;
        if g.is_some_and(|g| !g.is_finite()) {
            return Err(usage("g must be finite"));
        }
        let out = PathBuf::from(settings.get("out").map(String::as_str).unwrap_or("ptsym-out"));
        // Catch impossible truncations before any work starts.
        ModelSpec::new(model, 0.0, model.truncation(limit)).map_err(|e| usage(e.to_string()))?;
        Ok(Self {
            model,
            limit,
            irreps,
            grid,
            tol_im,
            bisect_width,
            out,
            threads,
            partners,
            ceiling,
            g,
        })
    }

    pub fn spec(&self, g: f64) -> crate::Result<ModelSpec> {
        Ok(ModelSpec::new(self.model, g, self.model.truncation(self.limit))?.with_partners(self.partners))
    }

    /// Energy ceiling for bisection, after resolving `auto`.
    pub fn ceiling_energy(&self) -> crate::Result<Option<f64>> {
        Ok(match self.ceiling {
            Ceiling::Auto => Some(trusted_energy(self.model, self.model.truncation(self.limit))?),
            Ceiling::Fixed(e) => Some(e),
            Ceiling::Unbounded => None,
        })
    }

    fn echo(&self) -> Vec<(String, String)> {
        let irreps: Vec<String> = self.irreps.iter().map(Irrep::to_string).collect();
        let emax = match self.ceiling {
            Ceiling::Auto => "auto".to_string(),
            Ceiling::Fixed(e) => e.to_string(),
            Ceiling::Unbounded => "none".to_string(),
        };
        let mut out = vec![
            ("model", self.model.to_string()),
            ("limit", self.limit.to_string()),
            ("irrep", irreps.join(",")),
            ("gmin", self.grid.g_min.to_string()),
            ("gmax", self.grid.g_max.to_string()),
            ("steps", self.grid.steps.to_string()),
            ("tol-im", self.tol_im.to_string()),
            ("bisect-width", self.bisect_width.to_string()),
            ("out", self.out.display().to_string()),
            ("threads", self.threads.to_string()),
            ("partners", self.partners.to_string()),
            ("emax", emax),
        ];
        if let Some(g) = self.g {
            out.push(("g", g.to_string()));
        }
        out.into_iter().map(|(k, v)| (k.to_string(), v)).collect()
    }
}

/// A failure after configuration was accepted.
#[derive(Debug)]
pub enum RunError {
    Usage(String),
    Numerical(String),
    Check(String),
}

impl From<Error> for RunError {
    fn from(e: Error) -> Self {
        match e {
            Error::InvalidModel(_)
            | Error::InvalidGrid(_)
            | Error::UnknownLabel(_)
            | Error::ForeignIrrep { .. }
            | Error::UntrustedWindow { .. } => RunError::Usage(e.to_string()),
            _ => RunError::Numerical(e.to_string()),
        }
    }
}

impl From<std::io::Error> for RunError {
    fn from(e: std::io::Error) -> Self {
        RunError::Numerical(format!("i/o: {e}"))
    }
}

impl From<UsageError> for RunError {
    fn from(e: UsageError) -> Self {
        RunError::Usage(e.0)
    }
}

/// Parses `args` (including the program name), runs the command and
/// returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    match dispatch(cli.command) {
        Ok(()) => EXIT_OK,
        Err(RunError::Usage(msg)) => {
            eprintln!("error: {msg}");
            EXIT_USAGE
        }
        Err(RunError::Numerical(msg)) => {
            eprintln!("numerical failure: {msg}");
            EXIT_NUMERICAL
        }
        Err(RunError::Check(msg)) => {
            eprintln!("check failed: {msg}");
            EXIT_CHECK
        }
    }
}

fn dispatch(command: Command) -> Result<(), RunError> {
    faer::set_global_parallelism(faer::Par::Seq);
    match command {
        Command::Classify(args) => classify(&args),
        Command::Spectrum(args) => with_pool(args.resolve(&[])?, cmd_spectrum),
        Command::Exceptional(args) => with_pool(args.resolve(&[])?, cmd_exceptional),
        Command::Check(args) => {
            let fault: Fault = args
                .inject_fault
                .parse()
                .map_err(|_| usage(format!("unknown fault `{}`", args.inject_fault)))?;
            with_pool(args.run.resolve(&[])?, |cfg| cmd_check(cfg, fault))
        }
        Command::DumpMatrix(args) => with_pool(args.run.resolve(&[("g", args.g.clone())])?, cmd_dump),
    }
}

fn with_pool(cfg: RunConfig, f: impl FnOnce(&RunConfig) -> Result<(), RunError> + Send) -> Result<(), RunError> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.threads)
        .build()
        .map_err(|e| RunError::Numerical(format!("thread pool: {e}")))?;
    fs::create_dir_all(&cfg.out)?;
    pool.install(|| f(&cfg))
}

fn create(path: &Path) -> Result<BufWriter<File>, RunError> {
    Ok(BufWriter::new(File::create(path)?))
}

/// Writes `manifest.txt`: config echo, library version, realized
/// dimensions and any command-specific facts.
fn write_manifest(cfg: &RunConfig, command: &str, facts: &[(String, String)]) -> Result<(), RunError> {
    let mut w = create(&cfg.out.join("manifest.txt"))?;
    writeln!(w, "command={command}")?;
    writeln!(w, "version={}", env!("CARGO_PKG_VERSION"))?;
    for (k, v) in cfg.echo() {
        writeln!(w, "{k}={v}")?;
    }
    writeln!(w, "states={}", enumerate(cfg.model.truncation(cfg.limit)).len())?;
    for (k, v) in facts {
        writeln!(w, "{k}={v}")?;
    }
    w.flush()?;
    Ok(())
}

fn build_blocks(cfg: &RunConfig, limit: u32) -> Result<Vec<BlockOperators>, RunError> {
    let group = PointGroup::build(GroupName::Td)?;
    let spec = ModelSpec::new(cfg.model, 0.0, cfg.model.truncation(limit))?.with_partners(cfg.partners);
    Ok(cfg
        .irreps
        .iter()
        .map(|&irrep| BlockOperators::build_in(&group, &spec, irrep))
        .collect::<crate::Result<_>>()?)
}

fn cmd_spectrum(cfg: &RunConfig) -> Result<(), RunError> {
    let blocks = build_blocks(cfg, cfg.limit)?;
    let nominal = cfg.grid.points();
    let mut facts = Vec::new();
    let mut combined = create(&cfg.out.join("imag_spectrum.csv"))?;
    writeln!(combined, "g,irrep,branch,re,im")?;
    for ops in &blocks {
        let slices = sweep_refined(ops, &cfg.grid);
        let invalid: Vec<&_> = slices.iter().filter(|s| !s.is_valid()).collect();
        for s in &invalid {
            eprintln!(
                "warning: {} g={}: {}",
                ops.irrep,
                s.g,
                s.failure.as_deref().unwrap_or("solver failure")
            );
        }
        let pairing = slices.iter().filter(|s| s.pairing_defect > SPECTRAL_TOL).count();
        let t0 = slices.iter().find(|s| s.is_valid()).map(|s| s.trace);
        let drift = slices
            .iter()
            .filter(|s| s.is_valid())
            .map(|s| (s.trace - t0.unwrap()).norm() / s.scale.max(1.0))
            .fold(0.0f64, f64::max);
        let tracking = track(&slices)?;
        let mut w = create(&cfg.out.join(format!("sweep_{}.csv", ops.irrep)))?;
        write_sweep_csv(&mut w, &tracking, &nominal)?;
        w.flush()?;
        write_rows(&mut combined, &tracking, &nominal, |e| is_complex(cfg.tol_im, e))?;
        facts.push((format!("dim.{}", ops.irrep), ops.dim().to_string()));
        facts.push((format!("invalid-points.{}", ops.irrep), invalid.len().to_string()));
        facts.push((format!("pairing-violations.{}", ops.irrep), pairing.to_string()));
        facts.push((format!("trace-drift.{}", ops.irrep), format!("{drift:e}")));
        facts.push((format!("ambiguous-steps.{}", ops.irrep), tracking.ambiguous_at.len().to_string()));
        println!("{}: dim {}, {} grid points", ops.irrep, ops.dim(), nominal.len());
    }
    combined.flush()?;
    write_manifest(cfg, "spectrum", &facts)
}

/// The `g_PT` summary line printed by `exceptional`.
pub fn estimate_line(points: &[ExceptionalPoint], window: f64) -> String {
    let est = phase_transition_estimate(points, window);
    format!(
        "# g_PT estimate: g_pt={} window_E={} converged_in_window={} decreasing={} g_min_outside={}",
        est.g_pt.map_or("none".to_string(), crate::spectra::fmt_sig),
        crate::spectra::fmt_sig(est.window),
        est.converged_in_window,
        est.decreasing,
        est.g_min_outside.map_or("none".to_string(), crate::spectra::fmt_sig),
    )
}

fn cmd_exceptional(cfg: &RunConfig) -> Result<(), RunError> {
    let blocks = build_blocks(cfg, cfg.limit)?;
    let enlarged = build_blocks(cfg, cfg.limit + CUTOFF_STEP)?;
    let options = ScanOptions {
        tol_im: cfg.tol_im,
        ceiling: cfg.ceiling_energy()?,
        bisect_width: cfg.bisect_width,
    };
    let window = trusted_energy(cfg.model, cfg.model.truncation(cfg.limit))?;
    let mut points = Vec::new();
    let mut facts = Vec::new();
    for (ops, big) in blocks.iter().zip(&enlarged) {
        let scan = scan_irrep(ops, Some(big), &cfg.grid, &options)?;
        facts.push((format!("dim.{}", ops.irrep), ops.dim().to_string()));
        facts.push((format!("dim-check.{}", ops.irrep), big.dim().to_string()));
        facts.push((format!("exceptional-points.{}", ops.irrep), scan.points.len().to_string()));
        println!("{}: dim {}, {} exceptional points", ops.irrep, ops.dim(), scan.points.len());
        points.extend(scan.points);
    }
    points.sort_by(|a, b| a.g_c.total_cmp(&b.g_c).then(a.irrep.cmp(&b.irrep)).then(a.branch_a.cmp(&b.branch_a)));
    let mut w = create(&cfg.out.join("exceptional_points.csv"))?;
    writeln!(w, "{EP_HEADER}")?;
    for ep in &points {
        write_ep_row(&mut w, ep)?;
    }
    w.flush()?;
    let line = estimate_line(&points, window);
    println!("{line}");
    let mut est = create(&cfg.out.join("phase_transition.txt"))?;
    writeln!(est, "{line}")?;
    est.flush()?;
    facts.push(("check-limit".to_string(), (cfg.limit + CUTOFF_STEP).to_string()));
    facts.push(("window-energy".to_string(), window.to_string()));
    write_manifest(cfg, "exceptional", &facts)
}

/// One row of the `check` table.
#[derive(Clone, Debug)]
pub struct CheckRow {
    pub name: String,
    pub value: f64,
    pub tolerance: f64,
    pub passed: bool,
}

impl CheckRow {
    fn below(name: impl Into<String>, value: f64, tolerance: f64) -> Self {
        Self {
            name: name.into(),
            value,
            tolerance,
            passed: value < tolerance,
        }
    }

    fn failed(name: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            value: f64::NAN,
            tolerance: f64::NAN,
            passed: false,
        }
    }
}

/// Runs the checks for `cfg` and returns one row per check.
pub fn run_checks(cfg: &RunConfig, fault: Fault) -> crate::Result<Vec<CheckRow>> {
    let mut rows = Vec::new();
    match cfg.model {
        ModelKind::Harmonic => {
            let top = cfg.limit.min(10);
            let report = first_order_check_harmonic(0..=top)?;
            let worst = report.levels.iter().map(|l| l.max_entry).fold(0.0, f64::max);
            rows.push(CheckRow::below(format!("first-order nu<={top}"), worst, 1e-12));
        }
        ModelKind::Quartic => match first_order_check_quartic(cfg.limit as usize, 10) {
            Ok(report) => {
                let worst = report.levels.iter().map(|l| l.max_entry).fold(0.0, f64::max);
                rows.push(CheckRow::below("first-order 10 multiplets", worst, 1e-12));
            }
            Err(Error::UntrustedWindow { .. }) => rows.push(CheckRow::failed("first-order 10 multiplets")),
            Err(e) => return Err(e),
        },
    }
    let spec = ModelSpec::new(cfg.model, 0.0, cfg.model.truncation(cfg.limit))?;
    rows.push(CheckRow::below("cross-irrep mixing", mixing_defect(&spec, fault)?, 1e-12));
    let oracle_limit = match cfg.model {
        ModelKind::Harmonic => cfg.limit.min(8),
        ModelKind::Quartic => cfg.limit.min(6),
    };
    for g in [0.1, 0.3, 0.7] {
        let model = ModelSpec::new(cfg.model, g, cfg.model.truncation(oracle_limit))?;
        rows.push(CheckRow::below(
            format!("block-vs-full limit={oracle_limit} g={g}"),
            oracle_deviation(&model)?,
            1e-8,
        ));
    }
    let comm_limit = match cfg.model {
        ModelKind::Quartic => cfg.limit.max(5),
        ModelKind::Harmonic => 12,
    };
    let comm = commutator_check(comm_limit)?;
    rows.push(CheckRow::below(format!("[O1,H0] interior limit={comm_limit}"), comm.o1_h0, 1e-10));
    rows.push(CheckRow::below(format!("[O2,H0] interior limit={comm_limit}"), comm.o2_h0, 1e-10));
    if cfg.model == ModelKind::Quartic {
        match quartic_multiplet_check(cfg.limit, 10, 1e-7) {
            Ok(matches) => {
                let bad = matches.iter().filter(|m| !m.passed()).count();
                rows.push(CheckRow::below("quartic multiplet content", bad as f64, 0.5));
            }
            Err(Error::UntrustedWindow { .. }) => rows.push(CheckRow::failed("quartic multiplet content")),
            Err(e) => return Err(e),
        }
    }
    Ok(rows)
}

fn cmd_check(cfg: &RunConfig, fault: Fault) -> Result<(), RunError> {
    let rows = run_checks(cfg, fault)?;
    let mut table = String::new();
    table.push_str(&format!("{:<40} {:>12} {:>10}  result\n", "check", "value", "tolerance"));
    for r in &rows {
        table.push_str(&format!(
            "{:<40} {:>12.3e} {:>10.0e}  {}\n",
            r.name,
            r.value,
            r.tolerance,
            if r.passed { "PASS" } else { "FAIL" }
        ));
    }
    print!("{table}");
    fs::write(cfg.out.join("check.txt"), &table)?;
    let failed: Vec<&str> = rows.iter().filter(|r| !r.passed).map(|r| r.name.as_str()).collect();
    let facts = vec![
        ("fault".to_string(), fault.to_string()),
        ("checks-failed".to_string(), failed.len().to_string()),
    ];
    write_manifest(cfg, "check", &facts)?;
    if failed.is_empty() {
        Ok(())
    } else {
        Err(RunError::Check(failed.join("; ")))
    }
}

fn cmd_dump(cfg: &RunConfig) -> Result<(), RunError> {
    let g = cfg.g.unwrap_or(cfg.grid.g_max);
    let blocks = build_blocks(cfg, cfg.limit)?;
    let mut facts = Vec::new();
    for ops in &blocks {
        let path = cfg.out.join(format!("matrix_{}.txt", ops.irrep));
        let mut w = create(&path)?;
        ops.block(g).write_dump(&mut w)?;
        w.flush()?;
        facts.push((format!("dim.{}", ops.irrep), ops.dim().to_string()));
        println!("{}", path.display());
    }
    write_manifest(cfg, "dump-matrix", &facts)
}

/// The text `classify` prints for `args`.
pub fn classify_text(args: &ClassifyArgs) -> Result<String, RunError> {
    if let Some(label) = &args.branch {
        let irrep: Irrep = label.parse().map_err(|_| usage(format!("unknown irrep `{label}`")))?;
        return Ok(branch_oh_to_td(irrep)?.to_string());
    }
    let group_name: GroupName = args
        .group
        .parse()
        .map_err(|_| usage(format!("unknown group `{}`", args.group)))?;
    let group = PointGroup::build(group_name)?;
    let states = match (&args.orbit, args.level) {
        (Some(pattern), _) => crate::basis::orbit_states(parse_orbit_pattern(pattern)?),
        (None, Some(nu)) => level_states(nu),
        (None, None) => return Err(usage("classify needs --orbit, --level or --branch").into()),
    };
    let content = group.irrep_content(&states);
    let mut text = format_content(&content);
    if group_name == GroupName::Oh {
        let mut branched: BTreeMap<Irrep, usize> = BTreeMap::new();
        for &(irrep, n) in &content {
            *branched.entry(branch_oh_to_td(irrep)?).or_insert(0) += n;
        }
        let branched: Vec<(Irrep, usize)> = branched.into_iter().collect();
        text.push_str(&format!("\nTd: {}", format_content(&branched)));
    }
    Ok(text)
}

fn classify(args: &ClassifyArgs) -> Result<(), RunError> {
    println!("{}", classify_text(args)?);
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn settings(pairs: &[(&str, &str)]) -> BTreeMap<String, String> {
        pairs.iter().map(|(k, v)| (k.to_string(), v.to_string())).collect()
    }

    #[test]
    fn defaults_follow_model() {
        let h = RunConfig::from_settings(&settings(&[])).unwrap();
        assert_eq!((h.model, h.limit), (ModelKind::Harmonic, 20));
        assert_eq!(h.grid, SweepGrid::default());
        assert_eq!(h.irreps.len(), 5);
        let q = RunConfig::from_settings(&settings(&[("model", "quartic")])).unwrap();
        assert_eq!(q.limit, 16);
    }

    #[test]
    fn invalid_values_are_usage_errors() {
        for (k, v) in [("limit", "-3"), ("gmin", "2"), ("steps", "0"), ("irrep", "A1g"), ("threads", "0")] {
            assert!(RunConfig::from_settings(&settings(&[(k, v)])).is_err(), "{k}={v}");
        }
    }

    #[test]
    fn config_file_parsing() {
        let m = parse_config_file("# comment\nmodel = quartic\n\ntol_im=1e-7 # trailing\n").unwrap();
        assert_eq!(m["model"], "quartic");
        assert_eq!(m["tol-im"], "1e-7");
        assert!(parse_config_file("colour = red").is_err());
        assert!(parse_config_file("limit").is_err());
    }

    #[test]
    fn classify_examples() {
        let args = |group: &str, orbit: Option<&str>, branch: Option<&str>| ClassifyArgs {
            group: group.into(),
            orbit: orbit.map(Into::into),
            level: None,
            branch: branch.map(Into::into),
        };
        assert_eq!(classify_text(&args("Td", Some("2n,2m,2k+1"), None)).unwrap(), "T1, T2");
        let oh = classify_text(&args("Oh", Some("2n+1,2n+1,2n+1"), None)).unwrap();
        assert_eq!(oh.lines().next(), Some("A2u"));
        assert_eq!(classify_text(&args("Td", None, Some("Eg"))).unwrap(), "E");
    }
}
