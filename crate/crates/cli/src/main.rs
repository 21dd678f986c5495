//! Command-line driver: parses run configurations, dispatches to the compute
//! modules, and writes reproducible CSV/JSON artifacts with a run manifest.
//!
//! Exit codes: 0 success, 2 configuration error, 3 numeric failure (a guard
//! tripped), 4 I/O error. Machine-readable results go to standard output;
//! progress notes go to standard error.

mod config;
mod manifest;

use clap::{Args, Parser, Subcommand};
use config::{ConfigError, KvFile};
use manifest::OutputWriter;
use nhberry::cplx::C64;
use nhberry::dynamics::{self, Compensation, DriveSpec, SweepKind};
use nhberry::geometry::{self, ConnectionKind, DiskGrid, LoopSpec};
use nhberry::gpe::{self, GpeConfig};
use nhberry::model::{ModelConfig, ParamPoint};
use nhberry::report;
use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

#[derive(Parser)]
#[command(
    name = "nhberry",
    version,
    about = "Numerical laboratory for the Berry connections, monopole charge maps, and complex geometric phases of a 2x2 non-Hermitian model"
)]
struct Cli {
    /// Output directory (falls back to $NHBERRY_OUT, then ./nhberry-out)
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Maximum concurrent sweep rows
    #[arg(long, global = true, default_value_t = 1)]
    jobs: usize,

    /// Flat `key = value` configuration file providing defaults
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Sample a connection and curvature field on a horizontal plane
    Field(FieldArgs),
    /// Disk charge-distribution map of a curvature form
    Charges(ChargesArgs),
    /// Loop integral (theoretical geometric phase) of a connection
    Loop(LoopArgs),
    /// Drive one orbit and decompose the phases
    Evolve(EvolveArgs),
    /// Orbit sweeps over radius, non-Hermitian strength, or rate
    Sweep(SweepArgs),
    /// One soliton evolution with phase extraction
    Gpe(GpeArgs),
    /// Soliton phase extraction across a radius grid, both routes
    GpeSweep(GpeSweepArgs),
    /// Run the acceptance suite and report per-criterion results
    Verify(VerifyArgs),
}

#[derive(Args)]
#[command(allow_negative_numbers = true)]
struct FieldArgs {
    #[arg(long)]
    kind: Option<String>,
    #[arg(long)]
    band: Option<String>,
    #[arg(long)]
    z0: Option<f64>,
    /// Plane height Z
    #[arg(long)]
    z: Option<f64>,
    /// Half-width of the sampled square
    #[arg(long)]
    extent: Option<f64>,
    /// Samples per side
    #[arg(long)]
    n: Option<usize>,
}

#[derive(Args)]
#[command(allow_negative_numbers = true)]
struct ChargesArgs {
    #[arg(long)]
    kind: Option<String>,
    #[arg(long)]
    band: Option<String>,
    #[arg(long)]
    z0: Option<f64>,
    #[arg(long)]
    r_max: Option<f64>,
    #[arg(long)]
    n_r: Option<usize>,
    #[arg(long)]
    n_angle: Option<usize>,
    #[arg(long)]
    pillbox_height: Option<f64>,
}

#[derive(Args)]
#[command(allow_negative_numbers = true)]
struct LoopArgs {
    #[arg(long)]
    kind: Option<String>,
    #[arg(long)]
    band: Option<String>,
    #[arg(long)]
    z0: Option<f64>,
    #[arg(long)]
    z: Option<f64>,
    #[arg(long)]
    r: Option<f64>,
    #[arg(long)]
    segments: Option<usize>,
}

#[derive(Args)]
#[command(allow_negative_numbers = true)]
struct EvolveArgs {
    #[arg(long)]
    z0: Option<f64>,
    #[arg(long)]
    z: Option<f64>,
    #[arg(long)]
    r: Option<f64>,
    #[arg(long)]
    omega: Option<f64>,
    #[arg(long)]
    dt: Option<f64>,
    #[arg(long)]
    band: Option<String>,
    #[arg(long)]
    compensation: Option<String>,
    #[arg(long)]
    periods: Option<f64>,
    #[arg(long)]
    fidelity_floor: Option<f64>,
}

#[derive(Args)]
#[command(allow_negative_numbers = true)]
struct SweepArgs {
    /// radius | z0 | omega
    #[arg(long)]
    kind: Option<String>,
    #[arg(long)]
    z0: Option<f64>,
    #[arg(long)]
    z: Option<f64>,
    #[arg(long)]
    r: Option<f64>,
    #[arg(long)]
    omega: Option<f64>,
    #[arg(long)]
    dt: Option<f64>,
    #[arg(long)]
    band: Option<String>,
    #[arg(long)]
    compensation: Option<String>,
    /// Comma-separated values of the swept parameter
    #[arg(long)]
    values: Option<String>,
}

#[derive(Args)]
#[command(allow_negative_numbers = true)]
struct GpeArgs {
    #[arg(long)]
    g: Option<f64>,
    #[arg(long)]
    delta: Option<f64>,
    #[arg(long)]
    delta0: Option<f64>,
    #[arg(long)]
    amplitude: Option<f64>,
    #[arg(long)]
    r: Option<f64>,
    #[arg(long)]
    omega: Option<f64>,
    #[arg(long)]
    n_grid: Option<usize>,
    #[arg(long)]
    dt: Option<f64>,
    #[arg(long)]
    domain_length: Option<f64>,
    #[arg(long)]
    band: Option<String>,
    #[arg(long)]
    compensation: Option<String>,
    #[arg(long)]
    convention: Option<String>,
}

#[derive(Args)]
#[command(allow_negative_numbers = true)]
struct GpeSweepArgs {
    #[command(flatten)]
    base: GpeArgs,
    /// Comma-separated radii
    #[arg(long)]
    r_values: Option<String>,
}

#[derive(Args)]
#[command(allow_negative_numbers = true)]
struct VerifyArgs {
    /// Criterion subset, e.g. 1,4,8 (default: all)
    #[arg(long)]
    criteria: Option<String>,
    /// Criteria suite to run
    #[arg(long, default_value = "primary")]
    suite: String,
}

enum CliError {
    Config(String),
    Numeric(String),
    Io(String),
}

impl CliError {
    fn code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Numeric(_) => 3,
            CliError::Io(_) => 4,
        }
    }

    fn kind(&self) -> &'static str {
        match self {
            CliError::Config(_) => "config",
            CliError::Numeric(_) => "numeric",
            CliError::Io(_) => "io",
        }
    }

    fn message(&self) -> &str {
        match self {
            CliError::Config(m) | CliError::Numeric(m) | CliError::Io(m) => m,
        }
    }
}

impl From<ConfigError> for CliError {
    fn from(e: ConfigError) -> Self {
        CliError::Config(e.to_string())
    }
}

impl From<nhberry::Error> for CliError {
    fn from(e: nhberry::Error) -> Self {
        if e.is_config() {
            CliError::Config(e.to_string())
        } else {
            CliError::Numeric(e.to_string())
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

fn main() {
    let cli = Cli::parse();
    let out_dir = cli
        .out
        .clone()
        .or_else(|| std::env::var_os("NHBERRY_OUT").map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("nhberry-out"));
    let kv = match &cli.config {
        Some(path) => match KvFile::load(path) {
            Ok(kv) => kv,
            Err(e) => {
                fail(&CliError::from(e));
            }
        },
        None => KvFile::default(),
    };
    let result = match &cli.command {
        Command::Field(a) => cmd_field(a, &kv, &out_dir),
        Command::Charges(a) => cmd_charges(a, &kv, &out_dir),
        Command::Loop(a) => cmd_loop(a, &kv, &out_dir),
        Command::Evolve(a) => cmd_evolve(a, &kv, &out_dir),
        Command::Sweep(a) => cmd_sweep(a, &kv, &out_dir, cli.jobs),
        Command::Gpe(a) => cmd_gpe(a, &kv, &out_dir),
        Command::GpeSweep(a) => cmd_gpe_sweep(a, &kv, &out_dir, cli.jobs),
        Command::Verify(a) => cmd_verify(a, &kv, &out_dir),
    };
    if let Err(e) = result {
        fail(&e);
    }
}

fn fail(e: &CliError) -> ! {
    // Machine-readable error on stdout, human-readable note on stderr.
    let json = serde_json::json!({
        "error": { "kind": e.kind(), "message": e.message() }
    });
    println!("{json}");
    eprintln!("error: {}", e.message());
    std::process::exit(e.code());
}

fn jc(z: C64) -> serde_json::Value {
    serde_json::json!({ "re": z.re, "im": z.im })
}

/// Ordered parameter echo for the manifest.
struct Params(BTreeMap<String, String>);

impl Params {
    fn new() -> Self {
        Self(BTreeMap::new())
    }

    fn put(&mut self, key: &str, value: impl ToString) {
        self.0.insert(key.to_string(), value.to_string());
    }
}

/// Deterministic bounded-concurrency map: results land in input order.
fn parallel_map<T, U, F>(items: &[T], jobs: usize, f: F) -> Vec<U>
where
    T: Sync,
    U: Send,
    F: Fn(&T) -> U + Sync,
{
    let jobs = jobs.clamp(1, items.len().max(1));
    if jobs == 1 {
        return items.iter().map(&f).collect();
    }
    let next = AtomicUsize::new(0);
    let slots: Mutex<Vec<Option<U>>> = Mutex::new((0..items.len()).map(|_| None).collect());
    std::thread::scope(|scope| {
        for _ in 0..jobs {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                if i >= items.len() {
                    break;
                }
                let value = f(&items[i]);
                slots.lock().expect("worker poisoned the slot lock")[i] = Some(value);
            });
        }
    });
    slots
        .into_inner()
        .expect("worker poisoned the slot lock")
        .into_iter()
        .map(|slot| slot.expect("every slot filled"))
        .collect()
}

// Per-command allowed configuration keys.
const FIELD_KEYS: &[&str] = &["kind", "band", "z0", "z", "extent", "n"];
const CHARGES_KEYS: &[&str] = &[
    "kind",
    "band",
    "z0",
    "r_max",
    "n_r",
    "n_angle",
    "pillbox_height",
];
const LOOP_KEYS: &[&str] = &["kind", "band", "z0", "z", "r", "segments"];
const EVOLVE_KEYS: &[&str] = &[
    "z0",
    "z",
    "r",
    "omega",
    "dt",
    "band",
    "compensation",
    "periods",
    "fidelity_floor",
];
const SWEEP_KEYS: &[&str] = &[
    "kind",
    "z0",
    "z",
    "r",
    "omega",
    "dt",
    "band",
    "compensation",
    "values",
];
const GPE_KEYS: &[&str] = &[
    "g",
    "delta",
    "delta0",
    "amplitude",
    "r",
    "omega",
    "n_grid",
    "dt",
    "domain_length",
    "band",
    "compensation",
    "convention",
];
const GPE_SWEEP_KEYS: &[&str] = &[
    "g",
    "delta",
    "delta0",
    "amplitude",
    "r",
    "omega",
    "n_grid",
    "dt",
    "domain_length",
    "band",
    "compensation",
    "convention",
    "r_values",
];

fn resolve_f64(flag: Option<f64>, kv: &KvFile, key: &str, default: f64) -> Result<f64, CliError> {
    Ok(flag.or(kv.get_f64(key)?).unwrap_or(default))
}

fn resolve_usize(
    flag: Option<usize>,
    kv: &KvFile,
    key: &str,
    default: usize,
) -> Result<usize, CliError> {
    Ok(flag.or(kv.get_usize(key)?).unwrap_or(default))
}

fn resolve_str<'a>(flag: &'a Option<String>, kv: &'a KvFile, key: &str, default: &'a str) -> &'a str {
    flag.as_deref().or(kv.get_str(key)).unwrap_or(default)
}

fn cmd_field(args: &FieldArgs, kv: &KvFile, out: &Path) -> Result<(), CliError> {
    kv.check_keys(FIELD_KEYS)?;
    let kind = config::parse_kind(resolve_str(&args.kind, kv, "kind", "RR"))?;
    let band = config::parse_band(resolve_str(&args.band, kv, "band", "+"))?;
    let z0 = resolve_f64(args.z0, kv, "z0", 1.0)?;
    let z = resolve_f64(args.z, kv, "z", 0.5)?;
    let extent = resolve_f64(args.extent, kv, "extent", 2.0)?;
    let n = resolve_usize(args.n, kv, "n", 41)?;
    if n < 2 {
        return Err(CliError::Config("n must be at least 2".into()));
    }
    let cfg = ModelConfig::new(z0);

    let mut csv = String::new();
    report::push_header(
        &mut csv,
        &[
            "x", "y", "z", "a_x_re", "a_x_im", "a_y_re", "a_y_im", "a_z_re", "a_z_im", "b_x_re",
            "b_x_im", "b_y_re", "b_y_im", "b_z_re", "b_z_im",
        ],
    );
    let mut skipped = 0usize;
    for iy in 0..n {
        let y = -extent + 2.0 * extent * iy as f64 / (n - 1) as f64;
        for ix in 0..n {
            let x = -extent + 2.0 * extent * ix as f64 / (n - 1) as f64;
            let p = ParamPoint::new(x, y, z);
            let conn = geometry::connection(kind, band, p, &cfg, geometry::default_connection_step(p));
            let curv = geometry::curvature(kind, band, p, &cfg);
            match (conn, curv) {
                (Ok(a), Ok(b)) => report::push_row(
                    &mut csv,
                    &[
                        x, y, z, a.a[0].re, a.a[0].im, a.a[1].re, a.a[1].im, a.a[2].re, a.a[2].im,
                        b.b[0].re, b.b[0].im, b.b[1].re, b.b[1].im, b.b[2].re, b.b[2].im,
                    ],
                ),
                _ => skipped += 1,
            }
        }
    }

    let mut writer = OutputWriter::new(out)?;
    writer.write("field.csv", &csv)?;
    let summary = serde_json::json!({
        "kind": kind.to_string(),
        "band": band.to_string(),
        "z0": z0,
        "z": z,
        "samples": n * n - skipped,
        "skipped_singular": skipped,
    });
    writer.write("field_summary.json", &format!("{summary:#}\n"))?;
    let mut params = Params::new();
    params.put("kind", kind);
    params.put("band", band);
    params.put("z0", z0);
    params.put("z", z);
    params.put("extent", extent);
    params.put("n", n);
    writer.finish(
        "field",
        &params.0,
        serde_json::json!({ "skipped_singular": skipped }),
    )?;
    println!("{summary}");
    Ok(())
}

fn cmd_charges(args: &ChargesArgs, kv: &KvFile, out: &Path) -> Result<(), CliError> {
    kv.check_keys(CHARGES_KEYS)?;
    let kind = config::parse_kind(resolve_str(&args.kind, kv, "kind", "TildeRR"))?;
    let band = config::parse_band(resolve_str(&args.band, kv, "band", "+"))?;
    let z0 = resolve_f64(args.z0, kv, "z0", 1.0)?;
    let r_max = resolve_f64(args.r_max, kv, "r_max", 2.2 * z0.abs().max(1.0))?;
    let n_r = resolve_usize(args.n_r, kv, "n_r", 64)?;
    let n_angle = resolve_usize(args.n_angle, kv, "n_angle", 64)?;
    let pillbox = resolve_f64(args.pillbox_height, kv, "pillbox_height", 1e-2)?;
    let cfg = ModelConfig::new(z0);

    eprintln!("charges: {kind} band {band}, z0 = {z0}, {n_r} x {n_angle} cells");
    let report = geometry::disk_charge_map(kind, band, &cfg, DiskGrid::new(r_max, n_r, n_angle), pillbox)?;

    let mut writer = OutputWriter::new(out)?;
    writer.write("disk_charges.csv", &report.to_csv())?;
    let summary = report.summary_json();
    writer.write("charges_summary.json", &format!("{summary:#}\n"))?;
    let mut params = Params::new();
    params.put("kind", kind);
    params.put("band", band);
    params.put("z0", z0);
    params.put("r_max", r_max);
    params.put("n_r", n_r);
    params.put("n_angle", n_angle);
    params.put("pillbox_height", pillbox);
    writer.finish("charges", &params.0, serde_json::json!({}))?;
    println!("{summary}");
    Ok(())
}

fn cmd_loop(args: &LoopArgs, kv: &KvFile, out: &Path) -> Result<(), CliError> {
    kv.check_keys(LOOP_KEYS)?;
    let kind = config::parse_kind(resolve_str(&args.kind, kv, "kind", "RR"))?;
    let band = config::parse_band(resolve_str(&args.band, kv, "band", "+"))?;
    let z0 = resolve_f64(args.z0, kv, "z0", 1.0)?;
    let z = resolve_f64(args.z, kv, "z", 0.5)?;
    let r = resolve_f64(args.r, kv, "r", 1.0)?;
    let segments = resolve_usize(args.segments, kv, "segments", 64)?;
    let cfg = ModelConfig::new(z0);
    let mut spec = LoopSpec::new(z, r);
    spec.n_segments = segments;

    let raw = geometry::loop_phase_raw(kind, band, &spec, &cfg)?;
    let principal = geometry::loop_phase(kind, band, &spec, &cfg)?;

    let mut writer = OutputWriter::new(out)?;
    let summary = serde_json::json!({
        "kind": kind.to_string(),
        "band": band.to_string(),
        "z0": z0,
        "z": z,
        "r": r,
        "phase": jc(principal),
        "raw_integral": jc(raw),
    });
    writer.write("loop_summary.json", &format!("{summary:#}\n"))?;
    let mut params = Params::new();
    params.put("kind", kind);
    params.put("band", band);
    params.put("z0", z0);
    params.put("z", z);
    params.put("r", r);
    params.put("segments", segments);
    writer.finish("loop", &params.0, serde_json::json!({}))?;
    println!("{summary}");
    Ok(())
}

fn drive_spec_from(
    kv: &KvFile,
    z0: Option<f64>,
    z: Option<f64>,
    r: Option<f64>,
    omega: Option<f64>,
    dt: Option<f64>,
    band: &Option<String>,
    compensation: &Option<String>,
    periods: Option<f64>,
    fidelity_floor: Option<f64>,
) -> Result<DriveSpec, CliError> {
    let band = config::parse_band(resolve_str(band, kv, "band", "+"))?;
    let mut spec = DriveSpec::new(
        resolve_f64(z, kv, "z", 0.5)?,
        resolve_f64(r, kv, "r", 1.0)?,
        resolve_f64(omega, kv, "omega", 0.0005 * std::f64::consts::PI)?,
        resolve_f64(z0, kv, "z0", 1.0)?,
        band,
    );
    spec.dt = resolve_f64(dt, kv, "dt", 2e-3)?;
    spec.compensation =
        config::parse_compensation(resolve_str(compensation, kv, "compensation", "expectation"))?;
    spec.n_periods = resolve_f64(periods, kv, "periods", 1.0)?;
    spec.fidelity_floor = resolve_f64(fidelity_floor, kv, "fidelity_floor", 0.99)?;
    spec.validate()?;
    Ok(spec)
}

fn decomposition_json(d: &dynamics::PhaseDecomposition) -> serde_json::Value {
    serde_json::json!({
        "phi_total": jc(d.phi_total),
        "phi_d": jc(d.phi_d),
        "phi_d_tilde": jc(d.phi_d_tilde),
        "phi_g": jc(d.phi_g),
        "phi_g_tilde": jc(d.phi_g_tilde),
        "phi_g_theory_rr": jc(d.phi_g_theory_rr),
        "phi_g_theory_tilde": jc(d.phi_g_theory_tilde),
        "delta_phi_d": jc(d.delta_phi_d),
        "delta_phi_g": jc(d.delta_phi_g),
        "int_delta_e": jc(d.int_delta_e),
        "min_fidelity": d.min_fidelity,
    })
}

fn cmd_evolve(args: &EvolveArgs, kv: &KvFile, out: &Path) -> Result<(), CliError> {
    kv.check_keys(EVOLVE_KEYS)?;
    let spec = drive_spec_from(
        kv,
        args.z0,
        args.z,
        args.r,
        args.omega,
        args.dt,
        &args.band,
        &args.compensation,
        args.periods,
        args.fidelity_floor,
    )?;
    let cfg = ModelConfig::new(spec.z0);
    eprintln!(
        "evolve: z = {}, r = {}, omega = {:.6}, z0 = {}, {} steps",
        spec.z,
        spec.r,
        spec.omega,
        spec.z0,
        (spec.total_time() / spec.dt).round()
    );
    let trace = dynamics::evolve(&spec, &cfg)?;
    let dec = dynamics::phase_decompose(&trace, &spec, &cfg)?;

    let mut writer = OutputWriter::new(out)?;
    writer.write("evolution.csv", &dynamics::trace_csv(&trace))?;
    let summary = decomposition_json(&dec);
    writer.write("evolve_summary.json", &format!("{summary:#}\n"))?;
    let mut params = Params::new();
    params.put("z", spec.z);
    params.put("r", spec.r);
    params.put("omega", spec.omega);
    params.put("z0", spec.z0);
    params.put("dt", spec.dt);
    params.put("periods", spec.n_periods);
    params.put("band", spec.band);
    writer.finish(
        "evolve",
        &params.0,
        serde_json::json!({
            "min_fidelity": trace.min_fidelity,
            "records": trace.times.len(),
        }),
    )?;
    println!("{summary}");
    Ok(())
}

fn cmd_sweep(args: &SweepArgs, kv: &KvFile, out: &Path, jobs: usize) -> Result<(), CliError> {
    kv.check_keys(SWEEP_KEYS)?;
    let kind = match resolve_str(&args.kind, kv, "kind", "radius") {
        "radius" => SweepKind::Radius,
        "z0" => SweepKind::Z0,
        "omega" => SweepKind::Omega,
        other => {
            return Err(CliError::Config(format!(
                "sweep kind must be radius, z0, or omega, got `{other}`"
            )))
        }
    };
    let base = drive_spec_from(
        kv,
        args.z0,
        args.z,
        args.r,
        args.omega,
        args.dt,
        &args.band,
        &args.compensation,
        None,
        None,
    )?;
    let values = match args.values.as_deref().or(kv.get_str("values")) {
        Some(list) => config::parse_values(list)?,
        None => match kind {
            SweepKind::Radius => (1..=14).map(|i| 0.25 * i as f64).collect(),
            SweepKind::Z0 => (0..=8).map(|i| 0.25 * i as f64).collect(),
            SweepKind::Omega => (1..=5)
                .map(|i| 2e-4 * i as f64 * std::f64::consts::PI)
                .collect(),
        },
    };
    if values.is_empty() {
        return Err(CliError::Config("sweep needs at least one value".into()));
    }
    let cfg = ModelConfig::new(base.z0);
    eprintln!("sweep: {} rows, jobs = {jobs}", values.len());
    let rows: Vec<dynamics::SweepRow> = parallel_map(&values, jobs, |&value| {
        eprintln!("  row {} = {value}", kind.column());
        let mut spec = base;
        match kind {
            SweepKind::Radius => spec.r = value,
            SweepKind::Z0 => spec.z0 = value,
            SweepKind::Omega => spec.omega = value,
        }
        let result = dynamics::evolve(&spec, &cfg)
            .and_then(|t| dynamics::phase_decompose(&t, &spec, &cfg))
            .map_err(|e| e.to_string());
        dynamics::SweepRow { value, result }
    });

    let failed: Vec<serde_json::Value> = rows
        .iter()
        .filter_map(|row| {
            row.result
                .as_ref()
                .err()
                .map(|e| serde_json::json!({ "value": row.value, "error": e }))
        })
        .collect();
    let mut writer = OutputWriter::new(out)?;
    writer.write("phase_sweep.csv", &dynamics::sweep_csv(kind, &rows))?;
    let summary = serde_json::json!({
        "kind": kind.column(),
        "rows": rows.len(),
        "failed": failed,
    });
    writer.write("sweep_summary.json", &format!("{summary:#}\n"))?;
    let mut params = Params::new();
    params.put("kind", kind.column());
    params.put("z", base.z);
    params.put("r", base.r);
    params.put("omega", base.omega);
    params.put("z0", base.z0);
    params.put("dt", base.dt);
    params.put(
        "values",
        values
            .iter()
            .map(|v| v.to_string())
            .collect::<Vec<_>>()
            .join(","),
    );
    writer.finish("sweep", &params.0, summary.clone())?;
    println!("{summary}");
    Ok(())
}

fn gpe_config_from(args: &GpeArgs, kv: &KvFile) -> Result<GpeConfig, CliError> {
    let mut cfg = GpeConfig::new(
        resolve_f64(args.g, kv, "g", -3.6e-6)?,
        resolve_f64(args.delta, kv, "delta", 0.5)?,
        resolve_f64(args.delta0, kv, "delta0", 1.0)?,
        resolve_f64(args.amplitude, kv, "amplitude", 50.0)?,
        resolve_f64(args.r, kv, "r", 1.0)?,
        resolve_f64(args.omega, kv, "omega", 0.03 * std::f64::consts::PI)?,
    );
    cfg.n_grid = resolve_usize(args.n_grid, kv, "n_grid", 2048)?;
    cfg.dt = resolve_f64(args.dt, kv, "dt", 5e-3)?;
    if let Some(length) = args.domain_length.or(kv.get_f64("domain_length")?) {
        cfg.domain_length = length;
    }
    cfg.band = config::parse_band(resolve_str(&args.band, kv, "band", "+"))?;
    cfg.compensation = config::parse_compensation(resolve_str(
        &args.compensation,
        kv,
        "compensation",
        "expectation",
    ))?;
    cfg.energy_convention =
        config::parse_convention(resolve_str(&args.convention, kv, "convention", "full"))?;
    cfg.validate()?;
    Ok(cfg)
}

fn gpe_theory(cfg: &GpeConfig) -> Result<(C64, C64), CliError> {
    let mcfg = cfg.model_config();
    let spec = LoopSpec::new(cfg.delta, cfg.loop_r);
    let rr = geometry::loop_phase(ConnectionKind::RR, cfg.band, &spec, &mcfg)?;
    let tilde = geometry::loop_phase(ConnectionKind::TildeRR, cfg.band, &spec, &mcfg)?;
    Ok((rr, tilde))
}

fn cmd_gpe(args: &GpeArgs, kv: &KvFile, out: &Path) -> Result<(), CliError> {
    kv.check_keys(GPE_KEYS)?;
    let cfg = gpe_config_from(args, kv)?;
    eprintln!(
        "gpe: r = {}, omega = {:.4}, {} grid points, {} steps",
        cfg.loop_r,
        cfg.loop_omega,
        cfg.n_grid,
        (cfg.period() / cfg.dt).round()
    );
    let trace = gpe::gpe_evolve(&cfg)?;
    let (theory_rr, theory_tilde) = gpe_theory(&cfg)?;

    let mut writer = OutputWriter::new(out)?;
    writer.write("gpe_trace.csv", &trace.to_csv())?;
    let summary = serde_json::json!({
        "extracted_phase": jc(trace.extracted_phase),
        "theory_rr": jc(theory_rr),
        "theory_tilde": jc(theory_tilde),
        "soliton_width": cfg.soliton_width(),
        "records": trace.times.len(),
    });
    writer.write("gpe_summary.json", &format!("{summary:#}\n"))?;
    let mut params = Params::new();
    params.put("g", cfg.g);
    params.put("delta", cfg.delta);
    params.put("delta0", cfg.delta0);
    params.put("amplitude", cfg.amplitude);
    params.put("r", cfg.loop_r);
    params.put("omega", cfg.loop_omega);
    params.put("n_grid", cfg.n_grid);
    params.put("dt", cfg.dt);
    writer.finish("gpe", &params.0, serde_json::json!({}))?;
    println!("{summary}");
    Ok(())
}

fn cmd_gpe_sweep(
    args: &GpeSweepArgs,
    kv: &KvFile,
    out: &Path,
    jobs: usize,
) -> Result<(), CliError> {
    kv.check_keys(GPE_SWEEP_KEYS)?;
    let base = gpe_config_from(&args.base, kv)?;
    let radii = match args.r_values.as_deref().or(kv.get_str("r_values")) {
        Some(list) => config::parse_values(list)?,
        None => (0..8)
            .map(|i| 0.25 + (3.5 - 0.25) * i as f64 / 7.0)
            .collect(),
    };
    eprintln!("gpe-sweep: {} radii x 2 routes, jobs = {jobs}", radii.len());

    struct Row {
        r: f64,
        rr: Result<C64, String>,
        tilde: Result<C64, String>,
        theory_rr: Result<C64, String>,
        theory_tilde: Result<C64, String>,
    }
    let rows: Vec<Row> = parallel_map(&radii, jobs, |&r| {
        eprintln!("  row r = {r}");
        let mut cfg = base;
        cfg.loop_r = r;
        let run = |comp: Compensation| -> Result<C64, String> {
            let mut c = cfg;
            c.compensation = comp;
            gpe::gpe_evolve(&c)
                .map(|t| t.extracted_phase)
                .map_err(|e| e.to_string())
        };
        let theory = gpe_theory(&cfg);
        let (theory_rr, theory_tilde) = match theory {
            Ok((a, b)) => (Ok(a), Ok(b)),
            Err(e) => (Err(e.message().to_string()), Err("see rr".to_string())),
        };
        Row {
            r,
            rr: run(Compensation::ExpectationEnergy),
            tilde: run(Compensation::InstantaneousEigenvalue),
            theory_rr,
            theory_tilde,
        }
    });

    let mut csv = String::new();
    report::push_header(
        &mut csv,
        &[
            "r",
            "rr_re",
            "rr_im",
            "theory_rr_re",
            "theory_rr_im",
            "tilde_re",
            "tilde_im",
            "theory_tilde_re",
            "theory_tilde_im",
        ],
    );
    let mut failures = Vec::new();
    for row in &rows {
        match (&row.rr, &row.tilde, &row.theory_rr, &row.theory_tilde) {
            (Ok(rr), Ok(tilde), Ok(trr), Ok(tti)) => report::push_row(
                &mut csv,
                &[
                    row.r, rr.re, rr.im, trr.re, trr.im, tilde.re, tilde.im, tti.re, tti.im,
                ],
            ),
            _ => {
                for (label, v) in [
                    ("rr", &row.rr),
                    ("tilde", &row.tilde),
                    ("theory_rr", &row.theory_rr),
                    ("theory_tilde", &row.theory_tilde),
                ] {
                    if let Err(e) = v {
                        failures.push(serde_json::json!({
                            "r": row.r, "route": label, "error": e,
                        }));
                    }
                }
            }
        }
    }

    let mut writer = OutputWriter::new(out)?;
    writer.write("gpe_sweep.csv", &csv)?;
    let summary = serde_json::json!({
        "rows": rows.len(),
        "failed": failures,
    });
    writer.write("gpe_sweep_summary.json", &format!("{summary:#}\n"))?;
    let mut params = Params::new();
    params.put("g", base.g);
    params.put("delta", base.delta);
    params.put("delta0", base.delta0);
    params.put("amplitude", base.amplitude);
    params.put("omega", base.loop_omega);
    params.put("n_grid", base.n_grid);
    params.put("dt", base.dt);
    params.put(
        "r_values",
        radii
            .iter()
            .map(|v| v.to_string())
            .collect::<Vec<_>>()
            .join(","),
    );
    writer.finish("gpe-sweep", &params.0, summary.clone())?;
    println!("{summary}");
    Ok(())
}

fn cmd_verify(args: &VerifyArgs, kv: &KvFile, out: &Path) -> Result<(), CliError> {
    kv.check_keys(&["criteria", "suite"])?;
    if args.suite != "primary" {
        return Err(CliError::Config(format!(
            "unknown suite `{}` (only `primary` exists)",
            args.suite
        )));
    }
    let ids: Vec<u32> = match args.criteria.as_deref().or(kv.get_str("criteria")) {
        Some(list) => list
            .split(',')
            .map(|t| {
                t.trim()
                    .parse::<u32>()
                    .map_err(|_| CliError::Config(format!("`{t}` is not a criterion id")))
            })
            .collect::<Result<_, _>>()?,
        None => nhberry::acceptance::CRITERIA.iter().map(|&(id, _)| id).collect(),
    };
    let suite = nhberry::acceptance::Suite::new();
    let mut reports = Vec::new();
    for id in ids {
        let report = suite.run(id);
        println!("{}", report.line());
        reports.push(report);
    }
    let all_passed = reports.iter().all(|r| r.passed);
    let mut writer = OutputWriter::new(out)?;
    let json = serde_json::json!({
        "suite": "primary",
        "all_passed": all_passed,
        "criteria": reports,
    });
    writer.write("verify_report.json", &format!("{json:#}\n"))?;
    let mut params = Params::new();
    params.put("suite", &args.suite);
    writer.finish(
        "verify",
        &params.0,
        serde_json::json!({ "all_passed": all_passed }),
    )?;
    if all_passed {
        Ok(())
    } else {
        Err(CliError::Numeric("one or more criteria failed".into()))
    }
}
