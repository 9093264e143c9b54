//! Command-line front end: single-point reports, grid sweeps, stability
//! maps, figure presets, and raw matrix dumps.
//!
//! Exit codes are stable API: 0 success, 2 configuration or solver error,
//! 3 unstable working point (report only), 4 output I/O failure.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use mmsim::dynamics::MODE_ORDER;
use mmsim::entanglement::ALL_PAIRS;
use mmsim::error::{Error, Result};
use mmsim::params::{validate, PhysicalConstants, RawConfig, SystemParams};
use mmsim::pipeline::{evaluate_config, PointResult, PointStatus};
use mmsim::render::render_sweep;
use mmsim::sweep::{
    preset, run_sweep, write_csv, Axis, AxisParam, PointFlag, Sidecar, SweepSpec, PRESET_NAMES,
};

#[derive(Parser)]
#[command(
    name = "mmsim",
    version,
    about = "Steady-state entanglement in two hopping-coupled magnomechanical cavities"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Evaluate one parameter point and print the working point, stability
    /// margin, and every pairwise entanglement value.
    Report {
        #[command(flatten)]
        cfg: ConfigArgs,
        /// Machine-readable output (includes the resolved parameter set).
        #[arg(long)]
        json: bool,
    },
    /// Sweep one or two parameters over a grid and write CSV + JSON sidecar.
    Sweep {
        #[command(flatten)]
        sweep: SweepArgs,
        /// Comma-separated mode pairs (default: preset pairs, or all 15).
        #[arg(long, value_name = "P1,P2,...")]
        pairs: Option<String>,
    },
    /// Sweep the stability margin only (no covariance or entanglement).
    Stability {
        #[command(flatten)]
        sweep: SweepArgs,
    },
    /// Show a figure preset, or list all preset names.
    Preset {
        /// Preset name, e.g. fig2a.
        #[arg(required_unless_present = "list")]
        name: Option<String>,
        /// List all preset names.
        #[arg(long)]
        list: bool,
        /// Parameter file (needed to resolve a named preset).
        #[arg(long, required_unless_present = "list")]
        config: Option<PathBuf>,
        /// Print the resolved sweep spec as JSON.
        #[arg(long)]
        json: bool,
    },
    /// Write the drift/diffusion matrices and stationary covariance as CSV.
    Dump {
        #[command(flatten)]
        cfg: ConfigArgs,
        /// Directory for drift.csv and diffusion.csv.
        #[arg(long, value_name = "DIR")]
        dump_matrices: Option<PathBuf>,
        /// Output path for the 12x12 stationary covariance.
        #[arg(long, value_name = "PATH")]
        dump_covariance: Option<PathBuf>,
    },
}

#[derive(Args)]
struct ConfigArgs {
    /// TOML parameter file.
    #[arg(long)]
    config: PathBuf,
    /// Override a value: an axis key in omega_b units (Delta1, Delta2,
    /// Delta_m1, Delta_m2, hop_Gamma, Delta_sym, Delta_antisym) or a dotted
    /// config path in file units (e.g. drive.b0=3.9e-5).
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    cfg: ConfigArgs,
    /// Figure preset name (see `mmsim preset --list`).
    #[arg(long, conflicts_with = "axis")]
    preset: Option<String>,
    /// Custom axis NAME:START:STOP:COUNT in omega_b units; repeat for 2-D.
    #[arg(long, value_name = "NAME:START:STOP:COUNT")]
    axis: Vec<String>,
    /// Override every axis point count.
    #[arg(long)]
    grid: Option<usize>,
    /// CSV output path; the JSON sidecar lands next to it.
    #[arg(long)]
    out: PathBuf,
    /// Also write one PNG per pair (heatmap for 2-D, line plot for 1-D).
    #[arg(long)]
    render: bool,
    /// Worker threads for grid evaluation.
    #[arg(long, default_value_t = 8)]
    workers: usize,
}

fn main() -> ExitCode {
    // Die quietly on a closed pipe (`mmsim preset --list | head`) instead of
    // panicking mid-print.
    #[cfg(unix)]
    unsafe {
        libc::signal(libc::SIGPIPE, libc::SIG_DFL);
    }
    let cli = Cli::parse();
    match run(cli.cmd) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(match e {
                Error::Io(_) => 4u8,
                _ => 2u8,
            })
        }
    }
}

fn run(cmd: Cmd) -> Result<u8> {
    match cmd {
        Cmd::Report { cfg, json } => cmd_report(&cfg, json),
        Cmd::Sweep { sweep, pairs } => cmd_sweep(&sweep, pairs.as_deref(), false),
        Cmd::Stability { sweep } => cmd_sweep(&sweep, None, true),
        Cmd::Preset {
            name,
            list,
            config,
            json,
        } => cmd_preset(name.as_deref(), list, config.as_deref(), json),
        Cmd::Dump {
            cfg,
            dump_matrices,
            dump_covariance,
        } => cmd_dump(&cfg, dump_matrices.as_deref(), dump_covariance.as_deref()),
    }
}

// ── Config loading and --set handling ───────────────────────────────────────

struct Loaded {
    params: SystemParams,
    /// Axis-style overrides, deferred so sweeps can layer them after preset
    /// overrides; single-point commands apply them immediately.
    axis_sets: Vec<(AxisParam, f64)>,
    set_strings: Vec<String>,
}

impl Loaded {
    fn point_params(&self) -> SystemParams {
        let mut p = self.params.clone();
        for &(param, value) in &self.axis_sets {
            param.apply(&mut p, value);
        }
        p
    }
}

fn load(cfg: &ConfigArgs) -> Result<Loaded> {
    let text = std::fs::read_to_string(&cfg.config)
        .map_err(|e| Error::Config(format!("{}: {e}", cfg.config.display())))?;
    // Parse against the schema first so syntax and unknown-key errors carry
    // line/column positions from the file itself.
    let mut raw = RawConfig::from_toml_str(&text)?;
    let mut axis_sets = Vec::new();
    let mut dotted = Vec::new();
    for s in &cfg.set {
        let (key, value) = s
            .split_once('=')
            .ok_or_else(|| Error::Override(format!("--set expects KEY=VALUE, got `{s}`")))?;
        match key.parse::<AxisParam>() {
            Ok(param) => {
                let x: f64 = value.parse().map_err(|_| {
                    Error::Override(format!("--set {key}: expected a number, got `{value}`"))
                })?;
                axis_sets.push((param, x));
            }
            Err(_) => dotted.push((key, value)),
        }
    }
    if !dotted.is_empty() {
        let mut tree: toml::Value = toml::from_str(&text)
            .map_err(|e| Error::Config(format!("{}: {e}", cfg.config.display())))?;
        for (key, value) in dotted {
            set_toml_path(&mut tree, key, value)?;
        }
        let patched =
            toml::to_string(&tree).map_err(|e| Error::Override(format!("re-encode: {e}")))?;
        raw = RawConfig::from_toml_str(&patched)
            .map_err(|e| Error::Override(format!("after --set: {e}")))?;
    }
    Ok(Loaded {
        params: raw.to_params(),
        axis_sets,
        set_strings: cfg.set.clone(),
    })
}

/// Write `text` at a dotted path like `drive.b0`, creating tables as needed.
/// Numbers stay numbers; anything non-numeric is inserted as a string.
fn set_toml_path(root: &mut toml::Value, key: &str, text: &str) -> Result<()> {
    let segments: Vec<&str> = key.split('.').collect();
    if segments.iter().any(|s| s.is_empty()) {
        return Err(Error::Override(format!("--set {key}: empty path segment")));
    }
    let (leaf, path) = segments.split_last().expect("split yields at least one");
    let mut cursor = root;
    for part in path {
        let table = cursor
            .as_table_mut()
            .ok_or_else(|| Error::Override(format!("--set {key}: `{part}` is not a table")))?;
        cursor = table
            .entry(*part)
            .or_insert_with(|| toml::Value::Table(Default::default()));
    }
    let table = cursor
        .as_table_mut()
        .ok_or_else(|| Error::Override(format!("--set {key}: `{leaf}` is not in a table")))?;
    let value: toml::Value = match text.parse::<f64>() {
        Ok(x) => x.into(),
        Err(_) => text.into(),
    };
    table.insert(leaf.to_string(), value);
    Ok(())
}

fn write_output(path: &Path, bytes: &[u8]) -> Result<()> {
    std::fs::write(path, bytes)
        .map_err(|e| Error::Io(std::io::Error::other(format!("{}: {e}", path.display()))))
}

// ── report ──────────────────────────────────────────────────────────────────

fn cmd_report(cfg: &ConfigArgs, json: bool) -> Result<u8> {
    let loaded = load(cfg)?;
    let params = loaded.point_params();
    let consts = PhysicalConstants::default();
    validate(&params, &consts).into_result()?;
    let (omega, point) = evaluate_config(&params, &consts)?;
    if json {
        println!(
            "{}",
            serde_json::to_string_pretty(&report_json(&params, omega, &point))
                .expect("report serialization cannot fail")
        );
    } else {
        print_report(&params, omega, &point);
    }
    Ok(match point.status {
        PointStatus::Ok => 0,
        _ => 3,
    })
}

fn report_json(params: &SystemParams, omega: [f64; 2], point: &PointResult) -> serde_json::Value {
    use mmsim::params::TWO_PI;
    let wb = params.omega_b[0];
    let mf = &point.mean_field;
    let negativities = point.negativities.as_ref().map(|all| {
        all.iter()
            .map(|(pair, e)| (pair.label(), serde_json::Value::from(*e)))
            .collect::<serde_json::Map<String, serde_json::Value>>()
    });
    serde_json::json!({
        "status": point.status.label(),
        "stability_margin_wb": point.margin / wb,
        "omega_rabi": omega,
        "mean_field": {
            "magnon_abs": [mf.m[0].norm(), mf.m[1].norm()],
            "phonon_shift": mf.q,
            "delta_m_eff_wb": [mf.delta_m_eff[0] / wb, mf.delta_m_eff[1] / wb],
            "g_eff_abs_2pi_hz": [mf.g_eff[0].norm() / TWO_PI, mf.g_eff[1].norm() / TWO_PI],
            "iterations": mf.iterations,
            "residual": mf.residual,
        },
        "lyapunov_residual": point.lyapunov_residual,
        "physicality_offset": point.physicality,
        "negativities": negativities,
        "params": RawConfig::from_params(params),
    })
}

fn print_report(params: &SystemParams, omega: [f64; 2], point: &PointResult) {
    use mmsim::params::TWO_PI;
    let wb = params.omega_b[0];
    let mf = &point.mean_field;
    let stable = if point.status == PointStatus::Ok {
        "stable"
    } else {
        point.status.label()
    };
    println!("status            : {stable}");
    println!("stability margin  : {:+.6e} wb", point.margin / wb);
    println!("omega_rabi        : {:.6e}  {:.6e} rad/s", omega[0], omega[1]);
    println!(
        "|<m>|             : {:.6e}  {:.6e}",
        mf.m[0].norm(),
        mf.m[1].norm()
    );
    println!("<q>               : {:+.6e}  {:+.6e}", mf.q[0], mf.q[1]);
    println!(
        "Delta_m_eff       : {:+.6}  {:+.6} wb",
        mf.delta_m_eff[0] / wb,
        mf.delta_m_eff[1] / wb
    );
    println!(
        "|G_eff|/2pi       : {:.6e}  {:.6e} Hz",
        mf.g_eff[0].norm() / TWO_PI,
        mf.g_eff[1].norm() / TWO_PI
    );
    if let Some(r) = point.lyapunov_residual {
        println!("lyapunov residual : {r:.3e}");
    }
    if let Some(p) = point.physicality {
        println!("physicality offset: {p:+.3e}");
    }
    match &point.negativities {
        Some(all) => {
            println!("log negativity:");
            for (pair, e) in all {
                println!("  {:6} {:.6}", pair.label(), e);
            }
        }
        None => println!("log negativity: unavailable ({})", point.status.label()),
    }
}

// ── sweep / stability ───────────────────────────────────────────────────────

fn parse_axis(text: &str) -> Result<Axis> {
    let parts: Vec<&str> = text.split(':').collect();
    if parts.len() != 4 {
        return Err(Error::InvalidSweep(format!(
            "--axis expects NAME:START:STOP:COUNT, got `{text}`"
        )));
    }
    let param: AxisParam = parts[0].parse()?;
    let bad = |what: &str| Error::InvalidSweep(format!("--axis {text}: bad {what}"));
    let start: f64 = parts[1].parse().map_err(|_| bad("start"))?;
    let stop: f64 = parts[2].parse().map_err(|_| bad("stop"))?;
    let count: usize = parts[3].parse().map_err(|_| bad("count"))?;
    Ok(Axis::new(param, start, stop, count))
}

fn parse_pairs(text: &str) -> Result<Vec<mmsim::entanglement::ModePair>> {
    text.split(',')
        .map(|s| s.trim().parse())
        .collect::<Result<Vec<_>>>()
}

fn build_spec(
    args: &SweepArgs,
    pairs: Option<&str>,
    base: &SystemParams,
    consts: &PhysicalConstants,
) -> Result<SweepSpec> {
    let mut spec = match (&args.preset, args.axis.is_empty()) {
        (Some(name), _) => preset(name, base, consts)?,
        (None, false) => {
            let axes = args
                .axis
                .iter()
                .map(|a| parse_axis(a))
                .collect::<Result<Vec<_>>>()?;
            SweepSpec {
                axes,
                overrides: Vec::new(),
                pairs: ALL_PAIRS.to_vec(),
                stability_only: false,
            }
        }
        (None, true) => {
            return Err(Error::InvalidSweep(
                "a sweep needs --preset or at least one --axis".into(),
            ))
        }
    };
    if let Some(list) = pairs {
        spec.pairs = parse_pairs(list)?;
    }
    if let Some(n) = args.grid {
        spec = spec.with_counts(n);
    }
    Ok(spec)
}

fn cmd_sweep(args: &SweepArgs, pairs: Option<&str>, stability_only: bool) -> Result<u8> {
    let loaded = load(&args.cfg)?;
    let consts = PhysicalConstants::default();
    let mut spec = build_spec(args, pairs, &loaded.params, &consts)?;
    // CLI --set axis keys land after preset overrides, so they win.
    spec.overrides.extend(loaded.axis_sets.iter().copied());
    if stability_only {
        spec.stability_only = true;
        spec.pairs.clear();
    }
    let result = run_sweep(&spec, &loaded.params, &consts, args.workers)?;
    let mut csv = Vec::new();
    write_csv(&result, &loaded.params, &mut csv)?;
    write_output(&args.out, &csv)?;
    let sidecar = Sidecar::new(
        &result,
        &loaded.params,
        args.preset.as_deref(),
        args.workers,
        &csv,
        &loaded.set_strings,
    );
    let sidecar_path = args.out.with_extension("json");
    write_output(&sidecar_path, sidecar.to_json().as_bytes())?;
    let mut written = vec![args.out.clone(), sidecar_path];
    if args.render {
        written.extend(render_sweep(&result, &loaded.params, &args.out.with_extension(""))?);
    }
    let (rows, cols) = spec.shape();
    println!(
        "{} points ({}x{}): {} ok, {} unstable, {} unphysical, {} error; {:.2}s",
        result.points.len(),
        rows,
        cols,
        result.count(PointFlag::Ok),
        result.count(PointFlag::Unstable),
        result.count(PointFlag::Unphysical),
        result.count(PointFlag::Error),
        result.elapsed.as_secs_f64(),
    );
    for path in written {
        println!("wrote {}", path.display());
    }
    Ok(0)
}

// ── preset ──────────────────────────────────────────────────────────────────

fn cmd_preset(name: Option<&str>, list: bool, config: Option<&Path>, json: bool) -> Result<u8> {
    if list {
        for name in PRESET_NAMES {
            println!("{name}");
        }
        return Ok(0);
    }
    let (name, config) = (name.expect("clap enforces"), config.expect("clap enforces"));
    let loaded = load(&ConfigArgs {
        config: config.to_path_buf(),
        set: Vec::new(),
    })?;
    let consts = PhysicalConstants::default();
    let spec = preset(name, &loaded.params, &consts)?;
    if json {
        println!(
            "{}",
            serde_json::to_string_pretty(&spec).expect("spec serialization cannot fail")
        );
        return Ok(0);
    }
    println!("preset {name}");
    for axis in &spec.axes {
        println!(
            "  axis {}: {} .. {} x{} (wb)",
            axis.param, axis.start, axis.stop, axis.count
        );
    }
    for (param, value) in &spec.overrides {
        println!("  fixed {param} = {value} wb");
    }
    let pair_names: Vec<String> = spec.pairs.iter().map(|p| p.label()).collect();
    println!("  pairs: {}", pair_names.join(", "));
    let (rows, cols) = spec.shape();
    if spec.axes.len() == 2 {
        println!("  grid: {rows}x{cols} ({} points)", rows * cols);
    } else {
        println!("  grid: {rows} points");
    }
    Ok(0)
}

// ── dump ────────────────────────────────────────────────────────────────────

fn matrix_csv<const R: usize, const C: usize>(
    m: &nalgebra::SMatrix<f64, R, C>,
    header: &[&str],
) -> String {
    let mut out = String::new();
    out.push_str(&header.join(","));
    out.push('\n');
    for i in 0..R {
        let row: Vec<String> = (0..C).map(|j| format!("{:.17e}", m[(i, j)])).collect();
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}

fn cmd_dump(
    cfg: &ConfigArgs,
    matrices_dir: Option<&Path>,
    covariance_path: Option<&Path>,
) -> Result<u8> {
    if matrices_dir.is_none() && covariance_path.is_none() {
        return Err(Error::Config(
            "nothing to dump: pass --dump-matrices and/or --dump-covariance".into(),
        ));
    }
    let loaded = load(cfg)?;
    let params = loaded.point_params();
    let consts = PhysicalConstants::default();
    validate(&params, &consts).into_result()?;
    let (_, point) = evaluate_config(&params, &consts)?;
    let resolved = toml::to_string(&RawConfig::from_params(&params))
        .expect("config serialization cannot fail");
    if let Some(dir) = matrices_dir {
        std::fs::create_dir_all(dir)
            .map_err(|e| Error::Io(std::io::Error::other(format!("{}: {e}", dir.display()))))?;
        write_output(&dir.join("drift.csv"), matrix_csv(&point.drift, &MODE_ORDER).as_bytes())?;
        let mut diffusion = String::from(MODE_ORDER.join(","));
        diffusion.push('\n');
        let diag: Vec<String> = point.diffusion.iter().map(|d| format!("{d:.17e}")).collect();
        diffusion.push_str(&diag.join(","));
        diffusion.push('\n');
        write_output(&dir.join("diffusion.csv"), diffusion.as_bytes())?;
        write_output(&dir.join("resolved_config.toml"), resolved.as_bytes())?;
        println!("wrote {}", dir.join("drift.csv").display());
        println!("wrote {}", dir.join("diffusion.csv").display());
        println!("wrote {}", dir.join("resolved_config.toml").display());
    }
    if let Some(path) = covariance_path {
        match &point.covariance {
            Some(v) => {
                write_output(path, matrix_csv(v, &MODE_ORDER).as_bytes())?;
                println!("wrote {}", path.display());
                if matrices_dir.is_none() {
                    let cfg_path = path.with_extension("config.toml");
                    write_output(&cfg_path, resolved.as_bytes())?;
                    println!("wrote {}", cfg_path.display());
                }
            }
            None => {
                return Err(Error::Config(format!(
                    "covariance unavailable: point is {} (margin {:+.3e} wb)",
                    point.status.label(),
                    point.margin / params.omega_b[0]
                )))
            }
        }
    }
    Ok(0)
}
