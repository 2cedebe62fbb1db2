//! Command-line interface for the anisotropic total-variation toolkit.
//!
//! Exit codes: 0 on success, 2 on input errors, 3 when a computation raises
//! a numerical-failure flag.

mod io;
mod plot;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use sha2::{Digest, Sha256};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use tvk_core::atoms::{self, AtomParams, EnergyKind};
use tvk_core::energy::{self, EdgeQuadrature};
use tvk_core::field::{self, AnyField, QuotientMode, SimpleSetSpec};
use tvk_core::gcg::{self, GcgConfig, Kernel, Observation, ObservationKind};
use tvk_core::norm::{self, MatrixNormSpec, VariationalConfig, VectorBallSpec};
use tvk_core::witness::{self, WitnessConfig};
use tvk_core::{CoreError, Mat};

#[derive(Parser)]
#[command(name = "tvk", version, about = "Anisotropic total-variation energies, extremal atoms, and solvers")]
struct Cli {
    /// Worker threads for search loops (falls back to TVK_THREADS).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Matrix norm evaluation and checks.
    Norm {
        #[command(subcommand)]
        command: NormCommand,
    },
    /// Field conversions.
    Field {
        #[command(subcommand)]
        command: FieldCommand,
    },
    /// Total variation of a field.
    Tv(EnergyArgs),
    /// Total deformation of a field.
    Td(EnergyArgs),
    /// Anisotropic perimeter of a polygonal set.
    Perimeter {
        #[arg(long)]
        set: PathBuf,
        /// Norm ball on normal directions (default: Euclidean).
        #[arg(long, conflicts_with = "spec")]
        ball: Option<PathBuf>,
        /// Matrix norm inducing the normal weight.
        #[arg(long)]
        spec: Option<PathBuf>,
    },
    /// Level-set reconstruction check for scalar grid fields.
    Coarea {
        #[arg(long)]
        field: PathBuf,
        #[arg(long)]
        spec: PathBuf,
        #[arg(long, default_value_t = 64)]
        levels: usize,
    },
    /// Atom construction and the family catalog.
    Atoms {
        #[command(subcommand)]
        command: AtomsCommand,
    },
    /// Search for a midpoint decomposition of a unit-energy atom.
    Check {
        #[arg(long)]
        atom: PathBuf,
        /// Override the atom's embedded norm spec.
        #[arg(long)]
        spec: Option<PathBuf>,
        #[arg(long, default_value_t = 500)]
        directions: usize,
        #[arg(long, default_value_t = 7)]
        seed: u64,
        #[arg(long)]
        threshold: Option<f64>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Conditional-gradient solve of a 1d inverse problem.
    Solve {
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Suppress the timestamp comment in the emitted plot.
        #[arg(long)]
        reproducible: bool,
    },
    /// Render an artifact as SVG.
    Plot {
        #[arg(long)]
        artifact: PathBuf,
        #[arg(long, value_enum, default_value_t = PlotKind::Auto)]
        kind: PlotKind,
        #[arg(long)]
        out: PathBuf,
        /// Suppress the timestamp comment (outputs become byte-identical).
        #[arg(long)]
        reproducible: bool,
    },
}

#[derive(Subcommand)]
enum NormCommand {
    /// Evaluate the gauge |A|_K.
    Eval {
        #[arg(long)]
        spec: PathBuf,
        #[arg(long)]
        matrix: PathBuf,
    },
    /// Evaluate the dual gauge (closed form when coded, else variational).
    Dual {
        #[arg(long)]
        spec: PathBuf,
        #[arg(long)]
        matrix: PathBuf,
        /// Force the variational oracle.
        #[arg(long)]
        variational: bool,
        #[arg(long, default_value_t = 20)]
        restarts: usize,
        #[arg(long, default_value_t = 0x7601)]
        seed: u64,
    },
    /// Sampled verification of a structural condition.
    Check {
        #[arg(long, value_enum)]
        condition: Condition,
        #[arg(long)]
        spec: PathBuf,
        #[arg(long, default_value_t = 200)]
        samples: usize,
        #[arg(long, default_value_t = 7)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Condition {
    /// |b tensor nu|_K equals the Euclidean |b| for unit nu.
    RankOneIsotropy,
    /// Left orthogonal invariance with a strict projection inequality.
    Clunky,
    /// Strict convexity along symmetrized rank-one paths.
    SymStrict,
}

#[derive(Subcommand)]
enum FieldCommand {
    /// Sample a polygonal field on a grid (CSV plus metadata sidecar).
    Rasterize {
        #[arg(long)]
        field: PathBuf,
        /// Cells per axis, e.g. "256" or "256,128".
        #[arg(long)]
        grid: String,
        #[arg(long)]
        out: PathBuf,
    },
    /// Project out the energy kernel (constants or rigid motions).
    Normalize {
        #[arg(long)]
        field: PathBuf,
        #[arg(long, value_enum)]
        mode: Mode,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    Constants,
    Rigid,
}

#[derive(Args)]
struct EnergyArgs {
    #[arg(long)]
    field: PathBuf,
    #[arg(long)]
    spec: PathBuf,
    /// Rasterize a polygonal field to this resolution first.
    #[arg(long)]
    grid: Option<String>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Include the per-edge / per-cell breakdown in the report.
    #[arg(long)]
    breakdown: bool,
}

#[derive(Subcommand)]
enum AtomsCommand {
    /// Build an atom from a parameter file.
    Make {
        #[arg(long)]
        family: String,
        #[arg(long)]
        params: PathBuf,
        #[arg(long)]
        spec: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// List the atom families and their mechanisms.
    Catalog,
}

#[derive(Clone, Copy, ValueEnum)]
enum PlotKind {
    Auto,
    Field,
    Certificate,
    Run,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            let numerical = err
                .chain()
                .any(|cause| matches!(cause.downcast_ref::<CoreError>(), Some(CoreError::Numerical(_))));
            if numerical {
                ExitCode::from(3)
            } else {
                ExitCode::from(2)
            }
        }
    }
}

fn threads_from(cli_threads: Option<usize>) -> usize {
    cli_threads
        .or_else(|| std::env::var("TVK_THREADS").ok().and_then(|v| v.parse().ok()))
        .unwrap_or(1)
        .max(1)
}

fn parse_grid(s: &str) -> Result<Vec<usize>> {
    let parts: Result<Vec<usize>> = s
        .split(',')
        .map(|p| p.trim().parse::<usize>().map_err(|e| anyhow!("bad grid size {p:?}: {e}")))
        .collect();
    let parts = parts?;
    if parts.is_empty() || parts.len() > 2 || parts.contains(&0) {
        bail!("grid must have one or two positive axis sizes");
    }
    Ok(parts)
}

fn run(cli: Cli) -> Result<()> {
    let threads = threads_from(cli.threads);
    match cli.command {
        Command::Norm { command } => run_norm(command),
        Command::Field { command } => run_field(command),
        Command::Tv(args) => run_energy(args, EnergyKind::Tv),
        Command::Td(args) => run_energy(args, EnergyKind::Td),
        Command::Perimeter { set, ball, spec } => {
            let set: SimpleSetSpec = io::read_json(&set)?;
            let value = match (ball, spec) {
                (Some(ball), _) => {
                    let ball: VectorBallSpec = io::read_json(&ball)?;
                    energy::anisotropic_perimeter(&set, &ball)?
                }
                (None, Some(spec)) => {
                    let spec: MatrixNormSpec = io::read_json(&spec)?;
                    energy::anisotropic_perimeter_induced(&set, &spec)?
                }
                (None, None) => energy::anisotropic_perimeter(&set, &VectorBallSpec::l2(2))?,
            };
            io::json_to_stdout(&serde_json::json!({ "value": value }))
        }
        Command::Coarea { field, spec, levels } => {
            let field = io::read_field(&field)?;
            let grid = match field {
                AnyField::Grid(g) => g,
                AnyField::Polygonal(_) => bail!("coarea checks run on grid fields; rasterize first"),
            };
            let spec: MatrixNormSpec = io::read_json(&spec)?;
            let report = energy::coarea_check(&grid, &spec, levels)?;
            io::json_to_stdout(&report)
        }
        Command::Atoms { command } => run_atoms(command),
        Command::Check { atom, spec, directions, seed, threshold, out } => {
            let mut atom: atoms::Atom = io::read_json(&atom)?;
            if let Some(spec_path) = spec {
                atom.spec = io::read_json(&spec_path)?;
            }
            let mut cfg = WitnessConfig { directions, seed, threads, ..WitnessConfig::default() };
            if let Some(t) = threshold {
                cfg.step_threshold = t;
            }
            let cert = witness::certify(&atom, &cfg)?;
            io::write_json(&out, &cert)?;
            println!("{}", out.display());
            Ok(())
        }
        Command::Solve { data, config, out, reproducible } => run_solve(&data, &config, &out, reproducible),
        Command::Plot { artifact, kind, out, reproducible } => run_plot(&artifact, kind, &out, reproducible),
    }
}

fn run_norm(cmd: NormCommand) -> Result<()> {
    match cmd {
        NormCommand::Eval { spec, matrix } => {
            let spec: MatrixNormSpec = io::read_json(&spec)?;
            spec.validate()?;
            let a: Mat = io::read_matrix(&matrix)?;
            let value = spec.gauge(&a)?;
            io::json_to_stdout(&serde_json::json!({ "value": value }))
        }
        NormCommand::Dual { spec, matrix, variational, restarts, seed } => {
            let spec: MatrixNormSpec = io::read_json(&spec)?;
            spec.validate()?;
            let a: Mat = io::read_matrix(&matrix)?;
            if variational || spec.dual_spec().is_none() {
                let cfg = VariationalConfig { restarts, seed, ..VariationalConfig::default() };
                let result = spec.dual_gauge_variational(&a, &cfg)?;
                io::json_to_stdout(&serde_json::json!({
                    "value": result.value,
                    "method": "variational",
                    "converged": result.converged,
                    "evaluations": result.evaluations,
                }))?;
                if !result.converged {
                    return Err(CoreError::Numerical("variational dual did not converge".into()).into());
                }
                Ok(())
            } else {
                let value = spec.dual_gauge(&a)?;
                io::json_to_stdout(&serde_json::json!({ "value": value, "method": "closed-form" }))
            }
        }
        NormCommand::Check { condition, spec, samples, seed, out } => {
            let spec: MatrixNormSpec = io::read_json(&spec)?;
            let report = match condition {
                Condition::RankOneIsotropy => norm::check_rank_one_isotropy(&spec, samples, seed)?,
                Condition::Clunky => norm::check_clunky_condition(&spec, samples, seed)?,
                Condition::SymStrict => norm::check_sym_rank_one_strict_convexity(&spec, samples, seed)?,
            };
            if let Some(path) = out {
                io::write_json(&path, &report)?;
                println!("{}", path.display());
            } else {
                io::json_to_stdout(&report)?;
            }
            Ok(())
        }
    }
}

fn run_field(cmd: FieldCommand) -> Result<()> {
    match cmd {
        FieldCommand::Rasterize { field, grid, out } => {
            let any = io::read_field(&field)?;
            let poly = match any {
                AnyField::Polygonal(p) => p,
                AnyField::Grid(_) => bail!("input is already a grid field"),
            };
            let mut shape = parse_grid(&grid)?;
            if poly.dim() == 2 && shape.len() == 1 {
                shape.push(shape[0]);
            }
            let g = field::rasterize(&poly, &shape)?;
            let (csv, meta) = io::write_grid_csv(&out, &g)?;
            println!("{}", csv.display());
            println!("{}", meta.display());
            Ok(())
        }
        FieldCommand::Normalize { field, mode, out } => {
            let any = io::read_field(&field)?;
            let mode = match mode {
                Mode::Constants => QuotientMode::Constants,
                Mode::Rigid => QuotientMode::Rigid,
            };
            let normalized = field::quotient_normalize(&any, mode)?;
            io::write_json(&out, &normalized)?;
            println!("{}", out.display());
            Ok(())
        }
    }
}

fn run_energy(args: EnergyArgs, kind: EnergyKind) -> Result<()> {
    let spec: MatrixNormSpec = io::read_json(&args.spec)?;
    spec.validate()?;
    let mut any = io::read_field(&args.field)?;
    if let Some(grid) = &args.grid {
        if let AnyField::Polygonal(p) = &any {
            let mut shape = parse_grid(grid)?;
            if p.dim() == 2 && shape.len() == 1 {
                shape.push(shape[0]);
            }
            any = AnyField::Grid(field::rasterize(p, &shape)?);
        }
    }
    let mut report = match (&any, kind) {
        (AnyField::Polygonal(f), EnergyKind::Tv) => energy::tv_exact(f, &spec)?,
        (AnyField::Polygonal(f), EnergyKind::Td) => energy::td_exact(f, &spec, &EdgeQuadrature::default())?,
        (AnyField::Grid(f), EnergyKind::Tv) => energy::tv_grid(f, &spec)?,
        (AnyField::Grid(f), EnergyKind::Td) => energy::td_grid(f, &spec)?,
    };
    if !args.breakdown {
        report.breakdown.clear();
    }
    if let Some(out) = args.out {
        io::write_json(&out, &report)?;
        println!("{}", out.display());
    } else {
        let mut msg = serde_json::json!({ "value": report.value, "method": report.method });
        if args.breakdown {
            msg["breakdown"] = serde_json::to_value(&report.breakdown)?;
        }
        io::json_to_stdout(&msg)?;
    }
    Ok(())
}

fn run_atoms(cmd: AtomsCommand) -> Result<()> {
    match cmd {
        AtomsCommand::Make { family, params, spec, out } => {
            let spec: MatrixNormSpec = io::read_json(&spec)?;
            let mut raw: serde_json::Value = io::read_json(&params)?;
            match raw.as_object_mut() {
                Some(obj) => {
                    obj.insert("family".into(), serde_json::Value::String(family.clone()));
                }
                None => bail!("params file must hold a JSON object"),
            }
            let params: AtomParams = serde_json::from_value(raw)
                .with_context(|| format!("parameters do not fit family {family:?}"))?;
            let atom = atoms::build_atom(&params, &spec)?;
            io::write_json(&out, &atom)?;
            println!("{}", out.display());
            Ok(())
        }
        AtomsCommand::Catalog => {
            for (family, mechanism) in atoms::catalog() {
                println!("{family:24} {mechanism}");
            }
            Ok(())
        }
    }
}

#[derive(serde::Serialize, serde::Deserialize)]
struct SolveConfig {
    alpha: f64,
    spec: MatrixNormSpec,
    domain: field::Domain,
    observation: ObservationSpec,
    #[serde(default)]
    solver: Option<GcgConfig>,
    #[serde(default)]
    seed: u64,
}

#[derive(serde::Serialize, serde::Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
enum ObservationSpec {
    PointwiseSamples,
    Convolution { width: f64 },
}

#[derive(serde::Serialize)]
struct RunManifest {
    schema: &'static str,
    command: &'static str,
    config_digest: String,
    seed: u64,
    artifacts: Vec<String>,
    version: &'static str,
}

fn run_solve(data: &Path, config: &Path, out_dir: &Path, reproducible: bool) -> Result<()> {
    let config_text = std::fs::read_to_string(config)?;
    let cfg: SolveConfig = serde_json::from_str(&config_text)
        .map_err(|e| anyhow!("{}:{}:{}: {}", config.display(), e.line(), e.column(), e))?;
    let (locations, values, n) = io::read_samples(data)?;
    let kind = match cfg.observation {
        ObservationSpec::PointwiseSamples => ObservationKind::PointwiseSamples,
        ObservationSpec::Convolution { width } => ObservationKind::Convolution(Kernel::Box { width }),
    };
    let obs = Observation {
        domain: cfg.domain.clone(),
        n,
        kind,
        locations,
        data: values,
        noise_note: None,
    };
    let solver_cfg = cfg.solver.clone().unwrap_or_default();
    let state = gcg::solve(&obs, cfg.alpha, &cfg.spec, &solver_cfg)?;

    std::fs::create_dir_all(out_dir)?;
    io::write_json(&out_dir.join("observation.json"), &obs)?;
    let state_path = out_dir.join("state.json");
    io::write_json(&state_path, &state)?;
    std::fs::write(out_dir.join("plot.svg"), plot::plot_run(&state, Some(&obs), reproducible)?)?;

    let mut hasher = Sha256::new();
    hasher.update(config_text.as_bytes());
    hasher.update(std::fs::read(data)?);
    let manifest = RunManifest {
        schema: "tvk.manifest/1",
        command: "solve",
        config_digest: format!("sha256:{}", hex::encode(hasher.finalize())),
        seed: cfg.seed,
        artifacts: vec!["observation.json".into(), "state.json".into(), "plot.svg".into()],
        version: env!("CARGO_PKG_VERSION"),
    };
    io::write_json(&out_dir.join("manifest.json"), &manifest)?;
    println!("{}", state_path.display());
    if !state.converged {
        return Err(CoreError::Numerical("solver stopped before reaching the gap tolerance".into()).into());
    }
    Ok(())
}

fn run_plot(artifact: &Path, kind: PlotKind, out: &Path, reproducible: bool) -> Result<()> {
    let raw: serde_json::Value = io::read_json(artifact)?;
    let schema = raw.get("schema").and_then(|s| s.as_str()).unwrap_or("");
    let svg = match (kind, schema) {
        (PlotKind::Field, _) | (PlotKind::Auto, "tvk.field.polygonal/1") | (PlotKind::Auto, "tvk.field.grid/1") => {
            let field: AnyField = serde_json::from_value(raw)?;
            plot::plot_field(&field, reproducible)?
        }
        (PlotKind::Auto, "tvk.atom/1") => {
            let atom: atoms::Atom = serde_json::from_value(raw)?;
            plot::plot_field(&atom.field, reproducible)?
        }
        (PlotKind::Certificate, _) | (PlotKind::Auto, "tvk.certificate/1") => {
            let cert: witness::DecompositionCertificate = serde_json::from_value(raw)?;
            plot::plot_certificate(&cert, reproducible)?
        }
        (PlotKind::Run, _) | (PlotKind::Auto, "tvk.gcg-run/1") => {
            let state: gcg::GcgState = serde_json::from_value(raw)?;
            let obs = artifact
                .parent()
                .map(|dir| dir.join("observation.json"))
                .filter(|p| p.exists())
                .map(|p| io::read_json::<Observation>(&p))
                .transpose()?;
            plot::plot_run(&state, obs.as_ref(), reproducible)?
        }
        (PlotKind::Auto, other) => bail!("unknown artifact schema {other:?}; pass --kind"),
    };
    if let Some(dir) = out.parent() {
        if !dir.as_os_str().is_empty() {
            std::fs::create_dir_all(dir)?;
        }
    }
    std::fs::write(out, svg)?;
    println!("{}", out.display());
    Ok(())
}
