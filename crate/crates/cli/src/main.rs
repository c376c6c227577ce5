//! `volquad`: generate nodes, tessellate, build weights, integrate, and run
//! convergence and timing studies.
//!
//! Exit codes: 0 success, 2 bad input (files, flags, meshes), 3 numerical
//! failure.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use log::info;

use volquad::assembly::compute_weights_report;
use volquad::harness::config::RunConfig;
use volquad::harness::delaunay::tessellate;
use volquad::harness::integrands::{IntegrandKind, TestIntegrand};
use volquad::harness::io;
use volquad::harness::nodegen::generate_nodes;
use volquad::harness::reference::reference_value;
use volquad::harness::studies::{convergence_study, timing_study, StudyPlan, REFERENCE_TOL};
use volquad::levelset::{ImplicitSurface, SurfaceSpec};
use volquad::sliver::SliverMode;
use volquad::{Error, Result};

#[derive(Parser)]
#[command(name = "volquad", version, about = "RBF-FD volume quadrature over implicit surfaces")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Quasi-uniform nodes inside a built-in surface.
    GenNodes {
        #[arg(long)]
        surface: SurfaceSpec,
        /// Target node count (met to within 5%).
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long, short)]
        out: PathBuf,
    },
    /// Delaunay tessellation of a node file, restricted to the surface.
    Tessellate {
        #[arg(long)]
        nodes: PathBuf,
        /// Drop tets outside this surface (centroid test).
        #[arg(long)]
        surface: Option<SurfaceSpec>,
        #[arg(long, short)]
        out: PathBuf,
    },
    /// Quadrature weights for a node and tet file.
    Weights {
        #[arg(long)]
        nodes: PathBuf,
        #[arg(long)]
        tets: PathBuf,
        #[command(flatten)]
        run: RunArgs,
        #[arg(long, short)]
        out: PathBuf,
    },
    /// Applies a weight file to a test integrand.
    Integrate {
        #[arg(long)]
        nodes: PathBuf,
        #[arg(long)]
        weights: PathBuf,
        /// f1, f2, f3 or f4.
        #[arg(long)]
        integrand: IntegrandKind,
        /// Rotation of the integrand about the x-axis, in radians.
        #[arg(long, default_value_t = 0.0)]
        angle: f64,
        /// Needed for f1 and for the reference value.
        #[arg(long)]
        surface: Option<SurfaceSpec>,
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
    /// Max error over rotations against N; writes CSV and a plot script.
    Converge {
        #[command(flatten)]
        run: RunArgs,
        /// Comma-separated target node counts.
        #[arg(long, value_delimiter = ',', default_values_t = [1000, 2000, 4000, 8000])]
        ns: Vec<usize>,
        #[arg(long, value_delimiter = ',', default_values_t = [IntegrandKind::F2])]
        integrands: Vec<IntegrandKind>,
        #[arg(long, value_delimiter = ',', default_values_t = [SliverMode::Known])]
        modes: Vec<SliverMode>,
        #[arg(long, default_value_t = 20)]
        rotations: usize,
        /// Output prefix: writes `<prefix>.csv` and `<prefix>_plot.py`.
        #[arg(long, short)]
        out: PathBuf,
    },
    /// Wall-clock time of the weight build against N.
    Time {
        #[command(flatten)]
        run: RunArgs,
        #[arg(long, value_delimiter = ',', default_values_t = [2000, 4000, 8000, 16000])]
        ns: Vec<usize>,
        #[arg(long, default_value_t = 1)]
        repeats: usize,
        #[arg(long, short)]
        out: Option<PathBuf>,
    },
}

/// Weight parameters: a TOML file, overridden by individual flags.
#[derive(Args)]
struct RunArgs {
    /// TOML file with any of: m, p, q, mode, surface, n, eta, seed, threads.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Polynomial degree.
    #[arg(long)]
    m: Option<u32>,
    /// PHS exponent p in r^(2p+1).
    #[arg(long)]
    p: Option<u32>,
    /// LGL rule order.
    #[arg(long)]
    q: Option<usize>,
    #[arg(long)]
    mode: Option<SliverMode>,
    #[arg(long)]
    surface: Option<SurfaceSpec>,
    /// Stencil size (default 2M).
    #[arg(long = "stencil")]
    n: Option<usize>,
    /// Plane stencil size for unknown mode.
    #[arg(long)]
    eta: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads (else VOLQUAD_THREADS, else all cores).
    #[arg(long)]
    threads: Option<usize>,
}

impl RunArgs {
    fn resolve(&self) -> Result<RunConfig> {
        let mut c = match &self.config {
            Some(path) => RunConfig::load(path)?,
            None => RunConfig::default(),
        };
        c.m = self.m.unwrap_or(c.m);
        c.p = self.p.unwrap_or(c.p);
        c.q = self.q.unwrap_or(c.q);
        c.mode = self.mode.unwrap_or(c.mode);
        c.surface = self.surface.map(|s| s.to_string()).or(c.surface);
        c.n = self.n.or(c.n);
        c.eta = self.eta.or(c.eta);
        c.seed = self.seed.unwrap_or(c.seed);
        c.threads = self.threads.or(c.threads);
        c.validate()?;
        Ok(c)
    }
}

fn surface_of(c: &RunConfig) -> Result<(String, Box<dyn ImplicitSurface>)> {
    let spec = c
        .surface_spec()?
        .ok_or_else(|| Error::Config("this command needs --surface".into()))?;
    Ok((spec.to_string(), spec.build()?))
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::GenNodes { surface, n, seed, out } => {
            let nodes = generate_nodes(surface.build()?.as_ref(), n, seed)?;
            io::save_nodes(&out, &nodes)?;
            println!(
                "{} nodes ({} on the surface) -> {}",
                nodes.len(),
                nodes.surface_count(),
                out.display()
            );
        }
        Command::Tessellate { nodes, surface, out } => {
            let nodes = io::load_nodes(&nodes)?;
            let s = surface.map(|s| s.build()).transpose()?;
            let tess = tessellate(&nodes, s.as_deref())?;
            io::save_tets(&out, &tess)?;
            println!("{} tets -> {}", tess.len(), out.display());
        }
        Command::Weights { nodes, tets, run, out } => {
            let cfg = run.resolve()?;
            let nodes = io::load_nodes(&nodes)?;
            let tess = io::load_tets(&tets, &nodes)?;
            let surface = cfg.surface_spec()?.map(|s| s.build()).transpose()?;
            let s = surface.as_deref().filter(|_| cfg.mode == SliverMode::Known);
            let report = compute_weights_report(&nodes, &tess, &cfg.weight_config(), s)?;
            io::save_weights(&out, &report.weights)?;
            eprintln!(
                "max condition {:.2e}, max residual {:.2e}, max polynomial error {:.2e}",
                report.max_condition(),
                report.max_residual(),
                report.max_poly_error()
            );
            let total: f64 = report.weights.weights.iter().sum();
            println!(
                "{} weights, sum {total:.16e} -> {}",
                report.weights.len(),
                out.display()
            );
        }
        Command::Integrate {
            nodes,
            weights,
            integrand,
            angle,
            surface,
            seed,
        } => {
            let nodes = io::load_nodes(&nodes)?;
            let w = io::load_weights(&weights)?;
            let s = surface.map(|s| s.build()).transpose()?;
            let f = match (&s, integrand) {
                (Some(s), k) => TestIntegrand::new(k, seed, s.as_ref()),
                (None, IntegrandKind::F1) => return Err(Error::Config("f1 needs --surface".into())),
                (None, k) => TestIntegrand::closed_form(k)?,
            }
            .rotated(angle);
            let value = w.integrate_fn(&nodes, |x| f.eval(x))?;
            println!("integral {value:.16e}");
            if let Some(s) = &s {
                match reference_value(&f, s.as_ref(), REFERENCE_TOL) {
                    Ok(r) => println!("reference {r:.16e}\nerror {:.3e}", (value - r).abs()),
                    Err(e) => info!("no reference value: {e}"),
                }
            }
        }
        Command::Converge {
            run,
            ns,
            integrands,
            modes,
            rotations,
            out,
        } => {
            let cfg = run.resolve()?;
            let (name, surface) = surface_of(&cfg)?;
            let plan = StudyPlan {
                targets: ns,
                integrands: integrands.clone(),
                modes: modes.clone(),
                rotations,
                seed: cfg.seed,
            };
            let rep = convergence_study(surface.as_ref(), &name, &cfg.weight_config(), &plan)?;
            let csv = out.with_extension("csv");
            let stem = out
                .file_name()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_default();
            write_text(&csv, &rep.to_csv())?;
            let csv_name = csv
                .file_name()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_default();
            write_text(
                &out.with_file_name(format!("{stem}_plot.py")),
                &rep.plot_script(&csv_name),
            )?;
            print!("{}", rep.to_csv());
            for &f in &integrands {
                for &mode in &modes {
                    if let Ok(slope) = rep.slope(f, mode) {
                        println!("slope {f} {mode}: {slope:.3}");
                    }
                }
            }
        }
        Command::Time { run, ns, repeats, out } => {
            let cfg = run.resolve()?;
            let (_, surface) = surface_of(&cfg)?;
            let rep = timing_study(surface.as_ref(), &cfg.weight_config(), &ns, repeats, cfg.seed)?;
            if let Some(out) = out {
                write_text(&out, &rep.to_csv())?;
            }
            print!("{}", rep.to_csv());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_input_error() { 2 } else { 3 })
        }
    }
}
