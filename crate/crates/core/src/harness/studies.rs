//! Convergence and timing studies.

use std::fmt::Write as _;
use std::time::Instant;

use log::info;

use crate::assembly::{compute_weights, GlobalWeights, WeightConfig};
use crate::error::{Error, Result};
use crate::levelset::ImplicitSurface;
use crate::mesh::{NodeSet, Tessellation};
use crate::sliver::SliverMode;

use super::delaunay::tessellate;
use super::integrands::{rotation_angles, IntegrandKind, TestIntegrand};
use super::nodegen::generate_nodes;
use super::reference::reference_value;

/// Relative tolerance of the reference integrals.
pub const REFERENCE_TOL: f64 = 1e-11;

/// Seeded nodes and their restricted Delaunay tessellation.
#[derive(Debug, Clone)]
pub struct Mesh {
    pub nodes: NodeSet,
    pub tess: Tessellation,
}

impl Mesh {
    pub fn generate(surface: &dyn ImplicitSurface, target: usize, seed: u64) -> Result<Self> {
        let nodes = generate_nodes(surface, target, seed)?;
        let tess = tessellate(&nodes, Some(surface))?;
        Ok(Mesh { nodes, tess })
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Weights for this mesh. Unknown mode is given no surface, so it can
    /// only use the surface nodes.
    pub fn weights(&self, config: &WeightConfig, surface: &dyn ImplicitSurface) -> Result<GlobalWeights> {
        let s = (config.mode == SliverMode::Known).then_some(surface);
        compute_weights(&self.nodes, &self.tess, config, s)
    }
}

/// Least-squares slope of `log y` against `log x`.
pub fn fit_slope(xs: &[f64], ys: &[f64]) -> Result<f64> {
    if xs.len() != ys.len() || xs.len() < 2 {
        return Err(Error::Input("a slope needs at least two (x, y) pairs".into()));
    }
    if xs.iter().chain(ys).any(|v| !(*v > 0.0 && v.is_finite())) {
        return Err(Error::Numerical("log-log fit needs positive finite data".into()));
    }
    let lx: Vec<f64> = xs.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|v| v.ln()).collect();
    let n = lx.len() as f64;
    let (mx, my) = (lx.iter().sum::<f64>() / n, ly.iter().sum::<f64>() / n);
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = lx.iter().map(|x| (x - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::Input("all x values coincide".into()));
    }
    Ok(sxy / sxx)
}

/// Integrands with their seeded parameters and reference values.
#[derive(Debug, Clone)]
pub struct Target {
    pub integrand: TestIntegrand,
    pub reference: f64,
    /// Rotation angles about the x-axis; the error is the max over these.
    pub angles: Vec<f64>,
}

impl Target {
    pub fn new(kind: IntegrandKind, surface: &dyn ImplicitSurface, rotations: usize, seed: u64) -> Result<Self> {
        let integrand = TestIntegrand::new(kind, seed, surface);
        let reference = reference_value(&integrand, surface, REFERENCE_TOL)?;
        Ok(Target {
            integrand,
            reference,
            angles: rotation_angles(seed ^ 0x0a7e, rotations.max(1)),
        })
    }

    /// `max_θ |Σ W f_θ(x_i) - I|`.
    pub fn max_error(&self, nodes: &NodeSet, weights: &GlobalWeights) -> Result<f64> {
        let mut worst = 0.0f64;
        for &theta in &self.angles {
            let f = self.integrand.rotated(theta);
            let approx = weights.integrate_fn(nodes, |x| f.eval(x))?;
            worst = worst.max((approx - self.reference).abs());
        }
        Ok(worst)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceRow {
    pub target_n: usize,
    pub n: usize,
    pub integrand: IntegrandKind,
    pub mode: SliverMode,
    pub max_error: f64,
    pub weight_seconds: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceReport {
    pub surface: String,
    pub degree: u32,
    pub rows: Vec<ConvergenceRow>,
}

impl ConvergenceReport {
    /// Rows of one curve, in order of increasing N.
    pub fn curve(&self, integrand: IntegrandKind, mode: SliverMode) -> Vec<&ConvergenceRow> {
        let mut rows: Vec<&ConvergenceRow> = self
            .rows
            .iter()
            .filter(|r| r.integrand == integrand && r.mode == mode)
            .collect();
        rows.sort_by_key(|r| r.n);
        rows
    }

    /// Fitted slope of max error against N.
    pub fn slope(&self, integrand: IntegrandKind, mode: SliverMode) -> Result<f64> {
        let c = self.curve(integrand, mode);
        let xs: Vec<f64> = c.iter().map(|r| r.n as f64).collect();
        let ys: Vec<f64> = c.iter().map(|r| r.max_error).collect();
        fit_slope(&xs, &ys)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("surface,m,target_n,n,integrand,mode,max_error,weight_seconds\n");
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{:.6e},{:.4}",
                self.surface, self.degree, r.target_n, r.n, r.integrand, r.mode, r.max_error, r.weight_seconds
            );
        }
        out
    }

    /// A matplotlib script plotting every curve from `csv_name`.
    pub fn plot_script(&self, csv_name: &str) -> String {
        format!(
            r#"# Plots max error against N for each integrand and sliver mode.
import csv
from collections import defaultdict
import matplotlib.pyplot as plt

curves = defaultdict(list)
with open({csv_name:?}) as fh:
    for row in csv.DictReader(fh):
        curves[(row["integrand"], row["mode"])].append((int(row["n"]), float(row["max_error"])))

fig, ax = plt.subplots()
for (f, mode), pts in sorted(curves.items()):
    pts.sort()
    ax.loglog([p[0] for p in pts], [p[1] for p in pts], "o-" if mode == "known" else "s--", label=f"{{f}} ({{mode}})")
ns = sorted({{n for pts in curves.values() for n, _ in pts}})
if ns:
    ref = [ns[0] ** ({m} / 3) * n ** (-{m} / 3) for n in ns]
    ax.loglog(ns, ref, "k:", label="N^(-{m}/3)")
ax.set_xlabel("N")
ax.set_ylabel("max error")
ax.set_title("{surface}, m = {m}")
ax.legend()
fig.savefig({png:?}, dpi=150)
"#,
            m = self.degree,
            surface = self.surface,
            png = csv_name.trim_end_matches(".csv").to_string() + ".png",
        )
    }
}

/// What a convergence study sweeps over.
#[derive(Debug, Clone, PartialEq)]
pub struct StudyPlan {
    /// Target node counts.
    pub targets: Vec<usize>,
    pub integrands: Vec<IntegrandKind>,
    pub modes: Vec<SliverMode>,
    /// Random rotations about the x-axis per integrand.
    pub rotations: usize,
    pub seed: u64,
}

impl Default for StudyPlan {
    fn default() -> Self {
        StudyPlan {
            targets: vec![1000, 2000, 4000, 8000],
            integrands: vec![IntegrandKind::F2],
            modes: vec![SliverMode::Known],
            rotations: 20,
            seed: 1,
        }
    }
}

/// For each N: one mesh, one weight set per mode, and the max error of
/// every integrand over the seeded rotations.
pub fn convergence_study(
    surface: &dyn ImplicitSurface,
    surface_name: &str,
    config: &WeightConfig,
    plan: &StudyPlan,
) -> Result<ConvergenceReport> {
    let goals: Vec<Target> = plan
        .integrands
        .iter()
        .map(|&k| Target::new(k, surface, plan.rotations, plan.seed))
        .collect::<Result<_>>()?;
    let mut rows = Vec::new();
    for &target_n in &plan.targets {
        let mesh = Mesh::generate(surface, target_n, plan.seed)?;
        for &mode in &plan.modes {
            let cfg = WeightConfig { mode, ..config.clone() };
            let t0 = Instant::now();
            let weights = mesh.weights(&cfg, surface)?;
            let weight_seconds = t0.elapsed().as_secs_f64();
            for goal in &goals {
                let max_error = goal.max_error(&mesh.nodes, &weights)?;
                info!(
                    "N = {}, {} {}: max error {max_error:.3e}",
                    mesh.len(),
                    goal.integrand.kind,
                    mode
                );
                rows.push(ConvergenceRow {
                    target_n,
                    n: mesh.len(),
                    integrand: goal.integrand.kind,
                    mode,
                    max_error,
                    weight_seconds,
                });
            }
        }
    }
    Ok(ConvergenceReport {
        surface: surface_name.to_string(),
        degree: config.degree,
        rows,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct TimingRow {
    pub n: usize,
    pub seconds: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TimingReport {
    pub degree: u32,
    pub rows: Vec<TimingRow>,
    /// Fitted log-log slope of time against N.
    pub slope: f64,
}

impl TimingReport {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("m,n,seconds\n");
        for r in &self.rows {
            let _ = writeln!(out, "{},{},{:.6}", self.degree, r.n, r.seconds);
        }
        let _ = writeln!(out, "# slope={:.4}", self.slope);
        out
    }
}

/// Wall-clock time of the weight build (meshing excluded), one mesh per N,
/// run sequentially. Each build is timed `repeats` times and the fastest
/// run kept.
pub fn timing_study(
    surface: &dyn ImplicitSurface,
    config: &WeightConfig,
    targets: &[usize],
    repeats: usize,
    seed: u64,
) -> Result<TimingReport> {
    if targets.len() < 3 {
        return Err(Error::Config("a timing study needs at least three values of N".into()));
    }
    let mut rows = Vec::new();
    for &target in targets {
        let mesh = Mesh::generate(surface, target, seed)?;
        let mut best = f64::INFINITY;
        for _ in 0..repeats.max(1) {
            let t0 = Instant::now();
            mesh.weights(config, surface)?;
            best = best.min(t0.elapsed().as_secs_f64());
        }
        info!("N = {}: {best:.3} s", mesh.len());
        rows.push(TimingRow {
            n: mesh.len(),
            seconds: best,
        });
    }
    let xs: Vec<f64> = rows.iter().map(|r| r.n as f64).collect();
    let ys: Vec<f64> = rows.iter().map(|r| r.seconds).collect();
    let slope = fit_slope(&xs, &ys)?;
    Ok(TimingReport {
        degree: config.degree,
        rows,
        slope,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::levelset::Sphere;

    #[test]
    fn slope_of_power_law() {
        let xs = [1000.0, 2000.0, 4000.0, 8000.0];
        let ys: Vec<f64> = xs.iter().map(|x: &f64| 3.0 * x.powf(-0.75)).collect();
        assert!((fit_slope(&xs, &ys).unwrap() + 0.75).abs() < 1e-12);
        assert!(fit_slope(&xs, &[1.0, 0.0, 1.0, 1.0]).is_err());
        assert!(fit_slope(&[1.0], &[1.0]).is_err());
    }

    #[test]
    fn small_study_runs_and_reports() {
        let s = Sphere::new(1.0);
        let cfg = WeightConfig::with_degree(1);
        let plan = StudyPlan {
            targets: vec![150, 300],
            rotations: 3,
            ..Default::default()
        };
        let rep = convergence_study(&s, "ball", &cfg, &plan).unwrap();
        assert_eq!(rep.rows.len(), 2);
        assert!(rep.rows.iter().all(|r| r.max_error.is_finite() && r.max_error < 0.1));
        let csv = rep.to_csv();
        assert_eq!(csv.lines().count(), 3);
        assert!(rep.plot_script("conv.csv").contains("conv.png"));
        assert!(rep.slope(IntegrandKind::F2, SliverMode::Known).unwrap().is_finite());
    }
}
