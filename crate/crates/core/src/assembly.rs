//! Local stencils, local saddle solves and the global weight vector.
//!
//! Every tet `t_k` gets the `n` nodes nearest its midpoint. On those nodes
//! the weights `w_k` of the local interpolant satisfy
//! `[Φ P; Pᵀ 0] [w; λ] = [I_φ; I_π]`, where the right-hand side holds the
//! integrals of each basis function over `t_k` (plus `ν_k` times its sliver
//! for tets on the boundary). The global weight of a node is the sum of its
//! local weights over every stencil it appears in.
//!
//! Each local system is built in coordinates shifted to the stencil centroid
//! and scaled by the stencil radius `ρ`; the weights found there are
//! multiplied by `ρ³` on the way out.

use log::{debug, info};
use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::basis::{tet_poly_moments, PhsRbf, PolyBasis3};
use crate::boundary::{build_frames, classify_tets, BoundaryFaceFrame, Classification};
use crate::error::{Error, Result};
use crate::geometry::{Point3, Tetrahedron};
use crate::kdtree::KdTree;
use crate::levelset::ImplicitSurface;
use crate::mesh::{mesh_hash, NodeSet, Tessellation};
use crate::rules1d::{lgl_rule, Rule1D, DEFAULT_RULE_ORDER};
use crate::saddle::{saddle_matrix, solve_saddle};
use crate::sliver::{known_sliver_rule, unknown_sliver_rule, PlaneSettings, SliverMode, SliverRule};
use crate::tet_rbf::tet_phs_integral;

/// Environment variable capping the number of worker threads.
pub const THREADS_ENV: &str = "VOLQUAD_THREADS";

/// Parameters of a weight computation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WeightConfig {
    /// Polynomial degree `m`.
    pub degree: u32,
    /// Volume PHS exponent `p` in `φ = r^(2p+1)`.
    pub rbf_p: u32,
    /// LGL rule order `q`.
    pub rule_order: usize,
    pub mode: SliverMode,
    /// Stencil size; `2M` when unset.
    pub stencil_size: Option<usize>,
    /// Plane stencil size `η` (unknown mode); `⌈1.05 (γ+1)(γ+2)/2⌉` when unset.
    pub plane_stencil: Option<usize>,
    /// Plane polynomial degree `γ` (unknown mode); `2m` when unset.
    pub plane_degree: Option<u32>,
    /// Worker threads; falls back to `VOLQUAD_THREADS`, then all cores.
    pub threads: Option<usize>,
}

impl Default for WeightConfig {
    fn default() -> Self {
        WeightConfig {
            degree: 2,
            rbf_p: 1,
            rule_order: DEFAULT_RULE_ORDER,
            mode: SliverMode::Known,
            stencil_size: None,
            plane_stencil: None,
            plane_degree: None,
            threads: None,
        }
    }
}

impl WeightConfig {
    pub fn with_degree(degree: u32) -> Self {
        WeightConfig {
            degree,
            ..Default::default()
        }
    }

    pub fn rbf(&self) -> PhsRbf {
        PhsRbf::new(self.rbf_p)
    }

    pub fn poly_terms(&self) -> usize {
        PolyBasis3::term_count(self.degree)
    }

    pub fn stencil_size(&self) -> usize {
        self.stencil_size.unwrap_or(2 * self.poly_terms())
    }

    pub fn plane_settings(&self) -> PlaneSettings {
        let mut s = PlaneSettings::for_degree(self.degree);
        if let Some(g) = self.plane_degree {
            s = PlaneSettings {
                degree: g,
                stencil: crate::sliver::default_eta(g),
                ..s
            };
        }
        if let Some(eta) = self.plane_stencil {
            s.stencil = eta;
        }
        s
    }

    pub fn validate(&self, node_count: usize) -> Result<()> {
        let n = self.stencil_size();
        let m = self.poly_terms();
        if n < m {
            return Err(Error::Config(format!(
                "stencil size {n} is smaller than the {m} polynomial terms of degree {}",
                self.degree
            )));
        }
        if n > node_count {
            return Err(Error::Config(format!(
                "stencil size {n} exceeds the {node_count} nodes"
            )));
        }
        if self.rule_order < 2 {
            return Err(Error::Config(format!("rule order {} is below 2", self.rule_order)));
        }
        if self.threads == Some(0) {
            return Err(Error::Config("thread count must be positive".into()));
        }
        if self.mode == SliverMode::Unknown {
            let s = self.plane_settings();
            let terms = crate::basis::PolyBasis2::term_count(s.degree);
            if s.stencil < terms {
                return Err(Error::Config(format!(
                    "plane stencil {} is smaller than the {terms} plane polynomial terms",
                    s.stencil
                )));
            }
        }
        Ok(())
    }
}

/// Worker count: explicit setting, then `VOLQUAD_THREADS`, then rayon's default.
pub fn worker_threads(explicit: Option<usize>) -> Result<Option<usize>> {
    if let Some(t) = explicit {
        return Ok(Some(t));
    }
    match std::env::var(THREADS_ENV) {
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(t) if t > 0 => Ok(Some(t)),
            _ => Err(Error::Config(format!("{THREADS_ENV}={v:?} is not a positive integer"))),
        },
        Err(_) => Ok(None),
    }
}

fn run_in_pool<T: Send>(threads: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(t) = worker_threads(threads)? {
        builder = builder.num_threads(t);
    }
    let pool = builder
        .build()
        .map_err(|e| Error::Config(format!("cannot start worker pool: {e}")))?;
    Ok(pool.install(f))
}

/// The nodes of one local interpolant.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Stencil {
    pub tet: usize,
    /// Global node indices, nearest to the tet midpoint first.
    pub nodes: Vec<usize>,
}

/// The `n` nearest nodes to every tet midpoint, ties broken by node index.
pub fn build_stencils(nodes: &NodeSet, tess: &Tessellation, n: usize) -> Result<Vec<Stencil>> {
    if n > nodes.len() {
        return Err(Error::Config(format!(
            "stencil size {n} exceeds the {} nodes",
            nodes.len()
        )));
    }
    let tree = KdTree::new(&nodes.points);
    Ok((0..tess.len())
        .into_par_iter()
        .map(|k| Stencil {
            tet: k,
            nodes: tree.nearest(tess.tetrahedron(nodes, k).midpoint(), n),
        })
        .collect())
}

/// Shift-and-scale map `x ↦ (x - center) / scale`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LocalCoords {
    pub center: Point3,
    pub scale: f64,
}

impl LocalCoords {
    /// Centroid of the points, scaled by the largest distance from it.
    pub fn fit(points: impl IntoIterator<Item = Point3> + Clone) -> Self {
        let (sum, count) = points
            .clone()
            .into_iter()
            .fold((Point3::ZERO, 0usize), |(s, c), p| (s + p, c + 1));
        let center = sum / count.max(1) as f64;
        let scale = points.into_iter().map(|p| (p - center).norm()).fold(0.0f64, f64::max);
        LocalCoords {
            center,
            scale: if scale > 0.0 { scale } else { 1.0 },
        }
    }

    pub fn map(&self, x: Point3) -> Point3 {
        (x - self.center) / self.scale
    }

    pub fn map_tet(&self, t: &Tetrahedron) -> Tetrahedron {
        Tetrahedron::new(self.map(t.a), self.map(t.b), self.map(t.c), self.map(t.d))
    }

    /// The sliver rule in local coordinates (volumes scale by `1/ρ³`).
    pub fn map_rule(&self, rule: &SliverRule) -> SliverRule {
        let s3 = self.scale.powi(3);
        SliverRule {
            points: rule.points.iter().map(|&x| self.map(x)).collect(),
            weights: rule.weights.iter().map(|w| w / s3).collect(),
        }
    }
}

/// `[∫_t φ(‖x - cⱼ‖) dV; ∫_t π_l dV]` over one tetrahedron.
pub fn assemble_rhs_interior(
    t: &Tetrahedron,
    centers: &[Point3],
    rbf: PhsRbf,
    poly: &PolyBasis3,
    rule: &Rule1D,
) -> Result<DVector<f64>> {
    let n = centers.len();
    let mut rhs = DVector::zeros(n + poly.len());
    for (j, &c) in centers.iter().enumerate() {
        rhs[j] = tet_phs_integral(t, c, rbf, rule)?;
    }
    for (l, v) in tet_poly_moments(t, poly)?.into_iter().enumerate() {
        rhs[n + l] = v;
    }
    Ok(rhs)
}

/// Interior right-hand side plus `ν` times each sliver's basis integrals.
pub fn assemble_rhs_surface(
    t: &Tetrahedron,
    centers: &[Point3],
    rbf: PhsRbf,
    poly: &PolyBasis3,
    rule: &Rule1D,
    slivers: &[(f64, &SliverRule)],
) -> Result<DVector<f64>> {
    let mut rhs = assemble_rhs_interior(t, centers, rbf, poly, rule)?;
    let n = centers.len();
    for &(nu, s) in slivers {
        let (rbf_part, poly_part) = s.basis_integrals(centers, rbf, poly);
        for (j, v) in rbf_part.into_iter().enumerate() {
            rhs[j] += nu * v;
        }
        for (l, v) in poly_part.into_iter().enumerate() {
            rhs[n + l] += nu * v;
        }
    }
    Ok(rhs)
}

/// Weights of one tet's interpolant together with solve diagnostics.
#[derive(Debug, Clone, PartialEq)]
pub struct LocalSolution {
    pub tet: usize,
    pub nodes: Vec<usize>,
    /// Physical-space weights, aligned with `nodes`.
    pub weights: Vec<f64>,
    /// Polynomial multipliers of the saddle solution, in local coordinates.
    pub multipliers: Vec<f64>,
    pub condition: f64,
    pub residual: f64,
    /// `max_l |Σⱼ wⱼ π_l(xⱼ) - I_π,l| / max_l |I_π,l|` in local coordinates.
    pub poly_error: f64,
    /// `max_i |(Φw + Pλ)_i - I_φ,i| / max_i |I_φ,i|` in local coordinates.
    pub rbf_error: f64,
}

/// Solves one local system on `points` (already in local coordinates).
/// `scale` is the local length unit; weights are returned multiplied by
/// `scale³`.
pub fn solve_local(
    stencil: &Stencil,
    points: &[Point3],
    rhs: &DVector<f64>,
    rbf: PhsRbf,
    poly: &PolyBasis3,
    scale: f64,
) -> Result<LocalSolution> {
    let n = points.len();
    let m = poly.len();
    let fail = |message: String| Error::LocalSolve {
        tet: stencil.tet,
        stencil: stencil.nodes.clone(),
        message,
    };
    if rhs.len() != n + m {
        return Err(fail(format!(
            "right-hand side has length {}, expected {}",
            rhs.len(),
            n + m
        )));
    }
    let phi = DMatrix::from_fn(n, n, |i, j| rbf.eval((points[i] - points[j]).norm()));
    let mut pmat = DMatrix::zeros(n, m);
    let mut buf = vec![0.0; m];
    for (i, x) in points.iter().enumerate() {
        poly.eval_into(*x, &mut buf);
        for l in 0..m {
            pmat[(i, l)] = buf[l];
        }
    }
    let a = saddle_matrix(&phi, &pmat);
    let sol = solve_saddle(&a, rhs).map_err(|e| fail(e.to_string()))?;

    let ax = &a * &sol.solution;
    let block_error = |range: std::ops::Range<usize>| {
        let diff = range.clone().map(|i| (ax[i] - rhs[i]).abs()).fold(0.0f64, f64::max);
        let size = range.map(|i| rhs[i].abs()).fold(0.0f64, f64::max);
        if size > 0.0 {
            diff / size
        } else {
            diff
        }
    };
    let s3 = scale.powi(3);
    Ok(LocalSolution {
        tet: stencil.tet,
        nodes: stencil.nodes.clone(),
        weights: sol.weights(n).iter().map(|w| w * s3).collect(),
        multipliers: sol.solution.as_slice()[n..].to_vec(),
        condition: sol.condition,
        residual: sol.residual,
        poly_error: block_error(n..n + m),
        rbf_error: block_error(0..n),
    })
}

/// `W_i = Σ_{(k,j) ↦ i} w_{k,j}`, summed in order of `k` then `j`.
pub fn accumulate(node_count: usize, locals: &[LocalSolution]) -> Vec<f64> {
    let mut w = vec![0.0; node_count];
    for local in locals {
        for (&i, &wj) in local.nodes.iter().zip(&local.weights) {
            w[i] += wj;
        }
    }
    w
}

/// What a weight vector was computed from.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WeightMeta {
    pub m: u32,
    pub n: usize,
    pub p: u32,
    pub q: usize,
    pub mode: SliverMode,
    /// Plane stencil size, for unknown mode.
    pub eta: Option<usize>,
    pub mesh_hash: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GlobalWeights {
    pub weights: Vec<f64>,
    pub meta: WeightMeta,
}

impl GlobalWeights {
    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    /// `Σ W_i f_i`.
    pub fn integrate(&self, values: &[f64]) -> Result<f64> {
        integrate(&self.weights, values)
    }

    pub fn integrate_fn(&self, nodes: &NodeSet, f: impl Fn(Point3) -> f64) -> Result<f64> {
        if nodes.len() != self.weights.len() {
            return Err(Error::Input(format!(
                "{} weights for {} nodes",
                self.weights.len(),
                nodes.len()
            )));
        }
        Ok(nodes.points.iter().zip(&self.weights).map(|(x, w)| w * f(*x)).sum())
    }
}

/// `Σ W_i f_i` for node-sampled values.
pub fn integrate(weights: &[f64], values: &[f64]) -> Result<f64> {
    if weights.len() != values.len() {
        return Err(Error::Input(format!(
            "{} weights but {} function values",
            weights.len(),
            values.len()
        )));
    }
    Ok(weights.iter().zip(values).map(|(w, f)| w * f).sum())
}

/// Everything a weight run produced.
#[derive(Debug, Clone)]
pub struct WeightReport {
    pub weights: GlobalWeights,
    pub locals: Vec<LocalSolution>,
    pub classification: Classification,
    pub frames: Vec<BoundaryFaceFrame>,
    pub slivers: Vec<SliverRule>,
}

impl WeightReport {
    pub fn max_poly_error(&self) -> f64 {
        self.locals.iter().map(|l| l.poly_error).fold(0.0, f64::max)
    }

    pub fn max_rbf_error(&self) -> f64 {
        self.locals.iter().map(|l| l.rbf_error).fold(0.0, f64::max)
    }

    pub fn max_residual(&self) -> f64 {
        self.locals.iter().map(|l| l.residual).fold(0.0, f64::max)
    }

    pub fn max_condition(&self) -> f64 {
        self.locals.iter().map(|l| l.condition).fold(0.0, f64::max)
    }
}

/// Sliver rules for every boundary face.
pub fn build_slivers(
    nodes: &NodeSet,
    frames: &[BoundaryFaceFrame],
    config: &WeightConfig,
    surface: Option<&dyn ImplicitSurface>,
    rule: &Rule1D,
) -> Result<Vec<SliverRule>> {
    match config.mode {
        SliverMode::Known => {
            let surface = surface.ok_or_else(|| Error::Config("known sliver mode needs a surface".into()))?;
            frames.par_iter().map(|f| known_sliver_rule(f, surface, rule)).collect()
        }
        SliverMode::Unknown => {
            let surface_ids: Vec<usize> = (0..nodes.len()).filter(|&i| nodes.on_surface[i]).collect();
            let pts: Vec<Point3> = surface_ids.iter().map(|&i| nodes.points[i]).collect();
            let tree = KdTree::new(&pts);
            let settings = config.plane_settings();
            if settings.stencil > surface_ids.len() {
                return Err(Error::Config(format!(
                    "plane stencil {} exceeds the {} surface nodes",
                    settings.stencil,
                    surface_ids.len()
                )));
            }
            frames
                .par_iter()
                .map(|f| unknown_sliver_rule(f, nodes, &tree, &surface_ids, &settings, rule))
                .collect()
        }
    }
}

/// Computes global weights with all diagnostics.
pub fn compute_weights_report(
    nodes: &NodeSet,
    tess: &Tessellation,
    config: &WeightConfig,
    surface: Option<&dyn ImplicitSurface>,
) -> Result<WeightReport> {
    config.validate(nodes.len())?;
    run_in_pool(config.threads, || compute_inner(nodes, tess, config, surface))?
}

/// Computes global weights.
pub fn compute_weights(
    nodes: &NodeSet,
    tess: &Tessellation,
    config: &WeightConfig,
    surface: Option<&dyn ImplicitSurface>,
) -> Result<GlobalWeights> {
    compute_weights_report(nodes, tess, config, surface).map(|r| r.weights)
}

fn compute_inner(
    nodes: &NodeSet,
    tess: &Tessellation,
    config: &WeightConfig,
    surface: Option<&dyn ImplicitSurface>,
) -> Result<WeightReport> {
    let rule = lgl_rule(config.rule_order)?;
    let rbf = config.rbf();
    let poly = PolyBasis3::new(config.degree);
    let n = config.stencil_size();

    let classification = classify_tets(nodes, tess)?;
    let frames = build_frames(nodes, tess, &classification)?;
    let slivers = build_slivers(nodes, &frames, config, surface, &rule)?;
    debug!(
        "{} interior tets, {} surface tets, {} boundary faces",
        classification.interior.len(),
        classification.surface.len(),
        frames.len()
    );
    let stencils = build_stencils(nodes, tess, n)?;

    let locals: Vec<LocalSolution> = stencils
        .par_iter()
        .map(|st| {
            let t = tess.tetrahedron(nodes, st.tet);
            let coords = LocalCoords::fit(st.nodes.iter().map(|&i| nodes.points[i]).chain(t.vertices()));
            let pts: Vec<Point3> = st.nodes.iter().map(|&i| coords.map(nodes.points[i])).collect();
            let lt = coords.map_tet(&t);
            let face_ids = &classification.faces_of_tet[st.tet];
            let rhs = if face_ids.is_empty() {
                assemble_rhs_interior(&lt, &pts, rbf, &poly, &rule)
            } else {
                let mapped: Vec<(f64, SliverRule)> = face_ids
                    .iter()
                    .map(|&f| (frames[f].nu, coords.map_rule(&slivers[f])))
                    .collect();
                let refs: Vec<(f64, &SliverRule)> = mapped.iter().map(|(nu, s)| (*nu, s)).collect();
                assemble_rhs_surface(&lt, &pts, rbf, &poly, &rule, &refs)
            }
            .map_err(|e| Error::LocalSolve {
                tet: st.tet,
                stencil: st.nodes.clone(),
                message: e.to_string(),
            })?;
            solve_local(st, &pts, &rhs, rbf, &poly, coords.scale)
        })
        .collect::<Result<_>>()?;

    let weights = accumulate(nodes.len(), &locals);
    info!(
        "weights: {} nodes, {} tets, Σ W = {:.15e}",
        nodes.len(),
        tess.len(),
        weights.iter().sum::<f64>()
    );
    Ok(WeightReport {
        weights: GlobalWeights {
            weights,
            meta: WeightMeta {
                m: config.degree,
                n,
                p: config.rbf_p,
                q: config.rule_order,
                mode: config.mode,
                eta: (config.mode == SliverMode::Unknown).then(|| config.plane_settings().stencil),
                mesh_hash: mesh_hash(nodes, tess),
            },
        },
        locals,
        classification,
        frames,
        slivers,
    })
}
