//! Quasi-uniform node sets inside an implicit surface.
//!
//! Surface nodes come from Poisson-disk sampling on the surface itself:
//! candidates are thrown in the tangent plane of an accepted node and pulled
//! back to `h = 0` by Newton steps along the gradient. Interior nodes are
//! then grown from the surface layer by Poisson-disk sampling in the volume,
//! kept at least half a spacing inside, and relaxed by a few rounds of weak
//! repulsion. The spacing is adjusted until the total count lands within 5%
//! of the target.

use std::collections::HashMap;

use log::debug;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::geometry::{Point3, Vec3};
use crate::levelset::ImplicitSurface;
use crate::mesh::NodeSet;

/// Candidates per active node before it is retired.
const ATTEMPTS: usize = 30;
/// Surface-projection tolerance on `|h|`.
pub const SURFACE_TOL: f64 = 1e-12;
/// Interior nodes stay this many spacings inside the surface.
const INTERIOR_MARGIN: f64 = 0.5;
const REPULSION_ROUNDS: usize = 3;
const COUNT_TOLERANCE: f64 = 0.05;
const MAX_CALIBRATION_ROUNDS: usize = 12;

/// Gradient of `h`, by central differences when no analytic one is given.
pub fn gradient_of(surface: &dyn ImplicitSurface, x: Point3) -> Vec3 {
    if let Some(g) = surface.gradient(x) {
        return g;
    }
    let h = 1e-6 * surface.bounding_radius();
    let d = |e: Vec3| (surface.eval(x + e * h) - surface.eval(x - e * h)) / (2.0 * h);
    Vec3::new(
        d(Vec3::new(1.0, 0.0, 0.0)),
        d(Vec3::new(0.0, 1.0, 0.0)),
        d(Vec3::new(0.0, 0.0, 1.0)),
    )
}

/// Newton iteration along the gradient onto `h = 0`. Returns `None` if it
/// does not reach `|h| ≤ 1e-12` within 60 steps.
pub fn project_to_surface(surface: &dyn ImplicitSurface, mut x: Point3) -> Option<Point3> {
    for _ in 0..60 {
        let h = surface.eval(x);
        if h.abs() <= SURFACE_TOL {
            return Some(x);
        }
        let g = gradient_of(surface, x);
        let g2 = g.norm_squared();
        if !(g2 > 0.0) || !h.is_finite() {
            return None;
        }
        x -= g * (h / g2);
    }
    (surface.eval(x).abs() <= SURFACE_TOL).then_some(x)
}

/// Uniform hash grid for "is anything within r" queries.
struct Grid {
    cell: f64,
    cells: HashMap<[i64; 3], Vec<usize>>,
}

impl Grid {
    fn new(cell: f64) -> Self {
        Grid {
            cell,
            cells: HashMap::new(),
        }
    }

    fn key(&self, p: Point3) -> [i64; 3] {
        [
            (p.x / self.cell).floor() as i64,
            (p.y / self.cell).floor() as i64,
            (p.z / self.cell).floor() as i64,
        ]
    }

    fn insert(&mut self, p: Point3, id: usize) {
        let k = self.key(p);
        self.cells.entry(k).or_default().push(id);
    }

    /// Calls `f` on every stored id in the 27 cells around `p`.
    fn for_near(&self, p: Point3, mut f: impl FnMut(usize)) {
        let k = self.key(p);
        for dx in -1..=1 {
            for dy in -1..=1 {
                for dz in -1..=1 {
                    if let Some(ids) = self.cells.get(&[k[0] + dx, k[1] + dy, k[2] + dz]) {
                        ids.iter().for_each(|&i| f(i));
                    }
                }
            }
        }
    }

    fn is_free(&self, p: Point3, pts: &[Point3], r: f64) -> bool {
        let mut free = true;
        self.for_near(p, |i| {
            if free && (pts[i] - p).norm_squared() < r * r {
                free = false;
            }
        });
        free
    }
}

/// Two unit vectors spanning the plane orthogonal to unit `n`.
fn tangent_basis(n: Vec3) -> (Vec3, Vec3) {
    let helper = if n.x.abs() < 0.6 {
        Vec3::new(1.0, 0.0, 0.0)
    } else {
        Vec3::new(0.0, 1.0, 0.0)
    };
    let t1 = n.cross(helper).normalized().unwrap_or(Vec3::new(0.0, 0.0, 1.0));
    (t1, n.cross(t1))
}

fn random_unit(rng: &mut ChaCha8Rng) -> Vec3 {
    loop {
        let v = Vec3::new(
            rng.random_range(-1.0..1.0),
            rng.random_range(-1.0..1.0),
            rng.random_range(-1.0..1.0),
        );
        let n2 = v.norm_squared();
        if n2 > 1e-4 && n2 <= 1.0 {
            return v / n2.sqrt();
        }
    }
}

/// Poisson-disk nodes with minimum spacing `r`: surface nodes first, then
/// interior ones.
pub fn generate_with_spacing(surface: &dyn ImplicitSurface, r: f64, seed: u64) -> Result<NodeSet> {
    if !(r > 0.0 && r.is_finite()) {
        return Err(Error::Config(format!("node spacing must be positive, got {r}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut pts: Vec<Point3> = Vec::new();
    let mut grid = Grid::new(r);

    // Surface layer. A few random seeds so that every component is reached.
    let mut active = Vec::new();
    for _ in 0..8 {
        let d = random_unit(&mut rng);
        if let Some(x) = project_to_surface(surface, d * surface.radius_along(d)) {
            if grid.is_free(x, &pts, r) {
                grid.insert(x, pts.len());
                active.push(pts.len());
                pts.push(x);
            }
        }
    }
    if pts.is_empty() {
        return Err(Error::Numerical("could not place a first surface node".into()));
    }
    while !active.is_empty() {
        let slot = rng.random_range(0..active.len());
        let a = pts[active[slot]];
        let n = gradient_of(surface, a).normalized().unwrap_or(Vec3::new(0.0, 0.0, 1.0));
        let (t1, t2) = tangent_basis(n);
        let mut placed = false;
        for _ in 0..ATTEMPTS {
            let ang = rng.random_range(0.0..std::f64::consts::TAU);
            let dist = r * rng.random_range(1.0..2.0);
            let guess = a + (t1 * ang.cos() + t2 * ang.sin()) * dist;
            let Some(x) = project_to_surface(surface, guess) else {
                continue;
            };
            if grid.is_free(x, &pts, r) {
                grid.insert(x, pts.len());
                active.push(pts.len());
                pts.push(x);
                placed = true;
                break;
            }
        }
        if !placed {
            active.swap_remove(slot);
        }
    }
    let surface_count = pts.len();

    // Interior, grown inward from the surface layer.
    let margin = INTERIOR_MARGIN * r;
    let inside = |x: Point3| {
        let h = surface.eval(x);
        if h >= 0.0 {
            return false;
        }
        let g = gradient_of(surface, x).norm();
        g > 0.0 && -h / g >= margin
    };
    let mut active: Vec<usize> = (0..surface_count).collect();
    while !active.is_empty() {
        let slot = rng.random_range(0..active.len());
        let a = pts[active[slot]];
        let mut placed = false;
        for _ in 0..ATTEMPTS {
            let x = a + random_unit(&mut rng) * (r * rng.random_range(1.0..2.0));
            if inside(x) && grid.is_free(x, &pts, r) {
                grid.insert(x, pts.len());
                active.push(pts.len());
                pts.push(x);
                placed = true;
                break;
            }
        }
        if !placed {
            active.swap_remove(slot);
        }
    }

    relax_interior(&mut pts, surface_count, r, &inside);
    let mut on_surface = vec![true; surface_count];
    on_surface.resize(pts.len(), false);
    debug!(
        "spacing {r:.4e}: {surface_count} surface + {} interior nodes",
        pts.len() - surface_count
    );
    NodeSet::new(pts, on_surface)
}

/// A few Jacobi sweeps of short-range repulsion on the interior nodes.
/// Moves that would leave the interior region are dropped.
fn relax_interior(pts: &mut [Point3], first: usize, r: f64, inside: &impl Fn(Point3) -> bool) {
    let reach = 1.5 * r;
    for _ in 0..REPULSION_ROUNDS {
        let mut grid = Grid::new(reach);
        for (i, &p) in pts.iter().enumerate() {
            grid.insert(p, i);
        }
        let moves: Vec<Vec3> = (first..pts.len())
            .map(|i| {
                let mut push = Vec3::ZERO;
                grid.for_near(pts[i], |j| {
                    let d = pts[i] - pts[j];
                    let dist = d.norm();
                    if j != i && dist < reach && dist > 0.0 {
                        push += d * ((reach - dist) / (reach * dist));
                    }
                });
                push * (0.1 * r)
            })
            .collect();
        for (k, mv) in moves.into_iter().enumerate() {
            let i = first + k;
            let cand = pts[i] + mv;
            if inside(cand) {
                pts[i] = cand;
            }
        }
    }
}

/// Nodes for roughly `target` points (within 5%), deterministic per seed.
pub fn generate_nodes(surface: &dyn ImplicitSurface, target: usize, seed: u64) -> Result<NodeSet> {
    if target < 20 {
        return Err(Error::Config(format!(
            "node target {target} is too small (need at least 20)"
        )));
    }
    let volume = surface.volume()?;
    // Maximal Poisson-disk sets in 3D fill about 1/0.7 r³ per node.
    let mut r = (0.7 * volume / target as f64).cbrt();
    for round in 0..MAX_CALIBRATION_ROUNDS {
        let nodes = generate_with_spacing(surface, r, seed)?;
        let ratio = nodes.len() as f64 / target as f64;
        debug!("calibration round {round}: r = {r:.5e}, N = {}", nodes.len());
        if (ratio - 1.0).abs() <= COUNT_TOLERANCE {
            return Ok(nodes);
        }
        // Damped update so the Poisson-disk count noise does not oscillate.
        r *= ratio.cbrt().powf(0.9);
    }
    Err(Error::Numerical(format!(
        "node generation did not reach {target} ± 5% nodes in {MAX_CALIBRATION_ROUNDS} rounds"
    )))
}

/// Smallest distance between any two nodes.
pub fn min_separation(points: &[Point3]) -> f64 {
    let tree = crate::kdtree::KdTree::new(points);
    points
        .iter()
        .enumerate()
        .map(|(i, &p)| {
            tree.nearest(p, 2)
                .into_iter()
                .find(|&j| j != i)
                .map_or(f64::INFINITY, |j| (points[j] - p).norm())
        })
        .fold(f64::INFINITY, f64::min)
}
