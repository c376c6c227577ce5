//! Incremental Bowyer–Watson Delaunay tessellation.
//!
//! Points are inserted in a spatially coherent (Morton) order into a large
//! enclosing tetrahedron. Each insertion walks to the tet containing the
//! point, grows the cavity of tets whose circumspheres contain it, and fans
//! the cavity boundary to the new point. Predicates are exact and in-sphere
//! ties are broken by symbolic perturbation, so cospherical inputs (lattices,
//! cube corners) still produce a valid tessellation.

use std::cmp::Ordering;
use std::collections::HashMap;

use log::debug;

use super::predicates::{insphere_perturbed, orient3d};
use crate::error::{Error, Result};
use crate::geometry::{bbox_scale, Point3, Vec3};
use crate::levelset::ImplicitSurface;
use crate::mesh::{NodeSet, Tessellation};

const NONE: u32 = u32::MAX;
/// Super-tet size, in multiples of the input bounding box.
const SUPER_SCALE: f64 = 1e5;

#[derive(Debug, Clone, Copy)]
struct Tet {
    v: [u32; 4],
    /// `nbr[i]` is across the face opposite `v[i]`.
    nbr: [u32; 4],
    alive: bool,
}

struct Builder {
    pts: Vec<Point3>,
    tets: Vec<Tet>,
    free: Vec<u32>,
    last: u32,
    // Scratch buffers reused between insertions.
    stamp: Vec<u32>,
    epoch: u32,
}

impl Builder {
    fn orient(&self, v: [u32; 4]) -> Ordering {
        let p = |i: u32| self.pts[i as usize];
        orient3d(p(v[0]), p(v[1]), p(v[2]), p(v[3]))
    }

    fn in_sphere(&self, t: u32, q: u32) -> bool {
        let v = self.tets[t as usize].v;
        let p = |i: u32| self.pts[i as usize];
        insphere_perturbed(
            [p(v[0]), p(v[1]), p(v[2]), p(v[3]), p(q)],
            [v[0] as usize, v[1] as usize, v[2] as usize, v[3] as usize, q as usize],
        ) == Ordering::Greater
    }

    fn alloc(&mut self, t: Tet) -> u32 {
        if let Some(i) = self.free.pop() {
            self.tets[i as usize] = t;
            self.stamp[i as usize] = 0;
            i
        } else {
            self.tets.push(t);
            self.stamp.push(0);
            (self.tets.len() - 1) as u32
        }
    }

    /// Visibility walk from the last created tet. Faces are tried in an
    /// order rotated by the step count, which rules out cycling.
    fn locate(&self, q: u32) -> Result<u32> {
        let mut t = self.last;
        let limit = 4 * self.tets.len() + 100;
        for step in 0..limit {
            let tet = &self.tets[t as usize];
            let mut moved = false;
            for r in 0..4 {
                let i = (r + step) % 4;
                let mut v = tet.v;
                v[i] = q;
                if self.orient(v) == Ordering::Less {
                    let n = tet.nbr[i];
                    if n == NONE {
                        return Err(Error::Tessellation("point outside the enclosing tetrahedron".into()));
                    }
                    t = n;
                    moved = true;
                    break;
                }
            }
            if !moved {
                return Ok(t);
            }
        }
        Err(Error::Tessellation("point location did not terminate".into()))
    }

    fn insert(&mut self, q: u32) -> Result<()> {
        let start = self.locate(q)?;
        self.epoch += 1;
        let epoch = self.epoch;
        let mut cavity = vec![start];
        self.stamp[start as usize] = epoch;
        let mut boundary: Vec<(u32, usize)> = Vec::new();
        let mut k = 0;
        while k < cavity.len() {
            let t = cavity[k];
            k += 1;
            for i in 0..4 {
                let n = self.tets[t as usize].nbr[i];
                if n != NONE && self.stamp[n as usize] == epoch {
                    continue;
                }
                if n != NONE && self.in_sphere(n, q) {
                    self.stamp[n as usize] = epoch;
                    cavity.push(n);
                } else {
                    boundary.push((t, i));
                }
            }
        }

        // New tets: cavity tet with the vertex opposite the boundary face
        // replaced by q. Orientation is preserved because the cavity is
        // star-shaped from q.
        let mut edge_map: HashMap<(u32, u32), (u32, usize)> = HashMap::with_capacity(3 * boundary.len());
        let mut created = Vec::with_capacity(boundary.len());
        for &(t, i) in &boundary {
            let old = self.tets[t as usize];
            let mut v = old.v;
            v[i] = q;
            let outside = old.nbr[i];
            created.push((v, outside, i));
        }
        for &c in &cavity {
            self.tets[c as usize].alive = false;
            self.free.push(c);
        }
        for (v, outside, i) in created {
            let mut nbr = [NONE; 4];
            nbr[i] = outside;
            let id = self.alloc(Tet { v, nbr, alive: true });
            if outside != NONE {
                let o = &mut self.tets[outside as usize];
                // Find the slot of o that faced the cavity: the one whose
                // opposite vertex is not in the shared face.
                let face: [u32; 3] = {
                    let mut f = [0; 3];
                    let mut n = 0;
                    for (j, &x) in v.iter().enumerate() {
                        if j != i {
                            f[n] = x;
                            n += 1;
                        }
                    }
                    f
                };
                let slot = (0..4).find(|&s| !face.contains(&o.v[s])).unwrap();
                o.nbr[slot] = id;
            }
            for j in 0..4 {
                if j == i {
                    continue;
                }
                // Face opposite v[j] contains q and the two face vertices
                // other than v[j].
                let mut e = [0u32; 2];
                let mut n = 0;
                for (s, &x) in v.iter().enumerate() {
                    if s != i && s != j {
                        e[n] = x;
                        n += 1;
                    }
                }
                let key = (e[0].min(e[1]), e[0].max(e[1]));
                if let Some((other, oslot)) = edge_map.remove(&key) {
                    self.tets[id as usize].nbr[j] = other;
                    self.tets[other as usize].nbr[oslot] = id;
                } else {
                    edge_map.insert(key, (id, j));
                }
            }
            self.last = id;
        }
        if !edge_map.is_empty() {
            return Err(Error::Tessellation("cavity boundary is not closed".into()));
        }
        Ok(())
    }
}

/// Morton key of `p` within the box `[lo, lo + size]³`, 21 bits per axis.
fn morton(p: Point3, lo: Point3, size: f64) -> u64 {
    let spread = |v: f64| -> u64 {
        let mut x = ((v.clamp(0.0, 1.0)) * ((1u64 << 21) - 1) as f64) as u64;
        x = (x | (x << 32)) & 0x1f00000000ffff;
        x = (x | (x << 16)) & 0x1f0000ff0000ff;
        x = (x | (x << 8)) & 0x100f00f00f00f00f;
        x = (x | (x << 4)) & 0x10c30c30c30c30c3;
        x = (x | (x << 2)) & 0x1249249249249249;
        x
    };
    let r = (p - lo) / size;
    spread(r.x) | (spread(r.y) << 1) | (spread(r.z) << 2)
}

/// Delaunay tessellation of the points' convex hull. Returned tets are
/// positively oriented.
pub fn delaunay(points: &[Point3]) -> Result<Vec<[usize; 4]>> {
    let n = points.len();
    if n < 4 {
        return Err(Error::Input(format!("need at least 4 points to tessellate, got {n}")));
    }
    if n >= (u32::MAX as usize) - 8 {
        return Err(Error::Input("too many points".into()));
    }
    let scale = bbox_scale(points);
    let mut lo = points[0];
    let mut hi = points[0];
    for p in points {
        lo = Vec3::new(lo.x.min(p.x), lo.y.min(p.y), lo.z.min(p.z));
        hi = Vec3::new(hi.x.max(p.x), hi.y.max(p.y), hi.z.max(p.z));
    }
    if !affinely_spanning(points) {
        return Err(Error::Input("points are coplanar; nothing to tessellate".into()));
    }

    let c = (lo + hi) * 0.5;
    let s = SUPER_SCALE * scale.max(f64::MIN_POSITIVE);
    let mut pts = points.to_vec();
    pts.push(c + Vec3::new(-s, -s, -s));
    pts.push(c + Vec3::new(3.0 * s, -s, -s));
    pts.push(c + Vec3::new(-s, 3.0 * s, -s));
    pts.push(c + Vec3::new(-s, -s, 3.0 * s));
    let sup = [n as u32, n as u32 + 1, n as u32 + 2, n as u32 + 3];

    let mut b = Builder {
        pts,
        tets: vec![Tet {
            v: sup,
            nbr: [NONE; 4],
            alive: true,
        }],
        free: Vec::new(),
        last: 0,
        stamp: vec![0],
        epoch: 0,
    };
    debug_assert_eq!(b.orient(sup), Ordering::Greater);

    let size = (hi - lo).max_abs().max(f64::MIN_POSITIVE);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by_key(|&i| (morton(points[i], lo, size), i));
    for i in order {
        b.insert(i as u32)?;
    }

    let mut out: Vec<[usize; 4]> = b
        .tets
        .iter()
        .filter(|t| t.alive && t.v.iter().all(|&v| (v as usize) < n))
        .map(|t| t.v.map(|v| v as usize))
        .collect();
    // Canonical order for reproducible files.
    for t in &mut out {
        canonicalize(t);
    }
    out.sort_unstable();
    debug!("delaunay: {} points, {} tets", n, out.len());
    Ok(out)
}

/// True when some four points are not coplanar. Exits on the first such
/// quadruple, which for real inputs is found immediately.
fn affinely_spanning(points: &[Point3]) -> bool {
    let n = points.len();
    for i in 0..n {
        for j in i + 1..n {
            for k in j + 1..n {
                for l in k + 1..n {
                    if orient3d(points[i], points[j], points[k], points[l]) != Ordering::Equal {
                        return true;
                    }
                }
            }
        }
    }
    false
}

/// Rotates the smallest index to the front while keeping orientation (an
/// even permutation).
fn canonicalize(t: &mut [usize; 4]) {
    let m = (0..4).min_by_key(|&i| t[i]).unwrap();
    // Even permutations moving slot m to slot 0.
    *t = match m {
        0 => *t,
        1 => [t[1], t[0], t[3], t[2]],
        2 => [t[2], t[3], t[0], t[1]],
        _ => [t[3], t[2], t[1], t[0]],
    };
}

/// Delaunay tessellation restricted to the volume: a tet is kept when it
/// has a vertex off the surface, or when its centroid satisfies `h ≤ 0`.
pub fn tessellate(nodes: &NodeSet, surface: Option<&dyn ImplicitSurface>) -> Result<Tessellation> {
    let all = delaunay(&nodes.points)?;
    let total = all.len();
    let kept: Vec<[usize; 4]> = all
        .into_iter()
        .filter(|t| {
            if t.iter().any(|&i| !nodes.on_surface[i]) {
                return true;
            }
            match surface {
                Some(s) => {
                    let c = t.iter().fold(Vec3::ZERO, |acc, &i| acc + nodes.points[i]) / 4.0;
                    s.eval(c) <= 0.0
                }
                None => true,
            }
        })
        .collect();
    debug!("tessellate: kept {} of {} tets", kept.len(), total);
    Tessellation::new(nodes, kept)
}
