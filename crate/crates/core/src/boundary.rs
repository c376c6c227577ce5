//! Boundary faces, cutting planes, projection points and plane frames.
//!
//! Every tet face that no other tet shares and whose three vertices are
//! flagged on-surface bounds a sliver. The sliver is swept by rays from a
//! projection point `p` through the face; `p` is the common point of the three
//! "cutting" planes through the face's edges, each of which is shared with
//! the neighbouring face across that edge. Adjacent slivers therefore meet
//! along a common plane, with no gap or overlap.

use std::collections::HashMap;

use log::debug;
use nalgebra::{Matrix3, Vector3};

use crate::error::{Error, Result};
use crate::geometry::{Point3, Triangle3, Vec3};
use crate::mesh::{NodeSet, Tessellation};

/// Condition number of the three cutting-plane normals above which the
/// planes are treated as having no usable common point.
pub const PLANE_COND_LIMIT: f64 = 1e12;

/// Fallback projection distance, in face circumradii.
pub const FALLBACK_HEIGHT: f64 = 10.0;

#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryFace {
    /// Tet that owns the face.
    pub owner: usize,
    /// Local face slot within the owner.
    pub local: usize,
    /// Node indices, ordered so the normal points out of the owner.
    pub nodes: [usize; 3],
    pub normal: Vec3,
}

/// The closed triangulated surface made of all boundary faces.
#[derive(Debug, Clone, PartialEq)]
pub struct SurfaceMesh {
    pub faces: Vec<BoundaryFace>,
    /// For each undirected edge `(lo, hi)`, its two boundary faces.
    pub edge_faces: HashMap<(usize, usize), [usize; 2]>,
}

impl SurfaceMesh {
    /// The face across edge `(u, v)` from face `f`.
    pub fn neighbour(&self, f: usize, u: usize, v: usize) -> usize {
        let pair = self.edge_faces[&(u.min(v), u.max(v))];
        if pair[0] == f {
            pair[1]
        } else {
            pair[0]
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Classification {
    /// Tets with no boundary face.
    pub interior: Vec<usize>,
    /// Tets owning at least one boundary face.
    pub surface: Vec<usize>,
    pub mesh: SurfaceMesh,
    /// Boundary face ids per tet (empty for interior tets).
    pub faces_of_tet: Vec<Vec<usize>>,
}

/// Splits tets into interior and surface sets and builds the surface mesh.
pub fn classify_tets(nodes: &NodeSet, tess: &Tessellation) -> Result<Classification> {
    let mut faces = Vec::new();
    let mut faces_of_tet = vec![Vec::new(); tess.len()];
    for inc in tess.faces()? {
        if inc.owners.len() != 1 {
            continue;
        }
        let (owner, local) = inc.owners[0];
        let ids = tess.face_nodes(owner, local);
        if let Some(&off) = ids.iter().find(|&&i| !nodes.on_surface[i]) {
            return Err(Error::Tessellation(format!(
                "boundary face {ids:?} of tet {owner} has vertex {off} that is not on the surface"
            )));
        }
        let [a, b, c] = ids.map(|i| nodes.points[i]);
        let normal = Triangle3::new(a, b, c).normal()?;
        faces_of_tet[owner].push(faces.len());
        faces.push(BoundaryFace {
            owner,
            local,
            nodes: ids,
            normal,
        });
    }

    let mut edge_lists: HashMap<(usize, usize), Vec<usize>> = HashMap::new();
    for (f, face) in faces.iter().enumerate() {
        for e in 0..3 {
            let (u, v) = (face.nodes[e], face.nodes[(e + 1) % 3]);
            edge_lists.entry((u.min(v), u.max(v))).or_default().push(f);
        }
    }
    let mut edge_faces = HashMap::with_capacity(edge_lists.len());
    let mut edges: Vec<_> = edge_lists.into_iter().collect();
    edges.sort_unstable_by_key(|(e, _)| *e);
    for (edge, list) in edges {
        if list.len() != 2 {
            return Err(Error::Tessellation(format!(
                "surface is not closed: edge {edge:?} has {} boundary faces",
                list.len()
            )));
        }
        edge_faces.insert(edge, [list[0], list[1]]);
    }

    let (mut interior, mut surface) = (Vec::new(), Vec::new());
    for (k, fs) in faces_of_tet.iter().enumerate() {
        if fs.is_empty() {
            interior.push(k);
        } else {
            surface.push(k);
        }
    }
    Ok(Classification {
        interior,
        surface,
        mesh: SurfaceMesh { faces, edge_faces },
        faces_of_tet,
    })
}

/// Direction of the cutting plane through an edge shared by faces with unit
/// normals `n1` and `n2`: their average after flipping `n2` into the same
/// half-space as `n1`, renormalized.
pub fn edge_normal(n1: Vec3, n2: Vec3) -> Result<Vec3> {
    let d = n1.dot(n2);
    if d == 0.0 {
        return Err(Error::Numerical(
            "edge normal undefined: adjacent face normals are perpendicular".into(),
        ));
    }
    let avg = (n1 + n2 * d.signum()) * 0.5;
    avg.normalized()
        .ok_or_else(|| Error::Numerical("edge normal undefined: adjacent face normals cancel".into()))
}

fn to_na(v: Vec3) -> Vector3<f64> {
    Vector3::new(v.x, v.y, v.z)
}

/// Normals of the three cutting planes through edges `ab`, `bc`, `ca`.
fn cutting_plane_normals(face: &Triangle3, edge_normals: &[Vec3; 3]) -> [Vec3; 3] {
    let Triangle3 { a, b, c } = *face;
    [
        edge_normals[0].cross(b - a),
        edge_normals[1].cross(c - b),
        edge_normals[2].cross(a - c),
    ]
}

/// Condition number of the 3×3 system whose rows are the normalized
/// cutting-plane normals.
pub fn cutting_plane_condition(face: &Triangle3, edge_normals: &[Vec3; 3]) -> f64 {
    let rows = cutting_plane_normals(face, edge_normals).map(|n| n.normalized().unwrap_or(Vec3::ZERO));
    let m = Matrix3::from_rows(&[
        to_na(rows[0]).transpose(),
        to_na(rows[1]).transpose(),
        to_na(rows[2]).transpose(),
    ]);
    let s = m.singular_values();
    let (hi, lo) = (s.max(), s.min());
    if lo <= 0.0 {
        f64::INFINITY
    } else {
        hi / lo
    }
}

/// Common point of the three cutting planes of `face`, given its edge
/// normals in the order `ab, bc, ca`. Returns `None` when the planes are
/// (nearly) parallel to a common line.
pub fn projection_point(face: &Triangle3, edge_normals: &[Vec3; 3]) -> Option<Point3> {
    if !(cutting_plane_condition(face, edge_normals) <= PLANE_COND_LIMIT) {
        return None;
    }
    let [n_pab, n_pbc, n_pca] = cutting_plane_normals(face, edge_normals);
    let Triangle3 { a, b, .. } = *face;
    // The ab and ca planes both contain a, so p - a is along their line.
    let v = n_pab.cross(n_pca);
    let denom = n_pbc.dot(v);
    if denom == 0.0 {
        return None;
    }
    let p = a + v * (n_pbc.dot(b - a) / denom);
    p.is_finite().then_some(p)
}

/// Stand-in projection point for a locally flat surface: `H` circumradii from
/// the face midpoint along the normal, on the side of `body` (the owner
/// tet's midpoint).
pub fn fallback_projection_point(face: &Triangle3, normal: Vec3, body: Point3) -> Point3 {
    let m = face.midpoint();
    let side = (body - m).dot(normal);
    let dir = if side < 0.0 { -normal } else { normal };
    m + dir * (FALLBACK_HEIGHT * face.circumradius())
}

/// `+1` when `p` lies on the owner tet's side of the face plane, `-1`
/// otherwise.
///
/// Both offsets are measured along the face normal. The plain dot product
/// `(m_k - m*)·(p - m*)` gives the same answer while `p` sits roughly above
/// the face, but on saddle-shaped regions the cutting planes can meet far
/// off to the side, where the tangential parts of the two vectors decide
/// the sign and the result is wrong.
pub fn nu_sign(m_k: Point3, m_star: Point3, p: Point3, normal: Vec3) -> Result<f64> {
    let d = (m_k - m_star).dot(normal) * (p - m_star).dot(normal);
    if d == 0.0 || !d.is_finite() {
        return Err(Error::Numerical(format!(
            "sliver sign undefined: projection point {p:?} lies in the face plane"
        )));
    }
    Ok(d.signum())
}

/// Orthonormal frame of a face plane: `y(λ, μ) = Rᵀ (λ, μ, g)ᵀ + p`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FaceFrame {
    pub rotation: Matrix3<f64>,
    pub offset: f64,
    /// True when the normal is (nearly) along z and the identity rows were
    /// used in place of the general formula.
    pub axis_fallback: bool,
}

impl FaceFrame {
    /// Point of the face plane with plane coordinates `(λ, μ)`.
    pub fn point(&self, p: Point3, lambda: f64, mu: f64) -> Point3 {
        let y = self.rotation.transpose() * Vector3::new(lambda, mu, self.offset);
        p + Vec3::new(y.x, y.y, y.z)
    }

    /// Plane coordinates of a point (assumed to lie in the face plane).
    pub fn coords(&self, p: Point3, y: Point3) -> (f64, f64) {
        let r = self.rotation * to_na(y - p);
        (r.x, r.y)
    }
}

fn sign_or_one(x: f64) -> f64 {
    if x < 0.0 {
        -1.0
    } else {
        1.0
    }
}

/// Rotation taking the face normal `n` to `±e₃`, and the plane offset
/// `g = |(m* - p)·n|`.
///
/// The first two rows are the in-plane axes
/// `s_x s_z (n_z n_x, n_z n_y, -(n_x²+n_y²))/ρ` and `s_x (-n_y, n_x, 0)/ρ`,
/// `ρ = √(n_x²+n_y²)`, with `s = sign`, taking `sign(0) = +1`. The third
/// row is `±n` with the sign that places `y(λ, μ)` in the face plane, i.e.
/// `sign(n·(m* - p))`. When `ρ` vanishes the first two rows are `e₁, e₂`.
pub fn face_frame(face: &Triangle3, normal: Vec3, p: Point3) -> FaceFrame {
    let n = normal;
    let m = face.midpoint();
    let along = n.dot(m - p);
    let offset = along.abs();
    let t = sign_or_one(along);
    let rho2 = n.x * n.x + n.y * n.y;
    let axis_fallback = rho2 <= 1e-28;
    let (r1, r2) = if axis_fallback {
        (Vec3::new(1.0, 0.0, 0.0), Vec3::new(0.0, 1.0, 0.0))
    } else {
        let rho = rho2.sqrt();
        let (sx, sz) = (sign_or_one(n.x), sign_or_one(n.z));
        (
            Vec3::new(n.z * n.x, n.z * n.y, -rho2) * (sx * sz / rho),
            Vec3::new(-n.y, n.x, 0.0) * (sx / rho),
        )
    };
    let r3 = n * t;
    FaceFrame {
        rotation: Matrix3::from_rows(&[to_na(r1).transpose(), to_na(r2).transpose(), to_na(r3).transpose()]),
        offset,
        axis_fallback,
    }
}

/// Everything needed to integrate over the sliver of one boundary face.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryFaceFrame {
    pub face_id: usize,
    pub owner: usize,
    pub nodes: [usize; 3],
    pub triangle: Triangle3,
    pub normal: Vec3,
    /// Cutting-plane directions through edges `ab, bc, ca`.
    pub edge_normals: [Vec3; 3],
    pub projection: Point3,
    /// True when the cutting planes had no usable intersection.
    pub projection_fallback: bool,
    pub nu: f64,
    pub frame: FaceFrame,
}

/// Builds the frame of every boundary face.
pub fn build_frames(nodes: &NodeSet, tess: &Tessellation, cls: &Classification) -> Result<Vec<BoundaryFaceFrame>> {
    let mesh = &cls.mesh;
    let mut frames = Vec::with_capacity(mesh.faces.len());
    let mut fallbacks = 0;
    for (f, face) in mesh.faces.iter().enumerate() {
        let [ia, ib, ic] = face.nodes;
        let triangle = Triangle3::new(nodes.points[ia], nodes.points[ib], nodes.points[ic]);
        let mut edge_normals = [Vec3::ZERO; 3];
        for (e, (u, v)) in [(ia, ib), (ib, ic), (ic, ia)].into_iter().enumerate() {
            let other = mesh.neighbour(f, u, v);
            edge_normals[e] = edge_normal(face.normal, mesh.faces[other].normal).map_err(|err| Error::Sliver {
                face: f,
                message: err.to_string(),
            })?;
        }
        let m_k = tess.tetrahedron(nodes, face.owner).midpoint();
        let (projection, projection_fallback) = match projection_point(&triangle, &edge_normals) {
            Some(p) => (p, false),
            None => {
                fallbacks += 1;
                (fallback_projection_point(&triangle, face.normal, m_k), true)
            }
        };
        let nu = nu_sign(m_k, triangle.midpoint(), projection, face.normal).map_err(|err| Error::Sliver {
            face: f,
            message: err.to_string(),
        })?;
        let frame = face_frame(&triangle, face.normal, projection);
        frames.push(BoundaryFaceFrame {
            face_id: f,
            owner: face.owner,
            nodes: face.nodes,
            triangle,
            normal: face.normal,
            edge_normals,
            projection,
            projection_fallback,
            nu,
            frame,
        });
    }
    if fallbacks > 0 {
        debug!("{fallbacks} boundary faces used the flat-surface projection point");
    }
    Ok(frames)
}
