//! Node sets and tetrahedral tessellations.

use std::collections::HashMap;

use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::geometry::{bbox_scale, Point3, Tetrahedron};
use crate::kdtree::KdTree;

/// Scattered nodes, some flagged as lying exactly on the bounding surface.
#[derive(Debug, Clone, PartialEq)]
pub struct NodeSet {
    pub points: Vec<Point3>,
    pub on_surface: Vec<bool>,
}

impl NodeSet {
    /// Checks lengths, finiteness and that no two nodes coincide (closer than
    /// `1e-12` times the bounding-box size).
    pub fn new(points: Vec<Point3>, on_surface: Vec<bool>) -> Result<Self> {
        if points.len() != on_surface.len() {
            return Err(Error::Input(format!(
                "{} points but {} surface flags",
                points.len(),
                on_surface.len()
            )));
        }
        if let Some(i) = points.iter().position(|p| !p.is_finite()) {
            return Err(Error::Input(format!("node {i} has a non-finite coordinate")));
        }
        let set = NodeSet { points, on_surface };
        if let Some((i, j)) = set.find_duplicate() {
            return Err(Error::Input(format!("nodes {i} and {j} coincide")));
        }
        Ok(set)
    }

    fn find_duplicate(&self) -> Option<(usize, usize)> {
        if self.points.len() < 2 {
            return None;
        }
        let tol = 1e-12 * bbox_scale(&self.points);
        let tree = KdTree::new(&self.points);
        (0..self.points.len()).find_map(|i| {
            tree.nearest(self.points[i], 2)
                .into_iter()
                .find(|&j| j != i && self.points[i].distance(self.points[j]) <= tol)
                .map(|j| (i.min(j), i.max(j)))
        })
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn surface_count(&self) -> usize {
        self.on_surface.iter().filter(|&&s| s).count()
    }
}

/// A local face of a tetrahedron: the three vertex slots opposite slot `i`,
/// ordered so that with a positively oriented tet the face normal points
/// outward.
pub const FACE_SLOTS: [[usize; 3]; 4] = [[1, 2, 3], [0, 3, 2], [0, 1, 3], [0, 2, 1]];

/// Tetrahedra given by node indices, stored positively oriented.
#[derive(Debug, Clone, PartialEq)]
pub struct Tessellation {
    pub tets: Vec<[usize; 4]>,
}

/// Which tets touch a face.
#[derive(Debug, Clone, PartialEq)]
pub struct FaceIncidence {
    /// Node indices of the face, sorted.
    pub key: [usize; 3],
    /// `(tet, local face)` pairs; one entry for a boundary face, two for an
    /// interior one.
    pub owners: Vec<(usize, usize)>,
}

impl Tessellation {
    /// Validates indices and reorients every tet so `det[b-a, c-a, d-a] > 0`.
    pub fn new(nodes: &NodeSet, mut tets: Vec<[usize; 4]>) -> Result<Self> {
        let n = nodes.len();
        for (k, t) in tets.iter_mut().enumerate() {
            if let Some(&bad) = t.iter().find(|&&i| i >= n) {
                return Err(Error::Tessellation(format!(
                    "tet {k} references node {bad}, but there are only {n} nodes"
                )));
            }
            let mut sorted = *t;
            sorted.sort_unstable();
            if sorted.windows(2).any(|w| w[0] == w[1]) {
                return Err(Error::Tessellation(format!("tet {k} repeats a vertex: {t:?}")));
            }
            let tet = Self::geometry_of(nodes, t);
            if tet.is_degenerate() {
                return Err(Error::Tessellation(format!("tet {k} {t:?} has zero volume")));
            }
            if tet.signed_six_volume() < 0.0 {
                t.swap(1, 2);
            }
        }
        let tess = Tessellation { tets };
        tess.faces()?;
        Ok(tess)
    }

    fn geometry_of(nodes: &NodeSet, t: &[usize; 4]) -> Tetrahedron {
        let p = &nodes.points;
        Tetrahedron::new(p[t[0]], p[t[1]], p[t[2]], p[t[3]])
    }

    pub fn len(&self) -> usize {
        self.tets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tets.is_empty()
    }

    pub fn tetrahedron(&self, nodes: &NodeSet, k: usize) -> Tetrahedron {
        Self::geometry_of(nodes, &self.tets[k])
    }

    /// Node indices of local face `f` of tet `k`, outward oriented.
    pub fn face_nodes(&self, k: usize, f: usize) -> [usize; 3] {
        let t = &self.tets[k];
        FACE_SLOTS[f].map(|s| t[s])
    }

    /// Face table in deterministic (sorted key) order. Errors if any face is
    /// shared by more than two tets.
    pub fn faces(&self) -> Result<Vec<FaceIncidence>> {
        let mut map: HashMap<[usize; 3], Vec<(usize, usize)>> = HashMap::with_capacity(2 * self.tets.len());
        for k in 0..self.tets.len() {
            for f in 0..4 {
                let mut key = self.face_nodes(k, f);
                key.sort_unstable();
                map.entry(key).or_default().push((k, f));
            }
        }
        let mut faces: Vec<FaceIncidence> = map
            .into_iter()
            .map(|(key, owners)| FaceIncidence { key, owners })
            .collect();
        faces.sort_unstable_by_key(|f| f.key);
        if let Some(f) = faces.iter().find(|f| f.owners.len() > 2) {
            return Err(Error::Tessellation(format!(
                "face {:?} is shared by {} tets",
                f.key,
                f.owners.len()
            )));
        }
        Ok(faces)
    }

    pub fn total_volume(&self, nodes: &NodeSet) -> f64 {
        (0..self.len()).map(|k| self.tetrahedron(nodes, k).volume()).sum()
    }
}

/// SHA-256 over the exact bit patterns of nodes, flags and tets; recorded in
/// weight files so a weight set can be matched to its mesh.
pub fn mesh_hash(nodes: &NodeSet, tess: &Tessellation) -> String {
    let mut h = Sha256::new();
    for (p, s) in nodes.points.iter().zip(&nodes.on_surface) {
        for c in p.to_array() {
            h.update(c.to_bits().to_le_bytes());
        }
        h.update([*s as u8]);
    }
    for t in &tess.tets {
        for i in t {
            h.update((*i as u64).to_le_bytes());
        }
    }
    h.finalize().iter().map(|b| format!("{b:02x}")).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Vec3;

    fn unit_nodes() -> NodeSet {
        NodeSet::new(
            vec![
                Vec3::ZERO,
                Vec3::new(1.0, 0.0, 0.0),
                Vec3::new(0.0, 1.0, 0.0),
                Vec3::new(0.0, 0.0, 1.0),
            ],
            vec![true; 4],
        )
        .unwrap()
    }

    #[test]
    fn reorients_and_faces_point_outward() {
        let nodes = unit_nodes();
        let t = Tessellation::new(&nodes, vec![[0, 2, 1, 3]]).unwrap();
        assert_eq!(t.tets[0], [0, 1, 2, 3]);
        let tet = t.tetrahedron(&nodes, 0);
        let m = tet.midpoint();
        for f in 0..4 {
            let [a, b, c] = t.face_nodes(0, f).map(|i| nodes.points[i]);
            let n = (b - a).cross(c - a);
            assert!(n.dot(a - m) > 0.0, "face {f} not outward");
        }
        assert_eq!(t.faces().unwrap().len(), 4);
    }

    #[test]
    fn rejects_bad_input() {
        let nodes = unit_nodes();
        assert!(Tessellation::new(&nodes, vec![[0, 1, 2, 4]]).is_err());
        assert!(Tessellation::new(&nodes, vec![[0, 1, 1, 3]]).is_err());
        let flat = NodeSet::new(
            vec![
                Vec3::ZERO,
                Vec3::new(1.0, 0.0, 0.0),
                Vec3::new(0.0, 1.0, 0.0),
                Vec3::new(1.0, 1.0, 0.0),
            ],
            vec![false; 4],
        )
        .unwrap();
        assert!(Tessellation::new(&flat, vec![[0, 1, 2, 3]]).is_err());
        assert!(NodeSet::new(vec![Vec3::ZERO, Vec3::ZERO], vec![false, false]).is_err());
        assert!(NodeSet::new(vec![Vec3::ZERO], vec![false, true]).is_err());
    }

    #[test]
    fn hash_is_stable_and_sensitive() {
        let nodes = unit_nodes();
        let t = Tessellation::new(&nodes, vec![[0, 1, 2, 3]]).unwrap();
        let h1 = mesh_hash(&nodes, &t);
        assert_eq!(h1, mesh_hash(&nodes.clone(), &t.clone()));
        let mut moved = nodes.clone();
        moved.points[3].z = 1.0 + 1e-15;
        assert_ne!(h1, mesh_hash(&moved, &t));
    }
}
