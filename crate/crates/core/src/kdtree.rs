//! A static 3D kd-tree for k-nearest-neighbour queries.
//!
//! Results are ordered by `(distance, index)`, so equidistant points are
//! always resolved the same way regardless of tree layout.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::geometry::Point3;

const LEAF_SIZE: usize = 12;

#[derive(Debug, Clone)]
enum Node {
    Leaf {
        start: usize,
        end: usize,
    },
    Split {
        dim: usize,
        value: f64,
        left: usize,
        right: usize,
    },
}

#[derive(Debug, Clone)]
pub struct KdTree {
    points: Vec<Point3>,
    order: Vec<usize>,
    nodes: Vec<Node>,
}

/// Heap entry; the max-heap keeps the current worst candidate on top.
#[derive(Debug, Clone, Copy, PartialEq)]
struct Candidate {
    dist2: f64,
    index: usize,
}

impl Eq for Candidate {}

impl Ord for Candidate {
    fn cmp(&self, other: &Self) -> Ordering {
        self.dist2.total_cmp(&other.dist2).then(self.index.cmp(&other.index))
    }
}

impl PartialOrd for Candidate {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl KdTree {
    pub fn new(points: &[Point3]) -> Self {
        let mut tree = KdTree {
            points: points.to_vec(),
            order: (0..points.len()).collect(),
            nodes: Vec::new(),
        };
        if !points.is_empty() {
            tree.build(0, points.len());
        }
        tree
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    fn build(&mut self, start: usize, end: usize) -> usize {
        let id = self.nodes.len();
        if end - start <= LEAF_SIZE {
            self.nodes.push(Node::Leaf { start, end });
            return id;
        }
        let mut lo = [f64::INFINITY; 3];
        let mut hi = [f64::NEG_INFINITY; 3];
        for &i in &self.order[start..end] {
            for d in 0..3 {
                lo[d] = lo[d].min(self.points[i][d]);
                hi[d] = hi[d].max(self.points[i][d]);
            }
        }
        let dim = (0..3)
            .max_by(|&a, &b| (hi[a] - lo[a]).total_cmp(&(hi[b] - lo[b])))
            .unwrap();
        let mid = start + (end - start) / 2;
        let points = &self.points;
        self.order[start..end].select_nth_unstable_by(mid - start, |&a, &b| {
            points[a][dim].total_cmp(&points[b][dim]).then(a.cmp(&b))
        });
        let value = self.points[self.order[mid]][dim];
        self.nodes.push(Node::Leaf { start, end });
        let left = self.build(start, mid);
        let right = self.build(mid, end);
        self.nodes[id] = Node::Split {
            dim,
            value,
            left,
            right,
        };
        id
    }

    /// Indices of the `k` points nearest to `q`, nearest first. Returns all
    /// points when `k` exceeds the tree size.
    pub fn nearest(&self, q: Point3, k: usize) -> Vec<usize> {
        self.nearest_filtered(q, k, |_| true)
    }

    /// Like [`KdTree::nearest`], considering only points accepted by `keep`.
    pub fn nearest_filtered(&self, q: Point3, k: usize, keep: impl Fn(usize) -> bool) -> Vec<usize> {
        if k == 0 || self.points.is_empty() {
            return Vec::new();
        }
        let mut heap = BinaryHeap::with_capacity(k + 1);
        self.search(0, q, k, &keep, &mut heap);
        let mut out = heap.into_sorted_vec();
        out.truncate(k);
        out.into_iter().map(|c| c.index).collect()
    }

    fn search(
        &self,
        node: usize,
        q: Point3,
        k: usize,
        keep: &impl Fn(usize) -> bool,
        heap: &mut BinaryHeap<Candidate>,
    ) {
        match self.nodes[node] {
            Node::Leaf { start, end } => {
                for &i in &self.order[start..end] {
                    if !keep(i) {
                        continue;
                    }
                    let c = Candidate {
                        dist2: (self.points[i] - q).norm_squared(),
                        index: i,
                    };
                    if heap.len() < k {
                        heap.push(c);
                    } else if c < *heap.peek().unwrap() {
                        heap.pop();
                        heap.push(c);
                    }
                }
            }
            Node::Split {
                dim,
                value,
                left,
                right,
            } => {
                let diff = q[dim] - value;
                let (near, far) = if diff < 0.0 { (left, right) } else { (right, left) };
                self.search(near, q, k, keep, heap);
                // `<=` so that equidistant points on the far side still get
                // the chance to win the index tie-break.
                if heap.len() < k || diff * diff <= heap.peek().unwrap().dist2 {
                    self.search(far, q, k, keep, heap);
                }
            }
        }
    }

    /// Indices of all points within distance `r` of `q`, in index order.
    pub fn within(&self, q: Point3, r: f64) -> Vec<usize> {
        let mut out = Vec::new();
        if !self.points.is_empty() {
            self.collect_within(0, q, r * r, &mut out);
        }
        out.sort_unstable();
        out
    }

    fn collect_within(&self, node: usize, q: Point3, r2: f64, out: &mut Vec<usize>) {
        match self.nodes[node] {
            Node::Leaf { start, end } => {
                out.extend(
                    self.order[start..end]
                        .iter()
                        .copied()
                        .filter(|&i| (self.points[i] - q).norm_squared() <= r2),
                );
            }
            Node::Split {
                dim,
                value,
                left,
                right,
            } => {
                let diff = q[dim] - value;
                if diff <= 0.0 || diff * diff <= r2 {
                    self.collect_within(left, q, r2, out);
                }
                if diff >= 0.0 || diff * diff <= r2 {
                    self.collect_within(right, q, r2, out);
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Vec3;
    use proptest::prelude::*;

    fn brute(points: &[Point3], q: Point3, k: usize) -> Vec<usize> {
        let mut idx: Vec<usize> = (0..points.len()).collect();
        idx.sort_by(|&a, &b| {
            (points[a] - q)
                .norm_squared()
                .total_cmp(&(points[b] - q).norm_squared())
                .then(a.cmp(&b))
        });
        idx.truncate(k);
        idx
    }

    #[test]
    fn ties_broken_by_index() {
        // Eight cube corners are equidistant from the centre.
        let mut pts = Vec::new();
        for i in 0..8 {
            pts.push(Vec3::new((i & 1) as f64, ((i >> 1) & 1) as f64, ((i >> 2) & 1) as f64));
        }
        pts.extend((0..40).map(|i| Vec3::new(5.0 + i as f64, 0.0, 0.0)));
        let t = KdTree::new(&pts);
        assert_eq!(t.nearest(Vec3::new(0.5, 0.5, 0.5), 3), vec![0, 1, 2]);
    }

    #[test]
    fn k_larger_than_size_returns_all() {
        let pts = vec![Vec3::ZERO, Vec3::new(1.0, 0.0, 0.0)];
        let t = KdTree::new(&pts);
        assert_eq!(t.nearest(Vec3::new(0.9, 0.0, 0.0), 5), vec![1, 0]);
    }

    proptest! {
        #[test]
        fn matches_brute_force(
            raw in prop::collection::vec((-1.0..1.0f64, -1.0..1.0f64, -1.0..1.0f64), 1..200),
            q in (-1.5..1.5f64, -1.5..1.5f64, -1.5..1.5f64),
            k in 1usize..30,
        ) {
            // Snap to a coarse grid so exact ties actually happen.
            let pts: Vec<Point3> = raw.iter()
                .map(|&(x, y, z)| Vec3::new((x * 4.0).round() / 4.0, (y * 4.0).round() / 4.0, (z * 4.0).round() / 4.0))
                .collect();
            let q = Vec3::new(q.0, q.1, q.2);
            let t = KdTree::new(&pts);
            prop_assert_eq!(t.nearest(q, k), brute(&pts, q, k));
            let r = 0.6;
            let mut expect: Vec<usize> = (0..pts.len()).filter(|&i| (pts[i] - q).norm() <= r).collect();
            expect.sort_unstable();
            prop_assert_eq!(t.within(q, r), expect);
        }
    }
}
