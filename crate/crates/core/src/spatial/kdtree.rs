//! Static 3D kd-tree answering exact nearest-neighbour queries.

use crate::model::Point3;

const LEAF_SIZE: usize = 12;

#[derive(Debug, Clone)]
enum Node {
    Leaf {
        start: u32,
        end: u32,
    },
    Split {
        axis: u8,
        value: f64,
        left: u32,
        right: u32,
    },
}

/// Exact nearest-neighbour index over a fixed point set.
///
/// Points are stored reordered so that every leaf is a contiguous slice;
/// `ids` maps a stored slot back to the caller's index.
#[derive(Debug, Clone)]
pub struct KdTree {
    coords: Vec<[f64; 3]>,
    ids: Vec<u32>,
    nodes: Vec<Node>,
}

/// Result of a nearest-neighbour query.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Neighbor {
    pub index: usize,
    pub distance_squared: f64,
}

impl Neighbor {
    pub fn distance(&self) -> f64 {
        self.distance_squared.sqrt()
    }
}

impl KdTree {
    pub fn build(points: &[Point3]) -> KdTree {
        Self::build_from(points.iter().map(|p| p.to_array()).collect())
    }

    /// Builds over a subset of `points`, reporting original indices.
    pub fn build_subset(points: &[Point3], subset: &[usize]) -> KdTree {
        let coords = subset.iter().map(|&i| points[i].to_array()).collect();
        let mut tree = Self::build_from(coords);
        for id in &mut tree.ids {
            *id = subset[*id as usize] as u32;
        }
        tree
    }

    fn build_from(mut coords: Vec<[f64; 3]>) -> KdTree {
        assert!(
            coords.len() < u32::MAX as usize,
            "too many points for index"
        );
        let mut ids: Vec<u32> = (0..coords.len() as u32).collect();
        let mut nodes = Vec::with_capacity(2 * coords.len() / LEAF_SIZE + 1);
        if !coords.is_empty() {
            let n = coords.len();
            build_rec(&mut coords, &mut ids, 0, n, &mut nodes);
        }
        KdTree { coords, ids, nodes }
    }

    pub fn len(&self) -> usize {
        self.coords.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    pub fn nearest(&self, q: &Point3) -> Option<Neighbor> {
        self.nearest_excluding(q, None)
    }

    /// Nearest indexed point, skipping the point whose caller index is
    /// `exclude`. Ties resolve to the smallest caller index.
    pub fn nearest_excluding(&self, q: &Point3, exclude: Option<usize>) -> Option<Neighbor> {
        if self.nodes.is_empty() {
            return None;
        }
        let mut best = Best {
            dist_sq: f64::INFINITY,
            id: u32::MAX,
            exclude: exclude.map_or(u32::MAX, |e| e as u32),
        };
        self.search(0, &q.to_array(), &mut best);
        (best.id != u32::MAX).then_some(Neighbor {
            index: best.id as usize,
            distance_squared: best.dist_sq,
        })
    }

    fn search(&self, node: usize, q: &[f64; 3], best: &mut Best) {
        match self.nodes[node] {
            Node::Leaf { start, end } => {
                for slot in start as usize..end as usize {
                    let id = self.ids[slot];
                    if id == best.exclude {
                        continue;
                    }
                    let c = &self.coords[slot];
                    let dx = c[0] - q[0];
                    let dy = c[1] - q[1];
                    let dz = c[2] - q[2];
                    let d = dx * dx + dy * dy + dz * dz;
                    if d < best.dist_sq || (d == best.dist_sq && id < best.id) {
                        best.dist_sq = d;
                        best.id = id;
                    }
                }
            }
            Node::Split {
                axis,
                value,
                left,
                right,
            } => {
                let diff = q[axis as usize] - value;
                let (near, far) = if diff < 0.0 {
                    (left, right)
                } else {
                    (right, left)
                };
                self.search(near as usize, q, best);
                // `<=` keeps equal-distance candidates reachable for the tie rule.
                if diff * diff <= best.dist_sq {
                    self.search(far as usize, q, best);
                }
            }
        }
    }
}

struct Best {
    dist_sq: f64,
    id: u32,
    exclude: u32,
}

fn build_rec(
    coords: &mut [[f64; 3]],
    ids: &mut [u32],
    offset: usize,
    len: usize,
    nodes: &mut Vec<Node>,
) -> u32 {
    let me = nodes.len() as u32;
    let pts = &mut coords[offset..offset + len];
    if len <= LEAF_SIZE {
        nodes.push(Node::Leaf {
            start: offset as u32,
            end: (offset + len) as u32,
        });
        return me;
    }

    let axis = widest_axis(pts);
    let mid = len / 2;
    // Sort coordinates and ids together through a permutation.
    let mut order: Vec<usize> = (0..len).collect();
    order.select_nth_unstable_by(mid, |&a, &b| pts[a][axis].total_cmp(&pts[b][axis]));
    let value = pts[order[mid]][axis];
    let ids_slice = &mut ids[offset..offset + len];
    let new_coords: Vec<[f64; 3]> = order.iter().map(|&i| pts[i]).collect();
    let new_ids: Vec<u32> = order.iter().map(|&i| ids_slice[i]).collect();
    pts.copy_from_slice(&new_coords);
    ids_slice.copy_from_slice(&new_ids);

    nodes.push(Node::Leaf { start: 0, end: 0 });
    let left = build_rec(coords, ids, offset, mid, nodes);
    let right = build_rec(coords, ids, offset + mid, len - mid, nodes);
    nodes[me as usize] = Node::Split {
        axis: axis as u8,
        value,
        left,
        right,
    };
    me
}

fn widest_axis(pts: &[[f64; 3]]) -> usize {
    let mut lo = pts[0];
    let mut hi = pts[0];
    for p in pts.iter().skip(1) {
        for a in 0..3 {
            lo[a] = lo[a].min(p[a]);
            hi[a] = hi[a].max(p[a]);
        }
    }
    let spread = [hi[0] - lo[0], hi[1] - lo[1], hi[2] - lo[2]];
    let mut axis = 0;
    for a in 1..3 {
        if spread[a] > spread[axis] {
            axis = a;
        }
    }
    axis
}
