use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Axis {
    X,
    Y,
}

/// Tight axis-aligned bounding box.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BBox {
    pub min: [f64; 2],
    pub max: [f64; 2],
}

impl BBox {
    fn of(points: &[[f64; 2]], idx: &[usize]) -> Self {
        let mut b = BBox {
            min: [f64::INFINITY; 2],
            max: [f64::NEG_INFINITY; 2],
        };
        for &i in idx {
            for a in 0..2 {
                b.min[a] = b.min[a].min(points[i][a]);
                b.max[a] = b.max[a].max(points[i][a]);
            }
        }
        b
    }

    pub fn center(&self) -> [f64; 2] {
        [
            0.5 * (self.min[0] + self.max[0]),
            0.5 * (self.min[1] + self.max[1]),
        ]
    }

    /// Half-widths; a degenerate extent counts as 1 so scaling stays finite.
    pub fn half_widths(&self) -> [f64; 2] {
        let h = |a: usize| {
            let w = 0.5 * (self.max[a] - self.min[a]);
            if w > 0.0 {
                w
            } else {
                1.0
            }
        };
        [h(0), h(1)]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterNode {
    /// Index range into the tree's permutation.
    pub start: usize,
    pub end: usize,
    pub depth: usize,
    pub parent: Option<usize>,
    pub children: Vec<usize>,
    pub split_axis: Option<Axis>,
    pub bbox: BBox,
}

impl ClusterNode {
    pub fn len(&self) -> usize {
        self.end - self.start
    }

    pub fn is_empty(&self) -> bool {
        self.end == self.start
    }

    pub fn is_leaf(&self) -> bool {
        self.children.is_empty()
    }
}

/// Binary cluster tree over a 2D point set.
///
/// Nodes are stored top-down (every child has a larger index than its
/// parent), so iterating in reverse visits children before parents.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterTree {
    pub points: Vec<[f64; 2]>,
    /// `perm[k]` is the point stored at position `k`.
    pub perm: Vec<usize>,
    pub nodes: Vec<ClusterNode>,
    /// Depth of the deepest leaf (root = 0).
    pub depth: usize,
}

impl ClusterTree {
    pub fn leaves(&self) -> impl Iterator<Item = &ClusterNode> {
        self.nodes.iter().filter(|n| n.is_leaf())
    }

    pub fn min_leaf_depth(&self) -> usize {
        self.leaves().map(|n| n.depth).min().unwrap_or(0)
    }

    /// Nodes at exactly `depth`.
    pub fn level(&self, depth: usize) -> impl Iterator<Item = &ClusterNode> {
        self.nodes.iter().filter(move |n| n.depth == depth)
    }
}

/// Splits along the longer bounding-box side (ties go to x) at the median
/// until every node holds at most `leaf_capacity` points. The first child
/// receives the extra point of an odd split.
pub fn build_cluster_tree(points: &[[f64; 2]], leaf_capacity: usize) -> Result<ClusterTree> {
    if points.is_empty() {
        return Err(Error::Argument("cluster tree needs at least one point".into()));
    }
    if leaf_capacity == 0 {
        return Err(Error::Argument("leaf capacity must be >= 1".into()));
    }
    let n = points.len();
    let mut perm: Vec<usize> = (0..n).collect();
    let mut nodes = vec![ClusterNode {
        start: 0,
        end: n,
        depth: 0,
        parent: None,
        children: Vec::new(),
        split_axis: None,
        bbox: BBox::of(points, &perm),
    }];
    let mut depth = 0;
    let mut i = 0;
    // Breadth-first, so nodes of one depth are contiguous.
    while i < nodes.len() {
        let node = nodes[i].clone();
        depth = depth.max(node.depth);
        if node.len() > leaf_capacity {
            let b = node.bbox;
            let axis = if b.max[0] - b.min[0] >= b.max[1] - b.min[1] {
                Axis::X
            } else {
                Axis::Y
            };
            let a = axis as usize;
            perm[node.start..node.end]
                .sort_by(|&p, &q| points[p][a].total_cmp(&points[q][a]));
            let mid = node.start + node.len().div_ceil(2);
            let mut children = Vec::with_capacity(2);
            for (s, e) in [(node.start, mid), (mid, node.end)] {
                children.push(nodes.len());
                nodes.push(ClusterNode {
                    start: s,
                    end: e,
                    depth: node.depth + 1,
                    parent: Some(i),
                    children: Vec::new(),
                    split_axis: None,
                    bbox: BBox::of(points, &perm[s..e]),
                });
            }
            nodes[i].children = children;
            nodes[i].split_axis = Some(axis);
        }
        i += 1;
    }
    Ok(ClusterTree {
        points: points.to_vec(),
        perm,
        nodes,
        depth,
    })
}

/// Pixel centres `(col + 0.5, row + 0.5)` of an `h × w` grid, row-major.
pub fn grid_points(h: usize, w: usize) -> Vec<[f64; 2]> {
    (0..h)
        .flat_map(|r| (0..w).map(move |c| [c as f64 + 0.5, r as f64 + 0.5]))
        .collect()
}
