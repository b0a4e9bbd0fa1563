use serde::{Deserialize, Serialize};

use super::tree::{BBox, ClusterTree};
use crate::error::{Error, Result};
use crate::linalg::householder_qr;

/// Relative threshold below which a moment column counts as dependent.
const RANK_TOL: f64 = 1e-10;

/// Number of 2D monomials of total degree `< m`.
pub fn monomial_count(m: usize) -> usize {
    m * (m + 1) / 2
}

/// Exponents `(a, b)` of `x^a y^b`, ordered by total degree, then by
/// descending `a`.
pub fn monomials(m: usize) -> Vec<(usize, usize)> {
    (0..m)
        .flat_map(|d| (0..=d).map(move |b| (d - b, b)))
        .collect()
}

fn monomial_index(a: usize, b: usize) -> usize {
    let d = a + b;
    d * (d + 1) / 2 + b
}

/// Per-node orthogonal mixing.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NodeBasis {
    /// Coefficient positions the node reads (children's scaling slots, or
    /// the leaf's own points) and writes back in place.
    pub slots: Vec<usize>,
    /// Number of scaling functions kept; the rest are samplets.
    pub scaling: usize,
    /// `n × n` row-major orthogonal matrix, `n = slots.len()`.
    pub mixing: Vec<f64>,
}

impl NodeBasis {
    pub fn n(&self) -> usize {
        self.slots.len()
    }

    pub fn samplets(&self) -> usize {
        self.n() - self.scaling
    }

    /// Slots holding this node's scaling coefficients after the transform.
    pub fn scaling_slots(&self) -> &[usize] {
        &self.slots[..self.scaling]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampletBasis {
    pub tree: ClusterTree,
    pub m: usize,
    pub nodes: Vec<NodeBasis>,
}

/// Monomial values `((p − c)/r)^α` for all exponents, in [`monomials`] order.
fn scaled_monomials(p: [f64; 2], bbox: &BBox, m: usize, out: &mut [f64]) {
    let c = bbox.center();
    let r = bbox.half_widths();
    let u = (p[0] - c[0]) / r[0];
    let v = (p[1] - c[1]) / r[1];
    let mut pu = vec![1.0; m];
    let mut pv = vec![1.0; m];
    for i in 1..m {
        pu[i] = pu[i - 1] * u;
        pv[i] = pv[i - 1] * v;
    }
    for (k, (a, b)) in monomials(m).into_iter().enumerate() {
        out[k] = pu[a] * pv[b];
    }
}

/// Matrix `T` with `moments_parent = T · moments_child` for one child.
fn transfer(child: &BBox, parent: &BBox, m: usize) -> Vec<f64> {
    let mq = monomial_count(m);
    let (cc, cr) = (child.center(), child.half_widths());
    let (pc, pr) = (parent.center(), parent.half_widths());
    let s = [cr[0] / pr[0], cr[1] / pr[1]];
    let t = [(cc[0] - pc[0]) / pr[0], (cc[1] - pc[1]) / pr[1]];
    let mut binom = vec![vec![0.0; m]; m];
    for n in 0..m {
        binom[n][0] = 1.0;
        for k in 1..=n {
            binom[n][k] = binom[n - 1][k - 1] + if k < n { binom[n - 1][k] } else { 0.0 };
        }
    }
    let mut out = vec![0.0; mq * mq];
    for (row, (a, b)) in monomials(m).into_iter().enumerate() {
        for i in 0..=a {
            for j in 0..=b {
                let coef = binom[a][i]
                    * binom[b][j]
                    * s[0].powi(i as i32)
                    * t[0].powi((a - i) as i32)
                    * s[1].powi(j as i32)
                    * t[1].powi((b - j) as i32);
                out[row * mq + monomial_index(i, j)] += coef;
            }
        }
    }
    out
}

/// Builds the samplet basis bottom-up.
///
/// For each node the moment matrix of its input functions (the points of a
/// leaf, the children's scaling functions otherwise) is factorized as
/// `Q_tᵀ R`; rows of `Q_t` with non-zero `R` rows are the new scaling
/// functions and the remaining rows have vanishing moments.
pub fn construct_basis(tree: ClusterTree, m: usize) -> Result<SampletBasis> {
    if m == 0 {
        return Err(Error::Construction("samplets need m >= 1".into()));
    }
    let mq = monomial_count(m);
    if let Some(leaf) = tree.leaves().find(|l| l.len() < mq) {
        return Err(Error::Construction(format!(
            "leaf with {} points is smaller than the {mq} monomials of order {m}",
            leaf.len()
        )));
    }
    let count = tree.nodes.len();
    let mut bases: Vec<Option<NodeBasis>> = vec![None; count];
    // Moments (scaling × mq, row-major) of each node's scaling functions.
    let mut moments: Vec<Vec<f64>> = vec![Vec::new(); count];
    let mut buf = vec![0.0; mq];
    for id in (0..count).rev() {
        let node = &tree.nodes[id];
        let (slots, input) = if node.is_leaf() {
            let mut input = Vec::with_capacity(node.len() * mq);
            for k in node.start..node.end {
                scaled_monomials(tree.points[tree.perm[k]], &node.bbox, m, &mut buf);
                input.extend_from_slice(&buf);
            }
            ((node.start..node.end).collect::<Vec<_>>(), input)
        } else {
            let mut slots = Vec::new();
            let mut input = Vec::new();
            for &c in &node.children {
                let cb = bases[c].as_ref().expect("children first");
                slots.extend_from_slice(cb.scaling_slots());
                let t = transfer(&tree.nodes[c].bbox, &node.bbox, m);
                for row in moments[c].chunks_exact(mq) {
                    for (a, out) in buf.iter_mut().enumerate() {
                        *out = (0..mq).map(|b| t[a * mq + b] * row[b]).sum();
                    }
                    input.extend_from_slice(&buf);
                }
                moments[c] = Vec::new();
            }
            (slots, input)
        };
        let n = slots.len();
        let qr = householder_qr(&input, n, mq, RANK_TOL);
        let mut mixing = qr.q_t;
        let scaling = qr.rank;
        // Deterministic samplet signs: largest entry positive.
        for row in mixing.chunks_exact_mut(n).skip(scaling) {
            let big = row
                .iter()
                .copied()
                .fold(0.0f64, |acc, v| if v.abs() > acc.abs() + 1e-12 { v } else { acc });
            if big < 0.0 {
                row.iter_mut().for_each(|v| *v = -*v);
            }
        }
        moments[id] = qr.r[..scaling * mq].to_vec();
        bases[id] = Some(NodeBasis {
            slots,
            scaling,
            mixing,
        });
    }
    Ok(SampletBasis {
        tree,
        m,
        nodes: bases.into_iter().map(|b| b.expect("all nodes")).collect(),
    })
}

impl SampletBasis {
    pub fn len(&self) -> usize {
        self.tree.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tree.points.is_empty()
    }

    /// Shallowest processed depth for level `level` (`None` = full tree).
    ///
    /// One image level corresponds to two tree levels (an x- and a
    /// y-split), so level `l` stops at nodes of about `4^l` points.
    pub fn cut_depth(&self, level: Option<usize>) -> usize {
        match level {
            None => 0,
            Some(l) => {
                let n = self.len();
                let log2 = usize::BITS as usize - (n.max(1) - 1).leading_zeros() as usize;
                log2.saturating_sub(2 * l).min(self.tree.min_leaf_depth())
            }
        }
    }

    fn check_len(&self, len: usize) -> Result<()> {
        if len != self.len() {
            return Err(Error::Argument(format!(
                "{len} values for a basis over {} points",
                self.len()
            )));
        }
        Ok(())
    }

    /// Fast samplet transform in tree order. `values` are in point order;
    /// the result is indexed by tree position (see [`ClusterTree::perm`]).
    pub fn forward(&self, values: &[f64], cut: usize) -> Result<Vec<f64>> {
        self.check_len(values.len())?;
        let mut y: Vec<f64> = self.tree.perm.iter().map(|&p| values[p]).collect();
        let mut inp = Vec::new();
        for (id, node) in self.tree.nodes.iter().enumerate().rev() {
            if node.depth < cut {
                continue;
            }
            let b = &self.nodes[id];
            inp.clear();
            inp.extend(b.slots.iter().map(|&s| y[s]));
            let n = b.n();
            for (i, &s) in b.slots.iter().enumerate() {
                y[s] = b.mixing[i * n..(i + 1) * n]
                    .iter()
                    .zip(&inp)
                    .map(|(a, x)| a * x)
                    .sum();
            }
        }
        Ok(y)
    }

    /// Inverse of [`forward`](Self::forward).
    pub fn inverse(&self, coeffs: &[f64], cut: usize) -> Result<Vec<f64>> {
        self.check_len(coeffs.len())?;
        let mut y = coeffs.to_vec();
        let mut out = Vec::new();
        for (id, node) in self.tree.nodes.iter().enumerate() {
            if node.depth < cut {
                continue;
            }
            let b = &self.nodes[id];
            let n = b.n();
            out.clear();
            out.resize(n, 0.0);
            for (i, &s) in b.slots.iter().enumerate() {
                let c = y[s];
                for (o, a) in out.iter_mut().zip(&b.mixing[i * n..(i + 1) * n]) {
                    *o += a * c;
                }
            }
            for (&s, &v) in b.slots.iter().zip(&out) {
                y[s] = v;
            }
        }
        let mut values = vec![0.0; y.len()];
        for (k, &p) in self.tree.perm.iter().enumerate() {
            values[p] = y[k];
        }
        Ok(values)
    }

    /// For each tree position: `None` for an approximation coefficient, or
    /// the depth of the node whose samplet it holds.
    pub fn coefficient_depths(&self, cut: usize) -> Vec<Option<usize>> {
        let mut out = vec![None; self.len()];
        for (id, node) in self.tree.nodes.iter().enumerate() {
            if node.depth < cut {
                continue;
            }
            let b = &self.nodes[id];
            for &s in &b.slots[b.scaling..] {
                out[s] = Some(node.depth);
            }
        }
        out
    }

    /// Dense basis matrix (row `k` = basis function at tree position `k`,
    /// in point order). Quadratic in size; meant for verification.
    pub fn dense_matrix(&self, cut: usize) -> Result<Vec<Vec<f64>>> {
        let n = self.len();
        (0..n)
            .map(|k| {
                let mut e = vec![0.0; n];
                e[k] = 1.0;
                self.inverse(&e, cut)
            })
            .collect()
    }
}
