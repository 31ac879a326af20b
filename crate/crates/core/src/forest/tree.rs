use rand::Rng;

use crate::error::{Error, Result};
use crate::num::Scalar;

use super::split::{candidate_features, reciprocals, SplitSearch};
use super::{ColumnMatrix, ForestParams};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TreeNode<T> {
    Leaf {
        value: T,
    },
    Split {
        feature: usize,
        threshold: T,
        left: usize,
        right: usize,
    },
}

/// Regression tree stored as a node arena in preorder (root first, left
/// subtree before right subtree).
#[derive(Debug, Clone, PartialEq)]
pub struct Tree<T> {
    pub nodes: Vec<TreeNode<T>>,
    pub n_features: usize,
}

impl<T: Scalar> Tree<T> {
    pub fn predict(&self, x: &[T]) -> T {
        let mut i = 0;
        loop {
            match self.nodes[i] {
                TreeNode::Leaf { value } => return value,
                TreeNode::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => i = if x[feature] <= threshold { left } else { right },
            }
        }
    }

    pub fn depth(&self) -> usize {
        fn walk<T>(nodes: &[TreeNode<T>], i: usize) -> usize {
            match nodes[i] {
                TreeNode::Leaf { .. } => 0,
                TreeNode::Split { left, right, .. } => 1 + walk(nodes, left).max(walk(nodes, right)),
            }
        }
        walk(&self.nodes, 0)
    }

    pub fn n_leaves(&self) -> usize {
        self.nodes.iter().filter(|n| matches!(n, TreeNode::Leaf { .. })).count()
    }
}

/// Grows one tree on `x`/`y`. With `params.bootstrap` the tree sees `n`
/// rows drawn with replacement; otherwise every row once.
pub fn fit_tree<T: Scalar, R: Rng + ?Sized>(
    x: &ColumnMatrix<T>,
    y: &[T],
    params: &ForestParams,
    rng: &mut R,
) -> Result<Tree<T>> {
    let n = x.n_rows();
    if n == 0 || y.is_empty() {
        return Err(Error::EmptyDataset("cannot fit a tree on zero samples"));
    }
    if x.n_cols() == 0 {
        return Err(Error::Config("cannot fit a tree without features".into()));
    }
    if y.len() != n {
        return Err(Error::DimensionMismatch { expected: n, got: y.len() });
    }
    let mut counts = vec![1u32; n];
    if params.bootstrap {
        counts.iter_mut().for_each(|c| *c = 0);
        for _ in 0..n {
            counts[rng.random_range(0..n)] += 1;
        }
    }
    Ok(Grower::new(x, y, &counts, params).grow(rng))
}

struct Task {
    lo: usize,
    hi: usize,
    depth: usize,
    /// Split node whose right child this task becomes.
    right_of: Option<usize>,
}

/// Presorted tree growth. `order[f·m .. (f+1)·m]` lists the (repeated)
/// bootstrap rows in ascending order of feature `f`, and `values` holds the
/// matching feature values. Every node owns the same segment `[lo, hi)` in
/// all features and splitting stably partitions each segment, so no per-node
/// sorting is needed and scans stay contiguous.
struct Grower<'a, T> {
    x: &'a ColumnMatrix<T>,
    y: &'a [T],
    params: &'a ForestParams,
    m: usize,
    order: Vec<u32>,
    values: Vec<T>,
    goes_left: Vec<bool>,
    scratch: Vec<(u32, T)>,
}

impl<'a, T: Scalar> Grower<'a, T> {
    fn new(x: &'a ColumnMatrix<T>, y: &'a [T], counts: &[u32], params: &'a ForestParams) -> Self {
        let m: usize = counts.iter().map(|&c| c as usize).sum();
        let p = x.n_cols();
        let mut order = Vec::with_capacity(m * p);
        let mut values = Vec::with_capacity(m * p);
        for f in 0..p {
            let col = x.column(f);
            for &row in x.sorted_rows(f) {
                for _ in 0..counts[row as usize] {
                    order.push(row);
                    values.push(col[row as usize]);
                }
            }
        }
        Self {
            x,
            y,
            params,
            m,
            order,
            values,
            goes_left: vec![false; x.n_rows()],
            scratch: Vec::with_capacity(m),
        }
    }

    /// Rows of the node in an arbitrary but fixed order (that of feature 0).
    fn rows(&self, lo: usize, hi: usize) -> &[u32] {
        &self.order[lo..hi]
    }

    fn grow<R: Rng + ?Sized>(mut self, rng: &mut R) -> Tree<T> {
        let p = self.x.n_cols();
        let mtry = self.params.mtry_for(p);
        let recip = reciprocals::<T>(self.m);
        let mut nodes: Vec<TreeNode<T>> = Vec::new();
        let mut stack = vec![Task {
            lo: 0,
            hi: self.m,
            depth: 0,
            right_of: None,
        }];
        while let Some(task) = stack.pop() {
            let id = nodes.len();
            if let Some(parent) = task.right_of {
                if let TreeNode::Split { right, .. } = &mut nodes[parent] {
                    *right = id;
                }
            }
            let n = task.hi - task.lo;
            let (sum, sum_sq, pure) = {
                let rows = self.rows(task.lo, task.hi);
                let first = rows.first().map(|&r| self.y[r as usize]);
                let mut sum = T::zero();
                let mut sum_sq = T::zero();
                let mut pure = true;
                for &r in rows {
                    let v = self.y[r as usize];
                    sum = sum + v;
                    sum_sq = sum_sq + v * v;
                    pure &= Some(v) == first;
                }
                (sum, sum_sq, pure)
            };
            let leaf = TreeNode::Leaf {
                value: sum / T::of_count(n.max(1)),
            };
            let stop = pure
                || n < self.params.min_samples_split.max(2)
                || self.params.max_depth.is_some_and(|d| task.depth >= d);
            if stop {
                nodes.push(leaf);
                continue;
            }

            let mut search = SplitSearch::new(sum, sum_sq, n, &recip);
            for f in candidate_features(rng, p, mtry) {
                let range = f * self.m + task.lo..f * self.m + task.hi;
                let rows = &self.order[range.clone()];
                let vals = &self.values[range];
                search.scan(f, vals.iter().zip(rows).map(|(v, &r)| (*v, self.y[r as usize])));
            }
            let Some(split) = search.best else {
                nodes.push(leaf);
                continue;
            };

            let n_left = self.partition(task.lo, task.hi, split.feature, split.threshold);
            let mid = task.lo + n_left;
            nodes.push(TreeNode::Split {
                feature: split.feature,
                threshold: split.threshold,
                left: id + 1,
                right: usize::MAX,
            });
            stack.push(Task {
                lo: mid,
                hi: task.hi,
                depth: task.depth + 1,
                right_of: Some(id),
            });
            stack.push(Task {
                lo: task.lo,
                hi: mid,
                depth: task.depth + 1,
                right_of: None,
            });
        }
        Tree { nodes, n_features: p }
    }

    /// Stable partition of every feature's segment; returns the left count.
    fn partition(&mut self, lo: usize, hi: usize, feature: usize, threshold: T) -> usize {
        let mut n_left = 0;
        let range = feature * self.m + lo..feature * self.m + hi;
        for (&r, &v) in self.order[range.clone()].iter().zip(&self.values[range]) {
            let left = v <= threshold;
            self.goes_left[r as usize] = left;
            n_left += left as usize;
        }
        for f in 0..self.x.n_cols() {
            let range = f * self.m + lo..f * self.m + hi;
            let rows = &mut self.order[range.clone()];
            let vals = &mut self.values[range];
            self.scratch.clear();
            let mut w = 0;
            for i in 0..rows.len() {
                let (r, v) = (rows[i], vals[i]);
                if self.goes_left[r as usize] {
                    rows[w] = r;
                    vals[w] = v;
                    w += 1;
                } else {
                    self.scratch.push((r, v));
                }
            }
            for (k, (r, v)) in self.scratch.iter().enumerate() {
                rows[w + k] = *r;
                vals[w + k] = *v;
            }
        }
        n_left
    }
}
