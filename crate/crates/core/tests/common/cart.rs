//! Exhaustive CART reference and the fixed micro-datasets it is checked on.
//!
//! The reference evaluates every feature and every midpoint threshold by the
//! summed squared error of the two children, computed from scratch.

use crowddest::forest::TreeNode;

pub struct Micro {
    pub name: String,
    pub x: Vec<Vec<f64>>,
    pub y: Vec<f64>,
}

fn sse(y: &[f64]) -> f64 {
    if y.is_empty() {
        return 0.0;
    }
    let mean = y.iter().sum::<f64>() / y.len() as f64;
    y.iter().map(|v| (v - mean).powi(2)).sum()
}

/// Preorder node list of the fully grown tree.
pub fn oracle_tree(x: &[Vec<f64>], y: &[f64]) -> Vec<TreeNode<f64>> {
    let mut nodes = Vec::new();
    grow(x, y, &(0..y.len()).collect::<Vec<_>>(), &mut nodes);
    nodes
}

fn grow(x: &[Vec<f64>], y: &[f64], idx: &[usize], nodes: &mut Vec<TreeNode<f64>>) -> usize {
    let ys: Vec<f64> = idx.iter().map(|&i| y[i]).collect();
    let mean = ys.iter().sum::<f64>() / ys.len() as f64;
    let me = nodes.len();
    nodes.push(TreeNode::Leaf { value: mean });
    if idx.len() < 2 || ys.iter().all(|&v| v == ys[0]) {
        return me;
    }
    // (sse, feature, threshold); strict improvement beyond 1e-9 replaces
    let mut best: Option<(f64, usize, f64)> = None;
    for f in 0..x[0].len() {
        let mut vals: Vec<f64> = idx.iter().map(|&i| x[i][f]).collect();
        vals.sort_by(f64::total_cmp);
        vals.dedup();
        for w in vals.windows(2) {
            let thr = (w[0] + w[1]) / 2.0;
            let (l, r): (Vec<usize>, Vec<usize>) = idx.iter().partition(|&&i| x[i][f] <= thr);
            let pick = |s: &[usize]| s.iter().map(|&i| y[i]).collect::<Vec<_>>();
            let cost = sse(&pick(&l)) + sse(&pick(&r));
            if best.is_none_or(|b| cost < b.0 - 1e-9) {
                best = Some((cost, f, thr));
            }
        }
    }
    let Some((_, feature, threshold)) = best else {
        return me;
    };
    let (l, r): (Vec<usize>, Vec<usize>) = idx.iter().partition(|&&i| x[i][feature] <= threshold);
    let left = grow(x, y, &l, nodes);
    let right = grow(x, y, &r, nodes);
    nodes[me] = TreeNode::Split {
        feature,
        threshold,
        left,
        right,
    };
    me
}

/// 20 fixed datasets: four hand-written edge cases and 16 drawn from a
/// small-integer generator so ties and repeated values are common.
pub fn micro_datasets() -> Vec<Micro> {
    let mut out = vec![
        Micro {
            name: "xor".into(),
            x: vec![vec![0.0, 0.0], vec![0.0, 1.0], vec![1.0, 0.0], vec![1.0, 1.0]],
            y: vec![0.0, 1.0, 1.0, 0.0],
        },
        Micro {
            name: "step".into(),
            x: (1..=4).map(|v| vec![v as f64]).collect(),
            y: vec![10.0, 10.0, 20.0, 20.0],
        },
        Micro {
            name: "constant target".into(),
            x: vec![vec![1.0, 5.0], vec![2.0, 3.0], vec![3.0, 1.0]],
            y: vec![7.0; 3],
        },
        Micro {
            name: "constant features".into(),
            x: vec![vec![2.0, 2.0, 2.0]; 5],
            y: vec![1.0, 4.0, 2.0, 8.0, 5.0],
        },
    ];
    // 64-bit LCG so the datasets do not depend on any RNG crate version
    let mut state: u64 = 0x2545_f491_4f6c_dd1d;
    let mut next = |m: u64| {
        state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
        (state >> 33) % m
    };
    for k in 0..16 {
        let n = 2 + next(7) as usize;
        let p = 1 + next(3) as usize;
        let x = (0..n).map(|_| (0..p).map(|_| next(5) as f64).collect()).collect();
        let y = (0..n).map(|_| next(6) as f64 * 2.5).collect();
        out.push(Micro {
            name: format!("random {k} ({n}x{p})"),
            x,
            y,
        });
    }
    out
}

/// Structural equality up to `tol` on thresholds and leaf values.
pub fn same_tree(a: &[TreeNode<f64>], b: &[TreeNode<f64>], tol: f64) -> bool {
    a.len() == b.len()
        && a.iter().zip(b).all(|(p, q)| match (p, q) {
            (TreeNode::Leaf { value: u }, TreeNode::Leaf { value: v }) => (u - v).abs() <= tol,
            (
                TreeNode::Split {
                    feature: f1,
                    threshold: t1,
                    left: l1,
                    right: r1,
                },
                TreeNode::Split {
                    feature: f2,
                    threshold: t2,
                    left: l2,
                    right: r2,
                },
            ) => f1 == f2 && (t1 - t2).abs() <= tol && l1 == l2 && r1 == r2,
            _ => false,
        })
}
