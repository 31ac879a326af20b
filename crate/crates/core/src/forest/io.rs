//! Plain-text model files.
//!
//! ```text
//! crowddest-model 1
//! feature_dim 400
//! n_trees 20
//! mtry all
//! min_samples_split 2
//! max_depth none
//! bootstrap true
//! seed 1
//! <extra key/value lines>
//! forest L
//! tree 37
//! S 12 0.0123
//! L 33.3
//! ...
//! ```
//!
//! Each tree is its node list in preorder: `S <feature> <threshold>` for a
//! split, `L <value>` for a leaf. Floats use the shortest representation that
//! parses back to the same bits.

use std::collections::BTreeMap;
use std::io::{BufRead, Write};

use crate::error::{Error, Result};
use crate::num::Scalar;
use crate::DESTINATION_LABELS;

use super::{DestinationPredictor, Forest, ForestParams, Tree, TreeNode};

const MAGIC: &str = "crowddest-model 1";

const RESERVED: [&str; 7] = [
    "feature_dim",
    "n_trees",
    "mtry",
    "min_samples_split",
    "max_depth",
    "bootstrap",
    "seed",
];

impl<T: Scalar> DestinationPredictor<T> {
    /// Writes the model; `extra` adds free-form `key value` header lines.
    pub fn write_model<W: Write>(&self, mut w: W, extra: &BTreeMap<String, String>) -> Result<()> {
        let p = self.params();
        let opt = |v: Option<usize>, none: &str| v.map_or(none.to_string(), |v| v.to_string());
        writeln!(w, "{MAGIC}")?;
        writeln!(w, "feature_dim {}", self.forests[0].feature_dim)?;
        writeln!(w, "n_trees {}", p.n_trees)?;
        writeln!(w, "mtry {}", opt(p.mtry, "all"))?;
        writeln!(w, "min_samples_split {}", p.min_samples_split)?;
        writeln!(w, "max_depth {}", opt(p.max_depth, "none"))?;
        writeln!(w, "bootstrap {}", p.bootstrap)?;
        writeln!(w, "seed {}", p.rng_seed)?;
        for (k, v) in extra {
            if RESERVED.contains(&k.as_str()) || k.contains(char::is_whitespace) || k == "forest" {
                return Err(Error::Config(format!("invalid extra model key `{k}`")));
            }
            writeln!(w, "{k} {v}")?;
        }
        for f in &self.forests {
            writeln!(w, "forest {}", DESTINATION_LABELS[f.destination_id])?;
            for t in &f.trees {
                writeln!(w, "tree {}", t.nodes.len())?;
                for n in &t.nodes {
                    match n {
                        TreeNode::Leaf { value } => writeln!(w, "L {value}")?,
                        TreeNode::Split { feature, threshold, .. } => writeln!(w, "S {feature} {threshold}")?,
                    }
                }
            }
        }
        Ok(())
    }

    /// Reads a model written by [`write_model`](Self::write_model); returns the extra header lines too.
    pub fn read_model<R: BufRead>(r: R) -> Result<(Self, BTreeMap<String, String>)> {
        let mut lines = r.lines().enumerate().map(|(i, l)| (i + 1, l));
        let mut next = || -> Result<Option<(usize, String)>> {
            match lines.next() {
                Some((n, l)) => Ok(Some((n, l?))),
                None => Ok(None),
            }
        };
        let perr = |line: usize, msg: String| Error::Parse { line, msg };

        match next()? {
            Some((_, l)) if l.trim() == MAGIC => {}
            _ => return Err(perr(1, format!("expected `{MAGIC}`"))),
        }
        let mut header: BTreeMap<String, (usize, String)> = BTreeMap::new();
        let mut pending = None;
        while let Some((n, line)) = next()? {
            let line = line.trim().to_string();
            if line.starts_with("forest ") {
                pending = Some((n, line));
                break;
            }
            let (k, v) = line
                .split_once(' ')
                .ok_or_else(|| perr(n, format!("expected `key value`, got `{line}`")))?;
            header.insert(k.to_string(), (n, v.trim().to_string()));
        }
        let get = |k: &str| header.get(k).ok_or_else(|| perr(1, format!("missing header key `{k}`")));
        let parse_usize = |k: &str| -> Result<usize> {
            let (n, v) = get(k)?;
            v.parse().map_err(|_| perr(*n, format!("invalid {k} `{v}`")))
        };
        let parse_opt = |k: &str, none: &str| -> Result<Option<usize>> {
            let (n, v) = get(k)?;
            if v == none {
                Ok(None)
            } else {
                v.parse().map(Some).map_err(|_| perr(*n, format!("invalid {k} `{v}`")))
            }
        };
        let feature_dim = parse_usize("feature_dim")?;
        let params = ForestParams {
            n_trees: parse_usize("n_trees")?,
            mtry: parse_opt("mtry", "all")?,
            min_samples_split: parse_usize("min_samples_split")?,
            max_depth: parse_opt("max_depth", "none")?,
            bootstrap: {
                let (n, v) = get("bootstrap")?;
                v.parse().map_err(|_| perr(*n, format!("invalid bootstrap `{v}`")))?
            },
            rng_seed: {
                let (n, v) = get("seed")?;
                v.parse().map_err(|_| perr(*n, format!("invalid seed `{v}`")))?
            },
        };
        params.validate(feature_dim)?;

        let mut forests: Vec<Forest<T>> = Vec::with_capacity(3);
        for d in 0..3 {
            let (n, line) = match pending.take() {
                Some(p) => p,
                None => next()?.ok_or_else(|| perr(0, "unexpected end of model file".into()))?,
            };
            if line.trim() != format!("forest {}", DESTINATION_LABELS[d]) {
                return Err(perr(n, format!("expected `forest {}`", DESTINATION_LABELS[d])));
            }
            let mut trees = Vec::with_capacity(params.n_trees);
            for _ in 0..params.n_trees {
                let (n, line) = next()?.ok_or_else(|| perr(0, "unexpected end of model file".into()))?;
                let count: usize = line
                    .trim()
                    .strip_prefix("tree ")
                    .and_then(|c| c.parse().ok())
                    .ok_or_else(|| perr(n, format!("expected `tree <nodes>`, got `{line}`")))?;
                let mut records = Vec::with_capacity(count);
                for _ in 0..count {
                    let (n, line) = next()?.ok_or_else(|| perr(0, "unexpected end of model file".into()))?;
                    records.push((n, parse_node::<T>(n, &line, feature_dim)?));
                }
                trees.push(link_preorder(records, feature_dim, n)?);
            }
            forests.push(Forest {
                trees,
                params,
                destination_id: d,
                feature_dim,
            });
        }
        if let Some((n, l)) = next()? {
            if !l.trim().is_empty() {
                return Err(perr(n, "trailing content after the last forest".into()));
            }
        }
        let extra = header
            .into_iter()
            .filter(|(k, _)| !RESERVED.contains(&k.as_str()))
            .map(|(k, (_, v))| (k, v))
            .collect();
        let forests: [Forest<T>; 3] = forests.try_into().map_err(|_| perr(0, "expected three forests".into()))?;
        Ok((DestinationPredictor { forests }, extra))
    }
}

fn parse_node<T: Scalar>(line_no: usize, line: &str, feature_dim: usize) -> Result<TreeNode<T>> {
    let perr = |msg: String| Error::Parse { line: line_no, msg };
    let parts: Vec<&str> = line.split_whitespace().collect();
    let num = |s: &str| -> Result<T> {
        s.parse::<T>()
            .ok()
            .filter(|v| v.is_finite())
            .ok_or_else(|| perr(format!("invalid number `{s}`")))
    };
    match parts.as_slice() {
        ["L", v] => Ok(TreeNode::Leaf { value: num(v)? }),
        ["S", f, t] => {
            let feature: usize = f.parse().map_err(|_| perr(format!("invalid feature `{f}`")))?;
            if feature >= feature_dim {
                return Err(perr(format!("feature {feature} out of range")));
            }
            Ok(TreeNode::Split {
                feature,
                threshold: num(t)?,
                left: 0,
                right: 0,
            })
        }
        _ => Err(perr(format!("invalid node record `{line}`"))),
    }
}

/// Restores child links of a preorder node list.
fn link_preorder<T: Scalar>(mut records: Vec<(usize, TreeNode<T>)>, feature_dim: usize, tree_line: usize) -> Result<Tree<T>> {
    // stack of split nodes still waiting for their right child
    let mut open: Vec<usize> = Vec::new();
    for i in 0..records.len() {
        if i > 0 {
            // node i is the left child of i-1 if that was a split, else the
            // right child of the innermost open split
            match records[i - 1].1 {
                TreeNode::Split { .. } => {}
                TreeNode::Leaf { .. } => {
                    let parent = open.pop().ok_or(Error::Parse {
                        line: records[i].0,
                        msg: "node has no parent".into(),
                    })?;
                    if let TreeNode::Split { right, .. } = &mut records[parent].1 {
                        *right = i;
                    }
                }
            }
        }
        if let TreeNode::Split { left, .. } = &mut records[i].1 {
            *left = i + 1;
            open.push(i);
        }
    }
    let complete = !records.is_empty() && open.is_empty() && matches!(records.last(), Some((_, TreeNode::Leaf { .. })));
    if !complete {
        return Err(Error::Parse {
            line: tree_line,
            msg: "incomplete tree".into(),
        });
    }
    Ok(Tree {
        nodes: records.into_iter().map(|(_, n)| n).collect(),
        n_features: feature_dim,
    })
}
