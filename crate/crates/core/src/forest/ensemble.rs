use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::heatmap::Dataset;
use crate::num::Scalar;
use crate::seed;

use super::{fit_tree, ColumnMatrix, ForestParams, Tree};

/// Bagged trees for one destination's percentage.
#[derive(Debug, Clone, PartialEq)]
pub struct Forest<T> {
    pub trees: Vec<Tree<T>>,
    pub params: ForestParams,
    pub destination_id: usize,
    pub feature_dim: usize,
}

impl<T: Scalar> Forest<T> {
    /// Mean of the per-tree predictions.
    pub fn predict(&self, x: &[T]) -> Result<T> {
        if x.len() != self.feature_dim {
            return Err(Error::DimensionMismatch {
                expected: self.feature_dim,
                got: x.len(),
            });
        }
        let sum = self.trees.iter().fold(T::zero(), |a, t| a + t.predict(x));
        Ok(sum / T::of_count(self.trees.len()))
    }
}

/// Tree `t` of destination `d` draws from the stream `derive(seed, [d, t])`.
fn tree_rng(params: &ForestParams, destination_id: usize, tree: usize) -> seed::Rng {
    seed::rng(params.rng_seed, &[destination_id as u64, tree as u64])
}

pub fn fit_forest<T: Scalar>(x: &ColumnMatrix<T>, y: &[T], params: &ForestParams, destination_id: usize) -> Result<Forest<T>> {
    params.validate(x.n_cols())?;
    let trees = (0..params.n_trees)
        .into_par_iter()
        .map(|t| fit_tree(x, y, params, &mut tree_rng(params, destination_id, t)))
        .collect::<Result<Vec<_>>>()?;
    Ok(Forest {
        trees,
        params: *params,
        destination_id,
        feature_dim: x.n_cols(),
    })
}

/// Anything that maps a feature vector to a destination distribution in percent.
pub trait DistributionModel<T> {
    fn feature_dim(&self) -> usize;
    fn predict_distribution(&self, features: &[T]) -> Result<[T; 3]>;
}

/// Three independent forests (L, S, R) whose outputs are renormalized to sum to 100.
#[derive(Debug, Clone, PartialEq)]
pub struct DestinationPredictor<T> {
    pub forests: [Forest<T>; 3],
}

impl<T: Scalar> DestinationPredictor<T> {
    pub fn raw_prediction(&self, features: &[T]) -> Result<[T; 3]> {
        Ok([
            self.forests[0].predict(features)?,
            self.forests[1].predict(features)?,
            self.forests[2].predict(features)?,
        ])
    }

    pub fn params(&self) -> &ForestParams {
        &self.forests[0].params
    }
}

impl<T: Scalar> DistributionModel<T> for DestinationPredictor<T> {
    fn feature_dim(&self) -> usize {
        self.forests[0].feature_dim
    }

    fn predict_distribution(&self, features: &[T]) -> Result<[T; 3]> {
        Ok(normalize_distribution(self.raw_prediction(features)?))
    }
}

/// Clamps to non-negative and rescales onto the 100-simplex; an all-zero
/// input maps to the uniform distribution.
pub fn normalize_distribution<T: Scalar>(raw: [T; 3]) -> [T; 3] {
    let clamped = raw.map(|v| if v > T::zero() { v } else { T::zero() });
    let sum = clamped[0] + clamped[1] + clamped[2];
    if sum <= T::zero() || !sum.is_finite() {
        return [T::lit(100.0) / T::lit(3.0); 3];
    }
    clamped.map(|v| v * T::lit(100.0) / sum)
}

/// Trains the L, S and R forests on the matching response component.
pub fn fit_predictor<T: Scalar>(train: &Dataset<T>, params: &ForestParams) -> Result<DestinationPredictor<T>> {
    if train.is_empty() {
        return Err(Error::EmptyDataset("training set is empty"));
    }
    params.validate(train.feature_dim)?;
    for s in &train.samples {
        if s.features.len() != train.feature_dim {
            return Err(Error::DimensionMismatch {
                expected: train.feature_dim,
                got: s.features.len(),
            });
        }
    }
    let rows: Vec<&[T]> = train.samples.iter().map(|s| s.features.as_slice()).collect();
    let x = ColumnMatrix::from_rows(&rows);
    let targets: [Vec<T>; 3] = std::array::from_fn(|d| train.samples.iter().map(|s| s.response[d]).collect());

    let jobs: Vec<(usize, usize)> = (0..3).flat_map(|d| (0..params.n_trees).map(move |t| (d, t))).collect();
    let mut trees = jobs
        .into_par_iter()
        .map(|(d, t)| fit_tree(&x, &targets[d], params, &mut tree_rng(params, d, t)))
        .collect::<Result<Vec<_>>>()?
        .into_iter();
    let forests = std::array::from_fn(|d| Forest {
        trees: trees.by_ref().take(params.n_trees).collect(),
        params: *params,
        destination_id: d,
        feature_dim: train.feature_dim,
    });
    Ok(DestinationPredictor { forests })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::forest::TreeNode;
    use crate::heatmap::HeatmapSample;

    fn leaf_tree(value: f64) -> Tree<f64> {
        Tree {
            nodes: vec![TreeNode::Leaf { value }],
            n_features: 2,
        }
    }

    fn forest(values: &[f64]) -> Forest<f64> {
        Forest {
            trees: values.iter().map(|v| leaf_tree(*v)).collect(),
            params: ForestParams::default(),
            destination_id: 0,
            feature_dim: 2,
        }
    }

    #[test]
    fn forest_averages_trees() {
        assert_eq!(forest(&[40.0; 5]).predict(&[0.0, 0.0]).unwrap(), 40.0);
        assert_eq!(forest(&[20.0, 60.0]).predict(&[0.0, 0.0]).unwrap(), 40.0);
        assert!(matches!(
            forest(&[1.0]).predict(&[0.0]),
            Err(Error::DimensionMismatch { expected: 2, got: 1 })
        ));
    }

    #[test]
    fn normalization_cases() {
        assert_eq!(normalize_distribution([30.0, 30.0, 60.0]), [25.0, 25.0, 50.0]);
        assert_eq!(normalize_distribution([100.0, 0.0, 0.0]), [100.0, 0.0, 0.0]);
        let u = normalize_distribution([0.0, 0.0, 0.0]);
        assert!(u.iter().all(|v: &f64| (v - 100.0 / 3.0).abs() < 1e-12));
        assert_eq!(normalize_distribution([-5.0, 50.0, 50.0]), [0.0, 50.0, 50.0]);
    }

    fn dataset(n: usize, response: impl Fn(usize) -> [f64; 3]) -> Dataset<f64> {
        Dataset {
            samples: (0..n)
                .map(|i| HeatmapSample {
                    features: vec![i as f64, (i * 7 % 11) as f64, 0.5],
                    response: response(i),
                    run: 0,
                    t: i as f64,
                    n_in_cutout: 1,
                })
                .collect(),
            feature_dim: 3,
            meta: None,
            skipped: 0,
        }
    }

    #[test]
    fn constant_response_is_reproduced() {
        let ds = dataset(30, |_| [20.0, 30.0, 50.0]);
        let p = fit_predictor(&ds, &ForestParams { n_trees: 5, ..Default::default() }).unwrap();
        for s in &ds.samples {
            assert_eq!(p.predict_distribution(&s.features).unwrap(), [20.0, 30.0, 50.0]);
        }
    }

    #[test]
    fn same_seed_same_predictor() {
        let ds = dataset(40, |i| {
            let l = (i * 13 % 100) as f64;
            [l, 100.0 - l, 0.0]
        });
        let params = ForestParams { n_trees: 4, rng_seed: 9, ..Default::default() };
        let a = fit_predictor(&ds, &params).unwrap();
        let b = fit_predictor(&ds, &params).unwrap();
        assert_eq!(a, b);
        let c = fit_predictor(&ds, &ForestParams { rng_seed: 10, ..params }).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn empty_training_set_is_an_error() {
        let ds = dataset(0, |_| [0.0; 3]);
        assert!(matches!(fit_predictor(&ds, &ForestParams::default()), Err(Error::EmptyDataset(_))));
    }
}
