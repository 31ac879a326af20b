//! Prediction error on the destination simplex.
//!
//! The error of one prediction is the Euclidean distance between the true and
//! predicted percentage triples, expressed as a percentage of the largest
//! distance two points of the 100-simplex can have, `√(2·100²)`.

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::forest::{fit_predictor, DistributionModel, ForestParams};
use crate::heatmap::Dataset;
use crate::num::Scalar;
use crate::seed;


/// Largest distance between two distributions in percent: `√(2·100²)`.
pub fn e_max<T: Scalar>() -> T {
    (T::lit(2.0) * T::lit(100.0) * T::lit(100.0)).sqrt()
}

fn simplex_tolerance<T: Scalar>() -> T {
    T::lit(1e-6).max(T::epsilon() * T::lit(400.0))
}

fn check_simplex<T: Scalar>(p: &[T; 3]) -> Result<()> {
    let tol = simplex_tolerance::<T>();
    let sum = p[0] + p[1] + p[2];
    let ok = (sum - T::lit(100.0)).abs() <= tol && p.iter().all(|v| *v >= -tol);
    if ok {
        Ok(())
    } else {
        Err(Error::OffSimplex(p.map(Scalar::as_f64)))
    }
}

/// `100 · ‖y − ŷ‖₂ / e_max`, in `[0, 100]`.
pub fn relative_error<T: Scalar>(y: [T; 3], y_hat: [T; 3]) -> Result<T> {
    check_simplex(&y)?;
    check_simplex(&y_hat)?;
    let d2 = (0..3).fold(T::zero(), |a, k| {
        let d = y[k] - y_hat[k];
        a + d * d
    });
    Ok(T::lit(100.0) * d2.sqrt() / e_max::<T>())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SplitSpec {
    pub train_fraction: f64,
    pub rng_seed: u64,
}

impl Default for SplitSpec {
    fn default() -> Self {
        Self {
            train_fraction: 0.8,
            rng_seed: 0,
        }
    }
}

/// Random train/test partition. The training part holds
/// `round(train_fraction · n)` samples (at least one, leaving at least one
/// for testing); both parts keep the original sample order.
pub fn split_dataset<T: Scalar>(ds: &Dataset<T>, spec: &SplitSpec) -> Result<(Dataset<T>, Dataset<T>)> {
    let (train, test) = split_indices(ds.len(), spec)?;
    Ok((ds.subset(&train), ds.subset(&test)))
}

pub fn split_indices(n: usize, spec: &SplitSpec) -> Result<(Vec<usize>, Vec<usize>)> {
    if !(spec.train_fraction > 0.0 && spec.train_fraction < 1.0) {
        return Err(Error::Config(format!("train_fraction must be in (0, 1), got {}", spec.train_fraction)));
    }
    if n < 2 {
        return Err(Error::EmptyDataset("need at least two samples to split"));
    }
    let n_train = ((spec.train_fraction * n as f64).round() as usize).clamp(1, n - 1);
    let mut rng = seed::rng(spec.rng_seed, &[0x5_9117]);
    let picked = rand::seq::index::sample(&mut rng, n, n_train);
    let mut in_train = vec![false; n];
    for i in picked.iter() {
        in_train[i] = true;
    }
    let (train, test): (Vec<usize>, Vec<usize>) = (0..n).partition(|&i| in_train[i]);
    Ok((train, test))
}

#[derive(Debug, Clone, PartialEq)]
pub struct ErrorSummary<T> {
    pub label: String,
    pub mean_relative_error: T,
    /// Sample standard deviation (`n − 1` denominator); zero for one sample.
    pub std_relative_error: T,
    pub n_test: usize,
    pub per_sample_errors: Vec<T>,
}

pub const SUMMARY_HEADER: &str = "label,n_test,mean_err,std_err";

impl<T: Scalar> ErrorSummary<T> {
    pub fn from_errors(label: impl Into<String>, errors: Vec<T>) -> Result<Self> {
        if errors.is_empty() {
            return Err(Error::EmptyDataset("no errors to summarize"));
        }
        let (mean, std) = mean_std(&errors);
        Ok(Self {
            label: label.into(),
            mean_relative_error: mean,
            std_relative_error: std,
            n_test: errors.len(),
            per_sample_errors: errors,
        })
    }

    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{}",
            self.label, self.n_test, self.mean_relative_error, self.std_relative_error
        )
    }
}

/// Mean and sample standard deviation.
pub fn mean_std<T: Scalar>(v: &[T]) -> (T, T) {
    if v.is_empty() {
        return (T::nan(), T::nan());
    }
    let n = T::of_count(v.len());
    let mean = v.iter().fold(T::zero(), |a, x| a + *x) / n;
    if v.len() < 2 {
        return (mean, T::zero());
    }
    let ss = v.iter().fold(T::zero(), |a, x| a + (*x - mean) * (*x - mean));
    (mean, (ss / (n - T::one())).sqrt())
}

/// Scores `model` on every test sample.
pub fn evaluate<T: Scalar, M: DistributionModel<T> + ?Sized>(model: &M, test: &Dataset<T>) -> Result<ErrorSummary<T>> {
    if test.is_empty() {
        return Err(Error::EmptyDataset("test set is empty"));
    }
    if model.feature_dim() != test.feature_dim {
        return Err(Error::DimensionMismatch {
            expected: model.feature_dim(),
            got: test.feature_dim,
        });
    }
    let errors = test
        .samples
        .iter()
        .map(|s| relative_error(s.response, model.predict_distribution(&s.features)?))
        .collect::<Result<Vec<T>>>()?;
    ErrorSummary::from_errors("test", errors)
}

/// Mean error of always predicting the uniform distribution.
pub fn baseline_uniform_error<T: Scalar>(test: &Dataset<T>) -> Result<T> {
    if test.is_empty() {
        return Err(Error::EmptyDataset("test set is empty"));
    }
    let u = [T::lit(100.0) / T::lit(3.0); 3];
    let errors = test
        .samples
        .iter()
        .map(|s| relative_error(s.response, u))
        .collect::<Result<Vec<T>>>()?;
    Ok(mean_std(&errors).0)
}

/// One split-train-test cycle.
#[derive(Debug, Clone, PartialEq)]
pub struct Repetition<T> {
    pub summary: ErrorSummary<T>,
    pub baseline_error: T,
    pub train_time_s: f64,
    pub split_seed: u64,
    pub forest_seed: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RepeatedEvaluation<T> {
    pub repetitions: Vec<Repetition<T>>,
    /// Mean over all test errors of all repetitions.
    pub mean_error: T,
    /// Sample std over all test errors of all repetitions.
    pub pooled_std: T,
    /// Sample std of the per-repetition mean errors.
    pub std_of_means: T,
    pub mean_baseline_error: T,
    pub mean_train_time_s: f64,
}

/// Repetition `k` splits with seed `derive(spec.rng_seed, [k])` and trains
/// with forest seed `derive(params.rng_seed, [k])`.
pub fn repeated_evaluation<T: Scalar>(
    ds: &Dataset<T>,
    params: &ForestParams,
    spec: &SplitSpec,
    repetitions: usize,
) -> Result<RepeatedEvaluation<T>> {
    if repetitions == 0 {
        return Err(Error::Config("repetitions must be >= 1".into()));
    }
    let mut reps = Vec::with_capacity(repetitions);
    for k in 0..repetitions {
        let split_seed = seed::derive(spec.rng_seed, &[k as u64]);
        let forest_seed = seed::derive(params.rng_seed, &[k as u64]);
        let (train, test) = split_dataset(
            ds,
            &SplitSpec {
                rng_seed: split_seed,
                ..*spec
            },
        )?;
        let started = Instant::now();
        let model = fit_predictor(
            &train,
            &ForestParams {
                rng_seed: forest_seed,
                ..*params
            },
        )?;
        let train_time_s = started.elapsed().as_secs_f64();
        let mut summary = evaluate(&model, &test)?;
        summary.label = format!("rep{k}");
        reps.push(Repetition {
            baseline_error: baseline_uniform_error(&test)?,
            summary,
            train_time_s,
            split_seed,
            forest_seed,
        });
    }
    let pooled: Vec<T> = reps
        .iter()
        .flat_map(|r| r.summary.per_sample_errors.iter().copied())
        .collect();
    let (mean_error, pooled_std) = mean_std(&pooled);
    let means: Vec<T> = reps.iter().map(|r| r.summary.mean_relative_error).collect();
    let baselines: Vec<T> = reps.iter().map(|r| r.baseline_error).collect();
    Ok(RepeatedEvaluation {
        mean_error,
        pooled_std,
        std_of_means: mean_std(&means).1,
        mean_baseline_error: mean_std(&baselines).0,
        mean_train_time_s: reps.iter().map(|r| r.train_time_s).sum::<f64>() / reps.len() as f64,
        repetitions: reps,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::heatmap::HeatmapSample;

    #[test]
    fn e_max_value() {
        assert!((e_max::<f64>() - 141.4213562).abs() < 1e-6);
        assert!((e_max::<f32>() - 141.42136).abs() < 1e-3);
    }

    #[test]
    fn worst_case_is_100_percent() {
        assert!((relative_error::<f64>([100.0, 0.0, 0.0], [0.0, 100.0, 0.0]).unwrap() - 100.0).abs() < 1e-12);
        assert_eq!(relative_error([28.0, 40.0, 32.0], [28.0, 40.0, 32.0]).unwrap(), 0.0);
    }

    #[test]
    fn table_row_against_uniform() {
        let e = relative_error::<f64>([28.3, 39.1, 32.6], [100.0 / 3.0; 3]).unwrap();
        // ‖(−5.03, 5.77, −0.73)‖ / 141.42 · 100
        assert!((e - 5.44).abs() < 0.02, "{e}");
    }

    #[test]
    fn off_simplex_is_rejected() {
        assert!(matches!(
            relative_error([50.0, 50.0, 50.0], [100.0 / 3.0; 3]),
            Err(Error::OffSimplex(_))
        ));
        assert!(relative_error([110.0, -10.0, 0.0], [100.0 / 3.0; 3]).is_err());
    }

    fn dataset(responses: &[[f64; 3]]) -> Dataset<f64> {
        Dataset {
            samples: responses
                .iter()
                .enumerate()
                .map(|(i, r)| HeatmapSample {
                    features: vec![i as f64],
                    response: *r,
                    run: 0,
                    t: i as f64,
                    n_in_cutout: 1,
                })
                .collect(),
            feature_dim: 1,
            meta: None,
            skipped: 0,
        }
    }

    #[test]
    fn split_sizes_and_coverage() {
        let (tr, te) = split_indices(3050, &SplitSpec::default()).unwrap();
        assert_eq!((tr.len(), te.len()), (2440, 610));
        let mut all: Vec<usize> = tr.iter().chain(&te).copied().collect();
        all.sort_unstable();
        assert_eq!(all, (0..3050).collect::<Vec<_>>());
        let (a, b) = split_indices(2, &SplitSpec { train_fraction: 0.5, rng_seed: 3 }).unwrap();
        assert_eq!((a.len(), b.len()), (1, 1));
        assert_ne!(a, b);
        assert_eq!(split_indices(100, &SplitSpec::default()).unwrap(), split_indices(100, &SplitSpec::default()).unwrap());
        assert!(split_indices(1, &SplitSpec::default()).is_err());
        assert!(split_indices(10, &SplitSpec { train_fraction: 1.0, rng_seed: 0 }).is_err());
    }

    struct Oracle(Dataset<f64>);

    impl DistributionModel<f64> for Oracle {
        fn feature_dim(&self) -> usize {
            1
        }
        fn predict_distribution(&self, f: &[f64]) -> Result<[f64; 3]> {
            Ok(self.0.samples[f[0] as usize].response)
        }
    }

    struct Uniform;

    impl DistributionModel<f64> for Uniform {
        fn feature_dim(&self) -> usize {
            1
        }
        fn predict_distribution(&self, _: &[f64]) -> Result<[f64; 3]> {
            Ok([100.0 / 3.0; 3])
        }
    }

    #[test]
    fn perfect_model_scores_zero() {
        let ds = dataset(&[[10.0, 20.0, 70.0], [50.0, 50.0, 0.0], [0.0, 0.0, 100.0]]);
        let s = evaluate(&Oracle(ds.clone()), &ds).unwrap();
        assert_eq!((s.mean_relative_error, s.std_relative_error, s.n_test), (0.0, 0.0, 3));
        let one = dataset(&[[10.0, 20.0, 70.0]]);
        assert_eq!(evaluate(&Uniform, &one).unwrap().std_relative_error, 0.0);
    }

    #[test]
    fn uniform_model_matches_baseline() {
        let ds = dataset(&[[10.0, 20.0, 70.0], [50.0, 50.0, 0.0], [100.0, 0.0, 0.0]]);
        let s = evaluate(&Uniform, &ds).unwrap();
        assert!((s.mean_relative_error - baseline_uniform_error(&ds).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn baseline_values() {
        assert!(baseline_uniform_error(&dataset(&[[100.0 / 3.0; 3]; 4])).unwrap().abs() < 1e-12);
        let b = baseline_uniform_error(&dataset(&[[100.0, 0.0, 0.0]; 3])).unwrap();
        assert!((b - 57.74).abs() < 0.01, "{b}");
        let mixed = dataset(&[[100.0, 0.0, 0.0], [100.0 / 3.0; 3]]);
        assert!((baseline_uniform_error(&mixed).unwrap() - b / 2.0).abs() < 1e-9);
        assert!(baseline_uniform_error(&dataset(&[])).is_err());
    }

    #[test]
    fn mean_std_uses_sample_denominator() {
        let (m, s) = mean_std(&[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(m, 2.5);
        assert!((s - (5.0f64 / 3.0).sqrt()).abs() < 1e-12);
    }

    #[test]
    fn single_repetition_matches_manual_evaluation() {
        let responses: Vec<[f64; 3]> = (0..40)
            .map(|i| {
                let l = (i * 7 % 50) as f64;
                [l, 50.0, 50.0 - l]
            })
            .collect();
        let ds = dataset(&responses);
        let params = ForestParams { n_trees: 3, rng_seed: 5, ..Default::default() };
        let spec = SplitSpec { train_fraction: 0.75, rng_seed: 8 };
        let rep = repeated_evaluation(&ds, &params, &spec, 1).unwrap();
        let (train, test) = split_dataset(&ds, &SplitSpec { rng_seed: seed::derive(8, &[0]), ..spec }).unwrap();
        let model = fit_predictor(&train, &ForestParams { rng_seed: seed::derive(5, &[0]), ..params }).unwrap();
        let manual = evaluate(&model, &test).unwrap();
        assert_eq!(rep.repetitions[0].summary.per_sample_errors, manual.per_sample_errors);
        assert_eq!(rep.mean_error, manual.mean_relative_error);
        let again = repeated_evaluation(&ds, &params, &spec, 1).unwrap();
        assert_eq!(again.mean_error, rep.mean_error);
    }
}
