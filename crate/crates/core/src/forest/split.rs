use rand::Rng;

use crate::num::Scalar;

use super::ColumnMatrix;

/// Axis-aligned split: samples with `x[feature] <= threshold` go left.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Split<T> {
    pub feature: usize,
    pub threshold: T,
    /// `S_l²/n_l + S_r²/n_r`; maximizing it minimizes the children's summed squared error.
    pub score: T,
}

/// Running best split over features visited in ascending index order.
pub(crate) struct SplitSearch<'a, T> {
    pub best: Option<Split<T>>,
    total: T,
    n: usize,
    tol: T,
    /// `recip[k] = 1/k`
    recip: &'a [T],
}

pub(crate) fn reciprocals<T: Scalar>(n: usize) -> Vec<T> {
    (0..=n)
        .map(|k| if k == 0 { T::zero() } else { T::of_count(k).recip() })
        .collect()
}

impl<'a, T: Scalar> SplitSearch<'a, T> {
    pub fn new(total: T, sum_sq: T, n: usize, recip: &'a [T]) -> Self {
        Self {
            best: None,
            total,
            n,
            tol: T::epsilon() * T::lit(64.0) * (sum_sq + T::one()),
            recip,
        }
    }

    /// Scans one feature given `(value, target)` pairs in ascending value
    /// order. Thresholds sit at midpoints between consecutive distinct
    /// values; a candidate replaces the incumbent only if it scores higher by
    /// more than the rounding tolerance, so ties keep the lower feature and
    /// then the lower threshold.
    pub fn scan<I>(&mut self, feature: usize, sorted: I)
    where
        I: IntoIterator<Item = (T, T)>,
    {
        let mut it = sorted.into_iter();
        let Some((first, first_target)) = it.next() else {
            return;
        };
        let (total, n, tol, recip) = (self.total, self.n, self.tol, self.recip);
        let mut bar = self.best.map_or(T::neg_infinity(), |b| b.score + tol);
        let mut found: Option<(T, T, T)> = None;
        let mut left_sum = first_target;
        let mut left_n = 1usize;
        let mut prev = first;
        for (value, target) in it {
            if value > prev {
                let right_sum = total - left_sum;
                let score = left_sum * left_sum * recip[left_n] + right_sum * right_sum * recip[n - left_n];
                if score > bar {
                    found = Some((prev, value, score));
                    bar = score + tol;
                }
            }
            left_sum = left_sum + target;
            left_n += 1;
            prev = value;
        }
        if let Some((lo, hi, score)) = found {
            let mut threshold = (lo + hi) / T::lit(2.0);
            if threshold >= hi {
                threshold = lo;
            }
            self.best = Some(Split { feature, threshold, score });
        }
    }
}

/// Features examined at a node: all of them, or `mtry` drawn without
/// replacement and visited in ascending order.
pub(crate) fn candidate_features<R: Rng + ?Sized>(rng: &mut R, n_features: usize, mtry: usize) -> Vec<usize> {
    if mtry >= n_features {
        return (0..n_features).collect();
    }
    let mut f = rand::seq::index::sample(rng, n_features, mtry).into_vec();
    f.sort_unstable();
    f
}

/// Best variance-reduction split of the samples at `indices` (repeats allowed).
///
/// Returns `None` when the targets are all equal or every examined feature
/// is constant over the node. Otherwise the split with the smallest summed
/// child squared error is returned even if it does not improve on the parent.
pub fn best_split<T: Scalar, R: Rng + ?Sized>(
    indices: &[usize],
    x: &ColumnMatrix<T>,
    y: &[T],
    mtry: usize,
    rng: &mut R,
) -> Option<Split<T>> {
    let first = y[*indices.first()?];
    if indices.iter().all(|&i| y[i] == first) {
        return None;
    }
    let total = indices.iter().fold(T::zero(), |a, &i| a + y[i]);
    let sum_sq = indices.iter().fold(T::zero(), |a, &i| a + y[i] * y[i]);
    let recip = reciprocals(indices.len());
    let mut search = SplitSearch::new(total, sum_sq, indices.len(), &recip);
    let mut pairs: Vec<(T, T)> = Vec::with_capacity(indices.len());
    for f in candidate_features(rng, x.n_cols(), mtry) {
        let col = x.column(f);
        pairs.clear();
        pairs.extend(indices.iter().map(|&i| (col[i], y[i])));
        pairs.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap_or(std::cmp::Ordering::Equal));
        search.scan(f, pairs.iter().copied());
    }
    search.best
}
