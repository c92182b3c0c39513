//! Label-informed per-attribute fuzzy similarity relations.
//!
//! For a nominal attribute two objects are similar (1) iff their categories
//! match. For a normalized numeric attribute the similarity is `1 - d` when
//! the distance `d = |f_i - f_j|` is within the attribute's fuzzy radius and
//! 0 beyond it. The radius is picked per attribute from a handful of labeled
//! outliers and a set of candidate inliers, see [`optimize_fuzzy_radius`].

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use crate::dataset::{Column, Dataset, NumericColumn};
use crate::error::{CodError, Result};
use crate::fuzzy::{FuzzyRelationMatrix, SimilarityRelation};

/// Two objective values closer than this count as a tie when picking the
/// smallest maximizing radius.
pub const OBJECTIVE_TIE_TOLERANCE: f64 = 1e-12;

/// A chosen radius and the objective value it achieves.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FuzzyRadius {
    pub value: f64,
    pub objective: f64,
}

/// Labeled outliers (`U+`) and candidate inliers (`U-`).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DecisionContext {
    positives: Vec<usize>,
    negatives: Vec<usize>,
    requested_negatives: usize,
}

impl DecisionContext {
    /// Both index lists are sorted; they must be disjoint.
    pub fn new(
        mut positives: Vec<usize>,
        mut negatives: Vec<usize>,
        requested_negatives: usize,
    ) -> Result<Self> {
        positives.sort_unstable();
        positives.dedup();
        negatives.sort_unstable();
        negatives.dedup();
        if positives.iter().any(|p| negatives.binary_search(p).is_ok()) {
            return Err(CodError::ConfigInvalid(
                "an object cannot be both a labeled outlier and a candidate inlier".into(),
            ));
        }
        Ok(Self {
            positives,
            negatives,
            requested_negatives,
        })
    }

    pub fn positives(&self) -> &[usize] {
        &self.positives
    }

    pub fn negatives(&self) -> &[usize] {
        &self.negatives
    }

    pub fn requested_negatives(&self) -> usize {
        self.requested_negatives
    }

    /// `U+ ∪ U-`, ascending.
    pub fn members(&self) -> Vec<usize> {
        let mut all: Vec<usize> = self
            .positives
            .iter()
            .chain(&self.negatives)
            .copied()
            .collect();
        all.sort_unstable();
        all
    }

    fn check_bounds(&self, n: usize) -> Result<()> {
        match self
            .positives
            .iter()
            .chain(&self.negatives)
            .find(|&&i| i >= n)
        {
            Some(&index) => Err(CodError::IndexOutOfRange { index, n }),
            None => Ok(()),
        }
    }
}

/// Sum of `|x - v|` over all `x` in `sorted`, using its prefix sums.
fn abs_deviation_sum(sorted: &[f64], prefix: &[f64], v: f64) -> f64 {
    let n = sorted.len();
    let k = sorted.partition_point(|&x| x <= v);
    let below = v * k as f64 - prefix[k];
    let above = (prefix[n] - prefix[k]) - v * (n - k) as f64;
    (below + above).max(0.0)
}

fn sorted_with_prefix(values: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let mut sorted = values.to_vec();
    sorted.sort_unstable_by(f64::total_cmp);
    let mut prefix = Vec::with_capacity(sorted.len() + 1);
    prefix.push(0.0);
    let mut acc = 0.0;
    for v in &sorted {
        acc += v;
        prefix.push(acc);
    }
    (sorted, prefix)
}

fn category_counts(codes: &[u32]) -> Vec<usize> {
    let k = codes.iter().max().map_or(0, |&c| c as usize + 1);
    let mut counts = vec![0usize; k];
    for &c in codes {
        counts[c as usize] += 1;
    }
    counts
}

/// Average distance of every object to the universe, averaged again over
/// attributes. Runs in `O(m n log n)`.
pub fn average_distances(dataset: &Dataset) -> Vec<f64> {
    let n = dataset.n();
    let nf = n as f64;
    let mut total = vec![0.0; n];
    for attr in dataset.attributes() {
        match &attr.column {
            Column::Numeric(c) => {
                let (sorted, prefix) = sorted_with_prefix(c.normalized());
                for (t, &v) in total.iter_mut().zip(c.normalized()) {
                    *t += abs_deviation_sum(&sorted, &prefix, v) / nf;
                }
            }
            Column::Nominal(c) => {
                let counts = category_counts(c.codes());
                for (t, &code) in total.iter_mut().zip(c.codes()) {
                    *t += (n - counts[code as usize]) as f64 / nf;
                }
            }
        }
    }
    let m = dataset.attributes().len().max(1) as f64;
    total.iter_mut().for_each(|t| *t /= m);
    total
}

/// Picks the `n_neg` unlabeled objects closest on average to the rest of the
/// universe as candidate inliers. Ties go to the earlier row.
pub fn select_candidate_negatives(
    dataset: &Dataset,
    n_neg: usize,
    positives: &[usize],
) -> Result<DecisionContext> {
    if n_neg == 0 {
        return Err(CodError::ConfigInvalid(
            "number of candidate negatives must be >= 1".into(),
        ));
    }
    let n = dataset.n();
    let mut labeled = vec![false; n];
    for &p in positives {
        if p >= n {
            return Err(CodError::IndexOutOfRange { index: p, n });
        }
        labeled[p] = true;
    }
    let avg = average_distances(dataset);
    let mut candidates: Vec<usize> = (0..n).filter(|&i| !labeled[i]).collect();
    if candidates.is_empty() {
        return Err(CodError::NoUnlabeledObjects);
    }
    candidates.sort_by(|&a, &b| avg[a].total_cmp(&avg[b]).then(a.cmp(&b)));
    candidates.truncate(n_neg);
    DecisionContext::new(positives.to_vec(), candidates, n_neg)
}

/// A per-attribute relation over the full universe that never materializes
/// the `n x n` matrix. Row sums come from category counts (nominal) or from
/// a sorted window with prefix sums (numeric), so each costs `O(log n)`.
#[derive(Debug, Clone)]
pub enum AttributeRelation<'a> {
    Nominal {
        codes: &'a [u32],
        counts: Vec<usize>,
    },
    Numeric {
        values: &'a [f64],
        radius: f64,
        sorted: Vec<f64>,
        prefix: Vec<f64>,
    },
}

impl<'a> AttributeRelation<'a> {
    pub fn new(column: &'a Column, radius: Option<f64>) -> Result<Self> {
        match (column, radius) {
            (Column::Nominal(c), None) => Ok(Self::Nominal {
                codes: c.codes(),
                counts: category_counts(c.codes()),
            }),
            (Column::Nominal(_), Some(_)) => Err(CodError::UnexpectedRadius),
            (Column::Numeric(_), None) => Err(CodError::MissingRadius),
            (Column::Numeric(c), Some(r)) => {
                if !(0.0..=1.0).contains(&r) {
                    return Err(CodError::RadiusOutOfRange(r));
                }
                let (sorted, prefix) = sorted_with_prefix(c.normalized());
                Ok(Self::Numeric {
                    values: c.normalized(),
                    radius: r,
                    sorted,
                    prefix,
                })
            }
        }
    }

    #[inline]
    pub fn similarity(&self, i: usize, j: usize) -> f64 {
        match self {
            Self::Nominal { codes, .. } => {
                if codes[i] == codes[j] {
                    1.0
                } else {
                    0.0
                }
            }
            Self::Numeric { values, radius, .. } => {
                let d = (values[i] - values[j]).abs();
                if d <= *radius {
                    1.0 - d
                } else {
                    0.0
                }
            }
        }
    }

    /// Dense matrix over the full universe.
    pub fn materialize(&self) -> FuzzyRelationMatrix {
        FuzzyRelationMatrix::from_fn(self.dim(), |i, j| self.similarity(i, j))
    }

    /// Dense matrix restricted to `rows` (in the given order).
    pub fn restrict(&self, rows: &[usize]) -> FuzzyRelationMatrix {
        FuzzyRelationMatrix::from_fn(rows.len(), |a, b| self.similarity(rows[a], rows[b]))
    }
}

impl SimilarityRelation for AttributeRelation<'_> {
    fn dim(&self) -> usize {
        match self {
            Self::Nominal { codes, .. } => codes.len(),
            Self::Numeric { values, .. } => values.len(),
        }
    }

    fn row_sum(&self, i: usize) -> f64 {
        match self {
            Self::Nominal { codes, counts } => counts[codes[i] as usize] as f64,
            Self::Numeric {
                values,
                radius,
                sorted,
                prefix,
            } => {
                let v = values[i];
                let r = *radius;
                // window of x with |v - x| <= r, split at v
                let lo = sorted.partition_point(|&x| v - x > r);
                let mid = sorted.partition_point(|&x| x <= v);
                let hi = sorted.partition_point(|&x| x - v <= r);
                let left = (mid - lo) as f64;
                let right = (hi - mid) as f64;
                let left_sum = prefix[mid] - prefix[lo];
                let right_sum = prefix[hi] - prefix[mid];
                left * (1.0 - v) + left_sum + right * (1.0 + v) - right_sum
            }
        }
    }
}

/// Dense relation of one attribute over the whole universe.
pub fn attribute_relation(column: &Column, radius: Option<f64>) -> Result<FuzzyRelationMatrix> {
    Ok(AttributeRelation::new(column, radius)?.materialize())
}

fn objective_weights(ctx: &DecisionContext, n: usize) -> Result<(f64, f64)> {
    if ctx.positives.is_empty() || ctx.negatives.is_empty() {
        return Err(CodError::EmptyContext);
    }
    ctx.check_bounds(n)?;
    let nf = n as f64;
    Ok((
        1.0 / (ctx.negatives.len() as f64 * nf),
        -1.0 / (ctx.positives.len() as f64 * nf),
    ))
}

/// The radius objective evaluated directly at one `radius`: mean class
/// cardinality of candidate inliers minus that of labeled outliers, both
/// divided by `n`.
pub fn radius_objective(values: &[f64], ctx: &DecisionContext, radius: f64) -> Result<f64> {
    let n = values.len();
    let (w_neg, w_pos) = objective_weights(ctx, n)?;
    let card = |i: usize| -> f64 {
        values
            .iter()
            .map(|&x| {
                let d = (values[i] - x).abs();
                if d <= radius {
                    1.0 - d
                } else {
                    0.0
                }
            })
            .sum()
    };
    let neg: f64 = ctx.negatives.iter().map(|&i| card(i)).sum();
    let pos: f64 = ctx.positives.iter().map(|&i| card(i)).sum();
    Ok(w_neg * neg + w_pos * pos)
}

/// The objective at every candidate radius, ascending. The objective is a
/// step function whose only jumps are the distances between a context
/// object and any object, so `{0} ∪ those distances ∪ {1}` covers every
/// distinct value.
pub fn radius_objective_profile(values: &[f64], ctx: &DecisionContext) -> Result<Vec<(f64, f64)>> {
    let n = values.len();
    let (w_neg, w_pos) = objective_weights(ctx, n)?;
    let mut pairs: Vec<(f64, f64)> =
        Vec::with_capacity((ctx.positives.len() + ctx.negatives.len()) * n);
    for (rows, w) in [(&ctx.negatives, w_neg), (&ctx.positives, w_pos)] {
        for &i in rows.iter() {
            let vi = values[i];
            pairs.extend(values.iter().map(|&x| {
                let d = (vi - x).abs();
                (d, w * (1.0 - d))
            }));
        }
    }
    // Sorting on (distance, contribution) makes the accumulation order
    // depend only on the multiset of pairs, not on row order.
    pairs.sort_unstable_by(|a, b| match a.0.total_cmp(&b.0) {
        Ordering::Equal => a.1.total_cmp(&b.1),
        o => o,
    });

    let mut profile = Vec::new();
    let mut acc = 0.0;
    let mut k = 0;
    let push = |profile: &mut Vec<(f64, f64)>, cut: f64, acc: &mut f64, k: &mut usize| {
        while *k < pairs.len() && pairs[*k].0 <= cut {
            *acc += pairs[*k].1;
            *k += 1;
        }
        profile.push((cut, *acc));
    };
    push(&mut profile, 0.0, &mut acc, &mut k);
    while k < pairs.len() {
        let cut = pairs[k].0;
        push(&mut profile, cut, &mut acc, &mut k);
    }
    if profile.last().is_none_or(|&(c, _)| c < 1.0) {
        push(&mut profile, 1.0, &mut acc, &mut k);
    }
    Ok(profile)
}

/// Smallest radius maximizing [`radius_objective`], searched exactly over
/// the breakpoints of the step function.
pub fn optimize_fuzzy_radius(column: &NumericColumn, ctx: &DecisionContext) -> Result<FuzzyRadius> {
    let profile = radius_objective_profile(column.normalized(), ctx)?;
    let best = profile
        .iter()
        .map(|p| p.1)
        .fold(f64::NEG_INFINITY, f64::max);
    let &(value, objective) = profile
        .iter()
        .find(|p| p.1 >= best - OBJECTIVE_TIE_TOLERANCE)
        .expect("profile is never empty");
    Ok(FuzzyRadius {
        value: value.min(1.0),
        objective,
    })
}
