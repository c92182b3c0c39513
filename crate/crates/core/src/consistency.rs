//! Fuzzy dependency and classification consistency of the two-class decision.
//!
//! Both are evaluated on the restricted universe `U' = U+ ∪ U-`, the only
//! objects carrying a (pseudo-)label.

use crate::dataset::Dataset;
use crate::error::{CodError, Result};
use crate::fuzzy::{
    cardinality, conjunction, lower_approximation_crisp, FuzzyRelationMatrix, FuzzySet,
};
use crate::relation::{AttributeRelation, DecisionContext};

#[derive(Debug, Clone, PartialEq)]
pub struct DecisionSystem {
    universe: Vec<usize>,
    relations: Vec<FuzzyRelationMatrix>,
    positive: Vec<usize>,
    negative: Vec<usize>,
}

impl DecisionSystem {
    /// Builds a system from relations already restricted to `U'`. Class
    /// indices are local to `U'` and must partition `0..n'`.
    pub fn from_parts(
        relations: Vec<FuzzyRelationMatrix>,
        positive: Vec<usize>,
        negative: Vec<usize>,
    ) -> Result<Self> {
        let n = relations
            .first()
            .map(FuzzyRelationMatrix::n)
            .ok_or(CodError::NoAttributes)?;
        for r in &relations {
            if r.n() != n {
                return Err(CodError::DimensionMismatch {
                    expected: n,
                    found: r.n(),
                });
            }
        }
        if positive.is_empty() {
            return Err(CodError::EmptyClass("positive"));
        }
        if negative.is_empty() {
            return Err(CodError::EmptyClass("negative"));
        }
        let mut seen = vec![false; n];
        for &i in positive.iter().chain(&negative) {
            if i >= n {
                return Err(CodError::IndexOutOfRange { index: i, n });
            }
            if std::mem::replace(&mut seen[i], true) {
                return Err(CodError::ConfigInvalid(format!(
                    "object {i} appears in both classes"
                )));
            }
        }
        if seen.iter().any(|s| !s) {
            return Err(CodError::ConfigInvalid(
                "classes do not cover the universe".into(),
            ));
        }
        Ok(Self {
            universe: (0..n).collect(),
            relations,
            positive,
            negative,
        })
    }

    /// Original row index of every member of `U'`, ascending.
    pub fn universe(&self) -> &[usize] {
        &self.universe
    }

    pub fn relations(&self) -> &[FuzzyRelationMatrix] {
        &self.relations
    }

    pub fn positive_class(&self) -> &[usize] {
        &self.positive
    }

    pub fn negative_class(&self) -> &[usize] {
        &self.negative
    }

    fn subset_relation(&self, subset: &[usize]) -> Result<FuzzyRelationMatrix> {
        let m = self.relations.len();
        let rels = subset
            .iter()
            .map(|&k| {
                self.relations
                    .get(k)
                    .ok_or(CodError::IndexOutOfRange { index: k, n: m })
            })
            .collect::<Result<Vec<_>>>()?;
        conjunction(&rels)
    }

    /// Lower approximations of the negative and positive classes under the
    /// conjunction of `subset`'s relations.
    pub fn lower_approximations(&self, subset: &[usize]) -> Result<(FuzzySet, FuzzySet)> {
        let rel = self.subset_relation(subset)?;
        Ok((
            lower_approximation_crisp(&rel, &self.negative)?,
            lower_approximation_crisp(&rel, &self.positive)?,
        ))
    }
}

/// Restricts every attribute's relation to `U+ ∪ U-`. `radii[k]` must be set
/// exactly for numeric attributes.
pub fn build_decision_system(
    dataset: &Dataset,
    ctx: &DecisionContext,
    radii: &[Option<f64>],
) -> Result<DecisionSystem> {
    if ctx.positives().is_empty() {
        return Err(CodError::EmptyClass("positive"));
    }
    if ctx.negatives().is_empty() {
        return Err(CodError::EmptyClass("negative"));
    }
    let attrs = dataset.attributes();
    if radii.len() != attrs.len() {
        return Err(CodError::LengthMismatch {
            left: attrs.len(),
            right: radii.len(),
        });
    }
    let universe = ctx.members();
    if let Some(&bad) = universe.iter().find(|&&i| i >= dataset.n()) {
        return Err(CodError::IndexOutOfRange {
            index: bad,
            n: dataset.n(),
        });
    }
    let relations = attrs
        .iter()
        .zip(radii)
        .map(|(a, r)| Ok(AttributeRelation::new(&a.column, *r)?.restrict(&universe)))
        .collect::<Result<Vec<_>>>()?;
    let local = |idx: &[usize]| -> Vec<usize> {
        idx.iter()
            .map(|i| universe.binary_search(i).expect("context member"))
            .collect()
    };
    let positive = local(ctx.positives());
    let negative = local(ctx.negatives());
    Ok(DecisionSystem {
        universe,
        relations,
        positive,
        negative,
    })
}

/// Fraction of `U'` in the positive region of the decision.
pub fn fuzzy_dependency(ds: &DecisionSystem, subset: &[usize]) -> Result<f64> {
    let (neg, pos) = ds.lower_approximations(subset)?;
    Ok(cardinality(&neg.union(&pos)?) / ds.universe.len() as f64)
}

/// Class-balanced consistency: `|lower(neg)|/|U-| + |lower(pos)|/|U+|`.
pub fn classification_consistency(ds: &DecisionSystem, subset: &[usize]) -> Result<f64> {
    let (neg, pos) = ds.lower_approximations(subset)?;
    Ok(cardinality(&neg) / ds.negative.len() as f64 + cardinality(&pos) / ds.positive.len() as f64)
}
