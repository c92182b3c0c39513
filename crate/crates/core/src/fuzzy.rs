//! Fuzzy sets, fuzzy similarity relations and their lower approximations.
//!
//! The approximation operator is fixed to the min / `max(1 - r, x)` pair:
//!
//! ```text
//! lower(R, X)(x_i) = min_j max(1 - R(x_i, x_j), X(x_j))
//! ```
//!
//! Relations come in two physical forms behind [`SimilarityRelation`]: a dense
//! [`FuzzyRelationMatrix`], and streamed relations (see
//! [`crate::relation::AttributeRelation`]) that only ever produce row sums.

use std::fmt::Write as _;

use crate::error::{CodError, Result};

/// Tolerance used by invariant checks.
pub const INVARIANT_TOLERANCE: f64 = 1e-9;

/// A membership vector over the universe.
#[derive(Debug, Clone, PartialEq)]
pub struct FuzzySet(Vec<f64>);

impl FuzzySet {
    pub fn new(memberships: Vec<f64>) -> Result<Self> {
        if let Some(&bad) = memberships.iter().find(|m| !(0.0..=1.0).contains(*m)) {
            return Err(CodError::ConfigInvalid(format!(
                "membership {bad} outside [0, 1]"
            )));
        }
        Ok(Self(memberships))
    }

    /// Crisp indicator of `members` in a universe of size `n`.
    pub fn indicator(n: usize, members: &[usize]) -> Result<Self> {
        let mut m = vec![0.0; n];
        for &i in members {
            if i >= n {
                return Err(CodError::IndexOutOfRange { index: i, n });
            }
            m[i] = 1.0;
        }
        Ok(Self(m))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn memberships(&self) -> &[f64] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }

    /// Pointwise max.
    pub fn union(&self, other: &FuzzySet) -> Result<FuzzySet> {
        check_dim(self.len(), other.len())?;
        Ok(FuzzySet(
            self.0
                .iter()
                .zip(&other.0)
                .map(|(a, b)| a.max(*b))
                .collect(),
        ))
    }
}

/// Fuzzy cardinality: the sum of memberships.
pub fn cardinality(set: &FuzzySet) -> f64 {
    set.0.iter().sum()
}

fn check_dim(expected: usize, found: usize) -> Result<()> {
    if expected != found {
        return Err(CodError::DimensionMismatch { expected, found });
    }
    Ok(())
}

/// Anything that can report similarity-class cardinalities.
pub trait SimilarityRelation {
    fn dim(&self) -> usize;

    /// `|[x_i]|`, the cardinality of row `i`.
    fn row_sum(&self, i: usize) -> f64;
}

/// Dense `n x n` similarity matrix, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct FuzzyRelationMatrix {
    n: usize,
    entries: Vec<f64>,
}

impl FuzzyRelationMatrix {
    /// Builds a matrix from rows, checking reflexivity, symmetry and range.
    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self> {
        let n = rows.len();
        let mut entries = Vec::with_capacity(n * n);
        for row in rows {
            check_dim(n, row.len())?;
            entries.extend(row);
        }
        let m = Self { n, entries };
        m.check_invariants()?;
        Ok(m)
    }

    /// Fills entry `(i, j)` from `f(i, j)` for `i <= j` and mirrors it.
    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut entries = vec![0.0; n * n];
        for i in 0..n {
            entries[i * n + i] = 1.0;
            for j in (i + 1)..n {
                let v = f(i, j);
                entries[i * n + j] = v;
                entries[j * n + i] = v;
            }
        }
        Self { n, entries }
    }

    pub fn identity(n: usize) -> Self {
        Self::from_fn(n, |_, _| 0.0)
    }

    pub fn ones(n: usize) -> Self {
        Self::from_fn(n, |_, _| 1.0)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries[i * self.n + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.entries[i * self.n..(i + 1) * self.n]
    }

    pub fn check_invariants(&self) -> Result<()> {
        let n = self.n;
        for i in 0..n {
            if (self.get(i, i) - 1.0).abs() > INVARIANT_TOLERANCE {
                return Err(CodError::ConfigInvalid(format!(
                    "relation is not reflexive at ({i}, {i})"
                )));
            }
            for j in 0..n {
                let v = self.get(i, j);
                if !(-INVARIANT_TOLERANCE..=1.0 + INVARIANT_TOLERANCE).contains(&v) {
                    return Err(CodError::ConfigInvalid(format!(
                        "relation entry ({i}, {j}) = {v} outside [0, 1]"
                    )));
                }
                if (v - self.get(j, i)).abs() > INVARIANT_TOLERANCE {
                    return Err(CodError::ConfigInvalid(format!(
                        "relation is not symmetric at ({i}, {j})"
                    )));
                }
            }
        }
        Ok(())
    }

    /// `true` if every entry is `<=` the matching entry of `other` (+ tol).
    pub fn is_subrelation_of(&self, other: &FuzzyRelationMatrix) -> bool {
        self.n == other.n
            && self
                .entries
                .iter()
                .zip(&other.entries)
                .all(|(a, b)| *a <= *b + INVARIANT_TOLERANCE)
    }

    /// Row-major CSV with six decimals, no header.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        for i in 0..self.n {
            for (j, v) in self.row(i).iter().enumerate() {
                if j > 0 {
                    out.push(',');
                }
                let _ = write!(out, "{v:.6}");
            }
            out.push('\n');
        }
        out
    }
}

impl SimilarityRelation for FuzzyRelationMatrix {
    fn dim(&self) -> usize {
        self.n
    }

    fn row_sum(&self, i: usize) -> f64 {
        self.row(i).iter().sum()
    }
}

/// Fuzzy lower approximation of a fuzzy set.
pub fn lower_approximation(relation: &FuzzyRelationMatrix, set: &FuzzySet) -> Result<FuzzySet> {
    check_dim(relation.n, set.len())?;
    let x = set.memberships();
    let out = (0..relation.n)
        .map(|i| {
            relation
                .row(i)
                .iter()
                .zip(x)
                .map(|(r, xj)| (1.0 - r).max(*xj))
                .fold(f64::INFINITY, f64::min)
        })
        .collect();
    Ok(FuzzySet(out))
}

/// Lower approximation of a crisp set given by its member indices:
/// `min` over non-members `j` of `1 - R(x_i, x_j)`.
pub fn lower_approximation_crisp(
    relation: &FuzzyRelationMatrix,
    members: &[usize],
) -> Result<FuzzySet> {
    let n = relation.n;
    let mut inside = vec![false; n];
    for &i in members {
        if i >= n {
            return Err(CodError::IndexOutOfRange { index: i, n });
        }
        inside[i] = true;
    }
    let outside: Vec<usize> = (0..n).filter(|&j| !inside[j]).collect();
    if outside.is_empty() {
        return Err(CodError::EmptyComplement);
    }
    let out = (0..n)
        .map(|i| {
            let row = relation.row(i);
            outside
                .iter()
                .map(|&j| 1.0 - row[j])
                .fold(f64::INFINITY, f64::min)
        })
        .collect();
    Ok(FuzzySet(out))
}

/// Similarity class `[x_i]`: row `i` of the relation.
pub fn similarity_class(relation: &FuzzyRelationMatrix, i: usize) -> Result<FuzzySet> {
    if i >= relation.n {
        return Err(CodError::IndexOutOfRange {
            index: i,
            n: relation.n,
        });
    }
    Ok(FuzzySet(relation.row(i).to_vec()))
}

/// Entrywise minimum of several relations.
pub fn conjunction(relations: &[&FuzzyRelationMatrix]) -> Result<FuzzyRelationMatrix> {
    let (first, rest) = relations.split_first().ok_or(CodError::EmptyList)?;
    let mut out = (*first).clone();
    for r in rest {
        check_dim(out.n, r.n)?;
        for (a, b) in out.entries.iter_mut().zip(&r.entries) {
            *a = a.min(*b);
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn golden_a1() -> FuzzyRelationMatrix {
        FuzzyRelationMatrix::from_rows(vec![
            vec![1.0, 0.0, 0.9],
            vec![0.0, 1.0, 0.0],
            vec![0.9, 0.0, 1.0],
        ])
        .unwrap()
    }

    fn golden_a2() -> FuzzyRelationMatrix {
        FuzzyRelationMatrix::from_rows(vec![
            vec![1.0, 0.8, 0.0],
            vec![0.8, 1.0, 0.9],
            vec![0.0, 0.9, 1.0],
        ])
        .unwrap()
    }

    fn assert_close(a: &[f64], b: &[f64], tol: f64) {
        assert_eq!(a.len(), b.len());
        for (x, y) in a.iter().zip(b) {
            assert!((x - y).abs() <= tol, "{a:?} != {b:?}");
        }
    }

    #[test]
    fn lower_approximation_examples() {
        let x = FuzzySet::new(vec![0.2, 0.5, 0.8]).unwrap();
        let low = lower_approximation(&golden_a1(), &x).unwrap();
        assert_close(low.memberships(), &[0.2, 0.5, 0.2], 1e-12);

        let low = lower_approximation(&FuzzyRelationMatrix::identity(3), &x).unwrap();
        assert_close(low.memberships(), x.memberships(), 0.0);

        let low = lower_approximation(&FuzzyRelationMatrix::ones(3), &x).unwrap();
        assert_close(low.memberships(), &[0.2, 0.2, 0.2], 0.0);

        let short = FuzzySet::new(vec![0.1, 0.2]).unwrap();
        assert!(matches!(
            lower_approximation(&golden_a1(), &short),
            Err(CodError::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn crisp_lower_approximation() {
        let low = lower_approximation_crisp(&FuzzyRelationMatrix::identity(3), &[0]).unwrap();
        assert_eq!(low.memberships(), &[1.0, 0.0, 0.0]);
        assert!(matches!(
            lower_approximation_crisp(&FuzzyRelationMatrix::identity(3), &[0, 1, 2]),
            Err(CodError::EmptyComplement)
        ));
    }

    #[test]
    fn similarity_classes_and_cardinality() {
        let r = golden_a1();
        let c1 = similarity_class(&r, 0).unwrap();
        assert_eq!(c1.memberships(), &[1.0, 0.0, 0.9]);
        assert!((cardinality(&c1) - 1.9).abs() < 1e-12);
        assert!((cardinality(&similarity_class(&r, 1).unwrap()) - 1.0).abs() < 1e-12);
        assert!((cardinality(&similarity_class(&r, 2).unwrap()) - 1.9).abs() < 1e-12);
        assert!(matches!(
            similarity_class(&r, 3),
            Err(CodError::IndexOutOfRange { index: 3, n: 3 })
        ));
        assert_eq!(cardinality(&FuzzySet::new(vec![0.0; 5]).unwrap()), 0.0);
    }

    #[test]
    fn conjunction_examples() {
        let (a1, a2) = (golden_a1(), golden_a2());
        let both = conjunction(&[&a1, &a2]).unwrap();
        assert_eq!(both.get(0, 1), 0.0);
        assert_eq!(both.get(0, 2), 0.0);
        assert_eq!(both.get(1, 2), 0.0);
        for i in 0..3 {
            assert_eq!(both.get(i, i), 1.0);
        }
        assert_eq!(conjunction(&[&a1]).unwrap(), a1);
        assert_eq!(
            conjunction(&[&a1, &FuzzyRelationMatrix::ones(3)]).unwrap(),
            a1
        );
        assert!(matches!(conjunction(&[]), Err(CodError::EmptyList)));
        assert!(matches!(
            conjunction(&[&a1, &FuzzyRelationMatrix::ones(2)]),
            Err(CodError::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn invariants_are_checked() {
        assert!(FuzzyRelationMatrix::from_rows(vec![vec![1.0, 0.2], vec![0.3, 1.0]]).is_err());
        assert!(FuzzyRelationMatrix::from_rows(vec![vec![0.9, 0.2], vec![0.2, 1.0]]).is_err());
        assert!(FuzzyRelationMatrix::from_rows(vec![vec![1.0, 1.2], vec![1.2, 1.0]]).is_err());
        assert!(FuzzySet::new(vec![0.5, 1.5]).is_err());
    }

    #[test]
    fn csv_dump_has_six_decimals() {
        assert_eq!(
            golden_a1().to_csv(),
            "1.000000,0.000000,0.900000\n0.000000,1.000000,0.000000\n0.900000,0.000000,1.000000\n"
        );
    }

    fn relation(n: usize) -> impl Strategy<Value = FuzzyRelationMatrix> {
        prop::collection::vec(0.0f64..=1.0, n * n)
            .prop_map(move |v| FuzzyRelationMatrix::from_fn(n, |i, j| v[i * n + j]))
    }

    fn sized_relations(k: usize) -> impl Strategy<Value = Vec<FuzzyRelationMatrix>> {
        (2usize..=15).prop_flat_map(move |n| prop::collection::vec(relation(n), k))
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(200))]

        #[test]
        fn larger_attribute_sets_give_smaller_relations(rs in sized_relations(4), split in 1usize..4) {
            let all: Vec<&FuzzyRelationMatrix> = rs.iter().collect();
            let sub = conjunction(&all[..split]).unwrap();
            let sup = conjunction(&all).unwrap();
            prop_assert!(sup.is_subrelation_of(&sub));
            prop_assert!(sup.check_invariants().is_ok());
        }

        #[test]
        fn crisp_and_fuzzy_agree(rs in sized_relations(1), mask in prop::collection::vec(any::<bool>(), 15)) {
            let r = &rs[0];
            let members: Vec<usize> = (0..r.n()).filter(|&i| mask[i]).collect();
            prop_assume!(members.len() < r.n());
            let crisp = lower_approximation_crisp(r, &members).unwrap();
            let fuzzy = lower_approximation(r, &FuzzySet::indicator(r.n(), &members).unwrap()).unwrap();
            for (a, b) in crisp.memberships().iter().zip(fuzzy.memberships()) {
                prop_assert!((a - b).abs() <= 1e-12);
            }
            // certainly-belonging degrees never exceed crisp membership
            for (i, v) in crisp.memberships().iter().enumerate() {
                let ind = if members.contains(&i) { 1.0 } else { 0.0 };
                prop_assert!(*v <= ind + 1e-12);
            }
        }

        #[test]
        fn bigger_relation_shrinks_lower_approximation(
            rs in sized_relations(2),
            x in prop::collection::vec(0.0f64..=1.0, 15),
        ) {
            let small = conjunction(&[&rs[0], &rs[1]]).unwrap();
            let big = &rs[0];
            let set = FuzzySet::new(x[..big.n()].to_vec()).unwrap();
            let lo_small = lower_approximation(&small, &set).unwrap();
            let lo_big = lower_approximation(big, &set).unwrap();
            for (b, s) in lo_big.memberships().iter().zip(lo_small.memberships()) {
                prop_assert!(*b <= *s + 1e-12);
            }
        }

        #[test]
        fn row_sum_matches_class_cardinality(rs in sized_relations(1)) {
            let r = &rs[0];
            for i in 0..r.n() {
                let mut acc = 0.0;
                for j in 0..r.n() {
                    acc += r.get(i, j);
                }
                let card = cardinality(&similarity_class(r, i).unwrap());
                prop_assert!((card - acc).abs() <= 1e-12);
                prop_assert!((card - r.row_sum(i)).abs() <= 1e-12);
                prop_assert!(card >= 1.0 - 1e-12 && card <= r.n() as f64 + 1e-12);
            }
        }
    }
}
