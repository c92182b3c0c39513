//! Shared fixtures and a literal, matrix-based reference implementation of
//! the detector used as an oracle by the integration tests.
#![allow(dead_code)]

use cod_core::dataset::{Attribute, Dataset};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone)]
pub enum Raw {
    Numeric(Vec<f64>),
    Nominal(Vec<u32>),
}

#[derive(Debug, Clone)]
pub struct Instance {
    pub raw: Vec<Raw>,
    pub positives: Vec<usize>,
    pub n_neg: usize,
}

impl Instance {
    pub fn n(&self) -> usize {
        match &self.raw[0] {
            Raw::Numeric(v) => v.len(),
            Raw::Nominal(v) => v.len(),
        }
    }

    pub fn dataset(&self) -> Dataset {
        let attrs = self
            .raw
            .iter()
            .enumerate()
            .map(|(k, r)| match r {
                Raw::Numeric(v) => Attribute::numeric(format!("a{k}"), v.clone()),
                Raw::Nominal(v) => {
                    let s: Vec<String> = v.iter().map(|c| format!("c{c}")).collect();
                    Attribute::nominal(format!("a{k}"), &s)
                }
            })
            .collect();
        Dataset::new(attrs, &self.positives).unwrap()
    }
}

/// Random mixed instance with `2..=max_n` rows and `1..=max_m` attributes,
/// at least one labeled outlier and one unlabeled object. Numeric values are
/// continuous, with occasional repeats of an earlier value.
pub fn random_instance(seed: u64, max_n: usize, max_m: usize) -> Instance {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = rng.random_range(2..=max_n);
    let m = rng.random_range(1..=max_m);
    let raw = (0..m)
        .map(|_| {
            if rng.random_bool(0.5) {
                let mut v: Vec<f64> = Vec::with_capacity(n);
                for i in 0..n {
                    if i > 0 && rng.random_bool(0.15) {
                        let j = rng.random_range(0..i);
                        v.push(v[j]);
                    } else {
                        v.push(rng.random_range(-50.0..50.0));
                    }
                }
                Raw::Numeric(v)
            } else {
                let k = rng.random_range(1..=4u32);
                Raw::Nominal((0..n).map(|_| rng.random_range(0..k)).collect())
            }
        })
        .collect();
    let n_pos = rng.random_range(1..n);
    let mut idx: Vec<usize> = (0..n).collect();
    for i in 0..n_pos {
        let j = rng.random_range(i..n);
        idx.swap(i, j);
    }
    let mut positives = idx[..n_pos].to_vec();
    positives.sort_unstable();
    let n_neg = rng.random_range(1..=n);
    Instance {
        raw,
        positives,
        n_neg,
    }
}

/// Random instance with continuous numeric attributes only.
pub fn random_numeric_instance(seed: u64, max_n: usize, max_m: usize) -> Instance {
    let mut inst = random_instance(seed, max_n, max_m);
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x9e37_79b9);
    let n = inst.n();
    for r in inst.raw.iter_mut() {
        *r = Raw::Numeric((0..n).map(|_| rng.random_range(-50.0..50.0)).collect());
    }
    inst
}

#[derive(Debug, Clone)]
pub struct NaiveReport {
    pub average_distances: Vec<f64>,
    pub negatives: Vec<usize>,
    pub radii: Vec<Option<f64>>,
    pub xi: Vec<f64>,
    pub outlier_factors: Vec<Vec<f64>>,
    pub scores: Vec<f64>,
    pub threshold: f64,
    pub flags: Vec<bool>,
}

fn normalized(v: &[f64]) -> Vec<f64> {
    let lo = v.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = v.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if hi == lo {
        vec![0.0; v.len()]
    } else {
        v.iter().map(|x| (x - lo) / (hi - lo)).collect()
    }
}

fn matrix(n: usize, f: impl Fn(usize, usize) -> f64) -> Vec<Vec<f64>> {
    (0..n).map(|i| (0..n).map(|j| f(i, j)).collect()).collect()
}

fn relation(raw: &Raw, radius: Option<f64>) -> Vec<Vec<f64>> {
    match raw {
        Raw::Nominal(c) => matrix(c.len(), |i, j| if c[i] == c[j] { 1.0 } else { 0.0 }),
        Raw::Numeric(v) => {
            let z = normalized(v);
            let r = radius.unwrap();
            matrix(v.len(), |i, j| {
                let d = (z[i] - z[j]).abs();
                if d <= r {
                    1.0 - d
                } else {
                    0.0
                }
            })
        }
    }
}

fn distance(raw: &Raw) -> Vec<Vec<f64>> {
    match raw {
        Raw::Nominal(c) => matrix(c.len(), |i, j| if c[i] == c[j] { 0.0 } else { 1.0 }),
        Raw::Numeric(v) => {
            let z = normalized(v);
            matrix(v.len(), |i, j| (z[i] - z[j]).abs())
        }
    }
}

fn lower(rel: &[Vec<f64>], members: &[usize], set: &[f64]) -> Vec<f64> {
    members
        .iter()
        .map(|&i| {
            members
                .iter()
                .zip(set)
                .map(|(&j, &x)| (1.0 - rel[i][j]).max(x))
                .fold(f64::INFINITY, f64::min)
        })
        .collect()
}

/// Everything computed from full `n x n` matrices, straight from the
/// definitions.
pub fn naive_detect(inst: &Instance) -> NaiveReport {
    naive_detect_with(inst, None)
}

/// As [`naive_detect`], optionally forcing the candidate inlier set.
pub fn naive_detect_with(inst: &Instance, negatives: Option<&[usize]>) -> NaiveReport {
    let n = inst.n();
    let m = inst.raw.len();
    let pos = &inst.positives;

    let dists: Vec<Vec<Vec<f64>>> = inst.raw.iter().map(distance).collect();
    let avg: Vec<f64> = (0..n)
        .map(|i| {
            dists
                .iter()
                .map(|d| d[i].iter().sum::<f64>() / n as f64)
                .sum::<f64>()
                / m as f64
        })
        .collect();
    let mut unl: Vec<usize> = (0..n).filter(|i| !pos.contains(i)).collect();
    unl.sort_by(|&a, &b| avg[a].partial_cmp(&avg[b]).unwrap().then(a.cmp(&b)));
    unl.truncate(inst.n_neg);
    let mut neg = negatives.map_or(unl, |v| v.to_vec());
    neg.sort_unstable();

    let radii: Vec<Option<f64>> = inst
        .raw
        .iter()
        .zip(&dists)
        .map(|(raw, d)| match raw {
            Raw::Nominal(_) => None,
            Raw::Numeric(_) => {
                let card = |i: usize, l: f64| -> f64 {
                    d[i].iter()
                        .map(|&x| if x <= l { 1.0 - x } else { 0.0 })
                        .sum()
                };
                let mut cands = vec![0.0, 1.0];
                for &i in pos.iter().chain(&neg) {
                    cands.extend_from_slice(&d[i]);
                }
                cands.sort_by(f64::total_cmp);
                cands.dedup();
                let j: Vec<f64> = cands
                    .iter()
                    .map(|&l| {
                        neg.iter().map(|&i| card(i, l)).sum::<f64>() / (neg.len() * n) as f64
                            - pos.iter().map(|&i| card(i, l)).sum::<f64>() / (pos.len() * n) as f64
                    })
                    .collect();
                let best = j.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                let k = j.iter().position(|&v| v >= best - 1e-12).unwrap();
                Some(cands[k])
            }
        })
        .collect();

    let rels: Vec<Vec<Vec<f64>>> = inst
        .raw
        .iter()
        .zip(&radii)
        .map(|(r, l)| relation(r, *l))
        .collect();

    let mut members: Vec<usize> = pos.iter().chain(&neg).copied().collect();
    members.sort_unstable();
    let neg_set: Vec<f64> = members
        .iter()
        .map(|i| if neg.contains(i) { 1.0 } else { 0.0 })
        .collect();
    let pos_set: Vec<f64> = members
        .iter()
        .map(|i| if pos.contains(i) { 1.0 } else { 0.0 })
        .collect();
    let xi: Vec<f64> = rels
        .iter()
        .map(|rel| {
            lower(rel, &members, &neg_set).iter().sum::<f64>() / neg.len() as f64
                + lower(rel, &members, &pos_set).iter().sum::<f64>() / pos.len() as f64
        })
        .collect();

    let outlier_factors: Vec<Vec<f64>> = rels
        .iter()
        .map(|rel| {
            (0..n)
                .map(|i| 1.0 - rel[i].iter().sum::<f64>() / n as f64)
                .collect()
        })
        .collect();
    let scores: Vec<f64> = (0..n)
        .map(|i| (0..m).map(|k| outlier_factors[k][i] * xi[k]).sum::<f64>() / m as f64)
        .collect();
    let threshold = pos.iter().map(|&i| scores[i]).fold(f64::INFINITY, f64::min);
    let flags = (0..n)
        .map(|i| scores[i] > threshold || pos.contains(&i))
        .collect();
    NaiveReport {
        average_distances: avg,
        negatives: neg,
        radii,
        xi,
        outlier_factors,
        scores,
        threshold,
        flags,
    }
}

/// Compares `detect` against the oracle; `Err` describes the first mismatch.
pub fn check_against_oracle(inst: &Instance, tol: f64) -> Result<(), String> {
    use cod_core::detector::{detect, CodConfig};
    let ds = inst.dataset();
    let config = CodConfig {
        n_neg: inst.n_neg,
        ..CodConfig::default()
    };
    let got = detect(&ds, &config).map_err(|e| e.to_string())?;
    let mut want = naive_detect(inst);
    if got.candidate_negatives != want.negatives {
        // Accept another selection only if it is equally valid up to
        // rounding: same size, and nothing left out is clearly closer.
        let avg = &want.average_distances;
        let chosen = &got.candidate_negatives;
        let worst_in = chosen
            .iter()
            .map(|&i| avg[i])
            .fold(f64::NEG_INFINITY, f64::max);
        let best_out = (0..inst.n())
            .filter(|i| !chosen.contains(i) && !inst.positives.contains(i))
            .map(|i| avg[i])
            .fold(f64::INFINITY, f64::min);
        if chosen.len() != want.negatives.len() || worst_in > best_out + 1e-9 {
            return Err(format!("negatives {:?} vs {:?}", chosen, want.negatives));
        }
        want = naive_detect_with(inst, Some(chosen));
    }
    for (k, (a, w)) in got.attributes.iter().zip(&want.radii).enumerate() {
        match (a.radius, w) {
            (None, None) => {}
            (Some(x), Some(y)) if (x - y).abs() <= tol => {}
            _ => return Err(format!("radius of attribute {k}: {:?} vs {w:?}", a.radius)),
        }
        if (a.consistency - want.xi[k]).abs() > tol {
            return Err(format!(
                "xi of attribute {k}: {} vs {}",
                a.consistency, want.xi[k]
            ));
        }
        for (i, (x, y)) in got.outlier_factors[k]
            .iter()
            .zip(&want.outlier_factors[k])
            .enumerate()
        {
            if (x - y).abs() > tol {
                return Err(format!("OF[{k}][{i}]: {x} vs {y}"));
            }
        }
    }
    for (i, (x, y)) in got.scores.iter().zip(&want.scores).enumerate() {
        if (x - y).abs() > tol {
            return Err(format!("score[{i}]: {x} vs {y}"));
        }
    }
    if (got.threshold - want.threshold).abs() > tol {
        return Err(format!("threshold {} vs {}", got.threshold, want.threshold));
    }
    for i in 0..inst.n() {
        if (got.scores[i] - got.threshold).abs() > tol && got.flags[i] != want.flags[i] {
            return Err(format!("flag[{i}]"));
        }
    }
    Ok(())
}
