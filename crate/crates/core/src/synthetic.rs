//! Seeded synthetic datasets with planted outliers, used by the evaluation
//! harness and its tests. Ground-truth outliers are stored as the dataset's
//! labels.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::dataset::{Attribute, Dataset};
use crate::error::Result;

fn far_value(rng: &mut ChaCha8Rng) -> f64 {
    let mag = rng.random_range(4.0..8.0);
    if rng.random_bool(0.5) {
        mag
    } else {
        -mag
    }
}

/// Row roles: `true` marks a planted outlier. Outliers are scattered.
fn roles(n: usize, contamination: f64, rng: &mut ChaCha8Rng) -> Vec<bool> {
    let k = ((n as f64) * contamination).round() as usize;
    let mut roles: Vec<bool> = (0..n).map(|i| i < k).collect();
    roles.shuffle(rng);
    roles
}

/// Two numeric and two nominal attributes. Inliers: standard-normal numeric
/// values, common categories. Outliers: numeric values uniform on
/// `±[4, 8]`, first nominal drawn from two rare categories, second nominal
/// distributed like the inliers (an uninformative attribute).
pub fn planted_mixed(n: usize, contamination: f64, seed: u64) -> Result<Dataset> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let normal = Normal::new(0.0, 1.0).expect("valid normal");
    let roles = roles(n, contamination, &mut rng);
    let common = ["a", "b", "c"];
    let rare = ["r1", "r2"];
    let (mut x1, mut x2, mut c1, mut c2) = (Vec::new(), Vec::new(), Vec::new(), Vec::new());
    for &outlier in &roles {
        if outlier {
            x1.push(far_value(&mut rng));
            x2.push(far_value(&mut rng));
            c1.push(rare[rng.random_range(0..rare.len())]);
        } else {
            x1.push(normal.sample(&mut rng));
            x2.push(normal.sample(&mut rng));
            c1.push(common[rng.random_range(0..common.len())]);
        }
        c2.push(if rng.random_bool(0.6) { "p" } else { "q" });
    }
    let positives: Vec<usize> = (0..n).filter(|&i| roles[i]).collect();
    Dataset::new(
        vec![
            Attribute::numeric("x1", x1),
            Attribute::nominal("c1", &c1),
            Attribute::numeric("x2", x2),
            Attribute::nominal("c2", &c2),
        ],
        &positives,
    )
}

/// `m` numeric attributes, standard-normal inliers and far uniform outliers.
pub fn planted_numeric(n: usize, m: usize, contamination: f64, seed: u64) -> Result<Dataset> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let normal = Normal::new(0.0, 1.0).expect("valid normal");
    let roles = roles(n, contamination, &mut rng);
    let mut cols = vec![Vec::with_capacity(n); m];
    for &outlier in &roles {
        for col in cols.iter_mut() {
            col.push(if outlier {
                far_value(&mut rng)
            } else {
                normal.sample(&mut rng)
            });
        }
    }
    let positives: Vec<usize> = (0..n).filter(|&i| roles[i]).collect();
    let attrs = cols
        .into_iter()
        .enumerate()
        .map(|(k, v)| Attribute::numeric(format!("x{}", k + 1), v))
        .collect();
    Dataset::new(attrs, &positives)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sizes_and_contamination() {
        let ds = planted_mixed(500, 0.05, 1).unwrap();
        assert_eq!(ds.n(), 500);
        assert_eq!(ds.positives().len(), 25);
        assert_eq!(ds.attributes().len(), 4);
        assert_eq!(planted_mixed(500, 0.05, 1).unwrap(), ds);
        let num = planted_numeric(100, 3, 0.1, 2).unwrap();
        assert_eq!(num.positives().len(), 10);
    }
}
