//! Energy samples, the two-sample KS statistic and the pair loss.

use serde::{Deserialize, Serialize};

use crate::error::{QgnnError, Result};

/// Pairs with KS above this are called non-isomorphic.
pub const KS_THRESHOLD: f64 = 0.4;

/// Measured `bᵀLb` energies, one per shot.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct EnergySampleSet {
    pub energies: Vec<f64>,
}

impl EnergySampleSet {
    pub fn new(energies: Vec<f64>) -> Self {
        Self { energies }
    }

    pub fn len(&self) -> usize {
        self.energies.len()
    }

    pub fn is_empty(&self) -> bool {
        self.energies.is_empty()
    }

    fn sorted(&self) -> Vec<f64> {
        let mut e = self.energies.clone();
        e.sort_by(f64::total_cmp);
        e
    }
}

/// Two-sample Kolmogorov-Smirnov statistic `sup_x |F_a(x) − F_b(x)|`.
pub fn ks_statistic(a: &EnergySampleSet, b: &EnergySampleSet) -> Result<f64> {
    if a.is_empty() || b.is_empty() {
        return Err(QgnnError::EmptySamples);
    }
    let (sa, sb) = (a.sorted(), b.sorted());
    let (na, nb) = (sa.len() as f64, sb.len() as f64);
    let (mut i, mut j, mut d) = (0, 0, 0.0f64);
    while i < sa.len() && j < sb.len() {
        // advance past every copy of the smaller value before comparing CDFs
        let x = sa[i].min(sb[j]);
        while i < sa.len() && sa[i] <= x {
            i += 1;
        }
        while j < sb.len() && sb[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    Ok(d)
}

/// KS distance between two discrete distributions given as
/// `(value, probability)` lists; the infinite-sample limit of [`ks_statistic`].
pub fn ks_distributions(a: &[(f64, f64)], b: &[(f64, f64)]) -> f64 {
    let mut points: Vec<(f64, f64)> = a
        .iter()
        .map(|&(x, p)| (x, p))
        .chain(b.iter().map(|&(x, p)| (x, -p)))
        .collect();
    points.sort_by(|l, r| l.0.total_cmp(&r.0));
    let (mut gap, mut d) = (0.0f64, 0.0f64);
    let mut k = 0;
    while k < points.len() {
        let x = points[k].0;
        while k < points.len() && points[k].0 == x {
            gap += points[k].1;
            k += 1;
        }
        d = d.max(gap.abs());
    }
    d
}

/// `L(y, ks) = (1 − y)(1 − ks) + y·ks`.
pub fn iso_pair_loss(y: u8, ks: f64) -> Result<f64> {
    if y > 1 {
        return Err(QgnnError::InvalidArgument(format!("label must be 0 or 1, got {y}")));
    }
    if !(0.0..=1.0).contains(&ks) {
        return Err(QgnnError::InvalidArgument(format!("KS statistic {ks} outside [0, 1]")));
    }
    let y = f64::from(y);
    Ok((1.0 - y) * (1.0 - ks) + y * ks)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn set(v: &[f64]) -> EnergySampleSet {
        EnergySampleSet::new(v.to_vec())
    }

    /// Brute force: evaluate both CDFs at every sample point.
    fn ks_brute(a: &[f64], b: &[f64]) -> f64 {
        let cdf = |s: &[f64], x: f64| s.iter().filter(|&&v| v <= x).count() as f64 / s.len() as f64;
        a.iter()
            .chain(b)
            .map(|&x| (cdf(a, x) - cdf(b, x)).abs())
            .fold(0.0, f64::max)
    }

    #[test]
    fn ks_examples() {
        assert_eq!(ks_statistic(&set(&[1.0, 2.0, 2.0]), &set(&[2.0, 1.0, 2.0])).unwrap(), 0.0);
        assert_eq!(ks_statistic(&set(&[0.0, 0.0]), &set(&[5.0, 5.0])).unwrap(), 1.0);
        assert_abs_diff_eq!(
            ks_statistic(&set(&[1.0, 2.0, 3.0, 4.0]), &set(&[3.0, 4.0, 5.0, 6.0])).unwrap(),
            0.5,
            epsilon = 1e-15
        );
        assert!(matches!(ks_statistic(&set(&[]), &set(&[1.0])), Err(QgnnError::EmptySamples)));
    }

    #[test]
    fn distribution_ks_matches_samples() {
        let a = [(0.0, 0.5), (1.0, 0.25), (2.0, 0.25)];
        let b = [(1.0, 0.5), (2.0, 0.5)];
        assert_abs_diff_eq!(ks_distributions(&a, &b), 0.5, epsilon = 1e-15);
        assert_eq!(ks_distributions(&a, &a), 0.0);
    }

    #[test]
    fn pair_loss_examples() {
        assert_eq!(iso_pair_loss(1, 0.0).unwrap(), 0.0);
        assert_eq!(iso_pair_loss(0, 1.0).unwrap(), 0.0);
        assert_abs_diff_eq!(iso_pair_loss(0, 0.3).unwrap(), 0.7, epsilon = 1e-15);
        assert!(iso_pair_loss(2, 0.3).is_err());
        assert!(iso_pair_loss(1, 1.5).is_err());
        assert!(iso_pair_loss(1, f64::NAN).is_err());
    }

    proptest! {
        #[test]
        fn ks_agrees_with_brute_force(
            a in prop::collection::vec(0u8..6, 1..30),
            b in prop::collection::vec(0u8..6, 1..30),
        ) {
            let a: Vec<f64> = a.into_iter().map(f64::from).collect();
            let b: Vec<f64> = b.into_iter().map(f64::from).collect();
            let ks = ks_statistic(&set(&a), &set(&b)).unwrap();
            prop_assert!((ks - ks_brute(&a, &b)).abs() < 1e-12);
            prop_assert!((0.0..=1.0).contains(&ks));
            prop_assert_eq!(ks, ks_statistic(&set(&b), &set(&a)).unwrap());
        }
    }
}
