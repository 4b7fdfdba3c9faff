//! Benjamini-Yekutieli false discovery rate adjustment, valid under
//! arbitrary dependence between the tests.

use crate::error::{Error, Result};

/// BY-adjusted p-values, returned in the input order.
///
/// With `M` p-values sorted ascending, the rank-`i` adjusted value is the
/// running minimum from the top of `p_(i) * M * c(M) / i`, capped at 1,
/// where `c(M) = sum_{k=1}^{M} 1/k`. Adjusted values never fall below the
/// raw ones and are nondecreasing in rank.
pub fn by_fdr_adjust(p_values: &[f64]) -> Result<Vec<f64>> {
    for &p in p_values {
        if !(0.0..=1.0).contains(&p) || p.is_nan() {
            return Err(Error::InvalidPValue(p));
        }
    }
    let m = p_values.len();
    if m == 0 {
        return Ok(Vec::new());
    }
    let c: f64 = (1..=m).map(|k| 1.0 / k as f64).sum();
    let scale = m as f64 * c;

    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&a, &b| p_values[a].partial_cmp(&p_values[b]).unwrap());

    let mut adjusted = vec![0.0; m];
    let mut running_min = 1.0_f64;
    for rank in (0..m).rev() {
        let idx = order[rank];
        let value = (p_values[idx] * scale / (rank + 1) as f64).min(1.0);
        running_min = running_min.min(value);
        adjusted[idx] = running_min;
    }
    Ok(adjusted)
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Literal transcription of the adjustment on sorted inputs, used as an
    /// independent oracle for the vectorized version.
    fn by_oracle_sorted(sorted: &[f64]) -> Vec<f64> {
        let m = sorted.len();
        let c: f64 = (1..=m).map(|k| 1.0 / k as f64).sum();
        let mut out: Vec<f64> = sorted
            .iter()
            .enumerate()
            .map(|(i, p)| (p * m as f64 * c / (i + 1) as f64).min(1.0))
            .collect();
        for i in (0..m - 1).rev() {
            out[i] = out[i].min(out[i + 1]);
        }
        out
    }

    #[test]
    fn three_value_hand_computation() {
        // c(3) = 11/6; raw adjusted (0.055, 0.055, 0.07333..), already monotone.
        let adjusted = by_fdr_adjust(&[0.01, 0.02, 0.04]).unwrap();
        assert!((adjusted[0] - 0.055).abs() < 1e-12);
        assert!((adjusted[1] - 0.055).abs() < 1e-12);
        assert!((adjusted[2] - 0.04 * 3.0 * (11.0 / 6.0) / 3.0).abs() < 1e-12);
        assert!((adjusted[2] - 0.0733333333333333).abs() < 1e-13);
    }

    #[test]
    fn preserves_input_order() {
        let adjusted = by_fdr_adjust(&[0.04, 0.01, 0.02]).unwrap();
        let sorted_adjusted = by_fdr_adjust(&[0.01, 0.02, 0.04]).unwrap();
        assert_eq!(adjusted[0], sorted_adjusted[2]);
        assert_eq!(adjusted[1], sorted_adjusted[0]);
        assert_eq!(adjusted[2], sorted_adjusted[1]);
    }

    #[test]
    fn all_ones_stay_ones() {
        assert_eq!(by_fdr_adjust(&[1.0, 1.0, 1.0]).unwrap(), vec![1.0, 1.0, 1.0]);
    }

    #[test]
    fn single_value_unchanged() {
        assert_eq!(by_fdr_adjust(&[0.3]).unwrap(), vec![0.3]);
    }

    #[test]
    fn rejects_out_of_range() {
        assert!(by_fdr_adjust(&[0.5, 1.5]).is_err());
        assert!(by_fdr_adjust(&[-0.1]).is_err());
        assert!(by_fdr_adjust(&[f64::NAN]).is_err());
    }

    #[test]
    fn matches_oracle_and_dominates_raw() {
        let raw = vec![0.2, 0.001, 0.8, 0.02, 0.02, 0.4, 1.0, 0.0003];
        let adjusted = by_fdr_adjust(&raw).unwrap();
        let mut sorted = raw.clone();
        sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let expect_sorted = by_oracle_sorted(&sorted);
        let mut got_sorted = adjusted.clone();
        got_sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
        for (g, e) in got_sorted.iter().zip(&expect_sorted) {
            assert!((g - e).abs() < 1e-15);
        }
        for (a, r) in adjusted.iter().zip(&raw) {
            assert!(a >= r);
            assert!(*a <= 1.0);
        }
    }

    #[test]
    fn empty_input_is_empty() {
        assert!(by_fdr_adjust(&[]).unwrap().is_empty());
    }
}
