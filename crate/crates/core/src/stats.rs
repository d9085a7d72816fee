//! Small-sample descriptive statistics.

/// Median of `values`, reordering the slice in place.
///
/// Even-length samples average the two central order statistics.
/// Returns `None` for an empty slice.
pub fn median_in_place(values: &mut [f64]) -> Option<f64> {
    let n = values.len();
    if n == 0 {
        return None;
    }
    let mid = n / 2;
    let (lower, upper_mid, _) = values.select_nth_unstable_by(mid, f64::total_cmp);
    let upper_mid = *upper_mid;
    if n % 2 == 1 {
        return Some(upper_mid);
    }
    let lower_mid = lower
        .iter()
        .copied()
        .max_by(f64::total_cmp)
        .expect("even n >= 2 leaves a non-empty lower half");
    Some((lower_mid + upper_mid) / 2.0)
}

pub fn mean(values: &[f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    Some(values.iter().sum::<f64>() / values.len() as f64)
}

/// Sample standard deviation with the `n - 1` denominator.
///
/// A single observation has deviation 0; an empty slice has none.
pub fn sample_std_dev(values: &[f64]) -> Option<f64> {
    let n = values.len();
    match n {
        0 => None,
        1 => Some(0.0),
        _ => {
            let m = mean(values)?;
            let ss: f64 = values.iter().map(|v| (v - m) * (v - m)).sum();
            Some(libm::sqrt(ss / (n - 1) as f64))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn median_odd_and_even() {
        assert_eq!(median_in_place(&mut [3.0, 1.0, 2.0]), Some(2.0));
        assert_eq!(median_in_place(&mut [4.0, 1.0, 3.0, 2.0]), Some(2.5));
        assert_eq!(median_in_place(&mut []), None);
        assert_eq!(median_in_place(&mut [7.0]), Some(7.0));
    }

    #[test]
    fn std_dev_small_samples() {
        assert_eq!(sample_std_dev(&[]), None);
        assert_eq!(sample_std_dev(&[5.0]), Some(0.0));
        assert_eq!(sample_std_dev(&[5.0, 5.0, 5.0]), Some(0.0));
        // {2,4,4,4,5,5,7,9}: mean 5, sum of squares 32, 32/7.
        let v = vec![2.0, 4.0, 4.0, 4.0, 5.0, 5.0, 7.0, 9.0];
        let sd = sample_std_dev(&v).unwrap();
        assert!((sd - libm::sqrt(32.0 / 7.0)).abs() < 1e-12);
    }
}
