//! Small numeric helpers shared by the feature extractors.

/// Arithmetic mean, `None` for an empty slice.
pub fn mean(values: &[f64]) -> Option<f64> {
    if values.is_empty() {
        None
    } else {
        Some(values.iter().sum::<f64>() / values.len() as f64)
    }
}

/// Population standard deviation (divides by `n`).
pub fn population_std(values: &[f64]) -> Option<f64> {
    let m = mean(values)?;
    let var = values.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / values.len() as f64;
    Some(var.sqrt())
}

/// Mean absolute deviation from the mean.
pub fn mean_abs_deviation(values: &[f64]) -> Option<f64> {
    let m = mean(values)?;
    Some(values.iter().map(|v| (v - m).abs()).sum::<f64>() / values.len() as f64)
}

/// Normalized pairwise variability index:
/// `100/(m-1) * sum |d_k - d_{k+1}| / ((d_k + d_{k+1}) / 2)`.
///
/// Needs at least two values; a pair whose mean is zero contributes nothing.
pub fn npvi(durations: &[f64]) -> Option<f64> {
    if durations.len() < 2 {
        return None;
    }
    let sum: f64 = durations
        .windows(2)
        .map(|w| {
            let pair_mean = (w[0] + w[1]) / 2.0;
            if pair_mean == 0.0 {
                0.0
            } else {
                (w[0] - w[1]).abs() / pair_mean
            }
        })
        .sum();
    Some(100.0 * sum / (durations.len() - 1) as f64)
}

/// Raw pairwise variability index: mean absolute difference of neighbours.
pub fn rpvi(durations: &[f64]) -> Option<f64> {
    if durations.len() < 2 {
        return None;
    }
    let sum: f64 = durations.windows(2).map(|w| (w[0] - w[1]).abs()).sum();
    Some(sum / (durations.len() - 1) as f64)
}

/// Index of the smallest value; ties resolve to the earliest index.
/// NaN entries are skipped.
pub fn argmin(values: &[f64]) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for (i, &v) in values.iter().enumerate() {
        if v.is_nan() {
            continue;
        }
        match best {
            Some((_, b)) if v >= b => {}
            _ => best = Some((i, v)),
        }
    }
    best.map(|(i, _)| i)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn npvi_two_values() {
        let v = npvi(&[0.1, 0.2]).unwrap();
        assert!((v - 100.0 * (0.1 / 0.15)).abs() < 1e-9);
    }

    #[test]
    fn npvi_needs_two() {
        assert!(npvi(&[0.3]).is_none());
        assert!(rpvi(&[]).is_none());
    }

    #[test]
    fn argmin_ties_pick_earliest() {
        assert_eq!(argmin(&[3.0, 1.0, 1.0, 2.0]), Some(1));
        assert_eq!(argmin(&[]), None);
    }

    #[test]
    fn deviation_of_pair() {
        let d = mean_abs_deviation(&[0.2, 0.4]).unwrap();
        assert!((d - 0.1).abs() < 1e-12);
    }
}
