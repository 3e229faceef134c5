use statrs::distribution::{ContinuousCDF, Normal, StudentsT};

/// `z(0.995)` rounded to four decimals.
pub const Z_995: f64 = 2.5758;

/// Two-sided normal quantile `z(1 - zeta/2)` rounded to four decimals.
pub fn normal_quantile_4dp(zeta: f64) -> f64 {
    let n = Normal::new(0.0, 1.0).expect("standard normal");
    (n.inverse_cdf(1.0 - zeta / 2.0) * 1e4).round() / 1e4
}

pub fn mean(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return f64::NAN;
    }
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Sample standard deviation (`n - 1` denominator); zero for fewer than two values.
pub fn std_dev(xs: &[f64]) -> f64 {
    if xs.len() < 2 {
        return 0.0;
    }
    let m = mean(xs);
    (xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (xs.len() - 1) as f64).sqrt()
}

pub fn median(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return f64::NAN;
    }
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// Half-width of the normal-approximation 99% interval of the mean.
pub fn ci99_half_width(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return f64::NAN;
    }
    Z_995 * std_dev(xs) / (xs.len() as f64).sqrt()
}

fn tied(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-12 * a.abs().max(b.abs()).max(1.0)
}

/// Per-strategy count of runs where it reached the lowest final value; ties count
/// for every tied strategy. `finals[s][r]` is strategy `s` on run `r`.
pub fn win_counts(finals: &[Vec<f64>]) -> Vec<usize> {
    let mut wins = vec![0; finals.len()];
    let runs = finals.iter().map(Vec::len).min().unwrap_or(0);
    for r in 0..runs {
        let best = finals.iter().map(|f| f[r]).fold(f64::INFINITY, f64::min);
        for (s, f) in finals.iter().enumerate() {
            if tied(f[r], best) {
                wins[s] += 1;
            }
        }
    }
    wins
}

/// One-sided Welch test of `mean(a) < mean(b)`; returns the p-value.
pub fn welch_one_sided(a: &[f64], b: &[f64]) -> f64 {
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (ma, mb) = (mean(a), mean(b));
    let (va, vb) = (std_dev(a).powi(2), std_dev(b).powi(2));
    let se2 = va / na + vb / nb;
    if se2 == 0.0 {
        return if ma == mb {
            0.5
        } else if ma < mb {
            0.0
        } else {
            1.0
        };
    }
    let t = (ma - mb) / se2.sqrt();
    let df = se2 * se2 / ((va / na).powi(2) / (na - 1.0) + (vb / nb).powi(2) / (nb - 1.0));
    StudentsT::new(0.0, 1.0, df)
        .expect("positive degrees of freedom")
        .cdf(t)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn basic_statistics() {
        let xs = [1.0, 2.0, 3.0, 4.0];
        assert_eq!(mean(&xs), 2.5);
        assert!((std_dev(&xs) - (5.0f64 / 3.0).sqrt()).abs() < 1e-15);
        assert_eq!(median(&xs), 2.5);
        assert_eq!(median(&[3.0, 1.0, 2.0]), 2.0);
        assert!((ci99_half_width(&xs) - 2.5758 * (5.0f64 / 3.0).sqrt() / 2.0).abs() < 1e-15);
        assert_eq!(std_dev(&[1.0]), 0.0);
    }

    #[test]
    fn quantile_rounds_to_table_value() {
        assert_eq!(normal_quantile_4dp(0.01), Z_995);
        assert_eq!(normal_quantile_4dp(0.05), 1.96);
    }

    #[test]
    fn wins_count_ties_for_everyone() {
        let same = vec![vec![1.0, 2.0, 3.0], vec![1.0, 2.0, 3.0]];
        assert_eq!(win_counts(&same), vec![3, 3]);
        let dominated = vec![vec![1.0, 2.0], vec![1.5, 2.5]];
        assert_eq!(win_counts(&dominated), vec![2, 0]);
        let mixed = vec![vec![1.0, 5.0, 2.0], vec![2.0, 1.0, 2.0]];
        let w = win_counts(&mixed);
        assert_eq!(w, vec![2, 2]);
        assert!(w.iter().sum::<usize>() >= 3);
    }

    #[test]
    fn welch_edge_cases() {
        let a = [1.0, 1.0, 1.0];
        assert_eq!(welch_one_sided(&a, &a), 0.5);
        let b: Vec<f64> = (0..96).map(|i| 20.0 + 1e-3 * (i % 7) as f64).collect();
        let a: Vec<f64> = b.iter().map(|x| x - 10.0).collect();
        assert!(welch_one_sided(&a, &b) < 1e-10);
        assert!(welch_one_sided(&b, &a) > 1.0 - 1e-10);
    }

    #[test]
    fn welch_matches_reference_values() {
        // scipy.stats.ttest_ind(a, b, equal_var=False, alternative="less")
        let a = [4.1, 5.3, 2.2, 6.8, 3.9, 4.4, 5.0, 3.1];
        let b = [6.2, 7.9, 5.5, 8.1, 6.6, 9.0, 5.9];
        assert!((welch_one_sided(&a, &b) - 0.0010648368341881927).abs() < 1e-6);
        let c = [10.0, 12.5, 9.5, 11.0, 10.5];
        let d = [10.2, 11.9, 10.8, 10.1, 12.0, 9.7];
        assert!((welch_one_sided(&c, &d) - 0.4505590247055866).abs() < 1e-6);
    }
}
