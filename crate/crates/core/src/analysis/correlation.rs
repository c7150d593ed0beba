use crate::error::{check_len, Error, Result};

/// `|Pearson correlation|` of two equal-length sequences; 0 if either is constant.
pub fn abs_cross_correlation(activity: &[f64], reference: &[f64]) -> Result<f64> {
    check_len("reference sequence", activity.len(), reference.len())?;
    if activity.len() < 2 {
        return Err(Error::InvalidArgument(
            "cross-correlation needs at least two samples".into(),
        ));
    }
    let n = activity.len() as f64;
    let ma = activity.iter().sum::<f64>() / n;
    let mr = reference.iter().sum::<f64>() / n;
    let (mut cov, mut va, mut vr) = (0.0, 0.0, 0.0);
    for (a, r) in activity.iter().zip(reference) {
        let (da, dr) = (a - ma, r - mr);
        cov += da * dr;
        va += da * da;
        vr += dr * dr;
    }
    if va == 0.0 || vr == 0.0 {
        return Ok(0.0);
    }
    Ok((cov / (va.sqrt() * vr.sqrt())).abs().min(1.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn examples() {
        let a = [1.0, 2.0, 4.0, 3.0];
        assert!((abs_cross_correlation(&a, &a).unwrap() - 1.0).abs() < 1e-15);
        let neg: Vec<f64> = a.iter().map(|v| -v).collect();
        assert!((abs_cross_correlation(&a, &neg).unwrap() - 1.0).abs() < 1e-15);
        assert_eq!(abs_cross_correlation(&a, &[2.0; 4]).unwrap(), 0.0);
        assert!(abs_cross_correlation(&[1.0], &[1.0]).is_err());
        assert!(abs_cross_correlation(&a, &[1.0, 2.0]).is_err());
    }

    #[test]
    fn random_pair_matches_two_pass_formula() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(2);
        let a: Vec<f64> = (0..50).map(|_| rng.random_range(-1.0..1.0)).collect();
        let b: Vec<f64> = a
            .iter()
            .map(|v| 0.3 * v + rng.random_range(-1.0..1.0))
            .collect();
        // population moments via E[xy] - E[x]E[y]
        let n = a.len() as f64;
        let mean = |x: &[f64]| x.iter().sum::<f64>() / n;
        let exy = a.iter().zip(&b).map(|(x, y)| x * y).sum::<f64>() / n;
        let cov = exy - mean(&a) * mean(&b);
        let sd = |x: &[f64]| (x.iter().map(|v| v * v).sum::<f64>() / n - mean(x).powi(2)).sqrt();
        let oracle = (cov / (sd(&a) * sd(&b))).abs();
        assert!((abs_cross_correlation(&a, &b).unwrap() - oracle).abs() < 1e-12);
    }

    proptest! {
        #[test]
        fn affine_invariance(
            a in proptest::collection::vec(-10.0f64..10.0, 3..40),
            seed in any::<u64>(),
            scale in prop_oneof![-5.0f64..-0.1, 0.1f64..5.0],
            shift in -10.0f64..10.0,
        ) {
            use rand::{Rng, SeedableRng};
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let b: Vec<f64> = a.iter().map(|v| v + rng.random_range(-3.0..3.0)).collect();
            let base = abs_cross_correlation(&a, &b).unwrap();
            let moved: Vec<f64> = a.iter().map(|v| scale * v + shift).collect();
            let c = abs_cross_correlation(&moved, &b).unwrap();
            prop_assert!((0.0..=1.0).contains(&c));
            if base > 0.0 {
                prop_assert!((c - base).abs() < 1e-9, "{c} vs {base}");
            }
        }
    }
}
