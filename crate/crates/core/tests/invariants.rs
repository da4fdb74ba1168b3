//! Property checks over random data.

use gebound::bounds::{ege_bound_validation, varsigma, vc_epsilon, TailRegime, TailSpec, VcParams};
use gebound::data::{make_folds, split_holdout_n, standardize};
use gebound::estimators::{fit_lasso, fit_ridge};
use gebound::rng::rng_from_seed;
use gebound::{Dataset64, Error};
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use rand::Rng;
use rand_distr::StandardNormal;

fn random_data(seed: u64, n: usize, p: usize) -> Dataset64 {
    let mut rng = rng_from_seed(seed);
    let x = DMatrix::from_fn(n, p, |_, _| rng.sample::<f64, _>(StandardNormal));
    let noise = DVector::from_fn(n, |_, _| rng.sample::<f64, _>(StandardNormal));
    let beta = DVector::from_fn(p, |j, _| if j < 2 { 1.5 } else { 0.0 });
    Dataset64::new(&x * beta + noise, x).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn standardized_columns_have_zero_mean_unit_variance(seed in any::<u64>(), n in 5usize..60, p in 1usize..6) {
        let (std, stats) = standardize(&random_data(seed, n, p)).unwrap();
        let nf = n as f64;
        for j in 0..p {
            let col = std.x().column(j);
            let mean = col.sum() / nf;
            let var = col.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / nf;
            prop_assert!(mean.abs() < 1e-12);
            prop_assert!((var - 1.0).abs() < 1e-10);
        }
        prop_assert_eq!(stats.means.len(), p + 1);
    }

    #[test]
    fn original_units_reproduce_standardized_predictions(seed in any::<u64>(), n in 8usize..40, p in 1usize..5) {
        let data = random_data(seed, n, p);
        let (std, stats) = standardize(&data).unwrap();
        let b = DVector::from_fn(p, |j, _| 0.3 * j as f64 - 0.2);
        let (intercept, raw) = stats.coefficients_to_original(&b).unwrap();
        let pred_std = std.x() * &b;
        let pred_raw = data.x() * &raw;
        for i in 0..n {
            let back = stats.y_mean() + stats.y_scale() * pred_std[i];
            prop_assert!((pred_raw[i] + intercept - back).abs() < 1e-9 * (1.0 + back.abs()));
        }
    }

    #[test]
    fn folds_partition_rows(n in 2usize..200, k_frac in 0.0f64..1.0, seed in any::<u64>()) {
        let k = 2 + ((n - 2) as f64 * k_frac) as usize;
        let plan = make_folds(n, k, seed).unwrap();
        let mut seen: Vec<usize> = plan.folds.iter().flatten().copied().collect();
        seen.sort_unstable();
        prop_assert_eq!(seen, (0..n).collect::<Vec<_>>());
        let sizes: Vec<usize> = plan.folds.iter().map(Vec::len).collect();
        prop_assert!(sizes.iter().max().unwrap() - sizes.iter().min().unwrap() <= 1);
    }

    #[test]
    fn holdout_is_disjoint_and_covering(n in 2usize..300, f in 0.05f64..0.95, seed in any::<u64>()) {
        let n_test = (n as f64 * f).round() as usize;
        let result = split_holdout_n(n, f, seed);
        if n_test < 1 || n - n_test < 2 {
            let degenerate = matches!(result, Err(Error::DegenerateSplit { .. }));
            prop_assert!(degenerate);
            return Ok(());
        }
        let split = result.unwrap();
        prop_assert_eq!(split.n_test(), n_test);
        let mut all: Vec<usize> = split.train_indices.iter().chain(&split.test_indices).copied().collect();
        all.sort_unstable();
        prop_assert_eq!(all, (0..n).collect::<Vec<_>>());
        prop_assert!(split.n_train() >= 1 && split.n_test() >= 1);
    }

    #[test]
    fn lasso_satisfies_stationarity(seed in any::<u64>(), lambda in 0.01f64..1.5) {
        let (d, _) = standardize(&random_data(seed, 40, 6)).unwrap();
        let fit = fit_lasso(&d, lambda).unwrap();
        let n = d.n() as f64;
        let grad = d.x().tr_mul(&(d.y() - d.x() * &fit.coefficients)) / n;
        let half = lambda / 2.0;
        for j in 0..d.p() {
            let b = fit.coefficients[j];
            if b == 0.0 {
                prop_assert!(grad[j].abs() <= half + 1e-5);
            } else {
                prop_assert!((grad[j] - half * b.signum()).abs() < 1e-5);
            }
        }
    }

    #[test]
    fn shrinkage_is_monotone_in_lambda(seed in any::<u64>(), a in 0.01f64..1.0, b in 0.01f64..1.0) {
        let (d, _) = standardize(&random_data(seed, 30, 5)).unwrap();
        let (lo, hi) = if a < b { (a, b) } else { (b, a) };
        let l1 = |l: f64| fit_lasso(&d, l).unwrap().coefficients.lp_norm(1);
        prop_assert!(l1(lo) >= l1(hi) - 1e-6);
        let l2 = |l: f64| fit_ridge(&d, l).unwrap().coefficients.norm();
        prop_assert!(l2(lo) >= l2(hi) - 1e-12);
    }

    #[test]
    fn epsilon_decreases_with_training_size(h in 1usize..50, extra in 3usize..500, step in 1usize..500) {
        let n1 = (h + extra) as f64;
        let e1 = vc_epsilon(&VcParams::with_default_eta(n1, h as f64).unwrap()).unwrap();
        let e2 = vc_epsilon(&VcParams::with_default_eta(n1 + step as f64, h as f64).unwrap()).unwrap();
        prop_assert!(e2 < e1);
    }

    #[test]
    fn bound_dominates_training_error(ete in 0.0f64..10.0, n_t in 50usize..2000, h in 1usize..10, n_s in 5usize..500, b in 0.1f64..10.0) {
        let params = VcParams::from_counts(n_t, h).unwrap();
        let tail = TailSpec::new(TailRegime::Bounded { b }, 0.95).unwrap();
        let r = ege_bound_validation(ete, &params, &tail, n_s as f64).unwrap();
        if !r.vacuous {
            prop_assert!(r.bound >= ete);
            prop_assert!(r.bound >= ete / (1.0 - r.epsilon.sqrt()));
        }
        prop_assert!(r.probability > 0.0 && r.probability < 1.0);
        let wider = varsigma(&tail, (n_s + 1) as f64, (n_t + n_s + 1) as f64).unwrap();
        prop_assert!(wider <= r.varsigma);
    }
}
