use nalgebra::{DMatrix, DVector};
use pint_core::dataset::{select_subset, CorrectionRecord, CorrectionStore, QueryTag, SubsetStrategy};
use pint_core::gp::{gram_matrix, log_marginal_likelihood, GpFit, Hyperparams};
use proptest::prelude::*;

fn dense_gram(x: &[Vec<f64>], hp: &Hyperparams) -> DMatrix<f64> {
    let n = x.len();
    DMatrix::from_fn(n, n, |i, j| {
        let d2: f64 = x[i].iter().zip(&x[j]).map(|(a, b)| (a - b) * (a - b)).sum();
        hp.sigma_o_sq * (-d2 / hp.sigma_i_sq).exp() + if i == j { hp.sigma_reg_sq } else { 0.0 }
    })
}

fn cross(x: &[Vec<f64>], q: &[f64], hp: &Hyperparams) -> DVector<f64> {
    DVector::from_iterator(
        x.len(),
        x.iter().map(|r| {
            let d2: f64 = r.iter().zip(q).map(|(a, b)| (a - b) * (a - b)).sum();
            hp.sigma_o_sq * (-d2 / hp.sigma_i_sq).exp()
        }),
    )
}

fn problem() -> impl Strategy<Value = (Vec<Vec<f64>>, Vec<f64>, Vec<f64>, Hyperparams)> {
    (1usize..=20, 1usize..=4).prop_flat_map(|(n, d)| {
        (
            prop::collection::vec(prop::collection::vec(-2.0f64..2.0, d), n),
            prop::collection::vec(-3.0f64..3.0, n),
            prop::collection::vec(-2.5f64..2.5, d),
            (0.05f64..5.0, 0.1f64..4.0, -4.0f64..-1.0),
        )
            .prop_map(|(x, y, q, (si, so, lr))| (x, y, q, Hyperparams::new(si, so, 10f64.powf(lr))))
    })
}

fn flat(x: &[Vec<f64>]) -> Vec<f64> {
    x.iter().flatten().copied().collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(10_000))]

    #[test]
    fn posterior_and_likelihood_match_dense_algebra((x, y, q, hp) in problem()) {
        let dim = q.len();
        let k = dense_gram(&x, &hp);
        let inv = k.clone().try_inverse().unwrap();
        let yv = DVector::from_vec(y.clone());
        let ks = cross(&x, &q, &hp);
        let mean = (ks.transpose() * &inv * &yv)[0];
        let var = (hp.sigma_o_sq - (ks.transpose() * &inv * &ks)[0]).max(0.0);
        let lml = -(yv.transpose() * &inv * &yv)[0] - k.determinant().ln();

        let fit = GpFit::with_hyperparams(&flat(&x), dim, &y, &[hp]).unwrap();
        let scale = 1.0 + inv.norm() * (1.0 + yv.norm());
        prop_assert!((fit.posterior_mean(0, &q) - mean).abs() <= 1e-8 * scale, "mean {} vs {}", fit.posterior_mean(0, &q), mean);
        prop_assert!((fit.posterior_variance(0, &q) - var).abs() <= 1e-8 * (1.0 + inv.norm()));
        let got = log_marginal_likelihood(&flat(&x), dim, &y, &hp).unwrap();
        prop_assert!((got - lml).abs() <= 1e-8 * (1.0 + lml.abs()) * scale, "lml {got} vs {lml}");
    }

    #[test]
    fn gram_spectrum_is_bounded_below_by_nugget((x, _y, q, hp) in problem()) {
        let g = gram_matrix(&flat(&x), q.len(), &hp).unwrap();
        let n = x.len();
        let m = DMatrix::from_row_slice(n, n, &g);
        prop_assert_eq!(&m, &m.transpose());
        let dense = dense_gram(&x, &hp);
        prop_assert!((&m - &dense).abs().max() <= 1e-14 * hp.sigma_o_sq);
        let min = m.symmetric_eigenvalues().min();
        prop_assert!(min >= hp.sigma_reg_sq - 1e-12 * n as f64 * hp.sigma_o_sq, "{min} < {}", hp.sigma_reg_sq);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(500))]

    #[test]
    fn nearest_subset_of_full_size_equals_full_gp((x, y, q, hp) in problem()) {
        let dim = q.len();
        let n = x.len();
        let outputs: Vec<Vec<f64>> = (0..n).map(|i| (0..dim).map(|c| y[i] * (c + 1) as f64 - x[i][c]).collect()).collect();
        let mut store = CorrectionStore::new(dim);
        store
            .insert_batch(
                x.iter()
                    .zip(&outputs)
                    .enumerate()
                    .map(|(i, (a, b))| CorrectionRecord { input: a.clone(), output: b.clone(), interval: i, iteration: 0 })
                    .collect(),
            )
            .unwrap();
        let tag = QueryTag::new(7, 1, 0, 0);
        let idx = select_subset(&store, SubsetStrategy::Nearest, &q, 0, 1, n, &tag).unwrap();
        prop_assert_eq!(idx.len(), n);
        let sub_in: Vec<f64> = idx.iter().flat_map(|&i| x[i].clone()).collect();
        let sub_out: Vec<f64> = idx.iter().flat_map(|&i| outputs[i].clone()).collect();
        let hps = vec![hp; dim];
        let full = GpFit::with_hyperparams(&flat(&x), dim, &flat(&outputs), &hps).unwrap();
        let sub = GpFit::with_hyperparams(&sub_in, dim, &sub_out, &hps).unwrap();
        let a = full.predict(&q).unwrap();
        let b = sub.predict(&q).unwrap();
        let k = dense_gram(&x, &hp);
        let cond = k.clone().try_inverse().unwrap().norm() * k.norm();
        for (u, v) in a.iter().zip(&b) {
            prop_assert!((u - v).abs() <= 1e-10 * (1.0 + u.abs()) * cond.max(1.0), "{u} vs {v}");
        }
    }
}
