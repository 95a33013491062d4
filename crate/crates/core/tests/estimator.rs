mod common;

use common::{mean_se, CONT_EXACT};
use pmglm::estimator::{draw_missing, log_mean_exp};
use pmglm::simulate::simulate;
use pmglm::{estimate_loglik, loglik_variance, Dataset, Estimator, MissingFill, RngStream, RunConfig};
use statrs::distribution::{Continuous, StudentsT};

fn il(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

fn bern(y: f64, p: f64) -> f64 {
    if y == 1.0 {
        p
    } else {
        1.0 - p
    }
}

/// Enumeration oracle for the toy model: x ~ Bernoulli(p), P(y=1|x) =
/// IL(b0 + b1 x), every x cell observed with probability IL(phi).
fn toy_exact(y: &[f64], x: &[Option<f64>], t: &[f64; 4]) -> f64 {
    let [p, b0, b1, phi] = *t;
    let mut like = 1.0;
    for (yi, xi) in y.iter().zip(x) {
        like *= match xi {
            Some(v) => bern(*yi, il(b0 + b1 * v)) * il(phi),
            None => {
                (0..2)
                    .map(|v| {
                        let v = f64::from(v);
                        bern(*yi, il(b0 + b1 * v)) * bern(v, p)
                    })
                    .sum::<f64>()
                    * (1.0 - il(phi))
            }
        };
    }
    like
}

fn toy_data(y: &[f64], x: &[Option<f64>]) -> Dataset {
    Dataset::new(y.to_vec(), x.iter().map(|v| vec![*v]).collect(), vec!["x1".into()]).unwrap()
}

fn unbiased_check(y: &[f64], x: &[Option<f64>], reps: u64, n: usize) {
    let (_, spec, theta) = common::toy();
    let data = toy_data(y, x);
    let exact = toy_exact(y, x, &common::TOY_THETA);
    let est = Estimator::new(&data, &spec, n, 99);
    let ratios: Vec<f64> = (0..reps)
        .map(|r| (est.estimate(&theta, r).log_value - exact.ln()).exp())
        .collect();
    let (m, se) = mean_se(&ratios);
    assert!((m - 1.0).abs() < 3.0 * se, "mean ratio {m} se {se}");
}

#[test]
fn unbiased_one_binary_cell() {
    unbiased_check(&[1.0, 0.0, 1.0], &[Some(1.0), None, Some(0.0)], 100_000, 1);
}

#[test]
fn unbiased_two_binary_cells() {
    unbiased_check(&[1.0, 0.0, 1.0, 0.0], &[Some(1.0), None, None, Some(0.0)], 100_000, 1);
}

#[test]
fn toy_enumeration_agrees_with_frozen_value() {
    let (data, _, _) = common::toy();
    let x: Vec<Option<f64>> = (0..6).map(|i| data.value(i, 0)).collect();
    let v = toy_exact(data.y(), &x, &common::TOY_THETA).ln();
    assert!((v - common::TOY_EXACT_LOGLIK).abs() < 1e-12);
}

#[test]
fn unbiased_continuous_against_quadrature() {
    let (data, spec) = common::cont();
    for (t, exact) in CONT_EXACT {
        let theta = spec.param_vector(&t).unwrap();
        let est = Estimator::new(&data, &spec, 2, 5);
        let ratios: Vec<f64> = (0..40_000)
            .map(|r| (est.estimate(&theta, r).log_value - exact).exp())
            .collect();
        let (m, se) = mean_se(&ratios);
        assert!((m - 1.0).abs() < 3.0 * se, "mean ratio {m} se {se}");
        // and it concentrates on the quadrature value for large N
        let big = estimate_loglik(&data, &spec, &theta, 200_000, 0, 6).log_value;
        assert!((big - exact).abs() < 0.01, "{big} vs {exact}");
    }
}

#[test]
fn no_missing_cells_is_exact_and_zero_variance() {
    let (_, spec, theta) = common::toy();
    let y = [1.0, 0.0, 1.0];
    let x = [Some(1.0), Some(0.0), Some(0.0)];
    let data = toy_data(&y, &x);
    let cond = spec
        .log_cond_likelihood(&data, &MissingFill::empty(), &theta.beta)
        .unwrap();
    let mech = spec.log_mechanism(&data, &MissingFill::empty(), &theta.phi).unwrap();
    for n in [1, 7, 100] {
        let v = estimate_loglik(&data, &spec, &theta, n, 3, 1).log_value;
        assert!((v - (cond + mech)).abs() < 1e-14);
    }
    assert_eq!(loglik_variance(&data, &spec, &theta, 5, 10, 1).variance, 0.0);
    let (fill, log_q) = draw_missing(&data, &spec, &theta, RngStream::importance(1, 0, 0));
    assert!(fill.values().is_empty());
    assert_eq!(log_q, 0.0);
}

#[test]
fn draw_missing_uses_scaled_t_proposal() {
    let cfg = common::simulation_config();
    let spec = cfg.model_spec().unwrap();
    let (data, truth) = simulate(&cfg, 20190101).unwrap();
    let theta = pmglm::config::theta_from_map(&spec, &truth).unwrap();
    let stream = RngStream::importance(4, 2, 9);
    let (fill, log_q) = draw_missing(&data, &spec, &theta, stream);
    assert_eq!(fill.values().len(), data.n_missing());
    let t = StudentsT::new(0.0, theta.alpha[0], 10.0).unwrap();
    let want: f64 = fill.values().iter().map(|&v| t.ln_pdf(v)).sum();
    assert!((log_q - want).abs() < 1e-9);
    let (again, log_q2) = draw_missing(&data, &spec, &theta, stream);
    assert!(fill
        .values()
        .iter()
        .zip(again.values())
        .all(|(a, b)| a.to_bits() == b.to_bits()));
    assert_eq!(log_q.to_bits(), log_q2.to_bits());
}

#[test]
fn weights_match_public_operations() {
    let (data, spec) = common::cont();
    let theta = spec.param_vector(&CONT_EXACT[1].0).unwrap();
    let est = Estimator::new(&data, &spec, 16, 77);
    let w = est.log_weights(&theta, 5);
    for (k, wk) in w.iter().enumerate() {
        let (fill, log_q) = draw_missing(&data, &spec, &theta, RngStream::importance(77, 5, k as u64));
        let direct = spec.log_mechanism(&data, &fill, &theta.phi).unwrap()
            + spec.log_cond_likelihood(&data, &fill, &theta.beta).unwrap()
            + spec.log_covariate_model(&data, &fill, &theta.alpha).unwrap()
            - log_q;
        assert!((wk - direct).abs() < 1e-10, "k={k}: {wk} vs {direct}");
    }
    assert_eq!(est.estimate(&theta, 5).log_value.to_bits(), log_mean_exp(&w).to_bits());
}

#[test]
fn proposal_equal_to_model_leaves_only_the_likelihood_term() {
    let text = common::CONT_TOML
        .replace(
            r#"proposal = { family = "scaled_t", params = [10.0, 0.0, "alpha"] }"#,
            r#"proposal = { family = "normal", params = [0.0, "alpha"] }"#,
        )
        .replace(r#"logit = "phi0 + phi1*x1 + phi2*x2""#, r#"logit = "phi0""#);
    let spec = RunConfig::from_toml_str(&text).unwrap().model_spec().unwrap();
    let data = common::cont_dataset();
    let theta = spec.param_vector(&CONT_EXACT[0].0).unwrap();
    let est = Estimator::new(&data, &spec, 64, 8);
    let w = est.log_weights(&theta, 0);
    let resid: Vec<f64> = w
        .iter()
        .enumerate()
        .map(|(k, wk)| {
            let (fill, _) = draw_missing(&data, &spec, &theta, RngStream::importance(8, 0, k as u64));
            wk - spec.log_cond_likelihood(&data, &fill, &theta.beta).unwrap()
        })
        .collect();
    let spread =
        resid.iter().fold(f64::NEG_INFINITY, |a, &b| a.max(b)) - resid.iter().fold(f64::INFINITY, |a, &b| a.min(b));
    assert!(spread < 1e-10, "{spread}");
}

#[test]
fn parallel_matches_sequential_bitwise() {
    let cfg = common::simulation_config();
    let spec = cfg.model_spec().unwrap();
    let (data, truth) = simulate(&cfg, 20190101).unwrap();
    let theta = pmglm::config::theta_from_map(&spec, &truth).unwrap();
    let run = |threads: usize| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| estimate_loglik(&data, &spec, &theta, 3000, 11, 2).log_value)
    };
    let one = run(1);
    for t in [2, 3, 8] {
        assert_eq!(one.to_bits(), run(t).to_bits());
    }
    // a sequential fold over the same per-sample weights
    let est = Estimator::new(&data, &spec, 3000, 2);
    let w: Vec<f64> = (0..3000)
        .map(|k| {
            let (fill, log_q) = draw_missing(&data, &spec, &theta, RngStream::importance(2, 11, k));
            spec.log_mechanism(&data, &fill, &theta.phi).unwrap()
                + spec.log_cond_likelihood(&data, &fill, &theta.beta).unwrap()
                + spec.log_covariate_model(&data, &fill, &theta.alpha).unwrap()
                - log_q
        })
        .collect();
    assert!((log_mean_exp(&w) - est.estimate(&theta, 11).log_value).abs() < 1e-9);
}

fn small_simulation() -> (Dataset, pmglm::ModelSpec, pmglm::ParamVector) {
    let mut cfg = common::simulation_config();
    cfg.simulate.as_mut().unwrap().rows = 25;
    let spec = cfg.model_spec().unwrap();
    let (data, truth) = simulate(&cfg, 4242).unwrap();
    let theta = pmglm::config::theta_from_map(&spec, &truth).unwrap();
    (data, spec, theta)
}

#[test]
fn variance_ratio_between_n_and_4n() {
    let (data, spec, theta) = small_simulation();
    assert!(data.n_missing() > 0);
    let a = loglik_variance(&data, &spec, &theta, 50, 400, 31).variance;
    let b = loglik_variance(&data, &spec, &theta, 200, 400, 32).variance;
    let ratio = a / b;
    assert!((2.0..=8.0).contains(&ratio), "{a} / {b} = {ratio}");
}

#[test]
fn variance_concentrates_with_n() {
    let (data, spec) = common::cont();
    let theta = spec.param_vector(&CONT_EXACT[0].0).unwrap();
    let v: Vec<f64> = [2, 8, 32, 128]
        .iter()
        .map(|&n| loglik_variance(&data, &spec, &theta, n, 500, 13).variance)
        .collect();
    let inversions = v.windows(2).filter(|w| w[1] > w[0]).count();
    assert!(inversions <= 1, "{v:?}");
    assert!(v[3] < v[0]);
}

#[test]
fn variance_is_reproducible_and_flags_degeneracy() {
    let (data, spec) = common::cont();
    let theta = spec.param_vector(&CONT_EXACT[0].0).unwrap();
    let a = loglik_variance(&data, &spec, &theta, 8, 20, 3);
    let b = loglik_variance(&data, &spec, &theta, 8, 20, 3);
    assert_eq!(a.variance.to_bits(), b.variance.to_bits());
    assert_eq!(a.degenerate, 0);

    // a proposal that always lands outside the model's support
    let text = common::CONT_TOML
        .replace(
            r#"model = { family = "normal", params = [0.0, "alpha"] }"#,
            r#"model = { family = "log_normal", params = [0.0, "alpha"] }"#,
        )
        .replace(r#"params = [10.0, 0.0, "alpha"]"#, r#"params = [10.0, -50.0, 0.01]"#);
    let spec = RunConfig::from_toml_str(&text).unwrap().model_spec().unwrap();
    let r = loglik_variance(&data, &spec, &theta, 3, 6, 3);
    assert_eq!(r.degenerate, 6);
    assert_eq!(r.variance, f64::INFINITY);
    assert_eq!(
        estimate_loglik(&data, &spec, &theta, 3, 0, 3).log_value,
        f64::NEG_INFINITY
    );
}
