mod common;

use common::{probe_points, random_network, synthetic};
use marsnet::{
    deepen, fit_mars, gradients, mars_to_network, parameter_shift_report, reshape_to, train, widen, widen_with_jitter,
    Activation, BasisFunction, DenseNetwork, Direction, FitConfig, Model, TrainConfig,
};
use proptest::prelude::*;

fn fitted(seed: u64, d: usize, m: usize) -> (marsnet::Data, Model) {
    let data = synthetic(200, d, 0.05, seed);
    let cfg = FitConfig {
        max_terms: m,
        incremental: true,
        ..FitConfig::default()
    };
    let model = fit_mars(&data, &cfg).unwrap().model;
    (data, model)
}

fn max_gap(a: &DenseNetwork<f64>, b: &DenseNetwork<f64>, probes: &[Vec<f64>]) -> f64 {
    probes
        .iter()
        .map(|x| (a.forward(x).unwrap()[0] - b.forward(x).unwrap()[0]).abs())
        .fold(0.0, f64::max)
}

#[test]
fn converted_network_has_the_prescribed_structure() {
    let (_, model) = fitted(3, 4, 16);
    assert!(model.n_terms() > 2);
    let (net, report) = mars_to_network(&model).unwrap();
    assert_eq!(net.widths(), vec![4, model.n_terms(), 1]);
    assert_eq!(report.hidden_width, model.n_terms());
    let (hidden, head) = (&net.layers[0], &net.layers[1]);
    assert_eq!(hidden.activation, Activation::Relu);
    assert_eq!(head.activation, Activation::Identity);
    for (m, t) in model.terms.iter().enumerate() {
        let b = t.basis;
        let sign = match b.direction {
            Direction::Positive => 1.0,
            Direction::Negative => -1.0,
        };
        for c in 0..4 {
            let expected = if c == b.dim { sign } else { 0.0 };
            assert_eq!(hidden.weight(m, c), expected);
        }
        assert_eq!(hidden.bias[m], -sign * b.knot);
        assert_eq!(head.weight(0, m), t.coef);
        assert_eq!(report.units[m], Some(b));
    }
    assert_eq!(head.bias[0], model.intercept);
}

#[test]
fn intercept_only_model_converts_to_a_constant() {
    let model = Model::intercept_only(0.75, 3);
    let (net, report) = mars_to_network(&model).unwrap();
    assert_eq!(net.widths(), vec![3, 1, 1]);
    assert_eq!(report.units, vec![None]);
    for x in probe_points(3, 20, -5.0, 5.0, 1) {
        assert_eq!(net.forward(&x).unwrap()[0], 0.75);
    }
}

#[test]
fn hidden_unit_reproduces_its_basis() {
    let (_, model) = fitted(8, 2, 10);
    let (net, _) = mars_to_network(&model).unwrap();
    for x in probe_points(2, 100, -1.0, 2.0, 4) {
        let l = &net.layers[0];
        for (m, t) in model.terms.iter().enumerate() {
            let z = l.bias[m] + (0..2).map(|c| l.weight(m, c) * x[c]).sum::<f64>();
            assert_eq!(z.max(0.0), t.basis.eval(&x).unwrap());
        }
    }
}

#[test]
fn widening_and_deepening_preserve_the_function() {
    let (_, model) = fitted(5, 5, 20);
    let (net, _) = mars_to_network(&model).unwrap();
    let probes = probe_points(5, 1000, -1.0, 2.0, 9);
    let wide = widen(&net, 0, 64).unwrap();
    assert_eq!(max_gap(&net, &wide, &probes), 0.0);
    let mut deep = wide.clone();
    for _ in 0..3 {
        deep = deepen(&deep, 1).unwrap();
    }
    assert_eq!(deep.depth(), net.depth() + 3);
    assert!(max_gap(&net, &deep, &probes) <= 1e-12);
}

#[test]
fn reshape_to_target_widths() {
    let (_, model) = fitted(6, 11, 20);
    let (net, _) = mars_to_network(&model).unwrap();
    let target = [11, 32, 32, 1];
    let grown = reshape_to(&net, &target).unwrap();
    assert_eq!(grown.widths(), target.to_vec());
    let probes = probe_points(11, 1000, -0.5, 1.5, 2);
    assert!(max_gap(&net, &grown, &probes) <= 1e-12);
    assert!(reshape_to(&net, &[11, 2, 1]).is_err());
    assert!(reshape_to(&net, &[10, 32, 1]).is_err());
}

#[test]
fn deepen_rejects_unsafe_positions() {
    let net = random_network(&[2, 3, 1], 0);
    assert!(deepen(&net, 0).is_err());
    assert!(deepen(&net, 2).is_err());
    assert!(deepen(&net, 5).is_err());
}

#[test]
fn jittered_widening_is_exact_and_live() {
    let (data, model) = fitted(7, 3, 10);
    let (net, _) = mars_to_network(&model).unwrap();
    let wide = widen_with_jitter(&net, 0, 8, 0.1, 3).unwrap();
    let probes = probe_points(3, 500, -1.0, 2.0, 5);
    assert_eq!(max_gap(&net, &wide, &probes), 0.0);
    let xs: Vec<Vec<f64>> = data.rows().map(<[f64]>::to_vec).collect();
    let ys: Vec<Vec<f64>> = data.targets().iter().map(|&y| vec![y]).collect();
    let g = gradients(&wide, &xs, &ys).unwrap();
    let new_out: f64 = (net.layers[0].rows..wide.layers[0].rows).map(|c| g.weights[1][c].abs()).sum();
    assert!(new_out > 0.0, "new units receive gradient on their outgoing weights");
    // Plain widening leaves the new units dead.
    let dead = widen(&net, 0, 8).unwrap();
    let g = gradients(&dead, &xs, &ys).unwrap();
    let new_out: f64 = (net.layers[0].rows..dead.layers[0].rows).map(|c| g.weights[1][c].abs()).sum();
    assert_eq!(new_out, 0.0);
}

#[test]
fn shift_report_matches_direct_norms() {
    let (data, model) = fitted(9, 3, 10);
    let (net, _) = mars_to_network(&model).unwrap();
    let cfg = TrainConfig {
        epochs: 3,
        ..TrainConfig::default()
    };
    let (trained, _) = train(&net, &data, &cfg).unwrap();
    let report = parameter_shift_report(&net, &trained).unwrap();
    assert_eq!(report.layers.len(), 2);
    for (k, s) in report.layers.iter().enumerate() {
        let (a, b) = (&net.layers[k], &trained.layers[k]);
        let dw = a.weights.iter().zip(&b.weights).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt();
        let w0 = a.weights.iter().map(|x| x * x).sum::<f64>().sqrt();
        let db = a.bias.iter().zip(&b.bias).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt();
        assert!((s.w_delta_frobenius - dw).abs() <= 1e-14);
        assert!((s.b_delta_norm - db).abs() <= 1e-14);
        assert!((s.relative_shift - dw / (w0 + 1e-12)).abs() <= 1e-14);
    }
    let same = parameter_shift_report(&net, &net).unwrap();
    assert!(same.layers.iter().all(|s| s.w_delta_frobenius == 0.0 && s.max_abs_change == 0.0));
    assert!(parameter_shift_report(&net, &random_network(&[3, 2, 1], 0)).is_err());
}

#[test]
fn f32_conversion_is_exact_in_f32() {
    let (_, model) = fitted(10, 2, 8);
    let (net, _) = mars_to_network(&model).unwrap();
    let net32 = net.cast::<f32>();
    let model32 = marsnet::Model32::from_terms(
        model.intercept as f32,
        model
            .terms
            .iter()
            .map(|t| marsnet::Term {
                basis: BasisFunction::new(t.basis.dim, t.basis.knot as f32, t.basis.direction),
                coef: t.coef as f32,
            })
            .collect(),
        2,
    )
    .unwrap();
    let (direct, report) = mars_to_network(&model32).unwrap();
    assert_eq!(net32, direct);
    assert_eq!(report.max_deviation, 0.0);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(20))]

    #[test]
    fn conversion_is_exact(seed in 0u64..100_000, d in 1usize..=11, m in 1usize..=30) {
        let (_, model) = fitted(seed, d, m);
        let (net, report) = mars_to_network(&model).unwrap();
        prop_assert!(report.max_deviation <= 1e-9);
        for x in probe_points(d, 1000, -1.0, 2.0, seed) {
            let gap = (net.forward(&x).unwrap()[0] - model.eval(&x).unwrap()).abs();
            prop_assert!(gap <= 1e-9, "gap {gap}");
        }
    }

    #[test]
    fn reshape_is_invariant(seed in 0u64..100_000, extra in 0usize..=64, layers in 0usize..=3) {
        let net = random_network(&[4, 6, 1], seed);
        let mut target = vec![4];
        target.extend(std::iter::repeat(6 + extra).take(1 + layers));
        target.push(1);
        let grown = reshape_to(&net, &target).unwrap();
        prop_assert_eq!(grown.widths(), target);
        let probes = probe_points(4, 1000, -2.0, 2.0, seed);
        prop_assert!(max_gap(&net, &grown, &probes) <= 1e-12);
    }
}
