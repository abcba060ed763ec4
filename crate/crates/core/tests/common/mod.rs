//! Independent reference implementations and generators shared by the
//! integration tests.
#![allow(dead_code)]

use marsnet::{
    gradients, mse_loss, Activation, AffinePiece, BasisFunction, Data, DenseNetwork, Direction, Layer, LatticePwl, Term,
};
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn hinge(x: f64) -> f64 {
    x.max(0.0)
}

/// Uniform features on `[0, 1]^d` and an additive hinge target with a few
/// random kinks plus Gaussian-ish noise of size `noise`.
pub fn synthetic(n: usize, d: usize, noise: f64, seed: u64) -> Data {
    let mut r = rng(seed);
    let features: Vec<Vec<f64>> = (0..n).map(|_| (0..d).map(|_| r.gen::<f64>()).collect()).collect();
    let kinks: Vec<(usize, f64, f64)> = (0..(2 * d).min(8))
        .map(|_| (r.gen_range(0..d), r.gen_range(0.1..0.9), r.gen_range(-2.0..2.0)))
        .collect();
    let targets = features
        .iter()
        .map(|x| {
            let clean: f64 = kinks.iter().map(|&(j, t, a)| a * hinge(x[j] - t)).sum::<f64>() + 0.3 * x[0];
            let e: f64 = (0..4).map(|_| r.gen::<f64>() - 0.5).sum();
            clean + noise * e
        })
        .collect();
    Data::from_rows(features, targets).unwrap()
}

/// A tiny instance for the brute-force comparison: `N <= 20`, `d <= 2`,
/// `M_max <= 4`. Half of the instances use coarse grid values so that
/// duplicated coordinates and exact ties occur.
pub fn tiny_instance(seed: u64) -> (Data, usize) {
    let mut r = rng(seed);
    let n = r.gen_range(8..=20);
    let d = r.gen_range(1..=2);
    let max_terms = r.gen_range(1..=4);
    let coarse = seed % 2 == 0;
    let draw = |r: &mut ChaCha8Rng| {
        let v: f64 = r.gen_range(-1.0..1.0);
        if coarse {
            (v * 4.0).round() / 4.0
        } else {
            v
        }
    };
    let features: Vec<Vec<f64>> = (0..n).map(|_| (0..d).map(|_| draw(&mut r)).collect()).collect();
    let t = r.gen_range(-0.5..0.5);
    let targets = features
        .iter()
        .map(|x| 2.0 * hinge(x[0] - t) - x[d - 1] + 0.05 * r.gen_range(-1.0..1.0))
        .collect();
    (Data::from_rows(features, targets).unwrap(), max_terms)
}

/// Residual sum of squares of the least-squares fit of `y` on the columns,
/// through the SVD pseudo-inverse.
pub fn svd_rss(columns: &[Vec<f64>], y: &[f64]) -> f64 {
    let n = y.len();
    let a = DMatrix::from_fn(n, columns.len(), |i, j| columns[j][i]);
    let b = DVector::from_column_slice(y);
    let svd = a.clone().svd(true, true);
    let cutoff = 1e-10 * svd.singular_values.max().max(f64::MIN_POSITIVE);
    let x = svd.solve(&b, cutoff).unwrap();
    (b - a * x).norm_squared()
}

pub fn gcv_score(rss: f64, terms: usize, knots: usize, penalty: f64, n: usize) -> Option<f64> {
    let c = (terms + 1) as f64 + penalty * knots as f64;
    let nf = n as f64;
    (c < nf).then(|| rss / (1.0 - c / nf).powi(2))
}

/// The selection rule: a candidate beats the incumbent only by more than a
/// relative `0.1 * sqrt(eps)` margin, so earlier candidates win near-ties.
pub fn beats(candidate: f64, incumbent: f64, scale: f64) -> bool {
    candidate < incumbent - 0.1 * f64::EPSILON.sqrt() * incumbent.abs().max(scale)
}

/// All distinct sample values of a dimension except the largest.
pub fn brute_knots(data: &Data, dim: usize) -> Vec<f64> {
    let mut v: Vec<f64> = data.rows().map(|r| r[dim]).collect();
    v.sort_by(|a, b| a.partial_cmp(b).unwrap());
    v.dedup();
    v.pop();
    v
}

fn pair_columns(data: &Data, dim: usize, t: f64) -> [Vec<f64>; 2] {
    [
        data.rows().map(|r| hinge(r[dim] - t)).collect(),
        data.rows().map(|r| hinge(t - r[dim])).collect(),
    ]
}

/// Exhaustive forward search: at every step, refit every unused
/// `(dimension, knot)` pair with the SVD solver and keep the one with the
/// lowest GCV. Returns the added pairs in order.
pub fn oracle_forward(data: &Data, max_terms: usize, penalty: f64) -> Vec<(usize, f64)> {
    let n = data.n_samples();
    let y = data.targets();
    let mut columns = vec![vec![1.0; n]];
    let mut chosen: Vec<(usize, f64)> = Vec::new();
    let start = svd_rss(&columns, y);
    let mut current = gcv_score(start, 0, 0, penalty, n);
    let scale = current.unwrap_or(start);
    loop {
        let terms = 2 * chosen.len() + 2;
        if terms > max_terms || gcv_score(0.0, terms, chosen.len() + 1, penalty, n).is_none() {
            break;
        }
        let mut best: Option<(usize, f64, f64)> = None;
        for dim in 0..data.dim() {
            for t in brute_knots(data, dim) {
                if chosen.contains(&(dim, t)) {
                    continue;
                }
                let mut trial = columns.clone();
                trial.extend(pair_columns(data, dim, t));
                let g = gcv_score(svd_rss(&trial, y), terms, chosen.len() + 1, penalty, n).unwrap();
                if best.map_or(true, |(_, _, b)| beats(g, b, scale)) {
                    best = Some((dim, t, g));
                }
            }
        }
        let Some((dim, t, g)) = best else { break };
        if current.is_some_and(|c| !beats(g, c, scale)) {
            break;
        }
        columns.extend(pair_columns(data, dim, t));
        chosen.push((dim, t));
        current = Some(g);
    }
    chosen
}

/// RSS of a model recomputed from its own predictions.
pub fn model_rss(model: &marsnet::Model, data: &Data) -> f64 {
    data.rows()
        .zip(data.targets())
        .map(|(x, &y)| (model.eval(x).unwrap() - y).powi(2))
        .sum()
}

/// Random network of the given widths: ReLU hidden layers, linear head,
/// weights and biases uniform in `[-1, 1]`.
pub fn random_network(widths: &[usize], seed: u64) -> DenseNetwork<f64> {
    let mut r = rng(seed);
    let last = widths.len() - 2;
    let layers = widths
        .windows(2)
        .enumerate()
        .map(|(k, w)| {
            let act = if k == last { Activation::Identity } else { Activation::Relu };
            let weights = (0..w[0] * w[1]).map(|_| r.gen_range(-1.0..1.0)).collect();
            let bias = (0..w[1]).map(|_| r.gen_range(-1.0..1.0)).collect();
            Layer::new(w[1], w[0], weights, bias, act).unwrap()
        })
        .collect();
    DenseNetwork::new(layers).unwrap()
}

/// Plain reference forward pass, written against the layer fields only.
pub fn reference_forward(net: &DenseNetwork<f64>, x: &[f64]) -> Vec<f64> {
    let mut a = x.to_vec();
    for l in &net.layers {
        a = (0..l.rows)
            .map(|r| {
                let z = l.bias[r] + (0..l.cols).map(|c| l.weights[r * l.cols + c] * a[c]).sum::<f64>();
                match l.activation {
                    Activation::Relu => hinge(z),
                    Activation::Identity => z,
                }
            })
            .collect();
    }
    a
}

/// A model with `m` distinct hinges on `[0, 1]^d`, built directly rather than
/// fitted.
pub fn random_model(d: usize, m: usize, seed: u64) -> marsnet::Model {
    let mut r = rng(seed);
    let mut terms: Vec<Term<f64>> = Vec::with_capacity(m);
    while terms.len() < m {
        let direction = if r.gen() { Direction::Positive } else { Direction::Negative };
        let basis = BasisFunction::new(r.gen_range(0..d), r.gen::<f64>(), direction);
        if terms.iter().all(|t| t.basis != basis) {
            terms.push(Term { basis, coef: r.gen_range(-3.0..3.0) });
        }
    }
    marsnet::Model::from_terms(r.gen_range(-1.0..1.0), terms, d).unwrap()
}

/// Random lattice with `m` groups of up to `s` pieces each, coefficients in
/// `[-2, 2]`. Groups draw from a shared piece pool so indices repeat.
pub fn random_lattice(d: usize, m: usize, s: usize, seed: u64) -> LatticePwl<f64> {
    let mut r = rng(seed);
    let pool = r.gen_range(1..=m * s);
    let pieces = (0..pool)
        .map(|_| AffinePiece::new((0..=d).map(|_| r.gen_range(-2.0..2.0)).collect()))
        .collect();
    let groups = (0..m)
        .map(|_| {
            let size = r.gen_range(1..=s);
            (0..size).map(|_| r.gen_range(0..pool)).collect()
        })
        .collect();
    LatticePwl::new(d, pieces, groups).unwrap()
}

pub fn probe_points(d: usize, count: usize, lo: f64, hi: f64, seed: u64) -> Vec<Vec<f64>> {
    let mut r = rng(seed);
    (0..count).map(|_| (0..d).map(|_| r.gen_range(lo..hi)).collect()).collect()
}

pub fn loss(net: &DenseNetwork<f64>, xs: &[Vec<f64>], ys: &[Vec<f64>]) -> f64 {
    let preds: Vec<Vec<f64>> = xs.iter().map(|x| net.forward(x).unwrap()).collect();
    mse_loss(&preds, ys).unwrap()
}

/// Smallest |pre-activation| over all ReLU units and inputs.
pub fn kink_margin(net: &DenseNetwork<f64>, xs: &[Vec<f64>]) -> f64 {
    let mut margin = f64::INFINITY;
    for x in xs {
        let mut a = x.clone();
        for l in &net.layers {
            let z: Vec<f64> = (0..l.rows)
                .map(|r| l.bias[r] + (0..l.cols).map(|c| l.weights[r * l.cols + c] * a[c]).sum::<f64>())
                .collect();
            if l.activation == Activation::Relu {
                margin = z.iter().fold(margin, |m, v| m.min(v.abs()));
            }
            a = z.iter().map(|&v| if l.activation == Activation::Relu { v.max(0.0) } else { v }).collect();
        }
    }
    margin
}

/// Random small problem whose inputs sit at least `1e-3` away from every
/// ReLU kink, so that central differences with step `1e-6` never straddle one.
pub fn gradient_case(seed: u64) -> (DenseNetwork<f64>, Vec<Vec<f64>>, Vec<Vec<f64>>) {
    let mut r = rng(seed);
    loop {
        let d = r.gen_range(1..=4);
        let depth = r.gen_range(1..=3);
        let mut widths = vec![d];
        widths.extend((0..depth).map(|_| r.gen_range(1..=6)));
        widths.push(r.gen_range(1..=2));
        let net = random_network(&widths, r.gen());
        let n = r.gen_range(1..=8);
        let xs = probe_points(d, n, -2.0, 2.0, r.gen());
        let ys = probe_points(widths[widths.len() - 1], n, -1.0, 1.0, r.gen());
        if kink_margin(&net, &xs) > 1e-3 {
            return (net, xs, ys);
        }
    }
}

/// Largest relative gap between reverse-mode gradients and central
/// differences with step `1e-6` over every parameter of one random case.
/// Gradients below `1e-3` in magnitude are compared on an absolute scale.
pub fn max_gradient_error(seed: u64) -> f64 {
    let h = 1e-6;
    let (net, xs, ys) = gradient_case(seed);
    let g = gradients(&net, &xs, &ys).unwrap();
    let mut worst = 0.0f64;
    for k in 0..net.layers.len() {
        let nw = net.layers[k].weights.len();
        for p in 0..nw + net.layers[k].bias.len() {
            let nudge = |delta: f64| {
                let mut m = net.clone();
                let l = &mut m.layers[k];
                if p < nw {
                    l.weights[p] += delta;
                } else {
                    l.bias[p - nw] += delta;
                }
                loss(&m, &xs, &ys)
            };
            let fd = (nudge(h) - nudge(-h)) / (2.0 * h);
            let an = if p < nw { g.weights[k][p] } else { g.bias[k][p - nw] };
            worst = worst.max((an - fd).abs() / an.abs().max(fd.abs()).max(1e-3));
        }
    }
    worst
}

/// GCV of a model recomputed from its predictions.
pub fn model_gcv(model: &marsnet::Model, data: &Data, penalty: f64) -> Option<f64> {
    gcv_score(model_rss(model, data), model.n_terms(), model.distinct_knots(), penalty, data.n_samples())
}

/// GCV of the intercept-only model, the scale of the near-tie margin.
pub fn intercept_gcv(data: &Data, penalty: f64) -> f64 {
    let n = data.n_samples() as f64;
    let mean = data.targets().iter().sum::<f64>() / n;
    let rss: f64 = data.targets().iter().map(|y| (y - mean).powi(2)).sum();
    gcv_score(rss, 0, 0, penalty, data.n_samples()).unwrap_or(rss)
}

/// Pruning optimality: the returned model's GCV does not exceed the
/// unpruned model's, up to the near-tie margin that lets pruning prefer the
/// smaller of two equally scored models.
pub fn pruned_not_worse(data: &Data, pruned: &marsnet::Model, unpruned: &marsnet::Model, penalty: f64) -> bool {
    match (model_gcv(pruned, data, penalty), model_gcv(unpruned, data, penalty)) {
        (Some(after), Some(before)) => !beats(before, after, intercept_gcv(data, penalty)),
        (Some(_), None) => true,
        (None, _) => false,
    }
}
