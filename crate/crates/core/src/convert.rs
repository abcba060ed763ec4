//! Exact MARS-to-network conversion, function-preserving reshaping and
//! parameter drift reports.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::net::{Activation, DenseNetwork, Layer};
use crate::scalar::Scalar;
use crate::spline::{BasisFunction, Direction, MarsModel};

/// Probe points used by [`mars_to_network`] to measure its own exactness.
const PROBES: usize = 1000;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConversionReport<T> {
    pub hidden_width: usize,
    /// Source basis of each hidden unit; `None` for the placeholder unit of an
    /// intercept-only model.
    pub units: Vec<Option<BasisFunction<T>>>,
    /// Largest `|network(x) - model(x)|` over the probe points.
    pub max_deviation: T,
    pub probes: usize,
}

/// Builds the `d -> max(M, 1) -> 1` ReLU network computing exactly the same
/// function as `model`.
///
/// Hidden unit `i` reads only dimension `d_i`, with weight `+1` and bias `-t_i`
/// for `R(x - t)` and weight `-1` and bias `+t_i` for `R(t - x)`. The output
/// layer carries the coefficients and the intercept.
pub fn mars_to_network<T: Scalar>(model: &MarsModel<T>) -> Result<(DenseNetwork<T>, ConversionReport<T>)> {
    model.validate()?;
    if model.d == 0 {
        return Err(Error::InvalidNetwork("model has zero input dimension".into()));
    }
    let width = model.terms.len().max(1);
    let mut hidden = Layer::zeros(width, model.d, Activation::Relu);
    let mut output = Layer::zeros(1, width, Activation::Identity);
    output.bias[0] = model.intercept;
    for (i, term) in model.terms.iter().enumerate() {
        let b = term.basis;
        let (w, bias) = match b.direction {
            Direction::Positive => (T::one(), -b.knot),
            Direction::Negative => (-T::one(), b.knot),
        };
        *hidden.weight_mut(i, b.dim) = w;
        hidden.bias[i] = bias;
        output.weights[i] = term.coef;
    }
    let net = DenseNetwork::new(vec![hidden, output])?;

    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let mut max_deviation = T::zero();
    let mut x = vec![T::zero(); model.d];
    for _ in 0..PROBES {
        for v in &mut x {
            *v = T::lit(rng.gen_range(-2.0..3.0));
        }
        let dev = (net.forward_unchecked(&x)[0] - model.eval_unchecked(&x)).abs();
        max_deviation = max_deviation.max(dev);
    }
    let units = if model.terms.is_empty() {
        vec![None]
    } else {
        model.terms.iter().map(|t| Some(t.basis)).collect()
    };
    Ok((
        net,
        ConversionReport {
            hidden_width: width,
            units,
            max_deviation,
            probes: PROBES,
        },
    ))
}

/// Appends `extra` units to hidden layer `layer` with zero incoming weights,
/// zero bias and zero outgoing weights. The function is unchanged exactly.
pub fn widen<T: Scalar>(net: &DenseNetwork<T>, layer: usize, extra: usize) -> Result<DenseNetwork<T>> {
    widen_impl(net, layer, extra, None)
}

/// [`widen`] with the new units' incoming weights drawn from `U(-eta, eta)`.
///
/// Outgoing weights stay zero, so the represented function is still
/// unchanged; the new units are however live and receive gradient.
pub fn widen_with_jitter<T: Scalar>(
    net: &DenseNetwork<T>,
    layer: usize,
    extra: usize,
    eta: f64,
    seed: u64,
) -> Result<DenseNetwork<T>> {
    if !(eta >= 0.0 && eta.is_finite()) {
        return Err(Error::InvalidReshape("jitter scale must be finite and >= 0".into()));
    }
    widen_impl(net, layer, extra, Some((eta, seed)))
}

fn widen_impl<T: Scalar>(
    net: &DenseNetwork<T>,
    layer: usize,
    extra: usize,
    jitter: Option<(f64, u64)>,
) -> Result<DenseNetwork<T>> {
    if layer + 1 >= net.layers.len() {
        return Err(Error::InvalidReshape(format!(
            "layer {layer} is not a hidden layer of a {}-layer network",
            net.layers.len()
        )));
    }
    let mut out = net.clone();
    if extra == 0 {
        return Ok(out);
    }
    let cur = &mut out.layers[layer];
    let cols = cur.cols;
    cur.weights.resize((cur.rows + extra) * cols, T::zero());
    if let Some((eta, seed)) = jitter {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let start = cur.rows * cols;
        for w in &mut cur.weights[start..] {
            if eta > 0.0 {
                *w = T::lit(rng.gen_range(-eta..eta));
            }
        }
    }
    cur.bias.resize(cur.rows + extra, T::zero());
    cur.rows += extra;

    let next = &mut out.layers[layer + 1];
    let old_cols = next.cols;
    let new_cols = old_cols + extra;
    let mut weights = vec![T::zero(); next.rows * new_cols];
    for r in 0..next.rows {
        weights[r * new_cols..r * new_cols + old_cols].copy_from_slice(&next.weights[r * old_cols..(r + 1) * old_cols]);
    }
    next.weights = weights;
    next.cols = new_cols;
    out.validate()?;
    Ok(out)
}

/// Inserts an identity ReLU layer after the first `position` layers.
///
/// The layer before the insertion point must be ReLU so that its outputs are
/// nonnegative and the new layer acts as the identity on them; in particular
/// `position = 0` (directly on the raw input) is rejected.
pub fn deepen<T: Scalar>(net: &DenseNetwork<T>, position: usize) -> Result<DenseNetwork<T>> {
    if position == 0 {
        return Err(Error::InvalidReshape(
            "cannot deepen directly after the input, which may be negative".into(),
        ));
    }
    let prev = net.layers.get(position - 1).ok_or_else(|| {
        Error::InvalidReshape(format!("position {position} exceeds depth {}", net.layers.len()))
    })?;
    if prev.activation != Activation::Relu {
        return Err(Error::InvalidReshape(format!(
            "layer {} is not ReLU, so its outputs may be negative",
            position - 1
        )));
    }
    let mut out = net.clone();
    out.layers.insert(position, Layer::identity(prev.rows, Activation::Relu));
    Ok(out)
}

/// Grows `net` to `target` widths `[a_1, h_1, ..., h_k, a_l]` by inserting
/// identity layers after the last hidden layer and then widening each hidden
/// layer.
pub fn reshape_to<T: Scalar>(net: &DenseNetwork<T>, target: &[usize]) -> Result<DenseNetwork<T>> {
    let current = net.widths();
    if target.len() < current.len() {
        return Err(Error::InvalidReshape(format!(
            "target depth {} is below current depth {}",
            target.len() - 1,
            current.len() - 1
        )));
    }
    if target[0] != current[0] || target[target.len() - 1] != current[current.len() - 1] {
        return Err(Error::InvalidReshape("input and output widths must not change".into()));
    }
    let hidden = current.len() - 2;
    let extra_layers = target.len() - current.len();
    if extra_layers > 0 && hidden == 0 {
        return Err(Error::InvalidReshape("a network without hidden layers cannot be deepened".into()));
    }
    let mut out = net.clone();
    for _ in 0..extra_layers {
        out = deepen(&out, hidden)?;
    }
    let widths = out.widths();
    for k in 1..widths.len() - 1 {
        if target[k] < widths[k] {
            return Err(Error::InvalidReshape(format!(
                "target width {} at hidden layer {} is below the current {}",
                target[k],
                k - 1,
                widths[k]
            )));
        }
    }
    for k in 1..widths.len() - 1 {
        out = widen(&out, k - 1, target[k] - widths[k])?;
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LayerShift<T> {
    pub layer: usize,
    /// `||W_trained - W_initial||_F`.
    pub w_delta_frobenius: T,
    pub b_delta_norm: T,
    pub w_initial_frobenius: T,
    /// `w_delta_frobenius / (w_initial_frobenius + 1e-12)`.
    pub relative_shift: T,
    /// Largest single weight or bias change.
    pub max_abs_change: T,
    /// Largest change among weights that were nonzero initially.
    pub max_abs_change_on_support: T,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ShiftReport<T> {
    pub layers: Vec<LayerShift<T>>,
}

impl<T: Scalar> ShiftReport<T> {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("layer,w_delta_frobenius,b_delta_norm,relative_shift,max_abs_change\n");
        for l in &self.layers {
            out.push_str(&format!(
                "{},{},{},{},{}\n",
                l.layer, l.w_delta_frobenius, l.b_delta_norm, l.relative_shift, l.max_abs_change
            ));
        }
        out
    }
}

/// Per-layer parameter drift between two networks of identical shape.
pub fn parameter_shift_report<T: Scalar>(initial: &DenseNetwork<T>, trained: &DenseNetwork<T>) -> Result<ShiftReport<T>> {
    if initial.widths() != trained.widths() {
        return Err(Error::InvalidNetwork(format!(
            "shapes differ: {:?} vs {:?}",
            initial.widths(),
            trained.widths()
        )));
    }
    let eps = T::lit(1e-12);
    let layers = initial
        .layers
        .iter()
        .zip(&trained.layers)
        .enumerate()
        .map(|(layer, (a, b))| {
            let mut dw = T::zero();
            let mut w0 = T::zero();
            let mut max_abs = T::zero();
            let mut max_support = T::zero();
            for (&x, &y) in a.weights.iter().zip(&b.weights) {
                let d = y - x;
                dw += d * d;
                w0 += x * x;
                max_abs = max_abs.max(d.abs());
                if x != T::zero() {
                    max_support = max_support.max(d.abs());
                }
            }
            let mut db = T::zero();
            for (&x, &y) in a.bias.iter().zip(&b.bias) {
                let d = y - x;
                db += d * d;
                max_abs = max_abs.max(d.abs());
            }
            let (dw, w0) = (dw.sqrt(), w0.sqrt());
            LayerShift {
                layer,
                w_delta_frobenius: dw,
                b_delta_norm: db.sqrt(),
                w_initial_frobenius: w0,
                relative_shift: dw / (w0 + eps),
                max_abs_change: max_abs,
                max_abs_change_on_support: max_support,
            }
        })
        .collect();
    Ok(ShiftReport { layers })
}
