//! Lattice-form piecewise-linear functions `min_i max_{j in s_i} [1 x^T] theta_j`
//! and their compilation into ReLU networks.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::net::{Activation, DenseNetwork, Layer};
use crate::scalar::Scalar;

/// `theta[0] + theta[1..] . x`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct AffinePiece<T> {
    pub theta: Vec<T>,
}

impl<T: Scalar> AffinePiece<T> {
    pub fn new(theta: Vec<T>) -> Self {
        Self { theta }
    }

    pub fn dim(&self) -> usize {
        self.theta.len().saturating_sub(1)
    }

    pub fn eval(&self, x: &[T]) -> Result<T> {
        if x.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: x.len(),
            });
        }
        Ok(self.eval_unchecked(x))
    }

    fn eval_unchecked(&self, x: &[T]) -> T {
        self.theta[1..]
            .iter()
            .zip(x)
            .fold(self.theta[0], |acc, (&a, &v)| acc + a * v)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LatticePwl<T> {
    pub d: usize,
    pub pieces: Vec<AffinePiece<T>>,
    pub groups: Vec<Vec<usize>>,
}

impl<T: Scalar> LatticePwl<T> {
    pub fn new(d: usize, pieces: Vec<AffinePiece<T>>, groups: Vec<Vec<usize>>) -> Result<Self> {
        let l = Self { d, pieces, groups };
        l.validate()?;
        Ok(l)
    }

    pub fn validate(&self) -> Result<()> {
        if self.groups.is_empty() {
            return Err(Error::InvalidLattice("no groups".into()));
        }
        for (i, p) in self.pieces.iter().enumerate() {
            if p.theta.len() != self.d + 1 {
                return Err(Error::InvalidLattice(format!(
                    "piece {i} has {} coefficients, expected {}",
                    p.theta.len(),
                    self.d + 1
                )));
            }
            if p.theta.iter().any(|v| !v.is_finite()) {
                return Err(Error::InvalidLattice(format!("piece {i} has a non-finite coefficient")));
            }
        }
        for (i, g) in self.groups.iter().enumerate() {
            if g.is_empty() {
                return Err(Error::InvalidLattice(format!("group {i} is empty")));
            }
            if let Some(&j) = g.iter().find(|&&j| j >= self.pieces.len()) {
                return Err(Error::InvalidLattice(format!(
                    "group {i} refers to piece {j} of {}",
                    self.pieces.len()
                )));
            }
        }
        Ok(())
    }

    pub fn eval(&self, x: &[T]) -> Result<T> {
        if x.len() != self.d {
            return Err(Error::DimensionMismatch {
                expected: self.d,
                found: x.len(),
            });
        }
        Ok(self
            .groups
            .iter()
            .map(|g| {
                g.iter()
                    .map(|&j| self.pieces[j].eval_unchecked(x))
                    .fold(T::neg_infinity(), T::max)
            })
            .fold(T::infinity(), T::min))
    }

    /// `ceil(log2 M) + ceil(log2 max |s_i|)`.
    pub fn depth_bound(&self) -> usize {
        let widest = self.groups.iter().map(Vec::len).max().unwrap_or(1);
        ceil_log2(self.groups.len()) + ceil_log2(widest)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let l: Self = serde_json::from_str(s)?;
        l.validate()?;
        Ok(l)
    }
}

pub fn eval_lattice<T: Scalar>(lattice: &LatticePwl<T>, x: &[T]) -> Result<T> {
    lattice.eval(x)
}

/// Maximum of affine functions.
pub fn max_affine_eval<T: Scalar>(pieces: &[AffinePiece<T>], x: &[T]) -> Result<T> {
    if pieces.is_empty() {
        return Err(Error::EmptyInput);
    }
    pieces.iter().try_fold(T::neg_infinity(), |m, p| Ok(m.max(p.eval(x)?)))
}

fn ceil_log2(n: usize) -> usize {
    n.max(1).next_power_of_two().trailing_zeros() as usize
}

fn relu_layers<T>(net: &DenseNetwork<T>) -> usize {
    net.layers.iter().filter(|l| l.activation == Activation::Relu).count()
}

/// The affine network computing one piece.
pub fn affine_network<T: Scalar>(piece: &AffinePiece<T>) -> Result<DenseNetwork<T>> {
    let d = piece.dim();
    if d == 0 {
        return Err(Error::InvalidLattice("piece has no input dimension".into()));
    }
    DenseNetwork::new(vec![Layer::new(
        1,
        d,
        piece.theta[1..].to_vec(),
        vec![piece.theta[0]],
        Activation::Identity,
    )?])
}

/// Turns the linear head into a ReLU layer followed by a new linear head,
/// `u = R(u) - R(-u)`, adding one ReLU stage without changing the function.
fn pass_through<T: Scalar>(net: &DenseNetwork<T>) -> DenseNetwork<T> {
    let mut out = net.clone();
    let head = out.layers.pop().expect("network has layers");
    let k = head.rows;
    let mut relu = Layer::zeros(2 * k, head.cols, Activation::Relu);
    let mut linear = Layer::zeros(k, 2 * k, Activation::Identity);
    for r in 0..k {
        for c in 0..head.cols {
            let w = head.weight(r, c);
            *relu.weight_mut(r, c) = w;
            *relu.weight_mut(k + r, c) = -w;
        }
        relu.bias[r] = head.bias[r];
        relu.bias[k + r] = -head.bias[r];
        *linear.weight_mut(r, r) = T::one();
        *linear.weight_mut(r, k + r) = -T::one();
    }
    out.layers.push(relu);
    out.layers.push(linear);
    out
}

/// Runs `a` and `b` side by side on the same input, concatenating outputs.
/// The shallower network is padded with pass-through stages.
fn parallel<T: Scalar>(a: &DenseNetwork<T>, b: &DenseNetwork<T>) -> Result<DenseNetwork<T>> {
    if a.input_dim() != b.input_dim() {
        return Err(Error::DimensionMismatch {
            expected: a.input_dim(),
            found: b.input_dim(),
        });
    }
    let (mut a, mut b) = (a.clone(), b.clone());
    while a.depth() < b.depth() {
        a = pass_through(&a);
    }
    while b.depth() < a.depth() {
        b = pass_through(&b);
    }
    let layers = a
        .layers
        .iter()
        .zip(&b.layers)
        .enumerate()
        .map(|(k, (la, lb))| {
            let rows = la.rows + lb.rows;
            let cols = if k == 0 { la.cols } else { la.cols + lb.cols };
            let off = if k == 0 { 0 } else { la.cols };
            let mut l = Layer::zeros(rows, cols, la.activation);
            for r in 0..la.rows {
                l.weights[r * cols..r * cols + la.cols].copy_from_slice(la.row(r));
                l.bias[r] = la.bias[r];
            }
            for r in 0..lb.rows {
                let row = la.rows + r;
                l.weights[row * cols + off..row * cols + off + lb.cols].copy_from_slice(lb.row(r));
                l.bias[row] = lb.bias[r];
            }
            l
        })
        .collect();
    DenseNetwork::new(layers)
}

#[derive(Clone, Copy)]
enum Gadget {
    Max,
    Min,
}

/// Folds the two-output head `(u, v)` into
/// `R((u-v)/2) + R((v-u)/2)` and `R((u+v)/2) - R(-(u+v)/2)`.
fn gadget<T: Scalar>(pair: DenseNetwork<T>, kind: Gadget) -> Result<DenseNetwork<T>> {
    let mut out = pair;
    let head = out.layers.pop().expect("network has layers");
    debug_assert_eq!(head.rows, 2);
    let half = T::lit(0.5);
    // rows: (u-v)/2, (v-u)/2, (u+v)/2, -(u+v)/2
    let mix = [(half, -half), (-half, half), (half, half), (-half, -half)];
    let mut relu = Layer::zeros(4, head.cols, Activation::Relu);
    for (r, &(cu, cv)) in mix.iter().enumerate() {
        for c in 0..head.cols {
            *relu.weight_mut(r, c) = cu * head.weight(0, c) + cv * head.weight(1, c);
        }
        relu.bias[r] = cu * head.bias[0] + cv * head.bias[1];
    }
    let s = match kind {
        Gadget::Max => T::one(),
        Gadget::Min => -T::one(),
    };
    let linear = Layer::new(1, 4, vec![s, s, T::one(), -T::one()], vec![T::zero()], Activation::Identity)?;
    out.layers.push(relu);
    out.layers.push(linear);
    DenseNetwork::new(out.layers)
}

fn check_scalar_output<T: Scalar>(net: &DenseNetwork<T>) -> Result<()> {
    if net.output_dim() != 1 {
        return Err(Error::DimensionMismatch {
            expected: 1,
            found: net.output_dim(),
        });
    }
    Ok(())
}

/// Network computing `max(left(x), right(x))` with one extra ReLU stage.
pub fn max_gadget<T: Scalar>(left: &DenseNetwork<T>, right: &DenseNetwork<T>) -> Result<DenseNetwork<T>> {
    check_scalar_output(left)?;
    check_scalar_output(right)?;
    gadget(parallel(left, right)?, Gadget::Max)
}

/// Network computing `min(left(x), right(x))` with one extra ReLU stage.
pub fn min_gadget<T: Scalar>(left: &DenseNetwork<T>, right: &DenseNetwork<T>) -> Result<DenseNetwork<T>> {
    check_scalar_output(left)?;
    check_scalar_output(right)?;
    gadget(parallel(left, right)?, Gadget::Min)
}

/// Balanced binary tournament; an odd count gives one side a bye.
fn tournament<T: Scalar>(mut nets: Vec<DenseNetwork<T>>, kind: Gadget) -> Result<DenseNetwork<T>> {
    if nets.len() == 1 {
        return Ok(nets.pop().expect("one network"));
    }
    let right = nets.split_off(nets.len().div_ceil(2));
    let (l, r) = (tournament(nets, kind)?, tournament(right, kind)?);
    match kind {
        Gadget::Max => max_gadget(&l, &r),
        Gadget::Min => min_gadget(&l, &r),
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DepthReport {
    /// ReLU stages, i.e. gadget levels on the longest path.
    pub relu_layers: usize,
    /// All layers including the linear head.
    pub affine_layers: usize,
    /// `ceil(log2 M) + ceil(log2 max |s_i|)`.
    pub bound: usize,
    pub groups: usize,
    pub max_group: usize,
}

/// Compiles `lattice` into a ReLU network: per group a max tournament over
/// its pieces, then a min tournament over the groups.
pub fn compile_lattice<T: Scalar>(lattice: &LatticePwl<T>) -> Result<(DenseNetwork<T>, DepthReport)> {
    lattice.validate()?;
    let group_nets = lattice
        .groups
        .iter()
        .map(|g| {
            let leaves = g
                .iter()
                .map(|&j| affine_network(&lattice.pieces[j]))
                .collect::<Result<Vec<_>>>()?;
            tournament(leaves, Gadget::Max)
        })
        .collect::<Result<Vec<_>>>()?;
    let net = tournament(group_nets, Gadget::Min)?;
    let report = DepthReport {
        relu_layers: relu_layers(&net),
        affine_layers: net.depth(),
        bound: lattice.depth_bound(),
        groups: lattice.groups.len(),
        max_group: lattice.groups.iter().map(Vec::len).max().unwrap_or(0),
    };
    Ok((net, report))
}
