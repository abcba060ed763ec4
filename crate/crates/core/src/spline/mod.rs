//! First-order MARS: an intercept plus a weighted sum of single-variable
//! ramps `R(x_j - t)` / `R(t - x_j)`, selected by a forward pass over
//! reflection pairs and pruned backwards under generalized cross-validation.

mod forward;
mod importance;
mod prune;

use std::time::Instant;

use serde::{Deserialize, Serialize};

pub use forward::{candidate_knots, forward_pass, ForwardStep};
pub use importance::{feature_importance, DimensionImportance, ImportanceReport};
pub use prune::{backward_prune, Pruned};

use crate::error::{Error, Result};
use crate::scalar::{relu, Scalar};
use crate::data::Dataset;

/// The ramp function `max(x, 0)`.
pub fn ramp<T: Scalar>(x: T) -> T {
    relu(x)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    /// `R(x_dim - knot)`
    Positive,
    /// `R(knot - x_dim)`
    Negative,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BasisFunction<T> {
    pub dim: usize,
    pub knot: T,
    pub direction: Direction,
}

impl<T: Scalar> BasisFunction<T> {
    pub fn new(dim: usize, knot: T, direction: Direction) -> Self {
        Self { dim, knot, direction }
    }

    pub fn eval(&self, x: &[T]) -> Result<T> {
        let v = x.get(self.dim).ok_or(Error::DimensionMismatch {
            expected: self.dim + 1,
            found: x.len(),
        })?;
        Ok(self.value(*v))
    }

    /// Evaluates at coordinate value `v` of this basis' dimension.
    pub fn value(&self, v: T) -> T {
        match self.direction {
            Direction::Positive => ramp(v - self.knot),
            Direction::Negative => ramp(self.knot - v),
        }
    }

    fn same_hinge(&self, other: &Self) -> bool {
        self.dim == other.dim && self.knot == other.knot && self.direction == other.direction
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Term<T> {
    #[serde(flatten)]
    pub basis: BasisFunction<T>,
    pub coef: T,
}

/// Sizes and criterion value of one model visited during fitting.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GcvRecord<T> {
    /// Basis count `M`, intercept excluded.
    pub terms: usize,
    /// Distinct `(dimension, knot)` pairs among the terms.
    pub knots: usize,
    pub rss: T,
    /// Effective parameter count `C(M)`.
    pub params: T,
    pub samples: usize,
    /// `None` when `params >= samples`.
    pub gcv: Option<T>,
}

impl<T: Scalar> GcvRecord<T> {
    pub fn new(terms: usize, knots: usize, rss: T, penalty: f64, samples: usize) -> Self {
        let params = effective_params(terms, knots, T::lit(penalty));
        Self {
            terms,
            knots,
            rss,
            params,
            samples,
            gcv: gcv_from_rss(rss, params, samples).ok(),
        }
    }

    pub fn recompute(&self) -> Option<T> {
        gcv_from_rss(self.rss, self.params, self.samples).ok()
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct GcvTrail<T> {
    pub forward: Vec<GcvRecord<T>>,
    pub backward: Vec<GcvRecord<T>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FitConfig {
    /// Upper limit on the basis count, intercept excluded.
    pub max_terms: usize,
    /// Charge per distinct knot in `C(M)`.
    pub knot_penalty: f64,
    /// Caps candidate knots per dimension to evenly spaced order statistics.
    pub knot_subsample: Option<usize>,
    /// Leading fraction of the training rows the spline is fitted on.
    pub train_fraction: f64,
    /// Score candidates by orthogonal updates instead of a full refit each.
    pub incremental: bool,
}

impl Default for FitConfig {
    fn default() -> Self {
        Self {
            max_terms: 20,
            knot_penalty: 3.0,
            knot_subsample: None,
            train_fraction: 1.0,
            incremental: false,
        }
    }
}

impl FitConfig {
    pub fn validate(&self) -> Result<()> {
        if self.max_terms < 1 {
            return Err(Error::InvalidConfig("max_terms must be >= 1".into()));
        }
        if !(self.knot_penalty >= 0.0 && self.knot_penalty.is_finite()) {
            return Err(Error::InvalidConfig("knot_penalty must be finite and >= 0".into()));
        }
        if matches!(self.knot_subsample, Some(k) if k < 2) {
            return Err(Error::InvalidConfig("knot_subsample must be >= 2".into()));
        }
        if !(self.train_fraction > 0.0 && self.train_fraction <= 1.0) {
            return Err(Error::InvalidConfig("train_fraction must lie in (0, 1]".into()));
        }
        Ok(())
    }
}

/// `f(x) = intercept + sum coef_m * h_m(x)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MarsModel<T> {
    pub intercept: T,
    pub terms: Vec<Term<T>>,
    pub d: usize,
    #[serde(default)]
    pub fit_config: Option<FitConfig>,
    #[serde(default)]
    pub gcv_trail: GcvTrail<T>,
}

impl<T: Scalar> MarsModel<T> {
    pub fn intercept_only(intercept: T, d: usize) -> Self {
        Self {
            intercept,
            terms: Vec::new(),
            d,
            fit_config: None,
            gcv_trail: GcvTrail::default(),
        }
    }

    pub fn from_terms(intercept: T, terms: Vec<Term<T>>, d: usize) -> Result<Self> {
        let m = Self {
            terms,
            ..Self::intercept_only(intercept, d)
        };
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<()> {
        if !self.intercept.is_finite() || self.terms.iter().any(|t| !t.coef.is_finite() || !t.basis.knot.is_finite()) {
            return Err(Error::InvalidConfig("model has non-finite parameters".into()));
        }
        for (i, t) in self.terms.iter().enumerate() {
            if t.basis.dim >= self.d {
                return Err(Error::DimensionMismatch {
                    expected: self.d,
                    found: t.basis.dim + 1,
                });
            }
            if self.terms[..i].iter().any(|o| o.basis.same_hinge(&t.basis)) {
                return Err(Error::InvalidConfig(format!(
                    "duplicate basis on dimension {} at knot {}",
                    t.basis.dim, t.basis.knot
                )));
            }
        }
        Ok(())
    }

    pub fn n_terms(&self) -> usize {
        self.terms.len()
    }

    pub fn eval(&self, x: &[T]) -> Result<T> {
        if x.len() != self.d {
            return Err(Error::DimensionMismatch {
                expected: self.d,
                found: x.len(),
            });
        }
        Ok(self.eval_unchecked(x))
    }

    pub(crate) fn eval_unchecked(&self, x: &[T]) -> T {
        self.terms
            .iter()
            .fold(self.intercept, |acc, t| acc + t.coef * t.basis.value(x[t.basis.dim]))
    }

    pub fn predict(&self, data: &Dataset<T>) -> Result<Vec<T>> {
        data.rows().map(|x| self.eval(x)).collect()
    }

    pub fn mse(&self, data: &Dataset<T>) -> Result<T> {
        let pred = self.predict(data)?;
        let n = T::lit(data.n_samples() as f64);
        Ok(pred
            .iter()
            .zip(data.targets())
            .map(|(&p, &y)| (p - y) * (p - y))
            .sum::<T>()
            / n)
    }

    pub fn distinct_knots(&self) -> usize {
        count_knots(self.terms.iter().map(|t| &t.basis))
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let m: Self = serde_json::from_str(s)?;
        m.validate()?;
        Ok(m)
    }
}

pub(crate) fn count_knots<'a, T: Scalar>(bases: impl Iterator<Item = &'a BasisFunction<T>>) -> usize {
    let mut seen: Vec<(usize, T)> = Vec::new();
    for b in bases {
        if !seen.iter().any(|&(d, k)| d == b.dim && k == b.knot) {
            seen.push((b.dim, b.knot));
        }
    }
    seen.len()
}

/// `C(M) = (M + 1) + penalty * knots`.
pub fn effective_params<T: Scalar>(terms: usize, knots: usize, penalty: T) -> T {
    T::lit((terms + 1) as f64) + penalty * T::lit(knots as f64)
}

/// `RSS / (1 - C/N)^2`.
pub fn gcv_from_rss<T: Scalar>(rss: T, params: T, samples: usize) -> Result<T> {
    let n = T::lit(samples as f64);
    if samples == 0 || params >= n {
        return Err(Error::GcvUndefined {
            params: params.as_f64(),
            samples,
        });
    }
    let denom = T::one() - params / n;
    Ok(rss / (denom * denom))
}

pub fn gcv<T: Scalar>(targets: &[T], predictions: &[T], params: T, samples: usize) -> Result<T> {
    if targets.len() != predictions.len() {
        return Err(Error::DimensionMismatch {
            expected: targets.len(),
            found: predictions.len(),
        });
    }
    let rss = targets
        .iter()
        .zip(predictions)
        .map(|(&y, &p)| (y - p) * (y - p))
        .sum();
    gcv_from_rss(rss, params, samples)
}

/// `candidate` beats `incumbent` only by more than the tie tolerance,
/// measured against `scale` (the intercept-only criterion value).
pub(crate) fn improves<T: Scalar>(candidate: T, incumbent: T, scale: T) -> bool {
    candidate < incumbent - T::tie_tolerance() * incumbent.abs().max(scale)
}

pub(crate) fn design_columns<T: Scalar>(data: &Dataset<T>, bases: &[BasisFunction<T>]) -> Vec<Vec<T>> {
    let n = data.n_samples();
    let mut cols = Vec::with_capacity(bases.len() + 1);
    cols.push(vec![T::one(); n]);
    for b in bases {
        cols.push(basis_column(data, b));
    }
    cols
}

pub(crate) fn basis_column<T: Scalar>(data: &Dataset<T>, b: &BasisFunction<T>) -> Vec<T> {
    (0..data.n_samples())
        .map(|i| b.value(data.feature(i, b.dim)))
        .collect()
}

/// Result of [`fit_mars`].
#[derive(Clone, Debug)]
pub struct MarsFit<T> {
    pub model: MarsModel<T>,
    /// Wall-clock seconds spent in the forward and backward passes.
    pub seconds: f64,
    /// Training-set predictions of the final least-squares solve.
    pub fitted: Vec<T>,
    /// Rows the spline was fitted on.
    pub samples: usize,
}

/// Forward pass followed by backward pruning on the leading
/// `config.train_fraction` of `train`.
pub fn fit_mars<T: Scalar>(train: &Dataset<T>, config: &FitConfig) -> Result<MarsFit<T>> {
    config.validate()?;
    let n = ((config.train_fraction * train.n_samples() as f64).floor() as usize).max(1);
    let subset;
    let data = if n < train.n_samples() {
        subset = train.head(n);
        &subset
    } else {
        train
    };

    let start = Instant::now();
    if data.n_samples() == 1 {
        let mut model = MarsModel::intercept_only(data.target(0), data.dim());
        model.fit_config = Some(config.clone());
        return Ok(MarsFit {
            model,
            seconds: start.elapsed().as_secs_f64(),
            fitted: vec![data.target(0)],
            samples: 1,
        });
    }
    let (steps, factor) = forward::forward_factored(data, config)?;
    let pruned = prune::prune_with(&steps, data, config, factor)?;
    let seconds = start.elapsed().as_secs_f64();

    let mut model = pruned.model;
    model.fit_config = Some(config.clone());
    model.gcv_trail = GcvTrail {
        forward: steps.iter().map(|s| s.record).collect(),
        backward: pruned.records,
    };
    Ok(MarsFit {
        model,
        seconds,
        fitted: pruned.fitted,
        samples: data.n_samples(),
    })
}
