use super::{
    basis_column, count_knots, design_columns, effective_params, gcv_from_rss, improves, BasisFunction, Direction,
    FitConfig, GcvRecord, MarsModel, Term,
};
use crate::data::Dataset;
use crate::error::Result;
use crate::linalg::{least_squares_columns, Compressed};
use crate::scalar::{dot, norm_sq, Scalar};

/// One model visited by [`forward_pass`].
#[derive(Clone, Debug)]
pub struct ForwardStep<T> {
    pub model: MarsModel<T>,
    pub record: GcvRecord<T>,
    /// `(dimension, knot)` of the pair added at this step; `None` for the
    /// starting intercept-only model.
    pub added: Option<(usize, T)>,
}

/// Sorted distinct values usable as knots.
///
/// The largest value is dropped since its positive ramp vanishes on every
/// sample. With `subsample = Some(k)` at most `k` evenly spaced order
/// statistics of the remaining values are kept.
pub fn candidate_knots<T: Scalar>(values: impl IntoIterator<Item = T>, subsample: Option<usize>) -> Vec<T> {
    let mut v: Vec<T> = values.into_iter().collect();
    v.sort_unstable_by(|a, b| a.partial_cmp(b).expect("finite knot values"));
    v.dedup();
    v.pop();
    match subsample {
        Some(k) if k >= 2 && v.len() > k => {
            let last = (v.len() - 1) as f64;
            let mut picked: Vec<T> = (0..k)
                .map(|i| v[(i as f64 * last / (k - 1) as f64).round() as usize])
                .collect();
            picked.dedup();
            picked
        }
        _ => v,
    }
}

/// Scores candidate pairs against the current design.
trait Scorer<T: Scalar> {
    /// Training RSS after adding the pair at each of `knots` on `dim`.
    fn pair_rss(&mut self, dim: usize, knots: &[T]) -> Result<Vec<T>>;
    fn push_pair(&mut self, dim: usize, knot: T) -> Result<()>;
    fn rss(&self) -> T;
    /// Least-squares coefficients, intercept first.
    fn coefficients(&self) -> Result<Vec<T>>;
    /// Orthogonal compression of the current design, when maintained.
    fn factorization(&self) -> Option<Compressed<T>> {
        None
    }
}

/// Greedy forward selection of reflection pairs.
///
/// Returns the intercept-only model followed by one model per accepted pair.
/// Ties are broken towards the lowest dimension, then the smallest knot.
pub fn forward_pass<T: Scalar>(train: &Dataset<T>, config: &FitConfig) -> Result<Vec<ForwardStep<T>>> {
    Ok(forward_factored(train, config)?.0)
}

/// [`forward_pass`], also returning the incremental path's factorization of
/// the final design.
pub(super) fn forward_factored<T: Scalar>(
    train: &Dataset<T>,
    config: &FitConfig,
) -> Result<(Vec<ForwardStep<T>>, Option<Compressed<T>>)> {
    config.validate()?;
    let n = train.n_samples();
    let knots: Vec<Vec<T>> = (0..train.dim())
        .map(|j| candidate_knots((0..n).map(|i| train.feature(i, j)), config.knot_subsample))
        .collect();
    if config.incremental {
        let scorer = Incremental::new(train, &knots, config.max_terms + 1);
        run(train, config, &knots, scorer)
    } else {
        let scorer = FullRefit::new(train)?;
        run(train, config, &knots, scorer)
    }
}

fn run<T: Scalar>(
    train: &Dataset<T>,
    config: &FitConfig,
    knots: &[Vec<T>],
    mut scorer: impl Scorer<T>,
) -> Result<(Vec<ForwardStep<T>>, Option<Compressed<T>>)> {
    let n = train.n_samples();
    let d = train.dim();
    let penalty = T::lit(config.knot_penalty);

    let mut bases: Vec<BasisFunction<T>> = Vec::new();
    let mut used: Vec<(usize, T)> = Vec::new();
    let start = record_for(&bases, scorer.rss(), config, n);
    let scale = start.gcv.unwrap_or(start.rss);
    let mut steps = vec![ForwardStep {
        model: model_from(&bases, &scorer.coefficients()?, d),
        record: start,
        added: None,
    }];

    while bases.len() + 2 <= config.max_terms {
        let params = effective_params(bases.len() + 2, used.len() + 1, penalty);
        if params >= T::lit(n as f64) {
            break;
        }
        let mut best: Option<(usize, T, T)> = None;
        for (dim, all) in knots.iter().enumerate() {
            let open: Vec<T> = all
                .iter()
                .copied()
                .filter(|&t| !used.contains(&(dim, t)))
                .collect();
            if open.is_empty() {
                continue;
            }
            let rss = scorer.pair_rss(dim, &open)?;
            for (&t, &r) in open.iter().zip(&rss) {
                let g = gcv_from_rss(r.max(T::zero()), params, n)?;
                if best.map_or(true, |(_, _, bg)| improves(g, bg, scale)) {
                    best = Some((dim, t, g));
                }
            }
        }
        let Some((dim, knot, g)) = best else { break };
        let current = steps.last().and_then(|s| s.record.gcv);
        if current.is_some_and(|c| !improves(g, c, scale)) {
            break;
        }

        scorer.push_pair(dim, knot)?;
        bases.push(BasisFunction::new(dim, knot, Direction::Positive));
        bases.push(BasisFunction::new(dim, knot, Direction::Negative));
        used.push((dim, knot));
        steps.push(ForwardStep {
            model: model_from(&bases, &scorer.coefficients()?, d),
            record: record_for(&bases, scorer.rss(), config, n),
            added: Some((dim, knot)),
        });
    }
    Ok((steps, scorer.factorization()))
}

fn record_for<T: Scalar>(bases: &[BasisFunction<T>], rss: T, config: &FitConfig, n: usize) -> GcvRecord<T> {
    GcvRecord::new(bases.len(), count_knots(bases.iter()), rss, config.knot_penalty, n)
}

fn model_from<T: Scalar>(bases: &[BasisFunction<T>], coefs: &[T], d: usize) -> MarsModel<T> {
    let mut model = MarsModel::intercept_only(coefs[0], d);
    model.terms = bases
        .iter()
        .zip(&coefs[1..])
        .map(|(&basis, &coef)| Term { basis, coef })
        .collect();
    model
}

/// Refits every candidate design from scratch.
struct FullRefit<'a, T> {
    data: &'a Dataset<T>,
    columns: Vec<Vec<T>>,
    coefficients: Vec<T>,
    rss: T,
}

impl<'a, T: Scalar> FullRefit<'a, T> {
    fn new(data: &'a Dataset<T>) -> Result<Self> {
        let columns = design_columns(data, &[]);
        let fit = least_squares_columns(columns.clone(), data.targets())?;
        Ok(Self {
            data,
            columns,
            coefficients: fit.coefficients,
            rss: fit.rss,
        })
    }

    fn with_pair(&self, dim: usize, knot: T) -> Vec<Vec<T>> {
        let mut cols = self.columns.clone();
        for direction in [Direction::Positive, Direction::Negative] {
            cols.push(basis_column(self.data, &BasisFunction::new(dim, knot, direction)));
        }
        cols
    }
}

impl<T: Scalar> Scorer<T> for FullRefit<'_, T> {
    fn pair_rss(&mut self, dim: usize, knots: &[T]) -> Result<Vec<T>> {
        knots
            .iter()
            .map(|&t| Ok(least_squares_columns(self.with_pair(dim, t), self.data.targets())?.rss))
            .collect()
    }

    fn push_pair(&mut self, dim: usize, knot: T) -> Result<()> {
        self.columns = self.with_pair(dim, knot);
        let fit = least_squares_columns(self.columns.clone(), self.data.targets())?;
        self.coefficients = fit.coefficients;
        self.rss = fit.rss;
        Ok(())
    }

    fn rss(&self) -> T {
        self.rss
    }

    fn coefficients(&self) -> Result<Vec<T>> {
        Ok(self.coefficients.clone())
    }
}

/// Keeps an orthonormal basis `Q` of the current design and scores all knots
/// of a dimension in one sweep.
///
/// A pair `{R(x - t), R(t - x)}` spans the same space as `{x, R(x - t)}` once
/// the intercept is present, so each candidate reduces to projecting `x` and
/// `h = R(x - t)` off `Q`. The samples of each dimension are bucketed into the
/// segments between consecutive candidate knots; per segment we keep sums of
/// `Q` rows and of the residual, so sweeping `t` downwards turns every inner
/// product involving `h` into an affine update.
struct Incremental<'a, T> {
    data: &'a Dataset<T>,
    cap: usize,
    /// Columns of `Q`.
    q: Vec<Vec<T>>,
    qty: Vec<T>,
    /// Per design column, its coordinates in `Q` (length `rank` at insertion).
    coords: Vec<Vec<T>>,
    residual: Vec<T>,
    rss: T,
    dims: Vec<Segments<T>>,
}

/// Sample buckets of one dimension. Segment `c` holds the samples with
/// `knots[c] < x <= knots[c + 1]`, the last one everything above the top knot.
struct Segments<T> {
    knots: Vec<T>,
    /// Segment of each sample, `NONE` for samples at or below the lowest knot.
    of: Vec<u32>,
    count: Vec<T>,
    /// `sum(x - knots[c])` and `sum((x - knots[c])^2)` over segment `c`.
    a1: Vec<T>,
    a2: Vec<T>,
    /// `K x cap`: sums of `q_k` and of `q_k (x - knots[c])` per segment.
    qs: Vec<T>,
    qt: Vec<T>,
    /// Residual sums, plain and weighted by `x - knots[c]`.
    rs: Vec<T>,
    rt: Vec<T>,
    /// `Q^T x`, `x^T x`, `x^T r`.
    qx: Vec<T>,
    xx: T,
    xr: T,
}

const NONE: u32 = u32::MAX;

impl<'a, T: Scalar> Incremental<'a, T> {
    fn new(data: &'a Dataset<T>, knots: &[Vec<T>], cap: usize) -> Self {
        let n = data.n_samples();
        let y = data.targets();
        let dims = knots
            .iter()
            .enumerate()
            .map(|(j, ks)| {
                let k = ks.len();
                let mut seg = Segments {
                    knots: ks.clone(),
                    of: vec![NONE; n],
                    count: vec![T::zero(); k],
                    a1: vec![T::zero(); k],
                    a2: vec![T::zero(); k],
                    qs: vec![T::zero(); k * cap],
                    qt: vec![T::zero(); k * cap],
                    rs: vec![T::zero(); k],
                    rt: vec![T::zero(); k],
                    qx: Vec::with_capacity(cap),
                    xx: T::zero(),
                    xr: T::zero(),
                };
                for i in 0..n {
                    let x = data.feature(i, j);
                    seg.xx += x * x;
                    seg.xr += x * y[i];
                    let above = ks.partition_point(|&t| t < x);
                    if above == 0 {
                        continue;
                    }
                    let c = above - 1;
                    let u = x - ks[c];
                    seg.of[i] = c as u32;
                    seg.count[c] += T::one();
                    seg.a1[c] += u;
                    seg.a2[c] += u * u;
                    seg.rs[c] += y[i];
                    seg.rt[c] += y[i] * u;
                }
                seg
            })
            .collect();
        let mut s = Self {
            data,
            cap,
            q: Vec::with_capacity(cap),
            qty: Vec::new(),
            coords: Vec::new(),
            residual: y.to_vec(),
            rss: norm_sq(y),
            dims,
        };
        s.add_column(vec![T::one(); n]);
        s
    }

    fn add_column(&mut self, c: Vec<T>) {
        let length = norm_sq(&c).sqrt();
        let mut v = c;
        let mut coords = vec![T::zero(); self.q.len()];
        // Gram-Schmidt, repeated once when cancellation was severe
        let mut before = length;
        let mut rest = length;
        for _ in 0..2 {
            for (qk, ck) in self.q.iter().zip(coords.iter_mut()) {
                let s = dot(qk, &v);
                *ck += s;
                for (vi, &qi) in v.iter_mut().zip(qk) {
                    *vi -= s * qi;
                }
            }
            rest = norm_sq(&v).sqrt();
            if rest > T::lit(0.5) * before {
                break;
            }
            before = rest;
        }
        if length > T::zero() && rest > T::rank_tolerance() * length && self.q.len() < self.cap {
            let k = self.q.len();
            let inv = T::one() / rest;
            v.iter_mut().for_each(|vi| *vi *= inv);
            let s = dot(&v, &self.residual);
            for (ri, &qi) in self.residual.iter_mut().zip(&v) {
                *ri -= s * qi;
            }
            for (j, seg) in self.dims.iter_mut().enumerate() {
                let mut qx = T::zero();
                for (i, &qi) in v.iter().enumerate() {
                    let x = self.data.feature(i, j);
                    qx += qi * x;
                    let c = seg.of[i];
                    if c != NONE {
                        let c = c as usize;
                        seg.qs[c * self.cap + k] += qi;
                        seg.qt[c * self.cap + k] += qi * (x - seg.knots[c]);
                    }
                }
                seg.qx.push(qx);
                seg.xr -= s * qx;
                for c in 0..seg.knots.len() {
                    seg.rs[c] -= s * seg.qs[c * self.cap + k];
                    seg.rt[c] -= s * seg.qt[c * self.cap + k];
                }
            }
            coords.push(rest);
            self.qty.push(s);
            self.q.push(v);
            self.rss = norm_sq(&self.residual);
        }
        self.coords.push(coords);
    }

    /// The design as `Q R` with `R` and `Q^T y`, for pruning.
    fn compressed(&self) -> Compressed<T> {
        let rank = self.q.len();
        Compressed {
            r_columns: self
                .coords
                .iter()
                .map(|c| {
                    let mut full = c.clone();
                    full.resize(rank, T::zero());
                    full
                })
                .collect(),
            c: self.qty.clone(),
            residual: self.rss,
        }
    }
}

impl<T: Scalar> Scorer<T> for Incremental<'_, T> {
    fn pair_rss(&mut self, dim: usize, knots: &[T]) -> Result<Vec<T>> {
        let r = self.q.len();
        let cap = self.cap;
        let seg = &self.dims[dim];
        let tol2 = T::rank_tolerance() * T::rank_tolerance() + T::lit(64.0) * T::epsilon();

        let (xx, xr) = (seg.xx, seg.xr);
        let qx = &seg.qx[..r];
        let xt2 = xx - norm_sq(qx);
        let x_free = xx > T::zero() && xt2 > tol2 * xx;

        let mut out = vec![self.rss; knots.len()];
        let mut next = knots.len();
        // running sums over samples with x > t: count, sum(x - t), sum((x - t)^2),
        // h^T r, sum of r, Q^T h, column sums of Q
        let (mut cnt, mut a1, mut a2, mut hr, mut sr) = (T::zero(), T::zero(), T::zero(), T::zero(), T::zero());
        let mut qh = vec![T::zero(); r];
        let mut sq = vec![T::zero(); r];
        let kk = seg.knots.len();
        for c in (0..kk).rev() {
            if next == 0 {
                break;
            }
            let t = seg.knots[c];
            if c + 1 < kk {
                let delta = seg.knots[c + 1] - t;
                a2 += T::lit(2.0) * delta * a1 + delta * delta * cnt;
                a1 += delta * cnt;
                hr += delta * sr;
                for (h, &s) in qh.iter_mut().zip(&sq) {
                    *h += delta * s;
                }
            }
            cnt += seg.count[c];
            a1 += seg.a1[c];
            a2 += seg.a2[c];
            hr += seg.rt[c];
            sr += seg.rs[c];
            let row = c * cap;
            for k in 0..r {
                qh[k] += seg.qt[row + k];
                sq[k] += seg.qs[row + k];
            }

            while next > 0 && knots[next - 1] > t {
                next -= 1;
            }
            if next == 0 || knots[next - 1] != t {
                continue;
            }
            let hh = a2;
            let ht2 = hh - norm_sq(&qh);
            let mut reduction = T::zero();
            let (h2, hr2) = if x_free {
                let xh = a2 + t * a1 - dot(qx, &qh);
                reduction += xr * xr / xt2;
                (ht2 - xh * xh / xt2, hr - xh * xr / xt2)
            } else {
                (ht2, hr)
            };
            if hh > T::zero() && h2 > tol2 * hh {
                reduction += hr2 * hr2 / h2;
            }
            out[next - 1] = (self.rss - reduction).max(T::zero());
            next -= 1;
        }
        Ok(out)
    }

    fn push_pair(&mut self, dim: usize, knot: T) -> Result<()> {
        for direction in [Direction::Positive, Direction::Negative] {
            let col = basis_column(self.data, &BasisFunction::new(dim, knot, direction));
            self.add_column(col);
        }
        Ok(())
    }

    fn rss(&self) -> T {
        self.rss
    }

    fn coefficients(&self) -> Result<Vec<T>> {
        let c = self.compressed();
        Ok(least_squares_columns(c.r_columns, &c.c)?.coefficients)
    }

    fn factorization(&self) -> Option<Compressed<T>> {
        Some(self.compressed())
    }
}
