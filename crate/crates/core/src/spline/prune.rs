use super::{count_knots, design_columns, improves, BasisFunction, FitConfig, ForwardStep, GcvRecord, MarsModel, Term};
use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::linalg::{compress, drop_one_increments, least_squares_columns, Compressed};
use crate::scalar::Scalar;

/// Result of [`backward_prune`].
#[derive(Clone, Debug)]
pub struct Pruned<T> {
    pub model: MarsModel<T>,
    /// One record per visited size, largest model first.
    pub records: Vec<GcvRecord<T>>,
    /// Training-set predictions of the returned model.
    pub fitted: Vec<T>,
}

/// Greedy backward deletion starting from the last forward model.
///
/// Each round drops the single basis whose removal gives the lowest GCV,
/// down to the intercept-only model. The returned model has the lowest GCV
/// among all visited sizes; near-ties go to the smaller model.
pub fn backward_prune<T: Scalar>(steps: &[ForwardStep<T>], train: &Dataset<T>, config: &FitConfig) -> Result<Pruned<T>> {
    prune_with(steps, train, config, None)
}

/// Column selection `[intercept] + active` into `cols`.
fn pick<T: Scalar>(cols: &[Vec<T>], active: &[usize]) -> Vec<Vec<T>> {
    std::iter::once(0)
        .chain(active.iter().map(|&j| j + 1))
        .map(|j| cols[j].clone())
        .collect()
}

/// With `config.incremental`, subsets are scored on the orthogonally
/// compressed problem (taken from `factor` when given) instead of the full
/// training matrix.
pub(super) fn prune_with<T: Scalar>(
    steps: &[ForwardStep<T>],
    train: &Dataset<T>,
    config: &FitConfig,
    factor: Option<Compressed<T>>,
) -> Result<Pruned<T>> {
    let last = steps.last().ok_or(Error::EmptyInput)?;
    let bases: Vec<BasisFunction<T>> = last.model.terms.iter().map(|t| t.basis).collect();
    let columns = design_columns(train, &bases);
    let targets = train.targets();
    let n = train.n_samples();

    let compressed = if config.incremental {
        Some(factor.unwrap_or_else(|| compress(columns.clone(), targets)))
    } else {
        None
    };
    let fit = |active: &[usize]| match &compressed {
        Some(c) => least_squares_columns(pick(&c.r_columns, active), &c.c).map(|mut f| {
            f.rss += c.residual;
            f
        }),
        None => least_squares_columns(pick(&columns, active), targets),
    };
    let record = |active: &[usize], rss: T| {
        GcvRecord::new(
            active.len(),
            count_knots(active.iter().map(|&j| &bases[j])),
            rss,
            config.knot_penalty,
            n,
        )
    };

    let base = record(&[], fit(&[])?.rss);
    let scale = base.gcv.unwrap_or(base.rss);

    let mut active: Vec<usize> = (0..bases.len()).collect();
    let mut records = vec![record(&active, fit(&active)?.rss)];
    let mut subsets = vec![active.clone()];
    while !active.is_empty() {
        let without = |drop: usize| -> Vec<usize> {
            active
                .iter()
                .enumerate()
                .filter(|&(k, _)| k != drop)
                .map(|(_, &j)| j)
                .collect()
        };
        let shortcut = compressed
            .as_ref()
            .and_then(|c| drop_one_increments(pick(&c.r_columns, &active), &c.c).map(|(rss, inc)| (rss + c.residual, inc)));
        let mut best: Option<(usize, GcvRecord<T>)> = None;
        for drop in 0..active.len() {
            let trial = without(drop);
            let rss = match &shortcut {
                Some((rss, inc)) => *rss + inc[drop + 1],
                None => fit(&trial)?.rss,
            };
            let rec = record(&trial, rss);
            let better = match (&best, rec.gcv) {
                (None, _) => true,
                (Some((_, b)), Some(g)) => b.gcv.map_or(true, |bg| improves(g, bg, scale)),
                (Some(_), None) => false,
            };
            if better {
                best = Some((drop, rec));
            }
        }
        let (drop, rec) = best.expect("at least one basis to drop");
        active = without(drop);
        records.push(rec);
        subsets.push(active.clone());
    }

    let mut chosen = 0;
    for k in 1..records.len() {
        let take = match (records[chosen].gcv, records[k].gcv) {
            (_, None) => false,
            (None, Some(_)) => true,
            (Some(b), Some(c)) => !improves(b, c, scale),
        };
        if take {
            chosen = k;
        }
    }

    let keep = &subsets[chosen];
    let coefficients = fit(keep)?.coefficients;
    let design = pick(&columns, keep);
    let fitted = (0..n)
        .map(|i| design.iter().zip(&coefficients).map(|(c, &b)| c[i] * b).sum())
        .collect();
    let mut model = MarsModel::intercept_only(coefficients[0], train.dim());
    model.terms = keep
        .iter()
        .zip(&coefficients[1..])
        .map(|(&j, &coef)| Term { basis: bases[j], coef })
        .collect();
    Ok(Pruned {
        model,
        records,
        fitted,
    })
}
