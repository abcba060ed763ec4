use serde::{Deserialize, Serialize};

use super::MarsModel;
use crate::scalar::Scalar;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DimensionImportance<T> {
    pub dim: usize,
    pub name: String,
    /// Sum of `|coef|` over the terms on this dimension.
    pub importance: T,
    /// Distinct knots used on this dimension, ascending.
    pub knots: Vec<T>,
    /// Number of terms on this dimension.
    pub terms: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ImportanceReport<T> {
    /// Indexed by dimension.
    pub dimensions: Vec<DimensionImportance<T>>,
    /// Dimensions by decreasing importance, ties by index.
    pub ranking: Vec<usize>,
}

impl<T: Scalar> ImportanceReport<T> {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("rank,dim,name,importance,terms,knots\n");
        for (rank, &dim) in self.ranking.iter().enumerate() {
            let d = &self.dimensions[dim];
            let knots: Vec<String> = d.knots.iter().map(|k| k.to_string()).collect();
            out.push_str(&format!(
                "{},{},{},{},{},{}\n",
                rank + 1,
                d.dim,
                d.name,
                d.importance,
                d.terms,
                knots.join(" ")
            ));
        }
        out
    }
}

/// Per-dimension absolute-coefficient mass and knot locations.
///
/// `names` labels the dimensions; missing names default to `x{dim}`.
pub fn feature_importance<T: Scalar>(model: &MarsModel<T>, names: Option<&[String]>) -> ImportanceReport<T> {
    let mut dimensions: Vec<DimensionImportance<T>> = (0..model.d)
        .map(|dim| DimensionImportance {
            dim,
            name: names
                .and_then(|n| n.get(dim).cloned())
                .unwrap_or_else(|| format!("x{dim}")),
            importance: T::zero(),
            knots: Vec::new(),
            terms: 0,
        })
        .collect();
    for t in &model.terms {
        let d = &mut dimensions[t.basis.dim];
        d.importance += t.coef.abs();
        d.terms += 1;
        if !d.knots.contains(&t.basis.knot) {
            d.knots.push(t.basis.knot);
        }
    }
    // summation order must not depend on term order
    for d in &mut dimensions {
        let mut coefs: Vec<T> = model
            .terms
            .iter()
            .filter(|t| t.basis.dim == d.dim)
            .map(|t| t.coef.abs())
            .collect();
        coefs.sort_by(|a, b| a.partial_cmp(b).expect("finite coefficients"));
        d.importance = coefs.into_iter().sum();
        d.knots.sort_by(|a, b| a.partial_cmp(b).expect("finite knots"));
    }
    let mut ranking: Vec<usize> = (0..model.d).collect();
    ranking.sort_by(|&a, &b| {
        dimensions[b]
            .importance
            .partial_cmp(&dimensions[a].importance)
            .expect("finite importances")
            .then(a.cmp(&b))
    });
    ImportanceReport { dimensions, ranking }
}
