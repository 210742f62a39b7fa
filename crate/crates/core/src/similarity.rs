//! Per-attribute similarity kernels, their generalized inverses, and
//! min-aggregation into tuple and situation similarities.

use crate::error::{Error, Result};
use crate::model::{CaseBase, KernelKind, Query, SimilarityFamily};

/// A degree in `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct SimilarityDegree(f64);

impl SimilarityDegree {
    pub fn new(value: f64) -> Result<Self> {
        if (0.0..=1.0).contains(&value) {
            Ok(SimilarityDegree(value))
        } else {
            Err(Error::OutOfUnitRange {
                field: "similarity".into(),
                value,
            })
        }
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

impl From<SimilarityDegree> for f64 {
    fn from(d: SimilarityDegree) -> f64 {
        d.0
    }
}

impl SimilarityFamily {
    /// `f(d)` for `d ≥ 0`.
    #[inline]
    pub fn eval(&self, d: f64) -> f64 {
        match self.kind {
            KernelKind::Linear => (1.0 - d / self.scale).max(0.0),
            KernelKind::Exponential => (-d / self.scale).exp(),
        }
    }

    /// `min(1, sup{d ≥ 0 : f(d) ≥ α})` for `α ∈ [0, 1]`.
    ///
    /// Capped at the width of the unit interval so that `f(d) ≥ α ⇔ d ≤ f⁻¹(α)`
    /// holds on `[0, 1]` even where `f` is flat or never reaches zero.
    #[inline]
    pub fn inverse(&self, alpha: f64) -> f64 {
        if alpha <= 0.0 {
            return 1.0;
        }
        let d = match self.kind {
            KernelKind::Linear => self.scale * (1.0 - alpha),
            KernelKind::Exponential => -self.scale * alpha.ln(),
        };
        d.clamp(0.0, 1.0)
    }
}

/// Atomic similarity `f(d)` of two attribute values at distance `d`.
pub fn kernel_at(family: &SimilarityFamily, d: f64) -> Result<SimilarityDegree> {
    if d.is_nan() || d < 0.0 {
        return Err(Error::NegativeDistance(d));
    }
    Ok(SimilarityDegree(family.eval(d)))
}

/// Generalized inverse `f⁻¹(α)`, capped at 1.
pub fn pseudo_inverse(family: &SimilarityFamily, alpha: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&alpha) {
        return Err(Error::InvalidLevel {
            value: alpha,
            range: "[0, 1]",
        });
    }
    Ok(family.inverse(alpha))
}

/// Min-aggregated similarity of two tuples, one kernel per coordinate.
pub fn tuple_similarity(families: &[SimilarityFamily], a: &[f64], b: &[f64]) -> Result<SimilarityDegree> {
    if a.len() != families.len() || b.len() != families.len() {
        return Err(Error::DimensionMismatch {
            field: "tuple".into(),
            expected: families.len(),
            found: if a.len() != families.len() { a.len() } else { b.len() },
        });
    }
    Ok(SimilarityDegree(min_similarity(families.iter(), a, b)))
}

pub(crate) fn min_similarity<'a>(
    families: impl Iterator<Item = &'a SimilarityFamily>,
    a: &[f64],
    b: &[f64],
) -> f64 {
    families
        .zip(a.iter().zip(b))
        .map(|(f, (x, y))| f.eval((x - y).abs()))
        .fold(1.0, f64::min)
}

/// `Sⁱ`: how similar case `i`'s situation is to the current one.
pub fn situation_similarity(case_base: &CaseBase, query: &Query, i: usize) -> Result<SimilarityDegree> {
    let case = case_base.cases().get(i).ok_or(Error::IndexOutOfRange {
        index: i,
        len: case_base.len(),
    })?;
    if let Some(s) = case.similarity_override {
        return Ok(SimilarityDegree(s));
    }
    let families = case_base.situation_attrs().iter().map(|a| &a.family);
    Ok(SimilarityDegree(min_similarity(
        families,
        &case.situation,
        query.current_situation(),
    )))
}

/// `Sⁱ` for every case, in case order.
pub fn situation_similarities(case_base: &CaseBase, query: &Query) -> Vec<f64> {
    (0..case_base.len())
        .map(|i| {
            situation_similarity(case_base, query, i)
                .expect("index in range")
                .value()
        })
        .collect()
}
