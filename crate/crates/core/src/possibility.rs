//! Pointwise possibility density `μ` and distribution `π`, and the exact
//! geometry of their α-cuts.
//!
//! The density of a case base is `μ(ȳ) = maxᵢ min(Sⁱ, min_k f_k(|y_k − oᵢ_k|))`.
//! Its α-cut is a union of one box per case with `Sⁱ ≥ α`, each box centred on
//! the case outcome with half-width `f_k⁻¹(α)` per axis.
//!
//! The distribution is the smallest Pareto-decreasing envelope of `μ`,
//! `π(ȳ) = sup{μ(x̄) : ȳ ⪯ x̄}`. Because every case term is separable per
//! axis, the supremum reduces to a one-sided distance per axis: a point only
//! pays for being *better* than a case outcome. Each box of the distribution
//! cut therefore extends all the way to the worst face of the cube, and its
//! vertex nearest the best corner `b̄` is the case's frontier point.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{CaseBase, Polarities, Polarity, Query};
use crate::similarity::situation_similarities;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Hypercuboid {
    #[serde(rename = "case")]
    pub source: usize,
    /// Closed `[lo, hi]` per axis, clipped to `[0, 1]`.
    pub intervals: Vec<[f64; 2]>,
}

impl Hypercuboid {
    pub fn contains(&self, y: &[f64], slack: f64) -> bool {
        self.intervals
            .iter()
            .zip(y)
            .all(|(&[lo, hi], &v)| v >= lo - slack && v <= hi + slack)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum CutKind {
    Density,
    Distribution,
}

/// A union of boxes representing `M_α` or `Π_α`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CutGeometry {
    pub level: f64,
    pub kind: CutKind,
    pub cuboids: Vec<Hypercuboid>,
}

impl CutGeometry {
    pub fn contains(&self, y: &[f64], slack: f64) -> bool {
        self.cuboids.iter().any(|c| c.contains(y, slack))
    }

    pub fn is_empty(&self) -> bool {
        self.cuboids.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FrontierPoint {
    #[serde(rename = "case")]
    pub source: usize,
    pub coords: Vec<f64>,
}

/// A case base bound to a query and a polarity vector, with the situation
/// similarities `Sⁱ` computed once.
#[derive(Debug, Clone)]
pub struct PossibilityModel<'a> {
    case_base: &'a CaseBase,
    polarities: Polarities,
    strengths: Vec<f64>,
}

fn check_point(n: usize, y: &[f64]) -> Result<()> {
    if y.len() != n {
        return Err(Error::DimensionMismatch {
            field: "point".into(),
            expected: n,
            found: y.len(),
        });
    }
    Ok(())
}

fn check_level(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha <= 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidLevel {
            value: alpha,
            range: "(0, 1]",
        })
    }
}

impl<'a> PossibilityModel<'a> {
    pub fn new(case_base: &'a CaseBase, query: &Query, polarities: &Polarities) -> Result<Self> {
        if polarities.len() != case_base.outcome_dim() {
            return Err(Error::DimensionMismatch {
                field: "polarities".into(),
                expected: case_base.outcome_dim(),
                found: polarities.len(),
            });
        }
        if query.current_situation().len() != case_base.situation_dim()
            && case_base
                .cases()
                .iter()
                .any(|c| c.similarity_override.is_none())
        {
            return Err(Error::DimensionMismatch {
                field: "current_situation".into(),
                expected: case_base.situation_dim(),
                found: query.current_situation().len(),
            });
        }
        Ok(PossibilityModel {
            case_base,
            polarities: polarities.clone(),
            strengths: situation_similarities(case_base, query),
        })
    }

    pub fn case_base(&self) -> &CaseBase {
        self.case_base
    }

    pub fn polarities(&self) -> &Polarities {
        &self.polarities
    }

    pub fn dim(&self) -> usize {
        self.case_base.outcome_dim()
    }

    /// Situation similarities `Sⁱ` in case order.
    pub fn strengths(&self) -> &[f64] {
        &self.strengths
    }

    /// Indices `I` of cases with `Sⁱ ≥ α`.
    pub fn active_cases(&self, alpha: f64) -> impl Iterator<Item = usize> + '_ {
        self.strengths
            .iter()
            .enumerate()
            .filter(move |(_, &s)| s >= alpha)
            .map(|(i, _)| i)
    }

    /// `μ(ȳ)`; `y` must have `n` coordinates.
    pub fn density(&self, y: &[f64]) -> f64 {
        self.case_base
            .cases()
            .iter()
            .zip(&self.strengths)
            .map(|(case, &s)| {
                self.case_base
                    .outcome_families()
                    .zip(case.outcome.iter().zip(y))
                    .map(|(f, (o, v))| f.eval((v - o).abs()))
                    .fold(s, f64::min)
            })
            .fold(0.0, f64::max)
    }

    /// `π(ȳ)`; `y` must have `n` coordinates.
    pub fn distribution(&self, y: &[f64]) -> f64 {
        let pol = self.polarities.as_slice();
        self.case_base
            .cases()
            .iter()
            .zip(&self.strengths)
            .map(|(case, &s)| {
                self.case_base
                    .outcome_families()
                    .zip(pol)
                    .zip(case.outcome.iter().zip(y))
                    .map(|((f, p), (o, v))| f.eval((p.sign() * (v - o)).max(0.0)))
                    .fold(s, f64::min)
            })
            .fold(0.0, f64::max)
    }

    /// Per-axis half-widths `f_k⁻¹(α)`.
    pub fn radii(&self, alpha: f64) -> Vec<f64> {
        self.case_base
            .outcome_families()
            .map(|f| f.inverse(alpha))
            .collect()
    }

    pub fn density_cut(&self, alpha: f64) -> CutGeometry {
        let radii = self.radii(alpha);
        let cuboids = self
            .active_cases(alpha)
            .map(|i| {
                let o = &self.case_base.cases()[i].outcome;
                Hypercuboid {
                    source: i,
                    intervals: o
                        .iter()
                        .zip(&radii)
                        .map(|(&c, &r)| [(c - r).max(0.0), (c + r).min(1.0)])
                        .collect(),
                }
            })
            .collect();
        CutGeometry {
            level: alpha,
            kind: CutKind::Density,
            cuboids,
        }
    }

    pub fn distribution_cut(&self, alpha: f64) -> CutGeometry {
        let radii = self.radii(alpha);
        let pol = self.polarities.as_slice();
        let cuboids = self
            .active_cases(alpha)
            .map(|i| {
                let o = &self.case_base.cases()[i].outcome;
                Hypercuboid {
                    source: i,
                    intervals: o
                        .iter()
                        .zip(&radii)
                        .zip(pol)
                        .map(|((&c, &r), p)| match p {
                            Polarity::Positive => [0.0, (c + r).min(1.0)],
                            Polarity::Negative => [(c - r).max(0.0), 1.0],
                        })
                        .collect(),
                }
            })
            .collect();
        CutGeometry {
            level: alpha,
            kind: CutKind::Distribution,
            cuboids,
        }
    }

    /// Calls `visit(case, vertex)` for the `b̄`-nearest vertex of every
    /// distribution-cut box at level `α`, reusing one coordinate buffer.
    pub fn for_each_vertex(&self, alpha: f64, mut visit: impl FnMut(usize, &[f64])) {
        let radii = self.radii(alpha);
        let pol = self.polarities.as_slice();
        let mut vertex = vec![0.0; self.dim()];
        for i in self.active_cases(alpha) {
            let o = &self.case_base.cases()[i].outcome;
            for (k, v) in vertex.iter_mut().enumerate() {
                *v = (o[k] + pol[k].sign() * radii[k]).clamp(0.0, 1.0);
            }
            visit(i, &vertex);
        }
    }

    /// Frontier vertices `F_α`, one per active case, duplicates retained.
    pub fn frontier(&self, alpha: f64) -> Vec<FrontierPoint> {
        let mut out = Vec::new();
        self.for_each_vertex(alpha, |i, v| {
            out.push(FrontierPoint {
                source: i,
                coords: v.to_vec(),
            })
        });
        out
    }
}

pub fn density_at(case_base: &CaseBase, query: &Query, y: &[f64]) -> Result<f64> {
    check_point(case_base.outcome_dim(), y)?;
    let model = PossibilityModel::new(case_base, query, &case_base.polarities())?;
    Ok(model.density(y))
}

pub fn distribution_at(
    case_base: &CaseBase,
    query: &Query,
    polarities: &Polarities,
    y: &[f64],
) -> Result<f64> {
    check_point(case_base.outcome_dim(), y)?;
    Ok(PossibilityModel::new(case_base, query, polarities)?.distribution(y))
}

pub fn density_alpha_cut(case_base: &CaseBase, query: &Query, alpha: f64) -> Result<CutGeometry> {
    check_level(alpha)?;
    let model = PossibilityModel::new(case_base, query, &case_base.polarities())?;
    Ok(model.density_cut(alpha))
}

pub fn distribution_alpha_cut(
    case_base: &CaseBase,
    query: &Query,
    polarities: &Polarities,
    alpha: f64,
) -> Result<CutGeometry> {
    check_level(alpha)?;
    Ok(PossibilityModel::new(case_base, query, polarities)?.distribution_cut(alpha))
}

pub fn frontier(
    case_base: &CaseBase,
    query: &Query,
    polarities: &Polarities,
    alpha: f64,
) -> Result<Vec<FrontierPoint>> {
    check_level(alpha)?;
    Ok(PossibilityModel::new(case_base, query, polarities)?.frontier(alpha))
}
