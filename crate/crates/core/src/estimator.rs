//! Frontier descent: estimates the optimistic qualitative utility `α₀` and
//! the predicted outcome set without building the possibility distribution.
//!
//! At level `α` the distribution cut is a union of boxes whose `b̄`-nearest
//! vertices form the finite frontier `F_α`. Since `u` is strictly
//! Pareto-increasing, `U_α ∩ Π_α` is non-empty exactly when some vertex has
//! `u ≥ α`. With `h(α) = max_{v ∈ F_α} u(v)`, the answer is
//! `α₀ = max{α : h(α) ≥ α}` and the predicted outcomes are the vertices of
//! `F_{α₀}` attaining `h(α₀)`.
//!
//! The descent walks `α = 1, 1 − Δα, …, 0` on an integer counter and stops at
//! the first passing level. `h` is non-increasing, so `h(α) − α` is strictly
//! decreasing and the crossing can be bisected below `Δα`.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{CaseBase, EstimatorConfig, Polarities, Query, UtilityModel};
use crate::possibility::PossibilityModel;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PredictedOutcome {
    #[serde(rename = "case")]
    pub source: usize,
    pub coords: Vec<f64>,
    pub utility: f64,
}

/// `α₀`, the outcome set `O` and every `(α, h(α))` evaluated on the way.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EstimateResult {
    pub alpha0: f64,
    pub outcomes: Vec<PredictedOutcome>,
    /// `h` is `None` where no case reaches the level.
    pub trace: Vec<(f64, Option<f64>)>,
    pub refined: bool,
}

impl EstimateResult {
    /// Writes the trace as a two-column CSV (`alpha,h`); empty `h` marks an
    /// empty frontier.
    pub fn write_trace_csv<W: std::io::Write>(&self, writer: W) -> csv::Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["alpha", "h"])?;
        for (alpha, h) in &self.trace {
            let h = h.map(|v| v.to_string()).unwrap_or_default();
            w.write_record([alpha.to_string(), h])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// The descent estimator for one partner.
#[derive(Debug, Clone)]
pub struct Estimator<'a> {
    model: PossibilityModel<'a>,
    utility: &'a UtilityModel,
}

impl<'a> Estimator<'a> {
    pub fn new(
        case_base: &'a CaseBase,
        query: &Query,
        polarities: &Polarities,
        utility: &'a UtilityModel,
    ) -> Result<Self> {
        if utility.dim() != case_base.outcome_dim() {
            return Err(Error::DimensionMismatch {
                field: "weights".into(),
                expected: case_base.outcome_dim(),
                found: utility.dim(),
            });
        }
        Ok(Estimator {
            model: PossibilityModel::new(case_base, query, polarities)?,
            utility,
        })
    }

    pub fn model(&self) -> &PossibilityModel<'a> {
        &self.model
    }

    /// `h(α)`; `None` when the frontier is empty. Accepts `α = 0`.
    pub fn score(&self, alpha: f64) -> Option<f64> {
        let pol = self.model.polarities();
        let mut best: Option<f64> = None;
        self.model.for_each_vertex(alpha, |_, v| {
            let u = self.utility.eval(pol, v);
            best = Some(best.map_or(u, |b| b.max(u)));
        });
        best
    }

    fn passes(&self, alpha: f64) -> (Option<f64>, bool) {
        let h = self.score(alpha);
        (h, h.is_some_and(|h| h >= alpha))
    }

    pub fn estimate(&self, config: &EstimatorConfig) -> Result<EstimateResult> {
        config.validate()?;
        let step = config.step;
        // levels 1, 1-Δα, ..., reaching exactly 0 at index `last`
        let last = (1.0 / step - 1e-9).ceil() as usize;
        let level = |k: usize| {
            if k >= last {
                0.0
            } else {
                1.0 - k as f64 * step
            }
        };

        let mut trace = Vec::with_capacity(last + 1);
        let mut first_pass = last;
        for k in 0..=last {
            let alpha = level(k);
            let (h, ok) = self.passes(alpha);
            trace.push((alpha, h));
            if ok {
                first_pass = k;
                break;
            }
        }

        let mut alpha0 = level(first_pass);
        let mut refined = false;
        if config.refine_tolerance > 0.0 && first_pass > 0 {
            let (mut lo, mut hi) = (alpha0, level(first_pass - 1));
            while hi - lo > config.refine_tolerance {
                let mid = 0.5 * (lo + hi);
                let (h, ok) = self.passes(mid);
                trace.push((mid, h));
                if ok {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            alpha0 = lo;
            refined = true;
        }

        let outcomes = self.outcomes_at(alpha0, config.tie_tolerance);
        Ok(EstimateResult {
            alpha0,
            outcomes,
            trace,
            refined,
        })
    }

    /// Frontier vertices at `α` whose utility is within `tie` of the best.
    pub fn outcomes_at(&self, alpha: f64, tie: f64) -> Vec<PredictedOutcome> {
        let Some(best) = self.score(alpha) else {
            return Vec::new();
        };
        let pol = self.model.polarities();
        let mut out = Vec::new();
        self.model.for_each_vertex(alpha, |i, v| {
            let u = self.utility.eval(pol, v);
            if u >= best - tie {
                out.push(PredictedOutcome {
                    source: i,
                    coords: v.to_vec(),
                    utility: u,
                });
            }
        });
        out
    }
}

/// `h(α) = max_{v ∈ F_α} u(v)` for `α ∈ (0, 1]`; `None` for an empty frontier.
pub fn frontier_score(
    case_base: &CaseBase,
    query: &Query,
    polarities: &Polarities,
    utility: &UtilityModel,
    alpha: f64,
) -> Result<Option<f64>> {
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(Error::InvalidLevel {
            value: alpha,
            range: "(0, 1]",
        });
    }
    Ok(Estimator::new(case_base, query, polarities, utility)?.score(alpha))
}

pub fn estimate(
    case_base: &CaseBase,
    query: &Query,
    polarities: &Polarities,
    utility: &UtilityModel,
    config: &EstimatorConfig,
) -> Result<EstimateResult> {
    Estimator::new(case_base, query, polarities, utility)?.estimate(config)
}

/// One potential negotiation partner.
#[derive(Debug, Clone)]
pub struct Partner {
    pub id: String,
    pub case_base: CaseBase,
    pub query: Query,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RankedPartner {
    pub id: String,
    #[serde(flatten)]
    pub estimate: EstimateResult,
}

/// Estimates every partner and orders them by `α₀`, best first. Ties keep
/// input order. Partners are evaluated on the current rayon pool.
pub fn rank_partners(
    partners: &[Partner],
    polarities: &Polarities,
    utility: &UtilityModel,
    config: &EstimatorConfig,
) -> Result<Vec<RankedPartner>> {
    if partners.is_empty() {
        return Err(Error::InconsistentPartners("no partners given".into()));
    }
    for p in partners {
        if p.case_base.outcome_dim() != polarities.len() {
            return Err(Error::InconsistentPartners(format!(
                "partner {} has {} outcome attributes, expected {}",
                p.id,
                p.case_base.outcome_dim(),
                polarities.len()
            )));
        }
        if p.case_base.polarities() != *polarities {
            return Err(Error::InconsistentPartners(format!(
                "partner {} declares different attribute polarities",
                p.id
            )));
        }
    }
    let mut ranked = partners
        .par_iter()
        .map(|p| {
            estimate(&p.case_base, &p.query, polarities, utility, config).map(|estimate| {
                RankedPartner {
                    id: p.id.clone(),
                    estimate,
                }
            })
        })
        .collect::<Result<Vec<_>>>()?;
    ranked.sort_by(|a, b| b.estimate.alpha0.total_cmp(&a.estimate.alpha0));
    Ok(ranked)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::{self, Instance};

    fn run(inst: &Instance, config: &EstimatorConfig) -> EstimateResult {
        estimate(
            &inst.case_base,
            &inst.query,
            &inst.polarities(),
            &inst.utility,
            config,
        )
        .unwrap()
    }

    fn score(inst: &Instance, alpha: f64) -> Option<f64> {
        frontier_score(&inst.case_base, &inst.query, &inst.polarities(), &inst.utility, alpha).unwrap()
    }

    #[test]
    fn frontier_score_examples() {
        assert!((score(&fixtures::fixture_a(), 0.5).unwrap() - 0.75).abs() < 1e-12);
        assert!((score(&fixtures::fixture_b(), 0.8).unwrap() - 0.7).abs() < 1e-12);
        assert_eq!(score(&fixtures::fixture_a_with_strength(0.4), 0.5), None);
        let a = fixtures::fixture_a();
        assert!(frontier_score(&a.case_base, &a.query, &a.polarities(), &a.utility, 0.0).is_err());
    }

    #[test]
    fn fixture_a_refined_and_unrefined() {
        let a = fixtures::fixture_a();
        let r = run(&a, &EstimatorConfig::default());
        assert!(r.refined);
        assert!((r.alpha0 - 2.0 / 3.0).abs() <= 1e-6);
        assert_eq!(r.outcomes.len(), 1);
        assert!((r.outcomes[0].coords[0] - 2.0 / 3.0).abs() <= 1e-3);

        let r = run(&a, &EstimatorConfig::unrefined());
        assert!(!r.refined);
        assert!(r.alpha0 <= 2.0 / 3.0 && 2.0 / 3.0 - r.alpha0 <= 0.01);
        assert!((r.alpha0 - 0.66).abs() < 1e-12);
    }

    #[test]
    fn fixture_b_estimate() {
        let r = run(&fixtures::fixture_b(), &EstimatorConfig::default());
        assert!((r.alpha0 - 11.0 / 15.0).abs() <= 1e-4);
        assert_eq!(r.outcomes.len(), 1);
        assert_eq!(r.outcomes[0].source, 0);
        assert!((r.outcomes[0].coords[0] - 11.0 / 15.0).abs() <= 1e-3);
        assert!((r.outcomes[0].coords[1] - 4.0 / 15.0).abs() <= 1e-3);
    }

    #[test]
    fn strength_caps_the_answer() {
        let s = fixtures::s_capped();
        for config in [EstimatorConfig::unrefined(), EstimatorConfig::default()] {
            let r = run(&s, &config);
            assert_eq!(r.alpha0, 0.5);
            assert_eq!(r.outcomes[0].coords, vec![1.0]);
        }
    }

    #[test]
    fn descent_reaches_exactly_zero() {
        // step that does not divide 1: last level must still be 0
        let a = fixtures::fixture_a_with_strength(0.0);
        let config = EstimatorConfig {
            step: 0.3,
            refine_tolerance: 0.0,
            ..Default::default()
        };
        let r = run(&a, &config);
        let levels: Vec<f64> = r.trace.iter().map(|t| t.0).collect();
        assert_eq!(levels.len(), 5);
        assert_eq!(*levels.last().unwrap(), 0.0);
        assert_eq!(r.alpha0, 0.0);
    }

    #[test]
    fn trace_csv() {
        let r = run(&fixtures::s_capped(), &EstimatorConfig::unrefined());
        let mut buf = Vec::new();
        r.write_trace_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some("alpha,h"));
        assert_eq!(lines.next(), Some("1,"));
        assert_eq!(text.lines().last(), Some("0.5,1"));
    }

    fn partner(id: &str, inst: Instance) -> Partner {
        Partner {
            id: id.into(),
            case_base: inst.case_base,
            query: inst.query,
        }
    }

    #[test]
    fn ranking() {
        let a = fixtures::fixture_a();
        let pol = a.polarities();
        let u = a.utility.clone();
        let cfg = EstimatorConfig::default();

        let ranked = rank_partners(
            &[partner("B", fixtures::s_capped()), partner("A", fixtures::fixture_a())],
            &pol,
            &u,
            &cfg,
        )
        .unwrap();
        let ids: Vec<&str> = ranked.iter().map(|r| r.id.as_str()).collect();
        assert_eq!(ids, ["A", "B"]);

        let ranked = rank_partners(
            &[partner("x", fixtures::fixture_a()), partner("y", fixtures::fixture_a())],
            &pol,
            &u,
            &cfg,
        )
        .unwrap();
        let ids: Vec<&str> = ranked.iter().map(|r| r.id.as_str()).collect();
        assert_eq!(ids, ["x", "y"]);

        let ranked = rank_partners(&[partner("solo", fixtures::fixture_a())], &pol, &u, &cfg).unwrap();
        assert_eq!(ranked.len(), 1);

        let err = rank_partners(
            &[partner("A", fixtures::fixture_a()), partner("B", fixtures::fixture_b())],
            &pol,
            &u,
            &cfg,
        );
        assert!(matches!(err, Err(Error::InconsistentPartners(_))));
    }

    #[test]
    fn result_serializes() {
        let r = run(&fixtures::s_capped(), &EstimatorConfig::unrefined());
        let v = serde_json::to_value(&r).unwrap();
        assert_eq!(v["alpha0"], 0.5);
        assert_eq!(v["outcomes"][0]["case"], 0);
        assert_eq!(v["trace"][0][1], serde_json::Value::Null);
        assert_eq!(v["refined"], false);
    }
}
