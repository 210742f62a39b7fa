//! Domain types: attributes, cases, the case base, the query and the
//! negotiator's utility model, plus ingestion of the JSON case-base document.
//!
//! Every value handled downstream lives in the unit hypercube. Outcome
//! attributes may declare raw-unit bounds; they are mapped affinely into
//! `[0, 1]` at ingestion and the maps are kept so that predicted outcomes can
//! be reported back in original units.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tolerance on the sum of utility weights.
pub const WEIGHT_SUM_TOLERANCE: f64 = 1e-12;

/// Which side of an attribute's range the negotiator prefers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "i64", into = "i64")]
pub enum Polarity {
    /// `m = 0`: lower is better (price, delay).
    Negative,
    /// `m = 1`: higher is better (availability, quality).
    Positive,
}

impl Polarity {
    /// The flag `m` in `{0, 1}`; also the best-point coordinate.
    pub fn flag(self) -> f64 {
        match self {
            Polarity::Negative => 0.0,
            Polarity::Positive => 1.0,
        }
    }

    /// `2m - 1`: the direction in which this axis improves.
    pub fn sign(self) -> f64 {
        match self {
            Polarity::Negative => -1.0,
            Polarity::Positive => 1.0,
        }
    }

    /// How good `y` is on this axis, in `[0, 1]`.
    pub fn goodness(self, y: f64) -> f64 {
        match self {
            Polarity::Negative => 1.0 - y,
            Polarity::Positive => y,
        }
    }
}

impl TryFrom<i64> for Polarity {
    type Error = Error;

    fn try_from(value: i64) -> Result<Self> {
        match value {
            0 => Ok(Polarity::Negative),
            1 => Ok(Polarity::Positive),
            other => Err(Error::InvalidPolarity {
                field: "polarity".into(),
                value: other,
            }),
        }
    }
}

impl From<Polarity> for i64 {
    fn from(p: Polarity) -> i64 {
        match p {
            Polarity::Negative => 0,
            Polarity::Positive => 1,
        }
    }
}

/// The polarity vector `m̄`. It fixes the best corner `b̄ = m̄` of the unit
/// hypercube and orients the Pareto order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Polarities(Vec<Polarity>);

impl Polarities {
    pub fn new(polarities: Vec<Polarity>) -> Self {
        Polarities(polarities)
    }

    pub fn from_flags(flags: &[i64]) -> Result<Self> {
        flags
            .iter()
            .enumerate()
            .map(|(k, &f)| {
                Polarity::try_from(f).map_err(|_| Error::InvalidPolarity {
                    field: format!("polarity[{k}]"),
                    value: f,
                })
            })
            .collect::<Result<Vec<_>>>()
            .map(Polarities)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[Polarity] {
        &self.0
    }

    pub fn iter(&self) -> impl Iterator<Item = Polarity> + '_ {
        self.0.iter().copied()
    }

    /// The negotiator's ideal point `b̄`.
    pub fn best_point(&self) -> Vec<f64> {
        self.0.iter().map(|p| p.flag()).collect()
    }

    /// The corner opposite to `b̄`.
    pub fn worst_point(&self) -> Vec<f64> {
        self.0.iter().map(|p| 1.0 - p.flag()).collect()
    }

    /// Weak Pareto order `y ⪯ z`: `z` is at least as good as `y` on every axis.
    pub fn weakly_precedes(&self, y: &[f64], z: &[f64]) -> bool {
        debug_assert_eq!(y.len(), self.len());
        debug_assert_eq!(z.len(), self.len());
        self.0
            .iter()
            .zip(y.iter().zip(z))
            .all(|(p, (&yk, &zk))| p.sign() * (zk - yk) >= 0.0)
    }

    /// Strong Pareto order `y ≺ z`.
    pub fn strictly_precedes(&self, y: &[f64], z: &[f64]) -> bool {
        self.weakly_precedes(y, z) && y != z
    }
}

/// Shape of a similarity kernel.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum KernelKind {
    /// `f(d) = max(0, 1 - d/λ)`
    Linear,
    /// `f(d) = exp(-d/λ)`
    Exponential,
}

/// A strictly decreasing similarity kernel `f` with `f(0) = 1`.
///
/// Evaluation and the generalized inverse live in [`crate::similarity`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimilarityFamily {
    pub kind: KernelKind,
    #[serde(rename = "lambda")]
    pub scale: f64,
}

impl SimilarityFamily {
    pub fn new(kind: KernelKind, scale: f64) -> Result<Self> {
        if !(scale.is_finite() && scale > 0.0) {
            return Err(Error::InvalidScale {
                field: "lambda".into(),
                value: scale,
            });
        }
        Ok(SimilarityFamily { kind, scale })
    }

    pub fn linear(scale: f64) -> Result<Self> {
        Self::new(KernelKind::Linear, scale)
    }

    pub fn exponential(scale: f64) -> Result<Self> {
        Self::new(KernelKind::Exponential, scale)
    }

    /// Lipschitz constant of the kernel on `[0, ∞)`.
    pub fn lipschitz(&self) -> f64 {
        1.0 / self.scale
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AttributeSpec {
    pub name: String,
    /// Unused for situation attributes.
    pub polarity: Polarity,
    pub family: SimilarityFamily,
}

impl AttributeSpec {
    pub fn new(name: impl Into<String>, polarity: Polarity, family: SimilarityFamily) -> Self {
        AttributeSpec {
            name: name.into(),
            polarity,
            family,
        }
    }
}

/// Min-max map between an attribute's raw units and `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AffineMap {
    pub min: f64,
    pub max: f64,
}

impl AffineMap {
    pub fn new(min: f64, max: f64) -> Result<Self> {
        if !(min.is_finite() && max.is_finite() && max > min) {
            return Err(Error::DegenerateRange {
                field: "bounds".into(),
                min,
                max,
            });
        }
        Ok(AffineMap { min, max })
    }

    pub fn to_unit(&self, v: f64) -> Result<f64> {
        if !(self.min..=self.max).contains(&v) {
            return Err(Error::OutOfBounds {
                field: "value".into(),
                value: v,
                min: self.min,
                max: self.max,
            });
        }
        Ok((v - self.min) / (self.max - self.min))
    }

    pub fn from_unit(&self, x: f64) -> f64 {
        self.min + x * (self.max - self.min)
    }
}

/// Maps each raw value into `[0, 1]` with its own bounds and returns the maps
/// used, so results can be reported back in original units.
pub fn normalize(values: &[f64], bounds: &[(f64, f64)]) -> Result<(Vec<f64>, Vec<AffineMap>)> {
    if values.len() != bounds.len() {
        return Err(Error::DimensionMismatch {
            field: "bounds".into(),
            expected: values.len(),
            found: bounds.len(),
        });
    }
    let mut unit = Vec::with_capacity(values.len());
    let mut maps = Vec::with_capacity(values.len());
    for (k, (&v, &(min, max))) in values.iter().zip(bounds).enumerate() {
        let map = AffineMap::new(min, max).map_err(|_| Error::DegenerateRange {
            field: format!("bounds[{k}]"),
            min,
            max,
        })?;
        unit.push(map.to_unit(v).map_err(|_| Error::OutOfBounds {
            field: format!("values[{k}]"),
            value: v,
            min,
            max,
        })?);
        maps.push(map);
    }
    Ok((unit, maps))
}

/// One historical interaction `(s̄ⁱ, ōⁱ)`, optionally with a precomputed
/// situation similarity `Sⁱ`.
#[derive(Debug, Clone, PartialEq)]
pub struct Case {
    pub situation: Vec<f64>,
    pub outcome: Vec<f64>,
    pub similarity_override: Option<f64>,
}

impl Case {
    pub fn new(situation: Vec<f64>, outcome: Vec<f64>) -> Self {
        Case {
            situation,
            outcome,
            similarity_override: None,
        }
    }

    /// A case whose situation similarity is supplied directly.
    pub fn with_similarity(outcome: Vec<f64>, similarity: f64) -> Self {
        Case {
            situation: Vec::new(),
            outcome,
            similarity_override: Some(similarity),
        }
    }
}

/// Validated history of cases for one modelled partner.
#[derive(Debug, Clone, PartialEq)]
pub struct CaseBase {
    situation_attrs: Vec<AttributeSpec>,
    outcome_attrs: Vec<AttributeSpec>,
    cases: Vec<Case>,
    outcome_maps: Vec<Option<AffineMap>>,
}

fn check_unit(field: impl FnOnce() -> String, value: f64) -> Result<()> {
    if (0.0..=1.0).contains(&value) {
        Ok(())
    } else {
        Err(Error::OutOfUnitRange {
            field: field(),
            value,
        })
    }
}

impl CaseBase {
    pub fn new(
        situation_attrs: Vec<AttributeSpec>,
        outcome_attrs: Vec<AttributeSpec>,
        cases: Vec<Case>,
    ) -> Result<Self> {
        if outcome_attrs.is_empty() {
            return Err(Error::DimensionMismatch {
                field: "outcome_attributes".into(),
                expected: 1,
                found: 0,
            });
        }
        if cases.is_empty() {
            return Err(Error::EmptyCaseBase);
        }
        for (group, attrs) in [("situation", &situation_attrs), ("outcome", &outcome_attrs)] {
            for (k, a) in attrs.iter().enumerate() {
                let s = a.family.scale;
                if !(s.is_finite() && s > 0.0) {
                    return Err(Error::InvalidScale {
                        field: format!("{group}_attributes[{k}].lambda"),
                        value: s,
                    });
                }
            }
        }
        let (l, n) = (situation_attrs.len(), outcome_attrs.len());
        for (i, case) in cases.iter().enumerate() {
            if case.outcome.len() != n {
                return Err(Error::DimensionMismatch {
                    field: format!("cases[{i}].outcome"),
                    expected: n,
                    found: case.outcome.len(),
                });
            }
            for (k, &o) in case.outcome.iter().enumerate() {
                check_unit(|| format!("cases[{i}].outcome[{k}]"), o)?;
            }
            match case.similarity_override {
                Some(s) => check_unit(|| format!("cases[{i}].similarity"), s)?,
                None => {
                    if case.situation.len() != l {
                        return Err(Error::DimensionMismatch {
                            field: format!("cases[{i}].situation"),
                            expected: l,
                            found: case.situation.len(),
                        });
                    }
                }
            }
            for (k, &s) in case.situation.iter().enumerate() {
                check_unit(|| format!("cases[{i}].situation[{k}]"), s)?;
            }
        }
        Ok(CaseBase {
            situation_attrs,
            outcome_attrs,
            cases,
            outcome_maps: vec![None; n],
        })
    }

    pub fn situation_attrs(&self) -> &[AttributeSpec] {
        &self.situation_attrs
    }

    pub fn outcome_attrs(&self) -> &[AttributeSpec] {
        &self.outcome_attrs
    }

    pub fn cases(&self) -> &[Case] {
        &self.cases
    }

    pub fn len(&self) -> usize {
        self.cases.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cases.is_empty()
    }

    /// Number of outcome attributes `n`.
    pub fn outcome_dim(&self) -> usize {
        self.outcome_attrs.len()
    }

    /// Number of situation attributes `l`.
    pub fn situation_dim(&self) -> usize {
        self.situation_attrs.len()
    }

    pub fn polarities(&self) -> Polarities {
        Polarities(self.outcome_attrs.iter().map(|a| a.polarity).collect())
    }

    pub fn outcome_families(&self) -> impl Iterator<Item = &SimilarityFamily> + '_ {
        self.outcome_attrs.iter().map(|a| &a.family)
    }

    /// Largest Lipschitz constant among the outcome kernels.
    pub fn max_outcome_lipschitz(&self) -> f64 {
        self.outcome_families()
            .map(SimilarityFamily::lipschitz)
            .fold(0.0, f64::max)
    }

    pub fn outcome_maps(&self) -> &[Option<AffineMap>] {
        &self.outcome_maps
    }

    pub fn has_outcome_maps(&self) -> bool {
        self.outcome_maps.iter().any(Option::is_some)
    }

    /// Maps a unit-cube outcome back into original attribute units.
    pub fn to_original_units(&self, y: &[f64]) -> Vec<f64> {
        y.iter()
            .zip(&self.outcome_maps)
            .map(|(&v, m)| m.map_or(v, |m| m.from_unit(v)))
            .collect()
    }

    fn with_outcome_maps(mut self, maps: Vec<Option<AffineMap>>) -> Self {
        debug_assert_eq!(maps.len(), self.outcome_attrs.len());
        self.outcome_maps = maps;
        self
    }
}

/// Description `s̄ᵗ` of the current situation.
#[derive(Debug, Clone, PartialEq)]
pub struct Query {
    current_situation: Vec<f64>,
}

impl Query {
    pub fn new(case_base: &CaseBase, current_situation: Vec<f64>) -> Result<Self> {
        let needs_situation = case_base
            .cases()
            .iter()
            .any(|c| c.similarity_override.is_none());
        if (needs_situation || !current_situation.is_empty())
            && current_situation.len() != case_base.situation_dim()
        {
            return Err(Error::DimensionMismatch {
                field: "current_situation".into(),
                expected: case_base.situation_dim(),
                found: current_situation.len(),
            });
        }
        for (k, &s) in current_situation.iter().enumerate() {
            check_unit(|| format!("current_situation[{k}]"), s)?;
        }
        Ok(Query { current_situation })
    }

    /// A query for case bases whose cases all carry a similarity override.
    pub fn empty() -> Self {
        Query {
            current_situation: Vec::new(),
        }
    }

    pub fn current_situation(&self) -> &[f64] {
        &self.current_situation
    }
}

/// The negotiator's utility `u(ȳ) = Σ_k w_k · goodness_k(y_k)`.
///
/// Weighted-linear keeps `u` strictly Pareto-increasing, which the frontier
/// argument requires; a weighted minimum would not be.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UtilityModel {
    weights: Vec<f64>,
}

impl UtilityModel {
    pub fn new(weights: Vec<f64>) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::InvalidWeights("at least one weight is required".into()));
        }
        if let Some((k, w)) = weights
            .iter()
            .enumerate()
            .find(|(_, w)| !(w.is_finite() && **w > 0.0))
        {
            return Err(Error::InvalidWeights(format!(
                "weights[{k}] = {w} must be positive"
            )));
        }
        let sum: f64 = weights.iter().sum();
        if (sum - 1.0).abs() > WEIGHT_SUM_TOLERANCE {
            return Err(Error::InvalidWeights(format!(
                "weights sum to {sum}, expected 1"
            )));
        }
        Ok(UtilityModel { weights })
    }

    /// Rescales positive raw weights to sum to one.
    pub fn normalized(raw: &[f64]) -> Result<Self> {
        let sum: f64 = raw.iter().sum();
        if !(sum.is_finite() && sum > 0.0) {
            return Err(Error::InvalidWeights(format!("weights sum to {sum}")));
        }
        let mut weights: Vec<f64> = raw.iter().map(|w| w / sum).collect();
        // put the rounding residue on the largest weight
        let residue = 1.0 - weights.iter().sum::<f64>();
        if let Some(w) = weights.iter_mut().max_by(|a, b| a.total_cmp(b)) {
            *w += residue;
        }
        Self::new(weights)
    }

    pub fn uniform(n: usize) -> Result<Self> {
        Self::normalized(&vec![1.0; n])
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn dim(&self) -> usize {
        self.weights.len()
    }

    /// Unchecked evaluation; callers guarantee matching dimensions.
    #[inline]
    pub fn eval(&self, polarities: &Polarities, y: &[f64]) -> f64 {
        self.weights
            .iter()
            .zip(polarities.iter().zip(y))
            .map(|(w, (p, &yk))| w * p.goodness(yk))
            .sum()
    }
}

/// `u(ȳ)` with dimension checks.
pub fn utility_at(model: &UtilityModel, polarities: &Polarities, y: &[f64]) -> Result<f64> {
    if polarities.len() != model.dim() {
        return Err(Error::DimensionMismatch {
            field: "polarities".into(),
            expected: model.dim(),
            found: polarities.len(),
        });
    }
    if y.len() != model.dim() {
        return Err(Error::DimensionMismatch {
            field: "point".into(),
            expected: model.dim(),
            found: y.len(),
        });
    }
    Ok(model.eval(polarities, y))
}

/// Knobs for the descent estimator and the grid oracle.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EstimatorConfig {
    /// Descent step `Δα`.
    pub step: f64,
    /// Bisection width; `0` reproduces the plain fixed-step descent.
    pub refine_tolerance: f64,
    /// Frontier vertices within this of the best utility are all reported.
    pub tie_tolerance: f64,
    /// Lattice points per axis for oracle runs.
    pub grid_resolution: usize,
}

impl Default for EstimatorConfig {
    fn default() -> Self {
        EstimatorConfig {
            step: 0.01,
            refine_tolerance: 1e-6,
            tie_tolerance: 1e-9,
            grid_resolution: 101,
        }
    }
}

impl EstimatorConfig {
    pub fn unrefined() -> Self {
        EstimatorConfig {
            refine_tolerance: 0.0,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.step > 0.0 && self.step <= 1.0) {
            return Err(Error::InvalidConfig(format!(
                "step must lie in (0, 1], got {}",
                self.step
            )));
        }
        if !(self.refine_tolerance >= 0.0 && self.refine_tolerance < self.step) {
            return Err(Error::InvalidConfig(format!(
                "refine tolerance must lie in [0, step), got {}",
                self.refine_tolerance
            )));
        }
        if !(self.tie_tolerance >= 0.0 && self.tie_tolerance.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "tie tolerance must be non-negative, got {}",
                self.tie_tolerance
            )));
        }
        if self.grid_resolution < 2 {
            return Err(Error::InvalidConfig(format!(
                "grid resolution must be at least 2, got {}",
                self.grid_resolution
            )));
        }
        Ok(())
    }
}

// ---------------------------------------------------------------------------
// JSON documents

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SituationAttributeDoc {
    pub name: String,
    pub family: KernelKind,
    pub lambda: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutcomeAttributeDoc {
    pub name: String,
    pub polarity: i64,
    pub family: KernelKind,
    pub lambda: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bounds: Option<AffineMap>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CaseDoc {
    #[serde(default)]
    pub situation: Vec<f64>,
    pub outcome: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub similarity: Option<f64>,
}

/// The case-base file as read from disk, before validation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CaseBaseDocument {
    #[serde(default)]
    pub situation_attributes: Vec<SituationAttributeDoc>,
    pub outcome_attributes: Vec<OutcomeAttributeDoc>,
    pub cases: Vec<CaseDoc>,
    #[serde(default)]
    pub current_situation: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UtilityDocument {
    pub weights: Vec<f64>,
}

impl UtilityDocument {
    pub fn into_model(self) -> Result<UtilityModel> {
        UtilityModel::new(self.weights)
    }
}

/// Validates a parsed case-base document, normalizing outcome attributes that
/// declare bounds, and returns the case base with its query.
pub fn validate_case_base(doc: &CaseBaseDocument) -> Result<(CaseBase, Query)> {
    if doc.cases.is_empty() {
        return Err(Error::EmptyCaseBase);
    }
    let situation_attrs = doc
        .situation_attributes
        .iter()
        .enumerate()
        .map(|(k, a)| {
            SimilarityFamily::new(a.family, a.lambda)
                .map_err(|_| Error::InvalidScale {
                    field: format!("situation_attributes[{k}].lambda"),
                    value: a.lambda,
                })
                .map(|f| AttributeSpec::new(a.name.clone(), Polarity::Positive, f))
        })
        .collect::<Result<Vec<_>>>()?;

    let mut outcome_attrs = Vec::with_capacity(doc.outcome_attributes.len());
    let mut maps = Vec::with_capacity(doc.outcome_attributes.len());
    for (k, a) in doc.outcome_attributes.iter().enumerate() {
        let polarity = Polarity::try_from(a.polarity).map_err(|_| Error::InvalidPolarity {
            field: format!("outcome_attributes[{k}].polarity"),
            value: a.polarity,
        })?;
        let family = SimilarityFamily::new(a.family, a.lambda).map_err(|_| Error::InvalidScale {
            field: format!("outcome_attributes[{k}].lambda"),
            value: a.lambda,
        })?;
        let map = a
            .bounds
            .map(|b| {
                AffineMap::new(b.min, b.max).map_err(|_| Error::DegenerateRange {
                    field: format!("outcome_attributes[{k}].bounds"),
                    min: b.min,
                    max: b.max,
                })
            })
            .transpose()?;
        outcome_attrs.push(AttributeSpec::new(a.name.clone(), polarity, family));
        maps.push(map);
    }

    let n = outcome_attrs.len();
    let mut cases = Vec::with_capacity(doc.cases.len());
    for (i, c) in doc.cases.iter().enumerate() {
        if c.outcome.len() != n {
            return Err(Error::DimensionMismatch {
                field: format!("cases[{i}].outcome"),
                expected: n,
                found: c.outcome.len(),
            });
        }
        let outcome = c
            .outcome
            .iter()
            .zip(&maps)
            .enumerate()
            .map(|(k, (&v, map))| match map {
                Some(m) => m.to_unit(v).map_err(|_| Error::OutOfBounds {
                    field: format!("cases[{i}].outcome[{k}]"),
                    value: v,
                    min: m.min,
                    max: m.max,
                }),
                None => Ok(v),
            })
            .collect::<Result<Vec<_>>>()?;
        cases.push(Case {
            situation: c.situation.clone(),
            outcome,
            similarity_override: c.similarity,
        });
    }

    let case_base =
        CaseBase::new(situation_attrs, outcome_attrs, cases)?.with_outcome_maps(maps);
    let query = Query::new(&case_base, doc.current_situation.clone())?;
    Ok((case_base, query))
}

/// Serializes a case base back to its document form (unit-cube values).
pub fn to_document(case_base: &CaseBase, query: &Query) -> CaseBaseDocument {
    CaseBaseDocument {
        situation_attributes: case_base
            .situation_attrs()
            .iter()
            .map(|a| SituationAttributeDoc {
                name: a.name.clone(),
                family: a.family.kind,
                lambda: a.family.scale,
            })
            .collect(),
        outcome_attributes: case_base
            .outcome_attrs()
            .iter()
            .map(|a| OutcomeAttributeDoc {
                name: a.name.clone(),
                polarity: a.polarity.into(),
                family: a.family.kind,
                lambda: a.family.scale,
                bounds: None,
            })
            .collect(),
        cases: case_base
            .cases()
            .iter()
            .map(|c| CaseDoc {
                situation: c.situation.clone(),
                outcome: c.outcome.clone(),
                similarity: c.similarity_override,
            })
            .collect(),
        current_situation: query.current_situation().to_vec(),
    }
}
