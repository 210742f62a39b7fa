//! Brute-force lattice baseline: discretize `π` and `u` on `Gⁿ` points and
//! aggregate them directly. Exponential in the number of attributes; used as
//! the reference every fast-path result is checked against.

use std::time::Instant;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{CaseBase, Polarities, Query, UtilityModel};
use crate::possibility::PossibilityModel;

/// Default cap on lattice points per field.
pub const DEFAULT_BUDGET: u64 = 100_000_000;

/// Tolerance used to collect argmax sets.
pub const ARGMAX_TOLERANCE: f64 = 1e-12;

const CHUNK: usize = 4096;

/// Allowed gap between the descent's `α₀` and the lattice `QU⁺`: one descent
/// step plus `n · L · spacing`, with `L` the largest kernel Lipschitz constant.
pub fn agreement_tolerance(step: f64, dims: usize, lipschitz: f64, resolution: usize) -> f64 {
    step + dims as f64 * lipschitz / (resolution - 1) as f64
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Parallelism {
    #[default]
    Sequential,
    /// Chunks of the lattice are filled on the current rayon pool.
    Parallel,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct OracleOptions {
    pub budget: u64,
    pub parallelism: Parallelism,
}

impl Default for OracleOptions {
    fn default() -> Self {
        OracleOptions {
            budget: DEFAULT_BUDGET,
            parallelism: Parallelism::Sequential,
        }
    }
}

/// Values on the lattice `{0, 1/(G−1), …, 1}ⁿ`, row-major with the last axis
/// varying fastest.
#[derive(Debug, Clone, PartialEq)]
pub struct GridField {
    resolution: usize,
    dims: usize,
    values: Vec<f64>,
}

/// Number of lattice points, or a budget error carrying `Gⁿ`.
pub fn lattice_size(resolution: usize, dims: usize, budget: u64) -> Result<usize> {
    if resolution < 2 {
        return Err(Error::InvalidConfig(format!(
            "grid resolution must be at least 2, got {resolution}"
        )));
    }
    let required = (resolution as f64).powi(dims as i32);
    if required > budget as f64 {
        return Err(Error::BudgetExceeded { required, budget });
    }
    Ok(resolution.pow(dims as u32))
}

impl GridField {
    /// Evaluates `f` at every lattice point.
    pub fn build<F>(resolution: usize, dims: usize, options: &OracleOptions, f: F) -> Result<Self>
    where
        F: Fn(&[f64]) -> f64 + Sync,
    {
        let len = lattice_size(resolution, dims, options.budget)?;
        let mut values = vec![0.0; len];
        let fill = |start: usize, chunk: &mut [f64]| {
            let mut idx = vec![0usize; dims];
            let mut point = vec![0.0; dims];
            Self::unravel_into(resolution, start, &mut idx);
            let spacing = 1.0 / (resolution - 1) as f64;
            for (k, p) in point.iter_mut().enumerate() {
                *p = idx[k] as f64 * spacing;
            }
            for v in chunk.iter_mut() {
                *v = f(&point);
                // odometer increment, last axis fastest
                for k in (0..dims).rev() {
                    idx[k] += 1;
                    if idx[k] < resolution {
                        point[k] = idx[k] as f64 * spacing;
                        break;
                    }
                    idx[k] = 0;
                    point[k] = 0.0;
                }
            }
        };
        match options.parallelism {
            Parallelism::Sequential => fill(0, &mut values),
            Parallelism::Parallel => values
                .par_chunks_mut(CHUNK)
                .enumerate()
                .for_each(|(c, chunk)| fill(c * CHUNK, chunk)),
        }
        Ok(GridField {
            resolution,
            dims,
            values,
        })
    }

    /// Wraps precomputed values; `values.len()` must equal `Gⁿ`.
    pub fn from_values(resolution: usize, dims: usize, values: Vec<f64>) -> Result<Self> {
        let len = lattice_size(resolution, dims, u64::MAX)?;
        if values.len() != len {
            return Err(Error::ShapeMismatch(format!(
                "expected {len} values, got {}",
                values.len()
            )));
        }
        if let Some(v) = values.iter().find(|v| !(0.0..=1.0).contains(*v)) {
            return Err(Error::OutOfUnitRange {
                field: "grid value".into(),
                value: *v,
            });
        }
        Ok(GridField {
            resolution,
            dims,
            values,
        })
    }

    fn unravel_into(resolution: usize, mut j: usize, idx: &mut [usize]) {
        for slot in idx.iter_mut().rev() {
            *slot = j % resolution;
            j /= resolution;
        }
    }

    pub fn resolution(&self) -> usize {
        self.resolution
    }

    pub fn dims(&self) -> usize {
        self.dims
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn spacing(&self) -> f64 {
        1.0 / (self.resolution - 1) as f64
    }

    /// Per-axis lattice indices of flat index `j`.
    pub fn unravel(&self, j: usize) -> Vec<usize> {
        let mut idx = vec![0; self.dims];
        Self::unravel_into(self.resolution, j, &mut idx);
        idx
    }

    /// Coordinates of flat index `j`.
    pub fn point(&self, j: usize) -> Vec<f64> {
        let s = self.spacing();
        self.unravel(j).into_iter().map(|i| i as f64 * s).collect()
    }

    fn check_shape(&self, other: &GridField) -> Result<()> {
        if self.resolution != other.resolution || self.dims != other.dims {
            return Err(Error::ShapeMismatch(format!(
                "{}^{} vs {}^{}",
                self.resolution, self.dims, other.resolution, other.dims
            )));
        }
        Ok(())
    }

    /// CSV dump: one column per axis, then `value`.
    pub fn write_csv<W: std::io::Write>(&self, writer: W) -> csv::Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        let mut header: Vec<String> = (0..self.dims).map(|k| format!("x{k}")).collect();
        header.push("value".into());
        w.write_record(&header)?;
        for (j, v) in self.values.iter().enumerate() {
            let mut row: Vec<String> = self.point(j).iter().map(f64::to_string).collect();
            row.push(v.to_string());
            w.write_record(&row)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// `π` on the lattice, evaluated pointwise in closed form.
pub fn grid_distribution(model: &PossibilityModel<'_>, resolution: usize, options: &OracleOptions) -> Result<GridField> {
    GridField::build(resolution, model.dim(), options, |y| model.distribution(y))
}

/// `μ` on the lattice.
pub fn grid_density(model: &PossibilityModel<'_>, resolution: usize, options: &OracleOptions) -> Result<GridField> {
    GridField::build(resolution, model.dim(), options, |y| model.density(y))
}

/// `u` on the lattice.
pub fn grid_utility(
    utility: &UtilityModel,
    polarities: &Polarities,
    resolution: usize,
    options: &OracleOptions,
) -> Result<GridField> {
    if utility.dim() != polarities.len() {
        return Err(Error::DimensionMismatch {
            field: "weights".into(),
            expected: polarities.len(),
            found: utility.dim(),
        });
    }
    GridField::build(resolution, utility.dim(), options, |y| utility.eval(polarities, y))
}

fn indices_within(values: impl Iterator<Item = f64>, best: f64) -> Vec<usize> {
    values
        .enumerate()
        .filter(|(_, v)| *v >= best - ARGMAX_TOLERANCE)
        .map(|(j, _)| j)
        .collect()
}

/// `QU⁺ = max min(π, u)` over the lattice, with all maximizing indices.
pub fn qu_optimistic(pi: &GridField, u: &GridField) -> Result<(f64, Vec<usize>)> {
    pi.check_shape(u)?;
    let agg = || pi.values.iter().zip(&u.values).map(|(p, v)| p.min(*v));
    let best = agg().fold(f64::NEG_INFINITY, f64::max);
    Ok((best, indices_within(agg(), best)))
}

/// How the pessimistic criterion treats `π`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PessimisticMode {
    /// `min max(π, u)`
    AsPrinted,
    /// `min max(1 − π, u)`
    Negated,
}

pub fn qu_pessimistic(pi: &GridField, u: &GridField, mode: PessimisticMode) -> Result<f64> {
    pi.check_shape(u)?;
    Ok(pi
        .values
        .iter()
        .zip(&u.values)
        .map(|(&p, &v)| match mode {
            PessimisticMode::AsPrinted => p.max(v),
            PessimisticMode::Negated => (1.0 - p).max(v),
        })
        .fold(f64::INFINITY, f64::min))
}

/// The agreement set `𝒫` (maximizers of `min(u, π)`) and the predicted
/// outcomes `O` (members of `𝒫` maximizing `u`), as flat lattice indices.
pub fn argmax_sets(pi: &GridField, u: &GridField) -> Result<(Vec<usize>, Vec<usize>)> {
    let (_, agreement) = qu_optimistic(pi, u)?;
    let best_u = agreement
        .iter()
        .map(|&j| u.values[j])
        .fold(f64::NEG_INFINITY, f64::max);
    let outcomes = agreement
        .iter()
        .copied()
        .filter(|&j| u.values[j] >= best_u - ARGMAX_TOLERANCE)
        .collect();
    Ok((agreement, outcomes))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LatticeOutcome {
    pub index: usize,
    pub coords: Vec<f64>,
    pub utility: f64,
}

/// Result of the lattice pipeline with its two phase timings.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClassicalEstimate {
    /// `QU⁺` on the lattice.
    pub alpha0: f64,
    pub outcomes: Vec<LatticeOutcome>,
    pub agreement_size: usize,
    pub resolution: usize,
    pub distribution_secs: f64,
    pub aggregation_secs: f64,
}

impl ClassicalEstimate {
    pub fn total_secs(&self) -> f64 {
        self.distribution_secs + self.aggregation_secs
    }
}

/// Builds `π` on the lattice, then aggregates it with `u` into `QU⁺` and `O`.
pub fn classical_estimate(
    case_base: &CaseBase,
    query: &Query,
    polarities: &Polarities,
    utility: &UtilityModel,
    resolution: usize,
    options: &OracleOptions,
) -> Result<ClassicalEstimate> {
    let model = PossibilityModel::new(case_base, query, polarities)?;
    let start = Instant::now();
    let pi = grid_distribution(&model, resolution, options)?;
    let distribution_secs = start.elapsed().as_secs_f64();

    let start = Instant::now();
    let u = grid_utility(utility, polarities, resolution, options)?;
    let (alpha0, _) = qu_optimistic(&pi, &u)?;
    let (agreement, outcome_idx) = argmax_sets(&pi, &u)?;
    let aggregation_secs = start.elapsed().as_secs_f64();

    let outcomes = outcome_idx
        .into_iter()
        .map(|j| LatticeOutcome {
            index: j,
            coords: u.point(j),
            utility: u.values[j],
        })
        .collect();
    Ok(ClassicalEstimate {
        alpha0,
        outcomes,
        agreement_size: agreement.len(),
        resolution,
        distribution_secs,
        aggregation_secs,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::model::Polarities;

    fn fixture_fields(inst: &fixtures::Instance, g: usize) -> (GridField, GridField) {
        let pol = inst.polarities();
        let model = PossibilityModel::new(&inst.case_base, &inst.query, &pol).unwrap();
        let opts = OracleOptions::default();
        (
            grid_distribution(&model, g, &opts).unwrap(),
            grid_utility(&inst.utility, &pol, g, &opts).unwrap(),
        )
    }

    fn constant(g: usize, n: usize, v: f64) -> GridField {
        GridField::build(g, n, &OracleOptions::default(), |_| v).unwrap()
    }

    #[test]
    fn fixture_a_coarse_grid() {
        let (pi, _) = fixture_fields(&fixtures::fixture_a(), 3);
        assert_eq!(pi.values(), &[1.0, 1.0, 0.0]);
    }

    #[test]
    fn lattice_layout() {
        let f = GridField::build(2, 2, &OracleOptions::default(), |y| 0.5 * y[0] + 0.25 * y[1]).unwrap();
        assert_eq!(f.len(), 4);
        assert_eq!(f.values(), &[0.0, 0.25, 0.5, 0.75]);
        assert_eq!(f.point(1), vec![0.0, 1.0]);
        let g = GridField::build(7, 3, &OracleOptions::default(), |y| y[0] * 0.5 + y[1] * 0.3 + y[2] * 0.2).unwrap();
        for j in [0, 5, 17, 100, 342] {
            let p = g.point(j);
            assert!((g.values()[j] - (p[0] * 0.5 + p[1] * 0.3 + p[2] * 0.2)).abs() < 1e-12);
        }
    }

    #[test]
    fn parallel_fill_is_bitwise_identical() {
        let b = fixtures::fixture_b();
        let pol = b.polarities();
        let model = PossibilityModel::new(&b.case_base, &b.query, &pol).unwrap();
        let seq = grid_distribution(&model, 150, &OracleOptions::default()).unwrap();
        let par = grid_distribution(
            &model,
            150,
            &OracleOptions {
                parallelism: Parallelism::Parallel,
                ..Default::default()
            },
        )
        .unwrap();
        assert_eq!(seq, par);
    }

    #[test]
    fn budget_guard() {
        let err = lattice_size(100, 5, DEFAULT_BUDGET).unwrap_err();
        assert!(matches!(err, Error::BudgetExceeded { required, .. } if required == 1e10));
        assert!(lattice_size(1, 2, DEFAULT_BUDGET).is_err());
    }

    #[test]
    fn optimistic_examples() {
        let (pi, u) = fixture_fields(&fixtures::fixture_a(), 1001);
        let (v, idx) = qu_optimistic(&pi, &u).unwrap();
        assert!((v - 2.0 / 3.0).abs() <= 0.002);
        assert!(!idx.is_empty());
        for j in 0..pi.len() {
            assert!(v >= pi.values()[j].min(u.values()[j]));
        }

        let pol = Polarities::from_flags(&[1]).unwrap();
        let id = grid_utility(&crate::model::UtilityModel::new(vec![1.0]).unwrap(), &pol, 11, &OracleOptions::default()).unwrap();
        let (v, idx) = qu_optimistic(&constant(11, 1, 1.0), &id).unwrap();
        assert_eq!(v, 1.0);
        assert_eq!(idx, vec![10]);
        let (v, idx) = qu_optimistic(&constant(11, 1, 0.0), &id).unwrap();
        assert_eq!(v, 0.0);
        assert_eq!(idx.len(), 11);

        assert!(qu_optimistic(&constant(11, 1, 0.0), &constant(12, 1, 0.0)).is_err());
    }

    #[test]
    fn pessimistic_examples() {
        let pol = Polarities::from_flags(&[1]).unwrap();
        let id = grid_utility(&crate::model::UtilityModel::new(vec![1.0]).unwrap(), &pol, 11, &OracleOptions::default()).unwrap();
        let ones = constant(11, 1, 1.0);
        assert_eq!(qu_pessimistic(&ones, &id, PessimisticMode::AsPrinted).unwrap(), 1.0);
        assert_eq!(qu_pessimistic(&ones, &id, PessimisticMode::Negated).unwrap(), 0.0);

        // min over y of max(π(y), y) with π(y) = 2 − 2y past 0.5: balanced at 2/3
        let (pi, u) = fixture_fields(&fixtures::fixture_a(), 1001);
        let v = qu_pessimistic(&pi, &u, PessimisticMode::AsPrinted).unwrap();
        let brute = (0..=1000)
            .map(|j| {
                let y = j as f64 / 1000.0;
                let p = if y <= 0.5 { 1.0 } else { (1.0 - (y - 0.5) / 0.5).max(0.0) };
                p.max(y)
            })
            .fold(f64::INFINITY, f64::min);
        assert!((v - brute).abs() < 1e-12);
        assert!((v - 2.0 / 3.0).abs() <= 0.002);
    }

    #[test]
    fn argmax_sets_examples() {
        let (pi, u) = fixture_fields(&fixtures::fixture_a(), 1001);
        let (agree, out) = argmax_sets(&pi, &u).unwrap();
        for &j in &agree {
            assert!((pi.point(j)[0] - 0.667).abs() <= 0.0015);
        }
        assert_eq!(out.len(), 1);
        assert!((u.point(out[0])[0] - 0.667).abs() <= 0.0015);

        let b = fixtures::fixture_b();
        let pol = b.polarities();
        let u = grid_utility(&b.utility, &pol, 11, &OracleOptions::default()).unwrap();
        let (agree, out) = argmax_sets(&constant(11, 2, 1.0), &u).unwrap();
        assert_eq!(agree.len(), 1);
        assert_eq!(u.point(out[0]), pol.best_point());
    }

    #[test]
    fn classical_fixtures() {
        let a = fixtures::fixture_a();
        let r = classical_estimate(&a.case_base, &a.query, &a.polarities(), &a.utility, 101, &OracleOptions::default()).unwrap();
        assert!((r.alpha0 - 0.665).abs() <= 0.005 + 1e-12);
        assert_eq!(r.outcomes.len(), 1);
        let x = r.outcomes[0].coords[0];
        assert!((x - 0.66).abs() < 1e-9 || (x - 0.67).abs() < 1e-9);

        let b = fixtures::fixture_b();
        let r = classical_estimate(&b.case_base, &b.query, &b.polarities(), &b.utility, 201, &OracleOptions::default()).unwrap();
        assert!((r.alpha0 - 11.0 / 15.0).abs() <= 0.004);
        assert!(r.distribution_secs >= 0.0 && r.aggregation_secs >= 0.0);
    }

    #[test]
    fn csv_dump() {
        let (pi, _) = fixture_fields(&fixtures::fixture_a(), 3);
        let mut buf = Vec::new();
        pi.write_csv(&mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "x0,value\n0,1\n0.5,1\n1,0\n");
    }
}
