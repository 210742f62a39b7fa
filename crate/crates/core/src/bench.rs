//! Scaling experiment: lattice pipeline versus frontier descent as the number
//! of outcome attributes grows. Absolute times depend on the host; the
//! per-attribute growth factors are what the report is for.

use std::hint::black_box;
use std::ops::RangeInclusive;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::estimator::Estimator;
use crate::fixtures::Instance;
use crate::model::{
    AttributeSpec, Case, CaseBase, EstimatorConfig, KernelKind, Polarity, Query, SimilarityFamily,
    UtilityModel,
};
use crate::oracle::{agreement_tolerance, classical_estimate, OracleOptions};

/// Which kernels a random instance uses on its outcome axes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KernelChoice {
    Linear,
    Exponential,
    Mixed,
}

/// Shape of randomly generated decision problems.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InstanceShape {
    pub outcome_attrs: usize,
    pub cases: usize,
    pub situation_attrs: usize,
    pub lambda: (f64, f64),
    pub kernels: KernelChoice,
}

impl InstanceShape {
    pub fn new(outcome_attrs: usize, cases: usize) -> Self {
        InstanceShape {
            outcome_attrs,
            cases,
            situation_attrs: 2,
            lambda: (0.2, 1.0),
            kernels: KernelChoice::Linear,
        }
    }
}

/// Draws a random but valid problem: uniform outcomes and situations, random
/// polarities and scales, positive weights.
pub fn random_instance<R: Rng + ?Sized>(rng: &mut R, shape: &InstanceShape) -> Instance {
    let (lo, hi) = shape.lambda;
    let family = |rng: &mut R, kind: KernelKind| {
        SimilarityFamily::new(kind, rng.gen_range(lo..=hi)).expect("positive scale")
    };
    let situation_attrs = (0..shape.situation_attrs)
        .map(|k| {
            let f = family(rng, KernelKind::Linear);
            AttributeSpec::new(format!("s{k}"), Polarity::Positive, f)
        })
        .collect();
    let outcome_attrs = (0..shape.outcome_attrs)
        .map(|k| {
            let kind = match shape.kernels {
                KernelChoice::Linear => KernelKind::Linear,
                KernelChoice::Exponential => KernelKind::Exponential,
                KernelChoice::Mixed if rng.gen_bool(0.5) => KernelKind::Linear,
                KernelChoice::Mixed => KernelKind::Exponential,
            };
            let polarity = if rng.gen_bool(0.5) {
                Polarity::Positive
            } else {
                Polarity::Negative
            };
            let f = family(rng, kind);
            AttributeSpec::new(format!("y{k}"), polarity, f)
        })
        .collect();
    let cases = (0..shape.cases)
        .map(|_| {
            let situation = (0..shape.situation_attrs).map(|_| rng.gen::<f64>()).collect();
            let outcome = (0..shape.outcome_attrs).map(|_| rng.gen::<f64>()).collect();
            Case::new(situation, outcome)
        })
        .collect();
    let case_base = CaseBase::new(situation_attrs, outcome_attrs, cases).expect("valid instance");
    let current = (0..shape.situation_attrs).map(|_| rng.gen::<f64>()).collect();
    let query = Query::new(&case_base, current).expect("valid query");
    let raw: Vec<f64> = (0..shape.outcome_attrs)
        .map(|_| rng.gen_range(0.05..=1.0))
        .collect();
    let utility = UtilityModel::normalized(&raw).expect("positive weights");
    Instance {
        case_base,
        query,
        utility,
    }
}

/// Keeps the first `n` outcome attributes of an instance. Cases, situations
/// and similarity strengths are unchanged; weights are renormalized.
pub fn outcome_prefix(inst: &Instance, n: usize) -> Result<Instance> {
    let cb = &inst.case_base;
    if n == 0 || n > cb.outcome_dim() {
        return Err(Error::InvalidConfig(format!(
            "cannot keep {n} of {} outcome attributes",
            cb.outcome_dim()
        )));
    }
    let cases = cb
        .cases()
        .iter()
        .map(|c| Case {
            outcome: c.outcome[..n].to_vec(),
            ..c.clone()
        })
        .collect();
    let case_base = CaseBase::new(cb.situation_attrs().to_vec(), cb.outcome_attrs()[..n].to_vec(), cases)?;
    let query = if inst.query.current_situation().is_empty() {
        Query::empty()
    } else {
        Query::new(&case_base, inst.query.current_situation().to_vec())?
    };
    let utility = UtilityModel::normalized(&inst.utility.weights()[..n])?;
    Ok(Instance {
        case_base,
        query,
        utility,
    })
}

/// The instance benchmarked for `attrs` outcome attributes: the first `attrs`
/// axes of one seeded instance with `max_attrs` axes, so rows differ only in n.
pub fn bench_instance(seed: u64, max_attrs: usize, attrs: usize, cases: usize) -> Result<Instance> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let master = random_instance(&mut rng, &InstanceShape::new(max_attrs, cases));
    outcome_prefix(&master, attrs)
}

#[derive(Debug, Clone)]
pub struct BenchConfig {
    pub attrs: RangeInclusive<usize>,
    pub cases: usize,
    pub grid: usize,
    pub seed: u64,
    pub repetitions: usize,
    /// Descent runs per timing sample; the per-run mean is reported.
    pub estimator_batch: usize,
    pub estimator: EstimatorConfig,
    pub oracle: OracleOptions,
}

impl Default for BenchConfig {
    fn default() -> Self {
        BenchConfig {
            attrs: 2..=5,
            cases: 30,
            grid: 21,
            seed: 42,
            repetitions: 3,
            estimator_batch: 200,
            estimator: EstimatorConfig::default(),
            oracle: OracleOptions::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BenchRow {
    pub att: usize,
    pub cases: usize,
    pub grid: usize,
    pub distr_s: f64,
    pub calcul_s: f64,
    pub sum_s: f64,
    pub estim_s: f64,
    /// `sum_s / estim_s`
    pub ratio: f64,
    #[serde(skip)]
    pub fast_alpha0: f64,
    #[serde(skip)]
    pub grid_alpha0: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BenchReport {
    pub rows: Vec<BenchRow>,
    pub seed: u64,
    pub host: String,
    pub threads: usize,
}

impl BenchReport {
    /// CSV with header `att,cases,grid,distr_s,calcul_s,sum_s,estim_s,ratio`.
    pub fn write_csv<W: std::io::Write>(&self, writer: W) -> csv::Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        for row in &self.rows {
            w.serialize(row)?;
        }
        if self.rows.is_empty() {
            w.write_record(["att", "cases", "grid", "distr_s", "calcul_s", "sum_s", "estim_s", "ratio"])?;
        }
        w.flush()?;
        Ok(())
    }
}

fn median(mut xs: Vec<f64>) -> f64 {
    xs.sort_by(f64::total_cmp);
    let m = xs.len() / 2;
    if xs.len() % 2 == 1 {
        xs[m]
    } else {
        0.5 * (xs[m - 1] + xs[m])
    }
}

pub fn host_note() -> String {
    let cpus = std::thread::available_parallelism().map_or(1, |n| n.get());
    format!("{}-{} cpus={cpus}", std::env::consts::OS, std::env::consts::ARCH)
}

/// Times both pipelines for every attribute count in the range and checks
/// that they agree on `α₀`.
pub fn run_bench(config: &BenchConfig) -> Result<BenchReport> {
    if config.repetitions < 3 {
        return Err(Error::InvalidConfig(format!(
            "at least 3 repetitions required, got {}",
            config.repetitions
        )));
    }
    if config.grid < 2 {
        return Err(Error::InvalidConfig(format!(
            "grid resolution must be at least 2, got {}",
            config.grid
        )));
    }
    if config.attrs.is_empty() || *config.attrs.start() == 0 {
        return Err(Error::InvalidConfig("attribute range must be non-empty and start at 1 or more".into()));
    }
    if config.cases == 0 {
        return Err(Error::EmptyCaseBase);
    }
    config.estimator.validate()?;
    let batch = config.estimator_batch.max(1);

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let master = random_instance(&mut rng, &InstanceShape::new(*config.attrs.end(), config.cases));
    let mut rows = Vec::new();
    for n in config.attrs.clone() {
        let inst = outcome_prefix(&master, n)?;
        let pol = inst.polarities();
        let estimator = Estimator::new(&inst.case_base, &inst.query, &pol, &inst.utility)?;

        let (mut distr, mut calcul, mut sum, mut estim) = (vec![], vec![], vec![], vec![]);
        let mut grid_alpha0 = 0.0;
        let mut fast_alpha0 = 0.0;
        for _ in 0..config.repetitions {
            let classical = classical_estimate(
                &inst.case_base,
                &inst.query,
                &pol,
                &inst.utility,
                config.grid,
                &config.oracle,
            )?;
            distr.push(classical.distribution_secs);
            calcul.push(classical.aggregation_secs);
            sum.push(classical.total_secs());
            grid_alpha0 = classical.alpha0;

            let start = Instant::now();
            for _ in 0..batch {
                fast_alpha0 = black_box(estimator.estimate(black_box(&config.estimator))?).alpha0;
            }
            estim.push(start.elapsed().as_secs_f64() / batch as f64);
        }

        let tolerance = agreement_tolerance(
            config.estimator.step,
            n,
            inst.case_base.max_outcome_lipschitz(),
            config.grid,
        );
        if (fast_alpha0 - grid_alpha0).abs() > tolerance {
            return Err(Error::OracleDisagreement {
                attrs: n,
                fast: fast_alpha0,
                grid: grid_alpha0,
                tolerance,
            });
        }

        let (sum_s, estim_s) = (median(sum), median(estim));
        rows.push(BenchRow {
            att: n,
            cases: config.cases,
            grid: config.grid,
            distr_s: median(distr),
            calcul_s: median(calcul),
            sum_s,
            estim_s,
            ratio: if estim_s > 0.0 { sum_s / estim_s } else { f64::INFINITY },
            fast_alpha0,
            grid_alpha0,
        });
    }
    Ok(BenchReport {
        rows,
        seed: config.seed,
        host: host_note(),
        threads: match config.oracle.parallelism {
            crate::oracle::Parallelism::Sequential => 1,
            crate::oracle::Parallelism::Parallel => rayon::current_num_threads(),
        },
    })
}
