//! Test-side reference computations, written from the definitions and kept
//! independent of the library's evaluation paths.

#![allow(dead_code)]

use qeu::bench::{random_instance, InstanceShape, KernelChoice};
use qeu::fixtures::Instance;
use qeu::model::{KernelKind, Polarities, Polarity, SimilarityFamily};
use rand::Rng;

pub fn kernel(f: &SimilarityFamily, d: f64) -> f64 {
    match f.kind {
        KernelKind::Linear => (1.0 - d / f.scale).max(0.0),
        KernelKind::Exponential => (-d / f.scale).exp(),
    }
}

/// `Sⁱ` recomputed from raw situations.
pub fn strengths(inst: &Instance) -> Vec<f64> {
    let cb = &inst.case_base;
    cb.cases()
        .iter()
        .map(|c| match c.similarity_override {
            Some(s) => s,
            None => cb
                .situation_attrs()
                .iter()
                .zip(c.situation.iter().zip(inst.query.current_situation()))
                .map(|(a, (x, y))| kernel(&a.family, (x - y).abs()))
                .fold(1.0, f64::min),
        })
        .collect()
}

/// `μ(ȳ)` straight from the case-based reasoning rule.
pub fn brute_density(inst: &Instance, s: &[f64], y: &[f64]) -> f64 {
    let cb = &inst.case_base;
    let mut best: f64 = 0.0;
    for (case, &si) in cb.cases().iter().zip(s) {
        let mut m = si;
        for (k, attr) in cb.outcome_attrs().iter().enumerate() {
            m = m.min(kernel(&attr.family, (y[k] - case.outcome[k]).abs()));
        }
        best = best.max(m);
    }
    best
}

pub fn utility(inst: &Instance, y: &[f64]) -> f64 {
    let pol = inst.polarities();
    inst.utility
        .weights()
        .iter()
        .zip(pol.iter().zip(y))
        .map(|(w, (p, &v))| w * if p == Polarity::Positive { v } else { 1.0 - v })
        .sum()
}

/// All lattice points `{0, 1/(G−1), …, 1}ⁿ`, last axis fastest.
pub fn lattice(g: usize, n: usize) -> Vec<Vec<f64>> {
    let total = g.pow(n as u32);
    (0..total)
        .map(|mut j| {
            let mut p = vec![0.0; n];
            for k in (0..n).rev() {
                p[k] = (j % g) as f64 / (g - 1) as f64;
                j /= g;
            }
            p
        })
        .collect()
}

/// For each lattice point, the max of `values` over lattice points that
/// Pareto-dominate it: a running maximum toward the best face, axis by axis.
pub fn cone_sup(values: &[f64], g: usize, pol: &Polarities) -> Vec<f64> {
    let n = pol.len();
    let mut out = values.to_vec();
    for (k, p) in pol.iter().enumerate() {
        let stride = g.pow((n - 1 - k) as u32);
        for base in 0..out.len() {
            if !(base / stride).is_multiple_of(g) {
                continue;
            }
            // walk one line along axis k starting from index 0
            let line: Vec<usize> = (0..g).map(|t| base + t * stride).collect();
            let order: Box<dyn Iterator<Item = &usize>> = match p {
                Polarity::Positive => Box::new(line.iter().rev()),
                Polarity::Negative => Box::new(line.iter()),
            };
            let mut run = f64::NEG_INFINITY;
            for &j in order {
                run = run.max(out[j]);
                out[j] = run;
            }
        }
    }
    out
}

/// A point `z` with `y ⪯ z`: move each coordinate of `y` toward the best face.
pub fn dominating<R: Rng>(rng: &mut R, pol: &Polarities, y: &[f64]) -> Vec<f64> {
    pol.iter()
        .zip(y)
        .map(|(p, &v)| match p {
            Polarity::Positive => v + (1.0 - v) * rng.gen::<f64>(),
            Polarity::Negative => v * rng.gen::<f64>(),
        })
        .collect()
}

pub fn random_point<R: Rng>(rng: &mut R, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.gen()).collect()
}

/// Random instance with `n` outcome attributes, up to `max_cases` cases.
pub fn instance<R: Rng>(rng: &mut R, n: usize, max_cases: usize, kernels: KernelChoice) -> Instance {
    let cases = rng.gen_range(1..=max_cases);
    let shape = InstanceShape {
        kernels,
        ..InstanceShape::new(n, cases)
    };
    random_instance(rng, &shape)
}
