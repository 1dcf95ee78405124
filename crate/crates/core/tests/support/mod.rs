//! Shared by the oracle, invariant and acceptance test targets: a seeded
//! property runner, input generators, and reference implementations.

#![allow(dead_code)]

pub mod invariants;

use fad_core::{FunctionalDataset, Grid};
use proptest::prelude::*;
use proptest::test_runner::{Config, TestCaseError, TestRng, TestRunner};

/// Instances per property.
pub const CASES: u32 = 200;

pub type CheckResult = Result<(), String>;

/// A named check that can run inside `#[test]` or the acceptance report.
#[derive(Clone, Copy)]
pub struct Check {
    pub name: &'static str,
    pub run: fn() -> CheckResult,
}

/// Runs `test` on `cases` instances drawn from `strategy` with a fixed RNG.
pub fn run_cases<S>(cases: u32, strategy: S, test: impl Fn(S::Value) -> Result<(), TestCaseError>) -> CheckResult
where
    S: Strategy,
    S::Value: std::fmt::Debug,
{
    let config = Config {
        cases,
        failure_persistence: None,
        max_shrink_iters: 512,
        ..Config::default()
    };
    let rng = TestRng::deterministic_rng(config.rng_algorithm);
    let mut runner = TestRunner::new_with_rng(config, rng);
    runner.run(&strategy, test).map_err(|e| e.to_string())
}

/// Runs every check, returning the names of the failures with messages.
pub fn run_all(checks: &[Check]) -> Vec<(&'static str, String)> {
    checks
        .iter()
        .filter_map(|c| (c.run)().err().map(|e| (c.name, e)))
        .collect()
}

pub fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * f64::max(1.0, f64::max(a.abs(), b.abs()))
}

/// Samples mixing coarse values (many ties) and continuous values.
pub fn sample_values(min: usize, max: usize) -> BoxedStrategy<Vec<f64>> {
    prop_oneof![
        prop::collection::vec((-20i32..20).prop_map(|i| f64::from(i) * 0.5), min..=max),
        prop::collection::vec(-10.0..10.0f64, min..=max),
    ]
    .boxed()
}

/// `n x p` dataset on the uniform grid with values in `[-5, 5]`.
pub fn dataset(
    n: std::ops::RangeInclusive<usize>,
    p: std::ops::RangeInclusive<usize>,
) -> BoxedStrategy<FunctionalDataset> {
    (n, p)
        .prop_flat_map(|(n, p)| prop::collection::vec(-5.0..5.0f64, n * p).prop_map(move |v| (p, v)))
        .prop_map(|(p, v)| FunctionalDataset::from_flat(Grid::uniform(p).unwrap(), v).unwrap())
        .boxed()
}

/// Strictly increasing grid on `[0, 1]` with `p` points, uniform or jittered.
pub fn grid(p: std::ops::RangeInclusive<usize>) -> BoxedStrategy<Grid> {
    p.prop_flat_map(|p| {
        prop_oneof![
            Just(Grid::uniform(p).unwrap()),
            prop::collection::vec(0.2..1.0f64, p - 1).prop_map(|gaps| {
                let total: f64 = gaps.iter().sum();
                let mut t = vec![0.0];
                let mut acc = 0.0;
                for g in &gaps[..gaps.len() - 1] {
                    acc += g / total;
                    t.push(acc);
                }
                t.push(1.0);
                Grid::new(t).unwrap()
            }),
        ]
    })
    .boxed()
}

pub fn scaled(ds: &FunctionalDataset, c: f64) -> FunctionalDataset {
    FunctionalDataset::from_flat(ds.grid().clone(), ds.values().iter().map(|v| v * c).collect()).unwrap()
}
