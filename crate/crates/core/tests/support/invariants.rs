//! One property per documented invariant, each over `CASES` instances.

use fad_core::ach::{convex_hull_area, AchConfig, AchDepth, PlanarPointSet};
use fad_core::baselines::{IForestConfig, IsolationForest, LofModel, MultivariateDataset};
use fad_core::featuremaps::{FeatureMap, MapKind, OutlyingnessSeries};
use fad_core::fif::{isolation_score, AtomRefresh, Dictionary, DictionarySource, FiForest, FifConfig};
use fad_core::filtering::{FpcaModel, HaarBasis};
use fad_core::integrated::{BaseDepth, IntegratedDepth, IntegratedDepthConfig, Weighting};
use fad_core::metrics::{auc, average_precision, roc_curve};
use fad_core::simulate::{self, AnomalyModel, AnomalyParams, ContaminationSpec};
use fad_core::udepth::{asym_projection_depth_1d, medcouple, projection_depth_1d, tukey_depth_1d, UnivariateSample};
use fad_core::{rng, FunctionalDataset, Grid, ScoreVector};
use proptest::prelude::*;

use super::oracles::{label_vector, lof_agrees, lof_instance, scored_labels, tukey_oracle};
use super::{close, dataset, run_cases, sample_values, scaled, Check, CheckResult, CASES};

pub const CHECKS: &[Check] = &[
    Check {
        name: "core: resample onto the same grid is the identity",
        run: resample_idempotent,
    },
    Check {
        name: "core: derivative of aX + b is a times the derivative",
        run: derivative_affine,
    },
    Check {
        name: "udepth: Tukey depth matches brute-force counting (n <= 50)",
        run: tukey_brute_force,
    },
    Check {
        name: "udepth: Tukey depth invariant under increasing transforms",
        run: tukey_monotone_invariance,
    },
    Check {
        name: "udepth: projection depth invariant under affine maps",
        run: projection_affine_invariance,
    },
    Check {
        name: "udepth: medcouple odd under negation, invariant under a X + b",
        run: medcouple_equivariance,
    },
    Check {
        name: "udepth: all depths lie in [0, 1]",
        run: depths_bounded,
    },
    Check {
        name: "integrated: uniform-mean depth invariant under column permutation",
        run: integrated_permutation,
    },
    Check {
        name: "integrated: Tukey depth of a member is at least 1/n",
        run: integrated_member_bound,
    },
    Check {
        name: "integrated: depth_to_score twice is the identity",
        run: depth_score_involution,
    },
    Check {
        name: "integrated: projection ranking invariant under per-time affine maps",
        run: integrated_affine_ranking,
    },
    Check {
        name: "ach: depth lies in (0, 1]",
        run: ach_range,
    },
    Check {
        name: "ach: amplifying the query never raises its depth",
        run: ach_monotone,
    },
    Check {
        name: "ach: enumeration equals the full-average formula (n <= 6, J = 2)",
        run: ach_full_average,
    },
    Check {
        name: "ach: seeded determinism",
        run: ach_determinism,
    },
    Check {
        name: "fif: score strictly decreasing in mean path length",
        run: fif_score_decreasing,
    },
    Check {
        name: "fif: scores lie in (0, 1)",
        run: fif_score_range,
    },
    Check {
        name: "fif: self dictionary with alpha = 1 is scale invariant",
        run: fif_scale_invariance,
    },
    Check {
        name: "fif: seeded forests are reproducible",
        run: fif_reproducible,
    },
    Check {
        name: "filtering: FPCA eigenvalues non-negative with trace identity",
        run: fpca_trace,
    },
    Check {
        name: "filtering: FPCA training scores are centred",
        run: fpca_centred,
    },
    Check {
        name: "filtering: Haar projection is linear",
        run: haar_linear,
    },
    Check {
        name: "baselines: IF and LOF rankings invariant under rescaling",
        run: baseline_rescaling,
    },
    Check {
        name: "baselines: LOF agrees with the definition (n <= 30)",
        run: lof_definition,
    },
    Check {
        name: "baselines: IF scores in (0, 1), decreasing in path length",
        run: iforest_range,
    },
    Check {
        name: "featuremaps: VO >= 0, zero iff the series is constant",
        run: vo_zero_iff_constant,
    },
    Check {
        name: "featuremaps: FOM coordinates are non-negative",
        run: fom_nonnegative,
    },
    Check {
        name: "featuremaps: test-time features of members equal training features",
        run: features_consistent,
    },
    Check {
        name: "simulate: unselected rows are bit-identical",
        run: untouched_rows,
    },
    Check {
        name: "simulate: provenance replay reproduces the contaminated rows",
        run: provenance_replay,
    },
    Check {
        name: "simulate: label count equals round(fraction n)",
        run: label_count,
    },
    Check {
        name: "simulate: shape anomalies satisfy |Y| <= 1",
        run: shape_bounded,
    },
    Check {
        name: "metrics: AUC invariant under increasing transforms",
        run: auc_monotone_invariance,
    },
    Check {
        name: "metrics: AUC(s) + AUC(-s) = 1",
        run: auc_complement,
    },
    Check {
        name: "metrics: AP equals prevalence for constant scores, bounded below",
        run: ap_bounds,
    },
    Check {
        name: "metrics: ROC points monotone in both coordinates",
        run: roc_monotone,
    },
    Check {
        name: "parallel: ACH identical on 1 and 3 threads",
        run: ach_parallel,
    },
    Check {
        name: "parallel: FIF identical on 1 and 3 threads",
        run: fif_parallel,
    },
    Check {
        name: "parallel: IF identical on 1 and 3 threads",
        run: iforest_parallel,
    },
];

fn resample_idempotent() -> CheckResult {
    run_cases(CASES, dataset(1..=6, 2..=30), |ds| {
        prop_assert_eq!(ds.resample_linear(ds.grid()).unwrap(), ds);
        Ok(())
    })
}

fn derivative_affine() -> CheckResult {
    let s = (dataset(1..=5, 2..=40), -10.0..10.0f64, -10.0..10.0f64);
    run_cases(CASES, s, |(ds, a, b)| {
        let ax: Vec<f64> = ds.values().iter().map(|v| a * v + b).collect();
        let lhs = FunctionalDataset::from_flat(ds.grid().clone(), ax)
            .unwrap()
            .derivative();
        let rhs = ds.derivative();
        for (l, r) in lhs.values().iter().zip(rhs.values()) {
            prop_assert!((l - a * r).abs() <= 1e-8 * (1.0 + (a * r).abs()), "{l} vs {}", a * r);
        }
        Ok(())
    })
}

fn tukey_brute_force() -> CheckResult {
    run_cases(CASES, (sample_values(1, 50), -12.0..12.0f64), |(v, x)| {
        let s = UnivariateSample::new(v.clone()).unwrap();
        prop_assert_eq!(tukey_depth_1d(x, &s), tukey_oracle(x, &v));
        Ok(())
    })
}

fn tukey_monotone_invariance() -> CheckResult {
    let transforms: [fn(f64) -> f64; 3] = [f64::exp, |x| x * x * x + x, f64::atan];
    run_cases(CASES, (sample_values(1, 50), -12i32..12, 0usize..3), |(v, x, k)| {
        let f = transforms[k];
        let x = f64::from(x) * 0.5;
        let s = UnivariateSample::new(v.clone()).unwrap();
        let fs = UnivariateSample::new(v.iter().map(|&y| f(y)).collect()).unwrap();
        prop_assert_eq!(tukey_depth_1d(x, &s), tukey_depth_1d(f(x), &fs));
        Ok(())
    })
}

fn projection_affine_invariance() -> CheckResult {
    let s = (
        sample_values(2, 50),
        -12.0..12.0f64,
        prop_oneof![-5.0..-0.1f64, 0.1..5.0f64],
        -10.0..10.0f64,
    );
    run_cases(CASES, s, |(v, x, a, b)| {
        let s0 = UnivariateSample::new(v.clone()).unwrap();
        prop_assume!(s0.mad() > 0.0);
        let s1 = UnivariateSample::new(v.iter().map(|y| a * y + b).collect()).unwrap();
        let (d0, d1) = (projection_depth_1d(x, &s0), projection_depth_1d(a * x + b, &s1));
        prop_assert!((d0 - d1).abs() < 1e-9, "{d0} vs {d1}");
        Ok(())
    })
}

fn medcouple_equivariance() -> CheckResult {
    let s = (sample_values(1, 60), 0.1..5.0f64, -10.0..10.0f64);
    run_cases(CASES, s, |(v, a, b)| {
        let mc = medcouple(&UnivariateSample::new(v.clone()).unwrap());
        let neg = medcouple(&UnivariateSample::new(v.iter().map(|y| -y).collect()).unwrap());
        prop_assert!((mc + neg).abs() < 1e-12, "{mc} vs {neg}");
        let aff = medcouple(&UnivariateSample::new(v.iter().map(|y| a * y + b).collect()).unwrap());
        prop_assert!((mc - aff).abs() < 1e-9, "{mc} vs {aff}");
        Ok(())
    })
}

fn depths_bounded() -> CheckResult {
    let s = (sample_values(1, 50), prop_oneof![-1e6..1e6f64, -12.0..12.0f64]);
    run_cases(CASES, s, |(v, x)| {
        let s = UnivariateSample::new(v).unwrap();
        for d in [
            tukey_depth_1d(x, &s),
            projection_depth_1d(x, &s),
            asym_projection_depth_1d(x, &s),
        ] {
            prop_assert!((0.0..=1.0).contains(&d), "{d}");
        }
        Ok(())
    })
}

fn base_depth() -> impl Strategy<Value = BaseDepth> {
    prop_oneof![
        Just(BaseDepth::Tukey),
        Just(BaseDepth::Projection),
        Just(BaseDepth::AsymProjection)
    ]
}

fn integrated_permutation() -> CheckResult {
    let s = (dataset(3..=12, 2..=12), base_depth(), any::<u64>()).prop_flat_map(|(ds, b, _)| {
        let p = ds.n_points();
        (Just(ds), Just(b), Just((0..p).collect::<Vec<usize>>()).prop_shuffle())
    });
    run_cases(CASES, s, |(ds, base, perm)| {
        let permute = |x: &[f64]| perm.iter().map(|&j| x[j]).collect::<Vec<f64>>();
        let rows: Vec<Vec<f64>> = ds.curves().map(permute).collect();
        let pds = FunctionalDataset::from_rows(ds.grid().clone(), rows).unwrap();
        let cfg = IntegratedDepthConfig {
            base,
            weights: Weighting::UniformMean,
        };
        let a = IntegratedDepth::fit(&ds, cfg);
        let b = IntegratedDepth::fit(&pds, cfg);
        for i in 0..ds.n_curves() {
            let (x, y) = (a.depth(ds.curve(i)).unwrap(), b.depth(pds.curve(i)).unwrap());
            prop_assert!((x - y).abs() < 1e-12, "{x} vs {y}");
        }
        Ok(())
    })
}

fn integrated_member_bound() -> CheckResult {
    run_cases(CASES, dataset(1..=15, 2..=20), |ds| {
        let d = IntegratedDepth::fit(&ds, IntegratedDepthConfig::for_grid(BaseDepth::Tukey, ds.grid()));
        let n = ds.n_curves() as f64;
        for x in d.depths(&ds).unwrap() {
            prop_assert!(x >= 1.0 / n - 1e-15, "{x} < 1/{n}");
        }
        Ok(())
    })
}

fn depth_score_involution() -> CheckResult {
    run_cases(CASES, prop::collection::vec(0.0..=1.0f64, 1..50), |d| {
        let once = fad_core::integrated::depth_to_score(&d).unwrap();
        let twice = fad_core::integrated::depth_to_score(once.as_slice()).unwrap();
        // 1 - (1 - d) is exact up to the rounding of 1 - d
        for (t, x) in twice.as_slice().iter().zip(&d) {
            prop_assert!((t - x).abs() <= f64::EPSILON / 2.0, "{t} vs {x}");
        }
        Ok(())
    })
}

fn integrated_affine_ranking() -> CheckResult {
    let s = dataset(3..=12, 2..=10).prop_flat_map(|ds| {
        let p = ds.n_points();
        (Just(ds), prop::collection::vec((0.1..10.0f64, -10.0..10.0f64), p))
    });
    run_cases(CASES, s, |(ds, ab)| {
        let p = ds.n_points();
        let mapped: Vec<f64> = ds
            .values()
            .iter()
            .enumerate()
            .map(|(k, v)| ab[k % p].0 * v + ab[k % p].1)
            .collect();
        let mds = FunctionalDataset::from_flat(ds.grid().clone(), mapped).unwrap();
        let cfg = IntegratedDepthConfig::for_grid(BaseDepth::Projection, ds.grid());
        let a = IntegratedDepth::fit(&ds, cfg).depths(&ds).unwrap();
        let b = IntegratedDepth::fit(&mds, cfg).depths(&mds).unwrap();
        for (x, y) in a.iter().zip(&b) {
            prop_assert!((x - y).abs() < 1e-9, "{x} vs {y}");
        }
        for i in 0..a.len() {
            for j in 0..a.len() {
                if a[i] < a[j] - 1e-9 {
                    prop_assert!(b[i] < b[j], "ranking of {i} and {j} changed");
                }
            }
        }
        Ok(())
    })
}

fn ach_cfg(j: usize, n_subsets: usize, seed: u64) -> AchConfig {
    AchConfig { j, n_subsets, seed }
}

fn ach_range() -> CheckResult {
    let s = (dataset(2..=8, 2..=10), 1usize..=3, any::<u64>()).prop_flat_map(|(ds, j, seed)| {
        let p = ds.n_points();
        (Just(ds), Just(j), Just(seed), prop::collection::vec(-10.0..10.0f64, p))
    });
    run_cases(CASES, s, |(ds, j, seed, q)| {
        let j = j.min(ds.n_curves() - 1).max(1);
        let m = AchDepth::fit(&ds, ach_cfg(j, 64, seed)).unwrap();
        let mut all = m.member_depths().unwrap();
        all.push(m.depth(&q).unwrap());
        // a subset hull has positive area once every member graph does; with
        // flat members only, a query adding area scores a zero ratio
        let solid = ds
            .curves()
            .all(|c| convex_hull_area(&graph_union(ds.grid(), &[c])) > 0.0);
        for d in all {
            prop_assert!((0.0..=1.0).contains(&d), "{d}");
            prop_assert!(d > 0.0 || !solid, "zero depth against non-degenerate members");
        }
        Ok(())
    })
}

fn ach_monotone() -> CheckResult {
    let s = (dataset(2..=10, 3..=12), 1usize..=3, 1.0..5.0f64).prop_flat_map(|(ds, j, c)| {
        let p = ds.n_points();
        (Just(ds), Just(j), Just(c), prop::collection::vec(-6.0..6.0f64, p - 2))
    });
    run_cases(CASES, s, |(ds, j, c, interior)| {
        // zero endpoints: the scaled graph's hull then contains the original
        let mut q = vec![0.0];
        q.extend(interior);
        q.push(0.0);
        let m = AchDepth::fit(&ds, ach_cfg(j.min(ds.n_curves()), 64, 3)).unwrap();
        let cq: Vec<f64> = q.iter().map(|v| c * v).collect();
        let (d, dc) = (m.depth(&q).unwrap(), m.depth(&cq).unwrap());
        prop_assert!(dc <= d + 1e-12, "{dc} > {d}");
        Ok(())
    })
}

fn graph_union(grid: &Grid, curves: &[&[f64]]) -> PlanarPointSet {
    PlanarPointSet(
        curves
            .iter()
            .flat_map(|c| grid.points().iter().copied().zip(c.iter().copied()))
            .collect(),
    )
}

fn ach_full_average() -> CheckResult {
    let s = dataset(3..=6, 2..=8).prop_flat_map(|ds| {
        let p = ds.n_points();
        (Just(ds), prop::collection::vec(-8.0..8.0f64, p))
    });
    run_cases(CASES, s, |(ds, q)| {
        let n = ds.n_curves();
        let m = AchDepth::fit(&ds, ach_cfg(2, 10 * n * (n - 1) / 2, 0)).unwrap();
        prop_assert!(m.is_exhaustive());
        let ratio = |a: usize, b: usize, x: &[f64]| {
            let without = convex_hull_area(&graph_union(ds.grid(), &[ds.curve(a), ds.curve(b)]));
            let with = convex_hull_area(&graph_union(ds.grid(), &[ds.curve(a), ds.curve(b), x]));
            if with == 0.0 {
                1.0
            } else {
                without / with
            }
        };
        let pairs: Vec<(usize, usize)> = (0..n).flat_map(|a| (a + 1..n).map(move |b| (a, b))).collect();
        let want = pairs.iter().map(|&(a, b)| ratio(a, b, &q)).sum::<f64>() / pairs.len() as f64;
        let got = m.depth(&q).unwrap();
        prop_assert!((got - want).abs() < 1e-12, "{got} vs {want}");
        for i in 0..n {
            let own: Vec<f64> = pairs
                .iter()
                .filter(|&&(a, b)| a != i && b != i)
                .map(|&(a, b)| ratio(a, b, ds.curve(i)))
                .collect();
            if own.is_empty() {
                continue;
            }
            let want = own.iter().sum::<f64>() / own.len() as f64;
            let got = m.member_depth(i).unwrap();
            prop_assert!((got - want).abs() < 1e-12, "member {i}: {got} vs {want}");
        }
        Ok(())
    })
}

fn ach_determinism() -> CheckResult {
    let s = (dataset(2..=45, 2..=6), 1usize..=3, 1usize..=40, any::<u64>());
    run_cases(CASES, s, |(ds, j, n_sub, seed)| {
        let cfg = ach_cfg(j.min(ds.n_curves()), n_sub, seed);
        let q: Vec<f64> = ds.curve(0).iter().map(|v| v * 1.5).collect();
        let a = AchDepth::fit(&ds, cfg).unwrap().depth(&q).unwrap();
        let b = AchDepth::fit(&ds, cfg).unwrap().depth(&q).unwrap();
        prop_assert_eq!(a.to_bits(), b.to_bits());
        Ok(())
    })
}

fn fif_score_decreasing() -> CheckResult {
    run_cases(CASES, (0.0..20.0f64, 0.0..20.0f64, 2usize..1000), |(h1, h2, psi)| {
        prop_assume!(h1 != h2);
        let (lo, hi) = if h1 < h2 { (h1, h2) } else { (h2, h1) };
        prop_assert!(isolation_score(lo, psi) > isolation_score(hi, psi));
        Ok(())
    })
}

fn small_fif(n: usize, seed: u64, alpha: f64) -> FifConfig {
    let mut cfg = FifConfig::for_sample_size(n, seed);
    cfg.n_trees = 10;
    cfg.alpha = alpha;
    cfg
}

fn fif_score_range() -> CheckResult {
    let s = (dataset(2..=20, 2..=16), 0.0..=1.0f64, any::<u64>());
    run_cases(CASES, s, |(ds, alpha, seed)| {
        let cfg = small_fif(ds.n_curves(), seed, alpha);
        let f = FiForest::fit(&ds, &DictionarySource::default(), &cfg).unwrap();
        let wild = scaled(&ds, 7.0);
        for s in f
            .scores(&ds)
            .unwrap()
            .as_slice()
            .iter()
            .chain(f.scores(&wild).unwrap().as_slice())
        {
            prop_assert!(*s > 0.0 && *s < 1.0, "{s}");
        }
        for i in 0..ds.n_curves() {
            let h = f.mean_path_length(ds.curve(i)).unwrap();
            prop_assert_eq!(f.score(ds.curve(i)).unwrap(), isolation_score(h, f.subsample()));
        }
        Ok(())
    })
}

fn fif_scale_invariance() -> CheckResult {
    let s = (dataset(2..=15, 2..=12), 0.05..20.0f64, any::<u64>());
    run_cases(CASES, s, |(ds, c, seed)| {
        let cds = scaled(&ds, c);
        let cfg = small_fif(ds.n_curves(), seed, 1.0);
        let f = FiForest::fit(&ds, &DictionarySource::Fixed(Dictionary::from_dataset(&ds)), &cfg).unwrap();
        let g = FiForest::fit(&cds, &DictionarySource::Fixed(Dictionary::from_dataset(&cds)), &cfg).unwrap();
        let (a, b) = (f.scores(&ds).unwrap(), g.scores(&cds).unwrap());
        for (x, y) in a.as_slice().iter().zip(b.as_slice()) {
            prop_assert!((x - y).abs() < 1e-12, "{x} vs {y}");
        }
        Ok(())
    })
}

fn fif_reproducible() -> CheckResult {
    let refresh = prop_oneof![
        Just(AtomRefresh::PerNode),
        (1usize..8).prop_map(|size| AtomRefresh::PerTree { size })
    ];
    let s = (dataset(2..=20, 2..=12), refresh, any::<u64>());
    run_cases(CASES, s, |(ds, refresh, seed)| {
        let cfg = small_fif(ds.n_curves(), seed, 0.5);
        let src = DictionarySource::Brownian(refresh);
        let a = FiForest::fit(&ds, &src, &cfg).unwrap();
        let b = FiForest::fit(&ds, &src, &cfg).unwrap();
        prop_assert_eq!(format!("{:?}", a.trees()), format!("{:?}", b.trees()));
        prop_assert_eq!(a.scores(&ds).unwrap(), b.scores(&ds).unwrap());
        Ok(())
    })
}

fn fpca_trace() -> CheckResult {
    run_cases(CASES, dataset(2..=15, 2..=15), |ds| {
        let (n, p) = (ds.n_curves(), ds.n_points());
        let m = FpcaModel::fit(&ds, n.min(p)).unwrap();
        prop_assert!(m.eigenvalues.iter().all(|&l| l >= 0.0));
        let w = ds.grid().trapezoid_weights();
        let total: f64 = (0..p)
            .map(|j| {
                let col = ds.column(j);
                let mean = col.iter().sum::<f64>() / n as f64;
                w[j] * col.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n as f64
            })
            .sum();
        let sum: f64 = m.eigenvalues.iter().sum();
        prop_assert!((sum - total).abs() <= 1e-6 * total.max(1e-300), "{sum} vs {total}");
        Ok(())
    })
}

fn fpca_centred() -> CheckResult {
    let s = dataset(2..=20, 2..=20).prop_flat_map(|ds| {
        let k = ds.n_curves().min(ds.n_points());
        (Just(ds), 1..=k)
    });
    run_cases(CASES, s, |(ds, k)| {
        let m = FpcaModel::fit(&ds, k).unwrap();
        let scores = m.transform(&ds).unwrap();
        for c in 0..k {
            let mean = scores.rows().map(|r| r[c]).sum::<f64>() / ds.n_curves() as f64;
            prop_assert!(mean.abs() < 1e-8, "column {c} mean {mean}");
        }
        Ok(())
    })
}

fn haar_linear() -> CheckResult {
    let s = (super::grid(2..=70), 0u32..=6, -3.0..3.0f64, -3.0..3.0f64).prop_flat_map(|(g, l, a, b)| {
        let p = g.len();
        (
            Just(g),
            Just(l),
            Just(a),
            Just(b),
            prop::collection::vec(-5.0..5.0f64, p),
            prop::collection::vec(-5.0..5.0f64, p),
        )
    });
    run_cases(CASES, s, |(grid, level, a, b, x, y)| {
        let h = HaarBasis { level };
        let z: Vec<f64> = x.iter().zip(&y).map(|(u, v)| a * u + b * v).collect();
        let (cx, cy, cz) = (
            h.coefficients(&grid, &x),
            h.coefficients(&grid, &y),
            h.coefficients(&grid, &z),
        );
        for i in 0..cz.len() {
            let want = a * cx[i] + b * cy[i];
            prop_assert!((cz[i] - want).abs() < 1e-10, "{} vs {want}", cz[i]);
        }
        Ok(())
    })
}

fn points(
    n: std::ops::RangeInclusive<usize>,
    dim: std::ops::RangeInclusive<usize>,
) -> BoxedStrategy<MultivariateDataset> {
    (n, dim)
        .prop_flat_map(|(n, d)| {
            prop::collection::vec(-5.0..5.0f64, n * d).prop_map(move |v| MultivariateDataset::new(v, d).unwrap())
        })
        .boxed()
}

fn baseline_rescaling() -> CheckResult {
    let s = (points(3..=40, 1..=4), 0.01..100.0f64, any::<u64>()).prop_flat_map(|(d, c, seed)| {
        let n = d.len();
        (Just(d), Just(c), Just(seed), 1..n)
    });
    run_cases(CASES, s, |(data, c, seed, k)| {
        let big = data.scaled(c);
        let cfg = IForestConfig {
            n_trees: 20,
            subsample: data.len(),
            seed,
        };
        let a = IsolationForest::fit(&data, &cfg).unwrap().scores(&data).unwrap();
        let b = IsolationForest::fit(&big, &cfg).unwrap().scores(&big).unwrap();
        prop_assert_eq!(a, b);
        let la = LofModel::fit(&data, k).unwrap().training_scores().unwrap();
        let lb = LofModel::fit(&big, k).unwrap().training_scores().unwrap();
        for (x, y) in la.as_slice().iter().zip(lb.as_slice()) {
            prop_assert!(close(*x, *y, 1e-9), "{x} vs {y}");
        }
        Ok(())
    })
}

fn lof_definition() -> CheckResult {
    run_cases(CASES, lof_instance(), |(rows, k)| lof_agrees(&rows, k))
}

fn iforest_range() -> CheckResult {
    let s = (points(1..=40, 1..=4), any::<u64>());
    run_cases(CASES, s, |(data, seed)| {
        let f = IsolationForest::fit(
            &data,
            &IForestConfig {
                n_trees: 20,
                subsample: data.len(),
                seed,
            },
        )
        .unwrap();
        let far = MultivariateDataset::new(
            data.rows().flat_map(|r| r.iter().map(|v| v * 3.0 + 1.0)).collect(),
            data.dim(),
        )
        .unwrap();
        let rows: Vec<&[f64]> = data.rows().chain(far.rows()).collect();
        for r in &rows {
            let s = f.score(r).unwrap();
            prop_assert!(s > 0.0 && s < 1.0, "{s}");
        }
        for a in &rows {
            for b in &rows {
                let (ha, hb) = (f.mean_path_length(a).unwrap(), f.mean_path_length(b).unwrap());
                let (sa, sb) = (f.score(a).unwrap(), f.score(b).unwrap());
                if ha < hb {
                    prop_assert!(sa >= sb);
                }
                // below this gap both path lengths round to the same score
                if hb - ha > 1e-9 {
                    prop_assert!(sa > sb);
                }
            }
        }
        Ok(())
    })
}

fn vo_zero_iff_constant() -> CheckResult {
    let series = prop_oneof![
        (0.0..100.0f64, 1usize..60).prop_map(|(c, p)| vec![c; p]),
        prop::collection::vec(0.0..100.0f64, 1..60),
    ];
    run_cases(CASES, series, |v| {
        let constant = v.iter().all(|&x| x == v[0]);
        let (_, vo) = OutlyingnessSeries::new(v).unwrap().mean_variance();
        prop_assert!(vo >= 0.0);
        prop_assert_eq!(vo == 0.0, constant);
        Ok(())
    })
}

fn map_kind() -> impl Strategy<Value = MapKind> {
    prop_oneof![Just(MapKind::Ms), Just(MapKind::Fom)]
}

fn fom_nonnegative() -> CheckResult {
    run_cases(CASES, (dataset(2..=15, 2..=12), base_depth()), |(ds, base)| {
        let f = FeatureMap::fit(&ds, MapKind::Fom, base).unwrap().features(&ds).unwrap();
        prop_assert!(f.rows().all(|r| r[0] >= 0.0 && r[1] >= 0.0));
        Ok(())
    })
}

fn features_consistent() -> CheckResult {
    run_cases(
        CASES,
        (dataset(2..=15, 2..=12), base_depth(), map_kind()),
        |(ds, base, kind)| {
            let map = FeatureMap::fit(&ds, kind, base).unwrap();
            let train = map.features(&ds).unwrap();
            for i in 0..ds.n_curves() {
                prop_assert_eq!(&map.features_of(ds.curve(i)).unwrap()[..], train.row(i));
            }
            Ok(())
        },
    )
}

fn model() -> impl Strategy<Value = AnomalyModel> {
    prop::sample::select(AnomalyModel::ALL.to_vec())
}

fn contamination() -> BoxedStrategy<(FunctionalDataset, ContaminationSpec)> {
    (dataset(1..=60, 2..=40), model(), 0.01..0.99f64, any::<u64>())
        .prop_filter("at least one anomaly", |(ds, _, f, _)| {
            (f * ds.n_curves() as f64).round() >= 1.0
        })
        .prop_map(|(ds, model, fraction, seed)| (ds, ContaminationSpec { model, fraction, seed }))
        .boxed()
}

fn untouched_rows() -> CheckResult {
    run_cases(CASES, contamination(), |(ds, spec)| {
        let out = simulate::contaminate(&ds, &spec).unwrap();
        let rows: Vec<usize> = out.provenance.anomalies.iter().map(|a| a.row).collect();
        for i in 0..ds.n_curves() {
            prop_assert_eq!(out.labels.0[i].is_anomaly(), rows.contains(&i));
            if !rows.contains(&i) {
                let same = ds
                    .curve(i)
                    .iter()
                    .zip(out.dataset.curve(i))
                    .all(|(a, b)| a.to_bits() == b.to_bits());
                prop_assert!(same, "row {i} changed");
            }
        }
        Ok(())
    })
}

fn provenance_replay() -> CheckResult {
    run_cases(CASES, contamination(), |(ds, spec)| {
        let out = simulate::contaminate(&ds, &spec).unwrap();
        let replayed = out.provenance.replay(&ds).unwrap();
        let same = replayed
            .values()
            .iter()
            .zip(out.dataset.values())
            .all(|(a, b)| a.to_bits() == b.to_bits());
        prop_assert!(same);
        Ok(())
    })
}

fn label_count() -> CheckResult {
    run_cases(CASES, contamination(), |(ds, spec)| {
        let out = simulate::contaminate(&ds, &spec).unwrap();
        let want = (spec.fraction * ds.n_curves() as f64).round() as usize;
        prop_assert_eq!(out.labels.n_anomalies(), want);
        prop_assert_eq!(out.provenance.anomalies.len(), want);
        Ok(())
    })
}

fn shape_bounded() -> CheckResult {
    run_cases(CASES, (super::grid(2..=600), any::<u64>()), |(grid, seed)| {
        let mut r = rng::stream(seed, 0);
        let params = simulate::draw_params(AnomalyModel::Shape, &grid, &mut r);
        prop_assert!(matches!(params, AnomalyParams::Shape { .. }), "not a shape anomaly");
        prop_assert!(params.render(&grid).iter().all(|y| y.abs() <= 1.0));
        Ok(())
    })
}

fn sv(v: Vec<f64>) -> ScoreVector {
    ScoreVector::new(v).unwrap()
}

fn auc_monotone_invariance() -> CheckResult {
    let transforms: [fn(f64) -> f64; 3] = [f64::exp, |x| 3.0 * x - 7.0, |x| x * x * x];
    run_cases(CASES, (scored_labels(2, 60), 0usize..3), |((s, l), k)| {
        let labels = label_vector(&l);
        let f = transforms[k];
        let a = auc(&sv(s.clone()), &labels).unwrap();
        let b = auc(&sv(s.iter().map(|&x| f(x)).collect()), &labels).unwrap();
        prop_assert_eq!(a, b);
        Ok(())
    })
}

fn auc_complement() -> CheckResult {
    run_cases(CASES, scored_labels(2, 60), |(s, l)| {
        let labels = label_vector(&l);
        let a = auc(&sv(s.clone()), &labels).unwrap();
        let b = auc(&sv(s.iter().map(|x| -x).collect()), &labels).unwrap();
        prop_assert!((a + b - 1.0).abs() < 1e-12, "{a} + {b}");
        Ok(())
    })
}

fn ap_bounds() -> CheckResult {
    run_cases(CASES, (scored_labels(2, 60), -5.0..5.0f64), |((s, l), c)| {
        let labels = label_vector(&l);
        let n = l.len();
        let pos = l.iter().filter(|&&b| b).count();
        let prevalence = pos as f64 / n as f64;
        let flat = average_precision(&sv(vec![c; n]), &labels).unwrap();
        prop_assert!((flat - prevalence).abs() < 1e-15, "{flat} vs {prevalence}");
        // every positive ranked below every negative
        let worst = (1..=pos).map(|i| i as f64 / (n - pos + i) as f64).sum::<f64>() / pos as f64;
        let ap = average_precision(&sv(s), &labels).unwrap();
        prop_assert!(ap >= worst - 1e-12 && ap <= 1.0 + 1e-12, "{ap} < {worst}");
        Ok(())
    })
}

fn roc_monotone() -> CheckResult {
    run_cases(CASES, scored_labels(2, 60), |(s, l)| {
        let r = roc_curve(&sv(s), &label_vector(&l)).unwrap();
        prop_assert_eq!(r.points[0], (0.0, 0.0));
        prop_assert_eq!(*r.points.last().unwrap(), (1.0, 1.0));
        for w in r.points.windows(2) {
            prop_assert!(w[1].0 >= w[0].0 && w[1].1 >= w[0].1);
        }
        Ok(())
    })
}

fn with_threads<T: Send>(n: usize, f: impl FnOnce() -> T + Send) -> T {
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build()
        .unwrap()
        .install(f)
}

fn ach_parallel() -> CheckResult {
    let s = (dataset(3..=20, 2..=10), 1usize..=2, any::<u64>());
    run_cases(CASES, s, |(ds, j, seed)| {
        let cfg = ach_cfg(j, 40, seed);
        let run = || AchDepth::fit(&ds, cfg).unwrap().member_depths().unwrap();
        let (a, b) = (with_threads(1, run), with_threads(3, run));
        prop_assert_eq!(a, b);
        Ok(())
    })
}

fn fif_parallel() -> CheckResult {
    let s = (dataset(2..=20, 2..=12), any::<u64>());
    run_cases(CASES, s, |(ds, seed)| {
        let cfg = small_fif(ds.n_curves(), seed, 0.5);
        let run = || {
            let f = FiForest::fit(&ds, &DictionarySource::default(), &cfg).unwrap();
            (format!("{:?}", f.trees()), f.scores(&ds).unwrap())
        };
        prop_assert_eq!(with_threads(1, run), with_threads(3, run));
        Ok(())
    })
}

fn iforest_parallel() -> CheckResult {
    let s = (points(1..=40, 1..=5), any::<u64>());
    run_cases(CASES, s, |(data, seed)| {
        let cfg = IForestConfig {
            n_trees: 25,
            subsample: data.len(),
            seed,
        };
        let run = || {
            let f = IsolationForest::fit(&data, &cfg).unwrap();
            (f.trees().to_vec(), f.scores(&data).unwrap())
        };
        prop_assert_eq!(with_threads(1, run), with_threads(3, run));
        Ok(())
    })
}
