//! Experiment driver: accuracy evaluation, seeded single-pass
//! comparisons, lookahead sweeps over random orderings, and
//! adversarial-bound measurements, with CSV emission that re-parses to
//! the exact in-memory values.

use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;

use crate::baselines::{train_batch_l2svm_ref, train_perceptron, train_sgd_hinge, SgdConfig};
use crate::data::{fmt_real, permute_stream, Dataset};
use crate::error::{Error, Result};
use crate::geometry::{adversarial_stream, exact_meb, fold_stream, SingletonPosition, GEOM_UPDATE_TOL};
use crate::model::{predict, KernelSpec, LinearModel, Model};
use crate::trainer::{train_stream_kernel, train_stream_l1, train_stream_lookahead, TrainConfig};

/// Algorithms the comparison harness can run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Algo {
    Stream,
    Lookahead,
    Kernel,
    Perceptron,
    Sgd,
    BatchRef,
}

impl Algo {
    pub fn name(self) -> &'static str {
        match self {
            Algo::Stream => "stream",
            Algo::Lookahead => "lookahead",
            Algo::Kernel => "kernel",
            Algo::Perceptron => "perceptron",
            Algo::Sgd => "sgd",
            Algo::BatchRef => "batch-ref",
        }
    }
}

/// Everything a comparison or sweep run needs.
#[derive(Debug, Clone)]
pub struct HarnessConfig {
    pub train: TrainConfig,
    pub sgd: SgdConfig,
    pub batch_epsilon: f64,
    pub kernel: KernelSpec,
    /// Permutation seed for run i is `seed_base + i`, so any single run
    /// can be reproduced in isolation.
    pub seed_base: u64,
}

impl Default for HarnessConfig {
    fn default() -> Self {
        HarnessConfig {
            train: TrainConfig::default(),
            sgd: SgdConfig::default(),
            batch_epsilon: 1e-3,
            kernel: KernelSpec::Linear,
            seed_base: 0,
        }
    }
}

/// One (algorithm, permutation) result row.
#[derive(Debug, Clone, PartialEq)]
pub struct RunResult {
    pub algo: String,
    pub accuracy: f64,
    /// Core-vector count for the ball-based trainers; mistake count for
    /// the perceptron; block steps for sgd.
    pub m: usize,
    /// Final ball radius (0 for the baselines without one).
    pub r: f64,
    pub wall_ms: f64,
    pub seed: u64,
    pub l: usize,
}

/// Fraction of test examples whose predicted label matches.
pub fn evaluate(model: &Model, test: &Dataset) -> Result<f64> {
    if test.is_empty() {
        return Err(Error::EmptyInput { context: "test dataset" });
    }
    let correct = test
        .examples
        .iter()
        .filter(|e| predict(model, &e.features).1 == e.label)
        .count();
    Ok(correct as f64 / test.len() as f64)
}

fn run_one(algo: Algo, train: &Dataset, test: &Dataset, cfg: &HarnessConfig, seed: u64) -> Result<RunResult> {
    let permuted = permute_stream(train, seed);
    let mut tcfg = cfg.train.clone();
    tcfg.seed = seed;
    let started = Instant::now();
    let (model, m, r, l) = match algo {
        Algo::Stream => {
            let mut c = tcfg.clone();
            c.l = 1;
            let (m, _) = train_stream_l1(permuted.examples.iter(), &c)?;
            let (mm, rr) = (m.m, m.r);
            (Model::Linear(m), mm, rr, 1)
        }
        Algo::Lookahead => {
            let (m, _) = train_stream_lookahead(permuted.examples.iter(), &tcfg)?;
            let (mm, rr) = (m.m, m.r);
            (Model::Linear(m), mm, rr, tcfg.l)
        }
        Algo::Kernel => {
            let mut c = tcfg.clone();
            c.l = 1;
            let (m, _) = train_stream_kernel(permuted.examples.iter(), &c, &cfg.kernel)?;
            let (mm, rr) = (m.m(), m.r);
            (Model::Kernel(m), mm, rr, 1)
        }
        Algo::Perceptron => {
            let out = train_perceptron(permuted.examples.iter())?;
            let model = LinearModel {
                w: out.weights,
                r: 0.0,
                s2: 0.0,
                m: out.mistakes.max(1),
                c: tcfg.c,
            };
            let mm = out.mistakes;
            (Model::Linear(model), mm, 0.0, 1)
        }
        Algo::Sgd => {
            let mut scfg = cfg.sgd.clone();
            scfg.seed = seed;
            let out = train_sgd_hinge(permuted.examples.iter(), &scfg)?;
            let model = LinearModel {
                w: out.weights,
                r: 0.0,
                s2: 0.0,
                m: out.steps.max(1),
                c: tcfg.c,
            };
            let mm = out.steps;
            (Model::Linear(model), mm, 0.0, scfg.block_k)
        }
        Algo::BatchRef => {
            let m = train_batch_l2svm_ref(&permuted, tcfg.c, cfg.batch_epsilon)?;
            let (mm, rr) = (m.m, m.r);
            (Model::Linear(m), mm, rr, 1)
        }
    };
    let wall_ms = started.elapsed().as_secs_f64() * 1e3;
    let accuracy = evaluate(&model, test)?;
    Ok(RunResult {
        algo: algo.name().to_string(),
        accuracy,
        m,
        r,
        wall_ms,
        seed,
        l,
    })
}

/// Trains every algorithm on `n_runs` seeded permutations of the train
/// stream and evaluates on the test set. Results are ordered by
/// (algorithm, run index); aggregation is left to the caller so the
/// per-run rows stay the ground truth.
pub fn run_single_pass_comparison(
    train: &Dataset,
    test: &Dataset,
    algos: &[Algo],
    cfg: &HarnessConfig,
    n_runs: usize,
) -> Result<Vec<RunResult>> {
    if n_runs == 0 {
        return Err(Error::InvalidConfig("n_runs must be >= 1".into()));
    }
    let mut rows = Vec::with_capacity(algos.len() * n_runs);
    for &algo in algos {
        for i in 0..n_runs {
            rows.push(run_one(algo, train, test, cfg, cfg.seed_base + i as u64)?);
        }
    }
    Ok(rows)
}

/// Mean and sample standard deviation (0 for a single value).
pub fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub l: usize,
    pub mean_accuracy: f64,
    pub std_accuracy: f64,
    pub n_perms: usize,
}

#[derive(Debug, Clone)]
pub struct SweepResult {
    pub rows: Vec<SweepRow>,
    /// Per-run rows behind the aggregates, ordered by (L, permutation).
    pub runs: Vec<RunResult>,
}

impl SweepResult {
    /// Soft property: accuracy spread should not grow with lookahead.
    /// Compares the largest-L row against the smallest-L row.
    pub fn variance_shrinks(&self) -> bool {
        if self.rows.len() < 2 {
            return true;
        }
        let lo = self.rows.iter().min_by_key(|r| r.l).unwrap();
        let hi = self.rows.iter().max_by_key(|r| r.l).unwrap();
        hi.std_accuracy <= lo.std_accuracy
    }
}

/// For each lookahead in `l_list`, trains on `n_perms` seeded
/// permutations (the same seeds across lookaheads, so comparisons are
/// paired) and records mean and standard deviation of accuracy.
pub fn run_lookahead_sweep(
    train: &Dataset,
    test: &Dataset,
    l_list: &[usize],
    n_perms: usize,
    cfg: &HarnessConfig,
) -> Result<SweepResult> {
    if l_list.is_empty() {
        return Err(Error::EmptyInput { context: "lookahead list" });
    }
    if n_perms == 0 {
        return Err(Error::InvalidConfig("n_perms must be >= 1".into()));
    }
    let mut rows = Vec::with_capacity(l_list.len());
    let mut runs = Vec::with_capacity(l_list.len() * n_perms);
    for &l in l_list {
        let mut cfg_l = cfg.clone();
        cfg_l.train.l = l;
        let mut accs = Vec::with_capacity(n_perms);
        for i in 0..n_perms {
            let row = run_one(Algo::Lookahead, train, test, &cfg_l, cfg.seed_base + i as u64)?;
            accs.push(row.accuracy);
            runs.push(row);
        }
        let (mean, std) = mean_std(&accs);
        rows.push(SweepRow {
            l,
            mean_accuracy: mean,
            std_accuracy: std,
            n_perms,
        });
    }
    Ok(SweepResult { rows, runs })
}

#[derive(Debug, Clone, PartialEq)]
pub struct AdversarialRow {
    pub ordering: usize,
    /// "singleton_last" for the canonical ordering, "random" otherwise.
    pub placement: String,
    pub seed: u64,
    pub stream_radius: f64,
    pub exact_radius: f64,
    pub ratio: f64,
}

#[derive(Debug, Clone)]
pub struct AdversarialReport {
    pub rows: Vec<AdversarialRow>,
    pub singleton_last_ratio: f64,
    pub min_ratio: f64,
    pub mean_ratio: f64,
    pub max_ratio: f64,
}

/// Builds the adversarial instance, folds the one-point update over the
/// canonical singleton-last ordering plus `n_orderings - 1` random
/// permutations, and reports achieved-radius / optimal-radius ratios.
pub fn run_adversarial_bound_check(n: usize, n_orderings: usize, seed_base: u64) -> Result<AdversarialReport> {
    if n_orderings == 0 {
        return Err(Error::InvalidConfig("n_orderings must be >= 1".into()));
    }
    let base = adversarial_stream(n, seed_base, SingletonPosition::Last)?;
    let exact = exact_meb(&base)?;
    let mut rows = Vec::with_capacity(n_orderings);
    for ordering in 0..n_orderings {
        let (points, placement, seed) = if ordering == 0 {
            (base.clone(), "singleton_last".to_string(), seed_base)
        } else {
            let seed = seed_base + ordering as u64;
            let mut rng = ChaCha20Rng::seed_from_u64(seed);
            let mut shuffled = base.clone();
            for i in (1..shuffled.len()).rev() {
                let j = rng.gen_range(0..=i);
                shuffled.swap(i, j);
            }
            (shuffled, "random".to_string(), seed)
        };
        let folded = fold_stream(&points, GEOM_UPDATE_TOL)?;
        rows.push(AdversarialRow {
            ordering,
            placement,
            seed,
            stream_radius: folded.radius,
            exact_radius: exact.radius,
            ratio: folded.radius / exact.radius,
        });
    }
    let ratios: Vec<f64> = rows.iter().map(|r| r.ratio).collect();
    let (mean, _) = mean_std(&ratios);
    Ok(AdversarialReport {
        singleton_last_ratio: rows[0].ratio,
        min_ratio: ratios.iter().copied().fold(f64::INFINITY, f64::min),
        mean_ratio: mean,
        max_ratio: ratios.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        rows,
    })
}

/// CSV with header `algo,seed,L,accuracy,M,R,wall_ms`; reals carry 17
/// significant digits so rows re-parse exactly.
pub fn run_results_csv(rows: &[RunResult]) -> String {
    let mut out = String::from("algo,seed,L,accuracy,M,R,wall_ms\n");
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            r.algo,
            r.seed,
            r.l,
            fmt_real(r.accuracy),
            r.m,
            fmt_real(r.r),
            fmt_real(r.wall_ms)
        ));
    }
    out
}

pub fn parse_run_results_csv(text: &str) -> Result<Vec<RunResult>> {
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, h)) if h == "algo,seed,L,accuracy,M,R,wall_ms" => {}
        _ => {
            return Err(Error::Parse {
                line: 1,
                message: "missing run-results CSV header".into(),
            })
        }
    }
    let mut rows = Vec::new();
    for (i, line) in lines {
        if line.trim().is_empty() {
            continue;
        }
        let parts: Vec<&str> = line.split(',').collect();
        if parts.len() != 7 {
            return Err(Error::Parse {
                line: i + 1,
                message: format!("expected 7 fields, found {}", parts.len()),
            });
        }
        let field = |s: &str| -> Result<f64> {
            s.parse().map_err(|_| Error::Parse {
                line: i + 1,
                message: format!("unparsable number '{s}'"),
            })
        };
        rows.push(RunResult {
            algo: parts[0].to_string(),
            seed: parts[1].parse().map_err(|_| Error::Parse {
                line: i + 1,
                message: format!("unparsable seed '{}'", parts[1]),
            })?,
            l: parts[2].parse().map_err(|_| Error::Parse {
                line: i + 1,
                message: format!("unparsable L '{}'", parts[2]),
            })?,
            accuracy: field(parts[3])?,
            m: parts[4].parse().map_err(|_| Error::Parse {
                line: i + 1,
                message: format!("unparsable M '{}'", parts[4]),
            })?,
            r: field(parts[5])?,
            wall_ms: field(parts[6])?,
        });
    }
    Ok(rows)
}

/// CSV with header `L,mean_accuracy,std_accuracy,n_perms`.
pub fn sweep_csv(result: &SweepResult) -> String {
    let mut out = String::from("L,mean_accuracy,std_accuracy,n_perms\n");
    for r in &result.rows {
        out.push_str(&format!(
            "{},{},{},{}\n",
            r.l,
            fmt_real(r.mean_accuracy),
            fmt_real(r.std_accuracy),
            r.n_perms
        ));
    }
    out
}

pub fn parse_sweep_csv(text: &str) -> Result<Vec<SweepRow>> {
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, h)) if h == "L,mean_accuracy,std_accuracy,n_perms" => {}
        _ => {
            return Err(Error::Parse {
                line: 1,
                message: "missing sweep CSV header".into(),
            })
        }
    }
    let mut rows = Vec::new();
    for (i, line) in lines {
        if line.trim().is_empty() {
            continue;
        }
        let parts: Vec<&str> = line.split(',').collect();
        if parts.len() != 4 {
            return Err(Error::Parse {
                line: i + 1,
                message: format!("expected 4 fields, found {}", parts.len()),
            });
        }
        rows.push(SweepRow {
            l: parts[0].parse().map_err(|_| Error::Parse {
                line: i + 1,
                message: format!("unparsable L '{}'", parts[0]),
            })?,
            mean_accuracy: parts[1].parse().map_err(|_| Error::Parse {
                line: i + 1,
                message: format!("unparsable mean '{}'", parts[1]),
            })?,
            std_accuracy: parts[2].parse().map_err(|_| Error::Parse {
                line: i + 1,
                message: format!("unparsable std '{}'", parts[2]),
            })?,
            n_perms: parts[3].parse().map_err(|_| Error::Parse {
                line: i + 1,
                message: format!("unparsable n_perms '{}'", parts[3]),
            })?,
        });
    }
    Ok(rows)
}

/// CSV with header
/// `ordering,placement,seed,stream_radius,exact_radius,ratio`.
pub fn adversarial_csv(report: &AdversarialReport) -> String {
    let mut out = String::from("ordering,placement,seed,stream_radius,exact_radius,ratio\n");
    for r in &report.rows {
        out.push_str(&format!(
            "{},{},{},{},{},{}\n",
            r.ordering,
            r.placement,
            r.seed,
            fmt_real(r.stream_radius),
            fmt_real(r.exact_radius),
            fmt_real(r.ratio)
        ));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{Example, Label, SparseVec, SynthSpec};

    fn tiny_sets() -> (Dataset, Dataset) {
        let spec = SynthSpec {
            n_train: 400,
            n_test: 100,
            dim: 2,
            separability_target: 0.9,
            seed: 5,
        };
        crate::data::gen_gaussian_clusters(&spec).unwrap()
    }

    #[test]
    fn evaluate_constant_positive_on_balanced_test() {
        let examples: Vec<Example> = (0..10)
            .map(|i| Example {
                label: if i % 2 == 0 { Label::Pos } else { Label::Neg },
                features: SparseVec::new(vec![(1, i as f64)]).unwrap(),
            })
            .collect();
        let test = Dataset::new(examples);
        let model = Model::Linear(LinearModel {
            w: vec![0.0],
            r: 0.0,
            s2: 0.0,
            m: 1,
            c: 1.0,
        });
        // score 0 everywhere: always predicts +1
        assert_eq!(evaluate(&model, &test).unwrap(), 0.5);
    }

    #[test]
    fn evaluate_perfect_on_separable_training_set() {
        let (train, _) = tiny_sets();
        let spec_sep = SynthSpec {
            n_train: 200,
            n_test: 50,
            dim: 2,
            separability_target: 1.0,
            seed: 8,
        };
        let (train_sep, _) = crate::data::gen_gaussian_clusters(&spec_sep).unwrap();
        let _ = train;
        let model = train_batch_l2svm_ref(&train_sep, 1.0, 1e-3).unwrap();
        let acc = evaluate(&Model::Linear(model), &train_sep).unwrap();
        assert!(acc >= 0.99, "accuracy {acc}");
    }

    #[test]
    fn evaluate_rejects_empty_test() {
        let model = Model::Linear(LinearModel {
            w: vec![1.0],
            r: 0.0,
            s2: 0.0,
            m: 1,
            c: 1.0,
        });
        assert!(evaluate(&model, &Dataset::new(vec![])).is_err());
    }

    #[test]
    fn comparison_deterministic_modulo_wall_time() {
        let (train, test) = tiny_sets();
        let cfg = HarnessConfig::default();
        let algos = [Algo::Stream, Algo::Perceptron];
        let a = run_single_pass_comparison(&train, &test, &algos, &cfg, 3).unwrap();
        let b = run_single_pass_comparison(&train, &test, &algos, &cfg, 3).unwrap();
        assert_eq!(a.len(), b.len());
        for (x, y) in a.iter().zip(&b) {
            assert_eq!(x.algo, y.algo);
            assert_eq!(x.seed, y.seed);
            assert_eq!(x.accuracy.to_bits(), y.accuracy.to_bits());
            assert_eq!(x.m, y.m);
            assert_eq!(x.r.to_bits(), y.r.to_bits());
        }
    }

    #[test]
    fn aggregate_consistency_with_rows() {
        let (train, test) = tiny_sets();
        let cfg = HarnessConfig::default();
        let sweep = run_lookahead_sweep(&train, &test, &[1, 4], 5, &cfg).unwrap();
        for row in &sweep.rows {
            let accs: Vec<f64> = sweep
                .runs
                .iter()
                .filter(|r| r.l == row.l)
                .map(|r| r.accuracy)
                .collect();
            let (mean, std) = mean_std(&accs);
            assert!((mean - row.mean_accuracy).abs() < 1e-12);
            assert!((std - row.std_accuracy).abs() < 1e-12);
        }
    }

    #[test]
    fn sweep_l1_matches_comparison_stream() {
        let (train, test) = tiny_sets();
        let cfg = HarnessConfig::default();
        let sweep = run_lookahead_sweep(&train, &test, &[1], 4, &cfg).unwrap();
        let comp = run_single_pass_comparison(&train, &test, &[Algo::Stream], &cfg, 4).unwrap();
        for (s, c) in sweep.runs.iter().zip(&comp) {
            assert_eq!(s.seed, c.seed);
            assert_eq!(s.accuracy, c.accuracy, "seed {}", s.seed);
        }
    }

    #[test]
    fn adversarial_report_bounds() {
        let report = run_adversarial_bound_check(101, 50, 0).unwrap();
        let lower = (1.0 + std::f64::consts::SQRT_2) / 2.0;
        assert!(report.singleton_last_ratio >= lower - 1e-6);
        assert!(report.max_ratio <= 1.5 + 1e-9, "max ratio {}", report.max_ratio);
        assert!(report.min_ratio >= 1.0 - 1e-12);
        // far point arriving first leaves little room to overshoot:
        // threshold frozen from measured geometry (about 1.1427)
        let first = adversarial_stream(101, 0, SingletonPosition::First).unwrap();
        let folded = fold_stream(&first, GEOM_UPDATE_TOL).unwrap();
        let exact = exact_meb(&first).unwrap();
        let ratio = folded.radius / exact.radius;
        assert!(ratio <= 1.15, "singleton-first ratio {ratio}");
    }

    #[test]
    fn run_results_csv_round_trip() {
        let rows = vec![
            RunResult {
                algo: "stream".into(),
                accuracy: 1.0 / 3.0,
                m: 17,
                r: 2.5e-7,
                wall_ms: 0.125,
                seed: 42,
                l: 1,
            },
            RunResult {
                algo: "batch-ref".into(),
                accuracy: 0.98765432109876543,
                m: 3,
                r: 1.7976931348623157e308,
                wall_ms: 1e-3,
                seed: 43,
                l: 10,
            },
        ];
        let text = run_results_csv(&rows);
        let back = parse_run_results_csv(&text).unwrap();
        assert_eq!(back, rows);
    }

    #[test]
    fn sweep_csv_round_trip() {
        let result = SweepResult {
            rows: vec![
                SweepRow { l: 1, mean_accuracy: 0.5, std_accuracy: 1.0 / 7.0, n_perms: 100 },
                SweepRow { l: 20, mean_accuracy: 0.975, std_accuracy: 5e-324, n_perms: 100 },
            ],
            runs: vec![],
        };
        let text = sweep_csv(&result);
        let back = parse_sweep_csv(&text).unwrap();
        assert_eq!(back, result.rows);
    }
}
