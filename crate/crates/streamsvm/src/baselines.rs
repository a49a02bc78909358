//! Single-pass comparison baselines (perceptron, block stochastic
//! subgradient on the hinge loss) and a batch core-set l2-SVM reference
//! that stands in for multi-pass batch solvers.

use crate::data::{Dataset, Example};
use crate::error::{Error, Result};
use crate::model::LinearModel;

/// Classical perceptron output: final weights plus the mistake count
/// (one weight update per mistake).
#[derive(Debug, Clone, PartialEq)]
pub struct PerceptronResult {
    pub weights: Vec<f64>,
    pub mistakes: usize,
}

/// Single-pass perceptron: on a sign mistake (`y (w . x) <= 0`) the
/// weights move by `y x`.
pub fn train_perceptron<'a, I>(stream: I) -> Result<PerceptronResult>
where
    I: IntoIterator<Item = &'a Example>,
{
    let mut w: Vec<f64> = Vec::new();
    let mut mistakes = 0usize;
    let mut saw_any = false;
    for (index, ex) in stream.into_iter().enumerate() {
        saw_any = true;
        if ex.features.iter().any(|(_, v)| !v.is_finite()) {
            return Err(Error::TrainAbort {
                stream_index: index,
                cause: Box::new(Error::NonFinite { context: "feature value".into() }),
            });
        }
        let y = ex.label.to_f64();
        let score = ex.features.dot_dense(&w);
        if y * score <= 0.0 {
            let need = ex.features.max_index() as usize;
            if need > w.len() {
                w.resize(need, 0.0);
            }
            for (idx, val) in ex.features.iter() {
                w[(idx - 1) as usize] += y * val;
            }
            mistakes += 1;
        }
    }
    if !saw_any {
        return Err(Error::EmptyInput { context: "training stream" });
    }
    Ok(PerceptronResult { weights: w, mistakes })
}

/// Configuration for the pegasos-style block subgradient sweep.
///
/// The internal step rule is a documented stand-in, not a fidelity claim
/// to any published solver: blocks of `block_k` examples; the step after
/// a block uses `eta = 1 / (lambda * e)` where `e` counts examples
/// consumed so far (for k = 1 this is the classic `1 / (lambda t)`
/// schedule, and for larger blocks it keeps the schedule aligned with
/// the single-example sweep instead of ending 20x hotter); update
/// `w <- (1 - eta lambda) w + (eta / k) sum_{violators} y x`
/// followed by projection onto the ball of radius `1 / sqrt(lambda)`.
#[derive(Debug, Clone)]
pub struct SgdConfig {
    pub lambda: f64,
    pub block_k: usize,
    /// Recorded for bookkeeping; the sweep itself is deterministic in
    /// the stream order.
    pub seed: u64,
    /// Applies the `1/sqrt(lambda)` ball projection after each block.
    pub project: bool,
}

impl Default for SgdConfig {
    fn default() -> Self {
        SgdConfig {
            lambda: 1e-4,
            block_k: 1,
            seed: 0,
            project: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SgdResult {
    pub weights: Vec<f64>,
    /// Number of block steps taken.
    pub steps: usize,
}

/// Single sweep of block subgradient descent on the hinge loss. The
/// trailing partial block takes a step with the same `eta_t / k`
/// divisor.
pub fn train_sgd_hinge<'a, I>(stream: I, cfg: &SgdConfig) -> Result<SgdResult>
where
    I: IntoIterator<Item = &'a Example>,
{
    if !(cfg.lambda > 0.0) || !cfg.lambda.is_finite() {
        return Err(Error::InvalidConfig(format!("lambda {} must be > 0", cfg.lambda)));
    }
    if cfg.block_k < 1 {
        return Err(Error::InvalidConfig("block_k must be >= 1".into()));
    }
    let mut w: Vec<f64> = Vec::new();
    let mut block: Vec<(u32, f64)> = Vec::new(); // accumulated subgradient sum
    let mut block_len = 0usize;
    let mut seen = 0usize;
    let mut t = 0usize;
    let mut saw_any = false;

    let apply_block = |w: &mut Vec<f64>, grad: &mut Vec<(u32, f64)>, examples_seen: usize| {
        let eta = 1.0 / (cfg.lambda * examples_seen as f64);
        for v in w.iter_mut() {
            *v *= 1.0 - eta * cfg.lambda;
        }
        let scale = eta / cfg.block_k as f64;
        for &(idx, val) in grad.iter() {
            let k = (idx - 1) as usize;
            if k >= w.len() {
                w.resize(k + 1, 0.0);
            }
            w[k] += scale * val;
        }
        grad.clear();
        if cfg.project {
            let norm: f64 = w.iter().map(|v| v * v).sum::<f64>().sqrt();
            let bound = 1.0 / cfg.lambda.sqrt();
            if norm > bound {
                let f = bound / norm;
                for v in w.iter_mut() {
                    *v *= f;
                }
            }
        }
    };

    for (index, ex) in stream.into_iter().enumerate() {
        saw_any = true;
        if ex.features.iter().any(|(_, v)| !v.is_finite()) {
            return Err(Error::TrainAbort {
                stream_index: index,
                cause: Box::new(Error::NonFinite { context: "feature value".into() }),
            });
        }
        let y = ex.label.to_f64();
        // margin test against the weights at the block start
        if y * ex.features.dot_dense(&w) < 1.0 {
            for (idx, val) in ex.features.iter() {
                block.push((idx, y * val));
            }
        }
        block_len += 1;
        seen += 1;
        if block_len == cfg.block_k {
            t += 1;
            apply_block(&mut w, &mut block, seen);
            block_len = 0;
        }
    }
    if !saw_any {
        return Err(Error::EmptyInput { context: "training stream" });
    }
    if block_len > 0 {
        t += 1;
        apply_block(&mut w, &mut block, seen);
    }
    Ok(SgdResult { weights: w, steps: t })
}

/// Batch l2-SVM reference via the core-set iteration run implicitly in
/// augmented space: the center is a convex combination of augmented
/// points, tracked as expanded linear weights plus the coefficient
/// vector (slack axes contribute `delta_nm / C` to inner products).
/// Stops when the farthest distance is within (1+epsilon) of the dual
/// lower bound, or after ceil(1/epsilon^2) iterations.
pub fn train_batch_l2svm_ref(ds: &Dataset, c: f64, epsilon: f64) -> Result<LinearModel> {
    if ds.is_empty() {
        return Err(Error::EmptyInput { context: "batch reference dataset" });
    }
    if !(c > 0.0) || !c.is_finite() {
        return Err(Error::InvalidConfig(format!("C {c} must be > 0")));
    }
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(Error::InvalidConfig(format!("epsilon {epsilon} outside (0, 1)")));
    }
    let n = ds.len();
    let dim = ds.dim;
    let inv_c = 1.0 / c;
    // |phi(z_n)|^2 = |x_n|^2 + 1/C
    let point_sq: Vec<f64> = ds.examples.iter().map(|e| e.features.sq_norm() + inv_c).collect();

    // alpha stored as scale * alpha_hat to keep the global (1-gamma)
    // rescaling O(1) per iteration
    let mut alpha_hat = vec![0.0; n];
    let mut alpha_scale = 1.0f64;
    alpha_hat[0] = 1.0;
    let mut w = vec![0.0; dim];
    {
        let e0 = &ds.examples[0];
        let y = e0.label.to_f64();
        for (idx, val) in e0.features.iter() {
            w[(idx - 1) as usize] = y * val;
        }
    }
    let mut w_sq: f64 = w.iter().map(|v| v * v).sum();
    let mut s2 = inv_c; // slack part squared norm: sum alpha^2 / C
    let mut mix_sq = point_sq[0]; // sum_n alpha_n |phi_n|^2
    let mut touched = vec![false; n];
    touched[0] = true;

    let max_iter = (1.0 / (epsilon * epsilon)).ceil() as usize;
    let mut radius = 0.0;
    for t in 1..=max_iter {
        // farthest augmented point; ties break to the lowest index
        let mut far_idx = 0usize;
        let mut far_d2 = f64::NEG_INFINITY;
        for (i, ex) in ds.examples.iter().enumerate() {
            let y = ex.label.to_f64();
            let alpha_i = alpha_scale * alpha_hat[i];
            let d2 = w_sq - 2.0 * y * ex.features.dot_dense(&w) + ex.features.sq_norm() + s2
                + inv_c
                - 2.0 * alpha_i * inv_c;
            if d2 > far_d2 {
                far_d2 = d2;
                far_idx = i;
            }
        }
        radius = far_d2.max(0.0).sqrt();
        let lower = (mix_sq - (w_sq + s2)).max(0.0).sqrt();
        if radius <= (1.0 + epsilon) * lower {
            break;
        }
        let gamma = 1.0 / (t as f64 + 1.0);
        let ex = &ds.examples[far_idx];
        let y = ex.label.to_f64();
        let w_dot_x = ex.features.dot_dense(&w);
        let alpha_far = alpha_scale * alpha_hat[far_idx];
        // center <- (1-gamma) center + gamma phi(z_far)
        for v in w.iter_mut() {
            *v *= 1.0 - gamma;
        }
        for (idx, val) in ex.features.iter() {
            w[(idx - 1) as usize] += gamma * y * val;
        }
        w_sq = (1.0 - gamma) * (1.0 - gamma) * w_sq
            + 2.0 * (1.0 - gamma) * gamma * y * w_dot_x
            + gamma * gamma * ex.features.sq_norm();
        s2 = (1.0 - gamma) * (1.0 - gamma) * s2
            + 2.0 * (1.0 - gamma) * gamma * alpha_far * inv_c
            + gamma * gamma * inv_c;
        mix_sq = (1.0 - gamma) * mix_sq + gamma * point_sq[far_idx];
        alpha_scale *= 1.0 - gamma;
        if alpha_scale < 1e-280 {
            for a in alpha_hat.iter_mut() {
                *a *= alpha_scale;
            }
            alpha_scale = 1.0;
        }
        alpha_hat[far_idx] += gamma / alpha_scale;
        touched[far_idx] = true;
    }
    let m = touched.iter().filter(|&&t| t).count();
    Ok(LinearModel { w, r: radius, s2, m, c })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{Label, SparseVec, SynthSpec};
    use crate::geometry::exact_meb;
    use crate::geometry::Point;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha20Rng;

    fn ex(label: Label, entries: &[(u32, f64)]) -> Example {
        Example {
            label,
            features: SparseVec::new(entries.to_vec()).unwrap(),
        }
    }

    #[test]
    fn perceptron_hand_trace() {
        let stream = [ex(Label::Pos, &[(1, 1.0)]), ex(Label::Neg, &[(1, -1.0)])];
        let out = train_perceptron(stream.iter()).unwrap();
        // first example from w = 0 is a mistake (score 0), second scores
        // y (w.x) = 1 > 0: one mistake, w = (1, 0...)
        assert_eq!(out.mistakes, 1);
        assert_eq!(out.weights, vec![1.0]);
    }

    #[test]
    fn perceptron_all_same_label_single_mistake() {
        let stream: Vec<Example> = (1..=20)
            .map(|i| ex(Label::Pos, &[(1, i as f64), (2, 1.0)]))
            .collect();
        let out = train_perceptron(stream.iter()).unwrap();
        assert_eq!(out.mistakes, 1);
    }

    #[test]
    fn perceptron_mistake_bound_on_separable_data() {
        // classical bound: mistakes <= (R / gamma)^2 for margin gamma
        // and data radius R
        let mut rng = ChaCha20Rng::seed_from_u64(6);
        let mut stream = Vec::new();
        for _ in 0..400 {
            let y = if rng.gen::<bool>() { 1.0 } else { -1.0 };
            // margin 1 around the hyperplane x1 = 0, radius <= 3
            let x1 = y * rng.gen_range(1.0..2.0);
            let x2 = rng.gen_range(-2.0..2.0);
            stream.push(ex(
                if y > 0.0 { Label::Pos } else { Label::Neg },
                &[(1, x1), (2, x2)],
            ));
        }
        let out = train_perceptron(stream.iter()).unwrap();
        let radius_sq = stream.iter().map(|e| e.features.sq_norm()).fold(0.0, f64::max);
        // margin of the witness hyperplane (1,0) is >= 1
        assert!(out.mistakes as f64 <= radius_sq / 1.0 + 1.0, "mistakes {}", out.mistakes);
    }

    #[test]
    fn sgd_single_example_matches_hand_rule() {
        let stream = [ex(Label::Pos, &[(1, 1.0)])];
        let cfg = SgdConfig { lambda: 1.0, block_k: 1, ..SgdConfig::default() };
        let out = train_sgd_hinge(stream.iter(), &cfg).unwrap();
        // eta_1 = 1, w = (1 - 1) 0 + 1 * y x = x; |w| = 1 = bound, no clip
        assert_eq!(out.weights, vec![1.0]);
        assert_eq!(out.steps, 1);
    }

    #[test]
    fn sgd_single_block_is_one_update() {
        let stream: Vec<Example> = (0..10)
            .map(|i| ex(if i % 2 == 0 { Label::Pos } else { Label::Neg }, &[(1, i as f64 - 4.5)]))
            .collect();
        let cfg = SgdConfig { lambda: 0.5, block_k: 10, ..SgdConfig::default() };
        let out = train_sgd_hinge(stream.iter(), &cfg).unwrap();
        assert_eq!(out.steps, 1);
    }

    #[test]
    fn sgd_block_twenty_beats_block_one_on_average() {
        // directional property on cluster data, mean over 20 seeds
        let spec = SynthSpec {
            n_train: 4000,
            n_test: 400,
            dim: 5,
            separability_target: 0.85,
            seed: 40,
        };
        let (train, test) = crate::data::gen_gaussian_clusters(&spec).unwrap();
        let mut acc = |k: usize| -> f64 {
            let mut total = 0.0;
            for seed in 0..20u64 {
                let perm = crate::data::permute_stream(&train, seed);
                let cfg = SgdConfig { lambda: 1e-4, block_k: k, seed, ..SgdConfig::default() };
                let out = train_sgd_hinge(perm.examples.iter(), &cfg).unwrap();
                let correct = test
                    .examples
                    .iter()
                    .filter(|e| {
                        let s = e.features.dot_dense(&out.weights);
                        Label::from_score(s) == e.label
                    })
                    .count();
                total += correct as f64 / test.len() as f64;
            }
            total / 20.0
        };
        let a1 = acc(1);
        let a20 = acc(20);
        assert!(a20 > a1, "k=20 mean {a20} vs k=1 mean {a1}");
    }

    #[test]
    fn batch_ref_radius_matches_exact_meb_on_tiny_data() {
        let mut rng = ChaCha20Rng::seed_from_u64(10);
        for _ in 0..5 {
            let n = rng.gen_range(3..=8);
            let examples: Vec<Example> = (0..n)
                .map(|_| {
                    let y = if rng.gen::<bool>() { Label::Pos } else { Label::Neg };
                    ex(y, &[(1, rng.gen_range(-2.0..2.0)), (2, rng.gen_range(-2.0..2.0))])
                })
                .collect();
            let ds = Dataset::new(examples.clone());
            let c = 1.0;
            let eps = 1e-3;
            let model = train_batch_l2svm_ref(&ds, c, eps).unwrap();
            // materialize the augmented points and compare against the
            // exact MEB
            let feat_dim = ds.dim;
            let slack = (1.0f64 / c).sqrt();
            let points: Vec<Point> = examples
                .iter()
                .enumerate()
                .map(|(i, e)| {
                    let mut p = vec![0.0; feat_dim + n];
                    let y = e.label.to_f64();
                    for (idx, val) in e.features.iter() {
                        p[(idx - 1) as usize] = y * val;
                    }
                    p[feat_dim + i] = slack;
                    Point { coords: p }
                })
                .collect();
            let exact = exact_meb(&points).unwrap();
            assert!(model.r >= exact.radius * (1.0 - 1e-9));
            assert!(
                model.r <= exact.radius * (1.0 + eps) * (1.0 + 1e-9),
                "{} vs {}",
                model.r,
                exact.radius
            );
        }
    }

    #[test]
    fn batch_ref_tighter_epsilon_not_worse() {
        let spec = SynthSpec {
            n_train: 300,
            n_test: 1,
            dim: 3,
            separability_target: 0.8,
            seed: 12,
        };
        let (train, _) = crate::data::gen_gaussian_clusters(&spec).unwrap();
        let loose = train_batch_l2svm_ref(&train, 1.0, 0.5).unwrap();
        let tight = train_batch_l2svm_ref(&train, 1.0, 0.01).unwrap();
        assert!(tight.r <= loose.r + 1e-12, "tight {} loose {}", tight.r, loose.r);
    }

    #[test]
    fn batch_ref_large_c_approaches_hard_margin_direction() {
        // symmetric separable instance whose max-margin direction is the
        // first axis
        let examples = vec![
            ex(Label::Pos, &[(1, 1.0)]),
            ex(Label::Pos, &[(1, 2.0), (2, 1.0)]),
            ex(Label::Pos, &[(1, 2.0), (2, -1.0)]),
            ex(Label::Neg, &[(1, -1.0)]),
            ex(Label::Neg, &[(1, -2.0), (2, 1.0)]),
            ex(Label::Neg, &[(1, -2.0), (2, -1.0)]),
        ];
        let ds = Dataset::new(examples);
        let model = train_batch_l2svm_ref(&ds, 1e6, 1e-4).unwrap();
        // grid-search the best-margin direction over angles as the oracle
        let mut best_angle = 0.0;
        let mut best_margin = f64::NEG_INFINITY;
        let steps = 20000;
        for k in 0..steps {
            let th = std::f64::consts::PI * (k as f64 / steps as f64 - 0.5);
            let (ux, uy) = (th.cos(), th.sin());
            let margin = ds
                .examples
                .iter()
                .map(|e| {
                    let mut dot = 0.0;
                    for (idx, val) in e.features.iter() {
                        dot += val * if idx == 1 { ux } else { uy };
                    }
                    e.label.to_f64() * dot
                })
                .fold(f64::INFINITY, f64::min);
            if margin > best_margin {
                best_margin = margin;
                best_angle = th;
            }
        }
        let w_angle = model.w[1].atan2(model.w[0]);
        let diff = (w_angle - best_angle).abs().to_degrees();
        assert!(diff <= 2.0, "angle difference {diff} deg");
    }

    #[test]
    fn empty_inputs_error() {
        assert!(train_perceptron(std::iter::empty()).is_err());
        assert!(train_sgd_hinge(std::iter::empty(), &SgdConfig::default()).is_err());
        assert!(train_batch_l2svm_ref(&Dataset::new(vec![]), 1.0, 0.1).is_err());
    }
}
