//! Single-pass training loops: the closed-form one-point rule, the
//! lookahead variant with its buffer-flush merge, the kernelized
//! variant, and an explicit-space reference trainer used as a test
//! oracle.
//!
//! Every trainer reads its stream exactly once and never shuffles;
//! ordering is the caller's responsibility.

use crate::data::{Example, Label, SparseVec};
use crate::error::{Error, Result};
use crate::geometry::{enclose_ball_and_points, Ball, MebSolverConfig, Point, GEOM_UPDATE_TOL};
use crate::model::{aug_distance_kernel_parts, aug_distance_linear_parts, KernelModel, KernelSpec, LinearModel};

/// Slack bookkeeping convention.
///
/// `Corrected` stores the squared norm of the center's slack component
/// (init `1/C`, update `s2 (1-s)^2 + s^2 / C`), which makes every
/// distance an exact augmented-space Euclidean distance.
/// `PaperLiteral` reproduces the literal recurrence (init 1, update
/// `xi2 (1-s)^2 + s^2`) for comparison; its stored value equals `C`
/// times the corrected one.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum XiConvention {
    Corrected,
    PaperLiteral,
}

#[derive(Debug, Clone)]
pub struct TrainConfig {
    /// Misclassification cost.
    pub c: f64,
    /// Lookahead buffer size (ignored by the L=1 trainers).
    pub l: usize,
    /// Strictness margin for the `d > R` update test.
    pub update_tol: f64,
    pub merge: MebSolverConfig,
    pub xi_convention: XiConvention,
    /// Stream-shuffling seed recorded alongside results; the trainers
    /// themselves never consume randomness.
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            c: 1.0,
            l: 1,
            update_tol: GEOM_UPDATE_TOL,
            merge: MebSolverConfig::default(),
            xi_convention: XiConvention::Corrected,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.c > 0.0) || !self.c.is_finite() {
            return Err(Error::InvalidConfig(format!("C {} must be finite and > 0", self.c)));
        }
        if self.l < 1 {
            return Err(Error::InvalidConfig("lookahead L must be >= 1".into()));
        }
        if !(self.update_tol >= 0.0) {
            return Err(Error::InvalidConfig("update_tol must be >= 0".into()));
        }
        self.merge.validate()
    }
}

/// One training event: an example that triggered the update test.
#[derive(Debug, Clone)]
pub struct TraceRecord {
    /// 0-based position in the stream.
    pub stream_index: usize,
    pub distance: f64,
    pub radius_before: f64,
    pub radius_after: f64,
    /// True for lookahead buffer flushes.
    pub flushed: bool,
}

#[derive(Debug, Clone, Default)]
pub struct TrainTrace {
    pub records: Vec<TraceRecord>,
}

fn validate_example(ex: &Example, index: usize) -> Result<()> {
    if ex.features.iter().any(|(_, v)| !v.is_finite()) {
        return Err(Error::TrainAbort {
            stream_index: index,
            cause: Box::new(Error::NonFinite { context: "feature value".into() }),
        });
    }
    Ok(())
}

fn s2_init(cfg: &TrainConfig) -> f64 {
    match cfg.xi_convention {
        XiConvention::Corrected => 1.0 / cfg.c,
        XiConvention::PaperLiteral => 1.0,
    }
}

fn s2_update(cfg: &TrainConfig, s2: f64, s: f64) -> f64 {
    let shrink = (1.0 - s) * (1.0 - s);
    match cfg.xi_convention {
        XiConvention::Corrected => s2 * shrink + s * s / cfg.c,
        XiConvention::PaperLiteral => s2 * shrink + s * s,
    }
}

struct LinearState {
    w: Vec<f64>,
    r: f64,
    s2: f64,
    m: usize,
}

impl LinearState {
    fn init(ex: &Example, cfg: &TrainConfig) -> LinearState {
        let mut w = vec![0.0; ex.features.max_index() as usize];
        let y = ex.label.to_f64();
        for (idx, val) in ex.features.iter() {
            w[(idx - 1) as usize] = y * val;
        }
        LinearState {
            w,
            r: 0.0,
            s2: s2_init(cfg),
            m: 1,
        }
    }

    fn distance(&self, cfg: &TrainConfig, ex: &Example) -> f64 {
        aug_distance_linear_parts(&self.w, self.s2, cfg.c, &ex.features, ex.label)
    }

    fn grow(&mut self, ex: &Example) {
        let need = ex.features.max_index() as usize;
        if need > self.w.len() {
            self.w.resize(need, 0.0);
        }
    }

    /// Closed-form one-point update with step `s = (1 - R/d) / 2`,
    /// computed once from the pre-update radius and shared by the
    /// weight, slack, and radius recurrences.
    fn apply_update(&mut self, cfg: &TrainConfig, ex: &Example, d: f64) {
        let s = 0.5 * (1.0 - self.r / d);
        self.grow(ex);
        for v in &mut self.w {
            *v *= 1.0 - s;
        }
        let y = ex.label.to_f64();
        for (idx, val) in ex.features.iter() {
            self.w[(idx - 1) as usize] += s * y * val;
        }
        self.s2 = s2_update(cfg, self.s2, s);
        self.r += 0.5 * (d - self.r);
        self.m += 1;
    }

    fn into_model(self, cfg: &TrainConfig) -> LinearModel {
        LinearModel {
            w: self.w,
            r: self.r,
            s2: self.s2,
            m: self.m,
            c: cfg.c,
        }
    }
}

/// Single-pass closed-form trainer (lookahead of one).
pub fn train_stream_l1<'a, I>(stream: I, cfg: &TrainConfig) -> Result<(LinearModel, TrainTrace)>
where
    I: IntoIterator<Item = &'a Example>,
{
    cfg.validate()?;
    let mut iter = stream.into_iter();
    let first = iter.next().ok_or(Error::EmptyInput { context: "training stream" })?;
    validate_example(first, 0)?;
    let mut state = LinearState::init(first, cfg);
    let mut trace = TrainTrace::default();
    for (offset, ex) in iter.enumerate() {
        let index = offset + 1;
        validate_example(ex, index)?;
        let d = state.distance(cfg, ex);
        if d > state.r * (1.0 + cfg.update_tol) {
            let before = state.r;
            state.apply_update(cfg, ex, d);
            trace.records.push(TraceRecord {
                stream_index: index,
                distance: d,
                radius_before: before,
                radius_after: state.r,
                flushed: false,
            });
        }
    }
    Ok((state.into_model(cfg), trace))
}

struct Buffered {
    x: SparseVec,
    y: Label,
    d: f64,
    index: usize,
}

/// Merges the buffered examples into the implicit ball with one joint
/// enclosing-ball solve in a (feat + 1 + L)-dimensional working space:
/// features first, then one axis carrying the center's whole slack mass
/// (coordinate sqrt(s2)), then one fresh axis per buffered example
/// (coordinate C^{-1/2}). Valid because a single pass guarantees the
/// buffered slack axes are fresh and mutually orthogonal.
fn flush_buffer(
    state: &mut LinearState,
    buffer: &mut Vec<Buffered>,
    cfg: &TrainConfig,
    trace: &mut TrainTrace,
) -> Result<()> {
    if buffer.is_empty() {
        return Ok(());
    }
    let feat_dim = buffer
        .iter()
        .map(|b| b.x.max_index() as usize)
        .max()
        .unwrap_or(0)
        .max(state.w.len());
    let l = buffer.len();
    let work_dim = feat_dim + 1 + l;
    let mut center = vec![0.0; work_dim];
    center[..state.w.len()].copy_from_slice(&state.w);
    center[feat_dim] = state.s2.sqrt();
    let ball = Ball {
        center: Point { coords: center },
        radius: state.r,
    };
    let slack_coord = (1.0 / cfg.c).sqrt();
    let points: Vec<Point> = buffer
        .iter()
        .enumerate()
        .map(|(i, b)| {
            let mut p = vec![0.0; work_dim];
            let y = b.y.to_f64();
            for (idx, val) in b.x.iter() {
                p[(idx - 1) as usize] = y * val;
            }
            p[feat_dim + 1 + i] = slack_coord;
            Point { coords: p }
        })
        .collect();
    let last_index = buffer.last().map(|b| b.index).unwrap_or(0);
    let last_d = buffer.last().map(|b| b.d).unwrap_or(f64::NAN);
    let merged = enclose_ball_and_points(&ball, &points, &cfg.merge).map_err(|e| Error::TrainAbort {
        stream_index: last_index,
        cause: Box::new(e),
    })?;
    let before = state.r;
    state.w = merged.center.coords[..feat_dim].to_vec();
    state.s2 = merged.center.coords[feat_dim..].iter().map(|v| v * v).sum();
    state.r = merged.radius;
    state.m += l;
    buffer.clear();
    trace.records.push(TraceRecord {
        stream_index: last_index,
        distance: last_d,
        radius_before: before,
        radius_after: state.r,
        flushed: true,
    });
    Ok(())
}

/// Single-pass trainer with a lookahead buffer of size `cfg.l`: examples
/// failing the containment test are buffered and merged into the ball
/// jointly when the buffer fills; a final partial buffer is flushed the
/// same way after the stream ends.
pub fn train_stream_lookahead<'a, I>(stream: I, cfg: &TrainConfig) -> Result<(LinearModel, TrainTrace)>
where
    I: IntoIterator<Item = &'a Example>,
{
    cfg.validate()?;
    if cfg.xi_convention == XiConvention::PaperLiteral {
        return Err(Error::Unsupported(
            "the paper-literal slack convention has no consistent working-space \
             embedding; lookahead training requires the corrected convention"
                .into(),
        ));
    }
    let mut iter = stream.into_iter();
    let first = iter.next().ok_or(Error::EmptyInput { context: "training stream" })?;
    validate_example(first, 0)?;
    let mut state = LinearState::init(first, cfg);
    let mut trace = TrainTrace::default();
    let mut buffer: Vec<Buffered> = Vec::with_capacity(cfg.l);
    for (offset, ex) in iter.enumerate() {
        let index = offset + 1;
        validate_example(ex, index)?;
        let d = state.distance(cfg, ex);
        if d > state.r * (1.0 + cfg.update_tol) {
            trace.records.push(TraceRecord {
                stream_index: index,
                distance: d,
                radius_before: state.r,
                radius_after: state.r,
                flushed: false,
            });
            buffer.push(Buffered {
                x: ex.features.clone(),
                y: ex.label,
                d,
                index,
            });
            if buffer.len() == cfg.l {
                flush_buffer(&mut state, &mut buffer, cfg, &mut trace)?;
            }
        }
    }
    flush_buffer(&mut state, &mut buffer, cfg, &mut trace)?;
    Ok((state.into_model(cfg), trace))
}

/// Single-pass kernelized trainer. Stores signed Lagrange coefficients
/// over the core vectors; an update scales all existing coefficients by
/// (1 - s) and appends `s * y` for the new example. Only L = 1 is
/// supported: there is no kernel-side merge for a lookahead buffer.
pub fn train_stream_kernel<'a, I>(
    stream: I,
    cfg: &TrainConfig,
    kernel: &KernelSpec,
) -> Result<(KernelModel, TrainTrace)>
where
    I: IntoIterator<Item = &'a Example>,
{
    cfg.validate()?;
    kernel.validate()?;
    if cfg.l > 1 {
        return Err(Error::Unsupported(
            "kernel training supports L = 1 only (no kernel-side merge)".into(),
        ));
    }
    let mut iter = stream.into_iter();
    let first = iter.next().ok_or(Error::EmptyInput { context: "training stream" })?;
    validate_example(first, 0)?;
    let mut model = KernelModel::init(
        first.features.clone(),
        first.label,
        cfg.c,
        kernel.clone(),
        s2_init(cfg),
    );
    let mut trace = TrainTrace::default();
    for (offset, ex) in iter.enumerate() {
        let index = offset + 1;
        validate_example(ex, index)?;
        let (d, cross) = aug_distance_kernel_parts(&model, &ex.features, ex.label);
        if d > model.r * (1.0 + cfg.update_tol) {
            let before = model.r;
            let s = 0.5 * (1.0 - model.r / d);
            model.apply_update(ex.features.clone(), ex.label, s, cross);
            model.s2 = s2_update(cfg, model.s2, s);
            model.r += 0.5 * (d - model.r);
            trace.records.push(TraceRecord {
                stream_index: index,
                distance: d,
                radius_before: before,
                radius_after: model.r,
                flushed: false,
            });
        }
    }
    Ok((model, trace))
}

/// Explicit-space reference trainer: materializes every augmented point
/// `[y_n x_n ; C^{-1/2} e_n]` in full (D+N)-dimensional space and runs
/// the identical update rule with explicit vectors. Memory-guarded;
/// intended as the oracle the implicit trainer is checked against, so it
/// always uses the materialized (corrected) slack geometry.
pub fn train_explicit_reference(examples: &[Example], cfg: &TrainConfig) -> Result<LinearModel> {
    cfg.validate()?;
    if cfg.xi_convention == XiConvention::PaperLiteral {
        return Err(Error::Unsupported(
            "the explicit reference materializes the corrected geometry; \
             the paper-literal recurrence has no explicit counterpart"
                .into(),
        ));
    }
    let n = examples.len();
    if n == 0 {
        return Err(Error::EmptyInput { context: "training stream" });
    }
    if n > 2000 {
        return Err(Error::Unsupported(format!(
            "explicit reference materializes N^2-scale state; N = {n} exceeds the 2000 guard"
        )));
    }
    let feat_dim = examples
        .iter()
        .map(|e| e.features.max_index() as usize)
        .max()
        .unwrap_or(0);
    let total_dim = feat_dim + n;
    let slack_coord = (1.0 / cfg.c).sqrt();
    let materialize = |i: usize, ex: &Example| -> Vec<f64> {
        let mut p = vec![0.0; total_dim];
        let y = ex.label.to_f64();
        for (idx, val) in ex.features.iter() {
            p[(idx - 1) as usize] = y * val;
        }
        p[feat_dim + i] = slack_coord;
        p
    };
    validate_example(&examples[0], 0)?;
    let mut center = materialize(0, &examples[0]);
    let mut r = 0.0;
    let mut m = 1usize;
    for (i, ex) in examples.iter().enumerate().skip(1) {
        validate_example(ex, i)?;
        let p = materialize(i, ex);
        let d = center
            .iter()
            .zip(&p)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt();
        if d > r * (1.0 + cfg.update_tol) {
            let s = 0.5 * (1.0 - r / d);
            for (c, v) in center.iter_mut().zip(&p) {
                *c += s * (v - *c);
            }
            r += 0.5 * (d - r);
            m += 1;
        }
    }
    let w = center[..feat_dim].to_vec();
    let s2 = center[feat_dim..].iter().map(|v| v * v).sum();
    Ok(LinearModel { w, r, s2, m, c: cfg.c })
}
