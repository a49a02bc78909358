//! Implicit augmented-space representation of the enclosing-ball center
//! as an SVM model, in linear and kernelized form.
//!
//! An example (x, y) maps to the augmented point `[y x ; C^{-1/2} e_n]`,
//! so the center of a ball over such points splits into a feature part
//! (the weight vector) and a slack part living on the per-example axes.
//! Models store the feature part explicitly (or as support-vector
//! coefficients) plus the squared norm `s2` of the slack part; because a
//! single pass never revisits an example index, a fresh example's slack
//! axis is orthogonal to the whole slack part and distances only need
//! `s2`, never the slack coordinates themselves.

use crate::data::{fmt_real, Label, SparseVec};
use crate::error::{Error, Result};

/// Kernel choices. `kappa` is the constant value of K(x, x) when the
/// kernel has one (rbf and normalized dot products do; plain linear
/// kernels do not).
#[derive(Debug, Clone, PartialEq)]
pub enum KernelSpec {
    Linear,
    Rbf { gamma: f64 },
    NormalizedDot,
}

impl KernelSpec {
    pub fn kappa(&self) -> Option<f64> {
        match self {
            KernelSpec::Linear => None,
            KernelSpec::Rbf { .. } | KernelSpec::NormalizedDot => Some(1.0),
        }
    }

    pub fn eval(&self, a: &SparseVec, b: &SparseVec) -> f64 {
        match self {
            KernelSpec::Linear => a.dot_sparse(b),
            KernelSpec::Rbf { gamma } => {
                let d2 = a.sq_norm() - 2.0 * a.dot_sparse(b) + b.sq_norm();
                (-gamma * d2.max(0.0)).exp()
            }
            KernelSpec::NormalizedDot => {
                let na = a.sq_norm().sqrt();
                let nb = b.sq_norm().sqrt();
                if na == 0.0 || nb == 0.0 {
                    0.0
                } else {
                    a.dot_sparse(b) / (na * nb)
                }
            }
        }
    }

    pub fn validate(&self) -> Result<()> {
        if let KernelSpec::Rbf { gamma } = self {
            if !(gamma.is_finite() && *gamma > 0.0) {
                return Err(Error::InvalidConfig(format!("rbf gamma {gamma} must be > 0")));
            }
        }
        Ok(())
    }
}

/// Linear model: explicit feature-space part of the ball center.
///
/// `s2` is the squared norm of the center's slack component (`1/C` right
/// after initialization). Under the paper-literal slack convention the
/// field instead carries the literal `xi^2` recurrence, which equals
/// `C * s2`; the distance formula is unchanged.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearModel {
    pub w: Vec<f64>,
    pub r: f64,
    pub s2: f64,
    /// Core-vector count (examples that triggered an update).
    pub m: usize,
    pub c: f64,
}

impl LinearModel {
    pub fn dim(&self) -> usize {
        self.w.len()
    }

    pub fn validate(&self) -> Result<()> {
        if self.r < 0.0 || !self.r.is_finite() {
            return Err(Error::InvalidConfig("invariant violation: negative radius".into()));
        }
        if self.s2 < 0.0 || !self.s2.is_finite() {
            return Err(Error::InvalidConfig("invariant violation: negative slack norm".into()));
        }
        if self.m < 1 {
            return Err(Error::InvalidConfig("invariant violation: core count M < 1".into()));
        }
        if !(self.c > 0.0) || !self.c.is_finite() {
            return Err(Error::InvalidConfig("invariant violation: C must be > 0".into()));
        }
        if self.w.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite { context: "weight vector".into() });
        }
        Ok(())
    }
}

/// Kernel model: the center's feature part as signed Lagrange
/// coefficients over the core vectors (alpha carries the label sign).
#[derive(Debug, Clone, PartialEq)]
pub struct KernelModel {
    pub support: Vec<(SparseVec, f64)>,
    pub r: f64,
    pub s2: f64,
    pub c: f64,
    pub kernel: KernelSpec,
    /// Cached squared norm of the feature part,
    /// `sum_{n,m} alpha_n alpha_m k(x_n, x_m)`, maintained per update so
    /// distance evaluation stays O(M).
    w2: f64,
}

impl KernelModel {
    /// Initializes from the first stream example: a single support
    /// vector with coefficient `y`.
    pub fn init(x: SparseVec, y: Label, c: f64, kernel: KernelSpec, s2: f64) -> KernelModel {
        let w2 = kernel.eval(&x, &x);
        KernelModel {
            support: vec![(x, y.to_f64())],
            r: 0.0,
            s2,
            c,
            kernel,
            w2,
        }
    }

    /// Rebuilds a model from parsed parts, recomputing the cache.
    pub fn from_parts(
        support: Vec<(SparseVec, f64)>,
        r: f64,
        s2: f64,
        c: f64,
        kernel: KernelSpec,
    ) -> KernelModel {
        let mut w2 = 0.0;
        for (i, (xi, ai)) in support.iter().enumerate() {
            w2 += ai * ai * kernel.eval(xi, xi);
            for (xj, aj) in &support[..i] {
                w2 += 2.0 * ai * aj * kernel.eval(xi, xj);
            }
        }
        KernelModel { support, r, s2, c, kernel, w2 }
    }

    /// Number of core vectors.
    pub fn m(&self) -> usize {
        self.support.len()
    }

    pub fn feature_sq_norm(&self) -> f64 {
        self.w2
    }

    /// `sum_m alpha_m k(x_m, x)`.
    pub fn cross(&self, x: &SparseVec) -> f64 {
        self.support
            .iter()
            .map(|(xm, am)| am * self.kernel.eval(xm, x))
            .sum()
    }

    /// Applies the one-point update with step `s`: all coefficients are
    /// scaled by (1 - s) and the new example enters with `s * y`. The
    /// caller supplies `cross = sum_m alpha_m k(x_m, x)` from its
    /// distance computation so the cache update stays O(1).
    pub fn apply_update(&mut self, x: SparseVec, y: Label, s: f64, cross: f64) {
        let kxx = self.kernel.eval(&x, &x);
        let sy = s * y.to_f64();
        self.w2 = (1.0 - s) * (1.0 - s) * self.w2 + 2.0 * (1.0 - s) * sy * cross + sy * sy * kxx;
        for (_, a) in &mut self.support {
            *a *= 1.0 - s;
        }
        self.support.push((x, sy));
    }

    pub fn validate(&self) -> Result<()> {
        if self.r < 0.0 || !self.r.is_finite() {
            return Err(Error::InvalidConfig("invariant violation: negative radius".into()));
        }
        if self.s2 < 0.0 || !self.s2.is_finite() {
            return Err(Error::InvalidConfig("invariant violation: negative slack norm".into()));
        }
        if !(self.c > 0.0) || !self.c.is_finite() {
            return Err(Error::InvalidConfig("invariant violation: C must be > 0".into()));
        }
        if self.support.is_empty() {
            return Err(Error::EmptyInput { context: "kernel model support set" });
        }
        if self.support.iter().any(|(_, a)| !a.is_finite()) {
            return Err(Error::NonFinite { context: "support coefficients".into() });
        }
        Ok(())
    }

    /// Expands the feature part into an explicit dense weight vector
    /// (meaningful for the linear kernel).
    pub fn expand_linear_weights(&self) -> Vec<f64> {
        let dim = self
            .support
            .iter()
            .map(|(x, _)| x.max_index() as usize)
            .max()
            .unwrap_or(0);
        let mut w = vec![0.0; dim];
        for (x, a) in &self.support {
            for (idx, val) in x.iter() {
                w[(idx - 1) as usize] += a * val;
            }
        }
        w
    }
}

/// Either model kind; what the CLI reads and writes.
#[derive(Debug, Clone, PartialEq)]
pub enum Model {
    Linear(LinearModel),
    Kernel(KernelModel),
}

impl Model {
    pub fn score(&self, x: &SparseVec) -> f64 {
        match self {
            Model::Linear(m) => x.dot_dense(&m.w),
            Model::Kernel(m) => m.cross(x),
        }
    }
}

/// Augmented-space distance from the linear model's center to the image
/// of a fresh example (x, y): `sqrt(|w - y x|^2 + s2 + 1/C)`.
///
/// Sparse indices beyond the stored weight vector are treated as zero
/// weight, so no dimension check is needed; the squared difference then
/// picks up the full `x` contribution on those axes.
pub fn aug_distance_linear(m: &LinearModel, x: &SparseVec, y: Label) -> f64 {
    aug_distance_linear_parts(&m.w, m.s2, m.c, x, y)
}

/// Same distance on raw state; shared by the trainers so the training
/// loop and the public operation cannot drift apart.
pub(crate) fn aug_distance_linear_parts(w: &[f64], s2: f64, c: f64, x: &SparseVec, y: Label) -> f64 {
    let yf = y.to_f64();
    // |w - y x|^2 = |w|^2 - 2 y <w, x> + |x|^2 over the union of axes
    let mut sq = 0.0;
    for &wk in w {
        sq += wk * wk;
    }
    sq += -2.0 * yf * x.dot_dense(w) + x.sq_norm();
    (sq + s2 + 1.0 / c).sqrt()
}

/// Augmented-space distance for the kernel model:
/// `sqrt(|w|^2 + k(x,x) - 2 y sum_m alpha_m k(x_m, x) + s2 + 1/C)`
/// with the `|w|^2` double sum taken from the running cache.
pub fn aug_distance_kernel(m: &KernelModel, x: &SparseVec, y: Label) -> f64 {
    let (d, _) = aug_distance_kernel_parts(m, x, y);
    d
}

/// Distance plus the cross term, for callers that feed the update rule.
pub fn aug_distance_kernel_parts(m: &KernelModel, x: &SparseVec, y: Label) -> (f64, f64) {
    let cross = m.cross(x);
    let kxx = m.kernel.eval(x, x);
    let sq = m.w2 + kxx - 2.0 * y.to_f64() * cross + m.s2 + 1.0 / m.c;
    (sq.max(0.0).sqrt(), cross)
}

/// Score and label for a query point. Ties at score zero are positive.
pub fn predict(model: &Model, x: &SparseVec) -> (f64, Label) {
    let score = model.score(x);
    (score, Label::from_score(score))
}

const MODEL_HEADER: &str = "streamsvm-model v1";

/// Serializes a model in the v1 line-oriented text format. All reals use
/// 17 significant digits so deserialization is bit-exact.
pub fn serialize_model(model: &Model) -> String {
    let mut out = String::new();
    out.push_str(MODEL_HEADER);
    out.push('\n');
    match model {
        Model::Linear(m) => {
            out.push_str("kind=linear\n");
            out.push_str(&format!("C={}\n", fmt_real(m.c)));
            out.push_str(&format!("R={}\n", fmt_real(m.r)));
            out.push_str(&format!("s2={}\n", fmt_real(m.s2)));
            out.push_str(&format!("M={}\n", m.m));
            out.push_str(&format!("dim={}\n", m.w.len()));
            out.push_str("w=");
            for (i, v) in m.w.iter().enumerate() {
                if i > 0 {
                    out.push(' ');
                }
                out.push_str(&fmt_real(*v));
            }
            out.push('\n');
        }
        Model::Kernel(m) => {
            out.push_str("kind=kernel\n");
            out.push_str(&format!("C={}\n", fmt_real(m.c)));
            out.push_str(&format!("R={}\n", fmt_real(m.r)));
            out.push_str(&format!("s2={}\n", fmt_real(m.s2)));
            out.push_str(&format!("M={}\n", m.m()));
            let kernel = match &m.kernel {
                KernelSpec::Linear => "linear".to_string(),
                KernelSpec::Rbf { gamma } => format!("rbf gamma={}", fmt_real(*gamma)),
                KernelSpec::NormalizedDot => "normalized_dot".to_string(),
            };
            out.push_str(&format!("kernel={kernel}\n"));
            out.push_str(&format!("nsv={}\n", m.support.len()));
            for (x, a) in &m.support {
                out.push_str("sv= ");
                out.push_str(&fmt_real(*a));
                for (idx, val) in x.iter() {
                    out.push(' ');
                    out.push_str(&idx.to_string());
                    out.push(':');
                    out.push_str(&fmt_real(val));
                }
                out.push('\n');
            }
        }
    }
    out
}

struct LineReader<'a> {
    lines: std::iter::Enumerate<std::str::Lines<'a>>,
}

impl<'a> LineReader<'a> {
    fn next(&mut self) -> Option<(usize, &'a str)> {
        self.lines.next().map(|(i, l)| (i + 1, l))
    }

    fn expect_field(&mut self, key: &str) -> Result<(usize, String)> {
        let (line, text) = self.next().ok_or_else(|| Error::Parse {
            line: 0,
            message: format!("unexpected end of file, expected '{key}='"),
        })?;
        let value = text.strip_prefix(key).and_then(|r| r.strip_prefix('=')).ok_or_else(|| {
            Error::Parse {
                line,
                message: format!("expected '{key}=...', got '{text}'"),
            }
        })?;
        Ok((line, value.to_string()))
    }
}

fn parse_real_field(value: &str, line: usize) -> Result<f64> {
    let v: f64 = value.trim().parse().map_err(|_| Error::Parse {
        line,
        message: format!("unparsable number '{value}'"),
    })?;
    if !v.is_finite() {
        return Err(Error::Parse {
            line,
            message: format!("non-finite number '{value}'"),
        });
    }
    Ok(v)
}

fn parse_usize_field(value: &str, line: usize) -> Result<usize> {
    value.trim().parse().map_err(|_| Error::Parse {
        line,
        message: format!("unparsable integer '{value}'"),
    })
}

/// Parses the v1 model format, validating invariants; errors carry the
/// offending line number.
pub fn deserialize_model(text: &str) -> Result<Model> {
    let mut rd = LineReader { lines: text.lines().enumerate() };
    let (line, header) = rd.next().ok_or(Error::Parse {
        line: 1,
        message: "empty model file".into(),
    })?;
    if header.trim() != MODEL_HEADER {
        return Err(Error::Parse {
            line,
            message: format!("unsupported model version '{}', expected '{MODEL_HEADER}'", header.trim()),
        });
    }
    let (kind_line, kind) = rd.expect_field("kind")?;
    let (c_line, c_str) = rd.expect_field("C")?;
    let c = parse_real_field(&c_str, c_line)?;
    let (r_line, r_str) = rd.expect_field("R")?;
    let r = parse_real_field(&r_str, r_line)?;
    let (s2_line, s2_str) = rd.expect_field("s2")?;
    let s2 = parse_real_field(&s2_str, s2_line)?;
    let (m_line, m_str) = rd.expect_field("M")?;
    let m_count = parse_usize_field(&m_str, m_line)?;
    if r < 0.0 {
        return Err(Error::Parse {
            line: r_line,
            message: "invariant violation: negative radius".into(),
        });
    }
    if s2 < 0.0 {
        return Err(Error::Parse {
            line: s2_line,
            message: "invariant violation: negative slack norm".into(),
        });
    }
    if c <= 0.0 {
        return Err(Error::Parse {
            line: c_line,
            message: "invariant violation: C must be > 0".into(),
        });
    }
    if m_count < 1 {
        return Err(Error::Parse {
            line: m_line,
            message: "invariant violation: core count M < 1".into(),
        });
    }
    match kind.trim() {
        "linear" => {
            let (dim_line, dim_str) = rd.expect_field("dim")?;
            let dim = parse_usize_field(&dim_str, dim_line)?;
            let (w_line, w_str) = rd.expect_field("w")?;
            let w: Vec<f64> = w_str
                .split_whitespace()
                .map(|tok| parse_real_field(tok, w_line))
                .collect::<Result<_>>()?;
            if w.len() != dim {
                return Err(Error::Parse {
                    line: w_line,
                    message: format!("expected {dim} weights, found {}", w.len()),
                });
            }
            let model = LinearModel { w, r, s2, m: m_count, c };
            model.validate()?;
            Ok(Model::Linear(model))
        }
        "kernel" => {
            let (k_line, k_str) = rd.expect_field("kernel")?;
            let kernel = match k_str.trim() {
                "linear" => KernelSpec::Linear,
                "normalized_dot" => KernelSpec::NormalizedDot,
                other => {
                    let gamma_str = other.strip_prefix("rbf gamma=").ok_or_else(|| Error::Parse {
                        line: k_line,
                        message: format!("unknown kernel '{other}'"),
                    })?;
                    let gamma = parse_real_field(gamma_str, k_line)?;
                    if gamma <= 0.0 {
                        return Err(Error::Parse {
                            line: k_line,
                            message: "invariant violation: rbf gamma must be > 0".into(),
                        });
                    }
                    KernelSpec::Rbf { gamma }
                }
            };
            let (nsv_line, nsv_str) = rd.expect_field("nsv")?;
            let nsv = parse_usize_field(&nsv_str, nsv_line)?;
            if nsv != m_count {
                return Err(Error::Parse {
                    line: nsv_line,
                    message: format!("nsv {nsv} does not match M {m_count}"),
                });
            }
            let mut support = Vec::with_capacity(nsv);
            for _ in 0..nsv {
                let (sv_line, sv_text) = rd.next().ok_or(Error::Parse {
                    line: 0,
                    message: format!("expected {nsv} sv lines, file ended early"),
                })?;
                let rest = sv_text.strip_prefix("sv=").ok_or_else(|| Error::Parse {
                    line: sv_line,
                    message: format!("expected 'sv= ...', got '{sv_text}'"),
                })?;
                let mut toks = rest.split_whitespace();
                let alpha_tok = toks.next().ok_or_else(|| Error::Parse {
                    line: sv_line,
                    message: "sv line missing alpha".into(),
                })?;
                let alpha = parse_real_field(alpha_tok, sv_line)?;
                let mut entries = Vec::new();
                for tok in toks {
                    let (idx_str, val_str) = tok.split_once(':').ok_or_else(|| Error::Parse {
                        line: sv_line,
                        message: format!("expected idx:val pair, got '{tok}'"),
                    })?;
                    let idx: u32 = idx_str.parse().map_err(|_| Error::Parse {
                        line: sv_line,
                        message: format!("unparsable feature index '{idx_str}'"),
                    })?;
                    if let Some(&(prev, _)) = entries.last() {
                        if idx <= prev {
                            return Err(Error::Parse {
                                line: sv_line,
                                message: format!("non-monotone feature index {idx} after {prev}"),
                            });
                        }
                    }
                    let val = parse_real_field(val_str, sv_line)?;
                    entries.push((idx, val));
                }
                support.push((SparseVec { entries }, alpha));
            }
            let model = KernelModel::from_parts(support, r, s2, c, kernel);
            model.validate()?;
            Ok(Model::Kernel(model))
        }
        other => Err(Error::Parse {
            line: kind_line,
            message: format!("unknown model kind '{other}'"),
        }),
    }
}
