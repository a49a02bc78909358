//! Smallest ball enclosing an existing ball and a batch of points.
//!
//! Minimizes `F(x) = max(|x - c| + r, max_i |x - p_i|)`. Feasibility at
//! a trial radius R is decided by a small concave quadratic maximized
//! over the simplex (the dual of the common-Hessian min-max), solved
//! exactly with an active-set method. An outer Newton/bisection loop on
//! R shrinks a certified bracket until the best center found is within
//! `merge_tolerance` of the certified lower bound:
//!
//! * any simplex point gives a lower bound on the inner max, so a
//!   positive dual value certifies R < R*;
//! * any candidate center gives `F(x) >= R*` by direct evaluation.
//!
//! The returned radius is the directly measured `F` of the best center,
//! so containment of the old ball and all points holds by construction.

use crate::error::{Error, Result};
use crate::geometry::{check_same_dim, Ball, MebSolverConfig, Point};

struct QpSolution {
    support: Vec<usize>,
    value: f64,
    /// Convex combination of the objects, in shifted coordinates.
    x: Vec<f64>,
}

/// Maximizes `b . lambda - |Q lambda|^2` over the probability simplex.
struct SimplexQp {
    objects: Vec<Vec<f64>>,
    gram: Vec<Vec<f64>>,
}

impl SimplexQp {
    fn new(objects: Vec<Vec<f64>>) -> SimplexQp {
        let m = objects.len();
        let mut gram = vec![vec![0.0; m]; m];
        for i in 0..m {
            for j in 0..=i {
                let g: f64 = objects[i].iter().zip(&objects[j]).map(|(a, b)| a * b).sum();
                gram[i][j] = g;
                gram[j][i] = g;
            }
        }
        SimplexQp { objects, gram }
    }

    fn sq_norm(&self, j: usize) -> f64 {
        self.gram[j][j]
    }

    fn combine(&self, lambda: &[f64]) -> Vec<f64> {
        let dim = self.objects[0].len();
        let mut x = vec![0.0; dim];
        for (l, q) in lambda.iter().zip(&self.objects) {
            if *l != 0.0 {
                for (xi, qi) in x.iter_mut().zip(q) {
                    *xi += l * qi;
                }
            }
        }
        x
    }

    fn objective(&self, b: &[f64], lambda: &[f64]) -> f64 {
        let mut lin = 0.0;
        let mut quad = 0.0;
        for (i, &li) in lambda.iter().enumerate() {
            if li == 0.0 {
                continue;
            }
            lin += li * b[i];
            let mut gi = 0.0;
            for (j, &lj) in lambda.iter().enumerate() {
                if lj != 0.0 {
                    gi += self.gram[i][j] * lj;
                }
            }
            quad += li * gi;
        }
        lin - quad
    }

    /// Equality-constrained KKT solve on the active face:
    /// `2 G_S lam + nu = b_S`, `sum lam = 1`.
    fn kkt(&self, b: &[f64], support: &[usize]) -> Option<(Vec<f64>, f64)> {
        let k = support.len();
        let mut a = vec![vec![0.0; k + 1]; k + 1];
        let mut rhs = vec![0.0; k + 1];
        for (ri, &i) in support.iter().enumerate() {
            for (ci, &j) in support.iter().enumerate() {
                a[ri][ci] = 2.0 * self.gram[i][j];
            }
            a[ri][k] = 1.0;
            a[k][ri] = 1.0;
            rhs[ri] = b[i];
        }
        rhs[k] = 1.0;
        match gauss_solve(&a, &rhs) {
            Some(sol) => Some((sol[..k].to_vec(), sol[k])),
            None => {
                // near-singular face: ridge the quadratic block
                let tr: f64 = support.iter().map(|&i| 2.0 * self.gram[i][i]).sum::<f64>().max(1e-300);
                let mut ar = a.clone();
                for (ri, row) in ar.iter_mut().enumerate().take(k) {
                    row[ri] += 1e-12 * tr;
                }
                gauss_solve(&ar, &rhs).map(|sol| (sol[..k].to_vec(), sol[k]))
            }
        }
    }

    fn solve(&self, b: &[f64], warm: &[usize]) -> QpSolution {
        let m = self.objects.len();
        let scale = b
            .iter()
            .fold(1.0f64, |s, v| s.max(v.abs()))
            .max((0..m).map(|j| self.sq_norm(j)).fold(0.0, f64::max));
        let tol_opt = 1e-11 * scale;

        let mut support: Vec<usize> = warm.iter().copied().filter(|&j| j < m).collect();
        support.dedup();
        if support.is_empty() {
            let j0 = (0..m)
                .max_by(|&i, &j| (b[i] - self.sq_norm(i)).total_cmp(&(b[j] - self.sq_norm(j))))
                .unwrap();
            support.push(j0);
        }
        let mut lambda = vec![0.0; m];
        for &j in &support {
            lambda[j] = 1.0 / support.len() as f64;
        }

        let mut best: Option<(f64, Vec<f64>, Vec<usize>)> = None;
        let cap = 32 + 4 * (m + 1);
        for _ in 0..cap {
            let (hat, nu) = match self.kkt(b, &support) {
                Some(s) => s,
                None => {
                    // drop the weakest member and retry
                    if support.len() <= 1 {
                        break;
                    }
                    let (drop_pos, _) = support
                        .iter()
                        .enumerate()
                        .min_by(|(_, &i), (_, &j)| lambda[i].total_cmp(&lambda[j]))
                        .unwrap();
                    let gone = support.remove(drop_pos);
                    lambda[gone] = 0.0;
                    continue;
                }
            };
            if hat.iter().all(|&v| v >= -1e-12) {
                for (pos, &j) in support.iter().enumerate() {
                    lambda[j] = hat[pos].max(0.0);
                }
                let total: f64 = support.iter().map(|&j| lambda[j]).sum();
                if total > 0.0 {
                    for &j in &support {
                        lambda[j] /= total;
                    }
                }
                let value = self.objective(b, &lambda);
                if best.as_ref().map_or(true, |(v, _, _)| value > *v) {
                    best = Some((value, lambda.clone(), support.clone()));
                }
                // global optimality check: grad_j = b_j - 2 (G lam)_j <= nu
                let mut worst = (0usize, f64::NEG_INFINITY);
                for j in 0..m {
                    if support.contains(&j) {
                        continue;
                    }
                    let mut g = 0.0;
                    for &s in &support {
                        g += self.gram[j][s] * lambda[s];
                    }
                    let slack = b[j] - 2.0 * g - nu;
                    if slack > worst.1 {
                        worst = (j, slack);
                    }
                }
                if worst.1 <= tol_opt {
                    break;
                }
                support.push(worst.0);
            } else {
                // blocked step: walk toward the face solution until the
                // first coordinate hits zero, then drop it
                let mut tau = 1.0f64;
                let mut blocker = None;
                for (pos, &j) in support.iter().enumerate() {
                    if hat[pos] < lambda[j] && hat[pos] < 0.0 {
                        let t = lambda[j] / (lambda[j] - hat[pos]);
                        if t < tau {
                            tau = t;
                            blocker = Some(pos);
                        }
                    }
                }
                for (pos, &j) in support.iter().enumerate() {
                    lambda[j] += tau * (hat[pos] - lambda[j]);
                }
                if let Some(pos) = blocker {
                    let gone = support.remove(pos);
                    lambda[gone] = 0.0;
                } else {
                    break;
                }
            }
        }

        let (value, lambda, support) = best.unwrap_or_else(|| {
            let value = self.objective(b, &lambda);
            (value, lambda.clone(), support.clone())
        });
        let x = self.combine(&lambda);
        QpSolution { support, value, x }
    }
}

/// Gaussian elimination with partial pivoting; None when singular.
fn gauss_solve(a: &[Vec<f64>], rhs: &[f64]) -> Option<Vec<f64>> {
    let n = rhs.len();
    let scale = a
        .iter()
        .flat_map(|r| r.iter())
        .fold(0.0f64, |m, &v| m.max(v.abs()))
        .max(1e-300);
    let mut m: Vec<Vec<f64>> = a
        .iter()
        .zip(rhs)
        .map(|(row, &r)| {
            let mut v = row.clone();
            v.push(r);
            v
        })
        .collect();
    for col in 0..n {
        let pivot = (col..n).max_by(|&i, &j| m[i][col].abs().total_cmp(&m[j][col].abs()))?;
        if m[pivot][col].abs() < 1e-14 * scale {
            return None;
        }
        m.swap(col, pivot);
        for row in (col + 1)..n {
            let f = m[row][col] / m[col][col];
            for k in col..=n {
                let v = m[col][k];
                m[row][k] -= f * v;
            }
        }
    }
    let mut x = vec![0.0; n];
    for row in (0..n).rev() {
        let mut acc = m[row][n];
        for k in (row + 1)..n {
            acc -= m[row][k] * x[k];
        }
        x[row] = acc / m[row][row];
    }
    Some(x)
}

/// `F(x) = max(|x| + r, max_j |x - q_j|)` in coordinates shifted so the
/// old center is the origin.
fn eval_cover_radius(x: &[f64], r: f64, objects: &[Vec<f64>]) -> f64 {
    let norm_x: f64 = x.iter().map(|v| v * v).sum::<f64>().sqrt();
    let mut f = norm_x + r;
    for q in objects.iter().skip(1) {
        let d: f64 = x
            .iter()
            .zip(q)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt();
        f = f.max(d);
    }
    f
}

fn unshift(center_shift: &[f64], x: &[f64]) -> Point {
    Point {
        coords: x.iter().zip(center_shift).map(|(a, b)| a + b).collect(),
    }
}

/// Smallest ball (within `cfg.merge_tolerance`, certified) enclosing
/// `ball` and all of `points`. Points already inside the ball never bind
/// and are dropped up front; an empty point list returns the ball
/// unchanged; a single outside point uses the closed-form two-object
/// optimum. On iteration-cap exhaustion the best enclosing ball found is
/// returned inside the error.
pub fn enclose_ball_and_points(ball: &Ball, points: &[Point], cfg: &MebSolverConfig) -> Result<Ball> {
    cfg.validate()?;
    let dim = ball.center.dim();
    if ball.center.coords.iter().any(|v| !v.is_finite()) || !ball.radius.is_finite() {
        return Err(Error::NonFinite { context: "enclose_ball_and_points ball".into() });
    }
    for p in points {
        check_same_dim(dim, p.dim())?;
        if p.coords.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite { context: "enclose_ball_and_points point".into() });
        }
    }
    let c = &ball.center.coords;
    let r = ball.radius;

    // Shift to the old center and keep only points outside the ball:
    // for d_i <= r, |x - p_i| <= |x| + d_i <= |x| + r everywhere, so the
    // ball term dominates them.
    let mut outside: Vec<(Vec<f64>, f64)> = Vec::new();
    for p in points {
        let q: Vec<f64> = p.coords.iter().zip(c).map(|(a, b)| a - b).collect();
        let d: f64 = q.iter().map(|v| v * v).sum::<f64>().sqrt();
        if d > r {
            outside.push((q, d));
        }
    }
    if outside.is_empty() {
        return Ok(ball.clone());
    }
    if outside.len() == 1 {
        let (q, d) = &outside[0];
        let delta = 0.5 * (d - r);
        let step = delta / d;
        let center: Vec<f64> = c.iter().zip(q).map(|(ci, qi)| ci + step * qi).collect();
        return Ok(Ball {
            center: Point { coords: center },
            radius: r + delta,
        });
    }

    let m = outside.len() + 1;
    let mut objects = Vec::with_capacity(m);
    objects.push(vec![0.0; dim]);
    let mut d_max = 0.0f64;
    let mut lo = r;
    for (q, d) in &outside {
        d_max = d_max.max(*d);
        lo = lo.max(0.5 * (d + r));
        objects.push(q.clone());
    }
    if m <= 128 {
        for i in 1..m {
            for j in (i + 1)..m {
                let d: f64 = objects[i]
                    .iter()
                    .zip(&objects[j])
                    .map(|(a, b)| (a - b) * (a - b))
                    .sum::<f64>()
                    .sqrt();
                lo = lo.max(0.5 * d);
            }
        }
    }
    let qp = SimplexQp::new(objects);
    let tol = cfg.merge_tolerance;

    if r == 0.0 {
        // the ball is a point: plain MEB dual, no radius search needed
        let b: Vec<f64> = (0..m).map(|j| qp.sq_norm(j)).collect();
        let sol = qp.solve(&b, &[]);
        let f = eval_cover_radius(&sol.x, 0.0, &qp.objects);
        let lower = sol.value.max(lo * lo).sqrt();
        if f <= lower * (1.0 + tol) {
            return Ok(Ball {
                center: unshift(c, &sol.x),
                radius: f,
            });
        }
        return Err(Error::SolverFailure {
            best: Ball {
                center: unshift(c, &sol.x),
                radius: f,
            },
            gap: f / lower - 1.0,
            iterations: 1,
        });
    }

    // Bisect on the trial radius. Every midpoint eval either certifies
    // infeasibility (raises lo) or yields a center realizing roughly the
    // midpoint radius (lowers f_best), so the bracket shrinks
    // geometrically; a stall counter catches the degenerate remainder.
    let mut x_best = vec![0.0; dim];
    let mut f_best = d_max; // F at the old center
    let mut warm: Vec<usize> = Vec::new();
    let scale2 = (d_max * d_max).max(1.0);
    let mut stalls = 0usize;
    for _ in 0..cfg.max_iterations {
        if f_best <= lo * (1.0 + tol) {
            return Ok(Ball {
                center: unshift(c, &x_best),
                radius: f_best,
            });
        }
        let r_try = 0.5 * (lo + f_best);
        let mut b = vec![0.0; m];
        b[0] = -(r_try - r) * (r_try - r);
        for j in 1..m {
            b[j] = qp.sq_norm(j) - r_try * r_try;
        }
        let sol = qp.solve(&b, &warm);
        warm = sol.support.clone();
        let f_x = eval_cover_radius(&sol.x, r, &qp.objects);
        let mut progressed = false;
        if f_x < f_best {
            f_best = f_x;
            x_best = sol.x.clone();
            progressed = true;
        }
        if sol.value > 1e-13 * scale2 && r_try > lo {
            // certified: no center covers everything at radius r_try
            lo = r_try;
            progressed = true;
        }
        if progressed {
            stalls = 0;
        } else {
            stalls += 1;
            if stalls > 8 {
                break;
            }
        }
    }
    if f_best <= lo * (1.0 + tol) {
        return Ok(Ball {
            center: unshift(c, &x_best),
            radius: f_best,
        });
    }
    Err(Error::SolverFailure {
        best: Ball {
            center: unshift(c, &x_best),
            radius: f_best,
        },
        gap: f_best / lo - 1.0,
        iterations: cfg.max_iterations,
    })
}
