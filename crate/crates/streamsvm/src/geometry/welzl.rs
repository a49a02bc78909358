//! Exact minimum enclosing ball via the move-to-front recursive scheme.
//!
//! Intended for small dimensions (D up to ~12): the support set has at
//! most D+1 points and each support solve is a dense linear system of
//! that size.

use crate::error::{Error, Result};
use crate::geometry::{check_same_dim, Ball, Point};

/// Candidate ball during the recursion; `None` means "no ball yet"
/// (encloses nothing).
type Candidate = Option<(Vec<f64>, f64)>; // (center, radius^2)

fn contains(ball: &Candidate, p: &[f64]) -> bool {
    match ball {
        None => false,
        Some((c, r2)) => {
            let d2: f64 = c.iter().zip(p).map(|(a, b)| (a - b) * (a - b)).sum();
            d2 <= r2 + 1e-12 * (1.0 + r2)
        }
    }
}

/// Solves the symmetric system `A x = b` with partial pivoting; retries
/// once with a small ridge when near-singular.
fn solve_spd(a: &mut Vec<Vec<f64>>, b: &mut Vec<f64>) -> Option<Vec<f64>> {
    let n = b.len();
    let scale = a
        .iter()
        .flat_map(|row| row.iter())
        .fold(0.0f64, |m, &v| m.max(v.abs()))
        .max(1e-300);
    let mut m: Vec<Vec<f64>> = a
        .iter()
        .zip(b.iter())
        .map(|(row, &r)| {
            let mut v = row.clone();
            v.push(r);
            v
        })
        .collect();
    for col in 0..n {
        let pivot = (col..n).max_by(|&i, &j| m[i][col].abs().total_cmp(&m[j][col].abs()))?;
        if m[pivot][col].abs() < 1e-13 * scale {
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

/// Smallest ball with every point of `boundary` on its surface. The
/// center lies in the boundary's affine hull:
/// `c = p0 + sum_k beta_k (p_k - p0)` with the equidistance equations
/// `2 (p_k - p0) . (c - p0) = |p_k - p0|^2`.
fn ball_with_boundary(boundary: &[Vec<f64>]) -> Candidate {
    match boundary.len() {
        0 => None,
        1 => Some((boundary[0].clone(), 0.0)),
        _ => {
            let p0 = &boundary[0];
            let diffs: Vec<Vec<f64>> = boundary[1..]
                .iter()
                .map(|p| p.iter().zip(p0).map(|(a, b)| a - b).collect())
                .collect();
            let k = diffs.len();
            let mut a = vec![vec![0.0; k]; k];
            let mut rhs = vec![0.0; k];
            for i in 0..k {
                for j in 0..k {
                    a[i][j] = 2.0 * diffs[i].iter().zip(&diffs[j]).map(|(x, y)| x * y).sum::<f64>();
                }
                rhs[i] = diffs[i].iter().map(|x| x * x).sum();
            }
            let beta = match solve_spd(&mut a.clone(), &mut rhs.clone()) {
                Some(b) => b,
                None => {
                    // near-degenerate boundary: ridge the normal matrix
                    let tr: f64 = (0..k).map(|i| a[i][i]).sum::<f64>().max(1e-300);
                    let mut ar = a.clone();
                    for (i, row) in ar.iter_mut().enumerate() {
                        row[i] += 1e-12 * tr;
                    }
                    solve_spd(&mut ar, &mut rhs.clone())?
                }
            };
            let mut center = p0.clone();
            for (bk, d) in beta.iter().zip(&diffs) {
                for (c, v) in center.iter_mut().zip(d) {
                    *c += bk * v;
                }
            }
            let r2: f64 = center.iter().zip(p0).map(|(a, b)| (a - b) * (a - b)).sum();
            Some((center, r2))
        }
    }
}

fn mtf_mb(order: &mut [usize], end: usize, points: &[Point], boundary: &mut Vec<Vec<f64>>, dim: usize) -> Candidate {
    let mut ball = ball_with_boundary(boundary);
    if boundary.len() == dim + 1 {
        return ball;
    }
    let mut i = 0;
    while i < end {
        let idx = order[i];
        if !contains(&ball, &points[idx].coords) {
            boundary.push(points[idx].coords.clone());
            ball = mtf_mb(order, i, points, boundary, dim);
            boundary.pop();
            order[..=i].rotate_right(1);
        }
        i += 1;
    }
    ball
}

/// Exact minimum enclosing ball of a nonempty point set.
pub fn exact_meb(points: &[Point]) -> Result<Ball> {
    let first = points.first().ok_or(Error::EmptyInput { context: "exact_meb" })?;
    let dim = first.dim();
    for p in points {
        check_same_dim(dim, p.dim())?;
        if p.coords.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite { context: "exact_meb point".into() });
        }
    }
    let mut order: Vec<usize> = (0..points.len()).collect();
    let mut boundary = Vec::new();
    let ball = mtf_mb(&mut order, points.len(), points, &mut boundary, dim);
    let (center, r2) = ball.unwrap_or_else(|| (first.coords.clone(), 0.0));
    Ok(Ball {
        center: Point { coords: center },
        radius: r2.max(0.0).sqrt(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::test_support::{brute_force_meb, random_points};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha20Rng;

    fn pts(coords: &[&[f64]]) -> Vec<Point> {
        coords.iter().map(|c| Point { coords: c.to_vec() }).collect()
    }

    #[test]
    fn singleton() {
        let b = exact_meb(&pts(&[&[1.0, 2.0]])).unwrap();
        assert_eq!(b.center.coords, vec![1.0, 2.0]);
        assert_eq!(b.radius, 0.0);
    }

    #[test]
    fn two_points() {
        let b = exact_meb(&pts(&[&[0.0, 0.0], &[2.0, 0.0]])).unwrap();
        assert!((b.center.coords[0] - 1.0).abs() < 1e-12);
        assert!(b.center.coords[1].abs() < 1e-12);
        assert!((b.radius - 1.0).abs() < 1e-12);
    }

    #[test]
    fn interior_third_point_ignored() {
        let b = exact_meb(&pts(&[&[0.0, 0.0], &[2.0, 0.0], &[1.0, 1.0]])).unwrap();
        assert!((b.center.coords[0] - 1.0).abs() < 1e-12);
        assert!(b.center.coords[1].abs() < 1e-12);
        assert!((b.radius - 1.0).abs() < 1e-12);
    }

    #[test]
    fn empty_input_errors() {
        assert!(matches!(exact_meb(&[]), Err(Error::EmptyInput { .. })));
    }

    #[test]
    fn equilateral_triangle() {
        let h = 3.0f64.sqrt() / 2.0;
        let b = exact_meb(&pts(&[&[0.0, 0.0], &[1.0, 0.0], &[0.5, h]])).unwrap();
        let r_expect = 1.0 / 3.0f64.sqrt();
        assert!((b.radius - r_expect).abs() < 1e-12);
        assert!((b.center.coords[0] - 0.5).abs() < 1e-12);
    }

    #[test]
    fn matches_brute_force_on_small_instances() {
        let mut rng = ChaCha20Rng::seed_from_u64(17);
        for case in 0..200 {
            let n = rng.gen_range(1..=6);
            let dim = rng.gen_range(1..=3);
            let points = random_points(&mut rng, n, dim, 5.0);
            let fast = exact_meb(&points).unwrap();
            let brute = brute_force_meb(&points);
            assert!(
                (fast.radius - brute.radius).abs() <= 1e-7 * (1.0 + brute.radius),
                "case {case}: welzl {} vs brute {}",
                fast.radius,
                brute.radius
            );
            for p in &points {
                let d = crate::geometry::dist(&fast.center.coords, &p.coords);
                assert!(d <= fast.radius * (1.0 + 1e-9) + 1e-9, "case {case}: point escapes");
            }
        }
    }

    #[test]
    fn handles_duplicates_and_collinear() {
        let b = exact_meb(&pts(&[&[1.0, 1.0], &[1.0, 1.0], &[1.0, 1.0]])).unwrap();
        assert!(b.radius < 1e-12);
        let b = exact_meb(&pts(&[&[0.0, 0.0], &[1.0, 0.0], &[2.0, 0.0], &[3.0, 0.0]])).unwrap();
        assert!((b.radius - 1.5).abs() < 1e-10);
        assert!((b.center.coords[0] - 1.5).abs() < 1e-10);
    }

    #[test]
    fn higher_dimension_enclosure() {
        let mut rng = ChaCha20Rng::seed_from_u64(5);
        for _ in 0..10 {
            let points = random_points(&mut rng, 200, 10, 3.0);
            let ball = exact_meb(&points).unwrap();
            for p in &points {
                let d = crate::geometry::dist(&ball.center.coords, &p.coords);
                assert!(d <= ball.radius * (1.0 + 1e-9) + 1e-9);
            }
            // shrinking by 0.1% must lose at least one point: minimality probe
            let shrunk = ball.radius * 0.999;
            assert!(points
                .iter()
                .any(|p| crate::geometry::dist(&ball.center.coords, &p.coords) > shrunk));
        }
    }
}
