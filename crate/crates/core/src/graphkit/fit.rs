//! Least-squares fit of the shifted power curve `f(x) = a·x^b + c`.
//!
//! For fixed `b` the model is linear in `(a, c)`, so the residual is
//! minimized in closed form; the outer search over `b` is a grid scan of
//! [`EXPONENT_RANGE`] followed by golden-section refinement around the best
//! grid point.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const EXPONENT_RANGE: (f64, f64) = (-5.0, 5.0);
pub const GOLDEN_TOLERANCE: f64 = 1e-6;
const GRID_STEPS: usize = 400;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurveFit {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    /// `1 − SS_res / SS_tot` on the fitted points.
    pub r_squared: f64,
}

impl CurveFit {
    pub fn eval(&self, x: f64) -> f64 {
        self.a * x.powf(self.b) + self.c
    }

    pub fn residual(&self, points: &[(f64, f64)]) -> f64 {
        points.iter().map(|&(x, y)| (y - self.eval(x)).powi(2)).sum()
    }
}

struct Inner {
    a: f64,
    c: f64,
    sse: f64,
}

fn solve_linear(points: &[(f64, f64)], mean_y: f64, b: f64) -> Inner {
    let n = points.len() as f64;
    let z: Vec<f64> = points.iter().map(|&(x, _)| x.powf(b)).collect();
    let mean_z = z.iter().sum::<f64>() / n;
    let mut szz = 0.0;
    let mut szy = 0.0;
    for (zi, &(_, y)) in z.iter().zip(points) {
        szz += (zi - mean_z).powi(2);
        szy += (zi - mean_z) * (y - mean_y);
    }
    let scale = mean_z.abs().max(1.0);
    let a = if szz > 1e-24 * scale * scale * n { szy / szz } else { 0.0 };
    let c = mean_y - a * mean_z;
    let sse = z
        .iter()
        .zip(points)
        .map(|(zi, &(_, y))| (y - a * zi - c).powi(2))
        .sum::<f64>();
    Inner {
        a,
        c,
        sse: if sse.is_finite() { sse } else { f64::INFINITY },
    }
}

/// Fits `y ≈ a·x^b + c`. Needs at least three distinct positive `x`. When
/// every `y` is equal the result is `(0, 0, y, R² = 1)`.
pub fn fit_shifted_power(points: &[(f64, f64)]) -> Result<CurveFit> {
    if points.iter().any(|&(x, y)| !x.is_finite() || !y.is_finite()) {
        return Err(Error::Fit("non-finite coordinate".into()));
    }
    if points.iter().any(|&(x, _)| x <= 0.0) {
        return Err(Error::Fit("x must be positive".into()));
    }
    let mut xs: Vec<f64> = points.iter().map(|p| p.0).collect();
    xs.sort_by(f64::total_cmp);
    xs.dedup();
    if xs.len() < 3 {
        return Err(Error::Fit(format!("{} distinct x values, need 3", xs.len())));
    }

    let n = points.len() as f64;
    let mean_y = points.iter().map(|p| p.1).sum::<f64>() / n;
    let ss_tot: f64 = points.iter().map(|p| (p.1 - mean_y).powi(2)).sum();
    if ss_tot == 0.0 {
        return Ok(CurveFit {
            a: 0.0,
            b: 0.0,
            c: mean_y,
            r_squared: 1.0,
        });
    }

    let (lo, hi) = EXPONENT_RANGE;
    let step = (hi - lo) / GRID_STEPS as f64;
    let grid_b = |k: usize| lo + step * k as f64;
    let best_k = (0..=GRID_STEPS)
        .min_by(|&i, &j| {
            solve_linear(points, mean_y, grid_b(i))
                .sse
                .total_cmp(&solve_linear(points, mean_y, grid_b(j)).sse)
        })
        .unwrap();

    let mut left = grid_b(best_k.saturating_sub(1));
    let mut right = grid_b((best_k + 1).min(GRID_STEPS));
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = right - inv_phi * (right - left);
    let mut x2 = left + inv_phi * (right - left);
    let mut f1 = solve_linear(points, mean_y, x1).sse;
    let mut f2 = solve_linear(points, mean_y, x2).sse;
    while right - left > GOLDEN_TOLERANCE {
        if f1 <= f2 {
            right = x2;
            x2 = x1;
            f2 = f1;
            x1 = right - inv_phi * (right - left);
            f1 = solve_linear(points, mean_y, x1).sse;
        } else {
            left = x1;
            x1 = x2;
            f1 = f2;
            x2 = left + inv_phi * (right - left);
            f2 = solve_linear(points, mean_y, x2).sse;
        }
    }

    let candidates = [0.5 * (left + right), x1, x2, grid_b(best_k)];
    let (b, inner) = candidates
        .into_iter()
        .map(|b| (b, solve_linear(points, mean_y, b)))
        .min_by(|p, q| p.1.sse.total_cmp(&q.1.sse))
        .unwrap();
    Ok(CurveFit {
        a: inner.a,
        b,
        c: inner.c,
        r_squared: 1.0 - inner.sse / ss_tot,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn reference_curve(x: f64) -> f64 {
        -52.0 * x.powf(-0.5) + 58.0
    }

    #[test]
    fn recovers_noiseless_curve() {
        let pts: Vec<(f64, f64)> = (1..=60).map(|x| (x as f64, reference_curve(x as f64))).collect();
        let fit = fit_shifted_power(&pts).unwrap();
        assert!((fit.a + 52.0).abs() < 1e-3, "{fit:?}");
        assert!((fit.b + 0.5).abs() < 1e-3, "{fit:?}");
        assert!((fit.c - 58.0).abs() < 1e-3, "{fit:?}");
        assert!(fit.r_squared >= 0.999);
    }

    #[test]
    fn constant_y_convention() {
        let pts: Vec<(f64, f64)> = (1..=10).map(|x| (x as f64, 7.0)).collect();
        let fit = fit_shifted_power(&pts).unwrap();
        assert_eq!((fit.a, fit.b, fit.c, fit.r_squared), (0.0, 0.0, 7.0, 1.0));
    }

    #[test]
    fn rejects_degenerate_input() {
        assert!(fit_shifted_power(&[(1.0, 1.0), (2.0, 2.0), (2.0, 3.0)]).is_err());
        assert!(fit_shifted_power(&[(0.0, 1.0), (2.0, 2.0), (3.0, 3.0)]).is_err());
        assert!(fit_shifted_power(&[(1.0, f64::NAN), (2.0, 2.0), (3.0, 3.0)]).is_err());
    }

    #[test]
    fn local_optimality_in_exponent() {
        let pts: Vec<(f64, f64)> = (1..=40)
            .map(|x| (x as f64, 3.0 * (x as f64).powf(0.7) - 2.0 + if x % 2 == 0 { 0.3 } else { -0.3 }))
            .collect();
        let fit = fit_shifted_power(&pts).unwrap();
        let r0 = fit.residual(&pts);
        for eps in [1e-4, -1e-4] {
            let moved = CurveFit { b: fit.b + eps, ..fit };
            assert!(r0 <= moved.residual(&pts), "eps {eps}");
        }
    }

    #[test]
    fn r_squared_matches_definition() {
        let pts: Vec<(f64, f64)> = (1..=20).map(|x| (x as f64, (x as f64).ln() + (x % 3) as f64 * 0.1)).collect();
        let fit = fit_shifted_power(&pts).unwrap();
        let mean = pts.iter().map(|p| p.1).sum::<f64>() / pts.len() as f64;
        let ss_tot: f64 = pts.iter().map(|p| (p.1 - mean).powi(2)).sum();
        assert!((fit.r_squared - (1.0 - fit.residual(&pts) / ss_tot)).abs() < 1e-9);
    }
}
