//! Fit of the low-dimensional similarity curve `1 / (1 + a d^(2b))`.

use nalgebra::{Matrix2, Vector2};

use crate::error::{HumapError, Result};

pub const DEFAULT_MIN_DIST: f64 = 0.1;
pub const DEFAULT_SPREAD: f64 = 1.0;
const SAMPLES: usize = 300;

pub fn curve(d: f64, a: f64, b: f64) -> f64 {
    1.0 / (1.0 + a * d.powf(2.0 * b))
}

/// Offset exponential the curve is fitted to.
pub fn target_curve(d: f64, min_dist: f64, spread: f64) -> f64 {
    if d < min_dist {
        1.0
    } else {
        (-(d - min_dist) / spread).exp()
    }
}

/// Least-squares `(a, b)` over `d` in `(0, 3 * spread]`, solved with
/// Levenberg-Marquardt from `(1, 1)`.
pub fn fit_curve_params(min_dist: f64, spread: f64) -> Result<(f64, f64)> {
    if !(min_dist > 0.0 && spread >= min_dist && spread.is_finite()) {
        return Err(HumapError::param(format!(
            "need 0 < min_dist <= spread, got min_dist={min_dist}, spread={spread}"
        )));
    }
    let xs: Vec<f64> = (1..=SAMPLES).map(|i| 3.0 * spread * i as f64 / SAMPLES as f64).collect();
    let ys: Vec<f64> = xs.iter().map(|&x| target_curve(x, min_dist, spread)).collect();
    let cost = |a: f64, b: f64| -> f64 {
        xs.iter().zip(&ys).map(|(&x, &y)| (curve(x, a, b) - y).powi(2)).sum()
    };

    let (mut a, mut b) = (1.0f64, 1.0f64);
    let mut lambda = 1e-3;
    let mut current = cost(a, b);
    for _ in 0..500 {
        let mut jtj = Matrix2::zeros();
        let mut jtr = Vector2::zeros();
        for (&x, &y) in xs.iter().zip(&ys) {
            let p = x.powf(2.0 * b);
            let denom = (1.0 + a * p).powi(2);
            let ja = -p / denom;
            let jb = -2.0 * a * p * x.ln() / denom;
            let r = curve(x, a, b) - y;
            let j = Vector2::new(ja, jb);
            jtj += j * j.transpose();
            jtr += j * r;
        }
        let mut improved = false;
        for _ in 0..30 {
            let damped = jtj + Matrix2::from_diagonal(&jtj.diagonal()) * lambda;
            let Some(delta) = damped.lu().solve(&(-jtr)) else {
                lambda *= 10.0;
                continue;
            };
            let (na, nb) = (a + delta[0], b + delta[1]);
            if na > 0.0 && nb > 0.0 {
                let c = cost(na, nb);
                if c.is_finite() && c < current {
                    let gain = current - c;
                    a = na;
                    b = nb;
                    current = c;
                    lambda = (lambda * 0.3).max(1e-12);
                    improved = gain > 1e-15 * current.max(1e-300);
                    break;
                }
            }
            lambda *= 10.0;
        }
        if !improved {
            break;
        }
    }
    if !(a.is_finite() && b.is_finite() && a > 0.0 && b > 0.0) {
        return Err(HumapError::param("curve fit diverged"));
    }
    Ok((a, b))
}
