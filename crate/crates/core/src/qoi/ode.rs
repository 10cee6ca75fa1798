//! Adaptive three-stage Radau IIA integrator for scalar autonomous ODEs.
//!
//! The method is L-stable and stiffly accurate (order 5). The local error is
//! estimated by step doubling.

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy)]
pub struct Tolerances {
    pub rtol: f64,
    pub atol: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self { rtol: 1e-13, atol: 1e-15 }
    }
}

const MAX_STEPS: usize = 200_000;
const NEWTON_ITERS: usize = 25;

struct Tableau {
    a: [[f64; 3]; 3],
}

fn tableau() -> Tableau {
    let s6 = 6f64.sqrt();
    Tableau {
        a: [
            [(88.0 - 7.0 * s6) / 360.0, (296.0 - 169.0 * s6) / 1800.0, (-2.0 + 3.0 * s6) / 225.0],
            [(296.0 + 169.0 * s6) / 1800.0, (88.0 + 7.0 * s6) / 360.0, (-2.0 - 3.0 * s6) / 225.0],
            [(16.0 - s6) / 36.0, (16.0 + s6) / 36.0, 1.0 / 9.0],
        ],
    }
}

/// Integrate `y' = f(y)` from `y0` over `[0, t_end]`. `f` returns the value
/// and the derivative with respect to `y`.
pub fn integrate<F>(f: F, y0: f64, t_end: f64, tol: Tolerances) -> Result<f64>
where
    F: Fn(f64) -> (f64, f64),
{
    let tab = tableau();
    let mut t = 0.0;
    let mut y = y0;
    let (_, j0) = f(y0);
    let mut h = (t_end * 1e-3).min(0.1 / j0.abs().max(1e-300));
    for _ in 0..MAX_STEPS {
        if t >= t_end {
            return Ok(y);
        }
        let last = t + h >= t_end;
        let step = if last { t_end - t } else { h };
        let full = radau_step(&f, &tab, y, step);
        let half = radau_step(&f, &tab, y, 0.5 * step).and_then(|m| radau_step(&f, &tab, m, 0.5 * step));
        match (full, half) {
            (Some(yf), Some(yh)) => {
                let err = (yh - yf).abs() / 31.0;
                let sc = tol.atol + tol.rtol * yh.abs().max(y.abs());
                if err <= sc {
                    t = if last { t_end } else { t + step };
                    y = yh;
                }
                let ratio = if err > 0.0 { 0.9 * (sc / err).powf(1.0 / 6.0) } else { 4.0 };
                h = step * ratio.clamp(0.1, 4.0);
            }
            _ => h = 0.25 * step,
        }
        if !y.is_finite() || h < 1e-14 * t_end.max(1e-300) * f64::EPSILON {
            break;
        }
    }
    Err(Error::Evaluation(format!("stiff integrator failed at t = {t}")))
}

// Stage values K solve K_i = y + h Σ_j a_ij f(K_j); the step result is K_3.
fn radau_step<F>(f: &F, tab: &Tableau, y: f64, h: f64) -> Option<f64>
where
    F: Fn(f64) -> (f64, f64),
{
    let mut k = [y; 3];
    for _ in 0..NEWTON_ITERS {
        let ev = [f(k[0]), f(k[1]), f(k[2])];
        let mut r = [0.0; 3];
        let mut jac = [[0.0; 3]; 3];
        for i in 0..3 {
            r[i] = k[i] - y - h * (0..3).map(|j| tab.a[i][j] * ev[j].0).sum::<f64>();
            for j in 0..3 {
                jac[i][j] = f64::from(i == j) - h * tab.a[i][j] * ev[j].1;
            }
        }
        let dk = solve3(jac, r)?;
        let mut big = 0.0f64;
        for i in 0..3 {
            k[i] -= dk[i];
            big = big.max(dk[i].abs() / (1e-300 + k[i].abs().max(y.abs()).max(1e-30)));
        }
        if !k.iter().all(|v| v.is_finite()) {
            return None;
        }
        if big <= 1e-15 {
            return Some(k[2]);
        }
    }
    None
}

fn solve3(mut a: [[f64; 3]; 3], mut b: [f64; 3]) -> Option<[f64; 3]> {
    for c in 0..3 {
        let p = (c..3).max_by(|&i, &j| a[i][c].abs().total_cmp(&a[j][c].abs()))?;
        if a[p][c] == 0.0 || !a[p][c].is_finite() {
            return None;
        }
        a.swap(c, p);
        b.swap(c, p);
        for r in c + 1..3 {
            let m = a[r][c] / a[c][c];
            for k in c..3 {
                a[r][k] -= m * a[c][k];
            }
            b[r] -= m * b[c];
        }
    }
    let mut x = [0.0; 3];
    for r in (0..3).rev() {
        let s: f64 = (r + 1..3).map(|k| a[r][k] * x[k]).sum();
        x[r] = (b[r] - s) / a[r][r];
    }
    Some(x)
}
