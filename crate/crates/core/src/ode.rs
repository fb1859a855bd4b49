//! Small fixed-size ODE integrators.

use crate::error::{Error, Result};

// Dormand–Prince 5(4) tableau.
const C: [f64; 7] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
const B5: [f64; 7] = [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0, 0.0];
const B4: [f64; 7] =
    [5179.0 / 57600.0, 0.0, 7571.0 / 16695.0, 393.0 / 640.0, -92097.0 / 339200.0, 187.0 / 2100.0, 1.0 / 40.0];

/// Adaptive Dormand–Prince integration of `y' = f(t, y)` from `t0`,
/// returning the state at each (non-decreasing) time in `outputs`.
pub fn dopri5<const N: usize, F>(
    f: F,
    t0: f64,
    y0: [f64; N],
    outputs: &[f64],
    rtol: f64,
    atol: f64,
) -> Result<Vec<[f64; N]>>
where
    F: Fn(f64, &[f64; N]) -> [f64; N],
{
    let mut t = t0;
    let mut y = y0;
    let mut h = outputs.iter().map(|&o| (o - t0).abs()).fold(0.0, f64::max).max(1.0) * 1e-3;
    let mut out = Vec::with_capacity(outputs.len());
    let mut k = [[0.0; N]; 7];
    let mut steps = 0usize;
    for &target in outputs {
        if target < t {
            return Err(Error::Contract(format!("output time {target} precedes {t}")));
        }
        while t < target {
            steps += 1;
            if steps > 50_000_000 {
                return Err(Error::NumericAbort { step: steps, message: "integrator step budget exhausted".into() });
            }
            let last = h >= target - t;
            let hs = if last { target - t } else { h };
            k[0] = f(t, &y);
            for s in 1..7 {
                let mut ys = y;
                for (i, yi) in ys.iter_mut().enumerate() {
                    let mut acc = 0.0;
                    for (j, kj) in k.iter().enumerate().take(s) {
                        acc += A[s][j] * kj[i];
                    }
                    *yi += hs * acc;
                }
                k[s] = f(t + C[s] * hs, &ys);
            }
            let mut y5 = y;
            let mut err = 0.0_f64;
            for i in 0..N {
                let (mut s5, mut s4) = (0.0, 0.0);
                for s in 0..7 {
                    s5 += B5[s] * k[s][i];
                    s4 += B4[s] * k[s][i];
                }
                y5[i] += hs * s5;
                let sc = atol + rtol * y[i].abs().max(y5[i].abs());
                let e = hs * (s5 - s4) / sc;
                err = err.max(e.abs());
            }
            if !err.is_finite() {
                return Err(Error::NumericAbort { step: steps, message: format!("non-finite state at t = {t}") });
            }
            if err <= 1.0 {
                t = if last { target } else { t + hs };
                y = y5;
            }
            let factor = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
            if !(last && err <= 1.0) {
                h = hs * factor;
            }
            if h < 1e-14 * t.abs().max(1.0) {
                return Err(Error::NumericAbort { step: steps, message: format!("step size underflow at t = {t}") });
            }
        }
        out.push(y);
    }
    Ok(out)
}

/// One classical fourth-order Runge–Kutta step.
pub fn rk4_step<const N: usize, F>(f: &F, t: f64, y: &[f64; N], h: f64) -> [f64; N]
where
    F: Fn(f64, &[f64; N]) -> [f64; N],
{
    let add = |a: &[f64; N], b: &[f64; N], s: f64| {
        let mut r = *a;
        for i in 0..N {
            r[i] += s * b[i];
        }
        r
    };
    let k1 = f(t, y);
    let k2 = f(t + 0.5 * h, &add(y, &k1, 0.5 * h));
    let k3 = f(t + 0.5 * h, &add(y, &k2, 0.5 * h));
    let k4 = f(t + h, &add(y, &k3, h));
    let mut r = *y;
    for i in 0..N {
        r[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    }
    r
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exponential_decay() {
        let ts = [0.5, 1.0, 3.0];
        let ys = dopri5(|_, y: &[f64; 1]| [-y[0]], 0.0, [1.0], &ts, 1e-11, 1e-13).unwrap();
        for (t, y) in ts.iter().zip(&ys) {
            assert!((y[0] - (-t).exp()).abs() < 1e-10);
        }
    }

    #[test]
    fn oscillator_returns_after_period() {
        let tp = 2.0 * std::f64::consts::PI;
        let ys = dopri5(|_, y: &[f64; 2]| [y[1], -y[0]], 0.0, [1.0, 0.0], &[tp], 1e-11, 1e-13).unwrap();
        assert!((ys[0][0] - 1.0).abs() < 1e-9 && ys[0][1].abs() < 1e-9);
    }

    #[test]
    fn rk4_is_fourth_order() {
        let f = |_: f64, y: &[f64; 1]| [y[0]];
        let run = |n: usize| {
            let h = 1.0 / n as f64;
            let mut y = [1.0];
            for i in 0..n {
                y = rk4_step(&f, i as f64 * h, &y, h);
            }
            (y[0] - 1f64.exp()).abs()
        };
        let ratio = run(10) / run(20);
        assert!(ratio > 14.0 && ratio < 18.0, "{ratio}");
    }
}
