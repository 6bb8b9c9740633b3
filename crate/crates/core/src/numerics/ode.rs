//! Adaptive Dormand-Prince 5(4) integration for small ODE systems.

use crate::error::{Error, Result};

const C: [f64; 7] = [0.0, 0.2, 0.3, 0.8, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [0.2, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
const B5: [f64; 7] = [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0, 0.0];
const B4: [f64; 7] = [
    5179.0 / 57600.0,
    0.0,
    7571.0 / 16695.0,
    393.0 / 640.0,
    -92097.0 / 339200.0,
    187.0 / 2100.0,
    1.0 / 40.0,
];

/// Integrates `y' = f(t, y)` from `t0` to each time in `outputs` (ascending,
/// all `>= t0`) and returns the states there.
pub fn dopri45(
    mut f: impl FnMut(f64, &[f64], &mut [f64]),
    t0: f64,
    y0: &[f64],
    outputs: &[f64],
    rtol: f64,
    atol: f64,
) -> Result<Vec<Vec<f64>>> {
    let n = y0.len();
    let mut t = t0;
    let mut y = y0.to_vec();
    let mut k = vec![vec![0.0; n]; 7];
    let mut tmp = vec![0.0; n];
    let mut out = Vec::with_capacity(outputs.len());
    let span = outputs.last().map(|&e| e - t0).unwrap_or(0.0);
    let mut h = (span * 1e-3).max(1e-8);
    let mut steps = 0usize;
    for &target in outputs {
        while t < target {
            steps += 1;
            if steps > 1_000_000 {
                return Err(Error::Convergence { what: "Dormand-Prince integrator", iterations: steps });
            }
            let hh = h.min(target - t);
            for s in 0..7 {
                for i in 0..n {
                    tmp[i] = y[i] + hh * (0..s).map(|j| A[s][j] * k[j][i]).sum::<f64>();
                }
                f(t + C[s] * hh, &tmp, &mut k[s]);
            }
            let mut err = 0.0_f64;
            let mut ynew = vec![0.0; n];
            for i in 0..n {
                let y5 = y[i] + hh * (0..7).map(|j| B5[j] * k[j][i]).sum::<f64>();
                let y4 = y[i] + hh * (0..7).map(|j| B4[j] * k[j][i]).sum::<f64>();
                let sc = atol + rtol * y[i].abs().max(y5.abs());
                err = err.max(((y5 - y4) / sc).abs());
                ynew[i] = y5;
            }
            if !err.is_finite() {
                return Err(Error::Numerical("ODE solution is not finite".into()));
            }
            if err <= 1.0 {
                t += hh;
                y = ynew;
            }
            let fac = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
            h = hh * fac;
        }
        out.push(y.clone());
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exponential_decay() {
        let ys = dopri45(|_, y, dy| dy[0] = -y[0], 0.0, &[1.0], &[1.0, 3.0], 1e-10, 1e-12).unwrap();
        assert!((ys[0][0] - (-1.0f64).exp()).abs() < 1e-9);
        assert!((ys[1][0] - (-3.0f64).exp()).abs() < 1e-9);
    }
}
