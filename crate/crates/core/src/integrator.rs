//! Adaptive Dormand–Prince 5(4) integration with dense-free output at a
//! fixed stride (steps are shortened to land on every output time).

use nalgebra::SVector;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct IntegratorOptions {
    pub rtol: f64,
    pub atol: f64,
    /// First trial step; chosen automatically when `None`.
    pub h_init: Option<f64>,
    pub h_max: Option<f64>,
    pub max_steps: usize,
}

impl Default for IntegratorOptions {
    fn default() -> Self {
        Self {
            rtol: 1e-9,
            atol: 1e-10,
            h_init: None,
            h_max: None,
            max_steps: 10_000_000,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct IntegrationStats {
    pub accepted: usize,
    pub rejected: usize,
    pub evaluations: usize,
}

const C: [f64; 7] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
const A21: f64 = 1.0 / 5.0;
const A3: [f64; 2] = [3.0 / 40.0, 9.0 / 40.0];
const A4: [f64; 3] = [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0];
const A5: [f64; 4] = [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0];
const A6: [f64; 5] = [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0];
const B: [f64; 6] = [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0];
// Fifth-order minus embedded fourth-order weights.
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];

/// Integrates `y' = f(t, y)` from `t0` to `t_end`, calling `observe` at
/// `t0 + k * stride` (and at `t_end`). Samples delivered before an error
/// remain with the caller.
pub fn integrate<const N: usize, F, O>(
    mut f: F,
    t0: f64,
    y0: SVector<f64, N>,
    t_end: f64,
    stride: f64,
    options: &IntegratorOptions,
    mut observe: O,
) -> Result<IntegrationStats>
where
    F: FnMut(f64, &SVector<f64, N>) -> Result<SVector<f64, N>>,
    O: FnMut(f64, &SVector<f64, N>) -> Result<()>,
{
    if !(stride > 0.0 && stride.is_finite()) || t_end.partial_cmp(&t0).is_none_or(|o| o.is_lt()) {
        return Err(Error::InvalidParameter(format!(
            "need stride > 0 and t_end >= t0 (stride {stride}, t0 {t0}, t_end {t_end})"
        )));
    }
    let mut stats = IntegrationStats::default();
    let norm = |err: &SVector<f64, N>, y: &SVector<f64, N>, y_new: &SVector<f64, N>| {
        let sum: f64 = (0..N)
            .map(|i| {
                let scale = options.atol + options.rtol * y[i].abs().max(y_new[i].abs());
                (err[i] / scale).powi(2)
            })
            .sum();
        (sum / N as f64).sqrt()
    };

    let mut t = t0;
    let mut y = y0;
    observe(t, &y)?;
    let mut k1 = f(t, &y)?;
    stats.evaluations += 1;

    let h_max = options.h_max.unwrap_or(f64::INFINITY).min(stride);
    let mut h = match options.h_init {
        Some(h) => h,
        None => {
            let zero = SVector::<f64, N>::zeros();
            let d0 = norm(&y, &y, &zero);
            let d1 = norm(&k1, &y, &zero);
            if d0 < 1e-5 || d1 < 1e-5 {
                1e-6
            } else {
                0.01 * d0 / d1
            }
        }
    }
    .min(h_max);

    let mut output_index: u64 = 1;
    let next_output = |k: u64| {
        let t = t0 + k as f64 * stride;
        if t >= t_end - 1e-9 * stride {
            t_end
        } else {
            t
        }
    };
    let mut target = next_output(output_index);

    while t < t_end {
        if stats.accepted + stats.rejected >= options.max_steps {
            return Err(Error::MaxStepsExceeded {
                steps: options.max_steps,
                t,
            });
        }
        let proposal = h;
        let mut lands = false;
        // Stretch a step that would stop just short of the output time.
        if t + h * (1.0 + 1e-8) >= target {
            h = target - t;
            lands = true;
        }
        if h <= 1e-14 * t.abs().max(stride) {
            return Err(Error::StepSizeUnderflow(t));
        }

        let k2 = f(t + C[1] * h, &(y + h * A21 * k1))?;
        let k3 = f(t + C[2] * h, &(y + h * (A3[0] * k1 + A3[1] * k2)))?;
        let k4 = f(t + C[3] * h, &(y + h * (A4[0] * k1 + A4[1] * k2 + A4[2] * k3)))?;
        let k5 = f(t + C[4] * h, &(y + h * (A5[0] * k1 + A5[1] * k2 + A5[2] * k3 + A5[3] * k4)))?;
        let k6 = f(
            t + C[5] * h,
            &(y + h * (A6[0] * k1 + A6[1] * k2 + A6[2] * k3 + A6[3] * k4 + A6[4] * k5)),
        )?;
        let y_new = y + h * (B[0] * k1 + B[2] * k3 + B[3] * k4 + B[4] * k5 + B[5] * k6);
        let k7 = f(t + h, &y_new)?;
        stats.evaluations += 6;

        let err_vec = h * (E[0] * k1 + E[2] * k3 + E[3] * k4 + E[4] * k5 + E[5] * k6 + E[6] * k7);
        let err = norm(&err_vec, &y, &y_new);
        if !err.is_finite() {
            stats.rejected += 1;
            h *= 0.2;
            continue;
        }
        let factor = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
        if err <= 1.0 {
            stats.accepted += 1;
            t = if lands { target } else { t + h };
            y = y_new;
            k1 = k7;
            if lands {
                observe(t, &y)?;
                output_index += 1;
                target = next_output(output_index);
            }
            // A step shortened to land on an output keeps the earlier proposal.
            let grown = h * factor;
            h = if lands && grown < proposal { proposal } else { grown }.min(h_max);
        } else {
            stats.rejected += 1;
            h *= factor.min(1.0);
        }
    }
    Ok(stats)
}
