//! Adaptive explicit Runge-Kutta integration (Dormand-Prince 5(4)).
//!
//! Steps are clipped to land exactly on requested output times, so two runs
//! with identical inputs produce bit-identical trajectories.

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy)]
pub struct OdeOptions {
    pub rtol: f64,
    pub atol: f64,
    pub max_steps: u64,
}

impl Default for OdeOptions {
    fn default() -> Self {
        Self {
            rtol: 1e-8,
            atol: 1e-12,
            max_steps: 50_000_000,
        }
    }
}

// Dormand-Prince coefficients.
const C: [f64; 7] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [
        19372.0 / 6561.0,
        -25360.0 / 2187.0,
        64448.0 / 6561.0,
        -212.0 / 729.0,
        0.0,
        0.0,
    ],
    [
        9017.0 / 3168.0,
        -355.0 / 33.0,
        46732.0 / 5247.0,
        49.0 / 176.0,
        -5103.0 / 18656.0,
        0.0,
    ],
    [
        35.0 / 384.0,
        0.0,
        500.0 / 1113.0,
        125.0 / 192.0,
        -2187.0 / 6784.0,
        11.0 / 84.0,
    ],
];
const B5: [f64; 7] = [
    35.0 / 384.0,
    0.0,
    500.0 / 1113.0,
    125.0 / 192.0,
    -2187.0 / 6784.0,
    11.0 / 84.0,
    0.0,
];
const B4: [f64; 7] = [
    5179.0 / 57600.0,
    0.0,
    7571.0 / 16695.0,
    393.0 / 640.0,
    -92097.0 / 339200.0,
    187.0 / 2100.0,
    1.0 / 40.0,
];

/// Integrate `dy/dt = f(t, y)` from `t0`, invoking `observe` at each
/// requested output time (the first grid entry may equal `t0`).
pub fn integrate_to_grid(
    mut f: impl FnMut(f64, &[f64], &mut [f64]),
    t0: f64,
    y0: &[f64],
    grid: &[f64],
    opts: &OdeOptions,
    mut observe: impl FnMut(f64, &[f64]) -> Result<()>,
) -> Result<()> {
    if grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidParameter(
            "output grid must be strictly increasing".into(),
        ));
    }
    if let Some(&first) = grid.first() {
        if first < t0 {
            return Err(Error::InvalidParameter(
                "output grid starts before t0".into(),
            ));
        }
    }
    let dim = y0.len();
    let mut y = y0.to_vec();
    let mut t = t0;
    let mut grid_pos = 0;
    while grid_pos < grid.len() && grid[grid_pos] <= t {
        observe(grid[grid_pos], &y)?;
        grid_pos += 1;
    }
    if grid_pos >= grid.len() {
        return Ok(());
    }
    let t_end = grid[grid.len() - 1];

    let mut stages = vec![vec![0.0; dim]; 7];
    let mut y_stage = vec![0.0; dim];
    let mut y_new = vec![0.0; dim];

    // Initial step from the magnitude of the first derivative.
    f(t, &y, &mut stages[0]);
    let mut steps: u64 = 0;
    let d0 = stages[0]
        .iter()
        .zip(&y)
        .map(|(df, yi)| (df / (opts.atol + opts.rtol * yi.abs().max(1.0))).abs())
        .fold(0.0f64, f64::max);
    let mut h = if d0 > 0.0 {
        (0.01 / d0).min(t_end - t)
    } else {
        (t_end - t) * 1e-3
    };
    let mut first_same_as_last = true; // stages[0] already holds f(t, y)

    while t < t_end {
        if steps >= opts.max_steps {
            return Err(Error::Integration(format!(
                "step budget {} exhausted at t = {t}",
                opts.max_steps
            )));
        }
        steps += 1;
        let h_clip = h.min(grid[grid_pos] - t);
        let clipped = h_clip < h;
        let h_try = h_clip.max(t.abs().max(1.0) * f64::EPSILON * 4.0);

        if !first_same_as_last {
            f(t, &y, &mut stages[0]);
        }
        for s in 1..7 {
            for (i, ys) in y_stage.iter_mut().enumerate() {
                let mut acc = y[i];
                for (j, stage) in stages.iter().enumerate().take(s) {
                    let a = A[s][j];
                    if a != 0.0 {
                        acc += h_try * a * stage[i];
                    }
                }
                *ys = acc;
            }
            let (head, tail) = stages.split_at_mut(s);
            let _ = head;
            f(t + C[s] * h_try, &y_stage, &mut tail[0]);
        }
        let mut err: f64 = 0.0;
        for i in 0..dim {
            let mut y5 = y[i];
            let mut e = 0.0;
            for (j, stage) in stages.iter().enumerate() {
                y5 += h_try * B5[j] * stage[i];
                e += h_try * (B5[j] - B4[j]) * stage[i];
            }
            y_new[i] = y5;
            let scale = opts.atol + opts.rtol * y[i].abs().max(y5.abs());
            err = err.max((e / scale).abs());
        }
        if err <= 1.0 {
            t += h_try;
            std::mem::swap(&mut y, &mut y_new);
            // FSAL: the 7th stage is f(t_new, y_new).
            stages.swap(0, 6);
            first_same_as_last = true;
            while grid_pos < grid.len() && grid[grid_pos] <= t {
                observe(grid[grid_pos], &y)?;
                grid_pos += 1;
            }
            if grid_pos >= grid.len() {
                return Ok(());
            }
        } else {
            first_same_as_last = false;
        }
        let factor = if err > 0.0 {
            (0.9 * err.powf(-0.2)).clamp(0.2, 5.0)
        } else {
            5.0
        };
        // A clipped accepted step says nothing about the natural step size.
        if err > 1.0 || !clipped {
            h = (h_try * factor).max(f64::MIN_POSITIVE);
        }
        if !h.is_finite() || h < t.abs().max(1.0) * f64::EPSILON {
            return Err(Error::Integration(format!(
                "step size underflow at t = {t}"
            )));
        }
    }
    Ok(())
}
