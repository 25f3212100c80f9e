//! Uniform time grids and the rounding maps onto them.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

fn check_args(t: f64, h: f64) -> Result<()> {
    if !t.is_finite() {
        return invalid(format!("grid rounding needs a finite time, got {t}"));
    }
    if !(h > 0.0) || !h.is_finite() {
        return invalid(format!("grid spacing must be positive and finite, got {h}"));
    }
    Ok(())
}

/// Index `k` of the largest grid point `k * h` that does not exceed `t`.
pub fn floor_index(t: f64, h: f64) -> Result<i64> {
    check_args(t, h)?;
    let mut k = (t / h).floor() as i64;
    // t / h may be off by one ulp in either direction.
    if ((k + 1) as f64) * h <= t {
        k += 1;
    } else if (k as f64) * h > t {
        k -= 1;
    }
    Ok(k)
}

/// Index `k` of the smallest grid point `k * h` that is not below `t`.
pub fn ceil_index(t: f64, h: f64) -> Result<i64> {
    check_args(t, h)?;
    let mut k = (t / h).ceil() as i64;
    if ((k - 1) as f64) * h >= t {
        k -= 1;
    } else if (k as f64) * h < t {
        k += 1;
    }
    Ok(k)
}

/// Largest integer multiple of `h` that is `<= t`.
pub fn floor_grid(t: f64, h: f64) -> Result<f64> {
    Ok(floor_index(t, h)? as f64 * h)
}

/// Smallest integer multiple of `h` that is `>= t`.
pub fn ceil_grid(t: f64, h: f64) -> Result<f64> {
    Ok(ceil_index(t, h)? as f64 * h)
}

/// Uniform grid `0, h, 2h, ..., T` with `T = N h`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimeGrid {
    t_end: f64,
    steps: usize,
    h: f64,
}

impl TimeGrid {
    pub fn new(t_end: f64, steps: usize) -> Result<Self> {
        if !(t_end > 0.0) || !t_end.is_finite() {
            return invalid(format!("terminal time must be positive, got {t_end}"));
        }
        if steps == 0 {
            return invalid("a time grid needs at least one step");
        }
        Ok(TimeGrid {
            t_end,
            steps,
            h: t_end / steps as f64,
        })
    }

    /// Grid with spacing `h`; fails unless `t_end` is an integer multiple of `h`.
    pub fn from_step(t_end: f64, h: f64) -> Result<Self> {
        let steps = steps_for(t_end, h)?;
        Self::new(t_end, steps)
    }

    pub fn t_end(&self) -> f64 {
        self.t_end
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    /// Time of the `n`-th grid point.
    pub fn time(&self, n: usize) -> f64 {
        if n == self.steps {
            self.t_end
        } else {
            n as f64 * self.h
        }
    }
}

/// Number of steps `T / h`, which must be a positive integer up to a relative residual of 1e-9.
pub fn steps_for(t_end: f64, h: f64) -> Result<usize> {
    if !(h > 0.0) || !(t_end > 0.0) || !h.is_finite() || !t_end.is_finite() {
        return invalid(format!("need T > 0 and h > 0, got T={t_end}, h={h}"));
    }
    let ratio = t_end / h;
    let k = ratio.round();
    if k < 1.0 || (ratio - k).abs() > 1e-9 * k.max(1.0) {
        return invalid(format!("T={t_end} is not a positive integer multiple of h={h}"));
    }
    Ok(k as usize)
}
