//! FFT plumbing for the periodic box `[-L, L)`.
//!
//! Mode `m` of an `N`-point grid carries wavenumber `k = pi m / L` with
//! `m` in `[-N/2, N/2)`, stored in the usual FFT order.

use std::cell::RefCell;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::model::GridSpec;

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

/// Forward/inverse transform pair with its scratch space.
pub(crate) struct Spectral {
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
    scratch: Vec<Complex64>,
    wavenumbers: Vec<f64>,
}

impl Spectral {
    pub(crate) fn new(grid: &GridSpec) -> Self {
        let n = grid.point_count;
        let (fwd, inv) = PLANNER.with(|p| {
            let mut p = p.borrow_mut();
            (p.plan_fft_forward(n), p.plan_fft_inverse(n))
        });
        let scratch_len = fwd.get_inplace_scratch_len().max(inv.get_inplace_scratch_len());
        Self {
            fwd,
            inv,
            scratch: vec![Complex64::new(0.0, 0.0); scratch_len],
            wavenumbers: wavenumbers(grid),
        }
    }

    pub(crate) fn wavenumbers(&self) -> &[f64] {
        &self.wavenumbers
    }

    pub(crate) fn forward(&mut self, buf: &mut [Complex64]) {
        self.fwd.process_with_scratch(buf, &mut self.scratch);
    }

    /// Unnormalized inverse; callers fold the `1/N` into their multiplier.
    pub(crate) fn inverse(&mut self, buf: &mut [Complex64]) {
        self.inv.process_with_scratch(buf, &mut self.scratch);
    }

    /// Multiply every mode by `multiplier[m]` (which must already include `1/N`).
    pub(crate) fn apply_multiplier(&mut self, buf: &mut [Complex64], multiplier: &[Complex64]) {
        self.forward(buf);
        for (c, m) in buf.iter_mut().zip(multiplier) {
            *c *= m;
        }
        self.inverse(buf);
    }

    /// Spectral derivative `d/dx`; the Nyquist mode is dropped.
    pub(crate) fn derivative(&mut self, u: &[Complex64]) -> Vec<Complex64> {
        let n = u.len();
        let mut buf = u.to_vec();
        self.forward(&mut buf);
        let scale = 1.0 / n as f64;
        for (i, (c, &k)) in buf.iter_mut().zip(&self.wavenumbers).enumerate() {
            if i == n / 2 {
                *c = Complex64::new(0.0, 0.0);
            } else {
                *c *= Complex64::new(0.0, k * scale);
            }
        }
        self.inverse(&mut buf);
        buf
    }
}

pub(crate) fn wavenumbers(grid: &GridSpec) -> Vec<f64> {
    let n = grid.point_count as i64;
    let base = std::f64::consts::PI / grid.half_length;
    (0..n)
        .map(|i| {
            let m = if i < n / 2 { i } else { i - n };
            base * m as f64
        })
        .collect()
}
