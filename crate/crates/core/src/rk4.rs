//! Classical fixed-step RK4 that lands exactly on every requested sample.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::scalar::{Real, C};

pub(crate) trait Rk4State<T: Real>: Clone {
    /// `self += a · x`.
    fn axpy(&mut self, a: T, x: &Self);
}

impl<T: Real> Rk4State<T> for DMatrix<C<T>> {
    fn axpy(&mut self, a: T, x: &Self) {
        for (s, v) in self.iter_mut().zip(x.iter()) {
            *s += *v * a;
        }
    }
}

pub(crate) fn check_grid<T: Real>(t_grid: &[T]) -> Result<()> {
    if let Some(&t0) = t_grid.first() {
        if !(t0 >= T::zero()) {
            return Err(Error::InvalidParams(format!(
                "time grid must start at t >= 0, got {}",
                t0.to_f64()
            )));
        }
    }
    if t_grid.windows(2).any(|w| !(w[1] >= w[0])) {
        return Err(Error::InvalidParams("time grid must be ascending".into()));
    }
    Ok(())
}

/// Integrates `y' = f(y)` from `t = 0`, calling `sample(k, &y)` at each `t_grid[k]`.
/// Between samples the interval is split into `ceil(Δt/h)` equal substeps.
pub(crate) fn integrate<T, S, F, G>(y0: S, t_grid: &[T], h: T, mut f: F, mut sample: G) -> Result<()>
where
    T: Real,
    S: Rk4State<T>,
    F: FnMut(&S) -> S,
    G: FnMut(usize, &S) -> Result<()>,
{
    check_grid(t_grid)?;
    if !(h > T::zero()) || !h.is_finite() {
        return Err(Error::InvalidParams(format!(
            "step must be positive, got {}",
            h.to_f64()
        )));
    }
    let half = T::lit(0.5);
    let sixth = T::lit(1.0 / 6.0);
    let mut y = y0;
    let mut t = T::zero();
    for (k, &tk) in t_grid.iter().enumerate() {
        let span = tk - t;
        if span > T::zero() {
            let n = (span / h).ceil().to_f64().max(1.0) as usize;
            let dt = span / T::lit(n as f64);
            for _ in 0..n {
                let k1 = f(&y);
                let mut y2 = y.clone();
                y2.axpy(dt * half, &k1);
                let k2 = f(&y2);
                let mut y3 = y.clone();
                y3.axpy(dt * half, &k2);
                let k3 = f(&y3);
                let mut y4 = y.clone();
                y4.axpy(dt, &k3);
                let k4 = f(&y4);
                y.axpy(dt * sixth, &k1);
                y.axpy(dt * sixth * T::lit(2.0), &k2);
                y.axpy(dt * sixth * T::lit(2.0), &k3);
                y.axpy(dt * sixth, &k4);
            }
            t = tk;
        }
        sample(k, &y)?;
    }
    Ok(())
}
