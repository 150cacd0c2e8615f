//! Driven steady-state photon statistics.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::hilbert::{Mode, SpaceLayout, SystemOps};
use crate::ldos::parabolic_peak;
use crate::master::{build_liouvillian, steady_state, DriveSpec, ModelParams};
use crate::scalar::Real;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(bound = "T: Real")]
pub struct BlockadeResult<T: Real> {
    /// Drive detuning ω_d − ωc.
    pub detuning: T,
    pub g2: T,
    /// Steady-state population of the measured mode (c_L by default).
    pub n_l: T,
}

/// Equal-time `g²(0)` of the measured mode in the driven steady state.
pub fn g2_zero<T: Real>(
    params: &ModelParams<T>,
    drive: &DriveSpec<T>,
    layout: &SpaceLayout,
    measure: Mode,
) -> Result<BlockadeResult<T>> {
    if layout.fock_cutoff() < 4 {
        return Err(Error::InvalidParams(format!(
            "photon statistics need a fock cutoff >= 4, got {}",
            layout.fock_cutoff()
        )));
    }
    if drive.amplitude > T::lit(0.1) * params.kappa {
        log::warn!(
            "drive amplitude {} exceeds 0.1 kappa; weak-drive assumptions may fail",
            drive.amplitude.to_f64()
        );
    }
    let l = build_liouvillian(params, layout, Some(drive))?;
    let rho = steady_state(&l)?;
    let ops = SystemOps::<T>::new(layout)?;
    let c = ops.mode(measure);
    let cd = c.adjoint();
    let n = rho.expect(&(&cd * c)).re;
    if !(n >= T::lit(1e-12)) {
        return Err(Error::StatisticsUndefined(n.to_f64()));
    }
    let n2 = rho.expect(&(&cd * &cd * c * c)).re.max(T::zero());
    Ok(BlockadeResult {
        detuning: drive.omega_drive - params.omega_c,
        g2: n2 / (n * n),
        n_l: n,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(bound = "T: Real")]
pub struct G2Minimum<T: Real> {
    pub detuning: T,
    pub g2: T,
}

#[derive(Debug, Clone)]
pub struct G2Sweep<T: Real> {
    /// One entry per requested detuning, in input order.
    pub points: Vec<(T, Result<BlockadeResult<T>>)>,
    /// Smallest g², refined by a parabola through neighbouring samples.
    pub minimum: Option<G2Minimum<T>>,
}

impl<T: Real> G2Sweep<T> {
    pub fn ok(&self) -> impl Iterator<Item = &BlockadeResult<T>> {
        self.points.iter().filter_map(|(_, r)| r.as_ref().ok())
    }

    pub fn max_population(&self) -> Option<T> {
        self.ok().map(|r| r.n_l).reduce(|a, b| a.max(b))
    }

    /// max g² / min g² over the successful points.
    pub fn flatness(&self) -> Option<T> {
        let hi = self.ok().map(|r| r.g2).reduce(|a, b| a.max(b))?;
        let lo = self.ok().map(|r| r.g2).reduce(|a, b| a.min(b))?;
        Some(hi / lo)
    }
}

/// `g²(0)` across drive detunings ω_d − ωc; failed points are kept and the
/// sweep continues.
pub fn g2_sweep<T: Real>(
    params: &ModelParams<T>,
    drive: &DriveSpec<T>,
    layout: &SpaceLayout,
    measure: Mode,
    detunings: &[T],
) -> G2Sweep<T> {
    let points: Vec<(T, Result<BlockadeResult<T>>)> = detunings
        .par_iter()
        .map(|&d| {
            let dr = DriveSpec {
                omega_drive: params.omega_c + d,
                ..*drive
            };
            (d, g2_zero(params, &dr, layout, measure))
        })
        .collect();
    let minimum = locate_minimum(&points);
    G2Sweep { points, minimum }
}

fn locate_minimum<T: Real>(points: &[(T, Result<BlockadeResult<T>>)]) -> Option<G2Minimum<T>> {
    let g2 = |k: usize| points[k].1.as_ref().ok().map(|r| r.g2);
    let k = (0..points.len())
        .filter(|&k| g2(k).is_some())
        .min_by(|&a, &b| g2(a).partial_cmp(&g2(b)).unwrap_or(std::cmp::Ordering::Equal))?;
    let at = G2Minimum {
        detuning: points[k].0,
        g2: g2(k)?,
    };
    if k == 0 || k + 1 == points.len() {
        return Some(at);
    }
    match (g2(k - 1), g2(k + 1)) {
        (Some(a), Some(b)) => {
            let pk = parabolic_peak(points[k - 1].0, points[k].0, points[k + 1].0, -a, -at.g2, -b);
            Some(G2Minimum {
                detuning: pk.omega,
                g2: -pk.value,
            })
        }
        _ => Some(at),
    }
}

/// Strong-coupling threshold of the reference cavity, `√(κ² + γ²)/4`.
pub fn critical_coupling<T: Real>(kappa: T, gamma: T) -> T {
    (kappa * kappa + gamma * gamma).sqrt() / T::lit(4.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn layout(n: usize) -> SpaceLayout {
        SpaceLayout::new(1, n).unwrap()
    }

    fn drive(omega: f64) -> DriveSpec<f64> {
        DriveSpec::new(0.0, omega)
    }

    #[test]
    fn coherent_state_without_emitter() {
        let p = ModelParams::ep(0.0, 20.0, 1.0, 0.7);
        let r = g2_zero(&p, &drive(0.2), &layout(4), Mode::R).unwrap();
        assert!((r.g2 - 1.0).abs() < 1e-6, "{}", r.g2);
        assert!(matches!(
            g2_zero(&p, &drive(0.2), &layout(4), Mode::L),
            Err(Error::StatisticsUndefined(_))
        ));
    }

    #[test]
    fn cutoff_must_allow_two_photons() {
        let p = ModelParams::ep(5.0, 20.0, 1.0, 0.0);
        assert!(matches!(
            g2_zero(&p, &drive(0.2), &layout(3), Mode::L),
            Err(Error::InvalidParams(_))
        ));
    }

    #[test]
    fn weak_drive_linearity() {
        let p = ModelParams::ep(5.0, 20.0, 1.0, 0.0);
        for d in [-4.0, 0.0, 3.0] {
            let a = g2_zero(&p, &DriveSpec::new(d, 0.05), &layout(4), Mode::L).unwrap();
            let b = g2_zero(&p, &DriveSpec::new(d, 0.025), &layout(4), Mode::L).unwrap();
            assert!((a.g2 / b.g2 - 1.0f64).abs() < 0.05, "g2 {} vs {}", a.g2, b.g2);
            assert!((b.n_l / a.n_l - 0.25f64).abs() < 0.0125, "n ratio {}", b.n_l / a.n_l);
        }
    }

    #[test]
    fn cutoff_robustness() {
        let p = ModelParams::ep(5.0, 20.0, 1.0, 0.0);
        for d in [-5.0, 0.0] {
            let a = g2_zero(&p, &DriveSpec::new(d, 0.2), &layout(4), Mode::L).unwrap();
            let b = g2_zero(&p, &DriveSpec::new(d, 0.2), &layout(5), Mode::L).unwrap();
            assert!((a.g2 / b.g2 - 1.0f64).abs() < 1e-3);
        }
    }

    #[test]
    fn zero_phase_sweep_is_symmetric() {
        let p = ModelParams::ep(5.0, 20.0, 1.0, 0.0);
        let det = [-12.0, -6.0, -2.0, 2.0, 6.0, 12.0];
        let s = g2_sweep(&p, &drive(0.2), &layout(4), Mode::L, &det);
        let v: Vec<_> = s.ok().cloned().collect();
        assert_eq!(v.len(), 6);
        for k in 0..3 {
            assert!((v[k].g2 / v[5 - k].g2 - 1.0).abs() < 1e-8);
            assert!((v[k].n_l / v[5 - k].n_l - 1.0).abs() < 1e-8);
        }
    }

    #[test]
    fn sweep_keeps_failed_points() {
        let p = ModelParams::ep(0.0, 20.0, 1.0, 0.0);
        let s = g2_sweep(&p, &drive(0.2), &layout(4), Mode::L, &[-1.0, 1.0]);
        assert_eq!(s.points.len(), 2);
        assert!(s.points.iter().all(|(_, r)| r.is_err()));
        assert!(s.minimum.is_none());
    }

    #[test]
    fn parabolic_minimum_refinement() {
        let mk = |d: f64| {
            (
                d,
                Ok(BlockadeResult {
                    detuning: d,
                    g2: 0.1 + (d - 0.3) * (d - 0.3),
                    n_l: 1.0,
                }),
            )
        };
        let pts: Vec<_> = [-1.0, 0.0, 1.0, 2.0].into_iter().map(mk).collect();
        let m = locate_minimum(&pts).unwrap();
        assert!((m.detuning - 0.3).abs() < 1e-12 && (m.g2 - 0.1).abs() < 1e-12);
    }

    #[test]
    fn critical_coupling_values() {
        assert!((critical_coupling(20.0f64, 1.0) - 5.006).abs() < 1e-3);
        assert_eq!(critical_coupling(20.0, 0.0), 5.0);
        assert_eq!(critical_coupling(0.0f64, 0.0), 0.0);
    }

    #[test]
    fn ep_sweeps_against_dp_baseline() {
        let det: Vec<f64> = (0..21).map(|k| -20.0 + 2.0 * k as f64).collect();
        let sweep = |p: &ModelParams<f64>| g2_sweep(p, &drive(0.2), &layout(4), Mode::L, &det);
        let dp = sweep(&ModelParams::dp(5.0, 20.0, 1.0));
        let ep0 = sweep(&ModelParams::ep(5.0, 20.0, 1.0, 0.0));
        let ep4 = sweep(&ModelParams::ep(5.0, 20.0, 1.0, std::f64::consts::FRAC_PI_4));
        let dp_min = dp.minimum.unwrap().g2;
        assert!((dp_min - 0.1).abs() < 0.02, "{dp_min}");
        assert!(ep0.minimum.unwrap().g2 < 0.01);
        assert!(dp.flatness().unwrap() < ep0.flatness().unwrap());
        // Δφ = π/4: purity and population both gain close to an order of magnitude.
        let purity = dp_min / ep4.minimum.unwrap().g2;
        let population = ep4.max_population().unwrap() / dp.max_population().unwrap();
        assert!(purity > 5.0 && population > 5.0, "{purity} {population}");
        assert!(dp
            .ok()
            .chain(ep0.ok())
            .chain(ep4.ok())
            .all(|r| r.g2 >= 0.0 && r.n_l >= 0.0));
    }
}
