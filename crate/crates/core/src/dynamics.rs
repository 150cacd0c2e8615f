//! Single-excitation amplitude dynamics, population trapping and two-emitter
//! concurrence.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::hilbert::Mode;
use crate::ldos::SpectrumSeries;
use crate::master::ModelParams;
use crate::rk4::{self, Rk4State};
use crate::scalar::{cis, i_unit, re, Real, C};
use crate::spectra::coupling_matrix;

/// Amplitudes `(⟨c_L⟩, ⟨c_R⟩, ⟨σ⁻⁽¹⁾⟩, …, ⟨σ⁻⁽ⁿ⁾⟩)`.
#[derive(Debug, Clone, PartialEq)]
pub struct AmplitudeState<T: Real> {
    amps: DVector<C<T>>,
}

impl<T: Real> AmplitudeState<T> {
    pub fn new(amps: Vec<C<T>>) -> Result<Self> {
        if amps.len() < 2 {
            return Err(Error::InvalidState("amplitude vector needs both cavity modes".into()));
        }
        Ok(Self {
            amps: DVector::from_vec(amps),
        })
    }

    pub fn emitter_excited(n_qubits: usize, i: usize) -> Result<Self> {
        if i >= n_qubits {
            return Err(Error::InvalidState(format!("no emitter {i}")));
        }
        let mut v = vec![re(T::zero()); n_qubits + 2];
        v[i + 2] = re(T::one());
        Self::new(v)
    }

    pub fn photon(n_qubits: usize, mode: Mode) -> Result<Self> {
        let mut v = vec![re(T::zero()); n_qubits + 2];
        v[if mode == Mode::L { 0 } else { 1 }] = re(T::one());
        Self::new(v)
    }

    pub fn n_qubits(&self) -> usize {
        self.amps.len() - 2
    }

    pub fn amplitudes(&self) -> &DVector<C<T>> {
        &self.amps
    }

    pub fn norm_sqr(&self) -> T {
        self.amps.iter().fold(T::zero(), |a, z| a + z.norm_sqr())
    }
}

/// Amplitudes at each sample plus the population that left through each channel.
#[derive(Debug, Clone)]
pub struct Trajectory<T: Real> {
    pub t: Vec<T>,
    pub amplitudes: Vec<DVector<C<T>>>,
    pub leaked_kappa: Vec<T>,
    pub leaked_gamma: Vec<T>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(bound = "T: Real")]
pub struct PopulationSeries<T: Real> {
    pub t: Vec<T>,
    /// `populations[i][k] = |pᵢ(t_k)|²` in amplitude order.
    pub populations: Vec<Vec<T>>,
    /// Population lost into the waveguide, P_κ.
    pub leaked_kappa: Vec<T>,
    /// Population lost to free space.
    pub leaked_gamma: Vec<T>,
}

impl<T: Real> PopulationSeries<T> {
    pub fn emitter(&self, i: usize) -> &[T] {
        &self.populations[i + 2]
    }

    pub fn mode(&self, m: Mode) -> &[T] {
        &self.populations[if m == Mode::L { 0 } else { 1 }]
    }

    /// `|p_L|² + |p_R|²`.
    pub fn cavity(&self) -> Vec<T> {
        self.populations[0]
            .iter()
            .zip(&self.populations[1])
            .map(|(a, b)| *a + *b)
            .collect()
    }
}

#[derive(Debug, Clone)]
struct AmpState<T: Real> {
    p: DVector<C<T>>,
    leak_k: T,
    leak_g: T,
}

impl<T: Real> Rk4State<T> for AmpState<T> {
    fn axpy(&mut self, a: T, x: &Self) {
        for (s, v) in self.p.iter_mut().zip(x.p.iter()) {
            *s += *v * a;
        }
        self.leak_k += a * x.leak_k;
        self.leak_g += a * x.leak_g;
    }
}

/// `0.005 / max(g, κ, γ, |ω0−ωc|, 1)`.
pub fn default_step<T: Real>(p: &ModelParams<T>) -> T {
    T::lit(0.005) / p.rate_scale()
}

pub fn amplitude_trajectory<T: Real>(
    params: &ModelParams<T>,
    p0: &AmplitudeState<T>,
    t_grid: &[T],
) -> Result<Trajectory<T>> {
    amplitude_trajectory_with_step(params, p0, t_grid, default_step(params))
}

/// RK4 integration of `ṗ = −i(M − ωc)p` with the κ and γ loss channels
/// accumulated alongside.
pub fn amplitude_trajectory_with_step<T: Real>(
    params: &ModelParams<T>,
    p0: &AmplitudeState<T>,
    t_grid: &[T],
    step: T,
) -> Result<Trajectory<T>> {
    params.validate()?;
    if p0.n_qubits() != params.n_qubits() {
        return Err(Error::InvalidState(format!(
            "state has {} emitter amplitude(s), parameters describe {}",
            p0.n_qubits(),
            params.n_qubits()
        )));
    }
    let n = p0.amps.len();
    let gen: DMatrix<C<T>> =
        (coupling_matrix(params) - DMatrix::identity(n, n) * re(params.omega_c)) * (-i_unit::<T>());
    let (kappa, gamma) = (params.kappa, params.gamma);
    let cross = cis(-params.phi_prop) * (params.kappa * params.r_abs * T::lit(2.0));
    let deriv = |s: &AmpState<T>| {
        let p = &s.p;
        let leak_k = kappa * (p[0].norm_sqr() + p[1].norm_sqr()) + (cross * p[0].conj() * p[1]).re;
        let leak_g = gamma * p.iter().skip(2).fold(T::zero(), |a, z| a + z.norm_sqr());
        AmpState {
            p: &gen * p,
            leak_k,
            leak_g,
        }
    };
    let n0 = p0.norm_sqr();
    let mut out = Trajectory {
        t: t_grid.to_vec(),
        amplitudes: Vec::with_capacity(t_grid.len()),
        leaked_kappa: Vec::with_capacity(t_grid.len()),
        leaked_gamma: Vec::with_capacity(t_grid.len()),
    };
    let start = AmpState {
        p: p0.amps.clone(),
        leak_k: T::zero(),
        leak_g: T::zero(),
    };
    rk4::integrate(start, t_grid, step, deriv, |_, s| {
        let norm = s.p.iter().fold(T::zero(), |a, z| a + z.norm_sqr());
        let drift = (norm + s.leak_k + s.leak_g - n0).mag() / n0.max(T::min_value().unwrap());
        if drift > T::tol(1e-8) || !drift.is_finite() {
            return Err(Error::Accuracy {
                drift: drift.to_f64(),
                suggested_step: step.to_f64() / 2.0,
            });
        }
        out.amplitudes.push(s.p.clone());
        // Without free-space loss the waveguide takes everything that left.
        out.leaked_kappa
            .push(if gamma == T::zero() { n0 - norm } else { s.leak_k });
        out.leaked_gamma.push(s.leak_g);
        Ok(())
    })?;
    Ok(out)
}

pub fn amplitude_evolve<T: Real>(
    params: &ModelParams<T>,
    p0: &AmplitudeState<T>,
    t_grid: &[T],
) -> Result<PopulationSeries<T>> {
    Ok(populations(amplitude_trajectory(params, p0, t_grid)?))
}

pub fn populations<T: Real>(tr: Trajectory<T>) -> PopulationSeries<T> {
    let n = tr.amplitudes.first().map_or(0, |a| a.len());
    let populations = (0..n)
        .map(|i| tr.amplitudes.iter().map(|a| a[i].norm_sqr()).collect())
        .collect();
    PopulationSeries {
        t: tr.t,
        populations,
        leaked_kappa: tr.leaked_kappa,
        leaked_gamma: tr.leaked_gamma,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(bound = "T: Real")]
pub struct SteadyPopulations<T: Real> {
    pub p_e: T,
    pub p_c: T,
    pub p_kappa: T,
}

/// Closed-form plateau for Δφ = 0, γ = 0 at resonance.
pub fn steady_populations_analytic<T: Real>(g: T, kappa: T) -> Result<SteadyPopulations<T>> {
    if !(g >= T::zero()) || !(kappa > T::zero()) {
        return Err(Error::InvalidParams("need g >= 0 and kappa > 0".into()));
    }
    let k2 = kappa * kappa;
    let g8 = T::lit(8.0) * g * g;
    let den = g8 + k2;
    Ok(SteadyPopulations {
        p_e: k2 * k2 / (den * den),
        p_c: g8 * k2 / (den * den),
        p_kappa: g8 / den,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(bound = "T: Real")]
pub struct TrappedPopulation<T: Real> {
    pub t_final: T,
    /// Window means in amplitude order.
    pub populations: Vec<T>,
    pub leaked_kappa: T,
    /// Largest per-component variance over the window.
    pub variance: T,
    /// False when the window variance exceeds 1e-4.
    pub settled: bool,
}

impl<T: Real> TrappedPopulation<T> {
    pub fn emitter(&self) -> T {
        self.populations[2..].iter().fold(T::zero(), |a, &b| a + b)
    }

    pub fn cavity(&self) -> T {
        self.populations[0] + self.populations[1]
    }
}

/// Long-time populations for an initially excited first emitter, averaged over
/// the last 10% of `[0, t_final]` (default `50/min(g, κ)`).
pub fn trapped_population<T: Real>(params: &ModelParams<T>, t_final: Option<T>) -> Result<TrappedPopulation<T>> {
    if params.gamma != T::zero() {
        return Err(Error::InvalidParams("trapping analysis requires gamma = 0".into()));
    }
    let t_final = match t_final {
        Some(t) => t,
        None => {
            let m = params.g.min(params.kappa);
            if !(m > T::zero()) {
                return Err(Error::InvalidParams("default horizon needs g, kappa > 0".into()));
            }
            T::lit(50.0) / m
        }
    };
    let n = 2001;
    let grid: Vec<T> = (0..n).map(|k| t_final * T::lit(k as f64 / (n - 1) as f64)).collect();
    let p0 = AmplitudeState::emitter_excited(params.n_qubits(), 0)?;
    let series = amplitude_evolve(params, &p0, &grid)?;
    let from = n - n / 10;
    let len = T::lit((n - from) as f64);
    let mean = |v: &[T]| v[from..].iter().fold(T::zero(), |a, &b| a + b) / len;
    let mut variance = T::zero();
    let populations = series
        .populations
        .iter()
        .map(|v| {
            let m = mean(v);
            let var = v[from..].iter().fold(T::zero(), |a, &b| a + (b - m) * (b - m)) / len;
            variance = variance.max(var);
            m
        })
        .collect();
    Ok(TrappedPopulation {
        t_final,
        populations,
        leaked_kappa: mean(&series.leaked_kappa),
        variance,
        settled: variance <= T::lit(1e-4),
    })
}

/// `C(t) = 2|c_e1 c_e2*|` with emitter 1 initially excited.
pub fn concurrence_series<T: Real>(params: &ModelParams<T>, t_grid: &[T]) -> Result<Vec<T>> {
    if params.n_qubits() != 2 {
        return Err(Error::InvalidParams(format!(
            "concurrence needs exactly two emitters, got {}",
            params.n_qubits()
        )));
    }
    let p0 = AmplitudeState::emitter_excited(2, 0)?;
    let tr = amplitude_trajectory(params, &p0, t_grid)?;
    Ok(tr
        .amplitudes
        .iter()
        .map(|a| T::lit(2.0) * crate::scalar::cabs(a[2] * a[3].conj()))
        .collect())
}

/// Maximum concurrence as the second emitter's azimuthal phase is offset
/// from the first.
pub fn concurrence_phase_sweep<T: Real>(params: &ModelParams<T>, offsets: &[T], t_grid: &[T]) -> Result<Vec<(T, T)>> {
    offsets
        .par_iter()
        .map(|&d| {
            let mut p = params.clone();
            if p.n_qubits() != 2 {
                return Err(Error::InvalidParams("phase sweep needs two emitters".into()));
            }
            p.emitters[1].phi_azim = p.emitters[0].phi_azim + d;
            let c = concurrence_series(&p, t_grid)?;
            Ok((d, c.into_iter().fold(T::zero(), |a, b| a.max(b))))
        })
        .collect()
}

/// Negated least-squares slope of `ln(value)` over samples with `t ∈ [t0, t1]`.
pub fn late_decay_rate<T: Real>(t: &[T], values: &[T], window: (T, T)) -> Result<T> {
    let pts: Vec<(T, T)> = t
        .iter()
        .zip(values)
        .filter(|(x, _)| **x >= window.0 && **x <= window.1)
        .map(|(x, v)| (*x, *v))
        .collect();
    if pts.len() < 2 {
        return Err(Error::InvalidParams("fewer than two samples in window".into()));
    }
    if let Some((_, v)) = pts.iter().find(|(_, v)| !(*v > T::zero())) {
        return Err(Error::RateUndefined(v.to_f64()));
    }
    let n = T::lit(pts.len() as f64);
    let mx = pts.iter().fold(T::zero(), |a, p| a + p.0) / n;
    let my = pts.iter().fold(T::zero(), |a, p| a + p.1.ln()) / n;
    let (mut sxy, mut sxx) = (T::zero(), T::zero());
    for (x, v) in &pts {
        sxy += (*x - mx) * (v.ln() - my);
        sxx += (*x - mx) * (*x - mx);
    }
    Ok(-sxy / sxx)
}

/// `|∫₀^T c_e(t) e^{iωt} dt|²` for the first emitter, initially excited.
pub fn emission_spectrum<T: Real>(params: &ModelParams<T>, omega_grid: &[T], t_max: T) -> Result<SpectrumSeries<T>> {
    let dt = T::lit(0.02) / params.rate_scale();
    let n = (t_max / dt).ceil().to_f64() as usize + 1;
    let dt = t_max / T::lit((n - 1) as f64);
    let grid: Vec<T> = (0..n).map(|k| dt * T::lit(k as f64)).collect();
    let p0 = AmplitudeState::emitter_excited(params.n_qubits(), 0)?;
    let tr = amplitude_trajectory(params, &p0, &grid)?;
    let ce: Vec<C<T>> = tr.amplitudes.iter().map(|a| a[2]).collect();
    let half = T::lit(0.5);
    SpectrumSeries::from_fn(omega_grid, |w| {
        let rot = cis((w - params.omega_c) * dt);
        let mut ph = re(T::one());
        let mut acc = re(T::zero());
        for (k, c) in ce.iter().enumerate() {
            let wgt = if k == 0 || k == n - 1 { half } else { T::one() };
            acc += *c * ph * wgt;
            ph *= rot;
        }
        (acc * dt).norm_sqr()
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectra::{delta_omega_bic, delta_phi_bic, se_spectrum};
    use proptest::prelude::*;
    use std::f64::consts::PI;

    fn grid(a: f64, b: f64, n: usize) -> Vec<f64> {
        (0..n).map(|k| a + (b - a) * k as f64 / (n - 1) as f64).collect()
    }

    fn qe(n: usize) -> AmplitudeState<f64> {
        AmplitudeState::emitter_excited(n, 0).unwrap()
    }

    #[test]
    fn backscattered_mode_population_peak() {
        let p = ModelParams::ep(10.0, 20.0, 1.0, PI);
        let s = amplitude_evolve(&p, &qe(1), &grid(0.0, 1.0, 2001)).unwrap();
        let max_r = s.mode(Mode::R).iter().cloned().fold(0.0, f64::max);
        assert!((max_r - 0.667).abs() < 0.01, "{max_r}");
    }

    #[test]
    fn uncoupled_emitter_decays_freely() {
        let p = ModelParams::ep(0.0, 20.0, 1.0, 0.3);
        let t = grid(0.0, 4.0, 41);
        let tr = amplitude_trajectory(&p, &qe(1), &t).unwrap();
        for (a, tk) in tr.amplitudes.iter().zip(&t) {
            assert!((a[2].norm() - (-tk / 2.0).exp()).abs() < 1e-10);
            assert!((a[2].norm_sqr() - (-tk).exp()).abs() < 1e-10);
        }
    }

    #[test]
    fn closed_form_plateau_values() {
        let s = steady_populations_analytic(20.0f64, 20.0).unwrap();
        assert!((s.p_e - 0.012346).abs() < 1e-6);
        assert!((s.p_c - 0.098765).abs() < 1e-6);
        assert!((s.p_kappa - 0.888889).abs() < 1e-6);
        let z = steady_populations_analytic(0.0, 20.0).unwrap();
        assert_eq!((z.p_e, z.p_c, z.p_kappa), (1.0, 0.0, 0.0));
        assert!(steady_populations_analytic(1.0, 0.0).is_err());
    }

    #[test]
    fn trapping_at_zero_phase() {
        let p = ModelParams::ep(20.0, 20.0, 0.0, 0.0);
        let tp = trapped_population(&p, None).unwrap();
        let s = steady_populations_analytic(20.0f64, 20.0).unwrap();
        assert!(tp.settled);
        assert!((tp.emitter() - s.p_e).abs() < 1e-3);
        assert!((tp.cavity() - s.p_c).abs() < 1e-3);
        assert!((tp.leaked_kappa - s.p_kappa).abs() < 1e-3);
    }

    #[test]
    fn no_trapping_without_backscatter() {
        let p = ModelParams::dp(20.0, 20.0, 0.0);
        let tp = trapped_population(&p, None).unwrap();
        assert!(tp.populations.iter().all(|&v| v < 1e-6), "{:?}", tp.populations);
    }

    #[test]
    fn bic_plateau_is_emitter_dominated() {
        let d = delta_phi_bic(20.0, 20.0).unwrap();
        let p = ModelParams::ep(20.0, 20.0, 0.0, d);
        let tp = trapped_population(&p, None).unwrap();
        assert!(tp.emitter() > tp.populations[0] && tp.emitter() > tp.populations[1]);
        let z = trapped_population(&ModelParams::ep(20.0, 20.0, 0.0, 0.0), None).unwrap();
        assert!(z.emitter() < z.cavity());
    }

    #[test]
    fn bic_detuning_gives_positive_plateau() {
        for dphi in [0.3, PI / 2.0, 2.0] {
            let det = delta_omega_bic(10.0, 20.0, dphi).unwrap();
            let p = ModelParams::ep(10.0, 20.0, 0.0, dphi).with_detuning(det);
            assert!(trapped_population(&p, None).unwrap().emitter() > 1e-3);
            let dp = p.clone().with_r(0.0);
            assert!(trapped_population(&dp, None).unwrap().emitter() < 1e-6);
        }
    }

    #[test]
    fn trapping_requires_lossless_emitter() {
        assert!(trapped_population(&ModelParams::ep(20.0, 20.0, 1.0, 0.0), None).is_err());
    }

    #[test]
    fn concurrence_basics() {
        let p = ModelParams::ep(100.0, 20.0, 1.0, PI).with_qubits(2);
        let c = concurrence_series(&p, &grid(0.0, 1.0, 11)).unwrap();
        assert_eq!(c[0], 0.0);
        assert!(c.iter().all(|&v| (0.0..=1.0).contains(&v)));
        assert!(concurrence_series(&ModelParams::ep(1.0, 1.0, 1.0, 0.0), &[0.0]).is_err());
    }

    #[test]
    fn phase_sweep_returns_each_offset() {
        let p = ModelParams::ep(10.0, 20.0, 1.0, PI).with_qubits(2);
        let out = concurrence_phase_sweep(&p, &[0.0, PI / 2.0], &grid(0.0, 1.0, 101)).unwrap();
        assert_eq!(out.len(), 2);
        let direct = concurrence_series(&p, &grid(0.0, 1.0, 101)).unwrap();
        assert_eq!(out[0].1, direct.iter().cloned().fold(0.0, f64::max));
    }

    #[test]
    fn decay_rate_of_exponential() {
        let t = grid(0.0, 2.0, 21);
        let v: Vec<f64> = t.iter().map(|x| (-3.0 * x).exp()).collect();
        assert!((late_decay_rate(&t, &v, (0.5, 2.0)).unwrap() - 3.0).abs() < 1e-12);
        let mut bad = v.clone();
        bad[15] = 0.0;
        assert!(matches!(
            late_decay_rate(&t, &bad, (0.5, 2.0)),
            Err(Error::RateUndefined(_))
        ));
    }

    #[test]
    fn total_probability_with_both_channels() {
        let p = ModelParams::ep(6.0, 20.0, 2.0, 1.1).with_detuning(3.0);
        let s = amplitude_evolve(&p, &qe(1), &grid(0.0, 3.0, 31)).unwrap();
        for k in 0..s.t.len() {
            let tot: f64 = s.populations.iter().map(|v| v[k]).sum::<f64>() + s.leaked_kappa[k] + s.leaked_gamma[k];
            assert!((tot - 1.0).abs() < 1e-10);
        }
        assert!(s.leaked_gamma.last().unwrap() > &0.0 && s.leaked_kappa.last().unwrap() > &0.0);
    }

    #[test]
    fn weak_coupling_transparency() {
        // C = 8g²/κγ = 0.2 with g = 1, γ = 1.
        let p = ModelParams::ep(1.0, 40.0, 1.0, 0.0);
        let t = grid(0.0, 5.0, 501);
        let s = amplitude_evolve(&p, &qe(1), &t).unwrap();
        let dev = s
            .emitter(0)
            .iter()
            .zip(&t)
            .map(|(v, x)| (v - (-x).exp()).abs())
            .fold(0.0, f64::max);
        assert!(dev < 0.01, "{dev}");
    }

    #[test]
    fn numerical_spectrum_peaks_match() {
        let p = ModelParams::ep(100.0, 20.0, 1.0, PI);
        let w = grid(-400.0, 400.0, 4001);
        let num = emission_spectrum(&p, &w, 40.0).unwrap();
        let ana = se_spectrum(&w, &p).unwrap();
        let (mut a, mut b) = (num.peaks(), ana.peaks());
        a.truncate(2);
        b.truncate(2);
        a.sort_by(|x, y| x.omega.partial_cmp(&y.omega).unwrap());
        b.sort_by(|x, y| x.omega.partial_cmp(&y.omega).unwrap());
        for (x, y) in a.iter().zip(&b) {
            assert!((x.omega - y.omega).abs() <= w[1] - w[0], "{} vs {}", x.omega, y.omega);
        }
    }

    #[test]
    fn rejects_mismatched_state() {
        let p = ModelParams::ep(1.0, 1.0, 1.0, 0.0);
        assert!(amplitude_evolve(&p, &qe(2), &[1.0]).is_err());
        assert!(AmplitudeState::<f64>::emitter_excited(1, 1).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]

        #[test]
        fn closed_forms_sum_to_one(g in 0.0f64..100.0, kappa in 0.01f64..100.0) {
            let s = steady_populations_analytic(g, kappa).unwrap();
            prop_assert!((s.p_e + s.p_c + s.p_kappa - 1.0).abs() < 1e-14);
        }

        #[test]
        fn lossless_bookkeeping(g in 0.0f64..30.0, dphi in 0.0f64..std::f64::consts::TAU, det in -10.0f64..10.0) {
            let p = ModelParams::ep(g, 20.0, 0.0, dphi).with_detuning(det);
            let s = amplitude_evolve(&p, &qe(1), &grid(0.0, 1.0, 11)).unwrap();
            for k in 0..s.t.len() {
                let tot: f64 = s.populations.iter().map(|v| v[k]).sum::<f64>() + s.leaked_kappa[k];
                prop_assert!((tot - 1.0).abs() < 1e-8);
            }
        }

        #[test]
        fn populations_depend_on_delta_phi_only(delta in -3.0f64..3.0, dphi in 0.0f64..std::f64::consts::TAU) {
            let p = ModelParams::ep(8.0, 20.0, 1.0, dphi).with_detuning(2.0);
            let t = grid(0.0, 1.0, 6);
            let a = amplitude_evolve(&p, &qe(1), &t).unwrap();
            let b = amplitude_evolve(&p.clone().with_gauge_shift(delta), &qe(1), &t).unwrap();
            for (x, y) in a.populations.iter().flatten().zip(b.populations.iter().flatten()) {
                prop_assert!((x - y).abs() < 1e-10);
            }
        }
    }
}
