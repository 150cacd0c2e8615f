//! Spectral density of the chiral cavity, Purcell quantities, a correlator
//! based numerical check of J(ω), and Lorentzian parameter extraction.

use std::io::Read;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hilbert::{SpaceLayout, SystemOps};
use crate::master::{build_liouvillian, two_time_correlation_with_step, DensityMatrix, ModelParams};
use crate::scalar::{c, cis, re, Real, C};

/// `(2/π) / (Δ + iκ/2)`.
pub fn chi_dp<T: Real>(omega: T, p: &ModelParams<T>) -> C<T> {
    let z = c(omega - p.omega_c, p.kappa * T::lit(0.5));
    re(T::lit(2.0) / T::pi()) / z
}

/// `(1/π) (−iκ|r|e^{iΔφ}) / (Δ + iκ/2)²`.
pub fn chi_ep<T: Real>(omega: T, p: &ModelParams<T>) -> C<T> {
    let z = c(omega - p.omega_c, p.kappa * T::lit(0.5));
    let num = c(T::zero(), -p.kappa * p.r_abs) * cis(p.delta_phi());
    num / (z * z) * re(T::one() / T::pi())
}

/// `J(ω) = −g² Im[χ_DP + χ_EP]`.
pub fn spectral_density<T: Real>(omega: T, p: &ModelParams<T>) -> T {
    -p.g * p.g * (chi_dp(omega, p) + chi_ep(omega, p)).im
}

pub fn spectral_density_dp<T: Real>(omega: T, p: &ModelParams<T>) -> T {
    -p.g * p.g * chi_dp(omega, p).im
}

/// `F_P = J/J0 + 1` with `J0 = γ/2π`.
pub fn purcell_factor<T: Real>(omega: T, p: &ModelParams<T>) -> Result<T> {
    if !(p.gamma > T::zero()) {
        return Err(Error::UndefinedPurcell);
    }
    Ok(spectral_density(omega, p) * T::two_pi() / p.gamma + T::one())
}

/// `Δω_m = −(κ/2) tan(Δφ/2)`, the zero of J for |r| = 1.
pub fn transparency_detuning<T: Real>(delta_phi: T, kappa: T) -> Result<T> {
    let half = delta_phi * T::lit(0.5);
    if half.cos().mag() < T::tol(1e-12) {
        return Err(Error::Divergence("transparency detuning"));
    }
    Ok(-kappa * T::lit(0.5) * half.tan())
}

/// `η = J(ωc)/J_DP(ωc)` at the given phase and reflectivity.
pub fn enhancement_eta<T: Real>(delta_phi: T, r_abs: T, params: &ModelParams<T>) -> T {
    let p = params.clone().with_g(T::one()).with_r(r_abs).with_delta_phi(delta_phi);
    let w = p.omega_c;
    -chi_ep(w, &p).im / -chi_dp(w, &p).im + T::one()
}

pub mod si {
    pub const HBAR: f64 = 1.054_571_817e-34;
    pub const EPS0: f64 = 8.854_187_812_8e-12;
    pub const C: f64 = 299_792_458.0;
    pub const E_CHARGE: f64 = 1.602_176_634e-19;
    pub const DEBYE: f64 = 3.335_640_952e-30;
    /// ħ in eV·s.
    pub const HBAR_EV: f64 = HBAR / E_CHARGE;
}

/// Free-space emission rate of a dipole.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FreeSpaceRate {
    pub per_second: f64,
    /// ħγ in eV.
    pub energy_ev: f64,
}

impl FreeSpaceRate {
    /// The rate measured in units of a reference energy (eV).
    pub fn in_units_of(&self, reference_ev: f64) -> f64 {
        self.energy_ev / reference_ev
    }
}

/// `γ = μ²ω0³n_b / (3πħε0c³)` with μ in Debye and ħω0 in eV.
pub fn gamma_free(mu_debye: f64, omega0_ev: f64, n_b: f64) -> Result<FreeSpaceRate> {
    if !(mu_debye >= 0.0 && omega0_ev >= 0.0 && n_b >= 0.0) {
        return Err(Error::InvalidParams("gamma_free inputs must be nonnegative".into()));
    }
    let mu = mu_debye * si::DEBYE;
    let w = omega0_ev / si::HBAR_EV;
    let rate = mu * mu * w.powi(3) * n_b / (3.0 * std::f64::consts::PI * si::HBAR * si::EPS0 * si::C.powi(3));
    Ok(FreeSpaceRate {
        per_second: rate,
        energy_ev: rate * si::HBAR_EV,
    })
}

/// Propagation delay `L/v_g` in units of the fastest system time scale.
/// `rate_unit` converts the dimensionless rates of `params` to s⁻¹.
pub fn delay_ratio<T: Real>(length: f64, v_g: f64, params: &ModelParams<T>, rate_unit: f64) -> f64 {
    let fastest = [params.g, params.kappa, params.gamma]
        .iter()
        .map(|r| r.to_f64() * rate_unit)
        .fold(0.0, f64::max);
    length / v_g * fastest
}

/// True when retardation is negligible, `L/v_g ≤ 0.01·min(1/g, 1/κ, 1/γ)`.
pub fn delay_check<T: Real>(length: f64, v_g: f64, params: &ModelParams<T>, rate_unit: f64) -> bool {
    delay_ratio(length, v_g, params, rate_unit) <= 0.01
}

/// Converts an energy in eV to an angular frequency in s⁻¹.
pub fn ev_to_rate(ev: f64) -> f64 {
    ev / si::HBAR_EV
}

/// Sampled real curve on an ascending frequency grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct SpectrumSeries<T: Real> {
    omega: Vec<T>,
    value: Vec<T>,
}

impl<T: Real> SpectrumSeries<T> {
    pub fn new(omega: Vec<T>, value: Vec<T>) -> Result<Self> {
        if omega.len() != value.len() {
            return Err(Error::Input(format!(
                "{} frequencies but {} values",
                omega.len(),
                value.len()
            )));
        }
        if omega.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::Input("frequencies must be strictly ascending".into()));
        }
        Ok(Self { omega, value })
    }

    /// Samples `f` on `grid`.
    pub fn from_fn(grid: &[T], f: impl Fn(T) -> T + Sync) -> Result<Self> {
        let value = grid.par_iter().map(|&w| f(w)).collect();
        Self::new(grid.to_vec(), value)
    }

    /// Two-column CSV `(ω, value)`; a non-numeric first line is taken as a header.
    pub fn from_csv<R: Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(false)
            .trim(csv::Trim::All)
            .comment(Some(b'#'))
            .from_reader(reader);
        let (mut omega, mut value) = (vec![], vec![]);
        for (line, rec) in rdr.records().enumerate() {
            let rec = rec.map_err(|e| Error::Input(e.to_string()))?;
            if rec.len() < 2 {
                return Err(Error::Input(format!("line {}: expected 2 columns", line + 1)));
            }
            let parsed = (rec[0].parse::<f64>(), rec[1].parse::<f64>());
            match parsed {
                (Ok(w), Ok(v)) => {
                    omega.push(T::lit(w));
                    value.push(T::lit(v));
                }
                _ if line == 0 => continue,
                _ => {
                    return Err(Error::Input(format!(
                        "line {}: cannot parse '{}', '{}'",
                        line + 1,
                        &rec[0],
                        &rec[1]
                    )))
                }
            }
        }
        Self::new(omega, value)
    }

    pub fn omega(&self) -> &[T] {
        &self.omega
    }

    pub fn value(&self) -> &[T] {
        &self.value
    }

    pub fn len(&self) -> usize {
        self.omega.len()
    }

    pub fn is_empty(&self) -> bool {
        self.omega.is_empty()
    }

    /// Trapezoid integral over the grid.
    pub fn integral(&self) -> T {
        self.omega
            .windows(2)
            .zip(self.value.windows(2))
            .fold(T::zero(), |acc, (w, v)| {
                acc + (w[1] - w[0]) * (v[0] + v[1]) * T::lit(0.5)
            })
    }

    /// Index of the largest sample.
    pub fn argmax(&self) -> Option<usize> {
        (0..self.len()).max_by(|&a, &b| {
            self.value[a]
                .partial_cmp(&self.value[b])
                .unwrap_or(std::cmp::Ordering::Equal)
        })
    }

    /// Local maxima refined by a parabola through the three nearest samples,
    /// strongest first.
    pub fn peaks(&self) -> Vec<Peak<T>> {
        let (w, v) = (&self.omega, &self.value);
        let mut out = vec![];
        for k in 1..self.len().saturating_sub(1) {
            if v[k] > v[k - 1] && v[k] >= v[k + 1] {
                out.push(parabolic_peak(w[k - 1], w[k], w[k + 1], v[k - 1], v[k], v[k + 1]));
            }
        }
        out.sort_by(|a, b| b.value.partial_cmp(&a.value).unwrap_or(std::cmp::Ordering::Equal));
        out
    }

    /// Full width at half maximum around sample `k` by linear interpolation.
    pub fn fwhm_at(&self, k: usize) -> Option<T> {
        let (w, v) = (&self.omega, &self.value);
        let half = v[k] * T::lit(0.5);
        let mut lo = None;
        for i in (0..k).rev() {
            if v[i] <= half {
                lo = Some(w[i] + (w[i + 1] - w[i]) * (half - v[i]) / (v[i + 1] - v[i]));
                break;
            }
        }
        let mut hi = None;
        for i in k + 1..self.len() {
            if v[i] <= half {
                hi = Some(w[i - 1] + (w[i] - w[i - 1]) * (v[i - 1] - half) / (v[i - 1] - v[i]));
                break;
            }
        }
        Some(hi? - lo?)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Peak<T> {
    pub omega: T,
    pub value: T,
}

pub(crate) fn parabolic_peak<T: Real>(w0: T, w1: T, w2: T, v0: T, v1: T, v2: T) -> Peak<T> {
    // Newton form p(x) = v0 + d1 (x − w0) + a (x − w0)(x − w1).
    let d1 = (v1 - v0) / (w1 - w0);
    let d2 = (v2 - v1) / (w2 - w1);
    let a = (d2 - d1) / (w2 - w0);
    if a >= T::zero() || !a.is_finite() {
        return Peak { omega: w1, value: v1 };
    }
    let x = ((w0 + w1) * T::lit(0.5) - d1 / (T::lit(2.0) * a)).max(w0).min(w2);
    let value = v0 + d1 * (x - w0) + a * (x - w0) * (x - w1);
    Peak { omega: x, value }
}

/// Numerics for [`numerical_spectral_density`], in units of 1/κ.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LdosNumerics {
    pub tau_window: f64,
    pub tau_step: f64,
}

impl Default for LdosNumerics {
    fn default() -> Self {
        Self {
            tau_window: 48.0,
            tau_step: 0.002,
        }
    }
}

/// J(ω) from the cavity correlators, `J = (g²/π) Re ∫₀^T e^{iΔτ} F(τ) dτ` with
/// `F = C_LL + e^{−2iϕ}C_LR + e^{2iϕ}C_RL + C_RR` and
/// `C_ij(τ) = ⟨c_i†(0) c_j(τ)⟩` for one photon initially in mode i.
pub fn numerical_spectral_density<T: Real>(
    params: &ModelParams<T>,
    layout: &SpaceLayout,
    omega_grid: &[T],
    numerics: LdosNumerics,
) -> Result<SpectrumSeries<T>> {
    if layout.n_qubits() != 0 {
        return Err(Error::Build(
            "numerical spectral density needs a cavity-only layout".into(),
        ));
    }
    if params.n_qubits() > 1 {
        return Err(Error::InvalidParams(
            "correlator weighting is defined for one emitter".into(),
        ));
    }
    if !(params.kappa > T::zero()) {
        return Err(Error::InvalidParams("kappa must be > 0".into()));
    }
    let phi = params.emitters.first().map_or(T::zero(), |e| e.phi_azim);
    let mut cavity = params.clone();
    cavity.emitters.clear();
    let l = build_liouvillian(&cavity, layout, None)?;
    let ops = SystemOps::<T>::new(layout)?;

    let dt = T::lit(numerics.tau_step) / params.kappa;
    let n = (numerics.tau_window / numerics.tau_step).round() as usize;
    let tau: Vec<T> = (0..=n).map(|k| dt * T::lit(k as f64)).collect();
    let step = l.default_step().min(dt);
    let two = T::lit(2.0);
    let weights = [
        (0, 0, re(T::one())),
        (0, 1, cis(-two * phi)),
        (1, 0, cis(two * phi)),
        (1, 1, re(T::one())),
    ];
    let modes = [&ops.c_l, &ops.c_r];
    let mut f = vec![re(T::zero()); tau.len()];
    for (i, j, w) in weights {
        let levels = if i == 0 { [1, 0] } else { [0, 1] };
        let rho = DensityMatrix::product(layout, &levels)?;
        let corr = two_time_correlation_with_step(&l, &rho, &modes[i].adjoint(), modes[j], &tau, step)?;
        for (acc, v) in f.iter_mut().zip(corr) {
            *acc += v * w;
        }
    }
    let tail = crate::scalar::cabs(f[f.len() - 1]);
    if tail > T::lit(1e-8) {
        return Err(Error::Truncation { tail: tail.to_f64() });
    }
    let g2pi = params.g * params.g / T::pi();
    let half = T::lit(0.5);
    let value = omega_grid
        .par_iter()
        .map(|&w| {
            let delta = w - params.omega_c;
            let rot = cis(delta * dt);
            let mut ph = re(T::one());
            let mut acc = re(T::zero());
            for (k, fk) in f.iter().enumerate() {
                let wgt = if k == 0 || k == f.len() - 1 { half } else { T::one() };
                acc += ph * *fk * wgt;
                ph *= rot;
            }
            g2pi * (acc * dt).re
        })
        .collect();
    SpectrumSeries::new(omega_grid.to_vec(), value)
}

/// Result of the Lorentzian fit, in the units of the input frequencies.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub omega_c: f64,
    pub kappa: f64,
    pub g: f64,
    pub rms_residual: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// `J_DP(ω) = (g²κ/π) / ((ω−ωc)² + κ²/4)`.
pub fn lorentzian(omega: f64, omega_c: f64, kappa: f64, g: f64) -> f64 {
    let d = omega - omega_c;
    g * g * kappa / std::f64::consts::PI / (d * d + kappa * kappa / 4.0)
}

/// Least-squares fit of `J_DP` to samples with a single dominant peak.
pub fn fit_lorentzian<T: Real>(samples: &SpectrumSeries<T>) -> Result<FitResult> {
    let w: Vec<f64> = samples.omega().iter().map(|x| x.to_f64()).collect();
    let v: Vec<f64> = samples.value().iter().map(|x| x.to_f64()).collect();
    if w.iter().chain(&v).any(|x| !x.is_finite()) {
        return Err(Error::Fit("non-finite samples".into()));
    }
    let k = samples.argmax().ok_or_else(|| Error::Fit("no samples".into()))?;
    let peak = v[k];
    if !(peak > 0.0) {
        return Err(Error::Fit("no peak above zero".into()));
    }
    let above = v.iter().filter(|&&x| x >= peak / 2.0).count();
    if above < 7 {
        return Err(Error::Fit(format!("only {above} points above half maximum (need 7)")));
    }
    let fwhm = samples
        .fwhm_at(k)
        .map(|x| x.to_f64())
        .filter(|x| *x > 0.0)
        .ok_or_else(|| Error::Fit("peak is not resolved within the window".into()))?;

    // Normalized variables: x = (ω − ω_k)/fwhm, y = J/peak. The model is then
    // y = a·(k/4) / ((x−u)² + k²/4), with a = 4g²/(πκ·peak) and k = κ/fwhm.
    let (w0, s) = (w[k], fwhm);
    let x: Vec<f64> = w.iter().map(|&o| (o - w0) / s).collect();
    let y: Vec<f64> = v.iter().map(|&o| o / peak).collect();
    let model = |p: &[f64; 3], xi: f64| {
        let d = xi - p[0];
        p[1] * p[2] * p[2] / 4.0 / (d * d + p[2] * p[2] / 4.0)
    };
    let sse = |p: &[f64; 3]| {
        x.iter()
            .zip(&y)
            .map(|(&xi, &yi)| (model(p, xi) - yi).powi(2))
            .sum::<f64>()
    };

    let init = [0.0, 1.0, 1.0];
    let mut p = init;
    let mut cost = sse(&p);
    let mut converged = false;
    let mut iterations = 0;
    for it in 0..200 {
        iterations = it + 1;
        let mut jtj = nalgebra::Matrix3::<f64>::zeros();
        let mut jtr = nalgebra::Vector3::<f64>::zeros();
        for (&xi, &yi) in x.iter().zip(&y) {
            let r = model(&p, xi) - yi;
            let mut jrow = [0.0; 3];
            for (q, jq) in jrow.iter_mut().enumerate() {
                let h = 1e-6 * p[q].abs().max(1.0);
                let (mut pp, mut pm) = (p, p);
                pp[q] += h;
                pm[q] -= h;
                *jq = (model(&pp, xi) - model(&pm, xi)) / (2.0 * h);
            }
            for a in 0..3 {
                jtr[a] += jrow[a] * r;
                for b in 0..3 {
                    jtj[(a, b)] += jrow[a] * jrow[b];
                }
            }
        }
        let Some(delta) = jtj.lu().solve(&jtr) else { break };
        // Step halving keeps the iteration monotone far from the optimum.
        let mut lambda = 1.0;
        let mut accepted = None;
        while lambda > 1e-6 {
            let trial = [
                p[0] - lambda * delta[0],
                p[1] - lambda * delta[1],
                p[2] - lambda * delta[2],
            ];
            if trial[1] > 0.0 && trial[2] > 0.0 {
                let c = sse(&trial);
                if c <= cost {
                    accepted = Some((trial, c));
                    break;
                }
            }
            lambda *= 0.5;
        }
        let Some((trial, c)) = accepted else {
            // No descent direction left: stationary to working precision.
            converged = true;
            break;
        };
        let rel = (0..3)
            .map(|q| (trial[q] - p[q]).abs() / p[q].abs().max(1.0))
            .fold(0.0, f64::max);
        p = trial;
        cost = c;
        if rel < 1e-13 {
            converged = true;
            break;
        }
    }
    if !converged {
        log::warn!("lorentzian fit did not converge after {iterations} iterations; returning initial estimate");
        p = init;
        cost = sse(&p);
    }
    let omega_c = w0 + p[0] * s;
    let kappa = p[2] * s;
    let g = (p[1] * peak * std::f64::consts::PI * kappa / 4.0).sqrt();
    let rms_residual = (cost / y.len() as f64).sqrt() * peak;
    Ok(FitResult {
        omega_c,
        kappa,
        g,
        rms_residual,
        iterations,
        converged,
    })
}
