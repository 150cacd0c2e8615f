//! One function per experiment. Each returns the tables it produces for a
//! single, fully resolved parameter point.

use std::fs::File;

use anyhow::{anyhow, Context};
use epqed::blockade::g2_zero;
use epqed::dynamics::{
    amplitude_evolve, amplitude_trajectory_with_step, concurrence_series, populations, trapped_population,
    AmplitudeState,
};
use epqed::ldos::{
    fit_lorentzian, gamma_free, lorentzian, numerical_spectral_density, purcell_factor, spectral_density,
    spectral_density_dp, LdosNumerics, SpectrumSeries,
};
use epqed::master::{build_liouvillian, evolve_with_step, InitialState, Observable};
use epqed::spectra::{coupling_matrix, eigenmodes, lamb_shift, local_coupling, se_spectrum};
use epqed::{Drive, Mode, Params, SpaceLayout};

use crate::config::{Config, Experiment, Initial, Method, Units};

/// Physical dimension of a column, for unit labels and eV conversion.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Dim {
    /// Frequencies and rates.
    Rate,
    Time,
    /// Dimensionless.
    One,
    /// Whatever units the input data carried.
    Input,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub name: String,
    pub columns: Vec<(String, Dim)>,
    pub rows: Vec<Vec<f64>>,
}

impl Table {
    pub fn new(name: &str, columns: &[(&str, Dim)]) -> Self {
        Self {
            name: name.to_string(),
            columns: columns.iter().map(|(n, d)| (n.to_string(), *d)).collect(),
            rows: Vec::new(),
        }
    }

    pub fn has_column(&self, name: &str) -> bool {
        self.columns.iter().any(|(n, _)| n == name)
    }
}

/// Numerical failures, reported with exit status 3.
#[derive(Debug)]
pub struct Numerical(pub anyhow::Error);

impl std::fmt::Display for Numerical {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{:#}", self.0)
    }
}

impl std::error::Error for Numerical {}

impl From<epqed::Error> for Numerical {
    fn from(e: epqed::Error) -> Self {
        Numerical(e.into())
    }
}

pub type RunResult<T> = std::result::Result<T, Numerical>;

pub fn run_point(exp: Experiment, cfg: &Config) -> RunResult<Vec<Table>> {
    let p = cfg.params();
    match exp {
        Experiment::Ldos => ldos(cfg, &p),
        Experiment::Fit => fit(cfg),
        Experiment::Dynamics => dynamics(cfg, &p),
        Experiment::Spectrum => spectrum(cfg, &p),
        Experiment::Eigen => eigen(&p),
        Experiment::Concurrence => concurrence(cfg, &p),
        Experiment::Blockade => blockade(cfg, &p),
        Experiment::Trapping => trapping(cfg, &p),
    }
}

fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    (0..n).map(|k| a + (b - a) * k as f64 / (n - 1) as f64).collect()
}

fn omega_grid(cfg: &Config, center: f64, half: f64) -> Vec<f64> {
    let lo = cfg.omega_min.unwrap_or(center - half);
    let hi = cfg.omega_max.unwrap_or(center + half);
    linspace(lo, hi, cfg.omega_points)
}

fn time_grid(cfg: &Config, default_max: f64) -> Vec<f64> {
    linspace(0.0, cfg.t_max.unwrap_or(default_max), cfg.t_points)
}

fn ldos(cfg: &Config, p: &Params) -> RunResult<Vec<Table>> {
    let w = omega_grid(cfg, p.omega_c, 5.0 * p.kappa);
    let numeric = if cfg.ldos_numerical {
        let layout = SpaceLayout::new(0, 2)?;
        let numerics = LdosNumerics {
            tau_window: cfg.tau_window,
            tau_step: cfg.tau_step,
        };
        Some(numerical_spectral_density(p, &layout, &w, numerics)?)
    } else {
        None
    };
    // The Purcell factor needs a free-space rate to normalise against.
    let purcell = p.gamma > 0.0;
    let mut cols = vec![("omega", Dim::Rate), ("J", Dim::One), ("J_dp", Dim::One)];
    if purcell {
        cols.push(("purcell", Dim::One));
    }
    if numeric.is_some() {
        cols.push(("J_numerical", Dim::One));
    }
    let mut t = Table::new("ldos", &cols);
    for (k, &x) in w.iter().enumerate() {
        let mut row = vec![x, spectral_density(x, p), spectral_density_dp(x, p)];
        if purcell {
            row.push(purcell_factor(x, p)?);
        }
        if let Some(s) = &numeric {
            row.push(s.value()[k]);
        }
        t.rows.push(row);
    }
    Ok(vec![t])
}

fn fit(cfg: &Config) -> RunResult<Vec<Table>> {
    let path = cfg
        .input
        .as_deref()
        .ok_or_else(|| Numerical(anyhow!("fit needs an input CSV (input = path)")))?;
    let file = File::open(path)
        .with_context(|| format!("opening {path}"))
        .map_err(Numerical)?;
    let data = SpectrumSeries::<f64>::from_csv(file)?;
    let f = fit_lorentzian(&data)?;
    let mut summary = Table::new(
        "fit",
        &[
            ("omega_c", Dim::Input),
            ("kappa", Dim::Input),
            ("g", Dim::Input),
            ("rms_residual", Dim::One),
            ("iterations", Dim::One),
            ("converged", Dim::One),
        ],
    );
    summary.rows.push(vec![
        f.omega_c,
        f.kappa,
        f.g,
        f.rms_residual,
        f.iterations as f64,
        if f.converged { 1.0 } else { 0.0 },
    ]);
    let mut curve = Table::new(
        "fit_curve",
        &[("omega", Dim::Input), ("data", Dim::One), ("model", Dim::One)],
    );
    for (&x, &y) in data.omega().iter().zip(data.value()) {
        curve.rows.push(vec![x, y, lorentzian(x, f.omega_c, f.kappa, f.g)]);
    }
    Ok(vec![summary, curve])
}

fn dynamics(cfg: &Config, p: &Params) -> RunResult<Vec<Table>> {
    let t = time_grid(cfg, 10.0);
    let n = p.n_qubits();
    let mut cols: Vec<(String, Dim)> = vec![("t".into(), Dim::Time)];
    cols.extend((0..n).map(|i| (format!("P_e{}", i + 1), Dim::One)));
    cols.push(("P_L".into(), Dim::One));
    cols.push(("P_R".into(), Dim::One));
    let mut table = Table {
        name: "dynamics".into(),
        columns: cols,
        rows: Vec::new(),
    };
    match cfg.method {
        Method::Amplitude => {
            let p0 = match cfg.initial {
                Initial::Emitter => AmplitudeState::emitter_excited(n, 0)?,
                Initial::Left => AmplitudeState::photon(n, Mode::L)?,
                Initial::Right => AmplitudeState::photon(n, Mode::R)?,
            };
            let series = match cfg.step {
                Some(h) => populations(amplitude_trajectory_with_step(p, &p0, &t, h)?),
                None => amplitude_evolve(p, &p0, &t)?,
            };
            table.columns.push(("leaked_kappa".into(), Dim::One));
            table.columns.push(("leaked_gamma".into(), Dim::One));
            for (k, &tk) in t.iter().enumerate() {
                let mut row = vec![tk];
                row.extend((0..n).map(|i| series.emitter(i)[k]));
                row.push(series.mode(Mode::L)[k]);
                row.push(series.mode(Mode::R)[k]);
                row.push(series.leaked_kappa[k]);
                row.push(series.leaked_gamma[k]);
                table.rows.push(row);
            }
        }
        Method::Master => {
            let layout = SpaceLayout::new(n, cfg.cutoff)?;
            let l = build_liouvillian(p, &layout, None)?;
            let init = match cfg.initial {
                Initial::Emitter => InitialState::QubitExcited(0),
                Initial::Left => InitialState::Photon(Mode::L),
                Initial::Right => InitialState::Photon(Mode::R),
            };
            let rho0 = init.density(&layout)?;
            let states = evolve_with_step(&l, &rho0, &t, cfg.step.unwrap_or(l.default_step()))?;
            let mut obs: Vec<Observable> = (0..n).map(Observable::QubitPopulation).collect();
            obs.push(Observable::ModePopulation(Mode::L));
            obs.push(Observable::ModePopulation(Mode::R));
            let ops = obs
                .iter()
                .map(|o| o.operator(&layout))
                .collect::<epqed::Result<Vec<_>>>()?;
            for (tk, rho) in t.iter().zip(&states) {
                let mut row = vec![*tk];
                row.extend(ops.iter().map(|op| rho.expect(op).re));
                table.rows.push(row);
            }
        }
    }
    Ok(vec![table])
}

fn spectrum(cfg: &Config, p: &Params) -> RunResult<Vec<Table>> {
    let center = p.emitters.first().map_or(p.omega_c, |e| e.omega0);
    let half = (4.0 * p.g).max(4.0 * p.kappa).max(1.0);
    let w = omega_grid(cfg, center, half);
    let s = se_spectrum(&w, p)?;
    let mut t = Table::new(
        "spectrum",
        &[
            ("omega", Dim::Rate),
            ("S", Dim::One),
            ("lamb_shift", Dim::Rate),
            ("local_coupling", Dim::Rate),
        ],
    );
    for (&x, &v) in w.iter().zip(s.value()) {
        t.rows.push(vec![x, v, lamb_shift(x, p), local_coupling(x, p)]);
    }
    Ok(vec![t])
}

fn eigen(p: &Params) -> RunResult<Vec<Table>> {
    let modes = eigenmodes(&coupling_matrix(p), None)?;
    let mut t = Table::new(
        "eigen",
        &[
            ("label", Dim::One),
            ("re", Dim::Rate),
            ("minus_im", Dim::Rate),
            ("cavity_weight", Dim::One),
            ("emitter_weight", Dim::One),
            ("degenerate", Dim::One),
        ],
    );
    for m in &modes {
        t.rows.push(vec![
            m.label as f64,
            m.value.re,
            -m.value.im,
            m.cavity_weight(),
            m.emitter_weight(),
            if m.degenerate { 1.0 } else { 0.0 },
        ]);
    }
    Ok(vec![t])
}

fn concurrence(cfg: &Config, p: &Params) -> RunResult<Vec<Table>> {
    let t = time_grid(cfg, 10.0);
    let c = concurrence_series(p, &t)?;
    let mut table = Table::new("concurrence", &[("t", Dim::Time), ("C", Dim::One)]);
    table.rows = t.iter().zip(&c).map(|(a, b)| vec![*a, *b]).collect();
    Ok(vec![table])
}

fn blockade(cfg: &Config, p: &Params) -> RunResult<Vec<Table>> {
    let layout = SpaceLayout::new(p.n_qubits(), cfg.cutoff)?;
    let drive = Drive {
        omega_drive: p.omega_c + cfg.detuning,
        amplitude: cfg.drive_amplitude,
        target: cfg.drive_target,
    };
    let r = g2_zero(p, &drive, &layout, cfg.measure)?;
    let mut t = Table::new(
        "blockade",
        &[("detuning", Dim::Rate), ("g2", Dim::One), ("n_L", Dim::One)],
    );
    t.rows.push(vec![r.detuning, r.g2, r.n_l]);
    Ok(vec![t])
}

fn trapping(cfg: &Config, p: &Params) -> RunResult<Vec<Table>> {
    let tr = trapped_population(p, cfg.t_max)?;
    let mut t = Table::new(
        "trapping",
        &[
            ("t_final", Dim::Time),
            ("P_e", Dim::One),
            ("P_c", Dim::One),
            ("P_kappa", Dim::One),
            ("variance", Dim::One),
            ("settled", Dim::One),
        ],
    );
    t.rows.push(vec![
        tr.t_final,
        tr.emitter(),
        tr.cavity(),
        tr.leaked_kappa,
        tr.variance,
        if tr.settled { 1.0 } else { 0.0 },
    ]);
    Ok(vec![t])
}

/// Unit label and scale for each column dimension.
pub struct UnitSystem {
    rate: (String, f64),
    time: (String, f64),
}

impl UnitSystem {
    pub fn from_config(cfg: &Config) -> RunResult<Self> {
        Ok(match cfg.units {
            Units::Gamma0 => Self {
                rate: ("gamma0".into(), 1.0),
                time: ("1/gamma0".into(), 1.0),
            },
            Units::Ev => {
                let r = gamma_free(cfg.mu_debye, cfg.omega0_ev, cfg.n_b)?;
                Self {
                    rate: ("ueV".into(), r.energy_ev * 1e6),
                    time: ("ps".into(), 1e12 / r.per_second),
                }
            }
        })
    }

    pub fn label(&self, d: Dim) -> &str {
        match d {
            Dim::Rate => &self.rate.0,
            Dim::Time => &self.time.0,
            Dim::One => "1",
            Dim::Input => "input",
        }
    }

    pub fn scale(&self, d: Dim) -> f64 {
        match d {
            Dim::Rate => self.rate.1,
            Dim::Time => self.time.1,
            Dim::One | Dim::Input => 1.0,
        }
    }
}
