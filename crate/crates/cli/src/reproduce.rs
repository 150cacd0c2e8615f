//! Canned figure pipelines with pass/fail checks against the acceptance
//! thresholds.

use std::f64::consts::PI;
use std::path::Path;

use clap::ValueEnum;
use epqed::blockade::g2_sweep;
use epqed::dynamics::{
    amplitude_evolve, concurrence_series, late_decay_rate, steady_populations_analytic, trapped_population,
    AmplitudeState,
};
use epqed::ldos::enhancement_eta;
use epqed::master::{build_liouvillian, evolve, InitialState, Observable};
use epqed::spectra::{coupling_matrix, delta_phi_bic, eigen_sweep, eigenmodes, min_decay};
use epqed::{Drive, Mode, Params, SpaceLayout};
use serde::Serialize;
use serde_json::json;

use crate::experiments::{Dim, Numerical, RunResult, Table, UnitSystem};
use crate::output::{fmt_num, write_json, write_table};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Figure {
    Fig3a,
    Fig3d,
    Fig4,
    Fig5,
    Fig6,
    Fig7,
    Fig8,
}

#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub requirement: String,
    pub pass: bool,
}

fn check(name: &str, value: f64, requirement: &str, pass: bool) -> Check {
    Check {
        name: name.into(),
        value,
        requirement: requirement.into(),
        pass,
    }
}

fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    (0..n).map(|k| a + (b - a) * k as f64 / (n - 1) as f64).collect()
}

fn max(v: &[f64]) -> f64 {
    v.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
}

/// Runs the figure pipeline, writes its data and summary, and reports
/// whether every check passed.
pub fn reproduce(fig: Figure, out: &Path) -> RunResult<bool> {
    let (tables, checks) = match fig {
        Figure::Fig3a => fig3a()?,
        Figure::Fig3d => fig3d(),
        Figure::Fig4 => fig4()?,
        Figure::Fig5 => fig5()?,
        Figure::Fig6 => fig6()?,
        Figure::Fig7 => fig7()?,
        Figure::Fig8 => fig8()?,
    };
    let units = UnitSystem::from_config(&Default::default())?;
    let mut files = Vec::new();
    for t in &tables {
        let path = write_table(out, t, &units).map_err(Numerical)?;
        files.push(path.file_name().unwrap_or_default().to_string_lossy().into_owned());
    }
    let pass = checks.iter().all(|c| c.pass);
    for c in &checks {
        println!(
            "{} {}: {} ({})",
            if c.pass { "PASS" } else { "FAIL" },
            c.name,
            fmt_num(c.value),
            c.requirement
        );
    }
    let summary = json!({
        "figure": fig,
        "epqed_version": env!("CARGO_PKG_VERSION"),
        "checks": checks,
        "outputs": files,
        "pass": pass,
    });
    write_json(&out.join("summary.json"), &summary).map_err(Numerical)?;
    Ok(pass)
}

type Bundle = (Vec<Table>, Vec<Check>);

fn fig3a() -> RunResult<Bundle> {
    let t = linspace(0.0, 5.0, 501);
    let p0 = AmplitudeState::emitter_excited(1, 0)?;
    let ep = amplitude_evolve(&Params::ep(1.0, 40.0, 1.0, 0.0), &p0, &t)?;
    let dp = amplitude_evolve(&Params::dp(1.0, 40.0, 1.0), &p0, &t)?;
    let mut table = Table::new(
        "fig3a",
        &[
            ("t", Dim::Time),
            ("P_e_ep", Dim::One),
            ("P_e_dp", Dim::One),
            ("P_e_free", Dim::One),
        ],
    );
    let mut dev: f64 = 0.0;
    for (k, &tk) in t.iter().enumerate() {
        let free = (-tk).exp();
        dev = dev.max((ep.emitter(0)[k] - free).abs());
        table.rows.push(vec![tk, ep.emitter(0)[k], dp.emitter(0)[k], free]);
    }
    let rate = late_decay_rate(&t, dp.emitter(0), (0.0, 5.0))?;
    Ok((
        vec![table],
        vec![
            check("EP max deviation from free space", dev, "< 0.01", dev < 0.01),
            check("DP fitted decay rate", rate, ">= 1.15 gamma", rate >= 1.15),
        ],
    ))
}

fn fig3d() -> Bundle {
    let p = Params::default();
    let rs = [0.25, 0.5, 0.75, 1.0];
    let mut table = Table::new(
        "fig3d",
        &[
            ("delta_phi", Dim::One),
            ("eta_r0.25", Dim::One),
            ("eta_r0.5", Dim::One),
            ("eta_r0.75", Dim::One),
            ("eta_r1", Dim::One),
        ],
    );
    for dphi in linspace(-PI, PI, 361) {
        let mut row = vec![dphi];
        row.extend(rs.iter().map(|&r| enhancement_eta(dphi, r, &p)));
        table.rows.push(row);
    }
    let at_pi = enhancement_eta(PI, 1.0, &p);
    let at_0 = enhancement_eta(0.0, 1.0, &p);
    (
        vec![table],
        vec![
            check("eta(pi, r=1)", at_pi, "2 +- 1e-12", (at_pi - 2.0).abs() < 1e-12),
            check("eta(0, r=1)", at_0, "0 +- 1e-12", at_0.abs() < 1e-12),
        ],
    )
}

fn fig4() -> RunResult<Bundle> {
    let p = Params::ep(10.0, 20.0, 1.0, PI);
    let t = linspace(0.0, 10.0, 1001);
    let amp = amplitude_evolve(&p, &AmplitudeState::emitter_excited(1, 0)?, &t)?;
    let dp = amplitude_evolve(&p.clone().with_r(0.0), &AmplitudeState::emitter_excited(1, 0)?, &t)?;
    let layout = SpaceLayout::new(1, 2)?;
    let l = build_liouvillian(&p, &layout, None)?;
    let states = evolve(&l, &InitialState::QubitExcited(0).density(&layout)?, &t)?;
    let ops = [
        (Observable::QubitPopulation(0).operator(&layout)?, amp.emitter(0)),
        (
            Observable::ModePopulation(Mode::L).operator(&layout)?,
            amp.mode(Mode::L),
        ),
        (
            Observable::ModePopulation(Mode::R).operator(&layout)?,
            amp.mode(Mode::R),
        ),
    ];
    let mut dev: f64 = 0.0;
    for (op, series) in &ops {
        for (rho, a) in states.iter().zip(series.iter()) {
            dev = dev.max((rho.expect(op).re - a).abs());
        }
    }
    let mut table = Table::new(
        "fig4",
        &[
            ("t", Dim::Time),
            ("P_e", Dim::One),
            ("P_L", Dim::One),
            ("P_R", Dim::One),
            ("P_e_dp", Dim::One),
            ("P_R_dp", Dim::One),
        ],
    );
    for (k, &tk) in t.iter().enumerate() {
        table.rows.push(vec![
            tk,
            amp.emitter(0)[k],
            amp.mode(Mode::L)[k],
            amp.mode(Mode::R)[k],
            dp.emitter(0)[k],
            dp.mode(Mode::R)[k],
        ]);
    }
    let peak_r = max(amp.mode(Mode::R));
    Ok((
        vec![table],
        vec![
            check("master vs amplitude populations", dev, "< 1e-8", dev < 1e-8),
            check(
                "peak CCW population",
                peak_r,
                "0.667 +- 0.01",
                (peak_r - 0.667).abs() <= 0.01,
            ),
        ],
    ))
}

fn two_qubit(r: f64, detuning: f64) -> Params {
    Params::ep(100.0, 20.0, 1.0, PI)
        .with_qubits(2)
        .with_r(r)
        .with_detuning(detuning)
}

fn fig5() -> RunResult<Bundle> {
    let t_fine = linspace(0.0, 3.0, 300_001);
    let detuned = concurrence_series(&two_qubit(1.0, 232.0), &t_fine)?;
    let detuned_dp = concurrence_series(&two_qubit(0.0, 232.0), &t_fine)?;
    let t = linspace(0.0, 10.0, 100_001);
    let res_ep = concurrence_series(&two_qubit(1.0, 0.0), &t)?;
    let res_dp = concurrence_series(&two_qubit(0.0, 0.0), &t)?;
    let mut fine = Table::new(
        "fig5_detuned",
        &[("t", Dim::Time), ("C_ep", Dim::One), ("C_dp", Dim::One)],
    );
    for k in (0..t_fine.len()).step_by(100) {
        fine.rows.push(vec![t_fine[k], detuned[k], detuned_dp[k]]);
    }
    let mut res = Table::new(
        "fig5_resonant",
        &[("t", Dim::Time), ("C_ep", Dim::One), ("C_dp", Dim::One)],
    );
    for k in (0..t.len()).step_by(10) {
        res.rows.push(vec![t[k], res_ep[k], res_dp[k]]);
    }
    let cmax = max(&detuned);
    let rate_ep = late_decay_rate(&t, &res_ep, (3.0, 10.0))?;
    let rate_dp = late_decay_rate(&t, &res_dp, (3.0, 10.0))?;
    let target = 20.0f64.powi(3) / (32.0 * 100.0f64.powi(2));
    Ok((
        vec![fine, res],
        vec![
            check(
                "max concurrence at 2.32g detuning",
                cmax,
                "0.9866 +- 0.005",
                (cmax - 0.9866).abs() <= 0.005,
            ),
            check(
                "resonant EP max concurrence",
                max(&res_ep),
                "<= 0.5 + 1e-6",
                max(&res_ep) <= 0.5 + 1e-6,
            ),
            check(
                "resonant DP max concurrence",
                max(&res_dp),
                "<= 0.5 + 1e-6",
                max(&res_dp) <= 0.5 + 1e-6,
            ),
            check(
                "EP late concurrence decay rate",
                rate_ep,
                "within 25% of kappa^3/32g^2 = 0.025",
                (rate_ep / target - 1.0).abs() <= 0.25,
            ),
            check(
                "DP late concurrence decay rate",
                rate_dp,
                "1 +- 0.1",
                (rate_dp - 1.0).abs() <= 0.1,
            ),
        ],
    ))
}

fn fig6() -> RunResult<Bundle> {
    let dphi_bic = delta_phi_bic(20.0, 20.0)?;
    let bic = eigenmodes(&coupling_matrix(&Params::ep(20.0, 20.0, 0.0, dphi_bic)), None)?;
    let min_im = bic.iter().map(|m| m.value.im.abs()).fold(f64::INFINITY, f64::min);
    let grid = linspace(0.0, PI, 181);
    let points: Vec<Params> = grid.iter().map(|&d| Params::ep(20.0, 20.0, 0.0, d)).collect();
    let sweep = eigen_sweep(&points)?;
    let mut table = Table::new(
        "fig6",
        &[
            ("delta_phi", Dim::One),
            ("re_1", Dim::Rate),
            ("minus_im_1", Dim::Rate),
            ("re_2", Dim::Rate),
            ("minus_im_2", Dim::Rate),
            ("re_3", Dim::Rate),
            ("minus_im_3", Dim::Rate),
        ],
    );
    for (d, modes) in grid.iter().zip(&sweep) {
        let mut row = vec![*d];
        for m in modes {
            row.push(m.value.re);
            row.push(-m.value.im);
        }
        table.rows.push(row);
    }
    let ratio = dphi_bic / PI;
    Ok((
        vec![table],
        vec![
            check(
                "BIC phase / pi",
                ratio,
                "0.770 +- 0.001",
                (ratio - 0.770).abs() <= 0.001,
            ),
            check("min |Im omega| at the BIC", min_im, "< 1e-10", min_im < 1e-10),
        ],
    ))
}

fn fig7() -> RunResult<Bundle> {
    let mut table = Table::new(
        "fig7",
        &[
            ("g", Dim::Rate),
            ("P_e", Dim::One),
            ("P_c", Dim::One),
            ("P_kappa", Dim::One),
            ("P_e_closed", Dim::One),
            ("P_c_closed", Dim::One),
        ],
    );
    let mut checks = Vec::new();
    for g in [10.0, 20.0, 40.0] {
        let tr = trapped_population(&Params::ep(g, 20.0, 0.0, 0.0), None)?;
        let cf = steady_populations_analytic(g, 20.0)?;
        table
            .rows
            .push(vec![g, tr.emitter(), tr.cavity(), tr.leaked_kappa, cf.p_e, cf.p_c]);
        let dev = (tr.emitter() - cf.p_e).abs().max((tr.cavity() - cf.p_c).abs());
        checks.push(check(
            &format!("plateau vs closed form, g={g}"),
            dev,
            "< 1e-3",
            dev < 1e-3,
        ));
        let sum = cf.p_e + cf.p_c + cf.p_kappa - 1.0;
        checks.push(check(
            &format!("closed-form sum - 1, g={g}"),
            sum,
            "0",
            sum.abs() <= 2.0 * f64::EPSILON,
        ));
    }
    Ok((vec![table], checks))
}

fn fig8() -> RunResult<Bundle> {
    let dphis = linspace(0.0, 0.999 * PI, 200);
    let mut gm = Table::new(
        "fig8_min_decay",
        &[
            ("delta_phi", Dim::One),
            ("g5", Dim::Rate),
            ("g10", Dim::Rate),
            ("g20", Dim::Rate),
        ],
    );
    for &d in &dphis {
        let mut row = vec![d];
        for g in [5.0, 10.0, 20.0] {
            row.push(min_decay(&Params::ep(g, 20.0, 1.0, 0.0), d)?);
        }
        gm.rows.push(row);
    }
    let gm0 = min_decay(&Params::ep(20.0, 20.0, 1.0, 0.0), 0.0)?;
    let mut checks = vec![check(
        "Gamma_m(g=20, dphi=0)",
        gm0,
        "in [1/25, 1/15]",
        (1.0 / 25.0..=1.0 / 15.0).contains(&gm0),
    )];
    for (k, g) in [5.0, 10.0, 20.0].iter().enumerate() {
        let v = gm.rows[dphis.len() - 1][k + 1];
        checks.push(check(
            &format!("Gamma_m(g={g}, 0.999pi)"),
            v,
            "0.5 +- 0.025",
            (v - 0.5).abs() <= 0.025,
        ));
    }

    let layout = SpaceLayout::new(1, 4)?;
    let drive = Drive::new(0.0, 0.2);
    let det = linspace(-20.0, 20.0, 41);
    let dp = g2_sweep(&Params::dp(5.0, 20.0, 1.0), &drive, &layout, Mode::L, &det);
    let ep = g2_sweep(&Params::ep(5.0, 20.0, 1.0, 0.0), &drive, &layout, Mode::L, &det);
    let mut g2 = Table::new(
        "fig8_blockade",
        &[
            ("detuning", Dim::Rate),
            ("g2_dp", Dim::One),
            ("n_L_dp", Dim::One),
            ("g2_ep", Dim::One),
            ("n_L_ep", Dim::One),
        ],
    );
    for ((d, a), (_, b)) in dp.points.iter().zip(&ep.points) {
        let (a, b) = (a.as_ref().map_err(|e| e.clone())?, b.as_ref().map_err(|e| e.clone())?);
        g2.rows.push(vec![*d, a.g2, a.n_l, b.g2, b.n_l]);
    }
    let dp_min = dp.minimum.map_or(f64::NAN, |m| m.g2);
    let ep_min = ep.minimum.map_or(f64::NAN, |m| m.g2);
    let ratio = ep.max_population().unwrap_or(f64::NAN) / dp.max_population().unwrap_or(f64::NAN);
    checks.push(check(
        "DP minimum g2(0)",
        dp_min,
        "in [0.05, 0.2]",
        (0.05..=0.2).contains(&dp_min),
    ));
    checks.push(check("EP minimum g2(0)", ep_min, "<= 0.01", ep_min <= 0.01));
    checks.push(check("EP/DP peak n_L ratio", ratio, ">= 30", ratio >= 30.0));
    Ok((vec![gm, g2], checks))
}
