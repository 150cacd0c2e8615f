//! Single-excitation eigenanalysis, emission spectrum and bound-state
//! conditions.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::ldos::{chi_dp, chi_ep, transparency_detuning, SpectrumSeries};
use crate::master::ModelParams;
use crate::scalar::{c, cabs, cis, re, Real, C};

/// The matrix `M` of `dp/dt = −i M p` for `p = (⟨c_L⟩, ⟨c_R⟩, ⟨σ⁻⁽¹⁾⟩, …)`.
pub fn coupling_matrix<T: Real>(p: &ModelParams<T>) -> DMatrix<C<T>> {
    let n = p.n_qubits() + 2;
    let half = T::lit(0.5);
    let mut m = DMatrix::zeros(n, n);
    let cav = c(p.omega_c, -half * p.kappa);
    m[(0, 0)] = cav;
    m[(1, 1)] = cav;
    m[(1, 0)] = c(T::zero(), -p.kappa * p.r_abs) * cis(p.phi_prop);
    for (i, e) in p.emitters.iter().enumerate() {
        let q = i + 2;
        m[(q, q)] = c(e.omega0, -half * p.gamma);
        let (em, ep) = (cis(-e.phi_azim) * p.g, cis(e.phi_azim) * p.g);
        m[(0, q)] = em;
        m[(1, q)] = ep;
        m[(q, 0)] = ep;
        m[(q, 1)] = em;
    }
    m
}

#[derive(Debug, Clone, PartialEq)]
pub struct EigenMode<T: Real> {
    pub value: C<T>,
    /// Unit right eigenvector ordered (c_L, c_R, σ⁻…), largest component real.
    pub vector: Vec<C<T>>,
    /// `|vᵢ|²`.
    pub hopfield: Vec<T>,
    pub label: usize,
    /// Set when the mode coalesces with another; `vector` is then a
    /// generalized eigenvector for one member of the pair.
    pub degenerate: bool,
}

impl<T: Real> EigenMode<T> {
    /// Amplitude decay rate `−Im ω`.
    pub fn decay(&self) -> T {
        -self.value.im
    }

    /// Summed weight of both cavity modes.
    pub fn cavity_weight(&self) -> T {
        self.hopfield[0] + self.hopfield[1]
    }

    pub fn emitter_weight(&self) -> T {
        self.hopfield[2..].iter().fold(T::zero(), |a, &b| a + b)
    }
}

/// Eigenmodes of `m`. Labels follow the previous sweep point by maximal
/// eigenvector overlap, or ascending real part when there is none.
pub fn eigenmodes<T: Real>(m: &DMatrix<C<T>>, previous: Option<&[EigenMode<T>]>) -> Result<Vec<EigenMode<T>>> {
    let n = m.nrows();
    if n == 0 || m.ncols() != n {
        return Err(Error::InvalidParams(
            "coupling matrix must be square and nonempty".into(),
        ));
    }
    if m.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::InvalidParams("coupling matrix has non-finite entries".into()));
    }
    let (q, t) = nalgebra::Schur::new(m.clone()).unpack();
    let tnorm = t
        .iter()
        .fold(T::zero(), |a, z| a.max(cabs(*z)))
        .max(T::min_value().unwrap());
    let tiny = T::default_epsilon() * tnorm;

    let mut modes: Vec<EigenMode<T>> = (0..n)
        .map(|k| {
            let lambda = t[(k, k)];
            let mut y = DVector::<C<T>>::zeros(n);
            y[k] = re(T::one());
            for j in (0..k).rev() {
                let mut s = re(T::zero());
                for l in j + 1..=k {
                    s += t[(j, l)] * y[l];
                }
                let mut den = t[(j, j)] - lambda;
                if cabs(den) < tiny {
                    den = re(tiny);
                }
                y[j] = -s / den;
            }
            make_mode(lambda, &(&q * y), false)
        })
        .collect();

    let defect_tol = T::tol(1e-10);
    for i in 0..n {
        for j in i + 1..n {
            if modes[i].degenerate || modes[j].degenerate {
                continue;
            }
            let cos = cabs(overlap(&modes[i].vector, &modes[j].vector));
            if T::one() - cos < defect_tol {
                let v = DVector::from_vec(modes[i].vector.clone());
                let shifted = m - DMatrix::<C<T>>::identity(n, n) * modes[i].value;
                let svd = shifted.svd(true, true);
                let mut w = svd
                    .solve(&v, T::default_epsilon().sqrt() * tnorm)
                    .map_err(|e| Error::InvalidParams(e.to_string()))?;
                let proj = v.dotc(&w);
                w -= &v * proj;
                let value = modes[j].value;
                modes[j] = make_mode(value, &w, true);
                modes[i].degenerate = true;
            }
        }
    }

    match previous {
        Some(prev) if prev.len() == n => relabel(&mut modes, prev),
        _ => {
            modes.sort_by(|a, b| {
                a.value
                    .re
                    .partial_cmp(&b.value.re)
                    .unwrap_or(std::cmp::Ordering::Equal)
                    .then(a.value.im.partial_cmp(&b.value.im).unwrap_or(std::cmp::Ordering::Equal))
            });
            for (k, md) in modes.iter_mut().enumerate() {
                md.label = k;
            }
        }
    }
    modes.sort_by_key(|md| md.label);
    Ok(modes)
}

/// Eigenmodes along a parameter sweep; points are diagonalized in parallel
/// and labels stitched serially afterwards.
pub fn eigen_sweep<T: Real>(points: &[ModelParams<T>]) -> Result<Vec<Vec<EigenMode<T>>>> {
    let mut out = points
        .par_iter()
        .map(|p| eigenmodes(&coupling_matrix(p), None))
        .collect::<Result<Vec<_>>>()?;
    for k in 1..out.len() {
        let (head, tail) = out.split_at_mut(k);
        let prev = &head[k - 1];
        if prev.len() == tail[0].len() {
            relabel(&mut tail[0], prev);
            tail[0].sort_by_key(|m| m.label);
        }
    }
    Ok(out)
}

fn make_mode<T: Real>(value: C<T>, v: &DVector<C<T>>, degenerate: bool) -> EigenMode<T> {
    let norm = v.iter().fold(T::zero(), |a, z| a + z.norm_sqr()).sqrt();
    let mut vec: Vec<C<T>> = v.iter().map(|z| *z / norm).collect();
    let big = (0..vec.len())
        .max_by(|&a, &b| {
            vec[a]
                .norm_sqr()
                .partial_cmp(&vec[b].norm_sqr())
                .unwrap_or(std::cmp::Ordering::Equal)
        })
        .unwrap_or(0);
    let ph = vec[big].conj() / cabs(vec[big]);
    for z in &mut vec {
        *z *= ph;
    }
    let hopfield = vec.iter().map(|z| z.norm_sqr()).collect();
    EigenMode {
        value,
        vector: vec,
        hopfield,
        label: 0,
        degenerate,
    }
}

fn overlap<T: Real>(a: &[C<T>], b: &[C<T>]) -> C<T> {
    a.iter().zip(b).fold(re(T::zero()), |acc, (x, y)| acc + x.conj() * *y)
}

/// Assigns labels of `prev` to `modes` by the permutation maximizing the total
/// overlap (exhaustive up to 8 modes, greedy beyond).
fn relabel<T: Real>(modes: &mut [EigenMode<T>], prev: &[EigenMode<T>]) {
    let n = modes.len();
    let score: Vec<Vec<f64>> = prev
        .iter()
        .map(|p| {
            modes
                .iter()
                .map(|m| cabs(overlap(&p.vector, &m.vector)).to_f64())
                .collect()
        })
        .collect();
    let assignment: Vec<usize> = if n <= 8 {
        let mut perm: Vec<usize> = (0..n).collect();
        let mut best = (f64::NEG_INFINITY, perm.clone());
        permutations(&mut perm, 0, &mut |p| {
            let s: f64 = p.iter().enumerate().map(|(i, &j)| score[i][j]).sum();
            if s > best.0 {
                best = (s, p.to_vec());
            }
        });
        best.1
    } else {
        let mut used = vec![false; n];
        (0..n)
            .map(|i| {
                let j = (0..n)
                    .filter(|&j| !used[j])
                    .max_by(|&a, &b| score[i][a].partial_cmp(&score[i][b]).unwrap())
                    .unwrap();
                used[j] = true;
                j
            })
            .collect()
    };
    for (i, &j) in assignment.iter().enumerate() {
        modes[j].label = prev[i].label;
    }
}

fn permutations(p: &mut [usize], k: usize, f: &mut impl FnMut(&[usize])) {
    if k == p.len() {
        f(p);
        return;
    }
    for i in k..p.len() {
        p.swap(k, i);
        permutations(p, k + 1, f);
        p.swap(k, i);
    }
}

/// Second-order expansion of the eigenvalues at resonance.
#[derive(Debug, Clone, PartialEq)]
pub struct ApproxEigenvalues<T: Real> {
    pub w1: C<T>,
    pub w2: C<T>,
    /// Requires a finite cooperativity (γ > 0).
    pub w3: Result<C<T>>,
}

/// `ω₁,₂ = ±√2g + (κ/4)sinΔφ − i[(cosΔφ+1)κ+γ]/4` and
/// `ω₃ = (κ/2)sinΔφ[cosΔφ/C − 1] − i(κ/2)[cosΔφ − 1]`, shifted by ωc.
pub fn approx_eigenvalues<T: Real>(p: &ModelParams<T>) -> Result<ApproxEigenvalues<T>> {
    if !(p.g > T::zero()) {
        return Err(Error::InvalidParams("approximate eigenvalues need g > 0".into()));
    }
    let dphi = p.delta_phi();
    let (s, co) = (dphi.sin(), dphi.cos());
    let four = T::lit(4.0);
    let half = T::lit(0.5);
    let split = T::lit(2.0).sqrt() * p.g;
    let shift = p.kappa / four * s + p.omega_c;
    let damp = ((co + T::one()) * p.kappa + p.gamma) / four;
    let w3 = p.cooperativity().map(|coop| {
        c(
            p.kappa * half * s * (co / coop - T::one()) + p.omega_c,
            -p.kappa * half * (co - T::one()),
        )
    });
    Ok(ApproxEigenvalues {
        w1: c(split + shift, -damp),
        w2: c(-split + shift, -damp),
        w3,
    })
}

/// Photonic Lamb shift `Δ(ω) = πg² Re[χ_DP + χ_EP]`.
pub fn lamb_shift<T: Real>(omega: T, p: &ModelParams<T>) -> T {
    T::pi() * p.g * p.g * (chi_dp(omega, p) + chi_ep(omega, p)).re
}

/// Local coupling `Γ(ω) = −2πg² Im[χ_DP + χ_EP] = 2πJ(ω)`.
pub fn local_coupling<T: Real>(omega: T, p: &ModelParams<T>) -> T {
    -T::two_pi() * p.g * p.g * (chi_dp(omega, p) + chi_ep(omega, p)).im
}

/// Spontaneous-emission spectrum of the first emitter.
pub fn se_spectrum<T: Real>(omega_grid: &[T], p: &ModelParams<T>) -> Result<SpectrumSeries<T>> {
    if !(p.gamma >= T::zero()) {
        return Err(Error::InvalidParams("gamma must be >= 0".into()));
    }
    let omega0 = p
        .emitters
        .first()
        .map(|e| e.omega0)
        .ok_or_else(|| Error::InvalidParams("no emitter".into()))?;
    SpectrumSeries::from_fn(omega_grid, |w| {
        let width = p.gamma + local_coupling(w, p);
        let d = w - omega0 - lamb_shift(w, p);
        let den = d * d + width * width * T::lit(0.25);
        if den == T::zero() {
            T::zero()
        } else {
            width / den / T::pi()
        }
    })
}

/// 4001 points spanning ω0 ± max(4g, 4κ).
pub fn default_spectrum_grid<T: Real>(p: &ModelParams<T>) -> Vec<T> {
    let center = p.emitters.first().map_or(p.omega_c, |e| e.omega0);
    let half = (p.g * T::lit(4.0)).max(p.kappa * T::lit(4.0)).max(T::one());
    let n = 4001;
    (0..n)
        .map(|k| center - half + half * T::lit(2.0 * k as f64 / (n - 1) as f64))
        .collect()
}

/// `Δφ_BIC = 2 arccos(κ / (2√2 g))`.
pub fn delta_phi_bic<T: Real>(g: T, kappa: T) -> Result<T> {
    let lhs = T::lit(8.0).sqrt() * g;
    if !(lhs >= kappa) || !(kappa >= T::zero()) {
        return Err(Error::NoBic {
            lhs: lhs.to_f64(),
            kappa: kappa.to_f64(),
        });
    }
    Ok(T::lit(2.0) * (kappa / lhs).min(T::one()).acos())
}

/// `Δω_BIC = (2g²/κ) sinΔφ + Δω_m`.
pub fn delta_omega_bic<T: Real>(g: T, kappa: T, delta_phi: T) -> Result<T> {
    let dm = transparency_detuning(delta_phi, kappa).map_err(|_| Error::Divergence("bound-state detuning"))?;
    Ok(T::lit(2.0) * g * g / kappa * delta_phi.sin() + dm)
}

/// `Γ_m = min(−Im ωᵢ)` with the emitter detuned to Δω_BIC.
pub fn min_decay<T: Real>(params: &ModelParams<T>, delta_phi: T) -> Result<T> {
    let det = delta_omega_bic(params.g, params.kappa, delta_phi)?;
    let p = params.clone().with_delta_phi(delta_phi).with_detuning(det);
    let modes = eigenmodes(&coupling_matrix(&p), None)?;
    Ok(modes
        .iter()
        .map(|m| m.decay())
        .fold(T::max_value().unwrap(), |a, b| a.min(b)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ldos::spectral_density;
    use rand::{Rng, SeedableRng};
    use std::f64::consts::PI;

    fn exact(p: &ModelParams<f64>) -> Vec<EigenMode<f64>> {
        eigenmodes(&coupling_matrix(p), None).unwrap()
    }

    fn check_eigenpairs(p: &ModelParams<f64>) {
        let m = coupling_matrix(p);
        for md in exact(p) {
            if md.degenerate {
                continue;
            }
            let v = DVector::from_vec(md.vector.clone());
            let r = &m * &v - &v * md.value;
            assert!(r.norm() < 1e-10 * (1.0 + m.norm()), "residual {}", r.norm());
            let s: f64 = md.hopfield.iter().sum();
            assert!((s - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn uncoupled_matrix_is_diagonal() {
        let p = ModelParams::ep(0.0, 20.0, 1.0, 0.3).with_r(0.0);
        let m = coupling_matrix(&p);
        for i in 0..3 {
            for j in 0..3 {
                if i != j {
                    assert_eq!(m[(i, j)].norm(), 0.0);
                }
            }
        }
        assert_eq!(m[(0, 0)], C::new(0.0, -10.0));
        assert_eq!(m[(2, 2)], C::new(0.0, -0.5));
    }

    #[test]
    fn eigenpairs_are_accurate() {
        check_eigenpairs(&ModelParams::ep(10.0, 20.0, 1.0, 2.0).with_detuning(3.0));
        check_eigenpairs(&ModelParams::ep(100.0, 20.0, 1.0, PI).with_qubits(2));
    }

    #[test]
    fn eigenvalues_are_gauge_invariant() {
        let p = ModelParams::ep(7.0, 20.0, 1.0, 1.3).with_detuning(-2.0);
        let a = exact(&p);
        for d in [0.4, -2.1, 5.0] {
            let b = exact(&p.clone().with_gauge_shift(d));
            for (x, y) in a.iter().zip(&b) {
                assert!((x.value - y.value).norm() < 1e-10);
                for k in 0..3 {
                    assert!((x.hopfield[k] - y.hopfield[k]).abs() < 1e-10);
                }
            }
        }
    }

    #[test]
    fn lossless_emitter_bound_state_at_zero_phase() {
        for g in [3.0, 20.0, 50.0] {
            let p = ModelParams::ep(g, 20.0, 0.0, 0.0);
            let modes = exact(&p);
            let bound = modes
                .iter()
                .find(|m| m.value.im.abs() < 1e-10)
                .expect("real eigenvalue");
            let qe = 400.0 / (400.0 + 8.0 * g * g);
            assert!((bound.hopfield[2] - qe).abs() < 1e-10);
            assert!((bound.hopfield[0] - bound.hopfield[1]).abs() < 1e-10);
        }
    }

    #[test]
    fn bic_mode_is_half_emitter() {
        let dphi = delta_phi_bic(20.0, 20.0).unwrap();
        assert!((dphi / PI - 0.770).abs() < 1e-3);
        let p = ModelParams::ep(20.0, 20.0, 0.0, dphi);
        let modes = exact(&p);
        let bic = modes.iter().find(|m| m.value.im.abs() < 1e-10).expect("bound state");
        assert!((bic.emitter_weight() - 0.5).abs() < 1e-10);
        assert!((bic.cavity_weight() - 0.5).abs() < 1e-10);
        assert!((bic.hopfield[0] - 0.25).abs() < 1e-10);
    }

    #[test]
    fn passive_over_random_draws() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        for _ in 0..1000 {
            let p = ModelParams::ep(
                rng.random_range(0.0..50.0),
                rng.random_range(0.0..50.0),
                rng.random_range(0.0..5.0),
                rng.random_range(0.0..2.0 * PI),
            )
            .with_r(rng.random_range(0.0..=1.0))
            .with_detuning(rng.random_range(-50.0..50.0));
            for m in exact(&p) {
                assert!(m.value.im <= 1e-12 * (1.0 + m.value.norm()), "{:?}", m.value);
            }
        }
    }

    #[test]
    fn chiral_exceptional_point_is_flagged() {
        let p = ModelParams::ep(0.0, 20.0, 1.0, 0.7).with_detuning(5.0);
        let modes = exact(&p);
        let cav: Vec<_> = modes.iter().filter(|m| m.hopfield[2] < 0.5).collect();
        assert_eq!(cav.len(), 2);
        assert!(cav.iter().all(|m| m.degenerate));
        assert!((cav[0].value - C::new(0.0, -10.0)).norm() < 1e-10);
        let m = coupling_matrix(&p);
        let (v, w) = (
            DVector::from_vec(cav[0].vector.clone()),
            DVector::from_vec(cav[1].vector.clone()),
        );
        let (v, w) = if (&m * &v - &v * cav[0].value).norm() < 1e-8 {
            (v, w)
        } else {
            (w, v)
        };
        let chain = &m * &w - &w * cav[0].value;
        let ratio = v.dotc(&chain) / v.dotc(&v);
        assert!((chain - &v * ratio).norm() < 1e-8);
        assert!(v.dotc(&w).norm() < 1e-10);
        let dp = exact(&p.clone().with_r(0.0));
        assert!(dp.iter().all(|m| !m.degenerate));
    }

    #[test]
    fn labels_follow_the_sweep() {
        let pts: Vec<_> = (0..=400)
            .map(|k| ModelParams::ep(10.0, 20.0, 1.0, 2.0 * PI * k as f64 / 400.0).with_detuning(1.0))
            .collect();
        let sweep = eigen_sweep(&pts).unwrap();
        for w in sweep.windows(2) {
            for (a, b) in w[0].iter().zip(&w[1]) {
                assert_eq!(a.label, b.label);
                let ov = cabs(overlap(&a.vector, &b.vector));
                assert!(ov > 0.9, "overlap {ov}");
            }
        }
    }

    #[test]
    fn approximate_eigenvalues() {
        let p = ModelParams::ep(100.0, 20.0, 1.0, PI);
        let a = approx_eigenvalues(&p).unwrap();
        assert!((-2.0 * a.w1.im - 0.5).abs() < 1e-12);
        assert!((-2.0 * a.w2.im - 0.5).abs() < 1e-12);
        let z = approx_eigenvalues(&p.clone().with_delta_phi(0.0)).unwrap();
        assert_eq!(z.w3.unwrap(), C::new(0.0, 0.0));
        assert_eq!(
            approx_eigenvalues(&p.clone().with_gamma(0.0)).unwrap().w3,
            Err(Error::UndefinedCooperativity)
        );
        assert!(approx_eigenvalues(&p.clone().with_g(0.0)).is_err());
        for k in 0..64 {
            let q = p.clone().with_delta_phi(2.0 * PI * k as f64 / 64.0);
            let a = approx_eigenvalues(&q).unwrap();
            let ex = exact(&q);
            for w in [a.w1, a.w2] {
                let best = ex
                    .iter()
                    .map(|m| (m.value.re - w.re).abs())
                    .fold(f64::INFINITY, f64::min);
                assert!(best <= 0.02 * 100.0, "{best}");
            }
        }
    }

    #[test]
    fn lamb_shift_and_local_coupling() {
        let dphi = 1.2;
        let p: ModelParams<f64> = ModelParams::ep(3.0, 20.0, 1.0, dphi);
        let dw = transparency_detuning(dphi, 20.0).unwrap();
        assert!(local_coupling(dw, &p).abs() < 1e-12);
        assert!(lamb_shift(1e8, &p).abs() < 1e-6);
        assert!(lamb_shift(0.0, &p.clone().with_delta_phi(0.0)).abs() < 1e-14);
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        for _ in 0..200 {
            let q = p
                .clone()
                .with_delta_phi(rng.random_range(0.0..2.0 * PI))
                .with_r(rng.random_range(0.0..=1.0));
            let w = rng.random_range(-100.0..100.0);
            let j = spectral_density(w, &q);
            assert!((local_coupling(w, &q) - 2.0 * PI * j).abs() < 1e-12 * (1.0 + j.abs()));
        }
    }

    #[test]
    fn strong_coupling_doublet() {
        let p = ModelParams::ep(100.0, 20.0, 1.0, PI);
        let grid: Vec<f64> = (0..200001).map(|k| -400.0 + 800.0 * k as f64 / 200000.0).collect();
        let s = se_spectrum(&grid, &p).unwrap();
        assert!(s.value().iter().all(|&v| v >= 0.0));
        let peaks = s.peaks();
        let (a, b) = (peaks[0], peaks[1]);
        let split = (a.omega - b.omega).abs();
        assert!(
            (split - 2.0 * 2f64.sqrt() * 100.0).abs() < 0.01 * split,
            "split {split}"
        );
        for pk in [a, b] {
            let k = s.omega().iter().position(|&w| w >= pk.omega).unwrap();
            let fw = s.fwhm_at(k).unwrap();
            assert!(fw < 1.0, "linewidth {fw}");
        }
    }

    #[test]
    fn default_grid_shape() {
        let p = ModelParams::ep(10.0, 20.0, 1.0, PI).with_detuning(2.0);
        let g = default_spectrum_grid(&p);
        assert_eq!(g.len(), 4001);
        assert!((g[0] - (2.0 - 80.0)).abs() < 1e-12 && (g[4000] - 82.0).abs() < 1e-12);
    }

    #[test]
    fn bic_phase_cases() {
        let gc = 20.0 / (2.0 * 2f64.sqrt());
        assert!(delta_phi_bic(gc, 20.0).unwrap().abs() < 1e-6);
        assert!(matches!(delta_phi_bic(gc * 0.99, 20.0), Err(Error::NoBic { .. })));
        for g in [8.0, 20.0, 60.0] {
            let d = delta_phi_bic(g, 20.0).unwrap();
            assert!((0.0..=PI).contains(&d));
            let modes = exact(&ModelParams::ep(g, 20.0, 0.0, d));
            assert!(modes.iter().any(|m| m.value.im.abs() < 1e-10));
        }
    }

    #[test]
    fn bic_detuning_cases() {
        assert_eq!(delta_omega_bic(10.0, 20.0, 0.0).unwrap(), 0.0);
        assert!(delta_omega_bic(10.0, 20.0, PI / 2.0).unwrap().abs() < 1e-12);
        assert!(delta_omega_bic(10.0, 20.0, PI).is_err());
        let dm: f64 = transparency_detuning(1.0, 20.0).unwrap();
        assert!((delta_omega_bic(0.01, 20.0, 1.0).unwrap() - dm).abs() < 1e-4 * dm.abs());
    }

    #[test]
    fn minimum_decay() {
        let p = ModelParams::ep(20.0, 20.0, 1.0, 0.0);
        let gm = min_decay(&p, 0.0).unwrap();
        assert!((1.0 / 25.0..=1.0 / 15.0).contains(&gm), "{gm}");
        for g in [5.0, 10.0, 20.0] {
            let gm = min_decay(&ModelParams::ep(g, 20.0, 1.0, 0.0), 0.999 * PI).unwrap();
            assert!((gm - 0.5).abs() < 0.025, "g={g}: {gm}");
        }
        let p5 = ModelParams::ep(5.0, 20.0, 1.0, 0.0);
        let mut last = 0.0;
        for k in 0..=199 {
            let gm = min_decay(&p5, PI * k as f64 / 200.0).unwrap();
            assert!(gm >= last - 1e-12, "not monotone at k={k}");
            last = gm;
        }
    }
}
