//! Liouvillian of the chiral cascaded master equation, time evolution,
//! steady states and two-time correlators.
//!
//! Superoperators act on column-stacked density matrices,
//! `vec(A X B) = (Bᵀ ⊗ A) vec(X)`.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hilbert::{Mode, OperatorRep, SpaceLayout, SparseOp, SystemOps};
use crate::rk4;
use crate::scalar::{cis, i_unit, re, wrap_phase, Real, C};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct Emitter<T: Real> {
    /// Transition frequency.
    pub omega0: T,
    /// Azimuthal position phase ϕ.
    pub phi_azim: T,
}

/// Rates and phases of the emitter + two-mode cavity system, in units of γ0.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct ModelParams<T: Real> {
    pub omega_c: T,
    pub gamma: T,
    pub kappa: T,
    pub g: T,
    pub r_abs: T,
    /// Propagation phase φ = βL.
    pub phi_prop: T,
    pub emitters: Vec<Emitter<T>>,
}

impl<T: Real> Default for ModelParams<T> {
    fn default() -> Self {
        Self::ep(T::lit(10.0), T::lit(20.0), T::one(), T::pi())
    }
}

impl<T: Real> ModelParams<T> {
    /// One resonant emitter at ϕ = 0, |r| = 1, cavity at zero frequency.
    pub fn ep(g: T, kappa: T, gamma: T, delta_phi: T) -> Self {
        Self {
            omega_c: T::zero(),
            gamma,
            kappa,
            g,
            r_abs: T::one(),
            phi_prop: delta_phi,
            emitters: vec![Emitter {
                omega0: T::zero(),
                phi_azim: T::zero(),
            }],
        }
    }

    /// The reference cavity without backscattering (|r| = 0).
    pub fn dp(g: T, kappa: T, gamma: T) -> Self {
        Self::ep(g, kappa, gamma, T::zero()).with_r(T::zero())
    }

    /// Sets φ so that Δφ = φ − 2ϕ₁ takes the given value.
    pub fn with_delta_phi(mut self, delta_phi: T) -> Self {
        let phi1 = self.emitters.first().map_or(T::zero(), |e| e.phi_azim);
        self.phi_prop = delta_phi + T::lit(2.0) * phi1;
        self
    }

    /// Places every emitter at ω0 = ωc + detuning.
    pub fn with_detuning(mut self, detuning: T) -> Self {
        for e in &mut self.emitters {
            e.omega0 = self.omega_c + detuning;
        }
        self
    }

    pub fn with_r(mut self, r_abs: T) -> Self {
        self.r_abs = r_abs;
        self
    }

    pub fn with_g(mut self, g: T) -> Self {
        self.g = g;
        self
    }

    pub fn with_gamma(mut self, gamma: T) -> Self {
        self.gamma = gamma;
        self
    }

    pub fn with_kappa(mut self, kappa: T) -> Self {
        self.kappa = kappa;
        self
    }

    /// Shifts the cavity and every emitter by the same amount.
    pub fn with_omega_c(mut self, omega_c: T) -> Self {
        let shift = omega_c - self.omega_c;
        self.omega_c = omega_c;
        for e in &mut self.emitters {
            e.omega0 += shift;
        }
        self
    }

    /// Replicates the first emitter `n` times.
    pub fn with_qubits(mut self, n: usize) -> Self {
        let first = self.emitters.first().copied().unwrap_or(Emitter {
            omega0: self.omega_c,
            phi_azim: T::zero(),
        });
        self.emitters = vec![first; n];
        self
    }

    /// (φ, ϕᵢ) → (φ + 2δ, ϕᵢ + δ); leaves all observables unchanged.
    pub fn with_gauge_shift(mut self, delta: T) -> Self {
        self.phi_prop += T::lit(2.0) * delta;
        for e in &mut self.emitters {
            e.phi_azim += delta;
        }
        self
    }

    pub fn n_qubits(&self) -> usize {
        self.emitters.len()
    }

    /// Δφ = φ − 2ϕ₁ in `[0, 2π)`.
    pub fn delta_phi(&self) -> T {
        let phi1 = self.emitters.first().map_or(T::zero(), |e| e.phi_azim);
        wrap_phase(self.phi_prop - T::lit(2.0) * phi1)
    }

    /// ω0 − ωc of the first emitter.
    pub fn detuning(&self) -> T {
        self.emitters.first().map_or(T::zero(), |e| e.omega0 - self.omega_c)
    }

    /// C = 8g²/κγ.
    pub fn cooperativity(&self) -> Result<T> {
        if self.gamma == T::zero() || self.kappa == T::zero() {
            return Err(Error::UndefinedCooperativity);
        }
        Ok(T::lit(8.0) * self.g * self.g / (self.kappa * self.gamma))
    }

    pub fn validate(&self) -> Result<()> {
        let mut vals = vec![
            ("omega_c", self.omega_c),
            ("gamma", self.gamma),
            ("kappa", self.kappa),
            ("g", self.g),
            ("r_abs", self.r_abs),
            ("phi_prop", self.phi_prop),
        ];
        for e in &self.emitters {
            vals.push(("omega0", e.omega0));
            vals.push(("phi_azim", e.phi_azim));
        }
        if let Some((name, _)) = vals.iter().find(|(_, v)| !v.is_finite()) {
            return Err(Error::InvalidParams(format!("{name} is not finite")));
        }
        for (name, v) in [("gamma", self.gamma), ("kappa", self.kappa), ("g", self.g)] {
            if v < T::zero() {
                return Err(Error::InvalidParams(format!("{name} must be >= 0, got {}", v.to_f64())));
            }
        }
        if self.r_abs < T::zero() || self.r_abs > T::one() {
            return Err(Error::InvalidParams(format!(
                "r_abs must lie in [0, 1], got {}",
                self.r_abs.to_f64()
            )));
        }
        Ok(())
    }

    /// Largest rate entering the undriven generator (at least 1).
    pub fn rate_scale(&self) -> T {
        let mut s = T::one().max(self.g).max(self.kappa).max(self.gamma);
        for e in &self.emitters {
            s = s.max((e.omega0 - self.omega_c).mag());
        }
        s
    }
}

/// Hermitian, unit-trace, positive semidefinite state.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix<T: Real> {
    m: OperatorRep<T>,
}

impl<T: Real> DensityMatrix<T> {
    pub fn new(m: OperatorRep<T>) -> Result<Self> {
        if m.nrows() != m.ncols() || m.nrows() == 0 {
            return Err(Error::InvalidState("density matrix must be square".into()));
        }
        if m.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::InvalidState("non-finite entries".into()));
        }
        let herm = max_abs(&(&m - m.adjoint()));
        if herm > T::tol(1e-12) {
            return Err(Error::InvalidState(format!(
                "not Hermitian (deviation {:.3e})",
                herm.to_f64()
            )));
        }
        let tr = m.trace();
        if (tr.re - T::one()).mag() > T::tol(1e-10) || tr.im.mag() > T::tol(1e-10) {
            return Err(Error::InvalidState(format!("trace {} != 1", tr.re.to_f64())));
        }
        let dm = Self { m };
        let lmin = dm.min_eigenvalue();
        if lmin < -T::tol(1e-10) {
            return Err(Error::InvalidState(format!(
                "negative eigenvalue {:.3e}",
                lmin.to_f64()
            )));
        }
        Ok(dm)
    }

    /// `|ψ⟩⟨ψ|` for a normalized state vector.
    pub fn from_pure(psi: &DVector<C<T>>) -> Result<Self> {
        Self::new(psi * psi.adjoint())
    }

    /// Projector onto a basis state.
    pub fn basis(dim: usize, index: usize) -> Result<Self> {
        if index >= dim {
            return Err(Error::InvalidState(format!("basis index {index} >= {dim}")));
        }
        let mut m = OperatorRep::zeros(dim, dim);
        m[(index, index)] = re(T::one());
        Self::new(m)
    }

    /// Product state with the given level in each slot of `layout`.
    pub fn product(layout: &SpaceLayout, levels: &[usize]) -> Result<Self> {
        Self::basis(layout.dim(), layout.basis_index(levels)?)
    }

    pub fn dim(&self) -> usize {
        self.m.nrows()
    }

    pub fn matrix(&self) -> &OperatorRep<T> {
        &self.m
    }

    pub fn into_matrix(self) -> OperatorRep<T> {
        self.m
    }

    /// `Tr(ρ O)`.
    pub fn expect(&self, op: &OperatorRep<T>) -> C<T> {
        trace_product(op, &self.m)
    }

    pub fn min_eigenvalue(&self) -> T {
        let eig = nalgebra::SymmetricEigen::new(hermitian_part(&self.m));
        eig.eigenvalues
            .iter()
            .copied()
            .fold(T::max_value().unwrap(), |a, b| a.min(b))
    }
}

/// Coherent drive `Ω(c + c†)` on one cavity mode at frequency ω_d.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct DriveSpec<T: Real> {
    pub omega_drive: T,
    pub amplitude: T,
    pub target: Mode,
}

impl<T: Real> DriveSpec<T> {
    pub fn new(omega_drive: T, amplitude: T) -> Self {
        Self {
            omega_drive,
            amplitude,
            target: Mode::R,
        }
    }
}

#[derive(Debug, Clone)]
struct Jump<T: Real> {
    rate: C<T>,
    a: SparseOp<T>,
    b: SparseOp<T>,
}

/// Generator `L(ρ) = Kρ + ρK† + Σ c·AρB†`, applied matrix-free.
#[derive(Debug, Clone)]
pub struct Liouvillian<T: Real> {
    dim: usize,
    k: SparseOp<T>,
    jumps: Vec<Jump<T>>,
    rate_scale: T,
}

impl<T: Real> Liouvillian<T> {
    /// From an effective generator `K` and jump terms `(c, A, B)`. The jump set
    /// must be closed under `(c, A, B) → (c*, B, A)` for the result to preserve
    /// Hermiticity.
    pub fn from_parts(
        k: &OperatorRep<T>,
        jumps: &[(C<T>, OperatorRep<T>, OperatorRep<T>)],
        rate_scale: T,
    ) -> Result<Self> {
        let dim = k.nrows();
        if k.ncols() != dim
            || jumps
                .iter()
                .any(|(_, a, b)| a.shape() != (dim, dim) || b.shape() != (dim, dim))
        {
            return Err(Error::Build("operator dimensions disagree".into()));
        }
        Ok(Self {
            dim,
            k: SparseOp::from_dense(k),
            jumps: jumps
                .iter()
                .filter(|(c, _, _)| c.re != T::zero() || c.im != T::zero())
                .map(|(c, a, b)| Jump {
                    rate: *c,
                    a: SparseOp::from_dense(a),
                    b: SparseOp::from_dense(b),
                })
                .collect(),
            rate_scale,
        })
    }

    pub fn zero(dim: usize) -> Self {
        Self {
            dim,
            k: SparseOp::from_dense(&OperatorRep::zeros(dim, dim)),
            jumps: vec![],
            rate_scale: T::one(),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn rate_scale(&self) -> T {
        self.rate_scale
    }

    /// `0.005 / rate_scale`.
    pub fn default_step(&self) -> T {
        T::lit(0.005) / self.rate_scale
    }

    /// `L(X)` for an arbitrary (not necessarily Hermitian) `X`.
    pub fn apply(&self, x: &OperatorRep<T>) -> OperatorRep<T> {
        let one = re(T::one());
        let mut out = self.k.left_mul(x);
        self.k.right_mul_adj_acc(one, x, &mut out);
        for j in &self.jumps {
            let ax = j.a.left_mul(x);
            j.b.right_mul_adj_acc(j.rate, &ax, &mut out);
        }
        out
    }

    /// `L(ρ)` for Hermitian `ρ`, computed as `Y + Y†` so the output is
    /// Hermitian to the last bit.
    pub fn apply_hermitian(&self, rho: &OperatorRep<T>) -> OperatorRep<T> {
        let half = re(T::lit(0.5));
        let mut y = self.k.left_mul(rho);
        for j in &self.jumps {
            let ax = j.a.left_mul(rho);
            j.b.right_mul_adj_acc(j.rate * half, &ax, &mut y);
        }
        let yd = y.adjoint();
        y + yd
    }

    /// Dense `dim² × dim²` superoperator (column stacking).
    pub fn matrix(&self) -> DMatrix<C<T>> {
        let d = self.dim;
        let mut out = DMatrix::zeros(d * d, d * d);
        let mut e = OperatorRep::zeros(d, d);
        for b in 0..d {
            for a in 0..d {
                e[(a, b)] = re(T::one());
                let y = self.apply(&e);
                e[(a, b)] = re(T::zero());
                let col = a + b * d;
                for (p, v) in y.iter().enumerate() {
                    out[(p, col)] = *v;
                }
            }
        }
        out
    }

    /// The effective generator `K`.
    pub fn effective_generator(&self) -> OperatorRep<T> {
        self.k.to_dense()
    }
}

/// Builds the Liouvillian in the frame rotating at ωc (undriven) or ω_d (driven).
pub fn build_liouvillian<T: Real>(
    params: &ModelParams<T>,
    layout: &SpaceLayout,
    drive: Option<&DriveSpec<T>>,
) -> Result<Liouvillian<T>> {
    params.validate()?;
    if layout.n_qubits() != params.n_qubits() {
        return Err(Error::Build(format!(
            "layout has {} qubit slot(s) but parameters describe {} emitter(s)",
            layout.n_qubits(),
            params.n_qubits()
        )));
    }
    if let Some(d) = drive {
        if !(d.amplitude >= T::zero()) || !d.omega_drive.is_finite() {
            return Err(Error::Build(
                "drive amplitude must be >= 0 and frequencies finite".into(),
            ));
        }
    }
    let ops = SystemOps::<T>::new(layout)?;
    let dim = layout.dim();
    let frame = drive.map_or(params.omega_c, |d| d.omega_drive);
    let n_l = ops.c_l.adjoint() * &ops.c_l;
    let n_r = ops.c_r.adjoint() * &ops.c_r;
    let (cl_d, cr_d) = (ops.c_l.adjoint(), ops.c_r.adjoint());

    let mut h: OperatorRep<T> = (&n_l + &n_r) * re(params.omega_c - frame);
    let mut sigma_pop = OperatorRep::<T>::zeros(dim, dim);
    let g = re(params.g);
    for (s, e) in ops.sigma.iter().zip(&params.emitters) {
        let sd = s.adjoint();
        let ns = &sd * s;
        h += &ns * re(e.omega0 - frame);
        sigma_pop += ns;
        let em = cis(-e.phi_azim);
        let ep = cis(e.phi_azim);
        h += (&cl_d * s) * (g * em) + (&sd * &ops.c_l) * (g * ep);
        h += (&cr_d * s) * (g * ep) + (&sd * &ops.c_r) * (g * em);
    }
    let mut scale = params.rate_scale();
    if let Some(d) = drive {
        let c = ops.mode(d.target);
        h += (c + c.adjoint()) * re(d.amplitude);
        scale = scale.max(d.amplitude).max((params.omega_c - frame).mag());
        for e in &params.emitters {
            scale = scale.max((e.omega0 - frame).mag());
        }
    }

    let half = T::lit(0.5);
    let chiral = re(params.kappa * params.r_abs) * cis(params.phi_prop);
    let k = h * (-i_unit::<T>())
        - sigma_pop * re(half * params.gamma)
        - (&n_l + &n_r) * re(half * params.kappa)
        - (&cr_d * &ops.c_l) * chiral;

    let mut jumps = Vec::new();
    for s in &ops.sigma {
        jumps.push((re(params.gamma), s.clone(), s.clone()));
    }
    jumps.push((re(params.kappa), ops.c_l.clone(), ops.c_l.clone()));
    jumps.push((re(params.kappa), ops.c_r.clone(), ops.c_r.clone()));
    jumps.push((chiral, ops.c_l.clone(), ops.c_r.clone()));
    jumps.push((chiral.conj(), ops.c_r.clone(), ops.c_l.clone()));
    Liouvillian::from_parts(&k, &jumps, scale)
}

/// Evolves `rho0` from t = 0 with the default step and returns the state at each sample.
pub fn evolve<T: Real>(l: &Liouvillian<T>, rho0: &DensityMatrix<T>, t_grid: &[T]) -> Result<Vec<DensityMatrix<T>>> {
    evolve_with_step(l, rho0, t_grid, l.default_step())
}

pub fn evolve_with_step<T: Real>(
    l: &Liouvillian<T>,
    rho0: &DensityMatrix<T>,
    t_grid: &[T],
    step: T,
) -> Result<Vec<DensityMatrix<T>>> {
    check_dim(l, rho0.dim())?;
    let mut out = Vec::with_capacity(t_grid.len());
    rk4::integrate(
        rho0.matrix().clone(),
        t_grid,
        step,
        |x| l.apply_hermitian(x),
        |_, x| {
            let drift = (x.trace().re - T::one()).mag();
            if drift > T::tol(1e-8) {
                return Err(Error::Accuracy {
                    drift: drift.to_f64(),
                    suggested_step: step.to_f64() / 2.0,
                });
            }
            let state = DensityMatrix::new(x.clone()).map_err(|_| Error::Accuracy {
                drift: state_violation(x).to_f64(),
                suggested_step: step.to_f64() / 2.0,
            })?;
            out.push(state);
            Ok(())
        },
    )?;
    Ok(out)
}

/// Unique steady state from the real Hermitian parameterization of `L ρ = 0`
/// with one population equation replaced by `Tr ρ = 1`.
pub fn steady_state<T: Real>(l: &Liouvillian<T>) -> Result<DensityMatrix<T>> {
    let d = l.dim();
    let n = d * d;
    let mut r = DMatrix::<T>::zeros(n, n);
    let mut e = OperatorRep::<T>::zeros(d, d);
    for p in 0..n {
        set_basis(&mut e, p, d, true);
        let y = l.apply_hermitian(&e);
        set_basis(&mut e, p, d, false);
        for q in 0..n {
            r[(q, p)] = coord(&y, q, d);
        }
    }
    let norm = (0..n)
        .map(|i| r.row(i).iter().fold(T::zero(), |a, v| a + v.mag()))
        .fold(T::zero(), |a, b| a.max(b))
        .max(T::one());
    for p in 0..n {
        r[(0, p)] = T::zero();
    }
    for i in 0..d {
        r[(0, i * d + i)] = T::one();
    }
    let degenerate = |ratio: T| Error::NonUniqueSteadyState { ratio: ratio.to_f64() };
    let lu = r.clone().lu();
    let mut b = DVector::<T>::zeros(n);
    b[0] = T::one();
    let mut x = lu.solve(&b).ok_or_else(|| degenerate(T::zero()))?;

    // Inverse iteration estimate of the smallest eigenvalue magnitude.
    let mut v = DVector::<T>::from_fn(n, |i, _| T::one() + T::lit(((i * 7919) % 101) as f64 / 101.0));
    v /= v.norm();
    let mut smallest = T::max_value().unwrap();
    for _ in 0..4 {
        let w = lu.solve(&v).ok_or_else(|| degenerate(T::zero()))?;
        let wn = w.norm();
        if !wn.is_finite() || wn == T::zero() {
            return Err(degenerate(T::zero()));
        }
        smallest = T::one() / wn;
        v = w / wn;
    }
    let ratio = smallest / norm;
    let floor = T::lit(1e-8).max(T::default_epsilon() * T::lit(1e3));
    if ratio < floor || x.iter().any(|v| !v.is_finite()) {
        return Err(degenerate(ratio));
    }

    let mut rho = from_coords(&x, d);
    let mut resid = max_abs(&l.apply_hermitian(&rho));
    if resid > T::tol(1e-10) {
        let mut res = DVector::<T>::zeros(n);
        let lr = l.apply_hermitian(&rho);
        for q in 0..n {
            res[q] = coord(&lr, q, d);
        }
        res[0] = (0..d).fold(T::zero(), |a, i| a + rho[(i, i)].re) - T::one();
        if let Some(dx) = lu.solve(&res) {
            x -= dx;
            rho = from_coords(&x, d);
            resid = max_abs(&l.apply_hermitian(&rho));
        }
    }
    if resid > T::tol(1e-10) {
        return Err(Error::SteadyStateResidual(resid.to_f64()));
    }
    DensityMatrix::new(rho)
}

/// `⟨A(0) B(τ)⟩ = Tr{B e^{Lτ}[ρA]}` on each `τ` of the grid.
pub fn two_time_correlation<T: Real>(
    l: &Liouvillian<T>,
    rho: &DensityMatrix<T>,
    a: &OperatorRep<T>,
    b: &OperatorRep<T>,
    tau_grid: &[T],
) -> Result<Vec<C<T>>> {
    two_time_correlation_with_step(l, rho, a, b, tau_grid, l.default_step())
}

pub fn two_time_correlation_with_step<T: Real>(
    l: &Liouvillian<T>,
    rho: &DensityMatrix<T>,
    a: &OperatorRep<T>,
    b: &OperatorRep<T>,
    tau_grid: &[T],
    step: T,
) -> Result<Vec<C<T>>> {
    check_dim(l, rho.dim())?;
    if a.shape() != (l.dim, l.dim) || b.shape() != (l.dim, l.dim) {
        return Err(Error::Build("correlator operators do not match the Liouvillian".into()));
    }
    let x0 = rho.matrix() * a;
    let tr0 = x0.trace();
    let scale = T::one().max(crate::scalar::cabs(tr0));
    let mut out = Vec::with_capacity(tau_grid.len());
    rk4::integrate(
        x0,
        tau_grid,
        step,
        |x| l.apply(x),
        |_, x| {
            let drift = crate::scalar::cabs(x.trace() - tr0) / scale;
            if drift > T::tol(1e-8) {
                return Err(Error::Accuracy {
                    drift: drift.to_f64(),
                    suggested_step: step.to_f64() / 2.0,
                });
            }
            out.push(trace_product(b, x));
            Ok(())
        },
    )?;
    Ok(out)
}

/// Initial condition for [`convergence_check`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InitialState {
    Vacuum,
    QubitExcited(usize),
    Photon(Mode),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Observable {
    QubitPopulation(usize),
    ModePopulation(Mode),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Convergence {
    pub converged: bool,
    pub max_deviation: f64,
}

impl InitialState {
    pub fn density<T: Real>(&self, layout: &SpaceLayout) -> Result<DensityMatrix<T>> {
        let mut levels = vec![0; layout.n_slots()];
        match *self {
            InitialState::Vacuum => {}
            InitialState::QubitExcited(i) => {
                if i >= layout.n_qubits() {
                    return Err(Error::InvalidState(format!("no qubit {i}")));
                }
                levels[i] = 1;
            }
            InitialState::Photon(Mode::L) => levels[layout.n_qubits()] = 1,
            InitialState::Photon(Mode::R) => levels[layout.n_qubits() + 1] = 1,
        }
        DensityMatrix::product(layout, &levels)
    }
}

impl Observable {
    pub fn operator<T: Real>(&self, layout: &SpaceLayout) -> Result<OperatorRep<T>> {
        let ops = SystemOps::<T>::new(layout)?;
        Ok(match *self {
            Observable::QubitPopulation(i) => {
                let s = ops
                    .sigma
                    .get(i)
                    .ok_or_else(|| Error::InvalidState(format!("no qubit {i}")))?;
                s.adjoint() * s
            }
            Observable::ModePopulation(m) => {
                let c = ops.mode(m);
                c.adjoint() * c
            }
        })
    }
}

/// Compares an observable's time trace at cutoffs N and N+1.
pub fn convergence_check<T: Real>(
    params: &ModelParams<T>,
    layout: &SpaceLayout,
    drive: Option<&DriveSpec<T>>,
    initial: InitialState,
    observable: Observable,
    t_grid: &[T],
) -> Result<Convergence> {
    let trace_at = |lay: &SpaceLayout| -> Result<Vec<T>> {
        let l = build_liouvillian(params, lay, drive)?;
        let op = observable.operator::<T>(lay)?;
        let states = evolve(&l, &initial.density::<T>(lay)?, t_grid)?;
        Ok(states.iter().map(|s| s.expect(&op).re).collect())
    };
    let a = trace_at(layout)?;
    let b = trace_at(&layout.with_cutoff(layout.fock_cutoff() + 1)?)?;
    let dev = a
        .iter()
        .zip(&b)
        .fold(T::zero(), |m, (x, y)| m.max((*x - *y).mag()))
        .to_f64();
    Ok(Convergence {
        converged: dev <= 1e-6,
        max_deviation: dev,
    })
}

fn check_dim<T: Real>(l: &Liouvillian<T>, d: usize) -> Result<()> {
    if l.dim != d {
        return Err(Error::Build(format!(
            "state dimension {d} does not match Liouvillian dimension {}",
            l.dim
        )));
    }
    Ok(())
}

pub(crate) fn max_abs<T: Real>(m: &OperatorRep<T>) -> T {
    m.iter().fold(T::zero(), |a, z| a.max(z.re.mag()).max(z.im.mag()))
}

/// `Tr(A X)`.
pub(crate) fn trace_product<T: Real>(a: &OperatorRep<T>, x: &OperatorRep<T>) -> C<T> {
    let mut acc = re(T::zero());
    for i in 0..a.nrows() {
        for j in 0..a.ncols() {
            acc += a[(i, j)] * x[(j, i)];
        }
    }
    acc
}

/// Largest deviation from the density-matrix constraints.
fn state_violation<T: Real>(x: &OperatorRep<T>) -> T {
    let herm = max_abs(&(x - x.adjoint()));
    let tr = (x.trace().re - T::one()).mag();
    let eig = nalgebra::SymmetricEigen::new(hermitian_part(x));
    let neg = eig.eigenvalues.iter().fold(T::zero(), |a, &b| a.max(-b));
    herm.max(tr).max(neg)
}

fn hermitian_part<T: Real>(m: &OperatorRep<T>) -> OperatorRep<T> {
    (m + m.adjoint()) * re(T::lit(0.5))
}

// Real coordinates of a Hermitian matrix: index p = i + j·d holds ρ_ii on the
// diagonal, Re ρ_ij for i < j and Im ρ_ji for i > j.
fn set_basis<T: Real>(e: &mut OperatorRep<T>, p: usize, d: usize, on: bool) {
    let (i, j) = (p % d, p / d);
    let one = if on { T::one() } else { T::zero() };
    if i == j {
        e[(i, i)] = re(one);
    } else if i < j {
        e[(i, j)] = re(one);
        e[(j, i)] = re(one);
    } else {
        e[(j, i)] = C::new(T::zero(), one);
        e[(i, j)] = C::new(T::zero(), -one);
    }
}

fn coord<T: Real>(y: &OperatorRep<T>, q: usize, d: usize) -> T {
    let (i, j) = (q % d, q / d);
    if i <= j {
        y[(i, j)].re
    } else {
        y[(j, i)].im
    }
}

fn from_coords<T: Real>(x: &DVector<T>, d: usize) -> OperatorRep<T> {
    let mut rho = OperatorRep::<T>::zeros(d, d);
    for j in 0..d {
        for i in 0..d {
            let v = x[i + j * d];
            if i == j {
                rho[(i, i)] += re(v);
            } else if i < j {
                rho[(i, j)] += re(v);
                rho[(j, i)] += re(v);
            } else {
                rho[(j, i)] += C::new(T::zero(), v);
                rho[(i, j)] -= C::new(T::zero(), v);
            }
        }
    }
    rho
}
