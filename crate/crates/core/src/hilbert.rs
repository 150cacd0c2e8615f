//! Operators on the composite space `qubit_1 ⊗ … ⊗ qubit_n ⊗ cavity_L ⊗ cavity_R`.
//!
//! Basis order: ground before excited for qubits, Fock states ascending for
//! modes. The first slot is the most significant Kronecker factor.

use std::fmt;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::{Real, C};

/// Dense complex square matrix on (a factor of) the composite space.
pub type OperatorRep<T> = DMatrix<C<T>>;

/// One of the two counter-propagating cavity modes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    L,
    R,
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Mode::L => f.write_str("L"),
            Mode::R => f.write_str("R"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Slot {
    Qubit(usize),
    Cavity(Mode),
}

impl fmt::Display for Slot {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Slot::Qubit(i) => write!(f, "qubit_{}", i + 1),
            Slot::Cavity(m) => write!(f, "cavity_{m}"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SpaceLayout {
    n_qubits: usize,
    fock_cutoff: usize,
}

impl SpaceLayout {
    /// `n_qubits = 0` gives the bare two-mode cavity.
    pub fn new(n_qubits: usize, fock_cutoff: usize) -> Result<Self> {
        if fock_cutoff < 2 {
            return Err(Error::InvalidCutoff(fock_cutoff));
        }
        Ok(Self { n_qubits, fock_cutoff })
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn fock_cutoff(&self) -> usize {
        self.fock_cutoff
    }

    pub fn with_cutoff(&self, fock_cutoff: usize) -> Result<Self> {
        Self::new(self.n_qubits, fock_cutoff)
    }

    /// `2^n_qubits × N²`.
    pub fn dim(&self) -> usize {
        (1usize << self.n_qubits) * self.fock_cutoff * self.fock_cutoff
    }

    pub fn n_slots(&self) -> usize {
        self.n_qubits + 2
    }

    pub fn slots(&self) -> Vec<Slot> {
        (0..self.n_qubits)
            .map(Slot::Qubit)
            .chain([Slot::Cavity(Mode::L), Slot::Cavity(Mode::R)])
            .collect()
    }

    pub fn slot_index(&self, slot: Slot) -> Result<usize> {
        match slot {
            Slot::Qubit(i) if i < self.n_qubits => Ok(i),
            Slot::Qubit(_) => Err(Error::InvalidSlot {
                slot: slot.to_string(),
                n_qubits: self.n_qubits,
            }),
            Slot::Cavity(Mode::L) => Ok(self.n_qubits),
            Slot::Cavity(Mode::R) => Ok(self.n_qubits + 1),
        }
    }

    pub fn slot_dim(&self, slot: Slot) -> Result<usize> {
        self.slot_index(slot)?;
        Ok(match slot {
            Slot::Qubit(_) => 2,
            Slot::Cavity(_) => self.fock_cutoff,
        })
    }

    /// Basis index of a product state given per-slot levels in slot order.
    pub fn basis_index(&self, levels: &[usize]) -> Result<usize> {
        if levels.len() != self.n_slots() {
            return Err(Error::InvalidState(format!(
                "expected {} slot levels, got {}",
                self.n_slots(),
                levels.len()
            )));
        }
        let mut idx = 0;
        for (slot, &lvl) in self.slots().into_iter().zip(levels) {
            let d = self.slot_dim(slot)?;
            if lvl >= d {
                return Err(Error::InvalidState(format!("level {lvl} out of range for {slot}")));
            }
            idx = idx * d + lvl;
        }
        Ok(idx)
    }
}

pub fn identity<T: Real>(n: usize) -> OperatorRep<T> {
    OperatorRep::identity(n, n)
}

/// Truncated annihilation operator with `⟨n−1|a|n⟩ = √n`.
pub fn destroy<T: Real>(n: usize) -> Result<OperatorRep<T>> {
    if n < 2 {
        return Err(Error::InvalidCutoff(n));
    }
    let mut a = OperatorRep::zeros(n, n);
    for k in 1..n {
        a[(k - 1, k)] = C::new(T::lit(k as f64).sqrt(), T::zero());
    }
    Ok(a)
}

/// `|g⟩⟨e|` with ground = 0, excited = 1.
pub fn sigma_minus<T: Real>() -> OperatorRep<T> {
    let mut s = OperatorRep::zeros(2, 2);
    s[(0, 1)] = C::new(T::one(), T::zero());
    s
}

pub fn dagger<T: Real>(op: &OperatorRep<T>) -> OperatorRep<T> {
    op.adjoint()
}

pub fn kron<T: Real>(a: &OperatorRep<T>, b: &OperatorRep<T>) -> OperatorRep<T> {
    a.kronecker(b)
}

/// Lifts `op` acting on `slot` to the full space.
pub fn embed<T: Real>(op: &OperatorRep<T>, slot: Slot, layout: &SpaceLayout) -> Result<OperatorRep<T>> {
    let target = layout.slot_index(slot)?;
    let expected = layout.slot_dim(slot)?;
    if op.nrows() != expected || op.ncols() != expected {
        return Err(Error::EmbedMismatch {
            slot: slot.to_string(),
            expected,
            got: op.nrows(),
        });
    }
    let mut out = identity::<T>(1);
    for (k, s) in layout.slots().into_iter().enumerate() {
        let factor = if k == target {
            op.clone()
        } else {
            identity(layout.slot_dim(s)?)
        };
        out = kron(&out, &factor);
    }
    Ok(out)
}

/// The embedded ladder operators of a layout.
#[derive(Debug, Clone)]
pub struct SystemOps<T: Real> {
    pub sigma: Vec<OperatorRep<T>>,
    pub c_l: OperatorRep<T>,
    pub c_r: OperatorRep<T>,
}

impl<T: Real> SystemOps<T> {
    pub fn new(layout: &SpaceLayout) -> Result<Self> {
        let a = destroy::<T>(layout.fock_cutoff())?;
        let sm = sigma_minus::<T>();
        let sigma = (0..layout.n_qubits())
            .map(|i| embed(&sm, Slot::Qubit(i), layout))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            sigma,
            c_l: embed(&a, Slot::Cavity(Mode::L), layout)?,
            c_r: embed(&a, Slot::Cavity(Mode::R), layout)?,
        })
    }

    pub fn mode(&self, m: Mode) -> &OperatorRep<T> {
        match m {
            Mode::L => &self.c_l,
            Mode::R => &self.c_r,
        }
    }
}

/// Row-compressed copy of a dense operator, used for matrix-free superoperators.
#[derive(Debug, Clone)]
pub struct SparseOp<T: Real> {
    dim: usize,
    rows: Vec<Vec<(usize, C<T>)>>,
}

impl<T: Real> SparseOp<T> {
    pub fn from_dense(op: &OperatorRep<T>) -> Self {
        let rows = (0..op.nrows())
            .map(|i| {
                (0..op.ncols())
                    .filter_map(|j| {
                        let v = op[(i, j)];
                        (v.re != T::zero() || v.im != T::zero()).then_some((j, v))
                    })
                    .collect()
            })
            .collect();
        Self { dim: op.nrows(), rows }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn nnz(&self) -> usize {
        self.rows.iter().map(Vec::len).sum()
    }

    pub fn to_dense(&self) -> OperatorRep<T> {
        let mut m = OperatorRep::zeros(self.dim, self.dim);
        for (i, row) in self.rows.iter().enumerate() {
            for &(j, v) in row {
                m[(i, j)] = v;
            }
        }
        m
    }

    /// `out += s · A X`.
    pub fn left_mul_acc(&self, s: C<T>, x: &OperatorRep<T>, out: &mut OperatorRep<T>) {
        for col in 0..x.ncols() {
            let xc = x.column(col);
            for (i, row) in self.rows.iter().enumerate() {
                if row.is_empty() {
                    continue;
                }
                let mut acc = C::new(T::zero(), T::zero());
                for &(k, a) in row {
                    acc += a * xc[k];
                }
                out[(i, col)] += s * acc;
            }
        }
    }

    /// `A X`.
    pub fn left_mul(&self, x: &OperatorRep<T>) -> OperatorRep<T> {
        let mut out = OperatorRep::zeros(self.dim, x.ncols());
        self.left_mul_acc(C::new(T::one(), T::zero()), x, &mut out);
        out
    }

    /// `out += s · X A†`.
    pub fn right_mul_adj_acc(&self, s: C<T>, x: &OperatorRep<T>, out: &mut OperatorRep<T>) {
        for (j, row) in self.rows.iter().enumerate() {
            for &(k, a) in row {
                let f = s * a.conj();
                for i in 0..x.nrows() {
                    out[(i, j)] += x[(i, k)] * f;
                }
            }
        }
    }

    /// `X A†`.
    pub fn right_mul_adj(&self, x: &OperatorRep<T>) -> OperatorRep<T> {
        let mut out = OperatorRep::zeros(x.nrows(), self.dim);
        self.right_mul_adj_acc(C::new(T::one(), T::zero()), x, &mut out);
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    type Op = OperatorRep<f64>;

    fn max_abs(m: &Op) -> f64 {
        m.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    #[test]
    fn destroy_two_levels() {
        let a = destroy::<f64>(2).unwrap();
        assert_eq!(a[(0, 1)].re, 1.0);
        assert_eq!(
            max_abs(
                &(a.clone() - {
                    let mut m = Op::zeros(2, 2);
                    m[(0, 1)] = C::new(1.0, 0.0);
                    m
                })
            ),
            0.0
        );
    }

    #[test]
    fn destroy_three_levels_entry() {
        let a = destroy::<f64>(3).unwrap();
        assert!((a[(1, 2)].re - 2f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn number_operator_diagonal() {
        let a = destroy::<f64>(4).unwrap();
        let n = a.adjoint() * &a;
        for k in 0..4 {
            assert!((n[(k, k)].re - k as f64).abs() < 1e-14);
        }
        assert!(max_abs(&(n.clone() - Op::from_diagonal(&n.diagonal()))) < 1e-15);
    }

    #[test]
    fn destroy_rejects_single_level() {
        assert_eq!(destroy::<f64>(1).unwrap_err(), Error::InvalidCutoff(1));
        assert!(SpaceLayout::new(1, 0).is_err());
    }

    #[test]
    fn sigma_minus_action() {
        let s = sigma_minus::<f64>();
        let e = nalgebra::DVector::from_vec(vec![C::new(0.0, 0.0), C::new(1.0, 0.0)]);
        let g = &s * &e;
        assert_eq!(g[0].re, 1.0);
        assert_eq!(g[1].norm(), 0.0);
        let gnd = nalgebra::DVector::from_vec(vec![C::new(1.0, 0.0), C::new(0.0, 0.0)]);
        assert_eq!((&s * &gnd).norm(), 0.0);
        let p = s.adjoint() * &s;
        assert_eq!(p[(0, 0)].re, 0.0);
        assert_eq!(p[(1, 1)].re, 1.0);
    }

    #[test]
    fn disjoint_slots_commute() {
        let layout = SpaceLayout::new(1, 2).unwrap();
        let ops = SystemOps::<f64>::new(&layout).unwrap();
        let comm = &ops.c_l * &ops.sigma[0] - &ops.sigma[0] * &ops.c_l;
        assert_eq!(max_abs(&comm), 0.0);
    }

    #[test]
    fn embed_identity_is_identity() {
        let layout = SpaceLayout::new(2, 3).unwrap();
        let id = embed(&identity::<f64>(3), Slot::Cavity(Mode::R), &layout).unwrap();
        assert_eq!(max_abs(&(id - identity::<f64>(layout.dim()))), 0.0);
        assert_eq!(layout.dim(), 36);
    }

    #[test]
    fn truncated_commutator() {
        let n = 5;
        let a = destroy::<f64>(n).unwrap();
        let comm = &a * a.adjoint() - a.adjoint() * &a;
        for i in 0..n {
            for j in 0..n {
                let expect = if i != j {
                    0.0
                } else if i == n - 1 {
                    -((n - 1) as f64)
                } else {
                    1.0
                };
                assert!((comm[(i, j)].re - expect).abs() < 1e-13, "({i},{j})");
            }
        }
    }

    #[test]
    fn embed_errors() {
        let layout = SpaceLayout::new(1, 3).unwrap();
        let a2 = destroy::<f64>(2).unwrap();
        assert!(matches!(
            embed(&a2, Slot::Cavity(Mode::L), &layout),
            Err(Error::EmbedMismatch { .. })
        ));
        assert!(matches!(
            embed(&sigma_minus::<f64>(), Slot::Qubit(1), &layout),
            Err(Error::InvalidSlot { .. })
        ));
    }

    #[test]
    fn slot_order_in_basis_index() {
        let layout = SpaceLayout::new(1, 3).unwrap();
        assert_eq!(layout.basis_index(&[1, 0, 0]).unwrap(), 9);
        assert_eq!(layout.basis_index(&[0, 1, 0]).unwrap(), 3);
        assert_eq!(layout.basis_index(&[0, 0, 1]).unwrap(), 1);
        assert!(layout.basis_index(&[0, 3, 0]).is_err());
    }

    #[test]
    fn sparse_products_match_dense() {
        let layout = SpaceLayout::new(1, 3).unwrap();
        let ops = SystemOps::<f64>::new(&layout).unwrap();
        let a = &ops.c_l + ops.c_r.adjoint() * C::new(0.3, -0.7) + &ops.sigma[0];
        let d = layout.dim();
        let x = Op::from_fn(d, d, |i, j| C::new((i * 7 + j) as f64 % 5.0, (i + 3 * j) as f64 % 3.0));
        let sp = SparseOp::from_dense(&a);
        assert!(max_abs(&(sp.left_mul(&x) - &a * &x)) < 1e-12);
        assert!(max_abs(&(sp.right_mul_adj(&x) - &x * a.adjoint())) < 1e-12);
        assert_eq!(max_abs(&(sp.to_dense() - &a)), 0.0);
    }

    proptest! {
        #[test]
        fn embed_preserves_spectrum(n in 2usize..5, diag in proptest::collection::vec(-3.0f64..3.0, 4)) {
            let layout = SpaceLayout::new(1, n).unwrap();
            let op = Op::from_diagonal(&nalgebra::DVector::from_iterator(
                n, (0..n).map(|k| C::new(diag[k % 4], 0.0))));
            let big = embed(&op, Slot::Cavity(Mode::L), &layout).unwrap();
            let mult = layout.dim() / n;
            for k in 0..n {
                let count = (0..layout.dim())
                    .filter(|&i| (big[(i, i)].re - op[(k, k)].re).abs() < 1e-14)
                    .count();
                let expect = (0..n).filter(|&m| (op[(m, m)].re - op[(k, k)].re).abs() < 1e-14).count() * mult;
                prop_assert_eq!(count, expect);
            }
        }

        #[test]
        fn destroy_is_upper_bidiagonal(n in 2usize..8) {
            let a = destroy::<f64>(n).unwrap();
            for i in 0..n {
                for j in 0..n {
                    if j != i + 1 {
                        prop_assert_eq!(a[(i, j)].norm(), 0.0);
                    }
                }
            }
            let ad = a.adjoint();
            for k in 1..n {
                prop_assert!((ad[(k, k - 1)].re - (k as f64).sqrt()).abs() < 1e-15);
            }
        }
    }
}
