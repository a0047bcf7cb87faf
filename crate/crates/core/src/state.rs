//! Multi-qubit states and gates.
//!
//! Qubit 0 is the most significant bit of a computational-basis index. Every
//! other module, and every file format, inherits that convention.

use std::f64::consts::FRAC_1_SQRT_2;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::{self, CMatrix, ONE, ZERO};

/// Tolerance for the density-matrix invariants (Hermiticity, trace, positivity).
pub const STATE_TOL: f64 = 1e-10;
const NORM_TOL: f64 = 1e-12;
/// Largest register any operation here is meant for.
pub const MAX_QUBITS: usize = 6;

#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    num_qubits: usize,
    amplitudes: Vec<Complex64>,
}

impl StateVector {
    pub fn new(amplitudes: Vec<Complex64>) -> Result<Self> {
        let num_qubits = qubits_for_dim(amplitudes.len())?;
        let norm_sq: f64 = amplitudes.iter().map(|a| a.norm_sqr()).sum();
        if (norm_sq - 1.0).abs() > NORM_TOL {
            return Err(Error::NotNormalized { norm_sq });
        }
        Ok(Self {
            num_qubits,
            amplitudes,
        })
    }

    pub fn from_real(amplitudes: &[f64]) -> Result<Self> {
        Self::new(amplitudes.iter().map(|&a| Complex64::new(a, 0.0)).collect())
    }

    /// Computational basis state `|index⟩` on `num_qubits` qubits.
    pub fn basis(num_qubits: usize, index: usize) -> Self {
        let mut amplitudes = vec![ZERO; 1 << num_qubits];
        amplitudes[index] = ONE;
        Self {
            num_qubits,
            amplitudes,
        }
    }

    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    /// Unitary image `U|ψ⟩` for a gate acting on the whole register.
    pub fn evolve(&self, u: &UnitaryGate) -> Result<Self> {
        if u.arity() != self.num_qubits {
            return Err(Error::ArityMismatch {
                arity: u.arity(),
                targets: self.num_qubits,
            });
        }
        Ok(Self {
            num_qubits: self.num_qubits,
            amplitudes: u.matrix().matvec(&self.amplitudes),
        })
    }
}

/// (|00⟩ + |11⟩)/√2
pub fn bell_phi() -> StateVector {
    let s = Complex64::new(FRAC_1_SQRT_2, 0.0);
    StateVector {
        num_qubits: 2,
        amplitudes: vec![s, ZERO, ZERO, s],
    }
}

/// (|0⟩ + |1⟩)/√2
pub fn plus_state() -> StateVector {
    let s = Complex64::new(FRAC_1_SQRT_2, 0.0);
    StateVector {
        num_qubits: 1,
        amplitudes: vec![s, s],
    }
}

fn qubits_for_dim(dim: usize) -> Result<usize> {
    if dim == 0 || !dim.is_power_of_two() {
        return Err(Error::DimensionMismatch {
            expected: dim.next_power_of_two(),
            actual: dim,
        });
    }
    Ok(dim.trailing_zeros() as usize)
}

#[derive(Debug, Clone, PartialEq)]
pub struct UnitaryGate {
    arity: usize,
    matrix: CMatrix,
}

impl UnitaryGate {
    pub fn new(matrix: CMatrix) -> Result<Self> {
        let arity = qubits_for_dim(matrix.dim())?;
        let product = matrix.matmul(&matrix.dagger());
        let deviation = product.max_abs_diff(&CMatrix::identity(matrix.dim()));
        if deviation > 1e-12 {
            return Err(Error::InvariantViolation(format!(
                "gate is not unitary (|UU† - 1| = {deviation:e})"
            )));
        }
        Ok(Self { arity, matrix })
    }

    pub fn arity(&self) -> usize {
        self.arity
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn dagger(&self) -> Self {
        Self {
            arity: self.arity,
            matrix: self.matrix.dagger(),
        }
    }

    pub fn kron(&self, other: &UnitaryGate) -> Self {
        Self {
            arity: self.arity + other.arity,
            matrix: self.matrix.kron(&other.matrix),
        }
    }

    fn known(arity: usize, rows: Vec<Complex64>) -> Self {
        Self {
            arity,
            matrix: CMatrix::from_vec(1 << arity, rows),
        }
    }

    pub fn identity(arity: usize) -> Self {
        Self {
            arity,
            matrix: CMatrix::identity(1 << arity),
        }
    }

    pub fn pauli_x() -> Self {
        Self::known(1, vec![ZERO, ONE, ONE, ZERO])
    }

    pub fn pauli_y() -> Self {
        let i = Complex64::new(0.0, 1.0);
        Self::known(1, vec![ZERO, -i, i, ZERO])
    }

    pub fn pauli_z() -> Self {
        Self::known(1, vec![ONE, ZERO, ZERO, -ONE])
    }

    pub fn hadamard() -> Self {
        let s = Complex64::new(FRAC_1_SQRT_2, 0.0);
        Self::known(1, vec![s, s, s, -s])
    }

    /// exp(-iθσx/2)
    pub fn rx(theta: f64) -> Self {
        let c = Complex64::new((theta / 2.0).cos(), 0.0);
        let s = Complex64::new(0.0, -(theta / 2.0).sin());
        Self::known(1, vec![c, s, s, c])
    }

    /// Control is the first target, flip target the second.
    pub fn cnot() -> Self {
        let mut rows = vec![ZERO; 16];
        rows[0] = ONE;
        rows[5] = ONE;
        rows[11] = ONE;
        rows[14] = ONE;
        Self::known(2, rows)
    }

    pub fn swap() -> Self {
        let mut rows = vec![ZERO; 16];
        rows[0] = ONE;
        rows[6] = ONE;
        rows[9] = ONE;
        rows[15] = ONE;
        Self::known(2, rows)
    }
}

/// Hermitian, positive, unit-trace operator on `num_qubits` qubits.
///
/// A zero-qubit density matrix is the scalar `[1]`; it is what remains after
/// measuring the only qubit of a register.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    num_qubits: usize,
    matrix: CMatrix,
}

impl DensityMatrix {
    /// Validating constructor: runs all three invariant checks.
    pub fn new(matrix: CMatrix) -> Result<Self> {
        let num_qubits = qubits_for_dim(matrix.dim())?;
        let rho = Self { num_qubits, matrix };
        rho.validate()?;
        Ok(rho)
    }

    /// Wraps a matrix produced by a trace-preserving completely positive map.
    pub(crate) fn from_channel_output(matrix: CMatrix) -> Self {
        let num_qubits = matrix.dim().trailing_zeros() as usize;
        let mut rho = Self { num_qubits, matrix };
        rho.clean();
        rho
    }

    pub fn maximally_mixed(num_qubits: usize) -> Self {
        let dim = 1 << num_qubits;
        Self {
            num_qubits,
            matrix: CMatrix::identity(dim).scale(1.0 / dim as f64),
        }
    }

    pub fn basis(num_qubits: usize, index: usize) -> Self {
        make_pure(&StateVector::basis(num_qubits, index))
    }

    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    pub fn dim(&self) -> usize {
        self.matrix.dim()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> CMatrix {
        self.matrix
    }

    pub fn get(&self, i: usize, j: usize) -> Complex64 {
        self.matrix[(i, j)]
    }

    pub fn trace(&self) -> f64 {
        self.matrix.trace().re
    }

    pub fn min_eigenvalue(&self) -> f64 {
        linalg::hermitian_min_eig(&self.matrix).unwrap_or(f64::NEG_INFINITY)
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        linalg::hermitian_eigenvalues(&self.matrix).unwrap_or_default()
    }

    /// Checks Hermiticity, unit trace, and positivity at [`STATE_TOL`].
    pub fn validate(&self) -> Result<()> {
        let herm = self.matrix.hermiticity_deviation();
        if herm > STATE_TOL {
            return Err(Error::InvariantViolation(format!(
                "density matrix not Hermitian (deviation {herm:e})"
            )));
        }
        let tr = self.matrix.trace();
        if (tr - ONE).norm() > STATE_TOL {
            return Err(Error::InvariantViolation(format!(
                "density matrix trace {tr} differs from 1"
            )));
        }
        let min = linalg::hermitian_min_eig(&self.matrix)?;
        if min < -STATE_TOL {
            return Err(Error::InvariantViolation(format!(
                "density matrix has negative eigenvalue {min:e}"
            )));
        }
        Ok(())
    }

    /// Symmetrize and renormalize against floating-point drift.
    pub(crate) fn clean(&mut self) {
        self.matrix = self.matrix.hermitian_part();
        let tr = self.matrix.trace().re;
        if tr > 0.0 && (tr - 1.0).abs() > 0.0 {
            self.matrix = self.matrix.scale(1.0 / tr);
        }
    }

    /// Convex combination `Σ wᵢ ρᵢ` of states on the same register.
    pub fn mixture(parts: &[(f64, &DensityMatrix)]) -> Result<Self> {
        let first = parts.first().ok_or(Error::EmptyKeepSet)?.1;
        let mut acc = CMatrix::zeros(first.dim());
        for (w, rho) in parts {
            if rho.dim() != first.dim() {
                return Err(Error::DimensionMismatch {
                    expected: first.dim(),
                    actual: rho.dim(),
                });
            }
            acc = &acc + &rho.matrix.scale(*w);
        }
        Ok(Self::from_channel_output(acc))
    }
}

/// |ψ⟩⟨ψ|
pub fn make_pure(psi: &StateVector) -> DensityMatrix {
    DensityMatrix {
        num_qubits: psi.num_qubits,
        matrix: CMatrix::outer(&psi.amplitudes, &psi.amplitudes),
    }
}

/// Kronecker product with `a`'s qubits first.
pub fn tensor(a: &DensityMatrix, b: &DensityMatrix) -> DensityMatrix {
    DensityMatrix {
        num_qubits: a.num_qubits + b.num_qubits,
        matrix: a.matrix.kron(&b.matrix),
    }
}

pub(crate) fn check_targets(targets: &[usize], num_qubits: usize) -> Result<()> {
    for (k, &t) in targets.iter().enumerate() {
        if t >= num_qubits {
            return Err(Error::QubitOutOfRange {
                index: t,
                num_qubits,
            });
        }
        if targets[..k].contains(&t) {
            return Err(Error::DuplicateQubit(t));
        }
    }
    Ok(())
}

#[inline]
fn bit_of(index: usize, qubit: usize, num_qubits: usize) -> usize {
    (index >> (num_qubits - 1 - qubit)) & 1
}

/// Gathers the bits of `index` at `qubits` into a local index (first listed qubit most significant).
#[inline]
fn gather(index: usize, qubits: &[usize], num_qubits: usize) -> usize {
    qubits
        .iter()
        .fold(0, |acc, &q| (acc << 1) | bit_of(index, q, num_qubits))
}

/// Overwrites the bits of `index` at `qubits` with the bits of `local`.
#[inline]
fn scatter(index: usize, local: usize, qubits: &[usize], num_qubits: usize) -> usize {
    let k = qubits.len();
    let mut out = index;
    for (pos, &q) in qubits.iter().enumerate() {
        let shift = num_qubits - 1 - q;
        let bit = (local >> (k - 1 - pos)) & 1;
        out = (out & !(1 << shift)) | (bit << shift);
    }
    out
}

/// Left-multiplies `m` by `u` embedded on `targets`.
pub(crate) fn apply_left(m: &CMatrix, u: &CMatrix, targets: &[usize], num_qubits: usize) -> CMatrix {
    let dim = m.dim();
    let local = u.dim();
    let mut out = CMatrix::zeros(dim);
    let mask = scatter(0, local - 1, targets, num_qubits);
    for base in (0..dim).filter(|i| i & mask == 0) {
        let rows: Vec<usize> = (0..local)
            .map(|l| scatter(base, l, targets, num_qubits))
            .collect();
        for (a, &ra) in rows.iter().enumerate() {
            for (b, &rb) in rows.iter().enumerate() {
                let coeff = u[(a, b)];
                if coeff == ZERO {
                    continue;
                }
                for col in 0..dim {
                    out[(ra, col)] += coeff * m[(rb, col)];
                }
            }
        }
    }
    out
}

/// `U M U†` with `U` embedded on `targets`; `m` need not be Hermitian.
pub(crate) fn conjugate(m: &CMatrix, u: &CMatrix, targets: &[usize], num_qubits: usize) -> CMatrix {
    let um = apply_left(m, u, targets, num_qubits);
    // (U M) U† = (U (U M)†)†
    apply_left(&um.dagger(), u, targets, num_qubits).dagger()
}

/// `UρU†` with the gate embedded on `targets`, identity elsewhere.
pub fn apply_unitary(
    rho: &DensityMatrix,
    u: &UnitaryGate,
    targets: &[usize],
) -> Result<DensityMatrix> {
    if targets.len() != u.arity() {
        return Err(Error::ArityMismatch {
            arity: u.arity(),
            targets: targets.len(),
        });
    }
    check_targets(targets, rho.num_qubits)?;
    let out = conjugate(&rho.matrix, &u.matrix, targets, rho.num_qubits);
    Ok(DensityMatrix::from_channel_output(out))
}

/// Raw partial trace on an arbitrary square matrix over a register of `num_qubits`.
pub(crate) fn partial_trace_matrix(m: &CMatrix, keep: &[usize], num_qubits: usize) -> CMatrix {
    let traced: Vec<usize> = (0..num_qubits).filter(|q| !keep.contains(q)).collect();
    let kept_dim = 1 << keep.len();
    let mut out = CMatrix::zeros(kept_dim);
    for i in 0..kept_dim {
        let row_base = scatter(0, i, keep, num_qubits);
        for j in 0..kept_dim {
            let col_base = scatter(0, j, keep, num_qubits);
            let mut acc = ZERO;
            for t in 0..(1 << traced.len()) {
                let r = scatter(row_base, t, &traced, num_qubits);
                let c = scatter(col_base, t, &traced, num_qubits);
                acc += m[(r, c)];
            }
            out[(i, j)] = acc;
        }
    }
    out
}

/// Reduced state on `keep`, ordered as listed.
pub fn partial_trace(rho: &DensityMatrix, keep: &[usize]) -> Result<DensityMatrix> {
    if keep.is_empty() {
        return Err(Error::EmptyKeepSet);
    }
    check_targets(keep, rho.num_qubits)?;
    Ok(DensityMatrix::from_channel_output(partial_trace_matrix(
        &rho.matrix,
        keep,
        rho.num_qubits,
    )))
}

/// Transposes the tensor factors listed in `transpose_set`.
pub fn partial_transpose_matrix(m: &CMatrix, transpose_set: &[usize], num_qubits: usize) -> Result<CMatrix> {
    check_targets(transpose_set, num_qubits)?;
    let dim = m.dim();
    let mut out = CMatrix::zeros(dim);
    for i in 0..dim {
        for j in 0..dim {
            let li = gather(i, transpose_set, num_qubits);
            let lj = gather(j, transpose_set, num_qubits);
            let ni = scatter(i, lj, transpose_set, num_qubits);
            let nj = scatter(j, li, transpose_set, num_qubits);
            out[(ni, nj)] = m[(i, j)];
        }
    }
    Ok(out)
}

pub fn partial_transpose(rho: &DensityMatrix, transpose_set: &[usize]) -> Result<CMatrix> {
    partial_transpose_matrix(&rho.matrix, transpose_set, rho.num_qubits)
}

/// ⟨ψ|ρ|ψ⟩
pub fn overlap(rho: &DensityMatrix, psi: &StateVector) -> Result<f64> {
    if rho.dim() != psi.amplitudes.len() {
        return Err(Error::DimensionMismatch {
            expected: rho.dim(),
            actual: psi.amplitudes.len(),
        });
    }
    Ok(rho.matrix.expectation(&psi.amplitudes).re.clamp(0.0, 1.0))
}

/// Embeds `local ⊗ rest` where `local` lives on `targets` and `rest` on the
/// remaining qubits in ascending order.
pub(crate) fn embed_product(
    local: &CMatrix,
    targets: &[usize],
    rest: &CMatrix,
    num_qubits: usize,
) -> CMatrix {
    let others: Vec<usize> = (0..num_qubits).filter(|q| !targets.contains(q)).collect();
    let dim = 1 << num_qubits;
    let mut out = CMatrix::zeros(dim);
    for i in 0..dim {
        let ti = gather(i, targets, num_qubits);
        let oi = gather(i, &others, num_qubits);
        for j in 0..dim {
            let tj = gather(j, targets, num_qubits);
            let oj = gather(j, &others, num_qubits);
            out[(i, j)] = local[(ti, tj)] * rest[(oi, oj)];
        }
    }
    out
}
