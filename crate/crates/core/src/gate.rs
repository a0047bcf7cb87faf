//! Teleported CNOT on logical qubits, Choi matrices, average gate fidelity,
//! and the PPT test for entangling gates.
//!
//! Choi convention: `C = Σᵢⱼ |i⟩⟨j| ⊗ ℰ(|i⟩⟨j|)` with the input copy first, so
//! for a two-qubit channel the qubits of `C` are `[in_A, in_B, out_A, out_B]`
//! and `tr C = 4`.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::{hermitian_min_eig, CMatrix, ZERO};
use crate::noise::{noisy_gate, noisy_measure, Basis, NoiseParams};
use crate::purify::{nested_pump, CostReport, PumpConfig, PumpResult};
use crate::state::{
    partial_trace_matrix, partial_transpose_matrix, tensor, DensityMatrix, StateVector,
    UnitaryGate,
};

pub const CHOI_TOL: f64 = 1e-9;
/// `ppt_min_eig` below `-ENTANGLING_TOL` counts as entangling.
pub const ENTANGLING_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct ChoiMatrix {
    dim_in: usize,
    matrix: CMatrix,
}

impl ChoiMatrix {
    /// Validating constructor.
    pub fn new(matrix: CMatrix) -> Result<Self> {
        let dim = matrix.dim();
        let dim_in = (dim as f64).sqrt().round() as usize;
        if dim_in * dim_in != dim || !dim_in.is_power_of_two() {
            return Err(Error::DimensionMismatch {
                expected: dim_in * dim_in,
                actual: dim,
            });
        }
        let c = Self { dim_in, matrix };
        c.validate()?;
        Ok(c)
    }

    fn unchecked(dim_in: usize, matrix: CMatrix) -> Self {
        Self {
            dim_in,
            matrix: matrix.hermitian_part(),
        }
    }

    /// Choi matrix of `ρ ↦ UρU†`.
    pub fn of_unitary(u: &UnitaryGate) -> Self {
        let omega = omega_u(u);
        Self::unchecked(u.matrix().dim(), CMatrix::outer(&omega, &omega))
    }

    pub fn dim_in(&self) -> usize {
        self.dim_in
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    fn qubits(&self) -> usize {
        2 * self.dim_in.trailing_zeros() as usize
    }

    /// Complete positivity, trace preservation, and `tr C = d`.
    pub fn validate(&self) -> Result<()> {
        let herm = self.matrix.hermiticity_deviation();
        if herm > CHOI_TOL {
            return Err(Error::InvariantViolation(format!(
                "Choi matrix not Hermitian (deviation {herm:e})"
            )));
        }
        let min = hermitian_min_eig(&self.matrix)?;
        if min < -CHOI_TOL {
            return Err(Error::InvariantViolation(format!(
                "Choi matrix not positive (min eigenvalue {min:e})"
            )));
        }
        let n = self.qubits();
        let inputs: Vec<usize> = (0..n / 2).collect();
        let reduced = partial_trace_matrix(&self.matrix, &inputs, n);
        let dev = reduced.max_abs_diff(&CMatrix::identity(self.dim_in));
        if dev > CHOI_TOL {
            return Err(Error::InvariantViolation(format!(
                "channel not trace preserving (deviation {dev:e})"
            )));
        }
        let tr = self.matrix.trace().re;
        if (tr - self.dim_in as f64).abs() > CHOI_TOL {
            return Err(Error::InvariantViolation(format!(
                "Choi trace {tr} differs from {}",
                self.dim_in
            )));
        }
        Ok(())
    }

    /// Applies the channel: `ℰ(ρ) = tr_in[C (ρᵀ ⊗ 𝟙)]`.
    pub fn apply(&self, rho: &CMatrix) -> CMatrix {
        let d = self.dim_in;
        assert_eq!(rho.dim(), d, "input dimension mismatch");
        let mut out = CMatrix::zeros(d);
        for a in 0..d {
            for b in 0..d {
                let mut acc = ZERO;
                for i in 0..d {
                    for j in 0..d {
                        // Σᵢⱼ ρᵢⱼ ℰ(|i⟩⟨j|)[a,b]
                        acc += rho[(i, j)] * self.matrix[(i * d + a, j * d + b)];
                    }
                }
                out[(a, b)] = acc;
            }
        }
        out
    }
}

/// `(𝟙 ⊗ U) Σᵢ |ii⟩`, unnormalized.
fn omega_u(u: &UnitaryGate) -> Vec<Complex64> {
    let d = u.matrix().dim();
    let mut v = vec![ZERO; d * d];
    for i in 0..d {
        for a in 0..d {
            v[i * d + a] = u.matrix()[(a, i)];
        }
    }
    v
}

/// Choi of `ρ ↦ qUρU† + (1−q)𝟙/d·tr ρ`.
pub fn choi_of_noisy_gate(u: &UnitaryGate, q: f64) -> Result<ChoiMatrix> {
    crate::error::check_range("q", q, 0.0, 1.0, "[0, 1]")?;
    let ideal = ChoiMatrix::of_unitary(u);
    let d = ideal.dim_in;
    let noise = CMatrix::identity(d * d).scale(1.0 / d as f64);
    let m = &ideal.matrix.scale(q) + &noise.scale(1.0 - q);
    Ok(ChoiMatrix::unchecked(d, m))
}

/// `F̄ = (d·F_pro + 1)/(d + 1)` with `F_pro = ⟨Ψ_U|C/d|Ψ_U⟩`.
pub fn avg_gate_fidelity(choi: &ChoiMatrix, target: &UnitaryGate) -> Result<f64> {
    let d = target.matrix().dim();
    if d != choi.dim_in {
        return Err(Error::DimensionMismatch {
            expected: choi.dim_in,
            actual: d,
        });
    }
    let df = d as f64;
    let omega = omega_u(target);
    // |Ψ_U⟩ = Ω_U/√d, so F_pro = ⟨Ω_U|C|Ω_U⟩/d²
    let f_pro = choi.matrix.expectation(&omega).re / (df * df);
    Ok(((df * f_pro + 1.0) / (df + 1.0)).clamp(0.0, 1.0))
}

/// Bipartition of the Choi qubits `[in_A, in_B, out_A, out_B]`: the side that
/// holds particle A's input and output copies.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Cut {
    a_side: [usize; 2],
}

impl Cut {
    pub fn new(a_side: &[usize]) -> Result<Self> {
        let mut s = a_side.to_vec();
        s.sort_unstable();
        match s.as_slice() {
            [i, o] if *i < 2 && *o == i + 2 => Ok(Self { a_side: [*i, *o] }),
            _ => Err(Error::InvalidCut(format!(
                "{a_side:?} must pair one input copy with the matching output copy"
            ))),
        }
    }

    /// A-side = `{in_A, out_A}`.
    pub fn particle_a() -> Self {
        Self { a_side: [0, 2] }
    }

    pub fn a_side(&self) -> &[usize] {
        &self.a_side
    }
}

/// Partial transpose of the normalized Choi state on the A side of `cut`.
/// The gate can create entanglement across the cut iff the minimum
/// eigenvalue is negative.
pub fn is_entangling(choi: &ChoiMatrix, cut: &Cut) -> Result<(bool, f64)> {
    if choi.dim_in != 4 {
        return Err(Error::InvalidCut(format!(
            "bipartite cut needs a two-qubit channel, got input dimension {}",
            choi.dim_in
        )));
    }
    let state = choi.matrix.scale(1.0 / choi.dim_in as f64);
    let pt = partial_transpose_matrix(&state, cut.a_side(), 4)?;
    let min = hermitian_min_eig(&pt)?;
    Ok((min < -ENTANGLING_TOL, min))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GateMetrics {
    pub avg_fidelity: f64,
    pub error_rate: f64,
    pub entangling: bool,
    pub ppt_min_eig: f64,
}

impl GateMetrics {
    pub fn of(choi: &ChoiMatrix, target: &UnitaryGate) -> Result<Self> {
        let avg_fidelity = avg_gate_fidelity(choi, target)?;
        let (entangling, ppt_min_eig) = is_entangling(choi, &Cut::particle_a())?;
        Ok(Self {
            avg_fidelity,
            error_rate: 1.0 - avg_fidelity,
            entangling,
            ppt_min_eig,
        })
    }
}

// Teleportation register: reference qubits R_A, R_B, logical qubits, then the pair.
const A1: usize = 2;
const B1: usize = 3;
const A2: usize = 4;

/// Effective channel on `(A1, B1)` when the CNOT is teleported through `pair`
/// (shared by `A2`, `B2`):
///
/// 1. CNOT `A1 → A2`,
/// 2. Z measurement of `A2`, `σx` on `B2` for outcome 1,
/// 3. CNOT `B2 → B1`,
/// 4. X measurement of `B2`, `σz` on `A1` for outcome 1.
///
/// Both CNOTs are noisy two-subsystem gates with reliability `q_local`,
/// both measurements have reliability `η`, and outcomes are averaged with
/// their probabilities after correction.
pub fn teleported_cnot_channel(pair: &DensityMatrix, noise: &NoiseParams) -> Result<ChoiMatrix> {
    if pair.num_qubits() != 2 {
        return Err(Error::DimensionMismatch {
            expected: 4,
            actual: pair.dim(),
        });
    }
    pair.validate()?;
    noise.validate()?;

    let mut omega = vec![ZERO; 16];
    for i in 0..4 {
        omega[i * 4 + i] = Complex64::new(0.5, 0.0);
    }
    let reference = crate::state::make_pure(&StateVector::new(omega)?);
    let mut rho = tensor(&reference, pair);
    let cnot = UnitaryGate::cnot();

    rho = noisy_gate(&rho, &cnot, &[A1, A2], noise.q_local)?;
    // A2 is removed, B2 moves to index 4
    let b2 = A2;
    let m = noisy_measure(&rho, A2, Basis::Z, noise.eta)?;
    rho = m.average(|k, post| correct(post, k, &UnitaryGate::pauli_x(), b2, noise))?;

    rho = noisy_gate(&rho, &cnot, &[b2, B1], noise.q_local)?;
    let m = noisy_measure(&rho, b2, Basis::X, noise.eta)?;
    rho = m.average(|k, post| correct(post, k, &UnitaryGate::pauli_z(), A1, noise))?;

    debug_assert_eq!(rho.num_qubits(), 4);
    Ok(ChoiMatrix::unchecked(4, rho.into_matrix().scale(4.0)))
}

fn correct(
    post: &DensityMatrix,
    outcome: usize,
    pauli: &UnitaryGate,
    target: usize,
    noise: &NoiseParams,
) -> Result<DensityMatrix> {
    if outcome == 0 {
        return Ok(post.clone());
    }
    let q = if noise.noiseless_corrections {
        1.0
    } else {
        noise.q_local
    };
    noisy_gate(post, pauli, &[target], q)
}

#[derive(Debug, Clone)]
pub struct LogicalGateReport {
    pub metrics: GateMetrics,
    pub cost: CostReport,
    pub pump: PumpResult,
    pub choi: ChoiMatrix,
}

impl LogicalGateReport {
    pub fn pair_fidelity(&self) -> f64 {
        self.pump.final_pair.fidelity()
    }
}

/// Nested pumping followed by teleportation through the Werner-twirled
/// purified pair.
pub fn logical_gate_metrics(noise: &NoiseParams, config: &PumpConfig) -> Result<LogicalGateReport> {
    let pump = nested_pump(noise, config)?;
    let pair = pump.final_pair.werner_twirled();
    pair.validate()?;
    let choi = teleported_cnot_channel(&pair, noise)?;
    choi.validate()?;
    let metrics = GateMetrics::of(&choi, &UnitaryGate::cnot())?;
    Ok(LogicalGateReport {
        metrics,
        cost: pump.cost.clone(),
        pump,
        choi,
    })
}
