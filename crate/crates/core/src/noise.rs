//! Error models: depolarizing two-subsystem gates, imperfect measurements,
//! Werner and Bell-diagonal pairs, and heralded raw-pair generation.

use std::f64::consts::FRAC_1_SQRT_2;

use rand::Rng;

use crate::error::{check_range, Error, Result};
use crate::linalg::CMatrix;
use crate::state::{
    self, apply_unitary, check_targets, embed_product, make_pure, partial_trace_matrix, tensor,
    DensityMatrix, StateVector, UnitaryGate,
};

/// Hilbert-space dimension acted on by a two-qubit gate.
pub const TWO_QUBIT_DIM: u32 = 4;

/// `p = (1 − q)(d − 1)/d`
pub fn error_rate_from_q(q: f64, d: u32) -> Result<f64> {
    check_range("q", q, 0.0, 1.0, "[0, 1]")?;
    let d = f64::from(d.max(1));
    Ok((1.0 - q) * (d - 1.0) / d)
}

/// Inverse of [`error_rate_from_q`].
pub fn q_from_error_rate(p: f64, d: u32) -> Result<f64> {
    let d = f64::from(d.max(2));
    let max = (d - 1.0) / d;
    if !(p.is_finite() && (0.0..=max).contains(&p)) {
        return Err(Error::ParameterOutOfRange {
            name: "p",
            value: p,
            range: "[0, (d-1)/d]",
        });
    }
    Ok(1.0 - p * d / (d - 1.0))
}

/// Reliability parameters of the physical operations.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseParams {
    /// Reliability of two-subsystem operations inside one particle.
    pub q_local: f64,
    /// Measurement reliability.
    pub eta: f64,
    /// Reliability of the physical two-particle gate.
    pub q_two: f64,
    /// Success probability of the heralded two-particle gate.
    pub p_herald: f64,
    /// Treat the classically controlled Pauli corrections as perfect. When
    /// false they pass through a single-qubit depolarizing channel with
    /// reliability `q_local`.
    pub noiseless_corrections: bool,
}

impl NoiseParams {
    pub fn new(q_local: f64, eta: f64, q_two: f64, p_herald: f64) -> Result<Self> {
        let n = Self {
            q_local,
            eta,
            q_two,
            p_herald,
            noiseless_corrections: true,
        };
        n.validate()?;
        Ok(n)
    }

    pub fn perfect() -> Self {
        Self {
            q_local: 1.0,
            eta: 1.0,
            q_two: 1.0,
            p_herald: 1.0,
            noiseless_corrections: true,
        }
    }

    /// Builds parameters from error rates, measuring with `eta = q_local`.
    pub fn from_error_rates(p_local: f64, p_two: f64) -> Result<Self> {
        let q_local = q_from_error_rate(p_local, TWO_QUBIT_DIM)?;
        let q_two = q_from_error_rate(p_two, TWO_QUBIT_DIM)?;
        Self::new(q_local, q_local, q_two, 1.0)
    }

    pub fn with_eta(self, eta: f64) -> Result<Self> {
        let n = Self { eta, ..self };
        n.validate()?;
        Ok(n)
    }

    pub fn with_p_herald(self, p_herald: f64) -> Result<Self> {
        let n = Self { p_herald, ..self };
        n.validate()?;
        Ok(n)
    }

    pub fn validate(&self) -> Result<()> {
        check_range("q_local", self.q_local, 0.0, 1.0, "[0, 1]")?;
        check_range("eta", self.eta, 0.0, 1.0, "[0, 1]")?;
        check_range("q_two", self.q_two, 0.0, 1.0, "[0, 1]")?;
        if !(self.p_herald > 0.0 && self.p_herald <= 1.0) {
            return Err(Error::ParameterOutOfRange {
                name: "p_herald",
                value: self.p_herald,
                range: "(0, 1]",
            });
        }
        Ok(())
    }

    pub fn p_local(&self) -> f64 {
        3.0 * (1.0 - self.q_local) / 4.0
    }

    pub fn p_two(&self) -> f64 {
        3.0 * (1.0 - self.q_two) / 4.0
    }
}

/// `q·UρU† + (1−q)·(𝟙/2ᵏ on targets) ⊗ tr_targets(ρ)` for a k-qubit gate.
pub fn noisy_gate(
    rho: &DensityMatrix,
    u: &UnitaryGate,
    targets: &[usize],
    q: f64,
) -> Result<DensityMatrix> {
    check_range("q", q, 0.0, 1.0, "[0, 1]")?;
    let ideal = apply_unitary(rho, u, targets)?;
    if q == 1.0 {
        return Ok(ideal);
    }
    let depolarized = depolarize(rho, targets)?;
    let mixed = &ideal.matrix().scale(q) + &depolarized.scale(1.0 - q);
    Ok(DensityMatrix::from_channel_output(mixed))
}

/// `(𝟙 on targets) ⊗ tr_targets(ρ)`, normalized.
fn depolarize(rho: &DensityMatrix, targets: &[usize]) -> Result<CMatrix> {
    let n = rho.num_qubits();
    check_targets(targets, n)?;
    let others: Vec<usize> = (0..n).filter(|q| !targets.contains(q)).collect();
    let rest = partial_trace_matrix(rho.matrix(), &others, n);
    let local_dim = 1 << targets.len();
    let local = CMatrix::identity(local_dim).scale(1.0 / local_dim as f64);
    Ok(embed_product(&local, targets, &rest, n))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Basis {
    Z,
    X,
}

impl std::str::FromStr for Basis {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "Z" | "z" => Ok(Basis::Z),
            "X" | "x" => Ok(Basis::X),
            other => Err(Error::InvalidBasis(other.to_string())),
        }
    }
}

/// Outcome statistics of a two-outcome measurement and the post-measurement
/// states on the remaining qubits.
#[derive(Debug, Clone)]
pub struct MeasurementOutcome {
    pub probabilities: [f64; 2],
    pub post_states: [DensityMatrix; 2],
}

impl MeasurementOutcome {
    /// `Σₖ pₖ ρₖ`, optionally after per-outcome processing.
    pub fn average<F>(&self, mut per_outcome: F) -> Result<DensityMatrix>
    where
        F: FnMut(usize, &DensityMatrix) -> Result<DensityMatrix>,
    {
        let a = per_outcome(0, &self.post_states[0])?;
        let b = per_outcome(1, &self.post_states[1])?;
        DensityMatrix::mixture(&[(self.probabilities[0], &a), (self.probabilities[1], &b)])
    }
}

/// Below this an outcome is treated as impossible and gets a placeholder state.
const NEGLIGIBLE_PROBABILITY: f64 = 1e-12;

/// Measures `target` with the two-element POVM
/// `P⁽⁰⁾ = η|0⟩⟨0| + (1−η)|1⟩⟨1|`, `P⁽¹⁾ = η|1⟩⟨1| + (1−η)|0⟩⟨0|`
/// (rotated by a Hadamard for the X basis). The measured qubit is removed
/// from the register; the post state of outcome k is the η-weighted mix of
/// the two ideal projection remainders.
pub fn noisy_measure(
    rho: &DensityMatrix,
    target: usize,
    basis: Basis,
    eta: f64,
) -> Result<MeasurementOutcome> {
    check_range("eta", eta, 0.0, 1.0, "[0, 1]")?;
    let n = rho.num_qubits();
    check_targets(&[target], n)?;
    let rotated;
    let rho = match basis {
        Basis::Z => rho,
        Basis::X => {
            rotated = apply_unitary(rho, &UnitaryGate::hadamard(), &[target])?;
            &rotated
        }
    };

    let others: Vec<usize> = (0..n).filter(|&q| q != target).collect();
    let remainders = [0usize, 1].map(|bit| projected_remainder(rho.matrix(), target, bit, &others, n));

    let mut probabilities = [0.0; 2];
    let mut post = Vec::with_capacity(2);
    for k in 0..2 {
        let unnormalized =
            &remainders[k].scale(eta) + &remainders[1 - k].scale(1.0 - eta);
        let p = unnormalized.trace().re.max(0.0);
        probabilities[k] = p;
        post.push(if p > NEGLIGIBLE_PROBABILITY {
            DensityMatrix::from_channel_output(unnormalized.scale(1.0 / p))
        } else {
            DensityMatrix::maximally_mixed(others.len())
        });
    }
    let total = probabilities[0] + probabilities[1];
    probabilities = probabilities.map(|p| p / total);
    let [p0, p1]: [DensityMatrix; 2] = post.try_into().expect("two outcomes");
    Ok(MeasurementOutcome {
        probabilities,
        post_states: [p0, p1],
    })
}

/// `tr_target(Π_bit ρ Π_bit)` as a matrix on `others`.
fn projected_remainder(m: &CMatrix, target: usize, bit: usize, others: &[usize], n: usize) -> CMatrix {
    let kept = others.len();
    let dim = 1 << kept;
    let shift = n - 1 - target;
    let expand = |local: usize| -> usize {
        let mut full = 0;
        for (pos, &q) in others.iter().enumerate() {
            let b = (local >> (kept - 1 - pos)) & 1;
            full |= b << (n - 1 - q);
        }
        full | (bit << shift)
    };
    let mut out = CMatrix::zeros(dim);
    for i in 0..dim {
        let fi = expand(i);
        for j in 0..dim {
            out[(i, j)] = m[(fi, expand(j))];
        }
    }
    out
}

/// Bell basis in the fixed order |Φ⁺⟩, |Ψ⁺⟩, |Ψ⁻⟩, |Φ⁻⟩.
pub fn bell_basis() -> [StateVector; 4] {
    let s = FRAC_1_SQRT_2;
    [
        [s, 0.0, 0.0, s],
        [0.0, s, s, 0.0],
        [0.0, s, -s, 0.0],
        [s, 0.0, 0.0, -s],
    ]
    .map(|a| StateVector::from_real(&a).expect("Bell states are normalized"))
}

/// Two-qubit state diagonal in the Bell basis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BellDiagonal {
    /// Weights of |Φ⁺⟩, |Ψ⁺⟩, |Ψ⁻⟩, |Φ⁻⟩.
    pub lambda: [f64; 4],
}

impl BellDiagonal {
    pub fn new(lambda: [f64; 4]) -> Result<Self> {
        let b = Self { lambda };
        b.validate()?;
        Ok(b)
    }

    pub fn perfect() -> Self {
        Self {
            lambda: [1.0, 0.0, 0.0, 0.0],
        }
    }

    /// Werner pair with the given fidelity to |Φ⁺⟩.
    pub fn werner_with_fidelity(fidelity: f64) -> Result<Self> {
        check_range("fidelity", fidelity, 0.0, 1.0, "[0, 1]")?;
        let rest = (1.0 - fidelity) / 3.0;
        Ok(Self {
            lambda: [fidelity, rest, rest, rest],
        })
    }

    pub fn fidelity(&self) -> f64 {
        self.lambda[0]
    }

    pub fn validate(&self) -> Result<()> {
        if self.lambda.iter().any(|&l| !l.is_finite() || l < -1e-12) {
            return Err(Error::InvariantViolation(format!(
                "negative Bell coefficient in {:?}",
                self.lambda
            )));
        }
        let sum: f64 = self.lambda.iter().sum();
        if (sum - 1.0).abs() > 1e-10 {
            return Err(Error::InvariantViolation(format!(
                "Bell coefficients sum to {sum}"
            )));
        }
        Ok(())
    }

    pub fn to_density_matrix(&self) -> DensityMatrix {
        let mut m = CMatrix::zeros(4);
        for (l, b) in self.lambda.iter().zip(bell_basis()) {
            m = &m + &make_pure(&b).into_matrix().scale(*l);
        }
        DensityMatrix::from_channel_output(m)
    }

    /// The Werner state with the same fidelity.
    pub fn werner_twirled(&self) -> DensityMatrix {
        let x = (4.0 * self.fidelity() - 1.0) / 3.0;
        werner_matrix(x)
    }

    fn normalized(lambda: [f64; 4]) -> Self {
        let clipped = lambda.map(|l| l.max(0.0));
        let sum: f64 = clipped.iter().sum();
        Self {
            lambda: clipped.map(|l| l / sum),
        }
    }
}

/// `x|Φ⁺⟩⟨Φ⁺| + (1−x)𝟙/4`, defined for `x ∈ [−1/3, 1]`.
pub fn werner(x: f64) -> Result<DensityMatrix> {
    check_range("x", x, -1.0 / 3.0, 1.0, "[-1/3, 1]")?;
    Ok(werner_matrix(x))
}

fn werner_matrix(x: f64) -> DensityMatrix {
    let phi = make_pure(&state::bell_phi()).into_matrix();
    let m = &phi.scale(x) + &CMatrix::identity(4).scale((1.0 - x) / 4.0);
    DensityMatrix::from_channel_output(m)
}

/// Drops the off-diagonal Bell-basis elements: `λᵢ = ⟨Bᵢ|ρ|Bᵢ⟩`.
pub fn bell_twirl(rho: &DensityMatrix) -> Result<BellDiagonal> {
    if rho.num_qubits() != 2 {
        return Err(Error::DimensionMismatch {
            expected: 4,
            actual: rho.dim(),
        });
    }
    let lambda = bell_basis().map(|b| rho.matrix().expectation(b.amplitudes()).re);
    Ok(BellDiagonal::normalized(lambda))
}

/// A heralded elementary pair.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RawPair {
    pub state: BellDiagonal,
    pub p_herald: f64,
    /// Mean number of gate attempts until the herald fires.
    pub attempts_expected: f64,
}

impl RawPair {
    /// Draws one gate attempt; true when the herald reports success.
    pub fn herald<R: Rng + ?Sized>(&self, rng: &mut R) -> bool {
        self.p_herald >= 1.0 || rng.gen::<f64>() < self.p_herald
    }
}

/// Noisy CNOT with reliability `q_two` on `|+⟩⊗|0⟩`, twirled to Bell-diagonal form.
pub fn raw_pair(noise: &NoiseParams) -> Result<RawPair> {
    noise.validate()?;
    let input = tensor(
        &make_pure(&state::plus_state()),
        &DensityMatrix::basis(1, 0),
    );
    let out = noisy_gate(&input, &UnitaryGate::cnot(), &[0, 1], noise.q_two)?;
    Ok(RawPair {
        state: bell_twirl(&out)?,
        p_herald: noise.p_herald,
        attempts_expected: 1.0 / noise.p_herald,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::hermitian_min_eig;
    use crate::state::{bell_phi, overlap, partial_trace, partial_transpose};

    #[test]
    fn error_rate_conversions() {
        assert_eq!(error_rate_from_q(1.0, 4).unwrap(), 0.0);
        assert!((error_rate_from_q(1.0 / 9.0, 4).unwrap() - 2.0 / 3.0).abs() < 1e-15);
        assert!((q_from_error_rate(0.15, 4).unwrap() - 0.8).abs() < 1e-15);
        assert!(q_from_error_rate(0.8, 4).is_err());
        assert!(error_rate_from_q(1.2, 4).is_err());
    }

    #[test]
    fn noisy_gate_limits() {
        let rho = tensor(&make_pure(&state::plus_state()), &DensityMatrix::basis(2, 1));
        let u = UnitaryGate::cnot();
        let ideal = apply_unitary(&rho, &u, &[0, 2]).unwrap();
        let one = noisy_gate(&rho, &u, &[0, 2], 1.0).unwrap();
        assert!(one.matrix().max_abs_diff(ideal.matrix()) < 1e-15);

        let zero = noisy_gate(&rho, &u, &[0, 2], 0.0).unwrap();
        let marg = partial_trace(&zero, &[1]).unwrap();
        let expected_marg = partial_trace(&rho, &[1]).unwrap();
        assert!(marg.matrix().max_abs_diff(expected_marg.matrix()) < 1e-14);
        let targets = partial_trace(&zero, &[0, 2]).unwrap();
        assert!(targets.matrix().max_abs_diff(DensityMatrix::maximally_mixed(2).matrix()) < 1e-14);
    }

    #[test]
    fn measure_basis_state() {
        for eta in [0.0, 0.3, 0.9, 1.0] {
            let out = noisy_measure(&DensityMatrix::basis(1, 0), 0, Basis::Z, eta).unwrap();
            assert!((out.probabilities[0] - eta).abs() < 1e-15);
            let plus = make_pure(&state::plus_state());
            let out = noisy_measure(&plus, 0, Basis::Z, eta).unwrap();
            assert!((out.probabilities[0] - 0.5).abs() < 1e-15);
            let out = noisy_measure(&plus, 0, Basis::X, eta).unwrap();
            assert!((out.probabilities[0] - eta).abs() < 1e-14);
        }
    }

    #[test]
    fn ideal_measurement_collapses_bell_pair() {
        let bell = make_pure(&bell_phi());
        let out = noisy_measure(&bell, 0, Basis::Z, 1.0).unwrap();
        assert!((out.probabilities[0] - 0.5).abs() < 1e-15);
        assert!(out.post_states[0].matrix().max_abs_diff(DensityMatrix::basis(1, 0).matrix()) < 1e-15);
        assert!(out.post_states[1].matrix().max_abs_diff(DensityMatrix::basis(1, 1).matrix()) < 1e-15);
        // X-basis on a Bell pair leaves |±⟩ on the partner
        let out = noisy_measure(&bell, 1, Basis::X, 1.0).unwrap();
        let plus = make_pure(&state::plus_state());
        assert!(out.post_states[0].matrix().max_abs_diff(plus.matrix()) < 1e-15);
    }

    #[test]
    fn impossible_outcome_gets_placeholder() {
        let out = noisy_measure(&DensityMatrix::basis(2, 0), 0, Basis::Z, 1.0).unwrap();
        assert_eq!(out.probabilities[1], 0.0);
        assert!(out.post_states[1].validate().is_ok());
    }

    #[test]
    fn basis_tag_parsing() {
        assert_eq!("x".parse::<Basis>().unwrap(), Basis::X);
        assert!("Y".parse::<Basis>().is_err());
    }

    #[test]
    fn werner_limits_and_range() {
        let one = werner(1.0).unwrap();
        assert!(one.matrix().max_abs_diff(make_pure(&bell_phi()).matrix()) < 1e-15);
        let zero = werner(0.0).unwrap();
        assert!(zero.matrix().max_abs_diff(DensityMatrix::maximally_mixed(2).matrix()) < 1e-15);
        assert!(werner(-0.5).is_err());
        assert!(werner(1.01).is_err());
    }

    #[test]
    fn werner_entangled_iff_above_one_third() {
        for (x, entangled) in [(0.30, false), (0.33, false), (0.34, true), (0.40, true)] {
            let pt = partial_transpose(&werner(x).unwrap(), &[1]).unwrap();
            let min = hermitian_min_eig(&pt).unwrap();
            assert_eq!(min < -1e-10, entangled, "x = {x}, min eig {min}");
        }
        let pt = partial_transpose(&werner(1.0 / 3.0).unwrap(), &[1]).unwrap();
        assert!(hermitian_min_eig(&pt).unwrap().abs() < 1e-10);
    }

    #[test]
    fn twirl_fixed_point_and_werner() {
        let b = bell_twirl(&make_pure(&bell_phi())).unwrap();
        assert_eq!(b.lambda, [1.0, 0.0, 0.0, 0.0]);
        let bd = BellDiagonal::new([0.6, 0.1, 0.2, 0.1]).unwrap();
        let again = bell_twirl(&bd.to_density_matrix()).unwrap();
        for (a, b) in bd.lambda.iter().zip(again.lambda) {
            assert!((a - b).abs() < 1e-14);
        }
        let rho = werner(0.4).unwrap();
        let tw = bell_twirl(&rho).unwrap();
        assert!((tw.fidelity() - overlap(&rho, &bell_phi()).unwrap()).abs() < 1e-14);
    }

    #[test]
    fn raw_pair_basics() {
        let perfect = raw_pair(&NoiseParams::perfect()).unwrap();
        assert!((perfect.state.fidelity() - 1.0).abs() < 1e-14);
        let n = NoiseParams::new(1.0, 1.0, 0.8, 0.1).unwrap();
        let rp = raw_pair(&n).unwrap();
        assert!((rp.attempts_expected - 10.0).abs() < 1e-12);
        assert!((rp.state.fidelity() - (0.8 + 0.2 / 4.0)).abs() < 1e-14);
    }

    #[test]
    fn noise_params_validation() {
        assert!(NoiseParams::new(1.1, 1.0, 1.0, 1.0).is_err());
        assert!(NoiseParams::new(1.0, 1.0, 1.0, 0.0).is_err());
        let n = NoiseParams::from_error_rates(0.15, 0.15).unwrap();
        assert!((n.q_local - 0.8).abs() < 1e-15 && n.eta == n.q_local);
    }
}
