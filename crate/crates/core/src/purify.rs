//! Recurrence purification and nested entanglement pumping.
//!
//! One purification step is the DEJMPS recurrence step, simulated on the
//! 4-qubit register `[A_t, B_t, A_s, B_s]` (kept target pair first, sacrificed
//! source pair second):
//!
//! 1. noiseless local rotations `Rx(π/2)` on A's qubits and `Rx(−π/2)` on B's,
//! 2. bilateral CNOTs `A_t → A_s` and `B_t → B_s`, each a noisy
//!    two-subsystem gate with reliability `q_local`,
//! 3. Z measurements of `A_s` and `B_s` with reliability `η`,
//! 4. the kept pair survives when both outcomes coincide, and is twirled
//!    back to Bell-diagonal form.
//!
//! Pumping repeats the step with a fixed source quality. A failed step
//! destroys the target, so the whole level restarts from a fresh pair; the
//! expected cost follows from first-step analysis of that restart process.

use std::f64::consts::FRAC_PI_2;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Geometric};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::noise::{bell_twirl, noisy_gate, noisy_measure, raw_pair, Basis, BellDiagonal, NoiseParams};
use crate::state::{apply_unitary, tensor, DensityMatrix, UnitaryGate};

pub const MAX_NESTING_LEVELS: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PumpMode {
    ExpectedValue,
    MonteCarlo,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PumpConfig {
    pub nesting_levels: usize,
    pub max_steps_per_level: usize,
    /// Pumping a level stops once a step gains less fidelity than this.
    pub convergence_epsilon: f64,
    pub mode: PumpMode,
    /// Monte Carlo trial count.
    pub trials: u64,
    /// Master seed; trial `i` uses `seed + i`.
    pub seed: u64,
}

impl Default for PumpConfig {
    fn default() -> Self {
        Self {
            nesting_levels: 3,
            max_steps_per_level: 20,
            convergence_epsilon: 1e-4,
            mode: PumpMode::ExpectedValue,
            trials: 100_000,
            seed: 0,
        }
    }
}

impl PumpConfig {
    pub fn with_levels(self, nesting_levels: usize) -> Self {
        Self {
            nesting_levels,
            ..self
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.nesting_levels > MAX_NESTING_LEVELS {
            return Err(Error::ParameterOutOfRange {
                name: "nesting_levels",
                value: self.nesting_levels as f64,
                range: "[0, 4]",
            });
        }
        if self.max_steps_per_level == 0 {
            return Err(Error::ParameterOutOfRange {
                name: "max_steps_per_level",
                value: 0.0,
                range: ">= 1",
            });
        }
        if !(self.convergence_epsilon > 0.0 && self.convergence_epsilon.is_finite()) {
            return Err(Error::ParameterOutOfRange {
                name: "convergence_epsilon",
                value: self.convergence_epsilon,
                range: "> 0",
            });
        }
        if self.mode == PumpMode::MonteCarlo && self.trials == 0 {
            return Err(Error::ParameterOutOfRange {
                name: "trials",
                value: 0.0,
                range: ">= 1",
            });
        }
        Ok(())
    }
}

/// Expected resources to produce one output pair.
#[derive(Debug, Clone, PartialEq)]
pub struct CostReport {
    pub expected_raw_pairs: f64,
    pub expected_gate_attempts: f64,
    /// Expected purification steps executed at each nesting level (index 0 is
    /// level 1) per output pair.
    pub expected_steps_by_level: Vec<f64>,
    /// Probability that one complete pumping run of a level succeeds.
    pub success_prob_by_level: Vec<f64>,
}

/// Sample statistics from Monte Carlo mode.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McSummary {
    pub trials: u64,
    pub raw_pairs_mean: f64,
    pub raw_pairs_stderr: f64,
    pub gate_attempts_mean: f64,
    pub gate_attempts_stderr: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TracePoint {
    pub level: usize,
    pub step: usize,
    pub fidelity: f64,
}

#[derive(Debug, Clone)]
pub struct PumpResult {
    pub final_pair: BellDiagonal,
    pub cost: CostReport,
    pub fidelity_trace: Vec<TracePoint>,
    /// Success probability of every executed step, per level.
    pub step_success_by_level: Vec<Vec<f64>>,
    /// Converged pair of every level, starting with the raw pair.
    pub pairs_by_level: Vec<BellDiagonal>,
    pub monte_carlo: Option<McSummary>,
}

impl PumpResult {
    pub fn steps_total(&self) -> usize {
        self.step_success_by_level.iter().map(Vec::len).sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepOutcome {
    pub p_success: f64,
    pub out: BellDiagonal,
}

const MIN_SUCCESS: f64 = 1e-12;

/// One noisy DEJMPS step. `target` is kept, `source` is measured.
pub fn recurrence_step(
    target: &BellDiagonal,
    source: &BellDiagonal,
    noise: &NoiseParams,
) -> Result<StepOutcome> {
    target.validate()?;
    source.validate()?;
    noise.validate()?;

    let mut rho = tensor(&target.to_density_matrix(), &source.to_density_matrix());
    let rot_a = UnitaryGate::rx(FRAC_PI_2);
    let rot_b = UnitaryGate::rx(-FRAC_PI_2);
    for (q, rot) in [(0, &rot_a), (1, &rot_b), (2, &rot_a), (3, &rot_b)] {
        rho = apply_unitary(&rho, rot, &[q])?;
    }
    let cnot = UnitaryGate::cnot();
    rho = noisy_gate(&rho, &cnot, &[0, 2], noise.q_local)?;
    rho = noisy_gate(&rho, &cnot, &[1, 3], noise.q_local)?;

    // A_s is qubit 2; after removing it, B_s becomes qubit 2.
    let first = noisy_measure(&rho, 2, Basis::Z, noise.eta)?;
    let mut kept: Vec<(f64, DensityMatrix)> = Vec::with_capacity(2);
    for a in 0..2 {
        let second = noisy_measure(&first.post_states[a], 2, Basis::Z, noise.eta)?;
        let p = first.probabilities[a] * second.probabilities[a];
        kept.push((p, second.post_states[a].clone()));
    }
    let p_success: f64 = kept.iter().map(|(p, _)| p).sum();
    if p_success < MIN_SUCCESS {
        return Err(Error::InvariantViolation(format!(
            "recurrence step success probability {p_success:e} vanished"
        )));
    }
    let parts: Vec<(f64, &DensityMatrix)> =
        kept.iter().map(|(p, s)| (p / p_success, s)).collect();
    let out = bell_twirl(&DensityMatrix::mixture(&parts)?)?;
    Ok(StepOutcome {
        p_success: p_success.min(1.0),
        out,
    })
}

/// Pumping trajectory of one level, before cost accounting.
#[derive(Debug, Clone)]
struct Trajectory {
    /// `states[0]` is the initial target, `states[i]` the target after step i.
    states: Vec<BellDiagonal>,
    p_success: Vec<f64>,
}

fn pump_trajectory(
    initial: &BellDiagonal,
    source: &BellDiagonal,
    noise: &NoiseParams,
    config: &PumpConfig,
) -> Result<Trajectory> {
    let mut states = vec![*initial];
    let mut p_success = Vec::new();
    let mut current = *initial;
    for _ in 0..config.max_steps_per_level {
        let step = recurrence_step(&current, source, noise)?;
        let gain = step.out.fidelity() - current.fidelity();
        if gain <= 0.0 {
            // a step that does not help is never performed
            break;
        }
        states.push(step.out);
        p_success.push(step.p_success);
        current = step.out;
        if gain < config.convergence_epsilon {
            break;
        }
    }
    Ok(Trajectory { states, p_success })
}

/// Multiplier and step count of one level, in units of the cost of one input
/// pair: returns `(pairs consumed, steps executed)` per output pair.
///
/// An attempt consumes the initial target plus source i whenever steps 1..i−1
/// succeeded, and is repeated until all m steps succeed.
fn level_costs(p: &[f64]) -> (f64, f64) {
    let mut prefix = 1.0;
    let mut steps_per_attempt = 0.0;
    for &pj in p {
        steps_per_attempt += prefix;
        prefix *= pj;
    }
    let success = prefix;
    ((1.0 + steps_per_attempt) / success, steps_per_attempt / success)
}

fn assemble_cost(trajectories: &[Trajectory], p_herald: f64) -> CostReport {
    let per_level: Vec<(f64, f64)> = trajectories.iter().map(|t| level_costs(&t.p_success)).collect();
    let raw: f64 = per_level.iter().map(|(m, _)| m).product();
    // level-k pairs needed per output pair = product of the multipliers above k
    let mut steps = vec![0.0; per_level.len()];
    let mut needed = 1.0;
    for (k, (mult, s)) in per_level.iter().enumerate().rev() {
        steps[k] = needed * s;
        needed *= mult;
    }
    CostReport {
        expected_raw_pairs: raw,
        expected_gate_attempts: raw / p_herald,
        expected_steps_by_level: steps,
        success_prob_by_level: trajectories
            .iter()
            .map(|t| t.p_success.iter().product())
            .collect(),
    }
}

fn trace_of(trajectories: &[Trajectory], first_level: usize) -> Vec<TracePoint> {
    trajectories
        .iter()
        .enumerate()
        .flat_map(|(k, t)| {
            t.states.iter().enumerate().map(move |(step, s)| TracePoint {
                level: first_level + k,
                step,
                fidelity: s.fidelity(),
            })
        })
        .collect()
}

/// Pumps `initial` with identical copies of `source` until the fidelity gain
/// of a step drops below `config.convergence_epsilon`. Costs count the initial
/// target and every source as one raw pair.
pub fn pump_level(
    initial: &BellDiagonal,
    source: &BellDiagonal,
    noise: &NoiseParams,
    config: &PumpConfig,
) -> Result<PumpResult> {
    config.validate()?;
    let traj = pump_trajectory(initial, source, noise, config)?;
    let trajectories = vec![traj];
    finish(&trajectories, vec![*initial], noise, config, 1)
}

/// Raw pairs at level 0; level k pumps a converged level-(k−1) pair with
/// further converged level-(k−1) pairs.
pub fn nested_pump(noise: &NoiseParams, config: &PumpConfig) -> Result<PumpResult> {
    config.validate()?;
    let raw = raw_pair(noise)?.state;
    let mut trajectories = Vec::with_capacity(config.nesting_levels);
    let mut current = raw;
    let mut pairs = vec![raw];
    for _ in 0..config.nesting_levels {
        let traj = pump_trajectory(&current, &current, noise, config)?;
        current = *traj.states.last().expect("trajectory holds its initial state");
        pairs.push(current);
        trajectories.push(traj);
    }
    let mut result = finish(&trajectories, pairs, noise, config, 1)?;
    if config.nesting_levels == 0 {
        result.fidelity_trace = vec![TracePoint {
            level: 0,
            step: 0,
            fidelity: raw.fidelity(),
        }];
    }
    Ok(result)
}

fn finish(
    trajectories: &[Trajectory],
    mut pairs_by_level: Vec<BellDiagonal>,
    noise: &NoiseParams,
    config: &PumpConfig,
    first_level: usize,
) -> Result<PumpResult> {
    let final_pair = trajectories
        .last()
        .map(|t| *t.states.last().expect("nonempty trajectory"))
        .unwrap_or(pairs_by_level[0]);
    final_pair.validate()?;
    if pairs_by_level.len() == 1 && !trajectories.is_empty() {
        pairs_by_level.push(final_pair);
    }
    let mut cost = assemble_cost(trajectories, noise.p_herald);
    let step_success_by_level: Vec<Vec<f64>> =
        trajectories.iter().map(|t| t.p_success.clone()).collect();
    let monte_carlo = match config.mode {
        PumpMode::ExpectedValue => None,
        PumpMode::MonteCarlo => {
            let mc = simulate_costs(&step_success_by_level, noise.p_herald, config.trials, config.seed);
            cost.expected_raw_pairs = mc.raw_pairs_mean;
            cost.expected_gate_attempts = mc.raw_pairs_mean / noise.p_herald;
            Some(mc)
        }
    };
    Ok(PumpResult {
        final_pair,
        cost,
        fidelity_trace: trace_of(trajectories, first_level),
        step_success_by_level,
        pairs_by_level,
        monte_carlo,
    })
}

#[derive(Debug, Default, Clone, Copy)]
struct Tally {
    raw: u64,
    attempts: u64,
}

fn produce<R: Rng>(
    level: usize,
    steps: &[Vec<f64>],
    herald: Option<&Geometric>,
    rng: &mut R,
    tally: &mut Tally,
) {
    if level == 0 {
        tally.raw += 1;
        tally.attempts += 1 + herald.map_or(0, |g| g.sample(rng));
        return;
    }
    let probs = &steps[level - 1];
    'attempt: loop {
        produce(level - 1, steps, herald, rng, tally);
        for &p in probs {
            produce(level - 1, steps, herald, rng, tally);
            if !rng.gen_bool(p) {
                continue 'attempt;
            }
        }
        return;
    }
}

#[derive(Debug, Default, Clone, Copy)]
struct Moments {
    n: u64,
    raw: u128,
    raw_sq: u128,
    att: u128,
    att_sq: u128,
}

impl Moments {
    fn merge(self, o: Moments) -> Moments {
        Moments {
            n: self.n + o.n,
            raw: self.raw + o.raw,
            raw_sq: self.raw_sq + o.raw_sq,
            att: self.att + o.att,
            att_sq: self.att_sq + o.att_sq,
        }
    }

    fn mean_and_stderr(n: u64, sum: u128, sum_sq: u128) -> (f64, f64) {
        let n_f = n as f64;
        let mean = sum as f64 / n_f;
        if n < 2 {
            return (mean, 0.0);
        }
        let var = (sum_sq as f64 - n_f * mean * mean) / (n_f - 1.0);
        (mean, (var.max(0.0) / n_f).sqrt())
    }
}

/// Samples the restart process directly: every step succeeds with its
/// recorded probability, and every raw pair needs a geometric number of gate
/// attempts. Sums are integers, so the result is independent of scheduling.
pub(crate) fn simulate_costs(
    step_success_by_level: &[Vec<f64>],
    p_herald: f64,
    trials: u64,
    seed: u64,
) -> McSummary {
    let levels = step_success_by_level.len();
    let herald = (p_herald < 1.0).then(|| Geometric::new(p_herald).expect("p_herald in (0, 1)"));
    let m = (0..trials)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(i));
            let mut t = Tally::default();
            produce(levels, step_success_by_level, herald.as_ref(), &mut rng, &mut t);
            Moments {
                n: 1,
                raw: u128::from(t.raw),
                raw_sq: u128::from(t.raw) * u128::from(t.raw),
                att: u128::from(t.attempts),
                att_sq: u128::from(t.attempts) * u128::from(t.attempts),
            }
        })
        .reduce(Moments::default, Moments::merge);
    let (raw_pairs_mean, raw_pairs_stderr) = Moments::mean_and_stderr(m.n, m.raw, m.raw_sq);
    let (gate_attempts_mean, gate_attempts_stderr) = Moments::mean_and_stderr(m.n, m.att, m.att_sq);
    McSummary {
        trials,
        raw_pairs_mean,
        raw_pairs_stderr,
        gate_attempts_mean,
        gate_attempts_stderr,
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FixedPoint {
    /// Fidelity the symmetric recurrence converges to from `start`.
    pub f_max: f64,
    /// Smallest Werner input fidelity that still converges to `f_max`.
    /// `None` when not even a Werner pair at `f_max` is purifiable.
    pub f_min: Option<f64>,
}

const FIXED_POINT_TOL: f64 = 1e-13;
const FIXED_POINT_MAX_ITER: usize = 20_000;
const F_MIN_RESOLUTION: f64 = 1e-6;

/// Iterates `ρ ← step(ρ, ρ)` (conditioned on success) until the fidelity
/// stops moving, and locates the purification threshold on Werner inputs by
/// bisection.
pub fn recurrence_fixed_point(noise: &NoiseParams, start: &BellDiagonal) -> Result<FixedPoint> {
    let f_max = iterate_symmetric(noise, start)?;
    let f_min = purification_threshold(noise, f_max)?;
    Ok(FixedPoint { f_max, f_min })
}

fn iterate_symmetric(noise: &NoiseParams, start: &BellDiagonal) -> Result<f64> {
    let mut s = *start;
    for _ in 0..FIXED_POINT_MAX_ITER {
        let next = recurrence_step(&s, &s, noise)?.out;
        let delta = (next.fidelity() - s.fidelity()).abs();
        s = next;
        if delta < FIXED_POINT_TOL {
            break;
        }
    }
    Ok(s.fidelity())
}

/// True when symmetric recurrence from a Werner pair of fidelity `f`
/// climbs to the attractor at `f_max` rather than decaying.
fn climbs_to(noise: &NoiseParams, f: f64, f_max: f64) -> Result<bool> {
    let goal = 0.5 * (f + f_max);
    if f >= f_max {
        return Ok(true);
    }
    let mut s = BellDiagonal::werner_with_fidelity(f)?;
    for _ in 0..FIXED_POINT_MAX_ITER {
        s = recurrence_step(&s, &s, noise)?.out;
        let fid = s.fidelity();
        if fid >= goal {
            return Ok(true);
        }
        if fid < f - 1e-3 {
            return Ok(false);
        }
    }
    Ok(false)
}

fn purification_threshold(noise: &NoiseParams, f_max: f64) -> Result<Option<f64>> {
    let mut lo = 0.25;
    let mut hi = f_max;
    if hi <= lo || !climbs_to(noise, hi, f_max)? {
        return Ok(None);
    }
    while hi - lo > F_MIN_RESOLUTION / 4.0 {
        let mid = 0.5 * (lo + hi);
        if climbs_to(noise, mid, f_max)? {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(Some(0.5 * (lo + hi)))
}
