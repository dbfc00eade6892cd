//! Density evolution for coupled turbo ensembles on the BEC.
//!
//! For each position `t` of the chain the state tracks the extrinsic erasure
//! probabilities `p_U[t]` and `p_L[t]` from the upper and lower constituent
//! decoders to the information bits. The information bits entering the upper
//! decoder at `t` are erased with probability
//!
//! ```text
//! ε ( λ/m Σ_j p_L[t-j] p_L[t] + (1 - 2λ) p_L[t] + λ/m Σ_j p_L[t] p_L[t+j] )
//! ```
//!
//! (symmetrically with `p_U` for the lower decoder), where `p = 0` outside
//! the chain because padded bits are known. Parity observations are erased
//! with probability `ε`. The a-posteriori erasure probability of the
//! information bits at `t` is `ε p_L[t] p_U[t]`.
//!
//! Positions are zero-based.

use serde::Serialize;

use crate::transfer::TransferFn;

/// Coupled ensemble parameters for density evolution.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Ensemble {
    /// Number of code blocks.
    pub l: usize,
    /// Coupling ratio.
    pub lambda: f64,
    /// Coupling memory.
    pub m: usize,
}

impl Ensemble {
    pub fn new(l: usize, lambda: f64, m: usize) -> Self {
        assert!(l >= 1 && m >= 1, "L and m must be positive");
        assert!((0.0..=0.5).contains(&lambda), "coupling ratio {lambda} outside [0, 1/2]");
        Ensemble { l, lambda, m }
    }
}

/// Update order of one density-evolution iteration.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Schedule {
    /// Both decoders use the previous iteration's values.
    #[default]
    Jacobi,
    /// The lower decoder sees the upper decoder's fresh values.
    GaussSeidel,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DeState {
    pub epsilon: f64,
    pub p_upper: Vec<f64>,
    pub p_lower: Vec<f64>,
    pub iteration: usize,
}

impl DeState {
    /// All messages erased.
    pub fn initial(epsilon: f64, l: usize) -> Self {
        DeState {
            epsilon,
            p_upper: vec![1.0; l],
            p_lower: vec![1.0; l],
            iteration: 0,
        }
    }

    pub fn len(&self) -> usize {
        self.p_upper.len()
    }

    pub fn is_empty(&self) -> bool {
        self.p_upper.is_empty()
    }

    /// `ε p_L[t] p_U[t]`.
    pub fn app_erasure(&self, t: usize) -> f64 {
        self.epsilon * self.p_lower[t] * self.p_upper[t]
    }

    pub fn app_profile(&self) -> Vec<f64> {
        (0..self.len()).map(|t| self.app_erasure(t)).collect()
    }

    pub fn max_app_erasure(&self) -> f64 {
        (0..self.len()).map(|t| self.app_erasure(t)).fold(0.0, f64::max)
    }
}

/// Average erasure probability of the information bits entering one
/// decoder at `t`, given the other decoder's extrinsics `p`.
fn coupled_input(p: &[f64], t: usize, epsilon: f64, lambda: f64, m: usize) -> f64 {
    let at = |i: isize| -> f64 {
        if i < 0 || i as usize >= p.len() {
            0.0
        } else {
            p[i as usize]
        }
    };
    let ti = t as isize;
    let left: f64 = (1..=m as isize).map(|j| at(ti - j)).sum();
    let right: f64 = (1..=m as isize).map(|j| at(ti + j)).sum();
    let w = lambda / m as f64;
    epsilon * p[t] * ((1.0 - 2.0 * lambda) + w * (left + right))
}

/// Input erasure probability of the upper decoder at `t` (uses `p_L`).
pub fn avg_erasure_to_upper(state: &DeState, t: usize, lambda: f64, m: usize) -> f64 {
    coupled_input(&state.p_lower, t, state.epsilon, lambda, m)
}

/// Input erasure probability of the lower decoder at `t` (uses `p_U`).
pub fn avg_erasure_to_lower(state: &DeState, t: usize, lambda: f64, m: usize) -> f64 {
    coupled_input(&state.p_upper, t, state.epsilon, lambda, m)
}

/// One density-evolution iteration.
pub fn de_iteration(state: &DeState, transfer: &TransferFn, lambda: f64, m: usize, schedule: Schedule) -> DeState {
    let eps = state.epsilon;
    let l = state.len();
    let p_upper: Vec<f64> = (0..l)
        .map(|t| transfer.fp(avg_erasure_to_upper(state, t, lambda, m), eps))
        .collect();
    let p_lower: Vec<f64> = match schedule {
        Schedule::Jacobi => (0..l)
            .map(|t| transfer.fp(avg_erasure_to_lower(state, t, lambda, m), eps))
            .collect(),
        Schedule::GaussSeidel => (0..l)
            .map(|t| transfer.fp(coupled_input(&p_upper, t, eps, lambda, m), eps))
            .collect(),
    };
    DeState {
        epsilon: eps,
        p_upper,
        p_lower,
        iteration: state.iteration + 1,
    }
}

/// Parity extrinsic erasure probabilities `(q_U[t], q_L[t])`. Parity nodes
/// are leaves, so these never feed back into the recursion.
pub fn parity_erasures(state: &DeState, transfer: &TransferFn, lambda: f64, m: usize) -> Vec<(f64, f64)> {
    (0..state.len())
        .map(|t| {
            (
                transfer.fq(avg_erasure_to_upper(state, t, lambda, m), state.epsilon),
                transfer.fq(avg_erasure_to_lower(state, t, lambda, m), state.epsilon),
            )
        })
        .collect()
}

/// Stopping rules of [`de_run`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DeControl {
    /// Decodable once `max_t p_u[t]` drops below this.
    pub target: f64,
    /// Stuck once no entry moves by more than this in an iteration.
    pub stall: f64,
    pub max_iterations: usize,
    pub schedule: Schedule,
}

impl Default for DeControl {
    fn default() -> Self {
        DeControl {
            target: 1e-6,
            stall: 1e-10,
            max_iterations: 1_000_000,
            schedule: Schedule::Jacobi,
        }
    }
}

/// Invariant checks accumulated over a run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct InvariantReport {
    /// Every `p_U[t]`, `p_L[t]` non-increasing in the iteration index.
    pub monotone: bool,
    /// Profiles symmetric under `t -> L-1-t`.
    pub symmetric: bool,
    /// `p_u` at both ends no larger than at the middle.
    pub boundary_dominant: bool,
}

impl InvariantReport {
    pub fn all_hold(&self) -> bool {
        self.monotone && self.symmetric && self.boundary_dominant
    }
}

impl Default for InvariantReport {
    fn default() -> Self {
        InvariantReport {
            monotone: true,
            symmetric: true,
            boundary_dominant: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DeOutcome {
    pub decodable: bool,
    pub iterations: usize,
    pub final_max_app: f64,
    pub invariants: InvariantReport,
    pub state: DeState,
}

const INVARIANT_SLACK: f64 = 1e-12;

fn check_invariants(prev: &DeState, next: &DeState, report: &mut InvariantReport) {
    let l = next.len();
    for t in 0..l {
        if next.p_upper[t] > prev.p_upper[t] + INVARIANT_SLACK || next.p_lower[t] > prev.p_lower[t] + INVARIANT_SLACK {
            report.monotone = false;
        }
        let r = l - 1 - t;
        if (next.p_upper[t] - next.p_upper[r]).abs() > INVARIANT_SLACK
            || (next.p_lower[t] - next.p_lower[r]).abs() > INVARIANT_SLACK
        {
            report.symmetric = false;
        }
    }
    let mid = next.app_erasure(l.div_ceil(2) - 1);
    if next.app_erasure(0) > mid + INVARIANT_SLACK || next.app_erasure(l - 1) > mid + INVARIANT_SLACK {
        report.boundary_dominant = false;
    }
}

/// Runs density evolution from the all-erased state, optionally reporting
/// each state to `observer`.
pub fn de_run_observed(
    ensemble: Ensemble,
    epsilon: f64,
    transfer: &TransferFn,
    control: &DeControl,
    mut observer: impl FnMut(&DeState),
) -> DeOutcome {
    let mut state = DeState::initial(epsilon, ensemble.l);
    let mut invariants = InvariantReport::default();
    let mut decodable = false;
    observer(&state);
    while state.iteration < control.max_iterations {
        let next = de_iteration(&state, transfer, ensemble.lambda, ensemble.m, control.schedule);
        check_invariants(&state, &next, &mut invariants);
        let change = next
            .p_upper
            .iter()
            .zip(&state.p_upper)
            .chain(next.p_lower.iter().zip(&state.p_lower))
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        state = next;
        observer(&state);
        if state.max_app_erasure() < control.target {
            decodable = true;
            break;
        }
        if change < control.stall {
            break;
        }
    }
    DeOutcome {
        decodable,
        iterations: state.iteration,
        final_max_app: state.max_app_erasure(),
        invariants,
        state,
    }
}

pub fn de_run(ensemble: Ensemble, epsilon: f64, transfer: &TransferFn, control: &DeControl) -> DeOutcome {
    de_run_observed(ensemble, epsilon, transfer, control, |_| {})
}

/// One bisection probe.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Probe {
    pub epsilon: f64,
    pub decodable: bool,
    pub iterations: usize,
    pub invariants: InvariantReport,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ThresholdResult {
    /// Midpoint of the final bracket.
    pub eps_bp: f64,
    pub bracket_width: f64,
    pub probes: Vec<Probe>,
}

impl ThresholdResult {
    pub fn invariants_hold(&self) -> bool {
        self.probes.iter().all(|p| p.invariants.all_hold())
    }
}

/// Bisection over `[lo, hi]` on a monotone decodability predicate.
pub fn bisect(mut lo: f64, mut hi: f64, tol: f64, mut decodable: impl FnMut(f64) -> Probe) -> ThresholdResult {
    let mut probes = Vec::new();
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        let probe = decodable(mid);
        if probe.decodable {
            lo = mid;
        } else {
            hi = mid;
        }
        probes.push(probe);
    }
    ThresholdResult {
        eps_bp: 0.5 * (lo + hi),
        bracket_width: hi - lo,
        probes,
    }
}

/// Belief-propagation threshold of the coupled ensemble.
pub fn bp_threshold(ensemble: Ensemble, tol: f64, transfer: &TransferFn, control: &DeControl) -> ThresholdResult {
    assert!(tol >= 1e-5, "tolerance {tol} below 1e-5");
    bisect(0.0, 1.0, tol, |eps| {
        let out = de_run(ensemble, eps, transfer, control);
        Probe {
            epsilon: eps,
            decodable: out.decodable,
            iterations: out.iterations,
            invariants: out.invariants,
        }
    })
}

/// Threshold of the uncoupled turbo ensemble from the scalar recursion
/// `p <- F_p(ε p, ε)` with a-posteriori erasure `ε p^2`.
pub fn uncoupled_threshold(tol: f64, transfer: &TransferFn, control: &DeControl) -> ThresholdResult {
    bisect(0.0, 1.0, tol, |eps| {
        let mut p = 1.0_f64;
        let mut decodable = false;
        let mut iterations = 0;
        while iterations < control.max_iterations {
            let next = transfer.fp(eps * p, eps);
            iterations += 1;
            let change = (next - p).abs();
            p = next;
            if eps * p * p < control.target {
                decodable = true;
                break;
            }
            if change < control.stall {
                break;
            }
        }
        Probe {
            epsilon: eps,
            decodable,
            iterations,
            invariants: InvariantReport::default(),
        }
    })
}

/// `1 - R - ε_BP`.
pub fn gap_to_capacity(rate: f64, eps_bp: f64) -> f64 {
    1.0 - rate - eps_bp
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::trellis::{RscSpec, Trellis};

    fn transfer() -> TransferFn {
        TransferFn::new(&Trellis::new(RscSpec::DEFAULT))
    }

    fn state(eps: f64, p: &[f64]) -> DeState {
        DeState {
            epsilon: eps,
            p_upper: p.to_vec(),
            p_lower: p.to_vec(),
            iteration: 0,
        }
    }

    #[test]
    fn coupled_input_cases() {
        let s = state(0.7, &[1.0; 9]);
        for lambda in [0.0, 0.125, 0.5] {
            for m in [1, 2, 3] {
                assert!((avg_erasure_to_upper(&s, 4, lambda, m) - 0.7).abs() < 1e-15);
            }
        }
        let s = state(0.7, &[0.0; 9]);
        assert_eq!(avg_erasure_to_lower(&s, 4, 0.25, 1), 0.0);

        // 0.6 (0.25*0.5*0.8 + 0.5*0.8 + 0.25*0.8*0.25) = 0.33
        let s = state(0.6, &[0.5, 0.8, 0.25]);
        assert!((avg_erasure_to_upper(&s, 1, 0.25, 1) - 0.33).abs() < 1e-15);
        assert!((avg_erasure_to_lower(&s, 1, 0.25, 1) - 0.33).abs() < 1e-15);
    }

    #[test]
    fn boundary_uses_known_padding() {
        // at t = 0 the left neighbour is padding: 0.5 (0.25*0 + 0.5 + 0.25*1) * 1
        let s = state(0.5, &[1.0, 1.0, 1.0]);
        assert!((avg_erasure_to_upper(&s, 0, 0.25, 1) - 0.375).abs() < 1e-15);
    }

    #[test]
    fn app_erasure_cases() {
        let s = DeState {
            epsilon: 0.6,
            p_upper: vec![0.4],
            p_lower: vec![0.5],
            iteration: 0,
        };
        assert!((s.app_erasure(0) - 0.12).abs() < 1e-15);
        assert_eq!(state(0.0, &[1.0]).app_erasure(0), 0.0);
        assert_eq!(state(0.3, &[1.0]).app_erasure(0), 0.3);
    }

    #[test]
    fn iteration_fixed_points() {
        let f = transfer();
        let next = de_iteration(&DeState::initial(0.0, 5), &f, 0.25, 1, Schedule::Jacobi);
        assert!(next.p_upper.iter().chain(&next.p_lower).all(|&x| x == 0.0));
        let next = de_iteration(&state(0.6, &[0.0; 5]), &f, 0.25, 1, Schedule::Jacobi);
        assert!(next.p_upper.iter().chain(&next.p_lower).all(|&x| x == 0.0));
    }

    #[test]
    fn zero_coupling_reduces_to_turbo_recursion() {
        let f = transfer();
        let eps = 0.62;
        let mut s = DeState::initial(eps, 6);
        let mut p = 1.0;
        for _ in 0..30 {
            s = de_iteration(&s, &f, 0.0, 1, Schedule::Jacobi);
            p = f.fp(eps * p, eps);
            for t in 0..6 {
                assert!((s.p_upper[t] - p).abs() < 1e-14);
                assert!((s.p_lower[t] - p).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn zero_channel_decodes_at_once() {
        let out = de_run(Ensemble::new(10, 0.25, 1), 0.0, &transfer(), &DeControl::default());
        assert!(out.decodable);
        assert_eq!(out.iterations, 1);
    }

    #[test]
    fn gap_cases() {
        assert!((gap_to_capacity(0.2857, 0.6947) - 0.0196).abs() < 1e-12);
        assert!((gap_to_capacity(0.2, 0.7760) - 0.0240).abs() < 1e-12);
        assert_eq!(gap_to_capacity(0.0, 1.0), 0.0);
    }

    #[test]
    fn bisection_brackets_a_step() {
        let r = bisect(0.0, 1.0, 1e-4, |e| Probe {
            epsilon: e,
            decodable: e < 0.3141,
            iterations: 0,
            invariants: InvariantReport::default(),
        });
        assert!(r.bracket_width <= 1e-4);
        assert!((r.eps_bp - 0.3141).abs() <= 1e-4);
    }
}
