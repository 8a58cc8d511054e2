//! Numerical verification of the stability machinery along simulated
//! trajectories: the certified decay bound
//!
//! ```text
//! ‖x(t) − ref(t)‖₁ ≤ (1 + slack) · e^{−σ(t−t0)} · ‖x(t0) − ref(t0)‖₁,
//! σ = γ − μ − λk2 − ln(1+ℓ)/τ̲,
//! ```
//!
//! and the λ-comparison inequality `‖y(β(t))‖₁ ≤ λ‖y(t)‖₁` for
//! `y(t) = x(t) − ref(t)`. The reference is either the equilibrium or the
//! converged periodic grid read modulo ω. All norms are the 1-norm.
//!
//! The λ-inequality is exact for the shifted system only when condition (A)
//! holds at the reference (the impulse maps vanish there); callers should
//! gate on [`crate::equilibrium::check_condition_a`] and skip the check with
//! a notice otherwise.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::hypotheses::DerivedConstants;
use crate::model::{SampleTag, TimeStructure, Trajectory};
use crate::norm1;
use crate::periodic::PeriodicGrid;

/// Comparison target for a trajectory.
pub enum Reference<'a> {
    Equilibrium(&'a [f64]),
    Periodic(&'a PeriodicGrid),
}

impl Reference<'_> {
    /// Reference value at absolute time `t`; `left` selects the pre-jump side
    /// at impulse moments (periodic grids carry both).
    fn value(&self, t: f64, left: bool) -> Result<Vec<f64>> {
        match self {
            Reference::Equilibrium(x) => Ok(x.to_vec()),
            Reference::Periodic(grid) => {
                let om = grid.omega();
                let mut s = t - om * (t / om).floor();
                if s < 0.0 {
                    s += om;
                }
                grid.value_at(s, !left).ok_or_else(|| {
                    Error::InsufficientCoverage(format!("periodic grid has no value at phase {s}"))
                })
            }
        }
    }

    fn dim(&self) -> usize {
        match self {
            Reference::Equilibrium(x) => x.len(),
            Reference::Periodic(grid) => grid.dim(),
        }
    }
}

/// The certified decay exponent `σ = γ − μ − λk2 − ln(1+ℓ)/τ̲`.
/// Errors when λ is undefined (H4 fails).
pub fn decay_exponent(dc: &DerivedConstants, ts: &TimeStructure) -> Result<f64> {
    dc.sigma(ts)
}

#[derive(Debug, Clone, Serialize)]
pub struct BoundViolation {
    pub t: f64,
    pub observed: f64,
    pub bound: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct LambdaViolation {
    pub t: f64,
    /// `‖y(β(t))‖₁`
    pub lhs: f64,
    /// `λ‖y(t)‖₁`
    pub rhs: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct StabilityReport {
    pub sigma: f64,
    pub bound_violations: Vec<BoundViolation>,
    pub lambda_violations: Vec<LambdaViolation>,
    pub converged: bool,
    pub final_distance: f64,
}

/// Check the exponential decay bound at every sample of the trajectory.
///
/// `slack` is the multiplicative allowance absorbing integrator and grid
/// error (the bound itself holds for the exact flow); `conv_tol` sets the
/// `converged` verdict on the final distance.
pub fn verify_decay(
    traj: &Trajectory,
    reference: &Reference<'_>,
    dc: &DerivedConstants,
    ts: &TimeStructure,
    slack: f64,
    conv_tol: f64,
) -> Result<StabilityReport> {
    if reference.dim() != traj.dim() {
        return Err(Error::DimensionMismatch {
            what: "reference",
            expected: traj.dim(),
            got: reference.dim(),
        });
    }
    let sigma = dc.sigma(ts)?;
    let samples = traj.samples();
    if samples.is_empty() {
        return Err(Error::InsufficientCoverage("empty trajectory".into()));
    }
    let t0 = samples[0].t;
    let d0 = distance(&samples[0].x, reference, t0, samples[0].tag)?;

    let mut violations = Vec::new();
    let mut final_distance = d0;
    for s in samples {
        let dist = distance(&s.x, reference, s.t, s.tag)?;
        let bound = (1.0 + slack) * (-sigma * (s.t - t0)).exp() * d0;
        if dist > bound {
            violations.push(BoundViolation {
                t: s.t,
                observed: dist,
                bound,
            });
        }
        final_distance = dist;
    }
    Ok(StabilityReport {
        sigma,
        bound_violations: violations,
        lambda_violations: Vec::new(),
        converged: final_distance < conv_tol,
        final_distance,
    })
}

fn distance(x: &[f64], reference: &Reference<'_>, t: f64, tag: SampleTag) -> Result<f64> {
    let rv = reference.value(t, tag == SampleTag::ImpulseLeft)?;
    Ok(norm1(
        &x.iter().zip(&rv).map(|(a, b)| a - b).collect::<Vec<_>>(),
    ))
}

/// Check `‖y(β(t))‖₁ ≤ λ‖y(t)‖₁` at every sample, reading `y(β(t))` at the
/// trajectory's θ node. Violations beyond a relative tolerance of 1e-9 are
/// returned; samples whose β(t) precedes the trajectory start are skipped
/// (no data witnesses them). Errors with `lambda-undefined` when H4 fails.
pub fn verify_lambda_inequality(
    traj: &Trajectory,
    reference: &Reference<'_>,
    dc: &DerivedConstants,
    ts: &TimeStructure,
) -> Result<Vec<LambdaViolation>> {
    let lambda = dc.lambda.ok_or(Error::LambdaUndefined {
        quantity: dc.h4_quantity,
    })?;
    let mut violations = Vec::new();
    let t_start = traj.t0();
    for s in traj.samples() {
        let bt = ts.beta(s.t)?;
        if bt < t_start - crate::model::SEQ_TOL {
            continue;
        }
        let Some(xb) = traj.value_at(bt) else {
            continue;
        };
        let rb = reference.value(bt, false)?;
        let lhs = norm1(&xb.iter().zip(&rb).map(|(a, b)| a - b).collect::<Vec<_>>());
        let yt = distance(&s.x, reference, s.t, s.tag)?;
        let rhs = lambda * yt;
        if lhs > rhs * (1.0 + 1e-9) + 1e-15 {
            violations.push(LambdaViolation { t: s.t, lhs, rhs });
        }
    }
    Ok(violations)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::examples::{equilibrium_example, periodic_example, strong_coupling_example};
    use crate::hypotheses::derive_constants;
    use crate::integrator::{simulate, StepControl};

    #[test]
    fn decay_exponent_published_value() {
        let (spec, ts, imp) = periodic_example();
        let dc = derive_constants(&spec, &ts, &imp);
        let sigma = decay_exponent(&dc, &ts).unwrap();
        assert!((sigma - 0.4308).abs() < 5e-4, "sigma {sigma}");
        assert!((sigma - 0.4308039051888932).abs() < 1e-12);
    }

    #[test]
    fn decay_exponent_zero_coupling_is_gamma() {
        use crate::model::{ActivationSpec, ImpulseFamily, NetworkSpec, TimeStructure};
        // k1 θ̄ e^{k1 θ̄} must stay below 1 for λ to exist: keep a_i < 0.567
        let act = ActivationSpec::scaled_tanh(1.0, 1.0, 1.0);
        let spec = NetworkSpec::new(
            vec![0.4, 0.3],
            vec![vec![0.0; 2]; 2],
            vec![vec![0.0; 2]; 2],
            vec![0.0; 2],
            vec![act.clone(); 2],
            vec![act; 2],
        )
        .unwrap();
        let ts = TimeStructure::periodic(vec![0.0], vec![], 1.0, 1.0, 1.0).unwrap();
        let dc = derive_constants(&spec, &ts, &ImpulseFamily::zero(2));
        assert!((decay_exponent(&dc, &ts).unwrap() - 0.3).abs() < 1e-14);
    }

    #[test]
    fn decay_exponent_matches_hand_formula_with_doubled_ell() {
        // same network as the periodic example but ℓ doubled to 0.05
        let (spec, ts, mut_imp) = periodic_example();
        let maps = (0..mut_imp.period())
            .map(|k| {
                (0..2)
                    .map(|i| mut_imp.map(k, i).clone())
                    .collect::<Vec<_>>()
            })
            .collect();
        let imp = crate::model::ImpulseFamily::new(maps, 0.05).unwrap();
        let dc = derive_constants(&spec, &ts, &imp);
        let sigma = decay_exponent(&dc, &ts).unwrap();
        // direct formula evaluation
        let (k1, k2, ell, tb): (f64, f64, f64, f64) = (0.50015, 0.0046, 0.05, 1.0);
        let h4 = k2 * tb + (k1 * tb + ell) * (1.0 + k2 * tb) * (1.0 + ell) * (k1 * tb).exp();
        let lam = 1.0 / (1.0 - h4);
        let want = 0.5 - 0.00015 - lam * k2 - (1.0 + ell).ln() / 1.0;
        assert!((sigma - want).abs() < 1e-12, "sigma {sigma} want {want}");
    }

    #[test]
    fn identical_trajectory_has_zero_distances() {
        let (spec, ts, imp) = equilibrium_example();
        let dc = derive_constants(&spec, &ts, &imp);
        let xs = crate::examples::EQUILIBRIUM_EXAMPLE_X_STAR;
        let ctl = StepControl::rk4(1e-2, &ts).unwrap();
        let traj = simulate(&spec, &ts, &imp, 0.0, &xs, 5.0, &ctl).unwrap();
        let rep = verify_decay(&traj, &Reference::Equilibrium(&xs), &dc, &ts, 0.05, 1e-6).unwrap();
        assert!(rep.bound_violations.is_empty());
        assert!(rep.final_distance < 1e-9, "drift {}", rep.final_distance);
        assert!(rep.converged);
        let viol =
            verify_lambda_inequality(&traj, &Reference::Equilibrium(&xs), &dc, &ts).unwrap();
        assert!(viol.is_empty());
    }

    #[test]
    fn equilibrium_example_decay_from_far_start() {
        let (spec, ts, imp) = equilibrium_example();
        let dc = derive_constants(&spec, &ts, &imp);
        let xs = crate::examples::EQUILIBRIUM_EXAMPLE_X_STAR;
        let ctl = StepControl::rk4(1e-3, &ts).unwrap();
        let traj = simulate(&spec, &ts, &imp, 0.0, &[10.0, 10.0], 20.0, &ctl).unwrap();
        let rep = verify_decay(&traj, &Reference::Equilibrium(&xs), &dc, &ts, 0.05, 1e-6).unwrap();
        assert!(
            rep.bound_violations.is_empty(),
            "violations: {:?}",
            &rep.bound_violations[..rep.bound_violations.len().min(3)]
        );
        // decay rate γ = 1/2 over 20 time units floors the distance near 1e-3
        assert!(rep.final_distance < 5e-3, "final {}", rep.final_distance);
        assert!(!rep.converged);
        let viol =
            verify_lambda_inequality(&traj, &Reference::Equilibrium(&xs), &dc, &ts).unwrap();
        assert!(viol.is_empty(), "{} lambda violations", viol.len());
    }

    #[test]
    fn lambda_refused_when_h4_fails() {
        let (spec, ts, imp) = strong_coupling_example();
        let dc = derive_constants(&spec, &ts, &imp);
        let ctl = StepControl::rk4(1e-3, &ts).unwrap();
        let traj = simulate(&spec, &ts, &imp, 0.0, &[0.0, 0.0], 2.0, &ctl).unwrap();
        let err = verify_lambda_inequality(
            &traj,
            &Reference::Equilibrium(&[0.0, 0.0]),
            &dc,
            &ts,
        )
        .unwrap_err();
        assert!(matches!(err, Error::LambdaUndefined { .. }));
        assert!(err.to_string().contains("lambda-undefined"));
    }

    #[test]
    fn slack_is_monotone() {
        let (spec, ts, imp) = equilibrium_example();
        let dc = derive_constants(&spec, &ts, &imp);
        let xs = crate::examples::EQUILIBRIUM_EXAMPLE_X_STAR;
        let ctl = StepControl::rk4(1e-2, &ts).unwrap();
        let traj = simulate(&spec, &ts, &imp, 0.0, &[10.0, 10.0], 10.0, &ctl).unwrap();
        let r = Reference::Equilibrium(&xs);
        let v_tight = verify_decay(&traj, &r, &dc, &ts, 0.0, 1e-6)
            .unwrap()
            .bound_violations
            .len();
        let v_mid = verify_decay(&traj, &r, &dc, &ts, 0.05, 1e-6)
            .unwrap()
            .bound_violations
            .len();
        let v_loose = verify_decay(&traj, &r, &dc, &ts, 0.5, 1e-6)
            .unwrap()
            .bound_violations
            .len();
        assert!(v_tight >= v_mid && v_mid >= v_loose);
    }

    #[test]
    fn scale_invariance_zero_coupling() {
        use crate::model::{ActivationSpec, ImpulseFamily, NetworkSpec, TimeStructure};
        // pure linear decay: scaling the initial offset scales distances and
        // leaves the (empty) violation set unchanged
        let act = ActivationSpec::scaled_tanh(1.0, 1.0, 1.0);
        let spec = NetworkSpec::new(
            vec![0.4],
            vec![vec![0.0]],
            vec![vec![0.0]],
            vec![0.0],
            vec![act.clone()],
            vec![act],
        )
        .unwrap();
        let ts = TimeStructure::periodic(vec![0.0], vec![], 1.0, 1.0, 1.0).unwrap();
        let imp = ImpulseFamily::zero(1);
        let dc = derive_constants(&spec, &ts, &imp);
        let ctl = StepControl::rk4(1e-3, &ts).unwrap();
        let zero = [0.0];
        let r = Reference::Equilibrium(&zero);
        let t1 = simulate(&spec, &ts, &imp, 0.0, &[1.0], 5.0, &ctl).unwrap();
        let t2 = simulate(&spec, &ts, &imp, 0.0, &[3.0], 5.0, &ctl).unwrap();
        let r1 = verify_decay(&t1, &r, &dc, &ts, 0.05, 1e-6).unwrap();
        let r2 = verify_decay(&t2, &r, &dc, &ts, 0.05, 1e-6).unwrap();
        assert!(r1.bound_violations.is_empty() && r2.bound_violations.is_empty());
        assert!((r2.final_distance / r1.final_distance - 3.0).abs() < 1e-9);
    }
}
