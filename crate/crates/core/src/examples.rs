//! The three worked example systems bundled with the CLI, constructed
//! programmatically so library tests and the shipped documents stay in sync.
//!
//! All three share the event structure `θ_k = k`, `τ_k = (2k+1)/2` with
//! `θ̄ = τ̲ = ω = 1` and one impulse per unit interval.

use crate::model::{
    ActivationSpec, ImpulseFamily, ImpulseMap, NetworkSpec, TimeStructure,
};

/// Equilibrium of the smooth part of [`equilibrium_example`], solved to
/// machine precision. The centered-quadratic impulse maps vanish exactly
/// here, so it is an equilibrium of the full hybrid system (condition (A)).
pub const EQUILIBRIUM_EXAMPLE_X_STAR: [f64; 2] = [2.0411908853762037, 2.0656775125261118];

/// Declared impulse Lipschitz constant of [`equilibrium_example`]; valid on
/// the operating box `x* ± 0.5` (the quadratic maps have slope `2·0.5/30 =
/// 1/30 < 0.034` there).
pub const EQUILIBRIUM_EXAMPLE_ELL: f64 = 0.034;

fn unit_time_structure() -> TimeStructure {
    TimeStructure::periodic(vec![0.0], vec![0.5], 1.0, 1.0, 1.0).expect("valid structure")
}

fn tanh_activations() -> (Vec<ActivationSpec>, Vec<ActivationSpec>) {
    let f = vec![
        ActivationSpec::scaled_tanh(1.0, 0.1, 0.1),
        ActivationSpec::scaled_tanh(1.0, 0.3, 0.3),
    ];
    let g = vec![
        ActivationSpec::scaled_tanh(1.0, 0.2, 0.2),
        ActivationSpec::scaled_tanh(1.0, 0.2, 0.2),
    ];
    (f, g)
}

/// Two-unit network with weak coupling and affine impulses `x/40 + 1/2`.
/// Satisfies H1–H7, so it has a unique globally asymptotically stable
/// 1-periodic solution.
pub fn periodic_example() -> (NetworkSpec, TimeStructure, ImpulseFamily) {
    let (f, g) = tanh_activations();
    let spec = NetworkSpec::new(
        vec![0.5, 0.5],
        vec![vec![1e-4, 2e-4], vec![1e-4, 3e-4]],
        vec![vec![2e-2, 3e-3], vec![3e-3, 5e-3]],
        vec![1.0, 1.0],
        f,
        g,
    )
    .expect("valid network");
    let imp = ImpulseFamily::new(
        vec![vec![
            ImpulseMap::Affine {
                slope: 1.0 / 40.0,
                offset: 0.5,
            },
            ImpulseMap::Affine {
                slope: 1.0 / 40.0,
                offset: 0.5,
            },
        ]],
        0.025,
    )
    .expect("valid impulses");
    (spec, unit_time_structure(), imp)
}

/// Two-unit network with strong coupling (`k1 = 35`) and impulses
/// `x/3 + 1/6`. Violates H3 by many orders of magnitude: existence and
/// stability are not guaranteed, but simulation still runs and shows the
/// impacts and the non-smooth switching.
pub fn strong_coupling_example() -> (NetworkSpec, TimeStructure, ImpulseFamily) {
    let act = |s| ActivationSpec::scaled_tanh(1.0, s, s);
    let spec = NetworkSpec::new(
        vec![20.0, 8.0],
        vec![vec![10.0, 3.0], vec![5.0, 1.0]],
        vec![vec![20.0, 1.0], vec![8.0, 1.0]],
        vec![1.0, 1.0],
        vec![act(1.0), act(1.0)],
        vec![act(1.0), act(1.0)],
    )
    .expect("valid network");
    let imp = ImpulseFamily::new(
        vec![vec![
            ImpulseMap::Affine {
                slope: 1.0 / 3.0,
                offset: 1.0 / 6.0,
            },
            ImpulseMap::Affine {
                slope: 1.0 / 3.0,
                offset: 1.0 / 6.0,
            },
        ]],
        1.0 / 3.0,
    )
    .expect("valid impulses");
    (spec, unit_time_structure(), imp)
}

/// Two-unit network with moderate delayed coupling and centered-quadratic
/// impulses `(x − x*_i)²/30` that vanish at the equilibrium
/// [`EQUILIBRIUM_EXAMPLE_X_STAR`], so every trajectory converges to it.
pub fn equilibrium_example() -> (NetworkSpec, TimeStructure, ImpulseFamily) {
    let (f, g) = tanh_activations();
    let spec = NetworkSpec::new(
        vec![0.5, 0.5],
        vec![vec![1e-4, 2e-3], vec![1e-4, 3e-3]],
        vec![vec![2e-2, 3e-2], vec![3e-2, 5e-2]],
        vec![1.0, 1.0],
        f,
        g,
    )
    .expect("valid network");
    let imp = ImpulseFamily::new(
        vec![vec![
            ImpulseMap::CenteredQuadratic {
                center: EQUILIBRIUM_EXAMPLE_X_STAR[0],
                scale: 1.0 / 30.0,
            },
            ImpulseMap::CenteredQuadratic {
                center: EQUILIBRIUM_EXAMPLE_X_STAR[1],
                scale: 1.0 / 30.0,
            },
        ]],
        EQUILIBRIUM_EXAMPLE_ELL,
    )
    .expect("valid impulses");
    (spec, unit_time_structure(), imp)
}

/// Operating box on which [`equilibrium_example`]'s declared ℓ is valid.
pub fn equilibrium_example_box() -> Vec<(f64, f64)> {
    EQUILIBRIUM_EXAMPLE_X_STAR
        .iter()
        .map(|&c| (c - 0.5, c + 0.5))
        .collect()
}
