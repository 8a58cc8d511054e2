//! Derived constants and numeric evaluation of the sufficient conditions
//! H1–H7, the equilibrium uniqueness condition and condition (A).
//!
//! The constants follow the standard notation for this model class:
//!
//! ```text
//! k1 = max_i (a_i + L^f_i Σ_j |b_ji|)        k2 = max_i (L^g_i Σ_j |c_ji|)
//! k3 = max_k |I_k(0)|                        k4 = max_i Σ_j (|b_ji||f_i(0)| + |c_ji||g_i(0)|)
//! μ  = max_i (L^f_i Σ_j |b_ji|)              γ  = min_i a_i
//! λ  = (1 − H4-quantity)⁻¹                   R  = (1 − e^{−γω})⁻¹
//! α1 = R(ω(μ + λk2) + ℓp)                    α2 = R(ω Σ_i d_i + ω m k4 + m p k3)
//! ```
//!
//! where `p` inside H3/H4 is the max number of impulses per θ-interval and
//! `p` inside α1/α2 is the number of impulse moments per period (the
//! literature overloads the symbol; the two counts coincide for all bundled
//! examples).

use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{ImpulseFamily, ImpulseMap, NetworkSpec, TimeStructure, SEQ_TOL};

/// Every derived constant of the theory, with quantities that may be
/// undefined (λ when H4 fails, the periodic constants without ω) kept as
/// options rather than sentinels.
#[derive(Debug, Clone, Serialize)]
pub struct DerivedConstants {
    pub k1: f64,
    pub k2: f64,
    pub k3: f64,
    pub k4: f64,
    pub mu: f64,
    pub gamma: f64,
    /// Declared impulse Lipschitz constant ℓ (copied from the family).
    pub ell: f64,
    /// Max impulses strictly inside one θ-interval (H3/H4's `p`).
    pub p: usize,
    /// Impulse moments per ω-period (α1/α2's `p`), when periodic.
    pub p_period: Option<usize>,
    /// `[(k1 + 2k2)θ̄ + ℓp](1+ℓ)^p e^{k1 θ̄}` — must be < 1 for H3.
    pub h3_quantity: f64,
    /// `k2 θ̄ + (k1 θ̄ + ℓp)(1 + k2 θ̄)(1+ℓ)^p e^{k1 θ̄}` — must be < 1 for H4.
    pub h4_quantity: f64,
    /// `(1 − h4_quantity)⁻¹`, unset when the quantity is ≥ 1.
    pub lambda: Option<f64>,
    /// `(1 − e^{−γω})⁻¹`, unset without ω (or with γ ≤ 0).
    pub r_const: Option<f64>,
    pub alpha1: Option<f64>,
    pub alpha2: Option<f64>,
    /// `α2 / (1 − α1)` when α1 < 1: any fixed-point norm bound `h` with
    /// `α2 ≤ h(1 − α1)` works, and this is the smallest.
    pub h_bound: Option<f64>,
}

impl DerivedConstants {
    /// The certified decay exponent `σ = γ − μ − λk2 − ln(1+ℓ)/τ̲`.
    /// Requires λ (H4).
    pub fn sigma(&self, ts: &TimeStructure) -> Result<f64> {
        let lambda = self.lambda.ok_or(Error::LambdaUndefined {
            quantity: self.h4_quantity,
        })?;
        Ok(self.gamma - self.mu - lambda * self.k2 - (1.0 + self.ell).ln() / ts.tau_under())
    }
}

/// Compute every derived constant for the model triple.
pub fn derive_constants(
    spec: &NetworkSpec,
    ts: &TimeStructure,
    imp: &ImpulseFamily,
) -> DerivedConstants {
    let m = spec.unit_count();
    let ell = imp.ell();
    let p = ts.p();
    let tb = ts.theta_bar();

    let mut k1: f64 = f64::MIN;
    let mut k2: f64 = f64::MIN;
    let mut k4: f64 = f64::MIN;
    let mut mu: f64 = f64::MIN;
    let mut gamma: f64 = f64::MAX;
    for i in 0..m {
        let bcol = spec.col_abs_sum_b(i);
        let ccol = spec.col_abs_sum_c(i);
        let lf = spec.f()[i].lipschitz;
        let lg = spec.g()[i].lipschitz;
        k1 = k1.max(spec.a()[i] + lf * bcol);
        k2 = k2.max(lg * ccol);
        mu = mu.max(lf * bcol);
        k4 = k4.max(bcol * spec.f()[i].eval(0.0).abs() + ccol * spec.g()[i].eval(0.0).abs());
        gamma = gamma.min(spec.a()[i]);
    }
    let k3 = imp.max_jump_at_zero();

    let growth = (1.0 + ell).powi(p as i32) * (k1 * tb).exp();
    let h3_quantity = ((k1 + 2.0 * k2) * tb + ell * p as f64) * growth;
    let h4_quantity = k2 * tb + (k1 * tb + ell * p as f64) * (1.0 + k2 * tb) * growth;
    let lambda = (h4_quantity < 1.0).then(|| 1.0 / (1.0 - h4_quantity));

    let (r_const, alpha1, alpha2) = match ts.omega() {
        Some(omega) if gamma > 0.0 => {
            let r = 1.0 / (1.0 - (-gamma * omega).exp());
            let pp = ts.p_period().unwrap_or(0) as f64;
            let a1 = lambda.map(|lam| r * (omega * (mu + lam * k2) + ell * pp));
            let d_sum: f64 = spec.d().iter().sum();
            let a2 = r * (omega * d_sum + omega * m as f64 * k4 + m as f64 * pp * k3);
            (Some(r), a1, Some(a2))
        }
        _ => (None, None, None),
    };
    let h_bound = match (alpha1, alpha2) {
        (Some(a1), Some(a2)) if a1 < 1.0 => Some(a2 / (1.0 - a1)),
        _ => None,
    };

    DerivedConstants {
        k1,
        k2,
        k3,
        k4,
        mu,
        gamma,
        ell,
        p,
        p_period: ts.p_period(),
        h3_quantity,
        h4_quantity,
        lambda,
        r_const,
        alpha1,
        alpha2,
        h_bound,
    }
}

/// One hypothesis evaluation: `pass` iff the margin is on the good side.
/// `value`/`margin` are `None` when a prerequisite quantity is undefined.
#[derive(Debug, Clone, Serialize)]
pub struct HypothesisEntry {
    pub name: String,
    pub value: Option<f64>,
    pub threshold: f64,
    pub margin: Option<f64>,
    pub pass: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

impl HypothesisEntry {
    fn new(name: &str, value: f64, threshold: f64, margin: f64, pass: bool) -> Self {
        HypothesisEntry {
            name: name.to_string(),
            value: Some(value),
            threshold,
            margin: Some(margin),
            pass,
            note: None,
        }
    }

    fn blocked(name: &str, threshold: f64, note: &str) -> Self {
        HypothesisEntry {
            name: name.to_string(),
            value: None,
            threshold,
            margin: None,
            pass: false,
            note: Some(note.to_string()),
        }
    }

    fn with_note(mut self, note: impl Into<String>) -> Self {
        self.note = Some(note.into());
        self
    }
}

/// Full report: per-hypothesis entries plus the guarantee bundles the
/// sufficient conditions certify.
#[derive(Debug, Clone, Serialize)]
pub struct HypothesisReport {
    pub entries: Vec<HypothesisEntry>,
    /// H1–H3: unique solution for every initial condition.
    pub existence_unique: bool,
    /// H4: the λ-comparison inequality is available.
    pub lambda_valid: bool,
    /// H5: positive certified decay exponent.
    pub global_stability: bool,
    /// H6–H7: unique ω-periodic solution.
    pub periodic_exists: bool,
    /// Per-unit dominance condition: unique equilibrium of the algebraic system.
    pub equilibrium_unique: bool,
    /// Condition (A) at the supplied point, when one was given.
    pub condition_a: Option<bool>,
    pub constants: DerivedConstants,
}

impl HypothesisReport {
    pub fn entry(&self, name: &str) -> Option<&HypothesisEntry> {
        self.entries.iter().find(|e| e.name == name)
    }
}

/// Evaluate H1–H7, the equilibrium uniqueness condition (per-unit dominance)
/// and, when `x_star` is given, condition (A) `|I_ik(x*_i)| ≤ tol`.
///
/// Failures are report entries, never errors; the function is deterministic
/// and pure.
pub fn check_hypotheses(
    spec: &NetworkSpec,
    ts: &TimeStructure,
    imp: &ImpulseFamily,
    x_star: Option<&[f64]>,
    tol: f64,
) -> HypothesisReport {
    let dc = derive_constants(spec, ts, imp);
    let mut entries = Vec::new();

    // H1: declared activation Lipschitz constants are valid bounds.
    let h1_margin = spec
        .f()
        .iter()
        .chain(spec.g().iter())
        .map(|act| act.lipschitz - act.required_lipschitz())
        .fold(f64::MAX, f64::min);
    let h1 = HypothesisEntry::new("H1", h1_margin, 0.0, h1_margin, h1_margin >= -1e-12);
    entries.push(h1);

    // H2: ℓ bounds every globally Lipschitz impulse map; quadratic maps are
    // box-dependent and validated separately.
    let mut h2_margin = f64::MAX;
    let mut has_boxed = false;
    for k in 0..imp.period() {
        for i in 0..imp.unit_count() {
            match imp.map(k, i) {
                ImpulseMap::Affine { slope, .. } => {
                    h2_margin = h2_margin.min(imp.ell() - slope.abs());
                }
                ImpulseMap::Zero => h2_margin = h2_margin.min(imp.ell()),
                ImpulseMap::CenteredQuadratic { .. } => has_boxed = true,
            }
        }
    }
    if h2_margin == f64::MAX {
        h2_margin = imp.ell();
    }
    let mut h2 = HypothesisEntry::new("H2", h2_margin, 0.0, h2_margin, h2_margin >= -1e-12);
    if has_boxed {
        h2 = h2.with_note(
            "centered-quadratic maps have no global Lipschitz constant; \
             ℓ is validated on the declared operating box",
        );
    }
    entries.push(h2);

    entries.push(HypothesisEntry::new(
        "H3",
        dc.h3_quantity,
        1.0,
        1.0 - dc.h3_quantity,
        dc.h3_quantity < 1.0,
    ));
    // The proof of H3 also uses the weaker bound below; reported for transparency.
    let implied = (dc.k1 + dc.k2) * ts.theta_bar() + dc.ell * dc.p as f64;
    entries.push(
        HypothesisEntry::new("H3-implied", implied, 1.0, 1.0 - implied, implied < 1.0)
            .with_note("(k1+k2)θ̄ + ℓp — the Picard contraction factor"),
    );
    entries.push(HypothesisEntry::new(
        "H4",
        dc.h4_quantity,
        1.0,
        1.0 - dc.h4_quantity,
        dc.h4_quantity < 1.0,
    ));

    match dc.sigma(ts) {
        Ok(sigma) => entries.push(HypothesisEntry::new("H5", sigma, 0.0, sigma, sigma > 0.0)),
        Err(_) => entries.push(HypothesisEntry::blocked(
            "H5",
            0.0,
            "λ undefined (H4 fails), decay exponent unavailable",
        )),
    }

    // H6: ω-periodic time structure with a compatible impulse family.
    let h6 = match (ts.omega(), ts.p_period()) {
        (Some(_), Some(pp)) => {
            let compatible = pp == 0 || pp % imp.period() == 0;
            let mut e = HypothesisEntry::new(
                "H6",
                0.0,
                SEQ_TOL,
                if compatible { SEQ_TOL } else { -1.0 },
                compatible,
            );
            if !compatible {
                e = e.with_note("impulse family period does not divide the impulses per ω-period");
            }
            e
        }
        _ => HypothesisEntry::blocked("H6", 0.0, "omega-missing: no periodic extension declared"),
    };
    entries.push(h6);

    match dc.alpha1 {
        Some(a1) => entries.push(HypothesisEntry::new("H7", a1, 1.0, 1.0 - a1, a1 < 1.0)),
        None => entries.push(HypothesisEntry::blocked(
            "H7",
            1.0,
            "α1 undefined (needs ω, γ > 0 and λ)",
        )),
    }

    // Per-unit dominance: a_i > L^f_i Σ_j |b_ji| + L^g_i Σ_j |c_ji|.
    let dominance_margin = (0..spec.unit_count())
        .map(|i| {
            spec.a()[i]
                - spec.f()[i].lipschitz * spec.col_abs_sum_b(i)
                - spec.g()[i].lipschitz * spec.col_abs_sum_c(i)
        })
        .fold(f64::MAX, f64::min);
    entries.push(HypothesisEntry::new(
        "equilibrium-dominance",
        dominance_margin,
        0.0,
        dominance_margin,
        dominance_margin > 0.0,
    ));

    let condition_a = x_star.map(|xs| {
        let dev = imp.max_jump_at(xs);
        entries.push(HypothesisEntry::new(
            "condition-A",
            dev,
            tol,
            tol - dev,
            dev <= tol,
        ));
        dev <= tol
    });

    let pass = |name: &str| entries.iter().find(|e| e.name == name).map(|e| e.pass).unwrap_or(false);
    HypothesisReport {
        existence_unique: pass("H1") && pass("H2") && pass("H3"),
        lambda_valid: pass("H4"),
        global_stability: pass("H5"),
        periodic_exists: pass("H6") && pass("H7"),
        equilibrium_unique: pass("equilibrium-dominance"),
        condition_a,
        entries,
        constants: dc,
    }
}
