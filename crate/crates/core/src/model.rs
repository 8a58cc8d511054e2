//! Domain types: activations, network, time structure, impulse family and
//! trajectories, plus the identification function `β` and the vector field.

use serde::Serialize;
use std::io::{self, Write};

use crate::error::{Error, Result};

/// Tolerance used for sequence consistency checks (periodicity, disjointness,
/// event snapping). Event times are produced by exact arithmetic on the stored
/// sequences, so this only has to absorb composition round-off.
pub const SEQ_TOL: f64 = 1e-9;

// ---------------------------------------------------------------------------
// Activations
// ---------------------------------------------------------------------------

/// Parametric activation families. Restricting to a closed enumeration keeps
/// the declared Lipschitz constants mechanically checkable.
#[derive(Debug, Clone, PartialEq)]
pub enum ActivationKind {
    /// `x ↦ gain · tanh(slope · x)`
    ScaledTanh { gain: f64, slope: f64 },
    /// Piecewise-linear interpolation through `(x, y)` breakpoints, constant
    /// outside the breakpoint range.
    PiecewiseLinear { points: Vec<(f64, f64)> },
}

/// An activation together with its declared Lipschitz constant (`L^f_j` or
/// `L^g_j` in H1).
#[derive(Debug, Clone, PartialEq)]
pub struct ActivationSpec {
    pub kind: ActivationKind,
    pub lipschitz: f64,
}

impl ActivationSpec {
    pub fn scaled_tanh(gain: f64, slope: f64, lipschitz: f64) -> Self {
        ActivationSpec {
            kind: ActivationKind::ScaledTanh { gain, slope },
            lipschitz,
        }
    }

    pub fn eval(&self, x: f64) -> f64 {
        match &self.kind {
            ActivationKind::ScaledTanh { gain, slope } => gain * (slope * x).tanh(),
            ActivationKind::PiecewiseLinear { points } => {
                if points.is_empty() {
                    return 0.0;
                }
                if x <= points[0].0 {
                    return points[0].1;
                }
                let last = points.len() - 1;
                if x >= points[last].0 {
                    return points[last].1;
                }
                let j = points.partition_point(|p| p.0 <= x);
                let (x0, y0) = points[j - 1];
                let (x1, y1) = points[j];
                if x1 == x0 {
                    y1
                } else {
                    y0 + (y1 - y0) * (x - x0) / (x1 - x0)
                }
            }
        }
    }

    /// Smallest Lipschitz constant valid for this activation on all of ℝ.
    pub fn required_lipschitz(&self) -> f64 {
        match &self.kind {
            ActivationKind::ScaledTanh { gain, slope } => (gain * slope).abs(),
            ActivationKind::PiecewiseLinear { points } => points
                .windows(2)
                .map(|w| {
                    let dx = w[1].0 - w[0].0;
                    if dx > 0.0 {
                        ((w[1].1 - w[0].1) / dx).abs()
                    } else {
                        0.0
                    }
                })
                .fold(0.0, f64::max),
        }
    }

    /// Whether the declared constant is a valid bound (H1).
    pub fn lipschitz_consistent(&self) -> bool {
        self.lipschitz >= self.required_lipschitz() * (1.0 - 1e-12)
    }

    fn validate_points(&self) -> Result<()> {
        if let ActivationKind::PiecewiseLinear { points } = &self.kind {
            if points.is_empty() {
                return Err(Error::invalid(
                    "activation",
                    "piecewise-linear activation needs at least one breakpoint",
                ));
            }
            if points.windows(2).any(|w| w[1].0 < w[0].0) {
                return Err(Error::invalid(
                    "activation",
                    "piecewise-linear breakpoints must be sorted by x",
                ));
            }
        }
        Ok(())
    }
}

// ---------------------------------------------------------------------------
// Network
// ---------------------------------------------------------------------------

/// The smooth part of the model: decay rates `a_i`, connection matrices
/// `B = (b_ij)` and `C = (c_ij)`, biases `d_i` and the two activation
/// families (`f` acts on the current state, `g` on the frozen state).
#[derive(Debug, Clone)]
pub struct NetworkSpec {
    m: usize,
    a: Vec<f64>,
    b: Vec<Vec<f64>>,
    c: Vec<Vec<f64>>,
    d: Vec<f64>,
    f: Vec<ActivationSpec>,
    g: Vec<ActivationSpec>,
}

impl NetworkSpec {
    pub fn new(
        a: Vec<f64>,
        b: Vec<Vec<f64>>,
        c: Vec<Vec<f64>>,
        d: Vec<f64>,
        f: Vec<ActivationSpec>,
        g: Vec<ActivationSpec>,
    ) -> Result<Self> {
        let m = a.len();
        if m == 0 {
            return Err(Error::invalid("network", "unit count must be positive"));
        }
        let dim = |what, got| {
            if got == m {
                Ok(())
            } else {
                Err(Error::DimensionMismatch {
                    what,
                    expected: m,
                    got,
                })
            }
        };
        dim("d", d.len())?;
        dim("f", f.len())?;
        dim("g", g.len())?;
        dim("B rows", b.len())?;
        dim("C rows", c.len())?;
        for row in &b {
            dim("B columns", row.len())?;
        }
        for row in &c {
            dim("C columns", row.len())?;
        }
        for act in f.iter().chain(g.iter()) {
            act.validate_points()?;
        }
        Ok(NetworkSpec { m, a, b, c, d, f, g })
    }

    pub fn unit_count(&self) -> usize {
        self.m
    }
    pub fn a(&self) -> &[f64] {
        &self.a
    }
    pub fn b(&self) -> &[Vec<f64>] {
        &self.b
    }
    pub fn c(&self) -> &[Vec<f64>] {
        &self.c
    }
    pub fn d(&self) -> &[f64] {
        &self.d
    }
    pub fn f(&self) -> &[ActivationSpec] {
        &self.f
    }
    pub fn g(&self) -> &[ActivationSpec] {
        &self.g
    }

    /// `Σ_j |b_ji|` — absolute sum of column `i` of `B`.
    pub fn col_abs_sum_b(&self, i: usize) -> f64 {
        self.b.iter().map(|row| row[i].abs()).sum()
    }

    /// `Σ_j |c_ji|` — absolute sum of column `i` of `C`.
    pub fn col_abs_sum_c(&self, i: usize) -> f64 {
        self.c.iter().map(|row| row[i].abs()).sum()
    }
}

/// Vector field of the smooth flow with a frozen delayed argument:
/// `-a_i x_i + Σ_j b_ij f_j(x_j) + Σ_j c_ij g_j(x_frozen_j) + d_i`.
///
/// `x_frozen` is the solution value at `β(t)`; `t` itself does not enter
/// (the system is autonomous between events) but is kept for signature
/// parity with the integrator's step functions.
pub fn rhs(_t: f64, x: &[f64], x_frozen: &[f64], spec: &NetworkSpec) -> Result<Vec<f64>> {
    if x.len() != spec.m {
        return Err(Error::DimensionMismatch {
            what: "x",
            expected: spec.m,
            got: x.len(),
        });
    }
    if x_frozen.len() != spec.m {
        return Err(Error::DimensionMismatch {
            what: "x_frozen",
            expected: spec.m,
            got: x_frozen.len(),
        });
    }
    let mut out = vec![0.0; spec.m];
    rhs_into(x, x_frozen, spec, &mut out);
    Ok(out)
}

/// Hot-path variant without dimension checks; callers validate once.
pub(crate) fn rhs_into(x: &[f64], x_frozen: &[f64], spec: &NetworkSpec, out: &mut [f64]) {
    let m = spec.m;
    let mut fx = vec![0.0; m];
    let mut gx = vec![0.0; m];
    for j in 0..m {
        fx[j] = spec.f[j].eval(x[j]);
        gx[j] = spec.g[j].eval(x_frozen[j]);
    }
    for i in 0..m {
        let mut acc = -spec.a[i] * x[i] + spec.d[i];
        let (brow, crow) = (&spec.b[i], &spec.c[i]);
        for j in 0..m {
            acc += brow[j] * fx[j] + crow[j] * gx[j];
        }
        out[i] = acc;
    }
}

// ---------------------------------------------------------------------------
// Time structure
// ---------------------------------------------------------------------------

/// The two event sequences: `θ` (argument switches) and `τ` (impulses),
/// stored as explicit finite prefixes plus an optional ω-periodic extension
/// rule `θ_{k+p1} = θ_k + ω`, `τ_{k+p} = τ_k + ω` (H6).
///
/// `p` (the maximal number of impulses strictly inside a θ-interval) is
/// always computed from the stored sequences, never trusted from input.
#[derive(Debug, Clone)]
pub struct TimeStructure {
    theta: Vec<f64>,
    tau: Vec<f64>,
    theta_bar: f64,
    tau_under: f64,
    omega: Option<f64>,
    /// switch points per period (when periodic)
    p1: Option<usize>,
    /// impulse moments per period (when periodic)
    p_period: Option<usize>,
    /// max number of τ points strictly inside one θ-interval
    p: usize,
}

impl TimeStructure {
    /// Build and validate a time structure. `theta` must be non-empty and both
    /// prefixes strictly increasing; when `omega` is given, the prefixes must
    /// be consistent with their periodic extension rules.
    ///
    /// Disjointness of τ and θ and the declared gap bounds are *soft*
    /// invariants reported by [`validate`], not construction errors.
    pub fn new(
        theta: Vec<f64>,
        tau: Vec<f64>,
        theta_bar: f64,
        tau_under: f64,
        omega: Option<f64>,
    ) -> Result<Self> {
        if theta.is_empty() {
            return Err(Error::invalid("time structure", "θ prefix must be non-empty"));
        }
        for (name, seq) in [("θ", &theta), ("τ", &tau)] {
            if seq.iter().any(|v| !v.is_finite()) {
                return Err(Error::invalid("time structure", format!("{name} contains a non-finite value")));
            }
            if seq.windows(2).any(|w| w[1] <= w[0]) {
                return Err(Error::invalid(
                    "time structure",
                    format!("{name} prefix must be strictly increasing"),
                ));
            }
        }
        if !(theta_bar > 0.0) || !(tau_under > 0.0) {
            return Err(Error::invalid(
                "time structure",
                "theta_bar and tau_under must be positive",
            ));
        }

        let (p1, p_period) = match omega {
            None => (None, None),
            Some(om) => {
                if !(om > 0.0) || !om.is_finite() {
                    return Err(Error::invalid("time structure", "omega must be positive"));
                }
                let tol = SEQ_TOL * (1.0 + om.abs());
                let p1 = theta.iter().take_while(|&&v| v < theta[0] + om - tol).count();
                if p1 == 0 {
                    return Err(Error::invalid(
                        "time structure",
                        "θ prefix has no entry inside one period",
                    ));
                }
                for k in 0..theta.len() {
                    if k + p1 < theta.len() && (theta[k + p1] - theta[k] - om).abs() > tol {
                        return Err(Error::invalid(
                            "time structure",
                            format!("θ prefix breaks the (ω, p1) property at index {k}"),
                        ));
                    }
                }
                let pp = if tau.is_empty() {
                    0
                } else {
                    let pp = tau.iter().take_while(|&&v| v < tau[0] + om - tol).count();
                    for k in 0..tau.len() {
                        if k + pp < tau.len() && (tau[k + pp] - tau[k] - om).abs() > tol {
                            return Err(Error::invalid(
                                "time structure",
                                format!("τ prefix breaks the (ω, p) property at index {k}"),
                            ));
                        }
                    }
                    pp
                };
                (Some(p1), Some(pp))
            }
        };

        let mut ts = TimeStructure {
            theta,
            tau,
            theta_bar,
            tau_under,
            omega,
            p1,
            p_period,
            p: 0,
        };
        ts.p = ts.compute_p();
        Ok(ts)
    }

    /// Convenience constructor for an ω-periodic structure.
    pub fn periodic(
        theta: Vec<f64>,
        tau: Vec<f64>,
        omega: f64,
        theta_bar: f64,
        tau_under: f64,
    ) -> Result<Self> {
        Self::new(theta, tau, theta_bar, tau_under, Some(omega))
    }

    /// Max count of τ points strictly inside one θ-interval.
    fn compute_p(&self) -> usize {
        let mut max_p = 0usize;
        // enough intervals to cover one period (or the whole prefix)
        let limit = match (self.omega, self.p1) {
            (Some(_), Some(p1)) => p1 + self.theta.len(),
            _ => self.theta.len().saturating_sub(1),
        };
        for k in 0..limit {
            let (Some(lo), Some(hi)) = (self.theta_at(k), self.theta_at(k + 1)) else {
                break;
            };
            let n = self
                .taus_between(lo, hi, false, false)
                .len();
            max_p = max_p.max(n);
        }
        max_p
    }

    pub fn theta_bar(&self) -> f64 {
        self.theta_bar
    }
    pub fn tau_under(&self) -> f64 {
        self.tau_under
    }
    pub fn omega(&self) -> Option<f64> {
        self.omega
    }
    /// Switch points per period, when periodic.
    pub fn p1(&self) -> Option<usize> {
        self.p1
    }
    /// Impulse moments per period, when periodic.
    pub fn p_period(&self) -> Option<usize> {
        self.p_period
    }
    /// Max impulses strictly inside one θ-interval (computed, H3/H4's `p`).
    pub fn p(&self) -> usize {
        self.p
    }
    pub fn theta_prefix(&self) -> &[f64] {
        &self.theta
    }
    pub fn tau_prefix(&self) -> &[f64] {
        &self.tau
    }

    /// `θ_k`, using the periodic extension beyond the stored prefix.
    pub fn theta_at(&self, k: usize) -> Option<f64> {
        seq_at(&self.theta, self.p1, self.omega, k)
    }

    /// `τ_k`, using the periodic extension beyond the stored prefix.
    pub fn tau_at(&self, k: usize) -> Option<f64> {
        seq_at(&self.tau, self.p_period, self.omega, k)
    }

    /// Index `k` with `θ_k ≤ t < θ_{k+1}` (for the last represented node of a
    /// non-periodic structure, `t = θ_last` maps to `k = last`).
    pub fn theta_index_of(&self, t: f64) -> Result<usize> {
        let theta0 = self.theta[0];
        if t < theta0 - SEQ_TOL {
            return Err(Error::OutOfThetaRange { t, theta0 });
        }
        let t = t.max(theta0);
        match (self.omega, self.p1) {
            (Some(om), Some(p1)) => {
                let mut cycles = ((t - theta0) / om).floor() as i64;
                if cycles < 0 {
                    cycles = 0;
                }
                let mut tp = t - cycles as f64 * om;
                while tp >= theta0 + om {
                    tp -= om;
                    cycles += 1;
                }
                while tp < theta0 {
                    tp += om;
                    cycles -= 1;
                }
                if cycles < 0 {
                    return Err(Error::OutOfThetaRange { t, theta0 });
                }
                // period folding can land a switch value an ulp below its
                // stored representative; snap to keep β right continuous
                let window = &self.theta[..p1];
                let j = window
                    .partition_point(|&v| v <= tp + SEQ_TOL)
                    .saturating_sub(1);
                Ok(cycles as usize * p1 + j)
            }
            _ => {
                let last = *self.theta.last().unwrap();
                if t > last + SEQ_TOL {
                    return Err(Error::OutOfThetaRange { t, theta0 });
                }
                let t = t.min(last);
                Ok(self
                    .theta
                    .partition_point(|&v| v <= t + SEQ_TOL)
                    .saturating_sub(1))
            }
        }
    }

    /// The identification function `β(t) = θ_k` for `θ_k ≤ t < θ_{k+1}`.
    pub fn beta(&self, t: f64) -> Result<f64> {
        let k = self.theta_index_of(t)?;
        Ok(self.theta_at(k).unwrap())
    }

    /// Largest represented θ value, `None` when the structure extends
    /// periodically without bound.
    pub fn max_theta(&self) -> Option<f64> {
        if self.omega.is_some() {
            None
        } else {
            self.theta.last().copied()
        }
    }

    /// θ points in the window, with their indices.
    pub fn thetas_between(&self, lo: f64, hi: f64, incl_lo: bool, incl_hi: bool) -> Vec<(usize, f64)> {
        seq_between(|k| self.theta_at(k), lo, hi, incl_lo, incl_hi)
    }

    /// τ points in the window, with their global indices (which index the
    /// impulse family).
    pub fn taus_between(&self, lo: f64, hi: f64, incl_lo: bool, incl_hi: bool) -> Vec<(usize, f64)> {
        seq_between(|k| self.tau_at(k), lo, hi, incl_lo, incl_hi)
    }
}

fn seq_at(prefix: &[f64], per: Option<usize>, omega: Option<f64>, k: usize) -> Option<f64> {
    if k < prefix.len() {
        return Some(prefix[k]);
    }
    match (per, omega) {
        (Some(p), Some(om)) if p > 0 => {
            let cycles = (k / p) as f64;
            Some(prefix[k % p] + cycles * om)
        }
        _ => None,
    }
}

fn seq_between(
    get: impl Fn(usize) -> Option<f64>,
    lo: f64,
    hi: f64,
    incl_lo: bool,
    incl_hi: bool,
) -> Vec<(usize, f64)> {
    let mut out = Vec::new();
    let mut k = 0usize;
    while let Some(v) = get(k) {
        let above = if incl_lo { v >= lo } else { v > lo };
        let below = if incl_hi { v <= hi } else { v < hi };
        if above && below {
            out.push((k, v));
        }
        if v > hi {
            break;
        }
        k += 1;
    }
    out
}

/// Free-function form of [`TimeStructure::beta`].
pub fn beta(t: f64, ts: &TimeStructure) -> Result<f64> {
    ts.beta(t)
}

// ---------------------------------------------------------------------------
// Impulses
// ---------------------------------------------------------------------------

/// One scalar jump map `I_ik`.
#[derive(Debug, Clone, PartialEq)]
pub enum ImpulseMap {
    /// `x ↦ slope · x + offset`
    Affine { slope: f64, offset: f64 },
    /// `x ↦ scale · (x − center)²`
    CenteredQuadratic { center: f64, scale: f64 },
    Zero,
}

impl ImpulseMap {
    pub fn eval(&self, x: f64) -> f64 {
        match self {
            ImpulseMap::Affine { slope, offset } => slope * x + offset,
            ImpulseMap::CenteredQuadratic { center, scale } => scale * (x - center) * (x - center),
            ImpulseMap::Zero => 0.0,
        }
    }

    /// Smallest Lipschitz constant valid on `[lo, hi]`.
    pub fn required_lipschitz_on(&self, lo: f64, hi: f64) -> f64 {
        match self {
            ImpulseMap::Affine { slope, .. } => slope.abs(),
            ImpulseMap::CenteredQuadratic { center, scale } => {
                let r = (lo - center).abs().max((hi - center).abs());
                2.0 * scale.abs() * r
            }
            ImpulseMap::Zero => 0.0,
        }
    }
}

/// The indexed family `I_ik` with its declared Lipschitz constant `ℓ` (H2).
/// `maps[k][i]` is the map for unit `i` at the k-th impulse moment; indices
/// beyond the stored rows repeat with period `maps.len()` (`I_{k+p} = I_k`,
/// H6).
#[derive(Debug, Clone)]
pub struct ImpulseFamily {
    maps: Vec<Vec<ImpulseMap>>,
    ell: f64,
}

impl ImpulseFamily {
    pub fn new(maps: Vec<Vec<ImpulseMap>>, ell: f64) -> Result<Self> {
        if maps.is_empty() {
            return Err(Error::invalid("impulse family", "needs at least one impulse row"));
        }
        let m = maps[0].len();
        if m == 0 || maps.iter().any(|row| row.len() != m) {
            return Err(Error::invalid(
                "impulse family",
                "all impulse rows must have the same positive unit count",
            ));
        }
        if !(ell >= 0.0) {
            return Err(Error::invalid("impulse family", "ell must be nonnegative"));
        }
        Ok(ImpulseFamily { maps, ell })
    }

    /// Family with no effect: a single all-zero row.
    pub fn zero(m: usize) -> Self {
        ImpulseFamily {
            maps: vec![vec![ImpulseMap::Zero; m]],
            ell: 0.0,
        }
    }

    pub fn ell(&self) -> f64 {
        self.ell
    }
    /// Number of stored impulse rows (the period of `I_{k+p} = I_k`).
    pub fn period(&self) -> usize {
        self.maps.len()
    }
    pub fn unit_count(&self) -> usize {
        self.maps[0].len()
    }
    pub fn map(&self, k: usize, i: usize) -> &ImpulseMap {
        &self.maps[k % self.maps.len()][i]
    }
    pub fn eval(&self, k: usize, i: usize, x: f64) -> f64 {
        self.map(k, i).eval(x)
    }

    /// `max_{k,i} |I_ik(x_i)|` over one impulse period.
    pub fn max_jump_at(&self, x: &[f64]) -> f64 {
        let mut worst: f64 = 0.0;
        for row in &self.maps {
            for (i, map) in row.iter().enumerate() {
                worst = worst.max(map.eval(x[i]).abs());
            }
        }
        worst
    }

    /// `k3 = max_{k,i} |I_ik(0)|` over one impulse period.
    pub fn max_jump_at_zero(&self) -> f64 {
        self.max_jump_at(&vec![0.0; self.unit_count()])
    }
}

// ---------------------------------------------------------------------------
// Trajectories
// ---------------------------------------------------------------------------

/// What a trajectory sample records.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum SampleTag {
    Interior,
    Switch,
    ImpulseLeft,
    ImpulseRight,
}

impl SampleTag {
    pub fn as_str(&self) -> &'static str {
        match self {
            SampleTag::Interior => "interior",
            SampleTag::Switch => "switch",
            SampleTag::ImpulseLeft => "impulse-left",
            SampleTag::ImpulseRight => "impulse-right",
        }
    }
}

#[derive(Debug, Clone)]
pub struct Sample {
    pub t: f64,
    pub x: Vec<f64>,
    pub tag: SampleTag,
}

/// Right-continuous piecewise state record. Every impulse moment carries an
/// impulse-left and an impulse-right sample at the same time; the sample *at*
/// `τ_k` in the right-continuous sense is the impulse-right one.
#[derive(Debug, Clone)]
pub struct Trajectory {
    t0: f64,
    samples: Vec<Sample>,
    spec: NetworkSpec,
    ts: TimeStructure,
}

impl Trajectory {
    pub(crate) fn new(t0: f64, samples: Vec<Sample>, spec: NetworkSpec, ts: TimeStructure) -> Self {
        Trajectory {
            t0,
            samples,
            spec,
            ts,
        }
    }

    pub fn t0(&self) -> f64 {
        self.t0
    }
    pub fn t_end(&self) -> f64 {
        self.samples.last().map(|s| s.t).unwrap_or(self.t0)
    }
    pub fn dim(&self) -> usize {
        self.spec.unit_count()
    }
    pub fn samples(&self) -> &[Sample] {
        &self.samples
    }
    pub fn spec(&self) -> &NetworkSpec {
        &self.spec
    }
    pub fn time_structure(&self) -> &TimeStructure {
        &self.ts
    }
    pub fn final_state(&self) -> &[f64] {
        &self.samples.last().expect("trajectory has samples").x
    }

    /// Right-continuous value at `t` (the last sample at an event time),
    /// linearly interpolated between integration nodes. `None` outside the
    /// covered span.
    pub fn value_at(&self, t: f64) -> Option<Vec<f64>> {
        self.value_at_impl(t, true)
    }

    /// Left-limit value at `t` (the first sample at an event time).
    pub fn left_value_at(&self, t: f64) -> Option<Vec<f64>> {
        self.value_at_impl(t, false)
    }

    fn value_at_impl(&self, t: f64, right: bool) -> Option<Vec<f64>> {
        lookup_samples(&self.samples, t, right)
    }

    /// CSV export: header `t,x1,...,xm,tag`; impulse times emit two rows
    /// (impulse-left then impulse-right) with identical `t`.
    pub fn write_csv<W: Write>(&self, w: &mut W) -> io::Result<()> {
        write!(w, "t")?;
        for i in 1..=self.dim() {
            write!(w, ",x{i}")?;
        }
        writeln!(w, ",tag")?;
        for s in &self.samples {
            write!(w, "{}", s.t)?;
            for v in &s.x {
                write!(w, ",{v}")?;
            }
            writeln!(w, ",{}", s.tag.as_str())?;
        }
        Ok(())
    }
}

/// Shared lookup over a time-ordered sample list: exact event times resolve
/// to the last (`right = true`) or first sample at that time, anything
/// strictly between samples interpolates linearly. `None` outside the span.
pub(crate) fn lookup_samples(s: &[Sample], t: f64, right: bool) -> Option<Vec<f64>> {
    if s.is_empty() || t < s[0].t - SEQ_TOL || t > s[s.len() - 1].t + SEQ_TOL {
        return None;
    }
    let t = t.clamp(s[0].t, s[s.len() - 1].t);
    // index of the first sample with time > t
    let hi = s.partition_point(|smp| smp.t <= t);
    // samples with time == t occupy lo..hi
    let mut lo = hi;
    while lo > 0 && s[lo - 1].t == t {
        lo -= 1;
    }
    if lo < hi {
        let idx = if right { hi - 1 } else { lo };
        return Some(s[idx].x.clone());
    }
    if hi == 0 || hi == s.len() {
        return Some(s[hi.min(s.len() - 1)].x.clone());
    }
    let (s0, s1) = (&s[hi - 1], &s[hi]);
    let w = (t - s0.t) / (s1.t - s0.t);
    Some(
        s0.x.iter()
            .zip(&s1.x)
            .map(|(a, b)| a + w * (b - a))
            .collect(),
    )
}

// ---------------------------------------------------------------------------
// Structural validation
// ---------------------------------------------------------------------------

/// One violated structural invariant.
#[derive(Debug, Clone, Serialize)]
pub struct Violation {
    pub code: String,
    pub detail: String,
}

/// Result of [`validate`]: an empty list means the triple is structurally
/// sound on the given operating box.
#[derive(Debug, Clone, Default, Serialize)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }
    fn push(&mut self, code: &str, detail: String) {
        self.violations.push(Violation {
            code: code.to_string(),
            detail,
        });
    }
    pub fn has(&self, code: &str) -> bool {
        self.violations.iter().any(|v| v.code == code)
    }
}

/// Check every structural invariant of the model triple: positivity of the
/// decay rates, θ/τ disjointness and monotone gap bounds, Lipschitz
/// consistency of the activations (globally) and of the impulse maps on the
/// supplied operating `box_` (one `(lo, hi)` pair per unit). Violations are
/// the payload, not errors.
pub fn validate(
    spec: &NetworkSpec,
    ts: &TimeStructure,
    imp: &ImpulseFamily,
    box_: &[(f64, f64)],
) -> ValidationReport {
    let mut rep = ValidationReport::default();
    let m = spec.unit_count();

    for (i, &ai) in spec.a().iter().enumerate() {
        if !(ai > 0.0) {
            rep.push(
                "nonpositive-decay-rate",
                format!("a_{} = {} must be positive", i + 1, ai),
            );
        }
    }

    if imp.unit_count() != m {
        rep.push(
            "impulse-dimension-mismatch",
            format!("impulse rows have {} units, network has {}", imp.unit_count(), m),
        );
    }
    if box_.len() != m {
        rep.push(
            "box-dimension-mismatch",
            format!("operating box has {} entries, network has {}", box_.len(), m),
        );
    }

    for (name, acts) in [("f", spec.f()), ("g", spec.g())] {
        for (j, act) in acts.iter().enumerate() {
            if !act.lipschitz_consistent() {
                rep.push(
                    "activation-lipschitz-underdeclared",
                    format!(
                        "{}_{}: declared {} < required {}",
                        name,
                        j + 1,
                        act.lipschitz,
                        act.required_lipschitz()
                    ),
                );
            }
        }
    }

    if imp.unit_count() == m && box_.len() == m {
        for k in 0..imp.period() {
            for i in 0..m {
                let (lo, hi) = box_[i];
                let req = imp.map(k, i).required_lipschitz_on(lo, hi);
                if req > imp.ell() * (1.0 + 1e-12) + 1e-15 {
                    rep.push(
                        "impulse-lipschitz-underdeclared",
                        format!(
                            "I_{{{},{}}} needs Lipschitz {} on [{}, {}] but ℓ = {}",
                            i + 1,
                            k,
                            req,
                            lo,
                            hi,
                            imp.ell()
                        ),
                    );
                }
            }
        }
    }

    // Disjointness and gap bounds over the prefix plus (when periodic) two
    // extra periods, which covers every distinct gap and crossing pattern.
    let span_hi = match ts.omega() {
        Some(om) => {
            let base = ts
                .theta_prefix()
                .last()
                .copied()
                .unwrap()
                .max(ts.tau_prefix().last().copied().unwrap_or(ts.theta_prefix()[0]));
            base + 2.0 * om
        }
        None => ts
            .theta_prefix()
            .last()
            .copied()
            .unwrap()
            .max(ts.tau_prefix().last().copied().unwrap_or(f64::MIN)),
    };
    let lo = ts.theta_prefix()[0].min(ts.tau_prefix().first().copied().unwrap_or(f64::MAX));
    let thetas = ts.thetas_between(lo, span_hi, true, true);
    let taus = ts.taus_between(lo, span_hi, true, true);

    for &(_, tv) in &taus {
        for &(_, thv) in &thetas {
            if (tv - thv).abs() <= SEQ_TOL {
                rep.push(
                    "tau-theta-intersection",
                    format!("τ = {tv} coincides with θ = {thv}"),
                );
            }
        }
    }

    for w in thetas.windows(2) {
        let gap = w[1].1 - w[0].1;
        if gap > ts.theta_bar() * (1.0 + 1e-12) + SEQ_TOL {
            rep.push(
                "theta-gap-exceeds-bound",
                format!("θ gap {} at {} exceeds theta_bar = {}", gap, w[0].1, ts.theta_bar()),
            );
        }
    }
    for w in taus.windows(2) {
        let gap = w[1].1 - w[0].1;
        if gap < ts.tau_under() * (1.0 - 1e-12) - SEQ_TOL {
            rep.push(
                "tau-gap-below-bound",
                format!("τ gap {} at {} is below tau_under = {}", gap, w[0].1, ts.tau_under()),
            );
        }
    }

    if let Some(pp) = ts.p_period() {
        if pp > 0 && pp % imp.period() != 0 {
            rep.push(
                "impulse-period-mismatch",
                format!(
                    "impulse family period {} does not divide the {} impulse moments per ω-period",
                    imp.period(),
                    pp
                ),
            );
        }
    }

    rep
}
