//! The ω-periodic solution as the fixed point of the Green's-function
//! operator
//!
//! ```text
//! (Fφ)_i(t) = ∫₀^ω G_i(t,s) [Σ_j b_ij f_j(φ_j(s)) + Σ_j c_ij g_j(φ_j(β(s))) + d_i] ds
//!             + Σ_k G_i(t, τ_k) I_ik(φ_i(τ_k⁻))
//! ```
//!
//! with the piecewise-exponential kernel `G_i` inverting `d/dt + a_i` on
//! periodic functions. The space of periodic right-continuous functions is
//! discretized as an event-aligned grid on `[0, ω]` with dual nodes at every
//! impulse moment, which keeps the jumps sharp; the operator is applied
//! nodewise with a composite trapezoid rule per smooth panel.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::hypotheses::derive_constants;
use crate::model::{ImpulseFamily, NetworkSpec, TimeStructure, Trajectory, SEQ_TOL};
use crate::norm1;

/// The Green's function for unit `i`:
/// `(1 − e^{−a_i ω})⁻¹ e^{−a_i (t−s)}` for `s ≤ t`, and
/// `(1 − e^{−a_i ω})⁻¹ e^{−a_i (ω+t−s)}` for `s > t`.
///
/// Arguments must lie in `[0, ω]`; `a_i` must be positive.
pub fn greens_function(t: f64, s: f64, omega: f64, a_i: f64) -> Result<f64> {
    if !(omega > 0.0) {
        return Err(Error::invalid("greens_function", "omega must be positive"));
    }
    if !(a_i > 0.0) {
        return Err(Error::invalid("greens_function", "a_i must be positive"));
    }
    if t < -SEQ_TOL || t > omega + SEQ_TOL || s < -SEQ_TOL || s > omega + SEQ_TOL {
        return Err(Error::invalid(
            "greens_function",
            format!("t = {t}, s = {s} must lie in [0, {omega}]"),
        ));
    }
    Ok(greens_branch(t, s, omega, a_i, s > t))
}

#[inline]
fn greens_branch(t: f64, s: f64, omega: f64, a: f64, right_of_t: bool) -> f64 {
    let pref = 1.0 / (1.0 - (-a * omega).exp());
    if right_of_t {
        pref * (-a * (omega + t - s)).exp()
    } else {
        pref * (-a * (t - s)).exp()
    }
}

/// Which side of an impulse moment a grid node represents.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum NodeSide {
    Normal,
    TauLeft,
    TauRight,
}

#[derive(Debug, Clone)]
pub struct GridNode {
    pub t: f64,
    pub side: NodeSide,
    /// Whether this node sits on a switch point (θ anchor).
    pub is_theta: bool,
    pub x: Vec<f64>,
}

/// Event-aligned grid on `[0, ω]`: contains 0, ω, every θ and τ in the
/// window (dual nodes at each τ) plus uniform refinement to resolution
/// `h_grid`. The period window is anchored at absolute time 0.
#[derive(Debug, Clone)]
pub struct PeriodicGrid {
    omega: f64,
    nodes: Vec<GridNode>,
    /// per-node index of the θ node whose value `β(t)` reads (modulo ω)
    beta_idx: Vec<usize>,
    /// (left dual node index, global impulse index) per τ in the window
    tau_entries: Vec<(usize, usize)>,
}

impl PeriodicGrid {
    /// Build the event-aligned grid with every node initialized to `init`.
    pub fn build(ts: &TimeStructure, h_grid: f64, init: &[f64]) -> Result<Self> {
        let omega = ts
            .omega()
            .ok_or(Error::OmegaRequired("periodic grid needs an ω-periodic structure"))?;
        if !(h_grid > 0.0) {
            return Err(Error::invalid("h_grid", "must be positive"));
        }

        let taus = ts.taus_between(0.0, omega, true, true);
        for &(_, tv) in &taus {
            if tv < SEQ_TOL || tv > omega - SEQ_TOL {
                return Err(Error::invalid(
                    "time structure",
                    "an impulse moment on the period boundary is not supported",
                ));
            }
        }
        let thetas = ts.thetas_between(0.0, omega, true, false);

        #[derive(Clone, Copy)]
        enum Anchor {
            Plain,
            Theta,
            Tau(usize),
        }
        let mut anchors: Vec<(f64, Anchor)> = vec![(0.0, Anchor::Plain), (omega, Anchor::Plain)];
        for &(_, tv) in &thetas {
            if tv > SEQ_TOL {
                anchors.push((tv, Anchor::Theta));
            } else {
                anchors[0].1 = Anchor::Theta;
            }
        }
        // ω is a switch point exactly when 0 is (periodicity)
        if matches!(anchors[0].1, Anchor::Theta) {
            anchors[1].1 = Anchor::Theta;
        }
        for &(k, tv) in &taus {
            anchors.push((tv, Anchor::Tau(k)));
        }
        anchors.sort_by(|a, b| a.0.total_cmp(&b.0));

        let mut nodes: Vec<GridNode> = Vec::new();
        let mut tau_entries = Vec::new();
        for w in 0..anchors.len() {
            let (tv, kind) = anchors[w];
            match kind {
                Anchor::Tau(k) => {
                    tau_entries.push((nodes.len(), k));
                    nodes.push(GridNode {
                        t: tv,
                        side: NodeSide::TauLeft,
                        is_theta: false,
                        x: init.to_vec(),
                    });
                    nodes.push(GridNode {
                        t: tv,
                        side: NodeSide::TauRight,
                        is_theta: false,
                        x: init.to_vec(),
                    });
                }
                _ => nodes.push(GridNode {
                    t: tv,
                    side: NodeSide::Normal,
                    is_theta: matches!(kind, Anchor::Theta),
                    x: init.to_vec(),
                }),
            }
            if w + 1 < anchors.len() {
                let next = anchors[w + 1].0;
                let n = ((next - tv) / h_grid - 1e-9).ceil().max(1.0) as usize;
                for i in 1..n {
                    nodes.push(GridNode {
                        t: tv + (next - tv) * i as f64 / n as f64,
                        side: NodeSide::Normal,
                        is_theta: false,
                        x: init.to_vec(),
                    });
                }
            }
        }

        // β lookup per node: the θ node at (β(t) mod ω)
        let theta_node_idx: Vec<usize> = nodes
            .iter()
            .enumerate()
            .filter(|(_, n)| n.is_theta)
            .map(|(i, _)| i)
            .collect();
        if theta_node_idx.is_empty() {
            return Err(Error::invalid(
                "time structure",
                "no switch point inside one period",
            ));
        }
        let mut beta_idx = Vec::with_capacity(nodes.len());
        for node in &nodes {
            // the last θ node at or before t, wrapping to the last one in the
            // window when t precedes the first switch point
            let before: Option<&usize> = theta_node_idx
                .iter()
                .filter(|&&j| nodes[j].t <= node.t + SEQ_TOL && nodes[j].t < omega - SEQ_TOL)
                .next_back();
            let j = match before {
                Some(&j) => j,
                None => *theta_node_idx
                    .iter()
                    .filter(|&&j| nodes[j].t < omega - SEQ_TOL)
                    .next_back()
                    .expect("a θ node below ω exists"),
            };
            beta_idx.push(j);
        }

        Ok(PeriodicGrid {
            omega,
            nodes,
            beta_idx,
            tau_entries,
        })
    }

    pub fn omega(&self) -> f64 {
        self.omega
    }
    pub fn nodes(&self) -> &[GridNode] {
        &self.nodes
    }
    pub fn dim(&self) -> usize {
        self.nodes[0].x.len()
    }
    pub fn start_value(&self) -> &[f64] {
        &self.nodes[0].x
    }
    pub fn end_value(&self) -> &[f64] {
        &self.nodes[self.nodes.len() - 1].x
    }

    /// Value at phase `s ∈ [0, ω]`; at dual nodes `right` picks the side.
    /// Linear interpolation between nodes.
    pub fn value_at(&self, s: f64, right: bool) -> Option<Vec<f64>> {
        let n = &self.nodes;
        if n.is_empty() || s < -SEQ_TOL || s > self.omega + SEQ_TOL {
            return None;
        }
        let s = s.clamp(0.0, self.omega);
        let hi = n.partition_point(|nd| nd.t <= s);
        let mut lo = hi;
        while lo > 0 && n[lo - 1].t == s {
            lo -= 1;
        }
        if lo < hi {
            return Some(n[if right { hi - 1 } else { lo }].x.clone());
        }
        if hi == 0 || hi == n.len() {
            return Some(n[hi.min(n.len() - 1)].x.clone());
        }
        let (n0, n1) = (&n[hi - 1], &n[hi]);
        let w = (s - n0.t) / (n1.t - n0.t);
        Some(
            n0.x.iter()
                .zip(&n1.x)
                .map(|(a, b)| a + w * (b - a))
                .collect(),
        )
    }

    /// `max over nodes of ‖this − other‖₁` (grids must share a layout).
    pub fn max_node_diff(&self, other: &PeriodicGrid) -> f64 {
        self.nodes
            .iter()
            .zip(&other.nodes)
            .map(|(a, b)| a.x.iter().zip(&b.x).map(|(u, v)| (u - v).abs()).sum())
            .fold(0.0, f64::max)
    }

    /// `max over nodes of ‖x‖₁` — the discrete sup norm.
    pub fn sup_norm1(&self) -> f64 {
        self.nodes.iter().map(|n| norm1(&n.x)).fold(0.0, f64::max)
    }

    /// CSV export in the trajectory schema, `t ∈ [0, ω]`.
    pub fn write_csv<W: std::io::Write>(&self, w: &mut W) -> std::io::Result<()> {
        write!(w, "t")?;
        for i in 1..=self.dim() {
            write!(w, ",x{i}")?;
        }
        writeln!(w, ",tag")?;
        for n in &self.nodes {
            let tag = match n.side {
                NodeSide::TauLeft => "impulse-left",
                NodeSide::TauRight => "impulse-right",
                NodeSide::Normal if n.is_theta => "switch",
                NodeSide::Normal => "interior",
            };
            write!(w, "{}", n.t)?;
            for v in &n.x {
                write!(w, ",{v}")?;
            }
            writeln!(w, ",{tag}")?;
        }
        Ok(())
    }
}

/// One application of the Green's-function operator `F` to the grid.
///
/// The quadrature is a composite trapezoid per smooth panel (panels never
/// straddle the target node, an event node, or the kernel's diagonal), the
/// frozen argument `β(s)` reads the grid's θ nodes exactly, and the impulse
/// sum uses the left dual values.
pub fn apply_f(
    phi: &PeriodicGrid,
    spec: &NetworkSpec,
    ts: &TimeStructure,
    imp: &ImpulseFamily,
) -> Result<PeriodicGrid> {
    let m = spec.unit_count();
    if phi.dim() != m {
        return Err(Error::DimensionMismatch {
            what: "grid",
            expected: m,
            got: phi.dim(),
        });
    }
    if imp.unit_count() != m {
        return Err(Error::DimensionMismatch {
            what: "impulse family",
            expected: m,
            got: imp.unit_count(),
        });
    }
    if spec.a().iter().any(|&a| !(a > 0.0)) {
        return Err(Error::invalid("network", "the Green's kernel needs a_i > 0"));
    }
    match ts.omega() {
        Some(om) if (om - phi.omega).abs() <= SEQ_TOL * (1.0 + om) => {}
        Some(om) => {
            return Err(Error::invalid(
                "grid",
                format!("grid period {} does not match the structure's ω = {om}", phi.omega),
            ))
        }
        None => return Err(Error::OmegaRequired("apply_f needs an ω-periodic structure")),
    }
    let omega = phi.omega;
    let nodes = &phi.nodes;
    let nn = nodes.len();

    // integrand (without the kernel) at every node-side
    let mut fv = vec![vec![0.0; m]; nn];
    for (idx, node) in nodes.iter().enumerate() {
        let frozen = &nodes[phi.beta_idx[idx]].x;
        for i in 0..m {
            let mut acc = spec.d()[i];
            for j in 0..m {
                acc += spec.b()[i][j] * spec.f()[j].eval(node.x[j])
                    + spec.c()[i][j] * spec.g()[j].eval(frozen[j]);
            }
            fv[idx][i] = acc;
        }
    }

    // jump contributions at the τ anchors
    let jump_vals: Vec<(f64, Vec<f64>)> = phi
        .tau_entries
        .iter()
        .map(|&(left_idx, k)| {
            let xl = &nodes[left_idx].x;
            let jv = (0..m).map(|i| imp.eval(k, i, xl[i])).collect();
            (nodes[left_idx].t, jv)
        })
        .collect();

    let mut out = phi.clone();
    for (idx, node) in nodes.iter().enumerate() {
        let t = node.t;
        for i in 0..m {
            let a = spec.a()[i];
            let mut acc = 0.0;
            for p in 0..nn - 1 {
                let (t1, t2) = (nodes[p].t, nodes[p + 1].t);
                if t2 <= t1 {
                    continue;
                }
                let right = t2 > t;
                let w = 0.5 * (t2 - t1);
                acc += w
                    * (greens_branch(t, t1, omega, a, right) * fv[p][i]
                        + greens_branch(t, t2, omega, a, right) * fv[p + 1][i]);
            }
            for (tau_t, jv) in &jump_vals {
                let right = *tau_t > t || (*tau_t == t && node.side == NodeSide::TauLeft);
                acc += greens_branch(t, *tau_t, omega, a, right) * jv[i];
            }
            out.nodes[idx].x[i] = acc;
        }
    }
    Ok(out)
}

/// Result of the fixed-point iteration for the periodic solution.
#[derive(Debug, Clone)]
pub struct PeriodicResult {
    pub phi_star: PeriodicGrid,
    pub iterations: usize,
    pub final_delta: f64,
    /// Largest per-sweep contraction ratio after the first sweep.
    pub alpha1_observed: Option<f64>,
    /// All measured sweep-to-sweep ratios.
    pub sweep_ratios: Vec<f64>,
    /// `α2/(1−α1)` — the certified sup-norm bound for the fixed point.
    pub h_bound: Option<f64>,
    /// Non-fatal hypothesis problems (H6/H7 failures).
    pub warnings: Vec<String>,
}

/// Iterate `φ ← Fφ` from `φ⁰ ≡ d/a` until the sup-grid change drops below
/// `tol`. H6/H7 certify convergence; when they fail the iteration still runs
/// best-effort and the result carries warnings.
pub fn find_periodic(
    spec: &NetworkSpec,
    ts: &TimeStructure,
    imp: &ImpulseFamily,
    h_grid: f64,
    tol: f64,
    max_sweeps: usize,
) -> Result<PeriodicResult> {
    let m = spec.unit_count();
    if spec.a().iter().any(|&a| !(a > 0.0)) {
        return Err(Error::invalid("network", "the Green's kernel needs a_i > 0"));
    }
    let init: Vec<f64> = (0..m).map(|i| spec.d()[i] / spec.a()[i]).collect();
    let mut phi = PeriodicGrid::build(ts, h_grid, &init)?;

    let dc = derive_constants(spec, ts, imp);
    let mut warnings = Vec::new();
    match dc.alpha1 {
        Some(a1) if a1 < 1.0 => {}
        Some(a1) => warnings.push(format!("H7 fails: α1 = {a1} ≥ 1, convergence not certified")),
        None => warnings.push("H7 unavailable (λ or ω undefined), convergence not certified".into()),
    }

    let scale = 1.0 + norm1(&init);
    let mut prev_delta: Option<f64> = None;
    let mut ratios = Vec::new();
    let mut final_delta = f64::MAX;
    for sweep in 1..=max_sweeps {
        let next = apply_f(&phi, spec, ts, imp)?;
        final_delta = next.max_node_diff(&phi);
        if let Some(prev) = prev_delta {
            let floor = 1e3 * f64::EPSILON * scale;
            if prev > floor && final_delta > floor {
                ratios.push(final_delta / prev);
            }
        }
        prev_delta = Some(final_delta);
        phi = next;
        if final_delta < tol {
            let alpha1_observed = ratios.iter().copied().fold(None, |acc: Option<f64>, r| {
                Some(acc.map_or(r, |a| a.max(r)))
            });
            return Ok(PeriodicResult {
                phi_star: phi,
                iterations: sweep,
                final_delta,
                alpha1_observed,
                sweep_ratios: ratios,
                h_bound: dc.h_bound,
                warnings,
            });
        }
    }
    Err(Error::NoConvergence {
        iterations: max_sweeps,
        last_delta: final_delta,
        last: phi.nodes[0].x.clone(),
    })
}

/// Object accepted by [`poincare_check`].
pub enum SampledRef<'a> {
    Trajectory(&'a Trajectory),
    Grid(&'a PeriodicGrid),
}

#[derive(Debug, Clone, Serialize)]
pub struct PoincareCheck {
    /// `‖x(t + ω) − x(t)‖₁` at the span start (trajectories) or the
    /// endpoint difference (grids).
    pub defect: f64,
    pub periodic: bool,
}

/// The Poincaré criterion: a solution is ω-periodic iff `x(ω) = x(0)`.
/// The object must cover a full period.
pub fn poincare_check(obj: SampledRef<'_>, omega: f64, tol: f64) -> Result<PoincareCheck> {
    if !(omega > 0.0) {
        return Err(Error::invalid("omega", "must be positive"));
    }
    let defect = match obj {
        SampledRef::Grid(g) => {
            if (g.omega() - omega).abs() > SEQ_TOL * (1.0 + omega) {
                return Err(Error::invalid(
                    "omega",
                    format!("grid period {} does not match requested {omega}", g.omega()),
                ));
            }
            norm1(
                &g.end_value()
                    .iter()
                    .zip(g.start_value())
                    .map(|(a, b)| a - b)
                    .collect::<Vec<_>>(),
            )
        }
        SampledRef::Trajectory(traj) => {
            let t0 = traj.t0();
            if traj.t_end() < t0 + omega - SEQ_TOL {
                return Err(Error::InsufficientCoverage(format!(
                    "trajectory spans [{}, {}], needs one period of {omega}",
                    t0,
                    traj.t_end()
                )));
            }
            let v0 = traj.value_at(t0).expect("start in span");
            let v1 = traj.value_at(t0 + omega).expect("period end in span");
            norm1(&v0.iter().zip(&v1).map(|(a, b)| b - a).collect::<Vec<_>>())
        }
    };
    Ok(PoincareCheck {
        defect,
        periodic: defect <= tol,
    })
}
