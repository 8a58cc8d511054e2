//! The model document: a JSON schema mirroring the library's domain types,
//! with strict validation (unknown keys rejected, kind-specific fields
//! checked before any computation).

use serde::{Deserialize, Serialize};

use irnn_core::model::{
    ActivationKind, ActivationSpec, ImpulseFamily, ImpulseMap, NetworkSpec, TimeStructure,
};

/// Input-layer error: schema violations or unreadable documents.
#[derive(Debug)]
pub struct SchemaError(pub String);

impl std::fmt::Display for SchemaError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.0)
    }
}
impl std::error::Error for SchemaError {}

fn err<T>(loc: &str, why: impl AsRef<str>) -> Result<T, SchemaError> {
    Err(SchemaError(format!("{loc}: {}", why.as_ref())))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelDocument {
    pub network: DocNetwork,
    pub time: DocTime,
    pub impulses: DocImpulses,
    pub run: DocRun,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DocNetwork {
    pub m: usize,
    pub a: Vec<f64>,
    #[serde(rename = "B")]
    pub b: Vec<Vec<f64>>,
    #[serde(rename = "C")]
    pub c: Vec<Vec<f64>>,
    pub d: Vec<f64>,
    pub f: Vec<DocActivation>,
    pub g: Vec<DocActivation>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DocActivation {
    pub kind: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gain: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub slope: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub points: Option<Vec<(f64, f64)>>,
    pub lipschitz: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DocTime {
    pub theta: Vec<f64>,
    pub tau: Vec<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub omega: Option<f64>,
    pub theta_bar: f64,
    pub tau_under: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DocImpulses {
    pub ell: f64,
    pub maps: Vec<Vec<DocImpulseMap>>,
    #[serde(rename = "box", skip_serializing_if = "Option::is_none")]
    pub operating_box: Option<DocBox>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DocImpulseMap {
    pub kind: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub slope: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub offset: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub center: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub scale: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DocBox {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DocRun {
    pub t0: f64,
    pub x0: Vec<f64>,
    pub t_end: f64,
    pub step: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tol: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub grid: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub slack: Option<f64>,
}

/// Everything a command pipeline needs, converted and cross-checked.
#[derive(Debug)]
pub struct BuiltModel {
    pub spec: NetworkSpec,
    pub ts: TimeStructure,
    pub imp: ImpulseFamily,
    pub operating_box: Vec<(f64, f64)>,
    pub run: RunParams,
}

#[derive(Debug, Clone)]
pub struct RunParams {
    pub t0: f64,
    pub x0: Vec<f64>,
    pub t_end: f64,
    pub step: f64,
    pub tol: f64,
    pub grid: Option<f64>,
    pub slack: f64,
}

impl ModelDocument {
    pub fn parse(text: &str) -> Result<Self, SchemaError> {
        serde_json::from_str(text).map_err(|e| {
            SchemaError(format!(
                "schema violation at line {}, column {}: {e}",
                e.line(),
                e.column()
            ))
        })
    }

    /// Canonical serialized form: fixed key order, shortest round-trip
    /// float representation.
    pub fn to_canonical_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("document serializes");
        s.push('\n');
        s
    }

    /// Convert to library types, verifying every cross-field constraint.
    pub fn build(&self) -> Result<BuiltModel, SchemaError> {
        let n = &self.network;
        let m = n.m;
        if m == 0 {
            return err("network.m", "must be positive");
        }
        let check_len = |loc: &str, got: usize| -> Result<(), SchemaError> {
            if got != m {
                err(loc, format!("expected {m} entries, found {got}"))
            } else {
                Ok(())
            }
        };
        check_len("network.a", n.a.len())?;
        check_len("network.d", n.d.len())?;
        check_len("network.B", n.b.len())?;
        check_len("network.C", n.c.len())?;
        for (i, row) in n.b.iter().enumerate() {
            check_len(&format!("network.B[{i}]"), row.len())?;
        }
        for (i, row) in n.c.iter().enumerate() {
            check_len(&format!("network.C[{i}]"), row.len())?;
        }
        check_len("network.f", n.f.len())?;
        check_len("network.g", n.g.len())?;

        let f = build_activations("network.f", &n.f)?;
        let g = build_activations("network.g", &n.g)?;
        let spec = NetworkSpec::new(
            n.a.clone(),
            n.b.clone(),
            n.c.clone(),
            n.d.clone(),
            f,
            g,
        )
        .map_err(|e| SchemaError(format!("network: {e}")))?;

        let ts = TimeStructure::new(
            self.time.theta.clone(),
            self.time.tau.clone(),
            self.time.theta_bar,
            self.time.tau_under,
            self.time.omega,
        )
        .map_err(|e| SchemaError(format!("time: {e}")))?;

        let mut maps = Vec::new();
        let mut any_boxed = false;
        for (k, row) in self.impulses.maps.iter().enumerate() {
            check_len(&format!("impulses.maps[{k}]"), row.len())?;
            let mut out = Vec::new();
            for (i, dm) in row.iter().enumerate() {
                let loc = format!("impulses.maps[{k}][{i}]");
                let map = build_impulse_map(&loc, dm)?;
                if matches!(map, ImpulseMap::CenteredQuadratic { .. }) {
                    any_boxed = true;
                }
                out.push(map);
            }
            maps.push(out);
        }
        let imp = ImpulseFamily::new(maps, self.impulses.ell)
            .map_err(|e| SchemaError(format!("impulses: {e}")))?;

        let operating_box = match &self.impulses.operating_box {
            Some(b) => {
                check_len("impulses.box.lo", b.lo.len())?;
                check_len("impulses.box.hi", b.hi.len())?;
                for i in 0..m {
                    if b.lo[i] >= b.hi[i] {
                        return err("impulses.box", format!("lo[{i}] must be below hi[{i}]"));
                    }
                }
                b.lo.iter().copied().zip(b.hi.iter().copied()).collect()
            }
            None if any_boxed => {
                return err(
                    "impulses.box",
                    "required: centered-quadratic maps have no global Lipschitz constant",
                );
            }
            None => vec![(-1e9, 1e9); m],
        };

        let r = &self.run;
        check_len("run.x0", r.x0.len())?;
        if !(r.step > 0.0) {
            return err("run.step", "must be positive");
        }
        if r.t_end < r.t0 {
            return err("run.t_end", "must be at or after run.t0");
        }
        for (name, v) in [("run.tol", r.tol), ("run.grid", r.grid), ("run.slack", r.slack)] {
            if let Some(v) = v {
                if !(v > 0.0) && name != "run.slack" {
                    return err(name, "must be positive");
                }
                if name == "run.slack" && v < 0.0 {
                    return err(name, "must be nonnegative");
                }
            }
        }

        Ok(BuiltModel {
            spec,
            ts,
            imp,
            operating_box,
            run: RunParams {
                t0: r.t0,
                x0: r.x0.clone(),
                t_end: r.t_end,
                step: r.step,
                tol: r.tol.unwrap_or(1e-9),
                grid: r.grid,
                slack: r.slack.unwrap_or(0.05),
            },
        })
    }
}

fn build_activations(
    loc: &str,
    docs: &[DocActivation],
) -> Result<Vec<ActivationSpec>, SchemaError> {
    docs.iter()
        .enumerate()
        .map(|(j, da)| {
            let loc = format!("{loc}[{j}]");
            if !(da.lipschitz >= 0.0) {
                return err(&loc, "lipschitz must be nonnegative");
            }
            let kind = match da.kind.as_str() {
                "scaled-tanh" => {
                    let gain = da
                        .gain
                        .ok_or_else(|| SchemaError(format!("{loc}: scaled-tanh requires gain")))?;
                    let slope = da
                        .slope
                        .ok_or_else(|| SchemaError(format!("{loc}: scaled-tanh requires slope")))?;
                    if da.points.is_some() {
                        return err(&loc, "scaled-tanh does not take points");
                    }
                    ActivationKind::ScaledTanh { gain, slope }
                }
                "piecewise-linear" => {
                    let points = da.points.clone().ok_or_else(|| {
                        SchemaError(format!("{loc}: piecewise-linear requires points"))
                    })?;
                    if da.gain.is_some() || da.slope.is_some() {
                        return err(&loc, "piecewise-linear does not take gain/slope");
                    }
                    ActivationKind::PiecewiseLinear { points }
                }
                other => return err(&loc, format!("unknown activation kind {other:?}")),
            };
            Ok(ActivationSpec {
                kind,
                lipschitz: da.lipschitz,
            })
        })
        .collect()
}

fn build_impulse_map(loc: &str, dm: &DocImpulseMap) -> Result<ImpulseMap, SchemaError> {
    match dm.kind.as_str() {
        "affine" => {
            let slope = dm
                .slope
                .ok_or_else(|| SchemaError(format!("{loc}: affine requires slope")))?;
            let offset = dm
                .offset
                .ok_or_else(|| SchemaError(format!("{loc}: affine requires offset")))?;
            if dm.center.is_some() || dm.scale.is_some() {
                return err(loc, "affine does not take center/scale");
            }
            Ok(ImpulseMap::Affine { slope, offset })
        }
        "centered-quadratic" => {
            let center = dm
                .center
                .ok_or_else(|| SchemaError(format!("{loc}: centered-quadratic requires center")))?;
            let scale = dm
                .scale
                .ok_or_else(|| SchemaError(format!("{loc}: centered-quadratic requires scale")))?;
            if dm.slope.is_some() || dm.offset.is_some() {
                return err(loc, "centered-quadratic does not take slope/offset");
            }
            Ok(ImpulseMap::CenteredQuadratic { center, scale })
        }
        "zero" => {
            if dm.slope.is_some() || dm.offset.is_some() || dm.center.is_some() || dm.scale.is_some()
            {
                return err(loc, "zero takes no parameters");
            }
            Ok(ImpulseMap::Zero)
        }
        other => err(loc, format!("unknown impulse kind {other:?}")),
    }
}
