//! Run configuration: a single JSON document. Parsing is total (unknown or
//! ill-typed fields fail with a diagnostic naming the field) and every
//! default is materialized into the emitted manifest.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use cylspec::geometry::{
    build_contour, default_eta, default_xi, CoefficientFamily, Contour, CylinderGrid,
    ModelCoefficients,
};
use cylspec::Error;

#[derive(Debug, Clone, Serialize)]
pub struct ModelSpec {
    pub family: CoefficientFamily,
    /// decay-certificate exponent b (must exceed 2a)
    pub decay_b: f64,
    pub truncation_radius: Option<f64>,
}

fn default_decay_b() -> f64 {
    8.0
}

/// Hand-rolled model parsing: serde's flatten cannot combine with
/// deny_unknown_fields, and the config contract requires diagnostics that
/// name bad fields.
fn parse_model(v: &serde_json::Value) -> Result<ModelSpec, Error> {
    let obj = v
        .as_object()
        .ok_or_else(|| Error::Validation("config: \"model\" must be an object".into()))?;
    let family_tag = obj
        .get("family")
        .and_then(|f| f.as_str())
        .ok_or_else(|| Error::Validation("config: model needs a \"family\" string".into()))?;
    let num = |key: &str, default: Option<f64>| -> Result<f64, Error> {
        match obj.get(key) {
            Some(x) => x.as_f64().ok_or_else(|| {
                Error::Validation(format!("config: model field \"{key}\" must be a number"))
            }),
            None => default.ok_or_else(|| {
                Error::Validation(format!("config: model family \"{family_tag}\" needs \"{key}\""))
            }),
        }
    };
    let mut allowed: Vec<&str> = vec!["family", "decay_b", "truncation_radius"];
    let family = match family_tag {
        "gaussian-well" => {
            allowed.extend(["v0", "width"]);
            CoefficientFamily::GaussianWell { v0: num("v0", None)?, width: num("width", Some(1.0))? }
        }
        "metric-bump" => {
            allowed.extend(["amplitude", "width"]);
            CoefficientFamily::MetricBump {
                amplitude: num("amplitude", None)?,
                width: num("width", Some(1.0))?,
            }
        }
        "square-well" => {
            allowed.extend(["v0", "width"]);
            CoefficientFamily::SquareWell { v0: num("v0", None)?, width: num("width", Some(2.0))? }
        }
        "cosine-lattice" => {
            allowed.extend(["v0", "width"]);
            CoefficientFamily::CosineLattice { v0: num("v0", None)?, width: num("width", Some(1.0))? }
        }
        "tabulated" => {
            allowed.extend(["n_y", "v_modes"]);
            let inner: CoefficientFamily = serde_json::from_value(v.clone())
                .map_err(|e| Error::Validation(format!("config: tabulated model: {e}")))?;
            inner
        }
        other => {
            return Err(Error::Validation(format!(
                "config: unknown model family \"{other}\" (expected gaussian-well, metric-bump, square-well, cosine-lattice or tabulated)"
            )))
        }
    };
    for key in obj.keys() {
        if !allowed.contains(&key.as_str()) {
            return Err(Error::Validation(format!(
                "config: unknown model field \"{key}\" for family \"{family_tag}\""
            )));
        }
    }
    let truncation_radius = match obj.get("truncation_radius") {
        Some(serde_json::Value::Null) | None => None,
        Some(x) => Some(x.as_f64().ok_or_else(|| {
            Error::Validation("config: \"truncation_radius\" must be a number".into())
        })?),
    };
    Ok(ModelSpec {
        family,
        decay_b: num("decay_b", Some(default_decay_b()))?,
        truncation_radius,
    })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    #[serde(default = "default_m")]
    pub m: usize,
    #[serde(default = "default_m")]
    pub d: usize,
    #[serde(rename = "L", default = "default_l")]
    pub l: f64,
    #[serde(rename = "N_x", default = "default_nx")]
    pub n_x: usize,
    #[serde(rename = "N_y", default = "default_ny")]
    pub n_y: usize,
}

fn default_m() -> usize {
    1
}
fn default_l() -> f64 {
    16.0
}
fn default_nx() -> usize {
    256
}
fn default_ny() -> usize {
    8
}

impl Default for GridSpec {
    fn default() -> Self {
        GridSpec { m: 1, d: 1, l: default_l(), n_x: default_nx(), n_y: default_ny() }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WindowSpec {
    pub k0: Vec<f64>,
    pub lambda0: f64,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ContourSpec {
    pub eta: Option<f64>,
    #[serde(rename = "Xi")]
    pub xi: Option<f64>,
    pub panels: Option<usize>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RangeSpec {
    pub min: f64,
    pub max: f64,
    pub count: usize,
}

impl RangeSpec {
    pub fn values(&self) -> Vec<f64> {
        if self.count <= 1 {
            return vec![self.min];
        }
        (0..self.count)
            .map(|i| self.min + (self.max - self.min) * i as f64 / (self.count - 1) as f64)
            .collect()
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RectSpec {
    pub re_min: f64,
    pub re_max: f64,
    pub im_min: f64,
    pub im_max: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProbeSpec {
    /// y-mode carried by the probe
    #[serde(default)]
    pub mode: Vec<i64>,
    #[serde(default = "default_width")]
    pub width: f64,
    #[serde(default)]
    pub center: f64,
}

fn default_width() -> f64 {
    1.0
}

impl Default for ProbeSpec {
    fn default() -> Self {
        ProbeSpec { mode: vec![], width: 1.0, center: 0.0 }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// raw model section; parsed by `parse_model` so unknown fields are
    /// reported by name
    pub model: serde_json::Value,
    #[serde(default)]
    pub grid: GridSpec,
    #[serde(default)]
    pub window: Option<WindowSpec>,
    #[serde(default)]
    pub contour: Option<ContourSpec>,
    /// weighted-space exponent; defaults to 1.25 eta sqrt(m)
    #[serde(default)]
    pub weight_a: Option<f64>,
    #[serde(default)]
    pub probe: Option<ProbeSpec>,
    #[serde(default)]
    pub lambda: Option<f64>,
    #[serde(default)]
    pub lambda_values: Option<Vec<f64>>,
    #[serde(default)]
    pub lambda_range: Option<RangeSpec>,
    #[serde(default)]
    pub k_range: Option<RangeSpec>,
    #[serde(default)]
    pub rect: Option<RectSpec>,
    #[serde(default)]
    pub interval: Option<[f64; 2]>,
    #[serde(default)]
    pub n_samples: Option<usize>,
    #[serde(default)]
    pub eps_list: Option<Vec<f64>>,
    #[serde(default)]
    pub taus: Option<Vec<f64>>,
    #[serde(default)]
    pub k_quadrature_nodes: Option<usize>,
}

pub struct Materialized {
    pub grid: Arc<CylinderGrid>,
    pub coeffs: ModelCoefficients,
    pub config: RunConfig,
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<RunConfig, Error> {
        serde_json::from_str(text)
            .map_err(|e| Error::Validation(format!("config: {e}")))
    }

    pub fn materialize(mut self) -> Result<Materialized, Error> {
        let model = parse_model(&self.model)?;
        let grid = Arc::new(CylinderGrid::new(
            self.grid.m,
            self.grid.d,
            self.grid.l,
            self.grid.n_x,
            self.grid.n_y,
        )?)
        ;
        let mut coeffs =
            ModelCoefficients::new(model.family.clone(), model.decay_b, grid.clone())?;
        if let Some(rho) = model.truncation_radius {
            coeffs = cylspec::geometry::truncate_potential(&coeffs, rho);
        }
        // materialize defaults so the manifest records them
        if self.probe.is_none() {
            self.probe = Some(ProbeSpec { mode: vec![0; grid.d], width: 1.0, center: 0.0 });
        }
        // echo the fully-materialized model (tagged family plus defaults)
        let mut echo = serde_json::to_value(&model.family)
            .map_err(|e| Error::Validation(format!("config echo: {e}")))?;
        echo["decay_b"] = serde_json::json!(model.decay_b);
        echo["truncation_radius"] = serde_json::json!(model.truncation_radius);
        self.model = echo;
        Ok(Materialized { grid, coeffs, config: self })
    }

    /// Window-scoped contour parameters with defaults resolved.
    pub fn resolve_contour(&self, lambda0: f64) -> Result<(f64, f64, usize), Error> {
        let spec = self.contour.clone().unwrap_or_default();
        let eta = spec.eta.unwrap_or_else(|| default_eta(lambda0));
        let xi = spec.xi.unwrap_or_else(|| default_xi(eta, lambda0));
        let panels = spec.panels.unwrap_or(cylspec::geometry::contour::DEFAULT_PANELS);
        Ok((eta, xi, panels))
    }

    pub fn build_contour_for(&self, lambda0: f64) -> Result<Option<Contour>, Error> {
        if lambda0 > 0.0 {
            let (eta, xi, panels) = self.resolve_contour(lambda0)?;
            Ok(Some(build_contour(lambda0, eta, xi, panels)?))
        } else {
            Ok(None)
        }
    }

    pub fn resolve_weight(&self, contour: Option<&Contour>, m: usize) -> f64 {
        self.weight_a.unwrap_or_else(|| {
            contour
                .map(|c| cylspec::geometry::contour::default_weight(c.eta, m))
                .unwrap_or(0.0)
        })
    }
}
