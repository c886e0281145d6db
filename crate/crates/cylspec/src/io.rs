//! Serialization helpers: 17-significant-digit doubles for bit-exact
//! round-trips, window/contour spec documents, field/spectrum JSON, and CSV
//! writers shared by the CLI.

use std::fmt::Write as _;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::contour::Contour;
use crate::geometry::field::WeightedField;
use crate::geometry::grid::CylinderGrid;
use crate::transforms::{CylinderSpectrum, FrequencyKind};

/// 17 significant decimal digits pin an IEEE-754 double exactly.
pub fn fmt_f64(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.16e}")
    } else if v.is_nan() {
        "nan".to_string()
    } else if v > 0.0 {
        "inf".to_string()
    } else {
        "-inf".to_string()
    }
}

pub fn parse_f64(s: &str) -> Result<f64> {
    match s {
        "inf" => Ok(f64::INFINITY),
        "-inf" => Ok(f64::NEG_INFINITY),
        "nan" => Ok(f64::NAN),
        _ => s
            .parse::<f64>()
            .map_err(|e| Error::Validation(format!("bad float {s:?}: {e}"))),
    }
}

/// Window/contour specification document: the serializable unit the CLI and
/// tests exchange. All real fields round-trip bit-exactly.
#[derive(Debug, Clone, PartialEq)]
pub struct WindowSpecDoc {
    pub m: usize,
    pub d: usize,
    pub k0: Vec<f64>,
    pub lambda0: f64,
    pub eta: f64,
    pub xi: f64,
    pub n_x: usize,
    pub n_y: usize,
    pub l: f64,
}

impl WindowSpecDoc {
    pub fn to_json(&self) -> String {
        let mut s = String::from("{");
        let _ = write!(s, "\"m\":{},\"d\":{},", self.m, self.d);
        let ks: Vec<String> = self.k0.iter().map(|v| fmt_f64(*v)).collect();
        let _ = write!(s, "\"k0\":[{}],", ks.join(","));
        let _ = write!(s, "\"lambda0\":{},", fmt_f64(self.lambda0));
        let _ = write!(s, "\"eta\":{},", fmt_f64(self.eta));
        let _ = write!(s, "\"Xi\":{},", fmt_f64(self.xi));
        let _ = write!(s, "\"N_x\":{},\"N_y\":{},", self.n_x, self.n_y);
        let _ = write!(s, "\"L\":{}", fmt_f64(self.l));
        s.push('}');
        s
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let v: serde_json::Value = serde_json::from_str(text)?;
        let get = |k: &str| -> Result<&serde_json::Value> {
            v.get(k)
                .ok_or_else(|| Error::Validation(format!("spec document missing key {k:?}")))
        };
        let num = |k: &str| -> Result<f64> {
            get(k)?
                .as_f64()
                .ok_or_else(|| Error::Validation(format!("key {k:?} is not a number")))
        };
        let int = |k: &str| -> Result<usize> {
            get(k)?
                .as_u64()
                .map(|u| u as usize)
                .ok_or_else(|| Error::Validation(format!("key {k:?} is not an integer")))
        };
        let k0 = get("k0")?
            .as_array()
            .ok_or_else(|| Error::Validation("k0 must be an array".into()))?
            .iter()
            .map(|x| {
                x.as_f64()
                    .ok_or_else(|| Error::Validation("k0 entries must be numbers".into()))
            })
            .collect::<Result<Vec<f64>>>()?;
        Ok(WindowSpecDoc {
            m: int("m")?,
            d: int("d")?,
            k0,
            lambda0: num("lambda0")?,
            eta: num("eta")?,
            xi: num("Xi")?,
            n_x: int("N_x")?,
            n_y: int("N_y")?,
            l: num("L")?,
        })
    }
}

/// Field serialization: grid header plus a flat (re, im) array, x index outer,
/// mode index inner.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FieldDoc {
    pub grid: CylinderGrid,
    pub weight_a: f64,
    pub re: Vec<f64>,
    pub im: Vec<f64>,
}

pub fn field_to_doc(f: &WeightedField) -> FieldDoc {
    let g = &f.grid;
    let mut re = Vec::with_capacity(g.n_dof());
    let mut im = Vec::with_capacity(g.n_dof());
    for xf in 0..g.n_x_total() {
        for mi in 0..g.n_modes() {
            re.push(f.values[[mi, xf]].re);
            im.push(f.values[[mi, xf]].im);
        }
    }
    FieldDoc { grid: g.as_ref().clone(), weight_a: f.weight_a, re, im }
}

pub fn field_from_doc(doc: &FieldDoc) -> Result<WeightedField> {
    let grid = std::sync::Arc::new(doc.grid.clone());
    if doc.re.len() != grid.n_dof() || doc.im.len() != grid.n_dof() {
        return Err(Error::Validation("field document length mismatch".into()));
    }
    let mut f = WeightedField::zeros(grid.clone(), doc.weight_a);
    let mut idx = 0usize;
    for xf in 0..grid.n_x_total() {
        for mi in 0..grid.n_modes() {
            f.values[[mi, xf]] = Complex64::new(doc.re[idx], doc.im[idx]);
            idx += 1;
        }
    }
    Ok(f)
}

/// Spectrum serialization: row-major, zeta index outer, mode index inner.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SpectrumDoc {
    pub grid: CylinderGrid,
    pub kind: String,
    pub rows: usize,
    pub re: Vec<f64>,
    pub im: Vec<f64>,
}

pub fn spectrum_to_doc(s: &CylinderSpectrum) -> SpectrumDoc {
    let rows = s.coeffs.nrows();
    let mut re = Vec::with_capacity(rows * s.coeffs.ncols());
    let mut im = Vec::with_capacity(rows * s.coeffs.ncols());
    for r in 0..rows {
        for c in 0..s.coeffs.ncols() {
            re.push(s.coeffs[[r, c]].re);
            im.push(s.coeffs[[r, c]].im);
        }
    }
    SpectrumDoc {
        grid: s.grid.as_ref().clone(),
        kind: match s.kind {
            FrequencyKind::RealAxis => "real-axis".into(),
            FrequencyKind::Contour(_) => "contour".into(),
        },
        rows,
        re,
        im,
    }
}

/// One CSV row of decimal doubles at 17 significant digits.
pub fn csv_row(values: &[f64]) -> String {
    values.iter().map(|v| fmt_f64(*v)).collect::<Vec<_>>().join(",")
}

/// Contour summary for run manifests.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ContourSummary {
    pub eta: f64,
    pub xi: f64,
    pub panels: usize,
    pub n_nodes: usize,
    pub truncation_bound: f64,
}

pub fn contour_summary(c: &Contour) -> ContourSummary {
    ContourSummary {
        eta: c.eta,
        xi: c.xi,
        panels: c.panels,
        n_nodes: c.nodes.len(),
        truncation_bound: c.truncation_bound,
    }
}
