//! Run configuration: material parameters, geometry, sweep grids and
//! solver options, loadable from key=value or JSON text.

use serde::Deserialize;
use topowire::basis::{MaterialParams, SystemConfig, WireGeometry};

#[derive(Debug, Clone)]
pub struct RunConfig {
    pub params: MaterialParams,
    pub geom: WireGeometry,
    pub kz_min: f64,
    pub kz_max: f64,
    pub kz_steps: usize,
    pub l_list: Vec<u32>,
    pub n_basis: usize,
    pub rc_list: Vec<f64>,
    pub margin: f64,
    pub n_k: Option<usize>,
    pub tol: Option<f64>,
    pub lambda: f64,
    pub seed: u64,
}

impl Default for RunConfig {
    fn default() -> Self {
        let system = SystemConfig::default();
        Self {
            params: system.params,
            geom: system.geom,
            kz_min: -0.3,
            kz_max: 0.3,
            kz_steps: 101,
            l_list: vec![0, 1, 2, 3],
            n_basis: 40,
            rc_list: vec![150.0],
            margin: 0.002,
            n_k: None,
            tol: None,
            lambda: 0.0,
            seed: 7,
        }
    }
}

/// JSON form of the config file; unknown keys are rejected.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct JsonConfig {
    #[serde(rename = "C0")]
    c0: Option<f64>,
    #[serde(rename = "C1")]
    c1: Option<f64>,
    #[serde(rename = "C2")]
    c2: Option<f64>,
    #[serde(rename = "M0")]
    m0: Option<f64>,
    #[serde(rename = "M1")]
    m1: Option<f64>,
    #[serde(rename = "M2")]
    m2: Option<f64>,
    #[serde(rename = "A0")]
    a0: Option<f64>,
    #[serde(rename = "B0")]
    b0: Option<f64>,
    #[serde(rename = "R")]
    r: Option<f64>,
    #[serde(rename = "Rc")]
    rc: Option<f64>,
    kz_min: Option<f64>,
    kz_max: Option<f64>,
    kz_steps: Option<usize>,
    #[serde(rename = "L_list")]
    l_list: Option<Vec<u32>>,
    #[serde(rename = "N")]
    n_basis: Option<usize>,
    #[serde(rename = "Rc_list")]
    rc_list: Option<Vec<f64>>,
    margin: Option<f64>,
    nk: Option<usize>,
    tol: Option<f64>,
    lambda: Option<f64>,
    seed: Option<u64>,
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self, String> {
        let json: JsonConfig = if text.trim_start().starts_with('{') {
            serde_json::from_str(text).map_err(|e| format!("bad JSON config: {e}"))?
        } else {
            key_value_to_json(text)?
        };
        Self::from_json(json)
    }

    fn from_json(j: JsonConfig) -> Result<Self, String> {
        let mut cfg = RunConfig::default();
        if let Some(v) = j.c0 {
            cfg.params.c0 = v;
        }
        if let Some(v) = j.c1 {
            cfg.params.c1 = v;
        }
        if let Some(v) = j.c2 {
            cfg.params.c2 = v;
        }
        if let Some(v) = j.m0 {
            cfg.params.m0 = v;
        }
        if let Some(v) = j.m1 {
            cfg.params.m1 = v;
        }
        if let Some(v) = j.m2 {
            cfg.params.m2 = v;
        }
        if let Some(v) = j.a0 {
            cfg.params.a0 = v;
        }
        if let Some(v) = j.b0 {
            cfg.params.b0 = v;
        }
        let r = j.r.unwrap_or(cfg.geom.r);
        let rc = j.rc.unwrap_or(cfg.geom.rc);
        cfg.geom = WireGeometry::new(r, rc).map_err(|e| e.to_string())?;
        if let Some(v) = j.kz_min {
            cfg.kz_min = v;
        }
        if let Some(v) = j.kz_max {
            cfg.kz_max = v;
        }
        if let Some(v) = j.kz_steps {
            cfg.kz_steps = v;
        }
        if let Some(v) = j.l_list {
            cfg.l_list = v;
        }
        if let Some(v) = j.n_basis {
            cfg.n_basis = v;
        }
        if let Some(v) = j.rc_list {
            cfg.rc_list = v;
        }
        if let Some(v) = j.margin {
            cfg.margin = v;
        }
        cfg.n_k = j.nk;
        cfg.tol = j.tol;
        if let Some(v) = j.lambda {
            cfg.lambda = v;
        }
        if let Some(v) = j.seed {
            cfg.seed = v;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), String> {
        self.params.validate().map_err(|e| e.to_string())?;
        if self.kz_steps == 0 {
            return Err("kz_steps must be >= 1".into());
        }
        if self.kz_max < self.kz_min {
            return Err(format!("empty k_z range [{}, {}]", self.kz_min, self.kz_max));
        }
        if self.l_list.is_empty() {
            return Err("L_list must not be empty".into());
        }
        if self.n_basis == 0 {
            return Err("N must be >= 1".into());
        }
        if self.rc_list.is_empty() {
            return Err("Rc_list must not be empty".into());
        }
        for &rc in &self.rc_list {
            WireGeometry::new(self.geom.r, rc).map_err(|e| e.to_string())?;
        }
        if !(self.margin.is_finite() && self.margin >= 0.0) {
            return Err(format!("bad margin {}", self.margin));
        }
        if self.lambda < 0.0 {
            return Err(format!("lambda must be >= 0, got {}", self.lambda));
        }
        Ok(())
    }

    pub fn kz_grid(&self) -> Vec<f64> {
        if self.kz_steps == 1 {
            return vec![self.kz_min];
        }
        let step = (self.kz_max - self.kz_min) / (self.kz_steps - 1) as f64;
        (0..self.kz_steps).map(|i| self.kz_min + i as f64 * step).collect()
    }

    /// FNV-1a over the canonical textual form; stamped into output headers.
    pub fn config_hash(&self) -> u64 {
        let canon = format!(
            "{:?}|{:?}|{}|{}|{}|{:?}|{}|{:?}|{}|{:?}|{:?}|{}|{}",
            self.params,
            self.geom,
            self.kz_min,
            self.kz_max,
            self.kz_steps,
            self.l_list,
            self.n_basis,
            self.rc_list,
            self.margin,
            self.n_k,
            self.tol,
            self.lambda,
            self.seed
        );
        let mut h: u64 = 0xcbf29ce484222325;
        for b in canon.as_bytes() {
            h ^= *b as u64;
            h = h.wrapping_mul(0x100000001b3);
        }
        h
    }
}

/// Translate KEY=VALUE lines into the JSON config form so both formats
/// share one validation path.
fn key_value_to_json(text: &str) -> Result<JsonConfig, String> {
    let mut json = serde_json::Map::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| format!("line {}: expected KEY=VALUE", lineno + 1))?;
        let key = key.trim();
        let value = value.trim();
        let parsed: serde_json::Value = if key == "L_list" {
            let items: Result<Vec<u32>, _> =
                value.split(',').map(|v| v.trim().parse::<u32>()).collect();
            let items = items.map_err(|_| format!("line {}: bad list {value:?}", lineno + 1))?;
            serde_json::json!(items)
        } else if key == "Rc_list" {
            let items: Result<Vec<f64>, _> =
                value.split(',').map(|v| v.trim().parse::<f64>()).collect();
            let items = items.map_err(|_| format!("line {}: bad list {value:?}", lineno + 1))?;
            serde_json::json!(items)
        } else if key == "kz_steps" || key == "N" || key == "nk" || key == "seed" {
            let v: u64 = value
                .parse()
                .map_err(|_| format!("line {}: bad integer {value:?}", lineno + 1))?;
            serde_json::json!(v)
        } else {
            let v: f64 = value
                .parse()
                .map_err(|_| format!("line {}: bad number {value:?}", lineno + 1))?;
            serde_json::json!(v)
        };
        json.insert(key.to_string(), parsed);
    }
    serde_json::from_value(serde_json::Value::Object(json)).map_err(|e| format!("bad config: {e}"))
}
