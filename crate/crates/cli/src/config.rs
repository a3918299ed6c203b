//! Flat run configuration with layered precedence: flag > file > default.

use std::path::Path;

use anyhow::{anyhow, bail, Context};
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};
use trait_chemostat::{
    AuxostatVariant, ControlKind, ControlLaw, Kinetics, KineticsBounds, Model, SimConfig, SwitchRule, SystemState,
    TraitGrid,
};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub z_min: f64,
    pub z_max: f64,
    pub n_nodes: usize,

    pub kinetics: String,
    pub bar_mu: f64,
    pub r_profile: String,
    pub r_values: Option<Vec<f64>>,

    pub alpha: f64,
    pub s_in: f64,
    pub dt: f64,
    pub horizon: f64,
    pub s0: f64,
    pub f0: String,
    pub f0_values: Option<Vec<f64>>,
    pub snapshot_every: Option<usize>,
    pub k0: f64,

    pub control: String,
    pub u_value: Option<f64>,
    pub u_breakpoints: Option<Vec<f64>>,
    pub u_values: Option<Vec<f64>>,
    pub switch_time: Option<f64>,
    pub sigma: f64,
    pub u_max: Option<f64>,
    pub clamp: bool,

    pub tol: f64,
    pub max_iter: usize,
    pub write_phi: bool,

    pub sweep_min: f64,
    pub sweep_max: f64,
    pub sweep_count: usize,
    pub refine_width: f64,
    pub refine_count: usize,
    pub washout_threshold: f64,

    pub alphas: Vec<f64>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            z_min: 1.0,
            z_max: 3.0,
            n_nodes: 5000,
            kinetics: "monod".into(),
            bar_mu: 1.0,
            r_profile: "linear".into(),
            r_values: None,
            alpha: 0.005,
            s_in: 35.0,
            dt: 0.01,
            horizon: 100.0,
            s0: 5.0,
            f0: "constant:5".into(),
            f0_values: None,
            snapshot_every: None,
            k0: 1.5,
            control: "auxostat_iv".into(),
            u_value: None,
            u_breakpoints: None,
            u_values: None,
            switch_time: None,
            sigma: 9.0,
            u_max: None,
            clamp: true,
            tol: trait_chemostat::spectral::DEFAULT_TOL,
            max_iter: trait_chemostat::spectral::DEFAULT_MAX_ITER,
            write_phi: false,
            sweep_min: 0.0,
            sweep_max: 35.0,
            sweep_count: 340,
            refine_width: 0.0,
            refine_count: 0,
            washout_threshold: 1e-6,
            alphas: Vec::new(),
        }
    }
}

pub type Layer = Map<String, Value>;

/// Reads a flat TOML or JSON file. A run manifest is accepted too: its
/// `config` object is used.
pub fn read_layer(path: &Path) -> anyhow::Result<Layer> {
    let text = std::fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
    let value: Value = if path.extension().is_some_and(|e| e == "json") {
        serde_json::from_str(&text).with_context(|| format!("invalid JSON in {}", path.display()))?
    } else {
        let table: toml::Table = toml::from_str(&text).with_context(|| format!("invalid config {}", path.display()))?;
        serde_json::to_value(table)?
    };
    let Value::Object(mut map) = value else {
        bail!("{} must hold a flat key-value table", path.display());
    };
    if let Some(Value::Object(inner)) = map.remove("config") {
        if map.contains_key("command") {
            return Ok(inner);
        }
        map.insert("config".into(), Value::Object(inner));
    }
    Ok(map)
}

/// Parses `key=value`; the value is read as a TOML literal, falling back to a string.
pub fn parse_assignment(text: &str) -> anyhow::Result<(String, Value)> {
    let (key, raw) = text
        .split_once('=')
        .ok_or_else(|| anyhow!("expected key=value, got '{text}'"))?;
    let raw = raw.trim();
    let value = match toml::from_str::<toml::Table>(&format!("v = {raw}")) {
        Ok(mut t) => serde_json::to_value(t.remove("v").expect("parsed key"))?,
        Err(_) => Value::String(raw.to_string()),
    };
    Ok((key.trim().to_string(), value))
}

/// Merges layers left to right (later wins) over `base`.
pub fn resolve(base: &RunConfig, layers: &[Layer]) -> anyhow::Result<RunConfig> {
    let Value::Object(mut merged) = serde_json::to_value(base)? else {
        unreachable!("RunConfig serializes to an object");
    };
    for layer in layers {
        for (k, v) in layer {
            merged.insert(k.clone(), v.clone());
        }
    }
    serde_json::from_value(Value::Object(merged)).map_err(|e| anyhow!("invalid configuration: {e}"))
}

impl RunConfig {
    pub fn grid(&self) -> trait_chemostat::Result<TraitGrid> {
        TraitGrid::uniform(self.z_min, self.z_max, self.n_nodes)
    }

    pub fn model(&self) -> anyhow::Result<Model> {
        let grid = self.grid()?;
        if self.kinetics != "monod" {
            bail!("unsupported kinetics '{}' (expected \"monod\")", self.kinetics);
        }
        let kin = match &self.r_values {
            Some(r) => {
                if r.len() != grid.len() {
                    bail!("r_values has {} entries, expected n_nodes = {}", r.len(), grid.len());
                }
                Kinetics::monod(self.bar_mu, r.clone())?
            }
            None => match self.r_profile.as_str() {
                "linear" => Kinetics::monod_profile(self.bar_mu, &grid, |z| z)?,
                other => bail!("unknown r_profile '{other}' (expected \"linear\" or r_values)"),
            },
        };
        Ok(Model::new(grid, kin)?)
    }

    pub fn bounds(&self, model: &Model) -> anyhow::Result<KineticsBounds> {
        Ok(model.kinetics.bounds(self.s_in, &model.grid)?)
    }

    pub fn u_max(&self, model: &Model) -> anyhow::Result<f64> {
        Ok(match self.u_max {
            Some(u) => u,
            None => self.bounds(model)?.u_bar,
        })
    }

    pub fn sim_config(&self) -> SimConfig {
        let mut cfg = SimConfig::new(self.alpha, self.s_in, self.dt, self.horizon);
        if let Some(every) = self.snapshot_every {
            cfg.snapshot_every = Some(every);
        }
        cfg.k0 = self.k0;
        cfg
    }

    pub fn initial_state(&self, model: &Model) -> anyhow::Result<SystemState> {
        let n = model.grid.len();
        let f = match &self.f0_values {
            Some(v) => {
                if v.len() != n {
                    bail!("f0_values has {} entries, expected n_nodes = {n}", v.len());
                }
                v.clone()
            }
            None => {
                let level = self
                    .f0
                    .strip_prefix("constant:")
                    .ok_or_else(|| anyhow!("f0 must be \"constant:<v>\" or use f0_values"))?
                    .trim()
                    .parse::<f64>()
                    .with_context(|| format!("bad f0 '{}'", self.f0))?;
                vec![level; n]
            }
        };
        let state = SystemState::new(&model.grid, 0.0, self.s0, f);
        state.validate(&model.grid)?;
        Ok(state)
    }

    pub fn control_law(&self, model: &Model) -> anyhow::Result<ControlLaw> {
        let u_max = self.u_max(model)?;
        let auxostat = |variant| ControlKind::Auxostat {
            variant,
            sigma: self.sigma,
        };
        let kind = match self.control.as_str() {
            "constant" => ControlKind::Constant(
                self.u_value
                    .ok_or_else(|| anyhow!("control = \"constant\" needs u_value"))?,
            ),
            "piecewise" => {
                let breakpoints = self.u_breakpoints.clone().unwrap_or_default();
                let values = self
                    .u_values
                    .clone()
                    .ok_or_else(|| anyhow!("control = \"piecewise\" needs u_values"))?;
                ControlLaw::piecewise(breakpoints, values, u_max)?.kind
            }
            "auxostat_i" => auxostat(AuxostatVariant::I),
            "auxostat_ii" => auxostat(AuxostatVariant::II),
            "auxostat_iii" => auxostat(AuxostatVariant::III),
            "auxostat_iv" => auxostat(AuxostatVariant::IV),
            "composite" => {
                let upsilon = self.bounds(model)?.upsilon;
                ControlKind::Composite {
                    switch: self.switch_time.map_or(SwitchRule::BoundedState, SwitchRule::At),
                    before: Box::new(ControlKind::Constant(upsilon)),
                    after: Box::new(auxostat(AuxostatVariant::IV)),
                }
            }
            other => bail!("unknown control '{other}'"),
        };
        let law = ControlLaw::new(kind, u_max).with_clamp(self.clamp);
        law.validate(self.s_in)?;
        Ok(law)
    }

    /// Fills computed defaults so the manifest is self-contained.
    pub fn materialize(&mut self, model: &Model) -> anyhow::Result<()> {
        if self.u_max.is_none() {
            self.u_max = Some(self.u_max(model)?);
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn assignments_parse_as_toml_literals() {
        assert_eq!(parse_assignment("alpha=0.01").unwrap(), ("alpha".into(), Value::from(0.01)));
        assert_eq!(parse_assignment("clamp = false").unwrap().1, Value::Bool(false));
        assert_eq!(parse_assignment("control=constant").unwrap().1, Value::from("constant"));
        assert_eq!(parse_assignment("alphas=[0.0, 0.5]").unwrap().1, serde_json::json!([0.0, 0.5]));
        assert!(parse_assignment("alpha").is_err());
    }

    #[test]
    fn later_layers_win() {
        let mut file = Layer::new();
        file.insert("alpha".into(), Value::from(0.002));
        file.insert("sigma".into(), Value::from(3.0));
        let mut flags = Layer::new();
        flags.insert("alpha".into(), Value::from(0.004));
        let cfg = resolve(&RunConfig::default(), &[file, flags]).unwrap();
        assert_eq!(cfg.alpha, 0.004);
        assert_eq!(cfg.sigma, 3.0);
        assert_eq!(cfg.s_in, 35.0);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let mut layer = Layer::new();
        layer.insert("alfa".into(), Value::from(0.1));
        assert!(resolve(&RunConfig::default(), &[layer]).is_err());
    }

    #[test]
    fn defaults_build_reference_setup() {
        let mut cfg = RunConfig::default();
        cfg.n_nodes = 11;
        let model = cfg.model().unwrap();
        let init = cfg.initial_state(&model).unwrap();
        assert!((init.m - 10.0).abs() < 1e-12);
        let law = cfg.control_law(&model).unwrap();
        assert!((law.u_max - 4.0 * 35.0 / 36.0 * 35.0).abs() < 1e-9);
    }

    #[test]
    fn wrong_length_density_names_expected_size() {
        let mut cfg = RunConfig::default();
        cfg.n_nodes = 11;
        cfg.f0_values = Some(vec![1.0; 3]);
        let model = cfg.model().unwrap();
        let err = cfg.initial_state(&model).unwrap_err().to_string();
        assert!(err.contains("11"), "{err}");
    }
}
