//! Session config document.
//!
//! One JSON or TOML document with sections `swarm`, `grid`, `scheduling`,
//! `dispatcher`, plus top-level `mode` and `seed`. Relative dispatcher paths
//! resolve against the document's directory (or the server's config root).

use std::fmt;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::afsa::{Bounds, SwarmParams, VisionDraw};
use crate::dispatcher::{self, FieldSet, KeywordField, KeywordMode, TaskCoordinates, TaskItem};
use crate::gridsim::{self, GridConfig, GridSetup, Policy};
use crate::scheduling::canvas::DEFAULT_EPSILON;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    #[default]
    Optimizer,
    Canvas,
}

impl Mode {
    pub fn as_str(self) -> &'static str {
        match self {
            Mode::Optimizer => "optimizer",
            Mode::Canvas => "canvas",
        }
    }
}

impl std::str::FromStr for Mode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "optimizer" => Ok(Mode::Optimizer),
            "canvas" => Ok(Mode::Canvas),
            other => Err(format!("unknown mode {other:?}; expected optimizer or canvas")),
        }
    }
}

fn default_visual() -> f64 {
    1.0
}
fn default_step() -> f64 {
    0.5
}
fn default_try_number() -> usize {
    5
}
fn default_delta() -> f64 {
    0.618
}
fn default_population() -> usize {
    20
}
fn default_iterations() -> usize {
    100
}
fn default_epsilon() -> f64 {
    DEFAULT_EPSILON
}
fn default_tick() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SwarmConfig {
    #[serde(default = "default_visual")]
    pub visual: f64,
    #[serde(default = "default_step")]
    pub step: f64,
    #[serde(default = "default_try_number")]
    pub try_number: usize,
    #[serde(default = "default_delta")]
    pub delta: f64,
    #[serde(default = "default_population")]
    pub population: usize,
    #[serde(default = "default_iterations")]
    pub iterations: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default)]
    pub vision_draw: VisionDraw,
}

impl Default for SwarmConfig {
    fn default() -> Self {
        Self {
            visual: default_visual(),
            step: default_step(),
            try_number: default_try_number(),
            delta: default_delta(),
            population: default_population(),
            iterations: default_iterations(),
            seed: None,
            vision_draw: VisionDraw::default(),
        }
    }
}

impl SwarmConfig {
    pub fn params(&self, bounds: Vec<Bounds>) -> SwarmParams {
        SwarmParams {
            visual: self.visual,
            step: self.step,
            try_number: self.try_number,
            delta: self.delta,
            population_size: self.population,
            max_iterations: self.iterations,
            bounds,
            vision_draw: self.vision_draw,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlaneConfig {
    pub width: f64,
    pub height: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SchedulingConfig {
    /// Canvas mode: dispatch radius around a resource.
    #[serde(default = "default_epsilon")]
    pub dispatch_epsilon: f64,
    /// Canvas mode: simulated seconds per swarm iteration.
    #[serde(default = "default_tick")]
    pub tick: f64,
    /// Canvas mode: plane size; derived from fields and resources when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub plane: Option<PlaneConfig>,
}

impl Default for SchedulingConfig {
    fn default() -> Self {
        Self {
            dispatch_epsilon: default_epsilon(),
            tick: default_tick(),
            plane: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FieldConfig {
    pub name: String,
    pub keywords: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ItemConfig {
    pub name: String,
    pub field: String,
    pub keywords: Vec<String>,
}

/// Keyword fields and task items, from folders and/or inline lists.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DispatcherConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fields_root: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub items_root: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub fields: Vec<FieldConfig>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub items: Vec<ItemConfig>,
    #[serde(default)]
    pub lenient: bool,
}

impl DispatcherConfig {
    pub fn keyword_mode(&self) -> KeywordMode {
        if self.lenient {
            KeywordMode::Lenient
        } else {
            KeywordMode::Strict
        }
    }

    /// Loads fields and items, resolving relative roots against `base`.
    pub fn load(&self, base: &Path) -> Result<(FieldSet, Vec<TaskItem>), dispatcher::DispatchError> {
        let mut fields = Vec::new();
        if let Some(root) = &self.fields_root {
            fields.extend(dispatcher::load_fields(&base.join(root))?);
        }
        for f in &self.fields {
            fields.push(KeywordField::new(f.name.clone(), &f.keywords)?);
        }
        let set = FieldSet::new(fields)?;
        let mode = self.keyword_mode();
        let mut items = Vec::new();
        if let Some(root) = &self.items_root {
            items.extend(dispatcher::load_items(&base.join(root), &set, mode)?);
        }
        for it in &self.items {
            items.push(set.make_item(it.name.clone(), &it.field, &it.keywords, mode)?);
        }
        Ok((set, items))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SessionConfig {
    #[serde(default)]
    pub mode: Mode,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default)]
    pub swarm: SwarmConfig,
    pub grid: GridConfig,
    #[serde(default)]
    pub scheduling: SchedulingConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dispatcher: Option<DispatcherConfig>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Diagnostic {
    pub path: String,
    pub message: String,
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.path.is_empty() {
            write!(f, "{}", self.message)
        } else {
            write!(f, "{}: {}", self.path, self.message)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub struct ConfigError {
    pub diagnostics: Vec<Diagnostic>,
}

impl ConfigError {
    pub fn single(path: impl Into<String>, message: impl Into<String>) -> Self {
        Self {
            diagnostics: vec![Diagnostic {
                path: path.into(),
                message: message.into(),
            }],
        }
    }
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.diagnostics.iter().map(ToString::to_string).collect();
        write!(f, "invalid config: {}", parts.join("; "))
    }
}

/// A config that passed validation, with everything resolved.
#[derive(Debug, Clone)]
pub struct Plan {
    pub mode: Mode,
    pub seed: u64,
    pub swarm: SwarmConfig,
    pub grid: GridSetup,
    pub fields: FieldSet,
    pub items: Vec<(TaskItem, TaskCoordinates)>,
    pub keyword_mode: KeywordMode,
    pub epsilon: f64,
    pub tick: f64,
    pub plane: PlaneConfig,
}

impl SessionConfig {
    pub fn from_json(text: &str) -> Result<Self, ConfigError> {
        let de = &mut serde_json::Deserializer::from_str(text);
        serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            ConfigError::single(
                if path == "." { String::new() } else { path },
                e.into_inner().to_string(),
            )
        })
    }

    pub fn from_toml(text: &str) -> Result<Self, ConfigError> {
        toml::from_str(text).map_err(|e| ConfigError::single("", e.to_string().trim().to_string()))
    }

    /// Reads a `.toml` or JSON document.
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text =
            std::fs::read_to_string(path).map_err(|e| ConfigError::single("", format!("{}: {e}", path.display())))?;
        if path.extension().is_some_and(|e| e == "toml") {
            Self::from_toml(&text)
        } else {
            Self::from_json(&text)
        }
    }

    /// Session seed: explicit override, else top-level `seed`, else `swarm.seed`, else 0.
    pub fn effective_seed(&self, explicit: Option<u64>) -> u64 {
        explicit.or(self.seed).or(self.swarm.seed).unwrap_or(0)
    }

    /// Validates every section and resolves dispatcher inputs against `base`.
    pub fn validate(&self, seed: Option<u64>, base: &Path) -> Result<Plan, ConfigError> {
        let mut diags = Vec::new();
        let mut push = |path: &str, message: String| {
            diags.push(Diagnostic {
                path: path.to_string(),
                message,
            })
        };

        if let Err(e) = self.swarm.params(vec![Bounds::new(0.0, 1.0)]).validate() {
            match e {
                crate::afsa::SwarmError::InvalidParam { name, reason } => push(&format!("swarm.{name}"), reason),
                other => push("swarm", other.to_string()),
            }
        }

        let grid = match gridsim::build_grid(&self.grid) {
            Ok(g) => Some(g),
            Err(e) => {
                push("grid", e.to_string());
                None
            }
        };

        let s = &self.scheduling;
        if !(s.dispatch_epsilon.is_finite() && s.dispatch_epsilon > 0.0) {
            push("scheduling.dispatch_epsilon", "must be a positive finite number".into());
        }
        if !(s.tick.is_finite() && s.tick > 0.0) {
            push("scheduling.tick", "must be a positive finite number".into());
        }
        if let Some(p) = s.plane {
            if !(p.width.is_finite() && p.width > 0.0 && p.height.is_finite() && p.height > 0.0) {
                push("scheduling.plane", "width and height must be positive".into());
            }
        }

        let dispatcher = self.dispatcher.clone().unwrap_or_default();
        let loaded = match dispatcher.load(base) {
            Ok(l) => Some(l),
            Err(e) => {
                push("dispatcher", e.to_string());
                None
            }
        };
        let mut items = Vec::new();
        if let Some((set, list)) = &loaded {
            for it in list {
                match set.locate(it) {
                    Ok(c) => items.push((it.clone(), c)),
                    Err(e) => push("dispatcher", e.to_string()),
                }
            }
        }

        if let Some(g) = &grid {
            match self.mode {
                Mode::Optimizer => {
                    if g.users.iter().map(|u| u.job_count).sum::<usize>() == 0 {
                        push("grid.users", "optimizer mode needs at least one job".into());
                    }
                }
                Mode::Canvas => {
                    for (i, r) in g.resources.iter().enumerate() {
                        if r.plane_position.is_none() {
                            push(
                                &format!("grid.resources[{i}].plane_position"),
                                "required in canvas mode".into(),
                            );
                        }
                    }
                }
            }
        }

        match (grid, loaded) {
            (Some(grid), Some((fields, _))) if diags.is_empty() => {
                let plane = s.plane.unwrap_or_else(|| derive_plane(&fields, &grid));
                Ok(Plan {
                    mode: self.mode,
                    seed: self.effective_seed(seed),
                    swarm: self.swarm.clone(),
                    grid,
                    fields,
                    items,
                    keyword_mode: dispatcher.keyword_mode(),
                    epsilon: s.dispatch_epsilon,
                    tick: s.tick,
                    plane,
                })
            }
            _ => Err(ConfigError { diagnostics: diags }),
        }
    }
}

/// Smallest plane covering every field's coordinate range and every resource.
fn derive_plane(fields: &FieldSet, grid: &GridSetup) -> PlaneConfig {
    let mut width = 1.0f64;
    let mut height = 1.0f64;
    for f in fields.iter() {
        let (w, h) = f.extent();
        width = width.max(w as f64);
        height = height.max(h as f64);
    }
    for r in &grid.resources {
        if let Some(p) = r.plane_position {
            width = width.max(p.x as f64 + 1.0);
            height = height.max(p.y as f64 + 1.0);
        }
    }
    PlaneConfig { width, height }
}

/// A small valid config: one user with `jobs` jobs, one single-PE resource.
pub fn minimal(jobs: usize, population: usize) -> SessionConfig {
    SessionConfig {
        mode: Mode::Optimizer,
        seed: None,
        swarm: SwarmConfig {
            population,
            ..SwarmConfig::default()
        },
        grid: GridConfig {
            users: vec![gridsim::UserConfig {
                name: "user0".into(),
                jobs,
            }],
            resources: vec![gridsim::ResourceConfig {
                name: "res0".into(),
                policy: Policy::SpaceShared.as_str().into(),
                machines: vec![gridsim::MachineConfig {
                    pes: vec![gridsim::PeConfig { rating: 100.0 }],
                }],
                plane_position: None,
            }],
            job_template: gridsim::JobTemplate::default(),
        },
        scheduling: SchedulingConfig::default(),
        dispatcher: None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_config_validates() {
        let plan = minimal(1, 5).validate(None, Path::new(".")).unwrap();
        assert_eq!(plan.mode, Mode::Optimizer);
        assert_eq!(plan.swarm.population, 5);
        assert_eq!(plan.seed, 0);
    }

    #[test]
    fn delta_out_of_range_is_reported() {
        let mut c = minimal(1, 5);
        c.swarm.delta = 1.5;
        let err = c.validate(None, Path::new(".")).unwrap_err();
        assert_eq!(err.diagnostics[0].path, "swarm.delta");
        assert_eq!(err.diagnostics[0].message, "delta out of (0,1)");
    }

    #[test]
    fn collects_several_diagnostics() {
        let mut c = minimal(0, 5);
        c.swarm.step = 5.0;
        c.scheduling.tick = 0.0;
        let err = c.validate(None, Path::new(".")).unwrap_err();
        let paths: Vec<&str> = err.diagnostics.iter().map(|d| d.path.as_str()).collect();
        assert_eq!(paths, ["swarm.step", "scheduling.tick", "grid.users"]);
    }

    #[test]
    fn canvas_needs_plane_positions() {
        let mut c = minimal(1, 5);
        c.mode = Mode::Canvas;
        let err = c.validate(None, Path::new(".")).unwrap_err();
        assert_eq!(err.diagnostics[0].path, "grid.resources[0].plane_position");
    }

    #[test]
    fn json_errors_carry_field_path() {
        let err = SessionConfig::from_json(r#"{"grid":{"resources":[],"bogus":1}}"#).unwrap_err();
        assert_eq!(err.diagnostics[0].path, "grid.bogus");
        let err = SessionConfig::from_json(r#"{"swarm":{"delta":"x"},"grid":{"resources":[]}}"#).unwrap_err();
        assert_eq!(err.diagnostics[0].path, "swarm.delta");
    }

    #[test]
    fn toml_document_parses() {
        let c = SessionConfig::from_toml(
            r#"
            mode = "canvas"
            seed = 4
            [swarm]
            delta = 0.5
            [[grid.users]]
            name = "alice"
            jobs = 3
            [[grid.resources]]
            name = "r"
            policy = "time_shared"
            plane_position = { x = 3, y = 4 }
            [[grid.resources.machines]]
            pes = [{ rating = 10.0 }]
            "#,
        )
        .unwrap();
        assert_eq!(c.mode, Mode::Canvas);
        let plan = c.validate(Some(9), Path::new(".")).unwrap();
        assert_eq!(plan.seed, 9);
        assert_eq!((plan.plane.width, plan.plane.height), (4.0, 5.0));
    }

    #[test]
    fn seed_precedence() {
        let mut c = minimal(1, 5);
        c.swarm.seed = Some(3);
        assert_eq!(c.effective_seed(None), 3);
        c.seed = Some(2);
        assert_eq!(c.effective_seed(None), 2);
        assert_eq!(c.effective_seed(Some(1)), 1);
    }

    #[test]
    fn inline_dispatcher_items_are_located() {
        let mut c = minimal(1, 5);
        c.dispatcher = Some(DispatcherConfig {
            fields: vec![FieldConfig {
                name: "Math".into(),
                keywords: "abcdefghij".chars().map(String::from).collect(),
            }],
            items: vec![ItemConfig {
                name: "t1".into(),
                field: "Math".into(),
                keywords: ["h", "f", "c", "b", "a"].map(String::from).to_vec(),
            }],
            ..DispatcherConfig::default()
        });
        let plan = c.validate(None, Path::new(".")).unwrap();
        assert_eq!(plan.items[0].1, TaskCoordinates { x: 7, y: 5 });
        assert_eq!((plan.plane.width, plan.plane.height), (32.0, 32.0));
    }
}
