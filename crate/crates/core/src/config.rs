//! Scenario configuration: TOML schema, validation with line-anchored
//! messages, and the mesh/material realisation of a scenario.

use serde::{Deserialize, Serialize};

use crate::element::ElementOrder;
use crate::error::{Error, Result};
use crate::fibres::{place_fibres_random, place_fibres_square_array, FibreLayout, Inclusion};
use crate::materials::{InterfaceProps, Material, MaterialCatalog, FLAX_EPOXY};
use crate::mesh::Domain2D;
use crate::sparse::SolverKind;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub name: String,
    #[serde(default = "one")]
    pub seed: u64,
    pub geometry: GeometryConfig,
    #[serde(default)]
    pub materials: MaterialsConfig,
    pub physics: PhysicsConfig,
    pub numerics: NumericsConfig,
    #[serde(default)]
    pub measure: MeasureConfig,
    #[serde(default)]
    pub output: OutputConfig,
    #[serde(default)]
    pub stages: Vec<StageConfig>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeometryConfig {
    pub width: f64,
    pub height: f64,
    #[serde(default)]
    pub fibres: FibreConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub crack: Option<CrackConfig>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum FibreConfig {
    #[default]
    None,
    SquareArray {
        rows: usize,
        cols: usize,
        diameter: f64,
        #[serde(default)]
        orientation_deg: f64,
    },
    Random {
        count: usize,
        diameter: f64,
        #[serde(default)]
        min_gap: f64,
    },
    Explicit {
        inclusions: Vec<Inclusion>,
    },
}

/// Straight crack from the left edge along `y`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CrackConfig {
    pub length: f64,
    pub y: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MaterialsConfig {
    #[serde(default = "default_catalog")]
    pub catalog: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub matrix: Option<Material>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fibre: Option<Material>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub interface: Option<InterfaceProps>,
}

impl Default for MaterialsConfig {
    fn default() -> Self {
        Self {
            catalog: default_catalog(),
            matrix: None,
            fibre: None,
            interface: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhysicsConfig {
    /// Phase-field length scale (mm).
    pub length_scale: f64,
    /// Indicator length scale; the phase-field one when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub indicator_length_scale: Option<f64>,
    #[serde(default = "two")]
    pub exponent: f64,
    #[serde(default = "default_kappa")]
    pub kappa: f64,
    /// Concentration of the stress-free reference state.
    #[serde(default)]
    pub reference_concentration: f64,
    #[serde(default)]
    pub initial_concentration: f64,
    /// Out-of-plane thickness (mm) multiplying reported forces.
    #[serde(default = "unit")]
    pub thickness: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NumericsConfig {
    #[serde(default)]
    pub element_order: ElementOrder,
    /// Element size at mesh scale 1 (mm).
    pub mesh_size: f64,
    #[serde(default = "unit")]
    pub mesh_scale: f64,
    #[serde(default = "unit")]
    pub dt_scale: f64,
    #[serde(default)]
    pub solver: SolverKind,
    #[serde(default)]
    pub multi_pass: bool,
    #[serde(default = "default_pass_tol")]
    pub pass_tolerance: f64,
    #[serde(default = "default_max_passes")]
    pub max_passes: usize,
    #[serde(default = "default_halvings")]
    pub max_halvings: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Axis {
    X,
    Y,
}

impl Axis {
    pub fn index(self) -> usize {
        match self {
            Axis::X => 0,
            Axis::Y => 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeasureConfig {
    #[serde(default = "default_reaction_set")]
    pub reaction_set: String,
    #[serde(default = "default_axis_y")]
    pub reaction_component: Axis,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub elongation: Option<ElongationConfig>,
    /// Concentration probe point; the domain centre when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub probe: Option<[f64; 2]>,
}

impl Default for MeasureConfig {
    fn default() -> Self {
        Self {
            reaction_set: default_reaction_set(),
            reaction_component: Axis::Y,
            elongation: None,
            probe: None,
        }
    }
}

/// `factor * mean(u_component)` over a node set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ElongationConfig {
    pub set: String,
    pub component: Axis,
    #[serde(default = "unit")]
    pub factor: f64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub directory: Option<String>,
    /// VTK snapshot every this many steps (0: initial state and stage ends only).
    #[serde(default)]
    pub vtk_every: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StageConfig {
    pub name: String,
    /// Seconds.
    pub duration: f64,
    pub dt: f64,
    /// Whether moisture transport is solved (false freezes C).
    #[serde(default = "yes")]
    pub diffusion: bool,
    #[serde(default)]
    pub moisture: Vec<MoistureEntry>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub moisture_flux: Vec<FluxEntry>,
    #[serde(default)]
    pub mechanics: Vec<DisplacementEntry>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MoistureEntry {
    pub set: String,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FluxEntry {
    pub set: String,
    pub q: f64,
}

/// `u_component = value + rate * (time since stage start)` on a node set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DisplacementEntry {
    pub set: String,
    pub component: Axis,
    #[serde(default)]
    pub value: f64,
    #[serde(default)]
    pub rate: f64,
}

fn one() -> u64 {
    1
}
fn unit() -> f64 {
    1.0
}
fn two() -> f64 {
    2.0
}
fn yes() -> bool {
    true
}
fn default_kappa() -> f64 {
    crate::constitutive::KAPPA
}
fn default_catalog() -> String {
    FLAX_EPOXY.to_string()
}
fn default_pass_tol() -> f64 {
    1e-4
}
fn default_max_passes() -> usize {
    50
}
fn default_halvings() -> usize {
    6
}
fn default_reaction_set() -> String {
    crate::mesh::BOTTOM.to_string()
}
fn default_axis_y() -> Axis {
    Axis::Y
}

/// Built-in scenarios as `(name, TOML source)`.
pub const PRESETS: &[(&str, &str)] = &[
    ("single_fibre", include_str!("../presets/single_fibre.toml")),
    ("multi_fibre_sa", include_str!("../presets/multi_fibre_sa.toml")),
    ("multi_fibre_rd", include_str!("../presets/multi_fibre_rd.toml")),
    ("secp_plate", include_str!("../presets/secp_plate.toml")),
    ("secp_plate_no_moisture", include_str!("../presets/secp_plate_no_moisture.toml")),
    ("secp_plate_dried", include_str!("../presets/secp_plate_dried.toml")),
    ("ply", include_str!("../presets/ply.toml")),
    ("laminate", include_str!("../presets/laminate.toml")),
];

pub fn preset_names() -> impl Iterator<Item = &'static str> {
    PRESETS.iter().map(|p| p.0)
}

pub fn preset(name: &str) -> Result<ScenarioConfig> {
    let (_, text) = PRESETS
        .iter()
        .find(|p| p.0 == name)
        .ok_or_else(|| Error::UnknownPreset(name.to_string()))?;
    ScenarioConfig::from_toml(text)
}

/// One validation failure: dotted key path and message.
#[derive(Debug, Clone, PartialEq)]
pub struct Issue {
    pub path: String,
    pub message: String,
}

impl ScenarioConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: ScenarioConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        let issues = cfg.issues();
        if issues.is_empty() {
            Ok(cfg)
        } else {
            Err(Error::Config(format_issues(text, &issues)))
        }
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn validate(&self) -> Result<()> {
        let issues = self.issues();
        if issues.is_empty() {
            return Ok(());
        }
        let text = self.to_toml().unwrap_or_default();
        Err(Error::Config(format_issues(&text, &issues)))
    }

    /// Every semantic problem, in document order.
    pub fn issues(&self) -> Vec<Issue> {
        let mut out = Vec::new();
        let mut check = |ok: bool, path: &str, message: &str| {
            if !ok {
                out.push(Issue {
                    path: path.to_string(),
                    message: message.to_string(),
                });
            }
        };
        let g = &self.geometry;
        check(g.width > 0.0 && g.width.is_finite(), "geometry.width", "must be positive");
        check(g.height > 0.0 && g.height.is_finite(), "geometry.height", "must be positive");
        match &g.fibres {
            FibreConfig::SquareArray { diameter, .. } | FibreConfig::Random { diameter, .. } => {
                check(*diameter > 0.0, "geometry.fibres.diameter", "must be positive")
            }
            _ => {}
        }
        if let FibreConfig::Random { min_gap, .. } = &g.fibres {
            check(*min_gap >= 0.0, "geometry.fibres.min_gap", "must not be negative");
        }
        if let Some(c) = &g.crack {
            check(c.length >= 0.0 && c.length < g.width, "geometry.crack.length", "must lie in [0, width)");
            check(c.y > 0.0 && c.y < g.height, "geometry.crack.y", "must lie strictly inside the height");
        }

        match MaterialCatalog::by_name(&self.materials.catalog) {
            Err(_) => check(false, "materials.catalog", "unknown catalog"),
            Ok(_) => {
                let cat = self.catalog().expect("catalog name checked");
                for (name, m) in [("matrix", &cat.matrix), ("fibre", &cat.fibre)] {
                    let e = &m.elastic;
                    check(e.e11 > 0.0, &format!("materials.{name}.elastic.e11"), "must be positive");
                    check(e.e22 > 0.0, &format!("materials.{name}.elastic.e22"), "must be positive");
                    check(e.nu23 > -1.0 && e.nu23 < 0.5, &format!("materials.{name}.elastic.nu23"), "must lie in (-1, 0.5)");
                    check(e.g12.is_none_or(|g| g > 0.0), &format!("materials.{name}.elastic.g12"), "must be positive");
                    if e.validate().is_ok() {
                        check(
                            crate::constitutive::plane_strain_stiffness(e, 0.0).is_ok(),
                            &format!("materials.{name}.elastic"),
                            "plane-strain stiffness is not positive definite",
                        );
                    }
                    check(m.gc > 0.0, &format!("materials.{name}.gc"), "must be positive");
                    check(m.diffusivity > 0.0, &format!("materials.{name}.diffusivity"), "must be positive");
                }
                check(cat.interface.gc > 0.0, "materials.interface.gc", "must be positive");
                check(cat.interface.diffusivity > 0.0, "materials.interface.diffusivity", "must be positive");
            }
        }

        let p = &self.physics;
        check(p.length_scale > 0.0, "physics.length_scale", "must be positive");
        check(
            p.indicator_length_scale.is_none_or(|l| l > 0.0),
            "physics.indicator_length_scale",
            "must be positive",
        );
        check(p.exponent >= 1.0, "physics.exponent", "must be at least 1");
        check(p.kappa >= 0.0 && p.kappa < 1.0, "physics.kappa", "must lie in [0, 1)");
        check(p.thickness > 0.0, "physics.thickness", "must be positive");
        check((0.0..=1.0).contains(&p.initial_concentration), "physics.initial_concentration", "must lie in [0, 1]");
        check((0.0..=1.0).contains(&p.reference_concentration), "physics.reference_concentration", "must lie in [0, 1]");

        let n = &self.numerics;
        check(n.mesh_size > 0.0, "numerics.mesh_size", "must be positive");
        check(n.mesh_scale > 0.0, "numerics.mesh_scale", "must be positive");
        check(n.dt_scale > 0.0, "numerics.dt_scale", "must be positive");
        check(n.pass_tolerance > 0.0, "numerics.pass_tolerance", "must be positive");
        check(n.max_passes >= 1, "numerics.max_passes", "must be at least 1");
        if n.mesh_size > 0.0 && n.mesh_scale > 0.0 {
            check(
                self.element_size() <= g.width.min(g.height),
                "numerics.mesh_size",
                "scaled element size exceeds the smallest domain side",
            );
        }

        let known_set = |s: &str| {
            matches!(s, "left" | "right" | "top" | "bottom" | "interface")
                || (g.crack.is_some() && matches!(s, "crack_lower" | "crack_upper"))
        };
        let m = &self.measure;
        check(known_set(&m.reaction_set), "measure.reaction_set", "unknown node set");
        if let Some(e) = &m.elongation {
            check(known_set(&e.set), "measure.elongation.set", "unknown node set");
        }
        for (i, s) in self.stages.iter().enumerate() {
            let at = |k: &str| format!("stages[{i}].{k}");
            check(s.duration >= 0.0 && s.duration.is_finite(), &at("duration"), "must not be negative");
            check(s.dt > 0.0, &at("dt"), "must be positive");
            for (j, e) in s.moisture.iter().enumerate() {
                check(known_set(&e.set), &format!("stages[{i}].moisture[{j}].set"), "unknown node set");
                check((0.0..=1.0).contains(&e.value), &format!("stages[{i}].moisture[{j}].value"), "must lie in [0, 1]");
            }
            for (j, e) in s.moisture_flux.iter().enumerate() {
                check(known_set(&e.set), &format!("stages[{i}].moisture_flux[{j}].set"), "unknown node set");
            }
            for (j, e) in s.mechanics.iter().enumerate() {
                check(known_set(&e.set), &format!("stages[{i}].mechanics[{j}].set"), "unknown node set");
            }
        }
        out
    }

    /// Catalog with inline overrides applied.
    pub fn catalog(&self) -> Result<MaterialCatalog> {
        let mut cat = MaterialCatalog::by_name(&self.materials.catalog)?;
        if let Some(m) = &self.materials.matrix {
            cat.matrix = m.clone();
        }
        if let Some(f) = &self.materials.fibre {
            cat.fibre = f.clone();
        }
        if let Some(i) = self.materials.interface {
            cat.interface = i;
        }
        Ok(cat)
    }

    pub fn domain(&self) -> Result<Domain2D> {
        Domain2D::new(self.geometry.width, self.geometry.height)
    }

    /// Target element size after scaling. With a crack the size is reduced
    /// so the crack length is a whole number of elements.
    pub fn element_size(&self) -> f64 {
        let h = self.numerics.mesh_size * self.numerics.mesh_scale;
        match self.geometry.crack {
            Some(c) if c.length > 0.0 => c.length / (c.length / h * (1.0 - 1e-12)).ceil(),
            _ => h,
        }
    }

    pub fn indicator_length_scale(&self) -> f64 {
        self.physics
            .indicator_length_scale
            .unwrap_or(self.physics.length_scale)
    }

    pub fn fibre_layout(&self, domain: &Domain2D) -> Result<FibreLayout> {
        match &self.geometry.fibres {
            FibreConfig::None => Ok(FibreLayout::empty()),
            FibreConfig::SquareArray {
                rows,
                cols,
                diameter,
                orientation_deg,
            } => {
                let mut l = place_fibres_square_array(*rows, *cols, *diameter, domain)?;
                for inc in &mut l.inclusions {
                    inc.orientation_deg = *orientation_deg;
                }
                Ok(l)
            }
            FibreConfig::Random {
                count,
                diameter,
                min_gap,
            } => place_fibres_random(*count, *diameter, domain, self.seed, *min_gap),
            FibreConfig::Explicit { inclusions } => Ok(FibreLayout::explicit(inclusions.clone())),
        }
    }

    /// Stage time steps after `dt_scale`.
    pub fn stage_dt(&self, stage: &StageConfig) -> f64 {
        stage.dt * self.numerics.dt_scale
    }

    pub fn total_duration(&self) -> f64 {
        self.stages.iter().map(|s| s.duration).sum()
    }
}

/// `line N: key `path`: message` lines; the line is omitted when the key
/// cannot be found in the text.
pub fn format_issues(text: &str, issues: &[Issue]) -> String {
    issues
        .iter()
        .map(|i| match find_key_line(text, &i.path) {
            Some(line) => format!("line {line}: key `{}`: {}", i.path, i.message),
            None => format!("key `{}`: {}", i.path, i.message),
        })
        .collect::<Vec<_>>()
        .join("\n")
}

/// 1-based line of a dotted key such as `stages[1].dt` or
/// `materials.matrix.gc`, tracking table headers and array-of-table indices.
pub fn find_key_line(text: &str, path: &str) -> Option<usize> {
    let parts: Vec<&str> = path.split('.').collect();
    let (key, table) = parts.split_last()?;
    let want_table = table.join(".");
    let mut current = String::new();
    let mut counters: std::collections::HashMap<String, usize> = Default::default();
    let mut fallback = None;
    for (n, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if let Some(h) = line.strip_prefix("[[").and_then(|l| l.strip_suffix("]]")) {
            let h = h.trim().to_string();
            let idx = counters.entry(h.clone()).or_insert(0);
            current = format!("{h}[{idx}]");
            *idx += 1;
            continue;
        }
        if let Some(h) = line.strip_prefix('[').and_then(|l| l.strip_suffix(']')) {
            let h = h.trim();
            // nested tables of an array element: [stages.x] belongs to the last [[stages]]
            current = match h.split_once('.') {
                Some((head, rest)) if counters.contains_key(head) => {
                    format!("{head}[{}].{rest}", counters[head] - 1)
                }
                _ => h.to_string(),
            };
            continue;
        }
        let Some((k, _)) = line.split_once('=') else { continue };
        let k = k.trim().trim_matches('"');
        // dotted keys inside a table
        let full = if current.is_empty() { k.to_string() } else { format!("{current}.{k}") };
        let bare_key = key.split('[').next().unwrap_or(key);
        if full == path || (full == format!("{want_table}.{bare_key}") && !want_table.is_empty()) {
            return Some(n + 1);
        }
        if current == want_table && k == bare_key {
            return Some(n + 1);
        }
        if fallback.is_none() && (line.contains(&format!("{bare_key} =")) || line.contains(&format!("{bare_key}="))) {
            let parent = table.last().map(|p| p.split('[').next().unwrap_or(p));
            if parent.is_none_or(|p| current.contains(p) || line.contains(p)) {
                fallback = Some(n + 1);
            }
        }
    }
    fallback
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
name = "tiny"

[geometry]
width = 1.0
height = 0.5

[physics]
length_scale = 0.1

[numerics]
mesh_size = 0.05

[[stages]]
name = "wet"
duration = 10.0
dt = 1.0
moisture = [{ set = "left", value = 0.0745 }]
"#;

    #[test]
    fn minimal_config_parses_with_defaults() {
        let c = ScenarioConfig::from_toml(MINIMAL).unwrap();
        assert_eq!(c.seed, 1);
        assert_eq!(c.materials.catalog, "flax-epoxy");
        assert_eq!(c.physics.exponent, 2.0);
        assert_eq!(c.physics.kappa, 1e-7);
        assert_eq!(c.indicator_length_scale(), 0.1);
        assert!(c.stages[0].diffusion);
        let again = ScenarioConfig::from_toml(&c.to_toml().unwrap()).unwrap();
        assert_eq!(c, again);
    }

    #[test]
    fn unknown_keys_rejected() {
        let text = MINIMAL.replace("length_scale = 0.1", "length_scale = 0.1\nlenght = 2");
        let err = ScenarioConfig::from_toml(&text).unwrap_err().to_string();
        assert!(err.contains("lenght"), "{err}");
    }

    #[test]
    fn negative_toughness_names_key_and_line() {
        let text = MINIMAL.to_string()
            + r#"
[materials.interface]
gc = -0.2
diffusivity = 0.8e-6
alpha = 0.1
"#;
        let err = ScenarioConfig::from_toml(&text).unwrap_err().to_string();
        let line = text.lines().position(|l| l.starts_with("gc = -0.2")).unwrap() + 1;
        assert!(err.contains("materials.interface.gc"), "{err}");
        assert!(err.contains(&format!("line {line}")), "{err}");
    }

    #[test]
    fn stage_issue_points_at_its_table() {
        let text = MINIMAL.to_string() + "\n[[stages]]\nname = \"dry\"\nduration = 5.0\ndt = -1.0\n";
        let err = ScenarioConfig::from_toml(&text).unwrap_err().to_string();
        let line = text.lines().position(|l| l == "dt = -1.0").unwrap() + 1;
        assert!(err.contains(&format!("line {line}: key `stages[1].dt`")), "{err}");
    }

    #[test]
    fn presets_parse_and_round_trip() {
        for name in preset_names() {
            let c = preset(name).unwrap();
            assert_eq!(c.name, name);
            let again = ScenarioConfig::from_toml(&c.to_toml().unwrap()).unwrap();
            assert_eq!(c, again, "{name}");
        }
        assert!(matches!(preset("nope"), Err(Error::UnknownPreset(_))));
        let sf = preset("single_fibre").unwrap();
        assert_eq!((sf.geometry.width, sf.geometry.height), (0.02, 0.02));
        assert_eq!(sf.stages[0].moisture[0].value, 0.0745);
        assert_eq!(sf.stages.iter().map(|s| s.duration).collect::<Vec<_>>(), vec![2000.0, 5000.0]);
        let sa = preset("multi_fibre_sa").unwrap();
        assert!(matches!(sa.geometry.fibres, FibreConfig::SquareArray { rows: 6, cols: 6, .. }));
        assert_eq!(sa.stages[0].duration, 30000.0);
    }

    #[test]
    fn crack_snaps_element_size() {
        let mut c = ScenarioConfig::from_toml(MINIMAL).unwrap();
        c.numerics.mesh_size = 0.00045;
        c.geometry.width = 0.1;
        c.geometry.height = 0.2;
        c.geometry.crack = Some(CrackConfig { length: 0.05, y: 0.1 });
        let h = c.element_size();
        assert!(h <= 0.00045);
        let n = 0.05 / h;
        assert!((n - n.round()).abs() < 1e-9);
    }
}
