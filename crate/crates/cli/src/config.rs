//! Run configuration (TOML).
//!
//! ```toml
//! schemes = ["staggered", "monolithic"]   # top-level keys go before tables
//!
//! [model]
//! benchmark = "notched-shear"     # or: mesh = "plate.mesh" plus boundary data
//!
//! [rve]
//! builtin = "porous-square"       # or: mesh = "cell.mesh"
//!
//! [solver]
//! tol_macro = 1e-9
//! parallel_workers = 2
//! ```
//!
//! Every omitted field takes the benchmark (or global) default; the fully
//! resolved configuration is written next to the results.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use fescale_core::material::{ElasticParams, Material, PlasticParams};
use fescale_core::mesh::Mesh;
use fescale_core::rve::{RveTemplate, DEFAULT_TOL_GEOM};
use fescale_core::twoscale::{Loading, Scheme, SolverSettings, TwoScaleModel};

use crate::benchmarks::{Benchmark, RveKind};
use crate::meshio::read_mesh;
use crate::ConfigError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub schemes: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
    pub model: ModelSection,
    #[serde(default)]
    pub rve: RveSection,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub materials: Vec<MaterialSection>,
    #[serde(default)]
    pub solver: SolverSection,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub benchmark: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mesh: Option<PathBuf>,
    /// Grid cells across the shortest side of a built-in benchmark.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cells: Option<usize>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub boundary: Vec<BoundarySection>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub force: Vec<ForceSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reaction: Option<SideSelector>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub control: Option<NodeSelector>,
}

/// Prescribed displacement (at load factor 1) on every node of a side.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoundarySection {
    pub side: String,
    pub component: String,
    #[serde(default)]
    pub value: f64,
}

/// Nodal force at load factor 1.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ForceSection {
    pub node: usize,
    pub component: String,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SideSelector {
    pub side: String,
    pub component: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NodeSelector {
    pub node: usize,
    pub component: String,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RveSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub builtin: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mesh: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cells: Option<usize>,
}

/// Material of one RVE phase, in phase order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MaterialSection {
    /// `elastic` or `plastic`
    pub model: String,
    pub young: f64,
    pub poisson: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub yield_stress: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hardening: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverSection {
    pub tol_macro: Option<f64>,
    pub tol_micro: Option<f64>,
    pub max_macro_iter: Option<usize>,
    pub n_max: Option<usize>,
    pub t_end: Option<f64>,
    pub dt_initial: Option<f64>,
    pub dt_min: Option<f64>,
    pub dt_max: Option<f64>,
    pub cut_factor: Option<f64>,
    pub growth_factor: Option<f64>,
    pub extrapolate: Option<bool>,
    pub parallel_workers: Option<usize>,
}

impl SolverSection {
    fn resolve(&self, base: SolverSettings) -> SolverSettings {
        SolverSettings {
            tol_macro: self.tol_macro.unwrap_or(base.tol_macro),
            tol_micro: self.tol_micro.unwrap_or(base.tol_micro),
            max_macro_iter: self.max_macro_iter.unwrap_or(base.max_macro_iter),
            n_max: self.n_max.unwrap_or(base.n_max),
            t_end: self.t_end.unwrap_or(base.t_end),
            dt_initial: self.dt_initial.unwrap_or(base.dt_initial),
            dt_min: self.dt_min.unwrap_or(base.dt_min),
            dt_max: self.dt_max.unwrap_or(base.dt_max),
            cut_factor: self.cut_factor.unwrap_or(base.cut_factor),
            growth_factor: self.growth_factor.unwrap_or(base.growth_factor),
            extrapolate: self.extrapolate.unwrap_or(base.extrapolate),
            parallel_workers: self.parallel_workers.unwrap_or(base.parallel_workers),
        }
    }

    fn from_settings(s: &SolverSettings) -> Self {
        Self {
            tol_macro: Some(s.tol_macro),
            tol_micro: Some(s.tol_micro),
            max_macro_iter: Some(s.max_macro_iter),
            n_max: Some(s.n_max),
            t_end: Some(s.t_end),
            dt_initial: Some(s.dt_initial),
            dt_min: Some(s.dt_min),
            dt_max: Some(s.dt_max),
            cut_factor: Some(s.cut_factor),
            growth_factor: Some(s.growth_factor),
            extrapolate: Some(s.extrapolate),
            parallel_workers: Some(s.parallel_workers),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum MacroSpec {
    Builtin {
        benchmark: Benchmark,
        cells: usize,
    },
    File {
        path: PathBuf,
        loading: Loading,
        mesh: Mesh,
        /// The `[model]` table as given, for echoing.
        section: ModelSection,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub enum RveSpec {
    Builtin { kind: RveKind, cells: usize },
    File { path: PathBuf, mesh: Mesh },
}

impl RveSpec {
    pub fn mesh(&self) -> Mesh {
        match self {
            RveSpec::Builtin { kind, cells } => kind.mesh(*cells),
            RveSpec::File { mesh, .. } => mesh.clone(),
        }
    }

    pub fn n_phases(&self) -> usize {
        match self {
            RveSpec::Builtin { kind, .. } => kind.n_phases(),
            RveSpec::File { mesh, .. } => mesh.blocks().iter().map(|b| b.phase + 1).max().unwrap_or(0),
        }
    }
}

/// Validated configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub name: String,
    pub macro_model: MacroSpec,
    pub rve: RveSpec,
    pub materials: Vec<Material>,
    pub settings: SolverSettings,
    pub schemes: Vec<Scheme>,
    pub output: PathBuf,
}

pub const DEFAULT_OUTPUT: &str = "results";

/// Reads, parses and validates a configuration file. Relative mesh paths are
/// resolved against the directory of the file.
pub fn load_config(path: &Path) -> Result<RunConfig, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let file: FileConfig = toml::from_str(&text).map_err(|e| {
        let (line, column) = e.span().map(|span| line_column(&text, span.start)).unwrap_or((0, 0));
        ConfigError::Parse {
            path: path.to_path_buf(),
            line,
            column,
            message: e.message().to_string(),
        }
    })?;
    let base = path.parent().unwrap_or(Path::new("."));
    RunConfig::from_file(&file, base)
}

fn line_column(text: &str, offset: usize) -> (usize, usize) {
    let before = &text[..offset.min(text.len())];
    let line = before.matches('\n').count() + 1;
    let column = before.len() - before.rfind('\n').map_or(0, |i| i + 1) + 1;
    (line, column)
}

/// Mesh paths are stored absolute so that the echoed configuration can be
/// reloaded from the output directory.
fn absolute(base_dir: &Path, path: &Path) -> PathBuf {
    let joined = base_dir.join(path);
    std::path::absolute(&joined).unwrap_or(joined)
}

fn invalid(field: &str, message: impl Into<String>) -> ConfigError {
    ConfigError::Invalid {
        field: field.to_string(),
        message: message.into(),
    }
}

fn component(field: &str, name: &str) -> Result<Vec<usize>, ConfigError> {
    match name {
        "x" => Ok(vec![0]),
        "y" => Ok(vec![1]),
        "both" => Ok(vec![0, 1]),
        other => Err(invalid(field, format!("component must be x, y or both, got `{other}`"))),
    }
}

fn side_nodes(field: &str, mesh: &Mesh, side: &str) -> Result<Vec<usize>, ConfigError> {
    let (lo, hi) = mesh.bounding_box();
    let tol = 1e-9 * (hi[0] - lo[0]).max(hi[1] - lo[1]);
    let (axis, value) = match side {
        "x_min" => (0, lo[0]),
        "x_max" => (0, hi[0]),
        "y_min" => (1, lo[1]),
        "y_max" => (1, hi[1]),
        other => {
            return Err(invalid(
                field,
                format!("side must be x_min, x_max, y_min or y_max, got `{other}`"),
            ))
        }
    };
    Ok((0..mesh.n_nodes())
        .filter(|&n| (mesh.nodes()[n][axis] - value).abs() <= tol)
        .collect())
}

fn custom_loading(model: &ModelSection, mesh: &Mesh) -> Result<Loading, ConfigError> {
    if model.boundary.is_empty() {
        return Err(invalid(
            "model.boundary",
            "a mesh-file model needs at least one boundary entry",
        ));
    }
    let mut prescribed: Vec<(usize, f64)> = Vec::new();
    for (i, b) in model.boundary.iter().enumerate() {
        let field = format!("model.boundary[{i}]");
        for n in side_nodes(&field, mesh, &b.side)? {
            for c in component(&field, &b.component)? {
                let dof = 2 * n + c;
                match prescribed.iter_mut().find(|(d, _)| *d == dof) {
                    Some(entry) if entry.1 != b.value => {
                        return Err(invalid(&field, format!("conflicting values for node {n}")))
                    }
                    Some(_) => {}
                    None => prescribed.push((dof, b.value)),
                }
            }
        }
    }
    let mut forces = Vec::new();
    for (i, f) in model.force.iter().enumerate() {
        let field = format!("model.force[{i}]");
        if f.node >= mesh.n_nodes() {
            return Err(invalid(&field, format!("node {} does not exist", f.node)));
        }
        for c in component(&field, &f.component)? {
            forces.push((2 * f.node + c, f.value));
        }
    }
    let reaction = model
        .reaction
        .as_ref()
        .ok_or_else(|| invalid("model.reaction", "required for mesh-file models"))?;
    let mut reaction_dofs = Vec::new();
    for n in side_nodes("model.reaction", mesh, &reaction.side)? {
        for c in component("model.reaction", &reaction.component)? {
            reaction_dofs.push(2 * n + c);
        }
    }
    let control = model
        .control
        .as_ref()
        .ok_or_else(|| invalid("model.control", "required for mesh-file models"))?;
    let c = match component("model.control", &control.component)?.as_slice() {
        [c] => *c,
        _ => return Err(invalid("model.control", "component must be x or y")),
    };
    if control.node >= mesh.n_nodes() {
        return Err(invalid(
            "model.control",
            format!("node {} does not exist", control.node),
        ));
    }
    Ok(Loading {
        prescribed,
        forces,
        reaction_dofs,
        control_dof: 2 * control.node + c,
    })
}

fn material(i: usize, m: &MaterialSection) -> Result<Material, ConfigError> {
    let field = format!("materials[{i}]");
    let elastic = ElasticParams::new(m.young, m.poisson);
    let material = match m.model.as_str() {
        "elastic" => Material::Elastic(elastic),
        "plastic" => Material::Plastic(PlasticParams {
            elastic,
            yield_stress: m
                .yield_stress
                .ok_or_else(|| invalid(&field, "plastic materials need yield_stress"))?,
            hardening: m.hardening.unwrap_or(0.0),
        }),
        other => {
            return Err(invalid(
                &field,
                format!("model must be elastic or plastic, got `{other}`"),
            ))
        }
    };
    if !material.is_valid() {
        return Err(invalid(
            &field,
            "need young > 0, -1 < poisson < 0.5, yield_stress > 0 and hardening >= 0",
        ));
    }
    Ok(material)
}

fn material_section(m: &Material) -> MaterialSection {
    match m {
        Material::Elastic(e) => MaterialSection {
            model: "elastic".into(),
            young: e.young,
            poisson: e.poisson,
            yield_stress: None,
            hardening: None,
        },
        Material::Plastic(p) => MaterialSection {
            model: "plastic".into(),
            young: p.elastic.young,
            poisson: p.elastic.poisson,
            yield_stress: Some(p.yield_stress),
            hardening: Some(p.hardening),
        },
    }
}

impl RunConfig {
    pub fn from_file(file: &FileConfig, base_dir: &Path) -> Result<Self, ConfigError> {
        let benchmark = file
            .model
            .benchmark
            .as_deref()
            .map(|b| b.parse::<Benchmark>().map_err(|e| invalid("model.benchmark", e)))
            .transpose()?;

        let macro_model = match (benchmark, &file.model.mesh) {
            (Some(_), Some(_)) => return Err(invalid("model", "give either `benchmark` or `mesh`, not both")),
            (None, None) => return Err(invalid("model", "one of `benchmark` or `mesh` is required")),
            (Some(benchmark), None) => {
                let m = &file.model;
                if !m.boundary.is_empty() || !m.force.is_empty() || m.reaction.is_some() || m.control.is_some() {
                    return Err(invalid(
                        "model",
                        "built-in benchmarks define their own boundary conditions",
                    ));
                }
                let cells = m.cells.unwrap_or(benchmark.default_cells());
                if cells < 2 {
                    return Err(invalid("model.cells", "must be at least 2"));
                }
                MacroSpec::Builtin { benchmark, cells }
            }
            (None, Some(path)) => {
                if file.model.cells.is_some() {
                    return Err(invalid("model.cells", "only applies to built-in benchmarks"));
                }
                let path = absolute(base_dir, path);
                let mesh = read_mesh(&path)?;
                if mesh.blocks().iter().any(|b| b.phase != 0) {
                    return Err(invalid("model.mesh", "macro elements must all have phase 0"));
                }
                let loading = custom_loading(&file.model, &mesh)?;
                let section = ModelSection {
                    mesh: Some(path.clone()),
                    ..file.model.clone()
                };
                MacroSpec::File {
                    path,
                    loading,
                    mesh,
                    section,
                }
            }
        };

        let rve = match (&file.rve.builtin, &file.rve.mesh) {
            (Some(_), Some(_)) => return Err(invalid("rve", "give either `builtin` or `mesh`, not both")),
            (None, Some(path)) => {
                if file.rve.cells.is_some() {
                    return Err(invalid("rve.cells", "only applies to built-in RVEs"));
                }
                let path = absolute(base_dir, path);
                let mesh = read_mesh(&path)?;
                RveSpec::File { path, mesh }
            }
            (builtin, None) => {
                let kind = match builtin {
                    Some(name) => name.parse::<RveKind>().map_err(|e| invalid("rve.builtin", e))?,
                    None => benchmark.map_or(RveKind::PorousSquare, Benchmark::default_rve),
                };
                let cells = file.rve.cells.unwrap_or(kind.default_cells());
                if cells == 0 {
                    return Err(invalid("rve.cells", "must be at least 1"));
                }
                RveSpec::Builtin { kind, cells }
            }
        };

        let materials = if file.materials.is_empty() {
            let matrix = benchmark.unwrap_or(Benchmark::NotchedShear).matrix_material();
            match &rve {
                RveSpec::Builtin { kind, .. } => kind.default_materials(matrix),
                RveSpec::File { .. } => {
                    return Err(invalid("materials", "required when the RVE comes from a mesh file"))
                }
            }
        } else {
            file.materials
                .iter()
                .enumerate()
                .map(|(i, m)| material(i, m))
                .collect::<Result<_, _>>()?
        };
        if materials.len() < rve.n_phases() {
            return Err(invalid(
                "materials",
                format!(
                    "the RVE has {} phases but {} materials are given",
                    rve.n_phases(),
                    materials.len()
                ),
            ));
        }

        let base_settings = benchmark.map_or_else(SolverSettings::default, Benchmark::default_settings);
        let settings = file.solver.resolve(base_settings);
        settings
            .validate()
            .map_err(|e| invalid("solver", e.to_string().trim_start_matches("invalid solver settings: ")))?;

        let schemes = match &file.schemes {
            None => vec![Scheme::Staggered, Scheme::Monolithic, Scheme::MonolithicStored],
            Some(list) => parse_schemes(list)?,
        };

        let name = match (&file.name, benchmark, &macro_model) {
            (Some(n), _, _) => n.clone(),
            (None, Some(b), _) => b.name().to_string(),
            (None, None, MacroSpec::File { path, .. }) => path
                .file_stem()
                .map_or("model".into(), |s| s.to_string_lossy().into_owned()),
            (None, None, MacroSpec::Builtin { .. }) => unreachable!("built-in specs carry a benchmark"),
        };
        if name.is_empty() || name.contains(['/', '\\']) {
            return Err(invalid("name", "must be a non-empty file-name-safe string"));
        }

        Ok(RunConfig {
            name,
            macro_model,
            rve,
            materials,
            settings,
            schemes,
            output: file.output.clone().unwrap_or_else(|| PathBuf::from(DEFAULT_OUTPUT)),
        })
    }

    /// Configuration for a built-in benchmark with all defaults.
    pub fn for_benchmark(benchmark: Benchmark) -> Self {
        let file = FileConfig {
            name: None,
            schemes: None,
            output: None,
            model: ModelSection {
                benchmark: Some(benchmark.name().into()),
                ..Default::default()
            },
            rve: RveSection::default(),
            materials: Vec::new(),
            solver: SolverSection::default(),
        };
        Self::from_file(&file, Path::new(".")).expect("built-in defaults are valid")
    }

    /// Builds a fresh model ready for [`fescale_core::twoscale::run`].
    pub fn build_model(&self) -> Result<TwoScaleModel, ConfigError> {
        let (mesh, loading) = match &self.macro_model {
            MacroSpec::Builtin { benchmark, cells } => {
                let m = benchmark.build(*cells);
                (m.mesh, m.loading)
            }
            MacroSpec::File { mesh, loading, .. } => (mesh.clone(), loading.clone()),
        };
        let template = RveTemplate::new(self.rve.mesh(), self.materials.clone(), DEFAULT_TOL_GEOM)
            .map_err(|e| invalid("rve", e.to_string()))?;
        TwoScaleModel::new(mesh, vec![Arc::new(template)], loading).map_err(|e| invalid("model", e.to_string()))
    }

    /// The resolved configuration as TOML, defaults included.
    pub fn to_toml(&self) -> String {
        let model = match &self.macro_model {
            MacroSpec::Builtin { benchmark, cells } => ModelSection {
                benchmark: Some(benchmark.name().into()),
                cells: Some(*cells),
                ..Default::default()
            },
            MacroSpec::File { section, .. } => section.clone(),
        };
        let rve = match &self.rve {
            RveSpec::Builtin { kind, cells } => RveSection {
                builtin: Some(kind.name().into()),
                mesh: None,
                cells: Some(*cells),
            },
            RveSpec::File { path, .. } => RveSection {
                builtin: None,
                mesh: Some(path.clone()),
                cells: None,
            },
        };
        let file = FileConfig {
            name: Some(self.name.clone()),
            schemes: Some(self.schemes.iter().map(|s| s.name().to_string()).collect()),
            output: Some(self.output.clone()),
            model,
            rve,
            materials: self.materials.iter().map(material_section).collect(),
            solver: SolverSection::from_settings(&self.settings),
        };
        toml::to_string(&file).expect("configuration serializes")
    }
}

pub fn parse_schemes(list: &[String]) -> Result<Vec<Scheme>, ConfigError> {
    if list.is_empty() {
        return Err(invalid("schemes", "at least one scheme is required"));
    }
    let mut out: Vec<Scheme> = Vec::new();
    for s in list {
        let scheme = s.trim().parse::<Scheme>().map_err(|e| invalid("schemes", e))?;
        if !out.contains(&scheme) {
            out.push(scheme);
        }
    }
    Ok(out)
}
