//! Run configuration: one JSON document per run.

use serde::{Deserialize, Serialize};
use serde_json::Value;

use cavspin::analysis::{Axis, EigenSettings};
use cavspin::compare::Observable;
use cavspin::dynamics::EvolutionSettings;
use cavspin::effective::{afm_equivalent_params, couplings_to_spin_params, derive_couplings, SpinModelParams};
use cavspin::regime::RegimeThresholds;
use cavspin::{CavityGraph, PhysicalParams};

use crate::CliError;

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub physical: Option<PhysicalParams>,
    pub graph: GraphSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub model: Option<ModelKind>,
    #[serde(default = "default_n_max")]
    pub n_max: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub thresholds: RegimeThresholds,
    #[serde(default)]
    pub units: Units,
    /// Explicit spin-model coefficients; replaces the mapping from
    /// `physical` for spin-model tasks.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub spin_model: Option<SpinModelSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub task: Option<Task>,
    #[serde(default)]
    pub output: OutputSpec,
}

fn default_n_max() -> usize {
    cavspin::full_model::DEFAULT_N_MAX
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum GraphSpec {
    Single,
    Chain {
        n: usize,
        #[serde(default)]
        periodic: bool,
    },
    Edges {
        n: usize,
        edges: Vec<(usize, usize)>,
    },
}

impl GraphSpec {
    pub fn build(&self) -> cavspin::Result<CavityGraph> {
        match self {
            GraphSpec::Single => Ok(CavityGraph::single()),
            GraphSpec::Chain { n, periodic } => CavityGraph::chain(*n, *periodic),
            GraphSpec::Edges { n, edges } => CavityGraph::from_edge_list(*n, edges),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    Full,
    Eliminated,
    Intermediate,
    Effective,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Units {
    /// Physical frequencies and rates are divided by this factor (times
    /// multiplied by it) before use, so results come out in its units.
    pub frequency_scale: f64,
}

impl Default for Units {
    fn default() -> Self {
        Self { frequency_scale: 1.0 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpinModelSpec {
    #[serde(default)]
    pub a: f64,
    #[serde(default)]
    pub b: f64,
    #[serde(default)]
    pub c: f64,
    #[serde(default)]
    pub d: f64,
    #[serde(default)]
    pub e: f64,
    /// Defaults to `physical.atoms_per_cavity`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub two_s: Option<usize>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub local_c: Vec<f64>,
    /// The coefficients describe an antiferromagnetic target; it is realized
    /// through the sign-inverted model and its highest state.
    #[serde(default)]
    pub afm_target: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub path: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub format: Option<Format>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum TimeGrid {
    List(Vec<f64>),
    Uniform { t_final: f64, points: usize },
}

impl TimeGrid {
    pub fn times(&self, scale: f64) -> Result<Vec<f64>, CliError> {
        let t = match self {
            TimeGrid::List(v) => v.clone(),
            TimeGrid::Uniform { t_final, points } => {
                if *points < 2 {
                    return Err(CliError::config("task.times.uniform.points", "need at least 2 points"));
                }
                (0..*points).map(|k| t_final * k as f64 / (*points - 1) as f64).collect()
            }
        };
        Ok(t.into_iter().map(|x| x * scale).collect())
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum InitialState {
    /// Spin level index per site (`0` is `m = S`).
    Basis(Vec<usize>),
    /// Seeded random state.
    Random,
    /// Alternating `m = S`, `m = −S`.
    #[default]
    Neel,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ValidateTask {}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MapParamsTask {}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GroundStateTask {
    pub n_levels: usize,
    pub eigen: EigenSettings,
    /// Site pairs; empty means every graph edge.
    pub correlations: Vec<(usize, usize)>,
    pub axis: Axis,
}

impl Default for GroundStateTask {
    fn default() -> Self {
        Self {
            n_levels: 4,
            eigen: EigenSettings::default(),
            correlations: Vec::new(),
            axis: Axis::Z,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvolveTask {
    pub times: TimeGrid,
    #[serde(default)]
    pub initial: InitialState,
    /// Empty means `S^z` of every site.
    #[serde(default)]
    pub observables: Vec<Observable>,
    #[serde(default)]
    pub evolution: EvolutionSettings,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CompareTask {
    /// Defaults to one spin-exchange period in 101 points.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub times: Option<TimeGrid>,
    pub initial: InitialState,
    pub observables: Vec<Observable>,
    pub evolution: EvolutionSettings,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AdiabaticTask {
    pub durations: Vec<f64>,
    /// Starting coefficients; by default only a staggered field.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub start: Option<SpinModelSpec>,
    #[serde(default = "one")]
    pub staggered_field: f64,
    /// Defaults to the extreme eigenstate of the staggered field.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub initial: Option<InitialState>,
    #[serde(default)]
    pub evolution: EvolutionSettings,
    #[serde(default)]
    pub eigen: EigenSettings,
}

fn one() -> f64 {
    1.0
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepTask {
    /// Dotted path into this config, e.g. `physical.j` or `physical.omega1.0`.
    pub parameter: String,
    pub values: Vec<f64>,
    pub task: Box<Task>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Task {
    Validate(ValidateTask),
    MapParams(MapParamsTask),
    GroundState(GroundStateTask),
    Evolve(EvolveTask),
    Compare(CompareTask),
    Adiabatic(AdiabaticTask),
    Sweep(SweepTask),
}

impl Task {
    pub fn name(&self) -> &'static str {
        match self {
            Task::Validate(_) => "validate",
            Task::MapParams(_) => "map_params",
            Task::GroundState(_) => "ground_state",
            Task::Evolve(_) => "evolve",
            Task::Compare(_) => "compare",
            Task::Adiabatic(_) => "adiabatic",
            Task::Sweep(_) => "sweep",
        }
    }
}

/// Extracts the config from a plain config file, a JSON result (its
/// `config` member) or a CSV result (its `# config=` header line).
pub fn parse_config(text: &str) -> Result<RunConfig, CliError> {
    let body = match text.strip_prefix("# config=") {
        Some(rest) => rest.lines().next().unwrap_or(""),
        None => text,
    };
    let mut value: Value =
        serde_json::from_str(body).map_err(|e| CliError::config("<document>", &e.to_string()))?;
    if let Value::Object(map) = &value {
        if map.contains_key("config") && map.contains_key("result") {
            value = map["config"].clone();
        }
    }
    from_value(value)
}

pub fn from_value(value: Value) -> Result<RunConfig, CliError> {
    serde_path_to_error::deserialize(value).map_err(|e| {
        let path = e.path().to_string();
        CliError::config(&path, &e.into_inner().to_string())
    })
}

/// Sets the number at a dotted path, creating nothing.
pub fn set_path(value: &mut Value, path: &str, x: f64) -> Result<(), CliError> {
    let mut cur = value;
    for key in path.split('.') {
        cur = match cur {
            Value::Object(m) => m.get_mut(key),
            Value::Array(a) => key.parse::<usize>().ok().and_then(|i| a.get_mut(i)),
            _ => None,
        }
        .ok_or_else(|| CliError::config(path, "no such field"))?;
    }
    if !cur.is_number() {
        return Err(CliError::config(path, "sweep target is not a number"));
    }
    *cur = serde_json::json!(x);
    Ok(())
}

impl RunConfig {
    pub fn graph(&self) -> Result<CavityGraph, CliError> {
        self.graph.build().map_err(|e| CliError::config("graph", &e.to_string()))
    }

    /// Physical parameters in internal units.
    pub fn physical(&self) -> Result<PhysicalParams, CliError> {
        let p = self
            .physical
            .as_ref()
            .ok_or_else(|| CliError::config("physical", "this task needs a physical block"))?;
        Ok(p.scaled(1.0 / self.units.frequency_scale))
    }

    pub fn time_scale(&self) -> f64 {
        self.units.frequency_scale
    }

    fn spec_to_params(&self, s: &SpinModelSpec, graph: &CavityGraph) -> Result<SpinModelParams, CliError> {
        let two_s = match (s.two_s, &self.physical) {
            (Some(t), _) => t,
            (None, Some(p)) => p.atoms_per_cavity,
            (None, None) => return Err(CliError::config("spin_model.two_s", "needed without a physical block")),
        };
        let k = 1.0 / self.units.frequency_scale;
        let mut sp = SpinModelParams::new(s.a * k, s.b * k, s.c * k, s.d * k, s.e * k, two_s, graph.clone());
        sp.local_c = s.local_c.iter().map(|x| x * k).collect();
        if s.afm_target {
            sp = afm_equivalent_params(&sp);
        }
        sp.validate().map_err(|e| CliError::config("spin_model", &e.to_string()))?;
        Ok(sp)
    }

    /// The spin model: the explicit block if present, otherwise the map
    /// from the physical parameters.
    pub fn spin_params(&self) -> Result<SpinModelParams, CliError> {
        let graph = self.graph()?;
        if let Some(s) = &self.spin_model {
            return self.spec_to_params(s, &graph);
        }
        let p = self.physical()?;
        let c = derive_couplings(&p)?;
        Ok(couplings_to_spin_params(&c, p.atoms_per_cavity, &graph)?)
    }

    pub fn start_params(&self, s: &SpinModelSpec) -> Result<SpinModelParams, CliError> {
        self.spec_to_params(s, &self.graph()?)
    }

    pub fn validate_units(&self) -> Result<(), CliError> {
        let s = self.units.frequency_scale;
        if !(s.is_finite() && s > 0.0) {
            return Err(CliError::config("units.frequency_scale", "must be positive"));
        }
        Ok(())
    }
}
