//! One function per subcommand. Each returns the full JSON result, a
//! table for CSV output and a one-row summary used by sweeps.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};

use cavspin::analysis::{
    correlation, extremal_eigenpairs, magnetization_profile, target_excitation_gap, total_spin_per_site, Which,
};
use cavspin::compare::{compare_full_vs_effective, default_observables, embed_spin_state, CompareSettings, ReferenceModel};
use cavspin::dynamics::{adiabatic_prepare, evolve_on_grid, AdiabaticSchedule};
use cavspin::effective::{build_spin_hamiltonian, couplings_to_spin_params, derive_couplings, SpinModelParams};
use cavspin::full_model::{build_eliminated_hamiltonian, build_full_hamiltonian, build_intermediate_hamiltonian};
use cavspin::regime::check_conditions;
use cavspin::{HilbertSpace, QuantumState, SparseOperator, TimeDependentOperator};

use crate::config::{
    from_value, set_path, AdiabaticTask, CompareTask, EvolveTask, GroundStateTask, InitialState, ModelKind, RunConfig,
    SweepTask, Task,
};
use crate::CliError;

pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

pub struct TaskOutput {
    pub json: Value,
    pub table: Table,
    pub summary: Vec<(String, String)>,
    /// Exit code for a run that completed but reports a failed check.
    pub status: u8,
}

pub fn num(x: f64) -> String {
    format!("{x:.16e}")
}

fn to_json<T: Serialize>(x: &T) -> Value {
    serde_json::to_value(x).expect("serializable")
}

fn strings(v: &[&str]) -> Vec<String> {
    v.iter().map(|s| s.to_string()).collect()
}

pub fn run(cfg: &RunConfig, task: &Task) -> Result<TaskOutput, CliError> {
    match task {
        Task::Validate(_) => validate(cfg),
        Task::MapParams(_) => map_params(cfg),
        Task::GroundState(t) => ground_state(cfg, t),
        Task::Evolve(t) => evolve(cfg, t),
        Task::Compare(t) => compare(cfg, t),
        Task::Adiabatic(t) => adiabatic(cfg, t),
        Task::Sweep(t) => sweep(cfg, t),
    }
}

fn validate(cfg: &RunConfig) -> Result<TaskOutput, CliError> {
    let p = cfg.physical()?;
    p.validate()?;
    let graph = cfg.graph()?;
    let r = check_conditions(&p, &cfg.thresholds, graph.n_cavities());
    let rows = r
        .ratios
        .iter()
        .map(|c| {
            vec![
                c.name.clone(),
                num(c.numerator),
                num(c.denominator),
                num(c.ratio),
                num(c.threshold),
                to_json(&c.relation).as_str().unwrap_or_default().to_string(),
                c.ok.to_string(),
            ]
        })
        .collect();
    let summary = vec![
        ("all_ok".into(), r.all_ok().to_string()),
        ("condition1_ok".into(), r.condition1_ok.to_string()),
        ("condition2_ok".into(), r.condition2_ok.to_string()),
        ("condition3_ok".into(), r.condition3_ok.to_string()),
        ("budget_ok".into(), r.budget_ok.to_string()),
    ];
    Ok(TaskOutput {
        json: to_json(&r),
        table: Table {
            header: strings(&["check", "numerator", "denominator", "ratio", "threshold", "relation", "ok"]),
            rows,
        },
        summary,
        status: if r.all_ok() { 0 } else { 1 },
    })
}

fn map_params(cfg: &RunConfig) -> Result<TaskOutput, CliError> {
    let p = cfg.physical()?;
    let graph = cfg.graph()?;
    let c = derive_couplings(&p)?;
    let sp = couplings_to_spin_params(&c, p.atoms_per_cavity, &graph)?;
    let pairs = [
        ("lambda", c.lambda),
        ("omega", c.omega),
        ("a", sp.a),
        ("b", sp.b),
        ("c", sp.c),
        ("d", sp.d),
        ("e", sp.e),
    ];
    Ok(TaskOutput {
        json: json!({ "couplings": c, "spin_params": sp }),
        table: Table {
            header: strings(&["name", "value"]),
            rows: pairs.iter().map(|(k, v)| vec![k.to_string(), num(*v)]).collect(),
        },
        summary: pairs.iter().map(|(k, v)| (k.to_string(), num(*v))).collect(),
        status: 0,
    })
}

#[derive(Serialize)]
struct PairCorrelation {
    i: usize,
    j: usize,
    raw: f64,
    connected: f64,
}

fn ground_state(cfg: &RunConfig, t: &GroundStateTask) -> Result<TaskOutput, CliError> {
    let sp = cfg.spin_params()?;
    let h = build_spin_hamiltonian(&sp)?;
    let mut eigen = t.eigen.clone();
    eigen.seed = cfg.seed;
    let which = if sp.inverted { Which::Highest } else { Which::Lowest };
    let k = t.n_levels.clamp(1, h.dim());
    let slice = extremal_eigenpairs(&h, k, which, &eigen)?;
    let mut energies = slice.eigenvalues.clone();
    if which == Which::Highest {
        energies.reverse();
    }
    let gap = if h.dim() > 1 { Some(target_excitation_gap(&sp, &eigen)?) } else { None };
    let space = sp.space()?;
    let psi = QuantumState::new(space, slice.eigenvectors[slice.extreme_index()].clone())?;
    let magnetization = magnetization_profile(&psi)?;
    let spin_squared = (0..sp.n_sites()).map(|j| total_spin_per_site(&psi, j)).collect::<cavspin::Result<Vec<_>>>()?;
    let pairs: Vec<(usize, usize)> = if t.correlations.is_empty() {
        sp.graph.edges().to_vec()
    } else {
        t.correlations.clone()
    };
    let corr = pairs
        .iter()
        .map(|&(i, j)| {
            let c = correlation(&psi, i, j, t.axis)?;
            Ok(PairCorrelation {
                i,
                j,
                raw: c.raw,
                connected: c.connected,
            })
        })
        .collect::<cavspin::Result<Vec<_>>>()?;

    let mut rows = Vec::new();
    for (n, e) in energies.iter().enumerate() {
        rows.push(vec!["energy".into(), n.to_string(), String::new(), num(*e)]);
    }
    if let Some(g) = &gap {
        rows.push(vec!["gap".into(), String::new(), String::new(), num(g.gap)]);
    }
    for (j, m) in magnetization.iter().enumerate() {
        rows.push(vec!["magnetization".into(), j.to_string(), String::new(), num(*m)]);
    }
    for c in &corr {
        rows.push(vec!["correlation".into(), c.i.to_string(), c.j.to_string(), num(c.raw)]);
    }
    let mut summary = vec![("energy".to_string(), num(energies[0]))];
    if let Some(g) = &gap {
        summary.push(("gap".into(), num(g.gap)));
        summary.push(("degeneracy".into(), g.degeneracy.to_string()));
    }
    Ok(TaskOutput {
        json: json!({
            "which": which,
            "energies": energies,
            "gap": gap,
            "residuals": slice.residuals,
            "magnetization": magnetization,
            "spin_squared": spin_squared,
            "axis": t.axis,
            "correlations": corr,
            "spin_params": sp,
        }),
        table: Table {
            header: strings(&["quantity", "i", "j", "value"]),
            rows,
        },
        summary,
        status: 0,
    })
}

fn spin_state(init: &InitialState, n: usize, two_s: usize, seed: u64) -> Result<QuantumState, CliError> {
    let space = HilbertSpace::uniform(two_s + 1, n)?;
    match init {
        InitialState::Random => Ok(QuantumState::random(space, seed)),
        InitialState::Neel => {
            let digits: Vec<usize> = (0..n).map(|j| if j % 2 == 0 { 0 } else { two_s }).collect();
            Ok(QuantumState::basis(space.clone(), space.compose(&digits))?)
        }
        InitialState::Basis(d) => {
            if d.len() != n || d.iter().any(|&x| x > two_s) {
                return Err(CliError::config(
                    "task.initial.basis",
                    &format!("need {n} level indices in 0..={two_s}"),
                ));
            }
            Ok(QuantumState::basis(space.clone(), space.compose(d))?)
        }
    }
}

struct Series {
    names: Vec<String>,
    values: Vec<Vec<f64>>,
}

fn series_output(times: &[f64], s: Series, extra: Value) -> TaskOutput {
    let mut header = vec!["t".to_string()];
    header.extend(s.names.iter().cloned());
    let rows = times
        .iter()
        .enumerate()
        .map(|(k, t)| {
            let mut r = vec![num(*t)];
            r.extend(s.values.iter().map(|v| num(v[k])));
            r
        })
        .collect();
    let summary = s
        .names
        .iter()
        .zip(&s.values)
        .map(|(n, v)| (format!("final_{n}"), num(*v.last().unwrap_or(&f64::NAN))))
        .collect();
    let series: Vec<Value> = s
        .names
        .iter()
        .zip(&s.values)
        .map(|(n, v)| json!({ "name": n, "values": v }))
        .collect();
    TaskOutput {
        json: json!({ "times": times, "series": series, "info": extra }),
        table: Table { header, rows },
        summary,
        status: 0,
    }
}

fn expectation_series(op: &SparseOperator, states: &[QuantumState]) -> cavspin::Result<Vec<f64>> {
    states
        .iter()
        .map(|s| Ok(op.expectation(s)?.re / s.norm_squared()))
        .collect()
}

fn evolve(cfg: &RunConfig, t: &EvolveTask) -> Result<TaskOutput, CliError> {
    let times = t.times.times(cfg.time_scale())?;
    let graph = cfg.graph()?;
    let n = graph.n_cavities();
    let observables = if t.observables.is_empty() {
        default_observables(n)
    } else {
        t.observables.clone()
    };
    let model = cfg.model.unwrap_or(ModelKind::Effective);
    let mut names: Vec<String> = observables.iter().map(|o| o.label()).collect();
    let mut values = Vec::new();
    let info;
    if model == ModelKind::Effective {
        let sp = cfg.spin_params()?;
        let psi = spin_state(&t.initial, n, sp.two_s, cfg.seed)?;
        let h = TimeDependentOperator::from_static(build_spin_hamiltonian(&sp)?)?;
        let states = evolve_on_grid(&h, &psi, &times, &t.evolution)?;
        for o in &observables {
            values.push(expectation_series(&o.on_spins(&sp)?, &states)?);
        }
        values.push(states.iter().map(|s| s.norm()).collect());
        names.push("norm".into());
        info = json!({ "model": model, "spin_params": sp });
    } else {
        let p = cfg.physical()?;
        let built = match model {
            ModelKind::Full => build_full_hamiltonian(&p, &graph, cfg.n_max)?,
            ModelKind::Eliminated => build_eliminated_hamiltonian(&p, &graph, cfg.n_max)?,
            _ => build_intermediate_hamiltonian(&p, &graph, cfg.n_max)?,
        };
        let spins = spin_state(&t.initial, n, p.atoms_per_cavity, cfg.seed)?;
        let psi = embed_spin_state(&built.layout, &spins)?;
        let states = evolve_on_grid(&built.hamiltonian, &psi, &times, &t.evolution)?;
        for o in &observables {
            values.push(expectation_series(&o.on_layout(&built.layout)?, &states)?);
        }
        let layout = &built.layout;
        let mut photons = SparseOperator::zeros(layout.space().clone());
        let mut excited = SparseOperator::zeros(layout.space().clone());
        for c in 0..n {
            photons = photons.add(&layout.photon_number(c)?)?;
            excited = excited.add(&layout.excited_population(c)?)?;
        }
        values.push(expectation_series(&photons, &states)?);
        values.push(expectation_series(&excited, &states)?);
        values.push(states.iter().map(|s| s.norm()).collect());
        names.extend(["photons".to_string(), "excited".to_string(), "norm".to_string()]);
        info = json!({ "model": model, "dimension": layout.space().total_dim() });
    }
    Ok(series_output(&times, Series { names, values }, info))
}

fn compare(cfg: &RunConfig, t: &CompareTask) -> Result<TaskOutput, CliError> {
    let p = cfg.physical()?;
    let graph = cfg.graph()?;
    let n = graph.n_cavities();
    let reference = match cfg.model.unwrap_or(ModelKind::Full) {
        ModelKind::Full => ReferenceModel::Full,
        ModelKind::Eliminated => ReferenceModel::Eliminated,
        ModelKind::Intermediate => ReferenceModel::Intermediate,
        ModelKind::Effective => {
            return Err(CliError::config("model", "compare needs a cavity model as reference"));
        }
    };
    let times = match &t.times {
        Some(g) => g.times(cfg.time_scale())?,
        None => {
            let sp = couplings_to_spin_params(&derive_couplings(&p)?, p.atoms_per_cavity, &graph)?;
            let rate = sp.d.abs().max(sp.e.abs());
            if rate == 0.0 {
                return Err(CliError::config("task.compare.times", "no exchange coupling; give times explicitly"));
            }
            let period = 2.0 * PI / rate;
            (0..=100).map(|k| period * k as f64 / 100.0).collect()
        }
    };
    let observables = if t.observables.is_empty() {
        default_observables(n)
    } else {
        t.observables.clone()
    };
    let spins = spin_state(&t.initial, n, p.atoms_per_cavity, cfg.seed)?;
    let settings = CompareSettings {
        reference,
        evolution: t.evolution.clone(),
        thresholds: cfg.thresholds.clone(),
    };
    let r = compare_full_vs_effective(&p, &graph, cfg.n_max, &spins, &times, &observables, &settings)?;
    let mut header = vec!["t".to_string()];
    for tr in &r.traces {
        header.push(format!("reference_{}", tr.observable.label()));
        header.push(format!("effective_{}", tr.observable.label()));
    }
    let rows = r
        .times
        .iter()
        .enumerate()
        .map(|(k, time)| {
            let mut row = vec![num(*time)];
            for tr in &r.traces {
                row.push(num(tr.reference[k]));
                row.push(num(tr.effective[k]));
            }
            row
        })
        .collect();
    let mut summary: Vec<(String, String)> = r
        .traces
        .iter()
        .map(|tr| (format!("max_deviation_{}", tr.observable.label()), num(tr.max_deviation)))
        .collect();
    summary.push(("max_photon_population".into(), num(r.max_photon_population)));
    summary.push(("max_excited_population".into(), num(r.max_excited_population)));
    Ok(TaskOutput {
        json: to_json(&r),
        table: Table { header, rows },
        summary,
        status: 0,
    })
}

/// The extreme product state of a staggered field `c_j = h (−1)^j`.
fn staggered_extreme(n: usize, two_s: usize, h: f64, highest: bool) -> Vec<usize> {
    (0..n)
        .map(|j| {
            let field_up = (j % 2 == 0) == (h > 0.0);
            // m = S (digit 0) is favoured by a positive field when seeking the top
            if field_up == highest {
                0
            } else {
                two_s
            }
        })
        .collect()
}

fn adiabatic(cfg: &RunConfig, t: &AdiabaticTask) -> Result<TaskOutput, CliError> {
    let target = cfg.spin_params()?;
    let n = target.n_sites();
    let start = match &t.start {
        Some(s) => {
            let mut sp = cfg.start_params(s)?;
            sp.inverted = target.inverted;
            sp
        }
        None => {
            let h = t.staggered_field / cfg.units.frequency_scale;
            let mut sp = SpinModelParams::new(0.0, 0.0, 0.0, 0.0, 0.0, target.two_s, target.graph.clone());
            sp.local_c = (0..n).map(|j| if j % 2 == 0 { h } else { -h }).collect();
            sp.inverted = target.inverted;
            sp
        }
    };
    let which = if target.inverted { Which::Highest } else { Which::Lowest };
    let psi0 = match (&t.initial, &t.start) {
        (Some(init), _) => spin_state(init, n, target.two_s, cfg.seed)?,
        (None, None) => spin_state(
            &InitialState::Basis(staggered_extreme(n, target.two_s, t.staggered_field, target.inverted)),
            n,
            target.two_s,
            cfg.seed,
        )?,
        (None, Some(_)) => {
            let mut eigen = t.eigen.clone();
            eigen.seed = cfg.seed;
            let slice = extremal_eigenpairs(&build_spin_hamiltonian(&start)?, 1, which, &eigen)?;
            QuantumState::new(start.space()?, slice.eigenvectors[0].clone())?
        }
    };
    if t.durations.is_empty() {
        return Err(CliError::config("task.adiabatic.durations", "need at least one duration"));
    }
    let mut eigen = t.eigen.clone();
    eigen.seed = cfg.seed;
    let scale = cfg.time_scale();
    let outcomes = t
        .durations
        .par_iter()
        .map(|&d| {
            let sched = AdiabaticSchedule::new(d * scale, vec![(0.0, start.clone()), (1.0, target.clone())])?;
            adiabatic_prepare(&sched, &psi0, &t.evolution, &eigen)
        })
        .collect::<cavspin::Result<Vec<_>>>()?;
    let rows: Vec<Vec<String>> = t
        .durations
        .iter()
        .zip(&outcomes)
        .map(|(d, o)| {
            vec![
                num(d * scale),
                num(o.fidelity),
                num(o.target_energy),
                o.target_degeneracy.to_string(),
                o.steps.to_string(),
            ]
        })
        .collect();
    let summary = t
        .durations
        .iter()
        .zip(&outcomes)
        .map(|(d, o)| (format!("fidelity_T{}", d), num(o.fidelity)))
        .collect();
    let results: Vec<Value> = t
        .durations
        .iter()
        .zip(&outcomes)
        .map(|(d, o)| {
            json!({
                "duration": d * scale,
                "fidelity": o.fidelity,
                "target_energy": o.target_energy,
                "target_degeneracy": o.target_degeneracy,
                "initial_residual": o.initial_residual,
                "steps": o.steps,
            })
        })
        .collect();
    Ok(TaskOutput {
        json: json!({ "which": which, "start": start, "target": target, "results": results }),
        table: Table {
            header: strings(&["duration", "fidelity", "target_energy", "target_degeneracy", "steps"]),
            rows,
        },
        summary,
        status: 0,
    })
}

fn sweep(cfg: &RunConfig, t: &SweepTask) -> Result<TaskOutput, CliError> {
    if matches!(*t.task, Task::Sweep(_)) {
        return Err(CliError::config("task.sweep.task", "sweeps cannot be nested"));
    }
    let mut base = serde_json::to_value(cfg).expect("serializable");
    base["task"] = serde_json::to_value(&*t.task).expect("serializable");
    // fail early on a bad path
    set_path(&mut base.clone(), &t.parameter, 0.0)?;
    let results: Vec<Result<TaskOutput, CliError>> = t
        .values
        .par_iter()
        .map(|&x| {
            let mut v = base.clone();
            set_path(&mut v, &t.parameter, x)?;
            let point = from_value(v)?;
            run(&point, &t.task)
        })
        .collect();

    let columns: Vec<String> = results
        .iter()
        .find_map(|r| r.as_ref().ok())
        .map(|o| o.summary.iter().map(|(k, _)| k.clone()).collect())
        .unwrap_or_default();
    let mut header = vec![t.parameter.clone()];
    header.extend(columns.iter().cloned());
    header.push("status".into());
    let mut rows = Vec::new();
    let mut points = Vec::new();
    let mut failures = 0;
    for (x, r) in t.values.iter().zip(&results) {
        let mut row = vec![num(*x)];
        match r {
            Ok(o) => {
                for c in &columns {
                    row.push(o.summary.iter().find(|(k, _)| k == c).map(|(_, v)| v.clone()).unwrap_or_default());
                }
                row.push("ok".into());
                points.push(json!({ "value": x, "result": o.json }));
            }
            Err(e) => {
                failures += 1;
                row.extend(columns.iter().map(|_| String::new()));
                row.push(e.message.clone());
                points.push(json!({ "value": x, "error": e.message }));
            }
        }
        rows.push(row);
    }
    Ok(TaskOutput {
        json: json!({ "parameter": t.parameter, "points": points }),
        table: Table { header, rows },
        summary: vec![("failures".into(), failures.to_string())],
        status: 0,
    })
}
