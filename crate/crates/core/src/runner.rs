//! Experiment driver: config validation, recipes reproducing the figure data
//! sets, trajectory CSVs with a metadata header and JSON summaries.

use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Map, Value};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::jastrow::optimize_j;
use crate::lattice::{Lattice, Representation};
use crate::oracle::{hf_weight_sweep, CompactnessPoint};
use crate::qite::{run_qite, run_vqe, AnsatzKind, Mode, Problem, QiteConfig, QiteTrajectory, RunStatus};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

pub const RECIPES: [&str; 6] = ["fig3a", "fig3b", "fig3c", "fig4", "fig1b", "fig5-qasm"];

/// Trajectory CSV columns.
pub const CSV_COLUMNS: [&str; 7] = ["step", "tau", "energy", "abs_err", "infidelity", "grad_norm", "lambda_opt"];

/// Readout flip probability used by the shot-mode recipe when none is configured.
pub const DEFAULT_RECIPE_READOUT_ERROR: f64 = 0.02;

/// A run configuration plus driver settings.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentConfig {
    pub qite: QiteConfig,
    pub out: Option<PathBuf>,
    pub label: Option<String>,
    pub recipe: Option<String>,
}

const DRIVER_KEYS: [&str; 3] = ["out", "label", "recipe"];

fn qite_keys() -> Vec<String> {
    match serde_json::to_value(QiteConfig::default()) {
        Ok(Value::Object(m)) => m.keys().cloned().collect(),
        _ => Vec::new(),
    }
}

/// Schema check with defaults filled in. Every problem is reported as
/// `path: reason`.
pub fn validate_value(v: &Value) -> std::result::Result<ExperimentConfig, Vec<String>> {
    let obj = match v {
        Value::Object(m) => m.clone(),
        Value::Null => Map::new(),
        _ => return Err(vec!["$: configuration must be a JSON object".into()]),
    };
    let known = qite_keys();
    let mut errors = Vec::new();
    let mut qite_obj = Map::new();
    for (k, val) in &obj {
        if DRIVER_KEYS.contains(&k.as_str()) {
            continue;
        }
        if !known.contains(k) {
            errors.push(format!("{k}: unknown field"));
            continue;
        }
        let single: Map<String, Value> = [(k.clone(), val.clone())].into_iter().collect();
        match serde_json::from_value::<QiteConfig>(Value::Object(single)) {
            Ok(_) => {
                qite_obj.insert(k.clone(), val.clone());
            }
            Err(e) => errors.push(format!("{k}: {e}")),
        }
    }
    let text_field = |key: &str, errors: &mut Vec<String>| -> Option<String> {
        match obj.get(key) {
            None | Some(Value::Null) => None,
            Some(Value::String(s)) => Some(s.clone()),
            Some(_) => {
                errors.push(format!("{key}: expected a string"));
                None
            }
        }
    };
    let out = text_field("out", &mut errors).map(PathBuf::from);
    let label = text_field("label", &mut errors);
    let recipe = text_field("recipe", &mut errors);
    if let Some(r) = &recipe {
        if !RECIPES.contains(&r.as_str()) {
            errors.push(format!("recipe: unknown recipe '{r}' (known: {})", RECIPES.join(", ")));
        }
    }
    let qite: QiteConfig = match serde_json::from_value(Value::Object(qite_obj)) {
        Ok(q) => q,
        Err(e) => {
            errors.push(format!("$: {e}"));
            QiteConfig::default()
        }
    };
    errors.extend(qite.problems());
    if errors.is_empty() {
        Ok(ExperimentConfig { qite, out, label, recipe })
    } else {
        Err(errors)
    }
}

/// Parse and validate config text; empty text means all defaults.
pub fn validate_str(text: &str) -> std::result::Result<ExperimentConfig, Vec<String>> {
    if text.trim().is_empty() {
        return validate_value(&Value::Null);
    }
    match serde_json::from_str::<Value>(text) {
        Ok(v) => validate_value(&v),
        Err(e) => Err(vec![format!("$: invalid JSON: {e}")]),
    }
}

pub fn load_config(path: &Path) -> Result<ExperimentConfig> {
    let text = fs::read_to_string(path)?;
    validate_str(&text).map_err(|e| Error::Validation(e.join("\n")))
}

/// Extra checks tied to a particular command.
pub fn check_command(cfg: &QiteConfig, command: &str) -> Result<()> {
    if command == "vqe" && cfg.tc {
        return Err(Error::Validation(
            "tc: VQE relies on the variational principle, which only holds for Hermitian Hamiltonians; \
             set \"tc\": false or use the qite command"
                .into(),
        ));
    }
    Ok(())
}

/// SHA-256 of the canonical JSON form of a config.
pub fn config_hash(cfg: &QiteConfig) -> String {
    let text = serde_json::to_string(cfg).expect("config serialises");
    hex::encode(Sha256::digest(text.as_bytes()))
}

/// Write through a temporary file in the same directory and rename.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path.parent().filter(|d| !d.as_os_str().is_empty()).unwrap_or(Path::new("."));
    fs::create_dir_all(dir)?;
    let name = path.file_name().and_then(|n| n.to_str()).unwrap_or("out");
    let tmp = dir.join(format!(".{name}.tmp"));
    {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
    }
    fs::rename(&tmp, path)?;
    Ok(())
}

fn metadata_header(problem: &Problem, label: &str, status: Option<RunStatus>) -> String {
    let cfg = &problem.config;
    let mut lines = vec![
        format!("tchub {VERSION}"),
        format!("label: {label}"),
        format!("variant: {}", cfg.variant()),
        format!("config_sha256: {}", config_hash(cfg)),
        format!("config: {}", serde_json::to_string(cfg).expect("config serialises")),
        format!("seed: {}", cfg.seed),
        format!("j: {}", problem.j),
        format!("exact_energy: {}", problem.exact_energy),
        format!("parameters: {}", problem.circuit.n_params()),
        format!("generator_ordering: {}", problem.circuit.description()),
    ];
    if let Some(s) = status {
        lines.push(format!("status: {}", serde_json::to_value(s).expect("status serialises").as_str().unwrap_or("")));
    }
    lines.iter().map(|l| format!("# {l}\n")).collect()
}

fn opt(x: Option<f64>) -> String {
    x.map(|v| v.to_string()).unwrap_or_default()
}

/// Trajectory as CSV text with a `#`-prefixed metadata header.
pub fn trajectory_csv(problem: &Problem, traj: &QiteTrajectory, label: &str) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(CSV_COLUMNS)?;
    for r in &traj.records {
        w.write_record([
            r.step.to_string(),
            r.tau.to_string(),
            r.energy.to_string(),
            r.abs_err.to_string(),
            opt(r.infidelity),
            r.grad_norm.to_string(),
            opt(r.lambda_opt),
        ])?;
    }
    let body = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
    let mut out = metadata_header(problem, label, Some(traj.status));
    out.push_str(&String::from_utf8(body).expect("csv is utf-8"));
    Ok(out)
}

/// Final values of one run.
#[derive(Debug, Clone, Serialize)]
pub struct RunSummary {
    pub label: String,
    pub variant: String,
    pub n_sites: usize,
    pub layers: usize,
    pub ansatz: AnsatzKind,
    pub j: f64,
    pub n_params: usize,
    pub exact_energy: f64,
    pub final_energy: f64,
    pub abs_err: f64,
    /// `1 − |⟨Φ|Φ_exact⟩|²`
    pub infidelity: Option<f64>,
    /// `1 − |⟨Φ|Φ_exact⟩|`
    pub infidelity_abs: Option<f64>,
    pub steps: usize,
    pub status: RunStatus,
    pub diagnostic: Option<String>,
    pub csv: Option<String>,
}

pub fn summarize(problem: &Problem, traj: &QiteTrajectory, label: &str, csv: Option<String>) -> RunSummary {
    let last = traj.last();
    RunSummary {
        label: label.to_string(),
        variant: problem.config.variant(),
        n_sites: problem.lattice.n_sites(),
        layers: problem.config.layers,
        ansatz: problem.config.ansatz,
        j: problem.j,
        n_params: problem.circuit.n_params(),
        exact_energy: problem.exact_energy,
        final_energy: last.energy,
        abs_err: last.abs_err,
        infidelity: last.infidelity,
        infidelity_abs: last.infidelity_abs,
        steps: last.step,
        status: traj.status,
        diagnostic: traj.diagnostic.clone(),
        csv,
    }
}

/// Run one QITE configuration and write `<label>.csv` into `out`.
pub fn run_and_write(cfg: &QiteConfig, label: &str, out: &Path) -> Result<RunSummary> {
    let problem = Problem::new(cfg)?;
    let traj = run_qite(&problem)?;
    let name = format!("{label}.csv");
    write_atomic(&out.join(&name), trajectory_csv(&problem, &traj, label)?.as_bytes())?;
    Ok(summarize(&problem, &traj, label, Some(name)))
}

/// Converged VQE values of one run.
#[derive(Debug, Clone, Serialize)]
pub struct VqeSummary {
    pub label: String,
    pub variant: String,
    pub n_sites: usize,
    pub layers: usize,
    pub exact_energy: f64,
    pub energy: f64,
    pub abs_err: f64,
    pub infidelity: f64,
    pub iterations: u64,
    pub grad_norm: f64,
}

pub fn run_vqe_summary(cfg: &QiteConfig, label: &str) -> Result<VqeSummary> {
    check_command(cfg, "vqe")?;
    let problem = Problem::new(cfg)?;
    let r = run_vqe(&problem)?;
    Ok(VqeSummary {
        label: label.to_string(),
        variant: cfg.variant(),
        n_sites: problem.lattice.n_sites(),
        layers: cfg.layers,
        exact_energy: problem.exact_energy,
        energy: r.energy,
        abs_err: r.abs_err,
        infidelity: r.infidelity,
        iterations: r.iterations,
        grad_norm: r.grad_norm,
    })
}

/// The four Hamiltonian variants `r`, `r-tc`, `m`, `m-tc` of a base config.
pub fn variants(base: &QiteConfig) -> Vec<QiteConfig> {
    [
        (Representation::Real, false),
        (Representation::Real, true),
        (Representation::Momentum, false),
        (Representation::Momentum, true),
    ]
    .into_iter()
    .map(|(representation, tc)| QiteConfig {
        representation,
        tc,
        j: if tc { base.j } else { None },
        ..base.clone()
    })
    .collect()
}

fn ring(base: &QiteConfig, n: usize, layers: usize) -> QiteConfig {
    QiteConfig {
        nx: n,
        ny: 1,
        layers,
        ansatz: AnsatzKind::Quccsd,
        mode: Mode::Sv,
        initial_bitstring: None,
        ..base.clone()
    }
}

fn run_set(configs: Vec<(QiteConfig, String)>, out: &Path) -> Result<Vec<RunSummary>> {
    configs
        .into_par_iter()
        .map(|(cfg, label)| run_and_write(&cfg, &label, out))
        .collect()
}

/// Compactness sweep grid: `J` from −1.2 to 0 in steps of 0.05.
pub fn compactness_grid() -> Vec<f64> {
    (0..=24).map(|k| -1.2 + 0.05 * k as f64).map(|j| (j * 100.0).round() / 100.0).collect()
}

/// Compactness curve as CSV.
pub fn compactness_csv(points: &[CompactnessPoint], header: &[String]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["j", "hf_weight"])?;
    for p in points {
        w.write_record([p.j.to_string(), p.hf_weight.to_string()])?;
    }
    let body = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
    let mut out: String = header.iter().map(|l| format!("# {l}\n")).collect();
    out.push_str(&String::from_utf8(body).expect("csv is utf-8"));
    Ok(out)
}

/// Sweep, CSV and summary for the compactness figure of a lattice.
pub fn run_compactness(lat: &Lattice, t: f64, u: f64, out: &Path, name: &str) -> Result<Value> {
    let grid = compactness_grid();
    let points = hf_weight_sweep(lat, t, u, &grid)?;
    let proj = optimize_j(lat, t, u, (-3.0, -1e-6), 1e-10)?;
    let best = points
        .iter()
        .copied()
        .fold(points[0], |a, p| if p.hf_weight > a.hf_weight { p } else { a });
    let at_zero = points.iter().find(|p| p.j == 0.0).map(|p| p.hf_weight);
    let header = vec![
        format!("tchub {VERSION}"),
        format!("label: {name}"),
        format!("lattice: {}x{}, t = {t}, U = {u}", lat.nx, lat.ny),
        "grid: J from -1.2 to 0 in steps of 0.05".to_string(),
    ];
    let file = format!("{name}.csv");
    write_atomic(&out.join(&file), compactness_csv(&points, &header)?.as_bytes())?;
    Ok(json!({
        "csv": file,
        "n_sites": lat.n_sites(),
        "j_proj": proj.j,
        "argmax_j": best.j,
        "max_hf_weight": best.hf_weight,
        "hf_weight_at_j0": at_zero,
    }))
}

/// Run a figure recipe into `out`, writing per-run CSVs and `summary.json`.
/// Fields not fixed by the recipe (steps, thresholds, seed, ...) come from `base`.
pub fn run_recipe(id: &str, base: &QiteConfig, out: &Path) -> Result<Value> {
    fs::create_dir_all(out)?;
    let summary = match id {
        "fig3a" | "fig3b" | "fig3c" => {
            let n = match id {
                "fig3a" => 2,
                "fig3b" => 4,
                _ => 6,
            };
            let set = variants(&ring(base, n, 1))
                .into_iter()
                .map(|c| {
                    let label = format!("{id}_n{n}_{}", c.variant());
                    (c, label)
                })
                .collect();
            json!({ "recipe": id, "runs": run_set(set, out)? })
        }
        "fig4" => {
            let mut set = Vec::new();
            let mut vqe = Vec::new();
            for n in [2, 4, 6] {
                for layers in [1, 2] {
                    for c in variants(&ring(base, n, layers)) {
                        let label = format!("fig4_n{n}_l{layers}_{}", c.variant());
                        if !c.tc {
                            vqe.push((c.clone(), format!("{label}_vqe")));
                        }
                        set.push((c, label));
                    }
                }
            }
            let runs = run_set(set, out)?;
            let vqe: Vec<VqeSummary> = vqe
                .into_par_iter()
                .map(|(c, l)| run_vqe_summary(&c, &l))
                .collect::<Result<_>>()?;
            json!({ "recipe": id, "runs": runs, "vqe": vqe })
        }
        "fig1b" => {
            let lat = Lattice::ring(6)?;
            json!({ "recipe": id, "compactness": run_compactness(&lat, base.t, base.u, out, "fig1b_n6")? })
        }
        "fig5-qasm" => {
            let shot = QiteConfig {
                nx: 2,
                ny: 1,
                layers: 1,
                ansatz: AnsatzKind::Ry,
                initial_bitstring: Some("0101".into()),
                mode: Mode::Shots,
                readout_error: if base.readout_error > 0.0 { base.readout_error } else { DEFAULT_RECIPE_READOUT_ERROR },
                mitigate_readout: true,
                ..base.clone()
            };
            let set = variants(&shot)
                .into_iter()
                .filter(|c| c.representation == Representation::Real)
                .map(|c| {
                    let label = format!("fig5_qasm_{}", c.variant());
                    (c, label)
                })
                .collect();
            json!({ "recipe": id, "runs": run_set(set, out)? })
        }
        other => {
            return Err(Error::Validation(format!(
                "recipe: unknown recipe '{other}' (known: {})",
                RECIPES.join(", ")
            )))
        }
    };
    let text = serde_json::to_string_pretty(&summary)?;
    write_atomic(&out.join("summary.json"), text.as_bytes())?;
    Ok(summary)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_file_gives_defaults() {
        let c = validate_str("").unwrap();
        assert_eq!(c.qite, QiteConfig::default());
        assert_eq!(c.qite.variant(), "m-tc");
        assert_eq!(c.qite.dt, 0.1);
        assert_eq!((c.qite.lambda_min, c.qite.lambda_max), (1e-3, 1.0));
        assert_eq!(c.qite.corner_termination, 1e-8);
        assert_eq!(c.qite.fd_step, 1e-9);
    }

    #[test]
    fn negative_dt() {
        let errs = validate_str(r#"{"dt": -1}"#).unwrap_err();
        assert!(errs.iter().any(|e| e.contains("Δt must be positive")), "{errs:?}");
    }

    #[test]
    fn all_problems_reported_with_paths() {
        let errs = validate_str(r#"{"dt": "fast", "layers": 0, "bogus": 1, "recipe": "fig9"}"#).unwrap_err();
        assert!(errs.iter().any(|e| e.starts_with("dt:")));
        assert!(errs.iter().any(|e| e.starts_with("layers:")));
        assert!(errs.iter().any(|e| e.starts_with("bogus: unknown field")));
        assert!(errs.iter().any(|e| e.starts_with("recipe:")));
    }

    #[test]
    fn vqe_with_tc_is_rejected() {
        let c = validate_str(r#"{"tc": true}"#).unwrap();
        let e = check_command(&c.qite, "vqe").unwrap_err().to_string();
        assert!(e.contains("Hermitian"));
    }

    #[test]
    fn hash_is_stable_and_sensitive() {
        let a = QiteConfig::default();
        let b = QiteConfig { seed: 1, ..a.clone() };
        assert_eq!(config_hash(&a), config_hash(&a.clone()));
        assert_ne!(config_hash(&a), config_hash(&b));
    }

    #[test]
    fn grid_has_zero() {
        let g = compactness_grid();
        assert_eq!(g.len(), 25);
        assert_eq!(g[0], -1.2);
        assert_eq!(*g.last().unwrap(), 0.0);
    }
}
