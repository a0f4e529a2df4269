use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde_json::json;

use tchub::jastrow::{optimize_j, residual_curve};
use tchub::qite::{Problem, RunStatus};
use tchub::runner::{self, ExperimentConfig};
use tchub::state::index_to_bitstring;
use tchub::Error;

#[derive(Parser)]
#[command(name = "tchub", version, about = "Transcorrelated Hubbard models with variational imaginary time evolution")]
struct Cli {
    /// JSON run configuration; missing fields take their defaults
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// overrides the configured seed
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// output directory (default: `out`)
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// exact ground energy and dominant configurations
    Ed,
    /// projection root for J plus the residual curve
    OptimizeJ,
    /// Fermi-sea weight of the TC right eigenvector over a J grid
    SweepJ,
    /// one imaginary time evolution run
    Qite,
    /// VQE baseline (Hermitian Hamiltonians only)
    Vqe,
    /// reproduce a figure data set
    Recipe {
        /// fig3a, fig3b, fig3c, fig4, fig1b or fig5-qasm; defaults to the config's recipe
        id: Option<String>,
    },
}

const EXIT_VALIDATION: u8 = 2;
const EXIT_DIVERGED: u8 = 3;

fn load(cli: &Cli) -> tchub::Result<ExperimentConfig> {
    let mut cfg = match &cli.config {
        Some(p) => runner::load_config(p)?,
        None => runner::validate_str("").map_err(|e| Error::Validation(e.join("\n")))?,
    };
    if let Some(s) = cli.seed {
        cfg.qite.seed = s;
    }
    if let Some(o) = &cli.out {
        cfg.out = Some(o.clone());
    }
    Ok(cfg)
}

fn print_json(v: &serde_json::Value) -> tchub::Result<()> {
    println!("{}", serde_json::to_string_pretty(v)?);
    Ok(())
}

fn write_json(out: &Path, name: &str, v: &serde_json::Value) -> tchub::Result<()> {
    runner::write_atomic(&out.join(name), serde_json::to_string_pretty(v)?.as_bytes())
}

fn run(cli: &Cli) -> tchub::Result<u8> {
    let cfg = load(cli)?;
    let out = cfg.out.clone().unwrap_or_else(|| PathBuf::from("out"));
    let q = &cfg.qite;
    let label = cfg.label.clone().unwrap_or_else(|| format!("n{}_{}", q.nx * q.ny, q.variant()));
    match &cli.command {
        Command::Ed => {
            let p = Problem::new(q)?;
            let n = p.exact_state.n_qubits();
            let mut weights: Vec<(usize, f64)> = p
                .exact_state
                .amplitudes()
                .iter()
                .enumerate()
                .map(|(i, a)| (i, a.norm_sqr()))
                .filter(|(_, w)| *w > 1e-12)
                .collect();
            weights.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
            let dominant: Vec<_> = weights
                .iter()
                .take(8)
                .map(|(i, w)| json!({ "bitstring": index_to_bitstring(*i, n), "weight": w }))
                .collect();
            let v = json!({
                "n_sites": p.lattice.n_sites(),
                "variant": q.variant(),
                "j": p.j,
                "energy": p.exact_energy,
                "dominant": dominant,
            });
            write_json(&out, &format!("{label}_ed.json"), &v)?;
            print_json(&v)?;
        }
        Command::OptimizeJ => {
            let lat = q.lattice()?;
            let root = optimize_j(&lat, q.t, q.u, (-3.0, 0.0), 1e-6)?;
            let curve = residual_curve(&lat, q.t, q.u, -3.0, 0.0, 61)?;
            let mut w = csv::Writer::from_writer(Vec::new());
            w.write_record(["J", "residual"])?;
            for (j, r) in curve {
                w.write_record([j.to_string(), r.to_string()])?;
            }
            let body = String::from_utf8(w.into_inner().map_err(|e| Error::Io(e.into_error()))?)
                .expect("csv is utf-8");
            let text = format!(
                "# j_proj: {}\n# residual: {}\n# bisection steps: {}\n{body}",
                root.j, root.residual, root.iterations
            );
            runner::write_atomic(&out.join(format!("{label}_residual.csv")), text.as_bytes())?;
            print!("{text}");
        }
        Command::SweepJ => {
            let lat = q.lattice()?;
            let v = runner::run_compactness(&lat, q.t, q.u, &out, &format!("{label}_compactness"))?;
            print_json(&v)?;
        }
        Command::Qite => {
            let s = runner::run_and_write(q, &label, &out)?;
            let v = serde_json::to_value(&s)?;
            write_json(&out, &format!("{label}.json"), &v)?;
            print_json(&v)?;
            if s.status == RunStatus::Diverged {
                eprintln!("run diverged: {}", s.diagnostic.unwrap_or_default());
                return Ok(EXIT_DIVERGED);
            }
        }
        Command::Vqe => {
            runner::check_command(q, "vqe")?;
            let s = runner::run_vqe_summary(q, &label)?;
            let v = serde_json::to_value(&s)?;
            write_json(&out, &format!("{label}_vqe.json"), &v)?;
            print_json(&v)?;
        }
        Command::Recipe { id } => {
            let Some(id) = id.clone().or_else(|| cfg.recipe.clone()) else {
                return Err(Error::Validation(format!(
                    "recipe: no recipe id given (known: {})",
                    runner::RECIPES.join(", ")
                )));
            };
            if !runner::RECIPES.contains(&id.as_str()) {
                return Err(Error::Validation(format!(
                    "recipe: unknown recipe '{id}' (known: {})",
                    runner::RECIPES.join(", ")
                )));
            }
            let v = runner::run_recipe(&id, q, &out)?;
            let diverged = v["runs"]
                .as_array()
                .is_some_and(|runs| runs.iter().any(|r| r["status"] == "diverged"));
            print_json(&v)?;
            if diverged {
                return Ok(EXIT_DIVERGED);
            }
        }
    }
    Ok(0)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(code) => ExitCode::from(code),
        Err(Error::Validation(msg)) => {
            eprintln!("invalid configuration:");
            for line in msg.lines() {
                eprintln!("  {line}");
            }
            ExitCode::from(EXIT_VALIDATION)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
