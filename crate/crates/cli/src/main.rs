use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};

use hygrofrac::config::{preset, preset_names, ScenarioConfig, PRESETS};
use hygrofrac::driver::{Event, Simulation};
use hygrofrac::output::{run_to_directory, write_summary};
use hygrofrac::verify::{run_oracle, ORACLES};

/// Moisture-driven phase-field fracture of fibre composites.
#[derive(Parser)]
#[command(name = "hygrofrac", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a built-in preset or a TOML scenario file.
    Run(RunArgs),
    /// Check a scenario file and report every problem with its line.
    Validate { config: PathBuf },
    /// Run a verification oracle (`all` runs every one).
    Oracle { name: String },
    /// List the built-in presets.
    ListPresets,
    /// Print a preset as TOML, a starting point for custom scenarios.
    Show { preset: String },
}

#[derive(clap::Args)]
struct RunArgs {
    /// Preset name or path to a TOML file.
    scenario: String,
    /// Output directory for VTK snapshots, the CSV series and the summary.
    #[arg(long, env = "HYGROFRAC_OUT")]
    out: Option<PathBuf>,
    /// Element size multiplier (geometry and materials are unchanged).
    #[arg(long)]
    mesh_scale: Option<f64>,
    /// Time step multiplier.
    #[arg(long)]
    dt_scale: Option<f64>,
    /// Seed for random fibre placement.
    #[arg(long)]
    seed: Option<u64>,
    /// Repeat displacement and damage solves within a step until the
    /// damage change is below the pass tolerance.
    #[arg(long)]
    multi_pass: bool,
    #[arg(long)]
    quiet: bool,
}

fn main() -> ExitCode {
    match dispatch(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn dispatch(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::Run(args) => run(args).map(|_| ExitCode::SUCCESS),
        Command::Validate { config } => {
            load_file(&config)?;
            println!("{}: ok", config.display());
            Ok(ExitCode::SUCCESS)
        }
        Command::Oracle { name } => oracle(&name),
        Command::ListPresets => {
            for (name, text) in PRESETS {
                let about = text
                    .lines()
                    .take_while(|l| l.starts_with('#'))
                    .map(|l| l.trim_start_matches('#').trim())
                    .collect::<Vec<_>>()
                    .join(" ");
                println!("{name:<24} {about}");
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Show { preset: name } => {
            print!("{}", preset(&name)?.to_toml()?);
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn load_file(path: &Path) -> Result<ScenarioConfig> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    ScenarioConfig::from_toml(&text).with_context(|| format!("in {}", path.display()))
}

fn load(scenario: &str) -> Result<ScenarioConfig> {
    if preset_names().any(|p| p == scenario) {
        return Ok(preset(scenario)?);
    }
    let path = Path::new(scenario);
    if !path.exists() {
        bail!(
            "`{scenario}` is neither a preset ({}) nor an existing file",
            preset_names().collect::<Vec<_>>().join(", ")
        );
    }
    load_file(path)
}

fn run(args: RunArgs) -> Result<()> {
    let mut config = load(&args.scenario)?;
    if let Some(s) = args.mesh_scale {
        config.numerics.mesh_scale = s;
    }
    if let Some(s) = args.dt_scale {
        config.numerics.dt_scale = s;
    }
    if let Some(s) = args.seed {
        config.seed = s;
    }
    config.numerics.multi_pass |= args.multi_pass;
    let out = args.out.or_else(|| config.output.directory.clone().map(PathBuf::from));
    config.validate()?;

    let mut sim = Simulation::new(config)?;
    if !args.quiet {
        eprintln!(
            "{}: {} nodes, {} elements, h = {:.3e} mm",
            sim.config.name,
            sim.space.num_nodes(),
            sim.space.num_elements(),
            sim.space.mesh.h()
        );
    }
    let summary = match out {
        Some(dir) => {
            let (result, files) = run_to_directory(&mut sim, &dir)?;
            if !args.quiet {
                eprintln!("wrote {} snapshots and series.csv to {}", files.len(), dir.display());
            }
            result.summary
        }
        None => {
            let quiet = args.quiet;
            sim.run_with(|_, rec, event| {
                if !quiet && matches!(event, Event::StageEnd { .. }) {
                    eprintln!(
                        "end of {}: t = {:.4e} s, F = {:.5e} N, max damage {:.4}",
                        rec.stage, rec.time, rec.reaction, rec.max_damage
                    );
                }
                Ok(())
            })?
            .summary
        }
    };
    write_summary(std::io::stdout().lock(), &summary)?;
    Ok(())
}

fn oracle(name: &str) -> Result<ExitCode> {
    let names: Vec<&str> = if name == "all" { ORACLES.to_vec() } else { vec![name] };
    let mut ok = true;
    for n in names {
        let report = run_oracle(n)?;
        ok &= report.passed();
        println!("{report}");
    }
    Ok(if ok { ExitCode::SUCCESS } else { ExitCode::FAILURE })
}
