use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use qadditivity::scenario::{self, presets, ScenarioConfig, ScenarioError};

#[derive(Parser)]
#[command(name = "qadd", version, about = "Reduced dynamics, minimal-dissipation thermodynamics and energy-additivity audits")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Thermo trace, additivity report and figure data for a config.
    Run {
        config: PathBuf,
        /// Overrides `output.dir`.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Singularity scan over `[scan].eps`.
    Scan {
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Built-in scenarios.
    Presets {
        #[command(subcommand)]
        action: PresetAction,
    },
}

#[derive(Subcommand)]
enum PresetAction {
    List,
    Emit { name: String },
}

fn load(path: &PathBuf) -> Result<(String, ScenarioConfig), ScenarioError> {
    let text = std::fs::read_to_string(path).map_err(|source| scenario::ConfigError::Read {
        path: path.clone(),
        source,
    })?;
    let cfg = ScenarioConfig::from_toml_str(&text)?;
    Ok((text, cfg))
}

fn execute(cli: Cli) -> Result<(), ScenarioError> {
    scenario::configure_threads_from_env()?;
    match cli.command {
        Command::Run { config, out } => {
            let (text, cfg) = load(&config)?;
            let outputs = scenario::run(&cfg)?;
            let dir = out.unwrap_or_else(|| scenario::output_dir(&cfg, &config));
            let o = &cfg.output;
            let mut files: Vec<(&str, &[u8])> = vec![
                (o.thermo.as_str(), &outputs.thermo_csv),
                (o.report.as_str(), outputs.report.as_bytes()),
            ];
            if let Some(fig) = &outputs.figure_csv {
                files.push((o.figure.as_str(), fig));
            }
            let manifest = scenario::write_outputs(&dir, "run", &text, &o.manifest, &files, &outputs.warnings)?;
            report(&dir, &manifest);
        }
        Command::Scan { config, out } => {
            let (text, cfg) = load(&config)?;
            let outputs = scenario::scan_singularity(&cfg)?;
            let dir = out.unwrap_or_else(|| scenario::output_dir(&cfg, &config));
            let files: Vec<(&str, &[u8])> = vec![(cfg.output.scan.as_str(), &outputs.csv)];
            let manifest =
                scenario::write_outputs(&dir, "scan", &text, &cfg.output.manifest, &files, &outputs.warnings)?;
            report(&dir, &manifest);
        }
        Command::Presets { action: PresetAction::List } => {
            for (name, summary, _) in presets::PRESETS {
                println!("{name:<18} {summary}");
            }
        }
        Command::Presets {
            action: PresetAction::Emit { name },
        } => print!("{}", presets::text(&name)?),
    }
    Ok(())
}

fn report(dir: &std::path::Path, manifest: &scenario::RunManifest) {
    for o in &manifest.outputs {
        println!("{}", dir.join(&o.file).display());
    }
    for w in &manifest.warnings {
        eprintln!("warning: {w}");
    }
}

fn main() -> ExitCode {
    match execute(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
