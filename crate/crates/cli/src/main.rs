use std::path::PathBuf;
use std::process::ExitCode;

use afbm_cli::{presets, run, ExperimentKind, ExperimentSpec, RunError};
use clap::{Args, Parser, Subcommand};

#[derive(Parser)]
#[command(name = "afbm", version, about = "AFBM link-level experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Waveform SIR over a grid of configurations.
    SirWaveform(RunArgs),
    /// Channel-conditioned SIR statistics per configuration and domain.
    SirChannel(RunArgs),
    /// BER against SNR per configuration and domain.
    Ber(RunArgs),
    /// Report every violated constraint of a spec (all presets if none given).
    Validate(SpecArgs),
    /// Print the canonical TOML of a spec.
    Show(SpecArgs),
}

#[derive(Args, Clone)]
struct SpecArgs {
    /// Experiment spec file (TOML).
    #[arg(long, conflicts_with = "preset")]
    config: Option<PathBuf>,
    /// Shipped spec: fig2, table1 or fig5.
    #[arg(long)]
    preset: Option<String>,
    /// Master seed, replacing the spec's.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    spec: SpecArgs,
    /// Output directory, replacing the spec's.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads (default: all cores).
    #[arg(long)]
    workers: Option<usize>,
    /// Run even when the DAFT-domain orthogonality condition fails.
    #[arg(long)]
    override_orthogonality_check: bool,
}

fn load(args: &SpecArgs, default_preset: &str) -> Result<ExperimentSpec, String> {
    let mut spec = match (&args.config, &args.preset) {
        (Some(path), _) => ExperimentSpec::load(path)?,
        (None, name) => {
            let name = name.as_deref().unwrap_or(default_preset);
            presets::preset(name).ok_or_else(|| format!("unknown preset '{name}' (available: {})", presets::NAMES.join(", ")))?
        }
    };
    if let Some(seed) = args.seed {
        spec.seed = seed;
    }
    Ok(spec)
}

fn execute(kind: ExperimentKind, args: RunArgs) -> ExitCode {
    let default = match kind {
        ExperimentKind::SirWaveform => "fig2",
        ExperimentKind::SirChannel => "table1",
        ExperimentKind::Ber => "fig5",
    };
    let mut spec = match load(&args.spec, default) {
        Ok(s) => s,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    if spec.kind != kind {
        eprintln!("error: spec describes a {} experiment, not {kind}", spec.kind);
        return ExitCode::from(2);
    }
    if let Some(out) = &args.out {
        spec.output.dir = out.display().to_string();
    }
    if let Some(n) = args.workers {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: cannot size worker pool: {e}");
            return ExitCode::from(2);
        }
    }
    let report = match run(&spec, args.override_orthogonality_check) {
        Ok(r) => r,
        Err(e @ RunError::Invalid(_)) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::FAILURE;
        }
    };
    match report.write(PathBuf::from(&spec.output.dir).as_path()) {
        Ok(paths) => {
            print!("{}", report.summary_text());
            for p in paths {
                println!("wrote {}", p.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: writing results to {}: {e}", spec.output.dir);
            ExitCode::FAILURE
        }
    }
}

fn validate(args: SpecArgs) -> ExitCode {
    let specs: Vec<(String, Result<ExperimentSpec, String>)> = if args.config.is_none() && args.preset.is_none() {
        presets::NAMES.iter().map(|n| (n.to_string(), load(&SpecArgs { preset: Some(n.to_string()), ..args.clone() }, n))).collect()
    } else {
        let name = args.config.as_ref().map_or_else(|| args.preset.clone().unwrap_or_default(), |p| p.display().to_string());
        vec![(name, load(&args, ""))]
    };
    let mut clean = true;
    for (name, spec) in specs {
        match spec {
            Err(e) => {
                clean = false;
                println!("{name}: {e}");
            }
            Ok(s) => {
                let diags = s.validate();
                if diags.is_empty() {
                    println!("{name}: ok ({} spec {})", s.kind, s.short_hash());
                }
                for d in diags {
                    clean = false;
                    println!("{name}: {d}");
                }
            }
        }
    }
    if clean {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(2)
    }
}

fn main() -> ExitCode {
    match Cli::parse().command {
        Command::SirWaveform(a) => execute(ExperimentKind::SirWaveform, a),
        Command::SirChannel(a) => execute(ExperimentKind::SirChannel, a),
        Command::Ber(a) => execute(ExperimentKind::Ber, a),
        Command::Validate(a) => validate(a),
        Command::Show(a) => match load(&a, "table1") {
            Ok(s) => {
                print!("{}", s.to_toml());
                ExitCode::SUCCESS
            }
            Err(e) => {
                eprintln!("error: {e}");
                ExitCode::from(2)
            }
        },
    }
}
