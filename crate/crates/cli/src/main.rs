use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use focklab_cli::{parse_config, run, to_json, CliError, Command, Format};

/// Weighted Fock space operator experiments.
#[derive(Debug, Parser)]
#[command(name = "focklab", version)]
struct Cli {
    #[arg(value_enum)]
    command: Command,
    /// TOML config with one or more instances.
    #[arg(long)]
    config: PathBuf,
    /// Output file; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "json")]
    format: Format,
    /// Overrides every instance seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Overrides the norm-grid step of every instance.
    #[arg(long)]
    grid_step: Option<f64>,
    /// Overrides the norm-grid radius of every instance.
    #[arg(long)]
    grid_radius: Option<f64>,
    /// No progress lines on stderr.
    #[arg(long)]
    quiet: bool,
}

fn configure_threads() -> Result<(), String> {
    let Ok(v) = std::env::var("FOCKLAB_THREADS") else {
        return Ok(());
    };
    let n: usize = v
        .trim()
        .parse()
        .ok()
        .filter(|n| *n > 0)
        .ok_or_else(|| format!("FOCKLAB_THREADS must be a positive integer, got `{v}`"))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| e.to_string())
}

fn execute(cli: &Cli) -> Result<i32, CliError> {
    let text = std::fs::read_to_string(&cli.config).map_err(|source| CliError::Read {
        path: cli.config.display().to_string(),
        source,
    })?;
    let mut config = parse_config(&text)?;
    let mut bad = Vec::new();
    for (name, v) in [
        ("--grid-step", cli.grid_step),
        ("--grid-radius", cli.grid_radius),
    ] {
        if v.is_some_and(|x| !(x > 0.0 && x.is_finite())) {
            bad.push(format!("{name} must be positive"));
        }
    }
    if !bad.is_empty() {
        return Err(focklab_cli::ConfigErrors(bad).into());
    }
    for inst in &mut config.sweep.instances {
        if let Some(s) = cli.seed {
            inst.seed = s;
        }
        if let Some(h) = cli.grid_step {
            inst.grid.step = h;
        }
        if let Some(r) = cli.grid_radius {
            inst.grid.radius = r;
        }
    }
    let quiet = cli.quiet;
    let mut progress = |line: &str| {
        if !quiet {
            eprintln!("{line}");
        }
    };
    let output = run(cli.command, &config, cli.format, &mut progress)?;
    focklab_cli::report::write_output(&output.text, cli.out.as_deref())?;
    if !output.failures.is_empty() {
        eprint!("{}", to_json(&output.failures));
    }
    Ok(output.exit_code())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Err(e) = configure_threads() {
        eprintln!("{}", to_json(&serde_json::json!({ "error": e })).trim_end());
        return ExitCode::from(2);
    }
    match execute(&cli) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            let errors: Vec<String> = match &e {
                CliError::Config(c) => c.0.clone(),
                other => vec![other.to_string()],
            };
            eprint!("{}", to_json(&serde_json::json!({ "errors": errors })));
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
