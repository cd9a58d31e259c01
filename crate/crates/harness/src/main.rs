use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand};
use mer_core::geomech::Component;
use mer_harness::config::FieldParams;
use mer_harness::{exit_code, execute, replay, Config, Format, HarnessError, Recipe};

/// Simulate and analyse multi-legged elongate robots.
#[derive(Debug, Parser)]
#[command(name = "mer", version)]
struct Cli {
    /// TOML configuration; built-in defaults when absent.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Master seed, overriding `run.seed`.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory (default `out/<command>`).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads; 0 uses every core.
    #[arg(long, global = true, default_value_t = 0)]
    jobs: usize,
    #[arg(long, global = true, value_enum, default_value_t = Format::Svg)]
    format: Format,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate stepfield ensembles and their rugosity; with any field
    /// option, one field from the master seed instead.
    GenTerrain(FieldArgs),
    /// Height function, amplitude selection and Stokes checks.
    Heightfield {
        #[arg(long, default_value = "x", value_parser = parse_component)]
        component: Component,
    },
    /// Stride against body amplitude, predicted and simulated.
    SweepAmplitude,
    /// Stride against leg count with the non-slip bound.
    SweepLegs,
    /// Time to travel a fixed distance across leg count and spatial period.
    Tradeoff,
    /// Velocity distributions across vertical wave amplitudes.
    VwaveCdf,
    /// Displacement profiles under fixed and adaptive vertical waves.
    Siso,
    /// Speed against rugosity for C-arc and point feet.
    Cleg,
    /// Random gaits on flat ground against the stride bound.
    BoundCheck,
    /// Re-run a manifest and compare every output byte for byte.
    Replay { manifest: PathBuf },
}

/// Overrides for a single stepfield; unset values come from the moderate
/// rugosity field of the configuration.
#[derive(Debug, Args)]
struct FieldArgs {
    #[arg(long)]
    mean: Option<f64>,
    #[arg(long)]
    std: Option<f64>,
    #[arg(long)]
    increment: Option<f64>,
    #[arg(long)]
    cols: Option<usize>,
    #[arg(long)]
    rows: Option<usize>,
}

impl FieldArgs {
    fn params(&self, config: &Config) -> Option<FieldParams> {
        let any = self.mean.is_some()
            || self.std.is_some()
            || self.increment.is_some()
            || self.cols.is_some()
            || self.rows.is_some();
        let base = config.terrain.low;
        any.then(|| FieldParams {
            mean: self.mean.unwrap_or(base.mean),
            std: self.std.unwrap_or(base.std),
            increment: self.increment.unwrap_or(base.increment),
            cols: self.cols.unwrap_or(base.cols),
            rows: self.rows.unwrap_or(base.rows),
        })
    }
}

fn parse_component(s: &str) -> Result<Component, String> {
    s.parse().map_err(|e: mer_core::Error| e.to_string())
}

fn recipe(command: &Command, config: &Config) -> Option<Recipe> {
    Some(match command {
        Command::GenTerrain(args) => Recipe::GenTerrain {
            field: args.params(config),
        },
        Command::Heightfield { component } => Recipe::Heightfield { component: *component },
        Command::SweepAmplitude => Recipe::SweepAmplitude,
        Command::SweepLegs => Recipe::SweepLegs,
        Command::Tradeoff => Recipe::Tradeoff,
        Command::VwaveCdf => Recipe::VwaveCdf,
        Command::Siso => Recipe::Siso,
        Command::Cleg => Recipe::Cleg,
        Command::BoundCheck => Recipe::BoundCheck,
        Command::Replay { .. } => return None,
    })
}

fn run(cli: &Cli) -> anyhow::Result<()> {
    if let Command::Replay { manifest } = &cli.command {
        let r = replay(manifest, cli.out.as_deref(), cli.jobs)?;
        println!("replay ok: {} files identical in {}", r.files, r.dir.display());
        return Ok(());
    }
    let config = match &cli.config {
        Some(path) => Config::load(path)?,
        None => Config::default(),
    };
    let recipe = recipe(&cli.command, &config).expect("replay handled above");
    let seed = cli.seed.unwrap_or(config.run.seed);
    let out = cli.out.clone().unwrap_or_else(|| PathBuf::from("out").join(recipe.name()));
    let manifest = execute(recipe, &config, seed, cli.jobs, cli.format, &out)
        .with_context(|| format!("running {}", recipe.name()))?;
    println!("{}: wrote {} files to {}", recipe.name(), manifest.files.len(), out.display());
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            let code = err.downcast_ref::<HarnessError>().map_or(1, exit_code);
            ExitCode::from(code as u8)
        }
    }
}
