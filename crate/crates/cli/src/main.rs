use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use dbfilm::analysis::{compare_schemes, convergence_study};
use dbfilm::anisotropy::stability_check;
use dbfilm::config::RunConfig;
use dbfilm::evolution::{run, EventKind, RunOutput};
use dbfilm::presets::{describe, preset, PRESET_NAMES};
use dbfilm::{Error, Result};

#[derive(Parser)]
#[command(name = "dbfilm", version, about = "Solid-state dewetting of double-bubble thin films")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// TOML configuration file or preset name.
    config: String,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Accepted for compatibility; every run is deterministic.
    #[arg(long)]
    seedless: bool,
    /// Override the final time.
    #[arg(long)]
    t_max: Option<f64>,
}

#[derive(Subcommand)]
enum Command {
    /// Run one simulation.
    Run {
        #[command(flatten)]
        common: Common,
        /// Write a snapshot every K steps (0: only initial, events and end).
        #[arg(long)]
        snapshot_every: Option<usize>,
    },
    /// Refinement study with manifold-distance errors.
    Converge {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 3)]
        levels: usize,
        /// Evaluation times, comma separated or repeated.
        #[arg(long = "t-eval", value_delimiter = ',', required = true)]
        t_eval: Vec<f64>,
    },
    /// Run the SP and ES schemes side by side.
    Compare {
        #[command(flatten)]
        common: Common,
    },
    /// Validate a configuration and report anisotropy stability.
    Check {
        /// TOML configuration file or preset name.
        config: String,
    },
    /// List or print presets.
    Preset {
        #[command(subcommand)]
        action: PresetAction,
    },
}

#[derive(Subcommand)]
enum PresetAction {
    List,
    Show { name: String },
}

fn load(spec: &str) -> Result<RunConfig> {
    let path = Path::new(spec);
    if path.is_file() {
        RunConfig::load(path)
    } else if PRESET_NAMES.contains(&spec) || !spec.ends_with(".toml") {
        preset(spec)
    } else {
        Err(Error::Io(std::io::Error::new(std::io::ErrorKind::NotFound, format!("no such file: {spec}"))))
    }
}

fn prepare(common: &Common) -> Result<(RunConfig, PathBuf)> {
    let mut config = load(&common.config)?;
    if let Some(t) = common.t_max {
        config.run.t_max = t;
    }
    config.validate()?;
    let out = common
        .out
        .clone()
        .or_else(|| config.run.out_dir.as_ref().map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("out"));
    fs::create_dir_all(&out)?;
    Ok((config, out))
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(path)?))
}

fn write_manifest(path: &Path, command: &str, config: &RunConfig, extra: &str) -> Result<()> {
    let mut w = create(path)?;
    writeln!(w, "# dbfilm {} ({command})", env!("CARGO_PKG_VERSION"))?;
    writeln!(w, "# platform: {}-{}", std::env::consts::ARCH, std::env::consts::OS)?;
    for line in extra.lines() {
        writeln!(w, "# {line}")?;
    }
    writeln!(w)?;
    w.write_all(config.to_toml_string().as_bytes())?;
    w.flush()?;
    Ok(())
}

fn write_run(out: &Path, output: &RunOutput<f64>) -> Result<()> {
    let mut w = create(&out.join("history.csv"))?;
    output.history.write_csv(&mut w)?;
    w.flush()?;
    let mut w = create(&out.join("events.csv"))?;
    output.history.write_events_csv(&mut w)?;
    w.flush()?;
    let dir = out.join("snapshots");
    fs::create_dir_all(&dir)?;
    for s in &output.snapshots {
        for (id, island) in &s.islands {
            let mut w = create(&dir.join(format!("step_{:07}_island_{id}.csv", s.step)))?;
            island.write_csv(&mut w)?;
            w.flush()?;
        }
    }
    Ok(())
}

fn cmd_run(common: &Common, snapshot_every: Option<usize>) -> Result<()> {
    let (mut config, out) = prepare(common)?;
    if let Some(k) = snapshot_every {
        config.run.snapshot_every = k;
    }
    let r = config.resolve()?;
    let output = run(r.network, r.spec, r.params, r.stepper, r.options)?;
    write_run(&out, &output)?;

    let h = &output.history;
    let pinches = h.events.iter().filter(|e| e.kind == EventKind::Pinch).count();
    let last = h.records.last().expect("history has the initial record");
    let mut summary = format!(
        "steps: {}\nfinal time: {}\nmax relative area drift: {:e}\nfinal energy ratio: {}\nenergy non-increasing: {}\nequilibrium reached: {}\npinch events: {pinches}\n",
        h.records.len() - 1,
        last.t,
        h.max_relative_area_drift(),
        last.energy_ratio,
        h.energy_non_increasing(1e-12),
        output.reached_equilibrium,
    );
    if let Some(e) = h.events.iter().find(|e| e.kind == EventKind::Pinch) {
        summary.push_str(&format!("first pinch: t = {} at ({}, {})\n", e.t, e.location.x, e.location.y));
    }
    write_manifest(&out.join("manifest.txt"), "run", &config, &summary)?;
    print!("{summary}");
    println!("output: {}", out.display());
    Ok(())
}

fn cmd_converge(common: &Common, levels: usize, t_eval: &[f64]) -> Result<()> {
    let (config, out) = prepare(common)?;
    let study = convergence_study(&config, levels, t_eval)?;
    let mut summary = String::new();
    for t in &study.tables {
        let name = format!("errors_t{}.csv", t.t_eval);
        let mut w = create(&out.join(&name))?;
        t.write_csv(&mut w)?;
        w.flush()?;
        summary.push_str(&format!("t_eval = {} ({name})\n", t.t_eval));
        for r in &t.rows {
            summary.push_str(&format!(
                "  h = {:.6e}  dt = {:.6e}  error = {:.6e}  order = {:.4}\n",
                r.h, r.dt, r.error, r.order
            ));
        }
    }
    if let Some(e) = &study.failure {
        summary.push_str(&format!("INCOMPLETE: {e}\n"));
    }
    write_manifest(&out.join("manifest.txt"), "converge", &config, &summary)?;
    print!("{summary}");
    match study.failure {
        Some(e) => Err(e),
        None => Ok(()),
    }
}

fn cmd_compare(common: &Common) -> Result<()> {
    let (config, out) = prepare(common)?;
    let c = compare_schemes(&config)?;
    for (name, h) in [("history_sp.csv", &c.sp), ("history_es.csv", &c.es)] {
        let mut w = create(&out.join(name))?;
        h.write_csv(&mut w)?;
        w.flush()?;
    }
    let summary = c.to_string();
    fs::write(out.join("summary.txt"), &summary)?;
    write_manifest(&out.join("manifest.txt"), "compare", &config, &summary)?;
    print!("{summary}");
    Ok(())
}

fn cmd_check(spec: &str) -> Result<()> {
    let config = load(spec)?;
    config.validate()?;
    config.initial_network()?;
    print!("{}", stability_check(&config.spec()?));
    println!("configuration valid");
    Ok(())
}

fn cmd_preset(action: &PresetAction) -> Result<()> {
    match action {
        PresetAction::List => {
            for name in PRESET_NAMES {
                println!("{name:<24}{}", describe(name).unwrap_or(""));
            }
        }
        PresetAction::Show { name } => print!("{}", preset(name)?.to_toml_string()),
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Run { common, snapshot_every } => cmd_run(common, *snapshot_every),
        Command::Converge { common, levels, t_eval } => cmd_converge(common, *levels, t_eval),
        Command::Compare { common } => cmd_compare(common),
        Command::Check { config } => cmd_check(config),
        Command::Preset { action } => cmd_preset(action),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let message = e.to_string().replace('\n', " ");
            eprintln!("error: kind={} message={message}", e.kind());
            ExitCode::FAILURE
        }
    }
}
