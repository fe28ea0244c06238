// SPDX-License-Identifier: Apache-2.0

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Parser, Subcommand};

use rdf_core::check::{check_design, format_report, route_metrics, TrackSet};
use rdf_core::flow::{run_flow, validate_config, FlowConfig, RunOptions, StageKind, StageStatus};
use rdf_core::gen::toy_case;
use rdf_core::io::{
    parse_def, parse_gr_solution, parse_guides, parse_lef, parse_liberty, parse_sdc, write_guides, RouteGuideSet,
};
use rdf_core::sta::{analyze, format_timing_report, StaOptions};
use rdf_core::translate::{translate, TranslateOptions};
use rdf_core::Design;

#[derive(Parser)]
#[command(name = "rdf", version, about = "Open physical-design flow runner and checkers")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run a flow described by a TOML config.
    Run {
        #[arg(short, long)]
        config: PathBuf,
        /// Re-execute stages that have valid cached results.
        #[arg(long)]
        force: bool,
        /// Stop after this stage kind.
        #[arg(long)]
        until: Option<String>,
    },
    /// Validate a flow config without running it.
    Validate {
        #[arg(short, long)]
        config: PathBuf,
    },
    /// List stage kinds with their inputs and outputs.
    Stages,
    /// Write a generated design library and a default flow config.
    Gen {
        #[arg(short, long)]
        out: PathBuf,
        #[arg(long, default_value_t = 100)]
        cells: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
    /// Check placement legality, design rules and connectivity of a DEF.
    Check {
        #[arg(long)]
        lef: PathBuf,
        #[arg(long)]
        def: PathBuf,
        #[arg(long)]
        guide: Option<PathBuf>,
    },
    /// Static timing analysis of a placed or routed DEF.
    Sta {
        #[arg(long)]
        lef: PathBuf,
        #[arg(long)]
        def: PathBuf,
        #[arg(long)]
        liberty: PathBuf,
        #[arg(long)]
        sdc: PathBuf,
    },
    /// Turn a global-routing solution into route guides.
    TranslateGuides {
        #[arg(long)]
        lef: PathBuf,
        #[arg(long)]
        def: PathBuf,
        #[arg(long)]
        route: PathBuf,
        #[arg(short, long)]
        out: PathBuf,
        #[arg(long, default_value_t = 0)]
        radius: usize,
    },
}

fn read(p: &Path) -> Result<String> {
    std::fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))
}

fn load_design(lef: &Path, def: &Path) -> Result<Design> {
    let tech = parse_lef(&read(lef)?, None).with_context(|| format!("parsing {}", lef.display()))?;
    parse_def(&read(def)?, Arc::new(tech)).with_context(|| format!("parsing {}", def.display()))
}

fn load_config(path: &Path) -> Result<FlowConfig> {
    FlowConfig::parse(&read(path)?).with_context(|| format!("in {}", path.display()))
}

fn stage_kind(s: &str) -> Result<StageKind> {
    StageKind::parse(s).ok_or_else(|| anyhow!("unknown stage kind `{s}`"))
}

/// Returns whether the command's own outcome is clean.
fn run(cli: Cli) -> Result<bool> {
    match cli.cmd {
        Cmd::Run { config, force, until } => {
            let cfg = load_config(&config)?;
            let until = until.as_deref().map(stage_kind).transpose()?;
            let base = config.parent().unwrap_or(Path::new("."));
            let rec = run_flow(&cfg, base, &RunOptions { force, until })?;
            for s in &rec.stages {
                let status = match s.status {
                    StageStatus::Ok => "ok",
                    StageStatus::Cached => "cached",
                    StageStatus::Failed => "FAILED",
                };
                println!(
                    "{:>2} {:<16} {:<7} {:>7} ms",
                    s.index + 1,
                    s.stage.as_str(),
                    status,
                    s.wall_ms
                );
            }
            println!("run {} in {}", rec.run, rec.run_dir.display());
            Ok(true)
        }
        Cmd::Validate { config } => {
            validate_config(&load_config(&config)?)?;
            println!("ok");
            Ok(true)
        }
        Cmd::Stages => {
            for k in StageKind::ALL {
                println!(
                    "{:<16} in: {:<28} out: {:<12} {}",
                    k.as_str(),
                    k.inputs().join(","),
                    k.outputs().join(","),
                    k.describe()
                );
            }
            Ok(true)
        }
        Cmd::Gen { out, cells, seed } => {
            let lib = toy_case(cells, seed).write_library(&out)?;
            let cfg = FlowConfig::default_pipeline(lib);
            let path = out.join("flow.toml");
            std::fs::write(&path, cfg.to_toml()).with_context(|| format!("writing {}", path.display()))?;
            println!("wrote {}", path.display());
            Ok(true)
        }
        Cmd::Check { lef, def, guide } => {
            let d = load_design(&lef, &def)?;
            let guides: Option<RouteGuideSet> = guide
                .map(|g| parse_guides(&read(&g)?).map_err(anyhow::Error::from))
                .transpose()?;
            let v = check_design(&d)?;
            let m = route_metrics(&d, guides.as_ref(), &TrackSet::from_design(&d));
            print!("{}", format_report(&v, Some(&m)));
            Ok(v.is_empty())
        }
        Cmd::Sta { lef, def, liberty, sdc } => {
            let d = load_design(&lef, &def)?;
            let lib = parse_liberty(&read(&liberty)?)?;
            let c = parse_sdc(&read(&sdc)?)?;
            let o = StaOptions::default();
            let r = analyze(&d, &lib, &c, &o)?;
            print!("{}", format_timing_report(&r, &o.wire));
            Ok(true)
        }
        Cmd::TranslateGuides {
            lef,
            def,
            route,
            out,
            radius,
        } => {
            let d = load_design(&lef, &def)?;
            let sol = parse_gr_solution(&read(&route)?)?;
            let Some(grid) = d.gcell_grid.clone() else {
                bail!("{} has no GCELLGRID", def.display())
            };
            let o = TranslateOptions {
                radius,
                ..Default::default()
            };
            let g = translate(&sol, &grid, &d, &o)?;
            std::fs::write(&out, write_guides(&g)).with_context(|| format!("writing {}", out.display()))?;
            Ok(true)
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
