// SPDX-License-Identifier: Apache-2.0

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::Command;
use std::sync::Arc;
use std::time::Instant;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::config::{validate_config, FlowConfig, StageConfig, StageImpl};
use super::plot::{emit_congestion_plot, emit_placement_plot, emit_routed_plot};
use super::{FlowError, StageKind};
use crate::check::{check_design, check_legality, format_report, route_metrics, TrackSet};
use crate::io::{
    parse_def, parse_gr_input, parse_gr_solution, parse_guides, parse_lef, parse_liberty, parse_sdc, parse_verilog,
    write_def, write_gr_input, write_gr_solution, write_guides, write_sdc, write_verilog, RouteGuideSet,
};
use crate::model::{Design, Technology};
use crate::sta::{analyze, format_timing_report, StaOptions, WireModel};
use crate::stages::{
    gr_input_from_design, legalize, place_global, route_detailed, route_global, DrOptions, GrOptions, PlaceOptions,
};
use crate::translate::{translate, TranslateOptions};

pub const RECORD_FILE: &str = "record.jsonl";
/// Directories searched for external tools before `PATH`, `:`-separated.
pub const TOOL_PATH_ENV: &str = "RDF_TOOL_PATH";

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct RunOptions {
    /// Re-execute stages even when a cached result matches.
    pub force: bool,
    /// Stop after this stage.
    pub until: Option<StageKind>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StageStatus {
    Ok,
    Cached,
    Failed,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OutputRecord {
    /// Relative to the run directory.
    pub path: String,
    pub digest: String,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct StageMetrics {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cells: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub hpwl: Option<i64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub clock_period: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub wns: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tns: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub overflow: Option<i64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub guides: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub violations: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub unrouted: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub wirelength: Option<i64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub vias: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub guide_coverage: Option<f64>,
}

impl StageMetrics {
    fn lines(&self) -> String {
        let v = serde_json::to_value(self).expect("metrics serialize");
        let mut s = String::new();
        if let serde_json::Value::Object(m) = v {
            for (k, v) in m {
                let _ = writeln!(s, "{k} {v}");
            }
        }
        s
    }
}

/// One line of the record file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageRecord {
    pub run: u64,
    pub index: usize,
    pub stage: StageKind,
    pub implementation: StageImpl,
    pub seed: u64,
    /// Digest over stage configuration and input digests.
    pub key: String,
    pub inputs: BTreeMap<String, String>,
    pub outputs: BTreeMap<String, OutputRecord>,
    pub status: StageStatus,
    /// External processes started: 0 for builtin and cached stages.
    pub tools_run: usize,
    pub wall_ms: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub exit_code: Option<i32>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub message: Option<String>,
    pub metrics: StageMetrics,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub run: u64,
    pub run_dir: PathBuf,
    pub stages: Vec<StageRecord>,
}

/// All record lines in a run directory, oldest first.
pub fn read_record(run_dir: &Path) -> Result<Vec<StageRecord>, FlowError> {
    let path = run_dir.join(RECORD_FILE);
    let text = match fs::read_to_string(&path) {
        Ok(t) => t,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(Vec::new()),
        Err(e) => return Err(FlowError::io(&path, e)),
    };
    text.lines()
        .filter(|l| !l.trim().is_empty())
        .map(|l| serde_json::from_str(l).map_err(|e| FlowError::Config(format!("{}: {e}", path.display()))))
        .collect()
}

fn digest(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

fn file_digest(path: &Path) -> Result<String, FlowError> {
    fs::read(path).map(|b| digest(&b)).map_err(|e| FlowError::io(path, e))
}

fn output_file(name: &str) -> String {
    match name {
        "verilog" => "out.v".into(),
        "report" => "report.txt".into(),
        other => format!("out.{other}"),
    }
}

/// Optional extra inputs of builtin stages, used when available.
fn extra_inputs(kind: StageKind) -> &'static [&'static str] {
    match kind {
        StageKind::GlobalPlace | StageKind::DetailPlace | StageKind::Legalize => &["liberty"],
        StageKind::Check => &["guide"],
        _ => &[],
    }
}

type StageOut = (BTreeMap<String, String>, StageMetrics);

struct Ctx<'a> {
    run_dir: &'a Path,
    stage_dir: String,
    inputs: BTreeMap<String, String>,
    seed: u64,
}

impl Ctx<'_> {
    fn path(&self, rel: &str) -> PathBuf {
        self.run_dir.join(rel)
    }

    fn read(&self, name: &str) -> Result<String, String> {
        let p = self.inputs.get(name).ok_or_else(|| format!("missing input `{name}`"))?;
        fs::read_to_string(self.path(p)).map_err(|e| format!("{p}: {e}"))
    }

    fn write(&self, file: &str, data: &[u8]) -> Result<String, String> {
        let r = format!("{}/{file}", self.stage_dir);
        fs::write(self.path(&r), data).map_err(|e| format!("{r}: {e}"))?;
        Ok(r)
    }

    fn tech(&self) -> Result<Arc<Technology>, String> {
        parse_lef(&self.read("lef")?, None)
            .map(Arc::new)
            .map_err(|e| format!("lef: {e}"))
    }

    fn design(&self) -> Result<Design, String> {
        let tech = self.tech()?;
        parse_def(&self.read("def")?, tech).map_err(|e| format!("def: {e}"))
    }
}

fn opt<T: serde::de::DeserializeOwned>(sc: &StageConfig, key: &str) -> Result<Option<T>, String> {
    sc.options
        .get(key)
        .map(|v| v.clone().try_into::<T>().map_err(|e| format!("option `{key}`: {e}")))
        .transpose()
}

fn json<T: Serialize>(v: &T) -> Vec<u8> {
    let mut s = serde_json::to_string_pretty(v).expect("plot data serializes");
    s.push('\n');
    s.into_bytes()
}

fn placement_outputs(ctx: &Ctx, d: &Design, outs: &mut BTreeMap<String, String>) -> Result<StageMetrics, String> {
    let lib = match ctx.inputs.get("liberty") {
        Some(_) => Some(parse_liberty(&ctx.read("liberty")?).map_err(|e| format!("liberty: {e}"))?),
        None => None,
    };
    let plot = emit_placement_plot(d, lib.as_ref()).map_err(|e| e.to_string())?;
    outs.insert("plot.placement".into(), ctx.write("placement.json", &json(&plot))?);
    outs.insert("def".into(), ctx.write("out.def", write_def(d).as_bytes())?);
    Ok(StageMetrics {
        cells: Some(d.instances.len()),
        hpwl: Some(d.hpwl()),
        ..Default::default()
    })
}

fn run_builtin(kind: StageKind, sc: &StageConfig, ctx: &Ctx) -> Result<StageOut, String> {
    let mut outs = BTreeMap::new();
    let metrics = match kind {
        StageKind::Synth => {
            let nl = parse_verilog(&ctx.read("verilog")?).map_err(|e| format!("verilog: {e}"))?;
            let lib = parse_liberty(&ctx.read("liberty")?).map_err(|e| format!("liberty: {e}"))?;
            let d = ctx.design()?;
            for i in &nl.instances {
                if !lib.cells.contains_key(&i.cell) || d.tech.master(&i.cell).is_none() {
                    return Err(format!("instance `{}` uses unmapped cell `{}`", i.name, i.cell));
                }
            }
            if !d.instances.is_empty() {
                let a: BTreeMap<&str, &str> = nl
                    .instances
                    .iter()
                    .map(|i| (i.name.as_str(), i.cell.as_str()))
                    .collect();
                let b: BTreeMap<&str, &str> = d
                    .instances
                    .iter()
                    .map(|i| (i.name.as_str(), i.master.as_str()))
                    .collect();
                if a != b {
                    return Err("netlist and DEF components disagree".into());
                }
            }
            outs.insert("verilog".into(), ctx.write("out.v", write_verilog(&nl).as_bytes())?);
            StageMetrics {
                cells: Some(nl.instances.len()),
                ..Default::default()
            }
        }
        StageKind::GlobalPlace => {
            let mut d = ctx.design()?;
            let o = PlaceOptions {
                iterations: opt(sc, "iterations")?.unwrap_or(PlaceOptions::default().iterations),
                seed: ctx.seed,
            };
            place_global(&mut d, &o).map_err(|e| e.to_string())?;
            placement_outputs(ctx, &d, &mut outs)?
        }
        StageKind::DetailPlace | StageKind::Legalize => {
            let mut d = ctx.design()?;
            legalize(&mut d).map_err(|e| e.to_string())?;
            let mut m = placement_outputs(ctx, &d, &mut outs)?;
            m.violations = Some(check_legality(&d).map_err(|e| e.to_string())?.len());
            m
        }
        StageKind::Size => {
            let d = ctx.design()?;
            outs.insert("def".into(), ctx.write("out.def", write_def(&d).as_bytes())?);
            StageMetrics::default()
        }
        StageKind::Sta => {
            let d = ctx.design()?;
            let lib = parse_liberty(&ctx.read("liberty")?).map_err(|e| format!("liberty: {e}"))?;
            let mut c = parse_sdc(&ctx.read("sdc")?).map_err(|e| format!("sdc: {e}"))?;
            let wire = match opt::<String>(sc, "wire_model")?.as_deref() {
                None | Some("lumped") => WireModel::Lumped,
                Some("elmore") => WireModel::Elmore {
                    r_per_um: opt(sc, "r_per_um")?.unwrap_or(0.0),
                    c_per_um: opt(sc, "c_per_um")?.unwrap_or(0.0),
                },
                Some(w) => return Err(format!("unknown wire model `{w}`")),
            };
            let o = StaOptions {
                wire,
                ..Default::default()
            };
            let r = analyze(&d, &lib, &c, &o).map_err(|e| e.to_string())?;
            c.clock_period = Some(r.summary.clock_period);
            outs.insert("sdc".into(), ctx.write("out.sdc", write_sdc(&c).as_bytes())?);
            outs.insert(
                "report".into(),
                ctx.write("report.txt", format_timing_report(&r, &wire).as_bytes())?,
            );
            StageMetrics {
                clock_period: Some(r.summary.clock_period),
                wns: Some(r.summary.wns),
                tns: Some(r.summary.tns),
                ..Default::default()
            }
        }
        StageKind::GlobalRoute => {
            let input = parse_gr_input(&ctx.read("gr")?).map_err(|e| format!("gr: {e}"))?;
            let d = GrOptions::default();
            let o = GrOptions {
                overflow_penalty: opt(sc, "overflow_penalty")?.unwrap_or(d.overflow_penalty),
                via_cost: opt(sc, "via_cost")?.unwrap_or(d.via_cost),
                min_layer: opt(sc, "min_layer")?.unwrap_or(d.min_layer),
            };
            let r = route_global(&input, &o).map_err(|e| e.to_string())?;
            outs.insert(
                "route".into(),
                ctx.write("out.route", write_gr_solution(&r.solution).as_bytes())?,
            );
            for l in 1..=r.congestion.num_layers {
                let h = emit_congestion_plot(&r.congestion, l).map_err(|e| e.to_string())?;
                outs.insert(
                    format!("plot.congestion{l}"),
                    ctx.write(&format!("congestion_{l}.ppm"), &h.to_ppm())?,
                );
                outs.insert(
                    format!("plot.congestion{l}.csv"),
                    ctx.write(&format!("congestion_{l}.csv"), h.to_csv().as_bytes())?,
                );
            }
            StageMetrics {
                overflow: Some(r.congestion.total_overflow()),
                wirelength: Some(r.wirelength),
                vias: Some(r.vias),
                ..Default::default()
            }
        }
        StageKind::TranslateGuides => {
            let d = ctx.design()?;
            let sol = parse_gr_solution(&ctx.read("route")?).map_err(|e| format!("route: {e}"))?;
            let grid = d.gcell_grid.clone().ok_or("design has no gcell grid")?;
            let dflt = TranslateOptions::default();
            let o = TranslateOptions {
                radius: opt(sc, "radius")?.unwrap_or(dflt.radius),
                fallback_layers: opt(sc, "fallback_layers")?.unwrap_or(dflt.fallback_layers),
            };
            let g = translate(&sol, &grid, &d, &o).map_err(|e| e.to_string())?;
            outs.insert("guide".into(), ctx.write("out.guide", write_guides(&g).as_bytes())?);
            StageMetrics {
                guides: Some(g.num_rects()),
                ..Default::default()
            }
        }
        StageKind::DetailRoute => {
            let mut d = ctx.design()?;
            let g = parse_guides(&ctx.read("guide")?).map_err(|e| format!("guide: {e}"))?;
            let dflt = DrOptions::default();
            let o = DrOptions {
                wrong_way_factor: opt(sc, "wrong_way_factor")?.unwrap_or(dflt.wrong_way_factor),
                via_cost: opt(sc, "via_cost")?.unwrap_or(dflt.via_cost),
                halo_factor: opt(sc, "halo_factor")?.unwrap_or(dflt.halo_factor),
                halo: opt(sc, "halo")?.unwrap_or(dflt.halo),
                rounds: opt(sc, "rounds")?.unwrap_or(dflt.rounds),
                ..dflt
            };
            let r = route_detailed(&mut d, &g, &o).map_err(|e| e.to_string())?;
            outs.insert("def".into(), ctx.write("out.def", write_def(&d).as_bytes())?);
            outs.insert(
                "plot.routed".into(),
                ctx.write("routed.json", &json(&emit_routed_plot(&d)))?,
            );
            StageMetrics {
                unrouted: Some(r.unrouted.len()),
                wirelength: Some(r.wirelength),
                vias: Some(r.vias),
                ..Default::default()
            }
        }
        StageKind::Check => {
            let d = ctx.design()?;
            let guides: Option<RouteGuideSet> = match ctx.inputs.get("guide") {
                Some(_) => Some(parse_guides(&ctx.read("guide")?).map_err(|e| format!("guide: {e}"))?),
                None => None,
            };
            let v = check_design(&d).map_err(|e| e.to_string())?;
            let m = route_metrics(&d, guides.as_ref(), &TrackSet::from_design(&d));
            outs.insert(
                "report".into(),
                ctx.write("report.txt", format_report(&v, Some(&m)).as_bytes())?,
            );
            StageMetrics {
                violations: Some(v.len()),
                wirelength: Some(m.total_wirelength),
                vias: Some(m.via_count),
                guide_coverage: Some(m.guide_coverage),
                ..Default::default()
            }
        }
    };
    Ok((outs, metrics))
}

fn find_tool(tool: &str, run_dir: &Path) -> Option<PathBuf> {
    if tool.contains('/') {
        let p = run_dir.join(tool);
        return p.is_file().then_some(p);
    }
    let mut dirs: Vec<PathBuf> = std::env::var_os(TOOL_PATH_ENV)
        .map(|v| std::env::split_paths(&v).collect())
        .unwrap_or_default();
    if let Some(p) = std::env::var_os("PATH") {
        dirs.extend(std::env::split_paths(&p));
    }
    dirs.into_iter().map(|d| d.join(tool)).find(|p| p.is_file())
}

/// Re-reads an externally produced artifact to make sure the next stage can.
fn validate_output(name: &str, text: &str, tech: Option<Arc<Technology>>) -> Result<StageMetrics, String> {
    let mut m = StageMetrics::default();
    let bad = |e: crate::io::FormatError| format!("output `{name}` does not parse: {e}");
    match name {
        "def" => {
            let tech = tech.ok_or("no LEF to read the output DEF")?;
            let d = parse_def(text, tech).map_err(bad)?;
            if d.instances.iter().all(|i| i.location.is_some()) {
                m.hpwl = Some(d.hpwl());
            }
        }
        "verilog" => {
            parse_verilog(text).map_err(bad)?;
        }
        "sdc" => {
            parse_sdc(text).map_err(bad)?;
        }
        "route" => {
            parse_gr_solution(text).map_err(bad)?;
        }
        "guide" => {
            m.guides = Some(parse_guides(text).map_err(bad)?.num_rects());
        }
        _ => {}
    }
    Ok(m)
}

enum Failure {
    Failed(String, Option<i32>),
    NotFound(String),
}

fn run_external(kind: StageKind, sc: &StageConfig, ctx: &Ctx) -> Result<StageOut, Failure> {
    let template = sc.command.as_deref().unwrap_or_default();
    let mut outs = BTreeMap::new();
    let mut cmd = template.replace("{workdir}", &ctx.stage_dir);
    for (name, p) in &ctx.inputs {
        cmd = cmd.replace(&format!("{{in.{name}}}"), p);
    }
    for o in kind.outputs() {
        let p = format!("{}/{}", ctx.stage_dir, output_file(o));
        cmd = cmd.replace(&format!("{{out.{o}}}"), &p);
        outs.insert(o.to_string(), p);
    }
    let tool = cmd.split_whitespace().next().unwrap_or_default().to_string();
    if find_tool(&tool, ctx.run_dir).is_none() {
        return Err(Failure::NotFound(tool));
    }
    let mut path = std::env::var_os(TOOL_PATH_ENV).unwrap_or_default();
    if let Some(p) = std::env::var_os("PATH") {
        if !path.is_empty() {
            path.push(":");
        }
        path.push(p);
    }
    log::info!("{kind}: {cmd}");
    let out = Command::new("sh")
        .arg("-c")
        .arg(&cmd)
        .current_dir(ctx.run_dir)
        .env("PATH", path)
        .output()
        .map_err(|e| Failure::Failed(format!("cannot start `{tool}`: {e}"), None))?;
    let keep = |f: &str, b: &[u8]| ctx.write(f, b).map_err(|e| Failure::Failed(e, None));
    keep("stdout.txt", &out.stdout)?;
    keep("stderr.txt", &out.stderr)?;
    if !out.status.success() {
        let last = String::from_utf8_lossy(&out.stderr)
            .lines()
            .last()
            .unwrap_or_default()
            .to_string();
        return Err(Failure::Failed(
            format!("`{tool}` exited with {}: {last}", out.status),
            out.status.code(),
        ));
    }
    let tech = ctx.tech().ok();
    let mut metrics = StageMetrics::default();
    for (name, p) in &outs {
        let text = fs::read_to_string(ctx.path(p))
            .map_err(|e| Failure::Failed(format!("expected output {p}: {e}"), out.status.code()))?;
        let m = validate_output(name, &text, tech.clone()).map_err(|e| Failure::Failed(e, out.status.code()))?;
        metrics.hpwl = metrics.hpwl.or(m.hpwl);
        metrics.guides = metrics.guides.or(m.guides);
    }
    Ok((outs, metrics))
}

fn stage_key(kind: StageKind, sc: &StageConfig, seed: u64, inputs: &BTreeMap<String, String>) -> String {
    let v = serde_json::json!({
        "stage": kind,
        "impl": sc.implementation,
        "command": sc.command,
        "options": toml::to_string(&sc.options).unwrap_or_default(),
        "seed": seed,
        "inputs": inputs,
    });
    digest(v.to_string().as_bytes())
}

fn cache_hit<'a>(
    prior: &'a [StageRecord],
    index: usize,
    kind: StageKind,
    key: &str,
    run_dir: &Path,
) -> Option<&'a StageRecord> {
    prior.iter().rev().find(|r| {
        r.index == index
            && r.stage == kind
            && r.key == key
            && r.status != StageStatus::Failed
            && r.outputs
                .values()
                .all(|o| file_digest(&run_dir.join(&o.path)).is_ok_and(|d| d == o.digest))
    })
}

fn append(run_dir: &Path, rec: &StageRecord) -> Result<(), FlowError> {
    let path = run_dir.join(RECORD_FILE);
    let mut f = fs::OpenOptions::new()
        .create(true)
        .append(true)
        .open(&path)
        .map_err(|e| FlowError::io(&path, e))?;
    let line = serde_json::to_string(rec).expect("record serializes");
    writeln!(f, "{line}").map_err(|e| FlowError::io(&path, e))
}

fn write_if_changed(path: &Path, data: &[u8]) -> Result<(), FlowError> {
    if fs::read(path).is_ok_and(|old| old == data) {
        return Ok(());
    }
    fs::write(path, data).map_err(|e| FlowError::io(path, e))
}

/// Runs every stage in order inside `base/cfg.run_dir`. Design-library paths
/// resolve against `base`. Each stage gets its own directory; its outputs
/// replace the matching artifacts for later stages. A stage whose
/// configuration and input digests match an earlier successful record, and
/// whose recorded outputs are intact, is not re-executed unless forced.
/// Record lines are appended as stages finish, so a failed flow keeps the
/// record of everything before the failure.
pub fn run_flow(cfg: &FlowConfig, base: &Path, opts: &RunOptions) -> Result<RunRecord, FlowError> {
    validate_config(cfg)?;
    let kinds = cfg.kinds()?;
    let run_dir = base.join(&cfg.run_dir);
    let mkdir = |p: &Path| fs::create_dir_all(p).map_err(|e| FlowError::io(p, e));
    mkdir(&run_dir)?;
    let prior = read_record(&run_dir)?;
    let run = prior.iter().map(|r| r.run).max().map_or(1, |r| r + 1);
    mkdir(&run_dir.join("inputs"))?;
    let mut artifacts: BTreeMap<String, String> = BTreeMap::new();
    let lib = &cfg.design;
    for (name, src, file) in [
        ("verilog", &lib.verilog, "design.v"),
        ("liberty", &lib.liberty, "design.lib"),
        ("lef", &lib.lef, "design.lef"),
        ("def", &lib.def, "design.def"),
        ("sdc", &lib.sdc, "design.sdc"),
    ] {
        let src = base.join(src);
        let data = fs::read(&src).map_err(|e| FlowError::io(&src, e))?;
        let r = format!("inputs/{file}");
        write_if_changed(&run_dir.join(&r), &data)?;
        artifacts.insert(name.to_string(), r);
    }
    let mut record = RunRecord {
        run,
        run_dir: run_dir.clone(),
        stages: Vec::new(),
    };
    for (i, (kind, sc)) in kinds.iter().copied().zip(&cfg.stages).enumerate() {
        let stage_dir = format!("{:02}-{}", i + 1, kind);
        mkdir(&run_dir.join(&stage_dir))?;
        let started = Instant::now();
        let fail = |detail: String| FlowError::StageFailed {
            stage: kind.as_str().to_string(),
            detail,
        };
        if kind == StageKind::GlobalRoute {
            // Adapter step: the global-routing problem in ISPD-2008 form.
            let ctx = Ctx {
                run_dir: &run_dir,
                stage_dir: stage_dir.clone(),
                inputs: artifacts.clone(),
                seed: cfg.seed,
            };
            let d = ctx.design().map_err(fail)?;
            let grid = d
                .gcell_grid
                .clone()
                .ok_or_else(|| fail("design has no gcell grid".into()))?;
            let r = ctx
                .write("in.gr", write_gr_input(&gr_input_from_design(&d, &grid)).as_bytes())
                .map_err(fail)?;
            artifacts.insert("gr".into(), r);
        }
        let mut inputs = BTreeMap::new();
        for name in kind.inputs() {
            let p = artifacts
                .get(*name)
                .ok_or_else(|| fail(format!("no `{name}` artifact is available")))?;
            inputs.insert(name.to_string(), p.clone());
        }
        if sc.implementation == StageImpl::Builtin {
            for name in extra_inputs(kind) {
                if let Some(p) = artifacts.get(*name) {
                    inputs.insert(name.to_string(), p.clone());
                }
            }
        }
        let mut digests = BTreeMap::new();
        for (name, p) in &inputs {
            digests.insert(name.clone(), file_digest(&run_dir.join(p))?);
        }
        let key = stage_key(kind, sc, cfg.seed, &digests);
        let mut rec = StageRecord {
            run,
            index: i,
            stage: kind,
            implementation: sc.implementation,
            seed: cfg.seed,
            key: key.clone(),
            inputs: digests,
            outputs: BTreeMap::new(),
            status: StageStatus::Ok,
            tools_run: 0,
            wall_ms: 0,
            exit_code: None,
            message: None,
            metrics: StageMetrics::default(),
        };
        let hit = if opts.force {
            None
        } else {
            cache_hit(&prior, i, kind, &key, &run_dir)
        };
        if let Some(old) = hit {
            log::info!("{kind}: cache hit");
            rec.status = StageStatus::Cached;
            rec.outputs = old.outputs.clone();
            rec.metrics = old.metrics.clone();
        } else {
            let ctx = Ctx {
                run_dir: &run_dir,
                stage_dir: stage_dir.clone(),
                inputs,
                seed: cfg.seed,
            };
            let result = match sc.implementation {
                StageImpl::Builtin => run_builtin(kind, sc, &ctx).map_err(|e| Failure::Failed(e, None)),
                StageImpl::External => {
                    rec.tools_run = 1;
                    run_external(kind, sc, &ctx)
                }
            };
            match result {
                Ok((outs, metrics)) => {
                    let summary = format!("# rdf stage summary v1\nstage {kind}\n{}", metrics.lines());
                    let mut outs = outs;
                    outs.insert(
                        "summary".into(),
                        ctx.write("summary.txt", summary.as_bytes()).map_err(fail)?,
                    );
                    for (name, p) in outs {
                        let d = file_digest(&run_dir.join(&p))?;
                        rec.outputs.insert(name, OutputRecord { path: p, digest: d });
                    }
                    rec.metrics = metrics;
                }
                Err(f) => {
                    rec.status = StageStatus::Failed;
                    rec.wall_ms = started.elapsed().as_millis() as u64;
                    let err = match f {
                        Failure::Failed(msg, code) => {
                            rec.exit_code = code;
                            rec.message = Some(msg.clone());
                            fail(msg)
                        }
                        Failure::NotFound(tool) => {
                            rec.tools_run = 0;
                            rec.message = Some(format!("tool `{tool}` not found"));
                            FlowError::ToolNotFound {
                                stage: kind.as_str().into(),
                                tool,
                            }
                        }
                    };
                    append(&run_dir, &rec)?;
                    record.stages.push(rec);
                    return Err(err);
                }
            }
        }
        rec.wall_ms = started.elapsed().as_millis() as u64;
        for (name, o) in &rec.outputs {
            artifacts.insert(name.clone(), o.path.clone());
        }
        append(&run_dir, &rec)?;
        record.stages.push(rec);
        if opts.until == Some(kind) {
            break;
        }
    }
    let final_dir = run_dir.join("final");
    mkdir(&final_dir)?;
    for (name, file) in [
        ("def", "design.def"),
        ("guide", "design.guide"),
        ("verilog", "design.v"),
        ("sdc", "design.sdc"),
    ] {
        if let Some(p) = artifacts.get(name) {
            let data = fs::read(run_dir.join(p)).map_err(|e| FlowError::io(&run_dir.join(p), e))?;
            write_if_changed(&final_dir.join(file), &data)?;
        }
    }
    for r in &record.stages {
        if let Some(o) = r.outputs.get("report") {
            let data = fs::read(run_dir.join(&o.path)).map_err(|e| FlowError::io(&run_dir.join(&o.path), e))?;
            write_if_changed(&final_dir.join(format!("{}.rpt", r.stage)), &data)?;
        }
    }
    Ok(record)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::flow::StageConfig;
    use crate::gen::toy_case;

    fn setup(cells: usize) -> (tempfile::TempDir, FlowConfig) {
        let dir = tempfile::tempdir().unwrap();
        let lib = toy_case(cells, 5).write_library(dir.path()).unwrap();
        (dir, FlowConfig::default_pipeline(lib))
    }

    #[test]
    fn toy_flow_then_cache() {
        let (dir, cfg) = setup(10);
        let r = run_flow(&cfg, dir.path(), &RunOptions::default()).unwrap();
        assert_eq!(r.stages.len(), 8);
        assert!(r.stages.iter().all(|s| s.status == StageStatus::Ok));
        let check = r.stages.last().unwrap();
        assert_eq!(check.metrics.violations, Some(0));
        let again = run_flow(&cfg, dir.path(), &RunOptions::default()).unwrap();
        assert!(again
            .stages
            .iter()
            .all(|s| s.status == StageStatus::Cached && s.tools_run == 0));
        assert_eq!(again.run, 2);
        let rec = read_record(&dir.path().join("run")).unwrap();
        assert_eq!(rec.len(), 16);
        let forced = run_flow(
            &cfg,
            dir.path(),
            &RunOptions {
                force: true,
                until: Some(StageKind::Sta),
            },
        )
        .unwrap();
        assert_eq!(forced.stages.len(), 4);
        for (a, b) in forced.stages.iter().zip(&r.stages) {
            assert_eq!(a.status, StageStatus::Ok);
            assert_eq!(a.outputs, b.outputs);
        }
    }

    #[test]
    fn option_change_invalidates_downstream() {
        let (dir, mut cfg) = setup(10);
        run_flow(
            &cfg,
            dir.path(),
            &RunOptions {
                force: false,
                until: Some(StageKind::Legalize),
            },
        )
        .unwrap();
        cfg.stages[1]
            .options
            .insert("iterations".into(), toml::Value::Integer(2));
        let r = run_flow(
            &cfg,
            dir.path(),
            &RunOptions {
                force: false,
                until: Some(StageKind::Legalize),
            },
        )
        .unwrap();
        let st: Vec<StageStatus> = r.stages.iter().map(|s| s.status).collect();
        assert_eq!(st[0], StageStatus::Cached);
        assert_eq!(st[1], StageStatus::Ok);
    }

    #[test]
    fn external_failure_keeps_record() {
        let (dir, mut cfg) = setup(6);
        cfg.stages[2] = StageConfig::external(StageKind::Legalize, "sh -c 'echo nope >&2; exit 3' {in.def} {out.def}");
        let e = run_flow(&cfg, dir.path(), &RunOptions::default()).unwrap_err();
        assert!(
            matches!(e, FlowError::StageFailed { ref stage, .. } if stage == "legalize"),
            "{e}"
        );
        let rec = read_record(&dir.path().join("run")).unwrap();
        assert_eq!(rec.len(), 3);
        assert_eq!(rec[2].status, StageStatus::Failed);
        assert_eq!(rec[2].exit_code, Some(3));
        assert_eq!(rec[2].tools_run, 1);

        cfg.stages[2] = StageConfig::external(StageKind::Legalize, "no-such-legalizer {in.def} {out.def}");
        let e = run_flow(&cfg, dir.path(), &RunOptions::default()).unwrap_err();
        assert!(matches!(e, FlowError::ToolNotFound { ref tool, .. } if tool == "no-such-legalizer"));
    }

    #[test]
    fn external_stage_output_is_validated() {
        let (dir, mut cfg) = setup(6);
        cfg.stages[2] = StageConfig::external(StageKind::Legalize, "cp {in.def} {out.def}");
        cfg.stages.truncate(3);
        let r = run_flow(&cfg, dir.path(), &RunOptions::default()).unwrap();
        assert_eq!(r.stages[2].tools_run, 1);
        assert!(r.stages[2].metrics.hpwl.is_some());
        cfg.stages[2].command = Some("echo garbage > {out.def}".into());
        let e = run_flow(&cfg, dir.path(), &RunOptions::default()).unwrap_err();
        assert!(e.to_string().contains("does not parse"), "{e}");
    }
}
