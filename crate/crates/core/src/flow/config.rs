// SPDX-License-Identifier: Apache-2.0

use std::collections::BTreeSet;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use super::{FlowError, StageKind};

pub const SCHEMA_VERSION: u32 = 1;

/// The five design-library inputs. Relative paths resolve against the
/// config file's directory.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DesignLibrary {
    pub verilog: PathBuf,
    pub liberty: PathBuf,
    pub lef: PathBuf,
    pub def: PathBuf,
    pub sdc: PathBuf,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StageImpl {
    #[default]
    Builtin,
    External,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StageConfig {
    pub kind: String,
    #[serde(rename = "impl", default)]
    pub implementation: StageImpl,
    /// Command template for external stages. `{in.NAME}` and `{out.NAME}`
    /// expand to artifact paths and `{workdir}` to the stage directory, all
    /// relative to the run directory, which is the working directory.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub command: Option<String>,
    #[serde(default, skip_serializing_if = "toml::Table::is_empty")]
    pub options: toml::Table,
}

impl StageConfig {
    pub fn builtin(kind: StageKind) -> Self {
        StageConfig {
            kind: kind.as_str().to_string(),
            implementation: StageImpl::Builtin,
            command: None,
            options: toml::Table::new(),
        }
    }

    pub fn external(kind: StageKind, command: &str) -> Self {
        StageConfig {
            kind: kind.as_str().to_string(),
            implementation: StageImpl::External,
            command: Some(command.to_string()),
            options: toml::Table::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FlowConfig {
    pub schema: u32,
    #[serde(default = "default_seed")]
    pub seed: u64,
    /// Relative to the config file's directory.
    #[serde(default = "default_run_dir")]
    pub run_dir: PathBuf,
    pub design: DesignLibrary,
    #[serde(rename = "stage", default)]
    pub stages: Vec<StageConfig>,
}

fn default_seed() -> u64 {
    1
}

fn default_run_dir() -> PathBuf {
    PathBuf::from("run")
}

impl FlowConfig {
    pub fn parse(text: &str) -> Result<FlowConfig, FlowError> {
        let cfg: FlowConfig = toml::from_str(text).map_err(|e| FlowError::Config(e.to_string()))?;
        if cfg.schema != SCHEMA_VERSION {
            return Err(FlowError::Config(format!(
                "schema version {} is not supported (expected {SCHEMA_VERSION})",
                cfg.schema
            )));
        }
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// All-builtin default pipeline over a design library.
    pub fn default_pipeline(design: DesignLibrary) -> Self {
        FlowConfig {
            schema: SCHEMA_VERSION,
            seed: default_seed(),
            run_dir: default_run_dir(),
            design,
            stages: StageKind::DEFAULT_PIPELINE
                .iter()
                .map(|&k| StageConfig::builtin(k))
                .collect(),
        }
    }

    pub(crate) fn kinds(&self) -> Result<Vec<StageKind>, FlowError> {
        self.stages
            .iter()
            .map(|s| StageKind::parse(&s.kind).ok_or_else(|| FlowError::UnknownStage(s.kind.clone())))
            .collect()
    }
}

/// `{...}` placeholders of a command template.
pub(crate) fn placeholders(template: &str) -> Vec<String> {
    let mut out = Vec::new();
    let mut rest = template;
    while let Some(a) = rest.find('{') {
        let Some(b) = rest[a..].find('}') else { break };
        out.push(rest[a + 1..a + b].to_string());
        rest = &rest[a + b + 1..];
    }
    out
}

/// Option keys accepted by each builtin stage.
fn option_keys(kind: StageKind) -> &'static [&'static str] {
    match kind {
        StageKind::GlobalPlace => &["iterations"],
        StageKind::Sta => &["wire_model", "r_per_um", "c_per_um"],
        StageKind::GlobalRoute => &["overflow_penalty", "via_cost", "min_layer"],
        StageKind::TranslateGuides => &["radius", "fallback_layers"],
        StageKind::DetailRoute => &["wrong_way_factor", "via_cost", "halo_factor", "halo", "rounds"],
        _ => &[],
    }
}

/// Stage-kind, ordering, option and placeholder checks.
pub fn validate_config(cfg: &FlowConfig) -> Result<(), FlowError> {
    let kinds = cfg.kinds()?;
    let mut seen = BTreeSet::new();
    let mut rank = 0;
    for (i, (kind, sc)) in kinds.iter().zip(&cfg.stages).enumerate() {
        let order = |reason: String| FlowError::StageOrderError {
            stage: kind.as_str().to_string(),
            index: i,
            reason,
        };
        if !seen.insert(*kind) {
            return Err(order("stage appears twice".into()));
        }
        if let Some(r) = kind.rank() {
            if r < rank {
                let later = kinds[..i]
                    .iter()
                    .find(|k| k.rank().is_some_and(|x| x > r))
                    .expect("a higher rank ran");
                return Err(order(format!("must run before `{later}`")));
            }
            rank = r;
        }
        if *kind != StageKind::Synth && kinds[i..].contains(&StageKind::Synth) {
            return Err(order("must run after `synth`".into()));
        }
        if let Some(req) = kind.requires() {
            if !seen.contains(&req) {
                return Err(order(format!("needs `{req}` earlier in the flow")));
            }
        }
        match sc.implementation {
            StageImpl::Builtin => {
                if sc.command.is_some() {
                    return Err(FlowError::Config(format!("builtin stage `{kind}` has a command")));
                }
                let keys = option_keys(*kind);
                if let Some(k) = sc.options.keys().find(|k| !keys.contains(&k.as_str())) {
                    return Err(FlowError::Config(format!("stage `{kind}` has no option `{k}`")));
                }
            }
            StageImpl::External => {
                let cmd = sc
                    .command
                    .as_deref()
                    .ok_or_else(|| FlowError::Config(format!("external stage `{kind}` has no command")))?;
                let ph = placeholders(cmd);
                for p in &ph {
                    let ok = p == "workdir"
                        || p.strip_prefix("in.").is_some_and(|n| kind.inputs().contains(&n))
                        || p.strip_prefix("out.").is_some_and(|n| kind.outputs().contains(&n));
                    if !ok {
                        return Err(FlowError::UnknownPlaceholder {
                            stage: kind.as_str().into(),
                            placeholder: format!("{{{p}}}"),
                        });
                    }
                }
                for o in kind.outputs() {
                    let want = format!("out.{o}");
                    if !ph.contains(&want) {
                        return Err(FlowError::MissingPlaceholder {
                            stage: kind.as_str().into(),
                            placeholder: format!("{{{want}}}"),
                        });
                    }
                }
            }
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lib() -> DesignLibrary {
        DesignLibrary {
            verilog: "a.v".into(),
            liberty: "a.lib".into(),
            lef: "a.lef".into(),
            def: "a.def".into(),
            sdc: "a.sdc".into(),
        }
    }

    #[test]
    fn default_pipeline_is_valid_and_round_trips() {
        let cfg = FlowConfig::default_pipeline(lib());
        validate_config(&cfg).unwrap();
        assert_eq!(FlowConfig::parse(&cfg.to_toml()).unwrap(), cfg);
        let kinds: Vec<&str> = cfg.stages.iter().map(|s| s.kind.as_str()).collect();
        assert_eq!(
            kinds,
            [
                "synth",
                "globalPlace",
                "legalize",
                "sta",
                "globalRoute",
                "translateGuides",
                "detailRoute",
                "check"
            ]
        );
    }

    #[test]
    fn order_errors() {
        let mut cfg = FlowConfig::default_pipeline(lib());
        cfg.stages = [StageKind::Synth, StageKind::DetailRoute, StageKind::GlobalRoute]
            .iter()
            .map(|&k| StageConfig::builtin(k))
            .collect();
        assert!(matches!(
            validate_config(&cfg),
            Err(FlowError::StageOrderError { index: 1, .. })
        ));
        cfg.stages = [StageKind::GlobalRoute, StageKind::Legalize]
            .iter()
            .map(|&k| StageConfig::builtin(k))
            .collect();
        assert!(matches!(
            validate_config(&cfg),
            Err(FlowError::StageOrderError { index: 1, .. })
        ));
        cfg.stages = vec![
            StageConfig::builtin(StageKind::Legalize),
            StageConfig::builtin(StageKind::Sta),
        ];
        validate_config(&cfg).unwrap();
    }

    #[test]
    fn unknown_stage_and_placeholders() {
        let mut cfg = FlowConfig::default_pipeline(lib());
        cfg.stages[1].kind = "floorplan".into();
        assert!(matches!(validate_config(&cfg), Err(FlowError::UnknownStage(k)) if k == "floorplan"));
        let mut cfg = FlowConfig::default_pipeline(lib());
        cfg.stages[2] = StageConfig::external(StageKind::Legalize, "lg {in.def} {in.lef} -o out.def");
        assert!(matches!(
            validate_config(&cfg),
            Err(FlowError::MissingPlaceholder { placeholder, .. }) if placeholder == "{out.def}"
        ));
        cfg.stages[2].command = Some("lg {in.route} {out.def}".into());
        assert!(matches!(
            validate_config(&cfg),
            Err(FlowError::UnknownPlaceholder { .. })
        ));
        cfg.stages[2].command = Some("lg -i {in.def} -o {out.def} -w {workdir}".into());
        validate_config(&cfg).unwrap();
    }

    #[test]
    fn schema_and_options() {
        let text = FlowConfig::default_pipeline(lib())
            .to_toml()
            .replace("schema = 1", "schema = 2");
        assert!(matches!(FlowConfig::parse(&text), Err(FlowError::Config(_))));
        let mut cfg = FlowConfig::default_pipeline(lib());
        cfg.stages[1]
            .options
            .insert("iterations".into(), toml::Value::Integer(3));
        validate_config(&cfg).unwrap();
        cfg.stages[1]
            .options
            .insert("temperature".into(), toml::Value::Float(1.0));
        assert!(matches!(validate_config(&cfg), Err(FlowError::Config(_))));
    }
}
