// SPDX-License-Identifier: Apache-2.0

//! Flow configuration, validation, execution with caching, and plot data.

mod config;
mod plot;
mod run;

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use config::{validate_config, DesignLibrary, FlowConfig, StageConfig, StageImpl, SCHEMA_VERSION};
pub use plot::{
    emit_congestion_plot, emit_placement_plot, emit_routed_plot, layer_color, CellClass, Heatmap, LayerPlot,
    PlacementPlot, PlotError, PlotRect, RoutedPlot,
};
pub use run::{
    read_record, run_flow, OutputRecord, RunOptions, RunRecord, StageMetrics, StageRecord, StageStatus, RECORD_FILE,
    TOOL_PATH_ENV,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum StageKind {
    Synth,
    GlobalPlace,
    DetailPlace,
    Sta,
    Size,
    Legalize,
    GlobalRoute,
    TranslateGuides,
    DetailRoute,
    Check,
}

impl StageKind {
    pub const ALL: [StageKind; 10] = [
        StageKind::Synth,
        StageKind::GlobalPlace,
        StageKind::DetailPlace,
        StageKind::Sta,
        StageKind::Size,
        StageKind::Legalize,
        StageKind::GlobalRoute,
        StageKind::TranslateGuides,
        StageKind::DetailRoute,
        StageKind::Check,
    ];

    /// The default all-builtin pipeline.
    pub const DEFAULT_PIPELINE: [StageKind; 8] = [
        StageKind::Synth,
        StageKind::GlobalPlace,
        StageKind::Legalize,
        StageKind::Sta,
        StageKind::GlobalRoute,
        StageKind::TranslateGuides,
        StageKind::DetailRoute,
        StageKind::Check,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            StageKind::Synth => "synth",
            StageKind::GlobalPlace => "globalPlace",
            StageKind::DetailPlace => "detailPlace",
            StageKind::Sta => "sta",
            StageKind::Size => "size",
            StageKind::Legalize => "legalize",
            StageKind::GlobalRoute => "globalRoute",
            StageKind::TranslateGuides => "translateGuides",
            StageKind::DetailRoute => "detailRoute",
            StageKind::Check => "check",
        }
    }

    pub fn parse(s: &str) -> Option<StageKind> {
        StageKind::ALL.into_iter().find(|k| k.as_str() == s)
    }

    pub fn describe(&self) -> &'static str {
        match self {
            StageKind::Synth => "netlist pass-through with mapping sanity check",
            StageKind::GlobalPlace => "seeded spread plus wirelength descent",
            StageKind::DetailPlace => "runs the legalizer",
            StageKind::Sta => "static timing; derives the clock when none is given",
            StageKind::Size => "pass-through (sizing is external only)",
            StageKind::Legalize => "Tetris legalization with row parity for tall cells",
            StageKind::GlobalRoute => "congestion-aware maze routing on the gcell grid",
            StageKind::TranslateGuides => "global route to route guides",
            StageKind::DetailRoute => "gridded maze routing with rip-up and reroute",
            StageKind::Check => "legality, design rules, connectivity and route metrics",
        }
    }

    /// Position in the flow. Stages must appear in non-decreasing rank,
    /// except timing and checking, which may run anywhere after synthesis.
    fn rank(&self) -> Option<u8> {
        match self {
            StageKind::Synth => Some(0),
            StageKind::GlobalPlace => Some(1),
            StageKind::DetailPlace | StageKind::Legalize | StageKind::Size => Some(2),
            StageKind::GlobalRoute => Some(3),
            StageKind::TranslateGuides => Some(4),
            StageKind::DetailRoute => Some(5),
            StageKind::Sta | StageKind::Check => None,
        }
    }

    /// Stage that must run earlier in the same flow.
    fn requires(&self) -> Option<StageKind> {
        match self {
            StageKind::TranslateGuides => Some(StageKind::GlobalRoute),
            StageKind::DetailRoute => Some(StageKind::TranslateGuides),
            _ => None,
        }
    }

    /// Artifacts read. `gr` is written by the orchestrator from the current
    /// design just before a global-routing stage.
    pub fn inputs(&self) -> &'static [&'static str] {
        match self {
            StageKind::Synth => &["verilog", "liberty", "lef", "def"],
            StageKind::GlobalPlace | StageKind::DetailPlace | StageKind::Legalize => &["def", "lef"],
            StageKind::Sta | StageKind::Size => &["def", "lef", "liberty", "sdc"],
            StageKind::GlobalRoute => &["def", "lef", "gr"],
            StageKind::TranslateGuides => &["route", "def", "lef"],
            StageKind::DetailRoute => &["def", "lef", "guide"],
            StageKind::Check => &["def", "lef"],
        }
    }

    /// Artifacts written. External commands must reference every one.
    pub fn outputs(&self) -> &'static [&'static str] {
        match self {
            StageKind::Synth => &["verilog"],
            StageKind::Sta => &["sdc", "report"],
            StageKind::GlobalRoute => &["route"],
            StageKind::TranslateGuides => &["guide"],
            StageKind::Check => &["report"],
            _ => &["def"],
        }
    }
}

impl fmt::Display for StageKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Error)]
pub enum FlowError {
    #[error("config: {0}")]
    Config(String),
    #[error("unknown stage kind `{0}`")]
    UnknownStage(String),
    #[error("stage `{stage}` at position {index}: {reason}")]
    StageOrderError {
        stage: String,
        index: usize,
        reason: String,
    },
    #[error("external command of stage `{stage}` lacks placeholder `{placeholder}`")]
    MissingPlaceholder { stage: String, placeholder: String },
    #[error("external command of stage `{stage}` uses unknown placeholder `{placeholder}`")]
    UnknownPlaceholder { stage: String, placeholder: String },
    #[error("stage `{stage}` failed: {detail}")]
    StageFailed { stage: String, detail: String },
    #[error("tool `{tool}` of stage `{stage}` not found")]
    ToolNotFound { stage: String, tool: String },
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl FlowError {
    pub(crate) fn io(path: &std::path::Path, source: std::io::Error) -> Self {
        FlowError::Io {
            path: path.display().to_string(),
            source,
        }
    }
}
