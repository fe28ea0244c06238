// SPDX-License-Identifier: Apache-2.0

//! Placement legality, routing design rules, routing metrics and congestion.

mod congestion;
mod connectivity;
mod legality;
mod metrics;
mod report;
mod rules;
pub mod shapes;

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geom::Rect;

pub use congestion::{congestion_map, net_edges, CongestionMap};
pub use connectivity::{check_all_connectivity, check_connectivity};
pub use legality::check_legality;
pub use metrics::{route_metrics, RouteMetrics, TrackSet};
pub use report::{format_report, summarize, CheckSummary};
pub use rules::{check_min_area, check_shorts, check_spacing};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ViolationKind {
    Overlap,
    OffRow,
    OffSite,
    OutOfDie,
    Open,
    Short,
    PrlSpacing,
    EolSpacing,
    CutSpacing,
    MinArea,
}

impl ViolationKind {
    pub const ALL: [ViolationKind; 10] = [
        ViolationKind::Overlap,
        ViolationKind::OffRow,
        ViolationKind::OffSite,
        ViolationKind::OutOfDie,
        ViolationKind::Open,
        ViolationKind::Short,
        ViolationKind::PrlSpacing,
        ViolationKind::EolSpacing,
        ViolationKind::CutSpacing,
        ViolationKind::MinArea,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            ViolationKind::Overlap => "overlap",
            ViolationKind::OffRow => "offRow",
            ViolationKind::OffSite => "offSite",
            ViolationKind::OutOfDie => "outOfDie",
            ViolationKind::Open => "open",
            ViolationKind::Short => "short",
            ViolationKind::PrlSpacing => "prlSpacing",
            ViolationKind::EolSpacing => "eolSpacing",
            ViolationKind::CutSpacing => "cutSpacing",
            ViolationKind::MinArea => "minArea",
        }
    }
}

impl fmt::Display for ViolationKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Violation {
    pub kind: ViolationKind,
    pub layer: Option<String>,
    pub location: Rect,
    pub nets: Vec<String>,
    pub instances: Vec<String>,
    pub measured: Option<i64>,
    pub required: Option<i64>,
}

impl Violation {
    fn new(kind: ViolationKind, location: Rect) -> Self {
        Violation {
            kind,
            layer: None,
            location,
            nets: Vec::new(),
            instances: Vec::new(),
            measured: None,
            required: None,
        }
    }

    fn sort_key(&self) -> impl Ord + '_ {
        (
            self.location.lo.y,
            self.location.lo.x,
            self.location.hi.y,
            self.location.hi.x,
            self.kind,
            self.layer.as_deref(),
            &self.nets,
            &self.instances,
        )
    }
}

/// Orders violations by location, then kind, and drops exact duplicates.
pub fn sort_violations(v: &mut Vec<Violation>) {
    v.sort_by(|a, b| a.sort_key().cmp(&b.sort_key()));
    v.dedup();
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum CheckError {
    #[error(transparent)]
    Model(#[from] crate::model::ModelError),
    #[error("layer `{0}` has no spacing rule")]
    MissingRule(String),
    #[error("segment endpoint ({x},{y},{layer}) of net `{net}` lies outside the grid")]
    SegmentOffGrid { net: String, x: i64, y: i64, layer: usize },
}

/// Every placement and routing check, sorted.
pub fn check_design(design: &crate::model::Design) -> Result<Vec<Violation>, CheckError> {
    let mut v = check_legality(design)?;
    v.extend(check_shorts(design)?);
    v.extend(check_spacing(design)?);
    v.extend(check_min_area(design)?);
    v.extend(check_all_connectivity(design)?);
    sort_violations(&mut v);
    Ok(v)
}
