// SPDX-License-Identifier: Apache-2.0

//! Built-in placement, legalization and routing stages. They are simple and
//! deterministic; quality is secondary to producing checker-clean output.

mod droute;
mod groute;
mod legalize;
mod place;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geom::{Orientation, Point};
use crate::model::{Design, ModelError};

pub use droute::{route_detailed, DrOptions, DrResult};
pub use groute::{gr_input_from_design, route_global, GrOptions, GrResult};
pub use legalize::legalize;
pub use place::{place_global, PlaceOptions};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum StageError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("design has no rows")]
    NoRows,
    #[error("design has no gcell grid")]
    NoGrid,
    #[error("cell area {cells} exceeds row area {rows}")]
    InsufficientArea { cells: i64, rows: i64 },
    #[error("no legal position for instance `{0}`")]
    CannotLegalize(String),
    #[error("pin ({x},{y}) on layer {layer} of net `{net}` lies outside the routing grid")]
    UnreachablePin { net: String, x: i64, y: i64, layer: usize },
    #[error("pin `{0}` has no on-track access point")]
    NoAccessPoint(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PlacementResult {
    /// `(instance, location, orientation)` in instance order.
    pub placements: Vec<(String, Point, Orientation)>,
    pub hpwl: i64,
}

impl PlacementResult {
    pub(crate) fn of(design: &Design) -> Self {
        PlacementResult {
            placements: design
                .instances
                .iter()
                .filter_map(|i| i.location.map(|p| (i.name.clone(), p, i.orientation)))
                .collect(),
            hpwl: design.hpwl(),
        }
    }
}
