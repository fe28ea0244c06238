// SPDX-License-Identifier: Apache-2.0

//! The shared design database.

mod design;
mod grid;
mod tech;

use std::collections::{BTreeMap, HashSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use design::{hpwl_of, Design, Instance, Net, NetPin, PlacementStatus, Port, RouteShape, Row, TrackAxis, Tracks};
pub use grid::{CapacityAdjustment, GCellGrid, GridEdge, GridError, MAX_GRID_CELLS};
pub use tech::{
    CellMaster, EolRule, Layer, LayerKind, LayerRect, MasterPin, PinDirection, Site, SpacingTable, Technology, ViaDef,
};

use crate::geom::Dbu;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ModelError {
    #[error("unresolved reference `{name}` ({context})")]
    UnresolvedReference { name: String, context: String },
    #[error("instance `{0}` is not placed")]
    Unplaced(String),
    #[error("duplicate {kind} name `{name}`")]
    DuplicateName { kind: &'static str, name: String },
    #[error("net `{0}` has more than one driver")]
    MultipleDrivers(String),
    #[error("net `{0}` has no pins")]
    EmptyNet(String),
}

/// Validates every cross-reference by name and returns the design with its
/// lookup tables built. Applying it twice is the same as applying it once.
pub fn resolve_references(mut design: Design) -> Result<Design, ModelError> {
    design.reindex();
    check_unique("instance", design.instances.iter().map(|i| &i.name))?;
    check_unique("net", design.nets.iter().map(|n| &n.name))?;
    check_unique("port", design.ports.iter().map(|p| &p.name))?;
    for inst in &design.instances {
        if design.tech.master(&inst.master).is_none() {
            return Err(ModelError::UnresolvedReference {
                name: inst.master.clone(),
                context: format!("master of instance {}", inst.name),
            });
        }
    }
    for net in &design.nets {
        if net.pins.is_empty() {
            return Err(ModelError::EmptyNet(net.name.clone()));
        }
        let mut drivers = 0;
        for pin in &net.pins {
            match pin {
                NetPin::Instance { inst, pin: p } => {
                    let i = design.instance(inst).ok_or_else(|| ModelError::UnresolvedReference {
                        name: inst.clone(),
                        context: format!("instance on net {}", net.name),
                    })?;
                    let m = design.tech.master(&i.master).expect("checked above");
                    if m.pin(p).is_none() {
                        return Err(ModelError::UnresolvedReference {
                            name: format!("{inst}/{p}"),
                            context: format!("pin of master {} on net {}", m.name, net.name),
                        });
                    }
                }
                NetPin::Port(p) => {
                    if design.port(p).is_none() {
                        return Err(ModelError::UnresolvedReference {
                            name: p.clone(),
                            context: format!("port on net {}", net.name),
                        });
                    }
                }
            }
            if design.drives_net(pin) {
                drivers += 1;
            }
        }
        if drivers > 1 {
            return Err(ModelError::MultipleDrivers(net.name.clone()));
        }
    }
    design.mark_resolved();
    Ok(design)
}

fn check_unique<'a>(kind: &'static str, names: impl Iterator<Item = &'a String>) -> Result<(), ModelError> {
    let mut seen = HashSet::new();
    for n in names {
        if !seen.insert(n.as_str()) {
            return Err(ModelError::DuplicateName { kind, name: n.clone() });
        }
    }
    Ok(())
}

pub fn dbu_to_micron(v: Dbu, dbu_per_micron: i64) -> f64 {
    v as f64 / dbu_per_micron as f64
}

/// Nearest DBU value of a micron quantity.
pub fn micron_to_dbu(um: f64, dbu_per_micron: i64) -> Dbu {
    (um * dbu_per_micron as f64).round() as Dbu
}

/// Reference to a library cell (and optionally its output pin) driving an
/// input port.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DriverRef {
    pub cell: String,
    pub pin: Option<String>,
}

/// Timing constraints. Times are ps; loads are in library capacitance units.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Constraints {
    pub clock_period: Option<f64>,
    pub clock_name: Option<String>,
    pub clock_port: Option<String>,
    pub input_drivers: BTreeMap<String, DriverRef>,
    /// Driver applied to every input without an explicit one (`all_inputs`).
    pub default_driver: Option<DriverRef>,
    pub output_loads: BTreeMap<String, f64>,
    /// Load applied to every output without an explicit one (`all_outputs`).
    pub default_output_load: Option<f64>,
    pub warnings: Vec<String>,
}

impl Constraints {
    pub fn output_load(&self, port: &str) -> f64 {
        self.output_loads
            .get(port)
            .copied()
            .or(self.default_output_load)
            .unwrap_or(0.0)
    }

    pub fn driver(&self, port: &str) -> Option<&DriverRef> {
        self.input_drivers.get(port).or(self.default_driver.as_ref())
    }
}
