// SPDX-License-Identifier: Apache-2.0

use std::collections::HashMap;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::grid::GCellGrid;
use super::tech::{CellMaster, LayerRect, PinDirection, Technology, ViaDef};
use super::ModelError;
use crate::geom::{Dbu, Direction, Orientation, Point, Rect};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub enum PlacementStatus {
    #[default]
    Unplaced,
    Placed,
    Fixed,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Instance {
    pub name: String,
    pub master: String,
    pub location: Option<Point>,
    pub orientation: Orientation,
    pub status: PlacementStatus,
}

impl Instance {
    pub fn new(name: &str, master: &str) -> Self {
        Instance {
            name: name.to_string(),
            master: master.to_string(),
            location: None,
            orientation: Orientation::N,
            status: PlacementStatus::Unplaced,
        }
    }

    pub fn placed_at(mut self, at: Point, orientation: Orientation) -> Self {
        self.location = Some(at);
        self.orientation = orientation;
        self.status = PlacementStatus::Placed;
        self
    }

    pub fn is_fixed(&self) -> bool {
        self.status == PlacementStatus::Fixed
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum NetPin {
    Instance { inst: String, pin: String },
    Port(String),
}

impl NetPin {
    pub fn inst(inst: &str, pin: &str) -> Self {
        NetPin::Instance {
            inst: inst.to_string(),
            pin: pin.to_string(),
        }
    }

    /// `inst/pin` for instance pins, the port name for ports.
    pub fn display_name(&self) -> String {
        match self {
            NetPin::Instance { inst, pin } => format!("{inst}/{pin}"),
            NetPin::Port(p) => p.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum RouteShape {
    Wire {
        layer: String,
        start: Point,
        end: Point,
        width: Dbu,
    },
    Via {
        via: String,
        at: Point,
    },
}

impl RouteShape {
    /// Rectangle of a wire: the centerline dilated by half the width on every
    /// side, ends included.
    pub fn wire_rect(start: Point, end: Point, width: Dbu) -> Rect {
        let lo = width / 2;
        let hi = width - lo;
        Rect {
            lo: Point::new(start.x.min(end.x) - lo, start.y.min(end.y) - lo),
            hi: Point::new(start.x.max(end.x) + hi, start.y.max(end.y) + hi),
        }
    }

    pub fn wire_length(&self) -> Dbu {
        match self {
            RouteShape::Wire { start, end, .. } => start.manhattan(end),
            RouteShape::Via { .. } => 0,
        }
    }

    /// Direction of a non-degenerate wire.
    pub fn wire_direction(&self) -> Option<Direction> {
        match self {
            RouteShape::Wire { start, end, .. } if start.y == end.y && start.x != end.x => Some(Direction::Horizontal),
            RouteShape::Wire { start, end, .. } if start.x == end.x && start.y != end.y => Some(Direction::Vertical),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Net {
    pub name: String,
    pub pins: Vec<NetPin>,
    pub routing: Vec<RouteShape>,
}

impl Net {
    pub fn new(name: &str) -> Self {
        Net {
            name: name.to_string(),
            pins: Vec::new(),
            routing: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Row {
    pub name: String,
    pub site: String,
    pub origin: Point,
    pub orientation: Orientation,
    pub num_sites: usize,
    pub site_width: Dbu,
    pub site_height: Dbu,
}

impl Row {
    pub fn rect(&self) -> Rect {
        Rect::new(
            self.origin.x,
            self.origin.y,
            self.origin.x + self.site_width * self.num_sites as Dbu,
            self.origin.y + self.site_height,
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum TrackAxis {
    /// Vertical tracks at x positions.
    X,
    /// Horizontal tracks at y positions.
    Y,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Tracks {
    pub axis: TrackAxis,
    pub start: Dbu,
    pub count: usize,
    pub step: Dbu,
    pub layers: Vec<String>,
}

impl Tracks {
    pub fn contains(&self, c: Dbu) -> bool {
        let d = c - self.start;
        self.step > 0 && d >= 0 && d % self.step == 0 && ((d / self.step) as usize) < self.count
    }

    pub fn coords(&self) -> impl Iterator<Item = Dbu> + '_ {
        (0..self.count).map(move |i| self.start + i as Dbu * self.step)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Port {
    pub name: String,
    pub direction: PinDirection,
    pub layer: Option<String>,
    /// Pin geometry relative to `location`.
    pub shape: Option<Rect>,
    pub location: Option<Point>,
    pub orientation: Orientation,
    pub status: PlacementStatus,
}

impl Port {
    pub fn new(name: &str, direction: PinDirection) -> Self {
        Port {
            name: name.to_string(),
            direction,
            layer: None,
            shape: None,
            location: None,
            orientation: Orientation::N,
            status: PlacementStatus::Unplaced,
        }
    }

    /// Absolute pin shape, when both geometry and location are known.
    pub fn absolute_shape(&self) -> Option<LayerRect> {
        let (layer, shape, at) = (self.layer.as_ref()?, self.shape?, self.location?);
        Some(LayerRect {
            layer: layer.clone(),
            rect: shape.translate(at.x, at.y),
        })
    }
}

#[derive(Debug, Clone, Default)]
struct DesignIndex {
    instances: HashMap<String, usize>,
    nets: HashMap<String, usize>,
    ports: HashMap<String, usize>,
}

/// The design database shared by every stage: netlist, floorplan, placement
/// and routing on one technology.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Design {
    pub name: String,
    pub dbu_per_micron: i64,
    pub die_area: Rect,
    pub tech: Arc<Technology>,
    pub instances: Vec<Instance>,
    pub nets: Vec<Net>,
    pub ports: Vec<Port>,
    pub rows: Vec<Row>,
    pub tracks: Vec<Tracks>,
    pub gcell_grid: Option<GCellGrid>,
    /// Vias defined locally in the design (DEF `VIAS`).
    pub vias: Vec<ViaDef>,
    #[serde(skip)]
    index: DesignIndex,
    #[serde(skip)]
    resolved: bool,
}

impl PartialEq for Design {
    fn eq(&self, o: &Self) -> bool {
        self.name == o.name
            && self.dbu_per_micron == o.dbu_per_micron
            && self.die_area == o.die_area
            && self.tech == o.tech
            && self.instances == o.instances
            && self.nets == o.nets
            && self.ports == o.ports
            && self.rows == o.rows
            && self.tracks == o.tracks
            && self.gcell_grid == o.gcell_grid
            && self.vias == o.vias
    }
}

impl Design {
    pub fn new(name: &str, tech: Arc<Technology>) -> Self {
        Design {
            name: name.to_string(),
            dbu_per_micron: tech.dbu_per_micron,
            die_area: Rect::default(),
            tech,
            instances: Vec::new(),
            nets: Vec::new(),
            ports: Vec::new(),
            rows: Vec::new(),
            tracks: Vec::new(),
            gcell_grid: None,
            vias: Vec::new(),
            index: DesignIndex::default(),
            resolved: false,
        }
    }

    /// Rebuilds the name lookup tables after direct edits of the entity
    /// vectors. Clears the resolved flag.
    pub fn reindex(&mut self) {
        self.index = DesignIndex {
            instances: name_map(self.instances.iter().map(|i| &i.name)),
            nets: name_map(self.nets.iter().map(|n| &n.name)),
            ports: name_map(self.ports.iter().map(|p| &p.name)),
        };
        self.resolved = false;
    }

    pub fn is_resolved(&self) -> bool {
        self.resolved
    }

    pub(crate) fn mark_resolved(&mut self) {
        self.resolved = true;
    }

    fn lookup<T>(items: &[T], map: &HashMap<String, usize>, name: &str, key: impl Fn(&T) -> &str) -> Option<usize> {
        match map.get(name) {
            Some(&i) if items.get(i).is_some_and(|t| key(t) == name) => Some(i),
            _ => items.iter().position(|t| key(t) == name),
        }
    }

    pub fn instance_idx(&self, name: &str) -> Option<usize> {
        Self::lookup(&self.instances, &self.index.instances, name, |i| &i.name)
    }

    pub fn instance(&self, name: &str) -> Option<&Instance> {
        self.instance_idx(name).map(|i| &self.instances[i])
    }

    pub fn net_idx(&self, name: &str) -> Option<usize> {
        Self::lookup(&self.nets, &self.index.nets, name, |n| &n.name)
    }

    pub fn net(&self, name: &str) -> Option<&Net> {
        self.net_idx(name).map(|i| &self.nets[i])
    }

    pub fn port_idx(&self, name: &str) -> Option<usize> {
        Self::lookup(&self.ports, &self.index.ports, name, |p| &p.name)
    }

    pub fn port(&self, name: &str) -> Option<&Port> {
        self.port_idx(name).map(|i| &self.ports[i])
    }

    pub fn master_of(&self, inst: &Instance) -> Option<&CellMaster> {
        self.tech.master(&inst.master)
    }

    /// Looks up a via first among design-local vias, then the technology.
    pub fn via_def(&self, name: &str) -> Option<&ViaDef> {
        self.vias
            .iter()
            .find(|v| v.name == name)
            .or_else(|| self.tech.via(name))
    }

    /// Placed bounding box. Orientation flips mirror pin geometry inside the
    /// box; the box itself never rotates for N/S/FN/FS.
    pub fn instance_bbox(&self, inst: &Instance) -> Result<Rect, ModelError> {
        let at = match (inst.status, inst.location) {
            (PlacementStatus::Unplaced, _) | (_, None) => return Err(ModelError::Unplaced(inst.name.clone())),
            (_, Some(p)) => p,
        };
        let m = self.master_of(inst).ok_or_else(|| ModelError::UnresolvedReference {
            name: inst.master.clone(),
            context: format!("master of instance {}", inst.name),
        })?;
        Ok(Rect::new(at.x, at.y, at.x + m.width, at.y + m.height))
    }

    /// Absolute shapes of an instance pin.
    pub fn pin_shapes(&self, inst: &Instance, pin: &str) -> Vec<LayerRect> {
        let (Some(m), Some(at)) = (self.master_of(inst), inst.location) else {
            return Vec::new();
        };
        let Some(p) = m.pin(pin) else {
            return Vec::new();
        };
        p.shapes
            .iter()
            .map(|s| LayerRect {
                layer: s.layer.clone(),
                rect: inst.orientation.apply(&s.rect, m.width, m.height).translate(at.x, at.y),
            })
            .collect()
    }

    pub fn obstruction_shapes(&self, inst: &Instance) -> Vec<LayerRect> {
        let (Some(m), Some(at)) = (self.master_of(inst), inst.location) else {
            return Vec::new();
        };
        m.obstructions
            .iter()
            .map(|s| LayerRect {
                layer: s.layer.clone(),
                rect: inst.orientation.apply(&s.rect, m.width, m.height).translate(at.x, at.y),
            })
            .collect()
    }

    /// Absolute shapes of any net pin (instance pin or port).
    pub fn net_pin_shapes(&self, pin: &NetPin) -> Vec<LayerRect> {
        match pin {
            NetPin::Instance { inst, pin } => self.instance(inst).map(|i| self.pin_shapes(i, pin)).unwrap_or_default(),
            NetPin::Port(p) => self.port(p).and_then(|p| p.absolute_shape()).into_iter().collect(),
        }
    }

    /// A representative location for a net pin: the center of its shapes'
    /// bounding box, else the instance center or port location.
    pub fn pin_position(&self, pin: &NetPin) -> Option<Point> {
        let shapes = self.net_pin_shapes(pin);
        if let Some(bb) = Rect::bbox_of(shapes.iter().map(|s| &s.rect)) {
            return Some(bb.center());
        }
        match pin {
            NetPin::Instance { inst, .. } => {
                let i = self.instance(inst)?;
                self.instance_bbox(i).ok().map(|r| r.center())
            }
            NetPin::Port(p) => self.port(p)?.location,
        }
    }

    /// Half-perimeter wirelength over all nets, using pin positions.
    pub fn hpwl(&self) -> i64 {
        self.nets.iter().map(|n| self.net_hpwl(n)).sum()
    }

    pub fn net_hpwl(&self, net: &Net) -> i64 {
        let pts: Vec<Point> = net.pins.iter().filter_map(|p| self.pin_position(p)).collect();
        hpwl_of(&pts)
    }

    /// Direction of a pin as seen from its net: output for cell outputs and
    /// input ports (both drive the net).
    pub fn drives_net(&self, pin: &NetPin) -> bool {
        match pin {
            NetPin::Instance { inst, pin } => self
                .instance(inst)
                .and_then(|i| self.master_of(i))
                .and_then(|m| m.pin(pin))
                .is_some_and(|p| p.direction == PinDirection::Output),
            NetPin::Port(p) => self.port(p).is_some_and(|p| p.direction == PinDirection::Input),
        }
    }

    /// Sorts every section by name. Writers emit canonical order, so two
    /// designs compare equal after a write/parse round trip once both are
    /// canonical.
    pub fn canonicalize(&mut self) {
        self.instances.sort_by(|a, b| a.name.cmp(&b.name));
        self.nets.sort_by(|a, b| a.name.cmp(&b.name));
        self.ports.sort_by(|a, b| a.name.cmp(&b.name));
        self.rows.sort_by(|a, b| a.name.cmp(&b.name));
        self.vias.sort_by(|a, b| a.name.cmp(&b.name));
        let resolved = self.resolved;
        self.reindex();
        self.resolved = resolved;
    }
}

fn name_map<'a>(names: impl Iterator<Item = &'a String>) -> HashMap<String, usize> {
    let mut map = HashMap::new();
    for (i, n) in names.enumerate() {
        map.entry(n.clone()).or_insert(i);
    }
    map
}

pub fn hpwl_of(pts: &[Point]) -> i64 {
    if pts.len() < 2 {
        return 0;
    }
    let (mut lx, mut ly, mut hx, mut hy) = (i64::MAX, i64::MAX, i64::MIN, i64::MIN);
    for p in pts {
        lx = lx.min(p.x);
        ly = ly.min(p.y);
        hx = hx.max(p.x);
        hy = hy.max(p.y);
    }
    (hx - lx) + (hy - ly)
}
