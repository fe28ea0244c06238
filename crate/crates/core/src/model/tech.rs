// SPDX-License-Identifier: Apache-2.0

//! Technology data: layer stack, design-rule parameters, vias, sites and
//! cell masters.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::geom::{Dbu, Direction, Rect};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum LayerKind {
    Routing,
    Cut,
}

/// Parallel-run-length spacing table. `spacing[i][j]` applies to shapes whose
/// width exceeds `widths[i]` and whose parallel run exceeds `prls[j]`; the
/// first row and column always apply.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SpacingTable {
    pub prls: Vec<Dbu>,
    pub widths: Vec<Dbu>,
    pub spacing: Vec<Vec<Dbu>>,
}

impl SpacingTable {
    /// A single flat spacing value.
    pub fn uniform(s: Dbu) -> Self {
        SpacingTable {
            prls: vec![0],
            widths: vec![0],
            spacing: vec![vec![s]],
        }
    }

    fn pick(axis: &[Dbu], v: Dbu) -> usize {
        let mut idx = 0;
        for (i, &a) in axis.iter().enumerate().skip(1) {
            if v > a {
                idx = i;
            }
        }
        idx
    }

    pub fn lookup(&self, width: Dbu, prl: Dbu) -> Dbu {
        let wi = Self::pick(&self.widths, width);
        let pi = Self::pick(&self.prls, prl);
        self.spacing[wi][pi]
    }

    pub fn max_spacing(&self) -> Dbu {
        self.spacing.iter().flatten().copied().max().unwrap_or(0)
    }
}

/// Basic end-of-line rule: an edge shorter than `eol_width` needs
/// `eol_space` clearance ahead of it, over the edge widened by `eol_within`
/// on each side.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct EolRule {
    pub eol_space: Dbu,
    pub eol_width: Dbu,
    pub eol_within: Dbu,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Layer {
    pub name: String,
    pub kind: LayerKind,
    /// 1-based position in the full stack, counting routing and cut layers.
    pub index: usize,
    pub direction: Direction,
    pub pitch: Dbu,
    pub offset: Option<Dbu>,
    pub width: Dbu,
    pub min_area: i64,
    pub spacing: Option<SpacingTable>,
    pub eol: Option<EolRule>,
    pub cut_spacing: Option<Dbu>,
}

impl Layer {
    pub fn new_routing(name: &str, direction: Direction, pitch: Dbu, width: Dbu) -> Self {
        Layer {
            name: name.to_string(),
            kind: LayerKind::Routing,
            index: 0,
            direction,
            pitch,
            offset: None,
            width,
            min_area: 0,
            spacing: None,
            eol: None,
            cut_spacing: None,
        }
    }

    pub fn new_cut(name: &str, width: Dbu) -> Self {
        Layer {
            name: name.to_string(),
            kind: LayerKind::Cut,
            index: 0,
            direction: Direction::Horizontal,
            pitch: 0,
            offset: None,
            width,
            min_area: 0,
            spacing: None,
            eol: None,
            cut_spacing: None,
        }
    }

    pub fn is_routing(&self) -> bool {
        self.kind == LayerKind::Routing
    }

    /// Track offset, defaulting to half a pitch.
    pub fn track_offset(&self) -> Dbu {
        self.offset.unwrap_or(self.pitch / 2)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LayerRect {
    pub layer: String,
    pub rect: Rect,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ViaDef {
    pub name: String,
    pub shapes: Vec<LayerRect>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Site {
    pub name: String,
    pub width: Dbu,
    pub height: Dbu,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum PinDirection {
    Input,
    Output,
    Inout,
}

impl PinDirection {
    pub fn as_def(&self) -> &'static str {
        match self {
            PinDirection::Input => "INPUT",
            PinDirection::Output => "OUTPUT",
            PinDirection::Inout => "INOUT",
        }
    }

    pub fn parse(s: &str) -> Option<PinDirection> {
        match s.to_ascii_uppercase().as_str() {
            "INPUT" => Some(PinDirection::Input),
            "OUTPUT" => Some(PinDirection::Output),
            "INOUT" => Some(PinDirection::Inout),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MasterPin {
    pub name: String,
    pub direction: PinDirection,
    pub shapes: Vec<LayerRect>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CellMaster {
    pub name: String,
    pub width: Dbu,
    pub height: Dbu,
    pub site: Option<String>,
    pub pins: Vec<MasterPin>,
    pub obstructions: Vec<LayerRect>,
}

impl CellMaster {
    pub fn pin(&self, name: &str) -> Option<&MasterPin> {
        self.pins.iter().find(|p| p.name == name)
    }
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct Technology {
    pub dbu_per_micron: i64,
    pub layers: Vec<Layer>,
    pub vias: Vec<ViaDef>,
    pub sites: Vec<Site>,
    pub masters: Vec<CellMaster>,
    #[serde(skip)]
    master_index: HashMap<String, usize>,
}

impl PartialEq for Technology {
    fn eq(&self, other: &Self) -> bool {
        self.dbu_per_micron == other.dbu_per_micron
            && self.layers == other.layers
            && self.vias == other.vias
            && self.sites == other.sites
            && self.masters == other.masters
    }
}

impl Technology {
    pub fn new(dbu_per_micron: i64) -> Self {
        Technology {
            dbu_per_micron,
            ..Default::default()
        }
    }

    /// Appends a layer, assigning its stack index.
    pub fn push_layer(&mut self, mut layer: Layer) {
        layer.index = self.layers.len() + 1;
        self.layers.push(layer);
    }

    pub fn push_master(&mut self, master: CellMaster) {
        self.master_index.insert(master.name.clone(), self.masters.len());
        self.masters.push(master);
    }

    pub fn reindex(&mut self) {
        self.master_index = self
            .masters
            .iter()
            .enumerate()
            .map(|(i, m)| (m.name.clone(), i))
            .collect();
    }

    pub fn master(&self, name: &str) -> Option<&CellMaster> {
        match self.master_index.get(name) {
            Some(&i) => self.masters.get(i),
            None if self.master_index.len() != self.masters.len() => self.masters.iter().find(|m| m.name == name),
            None => None,
        }
    }

    pub fn layer(&self, name: &str) -> Option<&Layer> {
        self.layers.iter().find(|l| l.name == name)
    }

    /// Position of the named layer in `layers`.
    pub fn layer_pos(&self, name: &str) -> Option<usize> {
        self.layers.iter().position(|l| l.name == name)
    }

    pub fn routing_layers(&self) -> impl Iterator<Item = &Layer> {
        self.layers.iter().filter(|l| l.is_routing())
    }

    pub fn num_routing_layers(&self) -> usize {
        self.routing_layers().count()
    }

    /// The `n`-th routing layer, 1-based.
    pub fn routing_layer(&self, n: usize) -> Option<&Layer> {
        n.checked_sub(1).and_then(|i| self.routing_layers().nth(i))
    }

    /// 1-based routing index of a named routing layer.
    pub fn routing_index(&self, name: &str) -> Option<usize> {
        self.routing_layers().position(|l| l.name == name).map(|i| i + 1)
    }

    pub fn via(&self, name: &str) -> Option<&ViaDef> {
        self.vias.iter().find(|v| v.name == name)
    }

    pub fn site(&self, name: &str) -> Option<&Site> {
        self.sites.iter().find(|s| s.name == name)
    }

    /// Routing-layer indices (1-based) spanned by a via definition, lowest
    /// first.
    pub fn via_routing_span(&self, via: &ViaDef) -> Option<(usize, usize)> {
        let mut idx: Vec<usize> = via.shapes.iter().filter_map(|s| self.routing_index(&s.layer)).collect();
        idx.sort_unstable();
        idx.dedup();
        match idx.as_slice() {
            [a, b] => Some((*a, *b)),
            _ => None,
        }
    }

    /// First via connecting routing layers `lower` and `lower + 1`.
    pub fn via_between(&self, lower: usize) -> Option<&ViaDef> {
        self.vias
            .iter()
            .find(|v| self.via_routing_span(v) == Some((lower, lower + 1)))
    }
}
