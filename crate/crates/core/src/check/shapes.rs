// SPDX-License-Identifier: Apache-2.0

//! Flattening a design into absolute layer shapes with owners.

use crate::geom::Rect;
use crate::model::{Design, LayerKind, ModelError, NetPin, RouteShape};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Owner {
    /// Index into `design.nets`.
    Net(usize),
    /// Obstruction or unconnected pin of the instance at this index.
    Blockage(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ShapeKind {
    Wire,
    /// Metal or cut of a via; shapes of one via share `group`.
    Via,
    Pin,
    Obstruction,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Shape {
    /// Position of the layer in `tech.layers`.
    pub layer: usize,
    pub rect: Rect,
    pub owner: Owner,
    pub kind: ShapeKind,
    /// Instance the shape comes from (pins and obstructions).
    pub inst: Option<usize>,
    /// Shapes with equal group are one electrical object (a via, or all
    /// shapes of one pin).
    pub group: usize,
}

impl Shape {
    pub fn is_routing(&self) -> bool {
        matches!(self.kind, ShapeKind::Wire | ShapeKind::Via)
    }
}

/// Every shape of a placed design. Shapes on unknown layers are dropped.
pub fn collect_shapes(design: &Design) -> Result<Vec<Shape>, ModelError> {
    let tech = &design.tech;
    let mut out = Vec::new();
    let mut group = 0usize;
    let mut connected = vec![Vec::<String>::new(); design.instances.len()];
    for (ni, net) in design.nets.iter().enumerate() {
        for p in &net.pins {
            let inst = match p {
                NetPin::Instance { inst, pin } => {
                    let Some(ii) = design.instance_idx(inst) else {
                        return Err(ModelError::UnresolvedReference {
                            name: inst.clone(),
                            context: format!("instance on net {}", net.name),
                        });
                    };
                    design.instance_bbox(&design.instances[ii])?;
                    connected[ii].push(pin.clone());
                    Some(ii)
                }
                NetPin::Port(_) => None,
            };
            group += 1;
            for s in design.net_pin_shapes(p) {
                if let Some(layer) = tech.layer_pos(&s.layer) {
                    out.push(Shape {
                        layer,
                        rect: s.rect,
                        owner: Owner::Net(ni),
                        kind: ShapeKind::Pin,
                        inst,
                        group,
                    });
                }
            }
        }
        for r in &net.routing {
            group += 1;
            match r {
                RouteShape::Wire {
                    layer,
                    start,
                    end,
                    width,
                } => {
                    if let Some(l) = tech.layer_pos(layer) {
                        out.push(Shape {
                            layer: l,
                            rect: RouteShape::wire_rect(*start, *end, *width),
                            owner: Owner::Net(ni),
                            kind: ShapeKind::Wire,
                            inst: None,
                            group,
                        });
                    }
                }
                RouteShape::Via { via, at } => {
                    let Some(def) = design.via_def(via) else {
                        continue;
                    };
                    for s in &def.shapes {
                        if let Some(l) = tech.layer_pos(&s.layer) {
                            out.push(Shape {
                                layer: l,
                                rect: s.rect.translate(at.x, at.y),
                                owner: Owner::Net(ni),
                                kind: ShapeKind::Via,
                                inst: None,
                                group,
                            });
                        }
                    }
                }
            }
        }
    }
    for (ii, inst) in design.instances.iter().enumerate() {
        design.instance_bbox(inst)?;
        let Some(m) = design.master_of(inst) else {
            continue;
        };
        group += 1;
        for s in design.obstruction_shapes(inst) {
            if let Some(layer) = tech.layer_pos(&s.layer) {
                out.push(Shape {
                    layer,
                    rect: s.rect,
                    owner: Owner::Blockage(ii),
                    kind: ShapeKind::Obstruction,
                    inst: Some(ii),
                    group,
                });
            }
        }
        for p in &m.pins {
            if connected[ii].contains(&p.name) {
                continue;
            }
            group += 1;
            for s in design.pin_shapes(inst, &p.name) {
                if let Some(layer) = tech.layer_pos(&s.layer) {
                    out.push(Shape {
                        layer,
                        rect: s.rect,
                        owner: Owner::Blockage(ii),
                        kind: ShapeKind::Pin,
                        inst: Some(ii),
                        group,
                    });
                }
            }
        }
    }
    Ok(out)
}

/// Shapes bucketed by layer position.
pub fn by_layer(design: &Design, shapes: &[Shape]) -> Vec<Vec<usize>> {
    let mut v = vec![Vec::new(); design.tech.layers.len()];
    for (i, s) in shapes.iter().enumerate() {
        v[s.layer].push(i);
    }
    v
}

pub fn is_cut_layer(design: &Design, layer: usize) -> bool {
    design.tech.layers[layer].kind == LayerKind::Cut
}
