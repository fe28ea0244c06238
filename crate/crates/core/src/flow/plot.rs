// SPDX-License-Identifier: Apache-2.0

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::check::CongestionMap;
use crate::geom::Rect;
use crate::io::TimingLibrary;
use crate::model::{Design, ModelError, RouteShape};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum PlotError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("routing layer {0} is not in the congestion map")]
    UnknownLayer(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CellClass {
    Sequential,
    Combinational,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PlotRect {
    pub name: String,
    pub class: CellClass,
    pub rect: Rect,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PlacementPlot {
    pub die: Rect,
    pub cells: Vec<PlotRect>,
}

/// One rectangle per instance, tagged sequential when the library marks its
/// cell sequential. Without a library every cell is combinational.
pub fn emit_placement_plot(design: &Design, lib: Option<&TimingLibrary>) -> Result<PlacementPlot, PlotError> {
    let mut cells = Vec::with_capacity(design.instances.len());
    for inst in &design.instances {
        let rect = design.instance_bbox(inst)?;
        let seq = lib
            .and_then(|l| l.cells.get(&inst.master))
            .is_some_and(|c| c.sequential);
        cells.push(PlotRect {
            name: inst.name.clone(),
            class: if seq {
                CellClass::Sequential
            } else {
                CellClass::Combinational
            },
            rect,
        });
    }
    Ok(PlacementPlot {
        die: design.die_area,
        cells,
    })
}

/// Per-gcell utilization of one layer, row 0 at the bottom of the grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Heatmap {
    pub layer: usize,
    pub width: usize,
    pub height: usize,
    pub values: Vec<Vec<f64>>,
}

/// Color ramp over utilization: dark blue at 0 through cyan and green to
/// yellow just below 1, red at or above capacity.
fn ramp(u: f64) -> [u8; 3] {
    const STOPS: [(f64, [f64; 3]); 4] = [
        (0.0, [16.0, 16.0, 96.0]),
        (0.4, [0.0, 170.0, 230.0]),
        (0.7, [40.0, 200.0, 40.0]),
        (1.0, [250.0, 220.0, 0.0]),
    ];
    if u >= 1.0 || u.is_nan() {
        return [255, 0, 0];
    }
    let u = u.max(0.0);
    let k = STOPS.iter().rposition(|s| s.0 <= u).unwrap_or(0);
    let (a, b) = (STOPS[k], STOPS[(k + 1).min(3)]);
    let t = if b.0 > a.0 { (u - a.0) / (b.0 - a.0) } else { 0.0 };
    let mix = |i: usize| (a.1[i] + (b.1[i] - a.1[i]) * t).round() as u8;
    [mix(0), mix(1), mix(2)]
}

impl Heatmap {
    /// Binary PPM (P6), one pixel per gcell, top row = highest y.
    pub fn to_ppm(&self) -> Vec<u8> {
        let mut out = format!("P6\n{} {}\n255\n", self.width, self.height).into_bytes();
        for row in self.values.iter().rev() {
            for &v in row {
                out.extend_from_slice(&ramp(v));
            }
        }
        out
    }

    /// `x,y,utilization` per gcell.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("x,y,utilization\n");
        for (y, row) in self.values.iter().enumerate() {
            for (x, v) in row.iter().enumerate() {
                let _ = writeln!(s, "{x},{y},{v:.6}");
            }
        }
        s
    }
}

pub fn emit_congestion_plot(map: &CongestionMap, layer: usize) -> Result<Heatmap, PlotError> {
    if layer == 0 || layer > map.num_layers {
        return Err(PlotError::UnknownLayer(layer));
    }
    Ok(Heatmap {
        layer,
        width: map.x_count,
        height: map.y_count,
        values: map.utilization(Some(layer)),
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LayerPlot {
    pub layer: String,
    pub color: String,
    pub rects: Vec<Rect>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RoutedPlot {
    pub die: Rect,
    pub layers: Vec<LayerPlot>,
}

/// Fixed color per routing layer number (1-based). Metal 3 to 6 are green,
/// yellow, red and orange.
pub fn layer_color(routing_index: usize) -> &'static str {
    const PALETTE: [&str; 8] = [
        "#4f6fd8", "#a050c8", "#2ca02c", "#e8d000", "#d62728", "#ff8c00", "#17becf", "#e377c2",
    ];
    PALETTE[(routing_index.max(1) - 1) % PALETTE.len()]
}

/// Routed metal per routing layer: wire rectangles and via landing pads.
/// Every routing layer is listed, empty or not.
pub fn emit_routed_plot(design: &Design) -> RoutedPlot {
    let mut by_layer: BTreeMap<usize, Vec<Rect>> = BTreeMap::new();
    for net in &design.nets {
        for r in &net.routing {
            match r {
                RouteShape::Wire {
                    layer,
                    start,
                    end,
                    width,
                } => {
                    if let Some(i) = design.tech.routing_index(layer) {
                        by_layer
                            .entry(i)
                            .or_default()
                            .push(RouteShape::wire_rect(*start, *end, *width));
                    }
                }
                RouteShape::Via { via, at } => {
                    let Some(v) = design.via_def(via) else { continue };
                    for s in &v.shapes {
                        if let Some(i) = design.tech.routing_index(&s.layer) {
                            by_layer.entry(i).or_default().push(s.rect.translate(at.x, at.y));
                        }
                    }
                }
            }
        }
    }
    let layers = design
        .tech
        .routing_layers()
        .enumerate()
        .map(|(k, l)| LayerPlot {
            layer: l.name.clone(),
            color: layer_color(k + 1).to_string(),
            rects: by_layer.remove(&(k + 1)).unwrap_or_default(),
        })
        .collect();
    RoutedPlot {
        die: design.die_area,
        layers,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gen::{scatter, toy_case, toy_library};
    use crate::geom::{Orientation, Point};
    use crate::model::{GCellGrid, Instance};

    #[test]
    fn placement_classes() {
        let mut c = toy_case(2, 1);
        c.design.instances = vec![
            Instance::new("ff", "DFF").placed_at(Point::new(0, 0), Orientation::N),
            Instance::new("inv", "INV").placed_at(Point::new(2000, 0), Orientation::N),
        ];
        c.design.reindex();
        let p = emit_placement_plot(&c.design, Some(&toy_library())).unwrap();
        let classes: Vec<CellClass> = p.cells.iter().map(|r| r.class).collect();
        assert_eq!(classes, vec![CellClass::Sequential, CellClass::Combinational]);
        c.design.instances[0].location = None;
        assert!(emit_placement_plot(&c.design, None).is_err());
        let mut c = toy_case(40, 2);
        scatter(&mut c.design, 3);
        assert_eq!(emit_placement_plot(&c.design, None).unwrap().cells.len(), 40);
    }

    #[test]
    fn heatmap_pixels() {
        let g = GCellGrid::uniform(Point::new(0, 0), 3, 2, 10, 10, vec![4, 0], vec![0, 4]).unwrap();
        let mut m = CongestionMap::empty(&g);
        let h = emit_congestion_plot(&m, 1).unwrap();
        let ppm = h.to_ppm();
        let header = b"P6\n3 2\n255\n".len();
        assert_eq!(ppm.len(), header + 3 * 2 * 3);
        assert!(ppm[header..].chunks(3).all(|p| p == ramp(0.0)));
        let e = g
            .edge_index(&crate::model::GridEdge {
                layer: 1,
                x: 1,
                y: 1,
                dir: crate::geom::Direction::Horizontal,
            })
            .unwrap();
        m.usage[e] = m.capacity[e];
        let ppm = emit_congestion_plot(&m, 1).unwrap().to_ppm();
        let px: Vec<&[u8]> = ppm[header..].chunks(3).collect();
        let hot: Vec<usize> = (0..px.len()).filter(|&i| px[i] == [255, 0, 0]).collect();
        // Top image row is grid row 1.
        assert_eq!(hot, vec![1]);
        assert_eq!(emit_congestion_plot(&m, 3), Err(PlotError::UnknownLayer(3)));
    }

    #[test]
    fn routed_layers() {
        let mut c = toy_case(2, 1);
        let p = emit_routed_plot(&c.design);
        assert_eq!(p.layers.len(), 4);
        assert!(p.layers.iter().all(|l| l.rects.is_empty()));
        c.design.nets[0].routing.push(RouteShape::Wire {
            layer: "M3".into(),
            start: Point::new(100, 100),
            end: Point::new(900, 100),
            width: 100,
        });
        let p = emit_routed_plot(&c.design);
        assert_eq!(p.layers[2].rects, vec![Rect::new(50, 50, 950, 150)]);
        assert_eq!(p.layers[2].color, "#2ca02c");
    }
}
