// SPDX-License-Identifier: Apache-2.0

//! Global-route solution to route-guide translation.
//!
//! Segments are rasterized to gcells per layer, each layer's gcell set is
//! covered exactly by rectangles (row runs, then vertical merging of equal
//! runs), and the cover is optionally dilated.

use std::collections::{BTreeMap, BTreeSet};

use thiserror::Error;

use crate::geom::{Point, Rect};
use crate::io::{GlobalRouteSolution, GrPoint, NetRoute, RouteGuide, RouteGuideSet};
use crate::model::{Design, GCellGrid};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum TranslateError {
    #[error("segment endpoint ({x},{y},{layer}) of net `{net}` lies outside the grid")]
    SegmentOffGrid { net: String, x: i64, y: i64, layer: usize },
    #[error("net `{0}` is routed but not in the design")]
    UnknownNet(String),
    #[error("routing layer {0} is not in the technology")]
    UnknownLayer(usize),
}

/// Per-layer sets of gcell coordinates.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct GCellSet {
    pub per_layer: BTreeMap<usize, BTreeSet<(usize, usize)>>,
}

impl GCellSet {
    pub fn insert(&mut self, layer: usize, gx: usize, gy: usize) {
        self.per_layer.entry(layer).or_default().insert((gx, gy));
    }

    pub fn contains(&self, layer: usize, gx: usize, gy: usize) -> bool {
        self.per_layer.get(&layer).is_some_and(|s| s.contains(&(gx, gy)))
    }

    pub fn len(&self) -> usize {
        self.per_layer.values().map(BTreeSet::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn is_subset(&self, other: &GCellSet) -> bool {
        self.per_layer
            .iter()
            .all(|(l, s)| s.is_empty() || other.per_layer.get(l).is_some_and(|o| s.is_subset(o)))
    }

    fn prune(mut self) -> Self {
        self.per_layer.retain(|_, s| !s.is_empty());
        self
    }
}

fn locate(net: &str, grid: &GCellGrid, p: &GrPoint) -> Result<(usize, usize), TranslateError> {
    let off = || TranslateError::SegmentOffGrid {
        net: net.to_string(),
        x: p.x,
        y: p.y,
        layer: p.layer,
    };
    if p.layer == 0 || p.layer > grid.num_layers() {
        return Err(off());
    }
    grid.gcell_of(Point::new(p.x, p.y)).ok_or_else(off)
}

/// Gcells covered by one net's segments.
pub fn net_gcells(route: &NetRoute, grid: &GCellGrid) -> Result<GCellSet, TranslateError> {
    let mut set = GCellSet::default();
    for s in &route.segments {
        let (ax, ay) = locate(&route.name, grid, &s.a)?;
        let (bx, by) = locate(&route.name, grid, &s.b)?;
        let (l0, l1) = (s.a.layer.min(s.b.layer), s.a.layer.max(s.b.layer));
        for l in l0..=l1 {
            for gx in ax.min(bx)..=ax.max(bx) {
                for gy in ay.min(by)..=ay.max(by) {
                    set.insert(l, gx, gy);
                }
            }
        }
    }
    Ok(set)
}

pub fn segments_to_gcells(
    sol: &GlobalRouteSolution,
    grid: &GCellGrid,
) -> Result<BTreeMap<String, GCellSet>, TranslateError> {
    let mut out: BTreeMap<String, GCellSet> = BTreeMap::new();
    for n in &sol.nets {
        let s = net_gcells(n, grid)?;
        let e = out.entry(n.name.clone()).or_default();
        for (l, cells) in s.per_layer {
            e.per_layer.entry(l).or_default().extend(cells);
        }
    }
    Ok(out)
}

/// Exact rectangle cover of one layer's gcells as inclusive gcell ranges
/// `(x0, y0, x1, y1)`, ordered by `(y0, x0)`.
pub fn cover_runs(cells: &BTreeSet<(usize, usize)>) -> Vec<(usize, usize, usize, usize)> {
    let mut rows: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for &(x, y) in cells {
        rows.entry(y).or_default().push(x);
    }
    let mut done = Vec::new();
    let mut active: BTreeMap<(usize, usize), usize> = BTreeMap::new();
    let mut prev_y: Option<usize> = None;
    for (y, mut xs) in rows {
        xs.sort_unstable();
        if prev_y.is_some_and(|p| p + 1 != y) {
            for ((x0, x1), y0) in std::mem::take(&mut active) {
                done.push((x0, y0, x1, prev_y.unwrap_or(y)));
            }
        }
        let mut runs = Vec::new();
        let mut i = 0;
        while i < xs.len() {
            let mut j = i;
            while j + 1 < xs.len() && xs[j + 1] == xs[j] + 1 {
                j += 1;
            }
            runs.push((xs[i], xs[j]));
            i = j + 1;
        }
        let mut next = BTreeMap::new();
        for r in runs {
            let y0 = active.remove(&r).unwrap_or(y);
            next.insert(r, y0);
        }
        for ((x0, x1), y0) in std::mem::replace(&mut active, next) {
            done.push((x0, y0, x1, y - 1));
        }
        prev_y = Some(y);
    }
    if let Some(py) = prev_y {
        for ((x0, x1), y0) in active {
            done.push((x0, y0, x1, py));
        }
    }
    done.sort_by_key(|&(x0, y0, x1, y1)| (y0, x0, y1, x1));
    done
}

fn range_rect(grid: &GCellGrid, (x0, y0, x1, y1): (usize, usize, usize, usize)) -> Rect {
    grid.gcell_rect(x0, y0).union(&grid.gcell_rect(x1, y1))
}

/// Rectangles in DBU covering each layer's gcells exactly, ordered by layer.
pub fn gcells_to_rects(cells: &GCellSet, grid: &GCellGrid) -> Vec<(Rect, usize)> {
    let mut out = Vec::new();
    for (&layer, set) in &cells.per_layer {
        for r in cover_runs(set) {
            out.push((range_rect(grid, r), layer));
        }
    }
    out
}

/// Dilates every rectangle by `radius` gcells and clips it to `die`.
pub fn expand_guides(guides: &RouteGuideSet, radius: usize, grid: &GCellGrid, die: Rect) -> RouteGuideSet {
    if radius == 0 {
        return guides.clone();
    }
    let dx = grid.x_step * radius as i64;
    let dy = grid.y_step * radius as i64;
    let mut out = RouteGuideSet::default();
    for (net, rects) in &guides.nets {
        let v = rects
            .iter()
            .filter_map(|g| {
                g.rect
                    .expand_xy(dx, dy)
                    .intersection(&die)
                    .filter(|r| !r.is_degenerate())
                    .map(|rect| RouteGuide {
                        rect,
                        layer: g.layer.clone(),
                    })
            })
            .collect();
        out.nets.insert(net.clone(), v);
    }
    out
}

/// Gcells whose area overlaps a guide rectangle on the named layer, using
/// the technology's routing-layer numbering.
pub fn gcellize(guides: &RouteGuideSet, grid: &GCellGrid, design: &Design) -> BTreeMap<String, GCellSet> {
    let mut out = BTreeMap::new();
    for (net, rects) in &guides.nets {
        let mut set = GCellSet::default();
        for g in rects {
            let Some(layer) = design.tech.routing_index(&g.layer) else {
                continue;
            };
            let ext = grid.extent();
            let Some(r) = g.rect.intersection(&ext).filter(|r| !r.is_degenerate()) else {
                continue;
            };
            let cx0 = ((r.lo.x - grid.origin.x) / grid.x_step) as usize;
            let cy0 = ((r.lo.y - grid.origin.y) / grid.y_step) as usize;
            let cx1 = ((r.hi.x - grid.origin.x + grid.x_step - 1) / grid.x_step) as usize;
            let cy1 = ((r.hi.y - grid.origin.y + grid.y_step - 1) / grid.y_step) as usize;
            for gx in cx0..cx1.min(grid.x_count) {
                for gy in cy0..cy1.min(grid.y_count) {
                    set.insert(layer, gx, gy);
                }
            }
        }
        out.insert(net.clone(), set.prune());
    }
    out
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TranslateOptions {
    pub radius: usize,
    /// Routing layers (1-based, inclusive) of the pin-box guide given to nets
    /// without a global route.
    pub fallback_layers: (usize, usize),
}

impl Default for TranslateOptions {
    fn default() -> Self {
        TranslateOptions {
            radius: 0,
            fallback_layers: (1, 2),
        }
    }
}

/// Gcell box covering a net's pin positions, on the fallback layers.
fn fallback_cells(design: &Design, net: &crate::model::Net, grid: &GCellGrid, opts: &TranslateOptions) -> GCellSet {
    let mut set = GCellSet::default();
    let cells: Vec<(usize, usize)> = net
        .pins
        .iter()
        .filter_map(|p| design.pin_position(p))
        .filter_map(|p| grid.gcell_of(p))
        .collect();
    if cells.is_empty() {
        return set;
    }
    let x0 = cells.iter().map(|c| c.0).min().unwrap_or(0);
    let x1 = cells.iter().map(|c| c.0).max().unwrap_or(0);
    let y0 = cells.iter().map(|c| c.1).min().unwrap_or(0);
    let y1 = cells.iter().map(|c| c.1).max().unwrap_or(0);
    let top = opts.fallback_layers.1.min(grid.num_layers());
    for l in opts.fallback_layers.0.max(1)..=top {
        for gx in x0..=x1 {
            for gy in y0..=y1 {
                set.insert(l, gx, gy);
            }
        }
    }
    set
}

/// Full translation: rasterize, cover, expand, with pin-box guides for nets
/// that have no routed gcells.
pub fn translate(
    sol: &GlobalRouteSolution,
    grid: &GCellGrid,
    design: &Design,
    opts: &TranslateOptions,
) -> Result<RouteGuideSet, TranslateError> {
    for n in &sol.nets {
        if design.net(&n.name).is_none() {
            return Err(TranslateError::UnknownNet(n.name.clone()));
        }
    }
    let mut cells = segments_to_gcells(sol, grid)?;
    for net in &design.nets {
        let empty = cells.get(&net.name).is_none_or(GCellSet::is_empty);
        if empty {
            let fb = fallback_cells(design, net, grid, opts);
            if !fb.is_empty() {
                cells.insert(net.name.clone(), fb);
            }
        }
    }
    let mut guides = RouteGuideSet::default();
    for (net, set) in &cells {
        let mut v = Vec::new();
        for (rect, layer) in gcells_to_rects(set, grid) {
            let name = design
                .tech
                .routing_layer(layer)
                .ok_or(TranslateError::UnknownLayer(layer))?
                .name
                .clone();
            v.push(RouteGuide { rect, layer: name });
        }
        guides.nets.insert(net.clone(), v);
    }
    Ok(expand_guides(&guides, opts.radius, grid, design.die_area))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::io::GrSegment;

    fn grid(n: usize, step: i64, layers: usize) -> GCellGrid {
        GCellGrid::uniform(Point::new(0, 0), n, n, step, step, vec![10; layers], vec![10; layers]).unwrap()
    }

    type End = (i64, i64, usize);

    fn route(segs: &[(End, End)]) -> NetRoute {
        NetRoute {
            name: "n".into(),
            id: 0,
            segments: segs
                .iter()
                .map(|(a, b)| GrSegment::new(GrPoint::new(a.0, a.1, a.2), GrPoint::new(b.0, b.1, b.2)))
                .collect(),
        }
    }

    #[test]
    fn horizontal_run_and_via() {
        let g = grid(8, 10, 3);
        let s = net_gcells(&route(&[((5, 5, 2), (35, 5, 2))]), &g).unwrap();
        assert_eq!(s.per_layer[&2].len(), 4);
        let v = net_gcells(&route(&[((15, 15, 1), (15, 15, 3))]), &g).unwrap();
        for l in 1..=3 {
            assert_eq!(v.per_layer[&l].iter().copied().collect::<Vec<_>>(), vec![(1, 1)]);
        }
    }

    #[test]
    fn off_grid_endpoint() {
        let g = grid(4, 10, 2);
        assert!(matches!(
            net_gcells(&route(&[((5, 5, 1), (55, 5, 1))]), &g),
            Err(TranslateError::SegmentOffGrid { x: 55, .. })
        ));
    }

    #[test]
    fn straight_run_is_one_rect() {
        let g = grid(8, 10, 2);
        let s = net_gcells(&route(&[((5, 5, 2), (35, 5, 2))]), &g).unwrap();
        assert_eq!(gcells_to_rects(&s, &g), vec![(Rect::new(0, 0, 40, 10), 2)]);
    }

    #[test]
    fn l_shape_is_two_rects() {
        let mut s = GCellSet::default();
        for c in [(0, 0), (1, 0), (1, 1), (1, 2)] {
            s.insert(1, c.0, c.1);
        }
        let runs = cover_runs(&s.per_layer[&1]);
        assert_eq!(runs, vec![(0, 0, 1, 0), (1, 1, 1, 2)]);
    }

    #[test]
    fn single_gcell_rect() {
        let g = grid(8, 4000, 1);
        let mut s = GCellSet::default();
        s.insert(1, 3, 5);
        assert_eq!(
            gcells_to_rects(&s, &g),
            vec![(Rect::new(12000, 20000, 16000, 24000), 1)]
        );
    }

    #[test]
    fn split_rows_and_gap_rows() {
        let mut s = BTreeSet::new();
        for c in [(0, 0), (2, 0), (0, 1), (2, 1), (0, 3)] {
            s.insert(c);
        }
        assert_eq!(cover_runs(&s), vec![(0, 0, 0, 1), (2, 0, 2, 1), (0, 3, 0, 3)]);
    }

    #[test]
    fn expansion_and_clipping() {
        let g = grid(8, 10, 1);
        let die = g.extent();
        let one = |r: Rect| {
            let mut set = RouteGuideSet::default();
            set.nets.insert(
                "n".into(),
                vec![RouteGuide {
                    rect: r,
                    layer: "M1".into(),
                }],
            );
            set
        };
        let inner = one(Rect::new(30, 30, 40, 40));
        assert_eq!(expand_guides(&inner, 0, &g, die), inner);
        assert_eq!(
            expand_guides(&inner, 1, &g, die).get("n")[0].rect,
            Rect::new(20, 20, 50, 50)
        );
        let corner = one(Rect::new(0, 0, 10, 10));
        assert_eq!(
            expand_guides(&corner, 1, &g, die).get("n")[0].rect,
            Rect::new(0, 0, 20, 20)
        );
    }
}
