// SPDX-License-Identifier: Apache-2.0

use std::collections::{BTreeMap, HashMap};

use super::connectivity::Dsu;
use super::shapes::{by_layer, collect_shapes, is_cut_layer, Owner, Shape, ShapeKind};
use super::{sort_violations, CheckError, Violation, ViolationKind};
use crate::geom::{for_each_touching_pair, union_area, Dbu, Rect};
use crate::model::{Design, EolRule};

fn owner_names(design: &Design, owners: &[Owner]) -> (Vec<String>, Vec<String>) {
    let mut nets = Vec::new();
    let mut insts = Vec::new();
    for o in owners {
        match *o {
            Owner::Net(n) => nets.push(design.nets[n].name.clone()),
            Owner::Blockage(i) => insts.push(design.instances[i].name.clone()),
        }
    }
    nets.sort();
    nets.dedup();
    insts.sort();
    insts.dedup();
    (nets, insts)
}

fn pair_violation(design: &Design, kind: ViolationKind, layer: usize, loc: Rect, a: &Shape, b: &Shape) -> Violation {
    let (nets, instances) = owner_names(design, &[a.owner, b.owner]);
    let mut v = Violation::new(kind, loc);
    v.layer = Some(design.tech.layers[layer].name.clone());
    v.nets = nets;
    v.instances = instances;
    v
}

/// True when a positive-area overlap of `a` and `b` counts as a short.
pub(crate) fn is_short_pair(a: &Shape, b: &Shape) -> bool {
    if a.owner == b.owner {
        return false;
    }
    if !matches!(a.owner, Owner::Net(_)) && !matches!(b.owner, Owner::Net(_)) {
        return false;
    }
    // A cell's own pin sitting on its own obstruction is not a short.
    !(a.inst.is_some() && a.inst == b.inst && !a.is_routing() && !b.is_routing())
}

/// Same-layer positive-area overlaps between different nets, or a net and
/// a blockage. Touching shapes are not shorts.
pub fn check_shorts(design: &Design) -> Result<Vec<Violation>, CheckError> {
    let shapes = collect_shapes(design)?;
    let mut out = Vec::new();
    for (layer, idx) in by_layer(design, &shapes).into_iter().enumerate() {
        let rects: Vec<Rect> = idx.iter().map(|&i| shapes[i].rect).collect();
        for_each_touching_pair(&rects, |a, b| {
            let (sa, sb) = (&shapes[idx[a]], &shapes[idx[b]]);
            if !is_short_pair(sa, sb) {
                return;
            }
            if let Some(ov) = rects[a].intersection(&rects[b]).filter(|r| !r.is_degenerate()) {
                out.push(pair_violation(design, ViolationKind::Short, layer, ov, sa, sb));
            }
        });
    }
    sort_violations(&mut out);
    Ok(out)
}

/// Rectangle spanning the space between two rectangles; where projections
/// overlap it spans the shared range.
pub(crate) fn gap_rect(a: &Rect, b: &Rect) -> Rect {
    let span = |alo: Dbu, ahi: Dbu, blo: Dbu, bhi: Dbu| {
        let (lo, hi) = (alo.max(blo), ahi.min(bhi));
        if lo <= hi {
            (lo, hi)
        } else {
            (hi, lo)
        }
    };
    let (x0, x1) = span(a.lo.x, a.hi.x, b.lo.x, b.hi.x);
    let (y0, y1) = span(a.lo.y, a.hi.y, b.lo.y, b.hi.y);
    Rect::new(x0, y0, x1, y1)
}

/// Squared edge-to-edge distance and parallel run length. The run length
/// is negative for diagonal pairs.
pub(crate) fn distance_and_prl(a: &Rect, b: &Rect) -> (i128, Dbu) {
    let (dx, dy) = a.gaps(b);
    let d2 = dx as i128 * dx as i128 + dy as i128 * dy as i128;
    let prl = if dx > 0 && dy > 0 {
        -1
    } else if dx > 0 {
        a.hi.y.min(b.hi.y) - a.lo.y.max(b.lo.y)
    } else {
        a.hi.x.min(b.hi.x) - a.lo.x.max(b.lo.x)
    };
    (d2, prl)
}

fn isqrt(v: i128) -> i64 {
    if v <= 0 {
        return 0;
    }
    let mut r = (v as f64).sqrt() as i128;
    while r * r > v {
        r -= 1;
    }
    while (r + 1) * (r + 1) <= v {
        r += 1;
    }
    r as i64
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Side {
    Top,
    Bottom,
    Right,
    Left,
}

/// An end-of-line candidate edge of a rectangle.
#[derive(Debug, Clone, Copy)]
pub(crate) struct EolEdge {
    pub side: Side,
    /// Region ahead of the edge that must be clear of other nets.
    pub region: Rect,
    /// One-unit strip just outside the edge.
    pub probe: Rect,
}

/// Edges of `r` shorter than the rule's width.
pub(crate) fn eol_edges(r: &Rect, rule: &EolRule) -> Vec<EolEdge> {
    let (s, w) = (rule.eol_space, rule.eol_within);
    let mut out = Vec::new();
    if r.width() < rule.eol_width {
        out.push(EolEdge {
            side: Side::Top,
            region: Rect::new(r.lo.x - w, r.hi.y, r.hi.x + w, r.hi.y + s),
            probe: Rect::new(r.lo.x, r.hi.y, r.hi.x, r.hi.y + 1),
        });
        out.push(EolEdge {
            side: Side::Bottom,
            region: Rect::new(r.lo.x - w, r.lo.y - s, r.hi.x + w, r.lo.y),
            probe: Rect::new(r.lo.x, r.lo.y - 1, r.hi.x, r.lo.y),
        });
    }
    if r.height() < rule.eol_width {
        out.push(EolEdge {
            side: Side::Right,
            region: Rect::new(r.hi.x, r.lo.y - w, r.hi.x + s, r.hi.y + w),
            probe: Rect::new(r.hi.x, r.lo.y, r.hi.x + 1, r.hi.y),
        });
        out.push(EolEdge {
            side: Side::Left,
            region: Rect::new(r.lo.x - s, r.lo.y - w, r.lo.x, r.hi.y + w),
            probe: Rect::new(r.lo.x - 1, r.lo.y, r.lo.x, r.hi.y),
        });
    }
    out
}

impl EolEdge {
    /// True when same-net metal `o` makes this edge part of a longer
    /// polygon edge or covers it from outside.
    pub fn extended_by(&self, r: &Rect, o: &Rect) -> bool {
        if o.overlaps(&self.probe) {
            return true;
        }
        let along = |lo: Dbu, hi: Dbu, olo: Dbu, ohi: Dbu| olo <= hi && ohi >= lo && (olo < lo || ohi > hi);
        match self.side {
            Side::Top => o.hi.y == r.hi.y && o.lo.y < r.hi.y && along(r.lo.x, r.hi.x, o.lo.x, o.hi.x),
            Side::Bottom => o.lo.y == r.lo.y && o.hi.y > r.lo.y && along(r.lo.x, r.hi.x, o.lo.x, o.hi.x),
            Side::Right => o.hi.x == r.hi.x && o.lo.x < r.hi.x && along(r.lo.y, r.hi.y, o.lo.y, o.hi.y),
            Side::Left => o.lo.x == r.lo.x && o.hi.x > r.lo.x && along(r.lo.y, r.hi.y, o.lo.y, o.hi.y),
        }
    }

    /// Distance from the edge to `o`.
    pub fn distance(&self, r: &Rect, o: &Rect) -> Dbu {
        match self.side {
            Side::Top => o.lo.y - r.hi.y,
            Side::Bottom => r.lo.y - o.hi.y,
            Side::Right => o.lo.x - r.hi.x,
            Side::Left => r.lo.x - o.hi.x,
        }
        .max(0)
    }
}

/// PRL, end-of-line and cut spacing between routing shapes (wire and via
/// metal, via cuts) of different nets. Positive-area overlaps are left to
/// the short check. The end-of-line check is the basic LEF57 form.
pub fn check_spacing(design: &Design) -> Result<Vec<Violation>, CheckError> {
    let shapes: Vec<Shape> = collect_shapes(design)?.into_iter().filter(|s| s.is_routing()).collect();
    let mut out = Vec::new();
    for (layer, idx) in by_layer(design, &shapes).into_iter().enumerate() {
        if idx.is_empty() {
            continue;
        }
        let ldef = &design.tech.layers[layer];
        if is_cut_layer(design, layer) {
            let Some(cs) = ldef.cut_spacing else {
                return Err(CheckError::MissingRule(ldef.name.clone()));
            };
            let half = (cs + 1) / 2;
            let rects: Vec<Rect> = idx.iter().map(|&i| shapes[i].rect.expand(half)).collect();
            for_each_touching_pair(&rects, |a, b| {
                let (sa, sb) = (&shapes[idx[a]], &shapes[idx[b]]);
                if sa.owner == sb.owner || sa.rect.overlaps(&sb.rect) {
                    return;
                }
                let (d2, _) = distance_and_prl(&sa.rect, &sb.rect);
                if d2 < cs as i128 * cs as i128 {
                    let mut v = pair_violation(
                        design,
                        ViolationKind::CutSpacing,
                        layer,
                        gap_rect(&sa.rect, &sb.rect),
                        sa,
                        sb,
                    );
                    v.measured = Some(isqrt(d2));
                    v.required = Some(cs);
                    out.push(v);
                }
            });
            continue;
        }
        let Some(table) = &ldef.spacing else {
            return Err(CheckError::MissingRule(ldef.name.clone()));
        };
        let mut reach = table.max_spacing();
        if let Some(e) = &ldef.eol {
            reach = reach.max(e.eol_space + e.eol_within);
        }
        let half = (reach + 1) / 2;
        let rects: Vec<Rect> = idx.iter().map(|&i| shapes[i].rect.expand(half)).collect();
        let mut near: HashMap<usize, Vec<usize>> = HashMap::new();
        for_each_touching_pair(&rects, |a, b| {
            let (sa, sb) = (&shapes[idx[a]], &shapes[idx[b]]);
            near.entry(a).or_default().push(b);
            near.entry(b).or_default().push(a);
            if sa.owner == sb.owner || sa.rect.overlaps(&sb.rect) {
                return;
            }
            let (d2, prl) = distance_and_prl(&sa.rect, &sb.rect);
            let width = sa.rect.min_side().max(sb.rect.min_side());
            let req = table.lookup(width, prl);
            if d2 < req as i128 * req as i128 {
                let mut v = pair_violation(
                    design,
                    ViolationKind::PrlSpacing,
                    layer,
                    gap_rect(&sa.rect, &sb.rect),
                    sa,
                    sb,
                );
                v.measured = Some(isqrt(d2));
                v.required = Some(req);
                out.push(v);
            }
        });
        let Some(rule) = ldef.eol else {
            continue;
        };
        for (a, &ia) in idx.iter().enumerate() {
            let sa = &shapes[ia];
            let others = near.get(&a).map(Vec::as_slice).unwrap_or(&[]);
            for edge in eol_edges(&sa.rect, &rule) {
                let extended = others.iter().any(|&b| {
                    let sb = &shapes[idx[b]];
                    sb.owner == sa.owner && edge.extended_by(&sa.rect, &sb.rect)
                });
                if extended {
                    continue;
                }
                for &b in others {
                    let sb = &shapes[idx[b]];
                    if sb.owner == sa.owner || sb.rect.overlaps(&sa.rect) || !sb.rect.overlaps(&edge.region) {
                        continue;
                    }
                    let loc = edge.region.intersection(&sb.rect).unwrap_or(edge.region);
                    let mut v = pair_violation(design, ViolationKind::EolSpacing, layer, loc, sa, sb);
                    v.measured = Some(edge.distance(&sa.rect, &sb.rect));
                    v.required = Some(rule.eol_space);
                    out.push(v);
                }
            }
        }
    }
    sort_violations(&mut out);
    Ok(out)
}

/// Per net and routing layer, merges touching metal (routing and pin
/// shapes) into polygons and flags polygons that contain routing metal and
/// fall under the layer's minimum area.
pub fn check_min_area(design: &Design) -> Result<Vec<Violation>, CheckError> {
    let shapes = collect_shapes(design)?;
    let mut groups: BTreeMap<(usize, usize), Vec<usize>> = BTreeMap::new();
    for (i, s) in shapes.iter().enumerate() {
        if let Owner::Net(n) = s.owner {
            if !is_cut_layer(design, s.layer) && matches!(s.kind, ShapeKind::Wire | ShapeKind::Via | ShapeKind::Pin) {
                groups.entry((n, s.layer)).or_default().push(i);
            }
        }
    }
    let mut out = Vec::new();
    for ((net, layer), idx) in groups {
        let min_area = design.tech.layers[layer].min_area;
        if min_area <= 0 || idx.iter().all(|&i| !shapes[i].is_routing()) {
            continue;
        }
        let rects: Vec<Rect> = idx.iter().map(|&i| shapes[i].rect).collect();
        let mut dsu = Dsu::new(rects.len());
        for_each_touching_pair(&rects, |a, b| {
            if rects[a].abuts_or_overlaps(&rects[b]) {
                dsu.union(a, b);
            }
        });
        let mut comps: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
        for k in 0..rects.len() {
            comps.entry(dsu.find(k)).or_default().push(k);
        }
        for members in comps.values() {
            if !members.iter().any(|&k| shapes[idx[k]].is_routing()) {
                continue;
            }
            let rs: Vec<Rect> = members.iter().map(|&k| rects[k]).collect();
            let area = union_area(&rs);
            if area < min_area {
                let mut v = Violation::new(ViolationKind::MinArea, Rect::bbox_of(&rs).unwrap_or_default());
                v.layer = Some(design.tech.layers[layer].name.clone());
                v.nets = vec![design.nets[net].name.clone()];
                v.measured = Some(area);
                v.required = Some(min_area);
                out.push(v);
            }
        }
    }
    sort_violations(&mut out);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::geom::{Direction, Point};
    use crate::model::{Layer, Net, RouteShape, SpacingTable, Technology};

    fn tech() -> Technology {
        let mut t = Technology::new(2000);
        let mut m1 = Layer::new_routing("M1", Direction::Horizontal, 400, 100);
        m1.spacing = Some(SpacingTable {
            prls: vec![0, 1000],
            widths: vec![0, 300],
            spacing: vec![vec![200, 200], vec![200, 400]],
        });
        m1.min_area = 20_000;
        t.push_layer(m1);
        t
    }

    fn wire(x0: i64, y0: i64, x1: i64, y1: i64) -> RouteShape {
        RouteShape::Wire {
            layer: "M1".into(),
            start: Point::new(x0, y0),
            end: Point::new(x1, y1),
            width: 100,
        }
    }

    fn design(t: Technology, nets: Vec<Vec<RouteShape>>) -> Design {
        let mut d = Design::new("t", Arc::new(t));
        d.die_area = Rect::new(0, 0, 10_000, 10_000);
        for (k, r) in nets.into_iter().enumerate() {
            let mut n = Net::new(&format!("n{k}"));
            n.routing = r;
            d.nets.push(n);
        }
        d.reindex();
        d
    }

    #[test]
    fn prl_gap_boundary() {
        // Wire rects extend half a width past the endpoints.
        let d = design(
            tech(),
            vec![vec![wire(1000, 1000, 2000, 1000)], vec![wire(1000, 1290, 2000, 1290)]],
        );
        let v = check_spacing(&d).unwrap();
        assert_eq!(v.len(), 1);
        assert_eq!((v[0].measured, v[0].required), (Some(190), Some(200)));
        let d = design(
            tech(),
            vec![vec![wire(1000, 1000, 2000, 1000)], vec![wire(1000, 1300, 2000, 1300)]],
        );
        assert!(check_spacing(&d).unwrap().is_empty());
    }

    #[test]
    fn crossing_short_only_on_same_layer() {
        let d = design(
            tech(),
            vec![vec![wire(1000, 1000, 2000, 1000)], vec![wire(1500, 500, 1500, 1500)]],
        );
        let v = check_shorts(&d).unwrap();
        assert_eq!(v.len(), 1);
        assert_eq!(v[0].location, Rect::new(1450, 950, 1550, 1050));
        assert_eq!(v[0].nets, vec!["n0", "n1"]);
    }

    #[test]
    fn touching_is_not_short() {
        let d = design(
            tech(),
            vec![vec![wire(1000, 1000, 2000, 1000)], vec![wire(1000, 1100, 2000, 1100)]],
        );
        assert!(check_shorts(&d).unwrap().is_empty());
        assert_eq!(check_spacing(&d).unwrap()[0].measured, Some(0));
    }

    #[test]
    fn lone_stub_and_merged_stubs() {
        let d = design(tech(), vec![vec![wire(1000, 1000, 1000, 1000)]]);
        let v = check_min_area(&d).unwrap();
        assert_eq!(v.len(), 1);
        assert_eq!(v[0].measured, Some(10_000));
        let d = design(
            tech(),
            vec![vec![wire(1000, 1000, 1000, 1000), wire(1100, 1000, 1100, 1000)]],
        );
        assert!(check_min_area(&d).unwrap().is_empty());
    }

    #[test]
    fn missing_rule() {
        let mut t = tech();
        t.layers[0].spacing = None;
        let d = design(t, vec![vec![wire(0, 0, 100, 0)]]);
        assert_eq!(check_spacing(&d), Err(CheckError::MissingRule("M1".into())));
    }

    #[test]
    fn end_of_line() {
        let mut t = tech();
        t.layers[0].eol = Some(EolRule {
            eol_space: 300,
            eol_width: 150,
            eol_within: 50,
        });
        // Vertical stub of width 100 ending at y=1050; other net 250 above it,
        // offset sideways so there is no parallel run.
        let stub = RouteShape::Wire {
            layer: "M1".into(),
            start: Point::new(1000, 500),
            end: Point::new(1000, 1000),
            width: 100,
        };
        let other = wire(1120, 1350, 1500, 1350);
        let d = design(t.clone(), vec![vec![stub.clone()], vec![other.clone()]]);
        let eol: Vec<_> = check_spacing(&d)
            .unwrap()
            .into_iter()
            .filter(|v| v.kind == ViolationKind::EolSpacing)
            .collect();
        assert_eq!(eol.len(), 1);
        assert_eq!((eol[0].measured, eol[0].required), (Some(250), Some(300)));
        // Same-net metal continuing past the edge removes the end of line.
        let d = design(
            t.clone(),
            vec![vec![stub.clone(), wire(1000, 1100, 1000, 1100)], vec![other.clone()]],
        );
        let measured: Vec<_> = check_spacing(&d)
            .unwrap()
            .into_iter()
            .filter(|v| v.kind == ViolationKind::EolSpacing)
            .map(|v| v.measured)
            .collect();
        assert_eq!(measured, vec![Some(150)]);
        // So does an L corner whose outer edge runs on past the stub.
        let d = design(
            t,
            vec![
                vec![stub, wire(1000, 1000, 1100, 1000)],
                vec![wire(900, 1350, 950, 1350)],
            ],
        );
        assert!(check_spacing(&d)
            .unwrap()
            .iter()
            .all(|v| v.kind != ViolationKind::EolSpacing));
    }
}
