// SPDX-License-Identifier: Apache-2.0

//! Random generators and brute-force reference implementations shared by
//! the integration tests. Nothing here calls into the code under test
//! except to read plain data.

#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet, HashMap};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use rdf_core::check::{Violation, ViolationKind};
use rdf_core::io::{
    GlobalRouteSolution, GrPoint, GrSegment, Lut, NetRoute, Netlist, RouteGuide, RouteGuideSet, TimingLibrary,
};
use rdf_core::{Constraints, Design, Direction, GCellGrid, Layer, LayerKind, Point, Rect, RouteShape, Technology};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

// ---------------------------------------------------------------- grids

pub fn random_grid(r: &mut ChaCha8Rng, max_xy: usize, max_layers: usize) -> GCellGrid {
    let xc = r.gen_range(1..=max_xy);
    let yc = r.gen_range(1..=max_xy);
    let layers = r.gen_range(1..=max_layers);
    let origin = Point::new(r.gen_range(-500..500), r.gen_range(-500..500));
    let (xs, ys) = (r.gen_range(2..200), r.gen_range(2..200));
    let h = (0..layers).map(|_| r.gen_range(0..40)).collect();
    let v = (0..layers).map(|_| r.gen_range(0..40)).collect();
    GCellGrid::uniform(origin, xc, yc, xs, ys, h, v).expect("valid grid")
}

fn point_in(r: &mut ChaCha8Rng, g: &GCellGrid, gx: usize, gy: usize, centered: bool) -> (i64, i64) {
    let lo = (g.origin.x + gx as i64 * g.x_step, g.origin.y + gy as i64 * g.y_step);
    if centered {
        (lo.0 + g.x_step / 2, lo.1 + g.y_step / 2)
    } else {
        (lo.0 + r.gen_range(0..g.x_step), lo.1 + r.gen_range(0..g.y_step))
    }
}

/// Axis-parallel random walks over the grid. Half the solutions use gcell
/// centers, the others arbitrary points inside gcells.
pub fn random_solution(r: &mut ChaCha8Rng, g: &GCellGrid, max_nets: usize) -> GlobalRouteSolution {
    let layers = g.horizontal_capacity.len();
    let centered = r.gen_bool(0.5);
    let mut sol = GlobalRouteSolution::default();
    for id in 0..r.gen_range(0..=max_nets) {
        let (mut gx, mut gy) = (r.gen_range(0..g.x_count), r.gen_range(0..g.y_count));
        let mut layer = r.gen_range(1..=layers);
        let mut at = point_in(r, g, gx, gy, centered);
        let mut segments = Vec::new();
        for _ in 0..r.gen_range(0..12) {
            let a = GrPoint::new(at.0, at.1, layer);
            let b = match r.gen_range(0..3) {
                0 => {
                    gx = r.gen_range(0..g.x_count);
                    let x = point_in(r, g, gx, gy, centered).0;
                    at.0 = x;
                    GrPoint::new(x, at.1, layer)
                }
                1 => {
                    gy = r.gen_range(0..g.y_count);
                    let y = point_in(r, g, gx, gy, centered).1;
                    at.1 = y;
                    GrPoint::new(at.0, y, layer)
                }
                _ => {
                    layer = r.gen_range(1..=layers);
                    GrPoint::new(at.0, at.1, layer)
                }
            };
            segments.push(GrSegment::new(a, b));
        }
        sol.nets.push(NetRoute {
            name: format!("net{id}_{}", r.gen_range(0..1000)),
            id,
            segments,
        });
    }
    // Names must be unique for per-name comparisons.
    let mut seen = BTreeSet::new();
    sol.nets.retain(|n| seen.insert(n.name.clone()));
    sol
}

/// Per-net gcell edges crossed, rasterized directly from DBU coordinates:
/// `(layer, x, y, horizontal)` with the edge between `(x,y)` and its +x or +y
/// neighbor.
pub fn rasterize_edges(net: &NetRoute, g: &GCellGrid) -> BTreeSet<(usize, usize, usize, bool)> {
    let cell = |x: i64, y: i64| {
        (
            (x - g.origin.x).div_euclid(g.x_step) as usize,
            (y - g.origin.y).div_euclid(g.y_step) as usize,
        )
    };
    let mut out = BTreeSet::new();
    for s in &net.segments {
        if s.a.layer != s.b.layer {
            continue;
        }
        let (ax, ay) = cell(s.a.x, s.a.y);
        let (bx, by) = cell(s.b.x, s.b.y);
        assert!(ax == bx || ay == by, "generator only makes axis-parallel segments");
        for x in ax.min(bx)..ax.max(bx) {
            out.insert((s.a.layer, x, ay, true));
        }
        for y in ay.min(by)..ay.max(by) {
            out.insert((s.a.layer, ax, y, false));
        }
    }
    out
}

// ---------------------------------------------------------------- guides

pub fn random_name(r: &mut ChaCha8Rng) -> String {
    const CH: &[u8] = b"abcdefghijklmnopqrstuvwxyzABCXYZ0123456789_/[]$.";
    let n = r.gen_range(1..12);
    let mut s: String = (0..n).map(|_| CH[r.gen_range(0..CH.len())] as char).collect();
    if s.starts_with(|c: char| c.is_ascii_digit()) {
        s.insert(0, 'n');
    }
    s
}

pub fn random_guides(r: &mut ChaCha8Rng) -> RouteGuideSet {
    let mut g = RouteGuideSet::default();
    for _ in 0..r.gen_range(0..20) {
        let rects = (0..r.gen_range(0..8))
            .map(|_| {
                let (x, y) = (r.gen_range(-100_000..100_000), r.gen_range(-100_000..100_000));
                RouteGuide {
                    rect: Rect::new(x, y, x + r.gen_range(1..50_000), y + r.gen_range(1..50_000)),
                    layer: format!("M{}", r.gen_range(1..10)),
                }
            })
            .collect();
        g.nets.insert(random_name(r), rects);
    }
    g
}

/// Technology with `n` alternating routing layers named M1..Mn.
pub fn routing_tech(n: usize) -> Technology {
    let mut t = Technology::new(2000);
    for k in 0..n {
        let dir = if k % 2 == 0 {
            Direction::Horizontal
        } else {
            Direction::Vertical
        };
        t.push_layer(Layer::new_routing(&format!("M{}", k + 1), dir, 200, 100));
    }
    t
}

// ---------------------------------------------------------------- shapes

#[derive(Debug, Clone)]
pub struct FlatShape {
    pub layer: usize,
    pub rect: Rect,
    pub net: usize,
}

/// Absolute routing shapes of every net: wire rectangles from their
/// centerlines and translated via geometry.
pub fn flatten_routing(d: &Design) -> Vec<FlatShape> {
    let pos = |name: &str| d.tech.layers.iter().position(|l| l.name == name).expect("known layer");
    let mut out = Vec::new();
    for (ni, net) in d.nets.iter().enumerate() {
        for s in &net.routing {
            match s {
                RouteShape::Wire {
                    layer,
                    start,
                    end,
                    width,
                } => {
                    let lo = width / 2;
                    let hi = width - lo;
                    let rect = Rect::new(
                        start.x.min(end.x) - lo,
                        start.y.min(end.y) - lo,
                        start.x.max(end.x) + hi,
                        start.y.max(end.y) + hi,
                    );
                    out.push(FlatShape {
                        layer: pos(layer),
                        rect,
                        net: ni,
                    });
                }
                RouteShape::Via { via, at } => {
                    let v = d.tech.vias.iter().find(|v| &v.name == via).expect("known via");
                    for s in &v.shapes {
                        let rect = Rect::new(
                            s.rect.lo.x + at.x,
                            s.rect.lo.y + at.y,
                            s.rect.hi.x + at.x,
                            s.rect.hi.y + at.y,
                        );
                        out.push(FlatShape {
                            layer: pos(&s.layer),
                            rect,
                            net: ni,
                        });
                    }
                }
            }
        }
    }
    out
}

/// Comparable form of a violation.
pub type VKey = (
    String,
    Option<String>,
    (i64, i64, i64, i64),
    Vec<String>,
    Vec<String>,
    Option<i64>,
    Option<i64>,
);

pub fn vkey(v: &Violation) -> VKey {
    let r = v.location;
    (
        format!("{:?}", v.kind),
        v.layer.clone(),
        (r.lo.x, r.lo.y, r.hi.x, r.hi.y),
        v.nets.clone(),
        v.instances.clone(),
        v.measured,
        v.required,
    )
}

fn key(
    kind: ViolationKind,
    layer: Option<&str>,
    r: Rect,
    nets: Vec<String>,
    insts: Vec<String>,
    m: Option<i64>,
    q: Option<i64>,
) -> VKey {
    (
        format!("{kind:?}"),
        layer.map(str::to_string),
        (r.lo.x, r.lo.y, r.hi.x, r.hi.y),
        nets,
        insts,
        m,
        q,
    )
}

fn isect(a: &Rect, b: &Rect) -> Option<Rect> {
    // Rect::new normalizes corners, so test before building.
    let (x0, y0, x1, y1) = (
        a.lo.x.max(b.lo.x),
        a.lo.y.max(b.lo.y),
        a.hi.x.min(b.hi.x),
        a.hi.y.min(b.hi.y),
    );
    (x0 <= x1 && y0 <= y1).then(|| Rect::new(x0, y0, x1, y1))
}

fn positive_overlap(a: &Rect, b: &Rect) -> Option<Rect> {
    isect(a, b).filter(|r| r.lo.x < r.hi.x && r.lo.y < r.hi.y)
}

fn pair_nets(d: &Design, a: usize, b: usize) -> Vec<String> {
    let mut v = vec![d.nets[a].name.clone(), d.nets[b].name.clone()];
    v.sort();
    v.dedup();
    v
}

pub fn oracle_shorts(d: &Design, shapes: &[FlatShape]) -> BTreeSet<VKey> {
    let mut out = BTreeSet::new();
    for i in 0..shapes.len() {
        for j in i + 1..shapes.len() {
            let (a, b) = (&shapes[i], &shapes[j]);
            if a.layer != b.layer || a.net == b.net {
                continue;
            }
            if let Some(ov) = positive_overlap(&a.rect, &b.rect) {
                out.insert(key(
                    ViolationKind::Short,
                    Some(&d.tech.layers[a.layer].name),
                    ov,
                    pair_nets(d, a.net, b.net),
                    vec![],
                    None,
                    None,
                ));
            }
        }
    }
    out
}

/// Overlaps between placed instance boxes.
pub fn oracle_overlaps(d: &Design) -> BTreeSet<VKey> {
    let boxes: Vec<Rect> = d
        .instances
        .iter()
        .map(|i| {
            let m = d.tech.master(&i.master).expect("known master");
            let p = i.location.expect("placed");
            Rect::new(p.x, p.y, p.x + m.width, p.y + m.height)
        })
        .collect();
    let mut out = BTreeSet::new();
    for i in 0..boxes.len() {
        for j in i + 1..boxes.len() {
            if let Some(ov) = positive_overlap(&boxes[i], &boxes[j]) {
                let mut names = vec![d.instances[i].name.clone(), d.instances[j].name.clone()];
                names.sort();
                out.insert(key(ViolationKind::Overlap, None, ov, vec![], names, None, None));
            }
        }
    }
    out
}

fn pick(axis: &[i64], v: i64) -> usize {
    (1..axis.len()).filter(|&i| v > axis[i]).max().unwrap_or(0)
}

fn floor_sqrt(v: i128) -> i64 {
    let mut lo: i128 = 0;
    let mut hi: i128 = 1 << 32;
    while lo < hi {
        let mid = (lo + hi + 1) / 2;
        if mid * mid <= v {
            lo = mid;
        } else {
            hi = mid - 1;
        }
    }
    lo as i64
}

fn gap_box(a: &Rect, b: &Rect) -> Rect {
    let f = |alo: i64, ahi: i64, blo: i64, bhi: i64| {
        let (lo, hi) = (alo.max(blo), ahi.min(bhi));
        if lo <= hi {
            (lo, hi)
        } else {
            (ahi.min(bhi), alo.max(blo))
        }
    };
    let (x0, x1) = f(a.lo.x, a.hi.x, b.lo.x, b.hi.x);
    let (y0, y1) = f(a.lo.y, a.hi.y, b.lo.y, b.hi.y);
    Rect::new(x0, y0, x1, y1)
}

/// Spacing rules between every pair of different-net shapes: run-length
/// table on metal, Euclidean cut spacing, and basic end-of-line.
pub fn oracle_spacing(d: &Design, shapes: &[FlatShape]) -> BTreeSet<VKey> {
    let mut out = BTreeSet::new();
    for i in 0..shapes.len() {
        for j in i + 1..shapes.len() {
            let (a, b) = (&shapes[i], &shapes[j]);
            if a.layer != b.layer || a.net == b.net || positive_overlap(&a.rect, &b.rect).is_some() {
                continue;
            }
            let l = &d.tech.layers[a.layer];
            let dx = (b.rect.lo.x - a.rect.hi.x).max(a.rect.lo.x - b.rect.hi.x).max(0);
            let dy = (b.rect.lo.y - a.rect.hi.y).max(a.rect.lo.y - b.rect.hi.y).max(0);
            let d2 = (dx as i128).pow(2) + (dy as i128).pow(2);
            let (kind, req) = if l.kind == LayerKind::Cut {
                (ViolationKind::CutSpacing, l.cut_spacing.expect("cut rule"))
            } else {
                let t = l.spacing.as_ref().expect("spacing table");
                let prl = if dx > 0 && dy > 0 {
                    -1
                } else if dx > 0 {
                    a.rect.hi.y.min(b.rect.hi.y) - a.rect.lo.y.max(b.rect.lo.y)
                } else {
                    a.rect.hi.x.min(b.rect.hi.x) - a.rect.lo.x.max(b.rect.lo.x)
                };
                let side = |r: &Rect| (r.hi.x - r.lo.x).min(r.hi.y - r.lo.y);
                let w = side(&a.rect).max(side(&b.rect));
                (
                    ViolationKind::PrlSpacing,
                    t.spacing[pick(&t.widths, w)][pick(&t.prls, prl)],
                )
            };
            if d2 < (req as i128).pow(2) {
                out.insert(key(
                    kind,
                    Some(&l.name),
                    gap_box(&a.rect, &b.rect),
                    pair_nets(d, a.net, b.net),
                    vec![],
                    Some(floor_sqrt(d2)),
                    Some(req),
                ));
            }
        }
    }
    // End of line: every edge narrower than the rule, unless same-net metal
    // continues it.
    for a in shapes {
        let l = &d.tech.layers[a.layer];
        let Some(rule) = l.eol else { continue };
        let r = a.rect;
        let (s, w) = (rule.eol_space, rule.eol_within);
        // (region, probe, distance function, edge line test)
        let mut edges: Vec<(Rect, Rect, u8)> = Vec::new();
        if r.hi.x - r.lo.x < rule.eol_width {
            edges.push((
                Rect::new(r.lo.x - w, r.hi.y, r.hi.x + w, r.hi.y + s),
                Rect::new(r.lo.x, r.hi.y, r.hi.x, r.hi.y + 1),
                0,
            ));
            edges.push((
                Rect::new(r.lo.x - w, r.lo.y - s, r.hi.x + w, r.lo.y),
                Rect::new(r.lo.x, r.lo.y - 1, r.hi.x, r.lo.y),
                1,
            ));
        }
        if r.hi.y - r.lo.y < rule.eol_width {
            edges.push((
                Rect::new(r.hi.x, r.lo.y - w, r.hi.x + s, r.hi.y + w),
                Rect::new(r.hi.x, r.lo.y, r.hi.x + 1, r.hi.y),
                2,
            ));
            edges.push((
                Rect::new(r.lo.x - s, r.lo.y - w, r.lo.x, r.hi.y + w),
                Rect::new(r.lo.x - 1, r.lo.y, r.lo.x, r.hi.y),
                3,
            ));
        }
        for (region, probe, side) in edges {
            let continued = shapes.iter().any(|o| {
                if o.layer != a.layer || o.net != a.net {
                    return false;
                }
                let o = o.rect;
                if positive_overlap(&o, &probe).is_some() {
                    return true;
                }
                let along = |lo: i64, hi: i64, olo: i64, ohi: i64| olo <= hi && ohi >= lo && (olo < lo || ohi > hi);
                match side {
                    0 => o.hi.y == r.hi.y && o.lo.y < r.hi.y && along(r.lo.x, r.hi.x, o.lo.x, o.hi.x),
                    1 => o.lo.y == r.lo.y && o.hi.y > r.lo.y && along(r.lo.x, r.hi.x, o.lo.x, o.hi.x),
                    2 => o.hi.x == r.hi.x && o.lo.x < r.hi.x && along(r.lo.y, r.hi.y, o.lo.y, o.hi.y),
                    _ => o.lo.x == r.lo.x && o.hi.x > r.lo.x && along(r.lo.y, r.hi.y, o.lo.y, o.hi.y),
                }
            });
            if continued {
                continue;
            }
            for b in shapes {
                if b.layer != a.layer || b.net == a.net || positive_overlap(&b.rect, &r).is_some() {
                    continue;
                }
                let Some(loc) = positive_overlap(&b.rect, &region) else {
                    continue;
                };
                let o = b.rect;
                let dist = match side {
                    0 => o.lo.y - r.hi.y,
                    1 => r.lo.y - o.hi.y,
                    2 => o.lo.x - r.hi.x,
                    _ => r.lo.x - o.hi.x,
                }
                .max(0);
                out.insert(key(
                    ViolationKind::EolSpacing,
                    Some(&l.name),
                    loc,
                    pair_nets(d, a.net, b.net),
                    vec![],
                    Some(dist),
                    Some(rule.eol_space),
                ));
            }
        }
    }
    out
}

/// Area of a union of rectangles by coordinate compression.
pub fn union_area_brute(rs: &[Rect]) -> i64 {
    let mut xs: Vec<i64> = rs.iter().flat_map(|r| [r.lo.x, r.hi.x]).collect();
    let mut ys: Vec<i64> = rs.iter().flat_map(|r| [r.lo.y, r.hi.y]).collect();
    xs.sort();
    xs.dedup();
    ys.sort();
    ys.dedup();
    let mut area = 0;
    for i in 0..xs.len().saturating_sub(1) {
        for j in 0..ys.len().saturating_sub(1) {
            let (cx, cy) = (xs[i], ys[j]);
            if rs
                .iter()
                .any(|r| r.lo.x <= cx && cx < r.hi.x && r.lo.y <= cy && cy < r.hi.y)
            {
                area += (xs[i + 1] - xs[i]) * (ys[j + 1] - ys[j]);
            }
        }
    }
    area
}

/// Minimum area per connected same-net metal polygon. Connection needs a
/// shared segment of positive length; corners alone do not connect.
pub fn oracle_min_area(d: &Design, shapes: &[FlatShape]) -> BTreeSet<VKey> {
    let mut groups: BTreeMap<(usize, usize), Vec<Rect>> = BTreeMap::new();
    for s in shapes {
        if d.tech.layers[s.layer].kind != LayerKind::Cut {
            groups.entry((s.net, s.layer)).or_default().push(s.rect);
        }
    }
    let mut out = BTreeSet::new();
    for ((net, layer), rects) in groups {
        let min_area = d.tech.layers[layer].min_area;
        if min_area <= 0 {
            continue;
        }
        let n = rects.len();
        let mut comp: Vec<usize> = (0..n).collect();
        // Label propagation until stable.
        loop {
            let mut changed = false;
            for i in 0..n {
                for j in 0..n {
                    let touch = isect(&rects[i], &rects[j]).is_some_and(|r| r.hi.x > r.lo.x || r.hi.y > r.lo.y);
                    if touch && comp[j] < comp[i] {
                        comp[i] = comp[j];
                        changed = true;
                    }
                }
            }
            if !changed {
                break;
            }
        }
        let mut members: BTreeMap<usize, Vec<Rect>> = BTreeMap::new();
        for i in 0..n {
            members.entry(comp[i]).or_default().push(rects[i]);
        }
        for rs in members.values() {
            let area = union_area_brute(rs);
            if area < min_area {
                let bb = rs.iter().skip(1).fold(rs[0], |b, r| {
                    Rect::new(
                        b.lo.x.min(r.lo.x),
                        b.lo.y.min(r.lo.y),
                        b.hi.x.max(r.hi.x),
                        b.hi.y.max(r.hi.y),
                    )
                });
                out.insert(key(
                    ViolationKind::MinArea,
                    Some(&d.tech.layers[layer].name),
                    bb,
                    vec![d.nets[net].name.clone()],
                    vec![],
                    Some(area),
                    Some(min_area),
                ));
            }
        }
    }
    out
}

// ---------------------------------------------------------------- timing

/// Bilinear interpolation clamped to the table range.
pub fn interp(t: &Lut, x: f64, y: f64) -> f64 {
    fn bracket(axis: &[f64], v: f64) -> (usize, usize, f64) {
        if axis.len() == 1 || v <= axis[0] {
            return (0, 0, 0.0);
        }
        let last = axis.len() - 1;
        if v >= axis[last] {
            return (last, last, 0.0);
        }
        let i = (0..last).find(|&i| v < axis[i + 1]).expect("inside range");
        (i, i + 1, (v - axis[i]) / (axis[i + 1] - axis[i]))
    }
    let (i0, i1, a) = bracket(&t.slews, x);
    let (j0, j1, b) = bracket(&t.loads, y);
    let v = &t.values;
    let lo = v[i0][j0] + (v[i0][j1] - v[i0][j0]) * b;
    let hi = v[i1][j0] + (v[i1][j1] - v[i1][j0]) * b;
    lo + (hi - lo) * a
}

/// Latest arrival at every pin by enumerating all paths from every
/// startpoint. Pins are named `inst/pin` or by port. Slews merge by maximum
/// at each pin, as a graph-based analysis does, so the per-arc delays are
/// fixed and only path sums are enumerated.
pub struct PathOracle {
    pub arrival: HashMap<String, f64>,
    pub endpoints: Vec<String>,
}

/// Driver pin and optional (delay, slew) tables for each sink pin.
type FanIn<'a> = HashMap<String, Vec<(String, Option<(&'a Lut, &'a Lut)>)>>;

pub fn enumerate_paths(nl: &Netlist, lib: &TimingLibrary, c: &Constraints, input_slew: f64) -> PathOracle {
    // Pins on each net.
    let mut drivers: HashMap<&str, Vec<String>> = HashMap::new();
    let mut sinks: HashMap<&str, Vec<(String, f64)>> = HashMap::new();
    for (p, dir) in &nl.ports {
        match dir {
            rdf_core::PinDirection::Input => drivers.entry(p.as_str()).or_default().push(p.clone()),
            _ => sinks
                .entry(p.as_str())
                .or_default()
                .push((p.clone(), c.default_output_load.unwrap_or(0.0) * lib.cap_unit_ff)),
        }
    }
    for i in &nl.instances {
        let cell = &lib.cells[&i.cell];
        for (pin, net) in &i.connections {
            let lp = &cell.pins[pin];
            let name = format!("{}/{}", i.name, pin);
            if lp.direction == rdf_core::PinDirection::Output {
                drivers.entry(net.as_str()).or_default().push(name);
            } else {
                sinks.entry(net.as_str()).or_default().push((name, lp.capacitance));
            }
        }
    }
    let mut load: HashMap<String, f64> = HashMap::new();
    // (to, from, Some((delay lut, slew lut)) for a cell arc, None for a net arc)
    let mut fanin: FanIn<'_> = HashMap::new();
    for (net, ds) in &drivers {
        let ss = sinks.get(net).cloned().unwrap_or_default();
        let total: f64 = ss.iter().map(|s| s.1).sum();
        for dname in ds {
            load.insert(dname.clone(), total);
            for (s, _) in &ss {
                fanin.entry(s.clone()).or_default().push((dname.clone(), None));
            }
        }
    }
    let mut starts: HashMap<String, f64> = HashMap::new();
    let mut endpoints = Vec::new();
    for i in &nl.instances {
        let cell = &lib.cells[&i.cell];
        for a in &cell.arcs {
            if a.clocked {
                continue;
            }
            let to = format!("{}/{}", i.name, a.to);
            let from = format!("{}/{}", i.name, a.from);
            fanin.entry(to).or_default().push((from, Some((&a.delay, &a.slew))));
        }
        if cell.sequential {
            for p in cell.pins.values() {
                let name = format!("{}/{}", i.name, p.name);
                if p.direction == rdf_core::PinDirection::Output {
                    let l = load.get(&name).copied().unwrap_or(0.0);
                    let s = cell
                        .arcs
                        .iter()
                        .filter(|a| a.clocked && a.to == p.name)
                        .map(|a| interp(&a.slew, input_slew, l))
                        .reduce(f64::max)
                        .unwrap_or(input_slew);
                    starts.insert(name, s);
                } else if !p.is_clock {
                    endpoints.push(name);
                }
            }
        }
    }
    for (p, dir) in &nl.ports {
        if *dir == rdf_core::PinDirection::Input {
            let l = load.get(p).copied().unwrap_or(0.0);
            let s = match &c.default_driver {
                Some(dr) => {
                    let cell = &lib.cells[&dr.cell];
                    let out = dr.pin.clone().unwrap_or_default();
                    cell.arcs
                        .iter()
                        .filter(|a| a.to == out)
                        .map(|a| interp(&a.slew, input_slew, l))
                        .reduce(f64::max)
                        .unwrap_or(input_slew)
                }
                None => input_slew,
            };
            starts.insert(p.clone(), s);
        } else {
            endpoints.push(p.clone());
        }
    }
    // Slews by memoized recursion over fanin.
    fn slew_of(
        v: &str,
        fanin: &FanIn<'_>,
        starts: &HashMap<String, f64>,
        load: &HashMap<String, f64>,
        memo: &mut HashMap<String, Option<f64>>,
    ) -> Option<f64> {
        if let Some(s) = memo.get(v) {
            return *s;
        }
        let ins = fanin.get(v).map(Vec::as_slice).unwrap_or(&[]);
        let res = if ins.is_empty() {
            starts.get(v).copied()
        } else {
            let l = load.get(v).copied().unwrap_or(0.0);
            let mut best: Option<f64> = None;
            for (u, arc) in ins {
                let Some(su) = slew_of(u, fanin, starts, load, memo) else {
                    continue;
                };
                let s = match arc {
                    Some((_, st)) => interp(st, su, l),
                    None => su,
                };
                best = Some(best.map_or(s.max(0.0), |b: f64| b.max(s)));
            }
            best.or_else(|| starts.get(v).copied())
        };
        memo.insert(v.to_string(), res);
        res
    }
    let mut memo = HashMap::new();
    let mut fanout: HashMap<String, Vec<(String, f64)>> = HashMap::new();
    let names: Vec<String> = fanin.keys().cloned().collect();
    for to in &names {
        let l = load.get(to).copied().unwrap_or(0.0);
        for (from, arc) in &fanin[to] {
            let Some(su) = slew_of(from, &fanin, &starts, &load, &mut memo) else {
                continue;
            };
            let d = match arc {
                Some((dl, _)) => interp(dl, su, l),
                None => 0.0,
            };
            fanout.entry(from.clone()).or_default().push((to.clone(), d));
        }
    }
    let mut arrival: HashMap<String, f64> = HashMap::new();
    fn walk(v: &str, t: f64, fanout: &HashMap<String, Vec<(String, f64)>>, arrival: &mut HashMap<String, f64>) {
        let e = arrival.entry(v.to_string()).or_insert(f64::NEG_INFINITY);
        *e = e.max(t);
        if let Some(outs) = fanout.get(v) {
            for (w, d) in outs {
                walk(w, t + d, fanout, arrival);
            }
        }
    }
    let mut start_names: Vec<&String> = starts
        .keys()
        .filter(|s| fanin.get(*s).is_none_or(Vec::is_empty))
        .collect();
    start_names.sort();
    for s in start_names {
        walk(s, 0.0, &fanout, &mut arrival);
    }
    PathOracle { arrival, endpoints }
}
