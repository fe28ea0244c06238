// SPDX-License-Identifier: Apache-2.0

use std::cmp::Reverse;
use std::collections::{BTreeMap, BTreeSet, BinaryHeap};

use serde::{Deserialize, Serialize};

use super::StageError;
use crate::check::TrackSet;
use crate::geom::{Dbu, Direction, Point, Rect};
use crate::io::RouteGuideSet;
use crate::model::{Design, NetPin, RouteShape, TrackAxis};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DrOptions {
    /// Cost multiplier for planar moves against a layer's direction.
    pub wrong_way_factor: i64,
    /// Cost of one via, in DBU of wire.
    pub via_cost: i64,
    /// Cost multiplier for nodes outside the guides but within the halo.
    pub halo_factor: i64,
    /// Halo width in gcells.
    pub halo: i64,
    /// Rip-up-and-reroute rounds after the first pass.
    pub rounds: usize,
    /// Cost of sharing a node with one other net, scaled up each round.
    pub present_cost: i64,
    /// Cost added to a node each round it is shared.
    pub history_cost: i64,
}

impl Default for DrOptions {
    fn default() -> Self {
        DrOptions {
            wrong_way_factor: 4,
            via_cost: 400,
            halo_factor: 3,
            halo: 1,
            rounds: 40,
            present_cost: 1000,
            history_cost: 500,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct DrResult {
    pub routed: Vec<String>,
    /// Nets for which no path exists even outside their guides.
    pub unrouted: Vec<String>,
    /// Nodes shared by two or more nets after the first pass and after each
    /// rip-up round.
    pub conflicts: Vec<usize>,
    pub wirelength: i64,
    pub vias: usize,
}

const FREE: u32 = u32::MAX;
const OBSTACLE: u32 = u32::MAX - 1;

struct LayerLattice {
    dir: Direction,
    width: Dbu,
    xs: Vec<Dbu>,
    ys: Vec<Dbu>,
    base: usize,
    /// Via to the next routing layer up.
    via_up: Option<String>,
}

/// Track intersections of every routing layer, numbered densely.
struct Lattice {
    layers: Vec<LayerLattice>,
    total: usize,
}

impl Lattice {
    fn new(design: &Design) -> Self {
        let tracks = TrackSet::from_design(design);
        let die = design.die_area;
        let mut layers = Vec::new();
        let mut total = 0;
        for (k, l) in design.tech.routing_layers().enumerate() {
            let hw = l.width - l.width / 2;
            let xs = tracks.coords(&l.name, TrackAxis::X, die.lo.x + hw, die.hi.x - hw);
            let ys = tracks.coords(&l.name, TrackAxis::Y, die.lo.y + hw, die.hi.y - hw);
            let n = xs.len() * ys.len();
            layers.push(LayerLattice {
                dir: l.direction,
                width: l.width,
                xs,
                ys,
                base: total,
                via_up: design.tech.via_between(k + 1).map(|v| v.name.clone()),
            });
            total += n;
        }
        Lattice { layers, total }
    }

    fn id(&self, l: usize, ix: usize, iy: usize) -> usize {
        let ll = &self.layers[l];
        ll.base + iy * ll.xs.len() + ix
    }

    fn decode(&self, id: usize) -> (usize, usize, usize) {
        let l = self.layers.partition_point(|ll| ll.base <= id) - 1;
        let ll = &self.layers[l];
        let off = id - ll.base;
        (l, off % ll.xs.len(), off / ll.xs.len())
    }

    fn point(&self, id: usize) -> Point {
        let (l, ix, iy) = self.decode(id);
        Point::new(self.layers[l].xs[ix], self.layers[l].ys[iy])
    }

    fn find(&self, l: usize, p: Point) -> Option<usize> {
        let ll = self.layers.get(l)?;
        let ix = ll.xs.binary_search(&p.x).ok()?;
        let iy = ll.ys.binary_search(&p.y).ok()?;
        Some(self.id(l, ix, iy))
    }

    /// Node ids of layer `l` inside `r`, open or closed on all sides.
    fn nodes_in(&self, l: usize, r: &Rect, open: bool, mut f: impl FnMut(usize)) {
        let ll = &self.layers[l];
        let range = |v: &[Dbu], lo: Dbu, hi: Dbu| {
            if open {
                v.partition_point(|&c| c <= lo)..v.partition_point(|&c| c < hi)
            } else {
                v.partition_point(|&c| c < lo)..v.partition_point(|&c| c <= hi)
            }
        };
        for iy in range(&ll.ys, r.lo.y, r.hi.y) {
            for ix in range(&ll.xs, r.lo.x, r.hi.x) {
                f(self.id(l, ix, iy));
            }
        }
    }

    /// Neighbors as `(node, base cost)`.
    fn neighbors(&self, id: usize, opts: &DrOptions, out: &mut Vec<(usize, i64)>) {
        out.clear();
        let (l, ix, iy) = self.decode(id);
        let ll = &self.layers[l];
        let factor = |d: Direction| if d == ll.dir { 1 } else { opts.wrong_way_factor };
        if ix + 1 < ll.xs.len() {
            out.push((id + 1, (ll.xs[ix + 1] - ll.xs[ix]) * factor(Direction::Horizontal)));
        }
        if ix > 0 {
            out.push((id - 1, (ll.xs[ix] - ll.xs[ix - 1]) * factor(Direction::Horizontal)));
        }
        if iy + 1 < ll.ys.len() {
            out.push((
                id + ll.xs.len(),
                (ll.ys[iy + 1] - ll.ys[iy]) * factor(Direction::Vertical),
            ));
        }
        if iy > 0 {
            out.push((
                id - ll.xs.len(),
                (ll.ys[iy] - ll.ys[iy - 1]) * factor(Direction::Vertical),
            ));
        }
        let p = Point::new(ll.xs[ix], ll.ys[iy]);
        if ll.via_up.is_some() {
            if let Some(n) = self.find(l + 1, p) {
                out.push((n, opts.via_cost));
            }
        }
        if l > 0 && self.layers[l - 1].via_up.is_some() {
            if let Some(n) = self.find(l - 1, p) {
                out.push((n, opts.via_cost));
            }
        }
    }
}

struct NetJob {
    net: usize,
    name: String,
    /// Access nodes per pin, pins in Prim order.
    pins: Vec<Vec<usize>>,
    guides: Vec<(usize, Rect)>,
    /// Gcell size; the halo is measured in gcells.
    step: (Dbu, Dbu),
}

struct Router<'a> {
    lat: &'a Lattice,
    opts: DrOptions,
    owner: Vec<u32>,
    occ: Vec<u32>,
    history: Vec<i64>,
    /// Region multiplier scratch, 0 = outside.
    region: Vec<i64>,
    dist: Vec<i64>,
    prev: Vec<usize>,
}

/// Path edges of one routed net, as ordered node pairs.
type Edges = BTreeSet<(usize, usize)>;

impl Router<'_> {
    fn usable(&self, net: usize, v: usize) -> bool {
        let o = self.owner[v];
        o == FREE || o == net as u32
    }

    fn mark_region(&mut self, job: &NetJob, halo: i64, touched: &mut Vec<usize>) {
        let (hx, hy) = (job.step.0 * halo, job.step.1 * halo);
        let halo_rects: Vec<(usize, Rect)> = job.guides.iter().map(|&(l, r)| (l, r.expand_xy(hx, hy))).collect();
        for (rects, mult) in [(&halo_rects, self.opts.halo_factor), (&job.guides, 1)] {
            for &(l, r) in rects {
                let region = &mut self.region;
                self.lat.nodes_in(l, &r, false, |v| {
                    if region[v] == 0 {
                        touched.push(v);
                    }
                    region[v] = mult;
                });
            }
        }
        for &v in job.pins.iter().flatten() {
            if self.region[v] == 0 {
                touched.push(v);
            }
            self.region[v] = 1;
        }
    }

    fn search(
        &mut self,
        net: usize,
        tree: &BTreeSet<usize>,
        targets: &BTreeSet<usize>,
        fallback: bool,
        present: i64,
    ) -> Option<Vec<usize>> {
        // A*: Manhattan distance to the targets' box never overestimates,
        // since every move costs at least its length.
        let tb = Rect::bbox_of(
            targets
                .iter()
                .map(|&t| {
                    let p = self.lat.point(t);
                    Rect::from_points(p, p)
                })
                .collect::<Vec<_>>()
                .iter(),
        )?;
        let h = |p: Point| (tb.lo.x - p.x).max(p.x - tb.hi.x).max(0) + (tb.lo.y - p.y).max(p.y - tb.hi.y).max(0);
        let mut touched = Vec::new();
        let mut heap = BinaryHeap::new();
        for &s in tree {
            self.dist[s] = 0;
            self.prev[s] = usize::MAX;
            touched.push(s);
            heap.push(Reverse((h(self.lat.point(s)), s)));
        }
        let mut nb = Vec::new();
        let mut hit = None;
        while let Some(Reverse((f, u))) = heap.pop() {
            let d = self.dist[u];
            if f > d + h(self.lat.point(u)) {
                continue;
            }
            if targets.contains(&u) {
                hit = Some(u);
                break;
            }
            self.lat.neighbors(u, &self.opts, &mut nb);
            for &(v, c) in &nb {
                if !self.usable(net, v) {
                    continue;
                }
                let mult = match self.region[v] {
                    0 if fallback => self.opts.halo_factor,
                    0 => continue,
                    m => m,
                };
                let nd = d + c * mult + self.occ[v] as i64 * present + self.history[v];
                if nd < self.dist[v] {
                    if self.dist[v] == i64::MAX {
                        touched.push(v);
                    }
                    self.dist[v] = nd;
                    self.prev[v] = u;
                    heap.push(Reverse((nd + h(self.lat.point(v)), v)));
                }
            }
        }
        let path = hit.map(|t| {
            let mut p = vec![t];
            let mut c = t;
            while self.prev[c] != usize::MAX {
                c = self.prev[c];
                p.push(c);
            }
            p
        });
        for t in touched {
            self.dist[t] = i64::MAX;
        }
        path
    }

    fn route_net(&mut self, job: &NetJob, halo: i64, present: i64) -> Option<Edges> {
        let mut touched = Vec::new();
        self.mark_region(job, halo, &mut touched);
        let mut out = None;
        for fallback in [false, true] {
            out = self.connect(job, fallback, present);
            if out.is_some() {
                break;
            }
        }
        for v in touched {
            self.region[v] = 0;
        }
        out
    }

    fn connect(&mut self, job: &NetJob, fallback: bool, present: i64) -> Option<Edges> {
        let mut tree: BTreeSet<usize> = job.pins[0].iter().copied().collect();
        let mut edges = Edges::new();
        for pin in &job.pins[1..] {
            let targets: BTreeSet<usize> = pin.iter().copied().collect();
            if targets.iter().any(|t| tree.contains(t)) {
                tree.extend(targets);
                continue;
            }
            let path = self.search(job.net, &tree, &targets, fallback, present)?;
            for w in path.windows(2) {
                edges.insert((w[0].min(w[1]), w[0].max(w[1])));
            }
            tree.extend(path);
            tree.extend(targets);
        }
        Some(edges)
    }

    fn occupy(&mut self, edges: &Edges, delta: i32) {
        let nodes: BTreeSet<usize> = edges.iter().flat_map(|&(a, b)| [a, b]).collect();
        for v in nodes {
            self.occ[v] = (self.occ[v] as i64 + delta as i64) as u32;
        }
    }
}

fn net_nodes(edges: &Edges) -> BTreeSet<usize> {
    edges.iter().flat_map(|&(a, b)| [a, b]).collect()
}

/// Wires (collinear edges merged) and vias of one net.
fn shapes(lat: &Lattice, edges: &Edges, design: &Design) -> Vec<RouteShape> {
    let names: Vec<String> = design.tech.routing_layers().map(|l| l.name.clone()).collect();
    // (layer, horizontal, fixed coordinate) -> intervals
    let mut runs: BTreeMap<(usize, bool, Dbu), Vec<(Dbu, Dbu)>> = BTreeMap::new();
    let mut out = Vec::new();
    for &(a, b) in edges {
        let (la, ..) = lat.decode(a);
        let (lb, ..) = lat.decode(b);
        let (pa, pb) = (lat.point(a), lat.point(b));
        if la != lb {
            let lower = la.min(lb);
            if let Some(v) = &lat.layers[lower].via_up {
                out.push(RouteShape::Via { via: v.clone(), at: pa });
            }
        } else if pa.y == pb.y {
            runs.entry((la, true, pa.y))
                .or_default()
                .push((pa.x.min(pb.x), pa.x.max(pb.x)));
        } else {
            runs.entry((la, false, pa.x))
                .or_default()
                .push((pa.y.min(pb.y), pa.y.max(pb.y)));
        }
    }
    for ((l, horizontal, c), mut iv) in runs {
        iv.sort_unstable();
        let mut merged: Vec<(Dbu, Dbu)> = Vec::new();
        for (lo, hi) in iv {
            match merged.last_mut() {
                Some(last) if lo <= last.1 => last.1 = last.1.max(hi),
                _ => merged.push((lo, hi)),
            }
        }
        for (lo, hi) in merged {
            let (start, end) = if horizontal {
                (Point::new(lo, c), Point::new(hi, c))
            } else {
                (Point::new(c, lo), Point::new(c, hi))
            };
            out.push(RouteShape::Wire {
                layer: names[l].clone(),
                start,
                end,
                width: lat.layers[l].width,
            });
        }
    }
    out
}

/// Gridded maze router over track intersections. Every net with two or
/// more pins is connected pin by pin inside its guides plus a halo; nets
/// that cannot be connected there are retried over the whole die. Nodes
/// shared between nets are negotiated away by rip-up and reroute, and the
/// round with the fewest shared nodes is kept.
///
/// Spacing to fixed metal is enforced by blocking lattice nodes near foreign
/// shapes. Spacing between routed nets assumes track pitch is at least wire
/// width plus spacing, so that distinct nodes never conflict.
pub fn route_detailed(design: &mut Design, guides: &RouteGuideSet, opts: &DrOptions) -> Result<DrResult, StageError> {
    let lat = Lattice::new(design);
    let mut owner = vec![FREE; lat.total];
    let layer_of = |name: &str| design.tech.routing_index(name).map(|i| i - 1);
    let mut pin_net: BTreeMap<(&str, &str), usize> = BTreeMap::new();
    for (n, net) in design.nets.iter().enumerate() {
        for p in &net.pins {
            if let NetPin::Instance { inst, pin } = p {
                pin_net.insert((inst, pin), n);
            }
        }
    }
    let mut fixed: Vec<(u32, String, Rect)> = Vec::new();
    for inst in &design.instances {
        let Some(m) = design.master_of(inst) else { continue };
        for mp in &m.pins {
            let o = pin_net
                .get(&(inst.name.as_str(), mp.name.as_str()))
                .map_or(OBSTACLE, |&n| n as u32);
            for s in design.pin_shapes(inst, &mp.name) {
                fixed.push((o, s.layer, s.rect));
            }
        }
        for s in design.obstruction_shapes(inst) {
            fixed.push((OBSTACLE, s.layer, s.rect));
        }
    }
    for p in &design.ports {
        let Some(s) = p.absolute_shape() else { continue };
        let o = design
            .nets
            .iter()
            .position(|n| n.pins.contains(&NetPin::Port(p.name.clone())))
            .map_or(OBSTACLE, |n| n as u32);
        fixed.push((o, s.layer, s.rect));
    }
    for (o, layer, rect) in &fixed {
        let Some(l) = layer_of(layer) else { continue };
        let w = lat.layers[l].width;
        let s = design
            .tech
            .routing_layer(l + 1)
            .and_then(|ld| ld.spacing.as_ref())
            .map_or(0, |t| t.lookup(w.max(rect.min_side()), Dbu::MAX / 4));
        let reach = rect.expand(s + w - w / 2);
        lat.nodes_in(l, &reach, true, |v| {
            owner[v] = match owner[v] {
                FREE => *o,
                cur if cur == *o => cur,
                _ => OBSTACLE,
            };
        });
    }

    let mut jobs = Vec::new();
    for (n, net) in design.nets.iter().enumerate() {
        if net.pins.len() < 2 {
            continue;
        }
        let mut pins: Vec<(Point, Vec<usize>)> = Vec::new();
        for p in &net.pins {
            let mut acc = BTreeSet::new();
            for s in design.net_pin_shapes(p) {
                let Some(l) = layer_of(&s.layer) else { continue };
                lat.nodes_in(l, &s.rect, false, |v| {
                    if owner[v] == FREE || owner[v] == n as u32 {
                        acc.insert(v);
                    }
                });
            }
            if acc.is_empty() {
                return Err(StageError::NoAccessPoint(p.display_name()));
            }
            let at = design
                .pin_position(p)
                .unwrap_or_else(|| lat.point(*acc.first().expect("non-empty")));
            pins.push((at, acc.into_iter().collect()));
        }
        // Prim order over pin positions.
        let mut order = vec![pins.remove(0)];
        while !pins.is_empty() {
            let k = (0..pins.len())
                .min_by_key(|&k| order.iter().map(|o| o.0.manhattan(&pins[k].0)).min().unwrap_or(0))
                .expect("non-empty");
            order.push(pins.remove(k));
        }
        let gs = guides.get(&net.name);
        let step = design.gcell_grid.as_ref().map_or((0, 0), |g| (g.x_step, g.y_step));
        let guide_rects: Vec<(usize, Rect)> = gs
            .iter()
            .filter_map(|g| layer_of(&g.layer).map(|l| (l, g.rect)))
            .collect();
        jobs.push(NetJob {
            net: n,
            name: net.name.clone(),
            pins: order.into_iter().map(|p| p.1).collect(),
            guides: guide_rects,
            step,
        });
    }
    jobs.sort_by(|a, b| a.name.cmp(&b.name));

    let mut r = Router {
        lat: &lat,
        opts: *opts,
        owner,
        occ: vec![0; lat.total],
        history: vec![0; lat.total],
        region: vec![0; lat.total],
        dist: vec![i64::MAX; lat.total],
        prev: vec![usize::MAX; lat.total],
    };
    let mut routes: Vec<Option<Edges>> = vec![None; jobs.len()];
    for (k, job) in jobs.iter().enumerate() {
        routes[k] = r.route_net(job, opts.halo, opts.present_cost);
        if let Some(e) = &routes[k] {
            r.occupy(e, 1);
        }
    }
    let shared = |r: &Router| (0..lat.total).filter(|&v| r.occ[v] > 1).collect::<BTreeSet<usize>>();
    let mut conflicts = vec![shared(&r).len()];
    let mut best = (conflicts[0], routes.clone());
    for round in 0..opts.rounds {
        let hot = shared(&r);
        if hot.is_empty() {
            break;
        }
        for &v in &hot {
            r.history[v] += opts.history_cost;
        }
        let present = opts.present_cost * (round as i64 + 2);
        // Nets still fighting late get room to detour.
        let halo = opts.halo + round as i64 / 4;
        for (k, job) in jobs.iter().enumerate() {
            let Some(e) = routes[k].take() else { continue };
            if net_nodes(&e).is_disjoint(&hot) {
                routes[k] = Some(e);
                continue;
            }
            r.occupy(&e, -1);
            routes[k] = r.route_net(job, halo, present);
            if let Some(e) = &routes[k] {
                r.occupy(e, 1);
            }
        }
        let c = shared(&r).len();
        log::debug!("route_detailed: round {} shared nodes {c}", round + 1);
        conflicts.push(c);
        if c < best.0 {
            best = (c, routes.clone());
        }
    }
    let routes = best.1;

    let mut res = DrResult {
        conflicts,
        ..Default::default()
    };
    for net in &mut design.nets {
        net.routing.clear();
    }
    for (job, edges) in jobs.iter().zip(&routes) {
        match edges {
            Some(e) => {
                let s = shapes(&lat, e, design);
                res.wirelength += s.iter().map(|x| x.wire_length()).sum::<i64>();
                res.vias += s.iter().filter(|x| matches!(x, RouteShape::Via { .. })).count();
                design.nets[job.net].routing = s;
                res.routed.push(job.name.clone());
            }
            None => res.unrouted.push(job.name.clone()),
        }
    }
    Ok(res)
}
