// SPDX-License-Identifier: Apache-2.0

use std::cmp::Reverse;
use std::collections::{BTreeSet, BinaryHeap};

use serde::{Deserialize, Serialize};

use super::StageError;
use crate::check::CongestionMap;
use crate::geom::{Direction, Point};
use crate::io::{GlobalRouteSolution, GrInput, GrNet, GrPin, GrPoint, GrSegment, NetRoute};
use crate::model::{Design, GCellGrid, GridEdge};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GrOptions {
    /// Extra cost per unit of overflow an edge would reach.
    pub overflow_penalty: u64,
    pub via_cost: u64,
    /// Lowest layer (1-based) that carries planar wires.
    pub min_layer: usize,
}

impl Default for GrOptions {
    fn default() -> Self {
        GrOptions {
            overflow_penalty: 8,
            via_cost: 1,
            min_layer: 2,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GrResult {
    pub solution: GlobalRouteSolution,
    pub congestion: CongestionMap,
    /// Planar gcell edges used, summed over nets.
    pub wirelength: i64,
    pub vias: usize,
}

/// Global-routing problem for a placed design: one pin per net pin at its
/// representative position, on the routing layer of its first shape.
pub fn gr_input_from_design(design: &Design, grid: &GCellGrid) -> GrInput {
    let mut nets = Vec::new();
    for net in &design.nets {
        let mut pins = Vec::new();
        for p in &net.pins {
            let Some(at) = design.pin_position(p) else { continue };
            let layer = design
                .net_pin_shapes(p)
                .first()
                .and_then(|s| design.tech.routing_index(&s.layer))
                .unwrap_or(1);
            pins.push(GrPin {
                x: at.x,
                y: at.y,
                layer,
            });
        }
        if pins.len() < 2 {
            continue;
        }
        let min_width = design.tech.routing_layer(1).map_or(1, |l| l.width);
        nets.push(GrNet {
            name: net.name.clone(),
            id: nets.len(),
            min_width,
            pins,
        });
    }
    GrInput {
        grid: grid.clone(),
        nets,
    }
}

struct Graph<'a> {
    grid: &'a GCellGrid,
    layers: usize,
    /// Planar directions allowed per layer (index 0 = layer 1).
    allow: Vec<(bool, bool)>,
    usage: Vec<i64>,
    capacity: Vec<i64>,
    opts: GrOptions,
}

type Node = (usize, usize, usize);

impl Graph<'_> {
    fn id(&self, (l, x, y): Node) -> usize {
        ((l - 1) * self.grid.y_count + y) * self.grid.x_count + x
    }

    fn node(&self, id: usize) -> Node {
        let xy = self.grid.x_count * self.grid.y_count;
        (id / xy + 1, id % self.grid.x_count, (id % xy) / self.grid.x_count)
    }

    fn edge_cost(&self, e: usize) -> u64 {
        let over = (self.usage[e] + 1 - self.capacity[e]).max(0) as u64;
        1 + self.opts.overflow_penalty * over
    }

    /// Neighbors as `(node, cost, planar edge index)`.
    fn neighbors(&self, (l, x, y): Node, out: &mut Vec<(Node, u64, Option<usize>)>) {
        out.clear();
        let (h, v) = self.allow[l - 1];
        let mut planar = |n: Node, e: GridEdge| {
            if let Some(i) = self.grid.edge_index(&e) {
                out.push((n, self.edge_cost(i), Some(i)));
            }
        };
        if h {
            if x + 1 < self.grid.x_count {
                planar(
                    (l, x + 1, y),
                    GridEdge {
                        layer: l,
                        x,
                        y,
                        dir: Direction::Horizontal,
                    },
                );
            }
            if x > 0 {
                planar(
                    (l, x - 1, y),
                    GridEdge {
                        layer: l,
                        x: x - 1,
                        y,
                        dir: Direction::Horizontal,
                    },
                );
            }
        }
        if v {
            if y + 1 < self.grid.y_count {
                planar(
                    (l, x, y + 1),
                    GridEdge {
                        layer: l,
                        x,
                        y,
                        dir: Direction::Vertical,
                    },
                );
            }
            if y > 0 {
                planar(
                    (l, x, y - 1),
                    GridEdge {
                        layer: l,
                        x,
                        y: y - 1,
                        dir: Direction::Vertical,
                    },
                );
            }
        }
        if l < self.layers {
            out.push(((l + 1, x, y), self.opts.via_cost, None));
        }
        if l > 1 {
            out.push(((l - 1, x, y), self.opts.via_cost, None));
        }
    }

    /// Cheapest path from any tree node to `target`, target first.
    fn shortest(
        &self,
        tree: &BTreeSet<usize>,
        target: usize,
        dist: &mut [u64],
        prev: &mut [usize],
    ) -> Option<Vec<usize>> {
        let mut touched = Vec::new();
        let mut heap = BinaryHeap::new();
        for &s in tree {
            dist[s] = 0;
            prev[s] = usize::MAX;
            touched.push(s);
            heap.push(Reverse((0u64, s)));
        }
        let mut nb = Vec::new();
        let mut found = false;
        while let Some(Reverse((d, u))) = heap.pop() {
            if d > dist[u] {
                continue;
            }
            if u == target {
                found = true;
                break;
            }
            self.neighbors(self.node(u), &mut nb);
            for &(n, c, _) in &nb {
                let v = self.id(n);
                let nd = d + c;
                if nd < dist[v] {
                    if dist[v] == u64::MAX {
                        touched.push(v);
                    }
                    dist[v] = nd;
                    prev[v] = u;
                    heap.push(Reverse((nd, v)));
                }
            }
        }
        let path = found.then(|| {
            let mut p = vec![target];
            let mut c = target;
            while prev[c] != usize::MAX {
                c = prev[c];
                p.push(c);
            }
            p
        });
        for t in touched {
            dist[t] = u64::MAX;
        }
        path
    }
}

/// Collinear runs of a node path as segments between gcell centers.
fn path_segments(g: &Graph, path: &[usize], out: &mut Vec<GrSegment>) {
    let pt = |id: usize| {
        let (l, x, y) = g.node(id);
        let c = g.grid.gcell_center(x, y);
        GrPoint::new(c.x, c.y, l)
    };
    let step = |a: usize, b: usize| {
        let (la, xa, ya) = g.node(a);
        let (lb, xb, yb) = g.node(b);
        (lb as i64 - la as i64, xb as i64 - xa as i64, yb as i64 - ya as i64)
    };
    let mut start = 0;
    for i in 1..path.len() {
        let end_run = i + 1 == path.len() || step(path[i - 1], path[i]) != step(path[i], path[i + 1]);
        if end_run {
            out.push(GrSegment::new(pt(path[start]), pt(path[i])));
            start = i;
        }
    }
}

/// Congestion-aware maze routing. Each net is decomposed by a Prim
/// spanning tree over its pins and grown one pin at a time by a Dijkstra
/// search from everything already connected. Nets go in order of pin span,
/// then name. Overflow is allowed and shows up in the returned congestion.
pub fn route_global(input: &GrInput, opts: &GrOptions) -> Result<GrResult, StageError> {
    let grid = &input.grid;
    let layers = grid.num_layers();
    let min_layer = if opts.min_layer > layers {
        1
    } else {
        opts.min_layer.max(1)
    };
    let allow = (1..=layers)
        .map(|l| {
            let ok = l >= min_layer;
            let h = grid.horizontal_capacity.get(l - 1).is_some_and(|&c| c > 0);
            let v = grid.vertical_capacity.get(l - 1).is_some_and(|&c| c > 0);
            (ok && h, ok && v)
        })
        .collect();
    let mut congestion = CongestionMap::empty(grid);
    let mut g = Graph {
        grid,
        layers,
        allow,
        usage: vec![0; congestion.usage.len()],
        capacity: congestion.capacity.clone(),
        opts: *opts,
    };
    let mut order: Vec<(i64, &str, &GrNet, Vec<usize>)> = Vec::new();
    for net in &input.nets {
        let mut nodes = Vec::new();
        for p in &net.pins {
            let cell = grid
                .gcell_of(Point::new(p.x, p.y))
                .filter(|_| p.layer >= 1 && p.layer <= layers)
                .ok_or_else(|| StageError::UnreachablePin {
                    net: net.name.clone(),
                    x: p.x,
                    y: p.y,
                    layer: p.layer,
                })?;
            nodes.push(g.id((p.layer, cell.0, cell.1)));
        }
        let (mut x0, mut x1, mut y0, mut y1) = (usize::MAX, 0, usize::MAX, 0);
        for &n in &nodes {
            let (_, x, y) = g.node(n);
            (x0, x1, y0, y1) = (x0.min(x), x1.max(x), y0.min(y), y1.max(y));
        }
        order.push(((x1 - x0 + y1 - y0) as i64, &net.name, net, nodes));
    }
    order.sort_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)));
    let total = layers * grid.x_count * grid.y_count;
    let mut dist = vec![u64::MAX; total];
    let mut prev = vec![usize::MAX; total];
    let mut routes = Vec::new();
    let mut vias = 0;
    for (_, _, net, nodes) in order {
        let mut tree: BTreeSet<usize> = BTreeSet::new();
        let mut segs = Vec::new();
        let mut used = BTreeSet::new();
        let mut pending: Vec<usize> = nodes.clone();
        pending.sort_unstable();
        pending.dedup();
        let first = nodes[0];
        pending.retain(|&n| n != first);
        tree.insert(first);
        while !pending.is_empty() {
            // Prim step: the pending pin closest to the tree.
            let (k, _) = pending
                .iter()
                .enumerate()
                .map(|(k, &p)| {
                    let (pl, px, py) = g.node(p);
                    let d = tree
                        .iter()
                        .map(|&t| {
                            let (tl, tx, ty) = g.node(t);
                            px.abs_diff(tx) + py.abs_diff(ty) + pl.abs_diff(tl)
                        })
                        .min()
                        .unwrap_or(0);
                    (k, (d, p))
                })
                .min_by_key(|&(_, key)| key)
                .expect("pending is not empty");
            let target = pending.remove(k);
            if tree.contains(&target) {
                continue;
            }
            let path = g
                .shortest(&tree, target, &mut dist, &mut prev)
                .expect("the gcell graph is connected through vias");
            let mut nb = Vec::new();
            for w in path.windows(2) {
                let (a, b) = (g.node(w[0]), g.node(w[1]));
                if a.0 != b.0 {
                    vias += 1;
                    continue;
                }
                g.neighbors(a, &mut nb);
                if let Some(e) = nb.iter().find(|n| n.0 == b).and_then(|n| n.2) {
                    used.insert(e);
                }
            }
            // Stored target first; segments read naturally from the tree out.
            let fwd: Vec<usize> = path.iter().rev().copied().collect();
            path_segments(&g, &fwd, &mut segs);
            tree.extend(path);
        }
        for &e in &used {
            g.usage[e] += 1;
        }
        routes.push(NetRoute {
            name: net.name.clone(),
            id: net.id,
            segments: segs,
        });
    }
    routes.sort_by_key(|r| r.id);
    congestion.usage = g.usage;
    let wirelength = congestion.total_usage();
    Ok(GrResult {
        solution: GlobalRouteSolution { nets: routes },
        congestion,
        wirelength,
        vias,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::check::congestion_map;
    use crate::model::CapacityAdjustment;

    fn grid(n: usize) -> GCellGrid {
        GCellGrid::uniform(Point::new(0, 0), n, n, 10, 10, vec![0, 4, 0], vec![0, 0, 4]).unwrap()
    }

    fn net(name: &str, pins: &[(i64, i64, usize)]) -> GrNet {
        GrNet {
            name: name.into(),
            id: 0,
            min_width: 1,
            pins: pins.iter().map(|&(x, y, layer)| GrPin { x, y, layer }).collect(),
        }
    }

    fn planar_len(sol: &GlobalRouteSolution) -> i64 {
        sol.nets[0]
            .segments
            .iter()
            .filter(|s| !s.is_via())
            .map(|s| ((s.a.x - s.b.x).abs() + (s.a.y - s.b.y).abs()) / 10)
            .sum()
    }

    #[test]
    fn two_pin_l_shape() {
        let input = GrInput {
            grid: grid(8),
            nets: vec![net("a", &[(5, 5, 1), (65, 35, 1)])],
        };
        let r = route_global(&input, &GrOptions::default()).unwrap();
        assert_eq!(planar_len(&r.solution), 6 + 3);
        assert_eq!(r.wirelength, 9);
        assert_eq!(congestion_map(&r.solution, &input.grid).unwrap(), r.congestion);
        assert!(r.solution.nets[0].segments.iter().all(|s| s.is_axis_parallel()));
    }

    #[test]
    fn blocked_corner_routes_with_overflow() {
        let mut g = grid(4);
        for l in [2, 3] {
            for (from, to) in [((0, 0), (1, 0)), ((0, 0), (0, 1))] {
                g.adjust(CapacityAdjustment {
                    from,
                    to,
                    layer: l,
                    capacity: 0,
                })
                .unwrap_or(());
            }
        }
        let input = GrInput {
            grid: g,
            nets: vec![net("a", &[(5, 5, 1), (35, 35, 1)])],
        };
        let r = route_global(&input, &GrOptions::default()).unwrap();
        assert_eq!(r.congestion.total_overflow(), 1);
    }

    #[test]
    fn pin_off_grid() {
        let input = GrInput {
            grid: grid(4),
            nets: vec![net("a", &[(5, 5, 1), (95, 5, 1)])],
        };
        assert!(matches!(
            route_global(&input, &GrOptions::default()),
            Err(StageError::UnreachablePin { x: 95, .. })
        ));
    }
}
