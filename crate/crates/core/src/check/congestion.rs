// SPDX-License-Identifier: Apache-2.0

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::CheckError;
use crate::geom::{Direction, Point};
use crate::io::{GlobalRouteSolution, GrPoint, NetRoute};
use crate::model::{GCellGrid, GridEdge};

/// Per-edge usage and capacity (in tracks), indexed by `GCellGrid::edge_index`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CongestionMap {
    pub x_count: usize,
    pub y_count: usize,
    pub num_layers: usize,
    pub usage: Vec<i64>,
    pub capacity: Vec<i64>,
    edges: Vec<GridEdge>,
}

impl CongestionMap {
    pub fn empty(grid: &GCellGrid) -> Self {
        let edges: Vec<GridEdge> = grid.edges().collect();
        let capacity = edges.iter().map(|e| grid.capacity(e).unwrap_or(0)).collect();
        CongestionMap {
            x_count: grid.x_count,
            y_count: grid.y_count,
            num_layers: grid.num_layers(),
            usage: vec![0; edges.len()],
            capacity,
            edges,
        }
    }

    pub fn edge(&self, i: usize) -> GridEdge {
        self.edges[i]
    }

    pub fn overflow(&self, i: usize) -> i64 {
        (self.usage[i] - self.capacity[i]).max(0)
    }

    pub fn total_usage(&self) -> i64 {
        self.usage.iter().sum()
    }

    pub fn total_overflow(&self) -> i64 {
        (0..self.usage.len()).map(|i| self.overflow(i)).sum()
    }

    pub fn max_overflow(&self) -> i64 {
        (0..self.usage.len()).map(|i| self.overflow(i)).max().unwrap_or(0)
    }

    /// Per-gcell utilization `[y][x]`: the worst usage/capacity ratio over
    /// the +x and +y edges leaving each gcell, on one layer (1-based) or
    /// over all layers. An edge with usage but no capacity reads as
    /// infinite.
    pub fn utilization(&self, layer: Option<usize>) -> Vec<Vec<f64>> {
        let mut out = vec![vec![0.0f64; self.x_count]; self.y_count];
        for (i, e) in self.edges.iter().enumerate() {
            if layer.is_some_and(|l| l != e.layer) {
                continue;
            }
            let r = match (self.usage[i], self.capacity[i]) {
                (0, _) => 0.0,
                (_, 0) => f64::INFINITY,
                (u, c) => u as f64 / c as f64,
            };
            let cell = &mut out[e.y][e.x];
            *cell = cell.max(r);
        }
        out
    }
}

fn locate(net: &str, grid: &GCellGrid, p: &GrPoint) -> Result<(usize, usize), CheckError> {
    let off = || CheckError::SegmentOffGrid {
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

/// Dense indices of the planar gcell edges crossed by one net's segments,
/// each edge once. Via segments cross no planar edge.
pub fn net_edges(route: &NetRoute, grid: &GCellGrid) -> Result<BTreeSet<usize>, CheckError> {
    let mut out = BTreeSet::new();
    for s in &route.segments {
        let (ax, ay) = locate(&route.name, grid, &s.a)?;
        let (bx, by) = locate(&route.name, grid, &s.b)?;
        if s.is_via() {
            continue;
        }
        let layer = s.a.layer;
        let mut push = |x: usize, y: usize, dir: Direction| {
            if let Some(i) = grid.edge_index(&GridEdge { layer, x, y, dir }) {
                out.insert(i);
            }
        };
        // A diagonal segment is charged as an L: along x at `ay`, then along y at `bx`.
        for x in ax.min(bx)..ax.max(bx) {
            push(x, ay, Direction::Horizontal);
        }
        for y in ay.min(by)..ay.max(by) {
            push(bx, y, Direction::Vertical);
        }
    }
    Ok(out)
}

/// Edge usage of a solution: the number of nets crossing each edge.
pub fn congestion_map(sol: &GlobalRouteSolution, grid: &GCellGrid) -> Result<CongestionMap, CheckError> {
    let mut map = CongestionMap::empty(grid);
    for n in &sol.nets {
        for i in net_edges(n, grid)? {
            map.usage[i] += 1;
        }
    }
    Ok(map)
}
