// SPDX-License-Identifier: Apache-2.0

//! Global-routing gcell grid with per-edge capacities.

use serde::{Deserialize, Serialize};

use crate::geom::{Dbu, Direction, Point, Rect};

/// Upper bound on `x_count * y_count * layers`, so hostile headers cannot
/// trigger huge allocations.
pub const MAX_GRID_CELLS: usize = 1 << 24;

/// An explicit capacity override for the edge between two adjacent gcells on
/// one layer. `capacity` uses the same raw units as the layer capacities.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CapacityAdjustment {
    pub from: (usize, usize),
    pub to: (usize, usize),
    /// 1-based routing layer.
    pub layer: usize,
    pub capacity: i64,
}

/// A directed-edge reference: the edge leaving gcell `(x, y)` towards +x
/// (horizontal) or +y (vertical).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct GridEdge {
    /// 1-based routing layer.
    pub layer: usize,
    pub x: usize,
    pub y: usize,
    pub dir: Direction,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GCellGrid {
    pub origin: Point,
    pub x_count: usize,
    pub y_count: usize,
    pub x_step: Dbu,
    pub y_step: Dbu,
    /// Raw per-layer capacity of vertical edges (index 0 = layer 1).
    pub vertical_capacity: Vec<i64>,
    /// Raw per-layer capacity of horizontal edges.
    pub horizontal_capacity: Vec<i64>,
    pub min_width: Vec<i64>,
    pub min_spacing: Vec<i64>,
    pub via_spacing: Vec<i64>,
    pub adjustments: Vec<CapacityAdjustment>,
    h_cap: Vec<Vec<i64>>,
    v_cap: Vec<Vec<i64>>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum GridError {
    Empty,
    TooLarge,
    LayerCountMismatch,
    Adjustment(CapacityAdjustment),
}

impl GCellGrid {
    /// Builds a grid with uniform per-layer capacities and unit wire pitch
    /// (`min_width` 1, `min_spacing` 0), so raw capacity equals tracks.
    pub fn uniform(
        origin: Point,
        x_count: usize,
        y_count: usize,
        x_step: Dbu,
        y_step: Dbu,
        horizontal: Vec<i64>,
        vertical: Vec<i64>,
    ) -> Result<Self, GridError> {
        let n = horizontal.len();
        Self::new(
            origin,
            (x_count, y_count),
            (x_step, y_step),
            horizontal,
            vertical,
            vec![1; n],
            vec![0; n],
            vec![0; n],
        )
    }

    #[allow(clippy::too_many_arguments)]
    pub fn new(
        origin: Point,
        (x_count, y_count): (usize, usize),
        (x_step, y_step): (Dbu, Dbu),
        horizontal_capacity: Vec<i64>,
        vertical_capacity: Vec<i64>,
        min_width: Vec<i64>,
        min_spacing: Vec<i64>,
        via_spacing: Vec<i64>,
    ) -> Result<Self, GridError> {
        let layers = horizontal_capacity.len();
        if x_count == 0 || y_count == 0 || layers == 0 || x_step <= 0 || y_step <= 0 {
            return Err(GridError::Empty);
        }
        if [&vertical_capacity, &min_width, &min_spacing, &via_spacing]
            .iter()
            .any(|v| v.len() != layers)
        {
            return Err(GridError::LayerCountMismatch);
        }
        let cells = x_count.checked_mul(y_count).and_then(|c| c.checked_mul(layers));
        if cells.is_none_or(|c| c > MAX_GRID_CELLS) {
            return Err(GridError::TooLarge);
        }
        let h_cap = (0..layers)
            .map(|l| vec![horizontal_capacity[l]; (x_count - 1) * y_count])
            .collect();
        let v_cap = (0..layers)
            .map(|l| vec![vertical_capacity[l]; x_count * (y_count - 1)])
            .collect();
        Ok(GCellGrid {
            origin,
            x_count,
            y_count,
            x_step,
            y_step,
            vertical_capacity,
            horizontal_capacity,
            min_width,
            min_spacing,
            via_spacing,
            adjustments: Vec::new(),
            h_cap,
            v_cap,
        })
    }

    pub fn num_layers(&self) -> usize {
        self.horizontal_capacity.len()
    }

    /// Grid extent in DBU.
    pub fn extent(&self) -> Rect {
        Rect::new(
            self.origin.x,
            self.origin.y,
            self.origin.x + self.x_step * self.x_count as Dbu,
            self.origin.y + self.y_step * self.y_count as Dbu,
        )
    }

    /// Gcell index along x for a coordinate: `floor((c - origin) / step)`.
    pub fn col_of(&self, x: Dbu) -> Option<usize> {
        let g = (x - self.origin.x).div_euclid(self.x_step);
        (0..self.x_count as i64).contains(&g).then_some(g as usize)
    }

    pub fn row_of(&self, y: Dbu) -> Option<usize> {
        let g = (y - self.origin.y).div_euclid(self.y_step);
        (0..self.y_count as i64).contains(&g).then_some(g as usize)
    }

    pub fn gcell_of(&self, p: Point) -> Option<(usize, usize)> {
        Some((self.col_of(p.x)?, self.row_of(p.y)?))
    }

    pub fn gcell_center(&self, gx: usize, gy: usize) -> Point {
        Point::new(
            self.origin.x + gx as Dbu * self.x_step + self.x_step / 2,
            self.origin.y + gy as Dbu * self.y_step + self.y_step / 2,
        )
    }

    pub fn gcell_rect(&self, gx: usize, gy: usize) -> Rect {
        let lo = Point::new(
            self.origin.x + gx as Dbu * self.x_step,
            self.origin.y + gy as Dbu * self.y_step,
        );
        Rect::new(lo.x, lo.y, lo.x + self.x_step, lo.y + self.y_step)
    }

    /// Raw capacity units consumed by one wire on `layer`.
    pub fn wire_pitch_units(&self, layer: usize) -> i64 {
        let i = layer - 1;
        (self.min_width[i] + self.min_spacing[i]).max(1)
    }

    fn edge_slot(&self, e: &GridEdge) -> Option<usize> {
        if e.layer == 0 || e.layer > self.num_layers() {
            return None;
        }
        match e.dir {
            Direction::Horizontal if e.x + 1 < self.x_count && e.y < self.y_count => {
                Some(e.y * (self.x_count - 1) + e.x)
            }
            Direction::Vertical if e.x < self.x_count && e.y + 1 < self.y_count => Some(e.y * self.x_count + e.x),
            _ => None,
        }
    }

    /// Raw capacity of an edge after adjustments.
    pub fn raw_capacity(&self, e: &GridEdge) -> Option<i64> {
        let slot = self.edge_slot(e)?;
        let caps = match e.dir {
            Direction::Horizontal => &self.h_cap[e.layer - 1],
            Direction::Vertical => &self.v_cap[e.layer - 1],
        };
        Some(caps[slot])
    }

    /// Capacity of an edge in wire tracks.
    pub fn capacity(&self, e: &GridEdge) -> Option<i64> {
        Some(self.raw_capacity(e)? / self.wire_pitch_units(e.layer))
    }

    /// Applies an explicit capacity override.
    pub fn adjust(&mut self, adj: CapacityAdjustment) -> Result<(), GridError> {
        let (a, b) = (adj.from.min(adj.to), adj.from.max(adj.to));
        let dir = if a.1 == b.1 && b.0 == a.0 + 1 {
            Direction::Horizontal
        } else if a.0 == b.0 && b.1 == a.1 + 1 {
            Direction::Vertical
        } else {
            return Err(GridError::Adjustment(adj));
        };
        let e = GridEdge {
            layer: adj.layer,
            x: a.0,
            y: a.1,
            dir,
        };
        let slot = self.edge_slot(&e).ok_or(GridError::Adjustment(adj))?;
        if adj.capacity < 0 {
            return Err(GridError::Adjustment(adj));
        }
        match dir {
            Direction::Horizontal => self.h_cap[adj.layer - 1][slot] = adj.capacity,
            Direction::Vertical => self.v_cap[adj.layer - 1][slot] = adj.capacity,
        }
        self.adjustments.push(adj);
        Ok(())
    }

    /// All edges of the grid in a fixed order: layer, direction, y, x.
    pub fn edges(&self) -> impl Iterator<Item = GridEdge> + '_ {
        (1..=self.num_layers()).flat_map(move |layer| {
            let h = (0..self.y_count).flat_map(move |y| {
                (0..self.x_count.saturating_sub(1)).map(move |x| GridEdge {
                    layer,
                    x,
                    y,
                    dir: Direction::Horizontal,
                })
            });
            let v = (0..self.y_count.saturating_sub(1)).flat_map(move |y| {
                (0..self.x_count).map(move |x| GridEdge {
                    layer,
                    x,
                    y,
                    dir: Direction::Vertical,
                })
            });
            h.chain(v)
        })
    }

    /// Dense index of an edge, `0..num_edges()`.
    pub fn edge_index(&self, e: &GridEdge) -> Option<usize> {
        let slot = self.edge_slot(e)?;
        let h = (self.x_count - 1) * self.y_count;
        let v = self.x_count * (self.y_count - 1);
        let base = (e.layer - 1) * (h + v);
        Some(match e.dir {
            Direction::Horizontal => base + slot,
            Direction::Vertical => base + h + slot,
        })
    }

    pub fn num_edges(&self) -> usize {
        let h = (self.x_count - 1) * self.y_count;
        let v = self.x_count * (self.y_count - 1);
        (h + v) * self.num_layers()
    }

    pub fn total_raw_capacity(&self) -> i64 {
        self.h_cap.iter().chain(self.v_cap.iter()).flatten().sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid() -> GCellGrid {
        GCellGrid::uniform(Point::new(0, 0), 3, 2, 10, 10, vec![4, 0], vec![0, 4]).unwrap()
    }

    #[test]
    fn edge_indexing_is_dense() {
        let g = grid();
        let idx: Vec<usize> = g.edges().map(|e| g.edge_index(&e).unwrap()).collect();
        assert_eq!(idx, (0..g.num_edges()).collect::<Vec<_>>());
    }

    #[test]
    fn adjustment_overrides_one_edge() {
        let mut g = grid();
        let before = g.total_raw_capacity();
        g.adjust(CapacityAdjustment {
            from: (1, 0),
            to: (2, 0),
            layer: 1,
            capacity: 1,
        })
        .unwrap();
        assert_eq!(g.total_raw_capacity(), before - 3);
        let bad = CapacityAdjustment {
            from: (2, 0),
            to: (3, 0),
            layer: 1,
            capacity: 1,
        };
        assert_eq!(g.adjust(bad), Err(GridError::Adjustment(bad)));
    }

    #[test]
    fn floor_mapping() {
        let g = grid();
        assert_eq!(g.col_of(9), Some(0));
        assert_eq!(g.col_of(10), Some(1));
        assert_eq!(g.col_of(-1), None);
        assert_eq!(g.col_of(30), None);
    }
}
