// SPDX-License-Identifier: Apache-2.0

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{PlacementResult, StageError};
use crate::geom::{Dbu, Orientation, Point, Rect};
use crate::model::{Design, NetPin, PlacementStatus};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PlaceOptions {
    pub iterations: usize,
    pub seed: u64,
}

impl Default for PlaceOptions {
    fn default() -> Self {
        PlaceOptions {
            iterations: 20,
            seed: 1,
        }
    }
}

enum PinRef {
    Cell { cell: usize, off: Point },
    Fixed(Point),
}

struct Model {
    /// Movable instance indices in name order.
    cells: Vec<usize>,
    size: Vec<(Dbu, Dbu)>,
    nets: Vec<Vec<PinRef>>,
    /// Per movable slot: `(net, pin offset)`.
    cell_nets: Vec<Vec<(usize, Point)>>,
}

fn pin_offset(design: &Design, master: &str, pin: &str) -> Point {
    let Some(m) = design.tech.master(master) else {
        return Point::new(0, 0);
    };
    let shapes = m.pin(pin).map(|p| p.shapes.as_slice()).unwrap_or_default();
    match Rect::bbox_of(shapes.iter().map(|s| &s.rect)) {
        Some(bb) => bb.center(),
        None => Rect::new(0, 0, m.width, m.height).center(),
    }
}

fn build(design: &Design) -> Model {
    let mut cells: Vec<usize> = (0..design.instances.len())
        .filter(|&i| !design.instances[i].is_fixed())
        .collect();
    cells.sort_by(|&a, &b| design.instances[a].name.cmp(&design.instances[b].name));
    let mut slot = vec![usize::MAX; design.instances.len()];
    for (s, &i) in cells.iter().enumerate() {
        slot[i] = s;
    }
    let size = cells
        .iter()
        .map(|&i| {
            design
                .master_of(&design.instances[i])
                .map_or((0, 0), |m| (m.width, m.height))
        })
        .collect();
    let mut cell_nets = vec![Vec::new(); cells.len()];
    let mut nets = Vec::new();
    for net in &design.nets {
        let mut refs = Vec::new();
        for p in &net.pins {
            let movable = match p {
                NetPin::Instance { inst, pin } => design
                    .instance_idx(inst)
                    .filter(|&i| slot[i] != usize::MAX)
                    .map(|i| (slot[i], pin_offset(design, &design.instances[i].master, pin))),
                NetPin::Port(_) => None,
            };
            match movable {
                Some((cell, off)) => {
                    cell_nets[cell].push((nets.len(), off));
                    refs.push(PinRef::Cell { cell, off });
                }
                None => {
                    if let Some(pt) = design.pin_position(p) {
                        refs.push(PinRef::Fixed(pt));
                    }
                }
            }
        }
        nets.push(refs);
    }
    Model {
        cells,
        size,
        nets,
        cell_nets,
    }
}

fn lower_median(v: &mut [Dbu]) -> Dbu {
    v.sort_unstable();
    v[(v.len() - 1) / 2]
}

/// Moves one cell's origin to the point minimizing the HPWL of its nets with
/// every other pin held still. The x and y problems separate; for each net
/// the cost of pin position `t` is the distance from `t` to the other pins'
/// span, so a median of the span endpoints is optimal.
fn best_position(m: &Model, pos: &[Point], c: usize, core: &Rect) -> Point {
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for &(n, off) in &m.cell_nets[c] {
        let mut bb: Option<Rect> = None;
        for r in &m.nets[n] {
            let p = match r {
                PinRef::Cell { cell, .. } if *cell == c => continue,
                PinRef::Cell { cell, off } => Point::new(pos[*cell].x + off.x, pos[*cell].y + off.y),
                PinRef::Fixed(p) => *p,
            };
            let pr = Rect::from_points(p, p);
            bb = Some(bb.map_or(pr, |b| b.union(&pr)));
        }
        if let Some(b) = bb {
            xs.extend([b.lo.x - off.x, b.hi.x - off.x]);
            ys.extend([b.lo.y - off.y, b.hi.y - off.y]);
        }
    }
    if xs.is_empty() {
        return pos[c];
    }
    let (w, h) = m.size[c];
    Point::new(
        lower_median(&mut xs).clamp(core.lo.x, (core.hi.x - w).max(core.lo.x)),
        lower_median(&mut ys).clamp(core.lo.y, (core.hi.y - h).max(core.lo.y)),
    )
}

fn apply(design: &mut Design, m: &Model, pos: &[Point]) {
    for (s, &i) in m.cells.iter().enumerate() {
        let inst = &mut design.instances[i];
        inst.location = Some(pos[s]);
        inst.orientation = Orientation::N;
        inst.status = PlacementStatus::Placed;
    }
}

/// Blends each coordinate halfway toward an even spread by rank, which
/// undoes the clumping that pure wirelength descent produces.
fn spread(m: &Model, pos: &[Point], core: &Rect) -> Vec<Point> {
    let n = pos.len();
    let mut out = pos.to_vec();
    for axis in [true, false] {
        let key = |s: usize| if axis { pos[s].x } else { pos[s].y };
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by_key(|&s| (key(s), s));
        for (rank, &s) in order.iter().enumerate() {
            let (w, h) = m.size[s];
            let (lo, span, size) = if axis {
                (core.lo.x, core.width(), w)
            } else {
                (core.lo.y, core.height(), h)
            };
            let target = lo + ((2 * rank as i64 + 1) * span) / (2 * n as i64) - size / 2;
            let target = target.clamp(lo, (lo + span - size).max(lo));
            let v = (key(s) + target) / 2;
            if axis {
                out[s].x = v;
            } else {
                out[s].y = v;
            }
        }
    }
    out
}

/// Seeded random initial spread, coordinate descent on HPWL, then a spread
/// step kept only when it does not lose to the initial placement. The result
/// is inside the rows' bounding box but not legal.
pub fn place_global(design: &mut Design, opts: &PlaceOptions) -> Result<PlacementResult, StageError> {
    let core =
        Rect::bbox_of(design.rows.iter().map(|r| r.rect()).collect::<Vec<_>>().iter()).ok_or(StageError::NoRows)?;
    let m = build(design);
    let rows: i64 = design.rows.iter().map(|r| r.rect().area()).sum();
    let cells: i64 = m.size.iter().map(|(w, h)| w * h).sum();
    if cells > rows {
        return Err(StageError::InsufficientArea { cells, rows });
    }
    if m.cells.is_empty() {
        return Ok(PlacementResult::of(design));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut pos: Vec<Point> = m
        .size
        .iter()
        .map(|&(w, h)| {
            Point::new(
                rng.gen_range(core.lo.x..=(core.hi.x - w).max(core.lo.x)),
                rng.gen_range(core.lo.y..=(core.hi.y - h).max(core.lo.y)),
            )
        })
        .collect();
    apply(design, &m, &pos);
    let initial = design.hpwl();
    log::debug!("place_global: initial hpwl {initial}");
    for _ in 0..opts.iterations {
        let mut moved = false;
        for c in 0..pos.len() {
            let p = best_position(&m, &pos, c, &core);
            moved |= p != pos[c];
            pos[c] = p;
        }
        if !moved {
            break;
        }
    }
    let spread_pos = spread(&m, &pos, &core);
    apply(design, &m, &spread_pos);
    if design.hpwl() > initial {
        apply(design, &m, &pos);
    }
    let r = PlacementResult::of(design);
    log::debug!("place_global: final hpwl {}", r.hpwl);
    Ok(r)
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::geom::Direction;
    use crate::model::{CellMaster, Instance, LayerRect, MasterPin, Net, PinDirection, Port, Row, Technology};

    fn design() -> Design {
        let mut t = Technology::new(1000);
        t.push_layer(crate::model::Layer::new_routing("M1", Direction::Horizontal, 200, 100));
        let pin = |n: &str, x: i64| MasterPin {
            name: n.into(),
            direction: PinDirection::Input,
            shapes: vec![LayerRect {
                layer: "M1".into(),
                rect: Rect::new(x, 900, x + 100, 1100),
            }],
        };
        t.push_master(CellMaster {
            name: "C".into(),
            width: 400,
            height: 2000,
            site: None,
            pins: vec![pin("A", 0), pin("B", 300)],
            obstructions: vec![],
        });
        let mut d = Design::new("t", Arc::new(t));
        d.die_area = Rect::new(0, 0, 10000, 10000);
        for k in 0..5 {
            d.rows.push(Row {
                name: format!("r{k}"),
                site: "s".into(),
                origin: Point::new(0, 2000 * k),
                orientation: Orientation::N,
                num_sites: 50,
                site_width: 200,
                site_height: 2000,
            });
        }
        for (name, at) in [("p", Point::new(1000, 3000)), ("q", Point::new(7000, 6000))] {
            let mut p = Port::new(name, PinDirection::Input);
            p.location = Some(at);
            p.status = PlacementStatus::Fixed;
            d.ports.push(p);
        }
        d.instances.push(Instance::new("u", "C"));
        let mut a = Net::new("a");
        a.pins = vec![NetPin::Port("p".into()), NetPin::inst("u", "A")];
        let mut b = Net::new("b");
        b.pins = vec![NetPin::Port("q".into()), NetPin::inst("u", "B")];
        d.nets = vec![a, b];
        d.reindex();
        d
    }

    #[test]
    fn single_cell_lands_on_median() {
        let mut d = design();
        place_global(&mut d, &PlaceOptions::default()).unwrap();
        // Both pins sit 3000 apart in y; any y between the pads is optimal.
        // In x the cell spans 350 between pin centers, 6000 between pads.
        assert_eq!(d.hpwl(), (6000 - 300) + 3000);
    }

    #[test]
    fn no_movable_cells() {
        let mut d = design();
        d.instances.clear();
        d.nets.iter_mut().for_each(|n| n.pins.truncate(1));
        d.reindex();
        let before = d.clone();
        place_global(&mut d, &PlaceOptions::default()).unwrap();
        assert_eq!(d, before);
    }

    #[test]
    fn insufficient_area() {
        let mut d = design();
        d.rows.clear();
        assert_eq!(place_global(&mut d, &PlaceOptions::default()), Err(StageError::NoRows));
        let mut d = design();
        for k in 0..200 {
            d.instances.push(Instance::new(&format!("x{k}"), "C"));
        }
        d.reindex();
        assert!(matches!(
            place_global(&mut d, &PlaceOptions::default()),
            Err(StageError::InsufficientArea { .. })
        ));
    }
}
