// SPDX-License-Identifier: Apache-2.0

use std::collections::BTreeMap;

use super::{PlacementResult, StageError};
use crate::geom::{Dbu, Orientation, Point};
use crate::model::{Design, ModelError, PlacementStatus};

/// One row line: all row segments sharing an origin y.
struct Line {
    y: Dbu,
    height: Dbu,
    orientation: Orientation,
    /// `(lo, hi, site origin x, site width)`.
    segments: Vec<(Dbu, Dbu, Dbu, Dbu)>,
    /// Occupied `[lo, hi)` intervals sorted by lo.
    used: Vec<(Dbu, Dbu)>,
}

impl Line {
    fn occupy(&mut self, lo: Dbu, hi: Dbu) {
        let at = self.used.partition_point(|u| u.0 < lo);
        self.used.insert(at, (lo, hi));
    }

    /// Free intervals as `(lo, hi, site origin, site width)`.
    fn free(&self) -> Vec<(Dbu, Dbu, Dbu, Dbu)> {
        let mut out = Vec::new();
        for &(lo, hi, ox, sw) in &self.segments {
            let mut cur = lo;
            for &(a, b) in &self.used {
                if b <= cur || a >= hi {
                    continue;
                }
                if a > cur {
                    out.push((cur, a, ox, sw));
                }
                cur = cur.max(b);
            }
            if cur < hi {
                out.push((cur, hi, ox, sw));
            }
        }
        out
    }
}

fn intersect(a: &[(Dbu, Dbu, Dbu, Dbu)], b: &[(Dbu, Dbu, Dbu, Dbu)]) -> Vec<(Dbu, Dbu, Dbu, Dbu)> {
    let mut out = Vec::new();
    for &(a0, a1, ox, sw) in a {
        for &(b0, b1, ..) in b {
            let (lo, hi) = (a0.max(b0), a1.min(b1));
            if lo < hi {
                out.push((lo, hi, ox, sw));
            }
        }
    }
    out
}

fn align_up(v: Dbu, origin: Dbu, step: Dbu) -> Dbu {
    origin + (v - origin + step - 1).div_euclid(step) * step
}

fn align_down(v: Dbu, origin: Dbu, step: Dbu) -> Dbu {
    origin + (v - origin).div_euclid(step) * step
}

/// Site-aligned x in `gaps` closest to `target` that fits width `w`.
fn nearest_x(gaps: &[(Dbu, Dbu, Dbu, Dbu)], target: Dbu, w: Dbu) -> Option<Dbu> {
    let mut best: Option<Dbu> = None;
    for &(lo, hi, ox, sw) in gaps {
        let a = align_up(lo, ox, sw);
        let b = align_down(hi - w, ox, sw);
        if a > b {
            continue;
        }
        for x in [align_down(target, ox, sw), align_up(target, ox, sw)] {
            let x = x.clamp(a, b);
            if best.is_none_or(|bx| (x - target).abs() < (bx - target).abs()) {
                best = Some(x);
            }
        }
    }
    best
}

fn lines(design: &Design) -> Vec<Line> {
    let mut by_y: BTreeMap<Dbu, Line> = BTreeMap::new();
    for r in &design.rows {
        let rr = r.rect();
        let line = by_y.entry(r.origin.y).or_insert_with(|| Line {
            y: r.origin.y,
            height: r.site_height,
            orientation: r.orientation,
            segments: Vec::new(),
            used: Vec::new(),
        });
        line.segments.push((rr.lo.x, rr.hi.x, r.origin.x, r.site_width.max(1)));
    }
    let mut v: Vec<Line> = by_y.into_values().collect();
    for l in &mut v {
        l.segments.sort_unstable();
    }
    v
}

/// Rows `base..base + n` if they stack without gaps.
fn stack_ok(lines: &[Line], base: usize, n: usize) -> bool {
    base + n <= lines.len() && (1..n).all(|k| lines[base + k].y == lines[base].y + k as i64 * lines[base].height)
}

/// Tetris legalization. Cells are taken in order of x and each goes to the
/// closest (Manhattan) site-aligned spot that is free on every row it
/// spans. A cell spanning an even number of rows must start on an even row
/// so that its rails line up. Fixed instances block the rows they cover.
pub fn legalize(design: &mut Design) -> Result<PlacementResult, StageError> {
    if design.rows.is_empty() {
        return Err(StageError::NoRows);
    }
    let mut lines = lines(design);
    let mut order = Vec::new();
    for (i, inst) in design.instances.iter().enumerate() {
        let bb = design.instance_bbox(inst)?;
        if inst.is_fixed() {
            for l in lines.iter_mut().filter(|l| l.y < bb.hi.y && bb.lo.y < l.y + l.height) {
                l.occupy(bb.lo.x, bb.hi.x);
            }
        } else {
            order.push((bb.lo.x, inst.name.clone(), i));
        }
    }
    order.sort();
    for (_, name, i) in order {
        let inst = &design.instances[i];
        let target = inst.location.ok_or_else(|| ModelError::Unplaced(name.clone()))?;
        let m = design.master_of(inst).ok_or_else(|| ModelError::UnresolvedReference {
            name: inst.master.clone(),
            context: format!("master of instance {name}"),
        })?;
        let (w, h) = (m.width, m.height);
        let mut cands: Vec<usize> = (0..lines.len()).collect();
        cands.sort_by_key(|&r| ((lines[r].y - target.y).abs(), r));
        let mut best: Option<(Dbu, usize, Dbu)> = None;
        for r in cands {
            let dy = (lines[r].y - target.y).abs();
            if best.is_some_and(|b| dy >= b.0) {
                break;
            }
            let rh = lines[r].height;
            if rh <= 0 || h % rh != 0 {
                continue;
            }
            let n = (h / rh) as usize;
            if (n.is_multiple_of(2) && r % 2 != 0) || !stack_ok(&lines, r, n) {
                continue;
            }
            let mut gaps = lines[r].free();
            for k in 1..n {
                gaps = intersect(&gaps, &lines[r + k].free());
            }
            if let Some(x) = nearest_x(&gaps, target.x, w) {
                let cost = dy + (x - target.x).abs();
                if best.is_none_or(|b| cost < b.0) {
                    best = Some((cost, r, x));
                }
            }
        }
        let Some((_, r, x)) = best else {
            return Err(StageError::CannotLegalize(name));
        };
        let n = (h / lines[r].height) as usize;
        for k in 0..n {
            lines[r + k].occupy(x, x + w);
        }
        let inst = &mut design.instances[i];
        inst.location = Some(Point::new(x, lines[r].y));
        inst.orientation = lines[r].orientation;
        inst.status = PlacementStatus::Placed;
    }
    Ok(PlacementResult::of(design))
}
