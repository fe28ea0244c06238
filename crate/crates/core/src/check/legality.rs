// SPDX-License-Identifier: Apache-2.0

use std::collections::BTreeMap;

use super::{sort_violations, CheckError, Violation, ViolationKind};
use crate::geom::{for_each_touching_pair, Dbu, Rect};
use crate::model::{Design, Row};

/// Overlap, row, site and die checks over all instances.
pub fn check_legality(design: &Design) -> Result<Vec<Violation>, CheckError> {
    let boxes: Vec<Rect> = design
        .instances
        .iter()
        .map(|i| design.instance_bbox(i))
        .collect::<Result<_, _>>()?;
    let mut rows_at: BTreeMap<Dbu, Vec<&Row>> = BTreeMap::new();
    for r in &design.rows {
        rows_at.entry(r.origin.y).or_default().push(r);
    }
    for v in rows_at.values_mut() {
        v.sort_by_key(|r| r.origin.x);
    }
    let mut out = Vec::new();
    for_each_touching_pair(&boxes, |i, j| {
        if let Some(ov) = boxes[i].intersection(&boxes[j]).filter(|r| !r.is_degenerate()) {
            let mut v = Violation::new(ViolationKind::Overlap, ov);
            let mut names = vec![design.instances[i].name.clone(), design.instances[j].name.clone()];
            names.sort();
            v.instances = names;
            out.push(v);
        }
    });
    for (inst, bb) in design.instances.iter().zip(&boxes) {
        let single = |kind| {
            let mut v = Violation::new(kind, *bb);
            v.instances = vec![inst.name.clone()];
            v
        };
        if !design.die_area.contains_rect(bb) {
            out.push(single(ViolationKind::OutOfDie));
        }
        let Some(base) = rows_at.get(&bb.lo.y) else {
            out.push(single(ViolationKind::OffRow));
            continue;
        };
        let site_row = base
            .iter()
            .find(|r| r.rect().lo.x <= bb.lo.x && bb.lo.x < r.rect().hi.x)
            .unwrap_or(&base[0]);
        if (bb.lo.x - site_row.origin.x).rem_euclid(site_row.site_width) != 0 {
            out.push(single(ViolationKind::OffSite));
        }
        let h = site_row.site_height;
        let height = bb.height();
        let on_rows = h > 0
            && height % h == 0
            && (0..height / h).all(|k| {
                rows_at.get(&(bb.lo.y + k * h)).is_some_and(|rs| {
                    rs.iter().any(|r| {
                        let rr = r.rect();
                        r.site_height == h && rr.lo.x <= bb.lo.x && bb.hi.x <= rr.hi.x
                    })
                })
            });
        if !on_rows {
            out.push(single(ViolationKind::OffRow));
        }
    }
    sort_violations(&mut out);
    Ok(out)
}
