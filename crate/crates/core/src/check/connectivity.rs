// SPDX-License-Identifier: Apache-2.0

use std::collections::{BTreeSet, HashMap};

use super::shapes::{collect_shapes, Owner, Shape, ShapeKind};
use super::{sort_violations, CheckError, Violation, ViolationKind};
use crate::geom::{for_each_touching_pair, Rect};
use crate::model::Design;

pub(crate) struct Dsu {
    parent: Vec<usize>,
}

impl Dsu {
    pub fn new(n: usize) -> Self {
        Dsu {
            parent: (0..n).collect(),
        }
    }

    pub fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    pub fn union(&mut self, a: usize, b: usize) {
        let (a, b) = (self.find(a), self.find(b));
        if a != b {
            self.parent[a.max(b)] = a.min(b);
        }
    }
}

/// Open check for one net given its shapes. Shapes of one group are joined
/// up front; same-layer shapes connect when they overlap or share an edge
/// segment.
fn net_components(shapes: &[Shape]) -> Dsu {
    let mut dsu = Dsu::new(shapes.len());
    let mut first_of_group: HashMap<usize, usize> = HashMap::new();
    for (i, s) in shapes.iter().enumerate() {
        match first_of_group.get(&s.group) {
            Some(&j) => dsu.union(i, j),
            None => {
                first_of_group.insert(s.group, i);
            }
        }
    }
    let mut layers: HashMap<usize, Vec<usize>> = HashMap::new();
    for (i, s) in shapes.iter().enumerate() {
        layers.entry(s.layer).or_default().push(i);
    }
    for idx in layers.values() {
        let rects: Vec<Rect> = idx.iter().map(|&i| shapes[i].rect).collect();
        for_each_touching_pair(&rects, |a, b| {
            if rects[a].abuts_or_overlaps(&rects[b]) {
                dsu.union(idx[a], idx[b]);
            }
        });
    }
    dsu
}

fn open_violation(design: &Design, net: usize, shapes: &[Shape]) -> Option<Violation> {
    let n = &design.nets[net];
    let mut dsu = net_components(shapes);
    let pin_groups: BTreeSet<usize> = shapes
        .iter()
        .filter(|s| s.kind == ShapeKind::Pin)
        .map(|s| s.group)
        .collect();
    if pin_groups.len() < 2 {
        return None;
    }
    let roots: BTreeSet<usize> = shapes
        .iter()
        .enumerate()
        .filter(|(_, s)| s.kind == ShapeKind::Pin)
        .map(|(i, _)| i)
        .collect::<Vec<_>>()
        .into_iter()
        .map(|i| dsu.find(i))
        .collect();
    if roots.len() <= 1 {
        return None;
    }
    let pins: Vec<Rect> = shapes
        .iter()
        .filter(|s| s.kind == ShapeKind::Pin)
        .map(|s| s.rect)
        .collect();
    let mut v = Violation::new(ViolationKind::Open, Rect::bbox_of(&pins).unwrap_or_default());
    v.nets = vec![n.name.clone()];
    v.measured = Some(roots.len() as i64);
    v.required = Some(1);
    Some(v)
}

/// Open check for one net. Pins without shapes do not take part.
pub fn check_connectivity(design: &Design, net: &str) -> Result<Vec<Violation>, CheckError> {
    let Some(ni) = design.net_idx(net) else {
        return Ok(Vec::new());
    };
    let shapes: Vec<Shape> = collect_shapes(design)?
        .into_iter()
        .filter(|s| s.owner == Owner::Net(ni))
        .collect();
    Ok(open_violation(design, ni, &shapes).into_iter().collect())
}

pub fn check_all_connectivity(design: &Design) -> Result<Vec<Violation>, CheckError> {
    let mut per_net: Vec<Vec<Shape>> = vec![Vec::new(); design.nets.len()];
    for s in collect_shapes(design)? {
        if let Owner::Net(n) = s.owner {
            per_net[n].push(s);
        }
    }
    let mut out: Vec<Violation> = per_net
        .iter()
        .enumerate()
        .filter_map(|(n, shapes)| open_violation(design, n, shapes))
        .collect();
    sort_violations(&mut out);
    Ok(out)
}
