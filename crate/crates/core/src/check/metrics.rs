// SPDX-License-Identifier: Apache-2.0

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::geom::{Dbu, Direction};
use crate::io::RouteGuideSet;
use crate::model::{Design, RouteShape, TrackAxis, Tracks};

/// Track positions per routing layer and axis.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct TrackSet {
    tracks: BTreeMap<(String, bool), Vec<Tracks>>,
}

impl TrackSet {
    /// Tracks from the design's TRACKS statements. Layer/axis combinations
    /// without any statement get tracks derived from the layer pitch and
    /// offset, counted from the die corner.
    pub fn from_design(design: &Design) -> Self {
        let mut tracks: BTreeMap<(String, bool), Vec<Tracks>> = BTreeMap::new();
        for t in &design.tracks {
            for l in &t.layers {
                tracks
                    .entry((l.clone(), t.axis == TrackAxis::X))
                    .or_default()
                    .push(t.clone());
            }
        }
        let die = design.die_area;
        for layer in design.tech.routing_layers() {
            if layer.pitch <= 0 {
                continue;
            }
            for (is_x, lo, hi) in [(true, die.lo.x, die.hi.x), (false, die.lo.y, die.hi.y)] {
                tracks.entry((layer.name.clone(), is_x)).or_insert_with(|| {
                    let start = lo + layer.track_offset();
                    let count = if hi >= start {
                        ((hi - start) / layer.pitch + 1) as usize
                    } else {
                        0
                    };
                    vec![Tracks {
                        axis: if is_x { TrackAxis::X } else { TrackAxis::Y },
                        start,
                        count,
                        step: layer.pitch,
                        layers: vec![layer.name.clone()],
                    }]
                });
            }
        }
        TrackSet { tracks }
    }

    /// True when coordinate `c` lies on a track of `layer` along `axis`.
    pub fn on_track(&self, layer: &str, axis: TrackAxis, c: Dbu) -> bool {
        self.tracks
            .get(&(layer.to_string(), axis == TrackAxis::X))
            .is_some_and(|ts| ts.iter().any(|t| t.contains(c)))
    }

    /// Sorted, deduplicated track coordinates of `layer` along `axis` within
    /// `[lo, hi]`.
    pub fn coords(&self, layer: &str, axis: TrackAxis, lo: Dbu, hi: Dbu) -> Vec<Dbu> {
        let mut v: Vec<Dbu> = self
            .tracks
            .get(&(layer.to_string(), axis == TrackAxis::X))
            .into_iter()
            .flatten()
            .flat_map(|t| t.coords())
            .filter(|c| (lo..=hi).contains(c))
            .collect();
        v.sort_unstable();
        v.dedup();
        v
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct RouteMetrics {
    pub wrong_way_length: i64,
    pub preferred_length: i64,
    pub off_track_length: i64,
    /// Centerline length lying inside the net's guides on the wire's layer.
    pub guided_length: i64,
    /// `guided_length / total_wirelength`, 1.0 for an unrouted design.
    pub guide_coverage: f64,
    pub total_wirelength: i64,
    pub via_count: usize,
}

/// Length of `[a, b]` covered by the union of `intervals`.
pub(crate) fn covered_length(a: Dbu, b: Dbu, intervals: &mut [(Dbu, Dbu)]) -> Dbu {
    intervals.sort_unstable();
    let mut total = 0;
    let mut reach = a;
    for &(lo, hi) in intervals.iter() {
        let (lo, hi) = (lo.max(reach), hi.min(b));
        if hi > lo {
            total += hi - lo;
            reach = hi;
        }
    }
    total
}

/// Wrong-way, off-track and guide-honoring measures of the routed wires.
/// Without guides every wire counts as guided.
pub fn route_metrics(design: &Design, guides: Option<&RouteGuideSet>, tracks: &TrackSet) -> RouteMetrics {
    let mut m = RouteMetrics::default();
    for net in &design.nets {
        let net_guides = guides.map(|g| g.get(&net.name));
        for r in &net.routing {
            let RouteShape::Wire { layer, start, end, .. } = r else {
                m.via_count += 1;
                continue;
            };
            let Some(ldef) = design.tech.layer(layer) else {
                continue;
            };
            let len = r.wire_length();
            m.total_wirelength += len;
            let dir = r.wire_direction();
            match dir {
                Some(d) if d != ldef.direction => m.wrong_way_length += len,
                _ => m.preferred_length += len,
            }
            let on = match dir {
                Some(Direction::Horizontal) => tracks.on_track(layer, TrackAxis::Y, start.y),
                Some(Direction::Vertical) => tracks.on_track(layer, TrackAxis::X, start.x),
                None => true,
            };
            if !on {
                m.off_track_length += len;
            }
            let Some(gs) = net_guides else {
                m.guided_length += len;
                continue;
            };
            let horizontal = start.y == end.y;
            let (a, b, fixed) = if horizontal {
                (start.x.min(end.x), start.x.max(end.x), start.y)
            } else {
                (start.y.min(end.y), start.y.max(end.y), start.x)
            };
            let mut ivs: Vec<(Dbu, Dbu)> = gs
                .iter()
                .filter(|g| &g.layer == layer)
                .filter_map(|g| {
                    let r = g.rect;
                    if horizontal && r.lo.y <= fixed && fixed <= r.hi.y {
                        Some((r.lo.x, r.hi.x))
                    } else if !horizontal && r.lo.x <= fixed && fixed <= r.hi.x {
                        Some((r.lo.y, r.hi.y))
                    } else {
                        None
                    }
                })
                .collect();
            m.guided_length += covered_length(a, b, &mut ivs);
        }
    }
    m.guide_coverage = if m.total_wirelength == 0 {
        1.0
    } else {
        m.guided_length as f64 / m.total_wirelength as f64
    };
    m
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::geom::{Point, Rect};
    use crate::io::RouteGuide;
    use crate::model::{Layer, Net, Technology};

    fn design(routing: Vec<RouteShape>) -> Design {
        let mut t = Technology::new(1000);
        t.push_layer(Layer::new_routing("M1", Direction::Horizontal, 200, 100));
        let mut d = Design::new("t", Arc::new(t));
        d.die_area = Rect::new(0, 0, 2000, 2000);
        let mut n = Net::new("a");
        n.routing = routing;
        d.nets.push(n);
        d.reindex();
        d
    }

    fn wire(x0: i64, y0: i64, x1: i64, y1: i64) -> RouteShape {
        RouteShape::Wire {
            layer: "M1".into(),
            start: Point::new(x0, y0),
            end: Point::new(x1, y1),
            width: 100,
        }
    }

    fn guides(rects: &[Rect]) -> RouteGuideSet {
        let mut g = RouteGuideSet::default();
        g.nets.insert(
            "a".into(),
            rects
                .iter()
                .map(|r| RouteGuide {
                    rect: *r,
                    layer: "M1".into(),
                })
                .collect(),
        );
        g
    }

    #[test]
    fn clean_route() {
        let d = design(vec![wire(100, 100, 900, 100)]);
        let g = guides(&[Rect::new(0, 0, 1000, 200)]);
        let m = route_metrics(&d, Some(&g), &TrackSet::from_design(&d));
        assert_eq!((m.wrong_way_length, m.off_track_length, m.guide_coverage), (0, 0, 1.0));
    }

    #[test]
    fn wrong_way_and_off_track() {
        let d = design(vec![wire(150, 100, 150, 700)]);
        let m = route_metrics(&d, None, &TrackSet::from_design(&d));
        assert_eq!(m.wrong_way_length, 600);
        assert_eq!(m.off_track_length, 600);
        assert_eq!(m.wrong_way_length + m.preferred_length, m.total_wirelength);
    }

    #[test]
    fn partial_coverage_with_overlapping_guides() {
        let d = design(vec![wire(100, 100, 1100, 100)]);
        let g = guides(&[
            Rect::new(0, 0, 400, 200),
            Rect::new(300, 0, 600, 200),
            Rect::new(900, 0, 2000, 200),
        ]);
        let m = route_metrics(&d, Some(&g), &TrackSet::from_design(&d));
        assert_eq!(m.guided_length, 700);
    }
}
