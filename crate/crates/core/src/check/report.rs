// SPDX-License-Identifier: Apache-2.0

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::{RouteMetrics, Violation, ViolationKind};

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CheckSummary {
    pub counts: BTreeMap<String, usize>,
    pub total: usize,
}

impl CheckSummary {
    pub fn count(&self, kind: ViolationKind) -> usize {
        self.counts.get(kind.as_str()).copied().unwrap_or(0)
    }
}

pub fn summarize(violations: &[Violation]) -> CheckSummary {
    let mut counts: BTreeMap<String, usize> = ViolationKind::ALL.iter().map(|k| (k.as_str().to_string(), 0)).collect();
    for v in violations {
        *counts.entry(v.kind.as_str().to_string()).or_default() += 1;
    }
    CheckSummary {
        counts,
        total: violations.len(),
    }
}

fn list(v: &[String]) -> String {
    if v.is_empty() {
        "-".to_string()
    } else {
        v.join(",")
    }
}

fn opt(v: Option<i64>) -> String {
    v.map_or_else(|| "-".to_string(), |x| x.to_string())
}

/// One violation per line as `key=value` fields, then a summary block.
pub fn format_report(violations: &[Violation], metrics: Option<&RouteMetrics>) -> String {
    let mut s = String::from("# rdf check report v1\n# eolSpacing: basic LEF57 end-of-line rule\n");
    for v in violations {
        let r = v.location;
        let _ = writeln!(
            s,
            "kind={} layer={} rect={},{},{},{} nets={} insts={} measured={} required={}",
            v.kind,
            v.layer.as_deref().unwrap_or("-"),
            r.lo.x,
            r.lo.y,
            r.hi.x,
            r.hi.y,
            list(&v.nets),
            list(&v.instances),
            opt(v.measured),
            opt(v.required)
        );
    }
    let sum = summarize(violations);
    let _ = writeln!(s, "summary total={}", sum.total);
    for k in ViolationKind::ALL {
        let _ = writeln!(s, "summary {}={}", k, sum.count(k));
    }
    if let Some(m) = metrics {
        let _ = writeln!(
            s,
            "metrics wrongWay={} offTrack={} guideCoverage={:.6} wirelength={} vias={}",
            m.wrong_way_length, m.off_track_length, m.guide_coverage, m.total_wirelength, m.via_count
        );
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::Rect;

    #[test]
    fn line_format() {
        let mut v = Violation::new(ViolationKind::PrlSpacing, Rect::new(1, 2, 3, 4));
        v.layer = Some("M1".into());
        v.nets = vec!["a".into(), "b".into()];
        v.measured = Some(190);
        v.required = Some(200);
        let r = format_report(&[v], None);
        assert!(r.contains("kind=prlSpacing layer=M1 rect=1,2,3,4 nets=a,b insts=- measured=190 required=200\n"));
        assert!(r.contains("summary prlSpacing=1\n"));
        assert!(r.contains("summary total=1\n"));
    }
}
