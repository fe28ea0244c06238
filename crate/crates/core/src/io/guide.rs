// SPDX-License-Identifier: Apache-2.0

//! Route-guide files: per net, a parenthesized list of `x1 y1 x2 y2 layer`.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::FormatError;
use crate::geom::Rect;

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct RouteGuide {
    pub rect: Rect,
    pub layer: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct RouteGuideSet {
    pub nets: BTreeMap<String, Vec<RouteGuide>>,
}

impl RouteGuideSet {
    pub fn get(&self, net: &str) -> &[RouteGuide] {
        self.nets.get(net).map_or(&[], Vec::as_slice)
    }

    pub fn num_rects(&self) -> usize {
        self.nets.values().map(Vec::len).sum()
    }
}

pub fn parse_guides(text: &str) -> Result<RouteGuideSet, FormatError> {
    let mut set = RouteGuideSet::default();
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty());
    while let Some((line, name)) = lines.next() {
        if name == "(" || name == ")" || name.contains(char::is_whitespace) {
            return Err(FormatError::syntax(line, "expected a net name"));
        }
        match lines.next() {
            Some((_, "(")) => {}
            Some((l, _)) => return Err(FormatError::syntax(l, "expected `(`")),
            None => return Err(FormatError::syntax(line, "net without a guide block")),
        }
        let mut rects = Vec::new();
        loop {
            let Some((l, body)) = lines.next() else {
                return Err(FormatError::syntax(line, "unterminated guide block"));
            };
            if body == ")" {
                break;
            }
            let f: Vec<&str> = body.split_whitespace().collect();
            if f.len() != 5 {
                return Err(FormatError::syntax(l, "guide line needs `x1 y1 x2 y2 layer`"));
            }
            let mut v = [0i64; 4];
            for (k, s) in f[..4].iter().enumerate() {
                v[k] = s
                    .parse()
                    .map_err(|_| FormatError::syntax(l, format!("bad coordinate `{s}`")))?;
            }
            if v[0] >= v[2] || v[1] >= v[3] {
                return Err(FormatError::syntax(l, "guide rectangle must have positive area"));
            }
            rects.push(RouteGuide {
                rect: Rect::new(v[0], v[1], v[2], v[3]),
                layer: f[4].to_string(),
            });
        }
        if set.nets.insert(name.to_string(), rects).is_some() {
            return Err(FormatError::syntax(line, format!("duplicate net `{name}`")));
        }
    }
    Ok(set)
}

pub fn write_guides(guides: &RouteGuideSet) -> String {
    let mut s = String::new();
    for (net, rects) in &guides.nets {
        let _ = writeln!(s, "{net}\n(");
        for g in rects {
            let _ = writeln!(
                s,
                "{} {} {} {} {}",
                g.rect.lo.x, g.rect.lo.y, g.rect.hi.x, g.rect.hi.y, g.layer
            );
        }
        let _ = writeln!(s, ")");
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn one_rect_block() {
        let mut g = RouteGuideSet::default();
        g.nets.insert(
            "n1".into(),
            vec![RouteGuide {
                rect: Rect::new(0, 0, 3000, 400),
                layer: "M2".into(),
            }],
        );
        let text = write_guides(&g);
        assert_eq!(text, "n1\n(\n0 0 3000 400 M2\n)\n");
        assert_eq!(parse_guides(&text).unwrap(), g);
    }

    #[test]
    fn empty_set() {
        assert_eq!(write_guides(&RouteGuideSet::default()), "");
        assert_eq!(parse_guides("").unwrap(), RouteGuideSet::default());
    }

    #[test]
    fn malformed() {
        assert!(parse_guides("n1\n(\n0 0 1 M2\n)\n").is_err());
        assert!(parse_guides("n1\n(\n0 0 1 1 M2\n").is_err());
        assert!(parse_guides("n1\n0 0 1 1 M2\n").is_err());
        assert!(parse_guides("n1\n(\n5 0 1 1 M2\n)\n").is_err());
    }
}
