// SPDX-License-Identifier: Apache-2.0

//! Global-routing grid input and solution files in the ISPD-2008 contest
//! layout.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::lexer::Cursor;
use super::FormatError;
use crate::geom::{Dbu, Point};
use crate::model::{CapacityAdjustment, GCellGrid, GridError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GrPin {
    pub x: Dbu,
    pub y: Dbu,
    /// 1-based routing layer.
    pub layer: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GrNet {
    pub name: String,
    pub id: usize,
    pub min_width: i64,
    pub pins: Vec<GrPin>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GrInput {
    pub grid: GCellGrid,
    pub nets: Vec<GrNet>,
}

/// A solution point in design coordinates (normally a gcell center).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct GrPoint {
    pub x: Dbu,
    pub y: Dbu,
    pub layer: usize,
}

impl GrPoint {
    pub fn new(x: Dbu, y: Dbu, layer: usize) -> Self {
        GrPoint { x, y, layer }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct GrSegment {
    pub a: GrPoint,
    pub b: GrPoint,
}

impl GrSegment {
    pub fn new(a: GrPoint, b: GrPoint) -> Self {
        GrSegment { a, b }
    }

    /// True when the endpoints differ in at most one of x, y and layer.
    pub fn is_axis_parallel(&self) -> bool {
        let d = [self.a.x != self.b.x, self.a.y != self.b.y, self.a.layer != self.b.layer];
        d.iter().filter(|v| **v).count() <= 1
    }

    pub fn is_via(&self) -> bool {
        self.a.layer != self.b.layer
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NetRoute {
    pub name: String,
    pub id: usize,
    pub segments: Vec<GrSegment>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct GlobalRouteSolution {
    pub nets: Vec<NetRoute>,
}

impl GlobalRouteSolution {
    pub fn net(&self, name: &str) -> Option<&NetRoute> {
        self.nets.iter().find(|n| n.name == name)
    }
}

fn keyword_line(c: &mut Cursor<'_>, words: &[&str], n: usize) -> Result<Vec<i64>, FormatError> {
    for w in words {
        c.expect(w)?;
    }
    (0..n).map(|_| c.next_i64()).collect()
}

/// Parses a grid-and-netlist file.
pub fn parse_gr_input(text: &str) -> Result<GrInput, FormatError> {
    let mut c = Cursor::new(text, false);
    c.expect("grid")?;
    let xc = c.next_usize()?;
    let yc = c.next_usize()?;
    let layers = c.next_usize()?;
    if layers == 0 || layers > 64 {
        return Err(c.err("layer count must be between 1 and 64"));
    }
    let vertical = keyword_line(&mut c, &["vertical", "capacity"], layers)?;
    let horizontal = keyword_line(&mut c, &["horizontal", "capacity"], layers)?;
    let minw = keyword_line(&mut c, &["minimum", "width"], layers)?;
    let mins = keyword_line(&mut c, &["minimum", "spacing"], layers)?;
    let vias = keyword_line(&mut c, &["via", "spacing"], layers)?;
    let ox = c.next_i64()?;
    let oy = c.next_i64()?;
    let xs = c.next_i64()?;
    let ys = c.next_i64()?;
    if vertical
        .iter()
        .chain(&horizontal)
        .chain(&minw)
        .chain(&mins)
        .any(|v| *v < 0)
    {
        return Err(c.err("capacities and rule values must be non-negative"));
    }
    let mut grid = GCellGrid::new(
        Point::new(ox, oy),
        (xc, yc),
        (xs, ys),
        horizontal,
        vertical,
        minw,
        mins,
        vias,
    )
    .map_err(|e| match e {
        GridError::TooLarge => c.err("grid too large"),
        _ => c.err("grid needs positive counts and steps"),
    })?;
    c.expect("num")?;
    c.expect("net")?;
    let n = c.next_usize()?;
    let mut nets = Vec::with_capacity(n.min(1 << 16));
    for _ in 0..n {
        let name = c.next()?.to_string();
        let id = c.next_usize()?;
        let np = c.next_usize()?;
        let min_width = c.next_i64()?;
        let mut pins = Vec::with_capacity(np.min(1 << 16));
        for _ in 0..np {
            let x = c.next_i64()?;
            let y = c.next_i64()?;
            let layer = c.next_usize()?;
            if layer == 0 || layer > layers {
                return Err(c.err(format!("pin layer {layer} outside the stack")));
            }
            pins.push(GrPin { x, y, layer });
        }
        nets.push(GrNet {
            name,
            id,
            min_width,
            pins,
        });
    }
    if !c.at_end() {
        let k = c.next_usize()?;
        for _ in 0..k {
            let line = c.line();
            let v: Vec<i64> = (0..7).map(|_| c.next_i64()).collect::<Result<_, _>>()?;
            let idx = |x: i64| usize::try_from(x).map_err(|_| FormatError::AdjustmentOutOfRange { line });
            if v[2] != v[5] {
                return Err(FormatError::AdjustmentOutOfRange { line });
            }
            let adj = CapacityAdjustment {
                from: (idx(v[0])?, idx(v[1])?),
                to: (idx(v[3])?, idx(v[4])?),
                layer: idx(v[2])?,
                capacity: v[6],
            };
            grid.adjust(adj)
                .map_err(|_| FormatError::AdjustmentOutOfRange { line })?;
        }
    }
    if !c.at_end() {
        return Err(c.err("trailing content after adjustments"));
    }
    Ok(GrInput { grid, nets })
}

fn join(v: &[i64]) -> String {
    v.iter().map(i64::to_string).collect::<Vec<_>>().join(" ")
}

pub fn write_gr_input(input: &GrInput) -> String {
    let g = &input.grid;
    let mut s = String::new();
    let _ = writeln!(s, "grid {} {} {}", g.x_count, g.y_count, g.num_layers());
    let _ = writeln!(s, "vertical capacity {}", join(&g.vertical_capacity));
    let _ = writeln!(s, "horizontal capacity {}", join(&g.horizontal_capacity));
    let _ = writeln!(s, "minimum width {}", join(&g.min_width));
    let _ = writeln!(s, "minimum spacing {}", join(&g.min_spacing));
    let _ = writeln!(s, "via spacing {}", join(&g.via_spacing));
    let _ = writeln!(s, "{} {} {} {}", g.origin.x, g.origin.y, g.x_step, g.y_step);
    let _ = writeln!(s);
    let _ = writeln!(s, "num net {}", input.nets.len());
    for n in &input.nets {
        let _ = writeln!(s, "{} {} {} {}", n.name, n.id, n.pins.len(), n.min_width);
        for p in &n.pins {
            let _ = writeln!(s, "{} {} {}", p.x, p.y, p.layer);
        }
    }
    let _ = writeln!(s);
    let _ = writeln!(s, "{}", g.adjustments.len());
    for a in &g.adjustments {
        let _ = writeln!(
            s,
            "{} {} {} {} {} {} {}",
            a.from.0, a.from.1, a.layer, a.to.0, a.to.1, a.layer, a.capacity
        );
    }
    s
}

/// Parses `(x,y,l)` possibly split over several whitespace tokens.
fn parse_point(text: &str, line: usize) -> Result<GrPoint, FormatError> {
    let inner = text
        .trim()
        .strip_prefix('(')
        .and_then(|t| t.strip_suffix(')'))
        .ok_or_else(|| FormatError::syntax(line, format!("bad point `{text}`")))?;
    let parts: Vec<&str> = inner.split(',').map(str::trim).collect();
    if parts.len() != 3 {
        return Err(FormatError::syntax(line, format!("bad point `{text}`")));
    }
    let num = |s: &str| {
        s.parse::<i64>()
            .map_err(|_| FormatError::syntax(line, format!("bad number `{s}`")))
    };
    let layer = usize::try_from(num(parts[2])?)
        .ok()
        .filter(|l| *l >= 1)
        .ok_or_else(|| FormatError::syntax(line, "layer must be at least 1"))?;
    Ok(GrPoint::new(num(parts[0])?, num(parts[1])?, layer))
}

/// Parses a routed solution: net blocks of `name id [count]`, segment lines
/// and a closing `!`.
pub fn parse_gr_solution(text: &str) -> Result<GlobalRouteSolution, FormatError> {
    let mut sol = GlobalRouteSolution::default();
    let mut cur: Option<NetRoute> = None;
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let l = raw.trim();
        if l.is_empty() {
            continue;
        }
        match &mut cur {
            None => {
                let mut w = l.split_whitespace();
                let name = w.next().unwrap_or_default().to_string();
                let id = w
                    .next()
                    .and_then(|s| s.parse().ok())
                    .ok_or_else(|| FormatError::syntax(line, "net header needs `name id`"))?;
                if let Some(extra) = w.next() {
                    extra
                        .parse::<usize>()
                        .map_err(|_| FormatError::syntax(line, "bad segment count"))?;
                }
                if w.next().is_some() || name.starts_with('(') || name == "!" {
                    return Err(FormatError::syntax(line, "malformed net header"));
                }
                cur = Some(NetRoute {
                    name,
                    id,
                    segments: Vec::new(),
                });
            }
            Some(net) => {
                if l == "!" {
                    sol.nets.push(cur.take().expect("inside a net"));
                    continue;
                }
                let compact: String = l.chars().filter(|c| !c.is_whitespace()).collect();
                let (a, b) = compact
                    .split_once(")-(")
                    .ok_or_else(|| FormatError::syntax(line, "segment must be `(x,y,l)-(x,y,l)`"))?;
                let seg = GrSegment::new(
                    parse_point(&format!("{a})"), line)?,
                    parse_point(&format!("({b}"), line)?,
                );
                if !seg.is_axis_parallel() {
                    return Err(FormatError::NonAxisParallelSegment { line });
                }
                net.segments.push(seg);
            }
        }
    }
    if cur.is_some() {
        return Err(FormatError::syntax(text.lines().count(), "net block without `!`"));
    }
    Ok(sol)
}

pub fn write_gr_solution(sol: &GlobalRouteSolution) -> String {
    let mut s = String::new();
    for n in &sol.nets {
        let _ = writeln!(s, "{} {} {}", n.name, n.id, n.segments.len());
        for g in &n.segments {
            let _ = writeln!(
                s,
                "({},{},{})-({},{},{})",
                g.a.x, g.a.y, g.a.layer, g.b.x, g.b.y, g.b.layer
            );
        }
        let _ = writeln!(s, "!");
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::Direction;
    use crate::model::GridEdge;

    const INPUT: &str = "grid 2 2 2
vertical capacity 0 10
horizontal capacity 10 0
minimum width 1 1
minimum spacing 1 1
via spacing 1 1
0 0 10 10

num net 1
n0 0 2 1
5 5 1
15 15 1

1
0 0 1 1 0 1 4
";

    #[test]
    fn small_grid() {
        let g = parse_gr_input(INPUT).unwrap();
        assert_eq!((g.grid.x_count, g.grid.y_count, g.grid.num_layers()), (2, 2, 2));
        assert_eq!(g.nets[0].pins.len(), 2);
        let e = GridEdge {
            layer: 1,
            x: 0,
            y: 0,
            dir: Direction::Horizontal,
        };
        assert_eq!(g.grid.raw_capacity(&e), Some(4));
        assert_eq!(g.grid.capacity(&e), Some(2));
        let back = parse_gr_input(&write_gr_input(&g)).unwrap();
        assert_eq!(back, g);
    }

    #[test]
    fn adjustment_outside_grid() {
        let t = INPUT.replace("0 0 1 1 0 1 4", "1 1 1 2 1 1 4");
        assert!(matches!(
            parse_gr_input(&t),
            Err(FormatError::AdjustmentOutOfRange { .. })
        ));
    }

    #[test]
    fn one_segment() {
        let s = parse_gr_solution("n0 0\n(10,10,1)-(30,10,1)\n!\n").unwrap();
        assert_eq!(s.nets[0].segments.len(), 1);
        assert_eq!(parse_gr_solution(&write_gr_solution(&s)).unwrap(), s);
    }

    #[test]
    fn diagonal_segment() {
        assert_eq!(
            parse_gr_solution("n0 0\n(10,10,1)-(30,20,1)\n!\n").unwrap_err(),
            FormatError::NonAxisParallelSegment { line: 2 }
        );
    }

    #[test]
    fn unterminated_block() {
        assert!(parse_gr_solution("n0 0\n(10,10,1)-(30,10,1)\n").is_err());
    }
}
