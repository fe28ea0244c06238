// SPDX-License-Identifier: Apache-2.0

//! Integer geometry on the database-unit grid.

use std::fmt;

use serde::{Deserialize, Serialize};

/// Database unit. All coordinates in the design database are integer DBU.
pub type Dbu = i64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default, Serialize, Deserialize)]
pub struct Point {
    pub x: Dbu,
    pub y: Dbu,
}

impl Point {
    pub const fn new(x: Dbu, y: Dbu) -> Self {
        Point { x, y }
    }

    pub fn manhattan(&self, other: &Point) -> Dbu {
        (self.x - other.x).abs() + (self.y - other.y).abs()
    }
}

impl fmt::Display for Point {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({} {})", self.x, self.y)
    }
}

/// Axis-aligned rectangle with `lo <= hi` on both axes. Degenerate rectangles
/// (zero width or height) are representable.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default, Serialize, Deserialize)]
pub struct Rect {
    pub lo: Point,
    pub hi: Point,
}

impl Rect {
    /// Builds a rectangle from two arbitrary corners.
    pub fn new(x1: Dbu, y1: Dbu, x2: Dbu, y2: Dbu) -> Self {
        Rect {
            lo: Point::new(x1.min(x2), y1.min(y2)),
            hi: Point::new(x1.max(x2), y1.max(y2)),
        }
    }

    pub fn from_points(a: Point, b: Point) -> Self {
        Rect::new(a.x, a.y, b.x, b.y)
    }

    pub fn width(&self) -> Dbu {
        self.hi.x - self.lo.x
    }

    pub fn height(&self) -> Dbu {
        self.hi.y - self.lo.y
    }

    pub fn area(&self) -> i64 {
        self.width() * self.height()
    }

    /// Shorter side; the "width" of a wire-like shape.
    pub fn min_side(&self) -> Dbu {
        self.width().min(self.height())
    }

    pub fn is_degenerate(&self) -> bool {
        self.width() == 0 || self.height() == 0
    }

    pub fn center(&self) -> Point {
        Point::new(self.lo.x + self.width() / 2, self.lo.y + self.height() / 2)
    }

    pub fn translate(&self, dx: Dbu, dy: Dbu) -> Rect {
        Rect {
            lo: Point::new(self.lo.x + dx, self.lo.y + dy),
            hi: Point::new(self.hi.x + dx, self.hi.y + dy),
        }
    }

    pub fn expand(&self, d: Dbu) -> Rect {
        self.expand_xy(d, d)
    }

    pub fn expand_xy(&self, dx: Dbu, dy: Dbu) -> Rect {
        Rect {
            lo: Point::new(self.lo.x - dx, self.lo.y - dy),
            hi: Point::new(self.hi.x + dx, self.hi.y + dy),
        }
    }

    /// Closed-set containment of a point.
    pub fn contains(&self, p: Point) -> bool {
        p.x >= self.lo.x && p.x <= self.hi.x && p.y >= self.lo.y && p.y <= self.hi.y
    }

    pub fn contains_rect(&self, r: &Rect) -> bool {
        r.lo.x >= self.lo.x && r.hi.x <= self.hi.x && r.lo.y >= self.lo.y && r.hi.y <= self.hi.y
    }

    /// Intersection of the closed rectangles, if any (may be degenerate).
    pub fn intersection(&self, other: &Rect) -> Option<Rect> {
        let lo = Point::new(self.lo.x.max(other.lo.x), self.lo.y.max(other.lo.y));
        let hi = Point::new(self.hi.x.min(other.hi.x), self.hi.y.min(other.hi.y));
        (lo.x <= hi.x && lo.y <= hi.y).then_some(Rect { lo, hi })
    }

    /// True when the two rectangles share positive area.
    pub fn overlaps(&self, other: &Rect) -> bool {
        self.lo.x < other.hi.x && other.lo.x < self.hi.x && self.lo.y < other.hi.y && other.lo.y < self.hi.y
    }

    /// True when the closed rectangles meet along a segment of positive
    /// length or overlap. A shared corner point alone does not count.
    pub fn abuts_or_overlaps(&self, other: &Rect) -> bool {
        match self.intersection(other) {
            Some(i) => i.width() > 0 || i.height() > 0,
            None => false,
        }
    }

    /// Smallest rectangle containing both.
    pub fn union(&self, other: &Rect) -> Rect {
        Rect {
            lo: Point::new(self.lo.x.min(other.lo.x), self.lo.y.min(other.lo.y)),
            hi: Point::new(self.hi.x.max(other.hi.x), self.hi.y.max(other.hi.y)),
        }
    }

    /// Edge-to-edge gaps along x and y (zero when projections overlap).
    pub fn gaps(&self, other: &Rect) -> (Dbu, Dbu) {
        let dx = (other.lo.x - self.hi.x).max(self.lo.x - other.hi.x).max(0);
        let dy = (other.lo.y - self.hi.y).max(self.lo.y - other.hi.y).max(0);
        (dx, dy)
    }

    pub fn bbox_of<'a>(rects: impl IntoIterator<Item = &'a Rect>) -> Option<Rect> {
        rects.into_iter().fold(None, |acc, r| match acc {
            None => Some(*r),
            Some(a) => Some(a.union(r)),
        })
    }
}

impl fmt::Display for Rect {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {}", self.lo, self.hi)
    }
}

/// Placement orientations supported for standard cells.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default, Serialize, Deserialize)]
pub enum Orientation {
    #[default]
    N,
    S,
    FN,
    FS,
}

impl Orientation {
    pub fn as_str(&self) -> &'static str {
        match self {
            Orientation::N => "N",
            Orientation::S => "S",
            Orientation::FN => "FN",
            Orientation::FS => "FS",
        }
    }

    pub fn parse(s: &str) -> Option<Orientation> {
        match s {
            "N" => Some(Orientation::N),
            "S" => Some(Orientation::S),
            "FN" => Some(Orientation::FN),
            "FS" => Some(Orientation::FS),
            _ => None,
        }
    }

    /// Maps a rectangle in master coordinates (origin at the lower-left of a
    /// `w`×`h` cell) into the placed frame, before translation.
    pub fn apply(&self, r: &Rect, w: Dbu, h: Dbu) -> Rect {
        match self {
            Orientation::N => *r,
            Orientation::S => Rect::new(w - r.hi.x, h - r.hi.y, w - r.lo.x, h - r.lo.y),
            Orientation::FN => Rect::new(w - r.hi.x, r.lo.y, w - r.lo.x, r.hi.y),
            Orientation::FS => Rect::new(r.lo.x, h - r.hi.y, r.hi.x, h - r.lo.y),
        }
    }
}

impl fmt::Display for Orientation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Preferred routing direction of a layer, or the direction of a segment.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Direction {
    Horizontal,
    Vertical,
}

impl Direction {
    pub fn other(&self) -> Direction {
        match self {
            Direction::Horizontal => Direction::Vertical,
            Direction::Vertical => Direction::Horizontal,
        }
    }
}

/// Union area of a set of rectangles, by sweeping x-slabs and merging the
/// covered y-intervals in each slab.
pub fn union_area(rects: &[Rect]) -> i64 {
    let mut xs: Vec<Dbu> = rects
        .iter()
        .filter(|r| !r.is_degenerate())
        .flat_map(|r| [r.lo.x, r.hi.x])
        .collect();
    xs.sort_unstable();
    xs.dedup();
    let mut total = 0i64;
    let mut spans: Vec<(Dbu, Dbu)> = Vec::new();
    for w in xs.windows(2) {
        let (x0, x1) = (w[0], w[1]);
        spans.clear();
        spans.extend(
            rects
                .iter()
                .filter(|r| !r.is_degenerate() && r.lo.x <= x0 && r.hi.x >= x1)
                .map(|r| (r.lo.y, r.hi.y)),
        );
        spans.sort_unstable();
        let mut covered = 0;
        let mut cur: Option<(Dbu, Dbu)> = None;
        for &(a, b) in &spans {
            cur = match cur {
                Some((ca, cb)) if a <= cb => Some((ca, cb.max(b))),
                Some((ca, cb)) => {
                    covered += cb - ca;
                    Some((a, b))
                }
                None => Some((a, b)),
            };
        }
        if let Some((ca, cb)) = cur {
            covered += cb - ca;
        }
        total += covered * (x1 - x0);
    }
    total
}

/// Calls `f(i, j)` (with `i < j`) for every pair of rectangles whose closed
/// extents intersect. Sweep over x with an active list.
pub fn for_each_touching_pair(rects: &[Rect], mut f: impl FnMut(usize, usize)) {
    let mut order: Vec<usize> = (0..rects.len()).collect();
    order.sort_unstable_by_key(|&i| (rects[i].lo.x, i));
    let mut active: Vec<usize> = Vec::new();
    for &i in &order {
        let r = &rects[i];
        active.retain(|&j| rects[j].hi.x >= r.lo.x);
        for &j in &active {
            let o = &rects[j];
            if o.lo.y <= r.hi.y && r.lo.y <= o.hi.y {
                f(i.min(j), i.max(j));
            }
        }
        active.push(i);
    }
}
