// SPDX-License-Identifier: Apache-2.0

//! DEF reader and writer for floorplan, placement and routed nets.

use std::fmt::Write as _;
use std::sync::Arc;

use super::lexer::Cursor;
use super::FormatError;
use crate::geom::{Dbu, Direction, Orientation, Point, Rect};
use crate::model::{
    Design, GCellGrid, Instance, LayerRect, Net, NetPin, PinDirection, PlacementStatus, Port, RouteShape, Row,
    Technology, TrackAxis, Tracks, ViaDef,
};

/// Sections skipped wholesale, each closed by `END <section>`.
const SKIPPED_SECTIONS: &[&str] = &[
    "SPECIALNETS",
    "BLOCKAGES",
    "REGIONS",
    "GROUPS",
    "PROPERTYDEFINITIONS",
    "NONDEFAULTRULES",
    "FILLS",
    "SCANCHAINS",
    "STYLES",
    "SLOTS",
];

/// Parses DEF text against an already-loaded technology.
pub fn parse_def(text: &str, tech: Arc<Technology>) -> Result<Design, FormatError> {
    let mut p = DefParser {
        c: Cursor::new(text, true),
        d: Design::new("", tech),
        gcell_x: None,
        gcell_y: None,
        warnings: 0,
    };
    p.run()?;
    if p.warnings > 0 {
        log::debug!("DEF: {} unsupported constructs skipped", p.warnings);
    }
    let mut d = p.d;
    match (p.gcell_x, p.gcell_y) {
        (Some((x0, nx, sx)), Some((y0, ny, sy))) => {
            d.gcell_grid = Some(
                grid_from_tech(&d.tech, Point::new(x0, y0), (nx, ny), (sx, sy))
                    .ok_or_else(|| FormatError::syntax(0, "invalid GCELLGRID"))?,
            );
        }
        (None, None) => {}
        _ => return Err(FormatError::syntax(0, "GCELLGRID needs both X and Y")),
    }
    d.reindex();
    Ok(d)
}

/// Gcell grid whose per-layer capacities are the number of preferred-direction
/// tracks crossing a gcell boundary. Wrong-way edges get zero capacity.
pub fn grid_from_tech(
    tech: &Technology,
    origin: Point,
    counts: (usize, usize),
    steps: (Dbu, Dbu),
) -> Option<GCellGrid> {
    let mut h = Vec::new();
    let mut v = Vec::new();
    for l in tech.routing_layers() {
        match l.direction {
            Direction::Horizontal => {
                h.push(steps.1 / l.pitch.max(1));
                v.push(0);
            }
            Direction::Vertical => {
                h.push(0);
                v.push(steps.0 / l.pitch.max(1));
            }
        }
    }
    GCellGrid::uniform(origin, counts.0, counts.1, steps.0, steps.1, h, v).ok()
}

struct DefParser<'a> {
    c: Cursor<'a>,
    d: Design,
    gcell_x: Option<(Dbu, usize, Dbu)>,
    gcell_y: Option<(Dbu, usize, Dbu)>,
    warnings: usize,
}

impl<'a> DefParser<'a> {
    fn point(&mut self) -> Result<Point, FormatError> {
        self.c.expect("(")?;
        let x = self.c.next_i64()?;
        let y = self.c.next_i64()?;
        self.c.expect(")")?;
        Ok(Point::new(x, y))
    }

    fn run(&mut self) -> Result<(), FormatError> {
        while let Some(t) = self.c.peek() {
            let kw = t.to_ascii_uppercase();
            match kw.as_str() {
                "DESIGN" => {
                    self.c.next()?;
                    self.d.name = self.c.next()?.to_string();
                    self.c.expect(";")?;
                }
                "UNITS" => {
                    self.c.next()?;
                    self.c.expect("DISTANCE")?;
                    self.c.expect("MICRONS")?;
                    let n = self.c.next_i64()?;
                    self.c.expect(";")?;
                    let expected = self.d.tech.dbu_per_micron;
                    if expected == 0 && n > 0 {
                        self.d.dbu_per_micron = n;
                    } else if n != expected {
                        return Err(FormatError::UnitsMismatch { expected, found: n });
                    }
                }
                "DIEAREA" => {
                    self.c.next()?;
                    let mut pts = Vec::new();
                    while self.c.peek() == Some("(") {
                        pts.push(self.point()?);
                    }
                    self.c.expect(";")?;
                    if pts.len() < 2 {
                        return Err(self.c.err("DIEAREA needs at least two points"));
                    }
                    let rects: Vec<Rect> = pts.iter().map(|p| Rect::from_points(*p, *p)).collect();
                    self.d.die_area = Rect::bbox_of(&rects).unwrap_or_default();
                }
                "ROW" => self.row()?,
                "TRACKS" => self.tracks()?,
                "GCELLGRID" => self.gcellgrid()?,
                "VIAS" => self.vias()?,
                "COMPONENTS" => self.components()?,
                "PINS" => self.pins()?,
                "NETS" => self.nets()?,
                "END" => {
                    self.c.next()?;
                    self.c.expect("DESIGN")?;
                    return Ok(());
                }
                s if SKIPPED_SECTIONS.contains(&s) => {
                    self.warnings += 1;
                    self.c.next()?;
                    self.c.skip_block(t)?;
                }
                _ => self.c.skip_statement()?,
            }
        }
        Err(self.c.err("missing END DESIGN"))
    }

    fn row(&mut self) -> Result<(), FormatError> {
        self.c.expect("ROW")?;
        let name = self.c.next()?.to_string();
        let site = self.c.next()?.to_string();
        let x = self.c.next_i64()?;
        let y = self.c.next_i64()?;
        let orient_tok = self.c.next()?;
        let orientation = Orientation::parse(orient_tok)
            .ok_or_else(|| self.c.err(format!("unsupported row orientation `{orient_tok}`")))?;
        let (site_w, site_h) = match self.d.tech.site(&site) {
            Some(s) => (s.width, s.height),
            None => return Err(self.c.err(format!("unknown site `{site}`"))),
        };
        let mut num_sites = 1;
        let mut step = site_w;
        if self.c.eat("DO") {
            num_sites = self.c.next_usize()?;
            self.c.expect("BY")?;
            let ny = self.c.next_usize()?;
            if ny != 1 {
                return Err(self.c.err("only horizontal rows are supported"));
            }
            if self.c.eat("STEP") {
                step = self.c.next_i64()?;
                self.c.next_i64()?;
            }
        }
        self.c.skip_statement()?;
        if num_sites == 0 || step <= 0 {
            return Err(self.c.err("row must have sites"));
        }
        self.d.rows.push(Row {
            name,
            site,
            origin: Point::new(x, y),
            orientation,
            num_sites,
            site_width: step,
            site_height: site_h,
        });
        Ok(())
    }

    fn tracks(&mut self) -> Result<(), FormatError> {
        self.c.expect("TRACKS")?;
        let axis = match self.c.next()? {
            "X" => TrackAxis::X,
            "Y" => TrackAxis::Y,
            a => return Err(self.c.err(format!("bad TRACKS axis `{a}`"))),
        };
        let start = self.c.next_i64()?;
        self.c.expect("DO")?;
        let count = self.c.next_usize()?;
        self.c.expect("STEP")?;
        let step = self.c.next_i64()?;
        let mut layers = Vec::new();
        loop {
            match self.c.next()? {
                ";" => break,
                "MASK" => {
                    self.c.next()?;
                    self.c.eat("SAMEMASK");
                }
                "LAYER" => {}
                l => {
                    if self.d.tech.layer(l).is_none() {
                        return Err(FormatError::UnknownLayerRef {
                            layer: l.to_string(),
                            line: self.c.line(),
                        });
                    }
                    layers.push(l.to_string());
                }
            }
        }
        if step <= 0 {
            return Err(self.c.err("TRACKS step must be positive"));
        }
        self.d.tracks.push(Tracks {
            axis,
            start,
            count,
            step,
            layers,
        });
        Ok(())
    }

    fn gcellgrid(&mut self) -> Result<(), FormatError> {
        self.c.expect("GCELLGRID")?;
        let axis = self.c.next()?;
        let start = self.c.next_i64()?;
        self.c.expect("DO")?;
        let n = self.c.next_usize()?;
        self.c.expect("STEP")?;
        let step = self.c.next_i64()?;
        self.c.expect(";")?;
        if n < 2 || step <= 0 {
            return Err(self.c.err("GCELLGRID needs DO >= 2 and positive STEP"));
        }
        let slot = match axis {
            "X" => &mut self.gcell_x,
            "Y" => &mut self.gcell_y,
            _ => return Err(self.c.err(format!("bad GCELLGRID axis `{axis}`"))),
        };
        if slot.is_some() {
            return Err(self.c.err("non-uniform GCELLGRID is not supported"));
        }
        *slot = Some((start, n - 1, step));
        Ok(())
    }

    fn section_count(&mut self) -> Result<usize, FormatError> {
        let n = self.c.next_usize()?;
        self.c.expect(";")?;
        Ok(n)
    }

    fn end_section(&mut self, name: &str, declared: usize, found: usize) -> Result<(), FormatError> {
        self.c.expect(name)?;
        if declared != found {
            return Err(self
                .c
                .err(format!("{name} declares {declared} entries but contains {found}")));
        }
        Ok(())
    }

    fn vias(&mut self) -> Result<(), FormatError> {
        self.c.expect("VIAS")?;
        let declared = self.section_count()?;
        let mut found = 0;
        loop {
            match self.c.next()? {
                "-" => {
                    found += 1;
                    let name = self.c.next()?.to_string();
                    let mut shapes = Vec::new();
                    let mut supported = true;
                    loop {
                        match self.c.next()? {
                            ";" => break,
                            "+" => {
                                let kw = self.c.next()?;
                                if kw.eq_ignore_ascii_case("RECT") {
                                    let layer = self.c.next()?.to_string();
                                    if self.d.tech.layer(&layer).is_none() {
                                        return Err(FormatError::UnknownLayerRef {
                                            layer,
                                            line: self.c.line(),
                                        });
                                    }
                                    let a = self.point()?;
                                    let b = self.point()?;
                                    shapes.push(LayerRect {
                                        layer,
                                        rect: Rect::from_points(a, b),
                                    });
                                } else {
                                    supported = false;
                                }
                            }
                            _ => {}
                        }
                    }
                    if supported {
                        self.d.vias.push(ViaDef { name, shapes });
                    } else {
                        self.warnings += 1;
                    }
                }
                "END" => return self.end_section("VIAS", declared, found),
                t => return Err(self.c.err(format!("unexpected `{t}` in VIAS"))),
            }
        }
    }

    fn placement(&mut self) -> Result<(PlacementStatus, Option<(Point, Orientation)>), FormatError> {
        let kw = self.c.next()?.to_ascii_uppercase();
        let status = match kw.as_str() {
            "PLACED" | "COVER" => PlacementStatus::Placed,
            "FIXED" => PlacementStatus::Fixed,
            "UNPLACED" => return Ok((PlacementStatus::Unplaced, None)),
            _ => unreachable!("caller checks keyword"),
        };
        let p = self.point()?;
        let o = self.c.next()?;
        let o = Orientation::parse(o).ok_or_else(|| self.c.err(format!("unsupported orientation `{o}`")))?;
        Ok((status, Some((p, o))))
    }

    fn components(&mut self) -> Result<(), FormatError> {
        self.c.expect("COMPONENTS")?;
        let declared = self.section_count()?;
        let mut found = 0;
        loop {
            match self.c.next()? {
                "-" => {
                    found += 1;
                    let name = self.c.next()?;
                    let master = self.c.next()?;
                    let mut inst = Instance::new(name, master);
                    loop {
                        match self.c.next()? {
                            ";" => break,
                            "+" => {
                                let kw = self.c.peek().unwrap_or("").to_ascii_uppercase();
                                if matches!(kw.as_str(), "PLACED" | "FIXED" | "COVER" | "UNPLACED") {
                                    let (s, at) = self.placement()?;
                                    inst.status = s;
                                    if let Some((p, o)) = at {
                                        inst.location = Some(p);
                                        inst.orientation = o;
                                    }
                                }
                            }
                            _ => {}
                        }
                    }
                    self.d.instances.push(inst);
                }
                "END" => return self.end_section("COMPONENTS", declared, found),
                t => return Err(self.c.err(format!("unexpected `{t}` in COMPONENTS"))),
            }
        }
    }

    fn pins(&mut self) -> Result<(), FormatError> {
        self.c.expect("PINS")?;
        let declared = self.section_count()?;
        let mut found = 0;
        loop {
            match self.c.next()? {
                "-" => {
                    found += 1;
                    let name = self.c.next()?;
                    let mut port = Port::new(name, PinDirection::Input);
                    loop {
                        match self.c.next()? {
                            ";" => break,
                            "+" => {
                                let kw = self.c.next()?.to_ascii_uppercase();
                                match kw.as_str() {
                                    "NET" | "USE" | "SPECIAL" => {
                                        if kw != "SPECIAL" {
                                            self.c.next()?;
                                        }
                                    }
                                    "DIRECTION" => {
                                        let d = self.c.next()?;
                                        port.direction = PinDirection::parse(d)
                                            .ok_or_else(|| self.c.err(format!("bad pin direction `{d}`")))?;
                                    }
                                    "LAYER" => {
                                        let l = self.c.next()?.to_string();
                                        if self.d.tech.layer(&l).is_none() {
                                            return Err(FormatError::UnknownLayerRef {
                                                layer: l,
                                                line: self.c.line(),
                                            });
                                        }
                                        let a = self.point()?;
                                        let b = self.point()?;
                                        port.layer = Some(l);
                                        port.shape = Some(Rect::from_points(a, b));
                                    }
                                    "PLACED" | "FIXED" | "COVER" => {
                                        self.c.back();
                                        let (s, at) = self.placement()?;
                                        port.status = s;
                                        if let Some((p, o)) = at {
                                            port.location = Some(p);
                                            port.orientation = o;
                                        }
                                    }
                                    _ => self.warnings += 1,
                                }
                            }
                            _ => {}
                        }
                    }
                    self.d.ports.push(port);
                }
                "END" => return self.end_section("PINS", declared, found),
                t => return Err(self.c.err(format!("unexpected `{t}` in PINS"))),
            }
        }
    }

    fn nets(&mut self) -> Result<(), FormatError> {
        self.c.expect("NETS")?;
        let declared = self.section_count()?;
        let mut found = 0;
        loop {
            match self.c.next()? {
                "-" => {
                    found += 1;
                    let net = self.net()?;
                    self.d.nets.push(net);
                }
                "END" => return self.end_section("NETS", declared, found),
                t => return Err(self.c.err(format!("unexpected `{t}` in NETS"))),
            }
        }
    }

    fn net(&mut self) -> Result<Net, FormatError> {
        let mut net = Net::new(self.c.next()?);
        loop {
            match self.c.next()? {
                ";" => return Ok(net),
                "(" => {
                    let a = self.c.next()?;
                    let b = self.c.next()?;
                    self.c.expect(")")?;
                    if a == "*" {
                        return Err(self.c.err("wildcard net connections are not supported"));
                    }
                    net.pins.push(if a == "PIN" {
                        NetPin::Port(b.to_string())
                    } else {
                        NetPin::inst(a, b)
                    });
                }
                "+" => {
                    let kw = self.c.next()?.to_ascii_uppercase();
                    if matches!(kw.as_str(), "ROUTED" | "FIXED" | "COVER" | "NOSHIELD") {
                        self.wiring(&mut net)?;
                    } else {
                        self.warnings += 1;
                    }
                }
                _ => {}
            }
        }
    }

    /// Reads one wiring statement up to (not including) the next `+` or `;`.
    fn wiring(&mut self, net: &mut Net) -> Result<(), FormatError> {
        let mut layer = self.c.next()?.to_string();
        let mut width = self.layer_width(&layer)?;
        let mut prev: Option<Point> = None;
        loop {
            let Some(t) = self.c.peek() else {
                return Err(self.c.err("unterminated wiring"));
            };
            match t {
                ";" | "+" => return Ok(()),
                "NEW" => {
                    self.c.next()?;
                    layer = self.c.next()?.to_string();
                    width = self.layer_width(&layer)?;
                    prev = None;
                }
                "(" => {
                    self.c.next()?;
                    let xs = self.c.next()?;
                    let ys = self.c.next()?;
                    if self.c.peek() != Some(")") {
                        self.c.next_i64()?;
                        self.warnings += 1;
                    }
                    self.c.expect(")")?;
                    let coord = |s: &str, prev: Option<i64>| -> Option<i64> {
                        if s == "*" {
                            prev
                        } else {
                            s.parse().ok()
                        }
                    };
                    let x = coord(xs, prev.map(|p| p.x)).ok_or_else(|| self.c.err(format!("bad coordinate `{xs}`")))?;
                    let y = coord(ys, prev.map(|p| p.y)).ok_or_else(|| self.c.err(format!("bad coordinate `{ys}`")))?;
                    let p = Point::new(x, y);
                    if let Some(q) = prev {
                        if q.x != p.x && q.y != p.y {
                            return Err(self.c.err("diagonal wire segment"));
                        }
                        if q != p {
                            net.routing.push(RouteShape::Wire {
                                layer: layer.clone(),
                                start: q,
                                end: p,
                                width,
                            });
                        }
                    }
                    prev = Some(p);
                }
                "TAPER" => {
                    self.c.next()?;
                }
                "TAPERRULE" | "STYLE" | "MASK" => {
                    self.c.next()?;
                    self.c.next()?;
                    self.warnings += 1;
                }
                "RECT" | "VIRTUAL" => {
                    return Err(self.c.err(format!("{t} wiring is not supported")));
                }
                via => {
                    let line = self.c.line();
                    self.c.next()?;
                    let at = prev.ok_or_else(|| self.c.err("via without a location"))?;
                    let def = self.d.via_def(via).ok_or(FormatError::UnknownVia {
                        via: via.to_string(),
                        line,
                    })?;
                    let (lo, hi) = self.d.tech.via_routing_span(def).ok_or(FormatError::UnknownVia {
                        via: via.to_string(),
                        line,
                    })?;
                    let cur = self.d.tech.routing_index(&layer);
                    let next = if cur == Some(lo) { hi } else { lo };
                    net.routing.push(RouteShape::Via {
                        via: via.to_string(),
                        at,
                    });
                    layer = self
                        .d
                        .tech
                        .routing_layer(next)
                        .map(|l| l.name.clone())
                        .unwrap_or_default();
                    width = self.layer_width(&layer)?;
                }
            }
        }
    }

    fn layer_width(&self, layer: &str) -> Result<Dbu, FormatError> {
        match self.d.tech.layer(layer) {
            Some(l) if l.is_routing() => Ok(l.width),
            _ => Err(FormatError::UnknownLayerRef {
                layer: layer.to_string(),
                line: self.c.line(),
            }),
        }
    }
}

fn status_kw(s: PlacementStatus) -> &'static str {
    match s {
        PlacementStatus::Fixed => "FIXED",
        _ => "PLACED",
    }
}

/// Writes a design as DEF. Sections are emitted sorted by name so equal
/// designs give byte-identical text.
pub fn write_def(design: &Design) -> String {
    let mut s = String::new();
    let _ = write_def_into(design, &mut s);
    s
}

fn write_def_into(d: &Design, s: &mut String) -> std::fmt::Result {
    writeln!(s, "VERSION 5.8 ;")?;
    writeln!(s, "DIVIDERCHAR \"/\" ;")?;
    writeln!(s, "BUSBITCHARS \"[]\" ;")?;
    writeln!(s, "DESIGN {} ;", d.name)?;
    writeln!(s, "UNITS DISTANCE MICRONS {} ;", d.dbu_per_micron)?;
    writeln!(s)?;
    writeln!(
        s,
        "DIEAREA ( {} {} ) ( {} {} ) ;",
        d.die_area.lo.x, d.die_area.lo.y, d.die_area.hi.x, d.die_area.hi.y
    )?;
    writeln!(s)?;
    let mut rows: Vec<&Row> = d.rows.iter().collect();
    rows.sort_by(|a, b| a.name.cmp(&b.name));
    for r in rows {
        writeln!(
            s,
            "ROW {} {} {} {} {} DO {} BY 1 STEP {} 0 ;",
            r.name, r.site, r.origin.x, r.origin.y, r.orientation, r.num_sites, r.site_width
        )?;
    }
    for t in &d.tracks {
        let axis = match t.axis {
            TrackAxis::X => "X",
            TrackAxis::Y => "Y",
        };
        write!(s, "TRACKS {axis} {} DO {} STEP {}", t.start, t.count, t.step)?;
        if !t.layers.is_empty() {
            write!(s, " LAYER {}", t.layers.join(" "))?;
        }
        writeln!(s, " ;")?;
    }
    if let Some(g) = &d.gcell_grid {
        writeln!(s, "GCELLGRID X {} DO {} STEP {} ;", g.origin.x, g.x_count + 1, g.x_step)?;
        writeln!(s, "GCELLGRID Y {} DO {} STEP {} ;", g.origin.y, g.y_count + 1, g.y_step)?;
    }
    writeln!(s)?;
    if !d.vias.is_empty() {
        let mut vias: Vec<&ViaDef> = d.vias.iter().collect();
        vias.sort_by(|a, b| a.name.cmp(&b.name));
        writeln!(s, "VIAS {} ;", vias.len())?;
        for v in vias {
            write!(s, "- {}", v.name)?;
            for sh in &v.shapes {
                write!(
                    s,
                    " + RECT {} ( {} {} ) ( {} {} )",
                    sh.layer, sh.rect.lo.x, sh.rect.lo.y, sh.rect.hi.x, sh.rect.hi.y
                )?;
            }
            writeln!(s, " ;")?;
        }
        writeln!(s, "END VIAS")?;
        writeln!(s)?;
    }
    let mut insts: Vec<&Instance> = d.instances.iter().collect();
    insts.sort_by(|a, b| a.name.cmp(&b.name));
    writeln!(s, "COMPONENTS {} ;", insts.len())?;
    for i in insts {
        write!(s, "- {} {}", i.name, i.master)?;
        match (i.status, i.location) {
            (PlacementStatus::Unplaced, _) | (_, None) => {}
            (st, Some(p)) => write!(s, " + {} ( {} {} ) {}", status_kw(st), p.x, p.y, i.orientation)?,
        }
        writeln!(s, " ;")?;
    }
    writeln!(s, "END COMPONENTS")?;
    writeln!(s)?;
    let mut ports: Vec<&Port> = d.ports.iter().collect();
    ports.sort_by(|a, b| a.name.cmp(&b.name));
    writeln!(s, "PINS {} ;", ports.len())?;
    for p in ports {
        let net = d
            .nets
            .iter()
            .find(|n| n.pins.iter().any(|np| matches!(np, NetPin::Port(x) if *x == p.name)))
            .map_or(p.name.as_str(), |n| n.name.as_str());
        write!(
            s,
            "- {} + NET {} + DIRECTION {} + USE SIGNAL",
            p.name,
            net,
            p.direction.as_def()
        )?;
        if let (Some(l), Some(r)) = (&p.layer, &p.shape) {
            write!(s, " + LAYER {} ( {} {} ) ( {} {} )", l, r.lo.x, r.lo.y, r.hi.x, r.hi.y)?;
        }
        match (p.status, p.location) {
            (PlacementStatus::Unplaced, _) | (_, None) => {}
            (st, Some(at)) => write!(s, " + {} ( {} {} ) {}", status_kw(st), at.x, at.y, p.orientation)?,
        }
        writeln!(s, " ;")?;
    }
    writeln!(s, "END PINS")?;
    writeln!(s)?;
    let mut nets: Vec<&Net> = d.nets.iter().collect();
    nets.sort_by(|a, b| a.name.cmp(&b.name));
    writeln!(s, "NETS {} ;", nets.len())?;
    for n in nets {
        write!(s, "- {}", n.name)?;
        for p in &n.pins {
            match p {
                NetPin::Instance { inst, pin } => write!(s, " ( {inst} {pin} )")?,
                NetPin::Port(port) => write!(s, " ( PIN {port} )")?,
            }
        }
        for (k, shape) in n.routing.iter().enumerate() {
            let lead = if k == 0 { "\n  + ROUTED" } else { "\n    NEW" };
            match shape {
                RouteShape::Wire { layer, start, end, .. } => {
                    write!(s, "{lead} {layer} ( {} {} ) ( {} {} )", start.x, start.y, end.x, end.y)?
                }
                RouteShape::Via { via, at } => {
                    let layer = d
                        .via_def(via)
                        .and_then(|v| d.tech.via_routing_span(v))
                        .and_then(|(lo, _)| d.tech.routing_layer(lo))
                        .map_or("", |l| l.name.as_str());
                    write!(s, "{lead} {layer} ( {} {} ) {via}", at.x, at.y)?
                }
            }
        }
        writeln!(s, " ;")?;
    }
    writeln!(s, "END NETS")?;
    writeln!(s)?;
    writeln!(s, "END DESIGN")?;
    Ok(())
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use crate::io::lef::parse_lef;

    pub(crate) const TECH_LEF: &str = r#"
UNITS DATABASE MICRONS 2000 ; END UNITS
LAYER M1 TYPE ROUTING ; DIRECTION HORIZONTAL ; PITCH 0.1 ; WIDTH 0.05 ; SPACING 0.05 ; END M1
LAYER V1 TYPE CUT ; SPACING 0.06 ; WIDTH 0.035 ; END V1
LAYER M2 TYPE ROUTING ; DIRECTION VERTICAL ; PITCH 0.1 ; WIDTH 0.05 ; SPACING 0.05 ; END M2
VIA VIA12 DEFAULT
  LAYER M1 ; RECT -0.025 -0.025 0.025 0.025 ;
  LAYER V1 ; RECT -0.0175 -0.0175 0.0175 0.0175 ;
  LAYER M2 ; RECT -0.025 -0.025 0.025 0.025 ;
END VIA12
SITE core SIZE 0.1 BY 1.0 ; END core
MACRO INV SIZE 0.3 BY 1.0 ; SITE core ;
  PIN A DIRECTION INPUT ; PORT LAYER M1 ; RECT 0.025 0.25 0.075 0.75 ; END END A
  PIN Y DIRECTION OUTPUT ; PORT LAYER M1 ; RECT 0.225 0.25 0.275 0.75 ; END END Y
END INV
END LIBRARY
"#;

    pub(crate) fn tech() -> Arc<Technology> {
        Arc::new(parse_lef(TECH_LEF, None).unwrap())
    }

    const ONE_COMP: &str = r#"
VERSION 5.8 ;
DESIGN top ;
UNITS DISTANCE MICRONS 2000 ;
DIEAREA ( 0 0 ) ( 10000 10000 ) ;
ROW r0 core 0 0 N DO 50 BY 1 STEP 200 0 ;
COMPONENTS 1 ;
- u1 INV + PLACED ( 200 0 ) N ;
END COMPONENTS
PINS 1 ;
- a + NET a + DIRECTION INPUT + LAYER M2 ( -50 -50 ) ( 50 50 ) + PLACED ( 100 5000 ) N ;
END PINS
NETS 1 ;
- a ( PIN a ) ( u1 A )
  + ROUTED M2 ( 100 5000 ) ( 100 1100 ) VIA12 ( 300 * ) ;
END NETS
END DESIGN
"#;

    #[test]
    fn one_component() {
        let d = parse_def(ONE_COMP, tech()).unwrap();
        assert_eq!(d.instances.len(), 1);
        assert_eq!(d.die_area, Rect::new(0, 0, 10000, 10000));
        assert_eq!(d.rows[0].site_height, 2000);
        let n = d.net("a").unwrap();
        assert_eq!(n.routing.len(), 3);
        assert_eq!(
            n.routing[2],
            RouteShape::Wire {
                layer: "M1".into(),
                start: Point::new(100, 1100),
                end: Point::new(300, 1100),
                width: 100
            }
        );
    }

    #[test]
    fn count_mismatch() {
        let bad = ONE_COMP.replace("COMPONENTS 1 ;", "COMPONENTS 2 ;");
        assert!(matches!(parse_def(&bad, tech()), Err(FormatError::Syntax { .. })));
    }

    #[test]
    fn units_mismatch() {
        let bad = ONE_COMP.replace("MICRONS 2000", "MICRONS 1000");
        assert_eq!(
            parse_def(&bad, tech()).unwrap_err(),
            FormatError::UnitsMismatch {
                expected: 2000,
                found: 1000
            }
        );
    }

    #[test]
    fn empty_design_writes_skeleton() {
        let mut d = Design::new("empty", tech());
        d.die_area = Rect::new(0, 0, 100, 100);
        let text = write_def(&d);
        assert!(text.contains("UNITS DISTANCE MICRONS 2000 ;"));
        assert!(text.contains("DIEAREA ( 0 0 ) ( 100 100 ) ;"));
        assert!(text.contains("COMPONENTS 0 ;\nEND COMPONENTS"));
        assert!(text.contains("NETS 0 ;\nEND NETS"));
        let back = parse_def(&text, tech()).unwrap();
        assert_eq!(back, d);
    }

    #[test]
    fn routed_round_trip() {
        let mut d = parse_def(ONE_COMP, tech()).unwrap();
        let text = write_def(&d);
        assert!(text.contains("+ ROUTED M2 ( 100 5000 ) ( 100 1100 )"));
        let mut back = parse_def(&text, tech()).unwrap();
        d.canonicalize();
        back.canonicalize();
        assert_eq!(back, d);
        assert_eq!(write_def(&back), text);
    }
}
