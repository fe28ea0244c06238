// SPDX-License-Identifier: Apache-2.0

//! LEF reader: units, routing/cut layers with their rule parameters, sites,
//! fixed vias and cell macros.

use std::collections::HashSet;

use super::lexer::{Cursor, Decimal};
use super::FormatError;
use crate::geom::{Dbu, Direction, Rect};
use crate::model::{
    CellMaster, EolRule, Layer, LayerKind, LayerRect, MasterPin, PinDirection, Site, SpacingTable, Technology, ViaDef,
};

const DEFAULT_DBU: i64 = 1000;

/// Parses LEF text. `dbu_hint` is the design's database resolution (from DEF
/// `UNITS`); when given it must be a multiple of the LEF's own `DATABASE
/// MICRONS`, and all values are converted at that resolution.
pub fn parse_lef(text: &str, dbu_hint: Option<i64>) -> Result<Technology, FormatError> {
    let lef_units = prescan_units(text)?;
    let dbu = match (dbu_hint, lef_units) {
        (Some(h), Some(l)) if h <= 0 || h % l != 0 => return Err(FormatError::UnitsMismatch { expected: l, found: h }),
        (Some(h), _) if h <= 0 => {
            return Err(FormatError::UnitsMismatch {
                expected: DEFAULT_DBU,
                found: h,
            })
        }
        (Some(h), _) => h,
        (None, Some(l)) => l,
        (None, None) => DEFAULT_DBU,
    };
    let mut p = LefParser {
        c: Cursor::new(text, false),
        dbu,
        tech: Technology::new(dbu),
        ignored_layers: HashSet::new(),
        warnings: 0,
    };
    p.run()?;
    if p.warnings > 0 {
        log::debug!("LEF: {} unsupported statements skipped", p.warnings);
    }
    Ok(p.tech)
}

fn prescan_units(text: &str) -> Result<Option<i64>, FormatError> {
    let c = Cursor::new(text, false);
    let toks: Vec<(&str, usize)> = {
        let mut c = c;
        let mut v = Vec::new();
        while !c.at_end() {
            let line = c.line();
            v.push((c.next()?, line));
        }
        v
    };
    for w in toks.windows(3) {
        if w[0].0.eq_ignore_ascii_case("DATABASE") && w[1].0.eq_ignore_ascii_case("MICRONS") {
            return match w[2].0.parse::<i64>() {
                Ok(v) if v > 0 => Ok(Some(v)),
                _ => Err(FormatError::syntax(w[2].1, "bad DATABASE MICRONS value")),
            };
        }
    }
    Ok(None)
}

struct LefParser<'a> {
    c: Cursor<'a>,
    dbu: i64,
    tech: Technology,
    ignored_layers: HashSet<String>,
    warnings: usize,
}

impl<'a> LefParser<'a> {
    fn dist(&mut self) -> Result<Dbu, FormatError> {
        let line = self.c.line();
        let t = self.c.next()?;
        let d = Decimal::parse(t).ok_or_else(|| FormatError::syntax(line, format!("expected number, found `{t}`")))?;
        d.scaled_exact(self.dbu, 1).ok_or(FormatError::OffGrid {
            value: t.to_string(),
            line,
        })
    }

    fn area(&mut self) -> Result<i64, FormatError> {
        let line = self.c.line();
        let t = self.c.next()?;
        let d = Decimal::parse(t).ok_or_else(|| FormatError::syntax(line, format!("expected number, found `{t}`")))?;
        d.scaled_exact(self.dbu, 2).ok_or(FormatError::OffGrid {
            value: t.to_string(),
            line,
        })
    }

    fn rect(&mut self) -> Result<Rect, FormatError> {
        let x1 = self.dist()?;
        let y1 = self.dist()?;
        let x2 = self.dist()?;
        let y2 = self.dist()?;
        Ok(Rect::new(x1, y1, x2, y2))
    }

    fn run(&mut self) -> Result<(), FormatError> {
        while let Some(t) = self.c.peek() {
            let kw = t.to_ascii_uppercase();
            match kw.as_str() {
                "END" => {
                    self.c.next()?;
                    if self.c.eat("LIBRARY") {
                        break;
                    }
                    return Err(self.c.err("unexpected END"));
                }
                "UNITS" => {
                    self.c.next()?;
                    self.c.skip_block("UNITS")?;
                }
                "LAYER" => self.layer()?,
                "VIA" => self.via()?,
                "SITE" => self.site()?,
                "MACRO" => self.macro_()?,
                "VIARULE" | "NONDEFAULTRULE" => {
                    self.c.next()?;
                    let name = self.c.next()?;
                    self.warnings += 1;
                    self.c.skip_block(name)?;
                }
                "PROPERTYDEFINITIONS" | "SPACING" | "IRDROP" | "NOISETABLE" | "CORRECTIONTABLE" => {
                    self.c.next()?;
                    self.warnings += 1;
                    self.c.skip_block(t)?;
                }
                "BEGINEXT" => {
                    self.warnings += 1;
                    while !self.c.next()?.eq_ignore_ascii_case("ENDEXT") {}
                }
                _ => {
                    self.c.skip_statement()?;
                }
            }
        }
        Ok(())
    }

    fn layer(&mut self) -> Result<(), FormatError> {
        self.c.expect("LAYER")?;
        let name = self.c.next()?.to_string();
        let mut kind: Option<LayerKind> = None;
        let mut l = Layer::new_routing(&name, Direction::Horizontal, 0, 0);
        let mut direction_set = false;
        let mut spacing: Option<SpacingTable> = None;
        let mut table: Option<SpacingTable> = None;
        let mut cut_spacing = None;
        loop {
            let kw = self.c.next()?.to_ascii_uppercase();
            match kw.as_str() {
                "END" => {
                    let n = self.c.next()?;
                    if n != name {
                        return Err(self.c.err(format!("expected END {name}")));
                    }
                    break;
                }
                "TYPE" => {
                    kind = match self.c.next()?.to_ascii_uppercase().as_str() {
                        "ROUTING" => Some(LayerKind::Routing),
                        "CUT" => Some(LayerKind::Cut),
                        _ => None,
                    };
                    self.c.skip_statement()?;
                }
                "DIRECTION" => {
                    l.direction = match self.c.next()?.to_ascii_uppercase().as_str() {
                        "HORIZONTAL" => Direction::Horizontal,
                        "VERTICAL" => Direction::Vertical,
                        d => return Err(self.c.err(format!("bad DIRECTION `{d}`"))),
                    };
                    direction_set = true;
                    self.c.expect(";")?;
                }
                "PITCH" => {
                    l.pitch = self.dist()?;
                    self.skip_rest()?;
                }
                "OFFSET" => {
                    l.offset = Some(self.dist()?);
                    self.skip_rest()?;
                }
                "WIDTH" => {
                    l.width = self.dist()?;
                    self.c.expect(";")?;
                }
                "AREA" => {
                    l.min_area = self.area()?;
                    self.c.expect(";")?;
                }
                "SPACING" => {
                    let s = self.dist()?;
                    if self.c.eat(";") {
                        if spacing.is_none() {
                            spacing = Some(SpacingTable::uniform(s));
                        }
                        if cut_spacing.is_none() {
                            cut_spacing = Some(s);
                        }
                    } else if self.c.eat("ENDOFLINE") {
                        let eol_width = self.dist()?;
                        self.c.expect("WITHIN")?;
                        let eol_within = self.dist()?;
                        l.eol = Some(EolRule {
                            eol_space: s,
                            eol_width,
                            eol_within,
                        });
                        self.skip_rest()?;
                    } else {
                        self.warnings += 1;
                        self.c.skip_statement()?;
                    }
                }
                "SPACINGTABLE" => {
                    table = Some(self.spacing_table()?);
                }
                ";" => {}
                _ => {
                    self.warnings += 1;
                    self.c.skip_statement()?;
                }
            }
        }
        match kind {
            Some(LayerKind::Routing) => {
                if l.pitch <= 0 || l.width <= 0 {
                    return Err(self
                        .c
                        .err(format!("routing layer {name} needs positive PITCH and WIDTH")));
                }
                if !direction_set {
                    let prev = self.tech.routing_layers().last().map(|p| p.direction);
                    l.direction = prev.map_or(Direction::Horizontal, |d| d.other());
                }
                l.spacing = table.or(spacing);
                self.tech.push_layer(l);
            }
            Some(LayerKind::Cut) => {
                let mut cut = Layer::new_cut(&name, l.width);
                cut.cut_spacing = cut_spacing;
                self.tech.push_layer(cut);
            }
            None => {
                self.ignored_layers.insert(name);
            }
        }
        Ok(())
    }

    fn skip_rest(&mut self) -> Result<(), FormatError> {
        self.c.skip_statement()
    }

    fn spacing_table(&mut self) -> Result<SpacingTable, FormatError> {
        if !self.c.eat("PARALLELRUNLENGTH") {
            self.warnings += 1;
            self.c.skip_statement()?;
            return Err(self.c.err("only PARALLELRUNLENGTH spacing tables are supported"));
        }
        let mut prls = Vec::new();
        while self
            .c
            .peek()
            .is_some_and(|t| !t.eq_ignore_ascii_case("WIDTH") && t != ";")
        {
            prls.push(self.dist()?);
        }
        let mut widths = Vec::new();
        let mut spacing = Vec::new();
        while self.c.eat("WIDTH") {
            widths.push(self.dist()?);
            let mut row = Vec::with_capacity(prls.len());
            for _ in 0..prls.len() {
                row.push(self.dist()?);
            }
            spacing.push(row);
        }
        self.c.expect(";")?;
        if prls.is_empty() || widths.is_empty() {
            return Err(self.c.err("empty spacing table"));
        }
        if prls.windows(2).any(|w| w[0] >= w[1]) || widths.windows(2).any(|w| w[0] >= w[1]) {
            return Err(self.c.err("spacing table axes must increase"));
        }
        Ok(SpacingTable { prls, widths, spacing })
    }

    fn check_layer(&self, name: &str, line: usize) -> Result<bool, FormatError> {
        if self.tech.layer(name).is_some() {
            Ok(true)
        } else if self.ignored_layers.contains(name) {
            Ok(false)
        } else {
            Err(FormatError::UnknownLayerRef {
                layer: name.to_string(),
                line,
            })
        }
    }

    /// Reads `LAYER x ; RECT ... ;` geometry until a bare `END`.
    fn geometry(&mut self) -> Result<Vec<LayerRect>, FormatError> {
        let mut out = Vec::new();
        let mut layer: Option<String> = None;
        loop {
            let line = self.c.line();
            let kw = self.c.next()?.to_ascii_uppercase();
            match kw.as_str() {
                "END" => return Ok(out),
                "LAYER" => {
                    let name = self.c.next()?;
                    layer = self.check_layer(name, line)?.then(|| name.to_string());
                    self.c.skip_statement()?;
                }
                "RECT" => {
                    if self.c.eat("MASK") {
                        self.c.next()?;
                    }
                    let r = self.rect()?;
                    self.c.expect(";")?;
                    if let Some(l) = &layer {
                        out.push(LayerRect {
                            layer: l.clone(),
                            rect: r,
                        });
                    }
                }
                ";" => {}
                _ => {
                    self.warnings += 1;
                    self.c.skip_statement()?;
                }
            }
        }
    }

    fn via(&mut self) -> Result<(), FormatError> {
        self.c.expect("VIA")?;
        let name = self.c.next()?.to_string();
        self.c.eat("DEFAULT");
        self.c.eat("GENERATED");
        self.c.eat(";");
        let mut shapes = Vec::new();
        let mut layer: Option<String> = None;
        loop {
            let line = self.c.line();
            let kw = self.c.next()?.to_ascii_uppercase();
            match kw.as_str() {
                "END" => {
                    if self.c.next()? != name {
                        return Err(self.c.err(format!("expected END {name}")));
                    }
                    break;
                }
                "LAYER" => {
                    let l = self.c.next()?;
                    layer = self.check_layer(l, line)?.then(|| l.to_string());
                    self.c.skip_statement()?;
                }
                "RECT" => {
                    if self.c.eat("MASK") {
                        self.c.next()?;
                    }
                    let r = self.rect()?;
                    self.c.expect(";")?;
                    if let Some(l) = &layer {
                        shapes.push(LayerRect {
                            layer: l.clone(),
                            rect: r,
                        });
                    }
                }
                ";" => {}
                _ => {
                    self.warnings += 1;
                    self.c.skip_statement()?;
                }
            }
        }
        self.tech.vias.push(ViaDef { name, shapes });
        Ok(())
    }

    fn site(&mut self) -> Result<(), FormatError> {
        self.c.expect("SITE")?;
        let name = self.c.next()?.to_string();
        let mut size = None;
        loop {
            let kw = self.c.next()?.to_ascii_uppercase();
            match kw.as_str() {
                "END" => {
                    self.c.next()?;
                    break;
                }
                "SIZE" => {
                    let w = self.dist()?;
                    self.c.expect("BY")?;
                    let h = self.dist()?;
                    self.c.expect(";")?;
                    size = Some((w, h));
                }
                ";" => {}
                _ => self.c.skip_statement()?,
            }
        }
        let (width, height) = size.ok_or_else(|| self.c.err(format!("site {name} has no SIZE")))?;
        if width <= 0 || height <= 0 {
            return Err(self.c.err(format!("site {name} has non-positive size")));
        }
        self.tech.sites.push(Site { name, width, height });
        Ok(())
    }

    fn macro_(&mut self) -> Result<(), FormatError> {
        self.c.expect("MACRO")?;
        let name = self.c.next()?.to_string();
        let mut m = CellMaster {
            name: name.clone(),
            width: 0,
            height: 0,
            site: None,
            pins: Vec::new(),
            obstructions: Vec::new(),
        };
        let mut origin = (0, 0);
        loop {
            let kw = self.c.next()?.to_ascii_uppercase();
            match kw.as_str() {
                "END" => {
                    if self.c.next()? != name {
                        return Err(self.c.err(format!("expected END {name}")));
                    }
                    break;
                }
                "SIZE" => {
                    m.width = self.dist()?;
                    self.c.expect("BY")?;
                    m.height = self.dist()?;
                    self.c.expect(";")?;
                }
                "ORIGIN" => {
                    origin = (self.dist()?, self.dist()?);
                    self.c.expect(";")?;
                }
                "SITE" => {
                    m.site = Some(self.c.next()?.to_string());
                    self.c.skip_statement()?;
                }
                "PIN" => {
                    let (pin, power) = self.pin()?;
                    if power {
                        m.obstructions.extend(pin.shapes);
                    } else {
                        if m.pin(&pin.name).is_some() {
                            return Err(self.c.err(format!("duplicate pin {} in {name}", pin.name)));
                        }
                        m.pins.push(pin);
                    }
                }
                "OBS" => {
                    let g = self.geometry()?;
                    m.obstructions.extend(g);
                }
                ";" => {}
                _ => self.c.skip_statement()?,
            }
        }
        if m.width <= 0 || m.height <= 0 {
            return Err(self.c.err(format!("macro {name} needs a positive SIZE")));
        }
        if let Some(site) = m.site.as_ref().and_then(|s| self.tech.site(s)) {
            if m.width % site.width != 0 || m.height % site.height != 0 {
                return Err(self
                    .c
                    .err(format!("macro {name} size is not a multiple of site {}", site.name)));
            }
        }
        if origin != (0, 0) {
            for s in m
                .pins
                .iter_mut()
                .flat_map(|p| p.shapes.iter_mut())
                .chain(m.obstructions.iter_mut())
            {
                s.rect = s.rect.translate(origin.0, origin.1);
            }
        }
        self.tech.push_master(m);
        Ok(())
    }

    /// Returns the pin and whether it is a supply pin.
    fn pin(&mut self) -> Result<(MasterPin, bool), FormatError> {
        let name = self.c.next()?.to_string();
        let mut pin = MasterPin {
            name: name.clone(),
            direction: PinDirection::Input,
            shapes: Vec::new(),
        };
        let mut power = false;
        loop {
            let kw = self.c.next()?.to_ascii_uppercase();
            match kw.as_str() {
                "END" => {
                    if self.c.next()? != name {
                        return Err(self.c.err(format!("expected END {name}")));
                    }
                    break;
                }
                "DIRECTION" => {
                    let d = self.c.next()?;
                    pin.direction = match d.to_ascii_uppercase().as_str() {
                        "INPUT" => PinDirection::Input,
                        "OUTPUT" => PinDirection::Output,
                        "INOUT" | "FEEDTHRU" => PinDirection::Inout,
                        _ => return Err(self.c.err(format!("bad pin DIRECTION `{d}`"))),
                    };
                    self.c.skip_statement()?;
                }
                "USE" => {
                    let u = self.c.next()?.to_ascii_uppercase();
                    power = u == "POWER" || u == "GROUND";
                    self.c.skip_statement()?;
                }
                "PORT" => {
                    self.c.eat(";");
                    let g = self.geometry()?;
                    pin.shapes.extend(g);
                }
                ";" => {}
                _ => self.c.skip_statement()?,
            }
        }
        Ok((pin, power))
    }
}

/// Exact decimal rendering of `v / dbu` (DBU to microns).
pub(crate) fn fmt_um(v: Dbu, dbu: i64) -> String {
    let neg = v < 0;
    let a = v.unsigned_abs() as u128;
    let d = dbu.max(1) as u128;
    let mut s = format!("{}{}", if neg { "-" } else { "" }, a / d);
    let mut r = a % d;
    if r != 0 {
        s.push('.');
        let mut digits = 0;
        while r != 0 && digits < 12 {
            r *= 10;
            s.push(char::from(b'0' + (r / d) as u8));
            r %= d;
            digits += 1;
        }
    }
    s
}

fn fmt_area(v: i64, dbu: i64) -> String {
    // Area in um^2 is v / dbu^2.
    let neg = v < 0;
    let a = v.unsigned_abs() as u128;
    let d = (dbu.max(1) as u128).pow(2);
    let mut s = format!("{}{}", if neg { "-" } else { "" }, a / d);
    let mut r = a % d;
    if r != 0 {
        s.push('.');
        let mut digits = 0;
        while r != 0 && digits < 16 {
            r *= 10;
            s.push(char::from(b'0' + (r / d) as u8));
            r %= d;
            digits += 1;
        }
    }
    s
}

fn write_shapes(s: &mut String, shapes: &[LayerRect], indent: &str, dbu: i64) -> std::fmt::Result {
    use std::fmt::Write as _;
    let mut last: Option<&str> = None;
    for sh in shapes {
        if last != Some(sh.layer.as_str()) {
            writeln!(s, "{indent}LAYER {} ;", sh.layer)?;
            last = Some(&sh.layer);
        }
        let r = sh.rect;
        writeln!(
            s,
            "{indent}  RECT {} {} {} {} ;",
            fmt_um(r.lo.x, dbu),
            fmt_um(r.lo.y, dbu),
            fmt_um(r.hi.x, dbu),
            fmt_um(r.hi.y, dbu)
        )?;
    }
    Ok(())
}

/// Writes the technology as LEF. Parsing the output at the same database
/// resolution gives back an equal technology.
pub fn write_lef(tech: &Technology) -> String {
    let mut s = String::new();
    write_lef_into(tech, &mut s).expect("writing to a String");
    s
}

fn write_lef_into(t: &Technology, s: &mut String) -> std::fmt::Result {
    use std::fmt::Write as _;
    let dbu = t.dbu_per_micron;
    let um = |v: Dbu| fmt_um(v, dbu);
    writeln!(s, "VERSION 5.8 ;\nBUSBITCHARS \"[]\" ;\nDIVIDERCHAR \"/\" ;")?;
    writeln!(s, "UNITS\n  DATABASE MICRONS {dbu} ;\nEND UNITS\n")?;
    for l in &t.layers {
        writeln!(s, "LAYER {}", l.name)?;
        match l.kind {
            LayerKind::Routing => {
                writeln!(s, "  TYPE ROUTING ;")?;
                let d = match l.direction {
                    Direction::Horizontal => "HORIZONTAL",
                    Direction::Vertical => "VERTICAL",
                };
                writeln!(s, "  DIRECTION {d} ;")?;
                writeln!(s, "  PITCH {} ;", um(l.pitch))?;
                if let Some(o) = l.offset {
                    writeln!(s, "  OFFSET {} ;", um(o))?;
                }
                writeln!(s, "  WIDTH {} ;", um(l.width))?;
                if l.min_area > 0 {
                    writeln!(s, "  AREA {} ;", fmt_area(l.min_area, dbu))?;
                }
                if let Some(tb) = &l.spacing {
                    write!(s, "  SPACINGTABLE\n    PARALLELRUNLENGTH")?;
                    for p in &tb.prls {
                        write!(s, " {}", um(*p))?;
                    }
                    for (w, row) in tb.widths.iter().zip(&tb.spacing) {
                        write!(s, "\n    WIDTH {}", um(*w))?;
                        for v in row {
                            write!(s, " {}", um(*v))?;
                        }
                    }
                    writeln!(s, " ;")?;
                }
                if let Some(e) = &l.eol {
                    writeln!(
                        s,
                        "  SPACING {} ENDOFLINE {} WITHIN {} ;",
                        um(e.eol_space),
                        um(e.eol_width),
                        um(e.eol_within)
                    )?;
                }
            }
            LayerKind::Cut => {
                writeln!(s, "  TYPE CUT ;")?;
                if let Some(c) = l.cut_spacing {
                    writeln!(s, "  SPACING {} ;", um(c))?;
                }
                writeln!(s, "  WIDTH {} ;", um(l.width))?;
            }
        }
        writeln!(s, "END {}\n", l.name)?;
    }
    for v in &t.vias {
        writeln!(s, "VIA {} DEFAULT", v.name)?;
        write_shapes(s, &v.shapes, "  ", dbu)?;
        writeln!(s, "END {}\n", v.name)?;
    }
    for site in &t.sites {
        writeln!(s, "SITE {}\n  CLASS CORE ;", site.name)?;
        writeln!(
            s,
            "  SIZE {} BY {} ;\nEND {}\n",
            um(site.width),
            um(site.height),
            site.name
        )?;
    }
    for m in &t.masters {
        writeln!(s, "MACRO {}\n  CLASS CORE ;\n  ORIGIN 0 0 ;", m.name)?;
        writeln!(s, "  SIZE {} BY {} ;", um(m.width), um(m.height))?;
        if let Some(site) = &m.site {
            writeln!(s, "  SITE {site} ;")?;
        }
        for p in &m.pins {
            let d = match p.direction {
                PinDirection::Input => "INPUT",
                PinDirection::Output => "OUTPUT",
                PinDirection::Inout => "INOUT",
            };
            writeln!(s, "  PIN {}\n    DIRECTION {d} ;\n    PORT", p.name)?;
            write_shapes(s, &p.shapes, "      ", dbu)?;
            writeln!(s, "    END\n  END {}", p.name)?;
        }
        if !m.obstructions.is_empty() {
            writeln!(s, "  OBS")?;
            write_shapes(s, &m.obstructions, "    ", dbu)?;
            writeln!(s, "  END")?;
        }
        writeln!(s, "END {}\n", m.name)?;
    }
    writeln!(s, "END LIBRARY")
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) const SMALL_LEF: &str = r#"
VERSION 5.8 ;
UNITS
  DATABASE MICRONS 2000 ;
END UNITS
LAYER M1
  TYPE ROUTING ;
  DIRECTION HORIZONTAL ;
  PITCH 0.1 ;
  WIDTH 0.05 ;
  AREA 0.02 ;
  SPACINGTABLE
    PARALLELRUNLENGTH 0.0 0.5
    WIDTH 0.0 0.05 0.06
    WIDTH 0.1 0.08 0.1 ;
END M1
LAYER V1
  TYPE CUT ;
  SPACING 0.06 ;
  WIDTH 0.035 ;
END V1
LAYER M2
  TYPE ROUTING ;
  DIRECTION VERTICAL ;
  PITCH 0.1 ;
  WIDTH 0.05 ;
  SPACING 0.05 ;
  SPACING 0.05 ENDOFLINE 0.06 WITHIN 0.025 ;
END M2
SITE core
  CLASS CORE ;
  SIZE 0.1 BY 1.0 ;
END core
MACRO INV_X1
  CLASS CORE ;
  SIZE 0.3 BY 1.0 ;
  SITE core ;
  PIN A
    DIRECTION INPUT ;
    PORT
      LAYER M1 ;
        RECT 0.025 0.25 0.075 0.75 ;
    END
  END A
  PIN ZN
    DIRECTION OUTPUT ;
    PORT
      LAYER M1 ;
        RECT 0.225 0.25 0.275 0.75 ;
    END
  END ZN
END INV_X1
END LIBRARY
"#;

    #[test]
    fn small_library() {
        let t = parse_lef(SMALL_LEF, None).unwrap();
        assert_eq!(t.layers.len(), 3);
        assert_eq!(t.masters.len(), 1);
        let m1 = t.layer("M1").unwrap();
        // 0.02 um^2 at 2000 DBU per micron.
        assert_eq!(m1.min_area, 80_000);
        assert_eq!(m1.pitch, 200);
        let tbl = m1.spacing.as_ref().unwrap();
        assert_eq!(tbl.lookup(100, 0), 100);
        assert_eq!(tbl.lookup(300, 2000), 200);
        let m2 = t.layer("M2").unwrap();
        assert_eq!(m2.direction, Direction::Vertical);
        assert_eq!(m2.eol.unwrap().eol_space, 100);
        assert_eq!(t.layer("V1").unwrap().cut_spacing, Some(120));
        let inv = t.master("INV_X1").unwrap();
        assert_eq!((inv.width, inv.height), (600, 2000));
        assert_eq!(inv.pin("A").unwrap().shapes[0].rect, Rect::new(50, 500, 150, 1500));
    }

    #[test]
    fn undeclared_pin_layer() {
        let lef = SMALL_LEF.replace("LAYER M1 ;\n        RECT 0.225", "LAYER M9 ;\n        RECT 0.225");
        assert!(matches!(
            parse_lef(&lef, None),
            Err(FormatError::UnknownLayerRef { ref layer, .. }) if layer == "M9"
        ));
    }

    #[test]
    fn off_grid_value() {
        let lef = SMALL_LEF.replace(
            "PITCH 0.1 ;\n  WIDTH 0.05 ;\n  AREA",
            "PITCH 0.1 ;\n  WIDTH 0.0501 ;\n  AREA",
        );
        assert!(matches!(parse_lef(&lef, None), Err(FormatError::OffGrid { .. })));
    }

    #[test]
    fn write_then_parse() {
        let t = parse_lef(SMALL_LEF, None).unwrap();
        let again = parse_lef(&write_lef(&t), None).unwrap();
        assert_eq!(again, t);
        assert_eq!(fmt_um(-25, 2000), "-0.0125");
    }

    #[test]
    fn hint_must_be_multiple() {
        assert!(parse_lef(SMALL_LEF, Some(4000)).is_ok());
        assert!(matches!(
            parse_lef(SMALL_LEF, Some(3000)),
            Err(FormatError::UnitsMismatch { .. })
        ));
    }
}
