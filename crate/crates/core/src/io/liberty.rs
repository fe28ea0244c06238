// SPDX-License-Identifier: Apache-2.0

//! Liberty subset: pin capacitances, directions and NLDM delay/slew tables.
//! Values are converted to ps and fF at parse time.

use std::collections::{BTreeMap, HashMap};
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::FormatError;
use crate::model::PinDirection;

const MAX_DEPTH: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ArcSense {
    Positive,
    Negative,
    Non,
}

/// 2D lookup table indexed by input slew (ps) and output load (fF).
/// `values[i][j]` belongs to `slews[i]`, `loads[j]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Lut {
    pub slews: Vec<f64>,
    pub loads: Vec<f64>,
    pub values: Vec<Vec<f64>>,
}

impl Lut {
    pub fn constant(v: f64) -> Lut {
        Lut {
            slews: vec![0.0],
            loads: vec![0.0],
            values: vec![vec![v]],
        }
    }

    /// Bilinear interpolation, clamped to the table bounds. The flag reports
    /// whether either coordinate was clamped.
    pub fn lookup(&self, slew: f64, load: f64) -> (f64, bool) {
        let (i0, i1, ti, ci) = bracket(&self.slews, slew);
        let (j0, j1, tj, cj) = bracket(&self.loads, load);
        let v00 = self.values[i0][j0];
        let v01 = self.values[i0][j1];
        let v10 = self.values[i1][j0];
        let v11 = self.values[i1][j1];
        let v = v00 * (1.0 - ti) * (1.0 - tj) + v01 * (1.0 - ti) * tj + v10 * ti * (1.0 - tj) + v11 * ti * tj;
        (v, ci || cj)
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Lut {
        Lut {
            slews: self.slews.clone(),
            loads: self.loads.clone(),
            values: self.values.iter().map(|r| r.iter().map(|v| f(*v)).collect()).collect(),
        }
    }

    /// Pointwise maximum on the union of both index grids.
    pub fn max_with(&self, other: &Lut) -> Lut {
        if self.slews == other.slews && self.loads == other.loads {
            let values = self
                .values
                .iter()
                .zip(&other.values)
                .map(|(a, b)| a.iter().zip(b).map(|(x, y)| x.max(*y)).collect())
                .collect();
            return Lut {
                slews: self.slews.clone(),
                loads: self.loads.clone(),
                values,
            };
        }
        let slews = merge_axes(&self.slews, &other.slews);
        let loads = merge_axes(&self.loads, &other.loads);
        let values = slews
            .iter()
            .map(|s| {
                loads
                    .iter()
                    .map(|l| self.lookup(*s, *l).0.max(other.lookup(*s, *l).0))
                    .collect()
            })
            .collect();
        Lut { slews, loads, values }
    }

    fn check(&self) -> bool {
        let inc = |a: &[f64]| !a.is_empty() && a.windows(2).all(|w| w[0] < w[1]);
        inc(&self.slews)
            && inc(&self.loads)
            && self.values.len() == self.slews.len()
            && self.values.iter().all(|r| r.len() == self.loads.len())
            && self.values.iter().flatten().all(|v| v.is_finite())
    }
}

fn merge_axes(a: &[f64], b: &[f64]) -> Vec<f64> {
    let mut v: Vec<f64> = a.iter().chain(b).copied().collect();
    v.sort_by(f64::total_cmp);
    v.dedup();
    v
}

/// Lower/upper index and weight of `x` on `axis`, clamped.
fn bracket(axis: &[f64], x: f64) -> (usize, usize, f64, bool) {
    let n = axis.len();
    let x = if x.is_nan() { axis[0] } else { x };
    if n == 1 {
        return (0, 0, 0.0, x != axis[0]);
    }
    if x <= axis[0] {
        return (0, 1, 0.0, x < axis[0]);
    }
    if x >= axis[n - 1] {
        return (n - 2, n - 1, 1.0, x > axis[n - 1]);
    }
    let hi = axis.partition_point(|a| *a <= x).min(n - 1);
    let lo = hi - 1;
    (lo, hi, (x - axis[lo]) / (axis[hi] - axis[lo]), false)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LibPin {
    pub name: String,
    pub direction: PinDirection,
    /// fF
    pub capacitance: f64,
    pub max_capacitance: Option<f64>,
    pub is_clock: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LibArc {
    pub from: String,
    pub to: String,
    pub sense: ArcSense,
    /// Clock-to-output arc of a sequential cell.
    pub clocked: bool,
    /// ps, worst of rise and fall.
    pub delay: Lut,
    /// ps, worst of rise and fall transition.
    pub slew: Lut,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LibCell {
    pub name: String,
    pub area: f64,
    pub leakage_power: f64,
    pub pins: BTreeMap<String, LibPin>,
    pub arcs: Vec<LibArc>,
    pub sequential: bool,
}

impl LibCell {
    pub fn pin(&self, name: &str) -> Option<&LibPin> {
        self.pins.get(name)
    }

    pub fn clock_pin(&self) -> Option<&LibPin> {
        self.pins.values().find(|p| p.is_clock)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimingLibrary {
    pub name: String,
    /// Library capacitance unit in fF; SDC loads are multiplied by this.
    pub cap_unit_ff: f64,
    pub cells: BTreeMap<String, LibCell>,
    pub warnings: usize,
}

impl TimingLibrary {
    pub fn cell(&self, name: &str) -> Option<&LibCell> {
        self.cells.get(name)
    }
}

#[derive(Debug, Clone)]
struct Attr {
    name: String,
    values: Vec<String>,
    line: usize,
}

#[derive(Debug, Clone, Default)]
struct Group {
    kind: String,
    args: Vec<String>,
    attrs: Vec<Attr>,
    groups: Vec<Group>,
    line: usize,
}

impl Group {
    fn attr(&self, name: &str) -> Option<&Attr> {
        self.attrs.iter().find(|a| a.name == name)
    }

    fn value(&self, name: &str) -> Option<&str> {
        self.attr(name).and_then(|a| a.values.first()).map(String::as_str)
    }
}

#[derive(Debug, Clone, Copy)]
struct Tok<'a> {
    text: &'a str,
    quoted: bool,
    line: usize,
}

fn tokenize(text: &str) -> Vec<Tok<'_>> {
    let b = text.as_bytes();
    let mut out = Vec::new();
    let (mut i, mut line) = (0, 1);
    while i < b.len() {
        let c = b[i];
        match c {
            b'\n' => {
                line += 1;
                i += 1;
            }
            b'\\' => i += 1,
            c if c.is_ascii_whitespace() => i += 1,
            b'/' if b.get(i + 1) == Some(&b'*') => {
                i += 2;
                while i < b.len() && !(b[i] == b'*' && b.get(i + 1) == Some(&b'/')) {
                    line += usize::from(b[i] == b'\n');
                    i += 1;
                }
                i += 2;
            }
            b'/' if b.get(i + 1) == Some(&b'/') => {
                while i < b.len() && b[i] != b'\n' {
                    i += 1;
                }
            }
            b'"' => {
                let start = i + 1;
                let l = line;
                i += 1;
                while i < b.len() && b[i] != b'"' {
                    line += usize::from(b[i] == b'\n');
                    i += 1;
                }
                out.push(Tok {
                    text: &text[start..i.min(b.len())],
                    quoted: true,
                    line: l,
                });
                i += 1;
            }
            b'(' | b')' | b'{' | b'}' | b':' | b';' | b',' => {
                out.push(Tok {
                    text: &text[i..i + 1],
                    quoted: false,
                    line,
                });
                i += 1;
            }
            _ => {
                let start = i;
                while i < b.len() && !b[i].is_ascii_whitespace() && !b"(){}:;,\"\\".contains(&b[i]) {
                    i += 1;
                }
                if start == i {
                    // Lone non-ASCII byte sequences are consumed as one token.
                    let len = text[i..].chars().next().map_or(1, char::len_utf8);
                    i += len;
                }
                out.push(Tok {
                    text: &text[start..i],
                    quoted: false,
                    line,
                });
            }
        }
    }
    out
}

struct TreeParser<'a> {
    toks: Vec<Tok<'a>>,
    pos: usize,
}

impl<'a> TreeParser<'a> {
    fn line(&self) -> usize {
        self.toks
            .get(self.pos)
            .or_else(|| self.toks.last())
            .map_or(1, |t| t.line)
    }

    fn err(&self, msg: impl Into<String>) -> FormatError {
        FormatError::syntax(self.line(), msg)
    }

    fn peek(&self) -> Option<Tok<'a>> {
        self.toks.get(self.pos).copied()
    }

    fn next(&mut self) -> Result<Tok<'a>, FormatError> {
        let t = self.peek().ok_or_else(|| self.err("unexpected end of input"))?;
        self.pos += 1;
        Ok(t)
    }

    fn is(&self, s: &str) -> bool {
        self.peek().is_some_and(|t| !t.quoted && t.text == s)
    }

    fn expect(&mut self, s: &str) -> Result<(), FormatError> {
        let t = self.next()?;
        if !t.quoted && t.text == s {
            Ok(())
        } else {
            Err(FormatError::syntax(
                t.line,
                format!("expected `{s}`, found `{}`", t.text),
            ))
        }
    }

    fn word(&mut self) -> Result<Tok<'a>, FormatError> {
        let t = self.next()?;
        if !t.quoted && matches!(t.text, "(" | ")" | "{" | "}" | ":" | ";" | ",") {
            return Err(FormatError::syntax(t.line, format!("unexpected `{}`", t.text)));
        }
        Ok(t)
    }

    /// `( a, b, ... )`, the opening parenthesis already consumed.
    fn args(&mut self) -> Result<Vec<String>, FormatError> {
        let mut out = Vec::new();
        if self.is(")") {
            self.pos += 1;
            return Ok(out);
        }
        loop {
            out.push(self.word()?.text.to_string());
            match self.next()?.text {
                ")" => return Ok(out),
                "," => {}
                t => return Err(self.err(format!("expected `,` or `)`, found `{t}`"))),
            }
        }
    }

    /// Body statements until the closing `}`.
    fn body(&mut self, g: &mut Group, depth: usize) -> Result<(), FormatError> {
        if depth > MAX_DEPTH {
            return Err(self.err("groups nested too deeply"));
        }
        loop {
            if self.is("}") {
                self.pos += 1;
                return Ok(());
            }
            let name = self.word()?;
            let line = name.line;
            if self.is(":") {
                self.pos += 1;
                let mut v = self.word()?.text.to_string();
                // Unquoted expressions such as `1.0 + 2` are glued together.
                while self
                    .peek()
                    .is_some_and(|t| !matches!(t.text, ";" | "}") && t.line == line && !t.quoted)
                {
                    v.push(' ');
                    v.push_str(self.next()?.text);
                }
                if self.is(";") {
                    self.pos += 1;
                }
                g.attrs.push(Attr {
                    name: name.text.to_string(),
                    values: vec![v],
                    line,
                });
            } else if self.is("(") {
                self.pos += 1;
                let args = self.args()?;
                if self.is("{") {
                    self.pos += 1;
                    let mut child = Group {
                        kind: name.text.to_string(),
                        args,
                        line,
                        ..Group::default()
                    };
                    self.body(&mut child, depth + 1)?;
                    g.groups.push(child);
                } else {
                    if self.is(";") {
                        self.pos += 1;
                    }
                    g.attrs.push(Attr {
                        name: name.text.to_string(),
                        values: args,
                        line,
                    });
                }
            } else {
                return Err(FormatError::syntax(
                    line,
                    format!("expected `:` or `(` after `{}`", name.text),
                ));
            }
        }
    }
}

fn parse_tree(text: &str) -> Result<Group, FormatError> {
    let mut p = TreeParser {
        toks: tokenize(text),
        pos: 0,
    };
    let kw = p.word()?;
    if kw.text != "library" {
        return Err(FormatError::syntax(kw.line, "expected `library`"));
    }
    p.expect("(")?;
    let args = p.args()?;
    p.expect("{")?;
    let mut g = Group {
        kind: "library".into(),
        args,
        line: kw.line,
        ..Group::default()
    };
    p.body(&mut g, 0)?;
    if let Some(t) = p.peek() {
        return Err(FormatError::syntax(
            t.line,
            format!("unexpected `{}` after library", t.text),
        ));
    }
    Ok(g)
}

fn num(s: &str, line: usize) -> Result<f64, FormatError> {
    match s.trim().parse::<f64>() {
        Ok(v) if v.is_finite() => Ok(v),
        _ => Err(FormatError::syntax(line, format!("expected number, found `{s}`"))),
    }
}

fn num_list(s: &str, line: usize) -> Result<Vec<f64>, FormatError> {
    s.split(',')
        .filter(|x| !x.trim().is_empty())
        .map(|x| num(x, line))
        .collect()
}

/// Value of a unit string like `1ns`, `10ps` or `1` relative to `base`
/// (`"ps"` for time, `"ff"` for capacitance).
fn unit_factor(mult: f64, unit: &str, line: usize) -> Result<f64, FormatError> {
    let scale = match unit.to_ascii_lowercase().as_str() {
        "s" => 1e12,
        "ms" => 1e9,
        "us" => 1e6,
        "ns" => 1e3,
        "ps" => 1.0,
        "fs" => 1e-3,
        "f" => 1e15,
        "pf" => 1e3,
        "ff" => 1.0,
        "nf" => 1e6,
        "uf" => 1e9,
        _ => return Err(FormatError::syntax(line, format!("unknown unit `{unit}`"))),
    };
    Ok(mult * scale)
}

fn time_unit(s: &str, line: usize) -> Result<f64, FormatError> {
    let s = s.trim();
    let split = s
        .find(|c: char| c.is_ascii_alphabetic())
        .ok_or_else(|| FormatError::syntax(line, format!("bad time unit `{s}`")))?;
    let mult = if split == 0 { 1.0 } else { num(&s[..split], line)? };
    unit_factor(mult, &s[split..], line)
}

#[derive(Debug, Clone)]
struct Template {
    /// True when variable_1 is the load axis.
    load_first: bool,
    index_1: Vec<f64>,
    index_2: Vec<f64>,
    dims: usize,
}

struct Ctx {
    time: f64,
    cap: f64,
    templates: HashMap<String, Template>,
    warnings: usize,
}

/// Parses a Liberty library.
pub fn parse_liberty(text: &str) -> Result<TimingLibrary, FormatError> {
    let root = parse_tree(text)?;
    let mut ctx = Ctx {
        time: 1000.0,
        cap: 1.0,
        templates: HashMap::new(),
        warnings: 0,
    };
    if let Some(a) = root.attr("time_unit") {
        ctx.time = time_unit(&a.values[0], a.line)?;
    }
    if let Some(a) = root.attr("capacitive_load_unit") {
        if a.values.len() != 2 {
            return Err(FormatError::syntax(a.line, "capacitive_load_unit takes two values"));
        }
        ctx.cap = unit_factor(num(&a.values[0], a.line)?, &a.values[1], a.line)?;
    }
    for g in &root.groups {
        if g.kind == "lu_table_template" {
            let name = g.args.first().cloned().unwrap_or_default();
            ctx.templates.insert(name, template(g)?);
        }
    }
    let mut cells = BTreeMap::new();
    for g in &root.groups {
        match g.kind.as_str() {
            "cell" => {
                let c = cell(g, &mut ctx)?;
                cells.insert(c.name.clone(), c);
            }
            "lu_table_template" => {}
            _ => ctx.warnings += 1,
        }
    }
    let known = [
        "time_unit",
        "capacitive_load_unit",
        "voltage_unit",
        "current_unit",
        "pulling_resistance_unit",
        "leakage_power_unit",
        "delay_model",
    ];
    ctx.warnings += root.attrs.iter().filter(|a| !known.contains(&a.name.as_str())).count();
    Ok(TimingLibrary {
        name: root.args.first().cloned().unwrap_or_default(),
        cap_unit_ff: ctx.cap,
        cells,
        warnings: ctx.warnings,
    })
}

fn template(g: &Group) -> Result<Template, FormatError> {
    let var = |n: &str| g.value(n).map(str::trim);
    let is_load = |v: Option<&str>| v.is_some_and(|v| v.contains("capacitance"));
    let dims = if var("variable_2").is_some() {
        2
    } else {
        usize::from(var("variable_1").is_some())
    };
    let list = |n: &str| -> Result<Vec<f64>, FormatError> {
        match g.attr(n) {
            Some(a) => num_list(&a.values.join(","), a.line),
            None => Ok(Vec::new()),
        }
    };
    Ok(Template {
        load_first: is_load(var("variable_1")),
        index_1: list("index_1")?,
        index_2: list("index_2")?,
        dims,
    })
}

fn cell(g: &Group, ctx: &mut Ctx) -> Result<LibCell, FormatError> {
    let name = g
        .args
        .first()
        .cloned()
        .ok_or_else(|| FormatError::syntax(g.line, "cell without a name"))?;
    let mut c = LibCell {
        name,
        area: 0.0,
        leakage_power: 0.0,
        pins: BTreeMap::new(),
        arcs: Vec::new(),
        sequential: false,
    };
    for a in &g.attrs {
        match a.name.as_str() {
            "area" => c.area = num(&a.values[0], a.line)?,
            "cell_leakage_power" => c.leakage_power = num(&a.values[0], a.line)?,
            _ => ctx.warnings += 1,
        }
    }
    let mut clocked_on = Vec::new();
    for sub in &g.groups {
        match sub.kind.as_str() {
            "ff" | "latch" => {
                c.sequential = true;
                for key in ["clocked_on", "enable"] {
                    if let Some(v) = sub.value(key) {
                        clocked_on.push(v.trim_start_matches('!').trim().to_string());
                    }
                }
            }
            "pin" => {
                for pin_name in &sub.args {
                    let (p, arcs) = pin(sub, pin_name, ctx)?;
                    if c.pins.insert(p.name.clone(), p).is_some() {
                        return Err(FormatError::syntax(sub.line, format!("duplicate pin `{pin_name}`")));
                    }
                    c.arcs.extend(arcs);
                }
            }
            _ => ctx.warnings += 1,
        }
    }
    for n in clocked_on {
        if let Some(p) = c.pins.get_mut(&n) {
            p.is_clock = true;
        }
    }
    for arc in &c.arcs {
        if !c.pins.contains_key(&arc.from) {
            return Err(FormatError::syntax(
                g.line,
                format!("arc of cell {} references unknown pin `{}`", c.name, arc.from),
            ));
        }
    }
    Ok(c)
}

fn pin(g: &Group, name: &str, ctx: &mut Ctx) -> Result<(LibPin, Vec<LibArc>), FormatError> {
    let mut p = LibPin {
        name: name.to_string(),
        direction: PinDirection::Input,
        capacitance: 0.0,
        max_capacitance: None,
        is_clock: false,
    };
    for a in &g.attrs {
        let v = a.values.first().map(String::as_str).unwrap_or("");
        match a.name.as_str() {
            "direction" => {
                p.direction =
                    PinDirection::parse(v).ok_or_else(|| FormatError::syntax(a.line, format!("bad direction `{v}`")))?
            }
            "capacitance" => p.capacitance = num(v, a.line)? * ctx.cap,
            "max_capacitance" => p.max_capacitance = Some(num(v, a.line)? * ctx.cap),
            "clock" => p.is_clock = v.trim() == "true",
            _ => ctx.warnings += 1,
        }
    }
    let mut arcs = Vec::new();
    for t in &g.groups {
        if t.kind != "timing" {
            ctx.warnings += 1;
            continue;
        }
        let tt = t.value("timing_type").unwrap_or("combinational").trim();
        let clocked = match tt {
            "combinational" | "combinational_rise" | "combinational_fall" => false,
            "rising_edge" | "falling_edge" => true,
            _ => continue,
        };
        let sense = match t.value("timing_sense").map(str::trim) {
            Some("positive_unate") => ArcSense::Positive,
            Some("negative_unate") => ArcSense::Negative,
            _ => ArcSense::Non,
        };
        let table = |kinds: [&str; 2], ctx: &mut Ctx| -> Result<Option<Lut>, FormatError> {
            let mut out: Option<Lut> = None;
            for k in kinds {
                if let Some(tg) = t.groups.iter().find(|x| x.kind == k) {
                    let l = lut(tg, ctx)?;
                    out = Some(match out {
                        Some(o) => o.max_with(&l),
                        None => l,
                    });
                }
            }
            Ok(out)
        };
        let delay = table(["cell_rise", "cell_fall"], ctx)?;
        let slew = table(["rise_transition", "fall_transition"], ctx)?;
        let Some(delay) = delay else {
            ctx.warnings += 1;
            continue;
        };
        let slew = slew.unwrap_or_else(|| Lut::constant(0.0));
        let related = t
            .value("related_pin")
            .ok_or_else(|| FormatError::syntax(t.line, "timing group without related_pin"))?;
        for from in related.split_whitespace() {
            arcs.push(LibArc {
                from: from.to_string(),
                to: name.to_string(),
                sense,
                clocked,
                delay: delay.clone(),
                slew: slew.clone(),
            });
        }
    }
    Ok((p, arcs))
}

fn lut(g: &Group, ctx: &Ctx) -> Result<Lut, FormatError> {
    let tname = g.args.first().map(String::as_str).unwrap_or("scalar");
    let values_attr = g
        .attr("values")
        .ok_or_else(|| FormatError::syntax(g.line, "table without values"))?;
    let rows: Vec<Vec<f64>> = values_attr
        .values
        .iter()
        .map(|r| num_list(r, values_attr.line))
        .collect::<Result<_, _>>()?;
    let (load_first, mut i1, mut i2, dims) = if tname == "scalar" {
        (false, vec![0.0], vec![0.0], 0)
    } else {
        let t = ctx
            .templates
            .get(tname)
            .ok_or_else(|| FormatError::MissingTemplate(tname.to_string()))?;
        (t.load_first, t.index_1.clone(), t.index_2.clone(), t.dims)
    };
    if let Some(a) = g.attr("index_1") {
        i1 = num_list(&a.values.join(","), a.line)?;
    }
    if let Some(a) = g.attr("index_2") {
        i2 = num_list(&a.values.join(","), a.line)?;
    }
    // A single `values` string with n entries is one row (1-D or 1×n tables).
    let rows = if rows.len() == 1 && dims == 2 && i1.len() > 1 {
        let flat = &rows[0];
        if flat.len() != i1.len() * i2.len() {
            return Err(FormatError::syntax(
                values_attr.line,
                "table size does not match its indices",
            ));
        }
        flat.chunks(i2.len().max(1)).map(<[f64]>::to_vec).collect()
    } else {
        rows
    };
    let (mut first, mut second) = match dims {
        0 => (vec![0.0], vec![0.0]),
        1 => (i1.clone(), vec![0.0]),
        _ => (i1.clone(), i2.clone()),
    };
    let mut values = if dims == 1 {
        rows.first()
            .cloned()
            .unwrap_or_default()
            .into_iter()
            .map(|v| vec![v])
            .collect()
    } else {
        rows
    };
    if dims == 0 && values.len() == 1 && values[0].len() == 1 {
        first = vec![0.0];
        second = vec![0.0];
    }
    let t_scale = ctx.time;
    let c_scale = ctx.cap;
    let (slews, loads) = if load_first {
        values = transpose(&values);
        (second, first)
    } else {
        (first, second)
    };
    let scale_axis = |a: Vec<f64>, s: f64| a.into_iter().map(|v| v * s).collect::<Vec<_>>();
    let l = Lut {
        slews: scale_axis(slews, t_scale),
        loads: scale_axis(loads, c_scale),
        values: values
            .into_iter()
            .map(|r| r.into_iter().map(|v| v * t_scale).collect())
            .collect(),
    };
    if !l.check() {
        return Err(FormatError::syntax(
            g.line,
            "table axes must be strictly increasing and match the value grid",
        ));
    }
    Ok(l)
}

fn transpose(m: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let cols = m.first().map_or(0, Vec::len);
    if m.iter().any(|r| r.len() != cols) {
        return Vec::new();
    }
    (0..cols).map(|j| m.iter().map(|r| r[j]).collect()).collect()
}

fn join(v: &[f64]) -> String {
    v.iter().map(|x| format!("{x}")).collect::<Vec<_>>().join(", ")
}

/// Writes a library in ps/fF units with one template per distinct axis pair.
pub fn write_liberty(lib: &TimingLibrary) -> String {
    let mut s = String::new();
    let mut templates: Vec<(Vec<f64>, Vec<f64>)> = Vec::new();
    let mut tname = |l: &Lut| -> String {
        let key = (l.slews.clone(), l.loads.clone());
        let i = match templates.iter().position(|k| *k == key) {
            Some(i) => i,
            None => {
                templates.push(key);
                templates.len() - 1
            }
        };
        format!("tmpl_{i}")
    };
    let mut body = String::new();
    for c in lib.cells.values() {
        let _ = writeln!(body, "  cell ({}) {{", c.name);
        let _ = writeln!(body, "    area : {} ;", c.area);
        if c.leakage_power != 0.0 {
            let _ = writeln!(body, "    cell_leakage_power : {} ;", c.leakage_power);
        }
        if c.sequential {
            let ck = c.clock_pin().map_or("CK", |p| p.name.as_str());
            let d = c
                .pins
                .values()
                .find(|p| p.direction == PinDirection::Input && !p.is_clock)
                .map_or("D", |p| p.name.as_str());
            let _ = writeln!(
                body,
                "    ff (IQ, IQN) {{ clocked_on : \"{ck}\" ; next_state : \"{d}\" ; }}"
            );
        }
        for p in c.pins.values() {
            let _ = writeln!(body, "    pin ({}) {{", p.name);
            let dir = match p.direction {
                PinDirection::Input => "input",
                PinDirection::Output => "output",
                PinDirection::Inout => "inout",
            };
            let _ = writeln!(body, "      direction : {dir} ;");
            let _ = writeln!(body, "      capacitance : {} ;", p.capacitance);
            if let Some(m) = p.max_capacitance {
                let _ = writeln!(body, "      max_capacitance : {m} ;");
            }
            if p.is_clock {
                let _ = writeln!(body, "      clock : true ;");
            }
            for a in c.arcs.iter().filter(|a| a.to == p.name) {
                let _ = writeln!(body, "      timing () {{");
                let _ = writeln!(body, "        related_pin : \"{}\" ;", a.from);
                let sense = match a.sense {
                    ArcSense::Positive => "positive_unate",
                    ArcSense::Negative => "negative_unate",
                    ArcSense::Non => "non_unate",
                };
                let _ = writeln!(body, "        timing_sense : {sense} ;");
                if a.clocked {
                    let _ = writeln!(body, "        timing_type : rising_edge ;");
                }
                for (kind, l) in [("cell_rise", &a.delay), ("rise_transition", &a.slew)] {
                    let _ = writeln!(body, "        {kind} ({}) {{", tname(l));
                    let rows: Vec<String> = l.values.iter().map(|r| format!("\"{}\"", join(r))).collect();
                    let _ = writeln!(body, "          values ({}) ;", rows.join(", "));
                    let _ = writeln!(body, "        }}");
                }
                let _ = writeln!(body, "      }}");
            }
            let _ = writeln!(body, "    }}");
        }
        let _ = writeln!(body, "  }}");
    }
    let _ = writeln!(s, "library ({}) {{", lib.name);
    let _ = writeln!(s, "  delay_model : table_lookup ;");
    let _ = writeln!(s, "  time_unit : \"1ps\" ;");
    let _ = writeln!(s, "  capacitive_load_unit (1, ff) ;");
    for (i, (sl, ld)) in templates.iter().enumerate() {
        let _ = writeln!(s, "  lu_table_template (tmpl_{i}) {{");
        let _ = writeln!(s, "    variable_1 : input_net_transition ;");
        let _ = writeln!(s, "    variable_2 : total_output_net_capacitance ;");
        let _ = writeln!(s, "    index_1 (\"{}\") ;", join(sl));
        let _ = writeln!(s, "    index_2 (\"{}\") ;", join(ld));
        let _ = writeln!(s, "  }}");
    }
    s.push_str(&body);
    s.push_str("}\n");
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    const INV_LIB: &str = r#"
library (tiny) {
  time_unit : "1ns" ;
  capacitive_load_unit (1, pf) ;
  lu_table_template (t2) {
    variable_1 : input_net_transition ;
    variable_2 : total_output_net_capacitance ;
    index_1 ("0.01, 0.1") ;
    index_2 ("0.001, 0.01") ;
  }
  cell (INV) {
    area : 1.0 ;
    pin (A) { direction : input ; capacitance : 0.002 ; }
    pin (Y) {
      direction : output ;
      timing () {
        related_pin : "A" ;
        timing_sense : negative_unate ;
        cell_rise (t2) { values ("0.01, 0.02", "0.03, 0.04") ; }
        cell_fall (t2) { values ("0.015, 0.01", "0.03, 0.05") ; }
        rise_transition (t2) { values ("0.01, 0.02", "0.03, 0.04") ; }
      }
    }
  }
}
"#;

    #[test]
    fn single_arc_library() {
        let lib = parse_liberty(INV_LIB).unwrap();
        assert_eq!(lib.cells.len(), 1);
        let c = lib.cell("INV").unwrap();
        assert_eq!(c.arcs.len(), 1);
        assert!((c.pins["A"].capacitance - 2.0).abs() < 1e-9);
        let d = &c.arcs[0].delay;
        assert_eq!(d.slews, vec![10.0, 100.0]);
        assert_eq!(d.loads, vec![1.0, 10.0]);
        let expect = [[15.0, 20.0], [30.0, 50.0]];
        for (i, row) in expect.iter().enumerate() {
            for (j, v) in row.iter().enumerate() {
                assert!((d.values[i][j] - v).abs() < 1e-9);
            }
        }
        assert_eq!(c.arcs[0].sense, ArcSense::Negative);
    }

    #[test]
    fn missing_template() {
        let t = INV_LIB.replace("cell_rise (t2)", "cell_rise (nope)");
        assert_eq!(
            parse_liberty(&t).unwrap_err(),
            FormatError::MissingTemplate("nope".into())
        );
    }

    #[test]
    fn lookup_exact_and_midpoint() {
        let l = Lut {
            slews: vec![0.0, 10.0],
            loads: vec![0.0, 4.0],
            values: vec![vec![1.0, 3.0], vec![5.0, 11.0]],
        };
        assert_eq!(l.lookup(10.0, 0.0), (5.0, false));
        assert_eq!(l.lookup(5.0, 2.0), (5.0, false));
        assert_eq!(l.lookup(50.0, 9.0), (11.0, true));
    }

    #[test]
    fn transposed_template() {
        let t = INV_LIB
            .replace(
                "variable_1 : input_net_transition ;\n    variable_2 : total_output_net_capacitance ;",
                "variable_1 : total_output_net_capacitance ;\n    variable_2 : input_net_transition ;",
            )
            .replace("index_1 (\"0.01, 0.1\")", "index_1 (\"0.001, 0.01\")")
            .replace("index_2 (\"0.001, 0.01\")", "index_2 (\"0.01, 0.1\")");
        let lib = parse_liberty(&t).unwrap();
        let d = &lib.cells["INV"].arcs[0].delay;
        assert_eq!(d.slews, vec![10.0, 100.0]);
        assert!((d.values[0][1] - 30.0).abs() < 1e-9);
    }

    #[test]
    fn decreasing_axis_rejected() {
        let t = INV_LIB.replace("index_1 (\"0.01, 0.1\")", "index_1 (\"0.1, 0.01\")");
        assert!(matches!(parse_liberty(&t), Err(FormatError::Syntax { .. })));
    }

    #[test]
    fn write_round_trip() {
        let lib = parse_liberty(INV_LIB).unwrap();
        let back = parse_liberty(&write_liberty(&lib)).unwrap();
        assert_eq!(back.cells, lib.cells);
    }

    #[test]
    fn deep_nesting_is_an_error() {
        let mut t = String::from("library (x) {");
        for _ in 0..200 {
            t.push_str("g () {");
        }
        assert!(parse_liberty(&t).is_err());
    }
}
