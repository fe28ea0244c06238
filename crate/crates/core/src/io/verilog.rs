// SPDX-License-Identifier: Apache-2.0

//! Structural (gate-level) Verilog: one flat module of named-port cell
//! instantiations. Undeclared nets are rejected.

use std::collections::{BTreeMap, HashMap};
use std::fmt::Write as _;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::FormatError;
use crate::model::{Design, Instance, Net, NetPin, PinDirection, Port, Technology};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NetlistInstance {
    pub name: String,
    pub cell: String,
    /// `(pin, net)` in source order. Unconnected pins are omitted.
    pub connections: Vec<(String, String)>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Netlist {
    pub module: String,
    /// Bit-blasted port names with their direction, in declaration order.
    pub ports: Vec<(String, PinDirection)>,
    /// Internal wires in declaration order.
    pub wires: Vec<String>,
    pub instances: Vec<NetlistInstance>,
    pub warnings: usize,
}

impl Netlist {
    /// Port nets followed by wires.
    pub fn nets(&self) -> Vec<&str> {
        self.ports
            .iter()
            .map(|(p, _)| p.as_str())
            .chain(self.wires.iter().map(String::as_str))
            .collect()
    }

    pub fn inputs(&self) -> impl Iterator<Item = &str> {
        self.ports
            .iter()
            .filter(|(_, d)| *d == PinDirection::Input)
            .map(|(p, _)| p.as_str())
    }

    pub fn outputs(&self) -> impl Iterator<Item = &str> {
        self.ports
            .iter()
            .filter(|(_, d)| *d == PinDirection::Output)
            .map(|(p, _)| p.as_str())
    }

    /// Unplaced design holding this netlist's connectivity. Nets without any
    /// pin are dropped.
    pub fn to_design(&self, tech: Arc<Technology>) -> Design {
        let mut d = Design::new(&self.module, tech);
        d.dbu_per_micron = d.tech.dbu_per_micron;
        let mut nets: BTreeMap<&str, Net> = BTreeMap::new();
        let mut order = Vec::new();
        for (p, dir) in &self.ports {
            d.ports.push(Port::new(p, *dir));
            let mut n = Net::new(p);
            n.pins.push(NetPin::Port(p.clone()));
            nets.insert(p, n);
            order.push(p.as_str());
        }
        for w in &self.wires {
            if !nets.contains_key(w.as_str()) {
                nets.insert(w, Net::new(w));
                order.push(w.as_str());
            }
        }
        for inst in &self.instances {
            d.instances.push(Instance::new(&inst.name, &inst.cell));
            for (pin, net) in &inst.connections {
                if let Some(n) = nets.get_mut(net.as_str()) {
                    n.pins.push(NetPin::inst(&inst.name, pin));
                }
            }
        }
        for name in order {
            let n = nets.remove(name).expect("inserted above");
            if !n.pins.is_empty() {
                d.nets.push(n);
            }
        }
        d.reindex();
        d
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Tok<'a> {
    text: &'a str,
    line: usize,
}

fn tokenize(text: &str) -> Vec<Tok<'_>> {
    let b = text.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    let mut line = 1;
    while i < b.len() {
        let c = b[i];
        if c == b'\n' {
            line += 1;
            i += 1;
        } else if c.is_ascii_whitespace() {
            i += 1;
        } else if c == b'/' && b.get(i + 1) == Some(&b'/') {
            while i < b.len() && b[i] != b'\n' {
                i += 1;
            }
        } else if c == b'/' && b.get(i + 1) == Some(&b'*') {
            i += 2;
            while i < b.len() && !(b[i] == b'*' && b.get(i + 1) == Some(&b'/')) {
                if b[i] == b'\n' {
                    line += 1;
                }
                i += 1;
            }
            i += 2;
        } else if c == b'\\' {
            // Escaped identifier: runs to whitespace. The backslash is kept
            // so `ident` can tell it apart from punctuation.
            let start = i;
            i += 1;
            while i < b.len() && !b[i].is_ascii_whitespace() {
                i += 1;
            }
            out.push(Tok {
                text: &text[start..i],
                line,
            });
        } else if c.is_ascii_alphanumeric() || c == b'_' || c == b'$' || c == b'\'' {
            let start = i;
            while i < b.len() && (b[i].is_ascii_alphanumeric() || b"_$'".contains(&b[i])) {
                i += 1;
            }
            out.push(Tok {
                text: &text[start..i],
                line,
            });
        } else {
            // Multi-byte characters become a single (invalid) token.
            let len = text[i..].chars().next().map_or(1, char::len_utf8);
            out.push(Tok {
                text: &text[i..i + len],
                line,
            });
            i += len;
        }
    }
    out
}

struct Parser<'a> {
    toks: Vec<Tok<'a>>,
    pos: usize,
}

impl<'a> Parser<'a> {
    fn line(&self) -> usize {
        self.toks
            .get(self.pos)
            .or_else(|| self.toks.last())
            .map_or(1, |t| t.line)
    }

    fn err(&self, msg: impl Into<String>) -> FormatError {
        FormatError::syntax(self.line(), msg)
    }

    fn peek(&self) -> Option<&'a str> {
        self.toks.get(self.pos).map(|t| t.text)
    }

    fn next(&mut self) -> Result<&'a str, FormatError> {
        let t = self.peek().ok_or_else(|| self.err("unexpected end of input"))?;
        self.pos += 1;
        Ok(t)
    }

    fn eat(&mut self, s: &str) -> bool {
        if self.peek() == Some(s) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect(&mut self, s: &str) -> Result<(), FormatError> {
        let t = self.next()?;
        if t == s {
            Ok(())
        } else {
            self.pos -= 1;
            Err(self.err(format!("expected `{s}`, found `{t}`")))
        }
    }

    fn ident(&mut self) -> Result<&'a str, FormatError> {
        let t = self.next()?;
        if let Some(e) = t.strip_prefix('\\') {
            if !e.is_empty() {
                return Ok(e);
            }
        }
        let first = t.as_bytes()[0];
        if (first.is_ascii_alphabetic() || first == b'_') && !t.contains('\'') {
            Ok(t)
        } else {
            self.pos -= 1;
            Err(self.err(format!("expected identifier, found `{t}`")))
        }
    }

    fn number(&mut self) -> Result<i64, FormatError> {
        let t = self.next()?;
        t.parse().map_err(|_| {
            self.pos -= 1;
            self.err(format!("expected number, found `{t}`"))
        })
    }

    /// Optional `[msb:lsb]`, returned as the bit indices in declaration order.
    fn range(&mut self) -> Result<Option<Vec<i64>>, FormatError> {
        if !self.eat("[") {
            return Ok(None);
        }
        let msb = self.number()?;
        self.expect(":")?;
        let lsb = self.number()?;
        self.expect("]")?;
        if msb.abs_diff(lsb) > 1 << 20 {
            return Err(self.err("bus too wide"));
        }
        Ok(Some(if msb >= lsb {
            (lsb..=msb).rev().collect()
        } else {
            (msb..=lsb).collect()
        }))
    }
}

const BEHAVIORAL: &[&str] = &[
    "always",
    "initial",
    "reg",
    "function",
    "task",
    "generate",
    "always_ff",
    "always_comb",
];

enum Decl {
    Port(PinDirection),
    Wire,
}

struct Builder {
    nl: Netlist,
    /// Bit-blasted net name → declared.
    declared: HashMap<String, ()>,
    /// Bus name → bit names.
    buses: HashMap<String, Vec<String>>,
    header_ports: Vec<String>,
    aliases: Vec<(String, String, usize)>,
}

impl Builder {
    fn declare(&mut self, kind: &Decl, name: &str, bits: &Option<Vec<i64>>) {
        let names: Vec<String> = match bits {
            Some(b) => b.iter().map(|i| format!("{name}[{i}]")).collect(),
            None => vec![name.to_string()],
        };
        if bits.is_some() {
            self.buses.insert(name.to_string(), names.clone());
        }
        for n in names {
            if self.declared.insert(n.clone(), ()).is_some() && matches!(kind, Decl::Wire) {
                // `output y; wire y;` re-declares a port as a wire.
                continue;
            }
            match kind {
                Decl::Port(d) => {
                    self.nl.wires.retain(|w| *w != n);
                    self.nl.ports.push((n, *d));
                }
                Decl::Wire => self.nl.wires.push(n),
            }
        }
    }
}

/// Parses a single structural module.
pub fn parse_verilog(text: &str) -> Result<Netlist, FormatError> {
    let mut p = Parser {
        toks: tokenize(text),
        pos: 0,
    };
    let mut b = Builder {
        nl: Netlist::default(),
        declared: HashMap::new(),
        buses: HashMap::new(),
        header_ports: Vec::new(),
        aliases: Vec::new(),
    };
    while p.peek() == Some("`") {
        // Compiler directives such as `timescale are skipped to end of line.
        let line = p.line();
        while p.peek().is_some() && p.toks[p.pos].line == line {
            p.pos += 1;
        }
        b.nl.warnings += 1;
    }
    p.expect("module")?;
    b.nl.module = p.ident()?.to_string();
    if p.eat("(") {
        header(&mut p, &mut b)?;
    }
    p.expect(";")?;
    loop {
        let line = p.line();
        let t = p.next()?;
        match t {
            "endmodule" => break,
            "input" | "output" | "inout" | "wire" | "tri" => {
                let kind = match t {
                    "input" => Decl::Port(PinDirection::Input),
                    "output" => Decl::Port(PinDirection::Output),
                    "inout" => Decl::Port(PinDirection::Inout),
                    _ => Decl::Wire,
                };
                if matches!(kind, Decl::Port(_)) {
                    p.eat("wire");
                }
                let bits = p.range()?;
                loop {
                    let name = p.ident()?;
                    if matches!(kind, Decl::Port(_)) && !b.header_ports.iter().any(|h| h == name) {
                        return Err(FormatError::syntax(
                            line,
                            format!("`{name}` is not in the module port list"),
                        ));
                    }
                    b.declare(&kind, name, &bits);
                    if p.eat("=") {
                        return Err(FormatError::BehavioralConstruct { line });
                    }
                    if !p.eat(",") {
                        break;
                    }
                }
                p.expect(";")?;
            }
            "assign" => {
                let lhs = net_ref(&mut p, &b)?;
                p.expect("=")?;
                let rhs = match net_ref(&mut p, &b) {
                    Ok(r) if p.peek() == Some(";") => r,
                    Err(e @ FormatError::UndeclaredNet { .. }) => return Err(e),
                    _ => return Err(FormatError::BehavioralConstruct { line }),
                };
                p.expect(";")?;
                match (lhs, rhs) {
                    (Some(l), Some(r)) => b.aliases.push((l, r, line)),
                    _ => b.nl.warnings += 1,
                }
            }
            t if BEHAVIORAL.contains(&t) => return Err(FormatError::BehavioralConstruct { line }),
            "module" => return Err(FormatError::syntax(line, "only one module is supported")),
            "supply0" | "supply1" | "parameter" | "localparam" | "specify" => {
                return Err(FormatError::syntax(line, format!("`{t}` is not supported")));
            }
            _ => {
                p.pos -= 1;
                let cell = p.ident()?;
                if p.eat("#") {
                    return Err(FormatError::syntax(line, "parameterized instances are not supported"));
                }
                let name = p.ident()?.to_string();
                p.expect("(")?;
                let mut connections = Vec::new();
                if !p.eat(")") {
                    loop {
                        if !p.eat(".") {
                            return Err(p.err("positional port connections are not supported"));
                        }
                        let pin = p.ident()?.to_string();
                        p.expect("(")?;
                        if !p.eat(")") {
                            let net = net_ref(&mut p, &b)?;
                            p.expect(")")?;
                            match net {
                                Some(n) => connections.push((pin, n)),
                                None => b.nl.warnings += 1,
                            }
                        }
                        if p.eat(")") {
                            break;
                        }
                        p.expect(",")?;
                    }
                }
                p.expect(";")?;
                b.nl.instances.push(NetlistInstance {
                    name,
                    cell: cell.to_string(),
                    connections,
                });
            }
        }
    }
    if let Some(t) = p.peek() {
        return Err(FormatError::syntax(
            p.line(),
            format!("unexpected `{t}` after endmodule"),
        ));
    }
    for h in &b.header_ports {
        if !b.declared.contains_key(h) && !b.buses.contains_key(h) {
            return Err(FormatError::syntax(0, format!("port `{h}` has no direction")));
        }
    }
    apply_aliases(&mut b.nl, &b.aliases)?;
    Ok(b.nl)
}

fn header(p: &mut Parser<'_>, b: &mut Builder) -> Result<(), FormatError> {
    if p.eat(")") {
        return Ok(());
    }
    let mut ansi: Option<Decl> = None;
    let mut bits = None;
    loop {
        let t = p.peek().unwrap_or("");
        if matches!(t, "input" | "output" | "inout") {
            p.pos += 1;
            p.eat("wire");
            ansi = Some(Decl::Port(match t {
                "input" => PinDirection::Input,
                "output" => PinDirection::Output,
                _ => PinDirection::Inout,
            }));
            bits = p.range()?;
        }
        let name = p.ident()?.to_string();
        b.header_ports.push(name.clone());
        if let Some(kind) = &ansi {
            b.declare(kind, &name, &bits);
        }
        if p.eat(")") {
            return Ok(());
        }
        p.expect(",")?;
    }
}

/// A single-bit net reference. Constants yield `None`.
fn net_ref(p: &mut Parser<'_>, b: &Builder) -> Result<Option<String>, FormatError> {
    let line = p.line();
    let t = p.next()?;
    if t.contains('\'') || t.bytes().all(|c| c.is_ascii_digit()) {
        return Ok(None);
    }
    if t == "{" {
        return Err(FormatError::syntax(line, "concatenations are not supported"));
    }
    p.pos -= 1;
    let name = p.ident()?;
    let full = if p.eat("[") {
        let i = p.number()?;
        p.expect("]")?;
        format!("{name}[{i}]")
    } else {
        if b.buses.get(name).is_some_and(|v| v.len() != 1) {
            return Err(FormatError::syntax(line, format!("bus `{name}` used as a single bit")));
        }
        name.to_string()
    };
    if !b.declared.contains_key(&full) {
        return Err(FormatError::UndeclaredNet { name: full, line });
    }
    Ok(Some(full))
}

/// Merges `assign a = b;` aliases. A port name wins over a wire name.
fn apply_aliases(nl: &mut Netlist, aliases: &[(String, String, usize)]) -> Result<(), FormatError> {
    if aliases.is_empty() {
        return Ok(());
    }
    let mut parent: HashMap<String, String> = HashMap::new();
    fn find(parent: &HashMap<String, String>, x: &str) -> String {
        let mut cur = x.to_string();
        while let Some(p) = parent.get(&cur) {
            cur = p.clone();
        }
        cur
    }
    let is_port = |n: &str| nl.ports.iter().any(|(p, _)| p == n);
    for (l, r, line) in aliases {
        let (a, b) = (find(&parent, l), find(&parent, r));
        if a == b {
            continue;
        }
        match (is_port(&a), is_port(&b)) {
            (true, true) => {
                return Err(FormatError::syntax(
                    *line,
                    format!("assign joins two ports `{a}` and `{b}`"),
                ))
            }
            (false, true) => parent.insert(a, b),
            _ => parent.insert(b, a),
        };
    }
    for inst in &mut nl.instances {
        for (_, net) in &mut inst.connections {
            *net = find(&parent, net);
        }
    }
    nl.wires.retain(|w| !parent.contains_key(w));
    Ok(())
}

fn escape(name: &str) -> String {
    let simple = name
        .bytes()
        .next()
        .is_some_and(|c| c.is_ascii_alphabetic() || c == b'_')
        && name
            .bytes()
            .all(|c| c.is_ascii_alphanumeric() || c == b'_' || c == b'$');
    if simple {
        name.to_string()
    } else {
        format!("\\{name} ")
    }
}

/// Writes the netlist bit-blasted: every bus bit becomes its own
/// escaped scalar.
pub fn write_verilog(nl: &Netlist) -> String {
    let mut s = String::new();
    let ports: Vec<String> = nl.ports.iter().map(|(p, _)| escape(p)).collect();
    let _ = writeln!(s, "module {} ({});", escape(&nl.module), ports.join(", "));
    for (p, d) in &nl.ports {
        let kw = match d {
            PinDirection::Input => "input",
            PinDirection::Output => "output",
            PinDirection::Inout => "inout",
        };
        let _ = writeln!(s, "  {kw} {};", escape(p));
    }
    for w in &nl.wires {
        let _ = writeln!(s, "  wire {};", escape(w));
    }
    for i in &nl.instances {
        let conns: Vec<String> = i
            .connections
            .iter()
            .map(|(p, n)| format!(".{}({})", escape(p), escape(n)))
            .collect();
        let _ = writeln!(s, "  {} {} ({});", escape(&i.cell), escape(&i.name), conns.join(", "));
    }
    s.push_str("endmodule\n");
    s
}
