// SPDX-License-Identifier: Apache-2.0

//! SDC subset: `create_clock`, `set_driving_cell` and `set_load`. Every other
//! command is kept as a warning. Times are ns in the file and ps in memory.

use super::FormatError;
use crate::model::{Constraints, DriverRef};

/// Splits Tcl-ish text into commands of words. Brackets and braces are kept
/// as single words with their delimiters.
fn commands(text: &str) -> Result<Vec<(usize, Vec<String>)>, FormatError> {
    let mut out = Vec::new();
    let mut cur: Vec<String> = Vec::new();
    let mut cur_line = 1;
    let mut line = 1;
    let chars: Vec<char> = text.chars().collect();
    let mut i = 0;
    let flush = |cur: &mut Vec<String>, out: &mut Vec<(usize, Vec<String>)>, l: usize| {
        if !cur.is_empty() {
            out.push((l, std::mem::take(cur)));
        }
    };
    while i < chars.len() {
        let c = chars[i];
        match c {
            '\n' | ';' => {
                if c == '\n' {
                    line += 1;
                }
                flush(&mut cur, &mut out, cur_line);
                i += 1;
            }
            '\\' if chars.get(i + 1) == Some(&'\n') => {
                line += 1;
                i += 2;
            }
            '#' if cur.is_empty() => {
                while i < chars.len() && chars[i] != '\n' {
                    i += 1;
                }
            }
            c if c.is_whitespace() => i += 1,
            _ => {
                if cur.is_empty() {
                    cur_line = line;
                }
                let start = i;
                let mut depth = 0i32;
                while i < chars.len() {
                    let d = chars[i];
                    match d {
                        '[' | '{' => depth += 1,
                        ']' | '}' => depth -= 1,
                        '"' if depth == 0 => {
                            i += 1;
                            while i < chars.len() && chars[i] != '"' {
                                i += 1;
                            }
                        }
                        '\n' => {
                            if depth == 0 {
                                break;
                            }
                            line += 1;
                        }
                        d if depth == 0 && (d.is_whitespace() || d == ';') => break,
                        _ => {}
                    }
                    i += 1;
                }
                if depth != 0 {
                    return Err(FormatError::syntax(line, "unbalanced brackets"));
                }
                let w: String = chars[start..i.min(chars.len())].iter().collect();
                cur.push(w.trim_matches('"').to_string());
            }
        }
    }
    flush(&mut cur, &mut out, cur_line);
    Ok(out)
}

enum Target {
    Ports(Vec<String>),
    AllInputs,
    AllOutputs,
}

fn unwrap_delims(w: &str, open: char, close: char) -> Option<&str> {
    w.strip_prefix(open).and_then(|s| s.strip_suffix(close))
}

fn target(w: &str, line: usize) -> Result<Target, FormatError> {
    let Some(inner) = unwrap_delims(w, '[', ']') else {
        return Ok(Target::Ports(list(w)));
    };
    let mut parts = inner.trim().splitn(2, char::is_whitespace);
    let cmd = parts.next().unwrap_or("");
    let rest = parts.next().unwrap_or("").trim();
    match cmd {
        "get_ports" => {
            let names = list(rest);
            if names.is_empty() {
                return Err(FormatError::syntax(line, "get_ports without a pattern"));
            }
            Ok(Target::Ports(names))
        }
        "all_inputs" => Ok(Target::AllInputs),
        "all_outputs" => Ok(Target::AllOutputs),
        _ => Err(FormatError::syntax(line, format!("unsupported object query `{cmd}`"))),
    }
}

fn list(w: &str) -> Vec<String> {
    let w = unwrap_delims(w.trim(), '{', '}').unwrap_or(w);
    w.split_whitespace().map(str::to_string).collect()
}

fn number(w: Option<&String>, line: usize, what: &str) -> Result<f64, FormatError> {
    match w.map(|s| s.parse::<f64>()) {
        Some(Ok(v)) if v.is_finite() => Ok(v),
        _ => Err(FormatError::syntax(line, format!("{what} needs a number"))),
    }
}

/// Parses constraints. Loads stay in library capacitance units.
pub fn parse_sdc(text: &str) -> Result<Constraints, FormatError> {
    let mut c = Constraints::default();
    for (line, words) in commands(text)? {
        match words[0].as_str() {
            "create_clock" => {
                let mut period = None;
                let mut name = None;
                let mut port = None;
                let mut i = 1;
                while i < words.len() {
                    match words[i].as_str() {
                        "-period" => {
                            period = Some(number(words.get(i + 1), line, "-period")?);
                            i += 1;
                        }
                        "-name" => {
                            name = words.get(i + 1).cloned();
                            i += 1;
                        }
                        "-waveform" | "-comment" => i += 1,
                        "-add" => {}
                        w => match target(w, line)? {
                            Target::Ports(p) if p.len() == 1 => port = Some(p[0].clone()),
                            _ => return Err(FormatError::syntax(line, "create_clock needs one port")),
                        },
                    }
                    i += 1;
                }
                let p = period.ok_or_else(|| FormatError::syntax(line, "create_clock without -period"))?;
                if p <= 0.0 {
                    return Err(FormatError::syntax(line, "clock period must be positive"));
                }
                c.clock_period = Some(p * 1000.0);
                c.clock_name = name.or_else(|| port.clone());
                c.clock_port = port;
            }
            "set_driving_cell" => {
                let mut cell = None;
                let mut pin = None;
                let mut tgt = None;
                let mut i = 1;
                while i < words.len() {
                    match words[i].as_str() {
                        "-lib_cell" | "-cell" => {
                            cell = words.get(i + 1).cloned();
                            i += 1;
                        }
                        "-pin" => {
                            pin = words.get(i + 1).cloned();
                            i += 1;
                        }
                        "-library" | "-from_pin" | "-input_transition_rise" | "-input_transition_fall" => i += 1,
                        w if w.starts_with('-') => {}
                        w => tgt = Some(target(w, line)?),
                    }
                    i += 1;
                }
                let cell = cell.ok_or_else(|| FormatError::syntax(line, "set_driving_cell without -lib_cell"))?;
                let d = DriverRef { cell, pin };
                match tgt {
                    Some(Target::Ports(ps)) => {
                        for p in ps {
                            c.input_drivers.insert(p, d.clone());
                        }
                    }
                    Some(Target::AllInputs) => c.default_driver = Some(d),
                    _ => return Err(FormatError::syntax(line, "set_driving_cell needs input ports")),
                }
            }
            "set_load" => {
                let mut value = None;
                let mut tgt = None;
                let mut i = 1;
                while i < words.len() {
                    let w = words[i].as_str();
                    if w.starts_with('-') && w.parse::<f64>().is_err() {
                        if w == "-min" || w == "-max" || w == "-pin_load" || w == "-wire_load" {
                            i += 1;
                            continue;
                        }
                        return Err(FormatError::syntax(line, format!("unsupported set_load option `{w}`")));
                    }
                    if value.is_none() {
                        value = Some(number(Some(&words[i]), line, "set_load")?);
                    } else {
                        tgt = Some(target(w, line)?);
                    }
                    i += 1;
                }
                let v = value.ok_or_else(|| FormatError::syntax(line, "set_load without a value"))?;
                match tgt {
                    Some(Target::Ports(ps)) => {
                        for p in ps {
                            c.output_loads.insert(p, v);
                        }
                    }
                    Some(Target::AllOutputs) => c.default_output_load = Some(v),
                    _ => return Err(FormatError::syntax(line, "set_load needs output ports")),
                }
            }
            other => c.warnings.push(format!("line {line}: unsupported command `{other}`")),
        }
    }
    Ok(c)
}

/// Writes constraints back in the same subset.
pub fn write_sdc(c: &Constraints) -> String {
    let mut s = String::new();
    if let Some(p) = c.clock_period {
        s.push_str(&format!("create_clock -period {}", p / 1000.0));
        if let Some(n) = &c.clock_name {
            s.push_str(&format!(" -name {n}"));
        }
        if let Some(port) = &c.clock_port {
            s.push_str(&format!(" [get_ports {port}]"));
        }
        s.push('\n');
    }
    let driver = |d: &DriverRef| match &d.pin {
        Some(p) => format!("set_driving_cell -lib_cell {} -pin {p}", d.cell),
        None => format!("set_driving_cell -lib_cell {}", d.cell),
    };
    if let Some(d) = &c.default_driver {
        s.push_str(&format!("{} [all_inputs]\n", driver(d)));
    }
    for (p, d) in &c.input_drivers {
        s.push_str(&format!("{} [get_ports {p}]\n", driver(d)));
    }
    if let Some(l) = c.default_output_load {
        s.push_str(&format!("set_load {l} [all_outputs]\n"));
    }
    for (p, l) in &c.output_loads {
        s.push_str(&format!("set_load {l} [get_ports {p}]\n"));
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn clock_in_ns() {
        let c = parse_sdc("create_clock -period 8.0 [get_ports clk]\n").unwrap();
        assert_eq!(c.clock_period, Some(8000.0));
        assert_eq!(c.clock_port.as_deref(), Some("clk"));
    }

    #[test]
    fn load_and_driver() {
        let c = parse_sdc(
            "set_load 1.5 [get_ports out]\nset_driving_cell -lib_cell INV -pin Y [all_inputs]\n\
             set_load -pin_load 2 [get_ports {a b}]",
        )
        .unwrap();
        assert_eq!(c.output_load("out"), 1.5);
        assert_eq!(c.output_load("b"), 2.0);
        assert_eq!(c.driver("x").unwrap().cell, "INV");
    }

    #[test]
    fn unsupported_is_warning() {
        let c = parse_sdc("# units\nset_units -time ns\n").unwrap();
        assert_eq!(c.warnings.len(), 1);
        assert_eq!(c.clock_period, None);
        assert!(c.output_loads.is_empty());
    }

    #[test]
    fn malformed_supported_command() {
        assert!(parse_sdc("create_clock [get_ports clk]").is_err());
        assert!(parse_sdc("create_clock -period abc [get_ports clk]").is_err());
        assert!(parse_sdc("set_load 1 [get_ports out").is_err());
    }

    #[test]
    fn write_round_trip() {
        let c = parse_sdc(
            "create_clock -name core -period 1.25 [get_ports clk]\nset_load 3 [get_ports y]\n\
             set_driving_cell -lib_cell BUF [get_ports a]",
        )
        .unwrap();
        assert_eq!(parse_sdc(&write_sdc(&c)).unwrap(), c);
    }
}
