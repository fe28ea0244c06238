// SPDX-License-Identifier: Apache-2.0

//! Static timing over a mapped netlist with NLDM tables.
//!
//! Flip-flops cut the graph: their data inputs are endpoints and their
//! outputs start new paths at time 0. Net arcs have zero delay unless the
//! Elmore wire model is selected.

#[cfg(test)]
use std::collections::BTreeMap;
use std::collections::{BTreeSet, HashMap};
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::io::{Lut, TimingLibrary};
use crate::model::{dbu_to_micron, Constraints, Design, NetPin, PinDirection};

pub const DEFAULT_INPUT_SLEW_PS: f64 = 5.0;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum StaError {
    #[error("combinational loop through {}", .0.join(" -> "))]
    CombinationalLoop(Vec<String>),
    #[error("instance `{inst}` uses cell `{cell}` which is not in the library")]
    UnmappedCell { inst: String, cell: String },
    #[error("timing graph has no endpoints")]
    EmptyGraph,
    #[error("critical path delay is zero")]
    ZeroDelay,
    #[error("no clock period is set")]
    NoClock,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum WireModel {
    /// Net arcs have zero delay; the driver sees pin and port loads only.
    Lumped,
    /// Star-topology Elmore delay with one resistance (kOhm/um) and
    /// capacitance (fF/um) for every layer. Wire capacitance over the
    /// net's half-perimeter is added to the driver load.
    Elmore { r_per_um: f64, c_per_um: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StaOptions {
    pub wire: WireModel,
    pub input_slew: f64,
}

impl Default for StaOptions {
    fn default() -> Self {
        StaOptions {
            wire: WireModel::Lumped,
            input_slew: DEFAULT_INPUT_SLEW_PS,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimingNode {
    /// `inst/pin` or the port name.
    pub name: String,
    pub is_start: bool,
    pub is_end: bool,
    /// Slew at a startpoint.
    pub start_slew: f64,
    /// Load driven by this pin in fF (non-zero only for drivers).
    pub load: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum EdgeKind {
    Cell { delay: Lut, slew: Lut },
    Net { wire_delay: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimingEdge {
    pub from: usize,
    pub to: usize,
    pub kind: EdgeKind,
    /// Delay after propagation.
    pub delay: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimingGraph {
    pub nodes: Vec<TimingNode>,
    pub edges: Vec<TimingEdge>,
    pub topo: Vec<usize>,
    pub arrival: Vec<f64>,
    pub slew: Vec<f64>,
    pub required: Vec<f64>,
    /// In-edge realizing the arrival.
    pub pred: Vec<Option<usize>>,
    /// Table lookups that fell outside a table and were clamped.
    pub clamped_lookups: usize,
    in_edges: Vec<Vec<usize>>,
    out_edges: Vec<Vec<usize>>,
    index: HashMap<String, usize>,
}

impl TimingGraph {
    fn new() -> Self {
        TimingGraph {
            nodes: Vec::new(),
            edges: Vec::new(),
            topo: Vec::new(),
            arrival: Vec::new(),
            slew: Vec::new(),
            required: Vec::new(),
            pred: Vec::new(),
            clamped_lookups: 0,
            in_edges: Vec::new(),
            out_edges: Vec::new(),
            index: HashMap::new(),
        }
    }

    fn add_node(&mut self, name: String) -> usize {
        if let Some(&i) = self.index.get(&name) {
            return i;
        }
        let i = self.nodes.len();
        self.index.insert(name.clone(), i);
        self.nodes.push(TimingNode {
            name,
            is_start: false,
            is_end: false,
            start_slew: 0.0,
            load: 0.0,
        });
        self.in_edges.push(Vec::new());
        self.out_edges.push(Vec::new());
        i
    }

    fn add_edge(&mut self, from: usize, to: usize, kind: EdgeKind) {
        let e = self.edges.len();
        self.edges.push(TimingEdge {
            from,
            to,
            kind,
            delay: 0.0,
        });
        self.out_edges[from].push(e);
        self.in_edges[to].push(e);
    }

    pub fn node(&self, name: &str) -> Option<usize> {
        self.index.get(name).copied()
    }

    pub fn in_edges(&self, v: usize) -> &[usize] {
        &self.in_edges[v]
    }

    pub fn out_edges(&self, v: usize) -> &[usize] {
        &self.out_edges[v]
    }

    pub fn endpoints(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.nodes.len()).filter(|&v| self.nodes[v].is_end)
    }
}

fn pin_name(p: &NetPin) -> String {
    p.display_name()
}

/// Builds the timing graph: one node per library pin of every instance and
/// per port, cell arcs from the library and net arcs from each driver to
/// every sink.
pub fn build_timing_graph(
    design: &Design,
    lib: &TimingLibrary,
    constraints: &Constraints,
    opts: &StaOptions,
) -> Result<TimingGraph, StaError> {
    let mut g = TimingGraph::new();
    for inst in &design.instances {
        let cell = lib.cell(&inst.master).ok_or_else(|| StaError::UnmappedCell {
            inst: inst.name.clone(),
            cell: inst.master.clone(),
        })?;
        for p in cell.pins.values() {
            g.add_node(format!("{}/{}", inst.name, p.name));
        }
    }
    for port in &design.ports {
        g.add_node(port.name.clone());
    }

    // Net loads and net arcs.
    let mut driver_of_load: Vec<(usize, f64)> = Vec::new();
    for net in &design.nets {
        let mut drivers = Vec::new();
        let mut sinks = Vec::new();
        let mut load = 0.0;
        for p in &net.pins {
            match p {
                NetPin::Instance { inst, pin } => {
                    let Some(i) = design.instance(inst) else { continue };
                    let Some(cell) = lib.cell(&i.master) else { continue };
                    let Some(lp) = cell.pin(pin) else { continue };
                    if lp.direction == PinDirection::Output {
                        drivers.push(p);
                    } else {
                        load += sink_cap(design, lib, constraints, p);
                        sinks.push(p);
                    }
                }
                NetPin::Port(name) => {
                    let Some(port) = design.port(name) else { continue };
                    if port.direction == PinDirection::Input {
                        drivers.push(p);
                    } else {
                        load += sink_cap(design, lib, constraints, p);
                        sinks.push(p);
                    }
                }
            }
        }
        let mut wire_delays = vec![0.0; sinks.len()];
        if let WireModel::Elmore { r_per_um, c_per_um } = opts.wire {
            let um = |v: i64| dbu_to_micron(v, design.dbu_per_micron.max(1));
            load += c_per_um * um(design.net_hpwl(net));
            if let Some(src) = drivers.first().and_then(|d| design.pin_position(d)) {
                for (w, p) in wire_delays.iter_mut().zip(&sinks) {
                    let Some(at) = design.pin_position(p) else { continue };
                    let len = um(src.manhattan(&at));
                    *w = r_per_um * len * (c_per_um * len / 2.0 + sink_cap(design, lib, constraints, p));
                }
            }
        }
        for d in &drivers {
            let dn = g.node(&pin_name(d)).expect("driver node");
            driver_of_load.push((dn, load));
            for (s, w) in sinks.iter().zip(&wire_delays) {
                let sn = g.node(&pin_name(s)).expect("sink node");
                g.add_edge(dn, sn, EdgeKind::Net { wire_delay: *w });
            }
        }
    }
    for (n, load) in driver_of_load {
        g.nodes[n].load = load;
    }

    // Cell arcs, start and end points.
    for inst in &design.instances {
        let cell = lib.cell(&inst.master).expect("checked above");
        let node = |p: &str| format!("{}/{}", inst.name, p);
        for arc in &cell.arcs {
            let (Some(a), Some(b)) = (g.node(&node(&arc.from)), g.node(&node(&arc.to))) else {
                continue;
            };
            if arc.clocked {
                continue;
            }
            g.add_edge(
                a,
                b,
                EdgeKind::Cell {
                    delay: arc.delay.clone(),
                    slew: arc.slew.clone(),
                },
            );
        }
        if cell.sequential {
            for p in cell.pins.values() {
                let v = g.node(&node(&p.name)).expect("pin node");
                match p.direction {
                    PinDirection::Output => {
                        g.nodes[v].is_start = true;
                        let load = g.nodes[v].load;
                        let slew = cell
                            .arcs
                            .iter()
                            .filter(|a| a.clocked && a.to == p.name)
                            .map(|a| a.slew.lookup(opts.input_slew, load).0)
                            .fold(None, |m: Option<f64>, s| Some(m.map_or(s, |m| m.max(s))));
                        g.nodes[v].start_slew = slew.unwrap_or(opts.input_slew);
                    }
                    _ if !p.is_clock => g.nodes[v].is_end = true,
                    _ => {}
                }
            }
        }
    }
    for port in &design.ports {
        let v = g.node(&port.name).expect("port node");
        match port.direction {
            PinDirection::Input if constraints.clock_port.as_deref() != Some(&port.name) => {
                g.nodes[v].is_start = true;
                g.nodes[v].start_slew = driver_slew(lib, constraints, &port.name, g.nodes[v].load, opts);
            }
            PinDirection::Output => g.nodes[v].is_end = true,
            _ => {}
        }
    }
    g.topo = topo_order(&g)?;
    let n = g.nodes.len();
    g.arrival = vec![f64::NEG_INFINITY; n];
    g.slew = vec![0.0; n];
    g.required = vec![f64::INFINITY; n];
    g.pred = vec![None; n];
    Ok(g)
}

fn sink_cap(design: &Design, lib: &TimingLibrary, c: &Constraints, p: &NetPin) -> f64 {
    match p {
        NetPin::Instance { inst, pin } => design
            .instance(inst)
            .and_then(|i| lib.cell(&i.master))
            .and_then(|cell| cell.pin(pin))
            .map_or(0.0, |lp| lp.capacitance),
        NetPin::Port(name) => c.output_load(name) * lib.cap_unit_ff,
    }
}

/// Slew of an input port driven by the constraint's driving cell, or the
/// default input slew.
fn driver_slew(lib: &TimingLibrary, c: &Constraints, port: &str, load: f64, opts: &StaOptions) -> f64 {
    let Some(d) = c.driver(port) else {
        return opts.input_slew;
    };
    let Some(cell) = lib.cell(&d.cell) else {
        return opts.input_slew;
    };
    let out = d.pin.clone().or_else(|| {
        cell.pins
            .values()
            .find(|p| p.direction == PinDirection::Output)
            .map(|p| p.name.clone())
    });
    cell.arcs
        .iter()
        .filter(|a| Some(&a.to) == out.as_ref())
        .map(|a| a.slew.lookup(opts.input_slew, load).0)
        .fold(None, |m: Option<f64>, s| Some(m.map_or(s, |m| m.max(s))))
        .unwrap_or(opts.input_slew)
}

fn topo_order(g: &TimingGraph) -> Result<Vec<usize>, StaError> {
    let n = g.nodes.len();
    let mut indeg: Vec<usize> = (0..n).map(|v| g.in_edges[v].len()).collect();
    // Ready nodes are taken in name order so the order is reproducible.
    let mut ready: BTreeSet<(&str, usize)> = (0..n)
        .filter(|&v| indeg[v] == 0)
        .map(|v| (g.nodes[v].name.as_str(), v))
        .collect();
    let mut order = Vec::with_capacity(n);
    while let Some(&first) = ready.iter().next() {
        ready.remove(&first);
        let v = first.1;
        order.push(v);
        for &e in &g.out_edges[v] {
            let w = g.edges[e].to;
            indeg[w] -= 1;
            if indeg[w] == 0 {
                ready.insert((g.nodes[w].name.as_str(), w));
            }
        }
    }
    if order.len() == n {
        return Ok(order);
    }
    // Walk backwards inside the leftover subgraph until a node repeats.
    let left: Vec<bool> = indeg.iter().map(|&d| d > 0).collect();
    let start = (0..n)
        .filter(|&v| left[v])
        .min_by_key(|&v| &g.nodes[v].name)
        .expect("leftover");
    let mut seen: HashMap<usize, usize> = HashMap::new();
    let mut walk = vec![start];
    let mut v = start;
    loop {
        seen.insert(v, walk.len() - 1);
        let u = g.in_edges[v]
            .iter()
            .map(|&e| g.edges[e].from)
            .filter(|&u| left[u])
            .min_by_key(|&u| &g.nodes[u].name)
            .expect("leftover node has a leftover predecessor");
        if let Some(&pos) = seen.get(&u) {
            let mut cycle: Vec<String> = walk[pos..].iter().rev().map(|&w| g.nodes[w].name.clone()).collect();
            cycle.push(cycle[0].clone());
            return Err(StaError::CombinationalLoop(cycle));
        }
        walk.push(u);
        v = u;
    }
}

/// Forward propagation of arrival times and slews in topological order.
pub fn propagate(g: &mut TimingGraph) {
    let mut clamped = 0;
    for k in 0..g.topo.len() {
        let v = g.topo[k];
        if g.nodes[v].is_start && g.in_edges[v].is_empty() {
            g.arrival[v] = 0.0;
            g.slew[v] = g.nodes[v].start_slew;
            g.pred[v] = None;
            continue;
        }
        let mut best: Option<(f64, usize)> = None;
        let mut slew: f64 = 0.0;
        let load = g.nodes[v].load;
        for i in 0..g.in_edges[v].len() {
            let e = g.in_edges[v][i];
            let u = g.edges[e].from;
            if g.arrival[u] == f64::NEG_INFINITY {
                continue;
            }
            let (d, s) = match &g.edges[e].kind {
                EdgeKind::Cell { delay, slew } => {
                    let (d, c1) = delay.lookup(g.slew[u], load);
                    let (s, c2) = slew.lookup(g.slew[u], load);
                    clamped += usize::from(c1 || c2);
                    (d, s)
                }
                EdgeKind::Net { wire_delay } => (*wire_delay, g.slew[u]),
            };
            g.edges[e].delay = d;
            slew = slew.max(s);
            let a = g.arrival[u] + d;
            let better = match best {
                None => true,
                Some((ba, be)) => a > ba || (a == ba && g.nodes[u].name < g.nodes[g.edges[be].from].name),
            };
            if better {
                best = Some((a, e));
            }
        }
        match best {
            Some((a, e)) => {
                g.arrival[v] = a;
                g.pred[v] = Some(e);
                g.slew[v] = slew;
            }
            None if g.nodes[v].is_start => {
                g.arrival[v] = 0.0;
                g.slew[v] = g.nodes[v].start_slew;
            }
            None => {}
        }
    }
    g.clamped_lookups = clamped;
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathStep {
    pub pin: String,
    pub arrival: f64,
    /// Delay of the arc into this pin (0 at the startpoint).
    pub delay: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CriticalPath {
    pub steps: Vec<PathStep>,
    pub delay: f64,
}

/// The endpoint with the latest arrival, traced back through `pred`. Ties
/// go to the lexicographically smaller endpoint name.
pub fn critical_path(g: &TimingGraph) -> Result<CriticalPath, StaError> {
    let end = g
        .endpoints()
        .filter(|&v| g.arrival[v].is_finite())
        .max_by(|&a, &b| {
            g.arrival[a]
                .total_cmp(&g.arrival[b])
                .then_with(|| g.nodes[b].name.cmp(&g.nodes[a].name))
        })
        .ok_or(StaError::EmptyGraph)?;
    let mut steps = Vec::new();
    let mut v = end;
    loop {
        let (delay, next) = match g.pred[v] {
            Some(e) => (g.edges[e].delay, Some(g.edges[e].from)),
            None => (0.0, None),
        };
        steps.push(PathStep {
            pin: g.nodes[v].name.clone(),
            arrival: g.arrival[v],
            delay,
        });
        match next {
            Some(u) => v = u,
            None => break,
        }
    }
    steps.reverse();
    Ok(CriticalPath {
        delay: g.arrival[end],
        steps,
    })
}

/// Clock period as 80% of the critical path delay, rounded to whole ps.
pub fn derive_clock_period(g: &TimingGraph) -> Result<f64, StaError> {
    let d = critical_path(g)?.delay;
    if d <= 0.0 {
        return Err(StaError::ZeroDelay);
    }
    Ok(period_from_delay(d))
}

pub fn period_from_delay(d: f64) -> f64 {
    (d * 4.0 / 5.0).round()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimingSummary {
    pub clock_period: f64,
    /// Worst endpoint slack.
    pub wns: f64,
    /// Sum of negative endpoint slacks.
    pub tns: f64,
    pub endpoints: usize,
    pub failing_endpoints: usize,
}

/// Backward required-time propagation against `clock_period` and the
/// endpoint slack summary.
pub fn compute_slack(g: &mut TimingGraph, constraints: &Constraints) -> Result<TimingSummary, StaError> {
    let period = constraints.clock_period.ok_or(StaError::NoClock)?;
    let n = g.nodes.len();
    g.required = vec![f64::INFINITY; n];
    for k in (0..g.topo.len()).rev() {
        let v = g.topo[k];
        let mut r = if g.nodes[v].is_end { period } else { f64::INFINITY };
        for &e in &g.out_edges[v] {
            r = r.min(g.required[g.edges[e].to] - g.edges[e].delay);
        }
        g.required[v] = r;
    }
    let mut s = TimingSummary {
        clock_period: period,
        wns: f64::INFINITY,
        tns: 0.0,
        endpoints: 0,
        failing_endpoints: 0,
    };
    for v in g.endpoints().filter(|&v| g.arrival[v].is_finite()).collect::<Vec<_>>() {
        let slack = period - g.arrival[v];
        s.endpoints += 1;
        s.wns = s.wns.min(slack);
        if slack < 0.0 {
            s.tns += slack;
            s.failing_endpoints += 1;
        }
    }
    if s.endpoints == 0 {
        return Err(StaError::EmptyGraph);
    }
    Ok(s)
}

impl TimingGraph {
    pub fn slack(&self, v: usize) -> f64 {
        self.required[v] - self.arrival[v]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimingReport {
    pub summary: TimingSummary,
    pub path: CriticalPath,
    /// True when the clock period came from the critical path rather than
    /// from the constraints.
    pub derived_clock: bool,
    pub clamped_lookups: usize,
}

/// Full analysis. Without a clock in the constraints the period is derived
/// from the critical path.
pub fn analyze(
    design: &Design,
    lib: &TimingLibrary,
    constraints: &Constraints,
    opts: &StaOptions,
) -> Result<TimingReport, StaError> {
    let mut g = build_timing_graph(design, lib, constraints, opts)?;
    propagate(&mut g);
    let path = critical_path(&g)?;
    let mut c = constraints.clone();
    let derived = c.clock_period.is_none();
    if derived {
        c.clock_period = Some(derive_clock_period(&g)?);
    }
    let summary = compute_slack(&mut g, &c)?;
    Ok(TimingReport {
        summary,
        path,
        derived_clock: derived,
        clamped_lookups: g.clamped_lookups,
    })
}

pub fn format_timing_report(r: &TimingReport, wire: &WireModel) -> String {
    let mut s = String::from("# rdf timing report v1\n");
    let model = match wire {
        WireModel::Lumped => "lumped (zero net delay)".to_string(),
        WireModel::Elmore { r_per_um, c_per_um } => format!("elmore r={r_per_um} c={c_per_um}"),
    };
    let _ = writeln!(s, "wire_model {model}");
    let _ = writeln!(
        s,
        "clock_period {:.3}{}",
        r.summary.clock_period,
        if r.derived_clock { " (derived)" } else { "" }
    );
    let _ = writeln!(s, "wns {:.3}", r.summary.wns);
    let _ = writeln!(s, "tns {:.3}", r.summary.tns);
    let _ = writeln!(
        s,
        "endpoints {} failing {}",
        r.summary.endpoints, r.summary.failing_endpoints
    );
    if r.clamped_lookups > 0 {
        let _ = writeln!(s, "warning {} table lookups clamped to table bounds", r.clamped_lookups);
    }
    let _ = writeln!(s, "critical_path {:.3}", r.path.delay);
    for st in &r.path.steps {
        let _ = writeln!(s, "  {} delay {:.3} arrival {:.3}", st.pin, st.delay, st.arrival);
    }
    s
}
