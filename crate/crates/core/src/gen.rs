// SPDX-License-Identifier: Apache-2.0

//! Seeded generators for a small synthetic technology, a matching timing
//! library and random mapped netlists with a floorplan.

use std::collections::BTreeMap;
use std::path::Path;
use std::sync::Arc;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::flow::DesignLibrary;
use crate::geom::{Dbu, Direction, Orientation, Point, Rect};
use crate::io::{
    grid_from_tech, write_def, write_lef, write_liberty, write_sdc, write_verilog, ArcSense, LibArc, LibCell, LibPin,
    Lut, Netlist, NetlistInstance, TimingLibrary,
};
use crate::model::{
    CellMaster, Constraints, Design, DriverRef, EolRule, Layer, LayerRect, MasterPin, PinDirection, PlacementStatus,
    Row, Site, SpacingTable, Technology, TrackAxis, Tracks, ViaDef,
};

pub const DBU: i64 = 2000;
pub const PITCH: Dbu = 200;
pub const WIRE_WIDTH: Dbu = 100;
pub const SITE_WIDTH: Dbu = 200;
pub const ROW_HEIGHT: Dbu = 2000;
/// Gcell edge length: two rows.
pub const GCELL: Dbu = 4000;

/// `(name, inputs, output, width in sites, height in rows)`.
const CELLS: &[(&str, &[&str], &str, i64, i64)] = &[
    ("INV", &["A"], "Y", 3, 1),
    ("BUF", &["A"], "Y", 4, 1),
    ("NAND2", &["A", "B"], "Y", 4, 1),
    ("NOR2", &["A", "B"], "Y", 4, 1),
    ("AOI21", &["A", "B", "C"], "Y", 5, 1),
    ("NAND2H", &["A", "B"], "Y", 3, 2),
    ("DFF", &["D", "CK"], "Q", 8, 1),
];

pub const COMBINATIONAL: &[&str] = &["INV", "BUF", "NAND2", "NOR2", "AOI21"];
pub const DOUBLE_HEIGHT: &str = "NAND2H";
pub const FLOP: &str = "DFF";

fn pin_bar(slot: i64) -> Rect {
    Rect::new(slot * PITCH + 50, 500, slot * PITCH + 150, 1500)
}

/// Four routing layers (M1 horizontal, alternating) with cut layers and
/// one via per layer pair, a 200x2000 site and the generator's cells.
pub fn toy_technology() -> Technology {
    let mut t = Technology::new(DBU);
    for k in 1..=4 {
        let dir = if k % 2 == 1 {
            Direction::Horizontal
        } else {
            Direction::Vertical
        };
        let mut l = Layer::new_routing(&format!("M{k}"), dir, PITCH, WIRE_WIDTH);
        l.offset = Some(PITCH / 2);
        l.min_area = 10_000;
        l.spacing = Some(SpacingTable {
            prls: vec![0, 4000],
            widths: vec![0, 300],
            spacing: vec![vec![100, 100], vec![100, 200]],
        });
        l.eol = Some(EolRule {
            eol_space: 100,
            eol_width: 120,
            eol_within: 50,
        });
        t.push_layer(l);
        if k < 4 {
            let mut v = Layer::new_cut(&format!("V{k}"), 70);
            v.cut_spacing = Some(120);
            t.push_layer(v);
        }
    }
    for k in 1..4 {
        let sq = |l: String, h: Dbu| LayerRect {
            layer: l,
            rect: Rect::new(-h, -h, h, h),
        };
        t.vias.push(ViaDef {
            name: format!("VIA{}{}", k, k + 1),
            shapes: vec![
                sq(format!("M{k}"), 50),
                sq(format!("V{k}"), 35),
                sq(format!("M{}", k + 1), 50),
            ],
        });
    }
    t.sites.push(Site {
        name: "core".into(),
        width: SITE_WIDTH,
        height: ROW_HEIGHT,
    });
    for (name, ins, out, w, h) in CELLS {
        let mut pins: Vec<MasterPin> = ins
            .iter()
            .chain(std::iter::once(out))
            .enumerate()
            .map(|(k, p)| MasterPin {
                name: p.to_string(),
                direction: if p == out {
                    PinDirection::Output
                } else {
                    PinDirection::Input
                },
                shapes: vec![LayerRect {
                    layer: "M1".into(),
                    rect: pin_bar(k as i64),
                }],
            })
            .collect();
        pins.sort_by(|a, b| a.name.cmp(&b.name));
        t.push_master(CellMaster {
            name: name.to_string(),
            width: w * SITE_WIDTH,
            height: h * ROW_HEIGHT,
            site: Some("core".into()),
            pins,
            obstructions: Vec::new(),
        });
    }
    t
}

fn table(base: f64, per_ff: f64, per_slew: f64) -> Lut {
    let slews = vec![5.0, 50.0, 200.0];
    let loads = vec![1.0, 5.0, 20.0];
    let values = slews
        .iter()
        .map(|s| {
            loads
                .iter()
                .map(|l| (base + per_ff * l + per_slew * s).round())
                .collect()
        })
        .collect();
    Lut { slews, loads, values }
}

/// NLDM library for the generator's cells. Times in ps, loads in fF.
pub fn toy_library() -> TimingLibrary {
    let mut cells = BTreeMap::new();
    for (k, (name, ins, out, w, h)) in CELLS.iter().enumerate() {
        let seq = *name == FLOP;
        let mut pins = BTreeMap::new();
        for p in ins.iter() {
            pins.insert(
                p.to_string(),
                LibPin {
                    name: p.to_string(),
                    direction: PinDirection::Input,
                    capacitance: 1.0 + 0.25 * k as f64,
                    max_capacitance: None,
                    is_clock: seq && *p == "CK",
                },
            );
        }
        pins.insert(
            out.to_string(),
            LibPin {
                name: out.to_string(),
                direction: PinDirection::Output,
                capacitance: 0.0,
                max_capacitance: Some(60.0),
                is_clock: false,
            },
        );
        let arcs = if seq {
            vec![LibArc {
                from: "CK".into(),
                to: out.to_string(),
                sense: ArcSense::Non,
                clocked: true,
                delay: table(40.0, 3.0, 0.1),
                slew: table(10.0, 2.0, 0.05),
            }]
        } else {
            ins.iter()
                .enumerate()
                .map(|(j, p)| LibArc {
                    from: p.to_string(),
                    to: out.to_string(),
                    sense: if *name == "BUF" {
                        ArcSense::Positive
                    } else {
                        ArcSense::Negative
                    },
                    clocked: false,
                    delay: table(10.0 + 4.0 * k as f64 + 2.0 * j as f64, 2.5, 0.2),
                    slew: table(8.0 + k as f64, 3.0, 0.1),
                })
                .collect()
        };
        cells.insert(
            name.to_string(),
            LibCell {
                name: name.to_string(),
                area: (w * h) as f64 * 0.2,
                leakage_power: 0.0,
                pins,
                arcs,
                sequential: seq,
            },
        );
    }
    TimingLibrary {
        name: "toy".into(),
        cap_unit_ff: 1.0,
        cells,
        warnings: 0,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NetlistSpec {
    pub cells: usize,
    pub inputs: usize,
    pub outputs: usize,
    /// Fraction of cells that are flip-flops.
    pub flop_ratio: f64,
    /// Fraction of cells that are double height.
    pub double_height_ratio: f64,
    /// Inputs are drawn from the most recent signals within this window.
    pub locality: usize,
}

impl NetlistSpec {
    pub fn with_cells(cells: usize) -> Self {
        let io = ((cells as f64).sqrt() as usize).clamp(2, 64);
        NetlistSpec {
            cells,
            inputs: io,
            outputs: io,
            flop_ratio: 0.1,
            double_height_ratio: 0.05,
            locality: 40,
        }
    }
}

/// Random mapped netlist. Combinational cells only read earlier signals, so
/// the netlist has no combinational loops; flip-flop data inputs may read
/// any signal.
pub fn random_netlist(spec: &NetlistSpec, seed: u64) -> Netlist {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut nl = Netlist {
        module: "top".into(),
        ..Default::default()
    };
    let mut signals: Vec<String> = Vec::new();
    for i in 0..spec.inputs.max(1) {
        let p = format!("in{i}");
        nl.ports.push((p.clone(), PinDirection::Input));
        signals.push(p);
    }
    nl.ports.push(("clk".into(), PinDirection::Input));
    let n_flops = ((spec.cells as f64) * spec.flop_ratio).round() as usize;
    let n_tall = ((spec.cells as f64) * spec.double_height_ratio).round() as usize;
    let mut kinds: Vec<&str> = Vec::with_capacity(spec.cells);
    kinds.extend(std::iter::repeat_n(FLOP, n_flops.min(spec.cells)));
    kinds.extend(std::iter::repeat_n(DOUBLE_HEIGHT, n_tall.min(spec.cells - kinds.len())));
    while kinds.len() < spec.cells {
        kinds.push(COMBINATIONAL[rng.gen_range(0..COMBINATIONAL.len())]);
    }
    kinds.shuffle(&mut rng);
    // Flop outputs exist up front so that combinational logic can read them.
    let mut flop_q = Vec::new();
    for (i, k) in kinds.iter().enumerate() {
        if *k == FLOP {
            let q = format!("q{i}");
            signals.push(q.clone());
            flop_q.push(q);
        }
    }
    let mut fanout: BTreeMap<String, usize> = BTreeMap::new();
    let mut pick = |rng: &mut ChaCha8Rng, signals: &[String]| -> String {
        let lo = signals.len().saturating_sub(spec.locality.max(1));
        let s = signals[rng.gen_range(lo..signals.len())].clone();
        *fanout.entry(s.clone()).or_default() += 1;
        s
    };
    let mut flops = Vec::new();
    for (i, k) in kinds.iter().enumerate() {
        let name = format!("u{i}");
        if *k == FLOP {
            flops.push(i);
            continue;
        }
        let ins = CELLS.iter().find(|c| c.0 == *k).expect("known cell").1;
        let out = format!("n{i}");
        let mut conns: Vec<(String, String)> = ins.iter().map(|p| (p.to_string(), pick(&mut rng, &signals))).collect();
        conns.push(("Y".into(), out.clone()));
        nl.instances.push(NetlistInstance {
            name,
            cell: k.to_string(),
            connections: conns,
        });
        signals.push(out);
    }
    for i in flops {
        let d = pick(&mut rng, &signals);
        nl.instances.push(NetlistInstance {
            name: format!("u{i}"),
            cell: FLOP.into(),
            connections: vec![
                ("CK".into(), "clk".into()),
                ("D".into(), d),
                ("Q".into(), format!("q{i}")),
            ],
        });
    }
    // Outputs: unread signals first, then the latest ones.
    let mut candidates: Vec<&String> = signals[spec.inputs.max(1)..]
        .iter()
        .filter(|s| !fanout.contains_key(*s))
        .collect();
    for s in signals[spec.inputs.max(1)..].iter().rev() {
        if candidates.len() >= spec.outputs.max(1) {
            break;
        }
        if !candidates.contains(&s) {
            candidates.push(s);
        }
    }
    let outs: Vec<String> = candidates.iter().map(|s| s.to_string()).collect();
    let mut renamed: BTreeMap<String, String> = BTreeMap::new();
    for (i, s) in outs.iter().enumerate() {
        let p = format!("out{i}");
        nl.ports.push((p.clone(), PinDirection::Output));
        renamed.insert(s.clone(), p);
    }
    for inst in &mut nl.instances {
        for (_, net) in &mut inst.connections {
            if let Some(p) = renamed.get(net) {
                *net = p.clone();
            }
        }
    }
    nl.wires = signals[spec.inputs.max(1)..]
        .iter()
        .filter(|s| !renamed.contains_key(*s))
        .cloned()
        .collect();
    nl.instances.sort_by(|a, b| a.name.cmp(&b.name));
    nl
}

/// Default constraints for generated designs: a buffer drives every input
/// and every output sees 2 fF. No clock period, so the flow derives one.
pub fn toy_constraints() -> Constraints {
    Constraints {
        default_driver: Some(DriverRef {
            cell: "BUF".into(),
            pin: Some("Y".into()),
        }),
        default_output_load: Some(2.0),
        ..Default::default()
    }
}

/// Unplaced design with rows, tracks, a gcell grid and ports on M3 along
/// the left (inputs) and right (outputs) die edges. The core is sized for
/// the given utilization and rounded up to whole gcells.
pub fn floorplan(netlist: &Netlist, tech: Arc<Technology>, utilization: f64) -> Design {
    let mut d = netlist.to_design(tech.clone());
    let cell_area: i64 = d
        .instances
        .iter()
        .filter_map(|i| tech.master(&i.master))
        .map(|m| m.width * m.height)
        .sum();
    let side = ((cell_area as f64 / utilization.clamp(0.05, 1.0)).sqrt()).max(GCELL as f64);
    let per_side = netlist
        .ports
        .iter()
        .filter(|p| p.1 == PinDirection::Output)
        .count()
        .max(netlist.ports.len() / 2 + 1) as i64;
    let min_h = (per_side + 1) * 4 * PITCH;
    let round = |v: f64| ((v / GCELL as f64).ceil() as i64) * GCELL;
    let w = round(side);
    let h = round(side.max(min_h as f64));
    d.die_area = Rect::new(0, 0, w, h);
    let nrows = h / ROW_HEIGHT;
    for r in 0..nrows {
        d.rows.push(Row {
            name: format!("row{r}"),
            site: "core".into(),
            origin: Point::new(0, r * ROW_HEIGHT),
            orientation: if r % 2 == 0 { Orientation::N } else { Orientation::FS },
            num_sites: (w / SITE_WIDTH) as usize,
            site_width: SITE_WIDTH,
            site_height: ROW_HEIGHT,
        });
    }
    for l in tech.routing_layers() {
        for (axis, extent) in [(TrackAxis::X, w), (TrackAxis::Y, h)] {
            d.tracks.push(Tracks {
                axis,
                start: PITCH / 2,
                count: (extent / PITCH) as usize,
                step: PITCH,
                layers: vec![l.name.clone()],
            });
        }
    }
    d.gcell_grid = grid_from_tech(
        &tech,
        Point::new(0, 0),
        ((w / GCELL) as usize, (h / GCELL) as usize),
        (GCELL, GCELL),
    );
    let mut ins = 0;
    let mut outs = 0;
    for p in &mut d.ports {
        let (x, k) = match p.direction {
            PinDirection::Output => {
                outs += 1;
                (w - PITCH / 2, outs - 1)
            }
            _ => {
                ins += 1;
                (PITCH / 2, ins - 1)
            }
        };
        let y = PITCH / 2 + (2 * k + 1) * 2 * PITCH;
        p.layer = Some("M3".into());
        p.shape = Some(Rect::new(-50, -50, 50, 50));
        p.location = Some(Point::new(x, y));
        p.status = PlacementStatus::Fixed;
    }
    d.reindex();
    d
}

/// Full generated case: technology, library, constraints and floorplanned
/// design.
pub struct ToyCase {
    pub tech: Arc<Technology>,
    pub lib: TimingLibrary,
    pub constraints: Constraints,
    pub netlist: Netlist,
    pub design: Design,
}

pub fn toy_case(cells: usize, seed: u64) -> ToyCase {
    let tech = Arc::new(toy_technology());
    let netlist = random_netlist(&NetlistSpec::with_cells(cells), seed);
    let design = floorplan(&netlist, tech.clone(), 0.6);
    ToyCase {
        tech,
        lib: toy_library(),
        constraints: toy_constraints(),
        netlist,
        design,
    }
}

impl ToyCase {
    /// Writes `design.{v,lib,lef,def,sdc}` into `dir` and returns their
    /// file names.
    pub fn write_library(&self, dir: &Path) -> std::io::Result<DesignLibrary> {
        let files = DesignLibrary {
            verilog: "design.v".into(),
            liberty: "design.lib".into(),
            lef: "design.lef".into(),
            def: "design.def".into(),
            sdc: "design.sdc".into(),
        };
        std::fs::create_dir_all(dir)?;
        std::fs::write(dir.join(&files.verilog), write_verilog(&self.netlist))?;
        std::fs::write(dir.join(&files.liberty), write_liberty(&self.lib))?;
        std::fs::write(dir.join(&files.lef), write_lef(&self.tech))?;
        std::fs::write(dir.join(&files.def), write_def(&self.design))?;
        std::fs::write(dir.join(&files.sdc), write_sdc(&self.constraints))?;
        Ok(files)
    }
}

/// Uniformly random (possibly overlapping) placement of every movable
/// instance inside the core, on site and row boundaries.
pub fn scatter(design: &mut Design, seed: u64) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let die = design.die_area;
    let tech = design.tech.clone();
    for inst in &mut design.instances {
        if inst.is_fixed() {
            continue;
        }
        let Some(m) = tech.master(&inst.master) else { continue };
        let xs = ((die.width() - m.width) / SITE_WIDTH).max(0);
        let ys = ((die.height() - m.height) / ROW_HEIGHT).max(0);
        let x = rng.gen_range(0..=xs) * SITE_WIDTH + die.lo.x;
        let y = rng.gen_range(0..=ys) * ROW_HEIGHT + die.lo.y;
        inst.location = Some(Point::new(x, y));
        inst.orientation = Orientation::N;
        inst.status = PlacementStatus::Placed;
    }
}
