// SPDX-License-Identifier: Apache-2.0

mod common;

use std::collections::BTreeSet;
use std::sync::Arc;

use proptest::prelude::*;

use common::*;
use rdf_core::check::{check_all_connectivity, check_legality, check_shorts, congestion_map};
use rdf_core::flow::{run_flow, FlowConfig, RunOptions};
use rdf_core::gen::{floorplan, random_netlist, scatter, toy_case, toy_library, toy_technology, NetlistSpec};
use rdf_core::geom::{for_each_touching_pair, union_area};
use rdf_core::io::{parse_def, parse_liberty, parse_verilog, write_liberty, write_verilog, Lut};
use rdf_core::stages::{gr_input_from_design, legalize, place_global, route_global, GrOptions, PlaceOptions};
use rdf_core::Rect;

fn rect() -> impl Strategy<Value = Rect> {
    (0i64..200, 0i64..200, 0i64..60, 0i64..60).prop_map(|(x, y, w, h)| Rect::new(x, y, x + w, y + h))
}

fn lut() -> impl Strategy<Value = Lut> {
    (1usize..4, 1usize..4).prop_flat_map(|(ns, nl)| {
        (
            proptest::collection::btree_set(0u32..500, ns),
            proptest::collection::btree_set(0u32..500, nl),
            proptest::collection::vec(proptest::collection::vec(0.0f64..300.0, nl), ns),
        )
            .prop_map(|(s, l, values)| Lut {
                slews: s.into_iter().map(f64::from).collect(),
                loads: l.into_iter().map(f64::from).collect(),
                values,
            })
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn touching_pairs_match_brute_force(rs in proptest::collection::vec(rect(), 0..60)) {
        let mut got = BTreeSet::new();
        for_each_touching_pair(&rs, |i, j| {
            assert!(i < j);
            assert!(got.insert((i, j)), "pair reported twice");
        });
        let mut want = BTreeSet::new();
        for i in 0..rs.len() {
            for j in i + 1..rs.len() {
                let (a, b) = (&rs[i], &rs[j]);
                if a.lo.x <= b.hi.x && b.lo.x <= a.hi.x && a.lo.y <= b.hi.y && b.lo.y <= a.hi.y {
                    want.insert((i, j));
                }
            }
        }
        prop_assert_eq!(got, want);
    }

    #[test]
    fn union_area_matches_compression(rs in proptest::collection::vec(rect(), 0..30)) {
        prop_assert_eq!(union_area(&rs), union_area_brute(&rs));
    }

    #[test]
    fn intersection_is_common_part(a in rect(), b in rect()) {
        prop_assert_eq!(a.intersection(&b), b.intersection(&a));
        if let Some(i) = a.intersection(&b) {
            prop_assert!(a.contains_rect(&i) && b.contains_rect(&i));
        }
    }

    #[test]
    fn lut_lookup_stays_in_range(t in lut(), s in -100.0f64..800.0, l in -100.0f64..800.0) {
        let (v, clamped) = t.lookup(s, l);
        let all = t.values.iter().flatten();
        let lo = all.clone().copied().fold(f64::INFINITY, f64::min);
        let hi = all.copied().fold(f64::NEG_INFINITY, f64::max);
        prop_assert!(v >= lo - 1e-9 && v <= hi + 1e-9);
        let inside = |axis: &[f64], x: f64| axis.len() == 1 || (axis[0] <= x && x <= axis[axis.len() - 1]);
        if inside(&t.slews, s) && inside(&t.loads, l) && t.slews.len() > 1 && t.loads.len() > 1 {
            prop_assert!(!clamped);
        }
        prop_assert!((v - interp(&t, s, l)).abs() < 1e-9);
    }

    #[test]
    fn verilog_round_trip(cells in 1usize..80, seed in any::<u64>()) {
        let nl = random_netlist(&NetlistSpec::with_cells(cells), seed);
        let text = write_verilog(&nl);
        let back = parse_verilog(&text).unwrap();
        prop_assert_eq!(write_verilog(&back), text);
        prop_assert_eq!(back, nl);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn placement_then_legalization_is_legal(cells in 1usize..120, util in 0.2f64..0.75, seed in any::<u64>()) {
        let spec = NetlistSpec { double_height_ratio: 0.2, ..NetlistSpec::with_cells(cells) };
        let nl = random_netlist(&spec, seed);
        let mut d = floorplan(&nl, Arc::new(toy_technology()), util);
        let core = Rect::bbox_of(d.rows.iter().map(|r| r.rect()).collect::<Vec<_>>().iter()).unwrap();
        place_global(&mut d, &PlaceOptions { seed, ..Default::default() }).unwrap();
        for i in &d.instances {
            prop_assert!(core.contains_rect(&d.instance_bbox(i).unwrap()));
        }
        legalize(&mut d).unwrap();
        prop_assert!(check_legality(&d).unwrap().is_empty());
    }

    #[test]
    fn legalization_is_idempotent(cells in 1usize..80, seed in any::<u64>()) {
        let mut c = toy_case(cells, seed);
        scatter(&mut c.design, seed);
        legalize(&mut c.design).unwrap();
        let once = c.design.clone();
        legalize(&mut c.design).unwrap();
        prop_assert_eq!(once, c.design);
    }

    #[test]
    fn global_route_conserves_usage(cells in 2usize..60, seed in any::<u64>()) {
        let mut c = toy_case(cells, seed);
        scatter(&mut c.design, seed);
        legalize(&mut c.design).unwrap();
        let grid = c.design.gcell_grid.clone().unwrap();
        let input = gr_input_from_design(&c.design, &grid);
        let res = route_global(&input, &GrOptions::default()).unwrap();
        let map = congestion_map(&res.solution, &grid).unwrap();
        prop_assert_eq!(&map, &res.congestion);
        let raster: i64 = res.solution.nets.iter().map(|n| rasterize_edges(n, &grid).len() as i64).sum();
        prop_assert_eq!(map.total_usage(), raster);
        prop_assert_eq!(res.wirelength, raster);
        // Every pin gcell is reached by its net.
        let cells = rdf_core::translate::segments_to_gcells(&res.solution, &grid).unwrap();
        for net in &input.nets {
            let pins: BTreeSet<_> = net.pins.iter().map(|p| grid.gcell_of(rdf_core::Point::new(p.x, p.y)).unwrap()).collect();
            if pins.len() < 2 {
                continue;
            }
            let covered = &cells[&net.name];
            for xy in &pins {
                prop_assert!(covered.per_layer.values().any(|s| s.contains(xy)), "{} misses a pin", net.name);
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(6))]

    #[test]
    fn small_flows_route_without_shorts_or_opens(cells in 4usize..60, seed in 0u64..1000) {
        let dir = tempfile::tempdir().unwrap();
        let c = toy_case(cells, seed);
        let lib = c.write_library(dir.path()).unwrap();
        run_flow(&FlowConfig::default_pipeline(lib), dir.path(), &RunOptions::default()).unwrap();
        let def = std::fs::read_to_string(dir.path().join("run/final/design.def")).unwrap();
        let d = parse_def(&def, c.tech.clone()).unwrap();
        prop_assert!(check_shorts(&d).unwrap().is_empty());
        prop_assert!(check_all_connectivity(&d).unwrap().is_empty());
    }
}

#[test]
fn liberty_round_trip() {
    let lib = toy_library();
    let text = write_liberty(&lib);
    let back = parse_liberty(&text).unwrap();
    assert_eq!(write_liberty(&back), text);
    assert_eq!(back.cells, lib.cells);
}
