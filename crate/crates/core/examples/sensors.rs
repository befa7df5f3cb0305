//! Sensor selection: the best placement of two per-state sensors on a grid,
//! a sensor probe, and a custom sensor layout with overlapping ranges.

use obsyn::enumerative::{optimum_ssp_enum, solve_general_ssp_enum, ssp_probe, EnumOptions};
use obsyn::generate::{grid, line};
use obsyn::rational::{int, Threshold};
use obsyn::tpmc::SensorMap;

fn main() {
    let g = grid(3).unwrap();
    let opts = EnumOptions::default();
    let best = optimum_ssp_enum(&g, &SensorMap::per_state(&g), 2, true, opts).unwrap();
    println!(
        "G(3), two sensors: best value {}",
        best.best.map_or("none".into(), |b| b.2.to_string())
    );
    for sensors in [["s2", "s5"], ["s1", "s2"]] {
        let (value, _, _) = ssp_probe(&g, &sensors).unwrap();
        println!("  sensors {sensors:?}: {value}");
    }

    // Each sensor covers a neighbourhood on L(7).
    let l = line(7, &int(1)).unwrap();
    let loc = SensorMap::from_pairs(
        &l,
        &[
            ("s0", vec!["west"]),
            ("s1", vec!["west"]),
            ("s2", vec!["west", "mid"]),
            ("s4", vec!["mid", "east"]),
            ("s5", vec!["east"]),
        ],
    )
    .unwrap();
    let r = solve_general_ssp_enum(&l, &loc, 2, &Threshold::at_most(int(3)), opts, false).unwrap();
    print!("{}", r.to_json(&l));
}
