//! How the chartist fraction P_c wanders under opinion switching, and how
//! book depth and volatility respond.
//!
//! cargo run --release --example opinion_switching -- [seed] [steps]

use cda_market::{run_simulation, SimConfig};

fn main() -> anyhow::Result<()> {
    let mut args = std::env::args().skip(1);
    let seed = args.next().map(|s| s.parse()).transpose()?.unwrap_or(3);
    let steps: u64 = args.next().map(|s| s.parse()).transpose()?.unwrap_or(200_000);
    let out = run_simulation(&SimConfig {
        seed,
        steps,
        ..SimConfig::default()
    })?;

    let window = (steps / 20).max(100) as usize;
    println!("{:>9} {:>7} {:>7} {:>7} {:>8} {:>10}", "step", "P_c", "n_plus", "n_minus", "depth", "|ret| sum");
    for chunk in out.records.chunks(window) {
        let last = chunk.last().unwrap();
        let pc = chunk.iter().map(|r| r.chartist_fraction()).sum::<f64>() / chunk.len() as f64;
        let depth = chunk.iter().map(|r| r.depth as f64).sum::<f64>() / chunk.len() as f64;
        let moves: f64 = chunk.windows(2).map(|w| (w[1].price / w[0].price).ln().abs()).sum();
        println!(
            "{:>9} {:>7.3} {:>7} {:>7} {:>8.1} {:>10.4}",
            last.step, pc, last.n_plus, last.n_minus, depth, moves
        );
    }
    let c = &out.counters;
    println!(
        "switches {}, blocked by the population floor {}, clamped probabilities {}",
        c.switches, c.floor_blocked, c.clamped_probabilities
    );
    Ok(())
}
