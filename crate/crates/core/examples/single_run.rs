//! One simulation with default parameters, written to a run directory.
//!
//! cargo run --release --example single_run -- [seed] [steps] [out_dir]

use std::path::PathBuf;

use cda_market::{io, run_simulation, SimConfig};

fn main() -> anyhow::Result<()> {
    let mut args = std::env::args().skip(1);
    let seed = args.next().map(|s| s.parse()).transpose()?.unwrap_or(1);
    let steps = args.next().map(|s| s.parse()).transpose()?.unwrap_or(100_000);
    let out_dir = args.next().map(PathBuf::from);

    let config = SimConfig {
        seed,
        steps,
        snapshot_steps: vec![steps / 2, steps - 1],
        ..SimConfig::default()
    };
    let out = run_simulation(&config)?;

    let last = out.records.last().expect("at least one step");
    let c = &out.counters;
    println!("seed {seed}, {steps} steps");
    println!("final price {:.4}, fundamental {:.4}", last.price, last.fundamental);
    println!("final chartist fraction {:.3}, book depth {}", last.chartist_fraction(), last.depth);
    println!(
        "trades {}, resting orders {}, no order {}, budget rejections {}, band rejections {}, expired {}",
        c.trades, c.limit_orders, c.no_order, c.budget_rejections, c.band_rejections, c.expired
    );
    println!("switches {}, blocked by floor {}", c.switches, c.floor_blocked);
    assert_eq!(out.initial_totals, out.final_totals());

    if let Some(dir) = out_dir {
        let files = io::write_run(&dir, &out)?;
        for f in files.all() {
            println!("wrote {}", f.display());
        }
    }
    Ok(())
}
