mod common;

use cda_market::{run_simulation, SimConfig};
use proptest::prelude::*;

fn config(seed: u64, steps: u64, n_agents: usize, switching: bool) -> SimConfig {
    SimConfig {
        seed,
        steps,
        n_agents,
        switching,
        ..SimConfig::default()
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn holdings_are_conserved_and_never_negative(
        seed in any::<u64>(),
        n_agents in 20usize..200,
        switching in any::<bool>(),
        self_trade in any::<bool>(),
    ) {
        let cfg = SimConfig { allow_self_trade: self_trade, ..config(seed, 5_000, n_agents, switching) };
        let out = run_simulation(&cfg).unwrap();
        prop_assert_eq!(out.initial_totals, out.final_totals());
        for a in &out.agents {
            prop_assert!(a.cash >= 0 && a.shares >= 0, "{:?}", a);
            prop_assert!(a.reserved_cash >= 0 && a.reserved_cash <= a.cash, "{:?}", a);
            prop_assert!(a.reserved_shares >= 0 && a.reserved_shares <= a.shares, "{:?}", a);
        }
        prop_assert_eq!(out.trades.len() as u64, out.counters.trades);
        prop_assert_eq!(out.records.iter().filter(|r| r.traded).count(), out.trades.len());
    }

    #[test]
    fn trades_respect_the_band(seed in any::<u64>(), band in 0.01f64..0.2) {
        let cfg = SimConfig { circuit_breaker_band: band, ..config(seed, 5_000, 100, true) };
        let out = run_simulation(&cfg).unwrap();
        let bad = common::band_violations(&out);
        prop_assert!(bad.is_empty(), "{:?}", &bad[..bad.len().min(3)]);
    }

    #[test]
    fn records_are_consistent(seed in any::<u64>()) {
        let out = run_simulation(&config(seed, 3_000, 100, true)).unwrap();
        for (i, r) in out.records.iter().enumerate() {
            prop_assert_eq!(r.step, i as u64);
            prop_assert_eq!(r.n_f + r.n_plus + r.n_minus, 100);
            if let (Some(b), Some(a)) = (r.best_bid, r.best_ask) {
                prop_assert!(b < a);
            }
            prop_assert!(r.price > 0.0 && r.fundamental > 0.0);
        }
    }
}

#[test]
fn same_seed_same_run_different_seed_different_run() {
    let a = run_simulation(&config(5, 20_000, 500, true)).unwrap();
    let b = run_simulation(&config(5, 20_000, 500, true)).unwrap();
    let c = run_simulation(&config(6, 20_000, 500, true)).unwrap();
    assert_eq!(a, b);
    assert_ne!(a.records, c.records);
}
