//! Driving the limit order book directly: resting orders, crossing at the
//! resting price, time priority, self-trade prevention and expiry.

use cda_market::book::{OrderBook, SubmitOutcome};
use cda_market::expectations::{OrderIntent, Side, TickGrid};

fn main() {
    let grid = TickGrid::new(0.0005);
    let px = |p: f64| grid.nearest_ticks(p);
    let show = |ticks: Option<i64>| ticks.map_or("-".to_string(), |t| format!("{:.4}", grid.price(t)));
    let order = |agent, side, price, horizon| OrderIntent {
        agent,
        side,
        price: px(price),
        horizon,
    };
    let mut book = OrderBook::new();

    let flow = [
        (0, order(1, Side::Buy, 99.90, 10)),
        (0, order(2, Side::Buy, 99.95, 10)),
        (1, order(3, Side::Sell, 100.05, 10)),
        (1, order(4, Side::Sell, 100.05, 3)),
        (2, order(5, Side::Sell, 100.10, 10)),
        (3, order(6, Side::Buy, 100.20, 10)),
        (4, order(4, Side::Buy, 100.05, 10)),
        (5, order(7, Side::Sell, 99.00, 10)),
    ];
    for (t, intent) in flow {
        for gone in book.expire(t) {
            println!("t={t}: order {} of agent {} expired", gone.id, gone.agent);
        }
        match book.submit(&intent, t) {
            SubmitOutcome::Rested(o) => println!("t={t}: agent {} rests {:?} at {}", o.agent, o.side, show(Some(o.price))),
            SubmitOutcome::Traded(tr) => println!(
                "t={t}: trade at {} (buyer {}, seller {}, aggressor {:?})",
                show(Some(tr.price)),
                tr.buyer,
                tr.seller,
                tr.aggressor
            ),
            SubmitOutcome::SelfTradeCancelled => println!("t={t}: agent {} would only cross itself; cancelled", intent.agent),
        }
        let s = book.stats();
        println!(
            "      bid {} ask {} spread {} depth {}",
            show(s.best_bid),
            show(s.best_ask),
            show(s.spread),
            s.depth
        );
    }

    for gone in book.expire(20) {
        println!("t=20: order {} of agent {} expired", gone.id, gone.agent);
    }
    println!("book empty: {}", book.is_empty());
}
