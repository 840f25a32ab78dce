use privmarket::pricing::{
    expected_excess, expected_shortfall, min_price_average, min_price_average_assembled, option_price, positive_part,
    premium, CostSchedule, MarketQuery,
};
use proptest::prelude::*;

fn q(k_star: u64, k_hat: f64, lambda: f64) -> MarketQuery {
    MarketQuery::new(k_star, k_hat, lambda).unwrap()
}

#[test]
fn vanishing_noise_limit() {
    for k_hat in [0.0, 60.0, 100.0, 140.0] {
        let mut last_premium = f64::INFINITY;
        for lambda in [1.0, 10.0, 1e3, 1e6] {
            let qq = q(100, k_hat, lambda);
            let p = premium(2.0, &qq);
            assert!(p < last_premium || p == 0.0);
            last_premium = p;
        }
        let qq = q(100, k_hat, 1e6);
        assert!((option_price(2.0, &qq) - 2.0 * positive_part(k_hat - 100.0)).abs() <= 1e-6);
        assert!(premium(2.0, &qq) <= 1e-6);
    }
}

#[test]
fn break_even_identity_on_grid() {
    let costs = [
        CostSchedule::new(10.0, 1.0, 2.0).unwrap(),
        CostSchedule::new(0.0, 0.4, 3.0).unwrap(),
        CostSchedule::new(250.0, 2.0, 2.5).unwrap(),
    ];
    for c in &costs {
        for lambda in [0.05, 0.1, 0.5, 1.0] {
            for k_hat in [0.0, 25.0, 50.0, 75.0, 100.0, 125.0, 150.0, 200.0] {
                let qq = q(100, k_hat, lambda);
                let a = min_price_average(c, &qq).unwrap();
                let b = min_price_average_assembled(c, &qq).unwrap();
                assert!((a - b).abs() <= 1e-12 * a.abs().max(b.abs()), "{c:?} λ={lambda} k̂={k_hat}: {a} vs {b}");
            }
        }
    }
}

#[test]
fn quote_invariants_hold_on_grid() {
    for lambda in [0.05, 0.1, 0.5, 1.0] {
        for k_hat in [-30.0, 0.0, 25.0, 99.9, 100.0, 100.1, 200.0] {
            let qq = q(100, k_hat, lambda);
            let price = option_price(1.0, &qq);
            let prem = premium(1.0, &qq);
            assert!(prem <= 1.0 / (2.0 * lambda) + 1e-15);
            if k_hat <= 100.0 {
                assert_eq!(prem, price);
            } else {
                assert!(prem <= price);
            }
            assert!(expected_excess(&qq) > 0.0);
            assert!(expected_excess(&qq) >= positive_part(k_hat - 100.0));
        }
    }
}

proptest! {
    #[test]
    fn option_price_shift_symmetry(d in 1e-6f64..400.0, lambda in 0.01f64..2.0, c_s in 0.0f64..10.0, k_star in 1u64..500) {
        let ks = k_star as f64;
        let above = option_price(c_s, &q(k_star, ks + d, lambda)) - c_s * d;
        let below = option_price(c_s, &q(k_star, ks - d, lambda));
        let expected = c_s * (-lambda * d).exp() / (2.0 * lambda);
        prop_assert!((above - below).abs() <= 1e-9 * (c_s * d).max(1.0));
        prop_assert!((below - expected).abs() <= 1e-12 * expected.max(1e-300));
    }

    #[test]
    fn premium_peaks_at_demand(gap in -300.0f64..300.0, lambda in 0.01f64..2.0, c_s in 0.01f64..10.0) {
        let peak = premium(c_s, &q(100, 100.0, lambda));
        prop_assert!((peak - c_s / (2.0 * lambda)).abs() <= 1e-15 * peak);
        let p = premium(c_s, &q(100, 100.0 + gap, lambda));
        prop_assert!(p <= peak);
        if gap != 0.0 && lambda * gap.abs() < 700.0 {
            prop_assert!(p < peak);
        }
    }

    #[test]
    fn premium_decreases_with_distance(a in 0.0f64..200.0, b in 0.0f64..200.0, sign in prop::bool::ANY, lambda in 0.01f64..1.0) {
        prop_assume!(a != b);
        let s = if sign { 1.0 } else { -1.0 };
        let (near, far) = if a < b { (a, b) } else { (b, a) };
        let pn = premium(1.0, &q(100, 100.0 + s * near, lambda));
        let pf = premium(1.0, &q(100, 100.0 + s * far, lambda));
        prop_assert!(pf <= pn);
        if lambda * far < 700.0 && lambda * (far - near) > 1e-12 {
            prop_assert!(pf < pn);
        }
    }

    #[test]
    fn break_even_identity(c_q in 0.0f64..500.0, c_s in 0.0f64..5.0, extra in 0.0f64..5.0,
                           k_hat in 0.0f64..400.0, lambda in 0.02f64..2.0, k_star in 1u64..300) {
        let costs = CostSchedule::new(c_q, c_s, c_s + extra).unwrap();
        let qq = q(k_star, k_hat, lambda);
        let a = min_price_average(&costs, &qq).unwrap();
        let b = min_price_average_assembled(&costs, &qq).unwrap();
        let scale = a.abs().max(b.abs()).max(1e-300);
        prop_assert!((a - b).abs() <= 1e-12 * scale || (a - b).abs() <= 1e-12 * (c_q + (c_s + extra) * (k_hat + k_star as f64)) / k_star as f64);
    }

    // Holds on [k*/2, k*]; below that the sub-zero truncation term can make
    // the threshold rise (see pricing unit tests).
    #[test]
    fn break_even_non_increasing_in_shortfall_regime(a in 50.0f64..100.0, b in 50.0f64..100.0,
                                                     lambda in 0.05f64..1.0, c_s in 0.0f64..3.0, extra in 0.01f64..3.0) {
        let costs = CostSchedule::new(10.0, c_s, c_s + extra).unwrap();
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        let t_lo = min_price_average(&costs, &q(100, lo, lambda)).unwrap();
        let t_hi = min_price_average(&costs, &q(100, hi, lambda)).unwrap();
        prop_assert!(t_hi <= t_lo + 1e-12);
    }

    #[test]
    fn shortfall_below_untruncated_counterpart(k_hat in 0.0f64..300.0, lambda in 0.02f64..2.0) {
        let qq = q(100, k_hat, lambda);
        let gap = k_hat - 100.0;
        let untruncated = positive_part(-gap) + (-lambda * gap.abs()).exp() / (2.0 * lambda);
        let s = expected_shortfall(&qq).unwrap();
        prop_assert!(s <= untruncated);
        prop_assert!(s >= -1e-12);
    }
}
