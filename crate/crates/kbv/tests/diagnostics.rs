//! Soft diagnostic tables: comparisons that are only claimed for n large
//! are recorded with their crossover behavior, never asserted.

use kbv::bounds::{exact_le_bound, truncation_remainder_bound, BoundParams};
use kbv::exact::partitioned_tv;
use kbv::laws::LawSpec;
use kbv::primes::GammaSet;
use kbv::Limits;

/// Truncation-remainder bound at the canonical odd order against the exact
/// small-regime sum. The estimate is asymptotic; at desk scale the bound is
/// usually enormous, and where the order degenerates (alpha < 1) the row is
/// flagged instead of computed.
#[test]
fn soft_truncation_remainder_vs_small_sum() {
    let limits = Limits::default();
    println!("soft check: truncation remainder vs exact small-regime sum (uniform law)");
    println!("        n  k  alpha   order   s_small          as_displayed     as_derived    dominates");
    for n in [1_000u64, 10_000, 100_000, 1_000_000] {
        for k in [3usize, 5] {
            let gamma = GammaSet::first_k(n, k).unwrap();
            let law = LawSpec::uniform(n).unwrap();
            let params = BoundParams::for_gamma(&gamma, 1.0, 1.0, 1.0, 0.25).unwrap();
            let part = partitioned_tv(&law, &gamma, params.alpha(), params.beta(), &limits)
                .unwrap();
            match params.gamma_trunc() {
                None => {
                    println!(
                        "{n:>9} {k:>2} {:>6.3}  degenerate (no odd order below alpha)",
                        params.alpha()
                    );
                }
                Some(order) => {
                    let rem = truncation_remainder_bound(order, &params).unwrap();
                    let dominates = exact_le_bound(&part.s_small, rem.as_displayed);
                    println!(
                        "{n:>9} {k:>2} {:>6.3} {order:>6}  {:<16.10} {:<16.6} {:<14.6} {}",
                        params.alpha(),
                        part.s_small.to_f64(),
                        rem.as_displayed,
                        rem.as_derived,
                        if dominates { "yes" } else { "no (recorded)" }
                    );
                }
            }
        }
    }
}

/// The cardinality condition and the e^2 window-size flag across the
/// canonical window choice; informational.
#[test]
fn soft_window_condition_table() {
    println!("soft check: window conditions for the canonical beta = (ln ln n)^2 choice");
    for n in [10_000u64, 100_000, 1_000_000, 10_000_000] {
        let beta = (n as f64).ln().ln().powi(2);
        let gamma = GammaSet::from_beta(n, beta).unwrap();
        let params = BoundParams::for_gamma(&gamma, 1.0, 1.0, 1.0, 0.25).unwrap();
        println!(
            "  n={n:>9}: |window|={:>2}, tau={:.4}, cardinality_ok={}, meets_e2={}",
            gamma.len(),
            gamma.tau_f64(),
            params.cardinality_ok(),
            gamma.meets_e2_cardinality()
        );
    }
}
