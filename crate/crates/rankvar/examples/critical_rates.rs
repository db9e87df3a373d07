//! Closed-form critical depth rates for the three tail regimes.
//!
//! How deep a ranking can be trusted depends on how the attribute
//! distribution decays at the ranked end. For exponential-type tails the
//! critical depth grows like n^{1/4} (log n)^{((1/alpha)-1)/2} regardless of
//! the item count; for polynomial tails like (n^{alpha/2} p)^{1/(2 alpha+1)};
//! on bounded support the size ratio p^2 / n^alpha decides whether any rank
//! is recoverable at all.
//!
//! Run with: cargo run --example critical_rates

use rankvar::rates::{
    classify_bounded_support, critical_rate_exponential, critical_rate_polynomial,
};

fn main() -> rankvar::Result<()> {
    println!("exponential-type tails: rate n^(1/4) (log n)^((1/alpha - 1)/2)\n");
    println!("{:>8} {:>10} {:>10} {:>10}", "n", "alpha=0.5", "alpha=1", "alpha=2");
    for n in [500u64, 5_000, 50_000, 500_000] {
        println!(
            "{:>8} {:>10.3} {:>10.3} {:>10.3}",
            n,
            critical_rate_exponential(n, 0.5)?,
            critical_rate_exponential(n, 1.0)?,
            critical_rate_exponential(n, 2.0)?,
        );
    }

    println!("\npolynomial tails: rate (n^(alpha/2) p)^(1/(2 alpha + 1))\n");
    println!("{:>8} {:>8} {:>10} {:>10}", "n", "p", "alpha=2", "alpha=4");
    for (n, p) in [(10_000u64, 10_000u64), (10_000, 100_000), (100_000, 100_000)] {
        println!(
            "{:>8} {:>8} {:>10.3} {:>10.3}",
            n,
            p,
            critical_rate_polynomial(n, p, 2.0)?,
            critical_rate_polynomial(n, p, 4.0)?,
        );
    }

    println!("\nbounded support, F(x) ~ x^alpha at the ranked endpoint\n");
    // A league table of 75 units ranked by an average over roughly 680
    // observations each, with a sixth-power density vanishing at the end.
    let report = classify_bounded_support(680, 75, 6.0, Some(4))?;
    println!("n = {}, p = {}, alpha = {}", report.n, report.p.unwrap(), report.alpha);
    let d = &report.diagnostics;
    println!("size ratio p^2 / n^alpha  = {:.3e}", d.size_ratio.unwrap());
    println!("depth threshold           = {:.3}", d.rank_threshold.unwrap());
    println!("degenerate regime         = {}", d.degenerate);
    for note in &report.notes {
        println!("note: {note}");
    }
    println!("\nonly a handful of the 75 ranks are individually trustworthy here");
    Ok(())
}
