//! Sample the extremes of a huge virtual sample without generating it.
//!
//! Rank analysis only ever looks at the top of the list, so simulating all p
//! attribute draws to keep the k largest is wasteful once p is in the
//! millions. The order-statistic sampler produces exactly the k most extreme
//! values of a virtual size-p sample in O(k) time by accumulating exponential
//! spacings. This example checks it against brute force at a modest p, then
//! uses it at p = 10^9 where brute force is hopeless.
//!
//! Run with: cargo run --release --example extreme_order_statistics

use rankvar::stream::substream;
use rankvar::{Side, TailModel};

fn main() -> rankvar::Result<()> {
    let model = TailModel::Pareto { alpha: 4.0 };

    // ----- sanity check against brute force at p = 100000 -----

    let p = 100_000u64;
    let k = 5usize;
    let reps = 300;
    let mut direct_mean = vec![0.0f64; k];
    let mut brute_mean = vec![0.0f64; k];
    for rep in 0..reps {
        let top =
            model.sample_extreme_order_stats(p, k, Side::Upper, &mut substream(1, &[rep]))?;
        let mut full = model.sample_iid(p as usize, &mut substream(2, &[rep]))?;
        full.sort_unstable_by(|a, b| b.partial_cmp(a).expect("finite draws"));
        for i in 0..k {
            direct_mean[i] += top[k - 1 - i] / reps as f64;
            brute_mean[i] += full[i] / reps as f64;
        }
    }
    println!("mean of the top 5 order statistics over {reps} replicates, p = {p}\n");
    println!("{:>6} {:>12} {:>12}", "rank", "direct", "brute force");
    for i in 0..k {
        println!("{:>6} {:>12.3} {:>12.3}", i + 1, direct_mean[i], brute_mean[i]);
    }

    // ----- the point of it: p far beyond what fits in memory -----

    let huge = 1_000_000_000u64;
    let top = model.sample_extreme_order_stats(huge, 3, Side::Upper, &mut substream(3, &[]))?;
    println!("\ntop 3 of a virtual sample of p = 10^9 Pareto draws (one seed):");
    for (i, v) in top.iter().rev().enumerate() {
        println!("  rank {}: {v:.1}", i + 1);
    }
    println!(
        "\nthe maximum of p Pareto(4) draws fluctuates around the scale p^(1/4), \
         about {:.0} here",
        (huge as f64).powf(0.25)
    );
    Ok(())
}
