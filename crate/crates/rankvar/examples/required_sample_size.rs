//! How many observations per item does a trustworthy top list need?
//!
//! Walks an increasing grid of per-item sample sizes n and reports the
//! smallest one at which the estimated probability of a correct top-j0
//! prefix reaches the target. Deeper prefixes need sharply more data: the
//! theory for exponential-type tails says the feasible depth only grows
//! like n^{1/4} times a log factor, so the required n grows roughly like
//! the fourth power of the depth.
//!
//! Run with: cargo run --example required_sample_size

use rankvar::rates::critical_rate_exponential;
use rankvar::{
    required_sample_size, Direction, ExperimentConfig, Mode, NoiseMode, SizeSpec, TailModel,
};

fn main() -> rankvar::Result<()> {
    let template = ExperimentConfig {
        tail: TailModel::Exponential { rate: 1.0 },
        n: 100,
        items: SizeSpec::Count(200),
        noise_sd: 3.0,
        reps: 1000,
        depths: vec![SizeSpec::Count(1)],
        mode: Mode::Prefix,
        direction: Direction::Descending,
        seed: 23,
        obs_counts: None,
        attributes: None,
        noise_mode: NoiseMode::Direct,
    };
    let grid: Vec<u64> = vec![100, 200, 400, 800, 1600, 3200, 6400, 12800, 25600];

    println!("smallest n with P(top-j0 prefix correct) >= 0.8, 200 exponential items\n");
    println!("{:>4} {:>10} {:>24}", "j0", "needed n", "rate n^(1/4) at that n");
    for depth in [1u64, 2, 3, 4, 5] {
        let search = required_sample_size(&template, depth, 0.8, &grid)?;
        match search.required {
            Some(n) => println!(
                "{:>4} {:>10} {:>24.2}",
                depth,
                n,
                critical_rate_exponential(n, 1.0)?
            ),
            None => {
                let (last_n, last_p) = *search.evaluated.last().expect("grid is nonempty");
                println!("{depth:>4} {:>10} (P = {last_p:.3} at n = {last_n}, grid exhausted)", "-");
            }
        }
    }

    println!("\nevaluations along the way for j0 = 3:");
    let search = required_sample_size(&template, 3, 0.8, &grid)?;
    for (n, estimate) in &search.evaluated {
        println!("  n = {n:>6}: P = {estimate:.3}");
    }
    Ok(())
}
