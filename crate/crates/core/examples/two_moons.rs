//! End-to-end run on the rotated two-moons task, printed per seed.
//!
//! ```sh
//! cargo run --release -p imuda-core --example two_moons
//! ```

use imuda_core::adapt::{adapt_baseline_swd, adapt_imuda, pretrain, AdaptConfig};
use imuda_core::data::{gen_two_moons, ShiftSpec};
use imuda_core::gmm::estimate_map;
use imuda_core::metrics::evaluate;
use imuda_core::nn::{forward_encoder, ArchSpec};
use imuda_core::pseudo::generate_pseudo;
use imuda_core::rng;

fn main() -> imuda_core::Result<()> {
    let arch = ArchSpec {
        input_dim: 2,
        hidden_dims: vec![32],
        embedding_dim: 8,
        num_classes: 2,
        activation: imuda_core::nn::Activation::Relu,
    };

    println!("seed  src_acc  src_only  adapted  baseline  epochs");
    for seed in 1..=5u64 {
        let config = AdaptConfig { seed, ..Default::default() };
        let (source, target) =
            gen_two_moons(1000, 0.1, &ShiftSpec::Rotation(35.0), rng::derive(seed, "data"))?;

        let (pre, _) = pretrain(&config, &arch, &source)?;
        let src_acc = evaluate(&pre, &source)?.accuracy;
        let src_only = evaluate(&pre, &target)?.accuracy;

        let z = forward_encoder(&pre, source.x.view())?;
        let gmm = estimate_map(
            &z,
            source.labels.as_ref().unwrap(),
            2,
            config.cov_reg,
            config.diagonal_cov,
        )?;
        let pseudo = generate_pseudo(
            &gmm,
            &pre,
            config.tau,
            config.n_pseudo.unwrap_or(source.len()),
            config.max_attempt_factor,
            rng::derive(seed, "pseudo"),
        )?;

        let (adapted, report) = adapt_imuda(&pre, &source, &target, &pseudo, &config)?;
        let adapted_acc = evaluate(&adapted, &target)?.accuracy;

        let (base, _) = adapt_baseline_swd(&pre, &source, &target, &config)?;
        let base_acc = evaluate(&base, &target)?.accuracy;

        println!(
            "{seed:>4}  {src_acc:.4}   {src_only:.4}    {adapted_acc:.4}   {base_acc:.4}    {}",
            report.epochs.len()
        );
    }
    Ok(())
}
