//! Draw a Lewis-weight coreset, train on it, and report the relative loss.

use lewiscore::{coreset, data, losses, solve, weights, Result};

fn main() -> Result<()> {
    let z = data::gen_synthetic(10_000, 10, 3.0, 1);
    let lw = weights::lewis_weights(z.matrix(), &Default::default())?.weights;
    let p = weights::sampling_probabilities(&lw, 2000, true, 1.0)?;
    let c = coreset::draw_coreset(&p, 2000, 7)?;

    let f = losses::NiceHinge::logistic();
    let reg = losses::Regularizer::none();
    let cfg = solve::SolveConfig::default();
    let full = solve::minimize(&z, &f, &reg, None, &cfg, None)?;
    let tilde = solve::minimize(&z, &f, &reg, Some(&c), &cfg, None)?;
    let rel = solve::relative_loss(full.objective, &tilde.beta, &z, &f, &reg)?;
    println!("relative loss of the coreset-trained model: {rel:.2e}");
    Ok(())
}
