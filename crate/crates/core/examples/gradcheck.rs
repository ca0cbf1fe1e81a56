//! Backpropagation against central finite differences on a small MLP and a
//! small CNN.
//!
//! ```text
//! cargo run --example gradcheck
//! ```

use backdoor_lab::cli::gradcheck::random_batch;
use backdoor_lab::nn::{
    backward, compare_gradients, finite_diff_gradient, forward, Activation, Architecture, LossKind,
    ModelParams, DEFAULT_STEP,
};

fn main() -> backdoor_lab::Result<()> {
    let nets = [
        (
            "mlp",
            Architecture::mlp(
                vec![3, 8, 8],
                &[16],
                Activation::Sigmoid,
                4,
                Activation::Softmax,
            )?,
        ),
        ("cnn", Architecture::cnn(vec![3, 8, 8], 4, 16, 4)?),
    ];
    for (name, arch) in nets {
        let model = ModelParams::init(&arch, 7);
        let (x, y) = random_batch(&arch, 3, 8);
        let (_, cache) = forward(&model, &arch, &x)?;
        let analytic = backward(&model, &arch, &cache, &y, LossKind::CrossEntropy)?;
        let numeric =
            finite_diff_gradient(&model, &arch, &x, &y, LossKind::CrossEntropy, DEFAULT_STEP)?;
        println!("{name}: {} parameters", arch.num_params());
        for g in compare_gradients(&analytic, &numeric)? {
            println!(
                "  {:<16} max relative error {:.2e}",
                g.group.to_string(),
                g.max_relative_error
            );
        }
    }
    Ok(())
}
