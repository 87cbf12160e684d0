//! Builds a small network on the tape, runs backward and compares each
//! gradient against central differences.

use graph_jepa::autodiff::gradcheck::check;
use graph_jepa::autodiff::{smooth_l1, Axis, Tape, Tensor};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random(rows: usize, cols: usize, rng: &mut ChaCha8Rng) -> Tensor {
    Tensor::new(rows, cols, (0..rows * cols).map(|_| rng.gen_range(-1.0..1.0)).collect()).unwrap()
}

fn main() -> graph_jepa::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let x = random(5, 4, &mut rng);
    let target = random(5, 2, &mut rng);
    let inputs = [random(4, 6, &mut rng), random(1, 6, &mut rng), random(6, 2, &mut rng)];

    let report = check(&inputs, 1e-5, |tape: &Tape, w| {
        let x = tape.constant(x.clone());
        let t = tape.constant(target.clone());
        let h = x.matmul(&w[0])?.add(&w[1])?.layer_norm(1e-5)?.gelu()?;
        let y = h.matmul(&w[2])?;
        let attn = y.matmul(&y.transpose()?)?.softmax(Axis::Cols)?.matmul(&y)?;
        smooth_l1(&attn, &t, 1.0)
    })?;
    println!(
        "{} entries checked, max relative error {:.2e}, max absolute error {:.2e}",
        report.checked, report.max_rel_error, report.max_abs_error
    );

    let tape = Tape::new();
    let a = tape.param(inputs[0].clone());
    let frozen = a.stop_gradient();
    let loss = a.add(&frozen)?.square()?.mean_all()?;
    tape.backward(loss)?;
    // d/da mean((a + sg(a))^2) = 4a / n: the detached copy contributes no path.
    let n = inputs[0].len() as f64;
    let grad = a.grad().expect("leaf reached from loss");
    println!(
        "detached copy: grad {:.6}, expected {:.6}",
        grad.get(0, 0),
        4.0 * inputs[0].get(0, 0) / n
    );
    Ok(())
}
