//! Build a small expression on a tape, run reverse mode, and compare one
//! gradient entry with a central difference.

use wordchar_nmt::{Gradients, ParamStore, Tape, Tensor};

fn loss(tape: &mut Tape, w: wordchar_nmt::ParamId, x: &Tensor) -> Result<wordchar_nmt::Var, wordchar_nmt::TensorError> {
    let w = tape.param(w);
    let x = tape.constant(x.clone())?;
    let h = tape.matmul(w, x)?;
    let h = tape.tanh(h)?;
    tape.cross_entropy(h, 1)
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut store = ParamStore::new();
    let w = store.add("w", Tensor::randn(&[3, 4], 1, 0.5)?);
    let x = Tensor::vector(vec![0.5, -1.0, 2.0, 0.1])?;

    let mut grads = Gradients::zeros_like(&store);
    let mut tape = Tape::new(&store);
    let l = loss(&mut tape, w, &x)?;
    println!("loss = {:.6} ({} tape nodes)", tape.value(l).data()[0], tape.len());
    tape.backward(l, &mut grads)?;
    println!("dL/dw = {:?}", grads.get(w));

    let eps = 1e-5;
    let mut probe = store.clone();
    let mut eval = |delta: f64| {
        probe.get_mut(w).data_mut()[0] = store.get(w).data()[0] + delta;
        let mut t = Tape::new(&probe);
        let l = loss(&mut t, w, &x).unwrap();
        t.value(l).data()[0]
    };
    let numeric = (eval(eps) - eval(-eps)) / (2.0 * eps);
    println!("w[0,0]: analytic {:.9}, numeric {:.9}", grads.get(w)[0], numeric);
    Ok(())
}
