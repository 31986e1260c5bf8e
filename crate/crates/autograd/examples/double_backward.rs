//! Differentiates through a gradient: the penalty `(‖∇ₓ f‖ − 1)²` of a tiny
//! model `f(x) = tanh(w·x)` with respect to `w`, checked against central
//! differences.

use tsgan_autograd::{backward, finite_difference_oracle, grad_with_graph, relative_error, Tensor};

fn penalty(w: &Tensor, x: &Tensor) -> Tensor {
    let x = x.detach().requires_grad();
    let y = x.mul(w).unwrap().sum().tanh();
    let g = grad_with_graph(&y, &x).unwrap();
    g.square().sum().sqrt().offset(-1.0).square()
}

fn main() {
    let x = Tensor::from_vec(&[4], vec![0.3, -0.8, 0.5, 1.1]).unwrap();
    let w = Tensor::from_vec(&[4], vec![0.9, 0.4, -1.2, 0.7]).unwrap().requires_grad();

    let p = penalty(&w, &x);
    let grads = backward(&p, &[&w]).unwrap();
    let analytic = grads.get_or_zeros(&w);
    let numeric = finite_difference_oracle(|v| penalty(&v.requires_grad(), &x).item().unwrap(), &w.detach(), 1e-3);

    println!("penalty          {:.6}", p.item().unwrap());
    println!("reverse mode     {:?}", analytic.data());
    println!("central diff.    {:?}", numeric.data());
    println!("relative error   {:.2e}", relative_error(analytic.data(), numeric.data(), 1e-6));
}
