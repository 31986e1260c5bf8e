//! Wasserstein objectives with gradient penalty. Every loss is returned in
//! minimization form.

use rand::RngCore;
use tsgan_autograd::{grad_with_graph, Tensor, TensorError};
use tsgan_nn::{Mode, Network};

use crate::error::Result;

/// Keeps the per-sample norm differentiable when a gradient is exactly zero.
const NORM_EPS: f32 = 1e-12;

/// `u·real + (1−u)·fake`, one `u` per sample. The result is a constant.
pub fn interpolate(real: &Tensor, fake: &Tensor, u: &[f32]) -> Result<Tensor> {
    if real.shape() != fake.shape() {
        return Err(TensorError::ShapeMismatch {
            op: "interpolate",
            lhs: real.shape().to_vec(),
            rhs: fake.shape().to_vec(),
        }
        .into());
    }
    let n = real.shape().first().copied().unwrap_or(0);
    if u.len() != n {
        return Err(TensorError::InvalidArgument {
            op: "interpolate",
            msg: format!("{} mixing weights for {n} samples", u.len()),
        }
        .into());
    }
    let per = real.numel() / n.max(1);
    let data = real
        .data()
        .chunks(per.max(1))
        .zip(fake.data().chunks(per.max(1)))
        .zip(u)
        .flat_map(|((r, f), &u)| r.iter().zip(f).map(move |(&r, &f)| u * r + (1.0 - u) * f))
        .collect();
    Ok(Tensor::from_vec(real.shape(), data)?)
}

pub struct Penalty {
    /// `λ · mean((‖∇D(x̂)‖ − 1)²)`, differentiable in the critic's parameters.
    pub value: Tensor,
    /// Mean per-sample input-gradient norm.
    pub mean_grad_norm: f32,
}

pub fn gradient_penalty(critic: &mut Network, x_hat: &Tensor, lambda: f32, rng: &mut dyn RngCore) -> Result<Penalty> {
    let leaf = x_hat.detach().requires_grad();
    let scores = critic.forward(&leaf, Mode::Train(rng))?;
    let grad = grad_with_graph(&scores.sum(), &leaf)?;
    let norms = grad.l2_norm_per_sample(NORM_EPS)?;
    let mean_grad_norm = norms.data().iter().map(|&v| v as f64).sum::<f64>() / norms.numel().max(1) as f64;
    let value = norms.offset(-1.0).square().mean().scale(lambda);
    Ok(Penalty {
        value,
        mean_grad_norm: mean_grad_norm as f32,
    })
}

/// A critic objective and the quantities logged alongside it.
pub struct CriticLoss {
    pub loss: Tensor,
    /// `E[D(real)] − E[D(fake)]`.
    pub wasserstein: f32,
    pub penalty: f32,
    /// `None` when no penalty was computed (`λ = 0`).
    pub grad_norm: Option<f32>,
}

/// `−(E[D(real)] − E[D(fake)]) + λ·GP` on interpolates drawn with `u`.
/// With `λ = 0` the penalty term is skipped entirely.
pub fn critic_objective(critic: &mut Network, real: &Tensor, fake: &Tensor, u: &[f32], lambda: f32, rng: &mut dyn RngCore) -> Result<CriticLoss> {
    let fake = fake.detach();
    let real_score = critic.forward(real, Mode::Train(rng))?.mean();
    let fake_score = critic.forward(&fake, Mode::Train(rng))?.mean();
    let gap = real_score.sub(&fake_score)?;
    let wasserstein = gap.item()?;
    let mut loss = gap.neg();
    let (mut penalty, mut grad_norm) = (0.0, None);
    if lambda > 0.0 {
        let x_hat = interpolate(real, &fake, u)?;
        let gp = gradient_penalty(critic, &x_hat, lambda, rng)?;
        penalty = gp.value.item()?;
        grad_norm = Some(gp.mean_grad_norm);
        loss = loss.add(&gp.value)?;
    }
    Ok(CriticLoss {
        loss,
        wasserstein,
        penalty,
        grad_norm,
    })
}

/// Stage 1 critic: real spectrograms against `G(z)`. G runs in training mode
/// and its output is a constant for this objective.
pub fn critic_loss_stage1(d_x: &mut Network, g: &mut Network, real_specs: &Tensor, z: &Tensor, u: &[f32], lambda: f32, rng: &mut dyn RngCore) -> Result<CriticLoss> {
    let fake = g.forward(z, Mode::Train(rng))?.detach();
    critic_objective(d_x, real_specs, &fake, u, lambda, rng)
}

/// Stage 2 critic: real series against `F(G(z))`, with G in inference mode.
#[allow(clippy::too_many_arguments)]
pub fn critic_loss_stage2(
    d_y: &mut Network,
    f: &mut Network,
    g: &Network,
    real_series: &Tensor,
    z: &Tensor,
    u: &[f32],
    lambda: f32,
    rng: &mut dyn RngCore,
) -> Result<CriticLoss> {
    let conditions = g.forward_eval(z)?.detach();
    let fake = f.forward(&conditions, Mode::Train(rng))?.detach();
    critic_objective(d_y, real_series, &fake, u, lambda, rng)
}

/// `−E[D(generator(input))]`. Only the generator's parameters should be
/// passed to the backward pass.
pub fn generator_objective(critic: &mut Network, generator: &mut Network, input: &Tensor, rng: &mut dyn RngCore) -> Result<Tensor> {
    let fake = generator.forward(&input.detach(), Mode::Train(rng))?;
    Ok(critic.forward(&fake, Mode::Train(rng))?.mean().neg())
}

pub fn generator_loss_stage1(d_x: &mut Network, g: &mut Network, z: &Tensor, rng: &mut dyn RngCore) -> Result<Tensor> {
    generator_objective(d_x, g, z, rng)
}

/// Conditioning spectrograms are constants, so gradients reach F only.
pub fn generator_loss_stage2(d_y: &mut Network, f: &mut Network, spec_batch: &Tensor, rng: &mut dyn RngCore) -> Result<Tensor> {
    generator_objective(d_y, f, spec_batch, rng)
}
