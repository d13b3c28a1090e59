use ndarray::{Array, Dimension, Zip};

use super::model::{AutoencoderState, Gradients, LayerGrad};
use crate::error::{Result, ShadeError};

pub const BETA1: f64 = 0.9;
pub const BETA2: f64 = 0.999;
pub const EPSILON: f64 = 1e-8;

/// One bias-corrected Adam update of every parameter.
///
/// Gradients are checked before anything changes, so a non-finite gradient
/// leaves the state untouched; the error names the offending block, e.g.
/// `encoder.0.weight`.
pub fn adam_step(state: &mut AutoencoderState, grads: &Gradients, learning_rate: f64) -> Result<()> {
    let shapes_match = grads.encoder.len() == state.encoder.len()
        && grads.decoder.len() == state.decoder.len()
        && state.layers().zip(grads.layers()).all(|((_, l), (_, g))| {
            l.weight.dim() == g.weight.dim() && l.bias.dim() == g.bias.dim()
        });
    if !shapes_match {
        return Err(ShadeError::ShapeMismatch("gradients do not match the parameters".into()));
    }
    for (name, g) in grads.layers() {
        if !g.weight.iter().all(|v| v.is_finite()) {
            return Err(ShadeError::NonFiniteGradient { block: format!("{name}.weight") });
        }
        if !g.bias.iter().all(|v| v.is_finite()) {
            return Err(ShadeError::NonFiniteGradient { block: format!("{name}.bias") });
        }
    }

    state.step += 1;
    let t = state.step as i32;
    let c1 = 1.0 - BETA1.powi(t);
    let c2 = 1.0 - BETA2.powi(t);
    let AutoencoderState {
        encoder,
        decoder,
        first_moment,
        second_moment,
        ..
    } = state;
    let stacks = [
        (&mut *encoder, &grads.encoder, &mut first_moment.encoder, &mut second_moment.encoder),
        (&mut *decoder, &grads.decoder, &mut first_moment.decoder, &mut second_moment.decoder),
    ];
    for (layers, g, m, v) in stacks {
        for (((layer, g), m), v) in layers.iter_mut().zip(g).zip(m.iter_mut()).zip(v.iter_mut()) {
            let LayerGrad { weight: mw, bias: mb } = m;
            let LayerGrad { weight: vw, bias: vb } = v;
            update(&mut layer.weight, &g.weight, mw, vw, learning_rate, c1, c2);
            update(&mut layer.bias, &g.bias, mb, vb, learning_rate, c1, c2);
        }
    }

    for (name, layer) in state.layers() {
        if !layer.weight.iter().all(|v| v.is_finite()) {
            return Err(ShadeError::NonFiniteParameter { block: format!("{name}.weight") });
        }
        if !layer.bias.iter().all(|v| v.is_finite()) {
            return Err(ShadeError::NonFiniteParameter { block: format!("{name}.bias") });
        }
    }
    Ok(())
}

fn update<D: Dimension>(
    param: &mut Array<f64, D>,
    grad: &Array<f64, D>,
    m: &mut Array<f64, D>,
    v: &mut Array<f64, D>,
    lr: f64,
    c1: f64,
    c2: f64,
) {
    Zip::from(param).and(grad).and(m).and(v).for_each(|p, &g, m, v| {
        *m = BETA1 * *m + (1.0 - BETA1) * g;
        *v = BETA2 * *v + (1.0 - BETA2) * g * g;
        let m_hat = *m / c1;
        let v_hat = *v / c2;
        *p -= lr * m_hat / (v_hat.sqrt() + EPSILON);
    });
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::model::{Activation, Dense};
    use ndarray::{array, Array1, Array2};

    fn scalar_state(w: f64) -> AutoencoderState {
        let layer = |w: f64| Dense {
            weight: array![[w]],
            bias: Array1::zeros(1),
            activation: Activation::Linear,
        };
        AutoencoderState::from_layers(vec![layer(w)], vec![layer(1.0)])
    }

    fn scalar_grad(state: &AutoencoderState, g: f64) -> Gradients {
        let mut grads = Gradients::zeros_like(state);
        grads.encoder[0].weight[[0, 0]] = g;
        grads
    }

    #[test]
    fn zero_gradient_keeps_parameters_and_decays_moments() {
        let mut s = scalar_state(0.5);
        s.first_moment.encoder[0].weight[[0, 0]] = 1.0;
        s.second_moment.encoder[0].weight[[0, 0]] = 4.0;
        let before = s.encoder[0].weight[[0, 0]];
        let grads = Gradients::zeros_like(&s);
        adam_step(&mut s, &grads, 0.1).unwrap();
        assert_eq!(s.first_moment.encoder[0].weight[[0, 0]], 0.9);
        assert_eq!(s.second_moment.encoder[0].weight[[0, 0]], 4.0 * 0.999);
        // the carried moment still moves the weight; untouched ones stay put
        assert_ne!(s.encoder[0].weight[[0, 0]], before);
        assert_eq!(s.decoder[0].weight[[0, 0]], 1.0);
        assert_eq!(s.step(), 1);

        let mut fresh = scalar_state(0.5);
        let zeros = Gradients::zeros_like(&fresh);
        adam_step(&mut fresh, &zeros, 0.1).unwrap();
        assert_eq!(fresh.encoder[0].weight[[0, 0]], 0.5);
    }

    #[test]
    fn first_step_moves_by_learning_rate_times_sign() {
        for g in [0.3, -2.0, 1e-3] {
            let mut s = scalar_state(1.0);
            let grads = scalar_grad(&s, g);
            adam_step(&mut s, &grads, 0.01).unwrap();
            let expected = 1.0 - 0.01 * g / (g.abs() + 1e-8);
            assert!((s.encoder[0].weight[[0, 0]] - expected).abs() <= 1e-15);
        }
    }

    #[test]
    fn two_steps_follow_the_scalar_recurrence() {
        // hand trace for g = 0.5 twice, lr = 0.1
        // step 1: m = 0.05, v = 0.00025, m̂ = 0.5, v̂ = 0.25, Δ = −0.1·0.5/(0.5 + 1e-8)
        // step 2: m = 0.095, v = 0.00049975, m̂ = 0.095/0.19 = 0.5,
        //         v̂ = 0.00049975/0.001999 = 0.25, Δ identical to step 1
        let mut s = scalar_state(2.0);
        let grads = scalar_grad(&s, 0.5);
        adam_step(&mut s, &grads, 0.1).unwrap();
        adam_step(&mut s, &grads, 0.1).unwrap();
        let delta = 0.1 * 0.5 / (0.5 + 1e-8);
        assert!((s.encoder[0].weight[[0, 0]] - (2.0 - 2.0 * delta)).abs() <= 1e-14);
        assert!((s.first_moment.encoder[0].weight[[0, 0]] - 0.095).abs() <= 1e-16);
        assert!((s.second_moment.encoder[0].weight[[0, 0]] - 0.00049975).abs() <= 1e-18);
        assert_eq!(s.step(), 2);
    }

    #[test]
    fn non_finite_gradient_names_the_block() {
        let mut s = scalar_state(1.0);
        let mut grads = Gradients::zeros_like(&s);
        grads.decoder[0].bias[0] = f64::NAN;
        let before = s.clone();
        match adam_step(&mut s, &grads, 0.1) {
            Err(ShadeError::NonFiniteGradient { block }) => assert_eq!(block, "decoder.0.bias"),
            other => panic!("unexpected {other:?}"),
        }
        assert_eq!(s, before);
    }

    #[test]
    fn overflowing_parameter_is_reported() {
        let mut s = scalar_state(f64::MAX);
        let grads = scalar_grad(&s, -1.0);
        // MAX plus a step of size MAX overflows
        let res = adam_step(&mut s, &grads, f64::MAX);
        assert!(matches!(res, Err(ShadeError::NonFiniteParameter { ref block }) if block == "encoder.0.weight"));
    }

    #[test]
    fn mismatched_shapes_are_rejected() {
        let mut s = scalar_state(1.0);
        let mut grads = Gradients::zeros_like(&s);
        grads.encoder[0].weight = Array2::zeros((2, 1));
        assert!(adam_step(&mut s, &grads, 0.1).is_err());
    }
}
