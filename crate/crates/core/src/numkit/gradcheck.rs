use super::{NumError, Param, Tape, Var};

/// Compares reverse-mode gradients of `f` with central differences.
///
/// `f` receives a fresh tape (dropout stream seeded by `seed`) and one leaf
/// per parameter, in order, and must return a scalar. Returns the maximum
/// over all coordinates of `|analytic - numeric| / max(1, |analytic|)`.
pub fn gradient_check<F>(mut f: F, params: &mut [Param], step: f64, seed: u64) -> Result<f64, NumError>
where
    F: FnMut(&mut Tape, &[Var]) -> Result<Var, NumError>,
{
    if step <= 0.0 {
        return Err(NumError::InvalidArgument(format!("step {step} must be > 0")));
    }
    let analytic = {
        let mut tape = Tape::new(seed);
        let vars: Vec<Var> = params.iter().map(|p| tape.param(p)).collect();
        let loss = f(&mut tape, &vars)?;
        let grads = tape.backward(loss)?;
        params
            .iter()
            .map(|p| {
                grads
                    .param(p.id())
                    .cloned()
                    .unwrap_or_else(|| super::Tensor::zeros(p.value.rows(), p.value.cols()))
            })
            .collect::<Vec<_>>()
    };

    let mut eval = |params: &[Param]| -> Result<f64, NumError> {
        let mut tape = Tape::new(seed);
        let vars: Vec<Var> = params.iter().map(|p| tape.param(p)).collect();
        let loss = f(&mut tape, &vars)?;
        Ok(tape.value(loss).item())
    };

    let mut worst: f64 = 0.0;
    for pi in 0..params.len() {
        for k in 0..params[pi].value.len() {
            let orig = params[pi].value.data()[k];
            params[pi].value.data_mut()[k] = orig + step;
            let plus = eval(params)?;
            params[pi].value.data_mut()[k] = orig - step;
            let minus = eval(params)?;
            params[pi].value.data_mut()[k] = orig;
            let numeric = (plus - minus) / (2.0 * step);
            let a = analytic[pi].data()[k];
            worst = worst.max((a - numeric).abs() / a.abs().max(1.0));
        }
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numkit::{SeededRng, Tensor};

    #[test]
    fn linear_function_is_exact() {
        let c = Tensor::row_vector(&[1.5, -2.0, 0.25]);
        let mut params = vec![Param::new(Tensor::column(&[0.1, 0.2, 0.3]))];
        let err = gradient_check(
            |tape, v| {
                let cv = tape.constant(c.clone());
                tape.matmul(cv, v[0])
            },
            &mut params,
            1e-4,
            0,
        )
        .unwrap();
        assert!(err < 1e-10, "{err}");
    }

    #[test]
    fn constant_function_has_zero_error() {
        let mut params = vec![Param::new(Tensor::column(&[0.1, 0.2]))];
        let err = gradient_check(|tape, _| Ok(tape.constant(Tensor::scalar(3.0))), &mut params, 1e-4, 0)
            .unwrap();
        assert_eq!(err, 0.0);
    }

    #[test]
    fn three_layer_elu_chain() {
        let mut rng = SeededRng::new(11, "chain");
        let mut rand = |r: usize, c: usize| {
            Param::new(Tensor::from_vec(r, c, (0..r * c).map(|_| rng.uniform_range(-1.0, 1.0)).collect()).unwrap())
        };
        let mut params = vec![rand(5, 4), rand(4, 4), rand(4, 4), rand(4, 3)];
        let err = gradient_check(
            |tape, v| {
                let mut h = v[0];
                for &w in &v[1..] {
                    let z = tape.matmul(h, w)?;
                    h = tape.elu(z)?;
                }
                tape.sum(h)
            },
            &mut params,
            1e-4,
            0,
        )
        .unwrap();
        assert!(err < 1e-5, "{err}");
    }

    #[test]
    fn rejects_non_positive_step() {
        let mut params = vec![Param::new(Tensor::scalar(1.0))];
        assert!(gradient_check(|t, v| t.sum(v[0]), &mut params, 0.0, 0).is_err());
    }
}
