use super::{GraphContext, Mode, SplitRows, Supernet, SupernetError};
use crate::numkit::{Optimizer, OptimizerKind, SeededRng, Tape};

/// Separate Adam optimizers for the weights and the architecture scores,
/// plus the global search epoch counter that keys the random streams.
pub struct SearchOptimizers {
    pub weights: Optimizer,
    pub alpha: Optimizer,
    pub epoch: usize,
}

impl SearchOptimizers {
    pub fn new(net: &Supernet) -> Self {
        let c = &net.config;
        SearchOptimizers {
            weights: Optimizer::new(OptimizerKind::Adam, c.lr_w, c.wd_w),
            alpha: Optimizer::new(OptimizerKind::Adam, c.lr_alpha, c.wd_alpha),
            epoch: 0,
        }
    }

    /// Drops optimizer state of parameters no longer in the network.
    pub fn retain(&mut self, net: &mut Supernet) {
        self.weights.retain(&net.weight_ids());
        self.alpha.retain(&net.alpha_ids());
    }
}

/// One weight step on the training loss with the scores frozen. Does not
/// advance the epoch counter.
pub fn weight_step(
    net: &mut Supernet,
    ctx: &GraphContext,
    rows: &SplitRows,
    opt: &mut SearchOptimizers,
    label: &str,
) -> Result<f64, SupernetError> {
    let seed = net.config.seed;
    let epoch = opt.epoch;
    net.zero_grad();
    let mut tape = Tape::with_rng(SeededRng::new(seed, format!("{label}/dropout")));
    let mut noise = SeededRng::new(seed, format!("{label}/gumbel"));
    let logits = net.forward(&mut tape, ctx, Mode::Gumbel, true, &mut noise)?;
    let loss = tape.cross_entropy(logits, &ctx.labels, &rows.train)?;
    let value = tape.value(loss).item();
    if !value.is_finite() {
        return Err(SupernetError::NonFiniteLoss { phase: "train", epoch });
    }
    let grads = tape.backward(loss)?;
    grads.accumulate(net.weight_params_mut());
    opt.weights.step(net.weight_params_mut())?;
    Ok(value)
}

/// One weight step on the training loss (scores frozen) followed by one
/// score step on the validation loss (weights frozen), each with fresh
/// Gumbel noise at the network's current temperature.
pub fn bilevel_epoch(
    net: &mut Supernet,
    ctx: &GraphContext,
    rows: &SplitRows,
    opt: &mut SearchOptimizers,
) -> Result<(f64, f64), SupernetError> {
    let epoch = opt.epoch;
    let seed = net.config.seed;
    let train_loss = weight_step(net, ctx, rows, opt, &format!("search/epoch={epoch}/w"))?;

    let val_loss = {
        net.zero_grad();
        let mut tape = Tape::with_rng(SeededRng::new(seed, format!("search/epoch={epoch}/alpha/dropout")));
        let mut noise = SeededRng::new(seed, format!("search/epoch={epoch}/alpha/gumbel"));
        let logits = net.forward(&mut tape, ctx, Mode::Gumbel, true, &mut noise)?;
        let loss = tape.cross_entropy(logits, &ctx.labels, &rows.val)?;
        let value = tape.value(loss).item();
        if !value.is_finite() {
            return Err(SupernetError::NonFiniteLoss {
                phase: "validation",
                epoch,
            });
        }
        let grads = tape.backward(loss)?;
        grads.accumulate(net.alpha_params_mut());
        opt.alpha.step(net.alpha_params_mut())?;
        value
    };

    opt.epoch += 1;
    Ok((train_loss, val_loss))
}
