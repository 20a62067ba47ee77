//! Training: backprop through the recurrent Q-network, Adam, and the
//! TD(0) batch update with a periodically-synced target net.
//!
//! The gradient code is hand-derived; `gradient_check` verifies every
//! parameter coordinate against central finite differences and is reused by
//! the numerical test suite.

use rand::Rng;
use thiserror::Error;

use crate::scalar::{s, Scalar};

use super::feature::StateWindow;
use super::net::{ForwardCache, QNet, N_ACTIONS};
use super::obs::Experience;

/// Learning hyperparameters. Defaults match the reference configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct Hyperparams {
    pub gamma: f64,
    pub lr: f64,
    pub batch: usize,
    /// Train every T TTIs.
    pub train_interval: u64,
    /// Sync target + publish params every U TTIs.
    pub update_interval: u64,
    pub eps_start: f64,
    pub eps_end: f64,
    pub eps_decay_ttis: u64,
    /// Window history length l (windows hold l+1 frames).
    pub history_len: usize,
    pub hidden: usize,
    pub buffer_capacity: usize,
    /// Rewards are divided by this before entering the replay buffer, so
    /// Q-values live near the unit scale the optimizer can actually reach
    /// within a run's training budget. 1 = raw rewards.
    pub reward_scale: f64,
}

impl Default for Hyperparams {
    fn default() -> Self {
        Hyperparams {
            gamma: 0.9,
            lr: 0.001,
            batch: 64,
            train_interval: 50,
            update_interval: 500,
            eps_start: 1.0,
            eps_end: 0.01,
            eps_decay_ttis: 10_000,
            history_len: 20,
            hidden: 64,
            buffer_capacity: 4096,
            reward_scale: 1.0,
        }
    }
}

impl Hyperparams {
    pub fn validate(&self) -> Result<(), String> {
        if !(0.0..=1.0).contains(&self.gamma) {
            return Err(format!("gamma must be in [0,1], got {}", self.gamma));
        }
        if !(self.lr > 0.0) {
            return Err(format!("lr must be positive, got {}", self.lr));
        }
        if self.batch == 0 || self.batch > self.buffer_capacity {
            return Err(format!(
                "batch must be in 1..=buffer_capacity ({}), got {}",
                self.buffer_capacity, self.batch
            ));
        }
        if self.train_interval == 0 || self.update_interval == 0 {
            return Err("train/update intervals must be positive".into());
        }
        for (name, e) in [("eps_start", self.eps_start), ("eps_end", self.eps_end)] {
            if !(0.0..=1.0).contains(&e) {
                return Err(format!("{name} must be in [0,1], got {e}"));
            }
        }
        if self.eps_decay_ttis == 0 {
            return Err("eps_decay_ttis must be positive".into());
        }
        if self.history_len == 0 || self.hidden == 0 {
            return Err("history_len and hidden must be positive".into());
        }
        if !(self.reward_scale > 0.0 && self.reward_scale.is_finite()) {
            return Err(format!(
                "reward_scale must be positive and finite, got {}",
                self.reward_scale
            ));
        }
        Ok(())
    }

    /// Linear exploration decay from eps_start to eps_end over eps_decay_ttis.
    pub fn epsilon(&self, t: u64) -> f64 {
        let frac = (t as f64 / self.eps_decay_ttis as f64).min(1.0);
        self.eps_start + (self.eps_end - self.eps_start) * frac
    }
}

#[derive(Debug, Error)]
pub enum TrainError {
    /// The batch loss went NaN/inf; the step is rejected before touching
    /// the parameters so the live policy stays usable.
    #[error("non-finite training loss: {loss}")]
    NonFiniteLoss { loss: f64 },
}

/// Adam with bias correction. `m`/`v` are flat over the parameter order of
/// [`QNet::param_slices_mut`].
#[derive(Debug, Clone)]
pub struct Adam<S> {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub t: u64,
    m: Vec<S>,
    v: Vec<S>,
}

impl<S: Scalar> Adam<S> {
    pub fn new(param_count: usize, lr: f64) -> Self {
        Adam {
            lr,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            t: 0,
            m: vec![S::zero(); param_count],
            v: vec![S::zero(); param_count],
        }
    }

    pub fn step(&mut self, params: &mut QNet<S>, grads: &QNet<S>) {
        self.t += 1;
        let b1: S = s(self.beta1);
        let b2: S = s(self.beta2);
        let one = S::one();
        // Correction factors computed in f64: beta^t underflows gracefully.
        let c1: S = s(1.0 - self.beta1.powi(self.t as i32));
        let c2: S = s(1.0 - self.beta2.powi(self.t as i32));
        let lr: S = s(self.lr);
        let eps: S = s(self.eps);
        let mut k = 0;
        let grad_views = grads.layer_views();
        for (p_slice, (_, _, _, g_slice)) in
            params.param_slices_mut().into_iter().zip(grad_views)
        {
            for (p, &g) in p_slice.iter_mut().zip(g_slice.iter()) {
                self.m[k] = b1 * self.m[k] + (one - b1) * g;
                self.v[k] = b2 * self.v[k] + (one - b2) * g * g;
                let m_hat = self.m[k] / c1;
                let v_hat = self.v[k] / c2;
                *p -= lr * m_hat / (v_hat.sqrt() + eps);
                k += 1;
            }
        }
        debug_assert_eq!(k, self.m.len());
    }
}

/// Accumulate dL/dparams into `grads` for one forward pass, given the
/// gradient `dq` at the head output.
pub fn backward<S: Scalar>(
    net: &QNet<S>,
    cache: &ForwardCache<S>,
    dq: &[S],
    grads: &mut QNet<S>,
) {
    let h = net.hidden;
    let one = S::one();

    // Head (linear).
    grads.head_w.outer_add(dq, &cache.f2);
    for i in 0..N_ACTIONS {
        grads.head_b[i] += dq[i];
    }
    let mut df2 = vec![S::zero(); h];
    net.head_w.matvec_t_add(dq, &mut df2);

    // FC2 ReLU. Post-activations are zero exactly where the pre-activation
    // was clipped, so they double as the derivative mask.
    for i in 0..h {
        if cache.f2[i] == S::zero() {
            df2[i] = S::zero();
        }
    }
    grads.fc2_w.outer_add(&df2, &cache.f1);
    for i in 0..h {
        grads.fc2_b[i] += df2[i];
    }
    let mut df1 = vec![S::zero(); h];
    net.fc2_w.matvec_t_add(&df2, &mut df1);

    // FC1 ReLU.
    for i in 0..h {
        if cache.f1[i] == S::zero() {
            df1[i] = S::zero();
        }
    }
    grads.fc1_w.outer_add(&df1, &cache.h_last);
    for i in 0..h {
        grads.fc1_b[i] += df1[i];
    }
    let mut dh = vec![S::zero(); h];
    net.fc1_w.matvec_t_add(&df1, &mut dh);

    // GRU steps, newest to oldest.
    let mut dan = vec![S::zero(); h];
    let mut daz = vec![S::zero(); h];
    let mut dar = vec![S::zero(); h];
    let mut drh = vec![S::zero(); h];
    for step in (0..cache.xs.len()).rev() {
        let x = &cache.xs[step];
        let h_prev = &cache.h_prev[step];
        let z = &cache.zs[step];
        let r = &cache.rs[step];
        let n = &cache.ns[step];
        let rh = &cache.rhs[step];

        let mut dh_prev = vec![S::zero(); h];
        for i in 0..h {
            // h' = (1-z) h_prev + z n
            let dz = dh[i] * (n[i] - h_prev[i]);
            let dn = dh[i] * z[i];
            dh_prev[i] = dh[i] * (one - z[i]);
            dan[i] = dn * (one - n[i] * n[i]);
            daz[i] = dz * z[i] * (one - z[i]);
        }

        grads.gru.w_n.outer_add(&dan, x);
        grads.gru.u_n.outer_add(&dan, rh);
        for i in 0..h {
            grads.gru.b_n[i] += dan[i];
            drh[i] = S::zero();
        }
        net.gru.u_n.matvec_t_add(&dan, &mut drh);
        for i in 0..h {
            let dr = drh[i] * h_prev[i];
            dh_prev[i] += drh[i] * r[i];
            dar[i] = dr * r[i] * (one - r[i]);
        }

        grads.gru.w_z.outer_add(&daz, x);
        grads.gru.u_z.outer_add(&daz, h_prev);
        grads.gru.w_r.outer_add(&dar, x);
        grads.gru.u_r.outer_add(&dar, h_prev);
        for i in 0..h {
            grads.gru.b_z[i] += daz[i];
            grads.gru.b_r[i] += dar[i];
        }
        net.gru.u_z.matvec_t_add(&daz, &mut dh_prev);
        net.gru.u_r.matvec_t_add(&dar, &mut dh_prev);

        dh = dh_prev;
    }
}

/// One TD(0) batch step. Computes y = r + gamma * max_a' Q_target(s', a'),
/// backprops the mean squared error on the taken actions, and applies Adam.
/// A non-finite loss rejects the step before any parameter is touched.
pub fn train_step<S: Scalar>(
    main: &mut QNet<S>,
    target: &QNet<S>,
    batch: &[&Experience],
    gamma: f64,
    adam: &mut Adam<S>,
) -> Result<f64, TrainError> {
    assert!(!batch.is_empty(), "train_step needs a non-empty batch");
    let n = batch.len();
    let inv_n: S = s(1.0 / n as f64);
    let two = s::<S>(2.0);
    let g: S = s(gamma);
    let mut grads = QNet::zeros(main.hidden);
    let mut loss = 0.0f64;
    let mut dq = vec![S::zero(); N_ACTIONS];
    for exp in batch {
        let q_next = target.forward(&exp.s_next);
        let max_next = q_next
            .iter()
            .copied()
            .fold(q_next[0], |a, b| if b > a { b } else { a });
        let y = s::<S>(exp.r as f64) + g * max_next;
        let (q, cache) = main.forward_cached(&exp.s);
        let a = exp.a.index();
        let err = q[a] - y;
        loss += err.to_f64() * err.to_f64();
        for v in dq.iter_mut() {
            *v = S::zero();
        }
        dq[a] = two * err * inv_n;
        backward(main, &cache, &dq, &mut grads);
    }
    loss /= n as f64;
    if !loss.is_finite() {
        return Err(TrainError::NonFiniteLoss { loss });
    }
    adam.step(main, &grads);
    Ok(loss)
}

/// Copy the online parameters into the target net.
pub fn sync<S: Scalar>(target: &mut QNet<S>, main: &QNet<S>) {
    target.clone_from(main);
}

/// Epsilon-greedy action selection. The exploration branch draws uniformly
/// and skips the forward pass entirely (that is what makes exploration
/// essentially free at the radio timescale). Greedy ties break low.
pub fn select_action<S: Scalar, R: Rng>(
    net: &QNet<S>,
    window: &StateWindow,
    epsilon: f64,
    rng: &mut R,
) -> (usize, bool) {
    if rng.gen::<f64>() < epsilon {
        return (rng.gen_range(0..N_ACTIONS), true);
    }
    let q = net.forward(window);
    let mut best = 0;
    for a in 1..N_ACTIONS {
        if q[a] > q[best] {
            best = a;
        }
    }
    (best, false)
}

/// Result of a full-coordinate finite-difference check.
#[derive(Debug, Clone, Copy)]
pub struct GradCheckReport {
    pub params_checked: usize,
    pub max_rel_err: f64,
}

/// Smallest |pre-activation| across both FC ReLU layers for this input.
fn relu_margin(net: &QNet<f64>, window: &StateWindow) -> f64 {
    let (_, cache) = net.forward_cached(window);
    let h = net.hidden;
    let mut min_margin = f64::INFINITY;
    let mut pre = vec![0.0; h];
    net.fc1_w.matvec_into(&cache.h_last, &mut pre);
    for i in 0..h {
        min_margin = min_margin.min((pre[i] + net.fc1_b[i]).abs());
    }
    net.fc2_w.matvec_into(&cache.f1, &mut pre);
    for i in 0..h {
        min_margin = min_margin.min((pre[i] + net.fc2_b[i]).abs());
    }
    min_margin
}

/// Verify the analytic gradient of L = (Q(s)[a] - y)^2 against central
/// finite differences on every parameter coordinate, in f64.
///
/// Finite differences are invalid across a ReLU kink, so instances whose
/// FC pre-activations sit within 1e-3 of zero are re-drawn (the +/-1e-5
/// parameter perturbations move them by far less).
pub fn gradient_check(hidden: usize, history_len: usize, seed: u64) -> GradCheckReport {
    use super::feature::FeatureFrame;
    use rand::SeedableRng;
    let (net, window, action, y) = 'draw: {
        for attempt in 0..100u64 {
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(
                seed.wrapping_add(attempt.wrapping_mul(0x9e37_79b9_7f4a_7c15)),
            );
            let net: QNet<f64> = QNet::init(hidden, rng.gen());
            let frames: Vec<FeatureFrame> = (0..=history_len)
                .map(|_| FeatureFrame {
                    c: rng.gen_range(-1.0f32..1.0),
                    ack: rng.gen_range(0.0f32..1.0),
                    m: rng.gen_range(-1.0f32..1.0),
                    delta: rng.gen_range(-1.0f32..1.0),
                })
                .collect();
            let window = StateWindow::from_frames_newest_first(frames);
            let action = rng.gen_range(0..N_ACTIONS);
            let y: f64 = rng.gen_range(-1.0..1.0);
            if relu_margin(&net, &window) > 1e-3 {
                break 'draw (net, window, action, y);
            }
        }
        panic!("no kink-free gradient-check instance found for seed {seed}");
    };

    let loss_of = |net: &QNet<f64>| {
        let q = net.forward(&window);
        let e = q[action] - y;
        e * e
    };

    // Analytic gradient.
    let (q, cache) = net.forward_cached(&window);
    let mut dq = vec![0.0; N_ACTIONS];
    dq[action] = 2.0 * (q[action] - y);
    let mut grads = QNet::zeros(hidden);
    backward(&net, &cache, &dq, &mut grads);

    // Finite differences over every coordinate.
    let h_step = 1e-5;
    let n_layers = net.layer_views().len();
    let mut work = net.clone();
    let mut max_rel = 0.0f64;
    let mut checked = 0;
    for layer in 0..n_layers {
        let len = net.layer_views()[layer].3.len();
        for idx in 0..len {
            let orig = net.layer_views()[layer].3[idx];
            work.param_slices_mut()[layer][idx] = orig + h_step;
            let lp = loss_of(&work);
            work.param_slices_mut()[layer][idx] = orig - h_step;
            let lm = loss_of(&work);
            work.param_slices_mut()[layer][idx] = orig;
            let fd = (lp - lm) / (2.0 * h_step);
            let an = grads.layer_views()[layer].3[idx];
            // The 1e-3 denominator floor keeps coordinates whose true
            // gradient is at the finite-difference noise level (~1e-9
            // absolute) from reporting phantom relative error; genuine
            // backward bugs disagree by far more than that in absolute
            // terms and still flag.
            let rel = (fd - an).abs() / fd.abs().max(an.abs()).max(1e-3);
            if rel > max_rel {
                max_rel = rel;
            }
            checked += 1;
        }
    }
    GradCheckReport {
        params_checked: checked,
        max_rel_err: max_rel,
    }
}
