use nalgebra::DVector;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use srl_core::{Action, ActionVec, PolytopeBox};

use crate::nets::{Adam, Mlp, MlpGrads, OutputKind};
use crate::{Observation, ReplayBuffer, OBS_DIM};

/// Learner hyperparameters.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default)]
pub struct AgentConfig {
    pub hidden: usize,
    pub actor_lr: f64,
    pub critic_lr: f64,
    /// Return discount (distinct from the synthesis split parameter).
    pub discount: f64,
    /// Soft-update rate of the target networks.
    pub soft_update: f64,
    pub batch: usize,
    pub buffer_capacity: usize,
    /// Exploration noise standard deviation, relative to each action
    /// bound.
    pub explore_noise: f64,
    /// Environment steps between gradient updates.
    pub update_every: usize,
    /// Minimum buffer fill before any gradient update.
    pub learn_start: usize,
    /// Critic updates per actor update.
    pub actor_delay: usize,
}

impl Default for AgentConfig {
    fn default() -> Self {
        Self {
            hidden: 64,
            actor_lr: 1e-4,
            critic_lr: 1e-3,
            discount: 0.99,
            soft_update: 0.005,
            batch: 128,
            buffer_capacity: 100_000,
            explore_noise: 0.02,
            update_every: 1,
            learn_start: 1000,
            actor_delay: 2,
        }
    }
}

/// Largest axis-aligned box inscribed in the action polytope, used to
/// scale the saturating actor output so it stays feasible by
/// construction.
pub fn action_scale_from_box(actions: &PolytopeBox) -> ActionVec {
    let d_mat = actions.mat();
    let d_vec = actions.bound();
    let m = actions.dim();
    let mut scale = ActionVec::zeros();
    for j in 0..m {
        let mut best = f64::INFINITY;
        for i in 0..d_mat.nrows() {
            let w = d_mat[(i, j)].abs();
            if w > 1e-12 {
                best = best.min(d_vec[i] / w);
            }
        }
        scale[j] = if best.is_finite() { best } else { 1.0 };
    }
    // Uniform shrink when rows couple several axes.
    let mut worst = 1.0f64;
    for i in 0..d_mat.nrows() {
        let mut row_sum = 0.0;
        for j in 0..m {
            row_sum += d_mat[(i, j)].abs() * scale[j];
        }
        if row_sum > d_vec[i] {
            worst = worst.min(d_vec[i] / row_sum);
        }
    }
    scale * worst
}

/// Statistics of one learning step.
#[derive(Clone, Copy, Debug, Default)]
pub struct UpdateStats {
    pub critic_loss: f64,
    pub actor_value: f64,
    pub critic_grad_norm: f64,
    pub actor_grad_norm: f64,
    /// False when the buffer was too small and nothing changed.
    pub updated: bool,
}

/// Deterministic-policy actor-critic with target networks.
#[derive(Clone, Debug)]
pub struct AgentNets {
    pub actor: Mlp,
    pub critic: Mlp,
    pub actor_target: Mlp,
    pub critic_target: Mlp,
    actor_opt: Adam,
    critic_opt: Adam,
    pub action_scale: ActionVec,
    pub cfg: AgentConfig,
    pub train_steps: u64,
}

impl AgentNets {
    pub fn new(cfg: AgentConfig, action_scale: ActionVec, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let scale_dv = DVector::from_row_slice(action_scale.as_slice());
        let actor = Mlp::new(
            &[OBS_DIM, cfg.hidden, cfg.hidden, 6],
            OutputKind::TanhScaled(scale_dv),
            &mut rng,
        );
        let critic = Mlp::new(
            &[OBS_DIM + 6, cfg.hidden, cfg.hidden, 1],
            OutputKind::Linear,
            &mut rng,
        );
        let actor_target = actor.clone();
        let critic_target = critic.clone();
        let actor_opt = Adam::new(&actor, cfg.actor_lr);
        let critic_opt = Adam::new(&critic, cfg.critic_lr);
        Self {
            actor,
            critic,
            actor_target,
            critic_target,
            actor_opt,
            critic_opt,
            action_scale,
            cfg,
            train_steps: 0,
        }
    }

    /// Deterministic policy output for an observation.
    pub fn policy(&self, o: &Observation) -> ActionVec {
        let (y, _) = self
            .actor
            .forward(&DVector::from_row_slice(o.to_vector().as_slice()));
        ActionVec::from_iterator(y.iter().copied())
    }

    pub fn critic_value(&self, o: &Observation, a: &ActionVec) -> f64 {
        let mut x = DVector::zeros(OBS_DIM + 6);
        for (i, v) in o.to_vector().iter().enumerate() {
            x[i] = *v;
        }
        for (i, v) in a.iter().enumerate() {
            x[OBS_DIM + i] = *v;
        }
        let (y, _) = self.critic.forward(&x);
        y[0]
    }

    /// One temporal-difference critic step and one policy ascent step on
    /// a uniformly sampled batch, then soft target updates. A buffer
    /// smaller than the batch leaves everything untouched.
    pub fn learn_step(&mut self, buffer: &mut ReplayBuffer, batch: usize) -> UpdateStats {
        if buffer.len() < batch.max(1).max(self.cfg.learn_start) {
            return UpdateStats::default();
        }
        let idxs = buffer.sample_indices(batch);

        // Critic regression toward r + discount * Q'(o', pi'(o')).
        let samples: Vec<(DVector<f64>, f64)> = idxs
            .iter()
            .map(|&i| {
                let t = *buffer.get(i);
                let o_next = DVector::from_row_slice(t.o_next.to_vector().as_slice());
                let (a_next, _) = self.actor_target.forward(&o_next);
                let x_next = stack_input(&o_next, &a_next);
                let (q_next, _) = self.critic_target.forward(&x_next);
                let y = t.r + self.cfg.discount * q_next[0];
                let o = DVector::from_row_slice(t.o.to_vector().as_slice());
                let a = DVector::from_iterator(6, t.a.iter().copied());
                (stack_input(&o, &a), y)
            })
            .collect();
        let (critic_loss, critic_grads) = critic_loss_grads(&self.critic, &samples);
        let critic_grad_norm = critic_grads.norm();
        self.critic_opt.step(&mut self.critic, &critic_grads);

        // Policy ascent on the critic value of the actor's own actions,
        // delayed relative to critic updates.
        let mut actor_value = 0.0;
        let mut actor_grad_norm = 0.0;
        if self.train_steps % self.cfg.actor_delay.max(1) as u64 == 0 {
            let obs: Vec<DVector<f64>> = idxs
                .iter()
                .map(|&i| DVector::from_row_slice(buffer.get(i).o.to_vector().as_slice()))
                .collect();
            let (value, mut actor_grads) = actor_objective_grads(&self.actor, &self.critic, &obs);
            actor_value = value;
            // Ascent: Adam minimizes, so descend the negated gradient.
            actor_grads.scale(-1.0);
            actor_grad_norm = actor_grads.norm();
            self.actor_opt.step(&mut self.actor, &actor_grads);
            self.actor_target
                .soft_update_from(&self.actor, self.cfg.soft_update);
        }
        self.critic_target
            .soft_update_from(&self.critic, self.cfg.soft_update);
        self.train_steps += 1;

        UpdateStats {
            critic_loss,
            actor_value,
            critic_grad_norm,
            actor_grad_norm,
            updated: true,
        }
    }

    pub fn params_finite(&self) -> bool {
        self.actor.params_finite()
            && self.critic.params_finite()
            && self.actor_target.params_finite()
            && self.critic_target.params_finite()
    }

    pub(crate) fn optimizers(&self) -> (&Adam, &Adam) {
        (&self.actor_opt, &self.critic_opt)
    }

    pub(crate) fn optimizers_mut(&mut self) -> (&mut Adam, &mut Adam) {
        (&mut self.actor_opt, &mut self.critic_opt)
    }
}

fn stack_input(o: &DVector<f64>, a: &DVector<f64>) -> DVector<f64> {
    let mut x = DVector::zeros(o.len() + a.len());
    for (k, v) in o.iter().enumerate() {
        x[k] = *v;
    }
    for (k, v) in a.iter().enumerate() {
        x[o.len() + k] = *v;
    }
    x
}

/// Mean squared error of the critic against fixed targets, with analytic
/// parameter gradients. `samples` pairs stacked `(obs, action)` inputs
/// with regression targets.
pub fn critic_loss_grads(critic: &Mlp, samples: &[(DVector<f64>, f64)]) -> (f64, MlpGrads) {
    let n = samples.len() as f64;
    let mut grads = MlpGrads::zeros_like(critic);
    let mut loss = 0.0;
    for (x, y) in samples {
        let (q, cache) = critic.forward(x);
        let err = q[0] - y;
        loss += err * err / n;
        critic.backward(&cache, &DVector::from_vec(vec![2.0 * err / n]), &mut grads);
    }
    (loss, grads)
}

/// Mean critic value of the actor's own actions over an observation
/// batch, with analytic gradients with respect to the actor parameters
/// (ascent direction, not negated).
pub fn actor_objective_grads(
    actor: &Mlp,
    critic: &Mlp,
    obs: &[DVector<f64>],
) -> (f64, MlpGrads) {
    let n = obs.len() as f64;
    let mut grads = MlpGrads::zeros_like(actor);
    let mut value = 0.0;
    for o in obs {
        let (a, actor_cache) = actor.forward(o);
        let x = stack_input(o, &a);
        let (q, critic_cache) = critic.forward(&x);
        value += q[0] / n;
        let mut scratch = MlpGrads::zeros_like(critic);
        let dq_dx = critic.backward(
            &critic_cache,
            &DVector::from_vec(vec![1.0 / n]),
            &mut scratch,
        );
        let dq_da = DVector::from_iterator(
            a.len(),
            (0..a.len()).map(|k| dq_dx[o.len() + k]),
        );
        actor.backward(&actor_cache, &dq_da, &mut grads);
    }
    (value, grads)
}

/// Policy output plus clipped exploration noise; the result always lies
/// in the action box. A non-finite observation yields a zero action and
/// a raised fault flag.
pub fn act(
    nets: &AgentNets,
    o: &Observation,
    explore_noise: f64,
    rng: &mut ChaCha8Rng,
) -> (Action, bool) {
    if !o.is_finite() {
        return (Action::zeroed(), true);
    }
    let mut a = nets.policy(o);
    if explore_noise > 0.0 {
        for j in 0..6 {
            let u1: f64 = rng.random::<f64>().max(1e-12);
            let u2: f64 = rng.random();
            let n = (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos();
            a[j] += explore_noise * nets.action_scale[j] * n;
            a[j] = a[j].clamp(-nets.action_scale[j], nets.action_scale[j]);
        }
    }
    (Action::from_vector(&a), false)
}

#[cfg(test)]
mod tests {
    use super::*;
    use srl_core::SpaceConfig;

    fn nets() -> AgentNets {
        let spaces = SpaceConfig::default_experiment();
        AgentNets::new(
            AgentConfig::default(),
            action_scale_from_box(spaces.actions()),
            42,
        )
    }

    fn obs(d: f64) -> Observation {
        Observation {
            d_wp: d,
            psi_wp: 0.1,
            e: srl_core::TrackingError::zeroed(),
        }
    }

    #[test]
    fn action_scale_matches_identity_action_box() {
        let spaces = SpaceConfig::default_experiment();
        let s = action_scale_from_box(spaces.actions());
        assert_eq!(s.as_slice(), &[10.0, 10.0, 10.0, 20.0, 20.0, 20.0]);
    }

    #[test]
    fn zero_initialized_actor_outputs_zero() {
        let n = nets();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let (a, fault) = act(&n, &obs(3.0), 0.0, &mut rng);
        assert!(!fault);
        assert_eq!(a, Action::zeroed());
    }

    #[test]
    fn noiseless_act_is_deterministic() {
        let n = nets();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let (a1, _) = act(&n, &obs(2.0), 0.0, &mut rng);
        let (a2, _) = act(&n, &obs(2.0), 0.0, &mut rng);
        assert_eq!(a1, a2);
    }

    #[test]
    fn non_finite_observation_faults_to_zero_action() {
        let n = nets();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let mut o = obs(1.0);
        o.d_wp = f64::NAN;
        let (a, fault) = act(&n, &o, 0.1, &mut rng);
        assert!(fault);
        assert_eq!(a, Action::zeroed());
    }

    #[test]
    fn noisy_actions_stay_in_the_action_box() {
        let spaces = SpaceConfig::default_experiment();
        let n = nets();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for k in 0..500 {
            let o = obs(k as f64 * 0.01);
            let (a, _) = act(&n, &o, 1.5, &mut rng);
            assert!(srl_core::action_in_bounds(&a, spaces.actions()).unwrap());
        }
    }

    #[test]
    fn saturated_preactivations_never_exceed_bounds() {
        let spaces = SpaceConfig::default_experiment();
        let mut n = nets();
        // Slam the output-layer bias to +-inf-ish values.
        let last = n.actor.layers.last_mut().unwrap();
        for i in 0..last.b.len() {
            last.b[i] = if i % 2 == 0 { 1e9 } else { -1e9 };
        }
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let (a, _) = act(&n, &obs(1.0), 0.0, &mut rng);
        assert!(srl_core::action_in_bounds(&a, spaces.actions()).unwrap());
        assert_eq!(a.av[0], 10.0);
        assert_eq!(a.aw[2], -20.0);
    }

    #[test]
    fn learn_step_without_enough_data_is_a_no_op() {
        let mut n = nets();
        n.cfg.learn_start = 0;
        let before = n.actor.clone();
        let mut buf = ReplayBuffer::new(100, 0);
        let stats = n.learn_step(&mut buf, 32);
        assert!(!stats.updated);
        for (a, b) in n.actor.layers.iter().zip(&before.layers) {
            assert_eq!(a.w, b.w);
        }
    }
}
