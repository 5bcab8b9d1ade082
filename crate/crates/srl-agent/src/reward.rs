use nalgebra::SMatrix;
use serde::{Deserialize, Serialize};
use srl_core::TrackingError;

/// Reward coefficients. All overridable from the run configuration.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default)]
pub struct RewardConfig {
    /// Weight of the per-step waypoint-distance difference.
    pub c1: f64,
    /// Weight of the waypoint-arrival bonus.
    pub c2: f64,
    /// Time-decay factor of the arrival bonus.
    pub lambda: f64,
    /// Collision penalty (added on collision steps).
    pub r_obs: f64,
    /// Motor-power penalty coefficient.
    pub c_m: f64,
    /// Auxiliary tracking-reward coefficient.
    pub c_hat: f64,
    /// The distance term is `d(t) - d(t-1)` as printed; flipping the sign
    /// rewards approaching the waypoint instead.
    pub flip_distance_sign: bool,
}

impl Default for RewardConfig {
    fn default() -> Self {
        Self {
            c1: 1.0,
            c2: 5.0,
            lambda: 0.1,
            r_obs: -10.0,
            c_m: 0.001,
            c_hat: 0.1,
            flip_distance_sign: false,
        }
    }
}

/// Per-step navigation facts feeding the reward.
#[derive(Clone, Copy, Debug, Default)]
pub struct NavEvents {
    pub d_prev: f64,
    pub d_now: f64,
    /// Waypoint reached on this step.
    pub reached: bool,
    /// Arrival time (s) used by the arrival bonus when `reached`.
    pub t_reach: f64,
    pub collided: bool,
}

/// Reward decomposition; `total` is the exact sum of the four parts.
#[derive(Clone, Copy, Debug, Default)]
pub struct RewardTerms {
    pub stability: f64,
    pub navigation: f64,
    pub energy: f64,
    pub auxiliary: f64,
    pub total: f64,
}

/// Computes the step reward:
/// a Lyapunov-difference stability term `e^T P e - e'^T P e'`, the
/// navigation term `c1 (d(t) - d(t-1)) + c2 exp(-lambda T_reach) + r_obs`
/// (bonus only on arrival steps, penalty only on collision steps), the
/// energy term `-c_m p_motor`, and a small auxiliary tracking term
/// `-(|e_v|^2 + |e_Theta|^2)` weighted by `c_hat`.
pub fn reward(
    e_t: &TrackingError,
    e_next: &TrackingError,
    p: &SMatrix<f64, 10, 10>,
    nav: &NavEvents,
    power: f64,
    cfg: &RewardConfig,
) -> RewardTerms {
    let v_now = (e_t.0.transpose() * p * e_t.0)[(0, 0)];
    let v_next = (e_next.0.transpose() * p * e_next.0)[(0, 0)];
    let stability = v_now - v_next;

    let mut r_dis = nav.d_now - nav.d_prev;
    if cfg.flip_distance_sign {
        r_dis = -r_dis;
    }
    let mut navigation = cfg.c1 * r_dis;
    if nav.reached {
        navigation += cfg.c2 * (-cfg.lambda * nav.t_reach).exp();
    }
    if nav.collided {
        navigation += cfg.r_obs;
    }

    let energy = -cfg.c_m * power;

    let ev = e_t.0.fixed_rows::<3>(4);
    let eth = e_t.0.fixed_rows::<3>(1);
    let auxiliary = -(ev.norm_squared() + eth.norm_squared());

    let total = stability + navigation + energy + cfg.c_hat * auxiliary;
    RewardTerms {
        stability,
        navigation,
        energy,
        auxiliary,
        total,
    }
}
