//! Property tests: the policy output stays inside the action box for
//! adversarial observations, with or without exploration noise.

use nalgebra::SVector;
use proptest::prelude::*;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use srl_agent::{act, action_scale_from_box, AgentConfig, AgentNets, Observation};
use srl_core::{action_in_bounds, SpaceConfig, TrackingError};

fn nets_with_wild_weights(seed: u64) -> AgentNets {
    let spaces = SpaceConfig::default_experiment();
    let mut nets = AgentNets::new(
        AgentConfig::default(),
        action_scale_from_box(spaces.actions()),
        seed,
    );
    let mut k = 0.0f64;
    for l in &mut nets.actor.layers {
        for x in l.w.iter_mut() {
            k += 1.0;
            *x += (k * 0.618).sin() * 5.0;
        }
    }
    nets
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn act_output_always_in_action_box(
        d in -1e6f64..1e6,
        psi in -10.0f64..10.0,
        e in prop::array::uniform10(-1e3f64..1e3),
        noise in 0.0f64..2.0,
        seed in 0u64..u64::MAX,
    ) {
        let spaces = SpaceConfig::default_experiment();
        let nets = nets_with_wild_weights(1);
        let o = Observation {
            d_wp: d,
            psi_wp: psi,
            e: TrackingError(SVector::from(e)),
        };
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (a, fault) = act(&nets, &o, noise, &mut rng);
        prop_assert!(!fault);
        prop_assert!(action_in_bounds(&a, spaces.actions()).unwrap());
    }
}
