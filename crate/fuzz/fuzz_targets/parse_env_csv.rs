#![no_main]

use bandit_attack::trace::ArmId;
use bandit_attack::{LossMatrix, LossSource};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(env) = LossMatrix::parse_csv(data) else {
        return;
    };
    // Anything accepted must be a well-formed loss table.
    assert!(env.arms() >= 2);
    assert!(env.horizon() >= 1);
    for t in 1..=env.horizon().min(64) {
        for a in 0..env.arms() {
            let loss = env.loss(t, ArmId(a)).expect("in-domain lookup").get();
            assert!((0.0..=1.0).contains(&loss));
        }
    }
    assert!(env.loss(env.horizon() + 1, ArmId(0)).is_err());
    assert!(env.loss(1, ArmId(env.arms())).is_err());
});
