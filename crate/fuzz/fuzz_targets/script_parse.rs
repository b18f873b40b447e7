#![no_main]

use libfuzzer_sys::fuzz_target;
use oake::kex::{CofactorMode, SchemeConfig, SchemeId};
use oake::sessions::{run_script, Engine};
use oake::GroupParams;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    // Bound the work a hostile script can demand per execution.
    if text.len() > 2048 || text.lines().count() > 64 {
        return;
    }
    let params = GroupParams::toy();
    let cfg = SchemeConfig::new(SchemeId::SOake, CofactorMode::Explicit, &params);
    let mut engine = Engine::new(params, cfg, false, 1);
    engine.register("alice");
    engine.register("bob");
    let _ = run_script(engine, text);
});
