#![no_main]

use libfuzzer_sys::fuzz_target;
use oake::GroupParams;
use std::sync::LazyLock;

static TOY: LazyLock<GroupParams> = LazyLock::new(GroupParams::toy);
static FAIR64: LazyLock<GroupParams> = LazyLock::new(GroupParams::fair64);

fuzz_target!(|data: &[u8]| {
    let _ = oake::wire::decode(&TOY, data);
    let _ = oake::wire::decode(&FAIR64, data);
});
