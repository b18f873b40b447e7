#![no_main]

use libfuzzer_sys::fuzz_target;
use oake::GroupParams;
use std::sync::LazyLock;

static TOY: LazyLock<GroupParams> = LazyLock::new(GroupParams::toy);

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        let _ = oake::vectors::check_hash_vectors(&TOY, text);
        let _ = oake::vectors::check_kex_vectors(&TOY, text);
        let _ = oake::vectors::check_sig_vectors(&TOY, text);
    }
});
