#![no_main]

use hearthguard::habitat::load_suite;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        let _ = load_suite(text);
    }
});
