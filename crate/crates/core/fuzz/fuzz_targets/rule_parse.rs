#![no_main]

use hearthguard::fuzzy::{RuleBase, RuleDocument};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    let Ok(doc) = RuleDocument::from_json(text) else { return };
    // whatever parses must survive a round trip unchanged
    let again = serde_json::to_string(&doc).unwrap();
    assert_eq!(RuleDocument::from_json(&again).unwrap(), doc);
    let _ = RuleBase::from_document(doc);
});
