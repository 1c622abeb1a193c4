#![no_main]

use humap::persist::Manifest;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(m) = Manifest::decode(text) {
        assert_eq!(Manifest::decode(&m.to_json()).expect("own output decodes"), m);
    }
});
