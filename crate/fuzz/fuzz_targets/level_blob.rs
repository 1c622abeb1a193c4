#![no_main]

use humap::persist::{decode_level, encode_level};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(level) = decode_level(data) {
        let bytes = encode_level(&level);
        assert_eq!(decode_level(&bytes).expect("own output decodes"), level);
    }
});
