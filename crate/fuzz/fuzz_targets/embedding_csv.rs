#![no_main]

use humap::persist::{decode_embedding_csv, embedding_to_csv};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(e) = decode_embedding_csv(data, 0.01) {
        assert!(e.point_ids.windows(2).all(|w| w[0] < w[1]));
        let again = decode_embedding_csv(embedding_to_csv(&e).as_bytes(), 0.01).expect("own output decodes");
        assert_eq!(again, e);
    }
});
