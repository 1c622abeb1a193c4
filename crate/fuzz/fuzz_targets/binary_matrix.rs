#![no_main]

use humap::DataMatrix;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(m) = DataMatrix::decode_binary(data) {
        assert_eq!(m.values().len(), m.n_points() * m.n_dims());
        assert_eq!(DataMatrix::decode_binary(&m.encode_binary()).expect("own output decodes"), m);
    }
});
