#![no_main]

use humap::DataMatrix;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(m) = DataMatrix::from_csv_bytes(data) {
        assert!(m.values().iter().all(|v| v.is_finite()));
        let again = DataMatrix::from_csv_bytes(m.to_csv().as_bytes()).expect("own output parses");
        assert_eq!(again, m);
    }
});
