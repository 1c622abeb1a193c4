#![no_main]

use humap::persist::parse_selection;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(ids) = parse_selection(text) {
        let joined: Vec<String> = ids.iter().map(usize::to_string).collect();
        assert_eq!(parse_selection(&joined.join("\n")).expect("own output parses"), ids);
    }
});
