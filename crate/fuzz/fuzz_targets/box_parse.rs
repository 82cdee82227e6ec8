#![no_main]

use libfuzzer_sys::fuzz_target;
use sam_core::model::ParameterBox;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(b) = ParameterBox::parse(text) {
        assert!(b.lower().iter().zip(b.upper()).all(|(lo, hi)| lo < hi));
        assert_eq!(ParameterBox::parse(&b.to_string()).unwrap(), b);
        assert!(b.contains(&b.center()));
    }
});
