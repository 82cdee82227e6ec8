#![no_main]

use libfuzzer_sys::fuzz_target;
use sam_core::sam::cache::{decode_banks, encode_banks};

fuzz_target!(|data: &[u8]| {
    if let Ok((hash, banks)) = decode_banks(data) {
        // a decoded cache re-encodes to the same bytes
        assert_eq!(encode_banks(&hash, &banks), data);
    }
});
