//! Fuzzes the SDPA sparse reader: any byte input must either decode into a
//! block SDP or return a line-tagged error, never panic or allocate wildly.

#![no_main]

use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        let _ = momentforge::read_sdpa_sparse(text);
    }
});
