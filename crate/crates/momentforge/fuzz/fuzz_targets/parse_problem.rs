//! Fuzzes the problem-file parser: any byte input must either parse or
//! return a positioned error, never panic or hang.

#![no_main]

use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        match momentforge::parse_problem(text) {
            Ok(pd) => {
                // A successful parse must survive the print/parse round trip.
                let printed = momentforge::print_problem(&pd);
                let reparsed = momentforge::parse_problem(&printed)
                    .expect("printed problem must parse");
                assert_eq!(pd, reparsed);
            }
            Err(e) => {
                assert!(e.line >= 1);
                assert!(e.col >= 1);
            }
        }
    }
});
