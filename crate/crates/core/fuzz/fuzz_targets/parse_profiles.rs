// SPDX-License-Identifier: Apache-2.0
#![no_main]

use libfuzzer_sys::fuzz_target;
use memadvisor::ingest::parse_profile_bytes;

fuzz_target!(|data: &[u8]| {
    if let Ok(set) = parse_profile_bytes(data) {
        // Anything accepted must survive a serialize/parse round trip.
        let again = parse_profile_bytes(set.to_records().as_bytes()).expect("re-parse");
        assert_eq!(set, again);
        let _ = memadvisor::classifier::classify_profile(&set);
    }
});
