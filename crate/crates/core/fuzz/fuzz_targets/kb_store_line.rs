// SPDX-License-Identifier: Apache-2.0
#![no_main]

use libfuzzer_sys::fuzz_target;
use memadvisor::knowledge_base::parse_store_line;

fuzz_target!(|data: &[u8]| {
    let Ok(line) = std::str::from_utf8(data) else { return };
    if let Ok(entry) = parse_store_line(line) {
        let text = serde_json::to_string(&entry).unwrap();
        assert_eq!(parse_store_line(&text).expect("re-parse"), entry);
    }
});
