// SPDX-License-Identifier: Apache-2.0

//! Byte/megabyte conversions used at the human-facing boundary.
//!
//! Everything inside the library is integer bytes. One MB is 2^20 bytes.

/// Bytes per megabyte (binary).
pub const MIB: u64 = 1 << 20;

/// Converts whole megabytes to bytes, `None` on overflow.
pub fn mb_to_bytes(mb: u64) -> Option<u64> {
    mb.checked_mul(MIB)
}

/// Rounds a byte count up to whole megabytes.
pub fn bytes_to_mb_ceil(bytes: u64) -> u64 {
    bytes.div_ceil(MIB)
}

/// Lossy conversion for display.
pub fn bytes_to_mb_f64(bytes: u64) -> f64 {
    bytes as f64 / MIB as f64
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ceil_never_rounds_down() {
        assert_eq!(bytes_to_mb_ceil(0), 0);
        assert_eq!(bytes_to_mb_ceil(1), 1);
        assert_eq!(bytes_to_mb_ceil(MIB), 1);
        assert_eq!(bytes_to_mb_ceil(MIB + 1), 2);
    }

    #[test]
    fn mb_overflow_is_detected() {
        assert_eq!(mb_to_bytes(3), Some(3 * MIB));
        assert_eq!(mb_to_bytes(u64::MAX), None);
    }
}
