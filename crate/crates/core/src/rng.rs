//! Documented 64-bit linear congruential generator.
//!
//! Random initialization must be reproducible across languages, so instead
//! of an opaque RNG the crate pins the exact recurrence
//!
//! ```text
//! state ← state · 6364136223846793005 + 1442695040888963407   (mod 2⁶⁴)
//! ```
//!
//! (Knuth's MMIX multiplier and increment). Uniform draws take the top 53
//! bits of the updated state, so any implementation of this recurrence
//! reproduces every field in this crate bit for bit.

/// 64-bit linear congruential generator with a fixed, documented recurrence.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Lcg64 {
    state: u64,
}

impl Lcg64 {
    /// MMIX multiplier.
    pub const MULTIPLIER: u64 = 6364136223846793005;
    /// MMIX increment.
    pub const INCREMENT: u64 = 1442695040888963407;
    /// Default seed used by the command-line tools.
    pub const DEFAULT_SEED: u64 = 42;

    /// Creates a generator whose state is exactly `seed`.
    pub fn new(seed: u64) -> Self {
        Lcg64 { state: seed }
    }

    /// Advances the recurrence once and returns the new state.
    pub fn next_u64(&mut self) -> u64 {
        self.state = self
            .state
            .wrapping_mul(Self::MULTIPLIER)
            .wrapping_add(Self::INCREMENT);
        self.state
    }

    /// Uniform draw in `[0, 1)` from the top 53 bits of the next state.
    pub fn next_unit(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 / (1u64 << 53) as f64
    }

    /// Uniform draw in `[0.5, 1.5)`: strictly positive, mean 1, suitable for
    /// initializing distribution fields away from zero.
    pub fn next_positive(&mut self) -> f64 {
        0.5 + self.next_unit()
    }
}
