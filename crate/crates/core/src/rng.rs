//! 64-bit linear congruential generator used for scenario placement.

const MULTIPLIER: u64 = 6364136223846793005;
const INCREMENT: u64 = 1442695040888963407;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct RngState {
    pub s: u64,
}

impl RngState {
    pub const fn new(seed: u64) -> Self {
        RngState { s: seed }
    }

    /// Advances the state and returns the new state value.
    pub fn next_u64(&mut self) -> u64 {
        self.s = self.s.wrapping_mul(MULTIPLIER).wrapping_add(INCREMENT);
        self.s
    }

    /// Next output reduced into `lo..hi` by modulo. `hi` must exceed `lo`.
    pub fn next_in(&mut self, lo: u64, hi: u64) -> u64 {
        debug_assert!(hi > lo);
        lo + self.next_u64() % (hi - lo)
    }
}
