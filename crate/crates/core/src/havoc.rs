//! Havoc-style secret generation driven by splitmix64.
//!
//! Round 0 is the base secret. Every later round starts again from the base
//! and applies a stack of random length-preserving mutations. Each round
//! seeds its own generator from `splitmix64(seed ^ round)`, so rounds can be
//! produced in any order or in parallel.

use serde::{Deserialize, Serialize};
use thiserror::Error;

const GOLDEN_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

/// Largest delta applied by the arithmetic mutator.
pub const ARITH_MAX: u64 = 35;

pub const INTERESTING_BYTES: [u8; 5] = [0x00, 0x01, 0x7F, 0x80, 0xFF];

pub const MAX_MUTATIONS: u32 = 16;

/// splitmix64 output for the state `x` (one step from `x`).
pub fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(GOLDEN_GAMMA);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PrngState {
    state: u64,
}

impl PrngState {
    pub fn new(seed: u64) -> Self {
        PrngState { state: seed }
    }

    /// Generator for one round: seeded with `splitmix64(seed ^ round)`.
    pub fn for_round(seed: u64, round: u64) -> Self {
        PrngState::new(splitmix64(seed ^ round))
    }

    pub fn next_u64(&mut self) -> u64 {
        let out = splitmix64(self.state);
        self.state = self.state.wrapping_add(GOLDEN_GAMMA);
        out
    }

    /// Value in `0..n` by reduction modulo `n`.
    pub fn below(&mut self, n: u64) -> u64 {
        debug_assert!(n > 0);
        self.next_u64() % n
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum FuzzConfigError {
    #[error("at least two rounds are required, got {0}")]
    TooFewRounds(u64),
    #[error("secret length must be positive")]
    EmptySecret,
    #[error("base secret is {got} bytes, expected {expected}")]
    BaseLength { expected: usize, got: usize },
    #[error("mutation range {min}..={max} must lie within 1..=16")]
    MutationRange { min: u32, max: u32 },
}

/// How to draw the sampled secrets.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FuzzConfig {
    pub seed: u64,
    pub rounds: u64,
    pub base_secret: Vec<u8>,
    /// Inclusive bounds on the number of stacked mutations per round.
    pub min_mutations: u32,
    pub max_mutations: u32,
}

impl FuzzConfig {
    pub fn new(seed: u64, rounds: u64, base_secret: Vec<u8>) -> Result<Self, FuzzConfigError> {
        let cfg = FuzzConfig { seed, rounds, base_secret, min_mutations: 1, max_mutations: MAX_MUTATIONS };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn secret_length(&self) -> usize {
        self.base_secret.len()
    }

    pub fn with_mutation_range(mut self, min: u32, max: u32) -> Result<Self, FuzzConfigError> {
        self.min_mutations = min;
        self.max_mutations = max;
        self.validate()?;
        Ok(self)
    }

    /// Test hook: every round reproduces the base secret.
    #[doc(hidden)]
    pub fn without_mutations(mut self) -> Self {
        self.min_mutations = 0;
        self.max_mutations = 0;
        self
    }

    pub fn validate(&self) -> Result<(), FuzzConfigError> {
        if self.rounds < 2 {
            return Err(FuzzConfigError::TooFewRounds(self.rounds));
        }
        if self.base_secret.is_empty() {
            return Err(FuzzConfigError::EmptySecret);
        }
        let identity_hook = self.min_mutations == 0 && self.max_mutations == 0;
        if !identity_hook
            && !(1 <= self.min_mutations && self.min_mutations <= self.max_mutations && self.max_mutations <= MAX_MUTATIONS)
        {
            return Err(FuzzConfigError::MutationRange { min: self.min_mutations, max: self.max_mutations });
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Mutation {
    FlipBit,
    RandomByte,
    Arith,
    SwapBytes,
    CopyBlock,
    Interesting,
}

impl Mutation {
    pub const ALL: [Mutation; 6] = [
        Mutation::FlipBit,
        Mutation::RandomByte,
        Mutation::Arith,
        Mutation::SwapBytes,
        Mutation::CopyBlock,
        Mutation::Interesting,
    ];
}

/// Applies one mutation in place. Length is preserved.
pub fn apply_mutation(buf: &mut [u8], mutation: Mutation, rng: &mut PrngState) {
    let len = buf.len() as u64;
    if len == 0 {
        return;
    }
    match mutation {
        Mutation::FlipBit => {
            let bit = rng.below(len * 8);
            buf[(bit / 8) as usize] ^= 1 << (bit % 8);
        }
        Mutation::RandomByte => {
            let at = rng.below(len) as usize;
            buf[at] = rng.next_u64() as u8;
        }
        Mutation::Arith => {
            let at = rng.below(len) as usize;
            let delta = (1 + rng.below(ARITH_MAX)) as u8;
            buf[at] = if rng.next_u64() & 1 == 0 { buf[at].wrapping_add(delta) } else { buf[at].wrapping_sub(delta) };
        }
        Mutation::SwapBytes => {
            let a = rng.below(len) as usize;
            let b = rng.below(len) as usize;
            buf.swap(a, b);
        }
        Mutation::CopyBlock => {
            let max_block = (len / 4).max(1);
            let block = 1 + rng.below(max_block);
            let src = rng.below(len - block + 1) as usize;
            let dst = rng.below(len - block + 1) as usize;
            buf.copy_within(src..src + block as usize, dst);
        }
        Mutation::Interesting => {
            let at = rng.below(len) as usize;
            buf[at] = INTERESTING_BYTES[rng.below(INTERESTING_BYTES.len() as u64) as usize];
        }
    }
}

/// The secret for `round`. Panics if `round >= cfg.rounds`.
pub fn next_secret(cfg: &FuzzConfig, round: u64) -> Vec<u8> {
    assert!(round < cfg.rounds, "round {round} out of range (rounds = {})", cfg.rounds);
    let mut buf = cfg.base_secret.clone();
    if round == 0 {
        return buf;
    }
    let mut rng = PrngState::for_round(cfg.seed, round);
    let span = u64::from(cfg.max_mutations - cfg.min_mutations) + 1;
    let stack = u64::from(cfg.min_mutations) + rng.below(span);
    for _ in 0..stack {
        let m = Mutation::ALL[rng.below(Mutation::ALL.len() as u64) as usize];
        apply_mutation(&mut buf, m, &mut rng);
    }
    buf
}

/// All secrets of the configuration, in round order.
pub fn secrets(cfg: &FuzzConfig) -> impl Iterator<Item = Vec<u8>> + '_ {
    (0..cfg.rounds).map(move |r| next_secret(cfg, r))
}
