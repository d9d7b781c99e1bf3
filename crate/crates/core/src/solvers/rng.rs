//! Reproducible permutation source for randomly permuted ADMM.
//!
//! The generator is SplitMix64: `state += 0x9E3779B97F4A7C15`, then
//! `z = state; z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9; z = (z ^ (z >> 27)) * 0x94D049BB133111EB;
//! out = z ^ (z >> 31)` with wrapping arithmetic. Bounded draws use rejection below
//! `2⁶⁴ mod n`, and permutations come from Fisher-Yates running `i = m-1 … 1` with
//! `j = below(i + 1)`. Reimplementing those three pieces reproduces every draw.

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SplitMix64 {
    state: u64,
}

impl SplitMix64 {
    pub fn new(seed: u64) -> Self {
        SplitMix64 { state: seed }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(0x9E37_79B9_7F4A_7C15);
        let mut z = self.state;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }

    /// Uniform in `0..n`.
    pub fn below(&mut self, n: u64) -> u64 {
        assert!(n > 0, "below(0)");
        let threshold = n.wrapping_neg() % n;
        loop {
            let r = self.next_u64();
            if r >= threshold {
                return r % n;
            }
        }
    }

    /// Uniform in `[-1, 1)`.
    pub fn next_signed_unit(&mut self) -> f64 {
        let u = (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64);
        2.0 * u - 1.0
    }

    pub fn permutation(&mut self, m: usize) -> PermutationDraw {
        let mut sigma: Vec<usize> = (0..m).collect();
        for i in (1..m).rev() {
            let j = self.below(i as u64 + 1) as usize;
            sigma.swap(i, j);
        }
        PermutationDraw { sigma }
    }
}

/// Block order of one randomly permuted sweep (0-based indices).
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct PermutationDraw {
    pub sigma: Vec<usize>,
}

impl PermutationDraw {
    pub fn identity(m: usize) -> Self {
        PermutationDraw {
            sigma: (0..m).collect(),
        }
    }

    pub fn is_permutation(&self) -> bool {
        let mut seen = vec![false; self.sigma.len()];
        self.sigma
            .iter()
            .all(|&s| s < seen.len() && !std::mem::replace(&mut seen[s], true))
    }
}
