//! Stateless 64-bit mixing.
//!
//! Every random quantity in the crate (environment states, walker draws,
//! per-walker seeds) is a pure function of a key tuple pushed through
//! [`mix64`]. The mixer is the SplitMix64 finalizer with Stafford's
//! "Mix13" constants: a bijection on `u64` under which flipping any single
//! input bit flips each output bit with probability close to 1/2 (mean
//! avalanche of ~32 bits, checked in the unit tests below).
//!
//! A key `(w_0, w_1, ..., w_k)` under seed `s` and domain `d` is hashed as
//!
//! ```text
//! h = mix64(s ^ mix64(d + GAMMA))
//! h = mix64((h + GAMMA) ^ w_i)     for each word in order
//! ```
//!
//! Signed coordinates are zig-zag encoded first so the map is total on ℤⁿ.
//! Distinct domains keep the environment field and the walker streams
//! independent even when seeds coincide.

/// Weyl increment of SplitMix64 (2⁶⁴ / golden ratio, odd).
pub const GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

/// Domain tags.
pub mod domain {
    pub const ENVIRONMENT: u64 = 0x454E_5649;
    pub const ANNEALED_ENVIRONMENT: u64 = 0x414E_4E45;
    pub const WALKER_SEED: u64 = 0x5741_4C4B;
    pub const WALKER_DRAW: u64 = 0x4452_4157;
    pub const DITHER: u64 = 0x4449_5448;
    pub const KS_DIRECTIONS: u64 = 0x4B53_4452;
}

#[inline]
pub fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Zig-zag encoding: 0, -1, 1, -2, 2, ... → 0, 1, 2, 3, 4, ...
#[inline]
pub fn zigzag(v: i64) -> u64 {
    ((v << 1) ^ (v >> 63)) as u64
}

/// Top 53 bits mapped to `[0, 1)`.
#[inline]
pub fn to_unit(h: u64) -> f64 {
    (h >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// Running state of a key hash.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct KeyHash(u64);

impl KeyHash {
    #[inline]
    pub fn new(seed: u64, domain: u64) -> Self {
        KeyHash(mix64(seed ^ mix64(domain.wrapping_add(GAMMA))))
    }

    #[inline]
    pub fn absorb(self, word: u64) -> Self {
        KeyHash(mix64(self.0.wrapping_add(GAMMA) ^ word))
    }

    #[inline]
    pub fn absorb_signed(self, word: i64) -> Self {
        self.absorb(zigzag(word))
    }

    #[inline]
    pub fn value(self) -> u64 {
        self.0
    }

    #[inline]
    pub fn unit(self) -> f64 {
        to_unit(self.0)
    }
}

/// Derives the seed of sub-stream `index` from a master seed.
#[inline]
pub fn derive_seed(master: u64, domain: u64, index: u64) -> u64 {
    KeyHash::new(master, domain).absorb(index).value()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zigzag_small_values() {
        let got: Vec<u64> = [0i64, -1, 1, -2, 2].iter().map(|&v| zigzag(v)).collect();
        assert_eq!(got, vec![0, 1, 2, 3, 4]);
        assert_eq!(zigzag(i64::MIN), u64::MAX);
        assert_eq!(zigzag(i64::MAX), u64::MAX - 1);
    }

    #[test]
    fn unit_range() {
        assert_eq!(to_unit(0), 0.0);
        assert!(to_unit(u64::MAX) < 1.0);
    }

    #[test]
    fn avalanche() {
        // Flip each input bit of many keys; the mean number of flipped
        // output bits must sit near 32 and every output bit must flip
        // with frequency near 1/2.
        let trials = 2000u64;
        let mut per_bit = [0u64; 64];
        let mut total = 0u64;
        for i in 0..trials {
            let x = mix64(i.wrapping_mul(GAMMA));
            let base = mix64(x);
            for bit in 0..64 {
                let d = base ^ mix64(x ^ (1u64 << bit));
                total += d.count_ones() as u64;
                for (j, slot) in per_bit.iter_mut().enumerate() {
                    *slot += (d >> j) & 1;
                }
            }
        }
        let n = (trials * 64) as f64;
        let mean = total as f64 / n;
        assert!((mean - 32.0).abs() < 0.1, "mean avalanche {mean}");
        for (j, &c) in per_bit.iter().enumerate() {
            let f = c as f64 / n;
            assert!((f - 0.5).abs() < 0.01, "output bit {j} flips with frequency {f}");
        }
    }

    #[test]
    fn key_order_matters() {
        let a = KeyHash::new(7, domain::ENVIRONMENT).absorb(1).absorb(2);
        let b = KeyHash::new(7, domain::ENVIRONMENT).absorb(2).absorb(1);
        assert_ne!(a, b);
    }

    #[test]
    fn domains_separate_streams() {
        let a = derive_seed(3, domain::WALKER_SEED, 0);
        let b = derive_seed(3, domain::ENVIRONMENT, 0);
        assert_ne!(a, b);
    }
}
