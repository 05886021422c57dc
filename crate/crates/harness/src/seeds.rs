//! Seed derivation for replications and model stages.

/// SplitMix64 finalizer.
fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Child seed of `seed` identified by `path`.
pub fn derive(seed: u64, path: &[u64]) -> u64 {
    path.iter().fold(mix(seed), |acc, &p| mix(acc ^ mix(p)))
}

pub mod stage {
    pub const DATA: u64 = 1;
    pub const SPLIT: u64 = 2;
    pub const FREQUENCY: u64 = 3;
    pub const SEVERITY: u64 = 4;
    pub const VARIABILITY: u64 = 5;
    pub const BOOTSTRAP: u64 = 6;
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn distinct_paths_distinct_seeds() {
        let a = derive(1, &[0, stage::DATA]);
        assert_eq!(a, derive(1, &[0, stage::DATA]));
        assert_ne!(a, derive(1, &[1, stage::DATA]));
        assert_ne!(a, derive(2, &[0, stage::DATA]));
        assert_ne!(derive(1, &[0, 1]), derive(1, &[1, 0]));
    }
}
