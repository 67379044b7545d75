//! Combinatorial bound on the number of stable controller states.

use crate::domain::PlantConfig;

/// Product of the parameter domain sizes under `config`: barrier position,
/// barrier emergency flag and the barrier light per side; gate and paddle
/// positions per (lock, side, orientation); entering and leaving light and
/// water flag per (lock, side); one emergency flag per lock.
pub fn state_bound(config: &PlantConfig) -> u128 {
    let triples = config.triples().count() as u32;
    let pairs = config.lock_sides().count() as u32;
    let locks = config.locks().len() as u32;
    let barrier: u128 = if config.include_barrier() {
        4 * 2 * 2u128.pow(2)
    } else {
        1
    };
    barrier * 4u128.pow(2 * triples) * (4u128 * 2 * 2).pow(pairs) * 2u128.pow(locks)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::{LockId, Orientation, StreamSide};

    #[test]
    fn known_bounds() {
        // 4·2·4 · 4^8 · 4^8 · 4^4 · 2^4 · 2^4 · 4
        let full: u128 = 4 * 2 * 4 * 4u128.pow(8) * 4u128.pow(8) * 4u128.pow(4) * 2u128.pow(4) * 2u128.pow(4) * 4;
        assert_eq!(full, 36_028_797_018_963_968);
        assert_eq!(state_bound(&PlantConfig::full()), full);
        assert_eq!(state_bound(&PlantConfig::reduced()), 16 * 16 * 16 * 4 * 4 * 2 * 32);
        assert_eq!(state_bound(&PlantConfig::reduced()), 4_194_304);
    }

    #[test]
    fn one_sided_config_is_rejected() {
        assert!(PlantConfig::new(&[LockId::North], &[StreamSide::Upstream], &[Orientation::East], false).is_err());
    }
}
