//! Seed derivation for recipe cells.

/// One round of the SplitMix64 mixer.
pub fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed of cell `cell` under `master`: `splitmix64(master ^ splitmix64(cell))`.
pub fn cell_seed(master: u64, cell: u64) -> u64 {
    splitmix64(master ^ splitmix64(cell))
}
