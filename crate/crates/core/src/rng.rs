//! Counter-based random streams.
//!
//! Every random value used by a renderer is a pure function of a key tuple
//! (seed, frame, x, y, sample, ...), so results never depend on the order in
//! which pixels or frames are evaluated.

#[inline]
pub fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    let mut z = x;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Hashes a key tuple into 64 well-mixed bits.
#[inline]
pub fn hash_key(parts: &[u64]) -> u64 {
    let mut h = 0x6A09_E667_F3BC_C908u64;
    for &p in parts {
        h = splitmix64(h ^ p);
    }
    h
}

/// Uniform in [0, 1) with 53 bits of precision.
#[inline]
pub fn unit_f64(bits: u64) -> f64 {
    (bits >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// Uniform in [0, 1) drawn from the stream identified by `parts`.
#[inline]
pub fn uniform(parts: &[u64]) -> f64 {
    unit_f64(hash_key(parts))
}

/// Derives the seed of child `index` from a parent seed.
#[inline]
pub fn derive_seed(parent: u64, index: u64) -> u64 {
    hash_key(&[parent, index, 0xD1B5_4A32_D192_ED03])
}

/// Shirley-Chiu concentric mapping of the unit square onto the unit disk.
pub fn concentric_disk(u: f64, v: f64) -> (f64, f64) {
    let a = 2.0 * u - 1.0;
    let b = 2.0 * v - 1.0;
    if a == 0.0 && b == 0.0 {
        return (0.0, 0.0);
    }
    let (r, phi) = if a.abs() > b.abs() {
        (a, std::f64::consts::FRAC_PI_4 * (b / a))
    } else {
        (b, std::f64::consts::FRAC_PI_2 - std::f64::consts::FRAC_PI_4 * (a / b))
    };
    (r * phi.cos(), r * phi.sin())
}
