//! Counter-based normal variates.
//!
//! Every draw is a pure function of a 64-bit key and a 128-bit counter, so
//! blocks of a Monte Carlo run can be generated in any order on any worker.

const PHILOX_M0: u32 = 0xD251_1F53;
const PHILOX_M1: u32 = 0xCD9E_8D57;
const PHILOX_W0: u32 = 0x9E37_79B9;
const PHILOX_W1: u32 = 0xBB67_AE85;

/// Philox-4x32 with 10 rounds.
#[inline]
pub fn philox4x32(counter: [u32; 4], key: [u32; 2]) -> [u32; 4] {
    let mut c = counter;
    let mut k = key;
    for round in 0..10 {
        if round > 0 {
            k[0] = k[0].wrapping_add(PHILOX_W0);
            k[1] = k[1].wrapping_add(PHILOX_W1);
        }
        let p0 = (PHILOX_M0 as u64) * (c[0] as u64);
        let p1 = (PHILOX_M1 as u64) * (c[2] as u64);
        c = [
            ((p1 >> 32) as u32) ^ c[1] ^ k[0],
            p1 as u32,
            ((p0 >> 32) as u32) ^ c[3] ^ k[1],
            p0 as u32,
        ];
    }
    c
}

/// SplitMix64 finalizer; a bijection on `u64`.
#[inline]
pub fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Per-sample key derived from a run seed; injective in `sample` for a fixed seed.
pub fn derive_seed(seed: u64, sample: u64) -> u64 {
    mix64(mix64(seed).wrapping_add(sample.wrapping_mul(0x9E37_79B9_7F4A_7C15)))
}

/// Map 64 random bits to the open interval `(0, 1)`.
#[inline]
pub fn bits_to_open_unit(bits: u64) -> f64 {
    ((bits >> 12) as f64 + 0.5) * (1.0 / (1u64 << 52) as f64)
}

/// Two standard normals for the counter `(a, b)` under `key`.
#[inline]
pub fn normal_pair(key: u64, a: u64, b: u64) -> (f64, f64) {
    let out = philox4x32(
        [a as u32, (a >> 32) as u32, b as u32, (b >> 32) as u32],
        [key as u32, (key >> 32) as u32],
    );
    let u0 = ((out[0] as u64) << 32) | out[1] as u64;
    let u1 = ((out[2] as u64) << 32) | out[3] as u64;
    (
        inverse_normal_cdf(bits_to_open_unit(u0)),
        inverse_normal_cdf(bits_to_open_unit(u1)),
    )
}

/// Pairs per block in [`fill_normals`].
const LANES: usize = 16;

/// Fill `out` with `scale * z`, where `z[2k], z[2k + 1]` is `normal_pair(key, step, k)`.
///
/// Same arithmetic as the scalar path, arranged in blocks so the generator and
/// the central quantile branch vectorize.
pub(crate) fn fill_normals(key: u64, step: u64, scale: f64, out: &mut [f64]) {
    let pairs = out.len().div_ceil(2);
    let mut base = 0;
    let mut u = [0.0f64; 2 * LANES];
    let mut z = [0.0f64; 2 * LANES];
    while base < pairs {
        let mut c0 = [step as u32; LANES];
        let mut c1 = [(step >> 32) as u32; LANES];
        let mut c2 = [0u32; LANES];
        let mut c3 = [0u32; LANES];
        for l in 0..LANES {
            let b = (base + l) as u64;
            c2[l] = b as u32;
            c3[l] = (b >> 32) as u32;
        }
        let mut k0 = key as u32;
        let mut k1 = (key >> 32) as u32;
        for round in 0..10 {
            if round > 0 {
                k0 = k0.wrapping_add(PHILOX_W0);
                k1 = k1.wrapping_add(PHILOX_W1);
            }
            for l in 0..LANES {
                let p0 = (PHILOX_M0 as u64) * (c0[l] as u64);
                let p1 = (PHILOX_M1 as u64) * (c2[l] as u64);
                let n0 = ((p1 >> 32) as u32) ^ c1[l] ^ k0;
                let n2 = ((p0 >> 32) as u32) ^ c3[l] ^ k1;
                c0[l] = n0;
                c1[l] = p1 as u32;
                c2[l] = n2;
                c3[l] = p0 as u32;
            }
        }
        for l in 0..LANES {
            u[2 * l] = bits_to_open_unit(((c0[l] as u64) << 32) | c1[l] as u64);
            u[2 * l + 1] = bits_to_open_unit(((c2[l] as u64) << 32) | c3[l] as u64);
        }
        for l in 0..2 * LANES {
            z[l] = central_quantile(u[l] - 0.5);
        }
        for l in 0..2 * LANES {
            let q = u[l] - 0.5;
            if q.abs() > 0.425 {
                z[l] = tail_quantile(u[l], q);
            }
        }
        let start = 2 * base;
        let end = (start + 2 * LANES).min(out.len());
        for (o, v) in out[start..end].iter_mut().zip(&z) {
            *o = scale * v;
        }
        base += LANES;
    }
}

/// Standard normal quantile, Wichura's AS 241 (PPND16); relative accuracy about 1e-16.
pub fn inverse_normal_cdf(p: f64) -> f64 {
    let q = p - 0.5;
    if q.abs() <= 0.425 {
        central_quantile(q)
    } else {
        tail_quantile(p, q)
    }
}

// Branch-free for every q, correct for |q| <= 0.425.
#[inline(always)]
fn central_quantile(q: f64) -> f64 {
    let r = 0.180625 - q * q;
    q
            * (((((((2509.080_928_730_122_7 * r + 33430.575_583_588_128) * r
                + 67265.770_927_008_7)
                * r
                + 45921.953_931_549_87)
                * r
                + 13731.693_765_509_461)
                * r
                + 1971.590_950_306_551_3)
                * r
                + 133.141_667_891_784_38)
                * r
                + 3.387_132_872_796_366_5)
            / (((((((5226.495_278_852_545 * r + 28729.085_735_721_943) * r
                + 39307.895_800_092_71)
                * r
                + 21213.794_301_586_597)
                * r
                + 5394.196_021_424_751)
                * r
                + 687.187_007_492_057_9)
                * r
                + 42.313_330_701_600_91)
                * r
                + 1.0)
}

#[inline(never)]
fn tail_quantile(p: f64, q: f64) -> f64 {
    let mut r = if q < 0.0 { p } else { 1.0 - p };
    r = (-r.ln()).sqrt();
    let val = if r <= 5.0 {
        let r = r - 1.6;
        (((((((7.745_450_142_783_414e-4 * r + 0.022_723_844_989_269_184) * r
            + 0.241_780_725_177_450_6)
            * r
            + 1.270_458_252_452_368_4)
            * r
            + 3.647_848_324_763_204_5)
            * r
            + 5.769_497_221_460_691)
            * r
            + 4.630_337_846_156_546)
            * r
            + 1.423_437_110_749_683_5)
            / (((((((1.050_750_071_644_416_9e-9 * r + 5.475_938_084_995_345e-4) * r
                + 0.015_198_666_563_616_457)
                * r
                + 0.148_103_976_427_480_08)
                * r
                + 0.689_767_334_985_1)
                * r
                + 1.676_384_830_183_803_8)
                * r
                + 2.053_191_626_637_759)
                * r
                + 1.0)
    } else {
        let r = r - 5.0;
        (((((((2.010_334_399_292_288_1e-7 * r + 2.711_555_568_743_487_6e-5) * r
            + 0.001_242_660_947_388_078_4)
            * r
            + 0.026_532_189_526_576_124)
            * r
            + 0.296_560_571_828_504_9)
            * r
            + 1.784_826_539_917_291_3)
            * r
            + 5.463_784_911_164_114)
            * r
            + 6.657_904_643_501_103)
            / (((((((2.044_263_103_389_939_7e-15 * r + 1.421_511_758_316_446e-7) * r
                + 1.846_318_317_510_054_8e-5)
                * r
                + 7.868_691_311_456_133e-4)
                * r
                + 0.014_875_361_290_850_615)
                * r
                + 0.136_929_880_922_735_8)
                * r
                + 0.599_832_206_555_888)
                * r
                + 1.0)
    };
    if q < 0.0 {
        -val
    } else {
        val
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    // Standard normal CDF through erfc, used as an independent check of the quantile.
    fn normal_cdf(x: f64) -> f64 {
        0.5 * libm::erfc(-x / std::f64::consts::SQRT_2)
    }

    #[test]
    fn philox_known_answer() {
        // Random123 known-answer vectors for philox4x32_10.
        assert_eq!(
            philox4x32([0, 0, 0, 0], [0, 0]),
            [0x6627_e8d5, 0xe169_c58d, 0xbc57_ac4c, 0x9b00_dbd8]
        );
        assert_eq!(
            philox4x32([u32::MAX; 4], [u32::MAX; 2]),
            [0x408f_276d, 0x41c8_3b0e, 0xa20b_c7c6, 0x6d54_51fd]
        );
    }

    #[test]
    fn quantile_inverts_cdf() {
        for k in 1..2000 {
            let p = k as f64 / 2000.0;
            let x = inverse_normal_cdf(p);
            assert!((normal_cdf(x) - p).abs() < 1e-14, "p={p}");
        }
        for p in [1e-300, 1e-20, 1e-8, 1.0 - 1e-12] {
            let x = inverse_normal_cdf(p);
            let rel = (normal_cdf(x) - p).abs() / p.min(1.0 - p);
            assert!(rel < 1e-9, "p={p}: rel {rel}");
        }
        assert_eq!(inverse_normal_cdf(0.5), 0.0);
    }

    #[test]
    fn unit_interval_is_open() {
        assert!(bits_to_open_unit(0) > 0.0);
        assert!(bits_to_open_unit(u64::MAX) < 1.0);
    }

    #[test]
    fn derived_seeds_differ() {
        let a: std::collections::HashSet<u64> = (0..10_000).map(|s| derive_seed(7, s)).collect();
        assert_eq!(a.len(), 10_000);
        assert_ne!(derive_seed(1, 0), derive_seed(2, 0));
    }

    #[test]
    fn block_fill_matches_scalar_pairs() {
        for len in [1usize, 2, 5, 31, 32, 33, 64, 100] {
            let mut out = vec![0.0; len];
            fill_normals(0xDEAD_BEEF_1234, 77, 0.5, &mut out);
            for (i, v) in out.iter().enumerate() {
                let (a, b) = normal_pair(0xDEAD_BEEF_1234, 77, (i / 2) as u64);
                let want = 0.5 * if i % 2 == 0 { a } else { b };
                assert_eq!(v.to_bits(), want.to_bits(), "len {len} index {i}");
            }
        }
    }

    #[test]
    fn normal_pair_is_deterministic() {
        assert_eq!(normal_pair(3, 4, 5), normal_pair(3, 4, 5));
        assert_ne!(normal_pair(3, 4, 5), normal_pair(3, 4, 6));
    }
}
