//! Counter-based splittable generator (SplitMix64-CTR).
//!
//! Output `k` of stream `s` under seed `seed` is
//! `mix64(key(seed, s) + (k + 1)·GOLDEN)`, where `key(seed, s) =
//! mix64(mix64(seed) ^ s·STREAM_MUL)` and `mix64` is the SplitMix64 finalizer.
//! Any stream can therefore be reproduced from `(seed, stream, counter)` alone.

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;
const STREAM_MUL: u64 = 0xD1B5_4A32_D192_ED03;

#[inline]
pub fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derives a stream id from a purpose tag and an index.
#[inline]
pub fn stream_id(purpose: u16, index: u64) -> u64 {
    ((purpose as u64) << 48) | (index & 0xFFFF_FFFF_FFFF)
}

pub mod purpose {
    pub const MARGINAL: u16 = 1;
    pub const LABELS: u16 = 2;
    pub const PSGD: u16 = 3;
    pub const LEARNER: u16 = 4;
    pub const ORACLE: u16 = 5;
    pub const HARNESS: u16 = 6;
    pub const TRIAL: u16 = 7;
}

#[derive(Debug, Clone)]
pub struct CtrRng {
    key: u64,
    counter: u64,
    spare_normal: Option<f64>,
}

impl CtrRng {
    pub fn new(seed: u64, stream: u64) -> Self {
        Self {
            key: mix64(mix64(seed) ^ stream.wrapping_mul(STREAM_MUL)),
            counter: 0,
            spare_normal: None,
        }
    }

    /// A child generator whose stream is derived from this generator's key.
    pub fn substream(&self, index: u64) -> Self {
        Self::new(self.key, index)
    }

    pub fn counter(&self) -> u64 {
        self.counter
    }

    #[inline]
    pub fn next_u64(&mut self) -> u64 {
        self.counter = self.counter.wrapping_add(1);
        mix64(self.key.wrapping_add(self.counter.wrapping_mul(GOLDEN)))
    }

    /// Uniform on `[0, 1)` with 53 bits of precision.
    #[inline]
    pub fn uniform(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform on `(0, 1]`.
    #[inline]
    pub fn uniform_open0(&mut self) -> f64 {
        1.0 - self.uniform()
    }

    pub fn uniform_range(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.uniform()
    }

    /// Uniform integer in `0..n` (Lemire-style multiply, negligible bias for small n).
    pub fn below(&mut self, n: usize) -> usize {
        ((self.next_u64() as u128 * n as u128) >> 64) as usize
    }

    pub fn bernoulli(&mut self, p: f64) -> bool {
        self.uniform() < p
    }

    /// Standard normal by Box–Muller; the second variate is cached.
    pub fn normal(&mut self) -> f64 {
        if let Some(z) = self.spare_normal.take() {
            return z;
        }
        let u1 = self.uniform_open0();
        let u2 = self.uniform();
        let r = (-2.0 * u1.ln()).sqrt();
        let (s, c) = (std::f64::consts::TAU * u2).sin_cos();
        self.spare_normal = Some(r * s);
        r * c
    }

    /// Gamma(shape, 1) by Marsaglia–Tsang.
    pub fn gamma(&mut self, shape: f64) -> f64 {
        if shape < 1.0 {
            let g = self.gamma(shape + 1.0);
            return g * self.uniform_open0().powf(1.0 / shape);
        }
        let d = shape - 1.0 / 3.0;
        let c = 1.0 / (9.0 * d).sqrt();
        loop {
            let x = self.normal();
            let v = 1.0 + c * x;
            if v <= 0.0 {
                continue;
            }
            let v = v * v * v;
            let u = self.uniform_open0();
            if u.ln() < 0.5 * x * x + d - d * v + d * v.ln() {
                return d * v;
            }
        }
    }

    /// Uniform point on the unit sphere in `R^d`.
    pub fn unit_sphere(&mut self, d: usize) -> Vec<f64> {
        loop {
            let v: Vec<f64> = (0..d).map(|_| self.normal()).collect();
            let n = crate::numerics::norm2(&v);
            if n > 1e-300 {
                return v.into_iter().map(|x| x / n).collect();
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn streams_are_reproducible_and_distinct() {
        let mut a = CtrRng::new(7, 3);
        let mut b = CtrRng::new(7, 3);
        let mut c = CtrRng::new(7, 4);
        let xa: Vec<u64> = (0..8).map(|_| a.next_u64()).collect();
        let xb: Vec<u64> = (0..8).map(|_| b.next_u64()).collect();
        let xc: Vec<u64> = (0..8).map(|_| c.next_u64()).collect();
        assert_eq!(xa, xb);
        assert_ne!(xa, xc);
    }

    #[test]
    fn output_is_a_function_of_counter() {
        let mut a = CtrRng::new(11, 0);
        for _ in 0..5 {
            a.next_u64();
        }
        let k = mix64(mix64(11) ^ 0);
        assert_eq!(a.next_u64(), mix64(k.wrapping_add(6u64.wrapping_mul(GOLDEN))));
    }

    #[test]
    fn uniform_moments() {
        let mut r = CtrRng::new(1, 1);
        let n = 200_000;
        let mut s = 0.0;
        let mut s2 = 0.0;
        for _ in 0..n {
            let u = r.uniform();
            assert!((0.0..1.0).contains(&u));
            s += u;
            s2 += u * u;
        }
        assert!((s / n as f64 - 0.5).abs() < 0.005);
        assert!((s2 / n as f64 - 1.0 / 3.0).abs() < 0.005);
    }

    #[test]
    fn gamma_mean() {
        let mut r = CtrRng::new(2, 9);
        for shape in [0.5, 1.5, 4.0] {
            let n = 100_000;
            let m: f64 = (0..n).map(|_| r.gamma(shape)).sum::<f64>() / n as f64;
            assert!((m - shape).abs() < 0.05 * shape.max(1.0), "shape {shape}: {m}");
        }
    }
}
