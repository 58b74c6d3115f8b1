//! Reproducible, stream-split random numbers.
//!
//! Every replica owns an [`RngStream`] identified by `(seed, stream_id)`. The
//! generator underneath is ChaCha8 keyed by the seed, with the stream id
//! selecting ChaCha's 64-bit stream nonce, so distinct ids give independent
//! sequences and any position in a stream can be reached without replaying it.

use rand::{Error as RandError, Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

/// Offset between a stream and its first auxiliary sub-stream.
pub const SUBSTREAM_STRIDE: u64 = 1 << 32;

const TWO_PI: f64 = std::f64::consts::TAU;

#[derive(Clone, Debug)]
pub struct RngStream {
    seed: u64,
    stream_id: u64,
    core: ChaCha8Rng,
}

impl RngStream {
    pub fn new(seed: u64, stream_id: u64) -> Self {
        let mut core = ChaCha8Rng::seed_from_u64(seed);
        core.set_stream(stream_id);
        Self { seed, stream_id, core }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream_id(&self) -> u64 {
        self.stream_id
    }

    /// A fresh stream at `stream_id + k * 2^32`, starting from its beginning.
    ///
    /// Replica indices stay far below 2^32, so sub-streams of different
    /// replicas never collide.
    pub fn substream(&self, k: u64) -> RngStream {
        RngStream::new(self.seed, self.stream_id.wrapping_add(k.wrapping_mul(SUBSTREAM_STRIDE)))
    }

    /// The same `(seed, stream_id)` rewound to its first variate.
    pub fn restarted(&self) -> RngStream {
        RngStream::new(self.seed, self.stream_id)
    }

    /// Uniform on the open interval (0, 1).
    pub fn uniform(&mut self) -> f64 {
        open_unit(self.core.next_u64())
    }

    /// Standard normal from the ziggurat sampler.
    pub fn normal(&mut self) -> f64 {
        self.core.sample(StandardNormal)
    }

    /// Uniform integer in `0..n`. Uses rejection so the result is unbiased.
    pub fn below(&mut self, n: usize) -> usize {
        assert!(n > 0, "below(0)");
        let n = n as u64;
        let zone = u64::MAX - (u64::MAX % n);
        loop {
            let v = self.core.next_u64();
            if v < zone {
                return (v % n) as usize;
            }
        }
    }

    /// Fills `out` with standard normals taken from pair position `pair_offset`
    /// of this stream, independently of the stream's current position.
    ///
    /// Pair `p` occupies 64-bit words `2p` and `2p + 1` and yields two normals
    /// by the Box–Muller transform, which needs a fixed number of words per
    /// variate. This gives noise fields random access by row.
    pub fn normals_at(&self, pair_offset: u64, out: &mut [f64]) {
        let mut core = self.core.clone();
        // ChaCha word positions count 32-bit words; one pair is four of them.
        core.set_word_pos(u128::from(pair_offset) * 4);
        let mut chunks = out.chunks_exact_mut(2);
        for pair in &mut chunks {
            let (a, b) = box_muller(core.next_u64(), core.next_u64());
            pair[0] = a;
            pair[1] = b;
        }
        if let [last] = chunks.into_remainder() {
            *last = box_muller(core.next_u64(), core.next_u64()).0;
        }
    }
}

impl RngCore for RngStream {
    fn next_u32(&mut self) -> u32 {
        self.core.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.core.next_u64()
    }

    fn fill_bytes(&mut self, dest: &mut [u8]) {
        self.core.fill_bytes(dest)
    }

    fn try_fill_bytes(&mut self, dest: &mut [u8]) -> Result<(), RandError> {
        self.core.try_fill_bytes(dest)
    }
}

#[inline]
fn open_unit(bits: u64) -> f64 {
    // 52 random bits, shifted half a step off zero so 0 and 1 are both excluded.
    ((bits >> 12) as f64 + 0.5) * (1.0 / (1u64 << 52) as f64)
}

#[inline]
fn box_muller(a: u64, b: u64) -> (f64, f64) {
    let u1 = open_unit(a);
    let u2 = open_unit(b);
    let r = (-2.0 * u1.ln()).sqrt();
    let (s, c) = (TWO_PI * u2).sin_cos();
    (r * c, r * s)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn same_seed_and_stream_repeat_exactly() {
        let mut a = RngStream::new(7, 3);
        let mut b = RngStream::new(7, 3);
        for _ in 0..1000 {
            assert_eq!(a.normal().to_bits(), b.normal().to_bits());
        }
    }

    #[test]
    fn distinct_streams_differ() {
        let mut a = RngStream::new(7, 3);
        let mut b = RngStream::new(7, 4);
        let same = (0..100).filter(|_| a.next_u64() == b.next_u64()).count();
        assert_eq!(same, 0);
    }

    #[test]
    fn random_access_matches_sequential_pairs() {
        let s = RngStream::new(11, 0);
        let mut all = vec![0.0; 64];
        s.normals_at(0, &mut all);
        let mut tail = vec![0.0; 20];
        s.normals_at(10, &mut tail);
        assert_eq!(&all[20..40], &tail[..]);
    }

    #[test]
    fn uniform_stays_open() {
        assert!(open_unit(0) > 0.0);
        assert!(open_unit(u64::MAX) < 1.0);
    }

    #[test]
    fn substreams_are_disjoint_from_parent() {
        let parent = RngStream::new(1, 5);
        let child = parent.substream(1);
        assert_eq!(child.stream_id(), 5 + SUBSTREAM_STRIDE);
        let mut p = parent.restarted();
        let mut c = child;
        assert_ne!(p.next_u64(), c.next_u64());
    }

    #[test]
    fn normal_moments_are_sane() {
        let mut r = RngStream::new(2024, 0);
        let n = 200_000;
        let xs: Vec<f64> = (0..n).map(|_| r.normal()).collect();
        let mean = xs.iter().sum::<f64>() / n as f64;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n as f64;
        assert!(mean.abs() < 3.0 / (n as f64).sqrt() * 1.5);
        assert!((var - 1.0).abs() < 0.02);
    }
}
