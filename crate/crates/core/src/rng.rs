//! Counter-based random streams.
//!
//! A stream is identified by `(seed, stream_id)` and backed by ChaCha8 with
//! the stream id mapped onto the ChaCha stream counter. The `i`-th standard
//! normal of a stream is a pure function of `(seed, stream_id, i)`:
//!
//! * normals are produced in Box–Muller pairs; pair `p` consumes the 64-bit
//!   words `2p` and `2p + 1` of the stream,
//! * each word `w` becomes a uniform `u = ((w >> 11) + 0.5) / 2^53` in `(0, 1)`,
//! * the pair is `(r cos θ, r sin θ)` with `r = sqrt(-2 ln u1)` and `θ = 2π u2`,
//! * normal `2p` is the cosine branch and `2p + 1` the sine branch.
//!
//! This transform is frozen: golden CSV files depend on it.

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};

const TWO_POW_NEG_53: f64 = 1.0 / (1u64 << 53) as f64;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct RngStream {
    pub seed: u64,
    pub stream_id: u64,
}

impl RngStream {
    pub fn new(seed: u64, stream_id: u64) -> Self {
        Self { seed, stream_id }
    }

    /// Same seed, different stream.
    pub fn with_stream(self, stream_id: u64) -> Self {
        Self { stream_id, ..self }
    }

    /// A statistically independent stream family for a sub-consumer (a block
    /// of coordinates, a second prox provider). The stream id is preserved.
    pub fn derive(self, lane: u64) -> Self {
        Self {
            seed: splitmix64(self.seed ^ splitmix64(lane.wrapping_add(0x5851_F42D_4C95_7F2D))),
            stream_id: self.stream_id,
        }
    }

    fn engine(&self) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(self.stream_id);
        rng
    }

    /// Sequential reader of the stream's standard normals starting at index 0.
    pub fn normals(&self) -> NormalStream {
        NormalStream { rng: self.engine(), spare: None }
    }

    /// Normal reader positioned at normal index `index`.
    pub fn normals_from(&self, index: u64) -> NormalStream {
        let mut rng = self.engine();
        // ChaCha word positions count 32-bit words; each pair uses four.
        rng.set_word_pos(u128::from(index / 2) * 4);
        let mut stream = NormalStream { rng, spare: None };
        if index % 2 == 1 {
            stream.next_normal();
        }
        stream
    }

    /// Uniforms in `(0, 1)`, one per 64-bit word of the stream.
    pub fn uniforms(&self) -> impl Iterator<Item = f64> {
        let mut rng = self.engine();
        std::iter::from_fn(move || Some(to_unit(rng.next_u64())))
    }

    /// First `len` normals of the stream.
    pub fn normal_vec(&self, len: usize) -> Vec<f64> {
        let mut out = vec![0.0; len];
        self.normals().fill(&mut out);
        out
    }
}

pub struct NormalStream {
    rng: ChaCha8Rng,
    spare: Option<f64>,
}

impl NormalStream {
    #[inline]
    pub fn next_normal(&mut self) -> f64 {
        if let Some(z) = self.spare.take() {
            return z;
        }
        let u1 = to_unit(self.rng.next_u64());
        let u2 = to_unit(self.rng.next_u64());
        let r = (-2.0 * u1.ln()).sqrt();
        let (s, c) = (std::f64::consts::TAU * u2).sin_cos();
        self.spare = Some(r * s);
        r * c
    }

    pub fn fill(&mut self, out: &mut [f64]) {
        for v in out {
            *v = self.next_normal();
        }
    }
}

impl Iterator for NormalStream {
    type Item = f64;

    fn next(&mut self) -> Option<f64> {
        Some(self.next_normal())
    }
}

#[inline]
fn to_unit(w: u64) -> f64 {
    ((w >> 11) as f64 + 0.5) * TWO_POW_NEG_53
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
