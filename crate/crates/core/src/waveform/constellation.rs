use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::C64;

/// Unit-average-power Gray-mapped constellations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
pub enum Constellation {
    Bpsk,
    #[default]
    Qpsk,
}

impl Constellation {
    pub fn bits_per_symbol(&self) -> usize {
        match self {
            Constellation::Bpsk => 1,
            Constellation::Qpsk => 2,
        }
    }

    /// Points in bit-label order: `points()[i]` carries the bits of `i`,
    /// most significant bit first.
    pub fn points(&self) -> &'static [C64] {
        const H: f64 = std::f64::consts::FRAC_1_SQRT_2;
        const BPSK: [C64; 2] = [C64::new(1.0, 0.0), C64::new(-1.0, 0.0)];
        const QPSK: [C64; 4] = [C64::new(H, H), C64::new(H, -H), C64::new(-H, H), C64::new(-H, -H)];
        match self {
            Constellation::Bpsk => &BPSK,
            Constellation::Qpsk => &QPSK,
        }
    }

    pub fn map(&self, bits: &[u8]) -> C64 {
        let idx = bits.iter().fold(0usize, |acc, &b| (acc << 1) | (b & 1) as usize);
        self.points()[idx]
    }

    pub fn map_all(&self, bits: &[u8]) -> Vec<C64> {
        bits.chunks(self.bits_per_symbol()).map(|c| self.map(c)).collect()
    }

    pub fn random_bits<R: Rng + ?Sized>(&self, symbols: usize, rng: &mut R) -> Vec<u8> {
        (0..symbols * self.bits_per_symbol())
            .map(|_| rng.gen_range(0..2u8))
            .collect()
    }

    /// Index of the nearest point; equidistant candidates resolve to the
    /// lowest bit label.
    pub fn nearest(&self, z: C64) -> usize {
        let mut best = 0;
        let mut best_d = f64::INFINITY;
        for (i, p) in self.points().iter().enumerate() {
            let d = (z - p).norm_sqr();
            if d < best_d - 1e-15 {
                best = i;
                best_d = d;
            }
        }
        best
    }

    pub fn min_distance(&self) -> f64 {
        let pts = self.points();
        let mut d = f64::INFINITY;
        for i in 0..pts.len() {
            for j in i + 1..pts.len() {
                d = d.min((pts[i] - pts[j]).norm());
            }
        }
        d
    }
}
