use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp};

use super::ServiceKind;

/// Service 1 cycles through this payload sequence every 100 ms.
pub const S1_SIZES: [u32; 5] = [300, 190, 190, 190, 190];
pub const S1_INTERVAL_S: f64 = 0.1;
pub const S2_INTERVAL_S: f64 = 0.01;
pub const S2_LARGE_BYTES: u32 = 1200;
pub const S2_SMALL_BYTES: u32 = 800;
pub const S2_LARGE_PROB: f64 = 0.2;
pub const S3_FIXED_INTERVAL_S: f64 = 0.05;
pub const S3_EXP_MEAN_S: f64 = 0.05;
pub const S3_SIZE_STEP: u32 = 200;
pub const S3_SIZE_STEPS: u32 = 10;

/// One generated message and the gap until the next one.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Emission {
    pub size: u32,
    pub interval: f64,
}

/// Generic Services 1-3 with their congestion adaptation.
#[derive(Debug, Clone)]
pub struct GenericGenerator {
    kind: ServiceKind,
    rng: ChaCha8Rng,
    sequence_index: usize,
    fraction: f64,
    interval_scale: f64,
    size_scale: f64,
    min_size: u32,
}

impl GenericGenerator {
    /// `min_size` is the smallest payload Service 2 shrinks to.
    ///
    /// # Panics
    /// If `kind` is not one of the generic services.
    pub fn new(kind: ServiceKind, rng: ChaCha8Rng, min_size: u32) -> Self {
        assert!(
            matches!(
                kind,
                ServiceKind::Generic1 | ServiceKind::Generic2 | ServiceKind::Generic3
            ),
            "{kind:?} is not a generic service"
        );
        GenericGenerator {
            kind,
            rng,
            sequence_index: 0,
            fraction: 1.0,
            interval_scale: 1.0,
            size_scale: 1.0,
            min_size,
        }
    }

    pub fn kind(&self) -> ServiceKind {
        self.kind
    }

    pub fn sequence_index(&self) -> usize {
        self.sequence_index
    }

    pub fn fraction(&self) -> f64 {
        self.fraction
    }

    pub fn interval_scale(&self) -> f64 {
        self.interval_scale
    }

    pub fn size_scale(&self) -> f64 {
        self.size_scale
    }

    /// A generator granted nothing emits nothing.
    pub fn is_idle(&self) -> bool {
        self.fraction <= 0.0
    }

    pub fn next_emission(&mut self) -> Emission {
        match self.kind {
            ServiceKind::Generic1 => self.s1_next(),
            ServiceKind::Generic2 => self.s2_next(),
            ServiceKind::Generic3 => self.s3_next(),
            _ => unreachable!(),
        }
    }

    fn s1_next(&mut self) -> Emission {
        let size = S1_SIZES[self.sequence_index % S1_SIZES.len()];
        self.sequence_index = (self.sequence_index + 1) % S1_SIZES.len();
        Emission {
            size,
            interval: S1_INTERVAL_S * self.interval_scale,
        }
    }

    fn s2_next(&mut self) -> Emission {
        let raw = if self.rng.random::<f64>() < S2_LARGE_PROB {
            S2_LARGE_BYTES
        } else {
            S2_SMALL_BYTES
        };
        Emission {
            size: scale_size(raw, self.size_scale),
            interval: S2_INTERVAL_S * self.interval_scale,
        }
    }

    fn s3_next(&mut self) -> Emission {
        let exp = Exp::new(1.0 / S3_EXP_MEAN_S).expect("positive rate");
        let gap = S3_FIXED_INTERVAL_S + exp.sample(&mut self.rng);
        let raw = S3_SIZE_STEP * self.rng.random_range(1..=S3_SIZE_STEPS);
        Emission {
            size: scale_size(raw, self.size_scale),
            interval: gap * self.interval_scale,
        }
    }

    /// Applies a grant of `fraction` (granted / demanded rate, in [0, 1]).
    ///
    /// Service 1 stretches its interval by `1/f`. Service 2 shrinks messages
    /// by `f` down to its size floor and stretches the interval for whatever
    /// reduction the floor does not allow. Service 3 splits the reduction
    /// evenly, `sqrt(f)` on each of size and rate.
    pub fn adapt(&mut self, fraction: f64) {
        let f = fraction.clamp(0.0, 1.0);
        self.fraction = f;
        if f <= 0.0 {
            return;
        }
        match self.kind {
            ServiceKind::Generic1 => {
                self.interval_scale = 1.0 / f;
                self.size_scale = 1.0;
            }
            ServiceKind::Generic2 => {
                let floor = f64::from(self.min_size) / f64::from(S2_SMALL_BYTES);
                let s = f.max(floor.min(1.0));
                self.size_scale = s;
                self.interval_scale = s / f;
            }
            ServiceKind::Generic3 => {
                let r = f.sqrt();
                self.size_scale = r;
                self.interval_scale = 1.0 / r;
            }
            _ => unreachable!(),
        }
    }
}

fn scale_size(raw: u32, scale: f64) -> u32 {
    if scale >= 1.0 {
        return raw;
    }
    ((f64::from(raw) * scale).round() as u32).max(1)
}
