//! Reproducible random streams.
//!
//! Every stream is a ChaCha8 generator keyed by the master seed, with the
//! 64-bit stream id selecting an independent keystream. The top byte of the
//! id separates walk randomness from environment randomness so annealed
//! experiments can resample one without disturbing the other.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

pub type StreamRng = ChaCha8Rng;

#[derive(Copy, Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Stream {
    Walk,
    Environment,
}

impl Stream {
    fn tag(self) -> u64 {
        match self {
            Stream::Walk => 0x01,
            Stream::Environment => 0x02,
        }
    }
}

/// Identifies one stream: `(master seed, domain, index)`.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct StreamSeed {
    pub master: u64,
    pub stream: Stream,
    pub index: u64,
}

impl StreamSeed {
    pub fn walk(master: u64, index: u64) -> Self {
        StreamSeed {
            master,
            stream: Stream::Walk,
            index,
        }
    }

    pub fn environment(master: u64, index: u64) -> Self {
        StreamSeed {
            master,
            stream: Stream::Environment,
            index,
        }
    }

    pub fn rng(&self) -> StreamRng {
        stream_rng(self.master, self.stream, self.index)
    }
}

pub fn stream_rng(master: u64, stream: Stream, index: u64) -> StreamRng {
    let mut rng = ChaCha8Rng::seed_from_u64(master);
    rng.set_stream((stream.tag() << 56) ^ (index & 0x00ff_ffff_ffff_ffff));
    rng
}
