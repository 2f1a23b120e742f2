use serde::{Deserialize, Serialize};

use crate::FcnError;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FcnConfig {
    pub height: usize,
    pub width: usize,
    pub in_channels: usize,
    /// Number of encoder stages (and pooling steps).
    pub depth: usize,
    pub base_channels: usize,
    /// 3×3 convolutions per encoder/decoder block.
    pub convs_per_block: usize,
    /// Concatenate encoder activations into the decoder.
    pub skip_connections: bool,
}

impl Default for FcnConfig {
    fn default() -> Self {
        Self {
            height: 128,
            width: 128,
            in_channels: 1,
            depth: 3,
            base_channels: 8,
            convs_per_block: 2,
            skip_connections: true,
        }
    }
}

impl FcnConfig {
    /// The reduced configuration used for gradient checks.
    pub fn tiny() -> Self {
        Self { height: 16, width: 16, base_channels: 2, ..Self::default() }
    }

    pub fn validate(&self) -> Result<(), FcnError> {
        let bad = |m: String| Err(FcnError::Config(m));
        if self.depth == 0 || self.base_channels == 0 || self.in_channels == 0 || self.convs_per_block == 0 {
            return bad("depth, base_channels, in_channels and convs_per_block must be ≥ 1".into());
        }
        let f = 1usize << self.depth;
        if self.height == 0 || self.width == 0 || self.height % f != 0 || self.width % f != 0 {
            return bad(format!("input {}×{} not divisible by 2^{} = {f}", self.height, self.width, self.depth));
        }
        Ok(())
    }

    /// Channels at encoder stage `i`; stage `depth` is the bottleneck.
    pub fn channels(&self, stage: usize) -> usize {
        self.base_channels << stage
    }

    pub fn bottleneck_shape(&self) -> (usize, usize, usize) {
        (self.channels(self.depth), self.height >> self.depth, self.width >> self.depth)
    }

    pub fn bottleneck_len(&self) -> usize {
        let (c, h, w) = self.bottleneck_shape();
        c * h * w
    }

    pub fn input_len(&self) -> usize {
        self.in_channels * self.height * self.width
    }

    pub fn pixels(&self) -> usize {
        self.height * self.width
    }
}
