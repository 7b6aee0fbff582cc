//! Image-level scores from pixel score maps.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scoring::ScoreMap;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Aggregation {
    /// Mean of the maxima of non-overlapping regions.
    MaxpoolMean,
    /// Plain mean over all pixels.
    Mean,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AggregationConfig {
    pub region_width: usize,
    pub region_height: usize,
    pub method: Aggregation,
}

impl Default for AggregationConfig {
    fn default() -> Self {
        AggregationConfig {
            region_width: 30,
            region_height: 30,
            method: Aggregation::MaxpoolMean,
        }
    }
}

impl AggregationConfig {
    pub fn validate(&self) -> Result<()> {
        if self.region_width == 0 || self.region_height == 0 {
            return Err(Error::InvalidConfig(format!(
                "region size must be at least 1x1, got {}x{}",
                self.region_width, self.region_height
            )));
        }
        Ok(())
    }

    /// Number of tiles, partial edge tiles included.
    pub fn region_count(&self, width: usize, height: usize) -> usize {
        width.div_ceil(self.region_width) * height.div_ceil(self.region_height)
    }
}

/// Tiles the map from (0,0) in row-major order; trailing partial tiles are
/// kept as smaller regions. Returns the mean of the per-tile maxima.
pub fn aggregate(map: &ScoreMap, cfg: &AggregationConfig) -> f64 {
    let (rw, rh) = (cfg.region_width.max(1), cfg.region_height.max(1));
    let tiles_x = map.width.div_ceil(rw);
    let tiles_y = map.height.div_ceil(rh);
    let mut maxima = vec![f64::NEG_INFINITY; tiles_x * tiles_y];
    for y in 0..map.height {
        let row = &map.values[y * map.width..(y + 1) * map.width];
        let tile_row = &mut maxima[(y / rh) * tiles_x..(y / rh + 1) * tiles_x];
        for (tx, chunk) in row.chunks(rw).enumerate() {
            let m = chunk.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            if m > tile_row[tx] {
                tile_row[tx] = m;
            }
        }
    }
    maxima.iter().sum::<f64>() / maxima.len() as f64
}

pub fn aggregate_mean(map: &ScoreMap) -> f64 {
    map.values.iter().sum::<f64>() / map.values.len() as f64
}

/// Dispatches on `cfg.method`.
pub fn image_score(map: &ScoreMap, cfg: &AggregationConfig) -> f64 {
    match cfg.method {
        Aggregation::MaxpoolMean => aggregate(map, cfg),
        Aggregation::Mean => aggregate_mean(map),
    }
}
