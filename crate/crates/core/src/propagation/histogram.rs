use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

/// Fixed-width binning shared by every metric distribution that is compared.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HistogramGrid {
    pub lower: f64,
    pub bin_width: f64,
    pub bins: usize,
}

impl HistogramGrid {
    /// 0.005-star bins over [0, 3].
    pub const RMSE: HistogramGrid = HistogramGrid {
        lower: 0.0,
        bin_width: 0.005,
        bins: 600,
    };

    pub fn new(lower: f64, bin_width: f64, bins: usize) -> Result<Self> {
        if bin_width.is_nan() || bin_width <= 0.0 || bins == 0 || !lower.is_finite() {
            return Err(invalid(
                "histogram grid needs a positive bin width and at least one bin",
            ));
        }
        Ok(Self {
            lower,
            bin_width,
            bins,
        })
    }

    pub fn upper(&self) -> f64 {
        self.lower + self.bin_width * self.bins as f64
    }

    pub fn bin_lower(&self, bin: usize) -> f64 {
        self.lower + self.bin_width * bin as f64
    }
}

impl Default for HistogramGrid {
    fn default() -> Self {
        Self::RMSE
    }
}

/// Counts on a grid. Values below or above the grid go to `underflow` /
/// `overflow`, so all counts together equal the number of values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    pub grid: HistogramGrid,
    pub counts: Vec<u64>,
    pub underflow: u64,
    pub overflow: u64,
}

impl Histogram {
    pub fn from_values(grid: HistogramGrid, values: &[f64]) -> Self {
        let mut h = Histogram {
            grid,
            counts: vec![0; grid.bins],
            underflow: 0,
            overflow: 0,
        };
        for &v in values {
            let pos = (v - grid.lower) / grid.bin_width;
            if pos < 0.0 {
                h.underflow += 1;
            } else if pos >= grid.bins as f64 {
                h.overflow += 1;
            } else {
                h.counts[pos as usize] += 1;
            }
        }
        h
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum::<u64>() + self.underflow + self.overflow
    }
}
