//! Register-tiled direct convolution.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::selector::{supports, Algorithm};
use crate::tensor::{ConvParams, Tensor};

use super::{check_conv_args, incompatible, Filter};

/// Work shape of the tiled kernel: how many output rows and columns one inner
/// task computes, and how many features it accumulates per vector step.
///
/// The feature extent is padded logically to a multiple of `feature_block`;
/// nothing is padded in memory, edge blocks just run short.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TileConfig {
    pub tile_rows: usize,
    pub tile_cols: usize,
    pub feature_block: usize,
}

impl TileConfig {
    pub fn new(tile_rows: usize, tile_cols: usize, feature_block: usize) -> Result<Self> {
        let t = TileConfig { tile_rows, tile_cols, feature_block };
        t.validate()?;
        Ok(t)
    }

    pub fn validate(&self) -> Result<()> {
        if self.tile_rows == 0 || self.tile_cols == 0 || self.feature_block == 0 {
            return Err(Error::InvalidParams("tile extents must be >= 1".into()));
        }
        Ok(())
    }
}

impl Default for TileConfig {
    fn default() -> Self {
        TileConfig { tile_rows: 2, tile_cols: 2, feature_block: 8 }
    }
}

/// Direct convolution computing a `tile_rows x tile_cols` block of output
/// positions per inner task, accumulating `feature_block` features at a time
/// in 64-bit register tiles (rounded to 32-bit once per output).
///
/// Compatible with square windows in {1, 3, 5} and square strides in {1, 2};
/// other parameters are rejected. Matches [`super::conv2d_ref`] within 1e-5
/// relative error. Row bands of the output are independent, so they run in
/// parallel without affecting the result.
pub fn conv2d_tiled(
    input: &Tensor,
    filter: &Filter,
    params: &ConvParams,
    tile: &TileConfig,
) -> Result<Tensor> {
    if !supports(Algorithm::Tiled, params) {
        return Err(incompatible(Algorithm::Tiled, params));
    }
    tile.validate()?;
    let out_shape = check_conv_args(input, filter, params)?;
    let (pad_r, pad_c) = params.pad_before();
    let in_shape = input.shape();
    let (in_rows, in_cols, channels) = (in_shape.rows, in_shape.cols, in_shape.channels);
    let features = params.features;
    let (out_rows, out_cols) = (out_shape.rows, out_shape.cols);
    let x = input.data();
    let w = filter.data();

    let mut out = Tensor::zeros(out_shape)?;
    let band = tile.tile_rows * out_cols * features;
    let item = out_rows * out_cols * features;

    // One batch item at a time; within it, each band of tile_rows output rows
    // is an independent task.
    for n in 0..out_shape.batch {
        out.data_mut()[n * item..(n + 1) * item]
            .par_chunks_mut(band)
            .enumerate()
            .for_each_init(
                || vec![0.0f64; tile.tile_rows * tile.tile_cols * tile.feature_block],
                |acc, (band_idx, out_band)| {
                    let ho0 = band_idx * tile.tile_rows;
                    let rows_eff = tile.tile_rows.min(out_rows - ho0);
                    for wo0 in (0..out_cols).step_by(tile.tile_cols) {
                        let cols_eff = tile.tile_cols.min(out_cols - wo0);
                        for f0 in (0..features).step_by(tile.feature_block) {
                            let f_eff = tile.feature_block.min(features - f0);
                            acc.fill(0.0);
                            for kh in 0..params.window_rows {
                                for kw in 0..params.window_cols {
                                    let w_base =
                                        (kh * params.window_cols + kw) * channels * features;
                                    for c in 0..channels {
                                        let w_vec = &w[w_base + c * features + f0
                                            ..w_base + c * features + f0 + f_eff];
                                        for tr in 0..rows_eff {
                                            let ih = ((ho0 + tr) * params.stride_rows + kh)
                                                as isize
                                                - pad_r as isize;
                                            if ih < 0 || ih >= in_rows as isize {
                                                continue;
                                            }
                                            for tc in 0..cols_eff {
                                                let iw = ((wo0 + tc) * params.stride_cols + kw)
                                                    as isize
                                                    - pad_c as isize;
                                                if iw < 0 || iw >= in_cols as isize {
                                                    continue;
                                                }
                                                let xv = x[((n * in_rows + ih as usize) * in_cols
                                                    + iw as usize)
                                                    * channels
                                                    + c] as f64;
                                                let lane = (tr * tile.tile_cols + tc)
                                                    * tile.feature_block;
                                                let acc_vec = &mut acc[lane..lane + f_eff];
                                                for (a, &wv) in acc_vec.iter_mut().zip(w_vec) {
                                                    *a += xv * wv as f64;
                                                }
                                            }
                                        }
                                    }
                                }
                            }
                            for tr in 0..rows_eff {
                                for tc in 0..cols_eff {
                                    let lane =
                                        (tr * tile.tile_cols + tc) * tile.feature_block;
                                    let dst = (tr * out_cols + wo0 + tc) * features + f0;
                                    for (o, &v) in out_band[dst..dst + f_eff]
                                        .iter_mut()
                                        .zip(&acc[lane..lane + f_eff])
                                    {
                                        *o = v as f32;
                                    }
                                }
                            }
                        }
                    }
                },
            );
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::conv::{conv2d_naive_vectorized, conv2d_ref};
    use crate::tensor::{max_relative_error, Padding, Shape4D};

    fn shape(n: usize, h: usize, w: usize, c: usize) -> Shape4D {
        Shape4D::new(n, h, w, c).unwrap()
    }

    #[test]
    fn pointwise_matches_oracle() {
        let params =
            ConvParams::square(1, 1, Padding::Same, shape(1, 14, 14, 16), 24).unwrap();
        let input = Tensor::random(params.input, 61).unwrap();
        let filter = Filter::random(1, 1, 16, 24, 62).unwrap();
        let oracle = conv2d_ref(&input, &filter, &params).unwrap();
        let tiled = conv2d_tiled(&input, &filter, &params, &TileConfig::default()).unwrap();
        assert!(max_relative_error(&oracle, &tiled).unwrap() <= 1e-5);
    }

    #[test]
    fn degenerate_tile_reduces_to_naive_kernel_for_single_channel() {
        let params =
            ConvParams::square(3, 1, Padding::Same, shape(1, 7, 5, 1), 6).unwrap();
        let input = Tensor::random(params.input, 63).unwrap();
        let filter = Filter::random(3, 3, 1, 6, 64).unwrap();
        let tile = TileConfig::new(1, 1, 1).unwrap();
        let naive = conv2d_naive_vectorized(&input, &filter, &params).unwrap();
        let tiled = conv2d_tiled(&input, &filter, &params, &tile).unwrap();
        assert_eq!(naive, tiled);
    }

    #[test]
    fn edge_tiles_match_oracle() {
        // 7x5 spatial dims are not divisible by the 2x2 tile.
        for stride in [1, 2] {
            let params =
                ConvParams::square(3, stride, Padding::Same, shape(2, 7, 5, 3), 5).unwrap();
            let input = Tensor::random(params.input, 65).unwrap();
            let filter = Filter::random(3, 3, 3, 5, 66).unwrap();
            let oracle = conv2d_ref(&input, &filter, &params).unwrap();
            let tiled =
                conv2d_tiled(&input, &filter, &params, &TileConfig::default()).unwrap();
            assert!(max_relative_error(&oracle, &tiled).unwrap() <= 1e-5);
        }
    }

    #[test]
    fn window_5_valid_matches_oracle() {
        let params =
            ConvParams::square(5, 2, Padding::Valid, shape(1, 11, 9, 4), 3).unwrap();
        let input = Tensor::random(params.input, 67).unwrap();
        let filter = Filter::random(5, 5, 4, 3, 68).unwrap();
        let oracle = conv2d_ref(&input, &filter, &params).unwrap();
        let tiled = conv2d_tiled(&input, &filter, &params, &TileConfig::default()).unwrap();
        assert!(max_relative_error(&oracle, &tiled).unwrap() <= 1e-5);
    }

    #[test]
    fn unsupported_window_is_rejected() {
        let params =
            ConvParams::square(7, 1, Padding::Same, shape(1, 8, 8, 1), 1).unwrap();
        let input = Tensor::random(params.input, 69).unwrap();
        let filter = Filter::random(7, 7, 1, 1, 70).unwrap();
        assert!(matches!(
            conv2d_tiled(&input, &filter, &params, &TileConfig::default()),
            Err(Error::IncompatibleAlgorithm { .. })
        ));
    }
}
