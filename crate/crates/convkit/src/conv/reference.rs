//! The scalar reference convolution and the vectorized naive kernel.

use rayon::prelude::*;

use crate::error::Result;
use crate::tensor::{ConvParams, Tensor};

use super::{check_conv_args, Filter};

/// Scalar reference direct convolution; the oracle every other algorithm is
/// verified against.
///
/// `output[n,ho,wo,f] = sum over (kh,kw,c) of input[n, ho*S+kh-pad, wo*S+kw-pad, c]
/// * filter[kh,kw,c,f]`, with out-of-bounds reads contributing zero. Each
/// output is accumulated in 64-bit and rounded to 32-bit once. Runs on a
/// single thread by construction: it is the determinism anchor.
pub fn conv2d_ref(input: &Tensor, filter: &Filter, params: &ConvParams) -> Result<Tensor> {
    let out_shape = check_conv_args(input, filter, params)?;
    let (pad_r, pad_c) = params.pad_before();
    let in_shape = input.shape();
    let (in_rows, in_cols, channels) = (in_shape.rows, in_shape.cols, in_shape.channels);
    let features = params.features;
    let x = input.data();
    let w = filter.data();

    let mut out = Tensor::zeros(out_shape)?;
    let out_data = out.data_mut();
    let mut write = 0;
    for n in 0..out_shape.batch {
        for ho in 0..out_shape.rows {
            for wo in 0..out_shape.cols {
                for f in 0..features {
                    let mut acc = 0.0f64;
                    for kh in 0..params.window_rows {
                        let ih = (ho * params.stride_rows + kh) as isize - pad_r as isize;
                        if ih < 0 || ih >= in_rows as isize {
                            continue;
                        }
                        for kw in 0..params.window_cols {
                            let iw = (wo * params.stride_cols + kw) as isize - pad_c as isize;
                            if iw < 0 || iw >= in_cols as isize {
                                continue;
                            }
                            let x_base =
                                ((n * in_rows + ih as usize) * in_cols + iw as usize) * channels;
                            let w_base = (kh * params.window_cols + kw) * channels * features + f;
                            for c in 0..channels {
                                acc += x[x_base + c] as f64 * w[w_base + c * features] as f64;
                            }
                        }
                    }
                    out_data[write] = acc as f32;
                    write += 1;
                }
            }
        }
    }
    Ok(out)
}

/// Vectorized naive kernel: one task per output position `(n, ho, wo)`,
/// producing the full contiguous feature vector of that position.
///
/// Accumulates the feature lane in 64-bit and rounds once, in the same
/// (kh, kw, c) order as [`conv2d_ref`]. Tasks share no mutable state, so the
/// result does not depend on the parallel degree.
pub fn conv2d_naive_vectorized(
    input: &Tensor,
    filter: &Filter,
    params: &ConvParams,
) -> Result<Tensor> {
    let out_shape = check_conv_args(input, filter, params)?;
    let (pad_r, pad_c) = params.pad_before();
    let in_shape = input.shape();
    let (in_rows, in_cols, channels) = (in_shape.rows, in_shape.cols, in_shape.channels);
    let features = params.features;
    let (out_rows, out_cols) = (out_shape.rows, out_shape.cols);
    let x = input.data();
    let w = filter.data();

    let mut out = Tensor::zeros(out_shape)?;
    out.data_mut()
        .par_chunks_mut(features)
        .enumerate()
        .for_each_init(
            || vec![0.0f64; features],
            |acc, (pos, out_vec)| {
                let wo = pos % out_cols;
                let ho = (pos / out_cols) % out_rows;
                let n = pos / (out_cols * out_rows);
                acc.fill(0.0);
                for kh in 0..params.window_rows {
                    let ih = (ho * params.stride_rows + kh) as isize - pad_r as isize;
                    if ih < 0 || ih >= in_rows as isize {
                        continue;
                    }
                    for kw in 0..params.window_cols {
                        let iw = (wo * params.stride_cols + kw) as isize - pad_c as isize;
                        if iw < 0 || iw >= in_cols as isize {
                            continue;
                        }
                        let x_base =
                            ((n * in_rows + ih as usize) * in_cols + iw as usize) * channels;
                        let w_base = (kh * params.window_cols + kw) * channels * features;
                        for c in 0..channels {
                            let xv = x[x_base + c] as f64;
                            let w_row = &w[w_base + c * features..w_base + (c + 1) * features];
                            for (o, &wv) in acc.iter_mut().zip(w_row) {
                                *o += xv * wv as f64;
                            }
                        }
                    }
                }
                for (dst, &v) in out_vec.iter_mut().zip(acc.iter()) {
                    *dst = v as f32;
                }
            },
        );
    Ok(out)
}
