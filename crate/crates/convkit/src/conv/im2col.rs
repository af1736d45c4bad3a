//! im2col lowering: convolution as one matrix multiply per batch item.

use crate::error::Result;
use crate::gemm::{gemm_blocked_into, GemmBlocking, Matrix};
use crate::tensor::{ConvParams, Tensor};

use super::{check_conv_args, Filter};

/// Patch matrix of the convolution: one row per output position, holding that
/// position's receptive field in (kh, kw, c) order, zeros where the window
/// reads out of bounds.
///
/// Shape is `(N * H_out * W_out) x (K_h * K_w * C)`. The full matrix is
/// `window area` times the input size; [`conv2d_im2col`] builds it one batch
/// item at a time to bound the working set.
pub fn im2col(input: &Tensor, params: &ConvParams) -> Result<Matrix> {
    params.validate()?;
    let out = params.output_shape()?;
    let patch = params.window_rows * params.window_cols * input.shape().channels;
    let rows = out.batch * out.rows * out.cols;
    let mut data = vec![0.0f32; rows * patch];
    let item_rows = out.rows * out.cols;
    for n in 0..out.batch {
        im2col_item(input, params, n, &mut data[n * item_rows * patch..(n + 1) * item_rows * patch]);
    }
    Matrix::from_vec(rows, patch, data)
}

/// Fill `dst` (zeroed, `(H_out * W_out) x patch`) with batch item `n`'s rows.
fn im2col_item(input: &Tensor, params: &ConvParams, n: usize, dst: &mut [f32]) {
    let in_shape = input.shape();
    let (in_rows, in_cols, channels) = (in_shape.rows, in_shape.cols, in_shape.channels);
    let (pad_r, pad_c) = params.pad_before();
    let out = params.output_shape().expect("params validated by caller");
    let patch = params.window_rows * params.window_cols * channels;
    let x = input.data();

    let mut row = 0;
    for ho in 0..out.rows {
        for wo in 0..out.cols {
            let row_base = row * patch;
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
                    let src = ((n * in_rows + ih as usize) * in_cols + iw as usize) * channels;
                    let dst_off = row_base + (kh * params.window_cols + kw) * channels;
                    dst[dst_off..dst_off + channels].copy_from_slice(&x[src..src + channels]);
                }
            }
            row += 1;
        }
    }
}

/// Convolution by im2col lowering: the patch matrix of each batch item
/// multiplied by the filter viewed as a `(K_h * K_w * C) x F` matrix, written
/// straight into the NHWC output.
pub fn conv2d_im2col(
    input: &Tensor,
    filter: &Filter,
    params: &ConvParams,
    blocking: &GemmBlocking,
) -> Result<Tensor> {
    let out_shape = check_conv_args(input, filter, params)?;
    blocking.validate()?;
    let channels = input.shape().channels;
    let patch = params.window_rows * params.window_cols * channels;
    let item_rows = out_shape.rows * out_shape.cols;
    let features = params.features;

    let mut out = Tensor::zeros(out_shape)?;
    let mut patches = vec![0.0f32; item_rows * patch];
    for n in 0..out_shape.batch {
        patches.fill(0.0);
        im2col_item(input, params, n, &mut patches);
        let dst = &mut out.data_mut()[n * item_rows * features..(n + 1) * item_rows * features];
        gemm_blocked_into(&patches, filter.data(), dst, item_rows, patch, features, blocking);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::conv::conv2d_ref;
    use crate::tensor::{max_relative_error, Padding, Shape4D};

    fn shape(n: usize, h: usize, w: usize, c: usize) -> Shape4D {
        Shape4D::new(n, h, w, c).unwrap()
    }

    #[test]
    fn single_patch_row_major_order() {
        let params =
            ConvParams::square(2, 1, Padding::Valid, shape(1, 2, 2, 1), 1).unwrap();
        let input = Tensor::from_vec(params.input, vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        let m = im2col(&input, &params).unwrap();
        assert_eq!((m.rows(), m.cols()), (1, 4));
        assert_eq!(m.data(), &[1.0, 2.0, 3.0, 4.0]);
    }

    #[test]
    fn pointwise_im2col_is_a_reshape() {
        let params =
            ConvParams::square(1, 1, Padding::Same, shape(2, 3, 4, 5), 7).unwrap();
        let input = Tensor::random(params.input, 71).unwrap();
        let m = im2col(&input, &params).unwrap();
        assert_eq!((m.rows(), m.cols()), (2 * 3 * 4, 5));
        assert_eq!(m.data(), input.data());
    }

    #[test]
    fn same_padded_shape_algebra() {
        let params =
            ConvParams::square(3, 1, Padding::Same, shape(1, 4, 4, 2), 1).unwrap();
        let input = Tensor::random(params.input, 72).unwrap();
        let m = im2col(&input, &params).unwrap();
        assert_eq!((m.rows(), m.cols()), (16, 18));
    }

    #[test]
    fn matches_oracle_on_strided_batch() {
        let params =
            ConvParams::square(3, 1, Padding::Same, shape(2, 14, 14, 8), 8).unwrap();
        let input = Tensor::random(params.input, 73).unwrap();
        let filter = Filter::random(3, 3, 8, 8, 74).unwrap();
        let oracle = conv2d_ref(&input, &filter, &params).unwrap();
        let lowered =
            conv2d_im2col(&input, &filter, &params, &GemmBlocking::default()).unwrap();
        assert!(max_relative_error(&oracle, &lowered).unwrap() <= 1e-5);
    }

    #[test]
    fn matches_oracle_on_large_window_stride_two() {
        let params =
            ConvParams::square(7, 2, Padding::Same, shape(1, 20, 20, 3), 6).unwrap();
        let input = Tensor::random(params.input, 75).unwrap();
        let filter = Filter::random(7, 7, 3, 6, 76).unwrap();
        let oracle = conv2d_ref(&input, &filter, &params).unwrap();
        let lowered =
            conv2d_im2col(&input, &filter, &params, &GemmBlocking::default()).unwrap();
        assert!(max_relative_error(&oracle, &lowered).unwrap() <= 1e-5);
    }

    #[test]
    fn output_shape_composition() {
        let params =
            ConvParams::square(5, 2, Padding::Valid, shape(3, 11, 9, 2), 4).unwrap();
        let input = Tensor::random(params.input, 77).unwrap();
        let filter = Filter::random(5, 5, 2, 4, 78).unwrap();
        let out = conv2d_im2col(&input, &filter, &params, &GemmBlocking::default()).unwrap();
        assert_eq!(out.shape(), params.output_shape().unwrap());
    }
}
