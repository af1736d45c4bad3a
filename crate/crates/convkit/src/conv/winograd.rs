//! Winograd minimal filtering for unstrided 3x3 convolutions, producing 2x2
//! output tiles from overlapping 4x4 input tiles.
//!
//! Each tile costs 16 multiplies in the element-wise product stage where a
//! direct 3x3 convolution spends 36, at the price of extra additions inside
//! the fixed linear transforms. The per-coordinate products over all tiles,
//! channels and features are batched into 16 GEMMs.

use crate::error::Result;
use crate::gemm::{gemm_blocked_into_f64, GemmBlocking};
use crate::selector::{supports, Algorithm};
use crate::tensor::{ConvParams, Tensor};

use super::{check_conv_args, incompatible, Filter};

/// Input transform `B^T`: applied as `B^T * d * B` to each 4x4 input tile.
pub const INPUT_TRANSFORM: [[f32; 4]; 4] = [
    [1.0, 0.0, -1.0, 0.0],
    [0.0, 1.0, 1.0, 0.0],
    [0.0, -1.0, 1.0, 0.0],
    [0.0, 1.0, 0.0, -1.0],
];

/// Filter transform `G`: applied as `G * g * G^T` to each 3x3 filter tap grid.
pub const FILTER_TRANSFORM: [[f32; 3]; 4] = [
    [1.0, 0.0, 0.0],
    [0.5, 0.5, 0.5],
    [0.5, -0.5, 0.5],
    [0.0, 0.0, 1.0],
];

/// Output transform `A^T`: applied as `A^T * m * A` to collapse a 4x4
/// product tile into the 2x2 output tile.
pub const OUTPUT_TRANSFORM: [[f32; 4]; 2] = [
    [1.0, 1.0, 1.0, 0.0],
    [0.0, 1.0, -1.0, -1.0],
];

/// `B^T * d * B`, unrolled over the 0/±1 structure of [`INPUT_TRANSFORM`].
#[inline]
fn transform_input(d: &[f64; 16]) -> [f64; 16] {
    let mut tmp = [0.0f64; 16];
    for j in 0..4 {
        let (d0, d1, d2, d3) = (d[j], d[4 + j], d[8 + j], d[12 + j]);
        tmp[j] = d0 - d2;
        tmp[4 + j] = d1 + d2;
        tmp[8 + j] = d2 - d1;
        tmp[12 + j] = d1 - d3;
    }
    let mut v = [0.0f64; 16];
    for i in 0..4 {
        let (t0, t1, t2, t3) = (tmp[i * 4], tmp[i * 4 + 1], tmp[i * 4 + 2], tmp[i * 4 + 3]);
        v[i * 4] = t0 - t2;
        v[i * 4 + 1] = t1 + t2;
        v[i * 4 + 2] = t2 - t1;
        v[i * 4 + 3] = t1 - t3;
    }
    v
}

/// `G * g * G^T`, unrolled; the only transform that multiplies (by 1/2).
#[inline]
fn transform_filter(g: &[f64; 9]) -> [f64; 16] {
    let mut tmp = [0.0f64; 12];
    for j in 0..3 {
        let (g0, g1, g2) = (g[j], g[3 + j], g[6 + j]);
        tmp[j] = g0;
        tmp[3 + j] = 0.5 * (g0 + g1 + g2);
        tmp[6 + j] = 0.5 * (g0 - g1 + g2);
        tmp[9 + j] = g2;
    }
    let mut u = [0.0f64; 16];
    for i in 0..4 {
        let (t0, t1, t2) = (tmp[i * 3], tmp[i * 3 + 1], tmp[i * 3 + 2]);
        u[i * 4] = t0;
        u[i * 4 + 1] = 0.5 * (t0 + t1 + t2);
        u[i * 4 + 2] = 0.5 * (t0 - t1 + t2);
        u[i * 4 + 3] = t2;
    }
    u
}

/// `A^T * m * A`, unrolled.
#[inline]
fn transform_output(m: &[f64; 16]) -> [f64; 4] {
    let mut tmp = [0.0f64; 8];
    for j in 0..4 {
        let (m0, m1, m2, m3) = (m[j], m[4 + j], m[8 + j], m[12 + j]);
        tmp[j] = m0 + m1 + m2;
        tmp[4 + j] = m1 - m2 - m3;
    }
    let mut y = [0.0f64; 4];
    for i in 0..2 {
        let (t0, t1, t2, t3) = (tmp[i * 4], tmp[i * 4 + 1], tmp[i * 4 + 2], tmp[i * 4 + 3]);
        y[i * 2] = t0 + t1 + t2;
        y[i * 2 + 1] = t1 - t2 - t3;
    }
    y
}

/// Winograd convolution for 3x3 windows with unit stride.
///
/// The filter is transformed once per (channel, feature) pair. The padded
/// input extent is covered by overlapping 4x4 tiles at stride 2 (the tile
/// grid is zero-padded logically when output dims are odd, and the surplus
/// outputs discarded). For each of the 16 transform coordinates the
/// per-tile products reduce to one `(tiles x C) * (C x F)` GEMM per batch
/// item. The whole pipeline runs in 64-bit and rounds to 32-bit once per
/// output; the transform reassociation still costs precision relative to the
/// direct algorithms, so the contract is 1e-4 relative error against
/// [`super::conv2d_ref`].
pub fn conv2d_winograd(input: &Tensor, filter: &Filter, params: &ConvParams) -> Result<Tensor> {
    if !supports(Algorithm::Winograd, params) {
        return Err(incompatible(Algorithm::Winograd, params));
    }
    let out_shape = check_conv_args(input, filter, params)?;
    let (pad_r, pad_c) = params.pad_before();
    let in_shape = input.shape();
    let (in_rows, in_cols, channels) = (in_shape.rows, in_shape.cols, in_shape.channels);
    let features = params.features;
    let (out_rows, out_cols) = (out_shape.rows, out_shape.cols);
    let tiles_r = (out_rows + 1) / 2;
    let tiles_c = (out_cols + 1) / 2;
    let tiles = tiles_r * tiles_c;
    let x = input.data();
    let blocking = GemmBlocking::default();

    // Filter transform: 16 matrices of shape C x F.
    let mut u = vec![0.0f64; 16 * channels * features];
    for c in 0..channels {
        for f in 0..features {
            let mut g = [0.0f64; 9];
            for kh in 0..3 {
                for kw in 0..3 {
                    g[kh * 3 + kw] = filter.get(kh, kw, c, f) as f64;
                }
            }
            let ut = transform_filter(&g);
            for (xi, &value) in ut.iter().enumerate() {
                u[xi * channels * features + c * features + f] = value;
            }
        }
    }

    let mut out = Tensor::zeros(out_shape)?;
    let mut v = vec![0.0f64; 16 * tiles * channels];
    let mut m = vec![0.0f64; 16 * tiles * features];
    for n in 0..out_shape.batch {
        v.fill(0.0);
        m.fill(0.0);

        // Input transform: 16 matrices of shape tiles x C.
        for th in 0..tiles_r {
            let ih0 = (2 * th) as isize - pad_r as isize;
            for tw in 0..tiles_c {
                let iw0 = (2 * tw) as isize - pad_c as isize;
                let t = th * tiles_c + tw;
                for c in 0..channels {
                    let mut d = [0.0f64; 16];
                    for dh in 0..4 {
                        let ih = ih0 + dh as isize;
                        if ih < 0 || ih >= in_rows as isize {
                            continue;
                        }
                        let row_base = (n * in_rows + ih as usize) * in_cols;
                        for dw in 0..4 {
                            let iw = iw0 + dw as isize;
                            if iw < 0 || iw >= in_cols as isize {
                                continue;
                            }
                            d[dh * 4 + dw] =
                                x[(row_base + iw as usize) * channels + c] as f64;
                        }
                    }
                    let vt = transform_input(&d);
                    for (xi, &value) in vt.iter().enumerate() {
                        v[xi * tiles * channels + t * channels + c] = value;
                    }
                }
            }
        }

        // Element-wise product stage: one GEMM per transform coordinate.
        for xi in 0..16 {
            gemm_blocked_into_f64(
                &v[xi * tiles * channels..(xi + 1) * tiles * channels],
                &u[xi * channels * features..(xi + 1) * channels * features],
                &mut m[xi * tiles * features..(xi + 1) * tiles * features],
                tiles,
                channels,
                features,
                &blocking,
            );
        }

        // Inverse transform into 2x2 output tiles, discarding the surplus of
        // the zero-padded tile grid.
        let out_data = out.data_mut();
        for th in 0..tiles_r {
            for tw in 0..tiles_c {
                let t = th * tiles_c + tw;
                for f in 0..features {
                    let mut prod = [0.0f64; 16];
                    for (xi, slot) in prod.iter_mut().enumerate() {
                        *slot = m[xi * tiles * features + t * features + f];
                    }
                    let y = transform_output(&prod);
                    for i in 0..2 {
                        let ho = 2 * th + i;
                        if ho >= out_rows {
                            continue;
                        }
                        for j in 0..2 {
                            let wo = 2 * tw + j;
                            if wo >= out_cols {
                                continue;
                            }
                            out_data[((n * out_rows + ho) * out_cols + wo) * features + f] =
                                y[i * 2 + j] as f32;
                        }
                    }
                }
            }
        }
    }
    Ok(out)
}
