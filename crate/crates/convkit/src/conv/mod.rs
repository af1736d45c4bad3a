//! The interchangeable 2-D convolution algorithms.
//!
//! [`conv2d_ref`] is the scalar reference every other algorithm is verified
//! against. The performance variants are the vectorized naive kernel, the
//! register-tiled direct kernel, im2col lowering onto the blocked GEMM, the
//! pointwise matmul fast path, and Winograd for unstrided 3x3 windows. All of
//! them produce the same numeric results within floating-point tolerance;
//! [`conv2d`] dispatches by [`Algorithm`] after checking compatibility.

mod im2col;
mod matmul;
mod reference;
mod tiled;
mod winograd;

pub use im2col::{conv2d_im2col, im2col};
pub use matmul::conv2d_matmul;
pub use reference::{conv2d_naive_vectorized, conv2d_ref};
pub use tiled::{conv2d_tiled, TileConfig};
pub use winograd::{
    conv2d_winograd, FILTER_TRANSFORM, INPUT_TRANSFORM, OUTPUT_TRANSFORM,
};

use crate::error::{Error, Result};
use crate::gemm::GemmBlocking;
use crate::selector::{supports, Algorithm};
use crate::tensor::{ConvParams, Shape4D, Tensor};

/// Convolution filter in (window_rows, window_cols, in_channels, features)
/// layout, features fastest.
///
/// With this ordering the filter buffer is already the
/// `(K_h * K_w * C) x F` row-major matrix the im2col path multiplies by.
#[derive(Debug, Clone, PartialEq)]
pub struct Filter {
    window_rows: usize,
    window_cols: usize,
    in_channels: usize,
    features: usize,
    data: Vec<f32>,
}

impl Filter {
    pub fn zeros(
        window_rows: usize,
        window_cols: usize,
        in_channels: usize,
        features: usize,
    ) -> Result<Self> {
        Filter::from_vec(
            window_rows,
            window_cols,
            in_channels,
            features,
            vec![0.0; window_rows * window_cols * in_channels * features],
        )
    }

    pub fn from_vec(
        window_rows: usize,
        window_cols: usize,
        in_channels: usize,
        features: usize,
        data: Vec<f32>,
    ) -> Result<Self> {
        if window_rows == 0 || window_cols == 0 || in_channels == 0 || features == 0 {
            return Err(Error::InvalidParams("filter extents must be >= 1".into()));
        }
        let expected = window_rows * window_cols * in_channels * features;
        if data.len() != expected {
            return Err(Error::ShapeMismatch(format!(
                "filter {window_rows}x{window_cols}x{in_channels}x{features} needs {expected} elements, buffer holds {}",
                data.len()
            )));
        }
        Ok(Filter { window_rows, window_cols, in_channels, features, data })
    }

    /// Deterministic uniform `[-1, 1]` fill, like [`Tensor::random`].
    pub fn random(
        window_rows: usize,
        window_cols: usize,
        in_channels: usize,
        features: usize,
        seed: u64,
    ) -> Result<Self> {
        let mut filter = Filter::zeros(window_rows, window_cols, in_channels, features)?;
        filter.fill_random(seed);
        Ok(filter)
    }

    /// Overwrite every tap deterministically, as [`Tensor::fill_random`] does.
    pub fn fill_random(&mut self, seed: u64) {
        let mut tensor = Tensor::from_vec(
            Shape4D::new(self.window_rows, self.window_cols, self.in_channels, self.features)
                .expect("filter extents validated at construction"),
            std::mem::take(&mut self.data),
        )
        .expect("filter buffer length is consistent");
        tensor.fill_random(seed);
        self.data = tensor.into_data();
    }

    /// Filter matching `params`, zero except for a single centre tap of 1 on
    /// each diagonal channel pair. With `C == F` this is the identity map.
    pub fn delta(params: &ConvParams) -> Result<Self> {
        let mut f = Filter::zeros(
            params.window_rows,
            params.window_cols,
            params.input.channels,
            params.features,
        )?;
        let kh = params.window_rows / 2;
        let kw = params.window_cols / 2;
        for c in 0..f.in_channels.min(f.features) {
            let idx = f.index(kh, kw, c, c);
            f.data[idx] = 1.0;
        }
        Ok(f)
    }

    #[inline]
    pub fn index(&self, kh: usize, kw: usize, c: usize, f: usize) -> usize {
        ((kh * self.window_cols + kw) * self.in_channels + c) * self.features + f
    }

    #[inline]
    pub fn get(&self, kh: usize, kw: usize, c: usize, f: usize) -> f32 {
        self.data[self.index(kh, kw, c, f)]
    }

    pub fn window_rows(&self) -> usize {
        self.window_rows
    }

    pub fn window_cols(&self) -> usize {
        self.window_cols
    }

    pub fn in_channels(&self) -> usize {
        self.in_channels
    }

    pub fn features(&self) -> usize {
        self.features
    }

    #[inline]
    pub fn data(&self) -> &[f32] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f32] {
        &mut self.data
    }

    fn check_params(&self, params: &ConvParams) -> Result<()> {
        let ok = self.window_rows == params.window_rows
            && self.window_cols == params.window_cols
            && self.in_channels == params.input.channels
            && self.features == params.features;
        if ok {
            Ok(())
        } else {
            Err(Error::ShapeMismatch(format!(
                "filter {}x{}x{}x{} does not match parameters {params}",
                self.window_rows, self.window_cols, self.in_channels, self.features
            )))
        }
    }
}

/// Shared entry validation: params hold, input matches, filter matches.
/// Returns the output shape.
fn check_conv_args(input: &Tensor, filter: &Filter, params: &ConvParams) -> Result<Shape4D> {
    params.validate()?;
    if input.shape() != params.input {
        return Err(Error::ShapeMismatch(format!(
            "input shape {} does not match parameters {params}",
            input.shape()
        )));
    }
    filter.check_params(params)?;
    params.output_shape()
}

fn incompatible(alg: Algorithm, params: &ConvParams) -> Error {
    Error::IncompatibleAlgorithm { algorithm: alg, params: params.to_string() }
}

/// Run the convolution with the chosen algorithm.
///
/// Specialized algorithms use their default tuning parameters; call the
/// per-algorithm entry points to control those.
pub fn conv2d(
    alg: Algorithm,
    input: &Tensor,
    filter: &Filter,
    params: &ConvParams,
) -> Result<Tensor> {
    if !supports(alg, params) {
        return Err(incompatible(alg, params));
    }
    match alg {
        Algorithm::Direct => conv2d_ref(input, filter, params),
        Algorithm::NaiveVectorized => conv2d_naive_vectorized(input, filter, params),
        Algorithm::Tiled => conv2d_tiled(input, filter, params, &TileConfig::default()),
        Algorithm::Im2col => conv2d_im2col(input, filter, params, &GemmBlocking::default()),
        Algorithm::Matmul => conv2d_matmul(input, filter, params, &GemmBlocking::default()),
        Algorithm::Winograd => conv2d_winograd(input, filter, params),
    }
}

/// Analytic count of the real multiplications in the algorithm's main stage.
///
/// For the direct family (direct, naive, tiled, im2col, matmul) this is the
/// multiply-accumulate count. For Winograd it counts only the element-wise
/// GEMM stage: 16 multiplies per 2x2 output tile per (channel, feature) pair;
/// the transform stages are reported separately by
/// [`winograd_transform_multiplies`].
pub fn multiply_count(alg: Algorithm, params: &ConvParams) -> Result<u64> {
    if !supports(alg, params) {
        return Err(incompatible(alg, params));
    }
    match alg {
        Algorithm::Direct
        | Algorithm::NaiveVectorized
        | Algorithm::Tiled
        | Algorithm::Im2col
        | Algorithm::Matmul => params.mac_count(),
        Algorithm::Winograd => {
            let out = params.output_shape()?;
            let tiles = ((out.rows + 1) / 2) as u64 * ((out.cols + 1) / 2) as u64;
            [
                16u64,
                params.input.batch as u64,
                tiles,
                params.input.channels as u64,
                params.features as u64,
            ]
            .iter()
            .try_fold(1u64, |acc, &f| acc.checked_mul(f))
            .ok_or(Error::Overflow("winograd multiply count"))
        }
    }
}

/// Multiplications spent in the Winograd transform stages.
///
/// The input and output transforms have only 0/±1 coefficients and multiply
/// nothing; the filter transform performs 14 multiplications by 1/2 per
/// (channel, feature) pair, once per convolution regardless of tile count.
pub fn winograd_transform_multiplies(params: &ConvParams) -> Result<u64> {
    if !supports(Algorithm::Winograd, params) {
        return Err(incompatible(Algorithm::Winograd, params));
    }
    params.validate()?;
    14u64
        .checked_mul(params.input.channels as u64)
        .and_then(|n| n.checked_mul(params.features as u64))
        .ok_or(Error::Overflow("winograd transform multiply count"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tensor::Padding;

    fn shape(n: usize, h: usize, w: usize, c: usize) -> Shape4D {
        Shape4D::new(n, h, w, c).unwrap()
    }

    #[test]
    fn filter_round_trips_indices() {
        let f = Filter::random(3, 3, 4, 5, 9).unwrap();
        assert_eq!(f.data().len(), 3 * 3 * 4 * 5);
        assert_eq!(f.get(2, 2, 3, 4), f.data()[f.index(2, 2, 3, 4)]);
    }

    #[test]
    fn filter_rejects_bad_length() {
        assert!(Filter::from_vec(3, 3, 1, 1, vec![0.0; 8]).is_err());
    }

    #[test]
    fn dispatch_rejects_incompatible() {
        let params =
            ConvParams::square(7, 2, Padding::Same, shape(1, 16, 16, 2), 3).unwrap();
        let input = Tensor::random(params.input, 1).unwrap();
        let filter = Filter::random(7, 7, 2, 3, 2).unwrap();
        assert!(matches!(
            conv2d(Algorithm::Winograd, &input, &filter, &params),
            Err(Error::IncompatibleAlgorithm { .. })
        ));
    }

    #[test]
    fn direct_multiply_count_is_window_area_per_output() {
        let params =
            ConvParams::square(3, 1, Padding::Same, shape(1, 6, 5, 1), 1).unwrap();
        assert_eq!(
            multiply_count(Algorithm::Direct, &params).unwrap(),
            9 * 6 * 5
        );
    }

    #[test]
    fn matmul_multiply_count_is_cin_per_output_feature() {
        let params =
            ConvParams::square(1, 1, Padding::Same, shape(1, 4, 4, 8), 3).unwrap();
        assert_eq!(
            multiply_count(Algorithm::Matmul, &params).unwrap(),
            4 * 4 * 8 * 3
        );
    }

    #[test]
    fn winograd_multiply_ratio_is_16_over_36() {
        // Even output dims: every 2x2 output tile is full.
        let params =
            ConvParams::square(3, 1, Padding::Same, shape(2, 12, 8, 5), 7).unwrap();
        let wino = multiply_count(Algorithm::Winograd, &params).unwrap();
        let direct = multiply_count(Algorithm::Direct, &params).unwrap();
        assert_eq!(wino * 36, direct * 16);
    }

    #[test]
    fn winograd_count_rejects_incompatible() {
        let params =
            ConvParams::square(5, 1, Padding::Same, shape(1, 8, 8, 1), 1).unwrap();
        assert!(multiply_count(Algorithm::Winograd, &params).is_err());
        assert!(winograd_transform_multiplies(&params).is_err());
    }
}
