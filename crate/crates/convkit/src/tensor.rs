//! Dense 4-D tensors in NHWC layout, convolution shape algebra, and the
//! comparison metric used to verify that algorithms agree.
//!
//! Every primitive in this crate operates on [`Tensor`] values: flat `f32`
//! buffers ordered batch, rows, columns, channels with channels contiguous.
//! [`ConvParams`] carries the six-tuple (window, stride, rows, cols, input
//! features, output features) plus batch and padding, and owns the shape and
//! flop arithmetic derived from it.

use rand::distributions::Uniform;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// Dimensions of a dense 4-D tensor: batch, rows, cols, channels.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Shape4D {
    pub batch: usize,
    pub rows: usize,
    pub cols: usize,
    pub channels: usize,
}

impl Shape4D {
    /// All extents must be at least 1 and the element count must not overflow.
    pub fn new(batch: usize, rows: usize, cols: usize, channels: usize) -> Result<Self> {
        let shape = Shape4D { batch, rows, cols, channels };
        if batch == 0 || rows == 0 || cols == 0 || channels == 0 {
            return Err(Error::InvalidParams(format!(
                "shape extents must be >= 1, got {shape:?}"
            )));
        }
        shape.element_count()?;
        Ok(shape)
    }

    /// Total number of elements, checked against overflow.
    pub fn element_count(&self) -> Result<usize> {
        self.batch
            .checked_mul(self.rows)
            .and_then(|n| n.checked_mul(self.cols))
            .and_then(|n| n.checked_mul(self.channels))
            .ok_or(Error::Overflow("tensor element count"))
    }

    /// Linear index of `(n, h, w, c)` in channels-fastest order.
    #[inline]
    pub fn index(&self, n: usize, h: usize, w: usize, c: usize) -> usize {
        ((n * self.rows + h) * self.cols + w) * self.channels + c
    }

    /// Inverse of [`Shape4D::index`].
    #[inline]
    pub fn coords(&self, index: usize) -> (usize, usize, usize, usize) {
        let c = index % self.channels;
        let rest = index / self.channels;
        let w = rest % self.cols;
        let rest = rest / self.cols;
        let h = rest % self.rows;
        let n = rest / self.rows;
        (n, h, w, c)
    }
}

impl std::fmt::Display for Shape4D {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}x{}x{}x{}", self.batch, self.rows, self.cols, self.channels)
    }
}

/// Dense `f32` tensor in NHWC layout.
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor {
    shape: Shape4D,
    data: Vec<f32>,
}

impl Tensor {
    pub fn zeros(shape: Shape4D) -> Result<Self> {
        let count = shape.element_count()?;
        Ok(Tensor { shape, data: vec![0.0; count] })
    }

    /// Wrap an existing buffer; its length must match the shape.
    pub fn from_vec(shape: Shape4D, data: Vec<f32>) -> Result<Self> {
        let count = shape.element_count()?;
        if data.len() != count {
            return Err(Error::ShapeMismatch(format!(
                "shape {shape} implies {count} elements, buffer holds {}",
                data.len()
            )));
        }
        Ok(Tensor { shape, data })
    }

    /// Fresh tensor filled deterministically from `seed`; see [`Tensor::fill_random`].
    pub fn random(shape: Shape4D, seed: u64) -> Result<Self> {
        let mut t = Tensor::zeros(shape)?;
        t.fill_random(seed);
        Ok(t)
    }

    /// Overwrite every element with a deterministic value uniform in `[-1, 1]`.
    ///
    /// Identical `(seed, shape)` pairs produce bitwise-identical contents.
    pub fn fill_random(&mut self, seed: u64) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let dist = Uniform::new_inclusive(-1.0f32, 1.0f32);
        for v in &mut self.data {
            *v = rng.sample(dist);
        }
    }

    #[inline]
    pub fn shape(&self) -> Shape4D {
        self.shape
    }

    #[inline]
    pub fn data(&self) -> &[f32] {
        &self.data
    }

    #[inline]
    pub fn data_mut(&mut self) -> &mut [f32] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<f32> {
        self.data
    }

    #[inline]
    pub fn get(&self, n: usize, h: usize, w: usize, c: usize) -> f32 {
        self.data[self.shape.index(n, h, w, c)]
    }

    #[inline]
    pub fn set(&mut self, n: usize, h: usize, w: usize, c: usize, value: f32) {
        let idx = self.shape.index(n, h, w, c);
        self.data[idx] = value;
    }
}

/// Zero-padding scheme of a convolution or pooling window.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Padding {
    /// Output spatial extent is `ceil(in / stride)`; borders are zero-padded,
    /// split floor-before / ceil-after.
    Same,
    /// Only fully in-bounds windows: output extent `floor((in - window) / stride) + 1`.
    Valid,
}

/// Parameters of a 2-D convolution: window, stride, padding, input shape and
/// output feature count.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct ConvParams {
    pub window_rows: usize,
    pub window_cols: usize,
    pub stride_rows: usize,
    pub stride_cols: usize,
    pub padding: Padding,
    pub input: Shape4D,
    /// Output channel count.
    pub features: usize,
}

impl ConvParams {
    pub fn new(
        window_rows: usize,
        window_cols: usize,
        stride_rows: usize,
        stride_cols: usize,
        padding: Padding,
        input: Shape4D,
        features: usize,
    ) -> Result<Self> {
        let params = ConvParams {
            window_rows,
            window_cols,
            stride_rows,
            stride_cols,
            padding,
            input,
            features,
        };
        params.validate()?;
        Ok(params)
    }

    /// Square-window, square-stride convenience constructor in the canonical
    /// tuple order (window, stride, rows, cols, input features, output features).
    pub fn square(
        window: usize,
        stride: usize,
        padding: Padding,
        input: Shape4D,
        features: usize,
    ) -> Result<Self> {
        ConvParams::new(window, window, stride, stride, padding, input, features)
    }

    pub fn validate(&self) -> Result<()> {
        if self.window_rows == 0 || self.window_cols == 0 {
            return Err(Error::InvalidParams("window extents must be >= 1".into()));
        }
        if self.stride_rows == 0 || self.stride_cols == 0 {
            return Err(Error::InvalidParams("stride extents must be >= 1".into()));
        }
        if self.features == 0 {
            return Err(Error::InvalidParams("feature count must be >= 1".into()));
        }
        Shape4D::new(self.input.batch, self.input.rows, self.input.cols, self.input.channels)?;
        if self.padding == Padding::Valid
            && (self.window_rows > self.input.rows || self.window_cols > self.input.cols)
        {
            return Err(Error::InvalidParams(format!(
                "Valid padding requires window {}x{} <= input extent {}x{}",
                self.window_rows, self.window_cols, self.input.rows, self.input.cols
            )));
        }
        Ok(())
    }

    /// Output shape of the convolution these parameters describe.
    pub fn output_shape(&self) -> Result<Shape4D> {
        self.validate()?;
        let rows = spatial_output(self.input.rows, self.window_rows, self.stride_rows, self.padding);
        let cols = spatial_output(self.input.cols, self.window_cols, self.stride_cols, self.padding);
        Shape4D::new(self.input.batch, rows, cols, self.features)
    }

    /// Zero rows/cols implicitly prepended under `Same` padding (zero for `Valid`).
    ///
    /// `Same` splits the total padding floor-before / ceil-after.
    pub fn pad_before(&self) -> (usize, usize) {
        match self.padding {
            Padding::Valid => (0, 0),
            Padding::Same => {
                let rows = spatial_output(self.input.rows, self.window_rows, self.stride_rows, self.padding);
                let cols = spatial_output(self.input.cols, self.window_cols, self.stride_cols, self.padding);
                (
                    pad_total(self.input.rows, self.window_rows, self.stride_rows, rows) / 2,
                    pad_total(self.input.cols, self.window_cols, self.stride_cols, cols) / 2,
                )
            }
        }
    }

    /// Direct-convolution flop count: `2 * N * H_out * W_out * K_h * K_w * C_in * F`,
    /// counting one multiply-accumulate as two flops.
    ///
    /// This count is used for every algorithm when deriving gigaflops, so
    /// algorithms that do less arithmetic (Winograd) report proportionally
    /// higher rates.
    pub fn flop_count(&self) -> Result<u64> {
        let out = self.output_shape()?;
        let factors = [
            2u64,
            self.input.batch as u64,
            out.rows as u64,
            out.cols as u64,
            self.window_rows as u64,
            self.window_cols as u64,
            self.input.channels as u64,
            self.features as u64,
        ];
        factors
            .iter()
            .try_fold(1u64, |acc, &f| acc.checked_mul(f))
            .ok_or(Error::Overflow("flop count"))
    }

    /// Direct-convolution multiply count (half of [`ConvParams::flop_count`]).
    pub fn mac_count(&self) -> Result<u64> {
        Ok(self.flop_count()? / 2)
    }
}

impl std::fmt::Display for ConvParams {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "K={}x{} S={}x{} {:?} in={} F={}",
            self.window_rows,
            self.window_cols,
            self.stride_rows,
            self.stride_cols,
            self.padding,
            self.input,
            self.features
        )
    }
}

fn spatial_output(input: usize, window: usize, stride: usize, padding: Padding) -> usize {
    match padding {
        Padding::Same => (input + stride - 1) / stride,
        Padding::Valid => (input - window) / stride + 1,
    }
}

fn pad_total(input: usize, window: usize, stride: usize, output: usize) -> usize {
    ((output - 1) * stride + window).saturating_sub(input)
}

/// Maximum over elements of `|a - b| / max(|a|, |b|, 1e-6)`.
///
/// The epsilon guard keeps exact zeros comparable without dividing by zero.
pub fn max_relative_error(a: &Tensor, b: &Tensor) -> Result<f64> {
    if a.shape() != b.shape() {
        return Err(Error::ShapeMismatch(format!(
            "cannot compare tensors of shapes {} and {}",
            a.shape(),
            b.shape()
        )));
    }
    let mut worst = 0.0f64;
    for (&x, &y) in a.data().iter().zip(b.data().iter()) {
        let x = x as f64;
        let y = y as f64;
        let denom = x.abs().max(y.abs()).max(1e-6);
        let err = (x - y).abs() / denom;
        if err > worst {
            worst = err;
        }
    }
    Ok(worst)
}
