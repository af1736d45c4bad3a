//! Benchmark harness: per-algorithm timing of convolution configurations and
//! gigaflops derivation.
//!
//! Gigaflops are always normalized by the direct-convolution flop count
//! (2 flops per multiply-accumulate), whatever algorithm ran. An algorithm
//! that does less arithmetic for the same result, like Winograd, therefore
//! shows up with a proportionally higher rate; the number answers "how fast
//! was this convolution" rather than "how fast did this kernel's own
//! arithmetic run".

mod report;
mod resnet;

pub use report::{
    read_report, rows_to_markdown, write_pivot, write_report, ReportFormat, ReportRow,
    CSV_COLUMNS,
};
pub use resnet::resnet50_configs;

use std::time::Instant;

use crate::conv::{conv2d, Filter};
use crate::error::{Error, Result};
use crate::selector::{supports, Algorithm};
use crate::tensor::{ConvParams, Padding, Shape4D, Tensor};

/// A labelled convolution configuration, built from the canonical tuple order
/// (window, stride, rows, cols, input features, output features) plus batch.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvConfig {
    pub label: String,
    pub params: ConvParams,
}

impl ConvConfig {
    /// Config from the canonical square tuple; padding is `Same`, which is
    /// what every convolution in the built-in suite uses.
    pub fn from_tuple(
        label: impl Into<String>,
        window: usize,
        stride: usize,
        rows: usize,
        cols: usize,
        cin: usize,
        cout: usize,
        batch: usize,
    ) -> Result<Self> {
        let params = ConvParams::square(
            window,
            stride,
            Padding::Same,
            Shape4D::new(batch, rows, cols, cin)?,
            cout,
        )?;
        Ok(ConvConfig { label: label.into(), params })
    }
}

/// One timed (config, algorithm) measurement.
#[derive(Debug, Clone, PartialEq)]
pub struct BenchResult {
    pub config: ConvConfig,
    pub algorithm: Algorithm,
    pub reps: usize,
    pub warmups: usize,
    pub best_time_ns: u64,
    pub mean_time_ns: u64,
    pub flops: u64,
    /// `flops / best_time_seconds / 1e9`.
    pub gflops: f64,
}

fn try_alloc(count: usize, what: &str, label: &str) -> Result<Vec<f32>> {
    let mut buffer: Vec<f32> = Vec::new();
    buffer
        .try_reserve_exact(count)
        .map_err(|_| Error::Resource(format!("{what} of benchmark `{label}` ({count} elements)")))?;
    buffer.resize(count, 0.0);
    Ok(buffer)
}

/// Time `alg` on `config`: `warmups` untimed executions, then `reps` timed
/// ones on a monotonic clock, reporting best and mean.
///
/// Inputs are seeded once per call, so identical `(config, seed)` runs
/// consume bitwise-identical tensors. Measurements run serially on the
/// calling thread; the kernel may use its internal parallelism.
pub fn run_bench(
    config: &ConvConfig,
    alg: Algorithm,
    reps: usize,
    warmups: usize,
    seed: u64,
) -> Result<BenchResult> {
    let params = &config.params;
    params.validate()?;
    if reps == 0 {
        return Err(Error::InvalidParams("reps must be >= 1".into()));
    }
    if !supports(alg, params) {
        return Err(Error::IncompatibleAlgorithm {
            algorithm: alg,
            params: format!("{} ({})", config.label, params),
        });
    }
    let flops = params.flop_count()?;

    let mut input = Tensor::from_vec(
        params.input,
        try_alloc(params.input.element_count()?, "input", &config.label)?,
    )?;
    input.fill_random(seed);

    let filter_shape = Shape4D::new(
        params.window_rows,
        params.window_cols,
        params.input.channels,
        params.features,
    )?;
    let mut filter = Filter::from_vec(
        params.window_rows,
        params.window_cols,
        params.input.channels,
        params.features,
        try_alloc(filter_shape.element_count()?, "filter", &config.label)?,
    )?;
    filter.fill_random(seed.wrapping_add(1));

    for _ in 0..warmups {
        std::hint::black_box(conv2d(alg, &input, &filter, params)?);
    }

    let mut best_time_ns = u64::MAX;
    let mut total_ns: u128 = 0;
    for _ in 0..reps {
        let start = Instant::now();
        std::hint::black_box(conv2d(alg, &input, &filter, params)?);
        let elapsed = start.elapsed().as_nanos();
        let elapsed_ns = u64::try_from(elapsed).unwrap_or(u64::MAX).max(1);
        best_time_ns = best_time_ns.min(elapsed_ns);
        total_ns += elapsed_ns as u128;
    }
    let mean_time_ns = u64::try_from(total_ns / reps as u128).unwrap_or(u64::MAX);
    let gflops = flops as f64 / best_time_ns as f64;

    Ok(BenchResult {
        config: config.clone(),
        algorithm: alg,
        reps,
        warmups,
        best_time_ns,
        mean_time_ns,
        flops,
        gflops,
    })
}
