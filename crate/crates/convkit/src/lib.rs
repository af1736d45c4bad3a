//! Portable CPU convolution primitives with interchangeable algorithms,
//! empirical autotuning and a gigaflops benchmark harness.
//!
//! The library provides several 2-D convolution implementations that all
//! produce the same numeric results within floating-point tolerance: a scalar
//! reference, a vectorized naive kernel, a register-tiled direct kernel,
//! im2col lowering onto a cache-blocked GEMM, a pointwise matmul fast path,
//! and Winograd minimal filtering for unstrided 3x3 windows. Not every
//! algorithm is compatible with every parameter set; the [`selector`] module
//! knows the rules, resolves ranked selection tables, and can build those
//! tables empirically by timing each candidate ([`selector::autotune`]).
//! The [`bench`] module reproduces per-layer gigaflops measurements over the
//! 26 distinct convolutions of ResNet-50. Max and average [`pooling`] round
//! out the primitives.
//!
//! Tensors are dense `f32` in NHWC layout. Reported gigaflops are always
//! normalized by the direct-convolution flop count (2 flops per
//! multiply-accumulate), so algorithms that do less arithmetic, like
//! Winograd, show proportionally higher rates.
//!
//! ## Examples
//!
//! Each major capability has a runnable example:
//!
//! ```bash
//! cargo run --release --example compare_algorithms   # numeric equivalence
//! cargo run --release --example winograd_multiplies  # arithmetic reduction
//! cargo run --release --example im2col_gemm          # the lowering, step by step
//! cargo run --release --example select_algorithm     # selector tables by hand
//! cargo run --release --example autotune_selector    # empirical tuning
//! cargo run --release --example bench_resnet50       # the benchmark suite
//! cargo run --release --example pooling              # max/average pooling
//! ```
//!
//! The same functionality is scriptable through the thin `convkit` binary
//! (`verify`, `bench`, `tune`, `report` subcommands).

pub mod bench;
pub mod cli;
pub mod conv;
pub mod error;
pub mod gemm;
pub mod pooling;
pub mod selector;
pub mod tensor;
pub mod verify;

pub use error::{Error, Result};
pub use tensor::{max_relative_error, ConvParams, Padding, Shape4D, Tensor};

pub use conv::{
    conv2d, conv2d_im2col, conv2d_matmul, conv2d_naive_vectorized, conv2d_ref, conv2d_tiled,
    conv2d_winograd, im2col, multiply_count, winograd_transform_multiplies, Filter, TileConfig,
};
pub use gemm::{gemm_blocked, gemm_naive, GemmBlocking, Matrix};
pub use pooling::{avg_pool2d, max_pool2d};
pub use selector::{autotune, supports, Algorithm, SelectorTable};
