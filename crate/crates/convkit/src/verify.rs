//! Oracle-equivalence verification: every compatible algorithm against the
//! scalar reference, over fuzzed configurations plus a reduced-size version
//! of the built-in benchmark suite.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::bench::resnet50_configs;
use crate::conv::{conv2d, conv2d_ref, Filter};
use crate::error::Result;
use crate::selector::{supports, Algorithm};
use crate::tensor::{max_relative_error, ConvParams, Padding, Shape4D, Tensor};

/// Relative-error tolerance against the reference for each algorithm.
///
/// Winograd's transform reassociation costs precision, so its bound is
/// looser.
pub fn tolerance(alg: Algorithm) -> f64 {
    match alg {
        Algorithm::Winograd => 1e-4,
        _ => 1e-5,
    }
}

/// The algorithms checked against the reference.
pub const CHECKED_ALGORITHMS: [Algorithm; 5] = [
    Algorithm::NaiveVectorized,
    Algorithm::Tiled,
    Algorithm::Im2col,
    Algorithm::Matmul,
    Algorithm::Winograd,
];

#[derive(Debug, Clone)]
pub struct VerifyOptions {
    pub seed: u64,
    /// Number of fuzzed configurations.
    pub fuzz_cases: usize,
    /// Restrict checking to these algorithms (`None` checks all).
    pub algorithms: Option<Vec<Algorithm>>,
    /// Also run the built-in suite at reduced spatial dims.
    pub include_reduced_suite: bool,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        VerifyOptions {
            seed: 42,
            fuzz_cases: 200,
            algorithms: None,
            include_reduced_suite: true,
        }
    }
}

/// Test hook: adds `delta` to one element of every candidate output before
/// comparison, to prove the tolerance check actually fires.
#[derive(Debug, Clone, Copy)]
pub struct FaultInjection {
    pub delta: f32,
}

#[derive(Debug, Clone)]
pub struct AlgorithmReport {
    pub algorithm: Algorithm,
    pub tolerance: f64,
    pub worst_error: f64,
    pub worst_config: Option<String>,
    pub checks: usize,
}

#[derive(Debug, Clone)]
pub struct VerificationReport {
    pub per_algorithm: Vec<AlgorithmReport>,
    /// One line per breach: config, algorithm and observed error.
    pub failures: Vec<String>,
    pub configs_checked: usize,
}

impl VerificationReport {
    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }
}

/// Sample `count` valid convolution configurations: spatial dims 1..=20,
/// channels and features 1..=32, windows in {1, 3, 5, 7}, strides in {1, 2},
/// both paddings, batch 1..=3.
pub fn sample_fuzz_configs(seed: u64, count: usize) -> Vec<ConvParams> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut configs = Vec::with_capacity(count);
    for _ in 0..count {
        let window = [1usize, 3, 5, 7][rng.gen_range(0..4)];
        let stride = rng.gen_range(1..=2usize);
        let padding = if rng.gen_bool(0.5) { Padding::Same } else { Padding::Valid };
        // Valid padding needs the window to fit.
        let min_dim = if padding == Padding::Valid { window } else { 1 };
        let rows = rng.gen_range(min_dim..=20);
        let cols = rng.gen_range(min_dim..=20);
        let channels = rng.gen_range(1..=32usize);
        let features = rng.gen_range(1..=32usize);
        let batch = rng.gen_range(1..=3usize);
        let input = Shape4D::new(batch, rows, cols, channels).expect("sampled dims are valid");
        let params = ConvParams::square(window, stride, padding, input, features)
            .expect("sampled params are valid");
        configs.push(params);
    }
    configs
}

/// The built-in suite shrunk to verification size: spatial dims divided by 8
/// (but never below the window), batch 1. Channel structure is preserved.
pub fn reduced_suite_configs() -> Result<Vec<ConvParams>> {
    let mut out = Vec::new();
    for config in resnet50_configs(1)? {
        let p = config.params;
        let rows = (p.input.rows / 8).max(p.window_rows);
        let cols = (p.input.cols / 8).max(p.window_cols);
        let input = Shape4D::new(1, rows, cols, p.input.channels)?;
        out.push(ConvParams::square(
            p.window_rows,
            p.stride_rows,
            p.padding,
            input,
            p.features,
        )?);
    }
    Ok(out)
}

/// Run every requested algorithm against the reference on every config;
/// reports worst relative error per algorithm and all tolerance breaches.
pub fn run_verification(
    opts: &VerifyOptions,
    fault: Option<FaultInjection>,
) -> Result<VerificationReport> {
    let mut configs = sample_fuzz_configs(opts.seed, opts.fuzz_cases);
    if opts.include_reduced_suite {
        configs.extend(reduced_suite_configs()?);
    }

    let checked: Vec<Algorithm> = CHECKED_ALGORITHMS
        .iter()
        .copied()
        .filter(|alg| {
            opts.algorithms
                .as_ref()
                .map(|subset| subset.contains(alg))
                .unwrap_or(true)
        })
        .collect();

    let mut reports: Vec<AlgorithmReport> = checked
        .iter()
        .map(|&algorithm| AlgorithmReport {
            algorithm,
            tolerance: tolerance(algorithm),
            worst_error: 0.0,
            worst_config: None,
            checks: 0,
        })
        .collect();
    let mut failures = Vec::new();

    for (idx, params) in configs.iter().enumerate() {
        let input_seed = opts.seed.wrapping_add(1000).wrapping_add(2 * idx as u64);
        let input = Tensor::random(params.input, input_seed)?;
        let filter = Filter::random(
            params.window_rows,
            params.window_cols,
            params.input.channels,
            params.features,
            input_seed.wrapping_add(1),
        )?;
        let reference = conv2d_ref(&input, &filter, params)?;

        for report in reports.iter_mut() {
            if !supports(report.algorithm, params) {
                continue;
            }
            let mut candidate = conv2d(report.algorithm, &input, &filter, params)?;
            if let Some(fault) = fault {
                candidate.data_mut()[0] += fault.delta;
            }
            let err = max_relative_error(&reference, &candidate)?;
            report.checks += 1;
            if err > report.worst_error {
                report.worst_error = err;
                report.worst_config = Some(params.to_string());
            }
            if err > report.tolerance {
                failures.push(format!(
                    "{}: {} exceeded tolerance: error {err:.3e} > {:.0e}",
                    report.algorithm, params, report.tolerance
                ));
            }
        }
    }

    Ok(VerificationReport {
        per_algorithm: reports,
        failures,
        configs_checked: configs.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sampled_configs_are_valid_and_in_bounds() {
        for params in sample_fuzz_configs(7, 50) {
            params.validate().unwrap();
            assert!(params.input.rows <= 20 && params.input.cols <= 20);
            assert!(params.input.channels <= 32 && params.features <= 32);
            assert!(params.input.batch <= 3);
            assert!(matches!(params.window_rows, 1 | 3 | 5 | 7));
            assert!(matches!(params.stride_rows, 1 | 2));
        }
    }

    #[test]
    fn sampling_is_deterministic() {
        assert_eq!(sample_fuzz_configs(3, 20), sample_fuzz_configs(3, 20));
    }

    #[test]
    fn reduced_suite_keeps_channel_structure() {
        let reduced = reduced_suite_configs().unwrap();
        assert_eq!(reduced.len(), 26);
        let full = resnet50_configs(1).unwrap();
        for (small, big) in reduced.iter().zip(&full) {
            assert_eq!(small.input.channels, big.params.input.channels);
            assert_eq!(small.features, big.params.features);
            assert!(small.input.rows <= big.params.input.rows);
            assert!(small.input.rows >= small.window_rows);
        }
    }

    #[test]
    fn small_verification_passes() {
        let opts = VerifyOptions {
            fuzz_cases: 15,
            include_reduced_suite: false,
            ..VerifyOptions::default()
        };
        let report = run_verification(&opts, None).unwrap();
        assert!(report.passed(), "failures: {:?}", report.failures);
        assert!(report.per_algorithm.iter().any(|r| r.checks > 0));
    }

    #[test]
    fn injected_fault_is_caught() {
        let opts = VerifyOptions {
            fuzz_cases: 5,
            include_reduced_suite: false,
            ..VerifyOptions::default()
        };
        let report = run_verification(&opts, Some(FaultInjection { delta: 1e-2 })).unwrap();
        assert!(!report.passed(), "a 1e-2 perturbation must breach tolerance");
    }

    #[test]
    fn algorithm_filter_restricts_checks() {
        let opts = VerifyOptions {
            fuzz_cases: 10,
            include_reduced_suite: false,
            algorithms: Some(vec![Algorithm::Winograd]),
            ..VerifyOptions::default()
        };
        let report = run_verification(&opts, None).unwrap();
        assert_eq!(report.per_algorithm.len(), 1);
        assert_eq!(report.per_algorithm[0].algorithm, Algorithm::Winograd);
        // Only Winograd-compatible configs contribute checks.
        assert!(report.per_algorithm[0].checks <= 10);
    }
}
