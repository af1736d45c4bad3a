//! Pointwise (1x1, unstrided) convolution as a single matrix multiply.

use crate::error::Result;
use crate::gemm::{gemm_blocked_into, GemmBlocking};
use crate::selector::{supports, Algorithm};
use crate::tensor::{ConvParams, Tensor};

use super::{check_conv_args, incompatible, Filter};

/// 1x1 stride-1 convolution: the NHWC input viewed as an
/// `(N * H * W) x C` matrix times the `C x F` filter, with no data movement
/// beyond the view.
pub fn conv2d_matmul(
    input: &Tensor,
    filter: &Filter,
    params: &ConvParams,
    blocking: &GemmBlocking,
) -> Result<Tensor> {
    if !supports(Algorithm::Matmul, params) {
        return Err(incompatible(Algorithm::Matmul, params));
    }
    let out_shape = check_conv_args(input, filter, params)?;
    blocking.validate()?;
    let positions = out_shape.batch * out_shape.rows * out_shape.cols;
    let channels = input.shape().channels;

    let mut out = Tensor::zeros(out_shape)?;
    gemm_blocked_into(
        input.data(),
        filter.data(),
        out.data_mut(),
        positions,
        channels,
        params.features,
        blocking,
    );
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::conv::conv2d_ref;
    use crate::error::Error;
    use crate::gemm::Matrix;
    use crate::tensor::{max_relative_error, Padding, Shape4D};

    fn shape(n: usize, h: usize, w: usize, c: usize) -> Shape4D {
        Shape4D::new(n, h, w, c).unwrap()
    }

    #[test]
    fn identity_filter_preserves_input() {
        let params =
            ConvParams::square(1, 1, Padding::Same, shape(1, 6, 7, 5), 5).unwrap();
        let input = Tensor::random(params.input, 81).unwrap();
        let filter = Filter::from_vec(1, 1, 5, 5, Matrix::identity(5).into_data()).unwrap();
        let out = conv2d_matmul(&input, &filter, &params, &GemmBlocking::default()).unwrap();
        assert_eq!(out, input);
    }

    #[test]
    fn matches_oracle_on_wide_channels() {
        let params =
            ConvParams::square(1, 1, Padding::Same, shape(1, 12, 12, 32), 48).unwrap();
        let input = Tensor::random(params.input, 82).unwrap();
        let filter = Filter::random(1, 1, 32, 48, 83).unwrap();
        let oracle = conv2d_ref(&input, &filter, &params).unwrap();
        let fast = conv2d_matmul(&input, &filter, &params, &GemmBlocking::default()).unwrap();
        assert!(max_relative_error(&oracle, &fast).unwrap() <= 1e-5);
    }

    #[test]
    fn non_pointwise_params_rejected() {
        let params =
            ConvParams::square(3, 1, Padding::Same, shape(1, 6, 6, 2), 2).unwrap();
        let input = Tensor::random(params.input, 84).unwrap();
        let filter = Filter::random(3, 3, 2, 2, 85).unwrap();
        assert!(matches!(
            conv2d_matmul(&input, &filter, &params, &GemmBlocking::default()),
            Err(Error::IncompatibleAlgorithm { .. })
        ));

        let strided =
            ConvParams::square(1, 2, Padding::Same, shape(1, 6, 6, 2), 2).unwrap();
        let input = Tensor::random(strided.input, 86).unwrap();
        let filter = Filter::random(1, 1, 2, 2, 87).unwrap();
        assert!(conv2d_matmul(&input, &filter, &strided, &GemmBlocking::default()).is_err());
    }
}
