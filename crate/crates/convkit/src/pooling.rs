//! Max and average pooling over spatial windows, channels passing through.

use crate::error::Result;
use crate::tensor::{ConvParams, Padding, Shape4D, Tensor};

fn pool_shape(
    input: &Tensor,
    window: (usize, usize),
    stride: (usize, usize),
    padding: Padding,
) -> Result<(ConvParams, Shape4D)> {
    // Reuse the convolution shape algebra; features = channels (passthrough).
    let params = ConvParams::new(
        window.0,
        window.1,
        stride.0,
        stride.1,
        padding,
        input.shape(),
        input.shape().channels,
    )?;
    let out = params.output_shape()?;
    Ok((params, out))
}

fn pool2d(
    input: &Tensor,
    window: (usize, usize),
    stride: (usize, usize),
    padding: Padding,
    mut reduce: impl FnMut(&[f32]) -> f32,
) -> Result<Tensor> {
    let (params, out_shape) = pool_shape(input, window, stride, padding)?;
    let (pad_r, pad_c) = params.pad_before();
    let in_shape = input.shape();
    let mut out = Tensor::zeros(out_shape)?;
    let mut window_values = Vec::with_capacity(window.0 * window.1);
    for n in 0..out_shape.batch {
        for ho in 0..out_shape.rows {
            for wo in 0..out_shape.cols {
                for c in 0..out_shape.channels {
                    window_values.clear();
                    for kh in 0..window.0 {
                        let ih = (ho * stride.0 + kh) as isize - pad_r as isize;
                        if ih < 0 || ih >= in_shape.rows as isize {
                            continue;
                        }
                        for kw in 0..window.1 {
                            let iw = (wo * stride.1 + kw) as isize - pad_c as isize;
                            if iw < 0 || iw >= in_shape.cols as isize {
                                continue;
                            }
                            window_values.push(input.get(n, ih as usize, iw as usize, c));
                        }
                    }
                    debug_assert!(
                        !window_values.is_empty(),
                        "every pooling window overlaps the input"
                    );
                    out.set(n, ho, wo, c, reduce(&window_values));
                }
            }
        }
    }
    Ok(out)
}

/// Per-channel maximum over each window.
///
/// Under `Same` padding, positions outside the input are simply ignored:
/// border windows reduce over the in-bounds elements only.
pub fn max_pool2d(
    input: &Tensor,
    window: (usize, usize),
    stride: (usize, usize),
    padding: Padding,
) -> Result<Tensor> {
    pool2d(input, window, stride, padding, |values| {
        values.iter().copied().fold(f32::NEG_INFINITY, f32::max)
    })
}

/// Per-channel mean over each window, dividing by the count of in-bounds
/// elements so padded borders are not attenuated.
pub fn avg_pool2d(
    input: &Tensor,
    window: (usize, usize),
    stride: (usize, usize),
    padding: Padding,
) -> Result<Tensor> {
    pool2d(input, window, stride, padding, |values| {
        let sum: f64 = values.iter().map(|&v| v as f64).sum();
        (sum / values.len() as f64) as f32
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn shape(n: usize, h: usize, w: usize, c: usize) -> Shape4D {
        Shape4D::new(n, h, w, c).unwrap()
    }

    fn quad() -> Tensor {
        Tensor::from_vec(shape(1, 2, 2, 1), vec![1.0, 2.0, 3.0, 4.0]).unwrap()
    }

    #[test]
    fn max_pool_2x2_valid() {
        let out = max_pool2d(&quad(), (2, 2), (2, 2), Padding::Valid).unwrap();
        assert_eq!(out.shape(), shape(1, 1, 1, 1));
        assert_eq!(out.data(), &[4.0]);
    }

    #[test]
    fn avg_pool_2x2_valid() {
        let out = avg_pool2d(&quad(), (2, 2), (2, 2), Padding::Valid).unwrap();
        assert_eq!(out.data(), &[2.5]);
    }

    #[test]
    fn window_one_is_identity() {
        let input = Tensor::random(shape(1, 5, 4, 3), 7).unwrap();
        let max = max_pool2d(&input, (1, 1), (1, 1), Padding::Valid).unwrap();
        let avg = avg_pool2d(&input, (1, 1), (1, 1), Padding::Valid).unwrap();
        assert_eq!(max, input);
        assert_eq!(avg, input);
    }

    #[test]
    fn constant_input_pools_to_constant() {
        for padding in [Padding::Same, Padding::Valid] {
            let input = Tensor::from_vec(shape(1, 5, 5, 2), vec![0.75; 50]).unwrap();
            let max = max_pool2d(&input, (3, 3), (2, 2), padding).unwrap();
            let avg = avg_pool2d(&input, (3, 3), (2, 2), padding).unwrap();
            assert!(max.data().iter().all(|&v| v == 0.75));
            // In-bounds divisor: the padded corners still average to the
            // constant instead of being dragged toward zero.
            assert!(avg.data().iter().all(|&v| v == 0.75));
        }
    }

    #[test]
    fn same_padding_never_produces_neg_infinity() {
        let input = Tensor::from_vec(shape(1, 3, 3, 1), vec![-1.0; 9]).unwrap();
        let out = max_pool2d(&input, (3, 3), (2, 2), Padding::Same).unwrap();
        assert!(out.data().iter().all(|&v| v == -1.0));
    }

    #[test]
    fn max_pool_outputs_come_from_their_window() {
        let input = Tensor::random(shape(2, 6, 5, 3), 17).unwrap();
        let out = max_pool2d(&input, (3, 3), (2, 2), Padding::Same).unwrap();
        let (params, _) = pool_shape(&input, (3, 3), (2, 2), Padding::Same).unwrap();
        let (pad_r, pad_c) = params.pad_before();
        let out_shape = out.shape();
        for n in 0..out_shape.batch {
            for ho in 0..out_shape.rows {
                for wo in 0..out_shape.cols {
                    for c in 0..out_shape.channels {
                        let v = out.get(n, ho, wo, c);
                        let mut found = false;
                        for kh in 0..3usize {
                            for kw in 0..3usize {
                                let ih = (ho * 2 + kh) as isize - pad_r as isize;
                                let iw = (wo * 2 + kw) as isize - pad_c as isize;
                                if ih >= 0
                                    && (ih as usize) < 6
                                    && iw >= 0
                                    && (iw as usize) < 5
                                    && input.get(n, ih as usize, iw as usize, c) == v
                                {
                                    found = true;
                                }
                            }
                        }
                        assert!(found, "output {v} not present in its window");
                    }
                }
            }
        }
    }

    #[test]
    fn valid_window_larger_than_input_is_rejected() {
        let input = Tensor::random(shape(1, 2, 2, 1), 3).unwrap();
        assert!(max_pool2d(&input, (3, 3), (1, 1), Padding::Valid).is_err());
        assert!(avg_pool2d(&input, (3, 3), (1, 1), Padding::Valid).is_err());
    }
}
