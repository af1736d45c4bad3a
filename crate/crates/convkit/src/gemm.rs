//! Row-major matrix multiplication: a 64-bit-accumulating naive oracle and a
//! cache-blocked f32 implementation with a register micro-tile.
//!
//! The blocked path is what the im2col, matmul and Winograd convolution
//! algorithms run on. Edge tiles are handled by shortening the loops, never by
//! padding, so the blocked result covers exactly the same elements as the
//! oracle. For a fixed blocking the accumulation order is fixed (k ascending
//! within a block, blocks ascending), which makes results reproducible.

use rayon::prelude::*;

use crate::error::{Error, Result};

/// Dense row-major `f32` matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f32>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix { rows, cols, data: vec![0.0; rows * cols] }
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<f32>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::DimensionMismatch(format!(
                "{rows}x{cols} matrix needs {} elements, buffer holds {}",
                rows * cols,
                data.len()
            )));
        }
        Ok(Matrix { rows, cols, data })
    }

    /// Identity matrix of order `n`.
    pub fn identity(n: usize) -> Self {
        let mut m = Matrix::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = 1.0;
        }
        m
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
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
    pub fn get(&self, i: usize, j: usize) -> f32 {
        self.data[i * self.cols + j]
    }
}

/// Cache-block and register-tile extents of the blocked GEMM.
///
/// `mc`/`nc`/`kc` bound the panel of C rows, C columns and the shared
/// dimension worked on at a time; `mr` x `nr` is the accumulator tile kept in
/// registers by the inner kernel.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GemmBlocking {
    pub mc: usize,
    pub nc: usize,
    pub kc: usize,
    pub mr: usize,
    pub nr: usize,
}

impl GemmBlocking {
    pub fn new(mc: usize, nc: usize, kc: usize, mr: usize, nr: usize) -> Result<Self> {
        let b = GemmBlocking { mc, nc, kc, mr, nr };
        b.validate()?;
        Ok(b)
    }

    pub fn validate(&self) -> Result<()> {
        if self.mc == 0 || self.nc == 0 || self.kc == 0 || self.mr == 0 || self.nr == 0 {
            return Err(Error::InvalidParams("blocking extents must be >= 1".into()));
        }
        if self.mr > self.mc || self.nr > self.nc {
            return Err(Error::InvalidParams(format!(
                "register tile {}x{} must fit in cache block {}x{}",
                self.mr, self.nr, self.mc, self.nc
            )));
        }
        Ok(())
    }
}

impl Default for GemmBlocking {
    fn default() -> Self {
        GemmBlocking { mc: 64, nc: 128, kc: 128, mr: 4, nr: 8 }
    }
}

fn check_dims(a: &Matrix, b: &Matrix) -> Result<()> {
    if a.cols != b.rows {
        return Err(Error::DimensionMismatch(format!(
            "cannot multiply {}x{} by {}x{}",
            a.rows, a.cols, b.rows, b.cols
        )));
    }
    Ok(())
}

/// Reference product `C[i,j] = sum_k A[i,k] * B[k,j]` with 64-bit accumulation.
pub fn gemm_naive(a: &Matrix, b: &Matrix) -> Result<Matrix> {
    check_dims(a, b)?;
    let (m, k, n) = (a.rows, a.cols, b.cols);
    let mut c = Matrix::zeros(m, n);
    for i in 0..m {
        for j in 0..n {
            let mut acc = 0.0f64;
            for p in 0..k {
                acc += a.data[i * k + p] as f64 * b.data[p * n + j] as f64;
            }
            c.data[i * n + j] = acc as f32;
        }
    }
    Ok(c)
}

/// Cache-blocked product; agrees with [`gemm_naive`] within 1e-5 relative
/// error for inputs in `[-1, 1]`.
pub fn gemm_blocked(a: &Matrix, b: &Matrix, blocking: &GemmBlocking) -> Result<Matrix> {
    check_dims(a, b)?;
    blocking.validate()?;
    let mut c = Matrix::zeros(a.rows, b.cols);
    gemm_blocked_into(&a.data, &b.data, &mut c.data, a.rows, a.cols, b.cols, blocking);
    Ok(c)
}

/// Slice-level blocked GEMM used by the convolution paths to avoid copies.
///
/// Overwrites `c` (length `m * n`) with the product. Accumulation runs in
/// 64-bit — a register micro-tile per k-block, gathered into an f64 panel
/// across k-blocks — and each output element is rounded to 32-bit exactly
/// once, like the naive oracle. Row panels of C are independent, so they are
/// processed in parallel; every element sees the same accumulation order
/// regardless of the parallel degree.
pub(crate) fn gemm_blocked_into(
    a: &[f32],
    b: &[f32],
    c: &mut [f32],
    m: usize,
    k: usize,
    n: usize,
    blocking: &GemmBlocking,
) {
    debug_assert_eq!(a.len(), m * k);
    debug_assert_eq!(b.len(), k * n);
    debug_assert_eq!(c.len(), m * n);
    let &GemmBlocking { mc, nc, kc, mr, nr } = blocking;

    c.par_chunks_mut(mc * n)
        .zip(a.par_chunks(mc * k))
        .for_each(|(c_panel, a_panel)| {
            let m_panel = c_panel.len() / n;
            let mut acc = vec![0.0f64; mr * nr];
            let mut panel = vec![0.0f64; m_panel * nc.min(n.max(1))];
            for jc in (0..n).step_by(nc) {
                let nb = nc.min(n - jc);
                panel[..m_panel * nb].fill(0.0);
                for pc in (0..k).step_by(kc) {
                    let kb = kc.min(k - pc);
                    for jr in (0..nb).step_by(nr) {
                        let nr_eff = nr.min(nb - jr);
                        let col0 = jc + jr;
                        for ir in (0..m_panel).step_by(mr) {
                            let mr_eff = mr.min(m_panel - ir);
                            acc.fill(0.0);
                            for kk in 0..kb {
                                let b_row = &b[(pc + kk) * n + col0..(pc + kk) * n + col0 + nr_eff];
                                for i in 0..mr_eff {
                                    let a_val = a_panel[(ir + i) * k + pc + kk] as f64;
                                    let acc_row = &mut acc[i * nr..i * nr + nr_eff];
                                    for (av, &bv) in acc_row.iter_mut().zip(b_row) {
                                        *av += a_val * bv as f64;
                                    }
                                }
                            }
                            for i in 0..mr_eff {
                                let dst = (ir + i) * nb + jr;
                                let panel_row = &mut panel[dst..dst + nr_eff];
                                for (pv, &av) in panel_row.iter_mut().zip(&acc[i * nr..]) {
                                    *pv += av;
                                }
                            }
                        }
                    }
                }
                for i in 0..m_panel {
                    for j in 0..nb {
                        c_panel[i * n + jc + j] = panel[i * nb + j] as f32;
                    }
                }
            }
        });
}

/// f64 variant backing the Winograd product stage, which keeps its
/// transformed operands in 64-bit end to end. Overwrites `c`.
pub(crate) fn gemm_blocked_into_f64(
    a: &[f64],
    b: &[f64],
    c: &mut [f64],
    m: usize,
    k: usize,
    n: usize,
    blocking: &GemmBlocking,
) {
    debug_assert_eq!(a.len(), m * k);
    debug_assert_eq!(b.len(), k * n);
    debug_assert_eq!(c.len(), m * n);
    let &GemmBlocking { mc, nc, kc, mr, nr } = blocking;

    c.par_chunks_mut(mc * n)
        .zip(a.par_chunks(mc * k))
        .for_each(|(c_panel, a_panel)| {
            let m_panel = c_panel.len() / n;
            let mut acc = vec![0.0f64; mr * nr];
            for slot in c_panel.iter_mut() {
                *slot = 0.0;
            }
            for jc in (0..n).step_by(nc) {
                let nb = nc.min(n - jc);
                for pc in (0..k).step_by(kc) {
                    let kb = kc.min(k - pc);
                    for jr in (0..nb).step_by(nr) {
                        let nr_eff = nr.min(nb - jr);
                        let col0 = jc + jr;
                        for ir in (0..m_panel).step_by(mr) {
                            let mr_eff = mr.min(m_panel - ir);
                            acc.fill(0.0);
                            for kk in 0..kb {
                                let b_row = &b[(pc + kk) * n + col0..(pc + kk) * n + col0 + nr_eff];
                                for i in 0..mr_eff {
                                    let a_val = a_panel[(ir + i) * k + pc + kk];
                                    let acc_row = &mut acc[i * nr..i * nr + nr_eff];
                                    for (av, &bv) in acc_row.iter_mut().zip(b_row) {
                                        *av += a_val * bv;
                                    }
                                }
                            }
                            for i in 0..mr_eff {
                                let c_row = &mut c_panel
                                    [(ir + i) * n + col0..(ir + i) * n + col0 + nr_eff];
                                for (cv, &av) in c_row.iter_mut().zip(&acc[i * nr..]) {
                                    *cv += av;
                                }
                            }
                        }
                    }
                }
            }
        });
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tensor::{max_relative_error, Shape4D, Tensor};

    fn random_matrix(rows: usize, cols: usize, seed: u64) -> Matrix {
        let t = Tensor::random(Shape4D::new(1, 1, rows.max(1), cols.max(1)).unwrap(), seed).unwrap();
        Matrix::from_vec(rows, cols, t.into_data()).unwrap()
    }

    fn rel_err(a: &Matrix, b: &Matrix) -> f64 {
        assert_eq!((a.rows(), a.cols()), (b.rows(), b.cols()));
        a.data()
            .iter()
            .zip(b.data())
            .map(|(&x, &y)| {
                let (x, y) = (x as f64, y as f64);
                (x - y).abs() / x.abs().max(y.abs()).max(1e-6)
            })
            .fold(0.0, f64::max)
    }

    #[test]
    fn identity_times_matrix_is_identity_map() {
        let m = random_matrix(2, 5, 11);
        let i2 = Matrix::identity(2);
        assert_eq!(gemm_naive(&i2, &m).unwrap(), m);
    }

    #[test]
    fn one_by_one_product() {
        let a = Matrix::from_vec(1, 1, vec![3.0]).unwrap();
        let b = Matrix::from_vec(1, 1, vec![4.0]).unwrap();
        assert_eq!(gemm_naive(&a, &b).unwrap().data(), &[12.0]);
    }

    #[test]
    fn zero_matrix_annihilates() {
        let z = Matrix::zeros(3, 4);
        let m = random_matrix(4, 2, 5);
        assert!(gemm_naive(&z, &m).unwrap().data().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn dimension_mismatch_is_rejected() {
        let a = Matrix::zeros(2, 3);
        let b = Matrix::zeros(4, 2);
        assert!(gemm_naive(&a, &b).is_err());
        assert!(gemm_blocked(&a, &b, &GemmBlocking::default()).is_err());
    }

    #[test]
    fn blocked_matches_naive_on_odd_sizes() {
        let a = random_matrix(17, 13, 1);
        let b = random_matrix(13, 7, 2);
        let blocking = GemmBlocking::new(8, 8, 8, 4, 4).unwrap();
        let naive = gemm_naive(&a, &b).unwrap();
        let blocked = gemm_blocked(&a, &b, &blocking).unwrap();
        assert!(rel_err(&naive, &blocked) <= 1e-5);
    }

    #[test]
    fn oversized_blocking_degenerates_to_one_block() {
        let a = random_matrix(5, 6, 3);
        let b = random_matrix(6, 4, 4);
        let blocking = GemmBlocking::new(64, 64, 64, 8, 8).unwrap();
        let naive = gemm_naive(&a, &b).unwrap();
        let blocked = gemm_blocked(&a, &b, &blocking).unwrap();
        assert!(rel_err(&naive, &blocked) <= 1e-5);
    }

    #[test]
    fn dot_product_matches_serial_loop() {
        let k = 23;
        let a = random_matrix(1, k, 6);
        let b = random_matrix(k, 1, 7);
        // Independent oracle: plain serial dot product.
        let mut expected = 0.0f64;
        for p in 0..k {
            expected += a.data()[p] as f64 * b.data()[p] as f64;
        }
        let got = gemm_blocked(&a, &b, &GemmBlocking::default()).unwrap();
        let e = (got.data()[0] as f64 - expected).abs()
            / expected.abs().max(got.data()[0].abs() as f64).max(1e-6);
        assert!(e <= 1e-5, "dot product off by {e}");
    }

    #[test]
    fn invalid_blocking_is_rejected() {
        assert!(GemmBlocking::new(0, 1, 1, 1, 1).is_err());
        assert!(GemmBlocking::new(4, 4, 4, 8, 4).is_err());
        assert!(GemmBlocking::new(4, 4, 4, 4, 8).is_err());
    }

    #[test]
    fn result_independent_of_blocking() {
        let a = random_matrix(19, 11, 8);
        let b = random_matrix(11, 9, 9);
        let c1 = gemm_blocked(&a, &b, &GemmBlocking::new(4, 4, 4, 2, 2).unwrap()).unwrap();
        let c2 = gemm_blocked(&a, &b, &GemmBlocking::new(16, 32, 8, 4, 8).unwrap()).unwrap();
        let t1 = Tensor::from_vec(Shape4D::new(1, 1, 19, 9).unwrap(), c1.into_data()).unwrap();
        let t2 = Tensor::from_vec(Shape4D::new(1, 1, 19, 9).unwrap(), c2.into_data()).unwrap();
        assert!(max_relative_error(&t1, &t2).unwrap() <= 1e-5);
    }
}
