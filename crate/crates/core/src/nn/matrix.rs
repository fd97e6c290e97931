use alloc::vec;
use alloc::vec::Vec;

/// Dense row-major `f64` matrix.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Matrix {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<f64>) -> Self {
        assert_eq!(data.len(), rows * cols, "data length does not match {rows}x{cols}");
        Self { rows, cols, data }
    }

    pub fn row_vector(data: Vec<f64>) -> Self {
        Self {
            rows: 1,
            cols: data.len(),
            data,
        }
    }

    pub fn scalar(v: f64) -> Self {
        Self::from_vec(1, 1, vec![v])
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.cols + c]
    }

    #[inline]
    pub fn set(&mut self, r: usize, c: usize, v: f64) {
        self.data[r * self.cols + c] = v;
    }

    #[inline]
    pub fn row(&self, r: usize) -> &[f64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    #[inline]
    pub fn row_mut(&mut self, r: usize) -> &mut [f64] {
        &mut self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn add_assign(&mut self, other: &Matrix) {
        debug_assert_eq!(self.shape(), other.shape());
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += b;
        }
    }

    pub fn scale_assign(&mut self, s: f64) {
        self.data.iter_mut().for_each(|x| *x *= s);
    }

    pub fn sum_sq(&self) -> f64 {
        self.data.iter().map(|x| x * x).sum()
    }

    pub fn max_abs_diff(&self, other: &Matrix) -> f64 {
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| libm::fabs(a - b))
            .fold(0.0, f64::max)
    }
}

/// `c = beta * c + alpha * op(a) * op(b)` where `op` optionally transposes.
/// Shapes are those of the stored (untransposed) matrices.
pub(crate) fn gemm(
    alpha: f64,
    a: &Matrix,
    trans_a: bool,
    b: &Matrix,
    trans_b: bool,
    beta: f64,
    c: &mut Matrix,
) {
    let (m, k) = if trans_a { (a.cols, a.rows) } else { (a.rows, a.cols) };
    let (kb, n) = if trans_b { (b.cols, b.rows) } else { (b.rows, b.cols) };
    assert_eq!(k, kb, "inner dimensions differ");
    assert_eq!((c.rows, c.cols), (m, n), "output shape differs");
    if m == 0 || n == 0 {
        return;
    }
    if k == 0 {
        c.scale_assign(beta);
        return;
    }
    if m * k * n <= SMALL_GEMM {
        small_gemm(alpha, a, trans_a, b, trans_b, beta, c, k);
        return;
    }
    let (rsa, csa) = if trans_a { (1, a.cols) } else { (a.cols, 1) };
    let (rsb, csb) = if trans_b { (1, b.cols) } else { (b.cols, 1) };
    // SAFETY: strides and extents are derived from the matrices' own shapes,
    // which were checked above, so every access stays inside the buffers.
    unsafe {
        matrixmultiply::dgemm(
            m,
            k,
            n,
            alpha,
            a.data.as_ptr(),
            rsa as isize,
            csa as isize,
            b.data.as_ptr(),
            rsb as isize,
            csb as isize,
            beta,
            c.data.as_mut_ptr(),
            c.cols as isize,
            1,
        );
    }
}

/// Below this many multiply-adds, packing overhead outweighs the blocked kernel.
const SMALL_GEMM: usize = 1 << 15;

#[allow(clippy::too_many_arguments)]
fn small_gemm(alpha: f64, a: &Matrix, trans_a: bool, b: &Matrix, trans_b: bool, beta: f64, c: &mut Matrix, k: usize) {
    if beta != 1.0 {
        c.scale_assign(beta);
    }
    let n = c.cols;
    match (trans_a, trans_b) {
        (false, false) => {
            for i in 0..c.rows {
                let out = &mut c.data[i * n..(i + 1) * n];
                for (kk, &x) in a.row(i).iter().enumerate() {
                    let s = alpha * x;
                    for (o, y) in out.iter_mut().zip(b.row(kk)) {
                        *o += s * y;
                    }
                }
            }
        }
        (false, true) => {
            for i in 0..c.rows {
                let ar = a.row(i);
                for j in 0..n {
                    let dot: f64 = ar.iter().zip(b.row(j)).map(|(x, y)| x * y).sum();
                    c.data[i * n + j] += alpha * dot;
                }
            }
        }
        (true, false) => {
            for kk in 0..k {
                let br = b.row(kk);
                for (i, &x) in a.row(kk).iter().enumerate() {
                    let s = alpha * x;
                    for (o, y) in c.data[i * n..(i + 1) * n].iter_mut().zip(br) {
                        *o += s * y;
                    }
                }
            }
        }
        (true, true) => {
            for i in 0..c.rows {
                for j in 0..n {
                    let dot: f64 = (0..k).map(|kk| a.data[kk * a.cols + i] * b.data[j * b.cols + kk]).sum();
                    c.data[i * n + j] += alpha * dot;
                }
            }
        }
    }
}

pub(crate) fn matmul(a: &Matrix, trans_a: bool, b: &Matrix, trans_b: bool) -> Matrix {
    let m = if trans_a { a.cols } else { a.rows };
    let n = if trans_b { b.rows } else { b.cols };
    let mut c = Matrix::zeros(m, n);
    gemm(1.0, a, trans_a, b, trans_b, 0.0, &mut c);
    c
}
