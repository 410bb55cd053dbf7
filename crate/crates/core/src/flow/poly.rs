//! Per-pixel quadratic polynomial expansion by weighted least squares.

use rayon::prelude::*;

use crate::filters::{correlate_cols, correlate_rows, gaussian_kernel};
use crate::frame::Plane;
use crate::scalar::Real;

/// Local model `f(x) ≈ xᵀAx + bᵀx + c` around every pixel.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Quadratic<T> {
    pub c: T,
    pub b: [T; 2],
    /// Symmetric: `[a_xx, a_xy, a_yy]`.
    pub a: [T; 3],
}

#[derive(Debug, Clone, PartialEq)]
pub struct PolyCoeffs<T> {
    pub width: usize,
    pub height: usize,
    pub data: Vec<Quadratic<T>>,
}

impl<T: Real> PolyCoeffs<T> {
    pub fn at(&self, x: usize, y: usize) -> &Quadratic<T> {
        &self.data[y * self.width + x]
    }

    /// Bilinear interpolation of `A` and `b` at a real position, edges replicated.
    pub(crate) fn sample(&self, x: T, y: T) -> ([T; 3], [T; 2]) {
        let (w, h) = (self.width as isize, self.height as isize);
        let (x0, y0) = (x.floor(), y.floor());
        let (fx, fy) = (x - x0, y - y0);
        let xi = x0.to_isize().unwrap_or(0);
        let yi = y0.to_isize().unwrap_or(0);
        let idx = |xx: isize, yy: isize| {
            (yy.clamp(0, h - 1) * w + xx.clamp(0, w - 1)) as usize
        };
        let one = T::one();
        let taps = [
            (idx(xi, yi), (one - fx) * (one - fy)),
            (idx(xi + 1, yi), fx * (one - fy)),
            (idx(xi, yi + 1), (one - fx) * fy),
            (idx(xi + 1, yi + 1), fx * fy),
        ];
        let mut a = [T::zero(); 3];
        let mut b = [T::zero(); 2];
        for (i, wt) in taps {
            let q = &self.data[i];
            for k in 0..3 {
                a[k] += wt * q.a[k];
            }
            b[0] += wt * q.b[0];
            b[1] += wt * q.b[1];
        }
        (a, b)
    }
}

/// Inverse of a small dense matrix by Gauss-Jordan elimination with partial pivoting.
fn invert6(m: [[f64; 6]; 6]) -> [[f64; 6]; 6] {
    let mut a = m;
    let mut inv = [[0.0; 6]; 6];
    for (i, row) in inv.iter_mut().enumerate() {
        row[i] = 1.0;
    }
    for col in 0..6 {
        let pivot = (col..6)
            .max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))
            .unwrap();
        a.swap(col, pivot);
        inv.swap(col, pivot);
        let p = a[col][col];
        for k in 0..6 {
            a[col][k] /= p;
            inv[col][k] /= p;
        }
        for r in 0..6 {
            if r != col {
                let f = a[r][col];
                if f != 0.0 {
                    for k in 0..6 {
                        a[r][k] -= f * a[col][k];
                        inv[r][k] -= f * inv[col][k];
                    }
                }
            }
        }
    }
    inv
}

/// Fits the quadratic model over a Gaussian-weighted `poly_n`x`poly_n`
/// neighborhood of every pixel. The neighborhood sums are separable
/// correlations; edges are replicated.
pub fn polynomial_expansion<T: Real>(plane: &Plane<T>, poly_n: usize, poly_sigma: f64) -> PolyCoeffs<T> {
    let half = poly_n / 2;
    let g64 = gaussian_kernel::<f64>(poly_sigma, half);
    let offsets: Vec<f64> = (0..=2 * half).map(|i| i as f64 - half as f64).collect();

    // basis order: 1, x, y, x², y², xy
    let basis = |x: f64, y: f64| [1.0, x, y, x * x, y * y, x * y];
    let mut gram = [[0.0; 6]; 6];
    for (j, &y) in offsets.iter().enumerate() {
        for (i, &x) in offsets.iter().enumerate() {
            let wgt = g64[i] * g64[j];
            let phi = basis(x, y);
            for k in 0..6 {
                for l in 0..6 {
                    gram[k][l] += wgt * phi[k] * phi[l];
                }
            }
        }
    }
    let ginv = invert6(gram);
    let ginv: Vec<[T; 6]> = ginv.iter().map(|r| r.map(T::lit)).collect();

    let k0: Vec<T> = g64.iter().map(|&v| T::lit(v)).collect();
    let k1: Vec<T> = g64.iter().zip(&offsets).map(|(&g, &x)| T::lit(g * x)).collect();
    let k2: Vec<T> = g64.iter().zip(&offsets).map(|(&g, &x)| T::lit(g * x * x)).collect();

    let r0 = correlate_rows(plane, &k0);
    let r1 = correlate_rows(plane, &k1);
    let r2 = correlate_rows(plane, &k2);
    let moments = [
        correlate_cols(&r0, &k0),
        correlate_cols(&r1, &k0),
        correlate_cols(&r0, &k1),
        correlate_cols(&r2, &k0),
        correlate_cols(&r0, &k2),
        correlate_cols(&r1, &k1),
    ];

    let n = plane.data.len();
    let data: Vec<Quadratic<T>> = (0..n)
        .into_par_iter()
        .map(|i| {
            let r: [T; 6] = std::array::from_fn(|k| moments[k].data[i]);
            let c: [T; 6] = std::array::from_fn(|k| {
                ginv[k].iter().zip(&r).fold(T::zero(), |acc, (&g, &v)| acc + g * v)
            });
            Quadratic {
                c: c[0],
                b: [c[1], c[2]],
                a: [c[3], c[5] * T::lit(0.5), c[4]],
            }
        })
        .collect();
    PolyCoeffs {
        width: plane.width,
        height: plane.height,
        data,
    }
}
