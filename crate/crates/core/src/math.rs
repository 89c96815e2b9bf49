//! Scalar and small-vector math helpers.
//!
//! Transcendentals route through `libm` so the crate stays `no_std` and the
//! std/no_std builds produce identical bit patterns.

use alloc::vec;
use alloc::vec::Vec;

#[inline]
pub fn exp(x: f64) -> f64 {
    libm::exp(x)
}

#[inline]
pub fn ln(x: f64) -> f64 {
    libm::log(x)
}

#[inline]
pub fn sqrt(x: f64) -> f64 {
    libm::sqrt(x)
}

#[inline]
pub fn tanh(x: f64) -> f64 {
    libm::tanh(x)
}

#[inline]
pub fn abs(x: f64) -> f64 {
    libm::fabs(x)
}

/// Logistic function, stable for large |x|.
#[inline]
pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + exp(-x))
    } else {
        let e = exp(x);
        e / (1.0 + e)
    }
}

#[inline]
pub fn clamp(x: f64, lo: f64, hi: f64) -> f64 {
    if x < lo {
        lo
    } else if x > hi {
        hi
    } else {
        x
    }
}

#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let mut acc = 0.0;
    for (x, y) in a.iter().zip(b) {
        acc += x * y;
    }
    acc
}

#[inline]
pub fn norm(a: &[f64]) -> f64 {
    sqrt(dot(a, a))
}

/// Scales `a` to unit Euclidean norm in place. Returns false if the norm is
/// numerically zero and the vector was left untouched.
pub fn normalize(a: &mut [f64]) -> bool {
    let n = norm(a);
    if n < 1e-12 {
        return false;
    }
    for x in a.iter_mut() {
        *x /= n;
    }
    true
}

/// out = M x, with M stored row-major as rows × cols.
pub fn matvec(matrix: &[f64], rows: usize, cols: usize, x: &[f64], out: &mut [f64]) {
    debug_assert_eq!(matrix.len(), rows * cols);
    debug_assert_eq!(x.len(), cols);
    debug_assert_eq!(out.len(), rows);
    for (r, o) in out.iter_mut().enumerate() {
        *o = dot(&matrix[r * cols..(r + 1) * cols], x);
    }
}

/// out += Mᵀ y, with M stored row-major as rows × cols (so out has cols entries).
pub fn matvec_transpose_add(matrix: &[f64], rows: usize, cols: usize, y: &[f64], out: &mut [f64]) {
    debug_assert_eq!(matrix.len(), rows * cols);
    debug_assert_eq!(y.len(), rows);
    debug_assert_eq!(out.len(), cols);
    for r in 0..rows {
        let yr = y[r];
        if yr == 0.0 {
            continue;
        }
        let row = &matrix[r * cols..(r + 1) * cols];
        for (o, m) in out.iter_mut().zip(row) {
            *o += yr * m;
        }
    }
}

/// out += y ⊗ x (outer product), with out stored row-major as len(y) × len(x).
pub fn outer_add(y: &[f64], x: &[f64], out: &mut [f64]) {
    debug_assert_eq!(out.len(), y.len() * x.len());
    for (r, yr) in y.iter().enumerate() {
        if *yr == 0.0 {
            continue;
        }
        let row = &mut out[r * x.len()..(r + 1) * x.len()];
        for (o, xv) in row.iter_mut().zip(x) {
            *o += yr * xv;
        }
    }
}

/// out += a * x.
pub fn axpy(a: f64, x: &[f64], out: &mut [f64]) {
    debug_assert_eq!(x.len(), out.len());
    for (o, xv) in out.iter_mut().zip(x) {
        *o += a * xv;
    }
}

/// Kahan-compensated accumulator. Loss sums and softmax denominators go
/// through this so results stay reduction-order-exact to within an ulp or
/// two, which the finite-difference gradient check depends on.
#[derive(Clone, Copy, Default)]
pub struct KahanSum {
    sum: f64,
    carry: f64,
}

impl KahanSum {
    pub fn add(&mut self, x: f64) {
        let y = x - self.carry;
        let t = self.sum + y;
        self.carry = (t - self.sum) - y;
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum
    }
}

pub fn kahan_sum(xs: impl Iterator<Item = f64>) -> f64 {
    let mut acc = KahanSum::default();
    for x in xs {
        acc.add(x);
    }
    acc.value()
}

/// Numerically stable softmax over the full logit vector.
pub fn softmax(logits: &[f64]) -> Vec<f64> {
    debug_assert!(!logits.is_empty());
    let mut max = f64::NEG_INFINITY;
    for &l in logits {
        if l > max {
            max = l;
        }
    }
    let mut out = vec![0.0; logits.len()];
    let mut denom = KahanSum::default();
    for (o, &l) in out.iter_mut().zip(logits) {
        let e = exp(l - max);
        *o = e;
        denom.add(e);
    }
    let denom = denom.value();
    for o in out.iter_mut() {
        *o /= denom;
    }
    out
}
