//! Double-double arithmetic for the exact outcome tables.
//!
//! Reconstruction at a zero of ε or η takes the square root of a cancelling
//! sum, so f64 round-off (~1e-16) would surface as ~1e-8 in the result.
//! Propagating the three-qubit state in ~106-bit precision pushes that floor
//! below 1e-15.

use std::ops::{Add, Div, Mul, Neg, Sub};

use crate::qmath::ComplexMatrix;

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Dd {
    pub hi: f64,
    pub lo: f64,
}

#[inline]
fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    (s, (a - (s - bb)) + (b - bb))
}

#[inline]
fn quick_two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    (s, b - (s - a))
}

#[inline]
fn two_prod(a: f64, b: f64) -> (f64, f64) {
    let p = a * b;
    (p, a.mul_add(b, -p))
}

impl Dd {
    pub const ZERO: Dd = Dd { hi: 0.0, lo: 0.0 };

    pub fn new(hi: f64, lo: f64) -> Self {
        let (hi, lo) = two_sum(hi, lo);
        Self { hi, lo }
    }

    pub fn to_f64(self) -> f64 {
        self.hi + self.lo
    }

    pub fn sqrt(self) -> Self {
        if self.hi <= 0.0 {
            return Self::ZERO;
        }
        let x = Dd::from(self.hi.sqrt());
        // one Newton step doubles the correct bits
        x + (self - x * x) / (x * 2.0)
    }
}

impl From<f64> for Dd {
    fn from(x: f64) -> Self {
        Self { hi: x, lo: 0.0 }
    }
}

impl Add for Dd {
    type Output = Dd;
    fn add(self, rhs: Dd) -> Dd {
        let (s, e) = two_sum(self.hi, rhs.hi);
        let (t, f) = two_sum(self.lo, rhs.lo);
        let (s, e) = quick_two_sum(s, e + t);
        let (hi, lo) = quick_two_sum(s, e + f);
        Dd { hi, lo }
    }
}

impl Neg for Dd {
    type Output = Dd;
    fn neg(self) -> Dd {
        Dd {
            hi: -self.hi,
            lo: -self.lo,
        }
    }
}

impl Sub for Dd {
    type Output = Dd;
    fn sub(self, rhs: Dd) -> Dd {
        self + (-rhs)
    }
}

impl Mul for Dd {
    type Output = Dd;
    fn mul(self, rhs: Dd) -> Dd {
        let (p, e) = two_prod(self.hi, rhs.hi);
        let e = e + (self.hi * rhs.lo + self.lo * rhs.hi);
        let (hi, lo) = quick_two_sum(p, e);
        Dd { hi, lo }
    }
}

impl Mul<f64> for Dd {
    type Output = Dd;
    fn mul(self, rhs: f64) -> Dd {
        let (p, e) = two_prod(self.hi, rhs);
        let (hi, lo) = quick_two_sum(p, e + self.lo * rhs);
        Dd { hi, lo }
    }
}

impl Div for Dd {
    type Output = Dd;
    fn div(self, rhs: Dd) -> Dd {
        let q1 = self.hi / rhs.hi;
        let r = self - rhs * q1;
        let q2 = r.hi / rhs.hi;
        let r = r - rhs * q2;
        let q3 = r.hi / rhs.hi;
        let (hi, lo) = quick_two_sum(q1, q2);
        Dd { hi, lo } + Dd::from(q3)
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct CDd {
    pub re: Dd,
    pub im: Dd,
}

impl Add for CDd {
    type Output = CDd;
    fn add(self, rhs: CDd) -> CDd {
        CDd {
            re: self.re + rhs.re,
            im: self.im + rhs.im,
        }
    }
}

impl CDd {
    /// `self · (re + i·im)` for an f64 complex factor.
    fn mul_c64(self, re: f64, im: f64) -> CDd {
        CDd {
            re: self.re * re - self.im * im,
            im: self.re * im + self.im * re,
        }
    }

    fn scale(self, k: Dd) -> CDd {
        CDd {
            re: self.re * k,
            im: self.im * k,
        }
    }
}

/// Square matrix of double-double complex entries, row-major.
#[derive(Clone, Debug)]
pub struct DdMatrix {
    dim: usize,
    data: Vec<CDd>,
}

impl DdMatrix {
    pub fn zeros(dim: usize) -> Self {
        Self {
            dim,
            data: vec![CDd::default(); dim * dim],
        }
    }

    pub fn from_c64(m: &ComplexMatrix) -> Self {
        Self {
            dim: m.dim(),
            data: m
                .entries()
                .iter()
                .map(|z| CDd {
                    re: z.re.into(),
                    im: z.im.into(),
                })
                .collect(),
        }
    }

    /// Real symmetric 2×2 `[[a, b], [b, c]]`.
    pub fn real_2x2(a: Dd, b: Dd, c: Dd) -> Self {
        let r = |x: Dd| CDd { re: x, im: Dd::ZERO };
        Self {
            dim: 2,
            data: vec![r(a), r(b), r(b), r(c)],
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn kron(&self, other: &Self) -> Self {
        let (na, nb) = (self.dim, other.dim);
        let n = na * nb;
        let mut out = Self::zeros(n);
        for ar in 0..na {
            for ac in 0..na {
                let x = self.data[ar * na + ac];
                for br in 0..nb {
                    for bc in 0..nb {
                        let y = other.data[br * nb + bc];
                        out.data[(ar * nb + br) * n + ac * nb + bc] = CDd {
                            re: x.re * y.re - x.im * y.im,
                            im: x.re * y.im + x.im * y.re,
                        };
                    }
                }
            }
        }
        out
    }

    /// `u · self · u†` for an f64 operator `u`.
    pub fn conjugate_by(&self, u: &ComplexMatrix) -> Self {
        let n = self.dim;
        assert_eq!(n, u.dim());
        let ue = u.entries();
        let mut left = Self::zeros(n);
        for r in 0..n {
            for k in 0..n {
                let a = ue[r * n + k];
                if a.re == 0.0 && a.im == 0.0 {
                    continue;
                }
                for c in 0..n {
                    let v = self.data[k * n + c].mul_c64(a.re, a.im);
                    left.data[r * n + c] = left.data[r * n + c] + v;
                }
            }
        }
        let mut out = Self::zeros(n);
        for r in 0..n {
            for k in 0..n {
                for c in 0..n {
                    // (u†)[k][c] = conj(u[c][k])
                    let b = ue[c * n + k];
                    if b.re == 0.0 && b.im == 0.0 {
                        continue;
                    }
                    let v = left.data[r * n + k].mul_c64(b.re, -b.im);
                    out.data[r * n + c] = out.data[r * n + c] + v;
                }
            }
        }
        out
    }

    pub fn add_scaled(&mut self, other: &Self, k: Dd) {
        for (d, s) in self.data.iter_mut().zip(&other.data) {
            *d = *d + s.scale(k);
        }
    }

    /// `Re Tr(op · self)` for an f64 operator.
    pub fn re_trace_with(&self, op: &ComplexMatrix) -> Dd {
        let n = self.dim;
        let oe = op.entries();
        let mut acc = Dd::ZERO;
        for r in 0..n {
            for c in 0..n {
                let a = oe[r * n + c];
                if a.re == 0.0 && a.im == 0.0 {
                    continue;
                }
                acc = acc + self.data[c * n + r].mul_c64(a.re, a.im).re;
            }
        }
        acc
    }
}
