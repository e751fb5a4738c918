//! Second-order Wirtinger jets.
//!
//! Derivative slots are ordered (∂₁, ∂₂, ∂̄₁, ∂̄₂).

use std::ops::{Add, Mul, Neg, Sub};

use crate::C64;

const ZERO: C64 = C64::new(0.0, 0.0);
const CONJ_SLOT: [usize; 4] = [2, 3, 0, 1];

/// Numbers an expression tree can be evaluated in.
pub trait Num:
    Clone + Add<Output = Self> + Sub<Output = Self> + Mul<Output = Self> + Neg<Output = Self>
{
    fn cst(c: C64) -> Self;
    fn val(&self) -> C64;
    fn conj(&self) -> Self;
    fn recip(&self) -> Self;
    /// g applied to self, given g, g′ and g″ at the current value.
    fn chain(&self, g: C64, dg: C64, ddg: C64) -> Self;
}

impl Num for C64 {
    fn cst(c: C64) -> Self {
        c
    }
    fn val(&self) -> C64 {
        *self
    }
    fn conj(&self) -> Self {
        C64::conj(self)
    }
    fn recip(&self) -> Self {
        self.inv()
    }
    fn chain(&self, g: C64, _: C64, _: C64) -> Self {
        g
    }
}

/// Value, first and second Wirtinger derivatives.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Jet2 {
    pub v: C64,
    pub d: [C64; 4],
    pub h: [[C64; 4]; 4],
}

impl Jet2 {
    pub fn constant(c: C64) -> Self {
        Self {
            v: c,
            d: [ZERO; 4],
            h: [[ZERO; 4]; 4],
        }
    }

    /// The coordinate function with derivative slot k (z₁, z₂, z̄₁, z̄₂).
    pub fn coordinate(value: C64, k: usize) -> Self {
        let mut j = Self::constant(value);
        j.d[k] = C64::new(1.0, 0.0);
        j
    }

    /// The four coordinate jets at a point.
    pub fn variables(z: crate::PointC2) -> [Self; 4] {
        [
            Self::coordinate(z.z1, 0),
            Self::coordinate(z.z2, 1),
            Self::coordinate(z.z1.conj(), 2),
            Self::coordinate(z.z2.conj(), 3),
        ]
    }

    pub fn scale(&self, a: C64) -> Self {
        let mut out = *self;
        out.v *= a;
        for i in 0..4 {
            out.d[i] *= a;
            for j in 0..4 {
                out.h[i][j] *= a;
            }
        }
        out
    }

    /// Δ = 4 Σ ∂ᵢ∂̄ᵢ.
    pub fn laplacian(&self) -> C64 {
        4.0 * (self.h[0][2] + self.h[1][3])
    }

    pub fn first(&self) -> Jet1 {
        Jet1 {
            v: self.v,
            d: self.d,
        }
    }
}

impl Add for Jet2 {
    type Output = Self;
    fn add(mut self, o: Self) -> Self {
        self.v += o.v;
        for i in 0..4 {
            self.d[i] += o.d[i];
            for j in 0..4 {
                self.h[i][j] += o.h[i][j];
            }
        }
        self
    }
}

impl Sub for Jet2 {
    type Output = Self;
    fn sub(self, o: Self) -> Self {
        self + (-o)
    }
}

impl Neg for Jet2 {
    type Output = Self;
    fn neg(self) -> Self {
        self.scale(C64::new(-1.0, 0.0))
    }
}

impl Mul for Jet2 {
    type Output = Self;
    fn mul(self, o: Self) -> Self {
        let mut out = Self::constant(self.v * o.v);
        for i in 0..4 {
            out.d[i] = self.d[i] * o.v + self.v * o.d[i];
            for j in 0..4 {
                out.h[i][j] = self.h[i][j] * o.v
                    + self.d[i] * o.d[j]
                    + self.d[j] * o.d[i]
                    + self.v * o.h[i][j];
            }
        }
        out
    }
}

impl Num for Jet2 {
    fn cst(c: C64) -> Self {
        Self::constant(c)
    }
    fn val(&self) -> C64 {
        self.v
    }
    fn conj(&self) -> Self {
        let mut out = Self::constant(self.v.conj());
        for i in 0..4 {
            out.d[i] = self.d[CONJ_SLOT[i]].conj();
            for j in 0..4 {
                out.h[i][j] = self.h[CONJ_SLOT[i]][CONJ_SLOT[j]].conj();
            }
        }
        out
    }
    fn recip(&self) -> Self {
        let inv = self.v.inv();
        self.chain(inv, -inv * inv, 2.0 * inv * inv * inv)
    }
    fn chain(&self, g: C64, dg: C64, ddg: C64) -> Self {
        let mut out = Self::constant(g);
        for i in 0..4 {
            out.d[i] = dg * self.d[i];
            for j in 0..4 {
                out.h[i][j] = ddg * self.d[i] * self.d[j] + dg * self.h[i][j];
            }
        }
        out
    }
}

/// Value and first derivatives.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Jet1 {
    pub v: C64,
    pub d: [C64; 4],
}

impl Jet1 {
    pub fn constant(c: C64) -> Self {
        Self { v: c, d: [ZERO; 4] }
    }

    pub fn scale(&self, a: C64) -> Self {
        Self {
            v: self.v * a,
            d: self.d.map(|x| x * a),
        }
    }
}

impl Add for Jet1 {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        Self {
            v: self.v + o.v,
            d: std::array::from_fn(|i| self.d[i] + o.d[i]),
        }
    }
}

impl Sub for Jet1 {
    type Output = Self;
    fn sub(self, o: Self) -> Self {
        Self {
            v: self.v - o.v,
            d: std::array::from_fn(|i| self.d[i] - o.d[i]),
        }
    }
}

impl Mul for Jet1 {
    type Output = Self;
    fn mul(self, o: Self) -> Self {
        Self {
            v: self.v * o.v,
            d: std::array::from_fn(|i| self.d[i] * o.v + self.v * o.d[i]),
        }
    }
}

/// A first-order operator Σ aᵢ∂ᵢ + Σ bᵢ∂̄ᵢ with coefficient jets; slot k of `coef`
/// multiplies derivative slot k.
#[derive(Clone, Copy, Debug)]
pub struct VectorField {
    pub coef: [Jet1; 4],
}

impl VectorField {
    /// X f with one derivative kept (needs second derivatives of f).
    pub fn apply(&self, f: &Jet2) -> Jet1 {
        let mut out = Jet1::constant(ZERO);
        for i in 0..4 {
            let c = &self.coef[i];
            if c.v == ZERO && c.d.iter().all(|x| *x == ZERO) {
                continue;
            }
            out.v += c.v * f.d[i];
            for k in 0..4 {
                out.d[k] += c.d[k] * f.d[i] + c.v * f.h[k][i];
            }
        }
        out
    }

    /// X g, value only.
    pub fn apply1(&self, g: &Jet1) -> C64 {
        (0..4).map(|i| self.coef[i].v * g.d[i]).sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::PointC2;

    #[test]
    fn product_and_conj_rules() {
        let z = PointC2::new(C64::new(0.3, -0.2), C64::new(0.1, 0.5));
        let [z1, _, zb1, _] = Jet2::variables(z);
        let f = z1 * z1 * zb1;
        assert!((f.d[0] - 2.0 * z.z1 * z.z1.conj()).norm() < 1e-15);
        assert!((f.d[2] - z.z1 * z.z1).norm() < 1e-15);
        assert!((f.h[0][2] - 2.0 * z.z1).norm() < 1e-15);
        assert!((f.laplacian() - 8.0 * z.z1).norm() < 1e-14);
        let g = f.conj();
        assert!((g.d[2] - f.d[0].conj()).norm() < 1e-15);
    }
}
