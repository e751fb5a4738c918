//! Scalar fields on C² as expression trees with exact Wirtinger derivatives.

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};
use std::sync::Arc;

use crate::jet::{Jet2, Num};
use crate::{PointC2, C64};

#[derive(Debug)]
enum Node {
    Const(C64),
    /// Coordinate with slot index (z₁, z₂, z̄₁, z̄₂).
    Var(usize),
    Add(Field, Field),
    Mul(Field, Field),
    Neg(Field),
    Recip(Field),
    Conj(Field),
    Sqrt(Field),
    Exp(Field),
    /// s ↦ exp(−1/(1−s)) for s < 1, zero otherwise (real s).
    Bump(Field),
}

/// A complex-valued field built from coordinates, arithmetic and a few analytic maps.
#[derive(Clone)]
pub struct Field(Arc<Node>);

impl fmt::Debug for Field {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl fmt::Display for Field {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &*self.0 {
            Node::Const(c) if c.im == 0.0 => write!(f, "{}", c.re),
            Node::Const(c) => write!(f, "({c})"),
            Node::Var(k) => write!(f, "{}", ["z1", "z2", "zb1", "zb2"][*k]),
            Node::Add(a, b) => write!(f, "({a} + {b})"),
            Node::Mul(a, b) => write!(f, "{a}*{b}"),
            Node::Neg(a) => write!(f, "-{a}"),
            Node::Recip(a) => write!(f, "1/{a}"),
            Node::Conj(a) => write!(f, "conj({a})"),
            Node::Sqrt(a) => write!(f, "sqrt({a})"),
            Node::Exp(a) => write!(f, "exp({a})"),
            Node::Bump(a) => write!(f, "bump({a})"),
        }
    }
}

impl Field {
    fn node(n: Node) -> Self {
        Field(Arc::new(n))
    }

    pub fn constant(c: C64) -> Self {
        Self::node(Node::Const(c))
    }

    pub fn real(x: f64) -> Self {
        Self::constant(C64::new(x, 0.0))
    }

    pub fn zero() -> Self {
        Self::real(0.0)
    }

    pub fn one() -> Self {
        Self::real(1.0)
    }

    pub fn z1() -> Self {
        Self::node(Node::Var(0))
    }

    pub fn z2() -> Self {
        Self::node(Node::Var(1))
    }

    pub fn zb1() -> Self {
        Self::node(Node::Var(2))
    }

    pub fn zb2() -> Self {
        Self::node(Node::Var(3))
    }

    /// |z|² = z₁z̄₁ + z₂z̄₂.
    pub fn norm_sqr() -> Self {
        Self::z1() * Self::zb1() + Self::z2() * Self::zb2()
    }

    pub fn as_const(&self) -> Option<C64> {
        match &*self.0 {
            Node::Const(c) => Some(*c),
            _ => None,
        }
    }

    pub fn is_zero(&self) -> bool {
        self.as_const() == Some(C64::new(0.0, 0.0))
    }

    fn is_one(&self) -> bool {
        self.as_const() == Some(C64::new(1.0, 0.0))
    }

    pub fn conj(&self) -> Self {
        match &*self.0 {
            Node::Const(c) => Self::constant(c.conj()),
            Node::Conj(a) => a.clone(),
            _ => Self::node(Node::Conj(self.clone())),
        }
    }

    pub fn recip(&self) -> Self {
        match self.as_const() {
            Some(c) => Self::constant(c.inv()),
            None => Self::node(Node::Recip(self.clone())),
        }
    }

    pub fn sqrt(&self) -> Self {
        Self::node(Node::Sqrt(self.clone()))
    }

    pub fn exp(&self) -> Self {
        Self::node(Node::Exp(self.clone()))
    }

    pub fn bump(&self) -> Self {
        Self::node(Node::Bump(self.clone()))
    }

    pub fn powi(&self, n: u32) -> Self {
        (0..n).fold(Self::one(), |acc, _| acc * self.clone())
    }

    pub fn scale(&self, a: C64) -> Self {
        Self::constant(a) * self.clone()
    }

    /// Evaluate in any number type, given the four coordinate values.
    pub fn eval_in<T: Num>(&self, vars: &[T; 4]) -> T {
        match &*self.0 {
            Node::Const(c) => T::cst(*c),
            Node::Var(k) => vars[*k].clone(),
            Node::Add(a, b) => a.eval_in(vars) + b.eval_in(vars),
            Node::Mul(a, b) => a.eval_in(vars) * b.eval_in(vars),
            Node::Neg(a) => -a.eval_in(vars),
            Node::Recip(a) => a.eval_in(vars).recip(),
            Node::Conj(a) => a.eval_in(vars).conj(),
            Node::Sqrt(a) => {
                let x = a.eval_in(vars);
                let s = x.val().sqrt();
                x.chain(s, 0.5 / s, -0.25 / (s * s * s))
            }
            Node::Exp(a) => {
                let x = a.eval_in(vars);
                let e = x.val().exp();
                x.chain(e, e, e)
            }
            Node::Bump(a) => {
                let x = a.eval_in(vars);
                let s = x.val().re;
                if s >= 1.0 {
                    return T::cst(C64::new(0.0, 0.0));
                }
                let q = 1.0 / (1.0 - s);
                let g = (-q).exp();
                let dg = -g * q * q;
                let ddg = g * (q.powi(4) - 2.0 * q.powi(3));
                x.chain(C64::new(g, 0.0), C64::new(dg, 0.0), C64::new(ddg, 0.0))
            }
        }
    }

    pub fn eval(&self, z: PointC2) -> C64 {
        self.eval_in(&[z.z1, z.z2, z.z1.conj(), z.z2.conj()])
    }

    pub fn jet(&self, z: PointC2) -> Jet2 {
        self.eval_in(&Jet2::variables(z))
    }

    /// Exact derivative in slot k (∂₁, ∂₂, ∂̄₁, ∂̄₂).
    pub fn diff(&self, k: usize) -> Self {
        match &*self.0 {
            Node::Const(_) => Self::zero(),
            Node::Var(j) => Self::real(if *j == k { 1.0 } else { 0.0 }),
            Node::Add(a, b) => a.diff(k) + b.diff(k),
            Node::Mul(a, b) => a.diff(k) * b.clone() + a.clone() * b.diff(k),
            Node::Neg(a) => -a.diff(k),
            Node::Recip(a) => -(a.diff(k) * (a.clone() * a.clone()).recip()),
            Node::Conj(a) => a.diff([2, 3, 0, 1][k]).conj(),
            Node::Sqrt(a) => a.diff(k) * (Self::real(2.0) * self.clone()).recip(),
            Node::Exp(a) => a.diff(k) * self.clone(),
            Node::Bump(a) => {
                let q = (Self::one() - a.clone()).recip();
                -(a.diff(k) * self.clone() * q.clone() * q)
            }
        }
    }

    /// Δ = 4(∂₁∂̄₁ + ∂₂∂̄₂).
    pub fn laplacian(&self) -> Self {
        Self::real(4.0) * (self.diff(0).diff(2) + self.diff(1).diff(3))
    }
}

impl Add for Field {
    type Output = Field;
    fn add(self, o: Field) -> Field {
        if self.is_zero() {
            return o;
        }
        if o.is_zero() {
            return self;
        }
        if let (Some(a), Some(b)) = (self.as_const(), o.as_const()) {
            return Field::constant(a + b);
        }
        Field::node(Node::Add(self, o))
    }
}

impl Sub for Field {
    type Output = Field;
    fn sub(self, o: Field) -> Field {
        self + (-o)
    }
}

impl Neg for Field {
    type Output = Field;
    fn neg(self) -> Field {
        match &*self.0 {
            Node::Const(c) => Field::constant(-*c),
            Node::Neg(a) => a.clone(),
            _ => Field::node(Node::Neg(self)),
        }
    }
}

impl Mul for Field {
    type Output = Field;
    fn mul(self, o: Field) -> Field {
        if self.is_zero() || o.is_zero() {
            return Field::zero();
        }
        if self.is_one() {
            return o;
        }
        if o.is_one() {
            return self;
        }
        if let (Some(a), Some(b)) = (self.as_const(), o.as_const()) {
            return Field::constant(a * b);
        }
        Field::node(Node::Mul(self, o))
    }
}

impl Mul<Field> for f64 {
    type Output = Field;
    fn mul(self, f: Field) -> Field {
        Field::real(self) * f
    }
}

impl Mul<Field> for C64 {
    type Output = Field;
    fn mul(self, f: Field) -> Field {
        Field::constant(self) * f
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn symbolic_and_jet_derivatives_agree() {
        let r2 = Field::norm_sqr();
        let f = Field::z1() * Field::zb2() * r2.sqrt() + (0.5 * r2).exp().recip();
        let z = PointC2::new(C64::new(0.2, 0.1), C64::new(-0.4, 0.3));
        let j = f.jet(z);
        for k in 0..4 {
            assert!((f.diff(k).eval(z) - j.d[k]).norm() < 1e-13);
            for l in 0..4 {
                assert!((f.diff(k).diff(l).eval(z) - j.h[k][l]).norm() < 1e-12);
            }
        }
        assert!((f.laplacian().eval(z) - j.laplacian()).norm() < 1e-12);
    }
}
