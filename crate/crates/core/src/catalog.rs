//! Manufactured fields for the experiments.
//!
//! Each entry carries the datum f = −□u = Δu in the standard basis and, when known,
//! the exact solution u.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::expr::Field;
use crate::forms::Form01;
use crate::{Error, Result, C64};

/// Catalog names accepted by [`manufactured_field`]. `kmh:<k>` takes k in 0..10.
pub const CATALOG: [&str; 13] = [
    "zero",
    "holo:z1z2",
    "harm:z1zb2",
    "harm:exp",
    "poly:r2",
    "poly:mixed",
    "velocity:asym",
    "velocity:radial",
    "bc:poly",
    "bump:offcenter",
    "bump:radial",
    "random:poly",
    "kmh:<k>",
];

#[derive(Clone, Debug)]
pub struct CatalogEntry {
    pub name: String,
    /// The exact solution, if the entry is manufactured from one.
    pub u: Option<Form01>,
    /// Datum f = Δu (standard basis).
    pub f: Form01,
    /// u satisfies u₂ = 0 and (Bu)₁ = 0 on the sphere.
    pub satisfies_bc: bool,
    /// Each standard component of u is harmonic.
    pub harmonic: bool,
}

fn c(re: f64, im: f64) -> Field {
    Field::constant(C64::new(re, im))
}

fn from_solution(name: &str, u: Form01, satisfies_bc: bool) -> CatalogEntry {
    let f = Form01::standard(u.c[0].laplacian(), u.c[1].laplacian());
    let harmonic = f.c[0].is_zero() && f.c[1].is_zero();
    CatalogEntry {
        name: name.to_string(),
        u: Some(u),
        f,
        satisfies_bc,
        harmonic,
    }
}

fn from_datum(name: &str, f: Form01) -> CatalogEntry {
    CatalogEntry {
        name: name.to_string(),
        u: None,
        f,
        satisfies_bc: false,
        harmonic: false,
    }
}

/// h(z)(3 − 2|z|²)(z̄₂, −z̄₁): on the sphere u₂ = 0, (γu)₁ = h and (Bu)₁ = 0 for h
/// holomorphic.
fn bc_family(h: Field) -> Form01 {
    let w = c(3.0, 0.0) - c(2.0, 0.0) * Field::norm_sqr();
    Form01::standard(h.clone() * w.clone() * Field::zb2(), -(h * w * Field::zb1()))
}

/// A random polynomial in z, z̄ with `terms` monomials of degree 1 or 2 plus a constant.
pub fn random_poly(rng: &mut ChaCha8Rng, terms: usize) -> Field {
    let vars = [Field::z1(), Field::z2(), Field::zb1(), Field::zb2()];
    let mut f = c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
    for _ in 0..terms {
        let mut t = c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
        for _ in 0..rng.gen_range(1..3) {
            t = t * vars[rng.gen_range(0..4)].clone();
        }
        f = f + t;
    }
    f
}

/// Test forms for the KMH check: A(z̄₂, −z̄₁) + (|z|² − 1)(B₁, B₂) with polynomial
/// A, B, so the second frame component vanishes on the sphere.
pub fn kmh_form(k: usize, seed: u64) -> Form01 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_mul(1000).wrapping_add(k as u64));
    let a = random_poly(&mut rng, 3);
    let w = Field::norm_sqr() - Field::one();
    let b1 = random_poly(&mut rng, 2);
    let b2 = random_poly(&mut rng, 2);
    Form01::standard(
        a.clone() * Field::zb2() + w.clone() * b1,
        -(a * Field::zb1()) + w * b2,
    )
}

pub fn manufactured_field(name: &str, seed: u64) -> Result<CatalogEntry> {
    let z1 = Field::z1;
    let z2 = Field::z2;
    let r2 = Field::norm_sqr;
    let e = match name {
        "zero" => from_solution(name, Form01::standard(Field::zero(), Field::zero()), true),
        "holo:z1z2" => from_solution(name, Form01::standard(z1() * z2(), Field::zero()), false),
        "harm:z1zb2" => from_solution(name, Form01::standard(z1() * Field::zb2(), Field::zero()), false),
        "harm:exp" => from_solution(
            name,
            Form01::standard((c(0.8, 0.0) * z1()).exp(), z2() * z2()),
            false,
        ),
        "poly:r2" => from_solution(name, Form01::standard(r2(), Field::zero()), false),
        "poly:mixed" => from_solution(
            name,
            Form01::standard(r2() * z2(), Field::zb1() * z2() * z2()),
            false,
        ),
        "velocity:asym" => from_solution(name, bc_family(Field::one()), true),
        "velocity:radial" => {
            let w = c(0.5, 0.0) * (r2() - Field::one());
            from_solution(name, Form01::standard(w.clone() * z1(), w * z2()), true)
        }
        "bc:poly" => from_solution(
            name,
            bc_family(Field::one() + c(0.5, 0.2) * z1() - c(0.3, 0.0) * z2() * z2()),
            true,
        ),
        "bump:offcenter" => {
            let d2 = (z1() - c(0.3, 0.0)) * (Field::zb1() - c(0.3, 0.0))
                + (z2() - c(0.0, 0.35)) * (Field::zb2() - c(0.0, -0.35));
            let phi = (c(1.0 / 0.25, 0.0) * d2).bump();
            from_datum(name, Form01::standard(c(0.5, 0.0) * phi.clone(), phi))
        }
        "bump:radial" => {
            let phi = (c(1.0 / 0.64, 0.0) * r2()).bump();
            from_datum(name, Form01::standard(phi.clone() * z1(), phi * z2()))
        }
        "random:poly" => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            from_solution(
                name,
                Form01::standard(random_poly(&mut rng, 4), random_poly(&mut rng, 4)),
                false,
            )
        }
        _ => {
            if let Some(k) = name.strip_prefix("kmh:").and_then(|k| k.parse::<usize>().ok()) {
                if k < 10 {
                    return Ok(from_solution(name, kmh_form(k, seed), false));
                }
            }
            return Err(Error::Unknown {
                kind: "field",
                name: name.to_string(),
                expected: CATALOG.join(", "),
            });
        }
    };
    Ok(e)
}
