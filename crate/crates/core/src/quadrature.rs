//! One-dimensional rules and target-centered polar rules on S³ and in the ball.

use gauss_quad::legendre::GaussLegendre;

use crate::geometry::{tangent_basis, PointC2};
use crate::PI;

/// Gauss–Legendre nodes and weights on [a, b], ascending and exactly symmetric.
pub fn gauss_legendre(n: usize, a: f64, b: f64) -> (Vec<f64>, Vec<f64>) {
    let (mut x, mut w) = if n == 1 {
        (vec![0.0], vec![2.0])
    } else {
        let rule = GaussLegendre::new(n).expect("degree >= 2");
        let mut pairs: Vec<(f64, f64)> = rule.as_node_weight_pairs().to_vec();
        pairs.sort_by(|p, q| p.0.total_cmp(&q.0));
        pairs.into_iter().unzip()
    };
    for k in 0..n / 2 {
        let xs = 0.5 * (x[n - 1 - k] - x[k]);
        let ws = 0.5 * (w[k] + w[n - 1 - k]);
        x[k] = -xs;
        x[n - 1 - k] = xs;
        w[k] = ws;
        w[n - 1 - k] = ws;
    }
    if n % 2 == 1 {
        x[n / 2] = 0.0;
    }
    let (c, h) = (0.5 * (a + b), 0.5 * (b - a));
    if n % 2 == 1 {
        x[n / 2] = c;
        for (k, xk) in x.iter_mut().enumerate() {
            if k != n / 2 {
                *xk = c + h * *xk;
            }
        }
    } else {
        for xk in x.iter_mut() {
            *xk = c + h * *xk;
        }
    }
    for wk in w.iter_mut() {
        *wk *= h;
    }
    (x, w)
}

/// Antipodally symmetric rule on S²: Gauss–Legendre in cos θ times a uniform azimuth.
#[derive(Clone, Debug)]
pub struct S2Rule {
    pub dirs: Vec<[f64; 3]>,
    pub weights: Vec<f64>,
}

impl S2Rule {
    pub fn new(n_theta: usize, n_az: usize) -> Self {
        assert!(n_az % 2 == 0, "azimuth count must be even");
        let (c, wc) = gauss_legendre(n_theta, -1.0, 1.0);
        let mut dirs = Vec::with_capacity(n_theta * n_az);
        let mut weights = Vec::with_capacity(n_theta * n_az);
        let dphi = 2.0 * PI / n_az as f64;
        for (&ct, &wt) in c.iter().zip(&wc) {
            let st = (1.0 - ct * ct).max(0.0).sqrt();
            for k in 0..n_az {
                let (sp, cp) = (k as f64 * dphi).sin_cos();
                dirs.push([ct, st * cp, st * sp]);
                weights.push(wt * dphi);
            }
        }
        Self { dirs, weights }
    }

    pub fn len(&self) -> usize {
        self.dirs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.dirs.is_empty()
    }
}

/// Quadrature points paired with weights.
#[derive(Clone, Debug, Default)]
pub struct PointRule {
    pub points: Vec<PointC2>,
    pub weights: Vec<f64>,
}

/// Panels in the geodesic angle α from the target.
#[derive(Clone, Debug)]
pub struct AlphaPanels {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl AlphaPanels {
    /// A single Gauss–Legendre panel on [0, π].
    pub fn full(n: usize) -> Self {
        let (nodes, weights) = gauss_legendre(n, 0.0, PI);
        Self { nodes, weights }
    }

    /// Geometric panels starting at `start`, doubling up to `switch`, then one far panel.
    pub fn graded(start: f64, scale: f64, n_near: usize, n_far: usize) -> Self {
        let mut nodes = Vec::new();
        let mut weights = Vec::new();
        let mut push = |a: f64, b: f64, n: usize| {
            let (x, w) = gauss_legendre(n, a, b);
            nodes.extend(x);
            weights.extend(w);
        };
        let switch = (4.0 * scale).clamp(start, 1.0);
        let mut a = start;
        if start == 0.0 {
            push(0.0, scale.min(switch), n_near);
            a = scale.min(switch);
        }
        while a < switch {
            let b = (2.0 * a).min(switch);
            push(a, b, n_near);
            a = b;
        }
        push(a, PI, n_far);
        Self { nodes, weights }
    }
}

/// Polar rule on S³ centered at a boundary point z:
/// w = cos α·z + sin α·η, η on the unit sphere of the tangent space, dσ = sin²α dα dη.
pub fn polar_rule(z: PointC2, alpha: &AlphaPanels, s2: &S2Rule) -> PointRule {
    let basis = tangent_basis(z);
    let mut rule = PointRule::default();
    rule.points.reserve(alpha.nodes.len() * s2.len());
    for (&a, &wa) in alpha.nodes.iter().zip(&alpha.weights) {
        let (sa, ca) = a.sin_cos();
        for (d, &wd) in s2.dirs.iter().zip(&s2.weights) {
            let eta = basis[0].scale(d[0]) + basis[1].scale(d[1]) + basis[2].scale(d[2]);
            rule.points.push(z.scale(ca) + eta.scale(sa));
            rule.weights.push(wa * sa * sa * wd);
        }
    }
    rule
}

/// Chord length ε ↦ geodesic angle on the unit sphere.
pub fn chord_to_angle(eps: f64) -> f64 {
    2.0 * (0.5 * eps).min(1.0).asin()
}

/// Resolution of the target-centered rule for volume potentials.
#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct VolumeRuleSpec {
    pub n_theta: usize,
    pub s2_theta: usize,
    pub s2_az: usize,
    pub n_rho: usize,
}

impl Default for VolumeRuleSpec {
    fn default() -> Self {
        Self {
            n_theta: 16,
            s2_theta: 8,
            s2_az: 16,
            n_rho: 12,
        }
    }
}

/// One ray of a volume rule: unit direction ω, angular weight and the radial nodes
/// y = x + ρω for ρ ∈ (0, ρ_max(ω)).
#[derive(Clone, Debug)]
pub struct Ray {
    pub dir: [f64; 4],
    pub weight: f64,
    pub rho: Vec<f64>,
    pub rho_weights: Vec<f64>,
}

/// Rays from x covering the unit ball. For |x| = 1 only inward directions contribute.
pub fn volume_rays(x: PointC2, spec: &VolumeRuleSpec) -> Vec<Ray> {
    let r = x.norm();
    let axis = if r > 1e-14 {
        x.scale(1.0 / r)
    } else {
        PointC2::real([1.0, 0.0, 0.0, 0.0])
    };
    let basis = tangent_basis(axis);
    let boundary = (1.0 - r).abs() < 1e-14;
    let (th, wth) = if boundary {
        gauss_legendre(spec.n_theta, 0.5 * PI, PI)
    } else {
        gauss_legendre(spec.n_theta, 0.0, PI)
    };
    let s2 = S2Rule::new(spec.s2_theta, spec.s2_az);
    let (gr, gw) = gauss_legendre(spec.n_rho, 0.0, 1.0);
    let xr = x.to_real();
    let c0 = 1.0 - r * r;
    let mut rays = Vec::with_capacity(th.len() * s2.len());
    for (&t, &wt) in th.iter().zip(&wth) {
        let (st, ct) = t.sin_cos();
        for (d, &wd) in s2.dirs.iter().zip(&s2.weights) {
            let eta = basis[0].scale(d[0]) + basis[1].scale(d[1]) + basis[2].scale(d[2]);
            let om = (axis.scale(ct) + eta.scale(st)).to_real();
            let b: f64 = (0..4).map(|k| xr[k] * om[k]).sum();
            let rmax = if boundary {
                -2.0 * b
            } else {
                -b + (b * b + c0).sqrt()
            };
            if rmax <= 0.0 {
                continue;
            }
            rays.push(Ray {
                dir: om,
                weight: wt * st * st * wd,
                rho: gr.iter().map(|g| g * rmax).collect(),
                rho_weights: gw.iter().map(|g| g * rmax).collect(),
            });
        }
    }
    rays
}
