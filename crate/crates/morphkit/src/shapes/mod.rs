//! Procedural corpus of colored point-cloud objects.
//!
//! Six parametric families stand in for real scanned data. Every generator
//! is a pure function of (family, params, point count, seed): surfaces are
//! sampled with the seeded [`Rng`] and colored by a documented per-family
//! rule, so corpora are reproducible bit-for-bit.

mod chamfer;
mod condition;
mod corpus;

pub use chamfer::{chamfer, chamfer_brute_force, chamfer_colored};
pub use condition::{ConditionEmbedding, ConditionTable};
pub use corpus::{default_manifest, parse_manifest, write_manifest, Corpus, ShapeRecord};

use crate::numerics::{Rng, Tensor};

/// Errors from corpus generation and metrics.
#[derive(Debug, thiserror::Error)]
pub enum ShapeError {
    #[error("parameter out of range for {family}: {detail}")]
    OutOfRange { family: &'static str, detail: String },
    #[error("unknown family: {0}")]
    UnknownFamily(String),
    #[error("empty point set passed to {0}")]
    EmptySet(&'static str),
    #[error("malformed manifest line {line}: {detail}")]
    BadManifest { line: usize, detail: String },
}

/// The six object families.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash)]
pub enum Family {
    Sphere,
    Torus,
    Box,
    StarPrism,
    Cone,
    TwoLobe,
}

pub const FAMILIES: [Family; 6] = [
    Family::Sphere,
    Family::Torus,
    Family::Box,
    Family::StarPrism,
    Family::Cone,
    Family::TwoLobe,
];

impl Family {
    pub fn id(self) -> usize {
        match self {
            Family::Sphere => 0,
            Family::Torus => 1,
            Family::Box => 2,
            Family::StarPrism => 3,
            Family::Cone => 4,
            Family::TwoLobe => 5,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Family::Sphere => "sphere",
            Family::Torus => "torus",
            Family::Box => "box",
            Family::StarPrism => "star_prism",
            Family::Cone => "cone",
            Family::TwoLobe => "two_lobe",
        }
    }

    pub fn from_name(name: &str) -> Result<Self, ShapeError> {
        FAMILIES
            .iter()
            .copied()
            .find(|f| f.name() == name)
            .ok_or_else(|| ShapeError::UnknownFamily(name.to_string()))
    }

    /// Number of continuous parameters.
    pub fn param_count(self) -> usize {
        match self {
            Family::Sphere | Family::Torus | Family::Cone => 2,
            Family::Box | Family::StarPrism | Family::TwoLobe => 3,
        }
    }

    /// Inclusive (lo, hi) ranges for each parameter; also the corpus
    /// sampling ranges.
    pub fn param_ranges(self) -> &'static [(f64, f64)] {
        match self {
            // radius, hue
            Family::Sphere => &[(0.3, 1.0), (0.0, 1.0)],
            // major radius, minor radius
            Family::Torus => &[(0.4, 0.7), (0.1, 0.3)],
            // half-extents
            Family::Box => &[(0.2, 0.95), (0.2, 0.95), (0.2, 0.95)],
            // base radius, spike amplitude, height
            Family::StarPrism => &[(0.3, 0.6), (0.1, 0.5), (0.4, 1.6)],
            // base radius, height
            Family::Cone => &[(0.3, 0.8), (0.4, 1.6)],
            // separation, first radius, radius ratio
            Family::TwoLobe => &[(0.3, 0.8), (0.2, 0.45), (0.5, 1.0)],
        }
    }
}

/// One colored point cloud drawn from a family.
#[derive(Clone, Debug)]
pub struct ShapeSample {
    pub points: Tensor,
    pub colors: Tensor,
    pub family: Family,
    pub params: Vec<f64>,
    pub seed: u64,
}

impl ShapeSample {
    pub fn family_id(&self) -> usize {
        self.family.id()
    }
}

fn validate(family: Family, params: &[f64]) -> Result<(), ShapeError> {
    let ranges = family.param_ranges();
    if params.len() != ranges.len() {
        return Err(ShapeError::OutOfRange {
            family: family.name(),
            detail: format!("expected {} params, got {}", ranges.len(), params.len()),
        });
    }
    for (i, (&p, &(lo, hi))) in params.iter().zip(ranges).enumerate() {
        if !(lo..=hi).contains(&p) || !p.is_finite() {
            return Err(ShapeError::OutOfRange {
                family: family.name(),
                detail: format!("param {i} = {p} outside [{lo}, {hi}]"),
            });
        }
    }
    // Composite constraints keeping every point inside the unit cube.
    match family {
        Family::Torus => {
            if params[0] + params[1] > 1.0 {
                return Err(ShapeError::OutOfRange {
                    family: family.name(),
                    detail: "major + minor radius exceeds 1".into(),
                });
            }
        }
        Family::TwoLobe => {
            let r2 = params[1] * params[2];
            if params[0] / 2.0 + params[1].max(r2) > 1.0 {
                return Err(ShapeError::OutOfRange {
                    family: family.name(),
                    detail: "lobes leave the unit cube".into(),
                });
            }
        }
        _ => {}
    }
    Ok(())
}

/// The fixed token-slot order shared by every generated sample: a canonical
/// (height, azimuth) sort scattered by one constant pseudo-random
/// permutation. Sorting gives every slot a stable surface region across
/// samples; the scatter keeps spatial structure spread evenly over the
/// token-axis spectrum instead of concentrating it in the low band.
fn slot_order(m: usize) -> Vec<usize> {
    let mut order: Vec<usize> = (0..m).collect();
    let mut rng = Rng::new(0x534c_4f54 ^ m as u64);
    for i in (1..m).rev() {
        order.swap(i, rng.range(i + 1));
    }
    order
}

/// Deterministic sampling of `m` surface points with per-point colors.
/// Row i holds the same surface region for every sample of every family.
pub fn generate(
    family: Family,
    params: &[f64],
    m: usize,
    seed: u64,
) -> Result<ShapeSample, ShapeError> {
    validate(family, params)?;
    let mut rng = Rng::new(seed ^ 0x5348_4150_4553_u64);
    let mut entries: Vec<([f64; 3], [f64; 3])> =
        (0..m).map(|_| sample_point(family, params, &mut rng)).collect();
    entries.sort_by(|(a, _), (b, _)| {
        let ka = (a[2], a[1].atan2(a[0]));
        let kb = (b[2], b[1].atan2(b[0]));
        ka.partial_cmp(&kb).expect("finite coordinates")
    });
    let order = slot_order(m);
    let mut pts = vec![0.0; m * 3];
    let mut cols = vec![0.0; m * 3];
    for (canonical, &slot) in order.iter().enumerate() {
        let (p, c) = entries[canonical];
        pts[slot * 3..slot * 3 + 3].copy_from_slice(&p);
        cols[slot * 3..slot * 3 + 3].copy_from_slice(&c);
    }
    Ok(ShapeSample {
        points: Tensor::from_vec(&[m, 3], pts).expect("sized above"),
        colors: Tensor::from_vec(&[m, 3], cols).expect("sized above"),
        family,
        params: params.to_vec(),
        seed,
    })
}

fn sample_point(family: Family, params: &[f64], rng: &mut Rng) -> ([f64; 3], [f64; 3]) {
    use std::f64::consts::PI;
    match family {
        // Uniform on the sphere; color: hue from params[1], brightness by
        // latitude.
        Family::Sphere => {
            let r = params[0];
            let (mut x, mut y, mut z);
            loop {
                x = rng.normal();
                y = rng.normal();
                z = rng.normal();
                let n = (x * x + y * y + z * z).sqrt();
                if n > 1e-9 {
                    x /= n;
                    y /= n;
                    z /= n;
                    break;
                }
            }
            let v = 0.35 + 0.55 * (z + 1.0) / 2.0;
            ([r * x, r * y, r * z], hsv(params[1], 0.7, v))
        }
        // Area-weighted torus; color: hue follows the toroidal angle.
        Family::Torus => {
            let (big, small) = (params[0], params[1]);
            let theta = 2.0 * PI * rng.uniform();
            let phi = loop {
                let cand = 2.0 * PI * rng.uniform();
                if rng.uniform() <= (big + small * cand.cos()) / (big + small) {
                    break cand;
                }
            };
            let ring = big + small * phi.cos();
            let p = [ring * theta.cos(), ring * theta.sin(), small * phi.sin()];
            (p, hsv(theta / (2.0 * PI), 0.8, 0.9))
        }
        // Face-area-weighted box; every point lies exactly on one face.
        // Color: a fixed palette per face.
        Family::Box => {
            let (hx, hy, hz) = (params[0], params[1], params[2]);
            let areas = [hy * hz, hy * hz, hx * hz, hx * hz, hx * hy, hx * hy];
            let total: f64 = areas.iter().sum();
            let mut pick = rng.uniform() * total;
            let mut face = 5;
            for (i, &a) in areas.iter().enumerate() {
                if pick < a {
                    face = i;
                    break;
                }
                pick -= a;
            }
            let u = rng.uniform_in(-1.0, 1.0);
            let v = rng.uniform_in(-1.0, 1.0);
            let (p, c) = match face {
                0 => ([hx, u * hy, v * hz], [0.85, 0.25, 0.20]),
                1 => ([-hx, u * hy, v * hz], [0.10, 0.75, 0.75]),
                2 => ([u * hx, hy, v * hz], [0.20, 0.70, 0.25]),
                3 => ([u * hx, -hy, v * hz], [0.80, 0.25, 0.75]),
                4 => ([u * hx, v * hy, hz], [0.25, 0.35, 0.85]),
                _ => ([u * hx, v * hy, -hz], [0.90, 0.80, 0.20]),
            };
            (p, c)
        }
        // Five-pointed star cross-section, extruded. 75% lateral wall
        // (angle drawn proportional to local radius), 25% caps.
        // Color: hue by cross-section angle, brightness by height.
        Family::StarPrism => {
            let (r0, amp, h) = (params[0], params[1], params[2]);
            let rho = |theta: f64| r0 * (1.0 + amp * (5.0 * theta).cos());
            let rho_max = r0 * (1.0 + amp);
            let theta = loop {
                let cand = 2.0 * PI * rng.uniform();
                if rng.uniform() <= rho(cand) / rho_max {
                    break cand;
                }
            };
            let on_wall = rng.uniform() < 0.75;
            let (radial, z) = if on_wall {
                (rho(theta), rng.uniform_in(-h / 2.0, h / 2.0))
            } else {
                let cap = if rng.uniform() < 0.5 { h / 2.0 } else { -h / 2.0 };
                (rho(theta) * rng.uniform().sqrt(), cap)
            };
            let p = [radial * theta.cos(), radial * theta.sin(), z];
            let v = 0.45 + 0.5 * (z / h + 0.5);
            (p, hsv(theta / (2.0 * PI), 0.65, v))
        }
        // Cone: base disk plus lateral surface, area-weighted.
        // Color: rust at the base fading to cream at the apex.
        Family::Cone => {
            let (rb, h) = (params[0], params[1]);
            let slant = (h * h + rb * rb).sqrt();
            let base_area = PI * rb * rb;
            let lateral_area = PI * rb * slant;
            let theta = 2.0 * PI * rng.uniform();
            let (radial, z) = if rng.uniform() * (base_area + lateral_area) < base_area {
                (rb * rng.uniform().sqrt(), -h / 2.0)
            } else {
                let a = rng.uniform().sqrt();
                (rb * a, h / 2.0 - h * a)
            };
            let p = [radial * theta.cos(), radial * theta.sin(), z];
            let f = (z / h + 0.5).clamp(0.0, 1.0);
            let c = [
                0.70 + 0.25 * f,
                0.30 + 0.55 * f,
                0.15 + 0.60 * f,
            ];
            (p, c)
        }
        // Two spheres on the x axis, picked by surface area.
        // Color: warm red lobe and cool blue lobe.
        Family::TwoLobe => {
            let (sep, r1, ratio) = (params[0], params[1], params[2]);
            let r2 = r1 * ratio;
            let pick_first = rng.uniform() * (r1 * r1 + r2 * r2) < r1 * r1;
            let (cx, r, c) = if pick_first {
                (-sep / 2.0, r1, [0.85, 0.30, 0.25])
            } else {
                (sep / 2.0, r2, [0.25, 0.40, 0.85])
            };
            let (mut x, mut y, mut z);
            loop {
                x = rng.normal();
                y = rng.normal();
                z = rng.normal();
                let n = (x * x + y * y + z * z).sqrt();
                if n > 1e-9 {
                    x /= n;
                    y /= n;
                    z /= n;
                    break;
                }
            }
            ([cx + r * x, r * y, r * z], c)
        }
    }
}

/// HSV to RGB, all channels in [0, 1].
fn hsv(h: f64, s: f64, v: f64) -> [f64; 3] {
    let h = (h.rem_euclid(1.0)) * 6.0;
    let i = h.floor() as usize % 6;
    let f = h - h.floor();
    let p = v * (1.0 - s);
    let q = v * (1.0 - s * f);
    let t = v * (1.0 - s * (1.0 - f));
    match i {
        0 => [v, t, p],
        1 => [q, v, p],
        2 => [p, v, t],
        3 => [p, q, v],
        4 => [t, p, v],
        _ => [v, p, q],
    }
}
