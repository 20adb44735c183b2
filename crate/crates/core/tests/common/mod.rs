//! Shared generators and independent oracles for the integration suites.
#![allow(dead_code)]

use nonlocality::{
    binary_condition, interval, Boost, Event, JammingConfiguration,
    DEFAULT_GEOMETRIC_TOL,
};
use rand::Rng;
use rand_distr::StandardNormal;

pub const TOL: f64 = DEFAULT_GEOMETRIC_TOL;

pub fn ev(c: &[f64]) -> Event {
    Event::from_coords(c).unwrap()
}

pub fn random_unit<R: Rng>(rng: &mut R, d: usize) -> Vec<f64> {
    loop {
        let g: Vec<f64> = (0..d).map(|_| rng.sample(StandardNormal)).collect();
        let n = g.iter().map(|x| x * x).sum::<f64>().sqrt();
        if n > 1e-9 {
            return g.iter().map(|x| x / n).collect();
        }
    }
}

pub fn random_boost<R: Rng>(rng: &mut R, d: usize, max_speed: f64) -> Boost {
    let u = random_unit(rng, d);
    let speed = rng.random_range(0.0..max_speed);
    Boost::new(u.iter().map(|x| x * speed).collect()).unwrap()
}

/// Random orthogonal matrix as a product of Householder reflections.
pub fn random_orthogonal<R: Rng>(rng: &mut R, d: usize) -> Vec<Vec<f64>> {
    let mut m: Vec<Vec<f64>> = (0..d)
        .map(|i| (0..d).map(|k| if i == k { 1.0 } else { 0.0 }).collect())
        .collect();
    for _ in 0..d {
        let w = random_unit(rng, d);
        for row in m.iter_mut() {
            let dot: f64 = row.iter().zip(&w).map(|(a, b)| a * b).sum();
            for (x, wi) in row.iter_mut().zip(&w) {
                *x -= 2.0 * dot * wi;
            }
        }
    }
    m
}

/// A conformal Poincaré map `e ↦ scale · R(Λ e) + shift`.
pub struct Pose {
    pub boost: Boost,
    pub rotation: Vec<Vec<f64>>,
    pub scale: f64,
    pub shift: Vec<f64>,
}

impl Pose {
    pub fn random<R: Rng>(rng: &mut R, d: usize) -> Self {
        Pose {
            boost: random_boost(rng, d, 0.9),
            rotation: random_orthogonal(rng, d),
            scale: rng.random_range(0.2..5.0),
            shift: (0..=d).map(|_| rng.random_range(-10.0..10.0)).collect(),
        }
    }

    pub fn apply(&self, e: &Event) -> Event {
        let b = self.boost.apply(e).unwrap();
        let x = b.spatial();
        let d = x.len();
        let mut coords: Vec<f64> = self
            .rotation
            .iter()
            .map(|row| row.iter().zip(x).map(|(r, v)| r * v).sum::<f64>())
            .collect();
        coords.push(b.time());
        for (c, s) in coords.iter_mut().zip(&self.shift) {
            *c = *c * self.scale + s;
        }
        debug_assert_eq!(coords.len(), d + 1);
        Event::from_coords(&coords).unwrap()
    }

    pub fn apply_cfg(&self, c: &JammingConfiguration) -> JammingConfiguration {
        JammingConfiguration::new(self.apply(&c.a), self.apply(&c.b), self.apply(&c.j)).unwrap()
    }
}

fn spacelike(p: &Event, q: &Event) -> bool {
    interval(p, q).unwrap().squared < -TOL
}

/// Uniform jammer near the canonical pair, rejected until mutually spacelike.
pub fn random_canonical_valid<R: Rng>(rng: &mut R, d: usize) -> JammingConfiguration {
    loop {
        let mut c: Vec<f64> = (0..d).map(|_| rng.random_range(-2.5..2.5)).collect();
        c.push(rng.random_range(-2.0..1.5));
        let cfg = JammingConfiguration::canonical(ev(&c)).unwrap();
        if spacelike(&cfg.a, &cfg.j) && spacelike(&cfg.b, &cfg.j) {
            return cfg;
        }
    }
}

/// Canonical configuration satisfying the binary condition with margin,
/// filtered with the closed-form oracles rather than the library search.
pub fn random_canonical_admissible<R: Rng>(rng: &mut R, d: usize) -> JammingConfiguration {
    loop {
        let cfg = random_canonical_valid(rng, d);
        let margin = if d == 1 {
            apex_slack_1d(&cfg)
        } else {
            let rho = cfg.j.spatial()[1..].iter().map(|v| v * v).sum::<f64>().sqrt();
            ridge_infimum(cfg.j.spatial()[0], rho, cfg.j.time())
        };
        if margin > 1e-6 {
            return cfg;
        }
    }
}

/// Closed-form 1-D check computed in the caller's frame without any boost:
/// the forward cones of `a` and `b` overlap in the future cone of the point
/// where their inner null rays meet.
pub fn apex_slack_1d(cfg: &JammingConfiguration) -> f64 {
    let (xa, ta) = (cfg.a.spatial()[0], cfg.a.time());
    let (xb, tb) = (cfg.b.spatial()[0], cfg.b.time());
    let (xl, tl, xr, tr) = if xa <= xb { (xa, ta, xb, tb) } else { (xb, tb, xa, ta) };
    // x − xl = t − tl and xr − x = t − tr.
    let x = 0.5 * (xl + xr) + 0.5 * (tr - tl);
    let t = 0.5 * (tl + tr) + 0.5 * (xr - xl);
    (t - cfg.j.time()) - (x - cfg.j.spatial()[0]).abs()
}

/// Exact infimum of the canonical ridge slack from its stationary point.
///
/// With `g(s) = √(1+s²) − √(jx² + (s+ρ)²)`, `g′(s) = 0` reduces to
/// `s(|jx| − 1) = ρ`. For `|jx| > 1` the minimum sits at `s* = ρ/(|jx|−1)`;
/// otherwise `g` is non-increasing and the infimum is the limit `−ρ`.
pub fn ridge_infimum(jx: f64, rho: f64, jt: f64) -> f64 {
    let g = |s: f64| (1.0 + s * s).sqrt() - (jx * jx + (s + rho) * (s + rho)).sqrt();
    if jx.abs() > 1.0 {
        g(rho / (jx.abs() - 1.0)) - jt
    } else {
        -rho - jt
    }
}

pub fn future_slack(apex: &Event, p: &Event) -> f64 {
    let dist: f64 = apex
        .spatial()
        .iter()
        .zip(p.spatial())
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        .sqrt();
    (p.time() - apex.time()) - dist
}

/// Rejection sample of a point in the closed overlap of the future cones of
/// `a` and `b`, with time at most `t_max` above the later of the two.
pub fn sample_overlap<R: Rng>(rng: &mut R, a: &Event, b: &Event, t_max: f64) -> Event {
    let d = a.dim();
    let t0 = a.time().max(b.time());
    let center: Vec<f64> = a
        .spatial()
        .iter()
        .zip(b.spatial())
        .map(|(x, y)| 0.5 * (x + y))
        .collect();
    let half: f64 = a
        .spatial()
        .iter()
        .zip(b.spatial())
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
        * 0.5;
    loop {
        let t = t0 + rng.random_range(0.0..t_max);
        let radius = t - a.time().min(b.time()) + half;
        let mut c: Vec<f64> = center
            .iter()
            .map(|x| x + rng.random_range(-radius..radius))
            .collect();
        c.push(t);
        let p = Event::from_coords(&c).unwrap();
        if future_slack(a, &p) >= 0.0 && future_slack(b, &p) >= 0.0 {
            debug_assert_eq!(p.dim(), d);
            return p;
        }
    }
}

/// Random configuration in general position: an admissible canonical one
/// under a random pose.
pub fn random_posed_admissible<R: Rng>(rng: &mut R, d: usize) -> JammingConfiguration {
    let cfg = random_canonical_admissible(rng, d);
    Pose::random(rng, d).apply_cfg(&cfg)
}

/// Multi-jammer scenario in which every binary condition holds. Most new
/// jammers are dropped inside the readable overlap of an earlier
/// configuration so the influence graph has edges to follow.
pub fn random_scenario<R: Rng>(rng: &mut R, d: usize, size: usize) -> Vec<JammingConfiguration> {
    let mut out: Vec<JammingConfiguration> = Vec::with_capacity(size);
    while out.len() < size {
        let cfg = random_canonical_admissible(rng, d);
        let mut pose = Pose::random(rng, d);
        if !out.is_empty() && rng.random_bool(0.8) {
            let host = &out[rng.random_range(0..out.len())];
            // The overlap starts no later than half the host's spatial
            // separation above its later event.
            let span = host.a.spatial().iter().zip(host.b.spatial()).map(|(p, q)| (p - q).abs()).sum::<f64>();
            let target = sample_overlap(rng, &host.a, &host.b, span + 5.0);
            let landed = pose.apply(&cfg.j);
            for (s, (want, got)) in pose
                .shift
                .iter_mut()
                .zip(target.to_coords().iter().zip(landed.to_coords()))
            {
                *s += want - got;
            }
        }
        let posed = pose.apply_cfg(&cfg);
        if binary_condition(&posed, TOL).is_ok_and(|v| v.holds) {
            out.push(posed);
        }
    }
    out
}
