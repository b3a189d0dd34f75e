//! Uniform interface over the concrete systems: Bernoulli shifts, rank-one
//! transformations, and finite products with the max metric.

use std::sync::Arc;

use num::rational::BigRational;
use num::traits::Signed;

use crate::error::{Error, Result};
use crate::rational::{ln_rational, rational_from_f64, rational_to_f64};
use crate::rank_one::RankOneSystem;
use crate::shift::{ShiftSystem, SymbolicPoint, DEFAULT_HORIZON};

/// A computed distance. `UpperBound` means the true distance is `<=` the
/// carried value but its exact value was not resolved (e.g. two sequences
/// agreeing past the scan horizon).
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Distance {
    Exact(f64),
    UpperBound(f64),
}

impl Distance {
    pub fn value(self) -> f64 {
        match self {
            Distance::Exact(v) | Distance::UpperBound(v) => v,
        }
    }

    pub fn is_exact(self) -> bool {
        matches!(self, Distance::Exact(_))
    }

    /// Max-metric combination. When an exact coordinate dominates an upper
    /// bound the max is exact; otherwise only an upper bound survives.
    pub fn max_metric(self, other: Distance) -> Distance {
        use Distance::*;
        match (self, other) {
            (Exact(x), Exact(y)) => Exact(x.max(y)),
            (Exact(x), UpperBound(u)) | (UpperBound(u), Exact(x)) => {
                if x >= u {
                    Exact(x)
                } else {
                    UpperBound(u)
                }
            }
            (UpperBound(x), UpperBound(y)) => UpperBound(x.max(y)),
        }
    }
}

/// A set measure: exact rational where the ball algebra allows it, otherwise
/// a sampled estimate with a 99% confidence half-width.
#[derive(Debug, Clone, PartialEq)]
pub enum Measure {
    Exact(BigRational),
    Approx { estimate: f64, samples: u64, half_width99: f64 },
}

impl Measure {
    pub fn value(&self) -> f64 {
        match self {
            Measure::Exact(q) => rational_to_f64(q),
            Measure::Approx { estimate, .. } => *estimate,
        }
    }

    pub fn is_exact(&self) -> bool {
        matches!(self, Measure::Exact(_))
    }

    /// -ln of the measure; exact variants use big-integer logs so measures
    /// far below f64 range still produce finite values.
    pub fn neg_log(&self) -> f64 {
        match self {
            Measure::Exact(q) => -ln_rational(q),
            Measure::Approx { estimate, .. } => -estimate.ln(),
        }
    }

    /// Product measure (factors are independent by construction).
    pub fn product(&self, other: &Measure) -> Measure {
        match (self, other) {
            (Measure::Exact(a), Measure::Exact(b)) => Measure::Exact(a * b),
            _ => {
                let (ea, eb) = (self.value(), other.value());
                let (ha, hb) = (self.half_width(), other.half_width());
                // first-order error propagation for a product of independent
                // estimates
                Measure::Approx {
                    estimate: ea * eb,
                    samples: self.samples().min(other.samples()),
                    half_width99: (ha * eb).abs() + (hb * ea).abs(),
                }
            }
        }
    }

    fn half_width(&self) -> f64 {
        match self {
            Measure::Exact(_) => 0.0,
            Measure::Approx { half_width99, .. } => *half_width99,
        }
    }

    fn samples(&self) -> u64 {
        match self {
            Measure::Exact(_) => u64::MAX,
            Measure::Approx { samples, .. } => *samples,
        }
    }
}

/// Deterministic seed splitting: every parallel stream gets an independent
/// seed derived from (base, index) by the splitmix64 finalizer.
pub fn derive_seed(base: u64, index: u64) -> u64 {
    let mut z = base.wrapping_add((index.wrapping_add(1)).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// A point of whichever system it belongs to.
#[derive(Debug, Clone)]
pub enum Point {
    Symbolic(SymbolicPoint),
    Orbit(BigRational),
    Pair(Box<Point>, Box<Point>),
}

impl Point {
    pub fn as_symbolic(&self) -> Result<&SymbolicPoint> {
        match self {
            Point::Symbolic(p) => Ok(p),
            _ => Err(Error::IncompatiblePoints("expected a symbolic point".into())),
        }
    }

    pub fn as_orbit(&self) -> Result<&BigRational> {
        match self {
            Point::Orbit(x) => Ok(x),
            _ => Err(Error::IncompatiblePoints("expected an interval point".into())),
        }
    }

    pub fn as_pair(&self) -> Result<(&Point, &Point)> {
        match self {
            Point::Pair(a, b) => Ok((a, b)),
            _ => Err(Error::IncompatiblePoints("expected a product point".into())),
        }
    }
}

/// Default stage depth used when sampling points from a rank-one space.
pub const DEFAULT_SAMPLE_DEPTH: usize = 8;

/// A metric system with a reference measure, closed under finite products.
#[derive(Debug, Clone)]
pub enum System {
    Shift(ShiftSystem),
    RankOne(Arc<RankOneSystem>),
    Product(Box<System>, Box<System>),
}

impl System {
    pub fn product(left: System, right: System) -> System {
        System::Product(Box::new(left), Box::new(right))
    }

    pub fn kind(&self) -> &'static str {
        match self {
            System::Shift(_) => "shift",
            System::RankOne(_) => "rank-one",
            System::Product(..) => "product",
        }
    }

    /// Draw a point per the system's measure; deterministic in `seed`.
    pub fn sample_point(&self, seed: u64) -> Result<Point> {
        match self {
            System::Shift(s) => Ok(Point::Symbolic(s.sample_point(seed))),
            System::RankOne(r) => Ok(Point::Orbit(r.sample_point(seed, DEFAULT_SAMPLE_DEPTH)?)),
            System::Product(l, r) => Ok(Point::Pair(
                Box::new(l.sample_point(derive_seed(seed, 0))?),
                Box::new(r.sample_point(derive_seed(seed, 1))?),
            )),
        }
    }

    /// One application of the transformation.
    pub fn transform(&self, p: &Point, depth_cap: usize) -> Result<Point> {
        match self {
            System::Shift(s) => Ok(Point::Symbolic(s.apply_shift(p.as_symbolic()?))),
            System::RankOne(r) => Ok(Point::Orbit(r.apply_t(p.as_orbit()?, depth_cap)?)),
            System::Product(l, r) => {
                let (a, b) = p.as_pair()?;
                Ok(Point::Pair(
                    Box::new(l.transform(a, depth_cap)?),
                    Box::new(r.transform(b, depth_cap)?),
                ))
            }
        }
    }

    pub fn transform_n(&self, p: &Point, n: u64, depth_cap: usize) -> Result<Point> {
        // shifts iterate in O(1)
        if let (System::Shift(_), Point::Symbolic(sp)) = (self, p) {
            return Ok(Point::Symbolic(sp.shifted_by(n as i64)));
        }
        let mut q = p.clone();
        for _ in 0..n {
            q = self.transform(&q, depth_cap)?;
        }
        Ok(q)
    }

    /// Distance between two points; `horizon` bounds symbol scans.
    pub fn distance(&self, a: &Point, b: &Point, horizon: u64) -> Result<Distance> {
        match self {
            System::Shift(s) => s.shift_distance(a.as_symbolic()?, b.as_symbolic()?, horizon),
            System::RankOne(_) => {
                let d = (a.as_orbit()? - b.as_orbit()?).abs();
                Ok(Distance::Exact(rational_to_f64(&d)))
            }
            System::Product(l, r) => {
                let (a1, a2) = a.as_pair()?;
                let (b1, b2) = b.as_pair()?;
                Ok(l.distance(a1, b1, horizon)?.max_metric(r.distance(a2, b2, horizon)?))
            }
        }
    }

    /// Measure of the open ball B_eps(x). Max-metric balls factor, so the
    /// product case is the product of factor ball measures.
    pub fn ball_measure(&self, x: &Point, eps: f64) -> Result<Measure> {
        match self {
            System::Shift(s) => Ok(Measure::Exact(s.ball_measure(x.as_symbolic()?, eps)?)),
            System::RankOne(r) => {
                let eps_q = rational_from_f64(eps)?;
                Ok(Measure::Exact(r.lebesgue_ball_measure(x.as_orbit()?, &eps_q)?))
            }
            System::Product(l, r) => {
                let (a, b) = x.as_pair()?;
                Ok(l.ball_measure(a, eps)?.product(&r.ball_measure(b, eps)?))
            }
        }
    }

    /// -ln mu(B_eps(x)), exact in the shift case even for windows whose
    /// measure underflows f64.
    pub fn ball_neg_log_measure(&self, x: &Point, eps: f64) -> Result<f64> {
        match self {
            System::Shift(s) => s.ball_neg_log_measure(x.as_symbolic()?, eps),
            System::RankOne(_) => Ok(self.ball_measure(x, eps)?.neg_log()),
            System::Product(l, r) => {
                let (a, b) = x.as_pair()?;
                Ok(l.ball_neg_log_measure(a, eps)? + r.ball_neg_log_measure(b, eps)?)
            }
        }
    }

    pub fn default_horizon(&self) -> u64 {
        DEFAULT_HORIZON
    }
}
