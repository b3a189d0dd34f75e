//! One-sided and two-sided Bernoulli shifts with exact cylinder-set ball
//! measures.
//!
//! Points are infinite symbol sequences; we only ever materialize finitely
//! many symbols. A point is a window of explicitly pinned symbols over a
//! deterministic tail generator, so extending the window twice for the same
//! index always yields the same symbol and shifting is an O(1) change of
//! offset into a shared stream.

use std::collections::BTreeMap;
use std::sync::Arc;

use num::rational::BigRational;
use num::traits::{One, Signed, Zero};
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::system::Distance;

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Sidedness {
    OneSided,
    TwoSided,
}

/// Full-support probability vector over symbols `1..=N`, exact rationals
/// summing to 1.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbabilityVector {
    entries: Vec<BigRational>,
    cumulative: Arc<Vec<f64>>,
    neg_log: Vec<f64>,
}

impl ProbabilityVector {
    pub fn new(entries: Vec<BigRational>) -> Result<Self> {
        if entries.is_empty() || entries.len() > 255 {
            return Err(Error::InvalidSpec(format!(
                "alphabet size {} out of range 1..=255",
                entries.len()
            )));
        }
        if entries.iter().any(|p| !p.is_positive()) {
            return Err(Error::InvalidSpec(
                "probability vector entries must be positive (full support)".into(),
            ));
        }
        let sum: BigRational = entries.iter().sum();
        if !sum.is_one() {
            return Err(Error::InvalidSpec(format!(
                "probabilities sum to {}, not 1",
                crate::rational::format_rational(&sum)
            )));
        }
        let mut cumulative = Vec::with_capacity(entries.len());
        let mut acc = BigRational::zero();
        for p in &entries {
            acc += p;
            cumulative.push(crate::rational::rational_to_f64(&acc));
        }
        *cumulative.last_mut().unwrap() = 1.0;
        let neg_log = entries
            .iter()
            .map(|p| -crate::rational::ln_rational(p))
            .collect();
        Ok(Self { entries, cumulative: Arc::new(cumulative), neg_log })
    }

    pub fn uniform(n: usize) -> Self {
        let p = BigRational::new(1.into(), (n as i64).into());
        Self::new(vec![p; n]).expect("uniform vector is valid")
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Probability of symbol `k` (1-based).
    pub fn prob(&self, symbol: u8) -> &BigRational {
        &self.entries[(symbol - 1) as usize]
    }

    /// `-ln p_k` for symbol `k` (1-based).
    pub fn neg_log_prob(&self, symbol: u8) -> f64 {
        self.neg_log[(symbol - 1) as usize]
    }

    pub fn entries(&self) -> &[BigRational] {
        &self.entries
    }

    pub fn max_prob(&self) -> &BigRational {
        self.entries.iter().max().unwrap()
    }

    pub fn min_prob(&self) -> &BigRational {
        self.entries.iter().min().unwrap()
    }

    fn symbol_from_u64(&self, raw: u64) -> u8 {
        let u = (raw >> 11) as f64 * (1.0 / (1u64 << 53) as f64);
        for (k, c) in self.cumulative.iter().enumerate() {
            if u < *c {
                return (k + 1) as u8;
            }
        }
        self.entries.len() as u8
    }
}

/// Deterministic tail of a symbolic point beyond the pinned window.
#[derive(Debug, Clone)]
enum Tail {
    /// I.i.d. symbols per the shift's measure. Symbol at index `j` is a pure
    /// function of `(seed, j)` via a counter-based ChaCha stream, so no
    /// state is shared between readers.
    Random { seed: u64 },
    /// Periodic repetition of a finite word (index 0 maps to word[0]).
    Periodic { word: Vec<u8> },
}

#[derive(Debug)]
struct SymbolSource {
    window: BTreeMap<i64, u8>,
    tail: Tail,
}

impl SymbolSource {
    fn symbol(&self, j: i64, probs: &ProbabilityVector) -> u8 {
        if let Some(&s) = self.window.get(&j) {
            return s;
        }
        match &self.tail {
            Tail::Random { seed } => {
                // zigzag: 0,-1,1,-2,2,... -> 0,1,2,3,4,...
                let z = if j >= 0 { 2 * j as u128 } else { (2 * (-j) as u128) - 1 };
                let mut rng = ChaCha8Rng::seed_from_u64(*seed);
                rng.set_word_pos(z * 2);
                probs.symbol_from_u64(rng.next_u64())
            }
            Tail::Periodic { word } => word[(j.rem_euclid(word.len() as i64)) as usize],
        }
    }
}

/// A lazily extended point of the shift space. Cheap to clone; shifting
/// shares the underlying symbol stream.
#[derive(Debug, Clone)]
pub struct SymbolicPoint {
    sidedness: Sidedness,
    alphabet: u8,
    offset: i64,
    source: Arc<SymbolSource>,
}

impl SymbolicPoint {
    pub fn sidedness(&self) -> Sidedness {
        self.sidedness
    }

    pub fn alphabet(&self) -> u8 {
        self.alphabet
    }

    /// Symbol at view index `i` (one-sided points require `i >= 0`).
    pub fn symbol(&self, i: i64, probs: &ProbabilityVector) -> u8 {
        if self.sidedness == Sidedness::OneSided {
            assert!(i >= 0, "one-sided index must be nonnegative");
        }
        self.source.symbol(i + self.offset, probs)
    }

    /// The shifted view `T(sigma)`: symbol `i` of the result is symbol
    /// `i + 1` of `self`. O(1), shares the symbol stream.
    pub fn shifted(&self) -> SymbolicPoint {
        self.shifted_by(1)
    }

    pub fn shifted_by(&self, n: i64) -> SymbolicPoint {
        SymbolicPoint { offset: self.offset + n, ..self.clone() }
    }

    pub fn same_space(&self, other: &SymbolicPoint) -> bool {
        self.sidedness == other.sidedness && self.alphabet == other.alphabet
    }
}

/// Exact disagreement index, or a flag that the points agree on the whole
/// scanned window. "Beyond-horizon" is a first-class result, never an error.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DisagreementIndex {
    At(u64),
    BeyondHorizon,
}

/// Cylinder over a contiguous index range; an empty symbol list denotes the
/// full space (measure 1).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CylinderSet {
    lo: i64,
    symbols: Vec<u8>,
}

impl CylinderSet {
    pub fn full() -> Self {
        CylinderSet { lo: 0, symbols: Vec::new() }
    }

    pub fn new(lo: i64, symbols: Vec<u8>) -> Self {
        CylinderSet { lo, symbols }
    }

    pub fn is_full(&self) -> bool {
        self.symbols.is_empty()
    }

    pub fn lo(&self) -> i64 {
        self.lo
    }

    pub fn hi(&self) -> i64 {
        self.lo + self.symbols.len() as i64 - 1
    }

    pub fn symbols(&self) -> &[u8] {
        &self.symbols
    }

    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.symbols.is_empty()
    }

    /// Membership of a point (decidable from finitely many symbols).
    pub fn contains(&self, p: &SymbolicPoint, probs: &ProbabilityVector) -> bool {
        self.symbols
            .iter()
            .enumerate()
            .all(|(k, &s)| p.symbol(self.lo + k as i64, probs) == s)
    }
}

pub const DEFAULT_HORIZON: u64 = 1_000_000;

/// A full Bernoulli shift with the metric d = 2^-I.
#[derive(Debug, Clone)]
pub struct ShiftSystem {
    sidedness: Sidedness,
    probs: ProbabilityVector,
}

impl ShiftSystem {
    pub fn new(sidedness: Sidedness, probs: ProbabilityVector) -> Self {
        Self { sidedness, probs }
    }

    pub fn one_sided(probs: ProbabilityVector) -> Self {
        Self::new(Sidedness::OneSided, probs)
    }

    pub fn two_sided(probs: ProbabilityVector) -> Self {
        Self::new(Sidedness::TwoSided, probs)
    }

    pub fn sidedness(&self) -> Sidedness {
        self.sidedness
    }

    pub fn probs(&self) -> &ProbabilityVector {
        &self.probs
    }

    /// An i.i.d. point per the shift measure; deterministic per seed, with an
    /// empty explicit window (all symbols lazy).
    pub fn sample_point(&self, seed: u64) -> SymbolicPoint {
        SymbolicPoint {
            sidedness: self.sidedness,
            alphabet: self.probs.len() as u8,
            offset: 0,
            source: Arc::new(SymbolSource {
                window: BTreeMap::new(),
                tail: Tail::Random { seed },
            }),
        }
    }

    /// Point with explicitly pinned symbols on `[start, start+len)` over a
    /// random tail. Used by tests and witness constructions.
    pub fn point_with_window(&self, start: i64, symbols: &[u8], tail_seed: u64) -> SymbolicPoint {
        let window = symbols
            .iter()
            .enumerate()
            .map(|(k, &s)| (start + k as i64, s))
            .collect();
        SymbolicPoint {
            sidedness: self.sidedness,
            alphabet: self.probs.len() as u8,
            offset: 0,
            source: Arc::new(SymbolSource {
                window,
                tail: Tail::Random { seed: tail_seed },
            }),
        }
    }

    /// Fully periodic point (e.g. a constant sequence).
    pub fn periodic_point(&self, word: &[u8]) -> SymbolicPoint {
        assert!(!word.is_empty());
        SymbolicPoint {
            sidedness: self.sidedness,
            alphabet: self.probs.len() as u8,
            offset: 0,
            source: Arc::new(SymbolSource {
                window: BTreeMap::new(),
                tail: Tail::Periodic { word: word.to_vec() },
            }),
        }
    }

    /// Symbol of a point at view index `i`.
    pub fn symbol(&self, p: &SymbolicPoint, i: i64) -> u8 {
        p.symbol(i, &self.probs)
    }

    /// The shift map itself.
    pub fn apply_shift(&self, p: &SymbolicPoint) -> SymbolicPoint {
        p.shifted()
    }

    fn check_pair(&self, a: &SymbolicPoint, b: &SymbolicPoint) -> Result<()> {
        if !a.same_space(b)
            || a.sidedness != self.sidedness
            || a.alphabet as usize != self.probs.len()
        {
            return Err(Error::IncompatiblePoints(
                "points must share the system's sidedness and alphabet".into(),
            ));
        }
        Ok(())
    }

    /// Minimal (absolute) disagreement index up to `horizon`.
    pub fn disagreement_index(
        &self,
        a: &SymbolicPoint,
        b: &SymbolicPoint,
        horizon: u64,
    ) -> Result<DisagreementIndex> {
        self.check_pair(a, b)?;
        for k in 0..=horizon {
            let k_i = k as i64;
            match self.sidedness {
                Sidedness::OneSided => {
                    if a.symbol(k_i, &self.probs) != b.symbol(k_i, &self.probs) {
                        return Ok(DisagreementIndex::At(k));
                    }
                }
                Sidedness::TwoSided => {
                    if a.symbol(k_i, &self.probs) != b.symbol(k_i, &self.probs)
                        || (k > 0 && a.symbol(-k_i, &self.probs) != b.symbol(-k_i, &self.probs))
                    {
                        return Ok(DisagreementIndex::At(k));
                    }
                }
            }
        }
        Ok(DisagreementIndex::BeyondHorizon)
    }

    /// d(a, b) = 2^-I, or the upper bound 2^-horizon flagged as such when the
    /// disagreement index is beyond the horizon.
    pub fn shift_distance(&self, a: &SymbolicPoint, b: &SymbolicPoint, horizon: u64) -> Result<Distance> {
        Ok(match self.disagreement_index(a, b, horizon)? {
            DisagreementIndex::At(i) => Distance::Exact(pow2_neg_f64(i)),
            DisagreementIndex::BeyondHorizon => Distance::UpperBound(pow2_neg_f64(horizon)),
        })
    }

    /// Window length `m = min{k >= 0 : 2^-k < eps}` shared by both sidedness
    /// conventions.
    pub fn radius_window(&self, eps: f64) -> Result<u32> {
        if !(eps > 0.0) {
            return Err(Error::InvalidParameter(format!("radius {eps} must be positive")));
        }
        let mut m = 0u32;
        while !(pow2_neg_f64(m as u64) < eps) {
            m += 1;
            if m > 1100 {
                // 2^-1075 == 0.0 in f64; any positive eps has stopped by now.
                unreachable!("radius loop must terminate");
            }
        }
        Ok(m)
    }

    /// The open ball {tau : d(sigma, tau) < eps} as a cylinder: one-sided
    /// points fix indices 0..m-1, two-sided fix |i| <= m-1. eps > 1 gives the
    /// full space.
    pub fn ball_as_cylinder(&self, sigma: &SymbolicPoint, eps: f64) -> Result<CylinderSet> {
        let m = self.radius_window(eps)? as i64;
        if m == 0 {
            return Ok(CylinderSet::full());
        }
        let (lo, hi) = match self.sidedness {
            Sidedness::OneSided => (0, m - 1),
            Sidedness::TwoSided => (-(m - 1), m - 1),
        };
        let symbols = (lo..=hi).map(|i| sigma.symbol(i, &self.probs)).collect();
        Ok(CylinderSet::new(lo, symbols))
    }

    /// Exact product of symbol probabilities over the fixed range.
    pub fn cylinder_measure(&self, c: &CylinderSet) -> BigRational {
        c.symbols
            .iter()
            .map(|&s| self.probs.prob(s))
            .product::<BigRational>()
            * BigRational::one()
    }

    /// Exact open-ball measure (cylinder algebra).
    pub fn ball_measure(&self, sigma: &SymbolicPoint, eps: f64) -> Result<BigRational> {
        Ok(self.cylinder_measure(&self.ball_as_cylinder(sigma, eps)?))
    }

    /// `-ln` of the exact open-ball measure.
    pub fn ball_neg_log_measure(&self, sigma: &SymbolicPoint, eps: f64) -> Result<f64> {
        let m = self.radius_window(eps)? as i64;
        if m == 0 {
            return Ok(0.0);
        }
        let (lo, hi) = match self.sidedness {
            Sidedness::OneSided => (0, m - 1),
            Sidedness::TwoSided => (-(m - 1), m - 1),
        };
        Ok((lo..=hi)
            .map(|i| self.probs.neg_log_prob(sigma.symbol(i, &self.probs)))
            .sum())
    }
}

/// Exact f64 value of 2^-k (underflows to 0 beyond the f64 range, which is
/// still correct for threshold comparisons against positive values).
pub fn pow2_neg_f64(k: u64) -> f64 {
    if k > 1074 {
        0.0
    } else {
        f64::powi(2.0, -(k as i32))
    }
}
