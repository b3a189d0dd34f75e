//! Entropy for Bernoulli shifts: the closed formula plus three empirical
//! estimators (symbol-frequency, dynamical-ball, and partition-itinerary),
//! all deterministic per seed.

use num::rational::BigRational;
use num::traits::Zero;

use crate::error::{Error, Result};
use crate::rational::{ln_rational, pow2_neg};
use crate::shift::{ProbabilityVector, ShiftSystem, Sidedness, SymbolicPoint};
use crate::system::derive_seed;

/// An entropy value in nats plus how it was obtained.
#[derive(Debug, Clone, serde::Serialize)]
pub struct EntropyEstimate {
    pub method: &'static str,
    pub value: f64,
    pub orbit_length: u64,
    pub samples: u64,
    /// Standard error of the sample mean (0 for closed-form values).
    pub std_error: f64,
    pub exact: bool,
}

/// Closed-form entropy `-sum p ln p` in nats.
pub fn bernoulli_entropy(probs: &ProbabilityVector) -> f64 {
    probs
        .entries()
        .iter()
        .enumerate()
        .map(|(k, p)| crate::rational::rational_to_f64(p) * probs.neg_log_prob((k + 1) as u8))
        .sum()
}

/// Empirical entropy along one orbit: `(1/n) sum_{j<n} -ln p_{x_j}`.
/// Converges to the entropy for almost every starting point; atypical
/// points (periodic sequences, say) converge to a different value.
pub fn birkhoff_frequency_entropy_at(
    shift: &ShiftSystem,
    x: &SymbolicPoint,
    n: u64,
) -> Result<EntropyEstimate> {
    if n == 0 {
        return Err(Error::InvalidParameter("orbit length must be positive".into()));
    }
    let sum: f64 = (0..n)
        .map(|j| shift.probs().neg_log_prob(shift.symbol(x, j as i64)))
        .sum();
    Ok(EntropyEstimate {
        method: "symbol-frequency",
        value: sum / n as f64,
        orbit_length: n,
        samples: 1,
        std_error: 0.0,
        exact: false,
    })
}

/// Symbol-frequency estimator along a sampled orbit.
pub fn birkhoff_frequency_entropy(
    shift: &ShiftSystem,
    seed: u64,
    n: u64,
) -> Result<EntropyEstimate> {
    birkhoff_frequency_entropy_at(shift, &shift.sample_point(seed), n)
}

/// Length of the agreement window forced by `d <= delta` (closed
/// condition): `l = min{k >= 0 : 2^-k <= delta}`.
fn closed_radius_window(delta: &BigRational) -> Result<u32> {
    if !(delta > &BigRational::zero()) {
        return Err(Error::InvalidParameter("delta must be positive".into()));
    }
    let mut l = 0u32;
    while &pow2_neg(l) > delta {
        l += 1;
        if l > 1100 {
            return Err(Error::InvalidParameter("delta is too small to resolve".into()));
        }
    }
    Ok(l)
}

/// Dynamical-ball estimator: average over sampled centers of
/// `-ln mu(C(x, n, delta)) / n`, where the closed dynamical ball
/// `C(x, n, delta) = {y : d(T^k x, T^k y) <= delta, 0 <= k < n}` is a
/// cylinder whose exact measure is a product of symbol probabilities.
pub fn brin_katok_entropy(
    shift: &ShiftSystem,
    delta: &BigRational,
    n: u64,
    samples: u64,
    seed: u64,
) -> Result<EntropyEstimate> {
    if n == 0 || samples == 0 {
        return Err(Error::InvalidParameter("orbit length and samples must be positive".into()));
    }
    let l = closed_radius_window(delta)? as i64;
    if l == 0 {
        // delta >= 1 constrains nothing: the ball is the whole space
        return Ok(EntropyEstimate {
            method: "dynamical-ball",
            value: 0.0,
            orbit_length: n,
            samples,
            std_error: 0.0,
            exact: true,
        });
    }
    // d(T^k x, T^k y) <= delta forces agreement on the l-window at every
    // time k < n, i.e. on indices lo..=hi
    let (lo, hi) = match shift.sidedness() {
        Sidedness::OneSided => (0i64, n as i64 + l - 2),
        Sidedness::TwoSided => (-(l - 1), n as i64 + l - 2),
    };
    let mut values = Vec::with_capacity(samples as usize);
    for s in 0..samples {
        let x = shift.sample_point(derive_seed(seed, s));
        let neg_log: f64 = (lo..=hi)
            .map(|i| shift.probs().neg_log_prob(shift.symbol(&x, i)))
            .sum();
        values.push(neg_log / n as f64);
    }
    Ok(summarize("dynamical-ball", values, n, false))
}

/// A finite partition of the alphabet into disjoint, covering cells.
#[derive(Debug, Clone)]
pub struct SymbolPartition {
    cells: Vec<Vec<u8>>,
    /// -ln mu(cell) per symbol (index 0 <-> symbol 1).
    neg_log_cell: Vec<f64>,
}

impl SymbolPartition {
    pub fn new(cells: Vec<Vec<u8>>, probs: &ProbabilityVector) -> Result<Self> {
        let alphabet = probs.len() as u8;
        let mut owner = vec![None; alphabet as usize];
        for (k, cell) in cells.iter().enumerate() {
            for &s in cell {
                if s == 0 || s > alphabet {
                    return Err(Error::InvalidSpec(format!("symbol {s} outside alphabet 1..={alphabet}")));
                }
                if owner[(s - 1) as usize].replace(k).is_some() {
                    return Err(Error::InvalidSpec(format!("symbol {s} appears in two cells")));
                }
            }
        }
        if owner.iter().any(Option::is_none) {
            return Err(Error::InvalidSpec("partition does not cover the alphabet".into()));
        }
        let cell_measure: Vec<BigRational> = cells
            .iter()
            .map(|cell| cell.iter().map(|&s| probs.prob(s)).sum())
            .collect();
        let neg_log_cell = (0..alphabet)
            .map(|s| -ln_rational(&cell_measure[owner[s as usize].unwrap()]))
            .collect();
        Ok(Self { cells, neg_log_cell })
    }

    /// One cell per symbol: the generating partition.
    pub fn per_symbol(probs: &ProbabilityVector) -> Self {
        let cells = (1..=probs.len() as u8).map(|s| vec![s]).collect();
        Self::new(cells, probs).expect("per-symbol partition is valid")
    }

    pub fn cells(&self) -> &[Vec<u8>] {
        &self.cells
    }

    fn neg_log_for_symbol(&self, s: u8) -> f64 {
        self.neg_log_cell[(s - 1) as usize]
    }
}

/// Partition-itinerary estimator: the itinerary cell of x over times
/// `0..n` is an independent product of cell events, so its exact measure is
/// the product of cell measures; the estimate averages `-ln mu / n` over
/// sampled centers.
pub fn partition_entropy(
    shift: &ShiftSystem,
    partition: &SymbolPartition,
    n: u64,
    samples: u64,
    seed: u64,
) -> Result<EntropyEstimate> {
    if n == 0 || samples == 0 {
        return Err(Error::InvalidParameter("orbit length and samples must be positive".into()));
    }
    let mut values = Vec::with_capacity(samples as usize);
    for s in 0..samples {
        let x = shift.sample_point(derive_seed(seed, s));
        let neg_log: f64 = (0..n)
            .map(|j| partition.neg_log_for_symbol(shift.symbol(&x, j as i64)))
            .sum();
        values.push(neg_log / n as f64);
    }
    Ok(summarize("partition-itinerary", values, n, false))
}

fn summarize(method: &'static str, values: Vec<f64>, n: u64, exact: bool) -> EntropyEstimate {
    let samples = values.len() as u64;
    let mean = values.iter().sum::<f64>() / samples as f64;
    let var = if samples > 1 {
        values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (samples - 1) as f64
    } else {
        0.0
    };
    EntropyEstimate {
        method,
        value: mean,
        orbit_length: n,
        samples,
        std_error: (var / samples as f64).sqrt(),
        exact,
    }
}
