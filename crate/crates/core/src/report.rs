//! Report serialization: canonical JSON (reals as 12-significant-digit
//! strings, objects with sorted keys) and per-trial CSV tables. Payload
//! bytes are a pure function of (config, seed); wall time lives outside the
//! payload.

use serde::Serialize;
use serde_json::Value;

use crate::entropy::EntropyEstimate;
use crate::error::{Error, Result};
use crate::sensitivity::{
    RankOneFailureWitness, RateEstimate, RpsFailureWitness, RpsVerdict, RsVerdict,
};

/// 12 significant digits, locale-independent.
pub fn format_real(v: f64) -> String {
    format!("{v:.11e}")
}

/// Serialize any value and rewrite every float as a 12-significant-digit
/// string so payload bytes do not depend on float formatting quirks.
pub fn canonical_value<T: Serialize + ?Sized>(t: &T) -> Result<Value> {
    let v = serde_json::to_value(t)
        .map_err(|e| Error::Config(format!("serialization failed: {e}")))?;
    Ok(canonicalize(v))
}

fn canonicalize(v: Value) -> Value {
    match v {
        Value::Number(n) => {
            if n.is_u64() || n.is_i64() {
                Value::Number(n)
            } else {
                Value::String(format_real(n.as_f64().expect("float number")))
            }
        }
        Value::Array(items) => Value::Array(items.into_iter().map(canonicalize).collect()),
        Value::Object(map) => {
            Value::Object(map.into_iter().map(|(k, v)| (k, canonicalize(v))).collect())
        }
        other => other,
    }
}

/// The result of one experiment, ready to serialize.
#[derive(Debug, Clone)]
pub enum Payload {
    Rs(RsVerdict),
    Rps(RpsVerdict),
    RpsWitness(RpsFailureWitness),
    RankOneWitness(RankOneFailureWitness),
    Entropy(EntropyEstimate),
    Rate(RateEstimate),
    BoundCheck(BoundCheckReport),
}

/// Combined pairwise-sensitivity / partition-entropy consistency check: a
/// passing sensitivity verdict at rate `a` must come with partition entropy
/// at least `1/a - tolerance`.
#[derive(Debug, Clone, Serialize)]
pub struct BoundCheckReport {
    pub a: f64,
    pub tolerance: f64,
    pub threshold: f64,
    pub entropy: EntropyEstimate,
    pub rps: RpsVerdict,
    pub consistent: bool,
}

impl Payload {
    pub fn to_json(&self) -> Result<Value> {
        match self {
            Payload::Rs(v) => canonical_value(v),
            Payload::Rps(v) => canonical_value(v),
            Payload::RpsWitness(v) => canonical_value(v),
            Payload::RankOneWitness(v) => canonical_value(v),
            Payload::Entropy(v) => canonical_value(v),
            Payload::Rate(v) => canonical_value(v),
            Payload::BoundCheck(v) => canonical_value(v),
        }
    }

    /// Per-trial audit rows.
    pub fn to_csv(&self) -> String {
        match self {
            Payload::Rs(v) => {
                let mut out =
                    String::from("trial,epsilon,neg_log_ball,bound,min_separating_time,passed\n");
                for t in &v.trials {
                    out.push_str(&format!(
                        "{},{},{},{},{},{}\n",
                        t.trial,
                        format_real(t.epsilon),
                        format_real(t.neg_log_ball),
                        t.bound,
                        opt(t.min_separating_time),
                        t.passed
                    ));
                }
                out
            }
            Payload::Rps(v) => rps_csv(v),
            Payload::RpsWitness(v) => witness_csv(&v.audit),
            Payload::RankOneWitness(v) => witness_csv(&v.audit),
            Payload::Entropy(e) => entropy_csv(e),
            Payload::Rate(r) => format!(
                "rate,reciprocal,orbit_length\n{},{},{}\n",
                format_real(r.rate),
                format_real(r.reciprocal),
                r.orbit_length
            ),
            Payload::BoundCheck(b) => rps_csv(&b.rps),
        }
    }
}

fn opt<T: std::fmt::Display>(v: Option<T>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

fn rps_csv(v: &RpsVerdict) -> String {
    let mut out =
        String::from("trial,distance,neg_log_ball,bound,first_sensitive_time,passed,excluded\n");
    for t in &v.trials {
        out.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            t.trial,
            format_real(t.distance),
            opt(t.neg_log_ball.map(format_real)),
            t.bound,
            opt(t.first_sensitive_time),
            t.passed,
            t.excluded
        ));
    }
    out
}

fn witness_csv(audit: &[crate::sensitivity::WitnessAuditRow]) -> String {
    let mut out = String::from("n,worst_distance,within_delta\n");
    for row in audit {
        out.push_str(&format!("{},{},{}\n", row.n, row.worst_distance, row.within_delta));
    }
    out
}

fn entropy_csv(e: &EntropyEstimate) -> String {
    format!(
        "method,value,orbit_length,samples,std_error,exact\n{},{},{},{},{},{}\n",
        e.method,
        format_real(e.value),
        e.orbit_length,
        e.samples,
        format_real(e.std_error),
        e.exact
    )
}
