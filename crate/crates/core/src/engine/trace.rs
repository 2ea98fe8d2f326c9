use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::model::{Time, Valuation};
use crate::rta::Mode;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Rule {
    EnvInput,
    TimeProgress,
    DmStep,
    NodeStep,
}

/// One applied transition rule.
///
/// Serialized as a single JSON object with fields in this order:
/// `time, rule, node, mode_before, mode_after, writes, safe, safer,
/// inv_holds`. The three flags are conjunctions over all modules,
/// evaluated on the configuration after the step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Event {
    pub time: Time,
    pub rule: Rule,
    pub node: Option<String>,
    pub mode_before: Option<Mode>,
    pub mode_after: Option<Mode>,
    pub writes: Valuation,
    pub safe: bool,
    pub safer: bool,
    pub inv_holds: bool,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Trace {
    pub events: Vec<Event>,
}

impl Trace {
    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    /// One JSON object per line, each line newline-terminated.
    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        for e in &self.events {
            out.push_str(&serde_json::to_string(e).expect("events serialize"));
            out.push('\n');
        }
        out
    }

    pub fn from_jsonl(text: &str) -> Result<Trace, serde_json::Error> {
        let events = text
            .lines()
            .filter(|l| !l.trim().is_empty())
            .map(serde_json::from_str)
            .collect::<Result<_, _>>()?;
        Ok(Trace { events })
    }

    /// SHA-256 of the JSON-lines encoding, hex.
    pub fn digest(&self) -> String {
        let mut h = Sha256::new();
        for e in &self.events {
            h.update(serde_json::to_vec(e).expect("events serialize"));
            h.update(b"\n");
        }
        hex::encode(h.finalize())
    }

    pub fn first_violation(&self) -> Option<usize> {
        self.events.iter().position(|e| !e.inv_holds)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Value;

    fn ev(time: Time) -> Event {
        Event {
            time,
            rule: Rule::DmStep,
            node: Some("dm".into()),
            mode_before: Some(Mode::Sc),
            mode_after: Some(Mode::Ac),
            writes: Valuation::new().with("u", Value::Scalar(-1.0)),
            safe: true,
            safer: true,
            inv_holds: true,
        }
    }

    #[test]
    fn field_order_is_fixed() {
        let t = Trace { events: vec![ev(3)] };
        assert_eq!(
            t.to_jsonl(),
            "{\"time\":3,\"rule\":\"dm-step\",\"node\":\"dm\",\"mode_before\":\"SC\",\"mode_after\":\"AC\",\
             \"writes\":{\"u\":-1.0},\"safe\":true,\"safer\":true,\"inv_holds\":true}\n"
        );
    }

    #[test]
    fn jsonl_round_trip_and_digest() {
        let t = Trace { events: vec![ev(0), ev(1)] };
        let back = Trace::from_jsonl(&t.to_jsonl()).unwrap();
        assert_eq!(back, t);
        assert_eq!(back.digest(), t.digest());
        let mut other = t.clone();
        other.events[1].time = 2;
        assert_ne!(other.digest(), t.digest());
        let expected = hex::encode(Sha256::digest(t.to_jsonl().as_bytes()));
        assert_eq!(t.digest(), expected);
    }

    #[test]
    fn awkward_floats_survive_the_round_trip() {
        let mut e = ev(0);
        e.writes = Valuation::new().with("x", Value::Vector(vec![0.1 + 0.2, -1.0 / 3.0, 1e-300, 0.006_999_999_999_999_999]));
        let t = Trace { events: vec![e] };
        assert_eq!(Trace::from_jsonl(&t.to_jsonl()).unwrap().digest(), t.digest());
    }
}
