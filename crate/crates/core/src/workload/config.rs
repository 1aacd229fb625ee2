//! Flat `key = value` scenario config.
//!
//! ```text
//! # M/M/1 with dual rewards
//! n_jobs = 100000
//! seed = 1
//! arrival.kind = exponential
//! arrival.param.rate = 0.9
//! service.kind = exponential
//! service.param.rate = 1
//! deadline.kind = exponential
//! deadline.param.rate = 0.005
//! reward.kind = two_point
//! reward.param.lo = 4
//! reward.param.hi = 10
//! reward.param.p_hi = 0.5
//! ```
//!
//! Distribution kinds and their parameters:
//! `deterministic` (`value`), `exponential` (`rate`),
//! `two_point` (`lo`, `hi`, `p_hi`), `discrete` (`values`, `probs`, both
//! comma-separated). Optional keys: `cmutheta.classes`, and declared bounds
//! `bounds.{b_min,b_max,d_min,d_max,w_min,w_max}` (all six together) with
//! optional `bounds.delta_w` and `bounds.a_delta`.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use thiserror::Error;

use super::{DistSpec, ScenarioSpec, DEFAULT_REWARD_CLASSES};
use crate::job::ScenarioBounds;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConfigError {
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("missing key `{0}`")]
    Missing(String),
    #[error("key `{key}`: {message}")]
    Value { key: String, message: String },
    #[error("unknown key `{0}`")]
    Unknown(String),
    #[error("invalid scenario: {0}")]
    Invalid(String),
}

const ATTRS: [&str; 4] = ["arrival", "service", "deadline", "reward"];
const BOUND_KEYS: [&str; 6] = ["b_min", "b_max", "d_min", "d_max", "w_min", "w_max"];

struct Fields {
    map: BTreeMap<String, (usize, String)>,
}

impl Fields {
    fn take(&mut self, key: &str) -> Option<String> {
        self.map.remove(key).map(|(_, v)| v)
    }

    fn require(&mut self, key: &str) -> Result<String, ConfigError> {
        self.take(key).ok_or_else(|| ConfigError::Missing(key.to_string()))
    }

    fn num<T: std::str::FromStr>(key: &str, raw: &str) -> Result<T, ConfigError>
    where
        T::Err: std::fmt::Display,
    {
        raw.parse::<T>().map_err(|e| ConfigError::Value {
            key: key.to_string(),
            message: format!("cannot parse `{raw}`: {e}"),
        })
    }

    fn require_f64(&mut self, key: &str) -> Result<f64, ConfigError> {
        let raw = self.require(key)?;
        Self::num(key, &raw)
    }

    fn optional_f64(&mut self, key: &str) -> Result<Option<f64>, ConfigError> {
        self.take(key).map(|raw| Self::num(key, &raw)).transpose()
    }

    fn require_list(&mut self, key: &str) -> Result<Vec<f64>, ConfigError> {
        let raw = self.require(key)?;
        raw.split(',').map(|s| Self::num(key, s.trim())).collect()
    }
}

fn tokenize(text: &str) -> Result<Fields, ConfigError> {
    let mut map = BTreeMap::new();
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = match raw.find('#') {
            Some(pos) => &raw[..pos],
            None => raw,
        }
        .trim();
        if line.is_empty() {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(ConfigError::Syntax {
                line: line_no,
                message: "expected `key = value`".into(),
            });
        };
        let (key, value) = (key.trim(), value.trim());
        if key.is_empty() || key.contains(char::is_whitespace) {
            return Err(ConfigError::Syntax {
                line: line_no,
                message: format!("malformed key `{key}`"),
            });
        }
        if let Some((first, _)) = map.insert(key.to_string(), (line_no, value.to_string())) {
            return Err(ConfigError::Syntax {
                line: line_no,
                message: format!("duplicate key `{key}` (first set on line {first})"),
            });
        }
    }
    Ok(Fields { map })
}

fn parse_dist(fields: &mut Fields, attr: &str) -> Result<DistSpec, ConfigError> {
    let kind = fields.require(&format!("{attr}.kind"))?;
    let p = |name: &str| format!("{attr}.param.{name}");
    let spec = match kind.as_str() {
        "deterministic" => DistSpec::Deterministic {
            value: fields.require_f64(&p("value"))?,
        },
        "exponential" => DistSpec::Exponential {
            rate: fields.require_f64(&p("rate"))?,
        },
        "two_point" => DistSpec::TwoPoint {
            lo: fields.require_f64(&p("lo"))?,
            hi: fields.require_f64(&p("hi"))?,
            p_hi: fields.require_f64(&p("p_hi"))?,
        },
        "discrete" => DistSpec::Discrete {
            values: fields.require_list(&p("values"))?,
            probs: fields.require_list(&p("probs"))?,
        },
        other => {
            return Err(ConfigError::Value {
                key: format!("{attr}.kind"),
                message: format!(
                    "unknown distribution `{other}` (expected deterministic, exponential, two_point or discrete)"
                ),
            })
        }
    };
    spec.validate().map_err(|e| ConfigError::Value {
        key: format!("{attr}.kind"),
        message: e.to_string(),
    })?;
    Ok(spec)
}

fn parse_bounds(fields: &mut Fields) -> Result<Option<ScenarioBounds>, ConfigError> {
    let mut vals = [None; 6];
    for (slot, name) in vals.iter_mut().zip(BOUND_KEYS) {
        *slot = fields.optional_f64(&format!("bounds.{name}"))?;
    }
    let delta_w = fields.optional_f64("bounds.delta_w")?;
    let a_delta = fields.optional_f64("bounds.a_delta")?;
    if vals.iter().all(Option::is_none) {
        if delta_w.is_some() || a_delta.is_some() {
            return Err(ConfigError::Missing("bounds.b_min".into()));
        }
        return Ok(None);
    }
    let get = |i: usize| vals[i].ok_or_else(|| ConfigError::Missing(format!("bounds.{}", BOUND_KEYS[i])));
    let bounds = ScenarioBounds {
        b_min: get(0)?,
        b_max: get(1)?,
        d_min: get(2)?,
        d_max: get(3)?,
        w_min: get(4)?,
        w_max: get(5)?,
        delta_w,
        a_delta,
    };
    bounds.validate().map_err(|e| ConfigError::Invalid(e.to_string()))?;
    Ok(Some(bounds))
}

/// Parses a scenario config. Unknown and duplicate keys are errors.
pub fn parse_config(text: &str) -> Result<ScenarioSpec, ConfigError> {
    let mut fields = tokenize(text)?;
    let n_jobs: usize = {
        let raw = fields.require("n_jobs")?;
        Fields::num("n_jobs", &raw)?
    };
    let seed: u64 = match fields.take("seed") {
        Some(raw) => Fields::num("seed", &raw)?,
        None => 0,
    };
    let reward_classes: usize = match fields.take("cmutheta.classes") {
        Some(raw) => Fields::num("cmutheta.classes", &raw)?,
        None => DEFAULT_REWARD_CLASSES,
    };
    let mut dists = Vec::with_capacity(4);
    for attr in ATTRS {
        dists.push(parse_dist(&mut fields, attr)?);
    }
    let bounds = parse_bounds(&mut fields)?;
    if let Some((key, _)) = fields.map.into_iter().next() {
        return Err(ConfigError::Unknown(key));
    }
    let mut dists = dists.into_iter();
    let mut next = || dists.next().expect("four attributes parsed");
    let spec = ScenarioSpec {
        arrival: next(),
        service: next(),
        deadline: next(),
        reward: next(),
        n_jobs,
        seed,
        bounds,
        reward_classes,
    };
    spec.validate().map_err(|e| ConfigError::Invalid(e.to_string()))?;
    Ok(spec)
}

fn join(xs: &[f64]) -> String {
    xs.iter().map(f64::to_string).collect::<Vec<_>>().join(",")
}

pub(super) fn render(spec: &ScenarioSpec) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "n_jobs = {}", spec.n_jobs);
    let _ = writeln!(out, "seed = {}", spec.seed);
    if spec.reward_classes != DEFAULT_REWARD_CLASSES {
        let _ = writeln!(out, "cmutheta.classes = {}", spec.reward_classes);
    }
    for (attr, dist) in ATTRS
        .iter()
        .zip([&spec.arrival, &spec.service, &spec.deadline, &spec.reward])
    {
        let _ = writeln!(out, "{attr}.kind = {}", dist.kind_name());
        match dist {
            DistSpec::Deterministic { value } => {
                let _ = writeln!(out, "{attr}.param.value = {value}");
            }
            DistSpec::Exponential { rate } => {
                let _ = writeln!(out, "{attr}.param.rate = {rate}");
            }
            DistSpec::TwoPoint { lo, hi, p_hi } => {
                let _ = writeln!(out, "{attr}.param.lo = {lo}");
                let _ = writeln!(out, "{attr}.param.hi = {hi}");
                let _ = writeln!(out, "{attr}.param.p_hi = {p_hi}");
            }
            DistSpec::Discrete { values, probs } => {
                let _ = writeln!(out, "{attr}.param.values = {}", join(values));
                let _ = writeln!(out, "{attr}.param.probs = {}", join(probs));
            }
        }
    }
    if let Some(b) = &spec.bounds {
        let vals = [b.b_min, b.b_max, b.d_min, b.d_max, b.w_min, b.w_max];
        for (name, v) in BOUND_KEYS.iter().zip(vals) {
            let _ = writeln!(out, "bounds.{name} = {v}");
        }
        if let Some(v) = b.delta_w {
            let _ = writeln!(out, "bounds.delta_w = {v}");
        }
        if let Some(v) = b.a_delta {
            let _ = writeln!(out, "bounds.a_delta = {v}");
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::workload::Study;
    use proptest::prelude::*;

    const MMB: &str = "\
# dual reward study
n_jobs = 100000
seed = 1
arrival.kind = exponential
arrival.param.rate = 0.9
service.kind = exponential
service.param.rate = 1
deadline.kind = exponential   # impatience
deadline.param.rate = 0.005
reward.kind = two_point
reward.param.lo = 4
reward.param.hi = 10
reward.param.p_hi = 0.5
";

    #[test]
    fn parses_study_config() {
        let spec = parse_config(MMB).unwrap();
        assert_eq!(spec, Study::Mmb.scenario(0.9, 100_000, 1));
    }

    #[test]
    fn reports_errors() {
        assert!(matches!(parse_config("n_jobs 3"), Err(ConfigError::Syntax { line: 1, .. })));
        assert!(matches!(
            parse_config(&format!("{MMB}seed = 2\n")),
            Err(ConfigError::Syntax { .. })
        ));
        assert!(matches!(
            parse_config(&format!("{MMB}colour = blue\n")),
            Err(ConfigError::Unknown(k)) if k == "colour"
        ));
        assert!(matches!(
            parse_config(&MMB.replace("n_jobs = 100000\n", "")),
            Err(ConfigError::Missing(k)) if k == "n_jobs"
        ));
        assert!(parse_config(&MMB.replace("rate = 0.9", "rate = -1")).is_err());
        assert!(parse_config(&MMB.replace("two_point", "gamma")).is_err());
        assert!(parse_config(&format!("{MMB}bounds.b_min = 1\n")).is_err());
    }

    #[test]
    fn discrete_lists() {
        let text = MMB.replace(
            "reward.kind = two_point\nreward.param.lo = 4\nreward.param.hi = 10\nreward.param.p_hi = 0.5\n",
            "reward.kind = discrete\nreward.param.values = 1, 2,3\nreward.param.probs = 0.25,0.25,0.5\n",
        );
        let spec = parse_config(&text).unwrap();
        assert_eq!(
            spec.reward,
            DistSpec::Discrete {
                values: vec![1.0, 2.0, 3.0],
                probs: vec![0.25, 0.25, 0.5]
            }
        );
    }

    fn positive() -> impl Strategy<Value = f64> {
        (1e-6f64..1e6).prop_filter("positive", |v| *v > 0.0)
    }

    fn dist() -> impl Strategy<Value = DistSpec> {
        prop_oneof![
            positive().prop_map(|value| DistSpec::Deterministic { value }),
            positive().prop_map(|rate| DistSpec::Exponential { rate }),
            (positive(), positive(), 0.01f64..0.99).prop_map(|(a, b, p)| {
                let (lo, hi) = if a < b { (a, b) } else { (b, a + 1.0) };
                DistSpec::TwoPoint { lo, hi, p_hi: p }
            }),
            (positive(), positive()).prop_map(|(a, b)| DistSpec::Discrete {
                values: vec![a, b],
                probs: vec![0.25, 0.75]
            }),
        ]
    }

    proptest! {
        #[test]
        fn render_parse_roundtrip(
            a in dist(), b in dist(), d in dist(), w in dist(),
            n in 1usize..1_000_000, seed in any::<u64>(), classes in 1usize..64,
        ) {
            let mut spec = ScenarioSpec::new(a, b, d, w, n, seed);
            spec.reward_classes = classes;
            let text = spec.to_config_string();
            prop_assert_eq!(parse_config(&text).unwrap(), spec);
        }
    }
}
