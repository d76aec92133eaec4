//! TinyML model profiles and per-slice inference arrival patterns.

use std::fmt;
use std::io::{BufRead, Write};
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelProfile {
    pub name: String,
    pub param_count: u64,
    pub mac_count: u64,
    /// Share of the MACs that run on the PIM modules.
    pub pim_op_fraction: f64,
}

const BUILTIN_MODELS: [(&str, u64, u64, f64); 3] = [
    ("efficientnet-b0", 95_000, 3_245_000, 0.85),
    ("mobilenetv2", 101_000, 2_528_000, 0.80),
    ("resnet-18", 256_000, 29_580_000, 0.75),
];

impl ModelProfile {
    pub fn new(name: impl Into<String>, param_count: u64, mac_count: u64, pim_op_fraction: f64) -> Result<Self> {
        let m = ModelProfile {
            name: name.into(),
            param_count,
            mac_count,
            pim_op_fraction,
        };
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<()> {
        if self.param_count == 0 || self.mac_count == 0 {
            return Err(Error::InvalidParameter(format!(
                "model {} needs positive params and MACs",
                self.name
            )));
        }
        if !(self.pim_op_fraction > 0.0 && self.pim_op_fraction <= 1.0) {
            return Err(Error::InvalidParameter(format!(
                "model {}: PIM fraction {} outside (0, 1]",
                self.name, self.pim_op_fraction
            )));
        }
        Ok(())
    }

    pub fn builtin(name: &str) -> Result<Self> {
        let key: String = name
            .chars()
            .filter(|c| c.is_ascii_alphanumeric())
            .collect::<String>()
            .to_ascii_lowercase();
        BUILTIN_MODELS
            .iter()
            .find(|(n, ..)| n.replace('-', "") == key)
            .map(|&(n, p, m, f)| ModelProfile {
                name: n.to_string(),
                param_count: p,
                mac_count: m,
                pim_op_fraction: f,
            })
            .ok_or_else(|| Error::UnknownModel(name.to_string()))
    }

    pub fn builtins() -> Vec<ModelProfile> {
        BUILTIN_MODELS
            .iter()
            .map(|(n, ..)| Self::builtin(n).expect("builtin"))
            .collect()
    }

    /// PIM operations per weight in one inference.
    pub fn ops_per_weight(&self) -> f64 {
        self.mac_count as f64 * self.pim_op_fraction / self.param_count as f64
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Scenario {
    /// Constant low load.
    Case1,
    /// Constant maximum load.
    Case2,
    /// Low load with a rare spike.
    Case3,
    /// Low load with a frequent spike.
    Case4,
    /// Alternating blocks of maximum and low load.
    Case5,
    /// Uniformly random load.
    Case6,
}

impl Scenario {
    pub const ALL: [Scenario; 6] = [
        Scenario::Case1,
        Scenario::Case2,
        Scenario::Case3,
        Scenario::Case4,
        Scenario::Case5,
        Scenario::Case6,
    ];

    pub fn number(self) -> usize {
        self as usize + 1
    }
}

impl fmt::Display for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Case{}", self.number())
    }
}

impl FromStr for Scenario {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let lower = s.trim().to_ascii_lowercase();
        let digits = lower.strip_prefix("case").unwrap_or(&lower);
        digits
            .parse::<usize>()
            .ok()
            .and_then(|n| n.checked_sub(1))
            .and_then(|i| Scenario::ALL.get(i).copied())
            .ok_or_else(|| Error::UnknownScenario(s.to_string()))
    }
}

/// Levels and periods of the arrival patterns.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioParams {
    /// Low level as a fraction of the per-slice maximum.
    pub low_fraction: f64,
    pub rare_spike_period: usize,
    pub frequent_spike_period: usize,
    pub pulse_block: usize,
}

impl Default for ScenarioParams {
    fn default() -> Self {
        ScenarioParams {
            low_fraction: 0.2,
            rare_spike_period: 10,
            frequent_spike_period: 4,
            pulse_block: 5,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskStream {
    pub scenario: Scenario,
    pub seed: u64,
    pub max_per_slice: u32,
    pub arrivals: Vec<u32>,
}

pub fn generate(scenario: Scenario, slice_count: usize, max_per_slice: u32, seed: u64) -> Result<TaskStream> {
    generate_with(scenario, slice_count, max_per_slice, seed, &ScenarioParams::default())
}

pub fn generate_with(
    scenario: Scenario,
    slice_count: usize,
    max_per_slice: u32,
    seed: u64,
    params: &ScenarioParams,
) -> Result<TaskStream> {
    if slice_count == 0 {
        return Err(Error::InvalidParameter("slice_count must be at least 1".into()));
    }
    if !(0.0..=1.0).contains(&params.low_fraction)
        || params.rare_spike_period == 0
        || params.frequent_spike_period == 0
        || params.pulse_block == 0
    {
        return Err(Error::InvalidParameter(format!("bad scenario parameters {params:?}")));
    }
    let max = max_per_slice;
    let low = (params.low_fraction * f64::from(max)).round() as u32;
    let spike = |period: usize| move |i: usize| if (i + 1) % period == 0 { max } else { low };

    let arrivals: Vec<u32> = match scenario {
        Scenario::Case1 => vec![low; slice_count],
        Scenario::Case2 => vec![max; slice_count],
        Scenario::Case3 => (0..slice_count).map(spike(params.rare_spike_period)).collect(),
        Scenario::Case4 => (0..slice_count).map(spike(params.frequent_spike_period)).collect(),
        Scenario::Case5 => (0..slice_count)
            .map(|i| if (i / params.pulse_block) % 2 == 0 { max } else { low })
            .collect(),
        Scenario::Case6 => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            (0..slice_count).map(|_| rng.gen_range(0..=max)).collect()
        }
    };
    Ok(TaskStream {
        scenario,
        seed,
        max_per_slice,
        arrivals,
    })
}

impl TaskStream {
    pub fn slice_count(&self) -> usize {
        self.arrivals.len()
    }

    pub fn total(&self) -> u64 {
        self.arrivals.iter().map(|&a| u64::from(a)).sum()
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(
            out,
            "# scenario={} seed={} max_per_slice={}",
            self.scenario, self.seed, self.max_per_slice
        )?;
        writeln!(out, "slice_idx,arrivals")?;
        for (i, a) in self.arrivals.iter().enumerate() {
            writeln!(out, "{i},{a}")?;
        }
        Ok(())
    }

    pub fn read_csv<R: BufRead>(input: R) -> Result<Self> {
        let bad = |line: usize, msg: String| Error::Config {
            message: msg,
            location: Some((line, 1)),
        };
        let mut scenario = None;
        let mut seed = 0;
        let mut max_per_slice = None;
        let mut arrivals = Vec::new();
        for (n, line) in input.lines().enumerate() {
            let line = line?;
            let lineno = n + 1;
            let line = line.trim();
            if let Some(header) = line.strip_prefix('#') {
                for kv in header.split_whitespace() {
                    match kv.split_once('=') {
                        Some(("scenario", v)) => scenario = Some(v.parse()?),
                        Some(("seed", v)) => seed = v.parse().map_err(|e| bad(lineno, format!("seed: {e}")))?,
                        Some(("max_per_slice", v)) => {
                            max_per_slice = Some(v.parse().map_err(|e| bad(lineno, format!("max_per_slice: {e}")))?)
                        }
                        _ => {}
                    }
                }
                continue;
            }
            if line.is_empty() || line.starts_with("slice_idx") {
                continue;
            }
            let (idx, count) = line
                .split_once(',')
                .ok_or_else(|| bad(lineno, format!("expected `slice_idx,arrivals`, got `{line}`")))?;
            let idx: usize = idx
                .trim()
                .parse()
                .map_err(|e| bad(lineno, format!("slice index: {e}")))?;
            if idx != arrivals.len() {
                return Err(bad(
                    lineno,
                    format!("slice {idx} out of order, expected {}", arrivals.len()),
                ));
            }
            arrivals.push(
                count
                    .trim()
                    .parse()
                    .map_err(|e| bad(lineno, format!("arrivals: {e}")))?,
            );
        }
        let scenario = scenario.ok_or_else(|| bad(1, "missing `# scenario=` header".into()))?;
        let max_per_slice = max_per_slice.unwrap_or_else(|| arrivals.iter().copied().max().unwrap_or(0));
        if arrivals.iter().any(|&a| a > max_per_slice) {
            return Err(bad(1, format!("arrivals exceed max_per_slice {max_per_slice}")));
        }
        Ok(TaskStream {
            scenario,
            seed,
            max_per_slice,
            arrivals,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_cases() {
        assert!(generate(Scenario::Case2, 50, 10, 0)
            .unwrap()
            .arrivals
            .iter()
            .all(|&a| a == 10));
        assert!(generate(Scenario::Case1, 50, 10, 0)
            .unwrap()
            .arrivals
            .iter()
            .all(|&a| a == 2));
    }

    #[test]
    fn spike_periods() {
        let s3 = generate(Scenario::Case3, 20, 10, 0).unwrap().arrivals;
        let spikes: Vec<usize> = (0..20).filter(|&i| s3[i] == 10).collect();
        assert_eq!(spikes, vec![9, 19]);
        let s4 = generate(Scenario::Case4, 8, 10, 0).unwrap().arrivals;
        assert_eq!(s4, vec![2, 2, 2, 10, 2, 2, 2, 10]);
    }

    #[test]
    fn pulse_blocks_start_high() {
        let s5 = generate(Scenario::Case5, 12, 10, 0).unwrap().arrivals;
        assert_eq!(s5, vec![10, 10, 10, 10, 10, 2, 2, 2, 2, 2, 10, 10]);
        let s = generate(Scenario::Case5, 50, 10, 0).unwrap().arrivals;
        assert_eq!(s.iter().filter(|&&a| a == 10).count(), 25);
    }

    #[test]
    fn random_case_is_seeded() {
        let a = generate(Scenario::Case6, 50, 10, 7).unwrap();
        let b = generate(Scenario::Case6, 50, 10, 7).unwrap();
        let c = generate(Scenario::Case6, 50, 10, 8).unwrap();
        assert_eq!(a, b);
        assert_ne!(a.arrivals, c.arrivals);
        assert!(a.arrivals.iter().all(|&x| x <= 10));
    }

    #[test]
    fn zero_slices_rejected() {
        assert!(generate(Scenario::Case1, 0, 10, 0).is_err());
    }

    #[test]
    fn scenario_names_parse() {
        assert_eq!("case3".parse::<Scenario>().unwrap(), Scenario::Case3);
        assert_eq!("Case6".parse::<Scenario>().unwrap(), Scenario::Case6);
        assert_eq!("2".parse::<Scenario>().unwrap(), Scenario::Case2);
        assert!(matches!("case7".parse::<Scenario>(), Err(Error::UnknownScenario(_))));
        assert!("case0".parse::<Scenario>().is_err());
    }

    #[test]
    fn builtin_models() {
        let m = ModelProfile::builtin("EfficientNet-B0").unwrap();
        assert_eq!((m.param_count, m.mac_count), (95_000, 3_245_000));
        assert_eq!(ModelProfile::builtin("mobilenetv2").unwrap().param_count, 101_000);
        assert_eq!(ModelProfile::builtin("ResNet18").unwrap().pim_op_fraction, 0.75);
        assert!(matches!(ModelProfile::builtin("vgg"), Err(Error::UnknownModel(_))));
        assert!((m.ops_per_weight() - 3_245_000.0 * 0.85 / 95_000.0).abs() < 1e-9);
    }

    #[test]
    fn csv_round_trip() {
        let s = generate(Scenario::Case6, 17, 10, 3).unwrap();
        let mut buf = Vec::new();
        s.write_csv(&mut buf).unwrap();
        assert_eq!(TaskStream::read_csv(&buf[..]).unwrap(), s);
    }

    #[test]
    fn csv_errors_carry_line_numbers() {
        let text = "# scenario=Case1 seed=0 max_per_slice=10\nslice_idx,arrivals\n0,2\n1,x\n";
        match TaskStream::read_csv(text.as_bytes()) {
            Err(Error::Config {
                location: Some((4, _)), ..
            }) => {}
            other => panic!("unexpected {other:?}"),
        }
    }
}
