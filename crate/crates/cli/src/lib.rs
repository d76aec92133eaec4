//! The `hhpim` command: LUT sweeps, architecture comparisons, oracle
//! verification and workload generation, writing plot-ready delimited text.
//!
//! Every file written here starts with a `# config_hash=.. seed=..` line (or
//! carries both fields, for JSON), and reruns with the same spec reproduce
//! the outputs byte for byte.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use hhpim::config::load_architecture;
use hhpim::experiment::{prepare, Experiment, ExperimentConfig, DEFAULT_HEADROOM};
use hhpim::model::{ArchitectureSpec, SpaceId};
use hhpim::sim::compare_architectures;
use hhpim::workload::{generate, ModelProfile, Scenario};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

mod verify;

pub use verify::{cmd_verify, VerifyOptions, VerifyReport};

/// Architectures compared by default; the first is the one the others are
/// measured against.
pub const DEFAULT_ARCHS: [&str; 4] = ["hh-pim", "baseline-pim", "hetero-pim", "hybrid-pim"];

#[derive(Debug, Error)]
pub enum CliError {
    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Config(hhpim::Error),
    #[error("{0}")]
    Infeasible(hhpim::Error),
    #[error("verification failed: {0}")]
    Verify(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Io(_) => 1,
            CliError::Usage(_) => 2,
            CliError::Config(_) => 3,
            CliError::Infeasible(_) => 4,
            CliError::Verify(_) => 5,
        }
    }
}

impl From<hhpim::Error> for CliError {
    fn from(e: hhpim::Error) -> Self {
        use hhpim::Error as E;
        match e {
            E::Io(io) => CliError::Io(io),
            E::Unattainable { .. } | E::SliceOverrun { .. } | E::GridOverflow { .. } => CliError::Infeasible(e),
            other => CliError::Config(other),
        }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;

/// One experiment, as read from a config file and/or command-line flags.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentSpec {
    /// Builtin names or paths to architecture files; the first is the
    /// reference.
    pub archs: Vec<String>,
    pub models: Vec<String>,
    pub scenarios: Vec<Scenario>,
    pub slices: usize,
    pub max_per_slice: u32,
    pub seed: u64,
    pub budget_fraction: f64,
    pub headroom: f64,
    /// Fixed grid step count instead of the calibrated one.
    pub resolution: Option<usize>,
}

impl Default for ExperimentSpec {
    fn default() -> Self {
        ExperimentSpec {
            archs: DEFAULT_ARCHS.iter().map(|s| s.to_string()).collect(),
            models: ModelProfile::builtins().into_iter().map(|m| m.name).collect(),
            scenarios: Scenario::ALL.to_vec(),
            slices: 50,
            max_per_slice: 10,
            seed: 42,
            budget_fraction: 0.01,
            headroom: DEFAULT_HEADROOM,
            resolution: None,
        }
    }
}

/// Everything a spec refers to, loaded and validated.
#[derive(Debug, Clone, Serialize)]
pub struct ResolvedSpec {
    pub spec: ExperimentSpec,
    pub archs: Vec<ArchitectureSpec>,
    pub models: Vec<ModelProfile>,
}

impl ExperimentSpec {
    pub fn from_toml(text: &str) -> CliResult<Self> {
        toml::from_str(text).map_err(|e| {
            let location = e.span().map(|s| {
                let before = &text[..s.start.min(text.len())];
                let line = before.matches('\n').count() + 1;
                let col = before.len() - before.rfind('\n').map_or(0, |i| i + 1) + 1;
                (line, col)
            });
            CliError::Config(hhpim::Error::Config {
                message: e.message().to_string(),
                location,
            })
        })
    }

    pub fn load(path: &Path) -> CliResult<Self> {
        Self::from_toml(&fs::read_to_string(path)?)
    }

    pub fn resolve(&self) -> CliResult<ResolvedSpec> {
        if self.archs.is_empty() || self.models.is_empty() {
            return Err(CliError::Usage(
                "at least one architecture and one model are required".into(),
            ));
        }
        if self.slices == 0 {
            return Err(CliError::Usage("--slices must be at least 1".into()));
        }
        let archs = self
            .archs
            .iter()
            .map(|a| load_architecture(a))
            .collect::<hhpim::Result<_>>()?;
        let models = self
            .models
            .iter()
            .map(|m| ModelProfile::builtin(m))
            .collect::<hhpim::Result<_>>()?;
        Ok(ResolvedSpec {
            spec: self.clone(),
            archs,
            models,
        })
    }
}

impl ResolvedSpec {
    /// SHA-256 over the loaded architectures, models and run parameters, so
    /// editing an architecture file changes the hash even if its path did not.
    pub fn config_hash(&self) -> String {
        short_hash(serde_json::to_string(self).expect("spec serializes").as_bytes())
    }

    fn experiment_config(&self, model: &ModelProfile) -> ExperimentConfig {
        let mut cfg = ExperimentConfig::new(model.clone());
        cfg.max_inferences_per_slice = self.spec.max_per_slice;
        cfg.slice_count = self.spec.slices;
        cfg.budget_fraction = self.spec.budget_fraction;
        cfg.headroom = self.spec.headroom;
        cfg.steps_override = self.spec.resolution;
        cfg
    }

    pub fn prepare(&self, model: &ModelProfile) -> CliResult<Experiment> {
        Ok(prepare(&self.archs, &self.experiment_config(model))?)
    }

    fn header(&self) -> String {
        format!("# config_hash={} seed={}\n", self.config_hash(), self.spec.seed)
    }
}

/// First 64 bits of the SHA-256, in hex.
fn short_hash(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().take(8).fold(String::new(), |mut s, b| {
        let _ = write!(s, "{b:02x}");
        s
    })
}

fn file_stem(name: &str) -> String {
    name.chars()
        .map(|c| {
            if c.is_ascii_alphanumeric() {
                c.to_ascii_lowercase()
            } else {
                '-'
            }
        })
        .collect()
}

fn write_file(dir: &Path, name: &str, body: &str) -> CliResult<PathBuf> {
    fs::create_dir_all(dir)?;
    let path = dir.join(name);
    fs::write(&path, body)?;
    Ok(path)
}

/// Sweep of the reference architecture's LUT, one file per
/// model. Energy is normalized to the peak-performance point.
pub fn cmd_lut(spec: &ExperimentSpec, out: &Path) -> CliResult<Vec<PathBuf>> {
    let single = ExperimentSpec {
        archs: spec.archs.iter().take(1).cloned().collect(),
        ..spec.clone()
    };
    let resolved = single.resolve()?;
    let mut files = Vec::new();
    for model in &resolved.models {
        let exp = resolved.prepare(model)?;
        let arch = exp.reference();
        let lut = &arch.lut;
        let peak = lut.peak().ok_or(hhpim::Error::Unattainable {
            t_constraint_ns: lut.grid.span_ns(),
        })?;
        let k = lut.weights as f64;

        let mut body = resolved.header();
        let _ = writeln!(
            body,
            "# arch={} model={} slice_ns={} unit_ns={} steps={} weight_group={}",
            arch.name, model.name, exp.slice.slice_ns, lut.grid.unit_ns, lut.grid.steps, lut.grid.weight_group
        );
        body.push_str("t_index,t_constraint_ns,feasible,E_task_pJ,E_task_norm");
        for id in SpaceId::ALL {
            let _ = write!(body, ",{id}_%");
        }
        body.push('\n');
        for (t, e) in lut.entries.iter().enumerate() {
            let _ = write!(body, "{t},{},{}", t as f64 * lut.grid.unit_ns, u8::from(e.feasible));
            if e.feasible {
                let _ = write!(body, ",{},{}", e.e_task_pj, e.e_task_pj / peak.e_task_pj);
                for id in SpaceId::ALL {
                    let _ = write!(body, ",{:.4}", 100.0 * e.placement[id] as f64 / k);
                }
            } else {
                body.push_str(",,,,,,");
            }
            body.push('\n');
        }
        let name = format!("lut_{}_{}.csv", file_stem(&arch.name), file_stem(&model.name));
        files.push(write_file(out, &name, &body)?);
    }
    Ok(files)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioSummary {
    pub scenario: Scenario,
    pub total_mj: BTreeMap<String, f64>,
    pub misses: BTreeMap<String, usize>,
    /// Savings of the reference architecture over each other one, in %.
    pub savings_pct: BTreeMap<String, f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSummary {
    pub model: String,
    pub slice_ns: f64,
    pub grid_steps: usize,
    pub grid_unit_ns: f64,
    pub weight_group: u64,
    pub scenarios: Vec<ScenarioSummary>,
    pub average_savings_pct: BTreeMap<String, f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompareSummary {
    pub config_hash: String,
    pub seed: u64,
    pub reference: String,
    pub spec: ExperimentSpec,
    pub models: Vec<ModelSummary>,
    pub average_savings_pct: BTreeMap<String, f64>,
}

impl CompareSummary {
    pub fn savings_pct(&self, model: &str, scenario: Scenario, baseline: &str) -> Option<f64> {
        self.models
            .iter()
            .find(|m| m.model == model)?
            .scenarios
            .iter()
            .find(|s| s.scenario == scenario)?
            .savings_pct
            .get(baseline)
            .copied()
    }
}

fn mean_by_key<'a>(maps: impl Iterator<Item = &'a BTreeMap<String, f64>>) -> BTreeMap<String, f64> {
    let mut acc: BTreeMap<String, (f64, usize)> = BTreeMap::new();
    for m in maps {
        for (k, v) in m {
            let e = acc.entry(k.clone()).or_default();
            e.0 += v;
            e.1 += 1;
        }
    }
    acc.into_iter().map(|(k, (s, n))| (k, s / n as f64)).collect()
}

/// Runs every (model, scenario) on every architecture. Writes
/// `traces.csv`, `totals.csv`, `savings.csv` and `summary.json` to `out`.
pub fn cmd_compare(spec: &ExperimentSpec, out: &Path) -> CliResult<CompareSummary> {
    let resolved = spec.resolve()?;
    let header = resolved.header();
    let mut traces = header.clone();
    traces.push_str(
        "model,arch,scenario,slice_idx,N,executed,t_constraint_ns,x_1,x_2,x_3,x_4,E_mig_pJ,E_dyn_pJ,E_stat_pJ,E_slice_pJ,max_latency_ns,miss_flag\n",
    );
    let mut totals = header.clone();
    totals.push_str("model,scenario,arch,E_total_pJ,E_total_mJ,misses,max_latency_ns,slice_ns\n");
    let mut savings = header.clone();
    savings.push_str("model,scenario,reference,baseline,ES_%\n");

    let mut models = Vec::new();
    for model in &resolved.models {
        let exp = resolved.prepare(model)?;
        let reference = exp.reference().name.clone();
        let mut scenarios = Vec::new();
        for &sc in &spec.scenarios {
            let stream = generate(sc, spec.slices, spec.max_per_slice, spec.seed)?;
            let cmp = compare_architectures(&exp.archs, &stream, &exp.slice)?;
            let mut summary = ScenarioSummary {
                scenario: sc,
                total_mj: BTreeMap::new(),
                misses: BTreeMap::new(),
                savings_pct: BTreeMap::new(),
            };
            for (i, res) in cmp.results.iter().enumerate() {
                for tr in &res.traces {
                    let x = tr.placement.0;
                    let _ = writeln!(
                        traces,
                        "{},{},{sc},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
                        model.name,
                        res.arch,
                        tr.slice,
                        tr.buffered,
                        tr.executed,
                        tr.t_constraint_ns,
                        x[0],
                        x[1],
                        x[2],
                        x[3],
                        tr.migration.energy_pj,
                        tr.dynamic_pj,
                        tr.static_pj,
                        tr.total_pj,
                        tr.max_latency_ns,
                        u8::from(!tr.deadline_met)
                    );
                }
                let _ = writeln!(
                    totals,
                    "{},{sc},{},{},{},{},{},{}",
                    model.name,
                    res.arch,
                    res.total_energy_pj,
                    res.total_energy_pj * 1e-9,
                    res.misses,
                    res.max_latency_ns,
                    res.slice_ns
                );
                summary.total_mj.insert(res.arch.clone(), res.total_energy_pj * 1e-9);
                summary.misses.insert(res.arch.clone(), res.misses);
                if i > 0 {
                    let pct = 100.0 * cmp.savings[0][i];
                    let _ = writeln!(savings, "{},{sc},{reference},{},{pct:.4}", model.name, res.arch);
                    summary.savings_pct.insert(res.arch.clone(), pct);
                }
            }
            scenarios.push(summary);
        }
        models.push(ModelSummary {
            model: model.name.clone(),
            slice_ns: exp.slice.slice_ns,
            grid_steps: exp.grid.steps,
            grid_unit_ns: exp.grid.unit_ns,
            weight_group: exp.grid.weight_group,
            average_savings_pct: mean_by_key(scenarios.iter().map(|s| &s.savings_pct)),
            scenarios,
        });
    }

    let summary = CompareSummary {
        config_hash: resolved.config_hash(),
        seed: spec.seed,
        reference: resolved.archs[0].name.clone(),
        spec: spec.clone(),
        average_savings_pct: mean_by_key(models.iter().map(|m| &m.average_savings_pct)),
        models,
    };
    write_file(out, "traces.csv", &traces)?;
    write_file(out, "totals.csv", &totals)?;
    write_file(out, "savings.csv", &savings)?;
    let mut json = serde_json::to_string_pretty(&summary).expect("summary serializes");
    json.push('\n');
    write_file(out, "summary.json", &json)?;
    Ok(summary)
}

/// Writes one scenario's arrival stream.
pub fn cmd_gen_workload(
    scenario: Scenario,
    slices: usize,
    max_per_slice: u32,
    seed: u64,
    out: &Path,
) -> CliResult<PathBuf> {
    let stream = generate(scenario, slices, max_per_slice, seed)?;
    let hash = short_hash(format!("{scenario}:{slices}:{max_per_slice}:{seed}").as_bytes());
    let mut body = format!("# config_hash={hash} seed={seed}\n").into_bytes();
    stream.write_csv(&mut body)?;
    if let Some(dir) = out.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir)?;
    }
    fs::write(out, body)?;
    Ok(out.to_path_buf())
}
