use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::Deserialize;

use crate::envs::{ArmSpec, Environment, Mode, PrivacyMechanism};
use crate::graph::{make_topology, Agent, Graph, TopologyKind};
use crate::policies::PolicySpec;

use super::ExperimentError;

/// Experiment description, read from a TOML file with four flat sections.
///
/// ```toml
/// [topology]
/// kind = "star"        # star | cycle | grid | complete | custom
/// m = 9
/// leader = "best"      # or a 1-based agent id
/// # edges_file = "g.txt"   custom only; 1-based edge list
///
/// [env]
/// kind = "benchmark"       # benchmark | bernoulli | gaussian | alpha_stable | condorcet | preference
///
/// [algo]
/// kind = "quack"       # quack | independent | gossip_ucb
/// policy = "ucb"       # ucb | thompson | robust_ucb | rucb | ldp_ucb
///
/// [run]
/// horizon = 2000
/// replications = 100
/// seed = 1
/// ```
#[derive(Debug, Clone, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub topology: TopologyConfig,
    pub env: EnvConfig,
    pub algo: AlgoConfig,
    pub run: RunConfig,
}

#[derive(Debug, Clone, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct TopologyConfig {
    pub kind: TopologyKind,
    pub m: usize,
    #[serde(default)]
    pub leader: LeaderChoice,
    /// Edge-list file for `custom`, relative to the config file.
    pub edges_file: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum LeaderChoice {
    /// Minimise the sum of shortest-path distances.
    #[default]
    Best,
    /// A fixed agent (stored 0-based, written 1-based).
    Fixed(Agent),
}

impl<'de> Deserialize<'de> for LeaderChoice {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Id(usize),
            Name(String),
        }
        match Raw::deserialize(d)? {
            Raw::Name(s) if s == "best" => Ok(LeaderChoice::Best),
            Raw::Name(s) => Err(serde::de::Error::custom(format!(
                "leader must be \"best\" or a 1-based agent id, got \"{s}\""
            ))),
            Raw::Id(0) => Err(serde::de::Error::custom("agent ids start at 1")),
            Raw::Id(v) => Ok(LeaderChoice::Fixed(v - 1)),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EnvKind {
    /// Ten Bernoulli arms, 0.5 for the first and 0.45 for the others.
    Benchmark,
    Bernoulli,
    Gaussian,
    AlphaStable,
    Condorcet,
    Preference,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PrivacyChoice {
    Laplace,
    BernoulliResponse,
}

#[derive(Debug, Clone, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct EnvConfig {
    pub kind: EnvKind,
    /// Arm means (Bernoulli p, Gaussian mean, α-stable location).
    pub means: Option<Vec<f64>>,
    /// Gaussian standard deviation, shared by all arms (default 1).
    pub sd: Option<f64>,
    /// α-stable index.
    pub alpha: Option<f64>,
    /// Condorcet: number of arms and the winner's preference.
    pub k: Option<usize>,
    pub p: Option<f64>,
    pub preference: Option<Vec<Vec<f64>>>,
    pub privacy: Option<PrivacyChoice>,
    pub privacy_epsilon: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AlgoKind {
    Quack,
    Independent,
    GossipUcb,
}

impl fmt::Display for AlgoKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            AlgoKind::Quack => "quack",
            AlgoKind::Independent => "independent",
            AlgoKind::GossipUcb => "gossip_ucb",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PolicyKind {
    Ucb,
    Thompson,
    RobustUcb,
    Rucb,
    LdpUcb,
}

impl PolicyKind {
    pub fn name(self) -> &'static str {
        match self {
            PolicyKind::Ucb => "ucb",
            PolicyKind::Thompson => "thompson",
            PolicyKind::RobustUcb => "robust_ucb",
            PolicyKind::Rucb => "rucb",
            PolicyKind::LdpUcb => "ldp_ucb",
        }
    }
}

impl FromStr for PolicyKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        [
            PolicyKind::Ucb,
            PolicyKind::Thompson,
            PolicyKind::RobustUcb,
            PolicyKind::Rucb,
            PolicyKind::LdpUcb,
        ]
        .into_iter()
        .find(|p| p.name() == s)
        .ok_or_else(|| format!("unknown policy `{s}`"))
    }
}

#[derive(Debug, Clone, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct AlgoConfig {
    pub kind: AlgoKind,
    pub policy: Option<PolicyKind>,
    /// Subgaussian scale (UCB, gossip UCB; default 1/2) or moment bound (robust UCB).
    pub sigma: Option<f64>,
    /// Confidence level; defaults to `1/(horizon)²` with horizon `m·n` under QuACK.
    pub delta: Option<f64>,
    /// Tail index for robust UCB, privacy level for LDP-UCB.
    pub epsilon: Option<f64>,
    /// RUCB exploration (default 0.51).
    pub alpha: Option<f64>,
    /// Gossip UCB exploration (default 1.01).
    pub gamma: Option<f64>,
}

#[derive(Debug, Clone, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub horizon: usize,
    #[serde(default = "default_replications")]
    pub replications: usize,
    #[serde(default)]
    pub seed: u64,
    /// Output directory, relative to the working directory.
    pub out: Option<PathBuf>,
    /// Also write one CSV per run.
    #[serde(default)]
    pub write_traces: bool,
    /// Series name in plots; defaults to the algorithm and policy.
    pub label: Option<String>,
}

fn default_replications() -> usize {
    1
}

/// Which multi-agent algorithm to run, fully resolved.
#[derive(Debug, Clone, PartialEq)]
pub enum Algorithm {
    Quack(PolicySpec),
    Independent(PolicySpec),
    GossipUcb { gamma: f64, sigma: f64 },
}

fn missing(field: &str) -> ExperimentError {
    ExperimentError::Config(format!("missing `{field}`"))
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self, ExperimentError> {
        let cfg: ExperimentConfig = toml::from_str(text).map_err(|e| ExperimentError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Reads and validates a config file; relative paths inside it resolve
    /// against the file's directory.
    pub fn load(path: &Path) -> Result<Self, ExperimentError> {
        let text = std::fs::read_to_string(path).map_err(|source| ExperimentError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let mut cfg = Self::parse(&text)?;
        if let (Some(edges), Some(dir)) = (&cfg.topology.edges_file, path.parent()) {
            if edges.is_relative() {
                cfg.topology.edges_file = Some(dir.join(edges));
            }
        }
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), ExperimentError> {
        if self.run.horizon == 0 {
            return Err(ExperimentError::Config("run.horizon must be at least 1".into()));
        }
        if self.run.replications == 0 {
            return Err(ExperimentError::Config("run.replications must be at least 1".into()));
        }
        if self.topology.m == 0 {
            return Err(ExperimentError::Config("topology.m must be at least 1".into()));
        }
        if let LeaderChoice::Fixed(v) = self.topology.leader {
            if v >= self.topology.m {
                return Err(ExperimentError::Config(format!(
                    "leader {} out of range for {} agents",
                    v + 1,
                    self.topology.m
                )));
            }
        }
        let env = self.build_env()?;
        let algo = self.algorithm()?;
        let mode = match &algo {
            Algorithm::Quack(p) | Algorithm::Independent(p) => p.mode(),
            Algorithm::GossipUcb { .. } => Mode::Reward,
        };
        if mode != env.mode() {
            return Err(ExperimentError::Config(format!(
                "algorithm expects {mode:?} feedback but the environment gives {:?}",
                env.mode()
            )));
        }
        Ok(())
    }

    pub fn build_graph(&self) -> Result<Graph, ExperimentError> {
        let t = &self.topology;
        if t.kind == TopologyKind::Custom {
            let path = t.edges_file.as_ref().ok_or_else(|| missing("topology.edges_file"))?;
            let text = std::fs::read_to_string(path).map_err(|source| ExperimentError::Io {
                path: path.clone(),
                source,
            })?;
            let g = Graph::parse_edge_list(&text)?;
            if g.m() != t.m {
                return Err(ExperimentError::Config(format!(
                    "edge list has {} agents but topology.m = {}",
                    g.m(),
                    t.m
                )));
            }
            return Ok(g);
        }
        Ok(make_topology(t.kind, t.m, None)?)
    }

    pub fn build_env(&self) -> Result<Environment, ExperimentError> {
        let e = &self.env;
        let means = || e.means.clone().ok_or_else(|| missing("env.means"));
        let env = match e.kind {
            EnvKind::Benchmark => Environment::benchmark_bernoulli(),
            EnvKind::Bernoulli => Environment::bernoulli(&means()?)?,
            EnvKind::Gaussian => {
                let sd = e.sd.unwrap_or(1.0);
                Environment::reward(means()?.into_iter().map(|mean| ArmSpec::Gaussian { mean, sd }).collect())?
            }
            EnvKind::AlphaStable => {
                let alpha = e.alpha.ok_or_else(|| missing("env.alpha"))?;
                Environment::reward(
                    means()?
                        .into_iter()
                        .map(|location| ArmSpec::AlphaStable { alpha, location })
                        .collect(),
                )?
            }
            EnvKind::Condorcet => Environment::condorcet(
                e.k.ok_or_else(|| missing("env.k"))?,
                e.p.ok_or_else(|| missing("env.p"))?,
            )?,
            EnvKind::Preference => Environment::duelling(e.preference.clone().ok_or_else(|| missing("env.preference"))?)?,
        };
        match e.privacy {
            None => Ok(env),
            Some(kind) => {
                let eps = e.privacy_epsilon.ok_or_else(|| missing("env.privacy_epsilon"))?;
                let mech = match kind {
                    PrivacyChoice::Laplace => PrivacyMechanism::laplace(eps),
                    PrivacyChoice::BernoulliResponse => PrivacyMechanism::bernoulli_response(eps),
                };
                Ok(env.with_privacy(mech)?)
            }
        }
    }

    pub fn algorithm(&self) -> Result<Algorithm, ExperimentError> {
        let a = &self.algo;
        let policy = || -> Result<PolicySpec, ExperimentError> {
            Ok(match a.policy.ok_or_else(|| missing("algo.policy"))? {
                PolicyKind::Ucb => PolicySpec::Ucb {
                    sigma: a.sigma.unwrap_or(0.5),
                    delta: a.delta,
                },
                PolicyKind::Thompson => PolicySpec::Thompson,
                PolicyKind::RobustUcb => PolicySpec::RobustUcb {
                    sigma: a.sigma.ok_or_else(|| missing("algo.sigma"))?,
                    epsilon: a.epsilon.ok_or_else(|| missing("algo.epsilon"))?,
                    delta: a.delta,
                },
                PolicyKind::Rucb => PolicySpec::Rucb {
                    alpha: a.alpha.unwrap_or(0.51),
                },
                PolicyKind::LdpUcb => PolicySpec::LdpUcb {
                    epsilon: a
                        .epsilon
                        .or(self.env.privacy_epsilon)
                        .ok_or_else(|| missing("algo.epsilon"))?,
                    delta: a.delta,
                },
            })
        };
        Ok(match a.kind {
            AlgoKind::Quack => Algorithm::Quack(policy()?),
            AlgoKind::Independent => Algorithm::Independent(policy()?),
            AlgoKind::GossipUcb => Algorithm::GossipUcb {
                gamma: a.gamma.unwrap_or(1.01),
                sigma: a.sigma.unwrap_or(0.5),
            },
        })
    }

    pub fn label(&self) -> String {
        if let Some(label) = &self.run.label {
            return label.clone();
        }
        match self.algo.policy {
            Some(p) if self.algo.kind != AlgoKind::GossipUcb => format!("{}-{}", self.algo.kind, p.name()),
            _ => self.algo.kind.to_string(),
        }
    }
}
