//! Training a full model (cluster, learn rewards, assemble, solve) and persisting it.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::clustering::{posterior_over_types, select_best_model, ClusterModel, EmConfig, SelectionConfig};
use crate::domain::{DemoSequence, DemoSet, TaskDomain};
use crate::error::{Error, Result};
use crate::irl::{empirical_feature_expectations, irl_learn, IrlConfig};
use crate::momdp::{
    assemble_momdp, response_model, solve_point_based, Belief, Kernel, Momdp, PbviConfig, PolicyValue, ResponseSource,
    RewardSpec,
};
use crate::par::{self, Execution};

/// Version of the bundle layout and of the session protocol served from it.
pub const PROTOCOL_VERSION: u32 = 1;

pub const BUNDLE_FILES: [&str; 5] = ["domain.json", "model.json", "rewards.json", "momdp.json", "policy.json"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub seed: u64,
    pub k_min: usize,
    pub k_max: usize,
    pub restarts: usize,
    #[serde(default)]
    pub em: EmConfig,
    pub irl_epsilon: f64,
    pub irl_max_iterations: usize,
    pub n_points: usize,
    pub residual_tol: f64,
    pub max_sweeps: usize,
    #[serde(default)]
    pub execution: Execution,
}

impl Default for TrainConfig {
    fn default() -> Self {
        let pbvi = PbviConfig::default();
        let irl = IrlConfig::default();
        Self {
            seed: 0,
            k_min: 2,
            k_max: 10,
            restarts: 20,
            em: EmConfig::default(),
            irl_epsilon: irl.epsilon,
            irl_max_iterations: irl.max_iterations,
            n_points: pbvi.n_points,
            residual_tol: pbvi.residual_tol,
            max_sweeps: pbvi.max_sweeps,
            execution: Execution::default(),
        }
    }
}

impl TrainConfig {
    pub fn selection(&self) -> SelectionConfig {
        SelectionConfig {
            k_min: self.k_min,
            k_max: self.k_max,
            restarts: self.restarts,
            seed: par::seed_path(self.seed, &[0]),
            em: self.em,
            execution: self.execution,
        }
    }

    pub fn irl(&self, cluster: usize) -> IrlConfig {
        IrlConfig {
            epsilon: self.irl_epsilon,
            max_iterations: self.irl_max_iterations,
            seed: par::seed_path(self.seed, &[1, cluster as u64]),
            action_costs: None,
        }
    }

    pub fn pbvi(&self) -> PbviConfig {
        PbviConfig {
            n_points: self.n_points,
            residual_tol: self.residual_tol,
            max_sweeps: self.max_sweeps,
            seed: par::seed_path(self.seed, &[2]),
            ..PbviConfig::default()
        }
    }
}

/// Outcome of reward learning for one type.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IrlReport {
    pub converged: bool,
    pub iterations: usize,
    /// Smallest margin reached; absent when the cluster had no sequences.
    pub best_margin: Option<f64>,
    pub epsilon: f64,
    pub sequences: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TypeReward {
    pub label: String,
    pub reward: RewardSpec,
    pub report: IrlReport,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub protocol_version: u32,
    pub package_version: String,
    pub config: TrainConfig,
    pub types: Vec<String>,
    /// SHA-256 of every artifact file, hex encoded.
    pub files: BTreeMap<String, String>,
    /// Seconds since the epoch, taken from `SOURCE_DATE_EPOCH` when set.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub created: Option<u64>,
}

/// Everything needed to run the robot for one domain.
#[derive(Debug, Clone)]
pub struct TrainedBundle {
    pub domain: TaskDomain,
    pub model: ClusterModel,
    pub training: DemoSet,
    pub types: Vec<TypeReward>,
    pub momdp: Momdp,
    pub policy: PolicyValue,
    pub config: TrainConfig,
    pub kernel: Kernel,
}

impl PartialEq for TrainedBundle {
    fn eq(&self, other: &Self) -> bool {
        self.domain == other.domain
            && self.model == other.model
            && self.training == other.training
            && self.types == other.types
            && self.momdp == other.momdp
            && self.policy == other.policy
            && self.config == other.config
    }
}

/// Names each cluster after the majority label of its training sequences when that name
/// is unique, and `cluster<z>` otherwise.
pub fn type_labels(model: &ClusterModel, data: &[DemoSequence]) -> Vec<String> {
    let majority: Vec<Option<String>> = (0..model.k)
        .map(|z| {
            let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
            for (s, &a) in data.iter().zip(&model.assignments) {
                if a == z {
                    if let Some(l) = &s.label {
                        *counts.entry(l.as_str()).or_default() += 1;
                    }
                }
            }
            let best = counts.values().copied().max()?;
            let winners: Vec<&str> = counts.iter().filter(|e| *e.1 == best).map(|e| *e.0).collect();
            (winners.len() == 1).then(|| winners[0].to_string())
        })
        .collect();
    (0..model.k)
        .map(|z| match &majority[z] {
            Some(l) if majority.iter().filter(|m| m.as_ref() == Some(l)).count() == 1 => l.clone(),
            _ => format!("cluster{z}"),
        })
        .collect()
}

/// Learns one reward per cluster from its member sequences.
pub fn learn_rewards(
    domain: &TaskDomain,
    model: &ClusterModel,
    data: &[DemoSequence],
    config: &TrainConfig,
) -> Result<Vec<(RewardSpec, IrlReport)>> {
    let base = response_model(domain, ResponseSource::Learned(model))?;
    let phi = domain.feature_map();
    par::try_map_indexed(model.k, config.execution, |z| {
        let members: Vec<&DemoSequence> = data.iter().zip(&model.assignments).filter(|(_, &a)| a == z).map(|e| e.0).collect();
        let trajectories = members.iter().map(|s| domain.trajectory(s)).collect::<Result<Vec<_>>>()?;
        if trajectories.is_empty() {
            log::warn!("cluster {z} has no sequences; its reward is zero");
            return Ok((
                RewardSpec::zero(domain.n_steps()),
                IrlReport {
                    converged: false,
                    iterations: 0,
                    best_margin: None,
                    epsilon: config.irl_epsilon,
                    sequences: 0,
                },
            ));
        }
        let mdp = base.type_mdp(z);
        let demo_mu = empirical_feature_expectations(&trajectories, &phi, domain.discount)?;
        let result = irl_learn(&mdp, &phi, &demo_mu, &config.irl(z))?;
        if !result.converged {
            log::warn!("reward learning for cluster {z} stopped at margin {:.4}", result.best_margin());
        }
        Ok((
            RewardSpec {
                features: phi.clone(),
                weights: result.weights.clone(),
                action_costs: None,
            },
            IrlReport {
                converged: result.converged,
                iterations: result.iterations(),
                best_margin: Some(result.best_margin()),
                epsilon: result.epsilon,
                sequences: members.len(),
            },
        ))
    })
}

/// Cluster the demonstrations, learn a reward per cluster, assemble the MOMDP and solve it.
pub fn train(demos: &DemoSet, domain: &TaskDomain, config: &TrainConfig) -> Result<TrainedBundle> {
    if demos.alphabet != domain.alphabet {
        return Err(Error::Alphabet("demonstrations and domain use different alphabets".into()));
    }
    if demos.sequences.is_empty() {
        return Err(Error::InvalidArgument("no demonstrations to train on".into()));
    }
    let data = &demos.sequences;
    for s in data {
        domain.trajectory(s).map_err(|e| e.in_stage("replay"))?;
    }
    let selection = select_best_model(data, domain.alphabet.len(), &config.selection());
    let model = selection.model;
    log::info!("selected k = {} (BIC {:.2})", model.k, model.bic);
    let labels = type_labels(&model, data);
    let learned = learn_rewards(domain, &model, data, config).map_err(|e| e.in_stage("irl"))?;
    let rewards: Vec<RewardSpec> = learned.iter().map(|l| l.0.clone()).collect();
    let mut momdp = assemble_momdp(domain, ResponseSource::Learned(&model), &rewards).map_err(|e| e.in_stage("assemble"))?;
    momdp.types = labels.clone();
    momdp.initial_belief = model.priors.clone();
    let policy = solve_point_based(&momdp, &config.pbvi()).map_err(|e| e.in_stage("solve"))?;
    let kernel = momdp.kernel();
    Ok(TrainedBundle {
        domain: domain.clone(),
        model,
        training: demos.clone(),
        types: labels
            .into_iter()
            .zip(learned)
            .map(|(label, (reward, report))| TypeReward { label, reward, report })
            .collect(),
        momdp,
        policy,
        config: config.clone(),
        kernel,
    })
}

/// Posterior over the bundle's types from a user's demonstrations.
pub fn infer_type_offline(bundle: &TrainedBundle, user_demos: &[DemoSequence]) -> Result<Belief> {
    if user_demos.is_empty() {
        return Err(Error::InvalidArgument("at least one demonstration is required".into()));
    }
    for (i, s) in user_demos.iter().enumerate() {
        s.validate(&bundle.domain.alphabet, i)?;
    }
    Ok(posterior_over_types(user_demos, &bundle.model))
}

#[derive(Serialize, Deserialize)]
struct ModelFile {
    types: Vec<String>,
    model: ClusterModel,
    demonstrations: serde_json::Value,
}

#[derive(Serialize, Deserialize)]
struct RewardsFile {
    types: Vec<TypeReward>,
}

fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

fn write(dir: &Path, name: &str, text: &str) -> Result<()> {
    let path = dir.join(name);
    std::fs::write(&path, text).map_err(|e| Error::io(&path, e))
}

fn read(dir: &Path, name: &str) -> Result<String> {
    let path = dir.join(name);
    std::fs::read_to_string(&path).map_err(|e| Error::io(&path, e))
}

/// `SOURCE_DATE_EPOCH` when set, so repeated builds stay byte-identical.
fn creation_time() -> Option<u64> {
    std::env::var("SOURCE_DATE_EPOCH").ok()?.trim().parse().ok()
}

impl TrainedBundle {
    pub fn labels(&self) -> Vec<String> {
        self.types.iter().map(|t| t.label.clone()).collect()
    }

    pub fn rewards(&self) -> Vec<RewardSpec> {
        self.types.iter().map(|t| t.reward.clone()).collect()
    }

    fn artifacts(&self) -> Result<Vec<(&'static str, String)>> {
        let demos: serde_json::Value = serde_json::from_str(&self.training.to_json()?)?;
        Ok(vec![
            ("domain.json", self.domain.to_json()?),
            (
                "model.json",
                serde_json::to_string_pretty(&ModelFile {
                    types: self.labels(),
                    model: self.model.clone(),
                    demonstrations: demos,
                })?,
            ),
            ("rewards.json", serde_json::to_string_pretty(&RewardsFile { types: self.types.clone() })?),
            ("momdp.json", serde_json::to_string_pretty(&self.momdp)?),
            ("policy.json", serde_json::to_string_pretty(&self.policy)?),
        ])
    }

    pub fn save(&self, dir: impl AsRef<Path>) -> Result<()> {
        let dir = dir.as_ref();
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let mut files = BTreeMap::new();
        for (name, text) in self.artifacts()? {
            files.insert(name.to_string(), sha256_hex(text.as_bytes()));
            write(dir, name, &text)?;
        }
        let manifest = Manifest {
            protocol_version: PROTOCOL_VERSION,
            package_version: env!("CARGO_PKG_VERSION").to_string(),
            config: self.config.clone(),
            types: self.labels(),
            files,
            created: creation_time(),
        };
        write(dir, "manifest.json", &serde_json::to_string_pretty(&manifest)?)
    }

    pub fn load(dir: impl AsRef<Path>) -> Result<Self> {
        let dir = dir.as_ref();
        let manifest: Manifest = serde_json::from_str(&read(dir, "manifest.json")?)?;
        if manifest.protocol_version != PROTOCOL_VERSION {
            return Err(Error::Model(format!(
                "bundle protocol version {} is not supported (expected {PROTOCOL_VERSION})",
                manifest.protocol_version
            )));
        }
        let mut texts = BTreeMap::new();
        for name in BUNDLE_FILES {
            let text = read(dir, name)?;
            let expected = manifest
                .files
                .get(name)
                .ok_or_else(|| Error::Model(format!("manifest does not list {name}")))?;
            if &sha256_hex(text.as_bytes()) != expected {
                return Err(Error::Model(format!("{name} does not match its manifest hash")));
            }
            texts.insert(name, text);
        }
        let domain = TaskDomain::from_json(&texts["domain.json"])?;
        let model_file: ModelFile = serde_json::from_str(&texts["model.json"])?;
        let training = DemoSet::from_json(&model_file.demonstrations.to_string())?;
        let rewards: RewardsFile = serde_json::from_str(&texts["rewards.json"])?;
        let momdp: Momdp = serde_json::from_str(&texts["momdp.json"])?;
        let policy: PolicyValue = serde_json::from_str(&texts["policy.json"])?;
        let k = model_file.model.k;
        if rewards.types.len() != k || momdp.n_types() != k || policy.n_types != k {
            return Err(Error::Model("bundle members disagree on the number of types".into()));
        }
        momdp.validate()?;
        policy.validate(momdp.n_steps())?;
        let kernel = momdp.kernel();
        Ok(Self {
            domain,
            model: model_file.model,
            training,
            types: rewards.types,
            momdp,
            policy,
            config: manifest.config,
            kernel,
        })
    }
}
