//! Strict experiment configuration.
//!
//! A config file is a JSON object `{kind, seed?, output_dir?, params?}`.
//! Unknown keys are rejected at every level; omitted keys fall back to
//! defaults, and the resolved values are echoed in the run manifest.

use std::f64::consts::PI;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::Value;

pub const KINDS: [&str; 6] = [
    "warmup-landscape",
    "variance-scaling",
    "dt-sweep",
    "train-random",
    "train-h2",
    "collision-check",
];

pub const DEFAULT_SEED: u64 = 1;
pub const OUTPUT_DIR_ENV: &str = "DISSVQE_OUTPUT_DIR";

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("{key}: {message}")]
pub struct ConfigError {
    /// Dotted path of the offending key, or `config` for whole-file problems.
    pub key: String,
    pub message: String,
}

impl ConfigError {
    fn new(key: impl Into<String>, message: impl Into<String>) -> Self {
        Self {
            key: key.into(),
            message: message.into(),
        }
    }
}

type Result<T> = std::result::Result<T, ConfigError>;

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    kind: String,
    #[serde(default)]
    seed: Option<u64>,
    #[serde(default)]
    output_dir: Option<String>,
    #[serde(default)]
    params: Option<Value>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentConfig {
    pub kind: String,
    pub seed: u64,
    pub output_dir: PathBuf,
    pub params: Params,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(untagged)]
pub enum Params {
    WarmupLandscape(WarmupLandscapeParams),
    Variance(VarianceParams),
    TrainRandom(TrainRandomParams),
    TrainH2(TrainH2Params),
    Collision(CollisionParams),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct WarmupLandscapeParams {
    pub n: usize,
    pub points: usize,
    /// Depolarizing probability of the noisy landscape.
    pub noise_p: f64,
    /// Interaction time of the dissipative landscape; `null` picks the variance-optimal one.
    pub dt: Option<f64>,
    /// Qubit counts for the optimal-interaction-time table.
    pub optimum_qubits: Vec<usize>,
}

impl Default for WarmupLandscapeParams {
    fn default() -> Self {
        Self {
            n: 20,
            points: 201,
            noise_p: 0.5,
            dt: None,
            optimum_qubits: (2..=20).collect(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TargetParam {
    Theta11,
    Sigma,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum HamiltonianKind {
    Random,
    Warmup,
    File,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AnsatzKind {
    Layered,
    ProductX,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ChannelKind {
    AnchorPair,
    Decay,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawVarianceParams {
    qubits: Option<Vec<usize>>,
    depths: Option<Vec<usize>>,
    dts: Option<Vec<f64>>,
    samples: Option<usize>,
    target: Option<TargetParam>,
    hamiltonian: Option<HamiltonianKind>,
    hamiltonian_file: Option<String>,
    ansatz: Option<AnsatzKind>,
    channel: Option<ChannelKind>,
    include_unitary: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VarianceParams {
    pub qubits: Vec<usize>,
    pub depths: Vec<usize>,
    pub dts: Vec<f64>,
    pub samples: usize,
    pub target: TargetParam,
    pub hamiltonian: HamiltonianKind,
    /// Resolved against the config file's directory.
    pub hamiltonian_file: Option<PathBuf>,
    pub ansatz: AnsatzKind,
    pub channel: ChannelKind,
    pub include_unitary: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TrainMode {
    Unitary,
    Dissipative,
    Hybrid,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrainRandomParams {
    pub n: usize,
    pub depth: usize,
    pub dt: f64,
    pub eta: f64,
    pub iterations: usize,
    pub switch: usize,
    /// Initial-parameter seeds `0..runs`; the instance comes from the top-level seed.
    pub runs: usize,
    pub modes: Vec<TrainMode>,
    /// Iteration at which mean costs are compared.
    pub checkpoint: usize,
}

impl Default for TrainRandomParams {
    fn default() -> Self {
        Self {
            n: 6,
            depth: 5,
            dt: 1.0,
            eta: 0.1,
            iterations: 1000,
            switch: 500,
            runs: 10,
            modes: vec![TrainMode::Unitary, TrainMode::Dissipative, TrainMode::Hybrid],
            checkpoint: 200,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrainH2Params {
    /// Pauli file; `null` uses the bundled H2 fixture.
    pub fixture: Option<PathBuf>,
    pub depth: usize,
    pub dt: f64,
    pub eta_dissipative: f64,
    pub unitary_etas: Vec<f64>,
    /// Learning rate of the hybrid run once the channel is dropped.
    pub eta_after_switch: f64,
    pub iterations: usize,
    pub switch: usize,
    pub runs: usize,
    /// Hartree.
    pub threshold: f64,
    pub checkpoint: usize,
}

impl Default for TrainH2Params {
    fn default() -> Self {
        Self {
            fixture: None,
            depth: 20,
            dt: 0.5,
            eta_dissipative: 1.0,
            unitary_etas: vec![0.1, 1.0],
            eta_after_switch: 0.1,
            iterations: 300,
            switch: 150,
            runs: 10,
            threshold: 0.00159,
            checkpoint: 50,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ProbeState {
    /// `|1…1⟩`.
    Excited,
    /// Seeded random mixed state.
    Random,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CollisionParams {
    pub n: usize,
    pub alpha: f64,
    pub phi: f64,
    pub dt: f64,
    pub steps: Vec<usize>,
    pub state: ProbeState,
}

impl Default for CollisionParams {
    fn default() -> Self {
        Self {
            n: 1,
            alpha: PI,
            phi: 0.0,
            dt: 1.0,
            steps: vec![8, 16, 32, 64, 128, 256, 512],
            state: ProbeState::Excited,
        }
    }
}

fn params_from<T: for<'de> Deserialize<'de>>(value: Value) -> Result<T> {
    serde_json::from_value(value).map_err(|e| ConfigError::new("params", e.to_string()))
}

fn positive(key: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(ConfigError::new(key, format!("must be positive, got {v}")))
    }
}

fn non_negative(key: &str, v: f64) -> Result<()> {
    if v >= 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(ConfigError::new(key, format!("must be non-negative, got {v}")))
    }
}

fn at_least(key: &str, v: usize, min: usize) -> Result<()> {
    if v >= min {
        Ok(())
    } else {
        Err(ConfigError::new(key, format!("must be at least {min}, got {v}")))
    }
}

fn non_empty<T>(key: &str, v: &[T]) -> Result<()> {
    if v.is_empty() {
        Err(ConfigError::new(key, "must not be empty"))
    } else {
        Ok(())
    }
}

impl WarmupLandscapeParams {
    fn validate(&self) -> Result<()> {
        at_least("params.n", self.n, 2)?;
        at_least("params.points", self.points, 2)?;
        if !(0.0..=1.0).contains(&self.noise_p) {
            return Err(ConfigError::new("params.noise_p", format!("must lie in [0, 1], got {}", self.noise_p)));
        }
        if let Some(dt) = self.dt {
            non_negative("params.dt", dt)?;
        }
        if let Some(&q) = self.optimum_qubits.iter().find(|&&q| q < 2) {
            return Err(ConfigError::new("params.optimum_qubits", format!("entries must be at least 2, got {q}")));
        }
        Ok(())
    }
}

impl RawVarianceParams {
    fn resolve(self, kind: &str, base: &Path) -> Result<VarianceParams> {
        let sweep = kind == "dt-sweep";
        let hamiltonian = self.hamiltonian.unwrap_or(HamiltonianKind::Random);
        let ansatz = self.ansatz.unwrap_or(match hamiltonian {
            HamiltonianKind::Warmup => AnsatzKind::ProductX,
            _ => AnsatzKind::Layered,
        });
        let channel = self.channel.unwrap_or(match hamiltonian {
            HamiltonianKind::Random => ChannelKind::AnchorPair,
            _ => ChannelKind::Decay,
        });
        let p = VarianceParams {
            qubits: self
                .qubits
                .unwrap_or_else(|| if sweep { vec![5, 8] } else { (2..=8).collect() }),
            depths: self.depths.unwrap_or_else(|| vec![5]),
            dts: self.dts.unwrap_or_else(dissvqe::variance::default_dt_grid),
            samples: self.samples.unwrap_or(1000),
            target: self.target.unwrap_or(TargetParam::Theta11),
            hamiltonian,
            hamiltonian_file: self.hamiltonian_file.map(|f| base.join(f)),
            ansatz,
            channel,
            include_unitary: self.include_unitary.unwrap_or(true),
        };
        p.validate()?;
        Ok(p)
    }
}

impl VarianceParams {
    fn validate(&self) -> Result<()> {
        non_empty("params.qubits", &self.qubits)?;
        non_empty("params.depths", &self.depths)?;
        non_empty("params.dts", &self.dts)?;
        at_least("params.samples", self.samples, 2)?;
        for &n in &self.qubits {
            let min = if self.hamiltonian == HamiltonianKind::Random { 2 } else { 1 };
            if n < min || n > 10 {
                return Err(ConfigError::new("params.qubits", format!("entries must lie in {min}..=10, got {n}")));
            }
        }
        if let Some(&d) = self.depths.iter().find(|&&d| d == 0) {
            return Err(ConfigError::new("params.depths", format!("entries must be positive, got {d}")));
        }
        for &dt in &self.dts {
            positive("params.dts", dt)?;
        }
        if self.dts.windows(2).any(|w| w[1] <= w[0]) {
            return Err(ConfigError::new("params.dts", "must be strictly increasing"));
        }
        if self.target == TargetParam::Sigma && self.channel != ChannelKind::AnchorPair {
            return Err(ConfigError::new("params.target", "sigma needs channel \"anchor-pair\""));
        }
        match (self.hamiltonian, &self.hamiltonian_file) {
            (HamiltonianKind::File, None) => {
                return Err(ConfigError::new("params.hamiltonian_file", "required when hamiltonian is \"file\""))
            }
            (HamiltonianKind::Random | HamiltonianKind::Warmup, Some(_)) => {
                return Err(ConfigError::new("params.hamiltonian_file", "only used when hamiltonian is \"file\""))
            }
            _ => {}
        }
        Ok(())
    }
}

impl TrainRandomParams {
    fn validate(&self) -> Result<()> {
        at_least("params.n", self.n, 2)?;
        if self.n > 10 {
            return Err(ConfigError::new("params.n", format!("at most 10 qubits, got {}", self.n)));
        }
        at_least("params.depth", self.depth, 1)?;
        positive("params.dt", self.dt)?;
        positive("params.eta", self.eta)?;
        at_least("params.iterations", self.iterations, 1)?;
        at_least("params.runs", self.runs, 1)?;
        non_empty("params.modes", &self.modes)?;
        if self.switch > self.iterations {
            return Err(ConfigError::new("params.switch", format!("exceeds iterations ({})", self.iterations)));
        }
        if self.checkpoint > self.iterations {
            return Err(ConfigError::new("params.checkpoint", format!("exceeds iterations ({})", self.iterations)));
        }
        Ok(())
    }
}

impl TrainH2Params {
    fn validate(&self) -> Result<()> {
        at_least("params.depth", self.depth, 1)?;
        positive("params.dt", self.dt)?;
        positive("params.eta_dissipative", self.eta_dissipative)?;
        for &e in &self.unitary_etas {
            positive("params.unitary_etas", e)?;
        }
        positive("params.eta_after_switch", self.eta_after_switch)?;
        at_least("params.iterations", self.iterations, 1)?;
        at_least("params.runs", self.runs, 1)?;
        positive("params.threshold", self.threshold)?;
        if self.switch > self.iterations {
            return Err(ConfigError::new("params.switch", format!("exceeds iterations ({})", self.iterations)));
        }
        if self.checkpoint > self.iterations {
            return Err(ConfigError::new("params.checkpoint", format!("exceeds iterations ({})", self.iterations)));
        }
        Ok(())
    }
}

impl CollisionParams {
    fn validate(&self) -> Result<()> {
        at_least("params.n", self.n, 1)?;
        if self.n > 6 {
            return Err(ConfigError::new("params.n", format!("at most 6 qubits, got {}", self.n)));
        }
        non_negative("params.dt", self.dt)?;
        non_empty("params.steps", &self.steps)?;
        if self.steps.contains(&0) {
            return Err(ConfigError::new("params.steps", "entries must be at least 1"));
        }
        if !self.alpha.is_finite() || !self.phi.is_finite() {
            return Err(ConfigError::new("params.alpha", "angles must be finite"));
        }
        Ok(())
    }
}

/// Parses and validates config text; relative file references resolve against `base`.
pub fn parse_config(text: &str, base: &Path) -> Result<ExperimentConfig> {
    let raw: RawConfig =
        serde_json::from_str(text).map_err(|e| ConfigError::new("config", e.to_string()))?;
    if !KINDS.contains(&raw.kind.as_str()) {
        return Err(ConfigError::new(
            "kind",
            format!("unknown experiment kind `{}`; valid kinds: {}", raw.kind, KINDS.join(", ")),
        ));
    }
    let value = raw.params.unwrap_or_else(|| Value::Object(Default::default()));
    if !value.is_object() {
        return Err(ConfigError::new("params", "must be an object"));
    }
    let params = match raw.kind.as_str() {
        "warmup-landscape" => {
            let p: WarmupLandscapeParams = params_from(value)?;
            p.validate()?;
            Params::WarmupLandscape(p)
        }
        "variance-scaling" | "dt-sweep" => {
            let p: RawVarianceParams = params_from(value)?;
            Params::Variance(p.resolve(&raw.kind, base)?)
        }
        "train-random" => {
            let p: TrainRandomParams = params_from(value)?;
            p.validate()?;
            Params::TrainRandom(p)
        }
        "train-h2" => {
            let mut p: TrainH2Params = params_from(value)?;
            p.validate()?;
            p.fixture = p.fixture.map(|f| base.join(f));
            Params::TrainH2(p)
        }
        "collision-check" => {
            let p: CollisionParams = params_from(value)?;
            p.validate()?;
            Params::Collision(p)
        }
        _ => unreachable!("kind checked above"),
    };
    let output_dir = raw
        .output_dir
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from("out").join(&raw.kind));
    Ok(ExperimentConfig {
        kind: raw.kind,
        seed: raw.seed.unwrap_or(DEFAULT_SEED),
        output_dir,
        params,
    })
}

pub fn load_config(path: &Path) -> Result<ExperimentConfig> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| ConfigError::new("config", format!("cannot read file: {e}")))?;
    let base = path.parent().unwrap_or(Path::new("."));
    parse_config(&text, base)
}

impl ExperimentConfig {
    /// Applies the output-directory environment override.
    pub fn with_env_override(mut self) -> Self {
        if let Some(dir) = std::env::var_os(OUTPUT_DIR_ENV) {
            self.output_dir = PathBuf::from(dir);
        }
        self
    }

    /// Canonical JSON of everything that affects results (not the output location).
    pub fn canonical_json(&self) -> String {
        let mut v = serde_json::to_value(self).expect("config serializes");
        if let Value::Object(map) = &mut v {
            map.remove("output_dir");
        }
        v.to_string()
    }

    pub fn hash(&self) -> String {
        use sha2::{Digest, Sha256};
        hex::encode(Sha256::digest(self.canonical_json().as_bytes()))
    }
}
