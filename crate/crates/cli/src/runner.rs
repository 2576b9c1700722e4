//! Executes a resolved config and writes its outputs.

use std::f64::consts::PI;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use serde_json::{json, Map, Value};

use dissvqe::analytic::{self, GridAxis, LandscapeKind};
use dissvqe::collision::{self, CollisionConfig};
use dissvqe::hamiltonian::{load_pauli_file, parse_pauli_text, PauliDocument, H2_STO3G_FIXTURE};
use dissvqe::lindblad::LiouvillianSpec;
use dissvqe::qlinalg::DensityMatrix;
use dissvqe::training::{self, gradient_descent, TrainConfig, TrainTrace};
use dissvqe::variance::{self, AnsatzChoice, ChannelChoice, HamiltonianSource, Target, VarianceExperiment};

use crate::config::{
    AnsatzKind, ChannelKind, CollisionParams, ConfigError, ExperimentConfig, HamiltonianKind, Params,
    ProbeState, TargetParam, TrainH2Params, TrainMode, TrainRandomParams, VarianceParams,
    WarmupLandscapeParams,
};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, thiserror::Error)]
pub enum RunError {
    #[error("{0}")]
    Config(ConfigError),
    #[error("numerical abort: {0}")]
    Numerical(String),
    #[error("{0}")]
    Failed(String),
}

impl From<dissvqe::Error> for RunError {
    fn from(e: dissvqe::Error) -> Self {
        match e {
            dissvqe::Error::NumericalAbort { .. } => RunError::Numerical(e.to_string()),
            other => RunError::Failed(other.to_string()),
        }
    }
}

impl From<io::Error> for RunError {
    fn from(e: io::Error) -> Self {
        RunError::Failed(format!("i/o error: {e}"))
    }
}

type Result<T> = std::result::Result<T, RunError>;

/// Output directory bookkeeping; every CSV starts with the same header line.
struct Outputs {
    dir: PathBuf,
    header: String,
    files: Vec<String>,
}

impl Outputs {
    fn new(cfg: &ExperimentConfig) -> Result<Self> {
        fs::create_dir_all(&cfg.output_dir)?;
        Ok(Self {
            dir: cfg.output_dir.clone(),
            header: format!(
                "# dissvqe {VERSION} config_sha256={} seed={}\n",
                cfg.hash(),
                cfg.seed
            ),
            files: Vec::new(),
        })
    }

    fn csv(&mut self, name: &str, body: impl FnOnce(&mut Vec<u8>) -> io::Result<()>) -> Result<()> {
        let mut buf = self.header.clone().into_bytes();
        body(&mut buf)?;
        fs::write(self.dir.join(name), buf)?;
        self.files.push(name.to_string());
        Ok(())
    }

    fn json(&mut self, name: &str, cfg: &ExperimentConfig, body: Value) -> Result<()> {
        let mut doc = Map::new();
        doc.insert("artifact_version".into(), json!(VERSION));
        doc.insert("config_sha256".into(), json!(cfg.hash()));
        doc.insert("seed".into(), json!(cfg.seed));
        if let Value::Object(extra) = body {
            doc.extend(extra);
        }
        let mut text = serde_json::to_string_pretty(&Value::Object(doc)).expect("json serializes");
        text.push('\n');
        fs::write(self.dir.join(name), text)?;
        self.files.push(name.to_string());
        Ok(())
    }

    fn finish(mut self, cfg: &ExperimentConfig, summary: Value) -> Result<PathBuf> {
        self.json("summary.json", cfg, summary)?;
        let mut files = self.files.clone();
        files.push("manifest.json".into());
        let manifest = json!({
            "kind": cfg.kind,
            "config": serde_json::to_value(cfg).expect("config serializes"),
            "files": files,
        });
        self.json("manifest.json", cfg, manifest)?;
        Ok(self.dir)
    }
}

/// Runs the experiment and returns the output directory.
pub fn run(cfg: &ExperimentConfig) -> Result<PathBuf> {
    let mut out = Outputs::new(cfg)?;
    let summary = match &cfg.params {
        Params::WarmupLandscape(p) => warmup_landscape(p, &mut out)?,
        Params::Variance(p) => variance_run(cfg, p, &mut out)?,
        Params::TrainRandom(p) => train_random(cfg, p, &mut out)?,
        Params::TrainH2(p) => train_h2(cfg, p, &mut out)?,
        Params::Collision(p) => collision_check(cfg, p, &mut out)?,
    };
    out.finish(cfg, summary)
}

fn warmup_landscape(p: &WarmupLandscapeParams, out: &mut Outputs) -> Result<Value> {
    let dt = p.dt.unwrap_or_else(|| analytic::optimal_dt(p.n));
    let fixed = vec![0.0; p.n];
    let axis = GridAxis {
        points: p.points,
        ..GridAxis::default()
    };
    let mut landscapes = Map::new();
    for (name, kind) in [
        ("unitary", LandscapeKind::Unitary),
        ("noisy", LandscapeKind::Noisy { p: p.noise_p }),
        ("dissipative", LandscapeKind::Dissipative { dt }),
    ] {
        let grid = analytic::landscape_grid(kind, &fixed, axis, axis);
        out.csv(&format!("landscape_{name}.csv"), |w| grid.write_csv(w))?;
        landscapes.insert(name.into(), json!({"min": grid.min(), "max": grid.max()}));
    }
    let table: Vec<(usize, f64)> = p.optimum_qubits.iter().map(|&n| (n, analytic::optimal_dt(n))).collect();
    out.csv("optimal_dt.csv", |w| {
        use io::Write;
        writeln!(w, "n,optimal_dt,var_unitary,var_dissipative")?;
        for &(n, t) in &table {
            writeln!(w, "{n},{t},{:e},{:e}", analytic::var_grad_u(n), analytic::var_grad_ed(n, t))?;
        }
        Ok(())
    })?;
    let optimum: Map<String, Value> = table.iter().map(|&(n, t)| (n.to_string(), json!(t))).collect();
    Ok(json!({
        "n": p.n,
        "dt": dt,
        "noise_p": p.noise_p,
        "landscapes": landscapes,
        "optimal_dt": optimum,
    }))
}

fn load_document(path: &Path, key: &str) -> Result<PauliDocument> {
    load_pauli_file(path).map_err(|e| {
        RunError::Config(ConfigError {
            key: key.into(),
            message: format!("cannot load {}: {e}", path.display()),
        })
    })
}

fn variance_experiment(cfg: &ExperimentConfig, p: &VarianceParams) -> Result<VarianceExperiment> {
    let source = match p.hamiltonian {
        HamiltonianKind::Random => HamiltonianSource::Random,
        HamiltonianKind::Warmup => HamiltonianSource::Warmup,
        HamiltonianKind::File => {
            let path = p.hamiltonian_file.as_ref().expect("validated");
            let doc = load_document(path, "params.hamiltonian_file")?;
            if p.qubits.iter().any(|&n| n != doc.sum.n()) {
                return Err(RunError::Config(ConfigError {
                    key: "params.qubits".into(),
                    message: format!("must all equal the file's qubit count {}", doc.sum.n()),
                }));
            }
            HamiltonianSource::Fixed(doc.sum.to_dense())
        }
    };
    Ok(VarianceExperiment {
        qubits: p.qubits.clone(),
        depths: p.depths.clone(),
        dts: p.dts.clone(),
        samples: p.samples,
        target: match p.target {
            TargetParam::Theta11 => Target::Theta11,
            TargetParam::Sigma => Target::Sigma,
        },
        source,
        ansatz: match p.ansatz {
            AnsatzKind::Layered => AnsatzChoice::Layered,
            AnsatzKind::ProductX => AnsatzChoice::ProductX,
        },
        channel: match p.channel {
            ChannelKind::AnchorPair => ChannelChoice::AnchorPair,
            ChannelKind::Decay => ChannelChoice::Uniform { alpha: PI, phi: 0.0 },
        },
        base_seed: cfg.seed,
        include_unitary: p.include_unitary,
    })
}

fn variance_run(cfg: &ExperimentConfig, p: &VarianceParams, out: &mut Outputs) -> Result<Value> {
    let exp = variance_experiment(cfg, p)?;
    let points = variance::run_experiment(&exp)?;
    out.csv("variance.csv", |w| variance::write_csv(&points, w))?;
    let best = variance::best_dt(&points);
    out.csv("best_dt.csv", |w| {
        use io::Write;
        writeln!(w, "n,depth,best_dt,variance,std_error,unitary_variance,ratio")?;
        for b in &best {
            let (uv, r) = match (b.unitary, b.ratio()) {
                (Some(u), Some(r)) => (format!("{:e}", u.variance), format!("{r}")),
                _ => (String::new(), String::new()),
            };
            writeln!(w, "{},{},{},{:e},{:e},{uv},{r}", b.n, b.depth, b.best.dt, b.best.variance, b.best.std_error)?;
        }
        Ok(())
    })?;

    let mut groups = Vec::new();
    for b in &best {
        let curve: Vec<_> = points.iter().filter(|q| q.n == b.n && q.depth == b.depth && q.dt > 0.0).collect();
        let first = curve.first().expect("non-empty grid");
        let last = curve.last().expect("non-empty grid");
        groups.push(json!({
            "n": b.n,
            "depth": b.depth,
            "best_dt": b.best.dt,
            "best_variance": b.best.variance,
            "best_std_error": b.best.std_error,
            "unitary_variance": b.unitary.map(|u| u.variance),
            "ratio": b.ratio(),
            "first_dt_variance": first.variance,
            "last_dt_variance": last.variance,
        }));
    }
    let mut slopes = Map::new();
    for &depth in &exp.depths {
        let rows: Vec<_> = best.iter().filter(|b| b.depth == depth).collect();
        if rows.len() < 2 {
            continue;
        }
        let fit = |pts: Vec<(f64, f64, f64)>| {
            let usable = pts.iter().all(|&(_, v, se)| v > 0.0 && se > 0.0 && se.is_finite());
            usable.then(|| {
                let f = variance::fit_log_variance(&pts);
                json!({"slope": f.slope, "slope_se": f.slope_se})
            })
        };
        let dissipative = fit(rows.iter().map(|b| (b.n as f64, b.best.variance, b.best.std_error)).collect());
        let unitary = if exp.include_unitary {
            fit(rows
                .iter()
                .filter_map(|b| b.unitary.map(|u| (b.n as f64, u.variance, u.std_error)))
                .collect())
        } else {
            None
        };
        slopes.insert(depth.to_string(), json!({"best_dt": dissipative, "unitary": unitary}));
    }
    Ok(json!({
        "target": exp.target.label(),
        "samples": exp.samples,
        "groups": groups,
        "log_variance_slopes": slopes,
    }))
}

fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

fn mode_label(m: TrainMode) -> &'static str {
    match m {
        TrainMode::Unitary => "unitary",
        TrainMode::Dissipative => "dissipative",
        TrainMode::Hybrid => "hybrid",
    }
}

fn trace_summary(traces: &[TrainTrace], checkpoint: usize, reference: f64) -> Value {
    let finals: Vec<f64> = traces.iter().map(|t| t.final_cost()).collect();
    let energies: Vec<f64> = traces.iter().map(|t| t.final_energy).collect();
    let rel: Vec<f64> = finals.iter().map(|c| (c - reference).abs() / reference.abs()).collect();
    json!({
        "mean_cost_at_checkpoint": mean(&traces.iter().map(|t| t.costs[checkpoint]).collect::<Vec<_>>()),
        "mean_final_cost": mean(&finals),
        "mean_final_energy": mean(&energies),
        "mean_relative_error": mean(&rel),
        "final_costs": finals,
        "final_energies": energies,
    })
}

fn train_random(cfg: &ExperimentConfig, p: &TrainRandomParams, out: &mut Outputs) -> Result<Value> {
    let inst = training::random_instance(p.n, p.depth, p.dt, cfg.seed)?;
    let unitary = inst.model.unitary_only();
    let mut modes = Map::new();
    for &mode in &p.modes {
        let label = mode_label(mode);
        let mut traces = Vec::with_capacity(p.runs);
        for run in 0..p.runs as u64 {
            let base = TrainConfig::new(p.eta, p.iterations, run);
            let trace = match mode {
                TrainMode::Unitary => gradient_descent(&unitary, &base)?,
                TrainMode::Dissipative => gradient_descent(&inst.model, &base)?,
                TrainMode::Hybrid => gradient_descent(&inst.model, &base.with_switch(p.switch))?,
            };
            out.csv(&format!("trace_{label}_run{run}.csv"), |w| trace.write_csv(w))?;
            traces.push(trace);
        }
        modes.insert(label.into(), trace_summary(&traces, p.checkpoint, inst.ground_energy));
    }
    Ok(json!({
        "ground_energy": inst.ground_energy,
        "ground_anchor": format!("{:?}", inst.ground_anchor),
        "checkpoint": p.checkpoint,
        "modes": modes,
    }))
}

fn train_h2(cfg: &ExperimentConfig, p: &TrainH2Params, out: &mut Outputs) -> Result<Value> {
    let doc = match &p.fixture {
        Some(path) => load_document(path, "params.fixture")?,
        None => parse_pauli_text(H2_STO3G_FIXTURE)?,
    };
    let model = training::molecular_instance(&doc, p.depth, p.dt, cfg.seed).map_err(|e| match e {
        dissvqe::Error::InvalidArgument(m) => RunError::Config(ConfigError {
            key: "params.fixture".into(),
            message: m,
        }),
        other => other.into(),
    })?;
    let exact = doc.sum.ground_energy()?;
    let unitary = model.unitary_only();

    let mut schedules: Vec<(String, bool, TrainConfig)> = Vec::new();
    schedules.push((format!("dissipative_eta{}", p.eta_dissipative), true, TrainConfig::new(p.eta_dissipative, p.iterations, 0)));
    for &eta in &p.unitary_etas {
        schedules.push((format!("unitary_eta{eta}"), false, TrainConfig::new(eta, p.iterations, 0)));
    }
    let mut hybrid = TrainConfig::new(p.eta_dissipative, p.iterations, 0).with_switch(p.switch);
    hybrid.eta_after_switch = Some(p.eta_after_switch);
    schedules.push(("hybrid".into(), true, hybrid));

    let mut modes = Map::new();
    for (label, dissipative, template) in schedules {
        let mut traces = Vec::with_capacity(p.runs);
        for run in 0..p.runs as u64 {
            let c = TrainConfig { seed: run, ..template.clone() };
            let trace = gradient_descent(if dissipative { &model } else { &unitary }, &c)?;
            out.csv(&format!("trace_{label}_run{run}.csv"), |w| trace.write_csv(w))?;
            traces.push(trace);
        }
        let gaps: Vec<f64> = traces.iter().map(|t| t.final_cost() - exact).collect();
        let hits = gaps.iter().filter(|g| g.abs() <= p.threshold).count();
        let mut s = trace_summary(&traces, p.checkpoint, exact);
        if let Value::Object(m) = &mut s {
            m.insert("gaps_to_exact".into(), json!(gaps));
            m.insert("mean_gap_to_exact".into(), json!(mean(&gaps)));
            m.insert("runs_within_threshold".into(), json!(hits));
        }
        modes.insert(label, s);
    }
    Ok(json!({
        "exact_ground_energy": exact,
        "reference_ground_energy": doc.meta_f64("reference_ground_energy_hartree"),
        "hf_bits": doc.meta("hf_bits"),
        "threshold": p.threshold,
        "checkpoint": p.checkpoint,
        "modes": modes,
    }))
}

fn collision_check(cfg: &ExperimentConfig, p: &CollisionParams, out: &mut Outputs) -> Result<Value> {
    let spec = LiouvillianSpec::uniform(p.n, p.alpha, p.phi);
    let rho = match p.state {
        ProbeState::Excited => DensityMatrix::basis_state(p.n, (1 << p.n) - 1),
        ProbeState::Random => {
            use rand::SeedableRng;
            DensityMatrix::random(p.n, &mut rand_chacha::ChaCha8Rng::seed_from_u64(cfg.seed))
        }
    };
    let rows = collision::error_scan(&spec, p.dt, &p.steps, &rho)?;
    out.csv("collision.csv", |w| collision::write_csv(&rows, w))?;
    let order = (rows.len() >= 2 && rows.iter().all(|r| r.epsilon > 0.0)).then(|| collision::convergence_order(&rows));
    let resources: Vec<Value> = p
        .steps
        .iter()
        .map(|&m| {
            let r = collision::resource_report(&CollisionConfig::new(spec.clone(), p.dt, m).expect("validated"));
            json!({"M": m, "ancillas": r.ancillas, "resets": r.resets, "interactions": r.interactions})
        })
        .collect();
    Ok(json!({
        "n": p.n,
        "dt": p.dt,
        "epsilon_kind": rows.first().map(|r| r.kind.label()),
        "epsilon": rows.iter().map(|r| json!({"M": r.steps, "epsilon": r.epsilon})).collect::<Vec<_>>(),
        "convergence_order": order,
        "resources": resources,
    }))
}
