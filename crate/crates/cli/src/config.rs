//! Experiment configuration: a flat TOML file, schema-validated with
//! unknown keys rejected, resolved against per-problem defaults.

use serde::Deserialize;

use csvgd_core::problems::{
    icp_problem, ik_problem, toy2d_problem, trajectory_problem, Benchmark, IcpProblem, IkProblem,
    TrajectoryProblem,
};
use csvgd_core::problems::synthetic_cylinder_scene;
use csvgd_core::eval::MethodKind;
use csvgd_core::{
    FormulationParams, MappingKind, Problem, SoftKind, SolveConfig, StepControl, ThetaMode,
};

#[derive(Debug)]
pub struct ConfigError(pub String);

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "invalid config: {}", self.0)
    }
}

impl std::error::Error for ConfigError {}

#[derive(Debug, Deserialize, Default, Clone)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub problem: Option<String>,
    pub method: Option<String>,
    pub formulation: Option<String>,
    pub out: Option<String>,
    pub seed: Option<u64>,
    #[serde(default)]
    pub solve: SolveBlock,
    #[serde(default)]
    pub formulation_params: ParamsBlock,
    pub toy2d: Option<Toy2dBlock>,
    pub trajectory: Option<TrajectoryBlock>,
    pub ik: Option<IkBlock>,
    pub icp: Option<IcpBlock>,
    pub matrix: Option<MatrixBlock>,
}

#[derive(Debug, Deserialize, Default, Clone)]
#[serde(deny_unknown_fields)]
pub struct SolveBlock {
    pub n_particles: Option<usize>,
    pub inner_tol: Option<f64>,
    pub outer_tol: Option<f64>,
    pub max_inner: Option<u64>,
    pub max_outer: Option<u64>,
    pub eps0: Option<f64>,
    pub beta: Option<f64>,
    pub max_backtracks: Option<u32>,
    pub min_eps: Option<f64>,
    pub theta_mode: Option<String>,
    pub mapping: Option<String>,
}

#[derive(Debug, Deserialize, Default, Clone)]
#[serde(deny_unknown_fields)]
pub struct ParamsBlock {
    pub c0: Option<f64>,
    pub d0: Option<f64>,
    pub mu0: Option<f64>,
    pub delta0: Option<f64>,
    pub growth: Option<f64>,
    pub shrink: Option<f64>,
}

#[derive(Debug, Deserialize, Clone)]
#[serde(deny_unknown_fields)]
pub struct Toy2dBlock {
    pub alpha: Option<f64>,
}

#[derive(Debug, Deserialize, Clone)]
#[serde(deny_unknown_fields)]
pub struct TrajectoryBlock {
    pub alpha: Option<f64>,
    pub t: Option<usize>,
    pub start: Option<[f64; 2]>,
    pub goal: Option<[f64; 2]>,
    /// Each obstacle as `[cx, cy, radius]`.
    pub obstacles: Option<Vec<[f64; 3]>>,
    pub init_noise: Option<f64>,
}

#[derive(Debug, Deserialize, Clone)]
#[serde(deny_unknown_fields)]
pub struct IkBlock {
    pub alpha: Option<f64>,
    /// Shift applied to the default height constraint target.
    pub z_target_offset: Option<f64>,
}

#[derive(Debug, Deserialize, Clone)]
#[serde(deny_unknown_fields)]
pub struct IcpBlock {
    pub alpha: Option<f64>,
    pub n_subset: Option<usize>,
    pub d_max: Option<f64>,
    pub scene_seed: Option<u64>,
}

#[derive(Debug, Deserialize, Clone)]
#[serde(deny_unknown_fields)]
pub struct MatrixBlock {
    pub methods: Vec<String>,
    pub formulations: Vec<String>,
    pub seeds: Vec<u64>,
    /// Compute EMD against rejection-sampled ground truth where possible.
    #[serde(default)]
    pub emd: bool,
}

pub fn parse_config(text: &str) -> Result<ExperimentConfig, ConfigError> {
    toml::from_str(text).map_err(|e| ConfigError(e.to_string()))
}

pub fn parse_method(s: &str) -> Result<MethodKind, ConfigError> {
    match s {
        "q" => Ok(MethodKind::Q),
        "p" => Ok(MethodKind::P),
        "unconstrained" => Ok(MethodKind::Unconstrained),
        other => Err(ConfigError(format!(
            "unknown method '{other}' (expected q, p, or unconstrained)"
        ))),
    }
}

pub fn parse_formulation(s: &str) -> Result<SoftKind, ConfigError> {
    match s {
        "auglag" => Ok(SoftKind::AugmentedLagrangian),
        "quadpenalty" => Ok(SoftKind::QuadraticPenalty),
        "logbarrier" => Ok(SoftKind::LogBarrier),
        "relaxedlogbarrier" => Ok(SoftKind::RelaxedLogBarrier),
        other => Err(ConfigError(format!(
            "unknown formulation '{other}' (expected auglag, quadpenalty, logbarrier, or relaxedlogbarrier)"
        ))),
    }
}

fn parse_theta_mode(s: &str) -> Result<ThetaMode, ConfigError> {
    match s {
        "per-particle" => Ok(ThetaMode::PerParticle),
        "shared" => Ok(ThetaMode::Shared),
        other => Err(ConfigError(format!(
            "unknown theta_mode '{other}' (expected per-particle or shared)"
        ))),
    }
}

fn parse_mapping(s: &str) -> Result<MappingKind, ConfigError> {
    match s {
        "none" => Ok(MappingKind::None),
        "tanh" => Ok(MappingKind::Tanh),
        "sin" => Ok(MappingKind::Sin),
        other => Err(ConfigError(format!(
            "unknown mapping '{other}' (expected none, tanh, or sin)"
        ))),
    }
}

/// Overlay hints for the scatter plot, derived from the problem geometry.
#[derive(Clone, Default)]
pub struct PlotHints {
    /// (cx, cy, r, filled)
    pub circles: Vec<(f64, f64, f64, bool)>,
    pub rect: Option<(f64, f64, f64, f64)>,
    /// Trajectory endpoints: particles are drawn as polylines between them.
    pub endpoints: Option<([f64; 2], [f64; 2])>,
}

/// Fully resolved experiment: problem instance plus solver settings.
pub struct Experiment {
    pub method: MethodKind,
    pub formulation: SoftKind,
    pub out: String,
    pub seed: u64,
    pub config: SolveConfig<f64>,
    pub params: FormulationParams<f64>,
    pub build: Box<dyn Fn(u64) -> Problem<f64> + Send + Sync>,
    pub matrix: Option<MatrixSpec>,
    pub plot: PlotHints,
}

pub struct MatrixSpec {
    pub methods: Vec<MethodKind>,
    pub formulations: Vec<SoftKind>,
    pub seeds: Vec<u64>,
    pub emd: bool,
}

fn apply_solve_block(cfg: &mut SolveConfig<f64>, block: &SolveBlock) -> Result<(), ConfigError> {
    if let Some(v) = block.n_particles {
        cfg.n_particles = v;
    }
    if let Some(v) = block.inner_tol {
        cfg.inner_tol = v;
    }
    if let Some(v) = block.outer_tol {
        cfg.outer_tol = v;
    }
    if let Some(v) = block.max_inner {
        cfg.max_inner = v;
    }
    if let Some(v) = block.max_outer {
        cfg.max_outer = v;
    }
    let mut step: StepControl<f64> = cfg.step;
    if let Some(v) = block.eps0 {
        step.eps0 = v;
    }
    if let Some(v) = block.beta {
        step.beta = v;
    }
    if let Some(v) = block.max_backtracks {
        step.max_backtracks = v;
    }
    if let Some(v) = block.min_eps {
        step.min_eps = v;
    }
    cfg.step = step;
    if let Some(s) = &block.theta_mode {
        cfg.theta_mode = parse_theta_mode(s)?;
    }
    if let Some(s) = &block.mapping {
        cfg.mapping = parse_mapping(s)?;
    }
    Ok(())
}

fn apply_params_block(params: &mut FormulationParams<f64>, block: &ParamsBlock) {
    if let Some(v) = block.c0 {
        params.c0 = v;
    }
    if let Some(v) = block.d0 {
        params.d0 = v;
    }
    if let Some(v) = block.mu0 {
        params.mu0 = v;
    }
    if let Some(v) = block.delta0 {
        params.delta0 = v;
    }
    if let Some(v) = block.growth {
        params.growth = v;
    }
    if let Some(v) = block.shrink {
        params.shrink = v;
    }
}

/// Flag-level overrides collected from the command line; they win over the
/// config file.
#[derive(Default, Clone)]
pub struct FlagOverrides {
    pub seed: Option<u64>,
    pub particles: Option<usize>,
    pub method: Option<String>,
    pub formulation: Option<String>,
    pub out: Option<String>,
}

/// Resolve a problem name + config file + flags into a runnable experiment.
pub fn resolve(
    problem_name: &str,
    file: Option<&ExperimentConfig>,
    flags: &FlagOverrides,
) -> Result<Experiment, ConfigError> {
    let empty = ExperimentConfig::default();
    let cfg = file.unwrap_or(&empty);
    if let Some(p) = &cfg.problem {
        if p != problem_name {
            return Err(ConfigError(format!(
                "config names problem '{p}' but the subcommand is '{problem_name}'"
            )));
        }
    }

    let bench: Benchmark<f64> = csvgd_core::problems::benchmark(problem_name)
        .ok_or_else(|| ConfigError(format!("unknown problem '{problem_name}'")))?;
    let mut solve = bench.config.clone();
    let mut params = bench.params;
    apply_solve_block(&mut solve, &cfg.solve)?;
    apply_params_block(&mut params, &cfg.formulation_params);

    let mut plot = PlotHints::default();

    // per-problem parameter blocks rebuild the problem constructor
    let build: Box<dyn Fn(u64) -> Problem<f64> + Send + Sync> = match problem_name {
        "toy2d" => {
            let alpha = cfg.toy2d.as_ref().and_then(|b| b.alpha).unwrap_or(2.0);
            plot.circles.push((0.0, 0.0, 2.0f64.sqrt(), false));
            plot.rect = Some((-2.0, -2.0, 2.0, 2.0));
            Box::new(move |_seed| toy2d_problem(alpha))
        }
        "trajectory" => {
            let block = cfg.trajectory.clone();
            let mut spec = TrajectoryProblem::default_scene(50.0);
            if let Some(b) = &block {
                if let Some(v) = b.alpha {
                    spec.alpha = v;
                }
                if let Some(v) = b.t {
                    spec.t_free = v;
                }
                if let Some(v) = b.start {
                    spec.start = v;
                }
                if let Some(v) = b.goal {
                    spec.goal = v;
                }
                if let Some(list) = &b.obstacles {
                    spec.obstacles = list.iter().map(|o| ([o[0], o[1]], o[2])).collect();
                }
                if let Some(v) = b.init_noise {
                    spec.init_noise = v;
                }
            }
            for (c, r) in &spec.obstacles {
                plot.circles.push((c[0], c[1], *r, true));
            }
            plot.endpoints = Some((spec.start, spec.goal));
            Box::new(move |_seed| trajectory_problem(&spec))
        }
        "ik" => {
            let block = cfg.ik.clone();
            let alpha = block.as_ref().and_then(|b| b.alpha).unwrap_or(5.0);
            let z_offset = block.as_ref().and_then(|b| b.z_target_offset).unwrap_or(0.0);
            Box::new(move |_seed| {
                let mut task = IkProblem::default_task(alpha);
                task.z_target += z_offset;
                ik_problem(&task)
            })
        }
        "icp" => {
            let block = cfg.icp.clone();
            let alpha = block.as_ref().and_then(|b| b.alpha).unwrap_or(100.0);
            let n_subset = block.as_ref().and_then(|b| b.n_subset).unwrap_or(64);
            let d_max = block.as_ref().and_then(|b| b.d_max).unwrap_or(0.1);
            let scene_seed = block.as_ref().and_then(|b| b.scene_seed);
            plot.circles.push((0.0, 0.0, 0.5, false));
            Box::new(move |seed| {
                let scene_seed = scene_seed.unwrap_or(seed);
                let scene = synthetic_cylinder_scene::<f64>(scene_seed);
                let mut spec = IcpProblem::with_defaults(scene, seed);
                spec.alpha = alpha;
                spec.n_subset = n_subset;
                spec.d_max = d_max;
                icp_problem(&spec)
            })
        }
        other => return Err(ConfigError(format!("unknown problem '{other}'"))),
    };

    let method_str = flags
        .method
        .clone()
        .or_else(|| cfg.method.clone())
        .unwrap_or_else(|| "q".to_string());
    let default_formulation = if problem_name == "icp" { "quadpenalty" } else { "auglag" };
    let formulation_str = flags
        .formulation
        .clone()
        .or_else(|| cfg.formulation.clone())
        .unwrap_or_else(|| default_formulation.to_string());
    let seed = flags.seed.or(cfg.seed).unwrap_or(0);
    if let Some(n) = flags.particles {
        solve.n_particles = n;
    }
    solve.seed = seed;
    let out = flags
        .out
        .clone()
        .or_else(|| cfg.out.clone())
        .unwrap_or_else(|| format!("runs/{problem_name}"));

    let matrix = match &cfg.matrix {
        Some(m) => {
            let methods = m
                .methods
                .iter()
                .map(|s| parse_method(s))
                .collect::<Result<Vec<_>, _>>()?;
            let formulations = m
                .formulations
                .iter()
                .map(|s| parse_formulation(s))
                .collect::<Result<Vec<_>, _>>()?;
            if methods.is_empty() || formulations.is_empty() || m.seeds.is_empty() {
                return Err(ConfigError("matrix lists must be non-empty".into()));
            }
            Some(MatrixSpec {
                methods,
                formulations,
                seeds: m.seeds.clone(),
                emd: m.emd,
            })
        }
        None => None,
    };

    Ok(Experiment {
        method: parse_method(&method_str)?,
        formulation: parse_formulation(&formulation_str)?,
        out,
        seed,
        config: solve,
        params,
        build,
        matrix,
        plot,
    })
}
