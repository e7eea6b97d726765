//! Noise injection, subband thresholding, the joint denoising pipeline and
//! error metrics.

use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::extension::{auto_extend, harary_bipartition, ring_extend, OversampledExtension, DEFAULT_VERTICAL_WEIGHT};
use crate::filterbank::{meyer_qmf_kernels, JointFilterBank, KernelPair, SubbandCoefficients};
use crate::graph::Graph;
use crate::joint::{extend_signal, restrict_signal, FillMode, JointGraph, JointSignal, RestrictMode};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ThresholdRule {
    Hard,
    Soft,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    /// K-coloring oversampled vertex extension.
    Oversampled,
    /// Max-cut bipartite subgraph of the vertex graph; no added nodes.
    Critical,
}

impl Mode {
    pub fn as_str(self) -> &'static str {
        match self {
            Mode::Oversampled => "oversampled",
            Mode::Critical => "critical",
        }
    }
}

impl RestrictMode {
    /// `Average` for copy fill, `Take` for zero fill.
    pub fn default_for(fill: FillMode) -> Self {
        match fill {
            FillMode::Copy => RestrictMode::Average,
            FillMode::Zero => RestrictMode::Take,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DenoiseConfig {
    pub sigma: f64,
    pub tau: f64,
    pub rule: ThresholdRule,
    /// Leave the subband that is lowpass in both domains untouched.
    pub protect_ll: bool,
    pub seed: u64,
    pub mode: Mode,
    pub fill: FillMode,
    pub restrict: RestrictMode,
}

impl DenoiseConfig {
    /// Hard threshold at `3σ`, protected low-low band, copy fill with averaging.
    pub fn new(sigma: f64, mode: Mode) -> Self {
        DenoiseConfig {
            sigma,
            tau: 3.0 * sigma,
            rule: ThresholdRule::Hard,
            protect_ll: true,
            seed: 0,
            mode,
            fill: FillMode::Copy,
            restrict: RestrictMode::Average,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.sigma >= 0.0 && self.sigma.is_finite()) {
            return Err(Error::InvalidParameter(format!("sigma must be >= 0, got {}", self.sigma)));
        }
        if !(self.tau >= 0.0 && self.tau.is_finite()) {
            return Err(Error::InvalidParameter(format!("tau must be >= 0, got {}", self.tau)));
        }
        Ok(())
    }
}

/// `x + σ·z` with `z` drawn from `StandardNormal` on a `ChaCha8Rng` seeded by
/// `seed`, consumed in column-major order.
pub fn add_gaussian_noise(x: &JointSignal, sigma: f64, seed: u64) -> Result<JointSignal> {
    if !(sigma >= 0.0 && sigma.is_finite()) {
        return Err(Error::InvalidParameter(format!("sigma must be >= 0, got {sigma}")));
    }
    if sigma == 0.0 {
        return Ok(x.clone());
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut data = x.data().clone();
    for v in data.iter_mut() {
        let z: f64 = StandardNormal.sample(&mut rng);
        *v += sigma * z;
    }
    JointSignal::new(data)
}

pub fn hard_threshold(x: f64, tau: f64) -> f64 {
    if x.abs() > tau {
        x
    } else {
        0.0
    }
}

pub fn soft_threshold(x: f64, tau: f64) -> f64 {
    x.signum() * (x.abs() - tau).max(0.0)
}

/// Applies the configured rule to every subband, skipping `(0, 0)` when
/// `protect_ll` is set.
pub fn threshold(s: &SubbandCoefficients, cfg: &DenoiseConfig) -> SubbandCoefficients {
    let mut out = s.clone();
    let f = match cfg.rule {
        ThresholdRule::Hard => hard_threshold,
        ThresholdRule::Soft => soft_threshold,
    };
    for kv in 0..2 {
        for kt in 0..2 {
            if cfg.protect_ll && kv == 0 && kt == 0 {
                continue;
            }
            out.get_mut(kv, kt).apply(|x| *x = f(*x, cfg.tau));
        }
    }
    out
}

#[derive(Debug, Clone)]
pub struct DenoiseOutput {
    pub signal: JointSignal,
    pub rho_vertex: f64,
    pub rho_time: f64,
}

/// Extensions and filter bank for one vertex graph, time length and mode,
/// reusable across noisy realizations.
#[derive(Debug, Clone)]
pub struct Denoiser {
    mode: Mode,
    vertex: OversampledExtension,
    time: OversampledExtension,
    bank: JointFilterBank,
}

impl Denoiser {
    pub fn new(vertex_graph: &Graph, t: usize, mode: Mode, seed: u64) -> Result<Self> {
        Self::with_kernels(vertex_graph, t, mode, seed, &meyer_qmf_kernels())
    }

    pub fn with_kernels(
        vertex_graph: &Graph,
        t: usize,
        mode: Mode,
        seed: u64,
        kp: &KernelPair,
    ) -> Result<Self> {
        let time = ring_extend(t)?;
        let vertex = match mode {
            Mode::Oversampled => auto_extend(vertex_graph, DEFAULT_VERTICAL_WEIGHT)?,
            Mode::Critical => {
                let f = harary_bipartition(vertex_graph, seed);
                OversampledExtension::identity(&f.graph, f.bipartition)?
            }
        };
        let j = JointGraph::from_extensions(&vertex, &time)?;
        let bank = JointFilterBank::new(&j, vertex.bipartition(), time.bipartition(), kp)?;
        Ok(Denoiser {
            mode,
            vertex,
            time,
            bank,
        })
    }

    pub fn mode(&self) -> Mode {
        self.mode
    }

    pub fn vertex_extension(&self) -> &OversampledExtension {
        &self.vertex
    }

    pub fn time_extension(&self) -> &OversampledExtension {
        &self.time
    }

    /// Extend, analyze, threshold, synthesize, restrict.
    pub fn run(&self, xn: &JointSignal, cfg: &DenoiseConfig) -> Result<DenoiseOutput> {
        cfg.validate()?;
        let xe = extend_signal(xn, &self.vertex, &self.time, cfg.fill)?;
        let s = self.bank.analyze(xe.data())?;
        let s = threshold(&s, cfg);
        let y = self.bank.synthesize(&s)?;
        let signal = restrict_signal(&xe.with_data(y)?, cfg.restrict);
        Ok(DenoiseOutput {
            signal,
            rho_vertex: self.vertex.rho(),
            rho_time: self.time.rho(),
        })
    }
}

/// One-shot denoising of an `N x T` signal over `vertex_graph`.
pub fn denoise(xn: &JointSignal, vertex_graph: &Graph, cfg: &DenoiseConfig) -> Result<DenoiseOutput> {
    cfg.validate()?;
    let (n, t) = xn.shape();
    if n != vertex_graph.n() {
        return Err(Error::DimensionMismatch(format!(
            "signal has {n} rows, graph has {} nodes",
            vertex_graph.n()
        )));
    }
    if t < 3 {
        return Err(Error::TooSmall { what: "time length", got: t, min: 3 });
    }
    Denoiser::new(vertex_graph, t, cfg.mode, cfg.seed)?.run(xn, cfg)
}

fn check_same_shape(x: &DMatrix<f64>, y: &DMatrix<f64>) -> Result<()> {
    if x.shape() != y.shape() {
        return Err(Error::DimensionMismatch(format!(
            "shapes {:?} and {:?} differ",
            x.shape(),
            y.shape()
        )));
    }
    Ok(())
}

pub fn mse(x: &JointSignal, y: &JointSignal) -> Result<f64> {
    check_same_shape(x.data(), y.data())?;
    Ok((x.data() - y.data()).norm_squared() / x.data().len() as f64)
}

/// `10 log10(‖ref‖² / ‖ref - est‖²)`; `+∞` when `est` equals `ref` exactly.
pub fn snr_db(reference: &JointSignal, est: &JointSignal) -> Result<f64> {
    check_same_shape(reference.data(), est.data())?;
    let p = reference.data().norm_squared();
    if p == 0.0 {
        return Err(Error::ZeroReference);
    }
    let e = (reference.data() - est.data()).norm_squared();
    if e == 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok(10.0 * (p / e).log10())
}

/// Serializes `+∞` as the string `"+inf"`, other values as numbers.
pub fn serialize_db<S: Serializer>(v: &f64, s: S) -> std::result::Result<S::Ok, S::Error> {
    if *v == f64::INFINITY {
        s.serialize_str("+inf")
    } else {
        s.serialize_f64(*v)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetricsRecord {
    pub mode: String,
    pub sigma: f64,
    pub tau: f64,
    pub mse: f64,
    #[serde(serialize_with = "serialize_db")]
    pub snr_db: f64,
    pub rho_vertex: f64,
    pub rho_time: f64,
    pub seed: u64,
}

impl MetricsRecord {
    pub fn new(cfg: &DenoiseConfig, out: &DenoiseOutput, clean: &JointSignal) -> Result<Self> {
        Ok(MetricsRecord {
            mode: cfg.mode.as_str().to_string(),
            sigma: cfg.sigma,
            tau: cfg.tau,
            mse: mse(clean, &out.signal)?,
            snr_db: snr_db(clean, &out.signal)?,
            rho_vertex: out.rho_vertex,
            rho_time: out.rho_time,
            seed: cfg.seed,
        })
    }

    pub fn to_json_line(&self) -> String {
        serde_json::to_string(self).expect("metrics serialize")
    }
}
