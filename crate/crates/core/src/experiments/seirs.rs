//! Deterministic mean-field SEIRS dynamics on a graph.
//!
//! Compartments are fractions of each node's population. Node `v` feels the
//! infectious pressure `Ī_v = (I_v + Σ_u w_uv I_u) / (1 + Σ_u w_uv)`.

use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::joint::JointSignal;

pub const CONSERVATION_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeirsParams {
    /// Contagion probability per step.
    pub beta: f64,
    /// Latency period in days.
    pub te: f64,
    /// Infectious period in days.
    pub ti: f64,
    /// Immunity period in days; `f64::INFINITY` for permanent immunity,
    /// written as `"inf"` when serialized.
    #[serde(with = "days")]
    pub tr: f64,
    pub pop_per_node: f64,
    pub t_steps: usize,
    pub patient_zero: Vec<usize>,
    pub seed: u64,
}

/// The four contagion/immunity combinations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Scenario {
    LowTemp,
    HighTemp,
    LowPerm,
    HighPerm,
}

impl Scenario {
    pub const ALL: [Scenario; 4] = [
        Scenario::LowTemp,
        Scenario::HighTemp,
        Scenario::LowPerm,
        Scenario::HighPerm,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Scenario::LowTemp => "low-temp",
            Scenario::HighTemp => "high-temp",
            Scenario::LowPerm => "low-perm",
            Scenario::HighPerm => "high-perm",
        }
    }

    pub fn beta(self) -> f64 {
        match self {
            Scenario::LowTemp | Scenario::LowPerm => SeirsParams::LOW_BETA,
            Scenario::HighTemp | Scenario::HighPerm => SeirsParams::HIGH_BETA,
        }
    }

    pub fn tr(self) -> f64 {
        match self {
            Scenario::LowTemp | Scenario::HighTemp => SeirsParams::TEMPORARY_IMMUNITY_DAYS,
            Scenario::LowPerm | Scenario::HighPerm => f64::INFINITY,
        }
    }
}

impl fmt::Display for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Scenario {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Scenario::ALL
            .into_iter()
            .find(|p| p.name() == s)
            .ok_or_else(|| Error::InvalidParameter(format!("unknown preset '{s}'")))
    }
}

impl SeirsParams {
    pub const LOW_BETA: f64 = 0.25;
    pub const HIGH_BETA: f64 = 0.6;
    pub const TEMPORARY_IMMUNITY_DAYS: f64 = 60.0;
    pub const LATENCY_DAYS: f64 = 2.0;
    pub const INFECTIOUS_DAYS: f64 = 6.0;
    pub const POP_PER_NODE: f64 = 70.0;
    /// About sixteen months of daily steps.
    pub const DEFAULT_STEPS: usize = 487;
    pub const PATIENT_ZEROS: usize = 3;

    /// Scenario parameters with patient zeros drawn from `n` nodes by
    /// `ChaCha8Rng::seed_from_u64(seed)`.
    pub fn preset(scenario: Scenario, n: usize, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let k = Self::PATIENT_ZEROS.min(n);
        let mut patient_zero = rand::seq::index::sample(&mut rng, n, k).into_vec();
        patient_zero.sort_unstable();
        SeirsParams {
            beta: scenario.beta(),
            te: Self::LATENCY_DAYS,
            ti: Self::INFECTIOUS_DAYS,
            tr: scenario.tr(),
            pop_per_node: Self::POP_PER_NODE,
            t_steps: Self::DEFAULT_STEPS,
            patient_zero,
            seed,
        }
    }

    pub fn alpha(&self) -> f64 {
        1.0 / self.te
    }

    pub fn gamma(&self) -> f64 {
        1.0 / self.ti
    }

    pub fn xi(&self) -> f64 {
        if self.tr.is_infinite() {
            0.0
        } else {
            1.0 / self.tr
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidParameter(m));
        if !(0.0..=1.0).contains(&self.beta) {
            return bad(format!("beta must lie in [0, 1], got {}", self.beta));
        }
        for (name, v) in [("te", self.te), ("ti", self.ti)] {
            if !(v >= 1.0 && v.is_finite()) {
                return bad(format!("{name} must be a finite value >= 1, got {v}"));
            }
        }
        if self.tr.is_nan() || self.tr < 1.0 {
            return bad(format!("tr must be >= 1 or infinite, got {}", self.tr));
        }
        if !(self.pop_per_node >= 1.0 && self.pop_per_node.is_finite()) {
            return bad(format!("pop_per_node must be >= 1, got {}", self.pop_per_node));
        }
        if self.t_steps == 0 {
            return bad("t_steps must be positive".into());
        }
        Ok(())
    }
}

mod days {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_infinite() {
            s.serialize_str("inf")
        } else {
            s.serialize_f64(*v)
        }
    }

    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Days {
        Number(f64),
        Text(String),
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        match Days::deserialize(d)? {
            Days::Number(v) => Ok(v),
            Days::Text(t) => t.parse().map_err(serde::de::Error::custom),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SeirsState {
    pub s: Vec<f64>,
    pub e: Vec<f64>,
    pub i: Vec<f64>,
    pub r: Vec<f64>,
    /// Node updates so far that needed clamping into `[0, 1]`.
    pub clamp_events: u64,
}

impl SeirsState {
    /// Infectious fraction `1 / pop_per_node` at each patient zero.
    pub fn initial(n: usize, p: &SeirsParams) -> Result<Self> {
        if p.patient_zero.is_empty() {
            return Err(Error::InvalidParameter("patient_zero is empty".into()));
        }
        let mut st = SeirsState {
            s: vec![1.0; n],
            e: vec![0.0; n],
            i: vec![0.0; n],
            r: vec![0.0; n],
            clamp_events: 0,
        };
        let i0 = 1.0 / p.pop_per_node;
        for &v in &p.patient_zero {
            if v >= n {
                return Err(Error::BadPatientZero(v));
            }
            st.i[v] = i0;
            st.s[v] = 1.0 - i0;
        }
        Ok(st)
    }

    pub fn n(&self) -> usize {
        self.s.len()
    }

    /// Largest `|S + E + I + R - 1|` over nodes.
    pub fn conservation_error(&self) -> f64 {
        (0..self.n())
            .map(|v| (self.s[v] + self.e[v] + self.i[v] + self.r[v] - 1.0).abs())
            .fold(0.0, f64::max)
    }

    pub fn in_bounds(&self) -> bool {
        [&self.s, &self.e, &self.i, &self.r]
            .iter()
            .all(|c| c.iter().all(|x| (0.0..=1.0).contains(x)))
    }
}

/// One day of the per-node update.
pub fn seirs_step(state: &SeirsState, g: &Graph, p: &SeirsParams) -> SeirsState {
    let n = state.n();
    let (alpha, gamma, xi) = (p.alpha(), p.gamma(), p.xi());
    let mut next = SeirsState {
        s: vec![0.0; n],
        e: vec![0.0; n],
        i: vec![0.0; n],
        r: vec![0.0; n],
        clamp_events: state.clamp_events,
    };
    for v in 0..n {
        let (mut num, mut den) = (state.i[v], 1.0);
        for &(u, w) in g.neighbors(v) {
            num += w * state.i[u];
            den += w;
        }
        let pressure = num / den;
        let (s, e, i, r) = (state.s[v], state.e[v], state.i[v], state.r[v]);
        let infect = p.beta * s * pressure;
        let mut c = [
            s - infect + xi * r,
            e + infect - alpha * e,
            i + alpha * e - gamma * i,
            r + gamma * i - xi * r,
        ];
        if c.iter().any(|x| !(0.0..=1.0).contains(x)) {
            next.clamp_events += 1;
            for x in c.iter_mut() {
                *x = x.clamp(0.0, 1.0);
            }
            let total: f64 = c.iter().sum();
            for x in c.iter_mut() {
                *x /= total;
            }
        }
        [next.s[v], next.e[v], next.i[v], next.r[v]] = c;
    }
    next
}

#[derive(Debug, Clone)]
pub struct SeirsRun {
    /// `N x t_steps`; column `t` holds the infectious fractions after `t` steps.
    pub infectious: JointSignal,
    pub final_state: SeirsState,
    /// Largest per-node conservation error seen along the run.
    pub max_conservation_error: f64,
}

pub fn seirs_run(g: &Graph, p: &SeirsParams) -> Result<SeirsRun> {
    p.validate()?;
    let n = g.n();
    let mut state = SeirsState::initial(n, p)?;
    let mut data = DMatrix::zeros(n, p.t_steps);
    let mut worst = state.conservation_error();
    for t in 0..p.t_steps {
        if t > 0 {
            state = seirs_step(&state, g, p);
            worst = worst.max(state.conservation_error());
        }
        data.column_mut(t).copy_from_slice(&state.i);
    }
    Ok(SeirsRun {
        infectious: JointSignal::new(data)?,
        final_state: state,
        max_conservation_error: worst,
    })
}

/// Infectious fractions over time, `N x t_steps`.
pub fn seirs_signal(g: &Graph, p: &SeirsParams) -> Result<JointSignal> {
    Ok(seirs_run(g, p)?.infectious)
}
