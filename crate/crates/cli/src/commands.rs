use std::path::{Path, PathBuf};

use jtv_fbank::denoise::{
    add_gaussian_noise, denoise as run_denoise, mse, snr_db, DenoiseConfig, DenoiseOutput, MetricsRecord, Mode,
    ThresholdRule,
};
use jtv_fbank::experiments::{
    image_to_joint, joint_to_frames, read_frame_dir, seirs_run, video_to_joint, GrayImage, PgmFormat, Scenario,
    SeirsParams,
};
use jtv_fbank::extension::{
    auto_extend, bipartite_double_cover, extend_graph_with, greedy_coloring, harary_bipartition, ring_extend,
    ring_extend_with, OversampledExtension, DEFAULT_VERTICAL_WEIGHT,
};
use jtv_fbank::filterbank::{meyer_qmf_kernels, JointFilterBank};
use jtv_fbank::graph::{grid_graph, ring_graph, Connectivity, Graph};
use jtv_fbank::joint::{extend_signal, restrict_signal, FillMode, JointGraph, JointSignal, RestrictMode};
use jtv_fbank::{Error, Result};
use rayon::prelude::*;
use serde::Deserialize;
use serde_json::json;

use crate::manifest::RunManifest;
use crate::{
    DenoiseArgs, ExtendArgs, ExtendMode, FillArg, ModeArg, PresetArg, RestrictArg, RoundtripArgs, RuleArg,
    SignalSource, SimulateArgs,
};

fn with_suffix(prefix: &Path, suffix: &str) -> PathBuf {
    PathBuf::from(format!("{}.{suffix}", prefix.display()))
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn create_dir(path: &Path) -> Result<()> {
    std::fs::create_dir_all(path).map_err(|e| Error::io(path, e))
}

fn manifest_for(command: &str, seed: u64, args: &impl serde::Serialize) -> RunManifest {
    let mut m = RunManifest::new(command, seed);
    if let serde_json::Value::Object(map) = serde_json::to_value(args).expect("arguments serialize") {
        m.params = map;
    }
    m
}

impl From<ModeArg> for Mode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Oversampled => Mode::Oversampled,
            ModeArg::Critical => Mode::Critical,
        }
    }
}

impl From<FillArg> for FillMode {
    fn from(f: FillArg) -> Self {
        match f {
            FillArg::Zero => FillMode::Zero,
            FillArg::Copy => FillMode::Copy,
        }
    }
}

impl From<RestrictArg> for RestrictMode {
    fn from(r: RestrictArg) -> Self {
        match r {
            RestrictArg::Take => RestrictMode::Take,
            RestrictArg::Average => RestrictMode::Average,
        }
    }
}

impl From<PresetArg> for Scenario {
    fn from(p: PresetArg) -> Self {
        match p {
            PresetArg::LowTemp => Scenario::LowTemp,
            PresetArg::HighTemp => Scenario::HighTemp,
            PresetArg::LowPerm => Scenario::LowPerm,
            PresetArg::HighPerm => Scenario::HighPerm,
        }
    }
}

fn connectivity(c: u32) -> Result<Connectivity> {
    Connectivity::try_from(c)
}

fn ensure_ring(g: &Graph) -> Result<()> {
    let expected = ring_graph(g.n())?;
    let same = g.edges().len() == expected.edges().len()
        && g.edges().iter().zip(expected.edges()).all(|(a, b)| (a.u, a.v) == (b.u, b.v));
    if !same {
        return Err(Error::InvalidParameter(format!(
            "ring mode needs the cycle 0-1-...-{}-0",
            g.n() - 1
        )));
    }
    Ok(())
}

fn vertex_extension(g: &Graph, mode: Mode, seed: u64) -> Result<OversampledExtension> {
    match mode {
        Mode::Oversampled => auto_extend(g, DEFAULT_VERTICAL_WEIGHT),
        Mode::Critical => {
            let f = harary_bipartition(g, seed);
            OversampledExtension::identity(&f.graph, f.bipartition)
        }
    }
}

pub fn extend(a: &ExtendArgs) -> Result<()> {
    let g = Graph::read_edge_list(&a.graph)?;
    let ext = match a.mode {
        ExtendMode::Kcolor => match a.split {
            Some(l) => extend_graph_with(&g, &greedy_coloring(&g), l, a.vertical_weight)?,
            None => auto_extend(&g, a.vertical_weight)?,
        },
        ExtendMode::DoubleCover => bipartite_double_cover(&g),
        ExtendMode::Ring => {
            ensure_ring(&g)?;
            ring_extend_with(g.n(), a.vertical_weight)?
        }
    };
    let edges_path = with_suffix(&a.out, "edges");
    ext.extended().write_edge_list(&edges_path)?;
    let json_path = with_suffix(&a.out, "json");
    write_text(&json_path, &(serde_json::to_string_pretty(&ext.metadata()).expect("metadata serializes") + "\n"))?;

    let mut m = manifest_for("extend", 0, a);
    m.input(&a.graph)?;
    m.output(&edges_path)?;
    m.output(&json_path)?;
    m.write(&with_suffix(&a.out, "manifest.json"))?;

    let b = ext.bipartition();
    println!(
        "rho={:.7} ({}/{}) low={} high={} dropped={}",
        ext.rho(),
        ext.n1(),
        ext.n0(),
        b.low().len(),
        b.high().len(),
        ext.dropped().len()
    );
    Ok(())
}

pub fn roundtrip(a: &RoundtripArgs) -> Result<()> {
    let g = Graph::read_edge_list(&a.graph)?;
    let (n, t) = (g.n(), a.time_length);
    let mut m = manifest_for("roundtrip", a.seed, a);
    m.input(&a.graph)?;
    let x = match a.signal {
        SignalSource::Random => add_gaussian_noise(&JointSignal::zeros(n, t), 1.0, a.seed)?,
        SignalSource::File => {
            let path = a
                .signal_file
                .as_ref()
                .ok_or_else(|| Error::InvalidParameter("--signal file needs --signal-file".into()))?;
            m.input(path)?;
            JointSignal::read_csv(path)?
        }
    };
    if x.shape() != (n, t) {
        return Err(Error::DimensionMismatch(format!(
            "signal is {:?}, graph and time length give ({n}, {t})",
            x.shape()
        )));
    }
    let mode = Mode::from(a.mode);
    let fill = FillMode::from(a.fill);
    let ve = vertex_extension(&g, mode, a.seed)?;
    let te = ring_extend(t)?;
    let j = JointGraph::from_extensions(&ve, &te)?;
    let bank = JointFilterBank::new(&j, ve.bipartition(), te.bipartition(), &meyer_qmf_kernels())?;
    let xe = extend_signal(&x, &ve, &te, fill)?;

    let mut two_term = None;
    let y = if a.literal {
        let out = bank.two_term(xe.data())?;
        two_term = Some((out.relative_residual, out.vec_form_discrepancy));
        out.output
    } else {
        let s = bank.analyze(xe.data())?;
        if let Some(dir) = &a.dump_subbands {
            for p in s.dump(dir)? {
                m.output(&p)?;
            }
        }
        bank.synthesize(&s)?
    };
    let extended_error = (&y - xe.data()).norm() / xe.data().norm().max(f64::MIN_POSITIVE);
    let back = restrict_signal(&xe.with_data(y)?, RestrictMode::default_for(fill));
    let metrics = json!({
        "command": "roundtrip",
        "mode": mode.as_str(),
        "reconstruction": if a.literal { "two-term" } else { "cascade" },
        "fill": a.fill,
        "n": n,
        "t": t,
        "n1": ve.n1(),
        "t1": te.n1(),
        "rho_vertex": ve.rho(),
        "rho_time": te.rho(),
        "mse": mse(&x, &back)?,
        "relative_error": extended_error,
        "two_term_residual": two_term.map(|t| t.0),
        "vec_form_discrepancy": two_term.and_then(|t| t.1),
        "seed": a.seed,
    });
    let line = serde_json::to_string(&metrics).expect("metrics serialize");
    write_text(&a.out, &(line.clone() + "\n"))?;
    m.output(&a.out)?;
    m.write(&with_suffix(&a.out, "manifest.json"))?;
    println!("{line}");
    Ok(())
}

fn parse_grid(text: &str) -> Result<(usize, usize)> {
    let bad = || Error::InvalidParameter(format!("--grid expects ROWSxCOLS, got '{text}'"));
    let (r, c) = text.split_once(['x', 'X']).ok_or_else(bad)?;
    Ok((r.trim().parse().map_err(|_| bad())?, c.trim().parse().map_err(|_| bad())?))
}

struct DenoiseInput {
    clean: JointSignal,
    graph: Graph,
    /// Frame side length when the input was images.
    side: Option<usize>,
}

fn load_denoise_input(a: &DenoiseArgs, m: &mut RunManifest) -> Result<DenoiseInput> {
    let conn = connectivity(a.connectivity)?;
    if let Some(path) = &a.signal {
        m.input(path)?;
        let clean = JointSignal::read_csv(path)?;
        let graph = match (&a.graph, &a.grid) {
            (Some(gp), _) => {
                m.input(gp)?;
                Graph::read_edge_list(gp)?
            }
            (None, Some(dims)) => {
                let (r, c) = parse_grid(dims)?;
                grid_graph(r, c, conn)?
            }
            (None, None) => return Err(Error::InvalidParameter("--signal needs --graph or --grid".into())),
        };
        return Ok(DenoiseInput { clean, graph, side: None });
    }
    let (clean, _) = if let Some(pair) = &a.images {
        for p in pair {
            m.input(p)?;
        }
        let ia = GrayImage::read_pgm(&pair[0])?;
        let ib = GrayImage::read_pgm(&pair[1])?;
        image_to_joint(&ia, &ib, a.frames, a.side)?
    } else if let Some(dir) = &a.video {
        let mut paths: Vec<_> = std::fs::read_dir(dir)
            .map_err(|e| Error::io(dir, e))?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|x| x.eq_ignore_ascii_case("pgm")))
            .collect();
        paths.sort();
        for p in &paths {
            m.input(p)?;
        }
        let (x, g, _) = video_to_joint(&read_frame_dir(dir)?, a.side)?;
        (x, g)
    } else {
        return Err(Error::InvalidParameter("one of --signal, --images or --video is required".into()));
    };
    Ok(DenoiseInput {
        clean,
        graph: grid_graph(a.side, a.side, conn)?,
        side: Some(a.side),
    })
}

fn write_frames(x: &JointSignal, side: usize, dir: &Path, m: &mut RunManifest) -> Result<()> {
    create_dir(dir)?;
    for (k, f) in joint_to_frames(x, side)?.iter().enumerate() {
        let p = dir.join(format!("frame_{k:04}.pgm"));
        f.write_pgm(&p, PgmFormat::Binary)?;
        m.output(&p)?;
    }
    Ok(())
}

pub fn denoise(a: &DenoiseArgs) -> Result<()> {
    let mut m = manifest_for("denoise", a.seed, a);
    let input = load_denoise_input(a, &mut m)?;
    let fill = FillMode::from(a.fill);
    let mut cfg = DenoiseConfig::new(a.sigma, Mode::from(a.mode));
    cfg.tau = a.tau.unwrap_or(3.0 * a.sigma);
    cfg.rule = match a.rule {
        RuleArg::Hard => ThresholdRule::Hard,
        RuleArg::Soft => ThresholdRule::Soft,
    };
    cfg.protect_ll = !a.no_protect_ll;
    cfg.seed = a.seed;
    cfg.fill = fill;
    cfg.restrict = a.restrict.map_or(RestrictMode::default_for(fill), RestrictMode::from);
    cfg.validate()?;

    let noisy = add_gaussian_noise(&input.clean, a.sigma, a.seed)?;
    let modes = if a.compare { vec![Mode::Oversampled, Mode::Critical] } else { vec![cfg.mode] };
    let runs: Vec<(DenoiseConfig, DenoiseOutput)> = modes
        .par_iter()
        .map(|&mode| {
            let c = DenoiseConfig { mode, ..cfg };
            run_denoise(&noisy, &input.graph, &c).map(|o| (c, o))
        })
        .collect::<Result<_>>()?;

    create_dir(&a.out_dir)?;
    let mut lines = vec![MetricsRecord {
        mode: "noisy".into(),
        sigma: cfg.sigma,
        tau: cfg.tau,
        mse: mse(&input.clean, &noisy)?,
        snr_db: snr_db(&input.clean, &noisy)?,
        rho_vertex: 1.0,
        rho_time: 1.0,
        seed: cfg.seed,
    }
    .to_json_line()];
    let noisy_path = a.out_dir.join("noisy.csv");
    noisy.write_csv(&noisy_path)?;
    m.output(&noisy_path)?;
    if let Some(side) = input.side {
        write_frames(&noisy, side, &a.out_dir.join("noisy"), &mut m)?;
    }
    for (c, out) in &runs {
        lines.push(MetricsRecord::new(c, out, &input.clean)?.to_json_line());
        let name = c.mode.as_str();
        let p = a.out_dir.join(format!("denoised_{name}.csv"));
        out.signal.write_csv(&p)?;
        m.output(&p)?;
        if let Some(side) = input.side {
            write_frames(&out.signal, side, &a.out_dir.join(name), &mut m)?;
        }
    }
    let metrics_path = a.out_dir.join("metrics.jsonl");
    write_text(&metrics_path, &(lines.join("\n") + "\n"))?;
    m.output(&metrics_path)?;
    m.write(&a.out_dir.join("manifest.json"))?;
    for l in &lines {
        println!("{l}");
    }
    Ok(())
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct SeirsOverrides {
    beta: Option<f64>,
    te: Option<f64>,
    ti: Option<f64>,
    tr: Option<f64>,
    pop_per_node: Option<f64>,
    t_steps: Option<usize>,
    patient_zero: Option<Vec<usize>>,
}

impl SeirsOverrides {
    fn apply(self, p: &mut SeirsParams) {
        p.beta = self.beta.unwrap_or(p.beta);
        p.te = self.te.unwrap_or(p.te);
        p.ti = self.ti.unwrap_or(p.ti);
        p.tr = self.tr.unwrap_or(p.tr);
        p.pop_per_node = self.pop_per_node.unwrap_or(p.pop_per_node);
        p.t_steps = self.t_steps.unwrap_or(p.t_steps);
        if let Some(pz) = self.patient_zero {
            p.patient_zero = pz;
        }
    }
}

pub fn simulate(a: &SimulateArgs) -> Result<()> {
    let g = Graph::read_edge_list(&a.graph)?;
    let mut m = manifest_for("simulate", a.seed, a);
    m.input(&a.graph)?;
    let mut p = SeirsParams::preset(Scenario::from(a.preset), g.n(), a.seed);
    if let Some(path) = &a.config {
        m.input(path)?;
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let o: SeirsOverrides =
            toml::from_str(&text).map_err(|e| Error::InvalidParameter(format!("{}: {e}", path.display())))?;
        o.apply(&mut p);
    }
    SeirsOverrides {
        beta: a.beta,
        te: a.te,
        ti: a.ti,
        tr: a.tr,
        pop_per_node: a.pop_per_node,
        t_steps: a.steps,
        patient_zero: a.patient_zero.clone(),
    }
    .apply(&mut p);
    m.param("resolved", &p);

    let run = seirs_run(&g, &p)?;
    run.infectious.write_csv(&a.out)?;
    m.output(&a.out)?;
    m.write(&with_suffix(&a.out, "manifest.json"))?;
    let (n, t) = run.infectious.shape();
    println!(
        "wrote {n}x{t} infectious fractions to {} (patient zeros {:?}, max conservation error {:.1e}, clamp events {})",
        a.out.display(),
        p.patient_zero,
        run.max_conservation_error,
        run.final_state.clamp_events
    );
    Ok(())
}
