//! Shot-level Monte Carlo: photon numbers, phase noise, loss, analysis and
//! detection, followed by postselection on one control and `n_targets` target
//! clicks.

use std::collections::BTreeMap;

use rand::Rng;
use rand_distr::{Distribution, Poisson};
use rayon::prelude::*;

use crate::error::Result;
use crate::gate::PhotonAmplitudes;
use crate::linalg::C64;
use crate::rng;
use crate::sim::config::{SimConfig, SourceMode};
use crate::sim::counts::{CellCounts, CountsTable};
use crate::sim::plan::{AnalysisBasis, PlanCell};

/// Shots per RNG partition.
pub const CHUNK_SHOTS: u64 = 8192;

/// Joint states larger than this many photons are rejected outright.
const MAX_JOINT_PHOTONS: usize = 16;

/// Runs every plan cell for `config.shots` invocations.
pub fn run(config: &SimConfig) -> Result<CountsTable> {
    config.validate()?;
    let amps = config.gate.photon_amplitudes()?;
    let chunks = config.shots.div_ceil(CHUNK_SHOTS);
    let jobs: Vec<(usize, u64)> =
        (0..config.plan.len()).flat_map(|c| (0..chunks).map(move |k| (c, k))).collect();
    let partials: Vec<(usize, CellCounts)> = jobs
        .par_iter()
        .map(|&(ci, k)| {
            let shots = CHUNK_SHOTS.min(config.shots - k * CHUNK_SHOTS);
            let mut r = rng::stream(config.seed, &[ci as u64, k]);
            (ci, run_chunk(config, &amps, &config.plan.cells[ci], shots, &mut r))
        })
        .collect();
    let mut per_cell: BTreeMap<usize, CellCounts> = BTreeMap::new();
    for (ci, part) in partials {
        per_cell.entry(ci).or_default().merge(&part);
    }
    let mut table = CountsTable::new();
    for (ci, cell) in per_cell {
        let pc = &config.plan.cells[ci];
        let (input, setting) = (pc.input.to_string(), pc.setting.to_string());
        table.add_invocations(&input, &setting, cell.invocations);
        for (o, n) in &cell.outcomes {
            table.add_count(&input, &setting, o, *n);
        }
    }
    Ok(table)
}

/// Per-port click numbers: control (+, −) and target (+, −).
#[derive(Debug, Default, Clone, Copy)]
struct Clicks {
    control: [u32; 2],
    target: [u32; 2],
}

struct Workspace {
    psi: Vec<C64>,
    scratch: Vec<C64>,
    probs: Vec<f64>,
    beta_t: Vec<f64>,
}

fn run_chunk<R: Rng>(config: &SimConfig, amps: &PhotonAmplitudes, cell: &PlanCell, shots: u64, r: &mut R) -> CellCounts {
    let mut tally: BTreeMap<(u8, u32), u64> = BTreeMap::new();
    let mut ws = Workspace { psi: Vec::new(), scratch: Vec::new(), probs: Vec::new(), beta_t: Vec::new() };
    let (pc, pt) = match config.source {
        SourceMode::ExactlyOne => (None, None),
        SourceMode::Poissonian { mean_control, mean_target } => {
            (Poisson::new(mean_control).ok(), Poisson::new(mean_target).ok())
        }
    };
    for _ in 0..shots {
        let (n_c, n_t) = match config.source {
            SourceMode::ExactlyOne => (1, config.n_targets),
            SourceMode::Poissonian { .. } => (
                pc.map_or(0, |d| d.sample(r) as usize),
                pt.map_or(0, |d| d.sample(r) as usize),
            ),
        };
        if let Some(clicks) = shot(config, amps, cell, n_c, n_t, &mut ws, r) {
            if clicks.control[0] + clicks.control[1] == 1
                && (clicks.target[0] + clicks.target[1]) as usize == config.n_targets
            {
                let c = if clicks.control[0] == 1 { 0u8 } else { 1u8 };
                *tally.entry((c, clicks.target[1])).or_insert(0) += 1;
            }
        }
    }
    let mut out = CellCounts { invocations: shots, outcomes: BTreeMap::new() };
    for ((c, minus), n) in tally {
        let mut s = String::with_capacity(config.n_targets + 1);
        s.push(if c == 0 { '+' } else { '-' });
        let plus = config.n_targets - minus as usize;
        s.extend(std::iter::repeat_n('+', plus));
        s.extend(std::iter::repeat_n('-', minus as usize));
        out.outcomes.insert(s, n);
    }
    out
}

fn bit(x: usize, m: usize, p: usize) -> usize {
    (x >> (m - 1 - p)) & 1
}

/// Samples one survive/lose branch of a diagonal amplitude map on photon `p`,
/// with survival amplitude `s(x)`. Returns whether the photon survived.
fn sample_loss<R: Rng, F: Fn(usize) -> f64>(psi: &mut [C64], m: usize, p: usize, s: F, r: &mut R) -> bool {
    let mut w = [0.0f64; 3];
    for (x, a) in psi.iter().enumerate() {
        let n = a.norm_sqr();
        let sx = s(x);
        w[0] += n * sx * sx;
        w[1 + bit(x, m, p)] += n * (1.0 - sx * sx);
    }
    let total = w[0] + w[1] + w[2];
    let u = r.random::<f64>() * total;
    let branch = if u < w[0] { 0 } else if u < w[0] + w[1] { 1 } else { 2 };
    let norm = w[branch].sqrt();
    for (x, a) in psi.iter_mut().enumerate() {
        let sx = s(x);
        let f = match branch {
            0 => sx,
            b if bit(x, m, p) == b - 1 => (1.0 - sx * sx).max(0.0).sqrt(),
            _ => 0.0,
        };
        *a *= if norm > 0.0 { f / norm } else { 0.0 };
    }
    branch == 0
}

/// Applies a 2×2 matrix (row-major) to photon `p`.
fn apply_single(psi: &mut [C64], m: usize, p: usize, u: [[C64; 2]; 2]) {
    let stride = 1usize << (m - 1 - p);
    for x in 0..psi.len() {
        if x & stride == 0 {
            let (a, b) = (psi[x], psi[x | stride]);
            psi[x] = u[0][0] * a + u[0][1] * b;
            psi[x | stride] = u[1][0] * a + u[1][1] * b;
        }
    }
}

/// Rows are the conjugated analysis states, so the result holds outcome amplitudes.
fn analyzer(basis: AnalysisBasis) -> [[C64; 2]; 2] {
    let [p, q] = basis.states();
    [[p[0].conj(), p[1].conj()], [q[0].conj(), q[1].conj()]]
}

fn rotation() -> [[C64; 2]; 2] {
    let h = C64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
    [[h, -h], [h, h]]
}

fn sample_index<R: Rng>(probs: &[f64], r: &mut R) -> usize {
    let total: f64 = probs.iter().sum();
    let mut u = r.random::<f64>() * total;
    for (i, &p) in probs.iter().enumerate() {
        if u < p {
            return i;
        }
        u -= p;
    }
    probs.iter().rposition(|&p| p > 0.0).unwrap_or(0)
}

fn shot<R: Rng>(
    config: &SimConfig,
    amps: &PhotonAmplitudes,
    cell: &PlanCell,
    n_c: usize,
    n_t: usize,
    ws: &mut Workspace,
    r: &mut R,
) -> Option<Clicks> {
    let has_control = n_c >= 1;
    let m = usize::from(has_control) + n_t;
    if m > MAX_JOINT_PHOTONS {
        return None;
    }
    let noise = config.phase_noise;
    let beta_c = noise.sample(config.gate.v_c, r);
    ws.beta_t.clear();
    if config.shared_target_phase {
        let b = noise.sample(config.gate.v_t, r);
        ws.beta_t.resize(n_t, b);
    } else {
        for _ in 0..n_t {
            let b = noise.sample(config.gate.v_t, r);
            ws.beta_t.push(b);
        }
    }
    let ctrl_in = cell.input.0[0].amplitudes();
    let tgt_in = cell.input.0[1].amplitudes();
    let eta_d = config.detection_efficiency;
    let mut clicks = Clicks::default();

    if m > 0 {
        let first_t = usize::from(has_control);
        let dim = 1usize << m;
        ws.psi.clear();
        ws.psi.extend((0..dim).map(|x| {
            let mut a = C64::new(1.0, 0.0);
            for p in 0..m {
                let b = bit(x, m, p);
                a *= if p < first_t { ctrl_in[b] } else { tgt_in[b] };
            }
            a
        }));
        // Target amplitude in V for a given joint index; EIT when no control.
        let target_v = |x: usize| if has_control { amps.target_v[bit(x, m, 0)] } else { amps.target_v[1] };
        let mut alive = vec![true; m];
        if has_control {
            alive[0] = sample_loss(&mut ws.psi, m, 0, |x| amps.control[bit(x, m, 0)], r);
        }
        for p in first_t..m {
            alive[p] = sample_loss(&mut ws.psi, m, p, |x| if bit(x, m, p) == 0 { 1.0 } else { target_v(x) }, r);
        }
        for (x, a) in ws.psi.iter_mut().enumerate() {
            let mut phase = 0.0;
            if has_control && bit(x, m, 0) == 1 {
                phase += beta_c;
            }
            for p in first_t..m {
                if bit(x, m, p) == 1 {
                    phase += ws.beta_t[p - first_t];
                }
            }
            *a *= C64::from_polar(1.0, phase);
        }
        for p in 0..m {
            if p >= first_t && config.target_rotation {
                apply_single(&mut ws.psi, m, p, rotation());
            }
            let setting_index = if p < first_t { 0 } else { 1 };
            let basis = if alive[p] { cell.setting.basis(setting_index) } else { AnalysisBasis::HV };
            apply_single(&mut ws.psi, m, p, analyzer(basis));
        }
        ws.probs.clear();
        ws.probs.extend(ws.psi.iter().map(|a| a.norm_sqr()));
        let outcome = sample_index(&ws.probs, r);
        for p in 0..m {
            if alive[p] && r.random::<f64>() < eta_d {
                let o = bit(outcome, m, p);
                if p < first_t {
                    clicks.control[o] += 1;
                } else {
                    clicks.target[o] += 1;
                }
            }
        }
    }

    // Extra control photons: independent single-photon trajectories.
    for _ in 1..n_c.max(1) {
        ws.scratch.clear();
        ws.scratch.extend_from_slice(&ctrl_in);
        if !sample_loss(&mut ws.scratch, 1, 0, |x| amps.control[x], r) {
            continue;
        }
        ws.scratch[1] *= C64::from_polar(1.0, beta_c);
        apply_single(&mut ws.scratch, 1, 0, analyzer(cell.setting.basis(0)));
        let probs = [ws.scratch[0].norm_sqr(), ws.scratch[1].norm_sqr()];
        let o = sample_index(&probs, r);
        if r.random::<f64>() < eta_d {
            clicks.control[o] += 1;
        }
    }

    if config.dark_count_rate > 0.0 {
        let d = Poisson::new(config.dark_count_rate).expect("positive rate");
        for port in 0..4 {
            let k = d.sample(r) as u32;
            if port < 2 {
                clicks.control[port] += k;
            } else {
                clicks.target[port - 2] += k;
            }
        }
    }
    Some(clicks)
}
