use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Bernoulli, Distribution, Gamma, LogNormal, StandardNormal, Uniform};

use crate::datamodel::{
    ChannelSet, DeviceSample, Frame, ProcedureRecord, ProcedureType, DEVICE_REGISTRY,
    DEVICE_SIGNALS, PROCEDURE_TYPES, TOOL_COUNT, USED_GAS_VOLUME,
};

use super::{ProcedureTrace, SynthError, SynthSpec, SynthTrace, MIN_DURATION};

/// Gamma shape of the relative phase lengths (higher = more regular).
const PHASE_SHAPE: f64 = 4.0;
const TOOL_BASE_RATE: f64 = 0.15;
const TOOL_ON_RATE: f64 = 0.85;
const TOOL_OFF_RATE: f64 = 0.05;
const IMAGE_PROGRESS_GAIN: f64 = 0.1;
/// Insufflated volume over a whole procedure at unit scale, litres.
const VOLUME_SPAN: f64 = 0.6 * 9501.0;
const VOLUME_SCALE_CV: f64 = 0.35;
/// Image weight of the standardized log volume scale (visible patient habitus).
const IMAGE_SCALE_GAIN: f64 = 1.0;
const VOLUME_OFFSET_MAX: f64 = 20.0;

/// Normalized device levels (or on-probabilities for binary signals) in
/// the first phase, the middle phases and the last phase. The used gas
/// volume row is unused; that signal is generated separately.
const STAGE_LEVELS: [[f64; 3]; DEVICE_SIGNALS] = [
    [0.60, 0.15, 0.05],
    [0.50, 0.30, 0.10],
    [0.03, 0.06, 0.02],
    [0.40, 0.50, 0.20],
    [0.0, 0.0, 0.0],
    [0.70, 0.65, 0.60],
    [0.90, 1.00, 0.40],
    [0.20, 0.90, 0.30],
    [0.80, 0.10, 0.70],
    [0.80, 0.10, 0.70],
    [0.50, 0.90, 0.30],
    [0.30, 0.01, 0.01],
    [0.30, 0.50, 0.30],
    [0.40, 0.60, 0.40],
];

/// A generated dataset and its hidden ground truth.
#[derive(Debug, Clone, PartialEq)]
pub struct SynthOutput {
    pub records: Vec<ProcedureRecord>,
    pub trace: SynthTrace,
}

/// Quantities shared by all procedures of a dataset.
struct Shared {
    phase_embeddings: Vec<Vec<f64>>,
    type_embeddings: Vec<Vec<f64>>,
    progress_direction: Vec<f64>,
    scale_direction: Vec<f64>,
    phase_rates: Vec<f64>,
}

impl Shared {
    fn new(spec: &SynthSpec) -> Self {
        let mut rng = stream(spec.seed, u64::MAX);
        let mut gauss = |n: usize| -> Vec<f64> {
            (0..n)
                .map(|_| rng.sample::<f64, _>(StandardNormal))
                .collect()
        };
        let phase_embeddings = (0..spec.phases_per_type)
            .map(|_| gauss(spec.d_img))
            .collect();
        let progress_direction = gauss(spec.d_img);
        let type_embeddings = (0..PROCEDURE_TYPES).map(|_| gauss(spec.d_img)).collect();
        let scale_direction = gauss(spec.d_img);
        // Fixed, phase-dependent insufflation rates in [0.6, 1.4].
        let phase_rates = (0..spec.phases_per_type)
            .map(|k| 1.0 + 0.8 * ((k as f64 * 0.618_033_988_75).fract() - 0.5))
            .collect();
        Self {
            phase_embeddings,
            type_embeddings,
            progress_direction,
            scale_direction,
            phase_rates,
        }
    }
}

fn stream(seed: u64, k: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(k);
    rng
}

fn lognormal_mean_cv(mean: f64, cv: f64) -> LogNormal<f64> {
    let s2 = (1.0 + cv * cv).ln();
    LogNormal::new(mean.ln() - s2 / 2.0, s2.sqrt()).expect("valid log-normal parameters")
}

/// Last frame of every phase; strictly increasing, final entry `n`.
fn phase_ends<R: Rng>(n: usize, phases: usize, rng: &mut R) -> Vec<usize> {
    let gamma = Gamma::new(PHASE_SHAPE, 1.0).expect("valid gamma parameters");
    let w: Vec<f64> = (0..phases).map(|_| gamma.sample(rng)).collect();
    let total: f64 = w.iter().sum();
    let mut ends = Vec::with_capacity(phases);
    let mut acc = 0.0;
    let mut prev = 0;
    for (k, wk) in w.iter().enumerate() {
        acc += wk;
        let remaining = phases - 1 - k;
        let end = ((acc / total) * n as f64).round() as usize;
        let end = end.max(prev + 1).min(n - remaining);
        ends.push(end);
        prev = end;
    }
    *ends.last_mut().expect("at least one phase") = n;
    ends
}

fn stage_of(phase: usize, phases: usize) -> usize {
    if phase == 0 {
        0
    } else if phase + 1 == phases {
        2
    } else {
        1
    }
}

pub fn generate(spec: &SynthSpec) -> Result<SynthOutput, SynthError> {
    spec.validate()?;
    let shared = Shared::new(spec);
    let types: Vec<(u8, f64)> = spec
        .type_mix
        .iter()
        .filter(|(_, &p)| p > 0.0)
        .map(|(&t, &p)| (t, p))
        .collect();
    let mut records = Vec::with_capacity(spec.n_procedures);
    let mut traces = Vec::with_capacity(spec.n_procedures);
    for k in 0..spec.n_procedures {
        let (record, trace) = generate_one(spec, &shared, &types, k)?;
        records.push(record);
        traces.push(trace);
    }
    Ok(SynthOutput {
        records,
        trace: SynthTrace::new(spec.seed, traces),
    })
}

fn generate_one(
    spec: &SynthSpec,
    shared: &Shared,
    types: &[(u8, f64)],
    k: usize,
) -> Result<(ProcedureRecord, ProcedureTrace), SynthError> {
    let mut rng = stream(spec.seed, k as u64);
    let alpha = spec.modality_informativeness;
    let phases = spec.phases_per_type;

    // Type and duration.
    let u: f64 = rng.random();
    let mut acc = 0.0;
    let mut ptype = types[types.len() - 1].0;
    for &(t, p) in types {
        acc += p;
        if u < acc {
            ptype = t;
            break;
        }
    }
    let mean = spec.mean_duration[&ptype];
    let type_index = usize::from(ptype - 1);
    let n = if spec.duration_cv > 0.0 {
        lognormal_mean_cv(mean, spec.duration_cv).sample(&mut rng)
    } else {
        mean
    };
    let n = n.round().max(MIN_DURATION) as usize;
    let ends = phase_ends(n, phases, &mut rng);
    let phase_of: Vec<usize> = {
        let mut v = Vec::with_capacity(n);
        let mut start = 0;
        for (p, &e) in ends.iter().enumerate() {
            v.extend(std::iter::repeat_n(p, e - start));
            start = e;
        }
        v
    };

    // Monotone cumulative insufflation, normalized to end at 1.
    let mut cum = Vec::with_capacity(n);
    let mut total = 0.0;
    for &p in &phase_of {
        total += shared.phase_rates[p];
        cum.push(total);
    }
    cum.iter_mut().for_each(|c| *c /= total);
    let volume_scale = lognormal_mean_cv(1.0, VOLUME_SCALE_CV).sample(&mut rng);
    let scale_z = {
        let s2 = (1.0 + VOLUME_SCALE_CV * VOLUME_SCALE_CV).ln();
        (volume_scale.ln() + s2 / 2.0) / s2.sqrt()
    };
    let volume_offset = rng.sample(Uniform::new(0.0, VOLUME_OFFSET_MAX).expect("valid range"));

    let global: Vec<f64> = STAGE_LEVELS
        .iter()
        .map(|l| l.iter().sum::<f64>() / 3.0)
        .collect();
    let ch = spec.channels;
    let mut frames = Vec::with_capacity(n);
    for t in 1..=n {
        let phase = phase_of[t - 1];
        let progress = t as f64 / n as f64;
        let stage = stage_of(phase, phases);

        let device = if ch.device {
            let mut raw = vec![0.0; DEVICE_SIGNALS];
            for (s, spec_s) in DEVICE_REGISTRY.iter().enumerate() {
                let level =
                    (1.0 - alpha.device) * global[s] + alpha.device * STAGE_LEVELS[s][stage];
                raw[s] = if s == USED_GAS_VOLUME {
                    (volume_offset + alpha.device * volume_scale * VOLUME_SPAN * cum[t - 1])
                        .min(spec_s.range_max)
                } else if spec_s.kind == crate::datamodel::SignalKind::Binary {
                    let on = Bernoulli::new(level.clamp(0.0, 1.0)).expect("probability");
                    if on.sample(&mut rng) {
                        1.0
                    } else {
                        0.0
                    }
                } else {
                    let noise: f64 = rng.sample(StandardNormal);
                    let v = (level + spec.noise_sigma * noise).clamp(0.0, 1.0);
                    spec_s.range_min + v * (spec_s.range_max - spec_s.range_min)
                };
            }
            Some(DeviceSample::from_raw(raw)?)
        } else {
            None
        };

        let tools = ch.tools.then(|| {
            (0..TOOL_COUNT)
                .map(|j| {
                    let phase_rate = if j % phases == phase {
                        TOOL_ON_RATE
                    } else {
                        TOOL_OFF_RATE
                    };
                    let rate = (1.0 - alpha.tools) * TOOL_BASE_RATE + alpha.tools * phase_rate;
                    if rng.random::<f64>() < rate {
                        1.0
                    } else {
                        0.0
                    }
                })
                .collect()
        });

        let image = ch.image.then(|| {
            // Phases are type specific: the scene embedding combines the
            // phase and the procedure type. The scene also shows the
            // patient-dependent volume scale, which the device channel
            // alone cannot separate from progress.
            let e = &shared.phase_embeddings[phase];
            let te = &shared.type_embeddings[type_index];
            (0..spec.d_img)
                .map(|d| {
                    let signal = e[d]
                        + te[d]
                        + IMAGE_PROGRESS_GAIN * progress * shared.progress_direction[d]
                        + IMAGE_SCALE_GAIN * scale_z * shared.scale_direction[d];
                    let noise: f64 = rng.sample(StandardNormal);
                    alpha.image * signal + spec.noise_sigma * noise
                })
                .collect()
        });

        frames.push(Frame {
            t,
            device,
            tools,
            image,
        });
    }

    let channels = ChannelSet {
        device: ch.device,
        tools: ch.tools,
        image: ch.image,
        d_img: if ch.image { spec.d_img } else { 0 },
    };
    let id = format!("synth{k:04}");
    let ptype = ProcedureType::new(ptype)?;
    let record = ProcedureRecord::new(id.clone(), ptype, channels, frames)?;
    let trace = ProcedureTrace {
        id,
        ptype: ptype.id(),
        n,
        phase_ends: ends,
        volume_scale,
    };
    Ok((record, trace))
}
