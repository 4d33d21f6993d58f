//! Seeded synthetic viewing studies with planted effects.
//!
//! Every value produced here is SYNTHETIC. The generator exists for examples,
//! tests and smoke runs of the pipeline when the real study logs are absent;
//! its numbers say nothing about real viewers.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::dataset::{
    Activity, Dataset, Gender, Ladder, Participant, ResolutionEvent, Study, VideoMeta,
    ViewingSession,
};
use crate::error::Result;
use crate::video::{classify, LumaFrame, SiTiThresholds, VideoSequence};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SynthConfig {
    pub seed: u64,
    pub viewers_study1: usize,
    pub viewers_study2: usize,
    /// SD of the per-viewer intercept, in lines.
    pub viewer_sd: f64,
    /// SD of the per-session noise, in lines.
    pub noise_sd: f64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            seed: 7,
            viewers_study1: 22,
            viewers_study2: 23,
            viewer_sd: 60.0,
            noise_sd: 90.0,
        }
    }
}

const DEVICES: [&str; 3] = ["phone-a", "phone-b", "phone-c"];

fn activity_effect(a: Activity) -> f64 {
    match a {
        Activity::Still => 0.0,
        Activity::Walking => -110.0,
        Activity::Running => -160.0,
        Activity::InVehicle => -80.0,
    }
}

/// Offsets by dominant-trait index (E, A, C, N, O).
const TRAIT_EFFECT: [f64; 5] = [20.0, -30.0, 0.0, -60.0, 60.0];

fn study_videos(study: Study, rng: &mut ChaCha8Rng) -> Result<Vec<VideoMeta>> {
    let thresholds = SiTiThresholds::default();
    (0..12)
        .map(|j| {
            let (si, ti) = match study {
                Study::One => (rng.gen_range(25.0..150.0), rng.gen_range(3.0..45.0)),
                // cycle through the four corner categories
                Study::Two => {
                    let si = if j % 4 < 2 {
                        rng.gen_range(18.0..39.0)
                    } else {
                        rng.gen_range(112.0..160.0)
                    };
                    let ti = if j % 2 == 0 {
                        rng.gen_range(2.0..9.5)
                    } else {
                        rng.gen_range(26.0..48.0)
                    };
                    (si, ti)
                }
            };
            let category = classify(si, ti, &thresholds)?.label.to_string();
            Ok(VideoMeta {
                id: format!("s{}v{:02}", study.number(), j + 1),
                study,
                si,
                ti,
                category,
            })
        })
        .collect()
}

/// Builds both studies: 12 one-minute videos each; study 1 uses four activity
/// states with three videos per state, study 2 three states with one video of
/// each SI/TI corner category per state.
pub fn synthetic_dataset(cfg: &SynthConfig) -> Result<Dataset> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let viewer_dist = Normal::new(0.0, cfg.viewer_sd.max(0.0)).expect("finite sd");
    let noise_dist = Normal::new(0.0, cfg.noise_sd.max(0.0)).expect("finite sd");
    let mut participants = Vec::new();
    let mut videos = Vec::new();
    let mut sessions = Vec::new();

    for (study, n_viewers) in [
        (Study::One, cfg.viewers_study1),
        (Study::Two, cfg.viewers_study2),
    ] {
        let vids = study_videos(study, &mut rng)?;
        let ladder = Ladder::for_study(study);
        let states: &[Activity] = match study {
            Study::One => &Activity::ALL,
            Study::Two => &Activity::ALL[..3],
        };
        let per_state = vids.len() / states.len();
        for i in 0..n_viewers {
            let bfi_answers =
                (study == Study::Two).then(|| std::array::from_fn(|_| rng.gen_range(1..=5u8)));
            let p = Participant {
                id: format!("s{}p{:02}", study.number(), i + 1),
                study,
                gender: if rng.gen_bool(0.55) {
                    Gender::Male
                } else {
                    Gender::Female
                },
                age: rng.gen_range(19..=30),
                glasses: rng.gen_bool(0.3),
                device: DEVICES[rng.gen_range(0..DEVICES.len())].into(),
                bfi_answers,
            };
            let intercept = viewer_dist.sample(&mut rng);
            participants.push(p);
            let p = participants.last().expect("just pushed");
            // personality offset is applied after scoring, below
            for (j, v) in vids.iter().enumerate() {
                let activity = states[(j / per_state + i) % states.len()];
                let mut latent =
                    700.0 + activity_effect(activity) + intercept + noise_dist.sample(&mut rng);
                latent += if activity == Activity::Running {
                    0.8
                } else {
                    0.3
                } * (v.si - 70.0);
                if activity == Activity::Walking {
                    latent += 3.0 * (v.ti - 15.0);
                }
                if p.gender == Gender::Male {
                    latent += 0.5 * (v.si - 70.0);
                }
                sessions.push((
                    latent,
                    ViewingSession {
                        participant_id: p.id.clone(),
                        video_id: v.id.clone(),
                        study,
                        activity,
                        start_resolution: ladder.min(),
                        events: Vec::new(),
                    },
                ));
            }
        }
        videos.extend(vids);
    }

    // dominant traits need the whole study-2 sample, so score once and shift
    let draft = Dataset::from_parts(participants.clone(), videos.clone(), Vec::new())?;
    let profiles = draft.trait_profiles(Study::Two);
    let sessions = sessions
        .into_iter()
        .map(|(mut latent, mut s)| {
            if let Some(t) = profiles.get(&s.participant_id) {
                latent += TRAIT_EFFECT[t.dominant.index()];
            }
            let ladder = Ladder::for_study(s.study);
            let target = ladder.ceil(latent);
            let mut t_ms = 0u64;
            s.events = ladder
                .values()
                .iter()
                .copied()
                .filter(|&r| r > s.start_resolution && r <= target)
                .map(|r| {
                    t_ms += rng.gen_range(2_000..10_000);
                    ResolutionEvent {
                        t_ms,
                        new_resolution: r,
                    }
                })
                .collect();
            s
        })
        .collect();
    Dataset::from_parts(participants, videos, sessions)
}

/// A bright vertical bar moving `step` pixels per frame over a dark background.
pub fn moving_bar(
    width: usize,
    height: usize,
    frames: usize,
    bar_width: usize,
    step: usize,
) -> Result<VideoSequence> {
    let seq = (0..frames)
        .map(|f| {
            let left = (f * step) % width.max(1);
            LumaFrame::from_fn(width, height, |x, _| {
                let inside = (x + width - left) % width < bar_width;
                if inside {
                    235
                } else {
                    16
                }
            })
        })
        .collect::<Result<Vec<_>>>()?;
    VideoSequence::new(seq, 30.0)
}
