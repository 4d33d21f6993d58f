//! Canonical CSV schema for study data.
//!
//! ```text
//! participants.csv  id,study,gender,age,glasses,device,bfi1..bfi10
//! videos.csv        id,study,si,ti,category
//! sessions.csv      participant_id,video_id,activity,start_resolution
//! events.csv        participant_id,video_id,t_ms,new_resolution
//! ```
//!
//! Other layouts are adapted by renaming headers through [`HeaderAliases`];
//! values are also accepted in a few common spellings (`720p`, `yes`/`no`,
//! `in vehicle`).

use std::collections::HashMap;
use std::fs::File;
use std::io::Read;
use std::path::Path;

use csv::StringRecord;

use super::{Dataset, Ladder, Participant, ResolutionEvent, Study, VideoMeta, ViewingSession};
use crate::error::{Error, Result};

pub const PARTICIPANTS_FILE: &str = "participants.csv";
pub const VIDEOS_FILE: &str = "videos.csv";
pub const SESSIONS_FILE: &str = "sessions.csv";
pub const EVENTS_FILE: &str = "events.csv";

/// Maps foreign column names onto canonical ones (case-insensitive).
#[derive(Debug, Clone, Default)]
pub struct HeaderAliases(HashMap<String, String>);

impl HeaderAliases {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with(mut self, alias: &str, canonical: &str) -> Self {
        self.0
            .insert(alias.trim().to_ascii_lowercase(), canonical.to_string());
        self
    }

    /// Parses `alias=canonical` lines; `#` starts a comment.
    pub fn parse(text: &str) -> Result<Self> {
        let mut out = Self::new();
        for line in text.lines() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (a, c) = line.split_once('=').ok_or_else(|| {
                Error::invalid(format!("alias line needs alias=canonical: {line:?}"))
            })?;
            out = out.with(a, c.trim());
        }
        Ok(out)
    }

    fn canonical(&self, header: &str) -> String {
        let key = header.trim().to_ascii_lowercase();
        self.0.get(&key).cloned().unwrap_or(key)
    }
}

struct Table {
    file: &'static str,
    cols: HashMap<String, usize>,
    rows: Vec<StringRecord>,
}

impl Table {
    fn read(
        file: &'static str,
        reader: impl Read,
        aliases: &HeaderAliases,
        required: &[&str],
    ) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .trim(csv::Trim::All)
            .from_reader(reader);
        let headers = rdr
            .headers()
            .map_err(|e| ingest_err(file, 0, format!("unreadable header: {e}")))?;
        let cols: HashMap<String, usize> = headers
            .iter()
            .enumerate()
            .map(|(i, h)| (aliases.canonical(h), i))
            .collect();
        if let Some(missing) = required.iter().find(|c| !cols.contains_key(**c)) {
            return Err(ingest_err(file, 0, format!("missing column {missing:?}")));
        }
        let mut rows = Vec::new();
        for (i, rec) in rdr.records().enumerate() {
            rows.push(rec.map_err(|e| ingest_err(file, i + 1, e.to_string()))?);
        }
        Ok(Self { file, cols, rows })
    }

    fn get<'a>(&self, rec: &'a StringRecord, row: usize, col: &str) -> Result<&'a str> {
        self.cols
            .get(col)
            .and_then(|&i| rec.get(i))
            .ok_or_else(|| ingest_err(self.file, row, format!("missing field {col:?}")))
    }

    fn opt<'a>(&self, rec: &'a StringRecord, col: &str) -> Option<&'a str> {
        self.cols
            .get(col)
            .and_then(|&i| rec.get(i))
            .filter(|s| !s.is_empty())
    }

    fn parse<T: std::str::FromStr>(&self, rec: &StringRecord, row: usize, col: &str) -> Result<T> {
        let raw = self.get(rec, row, col)?;
        raw.parse()
            .map_err(|_| ingest_err(self.file, row, format!("cannot parse {col} value {raw:?}")))
    }

    fn with_row<T>(&self, row: usize, r: Result<T>) -> Result<T> {
        r.map_err(|e| match e {
            Error::Invalid(m) => ingest_err(self.file, row, m),
            other => other,
        })
    }
}

fn ingest_err(file: &str, row: usize, message: impl Into<String>) -> Error {
    Error::Ingest {
        file: file.to_string(),
        row,
        message: message.into(),
    }
}

fn parse_resolution(s: &str) -> Option<u32> {
    s.trim().trim_end_matches(['p', 'P']).parse().ok()
}

fn parse_bool(s: &str) -> Option<bool> {
    match s.trim().to_ascii_lowercase().as_str() {
        "true" | "1" | "yes" | "y" => Some(true),
        "false" | "0" | "no" | "n" => Some(false),
        _ => None,
    }
}

/// Reads the four canonical tables. `events` may be omitted when no session
/// changed resolution.
pub fn ingest_readers(
    participants: impl Read,
    videos: impl Read,
    sessions: impl Read,
    events: Option<impl Read>,
    aliases: &HeaderAliases,
) -> Result<Dataset> {
    let pt = Table::read(
        PARTICIPANTS_FILE,
        participants,
        aliases,
        &["id", "study", "gender", "age", "glasses", "device"],
    )?;
    let mut ps = Vec::with_capacity(pt.rows.len());
    for (i, rec) in pt.rows.iter().enumerate() {
        let row = i + 1;
        let glasses_raw = pt.get(rec, row, "glasses")?;
        let glasses = parse_bool(glasses_raw).ok_or_else(|| {
            ingest_err(
                pt.file,
                row,
                format!("cannot parse glasses value {glasses_raw:?}"),
            )
        })?;
        let answers: Vec<Option<&str>> =
            (1..=10).map(|k| pt.opt(rec, &format!("bfi{k}"))).collect();
        let bfi_answers = if answers.iter().all(Option::is_none) {
            None
        } else {
            let mut out = [0u8; 10];
            for (k, a) in answers.iter().enumerate() {
                let a = a.ok_or_else(|| {
                    ingest_err(
                        pt.file,
                        row,
                        format!("bfi{} missing; BFI-10 needs all 10 answers", k + 1),
                    )
                })?;
                out[k] = a
                    .parse()
                    .ok()
                    .filter(|v| (1..=5).contains(v))
                    .ok_or_else(|| {
                        ingest_err(
                            pt.file,
                            row,
                            format!("bfi{} = {a:?}, expected 1..=5", k + 1),
                        )
                    })?;
            }
            Some(out)
        };
        ps.push(Participant {
            id: pt.get(rec, row, "id")?.to_string(),
            study: pt.with_row(row, pt.get(rec, row, "study")?.parse())?,
            gender: pt.with_row(row, pt.get(rec, row, "gender")?.parse())?,
            age: pt.parse(rec, row, "age")?,
            glasses,
            device: pt.get(rec, row, "device")?.to_string(),
            bfi_answers,
        });
    }
    let study_of: HashMap<&str, Study> = ps.iter().map(|p| (p.id.as_str(), p.study)).collect();

    let vt = Table::read(VIDEOS_FILE, videos, aliases, &["id", "study", "si", "ti"])?;
    let mut vs = Vec::with_capacity(vt.rows.len());
    for (i, rec) in vt.rows.iter().enumerate() {
        let row = i + 1;
        vs.push(VideoMeta {
            id: vt.get(rec, row, "id")?.to_string(),
            study: vt.with_row(row, vt.get(rec, row, "study")?.parse())?,
            si: vt.parse(rec, row, "si")?,
            ti: vt.parse(rec, row, "ti")?,
            category: vt.opt(rec, "category").unwrap_or("").to_string(),
        });
    }

    let st = Table::read(
        SESSIONS_FILE,
        sessions,
        aliases,
        &["participant_id", "video_id", "activity", "start_resolution"],
    )?;
    let mut ss = Vec::with_capacity(st.rows.len());
    let mut session_index: HashMap<(String, String), usize> = HashMap::new();
    for (i, rec) in st.rows.iter().enumerate() {
        let row = i + 1;
        let participant_id = st.get(rec, row, "participant_id")?.to_string();
        let study = *study_of.get(participant_id.as_str()).ok_or_else(|| {
            ingest_err(
                st.file,
                row,
                format!("unknown participant id {participant_id:?}"),
            )
        })?;
        let start_raw = st.get(rec, row, "start_resolution")?;
        let start_resolution = parse_resolution(start_raw).ok_or_else(|| {
            ingest_err(
                st.file,
                row,
                format!("cannot parse start_resolution {start_raw:?}"),
            )
        })?;
        let video_id = st.get(rec, row, "video_id")?.to_string();
        session_index.insert((participant_id.clone(), video_id.clone()), ss.len());
        ss.push(ViewingSession {
            participant_id,
            video_id,
            study,
            activity: st.with_row(row, st.get(rec, row, "activity")?.parse())?,
            start_resolution,
            events: Vec::new(),
        });
    }

    if let Some(events) = events {
        let et = Table::read(
            EVENTS_FILE,
            events,
            aliases,
            &["participant_id", "video_id", "t_ms", "new_resolution"],
        )?;
        for (i, rec) in et.rows.iter().enumerate() {
            let row = i + 1;
            let key = (
                et.get(rec, row, "participant_id")?.to_string(),
                et.get(rec, row, "video_id")?.to_string(),
            );
            let &si = session_index.get(&key).ok_or_else(|| {
                ingest_err(
                    et.file,
                    row,
                    format!("no session for participant {:?} video {:?}", key.0, key.1),
                )
            })?;
            let t_ms: u64 = et.parse(rec, row, "t_ms")?;
            let res_raw = et.get(rec, row, "new_resolution")?;
            let new_resolution = parse_resolution(res_raw).ok_or_else(|| {
                ingest_err(
                    et.file,
                    row,
                    format!("cannot parse new_resolution {res_raw:?}"),
                )
            })?;
            let session = &mut ss[si];
            let ladder = Ladder::for_study(session.study);
            if !ladder.contains(new_resolution) {
                return Err(ingest_err(
                    et.file,
                    row,
                    format!(
                        "resolution {new_resolution} not in study {} ladder {:?}",
                        session.study,
                        ladder.values()
                    ),
                ));
            }
            if let Some(prev) = session.events.last() {
                if t_ms <= prev.t_ms {
                    return Err(ingest_err(
                        et.file,
                        row,
                        format!(
                            "event times not strictly increasing ({} then {t_ms})",
                            prev.t_ms
                        ),
                    ));
                }
            }
            session.events.push(ResolutionEvent {
                t_ms,
                new_resolution,
            });
        }
    }

    Dataset::from_parts(ps, vs, ss).map_err(|e| match e {
        Error::Ingest { file, row, message } => {
            let file = match file.as_str() {
                "participants" => PARTICIPANTS_FILE,
                "videos" => VIDEOS_FILE,
                "sessions" => SESSIONS_FILE,
                _ => return Error::Ingest { file, row, message },
            };
            Error::Ingest {
                file: file.to_string(),
                row,
                message,
            }
        }
        other => other,
    })
}

/// Reads `participants.csv`, `videos.csv`, `sessions.csv` and (if present)
/// `events.csv` from `dir`.
pub fn ingest_dir(dir: &Path, aliases: &HeaderAliases) -> Result<Dataset> {
    let open = |name: &str| {
        File::open(dir.join(name)).map_err(|e| {
            Error::Io(std::io::Error::new(
                e.kind(),
                format!("{}: {e}", dir.join(name).display()),
            ))
        })
    };
    let events_path = dir.join(EVENTS_FILE);
    let events = if events_path.exists() {
        Some(open(EVENTS_FILE)?)
    } else {
        None
    };
    ingest_readers(
        open(PARTICIPANTS_FILE)?,
        open(VIDEOS_FILE)?,
        open(SESSIONS_FILE)?,
        events,
        aliases,
    )
}

fn write_table(
    path: &Path,
    header: &[String],
    rows: impl Iterator<Item = Vec<String>>,
) -> Result<()> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(File::create(path)?);
    w.write_record(header)?;
    for r in rows {
        w.write_record(&r)?;
    }
    w.flush()?;
    Ok(())
}

/// Writes the dataset in canonical form; ingesting the result yields an equal dataset.
pub fn export_dir(ds: &Dataset, dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    let mut header: Vec<String> = ["id", "study", "gender", "age", "glasses", "device"]
        .map(String::from)
        .to_vec();
    header.extend((1..=10).map(|k| format!("bfi{k}")));
    write_table(
        &dir.join(PARTICIPANTS_FILE),
        &header,
        ds.participants().iter().map(|p| {
            let mut r = vec![
                p.id.clone(),
                p.study.to_string(),
                p.gender.as_str().to_string(),
                p.age.to_string(),
                p.glasses.to_string(),
                p.device.clone(),
            ];
            match p.bfi_answers {
                Some(a) => r.extend(a.iter().map(u8::to_string)),
                None => r.extend(std::iter::repeat_n(String::new(), 10)),
            }
            r
        }),
    )?;
    write_table(
        &dir.join(VIDEOS_FILE),
        &["id", "study", "si", "ti", "category"].map(String::from),
        ds.videos().iter().map(|v| {
            vec![
                v.id.clone(),
                v.study.to_string(),
                v.si.to_string(),
                v.ti.to_string(),
                v.category.clone(),
            ]
        }),
    )?;
    write_table(
        &dir.join(SESSIONS_FILE),
        &["participant_id", "video_id", "activity", "start_resolution"].map(String::from),
        ds.sessions().iter().map(|s| {
            vec![
                s.participant_id.clone(),
                s.video_id.clone(),
                s.activity.as_str().to_string(),
                s.start_resolution.to_string(),
            ]
        }),
    )?;
    write_table(
        &dir.join(EVENTS_FILE),
        &["participant_id", "video_id", "t_ms", "new_resolution"].map(String::from),
        ds.sessions().iter().flat_map(|s| {
            s.events.iter().map(move |e| {
                vec![
                    s.participant_id.clone(),
                    s.video_id.clone(),
                    e.t_ms.to_string(),
                    e.new_resolution.to_string(),
                ]
            })
        }),
    )?;
    Ok(())
}
