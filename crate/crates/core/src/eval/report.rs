use std::collections::{HashMap, HashSet};
use std::fmt::Write as _;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::thread;

use serde::{Deserialize, Serialize};

use super::judge::{extract_score, render_prompt, Judge, JudgeRequest, ScoreParse};
use super::records::{Capability, QARecord};
use crate::error::{Error, Result};

/// Judge rounds per answer.
pub const DEFAULT_K: usize = 5;

/// Extra judge calls for a round whose reply holds no number.
pub const MAX_PARSE_RETRIES: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum RoundFlag {
    /// The reply's number was outside `[0, 1]` and was clamped.
    Clamped { round: usize },
    /// No reply contained a number; the round scored 0.
    Unparsable { round: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreRecord {
    pub id: String,
    pub rounds: Vec<f64>,
    pub s_a: f64,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub flags: Vec<RoundFlag>,
}

impl ScoreRecord {
    /// Builds a record from round scores; `s_a` is their mean.
    pub fn from_rounds(id: impl Into<String>, rounds: Vec<f64>) -> Result<Self> {
        if rounds.is_empty() {
            return Err(Error::InvalidCount(
                "a score needs at least one round".into(),
            ));
        }
        if let Some(r) = rounds.iter().find(|r| !(0.0..=1.0).contains(*r)) {
            return Err(Error::InvalidConfig(format!(
                "round score {r} outside [0, 1]"
            )));
        }
        let s_a = rounds.iter().sum::<f64>() / rounds.len() as f64;
        Ok(Self {
            id: id.into(),
            rounds,
            s_a,
            flags: Vec::new(),
        })
    }
}

/// Scores one answer with `k` judge rounds.
pub fn score_answer(record: &QARecord, judge: &dyn Judge, k: usize) -> Result<ScoreRecord> {
    if k == 0 {
        return Err(Error::InvalidCount("k must be positive".into()));
    }
    let prompt = render_prompt(record);
    let mut rounds = Vec::with_capacity(k);
    let mut flags = Vec::new();
    for round in 0..k {
        let mut score = None;
        for attempt in 0..=MAX_PARSE_RETRIES {
            let reply = judge.judge(&JudgeRequest {
                record,
                prompt: &prompt,
                round,
                attempt,
            })?;
            match extract_score(&reply) {
                ScoreParse::Score(s) => score = Some(s),
                ScoreParse::Clamped(s) => {
                    flags.push(RoundFlag::Clamped { round });
                    score = Some(s);
                }
                ScoreParse::Unparsable => continue,
            }
            break;
        }
        rounds.push(score.unwrap_or_else(|| {
            flags.push(RoundFlag::Unparsable { round });
            0.0
        }));
    }
    let mut out = ScoreRecord::from_rounds(record.id.clone(), rounds)?;
    out.flags = flags;
    Ok(out)
}

/// Scores every record with up to `max_in_flight` concurrent judge calls.
/// Results keep the order of `records`.
pub fn score_all(
    records: &[QARecord],
    judge: &dyn Judge,
    k: usize,
    max_in_flight: usize,
) -> Vec<Result<ScoreRecord>> {
    let workers = max_in_flight.clamp(1, records.len().max(1));
    if workers == 1 {
        return records.iter().map(|r| score_answer(r, judge, k)).collect();
    }
    let next = AtomicUsize::new(0);
    let slots: Mutex<Vec<Option<Result<ScoreRecord>>>> =
        Mutex::new((0..records.len()).map(|_| None).collect());
    thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                let Some(record) = records.get(i) else { break };
                let result = score_answer(record, judge, k);
                slots.lock().unwrap()[i] = Some(result);
            });
        }
    });
    slots
        .into_inner()
        .unwrap()
        .into_iter()
        .map(|s| s.expect("every record scored"))
        .collect()
}

/// One value per capability, serialized in the benchmark's column order.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CapabilityTable<V> {
    #[serde(rename = "Rec")]
    pub rec: V,
    #[serde(rename = "Know")]
    pub know: V,
    #[serde(rename = "Gen")]
    pub gen: V,
    #[serde(rename = "Spat")]
    pub spat: V,
    #[serde(rename = "Emb")]
    pub emb: V,
}

impl<V> CapabilityTable<V> {
    pub fn get(&self, c: Capability) -> &V {
        match c {
            Capability::Rec => &self.rec,
            Capability::Know => &self.know,
            Capability::Gen => &self.gen,
            Capability::Spat => &self.spat,
            Capability::Emb => &self.emb,
        }
    }

    pub fn get_mut(&mut self, c: Capability) -> &mut V {
        match c {
            Capability::Rec => &mut self.rec,
            Capability::Know => &mut self.know,
            Capability::Gen => &mut self.gen,
            Capability::Spat => &mut self.spat,
            Capability::Emb => &mut self.emb,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunMeta {
    pub judge: String,
    pub k_rounds: usize,
    pub seed: u64,
}

/// Aggregate scores. Capability and total scores are `None` when nothing
/// was scored for them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Report {
    pub total: Option<f64>,
    pub per_capability: CapabilityTable<Option<f64>>,
    pub counts: CapabilityTable<usize>,
    pub judge: String,
    pub k_rounds: usize,
    pub answered: usize,
    pub total_records: usize,
    pub seed: u64,
}

/// Averages answer scores per capability and overall. Records without a
/// score are left out of every denominator; `answered` and `total_records`
/// show how many.
pub fn aggregate(scores: &[ScoreRecord], records: &[QARecord], meta: &RunMeta) -> Result<Report> {
    let by_id: HashMap<&str, Capability> = records
        .iter()
        .map(|r| (r.id.as_str(), r.capability))
        .collect();
    let mut seen = HashSet::new();
    let mut sums = CapabilityTable::<f64>::default();
    let mut counts = CapabilityTable::<usize>::default();
    let mut total = 0.0;
    for s in scores {
        let cap = *by_id
            .get(s.id.as_str())
            .ok_or_else(|| Error::ConsistencyError(format!("score {:?} has no record", s.id)))?;
        if !seen.insert(s.id.as_str()) {
            return Err(Error::ConsistencyError(format!(
                "score {:?} appears twice",
                s.id
            )));
        }
        if !(0.0..=1.0).contains(&s.s_a) {
            return Err(Error::ConsistencyError(format!(
                "score {:?} is outside [0, 1]",
                s.id
            )));
        }
        *sums.get_mut(cap) += s.s_a;
        *counts.get_mut(cap) += 1;
        total += s.s_a;
    }
    let mut per_capability = CapabilityTable::<Option<f64>>::default();
    for c in Capability::ALL {
        let n = *counts.get(c);
        *per_capability.get_mut(c) = (n > 0).then(|| *sums.get(c) / n as f64);
    }
    Ok(Report {
        total: (!scores.is_empty()).then(|| total / scores.len() as f64),
        per_capability,
        counts,
        judge: meta.judge.clone(),
        k_rounds: meta.k_rounds,
        answered: scores.len(),
        total_records: records.len(),
        seed: meta.seed,
    })
}

#[derive(Debug)]
pub struct EvalOutcome {
    pub report: Report,
    pub scores: Vec<ScoreRecord>,
    /// Records the judge could not score, with the reason.
    pub unscored: Vec<(String, Error)>,
}

/// Scores and aggregates a whole record set.
pub fn evaluate(
    records: &[QARecord],
    judge: &dyn Judge,
    k: usize,
    max_in_flight: usize,
    seed: u64,
) -> Result<EvalOutcome> {
    let mut scores = Vec::new();
    let mut unscored = Vec::new();
    for (record, result) in records
        .iter()
        .zip(score_all(records, judge, k, max_in_flight))
    {
        match result {
            Ok(s) => scores.push(s),
            Err(e @ Error::JudgeUnavailable(_)) => {
                log::warn!("record {:?} left unscored: {e}", record.id);
                unscored.push((record.id.clone(), e));
            }
            Err(e) => return Err(e),
        }
    }
    let meta = RunMeta {
        judge: judge.id(),
        k_rounds: k,
        seed,
    };
    let report = aggregate(&scores, records, &meta)?;
    Ok(EvalOutcome {
        report,
        scores,
        unscored,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Json,
    Markdown,
}

impl std::str::FromStr for ReportFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "json" => Ok(ReportFormat::Json),
            "markdown" | "md" => Ok(ReportFormat::Markdown),
            _ => Err(Error::InvalidConfig(format!("unknown report format {s:?}"))),
        }
    }
}

const MISSING: &str = "\u{2014}";

/// Renders a report. Numbers use the shortest text that parses back to the
/// same `f64`, so both formats are lossless.
pub fn emit_report(report: &Report, format: ReportFormat) -> Vec<u8> {
    match format {
        ReportFormat::Json => {
            let mut s = serde_json::to_string_pretty(report).expect("report serializes");
            s.push('\n');
            s.into_bytes()
        }
        ReportFormat::Markdown => markdown(report).into_bytes(),
    }
}

fn markdown(report: &Report) -> String {
    let cell = |v: Option<f64>| v.map_or_else(|| MISSING.to_string(), |x| format!("{x}"));
    let mut out = String::new();
    let header: Vec<&str> = Capability::ALL.iter().map(|c| c.name()).collect();
    let _ = writeln!(out, "| | {} | Total |", header.join(" | "));
    let _ = writeln!(out, "|---|{}---|", "---|".repeat(Capability::ALL.len()));
    let scores: Vec<String> = Capability::ALL
        .iter()
        .map(|&c| cell(*report.per_capability.get(c)))
        .collect();
    let _ = writeln!(
        out,
        "| score | {} | {} |",
        scores.join(" | "),
        cell(report.total)
    );
    let counts: Vec<String> = Capability::ALL
        .iter()
        .map(|&c| report.counts.get(c).to_string())
        .collect();
    let _ = writeln!(out, "| n | {} | {} |", counts.join(" | "), report.answered);
    let _ = writeln!(
        out,
        "\njudge: {}, rounds: {}, answered: {}/{}, seed: {}",
        report.judge, report.k_rounds, report.answered, report.total_records, report.seed
    );
    out
}
