//! Judge-scored question answering evaluation and zero-shot retrieval.
//!
//! Each answer is scored `K` times by a [`Judge`]; the answer score is the
//! mean of its rounds, a capability score is the mean answer score over that
//! capability, and the total is the mean over all scored answers.

mod judge;
mod records;
mod report;
mod retrieval;

pub use judge::{
    extract_score, render_prompt, token_f1, HttpJudge, HttpJudgeConfig, Judge, JudgeRequest,
    ScoreParse, StubJudge, JUDGE_TEMPLATE,
};
pub use records::{ingest, ingest_reader, Capability, QARecord};
pub use report::{
    aggregate, emit_report, evaluate, score_all, score_answer, CapabilityTable, EvalOutcome,
    Report, ReportFormat, RoundFlag, RunMeta, ScoreRecord, DEFAULT_K, MAX_PARSE_RETRIES,
};
pub use retrieval::zeroshot_topk;
