use std::collections::HashMap;
use std::thread;
use std::time::Duration;

use serde_json::json;

use super::records::QARecord;
use crate::error::{Error, Result};

/// Few-shot grading prompt. `{question}`, `{ground_truth}` and `{answer}`
/// are substituted by [`render_prompt`].
pub const JUDGE_TEMPLATE: &str = "\
Compare the ground truth and the prediction from an AI model about a 3D object, \
and give a correctness score for the prediction. The score is a number from 0.0 \
(totally wrong) to 1.0 (totally right), in steps of 0.1. When the ground truth \
lists several acceptable answers separated by <AND> or <OR>, a prediction that \
covers all required parts scores 1.0 and a partial one scores in between. \
Reply with the score only.

Question | Ground truth | Prediction | Correctness
--- | --- | --- | ---
What is this object? | A wooden chair | This is a chair made of wood. | 1.0
What is this object? | A wooden chair | It is a table. | 0.0
How many legs does it have? | 4 | It has three legs. | 0.0
What color is the mug? | blue <AND> white | The mug is blue. | 0.5
Which part should be pulled to open it? | the drawer handle on the front | Pull the handle on the front of the drawer. | 1.0
Describe the shape in one sentence. | A round lamp with a long thin stand and a cone shade. | A lamp with a tall pole and a shade. | 0.7
{question} | {ground_truth} | {answer} | ";

pub fn render_prompt(record: &QARecord) -> String {
    JUDGE_TEMPLATE
        .replace("{question}", &record.question)
        .replace("{ground_truth}", &record.ground_truth)
        .replace("{answer}", record.model_answer.as_deref().unwrap_or(""))
}

/// One grading call.
#[derive(Debug, Clone, Copy)]
pub struct JudgeRequest<'a> {
    pub record: &'a QARecord,
    pub prompt: &'a str,
    /// Zero-based scoring round.
    pub round: usize,
    /// Zero-based attempt within the round (non-zero after unparsable replies).
    pub attempt: usize,
}

/// A grader returning free-form text that should contain a score in `[0, 1]`.
///
/// `Err` means the judge could not be reached after its own retries and is
/// reported as [`Error::JudgeUnavailable`].
pub trait Judge: Send + Sync {
    fn id(&self) -> String;

    fn judge(&self, request: &JudgeRequest<'_>) -> Result<String>;
}

/// Offline judge: token-level F1 between the model answer and the ground
/// truth. Pure in `(question, ground_truth, model_answer)`.
#[derive(Debug, Clone, Copy, Default)]
pub struct StubJudge;

impl Judge for StubJudge {
    fn id(&self) -> String {
        "stub-token-f1".into()
    }

    fn judge(&self, request: &JudgeRequest<'_>) -> Result<String> {
        let r = request.record;
        Ok(format!(
            "{}",
            token_f1(r.model_answer.as_deref().unwrap_or(""), &r.ground_truth)
        ))
    }
}

fn tokens(text: &str) -> Vec<String> {
    text.split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(str::to_lowercase)
        .collect()
}

/// Multiset F1 over lower-cased alphanumeric tokens. Two empty texts score 1.
pub fn token_f1(prediction: &str, reference: &str) -> f64 {
    let pred = tokens(prediction);
    let gold = tokens(reference);
    if pred.is_empty() || gold.is_empty() {
        return if pred.is_empty() && gold.is_empty() {
            1.0
        } else {
            0.0
        };
    }
    let mut counts: HashMap<&str, usize> = HashMap::new();
    for t in &gold {
        *counts.entry(t).or_default() += 1;
    }
    let mut overlap = 0usize;
    for t in &pred {
        if let Some(c) = counts.get_mut(t.as_str()) {
            if *c > 0 {
                *c -= 1;
                overlap += 1;
            }
        }
    }
    if overlap == 0 {
        return 0.0;
    }
    let p = overlap as f64 / pred.len() as f64;
    let r = overlap as f64 / gold.len() as f64;
    2.0 * p * r / (p + r)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ScoreParse {
    Score(f64),
    /// Only out-of-range numbers were found; the first one, clamped.
    Clamped(f64),
    Unparsable,
}

/// Takes the first number in `[0, 1]` in `reply`. Without one, the first
/// number is clamped; without any number the reply is unparsable.
pub fn extract_score(reply: &str) -> ScoreParse {
    let bytes = reply.as_bytes();
    let mut first: Option<f64> = None;
    let mut i = 0;
    while i < bytes.len() {
        let starts = bytes[i].is_ascii_digit()
            || (bytes[i] == b'.' && bytes.get(i + 1).is_some_and(u8::is_ascii_digit));
        if !starts {
            i += 1;
            continue;
        }
        let negative = i > 0 && bytes[i - 1] == b'-';
        let start = i;
        while i < bytes.len() && bytes[i].is_ascii_digit() {
            i += 1;
        }
        if i + 1 < bytes.len() && bytes[i] == b'.' && bytes[i + 1].is_ascii_digit() {
            i += 1;
            while i < bytes.len() && bytes[i].is_ascii_digit() {
                i += 1;
            }
        }
        let Ok(mut v) = reply[start..i].parse::<f64>() else {
            continue;
        };
        if negative {
            v = -v;
        }
        if (0.0..=1.0).contains(&v) {
            return ScoreParse::Score(v);
        }
        first.get_or_insert(v);
    }
    match first {
        Some(v) => ScoreParse::Clamped(v.clamp(0.0, 1.0)),
        None => ScoreParse::Unparsable,
    }
}

#[derive(Debug, Clone)]
pub struct HttpJudgeConfig {
    /// Chat-completions URL.
    pub endpoint: String,
    pub model: String,
    pub api_key: Option<String>,
    pub temperature: Option<f64>,
    pub timeout: Duration,
    /// Extra attempts after a transport failure, 5xx or 429.
    pub retries: usize,
    /// First backoff; doubled on each further retry.
    pub backoff: Duration,
}

impl HttpJudgeConfig {
    pub fn new(endpoint: impl Into<String>, model: impl Into<String>) -> Self {
        Self {
            endpoint: endpoint.into(),
            model: model.into(),
            api_key: None,
            temperature: None,
            timeout: Duration::from_secs(60),
            retries: 3,
            backoff: Duration::from_millis(500),
        }
    }

    /// Reads `JUDGE_ENDPOINT` (required), `JUDGE_MODEL` and `JUDGE_API_KEY`.
    pub fn from_env() -> Result<Self> {
        let endpoint = std::env::var("JUDGE_ENDPOINT")
            .map_err(|_| Error::JudgeUnavailable("JUDGE_ENDPOINT is not set".into()))?;
        let model = std::env::var("JUDGE_MODEL").unwrap_or_else(|_| "gpt-4".into());
        let mut config = Self::new(endpoint, model);
        config.api_key = std::env::var("JUDGE_API_KEY")
            .ok()
            .filter(|k| !k.is_empty());
        Ok(config)
    }
}

/// Judge backed by an OpenAI-style chat-completions endpoint.
#[derive(Debug)]
pub struct HttpJudge {
    config: HttpJudgeConfig,
    agent: ureq::Agent,
}

impl HttpJudge {
    pub fn new(config: HttpJudgeConfig) -> Self {
        let agent = ureq::Agent::config_builder()
            .timeout_global(Some(config.timeout))
            .http_status_as_error(false)
            .build()
            .into();
        Self { config, agent }
    }

    pub fn config(&self) -> &HttpJudgeConfig {
        &self.config
    }

    fn call_once(&self, prompt: &str) -> std::result::Result<String, (bool, String)> {
        let mut body = json!({
            "model": self.config.model,
            "messages": [{"role": "user", "content": prompt}],
        });
        if let Some(t) = self.config.temperature {
            body["temperature"] = json!(t);
        }
        let mut req = self.agent.post(&self.config.endpoint);
        if let Some(key) = &self.config.api_key {
            req = req.header("Authorization", &format!("Bearer {key}"));
        }
        let mut resp = req.send_json(&body).map_err(|e| (true, e.to_string()))?;
        let status = resp.status().as_u16();
        if status == 429 || status >= 500 {
            return Err((true, format!("HTTP {status}")));
        }
        if status >= 400 {
            return Err((false, format!("HTTP {status}")));
        }
        let value: serde_json::Value = resp
            .body_mut()
            .read_json()
            .map_err(|e| (true, e.to_string()))?;
        value["choices"][0]["message"]["content"]
            .as_str()
            .map(str::to_string)
            .ok_or((false, "response has no choices[0].message.content".into()))
    }
}

impl Judge for HttpJudge {
    fn id(&self) -> String {
        format!("http:{}", self.config.model)
    }

    fn judge(&self, request: &JudgeRequest<'_>) -> Result<String> {
        let mut wait = self.config.backoff;
        let mut attempt = 0;
        loop {
            match self.call_once(request.prompt) {
                Ok(text) => return Ok(text),
                Err((retryable, message)) => {
                    if !retryable || attempt >= self.config.retries {
                        return Err(Error::JudgeUnavailable(format!(
                            "{} after {} attempt(s): {message}",
                            self.config.endpoint,
                            attempt + 1
                        )));
                    }
                    log::warn!("judge call failed ({message}), retrying in {wait:?}");
                    thread::sleep(wait);
                    wait *= 2;
                    attempt += 1;
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eval::Capability;
    use std::io::{BufRead, BufReader, Read, Write};
    use std::net::TcpListener;

    fn record(gt: &str, answer: Option<&str>) -> QARecord {
        QARecord {
            id: "x".into(),
            capability: Capability::Rec,
            question: "What is it?".into(),
            ground_truth: gt.into(),
            model_answer: answer.map(str::to_string),
        }
    }

    #[test]
    fn f1_values() {
        assert_eq!(token_f1("a red chair", "A red chair"), 1.0);
        assert_eq!(token_f1("", ""), 1.0);
        assert_eq!(token_f1("chair", ""), 0.0);
        assert_eq!(token_f1("table", "chair"), 0.0);
        // p = 1/2, r = 1/1
        assert!((token_f1("red chair", "chair") - 2.0 / 3.0).abs() < 1e-15);
        // duplicates count once per gold occurrence
        assert_eq!(token_f1("chair chair", "chair"), 2.0 / 3.0);
    }

    #[test]
    fn stub_reply_round_trips() {
        let r = record("a small wooden chair", Some("a chair"));
        let prompt = render_prompt(&r);
        let req = JudgeRequest {
            record: &r,
            prompt: &prompt,
            round: 0,
            attempt: 0,
        };
        let reply = StubJudge.judge(&req).unwrap();
        assert_eq!(
            extract_score(&reply),
            ScoreParse::Score(token_f1("a chair", "a small wooden chair"))
        );
    }

    #[test]
    fn score_extraction() {
        assert_eq!(extract_score("0.7"), ScoreParse::Score(0.7));
        assert_eq!(extract_score("Correctness: 1.0"), ScoreParse::Score(1.0));
        assert_eq!(extract_score("score .5"), ScoreParse::Score(0.5));
        assert_eq!(
            extract_score("Out of 10, I give 0.3"),
            ScoreParse::Score(0.3)
        );
        assert_eq!(extract_score("8/10"), ScoreParse::Clamped(1.0));
        assert_eq!(extract_score("-0.4"), ScoreParse::Clamped(0.0));
        assert_eq!(extract_score("the answer is wrong"), ScoreParse::Unparsable);
        assert_eq!(extract_score(""), ScoreParse::Unparsable);
        assert_eq!(extract_score("1."), ScoreParse::Score(1.0));
    }

    #[test]
    fn prompt_substitution() {
        let p = render_prompt(&record("blue", Some("red")));
        assert!(p.ends_with("What is it? | blue | red | "));
    }

    fn serve(responses: Vec<(u16, String)>) -> (String, thread::JoinHandle<Vec<String>>) {
        let listener = TcpListener::bind("127.0.0.1:0").unwrap();
        let url = format!(
            "http://{}/v1/chat/completions",
            listener.local_addr().unwrap()
        );
        let handle = thread::spawn(move || {
            let mut bodies = Vec::new();
            for (status, body) in responses {
                let (mut stream, _) = listener.accept().unwrap();
                let mut reader = BufReader::new(stream.try_clone().unwrap());
                let mut len = 0;
                loop {
                    let mut line = String::new();
                    reader.read_line(&mut line).unwrap();
                    if line == "\r\n" || line.is_empty() {
                        break;
                    }
                    if let Some(v) = line.to_ascii_lowercase().strip_prefix("content-length:") {
                        len = v.trim().parse().unwrap();
                    }
                }
                let mut buf = vec![0; len];
                reader.read_exact(&mut buf).unwrap();
                bodies.push(String::from_utf8(buf).unwrap());
                write!(
                    stream,
                    "HTTP/1.1 {status} X\r\nContent-Type: application/json\r\nContent-Length: {}\r\nConnection: close\r\n\r\n{body}",
                    body.len()
                )
                .unwrap();
            }
            bodies
        });
        (url, handle)
    }

    #[test]
    fn http_judge_retries_then_succeeds() {
        let ok = r#"{"choices":[{"message":{"role":"assistant","content":"0.8"}}]}"#.to_string();
        let (url, server) = serve(vec![(503, "{}".into()), (200, ok)]);
        let mut config = HttpJudgeConfig::new(url, "judge-model");
        config.backoff = Duration::from_millis(1);
        config.api_key = Some("k".into());
        let judge = HttpJudge::new(config);
        let r = record("chair", Some("chair"));
        let prompt = render_prompt(&r);
        let reply = judge
            .judge(&JudgeRequest {
                record: &r,
                prompt: &prompt,
                round: 0,
                attempt: 0,
            })
            .unwrap();
        assert_eq!(reply, "0.8");
        let bodies = server.join().unwrap();
        assert_eq!(bodies.len(), 2);
        let sent: serde_json::Value = serde_json::from_str(&bodies[1]).unwrap();
        assert_eq!(sent["model"], "judge-model");
        assert_eq!(sent["messages"][0]["content"], prompt.as_str());
    }

    #[test]
    fn http_judge_gives_up() {
        let (url, server) = serve(vec![(500, "{}".into()), (500, "{}".into())]);
        let mut config = HttpJudgeConfig::new(url, "m");
        config.backoff = Duration::from_millis(1);
        config.retries = 1;
        let judge = HttpJudge::new(config);
        let r = record("chair", Some("chair"));
        let req = JudgeRequest {
            record: &r,
            prompt: "p",
            round: 0,
            attempt: 0,
        };
        assert!(matches!(judge.judge(&req), Err(Error::JudgeUnavailable(_))));
        server.join().unwrap();
    }

    #[test]
    fn http_judge_client_error_is_final() {
        let (url, server) = serve(vec![(401, "{}".into())]);
        let judge = HttpJudge::new(HttpJudgeConfig::new(url, "m"));
        let r = record("chair", None);
        let req = JudgeRequest {
            record: &r,
            prompt: "p",
            round: 0,
            attempt: 0,
        };
        assert!(matches!(judge.judge(&req), Err(Error::JudgeUnavailable(_))));
        server.join().unwrap();
    }
}
