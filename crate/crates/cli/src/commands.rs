use std::path::Path;

use anyhow::Context;
use ndarray::Array2;
use serde::Serialize;
use shapekit::box6d::{self, OrientedBox};
use shapekit::corrupt::{self, CorruptionSpec};
use shapekit::encoder::{assemble, EncoderConfig, MaskMode, Variant};
use shapekit::eval::{self, HttpJudge, HttpJudgeConfig, Judge, Report, ReportFormat, StubJudge};
use shapekit::matching::{alignment_loss, cosine_cost, hungarian};
use shapekit::pointcloud::{fps, io, knn_group, normalize_unit_sphere, PointCloud};
use shapekit::rng::SplitMix64;
use shapekit::{wb01, Encoder32, Error};

use crate::args::*;
use crate::UsageError;

/// What a subcommand produced. `failure` makes the process exit 1 after the
/// bytes are written.
pub struct Output {
    pub bytes: Vec<u8>,
    pub failure: Option<String>,
}

impl Output {
    fn ok(bytes: Vec<u8>) -> Self {
        Self {
            bytes,
            failure: None,
        }
    }
}

pub fn run(cli: &Cli) -> anyhow::Result<Output> {
    match &cli.command {
        Command::Tokenize(a) => tokenize(cli, a),
        Command::Encode(a) => encode(cli, a),
        Command::Match(a) => match_features(cli, a),
        Command::Corrupt(a) => corrupt(cli, a),
        Command::Iou(a) => iou(cli, a),
        Command::Reg(a) => reg(cli, a),
        Command::Eval(a) => eval(cli, a),
        Command::Report(a) => report(cli, a),
    }
}

fn format(cli: &Cli, allowed: &[Format], default: Format) -> anyhow::Result<Format> {
    let f = cli.format.unwrap_or(default);
    if allowed.contains(&f) {
        Ok(f)
    } else {
        let name = clap::ValueEnum::to_possible_value(&f)
            .unwrap()
            .get_name()
            .to_string();
        Err(UsageError(format!(
            "{} does not support --format {name}",
            cli.command.name()
        ))
        .into())
    }
}

fn json_line(value: &impl Serialize) -> Vec<u8> {
    let mut out = serde_json::to_vec(value).expect("output serializes");
    out.push(b'\n');
    out
}

fn load_cloud<T: shapekit::Scalar>(path: &Path, normalize: bool) -> anyhow::Result<PointCloud<T>> {
    let cloud = io::load(path).with_context(|| format!("reading {}", path.display()))?;
    Ok(if normalize {
        normalize_unit_sphere(&cloud)?
    } else {
        cloud
    })
}

#[derive(Serialize)]
struct TokenizeOut<'a> {
    points: usize,
    n_seeds: usize,
    k: usize,
    seeds: &'a [usize],
    neighborhoods: Vec<Hood<'a>>,
}

#[derive(Serialize)]
struct Hood<'a> {
    centroid: usize,
    members: &'a [usize],
    relative: &'a [[f64; 3]],
}

fn tokenize(cli: &Cli, a: &TokenizeArgs) -> anyhow::Result<Output> {
    let fmt = format(cli, &[Format::Json, Format::Text], Format::Json)?;
    let cloud = load_cloud::<f64>(&a.input, a.normalize)?;
    let seeds = fps(&cloud, a.n_seeds, a.start)?;
    let groups = knn_group(&cloud, &seeds, a.k)?;
    if fmt == Format::Text {
        let mut out = String::new();
        for g in &groups {
            let members: Vec<String> = g.member_indices.iter().map(|m| m.to_string()).collect();
            out.push_str(&format!("{}: {}\n", g.centroid_index, members.join(" ")));
        }
        return Ok(Output::ok(out.into_bytes()));
    }
    let neighborhoods = groups
        .iter()
        .map(|g| Hood {
            centroid: g.centroid_index,
            members: &g.member_indices,
            relative: &g.relative,
        })
        .collect();
    Ok(Output::ok(json_line(&TokenizeOut {
        points: cloud.len(),
        n_seeds: a.n_seeds,
        k: a.k,
        seeds: &seeds.indices,
        neighborhoods,
    })))
}

#[derive(Serialize)]
struct EncodeOut<'a> {
    config: &'a EncoderConfig,
    parameters: usize,
    n_seeds: usize,
    k: usize,
    sequence_length: usize,
    width: usize,
    segments: Vec<SegmentOut>,
}

#[derive(Serialize)]
struct SegmentOut {
    name: &'static str,
    start: usize,
    end: usize,
    l2_norm: f64,
}

fn encode(cli: &Cli, a: &EncodeArgs) -> anyhow::Result<Output> {
    format(cli, &[Format::Json], Format::Json)?;
    let variant = if a.variant.eq_ignore_ascii_case("custom") {
        Variant::Custom
    } else {
        a.variant.parse::<Variant>()?
    };
    let mut config = EncoderConfig::variant(variant);
    config.layers = a.layers.unwrap_or(config.layers);
    config.hidden = a.hidden.unwrap_or(config.hidden);
    config.mlp = a.mlp.unwrap_or(config.mlp);
    config.heads = a.heads.unwrap_or(config.heads);
    config.num_image_queries = a.queries;
    config.include_text_query = !a.no_text_query;
    config.prompt_length = a.prompt_length;
    config.d_llm = a.d_llm;
    config.mask = match a.mask {
        MaskArg::None => MaskMode::None,
        MaskArg::Causal => MaskMode::Causal,
        MaskArg::Random => MaskMode::Random {
            ratio: a.mask_ratio,
            seed: SplitMix64::new(cli.seed).next_u64(),
        },
    };
    config.validate()?;

    let encoder = match &a.weights {
        Some(path) => {
            let file =
                std::fs::File::open(path).with_context(|| format!("reading {}", path.display()))?;
            let tensors = wb01::read(std::io::BufReader::new(file))?;
            let bank = shapekit::encoder::WeightBank::from_tensors(&config, &tensors)?;
            Encoder32::with_weights(config.clone(), bank)?
        }
        None => Encoder32::new(config.clone(), cli.seed)?,
    };
    if let Some(path) = &a.save_weights {
        write_tensors(path, &encoder.weights().to_tensors())?;
    }

    let cloud = load_cloud::<f32>(&a.input, a.normalize)?;
    let bundle = encoder.forward(&cloud, a.n_seeds, a.k)?;
    let sequence = assemble(&bundle)?;
    if let Some(path) = &a.tensors {
        let parts = [
            ("prompt_ape", &bundle.prompt_ape),
            ("ape", &bundle.ape),
            ("prompt_local", &bundle.prompt_local),
            ("local", &bundle.local),
            ("prompt_global", &bundle.prompt_global),
            ("global", &bundle.global),
        ];
        let tensors: Vec<_> = parts
            .iter()
            .map(|(n, t)| wb01::Tensor::from_array(*n, t.view().into_dyn()))
            .collect();
        write_tensors(path, &tensors)?;
    }
    let segments = sequence
        .spans
        .iter()
        .map(|(seg, range)| SegmentOut {
            name: seg.name(),
            start: range.start,
            end: range.end,
            l2_norm: sequence
                .tokens
                .slice(ndarray::s![range.clone(), ..])
                .iter()
                .map(|&v| f64::from(v) * f64::from(v))
                .sum::<f64>()
                .sqrt(),
        })
        .collect();
    Ok(Output::ok(json_line(&EncodeOut {
        config: &config,
        parameters: encoder.weights().num_params(),
        n_seeds: a.n_seeds,
        k: a.k,
        sequence_length: sequence.len(),
        width: sequence.tokens.ncols(),
        segments,
    })))
}

fn write_tensors(path: &Path, tensors: &[wb01::Tensor]) -> anyhow::Result<()> {
    let mut buf = Vec::new();
    wb01::write(tensors, &mut buf)?;
    std::fs::write(path, buf).with_context(|| format!("writing {}", path.display()))
}

fn read_matrix(path: &Path, tensor: Option<&str>) -> anyhow::Result<Array2<f64>> {
    let bytes = std::fs::read(path).with_context(|| format!("reading {}", path.display()))?;
    if bytes.starts_with(wb01::MAGIC) {
        let tensors = wb01::read(&bytes[..])?;
        let t = match tensor {
            Some(name) => tensors.iter().find(|t| t.name == name),
            None => tensors.first(),
        }
        .ok_or_else(|| Error::EmptyInput(format!("{}: no such tensor", path.display())))?;
        return Ok(t.to_matrix()?);
    }
    let text = std::str::from_utf8(&bytes).map_err(Error::parse)?;
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let row = line
            .split_whitespace()
            .map(str::parse::<f64>)
            .collect::<Result<Vec<_>, _>>()
            .map_err(|e| Error::parse_at(lineno + 1, e))?;
        if rows.first().is_some_and(|r| r.len() != row.len()) {
            return Err(Error::parse_at(lineno + 1, "rows differ in length").into());
        }
        rows.push(row);
    }
    let width = rows.first().map_or(0, Vec::len);
    if rows.is_empty() || width == 0 {
        return Err(Error::EmptyInput(format!("{} holds no features", path.display())).into());
    }
    Ok(Array2::from_shape_vec((rows.len(), width), rows.concat())?)
}

#[derive(Serialize)]
struct MatchOut {
    n: usize,
    sigma: Vec<usize>,
    total_cost: f64,
    alignment_loss: f64,
}

fn match_features(cli: &Cli, a: &MatchArgs) -> anyhow::Result<Output> {
    let fmt = format(cli, &[Format::Json, Format::Text], Format::Json)?;
    let views = read_matrix(&a.views, a.tensor.as_deref())?;
    let queries = read_matrix(&a.queries, a.tensor.as_deref())?;
    if views.dim() != queries.dim() {
        return Err(Error::InvalidCount(format!(
            "views are {:?} but queries are {:?}",
            views.dim(),
            queries.dim()
        ))
        .into());
    }
    let cost = cosine_cost(views.view(), queries.view())?;
    let assignment = hungarian(&cost)?;
    let loss = alignment_loss(views.view(), queries.view(), &assignment.sigma)?;
    let out = MatchOut {
        n: cost.n(),
        sigma: assignment.sigma,
        total_cost: assignment.total_cost,
        alignment_loss: loss.loss,
    };
    if fmt == Format::Text {
        let sigma: Vec<String> = out.sigma.iter().map(|s| s.to_string()).collect();
        let text = format!(
            "sigma {}\ntotal_cost {}\nalignment_loss {}\n",
            sigma.join(" "),
            out.total_cost,
            out.alignment_loss
        );
        return Ok(Output::ok(text.into_bytes()));
    }
    Ok(Output::ok(json_line(&out)))
}

#[derive(Serialize)]
struct CorruptOut<'a> {
    kind: &'static str,
    seed: u64,
    input_points: usize,
    output_points: usize,
    indices: Option<&'a [usize]>,
    points: &'a [[f64; 3]],
    #[serde(skip_serializing_if = "Option::is_none")]
    colors: Option<&'a [[f64; 3]]>,
}

fn corrupt(cli: &Cli, a: &CorruptArgs) -> anyhow::Result<Output> {
    let to_pcb = cli
        .output
        .as_ref()
        .is_some_and(|p| p.extension().is_some_and(|e| e == "pcb"));
    let default = if to_pcb { Format::Pcb } else { Format::Json };
    let fmt = format(cli, &[Format::Json, Format::Text, Format::Pcb], default)?;
    let base = CorruptionSpec::default();
    let spec = CorruptionSpec {
        kind: a.kind,
        sigma: a.sigma,
        theta: a.theta.unwrap_or(base.theta),
        fov_deg: a.fov,
        bins: a.bins,
        camera_distance: a.camera_distance,
        depth_tolerance: a.depth_tolerance,
        scale_range: a
            .scale_range
            .as_deref()
            .map_or(base.scale_range, |r| [r[0], r[1]]),
        translate: a.translate,
        seed: cli.seed,
    };
    let cloud = load_cloud::<f64>(&a.input, false)?;
    let result = corrupt::apply(&cloud, &spec)?;
    let bytes = match fmt {
        Format::Text => io::to_text(&result.cloud).into_bytes(),
        Format::Pcb => {
            let mut buf = Vec::new();
            io::write_pcb1(&result.cloud, &mut buf)?;
            buf
        }
        _ => json_line(&CorruptOut {
            kind: spec.kind.name(),
            seed: spec.seed,
            input_points: cloud.len(),
            output_points: result.cloud.len(),
            indices: result.indices.as_deref(),
            points: result.cloud.points(),
            colors: result.cloud.colors(),
        }),
    };
    Ok(Output::ok(bytes))
}

/// A literal box, or a file of boxes one per line (blank lines skipped).
fn read_boxes(arg: &str) -> anyhow::Result<Vec<OrientedBox<f64>>> {
    let path = Path::new(arg);
    if !path.is_file() {
        return Ok(vec![
            box6d::parse_box(arg).with_context(|| format!("box {arg:?}"))?
        ]);
    }
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {arg}"))?;
    let boxes = text
        .lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| box6d::parse_box(l).with_context(|| format!("{arg}:{}", i + 1)))
        .collect::<anyhow::Result<Vec<_>>>()?;
    if boxes.is_empty() {
        return Err(Error::EmptyInput(format!("{arg} holds no boxes")).into());
    }
    Ok(boxes)
}

fn iou(cli: &Cli, a: &IouArgs) -> anyhow::Result<Output> {
    let fmt = format(cli, &[Format::Json, Format::Text], Format::Json)?;
    let left = read_boxes(&a.a)?;
    let right = read_boxes(&a.b)?;
    let n = left.len().max(right.len());
    if left.len() != right.len() && left.len() != 1 && right.len() != 1 {
        return Err(
            Error::InvalidCount(format!("{} boxes against {}", left.len(), right.len())).into(),
        );
    }
    let pick = |v: &[OrientedBox<f64>], i: usize| v[if v.len() == 1 { 0 } else { i }].clone();
    let ious: Vec<f64> = (0..n)
        .map(|i| box6d::iou(&pick(&left, i), &pick(&right, i)))
        .collect();
    if fmt == Format::Text {
        return Ok(Output::ok(
            ious.iter()
                .map(|v| format!("{v}\n"))
                .collect::<String>()
                .into_bytes(),
        ));
    }
    Ok(Output::ok(json_line(&ious)))
}

#[derive(Serialize)]
struct RegOut {
    accuracy: f64,
    hits: usize,
    total: usize,
    unparsed: usize,
    threshold: f64,
    ious: Vec<f64>,
}

fn box_lines(path: &Path) -> anyhow::Result<Vec<String>> {
    let text =
        std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let mut lines: Vec<String> = text.lines().map(str::to_owned).collect();
    while lines.last().is_some_and(|l| l.trim().is_empty()) {
        lines.pop();
    }
    Ok(lines)
}

fn reg(cli: &Cli, a: &RegArgs) -> anyhow::Result<Output> {
    let fmt = format(cli, &[Format::Json, Format::Text], Format::Json)?;
    let preds = box_lines(&a.predictions)?;
    let truths = box_lines(&a.ground_truth)?;
    if preds.len() != truths.len() {
        return Err(Error::InvalidCount(format!(
            "{} predictions for {} ground-truth boxes",
            preds.len(),
            truths.len()
        ))
        .into());
    }
    let mut pairs = Vec::with_capacity(preds.len());
    for (i, (p, g)) in preds.iter().zip(&truths).enumerate() {
        let gt = box6d::parse_box(g)
            .with_context(|| format!("{}:{}", a.ground_truth.display(), i + 1))?;
        let pred = box6d::parse_box(p)
            .inspect_err(|e| log::warn!("prediction {} counted as a miss: {e}", i + 1))
            .ok();
        pairs.push((pred, gt));
    }
    let r = box6d::reg_accuracy(pairs, a.threshold)?;
    let out = RegOut {
        accuracy: r.accuracy,
        hits: r.hits,
        total: r.total,
        unparsed: r.unparsed,
        threshold: r.threshold,
        ious: r.results.iter().map(|g| g.iou).collect(),
    };
    if fmt == Format::Text {
        let text = format!(
            "accuracy {} ({}/{} hits, {} unparsed, threshold {})\n",
            out.accuracy, out.hits, out.total, out.unparsed, out.threshold
        );
        return Ok(Output::ok(text.into_bytes()));
    }
    Ok(Output::ok(json_line(&out)))
}

fn report_format(cli: &Cli) -> anyhow::Result<ReportFormat> {
    Ok(
        match format(cli, &[Format::Json, Format::Markdown], Format::Json)? {
            Format::Markdown => ReportFormat::Markdown,
            _ => ReportFormat::Json,
        },
    )
}

fn eval(cli: &Cli, a: &EvalArgs) -> anyhow::Result<Output> {
    let fmt = report_format(cli)?;
    let records =
        eval::ingest(&a.records).with_context(|| format!("reading {}", a.records.display()))?;
    let judge: Box<dyn Judge> = match a.judge {
        JudgeArg::Stub => Box::new(StubJudge),
        JudgeArg::Http => Box::new(HttpJudge::new(HttpJudgeConfig::from_env()?)),
    };
    let outcome = eval::evaluate(
        &records,
        judge.as_ref(),
        a.rounds,
        a.max_in_flight,
        cli.seed,
    )?;
    if let Some(path) = &a.scores {
        let lines: Vec<u8> = outcome.scores.iter().flat_map(json_line).collect();
        std::fs::write(path, lines).with_context(|| format!("writing {}", path.display()))?;
    }
    for (id, e) in &outcome.unscored {
        eprintln!("unscored {id}: {e}");
    }
    let failure = (!outcome.unscored.is_empty()).then(|| {
        format!(
            "{} of {} records unscored",
            outcome.unscored.len(),
            records.len()
        )
    });
    Ok(Output {
        bytes: eval::emit_report(&outcome.report, fmt),
        failure,
    })
}

fn report(cli: &Cli, a: &ReportArgs) -> anyhow::Result<Output> {
    let fmt = report_format(cli)?;
    let text = std::fs::read_to_string(&a.report)
        .with_context(|| format!("reading {}", a.report.display()))?;
    let report: Report = serde_json::from_str(&text).map_err(Error::parse)?;
    Ok(Output::ok(eval::emit_report(&report, fmt)))
}
