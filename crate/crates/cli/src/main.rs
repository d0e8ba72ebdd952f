//! Operator front end: dataset generation, feature extraction, model
//! training, evaluation, streaming detection, gradient verification, the
//! sequence-length sweep, and the signature comparison harness.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use ltewatch_core::detect::{detect_stream, verdicts_for_traces, ModelBundle, TraceVerdict};
use ltewatch_core::error::Error as CoreError;
use ltewatch_core::fbs::{
    predict_packets, rows_by_trace, trace_features, train_packet_model, train_trace_model,
    PacketConfig, PacketModel, TraceConfig,
};
use ltewatch_core::featurize::{encode, split, window, Codebook, FeatureMatrix};
use ltewatch_core::jsonl;
use ltewatch_core::metrics::{compute_metrics, MetricsReport};
use ltewatch_core::model::{AttackerLevel, DatasetKind, Label, Layer, Trace};
use ltewatch_core::msa::{build_layer_graph, train_msa, SageConfig};
use ltewatch_core::signatures::{evasion_report, signatures_to_json, builtin_signatures};
use ltewatch_core::sim::{gen_dataset, parse_spec_file, parse_spec_line, ScenarioSpec};
use ltewatch_core::verify::gradient_report;

#[derive(Parser)]
#[command(name = "ltewatch", version, about = "FBS and multi-step-attack detection over 4G layer-3 traces")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum LayerArg {
    Nas,
    Rrc,
}

impl From<LayerArg> for Layer {
    fn from(l: LayerArg) -> Layer {
        match l {
            LayerArg::Nas => Layer::Nas,
            LayerArg::Rrc => Layer::Rrc,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum DatasetArg {
    Fbs,
    Msa,
}

impl From<DatasetArg> for DatasetKind {
    fn from(d: DatasetArg) -> DatasetKind {
        match d {
            DatasetArg::Fbs => DatasetKind::Fbs,
            DatasetArg::Msa => DatasetKind::Msa,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Generate labeled traces from scenario specs.
    Gen(GenArgs),
    /// Encode traces into an aligned feature matrix.
    Featurize(FeaturizeArgs),
    /// Train a model.
    #[command(subcommand)]
    Train(TrainCommand),
    /// Evaluate models over a labeled dataset.
    Eval(EvalArgs),
    /// Stream traces on stdin to verdicts on stdout.
    Detect(DetectArgs),
    /// Verify analytic gradients with central differences.
    Gradcheck(GradcheckArgs),
    /// Report packet accuracy across a range of sequence lengths.
    SeqlenSweep(SeqlenArgs),
    /// Run the signature baselines against original and reshaped attacks.
    CompareSignatures(CompareArgs),
}

#[derive(Args)]
struct GenArgs {
    /// Scenario config file: one spec per line of key=value pairs
    /// (scenario, level, traces, mobility, noise, seed).
    #[arg(long, conflicts_with_all = ["scenario"])]
    config: Option<PathBuf>,
    /// Inline scenario: benign | fbs | msa:N | msa:all.
    #[arg(long)]
    scenario: Option<String>,
    #[arg(long, default_value_t = 0)]
    level: u8,
    #[arg(long, default_value_t = 10)]
    traces: u32,
    #[arg(long, default_value_t = false)]
    mobility: bool,
    #[arg(long, default_value_t = 0.3)]
    noise: f64,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Output trace JSONL path.
    #[arg(long)]
    out: PathBuf,
    /// Optional dataset manifest JSON path.
    #[arg(long)]
    manifest: Option<PathBuf>,
}

#[derive(Args)]
struct FeaturizeArgs {
    #[arg(long)]
    data: PathBuf,
    #[arg(long, value_enum)]
    layer: LayerArg,
    #[arg(long, value_enum, default_value = "fbs")]
    dataset: DatasetArg,
    /// Codebook JSON path: reused when the file exists, fitted and saved
    /// otherwise.
    #[arg(long)]
    codebook: PathBuf,
    /// Output feature CSV path.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Subcommand)]
enum TrainCommand {
    /// Per-packet FBS classifier.
    FbsPacket(TrainFbsPacketArgs),
    /// Trace-level FBS classifier over packet-model outputs.
    FbsTrace(TrainFbsTraceArgs),
    /// Graph-based multi-step-attack recognizer.
    Msa(TrainMsaArgs),
}

#[derive(Args)]
struct TrainFbsPacketArgs {
    #[arg(long)]
    data: PathBuf,
    #[arg(long, value_enum)]
    layer: LayerArg,
    #[arg(long)]
    codebook: PathBuf,
    #[arg(long)]
    len_seq: Option<usize>,
    #[arg(long)]
    stride: Option<usize>,
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long)]
    lr: Option<f64>,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long, default_value_t = 64)]
    hidden: usize,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct TrainFbsTraceArgs {
    #[arg(long)]
    data: PathBuf,
    #[arg(long, value_enum)]
    layer: LayerArg,
    #[arg(long)]
    codebook: PathBuf,
    #[arg(long)]
    packet_model: PathBuf,
    #[arg(long, default_value_t = 500)]
    epochs: usize,
    #[arg(long, default_value_t = 0.8)]
    lr: f64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct TrainMsaArgs {
    #[arg(long)]
    data: PathBuf,
    #[arg(long, value_enum)]
    layer: LayerArg,
    #[arg(long, default_value_t = 120)]
    epochs: usize,
    #[arg(long, default_value_t = 0.08)]
    lr: f64,
    #[arg(long, default_value_t = 7)]
    seed: u64,
    #[arg(long, default_value_t = 64)]
    hidden: usize,
    #[arg(long)]
    out: PathBuf,
    /// Attack-path bank JSON output.
    #[arg(long)]
    bank: PathBuf,
}

#[derive(Args)]
struct EvalArgs {
    /// Model manifest JSON mapping artifact names to paths.
    #[arg(long, alias = "model")]
    models: PathBuf,
    /// Packet-inference window stride (default: the model's sequence
    /// length; 1 scores each packet under every covering window).
    #[arg(long)]
    stride: Option<usize>,
    #[arg(long)]
    data: PathBuf,
    #[arg(long)]
    report: PathBuf,
    /// Optional verdict JSONL output (same lines `detect` would stream).
    #[arg(long)]
    verdicts: Option<PathBuf>,
}

#[derive(Args)]
struct DetectArgs {
    #[arg(long, alias = "model")]
    models: PathBuf,
    /// Packet-inference window stride (default: the model's sequence
    /// length).
    #[arg(long)]
    stride: Option<usize>,
    /// Fuse NAS and RRC predictions when both sides are available
    /// (--fuse false suppresses the fused sections).
    #[arg(long, default_value_t = true, action = clap::ArgAction::Set)]
    fuse: bool,
}

#[derive(Args)]
struct GradcheckArgs {
    #[arg(long, default_value_t = 20)]
    seeds: u64,
}

#[derive(Args)]
struct SeqlenArgs {
    /// Sequence-length range, inclusive, as A:B.
    #[arg(long)]
    range: String,
    #[arg(long, value_enum, default_value = "nas")]
    layer: LayerArg,
    #[arg(long, default_value_t = 5)]
    seed: u64,
    #[arg(long, default_value_t = 30)]
    epochs: usize,
    #[arg(long)]
    report: Option<PathBuf>,
}

#[derive(Args)]
struct CompareArgs {
    /// Original (level-3) attack traces.
    #[arg(long)]
    data: PathBuf,
    /// Reshaped (level-4) attack traces.
    #[arg(long)]
    reshaped: PathBuf,
    /// Optional model manifest for the learning-based companion run.
    #[arg(long)]
    models: Option<PathBuf>,
    #[arg(long)]
    report: PathBuf,
    /// Also dump the signature rule DSL next to the report.
    #[arg(long)]
    dump_signatures: Option<PathBuf>,
}

/// Exit codes: 2 validation, 3 I/O, 4 schema/parse.
fn exit_code_for(err: &CoreError) -> u8 {
    match err {
        CoreError::Io(_) => 3,
        CoreError::Json(_) | CoreError::Parse(_) | CoreError::SchemaMismatch { .. } => 4,
        _ => 2,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(exit_code_for(&err))
        }
    }
}

fn read_traces(path: &Path) -> Result<Vec<Trace>, CoreError> {
    jsonl::read_traces_path(path)
}

fn write_json(path: &Path, value: &serde_json::Value) -> Result<(), CoreError> {
    let mut file = std::fs::File::create(path)?;
    serde_json::to_writer_pretty(&mut file, value)?;
    file.write_all(b"\n")?;
    Ok(())
}

fn load_codebook(path: &Path) -> Result<Codebook, CoreError> {
    let text = std::fs::read_to_string(path)?;
    Codebook::from_json(&serde_json::from_str(&text)?)
}

fn run(command: Command) -> Result<ExitCode, CoreError> {
    match command {
        Command::Gen(args) => cmd_gen(args),
        Command::Featurize(args) => cmd_featurize(args),
        Command::Train(TrainCommand::FbsPacket(args)) => cmd_train_fbs_packet(args),
        Command::Train(TrainCommand::FbsTrace(args)) => cmd_train_fbs_trace(args),
        Command::Train(TrainCommand::Msa(args)) => cmd_train_msa(args),
        Command::Eval(args) => cmd_eval(args),
        Command::Detect(args) => cmd_detect(args),
        Command::Gradcheck(args) => cmd_gradcheck(args),
        Command::SeqlenSweep(args) => cmd_seqlen_sweep(args),
        Command::CompareSignatures(args) => cmd_compare_signatures(args),
    }
}

fn cmd_gen(args: GenArgs) -> Result<ExitCode, CoreError> {
    let specs: Vec<ScenarioSpec> = if let Some(config) = &args.config {
        let content = std::fs::read_to_string(config)?;
        parse_spec_file(&content, args.seed)?
    } else {
        let scenario = args
            .scenario
            .ok_or_else(|| CoreError::InvalidSpec("pass --config or --scenario".into()))?;
        let line = format!(
            "scenario={} level={} traces={} mobility={} noise={} seed={}",
            scenario, args.level, args.traces, args.mobility, args.noise, args.seed
        );
        parse_spec_line(&line, args.seed)?
    };
    let dataset = gen_dataset(&specs)?;
    jsonl::write_traces_path(&args.out, &dataset.traces)?;
    if let Some(manifest) = &args.manifest {
        write_json(manifest, &serde_json::to_value(&dataset.manifest)?)?;
    }
    println!(
        "wrote {} traces to {} ({} classes)",
        dataset.traces.len(),
        args.out.display(),
        dataset.manifest.counts.len()
    );
    Ok(ExitCode::SUCCESS)
}

fn cmd_featurize(args: FeaturizeArgs) -> Result<ExitCode, CoreError> {
    let traces = read_traces(&args.data)?;
    let layer: Layer = args.layer.into();
    let existing = if args.codebook.exists() {
        Some(load_codebook(&args.codebook)?)
    } else {
        None
    };
    let reused = existing.is_some();
    let (matrix, book) = encode(&traces, layer, args.dataset.into(), existing.as_ref())?;
    if !reused {
        write_json(&args.codebook, &book.to_json())?;
    }
    let file = std::fs::File::create(&args.out)?;
    matrix.to_csv(std::io::BufWriter::new(file))?;
    println!(
        "encoded {} packets × {} columns ({} codebook)",
        matrix.rows.len(),
        matrix.width_with_bookkeeping(),
        if reused { "reused" } else { "fitted" }
    );
    Ok(ExitCode::SUCCESS)
}

fn cmd_train_fbs_packet(args: TrainFbsPacketArgs) -> Result<ExitCode, CoreError> {
    let traces = read_traces(&args.data)?;
    let layer: Layer = args.layer.into();
    let existing = if args.codebook.exists() {
        Some(load_codebook(&args.codebook)?)
    } else {
        None
    };
    let fit = existing.is_none();
    let (matrix, book) = encode(&traces, layer, DatasetKind::Fbs, existing.as_ref())?;
    if fit {
        write_json(&args.codebook, &book.to_json())?;
    }
    let mut config = PacketConfig::for_layer(layer);
    config.len_seq = args.len_seq.unwrap_or(config.len_seq);
    config.hidden = args.hidden;
    config.epochs = args.epochs.unwrap_or(config.epochs);
    config.lr = args.lr.unwrap_or(config.lr);
    config.seed = args.seed;
    let stride = args.stride.unwrap_or(config.len_seq);
    let ws = window(&matrix, config.len_seq, stride);
    let scale = book.column_scales(&matrix.columns);
    let (model, losses) = train_packet_model(&ws, layer, scale, config)?;
    write_json(&args.out, &model.to_json())?;
    println!(
        "trained packet model on {} windows; loss {:.4} → {:.4}",
        ws.windows.len(),
        losses.first().unwrap_or(&0.0),
        losses.last().unwrap_or(&0.0)
    );
    Ok(ExitCode::SUCCESS)
}

fn trace_feature_rows(
    traces: &[Trace],
    matrix: &FeatureMatrix,
    model: &PacketModel,
    layer: Layer,
) -> Result<(Vec<[f64; 8]>, Vec<f64>), CoreError> {
    let mut features = Vec::new();
    let mut labels = Vec::new();
    for (trace_id, rows) in rows_by_trace(matrix) {
        let probs = predict_packets(model, &rows, model.config.len_seq)?;
        let trace = traces
            .iter()
            .find(|t| t.trace_id == trace_id)
            .ok_or_else(|| CoreError::Parse(format!("matrix row for unknown trace {trace_id}")))?;
        let kinds: Vec<_> = trace
            .packets
            .iter()
            .filter(|p| p.layer == layer)
            .map(|p| p.kind)
            .collect();
        features.push(trace_features(&probs, &kinds));
        labels.push(f64::from(!trace.scenario.is_benign()));
    }
    Ok((features, labels))
}

fn cmd_train_fbs_trace(args: TrainFbsTraceArgs) -> Result<ExitCode, CoreError> {
    let traces = read_traces(&args.data)?;
    let layer: Layer = args.layer.into();
    let book = load_codebook(&args.codebook)?;
    let packet_model = {
        let text = std::fs::read_to_string(&args.packet_model)?;
        PacketModel::from_json(&serde_json::from_str(&text)?)?
    };
    let (matrix, _) = encode(&traces, layer, DatasetKind::Fbs, Some(&book))?;
    let (features, labels) = trace_feature_rows(&traces, &matrix, &packet_model, layer)?;
    let config = TraceConfig { lr: args.lr, epochs: args.epochs };
    let (model, losses) = train_trace_model(layer, &features, &labels, config)?;
    write_json(&args.out, &model.to_json())?;
    println!(
        "trained trace model on {} traces; loss {:.4} → {:.4}",
        features.len(),
        losses.first().unwrap_or(&0.0),
        losses.last().unwrap_or(&0.0)
    );
    Ok(ExitCode::SUCCESS)
}

fn cmd_train_msa(args: TrainMsaArgs) -> Result<ExitCode, CoreError> {
    let traces = read_traces(&args.data)?;
    let layer: Layer = args.layer.into();
    let graphs: Vec<_> = traces
        .iter()
        .map(|t| build_layer_graph(t, layer))
        .collect::<Result<_, _>>()?;
    let config = SageConfig {
        hidden: args.hidden,
        epochs: args.epochs,
        lr: args.lr,
        seed: args.seed,
    };
    let (model, bank, losses) = train_msa(&graphs, layer, config)?;
    write_json(&args.out, &model.to_json())?;
    write_json(&args.bank, &bank.to_json())?;
    println!(
        "trained attack recognizer on {} graphs; loss {:.4} → {:.4}",
        graphs.len(),
        losses.first().unwrap_or(&0.0),
        losses.last().unwrap_or(&0.0)
    );
    Ok(ExitCode::SUCCESS)
}

/// Per-packet FBS metrics need ground-truth binary labels; this fails on
/// datasets carrying attack labels and is skipped there.
fn fbs_packet_metrics(
    bundle: &ModelBundle,
    traces: &[Trace],
) -> Result<Option<MetricsReport>, CoreError> {
    let mut predictions = Vec::new();
    let mut actuals = Vec::new();
    for (layer, packet_model, book) in [
        (Layer::Nas, &bundle.fbs_packet_nas, &bundle.codebook_nas),
        (Layer::Rrc, &bundle.fbs_packet_rrc, &bundle.codebook_rrc),
    ] {
        let (Some(model), Some(book)) = (packet_model, book) else {
            continue;
        };
        let matrix = match encode(traces, layer, DatasetKind::Fbs, Some(book)) {
            Ok((m, _)) => m,
            Err(CoreError::MsaLabelInFbsDataset) => return Ok(None),
            Err(e) => return Err(e),
        };
        for (_, rows) in rows_by_trace(&matrix) {
            let probs = predict_packets(model, &rows, model.config.len_seq)?;
            for (row, p) in rows.iter().zip(probs.iter()) {
                predictions.push(if *p >= 0.5 { Label::Fbs } else { Label::Benign });
                actuals.push(if row.label == 1 { Label::Fbs } else { Label::Benign });
            }
        }
    }
    if predictions.is_empty() {
        return Ok(None);
    }
    Ok(Some(compute_metrics(&predictions, &actuals)?))
}

fn verdict_metrics(
    verdicts: &[TraceVerdict],
    traces: &[Trace],
    pick: &dyn Fn(&TraceVerdict) -> Option<Label>,
    actual: &dyn Fn(&Trace) -> Label,
) -> Result<Option<MetricsReport>, CoreError> {
    let mut predictions = Vec::new();
    let mut actuals = Vec::new();
    for (v, t) in verdicts.iter().zip(traces.iter()) {
        if let Some(label) = pick(v) {
            predictions.push(label);
            actuals.push(actual(t));
        }
    }
    if predictions.is_empty() {
        return Ok(None);
    }
    Ok(Some(compute_metrics(&predictions, &actuals)?))
}

fn cmd_eval(args: EvalArgs) -> Result<ExitCode, CoreError> {
    let mut bundle = ModelBundle::load_manifest(&args.models)?;
    bundle.stride_override = args.stride;
    let traces = read_traces(&args.data)?;
    let verdicts = verdicts_for_traces(&bundle, &traces)?;

    if let Some(path) = &args.verdicts {
        let mut file = std::io::BufWriter::new(std::fs::File::create(path)?);
        for v in &verdicts {
            serde_json::to_writer(&mut file, v)?;
            file.write_all(b"\n")?;
        }
    }

    let fbs_packet = fbs_packet_metrics(&bundle, &traces)?;
    let fbs_trace = verdict_metrics(
        &verdicts,
        &traces,
        &|v| v.fbs_label(),
        &|t| if t.scenario.is_benign() { Label::Benign } else { Label::Fbs },
    )?;
    let msa_trace = verdict_metrics(&verdicts, &traces, &|v| v.msa_label(), &|t| t.scenario)?;

    let mut report = serde_json::json!({
        "format_version": 1,
        "n_traces": traces.len(),
    });
    if let Some(m) = &fbs_packet {
        println!("fbs packet accuracy {:.3} fpr {:.3}", m.accuracy, m.fpr);
        report["fbs_packet"] = serde_json::to_value(m)?;
    }
    if let Some(m) = &fbs_trace {
        println!("fbs trace accuracy {:.3} fpr {:.3}", m.accuracy, m.fpr);
        report["fbs_trace"] = serde_json::to_value(m)?;
    }
    if let Some(m) = &msa_trace {
        println!("msa trace accuracy {:.3} fpr {:.3}", m.accuracy, m.fpr);
        report["msa_trace"] = serde_json::to_value(m)?;
    }
    write_json(&args.report, &report)?;
    Ok(ExitCode::SUCCESS)
}

fn cmd_detect(args: DetectArgs) -> Result<ExitCode, CoreError> {
    let mut bundle = ModelBundle::load_manifest(&args.models)?;
    bundle.stride_override = args.stride;
    let stdin = std::io::stdin();
    let stdout = std::io::stdout();
    if args.fuse {
        detect_stream(&bundle, stdin.lock(), stdout.lock())?;
    } else {
        // verdicts per layer only; fusion suppressed
        let reader = std::io::BufReader::new(stdin.lock());
        let mut writer = stdout.lock();
        use std::io::BufRead;
        for line in reader.lines() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let trace = jsonl::trace_from_line(&line)?;
            let mut verdict = ltewatch_core::detect::verdict_for_trace(&bundle, &trace)?;
            if let Some(fbs) = verdict.fbs.as_mut() {
                fbs.fused = None;
            }
            if let Some(msa) = verdict.msa.as_mut() {
                msa.fused = None;
            }
            serde_json::to_writer(&mut writer, &verdict)?;
            writer.write_all(b"\n")?;
            writer.flush()?;
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_gradcheck(args: GradcheckArgs) -> Result<ExitCode, CoreError> {
    let mut all_pass = true;
    println!("{:<18} {:>7} {:>12} {:>10} result", "op", "seeds", "max rel err", "threshold");
    for r in gradient_report(args.seeds) {
        println!(
            "{:<18} {:>7} {:>12.3e} {:>10.0e} {}",
            r.name,
            r.seeds,
            r.max_rel_err,
            r.threshold,
            if r.pass { "pass" } else { "FAIL" }
        );
        all_pass &= r.pass;
    }
    Ok(if all_pass { ExitCode::SUCCESS } else { ExitCode::from(2) })
}

fn cmd_seqlen_sweep(args: SeqlenArgs) -> Result<ExitCode, CoreError> {
    let (lo, hi) = args
        .range
        .split_once(':')
        .and_then(|(a, b)| Some((a.parse::<usize>().ok()?, b.parse::<usize>().ok()?)))
        .ok_or_else(|| CoreError::Parse(format!("bad --range `{}`, want A:B", args.range)))?;
    if lo == 0 || hi < lo {
        return Err(CoreError::InvalidSpec(format!("bad range {lo}:{hi}")));
    }
    let layer: Layer = args.layer.into();

    let specs = vec![
        ScenarioSpec {
            scenario: Label::Benign,
            attacker_level: AttackerLevel::new(0).unwrap(),
            mobility: true,
            n_traces: 30,
            master_seed: args.seed,
            noise: 0.4,
        },
        ScenarioSpec {
            scenario: Label::Fbs,
            attacker_level: AttackerLevel::new(1).unwrap(),
            mobility: false,
            n_traces: 30,
            master_seed: args.seed + 1,
            noise: 0.4,
        },
    ];
    let traces = gen_dataset(&specs)?.traces;
    let (train, test) = split(&traces, 0.8, args.seed)?;
    let (train_matrix, book) = encode(&train, layer, DatasetKind::Fbs, None)?;
    let (test_matrix, _) = encode(&test, layer, DatasetKind::Fbs, Some(&book))?;
    let scale = book.column_scales(&train_matrix.columns);

    let mut rows = Vec::new();
    println!("len_seq  packet_accuracy");
    for len_seq in lo..=hi {
        let ws = window(&train_matrix, len_seq, len_seq);
        let config = PacketConfig {
            len_seq,
            epochs: args.epochs,
            seed: args.seed,
            ..PacketConfig::for_layer(layer)
        };
        let (model, _) = train_packet_model(&ws, layer, scale.clone(), config)?;
        let mut hits = 0usize;
        let mut total = 0usize;
        for (_, trace_rows) in rows_by_trace(&test_matrix) {
            let probs = predict_packets(&model, &trace_rows, len_seq)?;
            for (row, p) in trace_rows.iter().zip(probs.iter()) {
                hits += usize::from((*p >= 0.5) == (row.label == 1));
                total += 1;
            }
        }
        let accuracy = hits as f64 / total.max(1) as f64;
        println!("{len_seq:>7}  {accuracy:.3}");
        rows.push(serde_json::json!({ "len_seq": len_seq, "packet_accuracy": accuracy }));
    }
    if let Some(path) = &args.report {
        write_json(path, &serde_json::json!({ "format_version": 1, "layer": layer, "rows": rows }))?;
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_compare_signatures(args: CompareArgs) -> Result<ExitCode, CoreError> {
    let originals = read_traces(&args.data)?;
    let reshaped = read_traces(&args.reshaped)?;

    let bundle = match &args.models {
        Some(path) => Some(ModelBundle::load_manifest(path)?),
        None => None,
    };
    let companion = bundle.as_ref().map(|b| {
        move |trace: &Trace| -> Label {
            verdicts_for_traces(b, std::slice::from_ref(trace))
                .ok()
                .and_then(|vs| vs.into_iter().next())
                .and_then(|v| v.msa_label())
                .unwrap_or(Label::Benign)
        }
    });
    let companion_ref: Option<&dyn Fn(&Trace) -> Label> =
        companion.as_ref().map(|f| f as &dyn Fn(&Trace) -> Label);

    let report = evasion_report(&originals, &reshaped, companion_ref);
    println!(
        "{:<42} {:>9} {:>9} {:>9} {:>9} {:>9} {:>9}",
        "attack", "dfa orig", "dfa resh", "mm orig", "mm resh", "pltl orig", "pltl resh"
    );
    for e in &report.entries {
        println!(
            "{:<42} {:>9.2} {:>9.2} {:>9.2} {:>9.2} {:>9.2} {:>9.2}",
            e.attack_name,
            e.dfa_original,
            e.dfa_reshaped,
            e.mealy_original,
            e.mealy_reshaped,
            e.pltl_original,
            e.pltl_reshaped
        );
        if let (Some(orig), Some(resh)) = (e.companion_original, e.companion_reshaped) {
            println!("{:<42} {:>9} {:>9.2} {:>9} {:>9.2}", "  graph recognizer", "orig", orig, "resh", resh);
        }
    }
    write_json(&args.report, &serde_json::to_value(&report)?)?;
    if let Some(path) = &args.dump_signatures {
        write_json(path, &signatures_to_json(&builtin_signatures()))?;
    }
    Ok(ExitCode::SUCCESS)
}
