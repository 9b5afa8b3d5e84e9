use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use sensegen::data::{
    load_column, load_windowed_text, synthetic_dataset, window_series, write_column, write_metadata,
    NormRange, NormRecord, SeriesPool, SyntheticKind, TraceMetadata,
};
use sensegen::discriminator::{DiscriminatorConfig, DiscriminatorModel};
use sensegen::generator::{FinalActivation, GeneratorConfig, GeneratorModel};
use sensegen::nn::{ClipMode, Params};
use sensegen::rng;
use sensegen::training::{
    alternating_round, load_checkpoint, save_checkpoint, train_discriminator, train_generator,
    AlternatingState, Checkpoint, CheckpointMeta, ModelKind, OptimizerState, TrainConfig,
};

use crate::config::Settings;
use crate::failure::Failure;

type Outcome = Result<(), Failure>;

pub fn generator_config(s: &Settings) -> Result<GeneratorConfig, Failure> {
    let d = GeneratorConfig::default();
    let final_activation = match s.raw("final_activation") {
        None => d.final_activation,
        Some(v) => v.parse::<FinalActivation>()?,
    };
    let cfg = GeneratorConfig {
        lstm_layers: s.get_or("lstm_layers", d.lstm_layers)?,
        lstm_units: s.get_or("lstm_units", d.lstm_units)?,
        fc_units: s.get_or("fc_units", d.fc_units)?,
        mixtures: s.get_or("mixtures", d.mixtures)?,
        final_activation,
    };
    cfg.validate()?;
    Ok(cfg)
}

pub fn discriminator_config(s: &Settings) -> Result<DiscriminatorConfig, Failure> {
    let d = DiscriminatorConfig::default();
    let cfg = DiscriminatorConfig {
        lstm_units: s.get_or("d_lstm_units", d.lstm_units)?,
        fc_units: s.get_or("d_fc_units", d.fc_units)?,
        window_len: s.get_or("window_len", d.window_len)?,
        strict: true,
    };
    cfg.validate()?;
    Ok(cfg)
}

pub fn train_config(s: &Settings, seed: u64) -> Result<TrainConfig, Failure> {
    let d = TrainConfig::default();
    let max = s.get("clip_norm")?;
    let clip = match (s.raw("clip"), d.clip) {
        (None | Some("global-norm"), ClipMode::GlobalNorm(m) | ClipMode::PerElement(m)) => {
            ClipMode::GlobalNorm(max.unwrap_or(m))
        }
        (Some("per-element"), ClipMode::GlobalNorm(m) | ClipMode::PerElement(m)) => {
            ClipMode::PerElement(max.unwrap_or(m))
        }
        (Some(other), _) => {
            return Err(Failure::Config(format!(
                "unknown clip mode '{other}' (expected global-norm or per-element)"
            )))
        }
    };
    let sigma_floor = match s.raw("sigma_floor") {
        None => d.sigma_floor,
        Some("none") => None,
        Some(_) => Some(s.require("sigma_floor")?),
    };
    let cfg = TrainConfig {
        minibatch_size: s.get_or("minibatch_size", d.minibatch_size)?,
        d_epochs: s.get_or("d_epochs", d.d_epochs)?,
        g_epochs: s.get_or("g_epochs", d.g_epochs)?,
        rounds: s.get_or("rounds", d.rounds)?,
        minibatches_per_round: s.get_or("minibatches_per_round", d.minibatches_per_round)?,
        tbptt_window: s.get_or("tbptt_window", d.tbptt_window)?,
        learning_rate: s.get_or("learning_rate", d.learning_rate)?,
        rmsprop_decay: s.get_or("rmsprop_decay", d.rmsprop_decay)?,
        rmsprop_eps: s.get_or("rmsprop_eps", d.rmsprop_eps)?,
        clip,
        sigma_floor,
        holdout_fraction: s.get_or("holdout_fraction", d.holdout_fraction)?,
        threshold: s.get_or("threshold", d.threshold)?,
        seed_value: d.seed_value,
        seed,
    };
    cfg.validate()?;
    Ok(cfg)
}

/// Reads a data file as one series (column format) or one series per row.
pub fn load_series(s: &Settings, path: &Path) -> Result<Vec<Vec<f64>>, Failure> {
    let ctx = format!("reading {}", path.display());
    match s.raw("format").unwrap_or("column") {
        "column" => Ok(vec![load_column(path).map_err(Failure::data(ctx))?]),
        "windowed" => {
            let width = s.get_or("samples_per_row", 128usize)?;
            load_windowed_text(path, width).map_err(Failure::data(ctx))
        }
        other => Err(Failure::Config(format!(
            "unknown data format '{other}' (expected column or windowed)"
        ))),
    }
}

fn range_of(series: &[Vec<f64>], what: &Path) -> Result<NormRange, Failure> {
    NormRange::of(series.iter().flatten()).map_err(Failure::data(format!("normalizing {}", what.display())))
}

fn apply(series: &[Vec<f64>], r: NormRange) -> Vec<Vec<f64>> {
    series.iter().map(|v| v.iter().map(|&x| r.apply(x)).collect()).collect()
}

/// Cuts every series that is long enough into windows of `len`.
fn windows(series: &[Vec<f64>], len: usize, stride: usize, what: &Path) -> Result<Vec<Vec<f64>>, Failure> {
    let mut out = Vec::new();
    for s in series.iter().filter(|s| s.len() >= len) {
        out.extend(window_series(s, len, stride)?);
    }
    if out.is_empty() {
        let longest = series.iter().map(Vec::len).max().unwrap_or(0);
        return Err(Failure::Data(format!(
            "{}: no series holds a window of {len} values (longest is {longest})",
            what.display()
        )));
    }
    Ok(out)
}

fn meta(s: &Settings, kind: ModelKind, norm: NormRange, train: TrainConfig) -> Result<CheckpointMeta, Failure> {
    let channel = s.raw("channel").unwrap_or("x").to_string();
    Ok(CheckpointMeta {
        kind,
        generator: None,
        discriminator: None,
        normalization: NormRecord::single(&channel, norm),
        channel,
        sample_rate_hz: s.get_or("sample_rate_hz", 50.0)?,
        train: Some(train),
        history: Default::default(),
    })
}

fn write_text(path: &Path, text: &str) -> Outcome {
    std::fs::write(path, text).map_err(Failure::io(format!("writing {}", path.display())))
}

fn save(path: &Path, ckpt: &Checkpoint) -> Outcome {
    save_checkpoint(path, ckpt).map_err(Failure::io_lib(path))?;
    log::info!("wrote {}", path.display());
    Ok(())
}

fn normalization_of(m: &CheckpointMeta, path: &Path) -> Result<NormRange, Failure> {
    m.normalization.get(&m.channel).ok_or_else(|| {
        Failure::Checkpoint(format!(
            "{}: no normalization record for channel '{}'",
            path.display(),
            m.channel
        ))
    })
}

fn read_checkpoint(s: &Settings) -> Result<(PathBuf, Checkpoint), Failure> {
    let path = s.existing_path("checkpoint")?;
    let ck = load_checkpoint(&path).map_err(Failure::checkpoint(path.display()))?;
    Ok((path, ck))
}

pub fn synth_data(s: &Settings) -> Outcome {
    let seed = s.require::<u64>("seed")?;
    let name = s.raw("kind").unwrap_or("sine");
    let kind = SyntheticKind::named(name)?;
    let length = s.get_or("length", 7000usize)?;
    let series = synthetic_dataset(kind, length, seed)?;
    let path = s.out_dir()?.join(format!("{name}.txt"));
    write_column(&path, &series).map_err(Failure::io_lib(&path))?;
    log::info!("wrote {} values to {}", series.len(), path.display());
    Ok(())
}

pub fn train_gen(s: &Settings) -> Outcome {
    let seed = s.require::<u64>("seed")?;
    let gcfg = generator_config(s)?;
    let tcfg = train_config(s, seed)?;
    let data = s.existing_path("data")?;
    let out = s.out_dir()?;

    let raw = load_series(s, &data)?;
    let norm = range_of(&raw, &data)?;
    let stride = s.get_or("stride", tcfg.tbptt_window)?;
    let ws = windows(&apply(&raw, norm), tcfg.tbptt_window + 1, stride, &data)?;
    log::info!("{} training windows of {} steps", ws.len(), tcfg.tbptt_window);

    let mut g = GeneratorModel::<f64>::init(gcfg, seed)?;
    let mut opt = OptimizerState::for_params(&g.tensors());
    let hist = train_generator(&mut g, &ws, &tcfg, &mut opt, &mut rng::stream(seed, "shuffle"))?;

    let mut m = meta(s, ModelKind::Generator, norm, tcfg)?;
    m.history.gen_nll = hist.clone();
    save(&out.join("generator.ckpt"), &Checkpoint::from_generator(&g, m))?;

    let mut csv = String::from("epoch,mean_nll\n");
    for (e, v) in hist.iter().enumerate() {
        writeln!(csv, "{},{v}", e + 1).unwrap();
    }
    write_text(&out.join("gen_loss.csv"), &csv)
}

pub fn train_disc(s: &Settings) -> Outcome {
    let seed = s.require::<u64>("seed")?;
    let dcfg = discriminator_config(s)?;
    let tcfg = train_config(s, seed)?;
    let real_path = s.existing_path("real")?;
    let fake_path = s.existing_path("fake")?;
    let out = s.out_dir()?;

    let real = load_series(s, &real_path)?;
    let fake = load_series(s, &fake_path)?;
    let norm = range_of(&real, &real_path)?;
    let stride = s.get_or("stride", dcfg.window_len)?;
    let rw = windows(&apply(&real, norm), dcfg.window_len, stride, &real_path)?;
    let fw = windows(&apply(&fake, norm), dcfg.window_len, stride, &fake_path)?;

    let mut d = DiscriminatorModel::<f64>::init(dcfg, seed)?;
    let mut opt = OptimizerState::for_params(&d.tensors());
    let h = train_discriminator(&mut d, &rw, &fw, &tcfg, &mut opt, &mut rng::stream(seed, "shuffle"))?;

    let mut m = meta(s, ModelKind::Discriminator, norm, tcfg)?;
    m.history.d_accuracy = h.accuracy.clone();
    save(&out.join("discriminator.ckpt"), &Checkpoint::from_discriminator(&d, m))?;

    let mut csv = String::from("epoch,accuracy,loss\n");
    for (e, (a, l)) in h.accuracy.iter().zip(&h.loss).enumerate() {
        writeln!(csv, "{},{a},{l}", e + 1).unwrap();
    }
    write_text(&out.join("disc_accuracy.csv"), &csv)
}

pub fn alternate(s: &Settings) -> Outcome {
    let seed = s.require::<u64>("seed")?;
    let gcfg = generator_config(s)?;
    let dcfg = discriminator_config(s)?;
    let mut tcfg = train_config(s, seed)?;
    let data = s.existing_path("data")?;
    let out = s.out_dir()?;

    let raw = load_series(s, &data)?;
    let norm = range_of(&raw, &data)?;
    tcfg.seed_value = norm.apply(s.get_or("seed_value", 0.0)?);
    let pool = SeriesPool::new(apply(&raw, norm))?;
    let need = dcfg.window_len.max(tcfg.tbptt_window + 1);
    if pool.max_len() < need {
        return Err(Failure::Data(format!(
            "{}: longest series has {} values, windows need {need}",
            data.display(),
            pool.max_len()
        )));
    }

    let mut g = GeneratorModel::<f64>::init(gcfg, seed)?;
    let mut d = DiscriminatorModel::<f64>::init(dcfg, seed.wrapping_add(1))?;
    let mut st = AlternatingState::new(&g, &d, seed);
    let mut rounds = Vec::with_capacity(tcfg.rounds);
    let mut csv = String::from("round,d_accuracy,g_nll\n");
    for r in 1..=tcfg.rounds {
        let rm = alternating_round(r, &mut g, &mut d, &pool, &tcfg, &mut st)?;
        writeln!(csv, "{},{},{}", rm.round, rm.d_accuracy, rm.g_nll).unwrap();
        rounds.push(rm);

        let mut m = meta(s, ModelKind::Generator, norm, tcfg.clone())?;
        m.history.rounds = rounds.clone();
        let gck = Checkpoint::from_generator(&g, m.clone());
        m.kind = ModelKind::Discriminator;
        let dck = Checkpoint::from_discriminator(&d, m);
        save(&out.join(format!("generator_round{r}.ckpt")), &gck)?;
        save(&out.join(format!("discriminator_round{r}.ckpt")), &dck)?;
        if r == tcfg.rounds {
            save(&out.join("generator.ckpt"), &gck)?;
            save(&out.join("discriminator.ckpt"), &dck)?;
        }
        write_text(&out.join("rounds.csv"), &csv)?;
    }
    Ok(())
}

/// Generator checkpoints to sample: `checkpoints` (comma-separated, one per
/// channel) or the single `checkpoint`.
fn generator_paths(s: &Settings) -> Result<Vec<PathBuf>, Failure> {
    let Some(list) = s.raw("checkpoints") else {
        return Ok(vec![s.existing_path("checkpoint")?]);
    };
    list.split(',')
        .map(|p| {
            let p = PathBuf::from(p.trim());
            if p.exists() {
                Ok(p)
            } else {
                Err(Failure::Config(format!("checkpoints path does not exist: {}", p.display())))
            }
        })
        .collect()
}

pub fn generate(s: &Settings) -> Outcome {
    let seed = s.require::<u64>("seed")?;
    let length = s.get_or("length", 400usize)?;
    let count = s.get_or("count", 4usize)?;
    if length == 0 || count == 0 {
        return Err(Failure::Config("length and count must be ≥ 1".into()));
    }
    let clamp = s.flag("clamp_output", true)?;
    let raw_seed_value = s.get_or("seed_value", 0.0)?;
    let paths = generator_paths(s)?;

    let mut channels = Vec::new();
    let mut record = NormRecord::default();
    let mut sample_rate_hz = 0.0;
    // columns[c][i] is trace i of channel c
    let mut columns = Vec::new();
    for (c, path) in paths.iter().enumerate() {
        let ck = load_checkpoint(path).map_err(Failure::checkpoint(path.display()))?;
        let norm = normalization_of(&ck.meta, path)?;
        let channel = ck.meta.channel.clone();
        if record.channels.insert(channel.clone(), norm).is_some() {
            return Err(Failure::Config(format!("channel '{channel}' appears in more than one checkpoint")));
        }
        if c == 0 {
            sample_rate_hz = ck.meta.sample_rate_hz;
        }
        let g: GeneratorModel<f64> = ck.to_generator().map_err(Failure::checkpoint(path.display()))?;
        let mut r = rng::stream(seed.wrapping_add(c as u64), "sampling");
        let traces = g.generate_batch(count, length, norm.apply(raw_seed_value), &mut r)?;
        let denorm = |v: f64| {
            let x = norm.invert(v);
            if clamp {
                x.clamp(norm.min, norm.max)
            } else {
                x
            }
        };
        columns.push(
            traces
                .into_iter()
                .map(|t| t.into_iter().map(denorm).collect::<Vec<f64>>())
                .collect::<Vec<_>>(),
        );
        channels.push(channel);
    }

    let out = s.out_dir()?;
    for i in 0..count {
        let p = out.join(format!("sample_{}.txt", i + 1));
        if columns.len() == 1 {
            write_column(&p, &columns[0][i]).map_err(Failure::io_lib(&p))?;
            continue;
        }
        let mut text = String::with_capacity(length * 20 * columns.len());
        for t in 0..length {
            let row: Vec<String> = columns.iter().map(|col| format!("{:?}", col[i][t])).collect();
            writeln!(text, "{}", row.join(" ")).unwrap();
        }
        write_text(&p, &text)?;
    }
    let sidecar = TraceMetadata {
        channel: channels.join(","),
        sample_rate_hz,
        length,
        seed,
        normalization: record,
    };
    let p = out.join("samples.json");
    write_metadata(&p, &sidecar).map_err(Failure::io_lib(&p))?;
    log::info!("wrote {count} traces of {length} steps × {} channels to {}", channels.len(), out.display());
    Ok(())
}

/// Per-class evaluation rows in the report's CSV layout.
pub fn evaluation_report(real: &[f64], fake: &[f64], threshold: f64) -> String {
    let mean = |v: &[f64]| if v.is_empty() { f64::NAN } else { v.iter().sum::<f64>() / v.len() as f64 };
    let hits_real = real.iter().filter(|&&x| x > threshold).count();
    let hits_fake = fake.iter().filter(|&&x| x <= threshold).count();
    let frac = |h: usize, n: usize| if n == 0 { f64::NAN } else { h as f64 / n as f64 };
    let all: Vec<f64> = real.iter().chain(fake).copied().collect();
    let mut csv = String::from("class,count,mean_score,accuracy\n");
    writeln!(csv, "real,{},{},{}", real.len(), mean(real), frac(hits_real, real.len())).unwrap();
    writeln!(csv, "fake,{},{},{}", fake.len(), mean(fake), frac(hits_fake, fake.len())).unwrap();
    writeln!(csv, "all,{},{},{}", all.len(), mean(&all), frac(hits_real + hits_fake, all.len())).unwrap();
    csv
}

pub fn evaluate(s: &Settings) -> Outcome {
    let (path, ck) = read_checkpoint(s)?;
    let real_path = s.existing_path("real")?;
    let fake_path = s.existing_path("fake")?;
    let norm = normalization_of(&ck.meta, &path)?;
    let d: DiscriminatorModel<f64> = ck.to_discriminator().map_err(Failure::checkpoint(path.display()))?;
    let threshold = s.get_or("threshold", 0.5)?;
    let out = s.out_dir()?;

    let len = d.config.window_len;
    let stride = s.get_or("stride", len)?;
    let mut scores = Vec::new();
    for p in [&real_path, &fake_path] {
        let ws = windows(&apply(&load_series(s, p)?, norm), len, stride, p)?;
        let refs: Vec<&[f64]> = ws.iter().map(Vec::as_slice).collect();
        scores.push(d.score_batch(&refs)?);
    }
    let report = evaluation_report(&scores[0], &scores[1], threshold);
    print!("{report}");
    write_text(&out.join("evaluation.csv"), &report)
}
