use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use neuracrypt::attack::{
    AttackReport, AttackerKind, AttackerModel, MmdConfig, PlaintextMethod, TrainConfig,
    TransferConfig,
};
use neuracrypt::encoder::{ArchConfig, Encoder, EncoderKey, LinearEncoder};
use neuracrypt::io::{
    analyze, binary_labels, caps_from_env, encode_dataset, keygen, load_image,
    load_pool_shards, pool_merge, pool_shards, read_labels_csv, render_attack, render_lc_csv,
    render_privacy_report, render_utility, synth_generate, utility_pool, write_atomic, write_pgm,
    EncodeRequest, IoError, PoolManifest, PrivacyReportDto, PublicationManifest, Scenario,
    SyntheticConfig, Target, UtilityReport, EXIT_OK, EXIT_USAGE,
};
use neuracrypt::tensor::Tensor;

#[derive(Parser)]
#[command(name = "neuracrypt", version, about = "Keyed patch encoder, exact privacy analysis and attacks")]
struct Cli {
    #[command(subcommand)]
    cmd: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write a private key file; prints only the public output shape.
    Keygen(KeygenArgs),
    /// Encode a directory of images and write a publication manifest.
    Encode(EncodeArgs),
    /// Merge owner manifests into one pool manifest.
    Pool(PoolArgs),
    /// Exact privacy analysis of a discrete instance file.
    Analyze(AnalyzeArgs),
    /// Run an attack and print its JSON report.
    #[command(subcommand)]
    Attack(AttackCmd),
    /// Write a synthetic two-class PGM dataset with labels.csv.
    Synth(SynthArgs),
    /// Logistic-regression utility proxy on published encodings.
    Utility(UtilityArgs),
    /// Render a JSON report as text.
    Report(ReportArgs),
}

#[derive(Args)]
struct ArchArgs {
    #[arg(long, default_value_t = 256)]
    height: usize,
    #[arg(long, default_value_t = 256)]
    width: usize,
    #[arg(long, default_value_t = 1)]
    channels: usize,
    #[arg(long, default_value_t = 16)]
    patch: usize,
    #[arg(long, default_value_t = 7)]
    depth: usize,
    #[arg(long, default_value_t = 2048)]
    hidden: usize,
}

#[derive(Args)]
struct KeygenArgs {
    #[arg(long)]
    out: PathBuf,
    /// Drawn from OS entropy when omitted.
    #[arg(long)]
    seed: Option<u64>,
    #[command(flatten)]
    arch: ArchArgs,
}

#[derive(Args)]
struct EncodeArgs {
    #[arg(long)]
    key: PathBuf,
    /// Directory of .pgm or .nct images.
    #[arg(long)]
    input: PathBuf,
    /// CSV with header `file,label`.
    #[arg(long)]
    labels: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value = "owner")]
    owner: String,
    #[arg(long, default_value = "task")]
    task: String,
    /// Fixed nonce counter base, for reproducible runs.
    #[arg(long)]
    nonce_base: Option<u64>,
}

#[derive(Args)]
struct PoolArgs {
    #[arg(long)]
    out: PathBuf,
    #[arg(required = true)]
    manifests: Vec<PathBuf>,
}

#[derive(Args)]
struct AnalyzeArgs {
    instance: PathBuf,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum AttackCmd {
    /// Distribution-matching attack with unpaired data.
    Mmd(MmdArgs),
    /// Known-plaintext attack from paired data.
    Plaintext(PlaintextArgs),
    /// MMD attack, then transfer a classifier onto the published data.
    Transfer(TransferArgs),
    /// Fit T_π against a chosen pairing of raw and published samples.
    Permfit(PermfitArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum Preset {
    Separable,
    Subtle,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum TargetKind {
    Neuracrypt,
    Linear,
}

#[derive(Clone, Copy, ValueEnum)]
enum AttackerArg {
    Linear,
    TwoLayer,
}

#[derive(Args)]
struct ExperimentArgs {
    /// Directory of raw images; synthetic data when omitted.
    #[arg(long)]
    raw: Option<PathBuf>,
    /// Labels for --raw, CSV with header `file,label`.
    #[arg(long)]
    labels: Option<PathBuf>,
    #[arg(long, default_value_t = 300)]
    samples: usize,
    #[arg(long, default_value_t = 16)]
    size: usize,
    #[arg(long, value_enum, default_value_t = Preset::Separable)]
    preset: Preset,
    #[arg(long, default_value_t = 1)]
    data_seed: u64,
    #[arg(long, value_enum, default_value_t = TargetKind::Neuracrypt)]
    target: TargetKind,
    /// NeuraCrypt key to attack instead of one built from --target-seed.
    #[arg(long)]
    key: Option<PathBuf>,
    #[arg(long, default_value_t = 7)]
    target_seed: u64,
    #[arg(long, default_value_t = 4)]
    patch: usize,
    #[arg(long, default_value_t = 7)]
    depth: usize,
    #[arg(long, default_value_t = 8)]
    hidden: usize,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct TrainArgs {
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 500)]
    steps: usize,
    #[arg(long, default_value_t = 0.05)]
    lr: f64,
    #[arg(long, default_value_t = 8)]
    batch: usize,
    #[arg(long)]
    no_momentum: bool,
    /// Defaults to linear against a linear target, two-layer otherwise.
    #[arg(long, value_enum)]
    attacker: Option<AttackerArg>,
    #[arg(long, default_value_t = 32)]
    width: usize,
    #[arg(long, default_value_t = 3)]
    init_seed: u64,
}

#[derive(Args)]
struct MmdArgs {
    #[command(flatten)]
    exp: ExperimentArgs,
    #[command(flatten)]
    train: TrainArgs,
}

#[derive(Clone, Copy, ValueEnum)]
enum PlaintextArg {
    LeastSquares,
    Gradient,
}

#[derive(Args)]
struct PlaintextArgs {
    #[command(flatten)]
    exp: ExperimentArgs,
    #[command(flatten)]
    train: TrainArgs,
    #[arg(long, value_enum, default_value_t = PlaintextArg::LeastSquares)]
    method: PlaintextArg,
}

#[derive(Args)]
struct TransferArgs {
    #[command(flatten)]
    exp: ExperimentArgs,
    #[command(flatten)]
    train: TrainArgs,
    #[arg(long, default_value_t = 500)]
    transfer_steps: usize,
    #[arg(long, default_value_t = 0.5)]
    transfer_lr: f64,
}

#[derive(Clone, Copy, ValueEnum)]
enum Pairing {
    Identity,
    Random,
}

#[derive(Args)]
struct PermfitArgs {
    #[command(flatten)]
    exp: ExperimentArgs,
    #[command(flatten)]
    train: TrainArgs,
    #[arg(long, default_value_t = 32)]
    count: usize,
    #[arg(long, value_enum, default_value_t = Pairing::Random)]
    pairing: Pairing,
}

#[derive(Args)]
struct SynthArgs {
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 100)]
    samples: usize,
    #[arg(long, default_value_t = 16)]
    size: usize,
    #[arg(long, value_enum, default_value_t = Preset::Separable)]
    preset: Preset,
    #[arg(long, default_value_t = 1)]
    seed: u64,
}

#[derive(Args)]
struct UtilityArgs {
    #[arg(long, conflicts_with = "manifest", required_unless_present = "manifest")]
    pool: Option<PathBuf>,
    #[arg(long)]
    manifest: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ReportArgs {
    report: PathBuf,
    /// Anonymity-class table as CSV instead of text.
    #[arg(long)]
    csv: bool,
}

fn read_text(path: &Path) -> Result<String, IoError> {
    std::fs::read_to_string(path).map_err(|e| IoError::Data(format!("{}: {e}", path.display())))
}

fn emit_json<T: serde::Serialize>(value: &T, out: Option<&Path>) -> Result<(), IoError> {
    let text = serde_json::to_string_pretty(value).expect("report serializes") + "\n";
    match out {
        Some(p) => write_atomic(p, text.as_bytes()),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn list_images(dir: &Path) -> Result<Vec<PathBuf>, IoError> {
    let mut files: Vec<PathBuf> = std::fs::read_dir(dir)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| {
            p.extension()
                .and_then(|e| e.to_str())
                .is_some_and(|e| e.eq_ignore_ascii_case("pgm") || e.eq_ignore_ascii_case("nct"))
        })
        .collect();
    files.sort();
    if files.is_empty() {
        return Err(IoError::Data(format!("no .pgm or .nct files in {}", dir.display())));
    }
    Ok(files)
}

fn synth_config(preset: Preset, size: usize, samples: usize, seed: u64) -> SyntheticConfig {
    match preset {
        Preset::Separable => SyntheticConfig::new(size, size, samples, seed),
        Preset::Subtle => SyntheticConfig::subtle(size, size, samples, seed),
    }
}

fn load_experiment(a: &ExperimentArgs) -> Result<(Vec<Tensor>, Vec<bool>, Target), IoError> {
    let (images, labels) = match &a.raw {
        Some(dir) => {
            let files = list_images(dir)?;
            let images = files.iter().map(|p| load_image(p)).collect::<Result<Vec<_>, _>>()?;
            let labels = match &a.labels {
                Some(csv) => {
                    let rows = read_labels_csv(csv)?;
                    let names: Vec<String> = files
                        .iter()
                        .map(|p| {
                            let name = p.file_name().and_then(|n| n.to_str()).unwrap_or_default();
                            rows.iter()
                                .find(|(f, _)| f == name)
                                .map(|(_, l)| l.clone())
                                .ok_or_else(|| IoError::MissingLabel(name.to_owned()))
                        })
                        .collect::<Result<_, _>>()?;
                    binary_labels(&names)?
                }
                None => vec![false; images.len()],
            };
            (images, labels)
        }
        None => {
            let data = synth_generate(&synth_config(a.preset, a.size, a.samples, a.data_seed))?;
            let labels = data.labels.iter().map(|&l| l == 1).collect();
            (data.images, labels)
        }
    };
    let dims = images[0].dims().to_vec();
    let (channels, height, width) = match dims.as_slice() {
        [h, w] => (1, *h, *w),
        [c, h, w] => (*c, *h, *w),
        _ => return Err(IoError::ShapeMismatch(format!("image dims {dims:?}"))),
    };
    let target = match (&a.key, a.target) {
        (Some(k), _) => Target::NeuraCrypt(Encoder::new(EncoderKey::load(k)?)?),
        (None, TargetKind::Linear) => Target::Linear(LinearEncoder::new(a.target_seed, channels, a.patch, a.hidden)?),
        (None, TargetKind::Neuracrypt) => {
            let arch = ArchConfig {
                height,
                width,
                channels,
                patch: a.patch,
                depth: a.depth,
                hidden: a.hidden,
            };
            Target::NeuraCrypt(Encoder::new(EncoderKey::new(a.target_seed, arch)?)?)
        }
    };
    Ok((images, labels, target))
}

fn train_config(t: &TrainArgs) -> TrainConfig {
    TrainConfig {
        steps: t.steps,
        learning_rate: t.lr,
        momentum: !t.no_momentum,
        batch_size: t.batch,
        seed: t.seed,
    }
}

fn attacker_for(t: &TrainArgs, target: &Target, in_dim: usize) -> AttackerModel {
    let kind = match (t.attacker, target) {
        (Some(AttackerArg::Linear), _) | (None, Target::Linear(_)) => AttackerKind::Linear,
        _ => AttackerKind::TwoLayer,
    };
    AttackerModel::random(kind, in_dim, t.width, target.hidden(), t.init_seed)
}

fn finish(report: &AttackReport, out: Option<&Path>) -> Result<(), IoError> {
    eprintln!("{}", render_attack(report));
    emit_json(report, out)
}

fn run_attack(cmd: AttackCmd) -> Result<(), IoError> {
    match cmd {
        AttackCmd::Mmd(a) => {
            let (images, labels, target) = load_experiment(&a.exp)?;
            let s = Scenario::new(&images, &labels, &target)?;
            let mut m = attacker_for(&a.train, &target, s.raw[0].ncols());
            let r = s.mmd(&mut m, &train_config(&a.train), &MmdConfig::default())?;
            finish(&r, a.exp.out.as_deref())
        }
        AttackCmd::Plaintext(a) => {
            let (images, labels, target) = load_experiment(&a.exp)?;
            let s = Scenario::new(&images, &labels, &target)?;
            let method = match a.method {
                PlaintextArg::LeastSquares => PlaintextMethod::LeastSquares,
                PlaintextArg::Gradient => PlaintextMethod::GradientDescent {
                    attacker: attacker_for(&a.train, &target, s.raw[0].ncols()),
                    train: train_config(&a.train),
                },
            };
            finish(&s.plaintext(method)?.report, a.exp.out.as_deref())
        }
        AttackCmd::Transfer(a) => {
            let (images, labels, target) = load_experiment(&a.exp)?;
            let s = Scenario::new(&images, &labels, &target)?;
            let mut m = attacker_for(&a.train, &target, s.raw[0].ncols());
            let first = s.mmd(&mut m, &train_config(&a.train), &MmdConfig::default())?;
            eprintln!("{}", render_attack(&first));
            let cfg = TransferConfig {
                steps: a.transfer_steps,
                learning_rate: a.transfer_lr,
                seed: a.train.seed,
                ..TransferConfig::default()
            };
            finish(&s.transfer(&m, &cfg)?, a.exp.out.as_deref())
        }
        AttackCmd::Permfit(a) => {
            let (images, labels, target) = load_experiment(&a.exp)?;
            let s = Scenario::new(&images, &labels, &target)?;
            let k = a.count.min(s.len());
            let mut pi: Vec<usize> = (0..k).collect();
            if let Pairing::Random = a.pairing {
                use rand::seq::SliceRandom;
                use rand::SeedableRng;
                pi.shuffle(&mut rand_chacha::ChaCha8Rng::seed_from_u64(a.train.seed));
            }
            let mut m = attacker_for(&a.train, &target, s.raw[0].ncols());
            finish(&s.permutation_fit(&pi, &mut m, &train_config(&a.train))?, a.exp.out.as_deref())
        }
    }
}

/// Directory of `manifest` relative to the directory that will hold `out`.
fn relative_dir(manifest: &Path, out: &Path) -> Result<PathBuf, IoError> {
    let mdir = manifest.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    let odir = out.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    let (m, o) = (mdir.canonicalize()?, odir.canonicalize()?);
    Ok(m.strip_prefix(&o).map(Path::to_path_buf).unwrap_or(m))
}

fn run(cmd: Command) -> Result<(), IoError> {
    match cmd {
        Command::Keygen(a) => {
            let arch = ArchConfig {
                height: a.arch.height,
                width: a.arch.width,
                channels: a.arch.channels,
                patch: a.arch.patch,
                depth: a.arch.depth,
                hidden: a.arch.hidden,
            };
            let key = keygen(a.seed, arch, &a.out)?;
            let shape = serde_json::json!({
                "num_patches": key.arch.num_patches(),
                "hidden_dim": key.arch.hidden,
                "parameters": key.arch.parameter_count(),
            });
            emit_json(&shape, None)
        }
        Command::Encode(a) => {
            let manifest = encode_dataset(&EncodeRequest {
                key_path: a.key,
                inputs: list_images(&a.input)?,
                labels: read_labels_csv(&a.labels)?,
                out_dir: a.out.clone(),
                owner_id: a.owner,
                task: a.task,
                nonce_base: a.nonce_base,
            })?;
            eprintln!("encoded {} files into {}", manifest.files.len(), a.out.display());
            Ok(())
        }
        Command::Pool(a) => {
            let shards = a
                .manifests
                .iter()
                .map(|p| Ok((relative_dir(p, &a.out)?, PublicationManifest::from_json(&read_text(p)?)?)))
                .collect::<Result<Vec<_>, IoError>>()?;
            let pool = pool_merge(&shards)?;
            write_atomic(&a.out, pool.to_json().as_bytes())?;
            eprintln!("pooled {} files from {} owners", pool.files.len(), pool.owners.len());
            Ok(())
        }
        Command::Analyze(a) => {
            let report = analyze(&read_text(&a.instance)?, &caps_from_env()?)?;
            emit_json(&report, a.out.as_deref())
        }
        Command::Attack(cmd) => run_attack(cmd),
        Command::Synth(a) => {
            let data = synth_generate(&synth_config(a.preset, a.size, a.samples, a.seed))?;
            std::fs::create_dir_all(&a.out)?;
            let mut csv = String::from("file,label\n");
            for (i, (img, label)) in data.images.iter().zip(&data.labels).enumerate() {
                let name = format!("sample_{i:05}.pgm");
                write_atomic(&a.out.join(&name), &write_pgm(img)?)?;
                csv.push_str(&format!("{name},{label}\n"));
            }
            write_atomic(&a.out.join("labels.csv"), csv.as_bytes())?;
            eprintln!("wrote {} images to {}", data.images.len(), a.out.display());
            Ok(())
        }
        Command::Utility(a) => {
            let shards = match (&a.pool, &a.manifest) {
                (Some(p), _) => load_pool_shards(p)?,
                (None, Some(m)) => {
                    let manifest = PublicationManifest::from_json(&read_text(m)?)?;
                    let pool = pool_merge(&[(PathBuf::new(), manifest)])?;
                    pool_shards(&pool, m.parent().unwrap_or(Path::new("")))?
                }
                (None, None) => unreachable!("clap requires one of --pool, --manifest"),
            };
            let report = utility_pool(&shards, a.seed)?;
            eprint!("{}", render_utility(&report));
            emit_json(&report, a.out.as_deref())
        }
        Command::Report(a) => {
            let text = read_text(&a.report)?;
            if let Ok(r) = serde_json::from_str::<PrivacyReportDto>(&text) {
                print!("{}", if a.csv { render_lc_csv(&r) } else { render_privacy_report(&r) });
            } else if let Ok(r) = serde_json::from_str::<AttackReport>(&text) {
                println!("{}", render_attack(&r));
            } else if let Ok(r) = serde_json::from_str::<UtilityReport>(&text) {
                print!("{}", render_utility(&r));
            } else if let Ok(r) = serde_json::from_str::<PoolManifest>(&text) {
                println!("pool for {:?}: {} files from {} owners", r.task, r.files.len(), r.owners.len());
            } else {
                return Err(IoError::Format(format!("{} is not a known report", a.report.display())));
            }
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = e.print();
            return ExitCode::from(code as u8);
        }
    };
    match run(cli.cmd) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
