//! `ol2r` experiment driver.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use serde_json::Value;

use ol2r::click::ClickModelKind;
use ol2r::data::{gen_synthetic_split, load_letor_file, write_letor};
use ol2r::engine::{AlgorithmConfig, CandidateSplit};
use ol2r::experiment::{
    run_experiment, selection_ratio_experiment, sweep, write_file, Dataset, DatasetSpec,
    ExperimentConfig, RunResult, Summary, RATIO_CANDIDATES,
};
use ol2r::metrics::{offline_ndcg, DEFAULT_CUTOFF};
use ol2r::ranking::Ranker;

#[derive(Parser)]
#[command(name = "ol2r", version, about = "Simulated online learning to rank experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one algorithm for several repetitions and write per-iteration metrics.
    Run(RunArgs),
    /// Repeat `run` for each value of one parameter.
    Sweep {
        #[command(flatten)]
        run: RunArgs,
        /// One of m, alpha, k_g, k_h, n, epsilon, lag_k.
        #[arg(long)]
        parameter: String,
        /// Comma-separated values.
        #[arg(long, value_delimiter = ',', num_args = 1..)]
        values: Vec<f64>,
    },
    /// Mix null-space and uniform candidates and report how often each kind wins.
    Ratio {
        #[command(flatten)]
        run: RunArgs,
        /// Null-space candidates out of four; the rest are uniform.
        #[arg(long = "null_space", alias = "null-space")]
        null_space: usize,
    },
    /// Write a synthetic LETOR corpus and its reference ranker.
    GenSynthetic {
        #[arg(long, default_value_t = 20)]
        dim: usize,
        #[arg(long, default_value_t = 50)]
        train: usize,
        #[arg(long, default_value_t = 20)]
        test: usize,
        #[arg(long, default_value_t = 10)]
        docs: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// Output directory; receives train.txt, test.txt and reference.txt.
        #[arg(long)]
        out: PathBuf,
    },
    /// Score a saved ranker by mean NDCG@10.
    Eval {
        /// File with whitespace-separated weights.
        #[arg(long)]
        ranker: PathBuf,
        /// LETOR file, or a dataset spec whose test sets are scored.
        #[arg(long)]
        dataset: String,
        #[arg(long, value_delimiter = ',')]
        fold: Vec<usize>,
        #[arg(long, default_value_t = DEFAULT_CUTOFF)]
        cutoff: usize,
    },
}

/// Every setting may also come from the `--config` JSON object under the
/// same key; flags win.
#[derive(Args, Debug, Default)]
struct RunArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    algorithm: Option<String>,
    /// `synthetic[:d=..,train=..,test=..,docs=..,seed=..]` or a LETOR directory.
    #[arg(long)]
    dataset: Option<String>,
    #[arg(long = "click_model", alias = "click-model")]
    click_model: Option<String>,
    #[arg(long)]
    iterations: Option<u64>,
    #[arg(long)]
    repetitions: Option<u64>,
    #[arg(long)]
    seed: Option<u64>,
    /// CSV destination; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    delta: Option<f64>,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    n: Option<u64>,
    #[arg(long)]
    m: Option<u64>,
    #[arg(long = "k_g", alias = "k-g")]
    k_g: Option<u64>,
    #[arg(long = "k_h", alias = "k-h")]
    k_h: Option<u64>,
    #[arg(long = "t_g", alias = "t-g")]
    t_g: Option<u64>,
    #[arg(long = "t_h", alias = "t-h")]
    t_h: Option<u64>,
    #[arg(long)]
    epsilon: Option<f64>,
    #[arg(long = "lag_k", alias = "lag-k")]
    lag_k: Option<u64>,
    #[arg(long = "display_length", alias = "display-length")]
    display_length: Option<u64>,
    #[arg(long = "eval_every", alias = "eval-every")]
    eval_every: Option<u64>,
    #[arg(long)]
    threads: Option<u64>,
    /// Folds to use from a LETOR root, e.g. `1,2`.
    #[arg(long)]
    fold: Option<String>,
    /// Reference ranker for cosine tracking.
    #[arg(long)]
    reference: Option<PathBuf>,
}

const KEYS: [&str; 22] = [
    "algorithm",
    "dataset",
    "click_model",
    "iterations",
    "repetitions",
    "seed",
    "out",
    "delta",
    "alpha",
    "n",
    "m",
    "k_g",
    "k_h",
    "t_g",
    "t_h",
    "epsilon",
    "lag_k",
    "display_length",
    "eval_every",
    "threads",
    "fold",
    "reference",
];

struct Settings(BTreeMap<String, Value>);

impl Settings {
    fn load(args: &RunArgs) -> Result<Self> {
        let mut map = BTreeMap::new();
        if let Some(path) = &args.config {
            let text = fs::read_to_string(path)
                .with_context(|| format!("cannot read config {}", path.display()))?;
            let Value::Object(obj) = serde_json::from_str(&text)
                .with_context(|| format!("config {} is not valid JSON", path.display()))?
            else {
                bail!("config {} must be a JSON object", path.display());
            };
            for (k, v) in obj {
                if !KEYS.contains(&k.as_str()) {
                    bail!("unknown config key {k:?}");
                }
                if v.is_object() || v.is_array() {
                    bail!("config key {k:?} must be a scalar");
                }
                map.insert(k, v);
            }
        }
        let mut set = |k: &str, v: Option<Value>| {
            if let Some(v) = v {
                map.insert(k.to_string(), v);
            }
        };
        let s = |v: &Option<String>| v.clone().map(Value::from);
        let p = |v: &Option<PathBuf>| v.as_ref().map(|p| Value::from(p.to_string_lossy().into_owned()));
        let u = |v: Option<u64>| v.map(Value::from);
        let f = |v: Option<f64>| v.map(Value::from);
        set("algorithm", s(&args.algorithm));
        set("dataset", s(&args.dataset));
        set("click_model", s(&args.click_model));
        set("iterations", u(args.iterations));
        set("repetitions", u(args.repetitions));
        set("seed", u(args.seed));
        set("out", p(&args.out));
        set("delta", f(args.delta));
        set("alpha", f(args.alpha));
        set("n", u(args.n));
        set("m", u(args.m));
        set("k_g", u(args.k_g));
        set("k_h", u(args.k_h));
        set("t_g", u(args.t_g));
        set("t_h", u(args.t_h));
        set("epsilon", f(args.epsilon));
        set("lag_k", u(args.lag_k));
        set("display_length", u(args.display_length));
        set("eval_every", u(args.eval_every));
        set("threads", u(args.threads));
        set("fold", s(&args.fold));
        set("reference", p(&args.reference));
        Ok(Settings(map))
    }

    fn text(&self, key: &str) -> Option<String> {
        self.0.get(key).map(|v| match v {
            Value::String(s) => s.clone(),
            other => other.to_string(),
        })
    }

    fn number(&self, key: &str) -> Result<Option<f64>> {
        match self.0.get(key) {
            None => Ok(None),
            Some(Value::Number(n)) => Ok(n.as_f64()),
            Some(Value::String(s)) => s
                .parse()
                .map(Some)
                .with_context(|| format!("{key} must be a number, got {s:?}")),
            Some(other) => bail!("{key} must be a number, got {other}"),
        }
    }

    fn count(&self, key: &str) -> Result<Option<u64>> {
        match self.number(key)? {
            None => Ok(None),
            Some(v) if v >= 0.0 && v.fract() == 0.0 => Ok(Some(v as u64)),
            Some(v) => bail!("{key} must be a non-negative integer, got {v}"),
        }
    }
}

struct Job {
    config: ExperimentConfig,
    dataset: Dataset,
    out: Option<PathBuf>,
}

fn prepare(args: &RunArgs) -> Result<Job> {
    let s = Settings::load(args)?;
    let mut config = ExperimentConfig::default();
    if let Some(a) = s.text("algorithm") {
        config.algorithm = a.parse()?;
    }
    if let Some(c) = s.text("click_model") {
        config.click_model = c.parse::<ClickModelKind>()?;
    }
    if let Some(t) = s.count("iterations")? {
        config.iterations = t as usize;
    }
    if let Some(r) = s.count("repetitions")? {
        config.repetitions = r as usize;
    }
    if let Some(seed) = s.count("seed")? {
        config.base_seed = seed;
    }
    if let Some(e) = s.count("eval_every")? {
        config.eval_every = e as usize;
    }
    config.threads = s.count("threads")?.map(|t| t as usize);

    let mut params = AlgorithmConfig::default();
    // m first: it resets n to 4m unless n is given too
    let order = std::iter::once("m").chain(AlgorithmConfig::PARAMETERS.into_iter().filter(|&p| p != "m"));
    for name in order {
        if let Some(v) = s.number(name)? {
            params.set(name, v)?;
        }
    }
    config.params = params;
    config.validate()?;

    let folds: Vec<usize> = match s.text("fold") {
        None => Vec::new(),
        Some(f) => f
            .split(',')
            .map(|x| x.trim().parse().with_context(|| format!("bad fold {x:?}")))
            .collect::<Result<_>>()?,
    };
    let spec = DatasetSpec::parse(&s.text("dataset").unwrap_or_else(|| "synthetic".into()), &folds)?;
    let mut dataset = spec.load()?;
    if let Some(path) = s.text("reference") {
        dataset = dataset.with_reference(read_ranker(Path::new(&path))?.into_weights())?;
    }
    Ok(Job {
        config,
        dataset,
        out: s.text("out").map(PathBuf::from),
    })
}

fn read_ranker(path: &Path) -> Result<Ranker> {
    let text = fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
    text.trim()
        .parse()
        .with_context(|| format!("{} is not a ranker file", path.display()))
}

fn emit(out: Option<&Path>, csv: &str) -> Result<()> {
    match out {
        Some(path) => write_file(path, csv)?,
        None => std::io::stdout().write_all(csv.as_bytes())?,
    }
    Ok(())
}

fn report(label: &str, summary: Option<Summary>) {
    let Some(s) = summary else { return };
    let mut line = format!(
        "{label}: offline ndcg {:.4} ± {:.4}, cumulative ndcg {:.3} ± {:.3}",
        s.offline_ndcg.mean, s.offline_ndcg.std, s.cumulative_ndcg.mean, s.cumulative_ndcg.std
    );
    if let Some(c) = s.cosine_sim {
        line += &format!(", cosine {:.4} ± {:.4}", c.mean, c.std);
    }
    eprintln!("{line}");
}

fn describe(run: &RunResult) -> String {
    format!("{} / {}", run.algorithm, run.click_model)
}

fn main_inner(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Run(args) => {
            let job = prepare(&args)?;
            let run = run_experiment(&job.config, &job.dataset)?;
            emit(job.out.as_deref(), &run.to_csv())?;
            report(&describe(&run), run.summary());
        }
        Command::Sweep {
            run,
            parameter,
            values,
        } => {
            let job = prepare(&run)?;
            let res = sweep(&job.config, &job.dataset, &parameter, &values)?;
            emit(job.out.as_deref(), &res.to_csv())?;
            for (v, r) in &res.runs {
                report(&format!("{parameter}={v}"), r.summary());
            }
        }
        Command::Ratio { run, null_space } => {
            let job = prepare(&run)?;
            if null_space > RATIO_CANDIDATES {
                bail!("null_space must be between 0 and {RATIO_CANDIDATES}");
            }
            let split = CandidateSplit {
                null_space,
                uniform: RATIO_CANDIDATES - null_space,
            };
            let rep = selection_ratio_experiment(&job.config, &job.dataset, split)?;
            emit(job.out.as_deref(), &rep.to_csv())?;
        }
        Command::GenSynthetic {
            dim,
            train,
            test,
            docs,
            seed,
            out,
        } => {
            let (split, reference) = gen_synthetic_split(dim, train, test, docs, seed)?;
            fs::create_dir_all(&out).with_context(|| format!("cannot create {}", out.display()))?;
            for (name, set) in [("train.txt", &split.train), ("test.txt", &split.test)] {
                let path = out.join(name);
                let file = fs::File::create(&path).with_context(|| format!("cannot create {}", path.display()))?;
                write_letor(set, std::io::BufWriter::new(file))?;
            }
            write_file(out.join("reference.txt"), &format!("{}\n", Ranker::new(reference)))?;
        }
        Command::Eval {
            ranker,
            dataset,
            fold,
            cutoff,
        } => {
            let ranker = read_ranker(&ranker)?;
            let path = Path::new(&dataset);
            let sets = if path.is_file() {
                vec![load_letor_file(path)?]
            } else {
                DatasetSpec::parse(&dataset, &fold)?
                    .load()?
                    .folds
                    .into_iter()
                    .map(|f| f.test)
                    .collect()
            };
            let mut total = 0.0;
            for mut set in sets.iter().cloned() {
                if set.dim() < ranker.dim() {
                    set.pad_to(ranker.dim())?;
                }
                if set.dim() != ranker.dim() {
                    bail!("ranker has {} weights, dataset has {} features", ranker.dim(), set.dim());
                }
                total += offline_ndcg(&ranker, &set, cutoff);
            }
            println!("ndcg@{cutoff} {:.6}", total / sets.len() as f64);
        }
    }
    Ok(())
}

fn main() {
    if let Err(e) = main_inner(Cli::parse()) {
        eprintln!("error: {e:#}");
        std::process::exit(1);
    }
}
