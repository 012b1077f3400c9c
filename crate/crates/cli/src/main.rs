use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use ilrepair::dialogue::{paraphrase, Glosses};
use ilrepair::engine::{
    evaluate_corpus, run_session, synth, train_from_gold, Answerer, InteractiveAnswerer, OracleAnswerer,
    ScriptedAnswerer, SessionService, DEFAULT_BUDGETS,
};
use ilrepair::hypgen::{Policy, RepairConfig};
use ilrepair::ilspec::InterlinguaSpec;
use ilrepair::minet::{Networks, DEFAULT_LAMBDA};
use ilrepair::record::{read_corpus, read_record};
use ilrepair::{demo, read_fs};

#[derive(Parser)]
#[command(name = "repair", version, about = "Interactive repair of fragmented interlingua parses")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Inputs {
    /// Interlingua specification (defaults to the bundled demo spec).
    #[arg(long)]
    spec: Option<PathBuf>,
    /// Saved networks. Defaults to networks trained on generated demo data
    /// when the bundled spec is used, untrained networks otherwise.
    #[arg(long)]
    model: Option<PathBuf>,
    /// Gloss table (defaults to the bundled demo glosses).
    #[arg(long)]
    glosses: Option<PathBuf>,
    #[arg(long, default_value_t = DEFAULT_LAMBDA)]
    lambda: f64,
}

#[derive(Subcommand)]
enum Command {
    /// Repair one parser-output record.
    Run {
        record: PathBuf,
        #[command(flatten)]
        inputs: Inputs,
        /// Ask the questions on the terminal.
        #[arg(long, conflicts_with_all = ["gold", "answers"])]
        interactive: bool,
        /// Answer from this gold structure instead of the record's own.
        #[arg(long)]
        gold: Option<PathBuf>,
        /// Scripted answers, e.g. `y,n,y`; later questions get no.
        #[arg(long, value_delimiter = ',')]
        answers: Option<Vec<String>>,
        #[arg(long, default_value_t = 10)]
        max_questions: usize,
        #[arg(long, default_value = "meta")]
        policy: Policy,
        #[arg(long)]
        enable_combine: bool,
        /// Save the reinforced networks here.
        #[arg(long)]
        model_out: Option<PathBuf>,
    },
    /// Oracle evaluation of every policy over a corpus.
    Eval {
        corpus: PathBuf,
        #[command(flatten)]
        inputs: Inputs,
        #[arg(long, value_delimiter = ',', default_values_t = DEFAULT_BUDGETS)]
        budgets: Vec<usize>,
        /// Policies to run (default: the eight strategies and meta).
        #[arg(long, value_delimiter = ',')]
        policies: Option<Vec<Policy>>,
        /// Carry reinforcement from record to record.
        #[arg(long)]
        persistent: bool,
        #[arg(long)]
        enable_combine: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Train networks from the gold structures of a corpus.
    Train {
        corpus: PathBuf,
        #[command(flatten)]
        inputs: Inputs,
        #[arg(long)]
        model_out: PathBuf,
    },
    /// Serve repair sessions over HTTP.
    Serve {
        #[command(flatten)]
        inputs: Inputs,
        #[arg(long, default_value_t = 8080)]
        port: u16,
        #[arg(long, default_value = "127.0.0.1")]
        host: String,
        #[arg(long, default_value_t = 10)]
        max_questions: usize,
    },
    /// Write a synthetic corpus generated from the spec.
    Synth {
        #[arg(long)]
        spec: Option<PathBuf>,
        #[arg(long, default_value_t = synth::DEFAULT_SIZE)]
        count: usize,
        #[arg(long, default_value_t = synth::DEFAULT_SEED)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

fn load_spec(path: Option<&PathBuf>) -> Result<InterlinguaSpec> {
    match path {
        Some(p) => InterlinguaSpec::load(&read(p)?).with_context(|| format!("loading {}", p.display())),
        None => Ok(demo::spec()),
    }
}

impl Inputs {
    fn load(&self) -> Result<(InterlinguaSpec, Networks, Glosses)> {
        let spec = load_spec(self.spec.as_ref())?;
        let nets = match &self.model {
            Some(p) => Networks::load(&read(p)?).with_context(|| format!("loading {}", p.display()))?,
            None if self.spec.is_none() && self.lambda == DEFAULT_LAMBDA => demo::trained_networks(&spec),
            None => Networks::for_spec(&spec, self.lambda),
        };
        let glosses = match &self.glosses {
            Some(p) => Glosses::parse(&read(p)?)?,
            None => demo::glosses(),
        };
        Ok((spec, nets, glosses))
    }
}

fn write_out(path: Option<&PathBuf>, text: &str) -> Result<()> {
    match path {
        Some(p) => fs::write(p, text).with_context(|| format!("writing {}", p.display())),
        None => {
            match io::stdout().write_all(text.as_bytes()) {
                Err(e) if e.kind() != io::ErrorKind::BrokenPipe => Err(e.into()),
                _ => Ok(()),
            }
        }
    }
}

fn parse_answers(words: &[String]) -> Result<Vec<bool>> {
    words
        .iter()
        .map(|w| match w.trim().to_ascii_lowercase().as_str() {
            "y" | "yes" => Ok(true),
            "n" | "no" => Ok(false),
            other => bail!("answers must be y or n, got `{other}`"),
        })
        .collect()
}

fn main() -> Result<()> {
    match Cli::parse().command {
        Command::Run {
            record,
            inputs,
            interactive,
            gold,
            answers,
            max_questions,
            policy,
            enable_combine,
            model_out,
        } => {
            let (spec, mut nets, glosses) = inputs.load()?;
            let rec = read_record(&read(&record)?)?;
            let gold = match &gold {
                Some(p) => Some(read_fs(&read(p)?).with_context(|| format!("parsing {}", p.display()))?),
                None => rec.gold.clone(),
            };
            let config = RepairConfig {
                policy,
                max_questions,
                enable_combine,
                lambda: inputs.lambda,
                ..RepairConfig::default()
            };
            let mut answerer: Box<dyn Answerer> = if interactive {
                Box::new(InteractiveAnswerer {
                    input: io::stdin().lock(),
                    output: io::stdout(),
                })
            } else if let Some(words) = &answers {
                Box::new(ScriptedAnswerer::new(parse_answers(words)?, false))
            } else {
                match &gold {
                    Some(g) => Box::new(OracleAnswerer { gold: g, spec: &spec }),
                    None => bail!("the record has no gold structure; use --interactive, --answers or --gold"),
                }
            };
            let res = run_session(&rec.output, &spec, &mut nets, &glosses, answerer.as_mut(), &config, gold.as_ref());
            drop(answerer);
            let mut out = String::new();
            if !interactive {
                for (i, e) in res.transcript.iter().enumerate() {
                    out += &format!("Q{}: {} {}\n", i + 1, e.question, if e.answer { "yes" } else { "no" });
                }
            }
            out += &format!("Result: {}\n", res.final_ilt);
            out += &format!("Paraphrase: {}\n", paraphrase(&res.final_ilt, &glosses));
            if let (Some(b), Some(a)) = (res.accuracy_before, res.accuracy_after) {
                out += &format!("Accuracy: {b:.4} -> {a:.4}\n");
            }
            write_out(None, &out)?;
            if let Some(p) = model_out {
                fs::write(&p, nets.save()).with_context(|| format!("writing {}", p.display()))?;
            }
        }
        Command::Eval {
            corpus,
            inputs,
            budgets,
            policies,
            persistent,
            enable_combine,
            out,
        } => {
            let (spec, nets, glosses) = inputs.load()?;
            let records = read_corpus(&read(&corpus)?)?;
            let policies = policies.unwrap_or_else(Policy::all);
            let base = RepairConfig {
                enable_combine,
                lambda: inputs.lambda,
                ..RepairConfig::default()
            };
            let report = evaluate_corpus(&records, &spec, &nets, &glosses, &budgets, &policies, &base, persistent)?;
            write_out(out.as_ref(), &report.to_tsv())?;
        }
        Command::Train {
            corpus,
            inputs,
            model_out,
        } => {
            let (spec, mut nets, _) = inputs.load()?;
            let records = read_corpus(&read(&corpus)?)?;
            let events = train_from_gold(&records, &spec, &mut nets);
            fs::write(&model_out, nets.save()).with_context(|| format!("writing {}", model_out.display()))?;
            eprintln!("{events} training events from {} records", records.len());
        }
        Command::Serve {
            inputs,
            port,
            host,
            max_questions,
        } => {
            let (spec, nets, glosses) = inputs.load()?;
            let config = RepairConfig {
                max_questions,
                lambda: inputs.lambda,
                ..RepairConfig::default()
            };
            let service = Arc::new(SessionService::new(spec, nets, glosses, config));
            let runtime = tokio::runtime::Runtime::new()?;
            runtime.block_on(async move {
                let listener = tokio::net::TcpListener::bind((host.as_str(), port)).await?;
                eprintln!("listening on {}", listener.local_addr()?);
                axum::serve(listener, repair_cli::router(service)).await?;
                Ok::<_, anyhow::Error>(())
            })?;
        }
        Command::Synth { spec, count, seed, out } => {
            let spec = load_spec(spec.as_ref())?;
            write_out(out.as_ref(), &demo::synthetic_text(&spec, count, seed))?;
        }
    }
    Ok(())
}
