//! `spe`: translate programs to sum-product expressions, condition them and
//! query them, with each stage persisted to a file.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use spe_core::format::{from_json, to_json};
use spe_core::inference::{condition, condition0};
use spe_core::outcomes::Outcome;
use spe_core::spe::{equality_point, NodeId, SpeGraph};
use spe_core::translator::{optimize, parse_event, spe_to_program, translate_source, TranslateOptions};
use spe_core::{Error, Var};

#[derive(Parser)]
#[command(name = "spe", version, about = "Exact inference with sum-product expressions")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Translate a program into an SPE file.
    Translate {
        #[arg(long)]
        program: PathBuf,
        #[arg(long)]
        spe_out: PathBuf,
        /// Skip factorization, deduplication and memoization.
        #[arg(long)]
        no_optimize: bool,
        /// Print node counts and timings.
        #[arg(long)]
        stats: bool,
    },
    /// Condition an SPE on an event of positive probability.
    Condition {
        #[command(flatten)]
        input: Input,
        #[arg(long)]
        event: String,
        #[arg(long)]
        spe_out: PathBuf,
    },
    /// Condition an SPE on equalities that may have probability zero.
    Constrain {
        #[command(flatten)]
        input: Input,
        #[arg(long)]
        event: String,
        #[arg(long)]
        spe_out: PathBuf,
    },
    /// Probability, density or samples from an SPE.
    Query {
        #[command(flatten)]
        input: Input,
        #[arg(long, value_enum)]
        query: QueryKind,
        #[arg(long)]
        event: Option<String>,
        #[arg(long, default_value_t = 10)]
        samples: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Comma-separated variables for `simulate`; all by default.
        #[arg(long)]
        vars: Option<String>,
        /// Write the `simulate` table here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Print a program whose translation is the given SPE.
    Reverse {
        #[command(flatten)]
        input: Input,
    },
    /// Deduplicate and factor an SPE file.
    Optimize {
        #[command(flatten)]
        input: Input,
        #[arg(long)]
        spe_out: PathBuf,
    },
}

#[derive(Args)]
#[group(required = true, multiple = false)]
struct Input {
    /// SPE file written by an earlier stage.
    #[arg(long)]
    spe_in: Option<PathBuf>,
    /// Program to translate in-process instead.
    #[arg(long)]
    program: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum QueryKind {
    Prob,
    Density,
    Simulate,
}

enum Failure {
    Usage(String),
    Translation(String),
    ZeroProbability(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::ZeroProbability | Error::ZeroDensity => Failure::ZeroProbability(e.to_string()),
            Error::Parse { .. } | Error::Restriction(_) | Error::Translate(_) => Failure::Translation(e.to_string()),
            other => Failure::Usage(other.to_string()),
        }
    }
}

fn io_err(path: &Path, e: std::io::Error) -> Failure {
    Failure::Usage(format!("{}: {e}", path.display()))
}

/// Seventeen significant digits, enough to round-trip any double.
fn fmt_prob(x: f64) -> String {
    if x == 0.0 || !x.is_finite() {
        return format!("{x}");
    }
    let mag = x.abs().log10().floor() as i32;
    if (-5..15).contains(&mag) {
        format!("{:.*}", (16 - mag).max(0) as usize, x)
    } else {
        format!("{x:.16e}")
    }
}

fn load(input: &Input) -> Result<(SpeGraph, NodeId), Failure> {
    if let Some(p) = &input.spe_in {
        let text = fs::read_to_string(p).map_err(|e| io_err(p, e))?;
        return from_json(&text).map_err(|e| Failure::Usage(format!("{}: {e}", p.display())));
    }
    let p = input.program.as_ref().expect("clap enforces one input");
    let src = fs::read_to_string(p).map_err(|e| io_err(p, e))?;
    let t = translate_source(&src, TranslateOptions::default())?;
    for w in &t.warnings {
        eprintln!("warning: {w}");
    }
    Ok((t.graph, t.root))
}

fn write_atomic(path: &Path, text: &str) -> Result<(), Failure> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| io_err(path, e))?;
    tmp.write_all(text.as_bytes()).map_err(|e| io_err(path, e))?;
    tmp.persist(path).map_err(|e| io_err(path, e.error))?;
    Ok(())
}

fn outcome_text(o: &Outcome) -> String {
    match o {
        Outcome::Real(r) => format!("{r:?}"),
        Outcome::Str(s) => format!("{s:?}"),
    }
}

fn run(cli: Cli) -> Result<(), Failure> {
    match cli.cmd {
        Cmd::Translate { program, spe_out, no_optimize, stats } => {
            let src = fs::read_to_string(&program).map_err(|e| io_err(&program, e))?;
            let opts = TranslateOptions { optimize: !no_optimize, ..Default::default() };
            let t = translate_source(&src, opts)?;
            for w in &t.warnings {
                eprintln!("warning: {w}");
            }
            write_atomic(&spe_out, &to_json(&t.graph, t.root))?;
            if stats {
                println!("nodes {}", t.stats.nodes);
                println!("tree_nodes {}", t.stats.tree_nodes);
                println!("seconds {:.6}", t.stats.seconds);
            }
        }
        Cmd::Condition { input, event, spe_out } => {
            let (mut g, root) = load(&input)?;
            let e = parse_event(&event, g.scope(root))?;
            let post = condition(&mut g, root, &e)?;
            write_atomic(&spe_out, &to_json(&g, post))?;
        }
        Cmd::Constrain { input, event, spe_out } => {
            let (mut g, root) = load(&input)?;
            let e = parse_event(&event, g.scope(root))?;
            let post = condition0(&mut g, root, &e)?;
            write_atomic(&spe_out, &to_json(&g, post))?;
        }
        Cmd::Query { input, query, event, samples, seed, vars, out } => {
            let (g, root) = load(&input)?;
            let need_event = || event.clone().ok_or_else(|| Failure::Usage("--event is required".into()));
            match query {
                QueryKind::Prob => {
                    let e = parse_event(&need_event()?, g.scope(root))?;
                    println!("{}", fmt_prob(g.prob(root, &e)?));
                }
                QueryKind::Density => {
                    let e = parse_event(&need_event()?, g.scope(root))?;
                    equality_point(&e)?;
                    let (deg, d) = g.density(root, &e)?;
                    println!("{deg} {}", fmt_prob(d));
                }
                QueryKind::Simulate => {
                    let vs: Vec<Var> = match vars {
                        Some(list) => list.split(',').map(|s| Var::new(s.trim())).collect(),
                        None => g.scope(root).iter().cloned().collect(),
                    };
                    let mut rng = ChaCha8Rng::seed_from_u64(seed);
                    let rows = g.simulate_vars(root, &vs, samples, &mut rng)?;
                    let mut text = vs.iter().map(|v| v.to_string()).collect::<Vec<_>>().join("\t");
                    text.push('\n');
                    for r in rows {
                        text.push_str(&r.iter().map(outcome_text).collect::<Vec<_>>().join("\t"));
                        text.push('\n');
                    }
                    match out {
                        Some(p) => write_atomic(&p, &text)?,
                        None => print!("{text}"),
                    }
                }
            }
        }
        Cmd::Reverse { input } => {
            let (g, root) = load(&input)?;
            print!("{}", spe_to_program(&g, root)?);
        }
        Cmd::Optimize { input, spe_out } => {
            let start = Instant::now();
            let (g, root) = load(&input)?;
            let (g2, r2, rep) = optimize(&g, root)?;
            write_atomic(&spe_out, &to_json(&g2, r2))?;
            println!("nodes_before {}", rep.nodes_before);
            println!("nodes_after {}", rep.nodes_after);
            println!("seconds {:.6}", start.elapsed().as_secs_f64());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(1)
        }
        Err(Failure::Translation(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(2)
        }
        Err(Failure::ZeroProbability(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(3)
        }
    }
}
