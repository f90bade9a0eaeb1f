mod commands;
mod report;

use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use quiverforge::formats::JsonScalar;
use quiverforge::{GaussRat, Novikov, Rational};

use report::{Report, UsageError};

#[derive(Parser, Debug)]
#[command(name = "quiverforge", version, about = "Exact checks for quiver algebras, representations, monads and algebroid stacks")]
pub struct Cli {
    /// Machine-readable report.
    #[arg(long, global = true)]
    pub json: bool,
    /// Degree bound for ideal membership proofs.
    #[arg(long = "effort-degree", global = true, default_value_t = 8)]
    pub effort: usize,
    #[arg(long, global = true, value_enum, default_value_t = Field::Q)]
    pub field: Field,
    /// Seed for randomized searches.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    #[command(subcommand)]
    pub cmd: Cmd,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Field {
    /// Rationals.
    Q,
    /// Gaussian rationals.
    Qi,
    /// Truncated Novikov series over the Gaussian rationals.
    Novikov,
}

#[derive(Subcommand, Debug)]
pub enum Cmd {
    /// Intersection graphs: form classification, affine δ, roots.
    Graph {
        #[command(subcommand)]
        cmd: GraphCmd,
    },
    /// Normal forms, ideal membership and dga checks.
    Algebra {
        #[command(subcommand)]
        cmd: AlgebraCmd,
    },
    /// Matrix representations and charts.
    Rep {
        #[command(subcommand)]
        cmd: RepCmd,
    },
    /// Stability verdicts, witnesses, gauge fixing and Maurer-Cartan regions.
    Stability {
        #[command(subcommand)]
        cmd: StabilityCmd,
    },
    /// Monads and framed-functor complexes.
    Monad {
        #[command(subcommand)]
        cmd: MonadCmd,
    },
    /// Quiver algebroid stacks.
    Stack {
        #[command(subcommand)]
        cmd: StackCmd,
    },
}

#[derive(Subcommand, Debug)]
pub enum GraphCmd {
    Classify {
        #[arg(long)]
        file: String,
    },
    Delta {
        #[arg(long)]
        file: String,
    },
    Roots {
        #[arg(long)]
        file: String,
        /// Comma-separated upper bounds per vertex (default 1 everywhere).
        #[arg(long)]
        bound: Option<String>,
    },
}

#[derive(Args, Debug)]
pub struct ElementArgs {
    /// Algebra document.
    #[arg(long)]
    pub file: String,
    /// Expression such as "x y - y x", or a JSON term list.
    #[arg(long, allow_hyphen_values = true)]
    pub element: String,
}

#[derive(Subcommand, Debug)]
pub enum AlgebraCmd {
    Reduce(ElementArgs),
    Member(ElementArgs),
    /// Framed preprojective dga of a graph.
    DgCheck {
        #[arg(long)]
        file: String,
        /// Vertices to frame.
        #[arg(long, value_delimiter = ',')]
        framing: Vec<String>,
        /// VERTEX=EXPR: add EXPR to d(t_VERTEX).
        #[arg(long)]
        perturb: Vec<String>,
    },
}

#[derive(Subcommand, Debug)]
pub enum RepCmd {
    Check {
        #[arg(long)]
        file: String,
    },
    Moment {
        #[arg(long)]
        file: String,
    },
    ChartVerify {
        #[command(flatten)]
        source: StackSource,
        /// Only this open.
        #[arg(long)]
        chart: Option<String>,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    Framed,
    Unframed,
}

#[derive(Subcommand, Debug)]
pub enum StabilityCmd {
    Check {
        #[arg(long)]
        file: String,
        /// Comma-separated weights on the unframed vertices.
        #[arg(long, allow_hyphen_values = true)]
        zeta: String,
        #[arg(long, value_enum, default_value_t = ModeArg::Framed)]
        mode: ModeArg,
    },
    Witness {
        #[arg(long)]
        file: String,
        #[arg(long)]
        witness: String,
        #[arg(long, allow_hyphen_values = true)]
        zeta: String,
        #[arg(long, value_enum, default_value_t = ModeArg::Framed)]
        mode: ModeArg,
    },
    /// Gauge-fix a rank-one affine A_n representation for chart i.
    Normalize {
        #[arg(long)]
        file: String,
        #[arg(long)]
        n: usize,
        #[arg(long)]
        i: usize,
    },
    McRegion {
        #[arg(long)]
        n: usize,
        /// JSON {"sphere": j, "u", "v"} or {"torus": i, "x", "y"}, inline or a file.
        #[arg(long)]
        point: String,
        /// JSON list of [A_k, A'_k] pairs, inline or a file.
        #[arg(long)]
        areas: String,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum KindArg {
    Monad,
    FramedFunctor,
}

#[derive(Subcommand, Debug)]
pub enum MonadCmd {
    Build {
        #[arg(long)]
        file: String,
        #[arg(long, value_enum, default_value_t = KindArg::Monad)]
        kind: KindArg,
    },
    D2 {
        #[arg(long)]
        file: String,
        #[arg(long, value_enum, default_value_t = KindArg::Monad)]
        kind: KindArg,
    },
    /// Ranks of the ADHM monad on a square grid of points around the origin.
    Eval {
        #[arg(long)]
        adhm: String,
        #[arg(long, default_value_t = 5)]
        grid: usize,
        /// Print the rank profile as CSV.
        #[arg(long)]
        csv: bool,
    },
    Exactness {
        #[arg(long)]
        file: String,
        #[arg(long, default_value_t = 3)]
        level: usize,
        #[arg(long, default_value_t = 2)]
        slack: usize,
        #[arg(long, value_enum, default_value_t = KindArg::FramedFunctor)]
        kind: KindArg,
    },
}

#[derive(Args, Debug)]
#[group(required = true, multiple = false)]
pub struct StackSource {
    /// an:<n>, an-torus:<n>, d4 or framed-a1.
    #[arg(long)]
    pub builtin: Option<String>,
    /// Stack descriptor JSON.
    #[arg(long)]
    pub file: Option<String>,
}

#[derive(Subcommand, Debug)]
pub enum StackCmd {
    Verify {
        #[command(flatten)]
        source: StackSource,
    },
}

impl Cmd {
    fn name(&self) -> String {
        let (a, b) = match self {
            Cmd::Graph { cmd } => ("graph", format!("{cmd:?}")),
            Cmd::Algebra { cmd } => ("algebra", format!("{cmd:?}")),
            Cmd::Rep { cmd } => ("rep", format!("{cmd:?}")),
            Cmd::Stability { cmd } => ("stability", format!("{cmd:?}")),
            Cmd::Monad { cmd } => ("monad", format!("{cmd:?}")),
            Cmd::Stack { cmd } => ("stack", format!("{cmd:?}")),
        };
        let head: String = b.chars().take_while(|c| c.is_alphanumeric()).collect();
        let mut sub = String::new();
        for (k, c) in head.chars().enumerate() {
            if c.is_uppercase() && k > 0 {
                sub.push('-');
            }
            sub.push(c.to_ascii_lowercase());
        }
        format!("{a} {sub}")
    }
}

fn init_threads() -> Result<(), UsageError> {
    let Ok(v) = std::env::var("QUIVERFORGE_THREADS") else { return Ok(()) };
    let n: usize = v.trim().parse().map_err(|_| UsageError(format!("QUIVERFORGE_THREADS must be a positive integer, got `{v}`")))?;
    if n == 0 {
        return Err(UsageError("QUIVERFORGE_THREADS must be positive".into()));
    }
    rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    Ok(())
}

fn dispatch<K: JsonScalar>(cli: &Cli) -> Result<Report, UsageError> {
    commands::run::<K>(cli)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 64 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let result = init_threads().and_then(|_| match cli.field {
        Field::Q => dispatch::<Rational>(&cli),
        Field::Qi => dispatch::<GaussRat>(&cli),
        Field::Novikov => dispatch::<Novikov>(&cli),
    });
    match result {
        Ok(r) => {
            let field = match cli.field {
                Field::Q => "q",
                Field::Qi => "qi",
                Field::Novikov => "novikov",
            };
            let meta = [("field", json!(field)), ("effort_degree", json!(cli.effort))];
            println!("{}", r.render(&cli.cmd.name(), &meta, cli.json));
            ExitCode::from(r.status.code() as u8)
        }
        Err(UsageError(msg)) => {
            if cli.json {
                println!("{}", serde_json::to_string_pretty(&json!({ "schema_version": quiverforge::formats::SCHEMA_VERSION, "command": cli.cmd.name(), "status": "error", "error": msg })).unwrap());
            }
            eprintln!("error: {msg}");
            ExitCode::from(64)
        }
    }
}
