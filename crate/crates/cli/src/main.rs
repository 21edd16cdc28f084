use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use treehom_cli::commands::{self, Input};
use treehom_cli::{CliError, Outcome};
use treehom_core::decide::DEFAULT_LINEARIZE_CAP;
use treehom_core::DecideOptions;

#[derive(Parser)]
#[command(name = "treehom", version, about = "Regularity of homomorphic images of weighted tree automata")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct ImageArgs {
    /// Source grammar or automaton
    #[arg(long, requires = "hom", conflicts_with = "wtah")]
    wta: Option<PathBuf>,
    #[arg(long, requires = "wta")]
    hom: Option<PathBuf>,
    /// Image automaton given directly
    #[arg(long)]
    wtah: Option<PathBuf>,
}

impl ImageArgs {
    fn input(&self) -> Result<Input<'_>, CliError> {
        match (&self.wta, &self.hom, &self.wtah) {
            (Some(wta), Some(hom), None) => Ok(Input::Image { wta, hom }),
            (None, None, Some(path)) => Ok(Input::Automaton(path)),
            _ => Err(CliError::Arguments("--wta with --hom, --wtah")),
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Decide whether h(A) is regular
    Decide {
        #[arg(long)]
        wta: PathBuf,
        #[arg(long)]
        hom: PathBuf,
        /// Directory for the report and certificate
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, default_value_t = DEFAULT_LINEARIZE_CAP)]
        cap: usize,
    },
    /// Evaluate a tree
    Eval {
        #[arg(long, conflicts_with = "wtg")]
        wtah: Option<PathBuf>,
        #[arg(long)]
        wtg: Option<PathBuf>,
        #[arg(long)]
        tree: String,
    },
    /// Compare the image automaton with preimage sums
    OracleImage {
        #[arg(long)]
        wta: PathBuf,
        #[arg(long)]
        hom: PathBuf,
        /// Check this automaton instead of the constructed image
        #[arg(long)]
        wtah: Option<PathBuf>,
        #[arg(long, default_value_t = 4)]
        max_height: usize,
    },
    /// Check whether a homomorphism is tetris-free
    TetrisFree {
        #[arg(long)]
        hom: PathBuf,
        /// Also run the bounded search up to this height
        #[arg(long)]
        oracle_height: Option<usize>,
    },
    /// Decide the large duplication property
    Ldp(ImageArgs),
    /// Print a constraint-free grammar for the image
    Linearize {
        #[command(flatten)]
        image: ImageArgs,
        #[arg(long, default_value_t = DEFAULT_LINEARIZE_CAP)]
        cap: usize,
    },
}

fn run(cli: &Cli) -> Result<Outcome, CliError> {
    match &cli.command {
        Command::Decide { wta, hom, out, cap } => {
            commands::decide(wta, hom, out.as_deref(), &DecideOptions { linearize_cap: *cap })
        }
        Command::Eval { wtah, wtg, tree } => commands::eval(wtah.as_deref(), wtg.as_deref(), tree),
        Command::OracleImage { wta, hom, wtah, max_height } => {
            commands::oracle_image(wta, hom, wtah.as_deref(), *max_height)
        }
        Command::TetrisFree { hom, oracle_height } => commands::tetris_free(hom, *oracle_height),
        Command::Ldp(image) => commands::ldp(image.input()?),
        Command::Linearize { image, cap } => commands::linearize(image.input()?, *cap),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { treehom_cli::EXIT_ERROR as u8 } else { 0 });
        }
    };
    match run(&cli) {
        Ok(outcome) => {
            print!("{}", outcome.stdout);
            ExitCode::from(outcome.code as u8)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
