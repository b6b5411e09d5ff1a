use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use gcnboost_cli::{cmd_ablate, cmd_generate, cmd_report, cmd_train, GenerateArgs, RunArgs};

/// Pseudo-label boosted GCN classification over artwork knowledge graphs.
#[derive(Debug, Parser)]
#[command(name = "gcnboost", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Write a synthetic dataset directory.
    Generate(GenerateArgs),
    /// Run the strategy grid and write report.json / report.csv.
    Ablate(RunArgs),
    /// Train one strategy and write checkpoints and loss histories.
    Train(RunArgs),
    /// Print the table of an existing report directory.
    Report {
        #[arg(long)]
        out: PathBuf,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Generate(args) => cmd_generate(args).map(|ds| {
            eprintln!(
                "wrote {} artworks over {} categories to {}",
                ds.artworks.len(),
                ds.num_categories(),
                args.out.display()
            );
        }),
        Command::Ablate(args) => cmd_ablate(args).map(|report| {
            for w in &report.warnings {
                eprintln!("warning: {w}");
            }
            print!("{}", report.table());
        }),
        Command::Train(args) => cmd_train(args).map(|summary| {
            for w in &summary.warnings {
                eprintln!("warning: {w}");
            }
            for t in &summary.tasks {
                let acc = t.result.accuracy.map_or("-".to_string(), |a| format!("{a:.3}"));
                println!("{:<12} accuracy {acc}  stopped at {}", t.result.category, t.stopped_at);
            }
        }),
        Command::Report { out } => cmd_report(out).map(|table| print!("{table}")),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
