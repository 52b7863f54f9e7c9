use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use datavideo_core::pipeline::{inspect, run_pipeline, validate_project, ExportKind, InspectError, ProjectConfig};

#[derive(Parser)]
#[command(
    name = "datavideo",
    version,
    about = "Turn a data table into a narrated, animated data video"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Export {
    Html,
    Video,
    Both,
}

#[derive(Subcommand)]
enum Command {
    /// Run the whole pipeline and write a project directory.
    Run {
        #[arg(long)]
        input: Option<PathBuf>,
        #[arg(long)]
        title: Option<String>,
        #[arg(long)]
        config: PathBuf,
        /// Project directory; overrides `output_dir` from the config.
        #[arg(long)]
        output: Option<PathBuf>,
        /// Use the mock backend and mock tools.
        #[arg(long)]
        mock: bool,
        #[arg(long)]
        no_cache: bool,
        #[arg(long, value_enum)]
        export: Option<Export>,
    },
    /// Summarize one stage of a finished or failed run.
    Inspect {
        #[arg(long)]
        project: PathBuf,
        #[arg(long)]
        stage: String,
    },
    /// Re-run every validator on the persisted artifacts.
    Validate {
        #[arg(long)]
        project: PathBuf,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::Run {
            input,
            title,
            config,
            output,
            mock,
            no_cache,
            export,
        } => {
            let mut cfg = match ProjectConfig::load(&config) {
                Ok(c) => c,
                Err(e) => return fail(&e.to_string(), e.exit_code()),
            };
            if input.is_some() {
                cfg.input_csv = input;
            }
            if title.is_some() {
                cfg.title = title;
            }
            if let Some(dir) = output {
                cfg.output_dir = dir;
            }
            if mock {
                cfg.force_mock();
            }
            cfg.no_cache |= no_cache;
            if let Some(e) = export {
                cfg.export = match e {
                    Export::Html => ExportKind::Html,
                    Export::Video => ExportKind::Video,
                    Export::Both => ExportKind::Both,
                };
            }
            match run_pipeline(&cfg) {
                Ok(manifest) => {
                    println!("project: {}", cfg.output_dir.display());
                    for s in &manifest.stages {
                        println!(
                            "  {:<17} {} artifact(s), {} advisory(ies)",
                            s.stage.as_str(),
                            s.artifacts.len(),
                            s.validation.advisories.len()
                        );
                    }
                    ExitCode::SUCCESS
                }
                Err(e) => fail(&e.to_string(), e.exit_code()),
            }
        }
        Command::Inspect { project, stage } => match inspect(&project, &stage) {
            Ok(text) => {
                print!("{text}");
                ExitCode::SUCCESS
            }
            Err(e) => fail(&e.to_string(), inspect_code(&e)),
        },
        Command::Validate { project } => match validate_project(&project) {
            Ok(results) => {
                let mut passing = true;
                for r in &results {
                    let status = if r.report.is_passing() { "ok" } else { "FAILED" };
                    passing &= r.report.is_passing();
                    println!("{:<17} {status}", r.stage.as_str());
                    for v in &r.report.violations {
                        println!("  error    {v}");
                    }
                    for v in &r.report.advisories {
                        println!("  advisory {v}");
                    }
                }
                if passing {
                    ExitCode::SUCCESS
                } else {
                    ExitCode::from(3)
                }
            }
            Err(e) => fail(&e.to_string(), inspect_code(&e)),
        },
    }
}

fn inspect_code(e: &InspectError) -> i32 {
    match e {
        InspectError::Io(_) => 1,
        _ => 2,
    }
}

fn fail(message: &str, code: i32) -> ExitCode {
    eprintln!("error: {message}");
    ExitCode::from(code as u8)
}
