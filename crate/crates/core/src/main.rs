use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use nlfem::config::RunConfig;
use nlfem::runner::{resolve_out_dir, run_study, write_artifacts, OutputOptions};
use nlfem::Error;

#[derive(Parser)]
#[command(name = "nlfem", version, about = "Nonlocal Poisson finite element solver")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a single solve or a refinement study described by a JSON config.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Output directory; overrides `output_dir` in the config.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Matrix Market dump of the finest level's stiffness matrix.
        #[arg(long)]
        dump_matrix: Option<PathBuf>,
        /// CSV dump of the finest level's full-ball inner rule.
        #[arg(long)]
        dump_inner_rule: Option<PathBuf>,
        /// Worker threads for assembly (default: all cores).
        #[arg(long)]
        threads: Option<usize>,
    },
}

fn run(command: Command) -> Result<(), Error> {
    let Command::Run { config, out, dump_matrix, dump_inner_rule, threads } = command;
    if let Some(n) = threads {
        if n == 0 {
            return Err(Error::Config("--threads must be positive".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Error::Config(format!("cannot set up {n} threads: {e}")))?;
    }
    let cfg = RunConfig::from_path(&config)?;
    let study = run_study(&cfg)?;
    for level in &study.levels {
        let r = &level.record;
        println!("h={} delta={} dofs={} l2={:e} h1={:e} residual={:e}", r.h, r.delta, r.dofs, r.l2, r.h1, level.solution.residual);
    }
    for (name, fit) in [("l2", study.report.l2), ("h1", study.report.h1)] {
        if let Some(fit) = fit {
            println!("{name} slope {:.3} (all levels {:.3})", fit.slope(), fit.all.slope);
        }
    }
    let opts = OutputOptions { out_dir: resolve_out_dir(&cfg, out.as_deref()), dump_matrix, dump_inner_rule };
    for path in write_artifacts(&cfg, &study, &opts)? {
        println!("wrote {}", path.display());
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
