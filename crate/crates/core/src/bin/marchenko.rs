use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand};
use serde_json::{json, Value};

use marchenko::cli::{self, CliError, Command, Job, Preset};

#[derive(Parser)]
#[command(
    name = "marchenko",
    version,
    about = "Reflectionless Jacobi and Schrödinger operators from their representing measures"
)]
struct Cli {
    #[command(subcommand)]
    command: Sub,
}

#[derive(Subcommand)]
enum Sub {
    /// Admissibility report for a measure
    Check(Opts),
    /// Reconstruct a Jacobi window and compare against the continued-fraction oracle
    Jacobi(Opts),
    /// Integrate the moment flow and compare against the Riccati oracle
    Schrodinger(Opts),
    /// Reflectionless residual and asymptotics
    Verify(Opts),
    /// Full pipeline for a built-in measure
    Example {
        /// free, delta1, soliton or delta0
        name: String,
        #[command(flatten)]
        opts: Opts,
    },
    /// Run a job file whose "command" field picks the pipeline
    Run(Opts),
}

#[derive(Args, Default)]
struct Opts {
    /// Job or measure JSON file
    #[arg(long)]
    input: Option<PathBuf>,
    /// Output directory (artifacts go to standard output when absent)
    #[arg(long)]
    out: Option<PathBuf>,
    /// Truncation order N
    #[arg(long)]
    order: Option<usize>,
    #[arg(long)]
    eta: Option<f64>,
    #[arg(long)]
    grid: Option<usize>,
    #[arg(long)]
    xmax: Option<f64>,
    #[arg(long)]
    step: Option<f64>,
    /// Built-in measure instead of --input
    #[arg(long)]
    preset: Option<String>,
    #[arg(long)]
    epsilon: Option<f64>,
    #[arg(long)]
    mass: Option<f64>,
}

fn build_job(command: Option<Command>, name: Option<&str>, opts: &Opts) -> Result<Job, CliError> {
    let mut value = match (&opts.input, name.or(opts.preset.as_deref())) {
        (Some(path), _) => {
            let text = std::fs::read_to_string(path).map_err(|source| CliError::Io {
                path: path.clone(),
                source,
            })?;
            serde_json::from_str::<Value>(&text)?
        }
        (None, Some(preset)) => {
            let p = Preset::parse(preset, opts.epsilon, opts.mass)?;
            let mut job = Job::from_preset(Command::Example, p);
            if let Some(c) = command {
                job.command = c;
            }
            job.to_json()
        }
        (None, None) => {
            return Err(CliError::schema("", "--input or --preset is required"));
        }
    };
    if let (Some(c), Some(obj)) = (command, value.as_object_mut()) {
        obj.insert("command".into(), json!(c.name()));
    }
    let mut job = cli::parse_value(&value)?;
    let p = &mut job.params;
    if let Some(n) = opts.order {
        p.order = n;
    }
    if let Some(v) = opts.eta {
        p.eta = v;
    }
    if let Some(v) = opts.grid {
        p.grid = v;
    }
    if let Some(v) = opts.xmax {
        p.x_max = v;
    }
    if let Some(v) = opts.step {
        p.step = v;
    }
    if let Some(out) = &opts.out {
        p.out = Some(out.display().to_string());
    }
    // re-validate the overridden parameters through the schema
    cli::parse_value(&job.to_json()).map(|mut j| {
        j.preset = job.preset;
        j
    })
}

fn execute(cli: Cli) -> Result<i32, CliError> {
    let (command, name, opts) = match &cli.command {
        Sub::Check(o) => (Some(Command::Check), None, o),
        Sub::Jacobi(o) => (Some(Command::Jacobi), None, o),
        Sub::Schrodinger(o) => (Some(Command::Schrodinger), None, o),
        Sub::Verify(o) => (Some(Command::Verify), None, o),
        Sub::Example { name, opts } => (Some(Command::Example), Some(name.as_str()), opts),
        Sub::Run(o) => (None, None, o),
    };
    let job = build_job(command, name, opts)?;
    let outcome = cli::run(&job)?;
    match &job.params.out {
        Some(dir) => {
            for path in cli::emit(&outcome.artifacts, dir.as_ref())? {
                println!("{}", path.display());
            }
        }
        None => {
            for a in &outcome.artifacts {
                println!("# {}", a.name);
                print!("{}", a.contents);
            }
        }
    }
    Ok(outcome.status.exit_code())
}

fn main() -> anyhow::Result<ExitCode> {
    let cli = Cli::parse();
    match execute(cli) {
        Ok(code) => Ok(ExitCode::from(code as u8)),
        Err(e) => {
            let text = serde_json::to_string(&e.to_json()).context("serializing the error report")?;
            eprintln!("{text}");
            Ok(ExitCode::from(e.exit_code() as u8))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn exec(args: &[&str]) -> Result<i32, CliError> {
        let mut argv = vec!["marchenko"];
        argv.extend_from_slice(args);
        execute(Cli::try_parse_from(argv).unwrap())
    }

    #[test]
    fn example_pipeline_writes_artifacts() {
        let dir = tempfile::tempdir().unwrap();
        let out = dir.path().to_str().unwrap();
        assert_eq!(
            exec(&["example", "soliton", "--epsilon", "0.25", "--out", out]).unwrap(),
            0
        );
        for name in [
            "job.json",
            "check.json",
            "window.csv",
            "oracle.json",
            "verify.json",
            "boundary.csv",
        ] {
            assert!(dir.path().join(name).exists(), "{name}");
        }
        let window = std::fs::read_to_string(dir.path().join("window.csv")).unwrap();
        let a0 = window.lines().find(|l| l.starts_with("0,")).unwrap();
        assert_eq!(a0.split(',').nth(1), Some("2.0000000000000000e0"));
        // the echoed job reproduces the run
        let again = tempfile::tempdir().unwrap();
        let job = dir.path().join("job.json");
        let code = exec(&[
            "run",
            "--input",
            job.to_str().unwrap(),
            "--out",
            again.path().to_str().unwrap(),
        ])
        .unwrap();
        assert_eq!(code, 0);
        for name in ["window.csv", "oracle.json"] {
            let a = std::fs::read(dir.path().join(name)).unwrap();
            let b = std::fs::read(again.path().join(name)).unwrap();
            assert_eq!(a, b, "{name}");
        }
    }

    #[test]
    fn exit_codes() {
        let dir = tempfile::tempdir().unwrap();
        let out = dir.path().to_str().unwrap();
        assert_eq!(exec(&["check", "--preset", "delta1", "--out", out]).unwrap(), 2);
        assert_eq!(exec(&["check", "--preset", "free", "--out", out]).unwrap(), 0);
        assert_eq!(
            exec(&["jacobi", "--preset", "delta1", "--out", out])
                .unwrap_err()
                .exit_code(),
            2
        );

        let bad = dir.path().join("bad.json");
        std::fs::write(&bad, r#"{"setting":"jacobi","atoms":[]}"#).unwrap();
        let err = exec(&["check", "--input", bad.to_str().unwrap()]).unwrap_err();
        assert_eq!(err.exit_code(), 1);
        assert_eq!(err.to_json()["pointer"], json!("/R"));
        assert_eq!(exec(&["example", "nothing"]).unwrap_err().kind(), "UnknownPreset");
    }

    #[test]
    fn flags_override_and_validate() {
        let dir = tempfile::tempdir().unwrap();
        let out = dir.path().to_str().unwrap();
        let code = exec(&[
            "schrodinger",
            "--preset",
            "delta0",
            "--order",
            "12",
            "--xmax",
            "0.2",
            "--step",
            "0.01",
            "--out",
            out,
        ])
        .unwrap();
        assert_eq!(code, 0);
        let job: Value = serde_json::from_str(&std::fs::read_to_string(dir.path().join("job.json")).unwrap()).unwrap();
        assert_eq!((job["N"].as_u64(), job["x_max"].as_f64()), (Some(12), Some(0.2)));
        let trace = std::fs::read_to_string(dir.path().join("trace.csv")).unwrap();
        assert_eq!(trace.lines().count(), 1 + 41);
        let err = exec(&["schrodinger", "--preset", "delta0", "--order", "2"]).unwrap_err();
        assert!(matches!(err, CliError::Schema { ref pointer, .. } if pointer == "/N"));
    }
}
