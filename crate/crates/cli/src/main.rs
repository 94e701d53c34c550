//! `betarisk`: train and inspect Beta-distribution crash-risk models.
//!
//! Exit codes: 0 success, 2 usage or configuration error, 3 I/O error,
//! 4 numeric failure. All outputs are byte-stable across identical
//! invocations; no artifact embeds timestamps or host details.

use clap::{Parser, Subcommand};
use std::process::ExitCode;

mod commands;
mod config;
mod csvio;
mod geojson;
mod svg;

#[derive(Parser, Debug)]
#[command(name = "betarisk", version, about = "Per-location crash-risk Beta distributions: synthetic data, training, calibration, ensembles")]
struct Cli {
    #[command(subcommand)]
    command: Commands,
}

#[derive(Subcommand, Debug)]
enum Commands {
    /// Generate a seeded synthetic dataset and write it as JSON.
    GenData(commands::GenDataArgs),
    /// Train a two-head model on a dataset and write run artifacts.
    Train(commands::TrainArgs),
    /// Evaluate a checkpoint on a dataset split and write a metrics report.
    Eval(commands::EvalArgs),
    /// Evaluate a deep ensemble of checkpoints with fused predictions.
    Ensemble(commands::EnsembleArgs),
    /// Sweep predicted-parameter space and compare true vs surrogate W2 loss.
    W2Analysis(commands::W2Args),
    /// Train the fixed loss-weight grid and tabulate validation metrics.
    Ablation(commands::AblationArgs),
    /// Export per-location risk as GeoJSON plus an SVG scatter map.
    Riskmap(commands::RiskmapArgs),
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Commands::GenData(args) => commands::gen_data(&args),
        Commands::Train(args) => commands::train(&args),
        Commands::Eval(args) => commands::eval(&args),
        Commands::Ensemble(args) => commands::ensemble(&args),
        Commands::W2Analysis(args) => commands::w2_analysis(&args),
        Commands::Ablation(args) => commands::ablation(&args),
        Commands::Riskmap(args) => commands::riskmap(&args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(exit_code_for(&err))
        }
    }
}

fn exit_code_for(err: &betarisk_core::Error) -> u8 {
    use betarisk_core::Error;
    match err {
        Error::InvalidParameter(_)
        | Error::Domain(_)
        | Error::Structural(_)
        | Error::UndefinedMetric(_)
        | Error::Parse(_) => 2,
        Error::Io(_) => 3,
        Error::NonConvergence { .. } | Error::NonFiniteGradient { .. } => 4,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use betarisk_core::Error;

    #[test]
    fn exit_codes_partition_the_error_enum() {
        assert_eq!(exit_code_for(&Error::InvalidParameter("x".into())), 2);
        assert_eq!(exit_code_for(&Error::Domain("x".into())), 2);
        assert_eq!(exit_code_for(&Error::Structural("x".into())), 2);
        assert_eq!(exit_code_for(&Error::UndefinedMetric("x".into())), 2);
        assert_eq!(exit_code_for(&Error::Parse("x".into())), 2);
        let io = Error::Io(std::io::Error::new(std::io::ErrorKind::NotFound, "x"));
        assert_eq!(exit_code_for(&io), 3);
        let nc = Error::NonConvergence { what: "x".into(), iterations: 1 };
        assert_eq!(exit_code_for(&nc), 4);
        let nf = Error::NonFiniteGradient { group: "g".into() };
        assert_eq!(exit_code_for(&nf), 4);
    }

    #[test]
    fn cli_parses_every_subcommand() {
        Cli::try_parse_from(["betarisk", "gen-data", "--n", "10", "--out", "d.json"]).unwrap();
        Cli::try_parse_from(["betarisk", "train", "--data", "d.json", "--out-dir", "r"]).unwrap();
        Cli::try_parse_from(["betarisk", "eval", "--checkpoint", "c.json", "--data", "d.json", "--out", "r.json"]).unwrap();
        Cli::try_parse_from([
            "betarisk", "ensemble", "--checkpoints", "a.json", "b.json", "--data", "d.json", "--out", "r.json",
        ])
        .unwrap();
        Cli::try_parse_from(["betarisk", "w2-analysis", "--out-dir", "w2"]).unwrap();
        Cli::try_parse_from(["betarisk", "ablation", "--data", "d.json", "--out", "t.txt"]).unwrap();
        Cli::try_parse_from([
            "betarisk", "riskmap", "--checkpoint", "c.json", "--data", "d.json", "--out-geojson", "m.geojson",
            "--out-svg", "m.svg",
        ])
        .unwrap();
    }

    #[test]
    fn ensemble_requires_two_checkpoints() {
        let err = Cli::try_parse_from([
            "betarisk", "ensemble", "--checkpoints", "a.json", "--data", "d.json", "--out", "r.json",
        ])
        .unwrap_err();
        assert_eq!(err.exit_code(), 2);
    }

    #[test]
    fn grid_and_target_specs_are_validated_at_parse_time() {
        let err = Cli::try_parse_from(["betarisk", "w2-analysis", "--grid", "0.5:10:0", "--out-dir", "w2"])
            .unwrap_err();
        assert_eq!(err.exit_code(), 2);
        let err = Cli::try_parse_from(["betarisk", "w2-analysis", "--target", "2", "--out-dir", "w2"])
            .unwrap_err();
        assert_eq!(err.exit_code(), 2);
    }
}
