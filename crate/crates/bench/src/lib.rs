//! Experiment driver: JSON configs, seeded batches, success and effort
//! statistics, results CSV and plot output.

pub mod config;
pub mod error;
pub mod experiment;
pub mod report;

pub use config::{EngineKind, ExperimentConfig, Outputs, ProblemSpec, Sweep, SweepField};
pub use error::{BenchError, Result};
pub use experiment::{
    read_results_csv, render_summary, run_experiment, run_sweep, summarize, write_results_csv, ExperimentResults,
    RunRecord, Summary,
};
pub use report::{fitness_curve, render_svg, success_curve, success_vs_parameter, PlotTable};

/// Writes every output the config names.
pub fn write_outputs(results: &ExperimentResults, outputs: &Outputs) -> Result<()> {
    use std::fs::File;
    use std::io::BufWriter;
    let create = |p: &std::path::Path| -> Result<BufWriter<File>> {
        if let Some(dir) = p.parent().filter(|d| !d.as_os_str().is_empty()) {
            std::fs::create_dir_all(dir)?;
        }
        Ok(BufWriter::new(File::create(p)?))
    };
    if let Some(p) = &outputs.results_csv {
        write_results_csv(results, create(p)?)?;
    }
    if let Some(p) = &outputs.summary_json {
        let mut w = create(p)?;
        serde_json::to_writer_pretty(&mut w, &results.summary()).map_err(std::io::Error::from)?;
        std::io::Write::write_all(&mut w, b"\n")?;
    }
    let curve = fitness_curve(&results.runs);
    if let Some(p) = &outputs.plot_csv {
        curve.write_csv(create(p)?)?;
    }
    if let Some(p) = &outputs.plot_svg {
        let title = format!("{} on {}", engine_label(results.config.engine), results.config.problem.name);
        std::io::Write::write_all(&mut create(p)?, render_svg(&curve, &title).as_bytes())?;
    }
    Ok(())
}

fn engine_label(kind: EngineKind) -> &'static str {
    match kind {
        EngineKind::Mep => "MEP",
        EngineKind::Mslgp => "MS-LGP",
        EngineKind::Sslgp => "SS-LGP",
        EngineKind::Ifgp => "IFGP",
    }
}
