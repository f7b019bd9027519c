//! The reproduction bundle: consistency table with onset brackets, six
//! learning traces and a manifest describing each file.

use std::io::Write;
use std::path::Path;

use dilemma_core::qlearning::write_trace;
use dilemma_core::{
    best_response, equilibrium_scan, learn_phase, DeterministicStrategy, LearnerConfig,
    NamedStrategy, NoisyStrategy, Payoffs,
};

use crate::{create_dir, default_grid, table_csv, usage, write_file, CliError};

#[derive(Debug, Clone, PartialEq)]
pub struct ReproduceSettings {
    pub realizations: usize,
    pub steps: u64,
    pub seed: u64,
    /// Gamma at which the table's verdict column is evaluated.
    pub table_gamma: f64,
}

pub fn settings(quick: bool, seed: u64) -> ReproduceSettings {
    ReproduceSettings {
        realizations: if quick { 100 } else { 1000 },
        steps: 200_000,
        seed,
        table_gamma: 0.9,
    }
}

pub const TABLE_FILE: &str = "table1.csv";
pub const MANIFEST_FILE: &str = "manifest.csv";
pub const MANIFEST_HEADER: &str = "file,contents,learned_policy,exact_best_response";

#[derive(Debug, Clone, Copy)]
pub struct TraceSpec {
    pub file: &'static str,
    pub opponent: NamedStrategy,
    pub gamma: f64,
    pub noise: f64,
}

pub const TRACES: [TraceSpec; 6] = [
    TraceSpec { file: "trace_wsls_g0.9.csv", opponent: NamedStrategy::Wsls, gamma: 0.9, noise: 0.0 },
    TraceSpec { file: "trace_wsls_g0.2.csv", opponent: NamedStrategy::Wsls, gamma: 0.2, noise: 0.0 },
    TraceSpec { file: "trace_grim_g0.9.csv", opponent: NamedStrategy::Grim, gamma: 0.9, noise: 0.0 },
    TraceSpec { file: "trace_grim_g0.2.csv", opponent: NamedStrategy::Grim, gamma: 0.2, noise: 0.0 },
    TraceSpec { file: "trace_grim_noisy_g0.9.csv", opponent: NamedStrategy::Grim, gamma: 0.9, noise: 0.01 },
    TraceSpec { file: "trace_grim_noisy_g0.2.csv", opponent: NamedStrategy::Grim, gamma: 0.2, noise: 0.01 },
];

/// Writes every artifact into `dir` and returns the file names in manifest
/// order (the manifest itself last).
pub fn cmd_reproduce<W: Write>(
    settings: &ReproduceSettings,
    dir: &Path,
    out: &mut W,
) -> Result<Vec<String>, CliError> {
    create_dir(dir)?;
    let payoffs = Payoffs::standard();
    let mut manifest = format!("{MANIFEST_HEADER}\n");
    let mut written = Vec::new();
    let log = |out: &mut W, line: String| {
        writeln!(out, "{line}").map_err(|e| CliError::io(Path::new("<stdout>"), e))
    };

    let scan = equilibrium_scan(payoffs, &default_grid().values).map_err(usage)?;
    let game = payoffs.with_gamma(settings.table_gamma).map_err(usage)?;
    write_file(&dir.join(TABLE_FILE), table_csv(&game, &scan.onsets)?.as_bytes())?;
    manifest.push_str(&format!(
        "{TABLE_FILE},\"consistency of the 16 cases for payoffs 4,0,6,1 at gamma {} with equilibrium onset brackets\",,\n",
        settings.table_gamma
    ));
    written.push(TABLE_FILE.to_string());
    log(out, format!("wrote {TABLE_FILE}"))?;

    let config = LearnerConfig {
        realizations: settings.realizations,
        steps_per_phase: settings.steps,
        seed: settings.seed,
        ..Default::default()
    };
    for spec in TRACES {
        let game = payoffs.with_gamma(spec.gamma).map_err(usage)?;
        let own = DeterministicStrategy::named(spec.opponent);
        let opponent = NoisyStrategy::new(own.swap_perspective().to_memory_one(), spec.noise)
            .map_err(usage)?;
        let trace = learn_phase(&game, &opponent, &config, 1, None)?;
        let mut buf = Vec::new();
        write_trace(&trace, &mut buf).map_err(|e| CliError::io(&dir.join(spec.file), e))?;
        write_file(&dir.join(spec.file), &buf)?;
        let exact = best_response(&game, &opponent.effective())?.strategy();
        manifest.push_str(&format!(
            "{},\"mean Q over {} realizations of {} steps vs {} with error {} at gamma {}, seed {}\",{},{}\n",
            spec.file,
            config.realizations,
            config.steps_per_phase,
            own.label(),
            spec.noise,
            spec.gamma,
            config.seed,
            trace.mean_greedy().label(),
            exact.label(),
        ));
        written.push(spec.file.to_string());
        log(
            out,
            format!("wrote {} (learned {}, exact {})", spec.file, trace.mean_greedy().label(), exact.label()),
        )?;
    }
    write_file(&dir.join(MANIFEST_FILE), manifest.as_bytes())?;
    written.push(MANIFEST_FILE.to_string());
    log(out, format!("wrote {MANIFEST_FILE}"))?;
    Ok(written)
}
