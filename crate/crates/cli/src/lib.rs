//! Command-line front end over `dilemma_core`.
//!
//! Exit codes: 0 success, 1 solver failure, 2 invalid arguments, 3 boundary
//! gamma under `--strict`, 4 output failure.

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use thiserror::Error;

use dilemma_core::closed_form::ClosedFormError;
use dilemma_core::equilibrium::{EquilibriumScan, Onset};
use dilemma_core::qlearning::{
    format_sig12, write_tally, write_trace, InitialState, QLearningError, PERSISTENT_VISITS,
};
use dilemma_core::solver::SolverError;
use dilemma_core::{
    alternating_dynamics, alternating_qlearning, best_response, best_response_region,
    case_consistent, equilibrium_scan, learn_phase, DeterministicStrategy, FixedOpponent,
    GammaGrid, LearnerConfig, LearningTrace, MemoryOneStrategy, NoisyStrategy, Payoffs, PdGame,
    QTable, StateProfile,
};

pub mod reproduce;

pub const STRATEGY_HELP: &str = "\
Strategies (--opp): ALLC, REPEAT, TFT, WSLS, GRIM, AGRIM, AWSLS, ATFT, AREPEAT, ALLD,
or four bits giving the cooperation decision after the previous round's
(own, opponent) actions in the order CC,CD,DC,DD (1 = cooperate), e.g.
1001 = WSLS, 1010 = TFT, 1000 = GRIM. best-response also accepts four
comma-separated cooperation probabilities in the same order.";

#[derive(Debug, Parser)]
#[command(name = "dilemma", version, about = "Best responses, equilibria and Q-learning for memory-one strategies in the repeated prisoner's dilemma")]
#[command(after_help = STRATEGY_HELP)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Exact best response to a fixed opponent.
    #[command(after_help = STRATEGY_HELP)]
    BestResponse(BestResponseArgs),
    /// Symmetric equilibria over a gamma grid, or the 16-case table.
    Scan(ScanArgs),
    /// Tabular Q-learning against a fixed opponent.
    #[command(after_help = STRATEGY_HELP)]
    Qlearn(QlearnArgs),
    /// Alternating exact best-response dynamics.
    #[command(after_help = STRATEGY_HELP)]
    Dynamics(DynamicsArgs),
    /// Regenerate the table, threshold brackets and learning traces.
    Reproduce(ReproduceArgs),
}

#[derive(Debug, Args)]
pub struct BestResponseArgs {
    /// Opponent strategy in its own perspective.
    #[arg(long)]
    pub opp: MemoryOneStrategy,
    #[arg(long)]
    pub gamma: f64,
    /// Payoffs R,S,T,P.
    #[arg(long, default_value = "4,0,6,1")]
    pub payoffs: Payoffs,
    /// Opponent implementation-error probability.
    #[arg(long, default_value_t = 0.0)]
    pub noise: f64,
    /// Fail with exit code 3 when gamma sits on a region boundary.
    #[arg(long)]
    pub strict: bool,
    /// Also write the optimal action values to this CSV file.
    #[arg(long)]
    pub csv: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ScanArgs {
    #[arg(long, default_value = "4,0,6,1")]
    pub payoffs: Payoffs,
    /// Single gamma.
    #[arg(long, conflicts_with = "gamma_grid")]
    pub gamma: Option<f64>,
    /// Grid start:end:step (default 0.01:0.99:0.01).
    #[arg(long)]
    pub gamma_grid: Option<GammaGrid>,
    /// Print the 16-case consistency table at --gamma (default 0.9).
    #[arg(long, conflicts_with = "gamma_grid")]
    pub table1: bool,
    /// Write the printed table as CSV.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum StartState {
    Uniform,
    Cc,
    Cd,
    Dc,
    Dd,
}

impl From<StartState> for InitialState {
    fn from(s: StartState) -> Self {
        match s {
            StartState::Uniform => InitialState::Uniform,
            StartState::Cc => InitialState::Fixed(StateProfile::CC),
            StartState::Cd => InitialState::Fixed(StateProfile::CD),
            StartState::Dc => InitialState::Fixed(StateProfile::DC),
            StartState::Dd => InitialState::Fixed(StateProfile::DD),
        }
    }
}

#[derive(Debug, Args)]
pub struct QlearnArgs {
    /// Fixed opponent; with --phases, player 2's initial strategy.
    #[arg(long)]
    pub opp: DeterministicStrategy,
    #[arg(long)]
    pub gamma: f64,
    #[arg(long, default_value = "4,0,6,1")]
    pub payoffs: Payoffs,
    /// Opponent implementation-error probability.
    #[arg(long, default_value_t = 0.0)]
    pub noise: f64,
    #[arg(long, default_value_t = 0.2)]
    pub eta: f64,
    #[arg(long, default_value_t = 0.01)]
    pub epsilon: f64,
    #[arg(long, default_value_t = 1000)]
    pub realizations: usize,
    /// Steps per learning phase.
    #[arg(long, default_value_t = 200_000)]
    pub steps: u64,
    #[arg(long, default_value_t = 100)]
    pub sample_every: u64,
    #[arg(long, default_value_t = 0.0)]
    pub initial_q: f64,
    #[arg(long, value_enum, default_value_t = StartState::Uniform)]
    pub initial_state: StartState,
    #[arg(long, env = "DILEMMA_SEED", default_value_t = 0)]
    pub seed: u64,
    /// Run the alternating protocol for this many phases.
    #[arg(long)]
    pub phases: Option<usize>,
    /// Keep each learner's Q tables across its phases.
    #[arg(long, requires = "phases")]
    pub carry_q: bool,
    /// Output directory for CSVs.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct DynamicsArgs {
    #[arg(long)]
    pub gamma: f64,
    #[arg(long, default_value = "4,0,6,1")]
    pub payoffs: Payoffs,
    /// Player 2's initial strategy; all sixteen when omitted.
    #[arg(long)]
    pub opp: Option<DeterministicStrategy>,
    #[arg(long, default_value_t = 64)]
    pub max_games: usize,
}

#[derive(Debug, Args)]
pub struct ReproduceArgs {
    #[arg(long, default_value = "reproduction")]
    pub out: PathBuf,
    /// 100 realizations per trace instead of 1000.
    #[arg(long)]
    pub quick: bool,
    #[arg(long, env = "DILEMMA_SEED", default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Boundary(String),
    #[error("failed to write {}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error(transparent)]
    Solver(#[from] SolverError),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Solver(_) => 1,
            CliError::Usage(_) => 2,
            CliError::Boundary(_) => 3,
            CliError::Io { .. } => 4,
        }
    }

    pub(crate) fn io(path: &Path, source: io::Error) -> Self {
        CliError::Io {
            path: path.to_path_buf(),
            source,
        }
    }
}

impl From<QLearningError> for CliError {
    fn from(e: QLearningError) -> Self {
        match e {
            QLearningError::Io { path, source } => CliError::Io {
                path: path.into(),
                source,
            },
            other => CliError::Usage(other.to_string()),
        }
    }
}

fn usage(e: impl ToString) -> CliError {
    CliError::Usage(e.to_string())
}

fn stdout_err(e: io::Error) -> CliError {
    CliError::io(Path::new("<stdout>"), e)
}

pub(crate) fn write_file(path: &Path, contents: &[u8]) -> Result<(), CliError> {
    fs::write(path, contents).map_err(|e| CliError::io(path, e))
}

pub(crate) fn create_dir(path: &Path) -> Result<(), CliError> {
    fs::create_dir_all(path).map_err(|e| CliError::io(path, e))
}

pub fn run<W: Write>(cli: &Cli, out: &mut W) -> Result<(), CliError> {
    match &cli.command {
        Command::BestResponse(args) => cmd_best_response(args, out),
        Command::Scan(args) => cmd_scan(args, out),
        Command::Qlearn(args) => cmd_qlearn(args, out),
        Command::Dynamics(args) => cmd_dynamics(args, out),
        Command::Reproduce(args) => {
            reproduce::cmd_reproduce(&reproduce::settings(args.quick, args.seed), &args.out, out)
                .map(|_| ())
        }
    }
}

fn q_csv(q: &QTable) -> String {
    let mut text = QTable::labels().join(",");
    text.push('\n');
    let row: Vec<String> = q.values().iter().map(|v| format_sig12(*v)).collect();
    text.push_str(&row.join(","));
    text.push('\n');
    text
}

fn q_line(q: &QTable) -> String {
    QTable::labels()
        .iter()
        .zip(q.values())
        .map(|(l, v)| format!("{l}={}", format_sig12(*v)))
        .collect::<Vec<_>>()
        .join(" ")
}

fn strategy_text(s: &DeterministicStrategy) -> String {
    if s.name().is_some() {
        format!("{} ({})", s.label(), s.bit_string())
    } else {
        s.bit_string()
    }
}

pub fn cmd_best_response<W: Write>(args: &BestResponseArgs, out: &mut W) -> Result<(), CliError> {
    let game = args.payoffs.with_gamma(args.gamma).map_err(usage)?;
    let noisy = NoisyStrategy::new(args.opp, args.noise).map_err(usage)?;
    let joint = noisy.swap_perspective().effective();
    let br = best_response(&game, &joint)?;
    let w = |out: &mut W, s: String| writeln!(out, "{s}").map_err(stdout_err);

    let opp_text = match args.opp.to_deterministic() {
        Some(d) => strategy_text(&d),
        None => args.opp.to_string(),
    };
    w(out, format!("opponent       {opp_text}, noise {}", args.noise))?;
    w(out, format!("game           {}", game_text(&game)))?;
    w(out, format!("best response  {}", strategy_text(&br.strategy())))?;
    w(out, format!("q*             {}", q_line(&br.q_star)))?;
    let ties = if br.tie_states.is_empty() {
        "none".to_string()
    } else {
        br.tie_states.iter().map(|s| s.to_string()).collect::<Vec<_>>().join(" ")
    };
    w(out, format!("ties           {ties}"))?;

    let fixed = args
        .opp
        .to_deterministic()
        .filter(|_| args.noise == 0.0)
        .and_then(|d| FixedOpponent::from_strategy(&d));
    if let Some(opponent) = fixed {
        match best_response_region(opponent, &game) {
            Ok(region) => {
                w(out, format!("closed form    {}", region.describe()))?;
                w(out, format!("max deviation  {:.3e}", region.q.max_abs_diff(&br.q_star)))?;
            }
            Err(e @ ClosedFormError::BoundaryGamma { .. }) if !args.strict => {
                eprintln!("warning: {e}");
                w(out, "closed form    none (gamma on a region boundary)".into())?;
            }
            Err(e) => return Err(CliError::Boundary(e.to_string())),
        }
    }
    if let Some(path) = &args.csv {
        write_file(path, q_csv(&br.q_star).as_bytes())?;
    }
    Ok(())
}

fn game_text(game: &PdGame) -> String {
    format!(
        "R={} S={} T={} P={} gamma={}",
        game.r(),
        game.s(),
        game.t(),
        game.p(),
        game.gamma()
    )
}

pub const TABLE_HEADER: &str = "case,bits,strategy,condition,gamma,consistent,onset_lower,onset_upper";

/// One row per case: its consistency condition, the verdict at `game`'s
/// gamma and, when given, the bracket where it joins the equilibrium set.
pub fn table_csv(game: &PdGame, onsets: &[Onset]) -> Result<String, CliError> {
    let mut text = format!("{TABLE_HEADER}\n");
    for id in 1..=16u8 {
        let sol = case_consistent(game, id).map_err(usage)?;
        let (lo, hi) = onsets
            .iter()
            .find(|o| o.strategy == sol.strategy)
            .map_or((String::new(), String::new()), |o| {
                (format_sig12(o.lower), format_sig12(o.upper))
            });
        text.push_str(&format!(
            "{id},{},{},\"{}\",{},{},{lo},{hi}\n",
            sol.strategy.bit_string(),
            sol.strategy.label(),
            sol.condition,
            format_sig12(game.gamma()),
            if sol.consistent { "Yes" } else { "No" },
        ));
    }
    Ok(text)
}

pub fn default_grid() -> GammaGrid {
    GammaGrid::new(0.01, 0.99, 0.01).expect("valid grid")
}

pub fn cmd_scan<W: Write>(args: &ScanArgs, out: &mut W) -> Result<(), CliError> {
    if args.table1 {
        let game = args.payoffs.with_gamma(args.gamma.unwrap_or(0.9)).map_err(usage)?;
        let scan = equilibrium_scan(args.payoffs, &default_grid().values).map_err(usage)?;
        let text = table_csv(&game, &scan.onsets)?;
        writeln!(out, "{:>4}  {:<4}  {:<11}  {:<3}  condition", "case", "bits", "strategy", "ok")
            .map_err(stdout_err)?;
        for id in 1..=16u8 {
            let sol = case_consistent(&game, id).map_err(usage)?;
            writeln!(
                out,
                "{id:>4}  {}  {:<11}  {:<3}  {}",
                sol.strategy.bit_string(),
                sol.strategy.label(),
                if sol.consistent { "Yes" } else { "No" },
                sol.condition
            )
            .map_err(stdout_err)?;
        }
        if let Some(path) = &args.out {
            write_file(path, text.as_bytes())?;
        }
        return Ok(());
    }

    let grid = match (&args.gamma, &args.gamma_grid) {
        (Some(g), _) => vec![*g],
        (None, Some(grid)) => grid.values.clone(),
        (None, None) => default_grid().values,
    };
    let scan = equilibrium_scan(args.payoffs, &grid).map_err(usage)?;
    let text = scan_csv(&scan);
    out.write_all(text.as_bytes()).map_err(stdout_err)?;
    for onset in &scan.onsets {
        writeln!(
            out,
            "onset {}: {:.7} +- {:.1e} (bracket {} .. {})",
            onset.strategy.label(),
            onset.midpoint(),
            0.5 * (onset.upper - onset.lower),
            format_sig12(onset.lower),
            format_sig12(onset.upper)
        )
        .map_err(stdout_err)?;
    }
    if let Some(path) = &args.out {
        write_file(path, text.as_bytes())?;
    }
    Ok(())
}

fn join_labels<'a>(it: impl Iterator<Item = &'a DeterministicStrategy>) -> String {
    it.map(|s| s.label()).collect::<Vec<_>>().join(";")
}

pub fn scan_csv(scan: &EquilibriumScan) -> String {
    let mut text = String::from("gamma,equilibria,near_boundary,ties\n");
    for (gamma, report) in &scan.reports {
        text.push_str(&format!(
            "{},{},{},{}\n",
            format_sig12(*gamma),
            join_labels(report.equilibria.iter()),
            join_labels(report.near_boundary.iter().map(|(s, _)| s)),
            join_labels(report.ties.iter().map(|t| &t.strategy)),
        ));
    }
    text
}

fn learner_config(args: &QlearnArgs) -> LearnerConfig {
    LearnerConfig {
        eta: args.eta,
        epsilon: args.epsilon,
        initial_q: args.initial_q,
        steps_per_phase: args.steps,
        sample_every: args.sample_every,
        realizations: args.realizations,
        seed: args.seed,
        initial_state: args.initial_state.into(),
        convergence_stop: None,
        carry_q: args.carry_q,
    }
}

/// Text summary of a learning phase against `opponent` (learner frame).
pub fn learning_summary(
    game: &PdGame,
    opponent: &NoisyStrategy,
    trace: &LearningTrace,
) -> Result<String, CliError> {
    let exact = best_response(game, &opponent.effective())?;
    let mean = trace.final_mean_q();
    let mut text = String::new();
    text.push_str("entry  mean_q        target        rel_err     visits\n");
    for (i, label) in QTable::labels().iter().enumerate() {
        let (got, want) = (mean.values()[i], exact.q_star.values()[i]);
        let rel = if want == 0.0 { (got - want).abs() } else { ((got - want) / want).abs() };
        let marker = if trace.mean_visits[i] >= PERSISTENT_VISITS { "" } else { "  (rare)" };
        text.push_str(&format!(
            "{label}   {:<12}  {:<12}  {:<10.3e}  {:.1}{marker}\n",
            format_sig12(got),
            format_sig12(want),
            rel,
            trace.mean_visits[i]
        ));
    }
    let learned = trace.mean_greedy();
    text.push_str(&format!("learned policy (greedy on mean Q)  {}\n", strategy_text(&learned)));
    text.push_str(&format!("exact best response                {}\n", strategy_text(&exact.strategy())));
    text.push_str(&format!("modal realization policy           {}\n", strategy_text(&trace.modal_policy())));
    let mut tally: Vec<_> = trace.final_greedy.iter().collect();
    tally.sort_by(|a, b| b.1.cmp(a.1).then(a.0.cmp(b.0)));
    let parts: Vec<String> = tally.iter().map(|(s, c)| format!("{} {c}", strategy_text(s))).collect();
    text.push_str(&format!("realization tally                  {}\n", parts.join(", ")));
    if learned != exact.strategy() {
        text.push_str(
            "note: the learned policy differs from the exact best response. Entries marked \
             rare were updated only a few times per realization and stay near their initial \
             value; against an opponent that never forgives, states left after a defection \
             are not revisited.\n",
        );
    }
    Ok(text)
}

pub fn cmd_qlearn<W: Write>(args: &QlearnArgs, out: &mut W) -> Result<(), CliError> {
    let game = args.payoffs.with_gamma(args.gamma).map_err(usage)?;
    let config = learner_config(args);
    config.validate()?;
    if let Some(dir) = &args.out {
        create_dir(dir)?;
    }
    if let Some(phases) = args.phases {
        let outcomes = alternating_qlearning(&game, args.opp, &config, phases, args.noise)?;
        let mut text = format!("phase,learner,learned,modal,{}\n", QTable::labels().join(","));
        for o in &outcomes {
            let qs: Vec<String> = o.mean_q.values().iter().map(|v| format_sig12(*v)).collect();
            text.push_str(&format!(
                "{},{},{},{},{}\n",
                o.phase,
                o.learner.number(),
                o.learned.bit_string(),
                o.modal.bit_string(),
                qs.join(",")
            ));
            writeln!(
                out,
                "phase {:>3}  player {} learned {}  (modal {})",
                o.phase,
                o.learner.number(),
                strategy_text(&o.learned),
                strategy_text(&o.modal)
            )
            .map_err(stdout_err)?;
        }
        if let Some(dir) = &args.out {
            write_file(&dir.join("phases.csv"), text.as_bytes())?;
        }
        return Ok(());
    }

    let opponent = NoisyStrategy::new(args.opp.swap_perspective().to_memory_one(), args.noise)
        .map_err(usage)?;
    let trace = learn_phase(&game, &opponent, &config, 1, None)?;
    let mut summary = format!(
        "opponent {}, noise {}, {}\nrealizations {}, steps {}, eta {}, epsilon {}, seed {}\n",
        strategy_text(&args.opp),
        args.noise,
        game_text(&game),
        config.realizations,
        config.steps_per_phase,
        config.eta,
        config.epsilon,
        config.seed
    );
    summary.push_str(&learning_summary(&game, &opponent, &trace)?);
    out.write_all(summary.as_bytes()).map_err(stdout_err)?;
    if let Some(dir) = &args.out {
        let mut buf = Vec::new();
        write_trace(&trace, &mut buf).map_err(stdout_err)?;
        write_file(&dir.join("trace.csv"), &buf)?;
        buf.clear();
        write_tally(&trace, &mut buf).map_err(stdout_err)?;
        write_file(&dir.join("tally.csv"), &buf)?;
        write_file(&dir.join("summary.txt"), summary.as_bytes())?;
    }
    Ok(())
}

pub fn cmd_dynamics<W: Write>(args: &DynamicsArgs, out: &mut W) -> Result<(), CliError> {
    let game = args.payoffs.with_gamma(args.gamma).map_err(usage)?;
    let starts: Vec<DeterministicStrategy> = match args.opp {
        Some(s) => vec![s],
        None => DeterministicStrategy::all().collect(),
    };
    for start in starts {
        let trace = alternating_dynamics(&game, start, args.max_games)?;
        let path: Vec<String> = trace.steps.iter().map(|s| s.learned.label()).collect();
        let outcome = if let Some((p1, p2)) = trace.fixed_point {
            format!("fixed point ({}, {})", p1.label(), p2.label())
        } else if let Some(cycle) = &trace.cycle {
            let pairs: Vec<String> = cycle.iter().map(|(a, b)| format!("({}, {})", a.label(), b.label())).collect();
            format!("cycle {}", pairs.join(" -> "))
        } else if let Some((n, states)) = &trace.tie {
            let s: Vec<String> = states.iter().map(|s| s.to_string()).collect();
            format!("tie at game {n} in {}", s.join(" "))
        } else {
            "no fixed point within max games".to_string()
        };
        writeln!(out, "{:<11} {}  [{}]", start.label(), outcome, path.join(" "))
            .map_err(stdout_err)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use dilemma_core::NamedStrategy;

    #[test]
    fn help_lists_every_token() {
        for token in NamedStrategy::tokens().split(", ") {
            assert!(STRATEGY_HELP.contains(token), "{token}");
        }
    }

    #[test]
    fn table_has_sixteen_rows() {
        let game = PdGame::standard(0.9).unwrap();
        let text = table_csv(&game, &[]).unwrap();
        assert_eq!(text.lines().count(), 17);
        let yes: Vec<&str> = text
            .lines()
            .skip(1)
            .filter(|l| l.contains(",Yes,"))
            .map(|l| l.split(',').next().unwrap())
            .collect();
        assert_eq!(yes, ["7", "8", "16"]);
    }

    #[test]
    fn exit_codes() {
        assert_eq!(CliError::Usage(String::new()).exit_code(), 2);
        assert_eq!(CliError::Boundary(String::new()).exit_code(), 3);
        assert_eq!(CliError::io(Path::new("x"), io::Error::other("x")).exit_code(), 4);
    }
}
