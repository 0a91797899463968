use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use matchday_core::analytics::{
    analyze as analyze_runs, write_bands_csv, write_curves_csv, write_metrics_csv, write_tests_csv, AnalyzeOptions,
    RunLog, VigHandling,
};
use matchday_core::backtest::{run_backtest, BacktestError};
use matchday_core::replay::{replay as replay_log, ReplayVerdict};
use matchday_core::runlog::{read_ndjson, write_ndjson};
use matchday_core::strategies::{build_strategy, StrategyConfig, StrategyError};
use serde_json::json;

use crate::args::{AnalyzeArgs, BacktestArgs, ReplayArgs, Vig};
use crate::{line_config, load_data, load_registry, CliError};

fn create(path: &Path) -> Result<BufWriter<File>, CliError> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent).map_err(|e| CliError::Runtime(format!("{}: {e}", parent.display())))?;
    }
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| CliError::Runtime(format!("{}: {e}", path.display())))
}

pub fn backtest(a: BacktestArgs) -> Result<ExitCode, CliError> {
    let config = match &a.config {
        Some(p) => {
            let text = std::fs::read_to_string(p).map_err(|e| CliError::Config(format!("{}: {e}", p.display())))?;
            StrategyConfig::from_toml(&text).map_err(|e| CliError::Config(format!("{}: {e}", p.display())))?
        }
        None => StrategyConfig::default(),
    };
    // names are checked before any data is read
    let mut strategy = build_strategy(&a.strategy, &config).map_err(|e| CliError::Config(e.to_string()))?;
    let registry = load_registry(a.data.registry.as_deref(), &a.data.data)?;
    let spec = registry.get(&a.scenario)?.clone();
    let line = line_config(&a.data.line, a.data.books.as_deref())?;
    let data = Arc::new(load_data(&a.data.data)?);
    let label = a.label.clone().unwrap_or_else(|| a.strategy.clone());

    let outcome = run_backtest(spec.clone(), data, line, strategy.as_mut(), &label).map_err(|e| match e {
        BacktestError::Strategy {
            source: StrategyError::Config(_),
            ..
        } => CliError::Config(e.to_string()),
        other => CliError::Runtime(other.to_string()),
    })?;
    let mut out = create(&a.out)?;
    write_ndjson(&outcome.log, &mut out).map_err(|e| CliError::Runtime(format!("{}: {e}", a.out.display())))?;
    let metrics_path = a.metrics.clone().unwrap_or_else(|| a.out.with_extension("metrics.json"));
    let metrics = json!({
        "scenario": spec.name,
        "strategy": a.strategy,
        "summary": outcome.summary,
        "metrics": outcome.metrics,
    });
    serde_json::to_writer_pretty(create(&metrics_path)?, &metrics).map_err(|e| CliError::Runtime(e.to_string()))?;

    let s = &outcome.summary;
    println!(
        "{label} on {}: final £{} from £{} (ROI {:.2}%), {} matchdays{}",
        spec.name,
        s.final_bankroll,
        s.initial_bankroll,
        100.0 * s.roi,
        s.matchdays_played,
        if s.ruined { ", ruined" } else { "" }
    );
    println!("run log: {}", a.out.display());
    println!("metrics: {}", metrics_path.display());
    Ok(ExitCode::SUCCESS)
}

pub fn replay(a: ReplayArgs) -> Result<ExitCode, CliError> {
    let file = File::open(&a.log).map_err(|e| CliError::Config(format!("{}: {e}", a.log.display())))?;
    let events = read_ndjson(std::io::BufReader::new(file))
        .map_err(|e| CliError::Runtime(format!("{}: {e}", a.log.display())))?;
    let data = Arc::new(load_data(&a.data)?);
    match replay_log(&events, data).map_err(|e| CliError::Runtime(e.to_string()))? {
        ReplayVerdict::Pass {
            events,
            settlements,
            complete,
        } => {
            println!(
                "PASS: {events} events, {settlements} settlements{}",
                if complete { "" } else { " (log ends before the season does)" }
            );
            Ok(ExitCode::SUCCESS)
        }
        ReplayVerdict::Fail { seq, reason } => {
            println!("FAIL at seq {seq}: {reason}");
            Ok(ExitCode::FAILURE)
        }
    }
}

fn collect_logs(paths: &[PathBuf]) -> Result<Vec<PathBuf>, CliError> {
    let mut out = Vec::new();
    for p in paths {
        if p.is_dir() {
            let mut found: Vec<PathBuf> = std::fs::read_dir(p)
                .map_err(|e| CliError::Config(format!("{}: {e}", p.display())))?
                .filter_map(|e| e.ok().map(|e| e.path()))
                .filter(|f| f.extension().is_some_and(|x| x == "ndjson"))
                .collect();
            found.sort();
            out.extend(found);
        } else {
            out.push(p.clone());
        }
    }
    if out.is_empty() {
        return Err(CliError::Config("no run logs found".into()));
    }
    Ok(out)
}

pub fn analyze(a: AnalyzeArgs) -> Result<ExitCode, CliError> {
    let runs = collect_logs(&a.runs)?
        .iter()
        .map(|p| RunLog::read(p).map_err(|e| CliError::Runtime(format!("{}: {e}", p.display()))))
        .collect::<Result<Vec<_>, _>>()?;
    let opts = AnalyzeOptions {
        bootstrap: (a.bootstrap > 0).then_some(a.bootstrap),
        seed: a.seed,
        vig: match a.vig {
            Vig::Raw => VigHandling::Raw,
            Vig::Normalized => VigHandling::Normalized,
        },
    };
    let report = analyze_runs(&runs, &opts).map_err(|e| CliError::Runtime(e.to_string()))?;
    std::fs::create_dir_all(&a.out).map_err(|e| CliError::Runtime(format!("{}: {e}", a.out.display())))?;
    let rt = |e: matchday_core::analytics::AnalyticsError| CliError::Runtime(e.to_string());
    serde_json::to_writer_pretty(create(&a.out.join("report.json"))?, &report)
        .map_err(|e| CliError::Runtime(e.to_string()))?;
    write_metrics_csv(&report, create(&a.out.join("metrics.csv"))?).map_err(rt)?;
    write_curves_csv(&report, create(&a.out.join("curves.csv"))?).map_err(rt)?;
    write_bands_csv(&report, create(&a.out.join("bands.csv"))?).map_err(rt)?;
    write_tests_csv(&report, create(&a.out.join("tests.csv"))?).map_err(rt)?;

    println!("{:<20} {:>5} {:>9} {:>7} {:>10}", "label", "runs", "mean ROI", "ruined", "ΔLL");
    for g in &report.groups {
        println!(
            "{:<20} {:>5} {:>8.2}% {:>7} {:>10}",
            g.label,
            g.runs,
            100.0 * g.mean_roi,
            g.ruined_runs,
            g.delta_log_loss.value.map_or("n/a".into(), |v| format!("{v:.4}"))
        );
    }
    for n in &report.notes {
        println!("note: {n}");
    }
    println!("wrote {}", a.out.display());
    Ok(ExitCode::SUCCESS)
}
