use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use ews_core::detector::{analyze_stream, AnalysisError, AnalysisReport, WindowAnalysis};
use ews_core::indicators::write_trajectory_csv;
use ews_core::ingest::{max_dests_from_env, read_csv, DestTable, PcapFiles, PcapOptions, SourceConfig};

use crate::{plot, AnalyzeArgs, InputFormat};

fn guess_format(path: &Path) -> InputFormat {
    match path.extension().and_then(|e| e.to_str()) {
        Some(ext) if ext.eq_ignore_ascii_case("csv") => InputFormat::Csv,
        _ => InputFormat::Pcap,
    }
}

/// Writes the per-window artifacts, in window order.
struct WindowWriter {
    indicators: PathBuf,
    plots: Option<PathBuf>,
    matrices: Option<PathBuf>,
}

impl WindowWriter {
    fn new(out_dir: &Path, plots: bool, matrices: bool) -> Result<Self> {
        let sub = |name: &str, on: bool| -> Result<Option<PathBuf>> {
            if !on {
                return Ok(None);
            }
            let dir = out_dir.join(name);
            fs::create_dir_all(&dir).with_context(|| format!("cannot create {}", dir.display()))?;
            Ok(Some(dir))
        };
        Ok(Self {
            indicators: sub("indicators", true)?.expect("always created"),
            plots: sub("plots", plots)?,
            matrices: sub("matrices", matrices)?,
        })
    }

    fn write(&self, a: &WindowAnalysis) -> Result<()> {
        let name = format!("window_{:04}", a.window.index);
        let path = self.indicators.join(format!("{name}.csv"));
        let mut w = BufWriter::new(File::create(&path).with_context(|| format!("cannot create {}", path.display()))?);
        write_trajectory_csv(&mut w, &a.trajectory)?;
        w.flush()?;
        if let Some(dir) = &self.plots {
            let path = dir.join(format!("{name}.svg"));
            fs::write(&path, plot::window_svg(&a.window, &a.trajectory, &a.verdict))
                .with_context(|| format!("cannot write {}", path.display()))?;
        }
        if let Some(dir) = &self.matrices {
            let path = dir.join(format!("{name}.csv"));
            let mut w = BufWriter::new(File::create(&path).with_context(|| format!("cannot create {}", path.display()))?);
            a.matrix.write_csv(&mut w)?;
            w.flush()?;
        }
        Ok(())
    }
}

pub fn run(args: &AnalyzeArgs) -> Result<ExitCode> {
    let cfg = args.analysis_config();
    cfg.validate()?;
    if let Some(jobs) = args.jobs {
        if jobs == 0 {
            bail!("--jobs must be positive");
        }
        rayon::ThreadPoolBuilder::new().num_threads(jobs).build_global().context("cannot start worker threads")?;
    }
    let format = args.format.unwrap_or_else(|| guess_format(&args.input[0]));
    let max_dests = args.max_dests.unwrap_or_else(max_dests_from_env);
    if max_dests == 0 {
        bail!("destination cap must be positive");
    }
    for path in &args.input {
        if !path.is_file() {
            bail!("input {} does not exist or is not a file", path.display());
        }
    }

    fs::create_dir_all(&args.out_dir).with_context(|| format!("cannot create {}", args.out_dir.display()))?;
    let writer = WindowWriter::new(&args.out_dir, args.plots, args.dump_matrices)?;
    let mut write_error = None;
    let mut on_window = |a: &WindowAnalysis| {
        if write_error.is_none() {
            write_error = writer.write(a).err();
        }
    };

    let (mut report, ingest) = match format {
        InputFormat::Pcap => {
            let opts = PcapOptions {
                monitored: args.victim.clone(),
                both_directions: args.both_directions,
                ..Default::default()
            };
            let mut files = PcapFiles::new(args.input.clone(), opts, DestTable::with_limit(max_dests));
            let report =
                analyze_stream(files.by_ref().map(|r| r.map_err(AnalysisError::from)), &cfg, &mut on_window)?;
            (report, Some(files.summary()))
        }
        InputFormat::Csv => {
            if args.input.len() != 1 {
                bail!("csv input takes exactly one file, got {}", args.input.len());
            }
            if !args.victim.is_empty() {
                bail!("--victim needs pcap input; csv traces carry destination ids, not addresses");
            }
            let records = read_csv(&args.input[0])?;
            let report = analyze_stream(records.into_iter().map(Ok), &cfg, &mut on_window)?;
            (report, None)
        }
    };
    if let Some(e) = write_error {
        return Err(e);
    }

    report.meta.tool = "ews".into();
    report.meta.generated_at = Some(chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true));
    report.meta.inputs = args.input.iter().map(|p| p.display().to_string()).collect();
    report.meta.ingest = ingest;
    report.meta.source = Some(SourceConfig {
        format: match format {
            InputFormat::Pcap => "pcap".into(),
            InputFormat::Csv => "csv".into(),
        },
        monitored: args.victim.iter().map(|a| a.to_string()).collect(),
        both_directions: args.both_directions,
        max_dests,
    });
    let path = args.out_dir.join("report.json");
    write_report(&path, &report)?;

    println!(
        "{} windows: {} analyzed, {} skipped, {} Precursor; report written to {}",
        report.meta.window_count,
        report.windows.len(),
        report.skipped.len(),
        report.meta.precursor_count,
        path.display()
    );
    Ok(if report.meta.precursor_count > 0 { ExitCode::from(2) } else { ExitCode::SUCCESS })
}

fn write_report(path: &Path, report: &AnalysisReport) -> Result<()> {
    let mut text = report.to_json();
    text.push('\n');
    fs::write(path, text).with_context(|| format!("cannot write {}", path.display()))
}
