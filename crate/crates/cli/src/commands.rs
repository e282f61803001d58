//! Subcommand implementations. Data files carry no run metadata, so equal
//! inputs give byte-identical outputs; thread counts and similar notes go
//! to stderr.

use std::collections::BTreeMap;
use std::path::PathBuf;

use cellplan::calibrate::{compare as compare_points, tune_offsets, TuneOptions};
use cellplan::drive_test::{
    fading_residual, lee_local_mean, parse_points_csv, parse_scanner_csv_named, parse_ue_csv, resample_route,
    throughput_stats, LeeParams, SeriesMode,
};
use cellplan::geo::write_ascii_grid;
use cellplan::link_budget::{evaluate_budget, format_budget_table, LinkBudget};
use cellplan::propagation::{
    classify_bands, predict_coverage, render_ppm, PredictOptions, SiteConfig, BELOW_COVERAGE,
};
use serde::Serialize;

use crate::project::{check_thresholds, load_raster, load_study, read_text, write_text, ProjectConfig};
use crate::{BudgetArgs, CliError, CliResult, CompareArgs, IngestArgs, LeeArgs, PredictArgs, StatsArgs, StudyArgs, TuneArgs};

fn to_json<T: Serialize>(value: &T) -> CliResult<String> {
    let mut s = serde_json::to_string_pretty(value).map_err(|e| CliError::Internal(e.to_string()))?;
    s.push('\n');
    Ok(s)
}

fn predict_options(args: &StudyArgs) -> PredictOptions {
    PredictOptions {
        ue_height_m: args.ue_height,
        indoor: args.indoor,
        threads: args.threads,
    }
}

pub fn budget(args: BudgetArgs) -> CliResult<()> {
    let path = match (&args.config, &args.project) {
        (Some(p), _) => p.clone(),
        (None, Some(project)) => ProjectConfig::load(project)?
            .budget
            .ok_or_else(|| CliError::Input(format!("{}: no budget configured", project.display())))?,
        (None, None) => return Err(CliError::Input("--config is required (or pass --project)".into())),
    };
    let mut budget = LinkBudget::from_json(&read_text(&path)?)
        .map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
    if let Some(t) = args.throughput {
        budget = budget.with_target(t);
    }
    let result = evaluate_budget(&budget)?;
    print!("{}", format_budget_table(&budget, &result));
    println!("required NRSRP: {:.2} dBm", result.required_nrsrp_dbm);
    if let Some(out) = args.json {
        write_text(&out, &to_json(&result)?)?;
    }
    Ok(())
}

fn band_label(i: usize, t: &[f64]) -> String {
    match t.get(i + 1) {
        Some(hi) => format!("[{}, {}) dBm", t[i], hi),
        None => format!(">= {} dBm", t[i]),
    }
}

pub fn predict(args: PredictArgs) -> CliResult<()> {
    let study = load_study(&args.study)?;
    let project = study.project.as_ref();
    let thresholds = args
        .thresholds
        .clone()
        .or_else(|| project.map(|p| p.band_thresholds.clone()))
        .unwrap_or_else(|| cellplan::propagation::DEFAULT_BAND_THRESHOLDS.to_vec());
    check_thresholds(&thresholds).map_err(|m| CliError::Input(format!("--thresholds {m}")))?;
    let out_dir = args
        .out_dir
        .clone()
        .or_else(|| project.and_then(|p| p.output_dir.clone()))
        .unwrap_or_else(|| PathBuf::from("."));

    let options = predict_options(&args.study);
    eprintln!(
        "predicting with {} thread(s)",
        if options.threads == 0 { "all available".to_string() } else { options.threads.to_string() }
    );
    let map = predict_coverage(
        &study.sites.sectors,
        &study.area,
        &study.sites.clutter,
        &study.sites.carrier,
        options,
    )?;
    let bands = classify_bands(&map, &thresholds)?;

    write_text(&out_dir.join("nrsrp.asc"), &write_ascii_grid(&map.nrsrp))?;
    write_text(&out_dir.join("best_beam.asc"), &write_ascii_grid(&map.best_beam))?;
    write_text(&out_dir.join("bands.asc"), &write_ascii_grid(&bands))?;
    if args.ppm {
        write_text(&out_dir.join("coverage.ppm"), &render_ppm(&map))?;
    }

    let dtm = study.area.dtm();
    println!(
        "grid {} x {} at {} m, {} sector(s)",
        dtm.ncols(),
        dtm.nrows(),
        dtm.cell_size(),
        study.sites.sectors.len()
    );
    let mut counts: BTreeMap<i64, usize> = BTreeMap::new();
    let mut valid = 0usize;
    for v in bands.values() {
        if !bands.is_nodata(*v) {
            *counts.entry(*v as i64).or_default() += 1;
            valid += 1;
        }
    }
    for (band, n) in counts.iter().rev() {
        let label = if *band == BELOW_COVERAGE as i64 {
            format!("< {} dBm", thresholds[0])
        } else {
            band_label(*band as usize, &thresholds)
        };
        println!("  {label:<22} {n:>8} cells {:>6.2} %", 100.0 * *n as f64 / valid.max(1) as f64);
    }
    println!("wrote {}", out_dir.display());
    Ok(())
}

pub fn ingest(args: IngestArgs) -> CliResult<()> {
    let source = args.input.display().to_string();
    let parsed = parse_scanner_csv_named(&read_text(&args.input)?, &source)?;
    for d in &parsed.diagnostics {
        if d.line == 0 {
            eprintln!("warning: {source}: {}", d.message);
        } else {
            eprintln!("warning: {source}: line {}: {}", d.line, d.message);
        }
    }
    let log = &parsed.log;
    let mut beams = [0usize; 8];
    for s in log.samples() {
        beams[s.beam_index as usize] += 1;
    }
    println!("samples: {}", log.len());
    println!("rejected rows: {}", parsed.rejected);
    println!("merged duplicates: {}", parsed.collapsed);
    println!("route length: {:.2} m", log.route().total_length());
    println!(
        "samples per beam: {}",
        beams.iter().enumerate().map(|(b, n)| format!("{b}:{n}")).collect::<Vec<_>>().join(" ")
    );
    if let Some(out) = args.out {
        write_text(&out, &log.to_csv())?;
    }
    Ok(())
}

pub fn lee(args: LeeArgs) -> CliResult<()> {
    let params = LeeParams {
        window_wavelengths: args.window_wavelengths,
        min_samples: args.min_samples,
        resample_wavelengths: args.spacing_wavelengths,
        carrier_freq_mhz: args.freq,
    };
    println!("{}", params.describe()?);
    let Some(input) = args.input else {
        return Ok(());
    };
    let source = input.display().to_string();
    let parsed = parse_scanner_csv_named(&read_text(&input)?, &source)?;
    if !parsed.diagnostics.is_empty() {
        eprintln!("warning: {source}: {} row diagnostic(s); run ingest for details", parsed.diagnostics.len());
    }
    let mode = args.beam.map_or(SeriesMode::BestBeam, SeriesMode::Beam);
    let series = resample_route(&parsed.log, &params, mode)?;
    let envelope = lee_local_mean(&series, &params)?;
    let residual = fading_residual(&series, &envelope, args.segment_m)?;

    write_text(&args.out_dir.join("envelope.csv"), &envelope.to_csv())?;
    write_text(&args.out_dir.join("residual.csv"), &residual.to_csv())?;
    write_text(&args.out_dir.join("segments.csv"), &residual.segments_csv())?;

    println!("resampled points: {}", series.len());
    println!("envelope points: {}", envelope.len());
    println!(
        "segments of {} m with >= 20 dB peak-to-peak fading: {} of {}",
        args.segment_m,
        residual.segments.iter().filter(|s| s.peak_to_peak_db >= 20.0).count(),
        residual.segments.len()
    );
    println!("wrote {}", args.out_dir.display());
    Ok(())
}

pub fn compare(args: CompareArgs) -> CliResult<()> {
    let prediction = load_raster(&args.prediction)?;
    let points = parse_points_csv(&read_text(&args.envelope)?, &args.envelope.display().to_string())?;
    let report = compare_points(&prediction, &points)?;
    write_text(&args.out_dir.join("report.json"), &to_json(&report)?)?;
    write_text(&args.out_dir.join("delta.csv"), &report.delta_csv())?;
    write_text(&args.out_dir.join("delta.asc"), &write_ascii_grid(&report.delta_raster(&prediction)?))?;
    println!("compared points: {}", report.per_point.len());
    println!("excluded points: {}", report.excluded);
    println!("mean error (measured - predicted): {:.3} dB", report.mean_error);
    println!("std error: {:.3} dB", report.std_error);
    println!("rmse: {:.3} dB", report.rmse);
    match report.correlation {
        Some(c) => println!("correlation: {c:.4}"),
        None => println!("correlation: undefined (no spread)"),
    }
    println!("wrote {}", args.out_dir.display());
    Ok(())
}

pub fn tune(args: TuneArgs) -> CliResult<()> {
    let study = load_study(&args.study)?;
    let points = parse_points_csv(&read_text(&args.envelope)?, &args.envelope.display().to_string())?;
    let result = tune_offsets(
        &study.sites.sectors,
        &study.area,
        &study.sites.clutter,
        &study.sites.carrier,
        predict_options(&args.study),
        &points,
        TuneOptions {
            min_points_per_class: args.min_points,
        },
    )?;
    write_text(&args.out, &to_json(&result)?)?;
    for (class, offset) in &result.offsets {
        let name = study.sites.clutter.get(*class).map_or("", |c| c.name.as_str());
        println!(
            "class {class} ({name}): {offset:+.3} dB over {} points",
            result.points_per_class[class]
        );
    }
    for class in &result.frozen {
        println!("class {class}: frozen ({} points)", result.points_per_class[class]);
    }
    println!("rmse: {:.3} dB -> {:.3} dB", result.pre_rmse, result.post_rmse);
    if let Some(path) = args.tuned_sites {
        let tuned = SiteConfig {
            clutter: result.apply(&study.sites.clutter)?,
            ..study.sites.clone()
        };
        write_text(&path, &(tuned.to_json() + "\n"))?;
        eprintln!("tuned from {}", study.sites_path.display());
    }
    Ok(())
}

pub fn stats(args: StatsArgs) -> CliResult<()> {
    let samples = parse_ue_csv(&read_text(&args.input)?, &args.input.display().to_string())?;
    let summary = throughput_stats(&samples)?;
    let json = to_json(&summary)?;
    match args.out {
        Some(out) => {
            write_text(&out, &json)?;
            println!(
                "n = {}, CLT normality {}",
                summary.n,
                if summary.clt_normality_assumable { "assumable" } else { "not assumable (n < 30)" }
            );
        }
        None => print!("{json}"),
    }
    Ok(())
}
