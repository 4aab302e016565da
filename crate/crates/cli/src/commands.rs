use std::fs::File;
use std::io::BufReader;
use std::net::SocketAddr;
use std::path::{Path, PathBuf};

use catchmap_core::effort::{cpue_grid, effort_raster};
use catchmap_core::export::{read_artifact, write_artifact, write_canonical_csv};
use catchmap_core::grid::{bin_catches, length_histogram, timeline_histogram, BinSize};
use catchmap_core::ingest::{ingest_files, ColumnMapping};
use catchmap_core::model::{Catalog, FilterSpec};
use catchmap_core::parse_filter_str;
use catchmap_core::route::{build_graph, graph_to_geojson};
use catchmap_core::synth::{self, SynthSpec};
use catchmap_server::AppState;
use serde_json::json;

use crate::config::ServeConfig;
use crate::error::{artifact_error, CliError};
use crate::output::{emit, emit_json, write_atomic};
use crate::{CatalogArgs, Format};

fn load_catalog(path: &Path) -> Result<Catalog, CliError> {
    let file = File::open(path).map_err(|e| CliError::io(path, e))?;
    read_artifact(BufReader::new(file)).map_err(|e| artifact_error(path, e))
}

fn load_mapping(spec: &str) -> Result<ColumnMapping, CliError> {
    match spec {
        "synth" => Ok(synth::column_mapping()),
        "canonical" => Ok(ColumnMapping::canonical()),
        path => {
            let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
            ColumnMapping::from_json(&text).map_err(|e| CliError::Usage(format!("{path}: {e}")))
        }
    }
}

fn bin_size(deg: u32) -> Result<BinSize, CliError> {
    BinSize::new(deg).map_err(|e| CliError::Usage(format!("--bin: {e}")))
}

fn open(args: &CatalogArgs) -> Result<(Catalog, FilterSpec), CliError> {
    let filter = parse_filter_str(&args.filter)?;
    Ok((load_catalog(&args.catalog)?, filter))
}

pub fn ingest(mapping: &str, out: &Path, report_path: Option<&Path>, files: &[PathBuf]) -> Result<(), CliError> {
    let mapping = load_mapping(mapping)?;
    let (catalog, report) = ingest_files(files, &mapping)?;
    write_atomic(out, |w| write_artifact(w, &catalog).map_err(|e| artifact_error(out, e)))?;
    if let Some(p) = report_path {
        emit_json(Some(p), &report)?;
    }
    emit_json(
        None,
        &json!({
            "catalog": out,
            "files": report.files.len(),
            "total_rows": report.total_rows,
            "accepted": report.accepted,
            "rejected": report.rejected,
            "rejection_rate": report.rejection_rate,
            "rejection_breakdown": report.rejection_breakdown,
            "warning_counts": report.warning_counts,
        }),
    )
}

pub fn precompute(catalog: &Path, filter: &str, out_dir: &Path, bins: &[u32]) -> Result<(), CliError> {
    let filter = parse_filter_str(filter)?;
    let bins = bins.iter().map(|&b| bin_size(b)).collect::<Result<Vec<_>, _>>()?;
    let catalog = load_catalog(catalog)?;
    std::fs::create_dir_all(out_dir).map_err(|e| CliError::io(out_dir, e))?;
    let graph = build_graph(&catalog, &FilterSpec::default());
    let mut written = Vec::new();
    let mut put = |name: String, value: &serde_json::Value| -> Result<(), CliError> {
        let path = out_dir.join(&name);
        emit_json(Some(&path), value)?;
        written.push(name);
        Ok(())
    };
    for bin in bins {
        let d = bin.degrees();
        let grid = bin_catches(&catalog, &filter, bin);
        put(format!("bins_{d}deg.json"), &json!(grid))?;
        put(format!("effort_{d}deg.json"), &json!(effort_raster(&graph, &filter, bin, None)))?;
    }
    put("routes.geojson".into(), &graph_to_geojson(&build_graph(&catalog, &filter), false))?;
    let timeline = timeline_histogram(&catalog, &filter, 1).map_err(|e| CliError::Data(e.to_string()))?;
    put("timeline.json".into(), &json!(timeline))?;
    emit_json(None, &json!({"out_dir": out_dir, "matched": catalog.count_matching(&filter), "files": written}))
}

pub fn serve(catalog: Option<PathBuf>, config: Option<&Path>, bind: Option<String>, port: Option<u16>) -> Result<(), CliError> {
    let mut cfg = match config {
        Some(p) => ServeConfig::load(p)?,
        None => ServeConfig::default(),
    };
    if let Some(b) = bind {
        cfg.bind = b;
    }
    if let Some(p) = port {
        cfg.port = p;
    }
    let path = catalog.or(cfg.catalog.clone()).ok_or_else(|| CliError::Usage("no catalog given (--catalog or config `catalog`)".into()))?;
    let addr: SocketAddr = format!("{}:{}", cfg.bind, cfg.port)
        .parse()
        .map_err(|e| CliError::Usage(format!("bad bind address {}:{}: {e}", cfg.bind, cfg.port)))?;
    let bins = cfg.precompute_bins.iter().map(|&b| bin_size(b)).collect::<Result<Vec<_>, _>>()?;
    // the catalog is fully loaded before the listener opens
    let state = AppState::with_precomputed(load_catalog(&path)?, &bins);
    let rt = tokio::runtime::Runtime::new().map_err(|e| CliError::io("<runtime>", e))?;
    rt.block_on(catchmap_server::serve(state, addr)).map_err(|e| CliError::io(addr.to_string(), e))
}

pub fn stats(catalog: &Path, filter: &str) -> Result<(), CliError> {
    let filter = parse_filter_str(filter)?;
    let catalog = load_catalog(catalog)?;
    let graph = build_graph(&catalog, &filter);
    let report = catalog.ingest_report();
    emit_json(
        None,
        &json!({
            "records": catalog.len(),
            "matched": catalog.count_matching(&filter),
            "expeditions": graph.tracks.len(),
            "stops": graph.node_count(),
            "routes": graph.edge_count(),
            "route_length_km": graph.edges.iter().map(|e| e.length_km).sum::<f64>(),
            "total_rows": report.total_rows,
            "rejected": report.rejected,
            "rejection_rate": report.rejection_rate,
            "rejection_breakdown": report.rejection_breakdown,
            "warning_counts": report.warning_counts,
        }),
    )
}

pub fn export(args: &CatalogArgs) -> Result<(), CliError> {
    let (catalog, filter) = open(args)?;
    let label = args.out.clone().unwrap_or_else(|| "<stdout>".into());
    emit(args.out.as_deref(), |w| {
        write_canonical_csv(w, catalog.filtered(&filter)).map(|_| ()).map_err(|e| CliError::io(&label, std::io::Error::other(e)))
    })
}

#[derive(Debug, Default)]
pub struct SynthOverrides {
    pub seed: Option<u64>,
    pub expeditions: Option<u32>,
    pub max_rows: Option<usize>,
    pub missing_date_rate: Option<f64>,
    pub missing_coords_rate: Option<f64>,
}

fn load_synth_spec(path: &Path) -> Result<SynthSpec, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    let parsed = if path.extension().is_some_and(|e| e == "toml") {
        toml::from_str(&text).map_err(|e| e.to_string())
    } else {
        serde_json::from_str(&text).map_err(|e| e.to_string())
    };
    parsed.map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))
}

pub fn synth(spec: Option<&Path>, o: SynthOverrides, out: &Path, stats: Option<&Path>) -> Result<(), CliError> {
    let mut spec = match spec {
        Some(p) => load_synth_spec(p)?,
        None => SynthSpec::progression_demo(42),
    };
    spec.seed = o.seed.unwrap_or(spec.seed);
    spec.expeditions = o.expeditions.unwrap_or(spec.expeditions);
    spec.max_rows = o.max_rows.or(spec.max_rows);
    spec.missing_date_rate = o.missing_date_rate.unwrap_or(spec.missing_date_rate);
    spec.missing_coords_rate = o.missing_coords_rate.unwrap_or(spec.missing_coords_rate);
    for (name, rate) in [("missing_date_rate", spec.missing_date_rate), ("missing_coords_rate", spec.missing_coords_rate)] {
        if !(0.0..=1.0).contains(&rate) {
            return Err(CliError::Usage(format!("{name} must lie in [0, 1]")));
        }
    }
    let corpus = synth::generate(&spec);
    write_atomic(out, |w| corpus.write_csv(w).map_err(|e| CliError::io(out, std::io::Error::other(e))))?;
    if let Some(p) = stats {
        emit_json(Some(p), &corpus.stats)?;
    }
    emit_json(None, &corpus.stats)
}

pub fn bins(args: &CatalogArgs, bin: u32, format: Format) -> Result<(), CliError> {
    let bin = bin_size(bin)?;
    let (catalog, filter) = open(args)?;
    let grid = bin_catches(&catalog, &filter, bin);
    match format {
        Format::Json => emit_json(args.out.as_deref(), &grid),
        Format::Geojson => emit_json(args.out.as_deref(), &grid.to_geojson()),
    }
}

pub fn effort(args: &CatalogArgs, bin: u32, format: Format) -> Result<(), CliError> {
    let bin = bin_size(bin)?;
    let (catalog, filter) = open(args)?;
    let graph = build_graph(&catalog, &FilterSpec::default());
    let raster = effort_raster(&graph, &filter, bin, None);
    match format {
        Format::Json => emit_json(args.out.as_deref(), &raster),
        Format::Geojson => emit_json(args.out.as_deref(), &raster.to_geojson()),
    }
}

pub fn cpue(args: &CatalogArgs, bin: u32, min_effort: f64, format: Format) -> Result<(), CliError> {
    let bin = bin_size(bin)?;
    let (catalog, filter) = open(args)?;
    let graph = build_graph(&catalog, &FilterSpec::default());
    let grid = cpue_grid(&bin_catches(&catalog, &filter, bin), &effort_raster(&graph, &filter, bin, None), min_effort)
        .map_err(|e| CliError::Usage(format!("--min-effort: {e}")))?;
    match format {
        Format::Json => emit_json(
            args.out.as_deref(),
            &json!({"bin_deg": grid.bin_deg, "min_effort_km": grid.min_effort_km, "pooled_cpue": grid.pooled_cpue(), "cells": grid.cells}),
        ),
        Format::Geojson => emit_json(args.out.as_deref(), &grid.to_geojson()),
    }
}

pub fn routes(args: &CatalogArgs, nodes: bool) -> Result<(), CliError> {
    let (catalog, filter) = open(args)?;
    emit_json(args.out.as_deref(), &graph_to_geojson(&build_graph(&catalog, &filter), nodes))
}

pub fn timeline(args: &CatalogArgs, interval: u32) -> Result<(), CliError> {
    let (catalog, filter) = open(args)?;
    let h = timeline_histogram(&catalog, &filter, interval).map_err(|e| CliError::Usage(format!("--interval: {e}")))?;
    emit_json(args.out.as_deref(), &json!({"peak": h.peak(), "histogram": h}))
}

pub fn lengths(args: &CatalogArgs, bucket: f64) -> Result<(), CliError> {
    let (catalog, filter) = open(args)?;
    let h = length_histogram(&catalog, &filter, bucket).map_err(|e| CliError::Usage(format!("--bucket: {e}")))?;
    emit_json(args.out.as_deref(), &json!({"modal_bucket_ft": h.modal_bucket(), "histogram": h}))
}
