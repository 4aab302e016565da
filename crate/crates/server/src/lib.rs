//! Read-only HTTP API over a frozen catalog and its route graph.
//!
//! Every endpoint accepts the shared filter grammar (see
//! [`catchmap_core::query`]) plus its own options:
//!
//! | endpoint    | options                                         | body |
//! |-------------|-------------------------------------------------|------|
//! | `/catches`  | `level` (0–3, default 2), `color`, `cursor`, `limit` | JSON points |
//! | `/bins`     | `bin` (1, 2, 5, 10; default 5), `format`        | JSON or GeoJSON grid |
//! | `/routes`   | `cursor`, `limit`                               | GeoJSON edges |
//! | `/effort`   | `bin`, `format`                                 | JSON or GeoJSON raster |
//! | `/cpue`     | `bin`, `min_effort` (km, default 100), `format` | JSON or GeoJSON grid |
//! | `/timeline` | `interval` (years, default 1)                   | JSON histogram |
//! | `/lengths`  | `bucket` (feet, default 5)                      | JSON histogram |
//! | `/export`   | none                                            | canonical CSV |
//! | `/meta`     | none                                            | JSON summary |
//!
//! Bad parameters give `400` with `{"param": …, "reason": …}`. A level-0
//! `/catches` request matching more than [`MAX_RAW_POINTS`] records without
//! a `limit` gives `413`.

use std::collections::BTreeMap;
use std::net::SocketAddr;
use std::sync::Arc;

use axum::extract::{RawQuery, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::get;
use axum::Router;
use catchmap_core::classes::{tables, ColorEncoding};
use catchmap_core::effort::{cpue_grid, effort_raster, EffortRaster, DEFAULT_MIN_EFFORT_KM};
use catchmap_core::export::write_canonical_csv;
use catchmap_core::grid::{aggregate_points, bin_catches, length_histogram, timeline_histogram, AggregationLevel, BinSize, SpatialBinGrid};
use catchmap_core::model::{Catalog, ExpeditionType, FilterSpec, Sex, Species};
use catchmap_core::query::{split_params, ParamError, RequestParams};
use catchmap_core::route::{build_graph, edge_feature, CatchGraph};
use serde::Serialize;
use serde_json::{json, Value};

/// Largest level-0 response served without explicit pagination.
pub const MAX_RAW_POINTS: usize = 200_000;
pub const DEFAULT_PAGE: usize = 10_000;

#[derive(Debug)]
pub enum ApiError {
    BadRequest(ParamError),
    TooLarge(ParamError),
    Internal(String),
}

impl From<ParamError> for ApiError {
    fn from(e: ParamError) -> Self {
        ApiError::BadRequest(e)
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let (status, body) = match self {
            ApiError::BadRequest(e) => (StatusCode::BAD_REQUEST, e),
            ApiError::TooLarge(e) => (StatusCode::PAYLOAD_TOO_LARGE, e),
            ApiError::Internal(reason) => (StatusCode::INTERNAL_SERVER_ERROR, ParamError::new("", reason)),
        };
        (status, [(header::CONTENT_TYPE, "application/json")], serde_json::to_vec(&body).unwrap_or_default()).into_response()
    }
}

type ApiResult = Result<Response, ApiError>;

struct Inner {
    catalog: Catalog,
    graph: CatchGraph,
    nations: Vec<String>,
    bins: BTreeMap<BinSize, SpatialBinGrid>,
    effort: BTreeMap<BinSize, EffortRaster>,
}

/// Shared immutable state: the catalog, its full route graph and optional
/// unfiltered grids computed at startup.
#[derive(Clone)]
pub struct AppState(Arc<Inner>);

impl AppState {
    pub fn new(catalog: Catalog) -> Self {
        Self::with_precomputed(catalog, &[])
    }

    /// Also precomputes unfiltered catch grids and effort rasters for the
    /// given bin sizes.
    pub fn with_precomputed(catalog: Catalog, bins: &[BinSize]) -> Self {
        let all = FilterSpec::default();
        let graph = build_graph(&catalog, &all);
        let mut nations: Vec<String> = catalog.iter().map(|r| r.nation.clone()).collect();
        nations.sort();
        nations.dedup();
        let grids = bins.iter().map(|&b| (b, bin_catches(&catalog, &all, b))).collect();
        let effort = bins.iter().map(|&b| (b, effort_raster(&graph, &all, b, None))).collect();
        AppState(Arc::new(Inner { catalog, graph, nations, bins: grids, effort }))
    }

    pub fn catalog(&self) -> &Catalog {
        &self.0.catalog
    }

    pub fn graph(&self) -> &CatchGraph {
        &self.0.graph
    }

    fn bins(&self, filter: &FilterSpec, bin: BinSize) -> SpatialBinGrid {
        match self.0.bins.get(&bin) {
            Some(g) if filter.is_empty() => g.clone(),
            _ => bin_catches(&self.0.catalog, filter, bin),
        }
    }

    fn effort(&self, filter: &FilterSpec, bin: BinSize) -> EffortRaster {
        match self.0.effort.get(&bin) {
            Some(r) if filter.is_empty() => r.clone(),
            _ => effort_raster(&self.0.graph, filter, bin, None),
        }
    }
}

pub fn router(state: AppState) -> Router {
    Router::new()
        .route("/catches", get(catches))
        .route("/bins", get(bins))
        .route("/routes", get(routes))
        .route("/effort", get(effort))
        .route("/cpue", get(cpue))
        .route("/timeline", get(timeline))
        .route("/lengths", get(lengths))
        .route("/export", get(export))
        .route("/meta", get(meta))
        .with_state(state)
}

/// Serves until Ctrl-C.
pub async fn serve(state: AppState, addr: SocketAddr) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind(addr).await?;
    tracing::info!(addr = %listener.local_addr()?, records = state.catalog().len(), "listening");
    axum::serve(listener, router(state))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
}

fn json_body<T: Serialize>(value: &T, content_type: &'static str) -> ApiResult {
    let body = serde_json::to_vec(value).map_err(|e| ApiError::Internal(e.to_string()))?;
    Ok(([(header::CONTENT_TYPE, content_type)], body).into_response())
}

fn json_ok<T: Serialize>(value: &T) -> ApiResult {
    json_body(value, "application/json")
}

fn geojson_ok(value: &Value) -> ApiResult {
    json_body(value, "application/geo+json")
}

/// Runs a compute-bound handler off the async workers.
async fn run(state: AppState, query: Option<String>, keys: &'static [&'static str], f: fn(&AppState, RequestParams) -> ApiResult) -> Response {
    let outcome = tokio::task::spawn_blocking(move || {
        let params = split_params(query.as_deref().unwrap_or(""), keys)?;
        f(&state, params)
    })
    .await;
    match outcome {
        Ok(Ok(r)) => r,
        Ok(Err(e)) => e.into_response(),
        Err(e) => ApiError::Internal(e.to_string()).into_response(),
    }
}

fn bin_param(p: &RequestParams) -> Result<BinSize, ApiError> {
    BinSize::new(p.parse_or("bin", 5u32)?).map_err(|e| ParamError::new("bin", e).into())
}

fn wants_geojson(p: &RequestParams) -> Result<bool, ApiError> {
    match p.get("format").unwrap_or("json") {
        "json" => Ok(false),
        "geojson" => Ok(true),
        other => Err(ParamError::new("format", format!("'{other}' is not json or geojson")).into()),
    }
}

fn page(p: &RequestParams, total: usize, default_limit: usize) -> Result<(usize, usize, Option<usize>), ApiError> {
    let cursor: usize = p.parse_or("cursor", 0)?;
    let limit: usize = p.parse_or("limit", default_limit)?;
    if limit == 0 {
        return Err(ParamError::new("limit", "must be at least 1").into());
    }
    let start = cursor.min(total);
    let end = start.saturating_add(limit).min(total);
    Ok((start, end, (end < total).then_some(end)))
}

async fn catches(State(s): State<AppState>, RawQuery(q): RawQuery) -> Response {
    run(s, q, &["level", "color", "cursor", "limit"], |s, p| {
        let level = AggregationLevel::new(p.parse_or("level", 2u8)?).map_err(|e| ParamError::new("level", e))?;
        let color: ColorEncoding = p.parse_or("color", ColorEncoding::default())?;
        if level.level() == 0 && p.get("limit").is_none() {
            let matched = s.catalog().count_matching(&p.filter);
            if matched > MAX_RAW_POINTS {
                return Err(ApiError::TooLarge(ParamError::new(
                    "level",
                    format!("{matched} raw points exceed {MAX_RAW_POINTS}; use level 1-3 or paginate with limit/cursor"),
                )));
            }
        }
        let points = aggregate_points(s.catalog(), &p.filter, level, color);
        // without a limit every point fits on one page
        let (start, end, next) = page(&p, points.len(), points.len().max(1))?;
        let total: u64 = points.iter().map(|pt| pt.count).sum();
        json_ok(&json!({
            "level": level.level(),
            "color": color.code(),
            "total": total,
            "point_count": points.len(),
            "cursor": start,
            "next_cursor": next,
            "points": &points[start..end],
        }))
    })
    .await
}

async fn bins(State(s): State<AppState>, RawQuery(q): RawQuery) -> Response {
    run(s, q, &["bin", "format"], |s, p| {
        let (bin, geo) = (bin_param(&p)?, wants_geojson(&p)?);
        let grid = s.bins(&p.filter, bin);
        if geo {
            geojson_ok(&grid.to_geojson())
        } else {
            json_ok(&grid)
        }
    })
    .await
}

async fn routes(State(s): State<AppState>, RawQuery(q): RawQuery) -> Response {
    run(s, q, &["cursor", "limit"], |s, p| {
        let filtered;
        let graph = if p.filter.is_empty() {
            s.graph()
        } else {
            filtered = build_graph(s.catalog(), &p.filter);
            &filtered
        };
        let (start, end, next) = page(&p, graph.edge_count(), DEFAULT_PAGE)?;
        let features: Vec<Value> = graph.edges[start..end].iter().map(edge_feature).collect();
        geojson_ok(&json!({
            "type": "FeatureCollection",
            "total_edges": graph.edge_count(),
            "cursor": start,
            "next_cursor": next,
            "features": features,
        }))
    })
    .await
}

async fn effort(State(s): State<AppState>, RawQuery(q): RawQuery) -> Response {
    run(s, q, &["bin", "format"], |s, p| {
        let (bin, geo) = (bin_param(&p)?, wants_geojson(&p)?);
        let raster = s.effort(&p.filter, bin);
        if geo {
            geojson_ok(&raster.to_geojson())
        } else {
            json_ok(&raster)
        }
    })
    .await
}

async fn cpue(State(s): State<AppState>, RawQuery(q): RawQuery) -> Response {
    run(s, q, &["bin", "min_effort", "format"], |s, p| {
        let (bin, geo) = (bin_param(&p)?, wants_geojson(&p)?);
        let min_effort: f64 = p.parse_or("min_effort", DEFAULT_MIN_EFFORT_KM)?;
        let grid = cpue_grid(&s.bins(&p.filter, bin), &s.effort(&p.filter, bin), min_effort)
            .map_err(|e| ParamError::new("min_effort", e))?;
        if geo {
            geojson_ok(&grid.to_geojson())
        } else {
            json_ok(&json!({
                "bin_deg": grid.bin_deg,
                "min_effort_km": grid.min_effort_km,
                "pooled_cpue": grid.pooled_cpue(),
                "cells": grid.cells,
            }))
        }
    })
    .await
}

async fn timeline(State(s): State<AppState>, RawQuery(q): RawQuery) -> Response {
    run(s, q, &["interval"], |s, p| {
        let h = timeline_histogram(s.catalog(), &p.filter, p.parse_or("interval", 1u32)?).map_err(|e| ParamError::new("interval", e))?;
        json_ok(&json!({"peak": h.peak(), "histogram": h}))
    })
    .await
}

async fn lengths(State(s): State<AppState>, RawQuery(q): RawQuery) -> Response {
    run(s, q, &["bucket"], |s, p| {
        let h = length_histogram(s.catalog(), &p.filter, p.parse_or("bucket", 5.0f64)?).map_err(|e| ParamError::new("bucket", e))?;
        json_ok(&json!({"modal_bucket_ft": h.modal_bucket(), "histogram": h}))
    })
    .await
}

async fn export(State(s): State<AppState>, RawQuery(q): RawQuery) -> Response {
    run(s, q, &[], |s, p| {
        let mut body = Vec::new();
        write_canonical_csv(&mut body, s.catalog().filtered(&p.filter)).map_err(|e| ApiError::Internal(e.to_string()))?;
        Ok((
            [(header::CONTENT_TYPE, "text/csv; charset=utf-8"), (header::CONTENT_DISPOSITION, "attachment; filename=\"catches.csv\"")],
            body,
        )
            .into_response())
    })
    .await
}

async fn meta(State(s): State<AppState>, RawQuery(q): RawQuery) -> Response {
    run(s, q, &[], |s, p| {
        let codes = |it: &mut dyn Iterator<Item = &'static str>| it.map(String::from).collect::<Vec<_>>();
        json_ok(&json!({
            "schema_version": s.catalog().schema_version(),
            "records": s.catalog().len(),
            "expeditions": s.graph().tracks.len(),
            "routes": s.graph().edge_count(),
            "matched": s.catalog().count_matching(&p.filter),
            "ingest_report": s.catalog().ingest_report(),
            "codes": {
                "species": codes(&mut Species::ALL.iter().map(|x| x.code())),
                "sex": codes(&mut Sex::ALL.iter().map(|x| x.code())),
                "type": codes(&mut ExpeditionType::ALL.iter().map(|x| x.code())),
                "nation": &s.0.nations,
            },
            "color_encodings": codes(&mut ColorEncoding::ALL.iter().map(|x| x.code())),
            "classes": tables(),
        }))
    })
    .await
}
