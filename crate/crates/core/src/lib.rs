//! Catch-event analytics: ingest historical catch logs, reconstruct
//! expedition routes, bin catches on equal-angle grids, turn route length
//! into a search-effort field and normalise catches by it (CPUE).
//!
//! Every product is a pure function of a frozen [`Catalog`] and a
//! [`FilterSpec`]. Hot loops run on rayon when the `parallel` feature is on
//! (the default) and produce identical output either way.

pub mod classes;
pub mod effort;
pub mod export;
pub mod geo;
pub mod grid;
pub mod ingest;
pub mod model;
pub mod par;
pub mod query;
pub mod route;
pub mod synth;

pub use classes::ColorEncoding;
pub use effort::{cpue_grid, diffuse_effort, effort_raster, rasterize_edge, CpueGrid, DiffusionParams, EffortRaster};
pub use grid::{aggregate_points, bin_catches, bin_index, length_histogram, timeline_histogram, AggregationLevel, BinSize, SpatialBinGrid};
pub use ingest::{ingest_files, ColumnMapping, IngestReport};
pub use model::{BBox, Catalog, CatchRecord, DateRange, ExpeditionType, FilterSpec, LengthRange, Sex, Species};
pub use query::{parse_filter, parse_filter_str, render_filter, split_params, ParamError, RequestParams};
pub use route::{build_expedition_tracks, build_graph, extract_routes, CatchGraph, ExpeditionTrack, RouteEdge};
