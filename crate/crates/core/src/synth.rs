//! Deterministic synthetic catch corpora.
//!
//! Expeditions are random walks of catch stops. Each stop yields one or more
//! catches whose species are drawn in proportion to per-species abundance
//! curves over time, so catches per unit of searching track abundance. The
//! default profile reproduces a historical species succession: blue, then
//! fin, then sei, then minke, with overall activity rising until the
//! mid-1960s.

use std::io::Write;

use chrono::{Datelike, Duration, NaiveDate};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::geo::canonical_lon;
use crate::ingest::ColumnMapping;
use crate::model::{ExpeditionType, Sex, Species};

pub const SYNTH_HEADER: [&str; 9] =
    ["expedition_id", "date", "lat", "lon", "species", "sex", "length_ft", "nation", "expedition_type"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpeciesProfile {
    pub species: Species,
    /// Year of peak abundance; `None` means constant abundance.
    pub peak_year: Option<f64>,
    pub spread_years: f64,
    pub abundance: f64,
    pub length_mode_ft: f64,
    pub length_sd_ft: f64,
}

/// Relative expedition activity, linear between `(year, level)` knots.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ActivityCurve(pub Vec<(i32, f64)>);

impl ActivityCurve {
    pub fn at(&self, year: f64) -> f64 {
        let k = &self.0;
        if k.is_empty() {
            return 1.0;
        }
        if year <= k[0].0 as f64 {
            return k[0].1;
        }
        for w in k.windows(2) {
            let ((y0, a0), (y1, a1)) = (w[0], w[1]);
            if year <= y1 as f64 {
                let t = (year - y0 as f64) / (y1 - y0) as f64;
                return a0 + t * (a1 - a0);
            }
        }
        k[k.len() - 1].1
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthSpec {
    pub seed: u64,
    pub expeditions: u32,
    pub first_year: i32,
    pub last_year: i32,
    pub activity: ActivityCurve,
    pub min_stops: u32,
    pub max_stops: u32,
    /// Probability that a stop yields one more catch, applied repeatedly.
    pub extra_catch_prob: f64,
    /// Probability that a move returns to an earlier stop's exact position.
    pub revisit_prob: f64,
    /// Probability that consecutive stops fall on the same day.
    pub same_day_move_prob: f64,
    pub pelagic_share: f64,
    pub length_present_prob: f64,
    pub species: Vec<SpeciesProfile>,
    pub missing_date_rate: f64,
    pub missing_coords_rate: f64,
    /// Truncate the corpus to this many rows before planting defects.
    #[serde(default)]
    pub max_rows: Option<usize>,
}

impl SynthSpec {
    /// About 100k catches, 1900–1985, with the blue → fin → sei → minke
    /// succession and length modes of 80/70/50/30 ft.
    pub fn progression_demo(seed: u64) -> Self {
        let prof = |species, peak: Option<f64>, spread, abundance, mode| SpeciesProfile {
            species,
            peak_year: peak,
            spread_years: spread,
            abundance,
            length_mode_ft: mode,
            length_sd_ft: 4.0,
        };
        Self {
            seed,
            expeditions: 2600,
            first_year: 1900,
            last_year: 1985,
            activity: ActivityCurve(vec![(1900, 0.2), (1965, 1.0), (1985, 0.3)]),
            min_stops: 10,
            max_stops: 40,
            extra_catch_prob: 0.4,
            revisit_prob: 0.05,
            same_day_move_prob: 0.15,
            pelagic_share: 0.7,
            length_present_prob: 0.9,
            species: vec![
                prof(Species::Blue, Some(1930.0), 12.0, 1.0, 80.0),
                prof(Species::Fin, Some(1952.0), 9.0, 1.0, 70.0),
                prof(Species::Sei, Some(1966.0), 6.0, 1.0, 50.0),
                prof(Species::Minke, Some(1978.0), 6.0, 1.0, 30.0),
                prof(Species::Humpback, Some(1925.0), 20.0, 0.15, 42.0),
                prof(Species::Sperm, None, 1.0, 0.08, 45.0),
            ],
            missing_date_rate: 0.0,
            missing_coords_rate: 0.0,
            max_rows: None,
        }
    }

    fn abundance(&self, year: f64) -> Vec<f64> {
        self.species
            .iter()
            .map(|p| match p.peak_year {
                Some(peak) => p.abundance * (-(year - peak).powi(2) / (2.0 * p.spread_years.powi(2))).exp(),
                None => p.abundance,
            })
            .collect()
    }
}

/// One CSV row. Blank date or coordinates mark a planted defect.
#[derive(Debug, Clone, PartialEq)]
pub struct SynthRow {
    pub expedition_id: String,
    pub date: Option<NaiveDate>,
    pub position: Option<(f64, f64)>,
    pub species: Species,
    pub sex: Sex,
    pub length_ft: Option<f64>,
    pub nation: String,
    pub expedition_type: ExpeditionType,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SynthStats {
    pub seed: u64,
    pub rows: u64,
    pub expeditions: u64,
    pub missing_date: u64,
    pub missing_coords: u64,
    /// Position changes between consecutive clean rows of an expedition;
    /// the route count a correct reconstruction must find.
    pub planted_movements: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthCorpus {
    pub rows: Vec<SynthRow>,
    pub stats: SynthStats,
}

impl SynthCorpus {
    pub fn write_csv<W: Write>(&self, out: W) -> Result<(), csv::Error> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(SYNTH_HEADER)?;
        for r in &self.rows {
            let (lat, lon) = r.position.map(|(a, b)| (a.to_string(), b.to_string())).unwrap_or_default();
            w.write_record([
                r.expedition_id.as_str(),
                &r.date.map(|d| d.format("%Y-%m-%d").to_string()).unwrap_or_default(),
                &lat,
                &lon,
                r.species.code(),
                r.sex.code(),
                &r.length_ft.map(|l| l.to_string()).unwrap_or_default(),
                &r.nation,
                r.expedition_type.code(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn to_csv_bytes(&self) -> Vec<u8> {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to memory");
        buf
    }
}

/// Column mapping for files written by [`SynthCorpus::write_csv`].
pub fn column_mapping() -> ColumnMapping {
    ColumnMapping { source_line: None, ..ColumnMapping::canonical() }
}

const PELAGIC_NATIONS: [&str; 5] = ["NOR", "GBR", "JPN", "USSR", "NLD"];
const LAND_STATIONS: [(&str, f64, f64); 8] = [
    ("GBR", -54.3, -36.5),
    ("ZAF", -29.9, 31.0),
    ("ISL", 64.1, -21.9),
    ("JPN", 35.0, 140.5),
    ("AUS", -35.0, 117.9),
    ("CAN", 47.5, -52.7),
    ("NOR", 68.0, 14.0),
    ("PER", -12.0, -77.5),
];

fn quantize(v: f64) -> f64 {
    (v * 100.0).round() / 100.0
}

fn quantize_pos(lat: f64, lon: f64) -> (f64, f64) {
    let lon = quantize(canonical_lon(lon));
    (quantize(lat.clamp(-89.0, 89.0)), if lon >= 180.0 { lon - 360.0 } else { lon })
}

fn pick_weighted(rng: &mut ChaCha8Rng, weights: &[f64]) -> usize {
    let total: f64 = weights.iter().sum();
    let mut x = rng.random::<f64>() * total;
    for (k, w) in weights.iter().enumerate() {
        if x < *w {
            return k;
        }
        x -= w;
    }
    weights.len() - 1
}

fn sample_year(rng: &mut ChaCha8Rng, spec: &SynthSpec) -> i32 {
    let peak = spec.activity.0.iter().map(|k| k.1).fold(f64::MIN, f64::max).max(1e-9);
    loop {
        let y = rng.random_range(spec.first_year..=spec.last_year);
        if rng.random::<f64>() * peak <= spec.activity.at(y as f64) {
            return y;
        }
    }
}

pub fn generate(spec: &SynthSpec) -> SynthCorpus {
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let lengths: Vec<Normal<f64>> = spec
        .species
        .iter()
        .map(|p| Normal::new(p.length_mode_ft, p.length_sd_ft.max(1e-9)).expect("finite length profile"))
        .collect();
    let last_day = NaiveDate::from_ymd_opt(spec.last_year, 12, 31).expect("valid last year");
    let mut rows: Vec<SynthRow> = Vec::new();

    for k in 0..spec.expeditions {
        let year = sample_year(&mut rng, spec);
        let pelagic = rng.random_bool(spec.pelagic_share);
        let (nation, expedition_type, mut pos, walk_step) = if pelagic {
            let nation = PELAGIC_NATIONS[rng.random_range(0..PELAGIC_NATIONS.len())];
            // Antarctic grounds, or North Pacific grounds straddling the dateline
            let pos = if rng.random_bool(0.75) {
                (rng.random_range(-70.0..-55.0), rng.random_range(-180.0..180.0))
            } else {
                (rng.random_range(40.0..58.0), rng.random_range(160.0..210.0))
            };
            (nation, ExpeditionType::Pelagic, pos, 2.5)
        } else {
            let (nation, lat, lon) = LAND_STATIONS[rng.random_range(0..LAND_STATIONS.len())];
            (nation, ExpeditionType::Land, (lat, lon), 0.6)
        };
        let home = pos;
        pos = quantize_pos(pos.0, pos.1);
        let expedition_id = format!("{nation}-{year}-{k:05}");
        let mut date = NaiveDate::from_ymd_opt(year, 1, 1).unwrap() + Duration::days(rng.random_range(0..280));
        let n_stops = rng.random_range(spec.min_stops..=spec.max_stops);
        let mut visited: Vec<(f64, f64)> = Vec::new();

        for s in 0..n_stops {
            if s > 0 {
                if visited.len() > 1 && rng.random_bool(spec.revisit_prob) {
                    pos = visited[rng.random_range(0..visited.len())];
                } else {
                    let step = rng.random_range(0.2..walk_step);
                    let heading = rng.random_range(0.0..std::f64::consts::TAU);
                    let mut lat = pos.0 + step * heading.sin();
                    let mut lon = pos.1 + step * heading.cos() / pos.0.to_radians().cos().max(0.2);
                    if !pelagic {
                        // shore stations stay near home
                        lat = lat.clamp(home.0 - 1.5, home.0 + 1.5);
                        lon = lon.clamp(home.1 - 2.0, home.1 + 2.0);
                    }
                    pos = quantize_pos(lat, lon);
                }
                if !rng.random_bool(spec.same_day_move_prob) {
                    date += Duration::days(rng.random_range(1..=4));
                }
            }
            if date > last_day {
                break;
            }
            visited.push(pos);
            let abundance = spec.abundance(date.year() as f64 + date.ordinal0() as f64 / 365.0);
            let mut catches = 1;
            while catches < 8 && rng.random_bool(spec.extra_catch_prob) {
                catches += 1;
            }
            for _ in 0..catches {
                let sp = pick_weighted(&mut rng, &abundance);
                let sex = match rng.random_range(0..100) {
                    0..=2 => Sex::Unknown,
                    3..=51 => Sex::Female,
                    _ => Sex::Male,
                };
                let length_ft = rng
                    .random_bool(spec.length_present_prob)
                    .then(|| quantize(lengths[sp].sample(&mut rng).clamp(5.0, 110.0)));
                rows.push(SynthRow {
                    expedition_id: expedition_id.clone(),
                    date: Some(date),
                    position: Some(pos),
                    species: spec.species[sp].species,
                    sex,
                    length_ft,
                    nation: nation.to_string(),
                    expedition_type,
                });
            }
        }
    }

    if let Some(max) = spec.max_rows {
        rows.truncate(max);
    }

    let n = rows.len();
    let n_date = (spec.missing_date_rate * n as f64).round() as usize;
    let n_coords = (spec.missing_coords_rate * n as f64).round() as usize;
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut rng);
    for &k in &order[..n_date.min(n)] {
        rows[k].date = None;
    }
    for &k in &order[n_date.min(n)..(n_date + n_coords).min(n)] {
        rows[k].position = None;
    }

    let mut planted = 0u64;
    let mut expeditions = 0u64;
    let mut prev: Option<(&str, (f64, f64))> = None;
    let mut last_exp: Option<&str> = None;
    for r in &rows {
        if last_exp != Some(r.expedition_id.as_str()) {
            expeditions += 1;
            last_exp = Some(&r.expedition_id);
        }
        let (Some(_), Some(p)) = (r.date, r.position) else { continue };
        if let Some((e, q)) = prev {
            if e == r.expedition_id && q != p {
                planted += 1;
            }
        }
        prev = Some((&r.expedition_id, p));
    }

    let stats = SynthStats {
        seed: spec.seed,
        rows: n as u64,
        expeditions,
        missing_date: n_date.min(n) as u64,
        missing_coords: n_coords.min(n.saturating_sub(n_date)) as u64,
        planted_movements: planted,
    };
    SynthCorpus { rows, stats }
}

pub fn generate_progression_demo(seed: u64) -> SynthCorpus {
    generate(&SynthSpec::progression_demo(seed))
}
