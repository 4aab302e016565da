//! Default color-encoding classes, loaded from `data/classes.json`.

use std::collections::BTreeMap;
use std::str::FromStr;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::model::CatchRecord;

pub const CLASSES_JSON: &str = include_str!("../data/classes.json");

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ColorEncoding {
    #[default]
    SpeciesTaxonomy,
    NationContinent,
    Sex,
    LandPelagic,
}

impl ColorEncoding {
    pub const ALL: [ColorEncoding; 4] =
        [Self::SpeciesTaxonomy, Self::NationContinent, Self::Sex, Self::LandPelagic];

    pub fn code(self) -> &'static str {
        match self {
            Self::SpeciesTaxonomy => "species-taxonomy",
            Self::NationContinent => "nation-continent",
            Self::Sex => "sex",
            Self::LandPelagic => "land-vs-pelagic",
        }
    }

    fn table_key(self) -> &'static str {
        match self {
            Self::SpeciesTaxonomy => "species_taxonomy",
            Self::NationContinent => "nation_continent",
            Self::Sex => "sex",
            Self::LandPelagic => "land_pelagic",
        }
    }

    /// Class of a record under this encoding.
    pub fn class_of(self, r: &CatchRecord) -> &'static str {
        let table = tables().get(self);
        let key = match self {
            Self::SpeciesTaxonomy => r.species.code(),
            Self::NationContinent => r.nation.as_str(),
            Self::Sex => r.sex.code(),
            Self::LandPelagic => r.expedition_type.code(),
        };
        table.classes.get(key).map(String::as_str).unwrap_or(table.default.as_str())
    }
}

impl FromStr for ColorEncoding {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        Self::ALL
            .into_iter()
            .find(|e| e.code() == s)
            .ok_or_else(|| format!("unknown color encoding '{s}'"))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EncodingTable {
    pub default: String,
    pub classes: BTreeMap<String, String>,
    pub colors: BTreeMap<String, String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassTables(BTreeMap<String, EncodingTable>);

impl ClassTables {
    pub fn get(&self, enc: ColorEncoding) -> &EncodingTable {
        &self.0[enc.table_key()]
    }
}

pub fn tables() -> &'static ClassTables {
    static TABLES: OnceLock<ClassTables> = OnceLock::new();
    TABLES.get_or_init(|| serde_json::from_str(CLASSES_JSON).expect("bundled classes.json is valid"))
}
