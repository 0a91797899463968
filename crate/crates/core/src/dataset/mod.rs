//! Historical match and player tables with date-based progressive disclosure.

mod load;
mod players;
mod scenario;

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};

use chrono::{Datelike, NaiveDate};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::money::Odds;

pub use load::{load_matches, read_matches, write_matches, ColumnMap};
pub use players::{load_players, read_players, write_players, PlayerAppearance, PlayerTable};
pub use scenario::{scenario_config, ScenarioRegistry, ScenarioSpec, Split, DEFAULT_REGISTRY, MINI_DIR};

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("missing required column {0:?}")]
    MissingColumn(String),
    #[error("line {line}: {message}")]
    Row { line: u64, message: String },
    #[error("line {line}: duplicate fixture {key}")]
    Duplicate { line: u64, key: FixtureKey },
    #[error("unknown scenario {name:?}; registered: {}", registered.join(", "))]
    UnknownScenario {
        name: String,
        registered: Vec<String>,
    },
    #[error("scenario registry line {line}: {message}")]
    Registry { line: usize, message: String },
    #[error("invalid column map: {0}")]
    Schema(String),
}

/// Full-time result of a fixture.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FullTime {
    Home,
    Draw,
    Away,
}

impl FullTime {
    pub fn from_goals(home: u32, away: u32) -> Self {
        match home.cmp(&away) {
            std::cmp::Ordering::Greater => FullTime::Home,
            std::cmp::Ordering::Equal => FullTime::Draw,
            std::cmp::Ordering::Less => FullTime::Away,
        }
    }

    pub fn code(self) -> &'static str {
        match self {
            FullTime::Home => "H",
            FullTime::Draw => "D",
            FullTime::Away => "A",
        }
    }

    pub fn from_code(code: &str) -> Option<Self> {
        match code.trim() {
            "H" => Some(FullTime::Home),
            "D" => Some(FullTime::Draw),
            "A" => Some(FullTime::Away),
            _ => None,
        }
    }

    /// Position in the (home, draw, away) ordering.
    pub fn index(self) -> usize {
        self as usize
    }
}

/// Identifies a fixture within a table.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct FixtureKey {
    pub date: NaiveDate,
    pub home_team: String,
    pub away_team: String,
}

impl fmt::Display for FixtureKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {} vs {}", self.date, self.home_team, self.away_team)
    }
}

/// One bookmaker's prices for a fixture. Any price may be missing.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct BookQuote {
    pub home: Option<Odds>,
    pub draw: Option<Odds>,
    pub away: Option<Odds>,
    pub over25: Option<Odds>,
    pub under25: Option<Odds>,
}

impl BookQuote {
    pub fn is_empty(&self) -> bool {
        self.home.is_none()
            && self.draw.is_none()
            && self.away.is_none()
            && self.over25.is_none()
            && self.under25.is_none()
    }

    pub fn trio(&self) -> Option<[Odds; 3]> {
        Some([self.home?, self.draw?, self.away?])
    }

    pub fn totals(&self) -> Option<[Odds; 2]> {
        Some([self.over25?, self.under25?])
    }
}

/// Match statistics; absent in seasons that predate their collection.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct MatchStats {
    pub counts: BTreeMap<String, u32>,
    pub referee: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MatchRecord {
    pub season_id: String,
    pub date: NaiveDate,
    pub home_team: String,
    pub away_team: String,
    pub home_goals: u32,
    pub away_goals: u32,
    pub result: FullTime,
    pub half_time: Option<(u32, u32)>,
    pub stats: Option<MatchStats>,
    pub book_odds: BTreeMap<String, BookQuote>,
}

impl MatchRecord {
    pub fn key(&self) -> FixtureKey {
        FixtureKey {
            date: self.date,
            home_team: self.home_team.clone(),
            away_team: self.away_team.clone(),
        }
    }

    pub fn total_goals(&self) -> u32 {
        self.home_goals + self.away_goals
    }

    pub fn teams(&self) -> String {
        format!("{} vs {}", self.home_team, self.away_team)
    }
}

/// Season label for a date, with seasons turning over on 1 July ("2023/24").
pub fn season_of(date: NaiveDate) -> String {
    let start = if date.month() >= 7 {
        date.year()
    } else {
        date.year() - 1
    };
    format!("{start}/{:02}", (start + 1).rem_euclid(100))
}

/// Parses "dd/mm/yy", "dd/mm/yyyy" or ISO "yyyy-mm-dd". Two-digit years
/// pivot at 1990.
pub fn parse_date(text: &str) -> Option<NaiveDate> {
    let s = text.trim();
    if let Ok(d) = NaiveDate::parse_from_str(s, "%Y-%m-%d") {
        return Some(d);
    }
    let mut parts = s.split('/');
    let day: u32 = parts.next()?.parse().ok()?;
    let month: u32 = parts.next()?.parse().ok()?;
    let year_text = parts.next()?;
    if parts.next().is_some() {
        return None;
    }
    let year: i32 = match year_text.len() {
        2 => {
            let yy: i32 = year_text.parse().ok()?;
            if yy >= 90 {
                1900 + yy
            } else {
                2000 + yy
            }
        }
        4 => year_text.parse().ok()?,
        _ => return None,
    };
    NaiveDate::from_ymd_opt(year, month, day)
}

/// Date-sorted, immutable fixture table.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct MatchTable {
    records: Vec<MatchRecord>,
}

impl MatchTable {
    /// Builds a table, sorting stably by date and rejecting duplicate keys.
    pub fn new(mut records: Vec<MatchRecord>) -> Result<Self, DatasetError> {
        records.sort_by_key(|r| r.date);
        let mut seen = std::collections::HashSet::new();
        for (i, r) in records.iter().enumerate() {
            if !seen.insert(r.key()) {
                return Err(DatasetError::Duplicate {
                    line: i as u64 + 1,
                    key: r.key(),
                });
            }
        }
        Ok(MatchTable { records })
    }

    pub fn records(&self) -> &[MatchRecord] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// Concatenates tables, re-sorting and re-checking uniqueness.
    pub fn merge(tables: impl IntoIterator<Item = MatchTable>) -> Result<Self, DatasetError> {
        MatchTable::new(tables.into_iter().flat_map(|t| t.records).collect())
    }

    pub fn season(&self, season_id: &str) -> impl Iterator<Item = &MatchRecord> {
        let season_id = season_id.to_string();
        self.records.iter().filter(move |r| r.season_id == season_id)
    }

    /// Fixtures of a season grouped by calendar date; one group per matchday.
    pub fn matchdays(&self, season_id: &str) -> Vec<(NaiveDate, Vec<&MatchRecord>)> {
        let mut days: Vec<(NaiveDate, Vec<&MatchRecord>)> = Vec::new();
        for r in self.season(season_id) {
            match days.last_mut() {
                Some((d, group)) if *d == r.date => group.push(r),
                _ => days.push((r.date, vec![r])),
            }
        }
        days
    }

    pub fn find(&self, key: &FixtureKey) -> Option<&MatchRecord> {
        let lo = self.records.partition_point(|r| r.date < key.date);
        self.records[lo..]
            .iter()
            .take_while(|r| r.date == key.date)
            .find(|r| r.home_team == key.home_team && r.away_team == key.away_team)
    }

    pub fn date_range(&self) -> Option<(NaiveDate, NaiveDate)> {
        Some((self.records.first()?.date, self.records.last()?.date))
    }
}

/// Match and player tables loaded together.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Dataset {
    pub matches: MatchTable,
    pub players: PlayerTable,
}

impl Dataset {
    pub fn new(matches: MatchTable, players: PlayerTable) -> Self {
        Dataset { matches, players }
    }

    /// Loads every `*.csv` in `dir`: files whose name starts with `players`
    /// go to the player table, the rest are merged into the match table. A
    /// `schema.toml` in the directory overrides the default column map.
    pub fn load_dir(dir: impl AsRef<Path>) -> Result<Self, DatasetError> {
        let dir = dir.as_ref();
        let io = |source| DatasetError::Io {
            path: dir.display().to_string(),
            source,
        };
        let schema_path = dir.join("schema.toml");
        let schema = if schema_path.exists() {
            ColumnMap::from_toml(&std::fs::read_to_string(&schema_path).map_err(io)?)?
        } else {
            ColumnMap::default()
        };
        let mut files: Vec<PathBuf> = std::fs::read_dir(dir)
            .map_err(io)?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|x| x == "csv"))
            .collect();
        files.sort();
        let mut tables = Vec::new();
        let mut player_rows = Vec::new();
        for f in files {
            let name = f.file_name().and_then(|n| n.to_str()).unwrap_or_default();
            if name.starts_with("players") {
                player_rows.extend(load_players(&f)?.rows().iter().cloned());
            } else {
                tables.push(load_matches(&f, &schema)?);
            }
        }
        Ok(Dataset {
            matches: MatchTable::merge(tables)?,
            players: PlayerTable::new(player_rows),
        })
    }

    pub fn snapshot_at(&self, as_of: NaiveDate) -> DisclosedView<'_> {
        snapshot_at(&self.matches, &self.players, as_of)
    }
}

/// The rows visible to an agent on a given date: everything strictly before it.
#[derive(Debug, Clone, Copy)]
pub struct DisclosedView<'a> {
    pub as_of: NaiveDate,
    pub matches: &'a [MatchRecord],
    pub players: &'a [PlayerAppearance],
}

impl<'a> DisclosedView<'a> {
    /// Rows disclosed in `self` but not in an earlier view.
    pub fn matches_since(&self, earlier: NaiveDate) -> &'a [MatchRecord] {
        let lo = self.matches.partition_point(|r| r.date < earlier);
        &self.matches[lo..]
    }

    pub fn players_since(&self, earlier: NaiveDate) -> &'a [PlayerAppearance] {
        let lo = self.players.partition_point(|r| r.fixture.date < earlier);
        &self.players[lo..]
    }

    pub fn write_matches_csv<W: std::io::Write>(&self, out: W) -> Result<(), DatasetError> {
        write_matches(self.matches, out)
    }

    pub fn write_players_csv<W: std::io::Write>(&self, out: W) -> Result<(), DatasetError> {
        write_players(self.players, out)
    }
}

/// Snapshot of both tables as of `as_of`.
pub fn snapshot_at<'a>(
    matches: &'a MatchTable,
    players: &'a PlayerTable,
    as_of: NaiveDate,
) -> DisclosedView<'a> {
    let m = matches.records.partition_point(|r| r.date < as_of);
    let p = players.rows().partition_point(|r| r.fixture.date < as_of);
    DisclosedView {
        as_of,
        matches: &matches.records[..m],
        players: &players.rows()[..p],
    }
}
