use std::collections::{BTreeMap, BTreeSet};
use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use serde::Deserialize;

use super::{
    parse_date, season_of, BookQuote, DatasetError, FullTime, MatchRecord, MatchStats, MatchTable,
};
use crate::money::Odds;

const STAT_COLUMNS: &[&str] = &[
    "HS", "AS", "HST", "AST", "HF", "AF", "HC", "AC", "HY", "AY", "HR", "AR",
];

const BOOKMAKERS: &[&str] = &[
    "B365", "GB", "IW", "BW", "LB", "PS", "WH", "SJ", "VC", "SB", "BS", "SY", "1XB", "BF", "P",
    "Max", "Avg", "BbMx", "BbAv", "B365C", "BWC", "IWC", "PSC", "WHC", "VCC", "PC", "MaxC",
    "AvgC",
];

/// Column names for the match CSV. Defaults follow the public football-results
/// convention; any field may be overridden from a TOML document.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ColumnMap {
    pub date: String,
    pub home_team: String,
    pub away_team: String,
    pub home_goals: String,
    pub away_goals: String,
    pub result: String,
    /// Optional explicit season label; otherwise derived from the date.
    pub season: String,
    pub half_time_home: String,
    pub half_time_away: String,
    pub referee: String,
    pub stats: Vec<String>,
    /// Bookmaker prefixes; prices are read from `<P>H`, `<P>D`, `<P>A`,
    /// `<P>>2.5` and `<P><2.5`.
    pub bookmakers: Vec<String>,
    /// Explicit team-name aliases applied on ingest.
    pub aliases: BTreeMap<String, String>,
}

impl Default for ColumnMap {
    fn default() -> Self {
        ColumnMap {
            date: "Date".into(),
            home_team: "HomeTeam".into(),
            away_team: "AwayTeam".into(),
            home_goals: "FTHG".into(),
            away_goals: "FTAG".into(),
            result: "FTR".into(),
            season: "Season".into(),
            half_time_home: "HTHG".into(),
            half_time_away: "HTAG".into(),
            referee: "Referee".into(),
            stats: STAT_COLUMNS.iter().map(|s| s.to_string()).collect(),
            bookmakers: BOOKMAKERS.iter().map(|s| s.to_string()).collect(),
            aliases: BTreeMap::new(),
        }
    }
}

impl ColumnMap {
    pub fn from_toml(text: &str) -> Result<Self, DatasetError> {
        toml::from_str(text).map_err(|e| DatasetError::Schema(e.to_string()))
    }

    fn team(&self, raw: &str) -> String {
        let raw = raw.trim();
        self.aliases
            .get(raw)
            .cloned()
            .unwrap_or_else(|| raw.to_string())
    }
}

struct BookColumns {
    name: String,
    cols: [Option<usize>; 5],
}

pub fn load_matches(path: impl AsRef<Path>, schema: &ColumnMap) -> Result<MatchTable, DatasetError> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|source| DatasetError::Io {
        path: path.display().to_string(),
        source,
    })?;
    read_matches(file, schema)
}

pub fn read_matches<R: Read>(input: R, schema: &ColumnMap) -> Result<MatchTable, DatasetError> {
    let mut reader = csv::ReaderBuilder::new()
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(input);
    let headers = reader.headers()?.clone();
    // Some published files carry a BOM on the first header.
    let index: BTreeMap<&str, usize> = headers
        .iter()
        .enumerate()
        .map(|(i, h)| (h.trim_start_matches('\u{feff}'), i))
        .collect();
    let required = |name: &str| {
        index
            .get(name)
            .copied()
            .ok_or_else(|| DatasetError::MissingColumn(name.to_string()))
    };
    let c_date = required(&schema.date)?;
    let c_home = required(&schema.home_team)?;
    let c_away = required(&schema.away_team)?;
    let c_hg = required(&schema.home_goals)?;
    let c_ag = required(&schema.away_goals)?;
    let c_res = required(&schema.result)?;
    let optional = |name: &str| index.get(name).copied();
    let c_season = optional(&schema.season);
    let c_hthg = optional(&schema.half_time_home);
    let c_htag = optional(&schema.half_time_away);
    let c_ref = optional(&schema.referee);
    let stat_cols: Vec<(String, usize)> = schema
        .stats
        .iter()
        .filter_map(|s| optional(s).map(|i| (s.clone(), i)))
        .collect();
    let books: Vec<BookColumns> = schema
        .bookmakers
        .iter()
        .map(|b| BookColumns {
            name: b.clone(),
            cols: [
                optional(&format!("{b}H")),
                optional(&format!("{b}D")),
                optional(&format!("{b}A")),
                optional(&format!("{b}>2.5")),
                optional(&format!("{b}<2.5")),
            ],
        })
        .filter(|b| b.cols.iter().any(Option::is_some))
        .collect();

    let mut records = Vec::new();
    let mut seen = std::collections::HashSet::new();
    for row in reader.records() {
        let row = row?;
        let line = row.position().map_or(0, |p| p.line());
        let cell = |i: usize| row.get(i).unwrap_or("").trim();
        if row.iter().all(|c| c.trim().is_empty()) {
            continue;
        }
        let err = |message: String| DatasetError::Row { line, message };

        let date = parse_date(cell(c_date))
            .ok_or_else(|| err(format!("unparseable date {:?}", cell(c_date))))?;
        let count = |i: usize, what: &str| -> Result<u32, DatasetError> {
            cell(i)
                .parse::<u32>()
                .map_err(|_| err(format!("bad {what} {:?}", cell(i))))
        };
        let home_goals = count(c_hg, "home goals")?;
        let away_goals = count(c_ag, "away goals")?;
        let result = FullTime::from_code(cell(c_res))
            .ok_or_else(|| err(format!("bad result code {:?}", cell(c_res))))?;
        if result != FullTime::from_goals(home_goals, away_goals) {
            return Err(err(format!(
                "result {} disagrees with score {home_goals}-{away_goals}",
                result.code()
            )));
        }
        let opt_count = |c: Option<usize>, what: &str| -> Result<Option<u32>, DatasetError> {
            match c.map(cell) {
                None | Some("") => Ok(None),
                Some(v) => v
                    .parse::<u32>()
                    .map(Some)
                    .map_err(|_| err(format!("bad {what} {v:?}"))),
            }
        };
        let half_time = match (opt_count(c_hthg, "half-time goals")?, opt_count(c_htag, "half-time goals")?) {
            (Some(h), Some(a)) => Some((h, a)),
            _ => None,
        };
        let mut counts = BTreeMap::new();
        for (name, i) in &stat_cols {
            if let Some(v) = opt_count(Some(*i), name)? {
                counts.insert(name.clone(), v);
            }
        }
        let referee = c_ref.map(cell).filter(|s| !s.is_empty()).map(String::from);
        let stats = (!counts.is_empty() || referee.is_some()).then_some(MatchStats { counts, referee });

        let mut book_odds = BTreeMap::new();
        for book in &books {
            let mut prices = [None; 5];
            for (slot, col) in prices.iter_mut().zip(book.cols) {
                if let Some(text) = col.map(cell).filter(|s| !s.is_empty()) {
                    *slot = Some(Odds::parse_lenient(text).map_err(|e| {
                        err(format!("bad odds for {}: {e}", book.name))
                    })?);
                }
            }
            let quote = BookQuote {
                home: prices[0],
                draw: prices[1],
                away: prices[2],
                over25: prices[3],
                under25: prices[4],
            };
            if !quote.is_empty() {
                book_odds.insert(book.name.clone(), quote);
            }
        }

        let season_id = c_season
            .map(cell)
            .filter(|s| !s.is_empty())
            .map(String::from)
            .unwrap_or_else(|| season_of(date));
        let record = MatchRecord {
            season_id,
            date,
            home_team: schema.team(cell(c_home)),
            away_team: schema.team(cell(c_away)),
            home_goals,
            away_goals,
            result,
            half_time,
            stats,
            book_odds,
        };
        if !seen.insert(record.key()) {
            return Err(DatasetError::Duplicate {
                line,
                key: record.key(),
            });
        }
        records.push(record);
    }
    MatchTable::new(records)
}

/// Writes records in the same column convention `read_matches` accepts, with
/// ISO dates and an explicit season column.
pub fn write_matches<W: Write>(records: &[MatchRecord], out: W) -> Result<(), DatasetError> {
    let stat_names: BTreeSet<&str> = records
        .iter()
        .filter_map(|r| r.stats.as_ref())
        .flat_map(|s| s.counts.keys().map(String::as_str))
        .collect();
    let stat_names: Vec<&str> = STAT_COLUMNS
        .iter()
        .copied()
        .filter(|s| stat_names.contains(s))
        .chain(stat_names.iter().copied().filter(|s| !STAT_COLUMNS.contains(s)))
        .collect();
    let book_names: BTreeSet<&str> = records
        .iter()
        .flat_map(|r| r.book_odds.keys().map(String::as_str))
        .collect();

    let mut header: Vec<String> = [
        "Season", "Date", "HomeTeam", "AwayTeam", "FTHG", "FTAG", "FTR", "HTHG", "HTAG", "Referee",
    ]
    .iter()
    .map(|s| s.to_string())
    .collect();
    header.extend(stat_names.iter().map(|s| s.to_string()));
    for b in &book_names {
        for suffix in ["H", "D", "A", ">2.5", "<2.5"] {
            header.push(format!("{b}{suffix}"));
        }
    }

    let mut w = csv::Writer::from_writer(out);
    w.write_record(&header)?;
    for r in records {
        let mut row = vec![
            r.season_id.clone(),
            r.date.to_string(),
            r.home_team.clone(),
            r.away_team.clone(),
            r.home_goals.to_string(),
            r.away_goals.to_string(),
            r.result.code().to_string(),
        ];
        match r.half_time {
            Some((h, a)) => {
                row.push(h.to_string());
                row.push(a.to_string());
            }
            None => row.extend([String::new(), String::new()]),
        }
        row.push(
            r.stats
                .as_ref()
                .and_then(|s| s.referee.clone())
                .unwrap_or_default(),
        );
        for s in &stat_names {
            row.push(
                r.stats
                    .as_ref()
                    .and_then(|st| st.counts.get(*s))
                    .map(u32::to_string)
                    .unwrap_or_default(),
            );
        }
        for b in &book_names {
            let q = r.book_odds.get(*b).copied().unwrap_or_default();
            for price in [q.home, q.draw, q.away, q.over25, q.under25] {
                row.push(price.map(|o| o.to_string()).unwrap_or_default());
            }
        }
        w.write_record(&row)?;
    }
    w.flush().map_err(|source| DatasetError::Io {
        path: "<output>".into(),
        source,
    })?;
    Ok(())
}
