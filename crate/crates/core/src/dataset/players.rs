use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use super::{parse_date, DatasetError, FixtureKey, MatchTable};

const MAX_MINUTES: u32 = 130;

/// One player's line in one fixture. Fixtures may belong to competitions that
/// are not in the match table (cups, other leagues); those rows are disclosed
/// by date like any other.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlayerAppearance {
    pub fixture: FixtureKey,
    pub player_id: String,
    pub team: String,
    pub minutes: u32,
    pub goals: u32,
    pub assists: u32,
    pub shots: u32,
    pub cards: u32,
    pub tackles: u32,
    pub interceptions: u32,
    pub xg: Option<f64>,
    pub age: u32,
    pub position: String,
}

#[derive(Debug, Serialize, Deserialize)]
struct PlayerRow {
    #[serde(rename = "Date")]
    date: String,
    #[serde(rename = "HomeTeam")]
    home_team: String,
    #[serde(rename = "AwayTeam")]
    away_team: String,
    #[serde(rename = "Player")]
    player: String,
    #[serde(rename = "Team")]
    team: String,
    #[serde(rename = "Minutes")]
    minutes: u32,
    #[serde(rename = "Goals")]
    goals: u32,
    #[serde(rename = "Assists")]
    assists: u32,
    #[serde(rename = "Shots")]
    shots: u32,
    #[serde(rename = "Cards")]
    cards: u32,
    #[serde(rename = "Tackles")]
    tackles: u32,
    #[serde(rename = "Interceptions")]
    interceptions: u32,
    #[serde(rename = "xG")]
    xg: Option<f64>,
    #[serde(rename = "Age")]
    age: u32,
    #[serde(rename = "Position")]
    position: String,
}

/// Date-sorted player appearances.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct PlayerTable {
    rows: Vec<PlayerAppearance>,
}

impl PlayerTable {
    pub fn new(mut rows: Vec<PlayerAppearance>) -> Self {
        rows.sort_by_key(|r| r.fixture.date);
        PlayerTable { rows }
    }

    pub fn rows(&self) -> &[PlayerAppearance] {
        &self.rows
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// Fixture keys dated inside the match table's range that the match table
    /// does not contain. Later-dated keys are treated as future fixtures.
    pub fn unresolved(&self, matches: &MatchTable) -> Vec<&FixtureKey> {
        let Some((_, last)) = matches.date_range() else {
            return Vec::new();
        };
        self.rows
            .iter()
            .map(|r| &r.fixture)
            .filter(|k| k.date <= last && matches.find(k).is_none())
            .collect()
    }
}

pub fn load_players(path: impl AsRef<Path>) -> Result<PlayerTable, DatasetError> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|source| DatasetError::Io {
        path: path.display().to_string(),
        source,
    })?;
    read_players(file)
}

pub fn read_players<R: Read>(input: R) -> Result<PlayerTable, DatasetError> {
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(input);
    let headers = reader.headers().map_err(DatasetError::Csv)?.clone();
    let mut rows = Vec::new();
    for record in reader.records() {
        let record = record.map_err(DatasetError::Csv)?;
        let line = record.position().map_or(0, |p| p.line());
        let row: PlayerRow = record
            .deserialize(Some(&headers))
            .map_err(|e| DatasetError::Row { line, message: e.to_string() })?;
        let err = |message: String| DatasetError::Row { line, message };
        let date: NaiveDate =
            parse_date(&row.date).ok_or_else(|| err(format!("unparseable date {:?}", row.date)))?;
        if row.minutes > MAX_MINUTES {
            return Err(err(format!("minutes {} outside [0, {MAX_MINUTES}]", row.minutes)));
        }
        if let Some(x) = row.xg {
            if !(x >= 0.0 && x.is_finite()) {
                return Err(err(format!("xG {x} is negative or not finite")));
            }
        }
        rows.push(PlayerAppearance {
            fixture: FixtureKey {
                date,
                home_team: row.home_team,
                away_team: row.away_team,
            },
            player_id: row.player,
            team: row.team,
            minutes: row.minutes,
            goals: row.goals,
            assists: row.assists,
            shots: row.shots,
            cards: row.cards,
            tackles: row.tackles,
            interceptions: row.interceptions,
            xg: row.xg,
            age: row.age,
            position: row.position,
        });
    }
    Ok(PlayerTable::new(rows))
}

pub fn write_players<W: Write>(rows: &[PlayerAppearance], out: W) -> Result<(), DatasetError> {
    let mut w = csv::Writer::from_writer(out);
    if rows.is_empty() {
        // serde only emits a header alongside the first record
        w.write_record([
            "Date", "HomeTeam", "AwayTeam", "Player", "Team", "Minutes", "Goals", "Assists",
            "Shots", "Cards", "Tackles", "Interceptions", "xG", "Age", "Position",
        ])?;
    }
    for r in rows {
        w.serialize(PlayerRow {
            date: r.fixture.date.to_string(),
            home_team: r.fixture.home_team.clone(),
            away_team: r.fixture.away_team.clone(),
            player: r.player_id.clone(),
            team: r.team.clone(),
            minutes: r.minutes,
            goals: r.goals,
            assists: r.assists,
            shots: r.shots,
            cards: r.cards,
            tackles: r.tackles,
            interceptions: r.interceptions,
            xg: r.xg,
            age: r.age,
            position: r.position.clone(),
        })?;
    }
    w.flush().map_err(|source| DatasetError::Io {
        path: "<output>".into(),
        source,
    })?;
    Ok(())
}
