use std::collections::HashMap;
use std::io::{Read, Write};
use std::path::Path;
use std::str::FromStr;

use log::info;

use super::config::{EraRule, IngestConfig};
use super::results::map_drive_result;
use super::{GameState, PlayDataset, PlayRecord, PlayType};
use crate::domain::DriveOutcome;
use crate::error::{Error, Result};

/// Columns every input file must carry (after renames). The outcome comes
/// from either `outcome_drive` or `fixed_drive_result`; `era` and
/// `passer_or_rusher_id` are optional.
pub const REQUIRED_COLUMNS: &[&str] = &[
    "drive_id",
    "play_index_in_drive",
    "yardline_100",
    "down",
    "ydstogo",
    "half_seconds_remaining",
    "game_seconds_remaining",
    "posteam_timeouts_remaining",
    "defteam_timeouts_remaining",
    "score_differential",
    "posteam_spread",
    "posteam",
    "play_type",
    "season",
];

const WRITE_COLUMNS: &[&str] = &[
    "drive_id",
    "play_index_in_drive",
    "yardline_100",
    "down",
    "ydstogo",
    "half_seconds_remaining",
    "game_seconds_remaining",
    "era",
    "posteam_timeouts_remaining",
    "defteam_timeouts_remaining",
    "score_differential",
    "posteam_spread",
    "posteam",
    "passer_or_rusher_id",
    "play_type",
    "outcome_drive",
    "season",
];

pub fn parse_play_csv(path: &Path, config: &IngestConfig) -> Result<PlayDataset> {
    let file = std::fs::File::open(path)?;
    read_play_csv(file, config)
}

struct Columns {
    index: HashMap<&'static str, usize>,
}

impl Columns {
    fn get<'r>(&self, record: &'r csv::StringRecord, name: &str) -> Option<&'r str> {
        self.index.get(name).and_then(|&i| record.get(i)).map(str::trim)
    }
}

fn field<T: FromStr>(cols: &Columns, rec: &csv::StringRecord, line: u64, name: &str) -> Result<T> {
    let raw = cols.get(rec, name).unwrap_or("");
    raw.parse::<T>()
        .map_err(|_| Error::row(line, format!("column `{name}`: cannot parse `{raw}`")))
}

fn check_range<T: PartialOrd + std::fmt::Display>(value: T, lo: T, hi: T, name: &str, line: u64) -> Result<T> {
    if value < lo || value > hi {
        return Err(Error::row(line, format!("column `{name}`: {value} outside [{lo}, {hi}]")));
    }
    Ok(value)
}

/// Parse a play-by-play CSV from any reader.
pub fn read_play_csv<R: Read>(reader: R, config: &IngestConfig) -> Result<PlayDataset> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
    let headers = rdr.headers()?.clone();
    let position: HashMap<&str, usize> = headers.iter().enumerate().map(|(i, h)| (h.trim(), i)).collect();

    let optional = ["era", "passer_or_rusher_id", "outcome_drive", "fixed_drive_result", "drive_points"];
    let mut index = HashMap::new();
    for &canonical in REQUIRED_COLUMNS.iter().chain(optional.iter()) {
        if let Some(&i) = position.get(config.source_name(canonical)) {
            index.insert(canonical, i);
        }
    }
    if let Some(missing) = REQUIRED_COLUMNS.iter().find(|c| !index.contains_key(*c)) {
        return Err(Error::MissingColumn(config.source_name(missing).to_string()));
    }
    let use_label = index.contains_key("outcome_drive");
    if !use_label && !index.contains_key("fixed_drive_result") {
        return Err(Error::MissingColumn(config.source_name("outcome_drive").to_string()));
    }
    let era_from_column = match config.era {
        EraRule::FromSeason => false,
        EraRule::Auto => index.contains_key("era"),
        EraRule::Column => {
            if !index.contains_key("era") {
                return Err(Error::MissingColumn(config.source_name("era").to_string()));
            }
            true
        }
    };
    let cols = Columns { index };

    let mut plays = Vec::new();
    for record in rdr.records() {
        let rec = record?;
        let line = rec.position().map(|p| p.line()).unwrap_or(0);
        plays.push(parse_row(&cols, &rec, line, config, use_label, era_from_column)?);
    }

    let ds = PlayDataset::from_plays(plays)?;
    let excluded: Vec<PlayType> = config
        .exclude_play_types
        .iter()
        .map(|t| parse_play_type(t, &[]).expect("validated play type"))
        .collect();
    if excluded.is_empty() {
        return Ok(ds);
    }
    let (ds, dropped) = ds.filter_plays(|p| !excluded.contains(&p.play_type));
    if dropped > 0 {
        info!("dropped {dropped} drive(s) left without plays after filtering");
    }
    Ok(ds)
}

fn parse_play_type(raw: &str, other_tokens: &[String]) -> Option<PlayType> {
    let t = raw.to_ascii_lowercase();
    match t.as_str() {
        "pass" => Some(PlayType::Pass),
        "run" => Some(PlayType::Run),
        "other" => Some(PlayType::Other),
        _ if other_tokens.iter().any(|o| o.eq_ignore_ascii_case(&t)) => Some(PlayType::Other),
        _ => None,
    }
}

fn parse_row(
    cols: &Columns,
    rec: &csv::StringRecord,
    line: u64,
    config: &IngestConfig,
    use_label: bool,
    era_from_column: bool,
) -> Result<PlayRecord> {
    let drive_id: String = cols.get(rec, "drive_id").unwrap_or("").to_string();
    if drive_id.is_empty() {
        return Err(Error::row(line, "empty drive_id"));
    }
    let season: i32 = field(cols, rec, line, "season")?;
    let era = if era_from_column {
        field(cols, rec, line, "era")?
    } else {
        EraRule::era_of_season(season)
    };
    let half: f64 = field(cols, rec, line, "half_seconds_remaining")?;
    let game: f64 = field(cols, rec, line, "game_seconds_remaining")?;
    let spread: f64 = field(cols, rec, line, "posteam_spread")?;
    for (name, v) in [("half_seconds_remaining", half), ("game_seconds_remaining", game)] {
        if !(v.is_finite() && v >= 0.0) {
            return Err(Error::row(line, format!("column `{name}`: {v} must be a non-negative number")));
        }
    }
    if !spread.is_finite() {
        return Err(Error::row(line, "column `posteam_spread`: not finite"));
    }
    let state = GameState {
        yardline_100: check_range(field(cols, rec, line, "yardline_100")?, 1, 99, "yardline_100", line)?,
        down: check_range(field(cols, rec, line, "down")?, 1, 4, "down", line)?,
        ydstogo: check_range(field(cols, rec, line, "ydstogo")?, 1, i32::MAX, "ydstogo", line)?,
        half_seconds_remaining: half,
        game_seconds_remaining: game,
        era,
        posteam_timeouts_remaining: check_range(
            field(cols, rec, line, "posteam_timeouts_remaining")?,
            0,
            3,
            "posteam_timeouts_remaining",
            line,
        )?,
        defteam_timeouts_remaining: check_range(
            field(cols, rec, line, "defteam_timeouts_remaining")?,
            0,
            3,
            "defteam_timeouts_remaining",
            line,
        )?,
        score_differential: field(cols, rec, line, "score_differential")?,
        posteam_spread: spread,
    };
    let raw_type = cols.get(rec, "play_type").unwrap_or("");
    let play_type = parse_play_type(raw_type, &config.other_play_types)
        .ok_or_else(|| Error::row(line, format!("column `play_type`: invalid value `{raw_type}`")))?;
    let outcome_drive = if use_label {
        let raw = cols.get(rec, "outcome_drive").unwrap_or("");
        DriveOutcome::from_str(raw)
            .map_err(|_| Error::row(line, format!("column `outcome_drive`: invalid value `{raw}`")))?
    } else {
        let raw = cols.get(rec, "fixed_drive_result").unwrap_or("");
        let points = match cols.get(rec, "drive_points") {
            Some(s) if !s.is_empty() => field(cols, rec, line, "drive_points")?,
            _ => 0,
        };
        map_drive_result(raw, points).map_err(|e| Error::row(line, e.to_string()))?
    };
    let play_index_in_drive: u32 = field(cols, rec, line, "play_index_in_drive")?;
    if play_index_in_drive == 0 {
        return Err(Error::row(line, "column `play_index_in_drive`: must be >= 1"));
    }
    Ok(PlayRecord {
        drive_id,
        play_index_in_drive,
        state,
        posteam_id: cols.get(rec, "posteam").unwrap_or("").to_string(),
        passer_or_rusher_id: cols
            .get(rec, "passer_or_rusher_id")
            .filter(|s| !s.is_empty())
            .map(str::to_string),
        play_type,
        outcome_drive,
        season,
    })
}

/// Write a dataset in the canonical column layout (the layout
/// [`read_play_csv`] accepts with a default config).
pub fn write_play_csv<W: Write>(ds: &PlayDataset, writer: W) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(writer);
    wtr.write_record(WRITE_COLUMNS)?;
    for p in ds.plays() {
        let s = &p.state;
        wtr.write_record([
            p.drive_id.clone(),
            p.play_index_in_drive.to_string(),
            s.yardline_100.to_string(),
            s.down.to_string(),
            s.ydstogo.to_string(),
            s.half_seconds_remaining.to_string(),
            s.game_seconds_remaining.to_string(),
            s.era.to_string(),
            s.posteam_timeouts_remaining.to_string(),
            s.defteam_timeouts_remaining.to_string(),
            s.score_differential.to_string(),
            s.posteam_spread.to_string(),
            p.posteam_id.clone(),
            p.passer_or_rusher_id.clone().unwrap_or_default(),
            p.play_type.label().to_string(),
            p.outcome_drive.label().to_string(),
            p.season.to_string(),
        ])?;
    }
    wtr.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::test_support::dataset;

    const HEADER: &str = "drive_id,play_index_in_drive,yardline_100,down,ydstogo,half_seconds_remaining,game_seconds_remaining,posteam_timeouts_remaining,defteam_timeouts_remaining,score_differential,posteam_spread,posteam,play_type,outcome_drive,season";

    fn row(drive: &str, j: u32, outcome: &str) -> String {
        format!("{drive},{j},{},1,10,900,2700,3,3,0,-3.5,KC,pass,{outcome},2021", 80 - j)
    }

    fn parse(text: &str) -> Result<PlayDataset> {
        read_play_csv(text.as_bytes(), &IngestConfig::default())
    }

    #[test]
    fn six_rows_two_drives() {
        let mut text = HEADER.to_string();
        for d in ["A", "B"] {
            for j in 1..=3 {
                text.push('\n');
                text.push_str(&row(d, j, "TD"));
            }
        }
        let ds = parse(&text).unwrap();
        assert_eq!(ds.num_drives(), 2);
        assert!(ds.weights().iter().all(|&w| (w - 1.0 / 3.0).abs() < 1e-15));
        assert_eq!(ds.plays()[0].state.era, 2);
    }

    #[test]
    fn inconsistent_drive_outcome() {
        let text = format!("{HEADER}\n{}\n{}", row("A", 1, "TD"), row("A", 2, "FG"));
        let err = parse(&text).unwrap_err();
        assert!(matches!(&err, Error::Integrity { drive_id, .. } if drive_id == "A"), "{err}");
    }

    #[test]
    fn header_only_is_empty() {
        let ds = parse(HEADER).unwrap();
        assert_eq!(ds.num_drives(), 0);
        assert!(ds.is_empty());
    }

    #[test]
    fn missing_column_is_named() {
        let text = HEADER.replace(",ydstogo", ",yards");
        match parse(&text) {
            Err(Error::MissingColumn(c)) => assert_eq!(c, "ydstogo"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn bad_enum_reports_line() {
        let text = format!("{HEADER}\n{}\n{}", row("A", 1, "TD"), row("A", 2, "TD").replace("pass", "hike"));
        match parse(&text) {
            Err(Error::Row { line, message }) => {
                assert_eq!(line, 3);
                assert!(message.contains("hike"));
            }
            other => panic!("{other:?}"),
        }
        let text = format!("{HEADER}\n{}", row("A", 1, "TOUCHDOWN"));
        assert!(matches!(parse(&text), Err(Error::Row { line: 2, .. })));
    }

    #[test]
    fn out_of_range_values() {
        let text = format!("{HEADER}\n{}", row("A", 1, "TD").replace(",1,10,", ",5,10,"));
        assert!(matches!(parse(&text), Err(Error::Row { .. })));
    }

    #[test]
    fn renames_and_raw_results() {
        let header = HEADER.replace("posteam,", "offense,").replace("outcome_drive", "fixed_drive_result");
        let text = format!(
            "{header}\n{}\n{}",
            row("A", 1, "Punt"),
            row("B", 1, "Interception returned for TD")
        );
        let cfg = IngestConfig::from_toml_str("[rename]\nposteam = \"offense\"").unwrap();
        let ds = read_play_csv(text.as_bytes(), &cfg).unwrap();
        assert_eq!(ds.plays()[0].outcome_drive, DriveOutcome::NoScore);
        assert_eq!(ds.plays()[1].outcome_drive, DriveOutcome::OppTouchdown);
        assert_eq!(ds.plays()[0].posteam_id, "KC");
    }

    #[test]
    fn exclusion_filter() {
        let text = format!(
            "{HEADER}\n{}\n{}\n{}",
            row("A", 1, "TD").replace("pass", "qb_kneel"),
            row("A", 2, "TD"),
            row("B", 1, "FG").replace("pass", "punt")
        );
        let cfg = IngestConfig::from_toml_str("exclude_play_types = [\"other\"]").unwrap();
        let ds = read_play_csv(text.as_bytes(), &cfg).unwrap();
        assert_eq!(ds.num_drives(), 1);
        assert_eq!(ds.num_plays(), 1);
        assert_eq!(ds.plays()[0].play_index_in_drive, 1);
    }

    #[test]
    fn write_then_read_round_trips() {
        let mut ds = dataset(&[3, 1, 4]);
        let mut plays = ds.plays().to_vec();
        plays[1].state.posteam_spread = -2.5;
        plays[2].state.half_seconds_remaining = 12.345678901234;
        plays[3].passer_or_rusher_id = None;
        ds = PlayDataset::from_plays(plays).unwrap();
        let mut buf = Vec::new();
        write_play_csv(&ds, &mut buf).unwrap();
        let back = read_play_csv(buf.as_slice(), &IngestConfig::default()).unwrap();
        assert_eq!(back, ds);
    }
}
