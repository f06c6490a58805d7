use crate::domain::DriveOutcome;
use crate::error::{Error, Result};

const NO_SCORE_TOKENS: &[&str] = &[
    "punt",
    "turnover",
    "turnover on downs",
    "downs",
    "interception",
    "fumble",
    "fumble lost",
    "missed field goal",
    "blocked field goal",
    "blocked punt",
    "end of half",
    "end of game",
    "no score",
];

const OPP_TD_TOKENS: &[&str] = &[
    "opp touchdown",
    "opp td",
    "interception returned for td",
    "interception returned for touchdown",
    "fumble returned for td",
    "fumble returned for touchdown",
    "turnover returned for td",
    "turnover returned for touchdown",
    "blocked punt returned for td",
    "blocked field goal returned for td",
];

/// Map a source drive-result token (nflFastR `fixed_drive_result` style) to
/// a drive outcome.
///
/// Matching is case-insensitive. `raw_points` disambiguates a bare
/// "Touchdown" (negative points means the defense scored); for every other
/// token a nonzero `raw_points` must agree with the mapped outcome.
pub fn map_drive_result(raw_result: &str, raw_points: i32) -> Result<DriveOutcome> {
    let token = raw_result.trim().to_ascii_lowercase();
    let outcome = if token == "touchdown" || token == "td" {
        if raw_points < 0 {
            DriveOutcome::OppTouchdown
        } else {
            DriveOutcome::Touchdown
        }
    } else if token == "field goal" || token == "fg" {
        DriveOutcome::FieldGoal
    } else if token == "safety" || token == "opp safety" {
        DriveOutcome::OppSafety
    } else if OPP_TD_TOKENS.contains(&token.as_str()) {
        DriveOutcome::OppTouchdown
    } else if NO_SCORE_TOKENS.contains(&token.as_str()) {
        DriveOutcome::NoScore
    } else {
        return Err(Error::UnknownDriveResult(raw_result.to_string()));
    };
    if raw_points != 0 && raw_points != outcome.points() {
        return Err(Error::Data(format!(
            "drive result `{raw_result}` maps to {outcome} ({} points) but the row says {raw_points}",
            outcome.points()
        )));
    }
    Ok(outcome)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn examples() {
        assert_eq!(map_drive_result("Punt", 0).unwrap(), DriveOutcome::NoScore);
        assert_eq!(map_drive_result("Touchdown", 7).unwrap(), DriveOutcome::Touchdown);
        assert_eq!(
            map_drive_result("Interception returned for TD", -7).unwrap(),
            DriveOutcome::OppTouchdown
        );
        assert_eq!(map_drive_result("Touchdown", -7).unwrap(), DriveOutcome::OppTouchdown);
        assert_eq!(map_drive_result("Field goal", 3).unwrap(), DriveOutcome::FieldGoal);
        assert_eq!(map_drive_result("Safety", -2).unwrap(), DriveOutcome::OppSafety);
        assert_eq!(map_drive_result("Missed field goal", 0).unwrap(), DriveOutcome::NoScore);
        assert_eq!(map_drive_result("Turnover on downs", 0).unwrap(), DriveOutcome::NoScore);
        assert_eq!(map_drive_result("End of half", 0).unwrap(), DriveOutcome::NoScore);
        assert_eq!(map_drive_result("Opp touchdown", -7).unwrap(), DriveOutcome::OppTouchdown);
    }

    #[test]
    fn unknown_token_is_named() {
        let err = map_drive_result("Alien abduction", 0).unwrap_err();
        assert!(err.to_string().contains("Alien abduction"));
    }

    #[test]
    fn inconsistent_points_rejected() {
        assert!(map_drive_result("Punt", 7).is_err());
        assert!(map_drive_result("Field goal", 7).is_err());
    }
}
