use cnlc::compile::compile_source;
use cnlc::error::CnlError;
use proptest::prelude::*;

/// Clock text in 12-hour form, as written in documents.
fn clock_12h(minutes: u32) -> String {
    let (h, m) = (minutes / 60, minutes % 60);
    let suffix = if h < 12 { "AM" } else { "PM" };
    let h12 = match h % 12 {
        0 => 12,
        x => x,
    };
    format!("{h12:02}:{m:02} {suffix}")
}

/// Days since 1970-01-01 of a proleptic Gregorian date.
fn days_from_civil(y: i64, m: i64, d: i64) -> i64 {
    let y = if m <= 2 { y - 1 } else { y };
    let era = y.div_euclid(400);
    let yoe = y - era * 400;
    let mp = (m + 9) % 12;
    let doy = (153 * mp + 2) / 5 + d - 1;
    let doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
    era * 146097 + doe - 719468
}

fn civil_from_days(z: i64) -> (i64, i64, i64) {
    let z = z + 719468;
    let era = z.div_euclid(146097);
    let doe = z - era * 146097;
    let yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
    let doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
    let mp = (5 * doy + 2) / 153;
    let d = doy - (153 * mp + 2) / 5 + 1;
    let m = if mp < 10 { mp + 3 } else { mp - 9 };
    (if m <= 2 { yoe + era * 400 + 1 } else { yoe + era * 400 }, m, d)
}

fn date_text(z: i64) -> String {
    let (y, m, d) = civil_from_days(z);
    format!("{d:02}/{m:02}/{y}")
}

/// `(index, label)` pairs of the facts of `predicate`.
fn facts(output: &str, predicate: &str) -> Vec<(i64, String)> {
    let prefix = format!("{predicate}(");
    output
        .split_whitespace()
        .filter_map(|s| s.strip_prefix(&prefix))
        .map(|s| {
            let s = s.trim_end_matches(").");
            let (i, label) = s.split_once(',').unwrap();
            (i.parse().unwrap(), label.trim_matches('"').to_string())
        })
        .collect()
}

fn errors(source: &str) -> Vec<CnlError> {
    compile_source(source).unwrap_err().into_iter().map(|d| d.error).collect()
}

#[test]
fn oracles_agree_with_known_dates() {
    assert_eq!(days_from_civil(1970, 1, 1), 0);
    assert_eq!(days_from_civil(2000, 3, 1) - days_from_civil(2000, 2, 28), 2);
    assert_eq!(days_from_civil(1900, 3, 1) - days_from_civil(1900, 2, 28), 1);
    assert_eq!(date_text(days_from_civil(2024, 2, 29)), "29/02/2024");
    assert_eq!(clock_12h(0), "12:00 AM");
    assert_eq!(clock_12h(12 * 60 + 5), "12:05 PM");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn minute_ranges_enumerate_every_step(start in 0u32..1380, step in 1u32..90, count in 1u32..40) {
        let end = start + step * count;
        prop_assume!(end < 24 * 60);
        let source = format!(
            "A slot is a temporal concept expressed in minutes ranging from {} to {} with a length of {step} minutes.",
            clock_12h(start),
            clock_12h(end)
        );
        let out = compile_source(&source).unwrap();
        let got = facts(&out, "slot");
        let oracle: Vec<(i64, String)> = (0..count)
            .map(|i| {
                let m = start + i * step;
                (i as i64 + 1, format!("{:02}:{:02}", m / 60, m % 60))
            })
            .collect();
        prop_assert_eq!(got.len() as u32, (end - start) / step);
        prop_assert_eq!(got, oracle);
    }

    #[test]
    fn misaligned_minute_ranges_are_rejected(start in 0u32..1300, step in 2u32..90, count in 1u32..10, extra in 1u32..90) {
        let extra = extra % step;
        prop_assume!(extra != 0);
        let end = start + step * count + extra;
        prop_assume!(end < 24 * 60);
        let source = format!(
            "A slot is a temporal concept expressed in minutes ranging from {} to {} with a length of {step} minutes.",
            clock_12h(start),
            clock_12h(end)
        );
        prop_assert_eq!(errors(&source), vec![CnlError::MisalignedStep("slot".into())]);
    }

    #[test]
    fn day_ranges_are_inclusive(start in days_from_civil(1990, 1, 1)..days_from_civil(2040, 1, 1), span in 0i64..(3 * 365)) {
        let end = start + span;
        let source = format!(
            "A day is a temporal concept expressed in days ranging from {} to {}.",
            date_text(start),
            date_text(end)
        );
        let out = compile_source(&source).unwrap();
        let got = facts(&out, "day");
        prop_assert_eq!(got.len() as i64, end - start + 1);
        let oracle: Vec<(i64, String)> = (start..=end).enumerate().map(|(i, z)| (i as i64 + 1, date_text(z))).collect();
        prop_assert_eq!(got, oracle);
    }
}

#[test]
fn empty_ranges_are_rejected() {
    assert_eq!(
        errors("A slot is a temporal concept expressed in minutes ranging from 09:00 AM to 09:00 AM with a length of 30 minutes."),
        vec![CnlError::EmptyRange("slot".into())]
    );
    assert_eq!(
        errors("A day is a temporal concept expressed in days ranging from 02/01/2024 to 01/01/2024."),
        vec![CnlError::EmptyRange("day".into())]
    );
}

#[test]
fn hour_steps_and_24h_clock() {
    let out = compile_source(
        "A shift is a temporal concept expressed in minutes ranging from 13:00 to 19:00 with a length of 2 hours.",
    )
    .unwrap();
    assert_eq!(facts(&out, "shift"), vec![(1, "13:00".into()), (2, "15:00".into()), (3, "17:00".into())]);
}
