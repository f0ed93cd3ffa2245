//! Slot trace files.
//!
//! One row per slot: `round,sensor,gen_time_ms,dec_ap1,...,dec_apK,joint_m1,...,joint_m8`.
//! Booleans are `0`/`1`; a blank joint column means no joint decode was attempted
//! or recorded for that m. Lines starting with `#` are comments.

use std::fmt::Write as _;
use std::io::Write;
use std::path::Path;

use super::outcome::SlotOutcome;
use crate::error::{Error, Result};

pub fn emit_trace(outcomes: &[SlotOutcome]) -> Result<String> {
    let n_aps = outcomes.first().map_or(0, |o| o.decoded.len());
    let mut out = String::new();
    out.push_str("# round,sensor,gen_time_ms");
    for r in 1..=n_aps {
        let _ = write!(out, ",dec_ap{r}");
    }
    for m in 1..=8 {
        let _ = write!(out, ",joint_m{m}");
    }
    out.push('\n');
    for o in outcomes {
        if o.decoded.len() != n_aps {
            return Err(Error::Trace(format!(
                "round {} sensor {}: {} AP columns, expected {n_aps}",
                o.round,
                o.sensor,
                o.decoded.len()
            )));
        }
        let _ = write!(out, "{},{},{}", o.round, o.sensor, o.generation_time_ms);
        for d in &o.decoded {
            out.push_str(if *d { ",1" } else { ",0" });
        }
        for j in &o.joint {
            out.push_str(match j {
                Some(true) => ",1",
                Some(false) => ",0",
                None => ",",
            });
        }
        out.push('\n');
    }
    Ok(out)
}

pub fn write_trace(outcomes: &[SlotOutcome], path: &Path) -> Result<()> {
    let text = emit_trace(outcomes)?;
    let mut f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    f.write_all(text.as_bytes()).map_err(|e| Error::io(path, e))
}

pub fn parse_trace(text: &str, source: &Path) -> Result<Vec<SlotOutcome>> {
    let err = |line: usize, msg: String| Error::Parse {
        path: source.to_path_buf(),
        line,
        msg,
    };
    let mut rows = Vec::new();
    let mut n_aps = None;
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let cols: Vec<&str> = line.split(',').map(str::trim).collect();
        if cols.len() < 3 + 1 + 8 {
            return Err(err(line_no, format!("expected at least 12 columns, found {}", cols.len())));
        }
        let aps = cols.len() - 3 - 8;
        if *n_aps.get_or_insert(aps) != aps {
            return Err(err(line_no, "column count differs from earlier rows".into()));
        }
        let round = cols[0]
            .parse()
            .map_err(|_| err(line_no, format!("bad round `{}`", cols[0])))?;
        let sensor = cols[1]
            .parse()
            .map_err(|_| err(line_no, format!("bad sensor `{}`", cols[1])))?;
        let generation_time_ms: f64 = cols[2]
            .parse()
            .map_err(|_| err(line_no, format!("bad gen_time_ms `{}`", cols[2])))?;
        if !generation_time_ms.is_finite() {
            return Err(err(line_no, "gen_time_ms must be finite".into()));
        }
        let flag = |s: &str| -> Result<bool> {
            match s {
                "0" => Ok(false),
                "1" => Ok(true),
                other => Err(err(line_no, format!("expected 0 or 1, found `{other}`"))),
            }
        };
        let decoded = cols[3..3 + aps].iter().map(|s| flag(s)).collect::<Result<Vec<_>>>()?;
        let mut joint = [None; 8];
        for (slot, s) in joint.iter_mut().zip(&cols[3 + aps..]) {
            *slot = if s.is_empty() { None } else { Some(flag(s)?) };
        }
        let row = SlotOutcome {
            round,
            sensor,
            generation_time_ms,
            decoded,
            joint,
        };
        row.check().map_err(|e| err(line_no, e.to_string()))?;
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(err(1, "trace contains no rows".into()));
    }
    Ok(rows)
}

pub fn ingest_trace(path: &Path) -> Result<Vec<SlotOutcome>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_trace(&text, path)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn arb_row(n_aps: usize) -> impl Strategy<Value = SlotOutcome> {
        (
            any::<u32>(),
            0usize..64,
            0.0f64..1e7,
            proptest::collection::vec(any::<bool>(), n_aps),
            proptest::array::uniform8(proptest::option::of(any::<bool>())),
        )
            .prop_map(|(round, sensor, t, decoded, joint)| {
                let mut row = SlotOutcome {
                    round: round as u64,
                    sensor,
                    generation_time_ms: t,
                    decoded,
                    joint,
                };
                if row.check().is_err() {
                    row.joint = [None; 8];
                }
                row
            })
    }

    proptest! {
        #[test]
        fn emit_then_parse_is_lossless(rows in (1usize..4).prop_flat_map(|k| proptest::collection::vec(arb_row(k), 1..20))) {
            let text = emit_trace(&rows).unwrap();
            let back = parse_trace(&text, Path::new("t.csv")).unwrap();
            prop_assert_eq!(back, rows);
        }
    }

    #[test]
    fn empty_and_malformed_traces() {
        let p = Path::new("t.csv");
        assert!(parse_trace("", p).is_err());
        assert!(parse_trace("# header only\n", p).is_err());
        let good = "0,0,0,1,0,,,,,,,,\n";
        assert_eq!(parse_trace(good, p).unwrap().len(), 1);
        match parse_trace(&format!("{good}1,0,1.2,1,x,,,,,,,,\n"), p) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("{other:?}"),
        }
        match parse_trace("0,0,0,0,1,1,1,1,1,1,1,1,1\n", p) {
            Err(Error::Parse { line, msg, .. }) => {
                assert_eq!(line, 1);
                assert!(msg.contains("joint success"));
            }
            other => panic!("{other:?}"),
        }
        assert!(parse_trace("0,0,0,1\n", p).is_err());
    }
}
