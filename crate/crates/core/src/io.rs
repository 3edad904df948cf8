//! Plain-text event, corner and track files.
//!
//! Event and corner lines are `ts u v pol` with `pol` 0 (negative) or 1
//! (positive). Files written here carry a `# ts_unit=us` header and integer
//! microsecond timestamps; without that header timestamps are read as
//! decimal seconds, the layout of common public event datasets. Track lines
//! are `id ts u v` with sub-pixel positions. Blank lines and lines starting
//! with `#` are ignored.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{self, BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use thiserror::Error;

use crate::event::{Event, Micros, Polarity, SensorGeometry, MICROS_PER_SEC};
use crate::synth::{GroundTruthTrack, TrackSample};

pub const MICROS_HEADER: &str = "# ts_unit=us";

#[derive(Debug, Error)]
pub enum IoError {
    #[error("{0}")]
    Io(#[from] io::Error),
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("line {line}: timestamp {ts} is earlier than the previous line")]
    Unsorted { line: usize, ts: Micros },
    #[error("line {line}: pixel ({u}, {v}) outside a {width}x{height} sensor")]
    OutOfBounds {
        line: usize,
        u: i64,
        v: i64,
        width: u32,
        height: u32,
    },
}

fn parse_err(line: usize, msg: impl Into<String>) -> IoError {
    IoError::Parse {
        line,
        msg: msg.into(),
    }
}

#[derive(Copy, Clone, Debug, PartialEq, Eq)]
enum Unit {
    Seconds,
    Micros,
}

fn parse_ts(tok: &str, unit: Unit, line: usize) -> Result<Micros, IoError> {
    match unit {
        Unit::Micros => tok
            .parse::<Micros>()
            .map_err(|_| parse_err(line, format!("bad timestamp '{tok}'"))),
        Unit::Seconds => {
            let s: f64 = tok
                .parse()
                .map_err(|_| parse_err(line, format!("bad timestamp '{tok}'")))?;
            if !s.is_finite() {
                return Err(parse_err(line, format!("bad timestamp '{tok}'")));
            }
            Ok((s * MICROS_PER_SEC).round() as Micros)
        }
    }
}

/// Iterates `(line_number, trimmed_content)` over data lines, tracking the
/// timestamp unit declared by header comments.
fn data_lines<R: BufRead>(
    reader: R,
    mut visit: impl FnMut(usize, &str, Unit) -> Result<(), IoError>,
) -> Result<(), IoError> {
    let mut unit = Unit::Seconds;
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        let t = line.trim();
        if t.is_empty() {
            continue;
        }
        if let Some(comment) = t.strip_prefix('#') {
            if comment.split_whitespace().any(|w| w == "ts_unit=us") {
                unit = Unit::Micros;
            }
            continue;
        }
        visit(i + 1, t, unit)?;
    }
    Ok(())
}

/// Reads an event (or corner) file, checking bounds and timestamp order.
pub fn read_events<R: BufRead>(reader: R, g: SensorGeometry) -> Result<Vec<Event>, IoError> {
    let mut out = Vec::new();
    let mut last = Micros::MIN;
    data_lines(reader, |line, text, unit| {
        let f: Vec<&str> = text.split_whitespace().collect();
        if f.len() != 4 {
            return Err(parse_err(
                line,
                format!("expected 4 fields, found {}", f.len()),
            ));
        }
        let ts = parse_ts(f[0], unit, line)?;
        let coord = |tok: &str| {
            tok.parse::<i64>()
                .map_err(|_| parse_err(line, format!("bad coordinate '{tok}'")))
        };
        let (u, v) = (coord(f[1])?, coord(f[2])?);
        let pol = f[3]
            .parse::<u8>()
            .ok()
            .and_then(Polarity::from_bit)
            .ok_or_else(|| parse_err(line, format!("bad polarity '{}'", f[3])))?;
        if !g.contains(u, v) {
            return Err(IoError::OutOfBounds {
                line,
                u,
                v,
                width: g.width,
                height: g.height,
            });
        }
        if ts < last {
            return Err(IoError::Unsorted { line, ts });
        }
        last = ts;
        out.push(Event::new(u as u16, v as u16, pol, ts));
        Ok(())
    })?;
    Ok(out)
}

pub fn write_events<W: Write>(mut w: W, events: &[Event]) -> io::Result<()> {
    writeln!(w, "{MICROS_HEADER}")?;
    writeln!(w, "# ts u v pol")?;
    for e in events {
        writeln!(w, "{} {} {} {}", e.ts, e.u, e.v, e.pol.bit())?;
    }
    w.flush()
}

/// Reads a track file. Samples of one id may be interleaved with other ids
/// but must be in ascending time; tracks come back ordered by id.
pub fn read_tracks<R: BufRead>(reader: R) -> Result<Vec<GroundTruthTrack>, IoError> {
    let mut tracks: BTreeMap<u32, Vec<TrackSample>> = BTreeMap::new();
    data_lines(reader, |line, text, unit| {
        let f: Vec<&str> = text.split_whitespace().collect();
        if f.len() != 4 {
            return Err(parse_err(
                line,
                format!("expected 4 fields, found {}", f.len()),
            ));
        }
        let id: u32 = f[0]
            .parse()
            .map_err(|_| parse_err(line, format!("bad track id '{}'", f[0])))?;
        let ts = parse_ts(f[1], unit, line)?;
        let pos = |tok: &str| match tok.parse::<f64>() {
            Ok(x) if x.is_finite() => Ok(x),
            _ => Err(parse_err(line, format!("bad position '{tok}'"))),
        };
        let (u, v) = (pos(f[2])?, pos(f[3])?);
        let samples = tracks.entry(id).or_default();
        if samples.last().is_some_and(|s| ts <= s.ts) {
            return Err(parse_err(
                line,
                format!("track {id}: timestamps must increase"),
            ));
        }
        samples.push(TrackSample { ts, u, v });
        Ok(())
    })?;
    Ok(tracks
        .into_iter()
        .map(|(id, samples)| GroundTruthTrack { id, samples })
        .collect())
}

/// Positions use Rust's shortest round-trip formatting, so reading the file
/// back reproduces them exactly.
pub fn write_tracks<W: Write>(mut w: W, tracks: &[GroundTruthTrack]) -> io::Result<()> {
    writeln!(w, "{MICROS_HEADER}")?;
    writeln!(w, "# id ts u v")?;
    for t in tracks {
        for s in &t.samples {
            writeln!(w, "{} {} {:?} {:?}", t.id, s.ts, s.u, s.v)?;
        }
    }
    w.flush()
}

pub fn load_events(path: &Path, g: SensorGeometry) -> Result<Vec<Event>, IoError> {
    read_events(BufReader::new(File::open(path)?), g)
}

pub fn save_events(path: &Path, events: &[Event]) -> io::Result<()> {
    write_events(BufWriter::new(File::create(path)?), events)
}

pub fn load_tracks(path: &Path) -> Result<Vec<GroundTruthTrack>, IoError> {
    read_tracks(BufReader::new(File::open(path)?))
}

pub fn save_tracks(path: &Path, tracks: &[GroundTruthTrack]) -> io::Result<()> {
    write_tracks(BufWriter::new(File::create(path)?), tracks)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn g() -> SensorGeometry {
        SensorGeometry::default()
    }

    #[test]
    fn reads_dataset_seconds() {
        let text = "0.000100 12 7 1\n0.0002506 3 4 0\n\n1.5 0 0 1\n";
        let ev = read_events(text.as_bytes(), g()).unwrap();
        assert_eq!(
            ev,
            vec![
                Event::new(12, 7, Polarity::Pos, 100),
                Event::new(3, 4, Polarity::Neg, 251),
                Event::new(0, 0, Polarity::Pos, 1_500_000),
            ]
        );
    }

    #[test]
    fn micros_header_switches_unit() {
        let text = "# ts_unit=us\n# ts u v pol\n17 1 2 0\n";
        let ev = read_events(text.as_bytes(), g()).unwrap();
        assert_eq!(ev, vec![Event::new(1, 2, Polarity::Neg, 17)]);
    }

    #[test]
    fn errors_carry_line_numbers() {
        let unsorted = "# ts_unit=us\n10 1 1 1\n5 1 1 1\n";
        match read_events(unsorted.as_bytes(), g()) {
            Err(IoError::Unsorted { line: 3, ts: 5 }) => {}
            other => panic!("{other:?}"),
        }
        let bounds = "0.1 240 0 1\n";
        assert!(matches!(
            read_events(bounds.as_bytes(), g()),
            Err(IoError::OutOfBounds {
                line: 1,
                u: 240,
                ..
            })
        ));
        for bad in [
            "0.1 1 1 2\n",
            "0.1 1 1\n",
            "x 1 1 1\n",
            "0.1 -1 1 1\n",
            "nan 1 1 1\n",
        ] {
            let err = read_events(bad.as_bytes(), g()).unwrap_err();
            assert!(err.to_string().starts_with("line 1:"), "{bad:?}: {err}");
        }
    }

    #[test]
    fn empty_file_is_empty_stream() {
        assert!(read_events("".as_bytes(), g()).unwrap().is_empty());
        let mut buf = Vec::new();
        write_events(&mut buf, &[]).unwrap();
        assert!(read_events(buf.as_slice(), g()).unwrap().is_empty());
    }

    #[test]
    fn tracks_group_by_id() {
        let text = "# ts_unit=us\n2 0 1.5 2.5\n1 0 0.25 0\n2 10 1.75 2.5\n";
        let t = read_tracks(text.as_bytes()).unwrap();
        assert_eq!(t.len(), 2);
        assert_eq!((t[0].id, t[0].samples.len()), (1, 1));
        assert_eq!((t[1].id, t[1].samples.len()), (2, 2));
        assert_eq!(t[1].samples[1].u, 1.75);
        let backwards = "# ts_unit=us\n2 10 0 0\n2 10 1 1\n";
        assert!(matches!(
            read_tracks(backwards.as_bytes()),
            Err(IoError::Parse { line: 3, .. })
        ));
    }
}
