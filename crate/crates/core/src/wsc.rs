//! The bundled word sense change testset.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::evaluate::WordClass;
use crate::io::{read_lines, write_atomic};

/// Raw text of the bundled testset file.
pub const BUNDLED: &str = include_str!("../data/wsc_testset.tsv");

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Changed,
    Stable,
}

impl Status {
    pub fn class(self) -> WordClass {
        match self {
            Status::Changed => WordClass::Changed,
            Status::Stable => WordClass::Stable,
        }
    }
}

/// A change event: a single year, an approximate year or a span.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct YearRange {
    pub start: u32,
    pub end: u32,
    pub approximate: bool,
}

impl YearRange {
    pub fn overlaps(&self, lo: u32, hi: u32) -> bool {
        self.start <= hi && self.end >= lo
    }
}

impl fmt::Display for YearRange {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.approximate {
            f.write_str("~")?;
        }
        if self.start == self.end {
            write!(f, "{}", self.start)
        } else {
            write!(f, "{}-{}", self.start, self.end)
        }
    }
}

impl FromStr for YearRange {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        let (approximate, body) = match s.strip_prefix('~') {
            Some(b) => (true, b),
            None => (false, s),
        };
        let year = |y: &str| y.parse::<u32>().map_err(|_| format!("bad year `{y}`"));
        let (start, end) = match body.split_once('-') {
            Some((a, b)) => (year(a)?, year(b)?),
            None => (year(body)?, year(body)?),
        };
        if end < start {
            return Err(format!("year range `{s}` runs backwards"));
        }
        Ok(YearRange { start, end, approximate })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WscEntry {
    pub word: String,
    pub status: Status,
    pub change_years: Vec<YearRange>,
    pub description: String,
}

fn parse_line(line: &str) -> Result<Option<WscEntry>, String> {
    if line.trim().is_empty() || line.starts_with('#') {
        return Ok(None);
    }
    let f: Vec<&str> = line.split('\t').collect();
    if !(2..=4).contains(&f.len()) {
        return Err("expected word, status, years, description".into());
    }
    let word = f[0].trim();
    if word.is_empty() {
        return Err("empty word".into());
    }
    let status = match f[1] {
        "changed" => Status::Changed,
        "stable" => Status::Stable,
        s => return Err(format!("unknown status `{s}`")),
    };
    let years = f.get(2).copied().unwrap_or("");
    let change_years = if years.is_empty() {
        Vec::new()
    } else {
        years.split(';').map(str::parse).collect::<Result<_, _>>()?
    };
    match (status, change_years.is_empty()) {
        (Status::Changed, true) => return Err("changed word without a change year".into()),
        (Status::Stable, false) => return Err("stable word with a change year".into()),
        _ => {}
    }
    Ok(Some(WscEntry {
        word: word.to_string(),
        status,
        change_years,
        description: f.get(3).copied().unwrap_or("").to_string(),
    }))
}

/// Parses testset text; `source` names it in error messages.
pub fn parse_wsc(text: &str, source: &Path) -> Result<Vec<WscEntry>> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if let Some(e) = parse_line(line).map_err(|m| Error::parse(source, i + 1, m))? {
            out.push(e);
        }
    }
    Ok(out)
}

pub fn load_wsc(path: &Path) -> Result<Vec<WscEntry>> {
    let mut out = Vec::new();
    for (n, line) in read_lines(path)? {
        if let Some(e) = parse_line(&line).map_err(|m| Error::parse(path, n, m))? {
            out.push(e);
        }
    }
    Ok(out)
}

pub fn bundled() -> Vec<WscEntry> {
    parse_wsc(BUNDLED, Path::new("wsc_testset.tsv")).expect("bundled testset parses")
}

pub fn write_wsc(path: &Path, entries: &[WscEntry]) -> Result<()> {
    write_atomic(path, |w| {
        for e in entries {
            let years: Vec<String> = e.change_years.iter().map(ToString::to_string).collect();
            let status = match e.status {
                Status::Changed => "changed",
                Status::Stable => "stable",
            };
            writeln!(w, "{}\t{status}\t{}\t{}", e.word, years.join(";"), e.description)?;
        }
        Ok(())
    })
}

/// Treats changed words with no event inside `[lo, hi]` as stable.
pub fn filter_window(entries: &[WscEntry], lo: u32, hi: u32) -> Vec<WscEntry> {
    entries
        .iter()
        .map(|e| {
            let mut e = e.clone();
            if e.status == Status::Changed && !e.change_years.iter().any(|y| y.overlaps(lo, hi)) {
                e.status = Status::Stable;
            }
            e
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bundled_matches_tables() {
        let e = bundled();
        assert_eq!(e.iter().filter(|x| x.status == Status::Changed).count(), 12);
        assert_eq!(e.iter().filter(|x| x.status == Status::Stable).count(), 19);
        let c = e.iter().find(|x| x.word == "computer").unwrap();
        assert_eq!(c.change_years, vec![YearRange { start: 1940, end: 1940, approximate: true }]);
        assert_eq!(c.description, "digital computer");
        assert!(e.iter().any(|x| x.word == "ship" && x.status == Status::Stable));
    }

    #[test]
    fn example_rows() {
        let p = Path::new("t");
        let e = parse_wsc("computer\tchanged\t1940\tdigital computer\nship\tstable\t\t\n", p).unwrap();
        assert_eq!(e[0].change_years[0].start, 1940);
        assert_eq!(e[1].status, Status::Stable);
        assert!(parse_wsc("x\tchanged\t\t\n", p).is_err());
        assert!(parse_wsc("x\tstable\t1900\t\n", p).is_err());
        assert!(parse_wsc("x\tmaybe\t\t\n", p).is_err());
    }

    #[test]
    fn window_filter() {
        let p = Path::new("t");
        let e = parse_wsc("car\tchanged\t1905\tx\nrock\tchanged\t1950-1960\ty\naeroplane\tchanged\t1919-1920\tz\n", p).unwrap();
        let f = filter_window(&e, 1920, 1970);
        assert_eq!(f[0].status, Status::Stable);
        assert_eq!(f[1].status, Status::Changed);
        assert_eq!(f[2].status, Status::Changed);
        let in_window = filter_window(&bundled(), 1920, 1970)
            .iter()
            .filter(|x| x.status == Status::Changed)
            .count();
        assert_eq!(in_window, 8);
    }

    #[test]
    fn round_trip() {
        let e = bundled();
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("w.tsv");
        write_wsc(&p, &e).unwrap();
        assert_eq!(load_wsc(&p).unwrap(), e);
    }
}
