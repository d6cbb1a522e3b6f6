//! Readers and writers for species thermodynamic data.
//!
//! Two formats are understood:
//!
//! * CHEMKIN fixed-column `THERMO` sections with two-interval NASA-7 records.
//! * A small `key = value` format, one block per species:
//!
//! ```text
//! species = A
//! molar_mass = 1.0
//! interval = t_low t_high a0 a1 a2 a3 a4 b1 b2
//! ```
//!
//! `elements = C 12 H 26` may replace `molar_mass`; `interval` may repeat.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::Path;

use thiserror::Error;

use crate::thermo::{NasaInterval, SpeciesThermo, ThermoError};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ParseError {
    #[error("line {line}: malformed record{}: {reason}", species_suffix(.species))]
    MalformedRecord {
        line: usize,
        species: Option<String>,
        reason: String,
    },
    #[error("line {line}: cannot parse number {field:?}")]
    BadNumber { line: usize, field: String },
    #[error("duplicate species {0}")]
    DuplicateSpecies(String),
    #[error("species {name:?} not found; available: {}", available.join(", "))]
    SpeciesNotFound { name: String, available: Vec<String> },
    #[error("species {species}: unknown element {element:?}")]
    UnknownElement { species: String, element: String },
    #[error(transparent)]
    Thermo(#[from] ThermoError),
    #[error("cannot serialize: {0}")]
    Serialize(String),
    #[error("cannot read {path}: {message}")]
    Io { path: String, message: String },
}

fn species_suffix(s: &Option<String>) -> String {
    s.as_ref().map(|n| format!(" for species {n}")).unwrap_or_default()
}

pub type Result<T> = std::result::Result<T, ParseError>;

/// Standard atomic masses, g/mol.
const ATOMIC_MASSES: &[(&str, f64)] = &[
    ("H", 1.008),
    ("D", 2.014),
    ("HE", 4.002_602),
    ("C", 12.011),
    ("N", 14.007),
    ("O", 15.999),
    ("F", 18.998),
    ("NE", 20.1797),
    ("SI", 28.085),
    ("S", 32.06),
    ("CL", 35.45),
    ("AR", 39.948),
    ("KR", 83.798),
    ("XE", 131.293),
];

/// Atomic mass of an element symbol (case-insensitive) in kg/mol.
pub fn atomic_mass(symbol: &str) -> Option<f64> {
    let s = symbol.trim().to_ascii_uppercase();
    ATOMIC_MASSES.iter().find(|(e, _)| *e == s).map(|(_, m)| m * 1e-3)
}

/// Molar mass in kg/mol from an elemental composition.
pub fn molar_mass_from_elements(species: &str, elements: &[(String, f64)]) -> Result<f64> {
    let mut w = 0.0;
    for (sym, n) in elements {
        let m = atomic_mass(sym).ok_or_else(|| ParseError::UnknownElement {
            species: species.to_string(),
            element: sym.clone(),
        })?;
        w += m * n;
    }
    Ok(w)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ThermoRecord {
    pub thermo: SpeciesThermo,
    /// Elemental composition, empty when the molar mass was given directly.
    pub elements: Vec<(String, f64)>,
    pub comment: String,
    pub phase: char,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ThermoDatabase {
    records: Vec<ThermoRecord>,
    /// Default (T_low, T_mid, T_high) from the section header.
    pub defaults: (f64, f64, f64),
}

impl Default for ThermoDatabase {
    fn default() -> Self {
        Self {
            records: Vec::new(),
            defaults: (300.0, 1000.0, 5000.0),
        }
    }
}

impl ThermoDatabase {
    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn records(&self) -> &[ThermoRecord] {
        &self.records
    }

    pub fn names(&self) -> Vec<String> {
        self.records.iter().map(|r| r.thermo.name.clone()).collect()
    }

    pub fn insert(&mut self, record: ThermoRecord) -> Result<()> {
        if self.records.iter().any(|r| r.thermo.name == record.thermo.name) {
            return Err(ParseError::DuplicateSpecies(record.thermo.name));
        }
        self.records.push(record);
        Ok(())
    }

    /// Look up a species by name; surrounding whitespace is ignored.
    pub fn lookup(&self, name: &str) -> Result<&SpeciesThermo> {
        let key = name.trim();
        self.records
            .iter()
            .find(|r| r.thermo.name == key)
            .map(|r| &r.thermo)
            .ok_or_else(|| ParseError::SpeciesNotFound {
                name: key.to_string(),
                available: self.names(),
            })
    }

    /// Resolve a list of names into species records, in order.
    pub fn select(&self, names: &[impl AsRef<str>]) -> Result<Vec<SpeciesThermo>> {
        names.iter().map(|n| self.lookup(n.as_ref()).cloned()).collect()
    }

    /// Write the database as a CHEMKIN `THERMO` section.
    pub fn to_chemkin(&self) -> Result<String> {
        let mut out = String::new();
        let (lo, mid, hi) = self.defaults;
        out.push_str("THERMO\n");
        let _ = writeln!(
            out,
            "{}{}{}",
            fixed_field(lo, 10)?,
            fixed_field(mid, 10)?,
            fixed_field(hi, 10)?
        );
        for r in &self.records {
            write_chemkin_record(&mut out, r)?;
        }
        out.push_str("END\n");
        Ok(out)
    }

    /// Write the database in the key-value format.
    pub fn to_kv(&self) -> String {
        let mut out = String::new();
        for (k, r) in self.records.iter().enumerate() {
            if k > 0 {
                out.push('\n');
            }
            let _ = writeln!(out, "species = {}", r.thermo.name);
            if r.elements.is_empty() {
                let _ = writeln!(out, "molar_mass = {:e}", r.thermo.molar_mass);
            } else {
                let els: Vec<String> = r.elements.iter().map(|(s, n)| format!("{s} {n}")).collect();
                let _ = writeln!(out, "elements = {}", els.join(" "));
            }
            for iv in &r.thermo.intervals {
                let _ = write!(out, "interval = {:e} {:e}", iv.t_low, iv.t_high);
                for c in iv.coeffs {
                    let _ = write!(out, " {c:e}");
                }
                out.push('\n');
            }
        }
        out
    }
}

/// Parse thermo data, detecting the format. `overrides` maps species names to
/// molar masses (kg/mol) that replace the element-derived value.
pub fn parse_thermo_text(text: &str, overrides: &HashMap<String, f64>) -> Result<ThermoDatabase> {
    let is_kv = text
        .lines()
        .map(str::trim)
        .find(|l| !l.is_empty() && !l.starts_with('!') && !l.starts_with('#'))
        .map(|l| l.contains('='))
        .unwrap_or(false);
    if is_kv {
        parse_kv(text, overrides)
    } else {
        parse_chemkin(text, overrides)
    }
}

/// Arbitrary bytes; invalid UTF-8 is replaced rather than rejected.
pub fn parse_thermo_bytes(bytes: &[u8], overrides: &HashMap<String, f64>) -> Result<ThermoDatabase> {
    parse_thermo_text(&String::from_utf8_lossy(bytes), overrides)
}

pub fn parse_thermo_file(path: &Path, overrides: &HashMap<String, f64>) -> Result<ThermoDatabase> {
    let bytes = std::fs::read(path).map_err(|e| ParseError::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    })?;
    parse_thermo_bytes(&bytes, overrides)
}

fn parse_number(line: usize, field: &str) -> Result<f64> {
    let t = field.trim();
    let normalized = t.replace(['D', 'd'], "E");
    normalized.parse::<f64>().map_err(|_| ParseError::BadNumber {
        line,
        field: t.to_string(),
    })
}

fn column(line: &str, start: usize, end: usize) -> &str {
    let end = end.min(line.len());
    line.get(start..end).unwrap_or("")
}

fn strip_comment(line: &str) -> &str {
    match line.find('!') {
        Some(i) => &line[..i],
        None => line,
    }
}

/// Parse a CHEMKIN `THERMO` section.
pub fn parse_chemkin(text: &str, overrides: &HashMap<String, f64>) -> Result<ThermoDatabase> {
    let mut db = ThermoDatabase::default();
    let lines: Vec<(usize, &str)> = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, strip_comment(l).trim_end()))
        .filter(|(_, l)| !l.trim().is_empty())
        .collect();
    let mut i = 0;
    if let Some((_, first)) = lines.first() {
        if first.trim_start().to_ascii_uppercase().starts_with("THERMO") {
            i = 1;
            if let Some(&(ln, l)) = lines.get(1) {
                // optional defaults line: three numbers and no record marker
                let fields: Vec<&str> = l.split_whitespace().collect();
                if fields.len() == 3 && l.len() < 70 {
                    db.defaults = (
                        parse_number(ln, fields[0])?,
                        parse_number(ln, fields[1])?,
                        parse_number(ln, fields[2])?,
                    );
                    i = 2;
                }
            }
        }
    }
    while i < lines.len() {
        let (ln, l) = lines[i];
        if l.trim().to_ascii_uppercase().starts_with("END") {
            break;
        }
        let record = lines.get(i..i + 4).ok_or_else(|| ParseError::MalformedRecord {
            line: ln,
            species: name_of(l),
            reason: format!("expected 4 lines, found {}", lines.len() - i),
        })?;
        let rec = parse_chemkin_record(record, db.defaults, overrides)?;
        db.insert(rec)?;
        i += 4;
    }
    Ok(db)
}

fn name_of(line: &str) -> Option<String> {
    column(line, 0, 18).split_whitespace().next().map(str::to_string)
}

fn parse_chemkin_record(
    lines: &[(usize, &str)],
    defaults: (f64, f64, f64),
    overrides: &HashMap<String, f64>,
) -> Result<ThermoRecord> {
    let (ln1, l1) = lines[0];
    let malformed = |line: usize, reason: String| ParseError::MalformedRecord {
        line,
        species: name_of(l1),
        reason,
    };
    for (k, &(ln, l)) in lines.iter().enumerate() {
        let want = char::from(b'1' + k as u8);
        if !l.ends_with(want) {
            return Err(malformed(ln, format!("line {} of record lacks marker {want:?}", k + 1)));
        }
    }
    let name = name_of(l1).ok_or_else(|| malformed(ln1, "empty species name".into()))?;
    let comment = column(l1, 18, 24).trim().to_string();
    let mut elements = Vec::new();
    let mut push_element = |sym: &str, cnt: &str| -> Result<()> {
        let sym = sym.trim();
        let cnt = cnt.trim();
        if sym.is_empty() || cnt.is_empty() || sym == "0" {
            return Ok(());
        }
        let n = parse_number(ln1, cnt)?;
        if n != 0.0 {
            elements.push((sym.to_string(), n));
        }
        Ok(())
    };
    for k in 0..4 {
        let s = 24 + 5 * k;
        push_element(column(l1, s, s + 2), column(l1, s + 2, s + 5))?;
    }
    if l1.len() >= 78 {
        push_element(column(l1, 73, 75), column(l1, 75, 78))?;
    }
    let phase = column(l1, 44, 45).chars().next().unwrap_or(' ');
    let temp = |s: usize, e: usize, default: f64| -> Result<f64> {
        let f = column(l1, s, e);
        if f.trim().is_empty() {
            Ok(default)
        } else {
            parse_number(ln1, f)
        }
    };
    let t_low = temp(45, 55, defaults.0)?;
    let t_high = temp(55, 65, defaults.2)?;
    let t_mid = temp(65, 73, defaults.1)?;
    if !(t_low < t_mid && t_mid < t_high) {
        return Err(malformed(ln1, format!("temperatures not ordered: {t_low}, {t_mid}, {t_high}")));
    }

    let mut a = [0.0; 14];
    let mut n = 0;
    for &(ln, l) in &lines[1..] {
        let per_line = if n == 10 { 4 } else { 5 };
        for f in 0..per_line {
            let field = column(l, 15 * f, 15 * f + 15);
            if field.trim().is_empty() {
                return Err(malformed(ln, format!("coefficient {} missing", n + 1)));
            }
            a[n] = parse_number(ln, field)?;
            n += 1;
        }
    }
    let mut high = [0.0; 7];
    let mut low = [0.0; 7];
    high.copy_from_slice(&a[0..7]);
    low.copy_from_slice(&a[7..14]);

    let molar_mass = match overrides.get(&name) {
        Some(&w) => w,
        None => {
            if elements.is_empty() {
                return Err(malformed(ln1, "no elemental composition and no molar mass override".into()));
            }
            molar_mass_from_elements(&name, &elements)?
        }
    };
    let thermo = SpeciesThermo::new(
        name,
        molar_mass,
        vec![
            NasaInterval {
                t_low,
                t_high: t_mid,
                coeffs: low,
            },
            NasaInterval {
                t_low: t_mid,
                t_high,
                coeffs: high,
            },
        ],
    )?;
    Ok(ThermoRecord {
        thermo,
        elements,
        comment,
        phase,
    })
}

/// Fortran-style `E15.8` field, e.g. ` 2.92664000E+00`.
pub fn format_coefficient(x: f64) -> String {
    let mut prec = 8;
    loop {
        let s = format!("{x:.prec$e}");
        let (mant, exp) = s.split_once('e').unwrap_or((&s, "0"));
        let e: i32 = exp.parse().unwrap_or(0);
        let sign = if e < 0 { '-' } else { '+' };
        let body = format!("{mant}E{sign}{:02}", e.abs());
        if body.len() <= 15 || prec == 0 {
            return format!("{body:>15}");
        }
        prec -= 1;
    }
}

fn fixed_field(x: f64, width: usize) -> Result<String> {
    let candidates = [format!("{x:.3}"), format!("{x}"), format!("{x:e}")];
    for c in candidates {
        if c.len() <= width && c.parse::<f64>().ok() == Some(x) {
            return Ok(format!("{c:>width$}"));
        }
    }
    Err(ParseError::Serialize(format!("{x} does not fit a {width}-character field")))
}

fn write_chemkin_record(out: &mut String, r: &ThermoRecord) -> Result<()> {
    let t = &r.thermo;
    if t.name.len() > 18 || t.name.contains(char::is_whitespace) {
        return Err(ParseError::Serialize(format!("species name {:?} does not fit CHEMKIN", t.name)));
    }
    let [low, high] = t.intervals.as_slice() else {
        return Err(ParseError::Serialize(format!(
            "species {} has {} intervals, CHEMKIN needs 2",
            t.name,
            t.intervals.len()
        )));
    };
    if r.elements.len() > 4 {
        return Err(ParseError::Serialize(format!("species {} has more than 4 elements", t.name)));
    }
    let mut line = format!("{:<18}{:<6.6}", t.name, r.comment);
    for k in 0..4 {
        match r.elements.get(k) {
            Some((sym, n)) => {
                let cnt = if n.fract() == 0.0 && n.abs() < 1000.0 {
                    format!("{}", *n as i64)
                } else {
                    return Err(ParseError::Serialize(format!("non-integer element count {n}")));
                };
                let _ = write!(line, "{sym:<2.2}{cnt:>3}");
            }
            None => line.push_str("     "),
        }
    }
    line.push(r.phase);
    line.push_str(&fixed_field(low.t_low, 10)?);
    line.push_str(&fixed_field(high.t_high, 10)?);
    line.push_str(&fixed_field(low.t_high, 8)?);
    let _ = writeln!(out, "{line:<79}1");
    let coeffs: Vec<f64> = high.coeffs.iter().chain(low.coeffs.iter()).copied().collect();
    for (k, chunk) in coeffs.chunks(5).enumerate() {
        let body: String = chunk.iter().map(|c| format_coefficient(*c)).collect();
        let _ = writeln!(out, "{body:<79}{}", k + 2);
    }
    Ok(())
}

/// Parse the key-value format.
pub fn parse_kv(text: &str, overrides: &HashMap<String, f64>) -> Result<ThermoDatabase> {
    struct Pending {
        line: usize,
        name: String,
        molar_mass: Option<f64>,
        elements: Vec<(String, f64)>,
        intervals: Vec<NasaInterval>,
    }
    let mut db = ThermoDatabase::default();
    let mut cur: Option<Pending> = None;

    let finish = |p: Pending, db: &mut ThermoDatabase| -> Result<()> {
        let molar_mass = match (overrides.get(&p.name), p.molar_mass) {
            (Some(&w), _) => w,
            (None, Some(w)) => w,
            (None, None) if !p.elements.is_empty() => molar_mass_from_elements(&p.name, &p.elements)?,
            _ => {
                return Err(ParseError::MalformedRecord {
                    line: p.line,
                    species: Some(p.name),
                    reason: "needs molar_mass or elements".into(),
                })
            }
        };
        if p.intervals.is_empty() {
            return Err(ParseError::MalformedRecord {
                line: p.line,
                species: Some(p.name),
                reason: "no interval given".into(),
            });
        }
        let thermo = SpeciesThermo::new(p.name, molar_mass, p.intervals)?;
        db.insert(ThermoRecord {
            thermo,
            elements: p.elements,
            comment: String::new(),
            phase: 'G',
        })
    };

    for (i, raw) in text.lines().enumerate() {
        let ln = i + 1;
        let l = raw.split(['#', '!']).next().unwrap_or("").trim();
        if l.is_empty() {
            continue;
        }
        let (key, value) = l.split_once('=').ok_or_else(|| ParseError::MalformedRecord {
            line: ln,
            species: cur.as_ref().map(|p| p.name.clone()),
            reason: format!("expected key = value, got {l:?}"),
        })?;
        let key = key.trim().to_ascii_lowercase();
        let value = value.trim();
        if key == "species" {
            if let Some(p) = cur.take() {
                finish(p, &mut db)?;
            }
            if value.is_empty() || value.contains(char::is_whitespace) {
                return Err(ParseError::MalformedRecord {
                    line: ln,
                    species: None,
                    reason: format!("bad species name {value:?}"),
                });
            }
            cur = Some(Pending {
                line: ln,
                name: value.to_string(),
                molar_mass: None,
                elements: Vec::new(),
                intervals: Vec::new(),
            });
            continue;
        }
        let p = cur.as_mut().ok_or_else(|| ParseError::MalformedRecord {
            line: ln,
            species: None,
            reason: format!("{key} before any species line"),
        })?;
        match key.as_str() {
            "molar_mass" => p.molar_mass = Some(parse_number(ln, value)?),
            "elements" => {
                let toks: Vec<&str> = value.split_whitespace().collect();
                if toks.len() % 2 != 0 {
                    return Err(ParseError::MalformedRecord {
                        line: ln,
                        species: Some(p.name.clone()),
                        reason: "elements must be symbol/count pairs".into(),
                    });
                }
                for pair in toks.chunks(2) {
                    p.elements.push((pair[0].to_string(), parse_number(ln, pair[1])?));
                }
            }
            "interval" => {
                let nums = value
                    .split_whitespace()
                    .map(|t| parse_number(ln, t))
                    .collect::<Result<Vec<f64>>>()?;
                if nums.len() != 9 {
                    return Err(ParseError::MalformedRecord {
                        line: ln,
                        species: Some(p.name.clone()),
                        reason: format!("interval needs 9 numbers, got {}", nums.len()),
                    });
                }
                let mut coeffs = [0.0; 7];
                coeffs.copy_from_slice(&nums[2..9]);
                p.intervals.push(NasaInterval {
                    t_low: nums[0],
                    t_high: nums[1],
                    coeffs,
                });
            }
            other => {
                return Err(ParseError::MalformedRecord {
                    line: ln,
                    species: Some(p.name.clone()),
                    reason: format!("unknown key {other:?}"),
                })
            }
        }
    }
    if let Some(p) = cur.take() {
        finish(p, &mut db)?;
    }
    Ok(db)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const SHIPPED: &str = include_str!("../data/thermo.dat");
    const FICTITIOUS: &str = include_str!("../data/fictitious.kv");

    fn no_overrides() -> HashMap<String, f64> {
        HashMap::new()
    }

    #[test]
    fn shipped_file_parses() {
        let db = parse_thermo_text(SHIPPED, &no_overrides()).unwrap();
        assert_eq!(db.len(), 3);
        assert_eq!(db.defaults, (300.0, 1000.0, 5000.0));
        let n2 = db.lookup("N2").unwrap();
        assert!((n2.molar_mass - 0.028014).abs() < 1e-12);
        assert_eq!(n2.intervals[0].t_high, n2.intervals[1].t_low);
        let dod = db.lookup("NC12H26").unwrap();
        assert!((dod.molar_mass - 0.170_34).abs() < 1e-12);
        assert_eq!(dod.intervals[0].t_high, 1391.0);
        assert_eq!(dod.intervals[1].coeffs[0], 38.5095037);
        assert_eq!(dod.intervals[0].coeffs[6], 50.0994626);
    }

    #[test]
    fn lookup_trims_and_reports_available() {
        let db = parse_thermo_text(SHIPPED, &no_overrides()).unwrap();
        assert!(db.lookup("N2   ").is_ok());
        match db.lookup("XYZ") {
            Err(ParseError::SpeciesNotFound { available, .. }) => {
                assert_eq!(available, vec!["N2", "O2", "NC12H26"]);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn override_replaces_molar_mass() {
        let mut o = HashMap::new();
        o.insert("N2".to_string(), 0.028);
        let db = parse_thermo_text(SHIPPED, &o).unwrap();
        assert_eq!(db.lookup("N2").unwrap().molar_mass, 0.028);
    }

    #[test]
    fn missing_fourth_line_is_malformed() {
        let lines: Vec<&str> = SHIPPED.lines().collect();
        // drop the last line of the N2 record
        let text: String = lines
            .iter()
            .enumerate()
            .filter(|(i, _)| *i != 6)
            .map(|(_, l)| format!("{l}\n"))
            .collect();
        match parse_chemkin(&text, &no_overrides()) {
            Err(ParseError::MalformedRecord { species, .. }) => assert_eq!(species.as_deref(), Some("N2")),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn bad_number_reported() {
        let text = SHIPPED.replacen("1.48797680E-03", "1.4879768XE-03", 1);
        assert!(matches!(
            parse_chemkin(&text, &no_overrides()),
            Err(ParseError::BadNumber { .. })
        ));
    }

    #[test]
    fn duplicate_species_rejected() {
        let body: Vec<&str> = SHIPPED.lines().collect();
        let n2 = body[3..7].join("\n");
        let text = format!("{}\n{n2}\n{n2}\nEND\n", body[..3].join("\n"));
        assert_eq!(
            parse_chemkin(&text, &no_overrides()),
            Err(ParseError::DuplicateSpecies("N2".into()))
        );
    }

    #[test]
    fn round_trip_is_exact_for_shipped_data() {
        let db1 = parse_thermo_text(SHIPPED, &no_overrides()).unwrap();
        let s1 = db1.to_chemkin().unwrap();
        let db2 = parse_chemkin(&s1, &no_overrides()).unwrap();
        assert_eq!(db1.records().len(), db2.records().len());
        for (a, b) in db1.records().iter().zip(db2.records()) {
            assert_eq!(a.thermo, b.thermo);
            assert_eq!(a.elements, b.elements);
        }
        assert_eq!(db2.to_chemkin().unwrap(), s1);
    }

    #[test]
    fn coefficient_format() {
        assert_eq!(format_coefficient(2.92664), " 2.92664000E+00");
        assert_eq!(format_coefficient(-5.68476e-7), "-5.68476000E-07");
        assert_eq!(format_coefficient(0.0), " 0.00000000E+00");
        assert_eq!(format_coefficient(1.5e-300).len(), 15);
    }

    #[test]
    fn fictitious_kv_parses() {
        let db = parse_thermo_text(FICTITIOUS, &no_overrides()).unwrap();
        assert_eq!(db.names(), vec!["SPEC1", "SPEC2"]);
        let s2 = db.lookup("SPEC2").unwrap();
        assert_eq!(s2.intervals[0].coeffs[0], 2.491);
        let db2 = parse_kv(&db.to_kv(), &no_overrides()).unwrap();
        assert_eq!(db.records(), db2.records());
    }

    #[test]
    fn kv_errors() {
        assert!(parse_kv("molar_mass = 1\n", &no_overrides()).is_err());
        assert!(parse_kv("species = A\ninterval = 1 2 3\n", &no_overrides()).is_err());
        assert!(parse_kv("species = A\nmolar_mass = 1\n", &no_overrides()).is_err());
        assert!(matches!(
            parse_kv("species = A\nelements = Q 1\ninterval = 1 2 3.5 0 0 0 0 0 0\n", &no_overrides()),
            Err(ParseError::UnknownElement { .. })
        ));
    }

    fn chemkin_fragment() -> impl Strategy<Value = String> {
        let lines: Vec<String> = SHIPPED.lines().map(str::to_string).collect();
        (
            proptest::collection::vec(0..lines.len(), 0..20),
            proptest::collection::vec((0usize..80, any::<char>()), 0..6),
        )
            .prop_map(move |(picks, edits)| {
                let mut text: Vec<char> = picks
                    .iter()
                    .flat_map(|&i| lines[i].chars().chain(std::iter::once('\n')))
                    .collect();
                for (pos, ch) in edits {
                    if !text.is_empty() {
                        let p = pos % text.len();
                        text[p] = ch;
                    }
                }
                text.into_iter().collect()
            })
    }

    proptest! {
        #[test]
        fn arbitrary_bytes_never_panic(bytes in proptest::collection::vec(any::<u8>(), 0..600)) {
            let _ = parse_thermo_bytes(&bytes, &no_overrides());
        }

        #[test]
        fn mutated_records_never_panic(text in chemkin_fragment()) {
            let _ = parse_chemkin(&text, &no_overrides());
            let _ = parse_kv(&text, &no_overrides());
        }

        #[test]
        fn serialize_parse_is_a_fixed_point(
            c in proptest::collection::vec(-1e3f64..1e3, 14),
            t_mid in 500.0f64..2000.0,
        ) {
            let t_mid = (t_mid * 1e3).round() / 1e3;
            let mut db = parse_thermo_text(SHIPPED, &no_overrides()).unwrap();
            // perturb N2 while keeping cp/R comfortably above 1
            let mut rec = db.records[0].clone();
            let mut high = [0.0; 7];
            let mut low = [0.0; 7];
            high[..5].copy_from_slice(&[3.5 + c[0].abs(), 0.0, 0.0, 0.0, 0.0]);
            high[5] = c[1];
            high[6] = c[2];
            low[..5].copy_from_slice(&[3.5 + c[3].abs(), 0.0, 0.0, 0.0, 0.0]);
            low[5] = c[4] * 1e-9;
            low[6] = c[5] * 1e7;
            rec.thermo.intervals[0].coeffs = low;
            rec.thermo.intervals[1].coeffs = high;
            rec.thermo.intervals[0].t_high = t_mid;
            rec.thermo.intervals[1].t_low = t_mid;
            db.records[0] = rec;
            if let Ok(s1) = db.to_chemkin() {
                let db2 = parse_chemkin(&s1, &no_overrides()).unwrap();
                let s2 = db2.to_chemkin().unwrap();
                let db3 = parse_chemkin(&s2, &no_overrides()).unwrap();
                prop_assert_eq!(db2, db3);
                prop_assert_eq!(s1, s2);
            }
        }
    }
}
