//! Dataset ingestion, bundled benchmark sets and synthetic generators.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::constraints::Dataset;
use crate::error::{Error, Result};

/// How to read a delimiter-separated feature file.
#[derive(Debug, Clone, PartialEq)]
pub struct ParseOptions {
    pub delimiter: char,
    /// Column holding the label; negative values count from the end (`-1` is last).
    pub label_column: i64,
    pub has_header: bool,
}

impl Default for ParseOptions {
    fn default() -> Self {
        ParseOptions {
            delimiter: ',',
            label_column: -1,
            has_header: false,
        }
    }
}

/// Parses delimited text into a dataset.
///
/// Integer labels are kept as-is. If any label is not an integer, all
/// distinct label strings are numbered `0..` in sorted order. Blank lines and
/// lines starting with `#` are skipped.
pub fn parse_delimited(text: &str, opts: &ParseOptions, source: &str) -> Result<Dataset> {
    let parse_err = |line: usize, message: String| Error::Parse {
        path: source.to_string(),
        line,
        message,
    };
    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut raw_labels: Vec<(usize, String)> = Vec::new();
    let mut width = None;
    let mut skipped_header = !opts.has_header;
    for (idx, line) in text.lines().enumerate() {
        let lineno = idx + 1;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        if !skipped_header {
            skipped_header = true;
            continue;
        }
        let fields: Vec<&str> = trimmed.split(opts.delimiter).map(str::trim).collect();
        if fields.len() < 2 {
            return Err(parse_err(
                lineno,
                "need at least one feature and a label".into(),
            ));
        }
        match width {
            None => width = Some(fields.len()),
            Some(w) if w != fields.len() => {
                return Err(parse_err(
                    lineno,
                    format!("expected {w} fields, found {}", fields.len()),
                ));
            }
            _ => {}
        }
        let n = fields.len() as i64;
        let col = if opts.label_column < 0 {
            n + opts.label_column
        } else {
            opts.label_column
        };
        if col < 0 || col >= n {
            return Err(parse_err(
                lineno,
                format!("label column {} out of range", opts.label_column),
            ));
        }
        let col = col as usize;
        let mut row = Vec::with_capacity(fields.len() - 1);
        for (c, f) in fields.iter().enumerate() {
            if c == col {
                continue;
            }
            let v: f64 = f.parse().map_err(|_| {
                parse_err(lineno, format!("column {} is not a number: {f:?}", c + 1))
            })?;
            if !v.is_finite() {
                return Err(parse_err(lineno, format!("column {} is not finite", c + 1)));
            }
            row.push(v);
        }
        rows.push(row);
        raw_labels.push((lineno, fields[col].to_string()));
    }
    if rows.len() < 2 {
        return Err(parse_err(
            0,
            format!("found {} data rows; need at least 2", rows.len()),
        ));
    }
    let labels = if raw_labels.iter().all(|(_, s)| s.parse::<i64>().is_ok()) {
        raw_labels.iter().map(|(_, s)| s.parse().unwrap()).collect()
    } else {
        let ids: BTreeMap<&str, i64> = raw_labels
            .iter()
            .map(|(_, s)| s.as_str())
            .collect::<std::collections::BTreeSet<_>>()
            .into_iter()
            .enumerate()
            .map(|(i, s)| (s, i as i64))
            .collect();
        raw_labels.iter().map(|(_, s)| ids[s.as_str()]).collect()
    };
    Dataset::new(rows, labels)
}

pub fn load_delimited(path: impl AsRef<Path>, opts: &ParseOptions) -> Result<Dataset> {
    let path = path.as_ref();
    let text = fs::read_to_string(path)?;
    parse_delimited(&text, opts, &path.display().to_string())
}

/// Comma-separated rows with the label last. Values use the shortest
/// representation that parses back to the same `f64`.
pub fn to_delimited(data: &Dataset) -> String {
    let mut out = String::new();
    for (i, row) in data.rows().enumerate() {
        for v in row {
            let _ = write!(out, "{v},");
        }
        let _ = writeln!(out, "{}", data.label(i));
    }
    out
}

fn bundled(text: &str, name: &str) -> Dataset {
    parse_delimited(text, &ParseOptions::default(), name).expect("bundled dataset parses")
}

/// UCI Iris: 150 points, 4 features, 3 classes.
pub fn iris() -> Dataset {
    bundled(include_str!("../data/iris.csv"), "iris.csv")
}

/// UCI Wine: 178 points, 13 features, 3 classes.
pub fn wine() -> Dataset {
    bundled(include_str!("../data/wine.csv"), "wine.csv")
}

/// UCI Wisconsin diagnostic breast cancer: 569 points, 30 features, 2 classes.
pub fn breast_cancer() -> Dataset {
    bundled(
        include_str!("../data/breast_cancer.csv"),
        "breast_cancer.csv",
    )
}

pub fn bundled_by_name(name: &str) -> Option<Dataset> {
    match name {
        "iris" => Some(iris()),
        "wine" => Some(wine()),
        "breast-cancer" | "breast_cancer" => Some(breast_cancer()),
        _ => None,
    }
}

/// Concentric-circles toy problem: class `c` lies on the circle of radius
/// `c + 1` in the first two coordinates; the remaining coordinates are
/// isotropic Gaussian noise.
#[derive(Debug, Clone, PartialEq)]
pub struct CirclesConfig {
    pub n_per_class: usize,
    pub classes: usize,
    pub noise_dims: usize,
    pub noise_std: f64,
    /// Standard deviation of the radial jitter around each circle.
    pub radial_std: f64,
    pub seed: u64,
}

impl Default for CirclesConfig {
    fn default() -> Self {
        CirclesConfig {
            n_per_class: 250,
            classes: 4,
            noise_dims: 8,
            noise_std: 2.0,
            radial_std: 0.05,
            seed: 0,
        }
    }
}

pub fn concentric_circles(cfg: &CirclesConfig) -> Result<Dataset> {
    if cfg.classes < 2 || cfg.n_per_class < 2 {
        return Err(Error::input(
            "circles need at least two classes of two points",
        ));
    }
    if !(cfg.noise_std >= 0.0) || !(cfg.radial_std >= 0.0) {
        return Err(Error::input("noise levels must be nonnegative"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let noise = Normal::new(0.0, cfg.noise_std).map_err(|e| Error::input(e.to_string()))?;
    let jitter = Normal::new(0.0, cfg.radial_std).map_err(|e| Error::input(e.to_string()))?;
    let dim = 2 + cfg.noise_dims;
    let mut features = Vec::with_capacity(cfg.classes * cfg.n_per_class * dim);
    let mut labels = Vec::with_capacity(cfg.classes * cfg.n_per_class);
    for _ in 0..cfg.n_per_class {
        for c in 0..cfg.classes {
            let theta = rng.gen_range(0.0..2.0 * PI);
            let r = (c + 1) as f64 + jitter.sample(&mut rng);
            features.push(r * theta.cos());
            features.push(r * theta.sin());
            for _ in 0..cfg.noise_dims {
                features.push(noise.sample(&mut rng));
            }
            labels.push(c as i64);
        }
    }
    Dataset::from_flat(dim, features, labels)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bundled_shapes() {
        let d = iris();
        assert_eq!((d.len(), d.dim(), d.class_counts().len()), (150, 4, 3));
        let d = wine();
        assert_eq!((d.len(), d.dim(), d.class_counts().len()), (178, 13, 3));
        let d = breast_cancer();
        assert_eq!((d.len(), d.dim(), d.class_counts().len()), (569, 30, 2));
    }

    #[test]
    fn parse_header_label_column_and_strings() {
        let text = "a;b;class\nsetosa;1.0;2.0\nvirginica;3;4\n";
        let opts = ParseOptions {
            delimiter: ';',
            label_column: 0,
            has_header: true,
        };
        let d = parse_delimited(text, &opts, "x").unwrap();
        assert_eq!(d.row(1), &[3.0, 4.0]);
        assert_eq!(d.labels(), &[0, 1]);
    }

    #[test]
    fn parse_errors_carry_line_numbers() {
        let err =
            parse_delimited("1,2,0\n1,oops,1\n", &ParseOptions::default(), "f.csv").unwrap_err();
        match err {
            Error::Parse { line, .. } => assert_eq!(line, 2),
            other => panic!("{other:?}"),
        }
        let err = parse_delimited("1,2,0\n\n1,1\n", &ParseOptions::default(), "f.csv").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 3, .. }));
    }

    #[test]
    fn delimited_round_trip() {
        let d = wine();
        let back = parse_delimited(&to_delimited(&d), &ParseOptions::default(), "w").unwrap();
        assert_eq!(back, d);
    }

    #[test]
    fn circles_geometry() {
        let d = concentric_circles(&CirclesConfig {
            radial_std: 0.0,
            ..Default::default()
        })
        .unwrap();
        assert_eq!((d.len(), d.dim()), (1000, 10));
        for (i, row) in d.rows().enumerate() {
            let r = (row[0] * row[0] + row[1] * row[1]).sqrt();
            assert!((r - (d.label(i) + 1) as f64).abs() < 1e-12);
        }
    }
}
