//! Dataset plumbing: CSV files, synthetic generators, splitting, sharding,
//! angle scaling, and WAV feature extraction.

use log::warn;
use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::{Distribution, Gamma, StandardNormal};
use serde::{Deserialize, Serialize};
use std::f64::consts::{FRAC_PI_2, PI};
use std::path::{Path, PathBuf};

use crate::audio::{feature_vector, parse_wav, trim, Augmentation, DEFAULT_DURATION_S, DEFAULT_OFFSET_S};
use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::qkernel::LabeledDataset;
use crate::rng::{self, Stream};

/// Accepts `-1`/`+1`/`1` (any numeric spelling) and the emotion names
/// `Sad` (−1) and `Surprise` (+1), case-insensitively.
pub fn parse_label(raw: &str) -> Option<i8> {
    let t = raw.trim();
    match t.to_ascii_lowercase().as_str() {
        "sad" => return Some(-1),
        "surprise" => return Some(1),
        _ => {}
    }
    match t.parse::<f64>() {
        Ok(v) if v == 1.0 => Some(1),
        Ok(v) if v == -1.0 => Some(-1),
        _ => None,
    }
}

pub fn read_csv<R: std::io::Read>(reader: R) -> Result<LabeledDataset> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .from_reader(reader);
    let csv_err = |line: usize, e: csv::Error| Error::Csv {
        line,
        message: e.to_string(),
    };
    let header = rdr.headers().map_err(|e| csv_err(1, e))?.clone();
    if header.is_empty() {
        return Err(Error::Csv {
            line: 1,
            message: "missing header".into(),
        });
    }
    let width = header.len();
    if width < 2 || !header[width - 1].trim().eq_ignore_ascii_case("label") {
        return Err(Error::Csv {
            line: 1,
            message: "header must be f1,...,fd,label".into(),
        });
    }

    let mut rows = Vec::new();
    let mut labels = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line() as usize);
            csv_err(line, e)
        })?;
        let line = rec.position().map_or(0, |p| p.line() as usize);
        if rec.len() != width {
            return Err(Error::Csv {
                line,
                message: format!("expected {width} fields, found {}", rec.len()),
            });
        }
        let feats = rec
            .iter()
            .take(width - 1)
            .map(|f| {
                f.trim().parse::<f64>().map_err(|_| Error::Csv {
                    line,
                    message: format!("`{f}` is not a number"),
                })
            })
            .collect::<Result<Vec<f64>>>()?;
        let label = parse_label(&rec[width - 1]).ok_or_else(|| Error::Csv {
            line,
            message: format!("label `{}` is not -1/+1/Sad/Surprise", &rec[width - 1]),
        })?;
        rows.push(feats);
        labels.push(label);
    }
    if rows.is_empty() {
        return Err(Error::EmptyInput("CSV file has no data rows"));
    }
    let features = Matrix::from_rows(&rows).expect("row widths checked");
    LabeledDataset::new(features, labels)
}

pub fn load_csv(path: &Path) -> Result<LabeledDataset> {
    read_csv(std::fs::File::open(path)?)
}

/// Values use the shortest decimal that parses back to the same `f64`.
pub fn write_csv<W: std::io::Write>(ds: &LabeledDataset, writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    let io = |e: csv::Error| Error::Io(std::io::Error::other(e));
    let mut header: Vec<String> = (1..=ds.dim()).map(|j| format!("f{j}")).collect();
    header.push("label".into());
    w.write_record(&header).map_err(io)?;
    for (row, &label) in ds.features().iter_rows().zip(ds.labels()) {
        let mut rec: Vec<String> = row.iter().map(|v| format!("{v:?}")).collect();
        rec.push(label.to_string());
        w.write_record(&rec).map_err(io)?;
    }
    w.flush()?;
    Ok(())
}

pub fn save_csv(ds: &LabeledDataset, path: &Path) -> Result<()> {
    write_csv(ds, std::fs::File::create(path)?)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SynthKind {
    /// Four equally populated blobs at (±1, ±1); label is the sign of the
    /// coordinate product.
    XorBlobs,
    /// One blob per class at ±(1, 1).
    TwoGaussians,
    /// A unit ring around a compact core.
    RingVsCore,
}

/// Two-dimensional synthetic problem; labels alternate so classes are
/// balanced within one.
pub fn synth_dataset(kind: SynthKind, m: usize, noise: f64, seed: u64) -> Result<LabeledDataset> {
    if m == 0 {
        return Err(Error::EmptyInput("synthetic dataset size"));
    }
    if !(noise >= 0.0) {
        return Err(Error::InvalidParameter(format!(
            "noise must be non-negative, got {noise}"
        )));
    }
    let mut r = rng::seeded(seed);
    let gauss = |r: &mut rng::Rng| -> f64 { noise * r.sample::<f64, _>(StandardNormal) };
    let mut rows = Vec::with_capacity(m);
    let mut labels = Vec::with_capacity(m);
    for i in 0..m {
        let y: i8 = if i % 2 == 0 { 1 } else { -1 };
        let (cx, cy) = match kind {
            SynthKind::XorBlobs => {
                // Rows cycle through the four corners so the blobs stay
                // balanced; uneven blobs let a linear cut isolate a corner.
                let sx = if i % 4 < 2 { 1.0 } else { -1.0 };
                (sx, sx * f64::from(y))
            }
            SynthKind::TwoGaussians => (f64::from(y), f64::from(y)),
            SynthKind::RingVsCore => {
                let phi = r.random_range(0.0..2.0 * PI);
                let radius = if y > 0 { 1.0 } else { r.random_range(0.0..0.4) };
                (radius * phi.cos(), radius * phi.sin())
            }
        };
        rows.push(vec![cx + gauss(&mut r), cy + gauss(&mut r)]);
        labels.push(y);
    }
    LabeledDataset::new(Matrix::from_rows(&rows).expect("fixed width"), labels)
}

/// Seeded shuffle, then the first `round(test_fraction · M)` rows become the
/// test split.
pub fn split_dataset(ds: &LabeledDataset, test_fraction: f64, seed: u64) -> Result<(LabeledDataset, LabeledDataset)> {
    let idx = split_indices(ds.len(), test_fraction, seed)?;
    Ok((ds.subset(&idx.0), ds.subset(&idx.1)))
}

pub(crate) fn split_indices(m: usize, test_fraction: f64, seed: u64) -> Result<(Vec<usize>, Vec<usize>)> {
    if !(0.0..1.0).contains(&test_fraction) {
        return Err(Error::InvalidParameter(format!(
            "test fraction must be in [0, 1), got {test_fraction}"
        )));
    }
    let n_test = (test_fraction * m as f64).round() as usize;
    if n_test == 0 || n_test >= m {
        return Err(Error::InvalidParameter(format!(
            "test fraction {test_fraction} of {m} rows leaves an empty split"
        )));
    }
    let mut perm: Vec<usize> = (0..m).collect();
    perm.shuffle(&mut rng::seeded(seed));
    let (test, train) = perm.split_at(n_test);
    Ok((train.to_vec(), test.to_vec()))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "mode")]
pub enum ShardMode {
    Iid,
    /// Per-class node proportions drawn from a symmetric Dirichlet(α).
    LabelSkew {
        alpha: f64,
    },
}

/// Disjoint index sets covering `0..ds.len()`, one per node, each nonempty.
pub fn shard_indices(ds: &LabeledDataset, n: usize, mode: ShardMode, seed: u64) -> Result<Vec<Vec<usize>>> {
    let m = ds.len();
    if n == 0 || n > m {
        return Err(Error::InvalidParameter(format!(
            "cannot split {m} rows across {n} nodes"
        )));
    }
    let mut r = rng::seeded(seed);
    let mut shards: Vec<Vec<usize>> = vec![Vec::new(); n];
    match mode {
        ShardMode::Iid => {
            let mut perm: Vec<usize> = (0..m).collect();
            perm.shuffle(&mut r);
            let (base, extra) = (m / n, m % n);
            let mut start = 0;
            for (i, shard) in shards.iter_mut().enumerate() {
                let len = base + usize::from(i < extra);
                shard.extend_from_slice(&perm[start..start + len]);
                start += len;
            }
        }
        ShardMode::LabelSkew { alpha } => {
            if !(alpha > 0.0) {
                return Err(Error::InvalidParameter(format!(
                    "Dirichlet alpha must be positive, got {alpha}"
                )));
            }
            let gamma = Gamma::new(alpha, 1.0).map_err(|e| Error::InvalidParameter(e.to_string()))?;
            for class in [1i8, -1] {
                let mut members: Vec<usize> = (0..m).filter(|&i| ds.labels()[i] == class).collect();
                if members.is_empty() {
                    continue;
                }
                members.shuffle(&mut r);
                let draws: Vec<f64> = (0..n).map(|_| gamma.sample(&mut r).max(f64::MIN_POSITIVE)).collect();
                let total: f64 = draws.iter().sum();
                let mut cum = 0.0;
                let mut start = 0;
                for (i, d) in draws.iter().enumerate() {
                    cum += d / total;
                    let end = if i + 1 == n {
                        members.len()
                    } else {
                        (cum * members.len() as f64).round() as usize
                    };
                    let end = end.clamp(start, members.len());
                    shards[i].extend_from_slice(&members[start..end]);
                    start = end;
                }
            }
            // Every node needs data; move single rows from the largest shard.
            while let Some(empty) = shards.iter().position(Vec::is_empty) {
                let donor = (0..n).max_by_key(|&i| shards[i].len()).expect("n > 0");
                let moved = shards[donor].pop().expect("donor has rows since n <= m");
                shards[empty].push(moved);
            }
        }
    }
    for s in &mut shards {
        s.sort_unstable();
    }
    Ok(shards)
}

pub fn shard(ds: &LabeledDataset, n: usize, mode: ShardMode, seed: u64) -> Result<Vec<LabeledDataset>> {
    Ok(shard_indices(ds, n, mode, seed)?
        .iter()
        .map(|idx| ds.subset(idx))
        .collect())
}

/// Per-column min/max map onto `[0, π]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureScaler {
    pub min: Vec<f64>,
    pub max: Vec<f64>,
}

pub fn fit_scaler(train: &LabeledDataset) -> Result<FeatureScaler> {
    if train.is_empty() {
        return Err(Error::EmptyInput("scaler needs training rows"));
    }
    let d = train.dim();
    let mut min = vec![f64::INFINITY; d];
    let mut max = vec![f64::NEG_INFINITY; d];
    for row in train.features().iter_rows() {
        for j in 0..d {
            min[j] = min[j].min(row[j]);
            max[j] = max[j].max(row[j]);
        }
    }
    Ok(FeatureScaler { min, max })
}

impl FeatureScaler {
    pub fn transform_value(&self, j: usize, v: f64) -> f64 {
        let span = self.max[j] - self.min[j];
        if span > 0.0 {
            ((v - self.min[j]) / span * PI).clamp(0.0, PI)
        } else {
            FRAC_PI_2
        }
    }
}

pub fn apply_scaler(scaler: &FeatureScaler, ds: &LabeledDataset) -> Result<LabeledDataset> {
    crate::error::check_dim("scaler width", scaler.min.len(), ds.dim())?;
    let f = ds.features();
    let scaled = Matrix::from_fn(f.rows(), f.cols(), |i, j| scaler.transform_value(j, f[(i, j)]));
    LabeledDataset::new(scaled, ds.labels().to_vec())
}

/// Filename substring (case-insensitive) to label.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabelRule {
    pub pattern: String,
    pub label: i8,
}

pub fn label_for(name: &str, rules: &[LabelRule]) -> Option<i8> {
    let lower = name.to_lowercase();
    rules
        .iter()
        .find(|r| lower.contains(&r.pattern.to_lowercase()))
        .map(|r| r.label)
}

/// `*.wav` files in `dir`, sorted by name.
pub fn list_wavs(dir: &Path) -> Result<Vec<PathBuf>> {
    let mut out: Vec<PathBuf> = std::fs::read_dir(dir)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.is_file() && p.extension().is_some_and(|x| x.eq_ignore_ascii_case("wav")))
        .collect();
    out.sort();
    Ok(out)
}

/// Parses, trims and featurizes each labelled file. Each augmentation adds
/// one extra row per file, drawn from a per-file, per-technique substream.
pub fn extract_files(
    paths: &[PathBuf],
    rules: &[LabelRule],
    augment: &[Augmentation],
    seed: u64,
) -> Result<LabeledDataset> {
    let mut rows = Vec::new();
    let mut labels = Vec::new();
    for (fi, path) in paths.iter().enumerate() {
        let name = path
            .file_name()
            .map(|n| n.to_string_lossy().into_owned())
            .unwrap_or_default();
        let Some(label) = label_for(&name, rules) else {
            warn!("no label rule matches {name}; skipping");
            continue;
        };
        if label != 1 && label != -1 {
            return Err(Error::InvalidLabel(label.to_string()));
        }
        let audio = parse_wav(&std::fs::read(path)?)?;
        let base = trim(&audio, DEFAULT_OFFSET_S, DEFAULT_DURATION_S)?;
        rows.push(feature_vector(&base)?.0);
        labels.push(label);
        for (ai, aug) in augment.iter().enumerate() {
            let mut r = rng::substream(seed, Stream::Augment, &[fi as u64, ai as u64]);
            let augmented = aug.apply(&audio, &mut r)?;
            let trimmed = trim(&augmented, DEFAULT_OFFSET_S, DEFAULT_DURATION_S)?;
            rows.push(feature_vector(&trimmed)?.0);
            labels.push(label);
        }
    }
    if rows.is_empty() {
        return Err(Error::EmptyInput("no labelled WAV files"));
    }
    LabeledDataset::new(Matrix::from_rows(&rows).expect("fixed feature width"), labels)
}

pub fn extract_features(
    dir: &Path,
    rules: &[LabelRule],
    augment: &[Augmentation],
    seed: u64,
) -> Result<LabeledDataset> {
    let files = list_wavs(dir)?;
    if files.is_empty() {
        return Err(Error::EmptyInput("directory contains no WAV files"));
    }
    extract_files(&files, rules, augment, seed)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn labels() {
        assert_eq!(parse_label("Sad"), Some(-1));
        assert_eq!(parse_label("surprise"), Some(1));
        assert_eq!(parse_label("+1"), Some(1));
        assert_eq!(parse_label("-1.0"), Some(-1));
        assert_eq!(parse_label("0"), None);
        assert_eq!(parse_label("happy"), None);
    }

    #[test]
    fn csv_hand_file() {
        let ds = read_csv("f1,f2,label\n0.5,-1.25,1\n3,4e-3,Sad\n".as_bytes()).unwrap();
        assert_eq!(ds.features().to_rows(), vec![vec![0.5, -1.25], vec![3.0, 0.004]]);
        assert_eq!(ds.labels(), &[1, -1]);
    }

    #[test]
    fn csv_errors_carry_line_numbers() {
        match read_csv("f1,f2,label\n1,2,1\n1,1\n".as_bytes()) {
            Err(Error::Csv { line, .. }) => assert_eq!(line, 3),
            other => panic!("{other:?}"),
        }
        match read_csv("f1,label\n1,1\n2,7\n".as_bytes()) {
            Err(Error::Csv { line, message }) => {
                assert_eq!(line, 3);
                assert!(message.contains('7'));
            }
            other => panic!("{other:?}"),
        }
        assert!(matches!(read_csv("f1,label\n".as_bytes()), Err(Error::EmptyInput(_))));
        assert!(read_csv("".as_bytes()).is_err());
    }

    #[test]
    fn synth_is_deterministic_and_balanced() {
        for kind in [SynthKind::XorBlobs, SynthKind::TwoGaussians, SynthKind::RingVsCore] {
            let a = synth_dataset(kind, 41, 0.1, 7).unwrap();
            assert_eq!(a, synth_dataset(kind, 41, 0.1, 7).unwrap());
            let pos = a.labels().iter().filter(|&&l| l == 1).count();
            assert_eq!(pos, 21);
            let mut x = Vec::new();
            let mut y = Vec::new();
            write_csv(&a, &mut x).unwrap();
            write_csv(&synth_dataset(kind, 41, 0.1, 7).unwrap(), &mut y).unwrap();
            assert_eq!(x, y);
        }
    }

    #[test]
    fn scaler_maps_and_clamps() {
        let train = LabeledDataset::new(
            Matrix::from_rows(&[vec![1.0, 5.0], vec![3.0, 5.0], vec![2.0, 5.0]]).unwrap(),
            vec![1, -1, 1],
        )
        .unwrap();
        let s = fit_scaler(&train).unwrap();
        let t = apply_scaler(&s, &train).unwrap();
        assert_eq!(t.features()[(0, 0)], 0.0);
        assert_eq!(t.features()[(1, 0)], PI);
        assert_eq!(t.features()[(2, 0)], FRAC_PI_2);
        assert_eq!(t.features()[(0, 1)], FRAC_PI_2);
        let test = LabeledDataset::new(
            Matrix::from_rows(&[vec![9.0, 1.0], vec![-4.0, 1.0]]).unwrap(),
            vec![1, 1],
        )
        .unwrap();
        let tt = apply_scaler(&s, &test).unwrap();
        assert_eq!(tt.features()[(0, 0)], PI);
        assert_eq!(tt.features()[(1, 0)], 0.0);
    }

    #[test]
    fn split_sizes() {
        let ds = synth_dataset(SynthKind::TwoGaussians, 200, 0.1, 1).unwrap();
        let (train, test) = split_dataset(&ds, 0.2, 3).unwrap();
        assert_eq!((train.len(), test.len()), (160, 40));
        assert!(split_dataset(&ds, 1.0, 3).is_err());
        assert!(split_dataset(&ds, 0.0, 3).is_err());
    }

    #[test]
    fn iid_shards_cover_disjointly() {
        let ds = synth_dataset(SynthKind::XorBlobs, 160, 0.1, 1).unwrap();
        let idx = shard_indices(&ds, 4, ShardMode::Iid, 5).unwrap();
        assert!(idx.iter().all(|s| s.len() == 40));
        let mut all: Vec<usize> = idx.concat();
        all.sort_unstable();
        assert_eq!(all, (0..160).collect::<Vec<_>>());
        assert!(shard_indices(&ds, 161, ShardMode::Iid, 5).is_err());
    }

    #[test]
    fn label_skew_is_skewed_and_covering() {
        let ds = synth_dataset(SynthKind::XorBlobs, 160, 0.1, 1).unwrap();
        let idx = shard_indices(&ds, 4, ShardMode::LabelSkew { alpha: 0.3 }, 11).unwrap();
        let mut all: Vec<usize> = idx.concat();
        all.sort_unstable();
        assert_eq!(all, (0..160).collect::<Vec<_>>());
        assert!(idx.iter().all(|s| !s.is_empty()));
        let skewed = idx.iter().any(|s| {
            let pos = s.iter().filter(|&&i| ds.labels()[i] == 1).count() as f64;
            let frac = pos / s.len() as f64;
            frac >= 0.7 || frac <= 0.3
        });
        assert!(skewed);
    }

    #[test]
    fn label_rules() {
        let rules = vec![
            LabelRule {
                pattern: "_sad".into(),
                label: -1,
            },
            LabelRule {
                pattern: "_ps".into(),
                label: 1,
            },
        ];
        assert_eq!(label_for("OAF_back_sad.wav", &rules), Some(-1));
        assert_eq!(label_for("YAF_dog_PS.WAV", &rules), Some(1));
        assert_eq!(label_for("OAF_back_happy.wav", &rules), None);
    }
}
