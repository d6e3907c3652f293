//! Feature extraction, windowing and normalization.

use std::fmt;
use std::io::{Read, Write};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::waveforms::Waveform;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Feature {
    Mean,
    /// Population variance.
    Variance,
    /// Least-squares slope against sample index (value per sample).
    Slope,
}

impl Feature {
    pub const ALL: [Feature; 3] = [Feature::Mean, Feature::Variance, Feature::Slope];

    pub fn as_str(self) -> &'static str {
        match self {
            Feature::Mean => "mean",
            Feature::Variance => "variance",
            Feature::Slope => "slope",
        }
    }
}

impl FromStr for Feature {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Feature::ALL
            .into_iter()
            .find(|f| f.as_str() == s.trim())
            .ok_or_else(|| Error::config("features", format!("unknown feature `{s}`")))
    }
}

/// Non-empty set of features, kept in canonical order (mean, variance, slope).
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "Vec<Feature>", into = "Vec<Feature>")]
pub struct FeatureSelection(Vec<Feature>);

impl FeatureSelection {
    pub fn new(features: impl IntoIterator<Item = Feature>) -> Result<Self> {
        let mut v: Vec<Feature> = features.into_iter().collect();
        v.sort();
        v.dedup();
        if v.is_empty() {
            return Err(Error::config("features", "selection is empty"));
        }
        Ok(FeatureSelection(v))
    }

    pub fn all() -> Self {
        FeatureSelection(Feature::ALL.to_vec())
    }

    pub fn single(f: Feature) -> Self {
        FeatureSelection(vec![f])
    }

    pub fn features(&self) -> &[Feature] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn contains(&self, f: Feature) -> bool {
        self.0.contains(&f)
    }

    /// Short label: the feature name, or `agg` for more than one feature.
    pub fn label(&self) -> String {
        if self.0.len() == 1 {
            self.0[0].as_str().to_string()
        } else {
            "agg".to_string()
        }
    }
}

impl TryFrom<Vec<Feature>> for FeatureSelection {
    type Error = Error;

    fn try_from(v: Vec<Feature>) -> Result<Self> {
        FeatureSelection::new(v)
    }
}

impl From<FeatureSelection> for Vec<Feature> {
    fn from(s: FeatureSelection) -> Self {
        s.0
    }
}

impl FromStr for FeatureSelection {
    type Err = Error;

    /// Comma-separated names; `agg` or `all` selects every feature.
    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "agg" | "all" => Ok(FeatureSelection::all()),
            list => FeatureSelection::new(
                list.split(',')
                    .map(str::parse)
                    .collect::<Result<Vec<Feature>>>()?,
            ),
        }
    }
}

impl fmt::Display for FeatureSelection {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let names: Vec<_> = self.0.iter().map(|x| x.as_str()).collect();
        f.write_str(&names.join("+"))
    }
}

fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

fn variance(xs: &[f64], mean: f64) -> f64 {
    xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / xs.len() as f64
}

fn slope(xs: &[f64], mean: f64) -> f64 {
    let n = xs.len() as f64;
    let centre = (n - 1.0) / 2.0;
    let (num, den) = xs
        .iter()
        .enumerate()
        .fold((0.0, 0.0), |(num, den), (i, &x)| {
            let di = i as f64 - centre;
            (num + di * (x - mean), den + di * di)
        });
    num / den
}

fn features_of(samples: &[f64], selection: &FeatureSelection) -> Result<Vec<f64>> {
    if selection.contains(Feature::Slope) && samples.len() < 2 {
        return Err(Error::Input("slope needs at least two samples".into()));
    }
    let m = mean(samples);
    Ok(selection
        .features()
        .iter()
        .map(|f| match f {
            Feature::Mean => m,
            Feature::Variance => variance(samples, m),
            Feature::Slope => slope(samples, m),
        })
        .collect())
}

/// Selected features of a whole waveform, in selection order.
pub fn extract_features(w: &Waveform, selection: &FeatureSelection) -> Result<Vec<f64>> {
    features_of(w.samples(), selection)
}

/// Splits `w` into `k` equal contiguous windows and extracts features from
/// each. The signal length must be divisible by `k`.
pub fn windowed_features(
    w: &Waveform,
    k: usize,
    selection: &FeatureSelection,
) -> Result<Vec<Vec<f64>>> {
    if k == 0 || !w.len().is_multiple_of(k) {
        return Err(Error::Window {
            len: w.len(),
            windows: k,
        });
    }
    w.samples()
        .chunks_exact(w.len() / k)
        .map(|chunk| features_of(chunk, selection))
        .collect()
}

/// Concatenates per-signal feature vectors in the given signal order.
pub fn aggregate_multisignal(per_signal: &[Vec<f64>]) -> Result<Vec<f64>> {
    if per_signal.is_empty() {
        return Err(Error::Input("no signals to aggregate".into()));
    }
    Ok(per_signal.concat())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Label {
    Normal,
    Anomalous,
}

impl Label {
    pub fn as_u8(self) -> u8 {
        match self {
            Label::Normal => 0,
            Label::Anomalous => 1,
        }
    }

    pub fn from_u8(v: u8) -> Result<Self> {
        match v {
            0 => Ok(Label::Normal),
            1 => Ok(Label::Anomalous),
            _ => Err(Error::Input(format!("label must be 0 or 1, got {v}"))),
        }
    }
}

/// One sample's (or one window's) feature tuple. The label is ground truth
/// for evaluation and never reaches a fit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureRow {
    pub sample_id: u64,
    pub label: Label,
    pub window_index: usize,
    pub values: Vec<f64>,
}

impl FeatureRow {
    pub fn dim(&self) -> usize {
        self.values.len()
    }
}

/// Per-dimension min-max scaling parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormalizationParams {
    pub min: Vec<f64>,
    pub max: Vec<f64>,
}

impl NormalizationParams {
    pub fn dim(&self) -> usize {
        self.min.len()
    }

    /// Scales to `[0, 1]` over the fitted range; constant dimensions map to 0.5.
    /// Values outside the fitted range extrapolate linearly.
    pub fn apply(&self, values: &[f64]) -> Result<Vec<f64>> {
        if values.len() != self.dim() {
            return Err(Error::Input(format!(
                "expected {} dimensions, got {}",
                self.dim(),
                values.len()
            )));
        }
        Ok(values
            .iter()
            .zip(self.min.iter().zip(&self.max))
            .map(|(&v, (&lo, &hi))| {
                if hi > lo {
                    (v - lo) / (hi - lo)
                } else {
                    0.5
                }
            })
            .collect())
    }
}

/// Fits min-max parameters on `rows` and returns the scaled rows with them.
pub fn normalize_dataset(rows: &[FeatureRow]) -> Result<(Vec<FeatureRow>, NormalizationParams)> {
    if rows.len() < 2 {
        return Err(Error::Input("normalization needs at least two rows".into()));
    }
    let dim = rows[0].dim();
    if dim == 0 || rows.iter().any(|r| r.dim() != dim) {
        return Err(Error::Input("rows have inconsistent dimensionality".into()));
    }
    let mut min = vec![f64::INFINITY; dim];
    let mut max = vec![f64::NEG_INFINITY; dim];
    for r in rows {
        for (d, &v) in r.values.iter().enumerate() {
            if !v.is_finite() {
                return Err(Error::Input(format!("non-finite feature in sample {}", r.sample_id)));
            }
            min[d] = min[d].min(v);
            max[d] = max[d].max(v);
        }
    }
    let params = NormalizationParams { min, max };
    let scaled = rows
        .iter()
        .map(|r| {
            Ok(FeatureRow {
                values: params.apply(&r.values)?,
                ..r.clone()
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok((scaled, params))
}

/// Writes `sample_id,label,window_index,f1,...,fD`, sorted by
/// `(sample_id, window_index)`.
pub fn write_dataset_csv<W: Write>(rows: &[FeatureRow], out: W) -> Result<()> {
    let dim = rows.first().map_or(0, FeatureRow::dim);
    let mut sorted: Vec<&FeatureRow> = rows.iter().collect();
    sorted.sort_by_key(|r| (r.sample_id, r.window_index));
    let mut writer = csv::Writer::from_writer(out);
    let mut header = vec![
        "sample_id".to_string(),
        "label".to_string(),
        "window_index".to_string(),
    ];
    header.extend((1..=dim).map(|d| format!("f{d}")));
    writer.write_record(&header)?;
    for r in sorted {
        if r.dim() != dim {
            return Err(Error::Input("rows have inconsistent dimensionality".into()));
        }
        let mut rec = vec![
            r.sample_id.to_string(),
            r.label.as_u8().to_string(),
            r.window_index.to_string(),
        ];
        rec.extend(r.values.iter().map(f64::to_string));
        writer.write_record(&rec)?;
    }
    writer.flush().map_err(|e| Error::io("<csv>", e))?;
    Ok(())
}

pub fn read_dataset_csv<R: Read>(input: R) -> Result<Vec<FeatureRow>> {
    let mut reader = csv::Reader::from_reader(input);
    let headers = reader.headers()?.clone();
    let expected = ["sample_id", "label", "window_index"];
    if headers.len() < 4 || headers.iter().take(3).ne(expected.iter().copied()) {
        return Err(Error::Input(
            "dataset header must start with sample_id,label,window_index,f1".into(),
        ));
    }
    let parse_err = |line: usize, what: &str| Error::Input(format!("row {line}: bad {what}"));
    let mut rows = Vec::new();
    for (line, rec) in reader.records().enumerate() {
        let rec = rec?;
        let sample_id = rec[0].parse().map_err(|_| parse_err(line + 1, "sample_id"))?;
        let label: u8 = rec[1].parse().map_err(|_| parse_err(line + 1, "label"))?;
        let window_index = rec[2]
            .parse()
            .map_err(|_| parse_err(line + 1, "window_index"))?;
        let values = rec
            .iter()
            .skip(3)
            .map(|v| v.parse::<f64>().map_err(|_| parse_err(line + 1, "feature value")))
            .collect::<Result<Vec<_>>>()?;
        rows.push(FeatureRow {
            sample_id,
            label: Label::from_u8(label)?,
            window_index,
            values,
        });
    }
    Ok(rows)
}
