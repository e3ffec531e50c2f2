//! File formats and dataset preparation.
//!
//! Lifetimes travel as one CSV row per step,
//!
//! ```text
//! lifetime_id,unit_id,t,event,<feature>,...
//! ```
//!
//! where `t` runs `1..=T` within a lifetime and `event` is `0` on every row
//! except the last, which is `1` for a failure and `2` for censoring. Fitted
//! models are stored as JSON ([`ModelFile`]). Every file is written to a
//! temporary sibling first and renamed into place.

mod features;
mod lifetime_csv;
mod model_file;

use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::Lifetime;

pub use features::{fleet_features, kfold, FleetFeatures, Fold};
pub use lifetime_csv::{
    parse_lifetimes, read_lifetimes_csv, render_lifetimes, write_lifetimes_csv, IngestOptions,
};
pub use model_file::{CoxModelFile, LatentModelFile, ModelFile};

/// Per-feature min and max learned on training lifetimes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Normalization {
    pub min: Vec<f64>,
    pub max: Vec<f64>,
}

impl Normalization {
    /// Learns the ranges over `lifetimes`. Constant features are rejected.
    pub fn fit<'a>(
        feature_names: &[String],
        lifetimes: impl IntoIterator<Item = &'a Lifetime>,
    ) -> Result<Self> {
        let p = feature_names.len();
        let mut min = vec![f64::INFINITY; p];
        let mut max = vec![f64::NEG_INFINITY; p];
        let mut seen = false;
        for life in lifetimes {
            if life.n_features() != p {
                return Err(Error::DimensionMismatch {
                    expected: p,
                    found: life.n_features(),
                });
            }
            for row in life.rows() {
                seen = true;
                for k in 0..p {
                    min[k] = min[k].min(row[k]);
                    max[k] = max[k].max(row[k]);
                }
            }
        }
        if !seen {
            return Err(Error::InvalidInput(
                "normalization needs at least one training lifetime".into(),
            ));
        }
        if let Some(k) = (0..p).find(|&k| min[k] >= max[k]) {
            return Err(Error::InvalidInput(format!(
                "feature {} is constant ({}) on the training set",
                feature_names[k], min[k]
            )));
        }
        Ok(Self { min, max })
    }

    pub fn validate(&self, n_features: usize) -> Result<()> {
        if self.min.len() != n_features || self.max.len() != n_features {
            return Err(Error::DimensionMismatch {
                expected: n_features,
                found: self.min.len().min(self.max.len()),
            });
        }
        if self
            .min
            .iter()
            .zip(&self.max)
            .any(|(lo, hi)| !(lo.is_finite() && hi.is_finite() && lo < hi))
        {
            return Err(Error::InvalidInput(
                "normalization ranges must be finite with min < max".into(),
            ));
        }
        Ok(())
    }

    /// `(x − min)/(max − min)` in place; values outside the range are kept.
    pub fn apply(&self, life: &mut Lifetime) -> Result<()> {
        self.validate(life.n_features())?;
        let p = life.n_features();
        for (i, v) in life.covariates_mut().iter_mut().enumerate() {
            let k = i % p;
            *v = (*v - self.min[k]) / (self.max[k] - self.min[k]);
        }
        Ok(())
    }
}

/// Lifetimes sharing one set of named features.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub lifetimes: Vec<Lifetime>,
    pub feature_names: Vec<String>,
    /// Stats applied to the covariates, if any.
    pub normalization: Option<Normalization>,
}

impl Dataset {
    pub fn new(lifetimes: Vec<Lifetime>, feature_names: Vec<String>) -> Result<Self> {
        let p = feature_names.len();
        if let Some(bad) = lifetimes.iter().find(|l| l.n_features() != p) {
            return Err(Error::InvalidInput(format!(
                "lifetime {} has {} features, expected {p}",
                bad.id(),
                bad.n_features()
            )));
        }
        Ok(Self {
            lifetimes,
            feature_names,
            normalization: None,
        })
    }

    pub fn n_features(&self) -> usize {
        self.feature_names.len()
    }

    pub fn len(&self) -> usize {
        self.lifetimes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lifetimes.is_empty()
    }

    /// Lifetimes at the given positions, keeping names and normalization.
    pub fn subset(&self, indices: &[usize]) -> Result<Self> {
        let lifetimes = indices
            .iter()
            .map(|&i| {
                self.lifetimes
                    .get(i)
                    .cloned()
                    .ok_or(Error::IndexOutOfRange {
                        index: i,
                        len: self.lifetimes.len(),
                    })
            })
            .collect::<Result<_>>()?;
        Ok(Self {
            lifetimes,
            feature_names: self.feature_names.clone(),
            normalization: self.normalization.clone(),
        })
    }

    /// Min-max scales every lifetime with ranges learned on `fit_on`.
    pub fn normalize(&mut self, fit_on: &[usize]) -> Result<&Normalization> {
        if self.normalization.is_some() {
            return Err(Error::AlreadyNormalized);
        }
        if fit_on.is_empty() {
            return Err(Error::InvalidInput("training subset is empty".into()));
        }
        let train = fit_on
            .iter()
            .map(|&i| {
                self.lifetimes.get(i).ok_or(Error::IndexOutOfRange {
                    index: i,
                    len: self.lifetimes.len(),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let norm = Normalization::fit(&self.feature_names, train)?;
        self.apply_normalization(norm)?;
        Ok(self.normalization.as_ref().expect("just set"))
    }

    /// Applies previously learned stats, for example from a model file.
    pub fn apply_normalization(&mut self, norm: Normalization) -> Result<()> {
        if self.normalization.is_some() {
            return Err(Error::AlreadyNormalized);
        }
        norm.validate(self.n_features())?;
        for life in &mut self.lifetimes {
            norm.apply(life)?;
        }
        self.normalization = Some(norm);
        Ok(())
    }
}

/// Writes `bytes` to a temporary file next to `path` and renames it over `path`.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(bytes)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| Error::Io(e.error))?;
    Ok(())
}

/// Pretty JSON, written atomically.
pub fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> Result<()> {
    let mut bytes = serde_json::to_vec_pretty(value)?;
    bytes.push(b'\n');
    write_atomic(path, &bytes)
}

pub fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::data(path, e.to_string()))?;
    serde_json::from_str(&text).map_err(|e| Error::data(path, e.to_string()))
}

/// Serializable rows as CSV with a header, written atomically.
pub fn write_csv_rows<T: Serialize>(path: &Path, rows: &[T]) -> Result<()> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for row in rows {
        w.serialize(row)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
    write_atomic(path, &bytes)
}

/// Flat key-value JSON configuration.
///
/// Values must be strings, numbers or booleans; nested objects and arrays are
/// rejected.
pub fn read_flat_config(path: &Path) -> Result<serde_json::Map<String, serde_json::Value>> {
    let value: serde_json::Value = read_json(path)?;
    let serde_json::Value::Object(map) = value else {
        return Err(Error::data(path, "config must be a JSON object"));
    };
    if let Some((k, _)) = map
        .iter()
        .find(|(_, v)| v.is_object() || v.is_array() || v.is_null())
    {
        return Err(Error::data(
            path,
            format!("config key {k:?} must be a string, number or boolean"),
        ));
    }
    Ok(map)
}

/// Serde adapter writing non-finite floats as the strings `"inf"`, `"-inf"`
/// and `"nan"`, since JSON numbers cannot express them.
pub mod extended_f64 {
    use serde::de::{self, Deserializer, Visitor};
    use serde::Serializer;
    use std::fmt;

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_finite() {
            s.serialize_f64(*v)
        } else if v.is_nan() {
            s.serialize_str("nan")
        } else if *v > 0.0 {
            s.serialize_str("inf")
        } else {
            s.serialize_str("-inf")
        }
    }

    struct F64Visitor;

    impl Visitor<'_> for F64Visitor {
        type Value = f64;

        fn expecting(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
            f.write_str("a number or one of \"inf\", \"-inf\", \"nan\"")
        }

        fn visit_f64<E: de::Error>(self, v: f64) -> Result<f64, E> {
            Ok(v)
        }

        fn visit_i64<E: de::Error>(self, v: i64) -> Result<f64, E> {
            Ok(v as f64)
        }

        fn visit_u64<E: de::Error>(self, v: u64) -> Result<f64, E> {
            Ok(v as f64)
        }

        fn visit_str<E: de::Error>(self, v: &str) -> Result<f64, E> {
            match v {
                "inf" | "+inf" | "infinity" => Ok(f64::INFINITY),
                "-inf" | "-infinity" => Ok(f64::NEG_INFINITY),
                "nan" => Ok(f64::NAN),
                other => other
                    .parse()
                    .map_err(|_| E::custom(format!("not a number: {other}"))),
            }
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        d.deserialize_any(F64Visitor)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Event;

    fn names(p: usize) -> Vec<String> {
        (0..p).map(|k| format!("x{k}")).collect()
    }

    fn one(id: &str, values: &[f64]) -> Lifetime {
        Lifetime::new(id, id, 1, values.to_vec(), Event::Failed).unwrap()
    }

    #[test]
    fn normalize_with_training_stats() {
        let mut ds = Dataset::new(
            vec![one("a", &[0.0, 10.0]), one("b", &[5.0]), one("c", &[20.0])],
            names(1),
        )
        .unwrap();
        ds.normalize(&[0]).unwrap();
        assert_eq!(ds.lifetimes[0].covariates(), &[0.0, 1.0]);
        assert_eq!(ds.lifetimes[1].covariates(), &[0.5]);
        // extrapolation is kept, not clipped
        assert_eq!(ds.lifetimes[2].covariates(), &[2.0]);
        assert!(matches!(ds.normalize(&[0]), Err(Error::AlreadyNormalized)));
        let stats = ds.normalization.clone().unwrap();
        assert!(matches!(
            ds.apply_normalization(stats),
            Err(Error::AlreadyNormalized)
        ));
    }

    #[test]
    fn constant_feature_rejected() {
        let mut ds = Dataset::new(vec![one("a", &[3.0, 3.0])], names(1)).unwrap();
        assert!(ds.normalize(&[0]).is_err());
        assert!(ds.normalization.is_none());
        assert!(ds.normalize(&[]).is_err());
    }

    #[test]
    fn extended_floats_round_trip() {
        #[derive(Serialize, Deserialize, PartialEq, Debug)]
        struct W {
            #[serde(with = "extended_f64")]
            v: f64,
        }
        for v in [f64::INFINITY, f64::NEG_INFINITY, 0.25, 3.0] {
            let text = serde_json::to_string(&W { v }).unwrap();
            assert_eq!(serde_json::from_str::<W>(&text).unwrap(), W { v });
        }
        assert_eq!(
            serde_json::to_string(&W { v: f64::INFINITY }).unwrap(),
            r#"{"v":"inf"}"#
        );
        assert!(serde_json::from_str::<W>(r#"{"v":"nan"}"#)
            .unwrap()
            .v
            .is_nan());
    }

    #[test]
    fn flat_config_rejects_nesting() {
        let dir = tempfile::tempdir().unwrap();
        let good = dir.path().join("good.json");
        std::fs::write(
            &good,
            r#"{"seed": 7, "criterion": "mu", "include_censored": true}"#,
        )
        .unwrap();
        let map = read_flat_config(&good).unwrap();
        assert_eq!(map["seed"], 7);
        let bad = dir.path().join("bad.json");
        std::fs::write(&bad, r#"{"cost": {"d": 5}}"#).unwrap();
        assert!(matches!(read_flat_config(&bad), Err(Error::Data { .. })));
    }

    #[test]
    fn atomic_write_replaces_content() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("out.txt");
        write_atomic(&path, b"first").unwrap();
        write_atomic(&path, b"second").unwrap();
        assert_eq!(std::fs::read_to_string(&path).unwrap(), "second");
        assert_eq!(std::fs::read_dir(dir.path()).unwrap().count(), 1);
    }
}
