//! Item pool files: CSV `id,beta,<feature…>` or versioned JSON.

use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::data::io::{load_json, save_json, SCHEMA_VERSION};
use crate::error::{at_path, Error, Result};
use crate::irt::RaschItem;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PoolEntry {
    pub id: String,
    /// Absent for items not yet calibrated.
    pub beta: Option<f64>,
    #[serde(default)]
    pub features: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ItemPool {
    pub version: u64,
    #[serde(default)]
    pub feature_names: Vec<String>,
    pub items: Vec<PoolEntry>,
}

impl ItemPool {
    pub fn new(feature_names: Vec<String>, items: Vec<PoolEntry>) -> Result<Self> {
        let pool = ItemPool {
            version: SCHEMA_VERSION,
            feature_names,
            items,
        };
        pool.validate()?;
        Ok(pool)
    }

    pub fn from_items(items: &[RaschItem]) -> Result<Self> {
        let k = items.first().map_or(0, |i| i.features.len());
        let entries = items
            .iter()
            .map(|i| PoolEntry {
                id: i.id.clone(),
                beta: Some(i.beta),
                features: i.features.clone(),
            })
            .collect();
        ItemPool::new((1..=k).map(|c| format!("f{c}")).collect(), entries)
    }

    pub fn validate(&self) -> Result<()> {
        let mut seen = std::collections::BTreeSet::new();
        for e in &self.items {
            if !seen.insert(&e.id) {
                return Err(Error::InvalidParameter(format!("duplicate item `{}`", e.id)));
            }
            if e.features.len() != self.feature_names.len() {
                return Err(Error::DimensionMismatch(format!(
                    "item `{}` has {} features, pool declares {}",
                    e.id,
                    e.features.len(),
                    self.feature_names.len()
                )));
            }
            if e.beta.is_some_and(|b| !b.is_finite()) || e.features.iter().any(|f| !f.is_finite()) {
                return Err(Error::NonFinite(format!("item `{}`", e.id)));
            }
        }
        Ok(())
    }

    /// Every item as a [`RaschItem`]; fails on the first uncalibrated one.
    pub fn calibrated_items(&self) -> Result<Vec<RaschItem>> {
        self.items
            .iter()
            .map(|e| {
                let beta = e.beta.ok_or_else(|| Error::Uncalibrated(e.id.clone()))?;
                Ok(RaschItem {
                    id: e.id.clone(),
                    beta,
                    features: e.features.clone(),
                })
            })
            .collect()
    }

    pub fn read_csv<R: Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new().flexible(true).from_reader(reader);
        let header = rdr.headers()?.clone();
        if header.len() < 2 || &header[0] != "id" || &header[1] != "beta" {
            return Err(Error::Malformed {
                line: 1,
                message: "header must start with `id,beta`".to_string(),
            });
        }
        let feature_names: Vec<String> = header.iter().skip(2).map(str::to_string).collect();
        let mut items = Vec::new();
        for record in rdr.records() {
            let record = record?;
            let line = record.position().map_or(0, |p| p.line());
            let bad = |message: String| Error::Malformed { line, message };
            if record.len() != header.len() {
                return Err(bad(format!("expected {} fields, found {}", header.len(), record.len())));
            }
            let num = |s: &str| s.trim().parse::<f64>().map_err(|_| bad(format!("`{s}` is not a number")));
            let beta = match record[1].trim() {
                "" | "NA" => None,
                s => Some(num(s)?),
            };
            let features = record.iter().skip(2).map(num).collect::<Result<Vec<_>>>()?;
            items.push(PoolEntry {
                id: record[0].trim().to_string(),
                beta,
                features,
            });
        }
        ItemPool::new(feature_names, items)
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        let mut header = vec!["id".to_string(), "beta".to_string()];
        header.extend(self.feature_names.iter().cloned());
        w.write_record(&header)?;
        for e in &self.items {
            let mut rec = vec![e.id.clone(), e.beta.map_or(String::new(), |b| format!("{b:?}"))];
            rec.extend(e.features.iter().map(|f| format!("{f:?}")));
            w.write_record(&rec)?;
        }
        w.flush()?;
        Ok(())
    }

    /// Reads `.json` as a versioned document, anything else as CSV.
    pub fn load(path: &Path) -> Result<Self> {
        if path.extension().is_some_and(|e| e == "json") {
            let pool: ItemPool = load_json(path)?;
            at_path(path, || pool.validate())?;
            Ok(pool)
        } else {
            at_path(path, || ItemPool::read_csv(std::fs::File::open(path)?))
        }
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        if path.extension().is_some_and(|e| e == "json") {
            save_json(path, self)
        } else {
            at_path(path, || {
                let mut buf = Vec::new();
                self.write_csv(&mut buf)?;
                Ok(std::fs::write(path, buf)?)
            })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_round_trip_with_uncalibrated() {
        let text = "id,beta,borrow,steps\na,0.5,1.0,2.0\nb,,0.0,3.0\n";
        let pool = ItemPool::read_csv(text.as_bytes()).unwrap();
        assert_eq!(pool.items[1].beta, None);
        assert_eq!(pool.feature_names, vec!["borrow", "steps"]);
        assert!(matches!(pool.calibrated_items(), Err(Error::Uncalibrated(ref id)) if id == "b"));
        let mut out = Vec::new();
        pool.write_csv(&mut out).unwrap();
        assert_eq!(String::from_utf8(out).unwrap(), text);
    }

    #[test]
    fn malformed_pool() {
        let err = ItemPool::read_csv("id,beta\na,x\n".as_bytes()).unwrap_err();
        assert!(matches!(err, Error::Malformed { line: 2, .. }));
        assert!(ItemPool::read_csv("item,beta\n".as_bytes()).is_err());
    }
}
