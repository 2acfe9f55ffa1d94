//! Asset data model, attribute schema and the inventory CSV format.
//!
//! Inventory CSV layout (UTF-8, comma separated, `.` decimal separator):
//!
//! | column            | content                                              |
//! |-------------------|------------------------------------------------------|
//! | `asset_id`        | unique identifier                                    |
//! | `lat`, `lon`      | site coordinates in degrees                          |
//! | `<attribute>`     | one per schema attribute; empty cell = missing       |
//! | `truth_<attribute>` | optional ground-truth value for an attribute       |
//! | `n_<component>`   | component quantity; empty cell = derive from class   |
//! | `rpc`             | optional replacement cost override                   |
//!
//! Any other column is carried as an opaque numeric side column (deck area,
//! span length, traffic counts, ...).

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const TRUTH_PREFIX: &str = "truth_";
pub const QUANTITY_PREFIX: &str = "n_";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AttributeKind {
    Categorical,
    DiscreteCount,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttributeSpec {
    pub name: String,
    pub kind: AttributeKind,
    pub values: Vec<String>,
    /// Upper bound on a discrete count; larger categories are rejected.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max: Option<u32>,
}

impl AttributeSpec {
    pub fn index_of(&self, value: &str) -> Option<usize> {
        self.values.iter().position(|v| v == value)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AttributeSchema {
    attributes: Vec<AttributeSpec>,
    #[serde(skip)]
    index: HashMap<String, usize>,
}

#[derive(Deserialize)]
struct RawSchema {
    attributes: Vec<AttributeSpec>,
}

impl<'de> Deserialize<'de> for AttributeSchema {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let raw = RawSchema::deserialize(d)?;
        AttributeSchema::new(raw.attributes).map_err(serde::de::Error::custom)
    }
}

impl AttributeSchema {
    pub fn new(attributes: Vec<AttributeSpec>) -> Result<Self> {
        let mut index = HashMap::new();
        for (i, attr) in attributes.iter().enumerate() {
            if attr.name.is_empty() {
                return Err(Error::invalid("attribute with empty name"));
            }
            if index.insert(attr.name.clone(), i).is_some() {
                return Err(Error::invalid(format!("duplicate attribute `{}`", attr.name)));
            }
            if attr.values.is_empty() {
                return Err(Error::invalid(format!(
                    "attribute `{}` has no allowed values",
                    attr.name
                )));
            }
            let distinct: BTreeSet<&String> = attr.values.iter().collect();
            if distinct.len() != attr.values.len() {
                return Err(Error::invalid(format!("attribute `{}` repeats a value", attr.name)));
            }
            if attr.kind == AttributeKind::DiscreteCount {
                let mut counts = attr
                    .values
                    .iter()
                    .map(|v| {
                        v.parse::<u32>().map_err(|_| {
                            Error::invalid(format!(
                                "discrete-count attribute `{}` has non-integer value `{v}`",
                                attr.name
                            ))
                        })
                    })
                    .collect::<Result<Vec<_>>>()?;
                counts.sort_unstable();
                if counts.windows(2).any(|w| w[1] != w[0] + 1) {
                    return Err(Error::invalid(format!(
                        "discrete-count attribute `{}` values are not contiguous",
                        attr.name
                    )));
                }
                if let (Some(max), Some(&top)) = (attr.max, counts.last()) {
                    if top > max {
                        return Err(Error::invalid(format!(
                            "attribute `{}` allows {top}, above its maximum {max}",
                            attr.name
                        )));
                    }
                }
            }
        }
        Ok(Self { attributes, index })
    }

    pub fn from_json_file(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| Error::invalid(format!("schema {}: {e}", path.display())))
    }

    pub fn attributes(&self) -> &[AttributeSpec] {
        &self.attributes
    }

    pub fn get(&self, name: &str) -> Option<&AttributeSpec> {
        self.index.get(name).map(|&i| &self.attributes[i])
    }

    pub fn position(&self, name: &str) -> Option<usize> {
        self.index.get(name).copied()
    }

    pub fn contains(&self, name: &str) -> bool {
        self.index.contains_key(name)
    }

    /// Check `value` against the allowed values of `attribute`.
    pub fn check_value(&self, attribute: &str, value: &str) -> Result<()> {
        let spec = self
            .get(attribute)
            .ok_or_else(|| Error::UnknownAttribute(attribute.to_string()))?;
        if spec.index_of(value).is_none() {
            return Err(Error::invalid(format!(
                "value `{value}` not allowed for `{attribute}` (allowed: {})",
                spec.values.join(", ")
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Site {
    pub lat: f64,
    pub lon: f64,
}

impl Site {
    pub fn new(lat: f64, lon: f64) -> Result<Self> {
        if !(-90.0..=90.0).contains(&lat) || !(-180.0..=180.0).contains(&lon) {
            return Err(Error::invalid(format!("coordinates ({lat}, {lon}) out of range")));
        }
        Ok(Self { lat, lon })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AssetRecord {
    pub asset_id: String,
    pub site: Site,
    pub known_attributes: BTreeMap<String, String>,
    pub component_quantities: BTreeMap<String, u32>,
    pub ground_truth_attributes: Option<BTreeMap<String, String>>,
    pub replacement_cost: Option<f64>,
    /// Continuous side columns, not part of the categorical class space.
    pub numeric: BTreeMap<String, f64>,
}

impl AssetRecord {
    pub fn new(asset_id: impl Into<String>, site: Site) -> Self {
        Self {
            asset_id: asset_id.into(),
            site,
            known_attributes: BTreeMap::new(),
            component_quantities: BTreeMap::new(),
            ground_truth_attributes: None,
            replacement_cost: None,
            numeric: BTreeMap::new(),
        }
    }

    pub fn with_attribute(mut self, name: &str, value: &str) -> Self {
        self.known_attributes.insert(name.to_string(), value.to_string());
        self
    }

    pub fn with_truth(mut self, name: &str, value: &str) -> Self {
        self.ground_truth_attributes
            .get_or_insert_with(BTreeMap::new)
            .insert(name.to_string(), value.to_string());
        self
    }
}

/// Required attributes absent from the asset's known set, in schema order.
pub fn missing_fields(schema: &AttributeSchema, asset: &AssetRecord, required: &[String]) -> Result<Vec<String>> {
    let mut positions = Vec::with_capacity(required.len());
    for name in required {
        let pos = schema
            .position(name)
            .ok_or_else(|| Error::UnknownAttribute(name.clone()))?;
        positions.push(pos);
    }
    positions.sort_unstable();
    positions.dedup();
    Ok(positions
        .into_iter()
        .map(|p| &schema.attributes()[p].name)
        .filter(|name| !asset.known_attributes.contains_key(*name))
        .cloned()
        .collect())
}

#[derive(Debug, Clone, PartialEq)]
pub struct Inventory {
    schema: AttributeSchema,
    assets: Vec<AssetRecord>,
}

impl Inventory {
    pub fn new(schema: AttributeSchema, assets: Vec<AssetRecord>) -> Result<Self> {
        if assets.is_empty() {
            return Err(Error::invalid("inventory has no assets"));
        }
        let mut seen = BTreeSet::new();
        for asset in &assets {
            if !seen.insert(asset.asset_id.as_str()) {
                return Err(Error::DuplicateAsset(asset.asset_id.clone()));
            }
            Site::new(asset.site.lat, asset.site.lon)?;
            let truth = asset.ground_truth_attributes.iter().flatten();
            for (name, value) in asset.known_attributes.iter().chain(truth) {
                schema
                    .check_value(name, value)
                    .map_err(|e| Error::invalid(format!("asset `{}`: {e}", asset.asset_id)))?;
            }
        }
        Ok(Self { schema, assets })
    }

    pub fn schema(&self) -> &AttributeSchema {
        &self.schema
    }

    pub fn assets(&self) -> &[AssetRecord] {
        &self.assets
    }

    pub fn len(&self) -> usize {
        self.assets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.assets.is_empty()
    }

    pub fn find(&self, asset_id: &str) -> Option<(usize, &AssetRecord)> {
        self.assets.iter().enumerate().find(|(_, a)| a.asset_id == asset_id)
    }

    pub fn from_csv_reader<R: Read>(reader: R, schema: AttributeSchema, context: &str) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
        let headers = rdr
            .headers()
            .map_err(|e| Error::invalid(format!("{context}: {e}")))?
            .clone();
        let col = |name: &str| headers.iter().position(|h| h == name);
        let missing = |column: &str| Error::MissingColumn {
            context: context.to_string(),
            column: column.to_string(),
        };
        let id_col = col("asset_id").ok_or_else(|| missing("asset_id"))?;
        let lat_col = col("lat").ok_or_else(|| missing("lat"))?;
        let lon_col = col("lon").ok_or_else(|| missing("lon"))?;
        let mut attr_cols = Vec::new();
        for attr in schema.attributes() {
            let c = col(&attr.name).ok_or_else(|| missing(&attr.name))?;
            attr_cols.push((attr.name.clone(), c));
        }
        let rpc_col = col("rpc");
        let mut truth_cols = Vec::new();
        let mut qty_cols = Vec::new();
        let mut numeric_cols = Vec::new();
        for (i, h) in headers.iter().enumerate() {
            if [Some(id_col), Some(lat_col), Some(lon_col), rpc_col].contains(&Some(i)) || schema.contains(h) {
                continue;
            }
            if let Some(attr) = h.strip_prefix(TRUTH_PREFIX) {
                if !schema.contains(attr) {
                    return Err(Error::UnknownAttribute(attr.to_string()));
                }
                truth_cols.push((attr.to_string(), i));
            } else if let Some(component) = h.strip_prefix(QUANTITY_PREFIX) {
                qty_cols.push((component.to_string(), i));
            } else {
                numeric_cols.push((h.to_string(), i));
            }
        }

        let mut assets = Vec::new();
        let mut seen = BTreeSet::new();
        for (row_idx, record) in rdr.records().enumerate() {
            let line = row_idx + 2;
            let record = record.map_err(|e| Error::invalid(format!("{context}: line {line}: {e}")))?;
            let field = |c: usize| record.get(c).unwrap_or("");
            let bad = |column: &str, message: String| Error::InvalidField {
                context: context.to_string(),
                row: line,
                column: column.to_string(),
                message,
            };
            let parse_f64 = |c: usize, name: &str| -> Result<f64> {
                field(c)
                    .parse::<f64>()
                    .ok()
                    .filter(|v| v.is_finite())
                    .ok_or_else(|| bad(name, format!("`{}` is not a finite number", field(c))))
            };

            let asset_id = field(id_col).to_string();
            if asset_id.is_empty() {
                return Err(bad("asset_id", "empty asset_id".into()));
            }
            if !seen.insert(asset_id.clone()) {
                return Err(Error::DuplicateAsset(asset_id));
            }
            let lat = parse_f64(lat_col, "lat")?;
            let lon = parse_f64(lon_col, "lon")?;
            let site = Site::new(lat, lon).map_err(|e| bad("lat/lon", e.to_string()))?;
            let mut asset = AssetRecord::new(asset_id, site);

            for (name, c) in &attr_cols {
                let v = field(*c);
                if v.is_empty() {
                    continue;
                }
                schema.check_value(name, v).map_err(|e| bad(name, e.to_string()))?;
                asset.known_attributes.insert(name.clone(), v.to_string());
            }
            for (name, c) in &truth_cols {
                let v = field(*c);
                if v.is_empty() {
                    continue;
                }
                schema
                    .check_value(name, v)
                    .map_err(|e| bad(&format!("{TRUTH_PREFIX}{name}"), e.to_string()))?;
                asset
                    .ground_truth_attributes
                    .get_or_insert_with(BTreeMap::new)
                    .insert(name.clone(), v.to_string());
            }
            for (name, c) in &qty_cols {
                let v = field(*c);
                if v.is_empty() {
                    continue;
                }
                let n = v.parse::<u32>().map_err(|_| {
                    bad(
                        &format!("{QUANTITY_PREFIX}{name}"),
                        format!("`{v}` is not a non-negative integer"),
                    )
                })?;
                asset.component_quantities.insert(name.clone(), n);
            }
            if let Some(c) = rpc_col {
                if !field(c).is_empty() {
                    let v = parse_f64(c, "rpc")?;
                    if v < 0.0 {
                        return Err(bad("rpc", "negative replacement cost".into()));
                    }
                    asset.replacement_cost = Some(v);
                }
            }
            for (name, c) in &numeric_cols {
                if !field(*c).is_empty() {
                    asset.numeric.insert(name.clone(), parse_f64(*c, name)?);
                }
            }
            assets.push(asset);
        }
        Inventory::new(schema, assets).map_err(|e| match e {
            Error::InvalidInput(m) => Error::invalid(format!("{context}: {m}")),
            other => other,
        })
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let components: BTreeSet<&String> = self.assets.iter().flat_map(|a| a.component_quantities.keys()).collect();
        let numerics: BTreeSet<&String> = self.assets.iter().flat_map(|a| a.numeric.keys()).collect();
        let truths: Vec<&str> = self
            .schema
            .attributes()
            .iter()
            .map(|a| a.name.as_str())
            .filter(|n| {
                self.assets
                    .iter()
                    .any(|a| a.ground_truth_attributes.as_ref().is_some_and(|t| t.contains_key(*n)))
            })
            .collect();

        let mut header: Vec<String> = vec!["asset_id".into(), "lat".into(), "lon".into()];
        header.extend(self.schema.attributes().iter().map(|a| a.name.clone()));
        header.extend(truths.iter().map(|n| format!("{TRUTH_PREFIX}{n}")));
        header.extend(components.iter().map(|c| format!("{QUANTITY_PREFIX}{c}")));
        header.push("rpc".into());
        header.extend(numerics.iter().map(|n| n.to_string()));

        let mut w = csv::Writer::from_writer(writer);
        let csv_err = |e: csv::Error| Error::invalid(format!("writing inventory: {e}"));
        w.write_record(&header).map_err(csv_err)?;
        for a in &self.assets {
            let mut row = vec![a.asset_id.clone(), a.site.lat.to_string(), a.site.lon.to_string()];
            for attr in self.schema.attributes() {
                row.push(a.known_attributes.get(&attr.name).cloned().unwrap_or_default());
            }
            for n in &truths {
                row.push(
                    a.ground_truth_attributes
                        .as_ref()
                        .and_then(|t| t.get(*n))
                        .cloned()
                        .unwrap_or_default(),
                );
            }
            for c in &components {
                row.push(
                    a.component_quantities
                        .get(*c)
                        .map(|n| n.to_string())
                        .unwrap_or_default(),
                );
            }
            row.push(a.replacement_cost.map(|v| v.to_string()).unwrap_or_default());
            for n in &numerics {
                row.push(a.numeric.get(*n).map(|v| v.to_string()).unwrap_or_default());
            }
            w.write_record(&row).map_err(csv_err)?;
        }
        w.flush()
            .map_err(|e| Error::invalid(format!("writing inventory: {e}")))?;
        Ok(())
    }
}

pub fn load_inventory(path: impl AsRef<Path>, schema: AttributeSchema) -> Result<Inventory> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    Inventory::from_csv_reader(file, schema, &path.display().to_string())
}
