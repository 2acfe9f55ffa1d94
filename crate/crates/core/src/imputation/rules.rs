//! Engineering ruleset that turns a complete class label into component counts.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::inventory::AssetRecord;

use super::chain::ClassLabel;

/// Count contributed per span, per abutment (two per bridge) and per bent.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComponentRule {
    pub component: String,
    #[serde(default)]
    pub per_span: u32,
    #[serde(default)]
    pub per_abutment: u32,
    #[serde(default)]
    pub per_bent: u32,
}

impl ComponentRule {
    fn count(&self, spans: u32, bents: u32) -> u32 {
        self.per_span * spans + self.per_abutment * 2 + self.per_bent * bents
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct QuantityRules {
    pub spans_attribute: String,
    pub bent_attribute: String,
    pub column_count_attribute: String,
    pub abutment_attribute: String,
    pub single_column_bent: Vec<String>,
    pub multi_column_bent: Vec<String>,
    pub pier_wall_bent: Vec<String>,
    pub seat_abutment: Vec<String>,
    pub column_component: String,
    pub pier_wall_component: String,
    /// Components present only on seat-type abutments.
    pub seat_components: Vec<ComponentRule>,
    /// Components present on every bridge.
    pub common_components: Vec<ComponentRule>,
}

impl Default for QuantityRules {
    fn default() -> Self {
        let rule = |c: &str, per_abutment| ComponentRule {
            component: c.to_string(),
            per_span: 0,
            per_abutment,
            per_bent: 0,
        };
        Self {
            spans_attribute: "n_spans".into(),
            bent_attribute: "bent_type".into(),
            column_count_attribute: "n_col".into(),
            abutment_attribute: "abutment_type".into(),
            single_column_bent: vec!["SCB".into()],
            multi_column_bent: vec!["MCB".into()],
            pier_wall_bent: vec!["PWB".into()],
            seat_abutment: vec!["S".into()],
            column_component: "column".into(),
            pier_wall_component: "pier_wall".into(),
            seat_components: vec![rule("joint_seal", 1), rule("bearing", 2), rule("abutment_seat", 1)],
            common_components: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ComponentQuantities {
    pub spans: u32,
    pub bents: u32,
    pub components: BTreeMap<String, u32>,
}

impl ComponentQuantities {
    pub fn get(&self, component: &str) -> u32 {
        self.components.get(component).copied().unwrap_or(0)
    }
}

fn lookup<'a>(asset: &'a AssetRecord, label: &'a ClassLabel, attribute: &str) -> Option<&'a String> {
    label.get(attribute).or_else(|| asset.known_attributes.get(attribute))
}

/// Apply the ruleset to one asset under one exposure class. Quantities the
/// inventory already records override derived ones.
pub fn derive_quantities(
    asset: &AssetRecord,
    label: &ClassLabel,
    rules: &QuantityRules,
) -> Result<ComponentQuantities> {
    let need = |attr: &str| {
        lookup(asset, label, attr).ok_or_else(|| {
            Error::invalid(format!(
                "`{}`: `{attr}` unknown, cannot derive quantities",
                asset.asset_id
            ))
        })
    };
    let spans: u32 = need(&rules.spans_attribute)?
        .parse()
        .map_err(|_| Error::invalid(format!("`{}`: span count is not an integer", asset.asset_id)))?;
    if spans == 0 {
        return Err(Error::invalid(format!("`{}`: zero spans", asset.asset_id)));
    }
    let bents = spans - 1;
    let mut components = BTreeMap::new();

    let (mut columns, mut walls) = (0, 0);
    if bents > 0 {
        let bent = need(&rules.bent_attribute)?;
        if rules.single_column_bent.contains(bent) {
            columns = bents;
        } else if rules.multi_column_bent.contains(bent) {
            let per_bent: u32 = need(&rules.column_count_attribute)?
                .parse()
                .map_err(|_| Error::invalid(format!("`{}`: column count is not an integer", asset.asset_id)))?;
            columns = per_bent * bents;
        } else if rules.pier_wall_bent.contains(bent) {
            walls = bents;
        }
    }
    components.insert(rules.column_component.clone(), columns);
    components.insert(rules.pier_wall_component.clone(), walls);

    let abutment = need(&rules.abutment_attribute)?;
    if rules.seat_abutment.contains(abutment) {
        for r in &rules.seat_components {
            components.insert(r.component.clone(), r.count(spans, bents));
        }
    }
    for r in &rules.common_components {
        components.insert(r.component.clone(), r.count(spans, bents));
    }
    for (name, count) in components.iter_mut() {
        if let Some(&known) = asset.component_quantities.get(name) {
            *count = known;
        }
    }
    Ok(ComponentQuantities {
        spans,
        bents,
        components,
    })
}
