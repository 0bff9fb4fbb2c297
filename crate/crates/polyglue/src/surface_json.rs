//! JSON encoding of noded surfaces.
//!
//! ```json
//! {"ordered": true,
//!  "components": [{"id": "A", "genus": 1}, {"id": "s", "genus": 0}],
//!  "marked": [{"component": "A", "point": "m1"}],
//!  "nodes": [[{"component": "A", "point": "x"}, {"component": "s", "point": "y"}]],
//!  "energy": {"s": 0.5}}
//! ```

use std::collections::BTreeMap;

use anyhow::{Context, Result};
use polyglue_core::surface::{DomainComponent, NodedSurface, PointRef};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ComponentDoc {
    pub id: String,
    pub genus: u32,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PointDoc {
    pub component: String,
    pub point: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SurfaceDoc {
    pub ordered: bool,
    pub components: Vec<ComponentDoc>,
    #[serde(default)]
    pub marked: Vec<PointDoc>,
    #[serde(default)]
    pub nodes: Vec<[PointDoc; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub energy: Option<BTreeMap<String, f64>>,
}

impl From<&PointRef> for PointDoc {
    fn from(p: &PointRef) -> Self {
        Self {
            component: p.component.clone(),
            point: p.point.clone(),
        }
    }
}

impl From<&PointDoc> for PointRef {
    fn from(p: &PointDoc) -> Self {
        PointRef::new(p.component.clone(), p.point.clone())
    }
}

impl SurfaceDoc {
    pub fn from_surface(s: &NodedSurface) -> Self {
        Self {
            ordered: s.is_ordered(),
            components: s
                .components()
                .iter()
                .map(|c| ComponentDoc {
                    id: c.id.clone(),
                    genus: c.genus,
                })
                .collect(),
            marked: s.marked().iter().map(PointDoc::from).collect(),
            nodes: s
                .nodes()
                .iter()
                .map(|(x, y)| [PointDoc::from(x), PointDoc::from(y)])
                .collect(),
            energy: s.energy().cloned(),
        }
    }

    pub fn to_surface(&self) -> Result<NodedSurface> {
        let components = self
            .components
            .iter()
            .map(|c| DomainComponent::new(c.id.clone(), c.genus))
            .collect();
        let marked = self.marked.iter().map(PointRef::from).collect();
        let nodes = self
            .nodes
            .iter()
            .map(|[x, y]| (PointRef::from(x), PointRef::from(y)))
            .collect();
        let s = NodedSurface::new(components, marked, nodes, self.ordered)?;
        Ok(match &self.energy {
            Some(e) => s.with_energy(e.clone())?,
            None => s,
        })
    }
}

pub fn parse_surface(text: &str) -> Result<NodedSurface> {
    let doc: SurfaceDoc = serde_json::from_str(text).context("malformed surface JSON")?;
    doc.to_surface()
}

/// Pretty-printed JSON with a trailing newline.
pub fn emit_surface(s: &NodedSurface) -> String {
    let mut out = serde_json::to_string_pretty(&SurfaceDoc::from_surface(s)).expect("plain data serializes");
    out.push('\n');
    out
}
