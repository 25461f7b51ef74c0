//! Space file format: a JSON object with vertices, edges, mesh, tau and a
//! free-form meta map. Load/save round-trips exactly (f64 values survive
//! serde_json's shortest-representation printing bit-for-bit).

use std::collections::HashMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{MmError, Result};
use crate::space::{DiscreteSpace, EdgeSpec, VertexSpec};

#[derive(Serialize, Deserialize)]
struct VertexRecord {
    id: String,
    w: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    coord: Option<[f64; 2]>,
}

#[derive(Serialize, Deserialize)]
struct EdgeRecord {
    u: String,
    v: String,
    len: f64,
}

#[derive(Serialize, Deserialize)]
struct SpaceFile {
    vertices: Vec<VertexRecord>,
    edges: Vec<EdgeRecord>,
    mesh: f64,
    tau: f64,
    #[serde(default)]
    meta: HashMap<String, String>,
}

pub fn to_json(space: &DiscreteSpace) -> String {
    let file = SpaceFile {
        vertices: (0..space.len())
            .map(|v| VertexRecord {
                id: space.id(v).to_string(),
                w: space.weight(v),
                coord: space.coord(v),
            })
            .collect(),
        edges: space
            .edges()
            .iter()
            .map(|&(u, v, len)| EdgeRecord {
                u: space.id(u).to_string(),
                v: space.id(v).to_string(),
                len,
            })
            .collect(),
        mesh: space.mesh(),
        tau: space.tau(),
        meta: space.meta.clone(),
    };
    serde_json::to_string_pretty(&file).expect("space serialization cannot fail")
}

pub fn from_json(text: &str) -> Result<DiscreteSpace> {
    let file: SpaceFile =
        serde_json::from_str(text).map_err(|e| MmError::Parse(e.to_string()))?;
    let vertices = file
        .vertices
        .into_iter()
        .map(|r| VertexSpec { id: r.id, weight: r.w, coord: r.coord })
        .collect();
    let edges = file
        .edges
        .into_iter()
        .map(|r| EdgeSpec { u: r.u, v: r.v, len: r.len })
        .collect();
    let mut space = DiscreteSpace::new(vertices, edges, file.mesh, Some(file.tau))?;
    space.meta = file.meta;
    Ok(space)
}

pub fn save(space: &DiscreteSpace, path: &Path) -> Result<()> {
    std::fs::write(path, to_json(space))?;
    Ok(())
}

pub fn load(path: &Path) -> Result<DiscreteSpace> {
    let text = std::fs::read_to_string(path)?;
    from_json(&text)
}
