//! File formats: domain JSON, field CSV and OFF meshes with an edge-tag
//! sidecar.
//!
//! The OFF file carries geometry only (`z = 0`); boundary edges, their
//! face indices and the polygon vertices live in `<stem>.tags`:
//!
//! ```text
//! corners 0 12 31 40
//! edge 0 1 3
//! edge 1 2 3
//! ```
//!
//! one `edge a b face` line per boundary edge.

use std::fs;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fem::{Field, FieldKind};
use crate::mesh2d::{BoundaryEdge, Mesh};
use crate::polytope::{DomainFile, Polytope};
use crate::scalar::Real;

pub fn read_domain<T: Real>(path: &Path) -> Result<Polytope<T>> {
    let text = fs::read_to_string(path)?;
    parse_domain(&text)
}

pub fn parse_domain<T: Real>(text: &str) -> Result<Polytope<T>> {
    let file: DomainFile<T> = serde_json::from_str(text)?;
    Polytope::try_from(file)
}

/// Pretty JSON of the normalised, irredundant description.
pub fn domain_json<T: Real>(p: &Polytope<T>) -> Result<String> {
    Ok(serde_json::to_string_pretty(&DomainFile::from(p.clone()))?)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FieldRow<T> {
    pub node_index: usize,
    pub x: T,
    pub y: T,
    pub value: T,
}

pub fn write_field_csv<T: Real, W: Write>(field: &Field<T>, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for (i, (p, &value)) in field.mesh().nodes().iter().zip(field.values()).enumerate() {
        w.serialize(FieldRow {
            node_index: i,
            x: p[0],
            y: p[1],
            value,
        })
        .map_err(csv_error)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_field_rows<T: Real, R: Read>(input: R) -> Result<Vec<FieldRow<T>>> {
    csv::Reader::from_reader(input)
        .deserialize()
        .map(|r| r.map_err(csv_error))
        .collect()
}

/// Attaches CSV rows to `mesh`. Every node must appear exactly once, at
/// its own coordinates (relative tolerance `1e-9`).
pub fn field_from_rows<T: Real>(mesh: Arc<Mesh<T>>, rows: &[FieldRow<T>]) -> Result<Field<T>> {
    let n = mesh.nodes().len();
    if rows.len() != n {
        return Err(Error::DimensionMismatch { left: rows.len(), right: n });
    }
    let tol = T::lit(1e-9) * (T::one() + mesh.h());
    let mut values = vec![T::nan(); n];
    for r in rows {
        let Some(p) = mesh.nodes().get(r.node_index) else {
            return Err(Error::Parse(format!("node_index {} out of range", r.node_index)));
        };
        if (p[0] - r.x).abs() > tol || (p[1] - r.y).abs() > tol {
            return Err(Error::Parse(format!("node {} does not match the mesh coordinates", r.node_index)));
        }
        if !values[r.node_index].is_nan() {
            return Err(Error::Parse(format!("node {} listed twice", r.node_index)));
        }
        if !r.value.is_finite() {
            return Err(Error::Parse(format!("node {} has a non-finite value", r.node_index)));
        }
        values[r.node_index] = r.value;
    }
    Field::new(mesh, values, FieldKind::Imported)
}

fn csv_error(e: csv::Error) -> Error {
    Error::Parse(e.to_string())
}

/// Sidecar path for an OFF file: same stem, extension `tags`.
pub fn tags_path(off: &Path) -> PathBuf {
    off.with_extension("tags")
}

pub fn write_off<T: Real, W: Write>(mesh: &Mesh<T>, mut out: W) -> Result<()> {
    writeln!(out, "OFF")?;
    writeln!(out, "{} {} 0", mesh.nodes().len(), mesh.triangles().len())?;
    for p in mesh.nodes() {
        writeln!(out, "{} {} 0", p[0], p[1])?;
    }
    for t in mesh.triangles() {
        writeln!(out, "3 {} {} {}", t[0], t[1], t[2])?;
    }
    Ok(())
}

pub fn write_tags<T: Real, W: Write>(mesh: &Mesh<T>, mut out: W) -> Result<()> {
    let corners: Vec<String> = mesh.corners().iter().map(ToString::to_string).collect();
    writeln!(out, "corners {}", corners.join(" "))?;
    for e in mesh.boundary_edges() {
        writeln!(out, "edge {} {} {}", e.nodes[0], e.nodes[1], e.face)?;
    }
    Ok(())
}

/// Writes `path` and its `.tags` sidecar.
pub fn export_mesh<T: Real>(mesh: &Mesh<T>, path: &Path) -> Result<()> {
    write_off(mesh, fs::File::create(path)?)?;
    write_tags(mesh, fs::File::create(tags_path(path))?)
}

/// Reads `path` and its `.tags` sidecar.
pub fn import_mesh<T: Real>(path: &Path) -> Result<Mesh<T>> {
    let off = BufReader::new(fs::File::open(path)?);
    let tags = BufReader::new(fs::File::open(tags_path(path))?);
    read_mesh(off, tags)
}

fn tokens<R: BufRead>(input: R) -> Result<Vec<Vec<String>>> {
    let mut lines = Vec::new();
    for line in input.lines() {
        let line = line?;
        let body = line.split('#').next().unwrap_or("").trim();
        if !body.is_empty() {
            lines.push(body.split_whitespace().map(str::to_string).collect());
        }
    }
    Ok(lines)
}

fn num<V: std::str::FromStr>(s: &str, what: &str) -> Result<V> {
    s.parse().map_err(|_| Error::Parse(format!("bad {what} `{s}`")))
}

pub fn read_mesh<T: Real, R1: BufRead, R2: BufRead>(off: R1, tags: R2) -> Result<Mesh<T>> {
    let lines = tokens(off)?;
    let mut it = lines.iter();
    match it.next() {
        Some(h) if h.len() == 1 && h[0] == "OFF" => {}
        _ => return Err(Error::Parse("missing OFF header".into())),
    }
    let counts = it.next().ok_or_else(|| Error::Parse("missing OFF counts".into()))?;
    if counts.len() < 2 {
        return Err(Error::Parse("OFF counts line needs vertex and face counts".into()));
    }
    let (nv, nf): (usize, usize) = (num(&counts[0], "vertex count")?, num(&counts[1], "face count")?);
    let mut nodes = Vec::with_capacity(nv);
    for _ in 0..nv {
        let l = it.next().ok_or_else(|| Error::Parse("truncated vertex list".into()))?;
        if l.len() < 2 {
            return Err(Error::Parse("vertex line needs coordinates".into()));
        }
        let (x, y): (f64, f64) = (num(&l[0], "coordinate")?, num(&l[1], "coordinate")?);
        nodes.push([T::lit(x), T::lit(y)]);
    }
    let mut triangles = Vec::with_capacity(nf);
    for _ in 0..nf {
        let l = it.next().ok_or_else(|| Error::Parse("truncated face list".into()))?;
        if l.len() != 4 || l[0] != "3" {
            return Err(Error::Parse("only triangular faces are supported".into()));
        }
        triangles.push([num(&l[1], "node index")?, num(&l[2], "node index")?, num(&l[3], "node index")?]);
    }
    let mut corners = None;
    let mut edges = Vec::new();
    for l in tokens(tags)? {
        match l[0].as_str() {
            "corners" => {
                corners = Some(l[1..].iter().map(|s| num(s, "corner index")).collect::<Result<Vec<usize>>>()?);
            }
            "edge" if l.len() == 4 => edges.push(BoundaryEdge {
                nodes: [num(&l[1], "node index")?, num(&l[2], "node index")?],
                face: num(&l[3], "face index")?,
            }),
            _ => return Err(Error::Parse(format!("unrecognised tag line `{}`", l.join(" ")))),
        }
    }
    let corners = corners.ok_or_else(|| Error::Parse("tag file has no corners line".into()))?;
    Mesh::from_parts(nodes, triangles, edges, corners)
}
