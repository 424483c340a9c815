//! JSON shapes for instances, spaces, groups, walls, and report values.
//!
//! All rationals travel as `"num/den"` strings so nothing is lost to
//! floating point on the way in or out; fitted floats are rendered with
//! twelve significant digits. Parse failures carry the file path and the
//! byte offset of the offending character.

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::path::Path;

use crate::bits::BitSet;
use crate::error::{CwError, Result};
use crate::group::FiniteGroup;
use crate::metric::{DenseMap, FiniteMetricSpace};
use crate::rational::{format_f64, format_q, parse_q, Q};
use crate::walls::{LoadReport, WallsStructure};
use crate::wreath::{WreathInstance, WreathPoint};

fn index_of(labels: &[String], want: &str, what: &str) -> Result<usize> {
    labels
        .iter()
        .position(|l| l == want)
        .ok_or_else(|| CwError::input(format!("unknown {what} label {want:?}")))
}

/// A finite metric space: point labels and a square matrix of rationals.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MetricDto {
    pub points: Vec<String>,
    pub dist: Vec<Vec<String>>,
}

impl MetricDto {
    pub fn from_space(space: &FiniteMetricSpace) -> Self {
        let n = space.n();
        MetricDto {
            points: (0..n).map(|i| space.label(i).to_string()).collect(),
            dist: (0..n)
                .map(|i| (0..n).map(|j| format_q(space.d(i, j))).collect())
                .collect(),
        }
    }

    pub fn to_space(&self) -> Result<FiniteMetricSpace> {
        let dist = self
            .dist
            .iter()
            .map(|row| row.iter().map(|s| parse_q(s)).collect::<Result<Vec<Q>>>())
            .collect::<Result<Vec<_>>>()?;
        FiniteMetricSpace::new(self.points.clone(), dist)
    }
}

/// A finite group, either by a standard recipe or an explicit table.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum GroupDto {
    Cyclic { n: usize },
    Product { factors: Vec<GroupDto> },
    Table { table: Vec<Vec<usize>>, generators: Vec<usize>, labels: Option<Vec<String>> },
}

impl GroupDto {
    pub fn to_group(&self) -> Result<FiniteGroup> {
        match self {
            GroupDto::Cyclic { n } => FiniteGroup::cyclic(*n),
            GroupDto::Product { factors } => {
                let built: Vec<FiniteGroup> =
                    factors.iter().map(|f| f.to_group()).collect::<Result<_>>()?;
                let mut iter = built.into_iter();
                let first = iter
                    .next()
                    .ok_or_else(|| CwError::input("product group needs at least one factor"))?;
                Ok(iter.fold(first, |acc, g| FiniteGroup::direct_product(&acc, &g)))
            }
            GroupDto::Table { table, generators, labels } => {
                FiniteGroup::from_table(table.clone(), generators.clone(), labels.clone())
            }
        }
    }
}

/// One weighted halfspace: the indices of its side, and the weight.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct HalfspaceDto {
    pub side: Vec<usize>,
    pub weight: String,
}

/// A measured walls structure over a labelled ground set.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct WallsDto {
    pub ground: Vec<String>,
    pub halfspaces: Vec<HalfspaceDto>,
}

impl WallsDto {
    pub fn from_walls(walls: &WallsStructure) -> Self {
        WallsDto {
            ground: (0..walls.n()).map(|i| walls.label(i).to_string()).collect(),
            halfspaces: walls
                .halfspaces()
                .iter()
                .map(|(side, w)| HalfspaceDto {
                    side: side.iter().collect(),
                    weight: format_q(w),
                })
                .collect(),
        }
    }

    pub fn to_walls(&self) -> Result<(WallsStructure, LoadReport)> {
        let n = self.ground.len();
        let raw = self
            .halfspaces
            .iter()
            .map(|h| {
                for &i in &h.side {
                    if i >= n {
                        return Err(CwError::input(format!(
                            "halfspace index {i} outside ground set of size {n}"
                        )));
                    }
                }
                Ok((BitSet::from_indices(n, &h.side), parse_q(&h.weight)?))
            })
            .collect::<Result<Vec<_>>>()?;
        WallsStructure::load(self.ground.clone(), raw)
    }
}

/// The position-to-index map `p : Y -> Z` with its covering constant.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MapDto {
    /// For each point of `Y` in order, the label of its image in `Z`.
    pub values: Vec<String>,
    pub c: String,
}

/// A full wreath instance.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct InstanceDto {
    pub x: MetricDto,
    pub basepoint: String,
    pub y: MetricDto,
    pub z: MetricDto,
    pub p: MapDto,
}

impl InstanceDto {
    pub fn from_instance(inst: &WreathInstance) -> Self {
        InstanceDto {
            x: MetricDto::from_space(&inst.x),
            basepoint: inst.x.label(inst.basepoint).to_string(),
            y: MetricDto::from_space(&inst.y),
            z: MetricDto::from_space(&inst.z),
            p: MapDto {
                values: inst
                    .p
                    .values
                    .iter()
                    .map(|&v| inst.z.label(v).to_string())
                    .collect(),
                c: format_q(&inst.p.c),
            },
        }
    }

    pub fn to_instance(&self) -> Result<WreathInstance> {
        let x = self.x.to_space()?;
        let y = self.y.to_space()?;
        let z = self.z.to_space()?;
        let basepoint = index_of(&self.x.points, &self.basepoint, "fibre point")?;
        let values = self
            .p
            .values
            .iter()
            .map(|l| index_of(&self.z.points, l, "index point"))
            .collect::<Result<Vec<_>>>()?;
        let p = DenseMap::new(values, z.n(), parse_q(&self.p.c)?)?;
        WreathInstance::new(x, basepoint, y, z, p)
    }
}

/// One configuration-position point, with the configuration keyed by
/// labels of `Z` mapping to labels of `X` (basepoint entries may be
/// omitted).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PointDto {
    #[serde(default)]
    pub f: BTreeMap<String, String>,
    pub y: String,
}

impl PointDto {
    pub fn to_point(&self, inst: &WreathInstance) -> Result<WreathPoint> {
        let mut f = BTreeMap::new();
        for (zl, xl) in &self.f {
            let zi = index_of(inst.z.labels(), zl, "index point")?;
            let xi = index_of(inst.x.labels(), xl, "fibre point")?;
            f.insert(zi, xi);
        }
        let y = index_of(inst.y.labels(), &self.y, "position")?;
        WreathPoint::new(inst, f, y)
    }
}

/// A pair of points for distance queries.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PairDto {
    pub a: PointDto,
    pub b: PointDto,
}

/// A report number carrying its provenance: exact arithmetic or a fit.
#[derive(Debug, Clone, Serialize)]
pub struct Tagged {
    pub value: String,
    pub kind: &'static str,
}

pub fn computed(q: &Q) -> Tagged {
    Tagged { value: format_q(q), kind: "computed" }
}

pub fn fitted(x: f64) -> Tagged {
    Tagged { value: format_f64(x), kind: "fitted" }
}

fn byte_offset(text: &str, line: usize, column: usize) -> usize {
    // serde_json reports 1-based line and column.
    let mut offset = 0usize;
    for (ln, chunk) in text.split_inclusive('\n').enumerate() {
        if ln + 1 == line {
            return offset + column.saturating_sub(1);
        }
        offset += chunk.len();
    }
    offset
}

/// Reads and parses a JSON file, reporting parse errors with the path,
/// position, and byte offset.
pub fn read_json_file<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CwError::input(format!("cannot read {}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| {
        let off = byte_offset(&text, e.line(), e.column());
        CwError::input(format!(
            "{}: {} (line {}, column {}, byte {})",
            path.display(),
            e,
            e.line(),
            e.column(),
            off
        ))
    })
}

/// Serializes a report as stable, human-diffable JSON.
pub fn to_json_pretty<T: Serialize>(value: &T) -> Result<String> {
    serde_json::to_string_pretty(value)
        .map_err(|e| CwError::internal(format!("serialization failed: {e}")))
}
