//! Hit graphs: selection cuts, doublet building between adjacent barrel
//! layers, φ×z slicing, truth labels, feature scaling and the graph file
//! format.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::trackdata::{EventRecord, Hit, BARREL_LAYERS};

/// Radial scaling range, mm.
pub const R_BOUNDS: (f64, f64) = (0.0, 1100.0);
/// Longitudinal scaling range, mm.
pub const Z_BOUNDS: (f64, f64) = (-1100.0, 1100.0);

const GRAPH_MAGIC: &str = "qgnn-graph";
const GRAPH_VERSION: u32 = 1;
const SCALE_SLACK: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SelectionCuts {
    /// GeV
    pub pt_min: f64,
    /// Upper bound on `|Δφ / Δr|`, 1/mm.
    pub dphi_slope_max: f64,
    /// mm
    pub z0_max: f64,
    pub eta_range: (f64, f64),
    pub barrel_volumes: Vec<u32>,
}

impl Default for SelectionCuts {
    fn default() -> Self {
        Self {
            pt_min: 1.0,
            dphi_slope_max: 0.0006,
            z0_max: 100.0,
            eta_range: (-5.0, 5.0),
            barrel_volumes: vec![8, 13, 17],
        }
    }
}

impl SelectionCuts {
    pub fn validate(&self) -> Result<()> {
        if !(self.pt_min > 0.0 && self.z0_max > 0.0 && self.dphi_slope_max > 0.0) {
            return Err(Error::Range(
                "pt_min, z0_max and dphi_slope_max must be positive".into(),
            ));
        }
        // negated so that NaN bounds are rejected
        #[allow(clippy::neg_cmp_op_on_partial_ord)]
        if !(self.eta_range.0 < self.eta_range.1) {
            return Err(Error::Range("eta_range must be non-empty".into()));
        }
        Ok(())
    }
}

/// Ordinal of a barrel layer counted outwards from the beam line, if the
/// `(volume, layer)` pair is a barrel layer.
pub fn layer_index(volume_id: u32, layer_id: u32) -> Option<usize> {
    if let Some(k) = BARREL_LAYERS.iter().position(|&l| l == (volume_id, layer_id)) {
        return Some(k);
    }
    // outer volume continued past the standard table
    let (last_vol, last_layer) = BARREL_LAYERS[BARREL_LAYERS.len() - 1];
    if volume_id == last_vol && layer_id > last_layer && layer_id.is_multiple_of(2) {
        return Some(BARREL_LAYERS.len() - 1 + ((layer_id - last_layer) / 2) as usize);
    }
    None
}

fn eta_of(hit: &Hit) -> Option<f64> {
    hit.derived_coords().ok().map(|(_, _, eta)| eta)
}

/// Keep barrel hits of particles above `pt_min` inside the η window; where a
/// particle leaves several hits on one layer only the lowest-`|z|` one stays.
pub fn select_hits(event: &EventRecord, cuts: &SelectionCuts) -> EventRecord {
    let passes = |h: &Hit| {
        cuts.barrel_volumes.contains(&h.volume_id)
            && layer_index(h.volume_id, h.layer_id).is_some()
            && h.particle_id != 0
            && h.pt >= cuts.pt_min
            && eta_of(h).is_some_and(|eta| eta >= cuts.eta_range.0 && eta <= cuts.eta_range.1)
    };
    let mut best: HashMap<(u64, usize), usize> = HashMap::new();
    for (i, h) in event.hits.iter().enumerate() {
        if !passes(h) {
            continue;
        }
        let key = (h.particle_id, layer_index(h.volume_id, h.layer_id).unwrap());
        best.entry(key)
            .and_modify(|j| {
                let o = &event.hits[*j];
                if (h.z.abs(), h.hit_id) < (o.z.abs(), o.hit_id) {
                    *j = i;
                }
            })
            .or_insert(i);
    }
    let mut keep: Vec<usize> = best.into_values().collect();
    keep.sort_unstable();
    EventRecord {
        event_id: event.event_id,
        hits: keep.into_iter().map(|i| event.hits[i].clone()).collect(),
        particles: event.particles.clone(),
    }
}

/// A candidate edge between hits on adjacent layers.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Doublet {
    /// Index of the inner-layer hit.
    pub inner: usize,
    /// Index of the outer-layer hit.
    pub outer: usize,
    pub dphi: f64,
    pub dr: f64,
    pub z0: f64,
}

/// Wrap an angle difference into `(-π, π]`.
pub fn wrap_angle(mut a: f64) -> f64 {
    while a <= -PI {
        a += 2.0 * PI;
    }
    while a > PI {
        a -= 2.0 * PI;
    }
    a
}

/// Geometry of the pair `(inner, outer)`: `(Δφ, Δr, z0)`.
pub fn doublet_geometry(inner: &Hit, outer: &Hit) -> (f64, f64, f64) {
    let (r1, r2) = (inner.r(), outer.r());
    let dr = r2 - r1;
    let dphi = wrap_angle(outer.phi() - inner.phi());
    let z0 = inner.z - r1 * (outer.z - inner.z) / dr;
    (dphi, dr, z0)
}

/// Pair every hit on layer `k` with every hit on layer `k+1` and keep pairs
/// passing the `|Δφ/Δr|` and `|z0|` cuts. Indices refer to `hits`.
pub fn build_doublets(hits: &[Hit], cuts: &SelectionCuts) -> Result<Vec<Doublet>> {
    let mut by_layer: Vec<Vec<usize>> = Vec::new();
    for (i, h) in hits.iter().enumerate() {
        let Some(k) = layer_index(h.volume_id, h.layer_id) else {
            continue;
        };
        if by_layer.len() <= k {
            by_layer.resize(k + 1, Vec::new());
        }
        by_layer[k].push(i);
    }
    let mut doublets = Vec::new();
    for k in 0..by_layer.len().saturating_sub(1) {
        for &i in &by_layer[k] {
            for &j in &by_layer[k + 1] {
                let (dphi, dr, z0) = doublet_geometry(&hits[i], &hits[j]);
                if dr <= 0.0 {
                    return Err(Error::Geometry(format!(
                        "hit {} on layer {} is not outside hit {} (Δr = {dr})",
                        hits[j].hit_id,
                        k + 1,
                        hits[i].hit_id
                    )));
                }
                if (dphi / dr).abs() < cuts.dphi_slope_max && z0.abs() < cuts.z0_max {
                    doublets.push(Doublet {
                        inner: i,
                        outer: j,
                        dphi,
                        dr,
                        z0,
                    });
                }
            }
        }
    }
    Ok(doublets)
}

/// 1 where both ends belong to the same non-noise particle.
pub fn label_edges(edges: &[(usize, usize)], hits: &[Hit]) -> Vec<u8> {
    edges
        .iter()
        .map(|&(a, b)| {
            let (pa, pb) = (hits[a].particle_id, hits[b].particle_id);
            u8::from(pa != 0 && pa == pb)
        })
        .collect()
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SectorAxis {
    #[default]
    Phi,
    Eta,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SliceSpec {
    /// Number of sectors along `axis`.
    pub n_phi: usize,
    /// Number of uniform z bins over [`Z_BOUNDS`]; 2 splits at z = 0.
    pub n_z: usize,
    pub axis: SectorAxis,
    /// Sector range when slicing in η.
    pub eta_bounds: (f64, f64),
}

impl Default for SliceSpec {
    fn default() -> Self {
        Self {
            n_phi: 8,
            n_z: 2,
            axis: SectorAxis::Phi,
            eta_bounds: (-5.0, 5.0),
        }
    }
}

fn bin_of(value: f64, lo: f64, hi: f64, n: usize) -> usize {
    let width = (hi - lo) / n as f64;
    let b = ((value - lo) / width).floor();
    if b < 0.0 {
        0
    } else {
        (b as usize).min(n - 1)
    }
}

impl SliceSpec {
    pub fn validate(&self) -> Result<()> {
        if self.n_phi == 0 || self.n_z == 0 {
            return Err(Error::Range("slice counts must be at least 1".into()));
        }
        Ok(())
    }

    pub fn n_slices(&self) -> usize {
        self.n_phi * self.n_z
    }

    /// Sector index of a φ value in `[-π, π)` split uniformly.
    pub fn phi_sector(&self, phi: f64) -> usize {
        bin_of(phi, -PI, PI, self.n_phi)
    }

    fn sector_of(&self, hit: &Hit) -> usize {
        match self.axis {
            SectorAxis::Phi => self.phi_sector(hit.phi()),
            SectorAxis::Eta => {
                let eta = eta_of(hit).unwrap_or(0.0);
                bin_of(eta, self.eta_bounds.0, self.eta_bounds.1, self.n_phi)
            }
        }
    }

    fn z_bin(&self, z: f64) -> usize {
        bin_of(z, Z_BOUNDS.0, Z_BOUNDS.1, self.n_z)
    }

    /// φ range covered by sector `index`.
    pub fn phi_bounds(&self, index: usize) -> (f64, f64) {
        match self.axis {
            SectorAxis::Phi => {
                let w = 2.0 * PI / self.n_phi as f64;
                (-PI + w * index as f64, -PI + w * (index + 1) as f64)
            }
            SectorAxis::Eta => (-PI, PI),
        }
    }
}

/// Min/max ranges used to map `(r, φ, z)` onto `[0, 1]`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScaleBounds {
    pub r: (f64, f64),
    pub phi: (f64, f64),
    pub z: (f64, f64),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GraphMeta {
    pub event_id: u64,
    pub phi_index: usize,
    pub z_index: usize,
    pub bounds: ScaleBounds,
    pub scaled: bool,
}

/// Nodes, directed inner→outer edges and their truth labels for one slice.
#[derive(Clone, Debug, PartialEq)]
pub struct SubGraph {
    /// `(r, φ, z)` per node, raw or scaled according to `meta.scaled`.
    pub node_features: Vec<[f64; 3]>,
    pub hit_ids: Vec<u64>,
    pub layers: Vec<usize>,
    pub edges: Vec<(usize, usize)>,
    pub labels: Vec<u8>,
    pub meta: GraphMeta,
}

impl SubGraph {
    pub fn n_nodes(&self) -> usize {
        self.node_features.len()
    }

    pub fn n_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn n_true(&self) -> usize {
        self.labels.iter().filter(|&&l| l == 1).count()
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.n_nodes();
        if self.hit_ids.len() != n || self.layers.len() != n {
            return Err(Error::Arity("per-node arrays differ in length".into()));
        }
        if self.labels.len() != self.edges.len() {
            return Err(Error::Arity(format!(
                "{} labels for {} edges",
                self.labels.len(),
                self.edges.len()
            )));
        }
        for (e, &(a, b)) in self.edges.iter().enumerate() {
            if a >= n || b >= n {
                return Err(Error::Index(format!("edge {e} ({a},{b}) references missing node")));
            }
        }
        if self.labels.iter().any(|&l| l > 1) {
            return Err(Error::Range("labels must be 0 or 1".into()));
        }
        Ok(())
    }
}

/// Partition selected hits into `n_phi × n_z` slices and build labelled
/// doublets inside each. Pairs spanning two slices are dropped. Output order
/// is sector-major, then z bin.
pub fn slice_event(event: &EventRecord, cuts: &SelectionCuts, spec: &SliceSpec) -> Result<Vec<SubGraph>> {
    spec.validate()?;
    let mut buckets: Vec<Vec<&Hit>> = vec![Vec::new(); spec.n_slices()];
    for h in &event.hits {
        let s = spec.sector_of(h) * spec.n_z + spec.z_bin(h.z);
        buckets[s].push(h);
    }
    let mut graphs = Vec::with_capacity(spec.n_slices());
    for (s, bucket) in buckets.into_iter().enumerate() {
        let mut hits: Vec<Hit> = bucket.into_iter().cloned().collect();
        hits.sort_by_key(|h| (layer_index(h.volume_id, h.layer_id), h.hit_id));
        let doublets = build_doublets(&hits, cuts)?;
        let edges: Vec<(usize, usize)> = doublets.iter().map(|d| (d.inner, d.outer)).collect();
        let labels = label_edges(&edges, &hits);
        let phi_index = s / spec.n_z;
        graphs.push(SubGraph {
            node_features: hits.iter().map(|h| [h.r(), h.phi(), h.z]).collect(),
            hit_ids: hits.iter().map(|h| h.hit_id).collect(),
            layers: hits
                .iter()
                .map(|h| layer_index(h.volume_id, h.layer_id).unwrap_or(usize::MAX))
                .collect(),
            edges,
            labels,
            meta: GraphMeta {
                event_id: event.event_id,
                phi_index,
                z_index: s % spec.n_z,
                bounds: ScaleBounds {
                    r: R_BOUNDS,
                    phi: spec.phi_bounds(phi_index),
                    z: Z_BOUNDS,
                },
                scaled: false,
            },
        });
    }
    Ok(graphs)
}

fn scale_one(value: f64, (lo, hi): (f64, f64), what: &str) -> Result<f64> {
    let x = (value - lo) / (hi - lo);
    if !(-SCALE_SLACK..=1.0 + SCALE_SLACK).contains(&x) {
        return Err(Error::Range(format!("{what} = {value} outside [{lo}, {hi}]")));
    }
    Ok(x.clamp(0.0, 1.0))
}

/// Min-max scale node features into `[0, 1]`; a no-op on scaled graphs.
pub fn scale_features(graph: &SubGraph) -> Result<SubGraph> {
    if graph.meta.scaled {
        return Ok(graph.clone());
    }
    let b = graph.meta.bounds;
    let node_features = graph
        .node_features
        .iter()
        .map(|&[r, phi, z]| {
            Ok([
                scale_one(r, b.r, "r")?,
                scale_one(phi, b.phi, "phi")?,
                scale_one(z, b.z, "z")?,
            ])
        })
        .collect::<Result<Vec<_>>>()?;
    let mut out = graph.clone();
    out.node_features = node_features;
    out.meta.scaled = true;
    Ok(out)
}

/// Selection, slicing and scaling for one event.
pub fn build_subgraphs(event: &EventRecord, cuts: &SelectionCuts, spec: &SliceSpec) -> Result<Vec<SubGraph>> {
    cuts.validate()?;
    let selected = select_hits(event, cuts);
    slice_event(&selected, cuts, spec)?.iter().map(scale_features).collect()
}

/// Serialise to the line-oriented text format:
///
/// ```text
/// qgnn-graph 1
/// event <id> slice <phi_index> <z_index> scaled <0|1>
/// bounds <r_lo> <r_hi> <phi_lo> <phi_hi> <z_lo> <z_hi>
/// nodes <N>
/// <hit_id> <layer> <f0> <f1> <f2>      (N lines)
/// edges <E>
/// <inner> <outer> <label>              (E lines)
/// ```
///
/// Floats use the shortest representation that parses back exactly.
pub fn graph_to_text(g: &SubGraph) -> String {
    let mut s = String::new();
    let m = &g.meta;
    let b = m.bounds;
    let _ = writeln!(s, "{GRAPH_MAGIC} {GRAPH_VERSION}");
    let _ = writeln!(
        s,
        "event {} slice {} {} scaled {}",
        m.event_id,
        m.phi_index,
        m.z_index,
        u8::from(m.scaled)
    );
    let _ = writeln!(
        s,
        "bounds {} {} {} {} {} {}",
        b.r.0, b.r.1, b.phi.0, b.phi.1, b.z.0, b.z.1
    );
    let _ = writeln!(s, "nodes {}", g.n_nodes());
    for i in 0..g.n_nodes() {
        let [a, p, z] = g.node_features[i];
        let _ = writeln!(s, "{} {} {a} {p} {z}", g.hit_ids[i], g.layers[i]);
    }
    let _ = writeln!(s, "edges {}", g.n_edges());
    for (&(i, j), l) in g.edges.iter().zip(&g.labels) {
        let _ = writeln!(s, "{i} {j} {l}");
    }
    s
}

struct Lines<'a> {
    inner: std::iter::Enumerate<std::str::Lines<'a>>,
    last: usize,
}

impl<'a> Lines<'a> {
    fn next_fields(&mut self, what: &str) -> Result<(usize, Vec<&'a str>)> {
        match self.inner.next() {
            Some((i, line)) => {
                self.last = i + 1;
                Ok((i + 1, line.split_ascii_whitespace().collect()))
            }
            None => Err(Error::Parse {
                line: self.last + 1,
                msg: format!("unexpected end of file, expected {what}"),
            }),
        }
    }

    fn keyed(&mut self, key: &str, n_values: usize) -> Result<(usize, Vec<&'a str>)> {
        let (line, fields) = self.next_fields(key)?;
        if fields.first() != Some(&key) || fields.len() != n_values + 1 {
            return Err(Error::Parse {
                line,
                msg: format!("expected `{key}` with {n_values} values"),
            });
        }
        Ok((line, fields[1..].to_vec()))
    }
}

fn parse_field<T: std::str::FromStr>(line: usize, field: &str) -> Result<T> {
    field.parse().map_err(|_| Error::Parse {
        line,
        msg: format!("cannot parse `{field}`"),
    })
}

pub fn graph_from_text(text: &str) -> Result<SubGraph> {
    let mut lines = Lines {
        inner: text.lines().enumerate(),
        last: 0,
    };
    let (line, header) = lines.next_fields("header")?;
    if header.len() != 2 || header[0] != GRAPH_MAGIC {
        return Err(Error::Parse {
            line,
            msg: format!("missing `{GRAPH_MAGIC}` header"),
        });
    }
    let version: u32 = parse_field(line, header[1])?;
    if version != GRAPH_VERSION {
        return Err(Error::Parse {
            line,
            msg: format!("unsupported graph version {version}"),
        });
    }
    let (line, f) = lines.next_fields("event line")?;
    if f.len() != 7 || f[0] != "event" || f[2] != "slice" || f[5] != "scaled" {
        return Err(Error::Parse {
            line,
            msg: "malformed event line".into(),
        });
    }
    let event_id = parse_field(line, f[1])?;
    let phi_index = parse_field(line, f[3])?;
    let z_index = parse_field(line, f[4])?;
    let scaled = parse_field::<u8>(line, f[6])? == 1;
    let (line, f) = lines.keyed("bounds", 6)?;
    let v: Vec<f64> = f.iter().map(|x| parse_field(line, x)).collect::<Result<_>>()?;
    let bounds = ScaleBounds {
        r: (v[0], v[1]),
        phi: (v[2], v[3]),
        z: (v[4], v[5]),
    };
    let (line, f) = lines.keyed("nodes", 1)?;
    let n_nodes: usize = parse_field(line, f[0])?;
    let mut g = SubGraph {
        node_features: Vec::with_capacity(n_nodes),
        hit_ids: Vec::with_capacity(n_nodes),
        layers: Vec::with_capacity(n_nodes),
        edges: Vec::new(),
        labels: Vec::new(),
        meta: GraphMeta {
            event_id,
            phi_index,
            z_index,
            bounds,
            scaled,
        },
    };
    for _ in 0..n_nodes {
        let (line, f) = lines.next_fields("node line")?;
        if f.len() != 5 {
            return Err(Error::Parse {
                line,
                msg: "node line needs 5 fields".into(),
            });
        }
        g.hit_ids.push(parse_field(line, f[0])?);
        g.layers.push(parse_field(line, f[1])?);
        g.node_features.push([
            parse_field(line, f[2])?,
            parse_field(line, f[3])?,
            parse_field(line, f[4])?,
        ]);
    }
    let (line, f) = lines.keyed("edges", 1)?;
    let n_edges: usize = parse_field(line, f[0])?;
    for _ in 0..n_edges {
        let (line, f) = lines.next_fields("edge line")?;
        if f.len() != 3 {
            return Err(Error::Parse {
                line,
                msg: "edge line needs 3 fields".into(),
            });
        }
        let (a, b): (usize, usize) = (parse_field(line, f[0])?, parse_field(line, f[1])?);
        if a >= n_nodes || b >= n_nodes {
            return Err(Error::Parse {
                line,
                msg: format!("edge ({a},{b}) references missing node"),
            });
        }
        g.edges.push((a, b));
        g.labels.push(parse_field(line, f[2])?);
    }
    if let Some((i, _)) = lines.inner.find(|(_, l)| !l.trim().is_empty()) {
        return Err(Error::Parse {
            line: i + 1,
            msg: "trailing content".into(),
        });
    }
    g.validate().map_err(|e| Error::Parse {
        line: lines.last,
        msg: e.to_string(),
    })?;
    Ok(g)
}

pub fn write_graph(graph: &SubGraph, path: &Path) -> Result<()> {
    fs::write(path, graph_to_text(graph)).map_err(|e| Error::io(path, e))
}

pub fn read_graph(path: &Path) -> Result<SubGraph> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    graph_from_text(&text)
}

/// True and fake edge counts per inner layer index.
pub fn edge_distribution(graphs: &[SubGraph]) -> Vec<(usize, usize, usize)> {
    let mut counts: Vec<(usize, usize)> = Vec::new();
    for g in graphs {
        for (&(a, _), &l) in g.edges.iter().zip(&g.labels) {
            let k = g.layers[a];
            if counts.len() <= k {
                counts.resize(k + 1, (0, 0));
            }
            if l == 1 {
                counts[k].0 += 1;
            } else {
                counts[k].1 += 1;
            }
        }
    }
    counts.into_iter().enumerate().map(|(k, (t, f))| (k, t, f)).collect()
}
