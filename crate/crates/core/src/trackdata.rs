//! TrackML-format event ingest and a helix toy generator writing the same
//! schema.
//!
//! An event on disk is three CSV files sharing a prefix, e.g.
//! `event000000001-hits.csv`, `event000000001-truth.csv` and
//! `event000000001-particles.csv`.

use std::collections::{HashMap, HashSet};
use std::f64::consts::PI;
use std::fs;
use std::path::{Path, PathBuf};

use rand::RngExt;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng;

pub const HITS_HEADER: [&str; 7] = ["hit_id", "x", "y", "z", "volume_id", "layer_id", "module_id"];
pub const TRUTH_HEADER: [&str; 9] = ["hit_id", "particle_id", "tx", "ty", "tz", "tpx", "tpy", "tpz", "weight"];
pub const PARTICLES_HEADER: [&str; 9] = ["particle_id", "vx", "vy", "vz", "px", "py", "pz", "q", "nhits"];

/// Barrel `(volume_id, layer_id)` pairs ordered from the beam line outwards.
pub const BARREL_LAYERS: [(u32, u32); 10] = [
    (8, 2),
    (8, 4),
    (8, 6),
    (8, 8),
    (13, 2),
    (13, 4),
    (13, 6),
    (13, 8),
    (17, 2),
    (17, 4),
];

pub const DEFAULT_LAYER_RADII: [f64; 10] = [32.0, 72.0, 116.0, 172.0, 260.0, 360.0, 500.0, 660.0, 820.0, 1020.0];

/// Label for the `index`-th barrel cylinder counted from the beam line.
/// Radii past the standard table continue numbering in the outermost volume.
pub fn barrel_layer_label(index: usize) -> (u32, u32) {
    BARREL_LAYERS.get(index).copied().unwrap_or_else(|| {
        let extra = (index + 1 - BARREL_LAYERS.len()) as u32;
        (17, 4 + 2 * extra)
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Hit {
    pub hit_id: u64,
    /// mm
    pub x: f64,
    pub y: f64,
    pub z: f64,
    pub volume_id: u32,
    pub layer_id: u32,
    pub module_id: u32,
    /// 0 marks noise.
    pub particle_id: u64,
    /// Truth momentum at the hit, GeV.
    pub momentum: [f64; 3],
    /// Transverse momentum of the truth particle, GeV (0 for noise).
    pub pt: f64,
}

impl Hit {
    pub fn r(&self) -> f64 {
        self.x.hypot(self.y)
    }

    /// Azimuth in `(-π, π]`.
    pub fn phi(&self) -> f64 {
        let phi = self.y.atan2(self.x);
        if phi <= -PI {
            PI
        } else {
            phi
        }
    }

    /// `(r, φ, η)` with `η = -ln tan(ϑ/2)`.
    pub fn derived_coords(&self) -> Result<(f64, f64, f64)> {
        let r = self.r();
        if r == 0.0 {
            return Err(Error::Singularity(format!(
                "hit {} lies on the beam axis, η undefined",
                self.hit_id
            )));
        }
        // -ln tan(ϑ/2) with ϑ = atan2(r, z) reduces to asinh(z/r)
        Ok((r, self.phi(), (self.z / r).asinh()))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Particle {
    pub particle_id: u64,
    pub vertex: [f64; 3],
    pub momentum: [f64; 3],
    pub charge: i32,
    pub nhits: u32,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct EventRecord {
    pub event_id: u64,
    pub hits: Vec<Hit>,
    pub particles: Vec<Particle>,
}

#[derive(Deserialize)]
struct HitRow {
    hit_id: u64,
    x: f64,
    y: f64,
    z: f64,
    volume_id: u32,
    layer_id: u32,
    module_id: u32,
}

#[derive(Deserialize)]
struct TruthRow {
    hit_id: u64,
    particle_id: u64,
    tpx: f64,
    tpy: f64,
    tpz: f64,
}

#[derive(Deserialize)]
struct ParticleRow {
    particle_id: u64,
    vx: f64,
    vy: f64,
    vz: f64,
    px: f64,
    py: f64,
    pz: f64,
    q: i32,
    nhits: u32,
}

fn read_rows<T: serde::de::DeserializeOwned>(path: &Path, required: &[&str]) -> Result<Vec<T>> {
    let csv_err = |source| Error::Csv {
        path: path.to_owned(),
        source,
    };
    let mut reader = csv::Reader::from_path(path).map_err(csv_err)?;
    let headers = reader.headers().map_err(csv_err)?.clone();
    for col in required {
        if !headers.iter().any(|h| h == *col) {
            return Err(Error::Schema {
                path: path.to_owned(),
                msg: format!("missing column `{col}`"),
            });
        }
    }
    reader
        .deserialize()
        .collect::<std::result::Result<Vec<T>, _>>()
        .map_err(csv_err)
}

/// Event number encoded in a TrackML file name such as `event000001000-hits.csv`.
pub fn event_id_from_path(path: &Path) -> Option<u64> {
    let name = path.file_name()?.to_str()?;
    let digits = name.strip_prefix("event")?.split('-').next()?;
    digits.parse().ok()
}

/// Load one event, joining truth (particle id, momentum) onto hits.
///
/// Hits without a truth row are treated as noise.
pub fn load_trackml_event(hits_path: &Path, truth_path: &Path, particles_path: &Path) -> Result<EventRecord> {
    let hit_rows: Vec<HitRow> = read_rows(hits_path, &HITS_HEADER)?;
    let truth_rows: Vec<TruthRow> = read_rows(truth_path, &TRUTH_HEADER)?;
    let particle_rows: Vec<ParticleRow> = read_rows(particles_path, &PARTICLES_HEADER)?;

    let mut index = HashMap::with_capacity(hit_rows.len());
    for (i, h) in hit_rows.iter().enumerate() {
        if index.insert(h.hit_id, i).is_some() {
            return Err(Error::Join(format!("duplicate hit_id {} in hits", h.hit_id)));
        }
    }
    let known_particles: HashSet<u64> = particle_rows.iter().map(|p| p.particle_id).collect();

    let mut hits: Vec<Hit> = hit_rows
        .into_iter()
        .map(|h| Hit {
            hit_id: h.hit_id,
            x: h.x,
            y: h.y,
            z: h.z,
            volume_id: h.volume_id,
            layer_id: h.layer_id,
            module_id: h.module_id,
            particle_id: 0,
            momentum: [0.0; 3],
            pt: 0.0,
        })
        .collect();
    for t in truth_rows {
        let &i = index
            .get(&t.hit_id)
            .ok_or_else(|| Error::Join(format!("truth hit_id {} not present in hits", t.hit_id)))?;
        if t.particle_id != 0 && !known_particles.contains(&t.particle_id) {
            return Err(Error::Join(format!(
                "truth particle_id {} not present in particles",
                t.particle_id
            )));
        }
        let hit = &mut hits[i];
        hit.particle_id = t.particle_id;
        if t.particle_id != 0 {
            hit.momentum = [t.tpx, t.tpy, t.tpz];
            hit.pt = t.tpx.hypot(t.tpy);
        }
    }
    let particles = particle_rows
        .into_iter()
        .map(|p| Particle {
            particle_id: p.particle_id,
            vertex: [p.vx, p.vy, p.vz],
            momentum: [p.px, p.py, p.pz],
            charge: p.q,
            nhits: p.nhits,
        })
        .collect();
    Ok(EventRecord {
        event_id: event_id_from_path(hits_path).unwrap_or(0),
        hits,
        particles,
    })
}

/// The three file paths of event `event_id` inside `dir`.
pub fn event_paths(dir: &Path, event_id: u64) -> [PathBuf; 3] {
    ["hits", "truth", "particles"].map(|kind| dir.join(format!("event{event_id:09}-{kind}.csv")))
}

pub fn load_event(dir: &Path, event_id: u64) -> Result<EventRecord> {
    let [h, t, p] = event_paths(dir, event_id);
    let mut event = load_trackml_event(&h, &t, &p)?;
    event.event_id = event_id;
    Ok(event)
}

/// Event ids of every `event*-hits.csv` in `dir`, ascending.
pub fn list_events(dir: &Path) -> Result<Vec<u64>> {
    let mut ids = Vec::new();
    for entry in fs::read_dir(dir).map_err(|e| Error::io(dir, e))? {
        let path = entry.map_err(|e| Error::io(dir, e))?.path();
        let is_hits = path
            .file_name()
            .and_then(|n| n.to_str())
            .is_some_and(|n| n.ends_with("-hits.csv"));
        if is_hits {
            if let Some(id) = event_id_from_path(&path) {
                ids.push(id);
            }
        }
    }
    ids.sort_unstable();
    Ok(ids)
}

fn write_csv(path: &Path, header: &[&str], rows: impl Iterator<Item = Vec<String>>) -> Result<()> {
    let csv_err = |source| Error::Csv {
        path: path.to_owned(),
        source,
    };
    let mut w = csv::Writer::from_path(path).map_err(csv_err)?;
    w.write_record(header).map_err(csv_err)?;
    for row in rows {
        w.write_record(&row).map_err(csv_err)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Write `event` in the three-file TrackML schema under `dir`.
pub fn write_trackml_event(event: &EventRecord, dir: &Path) -> Result<()> {
    let [hits_path, truth_path, particles_path] = event_paths(dir, event.event_id);
    write_csv(
        &hits_path,
        &HITS_HEADER,
        event.hits.iter().map(|h| {
            vec![
                h.hit_id.to_string(),
                h.x.to_string(),
                h.y.to_string(),
                h.z.to_string(),
                h.volume_id.to_string(),
                h.layer_id.to_string(),
                h.module_id.to_string(),
            ]
        }),
    )?;
    write_csv(
        &truth_path,
        &TRUTH_HEADER,
        event.hits.iter().map(|h| {
            vec![
                h.hit_id.to_string(),
                h.particle_id.to_string(),
                h.x.to_string(),
                h.y.to_string(),
                h.z.to_string(),
                h.momentum[0].to_string(),
                h.momentum[1].to_string(),
                h.momentum[2].to_string(),
                "0".to_string(),
            ]
        }),
    )?;
    write_csv(
        &particles_path,
        &PARTICLES_HEADER,
        event.particles.iter().map(|p| {
            vec![
                p.particle_id.to_string(),
                p.vertex[0].to_string(),
                p.vertex[1].to_string(),
                p.vertex[2].to_string(),
                p.momentum[0].to_string(),
                p.momentum[1].to_string(),
                p.momentum[2].to_string(),
                p.charge.to_string(),
                p.nhits.to_string(),
            ]
        }),
    )
}

/// Settings of the helix toy generator.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ToyConfig {
    pub n_particles: usize,
    /// GeV
    pub pt_range: (f64, f64),
    /// mm, strictly increasing
    pub layer_radii: Vec<f64>,
    /// tesla
    pub field_strength: f64,
    /// vertex z drawn uniformly from `±z0_spread` mm
    pub z0_spread: f64,
    pub eta_range: (f64, f64),
    /// hits beyond `|z|` of this many mm fall outside the barrel
    pub barrel_half_length: f64,
    pub noise_hits_per_layer: usize,
    pub seed: u64,
}

impl Default for ToyConfig {
    fn default() -> Self {
        Self {
            n_particles: 50,
            pt_range: (1.0, 10.0),
            layer_radii: DEFAULT_LAYER_RADII.to_vec(),
            field_strength: 2.0,
            z0_spread: 50.0,
            eta_range: (-1.2, 1.2),
            barrel_half_length: 1100.0,
            noise_hits_per_layer: 0,
            seed: 0,
        }
    }
}

impl ToyConfig {
    pub fn validate(&self) -> Result<()> {
        if !self.layer_radii.windows(2).all(|w| w[0] < w[1]) || self.layer_radii.first().is_some_and(|&r| r <= 0.0) {
            return Err(Error::Range(
                "layer_radii must be positive and strictly increasing".into(),
            ));
        }
        let (lo, hi) = self.pt_range;
        if !(lo > 0.0 && hi >= lo) {
            return Err(Error::Range(format!("pt_range must be positive, got [{lo}, {hi}]")));
        }
        #[allow(clippy::neg_cmp_op_on_partial_ord)]
        if !(self.field_strength > 0.0) {
            return Err(Error::Range("field_strength must be positive".into()));
        }
        if self.eta_range.0 > self.eta_range.1 || self.z0_spread < 0.0 {
            return Err(Error::Range("eta_range and z0_spread must be non-empty".into()));
        }
        Ok(())
    }

    /// Transverse radius of curvature in mm: `pt / (0.3 B)` metres.
    pub fn curvature_radius(&self, pt: f64) -> f64 {
        1000.0 * pt / (0.3 * self.field_strength)
    }
}

const MODULES_PER_LAYER: f64 = 64.0;

fn module_of(phi: f64) -> u32 {
    (((phi + PI) / (2.0 * PI) * MODULES_PER_LAYER).floor() as u32).min(MODULES_PER_LAYER as u32 - 1) + 1
}

fn uniform(gen: &mut rng::Pcg32, lo: f64, hi: f64) -> f64 {
    if hi > lo {
        gen.random_range(lo..hi)
    } else {
        lo
    }
}

/// State of one generated particle at production.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HelixSpec {
    pub pt: f64,
    pub phi0: f64,
    pub eta: f64,
    pub z0: f64,
    pub charge: i32,
}

/// Hits of one helix from `(0, 0, z0)` on each cylinder it reaches.
///
/// A cylinder of radius `r` is crossed at transverse turning angle
/// `α = 2·asin(r / 2R)`; the hit azimuth is `φ0 - q·α/2` and the
/// longitudinal position `z0 + R·α·sinh η`.
pub fn propagate_helix(spec: &HelixSpec, config: &ToyConfig) -> Vec<(usize, [f64; 3], [f64; 3])> {
    let radius = config.curvature_radius(spec.pt);
    let q = spec.charge as f64;
    let mut out = Vec::new();
    for (k, &r) in config.layer_radii.iter().enumerate() {
        let ratio = r / (2.0 * radius);
        if ratio > 1.0 {
            break;
        }
        let half_turn = ratio.asin();
        let arc = 2.0 * radius * half_turn;
        let z = spec.z0 + arc * spec.eta.sinh();
        if z.abs() > config.barrel_half_length {
            break;
        }
        let phi = spec.phi0 - q * half_turn;
        let dir = spec.phi0 - q * 2.0 * half_turn;
        let pos = [r * phi.cos(), r * phi.sin(), z];
        let mom = [spec.pt * dir.cos(), spec.pt * dir.sin(), spec.pt * spec.eta.sinh()];
        out.push((k, pos, mom));
    }
    out
}

/// Generate one toy event; the event id is taken from `event_id`.
pub fn generate_toy_event(config: &ToyConfig, event_id: u64) -> EventRecord {
    let mut event = EventRecord {
        event_id,
        ..Default::default()
    };
    if config.validate().is_err() {
        return event;
    }
    let mut gen = rng::seeded(rng::derive(config.seed, event_id));
    for p in 0..config.n_particles {
        let spec = HelixSpec {
            pt: uniform(&mut gen, config.pt_range.0, config.pt_range.1),
            phi0: PI - uniform(&mut gen, 0.0, 2.0 * PI),
            eta: uniform(&mut gen, config.eta_range.0, config.eta_range.1),
            z0: uniform(&mut gen, -config.z0_spread, config.z0_spread),
            charge: if gen.random::<bool>() { 1 } else { -1 },
        };
        push_particle(&mut event, p as u64 + 1, &spec, config);
    }
    for (k, &r) in config.layer_radii.iter().enumerate() {
        for _ in 0..config.noise_hits_per_layer {
            let phi = PI - uniform(&mut gen, 0.0, 2.0 * PI);
            let z = uniform(&mut gen, -config.barrel_half_length, config.barrel_half_length);
            push_hit(&mut event, k, [r * phi.cos(), r * phi.sin(), z], [0.0; 3], 0, 0.0);
        }
    }
    event
}

/// Append the hits of one helix and its particle row.
pub fn push_particle(event: &mut EventRecord, particle_id: u64, spec: &HelixSpec, config: &ToyConfig) {
    let hits = propagate_helix(spec, config);
    for &(k, pos, mom) in &hits {
        push_hit(event, k, pos, mom, particle_id, spec.pt);
    }
    event.particles.push(Particle {
        particle_id,
        vertex: [0.0, 0.0, spec.z0],
        momentum: [
            spec.pt * spec.phi0.cos(),
            spec.pt * spec.phi0.sin(),
            spec.pt * spec.eta.sinh(),
        ],
        charge: spec.charge,
        nhits: hits.len() as u32,
    });
}

fn push_hit(event: &mut EventRecord, layer: usize, pos: [f64; 3], mom: [f64; 3], particle_id: u64, pt: f64) {
    let (volume_id, layer_id) = barrel_layer_label(layer);
    let hit_id = event.hits.len() as u64 + 1;
    let module_id = module_of(pos[1].atan2(pos[0]));
    event.hits.push(Hit {
        hit_id,
        x: pos[0],
        y: pos[1],
        z: pos[2],
        volume_id,
        layer_id,
        module_id,
        particle_id,
        momentum: mom,
        pt,
    });
}
