//! The module registry: site blocks whose coupling pattern guarantees a
//! nonempty energy-preserving flip set inside the block for every ground
//! state of every host lattice.
//!
//! Three built-in blocks ship as embedded data:
//!
//! - square: 25 sites, 40 bonds, 14 of 16 plaquettes constrained, two
//!   orientations (the 90°-rotated pattern is a distinct module; 180° maps
//!   the pattern to itself).
//! - triangular: 21 sites (a side-6 triangle), 45 bonds, 19 of 25
//!   triangles constrained.
//! - hexagonal: 54 sites (a flower of 19 hexagons), 72 bonds, all 19
//!   hexagons constrained — the centre frustrated, the inner ring of six
//!   unfrustrated, the outer ring of twelve frustrated.
//!
//! Constraint tables are stored against plaquette anchor cells in each
//! pattern's own plaquette numbering, and every asset re-runs its
//! consistency checks at load time.

use std::collections::{HashMap, HashSet};

use rand::{Rng, RngCore};
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::ground_state::{
    branch_and_bound_enumerate, enumerate_exhaustive_with_cap, group_by_exterior,
};
use crate::ising::CouplingConfig;
use crate::lattice::{
    BondId, BoundaryCondition, Lattice, LatticeKind, PlaquetteId, SiteId, SiteSet,
};
use crate::seeds;

/// One constraint entry: plaquette anchor cell, half, frustrated?
type ConstraintEntry = (u32, u32, u8, bool);

/// Square-block constraints listed in the pattern's own plaquette
/// numbering p1..p14 (row-major over the 4x4 cells, skipping the
/// unconstrained top-left and bottom-right corners).  The frustrated
/// plaquettes form two broken diagonals.
const SQUARE_CONSTRAINTS: [ConstraintEntry; 14] = [
    (0, 1, 0, false),
    (0, 2, 0, true),
    (0, 3, 0, false),
    (1, 0, 0, false),
    (1, 1, 0, true),
    (1, 2, 0, false),
    (1, 3, 0, true),
    (2, 0, 0, true),
    (2, 1, 0, false),
    (2, 2, 0, true),
    (2, 3, 0, false),
    (3, 0, 0, false),
    (3, 1, 0, true),
    (3, 2, 0, false),
];

/// Triangular-block constraints in the pattern's numbering p1..p19.
/// Half 0 is the cell's upper triangle (base on row r), half 1 the
/// lower one; p3, p7, p11 and p17 are the four frustrated triangles.
const TRIANGULAR_CONSTRAINTS: [ConstraintEntry; 19] = [
    (3, 3, 0, false),
    (3, 4, 0, false),
    (2, 2, 0, true),
    (2, 3, 1, false),
    (2, 3, 0, false),
    (2, 4, 1, false),
    (2, 4, 0, true),
    (1, 1, 0, false),
    (1, 2, 1, false),
    (1, 2, 0, false),
    (1, 3, 1, true),
    (1, 3, 0, false),
    (1, 4, 1, false),
    (1, 4, 0, false),
    (0, 1, 0, false),
    (0, 2, 1, false),
    (0, 2, 0, true),
    (0, 3, 1, false),
    (0, 3, 0, false),
];

/// Hexagonal-block constraints in the pattern's numbering p1..p19: the
/// centre hexagon frustrated, the ring of six around it unfrustrated,
/// the outer twelve frustrated.
const HEXAGONAL_CONSTRAINTS: [ConstraintEntry; 19] = [
    (2, 4, 0, true),
    (3, 5, 0, false),
    (2, 6, 0, false),
    (1, 5, 0, false),
    (1, 3, 0, false),
    (2, 2, 0, false),
    (3, 3, 0, false),
    (4, 4, 0, true),
    (4, 6, 0, true),
    (3, 7, 0, true),
    (2, 8, 0, true),
    (1, 7, 0, true),
    (0, 6, 0, true),
    (0, 4, 0, true),
    (0, 2, 0, true),
    (1, 1, 0, true),
    (2, 0, 0, true),
    (3, 1, 0, true),
    (4, 2, 0, true),
];

/// Column spans per brick row of the 54-site hexagonal flower.
const HEX_BLOCK_ROWS: [(u32, u32); 6] = [(2, 8), (1, 9), (0, 10), (0, 10), (1, 9), (2, 8)];

/// A site block plus per-plaquette frustration constraints.
#[derive(Clone, Debug)]
pub struct ModuleSpec {
    name: String,
    kind: LatticeKind,
    block: Lattice,
    /// Per block-plaquette id: Some(true) frustrated, Some(false)
    /// unfrustrated, None unspecified.  `orientations[0]` is this base
    /// pattern.
    orientations: Vec<Vec<Option<bool>>>,
    /// Block plaquette ids in the pattern's numbering (p1 first).
    numbering: Vec<PlaquetteId>,
    /// Realisation order: each entry has at least one bond not used by
    /// earlier entries.
    dof_order: Vec<PlaquetteId>,
}

impl ModuleSpec {
    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn kind(&self) -> LatticeKind {
        self.kind
    }

    /// The block as a lattice in its own local grid.
    pub fn block(&self) -> &Lattice {
        &self.block
    }

    pub fn n_sites(&self) -> usize {
        self.block.n_sites()
    }

    pub fn n_bonds(&self) -> usize {
        self.block.n_bonds()
    }

    /// Number of symmetry images counted as "the module".
    pub fn n_orientations(&self) -> usize {
        self.orientations.len()
    }

    /// Number of plaquettes with a specified constraint.
    pub fn n_specified(&self) -> usize {
        self.orientations[0].iter().filter(|c| c.is_some()).count()
    }

    pub fn constraints(&self) -> &[Option<bool>] {
        &self.orientations[0]
    }

    pub fn orientation(&self, i: usize) -> &[Option<bool>] {
        &self.orientations[i]
    }

    /// Constraint of plaquette `p<number>` in the base orientation.
    pub fn numbered_constraint(&self, number: usize) -> Option<bool> {
        let id = self.numbering[number - 1];
        self.orientations[0][id.0 as usize]
    }

    /// Flip one specified constraint (for negative controls).
    pub fn with_flipped_constraint(&self, number: usize) -> ModuleSpec {
        let mut out = self.clone();
        let id = out.numbering[number - 1];
        for orientation in &mut out.orientations {
            if let Some(v) = orientation[id.0 as usize] {
                orientation[id.0 as usize] = Some(!v);
            }
        }
        out
    }

    /// Replace every constraint with Unfrustrated (a pattern that is
    /// certainly not a module).
    pub fn with_all_unfrustrated(&self) -> ModuleSpec {
        let mut out = self.clone();
        for orientation in &mut out.orientations {
            for c in orientation.iter_mut() {
                if c.is_some() {
                    *c = Some(false);
                }
            }
        }
        out
    }
}

/// The three built-in specs.
pub fn builtin_specs() -> Vec<ModuleSpec> {
    vec![square_spec(), triangular_spec(), hexagonal_spec()]
}

pub fn spec_by_name(name: &str) -> Result<ModuleSpec> {
    match name {
        "square" => Ok(square_spec()),
        "triangular" => Ok(triangular_spec()),
        "hexagonal" => Ok(hexagonal_spec()),
        other => Err(Error::invalid(format!(
            "unknown module spec '{other}' (square, triangular, hexagonal)"
        ))),
    }
}

pub fn square_spec() -> ModuleSpec {
    let block = Lattice::build(LatticeKind::Square, 5, 5, BoundaryCondition::Free)
        .expect("square block");
    let mut spec = assemble("square", block, &SQUARE_CONSTRAINTS)
        .expect("square module data is consistent");
    // Second orientation: the pattern rotated by 90 degrees.  Plaquette
    // cell (r, c) of the rotated pattern carries the constraint of cell
    // (3 - c, r).
    let rotated: Vec<Option<bool>> = spec
        .block
        .plaquettes()
        .iter()
        .map(|p| {
            let (r, c) = p.anchor;
            let source = spec
                .block
                .plaquette_at((3 - c, r), 0)
                .expect("rotated anchor exists");
            spec.orientations[0][source.0 as usize]
        })
        .collect();
    spec.orientations.push(rotated);
    validate_square(&spec).expect("square module consistency checks");
    spec
}

pub fn triangular_spec() -> ModuleSpec {
    let full = Lattice::build(LatticeKind::Triangular, 6, 6, BoundaryCondition::Free)
        .expect("triangular bounding grid");
    let mut present = crate::bits::Bits::new(full.grid_len());
    for r in 0..6u32 {
        for c in r..6u32 {
            present.set(full.site_at(r, c).0 as usize, true);
        }
    }
    let block = full.restricted(present, &[]).expect("triangular block");
    let spec = assemble("triangular", block, &TRIANGULAR_CONSTRAINTS)
        .expect("triangular module data is consistent");
    validate_triangular(&spec).expect("triangular module consistency checks");
    spec
}

pub fn hexagonal_spec() -> ModuleSpec {
    let full = Lattice::build(LatticeKind::Hexagonal, 6, 11, BoundaryCondition::Free)
        .expect("hexagonal bounding grid");
    let mut present = crate::bits::Bits::new(full.grid_len());
    for (r, &(lo, hi)) in HEX_BLOCK_ROWS.iter().enumerate() {
        for c in lo..=hi {
            present.set(full.site_at(r as u32, c).0 as usize, true);
        }
    }
    let block = full.restricted(present, &[]).expect("hexagonal block");
    let spec = assemble("hexagonal", block, &HEXAGONAL_CONSTRAINTS)
        .expect("hexagonal module data is consistent");
    validate_hexagonal(&spec).expect("hexagonal module consistency checks");
    spec
}

fn assemble(name: &str, block: Lattice, table: &[ConstraintEntry]) -> Result<ModuleSpec> {
    let mut constraints = vec![None; block.plaquettes().len()];
    let mut numbering = Vec::with_capacity(table.len());
    for &(r, c, half, frustrated) in table {
        let id = block.plaquette_at((r, c), half).ok_or_else(|| {
            Error::SelfCheck(format!(
                "{name} module: no plaquette at anchor ({r},{c}) half {half}"
            ))
        })?;
        if constraints[id.0 as usize].is_some() {
            return Err(Error::SelfCheck(format!(
                "{name} module: duplicate constraint at ({r},{c})"
            )));
        }
        constraints[id.0 as usize] = Some(frustrated);
        numbering.push(id);
    }
    let dof_order = degree_of_freedom_order(&block, &constraints)?;
    Ok(ModuleSpec {
        name: name.to_string(),
        kind: block.kind(),
        block,
        orientations: vec![constraints],
        numbering,
        dof_order,
    })
}

/// Order the specified plaquettes (canonically, by id) so that each has a
/// bond not contained in any earlier one.  This is the "snake around with
/// one degree of freedom per plaquette" condition that licenses
/// f(1/2) = 2^-m and drives coupling realisation.
fn degree_of_freedom_order(
    block: &Lattice,
    constraints: &[Option<bool>],
) -> Result<Vec<PlaquetteId>> {
    let mut used: HashSet<BondId> = HashSet::new();
    let mut order = Vec::new();
    for p in block.plaquettes() {
        if constraints[p.id.0 as usize].is_none() {
            continue;
        }
        if !p.bonds.iter().any(|b| !used.contains(b)) {
            return Err(Error::invalid(format!(
                "plaquette {} has no free bond; constraints are over-determined",
                p.id.0
            )));
        }
        used.extend(p.bonds.iter().copied());
        order.push(p.id);
    }
    Ok(order)
}

/// A J on the block whose frustration pattern meets every specified
/// constraint of the base orientation.  Unconstrained bonds are drawn at
/// random from the seed, so different seeds give different valid
/// couplings.
pub fn realize_coupling(spec: &ModuleSpec, seed: u64) -> Result<CouplingConfig> {
    let block = &spec.block;
    let mut rng = seeds::stream_rng(seed, 0);
    let mut j = CouplingConfig::all_positive(block);
    for i in 0..block.n_bonds() {
        if rng.random_bool(0.5) {
            j.set(BondId(i as u32), -1);
        }
    }
    // Fix plaquettes in degree-of-freedom order: flipping a bond unused by
    // earlier plaquettes never disturbs what is already fixed.
    let mut used: HashSet<BondId> = HashSet::new();
    for &pid in &spec.dof_order {
        let p = &block.plaquettes()[pid.0 as usize];
        let target = spec.orientations[0][pid.0 as usize].unwrap();
        let frustrated = p.bonds.iter().filter(|&&b| j.is_negative(b)).count() % 2 == 1;
        if frustrated != target {
            let free = p
                .bonds
                .iter()
                .find(|b| !used.contains(b))
                .expect("degree-of-freedom order guarantees a free bond");
            j.flip_bond(*free);
        }
        used.extend(p.bonds.iter().copied());
    }
    // Round-trip self check.
    for (idx, c) in spec.orientations[0].iter().enumerate() {
        if let Some(target) = c {
            let p = &block.plaquettes()[idx];
            let frustrated =
                p.bonds.iter().filter(|&&b| j.is_negative(b)).count() % 2 == 1;
            if frustrated != *target {
                return Err(Error::SelfCheck(format!(
                    "realized coupling violates constraint on plaquette {idx}"
                )));
            }
        }
    }
    Ok(j)
}

/// How the block sits inside a host lattice.
pub struct BlockEmbedding {
    /// Block site -> host site, for present block sites.
    pub site_map: HashMap<SiteId, SiteId>,
    /// Block bond id -> host bond id.
    pub bond_map: Vec<(BondId, BondId)>,
    /// Block plaquette id -> host plaquette id.
    pub plaq_map: Vec<(PlaquetteId, PlaquetteId)>,
    /// Image of the block in host coordinates.
    pub block_in_host: SiteSet,
}

/// Place the block with its local origin on `anchor`.  Returns None when
/// the placement is geometrically fine but some site, bond or plaquette
/// is missing in the host (dilution, or a brick-parity mismatch).
pub fn embed(spec: &ModuleSpec, lattice: &Lattice, anchor: SiteId) -> Result<Option<BlockEmbedding>> {
    if lattice.kind() != spec.kind {
        return Err(Error::invalid(format!(
            "module is {:?}, lattice is {:?}",
            spec.kind,
            lattice.kind()
        )));
    }
    if anchor.0 as usize >= lattice.grid_len() {
        return Err(Error::invalid(format!("anchor {} out of range", anchor.0)));
    }
    let (r0, c0) = lattice.coords(anchor);
    let block = &spec.block;
    let (rows, cols) = (lattice.rows(), lattice.cols());
    let wrap_r = lattice.boundary().wraps_rows();
    let wrap_c = lattice.boundary().wraps_cols();

    let mut site_map = HashMap::new();
    let mut block_in_host = SiteSet::empty(lattice);
    let mut image: HashSet<SiteId> = HashSet::new();
    for site in block.present_sites() {
        let (br, bc) = block.coords(site);
        let hr = if r0 + br < rows {
            r0 + br
        } else if wrap_r {
            (r0 + br) % rows
        } else {
            return Err(Error::invalid(format!(
                "block at anchor ({r0},{c0}) does not fit a {rows}x{cols} lattice"
            )));
        };
        let hc = if c0 + bc < cols {
            c0 + bc
        } else if wrap_c {
            (c0 + bc) % cols
        } else {
            return Err(Error::invalid(format!(
                "block at anchor ({r0},{c0}) does not fit a {rows}x{cols} lattice"
            )));
        };
        let host_site = lattice.site_at(hr, hc);
        if !lattice.is_present(host_site) || !image.insert(host_site) {
            return Ok(None);
        }
        site_map.insert(site, host_site);
        block_in_host.insert(host_site);
    }

    let mut bond_map = Vec::with_capacity(block.n_bonds());
    for (i, bond) in block.bonds().iter().enumerate() {
        let (a, b) = (site_map[&bond.a], site_map[&bond.b]);
        match lattice.bond_id(a, b) {
            Some(host_bond) => bond_map.push((BondId(i as u32), host_bond)),
            None => return Ok(None),
        }
    }

    let mut plaq_map = Vec::with_capacity(block.plaquettes().len());
    for p in block.plaquettes() {
        let mapped: Vec<SiteId> = p.sites.iter().map(|s| site_map[s]).collect();
        match lattice.plaquette_by_sites(&mapped) {
            Some(host_p) => plaq_map.push((p.id, host_p)),
            None => return Ok(None),
        }
    }

    Ok(Some(BlockEmbedding {
        site_map,
        bond_map,
        plaq_map,
        block_in_host,
    }))
}

/// Does the frustration pattern of `j` on the block placed at `anchor`
/// satisfy every specified constraint, for at least one orientation?
pub fn matches(
    spec: &ModuleSpec,
    lattice: &Lattice,
    j: &CouplingConfig,
    anchor: SiteId,
) -> Result<bool> {
    let Some(embedding) = embed(spec, lattice, anchor)? else {
        return Ok(false);
    };
    Ok(matches_embedded(spec, lattice, j, &embedding))
}

fn matches_embedded(
    spec: &ModuleSpec,
    lattice: &Lattice,
    j: &CouplingConfig,
    embedding: &BlockEmbedding,
) -> bool {
    // Frustration of the mapped plaquettes, computed once.
    let actual: Vec<bool> = embedding
        .plaq_map
        .iter()
        .map(|&(_, host_p)| {
            lattice.plaquettes()[host_p.0 as usize]
                .bonds
                .iter()
                .filter(|&&b| j.is_negative(b))
                .count()
                % 2
                == 1
        })
        .collect();
    spec.orientations.iter().any(|constraints| {
        embedding
            .plaq_map
            .iter()
            .zip(&actual)
            .all(|(&(block_p, _), &frustrated)| {
                match constraints[block_p.0 as usize] {
                    Some(required) => required == frustrated,
                    None => true,
                }
            })
    })
}

/// Per-sample record of a verification run.
#[derive(Clone, Debug, Serialize)]
pub struct SampleRecord {
    pub index: u64,
    pub coupling_seed: u64,
    pub energy: i64,
    pub degeneracy: String,
    pub exterior_groups: usize,
    pub min_group_size: usize,
    pub pass: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct HostSummary {
    pub kind: String,
    pub rows: u32,
    pub cols: u32,
    pub sites: usize,
    pub collar: usize,
    pub backend: String,
}

/// Outcome of `verify_module`: one record per sample plus the overall
/// verdict (pass iff every sample passes).
#[derive(Clone, Debug, Serialize)]
pub struct VerificationReport {
    pub spec: String,
    pub host: HostSummary,
    pub samples: Vec<SampleRecord>,
    pub all_pass: bool,
}

impl VerificationReport {
    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(self).expect("report serializes")
    }
}

/// Smallest host: the block plus `collar` extra sites of the same lattice
/// kind, attached along the first ring and chosen in row-major order.
pub fn build_host(spec: &ModuleSpec, collar: usize) -> Result<(Lattice, BlockEmbedding)> {
    if collar < 1 {
        return Err(Error::invalid(
            "collar must be at least 1: the host must exceed the block",
        ));
    }
    let block = &spec.block;
    let block_coords: HashSet<(i64, i64)> = block
        .present_sites()
        .map(|s| {
            let (r, c) = block.coords(s);
            (r as i64, c as i64)
        })
        .collect();
    let mut ring: Vec<(i64, i64)> = block_coords
        .iter()
        .flat_map(|&rc| infinite_neighbors(spec.kind, rc))
        .filter(|rc| !block_coords.contains(rc))
        .collect::<HashSet<_>>()
        .into_iter()
        .collect();
    ring.sort_unstable();
    if collar > ring.len() {
        return Err(Error::invalid(format!(
            "collar {collar} exceeds the {} first-ring sites",
            ring.len()
        )));
    }
    let chosen: Vec<(i64, i64)> = ring.into_iter().take(collar).collect();

    let all: Vec<(i64, i64)> = block_coords.iter().copied().chain(chosen).collect();
    let min_r = all.iter().map(|&(r, _)| r).min().unwrap();
    let min_c = all.iter().map(|&(_, c)| c).min().unwrap();
    let shift_r = -min_r;
    let mut shift_c = -min_c;
    if spec.kind == LatticeKind::Hexagonal && (shift_r + shift_c).rem_euclid(2) == 1 {
        // Keep the brick parity of the block's vertical bonds.
        shift_c += 1;
    }
    let rows = (all.iter().map(|&(r, _)| r + shift_r).max().unwrap() + 1).max(2) as u32;
    let cols = (all.iter().map(|&(_, c)| c + shift_c).max().unwrap() + 1).max(2) as u32;

    let full = Lattice::build(spec.kind, rows, cols, BoundaryCondition::Free)?;
    let mut present = crate::bits::Bits::new(full.grid_len());
    for &(r, c) in &all {
        present.set(
            full.site_at((r + shift_r) as u32, (c + shift_c) as u32).0 as usize,
            true,
        );
    }
    let host = full.restricted(present, &[])?;
    let anchor = host.site_at(shift_r as u32, shift_c as u32);
    let embedding = embed(spec, &host, anchor)?
        .ok_or_else(|| Error::SelfCheck("block does not embed in its own host".into()))?;
    Ok((host, embedding))
}

fn infinite_neighbors(kind: LatticeKind, (r, c): (i64, i64)) -> Vec<(i64, i64)> {
    match kind {
        LatticeKind::Square => vec![(r - 1, c), (r + 1, c), (r, c - 1), (r, c + 1)],
        LatticeKind::Triangular => vec![
            (r - 1, c),
            (r + 1, c),
            (r, c - 1),
            (r, c + 1),
            (r + 1, c + 1),
            (r - 1, c - 1),
        ],
        LatticeKind::Hexagonal => {
            let mut out = vec![(r, c - 1), (r, c + 1)];
            if (r + c).rem_euclid(2) == 0 {
                out.push((r + 1, c));
            } else {
                out.push((r - 1, c));
            }
            out
        }
        LatticeKind::General => Vec::new(),
    }
}

/// Draw `n_samples` realised couplings, extend each with uniform random
/// exterior couplings on a minimal host, enumerate all ground states, and
/// check that every exterior class contains at least two of them (i.e.
/// every ground state admits a nonempty flip set inside the block).
pub fn verify_module(
    spec: &ModuleSpec,
    collar: usize,
    n_samples: u64,
    seed: u64,
) -> Result<VerificationReport> {
    let (host, embedding) = build_host(spec, collar)?;
    let use_bnb = spec.kind == LatticeKind::Hexagonal;
    if !use_bnb && host.n_sites() > 30 {
        return Err(Error::cap(format!(
            "host with {} sites exceeds the exhaustive cap; shrink the collar",
            host.n_sites()
        )));
    }
    let block_bonds: HashSet<BondId> = embedding.bond_map.iter().map(|&(_, h)| h).collect();

    let samples: Result<Vec<SampleRecord>> = (0..n_samples)
        .into_par_iter()
        .map(|index| {
            let mut rng = seeds::stream_rng(seed, 1 + index);
            let coupling_seed = rng.next_u64();
            let j_block = realize_coupling(spec, coupling_seed)?;
            let mut j = CouplingConfig::all_positive(&host);
            for &(block_bond, host_bond) in &embedding.bond_map {
                j.set(host_bond, j_block.get(block_bond));
            }
            for i in 0..host.n_bonds() {
                let b = BondId(i as u32);
                if !block_bonds.contains(&b) {
                    j.set(b, if rng.random_bool(0.5) { -1 } else { 1 });
                }
            }
            let result = if use_bnb {
                branch_and_bound_enumerate(&host, &j, true)?
            } else {
                enumerate_exhaustive_with_cap(&host, &j, true, 30)?
            };
            let states = result.states.as_ref().expect("states were requested");
            let groups = group_by_exterior(&host, states, &embedding.block_in_host);
            let min_group = groups.iter().map(|g| g.len()).min().unwrap_or(0);
            Ok(SampleRecord {
                index,
                coupling_seed,
                energy: result.energy,
                degeneracy: result.degeneracy.to_str_radix(10),
                exterior_groups: groups.len(),
                min_group_size: min_group,
                pass: min_group >= 2,
            })
        })
        .collect();
    let samples = samples?;
    let all_pass = samples.iter().all(|s| s.pass);
    Ok(VerificationReport {
        spec: spec.name.clone(),
        host: HostSummary {
            kind: format!("{:?}", host.kind()).to_lowercase(),
            rows: host.rows(),
            cols: host.cols(),
            sites: host.n_sites(),
            collar,
            backend: if use_bnb {
                "branch-and-bound".into()
            } else {
                "exhaustive".into()
            },
        },
        samples,
        all_pass,
    })
}

/// Data-asset form of a spec.
pub fn spec_to_json(spec: &ModuleSpec) -> serde_json::Value {
    let block = &spec.block;
    let sites: Vec<SiteId> = block.present_sites().collect();
    let index_of: HashMap<SiteId, usize> =
        sites.iter().enumerate().map(|(i, &s)| (s, i)).collect();
    let site_coords: Vec<(u32, u32)> = sites.iter().map(|&s| block.coords(s)).collect();
    let bonds: Vec<(usize, usize)> = block
        .bonds()
        .iter()
        .map(|b| (index_of[&b.a], index_of[&b.b]))
        .collect();
    let plaquettes: Vec<Vec<usize>> = block
        .plaquettes()
        .iter()
        .map(|p| p.sites.iter().map(|s| index_of[s]).collect())
        .collect();
    let constraint_map = |constraints: &[Option<bool>]| {
        let mut m = serde_json::Map::new();
        for (i, c) in constraints.iter().enumerate() {
            if let Some(f) = c {
                m.insert(i.to_string(), if *f { "F" } else { "U" }.into());
            }
        }
        serde_json::Value::Object(m)
    };
    serde_json::json!({
        "kind": serde_json::to_value(spec.kind).unwrap(),
        "sites": site_coords,
        "bonds": bonds,
        "plaquettes": plaquettes,
        "constraints": constraint_map(&spec.orientations[0]),
        "orientations": spec
            .orientations
            .iter()
            .map(|o| constraint_map(o))
            .collect::<Vec<_>>(),
    })
}

pub fn spec_from_json(value: &serde_json::Value) -> Result<ModuleSpec> {
    use serde::Deserialize;
    #[derive(Deserialize)]
    struct File {
        kind: LatticeKind,
        sites: Vec<(u32, u32)>,
        bonds: Vec<(usize, usize)>,
        plaquettes: Vec<Vec<usize>>,
        constraints: HashMap<String, String>,
        orientations: Option<Vec<HashMap<String, String>>>,
    }
    let file: File = serde_json::from_value(value.clone())
        .map_err(|e| Error::invalid(format!("bad module spec file: {e}")))?;
    if file.sites.is_empty() {
        return Err(Error::invalid("module spec lists no sites"));
    }
    let rows = file.sites.iter().map(|&(r, _)| r).max().unwrap() + 1;
    let cols = file.sites.iter().map(|&(_, c)| c).max().unwrap() + 1;
    let full = Lattice::build(file.kind, rows.max(2), cols.max(2), BoundaryCondition::Free)?;
    let mut present = crate::bits::Bits::new(full.grid_len());
    for &(r, c) in &file.sites {
        present.set(full.site_at(r, c).0 as usize, true);
    }
    let block = full.restricted(present, &[])?;

    // The declared bonds must be exactly the induced ones.
    let declared: HashSet<(u32, u32)> = file
        .bonds
        .iter()
        .map(|&(i, j)| {
            let a = file.sites[i];
            let b = file.sites[j];
            let (sa, sb) = (block.site_at(a.0, a.1), block.site_at(b.0, b.1));
            if sa.0 < sb.0 {
                (sa.0, sb.0)
            } else {
                (sb.0, sa.0)
            }
        })
        .collect();
    let induced: HashSet<(u32, u32)> = block.bonds().iter().map(|b| (b.a.0, b.b.0)).collect();
    if declared != induced {
        return Err(Error::invalid(
            "module spec bonds do not match the induced block bonds",
        ));
    }

    let resolve = |cycle: &[usize]| -> Result<PlaquetteId> {
        let mapped: Vec<SiteId> = cycle
            .iter()
            .map(|&i| {
                let (r, c) = file.sites[i];
                block.site_at(r, c)
            })
            .collect();
        block
            .plaquette_by_sites(&mapped)
            .ok_or_else(|| Error::invalid("module spec plaquette is not a block plaquette"))
    };
    let mut file_plaquette_ids = Vec::with_capacity(file.plaquettes.len());
    for cycle in &file.plaquettes {
        file_plaquette_ids.push(resolve(cycle)?);
    }

    let parse_map = |m: &HashMap<String, String>| -> Result<Vec<Option<bool>>> {
        let mut constraints = vec![None; block.plaquettes().len()];
        for (k, v) in m {
            let idx: usize = k
                .parse()
                .map_err(|_| Error::invalid(format!("bad plaquette key '{k}'")))?;
            let id = *file_plaquette_ids
                .get(idx)
                .ok_or_else(|| Error::invalid(format!("plaquette index {idx} out of range")))?;
            constraints[id.0 as usize] = Some(match v.as_str() {
                "F" => true,
                "U" => false,
                other => return Err(Error::invalid(format!("constraint '{other}' is not F|U"))),
            });
        }
        Ok(constraints)
    };

    let base = parse_map(&file.constraints)?;
    let orientations = match &file.orientations {
        Some(list) if !list.is_empty() => list.iter().map(parse_map).collect::<Result<Vec<_>>>()?,
        _ => vec![base.clone()],
    };
    if orientations[0] != base {
        return Err(Error::invalid(
            "first orientation must equal the base constraints",
        ));
    }
    let dof_order = degree_of_freedom_order(&block, &base)?;
    let numbering = file_plaquette_ids;
    Ok(ModuleSpec {
        name: "custom".to_string(),
        kind: file.kind,
        block,
        orientations,
        numbering,
        dof_order,
    })
}

fn validate_square(spec: &ModuleSpec) -> Result<()> {
    expect(spec.n_sites() == 25, "square block has 25 sites")?;
    expect(spec.n_bonds() == 40, "square block has 40 bonds")?;
    expect(
        spec.block.plaquettes().len() == 16,
        "square block has 16 plaquettes",
    )?;
    expect(spec.n_specified() == 14, "square pattern specifies 14")?;
    expect(spec.n_orientations() == 2, "square has two orientations")?;
    // Spot checks hard-wired independently of the tables: the centre
    // plaquette p5 is frustrated and sits on sites {6, 7, 11, 12} in the
    // block's row-major numbering.
    expect(
        spec.numbered_constraint(5) == Some(true),
        "square p5 frustrated",
    )?;
    let p5 = spec.numbering[4];
    let mut sites: Vec<u32> = spec.block.plaquettes()[p5.0 as usize]
        .sites
        .iter()
        .map(|s| s.0)
        .collect();
    sites.sort_unstable();
    expect(sites == vec![6, 7, 11, 12], "square p5 sits at the centre")?;
    // The rotated image is a genuinely different pattern, while rotating
    // twice gives the base back (so two orientations exhaust the images).
    expect(
        spec.orientations[1] != spec.orientations[0],
        "rotated square pattern differs",
    )?;
    let rot180: Vec<Option<bool>> = spec
        .block
        .plaquettes()
        .iter()
        .map(|p| {
            let (r, c) = p.anchor;
            let src = spec.block.plaquette_at((3 - c, r), 0).unwrap();
            spec.orientations[1][src.0 as usize]
        })
        .collect();
    expect(rot180 == spec.orientations[0], "180-degree image is the base")?;
    Ok(())
}

fn validate_triangular(spec: &ModuleSpec) -> Result<()> {
    expect(spec.n_sites() == 21, "triangular block has 21 sites")?;
    expect(spec.n_bonds() == 45, "triangular block has 45 bonds")?;
    expect(
        spec.block.plaquettes().len() == 25,
        "triangular block has 25 plaquettes",
    )?;
    expect(spec.n_specified() == 19, "triangular pattern specifies 19")?;
    // Independent spot checks of the table.
    expect(
        spec.numbered_constraint(11) == Some(true),
        "triangular p11 frustrated",
    )?;
    expect(
        spec.numbered_constraint(3) == Some(true),
        "triangular p3 frustrated",
    )?;
    for unfrustrated in [1, 4, 5] {
        expect(
            spec.numbered_constraint(unfrustrated) == Some(false),
            "triangular proof plaquette unfrustrated",
        )?;
    }
    Ok(())
}

fn validate_hexagonal(spec: &ModuleSpec) -> Result<()> {
    expect(spec.n_sites() == 54, "hexagonal block has 54 sites")?;
    expect(spec.n_bonds() == 72, "hexagonal block has 72 bonds")?;
    expect(
        spec.block.plaquettes().len() == 19,
        "hexagonal block has 19 plaquettes",
    )?;
    expect(spec.n_specified() == 19, "hexagonal pattern specifies 19")?;
    // Independent spot checks of the table.
    for frustrated in [1, 12, 13, 14] {
        expect(
            spec.numbered_constraint(frustrated) == Some(true),
            "hexagonal proof plaquette frustrated",
        )?;
    }
    expect(
        spec.numbered_constraint(3) == Some(false),
        "hexagonal p3 unfrustrated",
    )?;
    Ok(())
}

fn expect(cond: bool, what: &str) -> Result<()> {
    if cond {
        Ok(())
    } else {
        Err(Error::SelfCheck(format!("module data check failed: {what}")))
    }
}
