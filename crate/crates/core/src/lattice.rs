//! Finite lattice graphs: sites, bonds, plaquettes.
//!
//! Three generated kinds plus an escape hatch for arbitrary graphs:
//!
//! - `Square`: the grid graph.  Plaquettes are the unit cells.
//! - `Triangular`: the grid graph plus one diagonal per cell, all with the
//!   same orientation `(r, c) — (r+1, c+1)`.  Each cell carries two
//!   triangles ("upper" contains the cell's top edge, "lower" the bottom).
//! - `Hexagonal`: honeycomb in brick-wall form.  Every site has its two
//!   horizontal neighbours; the vertical bond `(r, c) — (r+1, c)` exists
//!   iff `r + c` is even.  Hexagon faces are anchored at `(r, c)` with
//!   `r + c` even and span columns `c..c+2`.
//!
//! Site numbering is row-major (`id = r * cols + c`) and stays stable under
//! dilution: removed sites are marked absent, never renumbered.  Boundary
//! conditions: `Free` wraps nothing, `Cylindrical` wraps the column axis,
//! `Toroidal` wraps both axes.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::bits::Bits;
use crate::error::{Error, Result};
use crate::seeds;

/// Dense site index within the row-major grid.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct SiteId(pub u32);

/// Index into [`Lattice::bonds`].
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct BondId(pub u32);

/// Index into [`Lattice::plaquettes`].
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct PlaquetteId(pub u32);

/// Unordered pair of distinct sites, stored with `a < b`.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug)]
pub struct Bond {
    pub a: SiteId,
    pub b: SiteId,
}

impl Bond {
    pub fn new(x: SiteId, y: SiteId) -> Self {
        assert_ne!(x, y, "bond endpoints must be distinct");
        if x.0 < y.0 {
            Bond { a: x, b: y }
        } else {
            Bond { a: y, b: x }
        }
    }

    pub fn other(&self, s: SiteId) -> SiteId {
        if s == self.a {
            self.b
        } else {
            self.a
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LatticeKind {
    Square,
    Triangular,
    Hexagonal,
    General,
}

#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BoundaryCondition {
    Free,
    Cylindrical,
    Toroidal,
}

impl BoundaryCondition {
    pub fn wraps_cols(&self) -> bool {
        !matches!(self, BoundaryCondition::Free)
    }

    pub fn wraps_rows(&self) -> bool {
        matches!(self, BoundaryCondition::Toroidal)
    }
}

/// A minimal closed cycle of the lattice, realised as a closed curve.
#[derive(Clone, Debug)]
pub struct Plaquette {
    pub id: PlaquetteId,
    /// Cyclically ordered vertices; `bonds[i]` joins `sites[i]` and
    /// `sites[(i+1) % n]`.
    pub sites: Vec<SiteId>,
    pub bonds: Vec<BondId>,
    /// Generating cell `(r, c)`.
    pub anchor: (u32, u32),
    /// Square and hexagonal: 0.  Triangular: 0 = upper triangle of the
    /// cell, 1 = lower triangle.
    pub half: u8,
}

/// Site/bond dilution parameters.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct DilutionParams {
    pub p_s: f64,
    pub p_b: f64,
    pub seed: u64,
}

impl DilutionParams {
    fn validate(&self) -> Result<()> {
        for (name, p) in [("p_s", self.p_s), ("p_b", self.p_b)] {
            if !(0.0..=1.0).contains(&p) || !p.is_finite() {
                return Err(Error::invalid(format!("{name} = {p} outside [0, 1]")));
            }
        }
        Ok(())
    }
}

/// A subset of the grid's sites, packed as a bit mask over grid indices.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct SiteSet {
    bits: Bits,
}

impl SiteSet {
    pub fn empty(lattice: &Lattice) -> Self {
        SiteSet {
            bits: Bits::new(lattice.grid_len()),
        }
    }

    pub fn from_sites(lattice: &Lattice, sites: &[SiteId]) -> Self {
        let mut s = Self::empty(lattice);
        for &site in sites {
            s.bits.set(site.0 as usize, true);
        }
        s
    }

    pub fn all_present(lattice: &Lattice) -> Self {
        let mut s = Self::empty(lattice);
        for site in lattice.present_sites() {
            s.bits.set(site.0 as usize, true);
        }
        s
    }

    pub fn contains(&self, s: SiteId) -> bool {
        self.bits.get(s.0 as usize)
    }

    pub fn insert(&mut self, s: SiteId) {
        self.bits.set(s.0 as usize, true);
    }

    pub fn len(&self) -> usize {
        self.bits.count_ones()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn iter(&self) -> impl Iterator<Item = SiteId> + '_ {
        self.bits.iter_ones().map(|i| SiteId(i as u32))
    }
}

/// Immutable lattice graph.  Construction enumerates all bonds and
/// plaquettes; everything downstream borrows it freely across threads.
#[derive(Clone, Debug)]
pub struct Lattice {
    kind: LatticeKind,
    rows: u32,
    cols: u32,
    boundary: BoundaryCondition,
    present: Bits,
    n_present: usize,
    bonds: Vec<Bond>,
    bond_ids: HashMap<(u32, u32), BondId>,
    adjacency: Vec<Vec<(SiteId, BondId)>>,
    plaquettes: Vec<Plaquette>,
    plaq_by_sites: HashMap<Vec<u32>, PlaquetteId>,
    plaq_by_anchor: HashMap<(u32, u32, u8), PlaquetteId>,
    pristine: bool,
}

/// On-disk form: bonds and plaquettes are regenerated on load.
#[derive(Serialize, Deserialize)]
struct LatticeFile {
    kind: LatticeKind,
    rows: u32,
    cols: u32,
    boundary: BoundaryCondition,
    removed_sites: Vec<u32>,
    removed_bonds: Vec<(u32, u32)>,
}

impl Lattice {
    /// Build a full (undiluted) lattice of the given kind and boundary.
    pub fn build(
        kind: LatticeKind,
        rows: u32,
        cols: u32,
        boundary: BoundaryCondition,
    ) -> Result<Lattice> {
        if kind == LatticeKind::General {
            return Err(Error::invalid(
                "use Lattice::general to supply an explicit graph",
            ));
        }
        if rows < 2 || cols < 2 {
            return Err(Error::invalid(format!(
                "lattice needs rows >= 2 and cols >= 2, got {rows}x{cols}"
            )));
        }
        let wraps_cols = boundary.wraps_cols();
        let wraps_rows = boundary.wraps_rows();
        if wraps_cols && cols < 3 {
            return Err(Error::invalid(format!(
                "wrapping {cols} columns would create doubled bonds"
            )));
        }
        if wraps_rows && rows < 3 && kind != LatticeKind::Hexagonal {
            return Err(Error::invalid(format!(
                "wrapping {rows} rows would create doubled bonds"
            )));
        }
        if kind == LatticeKind::Hexagonal {
            // The brick-wall vertical-bond parity has period 2 in both
            // directions, so a wrapped axis must have even length for the
            // hexagon tiling to close.
            if wraps_cols && !cols.is_multiple_of(2) {
                return Err(Error::invalid(format!(
                    "hexagonal tiling does not close with {cols} wrapped columns"
                )));
            }
            if wraps_rows && !rows.is_multiple_of(2) {
                return Err(Error::invalid(format!(
                    "hexagonal tiling does not close with {rows} wrapped rows"
                )));
            }
        }

        let grid = (rows * cols) as usize;
        let mut builder = GraphBuilder::new(grid);

        let site = |r: u32, c: u32| SiteId(r * cols + c);
        let has_vertical = |r: u32, c: u32| kind != LatticeKind::Hexagonal || (r + c).is_multiple_of(2);

        for r in 0..rows {
            for c in 0..cols {
                // East neighbour.
                if c + 1 < cols {
                    builder.add_bond(site(r, c), site(r, c + 1))?;
                } else if wraps_cols {
                    builder.add_bond(site(r, c), site(r, 0))?;
                }
                // North neighbour.
                if has_vertical(r, c) {
                    if r + 1 < rows {
                        builder.add_bond(site(r, c), site(r + 1, c))?;
                    } else if wraps_rows {
                        builder.add_bond(site(r, c), site(0, c))?;
                    }
                }
                // Diagonal, triangular kind only.
                if kind == LatticeKind::Triangular {
                    let rr = if r + 1 < rows {
                        Some(r + 1)
                    } else if wraps_rows {
                        Some(0)
                    } else {
                        None
                    };
                    let cc = if c + 1 < cols {
                        Some(c + 1)
                    } else if wraps_cols {
                        Some(0)
                    } else {
                        None
                    };
                    if let (Some(rr), Some(cc)) = (rr, cc) {
                        builder.add_bond(site(r, c), site(rr, cc))?;
                    }
                }
            }
        }

        let cell_rows = if wraps_rows { rows } else { rows - 1 };
        let cell_cols = if wraps_cols { cols } else { cols - 1 };
        let mut plaquette_sites: Vec<((u32, u32), u8, Vec<SiteId>)> = Vec::new();
        match kind {
            LatticeKind::Square => {
                for r in 0..cell_rows {
                    for c in 0..cell_cols {
                        let (r1, c1) = ((r + 1) % rows, (c + 1) % cols);
                        plaquette_sites.push((
                            (r, c),
                            0,
                            vec![site(r, c), site(r, c1), site(r1, c1), site(r1, c)],
                        ));
                    }
                }
            }
            LatticeKind::Triangular => {
                for r in 0..cell_rows {
                    for c in 0..cell_cols {
                        let (r1, c1) = ((r + 1) % rows, (c + 1) % cols);
                        plaquette_sites.push((
                            (r, c),
                            0,
                            vec![site(r, c), site(r, c1), site(r1, c1)],
                        ));
                        plaquette_sites.push((
                            (r, c),
                            1,
                            vec![site(r, c), site(r1, c1), site(r1, c)],
                        ));
                    }
                }
            }
            LatticeKind::Hexagonal => {
                let max_anchor_col = if wraps_cols {
                    cols
                } else {
                    cols.saturating_sub(2)
                };
                for r in 0..cell_rows {
                    for c in 0..max_anchor_col {
                        if (r + c) % 2 != 0 {
                            continue;
                        }
                        let r1 = (r + 1) % rows;
                        let (c1, c2) = ((c + 1) % cols, (c + 2) % cols);
                        plaquette_sites.push((
                            (r, c),
                            0,
                            vec![
                                site(r, c),
                                site(r, c1),
                                site(r, c2),
                                site(r1, c2),
                                site(r1, c1),
                                site(r1, c),
                            ],
                        ));
                    }
                }
            }
            LatticeKind::General => unreachable!(),
        }

        let mut present = Bits::new(grid);
        for i in 0..grid {
            present.set(i, true);
        }
        let lattice = builder.finish(
            kind,
            rows,
            cols,
            boundary,
            present,
            plaquette_sites,
            true,
        )?;
        lattice.check_connected()?;
        Ok(lattice)
    }

    /// Escape hatch: an explicit graph with optional explicit plaquettes
    /// (given as cyclically ordered site lists).
    pub fn general(
        n_sites: u32,
        bonds: &[(u32, u32)],
        plaquettes: Option<Vec<Vec<u32>>>,
    ) -> Result<Lattice> {
        if n_sites == 0 {
            return Err(Error::invalid("general lattice needs at least one site"));
        }
        let mut builder = GraphBuilder::new(n_sites as usize);
        for &(a, b) in bonds {
            if a >= n_sites || b >= n_sites {
                return Err(Error::invalid(format!("bond ({a},{b}) out of range")));
            }
            if a == b {
                return Err(Error::invalid(format!("self-loop at site {a}")));
            }
            builder.add_bond(SiteId(a), SiteId(b))?;
        }
        let plaquette_sites = plaquettes
            .unwrap_or_default()
            .into_iter()
            .map(|cycle| {
                (
                    (0, 0),
                    0,
                    cycle.into_iter().map(SiteId).collect::<Vec<_>>(),
                )
            })
            .collect();
        let mut present = Bits::new(n_sites as usize);
        for i in 0..n_sites as usize {
            present.set(i, true);
        }
        let lattice = builder.finish(
            LatticeKind::General,
            1,
            n_sites,
            BoundaryCondition::Free,
            present,
            plaquette_sites,
            true,
        )?;
        lattice.check_connected()?;
        Ok(lattice)
    }

    pub fn kind(&self) -> LatticeKind {
        self.kind
    }

    pub fn rows(&self) -> u32 {
        self.rows
    }

    pub fn cols(&self) -> u32 {
        self.cols
    }

    pub fn boundary(&self) -> BoundaryCondition {
        self.boundary
    }

    /// Total grid slots, present or not.
    pub fn grid_len(&self) -> usize {
        self.present.len()
    }

    /// Number of present sites.
    pub fn n_sites(&self) -> usize {
        self.n_present
    }

    pub fn n_bonds(&self) -> usize {
        self.bonds.len()
    }

    pub fn is_present(&self, s: SiteId) -> bool {
        (s.0 as usize) < self.grid_len() && self.present.get(s.0 as usize)
    }

    /// True if no site or bond has been removed.
    pub fn is_pristine(&self) -> bool {
        self.pristine
    }

    pub fn present_sites(&self) -> impl Iterator<Item = SiteId> + '_ {
        self.present.iter_ones().map(|i| SiteId(i as u32))
    }

    pub fn bonds(&self) -> &[Bond] {
        &self.bonds
    }

    pub fn bond(&self, id: BondId) -> Bond {
        self.bonds[id.0 as usize]
    }

    pub fn bond_id(&self, x: SiteId, y: SiteId) -> Option<BondId> {
        let (a, b) = if x.0 < y.0 { (x.0, y.0) } else { (y.0, x.0) };
        self.bond_ids.get(&(a, b)).copied()
    }

    pub fn adjacency(&self, s: SiteId) -> &[(SiteId, BondId)] {
        &self.adjacency[s.0 as usize]
    }

    pub fn plaquettes(&self) -> &[Plaquette] {
        &self.plaquettes
    }

    /// Plaquette whose vertex set equals `sites`, if any.
    pub fn plaquette_by_sites(&self, sites: &[SiteId]) -> Option<PlaquetteId> {
        let mut key: Vec<u32> = sites.iter().map(|s| s.0).collect();
        key.sort_unstable();
        self.plaq_by_sites.get(&key).copied()
    }

    pub fn plaquette_at(&self, anchor: (u32, u32), half: u8) -> Option<PlaquetteId> {
        self.plaq_by_anchor.get(&(anchor.0, anchor.1, half)).copied()
    }

    pub fn site_at(&self, r: u32, c: u32) -> SiteId {
        debug_assert!(r < self.rows && c < self.cols);
        SiteId(r * self.cols + c)
    }

    pub fn coords(&self, s: SiteId) -> (u32, u32) {
        (s.0 / self.cols, s.0 % self.cols)
    }

    /// Contour bonds of `s`: exactly one endpoint inside the set.
    pub fn boundary_bonds(&self, s: &SiteSet) -> Result<Vec<BondId>> {
        for site in s.iter() {
            if !self.is_present(site) {
                return Err(Error::invalid(format!(
                    "site {} in the set is not present",
                    site.0
                )));
            }
        }
        Ok(self
            .bonds
            .iter()
            .enumerate()
            .filter(|(_, bond)| s.contains(bond.a) != s.contains(bond.b))
            .map(|(i, _)| BondId(i as u32))
            .collect())
    }

    /// Independent site/bond dilution, restricted to the largest connected
    /// component of what survives.
    pub fn dilute(&self, params: &DilutionParams) -> Result<Lattice> {
        params.validate()?;
        if !self.pristine {
            return Err(Error::invalid("dilute expects an undiluted lattice"));
        }
        use rand::Rng;
        let mut rng = seeds::stream_rng(params.seed, 0);
        // Fixed draw order: one Bernoulli per grid site, then one per bond,
        // so the stream layout does not depend on the outcomes.
        let mut keep_site = Bits::new(self.grid_len());
        for i in 0..self.grid_len() {
            let keep = rng.random_bool(params.p_s);
            if keep && self.present.get(i) {
                keep_site.set(i, true);
            }
        }
        let mut removed_bonds = Vec::new();
        for bond in &self.bonds {
            let keep = rng.random_bool(params.p_b);
            if !keep {
                removed_bonds.push((bond.a.0, bond.b.0));
            }
        }
        if keep_site.count_ones() == 0 {
            return Err(Error::invalid("dilution removed every site"));
        }
        let component = self.largest_component(&keep_site, &removed_bonds);
        if component.count_ones() == 0 {
            return Err(Error::invalid("dilution left no connected component"));
        }
        self.restricted(component, &removed_bonds)
    }

    /// Largest connected component of the subgraph on `keep_site` minus
    /// `removed_bonds`; ties broken towards the smallest site id.
    fn largest_component(&self, keep_site: &Bits, removed_bonds: &[(u32, u32)]) -> Bits {
        let removed: std::collections::HashSet<(u32, u32)> =
            removed_bonds.iter().copied().collect();
        let mut best = Bits::new(self.grid_len());
        let mut best_size = 0usize;
        let mut seen = Bits::new(self.grid_len());
        for start in keep_site.iter_ones() {
            if seen.get(start) {
                continue;
            }
            let mut comp = Bits::new(self.grid_len());
            let mut queue = vec![start];
            seen.set(start, true);
            comp.set(start, true);
            let mut size = 1usize;
            while let Some(i) = queue.pop() {
                for &(nbr, bid) in &self.adjacency[i] {
                    let j = nbr.0 as usize;
                    let bond = self.bonds[bid.0 as usize];
                    if keep_site.get(j)
                        && !seen.get(j)
                        && !removed.contains(&(bond.a.0, bond.b.0))
                    {
                        seen.set(j, true);
                        comp.set(j, true);
                        size += 1;
                        queue.push(j);
                    }
                }
            }
            if size > best_size {
                best_size = size;
                best = comp;
            }
        }
        best
    }

    /// Induced sublattice on `present`, with `removed_bonds` additionally
    /// dropped.  The result must be connected.
    pub fn restricted(&self, present: Bits, removed_bonds: &[(u32, u32)]) -> Result<Lattice> {
        assert_eq!(present.len(), self.grid_len());
        let removed: std::collections::HashSet<(u32, u32)> =
            removed_bonds.iter().copied().collect();
        let mut builder = GraphBuilder::new(self.grid_len());
        for bond in &self.bonds {
            if present.get(bond.a.0 as usize)
                && present.get(bond.b.0 as usize)
                && !removed.contains(&(bond.a.0, bond.b.0))
            {
                builder.add_bond(bond.a, bond.b)?;
            }
        }
        let plaquette_sites = self
            .plaquettes
            .iter()
            .map(|p| (p.anchor, p.half, p.sites.clone()))
            .collect();
        let lattice = builder.finish(
            self.kind,
            self.rows,
            self.cols,
            self.boundary,
            present,
            plaquette_sites,
            false,
        )?;
        lattice.check_connected()?;
        Ok(lattice)
    }

    fn check_connected(&self) -> Result<()> {
        let mut iter = self.present.iter_ones();
        let Some(start) = iter.next() else {
            return Err(Error::invalid("lattice has no sites"));
        };
        let mut seen = Bits::new(self.grid_len());
        seen.set(start, true);
        let mut queue = vec![start];
        let mut count = 1usize;
        while let Some(i) = queue.pop() {
            for &(nbr, _) in &self.adjacency[i] {
                let j = nbr.0 as usize;
                if !seen.get(j) {
                    seen.set(j, true);
                    count += 1;
                    queue.push(j);
                }
            }
        }
        if count != self.n_present {
            return Err(Error::invalid(format!(
                "lattice is disconnected ({count} of {} sites reachable)",
                self.n_present
            )));
        }
        Ok(())
    }

    pub fn to_json(&self) -> Result<serde_json::Value> {
        if self.kind == LatticeKind::General {
            return Err(Error::invalid(
                "general lattices have no serialized form",
            ));
        }
        let removed_sites: Vec<u32> = (0..self.grid_len() as u32)
            .filter(|&i| !self.present.get(i as usize))
            .collect();
        // Bonds absent even though both endpoints survive; bonds implied
        // by removed sites are not listed.
        let full = Lattice::build(self.kind, self.rows, self.cols, self.boundary)?;
        let removed_bonds: Vec<(u32, u32)> = full
            .bonds
            .iter()
            .filter(|bond| {
                self.is_present(bond.a)
                    && self.is_present(bond.b)
                    && self.bond_id(bond.a, bond.b).is_none()
            })
            .map(|bond| (bond.a.0, bond.b.0))
            .collect();
        let file = LatticeFile {
            kind: self.kind,
            rows: self.rows,
            cols: self.cols,
            boundary: self.boundary,
            removed_sites,
            removed_bonds,
        };
        serde_json::to_value(&file).map_err(|e| Error::invalid(e.to_string()))
    }

    pub fn from_json(value: &serde_json::Value) -> Result<Lattice> {
        let file: LatticeFile = serde_json::from_value(value.clone())
            .map_err(|e| Error::invalid(format!("bad lattice file: {e}")))?;
        let full = Lattice::build(file.kind, file.rows, file.cols, file.boundary)?;
        if file.removed_sites.is_empty() && file.removed_bonds.is_empty() {
            return Ok(full);
        }
        let mut present = Bits::new(full.grid_len());
        for i in 0..full.grid_len() {
            present.set(i, true);
        }
        for &s in &file.removed_sites {
            if s as usize >= full.grid_len() {
                return Err(Error::invalid(format!("removed site {s} out of range")));
            }
            present.set(s as usize, false);
        }
        let removed_bonds: Vec<(u32, u32)> = file
            .removed_bonds
            .iter()
            .map(|&(a, b)| if a < b { (a, b) } else { (b, a) })
            .collect();
        full.restricted(present, &removed_bonds)
    }
}

struct GraphBuilder {
    grid: usize,
    bonds: Vec<Bond>,
    bond_ids: HashMap<(u32, u32), BondId>,
}

impl GraphBuilder {
    fn new(grid: usize) -> Self {
        GraphBuilder {
            grid,
            bonds: Vec::new(),
            bond_ids: HashMap::new(),
        }
    }

    fn add_bond(&mut self, x: SiteId, y: SiteId) -> Result<()> {
        if x == y {
            return Err(Error::invalid(
                "boundary wrap produced a self-loop; dimensions too small",
            ));
        }
        let bond = Bond::new(x, y);
        let key = (bond.a.0, bond.b.0);
        if self.bond_ids.contains_key(&key) {
            return Err(Error::invalid(format!(
                "doubled bond between sites {} and {}; dimensions too small for this boundary",
                bond.a.0, bond.b.0
            )));
        }
        let id = BondId(self.bonds.len() as u32);
        self.bonds.push(bond);
        self.bond_ids.insert(key, id);
        Ok(())
    }

    #[allow(clippy::too_many_arguments)]
    fn finish(
        self,
        kind: LatticeKind,
        rows: u32,
        cols: u32,
        boundary: BoundaryCondition,
        present: Bits,
        plaquette_sites: Vec<((u32, u32), u8, Vec<SiteId>)>,
        pristine: bool,
    ) -> Result<Lattice> {
        let mut adjacency: Vec<Vec<(SiteId, BondId)>> = vec![Vec::new(); self.grid];
        for (i, bond) in self.bonds.iter().enumerate() {
            adjacency[bond.a.0 as usize].push((bond.b, BondId(i as u32)));
            adjacency[bond.b.0 as usize].push((bond.a, BondId(i as u32)));
        }
        for list in &mut adjacency {
            list.sort_by_key(|(s, _)| s.0);
        }

        let expected_len = match kind {
            LatticeKind::Square => Some(4),
            LatticeKind::Triangular => Some(3),
            LatticeKind::Hexagonal => Some(6),
            LatticeKind::General => None,
        };
        let mut plaquettes = Vec::new();
        let mut plaq_by_sites = HashMap::new();
        let mut plaq_by_anchor = HashMap::new();
        for (anchor, half, sites) in plaquette_sites {
            // A plaquette survives restriction only if its whole bond cycle
            // does.
            let n = sites.len();
            let mut bonds = Vec::with_capacity(n);
            let mut ok = n >= 3;
            for i in 0..n {
                let x = sites[i];
                let y = sites[(i + 1) % n];
                let (a, b) = if x.0 < y.0 { (x.0, y.0) } else { (y.0, x.0) };
                match self.bond_ids.get(&(a, b)) {
                    Some(&id) => bonds.push(id),
                    None => {
                        ok = false;
                        break;
                    }
                }
            }
            if !ok {
                if pristine {
                    return Err(Error::SelfCheck(format!(
                        "generated plaquette at {anchor:?} is not a closed curve"
                    )));
                }
                continue;
            }
            if let Some(expected) = expected_len {
                if n != expected {
                    return Err(Error::SelfCheck(format!(
                        "plaquette at {anchor:?} has {n} sites, expected {expected}"
                    )));
                }
            }
            let mut key: Vec<u32> = sites.iter().map(|s| s.0).collect();
            key.sort_unstable();
            key.dedup();
            if key.len() != n {
                return Err(Error::invalid(format!(
                    "plaquette at {anchor:?} repeats a site"
                )));
            }
            let id = PlaquetteId(plaquettes.len() as u32);
            plaq_by_sites.insert(key, id);
            plaq_by_anchor.insert((anchor.0, anchor.1, half), id);
            plaquettes.push(Plaquette {
                id,
                sites,
                bonds,
                anchor,
                half,
            });
        }

        let n_present = present.count_ones();
        Ok(Lattice {
            kind,
            rows,
            cols,
            boundary,
            present,
            n_present,
            bonds: self.bonds,
            bond_ids: self.bond_ids,
            adjacency,
            plaquettes,
            plaq_by_sites,
            plaq_by_anchor,
            pristine,
        })
    }
}
