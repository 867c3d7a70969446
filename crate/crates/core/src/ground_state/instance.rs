//! Compact instance shared by the bit-packed solvers.
//!
//! Present sites are renumbered densely into `0..n` (ascending grid id)
//! so a whole spin state fits one `u64`; neighbour and negative-coupling
//! masks make single-site energy updates a couple of word operations.

use crate::error::{Error, Result};
use crate::ising::{CouplingConfig, SpinState};
use crate::lattice::{Lattice, SiteId};

pub(crate) struct SolverInstance<'a> {
    pub lattice: &'a Lattice,
    pub n: usize,
    pub n_bonds: usize,
    /// Compact index -> grid id.
    pub grid_of: Vec<u32>,
    /// Grid id -> compact index (u32::MAX when absent).
    pub compact_of: Vec<u32>,
    pub nbr_mask: Vec<u64>,
    /// Per site: neighbours joined by a negative bond.
    pub neg_mask: Vec<u64>,
    pub deg: Vec<u32>,
    /// Compact endpoints plus the negative flag.
    pub bonds: Vec<(u32, u32, bool)>,
}

impl<'a> SolverInstance<'a> {
    pub fn new(lattice: &'a Lattice, j: &CouplingConfig, cap: usize) -> Result<Self> {
        let n = lattice.n_sites();
        if n > cap {
            return Err(Error::cap(format!(
                "{n} sites exceed the backend cap of {cap}"
            )));
        }
        if j.len() != lattice.n_bonds() {
            return Err(Error::invalid(format!(
                "coupling configuration covers {} bonds, lattice has {}",
                j.len(),
                lattice.n_bonds()
            )));
        }
        let mut grid_of = Vec::with_capacity(n);
        let mut compact_of = vec![u32::MAX; lattice.grid_len()];
        for site in lattice.present_sites() {
            compact_of[site.0 as usize] = grid_of.len() as u32;
            grid_of.push(site.0);
        }
        let mut nbr_mask = vec![0u64; n];
        let mut neg_mask = vec![0u64; n];
        let mut deg = vec![0u32; n];
        let mut bonds = Vec::with_capacity(lattice.n_bonds());
        for (i, bond) in lattice.bonds().iter().enumerate() {
            let a = compact_of[bond.a.0 as usize];
            let b = compact_of[bond.b.0 as usize];
            debug_assert!(a != u32::MAX && b != u32::MAX);
            let neg = j.is_negative(crate::lattice::BondId(i as u32));
            bonds.push((a, b, neg));
            nbr_mask[a as usize] |= 1 << b;
            nbr_mask[b as usize] |= 1 << a;
            if neg {
                neg_mask[a as usize] |= 1 << b;
                neg_mask[b as usize] |= 1 << a;
            }
            deg[a as usize] += 1;
            deg[b as usize] += 1;
        }
        Ok(SolverInstance {
            lattice,
            n,
            n_bonds: bonds.len(),
            grid_of,
            compact_of,
            nbr_mask,
            neg_mask,
            deg,
            bonds,
        })
    }

    /// Unhappy-bond count of a packed state.
    pub fn unhappy_of(&self, sigma: u64) -> u32 {
        let mut u = 0;
        for &(a, b, neg) in &self.bonds {
            let unhappy = neg ^ ((sigma >> a) & 1 == 1) ^ ((sigma >> b) & 1 == 1);
            u += unhappy as u32;
        }
        u
    }

    /// Unpack a compact state into a full spin state.
    pub fn to_spin_state(&self, sigma: u64) -> SpinState {
        let mut state = SpinState::all_up(self.lattice);
        for (k, &grid) in self.grid_of.iter().enumerate() {
            if (sigma >> k) & 1 == 1 {
                state.set(SiteId(grid), -1);
            }
        }
        state
    }
}
