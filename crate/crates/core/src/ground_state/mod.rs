//! Exact ground-state energy, degeneracy and state enumeration — the
//! oracle the probabilistic layer is validated against.

mod bnb;
mod exhaustive;
mod instance;
mod transfer;

pub use bnb::{branch_and_bound_enumerate, BNB_SITE_CAP};
pub use exhaustive::{enumerate_exhaustive, enumerate_exhaustive_with_cap, DEFAULT_EXHAUSTIVE_CAP};
pub use transfer::{transfer_matrix_count, MAX_STRIP_WIDTH};

use std::collections::HashMap;

use num_bigint::BigUint;

use crate::ising::SpinState;
use crate::lattice::{Lattice, SiteSet};

/// Hard limit on explicit state lists.
pub(crate) const STATES_CAP: usize = 1 << 22;

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum Backend {
    Exhaustive,
    TransferMatrix,
    BranchAndBound,
}

impl Backend {
    pub fn as_str(&self) -> &'static str {
        match self {
            Backend::Exhaustive => "exhaustive",
            Backend::TransferMatrix => "transfer-matrix",
            Backend::BranchAndBound => "branch-and-bound",
        }
    }
}

/// Exact ground-state data.  The degeneracy is always even: the global
/// flip maps ground states to ground states.
#[derive(Clone, Debug)]
pub struct GroundStateResult {
    pub energy: i64,
    pub degeneracy: BigUint,
    /// All ground states, when requested and below the collection cap.
    pub states: Option<Vec<SpinState>>,
    pub backend: Backend,
    pub elapsed_ms: Option<f64>,
}

impl GroundStateResult {
    /// JSON form; the elapsed field is opt-in so identical runs stay
    /// byte-identical.
    pub fn to_json(&self, include_elapsed: bool) -> serde_json::Value {
        let mut map = serde_json::Map::new();
        map.insert("energy".into(), self.energy.into());
        map.insert(
            "degeneracy".into(),
            self.degeneracy.to_str_radix(10).into(),
        );
        map.insert("backend".into(), self.backend.as_str().into());
        if include_elapsed {
            map.insert("elapsed_ms".into(), self.elapsed_ms.into());
        }
        serde_json::Value::Object(map)
    }
}

/// Partition states by their restriction to the present sites outside
/// `m`; two states share a group iff they agree on every site outside.
/// Returns index groups in a deterministic (restriction-sorted) order.
pub fn group_by_exterior(
    lattice: &Lattice,
    states: &[SpinState],
    m: &SiteSet,
) -> Vec<Vec<usize>> {
    let exterior: Vec<_> = lattice
        .present_sites()
        .filter(|s| !m.contains(*s))
        .collect();
    let mut groups: HashMap<Vec<u64>, Vec<usize>> = HashMap::new();
    for (i, state) in states.iter().enumerate() {
        let mut key = vec![0u64; exterior.len().div_ceil(64)];
        for (bit, &site) in exterior.iter().enumerate() {
            if state.is_down(site) {
                key[bit / 64] |= 1 << (bit % 64);
            }
        }
        groups.entry(key).or_default().push(i);
    }
    let mut out: Vec<(Vec<u64>, Vec<usize>)> = groups.into_iter().collect();
    out.sort();
    out.into_iter().map(|(_, v)| v).collect()
}
