//! Branch-and-bound ground-state enumeration for up to 64 sites.
//!
//! Depth-first assignment in breadth-first site order (decided bonds
//! accumulate early), pruning against an admissible bound: the decided
//! energy, minus one per undecided bond, plus two per bond-disjoint
//! frustrated plaquette none of whose bonds is decided yet — a frustrated
//! plaquette carries at least one unhappy bond in every state, so one of
//! its "-1" assumptions is off by two.  Only strictly worse branches are
//! pruned, so every optimum is counted.

use num_bigint::BigUint;

use super::instance::SolverInstance;
use super::{Backend, GroundStateResult, STATES_CAP};
use crate::error::{Error, Result};
use crate::ising::CouplingConfig;
use crate::lattice::Lattice;

pub const BNB_SITE_CAP: usize = 64;

pub fn branch_and_bound_enumerate(
    lattice: &Lattice,
    j: &CouplingConfig,
    collect_states: bool,
) -> Result<GroundStateResult> {
    let inst = SolverInstance::new(lattice, j, BNB_SITE_CAP)?;
    let n = inst.n;
    if n == 0 {
        return Err(Error::invalid("empty lattice"));
    }

    // Breadth-first order from the lowest present site, neighbours in
    // ascending id, so runs are reproducible.
    let order = bfs_order(&inst);
    let mut pos_of = vec![usize::MAX; n];
    for (t, &site) in order.iter().enumerate() {
        pos_of[site] = t;
    }

    // Bonds grouped by the later endpoint's position.
    let mut edges: Vec<Vec<(u32, bool)>> = vec![Vec::new(); n];
    for &(a, b, neg) in &inst.bonds {
        let (pa, pb) = (pos_of[a as usize], pos_of[b as usize]);
        let (early, late) = if pa < pb { (pa, pb) } else { (pb, pa) };
        edges[late].push((early as u32, neg));
    }

    // Static remainder bound per depth.
    let mut decided = vec![0usize; n + 1];
    for t in 0..n {
        decided[t + 1] = decided[t] + edges[t].len();
    }
    let rest = remainder_bound(&inst, j, lattice, &pos_of, &decided);

    let mut search = Search {
        edges: &edges,
        rest: &rest,
        n,
        best: i64::MAX,
        count: 0u128,
        states: Vec::new(),
        collect: collect_states,
        truncated: false,
    };
    // Gauge fixing: the first site is pinned to +1 and the count doubled.
    search.descend(1, 0, 0);

    if search.truncated {
        return Err(Error::cap(format!(
            "degeneracy exceeds the state-collection cap of {STATES_CAP}"
        )));
    }

    let degeneracy = BigUint::from(2u32) * BigUint::from(search.count);
    let states = if collect_states {
        let full = if n == 64 { u64::MAX } else { (1u64 << n) - 1 };
        let mut masks = std::mem::take(&mut search.states);
        let negated: Vec<u64> = masks.iter().map(|m| m ^ full).collect();
        masks.extend(negated);
        // Masks are indexed by search position; translate to compact
        // indices before unpacking.
        Some(
            masks
                .iter()
                .map(|&m| {
                    let mut compact = 0u64;
                    for (t, &site) in order.iter().enumerate() {
                        if (m >> t) & 1 == 1 {
                            compact |= 1 << site;
                        }
                    }
                    inst.to_spin_state(compact)
                })
                .collect(),
        )
    } else {
        None
    };

    Ok(GroundStateResult {
        energy: search.best,
        degeneracy,
        states,
        backend: Backend::BranchAndBound,
        elapsed_ms: None,
    })
}

fn bfs_order(inst: &SolverInstance) -> Vec<usize> {
    let n = inst.n;
    let mut order = Vec::with_capacity(n);
    let mut seen = vec![false; n];
    let mut queue = std::collections::VecDeque::new();
    queue.push_back(0usize);
    seen[0] = true;
    while let Some(s) = queue.pop_front() {
        order.push(s);
        let mut mask = inst.nbr_mask[s];
        while mask != 0 {
            let t = mask.trailing_zeros() as usize;
            mask &= mask - 1;
            if !seen[t] {
                seen[t] = true;
                queue.push_back(t);
            }
        }
    }
    debug_assert_eq!(order.len(), n, "lattice must be connected");
    order
}

/// rest[t]: lower bound on the energy still to come once `t` sites are
/// assigned.
fn remainder_bound(
    inst: &SolverInstance,
    j: &CouplingConfig,
    lattice: &Lattice,
    pos_of: &[usize],
    decided: &[usize],
) -> Vec<i64> {
    let n = inst.n;
    // Greedily select bond-disjoint frustrated plaquettes and record the
    // depth at which each sees its first decided bond.
    let mut used_bonds = std::collections::HashSet::new();
    let mut first_decided_depths: Vec<usize> = Vec::new();
    for p in lattice.plaquettes() {
        let neg = p.bonds.iter().filter(|&&b| j.is_negative(b)).count();
        if neg % 2 == 0 {
            continue;
        }
        if p.bonds.iter().any(|b| used_bonds.contains(b)) {
            continue;
        }
        let depth = p
            .bonds
            .iter()
            .map(|&b| {
                let bond = lattice.bond(b);
                let pa = pos_of[inst.compact_of[bond.a.0 as usize] as usize];
                let pb = pos_of[inst.compact_of[bond.b.0 as usize] as usize];
                pa.max(pb) + 1
            })
            .min()
            .unwrap();
        for &b in &p.bonds {
            used_bonds.insert(b);
        }
        first_decided_depths.push(depth);
    }
    let mut rest = vec![0i64; n + 1];
    for t in 0..=n {
        let undecided = (inst.n_bonds - decided[t]) as i64;
        let untouched_frustrated = first_decided_depths
            .iter()
            .filter(|&&d| d > t)
            .count() as i64;
        rest[t] = -undecided + 2 * untouched_frustrated;
    }
    rest
}

struct Search<'a> {
    edges: &'a [Vec<(u32, bool)>],
    rest: &'a [i64],
    n: usize,
    best: i64,
    count: u128,
    states: Vec<u64>,
    collect: bool,
    truncated: bool,
}

impl Search<'_> {
    fn descend(&mut self, t: usize, sigma: u64, e: i64) {
        if t == self.n {
            if e < self.best {
                self.best = e;
                self.count = 1;
                self.truncated = false;
                if self.collect {
                    self.states.clear();
                    self.states.push(sigma);
                }
            } else if e == self.best {
                self.count += 1;
                if self.collect {
                    if 2 * self.states.len() < STATES_CAP {
                        self.states.push(sigma);
                    } else {
                        self.truncated = true;
                    }
                }
            }
            return;
        }
        let mut d0 = 0i64;
        for &(early, neg) in &self.edges[t] {
            let partner = (sigma >> early) & 1 == 1;
            let unhappy = neg ^ partner;
            d0 += if unhappy { 1 } else { -1 };
        }
        // Flipping the new spin toggles every decided bond at it.
        let d1 = -d0;
        let (first_bit, first_d, second_bit, second_d) = if d0 <= d1 {
            (0u64, d0, 1u64, d1)
        } else {
            (1u64, d1, 0u64, d0)
        };
        let rest = self.rest[t + 1];
        if e + first_d + rest <= self.best {
            self.descend(t + 1, sigma | (first_bit << t), e + first_d);
        }
        if e + second_d + rest <= self.best {
            self.descend(t + 1, sigma | (second_bit << t), e + second_d);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ground_state::enumerate_exhaustive;
    use crate::lattice::{BoundaryCondition, LatticeKind};
    use crate::seeds;
    use num_traits::ToPrimitive;

    #[test]
    fn ferromagnet_is_instant() {
        let lat = Lattice::build(LatticeKind::Square, 6, 8, BoundaryCondition::Free).unwrap();
        let j = CouplingConfig::all_positive(&lat);
        let r = branch_and_bound_enumerate(&lat, &j, false).unwrap();
        assert_eq!(r.energy, -(lat.n_bonds() as i64));
        assert_eq!(r.degeneracy.to_u64().unwrap(), 2);
    }

    #[test]
    fn agrees_with_exhaustive() {
        let mut rng = seeds::stream_rng(41, 0);
        let cases = [
            (LatticeKind::Square, 4, 5, BoundaryCondition::Free),
            (LatticeKind::Square, 4, 5, BoundaryCondition::Toroidal),
            (LatticeKind::Triangular, 4, 5, BoundaryCondition::Free),
            (LatticeKind::Hexagonal, 4, 6, BoundaryCondition::Cylindrical),
            (LatticeKind::Hexagonal, 3, 7, BoundaryCondition::Free),
        ];
        for (kind, rows, cols, boundary) in cases {
            let lat = Lattice::build(kind, rows, cols, boundary).unwrap();
            for _ in 0..20 {
                let j = CouplingConfig::random(&lat, 0.5, &mut rng);
                let bb = branch_and_bound_enumerate(&lat, &j, false).unwrap();
                let ex = enumerate_exhaustive(&lat, &j, false).unwrap();
                assert_eq!(bb.energy, ex.energy, "{kind:?} {boundary:?}");
                assert_eq!(bb.degeneracy, ex.degeneracy, "{kind:?} {boundary:?}");
            }
        }
    }

    #[test]
    fn collected_states_match_exhaustive() {
        let lat =
            Lattice::build(LatticeKind::Triangular, 3, 5, BoundaryCondition::Free).unwrap();
        let mut rng = seeds::stream_rng(42, 0);
        for _ in 0..10 {
            let j = CouplingConfig::random(&lat, 0.5, &mut rng);
            let bb = branch_and_bound_enumerate(&lat, &j, true).unwrap();
            let ex = enumerate_exhaustive(&lat, &j, true).unwrap();
            let a: std::collections::HashSet<_> = bb.states.unwrap().into_iter().collect();
            let b: std::collections::HashSet<_> = ex.states.unwrap().into_iter().collect();
            assert_eq!(a, b);
        }
    }

    #[test]
    fn cap_is_enforced() {
        let lat = Lattice::build(LatticeKind::Square, 9, 8, BoundaryCondition::Free).unwrap();
        let j = CouplingConfig::all_positive(&lat);
        assert!(matches!(
            branch_and_bound_enumerate(&lat, &j, false),
            Err(Error::ResourceCap(_))
        ));
    }
}
