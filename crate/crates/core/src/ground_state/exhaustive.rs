//! Exhaustive ground-state enumeration.
//!
//! Iterates the 2^(n−1) states with site 0 gauge-fixed to +1 (doubling the
//! final count restores the global-flip copies), walking states in Gray
//! order so each step flips one site and updates the unhappy-bond count
//! from that site's neighbour masks alone.

use num_bigint::BigUint;
use rayon::prelude::*;

use super::instance::SolverInstance;
use super::{Backend, GroundStateResult, STATES_CAP};
use crate::error::{Error, Result};
use crate::ising::CouplingConfig;
use crate::lattice::Lattice;

pub const DEFAULT_EXHAUSTIVE_CAP: usize = 30;

/// Exact minimum energy and degeneracy by full enumeration; optionally all
/// ground states.  Rejects lattices above the default 30-site cap.
pub fn enumerate_exhaustive(
    lattice: &Lattice,
    j: &CouplingConfig,
    collect_states: bool,
) -> Result<GroundStateResult> {
    enumerate_exhaustive_with_cap(lattice, j, collect_states, DEFAULT_EXHAUSTIVE_CAP)
}

pub fn enumerate_exhaustive_with_cap(
    lattice: &Lattice,
    j: &CouplingConfig,
    collect_states: bool,
    cap: usize,
) -> Result<GroundStateResult> {
    let inst = SolverInstance::new(lattice, j, cap.min(48))?;
    let n = inst.n;
    if n == 0 {
        return Err(Error::invalid("empty lattice"));
    }

    // Fixed partition layout regardless of thread count: the top bits of
    // the state are frozen per partition, the rest are Gray-enumerated.
    let free_bits = n - 1;
    let prefix_bits = if free_bits >= 22 { 3 } else { 0 };
    let parts: Vec<PartitionResult> = (0..1u64 << prefix_bits)
        .into_par_iter()
        .map(|prefix| scan_partition(&inst, prefix << (n - prefix_bits), free_bits - prefix_bits, collect_states))
        .collect();

    let best_u = parts.iter().map(|p| p.best_u).min().unwrap();
    let half_count: u64 = parts
        .iter()
        .filter(|p| p.best_u == best_u)
        .map(|p| p.count)
        .sum();
    let energy = 2 * best_u as i64 - inst.n_bonds as i64;

    let states = if collect_states {
        if 2 * half_count as usize > STATES_CAP {
            return Err(Error::cap(format!(
                "degeneracy {} exceeds the state-collection cap",
                2 * half_count
            )));
        }
        let mut masks: Vec<u64> = Vec::with_capacity(2 * half_count as usize);
        for (i, part) in parts.iter().enumerate() {
            if part.best_u != best_u {
                continue;
            }
            if part.overflowed {
                // Rare: the opportunistic buffer spilled; redo this
                // partition collecting only at the now-known optimum.
                let redone = collect_partition(
                    &inst,
                    (i as u64) << (n - prefix_bits),
                    free_bits - prefix_bits,
                    best_u,
                );
                masks.extend(redone);
            } else {
                masks.extend(&part.states);
            }
        }
        debug_assert_eq!(masks.len() as u64, half_count);
        // Restore the gauge-fixed copies.
        let full = if n == 64 { u64::MAX } else { (1u64 << n) - 1 };
        let negated: Vec<u64> = masks.iter().map(|m| m ^ full).collect();
        masks.extend(negated);
        Some(masks.iter().map(|&m| inst.to_spin_state(m)).collect())
    } else {
        None
    };

    Ok(GroundStateResult {
        energy,
        degeneracy: BigUint::from(2 * half_count),
        states,
        backend: Backend::Exhaustive,
        elapsed_ms: None,
    })
}

struct PartitionResult {
    best_u: u32,
    count: u64,
    states: Vec<u64>,
    overflowed: bool,
}

const PARTITION_BUFFER: usize = 1 << 21;

fn scan_partition(
    inst: &SolverInstance,
    prefix: u64,
    gray_bits: usize,
    collect: bool,
) -> PartitionResult {
    let mut sigma = prefix;
    let mut u = inst.unhappy_of(sigma);
    let mut best = u;
    let mut count = 1u64;
    let mut states: Vec<u64> = Vec::new();
    let mut overflowed = false;
    if collect {
        states.push(sigma);
    }

    let nbr = &inst.nbr_mask;
    let neg = &inst.neg_mask;
    let deg = &inst.deg;
    let steps = 1u64 << gray_bits;
    for i in 1..steps {
        // Gray codes of successive integers differ in bit tz(i); the flip
        // target is offset by one past the gauge-fixed site 0.
        let k = (i.trailing_zeros() + 1) as usize;
        let x = sigma ^ neg[k];
        let at_k = (x & nbr[k]).count_ones();
        let unhappy_at_k = if (sigma >> k) & 1 == 1 {
            deg[k] - at_k
        } else {
            at_k
        };
        u = u + deg[k] - 2 * unhappy_at_k;
        sigma ^= 1 << k;

        if u < best {
            best = u;
            count = 1;
            if collect {
                states.clear();
                states.push(sigma);
                overflowed = false;
            }
        } else if u == best {
            count += 1;
            if collect && !overflowed {
                if states.len() < PARTITION_BUFFER {
                    states.push(sigma);
                } else {
                    overflowed = true;
                }
            }
        }
    }
    if !collect {
        states = Vec::new();
    }
    PartitionResult {
        best_u: best,
        count,
        states,
        overflowed,
    }
}

/// Second pass for an overflowed partition: emit exactly the states whose
/// unhappy count equals `target`.
fn collect_partition(inst: &SolverInstance, prefix: u64, gray_bits: usize, target: u32) -> Vec<u64> {
    let mut sigma = prefix;
    let mut u = inst.unhappy_of(sigma);
    let mut out = Vec::new();
    if u == target {
        out.push(sigma);
    }
    let nbr = &inst.nbr_mask;
    let neg = &inst.neg_mask;
    let deg = &inst.deg;
    for i in 1..(1u64 << gray_bits) {
        let k = (i.trailing_zeros() + 1) as usize;
        let x = sigma ^ neg[k];
        let at_k = (x & nbr[k]).count_ones();
        let unhappy_at_k = if (sigma >> k) & 1 == 1 {
            deg[k] - at_k
        } else {
            at_k
        };
        u = u + deg[k] - 2 * unhappy_at_k;
        sigma ^= 1 << k;
        if u == target {
            out.push(sigma);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ising::{energy, SpinState};
    use crate::lattice::{BoundaryCondition, LatticeKind};
    use crate::seeds;
    use num_traits::ToPrimitive;

    #[test]
    fn ferromagnet_2x2() {
        let lat = Lattice::build(LatticeKind::Square, 2, 2, BoundaryCondition::Free).unwrap();
        let j = CouplingConfig::all_positive(&lat);
        let r = enumerate_exhaustive(&lat, &j, true).unwrap();
        assert_eq!(r.energy, -4);
        assert_eq!(r.degeneracy.to_u64().unwrap(), 2);
        let states = r.states.unwrap();
        assert_eq!(states.len(), 2);
        for s in &states {
            assert_eq!(energy(&lat, &j, s), -4);
        }
    }

    #[test]
    fn single_frustrated_plaquette() {
        let lat = Lattice::build(LatticeKind::Square, 2, 2, BoundaryCondition::Free).unwrap();
        let mut j = CouplingConfig::all_positive(&lat);
        j.set(crate::lattice::BondId(0), -1);
        let r = enumerate_exhaustive(&lat, &j, true).unwrap();
        assert_eq!(r.energy, -2);
        assert_eq!(r.degeneracy.to_u64().unwrap(), 8);
        // Closed under global flip.
        let states = r.states.unwrap();
        let set: std::collections::HashSet<SpinState> = states.iter().cloned().collect();
        assert_eq!(set.len(), 8);
        for s in &states {
            assert!(set.contains(&s.negated(&lat)));
        }
    }

    #[test]
    fn open_chains_have_degeneracy_two() {
        let mut rng = seeds::stream_rng(21, 0);
        for n in [2u32, 5, 9, 14, 20] {
            let bonds: Vec<(u32, u32)> = (0..n - 1).map(|i| (i, i + 1)).collect();
            let chain = Lattice::general(n, &bonds, None).unwrap();
            let j = CouplingConfig::random(&chain, 0.5, &mut rng);
            let r = enumerate_exhaustive(&chain, &j, false).unwrap();
            assert_eq!(r.energy, -(chain.n_bonds() as i64));
            assert_eq!(r.degeneracy.to_u64().unwrap(), 2, "chain length {n}");
        }
    }

    #[test]
    fn brute_force_agreement_small() {
        // Independent oracle: literal iteration over all 2^n states.
        let lat = Lattice::build(LatticeKind::Triangular, 3, 4, BoundaryCondition::Cylindrical)
            .unwrap();
        let mut rng = seeds::stream_rng(22, 0);
        for _ in 0..20 {
            let j = CouplingConfig::random(&lat, 0.5, &mut rng);
            let mut best = i64::MAX;
            let mut count = 0u64;
            let n = lat.n_sites();
            for mask in 0u64..(1 << n) {
                let mut s = SpinState::all_up(&lat);
                for (k, site) in lat.present_sites().enumerate() {
                    if (mask >> k) & 1 == 1 {
                        s.set(site, -1);
                    }
                }
                let e = energy(&lat, &j, &s);
                if e < best {
                    best = e;
                    count = 1;
                } else if e == best {
                    count += 1;
                }
            }
            let r = enumerate_exhaustive(&lat, &j, false).unwrap();
            assert_eq!(r.energy, best);
            assert_eq!(r.degeneracy.to_u64().unwrap(), count);
        }
    }

    #[test]
    fn cap_is_enforced() {
        let lat = Lattice::build(LatticeKind::Square, 6, 6, BoundaryCondition::Free).unwrap();
        let j = CouplingConfig::all_positive(&lat);
        assert!(matches!(
            enumerate_exhaustive(&lat, &j, false),
            Err(crate::Error::ResourceCap(_))
        ));
        assert!(enumerate_exhaustive_with_cap(&lat, &j, false, 36).is_ok());
    }
}
