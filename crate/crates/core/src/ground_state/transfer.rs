//! Column transfer matrix for square and triangular strips.
//!
//! Sites are processed in column-major order while a sliding window keeps
//! the last `rows + 1` spins, which covers every bond span these lattices
//! produce (vertical 1, row-wrap rows−1, horizontal rows, diagonal
//! rows+1).  Per window state the table tracks the minimum energy seen
//! and an exact big-integer count of states attaining it.
//!
//! A wrapped column axis is handled by fixing the first column's spins
//! and looping over its 2^rows assignments; seam bonds then refer to that
//! fixed column.

use num_bigint::BigUint;
use num_traits::Zero;

use super::{Backend, GroundStateResult};
use crate::error::{Error, Result};
use crate::ising::CouplingConfig;
use crate::lattice::{Lattice, LatticeKind};

pub const MAX_STRIP_WIDTH: u32 = 14;

/// Bond attached to the site at `order position`, referencing either a
/// window offset or a fixed seam spin.
enum AttachedBond {
    Window { span: u32, neg: bool },
    Seam { row: u32, neg: bool },
}

/// Exact ground energy and degeneracy of a square or triangular strip of
/// width ≤ 14 (the row count).  Counts are exact big integers; the state
/// list is never produced.
pub fn transfer_matrix_count(lattice: &Lattice, j: &CouplingConfig) -> Result<GroundStateResult> {
    match lattice.kind() {
        LatticeKind::Square | LatticeKind::Triangular => {}
        other => {
            return Err(Error::invalid(format!(
                "transfer matrix supports square and triangular strips, not {other:?}"
            )))
        }
    }
    if !lattice.is_pristine() {
        return Err(Error::invalid(
            "transfer matrix requires an undiluted strip",
        ));
    }
    if j.len() != lattice.n_bonds() {
        return Err(Error::invalid("coupling configuration size mismatch"));
    }
    let rows = lattice.rows();
    let cols = lattice.cols();
    if rows > MAX_STRIP_WIDTH {
        return Err(Error::cap(format!(
            "strip width {rows} exceeds the transfer-matrix cap {MAX_STRIP_WIDTH}"
        )));
    }
    let window = rows + 1;
    let seam = lattice.boundary().wraps_cols();

    // Order position of (r, c) is c*rows + r; classify every bond against
    // the site placed later.
    let n = (rows * cols) as usize;
    let pos_of = |r: u32, c: u32| (c * rows + r) as usize;
    let mut attached: Vec<Vec<AttachedBond>> = (0..n).map(|_| Vec::new()).collect();
    for (i, bond) in lattice.bonds().iter().enumerate() {
        let (ra, ca) = lattice.coords(bond.a);
        let (rb, cb) = lattice.coords(bond.b);
        let (pa, pb) = (pos_of(ra, ca), pos_of(rb, cb));
        let neg = j.is_negative(crate::lattice::BondId(i as u32));
        let (early, late) = if pa < pb { (pa, pb) } else { (pb, pa) };
        let span = (late - early) as u32;
        if span <= window {
            attached[late].push(AttachedBond::Window { span, neg });
        } else if seam && early < rows as usize {
            attached[late].push(AttachedBond::Seam {
                row: early as u32,
                neg,
            });
        } else {
            return Err(Error::invalid(
                "lattice bonds do not fit the strip window; topology unsupported",
            ));
        }
    }

    let mut best_energy = i64::MAX;
    let mut best_count = BigUint::zero();
    let seam_states: u64 = if seam { 1 << rows } else { 1 };
    for seam_state in 0..seam_states {
        let (e, c) = run_dp(&attached, rows, n, window, seam.then_some(seam_state));
        if e < best_energy {
            best_energy = e;
            best_count = c;
        } else if e == best_energy {
            best_count += c;
        }
    }

    Ok(GroundStateResult {
        energy: best_energy,
        degeneracy: best_count,
        states: None,
        backend: Backend::TransferMatrix,
        elapsed_ms: None,
    })
}

/// One dynamic-programming sweep; with `seam_state` set, the first
/// column's spins are forced to its bits.
fn run_dp(
    attached: &[Vec<AttachedBond>],
    rows: u32,
    n: usize,
    window: u32,
    seam_state: Option<u64>,
) -> (i64, BigUint) {
    let size = 1usize << window;
    let mask = (size - 1) as u64;
    // table[w] = (min energy, count) over assignments whose recent spins
    // spell w.
    let mut table: Vec<Option<(i64, BigUint)>> = vec![None; size];
    let mut next: Vec<Option<(i64, BigUint)>> = vec![None; size];
    table[0] = Some((0, BigUint::from(1u32)));

    for (pos, bonds) in attached.iter().enumerate().take(n) {
        for slot in next.iter_mut() {
            *slot = None;
        }
        let forced: Option<u64> = seam_state.and_then(|s| {
            if pos < rows as usize {
                Some((s >> pos) & 1)
            } else {
                None
            }
        });
        for (w, entry) in table.iter().enumerate() {
            let Some((e, count)) = entry else { continue };
            let choices: &[u64] = match forced {
                Some(0) => &[0],
                Some(_) => &[1],
                None => &[0, 1],
            };
            for &b in choices {
                let mut de = 0i64;
                for bond in bonds {
                    let (partner, neg) = match bond {
                        AttachedBond::Window { span, neg } => {
                            ((w as u64 >> (span - 1)) & 1, *neg)
                        }
                        AttachedBond::Seam { row, neg } => {
                            ((seam_state.unwrap() >> row) & 1, *neg)
                        }
                    };
                    let unhappy = neg ^ (b == 1) ^ (partner == 1);
                    de += if unhappy { 1 } else { -1 };
                }
                let nw = (((w as u64) << 1) | b) & mask;
                let ne = e + de;
                match &mut next[nw as usize] {
                    slot @ None => *slot = Some((ne, count.clone())),
                    Some((cur_e, cur_c)) => {
                        if ne < *cur_e {
                            *cur_e = ne;
                            *cur_c = count.clone();
                        } else if ne == *cur_e {
                            *cur_c += count;
                        }
                    }
                }
            }
        }
        std::mem::swap(&mut table, &mut next);
    }

    let mut best = i64::MAX;
    let mut total = BigUint::zero();
    for entry in table.iter().flatten() {
        let (e, c) = entry;
        if *e < best {
            best = *e;
            total = c.clone();
        } else if *e == best {
            total += c;
        }
    }
    (best, total)
}
