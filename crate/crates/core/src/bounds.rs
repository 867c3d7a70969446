//! The probabilistic layer: parity counting, f(p), tiling-based
//! degeneracy lower bounds, and entropy-density reports.
//!
//! For a random coupling configuration (each bond negative with
//! probability p) the chance that a given block realises the module
//! pattern is `orientations · f(p) · p_s^|M| · p_b^|B(M)|`; with k
//! disjoint candidate blocks the expected module count is k times that,
//! and every module contributes an independent factor 2 to the ground
//! state degeneracy.  At p = 1/2 the odd/even parity counting collapses
//! f to an exact power of two.

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use rand::{Rng, RngCore};
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::ising::CouplingConfig;
use crate::lattice::{Lattice, LatticeKind};
use crate::modules::{matches, ModuleSpec};
use crate::seeds;

/// Completions of the n−q free bonds of a closed curve by sign, given
/// `specified_negatives` of the q fixed bonds are negative.  Returns
/// (ways to an odd total, ways to an even total); the two are always
/// equal — each is 2^(n−q−1).  This is what makes the frustration of a
/// plaquette with a free bond a fair coin under random couplings.
pub fn parity_completion_counts(
    n: u32,
    q: u32,
    specified_negatives: u32,
) -> Result<(BigUint, BigUint)> {
    if q >= n {
        return Err(Error::invalid(format!(
            "parity counting needs at least one free bond (q = {q}, n = {n})"
        )));
    }
    if specified_negatives > q {
        return Err(Error::invalid(format!(
            "{specified_negatives} specified negatives exceed q = {q}"
        )));
    }
    let free = n - q;
    let mut odd = BigUint::zero();
    let mut even = BigUint::zero();
    let mut binom = BigUint::one();
    for j in 0..=free {
        if (specified_negatives + j) % 2 == 1 {
            odd += &binom;
        } else {
            even += &binom;
        }
        // C(free, j+1) from C(free, j).
        if j < free {
            binom = binom * BigUint::from(free - j) / BigUint::from(j + 1);
        }
    }
    Ok((odd, even))
}

/// f(1/2) = 2^(−m) with m the number of specified plaquettes, licensed by
/// the degree-of-freedom ordering the spec carries.
pub fn f_of_half(spec: &ModuleSpec) -> Result<BigRational> {
    let m = spec.n_specified() as u32;
    Ok(BigRational::new(BigInt::one(), BigInt::one() << m))
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct DensityEstimate {
    pub matches: u64,
    pub samples: u64,
    pub estimate: f64,
    pub stderr: f64,
}

/// Per-orientation parity tests over the block's bond bits.
fn orientation_masks(spec: &ModuleSpec) -> Result<Vec<Vec<(u128, bool)>>> {
    if spec.n_bonds() > 128 {
        return Err(Error::cap("block has more than 128 bonds"));
    }
    let block = spec.block();
    Ok((0..spec.n_orientations())
        .map(|o| {
            let constraints = spec.orientation(o);
            block
                .plaquettes()
                .iter()
                .filter_map(|p| {
                    constraints[p.id.0 as usize].map(|frustrated| {
                        let mut mask = 0u128;
                        for &b in &p.bonds {
                            mask |= 1u128 << b.0;
                        }
                        (mask, frustrated)
                    })
                })
                .collect()
        })
        .collect())
}

#[inline]
fn mask_matches(bits: u128, masks: &[Vec<(u128, bool)>]) -> bool {
    masks.iter().any(|orientation| {
        orientation
            .iter()
            .all(|&(mask, frustrated)| ((bits & mask).count_ones() & 1 == 1) == frustrated)
    })
}

/// Monte Carlo estimate of the probability that a random coupling on the
/// block matches the pattern in any orientation.  For p = 1/2 this
/// estimates orientations · f(1/2).
pub fn empirical_module_density(
    spec: &ModuleSpec,
    p: f64,
    n_samples: u64,
    seed: u64,
) -> Result<DensityEstimate> {
    if !(0.0..=1.0).contains(&p) || !p.is_finite() {
        return Err(Error::invalid(format!("p = {p} outside [0, 1]")));
    }
    if n_samples == 0 {
        return Err(Error::invalid("need at least one sample"));
    }
    let masks = orientation_masks(spec)?;
    let n_bonds = spec.n_bonds();

    // Fixed chunk layout so the result is independent of thread count.
    const CHUNKS: u64 = 512;
    let n_chunks = CHUNKS.min(n_samples);
    let matches_total: u64 = (0..n_chunks)
        .into_par_iter()
        .map(|chunk| {
            let lo = chunk * n_samples / n_chunks;
            let hi = (chunk + 1) * n_samples / n_chunks;
            let mut rng = seeds::stream_rng(seed, 1 + chunk);
            let mut hits = 0u64;
            if p == 0.5 {
                for _ in lo..hi {
                    let mut bits = rng.next_u64() as u128;
                    if n_bonds > 64 {
                        bits |= (rng.next_u64() as u128) << 64;
                    }
                    if mask_matches(bits, &masks) {
                        hits += 1;
                    }
                }
            } else {
                for _ in lo..hi {
                    let mut bits = 0u128;
                    for b in 0..n_bonds {
                        if rng.random_bool(p) {
                            bits |= 1u128 << b;
                        }
                    }
                    if mask_matches(bits, &masks) {
                        hits += 1;
                    }
                }
            }
            hits
        })
        .sum();

    let estimate = matches_total as f64 / n_samples as f64;
    let stderr = (estimate * (1.0 - estimate) / n_samples as f64).sqrt();
    Ok(DensityEstimate {
        matches: matches_total,
        samples: n_samples,
        estimate,
        stderr,
    })
}

/// Tiling certificate: which tile anchors match the pattern.
#[derive(Clone, Debug, Serialize)]
pub struct DegeneracyBound {
    /// Number of tiles whose coupling realises the module; the implied
    /// bound is 2^n_found.
    pub n_found: u32,
    pub tiles: u32,
    pub matching_anchors: Vec<u32>,
}

/// Tile the lattice by axis-aligned block translates anchored at site 0
/// and count matching tiles.  Disjointness of the tiles makes 2^n_found a
/// sound lower bound on the ground-state degeneracy.
pub fn degeneracy_lower_bound(
    spec: &ModuleSpec,
    lattice: &Lattice,
    j: &CouplingConfig,
) -> Result<DegeneracyBound> {
    if lattice.kind() != spec.kind() {
        return Err(Error::invalid("lattice kind does not match the module"));
    }
    let step_r = spec.block().rows();
    let mut step_c = spec.block().cols();
    if spec.kind() == LatticeKind::Hexagonal && step_c % 2 == 1 {
        // Keep anchors on even brick parity.
        step_c += 1;
    }
    if !lattice.rows().is_multiple_of(step_r) || !lattice.cols().is_multiple_of(step_c) {
        return Err(Error::invalid(format!(
            "{}x{} lattice is not tileable by {}x{} block steps",
            lattice.rows(),
            lattice.cols(),
            step_r,
            step_c
        )));
    }
    let mut n_found = 0u32;
    let mut tiles = 0u32;
    let mut matching = Vec::new();
    for ar in (0..lattice.rows()).step_by(step_r as usize) {
        for ac in (0..lattice.cols()).step_by(step_c as usize) {
            let anchor = lattice.site_at(ar, ac);
            tiles += 1;
            if matches(spec, lattice, j, anchor)? {
                n_found += 1;
                matching.push(anchor.0);
            }
        }
    }
    Ok(DegeneracyBound {
        n_found,
        tiles,
        matching_anchors: matching,
    })
}

#[derive(Clone, Copy, PartialEq, Eq, Debug, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundMethod {
    ClosedForm,
    MonteCarlo,
}

/// Everything that goes into (and comes out of) a degeneracy-bound
/// computation: with k candidate blocks and per-block probability q, the
/// degeneracy exceeds 2^(k·q·(1−ε)) with probability at least 1−δ once k
/// is large enough; k0 makes that quantitative via a Hoeffding tail.
#[derive(Clone, Debug, Serialize)]
pub struct BoundReport {
    pub spec: String,
    pub lattice_size: u64,
    pub block_sites: u32,
    pub block_bonds: u32,
    pub orientations: u32,
    pub k: u64,
    pub p: f64,
    pub p_s: f64,
    pub p_b: f64,
    pub method: BoundMethod,
    pub f_value: f64,
    pub f_exact: Option<String>,
    /// Per-block probability q = orientations · f(p) · p_s^|M| · p_b^|B|.
    pub q_value: f64,
    pub q_exact: Option<String>,
    pub epsilon: f64,
    pub delta: f64,
    pub exponent_lower: f64,
    pub entropy_density_lower: f64,
    /// q / |M|: the ε→0, partition-exact limit of the density bound.
    pub density_constant: f64,
    pub density_constant_exact: Option<String>,
    /// Smallest k for which the Hoeffding tail guarantees the (ε, δ)
    /// statement.
    pub k0_sufficient: f64,
    pub samples: Option<u64>,
    pub stderr: Option<f64>,
    #[serde(skip)]
    pub q_rational: Option<BigRational>,
    #[serde(skip)]
    pub density_constant_rational: Option<BigRational>,
}

impl BoundReport {
    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(self).expect("report serializes")
    }

    pub fn csv_header() -> &'static str {
        "spec,p,p_s,p_b,k,q,epsilon,delta,exponent,density,method,samples,stderr"
    }

    pub fn to_csv_row(&self) -> String {
        let method = match self.method {
            BoundMethod::ClosedForm => "closed_form",
            BoundMethod::MonteCarlo => "monte_carlo",
        };
        let opt_u64 = |v: Option<u64>| v.map_or(String::new(), |x| x.to_string());
        let opt_f64 = |v: Option<f64>| v.map_or(String::new(), |x| format!("{x}"));
        format!(
            "{},{},{},{},{},{},{},{},{},{},{},{},{}",
            self.spec,
            self.p,
            self.p_s,
            self.p_b,
            self.k,
            self.q_value,
            self.epsilon,
            self.delta,
            self.exponent_lower,
            self.entropy_density_lower,
            method,
            opt_u64(self.samples),
            opt_f64(self.stderr),
        )
    }
}

#[allow(clippy::too_many_arguments)]
pub fn probabilistic_bound_report(
    spec: &ModuleSpec,
    lattice_size: u64,
    p: f64,
    p_s: f64,
    p_b: f64,
    epsilon: f64,
    delta: f64,
    monte_carlo: Option<(u64, u64)>,
) -> Result<BoundReport> {
    for (name, v) in [("epsilon", epsilon), ("delta", delta)] {
        if !(v > 0.0 && v < 1.0) {
            return Err(Error::invalid(format!("{name} = {v} outside (0, 1)")));
        }
    }
    for (name, v) in [("p", p), ("p_s", p_s), ("p_b", p_b)] {
        if !(0.0..=1.0).contains(&v) || !v.is_finite() {
            return Err(Error::invalid(format!("{name} = {v} outside [0, 1]")));
        }
    }
    let block_sites = spec.n_sites() as u32;
    let block_bonds = spec.n_bonds() as u32;
    let orientations = spec.n_orientations() as u32;
    let k = lattice_size / block_sites as u64;

    let (method, f_value, f_rational, samples, stderr) = if p == 0.5 {
        let f = f_of_half(spec)?;
        (
            BoundMethod::ClosedForm,
            rational_to_f64(&f),
            Some(f),
            None,
            None,
        )
    } else {
        let (n_samples, mc_seed) = monte_carlo.unwrap_or((1_000_000, 0));
        let est = empirical_module_density(spec, p, n_samples, mc_seed)?;
        // The estimate already counts any orientation; divide the
        // orientation factor back out so q below is uniform.
        (
            BoundMethod::MonteCarlo,
            est.estimate / orientations as f64,
            None,
            Some(est.samples),
            Some(est.stderr),
        )
    };

    let dilution = p_s.powi(block_sites as i32) * p_b.powi(block_bonds as i32);
    let q_value = orientations as f64 * f_value * dilution;
    let q_rational = f_rational.as_ref().and_then(|f| {
        if p_s == 1.0 && p_b == 1.0 {
            Some(f * BigRational::from(BigInt::from(orientations)))
        } else {
            None
        }
    });
    let exponent_lower = k as f64 * q_value * (1.0 - epsilon);
    let entropy_density_lower = if lattice_size == 0 {
        0.0
    } else {
        exponent_lower / lattice_size as f64
    };
    let density_constant = q_value / block_sites as f64;
    let density_constant_rational = q_rational
        .as_ref()
        .map(|q| q / BigRational::from(BigInt::from(block_sites)));
    // P[n ≤ kq(1−ε)] ≤ exp(−2 k (qε)²) ≤ δ  ⇔  k ≥ ln(1/δ) / (2 q² ε²).
    let k0_sufficient = if q_value > 0.0 {
        ((1.0 / delta).ln() / (2.0 * q_value * q_value * epsilon * epsilon)).ceil()
    } else {
        f64::INFINITY
    };

    Ok(BoundReport {
        spec: spec.name().to_string(),
        lattice_size,
        block_sites,
        block_bonds,
        orientations,
        k,
        p,
        p_s,
        p_b,
        method,
        f_value,
        f_exact: f_rational.as_ref().map(|r| r.to_string()),
        q_value,
        q_exact: q_rational.as_ref().map(|r| r.to_string()),
        epsilon,
        delta,
        exponent_lower,
        entropy_density_lower,
        density_constant,
        density_constant_exact: density_constant_rational.as_ref().map(|r| r.to_string()),
        k0_sufficient,
        samples,
        stderr,
        q_rational,
        density_constant_rational,
    })
}

/// log₂(degeneracy) / |Λ| with an arbitrary-precision logarithm.
pub fn entropy_density(lattice: &Lattice, degeneracy: &BigUint) -> Result<f64> {
    if degeneracy.is_zero() {
        return Err(Error::invalid("degeneracy must be at least 1"));
    }
    Ok(log2_biguint(degeneracy) / lattice.n_sites() as f64)
}

/// Base-2 logarithm of a big integer, exact in the exponent and using the
/// top 53 bits for the mantissa.
pub fn log2_biguint(x: &BigUint) -> f64 {
    let bits = x.bits();
    if bits <= 53 {
        return (x.to_u64().unwrap() as f64).log2();
    }
    let top = (x >> (bits - 53)).to_u64().unwrap();
    (top as f64).log2() + (bits - 53) as f64
}

fn rational_to_f64(r: &BigRational) -> f64 {
    r.to_f64().unwrap_or_else(|| {
        let num = r.numer().to_f64().unwrap_or(f64::NAN);
        let den = r.denom().to_f64().unwrap_or(f64::NAN);
        num / den
    })
}
