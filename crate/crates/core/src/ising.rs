//! The ±J algebra: energy, unhappy bonds, curve parity, frustration,
//! entropic sets.
//!
//! Spins and couplings are packed bit-vectors with bit 0 ↦ +1 and
//! bit 1 ↦ −1, so a bond is unhappy exactly when the XOR of its coupling
//! bit and its two spin bits is 1.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::bits::Bits;
use crate::error::{Error, Result};
use crate::lattice::{BondId, Lattice, LatticeKind, PlaquetteId, SiteId, SiteSet};

/// Assignment of ±1 to every bond of a lattice.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct CouplingConfig {
    /// Bit set ⇔ the bond is a negative-J bond.
    neg: Bits,
}

impl CouplingConfig {
    pub fn all_positive(lattice: &Lattice) -> Self {
        CouplingConfig {
            neg: Bits::new(lattice.n_bonds()),
        }
    }

    pub fn all_negative(lattice: &Lattice) -> Self {
        let mut j = Self::all_positive(lattice);
        for i in 0..lattice.n_bonds() {
            j.neg.set(i, true);
        }
        j
    }

    /// Each bond negative independently with probability `p`.
    pub fn random<R: Rng + ?Sized>(lattice: &Lattice, p: f64, rng: &mut R) -> Self {
        let mut j = Self::all_positive(lattice);
        for i in 0..lattice.n_bonds() {
            if rng.random_bool(p) {
                j.neg.set(i, true);
            }
        }
        j
    }

    pub fn len(&self) -> usize {
        self.neg.len()
    }

    pub fn is_empty(&self) -> bool {
        self.neg.is_empty()
    }

    #[inline]
    pub fn is_negative(&self, b: BondId) -> bool {
        self.neg.get(b.0 as usize)
    }

    pub fn get(&self, b: BondId) -> i8 {
        if self.is_negative(b) {
            -1
        } else {
            1
        }
    }

    pub fn set(&mut self, b: BondId, value: i8) {
        assert!(value == 1 || value == -1, "couplings are ±1");
        self.neg.set(b.0 as usize, value == -1);
    }

    pub fn flip_bond(&mut self, b: BondId) {
        self.neg.toggle(b.0 as usize);
    }

    /// Gauge transformation: flip every coupling incident to `site`.
    pub fn gauge_flip_site(&mut self, lattice: &Lattice, site: SiteId) {
        for &(_, bid) in lattice.adjacency(site) {
            self.flip_bond(bid);
        }
    }

    pub fn to_json(&self, lattice: &Lattice) -> serde_json::Value {
        let bonds: Vec<(u32, u32, i8)> = lattice
            .bonds()
            .iter()
            .enumerate()
            .map(|(i, bond)| (bond.a.0, bond.b.0, self.get(BondId(i as u32))))
            .collect();
        serde_json::json!({ "bonds": bonds })
    }

    pub fn from_json(lattice: &Lattice, value: &serde_json::Value) -> Result<Self> {
        #[derive(Deserialize)]
        struct File {
            bonds: Vec<(u32, u32, i8)>,
        }
        let file: File = serde_json::from_value(value.clone())
            .map_err(|e| Error::invalid(format!("bad coupling file: {e}")))?;
        if file.bonds.len() != lattice.n_bonds() {
            return Err(Error::invalid(format!(
                "coupling file lists {} bonds, lattice has {}",
                file.bonds.len(),
                lattice.n_bonds()
            )));
        }
        let mut j = Self::all_positive(lattice);
        for (a, b, v) in file.bonds {
            let id = lattice
                .bond_id(SiteId(a), SiteId(b))
                .ok_or_else(|| Error::invalid(format!("bond ({a},{b}) not in lattice")))?;
            if v != 1 && v != -1 {
                return Err(Error::invalid(format!("coupling {v} on ({a},{b}) is not ±1")));
            }
            j.set(id, v);
        }
        Ok(j)
    }
}

/// Assignment of ±1 to every present site.
#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub struct SpinState {
    /// Bit set ⇔ spin −1.  Indexed by grid id; bits at absent sites are 0.
    neg: Bits,
}

impl SpinState {
    pub fn all_up(lattice: &Lattice) -> Self {
        SpinState {
            neg: Bits::new(lattice.grid_len()),
        }
    }

    pub fn random<R: Rng + ?Sized>(lattice: &Lattice, rng: &mut R) -> Self {
        let mut s = Self::all_up(lattice);
        for site in lattice.present_sites() {
            if rng.random_bool(0.5) {
                s.neg.set(site.0 as usize, true);
            }
        }
        s
    }

    #[inline]
    pub fn is_down(&self, s: SiteId) -> bool {
        self.neg.get(s.0 as usize)
    }

    pub fn get(&self, s: SiteId) -> i8 {
        if self.is_down(s) {
            -1
        } else {
            1
        }
    }

    pub fn set(&mut self, s: SiteId, value: i8) {
        assert!(value == 1 || value == -1, "spins are ±1");
        self.neg.set(s.0 as usize, value == -1);
    }

    pub fn flip_site(&mut self, s: SiteId) {
        self.neg.toggle(s.0 as usize);
    }

    /// σ_S: the state with the spins of `set` negated.
    pub fn flip_set(&self, set: &SiteSet) -> SpinState {
        let mut out = self.clone();
        for site in set.iter() {
            out.neg.toggle(site.0 as usize);
        }
        out
    }

    /// Global flip −σ over the present sites.
    pub fn negated(&self, lattice: &Lattice) -> SpinState {
        let mut out = self.clone();
        for site in lattice.present_sites() {
            out.neg.toggle(site.0 as usize);
        }
        out
    }

    pub fn to_json(&self, lattice: &Lattice) -> serde_json::Value {
        let spins: Vec<i8> = lattice.present_sites().map(|s| self.get(s)).collect();
        serde_json::json!({ "spins": spins })
    }

    /// Spins listed per present site in ascending site order.
    pub fn from_json(lattice: &Lattice, value: &serde_json::Value) -> Result<Self> {
        #[derive(Deserialize)]
        struct File {
            spins: Vec<i8>,
        }
        let file: File = serde_json::from_value(value.clone())
            .map_err(|e| Error::invalid(format!("bad spin file: {e}")))?;
        if file.spins.len() != lattice.n_sites() {
            return Err(Error::invalid(format!(
                "spin file lists {} spins, lattice has {} sites",
                file.spins.len(),
                lattice.n_sites()
            )));
        }
        let mut state = Self::all_up(lattice);
        for (site, &v) in lattice.present_sites().zip(&file.spins) {
            if v != 1 && v != -1 {
                return Err(Error::invalid(format!("spin {v} is not ±1")));
            }
            state.set(site, v);
        }
        Ok(state)
    }
}

#[inline]
fn bond_unhappy(j: &CouplingConfig, sigma: &SpinState, lattice: &Lattice, b: BondId) -> bool {
    let bond = lattice.bond(b);
    j.is_negative(b) ^ sigma.is_down(bond.a) ^ sigma.is_down(bond.b)
}

/// Number of unhappy bonds |U(Λ, J, σ)|.
pub fn unhappy_count(lattice: &Lattice, j: &CouplingConfig, sigma: &SpinState) -> usize {
    (0..lattice.n_bonds() as u32)
        .filter(|&i| bond_unhappy(j, sigma, lattice, BondId(i)))
        .count()
}

/// The set U(Λ, J, σ) of bonds with J σ σ = −1.
pub fn unhappy_bonds(lattice: &Lattice, j: &CouplingConfig, sigma: &SpinState) -> Vec<BondId> {
    (0..lattice.n_bonds() as u32)
        .map(BondId)
        .filter(|&b| bond_unhappy(j, sigma, lattice, b))
        .collect()
}

/// H(Λ, J, σ) = −Σ J σ σ, summed bond by bond.
pub fn energy(lattice: &Lattice, j: &CouplingConfig, sigma: &SpinState) -> i64 {
    let mut total = 0i64;
    for i in 0..lattice.n_bonds() as u32 {
        if bond_unhappy(j, sigma, lattice, BondId(i)) {
            total += 1;
        } else {
            total -= 1;
        }
    }
    debug_assert_eq!(total, energy_from_unhappy(lattice, j, sigma));
    total
}

/// The same energy through the unhappy-bond count: 2|U| − |B|.
pub fn energy_from_unhappy(lattice: &Lattice, j: &CouplingConfig, sigma: &SpinState) -> i64 {
    2 * unhappy_count(lattice, j, sigma) as i64 - lattice.n_bonds() as i64
}

/// A walk along bonds; sites and bonds may repeat.
#[derive(Clone, Debug)]
pub struct Curve {
    sites: Vec<SiteId>,
    bonds: Vec<BondId>,
}

impl Curve {
    /// Validate a site sequence s_0..s_n (n ≥ 1 steps, every consecutive
    /// pair a bond of the lattice).
    pub fn new(lattice: &Lattice, sites: Vec<SiteId>) -> Result<Curve> {
        if sites.len() < 2 {
            return Err(Error::invalid("a curve has length at least 1"));
        }
        let mut bonds = Vec::with_capacity(sites.len() - 1);
        for w in sites.windows(2) {
            match lattice.bond_id(w[0], w[1]) {
                Some(b) => bonds.push(b),
                None => {
                    return Err(Error::invalid(format!(
                        "sites {} and {} are not bonded",
                        w[0].0, w[1].0
                    )))
                }
            }
        }
        Ok(Curve { sites, bonds })
    }

    pub fn is_closed(&self) -> bool {
        self.sites.first() == self.sites.last()
    }

    pub fn len(&self) -> usize {
        self.bonds.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bonds.is_empty()
    }

    pub fn sites(&self) -> &[SiteId] {
        &self.sites
    }

    pub fn bonds(&self) -> &[BondId] {
        &self.bonds
    }
}

/// Along a closed curve the parity of negative-J bonds equals the parity
/// of unhappy bonds (the product of J σ σ equals the product of J, since
/// every spin along the cycle appears squared).  Bonds count with
/// multiplicity.  Returns that equality; it holds for every valid input,
/// so this is an assertable oracle.
pub fn curve_parity_check(
    lattice: &Lattice,
    j: &CouplingConfig,
    sigma: &SpinState,
    curve: &Curve,
) -> Result<bool> {
    if !curve.is_closed() {
        return Err(Error::invalid("curve parity is defined for closed curves"));
    }
    let mut neg_parity = false;
    let mut unhappy_parity = false;
    for &b in curve.bonds() {
        neg_parity ^= j.is_negative(b);
        unhappy_parity ^= bond_unhappy(j, sigma, lattice, b);
    }
    Ok(neg_parity == unhappy_parity)
}

#[derive(Clone, Copy, PartialEq, Eq, Debug, Serialize, Deserialize)]
pub enum Frustration {
    Frustrated,
    Unfrustrated,
    Unspecified,
}

/// Per-plaquette frustration, indexed by plaquette id.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct FrustrationPattern {
    values: Vec<Frustration>,
}

impl FrustrationPattern {
    pub fn get(&self, p: PlaquetteId) -> Frustration {
        self.values[p.0 as usize]
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn frustrated_ids(&self) -> Vec<PlaquetteId> {
        self.values
            .iter()
            .enumerate()
            .filter(|(_, v)| **v == Frustration::Frustrated)
            .map(|(i, _)| PlaquetteId(i as u32))
            .collect()
    }
}

/// A plaquette is frustrated iff the product of J over its bond cycle is
/// −1; by the closed-curve parity this forces at least one unhappy bond
/// there in every spin state.
pub fn plaquette_frustration(lattice: &Lattice, j: &CouplingConfig) -> Result<FrustrationPattern> {
    if lattice.kind() == LatticeKind::General && lattice.plaquettes().is_empty() {
        return Err(Error::invalid(
            "general lattice without explicit plaquettes has no frustration pattern",
        ));
    }
    let values = lattice
        .plaquettes()
        .iter()
        .map(|p| {
            let neg = p.bonds.iter().filter(|&&b| j.is_negative(b)).count();
            if neg % 2 == 1 {
                Frustration::Frustrated
            } else {
                Frustration::Unfrustrated
            }
        })
        .collect();
    Ok(FrustrationPattern { values })
}

/// S is entropic relative to σ iff its contour bonds split evenly between
/// unhappy and happy; equivalently flipping S preserves the energy.
pub fn is_entropic(
    lattice: &Lattice,
    j: &CouplingConfig,
    sigma: &SpinState,
    s: &SiteSet,
) -> Result<bool> {
    let contour = lattice.boundary_bonds(s)?;
    let unhappy = contour
        .iter()
        .filter(|&&b| bond_unhappy(j, sigma, lattice, b))
        .count();
    Ok(2 * unhappy == contour.len())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::{BoundaryCondition, LatticeKind};
    use crate::seeds;

    fn square2x2() -> Lattice {
        Lattice::build(LatticeKind::Square, 2, 2, BoundaryCondition::Free).unwrap()
    }

    #[test]
    fn ferromagnet_energy() {
        let lat = square2x2();
        let j = CouplingConfig::all_positive(&lat);
        let s = SpinState::all_up(&lat);
        assert_eq!(energy(&lat, &j, &s), -4);
        assert!(unhappy_bonds(&lat, &j, &s).is_empty());
    }

    #[test]
    fn single_negative_bond() {
        let lat = square2x2();
        let mut j = CouplingConfig::all_positive(&lat);
        j.set(BondId(0), -1);
        let s = SpinState::all_up(&lat);
        assert_eq!(energy(&lat, &j, &s), -2);
        assert_eq!(unhappy_count(&lat, &j, &s), 1);
    }

    #[test]
    fn all_negative_all_unhappy() {
        let lat = square2x2();
        let j = CouplingConfig::all_negative(&lat);
        let s = SpinState::all_up(&lat);
        assert_eq!(unhappy_count(&lat, &j, &s), lat.n_bonds());
    }

    #[test]
    fn global_flip_preserves_energy() {
        let lat = Lattice::build(LatticeKind::Triangular, 4, 4, BoundaryCondition::Toroidal)
            .unwrap();
        let mut rng = seeds::stream_rng(5, 0);
        for _ in 0..50 {
            let j = CouplingConfig::random(&lat, 0.5, &mut rng);
            let s = SpinState::random(&lat, &mut rng);
            assert_eq!(energy(&lat, &j, &s), energy(&lat, &j, &s.negated(&lat)));
        }
    }

    #[test]
    fn unhappy_count_matches_energy_identity() {
        let lat = Lattice::build(LatticeKind::Hexagonal, 4, 6, BoundaryCondition::Cylindrical)
            .unwrap();
        let mut rng = seeds::stream_rng(6, 0);
        for _ in 0..200 {
            let j = CouplingConfig::random(&lat, 0.5, &mut rng);
            let s = SpinState::random(&lat, &mut rng);
            let h = energy(&lat, &j, &s);
            let u = unhappy_count(&lat, &j, &s) as i64;
            assert_eq!(u, (lat.n_bonds() as i64 + h) / 2);
        }
    }

    #[test]
    fn curve_parity_trivial_and_doubled_bond() {
        let lat = square2x2();
        let j = CouplingConfig::all_positive(&lat);
        let s = SpinState::all_up(&lat);
        let cycle = Curve::new(
            &lat,
            vec![SiteId(0), SiteId(1), SiteId(3), SiteId(2), SiteId(0)],
        )
        .unwrap();
        assert!(curve_parity_check(&lat, &j, &s, &cycle).unwrap());

        // Traversing a bond twice squares its factors out.
        let there_and_back = Curve::new(&lat, vec![SiteId(0), SiteId(1), SiteId(0)]).unwrap();
        assert!(curve_parity_check(&lat, &j, &s, &there_and_back).unwrap());

        let open = Curve::new(&lat, vec![SiteId(0), SiteId(1)]).unwrap();
        assert!(curve_parity_check(&lat, &j, &s, &open).is_err());
    }

    #[test]
    fn frustration_single_negative_interior_bond() {
        let lat = Lattice::build(LatticeKind::Square, 4, 4, BoundaryCondition::Free).unwrap();
        let mut j = CouplingConfig::all_positive(&lat);
        let all_clear = plaquette_frustration(&lat, &j).unwrap();
        assert!(all_clear.frustrated_ids().is_empty());

        // An interior bond lies in exactly two plaquettes.
        let b = lat.bond_id(lat.site_at(1, 1), lat.site_at(1, 2)).unwrap();
        j.set(b, -1);
        let pattern = plaquette_frustration(&lat, &j).unwrap();
        assert_eq!(pattern.frustrated_ids().len(), 2);
    }

    #[test]
    fn frustration_is_gauge_invariant() {
        let lat = Lattice::build(LatticeKind::Triangular, 4, 4, BoundaryCondition::Free).unwrap();
        let mut rng = seeds::stream_rng(7, 0);
        for _ in 0..20 {
            let j = CouplingConfig::random(&lat, 0.5, &mut rng);
            let before = plaquette_frustration(&lat, &j).unwrap();
            for site in lat.present_sites() {
                let mut gauged = j.clone();
                gauged.gauge_flip_site(&lat, site);
                assert_eq!(plaquette_frustration(&lat, &gauged).unwrap(), before);
            }
        }
    }

    #[test]
    fn flip_is_involution_and_complements_unhappy_set() {
        let lat = Lattice::build(LatticeKind::Square, 4, 4, BoundaryCondition::Toroidal).unwrap();
        let mut rng = seeds::stream_rng(8, 0);
        for _ in 0..100 {
            let j = CouplingConfig::random(&lat, 0.5, &mut rng);
            let sigma = SpinState::random(&lat, &mut rng);
            let sites: Vec<SiteId> = lat
                .present_sites()
                .filter(|_| rng.random_bool(0.4))
                .collect();
            let s = SiteSet::from_sites(&lat, &sites);

            let flipped = sigma.flip_set(&s);
            assert_eq!(flipped.flip_set(&s), sigma);

            // U_S = (U \ B_S) ∪ (B_S \ U), and the cardinality identity.
            let u: std::collections::HashSet<BondId> =
                unhappy_bonds(&lat, &j, &sigma).into_iter().collect();
            let bs: std::collections::HashSet<BondId> =
                lat.boundary_bonds(&s).unwrap().into_iter().collect();
            let expected: std::collections::HashSet<BondId> = u
                .difference(&bs)
                .copied()
                .chain(bs.difference(&u).copied())
                .collect();
            let us: std::collections::HashSet<BondId> =
                unhappy_bonds(&lat, &j, &flipped).into_iter().collect();
            assert_eq!(us, expected);
            assert_eq!(
                us.len(),
                u.len() - bs.intersection(&u).count() + bs.difference(&u).count()
            );
        }
    }

    #[test]
    fn entropic_empty_full_and_energy_equivalence() {
        let lat = Lattice::build(LatticeKind::Square, 3, 4, BoundaryCondition::Free).unwrap();
        let mut rng = seeds::stream_rng(9, 0);
        let j = CouplingConfig::random(&lat, 0.5, &mut rng);
        let sigma = SpinState::random(&lat, &mut rng);
        assert!(is_entropic(&lat, &j, &sigma, &SiteSet::empty(&lat)).unwrap());
        assert!(is_entropic(&lat, &j, &sigma, &SiteSet::all_present(&lat)).unwrap());

        for _ in 0..200 {
            let j = CouplingConfig::random(&lat, 0.5, &mut rng);
            let sigma = SpinState::random(&lat, &mut rng);
            let sites: Vec<SiteId> = lat
                .present_sites()
                .filter(|_| rng.random_bool(0.5))
                .collect();
            let s = SiteSet::from_sites(&lat, &sites);
            let same_energy =
                energy(&lat, &j, &sigma.flip_set(&s)) == energy(&lat, &j, &sigma);
            assert_eq!(is_entropic(&lat, &j, &sigma, &s).unwrap(), same_energy);
        }
    }
}
