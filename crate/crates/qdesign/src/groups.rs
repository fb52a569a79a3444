//! The affine groups GA(GF(q)) = {x -> ux + v : u != 0} and its index-2
//! subgroup GA1 (u restricted to nonzero squares, odd q), their orbits and
//! stabilizers on blocks, 2-homogeneity certification, and the block-set
//! equalities relating {B_(f,b,c)} to the affine orbit of the base image set.

use std::collections::HashSet;

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::bitset::BitBlock;
use crate::designs::Block;
use crate::family::{image_set, FamilyError, FamilySpec};
use crate::field::{Elem, FieldCtx, FieldError};

/// Explicit orbit/stabilizer enumeration refuses beyond this group order.
pub const MAX_GROUP_ORDER: u64 = 10_000_000;
/// Explicit 2-homogeneity certification budget.
pub const MAX_HOMOGENEITY_Q: u32 = 512;
/// Full block-set materialization budget.
pub const MAX_EQUALITY_Q: u32 = 2048;

#[derive(Debug, Error)]
pub enum GroupError {
    #[error("group order {0} exceeds the enumeration budget {MAX_GROUP_ORDER}")]
    OrderBudget(u64),
    #[error("q={0} exceeds the 2-homogeneity check budget {MAX_HOMOGENEITY_Q}")]
    HomogeneityBudget(u32),
    #[error("q={0} exceeds the block-set materialization budget {MAX_EQUALITY_Q}")]
    EqualityBudget(u32),
    #[error("the square-multiplier subgroup requires odd q")]
    QrGroupEvenQ,
    #[error(transparent)]
    Field(#[from] FieldError),
    #[error(transparent)]
    Family(#[from] FamilyError),
}

/// x -> ux + v with u != 0.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub struct AffineMap {
    pub u: Elem,
    pub v: Elem,
}

impl AffineMap {
    pub fn identity() -> Self {
        AffineMap { u: Elem(1), v: Elem(0) }
    }

    pub fn apply_point(&self, ctx: &FieldCtx, x: Elem) -> Elem {
        ctx.add(ctx.mul(self.u, x), self.v)
    }

    /// self after other: (self . other)(x) = self(other(x)).
    pub fn compose(&self, ctx: &FieldCtx, other: &AffineMap) -> AffineMap {
        AffineMap {
            u: ctx.mul(self.u, other.u),
            v: ctx.add(ctx.mul(self.u, other.v), self.v),
        }
    }

    pub fn inverse(&self, ctx: &FieldCtx) -> AffineMap {
        let ui = ctx.inv(self.u).expect("multiplier is nonzero");
        AffineMap {
            u: ui,
            v: ctx.neg(ctx.mul(ui, self.v)),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum GroupVariant {
    /// all u != 0; order q(q-1)
    Full,
    /// u restricted to nonzero squares (odd q); order q(q-1)/2
    Qr,
}

pub fn group_order(ctx: &FieldCtx, variant: GroupVariant) -> u64 {
    let q = ctx.q() as u64;
    match variant {
        GroupVariant::Full => q * (q - 1),
        GroupVariant::Qr => q * (q - 1) / 2,
    }
}

/// The admissible multipliers of the variant, in ascending index order.
pub fn multipliers(ctx: &FieldCtx, variant: GroupVariant) -> Result<Vec<Elem>, GroupError> {
    match variant {
        GroupVariant::Full => Ok(ctx.elements().skip(1).collect()),
        GroupVariant::Qr => {
            if ctx.p() == 2 {
                return Err(GroupError::QrGroupEvenQ);
            }
            let mut out = Vec::new();
            for e in ctx.elements().skip(1) {
                if ctx.is_qr(e)? {
                    out.push(e);
                }
            }
            Ok(out)
        }
    }
}

/// g(B) = {g(b) : b in B}, in canonical form. Never changes the size.
pub fn apply(ctx: &FieldCtx, map: &AffineMap, block: &Block) -> Block {
    Block::new(
        block
            .members()
            .iter()
            .map(|&x| map.apply_point(ctx, Elem(x)).0)
            .collect(),
    )
}

fn image_bits(ctx: &FieldCtx, u: Elem, v: Elem, members: &[u32]) -> BitBlock {
    let mut bits = BitBlock::empty(ctx.q());
    for &x in members {
        bits.insert(ctx.add(ctx.mul(u, Elem(x)), v).0);
    }
    bits
}

/// Deduplicated orbit {g(B) : g in group}, as canonical blocks sorted by
/// member list. Workers enumerate per multiplier and merge by set union.
pub fn orbit(
    ctx: &FieldCtx,
    variant: GroupVariant,
    base: &Block,
) -> Result<Vec<Block>, GroupError> {
    let order = group_order(ctx, variant);
    if order > MAX_GROUP_ORDER {
        return Err(GroupError::OrderBudget(order));
    }
    let us = multipliers(ctx, variant)?;
    let members = base.members().to_vec();
    let set: HashSet<BitBlock> = us
        .par_iter()
        .map(|&u| {
            let mut local = HashSet::new();
            let scaled = image_bits(ctx, u, Elem(0), &members).members();
            for v in ctx.elements() {
                let mut bits = BitBlock::empty(ctx.q());
                for &x in &scaled {
                    bits.insert(ctx.add(Elem(x), v).0);
                }
                local.insert(bits);
            }
            local
        })
        .reduce(HashSet::new, |mut a, b| {
            a.extend(b);
            a
        });
    let mut blocks: Vec<Block> = set.into_iter().map(|b| Block::new(b.members())).collect();
    blocks.sort_by(|a, b| a.members().cmp(b.members()));
    Ok(blocks)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct StabilizerReport {
    pub schema_version: u32,
    pub mu: u64,
    /// (u, v) index pairs fixing the block setwise
    pub elements: Vec<(u32, u32)>,
}

/// All group elements with uB + v = B. For each multiplier only the k
/// translate candidates v = b - min(uB) element can work, so the scan is
/// O(|group multipliers| * k^2) rather than O(|group| * k).
pub fn stabilizer(
    ctx: &FieldCtx,
    variant: GroupVariant,
    base: &Block,
) -> Result<StabilizerReport, GroupError> {
    let order = group_order(ctx, variant);
    if order > MAX_GROUP_ORDER {
        return Err(GroupError::OrderBudget(order));
    }
    let us = multipliers(ctx, variant)?;
    let members = base.members().to_vec();
    let base_bits = base.to_bits(ctx.q());
    let mut elements: Vec<(u32, u32)> = us
        .par_iter()
        .flat_map_iter(|&u| {
            let scaled = image_bits(ctx, u, Elem(0), &members).members();
            let c0 = Elem(scaled[0]);
            let mut found = Vec::new();
            // uB + v = B forces c0 + v to land in B
            for &b in &members {
                let v = ctx.sub(Elem(b), c0);
                if scaled
                    .iter()
                    .all(|&x| base_bits.contains(ctx.add(Elem(x), v).0))
                {
                    found.push((u.0, v.0));
                }
            }
            found
        })
        .collect();
    elements.sort_unstable();
    Ok(StabilizerReport {
        schema_version: 1,
        mu: elements.len() as u64,
        elements,
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct HomogeneityReport {
    pub schema_version: u32,
    pub q: u32,
    pub variant: GroupVariant,
    pub homogeneous: bool,
    /// an unreached 2-subset, when not 2-homogeneous
    pub witness: Option<(u32, u32)>,
}

/// True iff the orbit of one 2-subset under the group covers all C(q,2)
/// 2-subsets. Orbits of a group action partition the pairs, so a single
/// seed decides transitivity; the seed is {0, 1}.
pub fn is_2_homogeneous(
    ctx: &FieldCtx,
    variant: GroupVariant,
) -> Result<HomogeneityReport, GroupError> {
    let q = ctx.q();
    if q > MAX_HOMOGENEITY_Q {
        return Err(GroupError::HomogeneityBudget(q));
    }
    let reached = pair_orbit(ctx, variant, (Elem(0), Elem(1)))?;
    let n_pairs = q as usize * (q as usize - 1) / 2;
    let count = reached.iter().filter(|&&r| r).count();
    let mut witness = None;
    if count != n_pairs {
        'outer: for b in 1..q {
            for a in 0..b {
                if !reached[(b as usize * (b as usize - 1)) / 2 + a as usize] {
                    witness = Some((a, b));
                    break 'outer;
                }
            }
        }
    }
    Ok(HomogeneityReport {
        schema_version: 1,
        q,
        variant,
        homogeneous: count == n_pairs,
        witness,
    })
}

/// Reachability of every 2-subset from the seed pair, indexed triangularly.
pub fn pair_orbit(
    ctx: &FieldCtx,
    variant: GroupVariant,
    seed: (Elem, Elem),
) -> Result<Vec<bool>, GroupError> {
    let q = ctx.q() as usize;
    let mut reached = vec![false; q * (q - 1) / 2];
    for u in multipliers(ctx, variant)? {
        let x0 = ctx.mul(u, seed.0);
        let y0 = ctx.mul(u, seed.1);
        for v in ctx.elements() {
            let x = ctx.add(x0, v).0;
            let y = ctx.add(y0, v).0;
            let (a, b) = if x < y { (x, y) } else { (y, x) };
            reached[(b as usize * (b as usize - 1)) / 2 + a as usize] = true;
        }
    }
    Ok(reached)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct EqualityReport {
    pub schema_version: u32,
    pub a1_size: u64,
    pub a2_size: u64,
    /// absent for even q, where the square-multiplier set is not defined
    pub a3_size: Option<u64>,
    #[serde(rename = "A1_eq_A2")]
    pub a1_eq_a2: bool,
    #[serde(rename = "A1_eq_A3")]
    pub a1_eq_a3: Option<bool>,
    #[serde(rename = "A3_subset_A2")]
    pub a3_subset_a2: Option<bool>,
}

/// Materializes and compares
///   A1 = {B_(f,b,c) : b != 0},
///   A2 = {u B_l + v : u != 0},
///   A3 = {u B_l + v : u a nonzero square}  (odd q only).
pub fn block_set_equality(spec: &FamilySpec) -> Result<EqualityReport, GroupError> {
    let ctx = spec.field()?;
    let q = ctx.q();
    if q > MAX_EQUALITY_Q {
        return Err(GroupError::EqualityBudget(q));
    }
    let f = spec.point_map(&ctx);
    let mut a1: HashSet<BitBlock> = HashSet::new();
    for b in ctx.elements().skip(1) {
        let base = crate::designs::block_of(&ctx, &f, b, Elem(0));
        for c in ctx.elements() {
            a1.insert(image_bits(&ctx, Elem(1), c, base.members()));
        }
    }
    let base = image_set(&ctx, spec);
    let orbit_set = |us: &[Elem]| -> HashSet<BitBlock> {
        let mut set = HashSet::new();
        for &u in us {
            let scaled = image_bits(&ctx, u, Elem(0), base.members()).members();
            for v in ctx.elements() {
                let mut bits = BitBlock::empty(q);
                for &x in &scaled {
                    bits.insert(ctx.add(Elem(x), v).0);
                }
                set.insert(bits);
            }
        }
        set
    };
    let a2 = orbit_set(&multipliers(&ctx, GroupVariant::Full)?);
    let a3 = if ctx.p() == 2 {
        None
    } else {
        Some(orbit_set(&multipliers(&ctx, GroupVariant::Qr)?))
    };
    Ok(EqualityReport {
        schema_version: 1,
        a1_size: a1.len() as u64,
        a2_size: a2.len() as u64,
        a3_size: a3.as_ref().map(|s| s.len() as u64),
        a1_eq_a2: a1 == a2,
        a1_eq_a3: a3.as_ref().map(|s| &a1 == s),
        a3_subset_a2: a3.as_ref().map(|s| s.is_subset(&a2)),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::designs::build_structure;

    #[test]
    fn action_axioms() {
        let ctx = FieldCtx::new(3, 2, None).unwrap();
        let block = Block::new(vec![0, 2, 5]);
        let id = AffineMap::identity();
        assert_eq!(apply(&ctx, &id, &block), block);
        for u in 1..ctx.q() {
            for v in 0..ctx.q() {
                let g = AffineMap { u: Elem(u), v: Elem(v) };
                let h = AffineMap { u: Elem(2), v: Elem(7) };
                assert_eq!(
                    apply(&ctx, &g, &apply(&ctx, &h, &block)),
                    apply(&ctx, &g.compose(&ctx, &h), &block)
                );
                assert_eq!(apply(&ctx, &g, &block).len(), block.len());
                assert_eq!(g.compose(&ctx, &g.inverse(&ctx)), AffineMap::identity());
            }
        }
    }

    #[test]
    fn char2_translate_example() {
        let ctx = FieldCtx::new(2, 3, None).unwrap();
        let g = AffineMap { u: Elem(1), v: Elem(1) };
        assert_eq!(apply(&ctx, &g, &Block::new(vec![0, 1])), Block::new(vec![0, 1]));
    }

    #[test]
    fn orbit_gf8_base_image() {
        let spec = FamilySpec::new(2, 3, 1).unwrap();
        let ctx = spec.field().unwrap();
        let base = image_set(&ctx, &spec);
        let orb = orbit(&ctx, GroupVariant::Full, &base).unwrap();
        assert_eq!(orb.len(), 56);
        let stab = stabilizer(&ctx, GroupVariant::Full, &base).unwrap();
        assert_eq!(stab.mu, 1);
        assert_eq!(stab.elements, vec![(1, 0)]);
        // orbit-stabilizer
        assert_eq!(orb.len() as u64 * stab.mu, group_order(&ctx, GroupVariant::Full));
    }

    #[test]
    fn orbit_gf27_qr_l2() {
        let spec = FamilySpec::new(3, 3, 2).unwrap();
        let ctx = spec.field().unwrap();
        let base = image_set(&ctx, &spec);
        let orb = orbit(&ctx, GroupVariant::Qr, &base).unwrap();
        assert_eq!(orb.len(), 351);
        let stab = stabilizer(&ctx, GroupVariant::Qr, &base).unwrap();
        assert_eq!(stab.mu, 1);
    }

    #[test]
    fn singleton_orbit_is_transitive() {
        let ctx = FieldCtx::new(5, 1, None).unwrap();
        let orb = orbit(&ctx, GroupVariant::Full, &Block::new(vec![3])).unwrap();
        assert_eq!(orb.len(), 5);
    }

    #[test]
    fn stabilizer_brute_force_oracle() {
        // test every group element directly, q small
        for (p, m, l) in [(2u64, 3u32, 1u32), (3, 2, 1), (3, 3, 1)] {
            let spec = FamilySpec::new(p, m, l).unwrap();
            let ctx = spec.field().unwrap();
            let base = image_set(&ctx, &spec);
            let fast = stabilizer(&ctx, GroupVariant::Full, &base).unwrap();
            let mut naive = Vec::new();
            for u in ctx.elements().skip(1) {
                for v in ctx.elements() {
                    let g = AffineMap { u, v };
                    if apply(&ctx, &g, &base) == base {
                        naive.push((u.0, v.0));
                    }
                }
            }
            naive.sort_unstable();
            assert_eq!(fast.elements, naive);
        }
    }

    #[test]
    fn stabilizer_is_a_subgroup() {
        let spec = FamilySpec::new(3, 3, 1).unwrap();
        let ctx = spec.field().unwrap();
        let base = image_set(&ctx, &spec);
        let stab = stabilizer(&ctx, GroupVariant::Full, &base).unwrap();
        assert!(stab.elements.contains(&(1, 0)));
        let maps: Vec<AffineMap> = stab
            .elements
            .iter()
            .map(|&(u, v)| AffineMap { u: Elem(u), v: Elem(v) })
            .collect();
        for g in &maps {
            assert!(maps.contains(&g.inverse(&ctx)));
            for h in &maps {
                assert!(maps.contains(&g.compose(&ctx, h)));
            }
        }
        assert_eq!(group_order(&ctx, GroupVariant::Full) % stab.mu, 0);
    }

    #[test]
    fn full_group_always_2_homogeneous() {
        for (p, m) in [(2u64, 3u32), (3, 2), (5, 1), (7, 1)] {
            let ctx = FieldCtx::new(p, m, None).unwrap();
            assert!(is_2_homogeneous(&ctx, GroupVariant::Full).unwrap().homogeneous);
        }
    }

    #[test]
    fn qr_group_homogeneity_depends_on_q_mod_4() {
        let f27 = FieldCtx::new(3, 3, None).unwrap();
        assert!(is_2_homogeneous(&f27, GroupVariant::Qr).unwrap().homogeneous);
        let f25 = FieldCtx::new(5, 2, None).unwrap();
        let r = is_2_homogeneous(&f25, GroupVariant::Qr).unwrap();
        assert!(!r.homogeneous);
        assert!(r.witness.is_some());
    }

    #[test]
    fn homogeneity_all_seed_pairs_oracle() {
        // every seed pair must reach the same pair count; q <= 27
        for (p, m) in [(3u64, 3u32), (5, 2), (3, 2)] {
            let ctx = FieldCtx::new(p, m, None).unwrap();
            let q = ctx.q();
            let expected = pair_orbit(&ctx, GroupVariant::Qr, (Elem(0), Elem(1)))
                .unwrap()
                .iter()
                .filter(|&&r| r)
                .count();
            for b in 1..q {
                for a in 0..b {
                    let n = pair_orbit(&ctx, GroupVariant::Qr, (Elem(a), Elem(b)))
                        .unwrap()
                        .iter()
                        .filter(|&&r| r)
                        .count();
                    assert_eq!(n, expected);
                }
            }
        }
    }

    #[test]
    fn equality_reports() {
        let r = block_set_equality(&FamilySpec::new(2, 3, 1).unwrap()).unwrap();
        assert!(r.a1_eq_a2);
        assert!(r.a3_size.is_none());

        let r = block_set_equality(&FamilySpec::new(3, 3, 2).unwrap()).unwrap();
        assert_eq!(r.a1_eq_a3, Some(true));
        assert_eq!(r.a3_subset_a2, Some(true));

        let r = block_set_equality(&FamilySpec::new(3, 3, 1).unwrap()).unwrap();
        assert_eq!(r.a1_eq_a3, Some(true));
        assert_eq!(r.a3_subset_a2, Some(true));
    }

    #[test]
    fn equality_fails_for_even_m() {
        // for even m the slope map b -> b^{2^l+1} is 3-to-1, so the design
        // block set is a proper 1/3 subset of the affine orbit
        let r = block_set_equality(&FamilySpec::new(2, 6, 1).unwrap()).unwrap();
        assert!(!r.a1_eq_a2);
        assert_eq!((r.a1_size, r.a2_size), (1344, 4032));
    }

    #[test]
    fn full_orbit_matches_built_structure() {
        // the design block set equals the full-group orbit of B_l for p=2 and
        // odd m (so that b -> b^{2^l+1} is a bijection on the slopes)
        for (m, l) in [(3u32, 1u32), (5, 1), (5, 2), (7, 2)] {
            let spec = FamilySpec::new(2, m, l).unwrap();
            let ctx = spec.field().unwrap();
            let base = image_set(&ctx, &spec);
            let orb = orbit(&ctx, GroupVariant::Full, &base).unwrap();
            let f = spec.point_map(&ctx);
            let s = build_structure(&ctx, &f, base.len() as u32).unwrap();
            let mut built: Vec<Block> = (0..s.num_blocks()).map(|i| s.block(i)).collect();
            built.sort_by(|a, b| a.members().cmp(b.members()));
            assert_eq!(orb, built, "(2,{m},{l})");
        }
    }
}
