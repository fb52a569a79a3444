//! Randomized invariants over the field arithmetic and block machinery.

use proptest::prelude::*;
use qdesign::curves::isqrt;
use qdesign::designs::block_of;
use qdesign::family::FamilySpec;
use qdesign::field::{Elem, FieldCtx};

/// A few mixed-characteristic fields, small enough to exercise per case.
fn any_field() -> impl Strategy<Value = FieldCtx> {
    prop_oneof![
        Just((2u64, 5u32)),
        Just((2, 8)),
        Just((3, 4)),
        Just((5, 3)),
        Just((7, 2)),
        Just((11, 2)),
    ]
    .prop_map(|(p, m)| FieldCtx::new(p, m, None).unwrap())
}

proptest! {
    #[test]
    fn field_axioms_hold((ctx, a, b, c) in any_field().prop_flat_map(|ctx| {
        let q = ctx.q() as u64;
        (Just(ctx), 0..q, 0..q, 0..q)
    })) {
        let (a, b, c) = (Elem(a as u32), Elem(b as u32), Elem(c as u32));
        prop_assert_eq!(ctx.add(a, b), ctx.add(b, a));
        prop_assert_eq!(ctx.mul(a, b), ctx.mul(b, a));
        prop_assert_eq!(ctx.add(ctx.add(a, b), c), ctx.add(a, ctx.add(b, c)));
        prop_assert_eq!(ctx.mul(ctx.mul(a, b), c), ctx.mul(a, ctx.mul(b, c)));
        prop_assert_eq!(
            ctx.mul(a, ctx.add(b, c)),
            ctx.add(ctx.mul(a, b), ctx.mul(a, c))
        );
        prop_assert_eq!(ctx.sub(ctx.add(a, b), b), a);
        if a.0 != 0 {
            let inv = ctx.inv(a).unwrap();
            prop_assert_eq!(ctx.mul(a, inv), ctx.one());
        }
        // table-driven and reference multiplication are bit-identical
        prop_assert_eq!(ctx.mul(a, b), ctx.mul_ref(a, b));
    }

    #[test]
    fn frobenius_is_additive_and_multiplicative((ctx, a, b) in any_field().prop_flat_map(|ctx| {
        let q = ctx.q() as u64;
        (Just(ctx), 0..q, 0..q)
    })) {
        let (a, b) = (Elem(a as u32), Elem(b as u32));
        let fr = |x| ctx.frobenius(x, 1);
        prop_assert_eq!(fr(ctx.add(a, b)), ctx.add(fr(a), fr(b)));
        prop_assert_eq!(fr(ctx.mul(a, b)), ctx.mul(fr(a), fr(b)));
    }

    #[test]
    fn blocks_translate_without_changing_size(
        (spec, slope, c1, c2) in prop_oneof![
            Just(FamilySpec::new(2, 5, 1).unwrap()),
            Just(FamilySpec::new(3, 3, 2).unwrap()),
            Just(FamilySpec::new(5, 2, 1).unwrap()),
        ].prop_flat_map(|spec| {
            let q = spec.q();
            (Just(spec), 0..q, 0..q, 0..q)
        })
    ) {
        let ctx = spec.field().unwrap();
        let f = spec.point_map(&ctx);
        let b1 = block_of(&ctx, &f, Elem(slope as u32), Elem(c1 as u32));
        let b2 = block_of(&ctx, &f, Elem(slope as u32), Elem(c2 as u32));
        // translation by (c2 - c1) is a bijection between the two blocks
        prop_assert_eq!(b1.len(), b2.len());
        let d = ctx.sub(Elem(c2 as u32), Elem(c1 as u32));
        let shifted: Vec<u32> = {
            let mut v: Vec<u32> = b1.members().iter().map(|&x| ctx.add(Elem(x), d).0).collect();
            v.sort_unstable();
            v
        };
        prop_assert_eq!(shifted.as_slice(), b2.members());
    }

    #[test]
    fn isqrt_is_exact(n in 0u64..=(1u64 << 53)) {
        let r = isqrt(n);
        prop_assert!(r * r <= n);
        prop_assert!((r + 1) * (r + 1) > n);
    }
}
