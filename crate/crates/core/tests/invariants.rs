use latfrac::atoms::{atomic_synthesis, make_atom_with, AtomShape};
use latfrac::hardy::{hardy_maximal, DilationGrid};
use latfrac::operators::{apply_riesz, apply_t_at, lemma_tail_bound, tail_sum_enclosure};
use latfrac::{CubeWindow, FractionalSpec, IntegerMatrix, LatticeIndex, LatticeSequence};
use proptest::prelude::*;

fn spec_strategy() -> impl Strategy<Value = FractionalSpec> {
    (1usize..=2, 1usize..=3, 0.05f64..0.95).prop_flat_map(|(n, m, frac)| {
        let entries = prop::collection::vec(prop::collection::vec(prop::collection::vec(-3i64..=3, n), n), m);
        let weights = prop::collection::vec(0.1f64..1.0, m);
        (entries, weights).prop_filter_map("singular matrix", move |(mats, w)| {
            let alpha = frac * n as f64;
            let total: f64 = w.iter().sum();
            let exps = w.iter().map(|x| x * (n as f64 - alpha) / total).collect();
            let matrices = mats.into_iter().map(|rows| IntegerMatrix::new(rows).unwrap()).collect();
            let spec = FractionalSpec::new(n, alpha, exps, matrices);
            spec.validate().is_valid().then_some(spec)
        })
    })
}

fn sparse_strategy(n: usize) -> impl Strategy<Value = LatticeSequence<f64>> {
    prop::collection::btree_map(prop::collection::vec(-12i64..=12, n), -1.0f64..1.0, 1..12).prop_map(move |m| {
        LatticeSequence::sparse(n, m.into_iter().map(|(i, v)| (LatticeIndex(i), v)).collect()).unwrap()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn composition_domination(
        (spec, b, j) in spec_strategy().prop_flat_map(|s| {
            let n = s.n;
            (Just(s), sparse_strategy(n), prop::collection::vec(-10i64..=10, n))
        })
    ) {
        let lhs: f64 = apply_t_at(&spec, &b, &LatticeIndex(j.clone())).unwrap();
        let abs = b.abs();
        let mut rhs = 0.0;
        for a in &spec.matrices {
            let aj = LatticeIndex(a.apply(&j));
            let r = apply_riesz(&abs, spec.alpha, &CubeWindow::new(aj.clone(), 0)).unwrap();
            rhs += r.values.get(&aj.0);
        }
        prop_assert!(lhs.abs() <= rhs * (1.0 + 1e-12), "{} > {}", lhs.abs(), rhs);
    }

    #[test]
    fn hardy_synthesis_consistency(
        radii in prop::collection::vec(1u64..=4, 1..4),
        centers in prop::collection::vec(-10i64..=10, 3),
        lambdas in prop::collection::vec(-2.0f64..2.0, 3),
        seed in any::<u64>(),
    ) {
        let atoms: Vec<_> = radii
            .iter()
            .zip(&centers)
            .map(|(&r, &c)| make_atom_with(&CubeWindow::new(LatticeIndex(vec![c]), r), 1.0, seed ^ r, AtomShape::Coarse).unwrap())
            .collect();
        let lambdas = &lambdas[..atoms.len()];
        let s = atomic_synthesis(&atoms, lambdas).unwrap();
        let grid = DilationGrid::new(0.25, 64.0, 4).unwrap();
        let out = CubeWindow::centered_at_origin(1, 40);
        let total = hardy_maximal(&s.sequence, &grid, &out).unwrap();
        let parts: Vec<_> = atoms.iter().map(|a| hardy_maximal(&a.sequence, &grid, &out).unwrap()).collect();
        for j in out.iter() {
            let bound: f64 = parts.iter().zip(lambdas).map(|(m, l)| l.abs() * m.get(&j.0)).sum();
            let v: f64 = total.get(&j.0);
            prop_assert!(v <= bound * (1.0 + 1e-12) + 1e-300, "{v} > {bound} at {:?}", j.0);
        }
    }

    #[test]
    fn tail_majorant_holds(n in 1usize..=3, eps in 0.3f64..3.0, radius in 1u64..=64) {
        let bound = lemma_tail_bound(n, eps, radius).unwrap().bound;
        let t = tail_sum_enclosure(n, eps, radius, 1e-4 * bound).unwrap();
        prop_assert!(t.upper() <= bound);
        let further = tail_sum_enclosure(n, eps, radius + 1, 1e-4 * bound).unwrap();
        prop_assert!(further.value < t.value);
    }
}
