//! Oracle invariants on random catalog instances.

use proptest::prelude::*;

use subreg_core::maps::{sum, Rule};
use subreg_core::moduli::{CalmnessOracle, StrongAtOracle, SubregAtOracle};
use subreg_core::{Norm, Oracle, SetValuedMap, SingleValuedMap, Space, Sweep};

#[derive(Debug, Clone)]
enum Instance {
    Scaling(f64),
    SinPerturbed(f64),
    Cubic,
    ConeSum,
    Cone,
}

impl Instance {
    fn map(&self) -> SetValuedMap {
        let cone = || SetValuedMap::normal_cone_box(vec![[0.0, 1.0]], Norm::Sup).unwrap();
        let rule = match self {
            Instance::Scaling(c) => Rule::Scaling { factor: *c },
            Instance::SinPerturbed(a) => Rule::Add {
                terms: vec![Rule::Identity, Rule::Sin { amplitude: *a }],
            },
            Instance::Cubic => Rule::Cubic,
            Instance::ConeSum => return sum(&SingleValuedMap::line(Rule::Identity).unwrap(), &cone()).unwrap(),
            Instance::Cone => return cone(),
        };
        SetValuedMap::lift(rule, Space::line()).unwrap()
    }
}

fn instance() -> impl Strategy<Value = Instance> {
    prop_oneof![
        (0.1f64..3.0).prop_map(Instance::Scaling),
        (-0.9f64..0.9).prop_map(Instance::SinPerturbed),
        Just(Instance::Cubic),
        Just(Instance::ConeSum),
        Just(Instance::Cone),
    ]
}

fn graph_point(map: &SetValuedMap, x: f64) -> Vec<f64> {
    map.evaluate(&[x]).unwrap().sample(1.0).unwrap()[0].clone()
}

fn same(a: f64, b: f64) -> bool {
    a == b || (a - b).abs() <= 1e-12 * a.abs().max(1.0)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn witnesses_replay(inst in instance(), x0 in 0.05f64..0.95, r in 0.01f64..0.5, m in 2usize..40) {
        let map = inst.map();
        let y0 = graph_point(&map, x0);
        let strong = StrongAtOracle::with_per_side(&map, &[x0], &y0, r, m).unwrap();
        let est = strong.estimate().unwrap();
        if let Some(w) = &est.witness {
            prop_assert!(same(strong.replay(w).unwrap(), est.value));
        }
        let sub = SubregAtOracle::new(&map, &[x0], &y0, r, Sweep::new(r / m as f64)).unwrap();
        let est = sub.estimate().unwrap();
        if let Some(w) = &est.witness {
            prop_assert!(same(sub.replay(w).unwrap(), est.value));
        }
    }

    #[test]
    fn refinement_never_lowers_the_supremum(inst in instance(), x0 in 0.05f64..0.95, r in 0.01f64..0.5, m in 2usize..40) {
        let map = inst.map();
        let y0 = graph_point(&map, x0);
        let coarse = StrongAtOracle::with_per_side(&map, &[x0], &y0, r, m).unwrap().estimate().unwrap();
        let fine = StrongAtOracle::with_per_side(&map, &[x0], &y0, r, 2 * m).unwrap().estimate().unwrap();
        prop_assert!(fine.value >= coarse.value - 1e-12);
    }

    #[test]
    fn range_scaling_divides_the_modulus(inst in instance(), x0 in 0.05f64..0.95, r in 0.01f64..0.5, k in -3i32..4) {
        let c = 2f64.powi(k);
        let map = inst.map();
        let y0 = graph_point(&map, x0);
        let cy: Vec<f64> = y0.iter().map(|v| v * c).collect();
        let a = StrongAtOracle::with_per_side(&map, &[x0], &y0, r, 30).unwrap().estimate().unwrap();
        let b = StrongAtOracle::with_per_side(&map.scaled(c).unwrap(), &[x0], &cy, r, 30).unwrap().estimate().unwrap();
        prop_assert_eq!(b.value, a.value / c);
    }

    #[test]
    fn sums_translate_queries(inst in instance(), x in 0.0f64..1.0, y in -3.0f64..3.0, a in -2.0f64..2.0) {
        let map = inst.map();
        for rule in [Rule::Identity, Rule::Sin { amplitude: a }, Rule::Constant { value: vec![a] }] {
            let g = SingleValuedMap::line(rule).unwrap();
            let gx = g.apply(&[x]).unwrap()[0];
            prop_assert_eq!(
                sum(&g, &map).unwrap().dist_to_image(&[x], &[y]).unwrap().to_bits(),
                map.dist_to_image(&[x], &[y - gx]).unwrap().to_bits()
            );
        }
    }

    #[test]
    fn calmness_of_linear_maps_is_the_slope(c in -3.0f64..3.0, x0 in -1.0f64..1.0, r in 0.01f64..1.0) {
        let g = SingleValuedMap::line(Rule::Scaling { factor: c }).unwrap();
        let est = CalmnessOracle::with_per_side(&g, &[x0], r, 20).unwrap().estimate().unwrap();
        prop_assert!((est.value - c.abs()).abs() <= 1e-12 * c.abs().max(1.0));
    }
}
