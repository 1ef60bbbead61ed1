//! Fixtures shared by the benches under `benches/`.

use subreg_core::maps::{sum, ParamRule, Rule};
use subreg_core::uniformize::{CompactSample, Family};
use subreg_core::{
    Norm, ParametricGE, ParametricSingleValuedMap, PathRule, SamplePoint, SetValuedMap, SingleValuedMap, Space,
};

pub fn cone() -> SetValuedMap {
    SetValuedMap::normal_cone_box(vec![[0.0, 1.0]], Norm::Sup).unwrap()
}

/// `x + N_[0,1](x)`
pub fn x_plus_cone() -> SetValuedMap {
    sum(&SingleValuedMap::line(Rule::Identity).unwrap(), &cone()).unwrap()
}

/// `x + 0.1·t·sin x + N_[0,1](x)` sampled at `t = 0, 0.1, …, 1`, `x = 0`.
pub fn modulated_family() -> (Family, CompactSample) {
    let f = ParametricSingleValuedMap::new(
        ParamRule::Add {
            terms: vec![
                ParamRule::Static { g: Rule::Identity },
                ParamRule::Modulated {
                    g: Rule::Sin { amplitude: 0.1 },
                },
            ],
        },
        Space::line(),
        Space::line(),
    )
    .unwrap();
    let points = (0..=10)
        .map(|i| SamplePoint {
            t: vec![i as f64 / 10.0],
            x: vec![0.0],
        })
        .collect();
    (Family::new(f, cone()).unwrap(), CompactSample::new(points, 1e-9).unwrap())
}

/// `1.5 sin t ∈ x + N_[0,1](x)` on `[0, 2π]`.
pub fn clamp_path(t_steps: usize) -> ParametricGE {
    let f = ParametricSingleValuedMap::new(ParamRule::Static { g: Rule::Identity }, Space::line(), Space::line())
        .unwrap();
    let p = PathRule::Sine {
        amplitude: vec![1.5],
        frequency: 1.0,
        phase: 0.0,
    };
    ParametricGE::new(f, cone(), p, 2.0 * std::f64::consts::PI, t_steps).unwrap()
}
