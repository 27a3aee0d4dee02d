use mfhj_core::bipartite::{boundary_equivalence_check, finite_size_study, BipartiteParams};
use mfhj_core::finite_n::{exact_pressure, FiniteSystem};
use mfhj_core::single_party::thermo_state;
use mfhj_core::SpinMeasure;

#[test]
fn exact_pressure_approaches_limit_like_one_over_n() {
    let measures = [
        SpinMeasure::dichotomic(),
        SpinMeasure::equally_spaced_atoms(3, 2.0).unwrap(),
    ];
    for m in &measures {
        for &(beta, h) in &[(0.5, 0.2), (2.5, 0.1), (1.2, -0.4)] {
            let limit = thermo_state(m, beta, h).unwrap().pressure;
            let scaled: Vec<f64> = [50usize, 100, 200, 400]
                .iter()
                .map(|&n| {
                    n as f64
                        * (exact_pressure(FiniteSystem::new(n, m).unwrap(), beta, h).unwrap()
                            - limit)
                            .abs()
                })
                .collect();
            let max = scaled.iter().cloned().fold(0.0, f64::max);
            let min = scaled.iter().cloned().fold(f64::INFINITY, f64::min);
            assert!(max / min < 2.0, "beta={beta} h={h}: {scaled:?}");
        }
    }
}

#[test]
fn unequal_parties_converge() {
    let p = BipartiteParams::dichotomic(1.8, 0.5, 0.1, -0.2).unwrap();
    let study = finite_size_study(&p, &[(8, 4), (16, 8), (32, 16), (64, 32)]).unwrap();
    let gaps: Vec<f64> = study.rows.iter().map(|r| r.gap).collect();
    assert!(gaps.windows(2).all(|w| w[1] < w[0]), "{gaps:?}");
    assert!(study.spread < 3.0, "{}", study.spread);
}

#[test]
fn boundary_replacement_costs_order_one_over_n() {
    let p = BipartiteParams::dichotomic(1.5, 1.0, 0.0, 0.0).unwrap();
    let r = boundary_equivalence_check(&p, 0.2, 0.3, &[4, 8, 16, 32]).unwrap();
    assert!(r.spread < 5.0, "{r:?}");
    assert!(r.rows.last().unwrap().gap < r.rows[0].gap);
}
