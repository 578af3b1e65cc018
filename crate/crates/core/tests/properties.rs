use proptest::prelude::*;
use singhyp_core::flow::{flow_evolve, FlowPoint, SuspensionFlow};
use singhyp_core::maps::{LorenzModelParams, PiecewiseExpandingMap, SkewProductMap, System};
use singhyp_core::measures::{pushforward, w1_distance, Measure1D};
use singhyp_core::par::Exec;
use singhyp_core::transfer::ulam_matrix_with;

fn samples() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(0.0..1.0f64, 1..40)
}

fn lorenz() -> SkewProductMap {
    SkewProductMap::lorenz(LorenzModelParams::default()).unwrap()
}

proptest! {
    #[test]
    fn w1_is_a_metric(a in samples(), b in samples(), c in samples()) {
        let (a, b, c) = (
            Measure1D::empirical(a).unwrap(),
            Measure1D::empirical(b).unwrap(),
            Measure1D::empirical(c).unwrap(),
        );
        let ab = w1_distance(&a, &b).unwrap();
        prop_assert_eq!(ab, w1_distance(&b, &a).unwrap());
        prop_assert!(ab >= 0.0);
        prop_assert_eq!(w1_distance(&a, &a).unwrap(), 0.0);
        let ac = w1_distance(&a, &c).unwrap();
        let bc = w1_distance(&b, &c).unwrap();
        prop_assert!(ac <= ab + bc + 1e-12);
    }

    #[test]
    fn w1_of_diracs_is_distance(x in 0.0..1.0f64, y in 0.0..1.0f64) {
        let d = w1_distance(&Measure1D::dirac(x).unwrap(), &Measure1D::dirac(y).unwrap()).unwrap();
        prop_assert!((d - (x - y).abs()).abs() < 1e-15);
    }

    #[test]
    fn skew_product_covers_its_base(x in 0.0..1.0f64, y in 0.0..1.0f64) {
        let f = lorenz();
        if let (Ok(p), Ok(tx)) = (f.eval([x, y]), f.base().eval(x)) {
            prop_assert_eq!(p[0], tx);
            prop_assert!((0.0..=1.0).contains(&p[1]));
        }
    }

    #[test]
    fn fibers_contract(x in 0.0..1.0f64, y1 in 0.0..1.0f64, y2 in 0.0..1.0f64) {
        for f in [lorenz(), SkewProductMap::affine_doubling(1.0 / 3.0).unwrap()] {
            if let (Ok(a), Ok(b)) = (f.fiber_value(x, y1), f.fiber_value(x, y2)) {
                prop_assert!((a - b).abs() <= f.lambda() * (y1 - y2).abs() + 1e-15);
            }
        }
    }

    #[test]
    fn preimages_map_back(y in 0.0..1.0f64, alpha in 0.55..0.95f64) {
        for t in [PiecewiseExpandingMap::doubling(), PiecewiseExpandingMap::tent(), PiecewiseExpandingMap::lorenz(alpha).unwrap()] {
            let pre = t.preimages(y);
            prop_assert!(!pre.is_empty());
            for p in pre {
                if let Ok(v) = t.eval(p.x) {
                    prop_assert!((v - y).abs() < 1e-9, "T({}) = {} != {}", p.x, v, y);
                }
            }
        }
    }

    #[test]
    fn pushforward_keeps_mass(xs in samples(), n in 1usize..6) {
        let mu = Measure1D::empirical(xs).unwrap();
        let pushed = pushforward(&PiecewiseExpandingMap::lorenz(0.75).unwrap(), &mu, n);
        prop_assert!((pushed.measure.mass() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn flow_is_additive_on_dyadic_times(x in 0.01..0.99f64, h in 0u32..64, s in 0u32..64, t in 0u32..64) {
        let flow = SuspensionFlow::constant(System::Interval(PiecewiseExpandingMap::tent()), 1.0).unwrap();
        let (s, t) = (s as f64 / 8.0, t as f64 / 8.0);
        let p = FlowPoint::new([x, 0.0], h as f64 / 64.0);
        let once = flow_evolve(&flow, p, s + t);
        let twice = flow_evolve(&flow, p, s).and_then(|q| flow_evolve(&flow, q, t));
        if let (Ok(a), Ok(b)) = (once, twice) {
            prop_assert_eq!(a, b);
        }
    }
}

#[test]
fn ulam_rows_are_stochastic_in_both_modes() {
    let t = PiecewiseExpandingMap::lorenz(0.75).unwrap();
    let a = ulam_matrix_with(&t, 512, Exec::Sequential);
    let b = ulam_matrix_with(&t, 512, Exec::Parallel);
    assert_eq!(a.to_triplets(), b.to_triplets());
    for row in a.rows() {
        let s: f64 = row.iter().map(|e| e.1).sum();
        assert!((s - 1.0).abs() < 1e-12);
    }
}
