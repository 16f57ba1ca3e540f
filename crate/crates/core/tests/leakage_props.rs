//! The exact leakage inequality on random degraded sources.

use proptest::prelude::*;
use sparsekey::leakage::{check_leakage_bound, evaluate, evaluate_with, random_binning, ToySource};
use sparsekey::Execution;

/// Normalizes nonnegative weights into a distribution.
fn normalize(w: &[f64]) -> Vec<f64> {
    let s: f64 = w.iter().sum();
    w.iter().map(|v| v / s).collect()
}

/// `p(x) p(y|x) p(z|y)` on `nx × ny × nz` from raw weights.
fn degraded_source(nx: usize, ny: usize, nz: usize, w: &[f64]) -> ToySource {
    let px = normalize(&w[..nx]);
    let mut off = nx;
    let mut py_x = Vec::new();
    for _ in 0..nx {
        py_x.push(normalize(&w[off..off + ny]));
        off += ny;
    }
    let mut pz_y = Vec::new();
    for _ in 0..ny {
        pz_y.push(normalize(&w[off..off + nz]));
        off += nz;
    }
    let mut p = vec![0.0; nx * ny * nz];
    for x in 0..nx {
        for y in 0..ny {
            for z in 0..nz {
                p[(x * ny + y) * nz + z] = px[x] * py_x[x][y] * pz_y[y][z];
            }
        }
    }
    let s: f64 = p.iter().sum();
    p.iter_mut().for_each(|v| *v /= s);
    ToySource::new(nx, ny, nz, p).unwrap()
}

fn source_strategy() -> impl Strategy<Value = ToySource> {
    (2usize..=3, 2usize..=3, 2usize..=3).prop_flat_map(|(nx, ny, nz)| {
        prop::collection::vec(0.05f64..1.0, nx + nx * ny + ny * nz).prop_map(move |w| degraded_source(nx, ny, nz, &w))
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn leakage_bound_fano_and_data_processing(
        src in source_strategy(),
        n in 1usize..=4,
        key_rate in 0.0f64..1.5,
        public_rate in 0.0f64..1.5,
        seed in any::<u64>(),
    ) {
        prop_assert!(src.degraded);
        let scheme = random_binning(n, src.nx, key_rate, public_rate, seed).unwrap();
        let r = evaluate(&scheme, &src).unwrap();
        let (holds, slack) = check_leakage_bound(&r).unwrap();
        prop_assert!(holds, "slack {slack}");
        prop_assert!(r.fano_holds(), "residual {} fano {}", r.residual, r.fano_bound());
        prop_assert!(r.leak <= r.source_leak + 1e-12);
        prop_assert!(r.pe <= r.pe_seq + 1e-15);
        prop_assert!((0.0..=1.0).contains(&r.pe));
    }
}

#[test]
fn ternary_source_from_csv() {
    let src = degraded_source(3, 2, 3, &[1.0, 2.0, 3.0, 0.7, 0.3, 0.4, 0.6, 0.1, 0.9, 0.5, 0.2, 0.3, 0.6, 0.3, 0.1]);
    let mut text = String::from("x,y,z,p\n");
    for x in 0..3 {
        for y in 0..2 {
            for z in 0..3 {
                text.push_str(&format!("{x},{y},{z},{}\n", src.prob(x, y, z)));
            }
        }
    }
    let parsed = ToySource::from_csv(text.as_bytes()).unwrap();
    assert_eq!(parsed, src);
    let scheme = random_binning(3, 3, 0.4, 0.8, 5).unwrap();
    let a = evaluate_with(&scheme, &parsed, Execution::Sequential).unwrap();
    let b = evaluate_with(&scheme, &parsed, Execution::Parallel).unwrap();
    assert_eq!(a, b);
    assert!(check_leakage_bound(&a).unwrap().0);
}
