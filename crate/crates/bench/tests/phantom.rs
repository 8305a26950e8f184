use pnp_bench::{make_phantom, PhantomKind, PhantomParams};
use pnp_core::Shape;

fn params(sparsity: f64, block: usize) -> PhantomParams {
    PhantomParams { sparsity, block }
}

#[test]
fn spikes_have_exact_count_and_unit_magnitude() {
    let x = make_phantom(PhantomKind::SparseSpikes, Shape::Flat(10), params(0.2, 8), 3).unwrap();
    let nonzero: Vec<f64> = x.values().iter().copied().filter(|v| *v != 0.0).collect();
    assert_eq!(nonzero.len(), 2);
    assert!(nonzero.iter().all(|v| v.abs() == 1.0));

    for (n, s, expected) in [(256, 0.05, 13), (100, 0.03, 3), (7, 1.0, 7), (1000, 0.001, 1)] {
        let x = make_phantom(PhantomKind::SparseSpikes, Shape::Flat(n), params(s, 8), 9).unwrap();
        assert_eq!(
            x.values().iter().filter(|v| **v != 0.0).count(),
            expected,
            "n={n} s={s}"
        );
    }
}

#[test]
fn phantoms_are_deterministic_per_seed() {
    for kind in PhantomKind::ALL {
        let shape = Shape::Grid { height: 12, width: 10 };
        let p = PhantomParams::default_for(kind);
        let a = make_phantom(kind, shape, p, 5).unwrap();
        assert_eq!(a, make_phantom(kind, shape, p, 5).unwrap());
        assert_eq!(a.shape(), shape);
        if kind != PhantomKind::CheckerImage {
            assert_ne!(a, make_phantom(kind, shape, p, 6).unwrap(), "{kind}");
        }
    }
}

#[test]
fn checker_cells() {
    let x = make_phantom(
        PhantomKind::CheckerImage,
        Shape::Grid { height: 8, width: 8 },
        params(0.05, 2),
        0,
    )
    .unwrap();
    let expected = [
        [0.25, 0.25, 0.75, 0.75, 0.25, 0.25, 0.75, 0.75],
        [0.25, 0.25, 0.75, 0.75, 0.25, 0.25, 0.75, 0.75],
        [0.75, 0.75, 0.25, 0.25, 0.75, 0.75, 0.25, 0.25],
        [0.75, 0.75, 0.25, 0.25, 0.75, 0.75, 0.25, 0.25],
        [0.25, 0.25, 0.75, 0.75, 0.25, 0.25, 0.75, 0.75],
        [0.25, 0.25, 0.75, 0.75, 0.25, 0.25, 0.75, 0.75],
        [0.75, 0.75, 0.25, 0.25, 0.75, 0.75, 0.25, 0.25],
        [0.75, 0.75, 0.25, 0.25, 0.75, 0.75, 0.25, 0.25],
    ];
    for (r, row) in expected.iter().enumerate() {
        assert_eq!(&x.values()[r * 8..(r + 1) * 8], row, "row {r}");
    }
}

#[test]
fn blocks_are_piecewise_constant() {
    let x = make_phantom(PhantomKind::PiecewiseBlocks, Shape::Flat(20), params(0.05, 4), 1).unwrap();
    for chunk in x.values().chunks(4) {
        assert!(chunk.iter().all(|v| *v == chunk[0]));
    }
    assert!(x.values().iter().all(|v| (-1.0..=1.0).contains(v)));

    let (h, w, b) = (9, 7, 3);
    let img = make_phantom(
        PhantomKind::PiecewiseBlocks,
        Shape::Grid { height: h, width: w },
        params(0.05, b),
        2,
    )
    .unwrap();
    for r in 0..h {
        for c in 0..w {
            let anchor = (r / b * b) * w + c / b * b;
            assert_eq!(img.values()[r * w + c], img.values()[anchor]);
        }
    }
}

#[test]
fn invalid_parameters() {
    let flat = Shape::Flat(10);
    assert!(make_phantom(PhantomKind::SparseSpikes, flat, params(0.0, 8), 0).is_err());
    assert!(make_phantom(PhantomKind::SparseSpikes, flat, params(1.5, 8), 0).is_err());
    assert!(make_phantom(PhantomKind::PiecewiseBlocks, flat, params(0.1, 0), 0).is_err());
    assert!(make_phantom(PhantomKind::CheckerImage, flat, params(0.1, 2), 0).is_err());
    assert!(make_phantom(PhantomKind::SparseSpikes, Shape::Flat(0), params(0.1, 2), 0).is_err());
}
