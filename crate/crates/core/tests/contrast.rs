mod common;

use common::*;
use proptest::prelude::*;
use vbip_core::contrast::*;
use vbip_core::{BandedSpdMatrix, Matrix};

fn shapes_up_to_6x7() -> Vec<GridShape> {
    let mut v = Vec::new();
    for m1 in 1..=6 {
        for m2 in 1..=7 {
            v.push(GridShape::new(m1, m2).unwrap());
        }
    }
    v
}

#[test]
fn grid_counts() {
    let s = GridShape::new(3, 4).unwrap();
    assert_eq!((s.m(), s.d_h(), s.d_v(), s.d()), (12, 9, 8, 17));
    let l = GridShape::line(10).unwrap();
    assert_eq!((l.m1, l.m2, l.d()), (1, 10, 9));
    let one = GridShape::new(1, 1).unwrap();
    assert_eq!(one.d(), 0);
    assert!(GridShape::new(0, 3).is_err());
}

#[test]
fn tridiag_examples() {
    assert_eq!(tridiag(&[1.0, 2.0, 3.0], &[0.0, 0.0]).unwrap(), Matrix::diag(&[1.0, 2.0, 3.0]));
    let t = tridiag(&[2.0; 4], &[-1.0; 3]).unwrap();
    let want = Matrix::from_fn(4, 4, |i, j| match i.abs_diff(j) {
        0 => 2.0,
        1 => -1.0,
        _ => 0.0,
    });
    assert_eq!(t, want);
    assert!(tridiag(&[1.0, 2.0], &[1.0, 2.0]).is_err());
}

#[test]
fn sparsetridiag_examples() {
    let v = [1.0, 2.0, 3.0, 4.0];
    let w = [5.0, 6.0, 7.0];
    assert_eq!(sparsetridiag(&v, &w, 1).unwrap(), tridiag(&v, &w).unwrap());
    let s = sparsetridiag(&[0.0; 4], &[5.0, 6.0], 2).unwrap();
    for i in 0..4 {
        for j in 0..4 {
            let want = match (i, j) {
                (0, 2) | (2, 0) => 5.0,
                (1, 3) | (3, 1) => 6.0,
                _ => 0.0,
            };
            assert_eq!(s[(i, j)], want);
        }
    }
    assert!(sparsetridiag(&[0.0; 4], &[], 4).is_err());
}

#[test]
fn one_dimensional_differences() {
    assert_eq!(apply_l(GridShape::line(4).unwrap(), &[1.0, 4.0, 9.0, 16.0]).unwrap(), vec![3.0, 5.0, 7.0]);
}

#[test]
fn worked_three_by_four_differences() {
    let s = GridShape::new(3, 4).unwrap();
    // v_k = k², so each difference is distinct
    let v: Vec<f64> = (1..=12).map(|k| (k * k) as f64).collect();
    let t = apply_l(s, &v).unwrap();
    let vk = |k: usize| v[k - 1];
    assert_eq!(&t[..3], &[vk(4) - vk(1), vk(7) - vk(4), vk(10) - vk(7)]);
    assert_eq!(&t[9..12], &[vk(2) - vk(1), vk(3) - vk(2), vk(5) - vk(4)]);
}

#[test]
fn worked_three_by_four_lmlt_diagonal() {
    let s = GridShape::new(3, 4).unwrap();
    let mut r = rng(1);
    let m = random_symmetric(&mut r, 12);
    let out = diag_lmlt(s, &m).unwrap();
    let e = |i: usize, j: usize| m[(i - 1, j - 1)];
    assert!((out[0] - (e(4, 4) - 2.0 * e(4, 1) + e(1, 1))).abs() < 1e-15);
    assert!((out[9] - (e(2, 2) - 2.0 * e(2, 1) + e(1, 1))).abs() < 1e-15);
}

#[test]
fn worked_three_by_four_lt_diag_l() {
    let s = GridShape::new(3, 4).unwrap();
    let w: Vec<f64> = (1..=17).map(|k| k as f64 + 0.25 * k as f64 * k as f64).collect();
    let r = lt_diag_l(s, &w).unwrap();
    let wk = |k: usize| w[k - 1];
    assert_eq!(r.get(0, 0), wk(1) + wk(10));
    assert_eq!(r.get(0, 1), -wk(10));
    assert_eq!(r.get(0, 3), -wk(1));
}

#[test]
fn worked_one_dimensional_lt_diag_l() {
    let w = [1.5, 2.0, 3.25];
    let got = lt_diag_l(GridShape::line(4).unwrap(), &w).unwrap().to_dense();
    let want = tridiag(&[w[0], w[0] + w[1], w[1] + w[2], w[2]], &[-w[0], -w[1], -w[2]]).unwrap();
    assert_eq!(got, want);
    assert_eq!(lt_diag_l_1d(&w).to_dense(), want);
}

#[test]
fn unit_weights_give_grid_laplacian() {
    for s in shapes_up_to_6x7() {
        let r = lt_diag_l(s, &vec![1.0; s.d()]).unwrap().to_dense();
        for i in 0..s.m() {
            let row: f64 = (0..s.m()).map(|j| r[(i, j)]).sum();
            assert_eq!(row, 0.0);
        }
    }
}

#[test]
fn identity_covariance_gives_twos() {
    for s in shapes_up_to_6x7() {
        let out = diag_lmlt(s, &Matrix::identity(s.m())).unwrap();
        assert!(out.iter().all(|&v| v == 2.0));
        assert_eq!(out.len(), s.d());
    }
}

#[test]
fn degenerate_single_pixel() {
    let s = GridShape::new(1, 1).unwrap();
    assert!(apply_l(s, &[3.0]).unwrap().is_empty());
    assert!(diag_lmlt(s, &Matrix::identity(1)).unwrap().is_empty());
    assert_eq!(lt_diag_l(s, &[]).unwrap().to_dense(), Matrix::zeros(1, 1));
    assert_eq!(apply_lt(s, &[]).unwrap(), vec![0.0]);
}

#[test]
fn length_mismatch_is_an_error() {
    let s = GridShape::new(3, 4).unwrap();
    assert!(apply_l(s, &[1.0; 11]).is_err());
    assert!(lt_diag_l(s, &[1.0; 16]).is_err());
    assert!(diag_lmlt(s, &Matrix::identity(11)).is_err());
}

#[test]
fn missing_covariance_entries_are_reported() {
    let s = GridShape::new(3, 4).unwrap();
    let diag_only = BandedSpdMatrix::identity(12, 3);
    assert!(diag_lmlt(s, &diag_only).is_err());
}

#[test]
fn dense_oracle_agreement_on_every_shape_up_to_6x7() {
    let mut r = rng(77);
    for s in shapes_up_to_6x7() {
        let l = dense_l(s);
        let lt = transpose(&l);
        assert_eq!(l.rows(), s.d());
        let v = random_vec(&mut r, s.m());
        assert!(max_abs_diff(&apply_l(s, &v).unwrap(), &dense_matvec(&l, &v)) < 1e-12);
        let t = random_vec(&mut r, s.d());
        assert!(max_abs_diff(&apply_lt(s, &t).unwrap(), &dense_matvec(&lt, &t)) < 1e-12);
        let m = random_symmetric(&mut r, s.m());
        let lml = matmul(&matmul(&l, &m), &lt);
        let want: Vec<f64> = (0..s.d()).map(|i| lml[(i, i)]).collect();
        assert!(max_abs_diff(&diag_lmlt(s, &m).unwrap(), &want) < 1e-12);
        let w: Vec<f64> = random_vec(&mut r, s.d()).iter().map(|x| x.abs()).collect();
        let ltwl = matmul(&matmul(&lt, &Matrix::diag(&w)), &l);
        assert!(lt_diag_l(s, &w).unwrap().to_dense().max_abs_diff(&ltwl) < 1e-12);
    }
}

#[test]
fn one_dimensional_fast_paths_match_general_code() {
    let mut r = rng(5);
    for m in 2..20 {
        let v = random_vec(&mut r, m);
        let s = GridShape::line(m).unwrap();
        assert_eq!(apply_l_1d(&v), apply_l(s, &v).unwrap());
        let c = random_symmetric(&mut r, m);
        assert_eq!(diag_lmlt_1d(&c).unwrap(), diag_lmlt(s, &c).unwrap());
    }
}

#[test]
fn lt_diag_l_uses_offsets_one_and_m1_only() {
    let s = GridShape::new(4, 5).unwrap();
    let r = lt_diag_l(s, &vec![1.0; s.d()]).unwrap();
    for (i, j, v) in r.triplets() {
        if v != 0.0 {
            assert!([0, 1, 4].contains(&i.abs_diff(j)), "({i},{j})");
        }
    }
}

proptest! {
    #[test]
    fn constants_have_zero_differences(m1 in 1usize..8, m2 in 1usize..8, c in -1e3f64..1e3) {
        let s = GridShape::new(m1, m2).unwrap();
        prop_assert!(apply_l(s, &vec![c; s.m()]).unwrap().iter().all(|&x| x == 0.0));
    }

    #[test]
    fn lt_diag_l_is_symmetric_psd(m1 in 1usize..6, m2 in 1usize..7, seed in any::<u64>()) {
        let s = GridShape::new(m1, m2).unwrap();
        let mut r = rng(seed);
        let w: Vec<f64> = random_vec(&mut r, s.d()).iter().map(|x| x.abs()).collect();
        let q = lt_diag_l(s, &w).unwrap().to_dense();
        prop_assert!(q.is_symmetric());
        // vᵀ Lᵀ W L v = Σ w (Lv)² ≥ 0
        let v = random_vec(&mut r, s.m());
        let qv = dense_matvec(&q, &v);
        let quad: f64 = v.iter().zip(&qv).map(|(a, b)| a * b).sum();
        let lv = apply_l(s, &v).unwrap();
        let direct: f64 = w.iter().zip(&lv).map(|(a, b)| a * b * b).sum();
        prop_assert!(quad >= -1e-12);
        prop_assert!((quad - direct).abs() < 1e-10);
    }

    #[test]
    fn adjoint_identity(m1 in 1usize..7, m2 in 1usize..7, seed in any::<u64>()) {
        let s = GridShape::new(m1, m2).unwrap();
        let mut r = rng(seed);
        let v = random_vec(&mut r, s.m());
        let t = random_vec(&mut r, s.d());
        let lhs: f64 = apply_l(s, &v).unwrap().iter().zip(&t).map(|(a, b)| a * b).sum();
        let rhs: f64 = apply_lt(s, &t).unwrap().iter().zip(&v).map(|(a, b)| a * b).sum();
        prop_assert!((lhs - rhs).abs() < 1e-12);
    }
}
