use dvstrack_core::{Geometry, IntegralImage, Rect, SparseMeasurementMatrix, SpikeCountFrame};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_frame(rng: &mut ChaCha8Rng, w: u32, h: u32, max: u32) -> SpikeCountFrame {
    let counts = (0..w * h).map(|_| rng.random_range(0..=max)).collect();
    SpikeCountFrame::from_counts(Geometry::new(w, h), counts)
}

fn brute_sum(f: &SpikeCountFrame, x0: u32, y0: u32, w: u32, h: u32) -> u64 {
    let mut s = 0;
    for y in y0..y0 + h {
        for x in x0..x0 + w {
            s += f.get(x, y) as u64;
        }
    }
    s
}

/// Full rectangle-filter response of the `w`×`h` window at `(ox, oy)`:
/// entry `k` is scale `k / (w·h)` (row-major over `(ry, rx)`) anchored at
/// position `k % (w·h)` (row-major over `(py, px)`), clipped to the window.
fn dense_response(f: &SpikeCountFrame, ox: u32, oy: u32, w: u32, h: u32) -> Vec<f64> {
    let area = w * h;
    (0..area * area)
        .map(|k| {
            let (scale, pos) = (k / area, k % area);
            let (rx, ry) = (scale % w + 1, scale / w + 1);
            let (px, py) = (pos % w, pos / w);
            let cw = rx.min(w - px);
            let ch = ry.min(h - py);
            brute_sum(f, ox + px, oy + py, cw, ch) as f64
        })
        .collect()
}

fn dense_matrix(m: &SparseMeasurementMatrix) -> Vec<Vec<f64>> {
    let (w, h) = m.window();
    let area = (w * h) as usize;
    m.rows()
        .iter()
        .map(|row| {
            let mut dense = vec![0.0; area * area];
            for e in row {
                let f = e.feature;
                let flat = ((f.ry - 1) * w + (f.rx - 1)) as usize * area + (f.py * w + f.px) as usize;
                dense[flat] += e.sign as f64 * m.weight();
            }
            dense
        })
        .collect()
}

fn mat_vec(m: &[Vec<f64>], x: &[f64]) -> Vec<f64> {
    m.iter()
        .map(|row| row.iter().zip(x).map(|(a, b)| a * b).sum())
        .collect()
}

fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1.0)
}

#[test]
fn integral_corner_and_zero() {
    let ones = SpikeCountFrame::from_counts(Geometry::new(3, 3), vec![1; 9]);
    assert_eq!(IntegralImage::new(&ones).at(3, 3), 9);
    let zeros = SpikeCountFrame::zeros(Geometry::new(5, 4), 0, 0);
    let ii = IntegralImage::new(&zeros);
    for j in 0..=4 {
        for i in 0..=5 {
            assert_eq!(ii.at(i, j), 0);
        }
    }
}

#[test]
fn integral_rectangles_match_brute_force() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..100 {
        let f = random_frame(&mut rng, 16, 16, 9);
        let ii = IntegralImage::new(&f);
        for y in 0..16 {
            for x in 0..16 {
                for h in 1..=16 - y {
                    for w in 1..=16 - x {
                        assert_eq!(ii.rect_sum(Rect::new(x, y, w, h)), brute_sum(&f, x, y, w, h));
                    }
                }
            }
        }
    }
}

#[test]
fn flat_index_bijection_matches_oracle_ordering() {
    let m = SparseMeasurementMatrix::sample(40, 3, 5, 2);
    let map = m.index_map();
    for row in m.rows() {
        for e in row {
            let f = e.feature;
            let oracle = ((f.ry - 1) * 3 + (f.rx - 1)) as u64 * 15 + (f.py * 3 + f.px) as u64;
            assert_eq!(map.encode(f), Some(oracle));
            assert_eq!(map.decode(oracle), Some(f));
        }
    }
}

#[test]
fn sparse_projection_equals_dense_product() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for trial in 0..100u64 {
        let f = random_frame(&mut rng, 12, 10, 6);
        let m = SparseMeasurementMatrix::sample(50, 4, 4, trial);
        let dense = dense_matrix(&m);
        let ii = IntegralImage::new(&f);
        let (ox, oy) = (rng.random_range(0..=8), rng.random_range(0..=6));
        let sparse = m.project(ox, oy, &ii).unwrap();
        let oracle = mat_vec(&dense, &dense_response(&f, ox, oy, 4, 4));
        for (a, b) in sparse.iter().zip(&oracle) {
            assert!(rel_err(*a, *b) <= 1e-9, "{a} vs {b}");
        }
    }
}

#[test]
fn two_by_two_window_on_four_by_four_frame() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let f = random_frame(&mut rng, 4, 4, 20);
    let m = SparseMeasurementMatrix::sample(30, 2, 2, 4);
    assert_eq!(m.index_map().dim(), 16);
    let ii = IntegralImage::new(&f);
    for oy in 0..=2 {
        for ox in 0..=2 {
            let oracle = mat_vec(&dense_matrix(&m), &dense_response(&f, ox, oy, 2, 2));
            assert_eq!(m.project(ox, oy, &ii).unwrap().0, oracle);
        }
    }
}

#[test]
fn zero_frame_projects_to_zero_and_bad_placement_fails() {
    let f = SpikeCountFrame::zeros(Geometry::new(10, 10), 0, 0);
    let ii = IntegralImage::new(&f);
    let m = SparseMeasurementMatrix::sample(20, 5, 5, 0);
    assert!(m.project(2, 2, &ii).unwrap().iter().all(|&v| v == 0.0));
    assert!(m.project(6, 0, &ii).is_err());
    assert!(m.project(0, 6, &ii).is_err());
}

#[test]
fn mean_nonzeros_per_row_is_about_four() {
    let mut rows = 0usize;
    let mut nonzeros = 0usize;
    for seed in 0..250 {
        let m = SparseMeasurementMatrix::sample(50, 16, 16, seed);
        rows += m.rows().len();
        nonzeros += m.nonzeros();
    }
    assert!(rows >= 10_000);
    let mean = nonzeros as f64 / rows as f64;
    assert!((mean - 4.0).abs() <= 0.5, "mean nonzeros per row {mean}");
}

fn ranks(v: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..v.len()).collect();
    idx.sort_by(|&a, &b| v[a].total_cmp(&v[b]));
    let mut r = vec![0.0; v.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && v[idx[j + 1]] == v[idx[i]] {
            j += 1;
        }
        for &k in &idx[i..=j] {
            r[k] = (i + j) as f64 / 2.0;
        }
        i = j + 1;
    }
    r
}

fn spearman(a: &[f64], b: &[f64]) -> f64 {
    let (ra, rb) = (ranks(a), ranks(b));
    let n = a.len() as f64;
    let (ma, mb) = (ra.iter().sum::<f64>() / n, rb.iter().sum::<f64>() / n);
    let cov: f64 = ra.iter().zip(&rb).map(|(x, y)| (x - ma) * (y - mb)).sum();
    let va: f64 = ra.iter().map(|x| (x - ma).powi(2)).sum();
    let vb: f64 = rb.iter().map(|y| (y - mb).powi(2)).sum();
    cov / (va * vb).sqrt()
}

#[test]
fn compressed_distances_track_original_distances() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let m = SparseMeasurementMatrix::sample(50, 4, 4, 1);
    let dense = dense_matrix(&m);
    let (mut orig, mut comp) = (Vec::new(), Vec::new());
    for _ in 0..200 {
        let level = rng.random_range(1..=12);
        let a = random_frame(&mut rng, 4, 4, level);
        let b = random_frame(&mut rng, 4, 4, level);
        let (xa, xb) = (dense_response(&a, 0, 0, 4, 4), dense_response(&b, 0, 0, 4, 4));
        let d: Vec<f64> = xa.iter().zip(&xb).map(|(p, q)| p - q).collect();
        orig.push(d.iter().map(|v| v * v).sum::<f64>());
        comp.push(mat_vec(&dense, &d).iter().map(|v| v * v).sum::<f64>());
    }
    let rho = spearman(&orig, &comp);
    assert!(rho > 0.8, "rank correlation {rho}");
}

proptest! {
    #[test]
    fn projection_is_linear(
        a in prop::collection::vec(0u32..30, 64),
        b in prop::collection::vec(0u32..30, 64),
        alpha in 0u32..5, beta in 0u32..5, seed in 0u64..1000,
        ox in 0u32..=3, oy in 0u32..=2,
    ) {
        let g = Geometry::new(8, 8);
        let m = SparseMeasurementMatrix::sample(25, 5, 6, seed);
        let proj = |c: Vec<u32>| m.project(ox, oy, &IntegralImage::new(&SpikeCountFrame::from_counts(g, c))).unwrap();
        let mix: Vec<u32> = a.iter().zip(&b).map(|(x, y)| alpha * x + beta * y).collect();
        let (pa, pb, pm) = (proj(a), proj(b), proj(mix));
        for i in 0..m.n() {
            prop_assert!(rel_err(pm[i], alpha as f64 * pa[i] + beta as f64 * pb[i]) <= 1e-12);
        }
    }
}
