use foliage_rt::envelope::generate_envelope;
use foliage_rt::rng::{stream, Stage};
use foliage_rt::scatter::{fill, random_rotation, Containment, RotationMatrix};
use foliage_rt::{FoliageParams, TriMesh, Vec3};
use proptest::prelude::*;
use statrs::distribution::{ChiSquared, ContinuousCDF};

fn cube(side: f64) -> TriMesh {
    let h = side / 2.0;
    let v: Vec<Vec3> = (0..8)
        .map(|i| Vec3::new(if i & 1 == 0 { -h } else { h }, if i & 2 == 0 { -h } else { h }, if i & 4 == 0 { -h } else { h }))
        .collect();
    let quads = [[0, 2, 3, 1], [4, 5, 7, 6], [0, 1, 5, 4], [2, 6, 7, 3], [0, 4, 6, 2], [1, 3, 7, 5]];
    let faces = quads.iter().flat_map(|q| [[q[0], q[1], q[2]], [q[0], q[2], q[3]]]).collect();
    TriMesh::new(v, faces).unwrap()
}

fn chi_square(counts: &[u64], expected: f64) -> f64 {
    counts.iter().map(|&c| (c as f64 - expected).powi(2) / expected).sum()
}

fn critical(df: usize) -> f64 {
    ChiSquared::new(df as f64).unwrap().inverse_cdf(0.999)
}

#[test]
fn centres_are_uniform_in_a_cube() {
    let side = 4.0;
    let envelope = cube(side);
    assert!((envelope.volume().unwrap() - 64.0).abs() < 1e-12);
    let params = FoliageParams::new(64.0, 0.0, 0, 10_000.0 / 64.0, 0.01, 8).unwrap();
    let soup = fill(&envelope, &params, &mut stream(8, Stage::Fill)).unwrap();
    assert_eq!(soup.len(), 10_000);
    let mut counts = [0u64; 64];
    for c in soup.centroids() {
        let idx = |x: f64| (((x + side / 2.0) / side * 4.0) as usize).min(3);
        counts[idx(c.x) + 4 * idx(c.y) + 16 * idx(c.z)] += 1;
    }
    let stat = chi_square(&counts, 10_000.0 / 64.0);
    assert!(stat < critical(63), "chi2 = {stat}");
}

#[test]
fn centres_stay_inside_the_envelope() {
    let params = FoliageParams::new(300.0, 0.2, 2, 1.0, 2.0, 4).unwrap();
    let envelope = generate_envelope(&params, &mut stream(4, Stage::Envelope)).unwrap();
    let soup = fill(&envelope, &params, &mut stream(4, Stage::Fill)).unwrap();
    let inside = Containment::new(&envelope).unwrap();
    assert_eq!(soup.len(), 300);
    assert!(soup.centroids().iter().all(|c| inside.contains(c)));
    for (k, c) in soup.centroids().iter().enumerate() {
        let t = soup.mesh().triangle(k);
        assert!(((t[0] + t[1] + t[2]) / 3.0 - c).norm() < 1e-9);
    }
}

#[test]
fn rotations_are_orthonormal_and_proper() {
    let mut rng = stream(17, Stage::Fill);
    for _ in 0..100_000 {
        let r = random_rotation(&mut rng);
        assert!(r.orthonormality_error() < 1e-12);
        assert!((r.determinant() - 1.0).abs() < 1e-12);
    }
}

#[test]
fn rotated_axes_cover_octants_evenly() {
    let mut rng = stream(23, Stage::Fill);
    let n = 100_000;
    let mut counts = [[0u64; 8]; 3];
    let mut cos_sum = 0.0;
    for _ in 0..n {
        let r: RotationMatrix = random_rotation(&mut rng);
        for (axis, row) in counts.iter_mut().enumerate() {
            let v = r.apply(&Vec3::ith(axis, 1.0));
            row[(v.x > 0.0) as usize + 2 * (v.y > 0.0) as usize + 4 * (v.z > 0.0) as usize] += 1;
        }
        cos_sum += (r.matrix().trace() - 1.0) / 2.0;
    }
    for row in &counts {
        let stat = chi_square(row, n as f64 / 8.0);
        assert!(stat < critical(7), "chi2 = {stat}");
    }
    // Haar measure: E[cos theta] = -1/2, Var = 1/4
    let mean_cos = cos_sum / n as f64;
    assert!((mean_cos + 0.5).abs() < 5.0 * 0.5 / (n as f64).sqrt(), "{mean_cos}");
}

#[test]
fn soup_is_reproducible() {
    let params = FoliageParams::default().with_seed(77);
    let envelope = generate_envelope(&params, &mut stream(77, Stage::Envelope)).unwrap();
    let a = fill(&envelope, &params, &mut stream(77, Stage::Fill)).unwrap();
    let b = fill(&envelope, &params, &mut stream(77, Stage::Fill)).unwrap();
    assert_eq!(a.mesh().vertices(), b.mesh().vertices());
}

#[test]
fn empty_density_gives_empty_soup() {
    let params = FoliageParams::default().with_rho(0.0).unwrap();
    let envelope = generate_envelope(&params, &mut stream(0, Stage::Envelope)).unwrap();
    assert!(fill(&envelope, &params, &mut stream(0, Stage::Fill)).unwrap().is_empty());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn count_and_areas_match_parameters(
        seed in any::<u64>(),
        v in 20.0f64..400.0,
        rho in 0.0f64..1.5,
        area in 0.05f64..4.0,
    ) {
        let params = FoliageParams::new(v, 0.1, 1, rho, area, seed).unwrap();
        let envelope = generate_envelope(&params, &mut stream(seed, Stage::Envelope)).unwrap();
        let soup = fill(&envelope, &params, &mut stream(seed, Stage::Fill)).unwrap();
        prop_assert_eq!(soup.len(), (rho * v).floor() as usize);
        for k in 0..soup.len() {
            prop_assert!((soup.mesh().face_area(k) - area).abs() / area < 1e-9);
        }
    }
}
