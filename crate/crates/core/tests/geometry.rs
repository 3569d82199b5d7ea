//! Sphere partition geometry, checked with independent spherical formulas.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use spin_rdp::directions::{build_band_partition, default_score, Direction, SpherePartition};

fn uniform_direction(rng: &mut ChaCha8Rng) -> Direction {
    let z: f64 = rng.random_range(-1.0..1.0);
    let phi: f64 = rng.random_range(0.0..2.0 * PI);
    Direction::from_spherical(z.acos(), phi)
}

/// Patch limits in polar and azimuthal angle, from the band table.
struct PatchBox {
    theta: (f64, f64),
    phi: (f64, f64),
}

fn patch_boxes(p: &SpherePartition) -> Vec<PatchBox> {
    let mut out = Vec::with_capacity(p.patch_count());
    for band in p.bands() {
        let theta = (band.z_top.acos(), band.z_bottom.acos());
        let width = 2.0 * PI / band.sectors as f64;
        for s in 0..band.sectors {
            out.push(PatchBox {
                theta,
                phi: (s as f64 * width, (s + 1) as f64 * width),
            });
        }
    }
    out
}

fn inside(b: &PatchBox, theta: f64, phi: f64) -> bool {
    theta >= b.theta.0 && theta <= b.theta.1 && phi >= b.phi.0 && phi <= b.phi.1
}

fn angles(d: &Direction) -> (f64, f64) {
    let theta = d.z().clamp(-1.0, 1.0).acos();
    let phi = d.y().atan2(d.x()).rem_euclid(2.0 * PI);
    (theta, phi)
}

#[test]
fn every_direction_lands_in_exactly_one_patch() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for n in 1..=12u32 {
        let p = build_band_partition(n).unwrap();
        let boxes = patch_boxes(&p);
        assert_eq!(boxes.len(), 1 << n);
        let samples = if n <= 8 { 100_000 } else { 20_000 };
        for _ in 0..samples {
            let d = uniform_direction(&mut rng);
            let (theta, phi) = angles(&d);
            let idx = p.patch_index(&d);
            assert!(idx < p.patch_count());
            assert!(inside(&boxes[idx], theta, phi), "N = {n}, d = {d}, patch {idx}");
            // linear scan: no other patch contains a generic point
            let holders = boxes.iter().filter(|b| inside(b, theta, phi)).count();
            assert_eq!(holders, 1, "N = {n}, d = {d}");
        }
    }
}

#[test]
fn centers_round_trip_and_areas_are_equal() {
    for n in 1..=12u32 {
        let p = build_band_partition(n).unwrap();
        let expected = 4.0 * PI / p.patch_count() as f64;
        let mut total = 0.0;
        for k in 0..p.patch_count() {
            let c = p.patch_center(k).unwrap();
            assert_eq!(p.patch_index(&c), k, "N = {n}, patch {k}");
            assert!(p.contains(k, &c));
            let area = p.patch_area(k).unwrap();
            assert!((area - expected).abs() < 1e-9, "N = {n}, patch {k}: {area}");
            total += area;
        }
        assert!((total - 4.0 * PI).abs() < 1e-9);
    }
}

#[test]
fn hemispheres_for_one_bit() {
    let p = build_band_partition(1).unwrap();
    assert_eq!(p.patch_index(&Direction::PLUS_Z), 0);
    assert_eq!(p.patch_index(&Direction::MINUS_Z), 1);
    assert_eq!(p.patch_center(0).unwrap(), Direction::PLUS_Z);
    assert_eq!(p.patch_center(1).unwrap(), Direction::MINUS_Z);
}

#[test]
fn quantization_score_grows_with_bits() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut previous = 0.0;
    for n in 4..=12u32 {
        let p = build_band_partition(n).unwrap();
        let samples = 20_000;
        let mean = (0..samples)
            .map(|_| {
                let d = uniform_direction(&mut rng);
                default_score(&d, &p.patch_center(p.patch_index(&d)).unwrap())
            })
            .sum::<f64>()
            / samples as f64;
        let floor = 1.0 - 8.0 * PI / (n as f64).exp2();
        assert!(mean >= floor, "N = {n}: mean {mean}, floor {floor}");
        assert!(mean > previous, "N = {n}");
        previous = mean;
    }
}

/// Edges of a patch, each sampled at `per_edge + 1` points.
fn boundary(b: &PatchBox, per_edge: usize) -> Vec<Vec<Direction>> {
    let full_ring = b.phi.1 - b.phi.0 >= 2.0 * PI - 1e-12;
    let steps = |f: &dyn Fn(f64) -> Direction| (0..=per_edge).map(|s| f(s as f64 / per_edge as f64)).collect();
    let lerp = |(a, b): (f64, f64), t: f64| a + t * (b - a);
    let mut edges: Vec<Vec<Direction>> = vec![
        steps(&|t| Direction::from_spherical(b.theta.0, lerp(b.phi, t))),
        steps(&|t| Direction::from_spherical(b.theta.1, lerp(b.phi, t))),
    ];
    if !full_ring {
        edges.push(steps(&|t| Direction::from_spherical(lerp(b.theta, t), b.phi.0)));
        edges.push(steps(&|t| Direction::from_spherical(lerp(b.theta, t), b.phi.1)));
    }
    edges
}

#[test]
fn patches_at_ten_bits_are_small() {
    // A region bounded by two parallels and two meridians attains its
    // diameter on its boundary. Every boundary point lies within h/2 of a
    // sample when consecutive samples are h apart, so the sampled maximum
    // underestimates the diameter by at most h.
    let p = build_band_partition(10).unwrap();
    let limit = 2.0 * (4.0 * PI / 1024.0f64).sqrt();
    let per_edge = 64;
    let mut worst = 0.0f64;
    let mut worst_spacing = 0.0f64;
    for b in patch_boxes(&p) {
        let edges = boundary(&b, per_edge);
        for edge in &edges {
            for w in edge.windows(2) {
                worst_spacing = worst_spacing.max(w[0].angle_to(&w[1]));
            }
        }
        let pts: Vec<&Direction> = edges.iter().flatten().collect();
        for (i, a) in pts.iter().enumerate() {
            for c in &pts[i + 1..] {
                worst = worst.max(a.angle_to(c));
            }
        }
    }
    assert!(worst + worst_spacing < limit, "diameter {worst} (+{worst_spacing}) vs {limit}");
    assert!(limit < 0.2216);
}
