//! Brute-force reference for the vector field, written without the crate's
//! coefficient tables: every signed pair `h + h' = k` is enumerated and the
//! unsymmetrised triad sum is formed directly.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::Arc;

use galerkin_core::dynamics::eval_vector_field;
use galerkin_core::fast::eval_vector_field_fast;
use galerkin_core::lattice::build_truncation;
use galerkin_core::rng::stream;
use galerkin_core::{CoeffTable, Complex64, ModeIndex, ModelParams, SpectralField};
use rand::Rng;

fn lam(k: (i32, i32), a: f64, s: f64) -> f64 {
    let k2 = (k.0 * k.0 + k.1 * k.1) as f64;
    k2 * (1.0 + a * a * k2).powf(s)
}

fn signed_values(f: &SpectralField) -> HashMap<(i32, i32), Complex64> {
    let mut m = HashMap::new();
    for (k, w) in f.trunc().modes().iter().zip(f.coeffs()) {
        m.insert((k.k1, k.k2), *w);
        m.insert((-k.k1, -k.k2), w.conj());
    }
    m
}

// `2π λ'_k dω_k/dt = Σ_{h + h' = k} (h^⊥·k) λ'_{h'} ω_h ω_{h'}` over all signed h.
fn brute_force(f: &SpectralField, a: f64, s: f64) -> Vec<Complex64> {
    let w = signed_values(f);
    f.trunc()
        .modes()
        .iter()
        .map(|k| {
            let k = (k.k1, k.k2);
            let mut acc = Complex64::new(0.0, 0.0);
            for (&h, &wh) in &w {
                let hp = (k.0 - h.0, k.1 - h.1);
                if let Some(&whp) = w.get(&hp) {
                    let cross = (-h.1 * k.0 + h.0 * k.1) as f64;
                    acc += wh * whp * (cross * lam(hp, a, s));
                }
            }
            acc / (2.0 * PI * lam(k, a, s))
        })
        .collect()
}

// The symmetrised variant carrying `(h² - h'²)(1 + a²h'²)^s`.
fn symmetrised_variant(f: &SpectralField, a: f64, s: f64) -> Vec<Complex64> {
    let w = signed_values(f);
    f.trunc()
        .modes()
        .iter()
        .map(|k| {
            let k = (k.k1, k.k2);
            let mut acc = Complex64::new(0.0, 0.0);
            for (&h, &wh) in &w {
                let hp = (k.0 - h.0, k.1 - h.1);
                if let Some(&whp) = w.get(&hp) {
                    // h · h'^⊥ with h'^⊥ = (-h'_2, h'_1)
                    let dot = (-h.0 * hp.1 + h.1 * hp.0) as f64;
                    let h2 = (h.0 * h.0 + h.1 * h.1) as f64;
                    let hp2 = (hp.0 * hp.0 + hp.1 * hp.1) as f64;
                    acc += wh * whp * (0.5 * dot * (h2 - hp2) * (1.0 + a * a * hp2).powf(s));
                }
            }
            acc / (2.0 * PI * lam(k, a, s))
        })
        .collect()
}

fn random_field(n: i64, seed: u64) -> SpectralField {
    let t = Arc::new(build_truncation(n).unwrap());
    let mut g = stream(seed, 0);
    let c = (0..t.len())
        .map(|_| Complex64::new(g.random_range(-1.0..1.0), g.random_range(-1.0..1.0)))
        .collect();
    SpectralField::from_coeffs(t, c).unwrap()
}

fn max_diff(a: &[Complex64], b: &[Complex64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).norm())
        .fold(0.0, f64::max)
}

fn sup(a: &[Complex64]) -> f64 {
    a.iter().map(|x| x.norm()).fold(0.0, f64::max)
}

#[test]
fn direct_path_matches_brute_force() {
    for (a, s) in [(1.0, 1.0), (0.5, 0.0), (2.0, 1.5)] {
        let p = ModelParams::new(a, s, 1.0).unwrap();
        for n in 1..=4 {
            for seed in 0..20 {
                let f = random_field(n, seed);
                let table = CoeffTable::new(f.trunc().clone(), p);
                let b = eval_vector_field(&f, &table).unwrap();
                let o = brute_force(&f, a, s);
                assert!(max_diff(b.coeffs(), &o) <= 1e-13, "N={n} a={a} s={s}");
            }
        }
    }
}

#[test]
fn symmetrised_variant_agrees_only_without_filter() {
    let f = random_field(8, 11);
    let euler = symmetrised_variant(&f, 1.0, 0.0);
    assert!(max_diff(&euler, &brute_force(&f, 1.0, 0.0)) <= 1e-13);
    let filtered = symmetrised_variant(&f, 1.0, 1.0);
    let reference = brute_force(&f, 1.0, 1.0);
    assert!(max_diff(&filtered, &reference) > 1e-3 * sup(&reference));
}

#[test]
fn fast_path_matches_direct_path() {
    let p = ModelParams::new(1.0, 1.0, 1.0).unwrap();
    for n in [1, 2, 4, 8, 16, 32, 64] {
        let f = random_field(n, 100 + n as u64);
        let table = CoeffTable::new(f.trunc().clone(), p);
        let d = eval_vector_field(&f, &table).unwrap();
        let q = eval_vector_field_fast(&f, &p).unwrap();
        assert!(
            max_diff(d.coeffs(), q.coeffs()) <= 1e-10 * sup(d.coeffs()),
            "N={n}"
        );
    }
}

#[test]
fn two_mode_rotation() {
    // With one |k|² = 2 mode frozen, (1,0) and (0,1) rotate linearly.
    let t = Arc::new(build_truncation(2).unwrap());
    let p = ModelParams::new(1.0, 1.0, 1.0).unwrap();
    let table = CoeffTable::new(t.clone(), p);
    let f = SpectralField::from_modes(
        t,
        &[
            (ModeIndex::new(1, 1), Complex64::new(0.4, 0.0)),
            (ModeIndex::new(1, 0), Complex64::new(0.2, 0.1)),
        ],
    )
    .unwrap();
    let b = eval_vector_field(&f, &table).unwrap();
    let o = brute_force(&f, 1.0, 1.0);
    assert!(max_diff(b.coeffs(), &o) <= 1e-15);
    assert!(b.lookup(ModeIndex::new(0, 1)).unwrap().norm() > 0.0);
}
