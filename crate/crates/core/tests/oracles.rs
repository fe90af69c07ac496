mod common;

use bikeshare_core::balance::standard_windows;
use bikeshare_core::cluster::{davies_bouldin_labels, dunn_labels, silhouette_labels};
use bikeshare_core::ingest::EventKind;
use bikeshare_core::synth::{generate_shortage_script, prefix_sum_extremes, ScriptPattern};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use common::*;

#[test]
fn validity_indices_match_naive_reference() {
    let mut rng = ChaCha8Rng::seed_from_u64(2015);
    for case in 0..50 {
        let (points, labels) = random_instance(&mut rng, 200);
        let pairs = [
            (
                "silhouette",
                silhouette_labels(&points, &labels).unwrap(),
                naive_silhouette(&points, &labels),
            ),
            (
                "davies-bouldin",
                davies_bouldin_labels(&points, &labels).unwrap(),
                naive_davies_bouldin(&points, &labels),
            ),
            (
                "dunn",
                dunn_labels(&points, &labels).unwrap(),
                naive_dunn(&points, &labels),
            ),
        ];
        for (name, got, want) in pairs {
            assert!(
                (got - want).abs() <= 1e-9,
                "case {case} ({} points): {name} {got} vs reference {want}",
                points.len()
            );
        }
    }
}

#[test]
fn validity_hand_fixtures() {
    let pts = |xs: &[f64]| xs.iter().map(|&x| vec![x]).collect::<Vec<_>>();
    let db = davies_bouldin_labels(&pts(&[0.0, 2.0, 10.0, 12.0]), &[0, 0, 1, 1]).unwrap();
    assert!((db - 0.2).abs() < 1e-12);
    let dunn = dunn_labels(&pts(&[0.0, 1.0, 10.0, 11.0]), &[0, 0, 1, 1]).unwrap();
    assert!((dunn - 9.0).abs() < 1e-12);
    // Outer points score 9.5/10.5; inner points 8.5/9.5.
    let p = pts(&[0.0, 1.0, 10.0, 11.0]);
    let s = silhouette_labels(&p, &[0, 0, 1, 1]).unwrap();
    assert!((s - naive_silhouette(&p, &[0, 0, 1, 1])).abs() < 1e-15);
    assert!((s - (9.5 / 10.5 + 8.5 / 9.5) / 2.0).abs() < 1e-12);
}

#[test]
fn shortage_scan_matches_prefix_sums() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let windows = standard_windows();
    for _ in 0..1000 {
        let events = random_station_day(&mut rng, 500);
        let w = &windows[rng.random_range(0..windows.len())];
        assert_eq!(extremes(&events, w), prefix_sum_oracle(&events, w));
    }
}

#[test]
fn scripted_days_agree_with_scan() {
    use EventKind::{Dropoff as D, Pickup as P};
    let full = &standard_windows()[0];
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut patterns = vec![
        ScriptPattern::Alternating(20),
        ScriptPattern::Block(1),
        ScriptPattern::Block(5),
        ScriptPattern::Block(50),
        ScriptPattern::Custom(vec![P, P, D, D, D, P]),
    ];
    for _ in 0..200 {
        let n = rng.random_range(0..300);
        patterns.push(ScriptPattern::Custom(
            (0..n)
                .map(|_| if rng.random_bool(0.5) { P } else { D })
                .collect(),
        ));
    }
    for pattern in &patterns {
        let script = generate_shortage_script(pattern, "S".into(), day());
        let truth = (script.truth.max_shortage, script.truth.max_excess);
        assert_eq!(extremes(&script.events, full), truth, "{pattern:?}");
        assert_eq!(prefix_sum_oracle(&script.events, full), truth);
        assert_eq!(prefix_sum_extremes(&pattern.kinds()), script.truth);
    }
}
