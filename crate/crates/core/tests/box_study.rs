use esfem_core::analysis::{perturbed_descriptor, regular_descriptor, run_box_study, BoxStudyConfig, ERRORS_CSV_HEADER};
use esfem_core::Method;

fn config() -> BoxStudyConfig {
    BoxStudyConfig {
        divisions: vec![4, 8],
        perturbation: 0.2,
        seeds: vec![7],
        ..BoxStudyConfig::default()
    }
}

#[test]
fn rows_follow_the_documented_order() {
    let study = run_box_study(&config()).unwrap();
    let rows: Vec<(String, Method)> = study.reports.iter().map(|r| (r.mesh_descriptor.clone(), r.method)).collect();
    let mut expected = Vec::new();
    for n in [4, 8] {
        for d in [regular_descriptor(n), perturbed_descriptor(n, 0.2, 7)] {
            expected.push((d.clone(), Method::Fem));
            expected.push((d, Method::EsFem));
        }
    }
    assert_eq!(rows, expected);
    let csv = study.errors_csv(false);
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some(ERRORS_CSV_HEADER));
    assert_eq!(lines.count(), 8);
    assert!(csv.lines().skip(1).all(|l| l.ends_with(',')));
    assert!(study.errors_csv(true).lines().skip(1).all(|l| !l.ends_with(',')));
}

#[test]
fn fem_error_falls_with_refinement() {
    let study = run_box_study(&BoxStudyConfig {
        divisions: vec![4, 8, 16],
        perturbation: 0.0,
        ..BoxStudyConfig::default()
    })
    .unwrap();
    assert_eq!(study.reports.len(), 6);
    for method in [Method::Fem, Method::EsFem] {
        let e: Vec<f64> = [4, 8, 16].iter().map(|&n| study.report(&regular_descriptor(n), method).unwrap().rmse).collect();
        assert!(e[0] > e[1] && e[1] > e[2], "{e:?}");
    }
}

#[test]
fn distortion_hurts_fem_more() {
    let study = run_box_study(&config()).unwrap();
    let n = 8;
    let growth = |m| {
        study.report(&perturbed_descriptor(n, 0.2, 7), m).unwrap().rmse / study.report(&regular_descriptor(n), m).unwrap().rmse
    };
    assert!(growth(Method::Fem) > growth(Method::EsFem));
}

#[test]
fn reports_are_bitwise_reproducible() {
    let a = run_box_study(&config()).unwrap();
    let b = run_box_study(&config()).unwrap();
    for (x, y) in a.reports.iter().zip(&b.reports) {
        assert_eq!(x.rmse.to_bits(), y.rmse.to_bits());
        assert_eq!(x.max_abs_error.to_bits(), y.max_abs_error.to_bits());
        assert_eq!(x.h.to_bits(), y.h.to_bits());
        assert_eq!(x.iterations, y.iterations);
    }
    assert_eq!(a.histogram_csv(), b.histogram_csv());
}

#[test]
fn histograms_cover_every_element() {
    let study = run_box_study(&config()).unwrap();
    assert_eq!(study.meshes.len(), 4);
    for m in &study.meshes {
        assert_eq!(m.quality.histogram.iter().sum::<usize>(), m.quality.per_element_ratio.len());
    }
    let regular = study.mesh(&regular_descriptor(8)).unwrap();
    let perturbed = study.mesh(&perturbed_descriptor(8, 0.2, 7)).unwrap();
    assert!(perturbed.quality.fraction_above(2.0) > regular.quality.fraction_above(2.0));
}
