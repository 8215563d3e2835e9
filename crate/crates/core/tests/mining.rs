use dagtrace::counting::count_traces;
use dagtrace::enumerate::{exact_frequencies, DEFAULT_BUDGET};
use dagtrace::mining::{mine_with_table, MineConfig, VerifyMode, DEFAULT_FRESH_EXTRA};
use dagtrace::synthetic::local_dag;
use dagtrace::LabeledDag;

/// `copies` chains x -> y plus `background` isolated vertices with unique
/// labels. With m = 2 each of x, y and x-y has relative frequency
/// `copies / (3 copies + background)`.
fn dominant(copies: usize, background: usize) -> LabeledDag {
    let mut names: Vec<String> = (0..background).map(|i| format!("b{i}")).collect();
    let mut edges = Vec::new();
    for _ in 0..copies {
        let at = names.len() as u32;
        names.push("x".into());
        names.push("y".into());
        edges.push((at, at + 1));
    }
    LabeledDag::from_names(&names, &edges).unwrap()
}

#[test]
fn dominant_trace_is_reported_with_a_close_estimate() {
    let dag = dominant(300, 600);
    let table = count_traces(&dag, 2).unwrap();
    let exact = exact_frequencies(&dag, 2, DEFAULT_BUDGET).unwrap();
    let xy = [dag.label(600), dag.label(601)];
    let truth = exact.relative_frequency(&xy);
    assert!((truth - 0.2).abs() < 1e-12);

    let runs = 300;
    let mut reported = 0;
    let mut close = 0;
    for seed in 0..runs {
        let report = mine_with_table(&dag, &table, &MineConfig::new(2, 0.1, 10.0, seed)).unwrap();
        assert!(report.meta.p < 1.0);
        assert_eq!(report.meta.summary_capacity, 20);
        if let Some(e) = report.get(&xy) {
            reported += 1;
            assert!(e.sample_count >= 5);
            if (e.est_frequency - truth).abs() <= 0.5 * truth {
                close += 1;
            }
        }
    }
    // Frequency 2 epsilon: expected count 20, so a count of at least 5 is
    // nearly certain; the claim to check is >= 93%.
    assert!(reported as f64 >= 0.93 * runs as f64, "{reported}/{runs}");
    assert!(close as f64 >= 0.9 * runs as f64, "{close}/{runs}");
}

#[test]
fn unique_traces_give_an_empty_report() {
    let dag = local_dag(20_000, 2, 8, 1_000_000, 4);
    let table = count_traces(&dag, 3).unwrap();
    let total = table.total().unwrap();
    assert!(total as f64 > 100.0 * 10.0 / 0.1);
    for seed in 0..20 {
        for mode in [VerifyMode::SameSeed, VerifyMode::Fresh { extra_oversample: DEFAULT_FRESH_EXTRA }] {
            let cfg = MineConfig::new(3, 0.1, 10.0, seed).with_mode(mode);
            let report = mine_with_table(&dag, &table, &cfg).unwrap();
            assert!(report.entries.is_empty(), "seed {seed}: {:?}", report.entries);
        }
    }
}

#[test]
fn summary_never_exceeds_its_capacity() {
    let dag = dominant(100, 5000);
    let table = count_traces(&dag, 2).unwrap();
    for (eps, k) in [(0.1, 20), (0.5, 4)] {
        let report = mine_with_table(&dag, &table, &MineConfig::new(2, eps, 10.0, 1)).unwrap();
        assert_eq!(report.meta.summary_capacity, k);
        assert!(report.meta.summary_peak <= k);
        assert!(report.meta.candidates <= k);
    }
}
