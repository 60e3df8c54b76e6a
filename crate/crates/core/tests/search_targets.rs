use synthlayout::catalog::ModelCatalog;
use synthlayout::scene::presets::preset;
use synthlayout::search::{search, MetricTarget, SearchConfig};

#[test]
fn packed_room_target_beats_the_base_layout() {
    let cat = ModelCatalog::primitives();
    let base = preset("random_placement").unwrap().params;
    let target = MetricTarget::reference_profile("more_objects").unwrap();
    let config = SearchConfig {
        budget: 20,
        scenes_per_eval: 50,
        seed: 1,
        final_scenes: 0,
        ..Default::default()
    };
    let report = search(&target, &base, &cat, &config).unwrap();
    assert_eq!(report.trace.len(), 20);
    let base_score = report.trace[0].score_value();
    let best = report.best().score_value();
    assert!(best < base_score, "best {best} vs base {base_score}");
}
