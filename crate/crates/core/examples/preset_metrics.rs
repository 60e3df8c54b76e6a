use synthlayout::catalog::ModelCatalog;
use synthlayout::dataset::evaluate_dataset;
use synthlayout::metrics::MetricsConfig;
use synthlayout::scene::presets::presets;

fn main() {
    let mut args = std::env::args().skip(1);
    let n: u64 = args.next().and_then(|s| s.parse().ok()).unwrap_or(500);
    let count: Option<u32> = args.next().and_then(|s| s.parse().ok());
    let cat = ModelCatalog::primitives();
    for mut p in presets() {
        if let Some(c) = count {
            p.params.target_object_count = c;
        }
        let t = std::time::Instant::now();
        let e = evaluate_dataset(&p.params, &cat, n, &MetricsConfig::default());
        let m = e.metrics;
        println!(
            "{:22} count {:.2} occ {:.3} scale {:?} polar {:.4} failed {} ({:.1}s)",
            p.name,
            m.object_count.unwrap_or(0.0),
            m.avg_occlusion.unwrap_or(0.0),
            m.scale_dist.map(|s| s.map(|x| (x * 1000.0).round() / 1000.0)),
            m.polar_coverage.unwrap_or(0.0),
            e.failed_scenes,
            t.elapsed().as_secs_f64()
        );
    }
}
