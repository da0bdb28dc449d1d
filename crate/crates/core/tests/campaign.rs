use std::fs;
use std::path::Path;

use shepherd_core::campaign::{
    friedman_rank_summary, read_observations, run_campaign, CampaignConfig, Observation, OBSERVATIONS_FILE,
    SUMMARY_FILE,
};
use shepherd_core::{Error, Mission, RngStream, SheepVariant};

fn config(json: &str, dir: &Path) -> CampaignConfig {
    let mut cfg = CampaignConfig::parse(json).unwrap();
    cfg.output_dir = dir.to_path_buf();
    cfg
}

#[test]
fn random_walk_over_every_scenario() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config(
        r#"{"version":1,"methods":["rwalk"],"budget":0,"designs_per_scenario":10,
            "assessments_per_design":1,"master_seed":3,"output_dir":"x"}"#,
        dir.path(),
    );
    let out = run_campaign(&cfg).unwrap();
    assert_eq!(out.observations.len(), 90);
    assert!(out.summary.is_none());
    let rows = read_observations(fs::File::open(&out.csv_path).unwrap()).unwrap();
    assert_eq!(rows, out.observations);
    for mission in Mission::ALL {
        for sheep in SheepVariant::ALL {
            let n = rows.iter().filter(|r| r.mission == mission && r.sheep == sheep).count();
            assert_eq!(n, 10);
        }
    }
    let header = fs::read_to_string(&out.csv_path).unwrap();
    assert!(header.starts_with("method,mission,sheep,design_idx,seed,objective,sense\n"));
}

fn snapshot(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files = Vec::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in fs::read_dir(&d).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else if !p.to_string_lossy().ends_with(".manifest.json") {
                // manifests record wall-clock time
                let rel = p.strip_prefix(dir).unwrap().to_string_lossy().into_owned();
                files.push((rel, fs::read(&p).unwrap()));
            }
        }
    }
    files.sort();
    files
}

const DESIGN_CAMPAIGN: &str = r#"{"version":1,"methods":["pistacchio","evocmy","rwalk"],
    "scenarios":["dispersion-c1"],"budget":1000,"designs_per_scenario":1,
    "assessments_per_design":1,"master_seed":11,"output_dir":"x"}"#;

#[test]
fn campaigns_are_deterministic_across_threads_and_resumable() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let mut one = config(DESIGN_CAMPAIGN, a.path());
    one.threads = Some(1);
    let mut two = config(DESIGN_CAMPAIGN, b.path());
    two.threads = Some(2);

    let out = run_campaign(&one).unwrap();
    run_campaign(&two).unwrap();
    assert_eq!(out.observations.len(), 3);
    let csv = fs::read(a.path().join(OBSERVATIONS_FILE)).unwrap();
    assert_eq!(csv, fs::read(b.path().join(OBSERVATIONS_FILE)).unwrap());
    assert_eq!(
        fs::read(a.path().join(SUMMARY_FILE)).unwrap(),
        fs::read(b.path().join(SUMMARY_FILE)).unwrap()
    );
    let first = snapshot(a.path());
    assert_eq!(first, snapshot(b.path()));

    // a completed campaign rerun changes nothing
    run_campaign(&one).unwrap();
    assert_eq!(snapshot(a.path()), first);

    // an interrupted one redoes only the missing design, identically
    let missing = a.path().join("controllers/evocmy/dispersion-c1/design-0.json");
    fs::remove_file(&missing).unwrap();
    fs::remove_file(a.path().join(OBSERVATIONS_FILE)).unwrap();
    run_campaign(&one).unwrap();
    assert_eq!(snapshot(a.path()), first);
}

#[test]
fn design_and_assessment_seeds_are_disjoint() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config(
        r#"{"version":1,"methods":["rwalk",{"name":"idle","controller":"idle"}],"budget":0,"designs_per_scenario":4,
            "assessments_per_design":1,"master_seed":0,"output_dir":"x"}"#,
        dir.path(),
    );
    let out = run_campaign(&cfg).unwrap();
    assert!(out.observations.iter().all(|o| o.seed >> 63 == 1));
    // both methods see the same episodes block by block
    let seeds = |m: &str| -> Vec<u64> { out.observations.iter().filter(|o| o.method == m).map(|o| o.seed).collect() };
    assert_eq!(seeds("rwalk"), seeds("idle"));
}

#[test]
fn invalid_campaigns_are_rejected() {
    let bad = [
        r#"{"version":1,"methods":[],"budget":0,"designs_per_scenario":1,"assessments_per_design":1,"master_seed":0,"output_dir":"x"}"#,
        r#"{"version":2,"methods":["rwalk"],"budget":0,"designs_per_scenario":1,"assessments_per_design":1,"master_seed":0,"output_dir":"x"}"#,
        r#"{"version":1,"methods":["evocmy"],"budget":999,"designs_per_scenario":1,"assessments_per_design":1,"master_seed":0,"output_dir":"x"}"#,
        r#"{"version":1,"methods":["rwalk","rwalk"],"budget":0,"designs_per_scenario":1,"assessments_per_design":1,"master_seed":0,"output_dir":"x"}"#,
        r#"{"version":1,"methods":["evocmy","rwalk"],"budget":1000,"designs_per_scenario":2,"assessments_per_design":1,"fixed_assessments":3,"master_seed":0,"output_dir":"x"}"#,
        r#"{"version":1,"methods":["rwalk"],"scenarios":["herding-c4"],"budget":0,"designs_per_scenario":1,"assessments_per_design":1,"master_seed":0,"output_dir":"x"}"#,
    ];
    for text in bad {
        assert!(matches!(CampaignConfig::parse(text), Err(Error::InvalidConfig(_))), "{text}");
    }
}

#[test]
fn unwritable_output_is_an_io_error() {
    let dir = tempfile::tempdir().unwrap();
    let blocker = dir.path().join("file");
    fs::write(&blocker, "x").unwrap();
    let cfg = config(
        r#"{"version":1,"methods":["rwalk"],"scenarios":["herding-c1"],"budget":0,
            "designs_per_scenario":1,"assessments_per_design":1,"master_seed":0,"output_dir":"x"}"#,
        &blocker.join("out"),
    );
    assert!(matches!(run_campaign(&cfg), Err(Error::Io(_))));
}

/// Independent Friedman summary: tie-corrected statistic in the textbook
/// form and the normal-approximation interval with a tabulated quantile.
fn reference(blocks: &[Vec<f64>]) -> (Vec<f64>, f64, f64) {
    let n = blocks.len() as f64;
    let k = blocks[0].len();
    let kf = k as f64;
    let mut sums = vec![0.0; k];
    let mut tie_term = 0.0;
    for b in blocks {
        for i in 0..k {
            let below = b.iter().filter(|&&v| v < b[i]).count() as f64;
            let equal = b.iter().filter(|&&v| v == b[i]).count() as f64;
            sums[i] += below + (equal + 1.0) / 2.0;
        }
        let mut seen: Vec<f64> = Vec::new();
        for &v in b {
            if !seen.contains(&v) {
                seen.push(v);
                let t = b.iter().filter(|&&w| w == v).count() as f64;
                tie_term += t * t * t - t;
            }
        }
    }
    let dev: f64 = sums.iter().map(|r| (r - n * (kf + 1.0) / 2.0).powi(2)).sum();
    let chi = 12.0 * dev / (n * kf * (kf + 1.0) - tie_term / (kf - 1.0));
    let z = 1.959_963_984_540_054;
    let half = 0.5 * z * (kf * (kf + 1.0) / (6.0 * n)).sqrt();
    (sums.iter().map(|r| r / n).collect(), chi, half)
}

#[test]
fn rank_summary_matches_reference_on_synthetic_data() {
    let methods = ["alpha", "beta", "gamma", "delta"];
    let mut rng = RngStream::new(99);
    let mut rows = Vec::new();
    let mut blocks = Vec::new();
    for (si, (mission, sheep)) in Mission::ALL
        .into_iter()
        .flat_map(|m| SheepVariant::ALL.into_iter().map(move |v| (m, v)))
        .enumerate()
    {
        let mut cells = vec![Vec::new(); methods.len()];
        for _ in 0..10 {
            let mut block = Vec::new();
            for (mi, m) in methods.iter().enumerate() {
                // coarse values force ties; methods drift apart by index
                let objective = (rng.int_inclusive(0, 6) as f64 + mi as f64 * 0.7).floor() + si as f64;
                cells[mi].push(objective);
                block.push(mission.sense().cost(objective));
                rows.push(Observation {
                    method: m.to_string(),
                    mission,
                    sheep,
                    design_idx: 0,
                    seed: 0,
                    objective,
                    sense: mission.sense(),
                });
            }
            blocks.push(block);
        }
    }
    assert_eq!(blocks.len(), 90);
    let summary = friedman_rank_summary(&rows, 0.05).unwrap();
    let (means, chi, half) = reference(&blocks);
    assert_eq!(summary.n_blocks, 90);
    assert!((summary.statistic - chi).abs() <= 1e-9, "{} vs {chi}", summary.statistic);
    assert!((summary.half_width - half).abs() <= 1e-9);
    let total: f64 = summary.methods.iter().map(|m| m.mean_rank).sum();
    assert!((total - 10.0).abs() <= 1e-9);
    for (m, r) in methods.iter().zip(&means) {
        let got = summary.get(m).unwrap();
        assert!((got.mean_rank - r).abs() <= 1e-9);
        assert!(got.ci_low <= got.mean_rank && got.mean_rank <= got.ci_high);
    }
}

#[test]
fn unbalanced_observations_are_invalid_input() {
    let row = |m: &str, o: f64| Observation {
        method: m.into(),
        mission: Mission::Herding,
        sheep: SheepVariant::C2,
        design_idx: 0,
        seed: 0,
        objective: o,
        sense: Mission::Herding.sense(),
    };
    let rows = vec![row("a", 1.0), row("a", 2.0), row("b", 3.0)];
    assert!(matches!(friedman_rank_summary(&rows, 0.05), Err(Error::InvalidInput(_))));
}
