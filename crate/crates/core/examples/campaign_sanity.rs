//! Quick look at a few packaged-style campaigns.

use miscrit::{run_campaign, CandidateSpec, Criterion, Experiment, SimConfig};

fn show(cfg: &SimConfig) {
    let t = run_campaign(cfg, None).unwrap();
    println!(
        "{:?} n={} sigma={:?} a={:?} failures={}",
        cfg.experiment, cfg.n, cfg.sigma, cfg.a, t.failures
    );
    print!("{:>6}", "crit");
    for c in &t.columns {
        print!("{c:>5}");
    }
    println!();
    for (i, name) in t.criteria.iter().enumerate() {
        print!("{name:>6}");
        for v in &t.counts[i] {
            print!("{v:>5}");
        }
        println!();
    }
}

fn main() {
    let seed = 20260823;
    show(&SimConfig {
        experiment: Experiment::PolyCubic,
        n: 200,
        sigma: Some(0.5),
        a: None,
        replicates: 100,
        seed,
        criteria: Criterion::ALL.to_vec(),
        candidates: CandidateSpec::Orders((1..=6).collect()),
    });
    show(&SimConfig {
        experiment: Experiment::BestSubsetLinear,
        n: 200,
        sigma: Some(0.5),
        a: None,
        replicates: 100,
        seed,
        criteria: Criterion::ALL.to_vec(),
        candidates: CandidateSpec::Sizes((1..=6).collect()),
    });
    show(&SimConfig {
        experiment: Experiment::Interaction,
        n: 1000,
        sigma: Some(0.5),
        a: None,
        replicates: 100,
        seed,
        criteria: Criterion::ALL.to_vec(),
        candidates: CandidateSpec::Sizes((1..=6).collect()),
    });
    show(&SimConfig {
        experiment: Experiment::HeteroPoly,
        n: 200,
        sigma: Some(1.0),
        a: None,
        replicates: 100,
        seed,
        criteria: Criterion::ALL.to_vec(),
        candidates: CandidateSpec::Orders((1..=6).collect()),
    });
    show(&SimConfig {
        experiment: Experiment::SingleIndex,
        n: 150,
        sigma: None,
        a: Some(0.25),
        replicates: 100,
        seed,
        criteria: Criterion::ALL.to_vec(),
        candidates: CandidateSpec::Sizes((1..=6).collect()),
    });
}
