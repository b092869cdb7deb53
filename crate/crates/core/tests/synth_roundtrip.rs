use std::collections::BTreeSet;

use newsnet::identify::{identify_articles, IdentConfig};
use newsnet::synth::{generate, SynthConfig};

fn cfg(seed: u64) -> SynthConfig {
    SynthConfig { seed, n_firms: 40, n_days: 120, burn_in_days: 120, distractor_rate: 0.2, ..Default::default() }
}

#[test]
fn identification_recovers_planted_linkages() {
    for seed in 1..=5 {
        let data = generate(&cfg(seed)).unwrap();
        let out = identify_articles(&data.articles, &data.market.master, &IdentConfig::default());
        let got: BTreeSet<_> = out.linkages.iter().cloned().collect();
        let want: BTreeSet<_> = data.corpus_oracle.linkages.iter().cloned().collect();
        assert_eq!(got, want, "seed {seed}");
        for r in &out.results {
            assert_eq!(r.verdict, data.corpus_oracle.verdicts[&r.article_id], "{}", r.article_id);
        }
    }
}

#[test]
fn written_dataset_reloads() {
    let data = generate(&cfg(3)).unwrap();
    let dir = tempfile::tempdir().unwrap();
    data.write(dir.path()).unwrap();
    let articles = newsnet::corpus::load_articles(dir.path().join("articles.jsonl")).unwrap();
    assert_eq!(articles, data.articles);
    let master = newsnet::corpus::load_firm_master(dir.path().join("firms.csv"), dir.path().join("membership.csv")).unwrap();
    assert_eq!(master, data.market.master);
    let prices = newsnet::corpus::load_prices(dir.path().join("prices.csv"), &master).unwrap();
    assert_eq!(prices.len(), data.market.prices.len());
    let links = newsnet::identify::load_linkages(dir.path().join("oracle_linkages.csv")).unwrap();
    assert_eq!(links, data.corpus_oracle.linkages);
}
