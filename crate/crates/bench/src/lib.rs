//! Shared fixtures for the criterion benches, all derived from the
//! planted-amplification generator so sizes scale with one knob.

use disinfo_core::classifier::{init_params, ModelConfig, ModelParams};
use disinfo_core::corpus::Corpus;
use disinfo_core::features::{FeatureBundle, FeatureConfig, FeatureModel};
use disinfo_core::itemsets::{default_stopwords, to_transactions, Transaction};
use disinfo_core::synth::{generate_synthetic, SyntheticSpec};
use disinfo_core::usergraph::{build_user_graph, EdgeMode, UserGraph};

pub fn corpus(n_genuine: usize, n_fake: usize) -> Corpus {
    generate_synthetic(&SyntheticSpec {
        n_genuine,
        n_fake,
        ..SyntheticSpec::default()
    })
    .expect("feasible synthetic corpus")
    .corpus
}

pub fn transactions(corpus: &Corpus) -> Vec<Transaction> {
    to_transactions(corpus, &default_stopwords(), 3)
}

pub fn user_graph(corpus: &Corpus) -> UserGraph {
    build_user_graph(corpus, EdgeMode::AuthorRetweeter)
}

/// Featurised, labeled samples plus freshly initialised parameters.
pub struct TrainFixture {
    pub samples: Vec<(FeatureBundle, f64)>,
    pub params: ModelParams,
}

impl TrainFixture {
    pub fn new(corpus: &Corpus) -> Self {
        let model = FeatureModel::fit(corpus, FeatureConfig::default()).expect("fit");
        let samples = model
            .featurize_labeled(corpus)
            .into_iter()
            .map(|b| (b.features, b.label.as_f64()))
            .collect();
        let config = ModelConfig::new(model.vocab.len(), model.vocab.len(), model.svd.k, 0);
        TrainFixture {
            samples,
            params: init_params(&config).expect("valid config"),
        }
    }

    pub fn batch(&self) -> Vec<(&FeatureBundle, f64)> {
        self.samples.iter().map(|(x, y)| (x, *y)).collect()
    }
}
