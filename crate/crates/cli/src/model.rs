use std::path::Path;

use epictrl::graph::StaticGraph;
use epictrl::temporal::{stationary_activation, AmeiNet, AsisModel, MarkovTemporalNet};
use serde::{Deserialize, Serialize};

use crate::CliError;

/// Model file: a network description tagged with its class.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", content = "network", rename_all = "kebab-case")]
pub enum ModelFile {
    Static(StaticGraph),
    Markov(MarkovTemporalNet),
    Amei(AmeiNet),
    Asis(AsisModel),
}

impl ModelFile {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Usage(format!("cannot read {}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))
    }

    pub fn n(&self) -> usize {
        match self {
            ModelFile::Static(g) => g.n(),
            ModelFile::Markov(m) => m.n(),
            ModelFile::Amei(a) => a.n(),
            ModelFile::Asis(a) => a.g0().n(),
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            ModelFile::Static(_) => "static",
            ModelFile::Markov(_) => "markov",
            ModelFile::Amei(_) => "amei",
            ModelFile::Asis(_) => "asis",
        }
    }

    /// Graph used for drawing: the static graph, the first configuration,
    /// the pairs with positive stationary activation, or the initial
    /// adaptive graph.
    pub fn drawing_graph(&self) -> StaticGraph {
        match self {
            ModelFile::Static(g) => g.clone(),
            ModelFile::Markov(m) => m.configs()[0].clone(),
            ModelFile::Amei(a) => {
                let edges: Vec<(usize, usize)> = a
                    .processes()
                    .iter()
                    .filter(|(_, p)| stationary_activation(p).is_ok_and(|a| a > 0.0))
                    .map(|(&k, _)| k)
                    .collect();
                StaticGraph::new(a.n(), edges).expect("pairs are valid edges")
            }
            ModelFile::Asis(a) => a.g0().clone(),
        }
    }
}
