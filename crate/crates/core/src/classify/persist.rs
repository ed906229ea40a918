//! Versioned JSON persistence for trained models.
//!
//! Parameters are stored as the 16-hex-digit bit pattern of each `f64`, so a
//! reloaded model predicts bit-identically.

use std::fs;
use std::io::{Read, Write};
use std::path::Path;

use ndarray::{Array1, Array2};
use serde::{Deserialize, Serialize};

use super::mlp::{Activation, Dense, Mlp};
use super::svm::LinearSvm;
use super::tree::{DecisionTree, Node};
use super::{Learned, ModelKind, RandomForest, TrainedModel, TrainingMeta};
use crate::error::{Error, Result};

pub const MODEL_FORMAT_VERSION: u32 = 1;
const MODEL_FORMAT: &str = "mdi-model";

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Document {
    format: String,
    version: u32,
    kind: ModelKind,
    width: usize,
    n_classes: usize,
    meta: TrainingMeta,
    model: Body,
}

#[derive(Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
enum Body {
    Tree { nodes: Vec<NodeDoc> },
    Forest { trees: Vec<Vec<NodeDoc>> },
    Network { activation: Activation, layers: Vec<LayerDoc> },
    Svm { rows: usize, cols: usize, weights: Vec<String> },
}

#[derive(Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
enum NodeDoc {
    Leaf(u32),
    /// feature, threshold, left, right
    Split(usize, String, u32, u32),
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct LayerDoc {
    inputs: usize,
    outputs: usize,
    weights: Vec<String>,
    bias: Vec<String>,
}

fn hex(v: f64) -> String {
    format!("{:016x}", v.to_bits())
}

fn unhex(s: &str) -> Result<f64> {
    if s.len() != 16 {
        return Err(Error::Format(format!("bad float encoding {s:?}")));
    }
    u64::from_str_radix(s, 16)
        .map(f64::from_bits)
        .map_err(|_| Error::Format(format!("bad float encoding {s:?}")))
}

fn unhex_all(v: &[String]) -> Result<Vec<f64>> {
    v.iter().map(|s| unhex(s)).collect()
}

fn nodes_doc(t: &DecisionTree) -> Vec<NodeDoc> {
    t.nodes
        .iter()
        .map(|n| match *n {
            Node::Leaf { class } => NodeDoc::Leaf(class),
            Node::Split {
                feature,
                threshold,
                left,
                right,
            } => NodeDoc::Split(feature, hex(threshold), left, right),
        })
        .collect()
}

fn tree_from_doc(doc: &[NodeDoc], width: usize, n_classes: usize) -> Result<DecisionTree> {
    if doc.is_empty() {
        return Err(Error::Format("tree without nodes".into()));
    }
    let n = doc.len();
    let mut nodes = Vec::with_capacity(n);
    for (i, d) in doc.iter().enumerate() {
        nodes.push(match d {
            NodeDoc::Leaf(class) => {
                if *class as usize >= n_classes {
                    return Err(Error::Format(format!("leaf class {class} out of range")));
                }
                Node::Leaf { class: *class }
            }
            NodeDoc::Split(feature, t, left, right) => {
                // children always follow their parent, which rules out cycles
                let ok = *feature < width
                    && (*left as usize) > i
                    && (*right as usize) > i
                    && (*left as usize) < n
                    && (*right as usize) < n;
                if !ok {
                    return Err(Error::Format(format!("malformed split node {i}")));
                }
                Node::Split {
                    feature: *feature,
                    threshold: unhex(t)?,
                    left: *left,
                    right: *right,
                }
            }
        });
    }
    Ok(DecisionTree { nodes })
}

impl TrainedModel {
    pub fn to_json(&self) -> Result<String> {
        let model = match &self.learned {
            Learned::Tree(t) => Body::Tree { nodes: nodes_doc(t) },
            Learned::Forest(f) => Body::Forest {
                trees: f.trees.iter().map(nodes_doc).collect(),
            },
            Learned::Network(m) => Body::Network {
                activation: m.activation,
                layers: m
                    .layers
                    .iter()
                    .map(|l| LayerDoc {
                        inputs: l.weights.nrows(),
                        outputs: l.weights.ncols(),
                        weights: l.weights.iter().copied().map(hex).collect(),
                        bias: l.bias.iter().copied().map(hex).collect(),
                    })
                    .collect(),
            },
            Learned::Svm(s) => Body::Svm {
                rows: s.weights.nrows(),
                cols: s.weights.ncols(),
                weights: s.weights.iter().copied().map(hex).collect(),
            },
        };
        let doc = Document {
            format: MODEL_FORMAT.into(),
            version: MODEL_FORMAT_VERSION,
            kind: self.kind,
            width: self.width,
            n_classes: self.n_classes,
            meta: self.meta.clone(),
            model,
        };
        Ok(serde_json::to_string_pretty(&doc)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let doc: Document = serde_json::from_str(text)?;
        if doc.format != MODEL_FORMAT {
            return Err(Error::Format(format!("not a model file (format {:?})", doc.format)));
        }
        if doc.version != MODEL_FORMAT_VERSION {
            return Err(Error::Format(format!(
                "unsupported model version {} (expected {MODEL_FORMAT_VERSION})",
                doc.version
            )));
        }
        let (width, k) = (doc.width, doc.n_classes);
        if k == 0 {
            return Err(Error::Format("model with no classes".into()));
        }
        let learned = match (&doc.kind, doc.model) {
            (ModelKind::DecisionTree, Body::Tree { nodes }) => Learned::Tree(tree_from_doc(&nodes, width, k)?),
            (ModelKind::RandomForest, Body::Forest { trees }) => {
                if trees.is_empty() {
                    return Err(Error::Format("forest without trees".into()));
                }
                Learned::Forest(RandomForest {
                    trees: trees
                        .iter()
                        .map(|t| tree_from_doc(t, width, k))
                        .collect::<Result<_>>()?,
                    n_classes: k,
                })
            }
            (ModelKind::Mlp | ModelKind::Logistic, Body::Network { activation, layers }) => {
                let mut expect = width;
                let mut dense = Vec::with_capacity(layers.len());
                for l in &layers {
                    if l.inputs != expect || l.weights.len() != l.inputs * l.outputs || l.bias.len() != l.outputs {
                        return Err(Error::Format("inconsistent layer shapes".into()));
                    }
                    dense.push(Dense {
                        weights: Array2::from_shape_vec((l.inputs, l.outputs), unhex_all(&l.weights)?)
                            .map_err(|e| Error::Format(e.to_string()))?,
                        bias: Array1::from(unhex_all(&l.bias)?),
                    });
                    expect = l.outputs;
                }
                if dense.is_empty() || expect != k {
                    return Err(Error::Format("network output does not match class count".into()));
                }
                Learned::Network(Mlp {
                    layers: dense,
                    activation,
                })
            }
            (ModelKind::LinearSvm, Body::Svm { rows, cols, weights }) => {
                if rows != k || cols != width + 1 || weights.len() != rows * cols {
                    return Err(Error::Format("inconsistent SVM weight shape".into()));
                }
                Learned::Svm(LinearSvm {
                    weights: Array2::from_shape_vec((rows, cols), unhex_all(&weights)?)
                        .map_err(|e| Error::Format(e.to_string()))?,
                })
            }
            (kind, _) => return Err(Error::Format(format!("model body does not match kind {kind:?}"))),
        };
        Ok(TrainedModel {
            kind: doc.kind,
            learned,
            width,
            n_classes: k,
            meta: doc.meta,
        })
    }

    pub fn save<W: Write>(&self, mut w: W) -> Result<()> {
        w.write_all(self.to_json()?.as_bytes())
            .map_err(|e| Error::io("<model writer>", e))
    }

    pub fn load<R: Read>(mut r: R) -> Result<Self> {
        let mut s = String::new();
        r.read_to_string(&mut s).map_err(|e| Error::io("<model reader>", e))?;
        Self::from_json(&s)
    }

    pub fn save_file(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        fs::write(path, self.to_json()?).map_err(|e| Error::io(path, e))
    }

    pub fn load_file(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let s = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&s)
    }
}

#[cfg(test)]
mod tests {
    use super::super::*;
    use crate::encode::EncodedMatrix;
    use ndarray::array;

    fn toy() -> EncodedMatrix {
        EncodedMatrix::new(
            array![[0.0, 1.0], [1.0, 0.0], [0.3, 0.9], [0.8, 0.1], [0.5, 0.5]],
            vec![0, 1, 0, 1, 2],
            3,
        )
        .unwrap()
    }

    #[test]
    fn every_kind_round_trips() {
        let x = toy();
        let models = [
            fit_decision_tree(&x, &TreeParams::default()).unwrap(),
            fit_random_forest(&x, &ForestParams { n_trees: 5, seed: 3, ..Default::default() }).unwrap(),
            fit_mlp(&x, &MlpParams { hidden_layers: vec![4], dropout: vec![0.0], epochs: 3, ..Default::default() }).unwrap(),
            fit_logistic(&x, &MlpParams::logistic()).unwrap(),
            fit_linear_svm(&x, &SvmParams::default()).unwrap(),
        ];
        for m in models {
            let back = TrainedModel::from_json(&m.to_json().unwrap()).unwrap();
            assert_eq!(back, m);
            assert_eq!(back.predict(&x).unwrap(), m.predict(&x).unwrap());
        }
    }

    #[test]
    fn rejects_other_versions_and_cycles() {
        let x = toy();
        let m = fit_decision_tree(&x, &TreeParams::default()).unwrap();
        let json = m.to_json().unwrap();
        let bumped = json.replacen("\"version\": 1", "\"version\": 2", 1);
        assert!(TrainedModel::from_json(&bumped).is_err());
        let cyc = r#"{"format":"mdi-model","version":1,"kind":"decision_tree","width":2,"n_classes":2,
            "meta":{"training_error":0.0,"epochs_run":0,"seed":0},
            "model":{"tree":{"nodes":[{"split":[0,"0000000000000000",0,0]}]}}}"#;
        assert!(TrainedModel::from_json(cyc).is_err());
    }
}
