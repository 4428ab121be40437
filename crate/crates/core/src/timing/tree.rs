use serde::{Deserialize, Serialize};

use super::FEATURE_COUNT;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Node {
    /// Rows with `x[feature] < threshold` go left.
    Split {
        feature: u8,
        threshold: f64,
        left: u32,
        right: u32,
    },
    Leaf {
        value: f64,
    },
}

/// Binary regression tree stored as a flat node array; node 0 is the root and
/// every child index is greater than its parent's.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegressionTree {
    pub nodes: Vec<Node>,
}

impl RegressionTree {
    pub fn leaf(value: f64) -> Self {
        RegressionTree {
            nodes: vec![Node::Leaf { value }],
        }
    }

    pub fn evaluate(&self, x: &[f64; FEATURE_COUNT]) -> f64 {
        let mut idx = 0usize;
        loop {
            match self.nodes[idx] {
                Node::Leaf { value } => return value,
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => {
                    idx = if x[feature as usize] < threshold {
                        left as usize
                    } else {
                        right as usize
                    };
                }
            }
        }
    }

    pub fn depth(&self) -> usize {
        fn walk(nodes: &[Node], idx: usize) -> usize {
            match nodes[idx] {
                Node::Leaf { .. } => 0,
                Node::Split { left, right, .. } => 1 + walk(nodes, left as usize).max(walk(nodes, right as usize)),
            }
        }
        walk(&self.nodes, 0)
    }

    /// Checks topology: non-empty, children in range and after their parent,
    /// every non-root node referenced exactly once, finite values.
    pub fn validate(&self) -> Result<(), String> {
        if self.nodes.is_empty() {
            return Err("tree has no nodes".into());
        }
        let mut parents = vec![0u32; self.nodes.len()];
        for (i, node) in self.nodes.iter().enumerate() {
            match *node {
                Node::Leaf { value } => {
                    if !value.is_finite() {
                        return Err(format!("leaf {i} is not finite"));
                    }
                }
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => {
                    if feature as usize >= FEATURE_COUNT {
                        return Err(format!("node {i} splits on feature {feature}"));
                    }
                    if !threshold.is_finite() {
                        return Err(format!("node {i} has a non-finite threshold"));
                    }
                    for child in [left, right] {
                        let c = child as usize;
                        if c <= i || c >= self.nodes.len() {
                            return Err(format!("node {i} has invalid child {child}"));
                        }
                        parents[c] += 1;
                    }
                }
            }
        }
        if parents[0] != 0 {
            return Err("root is referenced as a child".into());
        }
        if let Some(i) = (1..parents.len()).find(|&i| parents[i] != 1) {
            return Err(format!("node {i} has {} parents", parents[i]));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn stump(theta: f64) -> RegressionTree {
        RegressionTree {
            nodes: vec![
                Node::Split {
                    feature: 4,
                    threshold: theta,
                    left: 1,
                    right: 2,
                },
                Node::Leaf { value: 1.0 },
                Node::Leaf { value: 4.0 },
            ],
        }
    }

    #[test]
    fn stump_routes_by_threshold() {
        let t = stump(7.0);
        assert_eq!(t.evaluate(&[0.0, 0.0, 0.0, 0.0, 6.9]), 1.0);
        assert_eq!(t.evaluate(&[0.0, 0.0, 0.0, 0.0, 7.1]), 4.0);
        assert_eq!(t.evaluate(&[0.0, 0.0, 0.0, 0.0, 7.0]), 4.0);
        assert_eq!(t.depth(), 1);
        assert!(t.validate().is_ok());
    }

    #[test]
    fn malformed_topologies_rejected() {
        let cyc = RegressionTree {
            nodes: vec![
                Node::Split {
                    feature: 0,
                    threshold: 1.0,
                    left: 1,
                    right: 2,
                },
                Node::Split {
                    feature: 0,
                    threshold: 1.0,
                    left: 0,
                    right: 2,
                },
                Node::Leaf { value: 0.0 },
            ],
        };
        assert!(cyc.validate().is_err());
        let dangling = RegressionTree {
            nodes: vec![
                Node::Split {
                    feature: 0,
                    threshold: 1.0,
                    left: 1,
                    right: 5,
                },
                Node::Leaf { value: 0.0 },
            ],
        };
        assert!(dangling.validate().is_err());
        let bad_feature = RegressionTree {
            nodes: vec![
                Node::Split {
                    feature: 5,
                    threshold: 1.0,
                    left: 1,
                    right: 2,
                },
                Node::Leaf { value: 0.0 },
                Node::Leaf { value: 0.0 },
            ],
        };
        assert!(bad_feature.validate().is_err());
        let orphan = RegressionTree {
            nodes: vec![Node::Leaf { value: 0.0 }, Node::Leaf { value: 1.0 }],
        };
        assert!(orphan.validate().is_err());
        assert!(RegressionTree { nodes: vec![] }.validate().is_err());
    }
}
