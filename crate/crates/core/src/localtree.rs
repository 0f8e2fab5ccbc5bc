//! Local structure around a vertex: the labelled exploration tree, its
//! thinning to the graph component, and the Pareto two-stage branching
//! process that dominates component sizes when `beta + 2 gamma < 1`.

use rand::Rng;
use rand_distr::{Distribution, Poisson};

use crate::dyngraph::GraphLaw;
use crate::error::{Error, Result};
use crate::model::ModelParams;

pub const DEFAULT_NODE_CAP: usize = 1_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TreeNode {
    /// Vertex label in `1..=N`.
    pub label: usize,
    pub parent: Option<usize>,
    pub generation: u32,
    pub thinned: bool,
}

/// Nodes stored in breadth-first order; index 0 is the root.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WeightedTree {
    pub n: usize,
    pub nodes: Vec<TreeNode>,
    /// Exploration stopped at the node cap.
    pub truncated: bool,
}

impl WeightedTree {
    pub fn root(n: usize, label: usize) -> Self {
        Self {
            n,
            nodes: vec![TreeNode {
                label,
                parent: None,
                generation: 0,
                thinned: false,
            }],
            truncated: false,
        }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Number of unthinned nodes.
    pub fn order(&self) -> usize {
        self.nodes.iter().filter(|x| !x.thinned).count()
    }

    pub fn children(&self, k: usize) -> impl Iterator<Item = usize> + '_ {
        self.nodes
            .iter()
            .enumerate()
            .skip(k + 1)
            .filter(move |(_, x)| x.parent == Some(k))
            .map(|(i, _)| i)
    }
}

/// Explores from `root` (a label): every node labelled `i` gets `Pois(w(i))`
/// children with i.i.d. labels drawn proportional to `j^(-gamma)`.
pub fn sample_exploration_tree<R: Rng + ?Sized>(
    root: usize,
    law: &GraphLaw,
    rng: &mut R,
    node_cap: usize,
) -> Result<WeightedTree> {
    let n = law.params().n();
    if root == 0 || root > n {
        return Err(Error::Index { label: root, n });
    }
    if node_cap == 0 {
        return Err(Error::Domain("node cap must be positive".into()));
    }
    let mut tree = WeightedTree::root(n, root);
    let mut next = 0;
    'explore: while next < tree.nodes.len() {
        let TreeNode {
            label, generation, ..
        } = tree.nodes[next];
        for _ in 0..law.stub_count(label - 1, rng) {
            if tree.nodes.len() >= node_cap {
                tree.truncated = true;
                break 'explore;
            }
            tree.nodes.push(TreeNode {
                label: law.endpoints().sample_endpoint(rng),
                parent: Some(next),
                generation: generation + 1,
                thinned: false,
            });
        }
        next += 1;
    }
    Ok(tree)
}

/// Breadth-first thinning: a node whose label is already held by an
/// unthinned node is deleted together with its subtree.
pub fn thin_tree(tree: &WeightedTree) -> WeightedTree {
    let mut out = tree.clone();
    let mut taken = vec![false; tree.n];
    for k in 0..out.nodes.len() {
        let node = out.nodes[k];
        let parent_gone = node.parent.is_some_and(|p| out.nodes[p].thinned);
        let thinned = parent_gone || taken[node.label - 1];
        if !thinned {
            taken[node.label - 1] = true;
        }
        out.nodes[k].thinned = thinned;
    }
    out
}

/// Order of the thinned tree, exploring unthinned nodes only.
///
/// Same law as `thin_tree(sample_exploration_tree(..)).order()` and as the
/// size of the root's component in a stationary graph.
pub fn sample_thinned_order<R: Rng + ?Sized>(root: usize, law: &GraphLaw, rng: &mut R) -> usize {
    let n = law.params().n();
    let mut taken = vec![false; n];
    let mut queue = vec![root - 1];
    taken[root - 1] = true;
    let mut head = 0;
    while head < queue.len() {
        let v = queue[head];
        head += 1;
        for _ in 0..law.stub_count(v, rng) {
            let j = law.endpoints().sample_index(rng);
            if !taken[j] {
                taken[j] = true;
                queue.push(j);
            }
        }
    }
    queue.len()
}

/// `beta (1 - 2 gamma) / ((1 - gamma)^2 (1 - beta - 2 gamma))`.
pub fn mean_component_closed_form(beta: f64, gamma: f64) -> Result<f64> {
    if beta + 2.0 * gamma >= 1.0 {
        return Err(Error::Domain(format!(
            "beta + 2 gamma = {} >= 1",
            beta + 2.0 * gamma
        )));
    }
    Ok(beta * (1.0 - 2.0 * gamma) / ((1.0 - gamma).powi(2) * (1.0 - beta - 2.0 * gamma)))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TreeSize {
    pub size: usize,
    pub truncated: bool,
}

/// Total size of the mixed-Poisson branching tree: the root has a Pareto
/// weight with tail index `1/gamma`, every other node the size-biased
/// Pareto weight with tail index `1/gamma - 1`, both with scale
/// `beta / (1 - gamma)`, and each node has `Pois(weight)` children.
pub fn sample_supertree_size<R: Rng + ?Sized>(
    params: &ModelParams,
    rng: &mut R,
    cap: usize,
) -> Result<TreeSize> {
    let (beta, gamma) = (params.beta(), params.gamma());
    if gamma >= 0.5 {
        return Err(Error::Divergent(f64::INFINITY));
    }
    let mean_star = beta / (1.0 - 2.0 * gamma);
    if mean_star >= 1.0 {
        return Err(Error::Divergent(mean_star));
    }
    if beta == 0.0 {
        return Ok(TreeSize {
            size: 1,
            truncated: false,
        });
    }
    let scale = beta / (1.0 - gamma);
    let pareto = |rng: &mut R, exponent: f64| -> f64 {
        // U in (0, 1]; scale * U^(-exponent) has tail (x/scale)^(-1/exponent).
        let u = 1.0 - rng.random::<f64>();
        scale * u.powf(-exponent)
    };
    let offspring = |rng: &mut R, w: f64| -> u64 {
        Poisson::new(w).expect("positive weight").sample(rng) as u64
    };
    let root_w = pareto(rng, gamma);
    let star_exp = gamma / (1.0 - gamma);
    let mut pending = offspring(rng, root_w);
    let mut size = 1usize;
    while pending > 0 {
        if size >= cap {
            return Ok(TreeSize {
                size,
                truncated: true,
            });
        }
        pending -= 1;
        size += 1;
        let w = pareto(rng, star_exp);
        pending += offspring(rng, w);
    }
    Ok(TreeSize {
        size,
        truncated: false,
    })
}
