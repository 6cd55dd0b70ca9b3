//! Time-varying directed contact networks.
//!
//! Weights are oriented receiver-first: `w[i][j]` at step `k` is the
//! probability that an infected node `j` infects node `i`. Row `i` therefore
//! lists the in-neighbours of `i`; column `j` lists the nodes `j` can reach.
//! The diagonal entry is the self-transmission probability, i.e. the
//! probability that an infected node fails to recover in one step. Self-loops
//! are part of every neighbourhood, even when their weight is zero.

use rand::Rng;

use crate::error::{Error, Result};

/// Networks with at most this many nodes keep a dense weight matrix per step.
pub const DENSE_LIMIT: usize = 64;

/// One directed link as seen from a node: the node at the other end and the
/// link's transmission probability.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Link {
    pub node: usize,
    pub weight: f64,
}

/// Neighbourhood of a node at one step, always including the node itself.
#[derive(Debug, Clone, Copy)]
pub struct Neighborhood<'a> {
    center: usize,
    links: &'a [Link],
}

impl<'a> Neighborhood<'a> {
    pub fn center(&self) -> usize {
        self.center
    }

    pub fn links(&self) -> &'a [Link] {
        self.links
    }

    pub fn nodes(&self) -> impl Iterator<Item = usize> + 'a {
        self.links.iter().map(|l| l.node)
    }

    pub fn contains(&self, node: usize) -> bool {
        self.links.binary_search_by_key(&node, |l| l.node).is_ok()
    }

    pub fn len(&self) -> usize {
        self.links.len()
    }

    pub fn is_empty(&self) -> bool {
        self.links.is_empty()
    }

    pub fn to_vec(&self) -> Vec<usize> {
        self.nodes().collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Storage {
    Dense(Vec<f64>),
    Sparse,
}

#[derive(Debug, Clone, PartialEq)]
struct Step {
    storage: Storage,
    /// `incoming[i]`: links `(j, w_ij)` sorted by `j`, self-loop included.
    incoming: Vec<Vec<Link>>,
    /// `outgoing[j]`: links `(i, w_ij)` sorted by `i`, self-loop included.
    outgoing: Vec<Vec<Link>>,
}

impl Step {
    fn from_rows(n: usize, k: usize, rows: &[Vec<f64>]) -> Result<Self> {
        if rows.len() != n {
            return Err(Error::Dimension(format!(
                "weight matrix at step {k} has {} rows, expected {n}",
                rows.len()
            )));
        }
        let mut incoming = vec![Vec::new(); n];
        let mut outgoing = vec![Vec::new(); n];
        for (i, row) in rows.iter().enumerate() {
            if row.len() != n {
                return Err(Error::Dimension(format!(
                    "row {i} of weight matrix at step {k} has {} entries, expected {n}",
                    row.len()
                )));
            }
            for (j, &w) in row.iter().enumerate() {
                check_probability(w, || format!("w[{i}][{j}] at step {k}"))?;
                if i == j || w > 0.0 {
                    incoming[i].push(Link { node: j, weight: w });
                    outgoing[j].push(Link { node: i, weight: w });
                }
            }
        }
        let storage = if n <= DENSE_LIMIT {
            Storage::Dense(rows.iter().flatten().copied().collect())
        } else {
            Storage::Sparse
        };
        Ok(Step {
            storage,
            incoming,
            outgoing,
        })
    }

    fn weight(&self, n: usize, i: usize, j: usize) -> f64 {
        match &self.storage {
            Storage::Dense(w) => w[i * n + j],
            Storage::Sparse => {
                let row = &self.incoming[i];
                row.binary_search_by_key(&j, |l| l.node)
                    .map(|pos| row[pos].weight)
                    .unwrap_or(0.0)
            }
        }
    }
}

pub(crate) fn check_probability(value: f64, what: impl FnOnce() -> String) -> Result<()> {
    if (0.0..=1.0).contains(&value) {
        Ok(())
    } else {
        Err(Error::ProbabilityOutOfRange {
            what: what(),
            value,
        })
    }
}

/// A directed contact network over `horizon` steps with heterogeneous,
/// time-varying transmission probabilities. Immutable once built.
#[derive(Debug, Clone, PartialEq)]
pub struct ContactNetwork {
    n: usize,
    steps: Vec<Step>,
}

impl ContactNetwork {
    /// Builds a network from one dense `n x n` matrix per step.
    pub fn from_steps(steps: &[Vec<Vec<f64>>]) -> Result<Self> {
        let n = steps.first().map(|m| m.len()).unwrap_or(0);
        if steps.is_empty() {
            return Err(Error::InvalidParameter("horizon must be at least 1".into()));
        }
        if n == 0 {
            return Err(Error::InvalidParameter(
                "network needs at least one node".into(),
            ));
        }
        let steps = steps
            .iter()
            .enumerate()
            .map(|(k, rows)| Step::from_rows(n, k, rows))
            .collect::<Result<Vec<_>>>()?;
        Ok(ContactNetwork { n, steps })
    }

    /// Repeats one matrix for every step of the horizon.
    pub fn from_static(matrix: &[Vec<f64>], horizon: usize) -> Result<Self> {
        if horizon == 0 {
            return Err(Error::InvalidParameter("horizon must be at least 1".into()));
        }
        let step = Step::from_rows(matrix.len(), 0, matrix)?;
        if matrix.is_empty() {
            return Err(Error::InvalidParameter(
                "network needs at least one node".into(),
            ));
        }
        Ok(ContactNetwork {
            n: matrix.len(),
            steps: vec![step; horizon],
        })
    }

    pub fn node_count(&self) -> usize {
        self.n
    }

    pub fn horizon(&self) -> usize {
        self.steps.len()
    }

    fn step(&self, k: usize) -> &Step {
        &self.steps[k]
    }

    fn check_indices(&self, i: usize, k: usize) -> Result<()> {
        if i >= self.n {
            return Err(Error::IndexOutOfRange {
                what: "node",
                index: i,
                size: self.n,
            });
        }
        if k >= self.steps.len() {
            return Err(Error::IndexOutOfRange {
                what: "time",
                index: k,
                size: self.steps.len(),
            });
        }
        Ok(())
    }

    /// `w_ij` at step `k`. Panics on out-of-range indices.
    pub fn weight(&self, k: usize, i: usize, j: usize) -> f64 {
        assert!(i < self.n && j < self.n, "node index out of range");
        self.step(k).weight(self.n, i, j)
    }

    /// Whether link `(i, j)` exists at step `k` (diagonal always does).
    pub fn has_link(&self, k: usize, i: usize, j: usize) -> bool {
        self.in_links(k, i)
            .binary_search_by_key(&j, |l| l.node)
            .is_ok()
    }

    /// Links into node `i` at step `k`, sorted by source, self-loop included.
    pub fn in_links(&self, k: usize, i: usize) -> &[Link] {
        &self.step(k).incoming[i]
    }

    /// Links out of node `j` at step `k`, sorted by target, self-loop included.
    pub fn out_links(&self, k: usize, j: usize) -> &[Link] {
        &self.step(k).outgoing[j]
    }

    /// Nodes whose infection can reach `i` at step `k`, plus `i` itself.
    pub fn in_neighborhood(&self, i: usize, k: usize) -> Result<Neighborhood<'_>> {
        self.check_indices(i, k)?;
        Ok(Neighborhood {
            center: i,
            links: self.in_links(k, i),
        })
    }

    /// Nodes `i` can infect at step `k`, plus `i` itself.
    pub fn out_neighborhood(&self, i: usize, k: usize) -> Result<Neighborhood<'_>> {
        self.check_indices(i, k)?;
        Ok(Neighborhood {
            center: i,
            links: self.out_links(k, i),
        })
    }

    /// Support pattern of step `k` plus the diagonal.
    pub fn adjacency(&self, k: usize) -> Vec<Vec<bool>> {
        let mut a = vec![vec![false; self.n]; self.n];
        for (i, row) in a.iter_mut().enumerate() {
            for l in self.in_links(k, i) {
                row[l.node] = true;
            }
        }
        a
    }

    /// Dense copy of the weight matrix at step `k`.
    pub fn matrix(&self, k: usize) -> Vec<Vec<f64>> {
        let mut m = vec![vec![0.0; self.n]; self.n];
        for (i, row) in m.iter_mut().enumerate() {
            for l in self.in_links(k, i) {
                row[l.node] = l.weight;
            }
        }
        m
    }

    pub fn is_static(&self) -> bool {
        self.steps.windows(2).all(|w| w[0] == w[1])
    }

    /// Copy of this network with a different horizon. Steps beyond the
    /// current horizon repeat the last matrix.
    pub fn with_horizon(&self, horizon: usize) -> Result<Self> {
        if horizon == 0 {
            return Err(Error::InvalidParameter("horizon must be at least 1".into()));
        }
        let last = self.steps.len() - 1;
        Ok(ContactNetwork {
            n: self.n,
            steps: (0..horizon)
                .map(|k| self.steps[k.min(last)].clone())
                .collect(),
        })
    }
}

/// Parameters for the seeded Erdős–Rényi generator used by benchmarks and
/// randomized tests.
#[derive(Debug, Clone)]
pub struct RandomNetwork {
    pub nodes: usize,
    pub horizon: usize,
    /// Probability that a directed off-diagonal link exists.
    pub edge_prob: f64,
    /// Range of off-diagonal transmission probabilities.
    pub weight_range: (f64, f64),
    /// Range of self-transmission probabilities.
    pub self_range: (f64, f64),
    /// Draw fresh links and weights at every step.
    pub time_varying: bool,
}

impl Default for RandomNetwork {
    fn default() -> Self {
        RandomNetwork {
            nodes: 5,
            horizon: 10,
            edge_prob: 0.5,
            weight_range: (0.1, 0.6),
            self_range: (0.3, 0.8),
            time_varying: false,
        }
    }
}

impl RandomNetwork {
    pub fn generate<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<ContactNetwork> {
        let (lo, hi) = self.weight_range;
        let (slo, shi) = self.self_range;
        for (name, v) in [
            ("edge_prob", self.edge_prob),
            ("weight_range.0", lo),
            ("weight_range.1", hi),
            ("self_range.0", slo),
            ("self_range.1", shi),
        ] {
            check_probability(v, || name.to_string())?;
        }
        if lo > hi || slo > shi {
            return Err(Error::InvalidParameter("empty weight range".into()));
        }
        let draw = |rng: &mut R| -> Vec<Vec<f64>> {
            (0..self.nodes)
                .map(|i| {
                    (0..self.nodes)
                        .map(|j| {
                            if i == j {
                                slo + (shi - slo) * rng.random::<f64>()
                            } else if rng.random::<f64>() < self.edge_prob {
                                lo + (hi - lo) * rng.random::<f64>()
                            } else {
                                0.0
                            }
                        })
                        .collect()
                })
                .collect()
        };
        if self.time_varying {
            let steps: Vec<_> = (0..self.horizon).map(|_| draw(rng)).collect();
            ContactNetwork::from_steps(&steps)
        } else {
            let m = draw(rng);
            ContactNetwork::from_static(&m, self.horizon)
        }
    }
}

#[cfg(test)]
#[allow(clippy::needless_range_loop)]
mod tests {
    use super::*;

    fn chain_2_to_1() -> ContactNetwork {
        // node 2 infects node 1 (0-based: w[1][2] > 0)
        let m = vec![
            vec![0.5, 0.0, 0.0],
            vec![0.0, 0.5, 0.7],
            vec![0.0, 0.0, 0.5],
        ];
        ContactNetwork::from_static(&m, 1).unwrap()
    }

    #[test]
    fn isolated_node_neighborhoods_are_self_only() {
        let net = ContactNetwork::from_static(&[vec![0.4]], 1).unwrap();
        assert_eq!(net.in_neighborhood(0, 0).unwrap().to_vec(), vec![0]);
        assert_eq!(net.out_neighborhood(0, 0).unwrap().to_vec(), vec![0]);
    }

    #[test]
    fn zero_self_loop_is_still_a_link() {
        let net = ContactNetwork::from_static(&[vec![0.0, 0.0], vec![0.0, 0.0]], 1).unwrap();
        assert_eq!(net.in_neighborhood(1, 0).unwrap().to_vec(), vec![1]);
        assert!(net.has_link(0, 0, 0));
        assert!(!net.has_link(0, 0, 1));
    }

    #[test]
    fn complete_graph_neighborhoods() {
        let m = vec![vec![0.3; 3]; 3];
        let net = ContactNetwork::from_static(&m, 2).unwrap();
        assert_eq!(net.in_neighborhood(0, 1).unwrap().to_vec(), vec![0, 1, 2]);
        assert_eq!(net.out_neighborhood(2, 0).unwrap().to_vec(), vec![0, 1, 2]);
    }

    #[test]
    fn directed_edge_row_and_column_support() {
        let net = chain_2_to_1();
        // row 1 lists the sources that can infect node 1
        assert_eq!(net.in_neighborhood(1, 0).unwrap().to_vec(), vec![1, 2]);
        // column 2 lists the targets node 2 can infect
        assert_eq!(net.out_neighborhood(2, 0).unwrap().to_vec(), vec![1, 2]);
        assert_eq!(net.in_neighborhood(2, 0).unwrap().to_vec(), vec![2]);
        assert_eq!(net.out_neighborhood(1, 0).unwrap().to_vec(), vec![1]);
    }

    #[test]
    fn neighborhood_index_errors() {
        let net = chain_2_to_1();
        assert!(matches!(
            net.in_neighborhood(3, 0),
            Err(Error::IndexOutOfRange { what: "node", .. })
        ));
        assert!(matches!(
            net.out_neighborhood(0, 1),
            Err(Error::IndexOutOfRange { what: "time", .. })
        ));
    }

    #[test]
    fn rejects_out_of_range_weights() {
        let err = ContactNetwork::from_static(&[vec![0.5, 1.3], vec![0.0, 0.5]], 1).unwrap_err();
        assert!(err.to_string().contains("probability out of range"));
        assert!(ContactNetwork::from_static(&[vec![f64::NAN]], 1).is_err());
        assert!(ContactNetwork::from_static(&[vec![-0.1]], 1).is_err());
    }

    #[test]
    fn rejects_ragged_matrices() {
        assert!(matches!(
            ContactNetwork::from_static(&[vec![0.5, 0.1], vec![0.5]], 1),
            Err(Error::Dimension(_))
        ));
        let steps = vec![vec![vec![0.5]], vec![vec![0.5, 0.1], vec![0.1, 0.5]]];
        assert!(ContactNetwork::from_steps(&steps).is_err());
    }

    #[test]
    fn static_expands_to_identical_steps() {
        let m = vec![
            vec![0.5, 0.2, 0.0, 0.0, 0.1],
            vec![0.2, 0.4, 0.3, 0.0, 0.0],
            vec![0.0, 0.3, 0.6, 0.2, 0.0],
            vec![0.0, 0.0, 0.2, 0.5, 0.4],
            vec![0.1, 0.0, 0.0, 0.4, 0.3],
        ];
        let net = ContactNetwork::from_static(&m, 10).unwrap();
        assert_eq!(net.horizon(), 10);
        for k in 0..10 {
            assert_eq!(net.matrix(k), m);
        }
        assert!(net.is_static());
    }

    #[test]
    fn sparse_storage_matches_dense_lookup() {
        let n = DENSE_LIMIT + 6;
        let m: Vec<Vec<f64>> = (0..n)
            .map(|i| {
                (0..n)
                    .map(|j| {
                        if i == j {
                            0.5
                        } else if (i + 1) % n == j {
                            0.25
                        } else {
                            0.0
                        }
                    })
                    .collect()
            })
            .collect();
        let net = ContactNetwork::from_static(&m, 1).unwrap();
        for i in 0..n {
            for j in 0..n {
                assert_eq!(net.weight(0, i, j), m[i][j]);
            }
        }
        assert_eq!(net.matrix(0), m);
    }

    #[test]
    fn symmetric_weights_give_equal_neighborhoods() {
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        let net = RandomNetwork {
            nodes: 6,
            ..Default::default()
        }
        .generate(&mut rng)
        .unwrap();
        let mut m = net.matrix(0);
        for i in 0..6 {
            for j in 0..i {
                m[j][i] = m[i][j];
            }
        }
        let sym = ContactNetwork::from_static(&m, 1).unwrap();
        for i in 0..6 {
            assert_eq!(
                sym.in_neighborhood(i, 0).unwrap().to_vec(),
                sym.out_neighborhood(i, 0).unwrap().to_vec()
            );
        }
    }

    #[test]
    fn time_varying_generator_differs_across_steps() {
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        let net = RandomNetwork {
            nodes: 4,
            horizon: 3,
            time_varying: true,
            ..Default::default()
        }
        .generate(&mut rng)
        .unwrap();
        assert!(!net.is_static());
        assert_eq!(net.horizon(), 3);
    }
}
