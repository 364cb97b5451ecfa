use super::CpmError;
use crate::model::ValidatedNetwork;

pub const DEFAULT_PATH_CAP: usize = 1_000_000;

/// All start-to-end paths, each as ascending node indices. Paths are sorted
/// lexicographically by node (topological) index.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PathMatrix {
    pub node_count: usize,
    pub paths: Vec<Vec<usize>>,
}

impl PathMatrix {
    pub fn len(&self) -> usize {
        self.paths.len()
    }

    pub fn is_empty(&self) -> bool {
        self.paths.is_empty()
    }

    pub fn contains(&self, path: usize, node: usize) -> bool {
        self.paths[path].binary_search(&node).is_ok()
    }

    /// Binary membership matrix, one row per path.
    pub fn to_matrix(&self) -> Vec<Vec<u8>> {
        self.paths
            .iter()
            .map(|p| {
                let mut row = vec![0u8; self.node_count];
                for &i in p {
                    row[i] = 1;
                }
                row
            })
            .collect()
    }

    pub fn path_lengths(&self, durations: &[f64]) -> Vec<f64> {
        self.paths
            .iter()
            .map(|p| p.iter().map(|&i| durations[i]).sum())
            .collect()
    }
}

pub fn enumerate_paths(network: &ValidatedNetwork) -> Result<PathMatrix, CpmError> {
    enumerate_paths_capped(network, DEFAULT_PATH_CAP)
}

pub fn enumerate_paths_capped(
    network: &ValidatedNetwork,
    cap: usize,
) -> Result<PathMatrix, CpmError> {
    let n = network.len();
    // Paths from each node to the sink, counted before anything is allocated.
    let mut count = vec![0u128; n];
    for i in (0..n).rev() {
        count[i] = if i == network.sink() {
            1
        } else {
            network
                .successors(i)
                .iter()
                .fold(0u128, |acc, &s| acc.saturating_add(count[s]))
        };
    }
    let total = count[network.source()];
    if total > cap as u128 {
        return Err(CpmError::PathExplosion { count: total, cap });
    }

    let mut paths = Vec::with_capacity(total as usize);
    let mut current = vec![network.source()];
    // Explicit DFS stack of (node, next successor slot).
    let mut stack = vec![(network.source(), 0usize)];
    while let Some(&mut (node, ref mut slot)) = stack.last_mut() {
        if node == network.sink() {
            paths.push(current.clone());
            stack.pop();
            current.pop();
            continue;
        }
        match network.successors(node).get(*slot) {
            Some(&next) => {
                *slot += 1;
                stack.push((next, 0));
                current.push(next);
            }
            None => {
                stack.pop();
                current.pop();
            }
        }
    }
    Ok(PathMatrix {
        node_count: n,
        paths,
    })
}
