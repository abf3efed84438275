//! Strongly connected components (iterative Tarjan) and sink detection on
//! the condensation.

/// Components of a digraph given as adjacency lists.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Components {
    /// Vertex sets, each sorted ascending; ordered by smallest vertex.
    pub components: Vec<Vec<usize>>,
    /// `component_of[v]` indexes into `components`.
    pub component_of: Vec<usize>,
}

impl Components {
    pub fn len(&self) -> usize {
        self.components.len()
    }

    pub fn is_empty(&self) -> bool {
        self.components.is_empty()
    }

    /// Whether component `c` has no edge to another component.
    pub fn is_sink(&self, c: usize, adj: &[Vec<usize>]) -> bool {
        self.components[c]
            .iter()
            .all(|&v| adj[v].iter().all(|&w| self.component_of[w] == c))
    }
}

const UNVISITED: usize = usize::MAX;

pub fn tarjan_scc(adj: &[Vec<usize>]) -> Components {
    let n = adj.len();
    let mut index = vec![UNVISITED; n];
    let mut low = vec![0; n];
    let mut on_stack = vec![false; n];
    let mut stack = Vec::new();
    let mut raw: Vec<Vec<usize>> = Vec::new();
    let mut next_index = 0;
    // (vertex, position in its adjacency list)
    let mut call: Vec<(usize, usize)> = Vec::new();

    for root in 0..n {
        if index[root] != UNVISITED {
            continue;
        }
        call.push((root, 0));
        index[root] = next_index;
        low[root] = next_index;
        next_index += 1;
        stack.push(root);
        on_stack[root] = true;

        while let Some(&mut (v, ref mut pos)) = call.last_mut() {
            if let Some(&w) = adj[v].get(*pos) {
                *pos += 1;
                if index[w] == UNVISITED {
                    index[w] = next_index;
                    low[w] = next_index;
                    next_index += 1;
                    stack.push(w);
                    on_stack[w] = true;
                    call.push((w, 0));
                } else if on_stack[w] {
                    low[v] = low[v].min(index[w]);
                }
                continue;
            }
            call.pop();
            if let Some(&(parent, _)) = call.last() {
                low[parent] = low[parent].min(low[v]);
            }
            if low[v] == index[v] {
                let mut comp = Vec::new();
                loop {
                    let w = stack.pop().expect("tarjan stack underflow");
                    on_stack[w] = false;
                    comp.push(w);
                    if w == v {
                        break;
                    }
                }
                comp.sort_unstable();
                raw.push(comp);
            }
        }
    }

    raw.sort_by_key(|c| c[0]);
    let mut component_of = vec![0; n];
    for (c, comp) in raw.iter().enumerate() {
        for &v in comp {
            component_of[v] = c;
        }
    }
    Components {
        components: raw,
        component_of,
    }
}

/// Adjacency of the subgraph induced by `vertices`, relabelled `0..len`.
pub fn induced_subgraph(adj: &[Vec<usize>], vertices: &[usize]) -> Vec<Vec<usize>> {
    let mut local = vec![usize::MAX; adj.len()];
    for (k, &v) in vertices.iter().enumerate() {
        local[v] = k;
    }
    vertices
        .iter()
        .map(|&v| {
            adj[v]
                .iter()
                .filter_map(|&w| (local[w] != usize::MAX).then_some(local[w]))
                .collect()
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_cycles_and_a_tail() {
        // 0 <-> 1, 2 -> 0, 3 <-> 4, 4 -> 2
        let adj = vec![vec![1], vec![0], vec![0], vec![4], vec![3, 2]];
        let c = tarjan_scc(&adj);
        assert_eq!(c.components, vec![vec![0, 1], vec![2], vec![3, 4]]);
        assert!(c.is_sink(0, &adj));
        assert!(!c.is_sink(1, &adj));
        assert!(!c.is_sink(2, &adj));
    }

    #[test]
    fn deep_path_does_not_overflow() {
        let n = 200_000;
        let adj: Vec<Vec<usize>> = (0..n)
            .map(|v| if v + 1 < n { vec![v + 1] } else { vec![0] })
            .collect();
        let c = tarjan_scc(&adj);
        assert_eq!(c.len(), 1);
    }

    #[test]
    fn induced() {
        let adj = vec![vec![1, 2], vec![2], vec![0]];
        assert_eq!(induced_subgraph(&adj, &[0, 2]), vec![vec![1], vec![0]]);
    }
}
