use std::collections::HashSet;
use std::fmt;

use super::HnswGraph;

/// Result of an exhaustive structural check of an [`HnswGraph`].
#[derive(Debug, Clone, Default, PartialEq)]
pub struct AuditReport {
    pub violations: Vec<String>,
    /// Connected components of layer 0, treating links as undirected.
    pub components: usize,
    /// Nodes not reachable from the entry point by following layer-0 links.
    pub unreachable: usize,
}

impl AuditReport {
    pub fn is_ok(&self) -> bool {
        self.violations.is_empty()
    }
}

impl fmt::Display for AuditReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} violations, {} components, {} unreachable from entry",
            self.violations.len(),
            self.components,
            self.unreachable
        )?;
        for v in self.violations.iter().take(10) {
            write!(f, "\n  {v}")?;
        }
        Ok(())
    }
}

impl HnswGraph {
    /// Walks the whole graph checking degree bounds, layer containment, entry-point
    /// maximality, self-loops, duplicate neighbors and vector norms.
    pub fn audit(&self) -> AuditReport {
        let n = self.len();
        let mut report = AuditReport::default();
        let v = &mut report.violations;

        match self.entry_point {
            None if n > 0 => v.push("non-empty graph without entry point".into()),
            Some(ep) if ep as usize >= n => v.push(format!("entry point {ep} out of range")),
            Some(ep) => {
                let top = self.top_layer(ep);
                if let Some(node) = (0..n as u32).find(|&i| self.top_layer(i) > top) {
                    v.push(format!("node {node} is above the entry point's layer {top}"));
                }
            }
            None => {}
        }

        for node in 0..n as u32 {
            let norm = self.stored_vector(node)
                .iter()
                .map(|&x| f64::from(x) * f64::from(x))
                .sum::<f64>()
                .sqrt();
            if (norm - 1.0).abs() > 1e-4 {
                v.push(format!("node {node} has norm {norm}"));
            }
            let layers = &self.links[node as usize];
            if layers.is_empty() {
                v.push(format!("node {node} is missing layer 0"));
                continue;
            }
            for (layer, list) in layers.iter().enumerate() {
                let bound = self.params.max_degree(layer);
                if list.len() > bound {
                    v.push(format!("node {node} layer {layer}: degree {} > {bound}", list.len()));
                }
                let mut seen = HashSet::new();
                for &nb in list {
                    if nb == node {
                        v.push(format!("node {node} layer {layer}: self-loop"));
                    } else if nb as usize >= n {
                        v.push(format!("node {node} layer {layer}: neighbor {nb} out of range"));
                    } else if self.top_layer(nb) < layer {
                        v.push(format!(
                            "node {node} layer {layer}: neighbor {nb} only reaches layer {}",
                            self.top_layer(nb)
                        ));
                    }
                    if !seen.insert(nb) {
                        v.push(format!("node {node} layer {layer}: duplicate neighbor {nb}"));
                    }
                }
            }
        }
        if !report.violations.is_empty() {
            return report;
        }

        report.components = self.layer0_components();
        report.unreachable = match self.entry_point {
            Some(ep) => n - self.reachable_from(ep),
            None => 0,
        };
        report
    }

    fn layer0_components(&self) -> usize {
        let n = self.len();
        let mut parent: Vec<u32> = (0..n as u32).collect();
        fn find(parent: &mut [u32], mut x: u32) -> u32 {
            while parent[x as usize] != x {
                parent[x as usize] = parent[parent[x as usize] as usize];
                x = parent[x as usize];
            }
            x
        }
        for node in 0..n as u32 {
            for &nb in self.neighbors(node, 0) {
                let (a, b) = (find(&mut parent, node), find(&mut parent, nb));
                if a != b {
                    parent[a as usize] = b;
                }
            }
        }
        (0..n as u32).filter(|&x| find(&mut parent, x) == x).count()
    }

    fn reachable_from(&self, start: u32) -> usize {
        let mut seen = vec![false; self.len()];
        let mut stack = vec![start];
        seen[start as usize] = true;
        let mut count = 0;
        while let Some(x) = stack.pop() {
            count += 1;
            for &nb in self.neighbors(x, 0) {
                if !seen[nb as usize] {
                    seen[nb as usize] = true;
                    stack.push(nb);
                }
            }
        }
        count
    }
}
