//! Finite semi-metric spaces: validation, power transforms, graph metrics,
//! the standard example families and the text formats they are read from.
//!
//! A semi-metric here is a symmetric matrix with zero diagonal and strictly
//! positive off-diagonal entries. The triangle inequality is never required.
//! Finiteness is what makes everything downstream computable: for a finite
//! space the Hilbertian distortion is a finite-dimensional optimization.

use std::collections::VecDeque;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Relative tolerance for accepting asymmetric parsed input.
pub const SYMMETRY_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct SemiMetricSpace {
    dist: DMatrix<f64>,
    labels: Vec<String>,
}

#[derive(Serialize, Deserialize)]
struct SpaceFile {
    #[serde(default)]
    labels: Option<Vec<String>>,
    dist: Vec<Vec<f64>>,
}

fn default_labels(n: usize) -> Vec<String> {
    (0..n).map(|i| format!("x{i}")).collect()
}

impl SemiMetricSpace {
    /// Validate a user-supplied matrix. Entries may be asymmetric up to
    /// `SYMMETRY_TOL * max|d|`; such pairs are replaced by their average.
    pub fn validate(matrix: &[Vec<f64>], labels: Option<Vec<String>>) -> Result<Self> {
        let n = matrix.len();
        if n < 2 {
            return Err(Error::TooSmall(n));
        }
        for (row, r) in matrix.iter().enumerate() {
            if r.len() != n {
                return Err(Error::NotSquare { row, len: r.len(), expected: n });
            }
        }
        let mut max_entry = 0.0_f64;
        for (i, r) in matrix.iter().enumerate() {
            for (j, &v) in r.iter().enumerate() {
                if !v.is_finite() {
                    return Err(Error::NonFinite { i, j });
                }
                max_entry = max_entry.max(v.abs());
            }
        }
        let sym_tol = SYMMETRY_TOL * max_entry;
        let mut dist = DMatrix::zeros(n, n);
        for i in 0..n {
            if matrix[i][i] != 0.0 {
                return Err(Error::NonzeroDiagonal { i, value: matrix[i][i] });
            }
            for j in (i + 1)..n {
                let (a, b) = (matrix[i][j], matrix[j][i]);
                let diff = (a - b).abs();
                if diff > sym_tol {
                    return Err(Error::AsymmetricInput { i, j, diff });
                }
                let v = if a == b { a } else { 0.5 * (a + b) };
                if v <= 0.0 {
                    return Err(Error::NonpositiveOffDiagonal { i, j, value: v });
                }
                dist[(i, j)] = v;
                dist[(j, i)] = v;
            }
        }
        let labels = match labels {
            Some(l) if l.len() != n => {
                return Err(Error::LabelMismatch { labels: l.len(), points: n })
            }
            Some(l) => l,
            None => default_labels(n),
        };
        Ok(Self { dist, labels })
    }

    /// Build from an exactly symmetric generator `f(i, j)` for `i < j`.
    fn from_fn(n: usize, labels: Vec<String>, f: impl Fn(usize, usize) -> f64) -> Self {
        let mut dist = DMatrix::zeros(n, n);
        for i in 0..n {
            for j in (i + 1)..n {
                let v = f(i, j);
                dist[(i, j)] = v;
                dist[(j, i)] = v;
            }
        }
        Self { dist, labels }
    }

    pub fn len(&self) -> usize {
        self.dist.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    #[inline]
    pub fn d(&self, i: usize, j: usize) -> f64 {
        self.dist[(i, j)]
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.dist
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        crate::linalg::to_rows(&self.dist)
    }

    pub fn max_distance(&self) -> f64 {
        self.dist.max()
    }

    /// `(d_ij^p)` with zero diagonal (`0^0 := 0`).
    pub fn power_matrix(&self, p: f64) -> DMatrix<f64> {
        let n = self.len();
        DMatrix::from_fn(n, n, |i, j| if i == j { 0.0 } else { self.dist[(i, j)].powf(p) })
    }

    /// The space `(X, d^q)`.
    pub fn power_transform(&self, q: f64) -> Result<Self> {
        if q.is_nan() || q < 0.0 {
            return Err(Error::NegativeExponent(q));
        }
        if !q.is_finite() {
            return Err(Error::BadExponent(q));
        }
        let dist = self.power_matrix(q);
        Ok(Self { dist, labels: self.labels.clone() })
    }

    /// All distances multiplied by `lambda > 0`.
    pub fn scaled(&self, lambda: f64) -> Result<Self> {
        if !(lambda > 0.0 && lambda.is_finite()) {
            return Err(Error::BadParams(format!("scale factor {lambda} must be positive")));
        }
        Ok(Self { dist: &self.dist * lambda, labels: self.labels.clone() })
    }

    /// Reorder points: point `k` of the result is point `perm[k]` of `self`.
    pub fn permuted(&self, perm: &[usize]) -> Result<Self> {
        let n = self.len();
        let mut seen = vec![false; n];
        if perm.len() != n || perm.iter().any(|&k| k >= n || std::mem::replace(&mut seen[k], true)) {
            return Err(Error::BadParams("not a permutation".into()));
        }
        let labels = perm.iter().map(|&k| self.labels[k].clone()).collect();
        Ok(Self::from_fn(n, labels, |i, j| self.dist[(perm[i], perm[j])]))
    }

    pub fn satisfies_triangle_inequality(&self, tol: f64) -> bool {
        let n = self.len();
        (0..n).all(|i| {
            (0..n).all(|j| (0..n).all(|k| self.d(i, j) <= self.d(i, k) + self.d(k, j) + tol))
        })
    }

    /// Parse CSV: `n` rows of `n` reals, optionally preceded by a header row
    /// of labels. The first row is a header if any field is non-numeric or if
    /// there is one more row than columns (numeric labels such as `010`).
    pub fn from_csv_str(text: &str) -> Result<Self> {
        let mut reader = csv::ReaderBuilder::new()
            .has_headers(false)
            .trim(csv::Trim::All)
            .flexible(true)
            .comment(Some(b'#'))
            .from_reader(text.as_bytes());
        let mut records = Vec::new();
        for rec in reader.records() {
            let rec = rec.map_err(|e| Error::Parse(e.to_string()))?;
            if !rec.iter().all(str::is_empty) {
                records.push(rec);
            }
        }
        let parse = |rec: &csv::StringRecord| -> std::result::Result<Vec<f64>, std::num::ParseFloatError> {
            rec.iter().map(str::parse::<f64>).collect()
        };
        let header = records.first().is_some_and(|first| parse(first).is_err() || records.len() == first.len() + 1);
        let labels = header.then(|| records[0].iter().map(str::to_owned).collect());
        let skip = usize::from(header);
        let rows = records[skip..]
            .iter()
            .enumerate()
            .map(|(k, rec)| parse(rec).map_err(|e| Error::Parse(format!("row {}: {e}", k + skip + 1))))
            .collect::<Result<Vec<_>>>()?;
        Self::validate(&rows, labels)
    }

    /// Parse `{"labels": [...], "dist": [[...]]}`; `labels` is optional.
    pub fn from_json_str(text: &str) -> Result<Self> {
        let f: SpaceFile = serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        Self::validate(&f.dist, f.labels)
    }

    pub fn to_json_value(&self) -> serde_json::Value {
        serde_json::json!({ "labels": self.labels, "dist": self.rows() })
    }

    pub fn to_csv_string(&self) -> String {
        let mut out = self.labels.join(",");
        out.push('\n');
        for r in self.rows() {
            let line: Vec<String> = r.iter().map(|v| format!("{v}")).collect();
            out.push_str(&line.join(","));
            out.push('\n');
        }
        out
    }
}

/// Unweighted simple graph on vertices `0..n`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GraphSpec {
    n: usize,
    edges: Vec<(usize, usize)>,
}

impl GraphSpec {
    pub fn new(n: usize, edges: Vec<(usize, usize)>) -> Result<Self> {
        for &(a, b) in &edges {
            if a == b {
                return Err(Error::BadGraph(format!("self-loop at vertex {a}")));
            }
            if a >= n || b >= n {
                return Err(Error::BadGraph(format!("edge ({a}, {b}) out of range for {n} vertices")));
            }
        }
        Ok(Self { n, edges })
    }

    pub fn vertex_count(&self) -> usize {
        self.n
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    /// Edge-list format: first line `n <count>`, then one `i j` pair per line.
    pub fn parse(text: &str) -> Result<Self> {
        let mut lines = text
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty() && !l.starts_with('#'));
        let header = lines.next().ok_or_else(|| Error::Parse("empty graph file".into()))?;
        let mut parts = header.split_whitespace();
        let n = match (parts.next(), parts.next(), parts.next()) {
            (Some("n"), Some(c), None) => c
                .parse::<usize>()
                .map_err(|e| Error::Parse(format!("vertex count: {e}")))?,
            _ => return Err(Error::Parse(format!("expected header `n <count>`, got `{header}`"))),
        };
        let mut edges = Vec::new();
        for l in lines {
            let ids: std::result::Result<Vec<usize>, _> = l.split_whitespace().map(str::parse).collect();
            match ids.map_err(|e| Error::Parse(format!("edge `{l}`: {e}")))?.as_slice() {
                &[a, b] => edges.push((a, b)),
                _ => return Err(Error::Parse(format!("edge line must hold two indices: `{l}`"))),
            }
        }
        Self::new(n, edges)
    }

    /// Hop-count metric via breadth-first search from every vertex.
    pub fn shortest_path_metric(&self) -> Result<SemiMetricSpace> {
        let n = self.n;
        if n < 2 {
            return Err(Error::TooSmall(n));
        }
        let mut adj = vec![Vec::new(); n];
        for &(a, b) in &self.edges {
            adj[a].push(b);
            adj[b].push(a);
        }
        let mut hops = vec![vec![usize::MAX; n]; n];
        for (src, row) in hops.iter_mut().enumerate() {
            row[src] = 0;
            let mut queue = VecDeque::from([src]);
            while let Some(u) = queue.pop_front() {
                for &w in &adj[u] {
                    if row[w] == usize::MAX {
                        row[w] = row[u] + 1;
                        queue.push_back(w);
                    }
                }
            }
            if let Some(v) = row.iter().position(|&h| h == usize::MAX) {
                return Err(Error::DisconnectedGraph(v));
            }
        }
        Ok(SemiMetricSpace::from_fn(n, default_labels(n), |i, j| hops[i][j] as f64))
    }
}

/// The example families with closed-form answers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "lowercase")]
pub enum Family {
    /// `K_n`: all off-diagonal distances 1.
    Complete { n: usize },
    /// `K_{m,n}` with points ordered `u_1..u_m, v_1..v_n`.
    Bipartite { m: usize, n: usize },
    /// `{0,1}^n` with Hamming distance, lexicographic order.
    Hamming { n: usize },
}

impl Family {
    pub fn point_count(&self) -> usize {
        match *self {
            Family::Complete { n } => n,
            Family::Bipartite { m, n } => m + n,
            Family::Hamming { n } => 1usize << n,
        }
    }

    pub fn check(&self) -> Result<()> {
        match *self {
            Family::Complete { n } if n < 2 => {
                Err(Error::BadParams(format!("complete graph needs n >= 2, got {n}")))
            }
            Family::Bipartite { m, n } if m == 0 || n == 0 || (m == 1 && n == 1) => Err(
                Error::BadParams(format!("bipartite K_{{{m},{n}}} needs m, n >= 1, not both 1")),
            ),
            Family::Hamming { n } if n == 0 || n > 20 => {
                Err(Error::BadParams(format!("hamming cube dimension must be in 1..=20, got {n}")))
            }
            _ => Ok(()),
        }
    }
}

pub fn hamming_label(i: usize, n: usize) -> String {
    (0..n).map(|k| if (i >> (n - 1 - k)) & 1 == 1 { '1' } else { '0' }).collect()
}

/// Construct one of the example families exactly.
pub fn standard_space(family: Family) -> Result<SemiMetricSpace> {
    family.check()?;
    Ok(match family {
        Family::Complete { n } => {
            let labels = (1..=n).map(|i| format!("u{i}")).collect();
            SemiMetricSpace::from_fn(n, labels, |_, _| 1.0)
        }
        Family::Bipartite { m, n } => {
            let labels = (1..=m).map(|i| format!("u{i}")).chain((1..=n).map(|j| format!("v{j}"))).collect();
            SemiMetricSpace::from_fn(m + n, labels, |i, j| if (i < m) == (j < m) { 2.0 } else { 1.0 })
        }
        Family::Hamming { n } => {
            let size = 1usize << n;
            let labels = (0..size).map(|i| hamming_label(i, n)).collect();
            SemiMetricSpace::from_fn(size, labels, |i, j| f64::from((i ^ j).count_ones()))
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn m(rows: &[&[f64]]) -> Vec<Vec<f64>> {
        rows.iter().map(|r| r.to_vec()).collect()
    }

    #[test]
    fn two_point_space_is_valid() {
        let x = SemiMetricSpace::validate(&m(&[&[0.0, 1.0], &[1.0, 0.0]]), None).unwrap();
        assert_eq!(x.len(), 2);
        assert_eq!(x.labels(), &["x0", "x1"]);
    }

    #[test]
    fn triangle_violation_is_accepted() {
        let x = SemiMetricSpace::validate(&m(&[&[0.0, 1.0, 3.0], &[1.0, 0.0, 1.0], &[3.0, 1.0, 0.0]]), None)
            .unwrap();
        assert!(!x.satisfies_triangle_inequality(0.0));
    }

    #[test]
    fn validation_errors() {
        let asym = SemiMetricSpace::validate(&m(&[&[0.0, 1.0], &[2.0, 0.0]]), None);
        assert!(matches!(asym, Err(Error::AsymmetricInput { i: 0, j: 1, .. })));
        let diag = SemiMetricSpace::validate(&m(&[&[0.5, 1.0], &[1.0, 0.0]]), None);
        assert!(matches!(diag, Err(Error::NonzeroDiagonal { i: 0, .. })));
        let zero = SemiMetricSpace::validate(&m(&[&[0.0, 0.0], &[0.0, 0.0]]), None);
        assert!(matches!(zero, Err(Error::NonpositiveOffDiagonal { .. })));
        let neg = SemiMetricSpace::validate(&m(&[&[0.0, -1.0], &[-1.0, 0.0]]), None);
        assert!(matches!(neg, Err(Error::NonpositiveOffDiagonal { .. })));
        assert_eq!(SemiMetricSpace::validate(&m(&[&[0.0]]), None), Err(Error::TooSmall(1)));
        let ragged = SemiMetricSpace::validate(&m(&[&[0.0, 1.0], &[1.0]]), None);
        assert!(matches!(ragged, Err(Error::NotSquare { row: 1, .. })));
        let labels = SemiMetricSpace::validate(&m(&[&[0.0, 1.0], &[1.0, 0.0]]), Some(vec!["a".into()]));
        assert!(matches!(labels, Err(Error::LabelMismatch { .. })));
    }

    #[test]
    fn near_symmetric_input_is_averaged() {
        let x = SemiMetricSpace::validate(&m(&[&[0.0, 1.0], &[1.0 + 1e-12, 0.0]]), None).unwrap();
        assert_eq!(x.d(0, 1), x.d(1, 0));
        assert!((x.d(0, 1) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn power_transform_cases() {
        let c4 = standard_space(Family::Bipartite { m: 2, n: 2 }).unwrap();
        assert_eq!(c4.power_transform(1.0).unwrap(), c4);
        let eq = c4.power_transform(0.0).unwrap();
        assert!((0..4).all(|i| (0..4).all(|j| eq.d(i, j) == if i == j { 0.0 } else { 1.0 })));
        let half = c4.power_transform(0.5).unwrap();
        assert_eq!(half.d(0, 2), 1.0);
        assert!((half.d(0, 1) - 2f64.sqrt()).abs() < 1e-15);
        assert!(matches!(c4.power_transform(-1.0), Err(Error::NegativeExponent(_))));
    }

    #[test]
    fn path_graph_distances() {
        let g = GraphSpec::new(3, vec![(0, 1), (1, 2)]).unwrap();
        let x = g.shortest_path_metric().unwrap();
        assert_eq!((x.d(0, 1), x.d(1, 2), x.d(0, 2)), (1.0, 1.0, 2.0));
    }

    #[test]
    fn four_cycle_matches_brute_force() {
        let g = GraphSpec::new(4, vec![(0, 1), (1, 2), (2, 3), (3, 0)]).unwrap();
        let x = g.shortest_path_metric().unwrap();
        // Floyd-Warshall as an independent oracle.
        let mut fw = [[f64::INFINITY; 4]; 4];
        for (i, row) in fw.iter_mut().enumerate() {
            row[i] = 0.0;
        }
        for &(a, b) in g.edges() {
            fw[a][b] = 1.0;
            fw[b][a] = 1.0;
        }
        for k in 0..4 {
            for i in 0..4 {
                for j in 0..4 {
                    fw[i][j] = fw[i][j].min(fw[i][k] + fw[k][j]);
                }
            }
        }
        for i in 0..4 {
            for j in 0..4 {
                assert_eq!(x.d(i, j), fw[i][j]);
            }
        }
        assert_eq!(x.d(0, 2), 2.0);
        assert_eq!(x.d(0, 1), 1.0);
    }

    #[test]
    fn k23_edge_list_matches_constructor() {
        let edges = (0..2).flat_map(|u| (2..5).map(move |v| (u, v))).collect();
        let x = GraphSpec::new(5, edges).unwrap().shortest_path_metric().unwrap();
        let k = standard_space(Family::Bipartite { m: 2, n: 3 }).unwrap();
        assert_eq!(x.matrix(), k.matrix());
    }

    #[test]
    fn disconnected_and_bad_graphs() {
        let g = GraphSpec::new(3, vec![(0, 1)]).unwrap();
        assert_eq!(g.shortest_path_metric(), Err(Error::DisconnectedGraph(2)));
        assert!(GraphSpec::new(2, vec![(1, 1)]).is_err());
        assert!(GraphSpec::new(2, vec![(0, 2)]).is_err());
    }

    #[test]
    fn bipartite_2_2_distance_multiset() {
        let x = standard_space(Family::Bipartite { m: 2, n: 2 }).unwrap();
        let mut ones = 0;
        let mut twos = 0;
        for i in 0..4 {
            for j in 0..4 {
                match x.d(i, j) {
                    v if v == 1.0 => ones += 1,
                    v if v == 2.0 => twos += 1,
                    v => assert_eq!(v, 0.0),
                }
            }
        }
        assert_eq!((ones, twos), (8, 4));
    }

    #[test]
    fn hamming_2_is_bipartite_2_2_up_to_relabeling() {
        let h = standard_space(Family::Hamming { n: 2 }).unwrap();
        let k = standard_space(Family::Bipartite { m: 2, n: 2 }).unwrap();
        let perms = [
            [0, 1, 2, 3], [0, 1, 3, 2], [0, 2, 1, 3], [0, 2, 3, 1], [0, 3, 1, 2], [0, 3, 2, 1],
            [1, 0, 2, 3], [1, 0, 3, 2], [1, 2, 0, 3], [1, 2, 3, 0], [1, 3, 0, 2], [1, 3, 2, 0],
            [2, 0, 1, 3], [2, 0, 3, 1], [2, 1, 0, 3], [2, 1, 3, 0], [2, 3, 0, 1], [2, 3, 1, 0],
            [3, 0, 1, 2], [3, 0, 2, 1], [3, 1, 0, 2], [3, 1, 2, 0], [3, 2, 0, 1], [3, 2, 1, 0],
        ];
        let hit = perms.iter().find(|p| h.permuted(&p[..]).unwrap().matrix() == k.matrix());
        assert_eq!(hit, Some(&[0, 3, 1, 2]));
    }

    #[test]
    fn hamming_labels_are_lexicographic() {
        let h = standard_space(Family::Hamming { n: 3 }).unwrap();
        assert_eq!(h.labels()[0], "000");
        assert_eq!(h.labels()[1], "001");
        assert_eq!(h.labels()[6], "110");
        assert_eq!(h.d(0, 7), 3.0);
    }

    #[test]
    fn complete_and_bad_params() {
        let k3 = standard_space(Family::Complete { n: 3 }).unwrap();
        assert_eq!(k3.d(0, 1), 1.0);
        assert_eq!(k3.d(1, 2), 1.0);
        assert!(standard_space(Family::Bipartite { m: 1, n: 1 }).is_err());
        assert!(standard_space(Family::Complete { n: 1 }).is_err());
        assert!(standard_space(Family::Hamming { n: 0 }).is_err());
    }

    #[test]
    fn csv_and_json_formats() {
        let x = SemiMetricSpace::from_csv_str("a,b,c\n0,1,2\n1,0,1\n2,1,0\n").unwrap();
        assert_eq!(x.labels(), &["a", "b", "c"]);
        assert_eq!(x.d(0, 2), 2.0);
        let y = SemiMetricSpace::from_csv_str(&x.to_csv_string()).unwrap();
        assert_eq!(x, y);
        let z = SemiMetricSpace::from_json_str(r#"{"dist":[[0,1],[1,0]]}"#).unwrap();
        assert_eq!(z.labels(), &["x0", "x1"]);
        let w = SemiMetricSpace::from_json_str(&x.to_json_value().to_string()).unwrap();
        assert_eq!(x, w);
        assert!(matches!(SemiMetricSpace::from_csv_str("0,1\n1,zz\n"), Err(Error::Parse(_))));
    }

    #[test]
    fn graph_file_format() {
        let g = GraphSpec::parse("n 3\n0 1\n1 2\n").unwrap();
        assert_eq!(g.vertex_count(), 3);
        assert_eq!(g.edges(), &[(0, 1), (1, 2)]);
        assert!(GraphSpec::parse("3\n0 1\n").is_err());
        assert!(GraphSpec::parse("n 3\n0 1 2\n").is_err());
    }
}
