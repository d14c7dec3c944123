//! Binary linear block codes described by parity-check matrices.
//!
//! Matrices are exchanged in the alist format, the plain-text sparse-matrix
//! format used throughout LDPC research. A [`TannerGraph`] exposes the
//! bipartite adjacency consumed by the message-passing decoder, and a
//! [`GeneratorMatrix`] derived by column-pivoted GF(2) elimination provides
//! encoding for arbitrary (non-systematic) parity-check matrices.

use crate::numerics::sign_pm;
use thiserror::Error;

/// Errors from parsing alist text or constructing code structures.
#[derive(Debug, Error, PartialEq, Eq)]
pub enum CodeError {
    /// The alist text is structurally broken (bad token, missing line, ...).
    #[error("alist line {line}: {msg}")]
    MalformedAlist { line: usize, msg: String },
    /// An adjacency entry points outside the matrix.
    #[error("alist line {line}: index {index} out of range 1..={max}")]
    IndexOutOfRange {
        line: usize,
        index: usize,
        max: usize,
    },
    /// An adjacency row does not contain as many entries as its declared degree.
    #[error("alist line {line}: declared degree {declared} but found {found} entries")]
    DegreeMismatch {
        line: usize,
        declared: usize,
        found: usize,
    },
    /// The same index appears twice in one adjacency row.
    #[error("alist line {line}: duplicate index {index}")]
    DuplicateIndex { line: usize, index: usize },
    /// Variable and check adjacency lists describe different matrices.
    /// Indices are 1-based as written in the file.
    #[error("alist adjacency lists disagree at check {check}, variable {var}")]
    AdjacencyMismatch { check: usize, var: usize },
    /// Row `row` (0-based) reduced to zero during elimination.
    #[error("parity-check matrix is rank-deficient: row {row} depends on earlier rows")]
    RankDeficient { row: usize },
    /// A parity check with no participating variables is meaningless.
    #[error("parity-check row {row} has no 1-entries")]
    EmptyRow { row: usize },
    /// Matrix entries must be bits.
    #[error("entry at row {row}, column {col} is not 0 or 1")]
    NonBinaryEntry { row: usize, col: usize },
    /// The code must satisfy 0 < k < n.
    #[error("invalid dimensions: n = {n} with {m} checks leaves no valid k")]
    BadDimensions { n: usize, m: usize },
    /// A vector argument has the wrong length.
    #[error("expected a vector of length {expected}, got {found}")]
    LengthMismatch { expected: usize, found: usize },
    /// A word argument contains a symbol other than 0 or 1.
    #[error("word entry at position {index} is not 0 or 1")]
    NonBinarySymbol { index: usize },
}

/// A binary parity-check matrix H with n columns and n-k rows.
///
/// Rows are stored dense; the codes handled here are at most a few hundred
/// bits long.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParityCheckMatrix {
    n: usize,
    rows: Vec<Vec<u8>>,
}

impl ParityCheckMatrix {
    /// Builds a matrix from dense 0/1 rows, validating the type invariants:
    /// equal row lengths, binary entries, no empty row, and 0 < k < n.
    pub fn new(rows: Vec<Vec<u8>>) -> Result<Self, CodeError> {
        let m = rows.len();
        let n = rows.first().map_or(0, Vec::len);
        if m == 0 || n == 0 || m >= n {
            return Err(CodeError::BadDimensions { n, m });
        }
        for (i, row) in rows.iter().enumerate() {
            if row.len() != n {
                return Err(CodeError::LengthMismatch {
                    expected: n,
                    found: row.len(),
                });
            }
            for (j, &bit) in row.iter().enumerate() {
                if bit > 1 {
                    return Err(CodeError::NonBinaryEntry { row: i, col: j });
                }
            }
            if row.iter().all(|&b| b == 0) {
                return Err(CodeError::EmptyRow { row: i });
            }
        }
        Ok(Self { n, rows })
    }

    /// Code length n.
    pub fn n(&self) -> usize {
        self.n
    }

    /// Message length k = n - (number of checks).
    pub fn k(&self) -> usize {
        self.n - self.rows.len()
    }

    /// Number of parity checks (rows).
    pub fn num_checks(&self) -> usize {
        self.rows.len()
    }

    /// Code rate k/n.
    pub fn rate(&self) -> f64 {
        self.k() as f64 / self.n as f64
    }

    /// Dense rows of H.
    pub fn rows(&self) -> &[Vec<u8>] {
        &self.rows
    }

    /// Bipolar hard syndrome of a soft vector: entry i is the product of
    /// `sign(s_j)` over the variables of check i, with `sign(0) = +1`.
    ///
    /// Entries are +1 exactly when the hard decision satisfies the check.
    pub fn hard_syndrome(&self, s: &[f64]) -> Result<Vec<i8>, CodeError> {
        if s.len() != self.n {
            return Err(CodeError::LengthMismatch {
                expected: self.n,
                found: s.len(),
            });
        }
        Ok(self
            .rows
            .iter()
            .map(|row| {
                let mut prod = 1.0;
                for (j, &bit) in row.iter().enumerate() {
                    if bit == 1 {
                        prod *= sign_pm(s[j]);
                    }
                }
                if prod < 0.0 {
                    -1
                } else {
                    1
                }
            })
            .collect())
    }

    /// True iff H·c = 0 over GF(2).
    pub fn is_codeword(&self, c: &[u8]) -> Result<bool, CodeError> {
        if c.len() != self.n {
            return Err(CodeError::LengthMismatch {
                expected: self.n,
                found: c.len(),
            });
        }
        if let Some(index) = c.iter().position(|&b| b > 1) {
            return Err(CodeError::NonBinarySymbol { index });
        }
        Ok(self
            .rows
            .iter()
            .all(|row| row.iter().zip(c).fold(0u8, |acc, (&h, &b)| acc ^ (h & b)) == 0))
    }

    /// Parses alist text.
    ///
    /// Layout: line 1 `n m`; line 2 maximum degrees; lines 3-4 per-variable
    /// and per-check degrees; then n variable adjacency rows and m check
    /// adjacency rows with 1-based indices. Zero entries are padding and are
    /// ignored. Both adjacency sections must describe the same matrix.
    pub fn from_alist(text: &str) -> Result<Self, CodeError> {
        let lines: Vec<&str> = text.lines().collect();
        let mut cursor = 0usize;

        fn take<'a>(
            lines: &[&'a str],
            cursor: &mut usize,
            what: &str,
        ) -> Result<(usize, &'a str), CodeError> {
            let idx = *cursor;
            match lines.get(idx) {
                Some(line) => {
                    *cursor += 1;
                    Ok((idx + 1, line))
                }
                None => Err(CodeError::MalformedAlist {
                    line: idx + 1,
                    msg: format!("unexpected end of file, expected {what}"),
                }),
            }
        }

        fn ints(line_no: usize, line: &str) -> Result<Vec<usize>, CodeError> {
            line.split_whitespace()
                .map(|tok| {
                    tok.parse::<usize>().map_err(|_| CodeError::MalformedAlist {
                        line: line_no,
                        msg: format!("`{tok}` is not a non-negative integer"),
                    })
                })
                .collect()
        }

        // Header: sizes and (unused beyond validation) maximum degrees.
        let (line_no, header) = take(&lines, &mut cursor, "`n m` header")?;
        let sizes = ints(line_no, header)?;
        if sizes.len() != 2 {
            return Err(CodeError::MalformedAlist {
                line: line_no,
                msg: format!("expected two integers `n m`, found {}", sizes.len()),
            });
        }
        let (n, m) = (sizes[0], sizes[1]);
        if n == 0 || m == 0 || m >= n {
            return Err(CodeError::BadDimensions { n, m });
        }
        let (line_no, max_line) = take(&lines, &mut cursor, "maximum degrees")?;
        let maxes = ints(line_no, max_line)?;
        if maxes.len() != 2 {
            return Err(CodeError::MalformedAlist {
                line: line_no,
                msg: format!("expected two maximum degrees, found {}", maxes.len()),
            });
        }

        let (line_no, var_deg_line) = take(&lines, &mut cursor, "per-variable degrees")?;
        let var_degrees = ints(line_no, var_deg_line)?;
        if var_degrees.len() != n {
            return Err(CodeError::MalformedAlist {
                line: line_no,
                msg: format!("expected {n} variable degrees, found {}", var_degrees.len()),
            });
        }
        let (line_no, chk_deg_line) = take(&lines, &mut cursor, "per-check degrees")?;
        let chk_degrees = ints(line_no, chk_deg_line)?;
        if chk_degrees.len() != m {
            return Err(CodeError::MalformedAlist {
                line: line_no,
                msg: format!("expected {m} check degrees, found {}", chk_degrees.len()),
            });
        }

        // One adjacency row: nonzero 1-based indices, padding zeros ignored.
        fn adjacency_row(
            line_no: usize,
            line: &str,
            declared: usize,
            max_index: usize,
        ) -> Result<Vec<usize>, CodeError> {
            let raw = ints(line_no, line)?;
            let mut out = Vec::with_capacity(declared);
            for &idx in raw.iter().filter(|&&v| v != 0) {
                if idx > max_index {
                    return Err(CodeError::IndexOutOfRange {
                        line: line_no,
                        index: idx,
                        max: max_index,
                    });
                }
                if out.contains(&idx) {
                    return Err(CodeError::DuplicateIndex {
                        line: line_no,
                        index: idx,
                    });
                }
                out.push(idx);
            }
            if out.len() != declared {
                return Err(CodeError::DegreeMismatch {
                    line: line_no,
                    declared,
                    found: out.len(),
                });
            }
            Ok(out)
        }

        let mut var_adjacency = Vec::with_capacity(n);
        for j in 0..n {
            let (line_no, line) = take(&lines, &mut cursor, "a variable adjacency row")?;
            var_adjacency.push(adjacency_row(line_no, line, var_degrees[j], m)?);
        }
        let mut rows = vec![vec![0u8; n]; m];
        for i in 0..m {
            let (line_no, line) = take(&lines, &mut cursor, "a check adjacency row")?;
            for idx in adjacency_row(line_no, line, chk_degrees[i], n)? {
                rows[i][idx - 1] = 1;
            }
        }
        for (extra, line) in lines[cursor..].iter().enumerate() {
            if !line.trim().is_empty() {
                return Err(CodeError::MalformedAlist {
                    line: cursor + extra + 1,
                    msg: "trailing content after adjacency rows".into(),
                });
            }
        }

        // The variable section must mirror the check section exactly.
        for (j, checks) in var_adjacency.iter().enumerate() {
            for &i in checks {
                if rows[i - 1][j] != 1 {
                    return Err(CodeError::AdjacencyMismatch {
                        check: i,
                        var: j + 1,
                    });
                }
            }
        }
        let listed_edges: usize = var_adjacency.iter().map(Vec::len).sum();
        let matrix_edges: usize = rows.iter().flatten().map(|&b| b as usize).sum();
        if listed_edges != matrix_edges {
            // Some 1-entry of the check section is missing from the variable
            // section; find it so the error names the exact position.
            for (i, row) in rows.iter().enumerate() {
                for (j, &bit) in row.iter().enumerate() {
                    if bit == 1 && !var_adjacency[j].contains(&(i + 1)) {
                        return Err(CodeError::AdjacencyMismatch {
                            check: i + 1,
                            var: j + 1,
                        });
                    }
                }
            }
        }

        Self::new(rows)
    }

    /// Writes the matrix as alist text, deterministically, with zero padding
    /// for irregular degrees (MacKay's original convention).
    pub fn to_alist(&self) -> String {
        let m = self.num_checks();
        let n = self.n;
        let mut var_adj: Vec<Vec<usize>> = vec![Vec::new(); n];
        let mut chk_adj: Vec<Vec<usize>> = vec![Vec::new(); m];
        for (i, row) in self.rows.iter().enumerate() {
            for (j, &bit) in row.iter().enumerate() {
                if bit == 1 {
                    var_adj[j].push(i + 1);
                    chk_adj[i].push(j + 1);
                }
            }
        }
        let max_var = var_adj.iter().map(Vec::len).max().unwrap_or(0);
        let max_chk = chk_adj.iter().map(Vec::len).max().unwrap_or(0);

        fn join(values: impl Iterator<Item = usize>) -> String {
            values.map(|v| v.to_string()).collect::<Vec<_>>().join(" ")
        }
        fn padded(entries: &[usize], width: usize) -> String {
            join(
                entries
                    .iter()
                    .copied()
                    .chain(std::iter::repeat(0))
                    .take(width),
            )
        }

        let mut out = String::new();
        out.push_str(&format!("{n} {m}\n"));
        out.push_str(&format!("{max_var} {max_chk}\n"));
        out.push_str(&join(var_adj.iter().map(Vec::len)));
        out.push('\n');
        out.push_str(&join(chk_adj.iter().map(Vec::len)));
        out.push('\n');
        for adj in &var_adj {
            out.push_str(&padded(adj, max_var));
            out.push('\n');
        }
        for adj in &chk_adj {
            out.push_str(&padded(adj, max_chk));
            out.push('\n');
        }
        out
    }
}

/// Bipartite adjacency of a parity-check matrix with dense edge ids.
///
/// Edge ids are assigned in check-major order with neighbors ascending, so
/// the id layout is a stable contract for serialized weight sets.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TannerGraph {
    num_vars: usize,
    /// Prefix sums: edges of check i are `check_edge_start[i]..check_edge_start[i+1]`.
    check_edge_start: Vec<usize>,
    /// Variable index of each edge, ascending within each check.
    edge_var: Vec<usize>,
    /// Check index of each edge.
    edge_check: Vec<usize>,
    /// Edge ids incident to each variable, ascending by check index.
    var_edges: Vec<Vec<usize>>,
}

impl TannerGraph {
    /// Builds the graph mirroring the 1-entries of `h`.
    pub fn new(h: &ParityCheckMatrix) -> Self {
        let n = h.n();
        let m = h.num_checks();
        let mut check_edge_start = Vec::with_capacity(m + 1);
        let mut edge_var = Vec::new();
        let mut edge_check = Vec::new();
        check_edge_start.push(0);
        for (i, row) in h.rows().iter().enumerate() {
            for (j, &bit) in row.iter().enumerate() {
                if bit == 1 {
                    edge_var.push(j);
                    edge_check.push(i);
                }
            }
            check_edge_start.push(edge_var.len());
        }
        let mut var_edges = vec![Vec::new(); n];
        for (e, &j) in edge_var.iter().enumerate() {
            var_edges[j].push(e);
        }
        // Edge ids grow with check index, so each var_edges list is already
        // ascending by check.
        Self {
            num_vars: n,
            check_edge_start,
            edge_var,
            edge_check,
            var_edges,
        }
    }

    /// Number of variable nodes (code length n).
    pub fn num_vars(&self) -> usize {
        self.num_vars
    }

    /// Number of check nodes (n - k).
    pub fn num_checks(&self) -> usize {
        self.check_edge_start.len() - 1
    }

    /// Total number of edges (1-entries of H).
    pub fn edge_count(&self) -> usize {
        self.edge_var.len()
    }

    /// Edge-id range of check i.
    pub fn check_edges(&self, check: usize) -> std::ops::Range<usize> {
        self.check_edge_start[check]..self.check_edge_start[check + 1]
    }

    /// Variables of check i (the set M(i)), ascending.
    pub fn check_neighbors(&self, check: usize) -> &[usize] {
        &self.edge_var[self.check_edges(check)]
    }

    /// Edge ids incident to variable j, ascending by check index.
    pub fn var_edges(&self, var: usize) -> &[usize] {
        &self.var_edges[var]
    }

    /// Variable endpoint of an edge.
    pub fn edge_var(&self, edge: usize) -> usize {
        self.edge_var[edge]
    }

    /// Check endpoint of an edge.
    pub fn edge_check(&self, edge: usize) -> usize {
        self.edge_check[edge]
    }

    /// True iff the hard decisions of `s` satisfy every check.
    pub fn signs_satisfy_checks(&self, s: &[f64]) -> bool {
        (0..self.num_checks()).all(|i| {
            let mut prod = 1.0;
            for &j in self.check_neighbors(i) {
                prod *= sign_pm(s[j]);
            }
            prod > 0.0
        })
    }
}

/// An n x k generator matrix derived from H, stored as k codeword columns.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GeneratorMatrix {
    n: usize,
    columns: Vec<Vec<u8>>,
    column_permutation: Vec<usize>,
}

impl GeneratorMatrix {
    /// Derives a generator for `h` by column-pivoted GF(2) Gaussian
    /// elimination, so arbitrary (non-systematic) matrices are supported.
    ///
    /// `column_permutation()[p]` is the original column placed at position p
    /// during systematization; the first n-k positions are pivots. Fails if
    /// `h` does not have full row rank, naming the dependent row.
    pub fn derive(h: &ParityCheckMatrix) -> Result<Self, CodeError> {
        let m = h.num_checks();
        let n = h.n();
        let k = h.k();
        let mut a: Vec<Vec<u8>> = h.rows().to_vec();
        let mut orig_row: Vec<usize> = (0..m).collect();
        let mut perm: Vec<usize> = (0..n).collect();

        for pivot in 0..m {
            let mut found = None;
            'search: for p in pivot..n {
                for r in pivot..m {
                    if a[r][perm[p]] == 1 {
                        found = Some((p, r));
                        break 'search;
                    }
                }
            }
            let Some((p, r)) = found else {
                return Err(CodeError::RankDeficient {
                    row: orig_row[pivot],
                });
            };
            perm.swap(pivot, p);
            a.swap(pivot, r);
            orig_row.swap(pivot, r);
            let pivot_row = a[pivot].clone();
            for (r2, row) in a.iter_mut().enumerate() {
                if r2 != pivot && row[perm[pivot]] == 1 {
                    for (x, &y) in row.iter_mut().zip(&pivot_row) {
                        *x ^= y;
                    }
                }
            }
        }

        // In permuted order H is [I | P]; information positions m..n carry
        // the message and positions 0..m carry the parities P·u.
        let mut columns = Vec::with_capacity(k);
        for q in m..n {
            let mut col = vec![0u8; n];
            col[perm[q]] = 1;
            for r in 0..m {
                col[perm[r]] = a[r][perm[q]];
            }
            columns.push(col);
        }
        let g = Self {
            n,
            columns,
            column_permutation: perm,
        };
        debug_assert!(g
            .columns
            .iter()
            .all(|col| h.is_codeword(col).unwrap_or(false)));
        Ok(g)
    }

    /// Code length n.
    pub fn n(&self) -> usize {
        self.n
    }

    /// Message length k.
    pub fn k(&self) -> usize {
        self.columns.len()
    }

    /// The column permutation recorded during systematization.
    pub fn column_permutation(&self) -> &[usize] {
        &self.column_permutation
    }

    /// Encodes a k-bit message into an n-bit codeword (c = G·u over GF(2)).
    pub fn encode(&self, u: &[u8]) -> Result<Vec<u8>, CodeError> {
        if u.len() != self.k() {
            return Err(CodeError::LengthMismatch {
                expected: self.k(),
                found: u.len(),
            });
        }
        if let Some(index) = u.iter().position(|&b| b > 1) {
            return Err(CodeError::NonBinarySymbol { index });
        }
        let mut c = vec![0u8; self.n];
        for (bit, col) in u.iter().zip(&self.columns) {
            if *bit == 1 {
                for (cj, &gj) in c.iter_mut().zip(col) {
                    *cj ^= gj;
                }
            }
        }
        Ok(c)
    }
}

/// A code bundled with everything the pipeline needs: H, its Tanner graph,
/// and a derived encoder.
#[derive(Debug, Clone)]
pub struct Code {
    name: String,
    h: ParityCheckMatrix,
    graph: TannerGraph,
    generator: GeneratorMatrix,
}

impl Code {
    pub fn new(name: impl Into<String>, h: ParityCheckMatrix) -> Result<Self, CodeError> {
        let graph = TannerGraph::new(&h);
        let generator = GeneratorMatrix::derive(&h)?;
        Ok(Self {
            name: name.into(),
            h,
            graph,
            generator,
        })
    }

    pub fn from_alist(name: impl Into<String>, text: &str) -> Result<Self, CodeError> {
        Self::new(name, ParityCheckMatrix::from_alist(text)?)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn n(&self) -> usize {
        self.h.n()
    }

    pub fn k(&self) -> usize {
        self.h.k()
    }

    pub fn rate(&self) -> f64 {
        self.h.rate()
    }

    pub fn parity(&self) -> &ParityCheckMatrix {
        &self.h
    }

    pub fn graph(&self) -> &TannerGraph {
        &self.graph
    }

    pub fn generator(&self) -> &GeneratorMatrix {
        &self.generator
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    /// H of the (7,4) Hamming code used throughout the tests.
    pub(crate) fn hamming_rows() -> Vec<Vec<u8>> {
        vec![
            vec![1, 1, 0, 1, 1, 0, 0],
            vec![1, 0, 1, 1, 0, 1, 0],
            vec![0, 1, 1, 1, 0, 0, 1],
        ]
    }

    const HAMMING_ALIST: &str = "\
7 3
3 4
2 2 2 3 1 1 1
4 4 4
1 2 0
1 3 0
2 3 0
1 2 3
1 0 0
2 0 0
3 0 0
1 2 4 5
1 3 4 6
2 3 4 7
";

    /// The received vector from the worked soft-syndrome example.
    pub(crate) const EXAMPLE_Y: [f64; 7] = [1.67, 1.42, -0.03, 1.03, 0.88, 1.98, 0.44];

    #[test]
    fn parse_hamming_alist() {
        let h = ParityCheckMatrix::from_alist(HAMMING_ALIST).unwrap();
        assert_eq!(h.n(), 7);
        assert_eq!(h.k(), 4);
        assert_eq!(h.rows(), hamming_rows().as_slice());
    }

    #[test]
    fn parse_repetition_alist() {
        let text = "2 1\n1 2\n1 1\n2\n1\n1\n1 2\n";
        let h = ParityCheckMatrix::from_alist(text).unwrap();
        assert_eq!(h.rows(), &[vec![1, 1]]);
    }

    #[test]
    fn parse_rejects_out_of_range_index() {
        let bad = HAMMING_ALIST.replace("2 3 4 7", "2 3 4 9");
        match ParityCheckMatrix::from_alist(&bad) {
            Err(CodeError::IndexOutOfRange { line, index, max }) => {
                assert_eq!(line, 14);
                assert_eq!(index, 9);
                assert_eq!(max, 7);
            }
            other => panic!("expected index error, got {other:?}"),
        }
    }

    #[test]
    fn parse_rejects_degree_mismatch() {
        let bad = HAMMING_ALIST.replace("1 2 4 5", "1 2 4 5 6");
        match ParityCheckMatrix::from_alist(&bad) {
            Err(CodeError::DegreeMismatch {
                line,
                declared,
                found,
            }) => {
                assert_eq!(line, 12);
                assert_eq!(declared, 4);
                assert_eq!(found, 5);
            }
            other => panic!("expected degree error, got {other:?}"),
        }
    }

    #[test]
    fn parse_rejects_header_garbage() {
        match ParityCheckMatrix::from_alist("7 x\n...") {
            Err(CodeError::MalformedAlist { line: 1, .. }) => {}
            other => panic!("expected malformed header, got {other:?}"),
        }
    }

    #[test]
    fn parse_rejects_inconsistent_sections() {
        // Swap the adjacency of variables 5 and 6: degrees still agree, but
        // variable 5 now claims membership in check 2 and check 2's row says
        // otherwise.
        let bad = HAMMING_ALIST.replace("1 0 0\n2 0 0", "2 0 0\n1 0 0");
        match ParityCheckMatrix::from_alist(&bad) {
            Err(CodeError::AdjacencyMismatch { check: 2, var: 5 }) => {}
            other => panic!("expected adjacency mismatch, got {other:?}"),
        }
    }

    #[test]
    fn tanner_graph_matches_hamming() {
        let h = ParityCheckMatrix::new(hamming_rows()).unwrap();
        let g = TannerGraph::new(&h);
        assert_eq!(g.check_neighbors(0), &[0, 1, 3, 4]);
        assert_eq!(g.check_neighbors(1), &[0, 2, 3, 5]);
        assert_eq!(g.check_neighbors(2), &[1, 2, 3, 6]);
        assert_eq!(g.edge_count(), 12);
        // Edge ids are a bijection onto 0..edge_count in check-major order.
        for e in 0..g.edge_count() {
            let i = g.edge_check(e);
            assert!(g.check_edges(i).contains(&e));
            assert!(g.var_edges(g.edge_var(e)).contains(&e));
        }
        // Variable 3 participates in all three checks.
        assert_eq!(g.var_edges(3).len(), 3);
        let checks: Vec<usize> = g.var_edges(3).iter().map(|&e| g.edge_check(e)).collect();
        assert_eq!(checks, vec![0, 1, 2]);
    }

    #[test]
    fn tanner_graph_single_check() {
        let h = ParityCheckMatrix::new(vec![vec![1, 1]]).unwrap();
        let g = TannerGraph::new(&h);
        assert_eq!(g.num_checks(), 1);
        assert_eq!(g.check_neighbors(0), &[0, 1]);
        assert_eq!(g.edge_count(), 2);
    }

    #[test]
    fn generator_covers_all_hamming_codewords() {
        let h = ParityCheckMatrix::new(hamming_rows()).unwrap();
        let g = GeneratorMatrix::derive(&h).unwrap();
        let mut seen = std::collections::HashSet::new();
        for msg in 0..16u32 {
            let u: Vec<u8> = (0..4).map(|b| ((msg >> b) & 1) as u8).collect();
            let c = g.encode(&u).unwrap();
            assert!(h.is_codeword(&c).unwrap(), "H·c != 0 for u = {u:?}");
            seen.insert(c);
        }
        // 16 distinct codewords means G has rank 4 over GF(2).
        assert_eq!(seen.len(), 16);
        // Linearity: the zero message encodes to the zero codeword.
        assert_eq!(g.encode(&[0, 0, 0, 0]).unwrap(), vec![0; 7]);
    }

    #[test]
    fn generator_repetition() {
        let h = ParityCheckMatrix::new(vec![vec![1, 1]]).unwrap();
        let g = GeneratorMatrix::derive(&h).unwrap();
        assert_eq!(g.k(), 1);
        assert_eq!(g.encode(&[0]).unwrap(), vec![0, 0]);
        assert_eq!(g.encode(&[1]).unwrap(), vec![1, 1]);
    }

    #[test]
    fn generator_rejects_rank_deficient() {
        // Row 3 duplicates row 2; pad with an extra zero column so 0 < k < n
        // still holds.
        let mut rows = hamming_rows();
        rows.push(rows[2].clone());
        for row in &mut rows {
            row.push(0);
        }
        let h = ParityCheckMatrix::new(rows).unwrap();
        match GeneratorMatrix::derive(&h) {
            Err(CodeError::RankDeficient { .. }) => {}
            other => panic!("expected rank deficiency, got {other:?}"),
        }
    }

    #[test]
    fn encode_rejects_bad_input() {
        let h = ParityCheckMatrix::new(hamming_rows()).unwrap();
        let g = GeneratorMatrix::derive(&h).unwrap();
        assert!(matches!(
            g.encode(&[0, 1]),
            Err(CodeError::LengthMismatch { .. })
        ));
        assert!(matches!(
            g.encode(&[0, 1, 2, 0]),
            Err(CodeError::NonBinarySymbol { index: 2 })
        ));
    }

    #[test]
    fn hard_syndrome_worked_example() {
        let h = ParityCheckMatrix::new(hamming_rows()).unwrap();
        assert_eq!(h.hard_syndrome(&EXAMPLE_Y).unwrap(), vec![1, -1, -1]);
    }

    #[test]
    fn hard_syndrome_all_positive() {
        let h = ParityCheckMatrix::new(hamming_rows()).unwrap();
        assert_eq!(h.hard_syndrome(&[1.0; 7]).unwrap(), vec![1, 1, 1]);
    }

    #[test]
    fn hard_syndrome_of_codewords_is_clean() {
        let h = ParityCheckMatrix::new(hamming_rows()).unwrap();
        let g = GeneratorMatrix::derive(&h).unwrap();
        for msg in 0..16u32 {
            let u: Vec<u8> = (0..4).map(|b| ((msg >> b) & 1) as u8).collect();
            let c = g.encode(&u).unwrap();
            let bipolar: Vec<f64> = c.iter().map(|&b| 1.0 - 2.0 * f64::from(b)).collect();
            assert_eq!(h.hard_syndrome(&bipolar).unwrap(), vec![1, 1, 1]);
        }
    }

    #[test]
    fn hard_syndrome_length_check() {
        let h = ParityCheckMatrix::new(hamming_rows()).unwrap();
        assert!(matches!(
            h.hard_syndrome(&[1.0; 6]),
            Err(CodeError::LengthMismatch { .. })
        ));
    }

    #[test]
    fn is_codeword_examples() {
        let h = ParityCheckMatrix::new(hamming_rows()).unwrap();
        assert!(h.is_codeword(&[0; 7]).unwrap());
        // A weight-1 word cannot be a codeword: H has no zero column.
        assert!(!h.is_codeword(&[1, 0, 0, 0, 0, 0, 0]).unwrap());
    }

    #[test]
    fn alist_round_trip_hamming() {
        let h = ParityCheckMatrix::new(hamming_rows()).unwrap();
        let text = h.to_alist();
        let back = ParityCheckMatrix::from_alist(&text).unwrap();
        assert_eq!(h, back);
        // Emitting again is byte-identical.
        assert_eq!(text, back.to_alist());
    }

    #[test]
    fn code_bundle() {
        let code = Code::from_alist("hamming", HAMMING_ALIST).unwrap();
        assert_eq!(code.name(), "hamming");
        assert_eq!(code.n(), 7);
        assert_eq!(code.k(), 4);
        assert!((code.rate() - 4.0 / 7.0).abs() < 1e-15);
    }

    /// Random sparse matrices that satisfy the type invariants.
    fn arb_matrix() -> impl Strategy<Value = ParityCheckMatrix> {
        (2usize..=6, 5usize..=12)
            .prop_flat_map(|(m, extra)| {
                let n = m + extra.max(1);
                proptest::collection::vec(
                    proptest::collection::vec(proptest::bool::weighted(0.3), n),
                    m,
                )
            })
            .prop_filter_map("rows must be nonempty", |bit_rows| {
                let rows: Vec<Vec<u8>> = bit_rows
                    .into_iter()
                    .map(|row| row.into_iter().map(u8::from).collect())
                    .collect();
                if rows.iter().any(|r: &Vec<u8>| r.iter().all(|&b| b == 0)) {
                    return None;
                }
                ParityCheckMatrix::new(rows).ok()
            })
    }

    proptest! {
        #[test]
        fn alist_round_trip_preserves_adjacency(h in arb_matrix()) {
            let back = ParityCheckMatrix::from_alist(&h.to_alist()).unwrap();
            prop_assert_eq!(&h, &back);
            let g1 = TannerGraph::new(&h);
            let g2 = TannerGraph::new(&back);
            prop_assert_eq!(g1, g2);
        }

        #[test]
        fn hard_syndrome_entries_are_signs(
            h in arb_matrix(),
            raw in proptest::collection::vec(-1e3f64..1e3, 32)
        ) {
            let s: Vec<f64> = raw.iter().cycle().take(h.n()).copied().collect();
            for entry in h.hard_syndrome(&s).unwrap() {
                prop_assert!(entry == 1 || entry == -1);
            }
        }

        #[test]
        fn random_messages_encode_to_codewords(
            seed in 0u64..1000,
        ) {
            let h = ParityCheckMatrix::new(hamming_rows()).unwrap();
            let g = GeneratorMatrix::derive(&h).unwrap();
            use rand::Rng;
            let mut rng = crate::rng::substream(seed, "test-encode", &[]);
            let u: Vec<u8> = (0..4).map(|_| u8::from(rng.gen_bool(0.5))).collect();
            prop_assert!(h.is_codeword(&g.encode(&u).unwrap()).unwrap());
        }
    }
}
