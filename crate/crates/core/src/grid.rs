use crate::error::{Error, Result};

/// Partition of `[-M, T]` with `0` and `T` as nodes.
///
/// The history segment `[-M, 0]` is uniform; `[0, T]` follows
/// `t_k = T (k / N)^r`.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeGrid {
    nodes: Vec<f64>,
    zero_index: usize,
    grading: f64,
}

impl TimeGrid {
    /// Graded grid with the default history resolution: `round(N M / T)`
    /// uniform cells on `[-M, 0]`, i.e. the spacing of the ungraded grid.
    pub fn graded(m: f64, t: f64, n: usize, r: f64) -> Result<Self> {
        if !(m > 0.0 && m.is_finite() && t > 0.0 && t.is_finite()) {
            return Err(Error::InvalidGrid(format!("need M > 0 and T > 0, got M={m}, T={t}")));
        }
        let hist = ((n as f64) * m / t).round().max(1.0) as usize;
        Self::graded_with_history(m, t, n, hist, r)
    }

    pub fn uniform(m: f64, t: f64, n: usize) -> Result<Self> {
        Self::graded(m, t, n, 1.0)
    }

    pub fn graded_with_history(m: f64, t: f64, n: usize, history_cells: usize, r: f64) -> Result<Self> {
        if !(m > 0.0 && m.is_finite() && t > 0.0 && t.is_finite()) {
            return Err(Error::InvalidGrid(format!("need M > 0 and T > 0, got M={m}, T={t}")));
        }
        if n < 4 {
            return Err(Error::InvalidGrid(format!("need N >= 4 cells on [0, T], got {n}")));
        }
        if !(r >= 1.0 && r.is_finite()) {
            return Err(Error::InvalidGrid(format!("grading exponent must be >= 1, got {r}")));
        }
        if history_cells == 0 {
            return Err(Error::InvalidGrid("history segment needs at least one cell".into()));
        }
        let mut nodes = Vec::with_capacity(history_cells + n + 1);
        for j in 0..history_cells {
            nodes.push(-m + m * j as f64 / history_cells as f64);
        }
        let zero_index = nodes.len();
        for k in 0..=n {
            let x = k as f64 / n as f64;
            nodes.push(t * x.powf(r));
        }
        nodes[zero_index] = 0.0;
        nodes[history_cells + n] = t;
        Ok(Self { nodes, zero_index, grading: r })
    }

    /// Grid from explicit nodes; they must increase strictly, start below 0,
    /// contain 0 and end at some `T > 0`.
    pub fn from_nodes(nodes: Vec<f64>) -> Result<Self> {
        if nodes.len() < 3 {
            return Err(Error::InvalidGrid("need at least three nodes".into()));
        }
        if nodes.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidGrid("nonfinite node".into()));
        }
        if nodes.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidGrid("nodes must increase strictly".into()));
        }
        let zero_index = nodes
            .iter()
            .position(|&x| x == 0.0)
            .ok_or_else(|| Error::InvalidGrid("0 must be a node".into()))?;
        if zero_index == 0 || zero_index == nodes.len() - 1 {
            return Err(Error::InvalidGrid("need -M < 0 < T".into()));
        }
        Ok(Self { nodes, zero_index, grading: 1.0 })
    }

    /// Grid with extra nodes inserted; nodes within `1e-12 T` of an existing
    /// node, or outside `(-M, T)`, are dropped.
    pub fn refined(&self, extra: &[f64]) -> Self {
        let tol = 1e-12 * self.horizon().max(self.history_length());
        let mut nodes = self.nodes.clone();
        for &x in extra {
            if x <= self.start() || x >= self.horizon() {
                continue;
            }
            let pos = nodes.partition_point(|&y| y < x);
            let near_left = pos > 0 && (x - nodes[pos - 1]).abs() <= tol;
            let near_right = pos < nodes.len() && (nodes[pos] - x).abs() <= tol;
            if !near_left && !near_right {
                nodes.insert(pos, x);
            }
        }
        let zero_index = nodes.iter().position(|&x| x == 0.0).expect("0 stays a node");
        Self { nodes, zero_index, grading: self.grading }
    }

    #[inline]
    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    #[inline]
    pub fn node(&self, i: usize) -> f64 {
        self.nodes[i]
    }

    /// Index of the node `t = 0`.
    #[inline]
    pub fn zero_index(&self) -> usize {
        self.zero_index
    }

    #[inline]
    pub fn start(&self) -> f64 {
        self.nodes[0]
    }

    /// `T`.
    #[inline]
    pub fn horizon(&self) -> f64 {
        *self.nodes.last().expect("nonempty")
    }

    /// `M`.
    #[inline]
    pub fn history_length(&self) -> f64 {
        -self.nodes[0]
    }

    #[inline]
    pub fn grading(&self) -> f64 {
        self.grading
    }

    /// Number of cells on `[0, T]`.
    #[inline]
    pub fn forward_cells(&self) -> usize {
        self.nodes.len() - 1 - self.zero_index
    }

    #[inline]
    pub fn cell_width(&self, j: usize) -> f64 {
        self.nodes[j + 1] - self.nodes[j]
    }

    pub fn max_spacing(&self) -> f64 {
        self.nodes.windows(2).map(|w| w[1] - w[0]).fold(0.0, f64::max)
    }

    pub fn min_spacing(&self) -> f64 {
        self.nodes.windows(2).map(|w| w[1] - w[0]).fold(f64::INFINITY, f64::min)
    }

    /// Common spacing when every cell has the same width (relative 1e-9).
    pub fn uniform_spacing(&self) -> Option<f64> {
        let h = (self.horizon() - self.start()) / (self.len() - 1) as f64;
        self.nodes
            .windows(2)
            .all(|w| ((w[1] - w[0]) - h).abs() <= 1e-9 * h)
            .then_some(h)
    }

    /// Index `j` of the cell `[t_j, t_{j+1}]` containing `t`; `t` must lie in
    /// `[-M, T]`. Nodes belong to the cell on their left (except `-M`).
    pub fn locate(&self, t: f64) -> Option<usize> {
        if t < self.start() || t > self.horizon() {
            return None;
        }
        let pos = self.nodes.partition_point(|&x| x < t);
        Some(pos.saturating_sub(1).min(self.nodes.len() - 2))
    }

    /// Index of a node equal to `t` (relative 1e-12).
    pub fn node_index(&self, t: f64) -> Option<usize> {
        let tol = 1e-12 * (self.horizon() - self.start());
        let pos = self.nodes.partition_point(|&x| x < t - tol);
        (pos < self.nodes.len() && (self.nodes[pos] - t).abs() <= tol).then_some(pos)
    }

    /// Nodes on `[0, T]`.
    pub fn forward_nodes(&self) -> &[f64] {
        &self.nodes[self.zero_index..]
    }
}
