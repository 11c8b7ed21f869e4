//! Pseudo edge labels from semantic maps and the BEV edge head.

use crate::bev::BevGrid;
use crate::error::{Error, Result};
use crate::grid::{ClassId, VoxelGrid};
use crate::losses::{binary_cross_entropy, LossGrad};
use crate::par;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum KernelKind {
    Sobel,
    Prewitt,
    Laplacian,
}

impl std::str::FromStr for KernelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "sobel" => Ok(Self::Sobel),
            "prewitt" => Ok(Self::Prewitt),
            "laplacian" => Ok(Self::Laplacian),
            _ => Err(Error::argument(format!("unknown edge kernel '{s}'"))),
        }
    }
}

/// Square gradient kernel. Taps are row-major `size x size`, applied as a
/// cross-correlation with rows along the first map axis.
#[derive(Debug, Clone, PartialEq)]
pub struct EdgeKernel {
    kind: KernelKind,
    size: usize,
    taps_x: Vec<f64>,
    taps_y: Vec<f64>,
}

fn binomial_row(n: usize) -> Vec<f64> {
    let mut row = vec![1.0];
    for _ in 1..n {
        let mut next = vec![1.0; row.len() + 1];
        for i in 1..row.len() {
            next[i] = row[i - 1] + row[i];
        }
        row = next;
    }
    row
}

/// `[1, 1, 1]` convolved with itself `(n - 1) / 2` times (`[1]` for n = 1).
fn box_row(n: usize) -> Vec<f64> {
    let mut row = vec![1.0];
    while row.len() < n {
        row = convolve(&row, &[1.0, 1.0, 1.0]);
    }
    row
}

fn convolve(a: &[f64], b: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; a.len() + b.len() - 1];
    for (i, x) in a.iter().enumerate() {
        for (j, y) in b.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    out
}

fn outer(col: &[f64], row: &[f64]) -> Vec<f64> {
    col.iter().flat_map(|c| row.iter().map(move |r| c * r)).collect()
}

fn transpose(taps: &[f64], n: usize) -> Vec<f64> {
    (0..n * n).map(|i| taps[(i % n) * n + i / n]).collect()
}

impl EdgeKernel {
    /// Sizes 5 and 7 are the 3x3 taps convolved once or twice with a 3x3
    /// smoothing mask (binomial for Sobel and Laplacian, box for Prewitt).
    pub fn new(kind: KernelKind, size: usize) -> Result<Self> {
        if !matches!(size, 3 | 5 | 7) {
            return Err(Error::argument(format!("kernel size must be 3, 5 or 7, got {size}")));
        }
        let (taps_x, taps_y) = match kind {
            KernelKind::Sobel | KernelKind::Prewitt => {
                let smooth = |n: usize| match kind {
                    KernelKind::Sobel => binomial_row(n),
                    _ => box_row(n),
                };
                let deriv = convolve(&smooth(size - 2), &[-1.0, 0.0, 1.0]);
                let tx = outer(&smooth(size), &deriv);
                let ty = transpose(&tx, size);
                (tx, ty)
            }
            KernelKind::Laplacian => {
                let inner = binomial_row(size - 2);
                let mut padded = vec![0.0];
                padded.extend(&inner);
                padded.push(0.0);
                let d2 = convolve(&inner, &[1.0, -2.0, 1.0]);
                let a = outer(&padded, &d2);
                let b = outer(&d2, &padded);
                (a.iter().zip(&b).map(|(x, y)| x + y).collect(), Vec::new())
            }
        };
        Ok(Self {
            kind,
            size,
            taps_x,
            taps_y,
        })
    }

    pub fn sobel3() -> Self {
        Self::new(KernelKind::Sobel, 3).expect("valid kernel")
    }

    pub fn kind(&self) -> KernelKind {
        self.kind
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn taps_x(&self) -> &[f64] {
        &self.taps_x
    }

    /// Empty for the Laplacian.
    pub fn taps_y(&self) -> &[f64] {
        &self.taps_y
    }
}

impl Default for EdgeKernel {
    fn default() -> Self {
        Self::sobel3()
    }
}

/// A 2D class-id map, row-major.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabelMap {
    rows: usize,
    cols: usize,
    data: Vec<u32>,
}

impl LabelMap {
    pub fn new(rows: usize, cols: usize, data: Vec<u32>) -> Result<Self> {
        if rows == 0 || cols == 0 || data.len() != rows * cols {
            return Err(Error::shape(format!(
                "label map {rows}x{cols} with {} entries",
                data.len()
            )));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn data(&self) -> &[u32] {
        &self.data
    }

    pub fn get(&self, r: usize, c: usize) -> u32 {
        self.data[r * self.cols + c]
    }
}

/// BEV semantic map of a voxel grid: each column takes the class of its
/// topmost non-FREE voxel, or FREE when the column is empty. Rows follow
/// the grid x axis and columns the y axis.
pub fn bev_semantics(grid: &VoxelGrid) -> LabelMap {
    let g = grid.geometry();
    let [dx, dy, dz] = g.dims();
    let free = grid.free_class();
    let data = par::map_range(dx * dy, |col| {
        let (x, y) = (col / dy, col % dy);
        (0..dz)
            .rev()
            .map(|z| grid.class_at([x, y, z]))
            .find(|&c| c != free)
            .unwrap_or(free) as u32
    });
    LabelMap {
        rows: dx,
        cols: dy,
        data,
    }
}

/// Per-cell values in `[0, 1]`, row-major with `height` rows.
#[derive(Debug, Clone, PartialEq)]
pub struct EdgeMap {
    width: usize,
    height: usize,
    values: Vec<f64>,
}

impl EdgeMap {
    pub fn new(width: usize, height: usize, values: Vec<f64>) -> Result<Self> {
        if values.len() != width * height {
            return Err(Error::shape(format!(
                "edge map {height}x{width} with {} values",
                values.len()
            )));
        }
        if let Some(v) = values.iter().find(|v| !(0.0..=1.0).contains(*v)) {
            return Err(Error::argument(format!("edge value {v} outside [0, 1]")));
        }
        Ok(Self {
            width,
            height,
            values,
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.values[row * self.width + col]
    }
}

fn correlate(labels: &LabelMap, taps: &[f64], n: usize, r: usize, c: usize) -> f64 {
    let h = (n / 2) as isize;
    let clamp = |v: isize, hi: usize| v.clamp(0, hi as isize - 1) as usize;
    let mut acc = 0.0;
    for i in 0..n {
        let rr = clamp(r as isize + i as isize - h, labels.rows);
        for j in 0..n {
            let cc = clamp(c as isize + j as isize - h, labels.cols);
            acc += taps[i * n + j] * labels.get(rr, cc) as f64;
        }
    }
    acc
}

/// Raw gradient magnitude of the class-id map (replicate border padding).
pub fn edge_magnitude(labels: &LabelMap, kernel: &EdgeKernel) -> Vec<f64> {
    let n = kernel.size;
    par::map_range(labels.rows * labels.cols, |i| {
        let (r, c) = (i / labels.cols, i % labels.cols);
        match kernel.kind {
            KernelKind::Laplacian => correlate(labels, &kernel.taps_x, n, r, c).abs(),
            _ => {
                let gx = correlate(labels, &kernel.taps_x, n, r, c);
                let gy = correlate(labels, &kernel.taps_y, n, r, c);
                (gx * gx + gy * gy).sqrt()
            }
        }
    })
}

/// Binary edge labels: 1 wherever the gradient magnitude is nonzero.
pub fn extract_pseudo_edges(labels: &LabelMap, kernel: &EdgeKernel) -> EdgeMap {
    let values = edge_magnitude(labels, kernel)
        .into_iter()
        .map(|m| if m > 0.0 { 1.0 } else { 0.0 })
        .collect();
    EdgeMap {
        width: labels.cols,
        height: labels.rows,
        values,
    }
}

/// Two-layer per-cell head `p = sigmoid(w2 . relu(w1 x))`.
#[derive(Debug, Clone, PartialEq)]
pub struct EdgeHead {
    hidden: usize,
    channels: usize,
    /// `hidden x channels`, row-major.
    w1: Vec<f64>,
    w2: Vec<f64>,
}

impl EdgeHead {
    pub fn new(hidden: usize, channels: usize, w1: Vec<f64>, w2: Vec<f64>) -> Result<Self> {
        if hidden == 0 || channels == 0 {
            return Err(Error::shape("edge head needs hidden_dim >= 1 and at least one channel"));
        }
        if w1.len() != hidden * channels || w2.len() != hidden {
            return Err(Error::shape(format!(
                "edge head weights {}/{} do not match {hidden}x{channels}",
                w1.len(),
                w2.len()
            )));
        }
        if w1.iter().chain(&w2).any(|w| !w.is_finite()) {
            return Err(Error::argument("edge head weights must be finite"));
        }
        Ok(Self {
            hidden,
            channels,
            w1,
            w2,
        })
    }

    /// Identity first layer (hidden = channels) and a constant second layer.
    pub fn identity(channels: usize, w2: f64) -> Result<Self> {
        let mut w1 = vec![0.0; channels * channels];
        for i in 0..channels {
            w1[i * channels + i] = 1.0;
        }
        Self::new(channels, channels, w1, vec![w2; channels])
    }

    pub fn hidden_dim(&self) -> usize {
        self.hidden
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    /// Probability for one feature vector, kept strictly inside `(0, 1)`.
    pub fn forward_cell(&self, x: &[f64]) -> f64 {
        let logit: f64 = (0..self.hidden)
            .map(|h| {
                let row = &self.w1[h * self.channels..(h + 1) * self.channels];
                let a: f64 = row.iter().zip(x).map(|(w, v)| w * v).sum();
                self.w2[h] * a.max(0.0)
            })
            .sum();
        let p = 1.0 / (1.0 + (-logit).exp());
        p.clamp(f64::MIN_POSITIVE, 1.0f64.next_down())
    }
}

/// Edge probabilities for every BEV cell (rows along grid x).
pub fn edge_head_forward(features: &BevGrid, head: &EdgeHead) -> Result<EdgeMap> {
    if features.channels() != head.channels {
        return Err(Error::shape(format!(
            "edge head expects {} channels, BEV grid has {}",
            head.channels,
            features.channels()
        )));
    }
    let (rows, cols) = features.size();
    let values = par::map_range(rows * cols, |i| head.forward_cell(features.cell(i / cols, i % cols)));
    Ok(EdgeMap {
        width: cols,
        height: rows,
        values,
    })
}

/// Mean BCE between predicted probabilities and binary edge labels.
pub fn edge_bce_loss(pred: &EdgeMap, gt: &EdgeMap) -> Result<LossGrad> {
    if pred.width != gt.width || pred.height != gt.height {
        return Err(Error::shape(format!(
            "edge maps {}x{} and {}x{}",
            pred.height, pred.width, gt.height, gt.width
        )));
    }
    if gt.values.iter().any(|&g| g != 0.0 && g != 1.0) {
        return Err(Error::argument("edge targets must be 0 or 1"));
    }
    Ok(binary_cross_entropy(&pred.values, &gt.values))
}

/// Edge labels for a voxel grid's BEV semantics.
pub fn grid_edges(grid: &VoxelGrid, kernel: &EdgeKernel) -> EdgeMap {
    extract_pseudo_edges(&bev_semantics(grid), kernel)
}

/// Label map from class ids.
pub fn label_map_from_classes(rows: usize, cols: usize, classes: &[ClassId]) -> Result<LabelMap> {
    LabelMap::new(rows, cols, classes.iter().map(|&c| c as u32).collect())
}
