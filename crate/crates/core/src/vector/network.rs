//! Compare-and-swap networks used by the sort and merge instructions.

use super::VectorError;

/// A layered compare-and-swap network over `n` keys.
///
/// Every pair `(i, j)` has `i < j` and routes the minimum to `i`. Pairs inside
/// one layer are disjoint, so a layer is one parallel step (one pipeline stage).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CasNetwork {
    n: usize,
    layers: Vec<Vec<(usize, usize)>>,
}

impl CasNetwork {
    /// Builds a network from explicit layers, checking the pair invariants.
    pub fn from_layers(n: usize, layers: Vec<Vec<(usize, usize)>>) -> Result<Self, VectorError> {
        for layer in &layers {
            let mut seen = vec![false; n];
            for &(i, j) in layer {
                if i >= j || j >= n || seen[i] || seen[j] {
                    return Err(VectorError::InvalidNetwork(format!("bad pair ({i}, {j}) for n = {n}")));
                }
                seen[i] = true;
                seen[j] = true;
            }
        }
        Ok(CasNetwork { n, layers })
    }

    pub fn width(&self) -> usize {
        self.n
    }

    pub fn layers(&self) -> &[Vec<(usize, usize)>] {
        &self.layers
    }

    pub fn depth(&self) -> usize {
        self.layers.len()
    }

    pub fn comparator_count(&self) -> usize {
        self.layers.iter().map(Vec::len).sum()
    }

    /// Applies every layer in order, in place.
    ///
    /// # Panics
    /// If `values.len()` differs from the network width.
    pub fn apply<T: Ord>(&self, values: &mut [T]) {
        assert_eq!(values.len(), self.n, "network width mismatch");
        for layer in &self.layers {
            for &(i, j) in layer {
                if values[i] > values[j] {
                    values.swap(i, j);
                }
            }
        }
    }
}

/// Returns `values` passed through `net`.
pub fn apply_cas_network<T: Ord + Clone>(net: &CasNetwork, values: &[T]) -> Vec<T> {
    let mut out = values.to_vec();
    net.apply(&mut out);
    out
}

fn log2_exact(n: usize, min: usize) -> Result<u32, VectorError> {
    if n < min || !n.is_power_of_two() {
        return Err(VectorError::InvalidWidth(n));
    }
    Ok(n.trailing_zeros())
}

/// Pairs each element of every `block`-sized block with its mirror image.
fn mirror_layer(n: usize, block: usize) -> Vec<(usize, usize)> {
    (0..n)
        .step_by(block)
        .flat_map(|base| (0..block / 2).map(move |t| (base + t, base + block - 1 - t)))
        .collect()
}

/// Pairs `i` with `i + stride` inside each `2 * stride` block.
fn cleaner_layer(n: usize, stride: usize) -> Vec<(usize, usize)> {
    (0..n).filter(|i| i & stride == 0).map(|i| (i, i + stride)).collect()
}

/// Bitonic sorting network for `n` keys, ascending.
///
/// Uses the mirrored-comparator form so every comparator points the same way;
/// depth is `log2(n) * (log2(n) + 1) / 2`.
pub fn gen_sort_network(n: usize) -> Result<CasNetwork, VectorError> {
    let k = log2_exact(n, 2)?;
    let mut layers = Vec::with_capacity((k * (k + 1) / 2) as usize);
    for stage in 1..=k {
        let block = 1usize << stage;
        layers.push(mirror_layer(n, block));
        let mut stride = block >> 2;
        while stride > 0 {
            layers.push(cleaner_layer(n, stride));
            stride >>= 1;
        }
    }
    CasNetwork::from_layers(n, layers)
}

/// Network merging two ascending halves of `n` keys into one ascending list.
///
/// A leading stage compares element `i` of the first half against element
/// `n/2 - 1 - i` of the second half, moving the smaller keys into the lower
/// half. It is followed by the `log2(n)`-layer merge block (half-cleaners at
/// strides `n/2, n/4, .., 1`), for `log2(n) + 1` layers in total.
pub fn gen_merge_network(n: usize) -> Result<CasNetwork, VectorError> {
    let k = log2_exact(n, 4)?;
    let mut layers = Vec::with_capacity(k as usize + 1);
    layers.push(mirror_layer(n, n));
    let mut stride = n / 2;
    while stride > 0 {
        layers.push(cleaner_layer(n, stride));
        stride >>= 1;
    }
    CasNetwork::from_layers(n, layers)
}
