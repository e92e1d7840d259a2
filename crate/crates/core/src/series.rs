use serde::Serialize;

/// Step-indexed ensemble-averaged purities.
///
/// `values[k]` is the purity after `k` steps (gates, REM draws or chain
/// cycles depending on the model), so `values[0] == 1`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PuritySeries {
    pub values: Vec<f64>,
    /// Cumulative number of elementary gates `Σ|X_i|` per step, when the
    /// series comes from an explicit edge sequence.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gate_counts: Option<Vec<usize>>,
    pub meta: SeriesMeta,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct SeriesMeta {
    pub model: String,
    pub d: usize,
    /// Named sizes, e.g. `("n", 10), ("n_a", 5)`.
    pub sizes: Vec<(String, usize)>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub kind: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

impl SeriesMeta {
    pub fn new(model: &str, d: usize) -> Self {
        Self { model: model.to_owned(), d, ..Self::default() }
    }

    pub fn size(mut self, name: &str, value: usize) -> Self {
        self.sizes.push((name.to_owned(), value));
        self
    }

    pub fn kind(mut self, kind: impl Into<String>) -> Self {
        self.kind = Some(kind.into());
        self
    }

    pub fn seed(mut self, seed: u64) -> Self {
        self.seed = Some(seed);
        self
    }
}

impl PuritySeries {
    pub fn new(values: Vec<f64>, meta: SeriesMeta) -> Self {
        Self { values, gate_counts: None, meta }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn last(&self) -> f64 {
        *self.values.last().expect("purity series is never empty")
    }

    /// True if no step increases the purity by more than `tol`.
    pub fn is_non_increasing(&self, tol: f64) -> bool {
        self.values.windows(2).all(|w| w[1] <= w[0] + tol)
    }
}
