use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

/// How a form–meaning pair is scored from its co-occurrence table.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Weighting {
    /// Mutual information of the two binary presence variables, in bits.
    #[default]
    MutualInformation,
    JointProbability,
    Pmi,
    Npmi,
}

impl Weighting {
    pub const ALL: [Weighting; 4] = [
        Weighting::MutualInformation,
        Weighting::JointProbability,
        Weighting::Pmi,
        Weighting::Npmi,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Weighting::MutualInformation => "mutual-information",
            Weighting::JointProbability => "joint-probability",
            Weighting::Pmi => "pmi",
            Weighting::Npmi => "npmi",
        }
    }
}

impl fmt::Display for Weighting {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Weighting {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "mi" | "mutual-information" => Ok(Weighting::MutualInformation),
            "joint" | "joint-probability" => Ok(Weighting::JointProbability),
            "pmi" => Ok(Weighting::Pmi),
            "npmi" => Ok(Weighting::Npmi),
            other => Err(format!(
                "unknown weighting '{other}' (expected mi, joint, pmi or npmi)"
            )),
        }
    }
}

/// Logarithms of record counts, computed once per corpus size.
pub(crate) struct LogTable(Vec<f64>);

impl LogTable {
    pub(crate) fn new(n: u32) -> Self {
        LogTable((0..=n).map(|k| (k as f64).log2()).collect())
    }

    #[inline]
    pub(crate) fn weight(&self, n_fm: u32, n_f: u32, n_m: u32, n: u32, method: Weighting) -> f64 {
        weight_with(n_fm, n_f, n_m, n, method, |k| self.0[k as usize])
    }
}

/// Weight of a pair that co-occurs in `n_fm` of `n` records, where the form
/// occurs in `n_f` and the meaning in `n_m` records.
///
/// Pairs with negative pointwise association, or with a marginal of 0 or
/// `n`, weigh 0 under every method. The result is bitwise
/// symmetric in `n_f` and `n_m`.
pub fn pair_weight(n_fm: u32, n_f: u32, n_m: u32, n: u32, method: Weighting) -> f64 {
    weight_with(n_fm, n_f, n_m, n, method, |k| (k as f64).log2())
}

#[inline]
fn weight_with(n_fm: u32, n_f: u32, n_m: u32, n: u32, method: Weighting, log2: impl Fn(u32) -> f64) -> f64 {
    debug_assert!(n_fm <= n_f.min(n_m) && n_f.max(n_m) <= n);
    if n == 0 || n_fm == 0 || n_f == 0 || n_m == 0 || n_f == n || n_m == n {
        return 0.0;
    }
    let (observed, expected) = ((n_fm as u64) * (n as u64), (n_f as u64) * (n_m as u64));
    if observed < expected {
        return 0.0;
    }
    // Exact independence: every association measure is 0, not rounding noise.
    if observed == expected && method != Weighting::JointProbability {
        return 0.0;
    }
    let (a, b) = if n_f <= n_m { (n_f, n_m) } else { (n_m, n_f) };
    let nf = n as f64;
    let log_n = log2(n);
    // log2(c * n / (x * y)) as a sum of table entries; x + y commutes exactly.
    let pmi = |c: u32, x: u32, y: u32| (log2(c) + log_n) - (log2(x) + log2(y));
    match method {
        Weighting::MutualInformation => {
            let term = |c: u32, x: u32, y: u32| if c == 0 { 0.0 } else { (c as f64 / nf) * pmi(c, x, y) };
            let mi = term(n_fm, a, b)
                + term(a - n_fm, a, n - b)
                + term(b - n_fm, n - a, b)
                + term(n + n_fm - a - b, n - a, n - b);
            mi.max(0.0)
        }
        Weighting::JointProbability => n_fm as f64 / nf,
        Weighting::Pmi => pmi(n_fm, a, b),
        Weighting::Npmi => pmi(n_fm, a, b) / (log_n - log2(n_fm)),
    }
}
