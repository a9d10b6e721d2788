//! Lepski selection of the cropping bandwidth.
//!
//! `k̂` is the smallest candidate `k` whose estimate stays within
//! `C_L (log p + l)/n` (squared operator norm) of every estimate with a
//! larger candidate bandwidth `l`. Candidate estimates are computed lazily
//! and cached, and the scan over `l` stops at the first violation, so a
//! rejected `k` usually costs only a few small-bandwidth estimates.

use std::collections::{BTreeMap, HashMap};

use faer::Mat;
use serde::{Deserialize, Serialize};

use crate::cropping::{crop_estimate_from_gram, CropConfig, LocalScaling};
use crate::matcore::{op_norm_symmetric, DataMatrix, SpectralBand, SymMatrix};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LepskiConfig {
    pub c_l: f64,
    pub band: SpectralBand,
    /// Largest candidate; `None` means `⌈n / log p⌉` clamped to `p − 1`.
    pub k_max: Option<usize>,
    /// Restrict candidates to `{1, 2, 4, …} ∪ {k_max}`.
    pub thinning: bool,
    pub scaling: LocalScaling,
}

impl LepskiConfig {
    pub const DEFAULT_C_L: f64 = 2.0;

    pub fn new(band: SpectralBand) -> Self {
        Self { c_l: Self::DEFAULT_C_L, band, k_max: None, thinning: false, scaling: LocalScaling::default() }
    }

    pub fn effective_k_max(&self, n: usize, p: usize) -> usize {
        let k = self.k_max.unwrap_or_else(|| (n as f64 / (p as f64).ln()).ceil() as usize);
        k.clamp(1, p - 1)
    }

    pub fn candidates(&self, n: usize, p: usize) -> Vec<usize> {
        let k_max = self.effective_k_max(n, p);
        if !self.thinning {
            return (1..=k_max).collect();
        }
        let mut c: Vec<usize> = std::iter::successors(Some(1usize), |k| Some(k * 2)).take_while(|&k| k < k_max).collect();
        c.push(k_max);
        c
    }
}

/// Outcome of a (possibly bounded) Lepski scan.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Selection {
    Selected(usize),
    /// No candidate up to `limit` is admissible, so `k̂ > limit`.
    ExceedsLimit(usize),
}

/// One recorded comparison.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    pub k: usize,
    pub l: usize,
    pub distance_sq: f64,
    pub threshold: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LepskiReport {
    pub selection: Selection,
    pub k_max: usize,
    pub c_l: f64,
    /// All squared distances computed during the scan, ordered by `(k, l)`.
    pub comparisons: Vec<Comparison>,
}

impl LepskiReport {
    pub fn k_hat(&self) -> Option<usize> {
        match self.selection {
            Selection::Selected(k) => Some(k),
            Selection::ExceedsLimit(_) => None,
        }
    }
}

/// Lazily evaluated candidate estimates and their pairwise distances.
pub struct Lepski {
    gram: SymMatrix,
    n: usize,
    cfg: LepskiConfig,
    estimates: HashMap<usize, SymMatrix>,
    distances: BTreeMap<(usize, usize), f64>,
}

impl Lepski {
    pub fn new(z: &DataMatrix, cfg: LepskiConfig) -> Result<Self> {
        Self::from_gram(z.gram(), z.n(), cfg)
    }

    /// `n` sets the comparison scale; the local inverses are scaled
    /// according to `cfg.scaling`.
    pub fn from_gram(gram: SymMatrix, n: usize, cfg: LepskiConfig) -> Result<Self> {
        let p = gram.dim();
        if n < 2 || p < 2 {
            return Err(Error::InvalidParameter(format!("need n >= 2 and p >= 2, got n = {n}, p = {p}")));
        }
        if !(cfg.c_l > 0.0) {
            return Err(Error::InvalidParameter(format!("C_L must be positive, got {}", cfg.c_l)));
        }
        Ok(Self { gram, n, cfg, estimates: HashMap::new(), distances: BTreeMap::new() })
    }

    pub fn p(&self) -> usize {
        self.gram.dim()
    }

    pub fn candidates(&self) -> Vec<usize> {
        self.cfg.candidates(self.n, self.p())
    }

    /// `C_L (log p + l)/n`.
    pub fn threshold(&self, l: usize) -> f64 {
        self.cfg.c_l * ((self.p() as f64).ln() + l as f64) / self.n as f64
    }

    /// Cropping estimate at bandwidth `k`, computed once.
    pub fn estimate(&mut self, k: usize) -> Result<&SymMatrix> {
        if !self.estimates.contains_key(&k) {
            let crop = CropConfig::new(k, self.cfg.band).with_scaling(self.cfg.scaling);
            let est = crop_estimate_from_gram(&self.gram, Some(self.n), &crop)?;
            self.estimates.insert(k, est);
        }
        Ok(&self.estimates[&k])
    }

    /// `‖Ω̃_k − Ω̃_l‖₂²`, stored once per unordered pair.
    pub fn distance_sq(&mut self, k: usize, l: usize) -> Result<f64> {
        let key = (k.min(l), k.max(l));
        if key.0 == key.1 {
            return Ok(0.0);
        }
        if let Some(&d) = self.distances.get(&key) {
            return Ok(d);
        }
        self.estimate(key.0)?;
        self.estimate(key.1)?;
        let a = self.estimates[&key.0].as_mat();
        let b = self.estimates[&key.1].as_mat();
        let diff = Mat::from_fn(a.nrows(), a.ncols(), |i, j| a[(i, j)] - b[(i, j)]);
        let d = op_norm_symmetric(diff.as_ref())?.powi(2);
        self.distances.insert(key, d);
        Ok(d)
    }

    /// True when `k` passes against every larger candidate.
    pub fn admissible(&mut self, k: usize, comparisons: &mut Vec<Comparison>) -> Result<bool> {
        for l in self.candidates().into_iter().filter(|&l| l > k) {
            let d = self.distance_sq(k, l)?;
            let t = self.threshold(l);
            comparisons.push(Comparison { k, l, distance_sq: d, threshold: t });
            if d > t {
                return Ok(false);
            }
        }
        Ok(true)
    }

    /// Scans candidates in increasing order, stopping at the first admissible
    /// one or after `limit`.
    pub fn search(&mut self, limit: Option<usize>) -> Result<LepskiReport> {
        let k_max = self.cfg.effective_k_max(self.n, self.p());
        let mut comparisons = Vec::new();
        let mut selection = None;
        for k in self.candidates() {
            if limit.is_some_and(|lim| k > lim) {
                break;
            }
            if self.admissible(k, &mut comparisons)? {
                selection = Some(Selection::Selected(k));
                break;
            }
        }
        let selection = match (selection, limit) {
            (Some(s), _) => s,
            (None, Some(lim)) if lim < k_max => Selection::ExceedsLimit(lim),
            (None, _) => Selection::Selected(k_max),
        };
        Ok(LepskiReport { selection, k_max, c_l: self.cfg.c_l, comparisons })
    }

    /// All squared distances computed so far, keyed by `(min, max)`.
    pub fn distance_table(&self) -> &BTreeMap<(usize, usize), f64> {
        &self.distances
    }

    pub fn take_estimate(&mut self, k: usize) -> Result<SymMatrix> {
        self.estimate(k)?;
        Ok(self.estimates.remove(&k).expect("just computed"))
    }
}

/// Lepski-selected bandwidth with the audit trail of distances.
pub fn lepski_select(z: &DataMatrix, cfg: &LepskiConfig) -> Result<LepskiReport> {
    Lepski::new(z, *cfg)?.search(None)
}

/// Cropping estimate at the Lepski bandwidth.
pub fn adaptive_estimate(z: &DataMatrix, cfg: &LepskiConfig) -> Result<(SymMatrix, LepskiReport)> {
    let mut lep = Lepski::new(z, *cfg)?;
    let report = lep.search(None)?;
    let k = report.k_hat().expect("unbounded search always selects");
    Ok((lep.take_estimate(k)?, report))
}
