use serde::{Deserialize, Serialize};

use crate::adaptive::{adaptive_estimate, LepskiConfig, LepskiReport};
use crate::cholreg::{banding_bandwidth, banding_estimate, frob_fit, ThresholdConfig};
use crate::cropping::{bandwidth_rule_rounded, clamp_bandwidth, crop_estimate, CropConfig, LocalScaling, Rounding, Space};
use crate::matcore::{DataMatrix, SpectralBand, SymMatrix};
use crate::rankcov::{rank_crop_estimate, RankMethod};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    Crop,
    Frob,
    Banding,
    Adaptive,
    RankCrop,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::Crop => "crop",
            Method::Frob => "frob",
            Method::Banding => "banding",
            Method::Adaptive => "adaptive",
            Method::RankCrop => "rank-crop",
        }
    }
}

impl std::str::FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "crop" => Ok(Method::Crop),
            "frob" => Ok(Method::Frob),
            "banding" => Ok(Method::Banding),
            "adaptive" => Ok(Method::Adaptive),
            "rank-crop" => Ok(Method::RankCrop),
            _ => Err(Error::InvalidParameter(format!("unknown method {s:?}"))),
        }
    }
}

/// Named bandwidth rules.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BandwidthRule {
    /// `n^{1/(2α)}`
    P,
    /// `n^{1/(2α+1)}`
    Q,
    /// `(n / log p)^{1/(2α+2)}`
    Bl,
}

/// Estimator configuration shared by the CLI and the simulation lab.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EstimatorSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub id: Option<String>,
    pub method: Method,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rule: Option<BandwidthRule>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rounding: Option<Rounding>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cl: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rank: Option<RankMethod>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub local_scaling: Option<LocalScaling>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k_max: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub thinning: Option<bool>,
    /// Rank-crop in simulations: rescale to the diagonal of the true
    /// precision matrix before computing losses (default true).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rescale: Option<bool>,
}

/// Values an estimator may inherit when its spec leaves them unset.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct FitContext {
    pub alpha: Option<f64>,
    pub eta: Option<f64>,
}

/// A fitted estimate with the bandwidth actually used.
#[derive(Debug, Clone)]
pub struct Fit {
    pub estimate: SymMatrix,
    pub k: Option<usize>,
    pub k0: Option<usize>,
    pub k1: Option<usize>,
    pub lepski: Option<LepskiReport>,
}

impl EstimatorSpec {
    pub fn new(method: Method) -> Self {
        Self {
            id: None,
            method,
            k: None,
            rule: None,
            rounding: None,
            alpha: None,
            eta: None,
            cl: None,
            c: None,
            rank: None,
            local_scaling: None,
            k_max: None,
            thinning: None,
            rescale: None,
        }
    }

    pub fn with_id(mut self, id: &str) -> Self {
        self.id = Some(id.to_string());
        self
    }

    pub fn with_rule(mut self, rule: BandwidthRule) -> Self {
        self.rule = Some(rule);
        self
    }

    pub fn with_k(mut self, k: usize) -> Self {
        self.k = Some(k);
        self
    }

    /// `id` if set, otherwise a name derived from method and rule.
    pub fn label(&self) -> String {
        if let Some(id) = &self.id {
            return id.clone();
        }
        let rule = match self.rule {
            Some(BandwidthRule::P) => ".P",
            Some(BandwidthRule::Q) => ".Q",
            Some(BandwidthRule::Bl) => ".BL",
            None => "",
        };
        match (self.method, self.k) {
            (Method::Banding, None) => "BL".to_string(),
            (Method::RankCrop, _) => format!("npn-crop{rule}"),
            (m, Some(k)) => format!("{}.k{k}", m.name()),
            (m, None) => format!("{}{rule}", m.name()),
        }
    }

    /// Checks method-specific requirements that do not depend on the data.
    pub fn validate(&self, ctx: FitContext) -> Result<()> {
        let needs_eta = !matches!(self.method, Method::Banding);
        if needs_eta && self.eta.or(ctx.eta).is_none() {
            return Err(Error::InvalidParameter(format!(
                "method {} requires eta: the estimator projects onto the spectral band [1/eta, eta]",
                self.method.name()
            )));
        }
        if let Some(eta) = self.eta {
            SpectralBand::new(eta)?;
        }
        if matches!(self.method, Method::Crop | Method::RankCrop) && self.k.is_none() && self.rule.is_none() {
            return Err(Error::InvalidParameter(format!("method {} needs k or a bandwidth rule", self.method.name())));
        }
        if self.method == Method::Frob && self.alpha.or(ctx.alpha).is_none() {
            return Err(Error::InvalidParameter("method frob needs alpha".into()));
        }
        if self.rule.is_some() && self.k.is_none() && self.alpha.or(ctx.alpha).is_none() {
            return Err(Error::InvalidParameter("bandwidth rules need alpha".into()));
        }
        if self.method == Method::RankCrop && self.rank.is_none() {
            return Err(Error::InvalidParameter("method rank-crop needs rank = kendall or spearman".into()));
        }
        Ok(())
    }

    /// Bandwidth for sample size `n` and dimension `p`, clamped to `[1, p−1]`.
    pub fn bandwidth(&self, n: usize, p: usize, ctx: FitContext) -> Result<usize> {
        let rounding = self.rounding.unwrap_or_default();
        let k = match (self.k, self.rule) {
            (Some(k), _) => k,
            (None, rule) => {
                let alpha = self
                    .alpha
                    .or(ctx.alpha)
                    .ok_or_else(|| Error::InvalidParameter("bandwidth rules need alpha".into()))?;
                match rule.unwrap_or(BandwidthRule::Bl) {
                    BandwidthRule::P => bandwidth_rule_rounded(Space::P, alpha, n, rounding)?,
                    BandwidthRule::Q => bandwidth_rule_rounded(Space::Q, alpha, n, rounding)?,
                    BandwidthRule::Bl => banding_bandwidth(alpha, n, p, rounding)?,
                }
            }
        };
        Ok(clamp_bandwidth(k, p))
    }

    fn band(&self, ctx: FitContext) -> Result<SpectralBand> {
        let eta = self.eta.or(ctx.eta).ok_or_else(|| {
            Error::InvalidParameter(format!("method {} requires eta", self.method.name()))
        })?;
        SpectralBand::new(eta)
    }

    /// Fits the estimator to `z`.
    pub fn fit(&self, z: &DataMatrix, ctx: FitContext) -> Result<Fit> {
        self.validate(ctx)?;
        let (n, p) = (z.n(), z.p());
        let none = |estimate, k| Fit { estimate, k, k0: None, k1: None, lepski: None };
        match self.method {
            Method::Crop => {
                let k = self.bandwidth(n, p, ctx)?;
                let cfg = CropConfig::new(k, self.band(ctx)?).with_scaling(self.local_scaling.unwrap_or_default());
                Ok(none(crop_estimate(z, &cfg)?, Some(k)))
            }
            Method::RankCrop => {
                let k = self.bandwidth(n, p, ctx)?;
                let cfg = CropConfig::new(k, self.band(ctx)?).with_scaling(LocalScaling::Plain);
                let rank = self.rank.expect("validated");
                Ok(none(rank_crop_estimate(z, &cfg, rank)?, Some(k)))
            }
            Method::Banding => {
                let k = self.bandwidth(n, p, ctx)?;
                Ok(none(banding_estimate(z, k)?, Some(k)))
            }
            Method::Frob => {
                let alpha = self.alpha.or(ctx.alpha).expect("validated");
                let mut cfg = ThresholdConfig::new(alpha, self.band(ctx)?);
                if let Some(c) = self.c {
                    cfg.c = c;
                }
                let fit = frob_fit(z, &cfg)?;
                Ok(Fit { estimate: fit.estimate, k: None, k0: Some(fit.k0), k1: Some(fit.k1), lepski: None })
            }
            Method::Adaptive => {
                let mut cfg = LepskiConfig::new(self.band(ctx)?);
                if let Some(cl) = self.cl {
                    cfg.c_l = cl;
                }
                cfg.k_max = self.k_max;
                cfg.thinning = self.thinning.unwrap_or(false);
                cfg.scaling = self.local_scaling.unwrap_or_default();
                let (estimate, report) = adaptive_estimate(z, &cfg)?;
                Ok(Fit { estimate, k: report.k_hat(), k0: None, k1: None, lepski: Some(report) })
            }
        }
    }
}
