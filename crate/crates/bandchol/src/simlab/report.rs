use super::experiment::{CellReport, RiskReport};
use super::loss::LossKind;

/// One row of plot data: mean squared operator loss of a cell against the
/// three rate axes.
#[derive(Debug, Clone, PartialEq)]
pub struct PlotRow {
    pub model: String,
    pub level: Option<u32>,
    pub alpha: f64,
    pub p: usize,
    pub transform: String,
    pub estimator: String,
    pub n: usize,
    pub loss_mean: f64,
    pub loss_sd: f64,
    /// `n^{−2α/(2α+1)}`
    pub x_q: f64,
    /// `n^{−(2α−1)/(2α)}`, only for `α > 1/2`.
    pub x_p: Option<f64>,
    /// `log(p) / n`
    pub x_logp: f64,
}

pub fn rate_q(alpha: f64, n: usize) -> f64 {
    (n as f64).powf(-2.0 * alpha / (2.0 * alpha + 1.0))
}

pub fn rate_p(alpha: f64, n: usize) -> Option<f64> {
    (alpha > 0.5).then(|| (n as f64).powf(-(2.0 * alpha - 1.0) / (2.0 * alpha)))
}

pub fn rate_logp(p: usize, n: usize) -> f64 {
    (p as f64).ln() / n as f64
}

impl PlotRow {
    fn from_cell(c: &CellReport) -> Option<Self> {
        let s = c.losses.get(LossKind::OpSq.name())?;
        let alpha = c.model.alpha;
        Some(Self {
            model: c.model.family.name().to_string(),
            level: c.model.level,
            alpha,
            p: c.p,
            transform: c.transform.name().to_string(),
            estimator: c.estimator.clone(),
            n: c.n,
            loss_mean: s.mean,
            loss_sd: s.sd,
            x_q: rate_q(alpha, c.n),
            x_p: rate_p(alpha, c.n),
            x_logp: rate_logp(c.p, c.n),
        })
    }

    fn key(&self) -> (String, Option<u32>, u64, usize, String, String, usize) {
        (
            self.model.clone(),
            self.level,
            self.alpha.to_bits(),
            self.p,
            self.transform.clone(),
            self.estimator.clone(),
            self.n,
        )
    }
}

/// Plot rows from several reports, sorted by cell key with duplicates
/// dropped (first occurrence wins). Cells without squared operator loss or
/// with a recorded failure are skipped.
pub fn plot_data(reports: &[RiskReport]) -> Vec<PlotRow> {
    let mut rows: Vec<PlotRow> = reports
        .iter()
        .flat_map(|r| r.cells.iter())
        .filter(|c| c.failure.is_none())
        .filter_map(PlotRow::from_cell)
        .collect();
    rows.sort_by(|a, b| {
        (&a.model, a.level, a.alpha, a.p, &a.transform, &a.estimator, a.n)
            .partial_cmp(&(&b.model, b.level, b.alpha, b.p, &b.transform, &b.estimator, b.n))
            .expect("finite alpha")
    });
    rows.dedup_by(|b, a| a.key() == b.key());
    rows
}

pub fn plot_csv(rows: &[PlotRow]) -> String {
    let mut out = String::from("model,level,alpha,p,transform,estimator,n,op_sq_mean,op_sq_sd,x_q,x_p,x_logp\n");
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{},{},{}\n",
            r.model,
            r.level.map(|l| l.to_string()).unwrap_or_default(),
            r.alpha,
            r.p,
            r.transform,
            r.estimator,
            r.n,
            r.loss_mean,
            r.loss_sd,
            r.x_q,
            r.x_p.map(|x| x.to_string()).unwrap_or_default(),
            r.x_logp
        ));
    }
    out
}

/// Sample Pearson correlation; `None` for fewer than two points or zero
/// variance.
pub fn pearson(x: &[f64], y: &[f64]) -> Option<f64> {
    if x.len() != y.len() || x.len() < 2 {
        return None;
    }
    let m = x.len() as f64;
    let (mx, my) = (x.iter().sum::<f64>() / m, y.iter().sum::<f64>() / m);
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
        syy += (b - my) * (b - my);
    }
    (sxx > 0.0 && syy > 0.0).then(|| sxy / (sxx * syy).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::simlab::{run_experiment, BandwidthRule, EstimatorSpec, ExperimentConfig, Method, ModelFamily, ModelSpec};

    fn report(n_grid: Vec<usize>) -> RiskReport {
        let cfg = ExperimentConfig::new(
            ModelSpec::new(ModelFamily::QDecay, 20, 1.0),
            vec![EstimatorSpec::new(Method::Crop).with_rule(BandwidthRule::Q)],
            n_grid,
            2,
            3,
        );
        run_experiment(&cfg).unwrap()
    }

    #[test]
    fn q_axis() {
        assert!((rate_q(1.0, 500) - 500f64.powf(-2.0 / 3.0)).abs() < 1e-15);
        assert!((rate_q(1.0, 1000) - 0.01).abs() < 1e-15);
        assert_eq!(rate_p(0.5, 100), None);
        assert!((rate_p(1.0, 100).unwrap() - 0.1).abs() < 1e-15);
    }

    #[test]
    fn single_cell() {
        let rows = plot_data(&[report(vec![100])]);
        assert_eq!(rows.len(), 1);
        assert_eq!(plot_csv(&rows).lines().count(), 2);
    }

    #[test]
    fn merge_sort_dedup() {
        let a = report(vec![200, 100]);
        let b = report(vec![100, 300]);
        let rows = plot_data(&[a.clone(), b]);
        let ns: Vec<usize> = rows.iter().map(|r| r.n).collect();
        assert_eq!(ns, vec![100, 200, 300]);
        assert_eq!(rows[0].loss_mean, a.cells[1].losses["op_sq"].mean);
    }

    #[test]
    fn pearson_basic() {
        assert!((pearson(&[1.0, 2.0, 3.0], &[2.0, 4.0, 6.0]).unwrap() - 1.0).abs() < 1e-15);
        assert!((pearson(&[1.0, 2.0, 3.0], &[3.0, 2.0, 1.0]).unwrap() + 1.0).abs() < 1e-15);
        assert_eq!(pearson(&[1.0, 1.0], &[1.0, 2.0]), None);
    }
}
