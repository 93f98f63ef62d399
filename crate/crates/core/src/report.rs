//! Measured sizes against closed forms and upper bounds.
//!
//! A [`BoundReport`] describes one built network. The table builders sweep
//! parameters and produce rows that serialize straight to CSV.

use std::io::Write;

use serde::Serialize;

use crate::error::{MnnError, Result};
use crate::gadgets::{GadgetFactory, GadgetSpec};
use crate::inversion::{build_inv, inv_bound_for, InversionSpec, SigmaReading};
use crate::mnn::{Activation, Counts, Mnn};
use crate::strassen::{
    build_str_rect, build_str_square, formula_counts_pow2, leaf_spec, padded_bound_for, CountBound,
    RectShape,
};

/// Size report for one network. Exact constructions carry `formula_*`,
/// the others `bound_*`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BoundReport {
    pub kind: String,
    pub activation: String,
    #[serde(rename = "measured_M")]
    pub measured_m: u64,
    #[serde(rename = "measured_L")]
    pub measured_l: u64,
    #[serde(rename = "formula_M", skip_serializing_if = "Option::is_none")]
    pub formula_m: Option<u64>,
    #[serde(rename = "formula_L", skip_serializing_if = "Option::is_none")]
    pub formula_l: Option<u64>,
    #[serde(rename = "bound_M", skip_serializing_if = "Option::is_none")]
    pub bound_m: Option<f64>,
    #[serde(rename = "bound_L", skip_serializing_if = "Option::is_none")]
    pub bound_l: Option<f64>,
    pub satisfied: bool,
    /// Report-only figures that do not affect `satisfied`.
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub details: Vec<Detail>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Detail {
    pub name: String,
    pub value: f64,
}

fn detail(name: &str, value: f64) -> Detail {
    Detail {
        name: name.to_string(),
        value,
    }
}

impl BoundReport {
    fn exact(kind: &str, activation: Activation, measured: Counts, formula: Counts) -> Self {
        BoundReport {
            kind: kind.to_string(),
            activation: activation.name().to_string(),
            measured_m: measured.weights,
            measured_l: measured.layers,
            formula_m: Some(formula.weights),
            formula_l: Some(formula.layers),
            bound_m: None,
            bound_l: None,
            satisfied: measured == formula,
            details: Vec::new(),
        }
    }

    fn bounded(kind: &str, activation: Activation, measured: Counts, bound: CountBound) -> Self {
        BoundReport {
            kind: kind.to_string(),
            activation: activation.name().to_string(),
            measured_m: measured.weights,
            measured_l: measured.layers,
            formula_m: None,
            formula_l: None,
            bound_m: Some(bound.weights),
            bound_l: Some(bound.layers),
            satisfied: bound.admits(measured),
            details: Vec::new(),
        }
    }

    pub fn measured(&self) -> Counts {
        Counts {
            weights: self.measured_m,
            layers: self.measured_l,
        }
    }

    pub fn write_json(&self, writer: impl Write) -> Result<()> {
        serde_json::to_writer_pretty(writer, self)?;
        Ok(())
    }
}

/// Gadget report: measured against the factory's own size, with the
/// published ReLU bound alongside.
pub fn gadget_report(
    net: &Mnn,
    spec: GadgetSpec,
    factory: &dyn GadgetFactory,
) -> Result<BoundReport> {
    let mut report = BoundReport::exact(
        "gadget",
        factory.activation(),
        Counts::of(net),
        factory.counts(spec)?,
    );
    if factory.activation() == Activation::Relu {
        let reference = relu_reference_bound(spec);
        report
            .details
            .push(detail("reference_M", reference.weights));
        report.details.push(detail("reference_L", reference.layers));
    }
    Ok(report)
}

pub fn pow2_report(
    net: &Mnn,
    k: u32,
    eps: f64,
    range: f64,
    factory: &dyn GadgetFactory,
) -> Result<BoundReport> {
    let leaf = factory.counts(leaf_spec(k, eps, range)?)?;
    let formula = formula_counts_pow2(k, leaf.weights, leaf.layers)?;
    let mut report = BoundReport::exact(
        "strassen-pow2",
        factory.activation(),
        Counts::of(net),
        formula,
    );
    report.details.push(detail("gadget_M", leaf.weights as f64));
    report.details.push(detail("gadget_L", leaf.layers as f64));
    Ok(report)
}

pub fn rect_report(
    net: &Mnn,
    shape: RectShape,
    eps: f64,
    range: f64,
    factory: &dyn GadgetFactory,
) -> Result<BoundReport> {
    let bound = padded_bound_for(shape.gamma(), eps, range, factory)?;
    let mut report = BoundReport::bounded(
        "strassen-rect",
        factory.activation(),
        Counts::of(net),
        bound,
    );
    report.details.push(detail("gamma", shape.gamma() as f64));
    Ok(report)
}

pub fn square_report(
    net: &Mnn,
    n: usize,
    eps: f64,
    range: f64,
    factory: &dyn GadgetFactory,
) -> Result<BoundReport> {
    let bound = padded_bound_for(n, eps, range, factory)?;
    Ok(BoundReport::bounded(
        "strassen-square",
        factory.activation(),
        Counts::of(net),
        bound,
    ))
}

/// Inverse report. One stage is checked for equality; deeper networks
/// against the size bound, gated on the construction reading with the
/// literal reading reported next to it.
pub fn inverse_report(
    net: &Mnn,
    spec: InversionSpec,
    factory: &dyn GadgetFactory,
) -> Result<BoundReport> {
    let measured = Counts::of(net);
    let mut report = if spec.stages() == 1 {
        let n = spec.n() as u64;
        let formula = Counts {
            weights: 2 * (n * n + n),
            layers: 2,
        };
        BoundReport::exact("inverse", factory.activation(), measured, formula)
    } else {
        let bound = inv_bound_for(spec, SigmaReading::Construction, factory)?;
        let mut report = BoundReport::bounded("inverse", factory.activation(), measured, bound);
        let literal = inv_bound_for(spec, SigmaReading::Statement, factory)?;
        report
            .details
            .push(detail("statement_bound_M", literal.weights));
        report
            .details
            .push(detail("statement_bound_L", literal.layers));
        report.details.push(detail(
            "statement_satisfied",
            f64::from(u8::from(literal.admits(measured))),
        ));
        report
    };
    report.details.push(detail("stages", spec.stages() as f64));
    report.details.push(detail(
        "m_eps_delta",
        neumann_terms_estimate(spec.epsilon(), spec.delta()),
    ));
    Ok(report)
}

/// Published size bound for the ReLU product gadget at `(eps, K)`.
pub fn relu_reference_bound(spec: GadgetSpec) -> CountBound {
    let (eps, k) = (spec.epsilon(), spec.range());
    if eps >= k * k {
        CountBound {
            weights: 0.0,
            layers: 1.0,
        }
    } else if eps >= k * k / 2.0 {
        CountBound {
            weights: 12.0,
            layers: 2.0,
        }
    } else {
        let (lk, le) = (k.log2(), (1.0 / eps).log2());
        CountBound {
            weights: 30.0 * lk + 15.0 * le + 25.0,
            layers: lk + 0.5 * le + 2.5,
        }
    }
}

/// `m(eps, delta) = log2(eps (1 - delta) / 2) / log2(delta)`, the number of
/// Neumann terms behind the asymptotic size of the inverse network.
pub fn neumann_terms_estimate(eps: f64, delta: f64) -> f64 {
    (eps * (1.0 - delta) / 2.0).log2() / delta.log2()
}

/// Least-squares line with coefficient of determination.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
}

impl LinearFit {
    pub fn fit(xs: &[f64], ys: &[f64]) -> Result<Self> {
        if xs.len() != ys.len() || xs.len() < 2 {
            return Err(MnnError::param(
                "a line fit needs at least two paired points",
            ));
        }
        let n = xs.len() as f64;
        let mx = xs.iter().sum::<f64>() / n;
        let my = ys.iter().sum::<f64>() / n;
        let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
        let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
        let syy: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
        if sxx == 0.0 {
            return Err(MnnError::param("a line fit needs two distinct x values"));
        }
        let slope = sxy / sxx;
        let intercept = my - slope * mx;
        let sse: f64 = xs
            .iter()
            .zip(ys)
            .map(|(x, y)| (y - slope * x - intercept).powi(2))
            .sum();
        let r_squared = if syy == 0.0 { 1.0 } else { 1.0 - sse / syy };
        Ok(LinearFit {
            slope,
            intercept,
            r_squared,
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GrowthRow {
    pub k: u32,
    #[serde(rename = "measured_M")]
    pub measured_m: u64,
    #[serde(rename = "measured_L")]
    pub measured_l: u64,
    #[serde(rename = "formula_M")]
    pub formula_m: u64,
    #[serde(rename = "formula_L")]
    pub formula_l: u64,
    /// `M(k) + 12 * 4^k`
    pub shifted_m: u64,
    /// `shifted_m(k) == 7 * shifted_m(k - 1)`; empty on the first row.
    pub recursion_holds: Option<bool>,
}

/// Sizes of the power-of-two networks for `k = 0..=max_k`, built at
/// accuracy `eps` on range `range`.
pub fn strassen_growth(
    max_k: u32,
    eps: f64,
    range: f64,
    factory: &dyn GadgetFactory,
) -> Result<Vec<GrowthRow>> {
    let mut rows: Vec<GrowthRow> = Vec::new();
    for k in 0..=max_k {
        let net = crate::strassen::build_str_pow2(k, eps, range, factory)?;
        let measured = Counts::of(&net);
        let leaf = factory.counts(leaf_spec(k, eps, range)?)?;
        let formula = formula_counts_pow2(k, leaf.weights, leaf.layers)?;
        let shifted_m = measured.weights + 12 * 4u64.pow(k);
        let recursion_holds = rows.last().map(|prev| shifted_m == 7 * prev.shifted_m);
        rows.push(GrowthRow {
            k,
            measured_m: measured.weights,
            measured_l: measured.layers,
            formula_m: formula.weights,
            formula_l: formula.layers,
            shifted_m,
            recursion_holds,
        });
    }
    Ok(rows)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GadgetRow {
    pub log2_inv_eps: u32,
    pub epsilon: f64,
    #[serde(rename = "measured_M")]
    pub measured_m: u64,
    #[serde(rename = "measured_L")]
    pub measured_l: u64,
    #[serde(rename = "reference_M")]
    pub reference_m: f64,
    #[serde(rename = "reference_L")]
    pub reference_l: f64,
    /// R^2 of the affine fit of `M` against `log2(1/eps)` over the sweep.
    pub fit_r_squared: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct GadgetSweep {
    pub rows: Vec<GadgetRow>,
    pub fit: LinearFit,
}

/// Builds the gadget for `eps = 2^-e`, `e` in `exponents`, on range `range`
/// and fits `M` against `e`.
pub fn gadget_sweep(
    exponents: std::ops::RangeInclusive<u32>,
    range: f64,
    factory: &dyn GadgetFactory,
) -> Result<GadgetSweep> {
    let mut measured = Vec::new();
    for e in exponents {
        let spec = GadgetSpec::new(2f64.powi(-(e as i32)), range)?;
        measured.push((e, spec, Counts::of(&factory.build(spec)?)));
    }
    let xs: Vec<f64> = measured.iter().map(|(e, _, _)| *e as f64).collect();
    let ys: Vec<f64> = measured.iter().map(|(_, _, c)| c.weights as f64).collect();
    let fit = LinearFit::fit(&xs, &ys)?;
    let rows = measured
        .into_iter()
        .map(|(e, spec, counts)| {
            let reference = relu_reference_bound(spec);
            GadgetRow {
                log2_inv_eps: e,
                epsilon: spec.epsilon(),
                measured_m: counts.weights,
                measured_l: counts.layers,
                reference_m: reference.weights,
                reference_l: reference.layers,
                fit_r_squared: fit.r_squared,
            }
        })
        .collect();
    Ok(GadgetSweep { rows, fit })
}

/// One row of the bounds table. Product rows leave the inverse columns
/// empty and the other way round.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BoundsRow {
    pub kind: &'static str,
    pub activation: &'static str,
    pub m: Option<usize>,
    pub n: usize,
    pub p: Option<usize>,
    pub alpha: Option<f64>,
    pub epsilon: f64,
    pub delta: Option<f64>,
    #[serde(rename = "measured_M")]
    pub measured_m: u64,
    #[serde(rename = "measured_L")]
    pub measured_l: u64,
    #[serde(rename = "bound_M")]
    pub bound_m: f64,
    #[serde(rename = "bound_L")]
    pub bound_l: f64,
    pub satisfied: bool,
    #[serde(rename = "statement_bound_M")]
    pub statement_bound_m: Option<f64>,
    #[serde(rename = "statement_bound_L")]
    pub statement_bound_l: Option<f64>,
    pub statement_satisfied: Option<bool>,
    pub m_eps_delta: Option<f64>,
}

/// Padded product networks for each `(m, n, p)` at accuracy `eps` on `range`.
pub fn strassen_bounds(
    shapes: &[(usize, usize, usize)],
    eps: f64,
    range: f64,
    factory: &dyn GadgetFactory,
) -> Result<Vec<BoundsRow>> {
    shapes
        .iter()
        .map(|&(m, n, p)| {
            let shape = RectShape::new(m, n, p)?;
            let measured = Counts::of(&build_str_rect(shape, eps, range, factory)?);
            let bound = padded_bound_for(shape.gamma(), eps, range, factory)?;
            Ok(BoundsRow {
                kind: "strassen-rect",
                activation: factory.activation().name(),
                m: Some(m),
                n,
                p: Some(p),
                alpha: None,
                epsilon: eps,
                delta: None,
                measured_m: measured.weights,
                measured_l: measured.layers,
                bound_m: bound.weights,
                bound_l: bound.layers,
                satisfied: bound.admits(measured),
                statement_bound_m: None,
                statement_bound_l: None,
                statement_satisfied: None,
                m_eps_delta: None,
            })
        })
        .collect()
}

/// Square padded networks for each `n`.
pub fn square_bounds(
    sizes: &[usize],
    eps: f64,
    range: f64,
    factory: &dyn GadgetFactory,
) -> Result<Vec<BoundsRow>> {
    sizes
        .iter()
        .map(|&n| {
            let measured = Counts::of(&build_str_square(n, eps, range, factory)?);
            let bound = padded_bound_for(n, eps, range, factory)?;
            Ok(BoundsRow {
                kind: "strassen-square",
                activation: factory.activation().name(),
                m: None,
                n,
                p: None,
                alpha: None,
                epsilon: eps,
                delta: None,
                measured_m: measured.weights,
                measured_l: measured.layers,
                bound_m: bound.weights,
                bound_l: bound.layers,
                satisfied: bound.admits(measured),
                statement_bound_m: None,
                statement_bound_l: None,
                statement_satisfied: None,
                m_eps_delta: None,
            })
        })
        .collect()
}

/// Inverse networks for every combination of the given parameters.
pub fn inverse_bounds(
    sizes: &[usize],
    alphas: &[f64],
    epsilons: &[f64],
    delta: f64,
    factory: &dyn GadgetFactory,
) -> Result<Vec<BoundsRow>> {
    let mut rows = Vec::new();
    for &n in sizes {
        for &alpha in alphas {
            for &eps in epsilons {
                let spec = InversionSpec::new(n, alpha, eps, delta)?;
                let net = build_inv(spec, factory)?;
                let report = inverse_report(&net, spec, factory)?;
                let find = |name: &str| {
                    report
                        .details
                        .iter()
                        .find(|d| d.name == name)
                        .map(|d| d.value)
                };
                let (bound_m, bound_l) = match (report.bound_m, report.bound_l) {
                    (Some(m), Some(l)) => (m, l),
                    _ => (
                        report.formula_m.unwrap_or_default() as f64,
                        report.formula_l.unwrap_or_default() as f64,
                    ),
                };
                rows.push(BoundsRow {
                    kind: "inverse",
                    activation: factory.activation().name(),
                    m: None,
                    n,
                    p: None,
                    alpha: Some(alpha),
                    epsilon: eps,
                    delta: Some(delta),
                    measured_m: report.measured_m,
                    measured_l: report.measured_l,
                    bound_m,
                    bound_l,
                    satisfied: report.satisfied,
                    statement_bound_m: find("statement_bound_M").or(Some(bound_m)),
                    statement_bound_l: find("statement_bound_L").or(Some(bound_l)),
                    statement_satisfied: Some(
                        find("statement_satisfied").map_or(report.satisfied, |v| v == 1.0),
                    ),
                    m_eps_delta: find("m_eps_delta"),
                });
            }
        }
    }
    Ok(rows)
}

/// Writes serializable rows as CSV with a header line.
pub fn write_csv<T: Serialize>(rows: &[T], writer: impl Write) -> Result<()> {
    let mut csv = csv::Writer::from_writer(writer);
    for row in rows {
        csv.serialize(row)?;
    }
    csv.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gadgets::{Relu2Product, ReluProduct};
    use crate::strassen::build_str_pow2;

    #[test]
    fn line_fit_recovers_a_line() {
        let fit = LinearFit::fit(&[1.0, 2.0, 3.0], &[5.0, 7.0, 9.0]).unwrap();
        assert_eq!((fit.slope, fit.intercept, fit.r_squared), (2.0, 3.0, 1.0));
        assert!(LinearFit::fit(&[1.0, 1.0], &[0.0, 1.0]).is_err());
    }

    #[test]
    fn pow2_report_json_keys() {
        let net = build_str_pow2(1, 1.0, 1.0, &Relu2Product).unwrap();
        let report = pow2_report(&net, 1, 1.0, 1.0, &Relu2Product).unwrap();
        assert_eq!((report.measured_m, report.formula_m), (120, Some(120)));
        let json: serde_json::Value = serde_json::to_value(&report).unwrap();
        assert_eq!(json["measured_M"], 120);
        assert_eq!(json["formula_L"], 4);
        assert_eq!(json["satisfied"], true);
        assert!(json.get("bound_M").is_none());
    }

    #[test]
    fn relu2_growth_obeys_recursion() {
        let rows = strassen_growth(3, 1.0, 1.0, &Relu2Product).unwrap();
        let shifted: Vec<u64> = rows.iter().map(|r| r.shifted_m).collect();
        assert_eq!(shifted, vec![24, 168, 1176, 8232]);
        assert!(rows[1..].iter().all(|r| r.recursion_holds == Some(true)));
        assert_eq!(rows[0].recursion_holds, None);
    }

    #[test]
    fn reference_bound_branches() {
        let at = |eps| relu_reference_bound(GadgetSpec::new(eps, 1.0).unwrap());
        assert_eq!(
            at(1.0),
            CountBound {
                weights: 0.0,
                layers: 1.0
            }
        );
        assert_eq!(
            at(0.5),
            CountBound {
                weights: 12.0,
                layers: 2.0
            }
        );
        assert_eq!(
            at(0.25),
            CountBound {
                weights: 55.0,
                layers: 3.5
            }
        );
    }

    #[test]
    fn gadget_sweep_is_affine() {
        let sweep = gadget_sweep(2..=16, 1.0, &ReluProduct).unwrap();
        assert_eq!(sweep.rows.len(), 15);
        assert!(sweep.fit.r_squared >= 0.98, "{:?}", sweep.fit);
    }

    #[test]
    fn one_stage_inverse_report() {
        let spec = InversionSpec::new(2, 1.0, 1.2, 0.5).unwrap();
        let net = build_inv(spec, &Relu2Product).unwrap();
        let report = inverse_report(&net, spec, &Relu2Product).unwrap();
        assert_eq!((report.measured_m, report.measured_l), (12, 2));
        assert!(report.satisfied);
    }

    #[test]
    fn csv_rows_have_header() {
        let rows = strassen_growth(1, 1.0, 1.0, &Relu2Product).unwrap();
        let mut buf = Vec::new();
        write_csv(&rows, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("k,measured_M,measured_L,formula_M,formula_L,shifted_m,recursion_holds\n0,12,2,12,2,24,\n"));
    }
}
