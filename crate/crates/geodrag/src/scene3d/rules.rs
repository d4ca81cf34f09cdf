//! Parametric point translation: ordered rules that move named keypoints as
//! arithmetic functions of user parameters.

use std::collections::{BTreeMap, BTreeSet};

use nalgebra::Point3;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scene3d::expr::Expr;

pub type KeypointMap = BTreeMap<String, Point3<f64>>;
pub type ParamValues = BTreeMap<String, f64>;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Axis {
    X,
    Y,
    Z,
}

impl Axis {
    fn component(&self, p: &Point3<f64>) -> f64 {
        match self {
            Axis::X => p.x,
            Axis::Y => p.y,
            Axis::Z => p.z,
        }
    }

    fn set_component(&self, p: &mut Point3<f64>, v: f64) {
        match self {
            Axis::X => p.x = v,
            Axis::Y => p.y = v,
            Axis::Z => p.z = v,
        }
    }
}

/// How a rule moves its selected keypoints.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Transform {
    /// Shift along one axis by `amount(params)`.
    Translate { axis: Axis, amount: Expr },
    /// Scale the axis component about an anchor by `factor(params)`.
    ScaleAbout { anchor: [f64; 3], axis: Axis, factor: Expr },
    /// Add the 3D offset `(x, y, z)(params)` to each selected point.
    Displace { x: Expr, y: Expr, z: Expr },
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Rule {
    pub select: BTreeSet<String>,
    pub transform: Transform,
}

/// An ordered rule list plus the parameter schema (names and reference
/// values). Evaluating every rule at the reference values must be the
/// identity, which is checked by [`TranslationRuleSet::validate`].
#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TranslationRuleSet {
    /// Parameter names with their reference values.
    pub params: ParamValues,
    pub rules: Vec<Rule>,
}

const IDENTITY_TOL: f64 = 1e-9;

impl TranslationRuleSet {
    pub fn validate(&self, keypoint_names: &BTreeSet<String>) -> Result<()> {
        for (i, rule) in self.rules.iter().enumerate() {
            if rule.select.is_empty() {
                return Err(Error::invalid(format!("rule {i} selects no keypoints")));
            }
            for name in &rule.select {
                if !keypoint_names.contains(name) {
                    return Err(Error::invalid(format!(
                        "rule {i} selects unknown keypoint {name:?}"
                    )));
                }
            }
            for expr in rule_exprs(&rule.transform) {
                for param in expr.params() {
                    if !self.params.contains_key(&param) {
                        return Err(Error::invalid(format!(
                            "rule {i} references parameter {param:?} missing from the schema"
                        )));
                    }
                }
            }
            // the rule set must be the identity at the reference values
            match &rule.transform {
                Transform::Translate { amount, .. } => {
                    let v = amount.eval(&self.params)?;
                    if v.abs() > IDENTITY_TOL {
                        return Err(Error::invalid(format!(
                            "rule {i}: translate amount is {v} at the reference parameters (must be 0)"
                        )));
                    }
                }
                Transform::ScaleAbout { factor, .. } => {
                    let v = factor.eval(&self.params)?;
                    if (v - 1.0).abs() > IDENTITY_TOL {
                        return Err(Error::invalid(format!(
                            "rule {i}: scale factor is {v} at the reference parameters (must be 1)"
                        )));
                    }
                }
                Transform::Displace { x, y, z } => {
                    for (label, expr) in [("x", x), ("y", y), ("z", z)] {
                        let v = expr.eval(&self.params)?;
                        if v.abs() > IDENTITY_TOL {
                            return Err(Error::invalid(format!(
                                "rule {i}: displace {label} is {v} at the reference parameters (must be 0)"
                            )));
                        }
                    }
                }
            }
        }
        Ok(())
    }

    /// Checks that `gamma` supplies exactly the schema parameters.
    pub fn check_gamma(&self, gamma: &ParamValues) -> Result<()> {
        for name in self.params.keys() {
            if !gamma.contains_key(name) {
                return Err(Error::invalid(format!("missing parameter {name:?}")));
            }
        }
        for name in gamma.keys() {
            if !self.params.contains_key(name) {
                return Err(Error::invalid(format!("unknown parameter {name:?}")));
            }
        }
        Ok(())
    }
}

fn rule_exprs(transform: &Transform) -> Vec<&Expr> {
    match transform {
        Transform::Translate { amount, .. } => vec![amount],
        Transform::ScaleAbout { factor, .. } => vec![factor],
        Transform::Displace { x, y, z } => vec![x, y, z],
    }
}

/// Applies the rules in declared order at the given parameter values.
/// Keypoints not selected by any rule pass through bitwise unchanged.
pub fn translate_points(
    keypoints: &KeypointMap,
    rules: &TranslationRuleSet,
    gamma: &ParamValues,
) -> Result<KeypointMap> {
    let names: BTreeSet<String> = keypoints.keys().cloned().collect();
    rules.validate(&names)?;
    rules.check_gamma(gamma)?;

    let mut result = keypoints.clone();
    for rule in &rules.rules {
        match &rule.transform {
            Transform::Translate { axis, amount } => {
                let delta = amount.eval(gamma)?;
                for name in &rule.select {
                    let p = result.get_mut(name).expect("validated selector");
                    let v = axis.component(p) + delta;
                    axis.set_component(p, v);
                }
            }
            Transform::ScaleAbout { anchor, axis, factor } => {
                let f = factor.eval(gamma)?;
                let anchor_v = match axis {
                    Axis::X => anchor[0],
                    Axis::Y => anchor[1],
                    Axis::Z => anchor[2],
                };
                for name in &rule.select {
                    let p = result.get_mut(name).expect("validated selector");
                    let v = anchor_v + f * (axis.component(p) - anchor_v);
                    axis.set_component(p, v);
                }
            }
            Transform::Displace { x, y, z } => {
                let dx = x.eval(gamma)?;
                let dy = y.eval(gamma)?;
                let dz = z.eval(gamma)?;
                for name in &rule.select {
                    let p = result.get_mut(name).expect("validated selector");
                    *p = Point3::new(p.x + dx, p.y + dy, p.z + dz);
                }
            }
        }
    }
    Ok(result)
}
