//! Inequality reports, their JSON form, and the discretisation tolerance.

use serde::{Deserialize, Deserializer, Serialize};
use std::collections::BTreeMap;

// JSON has no NaN; serde_json writes it as null.
fn nan_f64<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
    Ok(Option::<f64>::deserialize(d)?.unwrap_or(f64::NAN))
}

fn nan_vec<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<f64>, D::Error> {
    let v = Vec::<Option<f64>>::deserialize(d)?;
    Ok(v.into_iter().map(|x| x.unwrap_or(f64::NAN)).collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Status {
    Pass,
    Fail,
    /// Hypotheses of a conditional statement failed; nothing was asserted.
    Vacuous,
    /// A hypothesis that does not hold on the data. Not a failure.
    Unmet,
}

/// Outcome of one inequality `lhs ≤ rhs` checked at a set of samples.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InequalityReport {
    pub id: String,
    pub description: String,
    pub times: Vec<f64>,
    /// `rhs − lhs` at every sample.
    #[serde(deserialize_with = "nan_vec")]
    pub margins: Vec<f64>,
    pub tolerance: f64,
    pub status: Status,
    #[serde(deserialize_with = "nan_f64")]
    pub worst_margin: f64,
    #[serde(deserialize_with = "nan_f64")]
    pub worst_time: f64,
    /// Reported for reference only; never affects the exit status.
    pub informational: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

impl InequalityReport {
    /// Pass iff every margin is at least `−tolerance`.
    pub fn evaluate(
        id: &str,
        description: &str,
        times: Vec<f64>,
        margins: Vec<f64>,
        tolerance: f64,
    ) -> Self {
        assert_eq!(times.len(), margins.len());
        let (worst_margin, worst_time) =
            margins
                .iter()
                .zip(&times)
                .fold((f64::INFINITY, f64::NAN), |(m, t), (&mi, &ti)| {
                    if mi < m || mi.is_nan() {
                        (mi, ti)
                    } else {
                        (m, t)
                    }
                });
        let pass = margins.iter().all(|m| *m >= -tolerance);
        InequalityReport {
            id: id.to_string(),
            description: description.to_string(),
            times,
            margins,
            tolerance,
            status: if pass { Status::Pass } else { Status::Fail },
            worst_margin,
            worst_time,
            informational: false,
            note: None,
        }
    }

    /// A single scalar condition `margin ≥ 0`.
    pub fn scalar(id: &str, description: &str, margin: f64, tolerance: f64) -> Self {
        Self::evaluate(id, description, vec![0.0], vec![margin], tolerance)
    }

    pub fn vacuous(id: &str, description: &str, reason: &str) -> Self {
        InequalityReport {
            id: id.to_string(),
            description: description.to_string(),
            times: Vec::new(),
            margins: Vec::new(),
            tolerance: 0.0,
            status: Status::Vacuous,
            worst_margin: f64::NAN,
            worst_time: f64::NAN,
            informational: false,
            note: Some(reason.to_string()),
        }
    }

    /// Evaluate the margins but mark vacuous when `hypotheses` is `Some(reason)`.
    pub fn conditional(
        id: &str,
        description: &str,
        times: Vec<f64>,
        margins: Vec<f64>,
        tolerance: f64,
        hypotheses: Option<&str>,
    ) -> Self {
        let mut r = Self::evaluate(id, description, times, margins, tolerance);
        if let Some(reason) = hypotheses {
            r.status = Status::Vacuous;
            r.note = Some(reason.to_string());
        }
        r
    }

    /// Mark as a hypothesis: a violated margin is reported as unmet.
    pub fn hypothesis(mut self) -> Self {
        if self.status == Status::Fail {
            self.status = Status::Unmet;
        }
        self
    }

    pub fn is_unmet(&self) -> bool {
        self.status == Status::Unmet
    }

    pub fn informational(mut self) -> Self {
        self.informational = true;
        self
    }

    pub fn with_note(mut self, note: impl Into<String>) -> Self {
        self.note = Some(note.into());
        self
    }

    pub fn passed(&self) -> bool {
        self.status == Status::Pass
    }

    /// Counts towards a failing exit status.
    pub fn is_failure(&self) -> bool {
        self.status == Status::Fail && !self.informational
    }
}

/// Ordered collection of reports, serialised as a JSON object keyed by id.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ReportSet {
    pub reports: Vec<InequalityReport>,
}

impl ReportSet {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, r: InequalityReport) {
        self.reports.push(r);
    }

    pub fn extend<I: IntoIterator<Item = InequalityReport>>(&mut self, it: I) {
        self.reports.extend(it);
    }

    pub fn get(&self, id: &str) -> Option<&InequalityReport> {
        self.reports.iter().find(|r| r.id == id)
    }

    pub fn failures(&self) -> impl Iterator<Item = &InequalityReport> {
        self.reports.iter().filter(|r| r.is_failure())
    }

    pub fn any_failed(&self) -> bool {
        self.failures().next().is_some()
    }

    pub fn to_json(&self) -> serde_json::Value {
        let mut map = serde_json::Map::new();
        for r in &self.reports {
            map.insert(
                r.id.clone(),
                serde_json::to_value(r).expect("report serializes"),
            );
        }
        serde_json::Value::Object(map)
    }

    pub fn from_json(value: &serde_json::Value) -> Result<Self, serde_json::Error> {
        let map: serde_json::Map<String, serde_json::Value> =
            serde_json::from_value(value.clone())?;
        let reports = map
            .into_iter()
            .map(|(_, v)| serde_json::from_value(v))
            .collect::<Result<_, _>>()?;
        Ok(ReportSet { reports })
    }
}

/// `tol = C·dt² + floor`, with one `C` per inequality id.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ToleranceModel {
    pub dt: f64,
    pub floor: f64,
    pub constants: BTreeMap<String, f64>,
}

impl ToleranceModel {
    pub const FLOOR: f64 = 1e-9;

    /// Floating-point floor only.
    pub fn floor_only(dt: f64) -> Self {
        ToleranceModel {
            dt,
            floor: Self::FLOOR,
            constants: BTreeMap::new(),
        }
    }

    pub fn tol(&self, id: &str) -> f64 {
        self.constants.get(id).copied().unwrap_or(0.0) * self.dt * self.dt + self.floor
    }

    /// Richardson estimate from runs at `dt` and `dt/2`: for a second-order
    /// error `e ≈ C dt²`, `|m_dt − m_{dt/2}| ≈ (3/4) C dt²`. Margins are
    /// paired at common sample times.
    pub fn from_halving(dt: f64, coarse: &ReportSet, fine: &ReportSet) -> Self {
        let mut constants = BTreeMap::new();
        for rc in &coarse.reports {
            let Some(rf) = fine.get(&rc.id) else { continue };
            let mut worst: f64 = 0.0;
            let slack = 1e-9 * dt;
            let mut diff = |a: f64, b: f64| {
                if a.is_finite() && b.is_finite() {
                    worst = worst.max((a - b).abs());
                }
            };
            let aligned = rc.times.len() == rf.times.len()
                && rc
                    .times
                    .iter()
                    .zip(&rf.times)
                    .all(|(a, b)| (a - b).abs() <= slack);
            if aligned {
                for (mc, mf) in rc.margins.iter().zip(&rf.margins) {
                    diff(*mc, *mf);
                }
            } else {
                for (t, mc) in rc.times.iter().zip(&rc.margins) {
                    let pos = rf.times.partition_point(|&s| s < t - slack);
                    if let Some(&tf) = rf.times.get(pos) {
                        if (tf - t).abs() <= slack {
                            diff(*mc, rf.margins[pos]);
                        }
                    }
                }
            }
            constants.insert(rc.id.clone(), worst * 4.0 / 3.0 / (dt * dt));
        }
        ToleranceModel {
            dt,
            floor: Self::FLOOR,
            constants,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pass_fail_and_worst_sample() {
        let r =
            InequalityReport::evaluate("x", "", vec![0.0, 1.0, 2.0], vec![0.5, -1e-10, 0.2], 1e-9);
        assert!(r.passed());
        assert_eq!(r.worst_time, 1.0);
        let r = InequalityReport::evaluate("x", "", vec![0.0, 1.0], vec![0.5, -1e-8], 1e-9);
        assert_eq!(r.status, Status::Fail);
        assert!(r.is_failure() && !r.clone().informational().is_failure());
    }

    #[test]
    fn vacuous_is_not_a_failure() {
        let r =
            InequalityReport::conditional("y", "", vec![0.0], vec![-5.0], 0.0, Some("hypothesis"));
        assert_eq!(r.status, Status::Vacuous);
        assert!(!r.is_failure());
    }

    #[test]
    fn unmet_hypothesis_is_not_a_failure() {
        let r = InequalityReport::scalar("4.27", "", -0.1, 1e-9).hypothesis();
        assert!(r.is_unmet() && !r.is_failure());
        let ok = InequalityReport::scalar("4.27", "", 0.1, 1e-9).hypothesis();
        assert!(ok.passed());
    }

    #[test]
    fn json_round_trip() {
        let mut set = ReportSet::new();
        set.push(InequalityReport::scalar("4.19", "budget", 0.25, 1e-9));
        set.push(InequalityReport::vacuous(
            "4.13",
            "conclusion",
            "hypotheses failed",
        ));
        let text = serde_json::to_string(&set.to_json()).unwrap();
        let back = ReportSet::from_json(&serde_json::from_str(&text).unwrap()).unwrap();
        assert_eq!(back.get("4.19"), set.get("4.19"));
        let vac = back.get("4.13").unwrap();
        assert_eq!(vac.status, Status::Vacuous);
        assert!(vac.worst_margin.is_nan());
    }

    #[test]
    fn richardson_constant() {
        let dt = 0.1;
        let c = 2.0;
        let mut coarse = ReportSet::new();
        coarse.push(InequalityReport::evaluate(
            "a",
            "",
            vec![0.0, 0.1],
            vec![1.0 + c * dt * dt, 1.0],
            0.0,
        ));
        let mut fine = ReportSet::new();
        let h = dt / 2.0;
        fine.push(InequalityReport::evaluate(
            "a",
            "",
            vec![0.0, 0.05, 0.1],
            vec![1.0 + c * h * h, 0.0, 1.0],
            0.0,
        ));
        let model = ToleranceModel::from_halving(dt, &coarse, &fine);
        assert!((model.constants["a"] - c).abs() < 1e-9);
        assert!((model.tol("a") - (c * dt * dt + 1e-9)).abs() < 1e-12);
        assert_eq!(model.tol("missing"), 1e-9);
    }
}
