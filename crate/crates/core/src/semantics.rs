//! Gradual semantics and the strength solver.
//!
//! Final strengths are the equilibrium of the continuous system
//! `dσ(a)/dt = target(a, σ) − σ(a)`, started at the base scores and integrated
//! with classical fourth-order Runge–Kutta. The semantics only decides the
//! `target` function:
//!
//! * quadratic energy: `β + (1 − β)·h(E) − β·h(−E)` with
//!   `h(x) = max(x, 0)² / (1 + max(x, 0)²)`;
//! * Df-QuAD: product aggregation of each side, then a linear combination
//!   towards 0 or 1;
//! * Euler-based: `1 − (1 − β²) / (1 + β·e^E)`.
//!
//! `E` is the energy of an argument: the summed strength of its supporters
//! minus the summed strength of its attackers.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{check_unit, Error, Result};
use crate::qbaf::Qbaf;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Semantics {
    #[default]
    Qe,
    Dfquad,
    Euler,
}

impl Semantics {
    pub const ALL: [Semantics; 3] = [Semantics::Qe, Semantics::Dfquad, Semantics::Euler];

    pub fn as_str(self) -> &'static str {
        match self {
            Semantics::Qe => "qe",
            Semantics::Dfquad => "dfquad",
            Semantics::Euler => "euler",
        }
    }
}

impl fmt::Display for Semantics {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Semantics {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "qe" => Ok(Semantics::Qe),
            "dfquad" | "df-quad" => Ok(Semantics::Dfquad),
            "euler" => Ok(Semantics::Euler),
            other => Err(Error::InvalidParams(format!("unknown semantics `{other}`"))),
        }
    }
}

/// Integration settings: RK4 step, derivative threshold for convergence and
/// time horizon.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverParams {
    pub step: f64,
    pub epsilon: f64,
    pub max_time: f64,
}

impl Default for SolverParams {
    fn default() -> Self {
        Self {
            step: 0.1,
            epsilon: 0.001,
            max_time: 100.0,
        }
    }
}

impl SolverParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.step > 0.0 && self.step.is_finite()) {
            return Err(Error::InvalidParams(format!(
                "step must be positive, got {}",
                self.step
            )));
        }
        if !(self.epsilon > 0.0 && self.epsilon.is_finite()) {
            return Err(Error::InvalidParams(format!(
                "epsilon must be positive, got {}",
                self.epsilon
            )));
        }
        if !(self.max_time >= self.step && self.max_time.is_finite()) {
            return Err(Error::InvalidParams(format!(
                "max_time must be at least the step size, got {}",
                self.max_time
            )));
        }
        Ok(())
    }
}

/// Strength samples over time, one row per integration step plus the
/// initial row at `t = 0`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub ids: Vec<String>,
    pub times: Vec<f64>,
    pub samples: Vec<Vec<f64>>,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Time series of a single argument.
    pub fn series(&self, id: &str) -> Option<Vec<f64>> {
        let col = self.ids.iter().position(|x| x == id)?;
        Some(self.samples.iter().map(|row| row[col]).collect())
    }

    /// CSV with header `t,<id1>,<id2>,...`; ids are in ascending order.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("t");
        for id in &self.ids {
            out.push(',');
            out.push_str(id);
        }
        out.push('\n');
        for (t, row) in self.times.iter().zip(&self.samples) {
            out.push_str(&t.to_string());
            for v in row {
                out.push(',');
                out.push_str(&v.to_string());
            }
            out.push('\n');
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveResult {
    pub strengths: BTreeMap<String, f64>,
    pub converged: bool,
    /// Number of RK4 steps taken; the trajectory holds `steps + 1` rows.
    pub steps: usize,
    #[serde(skip)]
    pub trajectory: Trajectory,
    /// Largest correction applied when clamping strengths back into [0, 1].
    #[serde(skip)]
    pub max_clamp: f64,
}

impl SolveResult {
    pub fn strength(&self, id: &str) -> Option<f64> {
        self.strengths.get(id).copied()
    }

    /// `{"strengths":{..},"converged":..,"steps":..}`
    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("solve result serialization is infallible")
    }
}

fn h(x: f64) -> f64 {
    let p = x.max(0.0);
    let sq = p * p;
    sq / (1.0 + sq)
}

fn qe(base: f64, energy: f64) -> f64 {
    base + (1.0 - base) * h(energy) - base * h(-energy)
}

fn euler(base: f64, energy: f64) -> f64 {
    if energy == 0.0 {
        // the closed form equals the base score here, but not bit for bit
        return base;
    }
    1.0 - (1.0 - base * base) / (1.0 + base * energy.exp())
}

/// Sum in ascending order of value, so the result does not depend on how
/// arguments happen to be named.
fn ordered_sum(mut xs: Vec<f64>) -> f64 {
    xs.sort_by(f64::total_cmp);
    xs.into_iter().sum()
}

/// `1 − Π(1 − x)`, multiplied in ascending order of value.
fn ordered_aggregate(xs: Vec<f64>) -> f64 {
    let mut keep: Vec<f64> = xs.into_iter().map(|x| 1.0 - x).collect();
    keep.sort_by(f64::total_cmp);
    1.0 - keep.into_iter().product::<f64>()
}

fn dfquad(base: f64, attack: f64, support: f64) -> f64 {
    if attack >= support {
        base - base * (attack - support)
    } else {
        base + (1.0 - base) * (support - attack)
    }
}

/// Signed aggregate `Σ σ(supporters) − Σ σ(attackers)` of argument `id`.
pub fn energy(qbaf: &Qbaf, strengths: &BTreeMap<String, f64>, id: &str) -> Result<f64> {
    if !qbaf.contains(id) {
        return Err(Error::UnknownId(id.to_owned()));
    }
    let lookup = |n: &str| {
        strengths
            .get(n)
            .copied()
            .ok_or_else(|| Error::UnknownId(n.to_owned()))
    };
    let sup = qbaf
        .supporters(id)
        .map(lookup)
        .collect::<Result<Vec<_>>>()?;
    let att = qbaf.attackers(id).map(lookup).collect::<Result<Vec<_>>>()?;
    Ok(ordered_sum(sup) - ordered_sum(att))
}

pub fn qe_target(base: f64, energy: f64) -> Result<f64> {
    check_unit("base score", base)?;
    Ok(qe(base, energy))
}

pub fn euler_target(base: f64, energy: f64) -> Result<f64> {
    check_unit("base score", base)?;
    Ok(euler(base, energy))
}

/// Df-QuAD aggregation `1 − Π(1 − x)` over each side, then combination with
/// the base score.
pub fn dfquad_target(base: f64, attackers: &[f64], supporters: &[f64]) -> Result<f64> {
    check_unit("base score", base)?;
    for &s in attackers.iter().chain(supporters) {
        check_unit("neighbor strength", s)?;
    }
    Ok(dfquad(
        base,
        ordered_aggregate(attackers.to_vec()),
        ordered_aggregate(supporters.to_vec()),
    ))
}

/// Index-based view of a QBAF for fast derivative evaluation.
struct System {
    semantics: Semantics,
    ids: Vec<String>,
    base: Vec<f64>,
    attackers: Vec<Vec<usize>>,
    supporters: Vec<Vec<usize>>,
}

impl System {
    fn new(qbaf: &Qbaf, semantics: Semantics) -> Self {
        let ids: Vec<String> = qbaf.ids().map(str::to_owned).collect();
        let index: BTreeMap<&str, usize> = ids
            .iter()
            .enumerate()
            .map(|(i, id)| (id.as_str(), i))
            .collect();
        let neighbors =
            |it: &mut dyn Iterator<Item = &str>| -> Vec<usize> { it.map(|n| index[n]).collect() };
        let attackers = ids
            .iter()
            .map(|id| neighbors(&mut qbaf.attackers(id)))
            .collect();
        let supporters = ids
            .iter()
            .map(|id| neighbors(&mut qbaf.supporters(id)))
            .collect();
        let base = qbaf.arguments().map(|a| a.base_score).collect();
        Self {
            semantics,
            ids,
            base,
            attackers,
            supporters,
        }
    }

    fn target(&self, i: usize, state: &[f64]) -> f64 {
        let base = self.base[i];
        let values = |side: &[usize]| side.iter().map(|&j| state[j]).collect::<Vec<f64>>();
        let (att, sup) = (values(&self.attackers[i]), values(&self.supporters[i]));
        match self.semantics {
            Semantics::Qe => qe(base, ordered_sum(sup) - ordered_sum(att)),
            Semantics::Euler => euler(base, ordered_sum(sup) - ordered_sum(att)),
            Semantics::Dfquad => dfquad(base, ordered_aggregate(att), ordered_aggregate(sup)),
        }
    }

    fn derivative(&self, state: &[f64], out: &mut [f64]) {
        for (i, d) in out.iter_mut().enumerate() {
            *d = self.target(i, state) - state[i];
        }
    }
}

/// Integrates the strength dynamics from the base scores.
///
/// Stops with `converged = true` as soon as every `|dσ/dt|` is below
/// `params.epsilon`; otherwise stops at `t = params.max_time` with
/// `converged = false` and the last strengths.
pub fn solve(qbaf: &Qbaf, semantics: Semantics, params: &SolverParams) -> Result<SolveResult> {
    params.validate()?;
    let sys = System::new(qbaf, semantics);
    let n = sys.ids.len();
    let dt = params.step;

    let mut state = sys.base.clone();
    let mut times = vec![0.0];
    let mut samples = vec![state.clone()];
    let mut k1 = vec![0.0; n];
    let mut k2 = vec![0.0; n];
    let mut k3 = vec![0.0; n];
    let mut k4 = vec![0.0; n];
    let mut probe = vec![0.0; n];
    let mut steps = 0usize;
    let mut max_clamp = 0.0f64;
    let converged;

    loop {
        sys.derivative(&state, &mut k1);
        if k1.iter().all(|d| d.abs() < params.epsilon) {
            converged = true;
            break;
        }
        if steps as f64 * dt >= params.max_time - dt * 1e-9 {
            converged = false;
            break;
        }

        for i in 0..n {
            probe[i] = state[i] + 0.5 * dt * k1[i];
        }
        sys.derivative(&probe, &mut k2);
        for i in 0..n {
            probe[i] = state[i] + 0.5 * dt * k2[i];
        }
        sys.derivative(&probe, &mut k3);
        for i in 0..n {
            probe[i] = state[i] + dt * k3[i];
        }
        sys.derivative(&probe, &mut k4);
        for i in 0..n {
            let next = state[i] + dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
            let clamped = next.clamp(0.0, 1.0);
            max_clamp = max_clamp.max((next - clamped).abs());
            state[i] = clamped;
        }

        steps += 1;
        times.push(steps as f64 * dt);
        samples.push(state.clone());
    }

    let strengths = sys.ids.iter().cloned().zip(state.iter().copied()).collect();
    Ok(SolveResult {
        strengths,
        converged,
        steps,
        trajectory: Trajectory {
            ids: sys.ids,
            times,
            samples,
        },
        max_clamp,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qbaf::{Argument, Edge};

    fn edge(from: &str, to: &str) -> Edge {
        (from.to_owned(), to.to_owned())
    }

    fn strengths(pairs: &[(&str, f64)]) -> BTreeMap<String, f64> {
        pairs.iter().map(|(k, v)| (k.to_string(), *v)).collect()
    }

    #[test]
    fn energy_examples() {
        let q = Qbaf::build(
            vec![
                Argument::claim("a", "", 0.5),
                Argument::evidence("s1", "", 0.5),
                Argument::evidence("s2", "", 0.5),
                Argument::evidence("x", "", 0.5),
            ],
            vec![edge("x", "a")],
            vec![edge("s1", "a"), edge("s2", "a")],
        )
        .unwrap();
        let s = strengths(&[("a", 0.5), ("s1", 0.5), ("s2", 0.1), ("x", 0.9)]);
        assert!((energy(&q, &s, "a").unwrap() - -0.3).abs() < 1e-12);
        assert_eq!(energy(&q, &s, "x").unwrap(), 0.0);
        assert!(matches!(energy(&q, &s, "nope"), Err(Error::UnknownId(_))));

        let sym = Qbaf::build(
            vec![
                Argument::evidence("a", "", 0.5),
                Argument::evidence("p", "", 0.5),
                Argument::evidence("q", "", 0.5),
            ],
            vec![edge("q", "a")],
            vec![edge("p", "a")],
        )
        .unwrap();
        let s = strengths(&[("a", 0.2), ("p", 0.7), ("q", 0.7)]);
        assert_eq!(energy(&sym, &s, "a").unwrap(), 0.0);
    }

    #[test]
    fn qe_target_examples() {
        for b in [0.0, 0.3, 1.0] {
            assert_eq!(qe_target(b, 0.0).unwrap(), b);
        }
        // h(0.3) = 0.09 / 1.09
        let expected = 0.5 - 0.5 * (0.09 / 1.09);
        assert!((qe_target(0.5, -0.3).unwrap() - expected).abs() < 1e-15);
        assert!((qe_target(0.5, -0.3).unwrap() - 0.458_715_596).abs() < 1e-9);
        assert_eq!(qe_target(0.0, 1.0).unwrap(), 0.5);
        assert!(matches!(
            qe_target(1.5, 0.0),
            Err(Error::RangeViolation { .. })
        ));
    }

    #[test]
    fn dfquad_target_examples() {
        assert_eq!(dfquad_target(0.4, &[], &[]).unwrap(), 0.4);
        assert_eq!(dfquad_target(0.5, &[0.5], &[]).unwrap(), 0.25);
        assert_eq!(dfquad_target(0.3, &[0.6], &[0.6]).unwrap(), 0.3);
        assert!(matches!(
            dfquad_target(0.3, &[1.6], &[]),
            Err(Error::RangeViolation { .. })
        ));
    }

    #[test]
    fn euler_target_examples() {
        for b in [0.0, 0.25, 0.5, 1.0] {
            assert!((euler_target(b, 0.0).unwrap() - b).abs() < 1e-15);
        }
        for e in [-3.0, 0.0, 2.5] {
            assert_eq!(euler_target(1.0, e).unwrap(), 1.0);
        }
        // 1 - 0.75 / (1 + 0.5 e), evaluated independently
        assert!((euler_target(0.5, 1.0).unwrap() - 0.682_087_663_574).abs() < 1e-12);
        assert!(matches!(
            euler_target(-0.1, 0.0),
            Err(Error::RangeViolation { .. })
        ));
    }

    #[test]
    fn edgeless_graph_is_fixed_immediately() {
        let q = Qbaf::build(
            vec![
                Argument::claim("c", "", 0.37),
                Argument::evidence("e", "", 0.81),
            ],
            vec![],
            vec![],
        )
        .unwrap();
        for sem in Semantics::ALL {
            let r = solve(&q, sem, &SolverParams::default()).unwrap();
            assert!(r.converged);
            assert_eq!(r.steps, 0);
            assert_eq!(r.strength("c"), Some(0.37));
            assert_eq!(r.strength("e"), Some(0.81));
            assert_eq!(r.trajectory.len(), 1);
        }
    }

    #[test]
    fn mutual_attack_symmetric_fixed_point() {
        let q = Qbaf::build(
            vec![
                Argument::evidence("a", "", 0.5),
                Argument::evidence("b", "", 0.5),
            ],
            vec![edge("a", "b"), edge("b", "a")],
            vec![],
        )
        .unwrap();
        let tight = SolverParams {
            epsilon: 1e-9,
            ..SolverParams::default()
        };
        let r = solve(&q, Semantics::Qe, &tight).unwrap();
        assert!(r.converged);
        let (a, b) = (r.strength("a").unwrap(), r.strength("b").unwrap());
        assert_eq!(a, b);
        // Frozen from a bisection on s = 0.5 - 0.5 s^2 / (1 + s^2).
        assert!((a - 0.423_853_799_069_783).abs() < 1e-8, "{a}");

        let r = solve(&q, Semantics::Qe, &SolverParams::default()).unwrap();
        assert!((r.strength("a").unwrap() - 0.423_853_799).abs() < 1e-3);
    }

    #[test]
    fn rejects_invalid_params() {
        let q = Qbaf::empty();
        for p in [
            SolverParams {
                step: 0.0,
                ..Default::default()
            },
            SolverParams {
                epsilon: -1.0,
                ..Default::default()
            },
            SolverParams {
                max_time: 0.01,
                ..Default::default()
            },
        ] {
            assert!(matches!(
                solve(&q, Semantics::Qe, &p),
                Err(Error::InvalidParams(_))
            ));
        }
    }

    #[test]
    fn non_convergence_is_reported() {
        let q = Qbaf::build(
            vec![
                Argument::evidence("a", "", 0.9),
                Argument::evidence("b", "", 0.1),
            ],
            vec![edge("a", "b")],
            vec![],
        )
        .unwrap();
        let p = SolverParams {
            step: 0.1,
            epsilon: 1e-12,
            max_time: 1.0,
        };
        let r = solve(&q, Semantics::Qe, &p).unwrap();
        assert!(!r.converged);
        assert_eq!(r.steps, 10);
        assert_eq!(r.trajectory.len(), 11);
    }

    #[test]
    fn csv_export_layout() {
        let q = Qbaf::build(
            vec![
                Argument::evidence("b", "", 0.5),
                Argument::evidence("a", "", 0.5),
            ],
            vec![edge("a", "b")],
            vec![],
        )
        .unwrap();
        let r = solve(&q, Semantics::Qe, &SolverParams::default()).unwrap();
        let csv = r.trajectory.to_csv();
        let mut lines = csv.lines();
        assert_eq!(lines.next(), Some("t,a,b"));
        assert_eq!(lines.next(), Some("0,0.5,0.5"));
        assert_eq!(csv.lines().count(), r.steps + 2);
        assert_eq!(
            r.to_json(),
            format!(
                r#"{{"strengths":{{"a":0.5,"b":{}}},"converged":true,"steps":{}}}"#,
                r.strength("b").unwrap(),
                r.steps
            )
        );
    }
}
