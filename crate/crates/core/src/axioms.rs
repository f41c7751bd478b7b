//! Executable checks of gradual-semantics properties.
//!
//! Each property instance is built constructively so that its structural
//! premise holds: a random acyclic base framework is generated first and the
//! arguments named by the property (`a`, `b`, `d`, `x`, `y`, the images of
//! `f`) are added on top. Neighbors whose strengths the premise constrains
//! are isolated arguments, so their final strength equals their base score.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::qbaf::{Argument, Edge, Qbaf};
use crate::semantics::{solve, Semantics, SolveResult, SolverParams};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PropertyKind {
    Neutrality,
    Monotony,
    Franklin,
    Weakening,
    Strengthening,
    Duality,
}

impl PropertyKind {
    pub const ALL: [PropertyKind; 6] = [
        PropertyKind::Neutrality,
        PropertyKind::Monotony,
        PropertyKind::Franklin,
        PropertyKind::Weakening,
        PropertyKind::Strengthening,
        PropertyKind::Duality,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            PropertyKind::Neutrality => "neutrality",
            PropertyKind::Monotony => "monotony",
            PropertyKind::Franklin => "franklin",
            PropertyKind::Weakening => "weakening",
            PropertyKind::Strengthening => "strengthening",
            PropertyKind::Duality => "duality",
        }
    }
}

impl fmt::Display for PropertyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for PropertyKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        PropertyKind::ALL
            .into_iter()
            .find(|k| k.as_str() == s.to_ascii_lowercase())
            .ok_or_else(|| Error::InvalidParams(format!("unknown property `{s}`")))
    }
}

/// Role assignments of a property instance.
///
/// Mappings are lists of `(preimage, image)` pairs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Bindings {
    /// `b` has the neighbors of `a` plus `d`, where `β(d) = 0`.
    Neutrality { a: String, b: String, d: String },
    /// `Att(a) ⊆ Att(b)` and `Sup(a) ⊇ Sup(b)`.
    Monotony { a: String, b: String },
    /// `Att(a) = Att(b) ∪ {x}` and `Sup(a) = Sup(b) ∪ {y}`.
    Franklin {
        a: String,
        b: String,
        x: String,
        y: String,
    },
    /// `f` maps each supporter of `a` to a distinct attacker of `a`.
    Weakening { a: String, f: Vec<(String, String)> },
    /// `f` maps each attacker of `a` to a distinct supporter of `a`.
    Strengthening { a: String, f: Vec<(String, String)> },
    /// `f: Att(a) → Sup(b)` and `g: Sup(a) → Att(b)` are bijections.
    Duality {
        a: String,
        b: String,
        f: Vec<(String, String)>,
        g: Vec<(String, String)>,
    },
}

impl Bindings {
    pub fn kind(&self) -> PropertyKind {
        match self {
            Bindings::Neutrality { .. } => PropertyKind::Neutrality,
            Bindings::Monotony { .. } => PropertyKind::Monotony,
            Bindings::Franklin { .. } => PropertyKind::Franklin,
            Bindings::Weakening { .. } => PropertyKind::Weakening,
            Bindings::Strengthening { .. } => PropertyKind::Strengthening,
            Bindings::Duality { .. } => PropertyKind::Duality,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PropertyInstance {
    pub qbaf: Qbaf,
    pub bindings: Bindings,
}

impl PropertyInstance {
    pub fn kind(&self) -> PropertyKind {
        self.bindings.kind()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PropertyReport {
    pub kind: PropertyKind,
    pub semantics: Semantics,
    /// `None` when a strength premise failed and no verdict was reached.
    pub holds: Option<bool>,
    pub premise_verified: bool,
    pub lhs: f64,
    pub rhs: f64,
    pub tolerance: f64,
    /// Duality only: `(σ(a) − β(a)) − (σ(b) − β(b))`, the unmirrored form.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub unmirrored_gap: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

/// Random framework over ids `n0, n1, ...` with base scores uniform in
/// `[0, 1]`. Each ordered pair receives an edge with probability
/// `edge_density`, attack or support with equal odds. When `acyclic`, edges
/// only run from higher to lower index.
pub fn generate_random_qbaf(seed: u64, n: usize, edge_density: f64, acyclic: bool) -> Result<Qbaf> {
    if n == 0 {
        return Err(Error::InvalidParams("n must be at least 1".into()));
    }
    if !(0.0..=1.0).contains(&edge_density) {
        return Err(Error::InvalidParams(format!(
            "edge_density must lie in [0, 1], got {edge_density}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let ids = node_ids("n", n);
    let args: Vec<Argument> = ids
        .iter()
        .map(|id| Argument::evidence(id.clone(), "", rng.random::<f64>()))
        .collect();
    let mut attacks = Vec::new();
    let mut supports = Vec::new();
    for from in 0..n {
        for to in 0..n {
            if from == to || (acyclic && from < to) {
                continue;
            }
            if rng.random::<f64>() < edge_density {
                let edge = (ids[from].clone(), ids[to].clone());
                if rng.random::<bool>() {
                    attacks.push(edge);
                } else {
                    supports.push(edge);
                }
            }
        }
    }
    Qbaf::build(args, attacks, supports)
}

/// Random forest: argument `n0` is a claim, every other argument points to
/// at most one parent with a lower index.
pub fn generate_random_tree(seed: u64, n: usize) -> Result<Qbaf> {
    if n == 0 {
        return Err(Error::InvalidParams("n must be at least 1".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let ids = node_ids("n", n);
    let mut args = Vec::with_capacity(n);
    let mut attacks = Vec::new();
    let mut supports = Vec::new();
    for (i, id) in ids.iter().enumerate() {
        let base = rng.random::<f64>();
        if i == 0 {
            args.push(Argument::claim(id.clone(), "", base));
            continue;
        }
        args.push(Argument::evidence(id.clone(), "", base));
        if rng.random::<f64>() < 0.9 {
            let parent = rng.random_range(0..i);
            let edge = (id.clone(), ids[parent].clone());
            if rng.random::<bool>() {
                attacks.push(edge);
            } else {
                supports.push(edge);
            }
        }
    }
    Qbaf::build(args, attacks, supports)
}

fn node_ids(prefix: &str, n: usize) -> Vec<String> {
    let width = (n.max(2) - 1).to_string().len();
    (0..n).map(|i| format!("{prefix}{i:0width$}")).collect()
}

/// Builder that grows a framework on top of a random acyclic base.
struct Scaffold {
    args: Vec<Argument>,
    attacks: Vec<Edge>,
    supports: Vec<Edge>,
    base_ids: Vec<String>,
}

impl Scaffold {
    fn new(rng: &mut ChaCha8Rng, base_n: usize) -> Self {
        let mut s = Self {
            args: Vec::new(),
            attacks: Vec::new(),
            supports: Vec::new(),
            base_ids: Vec::new(),
        };
        if base_n > 0 {
            let base = generate_random_qbaf(rng.random(), base_n, 0.4, true)
                .expect("valid generator parameters");
            s.args.extend(base.arguments().cloned());
            s.attacks.extend(base.attacks().iter().cloned());
            s.supports.extend(base.supports().iter().cloned());
            s.base_ids = base.ids().map(str::to_owned).collect();
        }
        s
    }

    fn add(&mut self, id: &str, base: f64) -> String {
        self.args.push(Argument::evidence(id, "", base));
        id.to_owned()
    }

    fn attack(&mut self, from: &str, to: &str) {
        self.attacks.push((from.to_owned(), to.to_owned()));
    }

    fn support(&mut self, from: &str, to: &str) {
        self.supports.push((from.to_owned(), to.to_owned()));
    }

    fn finish(self) -> Qbaf {
        Qbaf::build(self.args, self.attacks, self.supports).expect("constructed instance is valid")
    }
}

/// Builds a random instance of `kind` whose premise holds by construction.
/// Instances have at most 8 arguments and no cycles.
pub fn construct_instance(kind: PropertyKind, seed: u64) -> PropertyInstance {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x9e37_79b9_7f4a_7c15);
    match kind {
        PropertyKind::Neutrality => {
            let base_n = rng.random_range(0..=5);
            let mut s = Scaffold::new(&mut rng, base_n);
            let beta = rng.random::<f64>();
            let a = s.add("a", beta);
            let b = s.add("b", beta);
            for id in s.base_ids.clone() {
                match rng.random_range(0..3) {
                    0 => {
                        s.attack(&id, &a);
                        s.attack(&id, &b);
                    }
                    1 => {
                        s.support(&id, &a);
                        s.support(&id, &b);
                    }
                    _ => {}
                }
            }
            let d = s.add("d", 0.0);
            if rng.random::<bool>() {
                s.attack(&d, &b);
            } else {
                s.support(&d, &b);
            }
            PropertyInstance {
                qbaf: s.finish(),
                bindings: Bindings::Neutrality { a, b, d },
            }
        }
        PropertyKind::Monotony => {
            let base_n = rng.random_range(1..=6);
            let mut s = Scaffold::new(&mut rng, base_n);
            let beta = rng.random_range(0.01..0.99);
            let a = s.add("a", beta);
            let b = s.add("b", beta);
            for id in s.base_ids.clone() {
                match rng.random_range(0..6) {
                    0 => {
                        s.attack(&id, &a);
                        s.attack(&id, &b);
                    }
                    1 => {
                        s.support(&id, &a);
                        s.support(&id, &b);
                    }
                    2 => s.attack(&id, &b),
                    3 => s.support(&id, &a),
                    4 => {
                        s.attack(&id, &b);
                        s.support(&id, &a);
                    }
                    _ => {}
                }
            }
            PropertyInstance {
                qbaf: s.finish(),
                bindings: Bindings::Monotony { a, b },
            }
        }
        PropertyKind::Franklin => {
            let base_n = rng.random_range(0..=4);
            let mut s = Scaffold::new(&mut rng, base_n);
            let beta = rng.random::<f64>();
            let a = s.add("a", beta);
            let b = s.add("b", beta);
            for id in s.base_ids.clone() {
                match rng.random_range(0..3) {
                    0 => {
                        s.attack(&id, &a);
                        s.attack(&id, &b);
                    }
                    1 => {
                        s.support(&id, &a);
                        s.support(&id, &b);
                    }
                    _ => {}
                }
            }
            let shared = rng.random::<f64>();
            let x = s.add("x", shared);
            let y = s.add("y", shared);
            s.attack(&x, &a);
            s.support(&y, &a);
            PropertyInstance {
                qbaf: s.finish(),
                bindings: Bindings::Franklin { a, b, x, y },
            }
        }
        PropertyKind::Weakening | PropertyKind::Strengthening => {
            let weakening = kind == PropertyKind::Weakening;
            // Pairs (x, f(x)) with σ(x) ≤ σ(f(x)) plus surplus images; either a
            // surplus image or one strict pair carries a gap of at least 0.2.
            let pairs = rng.random_range(0..=2usize);
            let surplus = if pairs == 0 {
                rng.random_range(1..=2usize)
            } else {
                rng.random_range(0..=2usize)
            };
            let used = 1 + 2 * pairs + surplus;
            let base_n = rng.random_range(0..=(8 - used));
            let mut s = Scaffold::new(&mut rng, base_n);
            let beta = if weakening {
                rng.random_range(0.2..=1.0)
            } else {
                rng.random_range(0.0..=0.8)
            };
            let a = s.add("a", beta);
            let strict = if surplus == 0 {
                Some(rng.random_range(0..pairs))
            } else {
                None
            };
            let mut f = Vec::new();
            for i in 0..pairs {
                let low = rng.random_range(0.0..0.8);
                let high = if strict == Some(i) {
                    rng.random_range(low + 0.2..=1.0)
                } else if rng.random::<bool>() {
                    low
                } else {
                    rng.random_range(low..=1.0)
                };
                let pre = s.add(&format!("p{i}"), low);
                let img = s.add(&format!("q{i}"), high);
                if weakening {
                    s.support(&pre, &a);
                    s.attack(&img, &a);
                } else {
                    s.attack(&pre, &a);
                    s.support(&img, &a);
                }
                f.push((pre, img));
            }
            for i in 0..surplus {
                let extra = s.add(&format!("r{i}"), rng.random_range(0.2..=1.0));
                if weakening {
                    s.attack(&extra, &a);
                } else {
                    s.support(&extra, &a);
                }
            }
            let bindings = if weakening {
                Bindings::Weakening { a, f }
            } else {
                Bindings::Strengthening { a, f }
            };
            PropertyInstance {
                qbaf: s.finish(),
                bindings,
            }
        }
        PropertyKind::Duality => {
            let n_att = rng.random_range(0..=2usize);
            let n_sup = rng.random_range(0..=(3 - n_att).min(2));
            let used = 2 + 2 * (n_att + n_sup);
            let base_n = rng.random_range(0..=(8 - used));
            let mut s = Scaffold::new(&mut rng, base_n);
            let eps = rng.random_range(0.0..=0.5);
            let a = s.add("a", 0.5 + eps);
            let b = s.add("b", 0.5 - eps);
            let mut f = Vec::new();
            let mut g = Vec::new();
            for i in 0..n_att {
                let beta = rng.random::<f64>();
                let x = s.add(&format!("x{i}"), beta);
                let fx = s.add(&format!("u{i}"), beta);
                s.attack(&x, &a);
                s.support(&fx, &b);
                f.push((x, fx));
            }
            for i in 0..n_sup {
                let beta = rng.random::<f64>();
                let y = s.add(&format!("y{i}"), beta);
                let gy = s.add(&format!("v{i}"), beta);
                s.support(&y, &a);
                s.attack(&gy, &b);
                g.push((y, gy));
            }
            PropertyInstance {
                qbaf: s.finish(),
                bindings: Bindings::Duality { a, b, f, g },
            }
        }
    }
}

fn require(cond: bool, what: impl FnOnce() -> String) -> Result<()> {
    if cond {
        Ok(())
    } else {
        Err(Error::PremiseViolation(what()))
    }
}

fn neighbor_sets(q: &Qbaf, id: &str) -> (BTreeSet<String>, BTreeSet<String>) {
    (
        q.attackers(id).map(str::to_owned).collect(),
        q.supporters(id).map(str::to_owned).collect(),
    )
}

fn base(q: &Qbaf, id: &str) -> Result<f64> {
    q.base_score(id)
        .ok_or_else(|| Error::UnknownId(id.to_owned()))
}

/// `f` must be an injective function defined on all of `domain` with images
/// in `codomain`; with `bijective`, it must also cover `codomain`.
fn check_mapping(
    f: &[(String, String)],
    domain: &BTreeSet<String>,
    codomain: &BTreeSet<String>,
    bijective: bool,
    name: &str,
) -> Result<()> {
    let pre: BTreeMap<&str, &str> = f.iter().map(|(x, y)| (x.as_str(), y.as_str())).collect();
    require(pre.len() == f.len(), || {
        format!("{name} assigns some argument twice")
    })?;
    let keys: BTreeSet<String> = pre.keys().map(|k| k.to_string()).collect();
    require(&keys == domain, || {
        format!("{name} is not defined exactly on its domain")
    })?;
    let images: BTreeSet<&str> = pre.values().copied().collect();
    require(images.len() == pre.len(), || {
        format!("{name} is not injective")
    })?;
    require(images.iter().all(|y| codomain.contains(*y)), || {
        format!("{name} maps outside its codomain")
    })?;
    if bijective {
        require(images.len() == codomain.len(), || {
            format!("{name} is not surjective")
        })?;
    }
    Ok(())
}

/// Checks the structural part of the premise, before any solving.
pub fn verify_structure(instance: &PropertyInstance) -> Result<()> {
    let q = &instance.qbaf;
    match &instance.bindings {
        Bindings::Neutrality { a, b, d } => {
            let (att_a, sup_a) = neighbor_sets(q, a);
            let (att_b, sup_b) = neighbor_sets(q, b);
            require(base(q, a)? == base(q, b)?, || "β(a) ≠ β(b)".into())?;
            require(base(q, d)? == 0.0, || "β(d) ≠ 0".into())?;
            require(att_a.is_subset(&att_b) && sup_a.is_subset(&sup_b), || {
                "neighbors of a are not neighbors of b".into()
            })?;
            let mut n_a: BTreeSet<String> = att_a.union(&sup_a).cloned().collect();
            require(!n_a.contains(d), || "d is already a neighbor of a".into())?;
            n_a.insert(d.clone());
            let n_b: BTreeSet<String> = att_b.union(&sup_b).cloned().collect();
            require(n_a == n_b, || {
                "neighbors of b are not those of a plus d".into()
            })
        }
        Bindings::Monotony { a, b } => {
            let (att_a, sup_a) = neighbor_sets(q, a);
            let (att_b, sup_b) = neighbor_sets(q, b);
            let beta = base(q, a)?;
            require(beta == base(q, b)? && beta > 0.0 && beta < 1.0, || {
                "need 0 < β(a) = β(b) < 1".into()
            })?;
            require(att_a.is_subset(&att_b), || "Att(a) ⊄ Att(b)".into())?;
            require(sup_b.is_subset(&sup_a), || "Sup(a) ⊉ Sup(b)".into())
        }
        Bindings::Franklin { a, b, x, y } => {
            let (att_a, sup_a) = neighbor_sets(q, a);
            let (mut att_b, mut sup_b) = neighbor_sets(q, b);
            require(base(q, a)? == base(q, b)?, || "β(a) ≠ β(b)".into())?;
            require(!att_b.contains(x) && !sup_b.contains(y), || {
                "x or y already neighbors b".into()
            })?;
            att_b.insert(x.clone());
            sup_b.insert(y.clone());
            require(att_a == att_b, || "Att(a) ≠ Att(b) ∪ {x}".into())?;
            require(sup_a == sup_b, || "Sup(a) ≠ Sup(b) ∪ {y}".into())
        }
        Bindings::Weakening { a, f } => {
            let (att, sup) = neighbor_sets(q, a);
            require(base(q, a)? > 0.0, || "β(a) must be positive".into())?;
            check_mapping(f, &sup, &att, false, "f")
        }
        Bindings::Strengthening { a, f } => {
            let (att, sup) = neighbor_sets(q, a);
            require(base(q, a)? < 1.0, || "β(a) must be below 1".into())?;
            check_mapping(f, &att, &sup, false, "f")
        }
        Bindings::Duality { a, b, f, g } => {
            let (att_a, sup_a) = neighbor_sets(q, a);
            let (att_b, sup_b) = neighbor_sets(q, b);
            let (ba, bb) = (base(q, a)?, base(q, b)?);
            require(ba >= bb && (ba + bb - 1.0).abs() <= 1e-12, || {
                "need β(a) = 0.5 + ε and β(b) = 0.5 − ε".into()
            })?;
            check_mapping(f, &att_a, &sup_b, true, "f")?;
            check_mapping(g, &sup_a, &att_b, true, "g")
        }
    }
}

/// Solves the instance and evaluates the property's conclusion.
///
/// Equalities hold when `|lhs − rhs| ≤ tolerance`; strict inequalities
/// require a margin larger than `tolerance`.
pub fn check_property(
    instance: &PropertyInstance,
    semantics: Semantics,
    params: &SolverParams,
    tolerance: f64,
) -> Result<PropertyReport> {
    verify_structure(instance)?;
    let q = &instance.qbaf;
    let result = solve(q, semantics, params)?;
    if !result.converged {
        return Err(Error::NonConvergence {
            steps: result.steps,
        });
    }
    let s = |id: &str| -> f64 { result.strength(id).expect("solved every argument") };
    let report = |holds: Option<bool>, lhs: f64, rhs: f64| PropertyReport {
        kind: instance.kind(),
        semantics,
        holds,
        premise_verified: holds.is_some(),
        lhs,
        rhs,
        tolerance,
        unmirrored_gap: None,
        seed: None,
    };

    Ok(match &instance.bindings {
        Bindings::Neutrality { a, b, d } => {
            if s(d).abs() > tolerance {
                return Ok(report(None, s(a), s(b)));
            }
            report(Some((s(a) - s(b)).abs() <= tolerance), s(a), s(b))
        }
        Bindings::Monotony { a, b } => report(Some(s(a) >= s(b) - tolerance), s(a), s(b)),
        Bindings::Franklin { a, b, x, y } => {
            if (s(x) - s(y)).abs() > tolerance {
                return Ok(report(None, s(a), s(b)));
            }
            report(Some((s(a) - s(b)).abs() <= tolerance), s(a), s(b))
        }
        Bindings::Weakening { a, f } | Bindings::Strengthening { a, f } => {
            let weakening = matches!(instance.bindings, Bindings::Weakening { .. });
            let beta = base(q, a)?;
            if !dominance_premise(q, &result, a, f, weakening, tolerance) {
                return Ok(report(None, s(a), beta));
            }
            let holds = if weakening {
                s(a) < beta - tolerance
            } else {
                s(a) > beta + tolerance
            };
            report(Some(holds), s(a), beta)
        }
        Bindings::Duality { a, b, f, g } => {
            let matched = f
                .iter()
                .chain(g)
                .all(|(x, y)| (s(x) - s(y)).abs() <= tolerance);
            let shift_a = s(a) - base(q, a)?;
            let shift_b = s(b) - base(q, b)?;
            if !matched {
                return Ok(report(None, shift_a, -shift_b));
            }
            let mut r = report(
                Some((shift_a + shift_b).abs() <= tolerance),
                shift_a,
                -shift_b,
            );
            r.unmirrored_gap = Some(shift_a - shift_b);
            r
        }
    })
}

/// Strength part of the weakening/strengthening premise: `σ(x) ≤ σ(f(x))`
/// everywhere, and either a surplus neighbor with positive strength on the
/// dominating side or a strict pair.
fn dominance_premise(
    q: &Qbaf,
    result: &SolveResult,
    a: &str,
    f: &[(String, String)],
    weakening: bool,
    tolerance: f64,
) -> bool {
    let s = |id: &str| result.strength(id).unwrap_or(f64::NAN);
    if !f.iter().all(|(x, fx)| s(x) <= s(fx) + tolerance) {
        return false;
    }
    let images: BTreeSet<&str> = f.iter().map(|(_, y)| y.as_str()).collect();
    let dominating: Vec<&str> = if weakening {
        q.attackers(a).collect()
    } else {
        q.supporters(a).collect()
    };
    let surplus = dominating
        .iter()
        .any(|id| !images.contains(id) && s(id) > tolerance);
    let strict = f.iter().any(|(x, fx)| s(x) < s(fx) - tolerance);
    surplus || strict
}

/// Runs `count` constructed instances of `kind`, seeds `seed..seed + count`.
/// Non-converged solves are skipped and counted in the returned tally.
pub fn run_suite(
    kind: PropertyKind,
    count: usize,
    seed: u64,
    semantics: Semantics,
    params: &SolverParams,
    tolerance: f64,
) -> Result<(Vec<PropertyReport>, usize)> {
    let mut reports = Vec::with_capacity(count);
    let mut inconclusive = 0;
    for i in 0..count as u64 {
        let instance = construct_instance(kind, seed.wrapping_add(i));
        match check_property(&instance, semantics, params, tolerance) {
            Ok(mut r) => {
                r.seed = Some(seed.wrapping_add(i));
                reports.push(r);
            }
            Err(Error::NonConvergence { .. }) => inconclusive += 1,
            Err(e) => return Err(e),
        }
    }
    Ok((reports, inconclusive))
}

#[cfg(test)]
mod tests {
    use super::*;

    const TOL: f64 = 1e-4;

    fn p() -> SolverParams {
        SolverParams::default()
    }

    #[test]
    fn generator_is_deterministic_and_respects_density() {
        let a = generate_random_qbaf(7, 6, 0.5, false).unwrap();
        let b = generate_random_qbaf(7, 6, 0.5, false).unwrap();
        assert_eq!(a, b);
        let empty = generate_random_qbaf(7, 6, 0.0, false).unwrap();
        assert_eq!(empty.edge_count(), 0);
        for seed in 0..50 {
            assert!(generate_random_qbaf(seed, 5, 0.8, true)
                .unwrap()
                .is_acyclic());
        }
        assert!(matches!(
            generate_random_qbaf(1, 0, 0.5, true),
            Err(Error::InvalidParams(_))
        ));
        assert!(matches!(
            generate_random_qbaf(1, 3, 1.5, true),
            Err(Error::InvalidParams(_))
        ));
    }

    #[test]
    fn neutrality_example() {
        let q = Qbaf::build(
            vec![
                Argument::evidence("a", "", 0.6),
                Argument::evidence("b", "", 0.6),
                Argument::evidence("s", "", 0.7),
                Argument::evidence("d", "", 0.0),
            ],
            vec![("d".into(), "b".into())],
            vec![("s".into(), "a".into()), ("s".into(), "b".into())],
        )
        .unwrap();
        let inst = PropertyInstance {
            qbaf: q,
            bindings: Bindings::Neutrality {
                a: "a".into(),
                b: "b".into(),
                d: "d".into(),
            },
        };
        let r = check_property(&inst, Semantics::Qe, &p(), TOL).unwrap();
        assert_eq!(r.holds, Some(true));
        assert!((r.lhs - r.rhs).abs() <= TOL);
    }

    #[test]
    fn franklin_example() {
        let q = Qbaf::build(
            vec![
                Argument::evidence("a", "", 0.4),
                Argument::evidence("b", "", 0.4),
                Argument::evidence("x", "", 0.7),
                Argument::evidence("y", "", 0.7),
            ],
            vec![("x".into(), "a".into())],
            vec![("y".into(), "a".into())],
        )
        .unwrap();
        let inst = PropertyInstance {
            qbaf: q,
            bindings: Bindings::Franklin {
                a: "a".into(),
                b: "b".into(),
                x: "x".into(),
                y: "y".into(),
            },
        };
        let r = check_property(&inst, Semantics::Qe, &p(), TOL).unwrap();
        assert_eq!(r.holds, Some(true));
    }

    #[test]
    fn weakening_example() {
        let q = Qbaf::build(
            vec![
                Argument::evidence("a", "", 0.8),
                Argument::evidence("t1", "", 0.6),
                Argument::evidence("t2", "", 0.4),
                Argument::evidence("s", "", 0.3),
            ],
            vec![("t1".into(), "a".into()), ("t2".into(), "a".into())],
            vec![("s".into(), "a".into())],
        )
        .unwrap();
        let inst = PropertyInstance {
            qbaf: q,
            bindings: Bindings::Weakening {
                a: "a".into(),
                f: vec![("s".into(), "t2".into())],
            },
        };
        let r = check_property(&inst, Semantics::Qe, &p(), TOL).unwrap();
        assert_eq!(r.holds, Some(true));
        assert!(r.lhs < 0.8);
    }

    #[test]
    fn broken_premise_is_rejected() {
        let q = Qbaf::build(
            vec![
                Argument::evidence("a", "", 0.4),
                Argument::evidence("b", "", 0.5),
            ],
            vec![],
            vec![],
        )
        .unwrap();
        let inst = PropertyInstance {
            qbaf: q,
            bindings: Bindings::Monotony {
                a: "a".into(),
                b: "b".into(),
            },
        };
        assert!(matches!(
            check_property(&inst, Semantics::Qe, &p(), TOL),
            Err(Error::PremiseViolation(_))
        ));
    }

    #[test]
    fn constructed_instances_pass_their_premise() {
        for kind in PropertyKind::ALL {
            for seed in 0..200 {
                let inst = construct_instance(kind, seed);
                assert!(
                    inst.qbaf.len() <= 8,
                    "{kind} seed {seed}: {}",
                    inst.qbaf.len()
                );
                assert!(inst.qbaf.is_acyclic());
                verify_structure(&inst).unwrap_or_else(|e| panic!("{kind} seed {seed}: {e}"));
            }
        }
    }

    #[test]
    fn duality_is_mirrored_under_qe() {
        let (reports, inconclusive) =
            run_suite(PropertyKind::Duality, 100, 3, Semantics::Qe, &p(), TOL).unwrap();
        assert_eq!(inconclusive, 0);
        assert!(reports.iter().all(|r| r.holds == Some(true)));
    }
}
