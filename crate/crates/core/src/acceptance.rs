//! The nine acceptance criteria, evaluated on the grids of a [`Manifest`].
//!
//! Each criterion yields one [`CriterionOutcome`]. A criterion passes when
//! every case passes or is a predicted negative that was rejected. Cases
//! listed as unattainable in the manifest keep failing and are reported as
//! such; [`CriterionOutcome::only_unattainable`] tells whether those are the
//! only failures.

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::construct::{gram_schmidt_monic, GsOptions};
use crate::error::{Error, Result};
use crate::families::{self, chebyshev::expected_orthogonal, koornwinder::krall_tensor_functionals};
use crate::linrel::{classify_ranks, compute_relation, counterexample, RankClass};
use crate::manifest::Manifest;
use crate::matrixkit::{max_abs, relative};
use crate::moments::cubature::{disk_cubature, laguerre_cubature, moment_discrepancy, simplex_cubature};
use crate::moments::{disk, multi_laguerre, simplex, ChebyshevKind, FamilySpec, MomentFunctional};
use crate::report::{theorem_records, CheckRecord, Tolerances};
use crate::ttr::{compute_ttr, generate_from_ttr};

/// One case of a criterion.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CaseResult {
    pub case: String,
    pub pass: bool,
    pub detail: String,
    /// Manifest reason when the failure is recorded as unattainable.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub unattainable: Option<String>,
}

impl CaseResult {
    fn new(case: impl Into<String>, pass: bool, detail: impl Into<String>) -> Self {
        CaseResult {
            case: case.into(),
            pass,
            detail: detail.into(),
            unattainable: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CriterionOutcome {
    pub number: u8,
    pub title: String,
    pub cases: Vec<CaseResult>,
    pub summary: String,
    pub elapsed_ms: u128,
}

impl CriterionOutcome {
    pub fn pass(&self) -> bool {
        self.cases.iter().all(|c| c.pass)
    }

    /// Failing cases, if any, are all recorded as unattainable.
    pub fn only_unattainable(&self) -> bool {
        self.cases.iter().all(|c| c.pass || c.unattainable.is_some())
    }

    pub fn line(&self) -> String {
        let failed: Vec<&CaseResult> = self.cases.iter().filter(|c| !c.pass).collect();
        let mut s = format!(
            "[{}] {}. {}: {} ({} ms)",
            if self.pass() { "PASS" } else { "FAIL" },
            self.number,
            self.title,
            self.summary,
            self.elapsed_ms
        );
        for c in failed {
            s += &format!("\n       {}: {}", c.case, c.detail);
            if let Some(r) = &c.unattainable {
                s += &format!(" [unattainable: {r}]");
            }
        }
        s
    }
}

fn outcome(number: u8, title: &str, start: Instant, cases: Vec<CaseResult>, summary: String) -> CriterionOutcome {
    CriterionOutcome {
        number,
        title: title.into(),
        cases,
        summary,
        elapsed_ms: start.elapsed().as_millis(),
    }
}

fn count(cases: &[CaseResult]) -> String {
    format!("{}/{} cases", cases.iter().filter(|c| c.pass).count(), cases.len())
}

fn mark_unattainable(m: &Manifest, check: &str, cases: &mut [CaseResult]) {
    for c in cases.iter_mut().filter(|c| !c.pass) {
        if let Some(e) = m.unattainable(&c.case, Some(check)) {
            c.unattainable = Some(e.reason.clone());
        }
    }
}

fn run_family(case: &str, n: usize, tol: Tolerances) -> Result<families::FamilyRun> {
    families::run(&case.parse::<FamilySpec>()?, n, tol)
}

fn find<'a>(records: &'a [CheckRecord], name: &str) -> Vec<&'a CheckRecord> {
    records.iter().filter(|r| r.name == name).collect()
}

fn error_case(case: &str, e: Error) -> CaseResult {
    CaseResult::new(case, false, format!("error: {e}"))
}

/// 1. No "mixed" rank pattern for pairs with both systems orthogonal.
pub fn rank_dichotomy(m: &Manifest) -> CriterionOutcome {
    let start = Instant::now();
    let g = &m.rank_dichotomy;
    let tol = m.tolerances();
    let cases: Vec<CaseResult> = g
        .families
        .iter()
        .map(|case| match run_family(case, g.max_degree, tol) {
            Ok(run) => match find(&run.records, "rank dichotomy").first() {
                Some(r) => CaseResult::new(case, r.pass, r.note.clone().unwrap_or_default()),
                None => CaseResult::new(case, false, "no rank dichotomy record"),
            },
            Err(e) => error_case(case, e),
        })
        .collect();
    let mixed = cases.iter().filter(|c| !c.pass).count();
    let summary = format!("{mixed} mixed in {} pairs, n ≤ {}", cases.len(), g.max_degree);
    outcome(1, "rank dichotomy", start, cases, summary)
}

/// 2. `M_n H_{n-1} = H̃_n Σ a_i L_{n-1,i}ᵗ`.
pub fn mh_identity(m: &Manifest) -> CriterionOutcome {
    let start = Instant::now();
    let g = &m.mh_identity;
    let tol = m.tolerances();
    let mut worst: f64 = 0.0;
    let cases: Vec<CaseResult> = g
        .families
        .iter()
        .map(|case| match run_family(case, g.max_degree, tol) {
            Ok(run) => match find(&run.records, "M-H identity").first() {
                Some(r) => {
                    let v = r.residual.unwrap_or(f64::INFINITY);
                    worst = worst.max(v);
                    CaseResult::new(case, r.pass, format!("residual {v:.2e}"))
                }
                None => CaseResult::new(case, false, "λ recovery failed"),
            },
            Err(e) => error_case(case, e),
        })
        .collect();
    let summary = format!("{}, max residual {worst:.2e} (tol {:.0e})", count(&cases), tol.res);
    outcome(2, "M-H identity", start, cases, summary)
}

/// The Fourier tail of `Q` (MOPS of `v`) in `P` (MOPS of `λ v`).
pub fn functional_relation_tail(v: &MomentFunctional, lambda: &crate::moments::LinearPoly, n: usize) -> Result<f64> {
    let u = v.left_multiply(&lambda.to_poly());
    let (p, h) = gram_schmidt_monic(&u, n, GsOptions::default())?;
    let (q, _) = gram_schmidt_monic(v, n, GsOptions::default())?;
    Ok(compute_relation(&q, &p, &u, &h)?.max_tail())
}

/// 3. `u = λ v` gives a relation; the disk pair gives back `λ ∝ 1 - x`.
pub fn functional_relation(m: &Manifest) -> CriterionOutcome {
    let start = Instant::now();
    let g = &m.functional_relation;
    let tol = m.tolerances();
    let mut cases = Vec::new();
    let mut worst_tail: f64 = 0.0;
    for pair in &g.pairs {
        let case = format!("(a) {} with λ = {:?}", pair.v, pair.lambda);
        let r = (|| {
            let v = pair.v.parse::<FamilySpec>()?.functional()?;
            functional_relation_tail(&v, &pair.lambda()?, g.max_degree)
        })();
        cases.push(match r {
            Ok(t) => {
                worst_tail = worst_tail.max(t);
                CaseResult::new(case, t <= tol.res, format!("tail {t:.2e}"))
            }
            Err(e) => error_case(&case, e),
        });
    }
    let mut worst_dir: f64 = 0.0;
    for fam in &g.lambda_families {
        let case = format!("(b) {fam}");
        cases.push(match run_family(fam, g.max_degree, tol) {
            Ok(run) => match find(&run.records, "λ direction").first() {
                Some(r) => {
                    let v = r.residual.unwrap_or(f64::INFINITY);
                    worst_dir = worst_dir.max(v);
                    CaseResult::new(
                        case,
                        r.pass,
                        format!("direction error {v:.2e}, {}", r.note.clone().unwrap_or_default()),
                    )
                }
                None => CaseResult::new(case, false, "λ recovery failed"),
            },
            Err(e) => error_case(&case, e),
        });
    }
    let summary = format!(
        "{}, max tail {worst_tail:.2e}, max λ direction error {worst_dir:.2e}",
        count(&cases)
    );
    outcome(3, "functional relation u = λ v", start, cases, summary)
}

/// 4. Verdicts of the Chebyshev–Koornwinder combinations against the rule.
pub fn chebyshev_table(m: &Manifest) -> CriterionOutcome {
    let start = Instant::now();
    let g = &m.chebyshev;
    let tol = m.tolerances();
    let mut cases = Vec::new();
    for &k in &g.kinds {
        for &rho in &g.rho {
            let case = format!("cheb-koornwinder:kind={k},rho={rho}");
            let r = (|| {
                let kind = ChebyshevKind::from_number(k)?;
                let b = families::chebyshev_koornwinder(kind, rho, g.max_degree, tol, false)?;
                Ok::<_, Error>((expected_orthogonal(kind, rho), b.verdict.unwrap_or(false)))
            })();
            cases.push(match r {
                Ok((want, got)) => {
                    let listed = m.expected_failure(&case, None, None).is_some();
                    let agree = want == got && listed == !want;
                    let word = |b: bool| if b { "orthogonal" } else { "not orthogonal" };
                    CaseResult::new(
                        &case,
                        agree,
                        format!("verdict {}, rule {}, manifest negative {listed}", word(got), word(want)),
                    )
                }
                Err(e) => error_case(&case, e),
            });
        }
    }
    let summary = format!("{} agreements", count(&cases).replace(" cases", ""));
    outcome(4, "Chebyshev verdict table", start, cases, summary)
}

/// Records of the counterexample: consistency of the generated system,
/// compatibility, and every rank condition, with `rank C̃_{n,1} = n - 1`
/// expected for `n_min ≤ n ≤ n_max` and the manifest's expected
/// deficiencies honored.
pub fn counterexample_records(m: &Manifest, n_min: usize, n_max: usize) -> Result<Vec<CheckRecord>> {
    let tight = m.tolerances.tight;
    let ce = counterexample(n_max, tight, m.tolerances.rank)?;
    let g = generate_from_ttr(&ce.q, n_max)?;
    let mut out = vec![
        CheckRecord::residual("three-term consistency", g.max_residual(), tight),
        CheckRecord::residual("displayed identities", ce.identity_residual, tight),
    ];
    for r in theorem_records(&ce.report, true) {
        let name = r.name.clone();
        if name.ends_with("compatibility") {
            out.push(r);
            continue;
        }
        let n = r.degree.unwrap_or(0) + 1;
        let (rank, expected) = r.rank.unwrap_or((0, 0));
        if name.ends_with("rank C") && r.direction == Some(0) {
            if n < n_min || n > n_max {
                continue;
            }
            let rec = CheckRecord::rank(format!("rank C̃_({n},1)"), rank, n - 1)
                .at(n)
                .with_note(format!("rank {rank}, expected n−1 = {}; full rank would be {expected}", n - 1));
            out.push(rec);
        } else if r.pass {
            out.push(r);
        } else if let Some(e) = m.expected_failure("counterexample", Some(&name), r.degree) {
            let mut rec = r.with_note(format!("expected: {}", e.reason));
            rec.pass = true;
            out.push(rec);
        } else {
            out.push(r);
        }
    }
    Ok(out)
}

/// 5. The two-variable counterexample.
pub fn counterexample_criterion(m: &Manifest) -> CriterionOutcome {
    let start = Instant::now();
    let g = &m.counterexample;
    let cases = match counterexample_records(m, g.n_min, g.n_max) {
        Ok(recs) => recs
            .iter()
            .map(|r| CaseResult::new(r.line(), r.pass, ""))
            .collect(),
        Err(e) => vec![error_case("counterexample", e)],
    };
    let ranks = cases
        .iter()
        .filter(|c| c.case.contains("rank C̃_(") && c.pass)
        .count();
    let summary = format!(
        "{}, rank C̃_(n,1) = n-1 for {ranks} of n = {}..{}",
        count(&cases),
        g.n_min,
        g.n_max
    );
    outcome(5, "counterexample", start, cases, summary)
}

/// `‖P - generate(compute_ttr(P))‖` per coefficient block, relative to
/// the block size.
pub fn favard_roundtrip(u: &MomentFunctional, n: usize, tol: Tolerances) -> Result<f64> {
    let (p, h) = gram_schmidt_monic(u, n, GsOptions { tol_rank: tol.rank })?;
    let t = compute_ttr(&p, u, &h, tol.res)?;
    let g = generate_from_ttr(&t, n)?;
    let mut worst: f64 = 0.0;
    for k in 0..=n {
        let diff = max_abs(&(p.block(k) - g.system.block(k)));
        worst = worst.max(relative(diff, max_abs(p.block(k))));
    }
    Ok(worst)
}

/// 6. Favard roundtrip.
pub fn favard(m: &Manifest) -> CriterionOutcome {
    let start = Instant::now();
    let g = &m.favard;
    let tol = m.tolerances();
    let cases: Vec<CaseResult> = g
        .functionals
        .iter()
        .map(|case| {
            match case
                .parse::<FamilySpec>()
                .and_then(|s| s.functional())
                .and_then(|u| favard_roundtrip(&u, g.max_degree, tol))
            {
                Ok(d) => CaseResult::new(case, d <= tol.res, format!("max block difference {d:.2e}")),
                Err(e) => error_case(case, e),
            }
        })
        .collect();
    let summary = format!("{}, N = {}", count(&cases), g.max_degree);
    outcome(6, "Favard roundtrip", start, cases, summary)
}

/// 7. Closed-form relations between adjacent families.
pub fn adjacent(m: &Manifest) -> CriterionOutcome {
    let start = Instant::now();
    let tol = m.tolerances();
    let mut cases: Vec<CaseResult> = m
        .adjacent
        .cases
        .iter()
        .map(|c| {
            match c
                .family
                .parse::<FamilySpec>()
                .and_then(|s| families::build(&s, c.max_degree, tol))
            {
                Ok(b) => {
                    let r = b.relation_residual.unwrap_or(f64::INFINITY);
                    CaseResult::new(&c.family, r <= tol.res, format!("residual {r:.2e}, n ≤ {}", c.max_degree))
                }
                Err(e) => error_case(&c.family, e),
            }
        })
        .collect();
    mark_unattainable(m, "closed-form relation", &mut cases);
    let unattainable = cases.iter().filter(|c| c.unattainable.is_some()).count();
    let summary = format!(
        "{} within {:.0e}; {unattainable} recorded as unattainable",
        count(&cases),
        tol.res
    );
    outcome(7, "adjacent-family reconstructions", start, cases, summary)
}

/// 8. Closed-form moments against product cubature.
pub fn moment_oracles(m: &Manifest) -> CriterionOutcome {
    let start = Instant::now();
    let g = &m.moments;
    let tight = m.tolerances.tight;
    let mut cases = Vec::new();
    let mut push = |case: String, r: Result<f64>| {
        cases.push(match r {
            Ok(e) => CaseResult::new(case, e <= tight, format!("max relative difference {e:.2e}")),
            Err(e) => error_case(&case, e),
        })
    };
    for k in &g.simplex {
        push(
            format!("simplex {k:?}"),
            (|| Ok(moment_discrepancy(&simplex(k)?, &simplex_cubature(k, g.nodes)?, g.max_degree)))(),
        );
    }
    for &mu in &g.disk {
        // the angular rule must resolve trigonometric degree max_degree
        let angles = 2 * g.max_degree.max(g.nodes);
        push(
            format!("disk mu={mu}"),
            (|| Ok(moment_discrepancy(&disk(mu)?, &disk_cubature(mu, g.nodes, angles)?, g.max_degree)))(),
        );
    }
    for k in &g.laguerre {
        push(
            format!("laguerre {k:?}"),
            (|| Ok(moment_discrepancy(&multi_laguerre(k)?, &laguerre_cubature(k, g.nodes)?, g.max_degree)))(),
        );
    }
    let summary = format!("{}, |α| ≤ {} (tol {:.0e})", count(&cases), g.max_degree, tight);
    outcome(8, "moment oracles", start, cases, summary)
}

/// 9. Gram–Schmidt stops where the Krall modification loses
/// quasi-definiteness.
pub fn krall_gates(m: &Manifest) -> CriterionOutcome {
    let start = Instant::now();
    let g = &m.krall_gates;
    let opts = GsOptions { tol_rank: m.tolerances.rank };
    let mut cases = Vec::new();
    let mut roots_found = 0;
    for gk in &g.kinds {
        let kind = match gk.kind() {
            Ok(k) => k,
            Err(e) => {
                cases.push(error_case(&gk.family, e));
                continue;
            }
        };
        let mut any = false;
        for n in 2..=g.max_degree {
            let roots = match kind.gate_roots(n, g.scan.lo, g.scan.hi, g.scan.steps) {
                Ok(r) => r,
                Err(e) => {
                    cases.push(error_case(&format!("{kind:?} n={n}"), e));
                    continue;
                }
            };
            for a1 in roots {
                any = true;
                roots_found += 1;
                let case = format!("{kind:?} a1={a1:.12} (gate n={n})");
                let r = krall_tensor_functionals(kind, a1)
                    .and_then(|(_, v)| gram_schmidt_monic(&v, g.max_degree, opts).map(|_| ()));
                cases.push(match r {
                    Err(Error::QuasiDefiniteFailure { degree, .. }) => CaseResult::new(
                        case,
                        degree + 1 == n,
                        format!("failure at H_{degree}, gate index {n}"),
                    ),
                    Err(e) => error_case(&case, e),
                    Ok(()) => CaseResult::new(case, false, "Gram–Schmidt did not fail"),
                });
            }
        }
        if !any {
            cases.push(CaseResult::new(format!("{kind:?}"), false, "no gate root in the scan interval"));
        }
        // an admissible generic parameter must go through
        let a1 = 3.0;
        let ok = krall_tensor_functionals(kind, a1)
            .and_then(|(_, v)| gram_schmidt_monic(&v, g.max_degree, opts).map(|_| ()));
        cases.push(CaseResult::new(
            format!("{kind:?} a1={a1} (control)"),
            ok.is_ok(),
            match ok {
                Ok(()) => "quasi-definite through N".to_string(),
                Err(e) => e.to_string(),
            },
        ));
    }
    let summary = format!("{}, {roots_found} gate roots, n ≤ {}", count(&cases), g.max_degree);
    outcome(9, "Krall quasi-definiteness gates", start, cases, summary)
}

/// All nine criteria in order.
pub fn run_all(m: &Manifest) -> Vec<CriterionOutcome> {
    vec![
        rank_dichotomy(m),
        mh_identity(m),
        functional_relation(m),
        chebyshev_table(m),
        counterexample_criterion(m),
        favard(m),
        adjacent(m),
        moment_oracles(m),
        krall_gates(m),
    ]
}

/// Rank pattern of the relation between the MOPS of `λ v` and of `v`.
pub fn relation_class(v: &MomentFunctional, lambda: &crate::moments::LinearPoly, n: usize, tol: Tolerances) -> Result<RankClass> {
    let u = v.left_multiply(&lambda.to_poly());
    let (p, h) = gram_schmidt_monic(&u, n, GsOptions { tol_rank: tol.rank })?;
    let (q, _) = gram_schmidt_monic(v, n, GsOptions { tol_rank: tol.rank })?;
    Ok(classify_ranks(&compute_relation(&q, &p, &u, &h)?, tol.rank).class)
}
