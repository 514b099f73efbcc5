//! Acceptance criteria, one line each. Runs without the libtest harness so
//! the report is printed as is; exits non-zero if any criterion fails.

mod common;

use std::collections::BTreeSet;
use std::panic::{catch_unwind, AssertUnwindSafe};

use cac_kernel::cic::{self, CicChecker};
use cac_kernel::elaborate::{elaborate_source, instantiate_type};
use cac_kernel::positivity::{signed_positions, Polarity};
use cac_kernel::recursor::{check_pre_recursor, gen_weak_recursor, match_canonical, rules_match, BranchLayout};
use cac_kernel::rewrite::{all_reducts, normalize, step, FuelBudget};
use cac_kernel::term::{Binder, NameSupply};
use cac_kernel::typing::Typer;
use cac_kernel::{Code, Environment, Position, Signature, Sort, Term, Var};
use common::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

/// The textbook recursor on nat, declared by hand in a different argument
/// order, is recognised as the generated one.
fn canonical_recursor() -> Outcome {
    let src = format!(
        "{}\nsymbol rec : (P:nat -> *)P 0 -> ((n:nat)P n -> P (s n)) -> (n:nat)P n.\n\
         rule rec P u v 0 --> u.\n\
         rule rec P u v (s n) --> v n (rec P u v n).\n\
         recursor rec for nat.\n",
        corpus_source("nat.cac")
    );
    let e = elaborate_source(&src, &options(&[]));
    ensure(e.accepted(), || format!("rejected: {:?}", e.diagnostics))?;
    let sig = &e.sig;
    let shape = check_pre_recursor("rec", "nat", sig).map_err(|d| format!("{d:?}"))?;
    ensure(shape.order == [3, 0, 1, 2], || format!("permutation {:?}", shape.order))?;
    let m = match_canonical("rec", "nat", &shape, sig).ok_or("no canonical match")?;
    ensure(m.n_params == 0 && m.layout == BranchLayout::Grouped, || format!("{m:?}"))?;
    let g = gen_weak_recursor("nat", "rec", sig).map_err(|d| format!("{d:?}"))?;
    ensure(g.decl.ty == shape.permuted_type(), || format!("type {} vs {}", g.decl.ty, shape.permuted_type()))?;
    for r in sig.rules_of("rec") {
        let mut p = r.clone();
        p.lhs_args = shape.order.iter().map(|&i| r.lhs_args[i].clone()).collect();
        p.rhs = shape.permute_calls("rec", &r.rhs).ok_or("permute_calls")?;
        ensure(g.rules.iter().any(|gr| rules_match(gr, &p)), || format!("rule {} has no generated counterpart", r.name))?;
    }
    Ok(format!("order {:?}, {} rules matched", shape.order, g.rules.len()))
}

fn positions() -> Outcome {
    let e = elaborate_file("trm.cac", &["trm"]);
    ensure(e.accepted(), || format!("{:?}", e.diagnostics))?;
    let neg = |t: Term| Term::app(Term::sym("neg"), t);
    let t = neg(neg(Term::sym("trm")));
    let sp = signed_positions(&t, Polarity::Pos, &e.sig);
    let expected: BTreeSet<Position> = ["1", "2.2"].iter().map(|s| Position::parse(s).unwrap()).collect();
    ensure(sp.positive == expected, || format!("Pos(neg (neg trm)) = {:?}", sp.positive))?;
    let mu_acc = e.sig.get("mu").and_then(|d| d.acc.clone()).unwrap_or_default();
    ensure(mu_acc.contains(&1), || "mu's argument is not accessible".into())?;
    Ok("Pos(neg (neg trm)) = {1, 2.2}".into())
}

fn rejection_suite() -> Outcome {
    let cases: &[(&str, &[&str], Option<u64>, Code)] = &[
        ("mendler.cac", &[], None, Code::NotStrictlyPositive),
        ("fin-strong.cac", &[], None, Code::NotSmall),
        ("jmeq-strong.cac", &[], None, Code::Unsafe),
        ("fin-intro.cac", &[], None, Code::I6),
        ("duplicating.cac", &[], None, Code::NonDuplicating),
        ("trm.cac", &[], None, Code::NonCanonicalRecursor),
        ("looping.cac", &[], Some(10), Code::FuelExhausted),
    ];
    for (f, trusted, fuel, code) in cases {
        let mut opts = options(trusted);
        if let Some(n) = fuel {
            opts.fuel = FuelBudget::new(*n);
        }
        let e = elaborate_source(&corpus_source(f), &opts);
        ensure(!e.accepted(), || format!("{f} accepted"))?;
        ensure(e.errors().any(|d| d.code == *code), || format!("{f}: no {code}: {:?}", e.diagnostics))?;
    }
    let file = cic::check_cic_source(&corpus_source("jmeq-strong.cicminus"), FuelBudget::new(10_000));
    ensure(file.diagnostics.iter().any(|d| d.is_error() && d.code == Code::Unsafe), || format!("{:?}", file.diagnostics))?;
    Ok(format!("{} files rejected with the expected code", cases.len() + 1))
}

fn acceptance_suite() -> Outcome {
    let sigs = acceptance_signatures();
    Ok(format!("{} signatures accepted", sigs.len()))
}

/// Every CIC⁻ step is matched by at least one CAC step on the
/// translations, and translated types are preserved.
fn simulation() -> Outcome {
    let fx = nat_fixture();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut names = NameSupply::new();
    let checker = CicChecker::new(FuelBudget::new(100_000));
    let nat_ty = fx.translation.translate_term(&fx.nat).ok_or("Nat untranslatable")?;
    let typer = Typer::new(&fx.sig).with_fuel(FuelBudget::new(100_000));
    let mut steps = 0usize;
    for n in 0..50 {
        let mut t = fx.gen(&mut rng, &mut names, &mut Vec::new(), 4);
        checker.check(&Vec::new(), &t, &fx.nat).map_err(|d| format!("term {n} ill-typed: {d}"))?;
        let mut prev = fx.translation.translate_term(&t).ok_or("untranslatable term")?;
        typer.check(&Environment::new(), &prev, &nat_ty).map_err(|e| format!("|{t}| : {e}"))?;
        let mut k = 0;
        while let Some((t2, _)) = cic::step(&t) {
            k += 1;
            ensure(k <= 5_000, || format!("term {n} did not normalize"))?;
            let next = fx.translation.translate_term(&t2).ok_or("untranslatable reduct")?;
            ensure(reaches(&prev, &next, &fx.sig, 3), || format!("|{t}| does not reach |{t2}|"))?;
            typer.check(&Environment::new(), &next, &nat_ty).map_err(|e| format!("|{t2}| : {e}"))?;
            t = t2;
            prev = next;
            steps += 1;
        }
    }
    Ok(format!("50 terms, {steps} steps simulated"))
}

fn reaches(from: &Term, to: &Term, sig: &Signature, depth: usize) -> bool {
    let mut frontier = vec![from.clone()];
    for _ in 0..depth {
        let mut next = Vec::new();
        for t in &frontier {
            for (_, _, u) in all_reducts(t, sig) {
                if u == *to {
                    return true;
                }
                next.push(u);
            }
        }
        frontier = next;
    }
    false
}

/// Random well-typed terms over every accepted signature; each one-step
/// reduct keeps the type.
fn subject_reduction() -> Outcome {
    let sigs = acceptance_signatures();
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let (mut terms, mut reducts) = (0usize, 0usize);
    for (f, sig) in &sigs {
        let mut g = TermGen::new(sig, ChaCha8Rng::seed_from_u64(rand::Rng::gen(&mut rng)));
        let typer = Typer::new(sig).with_fuel(FuelBudget::new(100_000));
        let env = g.environment();
        let per_sig = 500 / sigs.len() + 1;
        let mut kept = 0;
        for _ in 0..per_sig * 40 {
            if kept == per_sig {
                break;
            }
            let Some(ty) = g.gen_checked(&Term::star(), 2) else { continue };
            let Some(t) = g.gen_checked(&ty, 4) else { continue };
            kept += 1;
            for (u, uty) in [(&t, &ty), (&ty, &Term::star())] {
                for (p, _, r) in all_reducts(u, sig) {
                    typer.check(&env, &r, uty).map_err(|e| format!("{f}: {u} -> {r} at {p}: {e}"))?;
                    reducts += 1;
                }
            }
        }
        ensure(kept == per_sig, || format!("{f}: only {kept} well-typed terms generated"))?;
        terms += kept;
    }
    ensure(reducts > 0, || "no reducts".into())?;
    Ok(format!("{terms} terms, {reducts} reducts re-checked"))
}

fn lambdas(m: usize, body: Term) -> Term {
    (0..m).fold(body, |b, _| Term::Abs(Binder::new("w", Sort::Star), Term::star().into(), b.into()))
}

/// `rec q⃗ (c a⃗) … u …` normalizes to `a_j` for every accessible `j`, with
/// `u` the projection on the branch argument receiving `a_j`.
fn accessibility_projection() -> Outcome {
    let mut checked = 0usize;
    for (file, sig) in acceptance_signatures() {
        for d in sig.decls() {
            let Some(c) = &d.recursor_for else { continue };
            let f = &*d.name;
            let shape = check_pre_recursor(f, c, &sig).map_err(|e| format!("{file}: {f}: {e:?}"))?;
            let scr = shape.scrutinee();
            // Branches come last, after the motive if there is one.
            let w = &shape.order[shape.n_indices + 1..];
            let ctors = sig.constant_constructors_of(c);
            ensure(w.len() >= ctors.len(), || format!("{file}: {f}: {} arguments after the scrutinee for {} constructors", w.len(), ctors.len()))?;
            let branches = &w[w.len() - ctors.len()..];
            for (bi, ctor) in ctors.iter().enumerate() {
                let rule = sig
                    .rules_of(f)
                    .find(|r| r.lhs_args.get(scr).and_then(|a| a.head_sym()).is_some_and(|h| *h == ctor.name))
                    .ok_or_else(|| format!("{file}: {f}: no rule for {}", ctor.name))?;
                let pattern: Vec<Term> = rule.lhs_args[scr].spine().1.into_iter().cloned().collect();
                let (_, rargs) = rule.rhs.spine();
                let a: Vec<Term> = (0..ctor.arity()).map(|i| Var::object(&format!("a{}", i + 1)).term()).collect();
                let out = instantiate_type(&ctor.ty, &a).ok_or("constructor arity")?;
                let v: Vec<Term> = out.spine().1.into_iter().cloned().collect();
                ensure(v.len() == shape.n_indices, || format!("{file}: {}: {} index values", ctor.name, v.len()))?;
                for &j in ctor.acc.as_ref().into_iter().flatten() {
                    let k = rargs.iter().position(|r| Some(*r) == pattern.get(j - 1));
                    let u = match k {
                        Some(k) => lambdas(rargs.len(), Term::Bound((rargs.len() - 1 - k) as u32)),
                        None => lambdas(rargs.len(), a[j - 1].clone()),
                    };
                    let mut args = vec![Term::star(); shape.binders.len()];
                    for (t, &i) in shape.order[..shape.n_indices].iter().enumerate() {
                        args[i] = v[t].clone();
                    }
                    args[scr] = Term::apps(Term::sym(&ctor.name), a.clone());
                    for &i in &shape.order[shape.n_indices + 1..] {
                        let x = &shape.binders[i].0;
                        args[i] = Var::new(&format!("{}_", x.name), x.sort).term();
                    }
                    args[branches[bi]] = u;
                    let t = Term::apps(Term::sym(f), args);
                    let nf = normalize(&t, &sig, FuelBudget::new(100)).map_err(|e| format!("{t}: {e}"))?;
                    ensure(nf == a[j - 1], || format!("{file}: {t} normalizes to {nf}, not {}", a[j - 1]))?;
                    checked += 1;
                }
            }
        }
    }
    ensure(checked > 0, || "no recursor had accessible arguments".into())?;
    Ok(format!("{checked} projections"))
}

/// Normal forms are normal and stable; conversion decides P(2+2) = P(4).
fn idempotence_and_conversion() -> Outcome {
    let sigs = acceptance_signatures();
    let mut terms = 0usize;
    for (i, (f, sig)) in sigs.iter().enumerate() {
        let mut g = TermGen::new(sig, ChaCha8Rng::seed_from_u64(800 + i as u64));
        let per_sig = 1000 / sigs.len() + 1;
        let mut kept = 0;
        for _ in 0..per_sig * 40 {
            if kept == per_sig {
                break;
            }
            let Some(ty) = g.gen_checked(&Term::star(), 2) else { continue };
            let Some(t) = g.gen_checked(&ty, 4) else { continue };
            kept += 1;
            let fuel = FuelBudget::new(100_000);
            let n1 = normalize(&t, sig, fuel).map_err(|e| format!("{f}: {t}: {e}"))?;
            let n2 = normalize(&n1, sig, fuel).map_err(|e| format!("{f}: {n1}: {e}"))?;
            ensure(n1 == n2 && step(&n1, sig).is_none(), || format!("{f}: {t} gives {n1} then {n2}"))?;
        }
        ensure(kept == per_sig, || format!("{f}: only {kept} well-typed terms generated"))?;
        terms += kept;
    }

    let e = elaborate_file("nat.cac", &[]);
    let s = |t: Term| Term::app(Term::sym("s"), t);
    let num = |n: usize| (0..n).fold(Term::sym("0"), |t, _| s(t));
    let p = Var::predicate("P");
    let x = Var::object("x");
    let two_plus_two = Term::apps(Term::sym("plus"), [num(2), num(2)]);
    let env = Environment::from_bindings(vec![
        (p.clone(), Term::prod(&x, Term::sym("nat"), &Term::star())),
        (Var::object("h"), Term::app(p.term(), two_plus_two.clone())),
    ]);
    let typer = Typer::new(&e.sig);
    typer.check(&env, &Var::object("h").term(), &Term::app(p.term(), num(4))).map_err(|e| format!("P(2+2) vs P(4): {e}"))?;
    ensure(typer.check(&env, &Var::object("h").term(), &Term::app(p.term(), num(3))).is_err(), || "P(2+2) converts to P(3)".into())?;

    let file = cic::check_cic_source(&corpus_source("nat.cicminus"), FuelBudget::new(100_000));
    let out = cic::translate(&file);
    let te = elaborate_source(&out.to_source(), &options(&[]));
    ensure(te.accepted(), || format!("{:?}", te.diagnostics))?;
    let fx = nat_fixture();
    let four = out.translate_term(&fx.numeral(4)).ok_or("untranslatable numeral")?;
    Typer::new(&te.sig)
        .check(&Environment::new(), &Term::sym("p4"), &Term::app(Term::sym("P"), four))
        .map_err(|e| format!("translated p4 : P 4: {e}"))?;
    Ok(format!("{terms} terms stable; P(2+2) = P(4) in both calculi"))
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 8] = [
        ("canonical recursor", canonical_recursor),
        ("signed positions", positions),
        ("rejection suite", rejection_suite),
        ("acceptance suite", acceptance_suite),
        ("CIC simulation", simulation),
        ("subject reduction", subject_reduction),
        ("accessibility projection", accessibility_projection),
        ("normalization and conversion", idempotence_and_conversion),
    ];
    let handle = std::thread::Builder::new()
        .stack_size(256 << 20)
        .spawn(move || {
            let mut failed = 0;
            for (k, (name, f)) in criteria.iter().enumerate() {
                let res = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|p| {
                    Err(p.downcast_ref::<String>().cloned().or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string())).unwrap_or_default())
                });
                match res {
                    Ok(detail) => println!("criterion {}: PASS {name} ({detail})", k + 1),
                    Err(why) => {
                        failed += 1;
                        println!("criterion {}: FAIL {name}: {why}", k + 1);
                    }
                }
            }
            failed
        })
        .expect("spawn");
    let failed = handle.join().expect("acceptance thread");
    if failed > 0 {
        std::process::exit(1);
    }
}
