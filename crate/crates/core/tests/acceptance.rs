//! The acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::process::Command;
use std::time::{Duration, Instant};

use num_rational::Ratio;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use compop::calculus::{compose_derivative, faa_coefficient, gorny_order, partitions};
use compop::criteria::{check_b, check_k, check_oc, check_om, Bounds, Overall, Part};
use compop::empirical::{
    bump_with_jet, crosscheck_suite, gorny_corpus, jet_identity, verify_gorny, JetPattern, JetSpec,
};
use compop::expr::{parse, Expr, Tape};
use compop::spaces::{membership, Family, MembershipTag, SpaceSpec, REGRESSION_CORPUS};
use compop::weights::{Classifier, WeightSystem};

type Outcome = Result<String, String>;

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn within(start: Instant, limit: Duration) -> Result<(), String> {
    let t = start.elapsed();
    ensure(t <= limit, || format!("took {t:.1?}, limit {limit:?}"))
}

fn poly() -> WeightSystem {
    WeightSystem::power(parse("1+abs(x)").unwrap())
}

fn rel_err(got: f64, want: f64) -> f64 {
    if want == 0.0 {
        got.abs()
    } else {
        (got - want).abs() / want.abs()
    }
}

fn faa_di_bruno_oracle() -> Outcome {
    let start = Instant::now();
    let fs = ["sin(x)", "exp(x)", "x^3+x", "tanh(x)", "1/(1+x^2)", "exp(-x^2)", "cos(2*x)", "x*sin(x)"];
    let phis = ["x^2", "sin(x)", "x^3-x", "tanh(x)", "exp(x/3)", "x+sin(x)", "1/(2+x^2)", "x*exp(-x^2)"];
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut worst = 0.0f64;
    for case in 0..100 {
        let f = parse(fs[rng.gen_range(0..fs.len())]).unwrap();
        let phi = parse(phis[rng.gen_range(0..phis.len())]).unwrap();
        let p = rng.gen_range(1..=6);
        let x: f64 = rng.gen_range(-2.0..2.0);
        let got = compose_derivative(&f, &phi, p, x).map_err(|e| e.to_string())?;
        let want = f.substitute(&phi).derivative(p).map_err(|e| e.to_string())?.eval(x).map_err(|e| e.to_string())?;
        let e = rel_err(got, want);
        worst = worst.max(e);
        ensure(e <= 1e-9, || format!("case {case}: f = {f}, phi = {phi}, p = {p}, x = {x}: {got} vs {want}"))?;
    }
    within(start, Duration::from_secs(10))?;
    Ok(format!("100 cases, worst relative error {worst:.1e}"))
}

// Euler's pentagonal number recurrence.
fn partition_numbers(n: usize) -> Vec<u64> {
    let mut p = vec![0i64; n + 1];
    p[0] = 1;
    for i in 1..=n {
        let mut k = 1i64;
        loop {
            let g1 = (k * (3 * k - 1) / 2) as usize;
            if g1 > i {
                break;
            }
            let sign = if k % 2 == 1 { 1 } else { -1 };
            p[i] += sign * p[i - g1];
            let g2 = (k * (3 * k + 1) / 2) as usize;
            if g2 <= i {
                p[i] += sign * p[i - g2];
            }
            k += 1;
        }
    }
    p.into_iter().map(|v| v as u64).collect()
}

// Bell triangle.
fn bell_numbers(n: usize) -> Vec<u64> {
    let mut bell = vec![1u64];
    let mut row = vec![1u64];
    for _ in 1..=n {
        let mut next = vec![*row.last().unwrap()];
        for v in &row {
            let last = *next.last().unwrap();
            next.push(last + v);
        }
        bell.push(next[0]);
        row = next;
    }
    bell
}

fn combinatorial_identities() -> Outcome {
    let pn = partition_numbers(20);
    for p in 1..=20 {
        let got = partitions(p).map_err(|e| e.to_string())?.len() as u64;
        ensure(got == pn[p], || format!("|partitions({p})| = {got}, expected {}", pn[p]))?;
    }
    let bell = bell_numbers(10);
    for p in 1..=10 {
        let terms = partitions(p).map_err(|e| e.to_string())?;
        let mut sum = 0u64;
        for t in terms {
            sum += faa_coefficient(&t.k).map_err(|e| e.to_string())?;
        }
        ensure(sum == bell[p], || format!("coefficient sum at p = {p} is {sum}, expected {}", bell[p]))?;
    }
    Ok(format!("p(20) = {}, B(10) = {}", pn[20], bell[10]))
}

fn discrimination() -> Outcome {
    let start = Instant::now();
    let c = Classifier::default();
    let b = Bounds::default();
    let f = parse("sin(x^2)").unwrap();
    let in_oc = membership(&f, &SpaceSpec::new(Family::OC, poly()), &c).map_err(|e| e.to_string())?.tag;
    let in_om = membership(&f, &SpaceSpec::new(Family::OM, poly()), &c).map_err(|e| e.to_string())?.tag;
    ensure(in_oc == MembershipTag::Fails, || format!("sin(x^2) in OC: {in_oc:?}"))?;
    ensure(in_om == MembershipTag::Holds, || format!("sin(x^2) in OM: {in_om:?}"))?;
    let phi = parse("x^2").unwrap();
    let oc = check_oc(&poly(), &poly(), &phi, &b, &c).map_err(|e| e.to_string())?;
    ensure(oc.overall == Overall::Fail, || format!("check_OC(x^2): {:?}", oc.overall))?;
    let w = oc.witness.ok_or("check_OC(x^2) has no witness")?;
    ensure(w.condition == "b" && w.indices.p == Some(1), || format!("check_OC witness {} at p = {:?}", w.condition, w.indices.p))?;
    let om = check_om(&poly(), &poly(), &phi, &b, &c).map_err(|e| e.to_string())?;
    ensure(om.overall == Overall::Pass, || format!("check_OM(x^2): {:?}", om.overall))?;
    within(start, Duration::from_secs(60))?;
    Ok(format!("4 verdicts in {:.1?}", start.elapsed()))
}

fn bounded_derivative() -> Outcome {
    let c = Classifier::default();
    let b = Bounds::default();
    for (phi, want) in [
        ("sin(x)", Overall::Pass),
        ("tanh(x)", Overall::Pass),
        ("x", Overall::Pass),
        ("x^2", Overall::Fail),
        ("exp(x)", Overall::Fail),
    ] {
        let got = check_b(&parse(phi).unwrap(), &b, &c).map_err(|e| e.to_string())?.overall;
        ensure(got == want, || format!("check_B({phi}): {got:?}, expected {want:?}"))?;
    }
    Ok("5 verdicts".into())
}

fn schwartz() -> Outcome {
    let c = Classifier::default();
    let b = Bounds::default();
    let rho = c.thresholds.rho;
    let pass = check_k(&poly(), &poly(), &parse("x^3+x").unwrap(), &b, &c).map_err(|e| e.to_string())?;
    ensure(pass.overall == Overall::Pass, || format!("check_K(x^3+x): {:?}", pass.overall))?;
    let mut growth = Vec::new();
    for phi in ["sin(x)", "exp(x)"] {
        let v = check_k(&poly(), &poly(), &parse(phi).unwrap(), &b, &c).map_err(|e| e.to_string())?;
        ensure(v.overall == Overall::Fail, || format!("check_K({phi}): {:?}", v.overall))?;
        let w = v.witness.ok_or_else(|| format!("check_K({phi}) has no witness"))?;
        ensure(w.condition == "a", || format!("check_K({phi}) failed condition {}", w.condition))?;
        ensure(w.trail.len() >= 2, || format!("check_K({phi}) trail has {} points", w.trail.len()))?;
        let min = w.trail.windows(2).map(|s| (s[1].ln_ratio - s[0].ln_ratio).exp()).fold(f64::INFINITY, f64::min);
        ensure(min >= rho, || format!("check_K({phi}) trail growth {min} < {rho}"))?;
        growth.push(format!("{phi}: min growth {min:.3}"));
    }
    Ok(growth.join(", "))
}

fn bump_factory() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut worst = 0.0f64;
    for q in 0..=12 {
        let mut jets = vec![JetSpec::unit_value(), JetSpec::new(q)];
        for p in 1..=q {
            jets.push(JetSpec::unit_order(p));
            jets.push(JetSpec::unit_slope(p));
        }
        let mut random = JetSpec::new(q);
        for p in 0..=q {
            random = random.with(p, rng.gen_range(-3.0..3.0));
        }
        jets.push(random);
        for jet in &jets {
            let f = bump_with_jet(jet).map_err(|e| e.to_string())?;
            worst = worst.max(f.residual);
            ensure(f.residual <= 1e-10, || format!("q = {q}: residual {}", f.residual))?;
            for &x in &[-7.5, -1.0, 1.0, 1.0 + 1e-12, 2.0, 40.0] {
                for d in 0..=12 {
                    ensure(f.derivative(x, d) == 0.0, || format!("f^({d})({x}) = {} outside the support", f.derivative(x, d)))?;
                }
            }
        }
    }
    let xs: Vec<f64> = (0..20).map(|i| -3.0 + 6.0 * i as f64 / 19.0).collect();
    let mut identity = 0.0f64;
    for phi in ["x^3+sin(x)", "x^2", "tanh(x)+x"] {
        let phi = parse(phi).unwrap();
        for p in 1..=4 {
            let tape = Tape::compile(&phi.derivatives(p).map_err(|e| e.to_string())?);
            for pat in JetPattern::ALL {
                let bump = bump_with_jet(&pat.jet(p)).map_err(|e| e.to_string())?;
                for &x in &xs {
                    let (got, want) =
                        jet_identity(pat, &bump, &tape, p, x).ok_or_else(|| format!("{pat:?} at {x} did not evaluate"))?;
                    let e = rel_err(got, want);
                    identity = identity.max(e);
                    ensure(e <= 1e-8, || format!("{pat:?}, phi = {phi}, p = {p}, x = {x}: {got} vs {want}"))?;
                }
            }
        }
    }
    Ok(format!("worst residual {worst:.1e}, worst identity error {identity:.1e}"))
}

fn gorny_harness() -> Outcome {
    let corpus = gorny_corpus(0, 64);
    let mut worst = 0.0f64;
    for j in 1..=4 {
        for m in j..=6 {
            let r = verify_gorny(&corpus, j, m).map_err(|e| e.to_string())?;
            ensure(r.violations == 0, || format!("(j, m) = ({j}, {m}): {} violations", r.violations))?;
            ensure(r.stable, || format!("(j, m) = ({j}, {m}): constant {} vs half {}", r.constant, r.half_constant))?;
            if r.half_constant > 0.0 {
                worst = worst.max(r.constant / r.half_constant);
            }
        }
    }
    Ok(format!("18 pairs, largest doubling factor {worst:.3}"))
}

// Smallest m ≥ max(p, 1) with (1 − (p−1)/m)/m + (p−1)/m ≤ 1/k, in exact rationals.
fn gorny_holds_exact(p: usize, k: usize, m: usize) -> bool {
    let (p, k, m) = (p as i64, k as i64, m as i64);
    let r = |a: i64, b: i64| Ratio::new(a, b);
    (r(1, 1) - r(p - 1, m)) / r(m, 1) + r(p - 1, m) <= r(1, k)
}

fn gorny_order_check() -> Outcome {
    let mut cases = vec![(2, 2, 4)];
    cases.extend((1..=8).map(|k| (1, k, k)));
    for (p, k, want) in cases {
        let got = gorny_order(p, k);
        ensure(got == want, || format!("gorny_order({p}, {k}) = {got}, expected {want}"))?;
        ensure(gorny_holds_exact(p, k, got), || format!("condition fails at m = {got} for ({p}, {k})"))?;
        ensure(got <= p.max(1) || !gorny_holds_exact(p, k, got - 1), || format!("m = {got} not minimal for ({p}, {k})"))?;
        let search = (p.max(1)..).find(|&m| gorny_holds_exact(p, k, m)).unwrap();
        ensure(search == got, || format!("integer search gives {search} for ({p}, {k})"))?;
    }
    Ok("gorny_order(2,2) = 4 and gorny_order(1,k) = k for k ≤ 8".into())
}

fn crosscheck() -> Outcome {
    let start = Instant::now();
    let c = Classifier::default();
    let corpus: Vec<Expr> = REGRESSION_CORPUS.iter().map(|s| parse(s).unwrap()).collect();
    let systems = [poly(), WeightSystem::constant()];
    let parts = [Part::I, Part::II, Part::III];
    let r = crosscheck_suite(&systems, &parts, &corpus, &corpus, &Bounds::default(), &c).map_err(|e| e.to_string())?;
    if r.discrepancies > 0 {
        let first = r.runs.iter().find(|run| !run.discrepancies.is_empty()).unwrap();
        return Err(format!("{} discrepancies, first at {:?} phi = {}", r.discrepancies, first.part, first.phi));
    }
    within(start, Duration::from_secs(600))?;
    Ok(format!("{} runs, 0 discrepancies in {:.1?}", r.runs.len(), start.elapsed()))
}

fn determinism() -> Outcome {
    let commands: [&[&str]; 7] = [
        &["check", "--preset", "OM", "--phi", "x^2"],
        &["check", "--preset", "OC", "--phi", "x^2"],
        &["check", "--preset", "B", "--phi", "tanh(x)"],
        &["membership", "--space", "OC", "--preset", "OC", "--f", "sin(x^2)"],
        &["harness", "lemma1", "--preset", "OM", "--phi", "x^2", "--p", "2", "--n", "1"],
        &["harness", "gorny", "--j", "2", "--m", "4"],
        &["harness", "crosscheck", "--preset", "S", "--phi", "x^3+x", "--f", "exp(-x^2)", "--f", "sin(x)"],
    ];
    for args in commands {
        let run = |jobs: &str| {
            let out = Command::new(env!("CARGO_BIN_EXE_compop"))
                .args(args)
                .args(["--jobs", jobs])
                .output()
                .map_err(|e| e.to_string())?;
            ensure(out.status.code().is_some_and(|c| c <= 2), || {
                format!("{args:?} exited with {:?}: {}", out.status, String::from_utf8_lossy(&out.stderr))
            })?;
            Ok::<_, String>(out.stdout)
        };
        let (one, eight) = (run("1")?, run("8")?);
        ensure(one == eight, || format!("{args:?}: reports differ between --jobs 1 and --jobs 8"))?;
    }
    Ok(format!("{} commands byte-identical", commands.len()))
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 10] = [
        ("Faa di Bruno oracle equivalence", faa_di_bruno_oracle),
        ("combinatorial identities", combinatorial_identities),
        ("discrimination of sin(x^2) and x^2", discrimination),
        ("bounded derivative criterion", bounded_derivative),
        ("Schwartz criterion", schwartz),
        ("bump factory", bump_factory),
        ("Gorny harness", gorny_harness),
        ("Gorny order", gorny_order_check),
        ("crosscheck suite", crosscheck),
        ("determinism", determinism),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let outcome = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|e| {
            let msg = e.downcast_ref::<String>().cloned().or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()));
            Err(format!("panicked: {}", msg.unwrap_or_default()))
        });
        match outcome {
            Ok(detail) => println!("PASS {:>2} {name}: {detail}", i + 1),
            Err(detail) => {
                failed += 1;
                println!("FAIL {:>2} {name}: {detail}", i + 1);
            }
        }
    }
    if failed > 0 {
        println!("{failed} of {} criteria failed", criteria.len());
        std::process::exit(1);
    }
    println!("all {} criteria passed", criteria.len());
}
