//! Acceptance run: one PASS/FAIL line per criterion. Values are compared
//! exactly; each criterion has a pinned wall-time limit.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::{Duration, Instant};

use treehom_cli::oracle::check_image;
use treehom_core::terms::enumerate_trees;
use treehom_core::{
    build_hat_wta, hom_image, parse_hom, parse_wtah, parse_wtg, Position, Rational, State, Tree, Wtah, Wtg,
};

const EXACT: &str = "exact";

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fixtures").join(name)
}

fn read(name: &str) -> String {
    std::fs::read_to_string(fixture(name)).unwrap()
}

fn wtg(name: &str) -> Wtg {
    parse_wtg(&read(name)).unwrap()
}

fn wtah(name: &str) -> Wtah {
    parse_wtah(&read(name)).unwrap()
}

fn t(text: &str) -> Tree {
    Tree::parse(text).unwrap()
}

fn int(n: i64) -> Rational {
    Rational::from_integer(n)
}

fn chain(symbol: &str, leaf: &str, n: usize) -> Tree {
    (0..n).fold(Tree::constant(leaf), |t, _| Tree::sym(symbol, vec![t]))
}

struct Run {
    code: i32,
    stdout: String,
}

fn treehom(args: &[&str]) -> Run {
    let out = Command::new(env!("CARGO_BIN_EXE_treehom")).args(args).output().unwrap();
    Run { code: out.status.code().unwrap_or(-1), stdout: String::from_utf8(out.stdout).unwrap() }
}

fn field<'a>(stdout: &'a str, key: &str) -> Option<&'a str> {
    stdout.lines().find_map(|l| l.strip_prefix(key).and_then(|r| r.strip_prefix(": ")))
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

type Check = Result<String, String>;
type Criterion = (&'static str, fn() -> Check);

fn ensure(ok: bool, message: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(message())
    }
}

fn timed(limit: Duration, label: &str, f: impl FnOnce() -> Result<(), String>) -> Result<Duration, String> {
    let start = Instant::now();
    f()?;
    let elapsed = start.elapsed();
    ensure(elapsed <= limit, || format!("{label} took {elapsed:.2?}, limit {limit:?}"))?;
    Ok(elapsed)
}

fn worked_examples() -> Check {
    let limit = Duration::from_secs(1);
    let mut slowest = Duration::ZERO;
    let mut record = |d: Duration| slowest = slowest.max(d);
    record(timed(limit, "first example", || {
        let v = wtah("first_ex.wtah").evaluate(&t("f(a,g(a,a),g(a,a))"));
        ensure(v == int(2), || format!("A'(f(a,g(a,a),g(a,a))) = {v}, want 2"))
    })?);
    record(timed(limit, "source series", || {
        let a = wtg("hom_image.wta");
        for n in 0..=4 {
            for m in 0..=4 - n {
                let s = Tree::sym("psi", vec![chain("gamma", "alpha", n), chain("gamma", "alpha", m)]);
                let v = a.evaluate(&s);
                ensure(v == int(1 << (n + m)), || format!("A({s}) = {v}, want {}", 1 << (n + m)))?;
            }
        }
        Ok(())
    })?);
    record(timed(limit, "cancellation", || {
        let v = wtah("b_prime.wtah").evaluate(&t("f(a,g(a,a),g(a,a))"));
        ensure(v.is_zero(), || format!("B'(f(a,g(a,a),g(a,a))) = {v}, want 0"))
    })?);
    record(timed(limit, "final example", || {
        let m = wtah("final_example.wtah");
        for i in 0..=3 {
            for j in 0..=3 {
                let s = Tree::sym("f", vec![chain("g", "a", i), chain("g", "a", j)]);
                let v = m.evaluate(&s);
                ensure(v == int(3), || format!("value of {s} is {v}, want 3"))?;
            }
        }
        Ok(())
    })?);
    let cli = treehom(&["eval", "--wtah", path(&fixture("first_ex.wtah")), "--tree", "f(a,g(a,a),g(a,a))"]);
    ensure(cli.code == 0 && cli.stdout.trim() == "2", || format!("eval printed {:?}", cli.stdout))?;
    Ok(format!("4 groups, tolerance={EXACT}, slowest={slowest:.2?}, limit={limit:?} each"))
}

const IMAGE_PAIRS: &[(&str, &str)] = &[
    ("hom_image.wta", "hom_image.hom"),
    ("hom_image.wta", "relabel.hom"),
    ("tetris.wta", "tetris.hom"),
    ("subsequence.wta", "subsequence.hom"),
    ("fin.wta", "fin.hom"),
];

fn image_oracle() -> Check {
    let limit = Duration::from_secs(60);
    let mut checked = 0;
    let mut slowest = Duration::ZERO;
    for (wta, hom) in IMAGE_PAIRS {
        let a = wtg(wta);
        let h = parse_hom(&read(hom)).unwrap();
        ensure(h.is_tetris_free().unwrap().tetris_free, || format!("{hom} is expected to be tetris-free"))?;
        let elapsed = timed(limit, hom, || {
            let m = hom_image(&a, &h).map_err(|e| e.to_string())?;
            let result = check_image(&a, &h, &m, 4).map_err(|e| e.to_string())?;
            checked += result.checked;
            match &result.mismatch {
                None => Ok(()),
                Some(x) => Err(format!(
                    "{wta}/{hom}: at {} image {} but preimages sum to {}",
                    x.tree, x.automaton, x.preimage_sum
                )),
            }
        })?;
        slowest = slowest.max(elapsed);
    }
    // a corrupted image automaton must be caught
    let dir = tempfile::tempdir().unwrap();
    let corrupted = dir.path().join("corrupted.wtah");
    std::fs::write(&corrupted, read("first_ex.wtah").replace("-> q @ 2", "-> q @ 3")).unwrap();
    let (wta, hom) = (fixture("hom_image.wta"), fixture("hom_image.hom"));
    let run = treehom(&[
        "oracle-image",
        "--wta",
        path(&wta),
        "--hom",
        path(&hom),
        "--wtah",
        path(&corrupted),
        "--max-height",
        "3",
    ]);
    ensure(run.code == 10 && field(&run.stdout, "mismatch").is_some(), || {
        format!("corruption missed:\n{}", run.stdout)
    })?;
    let run = treehom(&["oracle-image", "--wta", path(&wta), "--hom", path(&hom), "--max-height", "0"]);
    ensure(run.code == 0 && run.stdout.contains("oracle.checked=1\n"), || format!("height 0:\n{}", run.stdout))?;
    Ok(format!(
        "{} pairs, {checked} trees, height<=4, tolerance={EXACT}, slowest={slowest:.2?}, limit={limit:?} per fixture",
        IMAGE_PAIRS.len()
    ))
}

fn tetris_checker() -> Check {
    let expect: &[(&str, &str, Option<&str>)] = &[
        ("tetris.hom", "yes", None),
        ("tetris_prime.hom", "no", Some("(psi(alpha,alpha), beta)")),
        ("hom_kappa.hom", "no", None),
        ("hom_phi.hom", "no", None),
        ("hom_image.hom", "yes", None),
        ("subsequence.hom", "yes", None),
        ("fin.hom", "yes", None),
        ("relabel.hom", "yes", None),
    ];
    for (hom, verdict, witness) in expect {
        let run = treehom(&["tetris-free", "--hom", path(&fixture(hom)), "--oracle-height", "3"]);
        ensure(run.code == 0, || format!("{hom}: exit {}\n{}", run.code, run.stdout))?;
        ensure(field(&run.stdout, "TETRIS-FREE") == Some(verdict), || format!("{hom}:\n{}", run.stdout))?;
        ensure(run.stdout.contains(&format!("oracle.tetris_free={verdict}\n")), || {
            format!("{hom} oracle:\n{}", run.stdout)
        })?;
        if let Some(w) = witness {
            ensure(field(&run.stdout, "witness") == Some(w), || format!("{hom} witness:\n{}", run.stdout))?;
        }
    }
    Ok(format!("{} homomorphisms, bounded oracle height 3 agrees", expect.len()))
}

fn hat_correctness() -> Check {
    let m = wtah("first_ex.wtah");
    let hat = build_hat_wta(&m).map_err(|e| e.to_string())?;
    let display = hat.hat_tree(&m, &t("f(a,g(a,a),g(a,a))")).map_err(|e| e.to_string())?;
    ensure(display == t("[f(BOT,BOT,BOT)](a,[g(a,BOT)](a))"), || format!("hat display {display}"))?;
    let domain = m.run_domain(4).map_err(|e| e.to_string())?;
    let mut support = 0;
    for q in m.final_weights().keys() {
        for s in domain.get(q).into_iter().flatten() {
            let v = m.evaluate(s);
            if v.is_zero() {
                continue;
            }
            support += 1;
            let hatted = hat.hat_tree(&m, s).map_err(|e| format!("{s}: {e}"))?;
            ensure(hat.wta.evaluate(&hatted) == v, || format!("{s}: Â gives {}", hat.wta.evaluate(&hatted)))?;
            ensure(hat.unhat_tree(&hatted).as_ref() == Ok(s), || format!("{s}: unhat differs"))?;
        }
    }
    ensure(support > 0, || "empty support".into())?;
    Ok(format!("{support} support trees of height<=4, tolerance={EXACT}"))
}

fn zeroness() -> Check {
    let limit = Duration::from_secs(10);
    let mut automata: Vec<(String, Wtg)> =
        ["hom_image.wta", "tetris.wta", "b.wta", "c.wta", "subsequence.wta", "fin.wta"]
            .iter()
            .map(|n| (n.to_string(), wtg(n)))
            .collect();
    for n in ["first_ex.wtah", "subsequence.wtah", "fin.wtah"] {
        automata.push((format!("hat of {n}"), build_hat_wta(&wtah(n)).unwrap().wta));
    }
    let mut mutations = 0;
    let mut slowest = Duration::ZERO;
    for (name, a) in &automata {
        let elapsed = timed(limit, name, || {
            let self_diff = Wtg::linear_combination("d", &[(int(1), a), (int(-1), a)]).unwrap();
            ensure(self_diff.is_zero().unwrap().is_zero, || format!("{name}: self-difference nonzero"))?;
            let normal = Wtg::linear_combination("d", &[(int(1), a), (int(-1), &a.to_wta())]).unwrap();
            ensure(normal.to_wta().is_zero().unwrap().is_zero, || format!("{name}: normalization differs"))?;
            for i in 0..a.rules().len() {
                let mut rules = a.rules().to_vec();
                rules[i].weight += int(1);
                if rules[i].weight.is_zero() {
                    rules[i].weight += int(1);
                }
                let mutated =
                    Wtg::new("m", a.alphabet().clone(), a.states().to_vec(), rules, a.final_weights().clone()).unwrap();
                let check =
                    Wtg::linear_combination("d", &[(int(1), a), (int(-1), &mutated)]).unwrap().is_zero().unwrap();
                let w = check.witness.ok_or_else(|| format!("{name}: mutation of rule {i} undetected"))?;
                ensure(a.evaluate(&w) != mutated.evaluate(&w), || format!("{name}: witness {w} does not separate"))?;
                ensure(w.height() <= check.dimension + 1, || {
                    format!("{name}: witness height {} above dimension {} + 1", w.height(), check.dimension)
                })?;
                mutations += 1;
            }
            Ok(())
        })?;
        slowest = slowest.max(elapsed);
    }
    Ok(format!(
        "{} automata, {mutations} mutations detected, slowest={slowest:.2?}, limit={limit:?} each",
        automata.len()
    ))
}

/// Re-checks an LDP witness against the image automaton without the
/// library's own verifier.
fn check_witness(m: &Wtah, tree: &Tree, p: &Position, p2: &Position, n: usize) -> Result<(), String> {
    ensure(!m.evaluate(tree).is_zero(), || format!("{tree} not in the support"))?;
    let sub = tree.subtree(&p.concat(p2)).map_err(|e| e.to_string())?;
    ensure(sub.height() >= n, || format!("subtree {sub} lower than {n}"))?;
    let runs = m.accepting_runs(tree, 10_000).map_err(|e| e.to_string())?;
    ensure(!runs.is_empty(), || "no accepting run".into())?;
    for run in &runs {
        let at = run.rule_positions(m).into_iter().find(|(_, q)| q == p);
        let (rule, _) = at.ok_or_else(|| format!("no rule applied at {p}"))?;
        let class = m.rules()[rule].class_of(p2).map_or(0, <[Position]>::len);
        ensure(class >= 2, || format!("rule {rule} at {p} does not constrain {p2}"))?;
    }
    Ok(())
}

fn ldp_end_to_end() -> Check {
    let limit = Duration::from_secs(120);
    let mut notes = Vec::new();
    let elapsed = timed(limit, "pipeline", || {
        let run = treehom(&["ldp", "--wtah", path(&fixture("subsequence.wtah"))]);
        ensure(field(&run.stdout, "LDP") == Some("yes"), || format!("subsequence:\n{}", run.stdout))?;

        let dir = tempfile::tempdir().unwrap();
        let out = dir.path().join("hom_image");
        let run = treehom(&[
            "decide",
            "--wta",
            path(&fixture("hom_image.wta")),
            "--hom",
            path(&fixture("hom_image.hom")),
            "--out",
            path(&out),
        ]);
        ensure(run.code == 10 && field(&run.stdout, "RESULT") == Some("NONREGULAR"), || {
            format!("hom image:\n{}", run.stdout)
        })?;
        let get = |key: &str| field(&run.stdout, key).ok_or_else(|| format!("missing {key}"));
        let tree = t(get("witness")?);
        let p: Position = get("witness.rule_position")?.parse().map_err(|e| format!("{e}"))?;
        let p2: Position = get("witness.constrained_position")?.parse().map_err(|e| format!("{e}"))?;
        let n: usize = get("pumping_constant")?.parse().map_err(|e| format!("{e}"))?;
        let image = parse_wtah(&std::fs::read_to_string(out.join("image.wtah")).unwrap()).map_err(|e| e.to_string())?;
        check_witness(&image, &tree, &p, &p2, n)?;
        notes.push(format!("witness {tree} at ({p},{p2}) N={n}"));

        let run = treehom(&["ldp", "--wtah", path(&fixture("fin.wtah"))]);
        ensure(field(&run.stdout, "LDP") == Some("no"), || format!("fin:\n{}", run.stdout))?;
        let run = treehom(&["linearize", "--wtah", path(&fixture("fin.wtah"))]);
        ensure(run.code == 0, || format!("linearize exit {}", run.code))?;
        let g = parse_wtg(&run.stdout).map_err(|e| e.to_string())?;
        let fin = wtah("fin.wtah");
        let trees = enumerate_trees(fin.alphabet(), 3);
        for s in &trees {
            ensure(g.evaluate(s) == fin.evaluate(s), || format!("certificate differs at {s}"))?;
        }
        notes.push(format!("fin certificate agrees on {} trees", trees.len()));

        let out = dir.path().join("relabel");
        let run = treehom(&[
            "decide",
            "--wta",
            path(&fixture("hom_image.wta")),
            "--hom",
            path(&fixture("relabel.hom")),
            "--out",
            path(&out),
        ]);
        ensure(run.code == 0 && field(&run.stdout, "RESULT") == Some("REGULAR"), || {
            format!("relabel:\n{}", run.stdout)
        })?;
        ensure(out.join("certificate.wtg").is_file(), || "no certificate file".into())?;

        let run =
            treehom(&["decide", "--wta", path(&fixture("tetris.wta")), "--hom", path(&fixture("tetris_prime.hom"))]);
        ensure(run.code == 2 && field(&run.stdout, "witness") == Some("(psi(alpha,alpha), beta)"), || {
            format!("h' decide:\n{}", run.stdout)
        })?;
        Ok(())
    })?;
    Ok(format!("{}, time={elapsed:.2?}, limit={limit:?}", notes.join("; ")))
}

/// Rules permuted by a stride and states renamed with a prefix.
fn scramble(a: &Wtg, stride: usize, prefix: &str) -> Wtg {
    let n = a.rules().len();
    let stride = (1..=n).map(|k| stride + k).find(|k| gcd(*k, n) == 1).unwrap_or(1);
    let rules: Vec<_> = (0..n).map(|i| a.rules()[(i * stride + 1) % n].clone()).collect();
    let reordered =
        Wtg::new(a.name(), a.alphabet().clone(), a.states().to_vec(), rules, a.final_weights().clone()).unwrap();
    reordered.rename_states(&|q| State::new(format!("{prefix}{q}")))
}

fn gcd(a: usize, b: usize) -> usize {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

fn canonical(g: &Wtg, prefix: &str) -> String {
    g.rename_states(&|q| State::new(q.as_str().strip_prefix(prefix).unwrap_or(q.as_str()))).sorted().to_string()
}

/// Decision lines stripped of timings and paths.
fn decision_lines(stdout: &str) -> Vec<String> {
    stdout
        .lines()
        .take_while(|l| *l != "[summary]")
        .filter(|l| !l.starts_with("certificate:"))
        .map(str::to_string)
        .collect()
}

fn determinism() -> Check {
    let pairs: &[(&str, &str)] = &[
        ("hom_image.wta", "hom_image.hom"),
        ("hom_image.wta", "relabel.hom"),
        ("fin.wta", "fin.hom"),
        ("subsequence.wta", "subsequence.hom"),
        ("tetris.wta", "tetris.hom"),
        ("tetris.wta", "tetris_prime.hom"),
        ("c.wta", "hom_kappa.hom"),
    ];
    let dir = tempfile::tempdir().unwrap();
    let mut variants = 0;
    for (wta, hom) in pairs {
        let a = wtg(wta);
        let decide = |file: &Path, tag: &str| {
            let out = dir.path().join(format!("{wta}-{hom}-{tag}"));
            let run = treehom(&["decide", "--wta", path(file), "--hom", path(&fixture(hom)), "--out", path(&out)]);
            let cert = std::fs::read_to_string(out.join("certificate.wtg")).ok().map(|s| parse_wtg(&s).unwrap());
            (run, cert)
        };
        let (base, base_cert) = decide(&fixture(wta), "base");
        for (stride, prefix) in [(1, "s_"), (2, "z_"), (5, "v_")] {
            let file = dir.path().join(format!("{wta}-{stride}.wta"));
            std::fs::write(&file, scramble(&a, stride, prefix).to_string()).unwrap();
            let (run, cert) = decide(&file, prefix);
            ensure(run.code == base.code, || format!("{wta}/{hom}: exit {} vs {}", run.code, base.code))?;
            ensure(decision_lines(&run.stdout) == decision_lines(&base.stdout), || {
                format!("{wta}/{hom} stride {stride}:\n{}\nvs\n{}", run.stdout, base.stdout)
            })?;
            let same = match (&cert, &base_cert) {
                (Some(c), Some(b)) => canonical(c, prefix) == canonical(b, ""),
                (None, None) => true,
                _ => false,
            };
            ensure(same, || format!("{wta}/{hom} stride {stride}: certificates differ"))?;
            variants += 1;
        }
    }
    Ok(format!("{} pairs, {variants} scrambled variants, exit codes, witnesses and certificates stable", pairs.len()))
}

fn main() {
    let criteria: [Criterion; 7] = [
        ("worked-example values", worked_examples),
        ("hom-image oracle", image_oracle),
        ("tetris-free checker", tetris_checker),
        ("hat automaton", hat_correctness),
        ("zeroness", zeroness),
        ("LDP and pipeline", ldp_end_to_end),
        ("determinism", determinism),
    ];
    let mut results = BTreeMap::new();
    for (i, (name, check)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let result = check();
        let elapsed = start.elapsed();
        match &result {
            Ok(detail) => println!("PASS criterion {} ({name}): {detail} [{elapsed:.2?}]", i + 1),
            Err(why) => println!("FAIL criterion {} ({name}): {why} [{elapsed:.2?}]", i + 1),
        }
        results.insert(i + 1, result.is_ok());
    }
    let failed: Vec<String> = results.iter().filter(|(_, ok)| !**ok).map(|(i, _)| i.to_string()).collect();
    if failed.is_empty() {
        println!("acceptance: {} of {} criteria passed", results.len(), results.len());
    } else {
        println!("acceptance: failed criteria {}", failed.join(", "));
        std::process::exit(1);
    }
}
