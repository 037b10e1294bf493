//! The release gate: every shipped guarantee checked end to end, printing
//! one PASS/FAIL line per criterion. Run with `--nocapture` to see the
//! lines on success; any failure fails the test with the full report.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::{Duration, Instant};

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use momentforge::algebra::LetterId;
use momentforge::pipeline::{ambient_group, invariant_subgroup};
use momentforge::symmetry::PermGroup;
use momentforge::{
    build_problem, canonical, parse_problem, print_problem, read_sdpa_sparse, solve,
    write_sdpa_sparse, Alphabet, BlockSdp, EvaluationRules, ProblemDefinition,
    RewriteSystemBuilder, RewriteSystem, SignedWord, SolverOptions, SolverStatus, SymmetryMode,
    Word,
};

const CHSH: &str = include_str!("../../../problems/chsh.ncpop");
const I3322: &str = include_str!("../../../problems/i3322.ncpop");
const PROJECTORS: &str = include_str!("../../../problems/projectors.ncpop");

const CHSH_OPTIMUM: f64 = 2.8284271247461903; // 2*sqrt(2)
const I3322_LEVEL2: f64 = 1.2509397216370581;
const I3322_LEVEL3: f64 = 1.2508755620230350;

fn ensure(cond: bool, msg: impl Into<String>) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn parse(text: &str) -> Result<ProblemDefinition, String> {
    parse_problem(text).map_err(|e| format!("shipped problem failed to parse: {e}"))
}

fn panic_text(p: Box<dyn std::any::Any + Send>) -> String {
    if let Some(s) = p.downcast_ref::<&str>() {
        format!("panicked: {s}")
    } else if let Some(s) = p.downcast_ref::<String>() {
        format!("panicked: {s}")
    } else {
        "panicked".into()
    }
}

#[test]
fn acceptance() {
    let criteria: Vec<(&str, Box<dyn FnOnce() -> Result<String, String>>)> = vec![
        ("criterion 1 (CHSH structure)", Box::new(criterion_chsh_structure)),
        ("criterion 2 (CHSH optimum)", Box::new(criterion_chsh_optimum)),
        ("criterion 3 (group orders)", Box::new(criterion_group_orders)),
        ("criterion 4 (I3322 counts)", Box::new(criterion_i3322_counts)),
        ("criterion 5 (I3322 values)", Box::new(criterion_i3322_values)),
        ("criterion 6 (property suites)", Box::new(criterion_properties)),
        ("criterion 7 (parser robustness)", Box::new(criterion_parser_robustness)),
        ("criterion 8 (SDPA round-trip)", Box::new(criterion_sdpa_roundtrip)),
    ];
    let mut failures = Vec::new();
    for (name, body) in criteria {
        let outcome = catch_unwind(AssertUnwindSafe(body)).unwrap_or_else(|p| Err(panic_text(p)));
        match outcome {
            Ok(detail) => println!("PASS {name}: {detail}"),
            Err(reason) => {
                println!("FAIL {name}: {reason}");
                failures.push(format!("{name}: {reason}"));
            }
        }
    }
    assert!(failures.is_empty(), "acceptance failures:\n{}", failures.join("\n"));
}

// -- criterion 1 ------------------------------------------------------------

fn criterion_chsh_structure() -> Result<String, String> {
    let started = Instant::now();
    let pd = parse(CHSH)?;
    let built = build_problem(&pd, SymmetryMode::Full, 1).map_err(|e| e.to_string())?;
    let elapsed = started.elapsed();
    ensure(built.symmetry_order == 16, format!("symmetry order {}", built.symmetry_order))?;
    ensure(
        built.relaxation.num_variables() == 1,
        format!("{} variables", built.relaxation.num_variables()),
    )?;
    ensure(built.sdp.block_dims == vec![5], format!("blocks {:?}", built.sdp.block_dims))?;
    // The single variable is moment index 2; in the 5x5 index matrix it must
    // appear at 1-based (2,4), (2,5), (3,4) with + and (3,5) with -, the
    // diagonal is the constant moment, and everything else vanishes.
    let j = &built.relaxation.index_matrix;
    let expected = |r: usize, c: usize| -> i64 {
        if r == c {
            1
        } else {
            match (r, c) {
                (1, 3) | (1, 4) | (2, 3) => 2,
                (2, 4) => -2,
                _ => 0,
            }
        }
    };
    for r in 0..5 {
        for c in r..5 {
            let want = expected(r, c);
            ensure(
                j[r][c] == want,
                format!("index matrix ({},{}) = {}, expected {}", r + 1, c + 1, j[r][c], want),
            )?;
        }
    }
    ensure(elapsed < Duration::from_secs(1), format!("took {elapsed:.3?}"))?;
    Ok(format!("1 variable, 5x5 pattern exact, built in {elapsed:.3?}"))
}

// -- criterion 2 ------------------------------------------------------------

fn criterion_chsh_optimum() -> Result<String, String> {
    let pd = parse(CHSH)?;
    let opts = SolverOptions::default();
    let mut values = Vec::new();
    for mode in [SymmetryMode::Full, SymmetryMode::None] {
        let built = build_problem(&pd, mode, 1).map_err(|e| e.to_string())?;
        let sol = solve(&built.sdp, &opts);
        ensure(
            sol.status == SolverStatus::Optimal,
            format!("{mode:?} ended {:?}", sol.status),
        )?;
        ensure(
            (sol.objective_value - CHSH_OPTIMUM).abs() < 1e-8,
            format!("{mode:?} value {}", sol.objective_value),
        )?;
        values.push(sol.objective_value);
    }
    ensure(
        (values[0] - values[1]).abs() < 1e-8,
        format!("modes disagree: {} vs {}", values[0], values[1]),
    )?;
    Ok(format!("sym {:.12}, unsym {:.12}, both within 1e-8 of 2*sqrt(2)", values[0], values[1]))
}

// -- criterion 3 ------------------------------------------------------------

fn criterion_group_orders() -> Result<String, String> {
    let t1 = Instant::now();
    let chsh = parse(CHSH)?;
    let ambient = ambient_group(&chsh).map_err(|e| e.to_string())?;
    ensure(ambient.order() == 128, format!("CHSH ambient order {}", ambient.order()))?;
    let subgroup = invariant_subgroup(&chsh, &ambient).map_err(|e| e.to_string())?;
    ensure(subgroup.order() == 16, format!("CHSH symmetry order {}", subgroup.order()))?;
    let chsh_time = t1.elapsed();
    ensure(chsh_time < Duration::from_secs(1), format!("CHSH took {chsh_time:.3?}"))?;

    let t2 = Instant::now();
    let i3322 = parse(I3322)?;
    let ambient = ambient_group(&i3322).map_err(|e| e.to_string())?;
    let group = invariant_subgroup(&i3322, &ambient).map_err(|e| e.to_string())?;
    ensure(group.order() == 8, format!("I3322 symmetry order {}", group.order()))?;
    ensure(!group.is_abelian(), "I3322 group is abelian".to_string())?;
    ensure(
        group.elements().iter().any(|g| PermGroup::element_order(g) == 4),
        "I3322 group has no order-4 element".to_string(),
    )?;
    let i3322_time = t2.elapsed();
    ensure(i3322_time < Duration::from_secs(1), format!("I3322 took {i3322_time:.3?}"))?;
    Ok(format!(
        "CHSH 128/16 in {chsh_time:.3?}; I3322 order 8, nonabelian, order-4 element, in {i3322_time:.3?}"
    ))
}

// -- criterion 4 ------------------------------------------------------------

fn criterion_i3322_counts() -> Result<String, String> {
    let pd = parse(I3322)?;
    let mut timings = Vec::new();
    for (level, basis, unsym, sym, half) in [(3, 88, 867, 124, 44), (4, 244, 4491, 593, 122)] {
        let t = Instant::now();
        let plain = build_problem(&pd, SymmetryMode::None, level).map_err(|e| e.to_string())?;
        ensure(
            plain.relaxation.basis.size() == basis,
            format!("level {level} basis {}", plain.relaxation.basis.size()),
        )?;
        ensure(
            plain.relaxation.num_variables() == unsym,
            format!("level {level} unsym vars {}", plain.relaxation.num_variables()),
        )?;
        let full = build_problem(&pd, SymmetryMode::Full, level).map_err(|e| e.to_string())?;
        ensure(
            full.relaxation.num_variables() == sym,
            format!("level {level} sym vars {}", full.relaxation.num_variables()),
        )?;
        let split = build_problem(&pd, SymmetryMode::Split, level).map_err(|e| e.to_string())?;
        ensure(
            split.sdp.block_dims == vec![half, half],
            format!("level {level} split blocks {:?}", split.sdp.block_dims),
        )?;
        let elapsed = t.elapsed();
        if level == 4 {
            ensure(elapsed < Duration::from_secs(60), format!("level 4 took {elapsed:.3?}"))?;
        }
        timings.push(format!("level {level} in {elapsed:.3?}"));
    }
    Ok(format!("88/867/124/44+44 and 244/4491/593/122+122 exact; {}", timings.join(", ")))
}

// -- criterion 5 ------------------------------------------------------------

fn criterion_i3322_values() -> Result<String, String> {
    let pd = parse(I3322)?;
    let opts = SolverOptions::default();

    let t = Instant::now();
    let level2 = build_problem(&pd, SymmetryMode::Full, 2).map_err(|e| e.to_string())?;
    let sol2 = solve(&level2.sdp, &opts);
    let t2 = t.elapsed();
    ensure(sol2.status == SolverStatus::Optimal, format!("level 2 ended {:?}", sol2.status))?;
    ensure(
        (sol2.objective_value - I3322_LEVEL2).abs() < 1e-6,
        format!("level 2 value {}", sol2.objective_value),
    )?;
    ensure(t2 < Duration::from_secs(120), format!("level 2 took {t2:.3?}"))?;

    let t = Instant::now();
    let level3 = build_problem(&pd, SymmetryMode::Split, 3).map_err(|e| e.to_string())?;
    ensure(
        level3.relaxation.num_variables() == 124,
        format!("level 3 vars {}", level3.relaxation.num_variables()),
    )?;
    ensure(
        level3.sdp.block_dims == vec![44, 44],
        format!("level 3 blocks {:?}", level3.sdp.block_dims),
    )?;
    let sol3 = solve(&level3.sdp, &opts);
    let t3 = t.elapsed();
    ensure(sol3.status == SolverStatus::Optimal, format!("level 3 ended {:?}", sol3.status))?;
    ensure(
        (sol3.objective_value - I3322_LEVEL3).abs() < 1e-6,
        format!("level 3 value {}", sol3.objective_value),
    )?;
    ensure(t3 < Duration::from_secs(120), format!("level 3 took {t3:.3?}"))?;
    Ok(format!(
        "level 2 = {:.10} in {t2:.3?}; level 3 (124 vars, 44+44) = {:.10} in {t3:.3?}",
        sol2.objective_value, sol3.objective_value
    ))
}

// -- criterion 6 ------------------------------------------------------------

fn random_word(rng: &mut ChaCha8Rng, alphabet: &Alphabet, max_len: usize) -> Word {
    let len = rng.gen_range(0..=max_len);
    let n = alphabet.size() as LetterId;
    Word::from_letters((0..len).map(|_| rng.gen_range(1..=n)).collect())
}

fn normal_form_properties(rs: &RewriteSystem, cases: usize, seed: u64) -> Result<(), String> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let alphabet = rs.alphabet();
    for k in 0..cases {
        let u = random_word(&mut rng, alphabet, 8);
        let nf = rs.normal_form_word(&u).map_err(|e| format!("case {k}: {e}"))?;
        let again = rs.normal_form(&nf).map_err(|e| format!("case {k}: {e}"))?;
        ensure(again == nf, format!("case {k}: normal form is not idempotent"))?;

        let v = random_word(&mut rng, alphabet, 8);
        let direct = rs
            .normal_form_word(&u.concat(&v))
            .map_err(|e| format!("case {k}: {e}"))?;
        let nf_u = rs.normal_form_word(&u).map_err(|e| format!("case {k}: {e}"))?;
        let nf_v = rs.normal_form_word(&v).map_err(|e| format!("case {k}: {e}"))?;
        let staged = rs
            .normal_form(&nf_u.concat(&nf_v))
            .map_err(|e| format!("case {k}: {e}"))?;
        ensure(direct == staged, format!("case {k}: normal form is not a congruence"))?;
    }
    Ok(())
}

fn criterion_properties() -> Result<String, String> {
    let chsh = parse(CHSH)?;
    let i3322 = parse(I3322)?;
    let projectors = parse(PROJECTORS)?;

    // Normal-form idempotence and congruence, 10^4 random words total.
    normal_form_properties(&chsh.rewrite, 4_000, 11)?;
    normal_form_properties(&i3322.rewrite, 3_000, 12)?;
    normal_form_properties(&projectors.rewrite, 3_000, 13)?;

    // Confluence holds for every shipped rule set up to length 6...
    for (name, pd) in [("chsh", &chsh), ("i3322", &i3322), ("projectors", &projectors)] {
        let report = pd.rewrite.check_confluence(6);
        ensure(
            report.is_confluent(),
            format!("{name} rules flagged non-confluent: {} issues", report.issues.len()),
        )?;
    }
    // ...and the checker detects a planted non-confluent system:
    // xy -> 1, yx -> 1, xx -> x  joins xxy to both x and 1.
    let mut planted = RewriteSystemBuilder::new(Alphabet::plain(2));
    planted.set_rule(1, 2, &SignedWord::one()).map_err(|e| e.to_string())?;
    planted.set_rule(2, 1, &SignedWord::one()).map_err(|e| e.to_string())?;
    planted
        .set_rule(1, 1, &SignedWord::positive(Word::single(1)))
        .map_err(|e| e.to_string())?;
    let planted = planted.build().map_err(|e| e.to_string())?;
    ensure(
        !planted.check_confluence(6).is_confluent(),
        "planted non-confluent system was not detected".to_string(),
    )?;

    // Homomorphism laws on 10^3 random cases over the CHSH symmetry group.
    let ambient = ambient_group(&chsh).map_err(|e| e.to_string())?;
    let group = invariant_subgroup(&chsh, &ambient).map_err(|e| e.to_string())?;
    let rs = &chsh.rewrite;
    let alphabet = rs.alphabet();
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    for k in 0..1_000 {
        let g = &group.elements()[rng.gen_range(0..group.order())];
        let u = SignedWord::positive(random_word(&mut rng, alphabet, 6));
        let v = SignedWord::positive(random_word(&mut rng, alphabet, 6));
        let product_first = g
            .apply_signed(&rs.normal_form(&u.concat(&v)).map_err(|e| e.to_string())?, rs)
            .map_err(|e| e.to_string())?;
        let image_first = rs
            .normal_form(
                &g.apply_signed(&u, rs)
                    .map_err(|e| e.to_string())?
                    .concat(&g.apply_signed(&v, rs).map_err(|e| e.to_string())?),
            )
            .map_err(|e| e.to_string())?;
        ensure(product_first == image_first, format!("case {k}: action is not multiplicative"))?;

        let adjoint_first = g
            .apply_signed(&rs.normal_form(&u.adjoint(alphabet)).map_err(|e| e.to_string())?, rs)
            .map_err(|e| e.to_string())?;
        let image_adjoint = rs
            .normal_form(&g.apply_signed(&u, rs).map_err(|e| e.to_string())?.adjoint(alphabet))
            .map_err(|e| e.to_string())?;
        ensure(adjoint_first == image_adjoint, format!("case {k}: action does not commute with adjoint"))?;
    }

    // Canonical-representative idempotence and orbit consistency on 10^3
    // random monomials.
    let eval = EvaluationRules::real();
    let cap = 1_000_000;
    let mut rng = ChaCha8Rng::seed_from_u64(22);
    for k in 0..1_000 {
        let w = SignedWord::positive(random_word(&mut rng, alphabet, 6));
        let c1 = canonical(&w, &group, &eval, rs, cap).map_err(|e| e.to_string())?;
        let c2 = canonical(&c1, &group, &eval, rs, cap).map_err(|e| e.to_string())?;
        ensure(c1 == c2, format!("case {k}: canonical is not idempotent"))?;
        let g = &group.elements()[rng.gen_range(0..group.order())];
        let moved = g.apply_signed(&w, rs).map_err(|e| e.to_string())?;
        let c3 = canonical(&moved, &group, &eval, rs, cap).map_err(|e| e.to_string())?;
        ensure(c1 == c3, format!("case {k}: canonical differs across the orbit"))?;
    }

    // Moment-matrix invariance for every group element, CHSH and I3322.
    for (name, pd, level) in [("chsh", &chsh, 1), ("i3322", &i3322, 2)] {
        let built = build_problem(pd, SymmetryMode::Full, level).map_err(|e| e.to_string())?;
        let ambient = ambient_group(pd).map_err(|e| e.to_string())?;
        let group = invariant_subgroup(pd, &ambient).map_err(|e| e.to_string())?;
        let j = &built.relaxation.index_matrix;
        let n = built.relaxation.basis.size();
        for g in group.elements() {
            let action = built.relaxation.basis.action_of(g, &pd.rewrite).map_err(|e| e.to_string())?;
            for r in 0..n {
                for c in 0..n {
                    let pr = action[r];
                    let pc = action[c];
                    let sign = (pr.signum() * pc.signum()) as i64;
                    let moved = j[(pr.unsigned_abs() as usize) - 1][(pc.unsigned_abs() as usize) - 1];
                    ensure(
                        moved == sign * j[r][c],
                        format!("{name}: moment matrix not invariant at ({r},{c})"),
                    )?;
                }
            }
        }
    }

    // Split block-diagonalization preserves the slack spectrum at 100
    // random multiplier vectors.
    let full = build_problem(&i3322, SymmetryMode::Full, 2).map_err(|e| e.to_string())?;
    let split = build_problem(&i3322, SymmetryMode::Split, 2).map_err(|e| e.to_string())?;
    let m = full.sdp.num_variables();
    ensure(split.sdp.num_variables() == m, "split changed the variable count".to_string())?;
    let mut rng = ChaCha8Rng::seed_from_u64(23);
    for k in 0..100 {
        let y: Vec<f64> = (0..m).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let single = slack_eigenvalues(&full.sdp, &y);
        let pieces = slack_eigenvalues(&split.sdp, &y);
        ensure(single.len() == pieces.len(), format!("case {k}: eigenvalue counts differ"))?;
        let worst = single
            .iter()
            .zip(pieces.iter())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0_f64, f64::max);
        ensure(worst < 1e-9, format!("case {k}: spectra differ by {worst:.3e}"))?;
    }

    Ok("normal form 10^4, confluence + planted, homomorphism 10^3, canonical 10^3, invariance all g, split spectra 100".into())
}

/// All slack-matrix eigenvalues of C + sum_i y_i A_i, sorted ascending.
fn slack_eigenvalues(sdp: &BlockSdp, y: &[f64]) -> Vec<f64> {
    let mut all = Vec::new();
    for blk in 0..sdp.block_dims.len() {
        let mut s: DMatrix<f64> = sdp.c[blk].to_dense();
        for (v, yv) in y.iter().enumerate() {
            s += sdp.a[v][blk].to_dense() * *yv;
        }
        all.extend(s.symmetric_eigen().eigenvalues.iter().copied());
    }
    all.sort_by(|a, b| a.partial_cmp(b).unwrap());
    all
}

// -- criterion 7 ------------------------------------------------------------

fn mutate(seeds: &[&str], rng: &mut ChaCha8Rng) -> String {
    let mut bytes = seeds[rng.gen_range(0..seeds.len())].as_bytes().to_vec();
    for _ in 0..rng.gen_range(1..=4) {
        match rng.gen_range(0..6) {
            0 => {
                if !bytes.is_empty() {
                    let i = rng.gen_range(0..bytes.len());
                    bytes[i] = rng.gen();
                }
            }
            1 => {
                if !bytes.is_empty() {
                    let i = rng.gen_range(0..bytes.len());
                    bytes.truncate(i);
                }
            }
            2 => {
                if bytes.len() >= 2 {
                    let a = rng.gen_range(0..bytes.len());
                    let b = rng.gen_range(a..bytes.len());
                    let slice: Vec<u8> = bytes[a..b].to_vec();
                    let at = rng.gen_range(0..=bytes.len());
                    bytes.splice(at..at, slice);
                }
            }
            3 => {
                const TOKENS: &[&[u8]] = &[
                    b"letters ", b"rule ", b"generator ", b"objective ", b"option ",
                    b"constraint ", b"adjoint ", b"[", b"]", b"(", b")", b"->", b"..",
                    b"*", b"-", b"/", b"9999", b"1e308", b"0.0", b"\n", b"#", b",", b":",
                ];
                let t = TOKENS[rng.gen_range(0..TOKENS.len())];
                let at = rng.gen_range(0..=bytes.len());
                bytes.splice(at..at, t.iter().copied());
            }
            4 => {
                let digits: Vec<usize> = bytes
                    .iter()
                    .enumerate()
                    .filter(|(_, b)| b.is_ascii_digit())
                    .map(|(i, _)| i)
                    .collect();
                if !digits.is_empty() {
                    let i = digits[rng.gen_range(0..digits.len())];
                    bytes[i] = b'0' + rng.gen_range(0..10);
                }
            }
            _ => {
                let other = seeds[rng.gen_range(0..seeds.len())].as_bytes();
                if !bytes.is_empty() && !other.is_empty() {
                    let a = rng.gen_range(0..bytes.len());
                    let b = rng.gen_range(0..other.len());
                    bytes.truncate(a);
                    bytes.extend_from_slice(&other[b..]);
                }
            }
        }
    }
    bytes.truncate(16_384);
    String::from_utf8_lossy(&bytes).into_owned()
}

fn criterion_parser_robustness() -> Result<String, String> {
    // Round-trip identity on the shipped examples first.
    for (name, text) in [("chsh", CHSH), ("i3322", I3322), ("projectors", PROJECTORS)] {
        let pd = parse(text)?;
        let printed = print_problem(&pd);
        let reparsed = parse_problem(&printed)
            .map_err(|e| format!("{name}: printed form failed to parse: {e}"))?;
        ensure(reparsed == pd, format!("{name}: print/parse round trip changed the problem"))?;
    }

    // 10^5 deterministic mutations: no panics, and every rejection carries
    // a valid position.
    let seeds = [CHSH, I3322, PROJECTORS];
    let mut rng = ChaCha8Rng::seed_from_u64(0x4D464F52);
    let mut accepted = 0usize;
    let mut rejected = 0usize;
    let started = Instant::now();
    let prev_hook = std::panic::take_hook();
    std::panic::set_hook(Box::new(|_| {}));
    let mut failure: Option<String> = None;
    for k in 0..100_000usize {
        let input = mutate(&seeds, &mut rng);
        let result = catch_unwind(AssertUnwindSafe(|| parse_problem(&input)));
        match result {
            Err(_) => {
                failure = Some(format!("input {k} caused a panic"));
                break;
            }
            Ok(Ok(_)) => accepted += 1,
            Ok(Err(e)) => {
                if e.line < 1 || e.col < 1 {
                    failure = Some(format!("input {k} rejected without a position: {e}"));
                    break;
                }
                rejected += 1;
            }
        }
    }
    std::panic::set_hook(prev_hook);
    if let Some(msg) = failure {
        return Err(msg);
    }
    let elapsed = started.elapsed();
    Ok(format!(
        "round trips exact; 100000 mutated inputs in {elapsed:.3?} ({accepted} parsed, {rejected} rejected, 0 crashes)"
    ))
}

// -- criterion 8 ------------------------------------------------------------

fn relative_error(a: f64, b: f64) -> f64 {
    if a == b {
        0.0
    } else {
        (a - b).abs() / a.abs().max(b.abs())
    }
}

fn max_sdp_roundtrip_error(sdp: &BlockSdp) -> Result<f64, String> {
    let mut buffer: Vec<u8> = Vec::new();
    write_sdpa_sparse(sdp, &mut buffer).map_err(|e| e.to_string())?;
    let text = String::from_utf8(buffer).map_err(|e| e.to_string())?;
    let back = read_sdpa_sparse(&text).map_err(|e| format!("reader rejected our own export: {e}"))?;
    ensure(back.block_dims == sdp.block_dims, "block structure changed".to_string())?;
    ensure(back.num_variables() == sdp.num_variables(), "variable count changed".to_string())?;
    let mut worst = 0.0_f64;
    for (x, y) in sdp.b.iter().zip(back.b.iter()) {
        worst = worst.max(relative_error(*x, *y));
    }
    for blk in 0..sdp.block_dims.len() {
        let c0 = sdp.c[blk].to_dense();
        let c1 = back.c[blk].to_dense();
        worst = worst.max(
            c0.iter().zip(c1.iter()).map(|(x, y)| relative_error(*x, *y)).fold(0.0, f64::max),
        );
        for v in 0..sdp.num_variables() {
            let a0 = sdp.a[v][blk].to_dense();
            let a1 = back.a[v][blk].to_dense();
            worst = worst.max(
                a0.iter().zip(a1.iter()).map(|(x, y)| relative_error(*x, *y)).fold(0.0, f64::max),
            );
        }
    }
    Ok(worst)
}

fn criterion_sdpa_roundtrip() -> Result<String, String> {
    let cases: [(&str, &str, SymmetryMode, usize); 5] = [
        ("chsh/full", CHSH, SymmetryMode::Full, 1),
        ("chsh/none", CHSH, SymmetryMode::None, 1),
        ("i3322/full", I3322, SymmetryMode::Full, 2),
        ("i3322/split", I3322, SymmetryMode::Split, 2),
        ("projectors/none", PROJECTORS, SymmetryMode::None, 2),
    ];
    let mut worst = 0.0_f64;
    for (name, text, mode, level) in cases {
        let pd = parse(text)?;
        let built = build_problem(&pd, mode, level).map_err(|e| format!("{name}: {e}"))?;
        let err = max_sdp_roundtrip_error(&built.sdp).map_err(|e| format!("{name}: {e}"))?;
        ensure(err < 1e-15, format!("{name}: round-trip relative error {err:.3e}"))?;
        worst = worst.max(err);
    }
    Ok(format!("5 builds round-tripped, worst relative error {worst:.2e}"))
}
