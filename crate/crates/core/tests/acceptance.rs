//! End-to-end acceptance run. Prints one line per criterion and exits nonzero
//! if any criterion fails.

use std::sync::Arc;
use std::time::{Duration, Instant};

use num_traits::One;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use pseudomeasure::boundary::{q, Mat2, P1, Q};
use pseudomeasure::coeff::Poly;
use pseudomeasure::dedekind::round_trip_check;
use pseudomeasure::farey::{apply_moves, primitive_chain, random_loop, randomize_chain, reduce_loop};
use pseudomeasure::gauss::{limiting_pair, limiting_report, CosetModule};
use pseudomeasure::levy::{levy_eval, lm_coefficient, verify_dirichlet_identity, LevyFunction, Side as LevySide};
use pseudomeasure::measure::{Bounds, Group, PseudoMeasure, Universal};
use pseudomeasure::modular::{basis_measures, hecke_matrix, modularity_check, seed_dimension_naive, seed_space, FromSeed};
use pseudomeasure::nc::{
    iterated_measure, nc_from_seed, nc_modularity_check, nc_validate, random_step_form, NcAction, NcPseudoMeasure,
    TruncatedTensor,
};
use pseudomeasure::quadratic::{lyapunov_estimate, PeriodicCF};
use pseudomeasure::tree::{
    change_of_variable, current_from_measure, current_validate, kernel_function_check, kernel_functions,
    measure_from_current, measure_from_kernel_function, random_element, random_function, subtree,
    LocallyConstantFunction,
};

const SEED: u64 = 0x5EED;
const CRITERION_1_BUDGET: Duration = Duration::from_secs(60);
const CRITERION_4_BUDGET: Duration = Duration::from_secs(30);
const LIMIT_TOLERANCE: f64 = 1e-4;
const LYAPUNOV_TOLERANCE: f64 = 1e-3;
const LIMIT_TERMS: usize = 100_000;
const LYAPUNOV_TERMS: usize = 10_000;

type Outcome = Result<String, String>;

fn ensure(ok: bool, msg: impl Into<String>) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn rng(k: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(SEED + k)
}

fn random_point<R: Rng>(rng: &mut R) -> P1 {
    if rng.gen_bool(0.1) {
        P1::infinity()
    } else {
        P1::frac(rng.gen_range(-30..=30), rng.gen_range(1..=25))
    }
}

fn random_pair<R: Rng>(rng: &mut R) -> (P1, P1) {
    loop {
        let (a, b) = (random_point(rng), random_point(rng));
        if a != b {
            return (a, b);
        }
    }
}

fn seeds() -> Vec<FromSeed<Poly>> {
    [2, 10].into_iter().flat_map(|w| basis_measures(&seed_space(w))).collect()
}

fn criterion_1() -> Outcome {
    let start = Instant::now();
    let mut count = 0;
    for w in [2, 10] {
        for (i, mu) in basis_measures(&seed_space(w)).iter().enumerate() {
            let r = verify_dirichlet_identity(mu, 30).map_err(|e| e.to_string())?;
            ensure(r.pass, format!("w={w} seed {i}: mismatch at n = {:?}", r.mismatches()))?;
            count += 1;
        }
    }
    let t = start.elapsed();
    ensure(t < CRITERION_1_BUDGET, format!("took {t:.1?}"))?;
    Ok(format!("{count} seeds, n = 1..30 exact, {t:.1?}"))
}

/// `dim M_k` for the full modular group.
fn modular_forms_dim(k: usize) -> usize {
    if k % 2 == 1 {
        0
    } else if k % 12 == 2 {
        k / 12
    } else {
        k / 12 + 1
    }
}

fn criterion_2() -> Outcome {
    for (w, expected) in [(2, 1), (10, 3)] {
        let cusp = modular_forms_dim(w + 2) - 1;
        let oracle = 2 * cusp + 1;
        ensure(oracle == expected, format!("oracle for w={w} gives {oracle}"))?;
        let dim = seed_space(w).basis.len();
        let naive = seed_dimension_naive(w);
        ensure(dim == oracle && naive == oracle, format!("w={w}: kernel {dim}, naive {naive}, expected {oracle}"))?;
    }
    Ok("w=2 -> 1, w=10 -> 3".into())
}

/// Coefficient of q² in `q ∏ (1 − qⁿ)²⁴`.
fn ramanujan_tau_2() -> i64 {
    let mut series = vec![0i64; 3];
    series[1] = 1;
    for n in 1..3 {
        for _ in 0..24 {
            for k in (n..3).rev() {
                series[k] -= series[k - n];
            }
        }
    }
    series[2]
}

fn criterion_3() -> Outcome {
    let tau2 = ramanujan_tau_2();
    let r = hecke_matrix(2, 10).map_err(|e| e.to_string())?;
    let hit = r.normalized_eigenvalues.iter().any(|e| e.is(tau2, 2));
    let spectrum: Vec<String> = r.normalized_eigenvalues.iter().map(|e| format!("{}^{}", e.value, e.multiplicity)).collect();
    ensure(hit, format!("expected {tau2} with multiplicity 2, got {spectrum:?}"))?;
    Ok(format!("spectrum {}", spectrum.join(", ")))
}

fn criterion_4() -> Outcome {
    let start = Instant::now();
    let mut rng = rng(4);
    let seed = basis_measures(&seed_space(10)).remove(1);
    for i in 0..100 {
        let (a, b) = random_pair(&mut rng);
        let base = primitive_chain(&a, &b);
        let (ref_seed, ref_free) = (seed.eval_chain(&base), Universal.eval_chain(&base));
        for _ in 0..3 {
            let steps = rng.gen_range(1..=6);
            let c = randomize_chain(&base, steps, &mut rng);
            ensure(c.first().map(|s| &s.from) == Some(&a) && c.last().map(|s| &s.to) == Some(&b), format!("pair {i}: endpoints moved"))?;
            ensure(seed.eval_chain(&c) == ref_seed, format!("pair {i} ({a}, {b}): seed measure differs"))?;
            ensure(Universal.eval_chain(&c) == ref_free, format!("pair {i} ({a}, {b}): universal measure differs"))?;
        }
    }
    for i in 0..100 {
        let lp = random_loop(12, &mut rng);
        let moves = reduce_loop(&lp).map_err(|e| format!("loop {i}: {e}"))?;
        let rest = apply_moves(&lp, &moves).map_err(|e| format!("loop {i}: {e}"))?;
        ensure(rest.is_empty(), format!("loop {i}: {} segments left", rest.len()))?;
    }
    let t = start.elapsed();
    ensure(t < CRITERION_4_BUDGET, format!("took {t:.1?}"))?;
    Ok(format!("100 pairs x 3 chains, 100 loops, {t:.1?}"))
}

fn criterion_5() -> Outcome {
    let mut checked = 0;
    for mu in seeds() {
        let r = round_trip_check(Arc::new(mu), 6, 2).map_err(|e| e.to_string())?;
        ensure(r.pass, format!("seed measure: {:?}", r.witness))?;
        checked += r.checked;
    }
    let r = round_trip_check(Arc::new(Universal), 6, 2).map_err(|e| e.to_string())?;
    ensure(r.pass, format!("universal measure: {:?}", r.witness))?;
    checked += r.checked;
    Ok(format!("{checked} segment values"))
}

fn criterion_6() -> Outcome {
    let (vertices, edges) = subtree(6);
    for mu in seeds() {
        let mu = Arc::new(mu);
        let c = current_from_measure(mu.clone());
        let r = current_validate(&c, 6);
        ensure(r.pass, format!("current: {:?}", r.witness))?;
        let back = measure_from_current(c, 6).map_err(|e| e.to_string())?;
        for e in &edges {
            let s = e.interval();
            ensure(back.premeasure(&s) == mu.premeasure(&s), format!("measure differs on {s}"))?;
            let r = s.reversed();
            ensure(back.premeasure(&r) == mu.premeasure(&r), format!("measure differs on {r}"))?;
        }
        let again = current_from_measure(back);
        let c = current_from_measure(mu.clone());
        for e in &edges {
            ensure(again.value(e) == c.value(e), format!("current differs on {e}"))?;
        }
    }
    Ok(format!("{} vertices, {} edges", vertices.len(), edges.len()))
}

fn criterion_7() -> Outcome {
    let mut rng = rng(7);
    let seed = basis_measures(&seed_space(10)).remove(2);
    for i in 0..50 {
        let terms = rng.gen_range(1..=4);
        let f = random_function(&mut rng, terms, 4);
        let len = rng.gen_range(1..=6);
        let g = random_element(&mut rng, len);
        let (l, r) = change_of_variable(&f, &g, &Universal);
        ensure(l == r, format!("sample {i}: universal measure, f = {f}, g = {g}"))?;
        let (l, r) = change_of_variable(&f, &g, &seed);
        ensure(l == r, format!("sample {i}: seed measure, f = {f}, g = {g}"))?;
    }
    let mut fs = vec![LocallyConstantFunction::zero()];
    for k in 0..=3 {
        fs.extend(kernel_functions(k));
    }
    let gens = [Mat2::sigma(), Mat2::tau(), Mat2::translation(1)];
    let bounds = Bounds { depth: 6, max_den: 15, shift: 1 };
    for f in &fs {
        ensure(kernel_function_check(f).pass, format!("{f} fails the kernel conditions"))?;
        for mu in seeds() {
            let m = measure_from_kernel_function(f, &mu).map_err(|e| e.to_string())?;
            let r = modularity_check(&m, &gens, &bounds);
            ensure(r.pass, format!("{f}: {:?}", r.witness))?;
        }
    }
    Ok(format!("50 substitutions, {} kernel functions up to depth 3", fs.len()))
}

fn poly_action(w: usize) -> NcAction<TruncatedTensor> {
    Arc::new(move |u: &TruncatedTensor, g: &Mat2| {
        let m = pseudomeasure::modular::action_matrix(w, g);
        u.act_linear(&m)
    })
}

fn criterion_8() -> Outcome {
    let mut rng = rng(8);
    for i in 0..50 {
        let dim = rng.gen_range(1..=3);
        let forms = (0..dim).map(|_| random_step_form(&mut rng)).collect();
        let j = iterated_measure(forms, 3).map_err(|e| e.to_string())?;
        let (a, b) = random_pair(&mut rng);
        let v = j.eval(&a, &b);
        let r = v.shuffle_report(3);
        ensure(r.pass, format!("tuple {i} on ({a}, {b}): {:?}", r.witness))?;
    }
    for i in 0..50 {
        let forms = (0..2).map(|_| random_step_form(&mut rng)).collect();
        let j = iterated_measure(forms, 3).map_err(|e| e.to_string())?;
        let (a, b) = random_pair(&mut rng);
        let base = primitive_chain(&a, &b);
        let direct = j.direct(&a, &b);
        ensure(j.eval_chain(&base) == direct, format!("pair {i}: canonical chain"))?;
        let steps = rng.gen_range(1..=5);
        let c = randomize_chain(&base, steps, &mut rng);
        ensure(j.eval_chain(&c) == direct, format!("pair {i} ({a}, {b}): randomized chain"))?;
    }
    let gens = [Mat2::sigma(), Mat2::tau(), Mat2::translation(1), Mat2::from_i64(2, 1, 1, 1)];
    let bounds = Bounds { depth: 3, max_den: 8, shift: 1 };
    let mut built = 0;
    for w in [2, 10] {
        let act = poly_action(w);
        for mu in basis_measures(&seed_space(w)) {
            let u = TruncatedTensor::exp(&TruncatedTensor::linear(1, mu.seed().coeffs()));
            let j = nc_from_seed(u, act.clone()).map_err(|e| e.to_string())?;
            ensure(nc_validate(&j, &bounds).pass, format!("w={w}: not a pre-measure"))?;
            let r = nc_modularity_check(&j, &act, &gens, &bounds);
            ensure(r.pass, format!("w={w}: {:?}", r.witness))?;
            built += 1;
        }
    }
    Ok(format!("50 shuffle tuples, 50 pairs, {built} seed-built measures"))
}

fn criterion_9() -> Outcome {
    let m = CosetModule::gamma0(11, 1).map_err(|e| e.to_string())?;
    let cf = |s: &str| s.parse::<PeriodicCF>().map_err(|e| e.to_string());
    let golden = cf("[(1)]")?;
    let root2 = cf("[1;(2)]")?;
    let mut gaps = Vec::new();
    for theta in [&golden, &root2] {
        let r = limiting_report(&m, theta, Some(LIMIT_TERMS)).map_err(|e| e.to_string())?;
        let gap = r.gap.expect("numeric route requested");
        ensure(gap < LIMIT_TOLERANCE, format!("{theta}: gap {gap:.2e}"))?;
        gaps.push(gap);
    }
    let third = cf("[0;(1,3)]")?;
    let pair = |x: &PeriodicCF, y: &PeriodicCF| limiting_pair(&m, x, y).map_err(|e| e.to_string());
    ensure(pair(&golden, &golden)?.is_zero(), "μ(θ, θ) ≠ 0")?;
    let ab = pair(&golden, &root2)?;
    ensure(pair(&root2, &golden)? == ab.neg(), "antisymmetry fails")?;
    let cycle = ab.add(&pair(&root2, &third)?).add(&pair(&third, &golden)?);
    ensure(cycle.is_zero(), "triangle identity fails")?;
    let phi = (1.0 + 5f64.sqrt()) / 2.0;
    let exact = [(golden.clone(), 2.0 * phi.ln()), (root2.clone(), 2.0 * (1.0 + 2f64.sqrt()).ln())];
    let mut lgaps = Vec::new();
    for (theta, value) in &exact {
        let est = lyapunov_estimate(theta, LYAPUNOV_TERMS).map_err(|e| e.to_string())?;
        let gap = (est - value).abs();
        ensure(gap < LYAPUNOV_TOLERANCE, format!("{theta}: λ estimate {est} vs {value}"))?;
        ensure((theta.lyapunov().to_f64() - value).abs() < 1e-12, format!("{theta}: closed-form λ"))?;
        lgaps.push(gap);
    }
    Ok(format!(
        "limit gaps {:.1e}, {:.1e}; λ gaps {:.1e}, {:.1e}",
        gaps[0], gaps[1], lgaps[0], lgaps[1]
    ))
}

fn criterion_10() -> Outcome {
    let mut rng = rng(10);
    let mu = basis_measures(&seed_space(10)).remove(0);
    let f = LevyFunction::from_denominators(Poly::zero(10), move |side, c, d| {
        let d = u64::try_from(d).unwrap_or(1).max(1);
        let v = lm_coefficient(&mu, d.min(12)).times(c);
        match side {
            LevySide::Minus => v,
            LevySide::Plus => v.neg(),
        }
    });
    for i in 0..50 {
        let den = rng.gen_range(2..=500);
        let num = rng.gen_range(1..den);
        let alpha = q(num, den);
        let depth = rng.gen_range(5..=30);
        let x = levy_eval(&f, &alpha, depth);
        let y = levy_eval(&f, &(alpha.clone() + Q::one()), depth);
        ensure(x == y, format!("sample {i}: α = {alpha}, depth {depth}"))?;
    }
    Ok("50 rationals".into())
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 10] = [
        ("Dirichlet-series identity", criterion_1),
        ("seed dimensions", criterion_2),
        ("Hecke eigenvalue", criterion_3),
        ("chain independence", criterion_4),
        ("Dedekind round trip", criterion_5),
        ("current dictionary", criterion_6),
        ("integration laws", criterion_7),
        ("non-commutative layer", criterion_8),
        ("limiting measures", criterion_9),
        ("Levy periodicity", criterion_10),
    ];
    let mut failed = 0;
    for (k, (name, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = std::panic::catch_unwind(run).unwrap_or_else(|_| Err("panicked".into()));
        let t = start.elapsed();
        match outcome {
            Ok(detail) => println!("criterion {:>2} PASS  {name}: {detail} [{t:.1?}]", k + 1),
            Err(detail) => {
                failed += 1;
                println!("criterion {:>2} FAIL  {name}: {detail} [{t:.1?}]", k + 1);
            }
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
