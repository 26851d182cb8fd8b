//! Acceptance checks. Each criterion prints one PASS/FAIL line; the test fails
//! if any criterion fails. Criteria run sequentially so the timings are honest.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::{Duration, Instant};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use recurpade::fundamental::{build_fundamental_system, prescribe_poles, Branch, CircleGroup};
use recurpade::hermite_pade::{
    classify_singularities, hp_solve, poly_independence_test, row_sequence, SingularityKind, VectorSeries,
};
use recurpade::numeric::real::Real;
use recurpade::numeric::{series_from_rational, Polynomial, PowerSeries, PrecisionContext, Root, Scalar};
use recurpade::rates::RateClass;
use recurpade::recurrence::{
    estimate_radius, forward_solve, recurrence_residual, Perturbation, RadiusMethod, Recurrence,
};
use recurpade::transforms::{antidifference, conexion_check, deflate_recurrence, AntidifferenceBranch};
use recurpade::Error;

const RATIO_REL_TOL: f64 = 1e-8;
const RATIO_TIME: Duration = Duration::from_secs(1);
const PERRON_TOL: f64 = 1e-6;
const PERRON_TIME: Duration = Duration::from_secs(5);
const PARTIAL_FRACTION_TOL: f64 = 1e-8;
const DOUBLE_POLE_TOL: f64 = 1e-6;
const THETA_TOL: f64 = 0.1;
const THETA_TIME: Duration = Duration::from_secs(2);
const BRANCH_RADIUS_TOL: f64 = 1e-2;
const POLE_LOCATION_TOL: f64 = 1e-6;
const POLE_SUCCESS_RATE: f64 = 0.95;
const NONGEOMETRIC_TOL: f64 = 1e-2;
const NONGEOMETRIC_TIME: Duration = Duration::from_secs(30);
const LEMMA_CASES: usize = 100;
const RANDOM_INSTANCES: usize = 100;

type Outcome = Result<String, String>;

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn ex() -> PrecisionContext {
    PrecisionContext::exact()
}

fn float(bits: usize) -> PrecisionContext {
    PrecisionContext::bigfloat(bits).unwrap()
}

fn rat(num: &[i64], den: &[i64], n: usize) -> PowerSeries {
    series_from_rational(&Polynomial::from_i64(num), &Polynomial::from_i64(den), n, &ex()).unwrap()
}

fn c1_ratio_test() -> Outcome {
    let t = Instant::now();
    let rec = Recurrence::constant_i64(&[-5, 6]).unwrap();
    let f = forward_solve(&rec, &[Scalar::zero(), Scalar::one()], 200, &ex()).map_err(|e| e.to_string())?;
    let r = estimate_radius(f.coeffs(), RadiusMethod::RatioTest).map_err(|e| e.to_string())?;
    let el = t.elapsed();
    let rel = (r.value - 1.0 / 3.0).abs() * 3.0;
    ensure(rel <= RATIO_REL_TOL, || format!("radius {} relative error {rel:.2e}", r.value))?;
    ensure(el < RATIO_TIME, || format!("took {el:?}"))?;
    Ok(format!("radius {:.12} rel err {rel:.1e} in {el:.2?}", r.value))
}

fn c2_perron() -> Outcome {
    let t = Instant::now();
    let rec = Recurrence::constant_i64(&[-5, 6]).unwrap();
    let fs = build_fundamental_system(&rec, 400, &ex()).map_err(|e| e.to_string())?;
    let el = t.elapsed();
    ensure(fs.members.len() == 2, || format!("{} members", fs.members.len()))?;
    let want = [1.0 / 3.0, 0.5];
    for (m, w) in fs.members.iter().zip(want) {
        let r = m.radius.ok_or("missing radius")?.value;
        ensure((r - w).abs() <= PERRON_TOL, || format!("radius {r} vs {w}"))?;
        ensure(m.singular_points.len() == 1, || format!("singular points {:?}", m.singular_points))?;
        let z = m.singular_points[0].abs_f64();
        ensure((z - w).abs() <= PERRON_TOL, || format!("singular point {z} vs {w}"))?;
    }
    ensure(el < PERRON_TIME, || format!("took {el:?}"))?;
    Ok(format!("radii (1/3, 1/2) in {el:.2?}"))
}

fn c3_shared_circle() -> Outcome {
    let rec = Recurrence::constant_i64(&[0, -4]).unwrap();
    let fs = build_fundamental_system(&rec, 300, &ex()).map_err(|e| e.to_string())?;
    ensure(fs.circles.len() == 1, || format!("{} circles", fs.circles.len()))?;
    let acc = &fs.circles[0];
    ensure(acc.rank == Some(2) && acc.expected == 2 && acc.produced == 2, || {
        format!("rank {:?}, expected {}, produced {}", acc.rank, acc.expected, acc.produced)
    })?;
    // 1/(1-2z) = (-1/2)/(z - 1/2) and 1/(1+2z) = (1/2)/(z + 1/2)
    let want = [[Scalar::from_ratio(-1, 2), Scalar::zero()], [Scalar::zero(), Scalar::from_ratio(1, 2)]];
    let mut worst: f64 = 0.0;
    for (m, row) in fs.members.iter().zip(&want) {
        ensure(m.principal_parts.len() == 2, || "principal parts missing".into())?;
        for (pp, w) in m.principal_parts.iter().zip(row) {
            let c = pp.coefficients.first().cloned().unwrap_or_else(Scalar::zero);
            worst = worst.max((&c - w).abs_f64());
            for higher in pp.coefficients.iter().skip(1) {
                worst = worst.max(higher.abs_f64());
            }
        }
    }
    ensure(worst <= PARTIAL_FRACTION_TOL, || format!("coefficient error {worst:.2e}"))?;
    Ok(format!("N_1 = N = 2, coefficient error {worst:.1e}"))
}

fn c4_exact_orders() -> Outcome {
    let ctx = float(256);
    let g = CircleGroup {
        radius: 0.5,
        zeros: vec![Root { location: Scalar::from_ratio(1, 2), multiplicity: 2 }],
        geometric: true,
    };
    // (1+z)/(1-2z)^2 and z/(1-2z)^2 plus an entire part
    let members = [rat(&[1, 1], &[1, -4, 4], 200), rat(&[0, 1, -4, 4, 1], &[1, -4, 4], 200)];
    let p = prescribe_poles(&members, &g, 1.0, &ctx).map_err(|e| e.to_string())?;
    let orders: Vec<usize> = p.iter().map(|x| x.order).collect();
    ensure(orders == [1, 2], || format!("orders {orders:?}"))?;
    ensure(p.iter().all(|x| x.certified), || "orders not certified".into())?;
    let a2 = &p[1].principal.coefficients[1];
    let err = (a2 - &Scalar::from_ratio(1, 4)).abs_f64();
    ensure(err <= DOUBLE_POLE_TOL, || format!("a_-2 = {a2}, error {err:.2e}"))?;
    Ok(format!("orders (1, 2) certified, a_-2 error {err:.1e}"))
}

fn random_rational(rng: &mut ChaCha8Rng) -> Scalar {
    let d = rng.gen_range(1..=5);
    let mut n = rng.gen_range(-6..=6);
    if n == 0 {
        n = 1;
    }
    Scalar::from_ratio(n, d)
}

/// Order m recurrence whose characteristic polynomials all vanish at lambda:
/// p_n(z) = (z - lambda)(z^{m-1} + beta_{n,1} z^{m-2} + ... + beta_{n,m-1}).
fn recurrence_with_root(rng: &mut ChaCha8Rng, m: usize, lambda: &Scalar, rows: usize) -> Recurrence {
    let mut table = Vec::with_capacity(rows);
    for _ in 0..rows {
        let beta: Vec<Scalar> = (0..m - 1).map(|_| random_rational(rng)).collect();
        let mut prev = Scalar::one();
        let mut row = Vec::with_capacity(m);
        for j in 0..m {
            let bj = beta.get(j).cloned().unwrap_or_else(Scalar::zero);
            row.push(&bj - &(lambda * &prev));
            prev = bj;
        }
        table.push(row);
    }
    Recurrence::table(m, table).unwrap()
}

fn lemma_case(rng: &mut ChaCha8Rng) -> Result<(), String> {
    let m = rng.gen_range(1..=4);
    let lambda = random_rational(rng);
    let n_max = 40;
    let rec = recurrence_with_root(rng, m, &lambda, n_max - m + 1);
    let init: Vec<Scalar> = (0..m).map(|_| random_rational(rng)).collect();
    let f = forward_solve(&rec, &init, n_max, &ex()).map_err(|e| e.to_string())?;
    let d = deflate_recurrence(&rec, &lambda, n_max, None, &ex()).map_err(|e| e.to_string())?;
    ensure(d.max_residual == 0.0, || format!("relation residual {}", d.max_residual))?;
    let c = conexion_check(&d);
    ensure(c == 0.0, || format!("connection residual {c}"))?;
    let big_f = d.map_solution(f.coeffs());
    if let Some(r) = &d.recurrence {
        let res = recurrence_residual(r, &big_f).map_err(|e| e.to_string())?;
        ensure(res == 0.0, || format!("deflated residual {res}"))?;
    } else {
        ensure(big_f.iter().all(Scalar::is_exact_zero), || "order one image is not zero".into())?;
    }
    // Forward summation: g_{n+1} - lambda g_n = F_n with g_0 = 0, so g = f - f_0 lambda^n.
    let lam_abs = lambda.abs_f64();
    let up = antidifference(&big_f, &lambda, Some(lam_abs * 4.0), &ex()).map_err(|e| e.to_string())?;
    ensure(up.branch == AntidifferenceBranch::Sol2, || "expected the forward branch".into())?;
    for n in 0..big_f.len() {
        let want = &f.coeffs()[n] - &(&f.coeffs()[0] * &lambda.powi(n as u64));
        ensure(up.values[n] == want, || format!("forward lift differs at n = {n}"))?;
    }
    let res = recurrence_residual(&rec, &up.values[..big_f.len()]).map_err(|e| e.to_string())?;
    ensure(res == 0.0, || format!("lifted residual {res}"))?;
    // Backward summation satisfies the difference relation exactly below the end point.
    let ctx = PrecisionContext::exact_with_bits(64);
    let down = antidifference(&big_f, &lambda, Some(lam_abs / 4.0), &ctx);
    if let (Ok(down), false) = (down, big_f.iter().all(Scalar::is_exact_zero)) {
        ensure(down.branch == AntidifferenceBranch::Sol1, || "expected the backward branch".into())?;
        for n in 0..big_f.len() - 1 {
            let lhs = &down.values[n + 1] - &(&lambda * &down.values[n]);
            ensure(lhs == big_f[n], || format!("backward lift differs at n = {n}"))?;
        }
    }
    Ok(())
}

fn c5_lemma_identities() -> Outcome {
    let rec = Recurrence::constant_i64(&[-5, 6]).unwrap();
    for lam in [2, 3] {
        let d = deflate_recurrence(&rec, &Scalar::from_i64(lam), 60, None, &ex()).map_err(|e| e.to_string())?;
        ensure(d.max_residual == 0.0 && conexion_check(&d) == 0.0, || format!("constant family, lambda {lam}"))?;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_0005);
    for i in 0..LEMMA_CASES {
        lemma_case(&mut rng).map_err(|e| format!("case {i}: {e}"))?;
    }
    Ok(format!("all residuals exactly 0 on the constant family and {LEMMA_CASES} random recurrences"))
}

fn c6_hermite_pade_exact() -> Outcome {
    let vs = VectorSeries::new(vec![rat(&[1], &[1, -2], 60), rat(&[1], &[1, -3], 60)], vec![1, 1]).unwrap();
    let want = Polynomial::from_i64(&[1, -5, 6]);
    for n in 2..=50 {
        let a = hp_solve(&vs, n, &ex()).map_err(|e| format!("n = {n}: {e}"))?;
        ensure(a.q == want, || format!("n = {n}: q = {:?}", a.q))?;
        ensure(a.order_conditions(&vs).iter().all(Scalar::is_exact_zero), || format!("n = {n}: order conditions"))?;
    }
    Ok("q = 1 - 5z + 6z^2 for n in [2, 50], order conditions exactly 0".into())
}

fn c7_rate() -> Outcome {
    let t = Instant::now();
    // 1/(1-2z) + 1/(1-z) = (2 - 3z) / (1 - 3z + 2z^2)
    let vs = VectorSeries::new(vec![rat(&[2, -3], &[1, -3, 2], 70)], vec![1]).unwrap();
    let rs = row_sequence(&vs, (20, 60), &float(256)).map_err(|e| e.to_string())?;
    let el = t.elapsed();
    let theta = rs.theta_global.theta.ok_or("no theta")?;
    ensure((theta - 0.5).abs() <= THETA_TOL, || format!("theta {theta}"))?;
    ensure(el < THETA_TIME, || format!("took {el:?}"))?;
    Ok(format!("theta {theta:.4} in {el:.2?}"))
}

fn sqrt_series(len: usize, ctx: &PrecisionContext) -> PowerSeries {
    // c_0 = 1, c_n = c_{n-1} (n - 3/2) / n
    let mut c = vec![Scalar::one().promote(ctx)];
    for n in 1..len {
        let r = Scalar::from_ratio(2 * n as i64 - 3, 2 * n as i64);
        let v = &c[n - 1] * &r;
        c.push(v.promote(ctx));
    }
    PowerSeries::explicit(c).unwrap()
}

fn c8_branch_point() -> Outcome {
    let ctx = float(256);
    let f = sqrt_series(2000, &ctx);
    let r0 = estimate_radius(f.coeffs(), RadiusMethod::RootTestRegression).map_err(|e| e.to_string())?;
    ensure((r0.value - 1.0).abs() <= BRANCH_RADIUS_TOL, || format!("R0 {}", r0.value))?;
    let vs = VectorSeries::new(vec![f], vec![1]).unwrap();
    let rep = classify_singularities(&vs, (1000, 1999), &ctx).map_err(|e| e.to_string())?;
    let e = rep
        .entries
        .iter()
        .find(|e| (&e.zeta - &Scalar::one()).abs_f64() <= BRANCH_RADIUS_TOL)
        .ok_or_else(|| format!("no entry near 1: {:?}", rep.entries.iter().map(|e| e.zeta.to_c64()).collect::<Vec<_>>()))?;
    ensure(e.kind == SingularityKind::SystemSingularity, || format!("kind {:?}", e.kind))?;
    ensure(e.rate == RateClass::Subgeometric, || format!("rate {:?}", e.rate))?;
    ensure(rep.poles().is_empty(), || "a system pole was reported".into())?;
    if let Some(r) = e.witness.as_ref().and_then(|w| w.radius) {
        ensure((r - 1.0).abs() <= BRANCH_RADIUS_TOL, || format!("witness radius {r}"))?;
    }
    Ok(format!("zeta {:.6} system singularity, subgeometric, R0 {:.5}", e.zeta.to_c64().0, r0.value))
}

struct Instance {
    components: Vec<(Polynomial, Polynomial)>,
    multi_index: Vec<usize>,
    poles: Vec<Scalar>,
}

fn cplx(re: (i64, i64), im: (i64, i64)) -> Scalar {
    Scalar::new(Real::from_ratio(re.0, re.1), Real::from_ratio(im.0, im.1))
}

/// Rational vector with simple poles on distinct circles, except one circle
/// that carries a pair: either +-r or a conjugate pair r (3 +- 4i)/5.
fn random_instance(rng: &mut ChaCha8Rng) -> Instance {
    let total = rng.gen_range(2..=5);
    let d = rng.gen_range(1..=3.min(total));
    let mut moduli = [(1i64, 4i64), (1, 3), (1, 2), (2, 3), (6, 7)];
    moduli.shuffle(rng);
    let (pn, pd) = moduli[0];
    let mut poles = if rng.gen_bool(0.5) {
        vec![Scalar::from_ratio(pn, pd), Scalar::from_ratio(-pn, pd)]
    } else {
        vec![cplx((3 * pn, 5 * pd), (4 * pn, 5 * pd)), cplx((3 * pn, 5 * pd), (-4 * pn, 5 * pd))]
    };
    for &(n, q) in &moduli[1..total - 1] {
        let s = if rng.gen_bool(0.5) { 1 } else { -1 };
        poles.push(Scalar::from_ratio(s * n, q));
    }
    poles.shuffle(rng);
    let mut multi_index = vec![1; d];
    for _ in d..total {
        let k = rng.gen_range(0..d);
        multi_index[k] += 1;
    }
    let mut components = Vec::with_capacity(d);
    let mut next = 0;
    for &mk in &multi_index {
        let zs = &poles[next..next + mk];
        next += mk;
        let den = Polynomial::from_zeros_normalized(&zs.iter().map(|z| (z.clone(), 1)).collect::<Vec<_>>());
        let num = loop {
            let mut c: Vec<Scalar> = (0..mk).map(|_| Scalar::from_i64(rng.gen_range(-3..=3))).collect();
            if c[0].is_zero() {
                c[0] = Scalar::one();
            }
            let p = Polynomial::new(c);
            if zs.iter().all(|z| !p.eval(z).is_zero()) {
                break p;
            }
        };
        components.push((num, den));
    }
    Instance { components, multi_index, poles }
}

enum InstanceResult {
    Correct,
    Flagged(String),
    Wrong(String),
}

fn run_instance(inst: &Instance) -> InstanceResult {
    let ctx = ex();
    let comps: Vec<PowerSeries> =
        inst.components.iter().map(|(n, d)| series_from_rational(n, d, 260, &ctx).unwrap()).collect();
    let vs = VectorSeries::new(comps, inst.multi_index.clone()).unwrap();
    let rep = match classify_singularities(&vs, (100, 220), &ctx) {
        Ok(r) => r,
        Err(e @ (Error::HypothesisViolated(_) | Error::PoorFit { .. })) => return InstanceResult::Flagged(e.to_string()),
        Err(e) => return InstanceResult::Wrong(format!("unexpected error {e}")),
    };
    let got = rep.poles();
    let mut unmatched: Vec<&Scalar> = inst.poles.iter().collect();
    for (z, order) in &got {
        if *order != 1 {
            return InstanceResult::Wrong(format!("order {order} at {:?}", z.to_c64()));
        }
        let hit = unmatched.iter().position(|w| (*w - z).abs_f64() <= POLE_LOCATION_TOL);
        match hit {
            Some(i) => {
                unmatched.swap_remove(i);
            }
            None => return InstanceResult::Wrong(format!("spurious pole {:?}", z.to_c64())),
        }
    }
    if unmatched.is_empty() {
        InstanceResult::Correct
    } else {
        InstanceResult::Wrong(format!("{} of {} poles reported", got.len(), inst.poles.len()))
    }
}

fn c9_end_to_end() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_0009);
    let instances: Vec<Instance> = (0..RANDOM_INSTANCES).map(|_| random_instance(&mut rng)).collect();
    let results: Vec<InstanceResult> = instances.par_iter().map(run_instance).collect();
    let correct = results.iter().filter(|r| matches!(r, InstanceResult::Correct)).count();
    let flagged: Vec<&String> =
        results.iter().filter_map(|r| if let InstanceResult::Flagged(s) = r { Some(s) } else { None }).collect();
    let wrong: Vec<(usize, &String)> = results
        .iter()
        .enumerate()
        .filter_map(|(i, r)| if let InstanceResult::Wrong(s) = r { Some((i, s)) } else { None })
        .collect();
    ensure(wrong.is_empty(), || format!("silently wrong: {wrong:?}"))?;
    let rate = correct as f64 / RANDOM_INSTANCES as f64;
    ensure(rate >= POLE_SUCCESS_RATE, || format!("{correct}/{RANDOM_INSTANCES} correct, flagged {flagged:?}"))?;
    Ok(format!("{correct}/{RANDOM_INSTANCES} exact pole multisets, {} flagged, 0 wrong", flagged.len()))
}

fn c10_nongeometric() -> Outcome {
    let t = Instant::now();
    let rec = Recurrence::perturbed(
        vec![Scalar::from_i64(-5), Scalar::from_i64(6)],
        vec![Scalar::one(), Scalar::from_i64(-1)],
        vec![Perturbation::InverseN, Perturbation::InverseN],
    )
    .unwrap();
    let fs = build_fundamental_system(&rec, 800, &float(256)).map_err(|e| e.to_string())?;
    let el = t.elapsed();
    let r: Vec<f64> = fs.members.iter().map(|m| m.radius.map_or(f64::NAN, |r| r.value)).collect();
    ensure(r.len() == 2, || format!("{} members", r.len()))?;
    ensure((r[0] - 1.0 / 3.0).abs() <= NONGEOMETRIC_TOL && (r[1] - 0.5).abs() <= NONGEOMETRIC_TOL, || {
        format!("radii {r:?}")
    })?;
    ensure(fs.provenance.iter().any(|p| p.branch == Branch::Evgrafov), || "no evgrafov record".into())?;
    ensure(fs.provenance_jsonl().contains("evgrafov"), || "provenance log lacks the branch".into())?;
    ensure(el < NONGEOMETRIC_TIME, || format!("took {el:?}"))?;
    Ok(format!("radii ({:.5}, {:.5}) via evgrafov in {el:.2?}", r[0], r[1]))
}

fn c11_independence() -> Outcome {
    let dep = VectorSeries::new(vec![rat(&[1], &[1, -2], 80), rat(&[2], &[1, -2], 80)], vec![1, 1]).unwrap();
    let ind = VectorSeries::new(vec![rat(&[1], &[1, -2], 80), rat(&[1], &[1, -3], 80)], vec![1, 1]).unwrap();
    let mut seen = Vec::new();
    for ctx in [float(128), float(256), float(512), ex()] {
        let a = poly_independence_test(&dep, (10, 60), &ctx).map_err(|e| e.to_string())?.independent;
        let b = poly_independence_test(&ind, (10, 60), &ctx).map_err(|e| e.to_string())?.independent;
        seen.push((a, b));
    }
    ensure(seen.iter().all(|&s| s == (false, true)), || format!("decisions {seen:?}"))?;
    Ok("dependent false, independent true at 128/256/512 bits and exact".into())
}

// Runs without the libtest harness so the criterion lines are never captured.
fn main() {
    let criteria: [(&str, fn() -> Outcome); 11] = [
        ("ratio test on 3^n - 2^n", c1_ratio_test),
        ("distinct-moduli fundamental system", c2_perron),
        ("shared-circle fundamental system", c3_shared_circle),
        ("exact pole orders", c4_exact_orders),
        ("transform identities", c5_lemma_identities),
        ("exact Hermite-Pade denominators", c6_hermite_pade_exact),
        ("geometric rate of a Pade row", c7_rate),
        ("branch point is not a pole", c8_branch_point),
        ("system poles of random rational vectors", c9_end_to_end),
        ("non-geometric coefficients", c10_nongeometric),
        ("polynomial independence", c11_independence),
    ];
    let mut failed = Vec::new();
    for (i, (name, run)) in criteria.iter().enumerate() {
        let out = catch_unwind(AssertUnwindSafe(run)).unwrap_or_else(|p| {
            let msg = p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Err(format!("panicked: {msg}"))
        });
        match out {
            Ok(detail) => println!("criterion {:>2} PASS  {name}: {detail}", i + 1),
            Err(detail) => {
                println!("criterion {:>2} FAIL  {name}: {detail}", i + 1);
                failed.push(i + 1);
            }
        }
    }
    if !failed.is_empty() {
        eprintln!("failed criteria: {failed:?}");
        std::process::exit(1);
    }
}
