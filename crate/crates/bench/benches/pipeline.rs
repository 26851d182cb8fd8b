use criterion::{black_box, criterion_group, criterion_main, Criterion};
use recurpade::fundamental::build_fundamental_system;
use recurpade::numeric::{poly_roots, series_from_rational};
use recurpade::{classify_singularities, forward_solve, hp_solve, row_sequence};
use recurpade::{Polynomial, PowerSeries, PrecisionContext, Recurrence, Scalar, VectorSeries};

fn two_geometric(n: usize, ctx: &PrecisionContext) -> VectorSeries {
    let f = |c: i64| series_from_rational(&Polynomial::one(), &Polynomial::from_i64(&[1, -c]), n, ctx).unwrap();
    VectorSeries::new(vec![f(2), f(3)], vec![1, 1]).unwrap()
}

fn numeric(c: &mut Criterion) {
    let ctx = PrecisionContext::bigfloat(256).unwrap();
    let p = Polynomial::from_i64(&[7, -3, 0, 5, 1, -2, 1]);
    c.bench_function("poly_roots degree 6, 256 bits", |b| b.iter(|| poly_roots(black_box(&p), &ctx).unwrap()));
    let rec = Recurrence::constant_i64(&[-5, 6]).unwrap();
    let init = [Scalar::zero(), Scalar::one()];
    c.bench_function("forward_solve N = 400, exact", |b| {
        b.iter(|| forward_solve(&rec, black_box(&init), 400, &PrecisionContext::exact()).unwrap())
    });
}

fn fundamental(c: &mut Criterion) {
    let mut g = c.benchmark_group("fundamental");
    g.sample_size(10);
    let ex = PrecisionContext::exact();
    let distinct = Recurrence::constant_i64(&[-5, 6]).unwrap();
    g.bench_function("distinct moduli, N = 400", |b| b.iter(|| build_fundamental_system(&distinct, 400, &ex).unwrap()));
    let shared = Recurrence::constant_i64(&[0, -4]).unwrap();
    g.bench_function("shared circle, N = 200", |b| b.iter(|| build_fundamental_system(&shared, 200, &ex).unwrap()));
    g.finish();
}

fn hermite_pade(c: &mut Criterion) {
    let mut g = c.benchmark_group("hermite_pade");
    g.sample_size(10);
    let ex = PrecisionContext::exact();
    let vs = two_geometric(240, &ex);
    g.bench_function("hp_solve n = 200, exact", |b| b.iter(|| hp_solve(&vs, 200, &ex).unwrap()));
    g.bench_function("row_sequence n in [20, 60]", |b| b.iter(|| row_sequence(&vs, (20, 60), &ex).unwrap()));
    g.bench_function("classify two geometric series", |b| b.iter(|| classify_singularities(&vs, (100, 200), &ex).unwrap()));
    let fl = PrecisionContext::bigfloat(256).unwrap();
    let comps: Vec<PowerSeries> = vs.components().iter().map(|f| f.promote(&fl)).collect();
    let vf = VectorSeries::new(comps, vec![1, 1]).unwrap();
    g.bench_function("row_sequence n in [20, 60], 256 bits", |b| b.iter(|| row_sequence(&vf, (20, 60), &fl).unwrap()));
    g.finish();
}

criterion_group!(benches, numeric, fundamental, hermite_pade);
criterion_main!(benches);
