//! Dimension, continuity and reduction-path checks for the constrained
//! stress/displacement spaces.

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use sgfem::mesh::{generate_structured, split, SplitKind, StructuredKind, Triangulation};
use sgfem::spaces::{
    build_q, build_q_with, build_sigma, build_sigma_with, project, project_field, DiscreteField,
    FESpace, ReductionStrategy,
};
use std::sync::Arc;

fn single_triangle() -> Arc<Triangulation> {
    Arc::new(
        Triangulation::new(vec![[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]], vec![[0, 1, 2]]).unwrap(),
    )
}

fn crisscross_patch() -> Arc<Triangulation> {
    Arc::new(generate_structured(StructuredKind::Crisscross, 1).unwrap())
}

fn ms_patch() -> Arc<Triangulation> {
    Arc::new(split(&single_triangle(), SplitKind::MorganScott(0.25)).unwrap())
}

fn random_member(space: &Arc<FESpace>, seed: u64) -> DiscreteField {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let coeffs = (0..space.dim()).map(|_| rng.random_range(-1.0..1.0)).collect();
    DiscreteField::new(space.clone(), coeffs)
}

/// dim Σ_k^2 per the discrete-complex dimension count.
fn sigma2_dim_formula(k: usize, nt: usize, ne: usize, nv: usize) -> usize {
    let t_coef = 3 * (k + 2) * (k + 1) / 2 - 9 * (k + 1);
    t_coef * nt + (3 * k - 15) * ne + 18 * nv
}

/// dim Q_{k-1}^1 per the discrete-complex dimension count.
fn q1_dim_formula(k: usize, nt: usize, nv: usize) -> usize {
    (k * (k + 1) - 18) * nt + 6 * nv
}

#[test]
fn sigma0_single_triangle_dimension() {
    let space = build_sigma(&single_triangle(), 4, 0).unwrap();
    assert_eq!(space.dim(), 45); // 3 components × dim P4
    assert_eq!(space.base_dim(), 45);
    assert_eq!(space.n_constraints(), 0);
}

#[test]
fn sigma2_crisscross_patch_dimension_matches_formula() {
    let mesh = crisscross_patch();
    assert_eq!((mesh.n_triangles(), mesh.n_edges(), mesh.n_vertices()), (4, 8, 5));
    let space = build_sigma(&mesh, 7, 2).unwrap();
    assert_eq!(space.dim(), 282);
    assert_eq!(space.dim(), sigma2_dim_formula(7, 4, 8, 5));
    assert!(space.adapted);
}

#[test]
fn q1_dimensions_match_formula() {
    let tri = single_triangle();
    let q = build_q(&tri, 6, 1).unwrap(); // k = 7
    assert_eq!(q.dim(), 56);
    assert_eq!(q.dim(), q1_dim_formula(7, 1, 3));

    let patch = crisscross_patch();
    let q = build_q(&patch, 6, 1).unwrap();
    assert_eq!(q.dim(), 182);
    assert_eq!(q.dim(), q1_dim_formula(7, 4, 5));
}

#[test]
fn q_minus1_dimension_is_elementwise() {
    let mesh = Arc::new(generate_structured(StructuredKind::Diagonal, 3).unwrap());
    let q = build_q(&mesh, 3, -1).unwrap();
    assert_eq!(q.dim(), 20 * mesh.n_triangles());
}

#[test]
fn sigma1_crisscross_patch_between_r2_and_r0() {
    let mesh = crisscross_patch();
    let s2 = build_sigma(&mesh, 7, 2).unwrap().dim();
    let s1 = build_sigma(&mesh, 7, 1).unwrap().dim();
    let s0 = build_sigma(&mesh, 7, 0).unwrap().dim();
    assert!(s2 < s1 && s1 < s0, "{s2} < {s1} < {s0}");
    // regression value: 3·(3|V| + (k-3)|E| + interior(k)|T|) = 3·(15+32+60)
    assert_eq!(s1, 321);
    assert_eq!(s0, 339);
}

#[test]
fn adapted_and_generic_reductions_agree() {
    let mesh = ms_patch();
    for (k, r) in [(5usize, 1i32), (5, 2), (6, 1)] {
        let a = build_sigma_with(&mesh, k, r, ReductionStrategy::Auto).unwrap();
        let g = build_sigma_with(&mesh, k, r, ReductionStrategy::Generic).unwrap();
        assert!(a.adapted);
        assert!(!g.adapted);
        assert_eq!(a.dim(), g.dim(), "k={k}, r={r}");
        // span check: a random adapted member projects onto the generic space
        // with no pointwise change
        let field = random_member(&Arc::new(a), 3 * k as u64 + r as u64);
        let g = Arc::new(g);
        let projected = project_field(&g, &field).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        for _ in 0..20 {
            let t = rng.random_range(0..mesh.n_triangles());
            let bary = random_bary(&mut rng);
            let v0 = field.eval_bary(t, &bary, 0).value;
            let v1 = projected.eval_bary(t, &bary, 0).value;
            for c in 0..3 {
                assert!(
                    (v0[c] - v1[c]).abs() < 1e-8 * v0[c].abs().max(1.0),
                    "k={k} r={r}: {v0:?} vs {v1:?}"
                );
            }
        }
    }
    for (km1, s) in [(4usize, 0i32), (4, 1)] {
        let a = build_q_with(&mesh, km1, s, ReductionStrategy::Auto).unwrap();
        let g = build_q_with(&mesh, km1, s, ReductionStrategy::Generic).unwrap();
        assert_eq!(a.dim(), g.dim(), "k-1={km1}, s={s}");
    }
}

#[test]
fn low_degree_r2_falls_back_to_generic() {
    // k = 4, r = 2: corner jets are over-complete on P4, the adapted count
    // fails and the generic elimination must take over.
    let mesh = crisscross_patch();
    let space = build_sigma(&mesh, 4, 2).unwrap();
    assert!(!space.adapted);
    assert!(space.dim() < build_sigma(&mesh, 4, 1).unwrap().dim());
    assert!(space.constraint_residual() < 1e-10);
}

fn random_bary(rng: &mut impl Rng) -> [f64; 3] {
    let a: f64 = rng.random_range(0.05..0.9);
    let b: f64 = rng.random_range(0.05..(0.95 - a));
    [1.0 - a - b, a, b]
}

#[test]
fn constraint_residual_is_small() {
    let mesh = ms_patch();
    for space in [
        build_sigma(&mesh, 5, 1).unwrap(),
        build_sigma(&mesh, 5, 2).unwrap(),
        build_sigma_with(&mesh, 5, 1, ReductionStrategy::Generic).unwrap(),
        build_q(&mesh, 4, 0).unwrap(),
        build_q(&mesh, 4, 1).unwrap(),
    ] {
        let res = space.constraint_residual();
        assert!(res < 1e-10, "{:?}: residual {res}", space.kind);
    }
}

#[test]
fn reduction_has_full_column_rank() {
    let mesh = crisscross_patch();
    for space in [build_sigma(&mesh, 5, 1).unwrap(), build_sigma(&mesh, 5, 2).unwrap()] {
        let n = space.reduction_scalar().to_dense();
        let gram = n.transpose() * &n;
        let eig = gram.symmetric_eigenvalues();
        let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
        for e in eig.iter() {
            lo = lo.min(*e);
            hi = hi.max(*e);
        }
        assert!(lo > 1e-8 * hi, "smallest/largest NᵀN eigenvalue = {lo}/{hi}");
    }
}

#[test]
fn stress_members_are_h1_conforming() {
    let mesh = ms_patch();
    for r in [0i32, 1, 2] {
        let space = Arc::new(build_sigma(&mesh, 5, r).unwrap());
        for trial in 0..20 {
            let field = random_member(&space, 1000 + trial);
            let scale = field.base.iter().fold(0.0f64, |a, v| a.max(v.abs()));
            for e in mesh.edges() {
                let [Some(ta), Some(tb)] = e.tris else { continue };
                let (p0, p1) = (mesh.vertex(e.verts[0]), mesh.vertex(e.verts[1]));
                for i in 1..=10 {
                    let t = i as f64 / 11.0;
                    let p = [p0[0] + t * (p1[0] - p0[0]), p0[1] + t * (p1[1] - p0[1])];
                    let va = field.evaluate(ta, p, 0).unwrap().value;
                    let vb = field.evaluate(tb, p, 0).unwrap().value;
                    for c in 0..3 {
                        assert!(
                            (va[c] - vb[c]).abs() <= 1e-10 * scale.max(1.0),
                            "r={r}: jump {} at edge {:?}",
                            va[c] - vb[c],
                            e.verts
                        );
                    }
                }
            }
        }
    }
}

#[test]
fn vertex_jets_agree_across_star() {
    let mesh = ms_patch();
    // stress: gradients single-valued for r >= 1
    let space = Arc::new(build_sigma(&mesh, 5, 1).unwrap());
    for trial in 0..10 {
        let field = random_member(&space, 7 + trial);
        let scale = field.base.iter().fold(0.0f64, |a, v| a.max(v.abs())).max(1.0);
        for v in 0..mesh.n_vertices() {
            let mut reference: Option<Vec<[f64; 2]>> = None;
            for &t in mesh.incident_triangles(v) {
                let tri = mesh.triangle(t);
                let loc = tri.iter().position(|&w| w == v).unwrap();
                let mut bary = [0.0; 3];
                bary[loc] = 1.0;
                let fv = field.eval_bary(t, &bary, 1);
                match &reference {
                    None => reference = Some(fv.grad.clone()),
                    Some(r) => {
                        for c in 0..3 {
                            assert!(
                                (fv.grad[c][0] - r[c][0]).abs() <= 1e-9 * scale
                                    && (fv.grad[c][1] - r[c][1]).abs() <= 1e-9 * scale,
                                "vertex {v}"
                            );
                        }
                    }
                }
            }
        }
    }
    // displacement: values single-valued for s = 0 (boundary vertices too)
    let q = Arc::new(build_q(&mesh, 4, 0).unwrap());
    for trial in 0..10 {
        let field = random_member(&q, 31 + trial);
        let scale = field.base.iter().fold(0.0f64, |a, v| a.max(v.abs())).max(1.0);
        for v in 0..mesh.n_vertices() {
            let mut reference: Option<Vec<f64>> = None;
            for &t in mesh.incident_triangles(v) {
                let tri = mesh.triangle(t);
                let loc = tri.iter().position(|&w| w == v).unwrap();
                let mut bary = [0.0; 3];
                bary[loc] = 1.0;
                let fv = field.eval_bary(t, &bary, 0);
                match &reference {
                    None => reference = Some(fv.value.clone()),
                    Some(r) => {
                        for c in 0..2 {
                            assert!((fv.value[c] - r[c]).abs() <= 1e-9 * scale, "vertex {v}");
                        }
                    }
                }
            }
        }
    }
}

#[test]
fn inclusion_chains_hold() {
    let mesh = crisscross_patch();
    // Σ_5^2 ⊆ Σ_5^1 ⊆ Σ_5^0
    let s2 = Arc::new(build_sigma(&mesh, 5, 2).unwrap());
    let s1 = Arc::new(build_sigma(&mesh, 5, 1).unwrap());
    let s0 = Arc::new(build_sigma(&mesh, 5, 0).unwrap());
    let q1 = Arc::new(build_q(&mesh, 4, 1).unwrap());
    let q0 = Arc::new(build_q(&mesh, 4, 0).unwrap());
    let qm = Arc::new(build_q(&mesh, 4, -1).unwrap());
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for (small, large) in
        [(&s2, &s1), (&s1, &s0), (&q1, &q0), (&q0, &qm)] as [(&Arc<_>, &Arc<_>); 4]
    {
        for trial in 0..20 {
            let member = random_member(small, 500 + trial);
            let projected = project_field(large, &member).unwrap();
            for _ in 0..5 {
                let t = rng.random_range(0..mesh.n_triangles());
                let bary = random_bary(&mut rng);
                let v0 = member.eval_bary(t, &bary, 0).value;
                let v1 = projected.eval_bary(t, &bary, 0).value;
                for c in 0..v0.len() {
                    assert!(
                        (v0[c] - v1[c]).abs() <= 1e-8 * v0[c].abs().max(1.0),
                        "projection changed a member: {} vs {}",
                        v0[c],
                        v1[c]
                    );
                }
            }
        }
    }
}

#[test]
fn projection_reproduces_members_and_polynomials() {
    let mesh = ms_patch();
    let space = Arc::new(build_sigma(&mesh, 4, 1).unwrap());
    let member = random_member(&space, 77);
    let back = project_field(&space, &member).unwrap();
    let err = member
        .reduced
        .iter()
        .zip(&back.reduced)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0f64, f64::max);
    assert!(err < 1e-10, "projection idempotence: {err}");

    // linear field is reproduced pointwise
    let linear = |p: [f64; 2]| vec![p[0] + p[1], 2.0 * p[0] - p[1], 0.5];
    let proj = project(&space, &linear).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    for _ in 0..30 {
        let t = rng.random_range(0..mesh.n_triangles());
        let bary = random_bary(&mut rng);
        let p = mesh.affine(t).apply(&bary);
        let got = proj.eval_bary(t, &bary, 0).value;
        let want = linear(p);
        for c in 0..3 {
            assert!((got[c] - want[c]).abs() < 1e-12, "{got:?} vs {want:?}");
        }
    }
}

#[test]
fn projection_converges_at_degree_plus_one() {
    // L² error of projecting sin(πx) onto the first stress component
    let f = |p: [f64; 2]| vec![(std::f64::consts::PI * p[0]).sin(), 0.0, 0.0];
    let mut errors = Vec::new();
    for n in [1usize, 2, 4] {
        let mesh = Arc::new(generate_structured(StructuredKind::Diagonal, n).unwrap());
        let space = Arc::new(build_sigma(&mesh, 4, 0).unwrap());
        let proj = project(&space, &f).unwrap();
        let quad = sgfem::elements::QuadratureRule::with_degree(16).unwrap();
        let mut err2 = 0.0;
        for t in 0..mesh.n_triangles() {
            let map = mesh.affine(t);
            for (q, bary) in quad.points.iter().enumerate() {
                let p = map.apply(bary);
                let v = proj.eval_bary(t, bary, 0).value[0];
                err2 += quad.weights[q] * map.det.abs() * (v - f(p)[0]).powi(2);
            }
        }
        errors.push(err2.sqrt());
    }
    let order = (errors[1] / errors[2]).ln() / 2.0f64.ln();
    assert!((4.3..5.7).contains(&order), "projection order {order}, errors {errors:?}");
}

#[test]
fn per_vertex_rank_additivity() {
    // the constraint blocks of different vertices are independent: the sum of
    // per-vertex ranks equals the global constraint rank
    let mesh = ms_patch();
    for space in [
        build_sigma_with(&mesh, 5, 1, ReductionStrategy::Generic).unwrap(),
        build_sigma_with(&mesh, 5, 2, ReductionStrategy::Generic).unwrap(),
    ] {
        let per_vertex: usize = sgfem::spaces::per_vertex_rank_table(&space).values().sum();
        assert_eq!(3 * per_vertex, space.rank_constraints());
    }
}

#[test]
fn evaluate_rejects_outside_points() {
    let mesh = single_triangle();
    let space = Arc::new(build_sigma(&mesh, 4, 0).unwrap());
    let field = DiscreteField::zero(space);
    assert!(field.evaluate(0, [2.0, 2.0], 0).is_err());
    let v = field.evaluate(0, [0.25, 0.25], 1).unwrap();
    assert!(v.value.iter().all(|&x| x == 0.0));
}

#[test]
fn constant_field_evaluates_constant() {
    let mesh = crisscross_patch();
    let space = Arc::new(build_q(&mesh, 3, -1).unwrap());
    let ones = project(&space, &|_| vec![3.5, -1.25]).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for _ in 0..20 {
        let t = rng.random_range(0..mesh.n_triangles());
        let v = ones.eval_bary(t, &random_bary(&mut rng), 1);
        assert!((v.value[0] - 3.5).abs() < 1e-12);
        assert!((v.value[1] + 1.25).abs() < 1e-12);
        assert!(v.grad[0][0].abs() < 1e-10 && v.grad[1][1].abs() < 1e-10);
    }
}

#[test]
fn field_gradient_matches_finite_differences() {
    let mesh = ms_patch();
    let space = Arc::new(build_sigma(&mesh, 5, 1).unwrap());
    let field = random_member(&space, 321);
    let t = 2;
    let map = mesh.affine(t);
    let p = map.apply(&[0.4, 0.3, 0.3]);
    let h = 1e-6;
    let g = field.evaluate(t, p, 1).unwrap();
    for c in 0..3 {
        let fx = |q: [f64; 2]| field.evaluate(t, q, 0).unwrap().value[c];
        let fdx = (fx([p[0] + h, p[1]]) - fx([p[0] - h, p[1]])) / (2.0 * h);
        let fdy = (fx([p[0], p[1] + h]) - fx([p[0], p[1] - h])) / (2.0 * h);
        let scale = g.grad[c][0].abs().max(g.grad[c][1].abs()).max(1.0);
        assert!((fdx - g.grad[c][0]).abs() < 1e-6 * scale);
        assert!((fdy - g.grad[c][1]).abs() < 1e-6 * scale);
    }
}

#[test]
fn builder_rejects_bad_orders() {
    let mesh = single_triangle();
    assert!(build_sigma(&mesh, 3, 0).is_err());
    assert!(build_sigma(&mesh, 9, 0).is_err());
    assert!(build_sigma(&mesh, 4, 3).is_err());
    assert!(build_q(&mesh, 0, -1).is_err());
    assert!(build_q(&mesh, 1, 1).is_err());
}

#[test]
fn space_report_fields() {
    let mesh = crisscross_patch();
    let space = build_sigma(&mesh, 5, 1).unwrap();
    let report = space.report();
    assert_eq!(report.kind, "stress");
    assert_eq!(report.k, 5);
    assert_eq!(report.r_or_s, 1);
    assert_eq!(report.dim, space.dim());
    assert_eq!(report.base_dim - report.rank_constraints, report.dim);
    let json = serde_json::to_string(&report).unwrap();
    assert!(json.contains("\"rank_constraints\""));
}
