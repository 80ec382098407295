//! The bounded simplex against exhaustive vertex enumeration on 5×5 programs.

use fmpower::milp::{ModelInstance, ModelVariant, Row, VarKind, VarRole, Variable};
use fmpower::solve::{solve_lp, SolveStatus, SolverParams};
use fmpower::{Channel, NetId, PairKey, RxId, TxId};
use proptest::prelude::*;

const N_Y: usize = 3;
const N_S: usize = 2;
const N: usize = N_Y + N_S;

/// `a·x ≥ b` or `x_j = v`, in dense form.
#[derive(Clone)]
struct Halfspace {
    a: [f64; N],
    b: f64,
}

fn solve_dense(mut a: Vec<[f64; N]>, mut b: Vec<f64>) -> Option<[f64; N]> {
    for col in 0..N {
        let piv = (col..N).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if a[piv][col].abs() < 1e-10 {
            return None;
        }
        a.swap(col, piv);
        b.swap(col, piv);
        for r in 0..N {
            if r != col {
                let f = a[r][col] / a[col][col];
                for c in col..N {
                    a[r][c] -= f * a[col][c];
                }
                b[r] -= f * b[col];
            }
        }
    }
    let mut x = [0.0; N];
    for i in 0..N {
        x[i] = b[i] / a[i][i];
    }
    Some(x)
}

fn combinations(n: usize, k: usize) -> Vec<Vec<usize>> {
    if k == 0 {
        return vec![vec![]];
    }
    if n < k {
        return vec![];
    }
    let mut out = combinations(n - 1, k);
    for mut c in combinations(n - 1, k - 1) {
        c.push(n - 1);
        out.push(c);
    }
    out
}

/// Minimum of `w·s` over the vertices, `None` when infeasible.
fn vertex_oracle(rows: &[Halfspace], weights: &[f64; N]) -> Option<f64> {
    let mut all = rows.to_vec();
    for j in 0..N {
        let mut a = [0.0; N];
        a[j] = 1.0;
        all.push(Halfspace { a, b: 0.0 });
        if j < N_Y {
            let mut a = [0.0; N];
            a[j] = -1.0;
            all.push(Halfspace { a, b: -1.0 });
        }
    }
    let mut best: Option<f64> = None;
    for pick in combinations(all.len(), N) {
        let a: Vec<[f64; N]> = pick.iter().map(|&i| all[i].a).collect();
        let b: Vec<f64> = pick.iter().map(|&i| all[i].b).collect();
        let Some(x) = solve_dense(a, b) else { continue };
        let feasible = all.iter().all(|h| {
            let lhs: f64 = h.a.iter().zip(&x).map(|(c, v)| c * v).sum();
            lhs >= h.b - 1e-9 * (1.0 + h.b.abs())
        });
        if feasible {
            let obj: f64 = weights.iter().zip(&x).map(|(w, v)| w * v).sum();
            best = Some(best.map_or(obj, |b: f64| b.min(obj)));
        }
    }
    best
}

fn model(coefs: &[[f64; N_Y]; 5], rhs: &[f64; 5], m: &[f64; N_S], weights: &[f64; N_S]) -> ModelInstance {
    let block = Channel(98000);
    let mut variables: Vec<Variable> = (0..N_Y)
        .map(|j| Variable {
            name: format!("y_t{}", j + 1),
            kind: VarKind::Continuous,
            lower: 0.0,
            upper: 1.0,
            role: VarRole::Power(TxId(j as u32 + 1)),
            block,
        })
        .collect();
    for k in 0..N_S {
        variables.push(Variable {
            name: format!("s_r{}_a1", k + 1),
            kind: VarKind::Continuous,
            lower: 0.0,
            upper: f64::INFINITY,
            role: VarRole::Shortfall(PairKey::new(RxId(k as u32 + 1), NetId(1))),
            block,
        });
    }
    let rows = (0..5)
        .map(|i| {
            let terms: Vec<(usize, f64)> = coefs[i].iter().copied().enumerate().filter(|(_, c)| *c != 0.0).collect();
            let largest = terms.iter().map(|(_, c)| c.abs()).fold(0.0, f64::max);
            let shortfall = (i < N_S).then_some(N_Y + i);
            Row {
                name: format!("c{i}"),
                pair: PairKey::new(RxId(i as u32 + 1), NetId(1)),
                block,
                terms,
                shortfall,
                shortfall_coef: if i < N_S { m[i] } else { 0.0 },
                rhs: rhs[i],
                m_ra: m.get(i).copied().unwrap_or(0.0),
                scale: if largest > 0.0 { 1.0 / largest } else { 1.0 },
            }
        })
        .collect();
    ModelInstance {
        variant: ModelVariant::Lp,
        variables,
        rows,
        objective: (0..N_S).map(|k| (N_Y + k, weights[k])).collect(),
    }
}

fn coef() -> impl Strategy<Value = f64> {
    prop_oneof![Just(0.0), -2.0f64..2.0]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]
    #[test]
    fn simplex_matches_vertex_enumeration(
        coefs in prop::array::uniform5(prop::array::uniform3(coef())),
        rhs in prop::array::uniform5(-1.5f64..1.5),
        m in prop::array::uniform2(0.1f64..5.0),
        weights in prop::array::uniform2(1.0f64..100.0),
    ) {
        let mi = model(&coefs, &rhs, &m, &weights);
        let halfspaces: Vec<Halfspace> = (0..5)
            .map(|i| {
                let mut a = [0.0; N];
                a[..N_Y].copy_from_slice(&coefs[i]);
                if i < N_S {
                    a[N_Y + i] = m[i];
                }
                Halfspace { a, b: rhs[i] }
            })
            .collect();
        let mut w = [0.0; N];
        w[N_Y..].copy_from_slice(&weights);
        let oracle = vertex_oracle(&halfspaces, &w);
        let sol = solve_lp(&mi, &SolverParams::default()).unwrap();
        match oracle {
            None => prop_assert_eq!(sol.status, SolveStatus::Infeasible),
            Some(best) => {
                prop_assert_eq!(sol.status, SolveStatus::Optimal);
                prop_assert!((sol.objective - best).abs() <= 1e-7 * (1.0 + best.abs()),
                    "simplex {} oracle {}", sol.objective, best);
                for r in &mi.rows {
                    prop_assert!(r.activity(&sol.values) >= r.rhs - 1e-7 * (1.0 + r.rhs.abs()));
                }
            }
        }
    }
}
