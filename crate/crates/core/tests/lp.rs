mod common;

use common::simplex::{oracle, random_lp, Outcome};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use ssdr::ilp::{lp_solve, LpProblem};
use ssdr::Error;

#[test]
fn maximize_with_a_single_bound() {
    let mut p = LpProblem::new();
    let x = p.add_var(f64::NEG_INFINITY, f64::INFINITY, -1.0);
    p.add_le(vec![(x, 1.0)], 3.0);
    let s = lp_solve(&p).unwrap();
    assert!((s.x[0] - 3.0).abs() < 1e-12);
    assert!((s.objective + 3.0).abs() < 1e-12);
}

#[test]
fn contradictory_rows_are_infeasible() {
    let mut p = LpProblem::new();
    let x = p.add_var(0.0, f64::INFINITY, 1.0);
    p.add_ge(vec![(x, 1.0)], 2.0);
    p.add_le(vec![(x, 1.0)], 1.0);
    assert!(matches!(lp_solve(&p), Err(Error::LpInfeasible)));
    let mut p = LpProblem::new();
    p.add_var(1.0, 0.0, 1.0);
    assert!(matches!(lp_solve(&p), Err(Error::LpInfeasible)));
}

#[test]
fn unbounded_objective() {
    let mut p = LpProblem::new();
    let x = p.add_var(0.0, f64::INFINITY, -1.0);
    let y = p.add_var(0.0, f64::INFINITY, 0.0);
    p.add_le(vec![(x, 1.0), (y, -1.0)], 1.0);
    assert!(matches!(lp_solve(&p), Err(Error::LpUnbounded)));
}

#[test]
fn invalid_input_is_rejected() {
    let mut p = LpProblem::new();
    p.add_var(0.0, 1.0, f64::NAN);
    assert!(matches!(lp_solve(&p), Err(Error::Validation(_))));
    let mut p = LpProblem::new();
    p.add_var(0.0, 1.0, 1.0);
    p.add_le(vec![(4, 1.0)], 1.0);
    assert!(matches!(lp_solve(&p), Err(Error::Validation(_))));
}

#[test]
fn degenerate_vertex() {
    // Three constraints through the optimum of a two-variable problem.
    let mut p = LpProblem::new();
    let x = p.add_var(0.0, f64::INFINITY, -1.0);
    let y = p.add_var(0.0, f64::INFINITY, -1.0);
    p.add_le(vec![(x, 1.0)], 1.0);
    p.add_le(vec![(y, 1.0)], 1.0);
    p.add_le(vec![(x, 1.0), (y, 1.0)], 2.0);
    p.add_eq(vec![(x, 1.0), (y, -1.0)], 0.0);
    let s = lp_solve(&p).unwrap();
    assert!((s.objective + 2.0).abs() < 1e-12);
}

#[test]
fn random_problems_match_the_tableau_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    let mut counts = [0usize; 3];
    for k in 0..100 {
        let p = random_lp(&mut rng);
        let expected = oracle(&p);
        match (lp_solve(&p), &expected) {
            (Ok(s), Outcome::Optimal(v)) => {
                counts[0] += 1;
                assert!((s.objective - v).abs() <= 1e-8 * v.abs().max(1.0), "problem {k}: {} vs {v}", s.objective);
                assert!((p.objective(&s.x) - s.objective).abs() <= 1e-9 * v.abs().max(1.0));
                assert!(p.max_violation(&s.x) <= 1e-8, "problem {k}");
            }
            (Err(Error::LpInfeasible), Outcome::Infeasible) => counts[1] += 1,
            (Err(Error::LpUnbounded), Outcome::Unbounded) => counts[2] += 1,
            (got, _) => panic!("problem {k}: {got:?} vs {expected:?}"),
        }
    }
    assert!(counts[0] >= 60 && counts[1] > 0 && counts[2] > 0, "{counts:?}");
}
