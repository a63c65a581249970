mod common;

use common::{grad_check, toy_problem, GRAD_EPS, REL_FLOOR};
use hasa_core::train::TrainMode;

#[test]
fn multitask_gradients_match_central_differences() {
    for seed in 0..8 {
        let p = toy_problem(seed, TrainMode::Multitask);
        let r = grad_check(&p, GRAD_EPS, REL_FLOOR);
        assert!(r.max_rel_error < 1e-6, "seed {seed}: {}", r.worst);
    }
}

#[test]
fn single_task_gradients_match_central_differences() {
    for (seed, mode) in [(100, TrainMode::QualityOnly), (101, TrainMode::IntelligibilityOnly)] {
        let r = grad_check(&toy_problem(seed, mode), GRAD_EPS, REL_FLOOR);
        assert!(r.max_rel_error < 1e-6, "{mode:?}: {}", r.worst);
    }
}

#[test]
fn zero_alpha_leaves_quality_branch_untrained() {
    let mut p = toy_problem(7, TrainMode::Multitask);
    p.alpha = 0.0;
    let g = common::analytic_grads(&p);
    let q = g.quality.as_ref().unwrap();
    for t in [&q.attention.w_query, &q.attention.w_key, &q.attention.w_value, &q.attention.w_output, &q.head.weight, &q.head.bias] {
        assert!(t.data().iter().all(|&v| v == 0.0));
    }
    assert!(g.intelligibility.as_ref().unwrap().head.weight.data().iter().any(|&v| v != 0.0));
}
