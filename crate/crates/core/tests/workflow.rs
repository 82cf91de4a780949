//! End-to-end use of the public API: describe a chain, plan a budget, then
//! simulate at that budget and compare.

use lpbound::bounds::{thm1_bound, FunctionClass};
use lpbound::chains::zoo;
use lpbound::chains::{
    spectral_gap_exact, uniform_ergodicity_constants, ChainDocument, FiniteChain, FiniteSampler, InitialDistribution,
    StateFunction,
};
use lpbound::estimator::{estimate_e1, exact_e1_small};
use lpbound::planner::{self, Budget, PlanRequest};
use lpbound::report::{to_csv, to_json};

#[test]
fn planned_budget_meets_target_in_simulation() {
    let chain = zoo::two_state().unwrap();
    let nu = InitialDistribution::point_mass(0, &chain).unwrap();
    let f = StateFunction::indicator(1, 2);
    let gap = spectral_gap_exact(&chain).unwrap();
    let ue = uniform_ergodicity_constants(&chain).unwrap();
    let class = FunctionClass::new(2.0, f.norm_p(2.0, &chain).unwrap()).unwrap();

    let eps = 0.1;
    let req = PlanRequest::theorem1(eps, gap, ue.alpha, ue.big_m, nu.dratio, class).unwrap();
    let budget = planner::plan_theorem1(&req).unwrap();
    let (n, n0) = budget.rounded().unwrap();
    assert!(budget.delta.is_none());
    assert!(
        thm1_bound(budget.n, &req.chain_params().unwrap(), &class)
            .unwrap()
            .total
            <= eps * (1.0 + 1e-9)
    );

    let mean = f.mean(&chain).unwrap();
    let sampler = FiniteSampler::new(&chain, &nu);
    let est = estimate_e1(&sampler, &|x| f.eval(x), mean, n as usize, n0 as usize, 4000, 99).unwrap();
    assert!(est.e1_hat + 4.0 * est.uncertainty <= eps, "{est:?}");
}

#[test]
fn chain_document_matches_exact_enumeration() {
    let doc: ChainDocument = serde_json::from_str(
        r#"{"matrix": [[0.5, 0.5, 0.0], [0.25, 0.5, 0.25], [0.0, 0.5, 0.5]], "nu": [1, 0, 0], "reversible": true}"#,
    )
    .unwrap();
    let (chain, nu): (FiniteChain, InitialDistribution) = FiniteChain::from_document(&doc).unwrap();
    assert!((nu.dratio - 3.0).abs() < 1e-12);

    let f = StateFunction::new(vec![0.0, 1.0, 4.0]);
    let mean = f.mean(&chain).unwrap();
    let exact = exact_e1_small(&chain, &nu, &f, 5, 2).unwrap();
    let est = estimate_e1(&FiniteSampler::new(&chain, &nu), &|x| f.eval(x), mean, 5, 2, 200_000, 4).unwrap();
    assert!(
        (est.e1_hat - exact).abs() <= 4.0 * est.uncertainty,
        "exact {exact}, {est:?}"
    );
}

#[test]
fn budgets_survive_serialization() {
    let req = PlanRequest::theorem2(0.05, 0.02, 10.0, FunctionClass::new(1.8, 2.0).unwrap()).unwrap();
    let budget = planner::delta_star(&req).unwrap();
    let back: Budget = serde_json::from_str(&to_json(&budget)).unwrap();
    assert_eq!(back, budget);

    let csv = to_csv(&[budget]);
    let row: Vec<f64> = csv
        .lines()
        .nth(1)
        .unwrap()
        .split(',')
        .map(|v| v.parse().unwrap())
        .collect();
    assert_eq!(row.len(), 5);
    assert!((row[3] / budget.total - 1.0).abs() < 5e-6);
}
