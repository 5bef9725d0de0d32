use std::sync::Arc;

use lfp_core::risk::{bayes_risk, risk_of_estimator};
use lfp_core::solver::{
    cardinality_bounds, default_atoms, grid_oracle, report, solve, sweep, GRID_ORACLE_GAP_TOL,
};
use lfp_core::{
    BinomialChannel, BregmanLoss, Error, GradientMode, MomentConstraint, ProblemSpec, ProblemSpecF32,
    ProblemSpecF64, ProductChannel, QuantizedGaussianChannel, SolverConfigF32, SolverConfigF64, SupportSet,
};

fn binomial(m: i64) -> ProblemSpecF64 {
    ProblemSpec::new(
        Arc::new(BinomialChannel::new(m).unwrap()),
        BregmanLoss::squared_error(1),
        SupportSet::interval(0.0, 1.0).unwrap(),
    )
    .unwrap()
}

fn qgauss(levels: i64) -> ProblemSpecF64 {
    ProblemSpec::new(
        Arc::new(QuantizedGaussianChannel::new(levels).unwrap()),
        BregmanLoss::squared_error(1),
        SupportSet::interval(-5.0, 5.0).unwrap(),
    )
    .unwrap()
}

#[test]
fn default_atom_counts() {
    assert_eq!(default_atoms(&binomial(3)), 7);
    let b = cardinality_bounds(&qgauss(4));
    assert_eq!(b.t_compatible, 9);
    let no_refined = binomial(3).with_moment_constraints(vec![], false);
    assert_eq!(default_atoms(&no_refined), 8);
}

#[test]
fn result_invariants() {
    for spec in [binomial(2), binomial(5), qgauss(2)] {
        let cfg = SolverConfigF64::default();
        let r = solve(&spec, &cfg).unwrap();
        let exact = bayes_risk(&r.prior, spec.channel.as_ref(), &spec.loss).unwrap();
        assert!((exact - r.risk).abs() <= 1e-10);
        assert!(r.prior.len() <= r.bound_used);
        assert_eq!(r.bound_used, default_atoms(&spec));
        assert!(r.prior.validate(&spec.support).is_ok());
        assert_eq!(r.restart_risks.len(), cfg.restarts);
        for w in r.trace.windows(2) {
            assert!(w[1].risk >= w[0].risk - 1e-9, "{:?}", w);
            assert!(w[1].iteration > w[0].iteration);
        }
        assert!(r.diagnostics.grid_upper_bound.unwrap() >= r.risk - 1e-9);
    }
}

#[test]
fn maximin_below_minimax() {
    for m in [1, 4, 7] {
        let spec = binomial(m);
        let r = solve(&spec, &SolverConfigF64::default()).unwrap();
        let a = (m as f64).sqrt() / 2.0;
        let est: Vec<Vec<f64>> = (0..=m).map(|y| vec![(y as f64 + a) / (m as f64 + 2.0 * a)]).collect();
        let minimax = risk_of_estimator(&r.prior, spec.channel.as_ref(), &spec.loss, &est).unwrap();
        assert!(r.risk <= minimax + 1e-9);
    }
}

#[test]
fn single_point_support_has_zero_risk() {
    let spec = ProblemSpec::new(
        Arc::new(BinomialChannel::new(3).unwrap()),
        BregmanLoss::squared_error(1),
        SupportSet::interval(0.3, 0.3).unwrap(),
    )
    .unwrap();
    let r = solve(&spec, &SolverConfigF64::default()).unwrap();
    assert_eq!(r.prior.len(), 1);
    assert!(r.risk.abs() < 1e-15);
}

#[test]
fn rejects_bad_input() {
    let spec = binomial(2).with_moment_constraints(
        vec![MomentConstraint {
            function: "x^2".into(),
            bound: 0.5,
        }],
        true,
    );
    assert!(matches!(solve(&spec, &SolverConfigF64::default()), Err(Error::Unsupported(_))));

    let bad = [
        SolverConfigF64 {
            restarts: 0,
            ..Default::default()
        },
        SolverConfigF64 {
            step: Some(0.0),
            ..Default::default()
        },
        SolverConfigF64 {
            d: Some(0),
            ..Default::default()
        },
    ];
    for cfg in bad {
        assert!(matches!(solve(&binomial(2), &cfg), Err(Error::InvalidParameter(_))));
    }

    let gid = ProblemSpec::new(
        Arc::new(ProductChannel::power(Arc::new(BinomialChannel::new(1).unwrap()), 2).unwrap()),
        BregmanLoss::generalized_i_divergence(),
        SupportSet::boxed(vec![0.1, 0.1], vec![1.0, 1.0]).unwrap(),
    )
    .unwrap();
    let cfg = SolverConfigF64 {
        gradient_mode: GradientMode::Analytic,
        ..Default::default()
    };
    assert!(matches!(solve(&gid, &cfg), Err(Error::Unsupported(_))));
}

#[test]
fn forced_atom_count() {
    let cfg = SolverConfigF64 {
        d: Some(2),
        minimize_support: false,
        ..Default::default()
    };
    let r = solve(&binomial(1), &cfg).unwrap();
    assert_eq!(r.bound_used, 2);
    assert!((r.risk - 0.0625).abs() < 1e-12);
}

#[test]
fn finite_difference_mode_on_a_product_channel() {
    let spec = ProblemSpec::new(
        Arc::new(ProductChannel::power(Arc::new(BinomialChannel::new(1).unwrap()), 2).unwrap()),
        BregmanLoss::generalized_i_divergence(),
        SupportSet::boxed(vec![0.1, 0.1], vec![1.0, 1.0]).unwrap(),
    )
    .unwrap();
    let cfg = SolverConfigF64 {
        restarts: 2,
        max_iter: 300,
        minimize_support: false,
        ..Default::default()
    };
    let r = solve(&spec, &cfg).unwrap();
    assert_eq!(r.diagnostics.gradient_mode, GradientMode::Fd);
    assert!(r.risk > 0.0 && r.risk.is_finite());
    assert!(r.prior.validate(&spec.support).is_ok());
    let exact = bayes_risk(&r.prior, spec.channel.as_ref(), &spec.loss).unwrap();
    assert!((exact - r.risk).abs() <= 1e-10);
    // A point mass already achieves 0, so ascent must improve on it.
    assert!(r.trace.last().unwrap().risk >= r.trace[0].risk);
}

#[test]
fn single_precision() {
    let spec = ProblemSpecF32::new(
        Arc::new(BinomialChannel::new(1).unwrap()),
        BregmanLoss::squared_error(1),
        SupportSet::interval(0.0f32, 1.0).unwrap(),
    )
    .unwrap();
    let cfg = SolverConfigF32 {
        restarts: 2,
        grad_tol: 1e-5,
        risk_tol: 1e-7,
        ..Default::default()
    };
    let r = solve(&spec, &cfg).unwrap();
    assert!((r.risk - 0.0625).abs() < 1e-4, "{}", r.risk);
}

#[test]
fn grid_oracle_examples() {
    let r = grid_oracle(&binomial(1), 501, 20_000).unwrap();
    assert!(r.risk >= 0.0625 - 1e-5);
    assert!(r.risk <= 0.0625 + 1e-12);
    assert!((r.masses.iter().sum::<f64>() - 1.0).abs() < 1e-12);

    let one = grid_oracle(&binomial(4), 1, 10).unwrap();
    assert_eq!(one.risk, 0.0);
    assert_eq!(one.masses, vec![1.0]);

    assert!(grid_oracle(&binomial(1), 0, 10).is_err());
}

/// Recorded once from this implementation; the gap certificate bounds its error.
#[test]
fn grid_oracle_regression_value() {
    let r = grid_oracle(&qgauss(1), 1001, 100_000).unwrap();
    assert!(r.gap <= 10.0 * GRID_ORACLE_GAP_TOL, "{}", r.gap);
    assert!((r.risk - 4.838_836_682_919_635).abs() <= 1e-9, "{}", r.risk);
}

#[test]
fn sweep_keeps_parameter_order() {
    let cfg = SolverConfigF64 {
        restarts: 2,
        ..Default::default()
    };
    let entries = sweep(|m| Ok(binomial(m)), &[3, 1, 2], &cfg).unwrap();
    let order: Vec<i64> = entries.iter().map(|e| e.parameter).collect();
    assert_eq!(order, vec![3, 1, 2]);
    assert!(sweep(
        |m| Ok(ProblemSpec::new(
            Arc::new(BinomialChannel::new(m)?),
            BregmanLoss::squared_error(1),
            SupportSet::interval(0.0, 1.0)?
        )?),
        &[0],
        &cfg
    )
    .is_err());

    let support = report::support_csv(&entries);
    assert!(support.starts_with("parameter,atom,location,mass\n"));
    let rows: usize = entries.iter().map(|e| e.result.prior.len()).sum();
    assert_eq!(support.lines().count(), rows + 1);

    let pmf = report::pmf_csv(&entries);
    let last = pmf.lines().filter(|l| l.starts_with("3,")).last().unwrap();
    let cumulative: f64 = last.rsplit(',').next().unwrap().parse().unwrap();
    assert!((cumulative - 1.0).abs() < 1e-12);

    let summary = report::summary_csv(&entries);
    assert_eq!(summary.lines().count(), 4);
    assert!(report::trace_csv(&entries[0].result).starts_with("iteration,risk\n0,"));
}

#[test]
fn channel_outputs_match_bounds() {
    let spec = qgauss(3);
    assert_eq!(spec.channel.output_count(), 7);
    assert_eq!(cardinality_bounds(&spec).refined, 13);
}
