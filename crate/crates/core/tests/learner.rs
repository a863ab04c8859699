//! Constrained training on generated data with known structure.

mod common;

use common::synthetic;
use fairsep_core::dataset::{stratified_split, EffortScope, EncodeOptions, Encoder};
use fairsep_core::groupstats::RateMode;
use fairsep_core::learner::{
    compile_constraints, compile_constraints_with, fit_base, train, EffortSides, MemberOutput,
    PredictMode, ReductionParams, TrainedModel,
};
use fairsep_core::notions::{evaluate, NotionConfig, NotionKind};

fn dp() -> NotionConfig {
    NotionConfig::new(NotionKind::DP, "sex").with_mode(RateMode::Expected)
}

fn quick() -> ReductionParams {
    ReductionParams {
        max_iter: 20,
        ..ReductionParams::default()
    }
}

#[test]
fn dp_compiles_to_four_constraints_for_two_groups() {
    let t = synthetic::planted_dp(200, 1);
    let r = dp().resolve(&t).unwrap();
    let set = compile_constraints(&t, &r, 0.02).unwrap();
    assert_eq!(set.len(), 4);
    assert_eq!(
        set.names(),
        [
            "DP[F] parity+",
            "DP[F] parity-",
            "DP[M] parity+",
            "DP[M] parity-"
        ]
    );
}

fn sep() -> NotionConfig {
    NotionConfig::new(NotionKind::SEP, "sex")
        .with_privilege("wealth", 25.0)
        .with_effort("hours", EffortScope::PerGroup)
        .with_mode(RateMode::Expected)
}

#[test]
fn two_sided_effort_adds_the_reverse_constraints() {
    let t = synthetic::privilege_driven(400, 2);
    let r = sep().resolve(&t).unwrap();
    let one = compile_constraints(&t, &r, 0.02).unwrap();
    let two = compile_constraints_with(&t, &r, 0.02, EffortSides::TwoSided).unwrap();
    assert_eq!(
        one,
        compile_constraints_with(&t, &r, 0.02, EffortSides::OneSided).unwrap()
    );
    // All privileged rows are positive here, so only the effort term is compiled.
    assert_eq!(
        one.names(),
        [
            "SEP[F] parity+",
            "SEP[F] parity-",
            "SEP[F] effort",
            "SEP[M] parity+",
            "SEP[M] parity-",
            "SEP[M] effort"
        ]
    );
    assert_eq!(two.len(), one.len() + 2);
    for c in &two.constraints {
        if let Some(base) = c.name.strip_suffix(" reverse") {
            let forward = two.constraints.iter().find(|f| f.name == base).unwrap();
            assert!(c
                .weights
                .iter()
                .zip(&forward.weights)
                .all(|(a, b)| *a == -b));
        }
    }
}

#[test]
fn one_sided_effort_leaves_the_absolute_term_open() {
    // Privilege drives the label and effort is noise. The one-sided effort
    // constraint is met by accepting every high-effort underprivileged row,
    // which the absolute effort term of the measure penalises; two-sided
    // compilation bounds it.
    let t = synthetic::privilege_driven(4000, 8);
    let (tr, te) = stratified_split(&t, "sex", 0.3, 0).unwrap();
    let (train_t, test_t) = (t.select_rows(&tr), t.select_rows(&te));
    let encode = EncodeOptions {
        include_protected: true,
        exclude: Vec::new(),
    };
    let r = sep().resolve(&test_t).unwrap();
    let measured = |sides| {
        let params = ReductionParams {
            effort_sides: sides,
            ..ReductionParams::default()
        };
        let m = train(&train_t, Some(&sep()), &encode, &params).unwrap();
        assert!(!m.model.infeasible);
        let scores = m.predict(&test_t, PredictMode::Score).unwrap();
        evaluate(&test_t, &scores, &r).unwrap().aggregate
    };
    let one = measured(EffortSides::OneSided);
    let two = measured(EffortSides::TwoSided);
    assert!(two <= 0.05, "two-sided held-out SEP {two}");
    assert!(one > two, "one-sided {one} vs two-sided {two}");
}

#[test]
fn planted_gap_is_closed_by_training() {
    let t = synthetic::planted_dp(3000, 11);
    let params = ReductionParams::default();
    let r = dp().resolve(&t).unwrap();
    let free = train(&t, None, &EncodeOptions::default(), &params).unwrap();
    let free_scores = free.predict(&t, PredictMode::Score).unwrap();
    let free_gap = evaluate(&t, &free_scores, &r).unwrap().aggregate;
    assert!(free_gap >= 0.2, "unconstrained DP gap {free_gap}");

    let fair = train(&t, Some(&dp()), &EncodeOptions::default(), &params).unwrap();
    let scores = fair.predict(&t, PredictMode::Score).unwrap();
    let gap = evaluate(&t, &scores, &r).unwrap().aggregate;
    assert!(gap <= params.eps_train + 0.02, "constrained DP gap {gap}");
    assert!(!fair.model.infeasible);
}

#[test]
fn independent_attribute_is_feasible_from_the_first_iteration() {
    let t = synthetic::independent_sex(1000, 5);
    let fair = train(&t, Some(&dp()), &EncodeOptions::default(), &quick()).unwrap();
    let first = &fair.model.trajectory[0];
    assert_eq!(first.iteration, 1);
    assert!(first.mixture_max_violation <= 0.0, "{first:?}");
    assert_eq!(fair.model.final_max_violation, 0.0);
}

#[test]
fn training_is_deterministic() {
    let t = synthetic::planted_dp(800, 3);
    let a = train(&t, Some(&dp()), &EncodeOptions::default(), &quick()).unwrap();
    let b = train(&t, Some(&dp()), &EncodeOptions::default(), &quick()).unwrap();
    assert_eq!(a, b);
}

#[test]
fn constraint_moments_are_linear_in_the_mixture() {
    let t = synthetic::planted_dp(800, 4);
    let fair = train(&t, Some(&dp()), &EncodeOptions::default(), &quick()).unwrap();
    assert!(fair.model.members.len() > 1);
    assert_eq!(fair.model.member_output, MemberOutput::Label);
    let x = fair.encoder.transform(&t).unwrap();
    let mix = fair.predict(&t, PredictMode::Score).unwrap();
    let r = fair.notion.as_ref().unwrap();
    let set = compile_constraints(&t, r, 0.02).unwrap();
    let outputs: Vec<Vec<f64>> = fair
        .model
        .members
        .iter()
        .map(|m| {
            m.model
                .predict_labels(x.view())
                .unwrap()
                .into_iter()
                .map(f64::from)
                .collect()
        })
        .collect();
    for (i, &s) in mix.iter().enumerate() {
        let lo = outputs.iter().map(|o| o[i]).fold(f64::INFINITY, f64::min);
        let hi = outputs
            .iter()
            .map(|o| o[i])
            .fold(f64::NEG_INFINITY, f64::max);
        assert!(s >= lo - 1e-12 && s <= hi + 1e-12);
    }
    for c in &set.constraints {
        let combined: f64 = fair
            .model
            .members
            .iter()
            .zip(&outputs)
            .map(|(m, o)| m.weight * c.moment(o))
            .sum();
        assert!((c.moment(&mix) - combined).abs() <= 1e-12, "{}", c.name);
    }
}

#[test]
fn no_constraints_is_exactly_the_base_fit() {
    let t = synthetic::planted_dp(500, 8);
    let params = quick();
    let trained = train(&t, None, &EncodeOptions::default(), &params).unwrap();
    let x = Encoder::fit(&t, &EncodeOptions::default())
        .unwrap()
        .transform(&t)
        .unwrap();
    let base = fit_base(x.view(), t.labels(), None, &params.base).unwrap();
    assert_eq!(trained.model.members.len(), 1);
    assert_eq!(trained.model.members[0].model, base.model);
    assert_eq!(
        trained.predict(&t, PredictMode::Score).unwrap(),
        base.model.predict_proba(x.view()).unwrap()
    );
}

#[test]
fn saved_model_reproduces_predictions() {
    let t = synthetic::planted_dp(400, 9);
    let fair = train(&t, Some(&dp()), &EncodeOptions::default(), &quick()).unwrap();
    let back = TrainedModel::from_json(&fair.to_json().unwrap()).unwrap();
    assert_eq!(back, fair);
    assert_eq!(
        back.predict(&t, PredictMode::Score).unwrap(),
        fair.predict(&t, PredictMode::Score).unwrap()
    );
}
