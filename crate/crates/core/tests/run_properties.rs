use proptest::prelude::*;
use viopt_core::problems::{make_stochastic_bilinear, ProblemInstance};
use viopt_core::solvers::*;
use viopt_core::Error;

fn bench(seed: u64) -> ProblemInstance {
    make_stochastic_bilinear(10, 2, 0.5, seed).unwrap()
}

fn every_rule() -> Vec<Method> {
    vec![
        Method::Rule(Rule::Simultaneous),
        Method::Rule(Rule::Alternated),
        Method::Rule(Rule::Extragradient { reuse_sample: false }),
        Method::Rule(Rule::Extragradient { reuse_sample: true }),
        Method::Rule(Rule::PastExtragradient),
        Method::ExtraAdam { hyper: AdamHyper::default(), option: ExtrapolationOption::Standard },
        Method::ExtraAdam { hyper: AdamHyper::default(), option: ExtrapolationOption::FromPast },
        Method::Adam { hyper: AdamHyper::default(), mode: AdamMode::Simultaneous },
        Method::Adam { hyper: AdamHyper::default(), mode: AdamMode::Alternated { k: 2 } },
    ]
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 24, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn iterates_stay_feasible(problem_seed in 0u64..50, run_seed in any::<u64>(), eta in 0.001f64..2.0) {
        let p = bench(problem_seed);
        let opts = RunOptions::constant(eta, 40).with_seed(run_seed).with_stride(1).with_start(vec![0.9, -0.9, 0.5, 3.0]);
        for m in every_rule() {
            let run = run_method(&p, &m, &opts).unwrap();
            for (t, w) in &run.trajectory {
                prop_assert!(p.constraints().contains(w, 1e-12), "{} t={}", run.method, t);
            }
            if let Some(avg) = &run.average {
                prop_assert!(p.constraints().contains(avg, 1e-9));
            }
        }
    }

    #[test]
    fn runs_replay_exactly(problem_seed in 0u64..50, run_seed in any::<u64>()) {
        let p = bench(problem_seed);
        let opts = RunOptions::constant(0.05, 30).with_seed(run_seed);
        for m in every_rule() {
            let a = run_method(&p, &m, &opts).unwrap();
            let b = run_method(&p, &m, &opts).unwrap();
            prop_assert_eq!(a.last, b.last);
            prop_assert_eq!(a.eval_count, b.eval_count);
        }
    }
}

#[test]
fn unconstrained_rules_refuse_constrained_problems() {
    let opts = RunOptions::constant(0.05, 10);
    let err = run_rule(&bench(1), Rule::Nesterov { beta: 0.5 }, &opts).unwrap_err();
    assert_eq!(err, Error::RequiresUnconstrained { rule: "nesterov" });
    let err = run_rule(&bench(1), Rule::Implicit, &opts).unwrap_err();
    assert_eq!(err, Error::RequiresUnconstrained { rule: "implicit" });
}
