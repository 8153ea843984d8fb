mod common;

use common::*;
use rand::Rng;
use tlac_core::actor_critic::{critic_update, run, CriticIndexing, CriticState, GradientEma, RunConfig};
use tlac_core::model::nts_from_mdp;
use tlac_core::synthesis::{amecs, build_product, goal_and_bad_sets, mrp_to_ssp};
use tlac_core::{
    LabelTiming, LookaheadPolicy, Mode, ModelBuilder, ModelSource, ProbabilityProvider, RspConfig, SspModel,
    SspProbabilities,
};

#[test]
fn critic_matches_recurrence_replay() {
    let mut r = rng(1);
    let lambda = 0.9;
    let mut c = CriticState::default();
    let (mut z, mut b, mut a) = ([0.0f64; 2], [0.0f64; 2], [[0.0f64; 2]; 2]);
    let mut psi_now = [r.gen_range(-1.0..1.0), r.gen_range(-1.0..1.0)];
    for k in 0..100 {
        let psi_next = [r.gen_range(-1.0..1.0), r.gen_range(-1.0..1.0)];
        let g = if r.gen_bool(0.3) { 1.0 } else { 0.0 };
        let gamma = 1.0 / (1.0 + k as f64).powf(0.6);
        critic_update(&mut c, lambda, &psi_now, &psi_next, g, gamma, None);

        let z_old = z;
        b = [
            b[0] + gamma * (g * z_old[0] - b[0]),
            b[1] + gamma * (g * z_old[1] - b[1]),
        ];
        a = [
            [
                a[0][0] + gamma * (z_old[0] * (psi_next[0] - psi_now[0]) - a[0][0]),
                a[0][1] + gamma * (z_old[0] * (psi_next[1] - psi_now[1]) - a[0][1]),
            ],
            [
                a[1][0] + gamma * (z_old[1] * (psi_next[0] - psi_now[0]) - a[1][0]),
                a[1][1] + gamma * (z_old[1] * (psi_next[1] - psi_now[1]) - a[1][1]),
            ],
        ];
        z = [lambda * z_old[0] + psi_now[0], lambda * z_old[1] + psi_now[1]];
        psi_now = psi_next;
    }
    for i in 0..2 {
        assert!((c.z[i] - z[i]).abs() < 1e-12);
        assert!((c.b[i] - b[i]).abs() < 1e-12);
        for j in 0..2 {
            assert!((c.a[i][j] - a[i][j]).abs() < 1e-12);
        }
    }
}

#[test]
fn gate_uses_the_selected_statistics() {
    let mut pre = CriticState {
        a: [[2.0, 0.0], [0.0, 4.0]],
        b: [1.0, 1.0],
        ..Default::default()
    };
    let mut post = pre.clone();
    critic_update(
        &mut pre,
        0.0,
        &[0.0; 2],
        &[0.0; 2],
        0.0,
        0.5,
        Some((CriticIndexing::PreUpdate, 1e-8)),
    );
    assert_eq!(pre.r, [-0.5, -0.25]);
    critic_update(
        &mut post,
        0.0,
        &[0.0; 2],
        &[0.0; 2],
        0.0,
        0.5,
        Some((CriticIndexing::PostUpdate, 1e-8)),
    );
    // A and b both halve, so the solution is unchanged.
    assert_eq!(post.r, [-0.5, -0.25]);
}

#[test]
fn ema_matches_closed_form() {
    let mut r = rng(2);
    let d: f64 = 0.99;
    let mags: Vec<f64> = (0..300).map(|_| r.gen_range(0.0..5.0)).collect();
    let mut e = GradientEma::new(d);
    for m in &mags {
        e.push(*m);
    }
    let n = mags.len();
    let closed: f64 = mags
        .iter()
        .enumerate()
        .map(|(k, m)| (1.0 - d) * d.powi((n - 1 - k) as i32) * m)
        .sum();
    assert!((e.value - closed).abs() < 1e-12);
}

/// `0 --a--> 1` where 1 carries g: the goal is one step away whatever happens.
fn cost_free() -> (tlac_core::ProductModel, SspModel, tlac_core::LabeledModel) {
    let mut b = ModelBuilder::new(Mode::Mdp, 2);
    b.props(["g"]);
    let a = b.action("a");
    let c = b.action("c");
    b.transition(0, a, 1, 1.0).transition(0, c, 1, 1.0);
    b.transition(1, a, 1, 1.0);
    b.label(1, 1);
    let m = b.build().unwrap();
    let p = build_product(&nts_from_mdp(&m), &eventually("g"), LabelTiming::NextState).unwrap();
    let (goal, bad) = goal_and_bad_sets(p.model(), &amecs(&p));
    let ssp = mrp_to_ssp(&p, &goal, &bad).unwrap();
    (p, ssp, m)
}

#[test]
fn cost_free_instance_terminates() {
    let (p, ssp, m) = cost_free();
    let pol = LookaheadPolicy::new(&ssp, &RspConfig::default()).unwrap();
    let mut provider = SspProbabilities::new(&ssp, &p, ModelSource(&m));
    let cfg = RunConfig {
        eval_every: None,
        ..Default::default()
    };
    let out = run(&ssp, &mut provider, &pol, &cfg, &mut |_| None).unwrap();
    assert!(out.converged);
    assert_eq!(out.iterations, cfg.min_iterations);
    assert_eq!(out.theta, cfg.theta0);
    for rec in &out.trace.records {
        assert_eq!(rec.cost, 0.0);
        assert_eq!(rec.r, [0.0, 0.0]);
    }
    assert_eq!(provider.computed_pairs(), 2);
}

/// Random MDP instance with its NTS-mode SSP for the loop and the MDP
/// model for the provider.
struct Lazy {
    model: tlac_core::LabeledModel,
    product: tlac_core::ProductModel,
    ssp: SspModel,
}

fn lazy_instance(seed: u64) -> Lazy {
    let inst = random_instance(&mut rng(seed), 8, 3, Mode::Mdp);
    let nts_product = inst.product.with_model(nts_from_mdp(inst.product.model()));
    let ssp = mrp_to_ssp(&nts_product, &inst.goal, &inst.bad).unwrap();
    Lazy {
        model: inst.model,
        product: inst.product,
        ssp,
    }
}

#[test]
fn runs_are_reproducible_and_lazy() {
    for seed in 0..10 {
        let inst = lazy_instance(seed);
        let pol = LookaheadPolicy::new(&inst.ssp, &RspConfig::default()).unwrap();
        let cfg = RunConfig {
            max_iterations: 600,
            seed,
            eval_every: None,
            ..Default::default()
        };
        let once = || {
            let mut provider = SspProbabilities::new(&inst.ssp, &inst.product, ModelSource(&inst.model));
            let out = run(&inst.ssp, &mut provider, &pol, &cfg, &mut |_| None).unwrap();
            (out, provider.computed().collect::<Vec<_>>())
        };
        let (a, pairs) = once();
        let (b, _) = once();
        assert_eq!(a, b);

        let recs = &a.trace.records;
        assert!(pairs.len() <= a.iterations);
        assert_eq!(recs.last().unwrap().pairs, pairs.len());
        for w in recs.windows(2) {
            assert!(w[1].pairs >= w[0].pairs);
            if w[0].state == inst.ssp.terminal() {
                assert_eq!(w[1].state, inst.ssp.initial());
            }
        }
        let mut hits = 0;
        for rec in recs {
            hits += usize::from(rec.state == inst.ssp.terminal());
            assert_eq!(rec.episodes, hits);
        }
        for rec in recs {
            assert_eq!(rec.cost, if inst.ssp.is_bad(rec.state) { 1.0 } else { 0.0 });
        }
        // Every computed pair was visited with a non-trivial row.
        for (x, u) in pairs {
            assert!(recs.iter().any(|r| r.state == x && r.action == u));
            assert!(x != inst.ssp.terminal() && !inst.ssp.is_bad(x));
        }
    }
}

#[test]
fn provider_rows_lift_base_probabilities() {
    for seed in 0..10 {
        let inst = random_instance(&mut rng(seed), 8, 3, Mode::Mdp);
        let mut provider = SspProbabilities::new(&inst.ssp, &inst.product, ModelSource(&inst.model));
        let m = inst.ssp.model();
        for x in 0..m.num_states() {
            for c in m.choices(x) {
                let row = provider.probabilities(x, c.action).unwrap();
                assert_eq!(row.len(), c.successors.len());
                for (&(t, w), &(t2, w2)) in row.iter().zip(&c.successors) {
                    assert_eq!(t, t2);
                    assert!((w - w2).abs() < 1e-12);
                }
            }
        }
        let before = provider.computed_pairs();
        for x in 0..m.num_states() {
            for c in m.choices(x) {
                provider.probabilities(x, c.action).unwrap();
            }
        }
        assert_eq!(provider.computed_pairs(), before);
    }
}

#[test]
fn zero_cost_keeps_theta_still() {
    // Bad states are unreachable, so every cost is zero and r never moves.
    let (p, ssp, m) = cost_free();
    let pol = LookaheadPolicy::new(&ssp, &RspConfig::default()).unwrap();
    let mut provider = SspProbabilities::new(&ssp, &p, ModelSource(&m));
    let cfg = RunConfig {
        epsilon: -1.0,
        max_iterations: 300,
        eval_every: None,
        ..Default::default()
    };
    let out = run(&ssp, &mut provider, &pol, &cfg, &mut |_| None).unwrap();
    assert!(!out.converged);
    assert_eq!(out.iterations, 300);
    for rec in &out.trace.records {
        assert_eq!(rec.theta, cfg.theta0);
    }
}
