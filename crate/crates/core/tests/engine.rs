mod common;

use std::collections::BTreeSet;

use cliquenet::generate::{asia, random_network, RandomSpec};
use cliquenet::oracle::{enumerate_joint, oracle_joint, oracle_query};
use cliquenet::{
    Engine, Engine64, Error, ExactEngine, Factor, Network64, NetworkBuilder, Query, Resolution,
    Variable,
};
use common::{asia_order, assert_close, sample_query};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn set(s: &str) -> BTreeSet<String> {
    s.chars().map(|c| c.to_string()).collect()
}

fn asia_engine() -> Engine64 {
    Engine::with_order(asia(), Some(&asia_order())).unwrap()
}

fn clique_id(e: &Engine64, members: &str) -> usize {
    e.tree().cliques().iter().find(|c| c.members == set(members)).unwrap().id
}

#[test]
fn asia_query_trace() {
    let mut e = asia_engine();
    let (_, trace) = e.query_joint_traced(&["A", "X", "S"]).unwrap();
    let seen: Vec<(BTreeSet<String>, BTreeSet<String>, BTreeSet<String>)> = trace
        .iter()
        .map(|ev| {
            (
                e.tree().clique(ev.clique).members.clone(),
                ev.targets.iter().cloned().collect(),
                ev.given.iter().cloned().collect(),
            )
        })
        .collect();
    let expected = [
        ("AT", "AXS", ""),
        ("TLE", "XS", "T"),
        ("LEB", "XS", "LE"),
        ("EBD", "X", "EB"),
        ("EX", "X", "E"),
        ("BLS", "S", "BL"),
    ];
    assert_eq!(seen.len(), expected.len());
    for (got, (c, x, s)) in seen.iter().zip(expected) {
        assert_eq!(got, &(set(c), set(x), set(s)));
    }
    // the two leaves are answered by their stored set-chain conditionals
    assert_eq!(trace[4].resolution, Resolution::Stored);
    assert_eq!(trace[5].resolution, Resolution::Stored);
    assert_eq!(trace[0].targets, ["A", "X", "S"]);
    assert_eq!(trace[1].targets, ["X", "S"]);
}

#[test]
fn query_inside_root_needs_no_children() {
    let mut e = asia_engine();
    let (f, trace) = e.query_joint_traced(&["A", "T"]).unwrap();
    assert_eq!(trace.len(), 1);
    assert_close(&f, &e.states()[0].marginal, 0.0);
    assert_eq!(e.op_counters().multiplications, 0);
}

#[test]
fn clique_answers_match_hand_derivations() {
    let mut e = asia_engine();
    let net = asia::<f64>();
    let cpt = |v: &str| net.cpt(v).unwrap().clone();

    // at (EX): P(X|E) is the stored set-chain
    let ex = clique_id(&e, "EX");
    assert_close(&e.resolve_at_clique(ex, &["X"]).unwrap(), &cpt("X"), 1e-15);

    // at (EBD): P(X|EB) = sum_D P(X|E) P(D|BE)
    let ebd = clique_id(&e, "EBD");
    let got = e.resolve_at_clique(ebd, &["X"]).unwrap();
    let want = Factor::from_fn(
        vec![net.variable("E").unwrap().clone(), net.variable("B").unwrap().clone(), net.variable("X").unwrap().clone()],
        |s| {
            let (ei, bi, xi) = (s[0], s[1], s[2]);
            (0..2)
                .map(|d| cpt("X").get(&[ei, xi]).unwrap() * cpt("D").get(&[bi, ei, d]).unwrap())
                .sum()
        },
    )
    .unwrap();
    assert_close(&got, &want, 1e-15);

    // at (LEB): P(XS|LE) = sum_B P(S|BL) P(X|EB) P(B|LE)
    let leb = clique_id(&e, "LEB");
    let bls = clique_id(&e, "BLS");
    let p_s_bl = e.states()[bls].set_chain.clone();
    let p_b_le = e.states()[leb].set_chain.clone();
    let got = e.resolve_at_clique(leb, &["X", "S"]).unwrap();
    let want = p_s_bl
        .multiply(&want)
        .unwrap()
        .multiply(&p_b_le)
        .unwrap()
        .sum_out(&["B"])
        .unwrap();
    assert_close(&got, &want, 1e-15);
    // conditionals over the targets
    let sums = got.sum_out(&["X", "S"]).unwrap();
    assert!(sums.values().iter().all(|s| (s - 1.0).abs() < 1e-12));
}

#[test]
fn evidence_follows_nested_sum() {
    let fresh = asia_engine();
    let table = |m: &str| fresh.states()[clique_id(&fresh, m)].set_chain.clone();
    let (p_at, p_le_t, p_b_le, p_s_bl, p_d_be, p_x_e) =
        (table("AT"), table("TLE"), table("LEB"), table("BLS"), table("EBD"), table("EX"));
    let get = |f: &Factor<f64>, pairs: &[(&str, usize)]| {
        let states: Vec<usize> = f
            .names()
            .map(|n| pairs.iter().find(|(k, _)| *k == n).unwrap().1)
            .collect();
        *f.get(&states).unwrap()
    };
    let e_star = 0; // E = yes
    let mut expected = vec![0.0; 8];
    for a in 0..2 {
        for x in 0..2 {
            for s in 0..2 {
                let mut total = 0.0;
                for t in 0..2 {
                    for l in 0..2 {
                        for b in 0..2 {
                            for d in 0..2 {
                                let v = [("A", a), ("X", x), ("S", s), ("T", t), ("L", l), ("B", b), ("D", d), ("E", e_star)];
                                total += get(&p_s_bl, &v)
                                    * get(&p_x_e, &v)
                                    * get(&p_d_be, &v)
                                    * get(&p_b_le, &v)
                                    * get(&p_le_t, &v)
                                    * get(&p_at, &v);
                            }
                        }
                    }
                }
                expected[a * 4 + x * 2 + s] = total;
            }
        }
    }
    let mut e = asia_engine();
    e.observe_label("E", "yes").unwrap();
    let got = e.query_joint(&["A", "X", "S"]).unwrap();
    let want = Factor::new(got.scope().to_vec(), expected).unwrap();
    assert_close(&got, &want, 1e-12);

    // unnormalized mass is P(E = yes)
    let joint = enumerate_joint(&asia::<f64>()).unwrap();
    let p_e = oracle_joint(&joint, &["E"], &[]).unwrap().values()[0];
    assert!((got.total() - p_e).abs() <= 1e-12);
    assert!((e.evidence_probability().unwrap() - p_e).abs() <= 1e-12);
    let posterior = e.query_conditional(&Query::joint(&["A", "X", "S"])).unwrap();
    let oracle = oracle_query(&joint, &["A", "X", "S"], &[] as &[&str], &[("E".into(), 0)]).unwrap();
    assert_close(&posterior, &oracle, 1e-9);
}

#[test]
fn evidence_outside_the_query_still_counts() {
    let mut e = asia_engine();
    e.observe_label("X", "yes").unwrap();
    let joint = enumerate_joint(&asia::<f64>()).unwrap();
    let got = e.query_conditional(&Query::joint(&["A"])).unwrap();
    let want = oracle_query(&joint, &["A"], &[] as &[&str], &[("X".into(), 0)]).unwrap();
    assert_close(&got, &want, 1e-12);
    let prior = oracle_query(&joint, &["A"], &[] as &[&str], &[]).unwrap();
    assert!(got.max_abs_diff(&prior).unwrap() > 1e-6);
}

fn corpus(seed: u64, count: usize) -> Vec<Network64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|i| {
            random_network(
                &mut rng,
                RandomSpec {
                    variables: 3 + i % 8,
                    max_parents: 3,
                    max_cardinality: 3,
                    zero_weight: 0.1,
                },
            )
        })
        .collect()
}

#[test]
fn answers_match_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    for net in corpus(3, 60) {
        let joint = enumerate_joint(&net).unwrap();
        let mut e = Engine::new(net.clone()).unwrap();
        for _ in 0..8 {
            let q = sample_query(&mut rng, &net, 2);
            // joint form, no evidence
            let got = e.query_joint(&q.targets).unwrap();
            assert_close(&got, &oracle_joint(&joint, &q.targets, &[]).unwrap(), 1e-9);
            assert!((got.marginal::<&str>(&[]).unwrap().values()[0] - 1.0).abs() < 1e-9);
            // conditional with transient evidence
            let query = Query {
                targets: q.targets.clone(),
                given: q.given.clone(),
                evidence: q.evidence.clone(),
            };
            let got = e.query_conditional(&query).unwrap();
            let want = oracle_query(&joint, &q.targets, &q.given, &q.evidence).unwrap();
            assert_close(&got, &want, 1e-9);
            assert!(e.evidence().is_empty());
        }
    }
}

#[test]
fn persistent_evidence_matches_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for net in corpus(8, 40) {
        let joint = enumerate_joint(&net).unwrap();
        let mut e = Engine::new(net.clone()).unwrap();
        let q = sample_query(&mut rng, &net, 3);
        // warm the cache first so substitution into cached answers is exercised
        let all: Vec<&str> = net.names().collect();
        let _ = e.query_joint(&all[..all.len().min(3)]).unwrap();
        let _ = e.query_joint(&q.targets).unwrap();
        for (v, s) in &q.evidence {
            e.observe(v, *s).unwrap();
        }
        let got = e.query_conditional(&Query::conditional(&q.targets, &q.given)).unwrap();
        let want = oracle_query(&joint, &q.targets, &q.given, &q.evidence).unwrap();
        assert_close(&got, &want, 1e-9);
        let unnorm = e.query_joint(&q.targets).unwrap();
        assert_close(&unnorm, &oracle_joint(&joint, &q.targets, &q.evidence).unwrap(), 1e-9);
    }
}

#[test]
fn exact_backend_agrees_with_oracle_exactly() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    for i in 0..15 {
        let net = random_network(
            &mut rng,
            RandomSpec {
                variables: 3 + i % 5,
                max_parents: 2,
                max_cardinality: 2,
                zero_weight: 0.1,
            },
        );
        let joint = enumerate_joint(&net).unwrap();
        let mut e = ExactEngine::new(net.clone()).unwrap();
        for _ in 0..4 {
            let q = sample_query(&mut rng, &net, 2);
            let query = Query {
                targets: q.targets.clone(),
                given: q.given.clone(),
                evidence: q.evidence.clone(),
            };
            let got = e.query_conditional(&query).unwrap();
            let want = oracle_query(&joint, &q.targets, &q.given, &q.evidence).unwrap();
            assert!(got.same_cells(&want), "{got:?} != {want:?}");
        }
    }
}

#[test]
fn f32_backend_runs() {
    let mut e = cliquenet::Engine32::with_order(asia(), Some(&asia_order())).unwrap();
    let f = e.query_joint(&["A", "X", "S"]).unwrap();
    assert!((f.total() - 1.0).abs() < 1e-5);
}

#[test]
fn conditional_recovers_cpt() {
    let net = asia::<f64>();
    let mut e = asia_engine();
    let got = e.query_conditional(&Query::conditional(&["D"], &["B", "E"])).unwrap();
    assert_close(&got, net.cpt("D").unwrap(), 1e-12);
    let got = e.query_conditional(&Query::conditional(&["T"], &["A"])).unwrap();
    assert_close(&got, net.cpt("T").unwrap(), 1e-12);
    // empty conditioning gives the normalized joint
    let p = e.query_conditional(&Query::joint(&["L", "B"])).unwrap();
    assert_close(&p, &e.query_joint(&["L", "B"]).unwrap(), 1e-15);
}

#[test]
fn query_errors() {
    let mut e = asia_engine();
    assert!(matches!(e.query_joint(&["Q"]), Err(Error::UnknownVariable(_))));
    assert!(matches!(e.query_joint::<&str>(&[]), Err(Error::InvalidQuery(_))));
    assert!(matches!(e.query_joint(&["A", "A"]), Err(Error::InvalidQuery(_))));
    e.observe_label("E", "no").unwrap();
    assert!(matches!(e.query_joint(&["E"]), Err(Error::Observed(_))));
    assert!(matches!(
        e.query_conditional(&Query::conditional(&["A"], &["E"])),
        Err(Error::Observed(_))
    ));
    assert!(e.observe_label("E", "no").is_ok());
    assert!(matches!(e.observe_label("E", "yes"), Err(Error::ConflictingObservation { .. })));
    assert!(matches!(e.observe("E", 7), Err(Error::BadState { .. })));
    assert!(matches!(e.retract("A"), Err(Error::NotObserved(_))));
    assert!(matches!(
        e.query_conditional(&Query::joint(&["A"]).with_evidence("A", 0)),
        Err(Error::InvalidQuery(_))
    ));
}

#[test]
fn retract_on_empty_evidence_fails() {
    let mut e = asia_engine();
    assert!(matches!(e.retract("E"), Err(Error::NotObserved(_))));
}

#[test]
fn observe_then_retract_restores_tables() {
    let mut e = asia_engine();
    let before: Vec<_> = e.states().iter().map(|s| (s.set_chain.clone(), s.marginal.clone())).collect();
    e.observe_label("E", "yes").unwrap();
    assert!(e.states().iter().any(|s| s.set_chain != before[s.clique_id].0));
    e.retract("E").unwrap();
    for (s, (sc, m)) in e.states().iter().zip(&before) {
        assert_eq!(&s.set_chain, sc);
        assert_eq!(&s.marginal, m);
    }
}

#[test]
fn retraction_matches_fresh_engine() {
    let mut rng = ChaCha8Rng::seed_from_u64(55);
    for net in corpus(21, 25) {
        let names: Vec<String> = net.names().map(str::to_string).collect();
        if names.len() < 4 {
            continue;
        }
        let (e1, e2, t) = (&names[0], &names[1], &names[2..]);
        let mut a = Engine::new(net.clone()).unwrap();
        a.observe(e1, 0).unwrap();
        a.observe(e2, 1).unwrap();
        let _ = a.query_joint(&t[..1]).unwrap();
        a.retract(e1).unwrap();
        let mut b = Engine::new(net.clone()).unwrap();
        b.observe(e2, 1).unwrap();
        let q = sample_query(&mut rng, &net, 0);
        let targets: Vec<&String> = q.targets.iter().filter(|v| *v != e2).collect();
        if targets.is_empty() {
            continue;
        }
        let x = a.query_joint(&targets).unwrap();
        let y = b.query_joint(&targets).unwrap();
        assert!(x.same_cells(&y));
    }
}

#[test]
fn evidence_order_does_not_matter() {
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    for net in corpus(34, 30) {
        let names: Vec<String> = net.names().map(str::to_string).collect();
        let (v1, v2) = (&names[0], &names[names.len() - 1]);
        let mut a = Engine::new(net.clone()).unwrap();
        let mut b = Engine::new(net.clone()).unwrap();
        a.observe(v1, 1).unwrap();
        a.observe(v2, 0).unwrap();
        b.observe(v2, 0).unwrap();
        b.observe(v1, 1).unwrap();
        let q = sample_query(&mut rng, &net, 0);
        let targets: Vec<&String> = q.targets.iter().filter(|v| *v != v1 && *v != v2).collect();
        if targets.is_empty() {
            continue;
        }
        assert_close(&a.query_joint(&targets).unwrap(), &b.query_joint(&targets).unwrap(), 1e-12);
    }
}

#[test]
fn observing_a_certainty_changes_nothing() {
    let mut b = NetworkBuilder::<f64>::new();
    for n in ["a", "b", "c"] {
        b.variable(Variable::binary(n)).unwrap();
    }
    b.cpt::<&str>("a", &[], vec![1.0, 0.0]).unwrap();
    b.cpt("b", &["a"], vec![0.3, 0.7, 0.9, 0.1]).unwrap();
    b.cpt("c", &["b"], vec![0.2, 0.8, 0.6, 0.4]).unwrap();
    let mut e = Engine::new(b.build().unwrap()).unwrap();
    let before = e.query_joint(&["b", "c"]).unwrap();
    e.observe("a", 0).unwrap();
    let after = e.query_joint(&["b", "c"]).unwrap();
    assert_close(&before, &after, 1e-15);
}

#[test]
fn counters_track_incremental_work() {
    let mut e = asia_engine();
    assert_eq!(e.op_counters(), Default::default());

    e.query_joint(&["A", "X", "S"]).unwrap();
    let first = e.op_counters();
    assert!(first.multiplications > 0);
    e.query_joint(&["A", "X", "S"]).unwrap();
    let repeat = e.op_counters().since(&first);
    assert_eq!(repeat.multiplications, 0);
    assert_eq!(repeat.summations, 0);
    assert!(repeat.cache_hits >= 1);

    let before = e.op_counters();
    e.query_joint(&["X", "S"]).unwrap();
    let warm = e.op_counters().since(&before);
    let mut cold = asia_engine();
    cold.query_joint(&["X", "S"]).unwrap();
    assert!(warm.multiplications < cold.op_counters().multiplications);
    assert!(warm.cache_hits >= 1);

    e.reset_counters();
    assert_eq!(e.op_counters(), Default::default());
}

#[test]
fn cache_does_not_change_answers() {
    let mut rng = ChaCha8Rng::seed_from_u64(5150);
    for net in corpus(13, 50) {
        let mut cached = Engine::new(net.clone()).unwrap();
        let mut plain = Engine::new(net.clone()).unwrap();
        plain.set_caching(false);
        let mut observed = Vec::new();
        for step in 0..10 {
            if step == 5 {
                // assert one piece of evidence mid-session
                let q = sample_query(&mut rng, &net, 1);
                for (v, s) in q.evidence {
                    cached.observe(&v, s).unwrap();
                    plain.observe(&v, s).unwrap();
                    observed.push(v);
                }
            }
            let q = sample_query(&mut rng, &net, 0);
            let targets: Vec<&String> = q.targets.iter().filter(|v| !observed.contains(v)).collect();
            if targets.is_empty() {
                continue;
            }
            let a = cached.query_joint(&targets).unwrap();
            let b = plain.query_joint(&targets).unwrap();
            assert!(a.same_cells(&b), "step {step}: {a:?} vs {b:?}");
        }
        assert_eq!(plain.cache_len(), 0);
        assert_eq!(plain.op_counters().cache_hits, 0);
    }
}

#[test]
fn engine_moves_between_threads() {
    fn assert_send<T: Send>() {}
    assert_send::<Engine64>();
    assert_send::<ExactEngine>();
    let mut e = asia_engine();
    let handle = std::thread::spawn(move || {
        e.observe_label("D", "yes").unwrap();
        e.query_joint(&["B"]).unwrap()
    });
    let f = handle.join().unwrap();
    assert_eq!(f.len(), 2);
}

#[test]
fn multi_component_queries_multiply() {
    let mut b = NetworkBuilder::<f64>::new();
    for n in ["a", "b", "x", "y"] {
        b.variable(Variable::binary(n)).unwrap();
    }
    b.cpt::<&str>("a", &[], vec![0.3, 0.7]).unwrap();
    b.cpt("b", &["a"], vec![0.1, 0.9, 0.6, 0.4]).unwrap();
    b.cpt::<&str>("x", &[], vec![0.2, 0.8]).unwrap();
    b.cpt("y", &["x"], vec![0.5, 0.5, 0.25, 0.75]).unwrap();
    let net = b.build().unwrap();
    let joint = enumerate_joint(&net).unwrap();
    let mut e = Engine::new(net).unwrap();
    let got = e.query_joint(&["b", "y"]).unwrap();
    assert_close(&got, &oracle_joint(&joint, &["b", "y"], &[]).unwrap(), 1e-15);
    // conditioning on the other component leaves the columns equal
    let cond = e.query_conditional(&Query::conditional(&["b"], &["y"])).unwrap();
    assert_close(&cond.substitute("y", 0).unwrap(), &cond.substitute("y", 1).unwrap(), 1e-15);
    e.observe("x", 0).unwrap();
    let got = e.query_joint(&["b"]).unwrap();
    assert_close(&got, &oracle_joint(&joint, &["b"], &[("x".into(), 0)]).unwrap(), 1e-15);
}

#[test]
fn posterior_marginals_with_and_without_evidence() {
    let joint = enumerate_joint(&asia::<f64>()).unwrap();
    let mut e = asia_engine();
    let prior = e.posterior_marginals().unwrap();
    assert_eq!(prior.len(), 8);
    for (v, f) in &prior {
        assert_close(f, &oracle_joint(&joint, &[v], &[]).unwrap(), 1e-12);
    }
    e.observe_label("D", "yes").unwrap();
    let post = e.posterior_marginals().unwrap();
    assert!(!post.contains_key("D"));
    for (v, f) in &post {
        assert_close(f, &oracle_query(&joint, &[v], &[] as &[&str], &[("D".into(), 0)]).unwrap(), 1e-12);
    }
}
