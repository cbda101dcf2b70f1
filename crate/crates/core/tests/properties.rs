use minerec_core::corpus::{playout, random_tree, GeneratorConfig};
use minerec_core::discovery::{discover, discover_tree, AlgorithmId, DiscoveryParams, ProcessTree};
use minerec_core::event_log::{dfg, footprint, parse_xes, variants, write_xes, EventLog, Relation};
use minerec_core::explainer::shap_values;
use minerec_core::features::{extract, feature_names, pearson, prune_columns};
use minerec_core::learner::{fit, FitParams, TrainingDataset};
use minerec_core::petri_net::PetriNet;
use minerec_core::quality::{evaluate_all, fitness_token_replay, simplicity};
use minerec_core::recommender::{score, MeasureValues, WeightVector};
use proptest::prelude::*;

fn seqs_strategy() -> impl Strategy<Value = Vec<Vec<String>>> {
    prop::collection::vec(
        prop::collection::vec(prop::sample::select(vec!["a", "b", "c", "d", "e", "f"]), 1..8)
            .prop_map(|v| v.into_iter().map(String::from).collect::<Vec<_>>()),
        1..15,
    )
}

fn small_config() -> GeneratorConfig {
    GeneratorConfig {
        n_activities: [4, 7],
        depth: [1, 3],
        n_traces: [5, 30],
        ..GeneratorConfig::default()
    }
}

fn generated_log(seed: u64, noise: f64) -> EventLog {
    let cfg = small_config();
    let tree = random_tree(&cfg, seed);
    playout(&tree, 5 + (seed % 25) as usize, noise, seed ^ 0x5eed)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn xes_round_trip(seqs in seqs_strategy()) {
        let log = EventLog::from_sequences(&seqs).unwrap();
        let mut buf = Vec::new();
        write_xes(&log, &mut buf).unwrap();
        let back = parse_xes(&buf[..]).unwrap();
        prop_assert_eq!(back.traces().len(), log.traces().len());
        for (a, b) in log.traces().iter().zip(back.traces()) {
            prop_assert_eq!(&a.case_id, &b.case_id);
            let ta: Vec<_> = a.events.iter().map(|e| (&e.activity, e.timestamp)).collect();
            let tb: Vec<_> = b.events.iter().map(|e| (&e.activity, e.timestamp)).collect();
            prop_assert_eq!(ta, tb);
        }
    }

    #[test]
    fn dfg_and_variant_counts(seqs in seqs_strategy()) {
        let log = EventLog::from_sequences(&seqs).unwrap();
        let n = seqs.len();
        prop_assert_eq!(variants(&log).values().sum::<usize>(), n);
        let g = dfg(&log);
        prop_assert_eq!(g.start_activities.values().sum::<usize>(), n);
        prop_assert_eq!(g.end_activities.values().sum::<usize>(), n);
        prop_assert_eq!(g.edges.values().sum::<usize>(), seqs.iter().map(|s| s.len() - 1).sum::<usize>());
        for ((a, b), &c) in &g.edges {
            prop_assert!(c >= 1 && g.nodes.contains(a) && g.nodes.contains(b));
        }
    }

    #[test]
    fn footprint_relations_are_consistent(seqs in seqs_strategy()) {
        let fp = footprint(&EventLog::from_sequences(&seqs).unwrap());
        for i in 0..fp.len() {
            for j in 0..fp.len() {
                let (r, back) = (fp.at(i, j), fp.at(j, i));
                match r {
                    Relation::Sequence => prop_assert_eq!(back, Relation::ReverseSequence),
                    Relation::ReverseSequence => prop_assert_eq!(back, Relation::Sequence),
                    Relation::Parallel | Relation::Choice => prop_assert_eq!(back, r),
                }
            }
        }
    }

    #[test]
    fn features_are_finite_and_ranged(seqs in seqs_strategy()) {
        let log = EventLog::from_sequences(&seqs).unwrap();
        let v = extract(&log);
        prop_assert_eq!(v.values.len(), 48);
        for (name, x) in feature_names().into_iter().zip(&v.values) {
            prop_assert!(x.is_finite(), "{} = {}", name, x);
            prop_assert!(*x >= 0.0 || name == "trace_len_skewness", "{} = {}", name, x);
            let is_count = name.starts_with("n_")
                || name.contains("_n_")
                || ["trace_len_min", "trace_len_max", "act_freq_min", "act_freq_max", "dfg_max_out_degree"].contains(&name);
            if is_count {
                prop_assert_eq!(x.fract(), 0.0, "{} = {}", name, x);
            }
            let is_ratio = name.contains("ratio") || name == "variants_per_case" || name == "dfg_density";
            if is_ratio {
                prop_assert!(*x <= 1.0, "{} = {}", name, x);
            }
        }
    }

    #[test]
    fn features_ignore_case_ids(seqs in seqs_strategy()) {
        let log = EventLog::from_sequences(&seqs).unwrap();
        let mut traces = log.traces().to_vec();
        for (i, t) in traces.iter_mut().enumerate() {
            t.case_id = format!("renamed-{}", traces_len_key(i));
        }
        let renamed = EventLog::new(traces).unwrap();
        prop_assert_eq!(extract(&log).values, extract(&renamed).values);
    }

    #[test]
    fn pearson_symmetry_and_affine_invariance(
        xy in prop::collection::vec((-100.0f64..100.0, -100.0f64..100.0), 3..40),
        a in 0.1f64..10.0,
        b in -50.0f64..50.0,
    ) {
        let x: Vec<f64> = xy.iter().map(|p| p.0).collect();
        let y: Vec<f64> = xy.iter().map(|p| p.1).collect();
        let r = pearson(&x, &y).unwrap();
        prop_assert!((r - pearson(&y, &x).unwrap()).abs() < 1e-12);
        let ax: Vec<f64> = x.iter().map(|v| a * v + b).collect();
        prop_assert!((r - pearson(&ax, &y).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn prune_at_one_keeps_non_collinear(rows in prop::collection::vec(prop::collection::vec(0.0f64..1.0, 4), 6..30)) {
        // Random uniform columns are never exactly collinear.
        prop_assert_eq!(prune_columns(&rows, 1.0).unwrap(), vec![0, 1, 2, 3]);
    }

    #[test]
    fn firing_moves_one_token_per_arc(seed in 0u64..500, steps in 1usize..20) {
        let net = discover(AlgorithmId::Inductive, &generated_log(seed, 0.0), &DiscoveryParams::default()).unwrap();
        let mut m = net.initial_marking().clone();
        for k in 0..steps {
            let enabled: Vec<usize> = (0..net.transitions().len()).filter(|&t| net.is_enabled(&m, t)).collect();
            if enabled.is_empty() {
                break;
            }
            let t = enabled[(seed as usize + k) % enabled.len()];
            let next = net.fire(&m, t).unwrap();
            for p in 0..net.places().len() {
                let delta = i64::from(next.tokens(p)) - i64::from(m.tokens(p));
                let expected = i64::from(net.postset(t).contains(&p)) - i64::from(net.preset(t).contains(&p));
                prop_assert_eq!(delta, expected);
            }
            m = next;
        }
    }

    #[test]
    fn discovered_nets_are_workflow_nets_and_measures_ranged(seed in 0u64..1000, noise in 0.0f64..0.5) {
        let log = generated_log(seed, noise);
        for alg in AlgorithmId::ALL {
            let net = discover(alg, &log, &DiscoveryParams::default()).unwrap();
            prop_assert!(net.is_workflow_net(), "{}", alg);
            prop_assert_eq!(&net, &discover(alg, &log, &DiscoveryParams::default()).unwrap());
            let q = evaluate_all(&log, &net).unwrap();
            for v in q.values() {
                prop_assert!((0.0..=1.0).contains(&v), "{} {:?}", alg, q.values());
            }
            let perfect = q.diagnostics.missing == 0 && q.diagnostics.remaining == 0;
            prop_assert_eq!(q.fitness == 1.0, perfect, "{}", alg);
        }
    }

    #[test]
    fn inductive_replays_its_own_log(seed in 0u64..1000, noise in 0.0f64..0.5) {
        let log = generated_log(seed, noise);
        let net = discover(AlgorithmId::Inductive, &log, &DiscoveryParams::default()).unwrap();
        prop_assert!((fitness_token_replay(&log, &net).unwrap() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn infrequent_without_noise_matches_classic(seed in 0u64..1000, noise in 0.0f64..0.5) {
        let log = generated_log(seed, noise);
        let p = DiscoveryParams::default().with("noise_threshold", 0.0);
        prop_assert_eq!(
            discover_tree(AlgorithmId::InductiveInfrequent, &log, &p).unwrap(),
            discover_tree(AlgorithmId::Inductive, &log, &DiscoveryParams::default()).unwrap()
        );
    }

    #[test]
    fn unseen_activity_never_raises_fitness(seqs in seqs_strategy(), extra in 1usize..6) {
        let log = EventLog::from_sequences(&seqs).unwrap();
        let net = discover(AlgorithmId::Heuristics, &log, &DiscoveryParams::default()).unwrap();
        let before = fitness_token_replay(&log, &net).unwrap();
        let mut more = seqs.clone();
        more.push(vec!["zz".to_owned(); extra]);
        let after = fitness_token_replay(&EventLog::from_sequences(&more).unwrap(), &net).unwrap();
        prop_assert!(after <= before + 1e-12, "{} -> {}", before, after);
    }

    #[test]
    fn flower_precision_is_dominated(seed in 0u64..1000) {
        let log = generated_log(seed, 0.0);
        prop_assume!(log.activities().len() >= 2 && variants(&log).len() >= 2);
        let inductive = discover(AlgorithmId::Inductive, &log, &DiscoveryParams::default()).unwrap();
        let flower = minerec_core::discovery::tree_to_net(&ProcessTree::flower(log.activities()));
        let pi = evaluate_all(&log, &inductive).unwrap().precision;
        let pf = evaluate_all(&log, &flower).unwrap().precision;
        prop_assert!(pf <= pi + 1e-12, "flower {} inductive {}", pf, pi);
    }

    #[test]
    fn simplicity_ignores_labels(seed in 0u64..500) {
        let log = generated_log(seed, 0.1);
        let net = discover(AlgorithmId::Alpha, &log, &DiscoveryParams::default()).unwrap();
        prop_assert_eq!(simplicity(&net), simplicity(&relabel(&net)));
    }
}

fn traces_len_key(i: usize) -> String {
    format!("{:x}", i * 7919)
}

fn relabel(net: &PetriNet) -> PetriNet {
    let mut out = PetriNet::new();
    for p in net.places() {
        out.add_place(format!("q_{p}"));
    }
    for (t, tr) in net.transitions().iter().enumerate() {
        let i = out.add_transition(format!("u_{}", tr.id), tr.label.as_ref().map(|l| format!("X{l}")));
        for &p in net.preset(t) {
            out.add_input_arc(p, i);
        }
        for &p in net.postset(t) {
            out.add_output_arc(i, p);
        }
    }
    for (p, k) in net.initial_marking().support() {
        out.set_initial(p, k);
    }
    for (p, k) in net.final_marking().support() {
        out.set_final(p, k);
    }
    out
}

fn regression_data(seed: u64, n: usize, width: usize) -> TrainingDataset {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let x: Vec<Vec<f64>> = (0..n).map(|_| (0..width).map(|_| rng.gen_range(-2.0..2.0)).collect()).collect();
    let y = x
        .iter()
        .map(|r| (0.5 + 0.3 * r[0].sin() - 0.2 * r[1 % width] * r[2 % width]).clamp(0.0, 1.0))
        .collect();
    TrainingDataset::new((0..n).map(|i| i.to_string()).collect(), x, y).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn boosting_invariants(seed in 0u64..10_000, lr in 0.05f64..1.0, depth in 1usize..5) {
        let data = regression_data(seed, 60, 5);
        let params = FitParams { n_trees: 25, max_depth: depth, learning_rate: lr, subsample: 0.8, seed, ..FitParams::default() };
        let schema = [0, 1, 2, 3, 4];
        let model = fit(&data, &schema, &params).unwrap();
        let again = fit(&data, &schema, &params).unwrap();
        prop_assert_eq!(serde_json::to_string(&model).unwrap(), serde_json::to_string(&again).unwrap());
        for t in &model.trees {
            prop_assert!(t.covers_consistent());
            prop_assert!(t.split_features().iter().all(|f| schema.contains(f)));
        }
        // Training loss of the first k trees never increases with k when every
        // tree sees all rows.
        let full = fit(&data, &schema, &FitParams { subsample: 1.0, ..params.clone() }).unwrap();
        let mut prev = f64::INFINITY;
        for k in 0..=full.trees.len() {
            let mut partial = full.clone();
            partial.trees.truncate(k);
            let rmse = (data.x.iter().zip(&data.y).map(|(x, y)| (partial.predict_raw(x).unwrap() - y).powi(2)).sum::<f64>()
                / data.len() as f64).sqrt();
            prop_assert!(rmse <= prev + 1e-12, "round {}: {} > {}", k, rmse, prev);
            prev = rmse;
        }
        let mut rng_x = seed;
        for _ in 0..50 {
            rng_x = rng_x.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            let x: Vec<f64> = (0..5).map(|i| ((rng_x >> (i * 8)) & 0xff) as f64 / 16.0 - 8.0).collect();
            let p = model.predict(&x).unwrap();
            prop_assert!((0.0..=1.0).contains(&p));
            let a = shap_values(&model, &x).unwrap();
            let total = a.base_value + a.contributions.iter().sum::<f64>();
            prop_assert!((total - a.prediction).abs() < 1e-9);
        }
    }

    #[test]
    fn score_scaling_and_monotonicity(
        w in prop::array::uniform4(0.0f64..100.0),
        v in prop::array::uniform4(0.0f64..1.0),
        lambda in 0.01f64..1.0,
        bump in 0.0f64..0.5,
        which in 0usize..4,
    ) {
        prop_assume!(w.iter().any(|&x| x > 1e-6));
        let wv = WeightVector::new(w[0], w[1], w[2], w[3]).unwrap();
        let scaled = WeightVector::new(w[0] * lambda, w[1] * lambda, w[2] * lambda, w[3] * lambda).unwrap();
        let p = MeasureValues::from_array(v);
        let s = score(&p, &wv).unwrap();
        prop_assert!((s - score(&p, &scaled).unwrap()).abs() < 1e-12);
        let lo = v.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = v.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        prop_assert!(s >= lo - 1e-12 && s <= hi + 1e-12);
        let mut up = v;
        up[which] = (up[which] + bump).min(1.0);
        prop_assert!(score(&MeasureValues::from_array(up), &wv).unwrap() >= s - 1e-15);
    }
}
