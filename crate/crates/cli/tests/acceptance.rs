//! Acceptance suite: one PASS/FAIL line per criterion.

use std::collections::BTreeSet;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::process::Command;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use rankbias::explain::{
    explain_group, fit_surrogate, shapley_values, Background, ExplainConfig, Hyperparams, ShapleyMode, SurrogateKind,
    SurrogateModel,
};
use rankbias::fixtures::{students, students_csv};
use rankbias::generators::{random_dataset, random_ranking, worst_case};
use rankbias::lattice::CountCache;
use rankbias::oracle::oracle_detect;
use rankbias::search::iter_td;
use rankbias::{
    global_bounds, prop_bounds, top_down_search, Alpha, BoundsSpec, Dataset, GlobalSearch, LowerSchedule, Pattern,
    PropSearch, Ranking, RankingSource,
};

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn pats(data: &Dataset, list: &[&[(&str, &str)]]) -> BTreeSet<Pattern> {
    list.iter().map(|p| data.pattern(p).unwrap()).collect()
}

fn show(data: &Dataset, set: &BTreeSet<Pattern>) -> String {
    set.iter().map(|p| data.describe(p)).collect::<Vec<_>>().join(" ")
}

fn running_example() -> Outcome {
    let (data, ranking) = students();
    let mut cache = CountCache::new();
    let gp = data.pattern(&[("School", "GP")]).unwrap();
    ensure(cache.pattern_size(&gp, &data) == 8, || "s_D({School=GP}) != 8".into())?;
    ensure(cache.topk_count(&gp, &data, &ranking, 5) == 1, || "top-5 count of {School=GP} != 1".into())?;

    // global bounds, tau 4, L = 2 on [4, 5]
    let spec = BoundsSpec::global(4, 4, 5, LowerSchedule::flat(2, 4, 5));
    let mut search = GlobalSearch::new(&data, &ranking, &spec).unwrap();
    search.start(4).unwrap();
    let res4 = search.result().clone();
    let u_f1 = pats(&data, &[&[("Address", "U")], &[("Failures", "1")]]);
    ensure(res4.is_superset(&u_f1), || format!("Res[4] = {}", show(&data, &res4)))?;
    let dres_expected = pats(
        &data,
        &[
            &[("Gender", "F"), ("Address", "U")],
            &[("Gender", "M"), ("Address", "U")],
            &[("Gender", "F"), ("Failures", "1")],
            &[("Address", "R"), ("Failures", "1")],
        ],
    );
    ensure(search.dres().is_superset(&dres_expected), || format!("DRes = {}", show(&data, search.dres())))?;
    search.advance(5).unwrap();
    let res5 = search.result().clone();
    let added = pats(
        &data,
        &[
            &[("Address", "U"), ("Failures", "1")],
            &[("Gender", "F"), ("Address", "U")],
            &[("Gender", "M"), ("Address", "U")],
            &[("Gender", "F"), ("Failures", "1")],
            &[("Address", "R"), ("Failures", "1")],
        ],
    );
    let row14 = data.row(ranking.at(5));
    let unaffected: BTreeSet<Pattern> = res4.iter().filter(|p| !p.matches(row14)).cloned().collect();
    let expected5: BTreeSet<Pattern> = added.union(&unaffected).cloned().collect();
    ensure(res5 == expected5, || {
        format!("Res[5] = {} expected {}", show(&data, &res5), show(&data, &expected5))
    })?;
    let full = global_bounds(&data, &ranking, &spec).unwrap();
    let truth = oracle_detect(&data, &ranking, &spec).unwrap();
    ensure(full.per_k == truth.per_k, || "global result differs from the oracle".into())?;

    // proportional, tau 5, alpha 0.9 on [4, 5]
    let spec = BoundsSpec::proportional(5, 4, 5, Alpha::new(9, 10).unwrap());
    let mut search = PropSearch::new(&data, &ranking, &spec).unwrap();
    search.start(4).unwrap();
    let expected4 = pats(&data, &[&[("School", "GP")], &[("Address", "U")], &[("Failures", "1")]]);
    ensure(*search.result() == expected4, || format!("prop Res[4] = {}", show(&data, search.result())))?;
    let scheduled: BTreeSet<(String, usize)> = search
        .schedule()
        .entries()
        .map(|(p, e)| (data.describe(p), e.k_tilde))
        .collect();
    let want: BTreeSet<(String, usize)> = [("{Gender=F}", 5), ("{Gender=M}", 5), ("{School=MS}", 7), ("{Address=R}", 7)]
        .iter()
        .map(|&(p, k)| (p.to_string(), k))
        .collect();
    ensure(scheduled == want, || format!("K = {scheduled:?}"))?;
    let ms_r = data.pattern(&[("School", "MS"), ("Address", "R")]).unwrap();
    ensure(search.schedule().get(&ms_r).is_none(), || "{School=MS, Address=R} is scheduled".into())?;
    ensure(search.schedule().k_tilde_of(&ms_r) == Some(9), || "k-tilde of {School=MS, Address=R} != 9".into())?;
    search.advance(5).unwrap();
    let expected5 = pats(
        &data,
        &[&[("School", "GP")], &[("Gender", "F")], &[("Address", "U")], &[("Failures", "1")]],
    );
    ensure(*search.result() == expected5, || format!("prop Res[5] = {}", show(&data, search.result())))?;
    Ok(format!(
        "Res[4] = {}; Res[5] adds {} patterns; prop Res[5] = {}",
        show(&data, &res4),
        added.len(),
        show(&data, &expected5)
    ))
}

fn random_instance(rng: &mut ChaCha8Rng) -> (Dataset, Ranking, u64, usize, usize) {
    let attrs = rng.gen_range(2..=8);
    let cards: Vec<usize> = (0..attrs).map(|_| rng.gen_range(2..=4)).collect();
    let rows = rng.gen_range(20..=500);
    let seed = rng.gen();
    let data = random_dataset(seed, rows, &cards).unwrap();
    let ranking = random_ranking(seed.wrapping_add(1), data.n_rows());
    let n = data.n_rows();
    let width = rng.gen_range(0..40).min(n - 1);
    let k_min = rng.gen_range(1..=n - width);
    let tau = rng.gen_range(1..=(n as u64 / 4).max(1));
    (data, ranking, tau, k_min, k_min + width)
}

fn oracle_equivalence() -> Outcome {
    let started = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(20240601);
    let instances = 200;
    let mut reported = 0usize;
    for i in 0..instances {
        let (data, ranking, tau, k_min, k_max) = random_instance(&mut rng);
        let schedule = if rng.gen_bool(0.5) {
            LowerSchedule::flat(rng.gen_range(0..=k_min as u64), k_min, k_max)
        } else {
            let mut l = rng.gen_range(0..=k_min as u64);
            let values = (k_min..=k_max)
                .map(|k| {
                    if rng.gen_bool(0.2) {
                        l += rng.gen_range(1..=3);
                    }
                    l = l.min(k as u64);
                    l
                })
                .collect();
            LowerSchedule::from_values(k_min, values)
        };
        let spec = BoundsSpec::global(tau, k_min, k_max, schedule);
        let truth = oracle_detect(&data, &ranking, &spec).unwrap();
        let base = iter_td(&data, &ranking, &spec).unwrap();
        let fast = global_bounds(&data, &ranking, &spec).unwrap();
        ensure(base.per_k == truth.per_k, || format!("global instance {i}: baseline != oracle"))?;
        ensure(fast.per_k == truth.per_k, || format!("global instance {i}: optimized != oracle"))?;
        reported += truth.per_k.values().map(BTreeSet::len).sum::<usize>();

        let (data, ranking, tau, k_min, k_max) = random_instance(&mut rng);
        let alpha: Alpha = ["0.5", "0.8", "0.9", "1.0"][i % 4].parse().unwrap();
        let spec = BoundsSpec::proportional(tau, k_min, k_max, alpha);
        let truth = oracle_detect(&data, &ranking, &spec).unwrap();
        let base = iter_td(&data, &ranking, &spec).unwrap();
        let fast = prop_bounds(&data, &ranking, &spec).unwrap();
        ensure(base.per_k == truth.per_k, || format!("proportional instance {i}: baseline != oracle"))?;
        ensure(fast.per_k == truth.per_k, || format!("proportional instance {i}: optimized != oracle"))?;
        reported += truth.per_k.values().map(BTreeSet::len).sum::<usize>();
    }
    Ok(format!(
        "{instances} global + {instances} proportional instances, {reported} reported patterns, {:.1}s",
        started.elapsed().as_secs_f64()
    ))
}

fn binomial(n: u64, k: u64) -> u64 {
    (0..k).fold(1, |acc, i| acc * (n - i) / (i + 1))
}

fn worst_case_family() -> Outcome {
    let mut counts = Vec::new();
    for n in [2usize, 4, 6, 8] {
        let (data, ranking, spec, alpha) = worst_case(n).unwrap();
        let expected = binomial(n as u64, n as u64 / 2) as usize;
        let truth = oracle_detect(&data, &ranking, &spec).unwrap();
        let base = iter_td(&data, &ranking, &spec).unwrap();
        let fast = global_bounds(&data, &ranking, &spec).unwrap();
        let got = &truth.per_k[&n];
        ensure(got.len() == expected, || format!("n={n}: oracle found {}", got.len()))?;
        ensure(
            got.iter().all(|p| p.len() == n / 2 && p.iter().all(|(_, c)| data.schema().attributes()[0].domain[c as usize] == "0")),
            || format!("n={n}: unexpected pattern shape"),
        )?;
        ensure(base.per_k == truth.per_k && fast.per_k == truth.per_k, || format!("n={n}: detectors disagree"))?;

        let prop = BoundsSpec::proportional(2, n, n, alpha);
        let p_truth = oracle_detect(&data, &ranking, &prop).unwrap();
        let p_fast = prop_bounds(&data, &ranking, &prop).unwrap();
        ensure(p_truth.per_k[&n].len() == expected, || format!("n={n}: proportional variant found {}", p_truth.per_k[&n].len()))?;
        ensure(p_fast.per_k == p_truth.per_k, || format!("n={n}: proportional detector disagrees"))?;
        counts.push(got.len().to_string());
    }
    Ok(format!("violators for n = 2, 4, 6, 8: {}", counts.join(", ")))
}

fn pruning_gain() -> Outcome {
    let data = random_dataset(7, 500, &[2; 6]).unwrap();
    let ranking = random_ranking(7, 500);
    let global = BoundsSpec::global(50, 10, 49, LowerSchedule::flat(10, 10, 49));
    let prop = BoundsSpec::proportional(50, 10, 49, Alpha::new(4, 5).unwrap());
    let mut lines = Vec::new();
    for (name, spec) in [("global", &global), ("proportional", &prop)] {
        let base = iter_td(&data, &ranking, spec).unwrap();
        let fast = if spec.is_global() {
            global_bounds(&data, &ranking, spec).unwrap()
        } else {
            prop_bounds(&data, &ranking, spec).unwrap()
        };
        ensure(base.same_patterns(&fast), || format!("{name}: engines disagree"))?;
        let (b, o) = (base.totals().evaluated, fast.totals().evaluated);
        ensure(o < b, || format!("{name}: optimized evaluated {o} nodes, baseline {b}"))?;
        lines.push(format!(
            "{name} {b} -> {o} evaluated ({:.2}% pruned)",
            (b - o) as f64 / b as f64 * 100.0
        ));
    }
    Ok(lines.join("; "))
}

fn sibling_bound() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(41);
    let mut checked = 0;
    let mut runs = 0;
    while checked < 60 {
        let attrs = rng.gen_range(2..=6);
        let cards: Vec<usize> = (0..attrs).map(|_| rng.gen_range(2..=4)).collect();
        let data = random_dataset(rng.gen(), rng.gen_range(30..=300), &cards).unwrap();
        if data.schema().domain_sizes().iter().any(|&d| d < 2) {
            continue;
        }
        checked += 1;
        let ranking = random_ranking(rng.gen(), data.n_rows());
        let n = data.n_rows();
        let k = rng.gen_range(1..=n);
        let tau = rng.gen_range(1..=10);
        let specs = [
            BoundsSpec::global(tau, k, k, LowerSchedule::flat(rng.gen_range(0..=k as u64), k, k)),
            BoundsSpec::proportional(tau, k, k, Alpha::new(rng.gen_range(1..=10), 10).unwrap()),
        ];
        for spec in &specs {
            let outcome = top_down_search(&data, &ranking, spec, k).unwrap();
            let total = outcome.generated.len();
            ensure(outcome.generated.is_unique(), || "a node was generated twice".into())?;
            for row in data.rows() {
                let hit = outcome.generated.iter().filter(|p| p.matches(row)).count();
                ensure(2 * hit <= total, || format!("row matches {hit} of {total} generated nodes"))?;
            }
            runs += 1;
        }
    }
    Ok(format!("{checked} instances, {runs} full searches"))
}

fn random_tree(rng: &mut ChaCha8Rng, cards: &[usize], depth: usize) -> Vec<rankbias::explain::surrogate::TreeNode> {
    use rankbias::explain::surrogate::TreeNode;
    fn grow(rng: &mut ChaCha8Rng, cards: &[usize], depth: usize, nodes: &mut Vec<TreeNode>) -> usize {
        let id = nodes.len();
        nodes.push(TreeNode::Leaf { value: rng.gen_range(-20.0..20.0) });
        if depth > 0 && rng.gen_bool(0.8) {
            let attribute = rng.gen_range(0..cards.len());
            let code = rng.gen_range(0..cards[attribute]) as u32;
            let yes = grow(rng, cards, depth - 1, nodes);
            let no = grow(rng, cards, depth - 1, nodes);
            nodes[id] = TreeNode::Split { attribute, code, yes, no };
        }
        id
    }
    let mut nodes = Vec::new();
    grow(rng, cards, depth, &mut nodes);
    nodes
}

fn shapley_suite() -> Outcome {
    let started = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(99);

    // efficiency, exact and Monte Carlo
    let mut worst = 0.0f64;
    for case in 0..100 {
        let attrs = rng.gen_range(2..=8);
        let cards: Vec<usize> = (0..attrs).map(|_| rng.gen_range(2..=4)).collect();
        let data = random_dataset(rng.gen(), 120, &cards).unwrap();
        let ranking = random_ranking(rng.gen(), data.n_rows());
        let kind = if case % 2 == 0 { SurrogateKind::RidgeLinear } else { SurrogateKind::RegressionTree };
        let model = fit_surrogate(&data, &ranking, kind, &Hyperparams::default()).unwrap();
        let background = Background::from_dataset(&data, 64, rng.gen()).unwrap();
        let t = data.row(rng.gen_range(0..data.n_rows()));
        let target = model.predict(t) - background.mean_prediction(&model);
        for mode in [ShapleyMode::Exact, ShapleyMode::MonteCarlo { permutations: 50, seed: rng.gen() }] {
            let phi = shapley_values(&model, t, &background, mode).unwrap();
            let err = (phi.iter().sum::<f64>() - target).abs();
            worst = worst.max(err);
            ensure(err <= 1e-6, || format!("efficiency error {err:e} in case {case} ({mode:?})"))?;
        }
    }

    // closed form of linear models
    let mut closed_err = 0.0f64;
    for _ in 0..30 {
        let attrs = rng.gen_range(1..=8);
        let cards: Vec<usize> = (0..attrs).map(|_| rng.gen_range(2..=4)).collect();
        let weights: Vec<Vec<f64>> = cards.iter().map(|&c| (0..c).map(|_| rng.gen_range(-5.0..5.0)).collect()).collect();
        let model = SurrogateModel::linear(rng.gen_range(-3.0..3.0), weights.clone());
        let data = random_dataset(rng.gen(), 80, &cards).unwrap();
        let background = Background::from_dataset(&data, 512, 0).unwrap();
        let t = data.row(0);
        let phi = shapley_values(&model, t, &background, ShapleyMode::Exact).unwrap();
        for a in 0..attrs {
            let mean = background
                .rows()
                .iter()
                .map(|b| weights[a][b[a] as usize])
                .sum::<f64>()
                / background.rows().len() as f64;
            let closed = weights[a][t[a] as usize] - mean;
            closed_err = closed_err.max((phi[a] - closed).abs());
        }
    }
    ensure(closed_err <= 1e-9, || format!("linear closed form off by {closed_err:e}"))?;

    // null players
    let mut nulls = 0;
    for _ in 0..20 {
        let cards = vec![3usize, 2, 4, 2, 3];
        let nodes = random_tree(&mut rng, &cards[..3], 4);
        let model = SurrogateModel::tree(nodes);
        let data = random_dataset(rng.gen(), 60, &cards).unwrap();
        let background = Background::from_dataset(&data, 512, 0).unwrap();
        for r in 0..5 {
            let phi = shapley_values(&model, data.row(r), &background, ShapleyMode::Exact).unwrap();
            ensure(phi[3] == 0.0 && phi[4] == 0.0, || format!("null players got {:?}", &phi[3..]))?;
            nulls += 2;
        }
    }

    // single-attribute ranking is recovered
    let data = random_dataset(5, 500, &[4, 2, 2, 3, 2, 2]).unwrap();
    let mut order: Vec<usize> = (0..data.n_rows()).collect();
    let bucket = |i: usize| data.schema().attributes()[0].domain[data.row(i)[0] as usize].clone();
    order.sort_by_key(|&i| (bucket(i), i));
    let ranking = Ranking::from_order(order, RankingSource::ScoreDerived).unwrap();
    let spec = BoundsSpec::global(50, 100, 100, LowerSchedule::flat(5, 100, 100));
    let detected = global_bounds(&data, &ranking, &spec).unwrap();
    let groups = &detected.per_k[&100];
    ensure(!groups.is_empty(), || "no group detected".into())?;
    let model = fit_surrogate(&data, &ranking, SurrogateKind::RidgeLinear, &Hyperparams::default()).unwrap();
    for g in groups {
        let report = explain_group(&data, &ranking, &model, g, 100, &ExplainConfig::default()).unwrap();
        ensure(report.per_attribute[0].index == 0, || {
            format!("{} ranks {} first", data.describe(g), report.per_attribute[0].attribute)
        })?;
    }

    // Monte Carlo convergence
    let mut mc_worst = 0.0f64;
    for case in 0..4 {
        let attrs = 6 + case;
        let cards: Vec<usize> = (0..attrs).map(|_| rng.gen_range(2..=3)).collect();
        let data = random_dataset(rng.gen(), 200, &cards).unwrap();
        let ranking = random_ranking(rng.gen(), data.n_rows());
        let kind = if case % 2 == 0 { SurrogateKind::RegressionTree } else { SurrogateKind::RidgeLinear };
        let model = fit_surrogate(&data, &ranking, kind, &Hyperparams::default()).unwrap();
        let background = Background::from_dataset(&data, 512, 0).unwrap();
        let t = data.row(case);
        let exact = shapley_values(&model, t, &background, ShapleyMode::Exact).unwrap();
        let mc = shapley_values(&model, t, &background, ShapleyMode::MonteCarlo { permutations: 2000, seed: 11 }).unwrap();
        let scale = exact.iter().fold(0.0f64, |m, v| m.max(v.abs())) + 1e-9;
        for (e, m) in exact.iter().zip(&mc) {
            let rel = (e - m).abs() / scale;
            mc_worst = mc_worst.max(rel);
            ensure(rel <= 0.05, || format!("Monte Carlo off by {:.2}% of max |phi|", rel * 100.0))?;
        }
    }

    Ok(format!(
        "efficiency error <= {worst:.1e}; closed form <= {closed_err:.1e}; {nulls} null players exact; {} groups led by the ranking attribute; MC within {:.2}%; {:.1}s",
        groups.len(),
        mc_worst * 100.0,
        started.elapsed().as_secs_f64()
    ))
}

fn determinism() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let csv = dir.path().join("students.csv");
    std::fs::write(&csv, students_csv()).map_err(|e| e.to_string())?;
    let csv = csv.to_str().unwrap().to_string();
    let common = ["--input", csv.as_str(), "--rank-column", "Rank", "--ignore", "Grade"];
    let invocations: Vec<Vec<&str>> = vec![
        [&["audit-global"][..], &common, &["--tau", "4", "--kmin", "4", "--kmax", "5", "--bounds", "4:2"]].concat(),
        [&["audit-prop"][..], &common, &["--tau", "2", "--kmin", "1", "--kmax", "16", "--alpha", "0.9"]].concat(),
        [
            &["explain"][..],
            &common,
            &["--pattern", "School=GP", "--k", "5", "--shapley", "monte-carlo", "--permutations", "200", "--seed", "3"],
        ]
        .concat(),
        vec!["bench", "--seed", "7", "--tau", "50", "--kmin", "10", "--kmax", "49", "--bounds", "10:10"],
    ];
    let bin = env!("CARGO_BIN_EXE_rankbias");
    for args in &invocations {
        let run = || Command::new(bin).args(args).output().map_err(|e| e.to_string());
        let (a, b) = (run()?, run()?);
        ensure(a.status.success(), || format!("`{}` failed: {}", args[0], String::from_utf8_lossy(&a.stderr)))?;
        ensure(a.stdout == b.stdout, || format!("`{}` output differs between runs", args[0]))?;
        ensure(!a.stdout.is_empty(), || format!("`{}` printed nothing", args[0]))?;
    }
    Ok(format!("{} subcommands byte-identical across two runs", invocations.len()))
}

fn main() {
    let criteria: [Criterion; 7] = [
        ("running-example golden values", running_example),
        ("oracle equivalence on random instances", oracle_equivalence),
        ("worst-case family output size", worst_case_family),
        ("pruning gain over the baseline", pruning_gain),
        ("sibling bound on generated nodes", sibling_bound),
        ("Shapley properties", shapley_suite),
        ("deterministic CLI reports", determinism),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let outcome = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|e| {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panic".into());
            Err(msg)
        });
        match outcome {
            Ok(detail) => println!("[PASS] {} {name}: {detail}", i + 1),
            Err(why) => {
                failed += 1;
                println!("[FAIL] {} {name}: {why}", i + 1);
            }
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
