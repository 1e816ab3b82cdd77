//! Acceptance suite. Each criterion runs against an independent oracle and
//! prints one PASS/FAIL line; the process exits non-zero if any fails.

#![allow(clippy::needless_range_loop, clippy::type_complexity)]

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::panic::{self, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use showprofile::graphkit::{
    average_clustering_coefficient, average_path_length, fit_shifted_power, local_clustering_coefficients,
    louvain_communities, modularity, Partition, SocialGraph,
};
use showprofile::ingest::{generate_synthetic, PlantedTransition, SentimentMix, SyntheticSpec, QUIET_GAP};
use showprofile::model::{Dataset, Microblog, Round, TvShow, UserProfile};
use showprofile::profile::content::{classify_sentiment, sentiment_summary, SentimentLexicons};
use showprofile::profile::propagation::{propagation_graph, round_overlap, PropagationOptions};
use showprofile::profile::user::{adjusted_rand_index, kmeans_cluster, participation_index, LabelVector, RegionCount};
use showprofile::report::{run_pipeline, PipelineConfig};
use showprofile::retrieval::{normalize_text, retrieve_all, ShowCorpus};

type Outcome = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn within(elapsed: Duration, limit_secs: f64) -> Result<(), String> {
    ensure(elapsed.as_secs_f64() < limit_secs, || {
        format!("took {:.2}s, limit {limit_secs}s", elapsed.as_secs_f64())
    })
}

// ---------------------------------------------------------------- 1

fn criterion_pi() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut vectors = Vec::new();
    for _ in 0..1000 {
        let n = rng.random_range(10..=60);
        let mut ids: Vec<usize> = (0..200).collect();
        ids.shuffle(&mut rng);
        let counts: Vec<RegionCount> = ids[..n]
            .iter()
            .map(|i| RegionCount {
                region: format!("r{i:03}"),
                un: rng.random_range(1..=5000),
            })
            .collect();
        vectors.push(counts);
    }
    let start = Instant::now();
    let results: Vec<_> = vectors.iter().map(|v| participation_index(v)).collect();
    let elapsed = start.elapsed();
    for (v, r) in vectors.iter().zip(results) {
        let rows = r.map_err(|e| e.to_string())?;
        let mut ranked: Vec<(u64, &str)> = v.iter().map(|c| (c.un, c.region.as_str())).collect();
        ranked.sort_by(|a, b| b.0.cmp(&a.0).then(a.1.cmp(b.1)));
        let un10 = ranked[9].0 as f64;
        for row in &rows {
            let expect = (row.un as f64 - un10) / un10;
            ensure(row.pi == expect, || format!("{}: {} vs {}", row.region, row.pi, expect))?;
        }
        ensure(rows[9].region == ranked[9].1 && rows[9].pi == 0.0, || "rank-10 PI is not 0".into())?;
        ensure(rows.len() == v.len(), || "missing rows".into())?;
    }
    within(elapsed, 1.0)?;
    Ok(format!("1000 vectors, {:.3}s", elapsed.as_secs_f64()))
}

// ---------------------------------------------------------------- 2

fn brute_corpus(show: &TvShow, d: &Dataset) -> BTreeSet<String> {
    let accounts: BTreeSet<&str> = show.actor_accounts.values().flatten().map(String::as_str).collect();
    let topics: Vec<String> = show.topics.iter().map(|t| normalize_text(t)).collect();
    let mut set: BTreeSet<String> = d
        .microblogs()
        .iter()
        .filter(|m| {
            let text = normalize_text(&m.content);
            accounts.contains(m.author_id.as_str()) || topics.iter().any(|t| text.contains(t.as_str()))
        })
        .map(|m| m.id.clone())
        .collect();
    loop {
        let before = set.len();
        for m in d.microblogs() {
            if m.root_id.as_ref().is_some_and(|r| set.contains(r)) {
                set.insert(m.id.clone());
            }
        }
        if set.len() == before {
            return set;
        }
    }
}

fn criterion_retrieval() -> Outcome {
    let mut slowest = Duration::ZERO;
    for seed in [11u64, 12, 13] {
        let (d, truth) = generate_synthetic(&SyntheticSpec::new(seed, 2000, 10, 50_000, 4)).map_err(|e| e.to_string())?;
        let start = Instant::now();
        let corpora = retrieve_all(&d).map_err(|e| e.to_string())?;
        slowest = slowest.max(start.elapsed());
        for c in &corpora {
            let planted: BTreeSet<&String> = truth
                .attribution
                .iter()
                .filter(|(_, s)| s.contains(&c.show_id))
                .map(|(m, _)| m)
                .collect();
            let missing = planted.iter().filter(|m| !c.members.contains(**m)).count();
            ensure(missing == 0, || format!("seed {seed} {}: {missing} planted posts missed", c.show_id))?;
            let show = d.show(&c.show_id).unwrap();
            ensure(brute_corpus(show, &d) == c.members, || {
                format!("seed {seed} {}: corpus differs from brute-force closure", c.show_id)
            })?;
        }
    }
    within(slowest, 10.0)?;
    Ok(format!("3 datasets x 10 shows x 50k posts, recall 1.0, slowest {:.2}s", slowest.as_secs_f64()))
}

// ---------------------------------------------------------------- 3

struct Matrix {
    n: usize,
    w: Vec<Vec<f64>>,
}

fn random_graph(rng: &mut ChaCha8Rng, n: usize, p: f64, weighted: bool) -> (SocialGraph, Matrix) {
    let names: Vec<String> = (0..n).map(|i| format!("x{i:02}")).collect();
    let mut g = SocialGraph::undirected(names.iter().cloned());
    let mut w = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in i + 1..n {
            if rng.random_bool(p) {
                let x = if weighted { rng.random_range(1..=5) as f64 } else { 1.0 };
                g.add_edge(&names[i], &names[j], x).unwrap();
                w[i][j] = x;
                w[j][i] = x;
            }
        }
    }
    (g, Matrix { n, w })
}

fn brute_local(m: &Matrix, i: usize) -> f64 {
    let nb: Vec<usize> = (0..m.n).filter(|&j| m.w[i][j] > 0.0).collect();
    if nb.len() < 2 {
        return 0.0;
    }
    let mut links = 0;
    for a in 0..nb.len() {
        for b in a + 1..nb.len() {
            if m.w[nb[a]][nb[b]] > 0.0 {
                links += 1;
            }
        }
    }
    links as f64 / (nb.len() * (nb.len() - 1) / 2) as f64
}

fn brute_path(m: &Matrix) -> Option<f64> {
    let inf = usize::MAX / 4;
    let mut d = vec![vec![inf; m.n]; m.n];
    for i in 0..m.n {
        d[i][i] = 0;
        for j in 0..m.n {
            if m.w[i][j] > 0.0 {
                d[i][j] = 1;
            }
        }
    }
    for k in 0..m.n {
        for i in 0..m.n {
            for j in 0..m.n {
                if d[i][k] + d[k][j] < d[i][j] {
                    d[i][j] = d[i][k] + d[k][j];
                }
            }
        }
    }
    let (mut sum, mut pairs) = (0usize, 0usize);
    for i in 0..m.n {
        for j in 0..m.n {
            if i != j && d[i][j] < inf {
                sum += d[i][j];
                pairs += 1;
            }
        }
    }
    (pairs > 0).then(|| sum as f64 / pairs as f64)
}

fn brute_modularity(m: &Matrix, comm: &[usize]) -> f64 {
    let k: Vec<f64> = m.w.iter().map(|r| r.iter().sum()).collect();
    let two_m: f64 = k.iter().sum();
    let mut q = 0.0;
    for i in 0..m.n {
        for j in 0..m.n {
            if comm[i] == comm[j] {
                q += m.w[i][j] - k[i] * k[j] / two_m;
            }
        }
    }
    q / two_m
}

fn partition_of(comm: &[usize]) -> Partition {
    Partition::from_assignment(comm.iter().enumerate().map(|(i, &c)| (format!("x{i:02}"), c)))
}

/// Every set partition of `0..n` as restricted growth strings.
fn all_partitions(n: usize) -> Vec<Vec<usize>> {
    fn grow(cur: &mut Vec<usize>, n: usize, out: &mut Vec<Vec<usize>>) {
        if cur.len() == n {
            out.push(cur.clone());
            return;
        }
        let max = cur.iter().copied().max().map_or(0, |m| m + 1);
        for c in 0..=max {
            cur.push(c);
            grow(cur, n, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    grow(&mut Vec::new(), n, &mut out);
    out
}

fn criterion_graph_oracles() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let tol = 1e-12;
    let mut undefined_paths = 0;
    for t in 0..200 {
        let n = rng.random_range(1..=30);
        let p = rng.random_range(0.0..0.6);
        let (g, m) = random_graph(&mut rng, n, p, false);
        let local = local_clustering_coefficients(&g).map_err(|e| e.to_string())?;
        for (i, (_, c)) in local.iter().enumerate() {
            let b = brute_local(&m, i);
            ensure((c - b).abs() <= tol, || format!("graph {t} node {i}: clustering {c} vs {b}"))?;
        }
        let avg = average_clustering_coefficient(&g).map_err(|e| e.to_string())?;
        let b = (0..n).map(|i| brute_local(&m, i)).sum::<f64>() / n as f64;
        ensure((avg - b).abs() <= tol, || format!("graph {t}: average clustering {avg} vs {b}"))?;
        match (average_path_length(&g).ok(), brute_path(&m)) {
            (Some(a), Some(b)) => ensure((a - b).abs() <= tol, || format!("graph {t}: path {a} vs {b}"))?,
            (None, None) => undefined_paths += 1,
            (a, b) => return Err(format!("graph {t}: path defined mismatch {a:?} vs {b:?}")),
        }
        if g.edge_count() > 0 {
            let comm: Vec<usize> = (0..n).map(|_| rng.random_range(0..4)).collect();
            let q = modularity(&g, &partition_of(&comm)).map_err(|e| e.to_string())?;
            let b = brute_modularity(&m, &comm);
            ensure((q - b).abs() <= tol, || format!("graph {t}: modularity {q} vs {b}"))?;
        }
    }

    let mut worst: f64 = f64::INFINITY;
    let mut tested = 0;
    while tested < 50 {
        let n = rng.random_range(2..=8);
        let weighted = tested % 2 == 1;
        let p = rng.random_range(0.2..0.8);
        let (g, m) = random_graph(&mut rng, n, p, weighted);
        if g.edge_count() == 0 {
            continue;
        }
        tested += 1;
        let mut best = f64::NEG_INFINITY;
        for comm in all_partitions(n) {
            let b = brute_modularity(&m, &comm);
            let q = modularity(&g, &partition_of(&comm)).map_err(|e| e.to_string())?;
            ensure((q - b).abs() <= tol, || format!("exhaustive: modularity {q} vs {b}"))?;
            best = best.max(b);
        }
        let (_, q) = louvain_communities(&g, tested as u64).map_err(|e| e.to_string())?;
        ensure(q >= 0.95 * best - tol, || format!("louvain {q} below 0.95 x optimum {best} (n = {n})"))?;
        if best > 1e-9 {
            worst = worst.min(q / best);
        }
    }
    let elapsed = start.elapsed();
    within(elapsed, 60.0)?;
    Ok(format!(
        "200 random graphs ({undefined_paths} without paths), 50 exhaustive, worst louvain/opt {worst:.4}, {:.2}s",
        elapsed.as_secs_f64()
    ))
}

// ---------------------------------------------------------------- 4

fn criterion_curve_fit() -> Outcome {
    let start = Instant::now();
    let f = |x: f64| -52.0 * x.powf(-0.5) + 58.0;
    let xs: Vec<f64> = (1..=100).map(f64::from).collect();
    let clean: Vec<(f64, f64)> = xs.iter().map(|&x| (x, f(x))).collect();
    let fit = fit_shifted_power(&clean).map_err(|e| e.to_string())?;
    ensure(
        (fit.a + 52.0).abs() < 1e-3 && (fit.b + 0.5).abs() < 1e-3 && (fit.c - 58.0).abs() < 1e-3,
        || format!("noiseless fit {fit:?}"),
    )?;
    let noise = Normal::new(0.0, 0.5).unwrap();
    let mut good = 0;
    for seed in 0..100 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let pts: Vec<(f64, f64)> = xs.iter().map(|&x| (x, f(x) + noise.sample(&mut rng))).collect();
        let fit = fit_shifted_power(&pts).map_err(|e| e.to_string())?;
        if (-0.55..=-0.45).contains(&fit.b) && fit.r_squared >= 0.98 {
            good += 1;
        }
    }
    ensure(good >= 95, || format!("only {good}/100 noisy fits in range"))?;
    let elapsed = start.elapsed();
    within(elapsed, 30.0)?;
    Ok(format!(
        "noiseless (a, b, c) = ({:.6}, {:.6}, {:.6}); noisy {good}/100 in range; {:.2}s",
        fit.a,
        fit.b,
        fit.c,
        elapsed.as_secs_f64()
    ))
}

// ---------------------------------------------------------------- 5

fn cliques(sizes: &[usize], bridges: bool) -> SocialGraph {
    let mut g = SocialGraph::undirected(Vec::<String>::new());
    let mut first = Vec::new();
    for (c, &s) in sizes.iter().enumerate() {
        let ids: Vec<String> = (0..s).map(|i| format!("c{c}n{i}")).collect();
        for id in &ids {
            g.add_node(id.clone());
        }
        for i in 0..s {
            for j in i + 1..s {
                g.add_edge(&ids[i], &ids[j], 1.0).unwrap();
            }
        }
        first.push(ids[0].clone());
    }
    if bridges {
        for w in first.windows(2) {
            g.add_edge(&w[0], &w[1], 1.0).unwrap();
        }
    }
    g
}

fn criterion_modularity_landmarks() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..20 {
        let (g, _) = random_graph(&mut rng, 12, 0.4, true);
        if g.edge_count() == 0 {
            continue;
        }
        let q = modularity(&g, &Partition::single(g.nodes())).map_err(|e| e.to_string())?;
        ensure(q == 0.0, || format!("single community Q = {q}"))?;
    }
    let two = cliques(&[3, 3], false);
    let by_component = Partition::from_assignment(two.nodes().iter().map(|n| (n.clone(), usize::from(n.starts_with("c1")))));
    let q = modularity(&two, &by_component).map_err(|e| e.to_string())?;
    ensure(q == 0.5, || format!("two triangles Q = {q}"))?;
    for sizes in [[3usize, 3], [4, 4], [5, 5], [6, 6], [5, 7]] {
        let g = cliques(&sizes, true);
        let truth = Partition::from_assignment(g.nodes().iter().map(|n| (n.clone(), usize::from(n.starts_with("c1")))));
        for seed in 0..10 {
            let (p, _) = louvain_communities(&g, seed).map_err(|e| e.to_string())?;
            ensure(p.same_grouping(&truth), || format!("cliques {sizes:?} seed {seed} not recovered"))?;
        }
    }
    let elapsed = start.elapsed();
    within(elapsed, 1.0)?;
    Ok(format!("Q(single) = 0, Q(two K3) = {q}, 5 planted two-clique graphs x 10 seeds"))
}

// ---------------------------------------------------------------- 6

fn criterion_kmeans() -> Outcome {
    let start = Instant::now();
    let mut runs = 0;
    let mut worst = 1.0f64;
    for k in 2..=5usize {
        for seed in 0..5u64 {
            let mut rng = ChaCha8Rng::seed_from_u64(100 * k as u64 + seed);
            let mut vectors = Vec::new();
            let mut truth = BTreeMap::new();
            for u in 0..500 {
                let c = u % k;
                let mut w: BTreeMap<String, f64> = BTreeMap::new();
                for l in 0..3 {
                    w.insert(format!("L{}", 3 * c + l), 1.0 + rng.random_range(-0.02..0.02));
                }
                let s: f64 = w.values().sum();
                w.values_mut().for_each(|x| *x /= s);
                let id = format!("user{u:04}");
                truth.insert(id.clone(), c);
                vectors.push(LabelVector { user_id: id, weights: w });
            }
            vectors.shuffle(&mut rng);
            let r = kmeans_cluster(&vectors, k, seed).map_err(|e| e.to_string())?;
            let ari = adjusted_rand_index(&r.assignment, &truth).map_err(|e| e.to_string())?;
            ensure(ari >= 0.99, || format!("k = {k} seed {seed}: ARI {ari}"))?;
            ensure(r.objective_history.windows(2).all(|w| w[1] <= w[0]), || {
                format!("k = {k} seed {seed}: objective increased {:?}", r.objective_history)
            })?;
            worst = worst.min(ari);
            runs += 1;
        }
    }
    let elapsed = start.elapsed();
    within(elapsed, 5.0)?;
    Ok(format!("{runs} runs, k = 2..5, 500 users, min ARI {worst}, {:.2}s", elapsed.as_secs_f64()))
}

// ---------------------------------------------------------------- 7

fn criterion_sentiment() -> Outcome {
    let lex = SentimentLexicons::builtin();
    let mixes = [
        SentimentMix::default(),
        SentimentMix { positive: 1.0, negative: 0.0, non_sentiment: 0.0 },
        SentimentMix { positive: 0.0, negative: 1.0, non_sentiment: 0.0 },
        SentimentMix { positive: 0.2, negative: 0.4, non_sentiment: 0.4 },
    ];
    let mut posts = 0;
    for (i, mix) in mixes.into_iter().enumerate() {
        let mut spec = SyntheticSpec::new(70 + i as u64, 300, 8, 6000, 3);
        spec.sentiment_mix = mix;
        let (d, truth) = generate_synthetic(&spec).map_err(|e| e.to_string())?;
        for m in d.microblogs() {
            let got = classify_sentiment(&m.content, &lex);
            ensure(got == truth.sentiment[&m.id], || format!("{}: {got} vs {}", m.id, truth.sentiment[&m.id]))?;
            posts += 1;
        }
        for c in retrieve_all(&d).map_err(|e| e.to_string())? {
            let t = sentiment_summary(&c, &d, &lex);
            ensure(t.total() == c.len(), || format!("{}: cells {} vs corpus {}", c.show_id, t.total(), c.len()))?;
        }
    }
    Ok(format!("{posts} posts over 4 mixes classified exactly; cells sum to corpus sizes"))
}

// ---------------------------------------------------------------- 8

fn transition(user: &str, from: &str, to: &str, gap: i64) -> PlantedTransition {
    PlantedTransition {
        user: user.into(),
        show_from: from.into(),
        show_to: to.into(),
        gap_seconds: gap,
    }
}

fn random_fixture(rng: &mut ChaCha8Rng) -> (Dataset, Vec<ShowCorpus>) {
    let n_shows = rng.random_range(2..=5);
    let n_users = rng.random_range(1..=8);
    let shows: Vec<TvShow> = (0..n_shows)
        .map(|s| TvShow {
            show_id: format!("s{s}"),
            title: format!("S{s}"),
            labels: vec!["a".into(), "b".into(), "c".into()],
            actors: vec![],
            actor_accounts: BTreeMap::new(),
            topics: BTreeSet::from([format!("S{s}")]),
            rounds: vec![],
            view_count: None,
        })
        .collect();
    let mut posts = Vec::new();
    let mut corpora: Vec<ShowCorpus> = shows.iter().map(|s| ShowCorpus::empty(s.show_id.clone())).collect();
    for i in 0..rng.random_range(5..60) {
        let id = format!("p{i:03}");
        posts.push(Microblog {
            id: id.clone(),
            author_id: format!("w{}", rng.random_range(0..n_users)),
            author_name: String::new(),
            author_ip: String::new(),
            timestamp: rng.random_range(0..5000),
            root_id: None,
            content: String::new(),
        });
        for c in corpora.iter_mut() {
            if rng.random_bool(0.35) {
                c.members.insert(id.clone());
            }
        }
    }
    let users = (0..n_users).map(|u| UserProfile::stub(format!("w{u}"))).collect();
    (Dataset::new(posts, users, vec![], shows), corpora)
}

fn criterion_propagation() -> Outcome {
    let start = Instant::now();
    let mut spec = SyntheticSpec::new(8, 400, 8, 8000, 3);
    spec.planted_transitions = vec![
        transition("u1", "v2", "v1", 3600),
        transition("u2", "v2", "v1", 600),
        transition("u3", "v2", "v1", 7200),
        transition("u4", "v2", "v1", 60),
        transition("u4", "v2", "v1", 120),
        transition("u5", "v2", "v4", 3000),
        transition("u5", "v6", "v5", 900),
        transition("u6", "v6", "v5", 86_000),
        transition("u7", "v3", "v8", 43_200),
    ];
    let (d, truth) = generate_synthetic(&spec).map_err(|e| e.to_string())?;
    let corpora = retrieve_all(&d).map_err(|e| e.to_string())?;
    let max_gap = spec.planted_transitions.iter().map(|t| t.gap_seconds).max().unwrap();
    for window in [max_gap, 86_400, QUIET_GAP - 1] {
        let g = propagation_graph(d.shows(), &corpora, &d, PropagationOptions { window, strict: false })
            .map_err(|e| e.to_string())?;
        let got: Vec<(String, String, usize)> =
            g.graph.edges().map(|(a, b, w)| (a.to_string(), b.to_string(), w as usize)).collect();
        let want: Vec<(String, String, usize)> =
            truth.planted_edges.iter().map(|e| (e.src.clone(), e.dst.clone(), e.weight)).collect();
        ensure(got == want, || format!("window {window}: {got:?} vs planted {want:?}"))?;
    }

    let mut rng = ChaCha8Rng::seed_from_u64(88);
    for f in 0..50 {
        let (d, corpora) = random_fixture(&mut rng);
        let mut ws: Vec<i64> = (0..4).map(|_| rng.random_range(1..3000)).collect();
        ws.sort();
        for strict in [false, true] {
            let graphs: Vec<SocialGraph> = ws
                .iter()
                .map(|&window| propagation_graph(d.shows(), &corpora, &d, PropagationOptions { window, strict }).unwrap().graph)
                .collect();
            for pair in graphs.windows(2) {
                for (a, b, w) in pair[0].edges() {
                    let wider = pair[1].weight(a, b).unwrap_or(0.0);
                    ensure(wider >= w, || format!("fixture {f}: edge {a}->{b} shrank from {w} to {wider}"))?;
                }
            }
        }
    }
    let elapsed = start.elapsed();
    within(elapsed, 5.0)?;
    Ok(format!(
        "{} planted edges exact at 3 windows; 50 random fixtures monotone; {:.2}s",
        truth.planted_edges.len(),
        elapsed.as_secs_f64()
    ))
}

// ---------------------------------------------------------------- 9

fn criterion_round_overlap() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let r1 = Round { start: 1000, end: 2000 };
    let r2 = Round { start: 3000, end: 4000 };
    let show = TvShow {
        show_id: "v1".into(),
        title: "Drama001".into(),
        labels: vec!["Love".into(), "Idol".into(), "Modern".into()],
        actors: vec![],
        actor_accounts: BTreeMap::new(),
        topics: BTreeSet::from(["Drama001".to_string()]),
        rounds: vec![r1, r2],
        view_count: None,
    };
    let mut posts = Vec::new();
    let mut users = Vec::new();
    let mut post = |author: &str, ts: i64, content: &str| {
        let id = format!("m{:05}", posts.len());
        posts.push(Microblog {
            id,
            author_id: author.into(),
            author_name: String::new(),
            author_ip: String::new(),
            timestamp: ts,
            root_id: None,
            content: content.into(),
        });
    };
    let groups = [("first", 100, true, false), ("second", 80, false, true), ("both", 15, true, true)];
    for (name, n, in1, in2) in groups {
        for i in 0..n {
            let u = format!("{name}{i:03}");
            for _ in 0..rng.random_range(1..=3) {
                if in1 {
                    post(&u, rng.random_range(r1.start..r1.end), "watching Drama001");
                }
                if in2 {
                    post(&u, rng.random_range(r2.start..r2.end), "Drama001 again");
                }
            }
            // off-topic and out-of-round posts must not count
            post(&u, rng.random_range(r2.start..r2.end), "unrelated chatter");
            post(&u, rng.random_range(5000..6000), "Drama001 rerun");
            users.push(UserProfile::stub(u));
        }
    }
    for i in 0..40 {
        let u = format!("late{i:02}");
        post(&u, rng.random_range(2000..3000), "Drama001 between rounds");
        users.push(UserProfile::stub(u));
    }
    let d = Dataset::new(posts, users, vec![], vec![show]);
    let corpus = retrieve_all(&d).map_err(|e| e.to_string())?.remove(0);
    let r = round_overlap(&d.shows()[0], &corpus, &d).map_err(|e| e.to_string())?;
    let got = (r.only_first, r.only_second, r.both);
    ensure(got == (100, 80, 15), || format!("got {got:?}"))?;
    Ok(format!("(only_first, only_second, both) = {got:?}"))
}

// ---------------------------------------------------------------- 10

fn fixture_config() -> PipelineConfig {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fixtures/pipeline.conf");
    PipelineConfig::from_file(&path).expect("bundled config")
}

fn snapshot(dir: &Path) -> BTreeMap<PathBuf, Vec<u8>> {
    let mut out = BTreeMap::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in fs::read_dir(&d).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                out.insert(p.strip_prefix(dir).unwrap().to_path_buf(), fs::read(&p).unwrap());
            }
        }
    }
    out
}

fn criterion_pipeline_determinism() -> Outcome {
    let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
    let base = fixture_config();
    ensure(base.seed == 7, || format!("bundled config seed is {}", base.seed))?;
    let mut snaps = Vec::new();
    let mut slowest = Duration::ZERO;
    for (i, workers) in [0usize, 0, 1, 8].into_iter().enumerate() {
        let cfg = PipelineConfig {
            out: tmp.path().join(format!("run{i}")),
            workers,
            ..base.clone()
        };
        let start = Instant::now();
        run_pipeline(&cfg).map_err(|e| e.to_string())?;
        slowest = slowest.max(start.elapsed());
        snaps.push(snapshot(&cfg.out));
    }
    ensure(snaps[0].len() > 2, || "pipeline wrote too few files".into())?;
    for (i, s) in snaps.iter().enumerate().skip(1) {
        for (name, bytes) in &snaps[0] {
            ensure(s.get(name) == Some(bytes), || format!("run {i}: {} differs", name.display()))?;
        }
        ensure(s.len() == snaps[0].len(), || format!("run {i}: file sets differ"))?;
    }
    within(slowest, 30.0)?;
    Ok(format!(
        "{} files byte-identical across 2 default runs and 1 vs 8 workers; slowest {:.2}s",
        snaps[0].len(),
        slowest.as_secs_f64()
    ))
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 10] = [
        ("participation index exactness", criterion_pi),
        ("retrieval recall and closure", criterion_retrieval),
        ("graph oracle equivalence", criterion_graph_oracles),
        ("power-curve fit reproduction", criterion_curve_fit),
        ("modularity landmarks", criterion_modularity_landmarks),
        ("k-means recovery", criterion_kmeans),
        ("sentiment exactness", criterion_sentiment),
        ("propagation plants", criterion_propagation),
        ("round-overlap plants", criterion_round_overlap),
        ("pipeline determinism", criterion_pipeline_determinism),
    ];
    panic::set_hook(Box::new(|_| {}));
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let outcome = panic::catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|p| {
            let msg = p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Err(format!("panicked: {msg}"))
        });
        match outcome {
            Ok(detail) => println!("criterion {:>2} PASS  {name}: {detail}", i + 1),
            Err(why) => {
                failed += 1;
                println!("criterion {:>2} FAIL  {name}: {why}", i + 1);
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
