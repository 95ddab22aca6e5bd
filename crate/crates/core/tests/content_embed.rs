use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::time::Instant;
use vesonet::content_embed::*;

fn random_model(rng: &mut ChaCha8Rng, n: u32, d: usize) -> EmbeddingModel {
    let ids = (0..n).map(ContentId).collect();
    let vecs = (0..n)
        .map(|_| (0..d).map(|_| rng.gen_range(-1.0..1.0)).collect())
        .collect();
    EmbeddingModel::from_vectors(ids, vecs).unwrap()
}

#[test]
fn softmax_rows_sum_to_one() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..50 {
        let (n, d) = (rng.gen_range(2..40), rng.gen_range(1..8));
        let m = random_model(&mut rng, n, d);
        for &c in m.ids() {
            let s: f64 = softmax_row(&m, c).unwrap().iter().sum();
            assert!((s - 1.0).abs() < 1e-9);
        }
    }
}

#[test]
fn gradient_matches_central_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let h = 1e-5;
    for _ in 0..100 {
        let (n, d) = (rng.gen_range(2..10), rng.gen_range(1..6));
        let mut m = random_model(&mut rng, n, d);
        let c = ContentId(rng.gen_range(0..m.len() as u32));
        let n = ContentId(rng.gen_range(0..m.len() as u32));
        let g = pair_gradient(&m, c, n).unwrap();
        let (mut diff, mut norm) = (0.0f64, 0.0f64);
        for k in 0..g.len() {
            let x = m.parameters()[k];
            m.parameters_mut()[k] = x + h;
            let up = pair_loss(&m, c, n).unwrap();
            m.parameters_mut()[k] = x - h;
            let down = pair_loss(&m, c, n).unwrap();
            m.parameters_mut()[k] = x;
            let fd = (up - down) / (2.0 * h);
            diff = diff.max((fd - g[k]).abs());
            norm = norm.max(fd.abs().max(g[k].abs()));
        }
        assert!(diff / norm.max(1e-8) < 1e-4, "relative error {}", diff / norm);
    }
}

fn cluster_gap(model: &EmbeddingModel, cluster: &[u32]) -> f64 {
    let ids = model.ids();
    let (mut intra, mut ni, mut inter, mut nx) = (0.0, 0usize, 0.0, 0usize);
    for (i, &a) in ids.iter().enumerate() {
        for &b in &ids[i + 1..] {
            let s = cosine_similarity(model.vector(a).unwrap(), model.vector(b).unwrap()).unwrap();
            if cluster[a.0 as usize] == cluster[b.0 as usize] {
                intra += s;
                ni += 1;
            } else {
                inter += s;
                nx += 1;
            }
        }
    }
    intra / ni as f64 - inter / nx as f64
}

#[test]
fn planted_clusters_separate() {
    let log = generate_log(&LogSpec::default()).unwrap();
    let g = build_content_graph(&log.records, 1).unwrap();
    let t = Instant::now();
    let model = train_embeddings(&g, &EmbeddingParams::default()).unwrap();
    let gap = cluster_gap(&model, &log.item_cluster);
    eprintln!("nodes {} edges {} gap {gap} nll {:?} in {:?}", g.node_count(), g.edge_count(), model.epoch_nll, t.elapsed());
    assert!(gap >= 0.2);
    assert!(model.epoch_nll.last() < model.epoch_nll.first());
}

#[test]
fn two_cliques_separate() {
    let mut edges = Vec::new();
    for base in [0u32, 4] {
        for a in 0..4 {
            for b in a + 1..4 {
                edges.push((ContentId(base + a), ContentId(base + b), 1.0));
            }
        }
    }
    let g = ContentGraph::from_edges((0..8).map(ContentId), edges).unwrap();
    let params = EmbeddingParams {
        dimension: 4,
        ..Default::default()
    };
    let model = train_embeddings(&g, &params).unwrap();
    let cluster: Vec<u32> = (0..8).map(|i| i / 4).collect();
    assert!(cluster_gap(&model, &cluster) > 0.0);
}

#[test]
fn training_is_reproducible() {
    let log = generate_log(&LogSpec {
        users: 50,
        items: 40,
        ..Default::default()
    })
    .unwrap();
    let g = build_content_graph(&log.records, 1).unwrap();
    let p = EmbeddingParams {
        dimension: 8,
        ..Default::default()
    };
    let a = train_embeddings(&g, &p).unwrap();
    let b = train_embeddings(&g, &p).unwrap();
    assert_eq!(a.parameters(), b.parameters());
    let path_graph = ContentGraph::from_edges(
        (0..3).map(ContentId),
        [(ContentId(0), ContentId(1), 1.0), (ContentId(1), ContentId(2), 1.0)],
    )
    .unwrap();
    assert_eq!(
        neighborhood(&path_graph, ContentId(1), &p).unwrap(),
        neighborhood(&path_graph, ContentId(1), &p).unwrap()
    );
}

#[test]
fn large_log_generates_quickly() {
    let t = Instant::now();
    let log = generate_log(&LogSpec {
        users: 2000,
        items: 5000,
        clusters: 10,
        ..Default::default()
    })
    .unwrap();
    let mut buf = Vec::new();
    write_log_csv(&log.records, &mut buf).unwrap();
    assert!(t.elapsed().as_secs_f64() < 10.0);
    assert_eq!(log.records.len(), 2000 * 20);
}
