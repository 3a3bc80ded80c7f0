use criterion::{black_box, criterion_group, criterion_main, Criterion};

use odcl_bench::{blobs, demo_index};
use odcl_core::kmeans::kmeans;
use odcl_core::pipeline::fixtures;
use odcl_core::structure::{structure_corpus, Gazetteer, LexiconProvider};
use odcl_core::taxonomy::cooccurrence;
use odcl_core::{FacetQuery, KeywordKind};

fn clustering(c: &mut Criterion) {
    let points = blobs(3, 100, 384, 1);
    c.bench_function("kmeans 300x384 k=3", |b| b.iter(|| kmeans(black_box(&points), 3, 7, 100, 1e-9).unwrap()));
}

fn structuring(c: &mut Criterion) {
    let (_dir, index) = demo_index();
    let gazetteer = Gazetteer::parse(fixtures::DEMO_GAZETTEER).unwrap();
    let bodies: Vec<&str> = index.corpus().comments.values().map(|c| c.body.as_str()).collect();
    c.bench_function("gazetteer detect demo comments", |b| {
        b.iter(|| bodies.iter().map(|body| gazetteer.detect(black_box(body)).unwrap().len()).sum::<usize>())
    });
    let provider = LexiconProvider::new(gazetteer.clone());
    c.bench_function("structure demo corpus", |b| b.iter(|| structure_corpus(black_box(index.corpus()), &provider).unwrap()));
    c.bench_function("cooccurrence demo corpus", |b| {
        b.iter(|| cooccurrence(index.corpus(), index.structured(), index.taxonomy()).unwrap())
    });
}

fn ranking(c: &mut Criterion) {
    let (_dir, index) = demo_index();
    let ui = index.taxonomy().names(KeywordKind::UiComponent);
    let ve = index.taxonomy().names(KeywordKind::VisualElement);
    let query = FacetQuery::new(Some(&ui[0]), Some(&ve[0]));
    c.bench_function("sort_posts demo", |b| b.iter(|| index.sort_posts(black_box(&query)).unwrap()));
    let post = index.corpus().posts.keys().next().unwrap().clone();
    c.bench_function("sort_comments demo", |b| {
        b.iter(|| index.sort_comments(black_box(&post), Some(&ve[0]), None).unwrap())
    });
}

criterion_group!(benches, clustering, structuring, ranking);
criterion_main!(benches);
