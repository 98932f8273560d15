use cartoswarm_bench::fusion_instance;
use cartoswarm_core::comms::CodecKind;
use cartoswarm_core::fusion::{fuse_maps, intermediate_obstacle};
use cartoswarm_core::sim::World;
use cartoswarm_core::{FusionParams, SimConfig};
use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use std::hint::black_box;

fn fusion(c: &mut Criterion) {
    let params = FusionParams::default();
    let mut group = c.benchmark_group("fuse_maps");
    for side in [128, 512] {
        let inst = fusion_instance(side, 3, 7);
        group.bench_with_input(BenchmarkId::from_parameter(side), &inst, |b, inst| {
            b.iter_batched(
                || (inst.fused_explored.clone(), inst.fused_obstacles.clone()),
                |(mut fe, mut fo)| {
                    fuse_maps(
                        &inst.self_explored,
                        &inst.self_obstacles,
                        &mut fe,
                        &mut fo,
                        &inst.neighbors,
                        &params,
                    )
                    .unwrap();
                    (fe, fo)
                },
                criterion::BatchSize::LargeInput,
            )
        });
    }
    group.finish();

    let inst = fusion_instance(512, 3, 8);
    c.bench_function("intermediate_obstacle/512", |b| {
        b.iter(|| {
            intermediate_obstacle(
                black_box(&inst.self_explored),
                &inst.self_obstacles,
                &inst.neighbors,
                &params,
            )
            .unwrap()
        })
    });
}

fn codec(c: &mut Criterion) {
    let inst = fusion_instance(512, 0, 9);
    for kind in [CodecKind::Identity, CodecKind::Downsample { factor: 4 }] {
        let codec = kind.build(512).unwrap();
        c.bench_function(&format!("codec_round_trip/{}", codec.name()), |b| {
            b.iter(|| {
                codec
                    .decode(&codec.encode(black_box(&inst.self_obstacles)).unwrap())
                    .unwrap()
            })
        });
    }
}

fn sim_step(c: &mut Criterion) {
    let cfg = SimConfig::desk();
    c.bench_function("world_step/desk_n10", |b| {
        b.iter_batched(
            || (World::new(cfg.clone()).unwrap(), cfg.baseline_policy()),
            |(mut world, mut policy)| {
                for _ in 0..20 {
                    world.step(&mut policy, &mut ()).unwrap();
                }
                world
            },
            criterion::BatchSize::LargeInput,
        )
    });
}

criterion_group!(benches, fusion, codec, sim_step);
criterion_main!(benches);
