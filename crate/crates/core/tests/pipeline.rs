use reram::crossbar::sneak_rate_exact;
use reram::pipeline::presets;
use reram::pipeline::StopRule;
use reram::{ChannelKind, Experiment, ExperimentConfig};

fn small(kind: ChannelKind) -> ExperimentConfig {
    let mut c = presets::table_64(1024, 4);
    c.kind = kind;
    c.global_iters = 10;
    c.decoder_iters = 10;
    c.seed = 33;
    c
}

#[test]
fn channel_kinds_coincide_without_failed_selectors() {
    let runs: Vec<_> = [ChannelKind::Reram, ChannelKind::BlockVarying, ChannelKind::Iid]
        .into_iter()
        .map(|kind| {
            let mut c = small(kind);
            c.channel.p_f = 0.0;
            let e = Experiment::new(c).unwrap();
            (0..4).map(|i| e.run_trial(i, 70.0).unwrap()).collect::<Vec<_>>()
        })
        .collect();
    for other in &runs[1..] {
        for (a, b) in runs[0].iter().zip(other) {
            assert_eq!(a.bit_errors, b.bit_errors);
            assert_eq!(a.epsilon_hats, b.epsilon_hats);
            assert!(b.epsilon_truth.iter().all(|&e| e == 0.0));
        }
    }
}

#[test]
fn ber_does_not_grow_as_noise_drops() {
    let e = Experiment::new(small(ChannelKind::Reram)).unwrap();
    let points = e.ber_sweep(&[40.0, 60.0, 80.0, 100.0], StopRule::new(u64::MAX, 8)).unwrap();
    for w in points.windows(2) {
        assert!(w[0].ber <= w[1].ber, "σ={} {} > σ={} {}", w[0].sigma, w[0].ber, w[1].sigma, w[1].ber);
    }
    assert!(points[0].ber < points[3].ber);
}

#[test]
fn stored_arrays_have_the_ensemble_sneak_rate() {
    let mut c = presets::table_64(4096, 16);
    c.global_iters = 1;
    c.decoder_iters = 1;
    let q = c.shaper.q.unwrap();
    let e = Experiment::new(c).unwrap();
    let truth: Vec<f64> = (0..24).flat_map(|i| e.run_trial(i, 50.0).unwrap().epsilon_truth).collect();
    let n = truth.len() as f64;
    let mean = truth.iter().sum::<f64>() / n;
    let se = (truth.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0) / n).sqrt();
    let exact = sneak_rate_exact(64, 64, q, 1e-3).unwrap();
    assert!((mean - exact).abs() < 4.0 * se, "mean {mean} exact {exact} se {se}");
}

#[test]
fn estimates_track_true_rates_at_low_noise() {
    let mut c = presets::table_64(4096, 4);
    c.global_iters = 1;
    c.decoder_iters = 1;
    let e = Experiment::new(c).unwrap();
    for i in 0..4 {
        let r = e.run_trial(i, 20.0).unwrap();
        for (hat, truth) in r.epsilon_hats.iter().zip(&r.epsilon_truth) {
            assert!((hat - truth).abs() < 0.02, "{hat} vs {truth}");
        }
    }
}
