use har_core::sensor::{HandSide, MotionType, RecordingSession};
use har_core::sim::{dominant_frequency, synth_corpus};

const LEFT_ROWS: f64 = 36_792.0;
const RIGHT_ROWS: f64 = 32_296.0;

fn rows(corpus: &[RecordingSession], side: HandSide) -> usize {
    corpus.iter().filter(|s| s.side == side).map(|s| s.frames.len()).sum()
}

#[test]
fn default_corpus_size_matches_reference_counts() {
    let corpus = synth_corpus(25, &HandSide::ALL, 7);
    assert_eq!(corpus.len(), 450);
    let left = rows(&corpus, HandSide::Left) as f64;
    let right = rows(&corpus, HandSide::Right) as f64;
    assert!((left - LEFT_ROWS).abs() / LEFT_ROWS < 0.15, "left rows {left}");
    assert!((right - RIGHT_ROWS).abs() / RIGHT_ROWS < 0.15, "right rows {right}");
    assert!(right < left);
    for m in MotionType::ALL {
        assert_eq!(corpus.iter().filter(|s| s.motion_type == m).count(), 50);
    }
}

fn session_frequency(s: &RecordingSession) -> f64 {
    let signal: Vec<f64> = s.frames.iter().map(|f| f.linear_accelerometer[0]).collect();
    let span = s.frames.last().unwrap().timestamp - s.frames[0].timestamp;
    let rate = (s.frames.len() - 1) as f64 / span;
    dominant_frequency(&signal, rate, 0.1, 0.8)
}

/// Nearest-centroid accuracy on a single spectral feature; centroids come
/// from one seed and are scored on another.
fn centroid_accuracy(fit: &[RecordingSession], score: &[RecordingSession]) -> f64 {
    let mut centroid = [0.0; MotionType::COUNT];
    let mut count = [0usize; MotionType::COUNT];
    for s in fit {
        centroid[s.motion_type.index()] += session_frequency(s);
        count[s.motion_type.index()] += 1;
    }
    for k in 0..MotionType::COUNT {
        centroid[k] /= count[k] as f64;
    }
    let hits = score
        .iter()
        .filter(|s| {
            let f = session_frequency(s);
            let nearest = (0..MotionType::COUNT)
                .min_by(|&a, &b| (centroid[a] - f).abs().total_cmp(&(centroid[b] - f).abs()))
                .unwrap();
            nearest == s.motion_type.index()
        })
        .count();
    hits as f64 / score.len() as f64
}

#[test]
fn classes_stay_separable_across_seeds() {
    let base = synth_corpus(25, &HandSide::ALL, 1);
    for seed in [2, 3, 99] {
        let other = synth_corpus(25, &HandSide::ALL, seed);
        let acc = centroid_accuracy(&base, &other);
        assert!(acc >= 0.99, "seed {seed}: nearest-centroid accuracy {acc}");
    }
}

#[test]
fn distinct_seeds_give_distinct_data() {
    let a = synth_corpus(2, &[HandSide::Left], 1);
    let b = synth_corpus(2, &[HandSide::Left], 2);
    assert_ne!(a[0].frames[5].accelerometer, b[0].frames[5].accelerometer);
}
