use std::sync::atomic::{AtomicBool, AtomicUsize, Ordering};
use std::time::Duration;

use icl_core::bridge::{
    read_records, run_batch, write_records, Concurrency, Context, FnPredictor, PredictionFile, PredictionRecord,
    Predictor, PredictorSpec, QueryMode, Request, Response,
};
use icl_core::tasks::{
    generate_prompt_set, FamilyKind, FunctionFamilySpec, InputDistribution, MixtureSpec, Prompt, PromptSetConfig,
};
use icl_core::Result;
use proptest::prelude::*;
use tempfile::TempDir;

fn prompts(n: usize, p: usize, seed: u64) -> Vec<Prompt> {
    let config = PromptSetConfig {
        mixture: MixtureSpec::single(FunctionFamilySpec::new(FamilyKind::SignVector { d: 3 })),
        input: InputDistribution::standard_normal(3),
        p,
        n_queries: 3,
    };
    generate_prompt_set(&config, seed, n).unwrap().prompts
}

/// Serial predictor that flags any overlapping call.
struct Exclusive {
    busy: AtomicBool,
    overlapped: AtomicBool,
    calls: AtomicUsize,
}

impl Predictor for Exclusive {
    fn name(&self) -> &str {
        "exclusive"
    }

    fn concurrency(&self) -> Concurrency {
        Concurrency::Serial
    }

    fn predict_batch(&self, ctx: &Context, queries: &[Vec<f64>]) -> Result<Vec<f64>> {
        if self.busy.swap(true, Ordering::SeqCst) {
            self.overlapped.store(true, Ordering::SeqCst);
        }
        std::thread::sleep(Duration::from_millis(2));
        self.calls.fetch_add(1, Ordering::SeqCst);
        self.busy.store(false, Ordering::SeqCst);
        Ok(vec![ctx.k() as f64; queries.len()])
    }
}

#[test]
fn two_prompts_two_lengths_give_four_records() {
    let ps = prompts(2, 5, 1);
    let out = run_batch(&PredictorSpec::LastY.build(), &ps, &[0, 1], QueryMode::NextTarget, 1).unwrap();
    assert!(out.is_complete());
    let keys: Vec<_> = out.records.iter().map(|r| (r.prompt_id, r.k)).collect();
    assert_eq!(keys, vec![(0, 0), (0, 1), (1, 0), (1, 1)]);
    assert_eq!(out.records[0].prediction, 0.0);
    assert_eq!(out.records[1].prediction, ps[0].ys[0]);
}

#[test]
fn repeated_runs_write_identical_bytes() {
    let dir = TempDir::new().unwrap();
    let ps = prompts(6, 8, 2);
    let ks: Vec<usize> = (0..8).collect();
    let mut files = Vec::new();
    for i in 0..2 {
        let out = run_batch(&PredictorSpec::Ols.build(), &ps, &ks, QueryMode::NextTarget, 1).unwrap();
        let path = dir.path().join(format!("run{i}.jsonl"));
        write_records(&path, &out.records).unwrap();
        files.push(std::fs::read(path).unwrap());
    }
    assert_eq!(files[0], files[1]);
}

#[test]
fn worker_count_does_not_change_records() {
    let ps = prompts(10, 6, 3);
    let ks: Vec<usize> = (0..=6).collect();
    let model = PredictorSpec::Ols.build();
    let one = run_batch(&model, &ps, &ks, QueryMode::ProbeQueries, 1).unwrap();
    let eight = run_batch(&model, &ps, &ks, QueryMode::ProbeQueries, 8).unwrap();
    assert_eq!(one, eight);
    assert_eq!(one.records.len(), 10 * 7 * 3);
}

#[test]
fn serial_predictors_are_never_called_concurrently() {
    let ps = prompts(8, 6, 4);
    let stub = Exclusive {
        busy: AtomicBool::new(false),
        overlapped: AtomicBool::new(false),
        calls: AtomicUsize::new(0),
    };
    let out = run_batch(&stub, &ps, &[0, 1, 2, 3, 4], QueryMode::NextTarget, 8).unwrap();
    assert_eq!(out.records.len(), 40);
    assert_eq!(stub.calls.load(Ordering::SeqCst), 40);
    assert!(!stub.overlapped.load(Ordering::SeqCst));
}

#[test]
fn prediction_files_serve_stored_values() {
    let dir = TempDir::new().unwrap();
    let ps = prompts(3, 4, 5);
    let ks = [0, 2, 3];
    let original = run_batch(&PredictorSpec::Ols.build(), &ps, &ks, QueryMode::ProbeQueries, 1).unwrap();
    let path = dir.path().join("ols.jsonl");
    write_records(&path, &original.records).unwrap();
    let file = PredictionFile::open("ols", &path).unwrap();
    assert_eq!(file.len(), original.records.len());
    let replay = run_batch(&file, &ps, &ks, QueryMode::ProbeQueries, 1).unwrap();
    assert_eq!(replay, original);

    let missing = run_batch(&file, &ps, &[1], QueryMode::ProbeQueries, 1).unwrap();
    assert_eq!(missing.failures.len(), 3);
    assert!(missing.records.is_empty());
}

#[test]
fn failures_do_not_abort_other_contexts() {
    let ps = prompts(4, 4, 6);
    let flaky = FnPredictor::new("flaky", |ctx: &Context, _q: &[f64]| {
        if ctx.prompt_id == 2 {
            Err(icl_core::Error::Config("refused".into()))
        } else {
            Ok(1.0)
        }
    });
    let out = run_batch(&flaky, &ps, &[0, 1], QueryMode::NextTarget, 2).unwrap();
    assert_eq!(out.records.len(), 6);
    assert_eq!(out.failures.len(), 2);
    assert!(out.failures.iter().all(|f| f.prompt_id == 2 && f.error.contains("refused")));
    assert!(out.into_complete().is_err());
}

#[test]
fn out_of_range_lengths_are_rejected() {
    let ps = prompts(1, 4, 7);
    let model = PredictorSpec::Zero.build();
    assert!(run_batch(&model, &ps, &[4], QueryMode::NextTarget, 1).is_err());
    assert!(run_batch(&model, &ps, &[4], QueryMode::ProbeQueries, 1).is_ok());
}

fn finite() -> impl Strategy<Value = f64> {
    -1e6f64..1e6
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn records_round_trip_exactly(
        rows in prop::collection::vec((0u64..100, 0usize..50, 0usize..4, prop::num::f64::NORMAL), 0..20)
    ) {
        let dir = TempDir::new().unwrap();
        let path = dir.path().join("r.jsonl");
        let mut records: Vec<PredictionRecord> = rows
            .into_iter()
            .map(|(prompt_id, k, query_index, prediction)| PredictionRecord { prompt_id, k, query_index, prediction })
            .collect();
        records.sort_by_key(|r| r.key());
        records.dedup_by_key(|r| r.key());
        write_records(&path, &records).unwrap();
        let back = read_records(&path).unwrap();
        prop_assert_eq!(back.len(), records.len());
        for (a, b) in back.iter().zip(&records) {
            prop_assert_eq!(a.key(), b.key());
            prop_assert_eq!(a.prediction.to_bits(), b.prediction.to_bits());
        }
    }

    #[test]
    fn requests_and_responses_round_trip(
        id in any::<u64>(),
        pairs in prop::collection::vec((prop::collection::vec(finite(), 2), finite()), 0..6),
        query in prop::collection::vec(finite(), 2),
        prediction in prop::option::of(finite()),
    ) {
        let (xs, ys): (Vec<Vec<f64>>, Vec<f64>) = pairs.into_iter().unzip();
        let req = Request { id, xs, ys, query };
        let line = serde_json::to_string(&req).unwrap();
        prop_assert!(!line.contains('\n'));
        let back: Request = serde_json::from_str(&line).unwrap();
        prop_assert_eq!(&back, &req);

        let resp = match prediction {
            Some(v) => Response { id, prediction: Some(v), error: None },
            None => Response { id, prediction: None, error: Some("bad input".into()) },
        };
        let back: Response = serde_json::from_str(&serde_json::to_string(&resp).unwrap()).unwrap();
        prop_assert_eq!(back, resp);
    }
}
