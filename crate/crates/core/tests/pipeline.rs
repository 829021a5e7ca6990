//! End-to-end flows across modules: generate → disk → train → checkpoint →
//! streaming prediction → evaluation.

use procdur::datamodel::{load_dataset, ProcedureRecord};
use procdur::estimator::{
    load_checkpoint, open_session, save_checkpoint, train, FusionConfig, Preset, Variant,
};
use procdur::evalbench::{run_eval, EvalReport, FOLDS};
use procdur::synthgen::{
    generate, load_trace, oracle_progress, save_synthetic, EmittedChannels, SynthSpec,
};

fn small_spec(seed: u64) -> SynthSpec {
    SynthSpec {
        n_procedures: 12,
        seed,
        d_img: 6,
        mean_duration: (1..=5).map(|t| (t, 75.0)).collect(),
        ..SynthSpec::default()
    }
}

fn small_config(variant: Variant) -> FusionConfig {
    let mut c = FusionConfig::for_variant(variant, Preset::Desk);
    c.d_img = 6;
    c.enc_image = 4;
    c.enc_tools = 4;
    c.enc_device = 4;
    c.hidden = 6;
    c.epochs = 3;
    c
}

#[test]
fn disk_round_trip_feeds_training_and_streaming() {
    let out = generate(&small_spec(1)).unwrap();
    let dir = tempfile::tempdir().unwrap();
    save_synthetic(&out, dir.path()).unwrap();
    let records = load_dataset(dir.path()).unwrap();
    assert_eq!(records, out.records);
    let trace = load_trace(dir.path()).unwrap();
    for r in &records {
        let o = oracle_progress(r, &trace).unwrap();
        assert_eq!(o.progress.last(), Some(&1.0));
    }

    let (model, log) = train(&records, &small_config(Variant::VTD)).unwrap();
    assert_eq!(log.epoch_losses.len(), 3);
    let ckpt = dir.path().join("model.ckpt.json");
    save_checkpoint(&model, &ckpt).unwrap();
    let loaded = load_checkpoint(&ckpt).unwrap();

    for r in &records {
        let offline = model.predict_record(r).unwrap();
        let mut session = open_session(&loaded, r.ptype());
        for (frame, expected) in r.frames().iter().zip(&offline) {
            let p = session.feed(frame).unwrap();
            assert_eq!(p, *expected);
            assert!(p.n_hat >= p.i as f64 && p.remaining >= 0.0);
        }
    }
}

#[test]
fn evaluation_covers_every_procedure_once() {
    let records = generate(&small_spec(2)).unwrap().records;
    let configs = [small_config(Variant::D), small_config(Variant::VT)];
    let report = run_eval(&records, &configs, 11).unwrap();

    assert_eq!(report.folds.folds.len(), FOLDS);
    let mut ids: Vec<&str> = report
        .folds
        .folds
        .iter()
        .flatten()
        .map(String::as_str)
        .collect();
    ids.sort();
    let mut expected: Vec<&str> = records.iter().map(ProcedureRecord::id).collect();
    expected.sort();
    assert_eq!(ids, expected);

    let names: Vec<&str> = report.methods.iter().map(|m| m.name.as_str()).collect();
    assert_eq!(names, ["naive", "type", "D-Net", "VT-Net"]);
    for m in &report.methods {
        assert_eq!(m.procedures.len(), records.len());
        for p in &m.procedures {
            assert_eq!(p.abs.len(), p.n);
            assert_eq!(report.folds.fold_of(&p.id), Some(p.fold));
        }
    }

    // The JSON report is a faithful serialization.
    let back: EvalReport = serde_json::from_str(&report.to_json()).unwrap();
    assert_eq!(back.to_json(), report.to_json());
}

#[test]
fn variants_reject_data_without_their_channels() {
    let spec = SynthSpec {
        channels: EmittedChannels {
            device: true,
            tools: false,
            image: false,
        },
        d_img: 0,
        ..small_spec(3)
    };
    let records = generate(&spec).unwrap().records;
    assert!(train(&records, &small_config(Variant::D)).is_ok());
    for v in [
        Variant::V,
        Variant::T,
        Variant::TD,
        Variant::VT,
        Variant::VTD,
    ] {
        assert!(train(&records, &small_config(v)).is_err(), "{v}");
    }
}

#[test]
fn training_is_reproducible_and_seed_sensitive() {
    let records = generate(&small_spec(4)).unwrap().records;
    let mut c = small_config(Variant::TD);
    let (a, _) = train(&records, &c).unwrap();
    let (b, _) = train(&records, &c).unwrap();
    assert_eq!(a.network, b.network);
    c.seed = 1;
    let (d, _) = train(&records, &c).unwrap();
    assert_ne!(a.network, d.network);
}
