//! Cross-validated comparison of fusion variants on generated data.
//!
//! cargo run --release --example fusion_experiment -- [epochs] [lr] [hidden] [alpha] [variants...]
//!
//! DSEED sets the data seed (default 2024), CLIP an optional gradient-norm clip.

use std::time::Instant;

use procdur::estimator::{FusionConfig, Preset, Variant};
use procdur::evalbench::run_eval_with_log;
use procdur::synthgen::{generate, Informativeness, SynthSpec};

fn main() {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let epochs: usize = args.first().map_or(40, |s| s.parse().unwrap());
    let lr: f64 = args.get(1).map_or(2e-3, |s| s.parse().unwrap());
    let hidden: usize = args.get(2).map_or(16, |s| s.parse().unwrap());
    let alpha: f64 = args.get(3).map_or(1.0, |s| s.parse().unwrap());
    let variants: Vec<Variant> = if args.len() > 4 {
        args[4..].iter().map(|s| s.parse().unwrap()).collect()
    } else {
        vec![Variant::V, Variant::T, Variant::D, Variant::VTD]
    };

    let spec = SynthSpec {
        seed: std::env::var("DSEED").map_or(2024, |v| v.parse().unwrap()),
        d_img: 16,
        modality_informativeness: Informativeness {
            image: alpha,
            tools: alpha,
            device: alpha,
        },
        ..SynthSpec::default()
    };
    let data = generate(&spec).unwrap().records;
    let configs: Vec<FusionConfig> = variants
        .iter()
        .map(|&v| {
            let mut c = FusionConfig::for_variant(v, Preset::Desk);
            c.use_ptype = false;
            c.d_img = 16;
            c.enc_image = 8;
            c.enc_tools = 8;
            c.enc_device = 8;
            c.hidden = hidden;
            c.epochs = epochs;
            c.lr = lr;
            c.clip_norm = std::env::var("CLIP").ok().map(|v| v.parse().unwrap());
            c
        })
        .collect();
    let start = Instant::now();
    let report = run_eval_with_log(&data, &configs, 7, &|line| {
        if line.ends_with(&format!("epoch {epochs}/{epochs}"))
            || line.contains(&format!("epoch {epochs}/"))
        {
            eprintln!("[{:>6.1}s] {line}", start.elapsed().as_secs_f64());
        }
    })
    .unwrap();
    println!("{}", report.render_text());
    eprintln!("total {:.1}s", start.elapsed().as_secs_f64());
}
