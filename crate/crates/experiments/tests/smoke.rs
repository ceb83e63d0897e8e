//! Every registered experiment runs end to end at toy size, deterministically, and
//! persists readable records.

use fplab_experiments::{names, record_file_name, run_experiment, Artifact, ExperimentConfig};
use fplab_io::{parse_toml_table, read_run_record, read_spectrum_csv};

fn tiny(name: &str) -> &'static str {
    match name {
        "fp-1d" | "grad-loss" => "seeds = [0]\nsamples = 41\n[model]\nwidths = [1, 16, 1]\n[schedule]\nepochs = 40\n",
        "ricker-flip" => "seeds = [0]\nsamples = 41\n[model]\nwidths = [1, 16, 1]\n[schedule]\nepochs = 40\n[knobs]\ntest_points = 101\n",
        "anti-fp-large-init" => "seeds = [0]\nsamples = 41\n[model]\nwidths = [1, 16, 1]\n[schedule]\nepochs = 40\n",
        "fp-2d-image" => "samples = 64\n[target]\nsize = 8\n[model]\nwidths = [2, 8, 1]\n[schedule]\nepochs = 12\n[schedule.record]\nepochs = 3\n[knobs]\nsnapshots = [3, 6, 12]\n",
        "fp-mnist-projection" => "seeds = [0]\nsamples = 60\n[model]\nwidths = [784, 6, 1]\n[schedule]\nepochs = 10\n[knobs]\nprobe_half_width = 8\n",
        "fp-filtering" => "seeds = [0]\nsamples = 60\n[model]\nwidths = [784, 6, 1]\n[schedule]\nepochs = 10\n",
        "parity-gen" => "seeds = [0]\nsamples = 40\n[model]\nwidths = [10, 16, 1]\n[schedule]\nepochs = 20\n",
        "early-stop" => "seeds = [0]\nsamples = 60\n[model]\nwidths = [1, 16, 1]\n[schedule]\nepochs = 30\n[knobs]\ntest_points = 300\npeak_grid_points = 200\n",
        "runge" => "[schedule]\nepochs = 2000\n",
        "poisson-dnn-vs-jacobi" => "seeds = [0]\nsamples = 41\n[model]\nwidths = [1, 16, 1]\n[schedule]\nepochs = 20\n[knobs]\njacobi_n = 41\njacobi_iterations = 200\n",
        "hybrid" => "seeds = [0]\nsamples = 41\n[model]\nwidths = [1, 16, 1]\n[schedule]\nepochs = 20\n[knobs]\ngrid_n = 101\njacobi_max_iterations = 100000\n",
        "mscale-two-tone" => "seeds = [0]\nsamples = 81\n[model]\nwidths = [1, 12, 12, 1]\n[schedule]\nepochs = 30\n",
        "ntk-eigen" => "seeds = [0]\nsamples = 16\n[model]\nwidths = [1, 64, 1]\n[knobs]\ntop = 6\n",
        "lfp-vs-training" => "samples = 16\n[model]\nwidths = [1, 256, 1]\n[knobs]\neval_points = 41\nmatch_epochs = [2, 5]\n",
        other => panic!("no toy configuration for {other}"),
    }
}

fn config(name: &str) -> ExperimentConfig {
    let over = parse_toml_table(tiny(name)).unwrap();
    ExperimentConfig::resolve(name, Some(&over)).unwrap_or_else(|e| panic!("{name}: {e}"))
}

#[test]
fn every_experiment_runs_and_repeats_exactly() {
    for name in names() {
        let cfg = config(name);
        let a = run_experiment(&cfg).unwrap_or_else(|e| panic!("{name}: {e}"));
        let b = run_experiment(&cfg).unwrap();
        assert!(!a.summary.checks.is_empty(), "{name} reports no checks");
        assert_eq!(a.summary.render(), b.summary.render(), "{name} summary differs between runs");
        assert_eq!(a.runs, b.runs, "{name} records differ between runs");
    }
}

#[test]
fn persisted_outputs_read_back() {
    let dir = tempfile::tempdir().unwrap();
    for name in ["fp-1d", "fp-mnist-projection", "runge"] {
        let mut cfg = config(name);
        cfg.out_dir = Some(dir.path().to_path_buf());
        let out = run_experiment(&cfg).unwrap();
        let root = dir.path().join(name);
        for run in &out.runs {
            let back = read_run_record(&root.join(record_file_name(&run.label, run.record.seed))).unwrap();
            assert_eq!(back, run.record, "{name}/{}", run.label);
        }
        for art in &out.artifacts {
            match art {
                Artifact::Spectrum { file, spectrum } => {
                    let back = read_spectrum_csv(&root.join(file)).unwrap();
                    assert_eq!(back.keys, spectrum.keys);
                    let text = std::fs::read_to_string(root.join(file)).unwrap();
                    assert!(text.starts_with("key,re,im,mag\n"));
                }
                Artifact::Text { file, contents } => assert_eq!(&std::fs::read_to_string(root.join(file)).unwrap(), contents),
            }
        }
        let summary = std::fs::read_to_string(root.join("summary.txt")).unwrap();
        assert_eq!(summary, out.summary.render());
        let cfg_back = parse_toml_table(&std::fs::read_to_string(root.join("config.toml")).unwrap()).unwrap();
        let again = ExperimentConfig::resolve(name, Some(&cfg_back)).unwrap();
        assert_eq!(again.config_hash(), cfg.config_hash());
    }
}

#[test]
fn overrides_must_name_known_fields() {
    let over = parse_toml_table("[knobs]\nno_such_knob = 1\n").unwrap();
    let err = ExperimentConfig::resolve("fp-1d", Some(&over)).and_then(|c| run_experiment(&c));
    assert!(err.is_err());
}
