//! The registered experiments.

use crate::config::ExperimentConfig;
use crate::error::{ExpError, ExpResult};
use crate::runners::{self, Outcome};

pub struct Entry {
    pub name: &'static str,
    pub anchor: &'static str,
    pub description: &'static str,
    pub(crate) defaults: fn() -> ExperimentConfig,
    pub(crate) run: fn(&ExperimentConfig, &mut Outcome) -> ExpResult<()>,
}

impl std::fmt::Debug for Entry {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Entry").field("name", &self.name).field("anchor", &self.anchor).finish()
    }
}

static ENTRIES: &[Entry] = &[
    Entry {
        name: "fp-1d",
        anchor: "Fig. onelayer",
        description: "tanh net on sin(x)+sin(3x)+sin(5x): low DFT bins converge first",
        defaults: runners::ordering::fp_1d_defaults,
        run: runners::ordering::run_fp_1d,
    },
    Entry {
        name: "fp-2d-image",
        anchor: "Fig. 2d",
        description: "coordinate-to-intensity fit of a grayscale image, snapshots at 80/2000/58000 epochs",
        defaults: runners::image::fp_2d_defaults,
        run: runners::image::run_fp_2d,
    },
    Entry {
        name: "fp-mnist-projection",
        anchor: "Fig. CMFT",
        description: "MNIST 0/1 response frequency along the first principal direction",
        defaults: runners::image::projection_defaults,
        run: runners::image::run_projection,
    },
    Entry {
        name: "fp-filtering",
        anchor: "Fig. Noisefitting-Mnist",
        description: "Gaussian-filtered low/high-frequency errors on MNIST 0/1",
        defaults: runners::image::filtering_defaults,
        run: runners::image::run_filtering,
    },
    Entry {
        name: "ricker-flip",
        anchor: "Figs. ricker, 1dnonfp",
        description: "Ricker activation: ordering holds for a=0.3 and breaks for a=0.1",
        defaults: runners::ordering::ricker_defaults,
        run: runners::ordering::run_ricker,
    },
    Entry {
        name: "grad-loss",
        anchor: "Fig. gradloss",
        description: "an extra loss of gradient speeds up the high frequencies",
        defaults: runners::ordering::grad_loss_defaults,
        run: runners::ordering::run_grad_loss,
    },
    Entry {
        name: "parity-gen",
        anchor: "Fig. parity",
        description: "parity fits its training set but does not generalize; three_sine does",
        defaults: runners::generalization::parity_defaults,
        run: runners::generalization::run_parity,
    },
    Entry {
        name: "early-stop",
        anchor: "Fig. Generalization",
        description: "noisy low-frequency data: test loss turns, the output stays low-frequency at the turn",
        defaults: runners::generalization::early_stop_defaults,
        run: runners::generalization::run_early_stop,
    },
    Entry {
        name: "runge",
        anchor: "Fig. runge",
        description: "degree-11 polynomial by gradient descent on 12 equispaced points",
        defaults: runners::runge::runge_defaults,
        run: runners::runge::run_runge,
    },
    Entry {
        name: "poisson-dnn-vs-jacobi",
        anchor: "Fig. Poisson",
        description: "Ritz-trained net converges low frequencies first, Jacobi high frequencies first",
        defaults: runners::poisson::dnn_vs_jacobi_defaults,
        run: runners::poisson::run_dnn_vs_jacobi,
    },
    Entry {
        name: "hybrid",
        anchor: "Fig. Poisson(d)",
        description: "Jacobi started from a briefly trained net against Jacobi from zero",
        defaults: runners::poisson::hybrid_defaults,
        run: runners::poisson::run_hybrid,
    },
    Entry {
        name: "mscale-two-tone",
        anchor: "Sec. MscaleDNN",
        description: "scale ladder against an equal-parameter plain net on sin(x)+sin(20x)",
        defaults: runners::mscale::mscale_defaults,
        run: runners::mscale::run_mscale,
    },
    Entry {
        name: "anti-fp-large-init",
        anchor: "Sec. anti-F-Principle",
        description: "large initial weights break the low-frequency-first ordering",
        defaults: runners::ordering::anti_fp_defaults,
        run: runners::ordering::run_anti_fp,
    },
    Entry {
        name: "ntk-eigen",
        anchor: "Sec. NTK regime",
        description: "NTK eigenvectors oscillate more as eigenvalues shrink",
        defaults: runners::kernel::ntk_eigen_defaults,
        run: runners::kernel::run_ntk_eigen,
    },
    Entry {
        name: "lfp-vs-training",
        anchor: "Sec. LFP model",
        description: "fitted linear F-Principle dynamics against a wide two-layer relu net",
        defaults: runners::kernel::lfp_defaults,
        run: runners::kernel::run_lfp,
    },
];

pub fn entries() -> &'static [Entry] {
    ENTRIES
}

pub fn names() -> Vec<&'static str> {
    ENTRIES.iter().map(|e| e.name).collect()
}

pub fn lookup(name: &str) -> ExpResult<&'static Entry> {
    ENTRIES.iter().find(|e| e.name == name).ok_or_else(|| ExpError::UnknownExperiment { name: name.into(), valid: names() })
}
