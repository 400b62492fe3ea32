use super::decoy::DecoyInputs;
use crate::error::{Error, Result};
use libm::{exp, pow};

/// Detector and channel model for the decoy-state simulations.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ChannelModel {
    /// Total system loss in dB; η = 10^(−loss/10).
    pub loss_db: f64,
    /// Dark-count probability per detector.
    pub p_d: f64,
    pub e_mis: f64,
}

impl ChannelModel {
    pub fn reference() -> Self {
        ChannelModel {
            loss_db: 30.0,
            p_d: 6e-7,
            e_mis: 5e-3,
        }
    }

    pub fn from_eta(eta: f64, p_d: f64, e_mis: f64) -> Result<Self> {
        if !(eta > 0.0 && eta <= 1.0) {
            return Err(Error::config("eta", "must lie in (0, 1]"));
        }
        Ok(ChannelModel {
            loss_db: -10.0 * libm::log10(eta),
            p_d,
            e_mis,
        })
    }

    pub fn eta(&self) -> f64 {
        pow(10.0, -self.loss_db / 10.0)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.loss_db >= 0.0) || !self.loss_db.is_finite() {
            return Err(Error::config("loss_db", "must be a finite nonnegative number"));
        }
        if !(0.0..1.0).contains(&self.p_d) {
            return Err(Error::config("p_d", "must lie in [0, 1)"));
        }
        if !(0.0..1.0).contains(&self.e_mis) {
            return Err(Error::config("e_mis", "must lie in [0, 1)"));
        }
        Ok(())
    }

    /// D_k = 1 − (1−2p_d)e^{−ηk}.
    pub fn detection(&self, k: f64) -> f64 {
        1.0 - (1.0 - 2.0 * self.p_d) * exp(-self.eta() * k)
    }

    /// e_k = p_d + e_mis(1 − e^{−ηk}).
    pub fn error(&self, k: f64) -> f64 {
        self.p_d + self.e_mis * (1.0 - exp(-self.eta() * k))
    }
}

/// Per-intensity sifted counts and test-basis errors, ordered (μ, ν, ω).
/// Real-valued in expected-value mode.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ObservedCounts {
    pub n_z: [f64; 3],
    pub n_x: [f64; 3],
    pub m_x: [f64; 3],
}

impl ObservedCounts {
    pub fn m_x_total(&self) -> f64 {
        self.m_x.iter().sum()
    }
}

fn weighted(model: &ChannelModel, inputs: &DecoyInputs) -> ([f64; 3], [f64; 3], f64) {
    let probs = inputs.probabilities();
    let ks = inputs.intensities.as_array();
    let mut pd = [0.0; 3];
    let mut pe = [0.0; 3];
    for i in 0..3 {
        pd[i] = probs[i] * model.detection(ks[i]);
        pe[i] = probs[i] * model.error(ks[i]);
    }
    let total = pd.iter().sum();
    (pd, pe, total)
}

/// Expected counts: E[n_{Z,k}] = N_Z p_k D_k / Σ p_j D_j, likewise for X, and
/// E[m_{X,k}] = N_X p_k e_k / Σ p_j D_j.
pub fn channel_expectations(model: &ChannelModel, inputs: &DecoyInputs) -> Result<ObservedCounts> {
    model.validate()?;
    let (pd, pe, total) = weighted(model, inputs);
    if !(total > 0.0) {
        return Err(Error::DegenerateChannel);
    }
    let (nz, nx) = (inputs.n_z as f64, inputs.n_x as f64);
    let mut c = ObservedCounts {
        n_z: [0.0; 3],
        n_x: [0.0; 3],
        m_x: [0.0; 3],
    };
    for i in 0..3 {
        c.n_z[i] = nz * pd[i] / total;
        c.n_x[i] = nx * pd[i] / total;
        c.m_x[i] = nx * pe[i] / total;
    }
    Ok(c)
}

/// Expected key-basis QBER Σ p_k e_k / Σ p_k D_k.
pub fn expected_key_qber(model: &ChannelModel, inputs: &DecoyInputs) -> Result<f64> {
    let (_, pe, total) = weighted(model, inputs);
    if !(total > 0.0) {
        return Err(Error::DegenerateChannel);
    }
    Ok(pe.iter().sum::<f64>() / total)
}
