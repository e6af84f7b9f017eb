//! Pathloss, link states, Rayleigh fading and SINR.
//!
//! Received power on a link is tx_power * K * d^(-alpha), with alpha chosen
//! by the link's LoS/NLoS state. Distances below 1 m are clamped to 1 m (a
//! standard near-field reference distance) so the gain stays bounded.

use rand::Rng;
use rand_distr::Exp1;

use crate::error::{Error, Result};
use crate::scenario::RadioConfig;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ChannelState {
    Los,
    Nlos,
}

/// Every link class the model distinguishes. `Interference` covers any
/// co-channel transmitter heard by a receiver it does not serve.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LinkKind {
    BsToUe,
    BsToGroundRn,
    GroundRnToUe,
    BsToSuavRn,
    SuavRnToUe,
    Interference,
}

/// Relay class: aerial relays gain LoS on their access links, ground relays
/// do not. Both enjoy LoS backhaul from their donor station.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum RelayKind {
    SuavRn,
    GroundRn,
}

impl RelayKind {
    pub fn access_link(&self) -> LinkKind {
        match self {
            RelayKind::SuavRn => LinkKind::SuavRnToUe,
            RelayKind::GroundRn => LinkKind::GroundRnToUe,
        }
    }

    pub fn backhaul_link(&self) -> LinkKind {
        match self {
            RelayKind::SuavRn => LinkKind::BsToSuavRn,
            RelayKind::GroundRn => LinkKind::BsToGroundRn,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            RelayKind::SuavRn => "suav",
            RelayKind::GroundRn => "ground",
        }
    }
}

impl std::str::FromStr for RelayKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "suav" => Ok(RelayKind::SuavRn),
            "ground" => Ok(RelayKind::GroundRn),
            other => Err(Error::invalid(
                "kind",
                format!("unknown relay kind {other:?} (expected suav or ground)"),
            )),
        }
    }
}

/// Fixed LoS/NLoS assignment per link class. Aerial relays see their donor
/// and their users in LoS; ground relays only their donor; plain downlinks
/// and all interference paths are NLoS.
pub fn link_state(kind: LinkKind) -> ChannelState {
    match kind {
        LinkKind::BsToUe => ChannelState::Nlos,
        LinkKind::BsToGroundRn => ChannelState::Los,
        LinkKind::GroundRnToUe => ChannelState::Nlos,
        LinkKind::BsToSuavRn => ChannelState::Los,
        LinkKind::SuavRnToUe => ChannelState::Los,
        LinkKind::Interference => ChannelState::Nlos,
    }
}

/// Linear power gain K * d^(-alpha) with the near-field clamp at 1 m.
pub fn pathloss(d: f64, state: ChannelState, radio: &RadioConfig) -> Result<f64> {
    if !(d > 0.0) {
        return Err(Error::invalid("distance", "must be positive"));
    }
    let d = d.max(1.0);
    let alpha = match state {
        ChannelState::Los => radio.alpha_los,
        ChannelState::Nlos => radio.alpha_nlos,
    };
    // The exponents are 2 and 4 in every stock configuration; avoid powf on
    // the hot paths that evaluate this millions of times.
    let d2 = d * d;
    let gain = if alpha == 4.0 {
        radio.pathloss_k / (d2 * d2)
    } else if alpha == 2.0 {
        radio.pathloss_k / d2
    } else {
        radio.pathloss_k * d.powf(-alpha)
    };
    Ok(gain)
}

/// Rayleigh fading as a unit-mean exponential power gain.
pub fn fading_sample<R: Rng>(rng: &mut R) -> f64 {
    rng.sample(Exp1)
}

/// One transmitter as seen by a receiver.
#[derive(Debug, Clone, Copy)]
pub struct LinkSample {
    pub tx_power_w: f64,
    pub distance_m: f64,
    pub state: ChannelState,
    pub fading: f64,
}

impl LinkSample {
    pub fn received_power(&self, radio: &RadioConfig) -> Result<f64> {
        Ok(self.tx_power_w * self.fading * pathloss(self.distance_m, self.state, radio)?)
    }
}

/// Signal-to-interference-plus-noise ratio. With no interferers and zero
/// noise the ratio is unbounded and the function returns the infinity
/// sentinel, which callers treat as "exceeds every threshold".
pub fn sinr(
    signal: &LinkSample,
    interferers: &[LinkSample],
    noise_power_w: f64,
    radio: &RadioConfig,
) -> Result<f64> {
    let num = signal.received_power(radio)?;
    let mut denom = noise_power_w;
    for i in interferers {
        denom += i.received_power(radio)?;
    }
    if denom == 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok(num / denom)
}
