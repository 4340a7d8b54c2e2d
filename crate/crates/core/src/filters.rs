//! Super-Gaussian passbands for ROADM channels and WSS ports.
//!
//! All responses are zero-phase. Frequencies are absolute, relative to the
//! ROADM channel centre.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::planner::Allocation;
use crate::signal::{DualPolSignal, SampledSignal};
use crate::units::db_to_lin;

pub const PORT_AROF_LOW: &str = "arof-low";
pub const PORT_COHERENT: &str = "coherent";
pub const PORT_AROF_HIGH: &str = "arof-high";

/// Order above which a profile is treated as a brick wall in tests.
pub const BRICK_WALL_ORDER: u32 = 20;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FilterProfile {
    pub center: f64,
    pub bw_3db: f64,
    pub order: u32,
    pub insertion_loss_db: f64,
}

impl FilterProfile {
    pub fn new(center: f64, bw_3db: f64, order: u32, insertion_loss_db: f64) -> Result<Self> {
        let p = Self { center, bw_3db, order, insertion_loss_db };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.bw_3db > 0.0) || !self.bw_3db.is_finite() {
            return Err(Error::Config(format!("filter 3 dB width must be positive, got {}", self.bw_3db)));
        }
        if self.order == 0 {
            return Err(Error::Config("filter order must be at least 1".into()));
        }
        if !self.center.is_finite() || !self.insertion_loss_db.is_finite() {
            return Err(Error::Config("filter centre and insertion loss must be finite".into()));
        }
        Ok(())
    }

    /// Amplitude response at absolute frequency `f`.
    pub fn response(&self, f: f64) -> f64 {
        let x = 2.0 * (f - self.center) / self.bw_3db;
        let shape = (-std::f64::consts::LN_2 / 2.0 * x.abs().powi(2 * self.order as i32)).exp();
        db_to_lin(-self.insertion_loss_db).sqrt() * shape
    }

    pub fn power_response(&self, f: f64) -> f64 {
        self.response(f).powi(2)
    }

    pub fn edges(&self) -> (f64, f64) {
        (self.center - self.bw_3db / 2.0, self.center + self.bw_3db / 2.0)
    }
}

pub fn apply_filter(sig: &SampledSignal, f: &FilterProfile) -> SampledSignal {
    sig.apply_transfer(|freq| Complex64::new(f.response(freq), 0.0))
}

pub fn apply_filter_dual(field: &DualPolSignal, f: &FilterProfile) -> DualPolSignal {
    DualPolSignal { x: apply_filter(&field.x, f), y: apply_filter(&field.y, f) }
}

/// Width of `k` identical order-`n` filters in series.
pub fn cascade_width_closed_form(bw_3db: f64, order: u32, k: usize) -> f64 {
    bw_3db * (k as f64).powf(-1.0 / (2.0 * order as f64))
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct FilterCascade {
    pub filters: Vec<FilterProfile>,
}

impl FilterCascade {
    pub fn new(filters: Vec<FilterProfile>) -> Self {
        Self { filters }
    }

    pub fn identical(profile: FilterProfile, k: usize) -> Self {
        Self { filters: vec![profile; k] }
    }

    pub fn len(&self) -> usize {
        self.filters.len()
    }

    pub fn is_empty(&self) -> bool {
        self.filters.is_empty()
    }

    /// Product of the individual amplitude responses; 1 for an empty cascade.
    pub fn response(&self, f: f64) -> f64 {
        self.filters.iter().map(|p| p.response(f)).product()
    }

    pub fn apply(&self, sig: &SampledSignal) -> SampledSignal {
        if self.filters.is_empty() {
            return sig.clone();
        }
        sig.apply_transfer(|f| Complex64::new(self.response(f), 0.0))
    }

    /// 3 dB width measured numerically around `center`, relative to the
    /// response at `center`. Both half-power points are found by bisection.
    pub fn measured_width(&self, center: f64) -> Result<f64> {
        let peak = self.response(center).powi(2);
        if !(peak > 0.0) {
            return Err(Error::Empty("cascade has no passband at the given centre"));
        }
        let reach = self.filters.iter().map(|p| (p.center - center).abs() + p.bw_3db).fold(0.0, f64::max);
        let reach = if reach > 0.0 { reach } else { 1.0 };
        let below = |f: f64| self.response(f).powi(2) / peak < 0.5;
        let half_point = |dir: f64| -> Result<f64> {
            let mut inside = center;
            let mut outside = center + dir * reach;
            let mut grow = 0;
            while !below(outside) {
                outside = center + (outside - center) * 2.0;
                grow += 1;
                if grow > 60 {
                    return Err(Error::Infeasible("cascade response never falls 3 dB".into()));
                }
            }
            for _ in 0..200 {
                let mid = 0.5 * (inside + outside);
                if below(mid) {
                    outside = mid;
                } else {
                    inside = mid;
                }
                if (outside - inside).abs() <= 1e-12 * reach {
                    break;
                }
            }
            Ok(0.5 * (inside + outside))
        };
        Ok(half_point(1.0)? - half_point(-1.0)?)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DemuxPort {
    pub name: String,
    pub profile: FilterProfile,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DemuxPlan {
    pub ports: Vec<DemuxPort>,
}

impl DemuxPlan {
    pub fn new(ports: Vec<DemuxPort>) -> Result<Self> {
        for (i, p) in ports.iter().enumerate() {
            p.profile.validate()?;
            if ports[..i].iter().any(|q| q.name == p.name) {
                return Err(Error::Config(format!("duplicate demux port name '{}'", p.name)));
            }
        }
        Ok(Self { ports })
    }

    pub fn port(&self, name: &str) -> Option<&FilterProfile> {
        self.ports.iter().find(|p| p.name == name).map(|p| &p.profile)
    }

    /// Sum of port power responses at `f`.
    pub fn power_sum(&self, f: f64) -> f64 {
        self.ports.iter().map(|p| p.profile.power_response(f)).sum()
    }

    /// Route a field to every port.
    pub fn split(&self, sig: &SampledSignal) -> Vec<(String, SampledSignal)> {
        self.ports.iter().map(|p| (p.name.clone(), apply_filter(sig, &p.profile))).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DemuxOptions {
    /// Super-Gaussian order of the ARoF ports.
    pub arof_order: u32,
    /// Order of the coherent port. `None` scales the ARoF order by the width
    /// ratio, so every port has the same absolute edge roll-off.
    pub coherent_order: Option<u32>,
    pub insertion_loss_db: f64,
    /// Trimmed from both edges of every port, Hz.
    pub guard_trim: f64,
    /// Coherent port width; defaults to the coherent occupied width.
    pub coherent_width: Option<f64>,
    /// Allowed overlap between adjacent 3 dB passbands, Hz.
    pub overlap_tolerance: f64,
}

impl Default for DemuxOptions {
    fn default() -> Self {
        Self {
            arof_order: 4,
            coherent_order: None,
            insertion_loss_db: 0.0,
            guard_trim: 0.0,
            coherent_width: None,
            overlap_tolerance: 0.0,
        }
    }
}

/// Slack for floating-point rounding when ports abut exactly.
const ABUT_EPS_HZ: f64 = 1e-3;

pub fn build_demux(alloc: &Allocation, opts: &DemuxOptions) -> Result<DemuxPlan> {
    if !alloc.feasible {
        return Err(Error::Infeasible(format!(
            "ARoF signals do not fit the free spectrum (slack {:.3} GHz)",
            alloc.slack / 1e9
        )));
    }
    let coh_width = opts.coherent_width.unwrap_or(alloc.plan.coherent_occupied) - 2.0 * opts.guard_trim;
    let arof_width = alloc.free_per_side - 2.0 * opts.guard_trim;
    if !(coh_width > 0.0) || !(arof_width > 0.0) {
        return Err(Error::Config(format!(
            "guard trim {} Hz leaves no passband (coherent {} Hz, ARoF {} Hz)",
            opts.guard_trim, coh_width, arof_width
        )));
    }
    let coh_order = opts
        .coherent_order
        .unwrap_or_else(|| ((opts.arof_order as f64 * coh_width / arof_width).round() as u32).max(1));
    let il = opts.insertion_loss_db;
    let low = FilterProfile::new(alloc.carrier_offset_low, arof_width, opts.arof_order, il)?;
    let coh = FilterProfile::new(0.0, coh_width, coh_order, il)?;
    let high = FilterProfile::new(alloc.carrier_offset_high, arof_width, opts.arof_order, il)?;
    for (a, b) in [(&low, &coh), (&coh, &high)] {
        let overlap = a.edges().1 - b.edges().0;
        if overlap > opts.overlap_tolerance + ABUT_EPS_HZ {
            return Err(Error::Config(format!(
                "demux passbands overlap by {:.3} GHz (tolerance {:.3} GHz)",
                overlap / 1e9,
                opts.overlap_tolerance / 1e9
            )));
        }
    }
    DemuxPlan::new(vec![
        DemuxPort { name: PORT_AROF_LOW.into(), profile: low },
        DemuxPort { name: PORT_COHERENT.into(), profile: coh },
        DemuxPort { name: PORT_AROF_HIGH.into(), profile: high },
    ])
}
