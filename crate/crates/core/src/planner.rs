//! Placement of the two ARoF carriers in the spectrum a coherent service
//! leaves unused inside its ROADM channel.
//!
//! Each ARoF signal is a double-sideband field: optical carrier at the
//! placement offset, sidebands at ±IF spanning ±bandwidth/2 around it. The
//! carriers sit in the middle of the two free side regions, mirrored about
//! the channel centre. Infeasibility is reported in the value, never as an
//! error, so sweeps can run past it.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelPlan {
    /// ROADM channel width, Hz.
    pub channel_width: f64,
    /// Width occupied by the coherent carrier, Hz.
    pub coherent_occupied: f64,
    pub if_freq: f64,
    /// ARoF signal (OFDM) bandwidth, Hz.
    pub arof_bw: f64,
    /// Minimum margin to the coherent edge and to the channel edge, Hz.
    pub guard: f64,
}

impl ChannelPlan {
    pub fn validate(&self) -> Result<()> {
        if !(self.channel_width > 0.0) {
            return Err(Error::Config("channel width must be positive".into()));
        }
        if !(self.coherent_occupied >= 0.0) || self.coherent_occupied > self.channel_width {
            return Err(Error::Config(format!(
                "coherent occupied width {} Hz does not fit the {} Hz channel",
                self.coherent_occupied, self.channel_width
            )));
        }
        if !(self.arof_bw > 0.0) {
            return Err(Error::Config("ARoF bandwidth must be positive".into()));
        }
        if !(self.if_freq > self.arof_bw / 2.0) {
            return Err(Error::Config(format!(
                "IF {} Hz must exceed half the ARoF bandwidth {} Hz",
                self.if_freq, self.arof_bw
            )));
        }
        if !(self.guard >= 0.0) {
            return Err(Error::Config("guard must be non-negative".into()));
        }
        Ok(())
    }

    pub fn free_per_side(&self) -> f64 {
        (self.channel_width - self.coherent_occupied) / 2.0
    }

    pub fn free_total(&self) -> f64 {
        self.channel_width - self.coherent_occupied
    }

    /// Optical extent of one DSB ARoF signal.
    pub fn span_per_arof(&self) -> f64 {
        2.0 * (self.if_freq + self.arof_bw / 2.0)
    }

    /// Largest ARoF bandwidth that still fits: 2·(free/2 − guard − IF).
    pub fn max_feasible_bw(&self) -> f64 {
        2.0 * (self.free_per_side() / 2.0 - self.guard - self.if_freq)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Allocation {
    pub feasible: bool,
    /// Negative, Hz from channel centre.
    pub carrier_offset_low: f64,
    /// Positive, Hz from channel centre.
    pub carrier_offset_high: f64,
    pub free_per_side: f64,
    pub span_per_arof: f64,
    /// `free_per_side − span − 2·guard`; negative values are the deficit.
    pub slack: f64,
    pub occupancy_ratio: f64,
    pub plan: ChannelPlan,
}

impl Allocation {
    pub fn free_total(&self) -> f64 {
        2.0 * self.free_per_side
    }

    /// Inner and outer optical edges of the high-side ARoF signal.
    pub fn high_extent(&self) -> (f64, f64) {
        (self.carrier_offset_high - self.span_per_arof / 2.0, self.carrier_offset_high + self.span_per_arof / 2.0)
    }
}

pub fn allocate(plan: &ChannelPlan) -> Result<Allocation> {
    plan.validate()?;
    let free = plan.free_per_side();
    let span = plan.span_per_arof();
    let carrier = plan.coherent_occupied / 2.0 + free / 2.0;
    // With centred carriers both margins are equal.
    let inner_ok = carrier - span / 2.0 >= plan.coherent_occupied / 2.0 + plan.guard;
    let outer_ok = carrier + span / 2.0 <= plan.channel_width / 2.0 - plan.guard;
    Ok(Allocation {
        feasible: inner_ok && outer_ok,
        carrier_offset_low: -carrier,
        carrier_offset_high: carrier,
        free_per_side: free,
        span_per_arof: span,
        slack: free - span - 2.0 * plan.guard,
        occupancy_ratio: plan.arof_bw / plan.channel_width,
        plan: plan.clone(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeasibilityTable {
    pub rows: Vec<Allocation>,
    /// Closed-form bound 2·(free/2 − guard − IF), Hz.
    pub max_feasible_bw: f64,
    /// Every row agrees with the closed-form bound.
    pub consistent: bool,
}

/// One allocation per bandwidth in `bandwidths`, all other plan fields fixed.
pub fn sweep_feasibility(base: &ChannelPlan, bandwidths: &[f64]) -> Result<FeasibilityTable> {
    let rows = bandwidths
        .iter()
        .map(|&bw| allocate(&ChannelPlan { arof_bw: bw, ..base.clone() }))
        .collect::<Result<Vec<_>>>()?;
    let max_feasible_bw = base.max_feasible_bw();
    let consistent = rows.iter().all(|r| r.feasible == (r.plan.arof_bw <= max_feasible_bw));
    Ok(FeasibilityTable { rows, max_feasible_bw, consistent })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn plan_100g(bw: f64) -> ChannelPlan {
        ChannelPlan { channel_width: 50e9, coherent_occupied: 37.64e9, if_freq: 2e9, arof_bw: bw, guard: 0.0 }
    }

    fn plan_400g(bw: f64) -> ChannelPlan {
        ChannelPlan { channel_width: 100e9, coherent_occupied: 82.46e9, if_freq: 2e9, arof_bw: bw, guard: 0.0 }
    }

    #[test]
    fn free_spectrum_totals() {
        let a = allocate(&plan_100g(1.6e9)).unwrap();
        assert_eq!(a.free_total(), 12.36e9);
        assert_eq!(a.free_per_side, 6.18e9);
        assert_eq!(a.span_per_arof, 5.6e9);
        assert!(a.feasible);
        let b = allocate(&plan_400g(1.6e9)).unwrap();
        assert_eq!(b.free_total(), 17.54e9);
        assert_eq!(b.free_per_side, 8.77e9);
        assert_eq!(b.slack, 3.17e9);
        assert!(b.feasible);
    }

    #[test]
    fn carriers_centred_and_symmetric() {
        let a = allocate(&plan_100g(0.8e9)).unwrap();
        assert_eq!(a.carrier_offset_low, -a.carrier_offset_high);
        assert_eq!(a.carrier_offset_high, 37.64e9 / 2.0 + 6.18e9 / 2.0);
        let (inner, outer) = a.high_extent();
        assert!(inner > 37.64e9 / 2.0 && outer < 25e9);
    }

    #[test]
    fn too_wide_is_infeasible_with_deficit() {
        let a = allocate(&plan_100g(2.4e9)).unwrap();
        assert!(!a.feasible);
        assert_eq!(a.span_per_arof, 6.4e9);
        assert!((a.slack + 0.22e9).abs() < 1.0);
    }

    #[test]
    fn closed_form_maximum() {
        assert!((plan_400g(1.0).max_feasible_bw() - 4.77e9).abs() < 1.0);
        assert!((plan_100g(1.0).max_feasible_bw() - 2.18e9).abs() < 1.0);
        let bws: Vec<f64> = (1..=19).map(|i| i as f64 * 0.2e9).collect();
        for base in [plan_100g(1e9), plan_400g(1e9)] {
            let t = sweep_feasibility(&base, &bws).unwrap();
            assert!(t.consistent);
            assert!(t.rows.iter().filter(|r| r.plan.arof_bw <= t.max_feasible_bw).all(|r| r.feasible));
        }
    }

    #[test]
    fn guard_shrinks_the_room() {
        let base = ChannelPlan { guard: 0.2e9, ..plan_100g(1.6e9) };
        let a = allocate(&base).unwrap();
        assert!(a.feasible);
        assert!((a.slack - (6.18e9 - 5.6e9 - 0.4e9)).abs() < 1.0);
        let a = allocate(&ChannelPlan { guard: 0.3e9, ..base }).unwrap();
        assert!(!a.feasible);
    }

    #[test]
    fn occupancy_ordering() {
        let a = allocate(&plan_100g(1.6e9)).unwrap();
        let b = allocate(&plan_400g(1.6e9)).unwrap();
        assert!(a.occupancy_ratio > b.occupancy_ratio);
        assert_eq!(a.occupancy_ratio, 1.6e9 / 50e9);
    }

    #[test]
    fn invalid_plans() {
        assert!(allocate(&ChannelPlan { coherent_occupied: 82.46e9, ..plan_100g(1e9) }).is_err());
        assert!(allocate(&ChannelPlan { if_freq: 0.5e9, ..plan_100g(1.6e9) }).is_err());
        assert!(allocate(&plan_100g(0.0)).is_err());
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn wider_never_becomes_feasible(bw in 0.05e9f64..2e9, extra in 0.0f64..1.9e9, guard in 0.0f64..0.5e9) {
                let a = allocate(&ChannelPlan { guard, ..plan_100g(bw) }).unwrap();
                let b = allocate(&ChannelPlan { guard, ..plan_100g(bw + extra) }).unwrap();
                prop_assert!(a.feasible || !b.feasible);
                prop_assert_eq!(a.carrier_offset_low, -a.carrier_offset_high);
            }
        }
    }
}
