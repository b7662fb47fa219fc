use std::io::{self, Write};

use serde::Serialize;

use crate::model::{AggregateStrategy, StrategyProfile};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Diagnostics {
    #[serde(rename = "Phi")]
    pub phi: f64,
    #[serde(rename = "Phi0")]
    pub phi0: f64,
    #[serde(rename = "R")]
    pub r: f64,
    #[serde(rename = "V")]
    pub v: f64,
    pub kkt_residual: f64,
}

/// Run summary. Increases are measured over every integrator step, not only
/// the recorded ones; they are `-inf` when no step was taken.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrajectorySummary {
    pub converged: bool,
    pub steps: usize,
    pub final_time: f64,
    pub final_v: f64,
    pub min_v: f64,
    #[serde(serialize_with = "finite_or_null")]
    pub max_v_increase: f64,
    #[serde(serialize_with = "finite_or_null")]
    pub max_r_increase: f64,
    /// No step raised `V` by more than the integrator slack.
    pub v_monotone: bool,
    pub r_monotone: bool,
    pub fell_back_to_euler: bool,
    pub samples: usize,
}

fn finite_or_null<S: serde::Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
    if v.is_finite() {
        s.serialize_f64(*v)
    } else {
        s.serialize_none()
    }
}

#[derive(Debug, Clone)]
pub struct Trajectory {
    pub s_star: AggregateStrategy,
    pub times: Vec<f64>,
    pub profiles: Vec<StrategyProfile>,
    pub diagnostics: Vec<Diagnostics>,
    pub summary: TrajectorySummary,
}

impl Trajectory {
    pub(crate) fn new(s_star: AggregateStrategy) -> Self {
        Trajectory {
            s_star,
            times: Vec::new(),
            profiles: Vec::new(),
            diagnostics: Vec::new(),
            summary: TrajectorySummary {
                converged: false,
                steps: 0,
                final_time: 0.0,
                final_v: f64::NAN,
                min_v: f64::NAN,
                max_v_increase: f64::NEG_INFINITY,
                max_r_increase: f64::NEG_INFINITY,
                v_monotone: true,
                r_monotone: true,
                fell_back_to_euler: false,
                samples: 0,
            },
        }
    }

    pub(crate) fn record(&mut self, t: f64, profile: &StrategyProfile, d: Diagnostics) {
        self.times.push(t);
        self.profiles.push(profile.clone());
        self.diagnostics.push(d);
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn final_profile(&self) -> Option<&StrategyProfile> {
        self.profiles.last()
    }
}

/// Writes `t,s_1_1,...,s_n_m,Phi,Phi0,R,V,kkt_residual` rows with 17
/// significant digits.
pub fn write_csv<W: Write>(trajectory: &Trajectory, mut out: W) -> io::Result<()> {
    let Some(first) = trajectory.profiles.first() else {
        return writeln!(out, "t,Phi,Phi0,R,V,kkt_residual");
    };
    let mut header = vec!["t".to_string()];
    for i in 1..=first.players() {
        for x in 1..=first.markets() {
            header.push(format!("s_{i}_{x}"));
        }
    }
    header.extend(["Phi", "Phi0", "R", "V", "kkt_residual"].map(String::from));
    writeln!(out, "{}", header.join(","))?;
    for ((t, profile), d) in trajectory
        .times
        .iter()
        .zip(&trajectory.profiles)
        .zip(&trajectory.diagnostics)
    {
        let fields: Vec<String> = std::iter::once(*t)
            .chain(profile.entries().iter().copied())
            .chain([d.phi, d.phi0, d.r, d.v, d.kkt_residual])
            .map(|v| format!("{v:.16e}"))
            .collect();
        writeln!(out, "{}", fields.join(","))?;
    }
    Ok(())
}
