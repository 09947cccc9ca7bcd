//! Linear-programming formulation of the dispatch and the HiGHS interface.
//!
//! The per-hour balances let five quantities per hour determine everything
//! else, so the model only carries those columns:
//!
//! | column | meaning                       |
//! |--------|-------------------------------|
//! | `sl`   | solar → load                  |
//! | `sb`   | solar → battery               |
//! | `gb`   | grid → battery                |
//! | `bl`   | battery → load                |
//! | `e`    | stored energy at end of hour  |
//!
//! Grid → load is `load − sl − bl` and curtailment is `solar − sl − sb`; both
//! are kept non-negative by row constraints. The charge/discharge indicator is
//! relaxed to `sb + gb + bl ≤ p_max`, the exact projection of the two
//! indicator constraints when the indicator ranges over `[0, 1]`.

use std::ffi::CStr;

use highs::{Col, HighsModelStatus, RowProblem, Sense};

use super::{DispatchInstance, SolveOptions};
use crate::dispatch::result::SolveStatus;
use crate::error::{Error, Result};

/// Tie-break penalty per MWh of grid draw and of battery charging, relative
/// to the largest emission weight.
pub(crate) const TIE_BREAK: f64 = 1e-6;

/// Values below this magnitude are snapped to zero after a solve.
const SNAP: f64 = 1e-9;

/// Raw decision values, one entry per hour.
#[derive(Debug, Clone, PartialEq)]
pub(crate) struct HourVars {
    pub solar_to_load: Vec<f64>,
    pub solar_to_battery: Vec<f64>,
    pub grid_to_battery: Vec<f64>,
    pub battery_to_load: Vec<f64>,
    pub energy: Vec<f64>,
}

impl HourVars {
    fn zeros(horizon: usize) -> Self {
        Self {
            solar_to_load: vec![0.0; horizon],
            solar_to_battery: vec![0.0; horizon],
            grid_to_battery: vec![0.0; horizon],
            battery_to_load: vec![0.0; horizon],
            energy: vec![0.0; horizon],
        }
    }

    /// Hour with the largest simultaneous charge and discharge, if above `tol`.
    pub fn most_violating_hour(&self, tol: f64) -> Option<(usize, f64)> {
        let mut worst: Option<(usize, f64)> = None;
        for t in 0..self.energy.len() {
            let charge = self.solar_to_battery[t] + self.grid_to_battery[t];
            let overlap = charge.min(self.battery_to_load[t]);
            if overlap > tol && worst.is_none_or(|(_, w)| overlap > w) {
                worst = Some((t, overlap));
            }
        }
        worst
    }

    /// Turns a relaxed point into one that honours the indicator in every hour.
    ///
    /// Each hour keeps its net effect on stored energy: net-discharging hours
    /// drop all charging, the rest drop all discharging, so the energy
    /// trajectory and therefore feasibility are unchanged.
    pub fn repaired(&self, mu: f64) -> (Self, Vec<Option<bool>>) {
        let mut out = self.clone();
        let mut fixings = Vec::with_capacity(self.energy.len());
        for t in 0..self.energy.len() {
            let sb = self.solar_to_battery[t];
            let gb = self.grid_to_battery[t];
            let bl = self.battery_to_load[t];
            let charge = sb + gb;
            let discharging = bl > mu * charge;
            if discharging {
                out.battery_to_load[t] = bl - mu * charge;
                out.solar_to_battery[t] = 0.0;
                out.grid_to_battery[t] = 0.0;
            } else if charge > 0.0 {
                // shrink grid charging first, it is the costlier source
                let mut cut = bl / mu;
                let from_grid = cut.min(gb);
                out.grid_to_battery[t] = gb - from_grid;
                cut -= from_grid;
                out.solar_to_battery[t] = (sb - cut).max(0.0);
                out.battery_to_load[t] = 0.0;
            }
            fixings.push(Some(discharging));
        }
        (out, fixings)
    }
}

/// Result of the search, before metrics are derived.
#[derive(Debug, Clone)]
pub(crate) struct Outcome {
    pub vars: HourVars,
    pub status: SolveStatus,
    pub nodes: usize,
    pub lp_solves: usize,
}

pub(crate) enum LpResult {
    Solved { vars: HourVars, objective: f64 },
    Infeasible,
    TimedOut,
}

/// Closed-form optimum when there is no battery: solar first, grid for the rest.
pub(crate) fn solve_without_battery(inst: &DispatchInstance) -> Outcome {
    let horizon = inst.horizon();
    let mut vars = HourVars::zeros(horizon);
    for t in 0..horizon {
        if inst.has_load(t) {
            vars.solar_to_load[t] = inst.solar().values()[t].min(inst.load().values()[t]);
        }
    }
    Outcome {
        vars,
        status: SolveStatus::ProvenOptimal,
        nodes: 0,
        lp_solves: 0,
    }
}

struct ColumnBounds {
    sl: f64,
    sb: f64,
    gb: f64,
    bl: f64,
}

pub(crate) struct DispatchLp<'a> {
    inst: &'a DispatchInstance,
    weights: Vec<f64>,
    constant: f64,
    p_max: f64,
    e_min: f64,
    e_max: f64,
    e_init: f64,
    mu: f64,
}

impl<'a> DispatchLp<'a> {
    pub fn new(inst: &'a DispatchInstance) -> Self {
        let load = inst.load().values();
        let carbon = inst.carbon().values();
        let raw: Vec<f64> = (0..inst.horizon())
            .map(|t| {
                if inst.has_load(t) {
                    carbon[t] / load[t]
                } else {
                    0.0
                }
            })
            .collect();
        let scale = raw.iter().copied().fold(0.0, f64::max);
        let weights: Vec<f64> = if scale > 0.0 {
            raw.iter().map(|w| w / scale).collect()
        } else {
            raw
        };
        let constant = (0..inst.horizon())
            .filter(|&t| inst.has_load(t))
            .map(|t| (weights[t] + TIE_BREAK) * load[t])
            .sum();
        let b = inst.battery();
        Self {
            inst,
            weights,
            constant,
            p_max: b.max_power_mw(),
            e_min: b.min_energy_mwh(),
            e_max: b.max_energy_mwh(),
            e_init: b.initial_energy_mwh(),
            mu: b.roundtrip_efficiency,
        }
    }

    pub fn horizon(&self) -> usize {
        self.inst.horizon()
    }

    pub fn efficiency(&self) -> f64 {
        self.mu
    }

    fn column_bounds(&self, t: usize, fix: Option<bool>) -> ColumnBounds {
        let load = self.inst.load().values()[t];
        let solar = self.inst.solar().values()[t];
        let has_load = self.inst.has_load(t);
        let mut bounds = ColumnBounds {
            sl: if has_load { solar.min(load) } else { 0.0 },
            sb: solar.min(self.p_max),
            gb: if has_load { self.p_max } else { 0.0 },
            bl: if has_load { self.p_max.min(load) } else { 0.0 },
        };
        match fix {
            Some(true) => {
                bounds.sb = 0.0;
                bounds.gb = 0.0;
            }
            Some(false) => bounds.bl = 0.0,
            None => {}
        }
        bounds
    }

    /// Builds the model. With `mip`, indicator columns and the two indicator
    /// rows per hour replace the relaxed power row.
    fn build(&self, fixings: &[Option<bool>], mip: bool) -> (RowProblem, Vec<[Col; 3]>) {
        let horizon = self.horizon();
        let load = self.inst.load().values();
        let solar = self.inst.solar().values();
        let mut pb = RowProblem::default();
        let mut switchable = Vec::with_capacity(horizon);
        let mut prev_e = None;
        for t in 0..horizon {
            let w = self.weights[t];
            let fix = fixings.get(t).copied().flatten();
            let bnd = self.column_bounds(t, fix);
            let sl = pb.add_column(-(w + TIE_BREAK), 0.0..=bnd.sl);
            let sb = pb.add_column(TIE_BREAK, 0.0..=bnd.sb);
            let gb = pb.add_column(w + 2.0 * TIE_BREAK, 0.0..=bnd.gb);
            let bl = pb.add_column(-(w + TIE_BREAK), 0.0..=bnd.bl);
            let e = if t + 1 == horizon {
                pb.add_column(0.0, self.e_init..=self.e_init)
            } else {
                pb.add_column(0.0, self.e_min..=self.e_max)
            };

            pb.add_row(..=solar[t], [(sl, 1.0), (sb, 1.0)]);
            pb.add_row(..=load[t], [(sl, 1.0), (bl, 1.0)]);
            if mip {
                let (lo, hi) = match fix {
                    Some(true) => (1.0, 1.0),
                    Some(false) => (0.0, 0.0),
                    None => (0.0, 1.0),
                };
                let delta = pb.add_integer_column(0.0, lo..=hi);
                pb.add_row(..=0.0, [(bl, 1.0), (delta, -self.p_max)]);
                pb.add_row(..=self.p_max, [(sb, 1.0), (gb, 1.0), (delta, self.p_max)]);
            } else {
                pb.add_row(..=self.p_max, [(sb, 1.0), (gb, 1.0), (bl, 1.0)]);
            }
            let balance = [(e, 1.0), (sb, -self.mu), (gb, -self.mu), (bl, 1.0)];
            match prev_e {
                None => pb.add_row(self.e_init..=self.e_init, balance),
                Some(p) => pb.add_row(
                    0.0..=0.0,
                    balance.into_iter().chain(std::iter::once((p, -1.0))),
                ),
            }
            prev_e = Some(e);
            switchable.push([sb, gb, bl]);
        }
        (pb, switchable)
    }

    fn configure(model: &mut highs::Model, time_limit_s: f64, feasibility_tol: f64, mip: bool) {
        model.make_quiet();
        model.set_option("threads", 1);
        model.set_option("time_limit", time_limit_s.max(0.01));
        model.set_option(
            "primal_feasibility_tolerance",
            (feasibility_tol * 1e-3).clamp(1e-10, 1e-7),
        );
        model.set_option("dual_feasibility_tolerance", 1e-9);
        if !mip {
            model.set_option("solver", c"simplex" as &CStr);
        }
    }

    fn extract(&self, columns: &[f64], stride: usize, fixings: &[Option<bool>]) -> HourVars {
        let horizon = self.horizon();
        let mut vars = HourVars::zeros(horizon);
        for t in 0..horizon {
            let base = t * stride;
            let bnd = self.column_bounds(t, fixings.get(t).copied().flatten());
            let snap = |x: f64, hi: f64| {
                let x = x.clamp(0.0, hi);
                if x < SNAP {
                    0.0
                } else {
                    x
                }
            };
            vars.solar_to_load[t] = snap(columns[base], bnd.sl);
            vars.solar_to_battery[t] = snap(columns[base + 1], bnd.sb);
            vars.grid_to_battery[t] = snap(columns[base + 2], bnd.gb);
            vars.battery_to_load[t] = snap(columns[base + 3], bnd.bl);
            vars.energy[t] = columns[base + 4].clamp(self.e_min, self.e_max);
        }
        vars
    }

    /// Opens a warm-started session for solving relaxations.
    pub fn session(&self) -> LpSession<'_, 'a> {
        let horizon = self.horizon();
        let (pb, switchable) = self.build(&[], false);
        LpSession {
            lp: self,
            model: Some(pb.optimise(Sense::Minimise)),
            switchable,
            applied: vec![None; horizon],
        }
    }

    /// Full objective (including the constant term) of a candidate point.
    pub fn objective_of(&self, vars: &HourVars) -> f64 {
        let load = self.inst.load().values();
        (0..self.horizon())
            .map(|t| {
                let w = self.weights[t];
                let grid_to_load = if self.inst.has_load(t) {
                    load[t] - vars.solar_to_load[t] - vars.battery_to_load[t]
                } else {
                    0.0
                };
                let grid = grid_to_load + vars.grid_to_battery[t];
                let charge = vars.solar_to_battery[t] + vars.grid_to_battery[t];
                w * grid + TIE_BREAK * (grid + charge)
            })
            .sum()
    }

    /// Solves the MILP directly with the HiGHS branch-and-cut.
    pub fn solve_mip(&self, options: &SolveOptions) -> Result<Outcome> {
        let mut model = self.build(&[], true).0.optimise(Sense::Minimise);
        Self::configure(&mut model, options.time_limit_s, options.feasibility_tol, true);
        model.set_option("mip_rel_gap", options.tolerance);
        model.set_option("mip_feasibility_tolerance", options.integrality_tol);
        let solved = model
            .try_solve()
            .map_err(|s| Error::Solver(format!("HiGHS returned {s:?}")))?;
        let status = match solved.status() {
            HighsModelStatus::Optimal => SolveStatus::ProvenOptimal,
            HighsModelStatus::ReachedTimeLimit => SolveStatus::Gap {
                relative_gap: solved.mip_gap(),
            },
            HighsModelStatus::Infeasible => {
                return Err(Error::Solver(
                    "internal error: dispatch reported infeasible".into(),
                ))
            }
            other => return Err(Error::Solver(format!("MILP ended with {other:?}"))),
        };
        let columns = solved.get_solution().columns().to_vec();
        if columns.len() < self.horizon() * 6 {
            return Err(Error::Solver("MILP time limit reached without a solution".into()));
        }
        let vars = self.extract(&columns, 6, &[]);
        Ok(Outcome {
            vars,
            status,
            nodes: 0,
            lp_solves: 1,
        })
    }
}

/// A relaxation kept alive between solves so each node starts from the
/// previous basis. Only the bounds of the switchable columns change.
pub(crate) struct LpSession<'l, 'a> {
    lp: &'l DispatchLp<'a>,
    model: Option<highs::Model>,
    switchable: Vec<[Col; 3]>,
    applied: Vec<Option<bool>>,
}

impl LpSession<'_, '_> {
    pub fn solve(
        &mut self,
        fixings: &[Option<bool>],
        time_limit_s: f64,
        feasibility_tol: f64,
    ) -> Result<LpResult> {
        let mut model = self
            .model
            .take()
            .ok_or_else(|| Error::Solver("LP session lost after an earlier failure".into()))?;
        for t in 0..self.lp.horizon() {
            let fix = fixings.get(t).copied().flatten();
            if fix == self.applied[t] {
                continue;
            }
            let bnd = self.lp.column_bounds(t, fix);
            let [sb, gb, bl] = self.switchable[t];
            model.change_column_bounds(sb, 0.0..=bnd.sb);
            model.change_column_bounds(gb, 0.0..=bnd.gb);
            model.change_column_bounds(bl, 0.0..=bnd.bl);
            self.applied[t] = fix;
        }
        DispatchLp::configure(&mut model, time_limit_s, feasibility_tol, false);
        let solved = model
            .try_solve()
            .map_err(|s| Error::Solver(format!("HiGHS returned {s:?}")))?;
        let result = match solved.status() {
            HighsModelStatus::Optimal => {
                let objective = solved.objective_value() + self.lp.constant;
                let vars = self
                    .lp
                    .extract(solved.get_solution().columns(), 5, &self.applied);
                LpResult::Solved { vars, objective }
            }
            HighsModelStatus::Infeasible | HighsModelStatus::UnboundedOrInfeasible => {
                LpResult::Infeasible
            }
            HighsModelStatus::ReachedTimeLimit => LpResult::TimedOut,
            other => return Err(Error::Solver(format!("LP relaxation ended with {other:?}"))),
        };
        self.model = Some(solved.into());
        Ok(result)
    }
}
