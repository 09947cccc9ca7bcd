//! Independent reference solvers shared by the integration tests.
//!
//! The dispatch oracle enumerates every charge/discharge pattern of a short
//! horizon and solves the remaining linear program with a small dense
//! simplex, written here from scratch so it shares no code with the crate.

#![allow(dead_code)]

const EPS: f64 = 1e-9;

#[derive(Clone, Copy, PartialEq)]
pub enum Sense {
    Le,
    Ge,
    Eq,
}

/// min cᵀx subject to rows, x ≥ 0.
pub struct DenseLp {
    pub n: usize,
    pub cost: Vec<f64>,
    pub rows: Vec<(Vec<f64>, Sense, f64)>,
}

impl DenseLp {
    pub fn new(n: usize) -> Self {
        Self { n, cost: vec![0.0; n], rows: Vec::new() }
    }

    pub fn row(&mut self, terms: &[(usize, f64)], sense: Sense, rhs: f64) {
        let mut a = vec![0.0; self.n];
        for &(j, v) in terms {
            a[j] += v;
        }
        self.rows.push((a, sense, rhs));
    }

    /// Two-phase tableau simplex with Bland's rule. `None` when infeasible.
    pub fn solve(&self) -> Option<(f64, Vec<f64>)> {
        let m = self.rows.len();
        let n = self.n;
        let n_slack = self.rows.iter().filter(|r| r.1 != Sense::Eq).count();
        let width = n + n_slack + m + 1; // generous: one artificial slot per row
        let rhs_col = width - 1;
        let art0 = n + n_slack;
        let mut tab = vec![vec![0.0; width]; m + 1];
        let mut basis = vec![0usize; m];
        let mut is_art = vec![false; width];
        let mut slack = n;
        for (i, (a, sense, b)) in self.rows.iter().enumerate() {
            let mut a = a.clone();
            let mut b = *b;
            let mut sense = *sense;
            if b < 0.0 {
                a.iter_mut().for_each(|v| *v = -*v);
                b = -b;
                sense = match sense {
                    Sense::Le => Sense::Ge,
                    Sense::Ge => Sense::Le,
                    Sense::Eq => Sense::Eq,
                };
            }
            tab[i][..n].copy_from_slice(&a);
            tab[i][rhs_col] = b;
            match sense {
                Sense::Le => {
                    tab[i][slack] = 1.0;
                    basis[i] = slack;
                    slack += 1;
                }
                Sense::Ge => {
                    tab[i][slack] = -1.0;
                    slack += 1;
                    tab[i][art0 + i] = 1.0;
                    basis[i] = art0 + i;
                    is_art[art0 + i] = true;
                }
                Sense::Eq => {
                    tab[i][art0 + i] = 1.0;
                    basis[i] = art0 + i;
                    is_art[art0 + i] = true;
                }
            }
        }
        // phase 1
        let mut obj = vec![0.0; width];
        for j in 0..width - 1 {
            if is_art[j] {
                obj[j] = 1.0;
            }
        }
        for i in 0..m {
            if is_art[basis[i]] {
                for j in 0..width {
                    obj[j] -= tab[i][j];
                }
            }
        }
        tab[m] = obj;
        let allowed: Vec<bool> = (0..width - 1).map(|_| true).collect();
        run_simplex(&mut tab, &mut basis, &allowed)?;
        if -tab[m][rhs_col] > 1e-7 {
            return None;
        }
        // drive zero-level artificials out of the basis where possible
        for i in 0..m {
            if is_art[basis[i]] {
                if let Some(j) = (0..art0).find(|&j| tab[i][j].abs() > 1e-9) {
                    pivot(&mut tab, &mut basis, i, j);
                }
            }
        }

        // phase 2
        let mut obj = vec![0.0; width];
        obj[..n].copy_from_slice(&self.cost);
        for i in 0..m {
            let cb = if basis[i] < n { self.cost[basis[i]] } else { 0.0 };
            if cb != 0.0 {
                for j in 0..width {
                    obj[j] -= cb * tab[i][j];
                }
            }
        }
        tab[m] = obj;
        let allowed: Vec<bool> = (0..width - 1).map(|j| !is_art[j]).collect();
        run_simplex(&mut tab, &mut basis, &allowed)?;
        let mut x = vec![0.0; n];
        for i in 0..m {
            if basis[i] < n {
                x[basis[i]] = tab[i][rhs_col];
            }
        }
        let value = self.cost.iter().zip(&x).map(|(c, v)| c * v).sum();
        Some((value, x))
    }
}

fn pivot(tab: &mut [Vec<f64>], basis: &mut [usize], r: usize, c: usize) {
    let p = tab[r][c];
    tab[r].iter_mut().for_each(|v| *v /= p);
    let pivot_row = tab[r].clone();
    for (i, row) in tab.iter_mut().enumerate() {
        if i != r {
            let f = row[c];
            if f != 0.0 {
                for (v, pv) in row.iter_mut().zip(&pivot_row) {
                    *v -= f * pv;
                }
            }
        }
    }
    basis[r] = c;
}

fn run_simplex(tab: &mut [Vec<f64>], basis: &mut [usize], allowed: &[bool]) -> Option<()> {
    let m = basis.len();
    let rhs = tab[0].len() - 1;
    for _ in 0..100_000 {
        let Some(c) = (0..rhs).find(|&j| allowed[j] && tab[m][j] < -EPS) else {
            return Some(());
        };
        let mut best: Option<(usize, f64)> = None;
        for i in 0..m {
            if tab[i][c] > EPS {
                let ratio = tab[i][rhs] / tab[i][c];
                let better = match best {
                    None => true,
                    Some((bi, br)) => {
                        ratio < br - 1e-12 || (ratio <= br + 1e-12 && basis[i] < basis[bi])
                    }
                };
                if better {
                    best = Some((i, ratio));
                }
            }
        }
        let (r, _) = best?; // unbounded
        pivot(tab, basis, r, c);
    }
    None
}

/// Optimal dispatch found by exhaustive enumeration.
#[derive(Debug, Clone)]
pub struct OracleDispatch {
    pub c_renew: f64,
    pub c_base: f64,
    pub j_pct: f64,
    pub grid_mwh: f64,
    pub grid_to_load: Vec<f64>,
    pub solar_to_load: Vec<f64>,
    pub battery_to_load: Vec<f64>,
    pub discharge_mwh: f64,
}

pub struct OracleBattery {
    pub rated: f64,
    pub duration: f64,
    pub mu: f64,
    pub soc_min: f64,
    pub soc_max: f64,
    pub soc_init: f64,
}

impl OracleBattery {
    pub fn standard(rated: f64) -> Self {
        Self { rated, duration: 4.0, mu: 0.85, soc_min: 0.1, soc_max: 0.9, soc_init: 0.5 }
    }
}

/// Variables per hour: p_g^l, p_s^l, p_b^l, p_s^b, p_g^b, curtail, p_g, p^b, E.
const V: usize = 9;

fn pattern_lp(load: &[f64], solar: &[f64], carbon: &[f64], b: &OracleBattery, pattern: u32) -> DenseLp {
    let t_len = load.len();
    let mut lp = DenseLp::new(V * t_len);
    let p_max = b.rated / b.duration;
    let e0 = b.soc_init * b.rated;
    for t in 0..t_len {
        let k = |i: usize| V * t + i;
        let (gl, sl, bl, sb, gb, cu, g, pb, e) = (k(0), k(1), k(2), k(3), k(4), k(5), k(6), k(7), k(8));
        if load[t] > 0.0 {
            lp.cost[g] = carbon[t] / load[t];
        }
        lp.row(&[(sl, 1.0), (sb, 1.0), (cu, 1.0)], Sense::Eq, solar[t]);
        lp.row(&[(pb, 1.0), (sb, -1.0), (gb, -1.0)], Sense::Eq, 0.0);
        lp.row(&[(g, 1.0), (gb, -1.0), (gl, -1.0)], Sense::Eq, 0.0);
        lp.row(&[(sl, 1.0), (bl, 1.0), (gl, 1.0)], Sense::Eq, load[t]);
        if t == 0 {
            lp.row(&[(e, 1.0), (pb, -b.mu), (bl, 1.0)], Sense::Eq, e0);
        } else {
            lp.row(&[(e, 1.0), (V * (t - 1) + 8, -1.0), (pb, -b.mu), (bl, 1.0)], Sense::Eq, 0.0);
        }
        lp.row(&[(e, 1.0)], Sense::Ge, b.soc_min * b.rated);
        lp.row(&[(e, 1.0)], Sense::Le, b.soc_max * b.rated);
        let discharging = pattern >> t & 1 == 1;
        lp.row(&[(bl, 1.0)], Sense::Le, if discharging { p_max } else { 0.0 });
        lp.row(&[(pb, 1.0)], Sense::Le, if discharging { 0.0 } else { p_max });
        if load[t] <= 0.0 {
            lp.row(&[(g, 1.0)], Sense::Eq, 0.0);
        }
    }
    lp.row(&[(V * (t_len - 1) + 8, 1.0)], Sense::Eq, e0);
    lp
}

/// Exhaustive oracle over all 2^T indicator patterns (T ≤ 10).
pub fn oracle_dispatch(load: &[f64], solar: &[f64], carbon: &[f64], b: &OracleBattery) -> OracleDispatch {
    let t_len = load.len();
    assert!(t_len <= 10, "oracle is exponential in the horizon");
    let mut best: Option<(f64, Vec<f64>)> = None;
    for pattern in 0..(1u32 << t_len) {
        if let Some((v, x)) = pattern_lp(load, solar, carbon, b, pattern).solve() {
            if best.as_ref().is_none_or(|(bv, _)| v < *bv - 1e-12) {
                best = Some((v, x));
            }
        }
    }
    let (c_renew, x) = best.expect("grid makes every instance feasible");
    let c_base: f64 = carbon.iter().sum();
    let col = |i: usize| (0..t_len).map(|t| x[V * t + i]).collect::<Vec<f64>>();
    let grid = col(6);
    let battery_to_load = col(2);
    OracleDispatch {
        c_renew,
        c_base,
        j_pct: if c_base > 0.0 { 100.0 * (1.0 - c_renew / c_base) } else { 0.0 },
        grid_mwh: grid.iter().sum(),
        grid_to_load: col(0),
        solar_to_load: col(1),
        discharge_mwh: battery_to_load.iter().sum(),
        battery_to_load,
    }
}

/// The four-hour instance worked by hand: charge from surplus solar, serve
/// the evening load from the battery.
pub fn toy_instance() -> ([f64; 4], [f64; 4], [f64; 4], f64) {
    ([0.0, 10.0, 0.0, 10.0], [10.0, 0.0, 10.0, 0.0], [0.0, 5.0, 0.0, 5.0], 40.0)
}

pub mod golden;
pub mod spreadsheet;
