//! Line-by-line battery cost sheet, kept apart from the crate's cost stack.

pub struct SheetChemistry {
    pub name: &'static str,
    pub usd_per_kwh: f64,
    pub cycles: f64,
    pub cell_volts: f64,
}

pub const SHEET: [SheetChemistry; 3] = [
    SheetChemistry { name: "NMC811", usd_per_kwh: 150.98, cycles: 2000.0, cell_volts: 3.68 },
    SheetChemistry { name: "NCA", usd_per_kwh: 194.03, cycles: 1400.0, cell_volts: 3.67 },
    SheetChemistry { name: "LFP", usd_per_kwh: 216.17, cycles: 6000.0, cell_volts: 3.31 },
];

pub fn chem(name: &str) -> &'static SheetChemistry {
    SHEET.iter().find(|c| c.name == name).unwrap()
}

/// C&C $/kW: straight lines through (1, 3.9), (10, 7.8), (100, 10.374).
fn cnc(mw: f64) -> f64 {
    let mw = mw.clamp(1.0, 100.0);
    if mw <= 10.0 {
        3.9 + (7.8 - 3.9) / 9.0 * (mw - 1.0)
    } else {
        7.8 + (10.374 - 7.8) / 90.0 * (mw - 10.0)
    }
}

/// Rows of the sheet as (label, running total in $).
pub fn cost_rows(mwh: f64, c: &SheetChemistry, duration_h: f64) -> Vec<(&'static str, f64)> {
    let mw = mwh / duration_h;
    let pack = mwh * 1000.0 * c.usd_per_kwh;
    let mut rows = vec![("pack", pack)];
    let mut run = pack + 0.23 * pack;
    rows.push(("sbos", run));
    run += 45.0 * mw * 1000.0;
    rows.push(("pcs", run));
    run += cnc(mw) * mw * 1000.0;
    rows.push(("cnc", run));
    for (label, pct) in [("integration", 5.0), ("epc", 20.0), ("projdev", 20.0), ("grid", 1.5)] {
        run *= 1.0 + pct / 100.0;
        rows.push((label, run));
    }
    rows
}

pub fn total_cost(mwh: f64, c: &SheetChemistry) -> f64 {
    cost_rows(mwh, c, 4.0).last().unwrap().1
}

pub fn lcos(mwh: f64, c: &SheetChemistry) -> f64 {
    total_cost(mwh, c) / (c.cycles * mwh)
}

/// Mean LCOS over 10, 20, ..., 100 MWh.
pub fn mean_lcos(c: &SheetChemistry) -> f64 {
    (1..=10).map(|k| lcos(10.0 * k as f64, c)).sum::<f64>() / 10.0
}
