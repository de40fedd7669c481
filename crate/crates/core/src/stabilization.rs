//! Stabilization diagrams: sweep the model order, classify pole stability
//! across consecutive orders, and consolidate chains of fully stable poles
//! into a physical mode list.
//!
//! Physical modes reappear at nearly the same frequency, damping, and shape
//! as the order grows, while numerical poles wander. The scan links each
//! new pole to the best-matching chain from the previous order (frequency
//! window, damping window, shape MAC) and keeps chains long enough to be
//! trusted. One cached factorization serves every order, so the sweep costs
//! little more than a single identification.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::frf::FrequencyResponseSet;
use crate::loewner::{
    build_loewner_pencil, partition_data, real_transform, IlfEngine, TransformMode,
    PINV_REL_TOL,
};
use crate::modal::{extract_modes, mac, Mode, ModeSet};

/// Thresholds deciding when a pole at one order confirms a pole at the
/// previous order.
#[derive(Debug, Clone, PartialEq)]
pub struct StabilityCriteria {
    /// Frequency window, percent relative to the earlier pole.
    pub freq_tol_pct: f64,
    /// Damping window, percent relative to the earlier pole.
    pub damp_tol_pct: f64,
    /// Minimum modal assurance criterion between the two shapes.
    pub mac_min: f64,
    /// Minimum chain length (number of member orders) for a chain to count
    /// as a consolidated mode.
    pub min_consecutive: usize,
}

impl Default for StabilityCriteria {
    fn default() -> Self {
        StabilityCriteria {
            freq_tol_pct: 1.0,
            damp_tol_pct: 5.0,
            mac_min: 0.98,
            min_consecutive: 3,
        }
    }
}

impl StabilityCriteria {
    pub fn validate(&self) -> Result<()> {
        if !(self.freq_tol_pct > 0.0) || !(self.damp_tol_pct > 0.0) {
            return Err(Error::Config(format!(
                "stability tolerances must be positive, got {}% / {}%",
                self.freq_tol_pct, self.damp_tol_pct
            )));
        }
        if !(self.mac_min > 0.0 && self.mac_min <= 1.0) {
            return Err(Error::Config(format!(
                "mac_min must lie in (0, 1], got {}",
                self.mac_min
            )));
        }
        if self.min_consecutive < 2 {
            return Err(Error::Config(format!(
                "min_consecutive must be at least 2, got {}",
                self.min_consecutive
            )));
        }
        Ok(())
    }
}

/// Stability classification of one pole against the previous order.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StabilityFlag {
    /// No pole at the previous order within the frequency window.
    New,
    /// Frequency confirmed, but damping or shape changed too much.
    FrequencyStable,
    /// Frequency, damping, and shape all confirmed.
    FullyStable,
}

impl StabilityFlag {
    pub fn code(self) -> char {
        match self {
            StabilityFlag::New => 'n',
            StabilityFlag::FrequencyStable => 'f',
            StabilityFlag::FullyStable => 's',
        }
    }
}

/// Flag for one pole plus the index of the previous-order pole that
/// certified it (within that order's mode list).
#[derive(Debug, Clone, Copy)]
pub struct PoleAssessment {
    pub flag: StabilityFlag,
    pub predecessor: Option<usize>,
}

/// A chain representative promoted to a physical mode.
#[derive(Debug, Clone)]
pub struct ConsolidatedMode {
    /// Median-frequency member of the chain.
    pub mode: Mode,
    /// How many orders the chain spans.
    pub chain_length: usize,
    pub first_order: usize,
    pub last_order: usize,
}

/// Everything the order sweep produced.
#[derive(Debug, Clone)]
pub struct StabilizationDiagram {
    /// Scanned orders, ascending.
    pub orders: Vec<usize>,
    /// In-band modes per order, parallel to `orders`.
    pub per_order: Vec<ModeSet>,
    /// One assessment per pole, parallel to `per_order`.
    pub flags: Vec<Vec<PoleAssessment>>,
    /// Chains promoted to modes, ascending in frequency.
    pub consolidated: Vec<ConsolidatedMode>,
    /// Band the per-order extraction used.
    pub band_hz: (f64, f64),
    /// Non-fatal adjustments made during the scan (e.g. order cap).
    pub warnings: Vec<String>,
}

impl StabilizationDiagram {
    /// Total pole count across all orders (CSV row count).
    pub fn n_poles(&self) -> usize {
        self.per_order.iter().map(|m| m.len()).sum()
    }

    /// The consolidated modes as a plain mode set.
    pub fn consolidated_mode_set(&self) -> ModeSet {
        ModeSet::new(
            self.consolidated.iter().map(|c| c.mode.clone()).collect(),
            0,
            "stabilization",
        )
    }
}

/// Expands `(k_min, k_max, step)` into the concrete order list.
fn expand_orders(k_range: (usize, usize, usize)) -> Result<Vec<usize>> {
    let (k_min, k_max, step) = k_range;
    if k_min < 2 || k_min % 2 != 0 {
        return Err(Error::Config(format!(
            "minimum order must be an even number >= 2, got {k_min}"
        )));
    }
    if step == 0 || step % 2 != 0 {
        return Err(Error::Config(format!(
            "order step must be a positive even number, got {step}"
        )));
    }
    if k_max < k_min {
        return Err(Error::Config(format!(
            "order range [{k_min}, {k_max}] is empty"
        )));
    }
    Ok((k_min..=k_max).step_by(step).collect())
}

/// Full sweep from measured data: one pencil build, then per-order
/// realizations, stability flags, and chain consolidation.
pub fn stabilization_scan(
    frf: &FrequencyResponseSet,
    k_range: (usize, usize, usize),
    criteria: &StabilityCriteria,
    seed: u64,
) -> Result<StabilizationDiagram> {
    criteria.validate()?;
    let mut orders = expand_orders(k_range)?;
    let mut warnings = Vec::new();

    let data = partition_data(frf, seed)?;
    let pencil = build_loewner_pencil(&data)?;
    let real = real_transform(&pencil, &data, TransformMode::Vectorized)?;
    let (rows, cols) = real.ll.dim();
    let cap = rows.min(cols);
    if *orders.last().unwrap() > cap {
        warnings.push(format!(
            "order range capped at {cap} (pencil is {rows}x{cols})"
        ));
        orders.retain(|&k| k <= cap);
        if orders.is_empty() {
            return Err(Error::Computation(format!(
                "no feasible orders: pencil supports at most {cap}"
            )));
        }
    }
    let k_max = *orders.last().unwrap();
    let engine = IlfEngine::from_pencil(&real, k_max, PINV_REL_TOL)?;
    let band = (frf.freqs_hz[0], frf.freqs_hz[frf.freqs_hz.len() - 1]);

    let mut diagram = scan_with_engine(&engine, band, &orders, criteria)?;
    diagram.warnings = warnings;
    Ok(diagram)
}

/// Sweep an already-built engine. Per-order realizations run in parallel;
/// linking and consolidation are sequential in ascending order, so the
/// result does not depend on scheduling.
pub fn scan_with_engine(
    engine: &IlfEngine,
    band_hz: (f64, f64),
    orders: &[usize],
    criteria: &StabilityCriteria,
) -> Result<StabilizationDiagram> {
    criteria.validate()?;
    if orders.is_empty() {
        return Err(Error::Config("no orders to scan".into()));
    }
    let per_order: Vec<ModeSet> = orders
        .par_iter()
        .map(|&k| {
            let real = engine.realize(k)?;
            extract_modes(&real, band_hz)
        })
        .collect::<Result<Vec<_>>>()?;

    let flags = assess_flags(&per_order, criteria)?;
    let consolidated = consolidate(&per_order, orders, criteria)?;

    Ok(StabilizationDiagram {
        orders: orders.to_vec(),
        per_order,
        flags,
        consolidated,
        band_hz,
        warnings: Vec::new(),
    })
}

/// Classifies each pole against the previous order's poles.
fn assess_flags(
    per_order: &[ModeSet],
    criteria: &StabilityCriteria,
) -> Result<Vec<Vec<PoleAssessment>>> {
    let mut flags = Vec::with_capacity(per_order.len());
    for (i, set) in per_order.iter().enumerate() {
        let mut order_flags = Vec::with_capacity(set.len());
        for mode in &set.modes {
            if i == 0 {
                order_flags.push(PoleAssessment {
                    flag: StabilityFlag::New,
                    predecessor: None,
                });
                continue;
            }
            let prev = &per_order[i - 1];
            let mut nearest: Option<(usize, f64)> = None;
            let mut best_full: Option<(usize, f64)> = None;
            for (j, p) in prev.modes.iter().enumerate() {
                let df = (mode.natural_frequency_hz - p.natural_frequency_hz).abs()
                    / p.natural_frequency_hz
                    * 100.0;
                if df > criteria.freq_tol_pct {
                    continue;
                }
                if nearest.map_or(true, |(_, d)| df < d) {
                    nearest = Some((j, df));
                }
                let dz = (mode.damping_ratio - p.damping_ratio).abs()
                    / p.damping_ratio.max(1e-12)
                    * 100.0;
                if dz > criteria.damp_tol_pct {
                    continue;
                }
                let m = mac(&mode.shape, &p.shape)?;
                if m < criteria.mac_min {
                    continue;
                }
                if best_full.map_or(true, |(_, bm)| m > bm) {
                    best_full = Some((j, m));
                }
            }
            let assessment = match (best_full, nearest) {
                (Some((j, _)), _) => PoleAssessment {
                    flag: StabilityFlag::FullyStable,
                    predecessor: Some(j),
                },
                (None, Some((j, _))) => PoleAssessment {
                    flag: StabilityFlag::FrequencyStable,
                    predecessor: Some(j),
                },
                (None, None) => PoleAssessment {
                    flag: StabilityFlag::New,
                    predecessor: None,
                },
            };
            order_flags.push(assessment);
        }
        flags.push(order_flags);
    }
    Ok(flags)
}

struct Chain {
    members: Vec<Mode>,
    orders: Vec<usize>,
    last_order: usize,
}

/// Links poles into chains across consecutive scanned orders and promotes
/// long chains to consolidated modes.
fn consolidate(
    per_order: &[ModeSet],
    orders: &[usize],
    criteria: &StabilityCriteria,
) -> Result<Vec<ConsolidatedMode>> {
    let mut chains: Vec<Chain> = Vec::new();
    let mut prev_order: Option<usize> = None;
    for (set, &k) in per_order.iter().zip(orders) {
        let mut linked = vec![false; set.len()];
        if let Some(pk) = prev_order {
            for chain in chains.iter_mut() {
                if chain.last_order != pk {
                    continue;
                }
                let last = chain.members.last().expect("chains are never empty");
                let mut best: Option<(usize, f64)> = None;
                for (j, mode) in set.modes.iter().enumerate() {
                    if linked[j] {
                        continue;
                    }
                    let df = (mode.natural_frequency_hz - last.natural_frequency_hz).abs()
                        / last.natural_frequency_hz
                        * 100.0;
                    if df > criteria.freq_tol_pct {
                        continue;
                    }
                    let dz = (mode.damping_ratio - last.damping_ratio).abs()
                        / last.damping_ratio.max(1e-12)
                        * 100.0;
                    if dz > criteria.damp_tol_pct {
                        continue;
                    }
                    let m = mac(&mode.shape, &last.shape)?;
                    if m < criteria.mac_min {
                        continue;
                    }
                    if best.map_or(true, |(_, bm)| m > bm) {
                        best = Some((j, m));
                    }
                }
                if let Some((j, _)) = best {
                    linked[j] = true;
                    chain.members.push(set.modes[j].clone());
                    chain.orders.push(k);
                    chain.last_order = k;
                }
            }
        }
        for (j, mode) in set.modes.iter().enumerate() {
            if !linked[j] {
                chains.push(Chain {
                    members: vec![mode.clone()],
                    orders: vec![k],
                    last_order: k,
                });
            }
        }
        prev_order = Some(k);
    }

    // Median-frequency member represents each long-enough chain.
    let mut reps: Vec<ConsolidatedMode> = Vec::new();
    for chain in &chains {
        if chain.orders.len() < criteria.min_consecutive {
            continue;
        }
        let mut idx: Vec<usize> = (0..chain.members.len()).collect();
        idx.sort_by(|&a, &b| {
            chain.members[a]
                .natural_frequency_hz
                .total_cmp(&chain.members[b].natural_frequency_hz)
        });
        let mid = idx[chain.members.len() / 2];
        reps.push(ConsolidatedMode {
            mode: chain.members[mid].clone(),
            chain_length: chain.orders.len(),
            first_order: chain.orders[0],
            last_order: chain.last_order,
        });
    }
    reps.sort_by(|a, b| {
        a.mode
            .natural_frequency_hz
            .total_cmp(&b.mode.natural_frequency_hz)
    });

    // Distinct chains can trace the same physical mode (e.g. restarted after
    // a dropped order); keep the longer chain of any duplicate pair.
    let mut out: Vec<ConsolidatedMode> = Vec::new();
    for rep in reps {
        let mut dup = false;
        for kept in out.iter_mut() {
            let df = (rep.mode.natural_frequency_hz - kept.mode.natural_frequency_hz).abs()
                / kept.mode.natural_frequency_hz
                * 100.0;
            if df < criteria.freq_tol_pct && mac(&rep.mode.shape, &kept.mode.shape)? > criteria.mac_min
            {
                dup = true;
                if rep.chain_length > kept.chain_length {
                    *kept = rep.clone();
                }
                break;
            }
        }
        if !dup {
            out.push(rep);
        }
    }
    out.sort_by(|a, b| {
        a.mode
            .natural_frequency_hz
            .total_cmp(&b.mode.natural_frequency_hz)
    });
    Ok(out)
}

/// Writes the diagram as CSV (`order,freq_hz,damping,flag`) and an SVG
/// scatter of poles versus order. `overlay` draws an FRF magnitude curve
/// (one output/input pair) behind the poles for orientation.
pub fn diagram_export(
    diagram: &StabilizationDiagram,
    csv_path: &std::path::Path,
    svg_path: &std::path::Path,
    overlay: Option<(&FrequencyResponseSet, usize, usize)>,
) -> Result<()> {
    use std::io::Write;
    let mut csv = String::from("order,freq_hz,damping,flag\n");
    for (i, set) in diagram.per_order.iter().enumerate() {
        for (j, mode) in set.modes.iter().enumerate() {
            let flag = diagram.flags[i][j].flag.code();
            csv.push_str(&format!(
                "{},{},{},{}\n",
                diagram.orders[i], mode.natural_frequency_hz, mode.damping_ratio, flag
            ));
        }
    }
    std::fs::File::create(csv_path)?.write_all(csv.as_bytes())?;
    std::fs::File::create(svg_path)?.write_all(render_svg(diagram, overlay).as_bytes())?;
    Ok(())
}

fn render_svg(
    diagram: &StabilizationDiagram,
    overlay: Option<(&FrequencyResponseSet, usize, usize)>,
) -> String {
    let (w, h) = (900.0, 560.0);
    let (ml, mr, mt, mb) = (70.0, 30.0, 30.0, 50.0);
    let (pw, ph) = (w - ml - mr, h - mt - mb);
    let (f_lo, f_hi) = diagram.band_hz;
    let k_lo = *diagram.orders.first().unwrap_or(&2) as f64;
    let k_hi = *diagram.orders.last().unwrap_or(&2) as f64;
    let fx = |f: f64| ml + (f - f_lo) / (f_hi - f_lo).max(1e-12) * pw;
    let ky = |k: f64| mt + ph - (k - k_lo) / (k_hi - k_lo).max(1.0) * ph;

    let mut s = String::new();
    s.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"0 0 {w} {h}\" \
         font-family=\"sans-serif\" font-size=\"12\">\n"
    ));
    s.push_str(&format!(
        "<rect x=\"{ml}\" y=\"{mt}\" width=\"{pw}\" height=\"{ph}\" fill=\"white\" stroke=\"#444\"/>\n"
    ));

    if let Some((frf, out, inp)) = overlay {
        let mags: Vec<f64> = (0..frf.freqs_hz.len())
            .map(|i| frf.values[[out, inp, i]].norm().max(1e-300).log10())
            .collect();
        let (lo, hi) = mags
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &m| {
                (a.min(m), b.max(m))
            });
        let span = (hi - lo).max(1e-12);
        let pts: Vec<String> = frf
            .freqs_hz
            .iter()
            .zip(&mags)
            .filter(|(&f, _)| f >= f_lo && f <= f_hi)
            .map(|(&f, &m)| {
                format!("{:.2},{:.2}", fx(f), mt + ph - (m - lo) / span * ph * 0.9)
            })
            .collect();
        if pts.len() > 1 {
            s.push_str(&format!(
                "<polyline points=\"{}\" fill=\"none\" stroke=\"#bbb\" stroke-width=\"1\"/>\n",
                pts.join(" ")
            ));
        }
    }

    for (i, set) in diagram.per_order.iter().enumerate() {
        let y = ky(diagram.orders[i] as f64);
        for (j, mode) in set.modes.iter().enumerate() {
            let x = fx(mode.natural_frequency_hz);
            if !(f_lo..=f_hi).contains(&mode.natural_frequency_hz) {
                continue;
            }
            match diagram.flags[i][j].flag {
                StabilityFlag::New => s.push_str(&format!(
                    "<circle cx=\"{x:.2}\" cy=\"{y:.2}\" r=\"2\" fill=\"none\" stroke=\"#c44\"/>\n"
                )),
                StabilityFlag::FrequencyStable => s.push_str(&format!(
                    "<rect x=\"{:.2}\" y=\"{:.2}\" width=\"4\" height=\"4\" fill=\"none\" stroke=\"#28c\"/>\n",
                    x - 2.0,
                    y - 2.0
                )),
                StabilityFlag::FullyStable => s.push_str(&format!(
                    "<circle cx=\"{x:.2}\" cy=\"{y:.2}\" r=\"2.2\" fill=\"#181\"/>\n"
                )),
            }
        }
    }

    for c in &diagram.consolidated {
        let x = fx(c.mode.natural_frequency_hz);
        s.push_str(&format!(
            "<line x1=\"{x:.2}\" y1=\"{mt}\" x2=\"{x:.2}\" y2=\"{:.2}\" stroke=\"#181\" \
             stroke-width=\"0.5\" stroke-dasharray=\"3 3\"/>\n",
            mt + ph
        ));
    }

    // Axes annotation.
    for t in 0..=5 {
        let f = f_lo + (f_hi - f_lo) * t as f64 / 5.0;
        s.push_str(&format!(
            "<text x=\"{:.2}\" y=\"{:.2}\" text-anchor=\"middle\">{:.0}</text>\n",
            fx(f),
            mt + ph + 18.0,
            f
        ));
    }
    for &k in &diagram.orders {
        s.push_str(&format!(
            "<text x=\"{:.2}\" y=\"{:.2}\" text-anchor=\"end\">{k}</text>\n",
            ml - 8.0,
            ky(k as f64) + 4.0
        ));
    }
    s.push_str(&format!(
        "<text x=\"{:.2}\" y=\"{:.2}\" text-anchor=\"middle\">frequency (Hz)</text>\n",
        ml + pw / 2.0,
        h - 12.0
    ));
    s.push_str(&format!(
        "<text x=\"16\" y=\"{:.2}\" transform=\"rotate(-90 16 {:.2})\" text-anchor=\"middle\">order</text>\n",
        mt + ph / 2.0,
        mt + ph / 2.0
    ));
    s.push_str(
        "<text x=\"74\" y=\"22\" fill=\"#c44\">o new</text>\
         <text x=\"134\" y=\"22\" fill=\"#28c\">□ freq-stable</text>\
         <text x=\"234\" y=\"22\" fill=\"#181\">● fully stable</text>\n",
    );
    s.push_str("</svg>\n");
    s
}
