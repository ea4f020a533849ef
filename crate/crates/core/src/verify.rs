//! Self-check suite comparing every closed form with a brute-force oracle.

use std::f64::consts::{FRAC_PI_2, FRAC_PI_3, PI};
use std::fmt;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::channel::{channel_concurrence, channel_density_matrix, transition_fields};
use crate::error::Result;
use crate::exec::Execution;
use crate::linalg::outer;
use crate::model::input_state_vector;
use crate::model::{
    dimer_eigensystem, field_from_tesla_with, CouplingSet, InputState, IsingPair, Thermo, CU3P2O6OH2, MU_B_OVER_K_B,
};
use crate::oracle::{
    bond_commutator_defect, compare_with_transfer, gibbs_reduced_dimer, transfer_ln_partition_function, DenseGibbs,
    FiniteChainSpec, OracleMode,
};
use crate::scan::{threshold_temperatures, ContourTarget, ThresholdSearch};
use crate::teleport::oracle::{
    average_fidelity_numeric, output_via_pauli_channel, uhlmann_fidelity, wootters_concurrence,
};
use crate::teleport::{average_fidelity, fidelity, output_concurrence, output_density_matrix, CLASSICAL_THRESHOLD};
use crate::transfer::{boltzmann_factor, free_energy_per_cell, ising_statistics};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Level {
    Quick,
    Full,
}

#[derive(Debug, Clone, Copy)]
pub struct VerifyOptions {
    pub level: Level,
    /// `mu_B / k_B` used by the material checks.
    pub mu_b_over_k_b: f64,
    pub exec: Execution,
    pub seed: u64,
}

impl VerifyOptions {
    pub fn new(level: Level) -> Self {
        Self {
            level,
            mu_b_over_k_b: MU_B_OVER_K_B,
            exec: Execution::Parallel,
            seed: 20_240_611,
        }
    }

    fn draws(&self, quick: usize, full: usize) -> usize {
        match self.level {
            Level::Quick => quick,
            Level::Full => full,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckResult {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
    pub seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerifyReport {
    pub level: Level,
    pub checks: Vec<CheckResult>,
}

impl VerifyReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn failures(&self) -> impl Iterator<Item = &CheckResult> {
        self.checks.iter().filter(|c| !c.passed)
    }
}

impl fmt::Display for VerifyReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for c in &self.checks {
            let tag = if c.passed { "PASS" } else { "FAIL" };
            writeln!(f, "{tag} {:<38} {:>7.3}s  {}", c.name, c.seconds, c.detail)?;
        }
        let failed = self.failures().count();
        write!(f, "{} checks, {} failed", self.checks.len(), failed)
    }
}

/// Random point in the oracle sampling box.
#[derive(Debug, Clone, Copy)]
struct Draw {
    c: CouplingSet,
    t: Thermo,
    input: InputState,
}

fn draws(seed: u64, n: usize) -> Vec<Draw> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| Draw {
            c: CouplingSet::new(
                rng.gen_range(0.2..3.0),
                rng.gen_range(0.0..3.0),
                rng.gen_range(0.0..4.0),
            )
            .expect("finite draw"),
            t: Thermo::from_temperature(rng.gen_range(0.02..5.0)).expect("positive draw"),
            input: InputState::new(rng.gen_range(0.0..=PI), rng.gen_range(0.0..2.0 * PI)).expect("in range"),
        })
        .collect()
}

/// Outcome of one check before timing is attached.
type Outcome = Result<(bool, String)>;

fn worst(values: impl IntoIterator<Item = Result<f64>>) -> Result<f64> {
    values.into_iter().try_fold(0.0f64, |acc, v| Ok(acc.max(v?)))
}

fn within(name: &str, dev: f64, tol: f64) -> (bool, String) {
    (
        dev <= tol,
        format!("max {name} deviation {dev:.3e} (tolerance {tol:.0e})"),
    )
}

fn check_boltzmann(o: &VerifyOptions) -> Outcome {
    let dev = worst(draws(o.seed, o.draws(50, 200)).iter().flat_map(|d| {
        IsingPair::ALL.map(|pair| {
            let es = dimer_eigensystem(pair, &d.c)?;
            let beta = d.t.beta();
            let direct: f64 =
                (0.5 * beta * d.c.h * pair.sum()).exp() * es.energies.iter().map(|e| (-beta * e).exp()).sum::<f64>();
            Ok((boltzmann_factor(pair, &d.c, &d.t)? / direct - 1.0).abs())
        })
    }))?;
    Ok(within("relative", dev, 1e-12))
}

fn check_kraus(o: &VerifyOptions) -> Outcome {
    let dev = worst(draws(o.seed + 1, o.draws(100, 500)).iter().map(|d| {
        let rho = channel_density_matrix(&d.c, &d.t)?;
        let kraus = output_via_pauli_channel(&rho, &d.input)?;
        Ok(output_density_matrix(&rho, &d.input)?.max_abs_diff(&kraus))
    }))?;
    Ok(within("elementwise", dev, 1e-12))
}

fn check_wootters(o: &VerifyOptions) -> Outcome {
    let dev = worst(draws(o.seed + 2, o.draws(100, 500)).iter().map(|d| {
        let rho = channel_density_matrix(&d.c, &d.t)?;
        let ch = (channel_concurrence(&rho) - wootters_concurrence(&rho.to_dense())?).abs();
        let kraus = output_via_pauli_channel(&rho, &d.input)?;
        let out = (output_concurrence(&rho, &d.input)? - wootters_concurrence(&kraus)?).abs();
        Ok(ch.max(out))
    }))?;
    Ok(within("concurrence", dev, 1e-12))
}

fn check_uhlmann(o: &VerifyOptions) -> Outcome {
    let dev = worst(draws(o.seed + 3, o.draws(100, 500)).iter().map(|d| {
        let rho = channel_density_matrix(&d.c, &d.t)?;
        let rho_in = outer(&input_state_vector(&d.input)?);
        let kraus = output_via_pauli_channel(&rho, &d.input)?;
        Ok((fidelity(&rho, d.input.theta)? - uhlmann_fidelity(&rho_in, &kraus)?).abs())
    }))?;
    Ok(within("fidelity", dev, 1e-10))
}

fn check_quadrature(o: &VerifyOptions) -> Outcome {
    let dev = worst(draws(o.seed + 4, o.draws(20, 100)).iter().map(|d| {
        let rho = channel_density_matrix(&d.c, &d.t)?;
        Ok((average_fidelity(&rho) - average_fidelity_numeric(&rho)?).abs())
    }))?;
    Ok(within("average fidelity", dev, 1e-8))
}

fn check_field_derivative(o: &VerifyOptions) -> Outcome {
    const STEP: f64 = 1e-5;
    let dev = worst(draws(o.seed + 5, o.draws(50, 200)).iter().map(|d| {
        let f = |h: f64| free_energy_per_cell(&d.c.with_field(h), &d.t);
        let derivative = -(f(d.c.h + STEP)? - f(d.c.h - STEP)?) / (2.0 * STEP);
        let rho = channel_density_matrix(&d.c, &d.t)?;
        let total = ising_statistics(&d.c, &d.t)?.m_ising + rho.dimer_magnetization();
        Ok(relative(derivative, total))
    }))?;
    Ok(within("relative", dev, 1e-6))
}

/// Relative difference with a floor so that a vanishing reference does not
/// blow up the ratio.
pub fn relative(value: f64, reference: f64) -> f64 {
    (value - reference).abs() / reference.abs().max(1e-3)
}

fn check_dense_partition(o: &VerifyOptions) -> Outcome {
    let cells: &[usize] = match o.level {
        Level::Quick => &[2],
        Level::Full => &[2, 3],
    };
    let points = draws(o.seed + 6, o.draws(3, 6));
    let mut dev = 0.0f64;
    for &n in cells {
        for d in &points {
            let spec = FiniteChainSpec::new(n, d.c)?;
            let dense = DenseGibbs::new(&spec, &d.t)?;
            let ln_z = transfer_ln_partition_function(&d.c, &d.t, n)?;
            dev = dev.max(((dense.ln_partition_function() - ln_z).exp() - 1.0).abs());
        }
    }
    Ok(within("relative partition function", dev, 1e-10))
}

fn check_enumeration_limit(o: &VerifyOptions) -> Outcome {
    let mut used = 0;
    let mut dev = 0.0f64;
    for d in draws(o.seed + 7, o.draws(20, 120)) {
        let cmp = compare_with_transfer(&FiniteChainSpec::new(12, d.c)?, &d.t)?;
        if cmp.finite_size_scale > 1e-8 {
            continue;
        }
        used += 1;
        dev = dev.max(cmp.enumeration.rho.max_abs_diff_x(&cmp.limit.rho));
    }
    let (ok, detail) = within("density matrix", dev, 1e-6);
    Ok((ok && used > 0, format!("{detail} over {used} draws")))
}

fn check_ground_asymptotes(_: &VerifyOptions) -> Outcome {
    let at = |h: f64, t: f64| -> Result<_> {
        channel_density_matrix(&CouplingSet::new(1.0, 1.0, h)?, &Thermo::from_temperature(t)?)
    };
    let qaf = at(0.05, 0.01)?;
    let qfi = at(1.0, 0.01)?;
    let cpm = at(3.0, 0.01)?;
    let ent = at(0.2, 0.005)?;
    let checks = [
        ("F_QAF(pi/2)", fidelity(&qaf, FRAC_PI_2)?, 0.75, 0.01),
        ("F_QAF(pi/3)", fidelity(&qaf, FRAC_PI_3)?, 0.8125, 0.01),
        ("F_av_QAF", average_fidelity(&qaf), 5.0 / 6.0, 0.01),
        ("C_ch_QFI", channel_concurrence(&qfi), 1.0, 1e-3),
        ("F_CPM(pi/2)", fidelity(&cpm, FRAC_PI_2)?, 0.5, 0.01),
        ("F_CPM(pi/3)", fidelity(&cpm, FRAC_PI_3)?, 0.375, 0.01),
        ("F_av_CPM", average_fidelity(&cpm), 1.0 / 3.0, 0.01),
        (
            "C_ch_QAF",
            channel_concurrence(&ent),
            std::f64::consts::FRAC_1_SQRT_2,
            1e-3,
        ),
        (
            "C_out_QAF",
            output_concurrence(&ent, &InputState::new(FRAC_PI_2, 0.0)?)?,
            0.5,
            0.01,
        ),
    ];
    let bad: Vec<String> = checks
        .iter()
        .filter(|(_, v, e, tol)| (v - e).abs() > *tol)
        .map(|(n, v, e, _)| format!("{n}={v:.6} (expected {e:.6})"))
        .collect();
    Ok(if bad.is_empty() {
        (true, format!("{} asymptotic values within tolerance", checks.len()))
    } else {
        (false, bad.join("; "))
    })
}

/// Saturation field of the preset in Tesla.
pub fn saturation_field_tesla(mu_b_over_k_b: f64) -> Result<f64> {
    let p = CU3P2O6OH2;
    let (_, h_c2) = transition_fields(p.j_kelvin, p.j1_kelvin)?;
    Ok(h_c2 / field_from_tesla_with(1.0, p.g_factor, mu_b_over_k_b)?)
}

fn check_saturation(o: &VerifyOptions) -> Outcome {
    let b = saturation_field_tesla(o.mu_b_over_k_b)?;
    Ok((
        (b - 82.9).abs() <= 0.2,
        format!("saturation field {b:.3} T (expected 82.9 +- 0.2)"),
    ))
}

/// `F_av` of the preset channel at a field in Tesla and temperature in K.
pub fn material_average_fidelity(b_tesla: f64, t_kelvin: f64, mu_b_over_k_b: f64) -> Result<f64> {
    let p = CU3P2O6OH2;
    let h = field_from_tesla_with(b_tesla, p.g_factor, mu_b_over_k_b)?;
    let rho = channel_density_matrix(&p.couplings(h)?, &Thermo::from_temperature(t_kelvin)?)?;
    Ok(average_fidelity(&rho))
}

fn check_operating_window(o: &VerifyOptions) -> Outcome {
    let mu = o.mu_b_over_k_b;
    let inside = material_average_fidelity(40.0, 20.0, mu)?;
    let high_field = material_average_fidelity(100.0, 5.0, mu)?;
    let hot = material_average_fidelity(40.0, 60.0, mu)?;
    let ok = inside > CLASSICAL_THRESHOLD && high_field < CLASSICAL_THRESHOLD && hot < CLASSICAL_THRESHOLD;
    Ok((
        ok,
        format!("F_av(40 T, 20 K)={inside:.4} F_av(100 T, 5 K)={high_field:.4} F_av(40 T, 60 K)={hot:.4}"),
    ))
}

fn check_commutation(_: &VerifyOptions) -> Outcome {
    let defect = bond_commutator_defect(&FiniteChainSpec::new(3, CouplingSet::new(1.0, 0.7, 0.4)?)?)?;
    Ok(within("commutator", defect, 1e-12))
}

fn check_dense_vs_enumeration(o: &VerifyOptions) -> Outcome {
    let mut dev = 0.0f64;
    for d in draws(o.seed + 8, 3) {
        for n in [2, 3] {
            let spec = FiniteChainSpec::new(n, d.c)?;
            let dense = DenseGibbs::new(&spec, &d.t)?;
            let full = dense.reduced_dimer(0)?;
            let x = gibbs_reduced_dimer(&spec, &d.t, OracleMode::Enumeration)?;
            let mut m = full;
            m[(0, 0)] -= x.r11;
            m[(1, 1)] -= x.r22;
            m[(2, 2)] -= x.r33;
            m[(3, 3)] -= x.r44;
            m[(1, 2)] -= x.r23.re;
            m[(2, 1)] -= x.r23.re;
            dev = dev.max(m.amax());
            for k in 1..n {
                dev = dev.max((dense.reduced_dimer(k)? - full).amax());
            }
        }
    }
    Ok(within("reduced dimer", dev, 1e-12))
}

fn check_finite_size_scaling(_: &VerifyOptions) -> Outcome {
    let c = CouplingSet::new(1.0, 1.0, 0.3)?;
    let t = Thermo::from_beta(2.0)?;
    let mut rows = Vec::new();
    for n in (4..=16).step_by(2) {
        let cmp = compare_with_transfer(&FiniteChainSpec::new(n, c)?, &t)?;
        if cmp.enumeration_vs_product.max() > 1e-12 {
            return Ok((false, format!("enumeration and transfer product disagree at N={n}")));
        }
        rows.push((n, cmp.finite_vs_limit.max(), cmp.finite_size_scale));
    }
    let mut ok = true;
    for w in rows.windows(2) {
        let observed = w[1].1 / w[0].1;
        let expected = w[1].2 / w[0].2;
        // Past ~1e-14 the deviation is roundoff, not finite size.
        if w[1].1 > 1e-13 {
            ok &= observed < 1.0 && (observed / expected) < 3.0 && (expected / observed) < 3.0;
        }
    }
    let detail = rows
        .iter()
        .map(|(n, d, _)| format!("N={n}:{d:.1e}"))
        .collect::<Vec<_>>()
        .join(" ");
    Ok((ok, detail))
}

fn check_thresholds(o: &VerifyOptions) -> Outcome {
    let mut parts = Vec::new();
    let mut ok = true;
    for (theta, lo, hi) in [(FRAC_PI_2, 0.26, 0.36), (FRAC_PI_3, 0.30, 0.40)] {
        let search = ThresholdSearch::new(1.0, ContourTarget::Fidelity { theta });
        let t = threshold_temperatures(&search, o.exec)?.t_star;
        ok &= t.is_some_and(|t| (lo..=hi).contains(&t));
        parts.push(format!("theta={theta:.4}: T*={t:?}"));
    }
    Ok((ok, parts.join(", ")))
}

type Check = (&'static str, fn(&VerifyOptions) -> Outcome);

const QUICK: &[Check] = &[
    ("transfer.boltzmann_vs_eigensystem", check_boltzmann),
    ("teleport.kraus_vs_closed_form", check_kraus),
    ("teleport.wootters_vs_x_state", check_wootters),
    ("teleport.uhlmann_vs_closed_form", check_uhlmann),
    ("teleport.quadrature_vs_closed_form", check_quadrature),
    ("thermo.field_derivative", check_field_derivative),
    ("oracle.dense_partition_function", check_dense_partition),
    ("oracle.enumeration_vs_limit", check_enumeration_limit),
    ("channel.ground_state_asymptotes", check_ground_asymptotes),
    ("material.saturation_field", check_saturation),
    ("material.operating_window", check_operating_window),
];

const FULL_ONLY: &[Check] = &[
    ("oracle.bond_commutation", check_commutation),
    ("oracle.dense_vs_enumeration", check_dense_vs_enumeration),
    ("oracle.finite_size_scaling", check_finite_size_scaling),
    ("scan.threshold_temperatures", check_thresholds),
];

pub fn run(options: &VerifyOptions) -> VerifyReport {
    let checks: Vec<&Check> = match options.level {
        Level::Quick => QUICK.iter().collect(),
        Level::Full => QUICK.iter().chain(FULL_ONLY).collect(),
    };
    let results = options.exec.map(checks.len(), |i| {
        let (name, f) = checks[i];
        let start = Instant::now();
        let (passed, detail) = match f(options) {
            Ok(r) => r,
            Err(e) => (false, format!("error: {e}")),
        };
        CheckResult {
            name,
            passed,
            detail,
            seconds: start.elapsed().as_secs_f64(),
        }
    });
    VerifyReport {
        level: options.level,
        checks: results,
    }
}
