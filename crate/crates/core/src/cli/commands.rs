use num::BigRational;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::config::RunConfig;
use super::report::*;
use crate::error::{Error, Result};
use crate::finsets::{FinSet, Window};
use crate::hilbert::{Operator, Vector};
use crate::joinings::{
    equivariance_defect, indecomposability, joining_from_markov, joining_space,
    markov_from_joining, pairing_defect, random_vertex, validate_joining, FiniteMps, JoiningMatrix,
    SystemSpec,
};
use crate::model::{
    adjoint_in, geometric_counterexample, isometry_in, koopman_sbar, koopman_t1, koopman_t2,
    markov_j, markov_j_adjoint, oracle_deviation, skew_ergodic, verify_intertwining,
    verify_markov_j, xi_identity_check, zeta_identity_check, KernelMargins, Model, ModelOperator,
    ModelVector,
};
use crate::spectral::{
    max_spectral_multiplicity, random_permutation, spectral_profile, SpectralProfile,
};
use crate::weights::{
    fourier_coefficients_with_diagnostics, normalize, normalized_weights, NONNEGATIVITY_TOLERANCE,
    SYMMETRY_TOLERANCE,
};

const MARKOV_SEED_STRIDE: u64 = 0x9e37_79b9;

/// Fourier coefficients `a_n`, `|n| ≤ K`, with running sums.
pub fn cmd_coeffs(k: usize, resolution: usize, normalized: bool) -> Result<CoeffsReport> {
    let (raw, diag) = fourier_coefficients_with_diagnostics(k, resolution)?;
    let a = if normalized { normalize(&raw)? } else { raw };
    let mut running = 0.0;
    let rows = a
        .values()
        .iter()
        .enumerate()
        .map(|(i, &v)| {
            running += v;
            CoefficientRow {
                n: i as i64 - k as i64,
                a_n: v.into(),
                running_sum: running.into(),
            }
        })
        .collect();
    let mut assertions = vec![
        Assertion::new(
            "min_a_n",
            diag.min_value,
            Relation::AtLeast,
            NONNEGATIVITY_TOLERANCE,
        ),
        Assertion::new(
            "asymmetry",
            diag.max_asymmetry,
            Relation::AtMost,
            SYMMETRY_TOLERANCE,
        ),
        Assertion::new(
            "resolution_gap",
            diag.max_resolution_gap,
            Relation::AtMost,
            crate::weights::CONVERGENCE_TOLERANCE,
        ),
    ];
    if normalized {
        assertions.push(Assertion::new(
            "sum_deviation",
            (a.sum() - 1.0).abs(),
            Relation::AtMost,
            crate::weights::NORMALIZATION_TOLERANCE,
        ));
    }
    Ok(CoeffsReport {
        k,
        resolution,
        normalized,
        sum: a.sum().into(),
        max_imaginary: diag.max_imaginary.into(),
        max_asymmetry: diag.max_asymmetry.into(),
        max_resolution_gap: diag.max_resolution_gap.into(),
        rows,
        passed: all_passed(&assertions),
        assertions,
    })
}

fn model_operators(k: i64) -> Vec<(String, ModelOperator)> {
    let mut ops = vec![
        ("U_T1".to_string(), koopman_t1()),
        ("U_T2".to_string(), koopman_t2()),
        ("U_Sbar^1".to_string(), koopman_sbar(1)),
        ("U_Sbar^-1".to_string(), koopman_sbar(-1)),
    ];
    for n in -k..=k {
        ops.push((format!("U_I{n}"), isometry_in(n)));
        ops.push((format!("U*_I{n}"), adjoint_in(n)));
    }
    ops
}

/// Builds the model and `J`, and checks every operator against its pointwise
/// grid oracle.
pub fn cmd_construct(cfg: &RunConfig) -> Result<ConstructReport> {
    let model = Model::new(cfg.model())?;
    let a = normalized_weights(cfg.k, cfg.resolution)?;
    let mut ops = model_operators(cfg.k as i64);
    ops.push(("J".into(), markov_j(&a, model.config())?));
    ops.push(("J*".into(), markov_j_adjoint(&a, model.config())?));
    let tol = cfg.tolerances.grid_oracle.0;
    let mut oracle_checks = Vec::new();
    let mut assertions = Vec::new();
    for (name, op) in ops {
        let (dev, columns) = oracle_deviation(&model, &op, model.window())?;
        assertions.push(Assertion::new(
            format!("grid_oracle[{name}]"),
            dev,
            Relation::AtMost,
            tol,
        ));
        oracle_checks.push(OracleCheck {
            operator: name,
            max_deviation: dev.into(),
            columns,
        });
    }
    assertions.push(Assertion::new(
        "weight_sum_deviation",
        (a.sum() - 1.0).abs(),
        Relation::AtMost,
        crate::weights::NORMALIZATION_TOLERANCE,
    ));
    Ok(ConstructReport {
        config_echo: cfg.into(),
        dimension: model.config().dimension(),
        grid_dimension: model.grid_dimension()?,
        safe_dimension: model.basis_within(model.config().safe_window()).len(),
        skew_ergodic: skew_ergodic(model.config()),
        weights: a.values().iter().map(|&v| v.into()).collect(),
        weight_sum: a.sum().into(),
        oracle_checks,
        passed: all_passed(&assertions),
        assertions,
    })
}

/// Canonical sets `{0} ∪ B'`, `B' ⊆ [1, L]`.
fn canonical_test_sets(m: usize) -> Vec<FinSet> {
    let hi = (2 * m as i64).min(4);
    Window::new(1, hi)
        .subsets()
        .map(|s| {
            let mut e = vec![0];
            if let Some(s) = s {
                e.extend(s.iter());
            }
            FinSet::new(e).expect("nonempty")
        })
        .collect()
}

fn random_safe_vector(model: &Model, seed: u64) -> ModelVector {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut f = ModelVector::new();
    let idx = model.basis_within(model.config().safe_window());
    let values = Vector::random(idx.len(), &mut rng);
    for (i, v) in idx.into_iter().zip(values.entries()) {
        f.add_term(i, *v);
    }
    f
}

/// Intertwining, Markov axioms, kernel margins and the convolution identities.
pub fn cmd_verify(cfg: &RunConfig) -> Result<VerifyReport> {
    let model = Model::new(cfg.model())?;
    let a = normalized_weights(cfg.k, cfg.resolution)?;
    let tol = &cfg.tolerances;
    let mut assertions = Vec::new();

    let j = markov_j(&a, model.config())?;
    let inter = verify_intertwining(&model, &j)?;
    assertions.push(Assertion::new(
        "intertwining[J]",
        inter.residual,
        Relation::AtMost,
        tol.intertwining.0,
    ));
    for n in -(cfg.k as i64)..=cfg.k as i64 {
        let r = verify_intertwining(&model, &isometry_in(n))?;
        assertions.push(Assertion::new(
            format!("intertwining[U_I{n}]"),
            r.residual,
            Relation::AtMost,
            tol.intertwining.0,
        ));
    }

    let pair = verify_markov_j(
        &model,
        &a,
        cfg.markov_trials,
        cfg.seed.wrapping_mul(MARKOV_SEED_STRIDE),
    )?;
    for (name, r) in [("J", &pair.j), ("J*", &pair.j_adjoint)] {
        assertions.push(Assertion::new(
            format!("markov[{name}].constants"),
            r.constants_deviation,
            Relation::AtMost,
            crate::markov::CONSTANTS_TOLERANCE,
        ));
        assertions.push(Assertion::new(
            format!("markov[{name}].adjoint_constants"),
            r.adjoint_constants_deviation,
            Relation::AtMost,
            crate::markov::CONSTANTS_TOLERANCE,
        ));
        assertions.push(Assertion::new(
            format!("markov[{name}].min_image"),
            r.min_image_entry,
            Relation::AtLeast,
            -crate::markov::POSITIVITY_TOLERANCE,
        ));
        assertions.push(Assertion::new(
            format!("markov[{name}].norm"),
            r.norm,
            Relation::AtMost,
            1.0 + crate::markov::NORM_TOLERANCE,
        ));
    }

    let margins = KernelMargins::compute(&model, &a)?;
    assertions.push(Assertion::new(
        "kernel_margin[J]",
        margins.j,
        Relation::Above,
        tol.kernel_margin.0,
    ));
    assertions.push(Assertion::new(
        "kernel_margin[J*]",
        margins.j_adjoint,
        Relation::Above,
        tol.kernel_margin.0,
    ));

    let f = random_safe_vector(&model, cfg.seed);
    let mut xi: f64 = 0.0;
    let mut zeta: f64 = 0.0;
    for b in canonical_test_sets(cfg.m) {
        xi = xi.max(xi_identity_check(&model, &a, &f, &b)?);
        zeta = zeta.max(zeta_identity_check(&model, &a, &f, &b)?);
    }
    assertions.push(Assertion::new(
        "xi_identity",
        xi,
        Relation::AtMost,
        tol.identities.0,
    ));
    assertions.push(Assertion::new(
        "zeta_identity",
        zeta,
        Relation::AtMost,
        tol.identities.0,
    ));

    Ok(VerifyReport {
        config_echo: cfg.into(),
        safe_dimension: inter.safe_dimension,
        intertwine_residual: inter.residual.into(),
        intertwine_max_column: inter.max_column_residual.into(),
        markov_flags: MarkovFlags {
            j: (&pair.j).into(),
            j_adjoint: (&pair.j_adjoint).into(),
        },
        kernel_margins: MarginSummary {
            j: margins.j.into(),
            j_adjoint: margins.j_adjoint.into(),
            empty_sector: margins.empty_sector.into(),
        },
        xi_max_dev: xi.into(),
        zeta_max_dev: zeta.into(),
        passed: all_passed(&assertions),
        assertions,
    })
}

/// Kernel margins of `J` and `J*` for every weight half-width `1 ≤ k ≤ K`.
/// At `k = 0`, `J* = U*_{I_0}` has a kernel, so the scan starts at 1.
pub fn cmd_kernel_scan(cfg: &RunConfig) -> Result<KernelScanReport> {
    if cfg.k == 0 {
        return Err(Error::Config("kernel-scan needs K ≥ 1".into()));
    }
    let mut rows = Vec::new();
    let mut assertions = Vec::new();
    for k in 1..=cfg.k {
        let mut mc = cfg.model();
        mc.k = k;
        let model = Model::new(mc)?;
        let a = normalized_weights(k, cfg.resolution)?;
        let m = KernelMargins::compute(&model, &a)?;
        assertions.push(Assertion::new(
            format!("kernel_margin[J,K={k}]"),
            m.j,
            Relation::Above,
            cfg.tolerances.kernel_margin.0,
        ));
        assertions.push(Assertion::new(
            format!("kernel_margin[J*,K={k}]"),
            m.j_adjoint,
            Relation::Above,
            cfg.tolerances.kernel_margin.0,
        ));
        rows.push(KernelScanRow {
            k,
            m: cfg.m,
            safe_margin: cfg.safe_margin,
            j: m.j.into(),
            j_adjoint: m.j_adjoint.into(),
            empty_sector: m.empty_sector.into(),
        });
    }
    Ok(KernelScanReport {
        config_echo: cfg.into(),
        rows,
        passed: all_passed(&assertions),
        assertions,
    })
}

/// The geometric-weights example for each `K`; the window grows to `K + 1`
/// when needed.
pub fn cmd_counterexample(cfg: &RunConfig, ks: &[usize]) -> Result<CounterexampleCommandReport> {
    if ks.is_empty() {
        return Err(Error::Config("no K values given".into()));
    }
    let tol = &cfg.tolerances;
    let mut runs = Vec::new();
    let mut assertions = Vec::new();
    for &k in ks {
        let mut mc = cfg.model();
        mc.m = mc.m.max(k + 1);
        let model = Model::new(mc)?;
        let r = geometric_counterexample(&model, k)?;
        assertions.push(Assertion::new(
            format!("residual[K={k}]"),
            r.measured,
            Relation::AtMost,
            r.bound + tol.counterexample.0,
        ));
        assertions.push(Assertion::new(
            format!("f_norm[K={k}]"),
            r.f_norm,
            Relation::AtLeast,
            0.5 * r.g_norm,
        ));
        assertions.push(Assertion::new(
            format!("g_in_kernel[K={k}]"),
            r.g_kernel_residual,
            Relation::AtMost,
            tol.counterexample.0,
        ));
        runs.push(CounterexampleRow {
            k,
            m: model.config().m,
            g_norm: r.g_norm.into(),
            g_kernel_residual: r.g_kernel_residual.into(),
            f_norm: r.f_norm.into(),
            measured: r.measured.into(),
            bound: r.bound.into(),
            weight_sum: r.weight_sum.into(),
            weight_deficit: r.weight_deficit.into(),
        });
    }
    for w in runs.windows(2) {
        let steps = w[1].k as i32 - w[0].k as i32;
        let predicted = w[0].measured.0 * 0.5f64.powi(steps);
        assertions.push(Assertion::new(
            format!("halving[K={}->{}]", w[0].k, w[1].k),
            (predicted - w[1].measured.0).abs(),
            Relation::AtMost,
            tol.halving.0,
        ));
    }
    Ok(CounterexampleCommandReport {
        config_echo: cfg.into(),
        runs,
        passed: all_passed(&assertions),
        assertions,
    })
}

/// A unitary given either as a permutation (`(Uf)(x) = f(perm[x])`) or as a
/// dense matrix.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum OperatorSpec {
    Permutation {
        permutation: Vec<usize>,
    },
    Matrix {
        rows: usize,
        cols: usize,
        re: Vec<f64>,
        #[serde(default)]
        im: Option<Vec<f64>>,
    },
}

impl OperatorSpec {
    pub fn to_operator(&self) -> Result<Operator> {
        match self {
            OperatorSpec::Permutation { permutation } => {
                let mut seen = vec![false; permutation.len()];
                for &y in permutation {
                    if y >= permutation.len() || std::mem::replace(&mut seen[y], true) {
                        return Err(Error::Parse(format!(
                            "{permutation:?} is not a permutation"
                        )));
                    }
                }
                Ok(Operator::koopman_permutation(permutation))
            }
            OperatorSpec::Matrix { rows, cols, re, im } => {
                let zeros = vec![0.0; re.len()];
                let im = im.as_ref().unwrap_or(&zeros);
                if im.len() != re.len() {
                    return Err(Error::DimensionMismatch {
                        expected: re.len(),
                        found: im.len(),
                    });
                }
                let entries = re
                    .iter()
                    .zip(im)
                    .map(|(&a, &b)| num::complex::Complex64::new(a, b))
                    .collect();
                let op = Operator::from_row_major(*rows, *cols, entries)?;
                if !op.is_unitary() {
                    return Err(Error::NotUnitary {
                        defect: op.unitarity_defect()?,
                    });
                }
                Ok(op)
            }
        }
    }

    fn exact_profile(&self) -> Option<SpectralProfile> {
        match self {
            OperatorSpec::Permutation { permutation } => {
                Some(SpectralProfile::from_permutation(permutation))
            }
            OperatorSpec::Matrix { .. } => None,
        }
    }
}

/// A random permutation and a conjugate of it.
pub fn conjugate_pair(size: usize, seed: u64) -> (OperatorSpec, OperatorSpec) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let p = random_permutation(size, &mut rng);
    let q = random_permutation(size, &mut rng);
    let mut q_inv = vec![0; size];
    for (x, &y) in q.iter().enumerate() {
        q_inv[y] = x;
    }
    // q⁻¹ ∘ p ∘ q
    let conj = (0..size).map(|x| q_inv[p[q[x]]]).collect();
    (
        OperatorSpec::Permutation { permutation: p },
        OperatorSpec::Permutation { permutation: conj },
    )
}

fn profile_summary(
    spec: &OperatorSpec,
    seed: u64,
    assertions: &mut Vec<Assertion>,
    name: &str,
) -> Result<(ProfileSummary, SpectralProfile)> {
    let u = spec.to_operator()?;
    let profile = spectral_profile(&u)?;
    let cert = max_spectral_multiplicity(&u, seed)?;
    assertions.push(Assertion::flag(
        format!("multiplicity_certified[{name}]"),
        cert.certified,
    ));
    assertions.push(Assertion::new(
        format!("multiplicity_matches_profile[{name}]"),
        (cert.value as f64 - profile.max_multiplicity() as f64).abs(),
        Relation::AtMost,
        0.0,
    ));
    if let Some(exact) = spec.exact_profile() {
        assertions.push(Assertion::flag(
            format!("profile_matches_cycles[{name}]"),
            exact.matches(&profile),
        ));
    }
    Ok((
        ProfileSummary {
            dimension: profile.dimension(),
            lines: profile
                .lines
                .iter()
                .map(|l| LineSummary {
                    angle: l.angle.into(),
                    multiplicity: l.multiplicity,
                })
                .collect(),
            max_multiplicity: profile.max_multiplicity(),
            certified_multiplicity: cert.value,
            multiplicity_certified: cert.certified,
        },
        profile,
    ))
}

/// Spectral profiles of two unitaries and whether they are spectrally
/// equivalent.
pub fn cmd_spectral(
    left: &OperatorSpec,
    right: &OperatorSpec,
    seed: u64,
) -> Result<SpectralReport> {
    let mut assertions = Vec::new();
    let (l, lp) = profile_summary(left, seed, &mut assertions, "left")?;
    let (r, rp) = profile_summary(right, seed.wrapping_add(1), &mut assertions, "right")?;
    Ok(SpectralReport {
        seed,
        left: l,
        right: r,
        equivalent: lp.matches(&rp),
        passed: all_passed(&assertions),
        assertions,
    })
}

fn rational_strings(values: &[BigRational], cols: usize) -> Vec<Vec<String>> {
    values
        .chunks(cols)
        .map(|row| row.iter().map(|q| q.to_string()).collect())
        .collect()
}

fn operator_rows(op: &Operator) -> Vec<Vec<Num17>> {
    (0..op.rows())
        .map(|r| (0..op.cols()).map(|c| op.get(r, c).re.into()).collect())
        .collect()
}

fn spec_of(sys: &FiniteMps) -> SystemSpec {
    SystemSpec {
        n: sys.len(),
        permutation: sys.perm().to_vec(),
        p: match sys.exact_p() {
            Some(p) => p.iter().map(|q| q.to_string()).collect(),
            None => sys.p().iter().map(|v| Num17(*v).to_string()).collect(),
        },
    }
}

/// Solution space of the joining constraints and the joining/Markov round trip.
pub fn cmd_joinings(
    left: &FiniteMps,
    right: &FiniteMps,
    seed: u64,
    include_markov: bool,
) -> Result<JoiningsReport> {
    let space = joining_space(left, right);
    let mut assertions = Vec::new();
    let product = JoiningMatrix::product(left, right);
    assertions.push(Assertion::flag(
        "product_valid",
        validate_joining(&product, left, right).valid(),
    ));
    assertions.push(Assertion::new(
        "symmetric_dimension",
        (joining_space(right, left).dimension as f64 - space.dimension as f64).abs(),
        Relation::AtMost,
        0.0,
    ));

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let vertex = random_vertex(left, right, &mut rng);
    let mut matrices = Vec::new();
    for (name, lam) in [("product", &product), ("vertex", &vertex)] {
        let phi = markov_from_joining(lam, left, right)?;
        let report = phi.verify(crate::markov::DEFAULT_TRIALS, seed)?;
        assertions.push(Assertion::flag(format!("markov[{name}]"), report.passed()));
        assertions.push(Assertion::new(
            format!("equivariance[{name}]"),
            equivariance_defect(&phi.matrix, left, right)?,
            Relation::AtMost,
            crate::joinings::JOINING_TOLERANCE,
        ));
        assertions.push(Assertion::new(
            format!("pairing[{name}]"),
            pairing_defect(&phi.matrix, lam, right),
            Relation::AtMost,
            crate::joinings::JOINING_TOLERANCE,
        ));
        let back = joining_from_markov(&phi.matrix, left, right)?;
        assertions.push(Assertion::new(
            format!("round_trip[{name}]"),
            back.max_abs_diff(lam),
            Relation::AtMost,
            crate::joinings::JOINING_TOLERANCE,
        ));
        matrices.push(operator_rows(&phi.matrix));
    }
    let vertex_report = indecomposability(&vertex, left, right, seed)?;
    assertions.push(Assertion::flag("vertex_extreme", vertex_report.extreme));
    if space.is_disjoint() {
        assertions.push(Assertion::flag(
            "product_extreme",
            indecomposability(&product, left, right, seed)?.extreme,
        ));
    }

    let particular = match &space.exact_particular {
        Some(p) => rational_strings(p, right.len()),
        None => product
            .values()
            .chunks(right.len())
            .map(|row| row.iter().map(|v| Num17(*v).to_string()).collect())
            .collect(),
    };
    Ok(JoiningsReport {
        left: spec_of(left),
        right: spec_of(right),
        d: space.dimension,
        disjoint: space.is_disjoint(),
        particular,
        basis: space
            .basis
            .iter()
            .map(|b| rational_strings(b, right.len()))
            .collect(),
        markov: include_markov.then_some(matrices),
        passed: all_passed(&assertions),
        assertions,
    })
}
