use std::f64::consts::PI;
use std::path::Path;

use serde_json::{json, Value};

use freeforms_core::admissibility::region_d_boundary_with;
use freeforms_core::characterization::DEFAULT_MAX_ODD;
use freeforms_core::{
    check_freeness, classify, construct_free_family, free_convolve, gallery_phi, identity_residual, is_admissible,
    moments_to_cumulants, recover_measure, AdmissibilityConfig, CoeffPair, Complex64, ConvolutionConfig, GalleryCase,
    Measure, PhiPoly, Recovery, RecoveryConfig, SearchConfig, UpperBranch,
};

use crate::config::{check_positive, RunConfig};
use crate::error::CliError;
use crate::io::{self, load, load_kappa, load_kappa_list, load_moments, parse_grid, parse_resolution, print_json};
use crate::{
    AdmissibleArgs, Branch, Case, Command, ConvolveArgs, CumulantsCmd, FreenessCmd, GalleryArgs, LambdaCmd,
    RecoverArgs, RegionDArgs,
};

const DEFAULT_SAMPLES: usize = 200;
const DEFAULT_M_MAX: usize = 4;
const GALLERY_RADII: [f64; 4] = [2.0, 4.0, 8.0, 16.0];

pub fn dispatch(command: Command, cfg: &RunConfig) -> Result<(), CliError> {
    match command {
        Command::Cumulants(c) => cumulants(c),
        Command::Admissible(a) => admissible(a, cfg),
        Command::RegionD(a) => region_d(a, cfg),
        Command::Recover(a) => recover(a, cfg),
        Command::Freeness(c) => freeness(c, cfg),
        Command::Lambda(c) => lambda(c, cfg),
        Command::Gallery(a) => gallery(a),
        Command::Convolve(a) => convolve(a, cfg),
    }
}

fn cumulants(cmd: CumulantsCmd) -> Result<(), CliError> {
    match cmd {
        CumulantsCmd::ToMoments { kappa, order } => {
            let k = load_kappa(&kappa)?;
            let n = order.unwrap_or(2 * k.len());
            print_json(json!({ "moments": k.to_moments(n)? }))?;
        }
        CumulantsCmd::FromMoments { moments } => {
            let m = load_moments(&moments)?;
            let k = moments_to_cumulants(&m)?;
            // One cumulant per moment past m_0, trailing zeros included.
            let full: Vec<f64> = (1..m.len()).map(|s| k.get(s)).collect();
            print_json(json!({ "kappa": full }))?;
        }
        CumulantsCmd::Scale { kappa, factor } => {
            if !factor.is_finite() {
                return Err(CliError::Validation(format!("factor must be finite, got {factor}")));
            }
            print_json(json!(load_kappa(&kappa)?.scale(factor)))?;
        }
        CumulantsCmd::Add { kappa, other } => {
            print_json(json!(load_kappa(&kappa)?.add(&load_kappa(&other)?)))?;
        }
    }
    Ok(())
}

fn admissibility_config(resolution: Option<&str>, no_refine: bool, cfg: &RunConfig) -> Result<AdmissibilityConfig, CliError> {
    let d = AdmissibilityConfig::default();
    let (n_r, n_theta) = match resolution {
        Some(s) => parse_resolution(s)?,
        None => (cfg.n_r.unwrap_or(d.n_r), cfg.n_theta.unwrap_or(d.n_theta)),
    };
    Ok(AdmissibilityConfig {
        n_r,
        n_theta,
        eps_ratio: cfg.eps_ratio.unwrap_or(d.eps_ratio),
        radius_factor: cfg.radius_factor.unwrap_or(d.radius_factor),
        max_radius_doublings: cfg.max_radius_doublings.unwrap_or(d.max_radius_doublings),
        refine: !no_refine && cfg.refine.unwrap_or(d.refine),
    })
}

fn admissible(a: AdmissibleArgs, cfg: &RunConfig) -> Result<(), CliError> {
    let k = load_kappa(&a.kappa)?;
    let acfg = admissibility_config(a.resolution.as_deref(), a.no_refine, cfg)?;
    let verdict = is_admissible(&k, &acfg)?;
    print_json(json!({
        "kappa": k.as_slice(),
        "status": verdict.status,
        "margin": verdict.margin,
        "resolution": verdict.resolution,
        "config": acfg,
    }))?;
    Ok(())
}

fn region_d(a: RegionDArgs, cfg: &RunConfig) -> Result<(), CliError> {
    let samples = a.samples.or(cfg.samples).unwrap_or(DEFAULT_SAMPLES);
    let branch = match a.branch {
        Branch::Printed => UpperBranch::Printed,
        Branch::Tangency => UpperBranch::Tangency,
    };
    let rows = region_d_boundary_with(samples, branch)?;
    let n = io::write_csv(
        a.output.as_deref(),
        &["y", "plus_f", "minus_f"],
        rows.iter().map(|r| vec![r.y, r.plus_f, r.minus_f]),
    )?;
    if let Some(path) = &a.output {
        print_json(json!({ "output": path, "rows": n, "samples": samples, "branch": branch }))?;
    }
    Ok(())
}

fn eps_schedule(flag: Option<Vec<f64>>, cfg: &RunConfig, default: Vec<f64>) -> Result<Vec<f64>, CliError> {
    let eps = flag.or_else(|| cfg.eps.clone()).unwrap_or(default);
    for &e in &eps {
        check_positive("eps", e)?;
    }
    Ok(eps)
}

fn density_output(r: &Recovery, path: Option<&Path>, meta: Value) -> Result<(), CliError> {
    let d = &r.density;
    let n = io::write_csv(path, &["x", "density"], d.xs().zip(d.values()).map(|(x, v)| vec![x, *v]))?;
    if let Some(path) = path {
        let mut meta = meta;
        meta["output"] = json!(path);
        meta["rows"] = json!(n);
        meta["raw_mass"] = json!(r.raw_mass);
        print_json(meta)?;
    }
    Ok(())
}

fn recover(a: RecoverArgs, cfg: &RunConfig) -> Result<(), CliError> {
    let k = load_kappa(&a.kappa)?;
    let grid = parse_grid(&a.grid)?;
    let d = RecoveryConfig::default();
    let rcfg = RecoveryConfig {
        eps_schedule: eps_schedule(a.eps, cfg, d.eps_schedule)?,
        chunk: a.chunk.or(cfg.chunk).unwrap_or(d.chunk),
        tracking_tol: cfg.tracking_tol.unwrap_or(d.tracking_tol),
        check_admissible: !a.skip_admissibility,
        admissibility: admissibility_config(None, false, cfg)?,
    };
    let r = recover_measure(&PhiPoly::new(k.clone()), &grid, &rcfg)?;
    density_output(&r, a.output.as_deref(), json!({ "kappa": k.as_slice(), "grid": grid, "config": rcfg }))
}

fn freeness(cmd: FreenessCmd, cfg: &RunConfig) -> Result<(), CliError> {
    match cmd {
        FreenessCmd::Check { coeffs, cumulants, tol } => {
            let cp: CoeffPair = load("coefficients", &coeffs)?;
            let cums = load_kappa_list(&cumulants)?;
            let tol = tol.or(cfg.tol).unwrap_or(SearchConfig::default().tol);
            check_positive("tol", tol)?;
            print_json(json!(check_freeness(&cp, &cums, tol)?))?;
        }
        FreenessCmd::Solve { coeffs, m_max, tol } => {
            let cp: CoeffPair = load("coefficients", &coeffs)?;
            let d = SearchConfig::default();
            let scfg = SearchConfig {
                initial_scale: cfg.initial_scale.unwrap_or(d.initial_scale),
                max_halvings: cfg.max_halvings.unwrap_or(d.max_halvings),
                tol: tol.or(cfg.tol).unwrap_or(d.tol),
                admissibility: admissibility_config(None, false, cfg)?,
            };
            check_positive("tol", scfg.tol)?;
            let m_max = m_max.or(cfg.m_max).unwrap_or(DEFAULT_M_MAX);
            let family = construct_free_family(&cp, m_max, &scfg)?;
            let report = match &family {
                Some(f) => Some(check_freeness(&cp, f, scfg.tol)?),
                None => None,
            };
            print_json(json!({ "family": family, "report": report, "m_max": m_max, "config": scfg }))?;
        }
    }
    Ok(())
}

fn lambda(cmd: LambdaCmd, cfg: &RunConfig) -> Result<(), CliError> {
    match cmd {
        LambdaCmd::Classify { coeffs, max_odd } => {
            let cp: CoeffPair = load("coefficients", &coeffs)?;
            let max_odd = max_odd.or(cfg.max_odd).unwrap_or(DEFAULT_MAX_ODD);
            print_json(json!(classify(&cp, max_odd)?))?;
        }
    }
    Ok(())
}

fn gallery_case(a: &GalleryArgs) -> Result<GalleryCase, CliError> {
    fn need<T>(v: Option<T>, name: &str, case: &str) -> Result<T, CliError> {
        v.ok_or_else(|| CliError::Validation(format!("--{name} is required for the {case} case")))
    }
    Ok(match a.case {
        Case::Semicircular => GalleryCase::Semicircular,
        Case::Constant => GalleryCase::Constant,
        Case::Stable => GalleryCase::Stable { alpha: need(a.alpha, "alpha", "stable")?, rho: a.rho.unwrap_or(0.5) },
        Case::StableIndexOne => GalleryCase::StableIndexOne { rho: a.rho.unwrap_or(0.5) },
        Case::Log => GalleryCase::Log { eps: need(a.eps, "eps", "log")? },
        Case::PerturbedStable => GalleryCase::PerturbedStable {
            alpha: need(a.alpha, "alpha", "perturbed-stable")?,
            eps: need(a.eps, "eps", "perturbed-stable")?,
        },
        Case::Moment => GalleryCase::Moment { m: need(a.m, "m", "moment")?, eps: need(a.eps, "eps", "moment")? },
    })
}

fn gallery(a: GalleryArgs) -> Result<(), CliError> {
    let cp: CoeffPair = load("coefficients", &a.coeffs)?;
    let phi = gallery_phi(gallery_case(&a)?)?;
    let zs: Vec<Complex64> = GALLERY_RADII
        .iter()
        .flat_map(|&r| (1..6).map(move |k| Complex64::from_polar(r, k as f64 * PI / 6.0)))
        .collect();
    let residual = identity_residual(&cp, |z| phi.eval(z), &zs)?;
    print_json(json!({
        "case": phi.case(),
        "coeffs": cp,
        "residual": residual,
        "radii": GALLERY_RADII,
        "angles_over_pi": [1.0 / 6.0, 2.0 / 6.0, 3.0 / 6.0, 4.0 / 6.0, 5.0 / 6.0],
    }))?;
    Ok(())
}

fn convolve(a: ConvolveArgs, cfg: &RunConfig) -> Result<(), CliError> {
    let mu1: Measure = load("mu1", &a.mu1)?;
    let mu2: Measure = load("mu2", &a.mu2)?;
    let grid = parse_grid(&a.grid)?;
    let d = ConvolutionConfig::default();
    let ccfg = ConvolutionConfig {
        eps_schedule: eps_schedule(a.eps, cfg, d.eps_schedule)?,
        chunk: a.chunk.or(cfg.chunk).unwrap_or(d.chunk),
        tol: a.tol.or(cfg.tol).unwrap_or(d.tol),
        max_iter: a.max_iter.or(cfg.max_iter).unwrap_or(d.max_iter),
    };
    check_positive("tol", ccfg.tol)?;
    let r = free_convolve(&mu1, &mu2, &grid, &ccfg)?;
    density_output(&r, a.output.as_deref(), json!({ "grid": grid, "config": ccfg }))
}
