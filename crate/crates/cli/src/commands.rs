//! Subcommand implementations: each builds the model from the config,
//! runs one experiment class, and writes artifacts plus a manifest.

use std::collections::BTreeMap;
use std::path::Path;
use std::time::Instant;

use num_complex::Complex64;
use serde_json::json;

use latticeq::analysis::{
    borel_scaling_check, combes_thomas_check, localization_contrast_report, spectral_distance,
    ContrastModel,
};
use latticeq::eigenfunctions::{
    growth_profile, make_transverse_solution, make_trimmed_transverse_wave, make_trimmed_wave,
    recurrence_solution_1d, validate_generalized_eigenfunction, Evaluator,
};
use latticeq::error::Error;
use latticeq::io::{
    write_borel_report_csv, write_contrast_csv, write_csv, write_ct_report_csv,
    write_moment_series_csv, write_potential_csv, write_profile_csv, write_svg_plot, SvgPlot,
};
use latticeq::lattice::LatticeBox;
use latticeq::numerics::{dense_eig, evolve, green_column_with, GreenOptions, WaveState};
use latticeq::operator::{assemble, SparseHamiltonian};
use latticeq::transport::{
    delocalization_certificate, moment_series, resolvent_lower_bound_check, GrowthWeight,
};

use crate::config::{ConstructionBlock, ExperimentConfig, Manifest};

type Notes = BTreeMap<String, serde_json::Value>;

pub fn dispatch(
    name: &str,
    cfg: &ExperimentConfig,
    out: &Path,
    threads: usize,
) -> Result<(), Error> {
    let start = Instant::now();
    let mut notes = Notes::new();
    match name {
        "spectrum" => cmd_spectrum(cfg, out, &mut notes)?,
        "evolve" => cmd_evolve(cfg, out, &mut notes)?,
        "moments" => cmd_moments(cfg, out, &mut notes)?,
        "green" => cmd_green(cfg, out, &mut notes)?,
        "eigenfun" => cmd_eigenfun(cfg, out, &mut notes)?,
        "ct-check" => cmd_ct_check(cfg, out, &mut notes)?,
        "borel" => cmd_borel(cfg, out, &mut notes)?,
        "contrast" => cmd_contrast(cfg, out, &mut notes)?,
        "certify" => cmd_certify(cfg, out, &mut notes)?,
        other => return Err(Error::config(format!("unknown subcommand {other}"))),
    }
    let mut timings = BTreeMap::new();
    timings.insert("total".to_string(), start.elapsed().as_secs_f64());
    let manifest = Manifest {
        tool_version: env!("CARGO_PKG_VERSION").to_string(),
        subcommand: name.to_string(),
        config: cfg.clone(),
        threads,
        timings_seconds: timings,
        notes,
    };
    let manifest_json = serde_json::to_string_pretty(&manifest)
        .map_err(|e| Error::config(format!("manifest serialization: {e}")))?;
    std::fs::write(out.join("manifest.json"), manifest_json)
        .map_err(|e| Error::config(format!("cannot write manifest: {e}")))?;
    Ok(())
}

fn build_hamiltonian(cfg: &ExperimentConfig, realization: u64) -> Result<SparseHamiltonian, Error> {
    let boxref = cfg.boxref()?;
    let pot = cfg.potential(realization)?;
    assemble(&boxref, &pot)
}

fn build_construction(
    cfg: &ExperimentConfig,
    block: &ConstructionBlock,
) -> Result<(Box<dyn Evaluator>, f64), Error> {
    let pattern = cfg.pattern()?;
    match block {
        ConstructionBlock::PlaneWave { k, kappa } => {
            let w = make_trimmed_wave(&pattern, k, kappa)?;
            let e = w.energy();
            Ok((Box::new(w), e))
        }
        ConstructionBlock::Transverse { k, free_energy, resolution } => {
            let w = make_trimmed_transverse_wave(&pattern, k, *free_energy, *resolution)?;
            let e = w.energy();
            Ok((Box::new(w), e))
        }
        ConstructionBlock::Recurrence { energy } => {
            if cfg.model.dim != 1 {
                return Err(Error::config(
                    "construction.kind = recurrence requires model.dim = 1",
                ));
            }
            let reach = cfg.model.box_radius + 2;
            let pot = cfg.potential(0)?;
            let e = *energy;
            let sol = recurrence_solution_1d(e, move |n| pot.value_at(&[n]), reach, 1.0, e / 2.0);
            Ok((Box::new(sol), e))
        }
    }
}

fn cmd_spectrum(cfg: &ExperimentConfig, out: &Path, notes: &mut Notes) -> Result<(), Error> {
    let h = build_hamiltonian(cfg, 0)?;
    let window_only = cfg.spectrum.as_ref().map(|s| s.window_only).unwrap_or(false);
    let (lo, hi) = h.spectrum_window();
    notes.insert("spectrum_window".into(), json!([lo, hi]));
    if window_only {
        write_csv(
            &out.join("spectrum.csv"),
            &["bound", "value"],
            &[
                vec!["lo".into(), lo.to_string()],
                vec!["hi".into(), hi.to_string()],
            ],
        )?;
        return Ok(());
    }
    let eig = dense_eig(&h, cfg.caps.dense_cap)?;
    let rows: Vec<Vec<String>> = eig
        .values
        .iter()
        .enumerate()
        .map(|(i, v)| vec![i.to_string(), v.to_string()])
        .collect();
    write_csv(&out.join("spectrum.csv"), &["index", "eigenvalue"], &rows)?;
    notes.insert("eigenvalue_min".into(), json!(eig.values.first()));
    notes.insert("eigenvalue_max".into(), json!(eig.values.last()));
    Ok(())
}

fn cmd_evolve(cfg: &ExperimentConfig, out: &Path, notes: &mut Notes) -> Result<(), Error> {
    let block = cfg
        .evolve
        .as_ref()
        .ok_or_else(|| Error::config("missing required block: evolve"))?;
    let obs = cfg
        .observable
        .as_ref()
        .ok_or_else(|| Error::config("missing required block: observable"))?;
    let h = build_hamiltonian(cfg, 0)?;
    let psi0 = WaveState::delta(h.grid().clone(), &obs.base_site)
        .ok_or_else(|| Error::config("observable.base_site is outside the box"))?;
    let tol = cfg.tolerances.evolve_tol;
    for (i, &t) in block.times.iter().enumerate() {
        let psi = evolve(&h, &psi0, t, tol)?;
        let d = h.dim();
        let mut header: Vec<String> = (1..=d).map(|a| format!("n{a}")).collect();
        header.push("prob".into());
        let header_refs: Vec<&str> = header.iter().map(|s| s.as_str()).collect();
        let rows: Vec<Vec<String>> = (0..h.site_count())
            .map(|idx| {
                let mut row: Vec<String> = h
                    .grid()
                    .site_at(idx)
                    .iter()
                    .map(|c| c.to_string())
                    .collect();
                row.push(psi.data[idx].norm_sqr().to_string());
                row
            })
            .collect();
        write_csv(&out.join(format!("evolve_{i:03}.csv")), &header_refs, &rows)?;
    }
    notes.insert("times".into(), json!(block.times));
    Ok(())
}

fn cmd_moments(cfg: &ExperimentConfig, out: &Path, notes: &mut Notes) -> Result<(), Error> {
    let obs = cfg
        .observable
        .as_ref()
        .ok_or_else(|| Error::config("missing required block: observable"))?;
    let weight = cfg.weight()?;
    let t_grid = cfg.t_grid()?;
    let routes = cfg
        .route
        .ok_or_else(|| Error::config("missing required field: route"))?
        .routes();
    let opts = cfg.moment_options();
    let mut plot_series = Vec::new();
    for realization in 0..cfg.model.realizations {
        let h = build_hamiltonian(cfg, realization)?;
        for route in &routes {
            let series = moment_series(&h, &weight, &obs.base_site, &t_grid, *route, &opts)?;
            let suffix = if cfg.model.realizations > 1 {
                format!("_{realization}")
            } else {
                String::new()
            };
            write_moment_series_csv(
                &out.join(format!("moments_{}{suffix}.csv", route.name())),
                &series,
            )?;
            plot_series.push((
                format!("{}{suffix}", route.name()),
                t_grid
                    .iter()
                    .zip(&series.values)
                    .map(|(&t, v)| (t, v.value))
                    .collect::<Vec<_>>(),
            ));
        }
    }
    if cfg.output.svg {
        write_svg_plot(
            &out.join("moments.svg"),
            &SvgPlot {
                title: "transport moments",
                x_label: "T",
                y_label: "moment",
                log_x: true,
                log_y: true,
                series: plot_series,
            },
        )?;
    }
    notes.insert("t_grid".into(), json!(t_grid));
    Ok(())
}

fn cmd_green(cfg: &ExperimentConfig, out: &Path, notes: &mut Notes) -> Result<(), Error> {
    let block = cfg
        .green
        .as_ref()
        .ok_or_else(|| Error::config("missing required block: green"))?;
    let h = build_hamiltonian(cfg, 0)?;
    let z = Complex64::new(block.z_re, block.z_im);
    let gopts = GreenOptions { dense_cap: cfg.caps.dense_cap, ..Default::default() };
    let col = green_column_with(&h, z, &block.source, cfg.tolerances.solve_tol, &gopts)?;
    let d = h.dim();
    let mut header: Vec<String> = (1..=d).map(|a| format!("n{a}")).collect();
    header.extend(["re".into(), "im".into(), "abs".into()]);
    let header_refs: Vec<&str> = header.iter().map(|s| s.as_str()).collect();
    let rows: Vec<Vec<String>> = (0..h.site_count())
        .map(|i| {
            let mut row: Vec<String> = h
                .grid()
                .site_at(i)
                .iter()
                .map(|c| c.to_string())
                .collect();
            let v = col.values[i];
            row.extend([v.re.to_string(), v.im.to_string(), v.norm().to_string()]);
            row
        })
        .collect();
    write_csv(&out.join("green.csv"), &header_refs, &rows)?;
    notes.insert("residual_norm".into(), json!(col.residual_norm));
    Ok(())
}

fn cmd_eigenfun(cfg: &ExperimentConfig, out: &Path, notes: &mut Notes) -> Result<(), Error> {
    let block = cfg
        .eigenfun
        .as_ref()
        .ok_or_else(|| Error::config("missing required block: eigenfun"))?;
    let h = build_hamiltonian(cfg, 0)?;
    let (wave, energy) = build_construction(cfg, &block.construction)?;
    let residual = validate_generalized_eigenfunction(&h, wave.as_ref(), energy);
    notes.insert("energy".into(), json!(energy));
    notes.insert("residual".into(), json!(residual));
    let base = cfg
        .observable
        .as_ref()
        .map(|o| o.base_site.clone())
        .unwrap_or_else(|| vec![0; cfg.model.dim]);
    if let Some(q) = block.weight_q {
        let weight = GrowthWeight::power(q, base.clone())?;
        let profile = growth_profile(wave.as_ref(), &weight, &base, block.profile_l_max)?;
        write_profile_csv(&out.join("profile.csv"), &profile)?;
        if cfg.output.svg {
            write_svg_plot(
                &out.join("profile.svg"),
                &SvgPlot {
                    title: "weighted box sums",
                    x_label: "L",
                    y_label: "sum |psi|^2 / phi",
                    log_x: true,
                    log_y: true,
                    series: vec![(
                        "measured".to_string(),
                        profile
                            .radii
                            .iter()
                            .zip(&profile.weighted_box)
                            .map(|(&l, &s)| (l as f64, s))
                            .collect(),
                    )],
                },
            )?;
        }
        notes.insert("fitted_nu".into(), json!(profile.fitted_nu));
        notes.insert("fitted_a".into(), json!(profile.fitted_a));
        notes.insert("fit_residual".into(), json!(profile.fit_residual));
    }
    Ok(())
}

fn cmd_ct_check(cfg: &ExperimentConfig, out: &Path, notes: &mut Notes) -> Result<(), Error> {
    let block = cfg
        .ct_check
        .as_ref()
        .ok_or_else(|| Error::config("missing required block: ct_check"))?;
    let h = build_hamiltonian(cfg, 0)?;
    let z = Complex64::new(block.z_re, block.z_im);
    let delta = spectral_distance(&h, z, Some(cfg.caps.dense_cap))?;
    let report = combes_thomas_check(&h, z, &block.source, delta, cfg.tolerances.solve_tol)?;
    write_ct_report_csv(&out.join("ct_check.csv"), &report)?;
    if cfg.output.svg {
        write_svg_plot(
            &out.join("ct_check.svg"),
            &SvgPlot {
                title: "off-spectrum Green decay",
                x_label: "sup distance",
                y_label: "max |G|",
                log_x: false,
                log_y: true,
                series: vec![
                    (
                        "measured".to_string(),
                        report
                            .per_distance
                            .iter()
                            .filter(|(_, g, _)| *g > 0.0)
                            .map(|&(s, g, _)| (s as f64, g))
                            .collect(),
                    ),
                    (
                        "bound".to_string(),
                        report
                            .per_distance
                            .iter()
                            .map(|&(s, _, thr)| (s as f64, thr))
                            .collect(),
                    ),
                ],
            },
        )?;
    }
    notes.insert("delta".into(), json!(report.delta));
    notes.insert("c_used".into(), json!(report.c_used));
    notes.insert("fitted_rate".into(), json!(report.fitted_rate));
    notes.insert("violations".into(), json!(report.violations.len()));
    Ok(())
}

fn cmd_borel(cfg: &ExperimentConfig, out: &Path, notes: &mut Notes) -> Result<(), Error> {
    let block = cfg
        .borel
        .as_ref()
        .ok_or_else(|| Error::config("missing required block: borel"))?;
    let h = build_hamiltonian(cfg, 0)?;
    let (wave, energy) = build_construction(cfg, &block.construction)?;
    let report = borel_scaling_check(
        &h,
        wave.as_ref(),
        energy,
        &block.site,
        &block.gammas,
        &block.alphas,
        &block.epsilons,
        cfg.tolerances.solve_tol,
    )?;
    write_borel_report_csv(&out.join("borel.csv"), &report)?;
    let all_ok = report.rows.iter().all(|r| r.ok);
    notes.insert("all_nodes_hold".into(), json!(all_ok));
    notes.insert("psi_sq".into(), json!(report.psi_sq));
    Ok(())
}

fn cmd_contrast(cfg: &ExperimentConfig, out: &Path, notes: &mut Notes) -> Result<(), Error> {
    let block = cfg
        .contrast
        .as_ref()
        .ok_or_else(|| Error::config("missing required block: contrast"))?;
    let obs = cfg
        .observable
        .as_ref()
        .ok_or_else(|| Error::config("missing required block: observable"))?;
    let width = match &cfg.model.potential {
        crate::config::PotentialBlock::IidUniform { width, .. } => *width,
        _ => {
            return Err(Error::config(
                "contrast requires model.potential.kind = iid_uniform",
            ))
        }
    };
    let seed = match &cfg.model.potential {
        crate::config::PotentialBlock::IidUniform { seed, .. } => *seed,
        _ => unreachable!(),
    };
    let trimmed = ContrastModel {
        label: "trimmed".to_string(),
        boxref: cfg.boxref()?,
        pattern: cfg.pattern()?,
        disorder_width: width,
        seed,
        base: obs.base_site.clone(),
    };
    let reference = ContrastModel {
        label: "reference".to_string(),
        boxref: LatticeBox::centered(block.reference_dim, block.reference_box_radius)?,
        pattern: latticeq::lattice::TrimPattern::full(block.reference_dim),
        disorder_width: block.reference_width,
        seed: block.reference_seed,
        base: vec![0; block.reference_dim],
    };
    let t_grid = cfg.t_grid()?;
    let report = localization_contrast_report(
        &trimmed,
        &reference,
        block.q,
        &t_grid,
        cfg.model.realizations,
        (block.delocalized_threshold, block.localized_threshold),
        block.fit_window,
        &cfg.moment_options(),
    )?;
    write_contrast_csv(&out.join("contrast.csv"), &report)?;
    notes.insert("trimmed_delocalized".into(), json!(report.trimmed_delocalized));
    notes.insert("reference_localized".into(), json!(report.reference_localized));
    Ok(())
}

fn cmd_certify(cfg: &ExperimentConfig, out: &Path, notes: &mut Notes) -> Result<(), Error> {
    let block = cfg
        .certify
        .as_ref()
        .ok_or_else(|| Error::config("missing required block: certify"))?;
    let obs = cfg
        .observable
        .as_ref()
        .ok_or_else(|| Error::config("missing required block: observable"))?;
    let h = build_hamiltonian(cfg, 0)?;
    let (wave, energy) = build_construction(cfg, &block.construction)?;
    let residual = validate_generalized_eigenfunction(&h, wave.as_ref(), energy);
    let weight = cfg.weight()?;
    let profile = growth_profile(wave.as_ref(), &weight, &obs.base_site, block.profile_l_max)?;
    let psi0 = wave.value(&obs.base_site).norm();
    let cert = delocalization_certificate(&profile, psi0, block.alpha)?;
    let opts = cfg.moment_options();
    let mut rows = Vec::new();
    for &eps in &block.epsilons {
        let check = resolvent_lower_bound_check(
            &h,
            &weight,
            wave.as_ref(),
            energy,
            &obs.base_site,
            &cert,
            eps,
            &opts,
        )?;
        rows.push(vec![
            eps.to_string(),
            check.lhs.to_string(),
            check.rhs.to_string(),
            check.window_radius.to_string(),
            check.s_boundary.to_string(),
            (check.s_gate_ok as u8).to_string(),
            (check.ok as u8).to_string(),
        ]);
    }
    write_csv(
        &out.join("certify.csv"),
        &["eps", "lhs", "rhs", "window_radius", "s_boundary", "s_gate_ok", "ok"],
        &rows,
    )?;
    notes.insert("energy".into(), json!(energy));
    notes.insert("residual".into(), json!(residual));
    notes.insert("fitted_nu".into(), json!(cert.nu));
    notes.insert("fitted_a".into(), json!(cert.a));
    Ok(())
}

// keep the unused-construction helper honest for spectrum-only configs
#[allow(dead_code)]
fn unused_transverse_probe() {
    let _ = make_transverse_solution;
    let _ = write_potential_csv;
}
