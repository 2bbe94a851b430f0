//! The experiment runners: each consumes its effective config, writes CSVs
//! and one gnuplot script per figure-style output, and finishes with the
//! manifest. Results are assembled by cell index, never by completion
//! order, so worker count cannot change any byte of the output.

use std::path::Path;

use anyhow::{anyhow, Result};

use scmap::circles::{crossing_witness, solve_circle, turnstile_band, CircleParam};
use scmap::map::{run_trajectory_at, seed_grid, Grid2D, SCParams, SCState};
use scmap::nform::{self, solve_homological, FixedPointKind};
use scmap::orbits::{
    build_spo_seed, closure_residual, find_orbit_pair, kappa_oscillation, newton_spo, SPOState,
};
use scmap::transport::{escape_scan, horn_boundary, EscapeCriterion};

use crate::config::{
    CirclesConfig, EscapeConfig, ExperimentConfig, HornConfig, NformConfig, SpoConfig,
    TrajectoryConfig,
};
use crate::output::{fmt_f64, OutputDir};

pub fn run(cfg: &ExperimentConfig, out_dir: &Path) -> Result<()> {
    let mut out = OutputDir::create(out_dir)?;
    let result = match cfg {
        ExperimentConfig::Trajectory(c) => run_trajectory_kind(c, &mut out),
        ExperimentConfig::Escape(c) => run_escape(c, &mut out),
        ExperimentConfig::Horn(c) => run_horn(c, &mut out),
        ExperimentConfig::Circles(c) => run_circles(c, &mut out),
        ExperimentConfig::Spo(c) => run_spo(c, &mut out),
        ExperimentConfig::Nform(c) => run_nform(c, &mut out),
    };
    // Partial outputs are retained on failure, with a marker recording why.
    if let Err(err) = &result {
        out.write("failure.txt", &format!("experiment failed: {err:#}\n"))?;
    }
    out.write_manifest(cfg.kind().section(), &cfg.echo())?;
    result
}

fn run_trajectory_kind(c: &TrajectoryConfig, out: &mut OutputDir) -> Result<()> {
    let grid = Grid2D::new([c.x_lo, c.x_hi], [c.y_lo, c.y_hi], c.nx, c.ny)?;
    let seeds = seed_grid(&grid);
    let state = SCState::new(
        seeds.iter().map(|p| p.x).collect(),
        seeds.iter().map(|p| p.y).collect(),
        c.kappa0,
        c.theta0,
    );
    let params = SCParams::uniform(state.len(), c.gamma, c.omega);
    let (trace, snapshots) = run_trajectory_at(&state, &params, c.steps, &c.snapshots)?;

    let rows: Vec<Vec<String>> = trace
        .n
        .iter()
        .zip(trace.kappa.iter().zip(&trace.dtheta))
        .map(|(&n, (&k, &dt))| vec![n.to_string(), fmt_f64(k), fmt_f64(dt)])
        .collect();
    out.write_csv("trace.csv", &["n", "kappa", "dtheta"], &rows)?;

    let mut snap_names = Vec::new();
    for snap in &snapshots {
        let name = format!("snapshot_{:06}.csv", snap.n);
        let rows: Vec<Vec<String>> = (0..snap.x.len())
            .map(|k| {
                vec![snap.n.to_string(), k.to_string(), fmt_f64(snap.x[k]), fmt_f64(snap.y[k])]
            })
            .collect();
        out.write_csv(&name, &["n", "k", "x", "y"], &rows)?;
        snap_names.push(name);
    }

    let mut plot = String::from(
        "# Mean-field trace. Usage: gnuplot trace.gp\n\
         set datafile separator ','\n\
         set terminal pngcairo size 1000,700\n\
         set output 'trace.png'\n\
         set multiplot layout 2,1\n\
         set logscale y\n\
         set xlabel 'n'\n\
         set ylabel 'kappa'\n\
         plot 'trace.csv' skip 1 using 1:2 with lines title 'kappa'\n\
         unset logscale\n\
         set ylabel 'dtheta'\n\
         plot 'trace.csv' skip 1 using 1:3 with lines title 'dtheta'\n\
         unset multiplot\n",
    );
    out.write("trace.gp", &plot)?;

    plot = String::from(
        "# Oscillator snapshots. Usage: gnuplot snapshots.gp\n\
         set datafile separator ','\n\
         set terminal pngcairo size 1600,400\n\
         set output 'snapshots.png'\n\
         set xlabel 'x'\n\
         set ylabel 'y'\n",
    );
    plot.push_str(&format!("set multiplot layout 1,{}\n", snap_names.len().max(1)));
    for name in &snap_names {
        plot.push_str(&format!(
            "plot '{name}' skip 1 using 3:4 with dots notitle\n"
        ));
    }
    plot.push_str("unset multiplot\n");
    out.write("snapshots.gp", &plot)?;
    Ok(())
}

fn run_escape(c: &EscapeConfig, out: &mut OutputDir) -> Result<()> {
    let grid = Grid2D::new([0.0, std::f64::consts::TAU], [0.0, c.y_max], c.nx, c.ny)?;
    let crit = EscapeCriterion { y_m: c.y_max, ell: c.ell, max_iters: c.max_iters };
    let scan = escape_scan(&c.kappa_bar, &c.delta_kappa, &grid, &crit);
    let rows: Vec<Vec<String>> = scan
        .iter()
        .map(|(kbar, dk, &percent)| vec![fmt_f64(kbar), fmt_f64(dk), fmt_f64(percent)])
        .collect();
    out.write_csv("escape.csv", &["kappa_bar", "delta_kappa", "percent"], &rows)?;

    let plot = "# Escape fraction curves, colored by the mean perturbation.\n\
         # Usage: gnuplot escape.gp\n\
         set datafile separator ','\n\
         set terminal pngcairo size 900,650\n\
         set output 'escape.png'\n\
         set xlabel 'delta kappa'\n\
         set ylabel 'escaped (%)'\n\
         set cblabel 'mean kappa'\n\
         plot 'escape.csv' skip 1 using 2:3:1 with points pt 7 palette notitle\n"
        .to_string();
    out.write("escape.gp", &plot)?;
    Ok(())
}

fn run_horn(c: &HornConfig, out: &mut OutputDir) -> Result<()> {
    let grid = Grid2D::new([0.0, std::f64::consts::TAU], [0.0, c.y_max], c.nx, c.ny)?;
    let crit = EscapeCriterion { y_m: c.y_max, ell: c.ell, max_iters: c.max_iters };
    let points = horn_boundary(&c.kappa1, &crit, &grid, c.tol);
    let rows: Vec<Vec<String>> = points
        .iter()
        .map(|pt| {
            vec![
                fmt_f64(pt.kappa1),
                pt.kappa2_min.map(fmt_f64).unwrap_or_else(|| "censored".to_string()),
                c.ell.to_string(),
                c.max_iters.to_string(),
            ]
        })
        .collect();
    out.write_csv("horn.csv", &["kappa1", "kappa2_min", "ell", "iters"], &rows)?;

    let plot = "# Horn boundary. Usage: gnuplot horn.gp\n\
         set datafile separator ','\n\
         set terminal pngcairo size 700,700\n\
         set output 'horn.png'\n\
         set xlabel 'kappa 1'\n\
         set ylabel 'kappa 2'\n\
         set key left top\n\
         # The boundary and its mirror image across the diagonal.\n\
         plot 'horn.csv' skip 1 using 1:2 with linespoints title 'boundary', \\\n\
              'horn.csv' skip 1 using 2:1 with linespoints title 'mirrored'\n"
        .to_string();
    out.write("horn.gp", &plot)?;
    Ok(())
}

fn circle_csv(out: &mut OutputDir, name: &str, circle: &CircleParam) -> Result<()> {
    let n = 2048;
    let rows: Vec<Vec<String>> = (0..n)
        .map(|i| {
            let theta = std::f64::consts::TAU * i as f64 / n as f64;
            let (x, y) = circle.embed(theta);
            vec![fmt_f64(theta), fmt_f64(scmap::map::wrap_angle(x)), fmt_f64(y)]
        })
        .collect();
    out.write_csv(name, &["theta", "x", "y"], &rows)
}

fn run_circles(c: &CirclesConfig, out: &mut OutputDir) -> Result<()> {
    let c1 = solve_circle(c.kappa1, c.omega, c.max_modes, c.tol, None)
        .map_err(|e| anyhow!("circle at kappa1: {e}"))?;
    let c2 = solve_circle(c.kappa2, c.omega, c.max_modes, c.tol, None)
        .map_err(|e| anyhow!("circle at kappa2: {e}"))?;
    circle_csv(out, "circle_kappa1.csv", &c1)?;
    circle_csv(out, "circle_kappa2.csv", &c2)?;

    for (name, circle) in [("coeffs_kappa1.csv", &c1), ("coeffs_kappa2.csv", &c2)] {
        let rows: Vec<Vec<String>> = circle
            .fourier_coeffs()
            .iter()
            .map(|&(j, re, im)| vec![j.to_string(), fmt_f64(re), fmt_f64(im)])
            .collect();
        out.write_csv(name, &["j", "re", "im"], &rows)?;
    }

    let band = turnstile_band(c.kappa1, c.kappa2, c.omega, c.max_modes, c.tol)
        .map_err(|e| anyhow!("band: {e}"))?;
    let rows: Vec<Vec<String>> = (0..band.x.len())
        .map(|i| vec![fmt_f64(band.x[i]), fmt_f64(band.y_lower[i]), fmt_f64(band.y_upper[i])])
        .collect();
    out.write_csv("band.csv", &["x", "y_lower", "y_upper"], &rows)?;

    let witness = crossing_witness(c.kappa1, c.kappa2, c.omega, c.witness_iters)
        .map_err(|e| anyhow!("witness: {e}"))?;
    let rows: Vec<Vec<String>> = match &witness {
        Some(w) => w
            .path
            .iter()
            .enumerate()
            .map(|(i, p)| vec![i.to_string(), fmt_f64(p.x), fmt_f64(p.y)])
            .collect(),
        None => Vec::new(),
    };
    out.write_csv("witness.csv", &["i", "x", "y"], &rows)?;

    let plot = "# Instantaneous circles, turnstile band and witness orbit.\n\
         # Usage: gnuplot circles.gp\n\
         set datafile separator ','\n\
         set terminal pngcairo size 900,650\n\
         set output 'circles.png'\n\
         set xlabel 'x'\n\
         set ylabel 'y'\n\
         set key left top\n\
         plot 'band.csv' skip 1 using 1:2:3 with filledcurves fc rgb '#dddddd' title 'band', \\\n\
              'circle_kappa1.csv' skip 1 using 2:3 with dots title 'kappa1 circle', \\\n\
              'circle_kappa2.csv' skip 1 using 2:3 with dots title 'kappa2 circle', \\\n\
              'witness.csv' skip 1 using 2:3 with points pt 7 ps 0.3 title 'witness'\n"
        .to_string();
    out.write("circles.gp", &plot)?;
    Ok(())
}

fn spo_state_dump(spo: &SPOState) -> String {
    use std::fmt::Write as _;
    let mut text = String::new();
    let _ = writeln!(text, "{{");
    let _ = writeln!(text, "  \"p\": {},", spo.p);
    let _ = writeln!(text, "  \"q\": {},", spo.q);
    let _ = writeln!(text, "  \"gamma\": {},", fmt_f64(spo.gamma));
    let _ = writeln!(text, "  \"omega\": {},", fmt_f64(spo.omega));
    let _ = writeln!(text, "  \"kappa0\": {},", fmt_f64(spo.state.kappa));
    let _ = writeln!(text, "  \"theta0\": {},", fmt_f64(spo.state.theta));
    let xs: Vec<String> = spo.state.x.iter().map(|&v| fmt_f64(v)).collect();
    let ys: Vec<String> = spo.state.y.iter().map(|&v| fmt_f64(v)).collect();
    let _ = writeln!(text, "  \"x\": [{}],", xs.join(", "));
    let _ = writeln!(text, "  \"y\": [{}]", ys.join(", "));
    let _ = writeln!(text, "}}");
    text
}

fn run_spo(c: &SpoConfig, out: &mut OutputDir) -> Result<()> {
    let branches: Vec<(&str, bool)> = match c.branch.as_str() {
        "elliptic" => vec![("elliptic", false)],
        "hyperbolic" => vec![("hyperbolic", true)],
        "both" => vec![("elliptic", false), ("hyperbolic", true)],
        other => return Err(anyhow!("unknown branch selector `{other}`")),
    };
    let nf = solve_homological(c.p, c.q as i64, c.nform_order)
        .map_err(|e| anyhow!("normal form: {e}"))?;

    let mut rows = Vec::new();
    let mut last_state_dump = String::new();
    for (label, hyperbolic) in &branches {
        let kind =
            if *hyperbolic { FixedPointKind::Hyperbolic } else { FixedPointKind::Elliptic };
        let mut kappa0 = c.kappa0_min;
        while kappa0 <= c.kappa0_max + 1e-12 {
            let gamma = c.alpha * kappa0;
            let (ell, hyp) = find_orbit_pair(kappa0, c.theta0, c.p, c.q)
                .map_err(|e| anyhow!("orbit at kappa0 = {kappa0}: {e}"))?;
            let orbit = if *hyperbolic { hyp } else { ell };
            let seed = build_spo_seed(&orbit, kappa0, c.theta0);
            let spo = newton_spo(&seed, gamma, c.q, scmap::orbits::NEWTON_TOL)
                .map_err(|e| anyhow!("closure at kappa0 = {kappa0}: {e}"))?;
            let residual = closure_residual(&spo).map_err(|e| anyhow!("{e}"))?;
            let omega_nf = nform::omega_relation(&nf, kind).eval(c.alpha, kappa0);
            let dk = kappa_oscillation(&spo).map_err(|e| anyhow!("{e}"))?;
            rows.push(vec![
                fmt_f64(gamma),
                fmt_f64(kappa0),
                fmt_f64(spo.omega),
                fmt_f64(residual),
                (*label).to_string(),
                c.p.to_string(),
                c.q.to_string(),
                fmt_f64(omega_nf),
                fmt_f64(dk),
            ]);
            last_state_dump = spo_state_dump(&spo);
            kappa0 += c.kappa0_step;
        }
    }
    out.write_csv(
        "branch.csv",
        &["gamma", "kappa0", "omega_solved", "residual", "type", "p", "q", "omega_nform", "delta_kappa"],
        &rows,
    )?;
    out.write("last_state.json", &last_state_dump)?;

    let plot = "# Drift relation along the branches. Usage: gnuplot spo.gp\n\
         set datafile separator ','\n\
         set terminal pngcairo size 900,650\n\
         set output 'spo.png'\n\
         set xlabel 'kappa0'\n\
         set ylabel 'Omega'\n\
         set key left top\n\
         plot 'branch.csv' skip 1 using (strcol(5) eq 'elliptic' ? $2 : NaN):3 \\\n\
                  with points pt 7 title 'elliptic (numeric)', \\\n\
              'branch.csv' skip 1 using (strcol(5) eq 'elliptic' ? $2 : NaN):8 \\\n\
                  with lines title 'elliptic (normal form)', \\\n\
              'branch.csv' skip 1 using (strcol(5) eq 'hyperbolic' ? $2 : NaN):3 \\\n\
                  with points pt 5 title 'hyperbolic (numeric)', \\\n\
              'branch.csv' skip 1 using (strcol(5) eq 'hyperbolic' ? $2 : NaN):8 \\\n\
                  with lines title 'hyperbolic (normal form)'\n"
        .to_string();
    out.write("spo.gp", &plot)?;
    Ok(())
}

fn run_nform(c: &NformConfig, out: &mut OutputDir) -> Result<()> {
    let nf = solve_homological(c.p, c.q, c.order).map_err(|e| anyhow!("{e}"))?;
    out.write("report.txt", &nform::report(&nf))?;
    out.write("nform_dump.txt", &nform::dump(&nf))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::{build, Kind, RawConfig};

    #[test]
    fn nform_runner_writes_report_and_dump() {
        let dir = std::env::temp_dir().join("scmap_cli_nform_test");
        let _ = std::fs::remove_dir_all(&dir);
        let raw = RawConfig::default();
        let cfg = build(Kind::Nform, &raw).unwrap();
        run(&cfg, &dir).unwrap();
        let report = std::fs::read_to_string(dir.join("report.txt")).unwrap();
        assert!(report.contains("omega_elliptic"));
        let manifest = std::fs::read_to_string(dir.join("manifest.txt")).unwrap();
        assert!(manifest.contains("report.txt sha256="));
        let _ = std::fs::remove_dir_all(&dir);
    }
}
