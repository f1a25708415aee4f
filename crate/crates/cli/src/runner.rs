//! Run orchestration: integrate the configured system, stream diagnostics to
//! CSV, write text snapshots and binary checkpoints, and resume bitwise
//! identically from a checkpoint.

use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use mcps_core::dynamics::{Integrator, PotentialMode, SimState, StepRecord};

use crate::checkpoint;
use crate::config::RunConfig;
use crate::CliError;

/// One diagnostics row; the CSV column order matches the field order here.
pub struct DiagnosticsRow {
    pub t: f64,
    pub e_total: f64,
    pub e_h: f64,
    pub e_ch: f64,
    pub diss_phi: f64,
    pub diss_u: f64,
    /// Energy-identity defect accumulated since the previous row:
    /// `E_row - E_prev + sum_steps dt (diss_phi + diss_u)`. With
    /// `diagnostics_every = 1` this is the per-step residual.
    pub energy_residual: f64,
    pub mass: Vec<f64>,
    pub sum_violation: f64,
    pub min_phi: f64,
    pub max_phi: f64,
    /// Largest admissible separation threshold:
    /// `min(min_phi, (1 - max_phi)/(N-1))`.
    pub sep_delta: f64,
    pub u_l01_leak: f64,
    pub mean_w: Vec<f64>,
    /// NaN when a nonpositive grid value makes the exact entropy inapplicable.
    pub steady_residual: f64,
}

pub fn csv_header(n: usize) -> String {
    let mut cols = vec![
        "t".to_string(),
        "E_total".into(),
        "E_H".into(),
        "E_CH".into(),
        "diss_phi".into(),
        "diss_u".into(),
        "energy_residual".into(),
    ];
    for i in 1..=n {
        cols.push(format!("mass_{i}"));
    }
    cols.extend(
        [
            "sum_violation",
            "min_phi",
            "max_phi",
            "sep_delta",
            "u_l01_leak",
        ]
        .map(String::from),
    );
    for i in 1..=n {
        cols.push(format!("mean_w_{i}"));
    }
    cols.push("steady_residual".into());
    cols.join(",")
}

impl DiagnosticsRow {
    fn to_csv(&self) -> String {
        let mut f = Vec::new();
        f.push(self.t.to_string());
        f.push(self.e_total.to_string());
        f.push(self.e_h.to_string());
        f.push(self.e_ch.to_string());
        f.push(self.diss_phi.to_string());
        f.push(self.diss_u.to_string());
        f.push(self.energy_residual.to_string());
        for m in &self.mass {
            f.push(m.to_string());
        }
        f.push(self.sum_violation.to_string());
        f.push(self.min_phi.to_string());
        f.push(self.max_phi.to_string());
        f.push(self.sep_delta.to_string());
        f.push(self.u_l01_leak.to_string());
        for w in &self.mean_w {
            f.push(w.to_string());
        }
        f.push(self.steady_residual.to_string());
        f.join(",")
    }
}

pub struct RunOutcome {
    pub final_state: SimState,
    pub rows: Vec<DiagnosticsRow>,
    pub breakdown_events: u64,
    pub outdir: PathBuf,
}

fn build_row(
    it: &Integrator,
    state: &SimState,
    rec: Option<&StepRecord>,
    energy_residual: f64,
) -> Result<DiagnosticsRow, CliError> {
    let n = state.phi.n();
    let e = it.energy(&state.phi, &state.u, PotentialMode::Regularized)?;
    let min_phi = state.phi.min_value();
    let max_phi = state.phi.max_value();
    let steady = if min_phi > 0.0 {
        it.steady_residual(&state.phi, &state.u)?
    } else {
        f64::NAN
    };
    Ok(DiagnosticsRow {
        t: state.t,
        e_total: e.total,
        e_h: e.helfrich,
        e_ch: e.cahn_hilliard,
        diss_phi: rec.map_or(0.0, |r| r.diss_phi),
        diss_u: rec.map_or(0.0, |r| r.diss_u),
        energy_residual,
        mass: state.phi.means(),
        sum_violation: state.phi.sum_violation(),
        min_phi,
        max_phi,
        sep_delta: min_phi.min((1.0 - max_phi) / (n as f64 - 1.0)),
        u_l01_leak: state.u.low_mode_leak(),
        mean_w: rec.map_or(vec![0.0; n], |r| r.mean_w.clone()),
        steady_residual: steady,
    })
}

fn write_snapshot(
    path: &Path,
    it: &Integrator,
    state: &SimState,
) -> Result<(), CliError> {
    let grid = it.grid();
    let u_vals = grid.synthesize(state.u.field())?;
    let n = state.phi.n();
    let mut out = BufWriter::new(fs::File::create(path)?);
    writeln!(out, "# t = {}", state.t)?;
    writeln!(out, "# lmax = {}", it.basis().lmax())?;
    writeln!(out, "# grid = {} x {} (colatitude x longitude)", grid.nlat(), grid.nlon())?;
    write!(out, "# columns: colatitude longitude u")?;
    for i in 1..=n {
        write!(out, " phi_{i}")?;
    }
    writeln!(out)?;
    for i in 0..grid.nlat() {
        for j in 0..grid.nlon() {
            let idx = i * grid.nlon() + j;
            write!(out, "{} {} {}", grid.colatitude(i), grid.longitude(j), u_vals[idx])?;
            for c in 0..n {
                write!(out, " {}", state.phi.grid_values(c)[idx])?;
            }
            writeln!(out)?;
        }
    }
    Ok(())
}

/// Execute a configured run (or resume one) and write all artifacts.
pub fn run(
    config: &RunConfig,
    outdir_override: Option<PathBuf>,
    resume: Option<PathBuf>,
) -> Result<RunOutcome, CliError> {
    let params = config.to_model_params()?;
    let it = Integrator::new(params, config.discretization.lmax)?;
    let outdir = outdir_override.unwrap_or_else(|| config.output.outdir.clone());
    fs::create_dir_all(&outdir)?;

    let (mut state, resumed) = match &resume {
        Some(path) => {
            let loaded = checkpoint::load(path, it.basis(), it.grid())?;
            if loaded.config_hash != config.source_hash {
                return Err(CliError::Checkpoint(format!(
                    "{}: configuration hash mismatch (checkpoint {:016x}, config {:016x})",
                    path.display(),
                    loaded.config_hash,
                    config.source_hash
                )));
            }
            (loaded.state, true)
        }
        None => (
            it.initial_state(
                config.init.amplitude,
                config.init.l_init.max(1),
                config.init.margin,
                config.init.seed,
            )?,
            false,
        ),
    };

    let csv_path = outdir.join("diagnostics.csv");
    let append = resumed && csv_path.exists();
    let mut csv = BufWriter::new(if append {
        fs::OpenOptions::new().append(true).open(&csv_path)?
    } else {
        fs::File::create(&csv_path)?
    });
    if !append {
        writeln!(csv, "{}", csv_header(state.phi.n()))?;
    }

    let total_steps = config.total_steps();
    let dt = config.discretization.dt;
    let mut rows = Vec::new();
    let mut breakdown_events = 0u64;

    if !resumed {
        let row = build_row(&it, &state, None, 0.0)?;
        writeln!(csv, "{}", row.to_csv())?;
        rows.push(row);
        if config.output.snapshot_every > 0 {
            write_snapshot(&outdir.join(format!("snapshot_{:08}.txt", state.step)), &it, &state)?;
        }
        if config.output.checkpoint_every > 0 {
            checkpoint::save(
                &outdir.join(format!("checkpoint_{:08}.bin", state.step)),
                &state,
                config.source_hash,
            )?;
        }
    }

    let mut prev_energy = it
        .energy(&state.phi, &state.u, PotentialMode::Regularized)?
        .total;
    let mut interval_diss = 0.0;

    while state.step < total_steps {
        let (next, rec) = it.step(&state)?;
        state = next;
        if rec.breakdown {
            breakdown_events += 1;
        }
        interval_diss += dt * (rec.diss_phi + rec.diss_u);

        let at_end = state.step == total_steps;
        if state.step % config.output.diagnostics_every == 0 || at_end {
            let e = it
                .energy(&state.phi, &state.u, PotentialMode::Regularized)?
                .total;
            let residual = e - prev_energy + interval_diss;
            prev_energy = e;
            interval_diss = 0.0;
            let row = build_row(&it, &state, Some(&rec), residual)?;
            writeln!(csv, "{}", row.to_csv())?;
            rows.push(row);
        }
        if config.output.snapshot_every > 0
            && (state.step % config.output.snapshot_every == 0 || at_end)
        {
            write_snapshot(&outdir.join(format!("snapshot_{:08}.txt", state.step)), &it, &state)?;
        }
        if config.output.checkpoint_every > 0 && state.step % config.output.checkpoint_every == 0 {
            checkpoint::save(
                &outdir.join(format!("checkpoint_{:08}.bin", state.step)),
                &state,
                config.source_hash,
            )?;
        }
    }
    csv.flush()?;
    checkpoint::save(&outdir.join("checkpoint_final.bin"), &state, config.source_hash)?;

    Ok(RunOutcome {
        final_state: state,
        rows,
        breakdown_events,
        outdir,
    })
}
