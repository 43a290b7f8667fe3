//! Subcommand argument structs and their implementations.
//!
//! Every command follows the same shape: merge flags against an
//! optional JSON config (flags win), run the computation, emit a JSON
//! report to stdout or `--output`, and map the outcome onto the process
//! exit code.  All randomness flows through one generator seeded by
//! `--seed`.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use clap::{Args, Subcommand};
use nalgebra::DVector;
use rand::Rng;
use serde_json::{json, Map, Value};

use critflow_core::hypmodel::{
    busemann, busemann_gradient, exp_map, tangent_basis, mink_dot,
};
use critflow_core::psflow::{
    self, density_from_orbit, grad_f, integrate_flow, trajectory_csv, verify_contraction,
    verify_ode_bound, FlowSense,
};
use critflow_core::rankone::{
    cheeger_lower, hd_bound, hd_report, sullivan_lambda0, Family,
};
use critflow_core::rootsys::{gap_bound, l_x, rho, s_eta, strongly_orthogonal_theta};
use critflow_core::sampling::{gaussian_vector, random_orthonormal_frame, seeded_rng};
use critflow_core::schottky::{
    enumerate_orbit_capped, estimate_from_orbit, orbit_to_json_lines, SchottkyGroupSpec,
    DEFAULT_ORBIT_CAP,
};
use critflow_core::{Boundary, Density, Error, Point, Rank1, Result, Tangent};

use crate::presets::parse_preset;
use crate::provenance::{load_config, ParamSet};
use crate::{DEFAULT_SEED, EXIT_OK, EXIT_SELFTEST, EXIT_VERIFICATION};

#[derive(Subcommand)]
pub enum Command {
    /// Dimension, Cheeger, and bottom-of-spectrum bounds for a rank-one
    /// space at a given critical exponent.
    BoundsRank1(BoundsRank1Args),
    /// Integer gap bounds and critical trace indices for higher-rank
    /// presets.
    BoundsHigherRank(BoundsHigherRankArgs),
    /// Estimate a critical exponent from a Schottky orbit count.
    Delta(DeltaArgs),
    /// Integrate the natural flow for a boundary density and check the
    /// k-volume contraction bound along the trajectory.
    Flow(FlowArgs),
    /// Check the scalar comparison ODE against its exponential lower
    /// bound.
    OdeCheck(OdeCheckArgs),
    /// Replay the golden tables and the seeded property suites.
    Selftest(SelftestArgs),
}

/// Flags shared by every subcommand.
#[derive(Args)]
pub struct CommonArgs {
    /// Seed for the single random generator behind this invocation.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Write the JSON report here instead of stdout.
    #[arg(long)]
    pub output: Option<PathBuf>,
    /// JSON config file; flags override its fields.
    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(Args)]
pub struct BoundsRank1Args {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Rank-one family: real, complex, quaternionic, or cayley.
    #[arg(long)]
    pub family: Option<String>,
    /// Dimension parameter n (fixed at 2 for cayley).
    #[arg(long)]
    pub n: Option<usize>,
    /// Critical exponent.
    #[arg(long)]
    pub delta: Option<f64>,
}

#[derive(Args)]
pub struct BoundsHigherRankArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Preset name, e.g. sl5, b5, e7, h3xh3, h4.
    #[arg(long)]
    pub preset: Option<String>,
    /// Functional choice for the gap mode: rho, theta, or custom.
    #[arg(long)]
    pub eta: Option<String>,
    /// Comma-separated coordinates for --eta custom.
    #[arg(long)]
    pub custom_eta: Option<String>,
    /// Chamber direction for the critical-index mode: "diag" or
    /// comma-separated coordinates (normalized internally).
    #[arg(long)]
    pub u: Option<String>,
    /// Critical exponent for the critical-index mode.
    #[arg(long)]
    pub delta: Option<f64>,
}

#[derive(Args)]
pub struct DeltaArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// JSON file holding the Schottky group spec.
    #[arg(long)]
    pub spec: Option<PathBuf>,
    /// Enumerate all reduced words up to this length.
    #[arg(long)]
    pub max_len: Option<usize>,
    /// Orbit-size cap; overrides the CRITFLOW_CAP environment variable.
    #[arg(long)]
    pub cap: Option<u64>,
    /// Also dump the orbit as JSON lines to this path.
    #[arg(long)]
    pub dump_orbit: Option<PathBuf>,
}

#[derive(Args)]
pub struct FlowArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Schottky spec file; the density is built from its orbit.
    #[arg(long)]
    pub spec: Option<PathBuf>,
    /// Orbit word length used when building the density from a spec.
    #[arg(long)]
    pub depth: Option<usize>,
    /// Explicit density file {delta, atoms: [{point, weight}]}.
    #[arg(long)]
    pub density: Option<PathBuf>,
    /// Exponent for the density; estimated from the orbit when absent
    /// in spec mode.
    #[arg(long)]
    pub delta: Option<f64>,
    /// Frame size to transport.
    #[arg(long)]
    pub k: Option<usize>,
    /// Integration horizon.
    #[arg(long)]
    pub total_time: Option<f64>,
    /// Step size (capped at 1e-2).
    #[arg(long)]
    pub dt: Option<f64>,
    /// Flow sense: natural (contracting) or forward.
    #[arg(long)]
    pub sense: Option<String>,
    /// Write the trajectory CSV here.
    #[arg(long)]
    pub csv: Option<PathBuf>,
    /// Orbit-size cap for spec mode; overrides CRITFLOW_CAP.
    #[arg(long)]
    pub cap: Option<u64>,
}

#[derive(Args)]
pub struct OdeCheckArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Linear growth coefficient C > 0.
    #[arg(long)]
    pub c: Option<f64>,
    /// Sublinear exponent in (0, 1).
    #[arg(long)]
    pub alpha: Option<f64>,
    /// Initial value y(0) > 0.
    #[arg(long)]
    pub y0: Option<f64>,
    /// Horizon for the margin check.
    #[arg(long)]
    pub total_time: Option<f64>,
}

#[derive(Args)]
pub struct SelftestArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Directory holding the golden tables; overrides CRITFLOW_DATA.
    #[arg(long)]
    pub data_dir: Option<PathBuf>,
}

pub fn dispatch(cmd: Command) -> Result<i32> {
    match cmd {
        Command::BoundsRank1(args) => run_bounds_rank1(args),
        Command::BoundsHigherRank(args) => run_bounds_higher_rank(args),
        Command::Delta(args) => run_delta(args),
        Command::Flow(args) => run_flow(args),
        Command::OdeCheck(args) => run_ode_check(args),
        Command::Selftest(args) => run_selftest(args),
    }
}

/// Pretty-prints `report` to `--output` or stdout, newline-terminated.
fn emit(report: &Value, output: Option<&Path>) -> Result<()> {
    let mut text = serde_json::to_string_pretty(report)
        .map_err(|e| Error::Input(format!("cannot serialize report: {e}")))?;
    text.push('\n');
    match output {
        Some(path) => std::fs::write(path, text)
            .map_err(|e| Error::Input(format!("cannot write {}: {e}", path.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn read_file(path: &Path) -> Result<String> {
    std::fs::read_to_string(path)
        .map_err(|e| Error::Input(format!("cannot read {}: {e}", path.display())))
}

/// Resolves the seed shared by all commands and records it.
fn merge_seed(params: &mut ParamSet, flag: Option<u64>) -> Result<u64> {
    Ok(params
        .u64("seed", flag, Some(DEFAULT_SEED))?
        .expect("seed has a default"))
}

/// Reads a u64 cap from flag, then the named environment variable,
/// then the library default.  The environment value is recorded so a
/// run can be replayed without the ambient environment.
fn merge_cap(params: &mut ParamSet, flag: Option<u64>, env_json: &mut Map<String, Value>) -> Result<u64> {
    let env_cap = match std::env::var("CRITFLOW_CAP") {
        Ok(raw) => {
            let parsed = raw.parse::<u64>().map_err(|_| {
                Error::Input(format!("CRITFLOW_CAP must be an unsigned integer, got {raw:?}"))
            })?;
            env_json.insert("CRITFLOW_CAP".into(), parsed.into());
            Some(parsed)
        }
        Err(_) => None,
    };
    let default = env_cap.unwrap_or(DEFAULT_ORBIT_CAP);
    Ok(params
        .u64("cap", flag, Some(default))?
        .expect("cap has a default"))
}

fn parse_vector(raw: &str, expected_dim: usize, what: &str) -> Result<DVector<f64>> {
    let coords: Vec<f64> = raw
        .split(',')
        .map(|piece| {
            piece
                .trim()
                .parse::<f64>()
                .map_err(|_| Error::Input(format!("{what}: cannot parse component {piece:?}")))
        })
        .collect::<Result<_>>()?;
    if coords.len() != expected_dim {
        return Err(Error::Input(format!(
            "{what}: expected {expected_dim} components, got {}",
            coords.len()
        )));
    }
    Ok(DVector::from_vec(coords))
}

fn run_bounds_rank1(args: BoundsRank1Args) -> Result<i32> {
    let config = load_config(args.common.config.as_deref())?;
    let mut params = ParamSet::new(config.as_ref());
    let seed = merge_seed(&mut params, args.common.seed)?;

    let family_name = params.require("family", args.family, None, |v: &String| v.clone().into(), |raw| {
        raw.as_str().map(str::to_string)
    })?;
    let family = Family::parse(&family_name)?;
    // The octonionic plane only exists for n = 2, so the flag may be
    // omitted there.
    let n_default = if family == Family::Cayley { Some(2) } else { None };
    let n = params
        .usize("n", args.n, n_default)?
        .ok_or_else(|| Error::Input("missing required parameter --n".into()))?;
    let delta = params.require_f64("delta", args.delta)?;

    let space = Rank1::new(family, n)?;
    let report = hd_report(&space, delta)?;

    // The Cheeger and lambda_0 formulas are stated for real hyperbolic
    // space only; the other families report null there.
    let cheeger = if family == Family::Real {
        Some(cheeger_lower(n, delta)?)
    } else {
        None
    };
    let lambda0 = if family == Family::Real && delta <= (n - 1) as f64 {
        Some(sullivan_lambda0(n, delta)?)
    } else {
        None
    };

    let provenance = params.finish("bounds-rank1", seed, args.common.config, json!({}));
    let out = json!({
        "family": family.label(),
        "n": n,
        "real_dim": space.real_dim(),
        "volume_entropy": space.volume_entropy(),
        "delta": delta,
        "j_x": report.critical_index,
        "hd_bound": report.bound,
        "corlette_excluded": report.corlette_excluded,
        "note": report.note,
        "cheeger_lower": cheeger,
        "lambda0": lambda0.as_ref().map(|r| r.value),
        "lambda0_lower": lambda0.as_ref().map(|r| r.lower_bound),
        "provenance": provenance,
    });
    emit(&out, args.common.output.as_deref())?;
    Ok(EXIT_OK)
}

fn run_bounds_higher_rank(args: BoundsHigherRankArgs) -> Result<i32> {
    let config = load_config(args.common.config.as_deref())?;
    let mut params = ParamSet::new(config.as_ref());
    let seed = merge_seed(&mut params, args.common.seed)?;

    let preset_name = params.require("preset", args.preset, None, |v: &String| v.clone().into(), |raw| {
        raw.as_str().map(str::to_string)
    })?;
    let preset = parse_preset(&preset_name)?;
    let system = preset.root_system();
    let ambient = system.ambient_dim();

    let eta_choice = params.string("eta", args.eta, None)?;
    let u_raw = params.string("u", args.u, None)?;
    let delta = params.f64("delta", args.delta, None)?;

    let gap_mode = eta_choice.is_some();
    let index_mode = u_raw.is_some() || delta.is_some();
    if gap_mode && index_mode {
        return Err(Error::Input(
            "choose either --eta (gap mode) or --u/--delta (critical-index mode), not both".into(),
        ));
    }

    let body = if gap_mode {
        let choice = eta_choice.expect("gap mode");
        let (eta, orthogonal_count) = match choice.as_str() {
            "rho" => (rho(&preset), None),
            "theta" => {
                let (family, theta) = strongly_orthogonal_theta(system)?;
                (theta, Some(family.len()))
            }
            "custom" => {
                let raw = params.require(
                    "custom-eta",
                    args.custom_eta,
                    None,
                    |v: &String| v.clone().into(),
                    |raw| raw.as_str().map(str::to_string),
                )?;
                (parse_vector(&raw, ambient, "--custom-eta")?, None)
            }
            other => {
                return Err(Error::Input(format!(
                    "--eta must be rho, theta, or custom, got {other:?}"
                )))
            }
        };
        let s = s_eta(system, &eta)?;
        let bound = gap_bound(&preset, &eta)?;
        let coefficients = system.coefficients(&eta)?;
        json!({
            "preset": preset.name(),
            "dim": preset.dim(),
            "rank": preset.rank(),
            "mode": "gap",
            "eta_choice": choice,
            "eta": eta.iter().copied().collect::<Vec<f64>>(),
            "chamber_coefficients": coefficients.iter().copied().collect::<Vec<f64>>(),
            "orthogonal_count": orthogonal_count,
            "s_eta": s,
            "gap_bound": bound,
            "codim_one_vanishing": s >= 1,
        })
    } else {
        let raw = u_raw.ok_or_else(|| {
            Error::Input("critical-index mode needs both --u and --delta (or pass --eta)".into())
        })?;
        let delta = delta.ok_or_else(|| {
            Error::Input("critical-index mode needs both --u and --delta".into())
        })?;
        let unnormalized = if raw == "diag" {
            DVector::from_element(ambient, 1.0)
        } else {
            parse_vector(&raw, ambient, "--u")?
        };
        let norm = unnormalized.norm();
        if !norm.is_finite() || norm <= 0.0 {
            return Err(Error::Input("--u must have positive finite norm".into()));
        }
        let u = unnormalized / norm;
        params.note_effective("u-normalized", json!(u.iter().copied().collect::<Vec<f64>>()));
        let spectrum = critflow_core::rootsys::busemann_spectrum(&preset, &u)?;
        let l = l_x(&preset, &u, delta)?;
        let eigenvalues = spectrum.eigenvalues_ascending();
        let prefix_traces: Vec<f64> = (1..=spectrum.dim())
            .map(|k| spectrum.k_trace(k))
            .collect::<Result<_>>()?;
        json!({
            "preset": preset.name(),
            "dim": preset.dim(),
            "rank": preset.rank(),
            "mode": "critical-index",
            "u": u.iter().copied().collect::<Vec<f64>>(),
            "delta": delta,
            "l_x": l,
            "spectrum": eigenvalues,
            "prefix_traces": prefix_traces,
        })
    };

    let provenance = params.finish("bounds-higher-rank", seed, args.common.config, json!({}));
    let mut out = body;
    out["provenance"] = serde_json::to_value(&provenance)
        .map_err(|e| Error::Input(format!("cannot serialize provenance: {e}")))?;
    emit(&out, args.common.output.as_deref())?;
    Ok(EXIT_OK)
}

fn load_spec(path: &Path) -> Result<SchottkyGroupSpec<f64>> {
    let text = read_file(path)?;
    serde_json::from_str(&text)
        .map_err(|e| Error::Input(format!("cannot parse spec {}: {e}", path.display())))
}

fn run_delta(args: DeltaArgs) -> Result<i32> {
    let config = load_config(args.common.config.as_deref())?;
    let mut params = ParamSet::new(config.as_ref());
    let seed = merge_seed(&mut params, args.common.seed)?;
    let mut env_json = Map::new();

    let spec_path = params
        .string("spec", args.spec.map(|p| p.display().to_string()), None)?
        .ok_or_else(|| Error::Input("missing required parameter --spec".into()))?;
    let max_len = params
        .usize("max-len", args.max_len, None)?
        .ok_or_else(|| Error::Input("missing required parameter --max-len".into()))?;
    let cap = merge_cap(&mut params, args.cap, &mut env_json)?;

    let spec = load_spec(Path::new(&spec_path))?;
    let orbit = enumerate_orbit_capped(&spec, max_len, cap)?;
    if let Some(dump) = &args.dump_orbit {
        std::fs::write(dump, orbit_to_json_lines(&orbit))
            .map_err(|e| Error::Input(format!("cannot write {}: {e}", dump.display())))?;
    }
    let estimate = estimate_from_orbit(&orbit)?;

    let provenance = params.finish("delta", seed, args.common.config, Value::Object(env_json));
    let out = json!({
        "label": spec.label(),
        "generators": spec.generator_count(),
        "max_word_len": max_len,
        "cap": cap,
        "orbit_points": orbit.len(),
        "estimate": estimate,
        "provenance": provenance,
    });
    emit(&out, args.common.output.as_deref())?;
    Ok(EXIT_OK)
}

/// Draws a random orthonormal tangent k-frame at `x0` with Gaussian
/// coefficients over the deterministic tangent basis.
fn random_tangent_frame<R: Rng>(rng: &mut R, x0: &Point, k: usize) -> Result<Vec<Tangent>> {
    let basis = tangent_basis(x0);
    let n = basis.len();
    if k == 0 || k > n {
        return Err(Error::Input(format!(
            "frame size k must lie in 1..={n}, got {k}"
        )));
    }
    let mut raw: Vec<DVector<f64>> = Vec::with_capacity(k);
    while raw.len() < k {
        let coeffs: DVector<f64> = gaussian_vector(rng, n);
        let mut v = DVector::zeros(x0.coords().len());
        for (c, b) in coeffs.iter().zip(&basis) {
            v += b.coords() * *c;
        }
        for prev in &raw {
            let overlap = mink_dot(&v, prev);
            v -= prev * overlap;
        }
        let norm_sq = mink_dot(&v, &v);
        if norm_sq < 1e-12 {
            continue; // degenerate draw; resample
        }
        raw.push(v / norm_sq.sqrt());
    }
    raw.into_iter()
        .map(|v| Tangent::new(x0.clone(), v))
        .collect()
}

fn load_density(path: &Path) -> Result<(Density, Point)> {
    #[derive(serde::Deserialize)]
    struct AtomDoc {
        point: Vec<f64>,
        weight: f64,
    }
    #[derive(serde::Deserialize)]
    struct DensityDoc {
        delta: f64,
        atoms: Vec<AtomDoc>,
    }
    let text = read_file(path)?;
    let doc: DensityDoc = serde_json::from_str(&text)
        .map_err(|e| Error::Input(format!("cannot parse density {}: {e}", path.display())))?;
    let atoms = doc
        .atoms
        .into_iter()
        .map(|a| Ok((Boundary::new(DVector::from_vec(a.point))?, a.weight)))
        .collect::<Result<Vec<_>>>()?;
    let mu = Density::new(doc.delta, atoms)?;
    let x0 = Point::basepoint(mu.dim());
    Ok((mu, x0))
}

fn run_flow(args: FlowArgs) -> Result<i32> {
    let config = load_config(args.common.config.as_deref())?;
    let mut params = ParamSet::new(config.as_ref());
    let seed = merge_seed(&mut params, args.common.seed)?;
    let mut env_json = Map::new();

    let spec_path = params.string("spec", args.spec.map(|p| p.display().to_string()), None)?;
    let density_path =
        params.string("density", args.density.map(|p| p.display().to_string()), None)?;
    let depth = params.usize("depth", args.depth, None)?;
    let delta_flag = params.f64("delta", args.delta, None)?;
    let k = params
        .usize("k", args.k, None)?
        .ok_or_else(|| Error::Input("missing required parameter --k".into()))?;
    let total_time = params
        .f64("total-time", args.total_time, Some(5.0))?
        .expect("total-time has a default");
    let dt = params
        .f64("dt", args.dt, Some(psflow::DEFAULT_DT))?
        .expect("dt has a default");
    let sense_name = params
        .string("sense", args.sense, Some("natural".into()))?
        .expect("sense has a default");
    let sense = FlowSense::parse(&sense_name)?;
    let csv_path = params
        .string("csv", args.csv.map(|p| p.display().to_string()), Some("flow_trajectory.csv".into()))?
        .expect("csv has a default");

    let (mu, x0, delta) = match (&spec_path, &density_path) {
        (Some(_), Some(_)) => {
            return Err(Error::Input(
                "pass either --spec or --density, not both".into(),
            ))
        }
        (None, None) => {
            return Err(Error::Input(
                "one of --spec or --density is required".into(),
            ))
        }
        (Some(spec_path), None) => {
            let spec = load_spec(Path::new(spec_path))?;
            let depth = depth.ok_or_else(|| {
                Error::Input("spec mode needs --depth for the orbit word length".into())
            })?;
            let cap = merge_cap(&mut params, args.cap, &mut env_json)?;
            let orbit = enumerate_orbit_capped(&spec, depth, cap)?;
            let delta = match delta_flag {
                Some(d) => d,
                None => {
                    let est = estimate_from_orbit(&orbit)?;
                    params.note_effective("delta-estimated", est.value.into());
                    est.value
                }
            };
            let mu = density_from_orbit(&orbit, delta, spec.basepoint())?;
            (mu, spec.basepoint().clone(), delta)
        }
        (None, Some(density_path)) => {
            if delta_flag.is_some() {
                return Err(Error::Input(
                    "--delta conflicts with --density; the file carries the exponent".into(),
                ));
            }
            let (mu, x0) = load_density(Path::new(density_path))?;
            let delta = mu.delta();
            (mu, x0, delta)
        }
    };

    let mut rng = seeded_rng(seed);
    let frame = random_tangent_frame(&mut rng, &x0, k)?;
    let states = integrate_flow(&mu, &x0, &frame, total_time, dt, sense)?;
    let report = verify_contraction(&states, &mu, k)?;

    std::fs::write(&csv_path, trajectory_csv(&states, delta, k))
        .map_err(|e| Error::Input(format!("cannot write {csv_path}: {e}")))?;

    // Largest gap between the Gram-determinant volume and the
    // integrated-trace volume; a cross-check on the transport.
    let trace_gram_gap = states
        .iter()
        .map(|s| (s.log_k_volume - s.trace_log_k_volume).abs())
        .fold(0.0f64, f64::max);

    let pass = report.pass;
    let provenance = params.finish("flow", seed, args.common.config, Value::Object(env_json));
    let out = json!({
        "delta": delta,
        "k": k,
        "sense": sense,
        "atoms": mu.atoms().len(),
        "steps": states.len() - 1,
        "csv_path": csv_path,
        "trace_gram_gap": trace_gram_gap,
        "report": report,
        "provenance": provenance,
    });
    emit(&out, args.common.output.as_deref())?;
    Ok(if pass { EXIT_OK } else { EXIT_VERIFICATION })
}

fn run_ode_check(args: OdeCheckArgs) -> Result<i32> {
    let config = load_config(args.common.config.as_deref())?;
    let mut params = ParamSet::new(config.as_ref());
    let seed = merge_seed(&mut params, args.common.seed)?;

    let c = params.require_f64("c", args.c)?;
    let alpha = params.require_f64("alpha", args.alpha)?;
    let y0 = params.require_f64("y0", args.y0)?;
    let total_time = params
        .f64("total-time", args.total_time, Some(5.0))?
        .expect("total-time has a default");

    let report = verify_ode_bound(c, alpha, y0, total_time)?;
    let pass = report.pass;

    let provenance = params.finish("ode-check", seed, args.common.config, json!({}));
    let out = json!({
        "c": c,
        "alpha": alpha,
        "y0": y0,
        "total_time": total_time,
        "report": report,
        "provenance": provenance,
    });
    emit(&out, args.common.output.as_deref())?;
    Ok(if pass { EXIT_OK } else { EXIT_VERIFICATION })
}

// ---------------------------------------------------------------------------
// selftest

struct TableResult {
    name: &'static str,
    pass: bool,
    rows: usize,
    detail: Option<String>,
}

struct PropResult {
    name: &'static str,
    pass: bool,
    digest: String,
    detail: Option<String>,
}

/// FNV-1a over the formatted check values; two invocations with the
/// same seed must produce identical digests.
struct Fnv(u64);

impl Fnv {
    fn new() -> Self {
        Fnv(0xcbf2_9ce4_8422_2325)
    }

    fn update(&mut self, text: &str) {
        for byte in text.as_bytes() {
            self.0 ^= u64::from(*byte);
            self.0 = self.0.wrapping_mul(0x0000_0100_0000_01b3);
        }
    }

    fn hex(&self) -> String {
        format!("{:016x}", self.0)
    }
}

fn golden_rankone(data_dir: &Path) -> TableResult {
    let name = "rankone_hd_golden";
    let path = data_dir.join("rankone_hd_golden.json");
    let fail = |detail: String, rows: usize| TableResult {
        name,
        pass: false,
        rows,
        detail: Some(detail),
    };
    let text = match std::fs::read_to_string(&path) {
        Ok(t) => t,
        Err(e) => return fail(format!("cannot read {}: {e}", path.display()), 0),
    };
    let doc: Value = match serde_json::from_str(&text) {
        Ok(v) => v,
        Err(e) => return fail(format!("cannot parse {}: {e}", path.display()), 0),
    };
    let tables = match doc.get("tables").and_then(Value::as_array) {
        Some(t) => t,
        None => return fail("missing top-level \"tables\" array".into(), 0),
    };
    let mut rows = 0usize;
    for table in tables {
        let family_name = table.get("family").and_then(Value::as_str).unwrap_or("");
        let family = match Family::parse(family_name) {
            Ok(f) => f,
            Err(e) => return fail(format!("bad family entry: {e}"), rows),
        };
        let n = match table.get("n").and_then(Value::as_u64) {
            Some(n) => n as usize,
            None => return fail(format!("table {family_name}: missing n"), rows),
        };
        let space = match Rank1::new(family, n) {
            Ok(s) => s,
            Err(e) => return fail(format!("table {family_name} n={n}: {e}"), rows),
        };
        let entries = match table.get("entries").and_then(Value::as_array) {
            Some(e) => e,
            None => return fail(format!("table {family_name} n={n}: missing entries"), rows),
        };
        for entry in entries {
            let pair = entry.as_array().map(|a| {
                (
                    a.first().and_then(Value::as_f64),
                    a.get(1).and_then(Value::as_u64),
                )
            });
            let (delta, expected) = match pair {
                Some((Some(d), Some(b))) => (d, b as usize),
                _ => return fail(format!("table {family_name} n={n}: malformed entry"), rows),
            };
            let got = match hd_bound(&space, delta) {
                Ok(b) => b,
                Err(e) => {
                    return fail(
                        format!("table {family_name} n={n} delta={delta}: {e}"),
                        rows,
                    )
                }
            };
            if got != expected {
                return fail(
                    format!(
                        "table {family_name} n={n} delta={delta}: expected {expected}, got {got}"
                    ),
                    rows,
                );
            }
            rows += 1;
        }
    }
    TableResult {
        name,
        pass: true,
        rows,
        detail: None,
    }
}

fn prop_ktrace_variational<R: Rng>(rng: &mut R) -> PropResult {
    let mut digest = Fnv::new();
    let mut worst = f64::INFINITY;
    for trial in 0..20 {
        let dim = 3 + trial % 6;
        let form: critflow_core::SymForm =
            critflow_core::sampling::random_symmetric(rng, dim, 2.0);
        for _ in 0..100 {
            let k = rng.gen_range(1..=dim);
            let frame = random_orthonormal_frame(rng, dim, k);
            let on_frame = form.trace_on_subspace(&frame).expect("orthonormal frame");
            let floor = form.k_trace(k).expect("k in range");
            worst = worst.min(on_frame - floor);
        }
    }
    let mut _s = String::new();
    let _ = write!(_s, "{worst:.17e}");
    digest.update(&_s);
    let pass = worst >= -1e-9;
    PropResult {
        name: "symform-ktrace-variational",
        pass,
        digest: digest.hex(),
        detail: (!pass).then(|| format!("k-trace exceeded a frame trace by {:.3e}", -worst)),
    }
}

fn prop_busemann_gradient_fd<R: Rng>(rng: &mut R) -> PropResult {
    let mut digest = Fnv::new();
    let mut worst = 0.0f64;
    let base = Point::basepoint(3);
    let h = 1e-5;
    for _ in 0..50 {
        let dir = {
            let raw: DVector<f64> = critflow_core::sampling::random_unit_vector(rng, 3);
            let ambient = DVector::from_fn(4, |i, _| if i == 0 { 0.0 } else { raw[i - 1] });
            Tangent::new(base.clone(), ambient).expect("spatial vectors are tangent at the origin")
        };
        let r = rng.gen_range(0.0..2.0);
        let x = exp_map(&base, &dir, r).expect("unit-speed geodesic");
        let theta: DVector<f64> = critflow_core::sampling::random_unit_vector(rng, 3);
        let b = Boundary::new(DVector::from_fn(4, |i, _| {
            if i == 0 {
                1.0
            } else {
                theta[i - 1]
            }
        }))
        .expect("unit direction gives a null vector");
        let grad = busemann_gradient(&x, &b).expect("interior point");
        for v in tangent_basis(&x) {
            let plus = exp_map(&x, &v, h).expect("short geodesic");
            let minus = exp_map(&x, &v, -h).expect("short geodesic");
            let fd = (busemann(&plus, &b).expect("interior") - busemann(&minus, &b).expect("interior")) / (2.0 * h);
            let exact = grad.dot(&v);
            worst = worst.max((fd - exact).abs() / (1.0 + exact.abs()));
        }
    }
    let mut s = String::new();
    let _ = write!(s, "{worst:.17e}");
    digest.update(&s);
    let pass = worst <= 1e-6;
    PropResult {
        name: "hypmodel-busemann-gradient-fd",
        pass,
        digest: digest.hex(),
        detail: (!pass).then(|| format!("finite-difference mismatch {worst:.3e}")),
    }
}

fn prop_gradient_speed_bound<R: Rng>(rng: &mut R) -> PropResult {
    let mut digest = Fnv::new();
    let mut worst = f64::NEG_INFINITY;
    for trial in 0..100 {
        let dim = 2 + trial % 3;
        let delta = rng.gen_range(0.1..2.4);
        let atom_count = rng.gen_range(1..=5);
        let atoms: Vec<(Boundary, f64)> = (0..atom_count)
            .map(|_| {
                let theta: DVector<f64> = critflow_core::sampling::random_unit_vector(rng, dim);
                let coords = DVector::from_fn(dim + 1, |i, _| {
                    if i == 0 {
                        1.0
                    } else {
                        theta[i - 1]
                    }
                });
                let b = Boundary::new(coords).expect("unit direction");
                let w = rng.gen_range(-1.5f64..1.5).exp();
                (b, w)
            })
            .collect();
        let mu = match Density::new(delta, atoms) {
            Ok(m) => m,
            Err(_) => continue, // atoms merged; separation is the caller's job
        };
        let base = Point::basepoint(dim);
        let dir = {
            let raw: DVector<f64> = critflow_core::sampling::random_unit_vector(rng, dim);
            let ambient = DVector::from_fn(dim + 1, |i, _| if i == 0 { 0.0 } else { raw[i - 1] });
            Tangent::new(base.clone(), ambient).expect("spatial vector")
        };
        let r = rng.gen_range(0.0..3.0);
        let x = exp_map(&base, &dir, r).expect("unit-speed geodesic");
        let grad = grad_f(&mu, &x).expect("interior point");
        worst = worst.max(grad.norm() - delta);
    }
    let mut s = String::new();
    let _ = write!(s, "{worst:.17e}");
    digest.update(&s);
    let pass = worst <= 1e-9;
    PropResult {
        name: "psflow-gradient-speed-bound",
        pass,
        digest: digest.hex(),
        detail: (!pass).then(|| format!("gradient norm exceeded delta by {worst:.3e}")),
    }
}

fn prop_rootsys_integer_gaps() -> PropResult {
    let mut digest = Fnv::new();
    let mut pass = true;
    let mut detail = None;
    for r in 3..=8usize {
        let preset = match critflow_core::rootsys::SymmetricSpacePreset::<f64>::split(
            critflow_core::rootsys::RootType::A,
            r,
        ) {
            Ok(p) => p,
            Err(e) => {
                pass = false;
                detail = Some(format!("A{r}: {e}"));
                break;
            }
        };
        let eta = rho(&preset);
        let s = match s_eta(preset.root_system(), &eta) {
            Ok(s) => s,
            Err(e) => {
                pass = false;
                detail = Some(format!("A{r}: {e}"));
                break;
            }
        };
        digest.update(&format!("A{r}:{s};"));
        if s != r / 2 {
            pass = false;
            detail = Some(format!("s(rho) for A{r}: expected {}, got {s}", r / 2));
            break;
        }
    }
    if pass {
        match crate::presets::parse_preset("sl5")
            .and_then(|p| gap_bound(&p, &rho(&p)).map(|g| (p, g)))
        {
            Ok((preset, gap)) => {
                digest.update(&format!("sl5:{gap};"));
                if gap != 12 || preset.dim() != 14 {
                    pass = false;
                    detail = Some(format!(
                        "sl5 gap bound: expected 12 in dim 14, got {gap} in dim {}",
                        preset.dim()
                    ));
                }
            }
            Err(e) => {
                pass = false;
                detail = Some(format!("sl5: {e}"));
            }
        }
    }
    PropResult {
        name: "rootsys-integer-gaps",
        pass,
        digest: digest.hex(),
        detail,
    }
}

fn run_selftest(args: SelftestArgs) -> Result<i32> {
    let config = load_config(args.common.config.as_deref())?;
    let mut params = ParamSet::new(config.as_ref());
    let seed = merge_seed(&mut params, args.common.seed)?;
    let mut env_json = Map::new();

    let flag_dir = args.data_dir.map(|p| p.display().to_string());
    let env_dir = match std::env::var("CRITFLOW_DATA") {
        Ok(dir) => {
            env_json.insert("CRITFLOW_DATA".into(), dir.clone().into());
            Some(dir)
        }
        Err(_) => None,
    };
    let default_dir = env_dir.unwrap_or_else(|| {
        Path::new(env!("CARGO_MANIFEST_DIR"))
            .join("../core/data")
            .display()
            .to_string()
    });
    let data_dir = params
        .string("data-dir", flag_dir, Some(default_dir))?
        .expect("data-dir has a default");

    let tables = vec![golden_rankone(Path::new(&data_dir))];

    let mut rng = seeded_rng(seed);
    let properties = vec![
        prop_ktrace_variational(&mut rng),
        prop_busemann_gradient_fd(&mut rng),
        prop_gradient_speed_bound(&mut rng),
        prop_rootsys_integer_gaps(),
    ];

    let pass = tables.iter().all(|t| t.pass) && properties.iter().all(|p| p.pass);
    let provenance = params.finish("selftest", seed, args.common.config, Value::Object(env_json));
    let out = json!({
        "pass": pass,
        "seed": seed,
        "data_dir": data_dir,
        "tables": tables
            .iter()
            .map(|t| {
                json!({
                    "name": t.name,
                    "pass": t.pass,
                    "rows": t.rows,
                    "detail": t.detail,
                })
            })
            .collect::<Vec<_>>(),
        "properties": properties
            .iter()
            .map(|p| {
                json!({
                    "name": p.name,
                    "pass": p.pass,
                    "digest": p.digest,
                    "detail": p.detail,
                })
            })
            .collect::<Vec<_>>(),
        "provenance": provenance,
    });
    emit(&out, args.common.output.as_deref())?;
    Ok(if pass { EXIT_OK } else { EXIT_SELFTEST })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn vector_parsing_checks_length_and_syntax() {
        let v = parse_vector("1.0, 2.5,3", 3, "--u").unwrap();
        assert_eq!(v, DVector::from_vec(vec![1.0, 2.5, 3.0]));
        assert!(parse_vector("1.0,oops", 2, "--u").is_err());
        assert!(parse_vector("1.0,2.0", 3, "--u").is_err());
    }

    #[test]
    fn random_tangent_frames_are_orthonormal() {
        let mut rng = seeded_rng(5);
        let x0 = Point::basepoint(3);
        let frame = random_tangent_frame(&mut rng, &x0, 3).unwrap();
        for (i, a) in frame.iter().enumerate() {
            for (j, b) in frame.iter().enumerate() {
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((a.dot(b) - want).abs() < 1e-10);
            }
        }
        assert!(random_tangent_frame(&mut rng, &x0, 4).is_err());
        assert!(random_tangent_frame(&mut rng, &x0, 0).is_err());
    }

    #[test]
    fn fnv_digest_is_stable() {
        let mut a = Fnv::new();
        a.update("abc");
        let mut b = Fnv::new();
        b.update("abc");
        assert_eq!(a.hex(), b.hex());
        let mut c = Fnv::new();
        c.update("abd");
        assert_ne!(a.hex(), c.hex());
    }
}
