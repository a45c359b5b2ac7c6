use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use serde_json::{json, Value};

use photonqec::code_gates::{classify_preserving, group_closure, three_photon_code, LogicalQubit};
use photonqec::fock::{DensityMatrix, Occupation, PureState};
use photonqec::heralded::{
    characterize, encoding_search, gate_grid, optimize_gate, phase_gate_coeffs, verify_coeffs_by_simulation,
    verify_encoding, EncodingSearchOptions, GateSearchOptions, PhaseGateParams,
};
use photonqec::linear_optics::NetworkSpec;
use photonqec::loss_channel::one_photon_loss_ops;
use photonqec::qec_core::{
    annihilators, encoding_nogo_witness, fidelity_curve, infidelity_slope, kl_check, lie_algebra_witness, log_grid,
    CodeSubspace,
};
use photonqec::tomography::{bloch_of, reconstruct_state, settings, simulate_counts, CountRecord};

#[derive(Parser)]
#[command(name = "photonqec", version, about = "Loss-tolerant multimode photonic codes: checks, gates, tomography, heralded circuits")]
struct Cli {
    /// Worker threads for parallel searches (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Write `null` for the wall time so repeated runs are byte-identical.
    #[arg(long, global = true)]
    reproducible: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Recoverability checks and loss curves.
    #[command(subcommand)]
    Qec(QecCmd),
    /// The deterministic gate group.
    #[command(subcommand)]
    Gates(GatesCmd),
    /// Logical-state tomography.
    #[command(subcommand)]
    Tomo(TomoCmd),
    /// Heralded encoder search.
    #[command(subcommand)]
    Encode(EncodeCmd),
    /// Heralded single-mode gate.
    #[command(subcommand)]
    Gate(GateCmd),
}

#[derive(Args)]
#[group(multiple = false)]
struct LossArg {
    /// Damping exponent γ (amplitude transmission e^{−γ}).
    #[arg(long)]
    gamma: Option<f64>,
    /// Intensity transmission e^{−2γ}.
    #[arg(long)]
    transmission: Option<f64>,
}

impl LossArg {
    fn gamma(&self) -> Result<Option<f64>, CliError> {
        match (self.gamma, self.transmission) {
            (Some(g), _) if g.is_finite() && g >= 0.0 => Ok(Some(g)),
            (Some(g), _) => Err(CliError::invalid(format!("gamma must be finite and ≥ 0, got {g}"))),
            (None, Some(t)) if t > 0.0 && t <= 1.0 => Ok(Some(-t.ln() / 2.0)),
            (None, Some(t)) => Err(CliError::invalid(format!("transmission must lie in (0, 1], got {t}"))),
            (None, None) => Ok(None),
        }
    }
}

#[derive(Args)]
struct Out {
    /// Output file (default: standard output).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum QecCmd {
    /// Knill–Laflamme check against single-photon loss.
    KlCheck {
        /// `three-photon` or `dual-rail`.
        #[arg(long, default_value = "three-photon", conflicts_with = "codewords")]
        code: String,
        /// JSON array of state dumps, one per codeword.
        #[arg(long)]
        codewords: Option<PathBuf>,
        #[command(flatten)]
        loss: LossArg,
        #[command(flatten)]
        out: Out,
    },
    /// No-go witnesses: passive encoding and continuous gates.
    Nogo {
        #[arg(long, default_value = "dual-rail")]
        code: String,
        /// Ancilla occupation appended to the input, e.g. `11`.
        #[arg(long)]
        ancilla: Option<String>,
        #[command(flatten)]
        out: Out,
    },
    /// Entanglement fidelity after loss and recovery, as CSV.
    Fidelity {
        #[arg(long, default_value_t = 1e-3)]
        gamma_min: f64,
        #[arg(long, default_value_t = 1e-2)]
        gamma_max: f64,
        #[arg(long, default_value_t = 10)]
        steps: usize,
        #[command(flatten)]
        out: Out,
    },
}

#[derive(Subcommand)]
enum GatesCmd {
    /// The twelve gates generated by Γ2 and Γ3.
    Enumerate {
        #[command(flatten)]
        out: Out,
    },
    /// Verdict for a three-mode network description.
    Classify {
        #[arg(long)]
        network: PathBuf,
        #[command(flatten)]
        out: Out,
    },
}

#[derive(Subcommand)]
enum TomoCmd {
    /// Sampled counts for the four settings.
    Simulate {
        /// `L`, `H`, `T1`, `T2`, `T3`, or a state-dump file on three modes.
        #[arg(long)]
        state: String,
        #[arg(long)]
        shots: u64,
        #[arg(long, env = "QEC_SEED")]
        seed: Option<u64>,
        #[command(flatten)]
        out: Out,
    },
    /// Logical density matrix from a counts file.
    Reconstruct {
        counts: PathBuf,
        #[command(flatten)]
        out: Out,
    },
}

#[derive(Subcommand)]
enum EncodeCmd {
    /// Constrained search for the encoder box.
    Search {
        #[arg(long, default_value_t = 100)]
        restarts: usize,
        #[arg(long, env = "QEC_SEED")]
        seed: Option<u64>,
        /// Extra vacuum modes in the box, heralded empty.
        #[arg(long, default_value_t = 0)]
        extra_vacuum_modes: usize,
        /// Random qubits pushed through the full circuit afterwards.
        #[arg(long, default_value_t = 20)]
        verify: usize,
        #[command(flatten)]
        out: Out,
    },
}

#[derive(Subcommand)]
enum GateCmd {
    /// Closed-form amplitudes, their simulation check, and η-balancing.
    Coeffs {
        #[arg(long)]
        r1: f64,
        #[arg(long)]
        r2: f64,
        #[arg(long, default_value_t = 0.0)]
        phi: f64,
        #[command(flatten)]
        out: Out,
    },
    /// Best success rate for one (τ, ξ).
    Optimize {
        #[arg(long, allow_hyphen_values = true)]
        tau: f64,
        #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
        xi: f64,
        #[arg(long, default_value_t = 200)]
        restarts: usize,
        #[arg(long, env = "QEC_SEED")]
        seed: Option<u64>,
        #[command(flatten)]
        out: Out,
    },
    /// Success-rate table over τ × ξ, as CSV.
    Grid {
        #[arg(long, default_value_t = 5)]
        tau_steps: usize,
        #[arg(long, default_value_t = 6)]
        xi_steps: usize,
        #[arg(long, default_value_t = 200)]
        restarts: usize,
        #[arg(long, env = "QEC_SEED")]
        seed: Option<u64>,
        #[command(flatten)]
        out: Out,
    },
}

#[derive(Debug)]
enum CliError {
    Io { path: PathBuf, source: io::Error },
    Invalid(String),
}

impl CliError {
    fn invalid(msg: impl Into<String>) -> Self {
        CliError::Invalid(msg.into())
    }
}

impl From<photonqec::Error> for CliError {
    fn from(e: photonqec::Error) -> Self {
        CliError::Invalid(e.to_string())
    }
}

struct Meta {
    command: &'static str,
    seed: Option<u64>,
    start: Instant,
    reproducible: bool,
}

impl Meta {
    fn json(&self) -> Value {
        let wall = if self.reproducible { Value::Null } else { json!(self.start.elapsed().as_secs_f64()) };
        json!({
            "tool": "photonqec",
            "version": env!("CARGO_PKG_VERSION"),
            "command": self.command,
            "seed": self.seed,
            "wall_time_s": wall,
        })
    }
}

fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    let io_err = |source| CliError::Io { path: path.to_path_buf(), source };
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(io_err)?;
    tmp.write_all(bytes).map_err(io_err)?;
    tmp.persist(path).map_err(|e| io_err(e.error))?;
    Ok(())
}

fn emit(out: &Out, bytes: Vec<u8>) -> Result<(), CliError> {
    match &out.out {
        Some(p) => write_atomic(p, &bytes),
        None => io::stdout()
            .write_all(&bytes)
            .map_err(|source| CliError::Io { path: PathBuf::from("<stdout>"), source }),
    }
}

fn emit_json(out: &Out, meta: &Meta, result: impl Serialize) -> Result<(), CliError> {
    let doc = json!({ "meta": meta.json(), "result": serde_json::to_value(result).map_err(|e| CliError::invalid(e.to_string()))? });
    let mut text = serde_json::to_string_pretty(&doc).expect("JSON values always serialize");
    text.push('\n');
    emit(out, text.into_bytes())
}

/// `# {meta}` line, then the column header, then rows.
fn emit_csv(out: &Out, meta: &Meta, columns: &[&str], rows: Vec<Vec<f64>>) -> Result<(), CliError> {
    let mut text = format!("# {}\n{}\n", meta.json(), columns.join(","));
    for r in rows {
        let cells: Vec<String> = r.iter().map(|v| format!("{v:.12e}")).collect();
        text.push_str(&cells.join(","));
        text.push('\n');
    }
    emit(out, text.into_bytes())
}

fn read_file(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|source| CliError::Io { path: path.to_path_buf(), source })
}

/// Flag, then `QEC_SEED`, then a clock-derived seed that is recorded.
fn resolve_seed(seed: Option<u64>) -> u64 {
    seed.unwrap_or_else(|| {
        std::time::SystemTime::now()
            .duration_since(std::time::UNIX_EPOCH)
            .map(|d| d.as_nanos() as u64)
            .unwrap_or(0)
    })
}

fn named_code(name: &str) -> Result<CodeSubspace, CliError> {
    match name {
        "three-photon" => Ok(three_photon_code()),
        "dual-rail" => Ok(CodeSubspace::new(&[
            PureState::fock(&Occupation::from([1, 0]))?,
            PureState::fock(&Occupation::from([0, 1]))?,
        ])?),
        other => Err(CliError::invalid(format!("unknown code {other:?}; expected three-photon or dual-rail"))),
    }
}

fn load_code(name: &str, codewords: Option<&Path>) -> Result<CodeSubspace, CliError> {
    match codewords {
        None => named_code(name),
        Some(p) => {
            let dumps: Vec<photonqec::fock::StateDump> =
                serde_json::from_str(&read_file(p)?).map_err(|e| CliError::invalid(format!("{}: {e}", p.display())))?;
            let states = dumps.iter().map(PureState::from_dump).collect::<Result<Vec<_>, _>>()?;
            Ok(CodeSubspace::new(&states)?)
        }
    }
}

fn parse_occupation(s: &str) -> Result<Occupation, CliError> {
    let digits: Option<Vec<usize>> = s.chars().map(|c| c.to_digit(10).map(|d| d as usize)).collect();
    digits.map(Occupation).ok_or_else(|| CliError::invalid(format!("occupation {s:?} must be a string of digits")))
}

fn named_state(name: &str) -> Result<PureState, CliError> {
    let q = match name {
        "L" => LogicalQubit::l(),
        "H" => LogicalQubit::h(),
        "T1" => LogicalQubit::tetrahedron(1)?,
        "T2" => LogicalQubit::tetrahedron(2)?,
        "T3" => LogicalQubit::tetrahedron(3)?,
        path => return Ok(PureState::from_json(&read_file(Path::new(path))?)?),
    };
    Ok(q.to_state())
}

fn run(cli: Cli) -> Result<(), CliError> {
    let start = Instant::now();
    let meta = |command, seed| Meta { command, seed, start, reproducible: cli.reproducible };
    match cli.command {
        Command::Qec(QecCmd::KlCheck { code, codewords, loss, out }) => {
            let code = load_code(&code, codewords.as_deref())?;
            let bare = kl_check(&code, &annihilators(code.basis())?)?;
            let with_loss = match loss.gamma()? {
                Some(g) => Some(json!({
                    "gamma": g,
                    "report": kl_check(&code, &one_photon_loss_ops(code.photons(), g, code.modes())?)?,
                })),
                None => None,
            };
            emit_json(&out, &meta("qec kl-check", None), json!({ "annihilators": bare, "loss_operators": with_loss }))
        }
        Command::Qec(QecCmd::Nogo { code, ancilla, out }) => {
            let code = named_code(&code)?;
            let ancilla = ancilla.as_deref().map(parse_occupation).transpose()?;
            let ancilla_state = ancilla.as_ref().map(PureState::fock).transpose()?;
            let encoding = encoding_nogo_witness(&code, ancilla_state.as_ref())?;
            let continuous = lie_algebra_witness(&code).map_err(CliError::from);
            let continuous = match continuous {
                Ok(w) => json!({ "witness": w }),
                Err(CliError::Invalid(msg)) => json!({ "refused": msg }),
                Err(e) => return Err(e),
            };
            emit_json(
                &out,
                &meta("qec nogo", None),
                json!({
                    "ancilla": ancilla.map(|a| a.to_string()),
                    "encoding_residual": encoding.residual,
                    "encoding": encoding,
                    "continuous_gates": continuous,
                }),
            )
        }
        Command::Qec(QecCmd::Fidelity { gamma_min, gamma_max, steps, out }) => {
            let grid = log_grid(gamma_min, gamma_max, steps)?;
            let curve = fidelity_curve(&three_photon_code(), &grid)?;
            let slope = |f: fn(&photonqec::qec_core::FidelityPoint) -> f64| {
                infidelity_slope(&curve.iter().map(|p| (p.gamma, f(p))).collect::<Vec<_>>())
            };
            eprintln!(
                "{}",
                json!({ "slope_encoded": slope(|p| p.encoded), "slope_bare": slope(|p| p.bare) })
            );
            let rows = curve.iter().map(|p| vec![p.gamma, p.encoded, p.bare]).collect();
            emit_csv(&out, &meta("qec fidelity", None), &["gamma", "F_encoded", "F_bare"], rows)
        }
        Command::Gates(GatesCmd::Enumerate { out }) => {
            let group = group_closure()?;
            let elements: Vec<Value> = group
                .iter()
                .map(|g| {
                    json!({
                        "word": g.word,
                        "axis": g.axis,
                        "angle": g.angle,
                        "vertex_permutation": g.vertex_permutation,
                    })
                })
                .collect();
            emit_json(&out, &meta("gates enumerate", None), json!({ "order": group.len(), "elements": elements }))
        }
        Command::Gates(GatesCmd::Classify { network, out }) => {
            let spec = NetworkSpec::from_json(&read_file(&network)?)?;
            let t = spec.transform()?;
            if t.modes() != 3 {
                return Err(CliError::invalid(format!("classify needs a three-mode network, got {} modes", t.modes())));
            }
            emit_json(&out, &meta("gates classify", None), classify_preserving(&t)?)
        }
        Command::Tomo(TomoCmd::Simulate { state, shots, seed, out }) => {
            if shots == 0 {
                return Err(CliError::invalid("shots must be at least 1"));
            }
            let seed = resolve_seed(seed);
            let rho = DensityMatrix::from_pure(&named_state(&state)?);
            let records = settings()?
                .iter()
                .enumerate()
                .map(|(k, s)| simulate_counts(&rho, s, shots, seed.wrapping_add(k as u64)))
                .collect::<Result<Vec<_>, _>>()?;
            emit_json(&out, &meta("tomo simulate", Some(seed)), records)
        }
        Command::Tomo(TomoCmd::Reconstruct { counts, out }) => {
            let text = read_file(&counts)?;
            let doc: Value = serde_json::from_str(&text).map_err(|e| CliError::invalid(format!("{}: {e}", counts.display())))?;
            // accept our own envelope or a bare array
            let records = doc.get("result").cloned().unwrap_or(doc);
            let records: Vec<CountRecord> = serde_json::from_value(records).map_err(|e| CliError::invalid(e.to_string()))?;
            let rho = reconstruct_state(&records)?;
            let m: Vec<Vec<[f64; 2]>> = (0..2).map(|i| (0..2).map(|j| [rho[(i, j)].re, rho[(i, j)].im]).collect()).collect();
            emit_json(&out, &meta("tomo reconstruct", None), json!({ "basis": ["L", "H"], "rho": m, "bloch": bloch_of(&rho) }))
        }
        Command::Encode(EncodeCmd::Search { restarts, seed, extra_vacuum_modes, verify, out }) => {
            let seed = resolve_seed(seed);
            let opts = EncodingSearchOptions { restarts, seed, extra_vacuum_modes, ..Default::default() };
            if restarts == 0 {
                return Err(CliError::invalid("restarts must be at least 1"));
            }
            let cand = encoding_search(&opts)?;
            let check = if verify > 0 { Some(verify_encoding(&cand, verify, seed)?) } else { None };
            if cand.success_rate > 0.0491 {
                eprintln!("{}", json!({ "note": "success rate above 0.0491", "p": cand.success_rate }));
            }
            emit_json(&out, &meta("encode search", Some(seed)), json!({ "candidate": cand, "verification": check }))
        }
        Command::Gate(GateCmd::Coeffs { r1, r2, phi, out }) => {
            let p = PhaseGateParams::new(r1, r2, phi)?;
            let [c0, c1, c3] = phase_gate_coeffs(&p);
            let ch = characterize(&p).ok();
            emit_json(
                &out,
                &meta("gate coeffs", None),
                json!({
                    "params": p,
                    "c0": c0, "c1": c1, "c3": c3,
                    "simulation_deviation": verify_coeffs_by_simulation(&p)?,
                    "characterization": ch,
                }),
            )
        }
        Command::Gate(GateCmd::Optimize { tau, xi, restarts, seed, out }) => {
            let seed = resolve_seed(seed);
            let o = optimize_gate(tau, xi, &GateSearchOptions { restarts, seed, ..Default::default() })?;
            emit_json(&out, &meta("gate optimize", Some(seed)), o)
        }
        Command::Gate(GateCmd::Grid { tau_steps, xi_steps, restarts, seed, out }) => {
            let seed = resolve_seed(seed);
            let grid = gate_grid(tau_steps, xi_steps, restarts, seed)?;
            let rows = grid.iter().map(|g| vec![g.tau, g.xi, g.success, g.r1, g.r2, g.phi]).collect();
            emit_csv(&out, &meta("gate grid", Some(seed)), &["tau", "xi", "S", "r1", "r2", "phi"], rows)
        }
    }
}

fn fail(code: u8, kind: &str, message: String) -> ExitCode {
    eprintln!("{}", json!({ "error": kind, "message": message }));
    ExitCode::from(code)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => return fail(2, "usage", e.render().to_string()),
    };
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            return fail(2, "validation", e.to_string());
        }
    }
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Invalid(msg)) => fail(2, "validation", msg),
        Err(CliError::Io { path, source }) => fail(1, "io", format!("{}: {source}", path.display())),
    }
}
