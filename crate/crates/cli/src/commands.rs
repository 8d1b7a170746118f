use arclab_core::arcs::{moment, moment_cross_checked, ArcClass, ArcKind, ArcScheme};
use arclab_core::expsum::{complete_sums_all, method_for, weyl_sum, Phase, Weight};
use arclab_core::polycore::{IntPolynomial, Polynomial};
use arclab_core::primetools::PrimeTable;
use arclab_core::spectral::{transfer, TransferenceConfig, WChoice};
use arclab_core::vaughan::verify_minor_arc;
use arclab_core::witness::{
    count_witnesses, find_witnesses, weighted_count, CountMethod, Schedule, Terminal, WitnessReport,
};
use arclab_core::{Error, Result};
use serde_json::{json, Value};

use crate::config::ExperimentConfig;
use crate::output::{sig12, Output};
use crate::sets::generate;

/// Used when a decimal phase is given.
pub const DECIMAL_PHASE_Q: u64 = 1_000_000;

const GOLDEN: &str = "0.6180339887498949";

pub fn execute(cfg: &ExperimentConfig) -> Result<Output> {
    match cfg.command.as_str() {
        "sieve" => sieve(cfg),
        "expsum" => expsum(cfg),
        "arcs-classify" => arcs_classify(cfg),
        "arcs-moment" => arcs_moment(cfg),
        "vaughan-verify" => vaughan_verify(cfg),
        "transfer" => transference(cfg),
        "witness-count" => witness_count(cfg),
        "witness-find" => witness_find(cfg),
        "witness-weighted" => witness_weighted(cfg),
        "scan-minor-arc" => scan_minor_arc(cfg),
        "scan-gauss" => scan_gauss(cfg),
        other => Err(Error::Parse(format!("unknown command '{other}'"))),
    }
}

fn need<T: Copy>(v: Option<T>, name: &str) -> Result<T> {
    v.ok_or_else(|| Error::Domain(format!("missing required parameter '{name}'")))
}

fn psi_of(cfg: &ExperimentConfig, default: Option<&str>) -> Result<IntPolynomial> {
    match (&cfg.psi, default) {
        (Some(s), _) => s.parse(),
        (None, Some(d)) => d.parse(),
        (None, None) => Err(Error::Domain("missing required parameter 'psi'".into())),
    }
}

/// `a/q[±θ]` directly, or a decimal approximated with `q ≤ 10^6`.
fn phase_of(text: &str) -> Result<(Phase, Option<f64>)> {
    if text.contains('/') {
        return Ok((text.parse()?, None));
    }
    let alpha: f64 = text
        .parse()
        .map_err(|_| Error::Parse(format!("bad phase '{text}', expected a/q[+θ] or a decimal")))?;
    Ok((Phase::from_real(alpha, DECIMAL_PHASE_Q)?, Some(alpha)))
}

fn phase_json(p: &Phase, approximated: Option<f64>) -> Value {
    let mut v = json!({ "a": p.a(), "q": p.q(), "theta": sig12(p.theta()) });
    if let Some(alpha) = approximated {
        v["approximated_from"] = sig12(alpha);
        v["approximation_q_max"] = json!(DECIMAL_PHASE_Q);
    }
    v
}

fn weight_of(cfg: &ExperimentConfig) -> Result<Weight> {
    let b = cfg.b.unwrap_or(1);
    let w = cfg.w.unwrap_or(1);
    let text = cfg.weight.as_deref().unwrap_or("unit");
    match text {
        "unit" => Ok(Weight::Unit),
        "prime" => Ok(Weight::PrimeWeight { b, w }),
        "delta-prime" => Ok(Weight::DeltaPrime { b, w }),
        _ => match text.strip_prefix("poly:") {
            Some(list) => {
                let coeffs = list
                    .split(',')
                    .map(|c| c.trim().parse::<i128>().map_err(|_| Error::Parse(format!("bad coefficient '{c}'"))))
                    .collect::<Result<Vec<_>>>()?;
                Ok(Weight::Poly(Polynomial::from_ascending(coeffs)))
            }
            None => Err(Error::Parse(format!(
                "unknown weight '{text}', expected unit, prime, delta-prime or poly:c0,c1,…"
            ))),
        },
    }
}

fn needs_table(w: &Weight) -> bool {
    matches!(w, Weight::PrimeWeight { .. } | Weight::DeltaPrime { .. })
}

fn table(cfg: &ExperimentConfig, limit: u64) -> Result<PrimeTable> {
    let limit = limit.max(2);
    match &cfg.sieve_cache {
        Some(dir) => PrimeTable::build_cached(limit, dir),
        None => PrimeTable::build_env(limit),
    }
}

fn prime_limit(w: &Weight, n: u64) -> Result<u64> {
    match *w {
        Weight::PrimeWeight { b, w } | Weight::DeltaPrime { b, w } => {
            let b = arclab_core::primetools::reduce_residue(b, w)?;
            w.checked_mul(n).and_then(|v| v.checked_add(b)).ok_or_else(|| Error::Range("W·N + b overflows".into()))
        }
        _ => Ok(2),
    }
}

fn complex(z: arclab_core::Complex64) -> Value {
    json!({ "re": sig12(z.re), "im": sig12(z.im), "abs": sig12(z.norm()) })
}

fn sieve(cfg: &ExperimentConfig) -> Result<Output> {
    let limit = need(cfg.limit, "limit")?;
    let t = table(cfg, limit)?;
    let count = t.prime_count(limit)?;
    let largest = t.primes_in(0, limit).last();
    Ok(Output::Records(vec![json!({
        "command": "sieve",
        "limit": limit,
        "prime_count": count,
        "largest_prime": largest,
    })]))
}

fn expsum(cfg: &ExperimentConfig) -> Result<Output> {
    let psi = psi_of(cfg, None)?;
    let (phase, approx) = phase_of(cfg.phase.as_deref().ok_or_else(|| Error::Domain("missing 'phase'".into()))?)?;
    let n = need(cfg.n, "n")?;
    let weight = weight_of(cfg)?;
    let t = if needs_table(&weight) { Some(table(cfg, prime_limit(&weight, n)?)?) } else { None };
    let s = weyl_sum(&psi, &phase, n, &weight, t.as_ref())?;
    let mut rec = json!({
        "command": "expsum",
        "psi": psi.to_string(),
        "n": n,
        "phase": phase_json(&phase, approx),
        "weight": cfg.weight.as_deref().unwrap_or("unit"),
        "method": method_for(&phase),
    });
    merge(&mut rec, complex(s));
    Ok(Output::Records(vec![rec]))
}

fn merge(into: &mut Value, from: Value) {
    if let (Value::Object(a), Value::Object(b)) = (into, from) {
        a.extend(b);
    }
}

fn scheme_of(cfg: &ExperimentConfig) -> Result<ArcKind> {
    match cfg.scheme.as_deref().unwrap_or("log") {
        "power" => Ok(ArcKind::PowerNu(cfg.nu.unwrap_or(0.5))),
        "log" => Ok(ArcKind::LogPower(cfg.big_b.unwrap_or(1.0))),
        "fixed" => {
            let q_max = need(cfg.q_max, "q_max")?;
            let halfwidth = cfg.halfwidth.unwrap_or(1.0 / (4.0 * (q_max * q_max) as f64));
            Ok(ArcKind::Fixed { q_max, halfwidth })
        }
        other => Err(Error::Parse(format!("unknown scheme '{other}', expected power, log or fixed"))),
    }
}

fn arcs_classify(cfg: &ExperimentConfig) -> Result<Output> {
    let psi = psi_of(cfg, None)?;
    let n = need(cfg.n, "n")?;
    let text = cfg.phase.as_deref().ok_or_else(|| Error::Domain("missing 'phase'".into()))?;
    let alpha = match phase_of(text)? {
        (_, Some(a)) => a,
        (p, None) => p.value(),
    };
    let scheme = ArcScheme::new(scheme_of(cfg)?, &psi, n)?;
    let class = scheme.classify(alpha)?;
    let (a, q) = class.fraction();
    Ok(Output::Records(vec![json!({
        "command": "arcs-classify",
        "psi": psi.to_string(),
        "n": n,
        "alpha": sig12(alpha),
        "class": if matches!(class, ArcClass::Major { .. }) { "major" } else { "minor" },
        "a": a,
        "q": q,
        "cutoff": scheme.cutoff(),
        "halfwidth": sig12(scheme.halfwidth(q)),
    })]))
}

fn arcs_moment(cfg: &ExperimentConfig) -> Result<Output> {
    let psi = psi_of(cfg, None)?;
    let n = need(cfg.n, "n")?;
    let rho = cfg.rho.unwrap_or(2.0);
    let weight = weight_of(cfg)?;
    let t = if needs_table(&weight) { Some(table(cfg, prime_limit(&weight, n)?)?) } else { None };
    let psi_n = psi.eval(n as i128)?;
    let even = rho.fract() == 0.0 && rho >= 2.0 && rho as u32 % 2 == 0;
    let default_points = {
        let l = (rho / 2.0).ceil().max(1.0) as i128;
        usize::try_from(2 * l * psi_n.abs() + 1).map_err(|_| Error::Range("grid size overflows".into()))?
    };
    let points = cfg.points.unwrap_or(default_points);
    let mut rec = json!({
        "command": "arcs-moment",
        "psi": psi.to_string(),
        "n": n,
        "rho": sig12(rho),
        "points": points,
        "weight": cfg.weight.as_deref().unwrap_or("unit"),
    });
    if even && points >= default_points {
        let m = moment_cross_checked(&psi, &weight, n, rho as u32, points, t.as_ref())?;
        rec["moment"] = sig12(m.quadrature);
        rec["exact"] = sig12(m.exact);
        rec["relative_error"] = sig12(m.relative_error());
    } else {
        rec["moment"] = sig12(moment(&psi, &weight, n, rho, points, t.as_ref())?);
    }
    Ok(Output::Records(vec![rec]))
}

fn vaughan_verify(cfg: &ExperimentConfig) -> Result<Output> {
    let psi = psi_of(cfg, Some("x^2"))?;
    let (phase, approx) = phase_of(cfg.phase.as_deref().unwrap_or(GOLDEN))?;
    let n = need(cfg.n, "n")?;
    let (b, w) = (cfg.b.unwrap_or(1), cfg.w.unwrap_or(1));
    let t = table(cfg, prime_limit(&Weight::PrimeWeight { b, w }, n)?)?;
    let r = verify_minor_arc(&psi, b, w, &phase, n, &t)?;
    Ok(Output::Records(vec![json!({
        "command": "vaughan-verify",
        "psi": psi.to_string(),
        "phase": phase_json(&phase, approx),
        "b": b,
        "w": w,
        "n": r.n,
        "v": r.v,
        "x": r.x,
        "direct": complex(r.direct),
        "reconstructed": complex(r.reconstructed),
        "residual": sig12(r.residual),
        "ratio_to_n": sig12(r.ratio_to_n),
        "is_minor": r.is_minor,
        "bound": sig12(r.bound),
    })]))
}

fn transference(cfg: &ExperimentConfig) -> Result<Output> {
    let psi = psi_of(cfg, Some("x^2"))?;
    let n = need(cfg.n, "n")?;
    let delta = cfg.delta.unwrap_or(0.5);
    let choice = match (cfg.modulus, cfg.w) {
        (Some(m), _) => WChoice::Modulus(m),
        (None, Some(w)) => WChoice::Given(w),
        (None, None) => WChoice::Default,
    };
    let def = TransferenceConfig::default();
    let tc = TransferenceConfig {
        eta: cfg.eta.unwrap_or(def.eta),
        eps: cfg.eps.unwrap_or(def.eps),
        rho: cfg.rho.unwrap_or(def.rho),
        enforce_guard: false,
    };
    let t = table(cfg, n)?;
    let primes: Vec<u64> = t.primes_in(0, n).collect();
    let (_, _, r) = transfer(&primes, n, &psi, delta, choice, &tc)?;
    Ok(Output::Records(vec![json!({
        "command": "transfer",
        "psi": psi.to_string(),
        "n": n,
        "delta": sig12(delta),
        "w": r.w,
        "modulus": r.modulus,
        "t": r.t,
        "b": r.b,
        "big_n": r.big_n,
        "set_size": r.set_size,
        "mass": sig12(r.mass),
        "threshold": sig12(r.threshold),
        "mass_ok": r.mass_ok,
        "spectrum_size": r.spectrum_size,
        "bohr_size": r.bohr_size,
        "smoothed_mass": sig12(r.smoothed_mass),
        "linfty": sig12(r.linfty),
        "linfty_ok": r.linfty_ok,
        "restriction": sig12(r.restriction),
        "guard_lhs": sig12(r.guard_lhs),
        "guard_rhs": sig12(r.guard_rhs),
        "guard_holds": r.guard_holds,
    })]))
}

/// Sieve limit `W·M + 1` covering every `z` with `ψ(z) ≤ n - 1`.
fn witness_limit(psi: &IntPolynomial, w: u64, n: u64) -> Result<u64> {
    let m = if n >= 2 { psi.inverse_max(n as i128 - 1)? } else { 0 };
    w.checked_mul(m).and_then(|v| v.checked_add(1)).ok_or_else(|| Error::Range("W·M + 1 overflows".into()))
}

fn samples_json(r: &WitnessReport) -> Value {
    Value::Array(r.samples.iter().map(|&(x, y, z)| json!([x, y, z])).collect())
}

fn witness_count(cfg: &ExperimentConfig) -> Result<Output> {
    let psi = psi_of(cfg, Some("z^2"))?;
    let w = cfg.w.unwrap_or(1);
    let set = generate(
        cfg.set.as_deref().ok_or_else(|| Error::Domain("missing 'set'".into()))?,
        cfg.seed.unwrap_or(0),
        cfg.n,
    )?;
    let t = table(cfg, witness_limit(&psi, w, set.n)?)?;
    let methods: Vec<CountMethod> = match cfg.method.as_deref().unwrap_or("both") {
        "both" => vec![CountMethod::BruteForce, CountMethod::Fft],
        "brute" => vec![CountMethod::BruteForce],
        "fft" => vec![CountMethod::Fft],
        other => return Err(Error::Parse(format!("unknown method '{other}', expected brute, fft or both"))),
    };
    let mut rec = json!({
        "command": "witness-count",
        "psi": psi.to_string(),
        "w": w,
        "n": set.n,
        "set_size": set.elements.len(),
    });
    let mut counts = Vec::new();
    let mut last = None;
    for m in methods {
        let r = count_witnesses(&set.elements, set.n, &psi, w, &t, m)?;
        rec[format!("count_{}", m.name())] = json!(r.count);
        counts.push(r.count);
        last = Some(r);
    }
    if counts.len() == 2 {
        rec["agree"] = json!(counts[0] == counts[1]);
    }
    if let Some(r) = last {
        rec["samples"] = samples_json(&r);
    }
    Ok(Output::Records(vec![rec]))
}

fn witness_find(cfg: &ExperimentConfig) -> Result<Output> {
    let psi = psi_of(cfg, Some("z^2"))?;
    let w = cfg.w.unwrap_or(1);
    let set = generate(
        cfg.set.as_deref().ok_or_else(|| Error::Domain("missing 'set'".into()))?,
        cfg.seed.unwrap_or(0),
        cfg.n,
    )?;
    let t = table(cfg, witness_limit(&psi, w, set.n)?)?;
    let mut schedule = Schedule::default();
    if let Some(q) = cfg.q_max {
        schedule.q_cap = q;
    }
    let tr = find_witnesses(&set.elements, set.n, &psi, w, &t, &schedule)?;
    let steps: Vec<Value> = tr
        .steps
        .iter()
        .map(|s| {
            json!({
                "q": s.q,
                "b": s.b,
                "m": s.m,
                "delta_before": sig12(s.delta_before),
                "delta_after": sig12(s.delta_after),
            })
        })
        .collect();
    let mut rec = json!({
        "command": "witness-find",
        "psi": psi.to_string(),
        "w": w,
        "n": set.n,
        "set_size": set.elements.len(),
        "steps": steps,
    });
    match tr.terminal {
        Terminal::Witnesses { depth, report } => {
            rec["terminal"] = json!("witnesses");
            rec["depth"] = json!(depth);
            rec["count_at_depth"] = json!(report.count);
            rec["samples"] = samples_json(&report);
        }
        Terminal::Exhausted(why) => {
            rec["terminal"] = json!("exhausted");
            rec["reason"] = json!(why);
        }
    }
    Ok(Output::Records(vec![rec]))
}

fn witness_weighted(cfg: &ExperimentConfig) -> Result<Output> {
    let psi = psi_of(cfg, Some("z^2"))?;
    let w = cfg.w.unwrap_or(1);
    let big_n = need(cfg.big_n, "big_n")?;
    let set = generate(
        cfg.set.as_deref().ok_or_else(|| Error::Domain("missing 'set'".into()))?,
        cfg.seed.unwrap_or(0),
        cfg.n,
    )?;
    let t = table(cfg, witness_limit(&psi, w, big_n / 2)?)?;
    let r = weighted_count(&set.elements, &psi, w, big_n, &t)?;
    Ok(Output::Records(vec![json!({
        "command": "witness-weighted",
        "psi": psi.to_string(),
        "w": w,
        "big_n": big_n,
        "m": r.m,
        "direct": sig12(r.direct),
        "fourier": sig12(r.fourier),
        "relative_gap": sig12(r.relative_gap()),
    })]))
}

fn grid_of(cfg: &ExperimentConfig, default: &[u64]) -> Result<Vec<u64>> {
    let g = cfg.grid.clone().unwrap_or_else(|| default.to_vec());
    if g.is_empty() {
        return Err(Error::Domain("scan grid is empty".into()));
    }
    Ok(g)
}

fn scan_minor_arc(cfg: &ExperimentConfig) -> Result<Output> {
    let psi = psi_of(cfg, Some("x^2"))?;
    let (phase, _) = phase_of(cfg.phase.as_deref().unwrap_or(GOLDEN))?;
    let (b, w) = (cfg.b.unwrap_or(1), cfg.w.unwrap_or(1));
    let grid = grid_of(cfg, &[10_000, 40_000, 160_000])?;
    let top = *grid.iter().max().unwrap();
    let t = table(cfg, prime_limit(&Weight::PrimeWeight { b, w }, top)?)?;
    let mut rows = Vec::with_capacity(grid.len());
    for &n in &grid {
        let r = verify_minor_arc(&psi, b, w, &phase, n, &t)?;
        rows.push(vec![
            json!(n),
            sig12(r.direct.norm()),
            sig12(r.ratio_to_n),
            sig12(r.residual),
            json!(r.is_minor),
            sig12(r.bound),
        ]);
    }
    Ok(Output::Table { header: vec!["n", "abs_sum", "ratio_to_n", "residual", "is_minor", "bound"], rows })
}

/// Every prime `q ≤ q_max` (odd primes for the default `x²`), with all
/// `a` coprime to `q` taken from one transform per modulus.
fn scan_gauss(cfg: &ExperimentConfig) -> Result<Output> {
    let psi = psi_of(cfg, Some("x^2"))?;
    let q_max = cfg.q_max.unwrap_or(2000);
    let lo = if cfg.psi.is_none() { 3 } else { 2 };
    let t = table(cfg, q_max)?;
    let qs: Vec<u64> = t.primes_in(lo, q_max).collect();
    if qs.is_empty() {
        return Err(Error::Domain(format!("no primes in [{lo}, {q_max}]")));
    }
    let rows = qs
        .iter()
        .map(|&q| {
            let all = complete_sums_all(&psi, q);
            let root = (q as f64).sqrt();
            let (mut lo_r, mut hi_r) = (f64::INFINITY, 0.0f64);
            for g in &all[1..] {
                let r = g.norm() / root;
                lo_r = lo_r.min(r);
                hi_r = hi_r.max(r);
            }
            vec![json!(q), json!(q - 1), sig12(lo_r), sig12(hi_r)]
        })
        .collect();
    Ok(Output::Table { header: vec!["q", "a_count", "min_ratio", "max_ratio"], rows })
}
