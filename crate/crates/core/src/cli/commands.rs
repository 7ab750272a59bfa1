use rand::Rng;
use serde_json::{json, Value};

use super::config::{RunConfig, SplitInput};
use super::{csv_table, fixed, json_text, Base, CliError, Command, Format, Output, Settings};
use crate::bcc::{canonicalize, cross_section, enhance, kkt_check, region_trace, CanonicalChannel, SurfaceSample, TraceConfig};
use crate::dmc::{self, fm_conditions, generate_code, simulate, sl_region_eval, CodeParams, FmReport, JointAuxDist, SimReport};
use crate::error::Error;
use crate::linalg::SymMatrix;
use crate::oracle::{cs_bruteforce, cs_closed_form};
use crate::wiretap::{capacity, ce_region, pc_region, secrecy_capacity, ChannelPair, PowerConstraint, RegionPolygon};
use crate::{rng, OptimizerConfig};

pub(super) fn dispatch(command: Command, cfg: &RunConfig, st: Settings) -> Result<Output, CliError> {
    match command {
        Command::Capacity => cmd_capacity(cfg, st),
        Command::SecrecyCapacity => cmd_secrecy_capacity(cfg, st),
        Command::CeRegion => cmd_region(cfg, st, true),
        Command::PcRegion => cmd_region(cfg, st, false),
        Command::BccRegion => cmd_bcc_region(cfg, st),
        Command::CrossSection => cmd_cross_section(cfg, st),
        Command::KktCheck => cmd_kkt(cfg, st, false),
        Command::Enhance => cmd_kkt(cfg, st, true),
        Command::SimulateDmc => cmd_simulate(cfg, st),
        Command::OracleCheck => cmd_oracle_check(cfg, st),
    }
}

fn optimizer(cfg: &RunConfig, st: Settings) -> OptimizerConfig {
    OptimizerConfig { seed: st.seed, ..cfg.optimizer }
}

fn trace_config(cfg: &RunConfig, st: Settings) -> TraceConfig {
    let mut t = cfg.trace;
    t.solve.optimizer.seed = st.seed;
    t
}

fn wiretap(cfg: &RunConfig) -> Result<ChannelPair, CliError> {
    let (h_r, h_e) = cfg.wiretap_channel()?;
    Ok(ChannelPair::new(h_r, h_e)?)
}

fn scalar(st: Settings, key: &str, nats: f64, extra: Value) -> String {
    let v = st.base.rate(nats);
    match st.format {
        Format::Csv => format!("{}\n", fixed(v)),
        Format::Json => {
            let mut doc = json!({ key: v, "base": st.base.name() });
            if let (Value::Object(d), Value::Object(e)) = (&mut doc, extra) {
                d.extend(e);
            }
            json_text(&doc)
        }
    }
}

fn cmd_capacity(cfg: &RunConfig, st: Settings) -> Result<Output, CliError> {
    let h_r = cfg.receiver_channel()?;
    let s = cfg.matrix_constraint("capacity")?;
    Ok(Output::ok(scalar(st, "capacity", capacity(&h_r, &s)?, json!({}))))
}

fn cmd_secrecy_capacity(cfg: &RunConfig, st: Settings) -> Result<Output, CliError> {
    let ch = wiretap(cfg)?;
    let s = cfg.matrix_constraint("secrecy-capacity")?;
    let r = secrecy_capacity(&ch, &s, &optimizer(cfg, st))?;
    let extra = json!({
        "b_star": r.b_star,
        "iterations": r.iterations,
        "converged": r.converged,
        "oracle_gap": r.oracle_gap.map(|g| st.base.rate(g)),
    });
    Ok(Output::ok(scalar(st, "secrecy_capacity", r.value, extra)))
}

fn polygon_json(poly: &RegionPolygon, base: Base) -> Value {
    json!({
        "axis_labels": [poly.axis_labels.0, poly.axis_labels.1],
        "vertices": poly.vertices.iter().map(|&(x, y)| [base.rate(x), base.rate(y)]).collect::<Vec<_>>(),
    })
}

fn cmd_region(cfg: &RunConfig, st: Settings, ce: bool) -> Result<Output, CliError> {
    let ch = wiretap(cfg)?;
    let pc = cfg.power_constraint()?;
    let opt = optimizer(cfg, st);
    let poly = if ce { ce_region(&ch, &pc, &opt)? } else { pc_region(&ch, &pc, &opt)? };
    let text = match st.format {
        Format::Csv => {
            let rows: Vec<Vec<f64>> = poly.vertices.iter().map(|&(x, y)| vec![st.base.rate(x), st.base.rate(y)]).collect();
            csv_table(&[&poly.axis_labels.0, &poly.axis_labels.1], &rows)
        }
        Format::Json => {
            let mut doc = polygon_json(&poly, st.base);
            doc["base"] = json!(st.base.name());
            if let PowerConstraint::MatrixS(s) = &pc {
                let r = secrecy_capacity(&ch, s, &opt)?;
                doc["input_covariance"] = json!(s);
                doc["secrecy_covariance"] = json!(r.b_star);
            }
            json_text(&doc)
        }
    };
    Ok(Output::ok(text))
}

fn bcc_inputs(cfg: &RunConfig) -> Result<(nalgebra::DMatrix<f64>, nalgebra::DMatrix<f64>, SymMatrix), CliError> {
    let (h1, h2) = cfg.broadcast_channel()?;
    let s = cfg.matrix_constraint("broadcast region commands")?;
    Ok((h1, h2, s))
}

fn sample_json(smp: &SurfaceSample, base: Base) -> Value {
    json!({
        "r0_index": smp.r0_index,
        "direction_index": smp.direction_index,
        "r0_target": base.rate(smp.r0_target),
        "lambda": [smp.lambda.0, smp.lambda.1],
        "r0": base.rate(smp.rates.r0),
        "r1": base.rate(smp.rates.r1),
        "r2": base.rate(smp.rates.r2),
        "split": smp.split,
        "beta": smp.beta,
        "converged": smp.converged,
    })
}

fn samples_out(samples: &[SurfaceSample], st: Settings, extra: Value) -> String {
    match st.format {
        Format::Csv => {
            let rows: Vec<Vec<f64>> = samples
                .iter()
                .map(|s| vec![st.base.rate(s.rates.r0), st.base.rate(s.rates.r1), st.base.rate(s.rates.r2)])
                .collect();
            csv_table(&["r0", "r1", "r2"], &rows)
        }
        Format::Json => {
            let mut doc = json!({
                "base": st.base.name(),
                "samples": samples.iter().map(|s| sample_json(s, st.base)).collect::<Vec<_>>(),
            });
            if let (Value::Object(d), Value::Object(e)) = (&mut doc, extra) {
                d.extend(e);
            }
            json_text(&doc)
        }
    }
}

fn cmd_bcc_region(cfg: &RunConfig, st: Settings) -> Result<Output, CliError> {
    let (h1, h2, s) = bcc_inputs(cfg)?;
    let surf = region_trace(&h1, &h2, &s, &trace_config(cfg, st))?;
    let extra = json!({ "r0_max": st.base.rate(surf.r0_max), "perturbed": surf.perturbed });
    Ok(Output::ok(samples_out(&surf.samples, st, extra)))
}

fn r0_target(cfg: &RunConfig, cc: &CanonicalChannel, given: Option<f64>) -> Result<f64, CliError> {
    match (given, cfg.bcc.r0_fraction) {
        (Some(r), None) => Ok(r),
        (None, Some(f)) if (0.0..=1.0).contains(&f) => Ok(f * cc.r0_max()?),
        (None, Some(f)) => Err(CliError::Config(format!("[bcc] r0_fraction must lie in [0, 1], got {f}"))),
        (None, None) => Err(CliError::Config("missing [bcc] r0 or r0_fraction".into())),
        (Some(_), Some(_)) => Err(CliError::Config("give either [bcc] r0 or r0_fraction, not both".into())),
    }
}

fn cmd_cross_section(cfg: &RunConfig, st: Settings) -> Result<Output, CliError> {
    let (h1, h2, s) = bcc_inputs(cfg)?;
    let tc = trace_config(cfg, st);
    let cc = canonicalize(&h1, &h2, &s, tc.eps)?;
    let r0 = r0_target(cfg, &cc, cfg.bcc.r0)?;
    let samples = cross_section(&h1, &h2, &s, r0, &tc)?;
    let extra = json!({ "r0_max": st.base.rate(cc.r0_max()?), "r0_target": st.base.rate(r0) });
    Ok(Output::ok(samples_out(&samples, st, extra)))
}

fn residual_rows(residuals: &std::collections::BTreeMap<String, f64>, passed: bool) -> String {
    let mut out = String::from("name,value\n");
    for (k, v) in residuals {
        out.push_str(&format!("{k},{v:e}\n"));
    }
    out.push_str(&format!("passed,{passed}\n"));
    out
}

fn cmd_kkt(cfg: &RunConfig, st: Settings, with_enhancement: bool) -> Result<Output, CliError> {
    let (h1, h2, s) = bcc_inputs(cfg)?;
    let cc = canonicalize(&h1, &h2, &s, cfg.trace.eps)?;
    let SplitInput { split, lambda, beta, r0_target: given_r0 } = cfg.split_input()?;
    split.validate(&cc.s).map_err(|e| CliError::Config(format!("split is infeasible: {e}")))?;
    let lambda = lambda.ok_or_else(|| CliError::Config("missing [bcc] lambda".into()))?;
    let beta = beta.unwrap_or([0.0, 0.0]);
    let r0 = match (given_r0, cfg.bcc.r0_fraction) {
        (None, None) => 0.0,
        (g, _) => r0_target(cfg, &cc, g)?,
    };
    let cert = kkt_check(&cc, &split, (lambda[0], lambda[1]), (beta[0], beta[1]), r0, cfg.tolerances.kkt)?;
    if !with_enhancement {
        let text = match st.format {
            Format::Csv => residual_rows(&cert.residuals, cert.passed),
            Format::Json => json_text(&json!({
                "passed": cert.passed,
                "tol": cert.tol,
                "residuals": cert.residuals,
                "m0": cert.m0,
                "m1": cert.m1,
                "m2": cert.m2,
                "lambda": [cert.lambda1, cert.lambda2],
                "beta": [cert.beta1, cert.beta2],
                "r0_target": st.base.rate(cert.r0_target),
                "active": cert.active,
                "base": st.base.name(),
            })),
        };
        return Ok(Output { text, passed: cert.passed });
    }
    let e = enhance(&cc, &cert, &split)?;
    let passed = e.ok();
    let text = match st.format {
        Format::Csv => residual_rows(&e.residuals, passed),
        Format::Json => json_text(&json!({
            "passed": passed,
            "certificate_passed": e.certificate_passed,
            "flagged": e.flagged,
            "residuals": e.residuals,
            "n_tilde": e.n_tilde,
            "n1": cc.n1,
            "n2": cc.n2,
            "perturbed": cc.perturbed,
        })),
    };
    Ok(Output { text, passed })
}

fn fm_json(fm: &FmReport, base: Base) -> Value {
    let cond = |c: &dmc::FmCondition| json!({ "margin": base.rate(c.margin), "holds": c.holds });
    json!({
        "i_uy": base.rate(fm.terms.i_uy),
        "i_vy_given_u": base.rate(fm.terms.i_vy_given_u),
        "i_vz_given_u": base.rate(fm.terms.i_vz_given_u),
        "i_vy": base.rate(fm.terms.i_vy),
        "u_decoding": cond(&fm.u_decoding),
        "v_decoding": cond(&fm.v_decoding),
        "secrecy": cond(&fm.secrecy),
    })
}

fn report_json(r: &SimReport, base: Base) -> Value {
    let rr = &r.realized_rates;
    json!({
        "n": r.n,
        "trials": r.trials,
        "decode_error_rate": r.decode_error_rate,
        "leakage_per_symbol": r.leakage_per_symbol.map(|v| base.rate(v)),
        "leakage_stderr": r.leakage_stderr.map(|v| base.rate(v)),
        "ws_entropy_per_symbol": base.rate(r.ws_entropy_per_symbol),
        "sizes": r.sizes,
        "realized_rates": {
            "rp_prime": base.rate(rr.rp_prime),
            "rs": base.rate(rr.rs),
            "rp_dblprime": base.rate(rr.rp_dblprime),
            "t_rate": base.rate(rr.t_rate),
        },
    })
}

fn cmd_simulate(cfg: &RunConfig, st: Settings) -> Result<Output, CliError> {
    let spec = cfg.dmc_spec()?;
    let dist: JointAuxDist = match cfg.dmc_dist()? {
        Some(d) => d,
        None => {
            let grid = dmc::DistGrid { seed: st.seed, ..cfg.dmc.grid };
            let eval = sl_region_eval(&spec, &grid)?;
            eval.corner()
                .and_then(|c| c.dist.clone())
                .ok_or_else(|| CliError::Config("region search found no corner distribution".into()))?
        }
    };
    let lengths = cfg.dmc.block_lengths.clone().unwrap_or_else(|| vec![cfg.dmc.code.n]);
    let sim_seed: u64 = rng::stream(st.seed, 1).random();
    let mut reports = Vec::with_capacity(lengths.len());
    let mut fm = None;
    for n in lengths {
        let params = CodeParams { n, seed: st.seed, ..cfg.dmc.code };
        let code = generate_code(&spec, &dist, &params)?;
        let sim = dmc::SimConfig { seed: sim_seed, ..cfg.dmc.sim };
        reports.push(simulate(&code, &sim)?);
        fm = Some(fm_conditions(&params, &dist, &spec)?);
    }
    let fm = fm.ok_or_else(|| CliError::Config("[dmc] block_lengths is empty".into()))?;
    let text = match st.format {
        Format::Csv => {
            let mut out = String::from("n,trials,decode_error_rate,leakage_per_symbol,leakage_stderr,rs,rp_prime,rp_dblprime,t_rate\n");
            for r in &reports {
                let opt = |v: Option<f64>| v.map(|x| fixed(st.base.rate(x))).unwrap_or_default();
                let rr = &r.realized_rates;
                out.push_str(&format!(
                    "{},{},{},{},{},{},{},{},{}\n",
                    r.n,
                    r.trials,
                    fixed(r.decode_error_rate),
                    opt(r.leakage_per_symbol),
                    opt(r.leakage_stderr),
                    fixed(st.base.rate(rr.rs)),
                    fixed(st.base.rate(rr.rp_prime)),
                    fixed(st.base.rate(rr.rp_dblprime)),
                    fixed(st.base.rate(rr.t_rate)),
                ));
            }
            out
        }
        Format::Json => json_text(&json!({
            "base": st.base.name(),
            "dist": dist,
            "fm_conditions": fm_json(&fm, st.base),
            "reports": reports.iter().map(|r| report_json(r, st.base)).collect::<Vec<_>>(),
        })),
    };
    Ok(Output::ok(text))
}

fn cmd_oracle_check(cfg: &RunConfig, st: Settings) -> Result<Output, CliError> {
    let ch = wiretap(cfg)?;
    let s = cfg.matrix_constraint("oracle-check")?;
    let opt = optimizer(cfg, st);
    let solved = secrecy_capacity(&ch, &s, &opt)?.value;
    let oracle_cfg = crate::oracle::OracleConfig { seed: st.seed, ..cfg.oracle };
    let brute = cs_bruteforce(&ch, &s, &oracle_cfg)?;
    let closed = match cs_closed_form(&ch, &s) {
        Ok(v) => Some(v),
        Err(Error::NotPositiveDefinite { .. }) => None,
        Err(e) => return Err(e.into()),
    };
    let values: Vec<f64> = [Some(solved), Some(brute), closed].into_iter().flatten().collect();
    let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
    let gap = hi - lo;
    let passed = gap <= cfg.tolerances.oracle;
    let text = match st.format {
        Format::Csv => {
            let mut out = String::from("method,value\n");
            out.push_str(&format!("secrecy_capacity,{}\n", fixed(st.base.rate(solved))));
            out.push_str(&format!("cs_bruteforce,{}\n", fixed(st.base.rate(brute))));
            if let Some(c) = closed {
                out.push_str(&format!("cs_closed_form,{}\n", fixed(st.base.rate(c))));
            }
            out.push_str(&format!("max_gap,{}\n", fixed(st.base.rate(gap))));
            out
        }
        Format::Json => json_text(&json!({
            "base": st.base.name(),
            "secrecy_capacity": st.base.rate(solved),
            "cs_bruteforce": st.base.rate(brute),
            "cs_closed_form": closed.map(|c| st.base.rate(c)),
            "max_gap": st.base.rate(gap),
            "tol": st.base.rate(cfg.tolerances.oracle),
            "passed": passed,
        })),
    };
    Ok(Output { text, passed })
}
