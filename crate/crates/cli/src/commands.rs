use serde_json::{json, Value};

use sublevel::cnseq::{cn_series, doubling_checkpoint_count};
use sublevel::experiments::{
    best_constant_probe, conj3_trial, pn, pn_qn_row, qn, root_angles, star_discrepancy,
    Conj3Family, PnQnRow,
};
use sublevel::mahler::cyclotomic::CycloEvalPlan;
use sublevel::mahler::{
    farey_angles, fit_power_law, is_outer, jensen_detail, log_mplus_phi_n, mahler_quadrature,
    mahler_quadrature_poly, phi_n_log_evaluator, MahlerTriple, PhiNGrowthRow, PhiNOptions,
    QuadratureOptions,
};
use sublevel::meanmeasure::{
    estimate_j, estimate_k, estimate_xi, log_moment_bound, log_moment_bound_integrated,
    mean_log_minus_p, theorem1_bound, KGrid, SublevelCurve, XiParams,
};
use sublevel::sampling::{SamplingConfig, Window};
use sublevel::TrigPoly;

use crate::input::{parse_coeffs, parse_log_grid, read_trig_poly, trig_to_algebraic};
use crate::{Cli, CliError, Command, MethodArg, PolyArgs, Report, SamplingArgs, ThresholdArgs};

fn to_value<T: serde::Serialize>(v: &T) -> Result<Value, CliError> {
    serde_json::to_value(v).map_err(|e| CliError::Internal(e.to_string()))
}

impl PolyArgs {
    fn describe(&self) -> Value {
        match (&self.poly, &self.coeffs) {
            (Some(p), _) => json!({ "poly": p.display().to_string() }),
            (None, Some(c)) => json!({ "coeffs": c }),
            (None, None) => Value::Null,
        }
    }

    fn trig(&self) -> Result<TrigPoly, CliError> {
        match (&self.poly, &self.coeffs) {
            (Some(path), _) => read_trig_poly(path),
            (None, Some(list)) => Ok(TrigPoly::from_integer_coeffs(&parse_coeffs(list)?)?),
            (None, None) => Err(CliError::Input(
                "give a polynomial with --poly or --coeffs".into(),
            )),
        }
    }

    fn is_given(&self) -> bool {
        self.poly.is_some() || self.coeffs.is_some()
    }
}

impl SamplingArgs {
    fn config(&self, seed: u64) -> Result<SamplingConfig, CliError> {
        let window = match self.window {
            None => Window::Auto,
            Some(l) if l.is_finite() && l > 0.0 => Window::HalfWidth(l),
            Some(l) => {
                return Err(CliError::Input(format!(
                    "window half width must be positive, got {l}"
                )))
            }
        };
        Ok(SamplingConfig::new(self.samples, seed).with_window(window))
    }

    fn describe(&self) -> Value {
        json!({
            "samples": self.samples,
            "window": self.window.map_or(Value::from("auto"), Value::from),
        })
    }
}

impl ThresholdArgs {
    fn values(&self) -> Result<Vec<f64>, CliError> {
        match (&self.u, &self.u_grid) {
            (Some(u), _) => Ok(u.clone()),
            (None, Some(g)) => parse_log_grid(g),
            (None, None) => Err(CliError::Input(
                "give thresholds with --u or --u-grid".into(),
            )),
        }
    }
}

fn merge(parts: &[Value]) -> Value {
    let mut map = serde_json::Map::new();
    for part in parts {
        if let Value::Object(m) = part {
            map.extend(m.clone());
        }
    }
    Value::Object(map)
}

fn curve_metadata(c: &SublevelCurve) -> Value {
    json!({
        "window_half_width": c.window,
        "periodic": c.periodic,
        "doubling_drift": c.doubling_drift,
    })
}

pub fn dispatch(cli: &Cli) -> Result<Report, CliError> {
    let seed = cli.seed;
    match &cli.command {
        Command::Jf {
            poly,
            thresholds,
            sampling,
        } => {
            let f = poly.trig()?;
            let us = thresholds.values()?;
            let curve = estimate_j(&f, &us, &sampling.config(seed)?)?;
            Ok(Report {
                config: merge(&[
                    json!({ "command": "jf", "u": us }),
                    poly.describe(),
                    sampling.describe(),
                    curve_metadata(&curve),
                ]),
                header: SublevelCurve::CSV_HEADER.into(),
                rows: (0..us.len())
                    .map(|i| {
                        format!(
                            "{},{},{}",
                            curve.thresholds[i], curve.estimates[i], curve.std_errors[i]
                        )
                    })
                    .collect(),
                trailer: vec![],
                data: to_value(&curve)?,
            })
        }
        Command::Xi {
            poly,
            sampling,
            omega,
            k,
            u,
            v,
        } => {
            let f = poly.trig()?;
            let cfg = sampling.config(seed)?;
            let estimates = v
                .iter()
                .map(|&v| {
                    estimate_xi(
                        &f,
                        XiParams {
                            omega: *omega,
                            k: *k,
                            u: *u,
                            v,
                        },
                        &cfg,
                    )
                })
                .collect::<Result<Vec<_>, _>>()?;
            Ok(Report {
                config: merge(&[
                    json!({ "command": "xi", "omega": omega, "k": k, "u": u, "v": v }),
                    poly.describe(),
                    sampling.describe(),
                ]),
                header: "omega,k,u,v,xi_estimate,std_error,j_estimate,j_std_error".into(),
                rows: estimates
                    .iter()
                    .map(|e| {
                        let p = e.params;
                        format!(
                            "{},{},{},{},{},{},{},{}",
                            p.omega, p.k, p.u, p.v, e.value, e.std_error, e.j_value, e.j_std_error
                        )
                    })
                    .collect(),
                trailer: vec![],
                data: to_value(&estimates)?,
            })
        }
        Command::Kf {
            poly,
            thresholds,
            sampling,
            k_max,
            omegas,
            v_grid,
        } => {
            let f = poly.trig()?;
            let us = thresholds.values()?;
            let grid = KGrid {
                omegas: omegas.clone(),
                k_max: *k_max,
                vs: parse_log_grid(v_grid)?,
            };
            let cfg = sampling.config(seed)?;
            let estimates = us
                .iter()
                .map(|&u| estimate_k(&f, u, &grid, &cfg))
                .collect::<Result<Vec<_>, _>>()?;
            Ok(Report {
                config: merge(&[
                    json!({ "command": "kf", "u": us, "k_max": k_max, "omegas": omegas, "v_grid": v_grid }),
                    poly.describe(),
                    sampling.describe(),
                ]),
                header: "u,k_estimate,argmin_omega,argmin_k,argmin_v,xi_at_argmin,xi_std_error,j_estimate,j_std_error"
                    .into(),
                rows: estimates
                    .iter()
                    .zip(&us)
                    .map(|(e, u)| {
                        let a = e.argmin;
                        format!(
                            "{},{},{},{},{},{},{},{},{}",
                            u, e.value, a.omega, a.k, a.v, e.xi_at_argmin, e.xi_std_error, e.j_value, e.j_std_error
                        )
                    })
                    .collect(),
                trailer: vec![],
                data: to_value(&estimates)?,
            })
        }
        Command::Bound {
            poly,
            thresholds,
            sampling,
            n,
            height,
            p,
        } => bound(seed, poly, thresholds, sampling, *n, *height, p),
        Command::Cn { n_max, checkpoints } => {
            let count = checkpoints.unwrap_or_else(|| doubling_checkpoint_count(*n_max));
            let s = cn_series(*n_max, count)?;
            Ok(Report {
                config: json!({ "command": "cn", "n_max": n_max, "checkpoints": count }),
                header: "n,log_cn,cn_over_n".into(),
                rows: (0..s.n_checkpoints.len())
                    .map(|i| format!("{},{},{}", s.n_checkpoints[i], s.log_cn[i], s.ratio[i]))
                    .collect(),
                trailer: vec![],
                data: to_value(&s)?,
            })
        }
        Command::Mahler {
            poly,
            big_n,
            method,
            tol,
            max_panels,
            outer,
        } => mahler(poly, *big_n, *method, *tol, *max_panels, *outer),
        Command::PhinGrowth {
            n_list,
            big_n,
            samples,
            tol,
            max_panels,
            n_cap,
        } => {
            let ns: Vec<u64> = big_n.map_or_else(|| n_list.clone(), |n| vec![n]);
            let opts = PhiNOptions {
                quadrature: QuadratureOptions {
                    tol: *tol,
                    max_panels: *max_panels,
                },
                samples: *samples,
                seed,
                n_cap: *n_cap,
            };
            let rows = ns
                .iter()
                .map(|&n| log_mplus_phi_n(n, &opts))
                .collect::<Result<Vec<PhiNGrowthRow>, _>>()?;
            let fit = if rows.len() >= 2 {
                let x: Vec<f64> = rows.iter().map(|r| r.n as f64).collect();
                let y: Vec<f64> = rows.iter().map(|r| r.log_mplus_quadrature).collect();
                fit_power_law(&x, &y).ok()
            } else {
                None
            };
            let trailer = fit
                .map(|f| {
                    vec![format!(
                        "fit log_mplus ~ {} * N^{}",
                        f.prefactor, f.exponent
                    )]
                })
                .unwrap_or_default();
            Ok(Report {
                config: json!({
                    "command": "phin-growth", "N": ns, "samples": samples, "tol": tol,
                    "max_panels": max_panels, "n_cap": n_cap,
                }),
                header: PhiNGrowthRow::CSV_HEADER.into(),
                rows: rows.iter().map(PhiNGrowthRow::csv_row).collect(),
                trailer,
                data: json!({ "rows": to_value(&rows)?, "fit": to_value(&fit)? }),
            })
        }
        Command::Farey { big_n } => {
            let fr = farey_angles(*big_n)?;
            Ok(Report {
                config: json!({ "command": "farey", "N": big_n }),
                header: "num,den,angle".into(),
                rows: fr
                    .iter()
                    .map(|f| format!("{},{},{}", f.num, f.den, f.value()))
                    .collect(),
                trailer: vec![],
                data: to_value(&fr)?,
            })
        }
        Command::Examples { n_min, n_max, tol } => {
            if n_min > n_max {
                return Err(CliError::Input("n-min must not exceed n-max".into()));
            }
            let rows = (*n_min..=*n_max)
                .map(|n| pn_qn_row(n, *tol))
                .collect::<Result<Vec<PnQnRow>, _>>()?;
            Ok(Report {
                config: json!({ "command": "examples", "n_min": n_min, "n_max": n_max, "tol": tol }),
                header: PnQnRow::CSV_HEADER.into(),
                rows: rows.iter().map(PnQnRow::csv_row).collect(),
                trailer: vec![],
                data: to_value(&rows)?,
            })
        }
        Command::Conj3 {
            n,
            trials,
            tol,
            dense,
            real,
        } => {
            let family = Conj3Family {
                dense_exponents: *dense,
                real_coefficients: *real,
            };
            let r = conj3_trial(*n, *trials, seed, *tol, family)?;
            let (lo, med, hi) = r
                .summary
                .map_or((f64::NAN, f64::NAN, f64::NAN), |s| (s.min, s.median, s.max));
            Ok(Report {
                config: json!({
                    "command": "conj3", "n": n, "trials": trials, "tol": tol,
                    "family": r.family, "orientation": r.orientation,
                }),
                header: "n,trials,log_mminus_lower,log_mminus_upper,endpoint_lower_equal,endpoint_upper_equal,\
                         violations,unconfirmed_flags,failures,min_log_mminus,median_log_mminus,max_log_mminus"
                    .into(),
                rows: vec![format!(
                    "{},{},{},{},{},{},{},{},{},{},{},{}",
                    r.n,
                    r.trials,
                    r.log_mminus_lower,
                    r.log_mminus_upper,
                    r.endpoint_equality[0],
                    r.endpoint_equality[1],
                    r.violations.len(),
                    r.unconfirmed_flags,
                    r.failures.len(),
                    lo,
                    med,
                    hi
                )],
                trailer: r
                    .violations
                    .iter()
                    .map(|v| format!("violation trial={} log_mminus={} err={}", v.trial, v.log_mminus, v.err))
                    .collect(),
                data: to_value(&r)?,
            })
        }
        Command::BestConstant {
            n,
            trials,
            u_grid,
            samples,
        } => {
            let grid = parse_log_grid(u_grid)?;
            let r = best_constant_probe(*n, *trials, &grid, seed, *samples)?;
            Ok(Report {
                config: json!({ "command": "best-constant", "n": n, "trials": trials, "u_grid": grid, "samples": samples }),
                header: "n,trials,value,std_error,argmax_trial,argmax_u,qn_family_value,cn".into(),
                rows: vec![format!(
                    "{},{},{},{},{},{},{},{}",
                    r.n,
                    r.trials,
                    r.value,
                    r.std_error,
                    r.argmax_trial,
                    r.argmax_u,
                    r.qn_family_value,
                    r.cn
                )],
                trailer: vec![],
                data: to_value(&r)?,
            })
        }
        Command::Discrepancy {
            angles,
            pn: p,
            qn: q,
            farey,
        } => {
            let (source, points) = match (angles, p, q, farey) {
                (Some(a), _, _, _) => ("angles".to_string(), a.clone()),
                (_, Some(n), _, _) => (format!("pn({n})"), root_angles(&pn(*n)?)?),
                (_, _, Some(n), _) => (format!("qn({n})"), root_angles(&qn(*n)?)?),
                (_, _, _, Some(n)) => (
                    format!("farey({n})"),
                    farey_angles(*n)?.iter().map(|f| f.value()).collect(),
                ),
                _ => {
                    return Err(CliError::Input(
                        "give --angles, --pn, --qn or --farey".into(),
                    ))
                }
            };
            let d = star_discrepancy(&points)?;
            Ok(Report {
                config: json!({ "command": "discrepancy", "source": source }),
                header: "source,points,star_discrepancy".into(),
                rows: vec![format!("{},{},{}", source, points.len(), d)],
                trailer: vec![],
                data: json!({ "source": source, "points": points.len(), "star_discrepancy": d }),
            })
        }
        Command::Lemma2 { trials } => {
            let r = sublevel::meanmeasure::lemma2_trial(seed, *trials)?;
            Ok(Report {
                config: json!({ "command": "lemma2", "trials": trials }),
                header: "trials,accepted,violations,skipped_degenerate,rejected_not_quadrant,attempts,max_ratio".into(),
                rows: vec![format!(
                    "{},{},{},{},{},{},{}",
                    r.trials, r.accepted, r.violations, r.skipped_degenerate, r.rejected_not_quadrant, r.attempts, r.max_ratio
                )],
                trailer: vec![],
                data: to_value(&r)?,
            })
        }
    }
}

fn bound(
    seed: u64,
    poly: &PolyArgs,
    thresholds: &ThresholdArgs,
    sampling: &SamplingArgs,
    n: Option<u64>,
    height: Option<f64>,
    p: &Option<Vec<f64>>,
) -> Result<Report, CliError> {
    let f = if poly.is_given() {
        Some(poly.trig()?)
    } else {
        None
    };
    let n = match (n, &f) {
        (Some(n), _) => n,
        (None, Some(f)) => (f.len() as u64).saturating_sub(1),
        (None, None) => return Err(CliError::Input("give --n or a polynomial".into())),
    };
    let height = match (height, &f) {
        (Some(h), _) => h,
        (None, Some(f)) => f.height()?,
        (None, None) => return Err(CliError::Input("give --height or a polynomial".into())),
    };
    let base = merge(&[
        json!({ "command": "bound", "n": n, "height": height }),
        poly.describe(),
        if f.is_some() {
            sampling.describe()
        } else {
            Value::Null
        },
    ]);
    let cfg = sampling.config(seed)?;

    if let Some(ps) = p {
        let mut rows = Vec::new();
        let mut data = Vec::new();
        for &p in ps {
            let stated = log_moment_bound(n, height, p)?;
            let integrated = log_moment_bound_integrated(n, height, p)?;
            let mean = f
                .as_ref()
                .map(|f| mean_log_minus_p(f, p, &cfg))
                .transpose()?;
            rows.push(match mean {
                Some(m) => format!("{p},{stated},{integrated},{},{}", m.value, m.std_error),
                None => format!("{p},{stated},{integrated},,"),
            });
            data.push(json!({ "p": p, "bound": stated, "bound_integrated": integrated, "mean": to_value(&mean)? }));
        }
        return Ok(Report {
            config: merge(&[base, json!({ "p": ps })]),
            header: "p,bound,bound_integrated,mean_log_minus_p,std_error".into(),
            rows,
            trailer: vec![],
            data: Value::Array(data),
        });
    }

    let us = thresholds.values()?;
    let bounds = us
        .iter()
        .map(|&u| theorem1_bound(n, height, u))
        .collect::<Result<Vec<_>, _>>()?;
    let curve = f.as_ref().map(|f| estimate_j(f, &us, &cfg)).transpose()?;
    let rows = (0..us.len())
        .map(|i| match &curve {
            Some(c) => format!(
                "{},{},{},{}",
                us[i], bounds[i], c.estimates[i], c.std_errors[i]
            ),
            None => format!("{},{},,", us[i], bounds[i]),
        })
        .collect();
    Ok(Report {
        config: merge(&[base, json!({ "u": us })]),
        header: "u,bound,j_estimate,std_error".into(),
        rows,
        trailer: vec![],
        data: json!({ "u": us, "bound": bounds, "curve": to_value(&curve)? }),
    })
}

fn triple_row(t: &MahlerTriple) -> String {
    let method = serde_json::to_value(t.method)
        .ok()
        .and_then(|v| v.as_str().map(str::to_owned))
        .unwrap_or_default();
    format!(
        "{},{},{},{},{},{},{},{}",
        method, t.log_m, t.log_m_plus, t.log_m_minus, t.m, t.m_plus, t.m_minus, t.err
    )
}

fn mahler(
    poly: &PolyArgs,
    big_n: Option<u64>,
    method: MethodArg,
    tol: f64,
    max_panels: usize,
    outer: bool,
) -> Result<Report, CliError> {
    let opts = QuadratureOptions { tol, max_panels };
    let mut triples = Vec::new();
    let mut extra = serde_json::Map::new();
    let config;
    if let Some(n) = big_n {
        if poly.is_given() {
            return Err(CliError::Input("--N conflicts with --poly/--coeffs".into()));
        }
        if method == MethodArg::Jensen || outer {
            return Err(CliError::Input(
                "Φ_N is evaluated on the circle only; use --method quadrature".into(),
            ));
        }
        let plan = CycloEvalPlan::new(n)?;
        let singular: Vec<f64> = farey_angles(n)?
            .iter()
            .map(|f| std::f64::consts::TAU * f.value())
            .collect();
        triples.push(mahler_quadrature(
            phi_n_log_evaluator(&plan),
            &singular,
            &opts,
        )?);
        config = json!({ "command": "mahler", "N": n, "degree": plan.degree(), "tol": tol, "max_panels": max_panels });
    } else {
        let p = match (&poly.poly, &poly.coeffs) {
            (None, Some(list)) => sublevel::AlgebraicPoly::new(parse_coeffs(list)?)?,
            _ => trig_to_algebraic(&poly.trig()?)?,
        };
        if matches!(method, MethodArg::Jensen | MethodArg::Both) {
            let d = jensen_detail(&p, tol)?;
            extra.insert("roots".into(), to_value(&d.roots.roots)?);
            extra.insert("max_residual".into(), d.roots.max_residual.into());
            triples.push(d.triple);
        }
        if matches!(method, MethodArg::Quadrature | MethodArg::Both) {
            triples.push(mahler_quadrature_poly(&p, &opts)?);
        }
        if outer {
            extra.insert("outer".into(), to_value(&is_outer(&p, tol)?)?);
        }
        config = merge(&[
            json!({ "command": "mahler", "degree": p.degree(), "tol": tol, "max_panels": max_panels }),
            poly.describe(),
        ]);
    }
    let mut data = serde_json::Map::new();
    data.insert("triples".into(), to_value(&triples)?);
    data.extend(extra);
    Ok(Report {
        config,
        header: "method,log_m,log_m_plus,log_m_minus,m,m_plus,m_minus,err".into(),
        rows: triples.iter().map(triple_row).collect(),
        trailer: vec![],
        data: Value::Object(data),
    })
}
