//! `mmcheck`: command-line checks for discretized metric measure spaces.
//!
//! Spaces come from the zoo (`--space "zoo:star?d=3&h=0.01"`) or from JSON
//! files produced by `generate`. Reports go to stdout or `--out` as a table
//! or JSON envelope. Exit status: 0 all consistent, 1 a check reported a
//! violation, 2 the run itself failed.

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Parser, Subcommand, ValueEnum};
use mmcheck_core::bg::{self, SamplingPlan};
use mmcheck_core::cut::{self, CutVerdict, WeakBranchVerdict};
use mmcheck_core::dimension;
use mmcheck_core::poincare;
use mmcheck_core::report::{CheckRecord, RecordStatus, ReportEnvelope};
use mmcheck_core::volumes::delta_threshold;
use mmcheck_core::zoo::{self, ZooSpec};
use mmcheck_core::{DiscreteSpace, MmError, VertexIdx};

/// Environment variable supplying a default mesh for zoo specs without an
/// explicit `h` parameter.
const MESH_ENV: &str = "MMCHECK_MESH";

#[derive(Parser)]
#[command(name = "mmcheck", version, about = "checks for discretized metric measure spaces")]
struct Cli {
    /// `zoo:NAME?k=v&...` or a path to a space JSON file
    #[arg(long, global = true, default_value = "zoo:interval")]
    space: String,
    /// seed for every sampled decision
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// write the report here instead of stdout
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Table)]
    format: Format,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Table,
    Json,
}

#[derive(Subcommand)]
enum Command {
    /// Build a space and write it as JSON
    Generate,
    /// Sample set families against the directional volume comparison
    CheckBg {
        #[arg(long, default_value_t = 0.0)]
        k: f64,
        #[arg(long, default_value_t = 1.0)]
        n: f64,
        #[arg(long, default_value_t = 1.0)]
        c: f64,
    },
    /// Estimate the smallest workable comparison constant
    MinC {
        #[arg(long, default_value_t = 0.0)]
        k: f64,
        #[arg(long, default_value_t = 1.0)]
        n: f64,
    },
    /// Profile one vertex, or scan all vertices, for r-cut structure
    CutPoints {
        /// vertex id or landmark name; omit to scan the whole space
        #[arg(long)]
        point: Option<String>,
        #[arg(long)]
        r: Option<f64>,
    },
    /// Sphere-cap diameter bound at a cut point
    DiamBound {
        #[arg(long)]
        point: String,
        #[arg(long)]
        r: f64,
        #[arg(long, default_value_t = 0.0)]
        k: f64,
        #[arg(long, default_value_t = 2.0)]
        n: f64,
        #[arg(long, default_value_t = 1.0)]
        c: f64,
    },
    /// Count far-reaching complement components at a scale
    Ends {
        #[arg(long)]
        r: f64,
        /// base vertex id; defaults to the first landmark
        #[arg(long)]
        base: Option<String>,
    },
    /// Estimate the Poincare constant over function families
    Poincare {
        #[arg(long, default_value_t = 1.0)]
        p: f64,
        #[arg(long)]
        r: Option<f64>,
        /// comma-separated subset of: distance, bump, cut_witness
        #[arg(long)]
        families: Option<String>,
    },
    /// Fit the ball-volume growth exponent at a point
    Decay {
        #[arg(long)]
        point: Option<String>,
        #[arg(long)]
        r_max: Option<f64>,
    },
    /// Covering-number dimension estimate
    Dim {
        /// comma-separated scale grid; defaults to a geometric grid
        #[arg(long)]
        scales: Option<String>,
    },
    /// Exact distance bounds against a second small space
    Gh {
        /// the other space: `zoo:...` or a file path
        #[arg(long)]
        other: String,
        #[arg(long, default_value_t = 50_000_000)]
        budget: usize,
    },
    /// Run every theorem-shaped record against one space
    TheoremSuite {
        #[arg(long, default_value_t = 0.0)]
        k: f64,
        #[arg(long, default_value_t = 1.0)]
        n: f64,
    },
}

fn load_space(text: &str) -> anyhow::Result<DiscreteSpace> {
    if let Some(spec_text) = text.strip_prefix("zoo:") {
        let mut spec = ZooSpec::parse(spec_text)?;
        if !spec.params.contains_key("h") {
            if let Ok(h) = std::env::var(MESH_ENV) {
                let h: f64 = h
                    .parse()
                    .with_context(|| format!("{MESH_ENV} must be a number, got `{h}`"))?;
                spec.params.insert("h".into(), h);
            }
        }
        Ok(zoo::generate(&spec)?)
    } else {
        Ok(mmcheck_core::io::load(text.as_ref())?)
    }
}

fn emit(cli: &Cli, envelope: &ReportEnvelope) -> anyhow::Result<()> {
    let text = match cli.format {
        Format::Json => serde_json::to_string_pretty(envelope)? + "\n",
        Format::Table => envelope.to_table(),
    };
    match &cli.out {
        Some(path) => std::fs::write(path, text)?,
        None => print!("{text}"),
    }
    Ok(())
}

fn resolve(space: &DiscreteSpace, name: &str) -> anyhow::Result<VertexIdx> {
    Ok(space.resolve(name)?)
}

fn first_landmark(space: &DiscreteSpace) -> VertexIdx {
    let mut names: Vec<&String> = space.meta.keys().collect();
    names.sort();
    names
        .first()
        .and_then(|k| space.resolve(&space.meta[*k]).ok())
        .unwrap_or(0)
}

fn default_radius(space: &DiscreteSpace) -> f64 {
    (space.eccentricity(first_landmark(space)) / 4.0).max(8.0 * space.mesh())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(status) => match status {
            RecordStatus::Violation => ExitCode::from(1),
            RecordStatus::Error => ExitCode::from(2),
            _ => ExitCode::SUCCESS,
        },
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(2)
        }
    }
}

fn run(cli: &Cli) -> anyhow::Result<RecordStatus> {
    let space = load_space(&cli.space)?;
    let mut env = ReportEnvelope::new(command_name(&cli.command));
    env.config("space", &cli.space);
    env.config("seed", cli.seed);
    env.config("mesh", space.mesh());
    env.config("vertices", space.len());

    match &cli.command {
        Command::Generate => {
            let text = mmcheck_core::io::to_json(&space) + "\n";
            match &cli.out {
                Some(path) => std::fs::write(path, text)?,
                None => print!("{text}"),
            }
            return Ok(RecordStatus::Consistent);
        }
        Command::CheckBg { k, n, c } => {
            let plan = SamplingPlan::standard(&space, cli.seed);
            let violations = bg::check_bg(&space, *k, *n, *c, &plan)?;
            env.config("k", k);
            env.config("n", n);
            env.config("c", c);
            if violations.is_empty() {
                env.push(CheckRecord::new(
                    "bg_sampled",
                    RecordStatus::Consistent,
                    "no sampled set family beats the constant past its slack",
                ));
            }
            for v in violations {
                env.push(
                    CheckRecord::new(
                        "bg_sampled",
                        RecordStatus::Violation,
                        format!("family {} at base {} r2={:.4}", v.family, v.base, v.r2),
                    )
                    .with("implied_c", v.implied_c)
                    .with("lhs", v.lhs)
                    .with_slack(v.mesh_slack),
                );
            }
        }
        Command::MinC { k, n } => {
            let plan = SamplingPlan::standard(&space, cli.seed);
            let est = bg::estimate_min_c(&space, *k, *n, &plan)?;
            env.config("k", k);
            env.config("n", n);
            let mut rec = CheckRecord::new(
                "min_c",
                RecordStatus::Consistent,
                match &est.worst {
                    Some(w) => format!("worst family {} at base {}", w.family, w.base),
                    None => "no admissible configuration sampled".to_string(),
                },
            )
            .with("estimate", est.value)
            .with_slack(est.mesh_slack);
            if let Some(w) = &est.worst {
                rec = rec.with("r2", w.r2).with("u_size", w.u_size as f64);
            }
            env.push(rec);
        }
        Command::CutPoints { point, r } => {
            let r = r.unwrap_or_else(|| default_radius(&space));
            env.config("r", r);
            let targets: Vec<VertexIdx> = match point {
                Some(name) => vec![resolve(&space, name)?],
                None => (0..space.len()).collect(),
            };
            let mut found = 0usize;
            for v in targets {
                let verdict = cut::is_r_cut_point(&space, v, r)?;
                if point.is_none() && verdict != CutVerdict::Pass {
                    continue;
                }
                found += 1;
                let deg = cut::degree_estimate(&space, v, r)?;
                env.push(
                    CheckRecord::new(
                        &format!("cut:{}", space.id(v)),
                        RecordStatus::Consistent,
                        format!("verdict {verdict:?}"),
                    )
                    .with("degree_estimate", deg as f64),
                );
            }
            if found == 0 {
                env.push(CheckRecord::new(
                    "cut_scan",
                    RecordStatus::Consistent,
                    "no r-cut points found",
                ));
            }
        }
        Command::DiamBound { point, r, k, n, c } => {
            let x = resolve(&space, point)?;
            env.config("k", k);
            env.config("n", n);
            env.config("c", c);
            let rep = cut::diam_check(&space, x, *r, *k, *n, *c)?;
            for (i, comp) in rep.components.iter().enumerate() {
                env.push(
                    CheckRecord::new(
                        &format!("cap_{i}"),
                        if comp.violation {
                            RecordStatus::Violation
                        } else {
                            RecordStatus::Consistent
                        },
                        format!(
                            "cap of {} vertices, diameter {} bound {:.4}",
                            comp.cap_size,
                            if comp.diameter_exact { "exact" } else { "lower bound" },
                            comp.bound
                        ),
                    )
                    .with("diameter", comp.diameter)
                    .with("delta", rep.delta),
                );
            }
        }
        Command::Ends { r, base } => {
            let b = match base {
                Some(name) => resolve(&space, name)?,
                None => first_landmark(&space),
            };
            let ends = cut::ends_at_scale(&space, b, *r);
            env.push(
                CheckRecord::new(
                    "ends",
                    RecordStatus::Consistent,
                    format!("base {} scale {r}", space.id(b)),
                )
                .with("count", ends as f64),
            );
        }
        Command::Poincare { p, r, families } => {
            let r = r.unwrap_or_else(|| default_radius(&space));
            let fams: Vec<String> = match families {
                Some(list) => list.split(',').map(|s| s.trim().to_string()).collect(),
                None => poincare::CP_FAMILIES.iter().map(|s| s.to_string()).collect(),
            };
            let fam_refs: Vec<&str> = fams.iter().map(|s| s.as_str()).collect();
            env.config("p", p);
            env.config("r", r);
            env.config("families", fams.join(","));
            let est = poincare::estimate_cp(&space, *p, r, &fam_refs, cli.seed)?;
            let mut rec = CheckRecord::new(
                "poincare_constant",
                RecordStatus::Consistent,
                match &est.best {
                    Some(b) => format!("worst function {} at {}", b.function, b.center),
                    None => "no admissible configuration".to_string(),
                },
            )
            .with("estimate", est.value);
            if let Some(b) = &est.best {
                rec = rec.with("r", b.r);
            }
            env.push(rec);
        }
        Command::Decay { point, r_max } => {
            let x = match point {
                Some(name) => resolve(&space, name)?,
                None => first_landmark(&space),
            };
            let cap = r_max.unwrap_or_else(|| space.eccentricity(x) / 2.0);
            let grid: Vec<f64> = (0..10).map(|i| cap * 0.75_f64.powi(i)).collect();
            let fit = poincare::volume_decay_exponent(&space, x, &grid)?;
            env.push(
                CheckRecord::new(
                    "volume_decay",
                    RecordStatus::Consistent,
                    format!("fit over {} radii at {}", fit.points.len(), space.id(x)),
                )
                .with("exponent", fit.exponent)
                .with("residual", fit.residual),
            );
        }
        Command::Dim { scales } => {
            let grid: Vec<f64> = match scales {
                Some(list) => list
                    .split(',')
                    .map(|s| s.trim().parse::<f64>())
                    .collect::<std::result::Result<_, _>>()
                    .context("bad --scales entry")?,
                None => {
                    let top = space.eccentricity(first_landmark(&space)) / 4.0;
                    (0..8).map(|i| top * 0.7_f64.powi(i)).collect()
                }
            };
            let profile = dimension::dimension_estimate(&space, &grid)?;
            env.push(
                CheckRecord::new(
                    "dimension",
                    RecordStatus::Consistent,
                    format!("{} scales", profile.scales.len()),
                )
                .with("estimate", profile.dimension)
                .with("residual", profile.residual),
            );
        }
        Command::Gh { other, budget } => {
            let y = load_space(other)?;
            env.config("other", other);
            if space.len() * y.len() > 64 {
                bail!(
                    "exact search is for small spaces; got {} x {} vertices",
                    space.len(),
                    y.len()
                );
            }
            let (lo, hi) = dimension::gh_distance_small(&space, &y, *budget)?;
            env.push(
                CheckRecord::new("gh_distance", RecordStatus::Consistent, "exact search")
                    .with("lower", lo)
                    .with("upper", hi),
            );
        }
        Command::TheoremSuite { k, n } => {
            env.config("k", k);
            env.config("n", n);
            theorem_suite(&space, *k, *n, cli.seed, &mut env)?;
        }
    }

    env.finalize();
    emit(cli, &env)?;
    Ok(env.worst_status())
}

fn command_name(c: &Command) -> &'static str {
    match c {
        Command::Generate => "generate",
        Command::CheckBg { .. } => "check-bg",
        Command::MinC { .. } => "min-c",
        Command::CutPoints { .. } => "cut-points",
        Command::DiamBound { .. } => "diam-bound",
        Command::Ends { .. } => "ends",
        Command::Poincare { .. } => "poincare",
        Command::Decay { .. } => "decay",
        Command::Dim { .. } => "dim",
        Command::Gh { .. } => "gh",
        Command::TheoremSuite { .. } => "theorem-suite",
    }
}

/// Cut points found by scanning landmarks plus a seeded vertex sample.
fn sample_cut_points(
    space: &DiscreteSpace,
    r: f64,
    seed: u64,
) -> mmcheck_core::Result<Vec<VertexIdx>> {
    use rand_shim::sample_indices;
    let mut candidates: Vec<VertexIdx> = space
        .meta
        .values()
        .filter_map(|id| space.index_of(id).ok())
        .collect();
    candidates.extend(sample_indices(space.len(), 24, seed));
    candidates.sort_unstable();
    candidates.dedup();
    let mut out = Vec::new();
    for v in candidates {
        if cut::is_r_cut_point(space, v, r)? == CutVerdict::Pass {
            out.push(v);
        }
    }
    Ok(out)
}

// the cli avoids a direct rand dependency; a splitmix-style generator is
// plenty for picking sample vertices
mod rand_shim {
    pub fn sample_indices(len: usize, count: usize, seed: u64) -> Vec<usize> {
        let mut state = seed.wrapping_add(0x9e37_79b9_7f4a_7c15);
        let mut next = move || {
            state = state.wrapping_add(0x9e37_79b9_7f4a_7c15);
            let mut z = state;
            z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
            z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
            z ^ (z >> 31)
        };
        (0..count).map(|_| (next() % len.max(1) as u64) as usize).collect()
    }
}

/// The eight theorem-shaped records. Every conclusion failure is reported
/// as a model violation at the declared slack, never as a refutation.
fn theorem_suite(
    space: &DiscreteSpace,
    k: f64,
    n: f64,
    seed: u64,
    env: &mut ReportEnvelope,
) -> anyhow::Result<()> {
    let r = default_radius(space);
    env.config("r", r);
    let plan = SamplingPlan::standard(space, seed);
    let est = bg::estimate_min_c(space, k, n, &plan)?;
    let c = est.value.max(1.0);
    let slack = est.mesh_slack;
    env.config("estimated_c", c);
    let cut_points = sample_cut_points(space, r, seed)?;
    let have_cuts = !cut_points.is_empty();

    // degree <= C^2 + 1 at local cut points
    {
        let bound = c * c + 1.0;
        let mut rec = if !have_cuts {
            CheckRecord::new(
                "degree_bound",
                RecordStatus::NotApplicable,
                "no sampled cut point",
            )
        } else {
            let mut worst = 0usize;
            for &x in &cut_points {
                worst = worst.max(cut::degree_estimate(space, x, r)?);
            }
            let ok = (worst as f64) <= bound * (1.0 + slack);
            CheckRecord::new(
                "degree_bound",
                if ok { RecordStatus::Consistent } else { RecordStatus::Violation },
                format!("max degree {worst} against C^2+1 = {bound:.3}"),
            )
            .with("degree", worst as f64)
        };
        rec = rec.with("bound", bound).with_slack(slack);
        env.push(rec);
    }

    // graph model: degree <= C + 1
    {
        let bound = c + 1.0;
        let rec = if !have_cuts {
            CheckRecord::new(
                "graph_degree_bound",
                RecordStatus::NotApplicable,
                "no sampled cut point",
            )
        } else {
            let mut worst = 0usize;
            for &x in &cut_points {
                worst = worst.max(cut::degree_estimate(space, x, r)?);
            }
            let ok = (worst as f64) <= bound * (1.0 + slack);
            CheckRecord::new(
                "graph_degree_bound",
                if ok { RecordStatus::Consistent } else { RecordStatus::Violation },
                format!("max degree {worst} against C+1 = {bound:.3}"),
            )
            .with("degree", worst as f64)
        }
        .with("bound", bound)
        .with_slack(slack);
        env.push(rec);
    }

    // hypothesis gate on the witnessed constant: when sampling already
    // found implied C >= sqrt(2), the sub-sqrt(2) theorems do not apply
    let sub_root_two = c < std::f64::consts::SQRT_2;

    // C < sqrt(2) makes every local cut point a weak branch point of the
    // short geodesics into it
    {
        let rec = if !sub_root_two || !have_cuts {
            CheckRecord::new(
                "weak_branch_obstruction",
                RecordStatus::NotApplicable,
                if sub_root_two { "no sampled cut point" } else { "estimated C not below sqrt(2)" },
            )
        } else {
            let l = r;
            let eps = (8.0 * space.mesh()).min(l / 2.0);
            let mut counterexample: Option<VertexIdx> = None;
            let mut confirmed = 0usize;
            for &x in &cut_points {
                match cut::weak_branch_test(space, x, l, eps)? {
                    WeakBranchVerdict::NotWeakBranch => {
                        counterexample = Some(x);
                        break;
                    }
                    WeakBranchVerdict::WeakBranch => confirmed += 1,
                    WeakBranchVerdict::Vacuous => {}
                }
            }
            match counterexample {
                Some(x) => CheckRecord::new(
                    "weak_branch_obstruction",
                    RecordStatus::Violation,
                    format!("cut point {} is not a weak branch point", space.id(x)),
                ),
                None => CheckRecord::new(
                    "weak_branch_obstruction",
                    RecordStatus::Consistent,
                    format!("{confirmed} sampled cut points are weak branch points"),
                ),
            }
        }
        .with_slack(slack);
        env.push(rec);
    }

    // C < sqrt(2) caps cut point degree at 2
    {
        let rec = if !sub_root_two || !have_cuts {
            CheckRecord::new(
                "degree_two",
                RecordStatus::NotApplicable,
                if sub_root_two { "no sampled cut point" } else { "estimated C not below sqrt(2)" },
            )
        } else {
            let mut worst = 0usize;
            for &x in &cut_points {
                worst = worst.max(cut::degree_estimate(space, x, r)?);
            }
            CheckRecord::new(
                "degree_two",
                if worst <= 2 { RecordStatus::Consistent } else { RecordStatus::Violation },
                format!("max cut point degree {worst}"),
            )
            .with("degree", worst as f64)
        }
        .with_slack(slack);
        env.push(rec);
    }

    // sphere cap diameter bound at cut points
    {
        let applicable = delta_threshold(k, n.max(2.0), c, r).is_ok();
        let rec = if !applicable || !have_cuts {
            CheckRecord::new(
                "sphere_diameter_bound",
                RecordStatus::NotApplicable,
                if have_cuts { "threshold undefined at estimated C" } else { "no sampled cut point" },
            )
        } else {
            let mut worst: Option<(VertexIdx, f64, f64)> = None;
            let mut violated = false;
            for &x in &cut_points {
                let rep = cut::diam_check(space, x, r, k, n.max(2.0), c)?;
                violated |= rep.violation;
                for comp in &rep.components {
                    if worst.map_or(true, |(_, d, _)| comp.diameter > d) {
                        worst = Some((x, comp.diameter, comp.bound));
                    }
                }
            }
            let mut rec = CheckRecord::new(
                "sphere_diameter_bound",
                if violated { RecordStatus::Violation } else { RecordStatus::Consistent },
                "cap diameters against (2 - delta) r",
            );
            if let Some((x, d, b)) = worst {
                rec = rec
                    .with("worst_diameter", d)
                    .with("bound", b)
                    .with("at", space.index_of(space.id(x)).unwrap_or(0) as f64);
            }
            rec
        }
        .with_slack(slack);
        env.push(rec);
    }

    // ends at scale capped by C^2 + 1
    {
        let base = first_landmark(space);
        let ends = cut::ends_at_scale(space, base, r);
        let bound = c * c + 1.0;
        let ok = (ends as f64) <= bound * (1.0 + slack);
        env.push(
            CheckRecord::new(
                "ends_bound",
                if ok { RecordStatus::Consistent } else { RecordStatus::Violation },
                format!("{ends} far-reaching components at scale {r:.4}"),
            )
            .with("ends", ends as f64)
            .with("bound", bound)
            .with_slack(slack),
        );
    }

    // nearby cut point triples stand in line when C < sqrt(2)
    {
        let rec = if !sub_root_two {
            CheckRecord::new(
                "collinearity",
                RecordStatus::NotApplicable,
                "estimated C not below sqrt(2)",
            )
        } else {
            let mut checked = 0usize;
            let mut bad = 0usize;
            for w in cut_points.windows(3) {
                let row = space.row(w[0]);
                // only triples living well inside one ball of scale r
                if row[w[1]].max(row[w[2]]) > r / 2.0 {
                    continue;
                }
                match cut::stands_in_line(space, w[0], w[1], w[2], r) {
                    Ok(arr) => {
                        checked += 1;
                        if !arr.stands_in_line {
                            bad += 1;
                        }
                    }
                    Err(MmError::LineConvention(_)) => {}
                    Err(e) => return Err(e.into()),
                }
            }
            if checked == 0 {
                CheckRecord::new(
                    "collinearity",
                    RecordStatus::NotApplicable,
                    "no admissible triple sampled",
                )
            } else {
                CheckRecord::new(
                    "collinearity",
                    if bad == 0 { RecordStatus::Consistent } else { RecordStatus::Violation },
                    format!("{bad} of {checked} triples out of line"),
                )
                .with("checked", checked as f64)
            }
        }
        .with_slack(slack);
        env.push(rec);
    }

    // Poincare constant inflation at cut points via the collar family
    {
        let rec = if !have_cuts {
            CheckRecord::new(
                "poincare_cut_obstruction",
                RecordStatus::NotApplicable,
                "no sampled cut point",
            )
        } else {
            let collar = poincare::estimate_cp(space, 2.0, r, &["cut_witness"], seed)?;
            let baseline = poincare::estimate_cp(space, 2.0, r, &["distance"], seed)?;
            match collar.best {
                None => CheckRecord::new(
                    "poincare_cut_obstruction",
                    RecordStatus::NotApplicable,
                    "collar family found no admissible configuration",
                ),
                Some(_) => {
                    let ok = collar.value >= baseline.value * 0.5;
                    CheckRecord::new(
                        "poincare_cut_obstruction",
                        if ok { RecordStatus::Consistent } else { RecordStatus::Violation },
                        "collar functions should dominate the smooth baseline",
                    )
                    .with("collar_estimate", collar.value)
                    .with("baseline_estimate", baseline.value)
                }
            }
        }
        .with_slack(slack);
        env.push(rec);
    }

    Ok(())
}
