use std::fmt::Write as _;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use skewlab::fiber::distortion_global;
use skewlab::genericity::{genericity_report, GenericityOptions};
use skewlab::hyperbolicity::{lyapunov_orbit, orbit_log_derivs, pliss_density, pliss_times, TimeDirection};
use skewlab::measures::{
    birkhoff_fiber_distribution, current_symbol_marginal, ergodic_candidates, measure_distance, mirror_measure,
    project_markov, project_measure, stationary_measure, symmetric_extension, BirkhoffParams, FiberMeasureVector,
    TransferOperator, MASS_FLOOR,
};
use skewlab::skew::{build_extension, two_to_one_census, verify_semiconjugacy, SkewProduct};
use skewlab::strips::{
    certify_attracting, certify_repelling, maximal_attractor_fibers, order_strips, project_strip, strip_from_measure,
    Certification, FiberContent, Strip, StripKind, StripOrder,
};
use skewlab::symbolic::{admissible_words, cylinder_mass, CylinderSpec, WordSampler};
use skewlab::{Interval, PointState, Word};

use crate::config::{Loaded, SystemConfig};
use crate::svg::{Frame, Svg};
use crate::CliError;

#[derive(Debug, Parser)]
#[command(name = "skewlab", version, about = "Analyse step skew-products over interval fibers")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct Common {
    /// System definition (TOML).
    #[arg(long)]
    pub config: PathBuf,
    /// Overrides `numerics.seed`.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Write files here instead of printing CSV to stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, default_value_t = 1)]
    pub workers: usize,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Iterate one point and report running Lyapunov averages.
    Orbit {
        #[command(flatten)]
        common: Common,
        /// Explicit word such as `21|1212`; the origin sits at `|`.
        #[arg(long, conflicts_with = "periodic")]
        word: Option<String>,
        /// Repeat this block forward, e.g. `12`.
        #[arg(long)]
        periodic: Option<String>,
        #[arg(long, default_value_t = 0.5)]
        p0: f64,
        #[arg(short = 'n', default_value_t = 20)]
        n: usize,
    },
    /// Print the transition matrix and g-maps of the orientation-doubled extension.
    Extend {
        #[command(flatten)]
        common: Common,
    },
    /// Stationary fiber measure of the extension and its projection.
    Stationary {
        #[command(flatten)]
        common: Common,
        /// Compare the projection with Birkhoff sampling of the base system.
        #[arg(long)]
        compare_birkhoff: bool,
    },
    /// Attracting and repelling strips with certification margins.
    Strips {
        #[command(flatten)]
        common: Common,
    },
    /// Sample maximal-attractor fibers over random pasts.
    Attractor {
        #[command(flatten)]
        common: Common,
        /// Overrides `numerics.depth`.
        #[arg(long)]
        depth: Option<usize>,
        /// Overrides `numerics.n_pasts`.
        #[arg(long)]
        n_pasts: Option<usize>,
    },
    /// Check the three genericity conditions.
    Genericity {
        #[command(flatten)]
        common: Common,
    },
    /// Run the property suite and print a pass/fail matrix.
    Verify {
        #[command(flatten)]
        common: Common,
        /// Shift g_1 by 0.01 before checking the semiconjugacy.
        #[arg(long)]
        corrupt_gmap: bool,
    },
    /// Hyperbolic times of one orbit.
    Pliss {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        rho: f64,
        /// Follow the inverse maps along the past.
        #[arg(long)]
        backward: bool,
        #[arg(long)]
        word: Option<String>,
        /// Starting fiber point; backward orbits default to 0.3 pushed through the past.
        #[arg(long)]
        p0: Option<f64>,
        #[arg(short = 'n', default_value_t = 100)]
        n: usize,
    },
    /// Distortion of the base maps on intervals of length at most theta.
    Distortion {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_delimiter = ',', default_values_t = [0.4, 0.2, 0.1, 0.05, 0.025, 0.0125])]
        theta: Vec<f64>,
        #[arg(long, default_value_t = skewlab::fiber::DEFAULT_DISTORTION_GRID)]
        grid: usize,
    },
}

impl Command {
    fn common(&self) -> &Common {
        match self {
            Command::Orbit { common, .. }
            | Command::Extend { common }
            | Command::Stationary { common, .. }
            | Command::Strips { common }
            | Command::Attractor { common, .. }
            | Command::Genericity { common }
            | Command::Verify { common, .. }
            | Command::Pliss { common, .. }
            | Command::Distortion { common, .. } => common,
        }
    }
}

/// Routes CSV and summaries: with `--out` files go to disk and the summary
/// to stdout, otherwise CSV goes to stdout and the summary to stderr.
struct Sink<'a> {
    out: Option<PathBuf>,
    stdout: &'a mut dyn Write,
    stderr: &'a mut dyn Write,
}

impl Sink<'_> {
    fn csv(&mut self, file: &str, body: &str) -> Result<(), CliError> {
        match &self.out {
            Some(dir) => write_file(dir, file, body),
            None => self.stdout.write_all(body.as_bytes()).map_err(io),
        }
    }

    fn svg(&mut self, file: &str, doc: String) -> Result<(), CliError> {
        match &self.out {
            Some(dir) => write_file(dir, file, &doc),
            None => Ok(()),
        }
    }

    fn summary(&mut self, text: &str) -> Result<(), CliError> {
        let target: &mut dyn Write = if self.out.is_some() { self.stdout } else { self.stderr };
        target.write_all(text.as_bytes()).map_err(io)
    }

    /// Plain-text commands always print to stdout.
    fn text(&mut self, text: &str) -> Result<(), CliError> {
        self.stdout.write_all(text.as_bytes()).map_err(io)
    }
}

fn io(e: std::io::Error) -> CliError {
    CliError::Io(e.to_string())
}

fn write_file(dir: &std::path::Path, file: &str, body: &str) -> Result<(), CliError> {
    std::fs::create_dir_all(dir).map_err(|e| CliError::Io(format!("{}: {e}", dir.display())))?;
    let path = dir.join(file);
    std::fs::write(&path, body).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

fn require_seed(common: &Common, cfg: &Loaded, what: &str) -> Result<u64, CliError> {
    common
        .seed
        .or(cfg.numerics.seed)
        .ok_or_else(|| CliError::Usage(format!("{what} needs a seed: pass --seed or set numerics.seed")))
}

fn parse_block(text: &str) -> Result<Vec<usize>, CliError> {
    text.chars()
        .map(|c| {
            c.to_digit(10).map(|d| d as usize).ok_or_else(|| CliError::Usage(format!("bad symbol {c:?} in block")))
        })
        .collect()
}

pub fn execute(cli: &Cli, stdout: &mut dyn Write, stderr: &mut dyn Write) -> Result<i32, CliError> {
    let common = cli.command.common();
    if common.workers == 0 {
        return Err(CliError::Usage("--workers must be at least 1".into()));
    }
    let cfg = SystemConfig::load(&common.config)?;
    let mut sink = Sink { out: common.out.clone(), stdout, stderr };
    match &cli.command {
        Command::Orbit { word, periodic, p0, n, .. } => {
            orbit(&cfg, common, &mut sink, word.as_deref(), periodic.as_deref(), *p0, *n)
        }
        Command::Extend { .. } => extend(&cfg, &mut sink),
        Command::Stationary { compare_birkhoff, .. } => stationary(&cfg, common, &mut sink, *compare_birkhoff),
        Command::Strips { .. } => strips(&cfg, &mut sink),
        Command::Attractor { depth, n_pasts, .. } => attractor(&cfg, common, &mut sink, *depth, *n_pasts),
        Command::Genericity { .. } => genericity(&cfg, &mut sink),
        Command::Verify { corrupt_gmap, .. } => verify(&cfg, common, &mut sink, *corrupt_gmap),
        Command::Pliss { rho, backward, word, p0, n, .. } => {
            pliss(&cfg, common, &mut sink, *rho, *backward, word.as_deref(), *p0, *n)
        }
        Command::Distortion { theta, grid, .. } => distortion(&cfg, &mut sink, theta, *grid),
    }
}

fn orbit(
    cfg: &Loaded,
    common: &Common,
    sink: &mut Sink,
    word: Option<&str>,
    periodic: Option<&str>,
    p0: f64,
    n: usize,
) -> Result<i32, CliError> {
    let alphabet = cfg.system.n();
    let word = match (word, periodic) {
        (Some(w), _) => Word::parse(w, alphabet)?,
        (None, Some(b)) => Word::periodic(&parse_block(b)?, 0, n, alphabet)?,
        (None, None) => {
            let seed = require_seed(common, cfg, "a sampled orbit")?;
            WordSampler::new(&cfg.chain).sample(0, n, &mut ChaCha8Rng::seed_from_u64(seed))
        }
    };
    let state = PointState::new(word, p0)?;
    let seq = orbit_log_derivs(&cfg.system, &state, n, TimeDirection::Forward)?;
    let chi = if n == 0 { Vec::new() } else { lyapunov_orbit(&seq.values)? };
    let mut csv = String::from("k,symbol,p,logderiv,chi_running\n");
    for (k, (s, c)) in seq.symbols.iter().zip(&chi).enumerate() {
        writeln!(csv, "{k},{s},{},{},{c}", seq.points[k], seq.values[k]).expect("string");
    }
    sink.csv("orbit.csv", &csv)?;
    let last = chi.last().map_or("undefined".to_string(), |c| c.to_string());
    sink.summary(&format!("{}: {n} steps from p0 = {p0}, chi_running = {last}\n", cfg.name))?;
    Ok(0)
}

fn extend(cfg: &Loaded, sink: &mut Sink) -> Result<i32, CliError> {
    let ext = build_extension(&cfg.system);
    let mut text = format!("{}: extension over {} symbols\nA =\n", cfg.name, ext.alphabet());
    for row in ext.matrix().rows() {
        let cells: Vec<String> = row.iter().map(u8::to_string).collect();
        writeln!(text, "  {}", cells.join(" ")).expect("string");
    }
    for (k, g) in ext.maps().iter().enumerate() {
        writeln!(text, "g{} = {g}", k + 1).expect("string");
    }
    let fmt_set = |v: Vec<usize>| v.iter().map(usize::to_string).collect::<Vec<_>>().join(", ");
    writeln!(text, "I_P = {{{}}}", fmt_set(cfg.system.preserving_symbols())).expect("string");
    writeln!(text, "I_R = {{{}}}", fmt_set(cfg.system.reversing_symbols())).expect("string");
    if cfg.system.reversing_symbols().is_empty() {
        text.push_str("note: every map preserves orientation, so A is block diagonal and the two sheets never mix\n");
    }
    sink.text(&text)?;
    Ok(0)
}

fn describe_measure(label: &str, mu: &FiberMeasureVector) -> String {
    let mut text = String::new();
    for (k, mass) in mu.symbol_masses().iter().enumerate() {
        let support = match mu.support(k + 1, MASS_FLOOR) {
            Some((lo, hi)) => format!("[{lo:.6}, {hi:.6}]"),
            None => "empty".to_string(),
        };
        writeln!(text, "{label} symbol {}: mass {mass:.12}, support {support}", k + 1).expect("string");
    }
    text
}

fn stationary(cfg: &Loaded, common: &Common, sink: &mut Sink, compare: bool) -> Result<i32, CliError> {
    let num = &cfg.numerics;
    let birkhoff_seed = if compare { Some(require_seed(common, cfg, "--compare-birkhoff")?) } else { None };
    let ext = build_extension(&cfg.system);
    let lambda = symmetric_extension(&cfg.chain, &ext)?;
    let op = TransferOperator::new(&ext, lambda.chain(), num.n_bins)?;
    let seed = FiberMeasureVector::uniform(lambda.chain().p(), num.n_bins);
    let res = stationary_measure(&op, &seed, num.tol, num.max_iter)?;
    let base = project_measure(&ext, &current_symbol_marginal(lambda.chain(), &res.measure)?)?;

    let flag = if res.converged { "" } else { "# not converged\n" };
    sink.csv("stationary.csv", &format!("{flag}{}", res.measure.to_csv()))?;
    if sink.out.is_some() {
        sink.csv("stationary_base.csv", &format!("{flag}{}", base.to_csv()))?;
    }
    let mut text = format!(
        "{}: {} after {} iterations, residual {:e}\n",
        cfg.name,
        if res.converged { "converged" } else { "NOT converged" },
        res.iterations,
        res.residual
    );
    text.push_str(&describe_measure("extension", &res.measure));
    text.push_str(&describe_measure("base", &base));
    if let Some(seed) = birkhoff_seed {
        let params = BirkhoffParams {
            n_orbits: num.n_orbits,
            n_steps: num.n_steps,
            burn_in: num.burn_in,
            n_bins: num.n_bins,
            seed,
            workers: common.workers,
        };
        let emp = birkhoff_fiber_distribution(&cfg.system, &cfg.chain, params)?;
        let d = measure_distance(&emp, &base)?;
        writeln!(text, "birkhoff: max Kolmogorov distance {:.6}, L1 {:.6}", d.max_kolmogorov(), d.l1).expect("string");
    }
    sink.summary(&text)?;
    Ok(if res.converged { 0 } else { 4 })
}

struct Row {
    strip: Strip,
    cert: Certification,
    source: String,
}

fn strips(cfg: &Loaded, sink: &mut Sink) -> Result<i32, CliError> {
    let num = &cfg.numerics;
    let ext = build_extension(&cfg.system);
    let mut found: Vec<(Strip, String)> = Vec::new();
    let mut notes = Vec::new();
    if cfg.strips.is_empty() {
        let lambda = symmetric_extension(&cfg.chain, &ext)?;
        let op = TransferOperator::new(&ext, lambda.chain(), num.n_bins)?;
        let candidates = ergodic_candidates(&op, lambda.chain().p(), num.tol, num.max_iter)?;
        for (k, c) in candidates.iter().enumerate() {
            if !c.converged {
                notes.push(format!("candidate {k} did not converge (residual {:e})", c.residual));
            }
            let nu = current_symbol_marginal(lambda.chain(), &c.measure)?;
            let (strip, warnings) = strip_from_measure(&nu, num.eps_strip, None)?;
            notes.extend(warnings.into_iter().map(|w| format!("candidate {k}: {w}")));
            found.push((strip, format!("stationary measure {k}")));
        }
    } else {
        for (k, s) in cfg.strips.iter().enumerate() {
            let bounds: Vec<(f64, f64)> = s.fibers.iter().map(|b| (b[0], b[1])).collect();
            let strip = Strip::from_bounds(&bounds).map_err(|e| CliError::Config(format!("strips[{k}]: {e}")))?;
            found.push((strip, format!("config strips[{k}]")));
        }
    }

    let plain: Vec<Strip> = found.iter().map(|(s, _)| s.clone()).collect();
    let order = if plain.is_empty() { StripOrder::Ordered(Vec::new()) } else { order_strips(&plain)? };
    let order = match order {
        StripOrder::Ordered(idx) => idx,
        StripOrder::Incomparable(i, j) => {
            sink.summary(&format!(
                "{}: strips {i} ({}) and {j} ({}) are incomparable: they overlap on a shared symbol\n",
                cfg.name, found[i].1, found[j].1
            ))?;
            return Ok(1);
        }
    };

    let mut rows = Vec::new();
    for &k in &order {
        let (strip, source) = &found[k];
        let att = certify_attracting(&ext, strip, num.margin_floor)?;
        let cert = if att.ok {
            att
        } else {
            let rep = certify_repelling(&ext, strip, num.margin_floor)?;
            if rep.ok {
                rep
            } else {
                att
            }
        };
        rows.push(Row { strip: strip.clone().certified(&cert), cert, source: source.clone() });
    }
    // Gaps between consecutive attracting strips are the repelling candidates.
    let mut gaps = Vec::new();
    for pair in rows.windows(2) {
        if pair[0].cert.kind != StripKind::Attracting || pair[1].cert.kind != StripKind::Attracting {
            continue;
        }
        let fibers: Option<Vec<(f64, f64)>> = pair[0]
            .strip
            .fibers()
            .iter()
            .zip(pair[1].strip.fibers())
            .map(|(a, b)| match (a, b) {
                (Some(a), Some(b)) if a.hi() < b.lo() => Some((a.hi(), b.lo())),
                _ => None,
            })
            .collect();
        let Some(fibers) = fibers else { continue };
        let strip = Strip::from_bounds(&fibers)?;
        let cert = certify_repelling(&ext, &strip, num.margin_floor)?;
        gaps.push(Row { strip: strip.certified(&cert), cert, source: "gap between attracting strips".into() });
    }
    rows.extend(gaps);

    let mut combined = String::from("strip,symbol,lo,hi,kind,margin\n");
    let mut bistrips = String::from("strip,component,symbol,lo,hi,kind\n");
    let mut text = format!("{}: {} strip(s) over the extended alphabet\n", cfg.name, rows.len());
    let mut failed = 0;
    for (k, row) in rows.iter().enumerate() {
        let csv = row.cert.to_csv(&row.strip);
        for line in csv.lines().skip(1) {
            writeln!(combined, "{k},{line}").expect("string");
        }
        if sink.out.is_some() {
            sink.csv(&format!("strip_{k}.csv"), &csv)?;
        }
        let bi = project_strip(&ext, &row.strip)?;
        for (c, comp) in bi.components.iter().enumerate() {
            for (s, j) in comp.fibers().iter().enumerate() {
                if let Some(j) = j {
                    writeln!(bistrips, "{k},{},{},{},{},{}", c + 1, s + 1, j.lo(), j.hi(), comp.kind())
                        .expect("string");
                }
            }
        }
        let verdict = if row.cert.ok { format!("{} (certified)", row.cert.kind) } else { "uncertified".to_string() };
        writeln!(
            text,
            "strip {k} [{}]: {verdict}, min margin {:e}, simple bi-strip: {}",
            row.source,
            row.cert.min_margin,
            bi.is_simple()
        )
        .expect("string");
        if !row.cert.outside_images.is_empty() {
            writeln!(text, "  fibers outside every image: {:?}", row.cert.outside_images).expect("string");
        }
        if !row.cert.ok {
            failed += 1;
        }
    }
    for n in &notes {
        writeln!(text, "note: {n}").expect("string");
    }
    if sink.out.is_some() {
        sink.csv("bistrips.csv", &bistrips)?;
    } else {
        sink.csv("strips.csv", &combined)?;
    }
    sink.svg("strips.svg", strips_svg(&cfg.name, &rows, ext.alphabet()))?;
    sink.summary(&text)?;
    Ok(if failed == 0 { 0 } else { 1 })
}

fn strips_svg(name: &str, rows: &[Row], alphabet: usize) -> String {
    let mut svg = Svg::new(
        &format!("{name}: strips over the extended alphabet"),
        "Each column is one extended symbol; boxes are strip fibers (blue attracting, red repelling, grey uncertified).",
    );
    let frame = Frame::default();
    frame.draw_axes(&mut svg, &format!("{name} strips"), "extended symbol", "fiber");
    let col = 1.0 / alphabet as f64;
    for s in 0..alphabet {
        svg.text(frame.x((s as f64 + 0.5) * col), frame.y(0.0) + 40.0, 12.0, "middle", &format!("{}", s + 1));
    }
    for row in rows {
        let colour = match (row.cert.ok, row.cert.kind) {
            (true, StripKind::Attracting) => "#2b6cb0",
            (true, StripKind::Repelling) => "#c53030",
            _ => "#888888",
        };
        for (s, j) in row.strip.fibers().iter().enumerate() {
            let Some(j) = j else { continue };
            let x0 = frame.x((s as f64 + 0.15) * col);
            let x1 = frame.x((s as f64 + 0.85) * col);
            let h = (frame.y(j.lo()) - frame.y(j.hi())).max(1.0);
            svg.rect(x0, frame.y(j.hi()), x1 - x0, h, colour, colour, 0.35);
        }
    }
    svg.finish()
}

/// `Σ_{k≥1} (ξ_{−k} − 1) N^{−k}`, a base-N embedding of the past into [0,1].
fn past_abscissa(word: &Word, depth: usize, n: usize) -> f64 {
    let past = word.past(depth).unwrap_or(&[]);
    let mut x = 0.0;
    let mut scale = 1.0;
    for &s in past.iter().rev() {
        scale /= n as f64;
        x += (s - 1) as f64 * scale;
    }
    x
}

fn attractor(
    cfg: &Loaded,
    common: &Common,
    sink: &mut Sink,
    depth: Option<usize>,
    n_pasts: Option<usize>,
) -> Result<i32, CliError> {
    let seed = require_seed(common, cfg, "attractor sampling")?;
    let depth = depth.unwrap_or(cfg.numerics.depth);
    let n_pasts = n_pasts.unwrap_or(cfg.numerics.n_pasts);
    let n = cfg.system.n();
    let strip = Strip::uniform(n, Interval::unit())?;
    let sampler = WordSampler::new(&cfg.chain);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let pasts: Vec<Word> = (0..n_pasts).map(|_| sampler.sample(depth, 0, &mut rng)).collect();
    let set = maximal_attractor_fibers(&cfg.system, &strip, &pasts, depth)?;
    sink.csv("attractor.csv", &set.to_csv())?;

    let mut svg = Svg::new(
        &format!("{}: maximal attractor fibers at depth {depth}", cfg.name),
        &format!(
            "Abscissa: sum over k of (xi_(-k) - 1) * {n}^(-k), a base-{n} embedding of the sampled past. \
             Ordinate: fiber midpoint; fibers longer than the cluster tolerance are drawn as vertical segments."
        ),
    );
    let frame = Frame::default();
    frame.draw_axes(&mut svg, &format!("{} attractor", cfg.name), "past (base-N embedding)", "fiber");
    let (mut lo_all, mut hi_all, mut fat) = (f64::INFINITY, f64::NEG_INFINITY, 0usize);
    for (w, content) in &set.records {
        let FiberContent::Interval(j) = content else { continue };
        let x = frame.x(past_abscissa(w, depth, n));
        lo_all = lo_all.min(j.lo());
        hi_all = hi_all.max(j.hi());
        if j.len() > cfg.numerics.cluster_tol {
            fat += 1;
            svg.line(x, frame.y(j.lo()), x, frame.y(j.hi()), "#2b6cb0", 1.0);
        } else {
            svg.circle(x, frame.y(j.mid()), 1.5, "#2b6cb0");
        }
    }
    sink.svg("attractor.svg", svg.finish())?;
    let hull = if lo_all <= hi_all { format!("[{lo_all:.6}, {hi_all:.6}]") } else { "empty".to_string() };
    sink.summary(&format!(
        "{}: {n_pasts} pasts at depth {depth}, fiber hull {hull}, {fat} fiber(s) longer than {:e}\n",
        cfg.name, cfg.numerics.cluster_tol
    ))?;
    Ok(0)
}

fn genericity(cfg: &Loaded, sink: &mut Sink) -> Result<i32, CliError> {
    let num = &cfg.numerics;
    let opts = GenericityOptions {
        stability_tau: num.stability_tau,
        heteroclinic_tau: num.heteroclinic_tau,
        cycle_tau: num.cycle_tau,
        max_alphabet: num.max_alphabet,
    };
    let report = genericity_report(&cfg.system, &opts)?;
    let mut csv = String::from("condition,view,label,a,b,value\n");
    for c in &report.conditions {
        for line in c.to_csv().lines().skip(1) {
            csv.push_str(line);
            csv.push('\n');
        }
    }
    sink.csv("genericity.csv", &csv)?;
    sink.summary(&format!("{}:\n{}", cfg.name, report.summary()))?;
    Ok(report.exit_code())
}

enum Check {
    Pass(String),
    Fail(String),
}

fn brute_pliss(values: &[f64], rho: f64) -> Vec<usize> {
    (0..values.len())
        .filter(|&n| {
            let mut suffix = 0.0;
            (0..=n).rev().all(|m| {
                suffix += values[m];
                suffix >= (n - m + 1) as f64 * rho
            })
        })
        .collect()
}

fn check_symmetric(cfg: &Loaded) -> Result<Check, CliError> {
    let ext = build_extension(&cfg.system);
    let lambda = symmetric_extension(&cfg.chain, &ext)?;
    let chain = lambda.chain();
    let worst_row = chain.transition().iter().map(|r| (r.iter().sum::<f64>() - 1.0).abs()).fold(0.0, f64::max);
    let n = cfg.system.n();
    let mut worst = 0.0f64;
    for len in 1..=3 {
        for w in admissible_words(&cfg.chain.positive_transitions(), len, false) {
            let base = cylinder_mass(&cfg.chain, &CylinderSpec::new(0, w.clone())?)?;
            let mut lifted = 0.0;
            for sheets in 0..(1usize << len) {
                let lift: Vec<usize> = w.iter().enumerate().map(|(k, &s)| s + n * ((sheets >> k) & 1)).collect();
                lifted += cylinder_mass(chain, &CylinderSpec::new(0, lift)?)?;
            }
            worst = worst.max((lifted - base).abs());
        }
    }
    let back = project_markov(&lambda);
    let round_trip = back.p == cfg.chain.p() && back.transition == cfg.chain.transition();
    let detail = format!("row error {worst_row:e}, cylinder gap {worst:e}, round trip {round_trip}");
    Ok(if worst_row <= 1e-12 && worst <= 1e-12 && round_trip { Check::Pass(detail) } else { Check::Fail(detail) })
}

fn check_mirrored(cfg: &Loaded) -> Result<Check, CliError> {
    let num = &cfg.numerics;
    let ext = build_extension(&cfg.system);
    let lambda = symmetric_extension(&cfg.chain, &ext)?;
    let op = TransferOperator::new(&ext, lambda.chain(), num.n_bins)?;
    let res =
        stationary_measure(&op, &FiberMeasureVector::uniform(lambda.chain().p(), num.n_bins), num.tol, num.max_iter)?;
    if !res.converged {
        return Ok(Check::Fail(format!("stationary iteration did not converge (residual {:e})", res.residual)));
    }
    let mirror = mirror_measure(&res.measure)?;
    let (r0, r1) = (op.residual(&res.measure)?, op.residual(&mirror)?);
    let involution = mirror_measure(&mirror)? == res.measure;
    let detail = format!("residual {r0:e} vs mirrored {r1:e}, involution {involution}");
    Ok(if (r1 - r0).abs() <= 10.0 * num.tol && involution { Check::Pass(detail) } else { Check::Fail(detail) })
}

fn check_pliss(seed: u64) -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for trial in 0..200 {
        let len = rng.random_range(1..=120);
        let values: Vec<f64> = (0..len).map(|_| rng.random_range(-1.5..2.5)).collect();
        let rho = rng.random_range(0.0..0.8);
        if pliss_times(&values, rho) != brute_pliss(&values, rho) {
            return Check::Fail(format!("sequence {trial} disagrees with the quadratic oracle"));
        }
    }
    Check::Pass("200 random sequences match the quadratic oracle".into())
}

fn verify(cfg: &Loaded, common: &Common, sink: &mut Sink, corrupt: bool) -> Result<i32, CliError> {
    let seed = require_seed(common, cfg, "verify")?;
    let num = &cfg.numerics;
    let mut ext = build_extension(&cfg.system);
    if corrupt {
        let g1 = ext.map(1);
        let shifted = g1.shifted(0.01).or_else(|_| g1.shifted(-0.01))?;
        ext = ext.with_gmap(1, shifted)?;
    }
    let mut checks: Vec<(&str, Check)> = Vec::new();
    let semi = verify_semiconjugacy(&cfg.system, &ext, &cfg.chain, num.semiconjugacy_samples, seed)?;
    let detail = format!(
        "{} samples, max discrepancy {:e}, base mismatches {}",
        semi.samples, semi.max_discrepancy, semi.base_mismatches
    );
    checks.push(("semiconjugacy", if semi.passes(1e-12) { Check::Pass(detail) } else { Check::Fail(detail) }));
    let census = match two_to_one_census(&build_extension(&cfg.system), num.census_radius) {
        Ok(c) => {
            let detail = format!("{} windows at radius {}, {} exceptions", c.windows, c.radius, c.exception_count);
            if c.all_two() {
                Check::Pass(detail)
            } else {
                Check::Fail(detail)
            }
        }
        Err(e) => Check::Fail(e.to_string()),
    };
    checks.push(("two-to-one", census));
    checks.push(("symmetric extension", check_symmetric(cfg)?));
    checks.push(("mirrored stationarity", check_mirrored(cfg)?));
    checks.push(("pliss oracle", check_pliss(seed)));

    let mut text = format!("{}: property suite (seed {seed})\n", cfg.name);
    let mut failed = 0;
    for (name, check) in &checks {
        let (status, detail) = match check {
            Check::Pass(d) => ("PASS", d),
            Check::Fail(d) => {
                failed += 1;
                ("FAIL", d)
            }
        };
        writeln!(text, "{name:<22} {status}  {detail}").expect("string");
    }
    writeln!(text, "{} of {} checks passed", checks.len() - failed, checks.len()).expect("string");
    sink.text(&text)?;
    Ok(if failed == 0 { 0 } else { 1 })
}

#[allow(clippy::too_many_arguments)]
fn pliss(
    cfg: &Loaded,
    common: &Common,
    sink: &mut Sink,
    rho: f64,
    backward: bool,
    word: Option<&str>,
    p0: Option<f64>,
    n: usize,
) -> Result<i32, CliError> {
    let word = match word {
        Some(w) => Word::parse(w, cfg.system.n())?,
        None => {
            let seed = require_seed(common, cfg, "a sampled orbit")?;
            WordSampler::new(&cfg.chain).sample(n, n, &mut ChaCha8Rng::seed_from_u64(seed))
        }
    };
    let direction = if backward { TimeDirection::Backward } else { TimeDirection::Forward };
    let p = match p0 {
        Some(p) => p,
        None if backward => {
            let past = word.past(n)?;
            past.iter().fold(0.3, |x, &s| cfg.system.map(s).value(x))
        }
        None => 0.5,
    };
    let seq = orbit_log_derivs(&cfg.system, &PointState::new(word, p)?, n, direction)?;
    let times = pliss_times(&seq.values, rho);
    let mut csv = String::from("k,logderiv,hyperbolic\n");
    let mut next = times.iter().peekable();
    for (k, v) in seq.values.iter().enumerate() {
        let hit = next.peek() == Some(&&k);
        if hit {
            next.next();
        }
        writeln!(csv, "{k},{v},{}", u8::from(hit)).expect("string");
    }
    sink.csv("pliss.csv", &csv)?;
    let mut text = format!("{}: {} hyperbolic time(s) in {n} steps for rho = {rho}", cfg.name, times.len());
    if n > 0 {
        let d = pliss_density(&seq.values, rho)?;
        write!(text, ", density {:.6}", d.density).expect("string");
        if let Some(b) = d.lower_bound {
            write!(text, " (lower bound {b:.6})").expect("string");
        }
    }
    text.push('\n');
    sink.summary(&text)?;
    Ok(0)
}

fn distortion(cfg: &Loaded, sink: &mut Sink, thetas: &[f64], grid: usize) -> Result<i32, CliError> {
    if grid < 2 {
        return Err(CliError::Usage("--grid must be at least 2".into()));
    }
    let mut csv = String::from("theta,distortion\n");
    for &theta in thetas {
        if !(theta > 0.0 && theta <= 1.0) {
            return Err(CliError::Usage(format!("theta must lie in (0, 1], got {theta}")));
        }
        writeln!(csv, "{theta},{}", distortion_global(cfg.system.maps(), theta, grid)).expect("string");
    }
    sink.csv("distortion.csv", &csv)?;
    sink.summary(&format!("{}: distortion over {} theta value(s)\n", cfg.name, thetas.len()))?;
    Ok(0)
}
