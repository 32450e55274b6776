//! End-to-end driver: load a log, replay it as releases, perturb counts,
//! track leakage, and write reports.

use std::fs;
use std::io::BufReader;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::correlation::{Scenario, ScenarioKind};
use crate::error::{Error, Result};
use crate::event_log::{parse_csv, parse_xes, write_csv, CsvColumns, EventLog};
use crate::leakage::{ChainOptions, LeakageLedger, LeakageTracker, PrivacyMechanismSpec};
use crate::simulate::{
    generate_release, laplace_perturb, noise_seed, split_log, NoisyVariants, ReleasePlan,
    SplitConfig,
};

/// Input interchange format.
#[derive(Clone, Copy, PartialEq, Eq, Debug, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LogFormat {
    Csv,
    Xes,
}

impl FromStr for LogFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "csv" => Ok(LogFormat::Csv),
            "xes" => Ok(LogFormat::Xes),
            other => Err(Error::Config(format!("unknown log format '{other}'"))),
        }
    }
}

impl LogFormat {
    fn infer(path: &Path) -> Result<Self> {
        match path.extension().and_then(|e| e.to_str()).map(str::to_ascii_lowercase) {
            Some(ext) if ext == "csv" => Ok(LogFormat::Csv),
            Some(ext) if ext == "xes" => Ok(LogFormat::Xes),
            _ => Err(Error::Config(format!(
                "cannot infer log format from '{}'; pass an explicit format",
                path.display()
            ))),
        }
    }
}

/// Which artifacts to write.
#[derive(Clone, Copy, Debug, serde::Serialize, serde::Deserialize)]
pub struct EmitFlags {
    pub csv: bool,
    pub json: bool,
    pub svg: bool,
    pub dot: bool,
}

impl Default for EmitFlags {
    fn default() -> Self {
        EmitFlags { csv: true, json: true, svg: true, dot: true }
    }
}

impl FromStr for EmitFlags {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let mut flags = EmitFlags { csv: false, json: false, svg: false, dot: false };
        for part in s.split(',').map(str::trim).filter(|p| !p.is_empty()) {
            match part {
                "csv" => flags.csv = true,
                "json" => flags.json = true,
                "svg" => flags.svg = true,
                "dot" => flags.dot = true,
                other => {
                    return Err(Error::Config(format!(
                        "unknown emit target '{other}' (expected csv, json, svg, dot)"
                    )))
                }
            }
        }
        Ok(flags)
    }
}

/// Full configuration of one run. Deserializable from a JSON file; every
/// field has a default so partial configs work.
#[derive(Clone, Debug, serde::Serialize, serde::Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub input: Option<PathBuf>,
    pub format: Option<LogFormat>,
    pub split: f64,
    pub scenario: ScenarioKind,
    pub window: u32,
    pub epsilon: f64,
    pub releases: u32,
    pub seed: u64,
    pub out: PathBuf,
    pub emit: EmitFlags,
    pub max_pairs: Option<usize>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            input: None,
            format: None,
            split: 0.5,
            scenario: ScenarioKind::Certain,
            window: 1,
            epsilon: 0.01,
            releases: 5,
            seed: 0,
            out: PathBuf::from("tplq-out"),
            emit: EmitFlags::default(),
            max_pairs: None,
        }
    }
}

impl RunConfig {
    pub fn scenario(&self) -> Scenario {
        Scenario { kind: self.scenario, window: self.window }
    }

    fn validate(&self) -> Result<()> {
        if self.window == 0 {
            return Err(Error::Config("window must be at least 1".into()));
        }
        if self.releases == 0 {
            return Err(Error::Config("need at least one release".into()));
        }
        Ok(())
    }
}

fn write_file(path: &Path, contents: &[u8]) -> Result<()> {
    fs::write(path, contents).map_err(|e| Error::io(path, e))
}

fn load_source(cfg: &RunConfig) -> Result<EventLog> {
    let input = cfg
        .input
        .as_ref()
        .ok_or_else(|| Error::Config("an input log path is required".into()))?;
    let format = match cfg.format {
        Some(f) => f,
        None => LogFormat::infer(input)?,
    };
    let file = fs::File::open(input).map_err(|e| Error::io(input, e))?;
    let raw = match format {
        LogFormat::Csv => parse_csv(file, &CsvColumns::default())?,
        LogFormat::Xes => parse_xes(BufReader::new(file))?,
    };
    // The source is a finished history being replayed, so every trace ends.
    raw.canonicalize_all_complete()
}

fn export_release(dir: &Path, log: &EventLog, noisy: &NoisyVariants) -> Result<()> {
    let release = log.release_index();
    let log_path = dir.join(format!("release_{release:04}.csv"));
    let mut buf = Vec::new();
    write_csv(log, &mut buf)?;
    write_file(&log_path, &buf)?;

    let noisy_path = dir.join(format!("noisy_{release:04}.csv"));
    let mut table = String::from("variant,true_count,raw,rounded\n");
    for e in &noisy.entries {
        table.push_str(&format!(
            "\"{}\",{},{},{}\n",
            e.variant.join(" "),
            e.true_count,
            e.raw,
            e.rounded
        ));
    }
    write_file(&noisy_path, table.as_bytes())
}

#[derive(serde::Serialize)]
struct ReleaseStat {
    release: u32,
    events: usize,
    cases: usize,
    complete_cases: usize,
    variants: usize,
}

/// Run the whole pipeline once and write every requested artifact under
/// `cfg.out`. Returns the leakage ledger.
pub fn run_pipeline(cfg: &RunConfig) -> Result<LeakageLedger> {
    cfg.validate()?;
    let source = load_source(cfg)?;
    log::info!(
        "loaded {} events across {} cases",
        source.real_event_count(),
        source.num_cases()
    );
    let scenario = cfg.scenario();
    let (initial, mut reservoir) = split_log(&source, &SplitConfig { fraction: cfg.split })?;
    let plan = ReleasePlan {
        scenario,
        epsilon: cfg.epsilon,
        max_releases: cfg.releases,
        seed: cfg.seed,
    };
    let mechanism = PrivacyMechanismSpec::laplace(cfg.epsilon)?;
    let options = ChainOptions { max_pairs: cfg.max_pairs, ..ChainOptions::default() };
    let mut tracker = LeakageTracker::new(scenario, mechanism, options);

    let releases_dir = cfg.out.join("releases");
    fs::create_dir_all(&releases_dir).map_err(|e| Error::io(&releases_dir, e))?;

    let mut stats = Vec::new();
    let mut current = initial;
    loop {
        let counts = current.variant_multiset()?;
        let noisy = laplace_perturb(&counts, &mechanism, noise_seed(cfg.seed, current.release_index()));
        export_release(&releases_dir, &current, &noisy)?;
        let record = tracker.update_horizon(&current)?;
        log::info!(
            "release {}: {} events, bpl {:.6}, fpl {:.6}, tpl {:.6}",
            current.release_index(),
            current.real_event_count(),
            record.bpl,
            record.fpl,
            record.tpl
        );
        stats.push(ReleaseStat {
            release: current.release_index(),
            events: current.real_event_count(),
            cases: current.num_cases(),
            complete_cases: current.traces().filter(|t| t.is_complete()).count(),
            variants: counts.len(),
        });
        if tracker.horizon() >= cfg.releases {
            break;
        }
        match generate_release(&mut reservoir, &plan)? {
            Some(next) => current = next,
            None => {
                log::info!("source exhausted after {} releases", tracker.horizon());
                break;
            }
        }
    }

    let ledger = tracker.ledger().clone();
    if cfg.emit.csv {
        write_file(&cfg.out.join("ledger.csv"), ledger.to_csv()?.as_bytes())?;
    }
    if cfg.emit.json {
        let json = serde_json::to_string_pretty(&ledger.to_json()?)?;
        write_file(&cfg.out.join("ledger.json"), json.as_bytes())?;
    }
    if cfg.emit.svg {
        emit_chart(&ledger, &cfg.out.join("leakage.svg"))?;
    }
    if cfg.emit.dot {
        let automaton = tracker.automaton().expect("at least one release processed");
        write_file(&cfg.out.join("automaton.dot"), automaton.to_dot().as_bytes())?;
    }
    let manifest = serde_json::json!({
        "config": cfg,
        "plan": plan,
        "source": {
            "events": source.real_event_count(),
            "cases": source.num_cases(),
            "activities": source.real_activity_count(),
        },
        "releases": stats,
        "horizon": ledger.horizon(),
    });
    write_file(
        &cfg.out.join("manifest.json"),
        serde_json::to_string_pretty(&manifest)?.as_bytes(),
    )?;
    Ok(ledger)
}

/// Run the pipeline once per window value, each into `out/window_N/`.
pub fn run_window_sweep(cfg: &RunConfig, windows: &[u32]) -> Result<Vec<(u32, LeakageLedger)>> {
    if windows.is_empty() {
        return Err(Error::Config("window sweep needs at least one window".into()));
    }
    let mut out = Vec::with_capacity(windows.len());
    for &w in windows {
        let mut sub = cfg.clone();
        sub.window = w;
        sub.out = cfg.out.join(format!("window_{w}"));
        let ledger = run_pipeline(&sub)?;
        out.push((w, ledger));
    }
    Ok(out)
}

const CHART_WIDTH: f64 = 640.0;
const CHART_HEIGHT: f64 = 400.0;
const MARGIN_LEFT: f64 = 70.0;
const MARGIN_RIGHT: f64 = 20.0;
const MARGIN_TOP: f64 = 20.0;
const MARGIN_BOTTOM: f64 = 50.0;

/// Write a self-contained SVG line chart of the ledger (BPL, FPL, TPL over
/// releases) plus a sibling `.dat` file with the raw columns.
pub fn emit_chart(ledger: &LeakageLedger, path: &Path) -> Result<()> {
    let records = ledger.records();
    if records.is_empty() {
        return Err(Error::EmptyLedger);
    }
    let mut dat = String::from("# release bpl fpl tpl\n");
    for r in records {
        dat.push_str(&format!("{} {} {} {}\n", r.release, r.bpl, r.fpl, r.tpl));
    }
    write_file(&path.with_extension("dat"), dat.as_bytes())?;

    let max_y = records
        .iter()
        .flat_map(|r| [r.bpl, r.fpl, r.tpl])
        .fold(0.0f64, f64::max)
        .max(f64::MIN_POSITIVE);
    let max_x = records.last().expect("nonempty").release as f64;
    let plot_w = CHART_WIDTH - MARGIN_LEFT - MARGIN_RIGHT;
    let plot_h = CHART_HEIGHT - MARGIN_TOP - MARGIN_BOTTOM;
    let x_of = |release: f64| {
        if max_x <= 1.0 {
            MARGIN_LEFT + plot_w / 2.0
        } else {
            MARGIN_LEFT + (release - 1.0) / (max_x - 1.0) * plot_w
        }
    };
    let y_of = |v: f64| MARGIN_TOP + (1.0 - v / (max_y * 1.05)) * plot_h;

    let mut svg = String::new();
    svg.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{CHART_WIDTH}\" height=\"{CHART_HEIGHT}\" viewBox=\"0 0 {CHART_WIDTH} {CHART_HEIGHT}\">\n"
    ));
    svg.push_str("<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n");
    // Axes.
    svg.push_str(&format!(
        "<line x1=\"{l:.2}\" y1=\"{b:.2}\" x2=\"{r:.2}\" y2=\"{b:.2}\" stroke=\"black\"/>\n<line x1=\"{l:.2}\" y1=\"{t:.2}\" x2=\"{l:.2}\" y2=\"{b:.2}\" stroke=\"black\"/>\n",
        l = MARGIN_LEFT,
        r = CHART_WIDTH - MARGIN_RIGHT,
        t = MARGIN_TOP,
        b = CHART_HEIGHT - MARGIN_BOTTOM,
    ));
    // X ticks at each release.
    for r in records {
        let x = x_of(r.release as f64);
        let b = CHART_HEIGHT - MARGIN_BOTTOM;
        svg.push_str(&format!(
            "<line x1=\"{x:.2}\" y1=\"{b:.2}\" x2=\"{x:.2}\" y2=\"{:.2}\" stroke=\"black\"/>\n<text x=\"{x:.2}\" y=\"{:.2}\" font-size=\"12\" text-anchor=\"middle\">{}</text>\n",
            b + 5.0,
            b + 20.0,
            r.release
        ));
    }
    // Y ticks: five levels.
    for i in 0..=4 {
        let v = max_y * 1.05 * i as f64 / 4.0;
        let y = y_of(v);
        svg.push_str(&format!(
            "<line x1=\"{:.2}\" y1=\"{y:.2}\" x2=\"{:.2}\" y2=\"{y:.2}\" stroke=\"black\"/>\n<text x=\"{:.2}\" y=\"{:.2}\" font-size=\"12\" text-anchor=\"end\">{v:.4}</text>\n",
            MARGIN_LEFT - 5.0,
            MARGIN_LEFT,
            MARGIN_LEFT - 8.0,
            y + 4.0,
        ));
    }
    svg.push_str(&format!(
        "<text x=\"{:.2}\" y=\"{:.2}\" font-size=\"13\" text-anchor=\"middle\">release</text>\n",
        MARGIN_LEFT + plot_w / 2.0,
        CHART_HEIGHT - 10.0
    ));
    svg.push_str(&format!(
        "<text x=\"15\" y=\"{:.2}\" font-size=\"13\" text-anchor=\"middle\" transform=\"rotate(-90 15 {:.2})\">leakage</text>\n",
        MARGIN_TOP + plot_h / 2.0,
        MARGIN_TOP + plot_h / 2.0
    ));
    let series: [(&str, &str, fn(&crate::leakage::LedgerRecord) -> f64); 3] = [
        ("BPL", "#1f77b4", |r| r.bpl),
        ("FPL", "#ff7f0e", |r| r.fpl),
        ("TPL", "#2ca02c", |r| r.tpl),
    ];
    for (name, color, pick) in series {
        let points: Vec<String> = records
            .iter()
            .map(|r| format!("{:.2},{:.2}", x_of(r.release as f64), y_of(pick(r))))
            .collect();
        svg.push_str(&format!(
            "<polyline fill=\"none\" stroke=\"{color}\" stroke-width=\"2\" points=\"{}\"><title>{name}</title></polyline>\n",
            points.join(" ")
        ));
        for r in records {
            svg.push_str(&format!(
                "<circle cx=\"{:.2}\" cy=\"{:.2}\" r=\"3\" fill=\"{color}\"/>\n",
                x_of(r.release as f64),
                y_of(pick(r))
            ));
        }
    }
    // Legend.
    for (i, (name, color, _)) in series.iter().enumerate() {
        let y = MARGIN_TOP + 15.0 + i as f64 * 18.0;
        svg.push_str(&format!(
            "<rect x=\"{:.2}\" y=\"{:.2}\" width=\"12\" height=\"12\" fill=\"{color}\"/>\n<text x=\"{:.2}\" y=\"{:.2}\" font-size=\"12\">{name}</text>\n",
            MARGIN_LEFT + 10.0,
            y - 10.0,
            MARGIN_LEFT + 27.0,
            y
        ));
    }
    svg.push_str("</svg>\n");
    write_file(path, svg.as_bytes())
}

/// Load a config file and overlay it under explicit flag values.
pub fn load_config_file(path: &Path) -> Result<RunConfig> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let cfg: RunConfig = serde_json::from_str(&text)?;
    Ok(cfg)
}
