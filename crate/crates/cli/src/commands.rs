use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use ytx::diagnostics::{run_all, DiagnosticReport, Verdict};
use ytx::eval::{markdown, run_benchmark, BenchmarkConfig, BenchmarkReport, ModelKind};
use ytx::transform::{deflation_from_dataset, side_for, DeflationIndex};
use ytx::{fit, load_csv, ColumnRoles, Dataset, Error, FittedTransform, Result, TransformKind};

use crate::{
    thresholds, BenchmarkArgs, DeflationArgs, DiagnoseArgs, InputArgs, ReportArgs, TransformArgs,
};

/// Parameters written next to a transformed CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransformSidecar {
    pub target: String,
    #[serde(flatten)]
    pub transform: FittedTransform,
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> Error + '_ {
    move |source| Error::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn write_file(path: &Path, contents: &str) -> Result<()> {
    fs::write(path, contents).map_err(io_err(path))
}

fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("report types serialize");
    s.push('\n');
    s
}

fn resolve_roles(input: &InputArgs) -> Result<ColumnRoles> {
    match &input.roles {
        Some(r) if r.trim_start().starts_with('{') => ColumnRoles::from_json(r),
        Some(r) => {
            let path = PathBuf::from(r);
            let text = fs::read_to_string(&path).map_err(|source| Error::Io {
                path: path.clone(),
                source,
            });
            match text {
                Ok(t) => ColumnRoles::from_json(&t),
                Err(e) => Err(Error::Config(format!("--roles: {e}"))),
            }
        }
        None => {
            let mut rdr = csv::Reader::from_path(&input.input).map_err(Error::Csv)?;
            let last = rdr.headers()?.iter().next_back().map(str::to_owned);
            last.map(ColumnRoles::new)
                .ok_or_else(|| Error::InvalidInput("csv has no columns".into()))
        }
    }
}

fn load(input: &InputArgs) -> Result<Dataset> {
    let roles = resolve_roles(input)?;
    let ds = load_csv(&input.input, &roles)?;
    if ds.dropped_rows() > 0 {
        log::warn!("dropped {} rows with missing values", ds.dropped_rows());
    }
    Ok(ds)
}

fn deflation(ds: &Dataset, args: &DeflationArgs) -> Result<Option<DeflationIndex>> {
    match &args.price_index {
        Some(p) => DeflationIndex::from_csv(p, args.base_time.as_deref()).map(Some),
        None if ds.time().is_some() && ds.price_index().is_some() => {
            deflation_from_dataset(ds, args.base_time.as_deref()).map(Some)
        }
        None => Ok(None),
    }
}

fn verdict_line(name: &str, v: &Option<Verdict>, stat: &str) -> Option<String> {
    v.as_ref().map(|v| {
        let p = v.p_value.map(|p| format!(", p={p:.4}")).unwrap_or_default();
        format!(
            "{name:<13}{:<9}{stat}={:.4}{p}",
            if v.flagged { "flagged" } else { "-" },
            v.statistic
        )
    })
}

fn summary(r: &DiagnosticReport) -> String {
    let mut lines = vec![format!("rows         {}", r.n)];
    lines.extend(verdict_line("subjective", &r.subjective, "F"));
    lines.extend(verdict_line("frame", &r.frame, "|r|"));
    lines.extend(verdict_line("trend", &r.trend, "|rho|"));
    lines.extend(verdict_line("context", &r.context, "R2"));
    let d = &r.distribution;
    let mut why = Vec::new();
    if d.skewed {
        why.push("skew");
    }
    if d.gapped {
        why.push("gap");
    }
    if d.heteroscedastic {
        why.push("heteroscedastic");
    }
    lines.push(format!(
        "{:<13}{:<9}skewness={:.4}, gap={:.4}, bp_p={:.4}{}",
        "distribution",
        if d.flagged { "flagged" } else { "-" },
        d.skewness,
        d.gap_score,
        d.heteroscedasticity_p_value,
        if why.is_empty() {
            String::new()
        } else {
            format!(" [{}]", why.join(", "))
        }
    ));
    let recs: Vec<String> = r
        .recommendations
        .iter()
        .map(|x| format!("{} ({})", x.kind, x.reason))
        .collect();
    lines.push(format!(
        "recommended  {}",
        if recs.is_empty() {
            "none".to_string()
        } else {
            recs.join(", ")
        }
    ));
    lines.join("\n")
}

pub fn diagnose(args: DiagnoseArgs) -> Result<()> {
    let th = thresholds(&args.thresholds)?;
    let ds = load(&args.input)?;
    let report = run_all(&ds, &th)?;
    match &args.out_json {
        Some(p) => {
            write_file(p, &to_json(&report))?;
            println!("{}", summary(&report));
        }
        None => print!("{}", to_json(&report)),
    }
    Ok(())
}

pub fn transform(args: TransformArgs) -> Result<()> {
    let ds = load(&args.input)?;
    let kind = args.transform;
    let index = if kind == TransformKind::Deflate {
        deflation(&ds, &args.deflation)?
    } else {
        None
    };
    let side = side_for(&ds, kind)?;
    let fitted = fit(kind, ds.target(), side, index.as_ref())?;
    let z = fitted.forward(ds.target(), side)?;

    let target = ds.roles().target.clone();
    let mut rdr = csv::Reader::from_path(&args.input.input)?;
    let headers = rdr.headers()?.clone();
    let col = headers
        .iter()
        .position(|h| h.trim() == target)
        .ok_or_else(|| Error::MissingRoleColumn(target.clone()))?;
    let records: Vec<csv::StringRecord> = rdr.records().collect::<std::result::Result<_, _>>()?;
    let mut wtr = csv::Writer::from_path(&args.out_csv)?;
    wtr.write_record(&headers)?;
    for (&row, value) in ds.source_rows().iter().zip(&z) {
        let rec: Vec<String> = records[row]
            .iter()
            .enumerate()
            .map(|(j, cell)| {
                if j == col {
                    value.to_string()
                } else {
                    cell.to_owned()
                }
            })
            .collect();
        wtr.write_record(&rec)?;
    }
    wtr.flush().map_err(io_err(&args.out_csv))?;

    let sidecar = TransformSidecar {
        target,
        transform: fitted,
    };
    write_file(&args.out_json, &to_json(&sidecar))?;
    println!(
        "{kind}: {} rows written to {}",
        z.len(),
        args.out_csv.display()
    );
    Ok(())
}

/// Recommended kinds that can actually be fitted on this dataset.
fn auto_transforms(
    ds: &Dataset,
    args: &BenchmarkArgs,
    index: Option<&DeflationIndex>,
) -> Result<Vec<TransformKind>> {
    let th = thresholds(&args.thresholds)?;
    let report = run_all(ds, &th)?;
    let mut kinds = Vec::new();
    for rec in report.recommendations {
        let usable = side_for(ds, rec.kind).and_then(|side| {
            fit(rec.kind, ds.target(), side, index).and_then(|t| t.forward(ds.target(), side))
        });
        match usable {
            Ok(_) => kinds.push(rec.kind),
            Err(e) => log::warn!("skipping recommended {}: {e}", rec.kind),
        }
    }
    Ok(kinds)
}

pub fn benchmark(args: BenchmarkArgs) -> Result<()> {
    // validate everything that does not need the data first
    let mut explicit = Vec::new();
    let mut auto = false;
    for t in &args.transforms {
        if t.eq_ignore_ascii_case("auto") {
            auto = true;
        } else {
            explicit.push(t.parse::<TransformKind>()?);
        }
    }
    thresholds(&args.thresholds)?;
    let ds = load(&args.input)?;
    let index = deflation(&ds, &args.deflation)?;
    let mut transforms = if auto {
        auto_transforms(&ds, &args, index.as_ref())?
    } else {
        Vec::new()
    };
    transforms.extend(explicit);
    let models = if args.models.is_empty() {
        vec![ModelKind::Ridge, ModelKind::Lasso]
    } else {
        args.models.clone()
    };
    let name = args.name.clone().unwrap_or_else(|| {
        args.input
            .input
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| "dataset".into())
    });
    let config = BenchmarkConfig {
        name,
        models,
        transforms,
        alpha: args.alpha,
        seed: args.seed,
        threads: None,
        deflation: index,
    };
    let report = run_benchmark(&ds, &config)?;
    let md = markdown(std::slice::from_ref(&report));
    if let Some(p) = &args.out_json {
        write_file(p, &to_json(&report))?;
    }
    if let Some(p) = &args.out_md {
        write_file(p, &md)?;
    }
    print!("{md}");
    Ok(())
}

pub fn report(args: ReportArgs) -> Result<()> {
    let mut reports = Vec::new();
    for p in &args.inputs {
        let text = fs::read_to_string(p).map_err(io_err(p))?;
        let r: BenchmarkReport = serde_json::from_str(&text)
            .map_err(|e| Error::InvalidInput(format!("{}: {e}", p.display())))?;
        reports.push(r);
    }
    let md = markdown(&reports);
    match &args.out_md {
        Some(p) => write_file(p, &md)?,
        None => print!("{md}"),
    }
    Ok(())
}
