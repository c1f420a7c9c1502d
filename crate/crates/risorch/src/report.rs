//! CSV reports and the run manifest.

use std::fmt::Write as _;
use std::io;

use risorch_core::evaluation::{AdmissionTier, AllocCell, EeCell};
use risorch_core::stats::Summary;

pub const ALLOC_CSV: &str = "alloc.csv";
pub const EE_CSV: &str = "ee.csv";
pub const ADMISSION_CSV: &str = "admission.csv";
pub const RUN_MANIFEST: &str = "run.manifest";

/// Shortest round-trip form; absent values become an empty field.
fn num(x: Option<f64>) -> String {
    x.map(|v| v.to_string()).unwrap_or_default()
}

pub fn write_alloc<W: io::Write>(out: W, cells: &[AllocCell]) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "method",
        "K",
        "bits",
        "tier",
        "mean_loss_db",
        "corr_mean",
        "corr_std",
        "n",
        "corr_n",
    ])?;
    for c in cells {
        for (t, loss) in c.tier_loss.iter().enumerate() {
            w.write_record([
                c.method.name().to_string(),
                c.users.to_string(),
                c.bits.to_string(),
                (t + 1).to_string(),
                num(loss.mean()),
                num(c.correlation.mean()),
                num(c.correlation.std()),
                loss.count().to_string(),
                c.correlation.count().to_string(),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn write_ee<W: io::Write>(out: W, cells: &[EeCell]) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "K",
        "bits",
        "off_fraction_mean",
        "loss_with_db",
        "loss_without_db",
        "n",
    ])?;
    for c in cells {
        w.write_record([
            c.users.to_string(),
            c.bits.to_string(),
            num(c.off_fraction.mean()),
            num(c.loss_with.mean()),
            num(c.loss_without.mean()),
            c.off_fraction.count().to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_admission<W: io::Write>(out: W, tiers: &[AdmissionTier]) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "tier",
        "accepted",
        "total",
        "ratio",
        "mean_acc_db",
        "std_acc_db",
        "max_acc_db",
        "mean_rej_db",
        "std_rej_db",
        "min_rej_db",
        "baseline_db",
    ])?;
    for t in tiers {
        let (a, r): (&Summary, &Summary) = (&t.accepted, &t.rejected);
        w.write_record([
            t.tier.to_string(),
            a.count().to_string(),
            t.total().to_string(),
            num(t.ratio()),
            num(a.mean()),
            num(a.std()),
            num(a.max()),
            num(r.mean()),
            num(r.std()),
            num(r.min()),
            t.baseline_db.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Everything needed to reproduce a run: tool version, effective seed,
/// codebook identity and the verbatim config text.
pub struct RunManifest<'a> {
    pub command: &'a str,
    pub experiments: &'a [&'a str],
    pub seed: u64,
    pub fingerprint: &'a str,
    pub compiler: &'a str,
    pub config_text: &'a str,
}

impl RunManifest<'_> {
    pub fn render(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "tool = \"risorch {}\"", env!("CARGO_PKG_VERSION"));
        let _ = writeln!(s, "command = \"{}\"", self.command);
        let _ = writeln!(s, "experiments = {:?}", self.experiments);
        let _ = writeln!(s, "seed = {}", self.seed);
        let _ = writeln!(s, "codebook_fingerprint = \"{}\"", self.fingerprint);
        let _ = writeln!(s, "codebook_compiler = \"{}\"", self.compiler);
        let _ = writeln!(s, "\n# config (verbatim)");
        s.push_str(self.config_text);
        if !self.config_text.ends_with('\n') {
            s.push('\n');
        }
        s
    }
}
