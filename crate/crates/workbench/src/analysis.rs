//! Activation analysis of a trained run: per-layer projections, clusters,
//! bit signatures, and the files describing them.

use std::fmt::Write as _;

use nb2e_core::analysis::{
    analyze_layer, bit_signature, permutation_null, signature_scan, trace_dataset, trend_slope, ActivationTrace,
    AnalysisOptions, BitScore, ClusterReport, LayerAnalysis, PHASE_BINS,
};
use nb2e_core::experiment::RunRecord;

use crate::config::AnalysisSection;
use crate::output::ArtifactWriter;
use crate::svg::{category, ramp, scatter_figure, ScatterPanel};
use crate::Error;

/// Note recorded in every manifest that contains analysis output.
pub const PROJECTION_NOTE: &str =
    "activation projection: PCA to `analysis.components` dimensions in place of UMAP; clusters come from DBSCAN on that projection";

#[derive(Debug, Clone)]
pub struct LayerReport {
    /// 1-based hidden layer index.
    pub layer: usize,
    pub analysis: LayerAnalysis,
    /// All bit positions ranked by mutual information; empty with fewer than two clusters.
    pub scan: Vec<BitScore>,
    pub positions: Vec<usize>,
    /// Permutation-null median MI for each entry of `positions`.
    pub null_median: Vec<f64>,
    pub clusters: Option<ClusterReport>,
    /// Least-squares slope of PC2 on PC1 within each cluster of `clusters`.
    pub slopes: Vec<Option<f64>>,
}

impl LayerReport {
    /// MI of each selected position divided by its null median.
    pub fn signal_to_null(&self) -> Vec<f64> {
        self.positions
            .iter()
            .zip(&self.null_median)
            .map(|(p, &null)| {
                let mi = self.scan.iter().find(|s| s.position == *p).map_or(0.0, |s| s.score);
                if null > 0.0 { mi / null } else if mi > 0.0 { f64::INFINITY } else { 0.0 }
            })
            .collect()
    }
}

pub fn options(section: &AnalysisSection) -> AnalysisOptions {
    AnalysisOptions {
        components: section.components,
        eps: section.eps,
        min_samples: section.min_samples,
        ..AnalysisOptions::default()
    }
}

/// Number of bits selected from the scan when none are configured.
pub fn default_bit_count(n_periods: usize) -> usize {
    if n_periods > 1 { 2 } else { 3 }
}

fn analyze_one(
    trace: &ActivationTrace,
    layer: usize,
    section: &AnalysisSection,
    seed: u64,
) -> Result<LayerReport, Error> {
    let analysis = analyze_layer(&trace.layers[layer], &options(section))?;
    let labels = &analysis.labels;
    let scan = if analysis.n_clusters >= 2 { signature_scan(trace, labels)? } else { Vec::new() };
    let positions = match &section.bits {
        Some(bits) => bits.clone(),
        None => scan.iter().take(default_bit_count(trace.periods.len())).map(|s| s.position).collect(),
    };
    let null_median = if analysis.n_clusters >= 2 && !positions.is_empty() {
        permutation_null(trace, labels, &positions, section.n_permutations, seed.wrapping_add(layer as u64))?
    } else {
        Vec::new()
    };
    let clusters = if analysis.n_clusters >= 1 && !positions.is_empty() {
        Some(bit_signature(trace, labels, &positions)?)
    } else {
        None
    };
    let coords = &analysis.projection.coords;
    let slopes = clusters
        .iter()
        .flat_map(|r| &r.clusters)
        .map(|c| {
            if coords.cols() < 2 {
                return None;
            }
            let rows: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == c.label).collect();
            let xs: Vec<f64> = rows.iter().map(|&i| coords.get(i, 0)).collect();
            let ys: Vec<f64> = rows.iter().map(|&i| coords.get(i, 1)).collect();
            trend_slope(&xs, &ys)
        })
        .collect();
    Ok(LayerReport { layer: layer + 1, analysis, scan, positions, null_median, clusters, slopes })
}

/// Analyzes every hidden layer, up to `threads` layers at a time.
pub fn analyze_trace(
    trace: &ActivationTrace,
    section: &AnalysisSection,
    seed: u64,
    threads: usize,
) -> Result<Vec<LayerReport>, Error> {
    let n = trace.layers.len();
    let threads = threads.clamp(1, n.max(1));
    let mut results: Vec<Option<Result<LayerReport, Error>>> = (0..n).map(|_| None).collect();
    std::thread::scope(|s| {
        for (t, chunk) in results.chunks_mut(n.div_ceil(threads).max(1)).enumerate() {
            let start = t * n.div_ceil(threads).max(1);
            s.spawn(move || {
                for (k, slot) in chunk.iter_mut().enumerate() {
                    *slot = Some(analyze_one(trace, start + k, section, seed));
                }
            });
        }
    });
    results.into_iter().map(|r| r.expect("every layer is analyzed")).collect()
}

/// Traces the run's model over its whole dataset and analyzes each layer.
pub fn analyze_record(
    record: &RunRecord,
    section: &AnalysisSection,
    n_bits: usize,
    threads: usize,
) -> Result<(ActivationTrace, Vec<LayerReport>), Error> {
    let trace = trace_dataset(&record.result.model, &record.dataset, record.plan.encoding, n_bits)?;
    let reports = analyze_trace(&trace, section, record.plan.data_seed, threads)?;
    Ok((trace, reports))
}

fn fmt_f(out: &mut String, v: f64) {
    let _ = write!(out, "{v}");
}

fn layer_csv(trace: &ActivationTrace, report: &LayerReport) -> String {
    let coords = &report.analysis.projection.coords;
    let mut out = String::from("x_raw,x_norm");
    for k in 0..coords.cols() {
        let _ = write!(out, ",pc{}", k + 1);
    }
    out.push_str(",cluster");
    for k in 0..trace.periods.len() {
        let _ = write!(out, ",phase_{}", k + 1);
    }
    for p in &report.positions {
        let _ = write!(out, ",bit_{p}");
    }
    out.push('\n');
    for i in 0..trace.n_samples() {
        fmt_f(&mut out, trace.x_raw[i]);
        out.push(',');
        fmt_f(&mut out, trace.x_norm[i]);
        for &v in coords.row(i) {
            out.push(',');
            fmt_f(&mut out, v);
        }
        let _ = write!(out, ",{}", report.analysis.labels[i]);
        for phases in &trace.phases {
            out.push(',');
            fmt_f(&mut out, phases[i]);
        }
        for &p in &report.positions {
            let _ = write!(out, ",{}", trace.bit(i, p));
        }
        out.push('\n');
    }
    out
}

fn signatures_csv(reports: &[LayerReport]) -> String {
    let mut out = String::from(
        "layer,cluster,cluster_size,x_norm_min,x_norm_max,trend_slope_pc2_pc1,positions,signature,count,fraction\n",
    );
    for r in reports {
        let Some(report) = &r.clusters else { continue };
        let positions: Vec<String> = report.positions.iter().map(usize::to_string).collect();
        for (c, slope) in report.clusters.iter().zip(&r.slopes) {
            for s in &c.signatures {
                let bits: String = s.bits.iter().map(|b| char::from(b'0' + b)).collect();
                let slope = slope.map(|v| v.to_string()).unwrap_or_default();
                let _ = writeln!(
                    out,
                    "{},{},{},{},{},{},{},{},{},{}",
                    r.layer,
                    c.label,
                    c.count,
                    c.x_norm_min,
                    c.x_norm_max,
                    slope,
                    positions.join(";"),
                    bits,
                    s.count,
                    s.fraction
                );
            }
        }
    }
    out
}

fn bit_scores_csv(reports: &[LayerReport]) -> String {
    let mut out = String::from("layer,rank,position,mutual_information_bits,selected,null_median\n");
    for r in reports {
        for (rank, s) in r.scan.iter().enumerate() {
            let sel = r.positions.iter().position(|&p| p == s.position);
            let null = sel.and_then(|k| r.null_median.get(k)).map(|v| v.to_string()).unwrap_or_default();
            let _ = writeln!(out, "{},{},{},{},{},{}", r.layer, rank + 1, s.position, s.score, sel.is_some(), null);
        }
    }
    out
}

fn phase_histograms_csv(reports: &[LayerReport]) -> String {
    let mut out = String::from("layer,cluster,period,bin_lo,bin_hi,density\n");
    for r in reports {
        let Some(report) = &r.clusters else { continue };
        for c in &report.clusters {
            for (k, hist) in c.phase_histograms.iter().enumerate() {
                for (b, d) in hist.iter().enumerate() {
                    let lo = b as f64 / PHASE_BINS as f64;
                    let hi = (b + 1) as f64 / PHASE_BINS as f64;
                    let _ = writeln!(out, "{},{},{},{lo},{hi},{d}", r.layer, c.label, k + 1);
                }
            }
        }
    }
    out
}

fn layers_csv(reports: &[LayerReport]) -> String {
    let mut out = String::from(
        "layer,components_kept,rank_deficient,explained_ratio,eps,n_clusters,n_noise,positions,signal_to_null\n",
    );
    for r in reports {
        let p = &r.analysis.projection;
        let explained: f64 = p.explained_ratio().iter().sum();
        let positions: Vec<String> = r.positions.iter().map(usize::to_string).collect();
        let ratios: Vec<String> = r.signal_to_null().iter().map(f64::to_string).collect();
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{}",
            r.layer,
            p.kept(),
            p.rank_deficient(),
            explained,
            r.analysis.eps,
            r.analysis.n_clusters,
            r.analysis.n_noise,
            positions.join(";"),
            ratios.join(";")
        );
    }
    out
}

/// Scatter grid: one row per layer; columns colored by each phase, by `x'`, and by cluster.
pub fn activations_svg(title: &str, trace: &ActivationTrace, reports: &[LayerReport]) -> String {
    let x_lo = trace.x_norm.iter().copied().fold(f64::INFINITY, f64::min);
    let x_hi = trace.x_norm.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let span = if x_hi > x_lo { x_hi - x_lo } else { 1.0 };
    let rows: Vec<Vec<ScatterPanel>> = reports
        .iter()
        .map(|r| {
            let coords = &r.analysis.projection.coords;
            let points: Vec<(f64, f64)> = (0..coords.rows())
                .map(|i| (coords.get(i, 0), if coords.cols() > 1 { coords.get(i, 1) } else { 0.0 }))
                .collect();
            let panel = |title: String, colors: Vec<String>| ScatterPanel {
                title,
                xlabel: String::from("PC1"),
                ylabel: String::from("PC2"),
                points: points.clone(),
                colors,
            };
            let mut row: Vec<ScatterPanel> = trace
                .phases
                .iter()
                .enumerate()
                .map(|(k, ph)| panel(format!("layer {} phase {}", r.layer, k + 1), ph.iter().map(|&v| ramp(v)).collect()))
                .collect();
            row.push(panel(
                format!("layer {} position x'", r.layer),
                trace.x_norm.iter().map(|&v| ramp((v - x_lo) / span)).collect(),
            ));
            row.push(panel(
                format!("layer {} clusters ({})", r.layer, r.analysis.n_clusters),
                r.analysis.labels.iter().map(|&l| category(l)).collect(),
            ));
            row
        })
        .collect();
    scatter_figure(title, &rows)
}

/// Writes every analysis artifact under `prefix`.
pub fn write_analysis(
    writer: &mut ArtifactWriter,
    prefix: &str,
    title: &str,
    trace: &ActivationTrace,
    reports: &[LayerReport],
) -> Result<(), Error> {
    for r in reports {
        writer.write(&format!("{prefix}/layer_{}.csv", r.layer), layer_csv(trace, r).as_bytes())?;
    }
    writer.write(&format!("{prefix}/layers.csv"), layers_csv(reports).as_bytes())?;
    writer.write(&format!("{prefix}/signatures.csv"), signatures_csv(reports).as_bytes())?;
    writer.write(&format!("{prefix}/bit_scores.csv"), bit_scores_csv(reports).as_bytes())?;
    writer.write(&format!("{prefix}/phase_histograms.csv"), phase_histograms_csv(reports).as_bytes())?;
    writer.write(&format!("{prefix}/activations.svg"), activations_svg(title, trace, reports).as_bytes())?;
    Ok(())
}
