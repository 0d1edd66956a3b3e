use std::path::Path;

use pwspd_core::experiments::chi::{estimate_chi_with_progress, ChiConfig, FULL_SCALE_N_GRID};
use pwspd_core::experiments::{gen_dataset, sample_points, DatasetSpec, Distribution};
use pwspd_core::kernels::{diffusion_kernel, gaussian_kernel, self_tuning_kernel, KernelMatrix};
use pwspd_core::neighbors::{knn_graph, KnnMetric};
use pwspd_core::pwspd::{longest_leg_all_pairs, pwspd_all_pairs, PwspdQueryConfig};
use pwspd_core::spanner::{spanner_heatmap_with_progress, HeatmapConfig};
use pwspd_core::spectral::{
    accuracy_vs_p_sweep, diffusion_spectral_clustering, euclidean_spectral_clustering,
    self_tuning_spectral_clustering, LaplacianKind, PipelineConfig,
};
use pwspd_core::stats::percentile;
use pwspd_core::{load_point_cloud, pairwise_euclidean, DistanceMatrix, NeighborGraph, PointCloud, Power};
use serde_json::json;

use crate::args::*;
use crate::output::*;
use crate::CliError;

const DATASETS: [&str; 3] = ["two-rings", "long-bottleneck", "short-bottleneck"];

fn progress(label: &'static str) -> impl Fn(usize, usize) + Sync {
    move |done, total| eprintln!("[{label}] {done}/{total}")
}

fn read_cloud(input: &InputCloud) -> Result<PointCloud, CliError> {
    Ok(load_point_cloud(&input.input, input.d.unwrap_or(0), input.labels)?)
}

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

pub fn dist(args: &DistArgs) -> Result<(), CliError> {
    let run = RunRecord::new("dist", args, None)?;
    let cloud = read_cloud(&args.input)?;
    let graph = match args.graph.k {
        Some(k) => knn_graph(&cloud, k, KnnMetric::Euclidean)?,
        None => NeighborGraph::complete(&cloud),
    };
    let matrix: DistanceMatrix = if args.p.eq_ignore_ascii_case("inf") {
        if args.normalize {
            return Err(usage("--normalize needs a finite --p"));
        }
        longest_leg_all_pairs(&graph)
    } else {
        let p: f64 = args
            .p
            .parse()
            .map_err(|_| usage(format!("--p expects a number or `inf`, got `{}`", args.p)))?;
        let power = if args.non_metric { Power::non_metric(p)? } else { Power::metric(p)? };
        let mut config = PwspdQueryConfig::new(&graph, power);
        if args.normalize {
            config = config.normalized(cloud.intrinsic_dim())?;
        }
        pwspd_all_pairs(&config)
    };

    let out = args.output.out.as_deref();
    let text = match resolve_format(args.output.format, out, Format::Csv) {
        Format::Csv => matrix.to_csv(Some(&run.csv_header()?)),
        Format::Json => run.json_document(json!({
            "summary": matrix.summary(),
            "matrix": matrix_rows(matrix.values()),
        }))?,
    };
    emit(out, &text)
}

fn percentile_scale(dist: &DistanceMatrix, args: &KernelArgs) -> Result<f64, CliError> {
    match args.epsilon {
        Some(e) => Ok(e),
        None => Ok(percentile(&dist.upper_triangle(), args.epsilon_percentile)?),
    }
}

pub fn kernel(args: &KernelArgs) -> Result<(), CliError> {
    let run = RunRecord::new("kernel", args, None)?;
    let cloud = read_cloud(&args.input)?;
    let w: KernelMatrix = match args.kind {
        KernelKind::Gaussian => {
            let dist = pairwise_euclidean(&cloud);
            gaussian_kernel(&dist, percentile_scale(&dist, args)?, args.a)?
        }
        KernelKind::SelfTuning => self_tuning_kernel(&cloud, args.k)?,
        KernelKind::Diffusion => {
            let eps = percentile_scale(&pairwise_euclidean(&cloud), args)?;
            diffusion_kernel(&cloud, eps, args.alpha)?
        }
        KernelKind::PwspdGaussian => {
            let graph = NeighborGraph::complete(&cloud);
            let dist = pwspd_all_pairs(&PwspdQueryConfig::new(&graph, Power::metric(args.p)?));
            gaussian_kernel(&dist, percentile_scale(&dist, args)?, args.a)?
        }
    };

    let out = args.output.out.as_deref();
    let text = match resolve_format(args.output.format, out, Format::Csv) {
        Format::Csv => {
            let header = format!(
                "{}\nconstruction: {}",
                run.csv_header()?,
                serde_json::to_string(&w.construction())?
            );
            matrix_csv(&header, w.values())
        }
        Format::Json => run.json_document(json!({
            "construction": w.construction(),
            "matrix": matrix_rows(w.values()),
        }))?,
    };
    emit(out, &text)
}

pub fn spanner_heatmap(args: &HeatmapArgs) -> Result<(), CliError> {
    let run = RunRecord::new("spanner-heatmap", args, Some(args.seed))?;
    let distribution: Distribution = args.dist.parse().map_err(|e| usage(format!("{e}")))?;
    let config = HeatmapConfig {
        distribution,
        d: args.d,
        p: args.p,
        n_grid: args.n_grid.clone(),
        k_grid: args.k_grid.clone(),
        trials: args.trials,
        seed: args.seed,
        tolerance: args.tolerance,
    };
    let result = spanner_heatmap_with_progress(&config, &progress("spanner-heatmap"))?;

    let out = args.output.out.as_deref();
    let text = match resolve_format(args.output.format, out, Format::Json) {
        Format::Json => run.json_document(json!({ "result": result }))?,
        Format::Csv => {
            let mut header = run.csv_header()?;
            header.push_str(&format!(
                "\ntransition_k: {}\ntransition_slope: {}",
                serde_json::to_string(&result.transition_k)?,
                serde_json::to_string(&result.transition_slope)?
            ));
            let mut text = comment_block(&header);
            text.push_str("n,k,success_fraction\n");
            for (a, &n) in result.n_grid.iter().enumerate() {
                for (b, &k) in result.k_grid.iter().enumerate() {
                    text.push_str(&format!("{n},{k},{}\n", result.success_fraction[a][b]));
                }
            }
            text
        }
    };
    emit(out, &text)
}

pub fn chi(args: &ChiArgs) -> Result<(), CliError> {
    let run = RunRecord::new("chi", args, Some(args.seed))?;
    let mut config = ChiConfig::new(args.d, args.p, args.seed);
    config.trials_per_n = args.trials;
    config.confidence = args.confidence;
    if args.full_scale {
        eprintln!(
            "warning: --full-scale uses n up to {}; expect hours of runtime and several GB of memory",
            FULL_SCALE_N_GRID[FULL_SCALE_N_GRID.len() - 1]
        );
        config.n_grid = FULL_SCALE_N_GRID.to_vec();
    } else if let Some(grid) = &args.n_grid {
        config.n_grid = grid.clone();
    }
    let estimate = estimate_chi_with_progress(&config, &progress("chi"))?;

    let out = args.output.out.as_deref();
    let text = match resolve_format(args.output.format, out, Format::Json) {
        Format::Json => run.json_document(json!({ "estimate": estimate }))?,
        Format::Csv => {
            let header = format!(
                "{}\nchi: {}\nci: [{}, {}]\nslope: {}",
                run.csv_header()?,
                estimate.chi,
                estimate.ci.0,
                estimate.ci.1,
                estimate.slope
            );
            let mut text = comment_block(&header);
            text.push_str("n,k,mean,variance\n");
            for i in 0..estimate.n_grid.len() {
                text.push_str(&format!(
                    "{},{},{},{}\n",
                    estimate.n_grid[i], estimate.k_per_n[i], estimate.means[i], estimate.variances[i]
                ));
            }
            text
        }
    };
    emit(out, &text)
}

/// Parses `start:step:stop` (inclusive) or a comma-separated list.
pub fn parse_p_grid(text: &str) -> Result<Vec<f64>, CliError> {
    let bad = || usage(format!("cannot parse p grid `{text}`"));
    let num = |s: &str| s.trim().parse::<f64>().map_err(|_| bad());
    let parts: Vec<&str> = text.split(':').collect();
    let grid = match parts.as_slice() {
        [start, step, stop] => {
            let (start, step, stop) = (num(start)?, num(step)?, num(stop)?);
            if !(step > 0.0 && stop >= start) {
                return Err(bad());
            }
            let count = ((stop - start) / step + 1e-9).floor() as usize + 1;
            (0..count)
                .map(|i| ((start + i as f64 * step) * 1e9).round() / 1e9)
                .collect()
        }
        [list] => list.split(',').map(num).collect::<Result<Vec<_>, _>>()?,
        _ => return Err(bad()),
    };
    if grid.is_empty() {
        return Err(bad());
    }
    Ok(grid)
}

pub fn cluster_sweep(args: &SweepArgs) -> Result<(), CliError> {
    let run = RunRecord::new("cluster-sweep", args, Some(args.seed))?;
    let grid = parse_p_grid(&args.p_grid)?;
    let laplacian: LaplacianKind = args.laplacian.parse().map_err(|e| usage(format!("{e}")))?;
    let cloud = if DATASETS.contains(&args.dataset.as_str()) {
        gen_dataset(&DatasetSpec::named(&args.dataset, args.seed)?)?
    } else {
        load_point_cloud(Path::new(&args.dataset), 0, true)?
    };
    let config = PipelineConfig {
        seed: args.seed,
        laplacian,
        epsilon_percentile: args.epsilon_percentile,
        ..PipelineConfig::default()
    };
    let sweep = accuracy_vs_p_sweep(&cloud, &grid, &config)?;
    let euclidean = euclidean_spectral_clustering(&cloud, &config)?.accuracy;
    let self_tuning = self_tuning_spectral_clustering(&cloud, args.st_k, &config)?.accuracy;
    let diffusion = diffusion_spectral_clustering(&cloud, 1.0, &config)?.accuracy;
    let baselines = json!({
        "euclidean": euclidean,
        "self_tuning": self_tuning,
        "diffusion": diffusion,
    });

    let out = args.output.out.as_deref();
    let text = match resolve_format(args.output.format, out, Format::Csv) {
        Format::Json => run.json_document(json!({ "baselines": baselines, "sweep": sweep }))?,
        Format::Csv => {
            let header = format!("{}\nbaselines: {}", run.csv_header()?, baselines);
            let mut text = comment_block(&header);
            text.push_str("p,accuracy\n");
            for s in &sweep {
                text.push_str(&format!("{},{}\n", s.p, s.accuracy));
            }
            text
        }
    };
    emit(out, &text)
}

pub fn gen_data(args: &GenArgs) -> Result<(), CliError> {
    let run = RunRecord::new("gen-data", args, Some(args.seed))?;
    let cloud = if DATASETS.contains(&args.name.as_str()) {
        gen_dataset(&DatasetSpec::named(&args.name, args.seed)?)?
    } else {
        let distribution: Distribution = args.name.parse().map_err(|_| {
            usage(format!(
                "unknown dataset `{}`; expected one of {}, uniform-cube, sphere, gaussian",
                args.name,
                DATASETS.join(", ")
            ))
        })?;
        let mut rng = pwspd_core::RngHandle::new(args.seed).stream();
        sample_points(distribution, args.n, args.d, &mut rng)?
    };

    let out = args.output.out.as_deref();
    let text = match resolve_format(args.output.format, out, Format::Csv) {
        Format::Csv => cloud.to_csv(Some(&run.csv_header()?)),
        Format::Json => {
            let points: Vec<&[f64]> = cloud.points().collect();
            run.json_document(json!({
                "ambient_dim": cloud.ambient_dim(),
                "intrinsic_dim": cloud.intrinsic_dim(),
                "points": points,
                "labels": cloud.labels(),
            }))?
        }
    };
    emit(out, &text)
}
