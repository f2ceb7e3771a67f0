use crate::errors::CliError;
use crate::InspectArgs;
use lytnet::model::{
    build_default_spec, count_params_and_macs, DataShape, LayerKind, Model, ModelWeights,
};
use lytnet::tensor::Tensor;
use serde_json::json;
use std::time::Instant;

/// Input shapes written the way the layer table abbreviates them: `w x c`
/// for maps, the plain length for flattened vectors.
fn table_style(shape: DataShape) -> String {
    match shape {
        DataShape::Map {
            channels, width, ..
        } => format!("{width}x{channels}"),
        DataShape::Flat(n) => format!("{n}"),
    }
}

fn dash_if_zero(v: usize) -> String {
    if v == 0 {
        "-".to_string()
    } else {
        v.to_string()
    }
}

pub fn run(args: InspectArgs) -> Result<(), CliError> {
    let spec = build_default_spec();
    spec.validate()
        .map_err(|e| CliError::other(format!("built-in spec failed validation: {e}")))?;
    let report = count_params_and_macs(&spec);
    let inputs = spec
        .layer_inputs()
        .map_err(|e| CliError::other(e.to_string()))?;

    if args.json {
        let rows: Vec<serde_json::Value> = report
            .layers
            .iter()
            .zip(spec.layers.iter())
            .map(|(cost, layer)| {
                json!({
                    "row": cost.row,
                    "operator": cost.operator,
                    "input": cost.input.describe(),
                    "output": cost.output.describe(),
                    "k": layer.kernel,
                    "e": layer.expansion,
                    "c": layer.out_channels,
                    "se": layer.use_se,
                    "nl": layer.nonlin.map(|n| n.name()),
                    "s": layer.stride,
                    "params": cost.params,
                    "macs": cost.macs,
                    "separable_ratio": cost.separable_ratio,
                })
            })
            .collect();
        let doc = json!({
            "input": format!("{}x{}x{}", spec.input.0, spec.input.1, spec.input.2),
            "rows": rows,
            "total_params": report.total_params,
            "total_macs": report.total_macs,
        });
        println!("{}", serde_json::to_string_pretty(&doc).expect("report serializes"));
    } else {
        // column selection: --spec/--params/--macs narrow the table;
        // no flags means everything
        let all = !args.spec && !args.params && !args.macs;
        let show_spec = args.spec || all;
        let show_params = args.params || all;
        let show_macs = args.macs || all;

        let mut header = vec![format!("{:>3}", "row"), format!("{:<10}", "input")];
        header.push(format!("{:<8}", "operator"));
        if show_spec {
            header.push(format!(
                "{:>2} {:>4} {:>5} {:>2} {:>2} {:>1}",
                "k", "e", "c", "SE", "NL", "s"
            ));
        }
        header.push(format!("{:<11}", "output"));
        if show_params {
            header.push(format!("{:>10}", "params"));
        }
        if show_macs {
            header.push(format!("{:>12}", "macs"));
            header.push(format!("{:>9}", "sep.ratio"));
        }
        println!("{}", header.join("  "));

        for (idx, (cost, layer)) in report.layers.iter().zip(spec.layers.iter()).enumerate() {
            let mut cols = vec![
                format!("{:>3}", cost.row),
                format!("{:<10}", table_style(inputs[idx])),
                format!("{:<8}", cost.operator),
            ];
            if show_spec {
                let channels = if layer.kind == LayerKind::FullyConnected {
                    format!("{},{}", spec.num_classes, spec.num_coords)
                } else {
                    dash_if_zero(layer.out_channels)
                };
                let stride = match layer.kind {
                    LayerKind::AvgPool | LayerKind::FullyConnected => "-".to_string(),
                    _ => layer.stride.to_string(),
                };
                cols.push(format!(
                    "{:>2} {:>4} {:>5} {:>2} {:>2} {:>1}",
                    dash_if_zero(layer.kernel),
                    dash_if_zero(layer.expansion),
                    channels,
                    if layer.use_se { "+" } else { "-" },
                    layer.nonlin.map(|n| n.name()).unwrap_or("-"),
                    stride,
                ));
            }
            cols.push(format!("{:<11}", table_style(cost.output)));
            if show_params {
                cols.push(format!("{:>10}", cost.params));
            }
            if show_macs {
                cols.push(format!("{:>12}", cost.macs));
                let ratio = cost
                    .separable_ratio
                    .map(|r| format!("{r:.3}"))
                    .unwrap_or_else(|| "-".to_string());
                cols.push(format!("{:>9}", ratio));
            }
            println!("{}", cols.join("  "));
        }
        if show_params || show_macs {
            let mut totals = vec!["total:".to_string()];
            if show_params {
                totals.push(format!("params={}", report.total_params));
            }
            if show_macs {
                totals.push(format!("macs={}", report.total_macs));
            }
            println!("{}", totals.join(" "));
        }
    }

    if args.bench {
        let weights = ModelWeights::random(&spec, args.seed);
        let model = Model::new(spec.clone(), &weights)
            .map_err(|e| CliError::other(format!("bench weights: {e}")))?;
        let (c, h, w) = spec.input;
        let input = Tensor::from_vec(c, h, w, vec![0.5; c * h * w])
            .map_err(|e| CliError::other(e.to_string()))?;
        model
            .forward(&input)
            .map_err(|e| CliError::other(format!("bench warmup: {e}")))?;
        let runs = 3;
        let mut best = f64::INFINITY;
        for _ in 0..runs {
            let start = Instant::now();
            model
                .forward(&input)
                .map_err(|e| CliError::other(format!("bench: {e}")))?;
            best = best.min(start.elapsed().as_secs_f64());
        }
        println!(
            "bench: single-image forward {:.1} ms best of {runs} ({:.2} fps), seed {}",
            best * 1e3,
            1.0 / best,
            args.seed
        );
    }
    Ok(())
}
