use crate::commands::{load_input_image, load_model, parallel_map};
use crate::errors::CliError;
use crate::EvalArgs;
use lytnet::data::{load_labels, LabelRecord};
use lytnet::metrics::{eval_report, ptlr_remap, ClassifiedPrediction, EvalTruth};

pub fn run(args: EvalArgs) -> Result<(), CliError> {
    let labels = load_labels(&args.labels).map_err(|e| CliError::labels(e.to_string()))?;
    if labels.records.is_empty() {
        return Err(CliError::labels(format!(
            "{}: label set is empty",
            args.labels.display()
        )));
    }

    let predictions: Vec<ClassifiedPrediction> = if args.probs_from_csv {
        // stub mode: the prediction is the annotation itself
        labels
            .records
            .iter()
            .map(|record| ClassifiedPrediction {
                class: record.class,
                coords: record.coords,
            })
            .collect()
    } else {
        let model = load_model(args.weights.as_deref().expect("clap enforces --weights"))?;
        let job = |record: &LabelRecord| -> Result<ClassifiedPrediction, CliError> {
            let path = labels.resolve(record);
            let image = load_input_image(&path, args.resize)?;
            let prediction = model
                .forward(&image)
                .map_err(|e| CliError::image(format!("{}: {e}", path.display())))?;
            let (class, _) = model.classify(&prediction);
            Ok(ClassifiedPrediction {
                class,
                coords: prediction.coords.map(|c| c as f64),
            })
        };
        parallel_map(&labels.records, args.workers, job)?
    };

    let predictions: Vec<ClassifiedPrediction> = predictions
        .into_iter()
        .map(|mut p| {
            if args.remap_ptlr {
                p.class = ptlr_remap(p.class);
            }
            p
        })
        .collect();

    let truths: Vec<EvalTruth> = labels
        .records
        .iter()
        .map(|record| EvalTruth {
            class: record.class,
            coords: record.coords,
        })
        .collect();

    let report = eval_report(&predictions, &truths).map_err(|e| CliError::labels(e.to_string()))?;
    let json = serde_json::to_string_pretty(&report)
        .map_err(|e| CliError::other(format!("report serialization: {e}")))?;

    match &args.out {
        Some(path) => std::fs::write(path, format!("{json}\n"))
            .map_err(|e| CliError::other(format!("{}: {e}", path.display())))?,
        None => println!("{json}"),
    }
    Ok(())
}
