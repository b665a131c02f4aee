use std::collections::HashMap;
use std::fs;
use std::io::Write;
use std::path::Path;

use anyhow::{bail, Context, Result};
use rayon::prelude::*;
use serde_json::json;

use zsl_core::attrspace::{entropy_report, ExpandedAttributeMatrix};
use zsl_core::datagen::{generate_synthetic, load_dataset, SynthConfig};
use zsl_core::evalkit::evaluate;
use zsl_core::lezsl::{self, write_loss_trace};
use zsl_core::pacbound::bound_report;
use zsl_core::pipeline::{
    dap_model_from_bank, signature_matrix, train_model, write_diagnostics, write_predictions,
    PipelineHyper, Predictor, TrainedModel,
};
use zsl_core::{
    AggregateOptions, AttributeClassifierBank, AttributeMatrix, BankHyper, BilinearModel,
    BoundInput, BoundReport, DataBundle, Dataset, EmpiricalCdf, Error, Method, SplitSpec,
    ToleranceSource, TrainHyper,
};

use crate::output::{sidecar, stage_manifest, Staged};
use crate::{BankArgs, Cli, Command, DataArgs, LeArgs, PacArgs, PredictArgs, SynthArgs};

const USAGE: u8 = 1;
const DATA: u8 = 2;
const NUMERICAL: u8 = 3;

/// Maps a failure to the process exit code.
pub fn exit_code(err: &anyhow::Error) -> u8 {
    match err.downcast_ref::<Error>() {
        Some(e) if e.is_numerical() => NUMERICAL,
        Some(Error::InvalidHyper(_) | Error::InvalidBoundInput(_) | Error::InfeasibleConfig(_)) => {
            USAGE
        }
        Some(_) => DATA,
        None if err.downcast_ref::<UsageError>().is_some() => USAGE,
        None => DATA,
    }
}

#[derive(Debug)]
struct UsageError(String);

impl std::fmt::Display for UsageError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

fn usage(msg: impl Into<String>) -> anyhow::Error {
    UsageError(msg.into()).into()
}

pub fn run(cli: Cli) -> Result<()> {
    if cli.threads > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(cli.threads)
            .build_global()
            .context("cannot start worker threads")?;
    }
    let ctx = Ctx {
        seed: cli.seed,
        quiet: cli.quiet,
    };
    match cli.command {
        Command::Expand { attributes, out } => ctx.expand(&attributes, &out),
        Command::Synth(args) => ctx.synth(&args),
        Command::TrainDap {
            data,
            ca,
            bank,
            out,
        } => ctx.train_dap(&data, ca, bank, &out),
        Command::TrainLe {
            data,
            ca,
            le,
            out,
            loss_trace,
        } => ctx.train_le(&data, ca, le, &out, loss_trace.as_deref()),
        Command::Predict(args) => ctx.predict(&args),
        Command::Eval {
            features,
            splits,
            predictions,
            mode,
            out,
            confusion,
        } => ctx.eval(&features, &splits, &predictions, mode, out.as_deref(), confusion.as_deref()),
        Command::PacBound(args) => ctx.pac_bound(&args),
        Command::Entropy { attributes, out } => ctx.entropy(&attributes, out.as_deref()),
    }
}

struct Ctx {
    seed: u64,
    quiet: bool,
}

fn require_file(path: &Path) -> Result<()> {
    if !path.is_file() {
        return Err(Error::Io {
            path: path.to_path_buf(),
            source: std::io::Error::new(std::io::ErrorKind::NotFound, "input file not found"),
        }
        .into());
    }
    Ok(())
}

fn require_parent(path: &Path) -> Result<()> {
    match path.parent() {
        Some(p) if !p.as_os_str().is_empty() && !p.is_dir() => Err(usage(format!(
            "output directory {} does not exist",
            p.display()
        ))),
        _ => Ok(()),
    }
}

fn bank_hyper(a: BankArgs) -> BankHyper {
    BankHyper {
        learning_rate: a.bank_lr,
        epochs: a.bank_epochs,
        l2: a.bank_l2,
    }
}

fn le_hyper(a: LeArgs, seed: u64) -> TrainHyper {
    TrainHyper {
        learning_rate: a.le_lr,
        epochs: a.le_epochs,
        weight_mode: a.weight_mode,
        seed,
        l2: a.le_l2,
    }
}

fn load(data: &DataArgs) -> Result<DataBundle> {
    for p in [&data.features, &data.splits, &data.attributes] {
        require_file(p)?;
    }
    Ok(load_dataset(&data.features, &data.splits, &data.attributes)?)
}

impl Ctx {
    fn say(&self, msg: impl AsRef<str>) {
        if !self.quiet {
            println!("{}", msg.as_ref());
        }
    }

    fn expand(&self, input: &Path, out: &Path) -> Result<()> {
        require_file(input)?;
        require_parent(out)?;
        let a = AttributeMatrix::read_csv(input)?;
        if a.looks_expanded() {
            return Err(Error::AlreadyExpanded.into());
        }
        let normalized = a.normalize_columns()?;
        let s = normalized.expand()?;
        let report = entropy_report(&normalized, &s)?;

        let mut staged = Staged::new();
        staged.write_with(out, |w| s.matrix().to_writer(w))?;
        stage_manifest(
            &mut staged,
            sidecar(out, ".manifest.json"),
            "expand",
            self.seed,
            json!({ "attributes": input, "rows_in": a.n_attributes(), "rows_out": s.matrix().n_attributes() }),
        )?;
        staged.commit()?;

        let up = report.iter().filter(|c| c.entropy_ca >= c.entropy_oa).count();
        let mean = |f: fn(&zsl_core::ClassEntropy) -> f64| {
            report.iter().map(f).sum::<f64>() / report.len() as f64
        };
        self.say(format!(
            "expanded {} attributes to {} over {} classes\nmean entropy: original {:.4}, expanded {:.4}; expanded >= original for {up}/{} classes",
            a.n_attributes(),
            s.matrix().n_attributes(),
            a.n_classes(),
            mean(|c| c.entropy_oa),
            mean(|c| c.entropy_ca),
            report.len()
        ));
        Ok(())
    }

    fn synth(&self, args: &SynthArgs) -> Result<()> {
        let cfg = SynthConfig {
            seed: self.seed,
            k: args.k,
            l: args.l,
            m: args.m,
            d: args.d,
            samples_per_class: args.samples_per_class,
            noise_sigma: args.noise_sigma,
            signature_sparsity: args.sparsity,
        };
        cfg.validate()?;
        let problem = generate_synthetic(&cfg)?;
        fs::create_dir_all(&args.out_dir)
            .with_context(|| format!("cannot create {}", args.out_dir.display()))?;
        let data = &problem.data;
        let mut staged = Staged::new();
        staged.write_with(args.out_dir.join("features.csv"), |w| data.dataset.to_writer(w))?;
        staged.write_with(args.out_dir.join("splits.csv"), |w| data.split.to_writer(w))?;
        staged.write_with(args.out_dir.join("attributes.csv"), |w| data.attributes.to_writer(w))?;
        stage_manifest(
            &mut staged,
            args.out_dir.join("manifest.json"),
            "synth",
            self.seed,
            json!({
                "k": cfg.k, "l": cfg.l, "m": cfg.m, "d": cfg.d,
                "samples_per_class": cfg.samples_per_class,
                "noise_sigma": cfg.noise_sigma,
                "signature_sparsity": cfg.signature_sparsity,
                "note": "synthetic attributes equal the generating signatures, so attribute classifiers are learnable by construction; real data gives no such guarantee",
            }),
        )?;
        staged.commit()?;
        self.say(format!(
            "wrote {} samples ({} train, {} test_seen, {} test_unseen) to {}",
            data.dataset.n_samples(),
            data.split.train().len(),
            data.split.test_seen().len(),
            data.split.test_unseen().len(),
            args.out_dir.display()
        ));
        Ok(())
    }

    fn train_dap(&self, data: &DataArgs, ca: bool, hyper: BankArgs, out: &Path) -> Result<()> {
        require_parent(out)?;
        let bundle = load(data)?;
        let method = if ca { Method::DapCa } else { Method::Dap };
        let ph = PipelineHyper {
            bank: bank_hyper(hyper),
            ..PipelineHyper::default()
        };
        let TrainedModel::Dap { bank, binarized, .. } = train_model(method, &bundle, &ph)? else {
            unreachable!("dap methods train a classifier bank")
        };
        let dropped = sidecar(out, ".dropped.csv");
        let mut staged = Staged::new();
        staged.write_with(out, |w| bank.to_writer(w))?;
        staged.write_with(&dropped, |w| {
            writeln!(w, "attribute,reason")?;
            for a in binarized.dropped() {
                writeln!(w, "{a},constant over seen classes")?;
            }
            w.flush()
        })?;
        stage_manifest(
            &mut staged,
            sidecar(out, ".manifest.json"),
            "train-dap",
            self.seed,
            json!({
                "data": data_json(data),
                "complementary": ca,
                "learning_rate": ph.bank.learning_rate,
                "epochs": ph.bank.epochs,
                "l2": ph.bank.l2,
                "attributes_kept": bank.n_attributes(),
                "attributes_dropped": binarized.dropped(),
            }),
        )?;
        staged.commit()?;
        self.say(format!(
            "trained {} attribute classifiers ({} dropped as constant)",
            bank.n_attributes(),
            binarized.dropped().len()
        ));
        Ok(())
    }

    fn train_le(
        &self,
        data: &DataArgs,
        ca: bool,
        hyper: LeArgs,
        out: &Path,
        trace_path: Option<&Path>,
    ) -> Result<()> {
        require_parent(out)?;
        let th = le_hyper(hyper, self.seed);
        th.validate()?;
        let bundle = load(data)?;
        let s = signature_matrix(&bundle.attributes, ca)?;
        let trained = lezsl::train(&bundle.dataset, &bundle.split, &s, &th)?;
        let trace_path = trace_path
            .map(Path::to_path_buf)
            .unwrap_or_else(|| sidecar(out, ".loss.csv"));
        let mut staged = Staged::new();
        staged.write_with(out, |w| trained.model.to_writer(w))?;
        staged.write_with(&trace_path, |w| write_loss_trace(&trained.loss_trace, w))?;
        stage_manifest(
            &mut staged,
            sidecar(out, ".manifest.json"),
            "train-le",
            self.seed,
            json!({
                "data": data_json(data),
                "complementary": ca,
                "learning_rate": th.learning_rate,
                "epochs": th.epochs,
                "l2": th.l2,
                "weight_mode": format!("{:?}", th.weight_mode),
                "final_loss": trained.loss_trace.last(),
            }),
        )?;
        staged.commit()?;
        self.say(format!(
            "trained {}x{} compatibility matrix; loss {:.4} -> {:.4}",
            trained.model.dim(),
            s.n_attributes(),
            trained.loss_trace[0],
            trained.loss_trace.last().copied().unwrap_or(f64::NAN)
        ));
        Ok(())
    }

    fn predict(&self, args: &PredictArgs) -> Result<()> {
        let method = args.method;
        if args.bank.is_some() && method.is_label_embedding() {
            return Err(usage(format!("--bank cannot be used with method {method}")));
        }
        if args.model.is_some() && !method.is_label_embedding() {
            return Err(usage(format!("--model cannot be used with method {method}")));
        }
        for p in args.bank.iter().chain(&args.model) {
            require_file(p)?;
        }
        if !(args.tol.is_finite() && args.tol > 0.0) {
            return Err(usage("--tol must be positive"));
        }
        let hyper = PipelineHyper {
            bank: bank_hyper(args.bank_hyper),
            le: le_hyper(args.le_hyper, self.seed),
            aggregate: AggregateOptions {
                sigma: args.sigma,
                max_iters: args.max_iters,
                tol: args.tol,
                restarts: args.restarts,
            },
        };
        hyper.le.validate()?;
        let bundle = load(&args.data)?;

        let model = if let Some(path) = &args.bank {
            let bank = AttributeClassifierBank::read_csv(path)?;
            dap_model_from_bank(bank, &bundle.attributes, &bundle.split, method.uses_complement())?
        } else if let Some(path) = &args.model {
            let s = signature_matrix(&bundle.attributes, method.uses_complement())?;
            TrainedModel::Le {
                model: BilinearModel::read_csv(path, s)?,
                loss_trace: Vec::new(),
            }
        } else {
            train_model(method, &bundle, &hyper)?
        };
        let predictor = Predictor::new(method, args.mode, &model, &bundle, &hyper.aggregate)?;
        let pool = args.mode.test_pool(&bundle.split);
        let preds = pool
            .par_iter()
            .map(|id| predictor.predict(id))
            .collect::<zsl_core::Result<Vec<_>>>()?;
        let map: HashMap<String, String> = preds
            .iter()
            .map(|p| (p.sample_id.clone(), p.predicted.clone()))
            .collect();
        let report = evaluate(args.mode, &map, &bundle.dataset, &bundle.split)?;

        fs::create_dir_all(&args.out_dir)
            .with_context(|| format!("cannot create {}", args.out_dir.display()))?;
        let dir = &args.out_dir;
        let mut staged = Staged::new();
        staged.write_with(dir.join("predictions.csv"), |w| write_predictions(&preds, w))?;
        staged.write_with(dir.join("diagnostics.csv"), |w| write_diagnostics(&preds, w))?;
        staged.write_with(dir.join("report.csv"), |w| report.write_csv(w))?;
        staged.write_with(dir.join("per_class.csv"), |w| report.write_per_class_csv(w))?;
        staged.write_with(dir.join("confusion.csv"), |w| report.write_confusion_csv(w))?;
        staged.write_with(dir.join("report.txt"), |w| {
            w.write_all(report.summary_text().as_bytes())?;
            w.flush()
        })?;
        let unconverged = preds.iter().filter(|p| !p.converged).count();
        let ties = preds.iter().filter(|p| p.degenerate_tie).count();
        stage_manifest(
            &mut staged,
            dir.join("manifest.json"),
            "predict",
            self.seed,
            json!({
                "data": data_json(&args.data),
                "method": method.as_str(),
                "mode": args.mode.as_str(),
                "bank": args.bank,
                "model": args.model,
                "bank_hyper": { "learning_rate": hyper.bank.learning_rate, "epochs": hyper.bank.epochs, "l2": hyper.bank.l2 },
                "le_hyper": { "learning_rate": hyper.le.learning_rate, "epochs": hyper.le.epochs, "l2": hyper.le.l2, "weight_mode": format!("{:?}", hyper.le.weight_mode) },
                "sigma_policy": args.sigma.to_string(),
                "sigma": predictor.sigma(),
                "max_iters": args.max_iters,
                "tol": args.tol,
                "restarts": args.restarts,
                "unconverged": unconverged,
                "degenerate_ties": ties,
                "mean_class_acc": report.mean_class_acc,
            }),
        )?;
        staged.commit()?;
        if !self.quiet {
            print!("{}", report.summary_text());
            if unconverged > 0 {
                println!("note: {unconverged} samples hit the iteration cap (converged=false)");
            }
        }
        Ok(())
    }

    fn eval(
        &self,
        features: &Path,
        splits: &Path,
        predictions: &Path,
        mode: zsl_core::Mode,
        out: Option<&Path>,
        confusion: Option<&Path>,
    ) -> Result<()> {
        for p in [features, splits, predictions] {
            require_file(p)?;
        }
        for p in out.iter().chain(&confusion) {
            require_parent(p)?;
        }
        let dataset = Dataset::read_csv(features)?;
        let split = SplitSpec::read_csv(splits)?;
        let file = fs::File::open(predictions).map_err(|e| Error::Io {
            path: predictions.to_path_buf(),
            source: e,
        })?;
        let map = zsl_core::pipeline::read_predictions(
            std::io::BufReader::new(file),
            &predictions.display().to_string(),
        )?;
        let report = evaluate(mode, &map, &dataset, &split)?;
        let mut staged = Staged::new();
        if let Some(p) = out {
            staged.write_with(p, |w| report.write_csv(w))?;
        }
        if let Some(p) = confusion {
            staged.write_with(p, |w| report.write_confusion_csv(w))?;
        }
        if let Some(p) = out {
            stage_manifest(
                &mut staged,
                sidecar(p, ".manifest.json"),
                "eval",
                self.seed,
                json!({ "features": features, "splits": splits, "predictions": predictions, "mode": mode.as_str() }),
            )?;
        }
        staged.commit()?;
        if !self.quiet {
            print!("{}", report.summary_text());
        }
        Ok(())
    }

    fn pac_bound(&self, args: &PacArgs) -> Result<()> {
        let tolerance = match (&args.rp_file, args.g_inv) {
            (Some(path), None) => {
                require_file(path)?;
                ToleranceSource::Cdf(EmpiricalCdf::read_csv(path)?)
            }
            (None, Some(g)) => ToleranceSource::Explicit(g),
            _ => bail!(usage("give exactly one of --rp-file and --g-inv")),
        };
        if let Some(p) = &args.out {
            require_parent(p)?;
        }
        let input = BoundInput {
            m: args.m,
            d: args.d,
            n_unseen: args.n,
            gamma: args.gamma,
            delta: args.delta,
            tolerance,
            strict_2m: args.strict_2m,
        };
        let report = bound_report(&input)?;
        let write = |w: &mut dyn Write| -> std::io::Result<()> {
            writeln!(w, "{}", BoundReport::CSV_HEADER)?;
            writeln!(w, "{}", report.csv_row())?;
            w.flush()
        };
        match &args.out {
            Some(p) => {
                let mut staged = Staged::new();
                staged.write_with(p, |w| write(w))?;
                stage_manifest(
                    &mut staged,
                    sidecar(p, ".manifest.json"),
                    "pac-bound",
                    self.seed,
                    json!({
                        "M": args.m, "d": args.d, "n": args.n,
                        "gamma": args.gamma, "delta": args.delta,
                        "rp_file": args.rp_file, "g_inv": args.g_inv,
                        "strict_2m": args.strict_2m,
                        "log_base": "natural",
                    }),
                )?;
                staged.commit()?;
            }
            None => write(&mut std::io::stdout().lock())?,
        }
        if report.below_grid {
            eprintln!("warning: G_p exceeds gamma on the whole grid; tolerance is 0");
        }
        Ok(())
    }

    fn entropy(&self, input: &Path, out: Option<&Path>) -> Result<()> {
        require_file(input)?;
        if let Some(p) = out {
            require_parent(p)?;
        }
        let m = AttributeMatrix::read_csv(input)?;
        let s = if m.looks_expanded() {
            ExpandedAttributeMatrix::from_stacked(m)?
        } else {
            m.normalize_columns()?.expand()?
        };
        let report = entropy_report(s.source(), &s)?;
        let write = |w: &mut dyn Write| -> std::io::Result<()> {
            writeln!(w, "class,entropy_oa,entropy_ca")?;
            for c in &report {
                writeln!(w, "{},{},{}", c.class, c.entropy_oa, c.entropy_ca)?;
            }
            w.flush()
        };
        match out {
            Some(p) => {
                let mut staged = Staged::new();
                staged.write_with(p, |w| write(w))?;
                stage_manifest(
                    &mut staged,
                    sidecar(p, ".manifest.json"),
                    "entropy",
                    self.seed,
                    json!({ "attributes": input }),
                )?;
                staged.commit()?;
            }
            None => write(&mut std::io::stdout().lock())?,
        }
        Ok(())
    }
}

fn data_json(d: &DataArgs) -> serde_json::Value {
    json!({ "features": d.features, "splits": d.splits, "attributes": d.attributes })
}
