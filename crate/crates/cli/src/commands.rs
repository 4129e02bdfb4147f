//! Job execution. Each command returns its output files as bytes; writing them
//! is left to [`crate::run`].

use serde::Serialize;
use wordprune::builder::KMeansParams;
use wordprune::pruning::Discarded;
use wordprune::selection::AnnealSource;
use wordprune::validation::{
    heuristic_gap, verify_soft_exactness, verify_transfer_mean, verify_variance, ExperimentConfig, SyntheticMixture,
};
use wordprune::{
    anneal, build_neighbor_table, discard_baseline, encode_corpus, evaluate, kmeans, prune_hard, prune_hard_exact,
    train_linear, CodingScheme, PruneSet, RepresentationMatrix, TrainConfig, Word,
};

use crate::error::{CliError, CliResult};
use crate::formats::{self, json_bytes};
use crate::jobs::*;

/// Files produced by a command, in a fixed order, and a one-line summary.
#[derive(Debug)]
pub struct Products {
    pub files: Vec<(String, Vec<u8>)>,
    pub summary: String,
}

pub fn execute(job: &Job) -> CliResult<Products> {
    match job {
        Job::BuildCodebook(j) => build_codebook(j),
        Job::Encode(j) => encode(j),
        Job::Select(j) => select(j),
        Job::Eval(j) => eval(j),
        Job::Validate(j) => validate(j),
    }
}

#[derive(Serialize)]
struct KMeansReport {
    k: usize,
    descriptors: usize,
    iterations: usize,
    converged: bool,
    objective: Vec<f64>,
}

fn build_codebook(j: &BuildCodebookJob) -> CliResult<Products> {
    let corpus = formats::read_corpus(&j.corpus)?;
    let params = KMeansParams { k: j.k, seed: j.seed, max_iter: j.max_iter, tol: j.tol, metric: j.metric };
    let out = kmeans(&corpus, &params)?;
    let table = build_neighbor_table(&out.codebook, j.m)?;
    let report = KMeansReport {
        k: j.k,
        descriptors: corpus.total_descriptors(),
        iterations: out.iterations,
        converged: out.converged,
        objective: out.objective,
    };
    Ok(Products {
        summary: format!("codebook with {} words from {} descriptors", j.k, report.descriptors),
        files: vec![
            ("codebook.json".into(), json_bytes(&formats::codebook_file(&out.codebook, Some(j.seed)))),
            ("neighbors.json".into(), json_bytes(&formats::neighbor_file(&table))),
            ("kmeans.json".into(), json_bytes(&report)),
        ],
    })
}

fn encode(j: &EncodeJob) -> CliResult<Products> {
    let scheme = match (j.scheme, j.beta) {
        (Scheme::Hard, None) => CodingScheme::Hard,
        (Scheme::Hard, Some(_)) => return Err(CliError::usage("beta only applies to soft coding")),
        (Scheme::Soft, Some(softness)) => CodingScheme::Soft { softness },
        (Scheme::Soft, None) => return Err(CliError::usage("soft coding requires beta (--beta)")),
    };
    let corpus = formats::read_corpus(&j.corpus)?;
    let codebook = formats::read_codebook(&j.codebook)?;
    let encoded = encode_corpus(&corpus, &codebook, scheme, j.retain_coding)?;
    let mut files = vec![("representation.csv".into(), formats::representation_csv(&encoded.representations)?)];
    if let Some(coding) = &encoded.coding {
        files.push(("coding.json".into(), json_bytes(&formats::coding_file(coding))));
    }
    Ok(Products {
        summary: format!("encoded {} images over {} words", corpus.len(), codebook.k()),
        files,
    })
}

fn select(j: &SelectJob) -> CliResult<Products> {
    let neighbors = formats::read_neighbors(&j.neighbors)?;
    let config = j.anneal_config();
    let outcome = match j.scheme {
        Scheme::Hard => anneal(AnnealSource::Hard(&formats::read_representation(&j.input)?), &neighbors, &config)?,
        Scheme::Soft => anneal(AnnealSource::Soft(&formats::read_coding(&j.input)?), &neighbors, &config)?,
    };
    let subset = formats::SubsetFile {
        k: neighbors.k(),
        words: outcome.best_subset,
        energy: outcome.best_energy,
        final_words: outcome.final_subset,
    };
    Ok(Products {
        summary: format!("best energy {} over {} words", subset.energy, subset.words.len()),
        files: vec![
            ("subset.json".into(), json_bytes(&subset)),
            ("trace.csv".into(), formats::trace_csv(&outcome.trace)?),
            ("score.json".into(), json_bytes(&outcome.best_report)),
        ],
    })
}

#[derive(Serialize)]
struct EvalReport {
    method: Option<EvalMethod>,
    words: Option<Vec<Word>>,
    train_images: usize,
    test_images: usize,
    /// Rows the discard baseline had to replace by a uniform histogram.
    flagged_train: usize,
    flagged_test: usize,
    macro_accuracy: f64,
    per_class: Vec<ClassAccuracy>,
    c: f64,
    epochs: usize,
}

#[derive(Serialize)]
struct ClassAccuracy {
    class: String,
    accuracy: Option<f64>,
}

fn eval(j: &EvalJob) -> CliResult<Products> {
    let train = formats::read_representation(&j.train)?;
    let test = formats::read_representation(&j.test)?;
    let mut flagged = (0, 0);
    let (words, train, test) = match &j.subset {
        None => (None, train, test),
        Some(path) => {
            let subset = formats::read_subset(path)?;
            let prune_train = PruneSet::keeping(train.active_words(), &subset.words)?;
            let prune_test = PruneSet::keeping(test.active_words(), &subset.words)?;
            let (a, b) = match j.method {
                EvalMethod::Psi => {
                    let path = j.neighbors.as_ref().ok_or_else(|| CliError::usage("method psi requires neighbors"))?;
                    let table = formats::read_neighbors(path)?;
                    (prune_hard(&train, &prune_train, &table)?, prune_hard(&test, &prune_test, &table)?)
                }
                EvalMethod::ExactPsi => {
                    let (Some(path), Some(sigma)) = (&j.codebook, j.sigma) else {
                        return Err(CliError::usage("method exact-psi requires codebook and sigma"));
                    };
                    let cb = formats::read_codebook(path)?;
                    let run = |m: &RepresentationMatrix<f64>, p: &PruneSet| {
                        prune_hard_exact(m, p, &cb, sigma, j.lambda_samples, j.seed)
                    };
                    (run(&train, &prune_train)?, run(&test, &prune_test)?)
                }
                EvalMethod::Discard => {
                    let Discarded { representations: a, flagged_rows: fa } = discard_baseline(&train, &prune_train)?;
                    let Discarded { representations: b, flagged_rows: fb } = discard_baseline(&test, &prune_test)?;
                    flagged = (fa.len(), fb.len());
                    (a, b)
                }
            };
            (Some(subset.words), a, b)
        }
    };
    let model = train_linear(&train, &TrainConfig { c: j.c, epochs: j.epochs })?;
    let evaluation = evaluate(&model, &test)?;
    let report = EvalReport {
        method: words.as_ref().map(|_| j.method),
        words,
        train_images: train.n_rows(),
        test_images: test.n_rows(),
        flagged_train: flagged.0,
        flagged_test: flagged.1,
        macro_accuracy: evaluation.macro_accuracy,
        per_class: model
            .classes
            .iter()
            .zip(&evaluation.per_class)
            .map(|(c, a)| ClassAccuracy { class: c.clone(), accuracy: *a })
            .collect(),
        c: j.c,
        epochs: j.epochs,
    };
    Ok(Products {
        summary: format!("macro accuracy {:.4} on {} test images", report.macro_accuracy, report.test_images),
        files: vec![("eval.json".into(), json_bytes(&report))],
    })
}

fn validate(j: &ValidateJob) -> CliResult<Products> {
    if j.word >= j.means.len() {
        return Err(CliError::usage(format!("word {} is outside the {} mixture components", j.word, j.means.len())));
    }
    let word = Word::from_slot(j.word);
    let config = ExperimentConfig { word, n: j.n, trials: j.trials, lambda_samples: j.lambda_samples, seed: j.seed };
    let mixture = || SyntheticMixture::new(j.means.clone(), j.sigma);
    let (summary, files) = match j.experiment {
        Experiment::TransferMean => {
            let r = verify_transfer_mean(&mixture()?, &config)?;
            (format!("largest gap {:.3e} ({:.2} standard errors)", r.max_gap, r.max_z), vec![json_bytes(&r)])
        }
        Experiment::Variance => {
            let r = verify_variance(&mixture()?, &config, j.in_cell)?;
            let worst = r.bins.iter().map(|b| b.ratio).fold(1.0, |w: f64, x| if (x.ln()).abs() > w.ln().abs() { x } else { w });
            (format!("variance ratio furthest from 1: {worst:.4}"), vec![json_bytes(&r)])
        }
        Experiment::SoftExactness => {
            let r = verify_soft_exactness(j.instances, (j.k_min, j.k_max), j.seed)?;
            (format!("largest difference {:.3e} over {} corpora", r.max_abs_diff, r.instances.len()), vec![json_bytes(&r)])
        }
        Experiment::HeuristicGap => {
            let rows = heuristic_gap(&j.means, word, &j.sigmas, &j.ms, j.lambda_samples, j.seed)?;
            let mut w = csv::Writer::from_writer(Vec::new());
            w.write_record(["sigma", "m", "max_gap"])?;
            for r in &rows {
                w.write_record([r.sigma.to_string(), r.m.to_string(), r.max_gap.to_string()])?;
            }
            let table = w.into_inner().map_err(|e| CliError::data(e.to_string()))?;
            (format!("{} (sigma, m) combinations", rows.len()), vec![json_bytes(&rows), table])
        }
    };
    let mut names = vec!["report.json".to_string()];
    if files.len() > 1 {
        names.push("gap.csv".into());
    }
    Ok(Products { summary, files: names.into_iter().zip(files).collect() })
}
