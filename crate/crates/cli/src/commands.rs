use std::fs;
use std::path::Path;

use lleinc::io::{encode_emb1, render_csv};
use lleinc::synth::{Blobs, SwissRoll};
use lleinc::{fit as fit_model, load_embeddings, Format, LabeledEmbeddings, Reembedder};
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::error::{CliError, CliResult};
use crate::{BlobsArgs, ClassifyArgs, FitArgs, SwissArgs, TransformArgs};

pub fn load(path: &Path) -> CliResult<LabeledEmbeddings> {
    load_embeddings(path, Format::from_path(path)).map_err(|source| CliError::Input {
        path: path.to_owned(),
        source,
    })
}

pub fn load_model(path: &Path) -> CliResult<Reembedder> {
    Reembedder::load(path).map_err(|source| CliError::Input {
        path: path.to_owned(),
        source,
    })
}

pub fn write_file(path: &Path, bytes: &[u8]) -> CliResult<()> {
    fs::write(path, bytes).map_err(|source| CliError::Output {
        path: path.to_owned(),
        source,
    })
}

fn encode(data: &LabeledEmbeddings, path: &Path) -> Vec<u8> {
    match Format::from_path(path) {
        Format::Binary => encode_emb1(data),
        Format::Csv => render_csv(data).into_bytes(),
    }
}

pub fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("reports are always serializable");
    s.push('\n');
    s
}

#[derive(Serialize)]
struct Manifest<'a, P> {
    generator: &'a str,
    file: String,
    params: &'a P,
    seed: u64,
    n: usize,
    d: usize,
    n_classes: usize,
    sha256: String,
}

fn write_dataset<P: Serialize>(data: &LabeledEmbeddings, out: &Path, generator: &str, params: &P, seed: u64) -> CliResult<()> {
    let bytes = encode(data, out);
    write_file(out, &bytes)?;
    let manifest = Manifest {
        generator,
        file: out.file_name().map(|f| f.to_string_lossy().into_owned()).unwrap_or_default(),
        params,
        seed,
        n: data.len(),
        d: data.dim(),
        n_classes: data.n_classes(),
        sha256: hex::encode(Sha256::digest(&bytes)),
    };
    let mut manifest_path = out.as_os_str().to_owned();
    manifest_path.push(".manifest.json");
    write_file(Path::new(&manifest_path), to_json(&manifest).as_bytes())?;
    println!("wrote {} ({} points, {} classes, sha256 {})", out.display(), data.len(), data.n_classes(), manifest.sha256);
    Ok(())
}

pub fn gen_swiss(a: &SwissArgs) -> CliResult<()> {
    let roll = SwissRoll::new(a.per_class as usize, a.classes as usize, a.noise, a.seed).interleaved(a.bands as usize);
    let data = roll.generate()?;
    write_dataset(&data, &a.out, "swiss", &roll, a.seed)
}

pub fn gen_blobs(a: &BlobsArgs) -> CliResult<()> {
    let blobs = Blobs {
        n_per_class: a.per_class as usize,
        n_classes: a.classes as usize,
        d: a.dim as usize,
        separation: a.separation,
        seed: a.seed,
    };
    let data = blobs.generate()?;
    write_dataset(&data, &a.out, "blobs", &blobs, a.seed)
}

fn format_values(values: &[f64]) -> String {
    const SHOWN: usize = 8;
    let mut parts: Vec<String> = values.iter().take(SHOWN).map(|v| format!("{v:.6e}")).collect();
    if values.len() > SHOWN {
        parts.push(format!("... ({} more)", values.len() - SHOWN));
    }
    parts.join(" ")
}

pub fn fit(a: &FitArgs) -> CliResult<()> {
    let data = load(&a.data)?;
    let config = a.fit.config(a.dim as usize);
    let model = fit_model(&data, &config, a.mode.into())?;
    let bytes = model.to_bytes();
    write_file(&a.out, &bytes)?;

    let skipped = model.skipped();
    println!(
        "fit {} points of width {} in {} classes, mode {:?}, c={}, target dim {}",
        data.len(),
        data.dim(),
        data.n_classes(),
        a.mode,
        config.c_neighbors,
        config.target_dim
    );
    if skipped > 0 {
        println!("skipped eigenvalue: {}", format_values(&model.eigenvalues()[..skipped]));
    }
    println!("retained eigenvalues: {}", format_values(&model.eigenvalues()[skipped..]));
    for w in model.diagnostics().warnings() {
        println!("warning: {w}");
    }
    println!("wrote {} (sha256 {})", a.out.display(), hex::encode(Sha256::digest(&bytes)));
    Ok(())
}

pub fn transform(a: &TransformArgs) -> CliResult<()> {
    let model = load_model(&a.model)?;
    let data = load(&a.data)?;
    let coords = model.transform(&data.to_matrix())?;
    let vectors: Vec<f32> = coords.transpose().iter().map(|&v| v as f32).collect();
    let mut out = LabeledEmbeddings::new(vectors, coords.ncols(), data.labels().to_vec(), data.n_classes())?;
    if let Some(names) = data.label_names() {
        out = out.with_label_names(names.to_vec())?;
    }
    if let Some(ids) = data.ids() {
        out = out.with_ids(ids.to_vec())?;
    }
    write_file(&a.out, &encode(&out, &a.out))?;
    println!("wrote {} ({} x {})", a.out.display(), out.len(), out.dim());
    Ok(())
}

pub fn classify(a: &ClassifyArgs) -> CliResult<()> {
    let model = load_model(&a.model)?;
    let data = load(&a.data)?;
    let report = lleinc::evaluate_reembedder(&model, &data, a.e as usize)?;
    let json = to_json(&report);
    match &a.out {
        Some(path) => {
            write_file(path, json.as_bytes())?;
            println!(
                "accuracy {:.4}, macro F1 {:.4} over {} points; wrote {}",
                report.accuracy.unwrap_or(f64::NAN),
                report.macro_f1.unwrap_or(f64::NAN),
                data.len(),
                path.display()
            );
        }
        None => print!("{json}"),
    }
    Ok(())
}
