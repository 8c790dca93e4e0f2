// SPDX-License-Identifier: Apache-2.0

use std::collections::BTreeSet;
use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::diff::{label_models, pair_groups, DiffReport};
use crate::error::{Error, Result};
use crate::generator::{generate_all, Procedure};
use crate::metamodel::{load_metamodel, Metamodel};
use crate::model::{load_model, validate_conformance, Model};
use crate::template::load_template_dir;

pub const EXIT_OK: i32 = 0;
pub const EXIT_INPUT: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Parser, Debug)]
#[command(
    name = "confgen",
    version,
    about = "Generate network device configuration procedures from AsIs/ToBe models"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Check models against the metamodel and print every violation
    Validate {
        #[command(flatten)]
        common: Common,
        /// Model to check (repeatable)
        #[arg(long)]
        model: Vec<PathBuf>,
        #[arg(long)]
        asis: Option<PathBuf>,
        #[arg(long)]
        tobe: Option<PathBuf>,
    },
    /// Print the labeled difference between two models as JSON
    Diff {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        asis: PathBuf,
        #[arg(long)]
        tobe: PathBuf,
    },
    /// Write one `<hostname>.cfg` procedure per device
    Generate {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        asis: PathBuf,
        #[arg(long)]
        tobe: PathBuf,
        /// Directory of `<deviceModel>.csv` templates
        #[arg(long)]
        templates: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Args, Debug)]
struct Common {
    /// Metamodel JSON; the bundled network metamodel when omitted
    #[arg(long)]
    metamodel: Option<PathBuf>,
    /// Treat conformance violations as errors
    #[arg(long)]
    strict: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SubcommandKind {
    Validate,
    Diff,
    Generate,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RunConfig {
    pub subcommand: SubcommandKind,
    pub metamodel_path: Option<PathBuf>,
    pub model_paths: Vec<PathBuf>,
    pub asis_path: Option<PathBuf>,
    pub tobe_path: Option<PathBuf>,
    pub templates_dir: Option<PathBuf>,
    pub out_dir: Option<PathBuf>,
    pub strict: bool,
}

impl From<Cli> for RunConfig {
    fn from(cli: Cli) -> Self {
        let blank = |subcommand, common: Common| RunConfig {
            subcommand,
            metamodel_path: common.metamodel,
            model_paths: Vec::new(),
            asis_path: None,
            tobe_path: None,
            templates_dir: None,
            out_dir: None,
            strict: common.strict,
        };
        match cli.command {
            Command::Validate {
                common,
                model,
                asis,
                tobe,
            } => RunConfig {
                model_paths: model,
                asis_path: asis,
                tobe_path: tobe,
                ..blank(SubcommandKind::Validate, common)
            },
            Command::Diff { common, asis, tobe } => RunConfig {
                asis_path: Some(asis),
                tobe_path: Some(tobe),
                ..blank(SubcommandKind::Diff, common)
            },
            Command::Generate {
                common,
                asis,
                tobe,
                templates,
                out,
            } => RunConfig {
                asis_path: Some(asis),
                tobe_path: Some(tobe),
                templates_dir: Some(templates),
                out_dir: Some(out),
                ..blank(SubcommandKind::Generate, common)
            },
        }
    }
}

/// Runs the command line. Data goes to `stdout` (and files), diagnostics to
/// `stderr`. Returns the process exit code.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() {
                let _ = write!(stderr, "{e}");
                EXIT_USAGE
            } else {
                let _ = write!(stdout, "{e}");
                EXIT_OK
            };
            return code;
        }
    };
    let config = RunConfig::from(cli);
    match execute(&config, stdout, stderr) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            EXIT_INPUT
        }
    }
}

fn read(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.display().to_string(),
        source,
    })
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> Error + '_ {
    move |source| Error::Io {
        path: path.display().to_string(),
        source,
    }
}

fn metamodel(config: &RunConfig) -> Result<Metamodel> {
    match &config.metamodel_path {
        Some(p) => load_metamodel(&read(p)?),
        None => Ok(Metamodel::default_network()),
    }
}

fn model(path: &Path, mm: &Metamodel) -> Result<Model> {
    load_model(&read(path)?, mm).map_err(|e| match e {
        Error::Parse { what, message } => Error::Parse {
            what: format!("{what} {}", path.display()),
            message,
        },
        other => other,
    })
}

/// Reports violations on stderr. True when they should stop the run.
fn check(model: &Model, mm: &Metamodel, strict: bool, stderr: &mut dyn Write) -> bool {
    let violations = validate_conformance(model, mm);
    let level = if strict { "error" } else { "warning" };
    for v in &violations {
        let _ = writeln!(stderr, "{level}: {}: {v}", model.name);
    }
    strict && !violations.is_empty()
}

fn execute(config: &RunConfig, stdout: &mut dyn Write, stderr: &mut dyn Write) -> Result<i32> {
    let mm = metamodel(config)?;
    match config.subcommand {
        SubcommandKind::Validate => {
            let paths: Vec<&PathBuf> = config
                .model_paths
                .iter()
                .chain(&config.asis_path)
                .chain(&config.tobe_path)
                .collect();
            let mut clean = true;
            for p in paths {
                let m = model(p, &mm)?;
                for v in validate_conformance(&m, &mm) {
                    clean = false;
                    let _ = writeln!(stdout, "{}: {v}", p.display());
                }
            }
            Ok(if clean { EXIT_OK } else { EXIT_INPUT })
        }
        SubcommandKind::Diff => {
            let (asis, tobe) = pair_of_models(config, &mm)?;
            if check(&asis, &mm, config.strict, stderr) | check(&tobe, &mm, config.strict, stderr) {
                return Ok(EXIT_INPUT);
            }
            let pairing = pair_groups(&asis, &tobe)?;
            let (la, lt) = label_models(&asis, &tobe)?;
            let _ = writeln!(stdout, "{}", DiffReport::new(&pairing, &la, &lt).to_json());
            Ok(EXIT_OK)
        }
        SubcommandKind::Generate => {
            let (asis, tobe) = pair_of_models(config, &mm)?;
            if check(&asis, &mm, config.strict, stderr) | check(&tobe, &mm, config.strict, stderr) {
                return Ok(EXIT_INPUT);
            }
            let templates =
                load_template_dir(config.templates_dir.as_deref().expect("set by clap"))?;
            let procedures = generate_all(&asis, &tobe, &mm, &templates)?;
            let out = config.out_dir.as_deref().expect("set by clap");
            write_procedures(out, &procedures)?;
            let width = procedures
                .iter()
                .map(|p| p.device_name.len())
                .max()
                .unwrap_or(0)
                .max("DEVICE".len());
            let _ = writeln!(stdout, "{:<width$}  COMMANDS", "DEVICE");
            for p in &procedures {
                let _ = writeln!(stdout, "{:<width$}  {}", p.device_name, p.commands.len());
            }
            Ok(EXIT_OK)
        }
    }
}

fn pair_of_models(config: &RunConfig, mm: &Metamodel) -> Result<(Model, Model)> {
    let asis = model(config.asis_path.as_deref().expect("set by clap"), mm)?;
    let tobe = model(config.tobe_path.as_deref().expect("set by clap"), mm)?;
    Ok((asis, tobe))
}

/// Writes every procedure to a temporary file first and renames them into
/// place only once all writes succeeded.
pub fn write_procedures(out: &Path, procedures: &[Procedure]) -> Result<Vec<PathBuf>> {
    let mut names = BTreeSet::new();
    for p in procedures {
        let n = &p.device_name;
        if n.is_empty() || n.contains(['/', '\\']) || n == "." || n == ".." {
            return Err(Error::Generation {
                config: p.config_id.clone(),
                message: format!("device name {n:?} is not usable as a file name"),
            });
        }
        if !names.insert(n.as_str()) {
            return Err(Error::Generation {
                config: p.config_id.clone(),
                message: format!("two devices are named {n:?}"),
            });
        }
    }

    std::fs::create_dir_all(out).map_err(io_err(out))?;
    let mut staged = Vec::with_capacity(procedures.len());
    let result = (|| {
        for p in procedures {
            let tmp = out.join(format!(".{}.cfg.tmp", p.device_name));
            let dest = out.join(format!("{}.cfg", p.device_name));
            staged.push((tmp.clone(), dest));
            let mut f = std::fs::File::create(&tmp).map_err(io_err(&tmp))?;
            f.write_all(p.to_text().as_bytes()).map_err(io_err(&tmp))?;
            f.sync_all().map_err(io_err(&tmp))?;
        }
        for (tmp, dest) in &staged {
            std::fs::rename(tmp, dest).map_err(io_err(dest))?;
        }
        Ok(())
    })();
    if let Err(e) = result {
        for (tmp, _) in &staged {
            let _ = std::fs::remove_file(tmp);
        }
        return Err(e);
    }
    Ok(staged.into_iter().map(|(_, d)| d).collect())
}
