//! Errors, scenario resolution and file emission shared by the subcommands.

use std::fmt;
use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use pseudospin::physics::Scenario;
use serde::Serialize;

#[derive(Debug)]
pub enum CliError {
    Core(pseudospin::Error),
    Io(PathBuf, io::Error),
    Usage(String),
    /// Verification ran but some identities failed.
    Verification(usize),
}

impl CliError {
    /// 2 validation, 3 numerical failure, 4 verification failure.
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Core(e) if e.is_validation() => 2,
            CliError::Core(_) => 3,
            CliError::Io(..) | CliError::Usage(_) => 2,
            CliError::Verification(_) => 4,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Core(e) => write!(f, "{e}"),
            CliError::Io(p, e) => write!(f, "{}: {e}", p.display()),
            CliError::Usage(m) => write!(f, "{m}"),
            CliError::Verification(n) => write!(f, "verification failed for {n} check(s)"),
        }
    }
}

impl From<pseudospin::Error> for CliError {
    fn from(e: pseudospin::Error) -> Self {
        CliError::Core(e)
    }
}

/// Scenario plus how it was referenced on the command line.
#[derive(Debug, Clone, Serialize)]
pub struct LoadedScenario {
    pub reference: String,
    pub scenario: Scenario,
}

/// Existing file paths win over preset names.
pub fn load_scenario(arg: &str) -> Result<LoadedScenario, CliError> {
    let path = Path::new(arg);
    if path.is_file() {
        let text = fs::read_to_string(path).map_err(|e| CliError::Io(path.into(), e))?;
        return Ok(LoadedScenario {
            reference: arg.to_string(),
            scenario: Scenario::from_toml(&text)?,
        });
    }
    Ok(LoadedScenario {
        reference: format!("preset:{arg}"),
        scenario: Scenario::preset(arg)?,
    })
}

/// Record of one invocation. Contains no clock or host data, so identical
/// invocations produce identical manifests.
#[derive(Debug, Serialize)]
pub struct RunManifest<'a, A: Serialize> {
    pub tool: &'static str,
    pub version: &'static str,
    pub subcommand: &'static str,
    pub scenario: Option<&'a LoadedScenario>,
    pub output_dir: String,
    pub deterministic: bool,
    pub arguments: &'a A,
    pub files: Vec<String>,
}

impl<'a, A: Serialize> RunManifest<'a, A> {
    pub fn new(subcommand: &'static str, out: &Path, scenario: Option<&'a LoadedScenario>, arguments: &'a A) -> Self {
        Self {
            tool: env!("CARGO_PKG_NAME"),
            version: env!("CARGO_PKG_VERSION"),
            subcommand,
            scenario,
            output_dir: out.display().to_string(),
            deterministic: true,
            arguments,
            files: Vec::new(),
        }
    }
}

pub struct OutDir {
    root: PathBuf,
    pub written: Vec<String>,
}

impl OutDir {
    pub fn create(root: &Path) -> Result<Self, CliError> {
        fs::create_dir_all(root).map_err(|e| CliError::Io(root.into(), e))?;
        Ok(Self {
            root: root.to_path_buf(),
            written: Vec::new(),
        })
    }

    /// Write through a buffered writer; `f` must flush.
    pub fn write_with<F>(&mut self, name: &str, f: F) -> Result<(), CliError>
    where
        F: FnOnce(&mut BufWriter<File>) -> io::Result<()>,
    {
        let path = self.root.join(name);
        let file = File::create(&path).map_err(|e| CliError::Io(path.clone(), e))?;
        let mut w = BufWriter::new(file);
        f(&mut w).and_then(|_| w.flush()).map_err(|e| CliError::Io(path, e))?;
        self.written.push(name.to_string());
        Ok(())
    }

    pub fn write_json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<(), CliError> {
        self.write_with(name, |w| {
            serde_json::to_writer_pretty(&mut *w, value)?;
            writeln!(w)
        })
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.root.join(name)
    }

    pub fn finish<A: Serialize>(mut self, mut manifest: RunManifest<'_, A>) -> Result<(), CliError> {
        manifest.files = self.written.clone();
        self.write_json("manifest.json", &manifest)
    }
}
