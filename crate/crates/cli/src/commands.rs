//! One function per subcommand. Each returns the exit status and the text
//! for standard output.

use std::path::Path;

use treehom_core::hatldp::HatError;
use treehom_core::{
    decide_hom, decide_ldp, hom_image, linearize_checked, parse_term, Certificate, DecideError, DecideOptions,
    HomError, Wtah,
};

use crate::oracle::check_image;
use crate::workspace::Workspace;
use crate::{report, CliError, EXIT_ERROR, EXIT_NEGATIVE, EXIT_OK, EXIT_REJECTED};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Outcome {
    pub code: i32,
    pub stdout: String,
}

impl Outcome {
    fn new(code: i32, stdout: String) -> Self {
        Outcome { code, stdout }
    }
}

/// Where an image automaton comes from.
#[derive(Clone, Copy, Debug)]
pub enum Input<'a> {
    Image { wta: &'a Path, hom: &'a Path },
    Automaton(&'a Path),
}

impl Input<'_> {
    fn load(&self, ws: &mut Workspace) -> Result<Wtah, CliError> {
        match *self {
            Input::Image { wta, hom } => {
                let a = ws.load_wtg(wta)?;
                let h = ws.load_hom(hom)?;
                Workspace::check_pair(&a, &h)?;
                h.require_nondeleting_nonerasing()?;
                let a = if a.is_wta() { a } else { a.to_wta() };
                Ok(hom_image(&a, &h)?)
            }
            Input::Automaton(path) => ws.load_wtah(path),
        }
    }
}

/// Inputs outside the class the procedure handles, as opposed to malformed
/// ones.
pub fn is_rejection(e: &DecideError) -> bool {
    match e {
        DecideError::NotTetrisFree(_)
        | DecideError::TetrisUndetermined
        | DecideError::NotEqRestricted(_)
        | DecideError::UntiedSink { .. }
        | DecideError::HasLdp(_) => true,
        DecideError::Hom(h) => matches!(h, HomError::Erasing(_) | HomError::Deleting(_)),
        DecideError::Hat(h) => matches!(h, HatError::Preconditions(_) | HatError::Ambiguous(_)),
        _ => false,
    }
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Decide(e) if is_rejection(e) => EXIT_REJECTED,
            CliError::Hom(HomError::Erasing(_) | HomError::Deleting(_)) => EXIT_REJECTED,
            CliError::Hat(HatError::Preconditions(_) | HatError::Ambiguous(_)) => EXIT_REJECTED,
            _ => EXIT_ERROR,
        }
    }
}

fn write_file(path: &Path, text: &str) -> Result<(), CliError> {
    std::fs::write(path, text).map_err(|source| CliError::Io { path: path.into(), source })
}

pub fn decide(wta: &Path, hom: &Path, out: Option<&Path>, options: &DecideOptions) -> Result<Outcome, CliError> {
    let mut ws = Workspace::new();
    let a = ws.load_wtg(wta)?;
    let h = ws.load_hom(hom)?;
    Workspace::check_pair(&a, &h)?;
    if let Some(dir) = out {
        std::fs::create_dir_all(dir).map_err(|source| CliError::Io { path: dir.into(), source })?;
    }
    let decision = match decide_hom(&a, &h, options) {
        Ok(d) => d,
        Err(e) if is_rejection(&e) => {
            let text = report::rejection(&e);
            if let Some(dir) = out {
                write_file(&dir.join("report.txt"), &text)?;
            }
            return Ok(Outcome::new(EXIT_REJECTED, text));
        }
        Err(e) => return Err(e.into()),
    };
    let (code, certificate_text, file_name) = match &decision.certificate {
        Certificate::Grammar(g) => (EXIT_OK, format!("{g}\n"), "certificate.wtg"),
        Certificate::Ldp(_) => (EXIT_NEGATIVE, format!("{}\n", decision.image), "image.wtah"),
    };
    let text = match out {
        Some(dir) => {
            let path = dir.join(file_name);
            write_file(&path, &certificate_text)?;
            let text = report::decision(&decision, Some(&path.display().to_string()));
            write_file(&dir.join("report.txt"), &text)?;
            text
        }
        None => format!("{}[certificate]\n{certificate_text}", report::decision(&decision, None)),
    };
    Ok(Outcome::new(code, text))
}

pub fn eval(wtah: Option<&Path>, wtg: Option<&Path>, tree: &str) -> Result<Outcome, CliError> {
    let mut ws = Workspace::new();
    let bad = |message: String| CliError::BadTree { tree: tree.to_string(), message };
    let t = parse_term(tree).map_err(|e| bad(e.to_string()))?;
    if !t.is_ground() {
        return Err(bad("tree must be ground".into()));
    }
    let value = match (wtah, wtg) {
        (Some(path), None) => {
            let m = ws.load_wtah(path)?;
            t.check_ranked(m.alphabet()).map_err(|e| bad(e.to_string()))?;
            m.evaluate(&t)
        }
        (None, Some(path)) => {
            let g = ws.load_wtg(path)?;
            t.check_ranked(g.alphabet()).map_err(|e| bad(e.to_string()))?;
            g.evaluate(&t)
        }
        _ => return Err(CliError::Arguments("--wtah, --wtg")),
    };
    Ok(Outcome::new(EXIT_OK, format!("{value}\n")))
}

/// With `wtah`, checks that automaton instead of the constructed image.
pub fn oracle_image(wta: &Path, hom: &Path, wtah: Option<&Path>, max_height: usize) -> Result<Outcome, CliError> {
    let mut ws = Workspace::new();
    let a = ws.load_wtg(wta)?;
    let h = ws.load_hom(hom)?;
    Workspace::check_pair(&a, &h)?;
    h.require_nondeleting_nonerasing()?;
    let m = match wtah {
        Some(path) => ws.load_wtah(path)?,
        None => hom_image(&if a.is_wta() { a.clone() } else { a.to_wta() }, &h)?,
    };
    let result = check_image(&a, &h, &m, max_height)?;
    let code = if result.passed() { EXIT_OK } else { EXIT_NEGATIVE };
    Ok(Outcome::new(code, report::oracle(&result)))
}

pub fn tetris_free(hom: &Path, oracle_height: Option<usize>) -> Result<Outcome, CliError> {
    let h = Workspace::new().load_hom(hom)?;
    let check = h.is_tetris_free()?;
    let mut text = report::tetris(&check);
    if let Some(k) = oracle_height {
        let bounded = h.tetris_free_bounded_oracle(k)?;
        text.push_str(&format!(
            "oracle.height={k}\noracle.tetris_free={}\n",
            if bounded.tetris_free { "yes" } else { "no" }
        ));
        if bounded.tetris_free != check.tetris_free && check.conclusive {
            text.push_str("oracle.disagrees=yes\n");
            return Ok(Outcome::new(EXIT_ERROR, text));
        }
    }
    Ok(Outcome::new(EXIT_OK, text))
}

pub fn ldp(input: Input<'_>) -> Result<Outcome, CliError> {
    let m = input.load(&mut Workspace::new())?;
    let result = decide_ldp(&m)?;
    Ok(Outcome::new(EXIT_OK, report::ldp(&result)))
}

pub fn linearize(input: Input<'_>, cap: usize) -> Result<Outcome, CliError> {
    let m = input.load(&mut Workspace::new())?;
    match linearize_checked(&m, cap) {
        Ok(g) => Ok(Outcome::new(EXIT_OK, format!("{g}\n"))),
        Err(DecideError::HasLdp(w)) => {
            let mut text = String::from("LINEARIZE: impossible\n");
            report::witness_lines(&mut text, &w);
            Ok(Outcome::new(EXIT_NEGATIVE, text))
        }
        Err(e) => Err(e.into()),
    }
}
