//! Asking the user to pick between readings.

use std::io::{BufRead, Write};

use arsparql::mapper::{CandidateRdfTriple, ChoiceContext, Chooser, MapError};

/// Invalid answers tolerated before the question is abandoned.
pub const MAX_ATTEMPTS: usize = 3;

/// Prints numbered candidates and reads a 1-based choice.
pub struct Prompter<'a, R, W> {
    input: &'a mut R,
    output: &'a mut W,
    /// Number of prompts shown so far.
    pub prompts: usize,
}

impl<'a, R: BufRead, W: Write> Prompter<'a, R, W> {
    pub fn new(input: &'a mut R, output: &'a mut W) -> Self {
        Prompter { input, output, prompts: 0 }
    }

    fn ask(&mut self, ctx: &ChoiceContext) -> std::io::Result<Option<usize>> {
        writeln!(self.output, "`{}` can be read in {} ways:", ctx.phrase, ctx.options.len())?;
        for (i, option) in ctx.options.iter().enumerate() {
            writeln!(self.output, "  {}. {option}", i + 1)?;
        }
        for attempt in 1..=MAX_ATTEMPTS {
            write!(self.output, "choose 1-{}: ", ctx.options.len())?;
            self.output.flush()?;
            let mut line = String::new();
            if self.input.read_line(&mut line)? == 0 {
                return Ok(None);
            }
            match line.trim().parse::<usize>() {
                Ok(n) if (1..=ctx.options.len()).contains(&n) => return Ok(Some(n - 1)),
                _ if attempt < MAX_ATTEMPTS => writeln!(self.output, "invalid choice `{}`", line.trim())?,
                _ => writeln!(self.output, "invalid choice `{}`, giving up", line.trim())?,
            }
        }
        Ok(None)
    }
}

impl<R: BufRead, W: Write> Chooser for Prompter<'_, R, W> {
    fn choose(&mut self, ctx: &ChoiceContext, _: &[CandidateRdfTriple]) -> Result<usize, MapError> {
        self.prompts += 1;
        match self.ask(ctx) {
            Ok(Some(i)) => Ok(i),
            _ => Err(MapError::ChoiceAborted { phrase: ctx.phrase.clone() }),
        }
    }
}
