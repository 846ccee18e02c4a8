//! Text bisimulation game: the user plays Spoiler, the engine plays Duplicator.

use anyhow::Result;
use epistemia::bisim::{pair_levels, Mode};
use epistemia::kripke::{coset, CKStructure, World};
use std::io::{BufRead, Write};

const HELP: &str = "moves: <left|right> <agents> <world>, e.g. `left a,b 3`; `state`; `quit`";

/// Play up to `rounds` rounds from `(w, v)`. Moves and outcomes are appended to `log`.
pub fn play(m: &CKStructure, n: &CKStructure, mut w: World, mut v: World, rounds: usize, input: &mut dyn BufRead, out: &mut dyn Write, log: &mut Vec<String>) -> Result<()> {
    let levels = pair_levels(m, n, rounds, Mode::CK)?;
    // Label of `∼^r` for a pair, with levels past stabilisation equal to the last one.
    let same = |w: World, v: World, r: usize| {
        let l = &levels[r.min(levels.len() - 1)];
        l[w] == l[m.n() + v]
    };
    writeln!(out, "{HELP}")?;
    if !same(w, v, 0) {
        let msg = format!("engine loses: worlds {w} and {v} differ on atoms");
        writeln!(out, "{msg}")?;
        log.push(msg);
        return Ok(());
    }
    let mut left = rounds;
    let mut line = String::new();
    while left > 0 {
        write!(out, "[{w} | {v}] {left} round(s) left> ")?;
        out.flush()?;
        line.clear();
        if input.read_line(&mut line)? == 0 {
            break;
        }
        let words: Vec<&str> = line.split_whitespace().collect();
        match words.as_slice() {
            [] => continue,
            ["quit"] | ["q"] => break,
            ["state"] => {
                writeln!(out, "left {w}, right {v}, {left} round(s) left")?;
                continue;
            }
            ["help"] => {
                writeln!(out, "{HELP}")?;
                continue;
            }
            [side, agents, world] => {
                let on_left = match *side {
                    "left" | "l" => true,
                    "right" | "r" => false,
                    _ => {
                        writeln!(out, "side must be left or right")?;
                        continue;
                    }
                };
                let alpha = match crate::coalition(m, agents) {
                    Ok(a) => a,
                    Err(e) => {
                        writeln!(out, "{e}")?;
                        continue;
                    }
                };
                let Ok(to) = world.parse::<World>() else {
                    writeln!(out, "bad world '{world}'")?;
                    continue;
                };
                let (here, there, from, reply_from) = if on_left { (m, n, w, v) } else { (n, m, v, w) };
                if to >= here.n() || !here.same_class(from, to, alpha) {
                    writeln!(out, "{to} is not in the {} class of {from}", alpha.names(here.agents()))?;
                    continue;
                }
                // Prefer a reply that keeps the remaining rounds winnable, then one that only matches atoms.
                let pick = |r: usize| {
                    coset(there, reply_from, alpha)
                        .iter()
                        .copied()
                        .find(|&y| if on_left { same(to, y, r) } else { same(y, to, r) })
                };
                let reply = pick(left - 1).or_else(|| pick(0));
                left -= 1;
                let side_name = if on_left { "left" } else { "right" };
                match reply {
                    Some(y) => {
                        let msg = format!("spoiler {side_name} {} {to}; duplicator {y}", alpha.names(here.agents()));
                        writeln!(out, "{msg}")?;
                        log.push(msg);
                        if on_left {
                            (w, v) = (to, y);
                        } else {
                            (w, v) = (y, to);
                        }
                    }
                    None => {
                        let msg = format!("spoiler {side_name} {} {to}; engine loses: no reply with matching atoms", alpha.names(here.agents()));
                        writeln!(out, "{msg}")?;
                        log.push(msg);
                        return Ok(());
                    }
                }
            }
            _ => {
                writeln!(out, "{HELP}")?;
                continue;
            }
        }
    }
    if left > 0 {
        writeln!(out)?;
    } else {
        let msg = format!("engine survives all {rounds} round(s)");
        writeln!(out, "{msg}")?;
        log.push(msg);
    }
    Ok(())
}
