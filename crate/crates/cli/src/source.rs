//! Protocol loading and initial configuration selection.

use std::sync::Arc;

use anyhow::{bail, Context, Result};
use crn_core::digraph::Mode;
use crn_core::format::parse_protocol;
use crn_core::model::Configuration;
use crn_core::predicate;
use crn_core::protocols::crd::crd_initial_family;
use crn_core::protocols::{registry, Expected, InitialFamily, ProtocolBundle, TargetFactory};

use crate::{InitArgs, Pick, SourceArgs};

/// Build the protocol named by exactly one source flag.
pub fn load(src: &SourceArgs) -> Result<ProtocolBundle> {
    if let Some(name) = &src.protocol {
        return Ok(registry(name)?);
    }
    if let Some(text) = &src.predicate {
        return Ok(predicate::compile(&predicate::parse(text)?)?);
    }
    let Some(path) = &src.file else {
        bail!("one of --protocol, --file or --predicate is required");
    };
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let doc = parse_protocol(&text)?;
    let name = path.file_stem().map_or_else(|| "file".to_string(), |s| s.to_string_lossy().into_owned());
    let target: TargetFactory = match &doc.interface {
        Some(i) => {
            let i = i.clone();
            Arc::new(move |c0: &Configuration| i.target(c0))
        }
        None => Arc::new(|_: &Configuration| Arc::new(|_: &Configuration| true)),
    };
    let sc = doc.crn.species_count();
    let initial: InitialFamily = match &doc.crd {
        Some(crd) => crd_initial_family(crd, sc),
        None => Arc::new(|_| Vec::new()),
    };
    let expected = Expected { mode: Mode::Halt, weak: true, strong: true, runtime: "unknown".into() };
    let mut bundle = ProtocolBundle::basic(name, "loaded from file", doc.crn, expected, target, initial);
    bundle.crd = doc.crd;
    bundle.interface = doc.interface;
    Ok(bundle)
}

/// Pick a member of a non-empty family.
pub fn pick(mut family: Vec<Configuration>, which: Pick) -> Option<Configuration> {
    if family.is_empty() {
        return None;
    }
    let i = match which {
        Pick::First => 0,
        Pick::Middle => family.len() / 2,
        Pick::Last => family.len() - 1,
    };
    Some(family.swap_remove(i))
}

/// The initial configuration selected by `--init`, `--input`/`--fuel` or `--n`.
pub fn initial(bundle: &ProtocolBundle, args: &InitArgs) -> Result<Configuration> {
    if let Some(text) = &args.init {
        return Ok(bundle.crn.parse_configuration(text)?);
    }
    if let Some(x) = &args.input {
        let crd = bundle.crd.as_ref().context("--input needs a decider protocol")?;
        if x.len() != crd.inputs.len() {
            bail!("--input has {} entries, the protocol has {} inputs", x.len(), crd.inputs.len());
        }
        return Ok(crd.initial(bundle.crn.species_count(), x, args.fuel));
    }
    if let Some(n) = args.n {
        return pick(bundle.initial_configs(n), args.pick)
            .with_context(|| format!("protocol {} has no valid initial configuration of size {n}", bundle.name));
    }
    bail!("give an initial configuration with --init, --input or --n")
}

/// A representative initial configuration of size `n` for sweeps.
///
/// Deciders split `n − ‖k‖ − 1` input molecules by `weights` (equal shares
/// by default) and add one fuel molecule; other protocols pick from their
/// initial family.
pub fn sweep_initial(bundle: &ProtocolBundle, n: u64, weights: Option<&[u32]>, which: Pick) -> Result<Configuration> {
    let Some(crd) = &bundle.crd else {
        return pick(bundle.initial_configs(n), which)
            .with_context(|| format!("protocol {} has no valid initial configuration of size {n}", bundle.name));
    };
    let k = crd.inputs.len();
    let context = crd.context.total() as u64;
    if n < context + 1 {
        bail!("n = {n} leaves no room for fuel");
    }
    let free = (n - context - 1) as u32;
    let w: Vec<u32> = match weights {
        Some(w) if w.len() == k && w.iter().any(|&v| v > 0) => w.to_vec(),
        Some(_) => bail!("--weights needs {k} entries, not all zero"),
        None => vec![1; k],
    };
    Ok(crd.initial(bundle.crn.species_count(), &split(free, &w), 1))
}

/// Split `total` proportionally to `w`, remainder to the first positive weights.
pub fn split(total: u32, w: &[u32]) -> Vec<u32> {
    let sum: u64 = w.iter().map(|&v| v as u64).sum();
    if sum == 0 {
        return vec![0; w.len()];
    }
    let mut x: Vec<u32> = w.iter().map(|&v| (total as u64 * v as u64 / sum) as u32).collect();
    let mut rest = total - x.iter().sum::<u32>();
    for i in (0..w.len()).cycle() {
        if rest == 0 {
            break;
        }
        if w[i] > 0 {
            x[i] += 1;
            rest -= 1;
        }
    }
    x
}

/// Parse an optional mode flag, defaulting to the protocol's own.
pub fn mode(bundle: &ProtocolBundle, flag: &Option<String>) -> Result<Mode> {
    Ok(match flag {
        Some(m) => m.parse()?,
        None => bundle.expected.mode,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn split_preserves_total() {
        assert_eq!(split(10, &[1, 1]), vec![5, 5]);
        assert_eq!(split(7, &[1, 2]), vec![3, 4]);
        assert_eq!(split(5, &[0, 1]), vec![0, 5]);
    }

    #[test]
    fn decider_sweep_config_has_one_fuel() {
        let b = registry("detection").unwrap();
        let c = sweep_initial(&b, 16, None, Pick::First).unwrap();
        assert_eq!(c.total(), 16);
        assert_eq!(c.get(b.crd.as_ref().unwrap().fuel), 1);
    }
}
