use std::fmt::Write as _;
use std::path::Path;

use thiserror::Error;

use crate::nets::{Mlp, MlpGrads};
use crate::{AgentConfig, AgentNets};

#[derive(Debug, Error)]
pub enum CheckpointError {
    #[error("io: {0}")]
    Io(String),
    #[error("incompatible checkpoint: {0}")]
    Incompatible(String),
    #[error("malformed checkpoint: {0}")]
    Malformed(String),
}

const MAGIC: &str = "srl-agent-checkpoint v1";

fn push_floats(out: &mut String, label: &str, values: impl Iterator<Item = f64>) {
    out.push_str(label);
    for v in values {
        write!(out, " {:016x}", v.to_bits()).unwrap();
    }
    out.push('\n');
}

fn net_floats(net: &Mlp) -> impl Iterator<Item = f64> + '_ {
    net.layers
        .iter()
        .flat_map(|l| l.w.iter().copied().chain(l.b.iter().copied()))
}

fn grads_floats(g: &MlpGrads) -> impl Iterator<Item = f64> + '_ {
    g.layers
        .iter()
        .flat_map(|l| l.w.iter().copied().chain(l.b.iter().copied()))
}

/// Serializes every network and optimizer-state parameter as exact bit
/// patterns; loading reproduces actions bit-for-bit.
pub fn save_checkpoint(
    nets: &AgentNets,
    buffer_len: usize,
    buffer_capacity: usize,
    path: &Path,
) -> Result<(), CheckpointError> {
    let mut out = String::new();
    out.push_str(MAGIC);
    out.push('\n');
    writeln!(
        out,
        "hidden {} train_steps {} buffer_len {} buffer_capacity {}",
        nets.cfg.hidden, nets.train_steps, buffer_len, buffer_capacity
    )
    .unwrap();
    push_floats(&mut out, "action_scale", nets.action_scale.iter().copied());
    push_floats(&mut out, "actor", net_floats(&nets.actor));
    push_floats(&mut out, "critic", net_floats(&nets.critic));
    push_floats(&mut out, "actor_target", net_floats(&nets.actor_target));
    push_floats(&mut out, "critic_target", net_floats(&nets.critic_target));
    let (actor_opt, critic_opt) = nets.optimizers();
    writeln!(out, "adam_t {} {}", actor_opt.t, critic_opt.t).unwrap();
    push_floats(&mut out, "adam_actor_m", grads_floats(&actor_opt.m));
    push_floats(&mut out, "adam_actor_v", grads_floats(&actor_opt.v));
    push_floats(&mut out, "adam_critic_m", grads_floats(&critic_opt.m));
    push_floats(&mut out, "adam_critic_v", grads_floats(&critic_opt.v));
    std::fs::write(path, out).map_err(|e| CheckpointError::Io(e.to_string()))
}

fn parse_floats(line: &str, label: &str, expect: usize) -> Result<Vec<f64>, CheckpointError> {
    let mut it = line.split_whitespace();
    let got = it
        .next()
        .ok_or_else(|| CheckpointError::Malformed("empty line".into()))?;
    if got != label {
        return Err(CheckpointError::Malformed(format!(
            "expected section '{label}', found '{got}'"
        )));
    }
    let vals: Result<Vec<f64>, _> = it
        .map(|tok| u64::from_str_radix(tok, 16).map(f64::from_bits))
        .collect();
    let vals = vals.map_err(|e| CheckpointError::Malformed(format!("bad float bits: {e}")))?;
    if vals.len() != expect {
        return Err(CheckpointError::Malformed(format!(
            "section '{label}' has {} values, expected {expect}",
            vals.len()
        )));
    }
    Ok(vals)
}

fn fill_net(net: &mut Mlp, vals: &[f64]) {
    let mut k = 0;
    for l in &mut net.layers {
        for x in l.w.iter_mut() {
            *x = vals[k];
            k += 1;
        }
        for x in l.b.iter_mut() {
            *x = vals[k];
            k += 1;
        }
    }
}

fn fill_grads(g: &mut MlpGrads, vals: &[f64]) {
    let mut k = 0;
    for l in &mut g.layers {
        for x in l.w.iter_mut() {
            *x = vals[k];
            k += 1;
        }
        for x in l.b.iter_mut() {
            *x = vals[k];
            k += 1;
        }
    }
}

fn param_count(net: &Mlp) -> usize {
    net.layers
        .iter()
        .map(|l| l.w.len() + l.b.len())
        .sum::<usize>()
}

struct Cursor<'a> {
    lines: Vec<&'a str>,
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn next(&mut self, what: &str) -> Result<&'a str, CheckpointError> {
        let line = self
            .lines
            .get(self.pos)
            .ok_or_else(|| CheckpointError::Malformed(format!("missing section '{what}'")))?;
        self.pos += 1;
        Ok(line)
    }
}

/// Loads a checkpoint into freshly constructed networks.
///
/// Refuses files whose version line or layer sizes do not match.
pub fn load_checkpoint(
    cfg: &AgentConfig,
    path: &Path,
) -> Result<(AgentNets, usize, usize), CheckpointError> {
    let text = std::fs::read_to_string(path).map_err(|e| CheckpointError::Io(e.to_string()))?;
    let mut lines = text.lines();
    let magic = lines
        .next()
        .ok_or_else(|| CheckpointError::Malformed("empty file".into()))?;
    if magic != MAGIC {
        return Err(CheckpointError::Incompatible(format!(
            "version line '{magic}' does not match '{MAGIC}'"
        )));
    }
    let header = lines
        .next()
        .ok_or_else(|| CheckpointError::Malformed("missing header".into()))?;
    let toks: Vec<&str> = header.split_whitespace().collect();
    if toks.len() != 8 || toks[0] != "hidden" {
        return Err(CheckpointError::Malformed("bad header".into()));
    }
    let hidden: usize = toks[1]
        .parse()
        .map_err(|_| CheckpointError::Malformed("bad hidden".into()))?;
    if hidden != cfg.hidden {
        return Err(CheckpointError::Incompatible(format!(
            "hidden size {hidden} does not match configured {}",
            cfg.hidden
        )));
    }
    let train_steps: u64 = toks[3]
        .parse()
        .map_err(|_| CheckpointError::Malformed("bad train_steps".into()))?;
    let buffer_len: usize = toks[5]
        .parse()
        .map_err(|_| CheckpointError::Malformed("bad buffer_len".into()))?;
    let buffer_capacity: usize = toks[7]
        .parse()
        .map_err(|_| CheckpointError::Malformed("bad buffer_capacity".into()))?;

    let mut cursor = Cursor {
        lines: lines.collect(),
        pos: 0,
    };

    let scale_vals = parse_floats(cursor.next("action_scale")?, "action_scale", 6)?;
    let scale = srl_core::ActionVec::from_iterator(scale_vals.iter().copied());
    let mut nets = AgentNets::new(cfg.clone(), scale, 0);
    nets.train_steps = train_steps;

    let n_actor = param_count(&nets.actor);
    let n_critic = param_count(&nets.critic);
    fill_net(
        &mut nets.actor,
        &parse_floats(cursor.next("actor")?, "actor", n_actor)?,
    );
    fill_net(
        &mut nets.critic,
        &parse_floats(cursor.next("critic")?, "critic", n_critic)?,
    );
    fill_net(
        &mut nets.actor_target,
        &parse_floats(cursor.next("actor_target")?, "actor_target", n_actor)?,
    );
    fill_net(
        &mut nets.critic_target,
        &parse_floats(cursor.next("critic_target")?, "critic_target", n_critic)?,
    );

    let adam_line = cursor.next("adam_t")?;
    let t_toks: Vec<&str> = adam_line.split_whitespace().collect();
    if t_toks.len() != 3 || t_toks[0] != "adam_t" {
        return Err(CheckpointError::Malformed("bad adam_t".into()));
    }
    let (t_actor, t_critic): (u64, u64) = (
        t_toks[1]
            .parse()
            .map_err(|_| CheckpointError::Malformed("bad adam t".into()))?,
        t_toks[2]
            .parse()
            .map_err(|_| CheckpointError::Malformed("bad adam t".into()))?,
    );
    let am = parse_floats(cursor.next("adam_actor_m")?, "adam_actor_m", n_actor)?;
    let av = parse_floats(cursor.next("adam_actor_v")?, "adam_actor_v", n_actor)?;
    let cm = parse_floats(cursor.next("adam_critic_m")?, "adam_critic_m", n_critic)?;
    let cv = parse_floats(cursor.next("adam_critic_v")?, "adam_critic_v", n_critic)?;
    {
        let (actor_opt, critic_opt) = nets.optimizers_mut();
        actor_opt.t = t_actor;
        critic_opt.t = t_critic;
        fill_grads(&mut actor_opt.m, &am);
        fill_grads(&mut actor_opt.v, &av);
        fill_grads(&mut critic_opt.m, &cm);
        fill_grads(&mut critic_opt.v, &cv);
    }
    Ok((nets, buffer_len, buffer_capacity))
}
