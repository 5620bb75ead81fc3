#![allow(dead_code)]

use std::path::PathBuf;
use std::process::{Command, Output};

use mdpcg::Game;
use mdpcg_cli::gamefile::GameFile;
use serde_json::Value;

pub fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(name)
}

pub fn load(name: &str) -> Game {
    mdpcg_cli::commands::load(&fixture(name)).unwrap().spec
}

pub const FIXTURES: [&str; 5] = [
    "wheatstone.json",
    "wheatstone_interior.json",
    "fig2.json",
    "swap.json",
    "selfloop.json",
];

pub struct Run {
    pub code: i32,
    pub stdout: String,
    pub stderr: String,
}

impl Run {
    pub fn json(&self) -> Value {
        serde_json::from_str(&self.stdout).expect("stdout is JSON")
    }
}

pub fn mdpcg(args: &[&str]) -> Run {
    mdpcg_with_env(args, &[])
}

pub fn mdpcg_with_env(args: &[&str], env: &[(&str, &str)]) -> Run {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_mdpcg"));
    cmd.args(args);
    for (k, v) in env {
        cmd.env(k, v);
    }
    let Output { status, stdout, stderr } = cmd.output().expect("binary runs");
    Run {
        code: status.code().unwrap_or(-1),
        stdout: String::from_utf8(stdout).unwrap(),
        stderr: String::from_utf8(stderr).unwrap(),
    }
}

pub fn floats(v: &Value) -> Vec<f64> {
    v.as_array()
        .expect("array")
        .iter()
        .map(|x| x.as_f64().expect("number"))
        .collect()
}

pub fn game_file(spec: &Game) -> GameFile {
    GameFile::from_game(spec, &spec.zero_perturbation()).unwrap()
}

pub fn to_oracle(spec: &Game) -> mdpcg_testkit::AffineGame {
    let (slope, intercept) = match spec.costs() {
        mdpcg::CostModel::Affine { slope, intercept } => (slope.clone(), intercept.clone()),
        mdpcg::CostModel::General(_) => panic!("oracle games have affine costs"),
    };
    mdpcg_testkit::AffineGame {
        states: spec.num_states(),
        arcs: spec
            .hyperarcs()
            .iter()
            .map(|h| mdpcg_testkit::Arc {
                tail: h.tail,
                heads: h.heads.clone(),
            })
            .collect(),
        slope: slope.iter().copied().collect(),
        intercept: intercept.iter().copied().collect(),
        mass: spec.mass(),
    }
}
